//! Backward elimination over a candidate pool.
//!
//! Each step tries removing every surviving candidate, re-assigns the target
//! bank to what is left and scores the result; the removal with the highest
//! score is committed (lowest candidate index on ties). The recorded curve of
//! score against remaining count is what [`elbow_index`] inspects.
//!
//! Scores come from an [`Objective`]: the built-in intrinsic objective is the
//! negated total squared residual of the best assignment, external
//! objectives are any [`Evaluator`], typically a [`CommandEvaluator`]
//! running a model evaluation out of process.

use std::io::{Read, Write};
use std::path::Path;
use std::process::Command;

use crate::error::{Error, Result};
use crate::filterbank::{save_bank, BankFormat, FilterBank};
use crate::linfit::{fit_batched, save_assignment, Assignment, FitMatrix};
use crate::manifold::{around_codes, decode, uniform_codes, AutoencoderModel};
use crate::numfmt;

/// Scores a reduced candidate set together with the assignment of the
/// targets onto it. Higher is better.
pub trait Evaluator {
    fn evaluate(&mut self, candidates: &FilterBank, assignment: &Assignment) -> Result<f64>;
}

impl<F> Evaluator for F
where
    F: FnMut(&FilterBank, &Assignment) -> Result<f64>,
{
    fn evaluate(&mut self, candidates: &FilterBank, assignment: &Assignment) -> Result<f64> {
        self(candidates, assignment)
    }
}

/// Runs a shell command as `<command> <candidates.mkfb> <assignment.csv>`
/// and reads the score from the first line of its standard output.
#[derive(Clone, Debug)]
pub struct CommandEvaluator {
    command: String,
}

impl CommandEvaluator {
    pub fn new(command: impl Into<String>) -> Self {
        CommandEvaluator {
            command: command.into(),
        }
    }
}

impl Evaluator for CommandEvaluator {
    fn evaluate(&mut self, candidates: &FilterBank, assignment: &Assignment) -> Result<f64> {
        let dir = tempfile::tempdir().map_err(|e| Error::io(std::env::temp_dir(), e))?;
        let cand_path = dir.path().join("candidates.mkfb");
        let assign_path = dir.path().join("assignment.csv");
        save_bank(candidates, &cand_path, BankFormat::Binary)?;
        save_assignment(assignment, &assign_path)?;
        let output = Command::new("sh")
            .arg("-c")
            .arg(format!("{} \"$@\"", self.command))
            .arg("masterkey-evaluator")
            .arg(&cand_path)
            .arg(&assign_path)
            .output()
            .map_err(|e| Error::EvaluatorFailure(format!("could not start {:?}: {e}", self.command)))?;
        if !output.status.success() {
            return Err(Error::EvaluatorFailure(format!(
                "{:?} exited with {}: {}",
                self.command,
                output.status,
                String::from_utf8_lossy(&output.stderr).trim()
            )));
        }
        let stdout = String::from_utf8_lossy(&output.stdout);
        let line = stdout.lines().next().unwrap_or("").trim();
        line.parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| Error::EvaluatorFailure(format!("unparsable evaluator output {line:?}")))
    }
}

pub enum Objective {
    /// `-(sum of squared assignment residuals)`.
    IntrinsicResidual,
    External(Box<dyn Evaluator>),
}

impl Objective {
    pub fn command(command: impl Into<String>) -> Self {
        Objective::External(Box::new(CommandEvaluator::new(command)))
    }

    pub fn custom(evaluator: impl Evaluator + 'static) -> Self {
        Objective::External(Box::new(evaluator))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceStep {
    pub removed_candidate: usize,
    pub remaining_count: usize,
    pub objective: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GreedyTrace {
    pub initial_count: usize,
    pub initial_objective: f64,
    pub steps: Vec<TraceStep>,
    /// Surviving candidate indices, ascending.
    pub survivors: Vec<usize>,
}

impl GreedyTrace {
    pub fn final_objective(&self) -> f64 {
        self.steps.last().map_or(self.initial_objective, |s| s.objective)
    }

    /// Candidate indices in removal order.
    pub fn removal_order(&self) -> Vec<usize> {
        self.steps.iter().map(|s| s.removed_candidate).collect()
    }
}

/// Restricted assignment whose candidate indices point into the reduced
/// bank `alive` describes.
fn reduced_assignment(
    matrix: &FitMatrix,
    targets: &FilterBank,
    candidates: &FilterBank,
    alive: &[usize],
) -> Result<(FilterBank, Assignment)> {
    let reduced = candidates.subset(alive)?;
    let mut position = vec![usize::MAX; candidates.len()];
    for (i, &p) in alive.iter().enumerate() {
        position[p] = i;
    }
    let mut assignment = Assignment::from_matrix_restricted(
        matrix,
        targets,
        Some(reduced.content_hash()),
        |p| position[p] != usize::MAX,
    )?;
    for e in &mut assignment.entries {
        e.fit.candidate_index = position[e.fit.candidate_index];
    }
    Ok((reduced, assignment))
}

/// For every target, its best and second-best alive candidate.
fn top_two(matrix: &FitMatrix, alive: &[bool]) -> Vec<(usize, Option<usize>)> {
    (0..matrix.targets())
        .map(|c| {
            let best = matrix.best_for(c, |p| alive[p]).expect("at least one alive candidate");
            let second = matrix.best_for(c, |p| alive[p] && p != best);
            (best, second)
        })
        .collect()
}

/// Negated total squared residual when `removed` is taken out. Summation runs
/// over targets in order, exactly as a fresh assignment would.
fn intrinsic_without(matrix: &FitMatrix, tops: &[(usize, Option<usize>)], removed: Option<usize>) -> f64 {
    let mut total = 0.0;
    for (c, &(best, second)) in tops.iter().enumerate() {
        let p = if Some(best) == removed {
            second.expect("removal leaves a candidate")
        } else {
            best
        };
        let r = matrix.residual(p, c);
        total += r * r;
    }
    -total
}

pub fn greedy_eliminate(
    targets: &FilterBank,
    candidates: &FilterBank,
    objective: &mut Objective,
    stop_at: usize,
) -> Result<GreedyTrace> {
    if candidates.is_empty() {
        return Err(Error::EmptyCandidates);
    }
    if stop_at == 0 || stop_at > candidates.len() {
        return Err(Error::InvalidArgument(format!(
            "stop_at must be in 1..={}, got {stop_at}",
            candidates.len()
        )));
    }
    let matrix = fit_batched(candidates, targets)?;
    let mut alive = vec![true; candidates.len()];
    let alive_list = |alive: &[bool]| -> Vec<usize> { (0..alive.len()).filter(|&p| alive[p]).collect() };

    let mut score = |alive: &[bool], removed: Option<usize>, tops: &[(usize, Option<usize>)]| -> Result<f64> {
        match objective {
            Objective::IntrinsicResidual => Ok(intrinsic_without(&matrix, tops, removed)),
            Objective::External(evaluator) => {
                let kept: Vec<usize> = alive_list(alive).into_iter().filter(|&p| Some(p) != removed).collect();
                let (reduced, assignment) = reduced_assignment(&matrix, targets, candidates, &kept)?;
                evaluator.evaluate(&reduced, &assignment)
            }
        }
    };

    let tops = top_two(&matrix, &alive);
    let initial_objective = score(&alive, None, &tops)?;
    let mut steps = Vec::new();
    let mut remaining = candidates.len();
    while remaining > stop_at {
        let tops = top_two(&matrix, &alive);
        let mut best: Option<(usize, f64)> = None;
        for p in alive_list(&alive) {
            let value = score(&alive, Some(p), &tops)?;
            if best.is_none_or(|(_, v)| value > v) {
                best = Some((p, value));
            }
        }
        let (removed, value) = best.expect("more than one candidate alive");
        alive[removed] = false;
        remaining -= 1;
        steps.push(TraceStep {
            removed_candidate: removed,
            remaining_count: remaining,
            objective: value,
        });
    }
    Ok(GreedyTrace {
        initial_count: candidates.len(),
        initial_objective,
        steps,
        survivors: alive_list(&alive),
    })
}

/// Remaining count at the knee of the curve: the count just before the
/// first removal that pushes the objective below
/// `initial - drop_fraction * |initial - final|`.
///
/// A flat curve yields [`Error::DegenerateTrace`] carrying the final
/// remaining count as fallback.
pub fn elbow_index(trace: &GreedyTrace, drop_fraction: f64) -> Result<usize> {
    if !(drop_fraction > 0.0 && drop_fraction < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "drop_fraction must be in (0, 1), got {drop_fraction}"
        )));
    }
    let stop_at = trace.steps.last().map_or(trace.initial_count, |s| s.remaining_count);
    let span = (trace.initial_objective - trace.final_objective()).abs();
    let scale = trace.initial_objective.abs().max(trace.final_objective().abs()).max(1.0);
    if trace.steps.is_empty() || span <= 1e-12 * scale {
        return Err(Error::DegenerateTrace { stop_at });
    }
    let threshold = trace.initial_objective - drop_fraction * span;
    trace
        .steps
        .iter()
        .find(|s| s.objective < threshold)
        .map(|s| s.remaining_count + 1)
        .ok_or(Error::DegenerateTrace { stop_at })
}

pub const DEFAULT_DROP_FRACTION: f64 = 0.01;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TwoRoundConfig {
    pub round1_n: usize,
    pub keep_top: usize,
    pub per_center: usize,
    /// Neighbour spacing; half a round-one grid cell when `None`.
    pub delta: Option<f64>,
    pub stop_at: usize,
}

impl Default for TwoRoundConfig {
    fn default() -> Self {
        TwoRoundConfig {
            round1_n: 50,
            keep_top: 10,
            per_center: 4,
            delta: None,
            stop_at: 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TwoRoundResult {
    pub round1: GreedyTrace,
    pub round1_codes: Vec<f64>,
    pub round2: GreedyTrace,
    /// Codes of the round-two pool, indexed like `round2`'s candidates.
    pub round2_codes: Vec<f64>,
    pub survivor_codes: Vec<f64>,
    pub survivors: FilterBank,
}

fn decode_all(model: &AutoencoderModel, codes: &[f64]) -> Result<FilterBank> {
    let filters = codes.iter().map(|&c| decode(model, c)).collect::<Result<Vec<_>>>()?;
    FilterBank::from_filters(model.k(), filters)
}

/// Uniform sampling and elimination down to `keep_top`, then a second
/// elimination over the survivors plus their code-space neighbours.
pub fn two_round_search(
    targets: &FilterBank,
    model: &AutoencoderModel,
    config: &TwoRoundConfig,
    objective: &mut Objective,
) -> Result<TwoRoundResult> {
    if config.keep_top == 0 || config.keep_top > config.round1_n {
        return Err(Error::InvalidArgument(format!(
            "keep_top must be in 1..={}, got {}",
            config.round1_n, config.keep_top
        )));
    }
    let round1_codes = uniform_codes(config.round1_n)?;
    let pool1 = decode_all(model, &round1_codes)?;
    let round1 = greedy_eliminate(targets, &pool1, objective, config.keep_top)?;

    let kept: Vec<f64> = round1.survivors.iter().map(|&i| round1_codes[i]).collect();
    let delta = config.delta.unwrap_or(1.0 / (2.0 * (config.round1_n - 1) as f64));
    let mut round2_codes = kept.clone();
    for code in around_codes(&kept, config.per_center, delta)? {
        if !round2_codes.contains(&code) {
            round2_codes.push(code);
        }
    }
    let pool2 = decode_all(model, &round2_codes)?;
    let stop_at = config.stop_at.min(pool2.len());
    let round2 = greedy_eliminate(targets, &pool2, objective, stop_at)?;
    let survivor_codes: Vec<f64> = round2.survivors.iter().map(|&i| round2_codes[i]).collect();
    let survivors = pool2.subset(&round2.survivors)?;
    Ok(TwoRoundResult {
        round1,
        round1_codes,
        round2,
        round2_codes,
        survivor_codes,
        survivors,
    })
}

pub const TRACE_HEADER: [&str; 4] = ["step", "removed_candidate", "remaining_count", "objective"];

/// Step 0 carries the initial objective and an empty `removed_candidate`.
pub fn write_trace_csv<W: Write>(trace: &GreedyTrace, writer: W) -> Result<()> {
    let wrap = |e: csv::Error| Error::parse("trace CSV", e);
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(TRACE_HEADER).map_err(wrap)?;
    w.write_record([
        "0".to_string(),
        String::new(),
        trace.initial_count.to_string(),
        numfmt::sig(trace.initial_objective, 17),
    ])
    .map_err(wrap)?;
    for (i, s) in trace.steps.iter().enumerate() {
        w.write_record([
            (i + 1).to_string(),
            s.removed_candidate.to_string(),
            s.remaining_count.to_string(),
            numfmt::sig(s.objective, 17),
        ])
        .map_err(wrap)?;
    }
    w.flush().map_err(|e| Error::parse("trace CSV", e))
}

pub fn read_trace_csv<R: Read>(reader: R) -> Result<GreedyTrace> {
    let bad = |m: String| Error::parse("trace CSV", m);
    let mut r = csv::Reader::from_reader(reader);
    let headers = r.headers().map_err(|e| bad(e.to_string()))?.clone();
    if headers.iter().ne(TRACE_HEADER) {
        return Err(bad(format!("unexpected header {:?}", headers.iter().collect::<Vec<_>>())));
    }
    let mut rows = Vec::new();
    for record in r.records() {
        let record = record.map_err(|e| bad(e.to_string()))?;
        let removed = record.get(1).unwrap_or("");
        let removed = if removed.is_empty() {
            None
        } else {
            Some(removed.parse::<usize>().map_err(|e| bad(e.to_string()))?)
        };
        let remaining = record
            .get(2)
            .unwrap_or("")
            .parse::<usize>()
            .map_err(|e| bad(e.to_string()))?;
        let objective = record
            .get(3)
            .unwrap_or("")
            .parse::<f64>()
            .map_err(|e| bad(e.to_string()))?;
        rows.push((removed, remaining, objective));
    }
    let (first, rest) = rows.split_first().ok_or_else(|| bad("no rows".into()))?;
    if first.0.is_some() {
        return Err(bad("first row must be the initial state".into()));
    }
    let steps = rest
        .iter()
        .map(|&(removed, remaining_count, objective)| {
            Ok(TraceStep {
                removed_candidate: removed.ok_or_else(|| bad("missing removed_candidate".into()))?,
                remaining_count,
                objective,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut survivors: Vec<usize> = (0..first.1).collect();
    survivors.retain(|p| !steps.iter().any(|s| s.removed_candidate == *p));
    Ok(GreedyTrace {
        initial_count: first.1,
        initial_objective: first.2,
        steps,
        survivors,
    })
}

pub fn save_trace(trace: &GreedyTrace, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_trace_csv(trace, std::io::BufWriter::new(file))
}

pub fn load_trace(path: impl AsRef<Path>) -> Result<GreedyTrace> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_trace_csv(std::io::BufReader::new(file))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filterbank::Filter;
    use crate::linfit::assign_best;
    use crate::synth::{noisy_shifts, orthogonal_generators, random_bank, rng, ShiftRanges};

    fn step_trace(objectives: &[f64]) -> GreedyTrace {
        let n = objectives.len();
        GreedyTrace {
            initial_count: n,
            initial_objective: objectives[0],
            steps: objectives[1..]
                .iter()
                .enumerate()
                .map(|(i, &objective)| TraceStep {
                    removed_candidate: i,
                    remaining_count: n - 1 - i,
                    objective,
                })
                .collect(),
            survivors: vec![n - 1],
        }
    }

    #[test]
    fn exact_span_stops_immediately() {
        let x = Filter::from_fn(5, |r, c| (r as f64 - 2.0) * (c as f64 + 1.0)).unwrap();
        let shift = |a: f64, b: f64| Filter::new(5, x.values().iter().map(|v| a * v + b).collect()).unwrap();
        let candidates = FilterBank::from_filters(5, [x.clone()]).unwrap();
        let targets = FilterBank::from_filters(5, [shift(2.0, 3.0), shift(-1.0, 1.0)]).unwrap();
        let trace = greedy_eliminate(&targets, &candidates, &mut Objective::IntrinsicResidual, 1).unwrap();
        assert!(trace.steps.is_empty());
        assert!(trace.initial_objective.abs() < 1e-18);
        assert_eq!(trace.survivors, vec![0]);
    }

    #[test]
    fn rejects_bad_inputs() {
        let targets = random_bank(3, 5, &mut rng(1)).unwrap();
        let empty = FilterBank::new(5).unwrap();
        assert!(matches!(
            greedy_eliminate(&targets, &empty, &mut Objective::IntrinsicResidual, 1),
            Err(Error::EmptyCandidates)
        ));
        let candidates = random_bank(2, 5, &mut rng(2)).unwrap();
        assert!(greedy_eliminate(&targets, &candidates, &mut Objective::IntrinsicResidual, 3).is_err());
        assert!(greedy_eliminate(&targets, &candidates, &mut Objective::IntrinsicResidual, 0).is_err());
    }

    /// Brute force over all 3-subsets of a 5-candidate pool.
    fn best_subset(targets: &FilterBank, candidates: &FilterBank) -> Vec<usize> {
        let mut best: Option<(f64, Vec<usize>)> = None;
        for i in 0..5 {
            for j in i + 1..5 {
                for k in j + 1..5 {
                    let subset = vec![i, j, k];
                    let sse = assign_best(&candidates.subset(&subset).unwrap(), targets)
                        .unwrap()
                        .total_squared_residual();
                    if best.as_ref().is_none_or(|(b, _)| sse < *b) {
                        best = Some((sse, subset));
                    }
                }
            }
        }
        best.unwrap().1
    }

    #[test]
    fn decoys_go_first_and_survivors_are_optimal() {
        let generators = orthogonal_generators();
        let (targets, _) = noisy_shifts(&generators, 30, 0.01, ShiftRanges::default(), &mut rng(7)).unwrap();
        let mut pool: Vec<Filter> = generators.filters().cloned().collect();
        pool.extend(random_bank(2, 7, &mut rng(8)).unwrap().filters().cloned());
        let candidates = FilterBank::from_filters(7, pool).unwrap();
        let trace = greedy_eliminate(&targets, &candidates, &mut Objective::IntrinsicResidual, 3).unwrap();
        let mut first_two = trace.removal_order();
        first_two.sort();
        assert_eq!(first_two, vec![3, 4]);
        assert_eq!(trace.survivors, best_subset(&targets, &candidates));
    }

    #[test]
    fn replaying_the_trace_reproduces_objectives() {
        let targets = random_bank(40, 5, &mut rng(11)).unwrap();
        let candidates = random_bank(8, 5, &mut rng(12)).unwrap();
        let trace = greedy_eliminate(&targets, &candidates, &mut Objective::IntrinsicResidual, 1).unwrap();
        let mut alive: Vec<usize> = (0..8).collect();
        let full = assign_best(&candidates, &targets).unwrap().total_squared_residual();
        assert!((trace.initial_objective + full).abs() < 1e-9);
        let mut previous = trace.initial_objective;
        for step in &trace.steps {
            alive.retain(|&p| p != step.removed_candidate);
            let sse = assign_best(&candidates.subset(&alive).unwrap(), &targets)
                .unwrap()
                .total_squared_residual();
            assert!((step.objective + sse).abs() < 1e-9);
            assert!(step.objective <= previous + 1e-12);
            previous = step.objective;
        }
        assert_eq!(trace.survivors, alive);
    }

    #[test]
    fn custom_objective_sees_reduced_sets() {
        let targets = random_bank(10, 5, &mut rng(3)).unwrap();
        let candidates = random_bank(4, 5, &mut rng(4)).unwrap();
        let mut objective = Objective::custom(|c: &FilterBank, a: &Assignment| {
            assert!(a.entries.iter().all(|e| e.fit.candidate_index < c.len()));
            assert_eq!(a.candidate_set_id.as_deref(), Some(c.content_hash().as_str()));
            // Prefer keeping low channels.
            Ok(-(c.entries().iter().map(|e| e.channel as f64).sum::<f64>()))
        });
        let trace = greedy_eliminate(&targets, &candidates, &mut objective, 1).unwrap();
        assert_eq!(trace.removal_order(), vec![3, 2, 1]);
        assert_eq!(trace.survivors, vec![0]);
    }

    #[test]
    fn elbow_cases() {
        assert!(matches!(
            elbow_index(&step_trace(&[1.0, 1.0, 1.0, 1.0]), 0.05),
            Err(Error::DegenerateTrace { stop_at: 1 })
        ));
        // Flat down to 3 remaining, then a collapse.
        let trace = step_trace(&[0.0, 0.0, 0.0, 0.0, 0.0, -10.0, -11.0]);
        assert_eq!(trace.steps[3].remaining_count, 3);
        for f in [0.01, 0.05, 0.5, 0.9] {
            assert_eq!(elbow_index(&trace, f).unwrap(), 3);
        }
        assert!(elbow_index(&trace, 0.0).is_err());
    }

    #[test]
    fn trace_csv_round_trip() {
        let trace = step_trace(&[-0.5, -0.75, -1.0 / 3.0]);
        let mut buf = Vec::new();
        write_trace_csv(&trace, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("step,removed_candidate,remaining_count,objective\n0,,3,-0.5\n"));
        let back = read_trace_csv(buf.as_slice()).unwrap();
        assert_eq!(back, trace);
    }
}
