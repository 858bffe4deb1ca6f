//! Closed-form linear-shift regression of target filters onto candidates.
//!
//! For a target `y` and a candidate `x`, the best approximation `a*x + b` in
//! the least-squares sense is the same as the best `a*x̂ + b` with
//! `x̂ = (x - mean(x)) / |x - mean(x)|`. Against a normalized candidate the
//! coefficients reduce to
//!
//! ```text
//! a = <x̂, y>        b = mean(y)        residual² = |y - mean(y)|² - a²
//! ```
//!
//! so a whole bank is fitted with one matrix product `A = X̂ Y` plus a vector
//! of target means. All coefficients here are expressed against `x̂`.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::filterbank::{Filter, FilterBank};
use crate::normalize::{normalize_values, NormalizedFilter};
use crate::numfmt;

/// Below this fraction of the centered target energy, the residual identity
/// loses its significant digits and the residual is measured directly.
const CANCELLATION_GUARD: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinearShiftFit {
    pub candidate_index: usize,
    pub a: f64,
    pub b: f64,
    /// `|y - (a*x̂ + b)|`, never negative.
    pub residual: f64,
}

/// Per-target quantities that do not depend on the candidate.
#[derive(Clone, Debug)]
struct TargetMoments {
    mean: f64,
    centered_sq: f64,
}

impl TargetMoments {
    fn of(values: &[f64]) -> Self {
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        let centered_sq = values.iter().map(|v| (v - mean) * (v - mean)).sum();
        TargetMoments { mean, centered_sq }
    }
}

fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

fn shift_residual(a: f64, moments: &TargetMoments, xhat: &[f64], y: &[f64]) -> f64 {
    let r2 = moments.centered_sq - a * a;
    if r2 > CANCELLATION_GUARD * moments.centered_sq {
        r2.sqrt()
    } else {
        xhat.iter()
            .zip(y)
            .map(|(x, y)| {
                let d = y - moments.mean - a * x;
                d * d
            })
            .sum::<f64>()
            .sqrt()
    }
}

fn fit_normalized(index: usize, xhat: &[f64], y: &[f64], moments: &TargetMoments) -> LinearShiftFit {
    let a = dot(xhat, y);
    LinearShiftFit {
        candidate_index: index,
        a,
        b: moments.mean,
        residual: shift_residual(a, moments, xhat, y),
    }
}

fn check_k(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::KMismatch { expected, found });
    }
    Ok(())
}

/// Optimal `a*x̂ + b` approximation of `target` by `candidate`.
pub fn fit_pair(candidate: &Filter, target: &Filter) -> Result<LinearShiftFit> {
    check_k(candidate.k(), target.k())?;
    let xhat = normalize_values(candidate.k(), candidate.values())
        .ok_or(Error::ZeroVariance { index: 0 })?;
    let moments = TargetMoments::of(target.values());
    Ok(fit_normalized(0, xhat.values(), target.values(), &moments))
}

/// Candidates normalized once for repeated fitting.
#[derive(Clone, Debug)]
pub struct NormalizedCandidates {
    rows: Vec<NormalizedFilter>,
}

impl NormalizedCandidates {
    pub fn new(candidates: &FilterBank) -> Result<Self> {
        let rows = candidates
            .filters()
            .enumerate()
            .map(|(index, f)| normalize_values(f.k(), f.values()).ok_or(Error::ZeroVariance { index }))
            .collect::<Result<Vec<_>>>()?;
        Ok(NormalizedCandidates { rows })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn get(&self, index: usize) -> &NormalizedFilter {
        &self.rows[index]
    }
}

/// Coefficients of every (candidate, target) pair.
#[derive(Clone, Debug, PartialEq)]
pub struct FitMatrix {
    candidates: usize,
    targets: usize,
    /// Row-major `candidates x targets`.
    a: Vec<f64>,
    residual: Vec<f64>,
    /// One per target; the offset does not depend on the candidate.
    b: Vec<f64>,
}

impl FitMatrix {
    pub fn candidates(&self) -> usize {
        self.candidates
    }

    pub fn targets(&self) -> usize {
        self.targets
    }

    pub fn get(&self, candidate: usize, target: usize) -> LinearShiftFit {
        let i = candidate * self.targets + target;
        LinearShiftFit {
            candidate_index: candidate,
            a: self.a[i],
            b: self.b[target],
            residual: self.residual[i],
        }
    }

    pub fn residual(&self, candidate: usize, target: usize) -> f64 {
        self.residual[candidate * self.targets + target]
    }

    /// Best candidate for `target` among those where `allowed` holds.
    /// Ties go to the lowest index.
    pub fn best_for(&self, target: usize, mut allowed: impl FnMut(usize) -> bool) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for p in 0..self.candidates {
            if !allowed(p) {
                continue;
            }
            let r = self.residual(p, target);
            if best.is_none_or(|(_, br)| r < br) {
                best = Some((p, r));
            }
        }
        best.map(|(p, _)| p)
    }
}

pub fn fit_batched(candidates: &FilterBank, targets: &FilterBank) -> Result<FitMatrix> {
    check_k(candidates.k(), targets.k())?;
    let normalized = NormalizedCandidates::new(candidates)?;
    Ok(fit_batched_normalized(&normalized, targets))
}

pub(crate) fn fit_batched_normalized(candidates: &NormalizedCandidates, targets: &FilterBank) -> FitMatrix {
    let moments: Vec<TargetMoments> = targets.filters().map(|f| TargetMoments::of(f.values())).collect();
    let (p_count, c_count) = (candidates.len(), targets.len());
    let mut a = Vec::with_capacity(p_count * c_count);
    let mut residual = Vec::with_capacity(p_count * c_count);
    for xhat in &candidates.rows {
        for (y, m) in targets.filters().zip(&moments) {
            let fit = fit_normalized(0, xhat.values(), y.values(), m);
            a.push(fit.a);
            residual.push(fit.residual);
        }
    }
    FitMatrix {
        candidates: p_count,
        targets: c_count,
        a,
        residual,
        b: moments.iter().map(|m| m.mean).collect(),
    }
}

/// One row of an [`Assignment`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AssignmentEntry {
    pub layer: u32,
    pub channel: u32,
    pub fit: LinearShiftFit,
}

/// Best candidate and coefficients for every entry of a target bank.
#[derive(Clone, Debug, PartialEq)]
pub struct Assignment {
    pub entries: Vec<AssignmentEntry>,
    /// Content hash of the candidate bank; `None` when read back from CSV,
    /// which does not carry it.
    pub candidate_set_id: Option<String>,
}

impl Assignment {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn total_squared_residual(&self) -> f64 {
        self.entries.iter().map(|e| e.fit.residual * e.fit.residual).sum()
    }

    pub fn from_matrix(matrix: &FitMatrix, targets: &FilterBank, candidate_set_id: Option<String>) -> Result<Assignment> {
        Self::from_matrix_restricted(matrix, targets, candidate_set_id, |_| true)
    }

    pub(crate) fn from_matrix_restricted(
        matrix: &FitMatrix,
        targets: &FilterBank,
        candidate_set_id: Option<String>,
        mut allowed: impl FnMut(usize) -> bool,
    ) -> Result<Assignment> {
        let entries = targets
            .entries()
            .iter()
            .enumerate()
            .map(|(c, e)| {
                let p = matrix.best_for(c, &mut allowed).ok_or(Error::EmptyCandidates)?;
                Ok(AssignmentEntry {
                    layer: e.layer,
                    channel: e.channel,
                    fit: matrix.get(p, c),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Assignment {
            entries,
            candidate_set_id,
        })
    }
}

/// Assigns each target to the candidate with the smallest residual.
pub fn assign_best(candidates: &FilterBank, targets: &FilterBank) -> Result<Assignment> {
    if candidates.is_empty() {
        return Err(Error::EmptyCandidates);
    }
    let matrix = fit_batched(candidates, targets)?;
    Assignment::from_matrix(&matrix, targets, Some(candidates.content_hash()))
}

/// Replaces every filter of `bank` by `a*x̂ + b` of its assigned candidate.
pub fn replace_bank(bank: &FilterBank, candidates: &FilterBank, assignment: &Assignment) -> Result<FilterBank> {
    check_k(bank.k(), candidates.k())?;
    if let Some(id) = &assignment.candidate_set_id {
        let actual = candidates.content_hash();
        if *id != actual {
            return Err(Error::HashMismatch(format!(
                "assignment was computed against candidates {id}, got {actual}"
            )));
        }
    }
    if assignment.len() != bank.len() {
        return Err(Error::HashMismatch(format!(
            "assignment has {} entries, bank has {}",
            assignment.len(),
            bank.len()
        )));
    }
    let normalized = NormalizedCandidates::new(candidates)?;
    let mut out = FilterBank::new(bank.k())?;
    for (entry, row) in bank.entries().iter().zip(&assignment.entries) {
        if (entry.layer, entry.channel) != (row.layer, row.channel) {
            return Err(Error::HashMismatch(format!(
                "assignment row ({}, {}) does not match bank entry ({}, {})",
                row.layer, row.channel, entry.layer, entry.channel
            )));
        }
        let p = row.fit.candidate_index;
        if p >= normalized.len() {
            return Err(Error::IndexOutOfRange {
                index: p,
                count: normalized.len(),
            });
        }
        let (a, b) = (row.fit.a, row.fit.b);
        let values = normalized.get(p).values().iter().map(|x| a * x + b).collect();
        out.push(entry.layer, entry.channel, Filter::new(bank.k(), values)?)?;
    }
    Ok(out)
}

/// Fraction of entries whose residual is at most `threshold`; 1 when empty.
pub fn coverage(assignment: &Assignment, threshold: f64) -> f64 {
    if assignment.is_empty() {
        return 1.0;
    }
    let hits = assignment
        .entries
        .iter()
        .filter(|e| e.fit.residual <= threshold)
        .count();
    hits as f64 / assignment.len() as f64
}

pub const ASSIGNMENT_HEADER: [&str; 6] = ["layer", "channel", "candidate", "a", "b", "residual"];

pub fn write_assignment_csv<W: Write>(assignment: &Assignment, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let wrap = |e: csv::Error| Error::parse("assignment CSV", e);
    w.write_record(ASSIGNMENT_HEADER).map_err(wrap)?;
    for e in &assignment.entries {
        w.write_record([
            e.layer.to_string(),
            e.channel.to_string(),
            e.fit.candidate_index.to_string(),
            numfmt::sig(e.fit.a, 9),
            numfmt::sig(e.fit.b, 9),
            numfmt::sig(e.fit.residual, 9),
        ])
        .map_err(wrap)?;
    }
    w.flush().map_err(|e| Error::parse("assignment CSV", e))
}

pub fn read_assignment_csv<R: Read>(reader: R) -> Result<Assignment> {
    let mut r = csv::Reader::from_reader(reader);
    let headers = r.headers().map_err(|e| Error::parse("assignment CSV", e))?.clone();
    if headers.iter().ne(ASSIGNMENT_HEADER) {
        return Err(Error::parse(
            "assignment CSV",
            format!("unexpected header {:?}", headers.iter().collect::<Vec<_>>()),
        ));
    }
    let mut entries = Vec::new();
    for record in r.records() {
        let record = record.map_err(|e| Error::parse("assignment CSV", e))?;
        let field = |i: usize| record.get(i).unwrap_or_default();
        let int = |i: usize| field(i).parse::<u64>().map_err(|e| Error::parse("assignment CSV", e));
        let real = |i: usize| field(i).parse::<f64>().map_err(|e| Error::parse("assignment CSV", e));
        entries.push(AssignmentEntry {
            layer: int(0)? as u32,
            channel: int(1)? as u32,
            fit: LinearShiftFit {
                candidate_index: int(2)? as usize,
                a: real(3)?,
                b: real(4)?,
                residual: real(5)?,
            },
        });
    }
    Ok(Assignment {
        entries,
        candidate_set_id: None,
    })
}

pub fn save_assignment(assignment: &Assignment, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_assignment_csv(assignment, std::io::BufWriter::new(file))
}

pub fn load_assignment(path: impl AsRef<Path>) -> Result<Assignment> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_assignment_csv(std::io::BufReader::new(file))
}
