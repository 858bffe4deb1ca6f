//! Command-line front end. Every subcommand is a thin wrapper over the
//! library; [`run`] returns the process exit code: 0 on success, 1 on a
//! domain error (reported as `ERROR <code>: <message>` on standard error),
//! 2 on a usage error.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::analytic::{self, AnalyticKernelSpec, Family, FamilyFit, KernelNorm, SigmaGrid, DOG_RATIOS};
use crate::error::{Error, Result};
use crate::filterbank::{bank_stats, load_bank, save_bank, BankFormat, FilterBank};
use crate::greedy::{self, elbow_index, greedy_eliminate, Objective, DEFAULT_DROP_FRACTION};
use crate::linfit::{self, assign_best, coverage, load_assignment, replace_bank, save_assignment};
use crate::manifold::{self, AutoencoderModel, TrainConfig};
use crate::masterkeys;
use crate::normalize::{normalize_bank, normalize_bank_keep_provenance, normalize_filter};
use crate::numfmt::sig;
use crate::render::{render_bank, RenderConfig, VmaxMode};

#[derive(Parser, Debug)]
#[command(name = "masterkey", version, about = "Distill depthwise filter banks onto a small linear-shift basis")]
struct Cli {
    #[command(subcommand)]
    command: Commands,
}

#[derive(Subcommand, Debug)]
enum Commands {
    /// Convert a JSON manifest to MKFB.
    ImportJson(Convert),
    /// Convert an MKFB bank to a JSON manifest.
    ExportJson(Convert),
    /// Center and unit-scale every filter of a bank.
    Normalize {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// CSV of rejected constant filters (`layer,channel,reason`).
        #[arg(long)]
        rejects: Option<PathBuf>,
    },
    /// Assign every filter of a bank to its best candidate.
    Fit {
        #[arg(long)]
        bank: PathBuf,
        #[arg(long)]
        candidates: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Replace every filter by its assigned linear shift.
    Replace {
        #[arg(long)]
        bank: PathBuf,
        #[arg(long)]
        candidates: PathBuf,
        #[arg(long)]
        assignment: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Summaries of a bank and/or an assignment.
    Stats {
        #[arg(long)]
        bank: Option<PathBuf>,
        #[arg(long)]
        assignment: Option<PathBuf>,
        #[arg(long, default_value_t = 0.1)]
        threshold: f64,
    },
    /// Autoencoder training and candidate sampling.
    Distill {
        #[command(subcommand)]
        command: DistillCommand,
    },
    /// Greedy backward elimination over a candidate bank.
    Greedy(GreedyArgs),
    /// Analytic scale-space kernels.
    Analytic {
        #[command(subcommand)]
        command: AnalyticCommand,
    },
    /// The bundled eight master filters.
    Masterkeys {
        #[command(subcommand)]
        command: MasterCommand,
    },
    /// Write a PPM heatmap per filter.
    Render {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long, default_value_t = 32)]
        cell_pixels: usize,
        #[arg(long, value_enum, default_value_t = VmaxArg::PerFilter)]
        vmax: VmaxArg,
    },
    /// Coverage, greedy trace and analytic fits in one sectioned CSV file.
    Report {
        #[arg(long)]
        bank: PathBuf,
        #[arg(long)]
        candidates: PathBuf,
        #[arg(long)]
        trace: Option<PathBuf>,
        #[arg(long, default_value_t = 0.1)]
        threshold: f64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args, Debug)]
struct Convert {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand, Debug)]
enum DistillCommand {
    TrainAe {
        #[arg(long)]
        bank: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 500)]
        epochs: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 256)]
        batch_size: usize,
        #[arg(long, default_value_t = 1e-3)]
        learning_rate: f64,
        /// Per-epoch loss CSV (`epoch,mse`).
        #[arg(long)]
        loss_out: Option<PathBuf>,
    },
    Sample {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, default_value_t = 50)]
        n: usize,
        #[arg(long)]
        out: PathBuf,
        /// CSV of the sampled codes (`index,code`).
        #[arg(long)]
        codes_out: Option<PathBuf>,
    },
    Expand {
        #[arg(long)]
        model: PathBuf,
        /// CSV with a `code` column.
        #[arg(long)]
        centers: PathBuf,
        #[arg(long, default_value_t = 4)]
        per_center: usize,
        /// Neighbour spacing; defaults to half a cell of a `--grid-n` grid.
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long, default_value_t = 50)]
        grid_n: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ObjectiveArg {
    Residual,
    External,
}

#[derive(Args, Debug)]
struct GreedyArgs {
    #[arg(long)]
    bank: PathBuf,
    #[arg(long)]
    candidates: PathBuf,
    #[arg(long, value_enum, default_value_t = ObjectiveArg::Residual)]
    objective: ObjectiveArg,
    #[arg(long, required_if_eq("objective", "external"))]
    evaluator_cmd: Option<String>,
    #[arg(long, default_value_t = 1)]
    stop_at: usize,
    #[arg(long, default_value_t = DEFAULT_DROP_FRACTION)]
    drop_fraction: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum NormArg {
    Raw,
    L1,
    L2,
}

#[derive(Subcommand, Debug)]
enum AnalyticCommand {
    Gen {
        #[arg(long)]
        family: String,
        #[arg(long)]
        sigma: f64,
        #[arg(long)]
        sigma2: Option<f64>,
        #[arg(long, default_value_t = 7)]
        k: usize,
        #[arg(long, value_enum, default_value_t = NormArg::L2)]
        norm: NormArg,
        #[arg(long)]
        out: PathBuf,
    },
    Fit {
        #[arg(long = "in")]
        input: PathBuf,
        /// A family name or `all`.
        #[arg(long, default_value = "all")]
        family: String,
        #[arg(long, default_value_t = 0.3)]
        sigma_min: f64,
        #[arg(long, default_value_t = 3.0)]
        sigma_max: f64,
        #[arg(long, default_value_t = 0.01)]
        sigma_step: f64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Subcommand, Debug)]
enum MasterCommand {
    Export {
        #[arg(long)]
        out: PathBuf,
    },
    Verify {
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum VmaxArg {
    PerFilter,
    Global,
}

pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("ERROR {}: {}", e.code(), e);
            1
        }
    }
}

fn load(path: &Path) -> Result<FilterBank> {
    load_bank(path, BankFormat::from_path(path))
}

fn save(bank: &FilterBank, path: &Path) -> Result<()> {
    save_bank(bank, path, BankFormat::from_path(path))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn dispatch(command: Commands) -> Result<()> {
    match command {
        Commands::ImportJson(c) => save_bank(&load_bank(&c.input, BankFormat::Json)?, &c.out, BankFormat::Binary),
        Commands::ExportJson(c) => save_bank(&load_bank(&c.input, BankFormat::Binary)?, &c.out, BankFormat::Json),
        Commands::Normalize { input, out, rejects } => {
            let bank = load(&input)?;
            let (normalized, rejected) = normalize_bank_keep_provenance(&bank)?;
            save(&normalized, &out)?;
            if let Some(path) = rejects {
                let mut text = String::from("layer,channel,reason\n");
                for i in &rejected {
                    let e = &bank.entries()[*i];
                    text.push_str(&format!("{},{},ZeroVariance\n", e.layer, e.channel));
                }
                write_text(&path, &text)?;
            }
            eprintln!("normalized {} filters, rejected {}", normalized.len(), rejected.len());
            Ok(())
        }
        Commands::Fit { bank, candidates, out } => {
            let assignment = assign_best(&load(&candidates)?, &load(&bank)?)?;
            save_assignment(&assignment, &out)
        }
        Commands::Replace {
            bank,
            candidates,
            assignment,
            out,
        } => {
            let replaced = replace_bank(&load(&bank)?, &load(&candidates)?, &load_assignment(&assignment)?)?;
            save(&replaced, &out)
        }
        Commands::Stats {
            bank,
            assignment,
            threshold,
        } => {
            if bank.is_none() && assignment.is_none() {
                return Err(Error::InvalidArgument("give --bank and/or --assignment".into()));
            }
            let mut out = String::from("metric,value\n");
            if let Some(path) = bank {
                let stats = bank_stats(&load(&path)?);
                out.push_str(&format!("count,{}\n", stats.count));
                out.push_str(&format!("mean_norm,{}\n", sig(stats.mean_norm, 9)));
                out.push_str(&format!("mean_abs_mean,{}\n", sig(stats.mean_abs_mean, 9)));
                for (layer, count) in &stats.per_layer_counts {
                    out.push_str(&format!("layer_{layer}_count,{count}\n"));
                }
            }
            if let Some(path) = assignment {
                let a = load_assignment(&path)?;
                let mean = if a.is_empty() {
                    0.0
                } else {
                    a.entries.iter().map(|e| e.fit.residual).sum::<f64>() / a.len() as f64
                };
                out.push_str(&format!("entries,{}\n", a.len()));
                out.push_str(&format!("threshold,{}\n", sig(threshold, 9)));
                out.push_str(&format!("coverage,{}\n", sig(coverage(&a, threshold), 9)));
                out.push_str(&format!("mean_residual,{}\n", sig(mean, 9)));
            }
            print!("{out}");
            Ok(())
        }
        Commands::Distill { command } => distill(command),
        Commands::Greedy(args) => run_greedy(args),
        Commands::Analytic { command } => run_analytic(command),
        Commands::Masterkeys { command } => match command {
            MasterCommand::Export { out } => masterkeys::export_masters(&out, BankFormat::from_path(&out)),
            MasterCommand::Verify { out } => write_text(&out, &master_report_csv(&masterkeys::verify_masters()?)),
        },
        Commands::Render {
            input,
            out_dir,
            cell_pixels,
            vmax,
        } => {
            let config = RenderConfig {
                cell_pixels,
                vmax_mode: match vmax {
                    VmaxArg::PerFilter => VmaxMode::PerFilterAbsMax,
                    VmaxArg::Global => VmaxMode::Global,
                },
            };
            let paths = render_bank(&load(&input)?, &config, &out_dir)?;
            eprintln!("wrote {} images to {}", paths.len(), out_dir.display());
            Ok(())
        }
        Commands::Report {
            bank,
            candidates,
            trace,
            threshold,
            out,
        } => {
            let bank = load(&bank)?;
            let candidates = load(&candidates)?;
            let trace = trace.map(|p| greedy::load_trace(&p)).transpose()?;
            write_text(&out, &report_bundle(&bank, &candidates, trace.as_ref(), threshold)?)
        }
    }
}

fn distill(command: DistillCommand) -> Result<()> {
    match command {
        DistillCommand::TrainAe {
            bank,
            out,
            epochs,
            seed,
            batch_size,
            learning_rate,
            loss_out,
        } => {
            let (filters, rejected) = normalize_bank(&load(&bank)?);
            if !rejected.is_empty() {
                eprintln!("skipping {} constant filters", rejected.len());
            }
            let config = TrainConfig {
                epochs,
                batch_size,
                learning_rate,
                seed,
                ..TrainConfig::default()
            };
            let outcome = manifold::train_autoencoder(&filters, &config)?;
            outcome.model.save(&out)?;
            if let Some(path) = loss_out {
                let mut text = String::from("epoch,mse\n");
                for (i, l) in outcome.loss_history.iter().enumerate() {
                    text.push_str(&format!("{},{}\n", i + 1, sig(*l, 9)));
                }
                write_text(&path, &text)?;
            }
            eprintln!(
                "final epoch mse {}",
                sig(*outcome.loss_history.last().expect("at least one epoch"), 6)
            );
            Ok(())
        }
        DistillCommand::Sample { model, n, out, codes_out } => {
            let model = AutoencoderModel::load(&model)?;
            save(&manifold::sample_uniform(&model, n)?, &out)?;
            if let Some(path) = codes_out {
                let mut text = String::from("index,code\n");
                for (i, c) in manifold::uniform_codes(n)?.iter().enumerate() {
                    text.push_str(&format!("{i},{}\n", sig(*c, 17)));
                }
                write_text(&path, &text)?;
            }
            Ok(())
        }
        DistillCommand::Expand {
            model,
            centers,
            per_center,
            delta,
            grid_n,
            out,
        } => {
            let model = AutoencoderModel::load(&model)?;
            let centers = read_codes(&centers)?;
            let delta = delta.unwrap_or_else(|| manifold::default_delta(grid_n));
            save(&manifold::sample_around(&model, &centers, per_center, delta)?, &out)
        }
    }
}

fn read_codes(path: &Path) -> Result<Vec<f64>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::Reader::from_reader(file);
    let headers = reader.headers().map_err(|e| Error::parse("codes CSV", e))?.clone();
    let column = headers
        .iter()
        .position(|h| h == "code")
        .ok_or_else(|| Error::parse("codes CSV", "no `code` column"))?;
    reader
        .records()
        .map(|r| {
            let r = r.map_err(|e| Error::parse("codes CSV", e))?;
            r.get(column)
                .unwrap_or("")
                .parse::<f64>()
                .map_err(|e| Error::parse("codes CSV", e))
        })
        .collect()
}

fn run_greedy(args: GreedyArgs) -> Result<()> {
    let targets = load(&args.bank)?;
    let candidates = load(&args.candidates)?;
    let mut objective = match args.objective {
        ObjectiveArg::Residual => Objective::IntrinsicResidual,
        ObjectiveArg::External => Objective::command(args.evaluator_cmd.expect("enforced by clap")),
    };
    let trace = greedy_eliminate(&targets, &candidates, &mut objective, args.stop_at)?;
    greedy::save_trace(&trace, &args.out)?;
    match elbow_index(&trace, args.drop_fraction) {
        Ok(elbow) => eprintln!("elbow at {elbow} remaining candidates"),
        Err(e) => eprintln!("no elbow: {e}"),
    }
    Ok(())
}

fn fit_rows(bank: &FilterBank, families: &[Family], grid: &SigmaGrid) -> Result<Vec<(u32, u32, FamilyFit)>> {
    let mut rows = Vec::new();
    for (index, e) in bank.entries().iter().enumerate() {
        if let Ok(n) = normalize_filter(&e.filter) {
            if n.is_near_constant() {
                eprintln!(
                    "warning: filter {index} (layer {}, channel {}) is nearly constant",
                    e.layer, e.channel
                );
            }
        }
        for &family in families {
            let fit = analytic::fit_family(&e.filter, family, grid, &DOG_RATIOS).map_err(|err| match err {
                Error::ZeroVariance { .. } => Error::ZeroVariance { index },
                other => other,
            })?;
            rows.push((e.layer, e.channel, fit));
        }
    }
    Ok(rows)
}

fn fits_csv(rows: &[(u32, u32, FamilyFit)]) -> String {
    let mut text = String::from("layer,channel,family,sigma,sigma2,similarity,residual\n");
    for (layer, channel, fit) in rows {
        text.push_str(&format!(
            "{layer},{channel},{},{},{},{},{}\n",
            fit.family,
            sig(fit.sigma, 9),
            fit.sigma2.map(|s| sig(s, 9)).unwrap_or_default(),
            sig(fit.similarity, 9),
            sig(fit.linshift_residual, 9)
        ));
    }
    text
}

fn run_analytic(command: AnalyticCommand) -> Result<()> {
    match command {
        AnalyticCommand::Gen {
            family,
            sigma,
            sigma2,
            k,
            norm,
            out,
        } => {
            let family: Family = family.parse()?;
            let spec = AnalyticKernelSpec {
                family,
                sigma,
                sigma2,
                k,
                norm: match norm {
                    NormArg::Raw => KernelNorm::Raw,
                    NormArg::L1 => KernelNorm::UnitL1Components,
                    NormArg::L2 => KernelNorm::UnitL2,
                },
            };
            save(&FilterBank::from_filters(k, [analytic::generate(&spec)?])?, &out)
        }
        AnalyticCommand::Fit {
            input,
            family,
            sigma_min,
            sigma_max,
            sigma_step,
            out,
        } => {
            let families = if family == "all" {
                Family::ALL.to_vec()
            } else {
                vec![family.parse()?]
            };
            let grid = SigmaGrid {
                start: sigma_min,
                stop: sigma_max,
                step: sigma_step,
            };
            let rows = fit_rows(&load(&input)?, &families, &grid)?;
            write_text(&out, &fits_csv(&rows))
        }
    }
}

fn master_report_csv(report: &masterkeys::MasterVerification) -> String {
    let mut text = String::from("filter,mean,norm,family,sigma,sigma2,similarity,residual");
    for j in 1..=report.pairwise.len() {
        text.push_str(&format!(",cos_{j}"));
    }
    text.push('\n');
    for (summary, row) in report.filters.iter().zip(&report.pairwise) {
        let b = &summary.best;
        text.push_str(&format!(
            "{},{},{},{},{},{},{},{}",
            summary.number,
            sig(summary.mean, 9),
            sig(summary.norm, 9),
            b.family,
            sig(b.sigma, 9),
            b.sigma2.map(|s| sig(s, 9)).unwrap_or_default(),
            sig(b.similarity, 9),
            sig(b.linshift_residual, 9)
        ));
        for c in row {
            text.push_str(&format!(",{}", sig(*c, 9)));
        }
        text.push('\n');
    }
    text
}

/// Sections separated by `# <name>` lines, each an ordinary CSV table.
pub fn report_bundle(
    bank: &FilterBank,
    candidates: &FilterBank,
    trace: Option<&greedy::GreedyTrace>,
    threshold: f64,
) -> Result<String> {
    let assignment = assign_best(candidates, bank)?;
    let mut out = Vec::new();
    let io = |e: std::io::Error| Error::io("<report>", e);
    writeln!(out, "# coverage").map_err(io)?;
    writeln!(out, "entries,candidates,threshold,coverage,total_squared_residual").map_err(io)?;
    writeln!(
        out,
        "{},{},{},{},{}",
        assignment.len(),
        candidates.len(),
        sig(threshold, 9),
        sig(coverage(&assignment, threshold), 9),
        sig(assignment.total_squared_residual(), 9)
    )
    .map_err(io)?;
    writeln!(out, "# assignment").map_err(io)?;
    linfit::write_assignment_csv(&assignment, &mut out)?;
    if let Some(trace) = trace {
        writeln!(out, "# greedy_trace").map_err(io)?;
        greedy::write_trace_csv(trace, &mut out)?;
    }
    writeln!(out, "# analytic_fits").map_err(io)?;
    let rows = fit_rows(candidates, &Family::ALL, &SigmaGrid::default())?;
    out.extend_from_slice(fits_csv(&rows).as_bytes());
    Ok(String::from_utf8(out).expect("report is UTF-8"))
}
