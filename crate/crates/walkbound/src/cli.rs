//! Command-line front end.
//!
//! Exit codes: `0` when every checked bound holds, `1` when at least one
//! report is a violation, `2` for input or configuration errors (with a
//! one-line diagnostic on stderr). Reports go to stdout or `--output`,
//! as canonical JSON (default) or CSV carrying identical numeric values.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::bounds::{
    check_gap_sandwich, check_hitting, check_interlacing, check_leak_q1, check_tv_bound,
    check_weyl, sweep, BoundReport, SweepSpec,
};
use crate::error::{Error, Result};
use crate::gen::min_entry;
use crate::io::{matrix_to_text, read_matrix, write_text};
use crate::markov::StochasticMatrix;
use crate::perturb::{decompose, NoiseKind, NoiseSpec, Perturbation};
use crate::report::{
    bound_report_json, bound_reports_csv, curve_csv, curve_json, fmt_float, render,
    sweep_summary_csv, sweep_summary_json, Json,
};
use crate::sampler::{build_sequence, emulate_sampling, verify_triangle};
use crate::szegedy::{
    build_walk_limited, classical_hitting_proxy, hitting_proxy, leak_norm, mark,
    simulate_absorption, DEFAULT_DIM_LIMIT,
};

/// Eigenphase extraction works on the dense walk matrix; this caps the
/// edge-space dimension (16 states) so `--phases` stays interactive.
pub const PHASES_DIM_LIMIT: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum NoiseModel {
    /// Round off-diagonals to `1/2^bits` steps and repair the diagonal.
    Trunc,
    /// Seeded symmetric noise with a prescribed spectral norm.
    Rand,
}

#[derive(Debug, Parser)]
#[command(
    name = "walkbound",
    version,
    about = "Quantize Markov chains into Szegedy walks and verify perturbation bounds"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Report format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,

    /// Write the report to this file instead of stdout.
    #[arg(long, global = true, value_name = "PATH")]
    output: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Validate a chain and report its spectral and mixing profile.
    Analyze(AnalyzeArgs),
    /// Apply noise to a chain and report the perturbation norms.
    Perturb(PerturbArgs),
    /// Build the quantum walk; optionally phases and absorption curves.
    Quantize(QuantizeArgs),
    /// Run every applicable bound check on a pair of chains.
    Verify(VerifyArgs),
    /// Monte Carlo sweep of the bound battery over random chains.
    Sweep(SweepArgs),
    /// Emulate staged stationary sampling and check the sampling bound.
    Sample(SampleArgs),
}

#[derive(Debug, Args)]
struct AnalyzeArgs {
    /// Transition-matrix file.
    #[arg(long, value_name = "PATH")]
    input: PathBuf,
}

#[derive(Debug, Args)]
struct NoiseArgs {
    /// Noise model.
    #[arg(long, value_enum, value_name = "MODEL")]
    noise: Option<NoiseModel>,

    /// Truncation width in bits (with --noise trunc).
    #[arg(long)]
    bits: Option<u32>,

    /// Spectral-norm noise magnitude (with --noise rand).
    #[arg(long)]
    magnitude: Option<f64>,

    /// RNG seed for random noise.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl NoiseArgs {
    /// Turns the flag soup into a checked spec; `None` when no model was
    /// requested and no stray model-specific flag was passed.
    fn resolve(&self) -> Result<Option<NoiseSpec>> {
        let kind = match self.noise {
            None => {
                if self.bits.is_some() || self.magnitude.is_some() {
                    return Err(Error::Parse(
                        "--bits/--magnitude need --noise to pick a model".into(),
                    ));
                }
                return Ok(None);
            }
            Some(NoiseModel::Trunc) => {
                if self.magnitude.is_some() {
                    return Err(Error::Parse(
                        "--magnitude does not apply to trunc noise".into(),
                    ));
                }
                let bits = self
                    .bits
                    .ok_or_else(|| Error::Parse("--noise trunc requires --bits".into()))?;
                NoiseKind::Truncate { bits }
            }
            Some(NoiseModel::Rand) => {
                if self.bits.is_some() {
                    return Err(Error::Parse("--bits does not apply to rand noise".into()));
                }
                let magnitude = self
                    .magnitude
                    .ok_or_else(|| Error::Parse("--noise rand requires --magnitude".into()))?;
                NoiseKind::Random { magnitude }
            }
        };
        let spec = NoiseSpec {
            kind,
            seed: self.seed,
        };
        spec.check()?;
        Ok(Some(spec))
    }
}

#[derive(Debug, Args)]
struct MarkedArgs {
    /// Comma-separated marked state indices.
    #[arg(long, value_delimiter = ',', value_name = "I,J,...")]
    marked: Option<Vec<usize>>,

    /// Marked fraction; the last ceil(frac * n) states are marked.
    #[arg(long, value_name = "FRAC", conflicts_with = "marked")]
    marked_frac: Option<f64>,
}

impl MarkedArgs {
    fn resolve(&self, n: usize) -> Result<Option<Vec<usize>>> {
        if let Some(list) = &self.marked {
            return Ok(Some(list.clone()));
        }
        let Some(frac) = self.marked_frac else {
            return Ok(None);
        };
        if !(0.0..=1.0).contains(&frac) {
            return Err(Error::Parse(format!("--marked-frac {frac} outside [0, 1]")));
        }
        if n < 2 {
            return Err(Error::Parse(
                "--marked-frac needs a chain with at least 2 states".into(),
            ));
        }
        let k = ((frac * n as f64).ceil() as usize).clamp(1, n - 1);
        Ok(Some(((n - k)..n).collect()))
    }
}

#[derive(Debug, Args)]
struct PerturbArgs {
    /// Transition-matrix file.
    #[arg(long, value_name = "PATH")]
    input: PathBuf,

    #[command(flatten)]
    noise: NoiseArgs,

    /// Write the perturbed chain to this matrix file.
    #[arg(long, value_name = "PATH")]
    save_matrix: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct QuantizeArgs {
    /// Transition-matrix file.
    #[arg(long, value_name = "PATH")]
    input: PathBuf,

    #[command(flatten)]
    marked: MarkedArgs,

    /// Absorption steps to simulate (requires a marked set).
    #[arg(long, default_value_t = 0)]
    steps: usize,

    /// Edge-space dimension cap for the dense walk matrix.
    #[arg(long, default_value_t = DEFAULT_DIM_LIMIT)]
    walk_cap: usize,

    /// Report walk eigenphases against the discriminant prediction.
    #[arg(long)]
    phases: bool,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    /// Baseline transition-matrix file (P).
    #[arg(long, value_name = "PATH")]
    input: PathBuf,

    /// Perturbed chain file (Q); the alternative to on-the-fly noise.
    #[arg(long, value_name = "PATH")]
    compare: Option<PathBuf>,

    #[command(flatten)]
    noise: NoiseArgs,

    #[command(flatten)]
    marked: MarkedArgs,
}

#[derive(Debug, Args)]
struct SweepArgs {
    /// Fixed state count (sets both bounds).
    #[arg(long, conflicts_with_all = ["n_min", "n_max"])]
    n: Option<usize>,

    /// Smallest state count.
    #[arg(long, default_value_t = 2)]
    n_min: usize,

    /// Largest state count.
    #[arg(long, default_value_t = 16)]
    n_max: usize,

    /// Number of random instances.
    #[arg(long, default_value_t = 100)]
    trials: u64,

    /// Noise magnitude per trial (spectral norm for symmetric chains,
    /// max-row-sum for general ones).
    #[arg(long, default_value_t = 0.05)]
    magnitude: f64,

    /// Master seed; trial i derives its own stream.
    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Cap each trial's magnitude strictly below half that chain's gap.
    #[arg(long)]
    cap_to_half_gap: bool,

    /// Sweep general (non-symmetric) chains through the TV battery.
    #[arg(long)]
    general: bool,
}

#[derive(Debug, Args)]
struct SampleArgs {
    /// Target chain file (Q).
    #[arg(long, value_name = "PATH")]
    input: PathBuf,

    /// Interpolation steps from the uniform chain to the target.
    #[arg(long, default_value_t = 8)]
    steps: usize,

    /// Sampling precision: the output stays within this TV distance.
    #[arg(long, default_value_t = 0.05)]
    eta: f64,

    /// RNG seed for the emulated sampler.
    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Baseline chain file (P) to verify the end-to-end sampling bound.
    #[arg(long, value_name = "PATH")]
    compare: Option<PathBuf>,
}

/// Parses `std::env::args` and runs; returns the process exit code.
pub fn run_from_args() -> i32 {
    let cli = Cli::parse();
    run(cli)
}

fn run(cli: Cli) -> i32 {
    match execute(&cli) {
        Ok(outcome) => {
            let emitted = match &cli.output {
                Some(path) => write_text(path, &outcome.text),
                None => {
                    print!("{}", outcome.text);
                    Ok(())
                }
            };
            if let Err(err) = emitted {
                eprintln!("error: {err}");
                return 2;
            }
            if outcome.violations {
                1
            } else {
                0
            }
        }
        Err(err) => {
            eprintln!("error: {err}");
            2
        }
    }
}

struct Outcome {
    text: String,
    violations: bool,
}

impl Outcome {
    fn clean(text: String) -> Self {
        Outcome {
            text,
            violations: false,
        }
    }
}

fn execute(cli: &Cli) -> Result<Outcome> {
    match &cli.command {
        Command::Analyze(args) => run_analyze(args, cli.format),
        Command::Perturb(args) => run_perturb(args, cli.format),
        Command::Quantize(args) => run_quantize(args, cli.format),
        Command::Verify(args) => run_verify(args, cli.format),
        Command::Sweep(args) => run_sweep(args, cli.format),
        Command::Sample(args) => run_sample(args, cli.format),
    }
}

fn load_chain(path: &Path) -> Result<StochasticMatrix> {
    StochasticMatrix::validate(read_matrix(path)?)
}

/// Key/value rows that render identically in JSON and CSV; floats go
/// through the one canonical formatter in both.
enum Field {
    Uint(u64),
    Float(f64),
    Bool(bool),
    Text(String),
    FloatList(Vec<f64>),
    Missing,
}

fn fields_to_json(fields: &[(&str, Field)]) -> Json {
    Json::Object(
        fields
            .iter()
            .map(|(key, field)| {
                let value = match field {
                    Field::Uint(u) => Json::Uint(*u),
                    Field::Float(f) => Json::Float(*f),
                    Field::Bool(b) => Json::Bool(*b),
                    Field::Text(s) => Json::str(s.clone()),
                    Field::FloatList(v) => Json::Array(v.iter().map(|&f| Json::Float(f)).collect()),
                    Field::Missing => Json::Null,
                };
                (key.to_string(), value)
            })
            .collect(),
    )
}

fn fields_to_csv(fields: &[(&str, Field)]) -> String {
    let mut out = String::from("field,value\n");
    for (key, field) in fields {
        match field {
            Field::Uint(u) => out.push_str(&format!("{key},{u}\n")),
            Field::Float(f) => out.push_str(&format!("{key},{}\n", fmt_float(*f))),
            Field::Bool(b) => out.push_str(&format!("{key},{b}\n")),
            Field::Text(s) => out.push_str(&format!("{key},{s}\n")),
            Field::FloatList(v) => {
                for (i, &f) in v.iter().enumerate() {
                    out.push_str(&format!("{key}_{i},{}\n", fmt_float(f)));
                }
            }
            Field::Missing => out.push_str(&format!("{key},\n")),
        }
    }
    out
}

fn emit_fields(fields: &[(&str, Field)], format: Format) -> String {
    match format {
        Format::Json => {
            let mut text = render(&fields_to_json(fields));
            text.push('\n');
            text
        }
        Format::Csv => fields_to_csv(fields),
    }
}

fn run_analyze(args: &AnalyzeArgs, format: Format) -> Result<Outcome> {
    let p = load_chain(&args.input)?;
    let mut fields: Vec<(&str, Field)> = vec![
        ("n", Field::Uint(p.n() as u64)),
        ("symmetric", Field::Bool(p.is_symmetric())),
        ("ergodic", Field::Bool(p.is_ergodic())),
        (
            "ergodicity_coefficient",
            Field::Float(p.ergodicity_coefficient()),
        ),
        ("min_entry", Field::Float(min_entry(&p))),
    ];
    if p.is_symmetric() {
        let spectrum = p.spectral_summary()?;
        fields.push(("gap", Field::Float(spectrum.gap)));
        fields.push(("eigenvalues", Field::FloatList(spectrum.eigenvalues)));
    } else {
        fields.push(("gap", Field::Missing));
        fields.push(("eigenvalues", Field::Missing));
    }
    if p.is_ergodic() {
        let pi = p.stationary_distribution()?;
        fields.push(("balance_residual", Field::Float(pi.balance_residual(&p))));
        fields.push(("stationary", Field::FloatList(pi.weights().to_vec())));
    } else {
        fields.push(("balance_residual", Field::Missing));
        fields.push(("stationary", Field::Missing));
    }
    Ok(Outcome::clean(emit_fields(&fields, format)))
}

fn noise_fields<'a>(spec: &NoiseSpec, e: &Perturbation) -> Vec<(&'a str, Field)> {
    let mut fields: Vec<(&str, Field)> = Vec::new();
    match spec.kind {
        NoiseKind::Truncate { bits } => {
            fields.push(("kind", Field::Text("truncate".into())));
            fields.push(("bits", Field::Uint(bits as u64)));
            fields.push(("magnitude", Field::Missing));
            fields.push(("seed", Field::Missing));
        }
        NoiseKind::Random { magnitude } => {
            fields.push(("kind", Field::Text("random".into())));
            fields.push(("bits", Field::Missing));
            fields.push(("magnitude", Field::Float(magnitude)));
            fields.push(("seed", Field::Uint(spec.seed)));
        }
    }
    fields.push(("noise_l2", Field::Float(e.norm_l2())));
    fields.push(("noise_linf", Field::Float(e.norm_linf())));
    fields
}

fn run_perturb(args: &PerturbArgs, format: Format) -> Result<Outcome> {
    let p = load_chain(&args.input)?;
    let spec = args
        .noise
        .resolve()?
        .ok_or_else(|| Error::Parse("perturb requires --noise".into()))?;
    let (q, e) = spec.apply(&p)?;

    let mut fields: Vec<(&str, Field)> = vec![("n", Field::Uint(p.n() as u64))];
    fields.extend(noise_fields(&spec, &e));
    fields.push(("q_symmetric", Field::Bool(q.is_symmetric())));
    fields.push(("q_ergodic", Field::Bool(q.is_ergodic())));
    match &args.save_matrix {
        Some(path) => {
            write_text(path, &matrix_to_text(q.matrix()))?;
            fields.push(("saved", Field::Text(path.display().to_string())));
        }
        None => fields.push(("saved", Field::Missing)),
    }
    Ok(Outcome::clean(emit_fields(&fields, format)))
}

fn run_quantize(args: &QuantizeArgs, format: Format) -> Result<Outcome> {
    let p = load_chain(&args.input)?;
    let walk = build_walk_limited(&p, args.walk_cap)?;

    let mut fields: Vec<(&str, Field)> = vec![
        ("n", Field::Uint(walk.n() as u64)),
        ("dim", Field::Uint(walk.dim() as u64)),
        (
            "orthogonality_defect",
            Field::Float(walk.orthogonality_defect()),
        ),
    ];

    if args.phases {
        if walk.dim() > PHASES_DIM_LIMIT {
            return Err(Error::DimensionLimit {
                dim: walk.dim(),
                limit: PHASES_DIM_LIMIT,
            });
        }
        fields.push(("phases", Field::FloatList(walk.eigenphases())));
        fields.push(("expected_phases", Field::FloatList(walk.expected_phases())));
        fields.push((
            "phase_defect",
            Field::Float(walk.phase_correspondence_defect()),
        ));
    }

    let marked = args.marked.resolve(p.n())?;
    let curve = match &marked {
        Some(set) => {
            let part = mark(&p, set)?;
            fields.push((
                "marked",
                Field::Text(
                    set.iter()
                        .map(|i| i.to_string())
                        .collect::<Vec<_>>()
                        .join(" "),
                ),
            ));
            fields.push(("epsilon", Field::Float(part.epsilon())));
            fields.push(("leak_norm", Field::Float(leak_norm(&part))));
            match classical_hitting_proxy(&part) {
                Ok(classical) => {
                    fields.push(("classical_hitting_proxy", Field::Float(classical)));
                    fields.push(("hitting_proxy", Field::Float(hitting_proxy(&part)?)));
                }
                Err(Error::SaturatedLeak { .. }) => {
                    fields.push(("classical_hitting_proxy", Field::Missing));
                    fields.push(("hitting_proxy", Field::Missing));
                }
                Err(err) => return Err(err),
            }
            if args.steps > 0 {
                Some(simulate_absorption(&part, args.steps, args.walk_cap)?)
            } else {
                None
            }
        }
        None => {
            if args.steps > 0 {
                return Err(Error::Parse(
                    "--steps simulates absorption and needs --marked or --marked-frac".into(),
                ));
            }
            None
        }
    };

    // A curve dominates the output: CSV becomes plot-ready step,value
    // rows, JSON nests the curve next to the scalar fields.
    let text = match (format, curve) {
        (Format::Csv, Some(curve)) => curve_csv(&curve),
        (Format::Json, Some(curve)) => {
            let mut json = match fields_to_json(&fields) {
                Json::Object(entries) => entries,
                _ => unreachable!("fields always form an object"),
            };
            json.push(("absorption".into(), curve_json(&curve)));
            let mut text = render(&Json::Object(json));
            text.push('\n');
            text
        }
        (format, None) => emit_fields(&fields, format),
    };
    Ok(Outcome::clean(text))
}

/// Errors that mean "this check does not apply here", never "the run is
/// broken": the verify command reports them as skips.
fn skip_reason(err: &Error) -> Option<String> {
    match err {
        Error::NotSymmetric { .. }
        | Error::NotErgodic
        | Error::GapDominatedByNoise { .. }
        | Error::SaturatedLeak { .. }
        | Error::ErgodicCoefficientOne => Some(err.to_string()),
        _ => None,
    }
}

fn run_verify(args: &VerifyArgs, format: Format) -> Result<Outcome> {
    let p = load_chain(&args.input)?;
    let noise = args.noise.resolve()?;
    let (q, e) = match (&args.compare, noise) {
        (Some(path), None) => {
            let q = load_chain(path)?;
            let e = decompose(&q, &p)?;
            (q, e)
        }
        (None, Some(spec)) => spec.apply(&p)?,
        (Some(_), Some(_)) => {
            return Err(Error::Parse(
                "pass either --compare or --noise, not both".into(),
            ));
        }
        (None, None) => {
            return Err(Error::Parse("verify needs --compare or --noise".into()));
        }
    };
    let marked = args.marked.resolve(p.n())?;

    let mut reports: Vec<BoundReport> = Vec::new();
    let mut skipped: Vec<(String, String)> = Vec::new();
    let mut record = |name: &str, outcome: Result<BoundReport>| -> Result<()> {
        match outcome {
            Ok(report) => {
                reports.push(report);
                Ok(())
            }
            Err(err) => match skip_reason(&err) {
                Some(reason) => {
                    skipped.push((name.to_string(), reason));
                    Ok(())
                }
                None => Err(err),
            },
        }
    };

    record("weyl", check_weyl(&p, &q))?;
    record("gap_sandwich", check_gap_sandwich(&p, &q))?;
    if let Some(set) = &marked {
        record("interlacing", check_interlacing(&e, set))?;
        record("leak_q1", check_leak_q1(&p, &q, set))?;
        record("hitting", check_hitting(&p, &q, set))?;
    }
    record("tv", check_tv_bound(&p, &q))?;

    let violations = reports.iter().any(|r| !r.pass);
    let text = match format {
        Format::Json => {
            let json = Json::Object(vec![
                (
                    "reports".into(),
                    Json::Array(reports.iter().map(bound_report_json).collect()),
                ),
                (
                    "skipped".into(),
                    Json::Array(
                        skipped
                            .iter()
                            .map(|(id, reason)| {
                                Json::Object(vec![
                                    ("bound_id".into(), Json::str(id.clone())),
                                    ("reason".into(), Json::str(reason.clone())),
                                ])
                            })
                            .collect(),
                    ),
                ),
                (
                    "violations".into(),
                    Json::Uint(reports.iter().filter(|r| !r.pass).count() as u64),
                ),
            ]);
            let mut text = render(&json);
            text.push('\n');
            text
        }
        Format::Csv => bound_reports_csv(&reports),
    };
    Ok(Outcome { text, violations })
}

fn run_sweep(args: &SweepArgs, format: Format) -> Result<Outcome> {
    let (n_min, n_max) = match args.n {
        Some(n) => (n, n),
        None => (args.n_min, args.n_max),
    };
    if n_min > n_max {
        return Err(Error::Parse(format!(
            "--n-min {n_min} exceeds --n-max {n_max}"
        )));
    }
    let spec = SweepSpec {
        n_min,
        n_max,
        trials: args.trials,
        magnitude: args.magnitude,
        seed: args.seed,
        cap_to_half_gap: args.cap_to_half_gap,
        general_chains: args.general,
    };
    let summary = sweep(&spec)?;
    let violations = summary.violations > 0;
    let text = match format {
        Format::Json => {
            let mut text = render(&sweep_summary_json(&summary));
            text.push('\n');
            text
        }
        Format::Csv => sweep_summary_csv(&summary),
    };
    Ok(Outcome { text, violations })
}

fn run_sample(args: &SampleArgs, format: Format) -> Result<Outcome> {
    let q = load_chain(&args.input)?;
    let seq = build_sequence(&q, args.steps)?;
    let sample = emulate_sampling(&seq, args.eta, args.seed)?;

    let report = match &args.compare {
        Some(path) => {
            let p = load_chain(path)?;
            Some(verify_triangle(&p, &q, &sample)?)
        }
        None => None,
    };

    let mut fields: Vec<(&str, Field)> = vec![
        ("n", Field::Uint(q.n() as u64)),
        ("steps", Field::Uint(seq.steps() as u64)),
        ("eta", Field::Float(sample.eta())),
        ("seed", Field::Uint(args.seed)),
        ("achieved_tv", Field::Float(sample.achieved_tv())),
        ("min_overlap", Field::Float(seq.min_overlap())),
        ("overlaps", Field::FloatList(seq.overlaps().to_vec())),
        (
            "gaps",
            seq.gaps()
                .map(|g| Field::FloatList(g.to_vec()))
                .unwrap_or(Field::Missing),
        ),
        (
            "target",
            Field::FloatList(sample.target().weights().to_vec()),
        ),
        (
            "output",
            Field::FloatList(sample.output().weights().to_vec()),
        ),
    ];
    for warning in seq.warnings() {
        fields.push(("warning", Field::Text(warning.clone())));
    }

    let violations = report.as_ref().is_some_and(|r| !r.pass);
    let text = match format {
        Format::Json => {
            let mut entries = match fields_to_json(&fields) {
                Json::Object(entries) => entries,
                _ => unreachable!("fields always form an object"),
            };
            entries.push((
                "report".into(),
                report.as_ref().map_or(Json::Null, bound_report_json),
            ));
            let mut text = render(&Json::Object(entries));
            text.push('\n');
            text
        }
        Format::Csv => match &report {
            Some(r) => bound_reports_csv(std::slice::from_ref(r)),
            None => fields_to_csv(&fields),
        },
    };
    Ok(Outcome { text, violations })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_temp(name: &str, text: &str) -> PathBuf {
        let dir = std::env::temp_dir().join("walkbound-cli-unit");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join(name);
        std::fs::write(&path, text).unwrap();
        path
    }

    fn parse(args: &[&str]) -> Cli {
        Cli::try_parse_from(args).unwrap()
    }

    #[test]
    fn analyze_reports_symmetric_spectral_data() {
        let path = write_temp("sym.mat", "2\n0.7 0.3\n0.3 0.7\n");
        let cli = parse(&["walkbound", "analyze", "--input", path.to_str().unwrap()]);
        let outcome = execute(&cli).unwrap();
        assert!(!outcome.violations);
        let parsed: serde_json::Value = serde_json::from_str(&outcome.text).unwrap();
        assert_eq!(parsed["n"], 2);
        assert_eq!(parsed["symmetric"], true);
        assert!((parsed["gap"].as_f64().unwrap() - 0.6).abs() < 1e-12);
        assert_eq!(parsed["stationary"].as_array().unwrap().len(), 2);
    }

    #[test]
    fn analyze_csv_and_json_agree_numerically() {
        let path = write_temp("asym.mat", "2\n0.75 0.25\n0.5 0.5\n");
        let j = execute(&parse(&[
            "walkbound",
            "analyze",
            "--input",
            path.to_str().unwrap(),
        ]))
        .unwrap();
        let c = execute(&parse(&[
            "walkbound",
            "analyze",
            "--input",
            path.to_str().unwrap(),
            "--format",
            "csv",
        ]))
        .unwrap();
        let parsed: serde_json::Value = serde_json::from_str(&j.text).unwrap();
        let tau = parsed["ergodicity_coefficient"].as_f64().unwrap();
        let csv_tau: f64 = c
            .text
            .lines()
            .find(|l| l.starts_with("ergodicity_coefficient,"))
            .unwrap()
            .split(',')
            .nth(1)
            .unwrap()
            .parse()
            .unwrap();
        assert_eq!(tau, csv_tau);
        // Asymmetric input: spectral fields are absent, not fabricated.
        assert!(parsed["gap"].is_null());
    }

    #[test]
    fn noise_flags_are_cross_checked() {
        let args = NoiseArgs {
            noise: None,
            bits: Some(8),
            magnitude: None,
            seed: 0,
        };
        assert!(args.resolve().is_err());
        let args = NoiseArgs {
            noise: Some(NoiseModel::Trunc),
            bits: None,
            magnitude: None,
            seed: 0,
        };
        assert!(args.resolve().is_err());
        let args = NoiseArgs {
            noise: Some(NoiseModel::Rand),
            bits: None,
            magnitude: Some(0.05),
            seed: 3,
        };
        assert!(matches!(
            args.resolve().unwrap(),
            Some(NoiseSpec {
                kind: NoiseKind::Random { .. },
                seed: 3
            })
        ));
    }

    #[test]
    fn marked_fraction_picks_the_tail() {
        let args = MarkedArgs {
            marked: None,
            marked_frac: Some(0.25),
        };
        assert_eq!(args.resolve(4).unwrap(), Some(vec![3]));
        let args = MarkedArgs {
            marked: None,
            marked_frac: Some(1.0),
        };
        // Clamped to keep at least one unmarked state.
        assert_eq!(args.resolve(4).unwrap(), Some(vec![1, 2, 3]));
        let args = MarkedArgs {
            marked: Some(vec![0, 2]),
            marked_frac: None,
        };
        assert_eq!(args.resolve(4).unwrap(), Some(vec![0, 2]));
    }

    #[test]
    fn verify_runs_the_full_battery_on_the_uniform_chain() {
        let path = write_temp(
            "uniform4.mat",
            "4\n0.25 0.25 0.25 0.25\n0.25 0.25 0.25 0.25\n0.25 0.25 0.25 0.25\n0.25 0.25 0.25 0.25\n",
        );
        let cli = parse(&[
            "walkbound",
            "verify",
            "--input",
            path.to_str().unwrap(),
            "--noise",
            "rand",
            "--magnitude",
            "0.05",
            "--seed",
            "42",
            "--marked",
            "3",
        ]);
        let outcome = execute(&cli).unwrap();
        assert!(!outcome.violations);
        let parsed: serde_json::Value = serde_json::from_str(&outcome.text).unwrap();
        let ids: Vec<&str> = parsed["reports"]
            .as_array()
            .unwrap()
            .iter()
            .map(|r| r["bound_id"].as_str().unwrap())
            .collect();
        assert_eq!(
            ids,
            [
                "weyl",
                "gap_sandwich",
                "interlacing",
                "leak_q1",
                "hitting",
                "tv"
            ]
        );
        assert_eq!(parsed["violations"], 0);
    }

    #[test]
    fn verify_skips_symmetric_checks_on_asymmetric_input() {
        let p = write_temp("p.mat", "2\n0.75 0.25\n0.5 0.5\n");
        let q = write_temp("q.mat", "2\n0.7 0.3\n0.5 0.5\n");
        let cli = parse(&[
            "walkbound",
            "verify",
            "--input",
            p.to_str().unwrap(),
            "--compare",
            q.to_str().unwrap(),
        ]);
        let outcome = execute(&cli).unwrap();
        let parsed: serde_json::Value = serde_json::from_str(&outcome.text).unwrap();
        let ids: Vec<&str> = parsed["reports"]
            .as_array()
            .unwrap()
            .iter()
            .map(|r| r["bound_id"].as_str().unwrap())
            .collect();
        assert_eq!(ids, ["tv"]);
        assert_eq!(parsed["skipped"].as_array().unwrap().len(), 2);
    }

    #[test]
    fn verify_rejects_conflicting_sources() {
        let p = write_temp("conflict.mat", "2\n0.7 0.3\n0.3 0.7\n");
        let cli = parse(&[
            "walkbound",
            "verify",
            "--input",
            p.to_str().unwrap(),
            "--compare",
            p.to_str().unwrap(),
            "--noise",
            "rand",
            "--magnitude",
            "0.01",
        ]);
        assert!(matches!(execute(&cli), Err(Error::Parse(_))));
        let cli = parse(&["walkbound", "verify", "--input", p.to_str().unwrap()]);
        assert!(matches!(execute(&cli), Err(Error::Parse(_))));
    }

    #[test]
    fn quantize_rejects_steps_without_marking() {
        let p = write_temp("qz.mat", "2\n0.5 0.5\n0.5 0.5\n");
        let cli = parse(&[
            "walkbound",
            "quantize",
            "--input",
            p.to_str().unwrap(),
            "--steps",
            "4",
        ]);
        assert!(matches!(execute(&cli), Err(Error::Parse(_))));
    }

    #[test]
    fn quantize_csv_with_steps_is_a_curve() {
        let p = write_temp("qz2.mat", "2\n0.5 0.5\n0.5 0.5\n");
        let cli = parse(&[
            "walkbound",
            "quantize",
            "--input",
            p.to_str().unwrap(),
            "--marked",
            "1",
            "--steps",
            "2",
            "--format",
            "csv",
        ]);
        let outcome = execute(&cli).unwrap();
        let lines: Vec<&str> = outcome.text.lines().collect();
        assert_eq!(lines[0], "step,value");
        assert_eq!(lines.len(), 4);
        assert!(lines[1].starts_with("0,0.0"));
    }

    #[test]
    fn sweep_summary_end_to_end() {
        let cli = parse(&[
            "walkbound",
            "sweep",
            "--n",
            "4",
            "--trials",
            "5",
            "--magnitude",
            "0.02",
            "--seed",
            "1",
        ]);
        let outcome = execute(&cli).unwrap();
        assert!(!outcome.violations);
        let parsed: serde_json::Value = serde_json::from_str(&outcome.text).unwrap();
        assert_eq!(parsed["trials"], 5);
        assert_eq!(parsed["violations"], 0);
        assert!(parsed["per_bound"]["weyl"]["checks"].as_u64().unwrap() == 5);
    }

    #[test]
    fn sample_with_compare_emits_a_bound_report() {
        let p = write_temp("sp.mat", "2\n0.75 0.25\n0.5 0.5\n");
        let q = write_temp("sq.mat", "2\n0.7 0.3\n0.5 0.5\n");
        let cli = parse(&[
            "walkbound",
            "sample",
            "--input",
            q.to_str().unwrap(),
            "--steps",
            "4",
            "--eta",
            "0.01",
            "--seed",
            "9",
            "--compare",
            p.to_str().unwrap(),
        ]);
        let outcome = execute(&cli).unwrap();
        assert!(!outcome.violations);
        let parsed: serde_json::Value = serde_json::from_str(&outcome.text).unwrap();
        assert_eq!(parsed["report"]["bound_id"], "quantum_sample");
        assert!(parsed["achieved_tv"].as_f64().unwrap() <= 0.01);
        assert_eq!(parsed["overlaps"].as_array().unwrap().len(), 4);
    }
}
