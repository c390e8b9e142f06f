//! `gml`: command-line front end.
//!
//! Exit codes: 0 success, 1 usage, 2 configuration or input, 3 I/O,
//! 4 cap or domain violation, 5 oracle mismatch.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use gml_core::bounds::{
    agnostic_sample_complexity, epsilon_n, gml_penalty, uc_sample_complexity, ClassSize, CustomWeights, TailRule,
    WeightScheme,
};
use gml_core::experiment::{
    emit_report, oracle_sweep, run_consistency, run_violation, ExperimentConfig, ReportFormat, RunOptions,
};
use gml_core::learner::{
    gml_select, holdout_select, risk_to_f64, unpenalized_union_erm, LearnerConfig, NRange, SelectionResult,
};
use gml_core::measure::{premeasure, shrinking_intersection_measures};
use gml_core::synth::DistributionSpec;
use gml_core::{dataset, DepthCap, Error, Hypothesis};

#[derive(Parser)]
#[command(
    name = "gml",
    version,
    about = "Penalized model selection over bit-prefix hypothesis classes"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate penalties, accuracies and sample complexities.
    Bounds(BoundsArgs),
    /// Print the exact premeasure of a hypothesis.
    Measure(MeasureArgs),
    /// Draw a JSON Lines dataset from a distribution spec.
    Synth(SynthArgs),
    /// Select a hypothesis from a JSON Lines dataset.
    Select(SelectArgs),
    /// Check fast ERM and deviation against exhaustive enumeration.
    OracleCheck(OracleArgs),
    /// Run the Monte Carlo harness from a JSON config.
    Experiment(ExperimentArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum TableFormat {
    Table,
    Csv,
}

#[derive(Args)]
struct BoundsArgs {
    /// Class indices (comma-separated).
    #[arg(long, value_delimiter = ',', required = true)]
    n: Vec<u32>,
    /// Sample sizes (comma-separated).
    #[arg(long, value_delimiter = ',', required = true)]
    m: Vec<u64>,
    #[arg(long, default_value_t = 0.1)]
    delta: f64,
    /// Accuracy for the sample-complexity columns.
    #[arg(long, default_value_t = 0.1)]
    epsilon: f64,
    /// `harmonic`, `geometric`, or a path to a custom weight table.
    #[arg(long, default_value = "geometric")]
    weights: String,
    #[arg(long, value_enum, default_value_t = TableFormat::Table)]
    format: TableFormat,
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct MeasureArgs {
    /// Hypothesis in `n:c1,c2,...` form.
    #[arg(long)]
    hypothesis: Option<String>,
    /// Print the measures of the first K odd-position intersections.
    #[arg(long, value_name = "K")]
    shrinking: Option<u32>,
}

#[derive(Args)]
struct SynthArgs {
    /// Distribution spec (JSON).
    #[arg(long)]
    spec: PathBuf,
    #[arg(long)]
    m: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum RuleArg {
    Gml,
    UnionErm,
    Holdout,
}

#[derive(Args)]
struct SelectArgs {
    /// JSON Lines dataset.
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value_t = 0.1)]
    delta: f64,
    #[arg(long, default_value = "geometric")]
    weights: String,
    #[arg(long)]
    n_min: Option<u32>,
    #[arg(long)]
    n_max: Option<u32>,
    #[arg(long, value_enum, default_value_t = RuleArg::Gml)]
    rule: RuleArg,
    /// Training fraction for `--rule holdout`.
    #[arg(long, default_value_t = 0.7)]
    holdout_ratio: f64,
    /// Label for cells with no training examples.
    #[arg(long, default_value_t = 0, value_parser = clap::value_parser!(u8).range(0..=1))]
    unoccupied_label: u8,
    /// Also write the per-n trace as CSV.
    #[arg(long)]
    trace_csv: Option<PathBuf>,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long)]
    n: u32,
    #[arg(long, default_value_t = 100)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Largest sample size drawn.
    #[arg(long, default_value_t = 50)]
    max_m: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum, PartialEq)]
enum KindArg {
    Both,
    Violation,
    Consistency,
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(long)]
    config: PathBuf,
    /// Output directory; created if missing.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
    format: FormatArg,
    /// Which reports to produce.
    #[arg(long, value_enum, default_value_t = KindArg::Both)]
    kind: KindArg,
    /// Cross-check every deviation against brute force for n <= 3.
    #[arg(long)]
    paranoid: bool,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
}

/// Custom weight table file: `{"schema":1,"table":[0.5,0.25],"tail":{"geometric":0.5}}`.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct WeightsFile {
    #[serde(default = "one")]
    schema: u32,
    table: Vec<f64>,
    tail: TailRule,
}

fn one() -> u32 {
    1
}

fn load_weights(arg: &str) -> Result<WeightScheme, Error> {
    match arg {
        "harmonic" => Ok(WeightScheme::Harmonic),
        "geometric" => Ok(WeightScheme::Geometric),
        path => {
            let path = Path::new(path);
            let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
                path: path.to_path_buf(),
                source,
            })?;
            let file: WeightsFile = serde_json::from_str(&text).map_err(|source| Error::Json {
                path: path.to_path_buf(),
                source,
            })?;
            if file.schema != gml_core::SCHEMA_VERSION {
                return Err(Error::Config(format!("unsupported weights schema {}", file.schema)));
            }
            Ok(WeightScheme::Custom(CustomWeights::new(file.table, file.tail)?))
        }
    }
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Io { .. } => 3,
        Error::Config(_) | Error::Parse(_) | Error::Json { .. } | Error::InvalidWeights(_) => 2,
        Error::OracleMismatch(_) => 5,
        _ => 4,
    }
}

fn write_output(path: Option<&Path>, content: &[u8]) -> Result<(), Error> {
    match path {
        Some(p) => std::fs::write(p, content).map_err(|source| Error::Io {
            path: p.to_path_buf(),
            source,
        }),
        None => std::io::stdout().write_all(content).map_err(|source| Error::Io {
            path: PathBuf::from("<stdout>"),
            source,
        }),
    }
}

fn bounds(args: BoundsArgs) -> Result<(), Error> {
    let weights = load_weights(&args.weights)?;
    let header = ["n", "m", "delta", "w", "penalty", "epsilon_n", "m_uc", "m_agnostic"];
    let mut rows: Vec<[String; 8]> = Vec::new();
    for &n in &args.n {
        for &m in &args.m {
            let penalty = gml_penalty(n, m, args.delta, &weights)?;
            let eps = epsilon_n(n, m, args.delta)?;
            let size = ClassSize::of_level(n);
            let (p, e) = match args.format {
                TableFormat::Table => (format!("{penalty:.6}"), format!("{:.6}", eps.value)),
                TableFormat::Csv => (format!("{penalty:.9}"), format!("{:.9}", eps.value)),
            };
            rows.push([
                n.to_string(),
                m.to_string(),
                args.delta.to_string(),
                format!("{:e}", weights.weight(n)),
                p,
                if eps.saturated { format!("{e}*") } else { e },
                uc_sample_complexity(size, args.epsilon, args.delta)?.to_string(),
                agnostic_sample_complexity(size, args.epsilon, args.delta)?.to_string(),
            ]);
        }
    }
    let mut out = String::new();
    match args.format {
        TableFormat::Csv => {
            out.push_str(&header.join(","));
            out.push('\n');
            for r in &rows {
                out.push_str(&r.join(","));
                out.push('\n');
            }
        }
        TableFormat::Table => {
            let widths: Vec<usize> = (0..header.len())
                .map(|i| {
                    rows.iter()
                        .map(|r| r[i].len())
                        .chain([header[i].len()])
                        .max()
                        .unwrap_or(0)
                })
                .collect();
            let line = |cells: &mut dyn Iterator<Item = &str>| {
                let parts: Vec<String> = cells.zip(&widths).map(|(c, w)| format!("{c:>w$}")).collect();
                parts.join("  ") + "\n"
            };
            out.push_str(&line(&mut header.iter().copied()));
            for r in &rows {
                out.push_str(&line(&mut r.iter().map(String::as_str)));
            }
            if rows.iter().any(|r| r[5].ends_with('*')) {
                out.push_str("* epsilon_n >= 1: bound is vacuous\n");
            }
        }
    }
    write_output(None, out.as_bytes())
}

fn measure(args: MeasureArgs, cap: DepthCap) -> Result<(), Error> {
    let mut out = String::new();
    if let Some(text) = args.hypothesis {
        let h: Hypothesis = text.parse()?;
        cap.check(h.depth())?;
        let p = premeasure(&h);
        out.push_str(&format!("{p}\t{}\n", p.to_f64()));
    }
    if let Some(k) = args.shrinking {
        for (i, p) in shrinking_intersection_measures(k, cap)?.into_iter().enumerate() {
            out.push_str(&format!("{}\t{p}\t{}\n", i + 1, p.to_f64()));
        }
    }
    write_output(None, out.as_bytes())
}

fn synth(args: SynthArgs) -> Result<(), Error> {
    let dist = DistributionSpec::from_path(&args.spec)?.build()?;
    let sample = dist.sample(args.m, args.seed)?;
    let mut buf = Vec::new();
    dataset::write_jsonl(&mut buf, &sample).expect("writing to memory");
    write_output(args.out.as_deref(), &buf)
}

#[derive(Serialize)]
struct TraceJson {
    n: u32,
    best_empirical_risk: String,
    penalty: f64,
    objective: f64,
}

#[derive(Serialize)]
struct SelectionJson {
    schema: u32,
    rule: String,
    m: usize,
    chosen: String,
    chosen_n: u32,
    empirical_risk: String,
    empirical_risk_value: f64,
    penalty: f64,
    objective: f64,
    per_n_trace: Vec<TraceJson>,
}

impl SelectionJson {
    fn new(r: &SelectionResult, m: usize) -> Self {
        SelectionJson {
            schema: gml_core::SCHEMA_VERSION,
            rule: r.rule.to_string(),
            m,
            chosen: r.chosen.to_string(),
            chosen_n: r.chosen_n,
            empirical_risk: r.empirical_risk.to_string(),
            empirical_risk_value: risk_to_f64(r.empirical_risk),
            penalty: r.penalty,
            objective: r.objective,
            per_n_trace: r
                .per_n_trace
                .iter()
                .map(|t| TraceJson {
                    n: t.n,
                    best_empirical_risk: t.best_empirical_risk.to_string(),
                    penalty: t.penalty,
                    objective: t.objective,
                })
                .collect(),
        }
    }
}

fn select(args: SelectArgs, cap: DepthCap) -> Result<(), Error> {
    let sample = dataset::read_jsonl(&args.data)?;
    let weights = load_weights(&args.weights)?;
    let default = NRange::default_for_sample(&sample, cap);
    let range = NRange::new(args.n_min.unwrap_or(default.min()), args.n_max.unwrap_or(default.max()))?;
    let config = LearnerConfig {
        depth_cap: cap,
        unoccupied_label: args.unoccupied_label == 1,
    };
    let result = match args.rule {
        RuleArg::Gml => gml_select(&sample, args.delta, &weights, range, &config)?,
        RuleArg::UnionErm => unpenalized_union_erm(&sample, range, &config)?,
        RuleArg::Holdout => holdout_select(&sample, args.holdout_ratio, range, &config)?,
    };
    if let Some(path) = &args.trace_csv {
        write_output(Some(path), result.trace_csv().as_bytes())?;
    }
    let mut json = serde_json::to_string_pretty(&SelectionJson::new(&result, sample.len())).expect("serializable");
    json.push('\n');
    write_output(None, json.as_bytes())
}

fn oracle_check(args: OracleArgs) -> Result<(), Error> {
    let sweep = oracle_sweep(args.n, args.samples, args.seed, args.max_m)?;
    let verdict = if sweep.passed() { "PASS" } else { "FAIL" };
    println!("{verdict} {}/{}", sweep.agreed, sweep.samples);
    if !sweep.passed() {
        return Err(Error::OracleMismatch(format!(
            "{} ERM and {} deviation mismatches",
            sweep.erm_mismatches, sweep.sup_mismatches
        )));
    }
    Ok(())
}

fn experiment(args: ExperimentArgs, cap: DepthCap) -> Result<(), Error> {
    let config = ExperimentConfig::from_path(&args.config)?;
    config.validate(cap)?;
    if args.threads == Some(0) {
        return Err(Error::Config("--threads must be at least 1".into()));
    }
    let opts = RunOptions {
        threads: args.threads,
        paranoid: args.paranoid,
        depth_cap: cap,
    };
    let format = match args.format {
        FormatArg::Csv => ReportFormat::Csv,
        FormatArg::Json => ReportFormat::Json,
    };
    std::fs::create_dir_all(&args.out).map_err(|source| Error::Io {
        path: args.out.clone(),
        source,
    })?;
    let file = |stem: &str| args.out.join(format!("{stem}.{}", format.extension()));
    if args.kind != KindArg::Consistency {
        let report = run_violation(&config, &opts)?;
        let path = file("violation");
        emit_report(&report, format, &path)?;
        eprintln!("wrote {}", path.display());
    }
    if args.kind != KindArg::Violation {
        let curve = run_consistency(&config, &opts)?;
        let path = file("consistency");
        emit_report(&curve, format, &path)?;
        eprintln!("wrote {}", path.display());
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), Error> {
    let cap = DepthCap::from_env()?;
    match cli.command {
        Command::Bounds(a) => bounds(a),
        Command::Measure(a) => measure(a, cap),
        Command::Synth(a) => synth(a),
        Command::Select(a) => select(a, cap),
        Command::OracleCheck(a) => oracle_check(a),
        Command::Experiment(a) => experiment(a, cap),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
