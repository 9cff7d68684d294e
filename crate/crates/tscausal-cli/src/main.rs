//! `bench`: command-line front end for the causal discovery benchmark.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use tscausal::align::{self, AlignmentSpec, Strategy, DEFAULT_MAX_DELAY_MS};
use tscausal::data::{diagnose, ingest_csv, serialize_csv, ColumnSpec};
use tscausal::discovery::{discover, DiscoveryConfig, MethodId};
use tscausal::eval::{edge_confusion, f1};
use tscausal::graphs::SummaryCausalGraph;
use tscausal::runner::{run, ExperimentConfig};
use tscausal::sim::{corrupt, simulate, CorruptionSpec, SemSpec};

#[derive(Parser)]
#[command(
    name = "bench",
    about = "Causal discovery benchmark for IT-monitoring time series",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a full experiment from a config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Override the config's significance threshold.
        #[arg(long)]
        alpha: Option<f64>,
        /// Override the config's worker-pool size.
        #[arg(long)]
        parallelism: Option<usize>,
        /// Override the config's output directory.
        #[arg(long)]
        output_dir: Option<PathBuf>,
        /// Override the config's conditioning-set cap.
        #[arg(long)]
        max_cond_size: Option<usize>,
        /// Write runtime_ms as 0 for byte-reproducible artifacts.
        #[arg(long)]
        stable_runtime: bool,
    },
    /// Simulate a dataset from a model spec and write it as CSV.
    Simulate {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run one method on one CSV dataset and score it against a truth graph.
    Discover {
        #[arg(long)]
        csv: PathBuf,
        #[arg(long)]
        truth: PathBuf,
        #[arg(long)]
        method: String,
        #[arg(long)]
        gamma_max: Option<usize>,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2))]
        strategy: Option<u8>,
        /// Directory for the emitted graph files.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Score an inferred summary graph against a ground-truth graph.
    Eval {
        #[arg(long)]
        truth: PathBuf,
        #[arg(long)]
        inferred: PathBuf,
        #[arg(long)]
        include_self_loops: bool,
    },
    /// Print per-series diagnostics for a CSV dataset.
    Diagnose {
        #[arg(long)]
        csv: PathBuf,
        /// Minimum run length of identical values reported as sleeping.
        #[arg(long, default_value_t = 10)]
        sleep_min_len: usize,
    },
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Run {
            config,
            alpha,
            parallelism,
            output_dir,
            max_cond_size,
            stable_runtime,
        } => cmd_run(&config, alpha, parallelism, output_dir, max_cond_size, stable_runtime),
        Command::Simulate { spec, out } => cmd_simulate(&spec, &out),
        Command::Discover {
            csv,
            truth,
            method,
            gamma_max,
            alpha,
            strategy,
            out_dir,
        } => cmd_discover(
            &csv,
            &truth,
            &method,
            gamma_max,
            alpha,
            strategy.unwrap_or(1),
            out_dir,
        ),
        Command::Eval {
            truth,
            inferred,
            include_self_loops,
        } => cmd_eval(&truth, &inferred, include_self_loops),
        Command::Diagnose { csv, sleep_min_len } => cmd_diagnose(&csv, sleep_min_len),
    }
}

fn cmd_run(
    config_path: &Path,
    alpha: Option<f64>,
    parallelism: Option<usize>,
    output_dir: Option<PathBuf>,
    max_cond_size: Option<usize>,
    stable_runtime: bool,
) -> Result<()> {
    let text = fs::read_to_string(config_path)
        .with_context(|| format!("reading config {}", config_path.display()))?;
    let base = config_path.parent().unwrap_or(Path::new("."));
    let mut config = ExperimentConfig::from_toml(&text, base)?;
    if let Some(a) = alpha {
        config.alpha = a;
    }
    if let Some(p) = parallelism {
        config.parallelism = p.max(1);
    }
    if let Some(dir) = output_dir {
        config.output_dir = dir;
    }
    if let Some(m) = max_cond_size {
        config.max_cond_size = Some(m);
    }
    if stable_runtime {
        config.stable_runtime = true;
    }
    let report = run(&config)?;
    print!("{}", report.to_text());
    println!(
        "report written to {}",
        config.output_dir.join("report.csv").display()
    );
    let failures = report.rows.iter().filter(|r| r.error.is_some()).count();
    if failures > 0 {
        eprintln!("{failures} cell(s) failed; see run_log.jsonl");
    }
    Ok(())
}

fn cmd_simulate(spec_path: &Path, out: &Path) -> Result<()> {
    let text = fs::read_to_string(spec_path)
        .with_context(|| format!("reading spec {}", spec_path.display()))?;
    let value: serde_json::Value = serde_json::from_str(&text)?;
    let spec = SemSpec::from_json(&value)?;
    let panel = simulate(&spec)?;
    // An optional corruption block turns the clean panel into raw,
    // possibly misaligned series.
    let set = match value.get("corruption") {
        Some(c) => {
            let corruption = parse_corruption(c)?;
            let seed = value
                .get("corruption_seed")
                .and_then(serde_json::Value::as_u64)
                .unwrap_or(spec.seed);
            corrupt(&panel, &corruption, seed)?
        }
        None => panel.to_series_set(),
    };
    let file = fs::File::create(out)?;
    serialize_csv(&set, file)?;
    println!(
        "wrote {} series x {} rows to {}",
        set.len(),
        panel.n_rows(),
        out.display()
    );
    Ok(())
}

fn parse_corruption(v: &serde_json::Value) -> Result<CorruptionSpec> {
    let mut spec = CorruptionSpec::default();
    if let Some(map) = v.get("resample_period_ms").and_then(|m| m.as_object()) {
        for (name, period) in map {
            let p = period
                .as_i64()
                .with_context(|| format!("resample period for '{name}'"))?;
            spec.resample_period_ms.insert(name.clone(), p);
        }
    }
    if let Some(j) = v.get("timestamp_jitter_ms").and_then(|x| x.as_i64()) {
        spec.timestamp_jitter_ms = j;
    }
    if let Some(r) = v.get("missing_rate").and_then(|x| x.as_f64()) {
        spec.missing_rate = r;
    }
    if let Some(list) = v.get("sleeping").and_then(|x| x.as_array()) {
        for w in list {
            spec.sleeping.push(tscausal::sim::SleepWindow {
                series: w
                    .get("series")
                    .and_then(|x| x.as_str())
                    .context("sleeping window needs a series")?
                    .to_string(),
                start_row: w
                    .get("start_row")
                    .and_then(|x| x.as_u64())
                    .context("sleeping window needs start_row")? as usize,
                len: w
                    .get("len")
                    .and_then(|x| x.as_u64())
                    .context("sleeping window needs len")? as usize,
            });
        }
    }
    Ok(spec)
}

#[allow(clippy::too_many_arguments)]
fn cmd_discover(
    csv: &Path,
    truth: &Path,
    method: &str,
    gamma_max: Option<usize>,
    alpha: Option<f64>,
    strategy: u8,
    out_dir: Option<PathBuf>,
) -> Result<()> {
    let method: MethodId = method.parse()?;
    let set = ingest_csv(fs::File::open(csv)?, &ColumnSpec::default())?;
    let truth_graph = SummaryCausalGraph::parse(&fs::read_to_string(truth)?)?;
    let spec = AlignmentSpec {
        strategy: if strategy == 2 {
            Strategy::Strategy2
        } else {
            Strategy::Strategy1
        },
        target_period_ms: None,
        interpolate: true,
    };
    let panel = align::align(&set, &spec)?;
    let gamma = gamma_max
        .unwrap_or_else(|| align::gamma_max_rule(panel.period_ms(), DEFAULT_MAX_DELAY_MS));
    let cfg = DiscoveryConfig {
        gamma_max: gamma,
        alpha: alpha.unwrap_or(0.05),
        max_cond_size: None,
    };
    let outcome = discover(method, &panel, &cfg)?;
    let confusion = edge_confusion(&truth_graph, &outcome.summary, false)?;

    println!("method: {method}  gamma_max: {gamma}  alpha: {}", cfg.alpha);
    print!("{}", outcome.summary.to_edge_list());
    println!(
        "tp {}  fp {}  fn {}  f1 {:.4}",
        confusion.true_positives,
        confusion.false_positives,
        confusion.false_negatives,
        f1(&confusion)
    );
    if let Some(dir) = out_dir {
        fs::create_dir_all(&dir)?;
        let stem = format!("{method}_g{gamma}");
        fs::write(
            dir.join(format!("{stem}.summary.txt")),
            outcome.summary.to_edge_list(),
        )?;
        fs::write(
            dir.join(format!("{stem}.native.json")),
            outcome.native.to_json().to_string(),
        )?;
        fs::write(dir.join(format!("{stem}.dot")), outcome.native.to_dot())?;
        println!("graphs written to {}", dir.display());
    }
    Ok(())
}

fn cmd_eval(truth: &Path, inferred: &Path, include_self_loops: bool) -> Result<()> {
    let truth = SummaryCausalGraph::parse(&fs::read_to_string(truth)?)?;
    let inferred = SummaryCausalGraph::parse(&fs::read_to_string(inferred)?)?;
    let confusion = edge_confusion(&truth, &inferred, include_self_loops)?;
    println!(
        "tp {}  fp {}  fn {}  f1 {:.4}",
        confusion.true_positives,
        confusion.false_positives,
        confusion.false_negatives,
        f1(&confusion)
    );
    Ok(())
}

fn cmd_diagnose(csv: &Path, sleep_min_len: usize) -> Result<()> {
    if sleep_min_len < 2 {
        bail!("sleep-min-len must be at least 2");
    }
    let set = ingest_csv(fs::File::open(csv)?, &ColumnSpec::default())?;
    let diagnostics = diagnose(&set, sleep_min_len);
    println!(
        "{:<20} {:>12} {:>9} {:>16} {:>10} {:>9}",
        "series", "period_ms", "points", "sleep_ranges", "missing", "max_run"
    );
    for d in &diagnostics {
        let points = set.series(&d.name).map_or(0, |p| p.len());
        let period = d
            .sampling_period_estimate
            .map_or_else(|| "-".to_string(), |p| p.to_string());
        let ranges = if d.sleeping_intervals.is_empty() {
            "-".to_string()
        } else {
            d.sleeping_intervals
                .iter()
                .map(|(s, e)| format!("[{s},{e})"))
                .collect::<Vec<_>>()
                .join(" ")
        };
        println!(
            "{:<20} {:>12} {:>9} {:>16} {:>10} {:>9}",
            d.name, period, points, ranges, d.missing_count, d.max_consecutive_missing
        );
    }
    Ok(())
}
