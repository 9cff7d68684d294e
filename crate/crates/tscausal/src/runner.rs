//! Config-driven experiment runner: ingest each dataset, align it, run the
//! requested methods over the requested maximal lags, score every summary
//! graph against the dataset's ground truth, and emit a report plus
//! per-cell graph files and a JSON-lines run log.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::Deserialize;
use serde_json::json;

use crate::align::{self, AlignmentSpec, Strategy, DEFAULT_MAX_DELAY_MS};
use crate::data::{ingest_csv, AlignedPanel, ColumnSpec};
use crate::discovery::{discover, DiscoveryConfig, MethodId};
use crate::error::{Error, Result};
use crate::eval::{edge_confusion, BenchReport, ReportRow};
use crate::graphs::SummaryCausalGraph;

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetConfig {
    pub name: String,
    pub csv_path: PathBuf,
    pub truth_path: PathBuf,
    pub strategy: Strategy,
    pub period_override_ms: Option<i64>,
    /// Maximal cause-effect delay used by the automatic gamma rule.
    pub max_delay_ms: Option<i64>,
    /// Fill missing cells after resampling (default true).
    pub interpolate: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum GammaMaxSetting {
    /// One value per dataset from the delay rule on the aligned period.
    Auto,
    Explicit(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub datasets: Vec<DatasetConfig>,
    pub methods: Vec<MethodId>,
    pub gamma_max: GammaMaxSetting,
    pub alpha: f64,
    pub output_dir: PathBuf,
    pub parallelism: usize,
    pub max_cond_size: Option<usize>,
    /// Write runtime_ms as 0 so repeated runs produce byte-identical
    /// artifacts.
    pub stable_runtime: bool,
}

#[derive(Deserialize)]
struct RawDataset {
    name: String,
    csv_path: String,
    truth_path: String,
    strategy: u8,
    period_override: Option<i64>,
    max_delay_ms: Option<i64>,
    interpolate: Option<bool>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawGamma {
    Auto(String),
    Explicit(Vec<usize>),
}

#[derive(Deserialize)]
struct RawConfig {
    datasets: Vec<RawDataset>,
    methods: Vec<String>,
    gamma_max: RawGamma,
    alpha: Option<f64>,
    output_dir: String,
    parallelism: Option<usize>,
    max_cond_size: Option<usize>,
    stable_runtime: Option<bool>,
}

impl ExperimentConfig {
    /// Parses the TOML experiment file; relative paths resolve against
    /// `base_dir` (normally the config file's directory).
    pub fn from_toml(text: &str, base_dir: &Path) -> Result<ExperimentConfig> {
        let raw: RawConfig =
            toml::from_str(text).map_err(|e| Error::ConfigParse(e.to_string()))?;
        if raw.methods.is_empty() {
            return Err(Error::InvalidConfig("methods list is empty".into()));
        }
        let methods = raw
            .methods
            .iter()
            .map(|s| s.parse())
            .collect::<Result<Vec<MethodId>>>()?;
        let gamma_max = match raw.gamma_max {
            RawGamma::Auto(s) if s == "auto" => GammaMaxSetting::Auto,
            RawGamma::Auto(s) => {
                return Err(Error::InvalidConfig(format!(
                    "gamma_max must be \"auto\" or a list, got \"{s}\""
                )))
            }
            RawGamma::Explicit(v) if v.is_empty() || v.contains(&0) => {
                return Err(Error::InvalidConfig(
                    "explicit gamma_max list must be non-empty and positive".into(),
                ))
            }
            RawGamma::Explicit(v) => GammaMaxSetting::Explicit(v),
        };
        let alpha = raw.alpha.unwrap_or(0.05);
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::InvalidConfig(format!("alpha {alpha} outside (0, 1)")));
        }
        let resolve = |p: &str| -> PathBuf {
            let path = Path::new(p);
            if path.is_absolute() {
                path.to_path_buf()
            } else {
                base_dir.join(path)
            }
        };
        let datasets = raw
            .datasets
            .into_iter()
            .map(|d| {
                let strategy = match d.strategy {
                    1 => Strategy::Strategy1,
                    2 => Strategy::Strategy2,
                    other => {
                        return Err(Error::InvalidConfig(format!(
                            "dataset '{}': strategy must be 1 or 2, got {other}",
                            d.name
                        )))
                    }
                };
                Ok(DatasetConfig {
                    name: d.name,
                    csv_path: resolve(&d.csv_path),
                    truth_path: resolve(&d.truth_path),
                    strategy,
                    period_override_ms: d.period_override,
                    max_delay_ms: d.max_delay_ms,
                    interpolate: d.interpolate.unwrap_or(true),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(ExperimentConfig {
            datasets,
            methods,
            gamma_max,
            alpha,
            output_dir: resolve(&raw.output_dir),
            parallelism: raw.parallelism.unwrap_or(1).max(1),
            max_cond_size: raw.max_cond_size,
            stable_runtime: raw.stable_runtime.unwrap_or(false),
        })
    }
}

/// Loads and aligns one dataset.
pub fn prepare_dataset(ds: &DatasetConfig) -> Result<(AlignedPanel, SummaryCausalGraph)> {
    let csv = fs::File::open(&ds.csv_path)?;
    let set = ingest_csv(csv, &ColumnSpec::default())?;
    let truth = SummaryCausalGraph::parse(&fs::read_to_string(&ds.truth_path)?)?;
    let spec = AlignmentSpec {
        strategy: ds.strategy,
        target_period_ms: ds.period_override_ms,
        interpolate: ds.interpolate,
    };
    let panel = align::align(&set, &spec)?;
    Ok((panel, truth))
}

struct Cell {
    dataset: usize,
    gamma_max: usize,
    method: MethodId,
}

struct CellOutcome {
    row: ReportRow,
    log: serde_json::Value,
}

/// Runs the whole experiment and writes `report.csv`, `report.txt`,
/// `run_log.jsonl`, and per-cell graph files under `output_dir/graphs/`.
/// A dataset that fails to load aborts only its own cells, which become
/// error rows.
pub fn run(config: &ExperimentConfig) -> Result<BenchReport> {
    if config.methods.is_empty() {
        return Err(Error::InvalidConfig("methods list is empty".into()));
    }
    let graphs_dir = config.output_dir.join("graphs");
    fs::create_dir_all(&graphs_dir)?;

    // Ingest and align each dataset once; cells share the panel.
    let prepared: Vec<std::result::Result<(AlignedPanel, SummaryCausalGraph), String>> = config
        .datasets
        .iter()
        .map(|ds| prepare_dataset(ds).map_err(|e| e.to_string()))
        .collect();

    let mut cells = Vec::new();
    for (di, ds) in config.datasets.iter().enumerate() {
        let gammas = match (&config.gamma_max, &prepared[di]) {
            (GammaMaxSetting::Explicit(v), _) => v.clone(),
            (GammaMaxSetting::Auto, Ok((panel, _))) => {
                let delay = ds.max_delay_ms.unwrap_or(DEFAULT_MAX_DELAY_MS);
                vec![align::gamma_max_rule(panel.period_ms(), delay)]
            }
            // Load failed and the rule needs the aligned period: one error
            // row per method, gamma recorded as 0.
            (GammaMaxSetting::Auto, Err(_)) => vec![0],
        };
        for gamma in gammas {
            for &method in &config.methods {
                cells.push(Cell {
                    dataset: di,
                    gamma_max: gamma,
                    method,
                });
            }
        }
    }

    let threads = std::env::var("BENCH_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .unwrap_or(config.parallelism)
        .max(1);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;

    let outcomes: Vec<CellOutcome> = pool.install(|| {
        cells
            .par_iter()
            .map(|cell| run_cell(config, cell, &prepared[cell.dataset], &graphs_dir))
            .collect()
    });

    let (rows, logs): (Vec<ReportRow>, Vec<serde_json::Value>) = outcomes
        .into_iter()
        .map(|o| (o.row, o.log))
        .unzip();
    let report = BenchReport::tabulate(rows);

    fs::write(config.output_dir.join("report.csv"), report.to_csv())?;
    fs::write(config.output_dir.join("report.txt"), report.to_text())?;
    let mut log_text = String::new();
    for entry in logs {
        log_text.push_str(&entry.to_string());
        log_text.push('\n');
    }
    fs::write(config.output_dir.join("run_log.jsonl"), log_text)?;
    Ok(report)
}

fn run_cell(
    config: &ExperimentConfig,
    cell: &Cell,
    prepared: &std::result::Result<(AlignedPanel, SummaryCausalGraph), String>,
    graphs_dir: &Path,
) -> CellOutcome {
    let ds = &config.datasets[cell.dataset];
    let started = Instant::now();
    let mut row = ReportRow {
        method: cell.method,
        dataset: ds.name.clone(),
        gamma_max: cell.gamma_max,
        alpha: config.alpha,
        confusion: None,
        f1: None,
        runtime_ms: 0,
        graph_paths: Vec::new(),
        error: None,
    };
    let mut log = json!({
        "dataset": ds.name,
        "method": cell.method.to_string(),
        "gamma_max": cell.gamma_max,
        "alpha": config.alpha,
    });

    let result = (|| -> Result<(serde_json::Value, Vec<String>, crate::eval::EdgeConfusion)> {
        let (panel, truth) = match prepared {
            Ok(p) => p,
            Err(msg) => return Err(Error::InvalidConfig(msg.clone())),
        };
        let cfg = DiscoveryConfig {
            gamma_max: cell.gamma_max,
            alpha: config.alpha,
            max_cond_size: config.max_cond_size,
        };
        let outcome = discover(cell.method, panel, &cfg)?;
        let confusion = edge_confusion(truth, &outcome.summary, false)?;

        let stem = format!("{}_{}_g{}", ds.name, cell.method, cell.gamma_max);
        let summary_path = graphs_dir.join(format!("{stem}.summary.txt"));
        let native_path = graphs_dir.join(format!("{stem}.native.json"));
        let dot_path = graphs_dir.join(format!("{stem}.dot"));
        fs::write(&summary_path, outcome.summary.to_edge_list())?;
        fs::write(&native_path, outcome.native.to_json().to_string())?;
        fs::write(&dot_path, outcome.native.to_dot())?;
        let paths = vec![
            summary_path.to_string_lossy().into_owned(),
            native_path.to_string_lossy().into_owned(),
            dot_path.to_string_lossy().into_owned(),
        ];
        let stats_json = json!({
            "ci_tests": outcome.stats.ci_tests,
            "degenerate_tests": outcome.stats.degenerate_tests,
            "notes": outcome.stats.notes,
        });
        Ok((stats_json, paths, confusion))
    })();

    let elapsed = if config.stable_runtime {
        0
    } else {
        started.elapsed().as_millis() as u64
    };
    row.runtime_ms = elapsed;
    log["runtime_ms"] = json!(elapsed);

    match result {
        Ok((stats_json, paths, confusion)) => {
            row.f1 = Some(confusion.f1());
            row.confusion = Some(confusion);
            row.graph_paths = paths.clone();
            log["stats"] = stats_json;
            log["graphs"] = json!(paths);
            log["f1"] = json!(row.f1);
        }
        Err(e) => {
            let msg = e.to_string();
            row.error = Some(msg.clone());
            log["error"] = json!(msg);
        }
    }
    CellOutcome { row, log }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{corrupt, diamond_fixture, simulate, CorruptionSpec};

    fn write_diamond_dataset(dir: &Path, seed: u64) -> (PathBuf, PathBuf) {
        let mut spec = diamond_fixture();
        spec.t = 600;
        spec.seed = seed;
        let panel = simulate(&spec).unwrap();
        let raw = corrupt(&panel, &CorruptionSpec::default(), 0).unwrap();
        let csv_path = dir.join("diamond.csv");
        let mut buf = Vec::new();
        crate::data::serialize_csv(&raw, &mut buf).unwrap();
        fs::write(&csv_path, buf).unwrap();
        let truth_path = dir.join("diamond_truth.txt");
        fs::write(&truth_path, spec.graph.to_summary().to_edge_list()).unwrap();
        (csv_path, truth_path)
    }

    #[test]
    fn toml_config_parses_and_validates() {
        let text = r#"
alpha = 0.05
gamma_max = [3, 5]
output_dir = "out"
parallelism = 2
methods = ["gcmvl", "nbcb-e"]

[[datasets]]
name = "web"
csv_path = "web.csv"
truth_path = "web_truth.txt"
strategy = 2
period_override = 300000
"#;
        let cfg = ExperimentConfig::from_toml(text, Path::new("/base")).unwrap();
        assert_eq!(cfg.methods, vec![MethodId::Gcmvl, MethodId::NbcbE]);
        assert_eq!(cfg.gamma_max, GammaMaxSetting::Explicit(vec![3, 5]));
        assert_eq!(cfg.datasets[0].csv_path, Path::new("/base/web.csv"));
        assert_eq!(cfg.datasets[0].strategy, Strategy::Strategy2);
        assert_eq!(cfg.datasets[0].period_override_ms, Some(300_000));

        let auto = text.replace("[3, 5]", "\"auto\"");
        let cfg = ExperimentConfig::from_toml(&auto, Path::new("/base")).unwrap();
        assert_eq!(cfg.gamma_max, GammaMaxSetting::Auto);
    }

    #[test]
    fn empty_methods_list_is_a_config_error() {
        let text = r#"
gamma_max = "auto"
output_dir = "out"
methods = []
datasets = []
"#;
        assert!(ExperimentConfig::from_toml(text, Path::new(".")).is_err());
    }

    #[test]
    fn run_produces_report_and_artifacts() {
        let dir = tempfile::tempdir().unwrap();
        let (csv_path, truth_path) = write_diamond_dataset(dir.path(), 5);
        let config = ExperimentConfig {
            datasets: vec![DatasetConfig {
                name: "diamond".into(),
                csv_path,
                truth_path,
                strategy: Strategy::Strategy1,
                period_override_ms: None,
                max_delay_ms: None,
                interpolate: true,
            }],
            methods: vec![MethodId::Gcmvl, MethodId::VarLingam],
            gamma_max: GammaMaxSetting::Explicit(vec![2]),
            alpha: 0.05,
            output_dir: dir.path().join("out"),
            parallelism: 2,
            max_cond_size: None,
            stable_runtime: true,
        };
        let report = run(&config).unwrap();
        assert_eq!(report.rows.len(), 2);
        for row in &report.rows {
            assert!(row.error.is_none(), "row failed: {:?}", row.error);
            let f1 = row.f1.unwrap();
            assert!((0.0..=1.0).contains(&f1));
            assert_eq!(row.graph_paths.len(), 3);
        }
        // Artifacts exist and the CSV parses back.
        let csv = fs::read_to_string(config.output_dir.join("report.csv")).unwrap();
        let parsed = BenchReport::parse_csv(&csv).unwrap();
        assert_eq!(parsed.rows.len(), 2);
        assert!(config.output_dir.join("run_log.jsonl").exists());

        // Internal consistency: re-scoring an emitted summary graph file
        // reproduces the reported confusion counts.
        let truth = SummaryCausalGraph::parse(
            &fs::read_to_string(dir.path().join("diamond_truth.txt")).unwrap(),
        )
        .unwrap();
        for row in &report.rows {
            let emitted =
                SummaryCausalGraph::parse(&fs::read_to_string(&row.graph_paths[0]).unwrap())
                    .unwrap();
            let confusion = edge_confusion(&truth, &emitted, false).unwrap();
            assert_eq!(Some(confusion), row.confusion);
        }
    }

    #[test]
    fn failed_dataset_becomes_error_rows_only() {
        let dir = tempfile::tempdir().unwrap();
        let (csv_path, truth_path) = write_diamond_dataset(dir.path(), 6);
        let config = ExperimentConfig {
            datasets: vec![
                DatasetConfig {
                    name: "missing".into(),
                    csv_path: dir.path().join("nope.csv"),
                    truth_path: truth_path.clone(),
                    strategy: Strategy::Strategy1,
                    period_override_ms: None,
                    max_delay_ms: None,
                    interpolate: true,
                },
                DatasetConfig {
                    name: "diamond".into(),
                    csv_path,
                    truth_path,
                    strategy: Strategy::Strategy1,
                    period_override_ms: None,
                    max_delay_ms: None,
                    interpolate: true,
                },
            ],
            methods: vec![MethodId::Gcmvl],
            gamma_max: GammaMaxSetting::Explicit(vec![2]),
            alpha: 0.05,
            output_dir: dir.path().join("out"),
            parallelism: 1,
            max_cond_size: None,
            stable_runtime: true,
        };
        let report = run(&config).unwrap();
        assert_eq!(report.rows.len(), 2);
        let missing = report.rows.iter().find(|r| r.dataset == "missing").unwrap();
        assert!(missing.error.is_some());
        let good = report.rows.iter().find(|r| r.dataset == "diamond").unwrap();
        assert!(good.error.is_none());
    }

    #[test]
    fn auto_gamma_uses_the_delay_rule() {
        let dir = tempfile::tempdir().unwrap();
        let (csv_path, truth_path) = write_diamond_dataset(dir.path(), 7);
        let config = ExperimentConfig {
            datasets: vec![DatasetConfig {
                name: "diamond".into(),
                csv_path,
                truth_path,
                strategy: Strategy::Strategy1,
                period_override_ms: None,
                // Panels are minute-sampled; a 2-minute delay bound gives
                // gamma_max = 2.
                max_delay_ms: Some(120_000),
                interpolate: true,
            }],
            methods: vec![MethodId::Gcmvl],
            gamma_max: GammaMaxSetting::Auto,
            alpha: 0.05,
            output_dir: dir.path().join("out"),
            parallelism: 1,
            max_cond_size: None,
            stable_runtime: true,
        };
        let report = run(&config).unwrap();
        assert_eq!(report.rows[0].gamma_max, 2);
    }
}
