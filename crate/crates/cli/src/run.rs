//! Executes scenarios and writes result artifacts.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::Serialize;
use simo_noma::bounds::BoundVariant;
use simo_noma::detection::DetectorKind;
use simo_noma::simkernel::{self, BerCurve, CurvePoint};
use simo_noma::User;
use thiserror::Error;

use crate::config::{ConfigError, OutputFormat, OutputSpec, ScenarioConfig};
use crate::figure::{emit_figure_data, FigureData};

#[derive(Debug, Error)]
pub enum RunError {
    #[error("config error: {0}")]
    Config(#[from] ConfigError),
    #[error("simulation error: {0}")]
    Sim(#[from] simo_noma::Error),
    #[error("I/O error on {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) | RunError::Sim(_) => 2,
            RunError::Io { .. } => 3,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> RunError + '_ {
    move |source| RunError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub out_dir: PathBuf,
    pub seed: Option<u64>,
    pub bounds_only: bool,
    pub threads: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub curve: BerCurve,
    pub figure: Option<FigureData>,
    pub written: Vec<PathBuf>,
    pub manifest: PathBuf,
    pub low_confidence: bool,
}

impl RunReport {
    pub fn exit_code(&self) -> i32 {
        if self.low_confidence {
            4
        } else {
            0
        }
    }
}

/// Column names in output order.
pub fn csv_header(detectors: &[DetectorKind]) -> Vec<String> {
    let mut h = vec!["sigma1_db".to_string()];
    for d in ordered(detectors) {
        for u in User::BOTH {
            h.push(format!("{}_{}_ber", d.name(), u.label()));
            h.push(format!("{}_{}_ci", d.name(), u.label()));
        }
    }
    for u in User::BOTH {
        h.push(format!("bound_{}_full", u.label()));
        h.push(format!("bound_{}_dom", u.label()));
    }
    if !detectors.is_empty() {
        h.push("status".to_string());
    }
    h
}

fn ordered(detectors: &[DetectorKind]) -> impl Iterator<Item = DetectorKind> + '_ {
    DetectorKind::ALL
        .into_iter()
        .filter(move |d| detectors.contains(d))
}

fn sci(v: f64) -> String {
    format!("{v:.5e}")
}

fn csv_row(p: &CurvePoint, detectors: &[DetectorKind]) -> Vec<String> {
    let mut row = vec![format!("{:.2}", p.sigma1_db)];
    for d in ordered(detectors) {
        let e = p
            .estimate(d)
            .expect("every tracked detector has an estimate");
        for u in User::BOTH {
            row.push(sci(e.user(u).ber));
            row.push(sci(e.user(u).ci_halfwidth));
        }
    }
    for u in User::BOTH {
        row.push(sci(p.bounds.get(u, BoundVariant::Full)));
        row.push(sci(p.bounds.get(u, BoundVariant::Dominant)));
    }
    if !detectors.is_empty() {
        let low = p.low_confidence || p.estimates.iter().any(|e| !e.u1.reliable || !e.u2.reliable);
        row.push(if low { "low_confidence" } else { "ok" }.to_string());
    }
    row
}

pub fn write_csv<W: Write>(curve: &BerCurve, out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(csv_header(&curve.detectors))?;
    for p in &curve.points {
        w.write_record(csv_row(p, &curve.detectors))?;
    }
    w.flush()?;
    Ok(())
}

pub fn csv_string(curve: &BerCurve) -> String {
    let mut buf = Vec::new();
    write_csv(curve, &mut buf).expect("writing to memory cannot fail");
    String::from_utf8(buf).expect("csv output is ASCII")
}

#[derive(Serialize)]
struct JsonOutput<'a> {
    name: &'a str,
    curve: &'a BerCurve,
    #[serde(skip_serializing_if = "Option::is_none")]
    figure: Option<&'a FigureData>,
}

#[derive(Serialize)]
struct PointTrials {
    sigma1_db: f64,
    trials: u64,
    hit_cap: bool,
}

#[derive(Serialize)]
struct Manifest<'a> {
    name: &'a str,
    seed: u64,
    bounds_only: bool,
    threads: Option<usize>,
    config: &'a ScenarioConfig,
    config_toml: String,
    versions: Versions,
    started_unix_s: u64,
    elapsed_s: f64,
    points: Vec<PointTrials>,
    outputs: Vec<String>,
}

#[derive(Serialize)]
struct Versions {
    cli: &'static str,
    core: &'static str,
}

/// Config with command-line overrides applied.
pub fn effective_config(cfg: &ScenarioConfig, opts: &RunOptions) -> ScenarioConfig {
    let mut cfg = cfg.clone();
    if let Some(seed) = opts.seed {
        cfg.seed = seed;
    }
    if opts.bounds_only {
        cfg.detectors.clear();
    }
    if cfg.outputs.is_empty() {
        cfg.outputs.push(OutputSpec {
            format: OutputFormat::Csv,
            path: format!("{}.csv", cfg.name),
        });
    }
    cfg
}

pub fn run_scenario(cfg: &ScenarioConfig, opts: &RunOptions) -> Result<RunReport, RunError> {
    let cfg = effective_config(cfg, opts);
    cfg.validate()?;
    let started = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let clock = Instant::now();
    let spec = cfg.sweep_spec();
    let curve = match opts.threads {
        Some(n) => simkernel::with_threads(n, || simkernel::run_sweep(&spec))??,
        None => simkernel::run_sweep(&spec)?,
    };
    let elapsed = clock.elapsed().as_secs_f64();
    let figure = cfg
        .figure
        .map(|f| emit_figure_data(&curve, f))
        .transpose()
        .map_err(|e| ConfigError {
            path: "figure".into(),
            message: e.to_string(),
        })?;

    fs::create_dir_all(&opts.out_dir).map_err(io_err(&opts.out_dir))?;
    let mut written = Vec::new();
    for o in &cfg.outputs {
        let path = opts.out_dir.join(&o.path);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(io_err(parent))?;
        }
        let body = match o.format {
            OutputFormat::Csv => csv_string(&curve),
            OutputFormat::Json => {
                let doc = JsonOutput {
                    name: &cfg.name,
                    curve: &curve,
                    figure: figure.as_ref(),
                };
                serde_json::to_string_pretty(&doc).expect("result is serializable") + "\n"
            }
        };
        fs::write(&path, body).map_err(io_err(&path))?;
        written.push(path);
    }

    let manifest = Manifest {
        name: &cfg.name,
        seed: cfg.seed,
        bounds_only: opts.bounds_only,
        threads: opts.threads,
        config: &cfg,
        config_toml: cfg.to_toml(),
        versions: Versions {
            cli: env!("CARGO_PKG_VERSION"),
            core: simo_noma::VERSION,
        },
        started_unix_s: started,
        elapsed_s: elapsed,
        points: curve
            .points
            .iter()
            .map(|p| PointTrials {
                sigma1_db: p.sigma1_db,
                trials: p.trials,
                hit_cap: p.low_confidence,
            })
            .collect(),
        outputs: cfg.outputs.iter().map(|o| o.path.clone()).collect(),
    };
    let manifest_path = opts.out_dir.join(format!("{}.manifest.json", cfg.name));
    let text = serde_json::to_string_pretty(&manifest).expect("manifest is serializable") + "\n";
    fs::write(&manifest_path, text).map_err(io_err(&manifest_path))?;

    let low_confidence = curve
        .points
        .iter()
        .any(|p| p.low_confidence || p.estimates.iter().any(|e| !e.u1.reliable || !e.u2.reliable));
    Ok(RunReport {
        curve,
        figure,
        written,
        manifest: manifest_path,
        low_confidence,
    })
}
