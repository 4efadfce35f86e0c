//! Writing experiment outputs and replaying them from a manifest.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::distortion::{run_distortion, run_l2_distortion, ExperimentReport, Summary};
use super::tails::{tail_curve, TailReport};
use crate::error::{Error, Result};
use crate::gdelta::build_gdelta;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const RECORDS_FILE: &str = "records.csv";
pub const AGGREGATES_FILE: &str = "aggregates.csv";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const TAILS_FILE: &str = "tails.csv";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Distortion,
    L2,
    Tails,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectorSeed {
    pub m: usize,
    pub trial: usize,
    pub seed: u64,
}

/// Everything needed to reproduce a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub kind: ExperimentKind,
    pub config: ExperimentConfig,
    pub delta: f64,
    pub point_seed: u64,
    pub projector_seeds: Vec<ProjectorSeed>,
    pub files: Vec<String>,
    pub summary: Option<Summary>,
}

impl Manifest {
    fn new(kind: ExperimentKind, config: &ExperimentConfig, delta: f64, files: &[&str]) -> Self {
        let projector_seeds = match kind {
            ExperimentKind::Tails => Vec::new(),
            _ => config
                .m_sweep
                .iter()
                .flat_map(|&m| {
                    (0..config.trials).map(move |trial| ProjectorSeed {
                        m,
                        trial,
                        seed: config.projector_seed(m, trial),
                    })
                })
                .collect(),
        };
        Self {
            tool: "qjl".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            kind,
            config: config.clone(),
            delta,
            point_seed: config.point_seed(),
            projector_seeds,
            files: files.iter().map(|f| f.to_string()).collect(),
            summary: None,
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let f = File::open(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_reader(std::io::BufReader::new(f))
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    fn write(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join(MANIFEST_FILE);
        let f = File::create(&path).map_err(|e| Error::io(&path, e))?;
        serde_json::to_writer_pretty(BufWriter::new(f), self)
            .map_err(|e| Error::io(&path, std::io::Error::other(e)))?;
        Ok(path)
    }
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
    for r in rows {
        w.serialize(r).map_err(|e| Error::csv(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

#[derive(Serialize)]
struct SummaryRow {
    key: &'static str,
    value: f64,
}

fn summary_rows(s: &Summary) -> Vec<SummaryRow> {
    let mut rows = vec![
        SummaryRow {
            key: "delta",
            value: s.delta,
        },
        SummaryRow {
            key: "nu",
            value: s.nu,
        },
        SummaryRow {
            key: "diam",
            value: s.diam,
        },
        SummaryRow {
            key: "abs_error_slope",
            value: s.abs_error_slope.slope,
        },
        SummaryRow {
            key: "band_c",
            value: s.band.c,
        },
        SummaryRow {
            key: "band_c_prime",
            value: s.band.c_prime,
        },
        SummaryRow {
            key: "band_coverage",
            value: s.band.coverage,
        },
        SummaryRow {
            key: "additive_share",
            value: s.additive_share,
        },
        SummaryRow {
            key: "monotone",
            value: f64::from(u8::from(s.monotone)),
        },
    ];
    if let Some(f) = s.l2_residual_slope {
        rows.push(SummaryRow {
            key: "l2_residual_slope",
            value: f.slope,
        });
    }
    if let Some(f) = s.l2_direct_slope {
        rows.push(SummaryRow {
            key: "l2_direct_slope",
            value: f.slope,
        });
    }
    if let Some(b) = s.l2_band {
        rows.push(SummaryRow {
            key: "l2_band_c",
            value: b.c,
        });
        rows.push(SummaryRow {
            key: "l2_band_c_prime",
            value: b.c_prime,
        });
        rows.push(SummaryRow {
            key: "l2_band_coverage",
            value: b.coverage,
        });
    }
    rows
}

/// Writes records, per-`M` aggregates, a key/value summary and the
/// manifest into `dir`. Returns the manifest path.
pub fn emit_report(report: &ExperimentReport, dir: impl AsRef<Path>) -> Result<PathBuf> {
    let dir = dir.as_ref();
    ensure_dir(dir)?;
    write_csv(&dir.join(RECORDS_FILE), &report.records)?;
    write_csv(&dir.join(AGGREGATES_FILE), &report.aggregates)?;
    write_csv(&dir.join(SUMMARY_FILE), &summary_rows(&report.summary))?;
    let kind = match report.summary.metric {
        super::distortion::Metric::L1 => ExperimentKind::Distortion,
        super::distortion::Metric::L2 => ExperimentKind::L2,
    };
    let mut m = Manifest::new(
        kind,
        &report.config,
        report.summary.delta,
        &[RECORDS_FILE, AGGREGATES_FILE, SUMMARY_FILE],
    );
    m.summary = Some(report.summary.clone());
    m.write(dir)
}

/// Writes a tail report and its manifest into `dir`.
pub fn emit_tails(report: &TailReport, dir: impl AsRef<Path>) -> Result<PathBuf> {
    let dir = dir.as_ref();
    ensure_dir(dir)?;
    write_csv(&dir.join(TAILS_FILE), &report.rows)?;
    Manifest::new(
        ExperimentKind::Tails,
        &report.config,
        report.delta,
        &[TAILS_FILE],
    )
    .write(dir)
}

/// Result of running one experiment kind.
#[derive(Debug, Clone)]
pub enum Outcome {
    Sweep(Box<ExperimentReport>),
    Tails(TailReport),
}

impl Outcome {
    pub fn emit(&self, dir: impl AsRef<Path>) -> Result<PathBuf> {
        match self {
            Outcome::Sweep(r) => emit_report(r, dir),
            Outcome::Tails(r) => emit_tails(r, dir),
        }
    }
}

pub fn run_experiment(kind: ExperimentKind, cfg: &ExperimentConfig) -> Result<Outcome> {
    match kind {
        ExperimentKind::Distortion => Ok(Outcome::Sweep(Box::new(run_distortion(cfg)?))),
        ExperimentKind::L2 => {
            cfg.validate()?;
            let delta = cfg.delta.resolve(&cfg.generate_points()?)?;
            let g = build_gdelta(cfg.dim as u32, delta, cfg.gdelta_grid)?;
            Ok(Outcome::Sweep(Box::new(run_l2_distortion(cfg, &g)?)))
        }
        ExperimentKind::Tails => Ok(Outcome::Tails(tail_curve(cfg)?)),
    }
}

/// Re-runs the experiment described by a manifest and writes it to `dir`.
pub fn replay(manifest: impl AsRef<Path>, dir: impl AsRef<Path>) -> Result<PathBuf> {
    let m = Manifest::load(manifest)?;
    run_experiment(m.kind, &m.config)?.emit(dir)
}
