//! CSV snapshots, convergence tables, and the run manifest.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use ms_transport::convergence::ConvergenceTable;
use ms_transport::{InvariantAudit, RunResult, ScenarioConfig};
use serde::Serialize;

pub const SNAPSHOTS_FILE: &str = "snapshots.csv";
pub const MANIFEST_FILE: &str = "manifest.txt";
pub const CONVERGENCE_FILE: &str = "convergence.csv";

/// 17 significant digits.
fn num(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn snapshots_csv(result: &RunResult) -> String {
    let grid = &result.config.grid;
    let mut out = String::from("t,x,xi1,xi2,xi3\n");
    for s in &result.snapshots {
        let t = num(s.time);
        for j in 0..grid.num_cells() {
            let _ = writeln!(
                out,
                "{t},{},{},{},{}",
                num(grid.cell_center(j)),
                num(s.xi[0][j]),
                num(s.xi[1][j]),
                num(s.xi[2][j])
            );
        }
    }
    out
}

fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, contents).with_context(|| format!("writing {}", tmp.display()))?;
    fs::rename(&tmp, path)
        .with_context(|| format!("renaming {} to {}", tmp.display(), path.display()))?;
    Ok(())
}

#[derive(Debug, Serialize)]
struct ManifestRun {
    version: &'static str,
    steps: usize,
    dt: f64,
    snapshots: usize,
    wall_time_seconds: f64,
}

#[derive(Debug, Serialize)]
struct ManifestAudit {
    max_closure_residual: f64,
    closure_tolerance: f64,
    max_sigma_drift: f64,
    sigma_audited: bool,
    sigma_tolerance: f64,
    max_moles_drift: f64,
    moles_audited: bool,
    moles_tolerance: f64,
    passed: bool,
}

#[derive(Debug, Serialize)]
struct ManifestOutputs {
    files: Vec<String>,
}

/// Contents of `manifest.txt`.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    run: ManifestRun,
    config: ScenarioConfig,
    audit: ManifestAudit,
    outputs: ManifestOutputs,
}

impl RunManifest {
    pub fn new(result: &RunResult, files: &[PathBuf]) -> Self {
        let a: &InvariantAudit = &result.audit;
        Self {
            run: ManifestRun {
                version: env!("CARGO_PKG_VERSION"),
                steps: result.steps,
                dt: result.dt,
                snapshots: result.snapshots.len(),
                wall_time_seconds: result.wall_time,
            },
            config: result.config.clone(),
            audit: ManifestAudit {
                max_closure_residual: a.max_closure_residual,
                closure_tolerance: InvariantAudit::CLOSURE_TOL,
                max_sigma_drift: a.max_sigma_drift,
                sigma_audited: a.sigma_audited,
                sigma_tolerance: InvariantAudit::SIGMA_TOL,
                max_moles_drift: a.max_moles_drift,
                moles_audited: a.moles_audited,
                moles_tolerance: InvariantAudit::MOLES_TOL,
                passed: a.passed(),
            },
            outputs: ManifestOutputs {
                files: files.iter().map(|p| p.display().to_string()).collect(),
            },
        }
    }

    pub fn to_text(&self) -> Result<String> {
        toml::to_string(self).context("serialising manifest")
    }
}

/// Write `snapshots.csv` and `manifest.txt` into `dir`; returns both paths.
pub fn write_snapshots(result: &RunResult, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let csv = dir.join(SNAPSHOTS_FILE);
    write_atomic(&csv, &snapshots_csv(result))?;
    let manifest = dir.join(MANIFEST_FILE);
    let files = vec![csv, manifest.clone()];
    write_atomic(&manifest, &RunManifest::new(result, &files).to_text()?)?;
    Ok(files)
}

pub fn convergence_csv(table: &ConvergenceTable) -> String {
    let mut out = String::from("dt,species,norm,error,observed_order\n");
    for r in &table.rows {
        let order = r.observed_order.map(num).unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            num(r.dt),
            r.species.label(),
            r.norm.name(),
            num(r.error),
            order
        );
    }
    out
}

pub fn write_convergence(table: &ConvergenceTable, dir: &Path) -> Result<PathBuf> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let path = dir.join(CONVERGENCE_FILE);
    write_atomic(&path, &convergence_csv(table))?;
    Ok(path)
}

/// One snapshot row as parsed back from CSV.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CsvRow {
    pub t: f64,
    pub x: f64,
    pub xi: [f64; 3],
}

pub fn read_snapshots_csv(text: &str) -> Result<Vec<CsvRow>> {
    let mut lines = text.lines();
    let header = lines.next().context("empty snapshot file")?;
    anyhow::ensure!(header == "t,x,xi1,xi2,xi3", "unexpected header '{header}'");
    lines
        .enumerate()
        .map(|(k, line)| {
            let v: Vec<f64> = line
                .split(',')
                .map(str::parse)
                .collect::<Result<_, _>>()
                .with_context(|| format!("row {}", k + 2))?;
            anyhow::ensure!(v.len() == 5, "row {} has {} columns", k + 2, v.len());
            Ok(CsvRow {
                t: v[0],
                x: v[1],
                xi: [v[2], v[3], v[4]],
            })
        })
        .collect()
}
