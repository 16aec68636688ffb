//! Subcommand bodies: artifacts on disk and exit codes.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::config::{set_param, RunConfig};
use crate::harness::experiment::{execute, Calibration, DirectionFit, ExecuteOptions, Outcome, ResidualStats, SnapshotPair};
use crate::harness::snapshot::{read_snapshot, write_snapshot};
use crate::harness::verify::{verify_snapshots, VerifyReport};
use crate::model::{RunRecord, Termination};
use crate::theory::{self, EigenStudy, TheoryBundle};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERDICT: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_IO: i32 = 4;

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Unstable { .. } | Error::SchemeFailure { .. } => EXIT_NUMERICAL,
        Error::Io(_) | Error::Csv(_) | Error::Snapshot { .. } => EXIT_IO,
        _ => EXIT_CONFIG,
    }
}

pub const CONFIG_FILE: &str = "config.json";
pub const SUMMARY_FILE: &str = "summary.json";
pub const FRONTS_FILE: &str = "fronts.csv";
pub const REPORT_FILE: &str = "report.json";
pub const VERIFY_FILE: &str = "verify.json";
pub const SNAPSHOT_DIR: &str = "snapshots";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunSummary {
    pub record: RunRecord,
    pub residual: ResidualStats,
    pub envelope_violation: f64,
    pub calibration: Option<Calibration>,
    pub tau_disc: Option<f64>,
    pub fits: Vec<DirectionFit>,
}

#[derive(Serialize)]
struct FrontRow<'a> {
    t: f64,
    threshold: f64,
    direction: &'a str,
    position: f64,
    trusted: bool,
}

pub fn write_fronts_csv(record: &RunRecord, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for trace in &record.fronts {
        let label = trace.direction.label();
        for s in &trace.samples {
            w.serialize(FrontRow {
                t: s.t,
                threshold: trace.threshold,
                direction: &label,
                position: s.position,
                trusted: s.trusted,
            })?;
        }
    }
    w.flush()?;
    Ok(())
}

fn snapshot_paths(dir: &Path, index: usize) -> (PathBuf, PathBuf) {
    (
        dir.join(format!("snap_{index:05}_a.bin")),
        dir.join(format!("snap_{index:05}_b.bin")),
    )
}

pub fn write_snapshots(pairs: &[SnapshotPair], dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    for (i, pair) in pairs.iter().enumerate() {
        let (a, b) = snapshot_paths(dir, i);
        write_snapshot(&a, &pair.a)?;
        if let Some(s) = &pair.b {
            write_snapshot(&b, s)?;
        }
    }
    Ok(())
}

pub fn read_snapshots(dir: &Path) -> Result<Vec<SnapshotPair>> {
    let mut pairs = vec![];
    for i in 0.. {
        let (a, b) = snapshot_paths(dir, i);
        if !a.exists() {
            break;
        }
        let b = if b.exists() { Some(read_snapshot(&b)?) } else { None };
        pairs.push(SnapshotPair { a: read_snapshot(&a)?, b });
    }
    if pairs.is_empty() {
        return Err(Error::Snapshot {
            path: dir.to_path_buf(),
            message: "no snapshots found".into(),
        });
    }
    Ok(pairs)
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    let mut f = fs::File::create(path)?;
    f.write_all(text.as_bytes())?;
    f.write_all(b"\n")?;
    Ok(())
}

/// Resolved output directory: `--out`, then `output.dir`, then `chemospread-out`.
pub fn output_dir(config: &RunConfig, out: Option<&Path>) -> PathBuf {
    out.map(Path::to_path_buf)
        .or_else(|| config.output.dir.clone())
        .unwrap_or_else(|| PathBuf::from("chemospread-out"))
}

pub struct RunArtifacts {
    pub dir: PathBuf,
    pub outcome: Outcome,
    pub report: Option<VerifyReport>,
}

/// Executes a run and writes config, summary, fronts, snapshots and report.
pub fn cmd_run(config: &RunConfig, out: &Path) -> Result<RunArtifacts> {
    let outcome = execute(config, &ExecuteOptions::default())?;
    fs::create_dir_all(out)?;
    write_text(&out.join(CONFIG_FILE), &config.to_json())?;
    let tau = outcome.tau_disc(config);
    let summary = RunSummary {
        record: outcome.record.clone(),
        residual: outcome.residual,
        envelope_violation: outcome.envelope_violation,
        calibration: outcome.calibration.clone(),
        tau_disc: tau,
        fits: outcome.fits.clone(),
    };
    write_text(&out.join(SUMMARY_FILE), &serde_json::to_string_pretty(&summary)?)?;
    write_fronts_csv(&outcome.record, &out.join(FRONTS_FILE))?;
    let snap_dir = out.join(SNAPSHOT_DIR);
    if snap_dir.exists() {
        fs::remove_dir_all(&snap_dir)?;
    }
    let mut report = None;
    if !outcome.snapshots.is_empty() {
        write_snapshots(&outcome.snapshots, &snap_dir)?;
        if outcome.record.termination == Termination::HorizonReached {
            let r = verify_snapshots(config, &outcome.snapshots, tau)?;
            write_text(&out.join(REPORT_FILE), &r.to_json())?;
            report = Some(r);
        }
    }
    Ok(RunArtifacts {
        dir: out.to_path_buf(),
        outcome,
        report,
    })
}

/// Re-evaluates the clauses from the artifacts of a finished run.
pub fn cmd_verify(dir: &Path) -> Result<VerifyReport> {
    let text = fs::read_to_string(dir.join(CONFIG_FILE))?;
    let config = RunConfig::from_json_str(&text)?;
    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.join(SUMMARY_FILE))?)?;
    let tau = summary.get("tau_disc").and_then(|v| v.as_f64());
    let pairs = read_snapshots(&dir.join(SNAPSHOT_DIR))?;
    let report = verify_snapshots(&config, &pairs, tau)?;
    write_text(&dir.join(VERIFY_FILE), &report.to_json())?;
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub index: usize,
    pub chi: f64,
    pub a: f64,
    pub b: f64,
    pub lambda: f64,
    pub mu: f64,
    pub dim: usize,
    pub damping_condition: bool,
    pub speed_min: Option<f64>,
    pub speed_max: Option<f64>,
    pub speed_rel_error: Option<f64>,
    pub residual_max: Option<f64>,
    pub flipped_max: Option<f64>,
    pub tau_disc: Option<f64>,
    pub envelope_violation: Option<f64>,
    pub status: String,
    pub message: String,
}

fn sweep_point(index: usize, config: &RunConfig) -> SweepRow {
    let p = config.params;
    let mut row = SweepRow {
        index,
        chi: p.chi,
        a: p.a,
        b: p.b,
        lambda: p.lambda,
        mu: p.mu,
        dim: p.dim,
        damping_condition: p.damping_condition(),
        speed_min: None,
        speed_max: None,
        speed_rel_error: None,
        residual_max: None,
        flipped_max: None,
        tau_disc: None,
        envelope_violation: None,
        status: String::new(),
        message: String::new(),
    };
    let outcome = match execute(config, &ExecuteOptions {
        retain_states: false,
        snapshot_every: Some(0),
    }) {
        Ok(o) => o,
        Err(e) => {
            row.status = "error".into();
            row.message = e.to_string();
            return row;
        }
    };
    if let Termination::StepFailure { t, message } = &outcome.record.termination {
        row.status = "error".into();
        row.message = format!("step failure at t = {t}: {message}");
        return row;
    }
    let threshold = config.thresholds()[0];
    let speeds: Vec<f64> = outcome
        .fits
        .iter()
        .filter(|f| f.threshold == threshold)
        .filter_map(|f| f.fit.as_ref().map(|f| f.speed))
        .collect();
    let target = theory::kpp_speed(p.a);
    if !speeds.is_empty() {
        let lo = speeds.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = speeds.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        row.speed_min = Some(lo);
        row.speed_max = Some(hi);
        row.speed_rel_error = Some(speeds.iter().map(|s| (s - target).abs() / target).fold(0.0, f64::max));
    }
    row.residual_max = Some(outcome.residual.max_natural);
    row.flipped_max = Some(outcome.residual.max_flipped);
    row.tau_disc = outcome.tau_disc(config);
    row.envelope_violation = Some(outcome.envelope_violation);
    let speed_ok = speeds.len() == outcome.fits.iter().filter(|f| f.threshold == threshold).count()
        && row.speed_rel_error.is_some_and(|e| e <= config.analysis.speed_tolerance);
    let residual_ok = row.tau_disc.is_none_or(|t| outcome.residual.max_natural <= t);
    row.status = if !row.damping_condition {
        "no_prediction".into()
    } else if speed_ok && residual_ok {
        "pass".into()
    } else {
        "fail".into()
    };
    let failed: Vec<&str> = outcome.fits.iter().filter_map(|f| f.error.as_deref()).collect();
    row.message = failed.join("; ");
    row
}

/// Runs every lattice point in a pool of `jobs` threads; rows keep lattice order.
pub fn cmd_sweep(config: &RunConfig, jobs: usize) -> Result<Vec<SweepRow>> {
    let points = match &config.sweep {
        Some(s) => s.points(),
        None => vec![vec![]],
    };
    let mut configs = Vec::with_capacity(points.len());
    for point in &points {
        let mut c = config.clone();
        c.sweep = None;
        for (name, value) in point {
            set_param(&mut c.params, name, *value)?;
        }
        configs.push(c);
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::Domain(format!("thread pool: {e}")))?;
    Ok(pool.install(|| configs.par_iter().enumerate().map(|(i, c)| sweep_point(i, c)).collect()))
}

pub fn write_sweep_csv<W: std::io::Write>(rows: &[SweepRow], sink: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TheoryInputs {
    pub a: f64,
    pub dim: usize,
    pub eps: f64,
    pub eta: f64,
    pub big_m: f64,
    pub lambda: f64,
    pub mu: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TheoryReport {
    pub inputs: TheoryInputs,
    pub bundle: TheoryBundle,
    pub eigenvalue_at_rest: f64,
    /// `(c, lambda(c))` minimising over a 101-point grid of admissible speeds.
    pub eigenvalue_min_on_grid: (f64, f64),
    pub floor_respected: bool,
    pub eigen_residual_studies: Vec<EigenStudy>,
    pub persistence_time: f64,
    pub persistence_radius: f64,
    pub m_tilde: f64,
    pub envelope_v_coefficient: f64,
}

pub fn cmd_theory(inputs: &TheoryInputs) -> Result<TheoryReport> {
    let bundle = TheoryBundle::new(inputs.a, inputs.dim, inputs.eps)?;
    let min = bundle.min_eigenvalue_on_grid(101)?;
    let cmax = bundle.max_frame_speed();
    let steps: Vec<f64> = [100.0, 200.0, 400.0].iter().map(|k| bundle.ell / k).collect();
    let mut xi = vec![0.0; inputs.dim];
    xi[0] = 1.0;
    let studies = [0.0, cmax, -cmax]
        .iter()
        .map(|&c| bundle.eigen_residual_orders(c, &xi, &steps, 16, 0))
        .collect::<Result<Vec<_>>>()?;
    let t = bundle.t_of_eta(inputs.eta, inputs.big_m, inputs.lambda);
    Ok(TheoryReport {
        inputs: *inputs,
        bundle,
        eigenvalue_at_rest: bundle.principal_eigenvalue(0.0)?,
        eigenvalue_min_on_grid: min,
        floor_respected: min.1 >= bundle.lambda_floor - 1e-15,
        eigen_residual_studies: studies,
        persistence_time: t,
        persistence_radius: theory::persistence_radius(inputs.eta, t, inputs.a, inputs.dim, bundle.ell)?,
        m_tilde: theory::m_tilde(inputs.big_m, inputs.lambda, inputs.mu, inputs.dim),
        envelope_v_coefficient: theory::envelope_v_coefficient(inputs.big_m, inputs.a, inputs.mu, inputs.lambda),
    })
}
