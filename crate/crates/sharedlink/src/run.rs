//! Subcommand execution.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;
use sharedlink_core::lyapunov::{
    build_v1, build_v2, drift_constants_v1, drift_constants_v2, verify_drift, Certificate, DriftReport, Region,
};
use sharedlink_core::simulator::estimate::{ensemble_member, reduce_ensemble};
use sharedlink_core::simulator::{simulate, simulate_with_path, EmpiricalVerdict, StabilityEstimate};
use sharedlink_core::stability::{classify, classify_merge, Classification, SweepCell};
use sharedlink_core::Topology;
use thiserror::Error;

use crate::config::{CertificateName, Command, ConfigError, RunConfig};
use crate::output::{sweep_csv, to_json, trajectory_csv};

/// Exit status for an estimate that finds growth.
pub const EXIT_UNSTABLE: i32 = 2;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Model(#[from] sharedlink_core::Error),
    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot encode output: {0}")]
    Encode(#[from] serde_json::Error),
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Config(e) => e.kind(),
            CliError::Model(_) => "model",
            CliError::Write { .. } => "io",
            CliError::Encode(_) => "encode",
            CliError::Usage(_) => "usage",
        }
    }

    /// The single-line form printed on standard error.
    pub fn to_json_line(&self) -> String {
        let field = match self {
            CliError::Config(e) => e.field(),
            _ => None,
        };
        json!({"error": self.kind(), "field": field, "message": self.to_string()}).to_string()
    }
}

#[derive(Debug)]
pub struct Outcome {
    /// Main result, printed on standard output unless quiet.
    pub report: String,
    pub exit: i32,
    pub files: Vec<PathBuf>,
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, CliError> {
    let path = dir.join(name);
    fs::create_dir_all(dir)
        .and_then(|_| fs::write(&path, contents))
        .map_err(|source| CliError::Write {
            path: path.clone(),
            source,
        })?;
    Ok(path)
}

pub fn run(cfg: &RunConfig, out_dir: &Path) -> Result<Outcome, CliError> {
    match cfg.command {
        Command::Simulate => run_simulate(cfg, out_dir),
        Command::Classify => run_classify(cfg, out_dir),
        Command::Sweep => run_sweep(cfg, out_dir),
        Command::DriftCheck => run_drift_check(cfg, out_dir),
        Command::Estimate => run_estimate(cfg, out_dir),
    }
}

fn run_simulate(cfg: &RunConfig, out_dir: &Path) -> Result<Outcome, CliError> {
    let horizon = cfg.file.horizon.expect("checked at parse");
    let config = cfg.sim_config(horizon)?;
    let (stats, path) = if horizon == 0.0 {
        (simulate(&config)?, Vec::new())
    } else {
        simulate_with_path(&config, cfg.file.output_interval)?
    };
    let report = to_json(&stats)?;
    let files = vec![
        write(out_dir, "trajectory.csv", &trajectory_csv(&path))?,
        write(out_dir, "stats.json", &report)?,
    ];
    Ok(Outcome { report, exit: 0, files })
}

#[derive(Serialize)]
struct ClassifyReport {
    verdict: &'static str,
    phi1: f64,
    /// Capacity used in place of R3 for the merge sets.
    common_capacity: f64,
    in_phi0: u8,
    in_phi1: u8,
    in_phi2: u8,
    existence_merge: u8,
    existence_network: u8,
    uniform: u8,
}

pub fn classification(cfg: &RunConfig) -> Result<(Classification, f64), CliError> {
    let net = cfg.network()?;
    let mean = cfg.chain.mean_inflow();
    Ok(match net.topology() {
        Topology::Merge => {
            let r3 = net.merge.max_receiving;
            (classify_merge(cfg.priority, mean, net.merge.capacity, r3), r3)
        }
        Topology::MergeDiverge => {
            let f3 = net.diverge.expect("merge-diverge").capacity;
            (classify(cfg.priority, &cfg.template()?, f3), f3)
        }
    })
}

fn run_classify(cfg: &RunConfig, out_dir: &Path) -> Result<Outcome, CliError> {
    let (c, common) = classification(cfg)?;
    let report = to_json(&ClassifyReport {
        verdict: c.verdict.label(),
        phi1: cfg.priority.first(),
        common_capacity: common,
        in_phi0: c.in_phi0.into(),
        in_phi1: c.in_phi1.into(),
        in_phi2: c.in_phi2.into(),
        existence_merge: c.existence_merge.into(),
        existence_network: c.existence_network.into(),
        uniform: c.uniform.into(),
    })?;
    let files = vec![write(out_dir, "classification.json", &report)?];
    Ok(Outcome { report, exit: 0, files })
}

/// Classifies every grid cell in parallel; the result is in grid order.
pub fn sweep_cells(cfg: &RunConfig) -> Result<Vec<SweepCell>, CliError> {
    let grid = cfg.sweep_grid()?;
    Ok((0..grid.len()).into_par_iter().map(|i| grid.cell(i)).collect())
}

fn run_sweep(cfg: &RunConfig, out_dir: &Path) -> Result<Outcome, CliError> {
    let cells = sweep_cells(cfg)?;
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for c in &cells {
        *counts.entry(c.verdict.label()).or_default() += 1;
    }
    let path = write(out_dir, "sweep.csv", &sweep_csv(&cells))?;
    let report = to_json(&json!({"cells": cells.len(), "verdicts": counts, "output": "sweep.csv"}))?;
    Ok(Outcome {
        report,
        exit: 0,
        files: vec![path],
    })
}

#[derive(Serialize)]
struct DriftOutput {
    #[serde(flatten)]
    report: DriftReport,
    certificate: Certificate,
}

pub fn drift_report(cfg: &RunConfig) -> Result<(DriftReport, Certificate), CliError> {
    let net = cfg.network()?;
    let d = cfg.drift();
    let default = match net.topology() {
        Topology::Merge => CertificateName::V1,
        Topology::MergeDiverge => CertificateName::V2,
    };
    let seed = cfg.seed();
    match d.certificate.unwrap_or(default) {
        CertificateName::V1 => {
            if net.topology() != Topology::Merge {
                return Err(CliError::Usage("certificate v1 applies to the merge topology".into()));
            }
            let v1 = build_v1(&cfg.chain, net.merge.capacity)?;
            let k = drift_constants_v1(&v1, &net, &cfg.chain, d.bound, d.grid_divisions)?;
            let cert = Certificate::V1(v1);
            let region = Region::Box { bound: d.bound };
            Ok((
                verify_drift(&cert, &net, &cfg.chain, k, &region, d.samples, seed)?,
                cert,
            ))
        }
        CertificateName::V2 => {
            let v2 = build_v2(&net, &cfg.chain)?;
            let region = cfg.region();
            let k = drift_constants_v2(&v2, &net, &cfg.chain, &region, d.calibration_samples, seed)?;
            let cert = Certificate::V2(v2);
            // Verification draws are independent of the calibration draws.
            let verify_seed = seed.wrapping_add(1);
            Ok((
                verify_drift(&cert, &net, &cfg.chain, k, &region, d.samples, verify_seed)?,
                cert,
            ))
        }
    }
}

fn run_drift_check(cfg: &RunConfig, out_dir: &Path) -> Result<Outcome, CliError> {
    let (report, certificate) = drift_report(cfg)?;
    let report = to_json(&DriftOutput { report, certificate })?;
    let files = vec![write(out_dir, "drift_report.json", &report)?];
    Ok(Outcome { report, exit: 0, files })
}

/// Runs the ensemble in parallel and reduces it in run order.
pub fn estimate(cfg: &RunConfig) -> Result<StabilityEstimate, CliError> {
    let opts = cfg.estimator();
    opts.validate()?;
    let config = cfg.sim_config(opts.horizon)?;
    config.validate()?;
    let members = (0..opts.ensemble)
        .into_par_iter()
        .map(|i| ensemble_member(&config, &opts, i))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(reduce_ensemble(&config, &opts, &members))
}

fn run_estimate(cfg: &RunConfig, out_dir: &Path) -> Result<Outcome, CliError> {
    let est = estimate(cfg)?;
    let report = to_json(&est)?;
    let files = vec![write(out_dir, "estimate.json", &report)?];
    let exit = if est.verdict == EmpiricalVerdict::Unstable {
        EXIT_UNSTABLE
    } else {
        0
    };
    Ok(Outcome { report, exit, files })
}
