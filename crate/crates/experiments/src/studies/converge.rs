//! Convergence of the polygonal approximation as the partition mesh shrinks,
//! and agreement of the two drift routes.
//!
//! Part one compares `ℬ_π` and `X_π` against the full-grid realization on
//! the same `B` (bridge points are shared through the path's cache) at the
//! first configured step. Part two computes the drift at `t = 1` with `g ≡ 1`
//! once through the local-time Stratonovich integral and once through
//! spatial Riemann sums against `Ẇ_π`, at the last configured step.

use brox_core::diffusion::ImkOptions;
use brox_core::path::PartitionRule;
use brox_core::stratonovich::{drift_from_field, drift_integral_riemann, scaled_local_time, TestFunction};

use super::{driving_path, environment, per_replica, realize};
use crate::config::{ExperimentConfig, Study};
use crate::criteria::DRIFT_GAP;
use crate::error::{ExpError, Result};
use crate::output::{CriterionOutcome, StudyResult, Table};
use crate::stats::{fmt_list, mean, median, strictly_decreasing, Summary};

pub const DT: [f64; 2] = [1e-3, 1e-4];
pub const REPLICAS: usize = 100;
pub const H: f64 = 1e-3;
pub const MESH: [f64; 4] = [0.4, 0.2, 0.1, 0.05];
pub const DRIFT_MESH: [f64; 4] = [0.1, 0.05, 0.02, 0.01];

#[derive(Debug, Clone)]
struct PathErrors {
    sup_calb_sq: Vec<f64>,
    sup_x: Vec<f64>,
}

fn path_errors(cfg: &ExperimentConfig, r: u64, dt: f64, meshes: &[f64]) -> Result<PathErrors> {
    let env = environment(cfg.seed, r, cfg.h_or(H))?;
    let mut b = driving_path(cfg.seed, r, dt)?;
    let full = realize(&env, PartitionRule::Full, &mut b, dt, ImkOptions::default())?;
    let mut out = PathErrors {
        sup_calb_sq: Vec::new(),
        sup_x: Vec::new(),
    };
    for &mesh in meshes {
        let poly = realize(&env, PartitionRule::Uniform(mesh), &mut b, dt, ImkOptions::default())?;
        let sup = |a: &[f64], c: &[f64]| a.iter().zip(c).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
        out.sup_calb_sq.push(sup(poly.calb(), full.calb()).powi(2));
        out.sup_x.push(sup(poly.x(), full.x()));
    }
    Ok(out)
}

#[derive(Debug, Clone)]
struct DriftGaps {
    strat: f64,
    riemann: Vec<f64>,
}

fn drift_gaps(cfg: &ExperimentConfig, r: u64, dt: f64, meshes: &[f64]) -> Result<DriftGaps> {
    let env = environment(cfg.seed, r, cfg.h_or(H))?;
    let mut b = driving_path(cfg.seed, r, dt)?;
    let mut real = realize(&env, PartitionRule::Full, &mut b, dt, ImkOptions::default())?;
    let ts = [1.0];
    let lt = scaled_local_time(&mut real, &ts, cfg.epsilon(dt))?;
    let g = TestFunction::unit();
    let strat = drift_from_field(&g, real.env(), &lt, &ts)?.values[0];
    let riemann = meshes
        .iter()
        .map(|&m| Ok(drift_integral_riemann(&g, real.env(), &lt, &ts, m)?.values[0]))
        .collect::<Result<Vec<_>>>()?;
    Ok(DriftGaps { strat, riemann })
}

pub fn run(cfg: &ExperimentConfig) -> Result<StudyResult> {
    let dts = cfg.dt_or(&DT);
    let (dt_paths, dt_drift) = (dts[0], dts[dts.len() - 1]);
    let n = cfg.replicas_or(REPLICAS);
    let meshes = cfg.mesh.clone().unwrap_or_else(|| MESH.to_vec());
    let drift_meshes = cfg.drift_mesh.clone().unwrap_or_else(|| DRIFT_MESH.to_vec());
    let h = cfg.h_or(H);
    if let Some(m) = meshes.iter().chain(&drift_meshes).find(|&&m| m < h * (1.0 - 1e-9)) {
        return Err(ExpError::Config(format!("mesh {m} is finer than the environment step {h}")));
    }
    let mut result = StudyResult::new(Study::Converge, cfg);

    let paths = per_replica(n, |r| path_errors(cfg, r, dt_paths, &meshes))?;
    let mut per = Table::new("mesh_errors", &["replica", "mesh", "sup_calb_diff_sq", "sup_x_diff"]);
    for (r, p) in paths.iter().enumerate() {
        for (k, m) in meshes.iter().enumerate() {
            per.push(vec![r.into(), (*m).into(), p.sup_calb_sq[k].into(), p.sup_x[k].into()]);
        }
    }
    let mut by_mesh = Table::new(
        "mesh_convergence",
        &["mesh", "mean_sup_calb_diff_sq", "stderr_sup_calb_diff_sq", "mean_sup_x_diff", "stderr_sup_x_diff", "n"],
    );
    let mut means = Vec::new();
    for (k, m) in meshes.iter().enumerate() {
        let sq: Vec<f64> = paths.iter().map(|p| p.sup_calb_sq[k]).collect();
        let sx: Vec<f64> = paths.iter().map(|p| p.sup_x[k]).collect();
        let (a, b) = (Summary::of(&sq), Summary::of(&sx));
        by_mesh.push(vec![(*m).into(), a.mean.into(), a.stderr.into(), b.mean.into(), b.stderr.into(), n.into()]);
        means.push(mean(&sq));
        result.summarize(format!("sup_calb_diff_sq@mesh={m}"), &sq);
    }
    result.tables.push(per);
    result.tables.push(by_mesh);
    result.criteria.push(CriterionOutcome::new(
        5,
        "mean sup |calB_pi - calB|^2 decreases with the mesh",
        strictly_decreasing(&means),
        format!("means {} at meshes {meshes:?}, dt {dt_paths:e}, {n} replicas", fmt_list(&means)),
    ));

    let drifts = per_replica(n, |r| drift_gaps(cfg, r, dt_drift, &drift_meshes))?;
    let mut per = Table::new("drift_routes", &["replica", "mesh", "drift_local_time", "drift_riemann", "relative_gap"]);
    let gap = |d: &DriftGaps, k: usize| (d.strat - d.riemann[k]).abs() / d.strat.abs();
    for (r, d) in drifts.iter().enumerate() {
        for (k, m) in drift_meshes.iter().enumerate() {
            per.push(vec![r.into(), (*m).into(), d.strat.into(), d.riemann[k].into(), gap(d, k).into()]);
        }
    }
    let mut by_mesh = Table::new("drift_gap_by_mesh", &["mesh", "median_relative_gap", "mean_abs_gap", "n"]);
    let mut medians = Vec::new();
    for (k, m) in drift_meshes.iter().enumerate() {
        let gaps: Vec<f64> = drifts.iter().map(|d| gap(d, k)).collect();
        let abs: Vec<f64> = drifts.iter().map(|d| (d.strat - d.riemann[k]).abs()).collect();
        by_mesh.push(vec![(*m).into(), median(&gaps).into(), mean(&abs).into(), n.into()]);
        medians.push(median(&gaps));
        result.summarize(format!("drift_relative_gap@mesh={m}"), &gaps);
    }
    result.tables.push(per);
    result.tables.push(by_mesh);
    let threshold = cfg.tol("drift_gap", DRIFT_GAP);
    let last = *medians.last().unwrap();
    result.criteria.push(CriterionOutcome::new(
        6,
        "drift routes agree and the gap shrinks with the mesh",
        last < threshold && strictly_decreasing(&medians),
        format!(
            "median relative gaps {} at meshes {drift_meshes:?} (threshold {threshold} at the finest), dt {dt_drift:e}",
            fmt_list(&medians)
        ),
    ));
    Ok(result)
}
