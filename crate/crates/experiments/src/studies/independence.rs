//! The driving motion `ℬ` against the environment: sample correlations of
//! `ℬ(1)` with `W(x)` at probe points, and the realized quadratic variation of
//! `ℬ` over `[0, 1]`.
//!
//! The correlation ensemble uses the first configured step and `replicas`
//! environments; the variation check uses the last step on `QV_SEEDS` seeds.

use brox_core::diffusion::{ImkOptions, DEFAULT_MAX_B_STEPS};
use brox_core::path::PartitionRule;

use super::{driving_path, environment, per_replica, realize};
use crate::config::{ExperimentConfig, Study};
use crate::criteria::{CORR_SIGMAS, QV_HI, QV_LO};
use crate::error::Result;
use crate::output::{Cell, CriterionOutcome, StudyResult, Table};
use crate::stats::{correlation, fmt_list};

pub const DT: [f64; 2] = [1e-2, 1e-5];
pub const REPLICAS: usize = 10_000;
pub const QV_SEEDS: usize = 20;
pub const H: f64 = 0.01;
pub const PROBES: [f64; 4] = [-1.0, 0.0, 0.5, 1.0];
/// Native pieces per grid step in the correlation ensemble.
pub const CORR_SUBSTEPS: usize = 4;

fn correlations(cfg: &ExperimentConfig, result: &mut StudyResult, dt: f64) -> Result<()> {
    let n = cfg.replicas_or(REPLICAS);
    let probes = cfg.probes.clone().unwrap_or_else(|| PROBES.to_vec());
    let opts = ImkOptions {
        max_b_steps: DEFAULT_MAX_B_STEPS,
        substeps: CORR_SUBSTEPS,
    };
    let rows = per_replica(n, |r| {
        let env = environment(cfg.seed, r, cfg.h_or(H))?;
        let mut b = driving_path(cfg.seed, r, dt)?;
        let mut real = realize(&env, PartitionRule::Full, &mut b, dt, opts)?;
        let reach = probes.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        real.medium_mut().ensure_extent(reach)?;
        let w = probes
            .iter()
            .map(|&x| Ok(real.env().value(x)?))
            .collect::<Result<Vec<_>>>()?;
        Ok((*real.calb().last().unwrap(), w))
    })?;
    let calb: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let mut per = Table::new("endpoint_and_environment", &["replica", "calb_at_1", "probe", "w_at_probe"]);
    for (r, (c, w)) in rows.iter().enumerate() {
        for (x, wx) in probes.iter().zip(w) {
            per.push(vec![r.into(), (*c).into(), (*x).into(), (*wx).into()]);
        }
    }
    let band = cfg.tol("corr_sigmas", CORR_SIGMAS) / (n as f64).sqrt();
    let mut t = Table::new("correlations", &["probe", "correlation", "band", "status"]);
    let mut ok = true;
    let mut notes = Vec::new();
    for (j, x) in probes.iter().enumerate() {
        let w: Vec<f64> = rows.iter().map(|r| r.1[j]).collect();
        match correlation(&calb, &w) {
            Some(c) => {
                let pass = c.abs() <= band;
                ok &= pass;
                notes.push(format!("x {x}: {c:+.4}"));
                t.push(vec![(*x).into(), c.into(), band.into(), Cell::from(if pass { "pass" } else { "fail" })]);
            }
            None => {
                notes.push(format!("x {x}: skipped"));
                t.push(vec![(*x).into(), Cell::from(""), band.into(), Cell::from("skipped")]);
            }
        }
    }
    result.tables.push(per);
    result.tables.push(t);
    result.summarize("calb_at_1", &calb);
    result.criteria.push(CriterionOutcome::new(
        12,
        "driving motion uncorrelated with the environment",
        ok,
        format!("{} with band {band:.4} (N = {n}, dt {dt:e})", notes.join(", ")),
    ));
    Ok(())
}

fn quadratic_variation(cfg: &ExperimentConfig, result: &mut StudyResult, dt: f64) -> Result<()> {
    let qv = per_replica(QV_SEEDS, |r| {
        let env = environment(cfg.seed, r, cfg.h_or(H))?;
        let mut b = driving_path(cfg.seed, r, dt)?;
        let real = realize(&env, PartitionRule::Full, &mut b, dt, ImkOptions::default())?;
        Ok((real.realized_qv(1.0)?, real.realized_qv_on_grid(1.0)))
    })?;
    let (lo, hi) = (cfg.tol("qv_lo", QV_LO), cfg.tol("qv_hi", QV_HI));
    let mut t = Table::new("quadratic_variation", &["replica", "dt", "qv_native", "qv_grid"]);
    for (r, (a, b)) in qv.iter().enumerate() {
        t.push(vec![r.into(), dt.into(), (*a).into(), (*b).into()]);
    }
    let native: Vec<f64> = qv.iter().map(|q| q.0).collect();
    result.tables.push(t);
    result.summarize("qv_native", &native);
    result.criteria.push(CriterionOutcome::new(
        3,
        "realized quadratic variation of the driving motion is 1",
        native.iter().all(|q| (lo..=hi).contains(q)),
        format!("{} on {QV_SEEDS} seeds at dt {dt:e} (band [{lo}, {hi}])", fmt_list(&native)),
    ));
    Ok(())
}

pub fn run(cfg: &ExperimentConfig) -> Result<StudyResult> {
    let dts = cfg.dt_or(&DT);
    let mut result = StudyResult::new(Study::Independence, cfg);
    quadratic_variation(cfg, &mut result, dts[dts.len() - 1])?;
    correlations(cfg, &mut result, dts[0])?;
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn origin_probe_is_skipped() {
        let cfg = ExperimentConfig {
            replicas: Some(20),
            dt: Some(vec![1e-2, 1e-3]),
            probes: Some(vec![0.0, 1.0]),
            ..ExperimentConfig::for_study(Study::Independence)
        };
        let r = run(&cfg).unwrap();
        let t = r.table("correlations").unwrap();
        assert_eq!(t.rows[0][3], Cell::from("skipped"));
        assert_ne!(t.rows[1][3], Cell::from("skipped"));
    }
}
