//! Itô formula for `F = S` (`f = e^u`): residual of
//! `S(X(t)) = ∫_0^t e^{W(X)} dℬ` at `t = 1` under joint refinement of the
//! time step and the environment grid.

use brox_core::diffusion::ImkOptions;
use brox_core::path::PartitionRule;
use brox_core::stratonovich::{ito_formula_terms, TestFunction};

use super::{driving_path, environment, per_replica, realize};
use crate::config::{ExperimentConfig, Study};
use crate::criteria::ITO_SHARE;
use crate::error::Result;
use crate::output::{CriterionOutcome, StudyResult, Table};
use crate::stats::{fmt_list, median, strictly_decreasing};

pub const DT: [f64; 3] = [1e-3, 1e-4, 1e-5];
pub const REPLICAS: usize = 50;

/// Environment step tied to the time step: `1 / round(0.1 / √dt)`.
pub fn joint_h(dt: f64) -> f64 {
    1.0 / (0.1 / dt.sqrt()).round().max(1.0)
}

pub fn run(cfg: &ExperimentConfig) -> Result<StudyResult> {
    let dts = cfg.dt_or(&DT);
    let n = cfg.replicas_or(REPLICAS);
    let f = TestFunction::exp_u();
    let hs: Vec<f64> = dts.iter().map(|&dt| cfg.h.unwrap_or_else(|| joint_h(dt))).collect();
    let rows = per_replica(n, |r| {
        dts.iter()
            .zip(&hs)
            .map(|(&dt, &h)| {
                let env = environment(cfg.seed, r, h)?;
                let mut b = driving_path(cfg.seed, r, dt)?;
                let mut real = realize(&env, PartitionRule::Full, &mut b, dt, ImkOptions::default())?;
                let terms = ito_formula_terms(&f, &mut real, 1.0, cfg.epsilon(dt))?;
                Ok((terms.residual(), terms.f_end.abs()))
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let mut result = StudyResult::new(Study::ItoCheck, cfg);
    let mut per = Table::new("ito_residual", &["replica", "dt", "h", "residual", "abs_scale_at_x1"]);
    for (r, row) in rows.iter().enumerate() {
        for ((dt, h), (res, s)) in dts.iter().zip(&hs).zip(row) {
            per.push(vec![r.into(), (*dt).into(), (*h).into(), (*res).into(), (*s).into()]);
        }
    }
    let mut by_dt = Table::new("ito_by_dt", &["dt", "h", "median_residual", "median_abs_scale_at_x1"]);
    let mut medians = Vec::new();
    let mut scales = Vec::new();
    for (k, (dt, h)) in dts.iter().zip(&hs).enumerate() {
        let res: Vec<f64> = rows.iter().map(|row| row[k].0).collect();
        let s: Vec<f64> = rows.iter().map(|row| row[k].1).collect();
        by_dt.push(vec![(*dt).into(), (*h).into(), median(&res).into(), median(&s).into()]);
        medians.push(median(&res));
        scales.push(median(&s));
        result.summarize(format!("ito_residual@dt={dt:e}"), &res);
    }
    result.tables.push(per);
    result.tables.push(by_dt);
    let share = cfg.tol("ito_share", ITO_SHARE);
    let (last, scale) = (*medians.last().unwrap(), *scales.last().unwrap());
    result.criteria.push(CriterionOutcome::new(
        11,
        "Ito formula residual shrinks under joint refinement",
        strictly_decreasing(&medians) && last <= share * scale,
        format!(
            "medians {} at dt {dts:?} (h {}); finest {last:.4} vs {share} * median |S(X(1))| = {:.4}",
            fmt_list(&medians),
            fmt_list(&hs),
            share * scale
        ),
    ));
    Ok(result)
}
