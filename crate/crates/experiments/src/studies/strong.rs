//! Strong-solution roundtrip: build `(X, ℬ)` from `B`, solve for `X` from `ℬ`
//! alone and compare the two paths.

use brox_core::diffusion::Medium;
use brox_core::path::{PartitionRule, TimeGrid};
use brox_core::strong::roundtrip_error;

use super::{driving_path, environment, per_replica};
use crate::config::{ExperimentConfig, Study};
use crate::criteria::{ROUNDTRIP_SHARE, ROUNDTRIP_SUP};
use crate::error::Result;
use crate::output::{CriterionOutcome, StudyResult, Table};
use crate::stats::{fmt_list, median, strictly_decreasing};

pub const DT: [f64; 3] = [1e-3, 1e-4, 1e-5];
pub const REPLICAS: usize = 50;
/// Environment step; frozen by the calibration run recorded with the
/// thresholds (finer environments converge markedly slower in `dt`).
pub const H: f64 = 0.1;

fn replica(cfg: &ExperimentConfig, r: u64, dts: &[f64]) -> Result<Vec<(f64, f64, f64)>> {
    let env = environment(cfg.seed, r, cfg.h_or(H))?;
    dts.iter()
        .map(|&dt| {
            let mut medium = Medium::new(env.clone(), PartitionRule::Full)?;
            let mut b = driving_path(cfg.seed, r, dt)?;
            let e = roundtrip_error(&mut medium, &mut b, TimeGrid::covering(1.0, dt)?)?;
            Ok((e.sup_x, e.sup_b, e.k_trunc))
        })
        .collect()
}

pub fn run(cfg: &ExperimentConfig) -> Result<StudyResult> {
    let dts = cfg.dt_or(&DT);
    let n = cfg.replicas_or(REPLICAS);
    let rows = per_replica(n, |r| replica(cfg, r, &dts))?;
    let mut result = StudyResult::new(Study::StrongRoundtrip, cfg);
    let mut per = Table::new("roundtrip", &["replica", "dt", "sup_x_diff", "sup_b_diff", "truncation_level"]);
    for (r, row) in rows.iter().enumerate() {
        for (dt, (sx, sb, k)) in dts.iter().zip(row) {
            per.push(vec![r.into(), (*dt).into(), (*sx).into(), (*sb).into(), (*k).into()]);
        }
    }
    let threshold = cfg.tol("roundtrip_sup", ROUNDTRIP_SUP);
    let share_min = cfg.tol("roundtrip_share", ROUNDTRIP_SHARE);
    let mut by_dt = Table::new("roundtrip_by_dt", &["dt", "median_sup_x_diff", "median_sup_b_diff", "share_within_threshold"]);
    let mut medians = Vec::new();
    let mut shares = Vec::new();
    for (k, dt) in dts.iter().enumerate() {
        let sx: Vec<f64> = rows.iter().map(|row| row[k].0).collect();
        let sb: Vec<f64> = rows.iter().map(|row| row[k].1).collect();
        let share = sx.iter().filter(|&&v| v <= threshold).count() as f64 / n as f64;
        by_dt.push(vec![(*dt).into(), median(&sx).into(), median(&sb).into(), share.into()]);
        medians.push(median(&sx));
        shares.push(share);
        result.summarize(format!("sup_x_diff@dt={dt:e}"), &sx);
    }
    result.tables.push(per);
    result.tables.push(by_dt);
    let share = *shares.last().unwrap();
    result.criteria.push(CriterionOutcome::new(
        7,
        "strong solution reproduces the constructed path",
        strictly_decreasing(&medians) && share >= share_min,
        format!(
            "medians {} at dt {dts:?}; {:.0}% of {n} seeds within {threshold} at the finest step (need {:.0}%)",
            fmt_list(&medians),
            100.0 * share,
            100.0 * share_min
        ),
    ));
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coarse_run_has_one_row_per_replica_and_step() {
        let cfg = ExperimentConfig {
            replicas: Some(3),
            dt: Some(vec![1e-2, 1e-3]),
            ..ExperimentConfig::for_study(Study::StrongRoundtrip)
        };
        let r = run(&cfg).unwrap();
        assert_eq!(r.table("roundtrip").unwrap().rows.len(), 6);
        assert!(r.table("roundtrip").unwrap().numbers("sup_x_diff").iter().all(|v| v.is_finite()));
    }
}
