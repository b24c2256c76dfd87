//! Polygonal equation identity: `sup_t |X_π + ½ drift_π - ℬ_π|` per seed and
//! time step. The coarser driving paths are subsamples of the finest one, so
//! the step levels of a seed share one `B`.

use brox_core::diffusion::ImkOptions;
use brox_core::path::PartitionRule;
use brox_core::stratonovich::polygonal_identity_residual;

use super::{driving_path, environment, finest, is_exhausted, per_replica, realize, step_ratio};
use crate::config::{ExperimentConfig, Study};
use crate::error::Result;
use crate::output::{CriterionOutcome, StudyResult, Table};
use crate::stats::{fmt_list, median, strictly_decreasing, Summary};

pub const DT: [f64; 3] = [1e-3, 1e-4, 1e-5];
pub const REPLICAS: usize = 50;
pub const H: f64 = 0.01;
/// Partition mesh of the polygonal environment.
pub const MESH: f64 = 0.1;
const MAX_EXTENSIONS: usize = 8;

fn replica(cfg: &ExperimentConfig, r: u64, dts: &[f64], mesh: f64) -> Result<Vec<f64>> {
    let h = cfg.h_or(H);
    let env = environment(cfg.seed, r, h)?;
    let fine = finest(dts);
    let mut b = driving_path(cfg.seed, r, fine)?;
    let mut attempt = 0;
    'retry: loop {
        let mut out = Vec::with_capacity(dts.len());
        for &dt in dts {
            let mut coarse = b.subsample(step_ratio(dt, fine)?)?;
            match realize(&env, PartitionRule::Uniform(mesh), &mut coarse, dt, ImkOptions::default()) {
                Ok(real) => out.push(polygonal_identity_residual(&real)?),
                Err(e) if is_exhausted(&e) && attempt < MAX_EXTENSIONS => {
                    attempt += 1;
                    let n = b.grid().n_steps();
                    b.extend(n)?;
                    continue 'retry;
                }
                Err(e) => return Err(e),
            }
        }
        return Ok(out);
    }
}

pub fn run(cfg: &ExperimentConfig) -> Result<StudyResult> {
    let dts = cfg.dt_or(&DT);
    let n = cfg.replicas_or(REPLICAS);
    let mesh = cfg.mesh.as_ref().map_or(MESH, |m| m[0]);
    let rows = per_replica(n, |r| replica(cfg, r, &dts, mesh))?;

    let mut result = StudyResult::new(Study::Simulate, cfg);
    let mut per = Table::new("identity_residual", &["replica", "dt", "sup_residual"]);
    for (r, row) in rows.iter().enumerate() {
        for (dt, v) in dts.iter().zip(row) {
            per.push(vec![r.into(), (*dt).into(), (*v).into()]);
        }
    }
    let mut by_dt = Table::new("identity_by_dt", &["dt", "median_sup_residual", "mean", "stderr", "n"]);
    let mut medians = Vec::new();
    for (k, dt) in dts.iter().enumerate() {
        let vals: Vec<f64> = rows.iter().map(|row| row[k]).collect();
        let s = Summary::of(&vals);
        by_dt.push(vec![(*dt).into(), s.median.into(), s.mean.into(), s.stderr.into(), s.n.into()]);
        medians.push(median(&vals));
        result.summarize(format!("sup_residual@dt={dt:e}"), &vals);
    }
    result.tables.push(per);
    result.tables.push(by_dt);
    result.criteria.push(CriterionOutcome::new(
        4,
        "polygonal identity residual decreases with dt",
        strictly_decreasing(&medians),
        format!("medians {} over {n} seeds at dt {dts:?}", fmt_list(&medians)),
    ));
    Ok(result)
}
