//! `√(2πK) E[1/S(K)]` with `S(K) = ∫_0^K e^{W(x)} dx`, which tends to 1.

use brox_core::maps::exp_linear_integral;
use brox_core::path::{EnvStreams, Side, TwoSidedEnvironment};

use super::per_replica;
use crate::config::{ExperimentConfig, Study};
use crate::criteria::{MY_HI, MY_LO};
use crate::error::{ExpError, Result};
use crate::output::{CriterionOutcome, StudyResult, Table};
use crate::stats::{fmt_list, strictly_decreasing, Summary};

pub const K: [f64; 3] = [10.0, 25.0, 50.0];
pub const REPLICAS: usize = 20_000;
pub const H: f64 = 0.01;

/// `S(K)` for every `K` in `ks` (increasing), exact on the linear interpolant.
pub fn scale_at(env: &TwoSidedEnvironment, ks: &[f64]) -> Result<Vec<f64>> {
    let h = env.h();
    let mut out = Vec::with_capacity(ks.len());
    let mut acc = 0.0;
    let mut i = 0i64;
    for &k in ks {
        let n = (k / h).round() as i64;
        if ((n as f64) * h - k).abs() > 1e-9 * k {
            return Err(ExpError::Config(format!("K = {k} is not a multiple of h = {h}")));
        }
        while i < n {
            let (a, b) = (env.node_value(i)?, env.node_value(i + 1)?);
            acc += exp_linear_integral(a, (b - a) / h, h);
            i += 1;
        }
        out.push(acc);
    }
    Ok(out)
}

pub fn run(cfg: &ExperimentConfig) -> Result<StudyResult> {
    let mut ks = cfg.k_list.clone().unwrap_or_else(|| K.to_vec());
    ks.sort_by(f64::total_cmp);
    let n = cfg.replicas_or(REPLICAS);
    let h = cfg.h_or(H);
    let k_max = *ks.last().unwrap();
    let inv = per_replica(n, |r| {
        let mut env = TwoSidedEnvironment::sample(h, h, EnvStreams::for_replica(cfg.seed, r))?;
        env.extend_side(Side::Positive, k_max)?;
        Ok(scale_at(&env, &ks)?.into_iter().map(|s| 1.0 / s).collect::<Vec<_>>())
    })?;
    let mut result = StudyResult::new(Study::MatsumotoYor, cfg);
    let mut per = Table::new("inverse_scale", &["replica", "k", "inverse_scale_at_k"]);
    for (r, row) in inv.iter().enumerate() {
        for (k, v) in ks.iter().zip(row) {
            per.push(vec![r.into(), (*k).into(), (*v).into()]);
        }
    }
    let mut by_k = Table::new("normalized_mean", &["k", "normalized_mean", "stderr", "n"]);
    let mut values = Vec::new();
    for (j, k) in ks.iter().enumerate() {
        let c = (2.0 * std::f64::consts::PI * k).sqrt();
        let scaled: Vec<f64> = inv.iter().map(|row| c * row[j]).collect();
        let s = Summary::of(&scaled);
        by_k.push(vec![(*k).into(), s.mean.into(), s.stderr.into(), n.into()]);
        values.push(s.mean);
        result.summarize(format!("normalized_inverse_scale@k={k}"), &scaled);
    }
    result.tables.push(per);
    result.tables.push(by_k);
    let (lo, hi) = (cfg.tol("my_lo", MY_LO), cfg.tol("my_hi", MY_HI));
    let last = *values.last().unwrap();
    let dist: Vec<f64> = values.iter().map(|v| (v - 1.0).abs()).collect();
    result.criteria.push(CriterionOutcome::new(
        10,
        "normalized mean inverse scale tends to 1",
        (lo..=hi).contains(&last) && strictly_decreasing(&dist),
        format!("values {} at K {ks:?} with {n} environments (band [{lo}, {hi}] at the largest K)", fmt_list(&values)),
    ));
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_environment_gives_k() {
        let env = TwoSidedEnvironment::flat(50.0, 0.01).unwrap();
        let s = scale_at(&env, &[10.0, 25.0, 50.0]).unwrap();
        for (v, k) in s.iter().zip([10.0, 25.0, 50.0]) {
            assert!((v - k).abs() < 1e-9 * k);
        }
        // √(2πK)/K for the deterministic sanity value
        let k: f64 = 50.0;
        assert!(((2.0 * std::f64::consts::PI * k).sqrt() / s[2] - 0.354_490_770_181_103_2).abs() < 1e-9);
    }

    #[test]
    fn linear_environment_matches_closed_form() {
        // W(x) = x on the positive side: S(K) = e^K - 1
        let h = 0.5;
        let pos: Vec<f64> = (0..=4).map(|i| i as f64 * h).collect();
        let env = TwoSidedEnvironment::from_values(h, pos, vec![0.0, 0.0]).unwrap();
        let s = scale_at(&env, &[2.0]).unwrap()[0];
        assert!((s - (2f64.exp() - 1.0)).abs() < 1e-12);
    }
}
