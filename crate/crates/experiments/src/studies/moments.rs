//! Local-time moments against the quadrature oracles, chain-integral bounds
//! on random specs, and bound-ratio sweeps over window lengths.
//!
//! `replicas` sets the number of Monte Carlo paths; the chain check always
//! draws `CHAIN_SPECS` specs from its own generator.

use brox_core::moments::{chain_integral, kac_moment, mc_replica, verify_bounds, BoundKind, ChainSpec, MomentQuery};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::per_replica;
use crate::config::{ExperimentConfig, Study};
use crate::criteria::{
    CHAIN_BOUND, CHAIN_BOUND_E1_ZERO, CHAIN_SLACK, KAC_M1_REL, KAC_M2_REL, RATIO_FLAT, RATIO_SPREAD, SIGMAS,
};
use crate::error::Result;
use crate::output::{Cell, CriterionOutcome, StudyResult, Table};
use crate::stats::Summary;

pub const DT: [f64; 1] = [1e-4];
pub const REPLICAS: usize = 10_000;
pub const CHAIN_SPECS: usize = 200;
pub const WINDOWS: [f64; 3] = [0.25, 0.5, 1.0];
pub const BETAS: [f64; 3] = [0.0, 0.25, 0.5];
/// Increment pair for the ratio sweep.
pub const PAIR: (f64, f64) = (0.0, 0.5);
/// Pairs for the product bound with `α = 0`.
pub const PRODUCT_PAIRS: [(f64, f64); 2] = [(-0.5, -0.25), (0.25, 0.5)];
const QUAD_TOL: f64 = 1e-8;
/// Midpoint nodes per side for the bandwidth-averaged oracle.
const SMOOTHING_NODES: usize = 16;
/// Offset separating the chain generator from the path streams.
const CHAIN_STREAM: u64 = 0x6368_6169_6e;

/// Random chain with `m ∈ {2, 3, 4}`, nonzero points in `±[0.05, 2]` and a
/// window inside `[0, 3]`.
pub fn random_chain(rng: &mut ChaCha8Rng) -> ChainSpec {
    let m = rng.random_range(2..=4usize);
    let mut e: Vec<u8> = (0..m).map(|_| rng.random_range(0..=1u8)).collect();
    e[m - 1] = 1;
    let u = (0..m)
        .map(|_| {
            let mag = rng.random_range(0.05..2.0);
            if rng.random_bool(0.5) {
                mag
            } else {
                -mag
            }
        })
        .collect();
    let xi = rng.random_range(0.0..1.0);
    let eta = xi + rng.random_range(0.05..2.0);
    ChainSpec { e, u, xi, eta }
}

/// The Kac moment of `L(1, ·)` at the origin averaged over the box kernel of
/// half-width `eps`: the value the occupation estimator targets at fixed `ε`.
pub fn smoothed_kac_moment(order: usize, eps: f64) -> Result<f64> {
    let n = SMOOTHING_NODES;
    let xs: Vec<f64> = (0..n).map(|i| -eps + (i as f64 + 0.5) * 2.0 * eps / n as f64).collect();
    let mut total = 0.0;
    let mut count = 0usize;
    match order {
        1 => {
            for &x in &xs {
                total += kac_moment(&[x], 0.0, 1.0, QUAD_TOL)?;
                count += 1;
            }
        }
        _ => {
            for &x in &xs {
                for &y in &xs {
                    total += kac_moment(&[x, y], 0.0, 1.0, QUAD_TOL)?;
                    count += 1;
                }
            }
        }
    }
    Ok(total / count as f64)
}

fn kac_checks(cfg: &ExperimentConfig, result: &mut StudyResult) -> Result<()> {
    let dt = cfg.dt_or(&DT)[0];
    let n = cfg.replicas_or(REPLICAS);
    let eps = cfg.epsilon(dt);
    let query = MomentQuery::points(vec![0.0], 0.0, 1.0);
    let l = per_replica(n, |r| Ok(mc_replica(&query, cfg.seed, r, dt, eps)?))?;
    let l2: Vec<f64> = l.iter().map(|v| v * v).collect();
    let mut per = Table::new("local_time_samples", &["replica", "local_time", "local_time_sq"]);
    for (r, (a, b)) in l.iter().zip(&l2).enumerate() {
        per.push(vec![r.into(), (*a).into(), (*b).into()]);
    }
    let mut kac = Table::new("kac_moments", &["order", "mc_mean", "mc_stderr", "oracle", "allowed_gap", "pass", "bandwidth_averaged_oracle"]);
    let specs = [
        (1u8, &l, kac_moment(&[0.0], 0.0, 1.0, QUAD_TOL)?, cfg.tol("kac_m1_rel", KAC_M1_REL)),
        (2u8, &l2, kac_moment(&[0.0, 0.0], 0.0, 1.0, QUAD_TOL)?, cfg.tol("kac_m2_rel", KAC_M2_REL)),
    ];
    let sigmas = cfg.tol("sigmas", SIGMAS);
    for (order, samples, oracle, rel) in specs {
        let s = Summary::of(samples);
        let allowed = rel * oracle.abs() + sigmas * s.stderr;
        let pass = (s.mean - oracle).abs() <= allowed;
        let smoothed = smoothed_kac_moment(order as usize, eps)?;
        kac.push(vec![
            (order as usize).into(),
            s.mean.into(),
            s.stderr.into(),
            oracle.into(),
            allowed.into(),
            pass.into(),
            smoothed.into(),
        ]);
        result.summarize(format!("local_time_power_{order}"), samples);
        result.criteria.push(CriterionOutcome::new(
            order,
            &format!("Kac moment m = {order}"),
            pass,
            format!(
                "MC {:.5} ± {:.5} vs oracle {oracle:.5}, |gap| {:.5} <= {allowed:.5} ({n} paths, dt {dt:e}); \
                 bandwidth-averaged oracle {smoothed:.5}",
                s.mean,
                s.stderr,
                (s.mean - oracle).abs()
            ),
        ));
    }
    result.tables.push(per);
    result.tables.push(kac);
    Ok(())
}

fn chain_checks(cfg: &ExperimentConfig, result: &mut StudyResult) -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ CHAIN_STREAM);
    let specs: Vec<ChainSpec> = (0..CHAIN_SPECS).map(|_| random_chain(&mut rng)).collect();
    let values = per_replica(specs.len(), |k| Ok(chain_integral(&specs[k as usize], QUAD_TOL)?))?;
    let mut t = Table::new("chain_bounds", &["spec", "m", "e", "u", "xi", "eta", "chain_integral", "bound", "pass"]);
    let (mut worst, mut worst_e1_zero) = (0.0f64, 0.0f64);
    let mut all = true;
    let mut n_e1_zero = 0;
    for (k, (s, &j)) in specs.iter().zip(&values).enumerate() {
        let bound = if s.e[0] == 0 { CHAIN_BOUND_E1_ZERO } else { CHAIN_BOUND };
        let pass = j.abs() <= bound + CHAIN_SLACK;
        all &= pass;
        if s.e[0] == 0 {
            n_e1_zero += 1;
            worst_e1_zero = worst_e1_zero.max(j.abs());
        }
        worst = worst.max(j.abs());
        let e: String = s.e.iter().map(|b| char::from(b'0' + b)).collect();
        let u: Vec<String> = s.u.iter().map(|v| format!("{v:.6}")).collect();
        t.push(vec![
            k.into(),
            s.e.len().into(),
            e.into(),
            u.join(";").into(),
            s.xi.into(),
            s.eta.into(),
            j.into(),
            bound.into(),
            pass.into(),
        ]);
    }
    result.tables.push(t);
    result.summarize("abs_chain_integral", &values.iter().map(|v| v.abs()).collect::<Vec<_>>());
    result.criteria.push(CriterionOutcome::new(
        8,
        "chain integrals bounded by 1, and by 1/sqrt(2) when e1 = 0",
        all,
        format!(
            "max |J| {worst:.6} over {} specs; max |J| {worst_e1_zero:.6} over the {n_e1_zero} with e1 = 0 (bound {:.6})",
            specs.len(),
            CHAIN_BOUND_E1_ZERO + CHAIN_SLACK
        ),
    ));
    Ok(())
}

fn ratio_checks(cfg: &ExperimentConfig, result: &mut StudyResult) -> Result<()> {
    let windows: Vec<(f64, f64)> = cfg.windows.clone().unwrap_or_else(|| WINDOWS.to_vec()).iter().map(|&l| (0.0, l)).collect();
    let spread_max = cfg.tol("ratio_spread", RATIO_SPREAD);
    let flat_max = cfg.tol("ratio_flat", RATIO_FLAT);
    let mut t = Table::new(
        "bound_ratios",
        &["bound", "exponent", "window_start", "window_end", "moment", "denominator", "ratio"],
    );
    let mut push_rows = |name: &str, report: &brox_core::moments::BoundReport| {
        for row in &report.rows {
            t.push(vec![
                Cell::from(name),
                row.exponent.into(),
                row.xi.into(),
                row.eta.into(),
                row.value.into(),
                row.denominator.into(),
                row.ratio.into(),
            ]);
        }
    };
    let mut ok = true;
    let mut notes = Vec::new();
    let (x, y) = PAIR;
    for beta in BETAS {
        let report = verify_bounds(&BoundKind::Increment { x, y, n: 1 }, beta, &windows, QUAD_TOL)?;
        push_rows("increment", &report);
        let finite = report.rows.iter().all(|r| r.ratio.is_finite() && r.ratio > 0.0);
        let spread = report.relative_spread();
        ok &= finite && spread < spread_max;
        notes.push(format!("beta {beta}: spread {spread:.3}"));
    }
    let report = verify_bounds(&BoundKind::Product { pairs: PRODUCT_PAIRS.to_vec() }, 0.0, &windows, QUAD_TOL)?;
    push_rows("product", &report);
    let spread = report.relative_spread();
    ok &= spread < flat_max;
    notes.push(format!("product alpha 0: spread {spread:.3e}"));
    result.tables.push(t);
    result.criteria.push(CriterionOutcome::new(
        9,
        "bound ratios stable across window lengths",
        ok,
        format!("{} (limits {spread_max} and {flat_max:e})", notes.join(", ")),
    ));
    Ok(())
}

pub fn run(cfg: &ExperimentConfig) -> Result<StudyResult> {
    let mut result = StudyResult::new(Study::Moments, cfg);
    kac_checks(cfg, &mut result)?;
    chain_checks(cfg, &mut result)?;
    ratio_checks(cfg, &mut result)?;
    Ok(result)
}
