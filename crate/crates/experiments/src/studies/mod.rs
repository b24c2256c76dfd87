//! One module per study. Each study fans its replicas out over the rayon pool
//! and collects them by replica index, so results never depend on scheduling.

use std::time::Instant;

use brox_core::diffusion::{itomckean_path_with, BroxRealization, ImkOptions, Medium};
use brox_core::path::{BrownianPath, EnvStreams, PartitionRule, Role, StreamId, TimeGrid, TwoSidedEnvironment};
use brox_core::Error;
use rayon::prelude::*;

use crate::config::{ExperimentConfig, Study};
use crate::error::{ExpError, Result};
use crate::output::StudyResult;

pub mod converge;
pub mod independence;
pub mod ito;
pub mod matsumoto_yor;
pub mod moments;
pub mod simulate;
pub mod strong;

/// Initial half-width of sampled environments; media grow on demand.
pub(crate) const ENV_X_MAX: f64 = 2.0;
/// Initial length of driving paths in `B`-time; extended on demand.
pub(crate) const B_HORIZON: f64 = 2.0;

/// Runs the study named in `config` (or `study` when given).
pub fn run(study: Study, config: &ExperimentConfig) -> Result<StudyResult> {
    config.validate()?;
    let start = Instant::now();
    let mut result = match study {
        Study::Simulate => simulate::run(config),
        Study::Converge => converge::run(config),
        Study::Moments => moments::run(config),
        Study::StrongRoundtrip => strong::run(config),
        Study::MatsumotoYor => matsumoto_yor::run(config),
        Study::Independence => independence::run(config),
        Study::ItoCheck => ito::run(config),
    }?;
    result.config.study = Some(study);
    result.wall_time_s = start.elapsed().as_secs_f64();
    Ok(result)
}

/// `f(0), …, f(n-1)` in parallel, in replica order.
pub(crate) fn per_replica<T: Send>(n: usize, f: impl Fn(u64) -> Result<T> + Sync + Send) -> Result<Vec<T>> {
    (0..n as u64).into_par_iter().map(f).collect()
}

pub(crate) fn environment(seed: u64, replica: u64, h: f64) -> Result<TwoSidedEnvironment> {
    Ok(TwoSidedEnvironment::sample(ENV_X_MAX.max(h), h, EnvStreams::for_replica(seed, replica))?)
}

pub(crate) fn driving_path(seed: u64, replica: u64, dt: f64) -> Result<BrownianPath> {
    let grid = TimeGrid::covering(B_HORIZON, dt)?;
    Ok(BrownianPath::sample(grid, seed, StreamId::new(replica, Role::Brownian)))
}

/// `(X, ℬ)` on `[0, 1]` with step `dt` in the medium `(env, rule)`.
pub(crate) fn realize(
    env: &TwoSidedEnvironment,
    rule: PartitionRule,
    b: &mut BrownianPath,
    dt: f64,
    opts: ImkOptions,
) -> Result<BroxRealization> {
    let mut medium = Medium::new(env.clone(), rule)?;
    Ok(itomckean_path_with(&mut medium, b, TimeGrid::covering(1.0, dt)?, opts)?)
}

/// `round(coarse / fine)` when it is an integer ratio.
pub(crate) fn step_ratio(coarse: f64, fine: f64) -> Result<usize> {
    let r = coarse / fine;
    let k = r.round();
    if k < 1.0 || (r - k).abs() > 1e-6 * k {
        return Err(ExpError::Config(format!("time step {coarse} is not a multiple of {fine}")));
    }
    Ok(k as usize)
}

pub(crate) fn is_exhausted(e: &ExpError) -> bool {
    matches!(e, ExpError::Core(Error::Resource(msg)) if msg.starts_with("driving path exhausted"))
}

pub(crate) fn finest(dts: &[f64]) -> f64 {
    dts.iter().cloned().fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn step_ratios() {
        assert_eq!(step_ratio(1e-3, 1e-5).unwrap(), 100);
        assert_eq!(step_ratio(1e-5, 1e-5).unwrap(), 1);
        assert!(step_ratio(1.5e-5, 1e-5).is_err());
    }

    #[test]
    fn replicas_come_back_in_order() {
        let v = per_replica(64, |r| Ok(r * r)).unwrap();
        assert_eq!(v, (0..64u64).map(|r| r * r).collect::<Vec<_>>());
    }
}
