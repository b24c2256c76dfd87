//! Pinned acceptance thresholds. Each can be overridden by name through the
//! `tolerances` map of the configuration.

/// Kac first moment: relative slack on top of `SIGMAS` standard errors.
pub const KAC_M1_REL: f64 = 0.03;
/// Kac second moment: relative slack.
pub const KAC_M2_REL: f64 = 0.05;
/// Standard errors allowed on Monte Carlo comparisons.
pub const SIGMAS: f64 = 3.0;

/// Band for the realized quadratic variation of the driving motion over `[0, 1]`.
pub const QV_LO: f64 = 0.99;
pub const QV_HI: f64 = 1.01;

/// Median relative gap between the two drift routes at the finest mesh.
pub const DRIFT_GAP: f64 = 0.05;

/// Roundtrip: sup error threshold at the finest step, and the share of
/// seeds that must meet it.
pub const ROUNDTRIP_SUP: f64 = 0.05;
pub const ROUNDTRIP_SHARE: f64 = 0.8;

/// Chain integral bounds and the slack on the `e_1 = 0` case.
pub const CHAIN_BOUND: f64 = 1.0;
pub const CHAIN_BOUND_E1_ZERO: f64 = std::f64::consts::FRAC_1_SQRT_2;
pub const CHAIN_SLACK: f64 = 1e-6;

/// Largest relative spread of a bound ratio across window lengths.
pub const RATIO_SPREAD: f64 = 0.2;
/// Spread allowed for ratios that should not depend on the window at all.
pub const RATIO_FLAT: f64 = 1e-5;

/// Band for `√(2πK) E[1/S(K)]` at the largest `K`.
pub const MY_LO: f64 = 0.85;
pub const MY_HI: f64 = 1.15;

/// Itô residual median as a fraction of the median `|S(X(1))|`.
pub const ITO_SHARE: f64 = 0.05;

/// Correlation band in units of `1/√N`.
pub const CORR_SIGMAS: f64 = 3.0;
