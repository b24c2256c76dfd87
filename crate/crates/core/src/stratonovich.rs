//! The singular drift `∫ g(X, W(X)) Ẇ(X) ds` computed three ways: through the
//! local-time Stratonovich integral in space, through spatial Riemann sums
//! against `Ẇ_π`, and as a time-domain sum along the polygonal diffusion.

use std::fmt;
use std::sync::Arc;

use crate::diffusion::BroxRealization;
use crate::error::{Error, Result};
use crate::local_time::{occupation_local_time, LocalTimeField};
use crate::path::{Partition, PartitionRule, PerUnitMeshes, TwoSidedEnvironment};

pub type Fn2 = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// `g(x, u)` with its derivatives. The growth and Hölder constants are
/// asserted by the caller, not checked.
#[derive(Clone)]
pub struct TestFunction {
    pub g: Fn2,
    pub dg_du: Fn2,
    pub dg_dx: Option<Fn2>,
    pub d2g_du2: Option<Fn2>,
    pub theta: f64,
    pub holder_lambda: f64,
    pub c1: f64,
    pub c2: f64,
}

impl fmt::Debug for TestFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TestFunction")
            .field("theta", &self.theta)
            .field("holder_lambda", &self.holder_lambda)
            .field("c1", &self.c1)
            .field("c2", &self.c2)
            .finish_non_exhaustive()
    }
}

impl TestFunction {
    pub fn new(g: Fn2, dg_du: Fn2, theta: f64, holder_lambda: f64) -> Result<Self> {
        if !(holder_lambda > 0.5 && holder_lambda <= 1.0) {
            return Err(Error::config(format!("Hölder exponent {holder_lambda} must lie in (1/2, 1]")));
        }
        if !(theta >= 0.0) {
            return Err(Error::config("growth constant must be nonnegative"));
        }
        Ok(TestFunction {
            g,
            dg_du,
            dg_dx: None,
            d2g_du2: None,
            theta,
            holder_lambda,
            c1: 1.0,
            c2: 1.0,
        })
    }

    pub fn with_dx(mut self, dg_dx: Fn2) -> Self {
        self.dg_dx = Some(dg_dx);
        self
    }

    pub fn with_duu(mut self, d2g_du2: Fn2) -> Self {
        self.d2g_du2 = Some(d2g_du2);
        self
    }

    pub fn with_constants(mut self, c1: f64, c2: f64) -> Self {
        self.c1 = c1;
        self.c2 = c2;
        self
    }

    /// `g ≡ 1`.
    pub fn unit() -> Self {
        TestFunction::new(Arc::new(|_, _| 1.0), Arc::new(|_, _| 0.0), 0.0, 1.0)
            .unwrap()
            .with_dx(Arc::new(|_, _| 0.0))
            .with_duu(Arc::new(|_, _| 0.0))
            .with_constants(1.0, 0.0)
    }

    /// `g(x, u) = e^u`, whose primitive in `x` is the scale function.
    pub fn exp_u() -> Self {
        TestFunction::new(Arc::new(|_, u: f64| u.exp()), Arc::new(|_, u: f64| u.exp()), 1.0, 1.0)
            .unwrap()
            .with_dx(Arc::new(|_, _| 0.0))
            .with_duu(Arc::new(|_, u: f64| u.exp()))
            .with_constants(1.0, 1.0)
    }

    #[inline]
    pub fn value(&self, x: f64, u: f64) -> f64 {
        (self.g)(x, u)
    }

    #[inline]
    pub fn du(&self, x: f64, u: f64) -> f64 {
        (self.dg_du)(x, u)
    }

    /// `∂_x g`, by central differences when not supplied.
    pub fn dx(&self, x: f64, u: f64) -> f64 {
        match &self.dg_dx {
            Some(f) => f(x, u),
            None => {
                let h = 1e-6 * x.abs().max(1.0);
                ((self.g)(x + h, u) - (self.g)(x - h, u)) / (2.0 * h)
            }
        }
    }

    /// `(x, u) ↦ g(x, u) e^{-u}`, with `∂_u` and `∂_uu` formed symbolically.
    pub fn times_exp_neg_u(&self) -> TestFunction {
        let (g, gu) = (self.g.clone(), self.dg_du.clone());
        let g2 = self.g.clone();
        let mut out = TestFunction {
            g: Arc::new(move |x, u| g(x, u) * (-u).exp()),
            dg_du: Arc::new(move |x, u| (gu(x, u) - g2(x, u)) * (-u).exp()),
            dg_dx: None,
            d2g_du2: None,
            theta: self.theta + 1.0,
            holder_lambda: self.holder_lambda,
            c1: self.c1,
            c2: self.c2,
        };
        if let Some(gx) = self.dg_dx.clone() {
            out.dg_dx = Some(Arc::new(move |x, u| gx(x, u) * (-u).exp()));
        }
        if let Some(guu) = self.d2g_du2.clone() {
            let (g3, gu3) = (self.g.clone(), self.dg_du.clone());
            out.d2g_du2 = Some(Arc::new(move |x, u| (guu(x, u) - 2.0 * gu3(x, u) + g3(x, u)) * (-u).exp()));
        }
        out
    }

    /// `∂_u g` as a test function; needs `∂_uu g`.
    pub fn u_derivative(&self) -> Result<TestFunction> {
        let duu = self
            .d2g_du2
            .clone()
            .ok_or_else(|| Error::config("second u-derivative not supplied"))?;
        let mut out = TestFunction::new(self.dg_du.clone(), duu, self.theta, self.holder_lambda)?;
        out.c1 = self.c2;
        out.c2 = self.c2;
        Ok(out)
    }

    /// Largest finite-difference mismatch of `∂_u g` at the given points;
    /// a domain error when it exceeds `1e-6` (relative to `max(1, |∂_u g|)`).
    pub fn check_u_derivative(&self, points: &[(f64, f64)]) -> Result<f64> {
        let mut worst = 0.0f64;
        for &(x, u) in points {
            let h = 1e-5 * u.abs().max(1.0);
            let fd = ((self.g)(x, u + h) - (self.g)(x, u - h)) / (2.0 * h);
            let exact = (self.dg_du)(x, u);
            let err = (fd - exact).abs() / exact.abs().max(1.0);
            worst = worst.max(err);
        }
        if worst > 1e-6 {
            return Err(Error::domain(format!("∂_u g disagrees with finite differences by {worst:e}")));
        }
        Ok(worst)
    }

    /// Default `c₃(N) = c₁ + c₂`.
    pub fn c3(&self, _unit: i64) -> f64 {
        self.c1 + self.c2
    }
}

/// Local time of `B` sampled at `S(x_i)` for consecutive environment nodes
/// `i = node_lo..=node_hi`; zero outside that window.
#[derive(Debug, Clone)]
pub struct ScaledLocalTime {
    node_lo: i64,
    node_hi: i64,
    field: LocalTimeField,
}

impl ScaledLocalTime {
    pub fn field(&self) -> &LocalTimeField {
        &self.field
    }

    pub fn node_range(&self) -> (i64, i64) {
        (self.node_lo, self.node_hi)
    }

    pub fn n_stamps(&self) -> usize {
        self.field.xi_list().len()
    }

    #[inline]
    pub fn at_node(&self, stamp: usize, i: i64) -> f64 {
        if i < self.node_lo || i > self.node_hi {
            0.0
        } else {
            self.field.row(stamp)[(i - self.node_lo) as usize]
        }
    }

    /// A field that vanishes everywhere, for one stamp.
    pub fn zero() -> Self {
        ScaledLocalTime {
            node_lo: 0,
            node_hi: -1,
            field: LocalTimeField::from_rows(Vec::new(), vec![0.0], vec![Vec::new()], 1.0).unwrap(),
        }
    }

    /// Constant value `c` on nodes `lo..=hi` (test scenarios).
    pub fn constant(c: f64, lo: i64, hi: i64) -> Self {
        let n = (hi - lo + 1) as usize;
        let xs: Vec<f64> = (0..n).map(|i| i as f64).collect();
        let field = LocalTimeField::from_rows(xs, vec![0.0], vec![vec![c; n]], 1.0).unwrap();
        ScaledLocalTime {
            node_lo: lo,
            node_hi: hi,
            field,
        }
    }
}

/// `L_B(ξ, S(x_i))` for each stamp `ξ = T⁻¹(t)`, `t ∈ ts`, on the node window
/// outside of which every stamp's local time vanishes.
pub fn scaled_local_time(realization: &mut BroxRealization, ts: &[f64], epsilon: f64) -> Result<ScaledLocalTime> {
    let xis = ts
        .iter()
        .map(|&t| realization.xi_at(t))
        .collect::<Result<Vec<_>>>()?;
    let xi_max = xis.iter().cloned().fold(0.0, f64::max);
    let b = realization.b().clone();
    let k = b.steps_before(xi_max).max(1);
    let (bmin, bmax) = b.values()[..k]
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| (l.min(v), h.max(v)));
    let (lo_y, hi_y) = (bmin - 2.0 * epsilon, bmax + 2.0 * epsilon);
    let medium = realization.medium_mut();
    medium.ensure_scale_range(lo_y, hi_y)?;
    let h = medium.env().h();
    let scale = medium.scale();
    let node_lo = (scale.invert(lo_y)? / h).floor() as i64 - 1;
    let node_hi = (scale.invert(hi_y)? / h).ceil() as i64 + 1;
    medium.ensure_extent((node_lo.abs().max(node_hi.abs()) + 1) as f64 * h)?;
    let scale = medium.scale();
    let x_grid = (node_lo..=node_hi)
        .map(|i| scale.evaluate(i as f64 * h))
        .collect::<Result<Vec<_>>>()?;
    let field = occupation_local_time(&b, epsilon, &x_grid, &xis)?;
    Ok(ScaledLocalTime {
        node_lo,
        node_hi,
        field,
    })
}

/// The pieces of a Stratonovich integral over `[a, b]`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StratonovichParts {
    /// `Σ f(x_i) (W(x_{i+1}) - W(x_i))` over positive cells, left endpoints.
    pub ito_pos: f64,
    /// Adapted sum on the negative side, oriented along `x`: the outward
    /// left endpoint is the cell's right end.
    pub ito_neg: f64,
    /// `Σ ∂_u g L Δx` on each side.
    pub corr_pos: f64,
    pub corr_neg: f64,
}

impl StratonovichParts {
    /// Itô sums plus half the correction on the positive side, minus half on
    /// the negative side (the orientation flips with the adapted direction).
    pub fn value(&self) -> f64 {
        self.ito_pos + self.ito_neg + 0.5 * (self.corr_pos - self.corr_neg)
    }

    /// Itô sums alone.
    pub fn ito(&self) -> f64 {
        self.ito_pos + self.ito_neg
    }
}

fn node_window(env: &TwoSidedEnvironment, a: f64, b: f64) -> Result<(i64, i64)> {
    if b < a {
        return Err(Error::domain("integration window must satisfy a <= b"));
    }
    let (ia, ib) = (env.snap(a), env.snap(b));
    if !env.contains_node(ia) || !env.contains_node(ib) {
        return Err(Error::Extent {
            what: "Stratonovich window",
            at: if env.contains_node(ia) { b } else { a },
            lo: -env.x_max_neg(),
            hi: env.x_max_pos(),
        });
    }
    Ok((ia, ib))
}

/// `∫_a^b g(x, W(x)) L(ξ, S(x)) W(d°x)` on the environment grid.
pub fn stratonovich_integral(
    g: &TestFunction,
    env: &TwoSidedEnvironment,
    lt: &ScaledLocalTime,
    stamp: usize,
    a: f64,
    b: f64,
) -> Result<StratonovichParts> {
    let (ia, ib) = node_window(env, a, b)?;
    let h = env.h();
    let mut parts = StratonovichParts::default();
    // cells outside the support contribute exactly zero
    let lo = ia.max(lt.node_lo - 1);
    let hi = ib.min(lt.node_hi + 1);
    for i in lo..hi {
        let (w0, w1) = (env.node_value(i)?, env.node_value(i + 1)?);
        if i >= 0 {
            let l = lt.at_node(stamp, i);
            if l == 0.0 {
                continue;
            }
            let x = env.node_x(i);
            parts.ito_pos += g.value(x, w0) * l * (w1 - w0);
            parts.corr_pos += g.du(x, w0) * l * h;
        } else {
            let l = lt.at_node(stamp, i + 1);
            if l == 0.0 {
                continue;
            }
            let x = env.node_x(i + 1);
            parts.ito_neg += g.value(x, w1) * l * (w1 - w0);
            parts.corr_neg += g.du(x, w1) * l * h;
        }
    }
    Ok(parts)
}

/// `∫ g(x, W(x)) L(ξ, S(x)) Ẇ_π(x) dx` with the partition's constant slopes and
/// the trapezoid rule on environment nodes inside each segment.
pub fn stratonovich_riemann(
    g: &TestFunction,
    env: &TwoSidedEnvironment,
    lt: &ScaledLocalTime,
    stamp: usize,
    partition: &Partition,
) -> Result<f64> {
    let h = env.h();
    let idx = partition.indices();
    let f = |i: i64| -> Result<f64> {
        let l = lt.at_node(stamp, i);
        if l == 0.0 {
            Ok(0.0)
        } else {
            Ok(g.value(env.node_x(i), env.node_value(i)?) * l)
        }
    };
    let mut total = 0.0;
    for seg in idx.windows(2) {
        let (p, q) = (seg[0], seg[1]);
        if q <= lt.node_lo || p >= lt.node_hi {
            continue;
        }
        let slope = (env.node_value(q)? - env.node_value(p)?) / ((q - p) as f64 * h);
        if slope == 0.0 {
            continue;
        }
        let mut area = 0.5 * (f(p)? + f(q)?);
        for i in p + 1..q {
            area += f(i)?;
        }
        total += slope * area * h;
    }
    Ok(total)
}

/// `t ↦ ∫_0^t g(X, W(X)) Ẇ(X) ds` at the requested times.
#[derive(Debug, Clone, PartialEq)]
pub struct DriftSeries {
    pub ts: Vec<f64>,
    pub values: Vec<f64>,
}

impl DriftSeries {
    pub fn at(&self, t: f64) -> Result<f64> {
        self.ts
            .iter()
            .position(|&s| (s - t).abs() <= 1e-12 * t.abs().max(1.0))
            .map(|k| self.values[k])
            .ok_or_else(|| Error::Lookup(format!("drift not computed at t = {t}")))
    }
}

/// Drift through the local-time Stratonovich integral of `g e^{-u}` over the
/// window where `L_B(ξ, S(·))` can be nonzero.
pub fn drift_integral(
    g: &TestFunction,
    realization: &mut BroxRealization,
    ts: &[f64],
    epsilon: f64,
) -> Result<DriftSeries> {
    let lt = scaled_local_time(realization, ts, epsilon)?;
    drift_from_field(g, realization.env(), &lt, ts)
}

pub fn drift_from_field(g: &TestFunction, env: &TwoSidedEnvironment, lt: &ScaledLocalTime, ts: &[f64]) -> Result<DriftSeries> {
    let ge = g.times_exp_neg_u();
    let h = env.h();
    let (a, b) = ((lt.node_lo - 1) as f64 * h, (lt.node_hi + 1) as f64 * h);
    let values = (0..ts.len())
        .map(|s| stratonovich_integral(&ge, env, lt, s, a, b).map(|p| p.value()))
        .collect::<Result<Vec<_>>>()?;
    Ok(DriftSeries {
        ts: ts.to_vec(),
        values,
    })
}

/// Drift through spatial Riemann sums against `Ẇ_π` on a uniform partition.
pub fn drift_integral_riemann(
    g: &TestFunction,
    env: &TwoSidedEnvironment,
    lt: &ScaledLocalTime,
    ts: &[f64],
    mesh: f64,
) -> Result<DriftSeries> {
    let ge = g.times_exp_neg_u();
    let rule = PartitionRule::Uniform(mesh);
    let k = rule.granularity(env.h()) as i64;
    let lo = (lt.node_lo - 1).div_euclid(k) * k;
    let hi = (lt.node_hi + 1 + k - 1).div_euclid(k) * k;
    let lo = lo.max(-(env.n_neg() as i64));
    let hi = hi.min(env.n_pos() as i64);
    let part = rule.realize(env.h(), lo, hi)?;
    let values = (0..ts.len())
        .map(|s| stratonovich_riemann(&ge, env, lt, s, &part))
        .collect::<Result<Vec<_>>>()?;
    Ok(DriftSeries {
        ts: ts.to_vec(),
        values,
    })
}

/// `Σ g(X_π, W_π(X_π)) Ẇ_π(X_π) ds` (left endpoint) at every grid time.
pub fn drift_integral_polygonal(g: &TestFunction, realization: &BroxRealization) -> Result<DriftSeries> {
    let grid = realization.grid();
    let dt = grid.dt();
    let mut values = Vec::with_capacity(grid.len());
    values.push(0.0);
    let mut acc = 0.0;
    for &x in &realization.x()[..grid.n_steps()] {
        let (w, slope) = realization.w_and_slope(x)?;
        acc += g.value(x, w) * slope * dt;
        values.push(acc);
    }
    Ok(DriftSeries {
        ts: (0..grid.len()).map(|j| grid.time(j)).collect(),
        values,
    })
}

/// `sup_j |X_π(t_j) + ½ drift_π(t_j) - ℬ_π(t_j)|` with `g ≡ 1`.
pub fn polygonal_identity_residual(realization: &BroxRealization) -> Result<f64> {
    let drift = drift_integral_polygonal(&TestFunction::unit(), realization)?;
    Ok(realization
        .x()
        .iter()
        .zip(realization.calb())
        .zip(&drift.values)
        .map(|((x, b), d)| (x + 0.5 * d - b).abs())
        .fold(0.0, f64::max))
}

/// `|X(t) - ℬ(t) + ½ drift(t)|` for a drift computed with `g ≡ 1`.
pub fn equation_residual(realization: &BroxRealization, drift: &DriftSeries, t: f64) -> Result<f64> {
    let j = realization.grid().floor_index(t);
    Ok((realization.x()[j] - realization.calb()[j] + 0.5 * drift.at(t)?).abs())
}

const GAUSS3: [(f64, f64); 3] = [
    (-0.774_596_669_241_483_4, 5.0 / 9.0),
    (0.0, 8.0 / 9.0),
    (0.774_596_669_241_483_4, 5.0 / 9.0),
];

/// `F(x) = ∫_0^x f(y, W(y)) dy` with `W` linear between environment nodes.
pub fn primitive(f: &TestFunction, env: &TwoSidedEnvironment, x: f64) -> Result<f64> {
    let h = env.h();
    let sign = if x < 0.0 { -1.0 } else { 1.0 };
    let steps = (x.abs() / h).floor() as i64;
    let cell = |lo: f64, hi: f64| -> Result<f64> {
        let (c, r) = (0.5 * (lo + hi), 0.5 * (hi - lo));
        let mut s = 0.0;
        for (z, w) in GAUSS3 {
            let y = c + r * z;
            s += w * f.value(y, env.value(y)?);
        }
        Ok(s * r)
    };
    let mut total = 0.0;
    for k in 0..steps {
        let (p, q) = (sign * k as f64 * h, sign * (k + 1) as f64 * h);
        total += cell(p.min(q), p.max(q))?;
    }
    let edge = sign * steps as f64 * h;
    if edge != x {
        total += cell(edge.min(x), edge.max(x))?;
    }
    Ok(sign * total)
}

/// Terms of the Itô formula for `F(X(t))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ItoTerms {
    pub f_end: f64,
    pub stochastic: f64,
    pub dx_term: f64,
    pub strat_f: f64,
    pub strat_du_f: f64,
}

impl ItoTerms {
    pub fn residual(&self) -> f64 {
        (self.f_end - self.stochastic - 0.5 * self.dx_term + 0.5 * self.strat_f - 0.5 * self.strat_du_f).abs()
    }
}

/// Itô formula residual at `t`:
/// `|F(X(t)) - Σ f(X, W(X)) Δℬ - ½ ∫ ∂_x f ds + ½ strat(f) - ½ strat(∂_u f)|`.
pub fn ito_formula_terms(
    f: &TestFunction,
    realization: &mut BroxRealization,
    t: f64,
    epsilon: f64,
) -> Result<ItoTerms> {
    let n = realization.grid().floor_index(t);
    let dt = realization.grid().dt();
    let x_end = realization.x()[n];
    realization.medium_mut().ensure_extent(x_end.abs() + 1.0)?;
    let mut stochastic = 0.0;
    let mut dx_term = 0.0;
    for j in 0..n {
        let xj = realization.x()[j];
        let (w, _) = realization.w_and_slope(xj)?;
        stochastic += f.value(xj, w) * (realization.calb()[j + 1] - realization.calb()[j]);
        dx_term += f.dx(xj, w) * dt;
    }
    let f_end = primitive(f, realization.env(), x_end)?;
    let lt = scaled_local_time(realization, &[t], epsilon)?;
    let strat_f = drift_from_field(f, realization.env(), &lt, &[t])?.values[0];
    let strat_du_f = drift_from_field(&f.u_derivative()?, realization.env(), &lt, &[t])?.values[0];
    Ok(ItoTerms {
        f_end,
        stochastic,
        dx_term,
        strat_f,
        strat_du_f,
    })
}

pub fn ito_formula_residual(f: &TestFunction, realization: &mut BroxRealization, t: f64, epsilon: f64) -> Result<f64> {
    ito_formula_terms(f, realization, t, epsilon).map(|terms| terms.residual())
}

/// Per-unit meshes satisfying `Σ_N c₃(N) (e^{κ|N|} |π_N|^γ)^{1/6} ≤ δ`.
#[derive(Debug, Clone, PartialEq)]
pub struct AdaptivePartition {
    /// `(N, |π_N|)` before snapping to the environment grid.
    pub raw: Vec<(i64, f64)>,
    pub meshes: PerUnitMeshes,
    /// The constraint sum evaluated on the snapped meshes.
    pub constraint_sum: f64,
}

pub const DEFAULT_GAMMA: f64 = 0.5;

pub fn default_kappa(theta: f64) -> f64 {
    4.0 * theta + 1.0
}

/// `|π_N| = (δ 2^{-|N|-2} / c₃(N))^{6/γ} e^{-κ|N|/γ}` for units `N` in
/// `units`, snapped down to a multiple of `h`.
pub fn adaptive_partition(
    delta: f64,
    kappa: f64,
    gamma: f64,
    c3: impl Fn(i64) -> f64,
    units: std::ops::RangeInclusive<i64>,
    h: f64,
) -> Result<AdaptivePartition> {
    if !(delta > 0.0 && kappa > 0.0 && gamma > 0.0 && h > 0.0) {
        return Err(Error::config("delta, kappa, gamma and h must be positive"));
    }
    let mut raw = Vec::new();
    let mut snapped = Vec::new();
    let mut sum = 0.0;
    let first = *units.start();
    for n in units {
        let a = n.unsigned_abs() as f64;
        let c = c3(n);
        let mesh = (delta * 2f64.powf(-a - 2.0) / c).powf(6.0 / gamma) * (-kappa * a / gamma).exp();
        let steps = (mesh / h + 1e-9).floor();
        if steps < 1.0 {
            return Err(Error::config(format!(
                "unit {n} needs mesh {mesh:e} below the grid step {h}; refine the environment"
            )));
        }
        let m = (steps * h).min(1.0);
        raw.push((n, mesh));
        snapped.push(m);
        sum += c * ((kappa * a).exp() * m.powf(gamma)).powf(1.0 / 6.0);
    }
    Ok(AdaptivePartition {
        raw,
        meshes: PerUnitMeshes {
            first_unit: first,
            meshes: snapped,
        },
        constraint_sum: sum,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::path::{EnvStreams, Partition};

    #[test]
    fn unit_function_has_no_correction() {
        let env = TwoSidedEnvironment::sample(2.0, 0.01, EnvStreams::for_replica(1, 0)).unwrap();
        let lt = ScaledLocalTime::constant(0.7, -150, 150);
        let p = stratonovich_integral(&TestFunction::unit(), &env, &lt, 0, -1.0, 1.0).unwrap();
        assert_eq!(p.corr_pos, 0.0);
        assert_eq!(p.corr_neg, 0.0);
        assert_eq!(p.value(), p.ito());
        // constant integrand: telescoping sum
        let exact = 0.7 * (env.value(1.0).unwrap() - env.value(-1.0).unwrap());
        assert!((p.value() - exact).abs() < 1e-12);
    }

    #[test]
    fn zero_local_time_and_empty_window() {
        let env = TwoSidedEnvironment::sample(2.0, 0.01, EnvStreams::for_replica(1, 0)).unwrap();
        let g = TestFunction::exp_u();
        let z = stratonovich_integral(&g, &env, &ScaledLocalTime::zero(), 0, -1.0, 1.0).unwrap();
        assert_eq!(z.value(), 0.0);
        let lt = ScaledLocalTime::constant(1.0, -100, 100);
        assert_eq!(stratonovich_integral(&g, &env, &lt, 0, 0.3, 0.3).unwrap().value(), 0.0);
        assert!(matches!(
            stratonovich_integral(&g, &env, &lt, 0, -5.0, 1.0),
            Err(Error::Extent { .. })
        ));
    }

    #[test]
    fn riemann_single_segment_closed_form() {
        let env = TwoSidedEnvironment::sample(1.0, 0.1, EnvStreams::for_replica(4, 0)).unwrap();
        let lt = ScaledLocalTime::constant(2.5, -10, 10);
        let part = Partition::from_nodes(0.1, &[0.0, 0.5]).unwrap();
        let v = stratonovich_riemann(&TestFunction::unit(), &env, &lt, 0, &part).unwrap();
        let exact = 2.5 * (env.value(0.5).unwrap() - env.value(0.0).unwrap());
        assert!((v - exact).abs() < 1e-12);
        let flat = TwoSidedEnvironment::flat(1.0, 0.1).unwrap();
        assert_eq!(stratonovich_riemann(&TestFunction::unit(), &flat, &lt, 0, &part).unwrap(), 0.0);
    }

    #[test]
    fn stratonovich_tracks_the_symmetric_sum() {
        // the trapezoid sum Σ ½(f_i + f_{i+1}) ΔW equals the value once the
        // (ΔW)² - Δx fluctuation is added back, up to third-order terms
        let h = 1e-4;
        let env = TwoSidedEnvironment::sample(1.0, h, EnvStreams::for_replica(2, 0)).unwrap();
        let lt = ScaledLocalTime::constant(1.0, -10_000, 10_000);
        let g = TestFunction::exp_u();
        let p = stratonovich_integral(&g, &env, &lt, 0, -1.0, 1.0).unwrap();
        let (mut sym, mut fluct) = (0.0, 0.0);
        for i in -10_000..10_000 {
            let (a, b) = (env.node_value(i).unwrap(), env.node_value(i + 1).unwrap());
            sym += 0.5 * (a.exp() + b.exp()) * (b - a);
            let d2 = (b - a) * (b - a) - h;
            if i >= 0 {
                fluct += 0.5 * a.exp() * d2;
            } else {
                fluct -= 0.5 * b.exp() * d2;
            }
        }
        let exact = env.value(1.0).unwrap().exp() - env.value(-1.0).unwrap().exp();
        assert!((sym - exact).abs() < 1e-3);
        assert!((p.value() + fluct - sym).abs() < 2e-3, "{} {} {}", p.value(), fluct, sym);
        assert!((p.value() - exact).abs() < 0.1);
        assert!((p.ito() - exact).abs() > 0.2);
    }

    #[test]
    fn derivative_check_catches_mistakes() {
        let good = TestFunction::new(Arc::new(|x, u: f64| x * u.sin()), Arc::new(|x, u: f64| x * u.cos()), 0.0, 1.0).unwrap();
        assert!(good.check_u_derivative(&[(0.5, 0.3), (-1.2, 2.0)]).is_ok());
        let bad = TestFunction::new(Arc::new(|_, u: f64| u * u), Arc::new(|_, u: f64| u), 0.0, 1.0).unwrap();
        assert!(matches!(bad.check_u_derivative(&[(0.0, 1.0)]), Err(Error::Domain(_))));
        assert!(TestFunction::new(Arc::new(|_, _| 1.0), Arc::new(|_, _| 0.0), 0.0, 0.5).is_err());
    }

    #[test]
    fn exp_neg_u_wrapper_derivatives() {
        let g = TestFunction::new(Arc::new(|x, u: f64| x + u * u), Arc::new(|_, u: f64| 2.0 * u), 1.0, 1.0)
            .unwrap()
            .with_duu(Arc::new(|_, _| 2.0));
        let ge = g.times_exp_neg_u();
        ge.check_u_derivative(&[(0.3, -0.4), (1.0, 1.5)]).unwrap();
        let ge_u = ge.u_derivative().unwrap();
        ge_u.check_u_derivative(&[(0.3, -0.4), (1.0, 1.5)]).unwrap();
    }

    #[test]
    fn primitive_of_exp_is_scale_function() {
        let env = TwoSidedEnvironment::sample(2.0, 0.01, EnvStreams::for_replica(6, 0)).unwrap();
        let rule = PartitionRule::Full;
        let part = rule.realize(0.01, -200, 200).unwrap();
        let poly = crate::path::interpolate_polygonal(&env, &part).unwrap();
        let s = crate::maps::build_scale_function(&poly).unwrap();
        for x in [-1.234, -0.5, 0.0, 0.77, 1.9] {
            let f = primitive(&TestFunction::exp_u(), &env, x).unwrap();
            assert!((f - s.evaluate(x).unwrap()).abs() < 1e-8, "{x}");
        }
    }

    #[test]
    fn adaptive_partition_shape() {
        let a = adaptive_partition(1e6, 1.0, 1.0, |_| 1.0, -2..=2, 1e-12).unwrap();
        let m = |n: i64| a.raw.iter().find(|r| r.0 == n).unwrap().1;
        let ratio = m(1) / m(2);
        assert!((m(0) / m(1) - ratio).abs() < 1e-9 * ratio);
        assert!(ratio > 1.0);
        assert!((m(-1) - m(1)).abs() < 1e-12 * m(1));

        let b = adaptive_partition(2e6, 1.0, 1.0, |_| 1.0, -2..=2, 1e-12).unwrap();
        for (r, s) in a.raw.iter().zip(&b.raw) {
            assert!((s.1 / r.1 - 64.0).abs() < 1e-9);
        }
        assert!(a.constraint_sum <= 1e6 * 0.75 * (1.0 + 1e-12));
        assert!(matches!(
            adaptive_partition(1.0, 1.0, 0.5, |_| 1.0, -1..=1, 0.01),
            Err(Error::Config(_))
        ));
    }
}
