//! Exact local-time moments of Brownian motion started at 0.
//!
//! Joint moments of `L([ξ,η], u)` are permutation sums of heat-kernel
//! products integrated over the ordered simplex `ξ < s_1 < … < s_m < η`
//! (with `s_0 = 0`, `u_0 = 0`). The simplex is integrated by nested 1-D
//! quadrature; every leg but the last is written as `s = s_prev + v²`, which
//! removes the `r^{-1/2}` singularity of `p(r, 0)`, and the last leg is
//! integrated in closed form.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::local_time::occupation_local_time;
use crate::path::{BrownianPath, Role, StreamId, TimeGrid};
use crate::quad::{integrate, ErrorSlot};

/// Default absolute quadrature tolerance.
pub const DEFAULT_TOL: f64 = 1e-6;
/// Largest order accepted without an explicit override.
pub const DEFAULT_MAX_ORDER: usize = 4;
/// Largest order accepted at all (`6! = 720` permutations).
pub const HARD_MAX_ORDER: usize = 6;

/// Recorded in experiment metadata.
pub const ERFC_SOURCE: &str = "libm::erfc (musl port, ~1 ulp)";

/// `p(t, x) = (2πt)^{-1/2} e^{-x²/2t}`.
pub fn heat_kernel(t: f64, x: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::domain(format!("heat kernel needs t > 0, got {t}")));
    }
    Ok(p(t, x))
}

/// `∂_x^order p(t, x)` for `order ∈ {0, 1, 2}`; `p'' = 2 ∂_t p`.
pub fn heat_kernel_derivative(order: u8, t: f64, x: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::domain(format!("heat kernel needs t > 0, got {t}")));
    }
    Ok(dp(order, t, x))
}

#[inline]
fn p(t: f64, x: f64) -> f64 {
    (-x * x / (2.0 * t)).exp() / (2.0 * PI * t).sqrt()
}

#[inline]
fn dp(order: u8, t: f64, x: f64) -> f64 {
    match order {
        0 => p(t, x),
        1 => -x / t * p(t, x),
        _ => (x * x / (t * t) - 1.0 / t) * p(t, x),
    }
}

pub fn erfc(x: f64) -> f64 {
    libm::erfc(x)
}

/// `∫_0^T ∂_x^order p(r, d) dr`.
pub fn leg_integral(order: u8, big_t: f64, d: f64) -> f64 {
    if big_t <= 0.0 {
        return 0.0;
    }
    let a = d.abs();
    let z = a / (2.0 * big_t).sqrt();
    match order {
        0 => (2.0 * big_t / PI).sqrt() * (-z * z).exp() - a * erfc(z),
        1 => {
            if d == 0.0 {
                0.0
            } else {
                -d.signum() * erfc(z)
            }
        }
        _ => 2.0 * p(big_t, d),
    }
}

/// One simplex leg: `Σ coef · ∂_x^order p(r, d)`.
type Leg = Vec<(f64, u8, f64)>;

/// `∫_{ξ<s_1<…<s_m<η} Π_j leg_j(s_j - s_{j-1}) ds` with `s_0 = 0`.
fn simplex_integral(legs: &[Leg], xi: f64, eta: f64, tol: f64) -> Result<f64> {
    if eta <= xi {
        return Ok(0.0);
    }
    let slot = ErrorSlot::default();
    let v = simplex_rec(legs, 0, 0.0, xi, eta, tol, &slot);
    slot.check()?;
    Ok(v)
}

fn simplex_rec(legs: &[Leg], j: usize, s_prev: f64, xi: f64, eta: f64, tol: f64, slot: &ErrorSlot) -> f64 {
    let lo = xi.max(s_prev);
    if eta <= lo {
        return 0.0;
    }
    let leg = &legs[j];
    if j + 1 == legs.len() {
        return leg
            .iter()
            .map(|&(c, k, d)| c * (leg_integral(k, eta - s_prev, d) - leg_integral(k, lo - s_prev, d)))
            .sum();
    }
    // s = s_prev + v², ds = 2v dv; 2v p(v², d) = √(2/π) e^{-d²/2v²}
    let kernel = |v: f64| -> f64 {
        if v <= 0.0 {
            return 0.0;
        }
        let r = v * v;
        let g = (2.0 / PI).sqrt();
        leg.iter()
            .map(|&(c, k, d)| {
                let base = g * (-d * d / (2.0 * r)).exp();
                c * match k {
                    0 => base,
                    1 => -d / r * base,
                    _ => (d * d / (r * r) - 1.0 / r) * base,
                }
            })
            .sum()
    };
    let inner_tol = tol * 0.1;
    let f = |v: f64| {
        let w = kernel(v);
        if w == 0.0 {
            0.0
        } else {
            w * simplex_rec(legs, j + 1, s_prev + v * v, xi, eta, inner_tol, slot)
        }
    };
    slot.unwrap_or_record(integrate(f, (lo - s_prev).sqrt(), (eta - s_prev).sqrt(), tol))
}

fn check_window(xi: f64, eta: f64) -> Result<()> {
    if !(xi >= 0.0 && eta >= xi && eta.is_finite()) {
        return Err(Error::domain(format!("invalid window [{xi}, {eta}]")));
    }
    Ok(())
}

fn check_order(m: usize, max_order: usize) -> Result<()> {
    let cap = max_order.min(HARD_MAX_ORDER);
    if m == 0 || m > cap {
        return Err(Error::config(format!("moment order {m} outside 1..={cap}")));
    }
    Ok(())
}

/// All permutations of `0..m` (Heap's algorithm).
fn permutations(m: usize) -> Vec<Vec<usize>> {
    let mut a: Vec<usize> = (0..m).collect();
    let mut out = vec![a.clone()];
    let mut c = vec![0usize; m];
    let mut i = 0;
    while i < m {
        if c[i] < i {
            if i % 2 == 0 {
                a.swap(0, i);
            } else {
                a.swap(c[i], i);
            }
            out.push(a.clone());
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    out
}

/// `E Π_j L([ξ,η], u_j)` by the Kac moment formula, `m ≤ 4`.
pub fn kac_moment(points: &[f64], xi: f64, eta: f64, tol: f64) -> Result<f64> {
    kac_moment_with_cap(points, xi, eta, tol, DEFAULT_MAX_ORDER)
}

pub fn kac_moment_with_cap(points: &[f64], xi: f64, eta: f64, tol: f64, max_order: usize) -> Result<f64> {
    check_window(xi, eta)?;
    check_order(points.len(), max_order)?;
    let perms = permutations(points.len());
    let per = tol / perms.len() as f64;
    let mut total = 0.0;
    for sigma in &perms {
        let mut prev = 0.0;
        let legs: Vec<Leg> = sigma
            .iter()
            .map(|&k| {
                let d = points[k] - prev;
                prev = points[k];
                vec![(1.0, 0, d)]
            })
            .collect();
        total += simplex_integral(&legs, xi, eta, per)?;
    }
    Ok(total)
}

fn check_pairs(pairs: &[(f64, f64)]) -> Result<()> {
    for (k, &(x, y)) in pairs.iter().enumerate() {
        if y < x {
            return Err(Error::domain(format!("pair {k} has y < x")));
        }
        if k > 0 && x < pairs[k - 1].1 {
            return Err(Error::domain("pairs must satisfy x1<y1<=x2<y2<=…"));
        }
    }
    Ok(())
}

/// `E Π_k (L([ξ,η], y_k) - L([ξ,η], x_k))` as the signed `2^m`-corner sum of
/// Kac moments.
pub fn rect_increment_moment(pairs: &[(f64, f64)], xi: f64, eta: f64, tol: f64) -> Result<f64> {
    check_pairs(pairs)?;
    corner_sum(pairs, xi, eta, tol)
}

/// Corner sum without the ordering check (used for coincident pairs).
pub fn corner_sum(pairs: &[(f64, f64)], xi: f64, eta: f64, tol: f64) -> Result<f64> {
    let m = pairs.len();
    check_order(m, DEFAULT_MAX_ORDER)?;
    if pairs.iter().any(|(x, y)| x == y) {
        return Ok(0.0);
    }
    let corners = 1usize << m;
    let per = tol / corners as f64;
    let mut total = 0.0;
    for c in 0..corners {
        let pts: Vec<f64> = (0..m)
            .map(|k| if c >> k & 1 == 1 { pairs[k].1 } else { pairs[k].0 })
            .collect();
        let sign = if (m - (c.count_ones() as usize)) % 2 == 0 { 1.0 } else { -1.0 };
        total += sign * kac_moment(&pts, xi, eta, per)?;
    }
    Ok(total)
}

/// `E (L([ξ,η], y) - L([ξ,η], x))^{2n}` from the single-simplex closed form
/// `(2n)! ∫ Π_{k≥2} [p(Δs,0) + (-1)^{k+1} p(Δs,x-y)] [p(s_1,x)+p(s_1,y)] ds`.
pub fn increment_moment_closed_form(x: f64, y: f64, n: usize, xi: f64, eta: f64, tol: f64) -> Result<f64> {
    check_window(xi, eta)?;
    if n == 0 || n > 2 {
        return Err(Error::config(format!("closed form supports n in 1..=2, got {n}")));
    }
    if x == y {
        return Ok(0.0);
    }
    let dim = 2 * n;
    let fact: f64 = (1..=dim).map(|k| k as f64).product();
    let mut legs: Vec<Leg> = vec![vec![(1.0, 0, x), (1.0, 0, y)]];
    for k in 2..=dim {
        let sign = if (k + 1) % 2 == 0 { 1.0 } else { -1.0 };
        legs.push(vec![(1.0, 0, 0.0), (sign, 0, x - y)]);
    }
    Ok(fact * simplex_integral(&legs, xi, eta, tol / fact)?)
}

/// Binary tuple and points of a chain integral.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainSpec {
    pub e: Vec<u8>,
    pub u: Vec<f64>,
    pub xi: f64,
    pub eta: f64,
}

impl ChainSpec {
    pub fn validate(&self) -> Result<()> {
        let m = self.e.len();
        if m < 2 || m > HARD_MAX_ORDER || self.u.len() != m {
            return Err(Error::config("chain needs 2..=6 matching entries in e and u"));
        }
        if self.e.iter().any(|&b| b > 1) || self.e[m - 1] != 1 {
            return Err(Error::config("chain tuple must be binary with last entry 1"));
        }
        if self.u.iter().any(|&u| u == 0.0) {
            return Err(Error::domain("chain points must be nonzero"));
        }
        check_window(self.xi, self.eta)
    }

    /// Derivative orders `e_j + 1 - e_{j-1}` with `e_0 = 1`.
    pub fn orders(&self) -> Vec<u8> {
        let mut prev = 1u8;
        self.e
            .iter()
            .map(|&b| {
                let k = b + 1 - prev;
                prev = b;
                k
            })
            .collect()
    }
}

/// `J = ∫_{D_m} Π_j p^{(k_j)}(s_j - s_{j-1}, u_j) ds` reduced to one dimension.
///
/// Laplace inversion of the tail convolution gives
/// `2 · sign · ∫ p(s_1,u_1) p(η-s_1,|u|) ds_1` when `e_1 = 0` and
/// `sign · ∫ p'(s_1,u_1) erfc(|u| / √(2(η-s_1))) ds_1` when `e_1 = 1`,
/// where `|u| = Σ_{j≥2} |u_j|` and `sign = Π_{j≥2} (-sgn u_j)^{k_j}`.
pub fn chain_integral(spec: &ChainSpec, tol: f64) -> Result<f64> {
    spec.validate()?;
    let orders = spec.orders();
    let sign: f64 = spec.u[1..]
        .iter()
        .zip(&orders[1..])
        .map(|(u, &k)| (-u.signum()).powi(k as i32))
        .product();
    let tail: f64 = spec.u[1..].iter().map(|u| u.abs()).sum();
    let u1 = spec.u[0];
    let (xi, eta) = (spec.xi, spec.eta);
    if eta <= xi {
        return Ok(0.0);
    }
    let value = if spec.e[0] == 0 {
        let f = |s: f64| {
            let r = eta - s;
            if s <= 0.0 || r <= 0.0 {
                0.0
            } else {
                p(s, u1) * p(r, tail)
            }
        };
        2.0 * integrate(f, xi, eta, tol / 2.0)?.0
    } else {
        let f = |s: f64| {
            let r = eta - s;
            if s <= 0.0 || r <= 0.0 {
                0.0
            } else {
                dp(1, s, u1) * erfc(tail / (2.0 * r).sqrt())
            }
        };
        integrate(f, xi, eta, tol)?.0
    };
    Ok(sign * value)
}

/// Which inequality a ratio sweep checks.
#[derive(Debug, Clone, PartialEq)]
pub enum BoundKind {
    /// `E (L(y) - L(x))^{2n} / (|η-ξ|^{n(1-β)} |x-y|^{2βn})`.
    Increment { x: f64, y: f64, n: usize },
    /// `|E Π (L(y_k) - L(x_k))| / (|η-ξ|^{nα} Π |y_k-x_k|^{1-α})` over `2n` pairs.
    Product { pairs: Vec<(f64, f64)> },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundRow {
    pub xi: f64,
    pub eta: f64,
    pub exponent: f64,
    pub value: f64,
    pub denominator: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub rows: Vec<BoundRow>,
    /// Empirical constant: the largest ratio.
    pub max_ratio: f64,
    pub min_ratio: f64,
}

impl BoundReport {
    /// `(max - min) / max` over the sweep.
    pub fn relative_spread(&self) -> f64 {
        if self.max_ratio == 0.0 {
            0.0
        } else {
            (self.max_ratio - self.min_ratio) / self.max_ratio
        }
    }
}

pub fn bound_ratio(kind: &BoundKind, exponent: f64, xi: f64, eta: f64, tol: f64) -> Result<BoundRow> {
    let len = eta - xi;
    let (value, denominator) = match kind {
        BoundKind::Increment { x, y, n } => {
            let v = increment_moment_closed_form(*x, *y, *n, xi, eta, tol)?;
            let nf = *n as f64;
            let d = len.powf(nf * (1.0 - exponent)) * (y - x).abs().powf(2.0 * exponent * nf);
            (v.abs(), d)
        }
        BoundKind::Product { pairs } => {
            let v = rect_increment_moment(pairs, xi, eta, tol)?;
            let nf = pairs.len() as f64 / 2.0;
            let d = len.powf(nf * exponent)
                * pairs
                    .iter()
                    .map(|(x, y)| (y - x).abs().powf(1.0 - exponent))
                    .product::<f64>();
            (v.abs(), d)
        }
    };
    let ratio = if value == 0.0 { 0.0 } else { value / denominator };
    Ok(BoundRow {
        xi,
        eta,
        exponent,
        value,
        denominator,
        ratio,
    })
}

/// Ratio of exact moment to bound denominator over a list of windows.
pub fn verify_bounds(kind: &BoundKind, exponent: f64, windows: &[(f64, f64)], tol: f64) -> Result<BoundReport> {
    let rows = windows
        .iter()
        .map(|&(xi, eta)| bound_ratio(kind, exponent, xi, eta, tol))
        .collect::<Result<Vec<_>>>()?;
    let max_ratio = rows.iter().map(|r| r.ratio).fold(0.0, f64::max);
    let min_ratio = rows.iter().map(|r| r.ratio).fold(f64::INFINITY, f64::min);
    Ok(BoundReport {
        rows,
        max_ratio,
        min_ratio,
    })
}

/// What to compute exactly or by simulation.
#[derive(Debug, Clone, PartialEq)]
pub enum MomentMode {
    Points(Vec<f64>),
    Increments(Vec<(f64, f64)>),
    ClosedForm { x: f64, y: f64, n: usize },
    Chain(ChainSpec),
}

#[derive(Debug, Clone, PartialEq)]
pub struct MomentQuery {
    pub mode: MomentMode,
    pub xi: f64,
    pub eta: f64,
    pub tol: f64,
}

impl MomentQuery {
    pub fn points(points: Vec<f64>, xi: f64, eta: f64) -> Self {
        MomentQuery {
            mode: MomentMode::Points(points),
            xi,
            eta,
            tol: DEFAULT_TOL,
        }
    }

    pub fn increments(pairs: Vec<(f64, f64)>, xi: f64, eta: f64) -> Self {
        MomentQuery {
            mode: MomentMode::Increments(pairs),
            xi,
            eta,
            tol: DEFAULT_TOL,
        }
    }

    pub fn exact(&self) -> Result<f64> {
        match &self.mode {
            MomentMode::Points(u) => kac_moment(u, self.xi, self.eta, self.tol),
            MomentMode::Increments(pairs) => rect_increment_moment(pairs, self.xi, self.eta, self.tol),
            MomentMode::ClosedForm { x, y, n } => {
                increment_moment_closed_form(*x, *y, *n, self.xi, self.eta, self.tol)
            }
            MomentMode::Chain(spec) => chain_integral(spec, self.tol),
        }
    }

    /// The product of local-time factors along one path.
    pub fn sample_product(&self, b: &BrownianPath, epsilon: f64) -> Result<f64> {
        if self.eta <= self.xi {
            return Ok(0.0);
        }
        let (xs, pairs): (Vec<f64>, Option<&[(f64, f64)]>) = match &self.mode {
            MomentMode::Points(u) => (u.clone(), None),
            MomentMode::Increments(pairs) => (pairs.iter().flat_map(|&(x, y)| [x, y]).collect(), Some(pairs)),
            MomentMode::ClosedForm { x, y, .. } => (vec![*x, *y], None),
            MomentMode::Chain(_) => return Err(Error::config("chain integrals have no local-time sample")),
        };
        let mut grid = xs.clone();
        grid.sort_by(f64::total_cmp);
        grid.dedup();
        let field = occupation_local_time(b, epsilon, &grid, &[self.xi, self.eta])?;
        let inc = |x: f64| field.value_at(1, x) - field.value_at(0, x);
        Ok(match (&self.mode, pairs) {
            (_, Some(pairs)) => pairs.iter().map(|&(x, y)| inc(y) - inc(x)).product(),
            (MomentMode::ClosedForm { x, y, n }, _) => (inc(*y) - inc(*x)).powi(2 * *n as i32),
            _ => xs.iter().map(|&u| inc(u)).product(),
        })
    }
}

/// Monte Carlo estimate with standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub n: usize,
}

impl McEstimate {
    pub fn from_samples(samples: &[f64]) -> Self {
        let n = samples.len();
        if n == 0 {
            return McEstimate {
                mean: 0.0,
                stderr: 0.0,
                n,
            };
        }
        let mean = samples.iter().sum::<f64>() / n as f64;
        let var = if n > 1 {
            samples.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64
        } else {
            0.0
        };
        McEstimate {
            mean,
            stderr: (var / n as f64).sqrt(),
            n,
        }
    }
}

/// One replica of the local-time product for `query`, with its own stream.
pub fn mc_replica(query: &MomentQuery, seed: u64, replica: u64, dt: f64, epsilon: f64) -> Result<f64> {
    if query.eta <= query.xi {
        return Ok(0.0);
    }
    let grid = TimeGrid::covering(query.eta, dt)?;
    let b = BrownianPath::sample(grid, seed, StreamId::new(replica, Role::Brownian));
    query.sample_product(&b, epsilon)
}

/// Sample mean and standard error of the local-time product over `n_paths`.
pub fn mc_local_time_moment(
    query: &MomentQuery,
    n_paths: usize,
    dt: f64,
    epsilon: f64,
    seed: u64,
) -> Result<McEstimate> {
    let samples = (0..n_paths as u64)
        .map(|r| mc_replica(query, seed, r, dt, epsilon))
        .collect::<Result<Vec<_>>>()?;
    Ok(McEstimate::from_samples(&samples))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn heat_kernel_values() {
        assert!((heat_kernel(1.0, 0.0).unwrap() - 0.398_942_280_401_432_7).abs() < 1e-15);
        assert_eq!(heat_kernel(0.7, 1.3).unwrap(), heat_kernel(0.7, -1.3).unwrap());
        assert!(matches!(heat_kernel(0.0, 1.0), Err(Error::Domain(_))));
        let (mass, _) = integrate(|x| p(0.3, x), -20.0, 20.0, 1e-12).unwrap();
        assert!((mass - 1.0).abs() < 1e-8);
    }

    #[test]
    fn second_derivative_is_twice_time_derivative() {
        let (t, x, h) = (0.4, 0.7, 1e-6);
        let dt = (p(t + h, x) - p(t - h, x)) / (2.0 * h);
        assert!((heat_kernel_derivative(2, t, x).unwrap() - 2.0 * dt).abs() < 1e-7);
    }

    #[test]
    fn leg_integrals_match_quadrature() {
        for &(k, t, d) in &[(0u8, 0.7f64, 0.0), (0, 0.7, 0.4), (1, 1.3, -0.5), (2, 0.9, 0.8)] {
            // r = v² removes the endpoint singularity of p(r, 0)
            let f = |v: f64| if v > 0.0 { 2.0 * v * dp(k, v * v, d) } else { 0.0 };
            let (q, _) = integrate(f, 0.0, t.sqrt(), 1e-12).unwrap();
            assert!((leg_integral(k, t, d) - q).abs() < 1e-9, "{k} {t} {d}");
        }
    }

    #[test]
    fn permutations_are_complete() {
        let mut ps = permutations(4);
        assert_eq!(ps.len(), 24);
        ps.sort();
        ps.dedup();
        assert_eq!(ps.len(), 24);
    }

    #[test]
    fn kac_first_moment_at_origin() {
        let v = kac_moment(&[0.0], 0.0, 1.0, 1e-9).unwrap();
        assert!((v - (2.0 / PI).sqrt()).abs() < 1e-8);
    }

    #[test]
    fn kac_second_moment_at_origin() {
        // E L(1,0)^2 = E |B_1|^2 = 1
        let v = kac_moment(&[0.0, 0.0], 0.0, 1.0, 1e-8).unwrap();
        assert!((v - 1.0).abs() < 1e-6, "{v}");
    }

    #[test]
    fn far_point_has_no_local_time() {
        assert!(kac_moment(&[100.0], 0.0, 1.0, 1e-9).unwrap() <= 1e-30);
    }

    #[test]
    fn kac_symmetries() {
        let a = kac_moment(&[0.3, -0.2, 0.5], 0.1, 0.9, 1e-7).unwrap();
        let b = kac_moment(&[0.5, 0.3, -0.2], 0.1, 0.9, 1e-7).unwrap();
        let c = kac_moment(&[-0.3, 0.2, -0.5], 0.1, 0.9, 1e-7).unwrap();
        assert!((a - b).abs() < 1e-6);
        assert!((a - c).abs() < 1e-6);
    }

    #[test]
    fn order_guard() {
        assert!(matches!(kac_moment(&[0.0; 5], 0.0, 1.0, 1e-6), Err(Error::Config(_))));
    }

    #[test]
    fn increments_telescope_and_vanish_when_degenerate() {
        let w = (0.2, 1.0);
        let full = rect_increment_moment(&[(0.1, 0.9)], w.0, w.1, 1e-9).unwrap();
        let l = rect_increment_moment(&[(0.1, 0.5)], w.0, w.1, 1e-9).unwrap();
        let r = rect_increment_moment(&[(0.5, 0.9)], w.0, w.1, 1e-9).unwrap();
        assert!((full - l - r).abs() < 1e-8);
        let direct = kac_moment(&[0.9], w.0, w.1, 1e-9).unwrap() - kac_moment(&[0.1], w.0, w.1, 1e-9).unwrap();
        assert!((full - direct).abs() < 1e-8);
        assert_eq!(rect_increment_moment(&[(0.3, 0.3), (0.4, 0.6)], 0.0, 1.0, 1e-6).unwrap(), 0.0);
    }

    #[test]
    fn closed_form_matches_corner_sum() {
        let cf = increment_moment_closed_form(0.0, 0.5, 1, 0.0, 1.0, 1e-8).unwrap();
        let cs = corner_sum(&[(0.0, 0.5), (0.0, 0.5)], 0.0, 1.0, 1e-8).unwrap();
        assert!((cf - cs).abs() < 1e-6, "{cf} {cs}");
        assert_eq!(increment_moment_closed_form(0.2, 0.2, 1, 0.0, 1.0, 1e-8).unwrap(), 0.0);
    }

    #[test]
    fn chain_orders_follow_the_tuple() {
        let spec = ChainSpec {
            e: vec![0, 1, 0, 1],
            u: vec![1.0; 4],
            xi: 0.0,
            eta: 1.0,
        };
        assert_eq!(spec.orders(), vec![0, 2, 0, 2]);
    }

    #[test]
    fn chain_rejects_zero_points() {
        let spec = ChainSpec {
            e: vec![1, 1],
            u: vec![0.5, 0.0],
            xi: 0.0,
            eta: 1.0,
        };
        assert!(matches!(chain_integral(&spec, 1e-8), Err(Error::Domain(_))));
    }

    #[test]
    fn chain_decays_for_far_points() {
        let spec = |u2: f64| ChainSpec {
            e: vec![1, 1],
            u: vec![0.5, u2],
            xi: 0.0,
            eta: 1.0,
        };
        let near = chain_integral(&spec(0.1), 1e-10).unwrap().abs();
        let far = chain_integral(&spec(8.0), 1e-10).unwrap().abs();
        assert!(far < 1e-10 && near > far);
    }

    #[test]
    fn degenerate_window_gives_zero_sample() {
        let q = MomentQuery::points(vec![0.0], 0.5, 0.5);
        assert_eq!(mc_replica(&q, 1, 0, 1e-3, 0.1).unwrap(), 0.0);
    }
}
