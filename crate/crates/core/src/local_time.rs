//! Box-kernel occupation density estimates of Brownian local time.

use std::io::Write;

use crate::error::{Error, Result};
use crate::maps::MonotoneMap;
use crate::path::BrownianPath;

/// Default bandwidth factor: `ε = 5 √dt`.
pub const DEFAULT_BANDWIDTH_FACTOR: f64 = 5.0;

pub fn default_epsilon(dt: f64) -> f64 {
    DEFAULT_BANDWIDTH_FACTOR * dt.sqrt()
}

/// `L(ξ, x)` on a space grid at a list of time stamps.
#[derive(Debug, Clone)]
pub struct LocalTimeField {
    x_grid: Vec<f64>,
    xi_list: Vec<f64>,
    /// `values[s][j] = L(xi_list[s], x_grid[j])`.
    values: Vec<Vec<f64>>,
    epsilon: f64,
}

/// `L(ξ, x) = dt / (2ε) · #{k : t_k < ξ, |B(t_k) - x| ≤ ε}` for every stamp.
///
/// One pass over the path: each step adds 1 to a contiguous block of the
/// (sorted) space grid through a difference array, flushed at each stamp.
pub fn occupation_local_time(
    b: &BrownianPath,
    epsilon: f64,
    x_grid: &[f64],
    xi_list: &[f64],
) -> Result<LocalTimeField> {
    occupation_from_values(b.values(), b.dt(), epsilon, x_grid, xi_list)
}

/// Same as [`occupation_local_time`] for raw samples `values[k] = path(k dt)`.
pub fn occupation_from_values(
    values: &[f64],
    dt: f64,
    epsilon: f64,
    x_grid: &[f64],
    xi_list: &[f64],
) -> Result<LocalTimeField> {
    if !(epsilon > 0.0) {
        return Err(Error::config(format!("bandwidth must be positive, got {epsilon}")));
    }
    if x_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::config("space grid must increase strictly"));
    }
    if xi_list.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::config("time stamps must be sorted"));
    }
    let n_steps = values.len().saturating_sub(1);
    let span = n_steps as f64 * dt;
    if let Some(&bad) = xi_list.iter().find(|&&xi| xi < 0.0 || xi > span * (1.0 + 1e-12) + 1e-12) {
        return Err(Error::Extent {
            what: "local time stamp",
            at: bad,
            lo: 0.0,
            hi: span,
        });
    }

    let g = x_grid.len();
    let mut diff = vec![0i64; g + 1];
    let mut counts = vec![0i64; g];
    let scale = dt / (2.0 * epsilon);
    let mut out = Vec::with_capacity(xi_list.len());
    let mut k = 0usize;
    for &xi in xi_list {
        let upto = ((xi / dt - 1e-9).ceil().max(0.0) as usize).min(n_steps);
        while k < upto {
            let v = values[k];
            let lo = x_grid.partition_point(|&x| x < v - epsilon);
            let hi = x_grid.partition_point(|&x| x <= v + epsilon);
            if lo < hi {
                diff[lo] += 1;
                diff[hi] -= 1;
            }
            k += 1;
        }
        let mut run = 0i64;
        for j in 0..g {
            run += diff[j];
            counts[j] += run;
            diff[j] = 0;
        }
        diff[g] = 0;
        out.push(counts.iter().map(|&c| c as f64 * scale).collect());
    }
    Ok(LocalTimeField {
        x_grid: x_grid.to_vec(),
        xi_list: xi_list.to_vec(),
        values: out,
        epsilon,
    })
}

fn same_stamp(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0)
}

impl LocalTimeField {
    /// A field from precomputed rows, one per stamp, each as long as the grid.
    pub fn from_rows(x_grid: Vec<f64>, xi_list: Vec<f64>, values: Vec<Vec<f64>>, epsilon: f64) -> Result<Self> {
        if values.len() != xi_list.len() || values.iter().any(|r| r.len() != x_grid.len()) {
            return Err(Error::config("local time rows do not match the grid"));
        }
        Ok(LocalTimeField {
            x_grid,
            xi_list,
            values,
            epsilon,
        })
    }

    pub fn x_grid(&self) -> &[f64] {
        &self.x_grid
    }

    pub fn xi_list(&self) -> &[f64] {
        &self.xi_list
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Row of the field at stamp index `s`.
    pub fn row(&self, s: usize) -> &[f64] {
        &self.values[s]
    }

    /// Stamp index of `xi` (exact match up to rounding).
    pub fn stamp_index(&self, xi: f64) -> Result<usize> {
        self.xi_list
            .iter()
            .position(|&s| same_stamp(s, xi))
            .ok_or_else(|| Error::Lookup(format!("no local time stamp at {xi}")))
    }

    /// Stamp index closest to `xi`.
    pub fn nearest_stamp(&self, xi: f64) -> usize {
        let j = self.xi_list.partition_point(|&s| s < xi);
        if j == 0 {
            return 0;
        }
        if j == self.xi_list.len() {
            return j - 1;
        }
        if (self.xi_list[j] - xi).abs() < (xi - self.xi_list[j - 1]).abs() {
            j
        } else {
            j - 1
        }
    }

    /// Value at stamp `s`, linearly interpolated in `x`; 0 off the grid.
    pub fn value_at(&self, s: usize, x: f64) -> f64 {
        let xs = &self.x_grid;
        let row = &self.values[s];
        if xs.is_empty() || x < xs[0] || x > *xs.last().unwrap() {
            return 0.0;
        }
        let j = xs.partition_point(|&g| g <= x);
        if j == 0 {
            return row[0];
        }
        if j == xs.len() {
            return row[j - 1];
        }
        let (x0, x1) = (xs[j - 1], xs[j]);
        row[j - 1] + (row[j] - row[j - 1]) * (x - x0) / (x1 - x0)
    }

    pub fn value(&self, xi: f64, x: f64) -> Result<f64> {
        Ok(self.value_at(self.stamp_index(xi)?, x))
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["xi", "x", "local_time"])?;
        for (s, xi) in self.xi_list.iter().enumerate() {
            for (x, l) in self.x_grid.iter().zip(&self.values[s]) {
                w.write_record([xi.to_string(), x.to_string(), l.to_string()])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// `L(η, x) - L(ξ, x)`.
pub fn local_time_increment(field: &LocalTimeField, xi: f64, eta: f64, x: f64) -> Result<f64> {
    if eta < xi {
        return Err(Error::domain("increment window must satisfy xi <= eta"));
    }
    let a = field.stamp_index(xi)?;
    let b = field.stamp_index(eta)?;
    Ok(field.value_at(b, x) - field.value_at(a, x))
}

/// Local time of the diffusion: `e^{-W(x)} L_B(T^{-1}(t), S(x))`, nearest stamp in `ξ`.
pub fn brox_local_time(
    field_b: &LocalTimeField,
    scale: &MonotoneMap,
    time_change: &MonotoneMap,
    t: f64,
    x: f64,
) -> Result<f64> {
    let xi = time_change.invert(t)?;
    let i = scale.locate(x)?;
    let w = scale.log_rate_in(i, x);
    let s = scale.evaluate(x)?;
    Ok((-w).exp() * field_b.value_at(field_b.nearest_stamp(xi), s))
}

/// Space-grid field of the diffusion's local time at stamps `ts`, from a
/// field of `B` whose stamps include `T^{-1}(t)` for each `t`.
pub fn brox_local_time_field(
    field_b: &LocalTimeField,
    scale: &MonotoneMap,
    time_change: &MonotoneMap,
    x_grid: &[f64],
    ts: &[f64],
) -> Result<LocalTimeField> {
    let mut values = Vec::with_capacity(ts.len());
    for &t in ts {
        let row = x_grid
            .iter()
            .map(|&x| brox_local_time(field_b, scale, time_change, t, x))
            .collect::<Result<Vec<_>>>()?;
        values.push(row);
    }
    Ok(LocalTimeField {
        x_grid: x_grid.to_vec(),
        xi_list: ts.to_vec(),
        values,
        epsilon: field_b.epsilon,
    })
}

/// Trapezoid weights of a sorted grid.
pub fn trapezoid_weights(xs: &[f64]) -> Vec<f64> {
    let n = xs.len();
    let mut w = vec![0.0; n];
    for j in 0..n.saturating_sub(1) {
        let d = 0.5 * (xs[j + 1] - xs[j]);
        w[j] += d;
        w[j + 1] += d;
    }
    w
}

/// `|∫_0^t f(path) ds - Σ_x L(t, x) f(x) Δx|`, left-endpoint rule in time.
pub fn occupation_residual(
    values: &[f64],
    dt: f64,
    field: &LocalTimeField,
    f: impl Fn(f64) -> f64,
    t: f64,
) -> Result<f64> {
    let s = field.stamp_index(t)?;
    let steps = ((t / dt - 1e-9).ceil().max(0.0) as usize).min(values.len().saturating_sub(1));
    let time_side: f64 = values[..steps].iter().map(|&v| f(v)).sum::<f64>() * dt;
    let w = trapezoid_weights(&field.x_grid);
    let space_side: f64 = field
        .x_grid
        .iter()
        .zip(&w)
        .zip(field.row(s))
        .map(|((&x, &wj), &l)| l * f(x) * wj)
        .sum();
    Ok((time_side - space_side).abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::path::{StreamId, TimeGrid};

    fn grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
        (0..=n).map(|i| lo + (hi - lo) * i as f64 / n as f64).collect()
    }

    fn ramp() -> BrownianPath {
        let dt = 1e-4;
        BrownianPath::from_values(dt, (0..=10_000).map(|k| k as f64 * dt).collect()).unwrap()
    }

    #[test]
    fn ramp_has_unit_density() {
        let f = occupation_local_time(&ramp(), 0.01, &[0.5, 2.0], &[1.0]).unwrap();
        assert!((f.value(1.0, 0.5).unwrap() - 1.0).abs() < 0.01);
        assert_eq!(f.value(1.0, 2.0).unwrap(), 0.0);
    }

    #[test]
    fn bad_bandwidth_is_rejected() {
        let r = occupation_local_time(&ramp(), 0.0, &[0.0], &[1.0]);
        assert!(matches!(r, Err(Error::Config(_))));
    }

    #[test]
    fn field_is_monotone_and_increments_telescope() {
        let g = TimeGrid::new(0.0, 1e-3, 2000).unwrap();
        let b = BrownianPath::sample(g, 4, StreamId(1));
        let xs = grid(-2.0, 2.0, 80);
        let f = occupation_local_time(&b, 0.05, &xs, &[0.0, 0.5, 1.0, 2.0]).unwrap();
        for j in 0..xs.len() {
            for s in 0..3 {
                assert!(f.row(s + 1)[j] >= f.row(s)[j]);
            }
            assert_eq!(f.row(0)[j], 0.0);
        }
        for &x in &xs {
            let a = local_time_increment(&f, 0.5, 1.0, x).unwrap();
            let b2 = local_time_increment(&f, 1.0, 2.0, x).unwrap();
            let c = local_time_increment(&f, 0.5, 2.0, x).unwrap();
            assert_eq!(a + b2, c);
            assert_eq!(local_time_increment(&f, 0.5, 0.5, x).unwrap(), 0.0);
            assert_eq!(local_time_increment(&f, 0.0, 2.0, x).unwrap(), f.value(2.0, x).unwrap());
        }
        assert!(matches!(local_time_increment(&f, 0.3, 1.0, 0.0), Err(Error::Lookup(_))));
    }

    #[test]
    fn support_is_range_plus_bandwidth() {
        let g = TimeGrid::new(0.0, 1e-3, 1000).unwrap();
        let b = BrownianPath::sample(g, 8, StreamId(2));
        let eps = 0.05;
        let xs = grid(-5.0, 5.0, 1000);
        let f = occupation_local_time(&b, eps, &xs, &[1.0]).unwrap();
        let lo = b.values().iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = b.values().iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        for (x, l) in xs.iter().zip(f.row(0)) {
            if *x < lo - eps || *x > hi + eps {
                assert_eq!(*l, 0.0);
            }
        }
    }

    #[test]
    fn total_mass_is_elapsed_time() {
        let g = TimeGrid::new(0.0, 1e-4, 10_000).unwrap();
        let b = BrownianPath::sample(g, 9, StreamId(3));
        let eps = default_epsilon(1e-4);
        let xs = grid(-6.0, 6.0, 6000);
        let f = occupation_local_time(&b, eps, &xs, &[1.0]).unwrap();
        let zero = occupation_residual(b.values(), b.dt(), &f, |_| 0.0, 1.0).unwrap();
        assert_eq!(zero, 0.0);
        let r = occupation_residual(b.values(), b.dt(), &f, |_| 1.0, 1.0).unwrap();
        assert!(r < 2.0 * eps, "{r}");
    }
}
