//! Strictly increasing piecewise maps: the scale function, time changes and
//! their inverses.

use std::io::Write;

use crate::error::{Error, Result};
use crate::path::{BrownianPath, PolygonalEnvironment};

/// Below this `|b| * width` the exponential segment integral uses a series.
pub const SMALL_SLOPE: f64 = 1e-8;

/// Shape of one segment `[x_i, x_{i+1}]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Segment {
    Linear,
    /// `y(x) = y_i + ∫_{x_i}^x e^{a + b (z - x_i)} dz`.
    ExpLinear { a: f64, b: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Domain {
    Space,
    Time,
}

/// Strictly increasing, continuous map with per-segment closed forms.
///
/// Time-domain maps may stall at `f64` resolution (a clock increment below
/// one ulp), so for them consecutive equal values are accepted; inversion
/// then returns the end of the flat run.
#[derive(Debug, Clone)]
pub struct MonotoneMap {
    xs: Vec<f64>,
    ys: Vec<f64>,
    segments: Vec<Segment>,
    domain: Domain,
}

/// `(e^{bΔ} - 1) / b`, stable for small `bΔ`.
#[inline]
fn expm1_over(b: f64, width: f64) -> f64 {
    let z = b * width;
    if z.abs() < SMALL_SLOPE {
        width * (1.0 + z / 2.0 + z * z / 6.0)
    } else {
        z.exp_m1() / b
    }
}

/// `ln(1 + c) / c`, stable for small `c`.
#[inline]
fn ln1p_over(c: f64) -> f64 {
    if c.abs() < SMALL_SLOPE {
        1.0 - c / 2.0 + c * c / 3.0
    } else {
        c.ln_1p() / c
    }
}

/// `∫_0^width e^{a + b z} dz`.
pub fn exp_linear_integral(a: f64, b: f64, width: f64) -> f64 {
    a.exp() * expm1_over(b, width)
}

impl MonotoneMap {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>, segments: Vec<Segment>, domain: Domain) -> Result<Self> {
        if xs.len() < 2 || ys.len() != xs.len() || segments.len() + 1 != xs.len() {
            return Err(Error::config("map needs n breakpoints, n values and n-1 segments"));
        }
        if xs.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::config("map breakpoints must increase strictly"));
        }
        let stall_ok = domain == Domain::Time;
        if let Some(i) = ys.windows(2).position(|w| !(w[1] > w[0] || (stall_ok && w[1] == w[0]))) {
            return Err(Error::config(format!(
                "map values not strictly increasing at segment {i}: {} -> {}",
                ys[i],
                ys[i + 1]
            )));
        }
        Ok(MonotoneMap {
            xs,
            ys,
            segments,
            domain,
        })
    }

    /// Piecewise-linear map through the given points.
    pub fn linear(xs: Vec<f64>, ys: Vec<f64>, domain: Domain) -> Result<Self> {
        let n = xs.len().saturating_sub(1);
        MonotoneMap::new(xs, ys, vec![Segment::Linear; n], domain)
    }

    pub fn identity(lo: f64, hi: f64, domain: Domain) -> Result<Self> {
        MonotoneMap::linear(vec![lo, hi], vec![lo, hi], domain)
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.xs
    }

    pub fn values(&self) -> &[f64] {
        &self.ys
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn lo(&self) -> f64 {
        self.xs[0]
    }

    pub fn hi(&self) -> f64 {
        *self.xs.last().unwrap()
    }

    pub fn range(&self) -> (f64, f64) {
        (self.ys[0], *self.ys.last().unwrap())
    }

    /// Segment holding `x`; the last segment is closed on the right.
    pub fn locate(&self, x: f64) -> Result<usize> {
        if !(x >= self.lo() && x <= self.hi()) {
            return Err(Error::Extent {
                what: "map domain",
                at: x,
                lo: self.lo(),
                hi: self.hi(),
            });
        }
        let j = self.xs.partition_point(|&b| b <= x);
        Ok(j.saturating_sub(1).min(self.segments.len() - 1))
    }

    #[inline]
    fn eval_in(&self, i: usize, x: f64) -> f64 {
        let (x0, y0) = (self.xs[i], self.ys[i]);
        if x == x0 {
            return y0;
        }
        match self.segments[i] {
            Segment::Linear => {
                let x1 = self.xs[i + 1];
                let y1 = self.ys[i + 1];
                if x == x1 {
                    return y1;
                }
                y0 + (y1 - y0) * (x - x0) / (x1 - x0)
            }
            Segment::ExpLinear { a, b } => y0 + exp_linear_integral(a, b, x - x0),
        }
    }

    pub fn evaluate(&self, x: f64) -> Result<f64> {
        let i = self.locate(x)?;
        Ok(self.eval_in(i, x))
    }

    /// Inverse together with the segment it falls in.
    pub fn invert_located(&self, y: f64) -> Result<(usize, f64)> {
        let (lo, hi) = self.range();
        if !(y >= lo && y <= hi) {
            return Err(Error::Range(y));
        }
        let j = self.ys.partition_point(|&v| v <= y);
        let i = j.saturating_sub(1).min(self.segments.len() - 1);
        let (x0, y0) = (self.xs[i], self.ys[i]);
        let x1 = self.xs[i + 1];
        let dy = y - y0;
        if dy == 0.0 {
            return Ok((i, x0));
        }
        let x = match self.segments[i] {
            Segment::Linear => x0 + (x1 - x0) * dy / (self.ys[i + 1] - y0),
            Segment::ExpLinear { a, b } => {
                let w = dy * (-a).exp();
                x0 + w * ln1p_over(b * w)
            }
        };
        Ok((i, x.clamp(x0, x1)))
    }

    pub fn invert(&self, y: f64) -> Result<f64> {
        self.invert_located(y).map(|(_, x)| x)
    }

    /// Derivative of the map on segment `i` at `x`.
    pub fn derivative_in(&self, i: usize, x: f64) -> f64 {
        match self.segments[i] {
            Segment::Linear => (self.ys[i + 1] - self.ys[i]) / (self.xs[i + 1] - self.xs[i]),
            Segment::ExpLinear { a, b } => (a + b * (x - self.xs[i])).exp(),
        }
    }

    /// Exponent `a + b (x - x_i)` of an exp-linear segment, i.e. the
    /// interpolated environment for a scale function; 0 on linear segments.
    pub fn log_rate_in(&self, i: usize, x: f64) -> f64 {
        match self.segments[i] {
            Segment::Linear => 0.0,
            Segment::ExpLinear { a, b } => a + b * (x - self.xs[i]),
        }
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["breakpoint", "value", "kind", "log_rate", "slope"])?;
        for (i, (x, y)) in self.xs.iter().zip(&self.ys).enumerate() {
            let (kind, a, b) = match self.segments.get(i) {
                Some(Segment::Linear) => ("linear", String::new(), String::new()),
                Some(Segment::ExpLinear { a, b }) => ("exp-linear", a.to_string(), b.to_string()),
                None => ("end", String::new(), String::new()),
            };
            w.write_record([x.to_string(), y.to_string(), kind.to_string(), a, b])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// `S(x) = ∫_0^x e^{W_π(z)} dz` with exact per-segment integrals.
///
/// Values are accumulated outward from the origin on each side, so
/// rebuilding over a larger window reproduces the old values bit for bit.
pub fn build_scale_function(poly: &PolygonalEnvironment) -> Result<MonotoneMap> {
    let xs = poly.nodes();
    let ws = poly.node_values();
    let origin = xs
        .iter()
        .position(|&x| x == 0.0)
        .ok_or_else(|| Error::config("scale function needs a partition node at 0"))?;
    let n = xs.len();
    let mut ys = vec![0.0; n];
    let mut segments = Vec::with_capacity(n - 1);
    for i in 0..n - 1 {
        let b = (ws[i + 1] - ws[i]) / (xs[i + 1] - xs[i]);
        segments.push(Segment::ExpLinear { a: ws[i], b });
    }
    for i in origin..n - 1 {
        ys[i + 1] = ys[i] + exp_linear_integral(ws[i], poly.slope_of_segment(i), xs[i + 1] - xs[i]);
    }
    for i in (0..origin).rev() {
        // integrate from x_{i+1} leftward: ∫_{x_i}^{x_{i+1}} written from the right end
        let width = xs[i + 1] - xs[i];
        let b = poly.slope_of_segment(i);
        ys[i] = ys[i + 1] - exp_linear_integral(ws[i + 1], -b, width);
    }
    MonotoneMap::new(xs.to_vec(), ys, segments, Domain::Space)
}

/// `T(t) = Σ e^{-2 W(S^{-1}(B(s_k)))} dt` over grid steps (left endpoint).
pub fn build_time_change(scale: &MonotoneMap, b: &BrownianPath) -> Result<MonotoneMap> {
    let dt = b.dt();
    let grid = b.grid();
    let mut ts = Vec::with_capacity(grid.len());
    let mut ys = Vec::with_capacity(grid.len());
    ts.push(grid.time(0));
    ys.push(0.0);
    let mut acc = 0.0;
    for (k, &v) in b.values()[..grid.n_steps()].iter().enumerate() {
        let w = environment_at_scale(scale, v)?;
        acc += (-2.0 * w).exp() * dt;
        ts.push(grid.time(k + 1));
        ys.push(acc);
    }
    MonotoneMap::linear(ts, ys, Domain::Time)
}

/// `W_π(S^{-1}(y))` read off the scale function itself.
pub fn environment_at_scale(scale: &MonotoneMap, y: f64) -> Result<f64> {
    let (i, x) = scale.invert_located(y)?;
    Ok(scale.log_rate_in(i, x))
}

/// Stopping radius at time `xi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StoppingRadius {
    pub xi: f64,
    pub radius: f64,
}

/// Smallest breakpoint `x > 0` with `S(x) > |max_{s ≤ ξ} B(s)|`.
pub fn stopping_radius(scale: &MonotoneMap, b: &BrownianPath, xi: f64) -> Result<StoppingRadius> {
    if !(xi >= 0.0 && xi <= b.end_time() + 1e-12) {
        return Err(Error::Extent {
            what: "stopping radius time",
            at: xi,
            lo: 0.0,
            hi: b.end_time(),
        });
    }
    let k = b.grid().floor_index(xi);
    let level = b.values()[..=k]
        .iter()
        .fold(f64::NEG_INFINITY, |m, &v| m.max(v))
        .abs();
    let radius = first_breakpoint_above(scale, level).ok_or(Error::Extent {
        what: "stopping radius",
        at: level,
        lo: scale.range().0,
        hi: scale.range().1,
    })?;
    Ok(StoppingRadius { xi, radius })
}

/// Smallest breakpoint `x > 0` with `S(x) > level`.
pub fn first_breakpoint_above(scale: &MonotoneMap, level: f64) -> Option<f64> {
    let j = scale.ys.partition_point(|&v| v <= level);
    let j = j.max(scale.xs.partition_point(|&x| x <= 0.0));
    scale.xs.get(j).copied()
}

/// Largest breakpoint `x < 0` with `S(x) < -level`.
pub fn last_breakpoint_below(scale: &MonotoneMap, level: f64) -> Option<f64> {
    let j = scale.ys.partition_point(|&v| v < -level);
    let j = j.min(scale.xs.partition_point(|&x| x < 0.0));
    j.checked_sub(1).map(|j| scale.xs[j])
}
