//! Itô–McKean construction of the diffusion `X = S⁻¹ ∘ B ∘ T⁻¹` and of the
//! Brownian motion `ℬ` that drives it.

use crate::error::{Error, Result};
use crate::maps::{build_scale_function, build_time_change, MonotoneMap};
use crate::path::{interpolate_polygonal, BrownianPath, PartitionRule, PolygonalEnvironment, TimeGrid, TwoSidedEnvironment};

/// Default cap on the environment half-width reached by auto-extension.
pub const DEFAULT_MAX_EXTENT: f64 = 4096.0;
/// Default cap on the number of driving Brownian steps for one realization.
pub const DEFAULT_MAX_B_STEPS: usize = 200_000_000;

/// An environment together with the polygonal view and scale function built
/// over its current extent. Grows on demand.
#[derive(Debug, Clone)]
pub struct Medium {
    env: TwoSidedEnvironment,
    rule: PartitionRule,
    poly: PolygonalEnvironment,
    scale: MonotoneMap,
    max_extent: f64,
}

fn round_up_steps(steps: usize, granularity: usize) -> usize {
    steps.div_ceil(granularity).max(1) * granularity
}

impl Medium {
    pub fn new(env: TwoSidedEnvironment, rule: PartitionRule) -> Result<Self> {
        Medium::with_max_extent(env, rule, DEFAULT_MAX_EXTENT)
    }

    pub fn with_max_extent(mut env: TwoSidedEnvironment, rule: PartitionRule, max_extent: f64) -> Result<Self> {
        let g = rule.granularity(env.h());
        let steps = round_up_steps(env.n_pos().max(env.n_neg()), g);
        if env.is_extendable() {
            env.extend_in_place(steps as f64 * env.h())?;
        } else if env.n_pos() % g != 0 || env.n_neg() % g != 0 {
            return Err(Error::config("fixed environment extent is not a multiple of the partition step"));
        }
        let (poly, scale) = Self::views(&env, &rule)?;
        Ok(Medium {
            env,
            rule,
            poly,
            scale,
            max_extent,
        })
    }

    fn views(env: &TwoSidedEnvironment, rule: &PartitionRule) -> Result<(PolygonalEnvironment, MonotoneMap)> {
        let part = rule.realize(env.h(), -(env.n_neg() as i64), env.n_pos() as i64)?;
        let poly = interpolate_polygonal(env, &part)?;
        let scale = build_scale_function(&poly)?;
        Ok((poly, scale))
    }

    pub fn env(&self) -> &TwoSidedEnvironment {
        &self.env
    }

    pub fn rule(&self) -> &PartitionRule {
        &self.rule
    }

    pub fn poly(&self) -> &PolygonalEnvironment {
        &self.poly
    }

    pub fn scale(&self) -> &MonotoneMap {
        &self.scale
    }

    /// Double the window until it reaches `x` on both sides.
    pub fn ensure_extent(&mut self, x: f64) -> Result<()> {
        let mut changed = false;
        while self.env.x_max_pos().min(self.env.x_max_neg()) < x {
            self.grow()?;
            changed = true;
        }
        if changed {
            self.refresh()?;
        }
        Ok(())
    }

    /// Grow until `[lo, hi]` lies strictly inside the range of the scale function.
    pub fn ensure_scale_range(&mut self, lo: f64, hi: f64) -> Result<()> {
        loop {
            let (a, b) = self.scale.range();
            if a < lo && hi < b {
                return Ok(());
            }
            self.grow()?;
            self.refresh()?;
        }
    }

    fn grow(&mut self) -> Result<()> {
        let h = self.env.h();
        let current = self.env.n_pos().max(self.env.n_neg());
        let target = round_up_steps(2 * current, self.rule.granularity(h));
        let x = target as f64 * h;
        if x > self.max_extent {
            return Err(Error::Resource(format!(
                "environment extension to {x} exceeds the budget {}",
                self.max_extent
            )));
        }
        self.env.extend_in_place(x).map_err(|e| match e {
            Error::Extent { .. } => Error::Resource(format!("environment cannot grow past {current} steps: {e}")),
            other => other,
        })
    }

    fn refresh(&mut self) -> Result<()> {
        let (poly, scale) = Self::views(&self.env, &self.rule)?;
        self.poly = poly;
        self.scale = scale;
        Ok(())
    }

    /// `W_π(S⁻¹(y))`, growing the window when `y` is out of range.
    pub fn w_at_scale(&mut self, y: f64) -> Result<f64> {
        self.ensure_scale_range(y, y)?;
        let (i, x) = self.scale.invert_located(y)?;
        Ok(self.scale.log_rate_in(i, x))
    }

    /// `S⁻¹(y)`, growing the window when needed.
    pub fn inverse_scale(&mut self, y: f64) -> Result<f64> {
        self.ensure_scale_range(y, y)?;
        self.scale.invert(y)
    }

    /// `S(x)`, growing the window when needed.
    pub fn scale_at(&mut self, x: f64) -> Result<f64> {
        self.ensure_extent(x.abs() + self.env.h())?;
        self.scale.evaluate(x)
    }
}

/// Realization of `(W, B, S, T, X, ℬ)` on a shared time grid.
///
/// `T` and `ℬ` live on a native partition of `B`-time: the uniform steps of
/// `B`, bisected with Brownian-bridge points until every piece advances the
/// clock by at most `dt / substeps`. Without this, a single step of `B`
/// spanning several grid steps makes `ℬ` linear there with a frozen weight.
#[derive(Debug, Clone)]
pub struct BroxRealization {
    medium: Medium,
    b: BrownianPath,
    time_change: MonotoneMap,
    /// Native partition `u_k` of `B`-time and `B(u_k)`.
    native_u: Vec<f64>,
    native_b: Vec<f64>,
    /// `e^{-W(S⁻¹(B(u_k)))}` per native step.
    weights: Vec<f64>,
    /// `ℬ` at the native times `T(u_k)`.
    calb_native: Vec<f64>,
    grid: TimeGrid,
    x: Vec<f64>,
    calb: Vec<f64>,
}

/// Default number of native clock pieces per grid step.
pub const DEFAULT_SUBSTEPS: usize = 16;
/// Bisection depth limit for one step of `B`.
const MAX_BRIDGE_DEPTH: u32 = 40;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImkOptions {
    pub max_b_steps: usize,
    pub substeps: usize,
}

impl Default for ImkOptions {
    fn default() -> Self {
        ImkOptions {
            max_b_steps: DEFAULT_MAX_B_STEPS,
            substeps: DEFAULT_SUBSTEPS,
        }
    }
}

/// Builds `X(t_j) = S⁻¹(B(T⁻¹(t_j)))` and `ℬ(t_j)` on `grid`.
///
/// `B` is extended (from its own stream) until `T` passes the end of the
/// grid; the medium grows whenever `B` leaves the range of `S`.
pub fn itomckean_path(medium: &mut Medium, b: &mut BrownianPath, grid: TimeGrid) -> Result<BroxRealization> {
    itomckean_path_with(medium, b, grid, ImkOptions::default())
}

pub fn itomckean_path_with(
    medium: &mut Medium,
    b: &mut BrownianPath,
    grid: TimeGrid,
    opts: ImkOptions,
) -> Result<BroxRealization> {
    if grid.t0() != 0.0 {
        return Err(Error::config("realization grids start at t = 0"));
    }
    if opts.substeps == 0 {
        return Err(Error::config("substeps must be positive"));
    }
    let dt_b = b.dt();
    let t_end = grid.end();
    let max_dt = grid.dt() / opts.substeps as f64;
    let mut native_u = vec![0.0];
    let mut native_b = vec![0.0];
    let mut tvals = vec![0.0];
    let mut weights = Vec::new();
    // (u, B(u), depth, clock value forced at u when it is a grid time)
    let mut pending: Vec<(f64, f64, u32, Option<f64>)> = Vec::new();
    let mut next_j = 1usize;
    let mut k = 0usize;
    while *tvals.last().unwrap() < t_end || k == 0 {
        if k == b.grid().n_steps() {
            if k >= opts.max_b_steps || !b.is_extendable() {
                return Err(Error::Resource(format!(
                    "driving path exhausted after {k} steps with T = {} < {t_end}",
                    tvals.last().unwrap()
                )));
            }
            b.extend((k / 2).max(1024).min(opts.max_b_steps - k))?;
        }
        pending.push(((k + 1) as f64 * dt_b, b.values()[k + 1], 0, None));
        while let Some((u1, b1, depth, forced)) = pending.pop() {
            let (u0, b0) = (*native_u.last().unwrap(), *native_b.last().unwrap());
            let t0 = *tvals.last().unwrap();
            let w = medium.w_at_scale(b0)?;
            let rate = (-2.0 * w).exp();
            let dt_clock = rate * (u1 - u0);
            if forced.is_none() {
                if dt_clock > max_dt && depth < MAX_BRIDGE_DEPTH {
                    let bm = b.bridge_value(0.5 * (u0 + u1))?;
                    pending.push((u1, b1, depth + 1, None));
                    pending.push((0.5 * (u0 + u1), bm, depth + 1, None));
                    continue;
                }
                // split at the next grid time if this piece passes it
                if next_j < grid.len() {
                    let tg = grid.time(next_j);
                    if t0 + dt_clock > tg && tg > t0 {
                        let um = u0 + (tg - t0) / dt_clock * (u1 - u0);
                        if um > u0 && um < u1 {
                            let bm = b.bridge_value(um)?;
                            pending.push((u1, b1, depth, None));
                            pending.push((um, bm, depth, Some(tg)));
                            continue;
                        }
                    }
                }
            }
            let t1 = forced.unwrap_or(t0 + dt_clock);
            while next_j < grid.len() && grid.time(next_j) <= t1 {
                next_j += 1;
            }
            weights.push((-w).exp());
            tvals.push(t1);
            native_u.push(u1);
            native_b.push(b1);
            if native_u.len() > opts.max_b_steps {
                return Err(Error::Resource(format!("native partition exceeded {} nodes", opts.max_b_steps)));
            }
            // the rest of this step lies beyond the grid; refining it would
            // only push the medium toward regions the path never reaches
            if t1 >= t_end {
                pending.clear();
            }
        }
        k += 1;
    }
    let n_used = k;
    let (lo, hi) = native_b.iter().fold((0.0f64, 0.0f64), |(l, h), &v| (l.min(v), h.max(v)));
    medium.ensure_scale_range(lo, hi)?;

    let mut calb_native = Vec::with_capacity(native_b.len());
    calb_native.push(0.0);
    for i in 0..weights.len() {
        let next = calb_native[i] + weights[i] * (native_b[i + 1] - native_b[i]);
        calb_native.push(next);
    }
    let b_used = BrownianPath::from_values(dt_b, b.values()[..=n_used].to_vec())?;
    let time_change = MonotoneMap::linear(native_u.clone(), tvals, crate::maps::Domain::Time)?;

    let scale = medium.scale();
    let mut x = Vec::with_capacity(grid.len());
    let mut calb = Vec::with_capacity(grid.len());
    for j in 0..grid.len() {
        let t = grid.time(j).min(time_change.range().1);
        let (i, u) = time_change.invert_located(t)?;
        let frac = ((u - native_u[i]) / (native_u[i + 1] - native_u[i])).clamp(0.0, 1.0);
        let db = native_b[i + 1] - native_b[i];
        let bu = if frac == 0.0 { native_b[i] } else { native_b[i] + frac * db };
        x.push(scale.invert(bu)?);
        calb.push(if frac == 0.0 {
            calb_native[i]
        } else {
            calb_native[i] + frac * weights[i] * db
        });
    }
    x[0] = 0.0;
    calb[0] = 0.0;

    Ok(BroxRealization {
        medium: medium.clone(),
        b: b_used,
        time_change,
        native_u,
        native_b,
        weights,
        calb_native,
        grid,
        x,
        calb,
    })
}

impl BroxRealization {
    pub fn medium(&self) -> &Medium {
        &self.medium
    }

    /// The medium may still grow (values already sampled never change).
    pub fn medium_mut(&mut self) -> &mut Medium {
        &mut self.medium
    }

    pub fn env(&self) -> &TwoSidedEnvironment {
        self.medium.env()
    }

    pub fn scale(&self) -> &MonotoneMap {
        self.medium.scale()
    }

    pub fn time_change(&self) -> &MonotoneMap {
        &self.time_change
    }

    /// The uniform steps of `B` consumed by the time change.
    pub fn b(&self) -> &BrownianPath {
        &self.b
    }

    /// Native partition of `B`-time (uniform steps plus bridge points).
    pub fn native_times(&self) -> &[f64] {
        &self.native_u
    }

    /// `B` on the native partition.
    pub fn native_values(&self) -> &[f64] {
        &self.native_b
    }

    /// `B(u)`, linear between native points.
    pub fn b_at(&self, u: f64) -> Result<f64> {
        let us = &self.native_u;
        if !(u >= 0.0 && u <= *us.last().unwrap()) {
            return Err(Error::Extent {
                what: "native time",
                at: u,
                lo: 0.0,
                hi: *us.last().unwrap(),
            });
        }
        let i = us.partition_point(|&v| v <= u).saturating_sub(1).min(us.len() - 2);
        let frac = (u - us[i]) / (us[i + 1] - us[i]);
        Ok(self.native_b[i] + frac * (self.native_b[i + 1] - self.native_b[i]))
    }

    pub fn grid(&self) -> TimeGrid {
        self.grid
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn calb(&self) -> &[f64] {
        &self.calb
    }

    /// `e^{-W(S⁻¹(B(u_k)))}` per native step.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `T⁻¹(t)`.
    pub fn xi_at(&self, t: f64) -> Result<f64> {
        self.time_change.invert(t)
    }

    /// `W_π(x)` and `Ẇ_π(x)` read off the scale function.
    pub fn w_and_slope(&self, x: f64) -> Result<(f64, f64)> {
        let s = self.scale();
        let i = s.locate(x)?;
        let slope = match s.segments()[i] {
            crate::maps::Segment::ExpLinear { b, .. } => b,
            crate::maps::Segment::Linear => 0.0,
        };
        Ok((s.log_rate_in(i, x), slope))
    }

    /// Largest `|S(X(t)) - B(T⁻¹(t))|` over the grid.
    pub fn representation_residual(&self) -> Result<f64> {
        let mut worst = 0.0f64;
        for (j, &xj) in self.x.iter().enumerate() {
            let t = self.grid.time(j).min(self.time_change.range().1);
            let u = self.time_change.invert(t)?;
            let bu = self.b_at(u)?;
            worst = worst.max((self.scale().evaluate(xj)? - bu).abs());
        }
        Ok(worst)
    }

    /// Realized quadratic variation of `ℬ` over `[0, t]` on its native
    /// partition `{T(u_k)}`, i.e. `Σ e^{-2W} (ΔB)²`.
    pub fn realized_qv(&self, t: f64) -> Result<f64> {
        let (i, u) = self.time_change.invert_located(t)?;
        let bv = &self.native_b;
        let mut qv: f64 = (0..i).map(|k| (self.calb_native[k + 1] - self.calb_native[k]).powi(2)).sum();
        let frac = (u - self.native_u[i]) / (self.native_u[i + 1] - self.native_u[i]);
        if frac > 0.0 {
            qv += (frac * self.weights[i] * (bv[i + 1] - bv[i])).powi(2);
        }
        Ok(qv)
    }

    /// Realized quadratic variation of `ℬ` on the shared grid up to `t`.
    pub fn realized_qv_on_grid(&self, t: f64) -> f64 {
        let n = self.grid.floor_index(t);
        self.calb[..=n].windows(2).map(|w| (w[1] - w[0]).powi(2)).sum()
    }
}

/// `ℬ` on the realization grid.
pub fn driving_bm(realization: &BroxRealization) -> Result<BrownianPath> {
    BrownianPath::from_values(realization.grid.dt(), realization.calb.clone())
}

/// Time change of `B` through the current medium (growing it as needed).
pub fn time_change_for(medium: &mut Medium, b: &BrownianPath) -> Result<MonotoneMap> {
    let (lo, hi) = b.values().iter().fold((0.0f64, 0.0f64), |(l, h), &v| (l.min(v), h.max(v)));
    medium.ensure_scale_range(lo, hi)?;
    build_time_change(medium.scale(), b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::path::{EnvStreams, Role, StreamId};

    fn b_path(seed: u64, dt: f64, n: usize) -> BrownianPath {
        BrownianPath::sample(TimeGrid::new(0.0, dt, n).unwrap(), seed, StreamId::new(0, Role::Brownian))
    }

    #[test]
    fn flat_environment_reproduces_b() {
        let env = TwoSidedEnvironment::flat(1.0, 0.01).unwrap();
        let mut medium = Medium::new(env, PartitionRule::Full).unwrap();
        let mut b = b_path(1, 1e-3, 500);
        let grid = TimeGrid::new(0.0, 1e-3, 1000).unwrap();
        let r = itomckean_path(&mut medium, &mut b, grid).unwrap();
        assert_eq!(r.x()[0], 0.0);
        assert_eq!(r.calb()[0], 0.0);
        for j in 0..=1000 {
            assert!((r.x()[j] - b.values()[j]).abs() < 1e-9, "{j}");
            assert!((r.calb()[j] - b.values()[j]).abs() < 1e-9);
        }
        let calb = driving_bm(&r).unwrap();
        assert_eq!(calb.values().len(), 1001);
    }

    #[test]
    fn representation_holds_on_random_environment() {
        let env = TwoSidedEnvironment::sample(1.0, 0.01, EnvStreams::for_replica(7, 0)).unwrap();
        let mut medium = Medium::new(env, PartitionRule::Full).unwrap();
        let mut b = b_path(7, 1e-3, 100);
        let grid = TimeGrid::new(0.0, 1e-3, 1000).unwrap();
        let r = itomckean_path(&mut medium, &mut b, grid).unwrap();
        assert!(r.representation_residual().unwrap() < 1e-10);
        assert!(r.time_change().range().1 >= 1.0);
    }

    #[test]
    fn polygonal_medium_keeps_nodes_under_growth() {
        let env = TwoSidedEnvironment::sample(0.5, 0.01, EnvStreams::for_replica(3, 0)).unwrap();
        let mut medium = Medium::new(env, PartitionRule::Uniform(0.2)).unwrap();
        let before = medium.scale().evaluate(0.4).unwrap();
        medium.ensure_extent(5.0).unwrap();
        assert_eq!(medium.scale().evaluate(0.4).unwrap(), before);
        assert_eq!(medium.env().n_pos() % 20, 0);
    }

    #[test]
    fn fixed_environment_reports_exhaustion() {
        let env = TwoSidedEnvironment::from_values(0.5, vec![0.0, 0.0], vec![0.0, 0.0]).unwrap();
        let mut medium = Medium::new(env, PartitionRule::Full).unwrap();
        assert!(matches!(medium.w_at_scale(3.0), Err(Error::Resource(_))));
    }

    #[test]
    fn qv_matches_time_change_in_expectation() {
        let env = TwoSidedEnvironment::sample(1.0, 0.01, EnvStreams::for_replica(9, 0)).unwrap();
        let mut medium = Medium::new(env, PartitionRule::Full).unwrap();
        let mut b = b_path(9, 1e-4, 1000);
        let grid = TimeGrid::new(0.0, 1e-4, 10_000).unwrap();
        let r = itomckean_path(&mut medium, &mut b, grid).unwrap();
        let qv = r.realized_qv(1.0).unwrap();
        assert!((qv - 1.0).abs() < 0.1, "{qv}");
    }

    #[test]
    fn grid_points_are_native_points() {
        let env = TwoSidedEnvironment::sample(1.0, 0.01, EnvStreams::for_replica(12, 0)).unwrap();
        let mut medium = Medium::new(env, PartitionRule::Full).unwrap();
        let mut b = b_path(12, 1e-3, 1000);
        let grid = TimeGrid::new(0.0, 1e-3, 1000).unwrap();
        let r = itomckean_path(&mut medium, &mut b, grid).unwrap();
        let tc = r.time_change();
        for j in [1usize, 17, 500, 1000] {
            let t = grid.time(j);
            let (i, u) = tc.invert_located(t).unwrap();
            let hit = r.native_times()[i] == u || r.native_times()[i + 1] == u;
            assert!(hit, "grid time {t} is not a native node");
        }
        // grid QV of ℬ close to t once every grid point is native
        let qv = r.realized_qv_on_grid(1.0);
        assert!((qv - 1.0).abs() < 0.15, "{qv}");
    }
}
