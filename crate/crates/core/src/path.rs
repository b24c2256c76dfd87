//! Reproducible Brownian paths, two-sided environments and their polygonal
//! interpolants.
//!
//! Every random path owns a ChaCha8 stream selected by `(seed, StreamId)`.
//! Streams are counter based, so a path can be extended later and the new
//! increments continue exactly where the first draw stopped.

use std::collections::HashMap;
use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

/// Recorded in experiment metadata.
pub const GAUSSIAN_SAMPLER: &str = "ziggurat (rand_distr::StandardNormal) on ChaCha8 streams";

/// Role of a stream inside one replica.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Brownian = 0,
    EnvPositive = 1,
    EnvNegative = 2,
    Driving = 3,
    /// Brownian-bridge refinement of a `Brownian` path.
    Bridge = 4,
}

/// Label of an RNG stream: one per (replica, role).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StreamId(pub u64);

impl StreamId {
    pub fn new(replica: u64, role: Role) -> Self {
        StreamId(replica.wrapping_mul(8).wrapping_add(role as u64))
    }

    /// Same replica, another role.
    pub fn with_role(self, role: Role) -> Self {
        StreamId(self.0 - self.0 % 8 + role as u64)
    }
}

#[derive(Debug, Clone)]
struct Stream {
    rng: ChaCha8Rng,
}

impl Stream {
    fn open(seed: u64, id: StreamId) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(id.0);
        Stream { rng }
    }

    fn normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.rng)
    }
}

/// Points of the path sampled between grid nodes, kept so that every later
/// query (from any consumer of the same path) sees a consistent path.
#[derive(Debug, Clone, Default)]
struct Bridge {
    stream: Option<Stream>,
    /// Per grid step: `(u, B(u))` sorted by `u`, interior points only.
    points: HashMap<usize, Vec<(f64, f64)>>,
}

/// Uniform grid `t0 + k * dt`, `k = 0..=n_steps`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    t0: f64,
    dt: f64,
    n_steps: usize,
}

impl TimeGrid {
    pub fn new(t0: f64, dt: f64, n_steps: usize) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::config(format!("time step must be positive, got {dt}")));
        }
        if n_steps == 0 {
            return Err(Error::config("time grid needs at least one step"));
        }
        if !t0.is_finite() {
            return Err(Error::config("grid origin must be finite"));
        }
        Ok(TimeGrid { t0, dt, n_steps })
    }

    /// Grid on `[0, t_end]` with step `dt`; the step count is rounded to the
    /// nearest integer so that `t_end` is hit up to rounding.
    pub fn covering(t_end: f64, dt: f64) -> Result<Self> {
        if !(dt > 0.0) {
            return Err(Error::config(format!("time step must be positive, got {dt}")));
        }
        let n = (t_end / dt).round().max(1.0) as usize;
        TimeGrid::new(0.0, dt, n)
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn len(&self) -> usize {
        self.n_steps + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn time(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.dt
    }

    pub fn end(&self) -> f64 {
        self.time(self.n_steps)
    }

    /// Index of the last grid point not after `t` (clamped to the grid).
    pub fn floor_index(&self, t: f64) -> usize {
        let k = ((t - self.t0) / self.dt + 1e-9).floor();
        if k <= 0.0 {
            0
        } else {
            (k as usize).min(self.n_steps)
        }
    }
}

/// Brownian path sampled on a uniform time grid, `values[0] = 0`.
#[derive(Debug, Clone)]
pub struct BrownianPath {
    grid: TimeGrid,
    values: Vec<f64>,
    seed: Option<u64>,
    stream_id: Option<StreamId>,
    stream: Option<Stream>,
    bridge: Bridge,
}

impl BrownianPath {
    /// Cumulative sum of i.i.d. `N(0, dt)` increments drawn from `(seed, id)`.
    pub fn sample(grid: TimeGrid, seed: u64, id: StreamId) -> Self {
        let mut stream = Stream::open(seed, id);
        let sd = grid.dt().sqrt();
        let mut values = Vec::with_capacity(grid.len());
        values.push(0.0);
        let mut acc = 0.0;
        for _ in 0..grid.n_steps() {
            acc += sd * stream.normal();
            values.push(acc);
        }
        BrownianPath {
            grid,
            values,
            seed: Some(seed),
            stream_id: Some(id),
            stream: Some(stream),
            bridge: Bridge::default(),
        }
    }

    /// Injected path (tests, deterministic scenarios). Not extendable.
    pub fn from_values(dt: f64, values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::config("a path needs at least two values"));
        }
        if values[0] != 0.0 {
            return Err(Error::config("path must start at 0"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::config("path values must be finite"));
        }
        let grid = TimeGrid::new(0.0, dt, values.len() - 1)?;
        Ok(BrownianPath {
            grid,
            values,
            seed: None,
            stream_id: None,
            stream: None,
            bridge: Bridge::default(),
        })
    }

    pub fn from_increments(dt: f64, increments: &[f64]) -> Result<Self> {
        let mut values = Vec::with_capacity(increments.len() + 1);
        values.push(0.0);
        let mut acc = 0.0;
        for inc in increments {
            acc += inc;
            values.push(acc);
        }
        BrownianPath::from_values(dt, values)
    }

    pub fn grid(&self) -> TimeGrid {
        self.grid
    }

    pub fn dt(&self) -> f64 {
        self.grid.dt()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn stream_id(&self) -> Option<StreamId> {
        self.stream_id
    }

    pub fn end_time(&self) -> f64 {
        self.grid.end()
    }

    /// `B(u)` at an arbitrary time inside the grid. Between nodes the value
    /// is drawn from the Brownian bridge given the nearest known points and
    /// cached; the draws use the `Bridge` stream of this path's replica
    /// (replica 0, seed 0 for injected paths).
    pub fn bridge_value(&mut self, u: f64) -> Result<f64> {
        let dt = self.dt();
        let n = self.grid.n_steps();
        if !(u >= 0.0 && u <= n as f64 * dt) {
            return Err(Error::Extent {
                what: "bridge time",
                at: u,
                lo: 0.0,
                hi: n as f64 * dt,
            });
        }
        let x = u / dt;
        if (x - x.round()).abs() < 1e-9 {
            return Ok(self.values[(x.round() as usize).min(n)]);
        }
        let k = (x.floor() as usize).min(n - 1);
        let (u0, u1) = (k as f64 * dt, (k + 1) as f64 * dt);
        if u <= u0 {
            return Ok(self.values[k]);
        }
        if u >= u1 {
            return Ok(self.values[k + 1]);
        }
        let seed = self.seed.unwrap_or(0);
        let id = self.stream_id.unwrap_or(StreamId(0)).with_role(Role::Bridge);
        let stream = self.bridge.stream.get_or_insert_with(|| Stream::open(seed, id));
        let pts = self.bridge.points.entry(k).or_default();
        let j = pts.partition_point(|p| p.0 < u);
        if j < pts.len() && pts[j].0 == u {
            return Ok(pts[j].1);
        }
        let (ul, bl) = if j == 0 { (u0, self.values[k]) } else { pts[j - 1] };
        let (ur, br) = if j == pts.len() { (u1, self.values[k + 1]) } else { pts[j] };
        let f = (u - ul) / (ur - ul);
        let v = bl + f * (br - bl) + (f * (1.0 - f) * (ur - ul)).sqrt() * stream.normal();
        pts.insert(j, (u, v));
        Ok(v)
    }

    /// Number of cached bridge points.
    pub fn bridge_points(&self) -> usize {
        self.bridge.points.values().map(Vec::len).sum()
    }

    pub fn is_extendable(&self) -> bool {
        self.stream.is_some()
    }

    /// Append `n_more` increments from the continuation of the stream.
    pub fn extend(&mut self, n_more: usize) -> Result<()> {
        let stream = self
            .stream
            .as_mut()
            .ok_or_else(|| Error::Resource("path has no stream to extend from".into()))?;
        let sd = self.grid.dt().sqrt();
        let mut acc = *self.values.last().unwrap();
        self.values.reserve(n_more);
        for _ in 0..n_more {
            acc += sd * stream.normal();
            self.values.push(acc);
        }
        self.grid = TimeGrid::new(self.grid.t0(), self.grid.dt(), self.values.len() - 1)?;
        Ok(())
    }

    /// Every `factor`-th point of this path, as an independent (non-extendable) path.
    pub fn subsample(&self, factor: usize) -> Result<Self> {
        if factor == 0 {
            return Err(Error::config("subsampling factor must be positive"));
        }
        let values: Vec<f64> = self.values.iter().step_by(factor).copied().collect();
        let mut p = BrownianPath::from_values(self.dt() * factor as f64, values)?;
        p.seed = self.seed;
        p.stream_id = self.stream_id;
        Ok(p)
    }

    /// Linear interpolation between grid points.
    pub fn value_at(&self, t: f64) -> Result<f64> {
        let (lo, hi) = (self.grid.t0(), self.grid.end());
        if !(t >= lo - 1e-12 && t <= hi + 1e-12) {
            return Err(Error::Extent {
                what: "path time",
                at: t,
                lo,
                hi,
            });
        }
        let k = self.grid.floor_index(t);
        if k == self.grid.n_steps() {
            return Ok(self.values[k]);
        }
        let frac = ((t - self.grid.time(k)) / self.dt()).clamp(0.0, 1.0);
        Ok(self.values[k] + frac * (self.values[k + 1] - self.values[k]))
    }

    /// Running maximum of `|B|` over grid points with time `< t` (at least index 0).
    pub fn running_abs_max(&self, t: f64) -> f64 {
        let n = self.steps_before(t);
        self.values[..n.max(1)]
            .iter()
            .fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// Number of grid steps whose left endpoint lies strictly before `t`.
    pub fn steps_before(&self, t: f64) -> usize {
        let x = (t - self.grid.t0()) / self.dt();
        let k = (x - 1e-9).ceil();
        if k <= 0.0 {
            0
        } else {
            (k as usize).min(self.grid.n_steps())
        }
    }

    pub fn holder_norm(&self, lambda: f64, a: f64, b: f64) -> Result<f64> {
        let ts: Vec<f64> = (0..self.grid.len()).map(|k| self.grid.time(k)).collect();
        holder_norm(&ts, &self.values, lambda, a, b)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "value"])?;
        for (k, v) in self.values.iter().enumerate() {
            w.write_record([self.grid.time(k).to_string(), v.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone)]
enum Source {
    Random(Stream),
    Flat,
    Fixed,
}

/// Which half-line of the environment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Positive,
    Negative,
}

/// Streams for the two halves of an environment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EnvStreams {
    pub seed: u64,
    pub positive: StreamId,
    pub negative: StreamId,
}

impl EnvStreams {
    pub fn for_replica(seed: u64, replica: u64) -> Self {
        EnvStreams {
            seed,
            positive: StreamId::new(replica, Role::EnvPositive),
            negative: StreamId::new(replica, Role::EnvNegative),
        }
    }
}

/// Two-sided Brownian motion on the grid `i * h`.
///
/// `positive[i] = W(i h)` and `negative[i] = W(-i h)`; both vectors start with
/// the shared origin value 0, which is owned by the positive side.
#[derive(Debug, Clone)]
pub struct TwoSidedEnvironment {
    h: f64,
    positive: Vec<f64>,
    negative: Vec<f64>,
    source_pos: Source,
    source_neg: Source,
}

fn steps_for(x_max: f64, h: f64) -> usize {
    ((x_max / h) - 1e-9).ceil().max(1.0) as usize
}

impl TwoSidedEnvironment {
    pub fn sample(x_max: f64, h: f64, streams: EnvStreams) -> Result<Self> {
        Self::check(x_max, h)?;
        let mut env = TwoSidedEnvironment {
            h,
            positive: vec![0.0],
            negative: vec![0.0],
            source_pos: Source::Random(Stream::open(streams.seed, streams.positive)),
            source_neg: Source::Random(Stream::open(streams.seed, streams.negative)),
        };
        env.extend_in_place(x_max)?;
        Ok(env)
    }

    /// `W == 0` on any window; extension keeps it flat.
    pub fn flat(x_max: f64, h: f64) -> Result<Self> {
        Self::check(x_max, h)?;
        let n = steps_for(x_max, h);
        Ok(TwoSidedEnvironment {
            h,
            positive: vec![0.0; n + 1],
            negative: vec![0.0; n + 1],
            source_pos: Source::Flat,
            source_neg: Source::Flat,
        })
    }

    /// Injected environment; `positive[0]` and `negative[0]` must both be 0.
    pub fn from_values(h: f64, positive: Vec<f64>, negative: Vec<f64>) -> Result<Self> {
        if !(h > 0.0) {
            return Err(Error::config("spatial step must be positive"));
        }
        if positive.len() < 2 || negative.len() < 2 {
            return Err(Error::config("each side needs at least one step"));
        }
        if positive[0] != 0.0 || negative[0] != 0.0 {
            return Err(Error::config("environment must vanish at the origin"));
        }
        Ok(TwoSidedEnvironment {
            h,
            positive,
            negative,
            source_pos: Source::Fixed,
            source_neg: Source::Fixed,
        })
    }

    fn check(x_max: f64, h: f64) -> Result<()> {
        if !(h > 0.0) || !(x_max > 0.0) {
            return Err(Error::config("x_max and h must be positive"));
        }
        if h > x_max * (1.0 + 1e-12) {
            return Err(Error::config(format!("spatial step {h} exceeds window {x_max}")));
        }
        Ok(())
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    /// Number of stored steps on the positive side.
    pub fn n_pos(&self) -> usize {
        self.positive.len() - 1
    }

    pub fn n_neg(&self) -> usize {
        self.negative.len() - 1
    }

    pub fn x_max_pos(&self) -> f64 {
        self.n_pos() as f64 * self.h
    }

    pub fn x_max_neg(&self) -> f64 {
        self.n_neg() as f64 * self.h
    }

    /// Total number of stored values (origin counted once).
    pub fn stored_len(&self) -> usize {
        self.positive.len() + self.negative.len() - 1
    }

    #[inline]
    pub fn node_x(&self, i: i64) -> f64 {
        i as f64 * self.h
    }

    pub fn contains_node(&self, i: i64) -> bool {
        i >= -(self.n_neg() as i64) && i <= self.n_pos() as i64
    }

    /// `W(i h)`.
    #[inline]
    pub fn node_value(&self, i: i64) -> Result<f64> {
        if i >= 0 {
            self.positive.get(i as usize).copied()
        } else {
            self.negative.get((-i) as usize).copied()
        }
        .ok_or(Error::Extent {
            what: "environment node",
            at: self.node_x(i),
            lo: -self.x_max_neg(),
            hi: self.x_max_pos(),
        })
    }

    /// Linear interpolation of the grid values.
    pub fn value(&self, x: f64) -> Result<f64> {
        let s = x / self.h;
        let i = s.floor();
        let frac = s - i;
        let i = i as i64;
        let left = self.node_value(i)?;
        if frac == 0.0 {
            return Ok(left);
        }
        let right = self.node_value(i + 1)?;
        Ok(left + frac * (right - left))
    }

    /// Nearest grid index to `x`.
    pub fn snap(&self, x: f64) -> i64 {
        (x / self.h).round() as i64
    }

    /// Returns an extended copy; see [`TwoSidedEnvironment::extend_in_place`].
    pub fn extend(&self, new_x_max: f64) -> Result<Self> {
        let mut e = self.clone();
        e.extend_in_place(new_x_max)?;
        Ok(e)
    }

    /// Grow both sides to cover `[-new_x_max, new_x_max]`. Existing values
    /// never change; a window already covered is a no-op.
    pub fn extend_in_place(&mut self, new_x_max: f64) -> Result<()> {
        self.extend_side(Side::Positive, new_x_max)?;
        self.extend_side(Side::Negative, new_x_max)
    }

    pub fn extend_side(&mut self, side: Side, new_x_max: f64) -> Result<()> {
        let h = self.h;
        let target = steps_for(new_x_max, h);
        let (values, source) = match side {
            Side::Positive => (&mut self.positive, &mut self.source_pos),
            Side::Negative => (&mut self.negative, &mut self.source_neg),
        };
        let have = values.len() - 1;
        if target <= have {
            return Ok(());
        }
        let sd = h.sqrt();
        match source {
            Source::Random(stream) => {
                let mut acc = *values.last().unwrap();
                for _ in have..target {
                    acc += sd * stream.normal();
                    values.push(acc);
                }
            }
            Source::Flat => values.resize(target + 1, 0.0),
            Source::Fixed => {
                let hi = have as f64 * h;
                return Err(Error::Extent {
                    what: "fixed environment extension",
                    at: new_x_max,
                    lo: -hi,
                    hi,
                });
            }
        }
        Ok(())
    }

    pub fn is_extendable(&self) -> bool {
        !matches!(self.source_pos, Source::Fixed)
    }

    pub fn holder_norm(&self, lambda: f64, a: f64, b: f64) -> Result<f64> {
        let lo = -(self.n_neg() as i64);
        let hi = self.n_pos() as i64;
        let xs: Vec<f64> = (lo..=hi).map(|i| self.node_x(i)).collect();
        let ys: Vec<f64> = (lo..=hi).map(|i| self.node_value(i).unwrap()).collect();
        holder_norm(&xs, &ys, lambda, a, b)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["x", "value"])?;
        for i in -(self.n_neg() as i64)..=(self.n_pos() as i64) {
            w.write_record([self.node_x(i).to_string(), self.node_value(i)?.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Mesh sizes per unit interval `[N-1, N]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PerUnitMeshes {
    /// `N` of the first entry in `meshes`.
    pub first_unit: i64,
    pub meshes: Vec<f64>,
}

impl PerUnitMeshes {
    /// Mesh on `[N-1, N]`; units outside the table reuse the nearest entry.
    pub fn mesh(&self, n: i64) -> f64 {
        let last = self.meshes.len() as i64 - 1;
        let k = (n - self.first_unit).clamp(0, last);
        self.meshes[k as usize]
    }
}

/// How a partition is laid over an environment window.
#[derive(Debug, Clone, PartialEq)]
pub enum PartitionRule {
    /// Every grid point is a node.
    Full,
    /// Nodes at multiples of `mesh` (snapped to a multiple of `h`).
    Uniform(f64),
    PerUnit(PerUnitMeshes),
}

impl PartitionRule {
    /// Spatial granularity (in grid steps) that extension targets must respect
    /// so that nodes laid over a larger window keep the old ones.
    pub fn granularity(&self, h: f64) -> usize {
        match self {
            PartitionRule::Full => 1,
            PartitionRule::Uniform(mesh) => ((mesh / h).round() as usize).max(1),
            PartitionRule::PerUnit(_) => ((1.0 / h).round() as usize).max(1),
        }
    }

    pub fn realize(&self, h: f64, lo_idx: i64, hi_idx: i64) -> Result<Partition> {
        match self {
            PartitionRule::Full => Partition::from_indices(h, (lo_idx..=hi_idx).collect()),
            PartitionRule::Uniform(mesh) => {
                let k = ((mesh / h).round() as i64).max(1);
                let mut idx = vec![lo_idx];
                let mut j = lo_idx.div_euclid(k) * k + k;
                while j < hi_idx {
                    idx.push(j);
                    j += k;
                }
                idx.push(hi_idx);
                idx.dedup();
                Partition::from_indices(h, idx)
            }
            PartitionRule::PerUnit(table) => {
                let per_unit = (1.0 / h).round() as i64;
                if ((per_unit as f64) * h - 1.0).abs() > 1e-9 {
                    return Err(Error::config("per-unit partitions need 1/h to be an integer"));
                }
                let mut idx = vec![lo_idx];
                let mut n = lo_idx.div_euclid(per_unit) + 1;
                loop {
                    let start = (n - 1) * per_unit;
                    if start >= hi_idx {
                        break;
                    }
                    let step = ((table.mesh(n) / h).round() as i64).max(1);
                    let mut j = start;
                    while j < start + per_unit {
                        if j > lo_idx && j < hi_idx {
                            idx.push(j);
                        }
                        j += step;
                    }
                    n += 1;
                }
                idx.push(hi_idx);
                idx.sort_unstable();
                idx.dedup();
                Partition::from_indices(h, idx)
            }
        }
    }
}

/// Strictly increasing nodes lying on the environment grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    h: f64,
    idx: Vec<i64>,
    mesh: f64,
}

impl Partition {
    pub fn from_indices(h: f64, idx: Vec<i64>) -> Result<Self> {
        if idx.len() < 2 {
            return Err(Error::config("a partition needs at least two nodes"));
        }
        if idx.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::config("partition nodes must be strictly increasing"));
        }
        let mesh = idx
            .windows(2)
            .map(|w| (w[1] - w[0]) as f64 * h)
            .fold(0.0, f64::max);
        Ok(Partition { h, idx, mesh })
    }

    /// Snaps each node to the nearest multiple of `h`.
    pub fn from_nodes(h: f64, nodes: &[f64]) -> Result<Self> {
        Partition::from_indices(h, nodes.iter().map(|x| (x / h).round() as i64).collect())
    }

    pub fn uniform(h: f64, mesh: f64, lo: f64, hi: f64) -> Result<Self> {
        PartitionRule::Uniform(mesh).realize(h, (lo / h).floor() as i64, (hi / h).ceil() as i64)
    }

    pub fn indices(&self) -> &[i64] {
        &self.idx
    }

    pub fn nodes(&self) -> Vec<f64> {
        self.idx.iter().map(|&i| i as f64 * self.h).collect()
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn mesh(&self) -> f64 {
        self.mesh
    }

    pub fn len(&self) -> usize {
        self.idx.len()
    }

    pub fn is_empty(&self) -> bool {
        self.idx.is_empty()
    }

    pub fn lo(&self) -> f64 {
        self.idx[0] as f64 * self.h
    }

    pub fn hi(&self) -> f64 {
        *self.idx.last().unwrap() as f64 * self.h
    }
}

/// Piecewise-linear interpolation of an environment on a partition.
#[derive(Debug, Clone)]
pub struct PolygonalEnvironment {
    partition: Partition,
    xs: Vec<f64>,
    values: Vec<f64>,
}

/// Interpolates `env` on `partition`; node values are copied, not recomputed.
pub fn interpolate_polygonal(
    env: &TwoSidedEnvironment,
    partition: &Partition,
) -> Result<PolygonalEnvironment> {
    if (partition.h() - env.h()).abs() > 1e-15 * env.h() {
        return Err(Error::config("partition and environment use different grids"));
    }
    let values = partition
        .indices()
        .iter()
        .map(|&i| env.node_value(i))
        .collect::<Result<Vec<_>>>()?;
    Ok(PolygonalEnvironment {
        xs: partition.nodes(),
        partition: partition.clone(),
        values,
    })
}

impl PolygonalEnvironment {
    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    pub fn nodes(&self) -> &[f64] {
        &self.xs
    }

    pub fn node_values(&self) -> &[f64] {
        &self.values
    }

    /// Index `i` of the segment `[x_i, x_{i+1})` holding `x`.
    pub fn segment(&self, x: f64) -> Result<usize> {
        let (lo, hi) = (self.xs[0], *self.xs.last().unwrap());
        if !(x >= lo && x <= hi) {
            return Err(Error::Extent {
                what: "polygonal environment",
                at: x,
                lo,
                hi,
            });
        }
        let j = self.xs.partition_point(|&n| n <= x);
        Ok(j.saturating_sub(1).min(self.xs.len() - 2))
    }

    pub fn slope_of_segment(&self, i: usize) -> f64 {
        (self.values[i + 1] - self.values[i]) / (self.xs[i + 1] - self.xs[i])
    }

    pub fn value(&self, x: f64) -> Result<f64> {
        let i = self.segment(x)?;
        Ok(self.values[i] + self.slope_of_segment(i) * (x - self.xs[i]))
    }

    /// Right-continuous derivative of the interpolant.
    pub fn slope(&self, x: f64) -> Result<f64> {
        Ok(self.slope_of_segment(self.segment(x)?))
    }
}

/// Sup norm plus the largest discrete Hölder quotient over sample pairs in `[a, b]`.
pub fn holder_norm(xs: &[f64], ys: &[f64], lambda: f64, a: f64, b: f64) -> Result<f64> {
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(Error::domain(format!("Hölder exponent {lambda} not in (0,1)")));
    }
    if !(a < b) {
        return Err(Error::domain("empty Hölder window"));
    }
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|(x, _)| **x >= a - 1e-12 && **x <= b + 1e-12)
        .map(|(x, y)| (*x, *y))
        .collect();
    if pts.is_empty() {
        return Err(Error::domain("no samples inside the Hölder window"));
    }
    let sup = pts.iter().fold(0.0_f64, |m, p| m.max(p.1.abs()));
    let mut q = 0.0_f64;
    for (i, p) in pts.iter().enumerate() {
        for r in &pts[i + 1..] {
            let d = (r.0 - p.0).abs();
            if d > 0.0 {
                q = q.max((r.1 - p.1).abs() / d.powf(lambda));
            }
        }
    }
    Ok(sup + q)
}
