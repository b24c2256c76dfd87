//! Strong solution from a given driving Brownian motion `ℬ`: solve
//! `dM = e^{W(S⁻¹(M))} dℬ`, undo the time change and read off `X = S⁻¹(M)`.

use std::io::Write;

use crate::diffusion::{itomckean_path, Medium};
use crate::error::{Error, Result};
use crate::maps::{Domain, MonotoneMap};
use crate::path::{BrownianPath, TimeGrid};

/// Default starting truncation level.
pub const DEFAULT_K_TRUNC: f64 = 1.0;
/// Truncation level beyond which escalation gives up.
pub const DEFAULT_K_BUDGET: f64 = 1e6;

/// `M` on the grid of `ℬ`, with the coefficient evaluated at each node.
#[derive(Debug, Clone)]
pub struct MSolution {
    pub grid: TimeGrid,
    pub m: Vec<f64>,
    /// `e^{W(S⁻¹(M(t_j)))}`.
    pub phi: Vec<f64>,
    pub k_trunc: f64,
}

#[derive(Debug, Clone)]
pub struct AuxiliarySolution {
    pub m: MSolution,
    pub tau: MonotoneMap,
    pub b_reconstructed: BrownianPath,
}

impl AuxiliarySolution {
    pub fn k_trunc(&self) -> f64 {
        self.m.k_trunc
    }

    /// Columns `t, M, τ⁻¹(t), X` on the grid of `M`.
    pub fn write_csv<W: Write>(&self, medium: &mut Medium, out: W) -> Result<()> {
        let x = strong_path(medium, &self.m)?;
        let a = self.tau.values();
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "m", "inverse_clock", "x_strong"])?;
        for j in 0..self.m.m.len() {
            w.write_record([
                self.m.grid.time(j).to_string(),
                self.m.m[j].to_string(),
                a[j].to_string(),
                x[j].to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Euler–Maruyama for `M(t) = ∫ φ_k(M) dℬ` with
/// `φ_k(z) = exp(W(S⁻¹((-k) ∨ (z ∧ k))))`. Whenever `|M|` reaches `k` the
/// level doubles and the scheme continues from that step. The medium grows
/// to cover the values `M` reaches, not the whole window `[-k, k]`.
pub fn solve_m(medium: &mut Medium, calb: &BrownianPath, k_trunc: f64) -> Result<MSolution> {
    solve_m_with_budget(medium, calb, k_trunc, DEFAULT_K_BUDGET)
}

pub fn solve_m_with_budget(medium: &mut Medium, calb: &BrownianPath, k_trunc: f64, k_budget: f64) -> Result<MSolution> {
    if !(k_trunc > 0.0) {
        return Err(Error::config("truncation level must be positive"));
    }
    let values = calb.values();
    let mut k = k_trunc;
    let phi_at = |medium: &mut Medium, z: f64, k: f64| -> Result<f64> { Ok(medium.w_at_scale(z.clamp(-k, k))?.exp()) };
    let mut m = Vec::with_capacity(values.len());
    let mut phi = Vec::with_capacity(values.len());
    m.push(0.0);
    phi.push(phi_at(medium, 0.0, k)?);
    for j in 0..values.len() - 1 {
        let next = m[j] + phi[j] * (values[j + 1] - values[j]);
        while next.abs() >= k {
            k *= 2.0;
            if k > k_budget {
                return Err(Error::Resource(format!("truncation level exceeded {k_budget}")));
            }
        }
        m.push(next);
        phi.push(phi_at(medium, next, k)?);
    }
    Ok(MSolution {
        grid: calb.grid(),
        m,
        phi,
        k_trunc: k,
    })
}

/// `A(u) = Σ_{t_j < u} e^{2W(S⁻¹(M(t_j)))} dt` as a piecewise linear map, its
/// inverse `τ`, and `B′ = M ∘ τ` sampled every `dt_b` up to `A(end)`.
pub fn compute_tau_and_b(solution: &MSolution, dt_b: f64) -> Result<(MonotoneMap, BrownianPath)> {
    let grid = solution.grid;
    let dt = grid.dt();
    let mut a = Vec::with_capacity(solution.m.len());
    a.push(0.0);
    for j in 0..grid.n_steps() {
        a.push(a[j] + solution.phi[j] * solution.phi[j] * dt);
    }
    let ts = (0..grid.len()).map(|j| grid.time(j)).collect();
    let clock = MonotoneMap::linear(ts, a, Domain::Time)?;
    let end = clock.range().1;
    let n = ((end / dt_b) * (1.0 + 1e-12)).floor() as usize;
    let mut b = Vec::with_capacity(n + 1);
    for k in 0..=n {
        let u = clock.invert((k as f64 * dt_b).min(end))?;
        b.push(m_at(solution, u));
    }
    Ok((clock, BrownianPath::from_values(dt_b, b)?))
}

fn m_at(solution: &MSolution, u: f64) -> f64 {
    let g = solution.grid;
    let j = g.floor_index(u).min(g.n_steps().saturating_sub(1));
    let frac = ((u - g.time(j)) / g.dt()).clamp(0.0, 1.0);
    solution.m[j] + frac * (solution.m[j + 1] - solution.m[j])
}

/// `M`, the clock and the reconstructed `B`.
pub fn solve_auxiliary(medium: &mut Medium, calb: &BrownianPath, dt_b: f64) -> Result<AuxiliarySolution> {
    let m = solve_m(medium, calb, DEFAULT_K_TRUNC)?;
    let (tau, b_reconstructed) = compute_tau_and_b(&m, dt_b)?;
    Ok(AuxiliarySolution { m, tau, b_reconstructed })
}

/// `X(t_j) = S⁻¹(M(t_j))`.
pub fn strong_path(medium: &mut Medium, solution: &MSolution) -> Result<Vec<f64>> {
    solution.m.iter().map(|&y| medium.inverse_scale(y)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoundtripError {
    /// `sup_{t ≤ t_end} |X_strong - X|` on the grid.
    pub sup_x: f64,
    /// `sup |B′ - B|` over the common range of `B′` and the used part of `B`.
    pub sup_b: f64,
    pub k_trunc: f64,
}

/// Builds `X` and `ℬ` from `B`, solves for `M` driven by `ℬ`, and compares.
pub fn roundtrip_error(medium: &mut Medium, b: &mut BrownianPath, grid: TimeGrid) -> Result<RoundtripError> {
    let realization = itomckean_path(medium, b, grid)?;
    let calb = BrownianPath::from_values(grid.dt(), realization.calb().to_vec())?;
    let sol = solve_auxiliary(medium, &calb, b.dt())?;
    let x = strong_path(medium, &sol.m)?;
    let sup_x = x
        .iter()
        .zip(realization.x())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let used = realization.b().values();
    let sup_b = sol
        .b_reconstructed
        .values()
        .iter()
        .zip(used)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    Ok(RoundtripError {
        sup_x,
        sup_b,
        k_trunc: sol.k_trunc(),
    })
}

/// `Σ (ΔB)²` over `[0, t]`.
pub fn realized_qv(b: &BrownianPath, t: f64) -> f64 {
    let n = b.steps_before(t).min(b.values().len() - 1);
    b.values()[..=n].windows(2).map(|w| (w[1] - w[0]).powi(2)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::path::{EnvStreams, PartitionRule, Role, StreamId, TwoSidedEnvironment};

    fn calb(seed: u64, dt: f64, n: usize) -> BrownianPath {
        BrownianPath::sample(TimeGrid::new(0.0, dt, n).unwrap(), seed, StreamId::new(0, Role::Driving))
    }

    #[test]
    fn flat_environment_gives_m_equal_calb() {
        let mut medium = Medium::new(TwoSidedEnvironment::flat(2.0, 0.01).unwrap(), PartitionRule::Full).unwrap();
        let c = calb(3, 1e-3, 1000);
        let sol = solve_auxiliary(&mut medium, &c, 1e-3).unwrap();
        assert_eq!(sol.m.m[0], 0.0);
        for (a, b) in sol.m.m.iter().zip(c.values()) {
            assert!((a - b).abs() < 1e-12);
        }
        for (j, a) in sol.tau.values().iter().enumerate() {
            assert!((a - j as f64 * 1e-3).abs() < 1e-9);
        }
        for (a, b) in sol.b_reconstructed.values().iter().zip(c.values()) {
            assert!((a - b).abs() < 1e-9);
        }
        let x = strong_path(&mut medium, &sol.m).unwrap();
        assert_eq!(x[0], 0.0);
        for (a, b) in x.iter().zip(c.values()) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn m_stays_inside_truncation_window() {
        let env = TwoSidedEnvironment::sample(1.0, 0.01, EnvStreams::for_replica(5, 0)).unwrap();
        let mut medium = Medium::new(env, PartitionRule::Full).unwrap();
        let c = calb(8, 1e-3, 4000);
        let sol = solve_m(&mut medium, &c, 0.25).unwrap();
        assert!(sol.m.iter().all(|m| m.abs() < sol.k_trunc));
        assert!(sol.k_trunc >= 0.25);
        let (lo, hi) = medium.scale().range();
        assert!(sol.m.iter().all(|&m| lo < m && m < hi));
    }

    #[test]
    fn escalation_budget_is_a_resource_error() {
        let mut medium = Medium::new(TwoSidedEnvironment::flat(2.0, 0.01).unwrap(), PartitionRule::Full).unwrap();
        let c = BrownianPath::from_values(0.1, vec![0.0, 5.0]).unwrap();
        assert!(matches!(solve_m_with_budget(&mut medium, &c, 1.0, 2.0), Err(Error::Resource(_))));
    }

    #[test]
    fn clock_and_tau_are_inverse() {
        let env = TwoSidedEnvironment::sample(1.0, 0.01, EnvStreams::for_replica(6, 0)).unwrap();
        let mut medium = Medium::new(env, PartitionRule::Full).unwrap();
        let c = calb(2, 1e-3, 1000);
        let sol = solve_auxiliary(&mut medium, &c, 1e-3).unwrap();
        assert_eq!(sol.tau.values()[0], 0.0);
        for j in [1usize, 10, 500, 1000] {
            let t = j as f64 * 1e-3;
            let a = sol.tau.evaluate(t).unwrap();
            assert!((sol.tau.invert(a).unwrap() - t).abs() < 1e-10);
        }
    }

    #[test]
    fn roundtrip_flat_is_exact() {
        let mut medium = Medium::new(TwoSidedEnvironment::flat(2.0, 0.01).unwrap(), PartitionRule::Full).unwrap();
        let mut b = BrownianPath::sample(TimeGrid::new(0.0, 1e-3, 1200).unwrap(), 4, StreamId::new(0, Role::Brownian));
        let r = roundtrip_error(&mut medium, &mut b, TimeGrid::covering(1.0, 1e-3).unwrap()).unwrap();
        assert!(r.sup_x < 1e-9, "{r:?}");
        assert!(r.sup_b < 1e-9, "{r:?}");
    }
}
