//! The discrete-time chain-regularized N-body scheme.
//!
//! One step solves `4(N−1)` equations for the chained regularized vectors at
//! the new node: the discrete velocity relation for every chained pair and the
//! `N−1` summed force balances, in which non-chained pairs enter through
//! their reconstructions from the chain basis.

use crate::chain::{rechain_state, should_rechain, Chain};
use crate::error::{Error, Result};
use crate::levi_civita::{align_sign, endpoint_p_tilde, lc_momentum_compose, p_tilde_midpoint_with, reconstruct_q_tilde};
use crate::newton::{self, NewtonConfig};
pub use crate::run::integrate;
use crate::state::{barycentric_from_chain, barycentric_from_chain_only, forces, pair_index, ChainLCState, MassSystem};
use crate::vec2::Vec2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepConfig {
    pub dt: f64,
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    pub fd_jacobian_rel_step: f64,
}

impl StepConfig {
    pub const DEFAULT_NEWTON_TOL: f64 = 1e-13;
    pub const DEFAULT_NEWTON_MAX_ITER: usize = 50;

    pub fn new(dt: f64) -> Self {
        StepConfig {
            dt,
            newton_tol: Self::DEFAULT_NEWTON_TOL,
            newton_max_iter: Self::DEFAULT_NEWTON_MAX_ITER,
            fd_jacobian_rel_step: f64::EPSILON.sqrt(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::InvalidConfig(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.newton_tol.is_finite() && self.newton_tol > 0.0) {
            return Err(Error::InvalidConfig(format!("newton_tol must be positive, got {}", self.newton_tol)));
        }
        if self.newton_max_iter < 1 {
            return Err(Error::InvalidConfig("newton_max_iter must be at least 1".into()));
        }
        if !(self.fd_jacobian_rel_step.is_finite() && self.fd_jacobian_rel_step > 0.0) {
            return Err(Error::InvalidConfig("fd_jacobian_rel_step must be positive".into()));
        }
        Ok(())
    }

    pub fn newton(&self) -> NewtonConfig {
        NewtonConfig {
            tol: self.newton_tol,
            max_iter: self.newton_max_iter,
            fd_rel_step: self.fd_jacobian_rel_step,
        }
    }
}

/// Stacked residual: the F-block (`2(N−1)` values) then the G-block.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualVector {
    pub values: Vec<f64>,
}

impl ResidualVector {
    pub fn inf_norm(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn f_block(&self) -> &[f64] {
        &self.values[..self.values.len() / 2]
    }

    pub fn g_block(&self) -> &[f64] {
        &self.values[self.values.len() / 2..]
    }
}

#[inline]
fn f_kernel(coef: f64, qa: Vec2, qb: Vec2, pa: Vec2, pb: Vec2, dt: f64) -> Option<Vec2> {
    let (ra, rb) = (qa.norm2(), qb.norm2());
    if ra == 0.0 || rb == 0.0 {
        return None;
    }
    Some((qb - qa) / dt - (pa + pb) * (0.5 * coef * (ra + rb) / (ra * rb)))
}

#[inline]
#[allow(clippy::too_many_arguments)]
fn g_kernel(m: f64, mi: f64, mj: f64, qa: Vec2, qb: Vec2, pa: Vec2, pb: Vec2, dt: f64) -> Option<Vec2> {
    let qm = (qa + qb) * 0.5;
    let (ra, rb, rm) = (qa.norm2(), qb.norm2(), qm.norm2());
    if ra == 0.0 || rb == 0.0 || rm == 0.0 {
        return None;
    }
    let mij = mi * mj;
    let bracket = (pb - pa) / dt - qm * ((m / (8.0 * mij) * (pb.norm2() + pa.norm2()) - 2.0 * mij) / (rb * ra));
    Some(bracket.cmul(qm) / (2.0 * rm))
}

/// Discrete velocity relation of chained slot `k`. `sys` is in slot order.
pub fn residual_f_chained(
    sys: &MassSystem,
    q_n: &[Vec2],
    q_np1: &[Vec2],
    p_n: &[Vec2],
    p_np1: &[Vec2],
    k: usize,
    dt: f64,
) -> Result<Vec2> {
    let coef = sys.total_mass() / (8.0 * sys.mass(k) * sys.mass(k + 1));
    f_kernel(coef, q_n[k], q_np1[k], p_n[k], p_np1[k], dt).ok_or(Error::SingularSeparation { i: k, j: k + 1 })
}

/// Discrete force function of one pair `(i, j)` of `sys` from its regularized
/// vectors at both nodes.
#[allow(clippy::too_many_arguments)]
pub fn residual_g_pair(
    sys: &MassSystem,
    i: usize,
    j: usize,
    q_n: Vec2,
    q_np1: Vec2,
    p_n: Vec2,
    p_np1: Vec2,
    dt: f64,
) -> Result<Vec2> {
    g_kernel(sys.total_mass(), sys.mass(i), sys.mass(j), q_n, q_np1, p_n, p_np1, dt).ok_or(Error::SingularSeparation { i, j })
}

/// `4 m_i m_j |Q|² / (m dt)`: momentum per unit of regularized displacement.
#[inline]
pub(crate) fn momentum_scale(m: f64, mi: f64, mj: f64, q_n: Vec2, dt: f64) -> f64 {
    let r = q_n.norm2();
    4.0 * mi * mj * if r > 0.0 { r } else { 1.0 } / (m * dt)
}

#[derive(Debug, Clone, Copy)]
struct NonChained {
    i: usize,
    j: usize,
    qt_n: Vec2,
    pt_n: Vec2,
}

/// Node-n data shared by every residual evaluation of one step.
pub(crate) struct StepContext<'a> {
    sys: MassSystem,
    chain: &'a Chain,
    q_n: &'a [Vec2],
    p_n: &'a [Vec2],
    nc: Vec<NonChained>,
    dt: f64,
}

/// Non-chained reconstruction at the new node.
#[derive(Debug, Clone, Copy)]
pub(crate) struct NonChainedUpdate {
    pub i: usize,
    pub j: usize,
    pub qt: Vec2,
    pub pt: Vec2,
}

impl<'a> StepContext<'a> {
    pub(crate) fn new(sys: &MassSystem, state: &'a ChainLCState, dt: f64) -> Result<Self> {
        let chain = &state.chain;
        let order = chain.order();
        let n = sys.n();
        let slot_sys = sys.reordered(chain);
        let mut nc = Vec::with_capacity(n * (n - 1) / 2);
        for i in 0..n {
            for j in i + 2..n {
                let qt_n = reconstruct_q_tilde(&state.q, i, j).map_err(|_| slot_err(chain, i, j))?;
                let p = state.pair_momentum(order[i], order[j]);
                nc.push(NonChained { i, j, qt_n, pt_n: p.cmul(qt_n.conj()) * 2.0 });
            }
        }
        Ok(StepContext { sys: slot_sys, chain, q_n: &state.q, p_n: &state.p, nc, dt })
    }

    /// F and G-row values at the candidate new node; `G-row j` is the summed
    /// force balance of slot `j + 1`.
    pub(crate) fn evaluate(
        &self,
        q1: &[Vec2],
        p1: &[Vec2],
        f_out: &mut [Vec2],
        g_out: &mut [Vec2],
        mut updates: Option<&mut Vec<NonChainedUpdate>>,
    ) -> Result<()> {
        let n = self.sys.n();
        let m = self.sys.total_mass();
        let dt = self.dt;
        let mut row = vec![Vec2::ZERO; n];
        for k in 0..n - 1 {
            let (mk, mk1) = (self.sys.mass(k), self.sys.mass(k + 1));
            let coef = m / (8.0 * mk * mk1);
            f_out[k] = f_kernel(coef, self.q_n[k], q1[k], self.p_n[k], p1[k], dt).ok_or_else(|| slot_err(self.chain, k, k + 1))?;
            let g = g_kernel(m, mk, mk1, self.q_n[k], q1[k], self.p_n[k], p1[k], dt).ok_or_else(|| slot_err(self.chain, k, k + 1))?;
            row[k + 1] += g;
            row[k] -= g;
        }
        let p_mid: Vec<Vec2> = self.p_n.iter().zip(p1).map(|(a, b)| (*a + *b) * 0.5).collect();
        if let Some(u) = updates.as_deref_mut() {
            u.clear();
        }
        for c in &self.nc {
            let (i, j) = (c.i, c.j);
            let err = || slot_err(self.chain, i, j);
            let qt1 = align_sign(c.qt_n, reconstruct_q_tilde(q1, i, j).map_err(|_| err())?);
            let pt_mid = p_tilde_midpoint_with(&self.sys, self.q_n, q1, &p_mid, i, j, c.qt_n, qt1).map_err(|_| err())?;
            let pt1 = endpoint_p_tilde(pt_mid, c.pt_n);
            let g = g_kernel(m, self.sys.mass(i), self.sys.mass(j), c.qt_n, qt1, c.pt_n, pt1, dt).ok_or_else(err)?;
            row[j] += g;
            row[i] -= g;
            if let Some(u) = updates.as_deref_mut() {
                u.push(NonChainedUpdate { i, j, qt: qt1, pt: pt1 });
            }
        }
        g_out.copy_from_slice(&row[1..]);
        Ok(())
    }

    /// Scale of `P_k` per unit of the Newton unknown `Z_k`, chosen so that
    /// `Z_k` is about the size of the step's change in `Q_k`.
    fn momentum_scale(&self, k: usize) -> f64 {
        momentum_scale(self.sys.total_mass(), self.sys.mass(k), self.sys.mass(k + 1), self.q_n[k], self.dt)
    }

    /// Weight of G-row `j` (slot `j + 1`) in the scaled residual.
    fn row_weight(&self, j: usize) -> f64 {
        let m = self.sys.total_mass();
        let mj = self.sys.mass(j + 1);
        m / (mj * (m - mj))
    }

    fn pack(&self, q: &[Vec2], p: &[Vec2]) -> Vec<f64> {
        let n1 = q.len();
        let mut y = Vec::with_capacity(4 * n1);
        for v in q {
            y.extend([v.x1, v.x2]);
        }
        for (k, v) in p.iter().enumerate() {
            let s = self.momentum_scale(k);
            y.extend([v.x1 / s, v.x2 / s]);
        }
        y
    }

    fn unpack(&self, y: &[f64], q: &mut [Vec2], p: &mut [Vec2]) {
        let n1 = q.len();
        for k in 0..n1 {
            q[k] = Vec2::new(y[2 * k], y[2 * k + 1]);
            let s = self.momentum_scale(k);
            p[k] = Vec2::new(y[2 * (n1 + k)] * s, y[2 * (n1 + k) + 1] * s);
        }
    }

    /// Newton solve in scaled unknowns `(Q, Z)`.
    /// Rows are multiplied by `dt`, so the tolerance bounds per-step increments.
    fn solve(&self, q_guess: &[Vec2], p_guess: &[Vec2], cfg: &NewtonConfig) -> Result<(Vec<Vec2>, Vec<Vec2>, usize)> {
        let n1 = self.sys.n() - 1;
        let mut q = vec![Vec2::ZERO; n1];
        let mut p = vec![Vec2::ZERO; n1];
        let mut fo = vec![Vec2::ZERO; n1];
        let mut go = vec![Vec2::ZERO; n1];
        let dt = self.dt;
        let weights: Vec<f64> = (0..n1).map(|j| self.row_weight(j) * dt).collect();
        let residual = |y: &[f64], r: &mut [f64]| -> Result<()> {
            self.unpack(y, &mut q, &mut p);
            self.evaluate(&q, &p, &mut fo, &mut go, None)?;
            for k in 0..n1 {
                r[2 * k] = fo[k].x1 * dt;
                r[2 * k + 1] = fo[k].x2 * dt;
                r[2 * (n1 + k)] = go[k].x1 * weights[k];
                r[2 * (n1 + k) + 1] = go[k].x2 * weights[k];
            }
            Ok(())
        };
        let out = newton::solve(residual, self.pack(q_guess, p_guess), cfg)?;
        let mut q = vec![Vec2::ZERO; n1];
        let mut p = vec![Vec2::ZERO; n1];
        self.unpack(&out.x, &mut q, &mut p);
        Ok((q, p, out.iterations))
    }
}

fn slot_err(chain: &Chain, i: usize, j: usize) -> Error {
    let (a, b) = (chain.order()[i], chain.order()[j]);
    Error::SingularSeparation { i: a.min(b), j: a.max(b) }
}

/// Unscaled residual of the step `state → (q_np1, p_np1)`.
pub fn assemble_residual(sys: &MassSystem, state: &ChainLCState, q_np1: &[Vec2], p_np1: &[Vec2], dt: f64) -> Result<ResidualVector> {
    let n1 = sys.n() - 1;
    if q_np1.len() != n1 || p_np1.len() != n1 {
        return Err(Error::DimensionMismatch { expected: n1, got: q_np1.len() });
    }
    let ctx = StepContext::new(sys, state, dt)?;
    let mut fo = vec![Vec2::ZERO; n1];
    let mut go = vec![Vec2::ZERO; n1];
    ctx.evaluate(q_np1, p_np1, &mut fo, &mut go, None)?;
    let values = fo.iter().chain(go.iter()).flat_map(|v| [v.x1, v.x2]).collect();
    Ok(ResidualVector { values })
}

/// Time derivatives of the chained regularized vectors from the barycentric
/// equations of motion.
fn chain_rates(sys: &MassSystem, chain: &Chain, q: &[Vec2], p: &[Vec2]) -> Result<(Vec<Vec2>, Vec<Vec2>)> {
    let s = barycentric_from_chain_only(sys, chain, 0.0, q, p)?;
    let f = forces(sys, &s.q)?;
    let m = sys.total_mass();
    let n1 = q.len();
    let mut dq = Vec::with_capacity(n1);
    let mut dp = Vec::with_capacity(n1);
    for k in 0..n1 {
        let (a, b) = chain.pair(k);
        let (ma, mb) = (sys.mass(a), sys.mass(b));
        let qdot = s.p[a] / ma - s.p[b] / mb;
        let pdot = (f[a] * mb - f[b] * ma) / m;
        let pk = lc_momentum_compose(p[k], q[k]).map_err(|_| slot_err(chain, k, k + 1))?;
        let qc = q[k].conj();
        let dqk = qdot.cmul(qc) / (2.0 * q[k].norm2());
        dq.push(dqk);
        dp.push(pdot.cmul(qc) * 2.0 + pk.cmul(dqk.conj()) * 2.0);
    }
    Ok((dq, dp))
}

/// One explicit Heun step of the continuous chain equations; the starting
/// value for Newton.
pub fn heun_predictor(sys: &MassSystem, chain: &Chain, q_n: &[Vec2], p_n: &[Vec2], dt: f64) -> Result<(Vec<Vec2>, Vec<Vec2>)> {
    if dt == 0.0 {
        return Ok((q_n.to_vec(), p_n.to_vec()));
    }
    let (dq1, dp1) = chain_rates(sys, chain, q_n, p_n)?;
    let q1: Vec<Vec2> = q_n.iter().zip(&dq1).map(|(q, d)| *q + *d * dt).collect();
    let p1: Vec<Vec2> = p_n.iter().zip(&dp1).map(|(p, d)| *p + *d * dt).collect();
    let (dq2, dp2) = chain_rates(sys, chain, &q1, &p1)?;
    let q = (0..q_n.len()).map(|k| q_n[k] + (dq1[k] + dq2[k]) * (0.5 * dt)).collect();
    let p = (0..p_n.len()).map(|k| p_n[k] + (dp1[k] + dp2[k]) * (0.5 * dt)).collect();
    Ok((q, p))
}

/// Solves one step from `state` over `dt`, returning the chained vectors at
/// the new node and the Newton iteration count.
pub fn newton_solve(sys: &MassSystem, state: &ChainLCState, cfg: &StepConfig, dt: f64) -> Result<(Vec<Vec2>, Vec<Vec2>, usize)> {
    let ctx = StepContext::new(sys, state, dt)?;
    let (qg, pg) = heun_predictor(sys, &state.chain, &state.q, &state.p, dt)?;
    ctx.solve(&qg, &pg, &cfg.newton())
}

/// Newton solve from a caller-supplied starting value.
pub fn newton_solve_from(
    sys: &MassSystem,
    state: &ChainLCState,
    q_guess: &[Vec2],
    p_guess: &[Vec2],
    cfg: &StepConfig,
    dt: f64,
) -> Result<(Vec<Vec2>, Vec<Vec2>, usize)> {
    let ctx = StepContext::new(sys, state, dt)?;
    ctx.solve(q_guess, p_guess, &cfg.newton())
}

/// Builds the new-node state from converged chained vectors, carrying the
/// non-chained relative momenta of the reconstruction.
pub(crate) fn finish_step(sys: &MassSystem, state: &ChainLCState, q1: Vec<Vec2>, p1: Vec<Vec2>, dt: f64) -> Result<ChainLCState> {
    let n = sys.n();
    let ctx = StepContext::new(sys, state, dt)?;
    let mut fo = vec![Vec2::ZERO; n - 1];
    let mut go = vec![Vec2::ZERO; n - 1];
    let mut updates = Vec::new();
    ctx.evaluate(&q1, &p1, &mut fo, &mut go, Some(&mut updates))?;
    let order = state.chain.order();
    let mut pair_p = state.pair_p.clone();
    for u in &updates {
        let (a, b) = (order[u.i], order[u.j]);
        let p = lc_momentum_compose(u.pt, u.qt).map_err(|_| slot_err(&state.chain, u.i, u.j))?;
        if a < b {
            pair_p[pair_index(n, a, b)] = p;
        } else {
            pair_p[pair_index(n, b, a)] = -p;
        }
    }
    let mut next = ChainLCState { t: state.t + dt, chain: state.chain.clone(), q: q1, p: p1, pair_p };
    next.sync_chained_pair_momenta()?;
    Ok(next)
}

/// One step of size `dt` (which may differ from `cfg.dt`, e.g. a final
/// truncated step).
pub fn step_with_dt(sys: &MassSystem, state: &ChainLCState, cfg: &StepConfig, dt: f64) -> Result<(ChainLCState, usize)> {
    let (q1, p1, it) = newton_solve(sys, state, cfg, dt)?;
    Ok((finish_step(sys, state, q1, p1, dt)?, it))
}

pub fn step(sys: &MassSystem, state: &ChainLCState, cfg: &StepConfig) -> Result<(ChainLCState, usize)> {
    step_with_dt(sys, state, cfg, cfg.dt)
}

/// Step followed by the re-chaining check. Returns the new state (possibly on
/// a new chain) and the iteration count.
pub fn step_and_rechain(sys: &MassSystem, state: &ChainLCState, cfg: &StepConfig, dt: f64) -> Result<(ChainLCState, usize)> {
    let (next, it) = step_with_dt(sys, state, cfg, dt)?;
    let s = barycentric_from_chain(sys, &next)?;
    let decision = should_rechain(sys, &s, &next.chain);
    match decision.new_chain {
        Some(c) if !decision.keep => Ok((rechain_state(sys, &next, &c)?, it)),
        _ => Ok((next, it)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn f_vanishes_at_rest() {
        let sys = MassSystem::new(vec![1.0, 2.0]).unwrap();
        let q = [Vec2::new(0.4, 0.9)];
        let z = [Vec2::ZERO];
        assert_eq!(residual_f_chained(&sys, &q, &q, &z, &z, 0, 0.1).unwrap(), Vec2::ZERO);
    }

    #[test]
    fn g_vanishes_on_its_algebraic_zero() {
        // (m/(8 m_i m_j)) 2|P|² = 2 m_i m_j with P^{n+1} = P^n
        let sys = MassSystem::new(vec![1.0, 1.0]).unwrap();
        let p = Vec2::new(0.6, 0.8) * 2.0;
        assert!((sys.total_mass() / 8.0 * 2.0 * p.norm2() - 2.0).abs() < 1e-15);
        let g = residual_g_pair(&sys, 0, 1, Vec2::new(1.0, 0.2), Vec2::new(0.9, 0.4), p, p, 0.1).unwrap();
        assert!(g.max_abs() < 1e-15, "{g:?}");
    }

    #[test]
    fn config_validation() {
        assert!(StepConfig::new(0.1).validate().is_ok());
        assert!(StepConfig::new(0.0).validate().is_err());
        assert!(StepConfig { newton_max_iter: 0, ..StepConfig::new(0.1) }.validate().is_err());
        assert!(StepConfig { newton_tol: -1.0, ..StepConfig::new(0.1) }.validate().is_err());
    }
}
