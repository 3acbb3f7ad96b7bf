//! Levi-Civita transform kernels and reconstruction of non-chained
//! regularized vectors from the chain basis.
//!
//! Functions taking chain lists index them by chain slot, and the accompanying
//! [`MassSystem`] must be in slot order (see [`MassSystem::reordered`]).

use crate::error::{Error, Result};
use crate::state::{pair_count, pair_index, pairs, MassSystem};
use crate::vec2::{CompensatedSum, Vec2};

/// `Q L(Q)ᵀ = (Q₁² − Q₂², 2 Q₁ Q₂)`.
#[inline]
pub fn lc_compose(q: Vec2) -> Vec2 {
    Vec2::new(q.x1 * q.x1 - q.x2 * q.x2, 2.0 * q.x1 * q.x2)
}

/// `P L(Q)ᵀ / (2|Q|²)`.
#[inline]
pub fn lc_momentum_compose(p: Vec2, q: Vec2) -> Result<Vec2> {
    let r2 = q.norm2();
    if r2 == 0.0 {
        return Err(Error::SingularSeparation { i: 0, j: 1 });
    }
    Ok(p.cmul(q) / (2.0 * r2))
}

/// Cancellation-safe square root of a physical vector, branching on the sign
/// of its first component.
pub fn lc_decompose_q(q: Vec2) -> Result<Vec2> {
    let r = q.norm();
    if r == 0.0 {
        return Err(Error::SingularSeparation { i: 0, j: 1 });
    }
    if q.x1 < 0.0 {
        let s = (-2.0 * q.x1 + 2.0 * r).sqrt();
        Ok(Vec2::new(q.x2 / s, 0.5 * s))
    } else {
        let s = (2.0 * q.x1 + 2.0 * r).sqrt();
        Ok(Vec2::new(0.5 * s, q.x2 / s))
    }
}

/// Regularized momentum for `(q, p)`, on the same branch as [`lc_decompose_q`].
pub fn lc_decompose_p(q: Vec2, p: Vec2) -> Result<Vec2> {
    let r = q.norm();
    if r == 0.0 {
        return Err(Error::SingularSeparation { i: 0, j: 1 });
    }
    if q.x1 < 0.0 {
        let s = (-2.0 * q.x1 + 2.0 * r).sqrt();
        Ok(Vec2::new(
            2.0 * (p.x1 * q.x2 - p.x2 * q.x1 + p.x2 * r) / s,
            2.0 * (p.x1 * q.x1 + p.x2 * q.x2 - p.x1 * r) / s,
        ))
    } else {
        let s = (2.0 * q.x1 + 2.0 * r).sqrt();
        Ok(Vec2::new(
            2.0 * (p.x1 * q.x1 + p.x2 * q.x2 + p.x1 * r) / s,
            -2.0 * (p.x1 * q.x2 - p.x2 * q.x1 - p.x2 * r) / s,
        ))
    }
}

/// Flips `v` onto the same sheet of the double cover as `reference`.
#[inline]
pub fn align_sign(reference: Vec2, v: Vec2) -> Vec2 {
    if reference.dot(v) < 0.0 {
        -v
    } else {
        v
    }
}

/// `Q̃_ij` with `lc_compose(Q̃_ij) = Σ_{k=i}^{j-1} lc_compose(Q_k)`, using the
/// two-branch form on the sign of `b_ij`.
pub fn reconstruct_q_tilde(chain_q: &[Vec2], i: usize, j: usize) -> Result<Vec2> {
    if i >= j || j > chain_q.len() {
        return Err(Error::InvalidPair { i, j });
    }
    let mut b = CompensatedSum::default();
    let mut c = CompensatedSum::default();
    for q in &chain_q[i..j] {
        b.add(q.x1 * q.x1);
        b.add(-q.x2 * q.x2);
        c.add(q.x1 * q.x2);
    }
    let (b, c) = (b.value(), c.value());
    let a = b.hypot(2.0 * c);
    if a == 0.0 {
        return Err(Error::SingularSeparation { i, j });
    }
    let sqrt2 = std::f64::consts::SQRT_2;
    if b < 0.0 {
        let s = a - b;
        Ok(Vec2::new(sqrt2 * c / s.sqrt(), (0.5 * s).sqrt()))
    } else {
        let s = a + b;
        Ok(Vec2::new((0.5 * s).sqrt(), sqrt2 * c / s.sqrt()))
    }
}

/// `Σ_k P_k L(Q_k)ᵀ / (m_k m_{k+1} |Q_k|²)` over slots `i..j`.
fn weighted_momentum_sum(sys: &MassSystem, chain_q: &[Vec2], chain_p: &[Vec2], i: usize, j: usize) -> Result<Vec2> {
    let mut u = Vec2::ZERO;
    for k in i..j {
        let r2 = chain_q[k].norm2();
        if r2 == 0.0 {
            return Err(Error::SingularSeparation { i: k, j: k + 1 });
        }
        u += chain_p[k].cmul(chain_q[k]) / (sys.mass(k) * sys.mass(k + 1) * r2);
    }
    Ok(u)
}

/// `P̃_ij` at one instant, for a given `Q̃_ij`.
pub(crate) fn p_tilde_instant_with(
    sys: &MassSystem,
    chain_q: &[Vec2],
    chain_p: &[Vec2],
    i: usize,
    j: usize,
    qt: Vec2,
) -> Result<Vec2> {
    let u = weighted_momentum_sum(sys, chain_q, chain_p, i, j)?;
    Ok(qt.conj().cmul(u) * (sys.mass(i) * sys.mass(j)))
}

/// `P̃_ij` from the chain state at one instant, for slots `i < j`.
pub fn reconstruct_p_tilde_instant(
    sys: &MassSystem,
    chain_q: &[Vec2],
    chain_p: &[Vec2],
    i: usize,
    j: usize,
) -> Result<Vec2> {
    let qt = reconstruct_q_tilde(chain_q, i, j)?;
    p_tilde_instant_with(sys, chain_q, chain_p, i, j, qt)
}

/// Midpoint `P̃_ij^(n+1/2)` for given node values `Q̃^n`, `Q̃^(n+1)` (same sheet).
#[allow(clippy::too_many_arguments)]
pub(crate) fn p_tilde_midpoint_with(
    sys: &MassSystem,
    q_n: &[Vec2],
    q_np1: &[Vec2],
    p_mid: &[Vec2],
    i: usize,
    j: usize,
    qt_n: Vec2,
    qt_np1: Vec2,
) -> Result<Vec2> {
    let mut t = Vec2::ZERO;
    for k in i..j {
        let (ra, rb) = (q_n[k].norm2(), q_np1[k].norm2());
        if ra == 0.0 || rb == 0.0 {
            return Err(Error::SingularSeparation { i: k, j: k + 1 });
        }
        let qm = (q_n[k] + q_np1[k]) * 0.5;
        let w = (ra + rb) / (sys.mass(k) * sys.mass(k + 1) * ra * rb);
        t += p_mid[k].cmul(qm) * w;
    }
    let qtm = (qt_n + qt_np1) * 0.5;
    let (ra, rb, rm) = (qt_n.norm2(), qt_np1.norm2(), qtm.norm2());
    if rm == 0.0 {
        return Err(Error::SingularSeparation { i, j });
    }
    let f = sys.mass(i) * sys.mass(j) * ra * rb / (rm * (ra + rb));
    Ok(qtm.conj().cmul(t) * f)
}

/// Midpoint `P̃_ij^(n+1/2)` from chain values at both nodes and the midpoint
/// chain momenta. `Q̃^(n+1)` is taken on the sheet of `Q̃^n`.
pub fn reconstruct_p_tilde_midpoint(
    sys: &MassSystem,
    q_n: &[Vec2],
    q_np1: &[Vec2],
    p_mid: &[Vec2],
    i: usize,
    j: usize,
) -> Result<Vec2> {
    let qt_n = reconstruct_q_tilde(q_n, i, j)?;
    let qt_np1 = align_sign(qt_n, reconstruct_q_tilde(q_np1, i, j)?);
    p_tilde_midpoint_with(sys, q_n, q_np1, p_mid, i, j, qt_n, qt_np1)
}

/// `2 P̃^(n+1/2) − P̃^(n)`.
#[inline]
pub fn endpoint_p_tilde(p_tilde_mid: Vec2, p_tilde_n: Vec2) -> Vec2 {
    p_tilde_mid * 2.0 - p_tilde_n
}

/// Regularized vectors for every pair, indexed by [`pair_index`].
#[derive(Debug, Clone, PartialEq)]
pub struct AllPairsLC {
    n: usize,
    pub q: Vec<Vec2>,
    pub p: Vec<Vec2>,
}

impl AllPairsLC {
    pub fn new(n: usize, q: Vec<Vec2>, p: Vec<Vec2>) -> Result<Self> {
        let len = pair_count(n);
        for v in [q.len(), p.len()] {
            if v != len {
                return Err(Error::DimensionMismatch { expected: len, got: v });
            }
        }
        Ok(AllPairsLC { n, q, p })
    }

    /// Chained entries copied, non-chained ones reconstructed at one instant.
    /// Pair labels are chain slots.
    pub fn from_chain(sys: &MassSystem, chain_q: &[Vec2], chain_p: &[Vec2]) -> Result<Self> {
        let n = sys.n();
        let mut q = vec![Vec2::ZERO; pair_count(n)];
        let mut p = vec![Vec2::ZERO; pair_count(n)];
        for (idx, (i, j)) in pairs(n).enumerate() {
            if j == i + 1 {
                q[idx] = chain_q[i];
                p[idx] = chain_p[i];
            } else {
                let qt = reconstruct_q_tilde(chain_q, i, j)?;
                q[idx] = qt;
                p[idx] = p_tilde_instant_with(sys, chain_q, chain_p, i, j, qt)?;
            }
        }
        Ok(AllPairsLC { n, q, p })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn q_of(&self, i: usize, j: usize) -> Vec2 {
        self.q[pair_index(self.n, i, j)]
    }

    #[inline]
    pub fn p_of(&self, i: usize, j: usize) -> Vec2 {
        self.p[pair_index(self.n, i, j)]
    }

    /// Position constraint `Φ_{0jk} = Q_0j² + Q_jk² − Q_0k²` for `0 < j < k`.
    pub fn phi(&self, j: usize, k: usize) -> Vec2 {
        lc_compose(self.q_of(0, j)) + lc_compose(self.q_of(j, k)) - lc_compose(self.q_of(0, k))
    }

    /// Momentum constraint `Ψ_{0jk}` for `0 < j < k`.
    pub fn psi(&self, sys: &MassSystem, j: usize, k: usize) -> Vec2 {
        let term = |a: usize, b: usize| {
            let (q, p) = (self.q_of(a, b), self.p_of(a, b));
            p.cmul(q) / (sys.mass(a) * sys.mass(b) * q.norm2())
        };
        term(0, j) + term(j, k) - term(0, k)
    }

    /// Largest component of any `Φ` or `Ψ` constraint.
    pub fn max_constraint_violation(&self, sys: &MassSystem) -> (f64, f64) {
        let (mut phi, mut psi) = (0.0f64, 0.0f64);
        for j in 1..self.n {
            for k in j + 1..self.n {
                phi = phi.max(self.phi(j, k).max_abs());
                psi = psi.max(self.psi(sys, j, k).max_abs());
            }
        }
        (phi, psi)
    }

    /// Relative vectors `(q_ij, p_ij)` for every pair.
    pub fn relative(&self) -> Result<(Vec<Vec2>, Vec<Vec2>)> {
        let mut qs = Vec::with_capacity(self.q.len());
        let mut ps = Vec::with_capacity(self.q.len());
        for (idx, (i, j)) in pairs(self.n).enumerate() {
            qs.push(lc_compose(self.q[idx]));
            ps.push(lc_momentum_compose(self.p[idx], self.q[idx]).map_err(|_| Error::SingularSeparation { i, j })?);
        }
        Ok((qs, ps))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: Vec2, b: Vec2, tol: f64) -> bool {
        (a - b).max_abs() <= tol
    }

    #[test]
    fn compose_examples() {
        assert_eq!(lc_compose(Vec2::new(1.0, 0.0)), Vec2::new(1.0, 0.0));
        assert_eq!(lc_compose(Vec2::new(0.0, 1.0)), Vec2::new(-1.0, 0.0));
        assert_eq!(lc_compose(Vec2::new(1.0, 1.0)), Vec2::new(0.0, 2.0));
    }

    #[test]
    fn momentum_compose_examples() {
        let q = Vec2::new(0.3, -0.8);
        assert_eq!(lc_momentum_compose(Vec2::ZERO, q).unwrap(), Vec2::ZERO);
        let p = lc_momentum_compose(Vec2::new(2.0 * 0.7, 2.0 * -1.1), Vec2::new(1.0, 0.0)).unwrap();
        assert_eq!(p, Vec2::new(0.7, -1.1));
        assert!(lc_momentum_compose(Vec2::new(1.0, 0.0), Vec2::ZERO).is_err());
    }

    #[test]
    fn decompose_branches() {
        assert_eq!(lc_decompose_q(Vec2::new(1.0, 0.0)).unwrap(), Vec2::new(1.0, 0.0));
        assert_eq!(lc_decompose_p(Vec2::new(1.0, 0.0), Vec2::ZERO).unwrap(), Vec2::ZERO);
        assert_eq!(lc_decompose_q(Vec2::new(-1.0, 0.0)).unwrap(), Vec2::new(0.0, 1.0));
        assert_eq!(lc_decompose_q(Vec2::new(0.0, 2.0)).unwrap(), Vec2::new(1.0, 1.0));
        assert!(lc_decompose_q(Vec2::ZERO).is_err());
    }

    #[test]
    fn decompose_p_is_twice_p_times_conjugate() {
        for (q, p) in [
            (Vec2::new(0.0, 2.0), Vec2::new(0.4, -1.3)),
            (Vec2::new(-3.0, 0.5), Vec2::new(-0.2, 0.9)),
            (Vec2::new(2.0, -7.0), Vec2::new(1.5, 0.1)),
        ] {
            let qq = lc_decompose_q(q).unwrap();
            let pp = lc_decompose_p(q, p).unwrap();
            assert!(close(pp, p.cmul(qq.conj()) * 2.0, 1e-14));
            assert!(close(lc_momentum_compose(pp, qq).unwrap(), p, 1e-15));
        }
    }

    #[test]
    fn q_tilde_examples() {
        let one = Vec2::new(1.0, 0.0);
        let qt = reconstruct_q_tilde(&[one, one], 0, 2).unwrap();
        assert_eq!(qt, Vec2::new(2f64.sqrt(), 0.0));
        let up = Vec2::new(0.0, 1.0);
        let qt = reconstruct_q_tilde(&[up, up], 0, 2).unwrap();
        assert_eq!(qt, Vec2::new(0.0, 2f64.sqrt()));
        assert!(reconstruct_q_tilde(&[one, up], 0, 2).is_err());
    }

    #[test]
    fn p_tilde_instant_collinear_equal_masses() {
        let sys = MassSystem::new(vec![1.0; 3]).unwrap();
        let one = Vec2::new(1.0, 0.0);
        let pt = reconstruct_p_tilde_instant(&sys, &[one, one], &[one, Vec2::ZERO], 0, 2).unwrap();
        assert!(close(pt, Vec2::new(2f64.sqrt(), 0.0), 1e-15));
        let pt = reconstruct_p_tilde_instant(&sys, &[one, one], &[Vec2::ZERO; 2], 0, 2).unwrap();
        assert_eq!(pt, Vec2::ZERO);
    }

    #[test]
    fn endpoint_identities() {
        let v = Vec2::new(0.3, -0.7);
        assert_eq!(endpoint_p_tilde(v, v), v);
        assert_eq!(endpoint_p_tilde(v, Vec2::ZERO), v * 2.0);
    }

    #[test]
    fn midpoint_degenerates_to_instant() {
        let sys = MassSystem::new(vec![0.3, 1.1, 0.7, 2.0]).unwrap();
        let q = [Vec2::new(0.9, 0.2), Vec2::new(-0.4, 1.1), Vec2::new(0.5, -0.6)];
        let p = [Vec2::new(0.1, -0.3), Vec2::new(0.8, 0.2), Vec2::new(-0.5, 0.4)];
        for (i, j) in [(0, 2), (1, 3), (0, 3)] {
            let a = reconstruct_p_tilde_instant(&sys, &q, &p, i, j).unwrap();
            let b = reconstruct_p_tilde_midpoint(&sys, &q, &q, &p, i, j).unwrap();
            assert!(close(a, b, 1e-14), "{a:?} {b:?}");
        }
        let z = reconstruct_p_tilde_midpoint(&sys, &q, &q, &[Vec2::ZERO; 3], 0, 3).unwrap();
        assert_eq!(z, Vec2::ZERO);
    }
}
