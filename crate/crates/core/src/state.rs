//! Problem definition, coordinate frames and conserved quantities.
//!
//! Body indices are 0-based throughout the library. Output layers (CSV, CLI,
//! chain labels) print them 1-based.

use crate::chain::Chain;
use crate::error::{Error, Result};
use crate::levi_civita::{lc_compose, lc_decompose_p, lc_decompose_q, lc_momentum_compose};
use crate::vec2::Vec2;
use serde::{Deserialize, Serialize};

/// Tolerance for the center-of-mass and linear-momentum checks on construction.
pub const TOL_C: f64 = 1e-10;

/// Number of unordered pairs among `n` bodies.
#[inline]
pub fn pair_count(n: usize) -> usize {
    n * (n - 1) / 2
}

/// Flat index of the pair `(i, j)`, `i < j < n`, in row-major order
/// `(0,1), (0,2), .., (0,n-1), (1,2), ..`.
#[inline]
pub fn pair_index(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j && j < n);
    i * (2 * n - i - 1) / 2 + (j - i - 1)
}

/// All pairs `(i, j)` with `i < j < n`, in [`pair_index`] order.
pub fn pairs(n: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..n).flat_map(move |i| (i + 1..n).map(move |j| (i, j)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MassSystem {
    masses: Vec<f64>,
    total: f64,
}

impl MassSystem {
    pub fn new(masses: Vec<f64>) -> Result<Self> {
        if masses.len() < 2 {
            return Err(Error::InvalidMass(format!(
                "need at least 2 bodies, got {}",
                masses.len()
            )));
        }
        if let Some(m) = masses.iter().find(|m| !(m.is_finite() && **m > 0.0)) {
            return Err(Error::InvalidMass(format!(
                "masses must be finite and positive, got {m}"
            )));
        }
        let total = masses.iter().fold(0.0, |a, m| a + m);
        Ok(MassSystem { masses, total })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.masses.len()
    }

    #[inline]
    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    #[inline]
    pub fn mass(&self, i: usize) -> f64 {
        self.masses[i]
    }

    #[inline]
    pub fn total_mass(&self) -> f64 {
        self.total
    }

    /// Masses listed in chain-slot order. The total is kept from `self` so
    /// that it is bitwise identical across chains.
    pub fn reordered(&self, chain: &Chain) -> MassSystem {
        MassSystem {
            masses: chain.order().iter().map(|&b| self.masses[b]).collect(),
            total: self.total,
        }
    }

    pub(crate) fn check_index(&self, i: usize) -> Result<()> {
        if i >= self.n() {
            Err(Error::IndexOutOfRange {
                index: i,
                n: self.n(),
            })
        } else {
            Ok(())
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BarycentricState {
    pub t: f64,
    pub q: Vec<Vec2>,
    pub p: Vec<Vec2>,
}

impl BarycentricState {
    /// Builds a state and checks `Σ m_i q_i = 0` and `Σ p_i = 0` to [`TOL_C`].
    pub fn new(sys: &MassSystem, t: f64, q: Vec<Vec2>, p: Vec<Vec2>) -> Result<Self> {
        let s = BarycentricState { t, q, p };
        s.validate(sys)?;
        Ok(s)
    }

    pub fn validate(&self, sys: &MassSystem) -> Result<()> {
        let n = sys.n();
        for len in [self.q.len(), self.p.len()] {
            if len != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: len,
                });
            }
        }
        if !self.t.is_finite() {
            return Err(Error::NonFinite("time"));
        }
        if !self.q.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("positions"));
        }
        if !self.p.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("momenta"));
        }
        let c = center_of_mass_moment(sys, self).max_abs();
        if c > TOL_C {
            return Err(Error::ConstraintViolation {
                what: "center of mass",
                value: c,
                tol: TOL_C,
            });
        }
        let l = linear_momentum(self).max_abs();
        if l > TOL_C {
            return Err(Error::ConstraintViolation {
                what: "linear momentum",
                value: l,
                tol: TOL_C,
            });
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.q.len()
    }
}

/// Relative position and momentum of the pair `(i, j)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelativePairState {
    pub i: usize,
    pub j: usize,
    pub q: Vec2,
    pub p: Vec2,
}

/// `q_ab = q_a − q_b` and `p_ab = (m_b p_a − m_a p_b)/m` for any two distinct bodies.
#[inline]
pub(crate) fn relative_vectors(sys: &MassSystem, s: &BarycentricState, a: usize, b: usize) -> (Vec2, Vec2) {
    let (ma, mb) = (sys.mass(a), sys.mass(b));
    let q = s.q[a] - s.q[b];
    let p = (s.p[a] * mb - s.p[b] * ma) / sys.total_mass();
    (q, p)
}

pub fn relative_from_barycentric(
    sys: &MassSystem,
    s: &BarycentricState,
    i: usize,
    j: usize,
) -> Result<RelativePairState> {
    sys.check_index(i)?;
    sys.check_index(j)?;
    if i >= j {
        return Err(Error::InvalidPair { i, j });
    }
    let (q, p) = relative_vectors(sys, s, i, j);
    Ok(RelativePairState { i, j, q, p })
}

/// Relative vectors `(q_ij, p_ij)` for all pairs in [`pair_index`] order.
pub fn all_relative_pairs(sys: &MassSystem, s: &BarycentricState) -> (Vec<Vec2>, Vec<Vec2>) {
    pairs(sys.n()).map(|(i, j)| relative_vectors(sys, s, i, j)).unzip()
}

/// Barycentric state from a redundant table of relative vectors:
/// `q'_i = Σ_j (m_j/m) q_ij`, `p'_i = Σ_j p_ij` with `x_ji = −x_ij`.
pub fn barycentric_from_relative_pairs(
    sys: &MassSystem,
    t: f64,
    q_pairs: &[Vec2],
    p_pairs: &[Vec2],
) -> BarycentricState {
    let n = sys.n();
    let m = sys.total_mass();
    let mut q = vec![Vec2::ZERO; n];
    let mut p = vec![Vec2::ZERO; n];
    for (k, (i, j)) in pairs(n).enumerate() {
        q[i] += q_pairs[k] * (sys.mass(j) / m);
        q[j] -= q_pairs[k] * (sys.mass(i) / m);
        p[i] += p_pairs[k];
        p[j] -= p_pairs[k];
    }
    BarycentricState { t, q, p }
}

#[inline]
pub fn linear_momentum(s: &BarycentricState) -> Vec2 {
    s.p.iter().copied().sum()
}

#[inline]
pub fn center_of_mass_moment(sys: &MassSystem, s: &BarycentricState) -> Vec2 {
    s.q.iter().zip(sys.masses()).map(|(q, m)| *q * *m).sum()
}

/// `j = Σ q_i × p_i` (z-component).
#[inline]
pub fn angular_momentum(s: &BarycentricState) -> f64 {
    s.q.iter().zip(&s.p).map(|(q, p)| q.cross(*p)).sum()
}

pub fn hamiltonian(sys: &MassSystem, s: &BarycentricState) -> Result<f64> {
    let n = sys.n();
    let kinetic: f64 = (0..n).map(|i| 0.5 * s.p[i].norm2() / sys.mass(i)).sum();
    let mut potential = 0.0;
    for (i, j) in pairs(n) {
        let r = (s.q[i] - s.q[j]).norm();
        if r == 0.0 {
            return Err(Error::SingularSeparation { i, j });
        }
        potential += sys.mass(i) * sys.mass(j) / r;
    }
    Ok(kinetic - potential)
}

/// Gravitational forces `ṗ'_i = −Σ_j m_i m_j q_ij / |q_ij|³`.
pub fn forces(sys: &MassSystem, q: &[Vec2]) -> Result<Vec<Vec2>> {
    let n = sys.n();
    let mut f = vec![Vec2::ZERO; n];
    for (i, j) in pairs(n) {
        let d = q[i] - q[j];
        let r2 = d.norm2();
        if r2 == 0.0 {
            return Err(Error::SingularSeparation { i, j });
        }
        let g = d * (sys.mass(i) * sys.mass(j) / (r2 * r2.sqrt()));
        f[i] -= g;
        f[j] += g;
    }
    Ok(f)
}

/// Energy in relative coordinates over all pairs:
/// `Σ_{i<j} ( m|p_ij|²/(2 m_i m_j) − m_i m_j/|q_ij| )`.
pub fn h_rel(sys: &MassSystem, q_pairs: &[Vec2], p_pairs: &[Vec2]) -> Result<f64> {
    let m = sys.total_mass();
    let mut h = 0.0;
    for (k, (i, j)) in pairs(sys.n()).enumerate() {
        let r = q_pairs[k].norm();
        if r == 0.0 {
            return Err(Error::SingularSeparation { i, j });
        }
        let mij = sys.mass(i) * sys.mass(j);
        h += m * p_pairs[k].norm2() / (2.0 * mij) - mij / r;
    }
    Ok(h)
}

/// Energy over all-pairs regularized vectors. `q`, `p` are indexed by
/// [`pair_index`] in the labelling of `sys`.
pub fn h_lc(sys: &MassSystem, q: &[Vec2], p: &[Vec2]) -> Result<f64> {
    let m = sys.total_mass();
    let mut h = 0.0;
    for (k, (i, j)) in pairs(sys.n()).enumerate() {
        let r2 = q[k].norm2();
        if r2 == 0.0 {
            return Err(Error::SingularSeparation { i, j });
        }
        let mij = sys.mass(i) * sys.mass(j);
        h += m * p[k].norm2() / (8.0 * mij * r2) - mij / r2;
    }
    Ok(h)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConservedQuantities {
    pub h: f64,
    pub j: f64,
    pub l: Vec2,
    pub c: Vec2,
}

pub fn conserved_quantities(sys: &MassSystem, s: &BarycentricState) -> Result<ConservedQuantities> {
    Ok(ConservedQuantities {
        h: hamiltonian(sys, s)?,
        j: angular_momentum(s),
        l: linear_momentum(s),
        c: center_of_mass_moment(sys, s),
    })
}

/// Integrator working state: regularized vectors over the chained pairs, plus
/// the physical relative momenta of every body pair.
///
/// The momentum table `pair_p` is indexed by [`pair_index`] over body labels.
/// Its chained entries mirror `p`; its non-chained entries are state in their
/// own right, since the discrete scheme does not re-impose the momentum
/// constraints at the new node.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainLCState {
    pub t: f64,
    pub chain: Chain,
    pub q: Vec<Vec2>,
    pub p: Vec<Vec2>,
    pub pair_p: Vec<Vec2>,
}

impl ChainLCState {
    /// Relative momentum `p_ab` for bodies `a != b` from the pair table.
    #[inline]
    pub fn pair_momentum(&self, a: usize, b: usize) -> Vec2 {
        let n = self.chain.len();
        if a < b {
            self.pair_p[pair_index(n, a, b)]
        } else {
            -self.pair_p[pair_index(n, b, a)]
        }
    }

    /// Rewrites the chained entries of the pair table from `(q, p)`.
    pub(crate) fn sync_chained_pair_momenta(&mut self) -> Result<()> {
        let n = self.chain.len();
        for k in 0..n - 1 {
            let (a, b) = self.chain.pair(k);
            let pk = lc_momentum_compose(self.p[k], self.q[k]).map_err(|_| singular(a, b))?;
            if a < b {
                self.pair_p[pair_index(n, a, b)] = pk;
            } else {
                self.pair_p[pair_index(n, b, a)] = -pk;
            }
        }
        Ok(())
    }

    /// Relative positions of all body pairs, summed along the chain.
    pub fn pair_positions(&self) -> Vec<Vec2> {
        let n = self.chain.len();
        let order = self.chain.order();
        let segs: Vec<Vec2> = self.q.iter().map(|q| lc_compose(*q)).collect();
        let mut out = vec![Vec2::ZERO; pair_count(n)];
        for si in 0..n {
            let mut v = Vec2::ZERO;
            for sj in si + 1..n {
                v += segs[sj - 1];
                let (a, b) = (order[si], order[sj]);
                if a < b {
                    out[pair_index(n, a, b)] = v;
                } else {
                    out[pair_index(n, b, a)] = -v;
                }
            }
        }
        out
    }

    /// Energy of the redundant all-pairs state; the quantity the discrete
    /// scheme conserves exactly.
    pub fn energy(&self, sys: &MassSystem) -> Result<f64> {
        h_rel(sys, &self.pair_positions(), &self.pair_p)
    }
}

#[inline]
pub(crate) fn singular(a: usize, b: usize) -> Error {
    Error::SingularSeparation {
        i: a.min(b),
        j: a.max(b),
    }
}

/// Regularized chain state for `s` along `chain` (Eqs. for the cancellation-safe
/// inverse transform applied to each chained pair).
pub fn chain_from_barycentric(
    sys: &MassSystem,
    s: &BarycentricState,
    chain: &Chain,
) -> Result<ChainLCState> {
    let n = sys.n();
    if chain.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: chain.len(),
        });
    }
    let mut q = Vec::with_capacity(n - 1);
    let mut p = Vec::with_capacity(n - 1);
    for k in 0..n - 1 {
        let (a, b) = chain.pair(k);
        let (qr, pr) = relative_vectors(sys, s, a, b);
        q.push(lc_decompose_q(qr).map_err(|_| singular(a, b))?);
        p.push(lc_decompose_p(qr, pr).map_err(|_| singular(a, b))?);
    }
    let (_, pair_p) = all_relative_pairs(sys, s);
    Ok(ChainLCState {
        t: s.t,
        chain: chain.clone(),
        q,
        p,
        pair_p,
    })
}

/// Barycentric state for a chain state. Positions come from prefix sums along
/// the chain, shifted so that `Σ m_i q_i = 0`; momenta are `p'_i = Σ_j p_ij`
/// over the full pair table.
pub fn barycentric_from_chain(sys: &MassSystem, c: &ChainLCState) -> Result<BarycentricState> {
    let n = sys.n();
    if c.q.len() != n - 1 || c.p.len() != n - 1 || c.pair_p.len() != pair_count(n) {
        return Err(Error::DimensionMismatch {
            expected: n - 1,
            got: c.q.len(),
        });
    }
    for k in 0..n - 1 {
        if c.q[k].norm2() == 0.0 {
            let (a, b) = c.chain.pair(k);
            return Err(singular(a, b));
        }
    }
    let order = c.chain.order();
    let m = sys.total_mass();
    let mut q = vec![Vec2::ZERO; n];
    let mut x = Vec2::ZERO;
    for k in 0..n - 1 {
        x -= lc_compose(c.q[k]);
        q[order[k + 1]] = x;
    }
    let shift = center_of_mass_moment(sys, &BarycentricState { t: c.t, q: q.clone(), p: vec![] }) / m;
    for v in &mut q {
        *v -= shift;
    }
    let mut p = vec![Vec2::ZERO; n];
    for (k, (i, j)) in pairs(n).enumerate() {
        p[i] += c.pair_p[k];
        p[j] -= c.pair_p[k];
    }
    Ok(BarycentricState { t: c.t, q, p })
}

/// Barycentric state recovered from the chained pairs only, ignoring the
/// non-chained part of the pair table.
pub(crate) fn barycentric_from_chain_only(sys: &MassSystem, chain: &Chain, t: f64, qc: &[Vec2], pc: &[Vec2]) -> Result<BarycentricState> {
    let n = sys.n();
    let order = chain.order();
    let m = sys.total_mass();
    let mut q = vec![Vec2::ZERO; n];
    let mut v = vec![Vec2::ZERO; n];
    let (mut x, mut u) = (Vec2::ZERO, Vec2::ZERO);
    for k in 0..n - 1 {
        let (a, b) = chain.pair(k);
        let pk = lc_momentum_compose(pc[k], qc[k]).map_err(|_| singular(a, b))?;
        x -= lc_compose(qc[k]);
        u -= pk * (m / (sys.mass(a) * sys.mass(b)));
        q[order[k + 1]] = x;
        v[order[k + 1]] = u;
    }
    let qs: Vec2 = q.iter().zip(sys.masses()).map(|(q, mi)| *q * *mi).sum::<Vec2>() / m;
    let vs: Vec2 = v.iter().zip(sys.masses()).map(|(v, mi)| *v * *mi).sum::<Vec2>() / m;
    let q = q.into_iter().map(|x| x - qs).collect();
    let p = v.into_iter().zip(sys.masses()).map(|(v, mi)| (v - vs) * *mi).collect();
    Ok(BarycentricState { t, q, p })
}
