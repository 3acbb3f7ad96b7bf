//! Interparticle chain: construction, the re-chaining test and the exact
//! transfer of integrator state onto a new chain.

use crate::error::{Error, Result};
use crate::levi_civita::{lc_decompose_p, lc_decompose_q};
use crate::state::{pair_index, singular, BarycentricState, ChainLCState, MassSystem};
use crate::vec2::Vec2;
use std::fmt;

/// A permutation of body labels; `order()[k]` is the body at chain slot `k`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Chain {
    order: Vec<usize>,
}

impl Chain {
    pub fn new(order: Vec<usize>) -> Result<Self> {
        let n = order.len();
        if n < 2 {
            return Err(Error::InvalidChain(format!("need at least 2 bodies, got {n}")));
        }
        let mut seen = vec![false; n];
        for &b in &order {
            if b >= n || seen[b] {
                return Err(Error::InvalidChain(format!("{order:?} is not a permutation of 0..{n}")));
            }
            seen[b] = true;
        }
        Ok(Chain { order })
    }

    /// The chain `0, 1, .., n-1`.
    pub fn identity(n: usize) -> Self {
        Chain { order: (0..n).collect() }
    }

    #[inline]
    pub fn order(&self) -> &[usize] {
        &self.order
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.order.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    /// Bodies `(a, b)` joined by chained vector `k`, oriented `q_ab = q'_a − q'_b`.
    #[inline]
    pub fn pair(&self, k: usize) -> (usize, usize) {
        (self.order[k], self.order[k + 1])
    }

    /// Slot of every body: `slots()[body] = k`.
    pub fn slots(&self) -> Vec<usize> {
        let mut s = vec![0; self.order.len()];
        for (k, &b) in self.order.iter().enumerate() {
            s[b] = k;
        }
        s
    }

    /// Whether bodies `a` and `b` are neighbours in the chain.
    pub fn is_chained(&self, a: usize, b: usize) -> bool {
        self.order.windows(2).any(|w| (w[0] == a && w[1] == b) || (w[0] == b && w[1] == a))
    }

    /// Chain labels 1-based, hyphen-joined (`1-2-3-4`).
    pub fn label(&self) -> String {
        self.order.iter().map(|b| (b + 1).to_string()).collect::<Vec<_>>().join("-")
    }
}

impl fmt::Display for Chain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainDecision {
    pub keep: bool,
    pub new_chain: Option<Chain>,
}

/// Greedy chain: the shortest pair first, then repeatedly the body closest to
/// either end is attached to that end. Ties go to the lexicographically
/// smallest pair. Slot 0 holds the smaller of the two end labels.
pub fn build_chain(sys: &MassSystem, s: &BarycentricState) -> Chain {
    build_chain_from_positions(&s.q[..sys.n()])
}

pub(crate) fn build_chain_from_positions(q: &[Vec2]) -> Chain {
    let n = q.len();
    let d = |a: usize, b: usize| (q[a] - q[b]).norm();
    let mut best = (f64::INFINITY, 0, 1);
    for a in 0..n {
        for b in a + 1..n {
            let r = d(a, b);
            if r < best.0 {
                best = (r, a, b);
            }
        }
    }
    let mut order = std::collections::VecDeque::with_capacity(n);
    order.push_back(best.1);
    order.push_back(best.2);
    let mut used = vec![false; n];
    used[best.1] = true;
    used[best.2] = true;
    for _ in 2..n {
        let (front, back) = (*order.front().unwrap(), *order.back().unwrap());
        // (distance, lexicographic pair, attach at front)
        let mut pick: Option<(f64, (usize, usize), bool, usize)> = None;
        for r in (0..n).filter(|&r| !used[r]) {
            for (end, at_front) in [(front, true), (back, false)] {
                let cand = (d(r, end), (r.min(end), r.max(end)), at_front, r);
                let better = match &pick {
                    None => true,
                    Some(p) => cand.0 < p.0 || (cand.0 == p.0 && cand.1 < p.1),
                };
                if better {
                    pick = Some(cand);
                }
            }
        }
        let (_, _, at_front, r) = pick.unwrap();
        used[r] = true;
        if at_front {
            order.push_front(r);
        } else {
            order.push_back(r);
        }
    }
    let mut order: Vec<usize> = order.into();
    if order[0] > order[n - 1] {
        order.reverse();
    }
    Chain { order }
}

/// Whether some non-chained vector is shorter than the smallest chained vector
/// touching either of its ends.
pub(crate) fn rechain_triggered(q: &[Vec2], chain: &Chain) -> bool {
    let order = chain.order();
    let n = order.len();
    let link: Vec<f64> = (0..n - 1).map(|k| (q[order[k]] - q[order[k + 1]]).norm()).collect();
    let touching = |slot: usize| {
        let mut m = f64::INFINITY;
        if slot > 0 {
            m = m.min(link[slot - 1]);
        }
        if slot + 1 < n {
            m = m.min(link[slot]);
        }
        m
    };
    for i in 0..n {
        for j in i + 2..n {
            let r = (q[order[i]] - q[order[j]]).norm();
            if r < touching(i).min(touching(j)) {
                return true;
            }
        }
    }
    false
}

pub fn should_rechain(sys: &MassSystem, s: &BarycentricState, chain: &Chain) -> ChainDecision {
    if !rechain_triggered(&s.q, chain) {
        return ChainDecision { keep: true, new_chain: None };
    }
    let new_chain = build_chain(sys, s);
    if &new_chain == chain {
        ChainDecision { keep: true, new_chain: None }
    } else {
        ChainDecision { keep: false, new_chain: Some(new_chain) }
    }
}

/// Multiplication by the imaginary unit; maps the regularized vectors of
/// `(a, b)` to those of `(b, a)`.
#[inline]
fn rot90(v: Vec2) -> Vec2 {
    Vec2::new(-v.x2, v.x1)
}

/// Re-expresses `c` on `new_chain`. Pairs chained in both chains keep their
/// regularized vectors (rotated by a quarter turn when the orientation flips);
/// new chained pairs are transformed from the exact relative vectors.
pub fn rechain_state(sys: &MassSystem, c: &ChainLCState, new_chain: &Chain) -> Result<ChainLCState> {
    let n = sys.n();
    if new_chain.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: new_chain.len() });
    }
    let old_slots = c.chain.slots();
    let qpairs = c.pair_positions();
    let mut q = Vec::with_capacity(n - 1);
    let mut p = Vec::with_capacity(n - 1);
    for k in 0..n - 1 {
        let (a, b) = new_chain.pair(k);
        let (sa, sb) = (old_slots[a], old_slots[b]);
        if sb == sa + 1 {
            q.push(c.q[sa]);
            p.push(c.p[sa]);
        } else if sa == sb + 1 {
            q.push(rot90(c.q[sb]));
            p.push(rot90(c.p[sb]));
        } else {
            let qab = if a < b { qpairs[pair_index(n, a, b)] } else { -qpairs[pair_index(n, b, a)] };
            let pab = c.pair_momentum(a, b);
            q.push(lc_decompose_q(qab).map_err(|_| singular(a, b))?);
            p.push(lc_decompose_p(qab, pab).map_err(|_| singular(a, b))?);
        }
    }
    Ok(ChainLCState {
        t: c.t,
        chain: new_chain.clone(),
        q,
        p,
        pair_p: c.pair_p.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::levi_civita::lc_compose;

    fn line(xs: &[f64]) -> (MassSystem, BarycentricState) {
        let n = xs.len();
        let sys = MassSystem::new(vec![1.0; n]).unwrap();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let q = xs.iter().map(|x| Vec2::new(x - mean, 0.0)).collect();
        (sys.clone(), BarycentricState::new(&sys, 0.0, q, vec![Vec2::ZERO; n]).unwrap())
    }

    #[test]
    fn chain_validation() {
        assert!(Chain::new(vec![0, 1, 1]).is_err());
        assert!(Chain::new(vec![0, 3, 1]).is_err());
        assert!(Chain::new(vec![0]).is_err());
        let c = Chain::new(vec![2, 0, 1]).unwrap();
        assert_eq!(c.label(), "3-1-2");
        assert_eq!(c.slots(), vec![1, 2, 0]);
        assert!(c.is_chained(0, 2) && !c.is_chained(2, 1));
    }

    #[test]
    fn collinear_three_body_chain() {
        let (sys, s) = line(&[0.0, 1.0, 3.0]);
        assert_eq!(build_chain(&sys, &s).order(), &[0, 1, 2]);
        let (sys, s) = line(&[3.0, 1.0, 0.0]);
        assert_eq!(build_chain(&sys, &s).order(), &[0, 1, 2]);
    }

    #[test]
    fn two_body_chain_in_input_order() {
        let (sys, s) = line(&[0.0, 1.0]);
        assert_eq!(build_chain(&sys, &s).order(), &[0, 1]);
    }

    #[test]
    fn rechain_triangle_rule() {
        // chain (0,1,2) with |q_02| shortest
        let (sys, s) = line(&[0.0, 2.0, 0.5]);
        let chain = Chain::identity(3);
        let d = should_rechain(&sys, &s, &chain);
        assert!(!d.keep);
        assert_eq!(d.new_chain.unwrap().order(), &[0, 2, 1]);
        let (sys, s) = line(&[0.0, 1.0, 2.0]);
        assert!(should_rechain(&sys, &s, &chain).keep);
    }

    #[test]
    fn rechain_to_same_chain_is_identity() {
        let (sys, s) = line(&[0.0, 1.0, 2.5]);
        let chain = Chain::identity(3);
        let c = crate::state::chain_from_barycentric(&sys, &s, &chain).unwrap();
        let r = rechain_state(&sys, &c, &chain).unwrap();
        assert_eq!(r, c);
    }

    #[test]
    fn reversed_pair_is_quarter_turn() {
        let q = Vec2::new(0.3, -1.2);
        assert_eq!(lc_compose(rot90(q)), -lc_compose(q));
    }
}
