#![allow(dead_code)]

use chainreg::{BarycentricState, MassSystem, Vec2};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random bodies with masses in [0.5, 2], positions in a box of half-width 2
/// with pairwise separations of at least `min_sep`, and modest momenta,
/// shifted to the barycentric frame.
pub fn random_state(rng: &mut ChaCha8Rng, n: usize, min_sep: f64) -> (MassSystem, BarycentricState) {
    let masses: Vec<f64> = (0..n).map(|_| rng.gen_range(0.5..2.0)).collect();
    let mut q: Vec<Vec2> = Vec::with_capacity(n);
    while q.len() < n {
        let c = Vec2::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
        if q.iter().all(|x| (*x - c).norm() >= min_sep) {
            q.push(c);
        }
    }
    let mut p: Vec<Vec2> = (0..n).map(|_| Vec2::new(rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5))).collect();
    let m: f64 = masses.iter().sum();
    let c = q.iter().zip(&masses).fold(Vec2::ZERO, |a, (x, mi)| a + *x * *mi) / m;
    let l = p.iter().fold(Vec2::ZERO, |a, x| a + *x);
    for (i, mi) in masses.iter().enumerate() {
        q[i] -= c;
        p[i] -= l * (*mi / m);
    }
    let sys = MassSystem::new(masses).unwrap();
    let s = BarycentricState::new(&sys, 0.0, q, p).unwrap();
    (sys, s)
}

/// Two bodies of masses 0.5 on a Kepler ellipse with eccentricity `e`,
/// semi-major axis 1, starting at pericenter. Period is 2π.
pub fn kepler(e: f64) -> (MassSystem, BarycentricState) {
    let (m1, m2) = (0.5, 0.5);
    let m = m1 + m2;
    let r = 1.0 - e;
    let v = ((1.0 + e) / (1.0 - e)).sqrt();
    let sys = MassSystem::new(vec![m1, m2]).unwrap();
    let q = vec![Vec2::new(r * m2 / m, 0.0), Vec2::new(-r * m1 / m, 0.0)];
    let mu = m1 * m2 / m;
    let p = vec![Vec2::new(0.0, mu * v), Vec2::new(0.0, -mu * v)];
    let s = BarycentricState::new(&sys, 0.0, q, p).unwrap();
    (sys, s)
}

/// Complex square and the LC momentum map, written out by components.
pub fn square(q: Vec2) -> Vec2 {
    Vec2::new(q.x1 * q.x1 - q.x2 * q.x2, 2.0 * q.x1 * q.x2)
}

/// `v L(Q)ᵀ` with `L(Q) = [[Q1, −Q2], [Q2, Q1]]`.
pub fn times_lt(v: Vec2, q: Vec2) -> Vec2 {
    Vec2::new(v.x1 * q.x1 - v.x2 * q.x2, v.x1 * q.x2 + v.x2 * q.x1)
}

pub fn physical_p(big_p: Vec2, big_q: Vec2) -> Vec2 {
    times_lt(big_p, big_q) / (2.0 * big_q.norm2())
}

pub fn max_dist(a: &[Vec2], b: &[Vec2]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (*x - *y).max_abs()).fold(0.0, f64::max)
}

/// The three-body discrete system solved directly: `F_ij = 0` for the three
/// pairs, `G_12 − G_23 = 0`, `G_13 + G_23 = 0` and `Φ_123 = 0`. Unknowns are
/// `(Q_12, Q_23, Q_13, P_12, P_23, P_13)` at the new node.
pub struct ThreeBody {
    pub m: [f64; 3],
    pub q0: [Vec2; 3],
    pub p0: [Vec2; 3],
    pub dt: f64,
}

const PAIRS3: [(usize, usize); 3] = [(0, 1), (1, 2), (0, 2)];

impl ThreeBody {
    fn f(&self, k: usize, q1: Vec2, p1: Vec2) -> Vec2 {
        let (i, j) = PAIRS3[k];
        let mtot = self.m.iter().sum::<f64>();
        let (a, b) = (self.q0[k].norm2(), q1.norm2());
        let pm = (self.p0[k] + p1) * 0.5;
        (q1 - self.q0[k]) / self.dt - pm * (mtot / (8.0 * self.m[i] * self.m[j]) * (b + a) / (b * a))
    }

    fn g(&self, k: usize, q1: Vec2, p1: Vec2) -> Vec2 {
        let (i, j) = PAIRS3[k];
        let mtot = self.m.iter().sum::<f64>();
        let mij = self.m[i] * self.m[j];
        let (a, b) = (self.q0[k].norm2(), q1.norm2());
        let qm = (self.q0[k] + q1) * 0.5;
        let inner = (p1 - self.p0[k]) / self.dt
            - qm * ((mtot / (8.0 * mij) * (p1.norm2() + self.p0[k].norm2()) - 2.0 * mij) / (b * a));
        times_lt(inner, qm) / (2.0 * qm.norm2())
    }

    fn residual(&self, x: &[f64]) -> Vec<f64> {
        let q: Vec<Vec2> = (0..3).map(|k| Vec2::new(x[2 * k], x[2 * k + 1])).collect();
        let p: Vec<Vec2> = (0..3).map(|k| Vec2::new(x[6 + 2 * k], x[7 + 2 * k])).collect();
        let g: Vec<Vec2> = (0..3).map(|k| self.g(k, q[k], p[k])).collect();
        let mut out = Vec::with_capacity(12);
        for k in 0..3 {
            let v = self.f(k, q[k], p[k]);
            out.extend([v.x1, v.x2]);
        }
        let a = g[0] - g[1];
        let b = g[2] + g[1];
        let phi = square(q[0]) + square(q[1]) - square(q[2]);
        out.extend([a.x1, a.x2, b.x1, b.x2, phi.x1, phi.x2]);
        out
    }

    pub fn solve(&self) -> (Vec<Vec2>, Vec<Vec2>) {
        let mtot = self.m.iter().sum::<f64>();
        let mut x = Vec::with_capacity(12);
        for k in 0..3 {
            let (i, j) = PAIRS3[k];
            let qdot = self.p0[k] * (mtot / (4.0 * self.m[i] * self.m[j] * self.q0[k].norm2()));
            let q = self.q0[k] + qdot * self.dt;
            x.extend([q.x1, q.x2]);
        }
        for k in 0..3 {
            x.extend([self.p0[k].x1, self.p0[k].x2]);
        }
        for _ in 0..40 {
            let r = self.residual(&x);
            let mut jac = DMatrix::zeros(12, 12);
            for c in 0..12 {
                let h = 1e-6 * x[c].abs().max(1.0);
                let (mut xp, mut xm) = (x.clone(), x.clone());
                xp[c] += h;
                xm[c] -= h;
                let (rp, rm) = (self.residual(&xp), self.residual(&xm));
                for row in 0..12 {
                    jac[(row, c)] = (rp[row] - rm[row]) / (2.0 * h);
                }
            }
            let dx = jac.lu().solve(&-DVector::from_vec(r)).unwrap();
            let size = dx.amax();
            for c in 0..12 {
                x[c] += dx[c];
            }
            if size < 1e-15 {
                break;
            }
        }
        let q = (0..3).map(|k| Vec2::new(x[2 * k], x[2 * k + 1])).collect();
        let p = (0..3).map(|k| Vec2::new(x[6 + 2 * k], x[7 + 2 * k])).collect();
        (q, p)
    }
}

/// One step of the three-body scheme from `s`, as pair positions and momenta
/// in `pair_index` order.
pub fn three_body_step(sys: &MassSystem, s: &BarycentricState, dt: f64) -> (Vec<Vec2>, Vec<Vec2>) {
    let (qr, pr) = chainreg::state::all_relative_pairs(sys, s);
    // pair_index order is (0,1), (0,2), (1,2)
    let reorder = |v: &[Vec2]| [v[0], v[2], v[1]];
    let (qr, pr) = (reorder(&qr), reorder(&pr));
    let q0: Vec<Vec2> = qr.iter().map(|q| chainreg::levi_civita::lc_decompose_q(*q).unwrap()).collect();
    let p0: Vec<Vec2> = (0..3).map(|k| times_lt(pr[k], q0[k].conj()) * 2.0).collect();
    let tb = ThreeBody { m: [sys.mass(0), sys.mass(1), sys.mass(2)], q0: [q0[0], q0[1], q0[2]], p0: [p0[0], p0[1], p0[2]], dt };
    let (qo, po) = tb.solve();
    let q: Vec<Vec2> = qo.iter().map(|q| square(*q)).collect();
    let p: Vec<Vec2> = (0..3).map(|k| physical_p(po[k], qo[k])).collect();
    (reorder(&q).to_vec(), reorder(&p).to_vec())
}

/// Greedy chain written from the prose: sort all pairs by length (ties by
/// label), take the first as the first piece, then keep taking the first
/// sorted pair that joins a chain end to an unused body.
pub fn greedy_chain_oracle(q: &[Vec2]) -> Vec<usize> {
    let n = q.len();
    let mut edges: Vec<(f64, usize, usize)> = chainreg::state::pairs(n).map(|(a, b)| ((q[a] - q[b]).norm(), a, b)).collect();
    edges.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let mut chain = std::collections::VecDeque::new();
    chain.push_back(edges[0].1);
    chain.push_back(edges[0].2);
    while chain.len() < n {
        let (front, back) = (chain[0], chain[chain.len() - 1]);
        let fresh = |x: usize| !chain.contains(&x);
        let &(_, a, b) = edges
            .iter()
            .find(|(_, a, b)| ((*a == front || *a == back) && fresh(*b)) || ((*b == front || *b == back) && fresh(*a)))
            .unwrap();
        let (end, new) = if (a == front || a == back) && fresh(b) { (a, b) } else { (b, a) };
        if end == front {
            chain.push_front(new);
        } else {
            chain.push_back(new);
        }
    }
    let mut v: Vec<usize> = chain.into();
    if v[0] > v[n - 1] {
        v.reverse();
    }
    v
}
