//! Comparison integrators on the barycentric equations, and the redundant
//! all-pairs discrete scheme.

use crate::dcrgnbp::{momentum_scale, residual_g_pair, StepConfig};
use crate::error::{Error, Result};
use crate::levi_civita::{lc_compose, lc_decompose_p, lc_decompose_q, AllPairsLC};
use crate::newton;
use crate::state::{all_relative_pairs, forces, pair_count, pair_index, pairs, BarycentricState, MassSystem};
use crate::vec2::Vec2;
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MethodId {
    Rk4,
    Si4,
    Greenspan,
    Dcrgnbp,
    Drgnbp,
}

impl MethodId {
    pub const ALL: [MethodId; 5] = [MethodId::Rk4, MethodId::Si4, MethodId::Greenspan, MethodId::Dcrgnbp, MethodId::Drgnbp];

    pub fn name(self) -> &'static str {
        match self {
            MethodId::Rk4 => "rk4",
            MethodId::Si4 => "si4",
            MethodId::Greenspan => "greenspan",
            MethodId::Dcrgnbp => "dcrgnbp",
            MethodId::Drgnbp => "drgnbp",
        }
    }
}

impl fmt::Display for MethodId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MethodId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        MethodId::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidConfig(format!("unknown method '{s}'")))
    }
}

/// Largest system size accepted by [`drgnbp_step`].
pub const DRGNBP_MAX_BODIES: usize = 6;

fn axpy(s: &BarycentricState, dq: &[Vec2], dp: &[Vec2], h: f64) -> BarycentricState {
    BarycentricState {
        t: s.t,
        q: s.q.iter().zip(dq).map(|(q, d)| *q + *d * h).collect(),
        p: s.p.iter().zip(dp).map(|(p, d)| *p + *d * h).collect(),
    }
}

fn rates(sys: &MassSystem, s: &BarycentricState) -> Result<(Vec<Vec2>, Vec<Vec2>)> {
    let dq = s.p.iter().zip(sys.masses()).map(|(p, m)| *p / *m).collect();
    Ok((dq, forces(sys, &s.q)?))
}

/// Classical fourth-order Runge-Kutta step.
pub fn rk4_step(sys: &MassSystem, s: &BarycentricState, dt: f64) -> Result<BarycentricState> {
    let (k1q, k1p) = rates(sys, s)?;
    let (k2q, k2p) = rates(sys, &axpy(s, &k1q, &k1p, 0.5 * dt))?;
    let (k3q, k3p) = rates(sys, &axpy(s, &k2q, &k2p, 0.5 * dt))?;
    let (k4q, k4p) = rates(sys, &axpy(s, &k3q, &k3p, dt))?;
    let n = sys.n();
    let comb = |a: &[Vec2], b: &[Vec2], c: &[Vec2], d: &[Vec2], x: &[Vec2]| -> Vec<Vec2> {
        (0..n).map(|i| x[i] + (a[i] + (b[i] + c[i]) * 2.0 + d[i]) * (dt / 6.0)).collect()
    };
    Ok(BarycentricState {
        t: s.t + dt,
        q: comb(&k1q, &k2q, &k3q, &k4q, &s.q),
        p: comb(&k1p, &k2p, &k3p, &k4p, &s.p),
    })
}

fn leapfrog(sys: &MassSystem, q: &mut [Vec2], p: &mut [Vec2], h: f64) -> Result<()> {
    let f = forces(sys, q)?;
    for i in 0..q.len() {
        p[i] += f[i] * (0.5 * h);
        q[i] += p[i] * (h / sys.mass(i));
    }
    let f = forces(sys, q)?;
    for i in 0..q.len() {
        p[i] += f[i] * (0.5 * h);
    }
    Ok(())
}

/// Fourth-order symplectic step: triple-jump composition of kick-drift-kick
/// leapfrog.
pub fn si4_step(sys: &MassSystem, s: &BarycentricState, dt: f64) -> Result<BarycentricState> {
    let cbrt2 = 2f64.cbrt();
    let w1 = 1.0 / (2.0 - cbrt2);
    let w0 = -cbrt2 / (2.0 - cbrt2);
    let mut q = s.q.clone();
    let mut p = s.p.clone();
    for w in [w1, w0, w1] {
        leapfrog(sys, &mut q, &mut p, w * dt)?;
    }
    Ok(BarycentricState { t: s.t + dt, q, p })
}

/// Discrete-gradient pair forces between two position nodes.
pub fn greenspan_forces(sys: &MassSystem, qa: &[Vec2], qb: &[Vec2]) -> Result<Vec<Vec2>> {
    let n = sys.n();
    let mut f = vec![Vec2::ZERO; n];
    for (i, j) in pairs(n) {
        let a = qa[i] - qa[j];
        let b = qb[i] - qb[j];
        let (ra, rb) = (a.norm(), b.norm());
        if ra == 0.0 || rb == 0.0 {
            return Err(Error::SingularSeparation { i, j });
        }
        let g = (a + b) * (sys.mass(i) * sys.mass(j) / (ra * rb * (ra + rb)));
        f[i] -= g;
        f[j] += g;
    }
    Ok(f)
}

/// Energy-conserving discrete-gradient step, solved by Newton for the new
/// velocities from a Heun starting value.
pub fn greenspan_step(sys: &MassSystem, s: &BarycentricState, dt: f64, cfg: &StepConfig) -> Result<(BarycentricState, usize)> {
    let n = sys.n();
    let v0: Vec<Vec2> = s.p.iter().zip(sys.masses()).map(|(p, m)| *p / *m).collect();
    let guess = {
        let (k1q, k1p) = rates(sys, s)?;
        let f2 = forces(sys, &axpy(s, &k1q, &k1p, dt).q)?;
        (0..n).map(|i| v0[i] + (k1p[i] + f2[i]) * (0.5 * dt / sys.mass(i))).collect::<Vec<_>>()
    };
    let positions = |v: &[f64]| -> Vec<Vec2> {
        (0..n).map(|i| s.q[i] + (v0[i] + Vec2::new(v[2 * i], v[2 * i + 1])) * (0.5 * dt)).collect()
    };
    let residual = |v: &[f64], r: &mut [f64]| -> Result<()> {
        let qb = positions(v);
        let f = greenspan_forces(sys, &s.q, &qb)?;
        for i in 0..n {
            let d = Vec2::new(v[2 * i], v[2 * i + 1]) - v0[i] - f[i] * (dt / sys.mass(i));
            r[2 * i] = d.x1;
            r[2 * i + 1] = d.x2;
        }
        Ok(())
    };
    let x0 = guess.iter().flat_map(|v| [v.x1, v.x2]).collect();
    let out = newton::solve(residual, x0, &cfg.newton())?;
    let q = positions(&out.x);
    let p = (0..n).map(|i| Vec2::new(out.x[2 * i], out.x[2 * i + 1]) * sys.mass(i)).collect();
    Ok((BarycentricState { t: s.t + dt, q, p }, out.iterations))
}

/// Regularized vectors of every pair of `s`, labelled as in `sys`.
pub fn all_pairs_from_barycentric(sys: &MassSystem, s: &BarycentricState) -> Result<AllPairsLC> {
    let (qr, pr) = all_relative_pairs(sys, s);
    let mut q = Vec::with_capacity(qr.len());
    let mut p = Vec::with_capacity(qr.len());
    for (k, (i, j)) in pairs(sys.n()).enumerate() {
        q.push(lc_decompose_q(qr[k]).map_err(|_| Error::SingularSeparation { i, j })?);
        p.push(lc_decompose_p(qr[k], pr[k]).map_err(|_| Error::SingularSeparation { i, j })?);
    }
    AllPairsLC::new(sys.n(), q, p)
}

/// One step of the redundant all-pairs scheme: the discrete velocity relation
/// for every pair, the `N−1` summed force balances and the position
/// constraints at the new node, solved together by Newton.
pub fn drgnbp_step(sys: &MassSystem, ap: &AllPairsLC, dt: f64, cfg: &StepConfig) -> Result<(AllPairsLC, usize)> {
    let n = sys.n();
    if n > DRGNBP_MAX_BODIES {
        return Err(Error::InvalidConfig(format!("redundant scheme supports at most {DRGNBP_MAX_BODIES} bodies, got {n}")));
    }
    if ap.n() != n {
        return Err(Error::DimensionMismatch { expected: n, got: ap.n() });
    }
    let scale = ap.q.iter().map(|q| q.norm2()).fold(1.0f64, f64::max);
    let (phi, _) = ap.max_constraint_violation(sys);
    if phi > 1e-10 * scale {
        return Err(Error::ConstraintViolation { what: "position constraint", value: phi, tol: 1e-10 * scale });
    }
    let np = pair_count(n);
    let m = sys.total_mass();
    let wscale: Vec<f64> = pairs(n).enumerate().map(|(k, (i, j))| momentum_scale(m, sys.mass(i), sys.mass(j), ap.q[k], dt)).collect();
    let unpack = |y: &[f64]| -> (Vec<Vec2>, Vec<Vec2>) {
        let q = (0..np).map(|k| Vec2::new(y[2 * k], y[2 * k + 1])).collect();
        let p = (0..np).map(|k| Vec2::new(y[2 * (np + k)], y[2 * (np + k) + 1]) * wscale[k]).collect();
        (q, p)
    };
    let residual = |y: &[f64], r: &mut [f64]| -> Result<()> {
        let (q1, p1) = unpack(y);
        let mut out = Vec::with_capacity(2 * n * (n - 1));
        for (k, (i, j)) in pairs(n).enumerate() {
            let (qa, qb) = (ap.q[k], q1[k]);
            let (ra, rb) = (qa.norm2(), qb.norm2());
            if ra == 0.0 || rb == 0.0 {
                return Err(Error::SingularSeparation { i, j });
            }
            let coef = m / (8.0 * sys.mass(i) * sys.mass(j));
            out.push(qb - qa - (ap.p[k] + p1[k]) * (0.5 * dt * coef * (ra + rb) / (ra * rb)));
        }
        let mut rows = vec![Vec2::ZERO; n];
        for (k, (i, j)) in pairs(n).enumerate() {
            let g = residual_g_pair(sys, i, j, ap.q[k], q1[k], ap.p[k], p1[k], dt)?;
            rows[j] += g;
            rows[i] -= g;
        }
        for (j, row) in rows.iter().enumerate().skip(1) {
            let mj = sys.mass(j);
            out.push(*row * (dt * m / (mj * (m - mj))));
        }
        for j in 1..n {
            for k in j + 1..n {
                out.push(
                    lc_compose(q1[pair_index(n, 0, j)]) + lc_compose(q1[pair_index(n, j, k)]) - lc_compose(q1[pair_index(n, 0, k)]),
                );
            }
        }
        for (idx, v) in out.iter().enumerate() {
            r[2 * idx] = v.x1;
            r[2 * idx + 1] = v.x2;
        }
        Ok(())
    };
    let mut y0 = Vec::with_capacity(4 * np);
    for k in 0..np {
        let (i, j) = pairs(n).nth(k).unwrap();
        let qdot = ap.p[k] * (m / (4.0 * sys.mass(i) * sys.mass(j) * ap.q[k].norm2()));
        let q = ap.q[k] + qdot * dt;
        y0.extend([q.x1, q.x2]);
    }
    for k in 0..np {
        y0.extend([ap.p[k].x1 / wscale[k], ap.p[k].x2 / wscale[k]]);
    }
    let out = newton::solve(residual, y0, &cfg.newton())?;
    let (q, p) = unpack(&out.x);
    Ok((AllPairsLC::new(n, q, p)?, out.iterations))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn method_names_round_trip() {
        for m in MethodId::ALL {
            assert_eq!(m.name().parse::<MethodId>().unwrap(), m);
        }
        assert!("euler".parse::<MethodId>().is_err());
    }

    #[test]
    fn si4_is_time_reversible() {
        let sys = MassSystem::new(vec![1.0, 0.5, 0.8]).unwrap();
        let q = vec![Vec2::new(1.0, 0.0), Vec2::new(-0.6, 0.9), Vec2::new(-0.875, -0.5625)];
        let p = vec![Vec2::new(0.1, 0.4), Vec2::new(-0.3, -0.1), Vec2::new(0.2, -0.3)];
        let c: Vec2 = q.iter().zip(sys.masses()).map(|(q, m)| *q * *m).sum();
        let q = q.into_iter().map(|x| x - c / sys.total_mass()).collect();
        let s = BarycentricState::new(&sys, 0.0, q, p).unwrap();
        let a = si4_step(&sys, &s, 0.05).unwrap();
        let b = si4_step(&sys, &a, -0.05).unwrap();
        for i in 0..3 {
            assert!((b.q[i] - s.q[i]).max_abs() < 1e-13);
            assert!((b.p[i] - s.p[i]).max_abs() < 1e-13);
        }
    }
}
