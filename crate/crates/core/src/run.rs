//! Fixed-step runs of any method with per-step diagnostics, and CSV output.

use crate::chain::{build_chain, Chain};
use crate::dcrgnbp::{self, StepConfig};
use crate::error::{Error, Result};
use crate::levi_civita::AllPairsLC;
use crate::metrics::RotatingFrame;
use crate::reference::{self, all_pairs_from_barycentric, MethodId};
use crate::state::{
    angular_momentum, barycentric_from_chain, barycentric_from_relative_pairs, center_of_mass_moment, chain_from_barycentric,
    h_lc, hamiltonian, linear_momentum, BarycentricState, ChainLCState, MassSystem,
};
use std::io::{self, Write};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunConfig {
    pub method: MethodId,
    pub step: StepConfig,
    pub t_final: f64,
}

/// Conserved-quantity errors at one record.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub rel_err_h: f64,
    /// Relative angular momentum error, or `|j(t)|` when `j(0)` vanishes.
    pub rel_err_j: f64,
    pub norm_l: f64,
    pub norm_c: f64,
    pub chain: Option<Chain>,
    pub newton_iterations: usize,
}

/// What the observer sees once per record (the initial state is record 0).
#[derive(Debug, Clone, Copy)]
pub struct StepRecord<'a> {
    pub step: usize,
    pub state: &'a BarycentricState,
    pub diagnostics: &'a DiagnosticsRecord,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub steps: usize,
    pub final_state: BarycentricState,
    pub max_rel_err_h: f64,
    pub max_rel_err_j: f64,
    pub max_norm_l: f64,
    pub max_norm_c: f64,
    pub total_newton_iterations: usize,
    pub rechains: usize,
}

/// `|j(0)|` at or below this fraction of `Σ |q_i||p_i|` counts as zero.
pub const ZERO_ANGULAR_MOMENTUM_REL: f64 = 1e-12;

/// Number of steps from `t0` to `t_final` with nominal size `dt`; a final
/// partial step is added when the span is not a whole multiple of `dt`.
pub fn step_count(t0: f64, t_final: f64, dt: f64) -> usize {
    if t_final <= t0 {
        return 0;
    }
    let r = (t_final - t0) / dt;
    let k = r.round();
    if (r - k).abs() <= 1e-9 * r.max(1.0) {
        k as usize
    } else {
        r.ceil() as usize
    }
}

/// Time of step `k` out of `n`: `t0 + k·dt`, with the last landing on `t_final`.
#[inline]
pub fn step_time(t0: f64, t_final: f64, dt: f64, k: usize, n: usize) -> f64 {
    if k >= n {
        t_final
    } else {
        t0 + k as f64 * dt
    }
}

enum Engine {
    Barycentric(BarycentricState),
    Chain(ChainLCState),
    AllPairs(f64, AllPairsLC),
}

impl Engine {
    fn new(sys: &MassSystem, method: MethodId, s0: &BarycentricState) -> Result<Self> {
        Ok(match method {
            MethodId::Rk4 | MethodId::Si4 | MethodId::Greenspan => Engine::Barycentric(s0.clone()),
            MethodId::Dcrgnbp => Engine::Chain(chain_from_barycentric(sys, s0, &build_chain(sys, s0))?),
            MethodId::Drgnbp => {
                if sys.n() > reference::DRGNBP_MAX_BODIES {
                    return Err(Error::InvalidConfig(format!(
                        "drgnbp supports at most {} bodies",
                        reference::DRGNBP_MAX_BODIES
                    )));
                }
                Engine::AllPairs(s0.t, all_pairs_from_barycentric(sys, s0)?)
            }
        })
    }

    fn advance(&mut self, sys: &MassSystem, method: MethodId, cfg: &StepConfig, t_next: f64) -> Result<(usize, bool)> {
        match self {
            Engine::Barycentric(s) => {
                let dt = t_next - s.t;
                let (mut next, it) = match method {
                    MethodId::Rk4 => (reference::rk4_step(sys, s, dt)?, 0),
                    MethodId::Si4 => (reference::si4_step(sys, s, dt)?, 0),
                    _ => reference::greenspan_step(sys, s, dt, cfg)?,
                };
                next.t = t_next;
                *s = next;
                Ok((it, false))
            }
            Engine::Chain(c) => {
                let dt = t_next - c.t;
                let before = c.chain.clone();
                let (mut next, it) = dcrgnbp::step_and_rechain(sys, c, cfg, dt)?;
                next.t = t_next;
                let rechained = next.chain != before;
                *c = next;
                Ok((it, rechained))
            }
            Engine::AllPairs(t, ap) => {
                let dt = t_next - *t;
                let (next, it) = reference::drgnbp_step(sys, ap, dt, cfg)?;
                *ap = next;
                *t = t_next;
                Ok((it, false))
            }
        }
    }

    fn t(&self) -> f64 {
        match self {
            Engine::Barycentric(s) => s.t,
            Engine::Chain(c) => c.t,
            Engine::AllPairs(t, _) => *t,
        }
    }

    fn barycentric(&self, sys: &MassSystem) -> Result<BarycentricState> {
        match self {
            Engine::Barycentric(s) => Ok(s.clone()),
            Engine::Chain(c) => barycentric_from_chain(sys, c),
            Engine::AllPairs(t, ap) => {
                let (q, p) = ap.relative()?;
                Ok(barycentric_from_relative_pairs(sys, *t, &q, &p))
            }
        }
    }

    /// The energy value the method is measured on.
    fn energy(&self, sys: &MassSystem, s: &BarycentricState) -> Result<f64> {
        match self {
            Engine::Barycentric(_) => hamiltonian(sys, s),
            Engine::Chain(c) => c.energy(sys),
            Engine::AllPairs(_, ap) => h_lc(sys, &ap.q, &ap.p),
        }
    }

    fn chain(&self) -> Option<&Chain> {
        match self {
            Engine::Chain(c) => Some(&c.chain),
            _ => None,
        }
    }
}

/// Integrates `s0` to `cfg.t_final`, calling `observer` on the initial record
/// and after every accepted step.
pub fn run<F>(sys: &MassSystem, s0: &BarycentricState, cfg: &RunConfig, mut observer: F) -> Result<RunSummary>
where
    F: FnMut(&StepRecord),
{
    cfg.step.validate()?;
    s0.validate(sys)?;
    if !(cfg.t_final.is_finite() && cfg.t_final >= s0.t) {
        return Err(Error::InvalidConfig(format!("t_final {} precedes t0 {}", cfg.t_final, s0.t)));
    }
    let mut engine = Engine::new(sys, cfg.method, s0)?;
    let start = engine.barycentric(sys)?;
    let h0 = engine.energy(sys, &start)?;
    let j0 = angular_momentum(&start);
    let j_scale: f64 = start.q.iter().zip(&start.p).map(|(q, p)| q.norm() * p.norm()).sum();
    let j_is_zero = j0.abs() <= ZERO_ANGULAR_MOMENTUM_REL * j_scale;

    let diag = |engine: &Engine, s: &BarycentricState, it: usize| -> Result<DiagnosticsRecord> {
        let h = engine.energy(sys, s)?;
        let j = angular_momentum(s);
        Ok(DiagnosticsRecord {
            t: s.t,
            rel_err_h: ((h - h0) / h0).abs(),
            rel_err_j: if j_is_zero { j.abs() } else { ((j - j0) / j0).abs() },
            norm_l: linear_momentum(s).norm(),
            norm_c: center_of_mass_moment(sys, s).norm(),
            chain: engine.chain().cloned(),
            newton_iterations: it,
        })
    };

    let d0 = diag(&engine, &start, 0)?;
    let mut summary = RunSummary {
        steps: 0,
        final_state: start.clone(),
        max_rel_err_h: d0.rel_err_h,
        max_rel_err_j: d0.rel_err_j,
        max_norm_l: d0.norm_l,
        max_norm_c: d0.norm_c,
        total_newton_iterations: 0,
        rechains: 0,
    };
    observer(&StepRecord { step: 0, state: &start, diagnostics: &d0 });

    let n = step_count(s0.t, cfg.t_final, cfg.step.dt);
    for k in 1..=n {
        let t_prev = engine.t();
        let t_next = step_time(s0.t, cfg.t_final, cfg.step.dt, k, n);
        let (it, rechained) = engine
            .advance(sys, cfg.method, &cfg.step, t_next)
            .map_err(|e| Error::StepFailed { step: k, t: t_prev, source: Box::new(e) })?;
        let s = engine.barycentric(sys)?;
        let d = diag(&engine, &s, it).map_err(|e| Error::StepFailed { step: k, t: t_prev, source: Box::new(e) })?;
        summary.steps = k;
        summary.max_rel_err_h = summary.max_rel_err_h.max(d.rel_err_h);
        summary.max_rel_err_j = summary.max_rel_err_j.max(d.rel_err_j);
        summary.max_norm_l = summary.max_norm_l.max(d.norm_l);
        summary.max_norm_c = summary.max_norm_c.max(d.norm_c);
        summary.total_newton_iterations += it;
        summary.rechains += rechained as usize;
        observer(&StepRecord { step: k, state: &s, diagnostics: &d });
        if k == n {
            summary.final_state = s;
        }
    }
    Ok(summary)
}

/// Integrates the d-CRGNBP scheme from `s0` to `t_final`.
pub fn integrate<F>(sys: &MassSystem, s0: &BarycentricState, cfg: &StepConfig, t_final: f64, observer: F) -> Result<RunSummary>
where
    F: FnMut(&StepRecord),
{
    run(sys, s0, &RunConfig { method: MethodId::Dcrgnbp, step: *cfg, t_final }, observer)
}

/// Round-trip-safe float formatting (17 significant digits).
#[inline]
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub const TRAJECTORY_HEADER: &str = "t,body,qx,qy,px,py";
pub const DIAGNOSTICS_HEADER: &str = "t,rel_err_H,rel_err_j,norm_l,norm_c,newton_iters,chain";

/// One row per body: `t,body,qx,qy,px,py` with 1-based body labels and
/// vectors on the axes of `frame`.
pub fn write_trajectory_rows<W: Write>(w: &mut W, frame: &RotatingFrame, s: &BarycentricState) -> io::Result<()> {
    let (q, p) = frame.apply(s).map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e.to_string()))?;
    let t = fmt_f64(s.t);
    for (i, (q, p)) in q.iter().zip(&p).enumerate() {
        writeln!(w, "{t},{},{},{},{},{}", i + 1, fmt_f64(q.x1), fmt_f64(q.x2), fmt_f64(p.x1), fmt_f64(p.x2))?;
    }
    Ok(())
}

pub fn write_diagnostics_row<W: Write>(w: &mut W, d: &DiagnosticsRecord) -> io::Result<()> {
    writeln!(
        w,
        "{},{},{},{},{},{},{}",
        fmt_f64(d.t),
        fmt_f64(d.rel_err_h),
        fmt_f64(d.rel_err_j),
        fmt_f64(d.norm_l),
        fmt_f64(d.norm_c),
        d.newton_iterations,
        d.chain.as_ref().map(|c| c.label()).unwrap_or_default()
    )
}
