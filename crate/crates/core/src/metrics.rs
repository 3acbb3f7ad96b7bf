//! Rotating frames and the drift metrics evaluated in them.

use crate::error::{Error, Result};
use crate::scenario::Frame;
use crate::state::BarycentricState;
use crate::vec2::Vec2;

/// Maps barycentric states into a reporting [`Frame`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotatingFrame {
    frame: Frame,
    t0: f64,
    phase0: f64,
}

fn body1_angle(s: &BarycentricState) -> Result<f64> {
    let q1 = s.q[0];
    if q1.norm2() == 0.0 {
        return Err(Error::InvalidConfig("body 1 at the origin: rotating frame undefined".into()));
    }
    Ok(q1.x2.atan2(q1.x1))
}

impl RotatingFrame {
    /// Frame anchored at the initial state `s0`.
    pub fn new(frame: Frame, s0: &BarycentricState) -> Result<Self> {
        let phase0 = match frame {
            Frame::Inertial => 0.0,
            Frame::RotatingBody1 | Frame::RotatingOmega1 => body1_angle(s0)?,
        };
        Ok(RotatingFrame { frame, t0: s0.t, phase0 })
    }

    pub fn frame(&self) -> Frame {
        self.frame
    }

    /// Rotation angle of the frame axes at the time of `s`.
    pub fn angle(&self, s: &BarycentricState) -> Result<f64> {
        match self.frame {
            Frame::Inertial => Ok(0.0),
            Frame::RotatingBody1 => body1_angle(s),
            Frame::RotatingOmega1 => Ok(self.phase0 + (s.t - self.t0)),
        }
    }

    /// Vectors of `s` expressed on the frame axes: `(positions, momenta)`.
    pub fn apply(&self, s: &BarycentricState) -> Result<(Vec<Vec2>, Vec<Vec2>)> {
        let a = -self.angle(s)?;
        if a == 0.0 {
            return Ok((s.q.clone(), s.p.clone()));
        }
        Ok((s.q.iter().map(|v| v.rotate(a)).collect(), s.p.iter().map(|v| v.rotate(a)).collect()))
    }

    pub fn positions(&self, s: &BarycentricState) -> Result<Vec<Vec2>> {
        Ok(self.apply(s)?.0)
    }
}

/// Positions of `s` in `frame`, anchored at `s0`.
pub fn rotating_frame(s: &BarycentricState, frame: Frame, s0: &BarycentricState) -> Result<Vec<Vec2>> {
    RotatingFrame::new(frame, s0)?.positions(s)
}

/// `|x_b(t) − x_b(t_0)|` per record of a frame-position series.
pub fn shift_metric(traj: &[(f64, Vec<Vec2>)], body: usize) -> Vec<(f64, f64)> {
    let Some((_, x0)) = traj.first() else { return Vec::new() };
    traj.iter().map(|(t, x)| (*t, (x[body] - x0[body]).norm())).collect()
}

/// Largest shift over all bodies per record.
pub fn e_max_metric(traj: &[(f64, Vec<Vec2>)]) -> Vec<(f64, f64)> {
    let Some((_, x0)) = traj.first() else { return Vec::new() };
    traj.iter()
        .map(|(t, x)| (*t, x.iter().zip(x0).map(|(a, b)| (*a - *b).norm()).fold(0.0, f64::max)))
        .collect()
}

fn segment_distance(p: Vec2, a: Vec2, b: Vec2) -> f64 {
    let ab = b - a;
    let l2 = ab.norm2();
    let s = if l2 == 0.0 { 0.0 } else { ((p - a).dot(ab) / l2).clamp(0.0, 1.0) };
    (p - (a + ab * s)).norm()
}

/// Distance from `p` to the closed polyline through `curve`.
pub fn curve_distance(p: Vec2, curve: &[Vec2]) -> f64 {
    match curve.len() {
        0 => f64::INFINITY,
        1 => (p - curve[0]).norm(),
        n => (0..n).map(|k| segment_distance(p, curve[k], curve[(k + 1) % n])).fold(f64::INFINITY, f64::min),
    }
}

/// Least-squares slope and its standard error for `y` against `x`.
pub fn linear_fit_slope(points: &[(f64, f64)]) -> (f64, f64) {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let icpt = my - slope * mx;
    let rss: f64 = points.iter().map(|p| (p.1 - icpt - slope * p.0).powi(2)).sum();
    let se = if points.len() > 2 { (rss / (n - 2.0) / sxx).sqrt() } else { f64::INFINITY };
    (slope, se)
}
