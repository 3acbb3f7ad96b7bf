//! Initial-condition scenarios, loaded from TOML. The catalog files are
//! embedded in the library.

use crate::error::{Error, Result};
use crate::state::{BarycentricState, MassSystem};
use crate::vec2::Vec2;
use serde::Deserialize;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

/// Frame in which positions are reported and compared.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Deserialize)]
pub enum Frame {
    #[serde(rename = "inertial")]
    Inertial,
    /// Co-rotating so that body 1 stays on the positive x axis.
    #[serde(rename = "body1")]
    RotatingBody1,
    /// Rotating at unit angular velocity, phased so body 1 starts on the positive x axis.
    #[serde(rename = "omega1")]
    RotatingOmega1,
}

impl Frame {
    pub fn name(self) -> &'static str {
        match self {
            Frame::Inertial => "inertial",
            Frame::RotatingBody1 => "body1",
            Frame::RotatingOmega1 => "omega1",
        }
    }
}

impl fmt::Display for Frame {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Frame {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        [Frame::Inertial, Frame::RotatingBody1, Frame::RotatingOmega1]
            .into_iter()
            .find(|f| f.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidConfig(format!("unknown frame '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub description: String,
    pub sys: MassSystem,
    pub s0: BarycentricState,
    pub default_dt: f64,
    pub default_t_final: f64,
    pub frame: Frame,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    name: String,
    #[serde(default)]
    description: String,
    #[serde(default)]
    t0: f64,
    defaults: DefaultsFile,
    body: Vec<BodyFile>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DefaultsFile {
    dt: f64,
    t_final: f64,
    frame: Frame,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct BodyFile {
    mass: f64,
    q: [f64; 2],
    p: [f64; 2],
}

/// Largest center-of-mass or momentum offset removed on load. Printed initial
/// data is rounded, so small offsets are expected; larger ones point to a
/// transcription error.
pub const MAX_FRAME_CORRECTION: f64 = 1e-6;

/// Shifts positions and boosts momenta so that `Σ m_i q_i = 0` and `Σ p_i = 0`.
fn to_barycentric_frame(sys: &MassSystem, mut q: Vec<Vec2>, mut p: Vec<Vec2>) -> Result<(Vec<Vec2>, Vec<Vec2>)> {
    if q.len() != sys.n() || p.len() != sys.n() {
        return Err(Error::DimensionMismatch { expected: sys.n(), got: q.len() });
    }
    let m = sys.total_mass();
    let l: Vec2 = p.iter().copied().sum();
    let c: Vec2 = q.iter().zip(sys.masses()).map(|(q, mi)| *q * *mi).sum();
    for (what, v) in [("linear momentum", l), ("center of mass", c)] {
        if v.max_abs() > MAX_FRAME_CORRECTION {
            return Err(Error::ConstraintViolation { what, value: v.max_abs(), tol: MAX_FRAME_CORRECTION });
        }
    }
    if l != Vec2::ZERO {
        for (pi, mi) in p.iter_mut().zip(sys.masses()) {
            *pi -= l * (*mi / m);
        }
    }
    if c != Vec2::ZERO {
        for qi in q.iter_mut() {
            *qi -= c / m;
        }
    }
    Ok((q, p))
}

const CATALOG_SOURCES: [&str; 5] = [
    include_str!("../scenarios/caledonian.toml"),
    include_str!("../scenarios/figure-eight.toml"),
    include_str!("../scenarios/g4bp-equilibrium.toml"),
    include_str!("../scenarios/one-plus-four.toml"),
    include_str!("../scenarios/f7-quasi-periodic.toml"),
];

impl Scenario {
    pub fn from_toml_str(text: &str) -> Result<Scenario> {
        let f: ScenarioFile = toml::from_str(text).map_err(|e| Error::Scenario(e.to_string()))?;
        let sys = MassSystem::new(f.body.iter().map(|b| b.mass).collect())?;
        let q: Vec<Vec2> = f.body.iter().map(|b| Vec2::new(b.q[0], b.q[1])).collect();
        let p: Vec<Vec2> = f.body.iter().map(|b| Vec2::new(b.p[0], b.p[1])).collect();
        let (q, p) = to_barycentric_frame(&sys, q, p).map_err(|e| Error::Scenario(format!("{}: {e}", f.name)))?;
        let s0 = BarycentricState::new(&sys, f.t0, q, p).map_err(|e| Error::Scenario(format!("{}: {e}", f.name)))?;
        if !(f.defaults.dt > 0.0 && f.defaults.t_final > f.t0) {
            return Err(Error::Scenario(format!("{}: need dt > 0 and t_final > t0", f.name)));
        }
        Ok(Scenario {
            name: f.name,
            description: f.description,
            sys,
            s0,
            default_dt: f.defaults.dt,
            default_t_final: f.defaults.t_final,
            frame: f.defaults.frame,
        })
    }

    pub fn from_path(path: &Path) -> Result<Scenario> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Scenario(format!("{}: {e}", path.display())))?;
        Scenario::from_toml_str(&text)
    }
}

/// TOML text of the built-in scenarios.
pub fn catalog_sources() -> &'static [&'static str] {
    &CATALOG_SOURCES
}

/// The built-in scenarios.
pub fn catalog() -> Vec<Scenario> {
    CATALOG_SOURCES
        .iter()
        .map(|s| Scenario::from_toml_str(s).expect("embedded scenario is valid"))
        .collect()
}

/// A catalog scenario by name, or else a scenario file at that path.
pub fn resolve(name_or_path: &str) -> Result<Scenario> {
    if let Some(s) = catalog().into_iter().find(|s| s.name == name_or_path) {
        return Ok(s);
    }
    let path = Path::new(name_or_path);
    if path.exists() {
        return Scenario::from_path(path);
    }
    Err(Error::Scenario(format!("unknown scenario '{name_or_path}'")))
}
