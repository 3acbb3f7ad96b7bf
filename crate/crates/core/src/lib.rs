//! Planar N-body integration with Levi-Civita chain regularization.
//!
//! The main integrator ([`dcrgnbp`]) is an implicit second-order scheme that
//! conserves the energy, linear momentum and center of mass exactly up to the
//! Newton tolerance. Reference integrators, a scenario catalog and the
//! rotating-frame metrics used to compare them live alongside it.

pub mod chain;
pub mod dcrgnbp;
pub mod error;
pub mod levi_civita;
pub mod metrics;
pub mod newton;
pub mod reference;
pub mod run;
pub mod scenario;
pub mod state;
pub mod vec2;

pub use chain::{build_chain, rechain_state, should_rechain, Chain, ChainDecision};
pub use dcrgnbp::StepConfig;
pub use error::{Error, Result};
pub use levi_civita::AllPairsLC;
pub use reference::MethodId;
pub use run::{run, DiagnosticsRecord, RunConfig, RunSummary, StepRecord};
pub use scenario::{catalog, Frame, Scenario};
pub use state::{BarycentricState, ChainLCState, ConservedQuantities, MassSystem, RelativePairState};
pub use vec2::Vec2;
