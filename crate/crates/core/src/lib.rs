//! Photonic graph-state generation from a single quantum emitter.
//!
//! The crate models redundantly encoded graph states (logical vertices made
//! of several photons in a GHZ block), the emitter sequences that produce
//! them, linear-optic fusion gates as graph rewrites, and closed-form and
//! Monte Carlo success probabilities for the resulting protocols. Every
//! rewrite can be checked against the dense statevector in [`oracle`].

pub mod analytics;
pub mod clifford;
pub mod emitter;
pub mod error;
pub mod fusion;
pub mod graph;
pub mod montecarlo;
pub mod oracle;
pub mod redundant;
pub mod table;
pub mod verify;

pub use clifford::{LocalClifford, Pauli};
pub use emitter::{GenerationPlan, Instruction, Step, TimeModel};
pub use error::{Error, Result};
pub use fusion::{
    boosted_fuse, Fuse, FusionKind, FusionOutcome, FusionRecord, FusionType, Sampler,
};
pub use graph::{GraphState, MeasureKind, QubitId};
pub use redundant::{MeasureReport, RedundantGraph, VertexId};
