//! Countably generated differential spaces at desk scale.
//!
//! A differential space is a set `M` with an algebra `C` of real functions
//! closed under superposition with smooth maps and under localization. This
//! crate presents `C` by generators, evaluates its elements, classifies
//! candidate homomorphisms `C → ℝ` given by their generator values, and
//! constructs the witnesses that rule out non-evaluation homomorphisms.
//!
//! * [`smooth_fn`]: smooth maps as expression trees with exact first partials.
//! * [`carrier`]: the underlying sets and deterministic samplers.
//! * [`structure`]: generators, elements, atlases, subspaces and unions.
//! * [`spectrum`]: homomorphisms, classification and the spectrum space.
//! * [`seqspace`]: the sequence-space cutoff sum and its probes.

pub mod carrier;
mod error;
pub mod seqspace;
pub mod smooth_fn;
pub mod spectrum;
pub mod structure;

pub use error::{Error, Result};

/// Absolute tolerance for equality constraints and generator matching.
pub const EQ_TOL: f64 = 1e-9;
