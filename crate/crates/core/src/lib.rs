//! Curve-family moduli, Semmes pencils, and Poincaré/BV diagnostics on
//! finite discrete metric measure spaces.
//!
//! The toolkit represents a space as a connected weighted multigraph with a
//! vertex measure (balls, function averages) and an edge measure (line
//! integrals, densities). On top of that it computes:
//!
//! - p-moduli of curve families (LP duality at p = 1, first-order at p > 1,
//!   closed form at p = ∞), with optimal densities, dual curve weights, and
//!   certified duality gaps;
//! - upper/lower certificates for the sequence-relaxed approximate modulus;
//! - Semmes pencils of curves: probability weights on quasiconvex curves
//!   obtained by normalizing the dual of a Riesz-weighted 1-modulus, with
//!   the pencil inequality verified against edge sets;
//! - Poincaré-type constants, Riesz potentials, Hajłasz gradients, and the
//!   pencil-to-Poincaré derivation as a numerical pipeline;
//! - discrete total variation, BV-upper-bound audits, and a
//!   partition-of-unity smoothing estimate.

pub mod am;
pub mod bv;
pub mod curve;
pub mod error;
pub mod field;
pub mod gen;
pub mod modulus;
pub mod pencil;
pub mod poincare;
pub mod rng;
pub mod simplex;
pub mod space;
pub mod suite;

pub use error::{MmsError, Result};
