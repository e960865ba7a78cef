//! Computational toolkit for compatible subconformal structures on contact
//! 5-manifolds and the dispersionless Lax pairs they carry.
//!
//! The crate is layered bottom-up:
//!
//! * [`expr`] is a small expression language with exact symbolic
//!   differentiation. Every field, jet and coefficient is an [`Expr`].
//! * [`geometry`] holds λ-polynomial vector fields, commutators, coframes,
//!   dual frames and structure constants on a single 5-dimensional chart.
//! * [`symbol`] turns a second order scalar PDE into its symbol, the
//!   characteristic distribution, the contact form and the δ-classification.
//! * [`curvature`] computes the normal lift of an α-congruence and the
//!   curvature quartic `W(λ)` whose vanishing is Frobenius integrability.
//! * [`master`] implements the normal form in Darboux coordinates
//!   `(x, y, p, q, r)` together with its Lax pair and residuals.
//! * [`lifts`] manufactures integrable structures from 3D projective
//!   structures and from para-Kähler 4-manifolds.
//! * [`harness`] reads scene files, samples points and writes reports.

pub mod curvature;
pub mod error;
pub mod expr;
pub mod geometry;
pub mod harness;
pub mod lifts;
pub mod linalg;
pub mod master;
pub mod random;
pub mod symbol;
pub mod taylor;

pub use error::{Error, Result};
pub use expr::{Environment, Expr, VariableTable};
