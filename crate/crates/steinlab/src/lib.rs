//! Shrinkage estimation in p-dimensional Euclidean space: the James–Stein
//! family, the exact geometry of where shrinkage helps or hurts, closed-form
//! Pitman-closeness probabilities, and a reproducible Monte Carlo harness
//! for the Stein effect and its reverse.
//!
//! The central objects are an observation `X ~ N_p(delta, sigma^2 I)`, a
//! shrinkage target `delta0`, and estimators of the form
//! `gamma * (X - delta0) + delta0`. Shrinking toward a fixed (or
//! independently chosen) target improves on `X` in dimension three and up;
//! shrinking toward a target chosen *from the data* — e.g. symmetrically
//! distributed about `X` — is more likely to hurt than help. Both directions
//! are covered here by exact predicates ([`geometry`]), exact probabilities
//! ([`dist`]), and seed-stable simulation ([`montecarlo`]).
//!
//! ```
//! use steinlab::point::Point;
//! use steinlab::estimators;
//!
//! let x = Point::new(vec![2.0, 0.0, 0.0]).unwrap();
//! let target = Point::new(vec![0.0, 0.0, 0.0]).unwrap();
//! let shrunk = estimators::js_plus(&x, &target, 1.0).unwrap();
//! assert_eq!(shrunk.as_slice(), &[1.5, 0.0, 0.0]);
//! ```

// Domain checks are written `!(x > 0.0)` on purpose: NaN must fail them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dist;
pub mod estimators;
mod error;
pub mod geometry;
pub mod guide;
pub mod montecarlo;
pub mod point;
pub mod rng;
pub mod selfcheck;
pub mod sum;
pub mod symmetry;

pub use error::{Error, Result};
pub use point::{Point, Problem};
pub use rng::SeedSpec;
