//! Simple closed geodesics on a hyperbolic once-punctured torus, indexed by
//! the Farey tree: traces via the Vieta recursion, lengths, the convex
//! function F, and truncated checks of the product identity and McShane's
//! identity at arbitrary precision.

pub mod cli;
pub mod error;
pub mod farey;
pub mod geometry;
pub mod identities;
pub mod output;
pub mod precision;
pub mod traces;

pub use error::{Error, Result};
pub use farey::{FareyContext, Rational};
pub use precision::{Precision, Real};
pub use traces::{BaseTriple, Branch, MarkoffTriple, Sector};
