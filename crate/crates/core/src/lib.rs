//! Riemannian geometry of the L² metric on discretized spaces of maps
//! `C^∞(M, N)`.
//!
//! The domain `(M, μ)` is a set of quadrature samples with positive weights;
//! a map is one point of `N` per sample. Every geometric object of the L²
//! metric (connector, spray, exponential map, curvature) acts sample by
//! sample through the corresponding object of the target `(N, g)`.

pub mod dynamics;
pub mod error;
pub mod integrate;
pub mod io;
pub mod manifold;
pub mod mapspace;
pub mod reparam;
pub mod sum;
pub mod transport;
pub mod verification;

pub use error::{GeomError, Result};
