//! Unitarily invariant valuations on convex bodies in ℂⁿ: exact polytope
//! geometry, Grassmannian Monte Carlo, and numerical checks of the
//! integral-geometric identities relating them.

pub mod bodies;
pub mod error;
pub mod estimate;
pub mod families;
pub mod fit;
pub mod geomlin;
pub mod intrinsic;
pub mod kinematics;
pub mod stream;
pub mod valuations;

pub use error::{Error, Result};
pub use estimate::{Estimate, CONVENTION};
pub use stream::RandomStream;
