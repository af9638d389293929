//! Zero-freeness of Ising partition functions on bounded-degree graphs:
//! exact enumeration, tree recursions, the one-variable dynamics that governs
//! them, self-avoiding-walk trees, certificates, zero atlases and Taylor
//! approximations of `log Z`.

pub mod approx;
pub mod certify;
pub mod cli;
pub mod dynamics;
pub mod error;
pub mod graph;
pub mod partition;
pub mod sawtree;
pub mod sphere;
pub mod zeros;

pub use error::{Error, Result};
pub use graph::{BoundaryCondition, CayleyTree, Graph};
pub use partition::{ModelParams, XiPolynomial};
pub use sphere::SpherePoint;
