//! Template-to-scan registration: spectral functional maps refined with
//! ZoomOut, as-rigid-as-possible fitting, and high-resolution augmentation
//! by global or localized subdivision.

pub mod deform;
pub mod error;
pub mod eval;
pub mod fmap;
pub mod hra;
pub mod local;
pub mod mesh;
pub mod shapes;
pub mod sparse;
pub mod spectral;
pub mod subdivision;

pub use error::{Error, ErrorCategory, Result};
pub use mesh::{BarycentricPoint, ScalarField, TriMesh, Vec3};
