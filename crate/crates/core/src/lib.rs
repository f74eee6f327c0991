//! Volumes of tetrahedra carrying cross-ratio structures.
//!
//! The crate covers ideal hyperbolic tetrahedra and spherical CR tetrahedra
//! in one framework:
//!
//! - [`dilog`]: the Bloch-Wigner dilogarithm `D` and the Lobachevsky function.
//! - [`crstruct`]: cross-ratio structures on one tetrahedron, their volume
//!   and the two branches of the hyperbolic variety.
//! - [`crgeom`]: Heisenberg-model invariants of points on `S^3` (Cartan
//!   invariant, Koranyi-Reimann cross-ratio, per-vertex cross-ratios) and the
//!   coboundary identity for the volume.
//! - [`pentad`]: five-point configurations, their compatibility equations and
//!   the five-term relation for the volume.
//! - [`triangulation`]: triangulations with per-simplex structures, gluing
//!   checks, total volume and the 2-3 Pachner move.
//! - [`records`]: the JSON file schemas shared with the command-line tool.
//!
//! ```
//! use crvolume_core::{bloch_wigner_value, CrossRatioStructure, ComplexValue};
//!
//! let w = ComplexValue::from_polar(1.0, std::f64::consts::PI / 6.0);
//! let s = CrossRatioStructure::hyperbolic_lift(w, w).unwrap();
//! assert!((s.volume() - bloch_wigner_value(w * w)).abs() < 1e-12);
//! ```

pub mod crgeom;
pub mod crstruct;
pub mod dilog;
pub mod error;
pub mod pentad;
pub mod records;
pub mod sampling;
pub mod scalar;
pub mod triangulation;

/// The universal scalar: a complex number in double precision.
pub type ComplexValue = num_complex::Complex64;

pub use crgeom::{CRConfiguration, CartanInvariant, HeisenbergPoint, NullLift};
pub use crstruct::{BranchClass, CrossRatioStructure, SimplexOrdering, TriangleShape, VertexLabel};
pub use dilog::{bloch_wigner, bloch_wigner_value, lobachevsky, DilogResult, ExtendedComplex};
pub use error::{Error, Result};
pub use pentad::{ColumnQuintuple, FivePointCoordinates};
pub use triangulation::{ComplianceReport, CrossRatioAssignment, Triangulation};

/// Default tolerance for compatibility and branch checks.
pub const DEFAULT_TOLERANCE: f64 = 1e-9;
