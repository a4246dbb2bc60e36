//! Ray-driven and pixel-driven discretizations of the 2-D parallel-beam
//! Radon transform and its backprojection.
//!
//! The operators are matrix-free: each entry of the system matrix is a
//! closed-form weight evaluated on the fly. Brute-force oracles, analytic
//! phantoms and error metrics support convergence experiments and a
//! self-verification suite.

pub mod error;
pub mod geometry;
pub mod metrics;
pub mod operators;
pub mod oracle;
pub mod phantoms;
pub mod sweep;
pub mod verify;
pub mod weights;

pub use error::{GeometryError, MetricsError, OperatorError, PhantomError};
pub use geometry::{
    make_params, AngleSetKind, DiscretizationParams, Image, ImageGrid, Sinogram, SinogramGrid,
};
pub use metrics::{error_report, image_relative_error, ErrorReport};
pub use operators::{assemble_dense, back_project, forward_project, DenseOperatorPair, IndexRange};
pub use phantoms::{analytic_sinogram, constant_sinogram, rasterize, Ellipse, EllipsePhantom, RasterMode};
pub use weights::WeightKind;
