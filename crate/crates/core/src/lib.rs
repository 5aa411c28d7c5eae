//! Numerical workbench for Finsler metric-measure geometry.

#[global_allocator]
static GLOBAL: mimalloc::MiMalloc = mimalloc::MiMalloc;

pub mod comparison;
pub mod curvature;
pub mod directions;
pub mod error;
pub mod functionals;
pub mod jets;
pub mod linalg;
pub mod measure;
pub mod metric;
pub mod ode;
pub mod polar;
pub mod quad;
pub mod report;
pub mod spectral;
pub mod weighted;

pub use error::{Error, Result};
pub use jets::{Jet, MultiIndex, Scalar};
pub use measure::MeasureSpec;
pub use metric::{Family, MetricSpec};
