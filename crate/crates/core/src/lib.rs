//! Homodyne tomography of single-mode optical states: data simulation,
//! kernel estimators for intensity, field, amplitude and phase, and the
//! added noise of tomographic measurement over direct detection.

mod ddouble;
pub mod direct;
pub mod error;
pub mod estimators;
pub mod homodyne;
pub mod io;
pub mod kernels;
pub mod noise;
pub mod rng;
pub mod sampling;
pub mod states;

pub use error::{Error, Result};
pub use estimators::{ComplexEstimate, Estimate};
pub use homodyne::{sample_homodyne, Dataset, QuadratureSample};
pub use kernels::Observable;
pub use noise::{NoiseComparison, Source, SweepMode};
pub use num_complex::Complex64;
pub use states::{DensityMatrix, StateSpec};
