//! Eye-movement biometrics: gaze preprocessing, a dilated dense-block 1D
//! convolutional embedding network trained with multi-similarity metric
//! learning, and a verification/identification evaluation toolkit.

pub mod error;
pub mod evaluation;
pub mod harness;
pub mod model;
pub mod objective;
pub mod signal;
pub mod training;

pub use error::{Error, Result};
