//! Certification of high-dimensional two-photon entanglement in
//! Laguerre-Gauss spatial modes.
//!
//! The crate covers the whole chain from a model of the two-photon state to a
//! certified lower bound on its Schmidt number:
//!
//! - [`modes`]: LG mode indexing, field evaluation and numerical overlaps.
//! - [`states`]: perfectly correlated and general two-photon density matrices.
//! - [`measurement`]: two-dimensional subspace Pauli measurements, visibilities
//!   and coincidence-count simulation / estimation.
//! - [`witness`]: the summed-visibility witness, its Schmidt-number thresholds,
//!   Monte-Carlo uncertainty, subset optimization and robustness studies.
//! - [`oracle`]: brute-force full-matrix evaluation used as ground truth at
//!   small dimension.

pub mod error;
pub mod measurement;
pub mod modes;
pub mod oracle;
pub mod rng;
pub mod states;
pub mod witness;

pub use error::{Error, Result};
pub use measurement::{Basis, CoincidenceDataset, Outcome, SubspaceSetting, VisibilityRecord};
pub use modes::{ModeIndex, ModeSet};
pub use states::{CorrelatedState, GeneralTwoPhotonState, State, TwoPhotonState};
pub use witness::{VisibilityTable, WitnessReport};

pub use num_complex::Complex64;
