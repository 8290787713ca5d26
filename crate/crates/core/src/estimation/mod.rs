//! Estimators applied to coincidence counts: Pauli correlations, the
//! three-setting singlet-fidelity witness and its confidence level,
//! maximum-likelihood tomography, and Gaussian decay fits.

mod confidence;
mod decay_fit;
mod tomography;
mod witness;

pub use confidence::{
    confidence_f_gt_half, gaussian_confidence_tail, ConfidenceEstimate, ConfidenceOptions,
    DEFAULT_CONFIDENCE_RESAMPLES, MIN_CONFIDENCE_RESAMPLES,
};
pub use decay_fit::{fit_gaussian_decay, gaussian_decay_model, DecayDatum, DecayFit};
pub use tomography::{
    fidelity_from_rho, linear_inversion, mle_fit, mle_tomography, MleFit, TomographyOptions,
    TomographyReport, TomographyResult,
};
pub use witness::{correlation_from_counts, witness_estimate, witness_fidelity, WitnessResult};
