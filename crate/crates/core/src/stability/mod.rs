//! Empirical partial-stability assessment, converse Lyapunov certificates,
//! and perturbation envelopes.

pub mod ensemble;
pub mod envelope;
pub mod fit;
pub mod lyapunov;
pub mod report;
pub mod threshold;

pub use ensemble::{
    assess_partial_stability, EnsembleSpec, MemberOutcome, StabilityAssessment, Verdict,
};
pub use envelope::{check_perturbation_envelope, EnvelopeReport, PerturbationSpec};
pub use fit::{fit_exponential_decay, fit_log_series, DecayFit, FitError};
pub use lyapunov::{
    build_converse_lyapunov, verify_lyapunov_certificate, CertificateReport, GenericSystem,
    LyapunovEstimate, LyapunovEvaluator, LyapunovGrid,
};
pub use report::StabilityReport;
pub use threshold::{find_epsilon_threshold, ThresholdError, ThresholdScan};
