//! Frequency estimation by Ramsey spectroscopy with uncorrelated and GHZ
//! probes under single-atom dephasing.
//!
//! * [`probe`]: closed-form outcome probabilities and a master-equation
//!   cross-check.
//! * [`fisher`]: Fisher information and Cramér–Rao bounds, including the
//!   optimal interrogation time under dephasing.
//! * [`bayes`]: grid posterior, MAP estimate, 68.27% credible half-width and
//!   ambiguity detection.
//! * [`sampler`]: seeded binomial and expected-count records.
//! * [`schemes`]: the geometric GHZ ladder, uncorrelated+GHZ combinations,
//!   their brute-force optimizer and phase feedback.

pub mod bayes;
pub mod error;
pub mod fisher;
pub mod probe;
pub mod sampler;
pub mod schemes;

pub use bayes::{
    MeasurementRecord, PosteriorGrid, PrecisionReport, PriorWindow, CREDIBLE_MASS,
    DEFAULT_GRID_POINTS, MIN_GRID_POINTS,
};
pub use error::{Error, Result};
pub use fisher::{
    crb_uncertainty, fisher_information, minimum_uncertainty_closed_form, optimal_operating_point,
    CrbQuery, FisherInfo, OperatingPoint,
};
pub use probe::{
    lindblad_ramsey_oracle, lindblad_ramsey_state, p_excited, p_ground, Correlation,
    DensityMatrix2, ProbePulseConfig,
};
pub use sampler::{expected_record, sample_record, TrialSeed};
pub use schemes::{
    combination_plan, evaluate_plan, evaluate_plan_on, feedback_phase, geometric_ladder,
    largest_ladder_within, optimize_combination, plan_posterior, quadrature_phase, Block,
    CombinationChoice, EvalMode, FeedbackPhase, SchemeParams, SchemePlan, DEFAULT_N_E_MAX,
};
