//! Stochastic block models: likelihoods, belief propagation, fitting and
//! model selection.

mod bp;
mod degree;
mod exhaustive;
mod fit;
mod likelihood;
mod mdl;
mod model;
mod sample;

pub use bp::{
    bp_sweep, estimate_parameters, BeliefPropagation, BpOptions, BpOutcome, MessageState,
    NonEdges, PairGraph, EMPTY_BLOCK_MASS,
};
pub use degree::apply_degree_correction;
pub use exhaustive::{fit_exhaustive, MAX_LABELINGS};
pub use fit::{fit, fit_best_k, fit_with_init, FitOptions, FitResult, FitSummary, RestartDiagnostics};
pub use likelihood::{
    bernoulli_log_likelihood, ln_factorial_sum, log_likelihood, partition_log_prior,
    poisson_log_likelihood,
};
pub use mdl::{description_length, ln_multiset};
pub use model::{
    Affinity, BlockCounts, BlockModel, DegreeCorrection, Family, Partition, BERNOULLI_CLAMP,
    POISSON_FLOOR,
};
pub use sample::sample_graph;
