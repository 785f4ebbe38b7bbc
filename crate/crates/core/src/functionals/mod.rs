//! The functionals `H` whose lower tails are studied, one family per regime.

mod critical;
mod dense;
mod params;
mod score;
mod sparse;

pub use critical::{
    contact_h, contact_h_refined, critical_cutoff_h, critical_knn_h, critical_knn_scores, CriticalKind, Quadrature, ScaleFn,
};
pub use dense::{dense_empirical_measure, dense_h, dense_locations, dense_scores, DiscreteMeasure};
pub use params::RegimeParams;
pub use score::{
    clique_count_score, edge_length_score, validate_score, CliqueCount, ComponentScore, ConditionCheck, EdgeLength,
    LocalConfig, PositivityEstimate, ScoreSpec, ScoreValidation,
};
pub use sparse::{rescaled, sparse_h, sparse_h_tilde};
