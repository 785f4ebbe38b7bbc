//! Local modifications that repair a configuration where the functional
//! misbehaves, together with the probability bounds that make them cheap:
//! point insertion for the critical functionals and box resampling for
//! the sparse and dense ones.

mod bound;
mod contact;
mod dense;
mod knn;
mod report;
mod sparse;

pub use bound::{
    sprinkle_event, sprinkle_log_lower_bound, sprinkle_prob_lower_bound, SprinkleEventOutcome, SprinkleEventParts,
};
pub use contact::{contact_grid, contact_sprinkle, ContactGrid, ContactSprinkle};
pub use dense::{
    bounded_radius, dense_bounded_all, dense_bounded_check, dense_error_terms, dense_goodness_estimate, dense_grid,
    dense_sequential_resample, goodness_slack, sequential_success_bound, shell_width, DenseErrorTerms, DenseResample,
    GoodnessEstimate,
};
pub use knn::{distinguished_subset, find_large_radius_nodes, knn_sprinkle, large_radius_count_bound, KnnSprinkle};
pub use report::{BoxSource, BoxState, SprinkleReport, BOX_STATE_COLUMNS};
pub use sparse::{
    crowding_radius, resample_success_floor, resample_success_threshold, sparse_bad_box_bound, sparse_bad_boxes,
    sparse_box_targets, sparse_grid, sparse_resample, SparseResample,
};
