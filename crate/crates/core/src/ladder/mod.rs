//! Renewal functions of ladder height processes and `h`-transform conditioned expectations.

mod conditioned;
mod doob;
mod renewal;
mod spitzer;

pub use conditioned::{
  conditioned_expectation, conditioned_expectation_with_table, default_renewal_grid, path_summaries, PathFunctional,
  PathSummary, WeightedEstimate, MIN_ESS,
};
pub use doob::{conditioned_path, ConditionedPath};
pub use renewal::{
  normalized_renewal, renewal_function, renewal_function_with, RenewalOptions, RenewalTable, TAG_RENEWAL,
};
pub use spitzer::{mean_ladder_height, prob_nonpositive, LadderHeightMean};
