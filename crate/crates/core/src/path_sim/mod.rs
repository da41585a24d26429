//! Path simulation on time grids, exponential functionals, running extrema and first passage.

mod bounds;
mod config;
mod path;
mod sampler;

pub use bounds::{functional_bounds, FunctionalBounds};
pub use config::SimConfig;
pub(crate) use config::steps_to;
pub use path::{
  exp_functional, exp_functional_inf, exp_functional_inf_samples, hitting_time, read_path_dump, simulate_path,
  simulate_path_indexed, simulate_paths, write_path_dump, ExpFunctionalSample, InfiniteHorizon, PathDump, PathSample,
  Truncation, TAG_PATHS,
};
pub use sampler::{IncrementSampler, SmallJumpInfo, MAX_LARGE_JUMP_RATE, SMALL_JUMP_VARIANCE_FRACTION};
