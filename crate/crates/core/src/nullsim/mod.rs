//! Monte Carlo null distribution of c_obs and kappa for independent observers.
//!
//! A grid of true accuracy pairs is simulated several times per cell; the
//! resulting samples are binned by their estimated c_exp and each bin is
//! summarised by a quantile band.

mod cache;
mod grid;
mod quantile;
mod sampler;
mod simulate;

pub use cache::TableCache;
pub use grid::build_grid;
pub use quantile::{quantile_type7, quantile_type7_counts};
pub use sampler::{draw_counts, simulate_pair, SampleStreams, SamplingPath, SimulatedSample};
pub use simulate::{
    band_lookup, bin_index, for_each_sample, run_simulation, run_simulation_with, NullMoments,
    SimOptions, SimulationOutput, Statistic, DEFAULT_BINS, MIN_BIN_POPULATION,
};
