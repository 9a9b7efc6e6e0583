//! Error consistency: do two decision makers get the same trials wrong?
//!
//! Given trial-by-trial correct/incorrect outcomes of several observers, this
//! crate computes the observed and chance-expected overlap of their outcomes,
//! Cohen's kappa on that overlap, the analytically attainable range of both,
//! and Monte Carlo percentile bands for independent observers.
//!
//! The core statistics are generic over the scalar type; the aliases below
//! fix the common choices.

pub mod consistency;
pub mod error;
pub mod ingest;
pub mod nullsim;
pub mod report;
pub mod scalar;
pub mod types;

pub use error::{Error, Result};
pub use scalar::{Real, Scalar};
pub use types::{
    AccuracyPair, AlignedOutcomes, BinStats, ConsistencyResult, GridSpec, Interval, Kappa, ObserverId,
    PercentileTable, ResponseRecord, StatBand, TrialId,
};

/// Exact rational used for overlap statistics without rounding.
pub type Exact = num_rational::Ratio<i64>;

pub type Consistency64 = ConsistencyResult<f64>;
pub type Consistency32 = ConsistencyResult<f32>;
pub type ExactConsistency = ConsistencyResult<Exact>;
pub type Interval64 = Interval<f64>;
pub type Kappa64 = Kappa<f64>;
pub type ExactKappa = Kappa<Exact>;
pub type AccuracyPair64 = AccuracyPair<f64>;
pub type PairwiseMatrix64 = consistency::PairwiseMatrix<f64>;
pub type ExactPairwiseMatrix = consistency::PairwiseMatrix<Exact>;
