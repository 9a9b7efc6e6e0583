//! Domain types shared across the crate.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{DuplicateRows, Error, Result};
use crate::scalar::Scalar;

macro_rules! string_id {
    ($(#[$meta:meta])* $name:ident, $what:literal) => {
        $(#[$meta])*
        #[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(try_from = "String", into = "String")]
        pub struct $name(String);

        impl $name {
            pub fn new(id: impl Into<String>) -> Result<Self> {
                let id = id.into();
                if id.is_empty() {
                    return Err(Error::InvalidId(concat!($what, " must be non-empty").into()));
                }
                Ok(Self(id))
            }

            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl TryFrom<String> for $name {
            type Error = Error;

            fn try_from(id: String) -> Result<Self> {
                Self::new(id)
            }
        }

        impl From<$name> for String {
            fn from(id: $name) -> String {
                id.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }
    };
}

string_id!(
    /// Opaque observer identifier (human subject, model name, ...).
    ObserverId,
    "observer id"
);
string_id!(
    /// Opaque trial (stimulus) identifier. Carries no ordering semantics.
    TrialId,
    "trial id"
);

/// One observer's correctness verdict on one trial.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResponseRecord {
    pub observer: ObserverId,
    pub trial: TrialId,
    pub is_correct: bool,
}

/// Binary outcomes of several observers on one shared, complete set of trials.
///
/// Rows are observers and columns are trials. Both axes are kept in
/// lexicographic order so that every downstream output is deterministic.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawAligned")]
pub struct AlignedOutcomes {
    observers: Vec<ObserverId>,
    trials: Vec<TrialId>,
    outcomes: Vec<Vec<bool>>,
}

#[derive(Deserialize)]
struct RawAligned {
    observers: Vec<ObserverId>,
    trials: Vec<TrialId>,
    outcomes: Vec<Vec<bool>>,
}

impl TryFrom<RawAligned> for AlignedOutcomes {
    type Error = Error;

    fn try_from(raw: RawAligned) -> Result<Self> {
        Self::new(raw.observers, raw.trials, raw.outcomes)
    }
}

impl AlignedOutcomes {
    /// Builds a matrix from explicit rows, then sorts both axes canonically.
    pub fn new(
        observers: Vec<ObserverId>,
        trials: Vec<TrialId>,
        outcomes: Vec<Vec<bool>>,
    ) -> Result<Self> {
        if trials.is_empty() {
            return Err(Error::EmptyInput("no trials"));
        }
        if observers.is_empty() {
            return Err(Error::EmptyInput("no observers"));
        }
        if outcomes.len() != observers.len() {
            return Err(Error::LengthMismatch {
                left: observers.len(),
                right: outcomes.len(),
            });
        }
        if let Some(row) = outcomes.iter().find(|row| row.len() != trials.len()) {
            return Err(Error::LengthMismatch {
                left: trials.len(),
                right: row.len(),
            });
        }
        if let Some(dup) = first_duplicate(&observers) {
            return Err(Error::InvalidId(format!("observer `{dup}` listed twice")));
        }
        if let Some(dup) = first_duplicate(&trials) {
            return Err(Error::InvalidId(format!("trial `{dup}` listed twice")));
        }

        let mut trial_order: Vec<usize> = (0..trials.len()).collect();
        trial_order.sort_by(|&a, &b| trials[a].cmp(&trials[b]));
        let mut observer_order: Vec<usize> = (0..observers.len()).collect();
        observer_order.sort_by(|&a, &b| observers[a].cmp(&observers[b]));

        let sorted_rows = observer_order
            .iter()
            .map(|&o| trial_order.iter().map(|&t| outcomes[o][t]).collect())
            .collect();
        Ok(Self {
            observers: observer_order.iter().map(|&o| observers[o].clone()).collect(),
            trials: trial_order.iter().map(|&t| trials[t].clone()).collect(),
            outcomes: sorted_rows,
        })
    }

    /// Builds the matrix from per-trial records, requiring every observer to
    /// have exactly one record for every trial seen in the input.
    pub fn from_records(records: &[ResponseRecord]) -> Result<Self> {
        let mut cells: BTreeMap<(&ObserverId, &TrialId), bool> = BTreeMap::new();
        for rec in records {
            if cells.insert((&rec.observer, &rec.trial), rec.is_correct).is_some() {
                return Err(Error::Duplicates(vec![DuplicateRows {
                    observer: rec.observer.to_string(),
                    trial: rec.trial.to_string(),
                    locations: Vec::new(),
                }]));
            }
        }
        let observers: BTreeSet<&ObserverId> = records.iter().map(|r| &r.observer).collect();
        let trials: BTreeSet<&TrialId> = records.iter().map(|r| &r.trial).collect();

        let mut rows = Vec::with_capacity(observers.len());
        for &obs in &observers {
            let mut row = Vec::with_capacity(trials.len());
            for &trial in &trials {
                match cells.get(&(obs, trial)) {
                    Some(&v) => row.push(v),
                    None => {
                        return Err(Error::MissingTrial {
                            observer: obs.to_string(),
                            trial: trial.to_string(),
                        })
                    }
                }
            }
            rows.push(row);
        }
        Self::new(
            observers.into_iter().cloned().collect(),
            trials.into_iter().cloned().collect(),
            rows,
        )
    }

    pub fn observers(&self) -> &[ObserverId] {
        &self.observers
    }

    pub fn trials(&self) -> &[TrialId] {
        &self.trials
    }

    pub fn n_trials(&self) -> usize {
        self.trials.len()
    }

    pub fn rows(&self) -> &[Vec<bool>] {
        &self.outcomes
    }

    pub fn index_of(&self, observer: &ObserverId) -> Result<usize> {
        self.observers
            .binary_search(observer)
            .map_err(|_| Error::UnknownObserver(observer.to_string()))
    }

    pub fn row(&self, observer: &ObserverId) -> Result<&[bool]> {
        Ok(&self.outcomes[self.index_of(observer)?])
    }

    pub fn correct_count(&self, index: usize) -> usize {
        self.outcomes[index].iter().filter(|&&v| v).count()
    }

    /// Flattens the matrix back into records, in canonical order.
    pub fn to_records(&self) -> Vec<ResponseRecord> {
        self.observers
            .iter()
            .zip(&self.outcomes)
            .flat_map(|(obs, row)| {
                self.trials.iter().zip(row).map(move |(trial, &v)| ResponseRecord {
                    observer: obs.clone(),
                    trial: trial.clone(),
                    is_correct: v,
                })
            })
            .collect()
    }
}

fn first_duplicate<T: Ord>(items: &[T]) -> Option<&T> {
    let mut seen = BTreeSet::new();
    items.iter().find(|item| !seen.insert(*item))
}

/// Accuracies of two observers.
///
/// `n` is the number of trials the accuracies were estimated from, or `None`
/// when they are supplied analytically.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AccuracyPair<T> {
    pub p_i: T,
    pub p_j: T,
    pub n: Option<usize>,
}

impl<T: Scalar> AccuracyPair<T> {
    pub fn new(p_i: T, p_j: T) -> Result<Self> {
        let pair = Self { p_i, p_j, n: None };
        pair.validate()?;
        Ok(pair)
    }

    /// Accuracies estimated as `correct / n`.
    pub fn from_counts(correct_i: usize, correct_j: usize, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptyInput("zero trials"));
        }
        if correct_i > n || correct_j > n {
            return Err(Error::domain("correct count", correct_i.max(correct_j), "[0, n]"));
        }
        let n_t = T::from_count(n);
        Ok(Self {
            p_i: T::from_count(correct_i) / n_t,
            p_j: T::from_count(correct_j) / n_t,
            n: Some(n),
        })
    }

    pub fn validate(&self) -> Result<()> {
        if !self.p_i.is_fraction() {
            return Err(Error::domain("p_i", self.p_i, "[0, 1]"));
        }
        if !self.p_j.is_fraction() {
            return Err(Error::domain("p_j", self.p_j, "[0, 1]"));
        }
        if self.n == Some(0) {
            return Err(Error::EmptyInput("zero trials"));
        }
        Ok(())
    }
}

/// Cohen's kappa, or `Undefined` when the expected overlap is exactly one.
///
/// Serialized as a number, or `null` when undefined.
#[derive(Clone, Copy, Debug, PartialEq, Deserialize)]
#[serde(from = "Option<T>")]
pub enum Kappa<T> {
    Value(T),
    Undefined,
}

impl<T: Copy> Kappa<T> {
    pub fn value(self) -> Option<T> {
        match self {
            Kappa::Value(v) => Some(v),
            Kappa::Undefined => None,
        }
    }

    pub fn is_undefined(&self) -> bool {
        matches!(self, Kappa::Undefined)
    }
}

impl<T: Serialize> Serialize for Kappa<T> {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Kappa::Value(v) => serializer.serialize_some(v),
            Kappa::Undefined => serializer.serialize_none(),
        }
    }
}

impl<T> From<Option<T>> for Kappa<T> {
    fn from(v: Option<T>) -> Self {
        v.map_or(Kappa::Undefined, Kappa::Value)
    }
}

impl<T> From<Kappa<T>> for Option<T> {
    fn from(k: Kappa<T>) -> Self {
        match k {
            Kappa::Value(v) => Some(v),
            Kappa::Undefined => None,
        }
    }
}

/// Overlap statistics for one observer pair.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyResult<T> {
    pub pair: (ObserverId, ObserverId),
    /// Number of trials.
    pub n: usize,
    /// Trials on which both observers were correct or both were wrong.
    pub equal: usize,
    /// Correct-response counts of the two observers.
    pub correct: (usize, usize),
    pub accuracies: (T, T),
    pub c_obs: T,
    pub c_exp: T,
    pub kappa: Kappa<T>,
}

impl<T> ConsistencyResult<T> {
    pub fn is_self_pair(&self) -> bool {
        self.pair.0 == self.pair.1
    }
}

/// Closed interval `[lo, hi]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval<T> {
    pub lo: T,
    pub hi: T,
}

impl<T: PartialOrd + Copy + fmt::Debug> Interval<T> {
    pub fn new(lo: T, hi: T) -> Result<Self> {
        if lo <= hi {
            Ok(Self { lo, hi })
        } else {
            Err(Error::Invariant(format!("interval bounds out of order: [{lo:?}, {hi:?}]")))
        }
    }

    pub fn contains(&self, x: T) -> bool {
        self.lo <= x && x <= self.hi
    }
}

impl Interval<f64> {
    /// Containment with an absolute slack on both ends.
    pub fn contains_approx(&self, x: f64, tol: f64) -> bool {
        self.lo - tol <= x && x <= self.hi + tol
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

/// Configuration of the accuracy grid for the null-hypothesis simulation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    /// Grid points per accuracy axis; the grid has `axis_points²` cells.
    pub axis_points: usize,
    pub reps_per_cell: usize,
    /// Fraction of axis points placed in each of the two tails.
    pub tail_fraction: f64,
    /// Width of each tail region at the ends of `[0, 1]`.
    pub tail_width: f64,
    pub n_trials: usize,
    pub seed: u64,
    /// Lower and upper quantile probabilities of the band.
    pub quantile_pair: (f64, f64),
}

pub const DEFAULT_SEED: u64 = 20_200_707;

impl GridSpec {
    /// Full-size grid: 4200 × 4200 cells, five repetitions, 66% of the axis
    /// points within 0.15 of either end.
    pub fn paper(n_trials: usize) -> Self {
        Self {
            axis_points: 4200,
            reps_per_cell: 5,
            tail_fraction: 0.33,
            tail_width: 0.15,
            n_trials,
            seed: DEFAULT_SEED,
            quantile_pair: (0.025, 0.975),
        }
    }

    pub fn paper_160() -> Self {
        Self::paper(160)
    }

    pub fn paper_1280() -> Self {
        Self::paper(1280)
    }

    pub fn with_axis(mut self, axis_points: usize) -> Self {
        self.axis_points = axis_points;
        self
    }

    pub fn with_reps(mut self, reps: usize) -> Self {
        self.reps_per_cell = reps;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn total_samples(&self) -> u64 {
        (self.axis_points as u64).pow(2) * self.reps_per_cell as u64
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidSpec(msg));
        if self.axis_points == 0 {
            return bad("axis_points must be positive".into());
        }
        if self.reps_per_cell == 0 {
            return bad("reps_per_cell must be positive".into());
        }
        if self.n_trials == 0 {
            return bad("n_trials must be positive".into());
        }
        if self.n_trials > u32::MAX as usize {
            return bad(format!("n_trials = {} is too large", self.n_trials));
        }
        if !(self.tail_width > 0.0 && self.tail_width < 0.5) {
            return bad(format!("tail_width = {} must lie in (0, 0.5)", self.tail_width));
        }
        if !(self.tail_fraction >= 0.0 && self.tail_fraction <= 0.5) {
            return bad(format!("tail_fraction = {} must lie in [0, 0.5]", self.tail_fraction));
        }
        let (lo, hi) = self.quantile_pair;
        if !(0.0..=1.0).contains(&lo) || !(0.0..=1.0).contains(&hi) || lo > hi {
            return bad(format!("quantile pair ({lo}, {hi}) must satisfy 0 <= lo <= hi <= 1"));
        }
        Ok(())
    }
}

impl Default for GridSpec {
    fn default() -> Self {
        Self::paper_160()
    }
}

/// Quantile band of one statistic within one c_exp bin.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StatBand {
    /// Samples that entered the quantile computation.
    pub count: u64,
    /// Degenerate samples left out (undefined kappa).
    pub dropped: u64,
    /// `None` when the bin is below the population threshold.
    pub band: Option<Interval<f64>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BinStats {
    pub lo: f64,
    pub hi: f64,
    pub c_obs: StatBand,
    pub kappa: StatBand,
}

/// Binned null-distribution quantiles of c_obs and kappa, indexed by c_exp.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PercentileTable {
    pub spec: GridSpec,
    pub bin_width: f64,
    pub min_population: u64,
    pub bins: Vec<BinStats>,
}

impl PercentileTable {
    pub fn n_trials(&self) -> usize {
        self.spec.n_trials
    }

    pub fn total_samples(&self) -> u64 {
        self.bins.iter().map(|b| b.c_obs.count).sum()
    }

    pub fn degenerate_samples(&self) -> u64 {
        self.bins.iter().map(|b| b.kappa.dropped).sum()
    }
}
