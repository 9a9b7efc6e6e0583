//! Overlap statistics, error consistency (Cohen's kappa on correct/incorrect
//! agreement), feasibility bounds and group-mean confidence intervals.
//!
//! Everything that needs only field arithmetic is generic over [`Scalar`], so
//! it can be evaluated exactly over `Ratio<i64>`. The bounds that involve a
//! square root require [`Real`].

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::scalar::{Real, Scalar};
use crate::types::{AccuracyPair, AlignedOutcomes, ConsistencyResult, Interval, Kappa, ObserverId};

/// Two-sided 95% standard-normal critical value.
pub const Z_95: f64 = 1.959964;

/// Integer summary of two aligned outcome vectors.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct OverlapCounts {
    pub n: usize,
    pub correct_i: usize,
    pub correct_j: usize,
    /// Trials with identical outcomes (both correct or both wrong).
    pub equal: usize,
}

/// Statistics derived from [`OverlapCounts`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OverlapStats<T> {
    pub p_i: T,
    pub p_j: T,
    pub c_obs: T,
    pub c_exp: T,
    pub kappa: Kappa<T>,
}

impl OverlapCounts {
    pub fn from_vectors(a: &[bool], b: &[bool]) -> Result<Self> {
        check_vectors(a, b)?;
        let mut counts = Self {
            n: a.len(),
            correct_i: 0,
            correct_j: 0,
            equal: 0,
        };
        for (&x, &y) in a.iter().zip(b) {
            counts.correct_i += x as usize;
            counts.correct_j += y as usize;
            counts.equal += (x == y) as usize;
        }
        Ok(counts)
    }

    /// Both observers were always right, or both were always wrong. The
    /// expected overlap is then exactly one and kappa is undefined.
    pub fn is_degenerate(&self) -> bool {
        self.correct_i == self.correct_j && (self.correct_i == 0 || self.correct_i == self.n)
    }

    pub fn statistics<T: Scalar>(&self) -> Result<OverlapStats<T>> {
        if self.n == 0 {
            return Err(Error::EmptyInput("zero trials"));
        }
        if self.correct_i > self.n || self.correct_j > self.n || self.equal > self.n {
            return Err(Error::Invariant(format!("inconsistent overlap counts {self:?}")));
        }
        let acc = AccuracyPair::<T>::from_counts(self.correct_i, self.correct_j, self.n)?;
        let c_obs = T::from_count(self.equal) / T::from_count(self.n);
        let c_exp = expected_overlap(&acc)?;
        let kappa = if self.is_degenerate() {
            Kappa::Undefined
        } else {
            match kappa(c_obs, c_exp)? {
                Kappa::Undefined => {
                    return Err(Error::Invariant(format!(
                        "c_exp rounded to 1 for non-degenerate counts {self:?}"
                    )))
                }
                k => k,
            }
        };
        Ok(OverlapStats {
            p_i: acc.p_i,
            p_j: acc.p_j,
            c_obs,
            c_exp,
            kappa,
        })
    }
}

fn check_vectors(a: &[bool], b: &[bool]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    if a.is_empty() {
        return Err(Error::EmptyInput("outcome vectors"));
    }
    Ok(())
}

/// Fraction of trials on which `a` and `b` agree (both correct or both wrong).
pub fn observed_overlap<T: Scalar>(a: &[bool], b: &[bool]) -> Result<T> {
    let counts = OverlapCounts::from_vectors(a, b)?;
    Ok(T::from_count(counts.equal) / T::from_count(counts.n))
}

/// Overlap expected from two independent observers with the given accuracies:
/// `p_i·p_j + (1 − p_i)(1 − p_j)`.
pub fn expected_overlap<T: Scalar>(p: &AccuracyPair<T>) -> Result<T> {
    p.validate()?;
    let one = T::one();
    Ok(p.p_i * p.p_j + (one - p.p_i) * (one - p.p_j))
}

/// Cohen's kappa `(c_obs − c_exp) / (1 − c_exp)`; undefined when `c_exp == 1`.
pub fn kappa<T: Scalar>(c_obs: T, c_exp: T) -> Result<Kappa<T>> {
    if !c_obs.is_fraction() {
        return Err(Error::domain("c_obs", c_obs, "[0, 1]"));
    }
    if !c_exp.is_fraction() {
        return Err(Error::domain("c_exp", c_exp, "[0, 1]"));
    }
    if c_exp == T::one() {
        return Ok(Kappa::Undefined);
    }
    Ok(Kappa::Value((c_obs - c_exp) / (T::one() - c_exp)))
}

/// Estimates both accuracies from the rows and computes c_obs, c_exp and kappa.
pub fn pair_consistency<T: Scalar>(
    outcomes: &AlignedOutcomes,
    i: &ObserverId,
    j: &ObserverId,
) -> Result<ConsistencyResult<T>> {
    let a = outcomes.row(i)?;
    let b = outcomes.row(j)?;
    let counts = OverlapCounts::from_vectors(a, b)?;
    let stats = counts.statistics::<T>()?;
    Ok(ConsistencyResult {
        pair: (i.clone(), j.clone()),
        n: counts.n,
        equal: counts.equal,
        correct: (counts.correct_i, counts.correct_j),
        accuracies: (stats.p_i, stats.p_j),
        c_obs: stats.c_obs,
        c_exp: stats.c_exp,
        kappa: stats.kappa,
    })
}

/// Consistency of every observer pair, including self-pairs on the diagonal.
///
/// Only the upper triangle is stored; `cell(i, j)` and `cell(j, i)` return the
/// same result.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairwiseMatrix<T> {
    observers: Vec<ObserverId>,
    cells: Vec<ConsistencyResult<T>>,
}

impl<T> PairwiseMatrix<T> {
    pub fn observers(&self) -> &[ObserverId] {
        &self.observers
    }

    fn offset(&self, i: usize, j: usize) -> usize {
        let (r, c) = if i <= j { (i, j) } else { (j, i) };
        let k = self.observers.len();
        // rows of the upper triangle shrink by one each
        r * k - r * r.saturating_sub(1) / 2 + c - r
    }

    pub fn cell(&self, i: usize, j: usize) -> &ConsistencyResult<T> {
        assert!(i < self.observers.len() && j < self.observers.len(), "index out of range");
        &self.cells[self.offset(i, j)]
    }

    /// Off-diagonal cells, each unordered pair once, in row-major order.
    pub fn unique_pairs(&self) -> impl Iterator<Item = &ConsistencyResult<T>> {
        self.cells.iter().filter(|c| !c.is_self_pair())
    }

    pub fn diagonal(&self) -> impl Iterator<Item = &ConsistencyResult<T>> {
        self.cells.iter().filter(|c| c.is_self_pair())
    }
}

/// Computes all unordered pairs once. Parallel over pairs; the output does not
/// depend on the number of worker threads.
pub fn pairwise_matrix<T>(outcomes: &AlignedOutcomes) -> Result<PairwiseMatrix<T>>
where
    T: Scalar + Send + Sync,
{
    let k = outcomes.observers().len();
    if k < 2 {
        return Err(Error::InsufficientData { needed: 2, got: k });
    }
    let obs = outcomes.observers();
    let pairs: Vec<(usize, usize)> = (0..k).flat_map(|i| (i..k).map(move |j| (i, j))).collect();
    let cells = pairs
        .par_iter()
        .map(|&(i, j)| pair_consistency(outcomes, &obs[i], &obs[j]))
        .collect::<Result<Vec<_>>>()?;
    Ok(PairwiseMatrix {
        observers: obs.to_vec(),
        cells,
    })
}

fn check_c_exp<T: Scalar>(c_exp: T) -> Result<()> {
    if c_exp.is_fraction() {
        Ok(())
    } else {
        Err(Error::domain("c_exp", c_exp, "[0, 1]"))
    }
}

fn half<T: Real>() -> T {
    T::from_f64_lossy(0.5)
}

fn two<T: Scalar>() -> T {
    T::one() + T::one()
}

/// Attainable range of c_obs for any pair of accuracies with this c_exp.
///
/// `[0, 1 − √(1 − 2c)]` for `c ≤ 0.5`, `[√(2c − 1), 1]` otherwise; both give
/// `[0, 1]` at exactly 0.5.
pub fn bounds_cobs<T: Real>(c_exp: T) -> Result<Interval<T>> {
    check_c_exp(c_exp)?;
    let one = T::one();
    let (lo, hi) = if c_exp <= half() {
        (T::zero(), one - (one - two::<T>() * c_exp).sqrt())
    } else {
        ((two::<T>() * c_exp - one).sqrt(), one)
    };
    Interval::new(lo, hi)
}

/// Attainable range of c_obs for fixed accuracies: `[|p_i + p_j − 1|, 1 − |p_i − p_j|]`.
pub fn bounds_cobs_from_accuracies<T: Scalar>(p: &AccuracyPair<T>) -> Result<Interval<T>> {
    p.validate()?;
    let one = T::one();
    let lo = abs(p.p_i + p.p_j - one);
    let hi = one - abs(p.p_i - p.p_j);
    // the two coincide when either accuracy is 0 or 1; rounding may cross them
    Interval::new(if lo > hi { hi } else { lo }, hi)
}

fn abs<T: Scalar>(x: T) -> T {
    if x < T::zero() {
        T::zero() - x
    } else {
        x
    }
}

/// Attainable range of kappa for this c_exp; kappa applied to the endpoints of
/// [`bounds_cobs`].
pub fn bounds_kappa<T: Real>(c_exp: T) -> Result<Interval<T>> {
    check_c_exp(c_exp)?;
    let one = T::one();
    if c_exp == one {
        return Err(Error::UndefinedKappaBounds);
    }
    let denom = one - c_exp;
    let (lo, hi) = if c_exp <= half() {
        (
            -c_exp / denom,
            (one - (one - two::<T>() * c_exp).sqrt() - c_exp) / denom,
        )
    } else {
        (((two::<T>() * c_exp - one).sqrt() - c_exp) / denom, one)
    };
    Interval::new(lo, hi)
}

/// Two-sided standard-normal critical value for a confidence level.
///
/// 0.95 maps to the fixed constant [`Z_95`].
pub fn z_value(level: f64) -> Result<f64> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::domain("confidence level", level, "(0, 1)"));
    }
    if level == 0.95 {
        return Ok(Z_95);
    }
    let normal = Normal::standard();
    Ok(normal.inverse_cdf(0.5 + level / 2.0))
}

/// Sample mean and normal-theory confidence interval `mean ± z·s/√m`, with
/// `s` the sample standard deviation (divisor `m − 1`).
pub fn group_mean_ci<T: Real>(values: &[T], level: f64) -> Result<(T, Interval<T>)> {
    let m = values.len();
    if m < 2 {
        return Err(Error::InsufficientData { needed: 2, got: m });
    }
    if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
        return Err(Error::domain("kappa", bad, "finite reals"));
    }
    let z = T::from_f64_lossy(z_value(level)?);
    let m_t = T::from_count(m);
    let mean = values.iter().fold(T::zero(), |acc, &v| acc + v) / m_t;
    let ss = values.iter().fold(T::zero(), |acc, &v| acc + (v - mean) * (v - mean));
    let sem = (ss / (m_t - T::one())).sqrt() / m_t.sqrt();
    let half_width = z * sem;
    Ok((mean, Interval::new(mean - half_width, mean + half_width)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::TrialId;
    use num_rational::Ratio;
    use proptest::prelude::*;

    fn id(s: &str) -> ObserverId {
        ObserverId::new(s).unwrap()
    }

    fn aligned(rows: &[(&str, Vec<bool>)]) -> AlignedOutcomes {
        let n = rows[0].1.len();
        AlignedOutcomes::new(
            rows.iter().map(|(o, _)| id(o)).collect(),
            (0..n).map(|t| TrialId::new(format!("t{t:04}")).unwrap()).collect(),
            rows.iter().map(|(_, r)| r.clone()).collect(),
        )
        .unwrap()
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn observed_overlap_examples() {
        let a: Vec<bool> = (0..160).map(|t| t % 3 == 0).collect();
        let not_a: Vec<bool> = a.iter().map(|v| !v).collect();
        assert_eq!(observed_overlap::<f64>(&a, &a).unwrap(), 1.0);
        assert_eq!(observed_overlap::<f64>(&a, &not_a).unwrap(), 0.0);
        let mut b = a.clone();
        for v in b.iter_mut().take(40) {
            *v = !*v;
        }
        assert_eq!(observed_overlap::<f64>(&a, &b).unwrap(), 0.75);
    }

    #[test]
    fn observed_overlap_errors() {
        assert!(matches!(
            observed_overlap::<f64>(&[true], &[true, false]),
            Err(Error::LengthMismatch { .. })
        ));
        assert!(matches!(observed_overlap::<f64>(&[], &[]), Err(Error::EmptyInput(_))));
    }

    #[test]
    fn expected_overlap_examples() {
        let e = |a, b| expected_overlap(&AccuracyPair::new(a, b).unwrap()).unwrap();
        assert_eq!(e(1.0, 1.0), 1.0);
        for x in [0.0, 0.13, 0.5, 0.77, 1.0] {
            assert_eq!(e(0.5, x), 0.5);
        }
        // 0.9·0.8 + 0.1·0.2
        assert!(close(e(0.9, 0.8), 0.74, 1e-15));
        let exact = expected_overlap(&AccuracyPair::new(Ratio::new(9, 10), Ratio::new(4, 5)).unwrap());
        assert_eq!(exact.unwrap(), Ratio::new(37i64, 50));
        assert!(expected_overlap(&AccuracyPair { p_i: 1.5, p_j: 0.2, n: None }).is_err());
    }

    #[test]
    fn kappa_examples() {
        assert_eq!(kappa(0.6, 0.6).unwrap(), Kappa::Value(0.0));
        assert_eq!(kappa(1.0, 0.74).unwrap(), Kappa::Value(1.0));
        // (0.9 − 0.74) / 0.26 = 8/13
        let k = kappa(0.9, 0.74).unwrap().value().unwrap();
        assert!(close(k, 8.0 / 13.0, 1e-12), "{k}");
        assert_eq!(
            kappa(Ratio::new(9i64, 10), Ratio::new(37, 50)).unwrap(),
            Kappa::Value(Ratio::new(8, 13))
        );
        assert_eq!(kappa(1.0, 1.0).unwrap(), Kappa::Undefined);
        assert!(kappa(-0.1, 0.5).is_err());
        assert!(kappa(0.5, 1.1).is_err());
    }

    #[test]
    fn self_pair_is_perfect() {
        let row: Vec<bool> = (0..50).map(|t| t % 4 != 0).collect();
        let m = aligned(&[("a", row.clone()), ("b", row)]);
        let r = pair_consistency::<f64>(&m, &id("a"), &id("a")).unwrap();
        assert_eq!(r.c_obs, 1.0);
        assert_eq!(r.kappa, Kappa::Value(1.0));
        assert!(r.is_self_pair());
    }

    #[test]
    fn chance_level_pair() {
        // each observer correct on half the trials, agreeing on exactly half
        let a: Vec<bool> = (0..8).map(|t| t < 4).collect();
        let b: Vec<bool> = (0..8).map(|t| t % 2 == 0).collect();
        let m = aligned(&[("a", a), ("b", b)]);
        let r = pair_consistency::<f64>(&m, &id("a"), &id("b")).unwrap();
        assert_eq!((r.c_obs, r.c_exp), (0.5, 0.5));
        assert_eq!(r.kappa, Kappa::Value(0.0));
    }

    #[test]
    fn degenerate_pair_flags_undefined() {
        let m = aligned(&[("a", vec![true; 10]), ("b", vec![true; 10])]);
        let r = pair_consistency::<f64>(&m, &id("a"), &id("b")).unwrap();
        assert_eq!(r.c_exp, 1.0);
        assert!(r.kappa.is_undefined());
        let m = aligned(&[("a", vec![false; 10]), ("b", vec![false; 10])]);
        let r = pair_consistency::<Ratio<i64>>(&m, &id("a"), &id("b")).unwrap();
        assert!(r.kappa.is_undefined());
        // one perfect and one always-wrong observer is not degenerate
        let m = aligned(&[("a", vec![true; 10]), ("b", vec![false; 10])]);
        let r = pair_consistency::<f64>(&m, &id("a"), &id("b")).unwrap();
        assert_eq!((r.c_obs, r.c_exp, r.kappa), (0.0, 0.0, Kappa::Value(0.0)));
    }

    #[test]
    fn unknown_observer() {
        let m = aligned(&[("a", vec![true]), ("b", vec![false])]);
        assert!(matches!(
            pair_consistency::<f64>(&m, &id("a"), &id("zz")),
            Err(Error::UnknownObserver(_))
        ));
    }

    #[test]
    fn exact_and_float_agree() {
        let a: Vec<bool> = (0..160).map(|t| (t * 7) % 10 < 8).collect();
        let b: Vec<bool> = (0..160).map(|t| (t * 3 + 1) % 10 < 7).collect();
        let m = aligned(&[("a", a), ("b", b)]);
        let f = pair_consistency::<f64>(&m, &id("a"), &id("b")).unwrap();
        let q = pair_consistency::<Ratio<i64>>(&m, &id("a"), &id("b")).unwrap();
        let to_f = |r: Ratio<i64>| *r.numer() as f64 / *r.denom() as f64;
        assert!(close(f.c_obs, to_f(q.c_obs), 1e-15));
        assert!(close(f.c_exp, to_f(q.c_exp), 1e-15));
        assert!(close(f.kappa.value().unwrap(), to_f(q.kappa.value().unwrap()), 1e-12));
    }

    #[test]
    fn matrix_shape_and_symmetry() {
        let rows: Vec<(String, Vec<bool>)> = (0..5)
            .map(|o| (format!("o{o}"), (0..40).map(|t| (t * (o + 2)) % 7 < 4).collect()))
            .collect();
        let refs: Vec<(&str, Vec<bool>)> = rows.iter().map(|(o, r)| (o.as_str(), r.clone())).collect();
        let m = aligned(&refs);
        let pm = pairwise_matrix::<f64>(&m).unwrap();
        assert_eq!(pm.unique_pairs().count(), 10);
        assert_eq!(pm.diagonal().count(), 5);
        for i in 0..5 {
            assert!(pm.cell(i, i).is_self_pair());
            for j in 0..5 {
                assert_eq!(pm.cell(i, j), pm.cell(j, i));
                let c = pm.cell(i, j);
                let expect = (&m.observers()[i.min(j)], &m.observers()[i.max(j)]);
                assert_eq!((&c.pair.0, &c.pair.1), expect);
            }
        }
        let two = aligned(&refs[..2]);
        assert_eq!(pairwise_matrix::<f64>(&two).unwrap().unique_pairs().count(), 1);
        let one = aligned(&refs[..1]);
        assert!(pairwise_matrix::<f64>(&one).is_err());
    }

    /// Extremes of the c_obs range over all accuracy pairs with the given
    /// expected overlap, found by sweeping p_i and solving for p_j.
    fn swept_cobs_envelope(c_exp: f64) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        let steps = 200_000;
        for s in 0..=steps {
            let p_i = s as f64 / steps as f64;
            if (2.0 * p_i - 1.0).abs() < 1e-12 {
                continue;
            }
            let p_j = (c_exp - 1.0 + p_i) / (2.0 * p_i - 1.0);
            if !(0.0..=1.0).contains(&p_j) {
                continue;
            }
            lo = lo.min((p_i + p_j - 1.0).abs());
            hi = hi.max(1.0 - (p_i - p_j).abs());
        }
        (lo, hi)
    }

    #[test]
    fn bounds_cobs_examples() {
        assert_eq!(bounds_cobs(0.5).unwrap(), Interval { lo: 0.0, hi: 1.0 });
        assert_eq!(bounds_cobs(1.0).unwrap(), Interval { lo: 1.0, hi: 1.0 });
        assert_eq!(bounds_cobs(0.0).unwrap(), Interval { lo: 0.0, hi: 0.0 });
        let b = bounds_cobs(0.74).unwrap();
        assert!(close(b.lo, 0.48f64.sqrt(), 1e-15));
        assert!(close(b.lo, 0.692820323, 1e-9));
        assert_eq!(b.hi, 1.0);
        let (lo, hi) = swept_cobs_envelope(0.74);
        assert!(close(lo, b.lo, 1e-6), "{lo}");
        assert!(close(hi, b.hi, 1e-6), "{hi}");
        let (lo, hi) = swept_cobs_envelope(0.32);
        let b = bounds_cobs(0.32).unwrap();
        assert!(close(lo, b.lo, 1e-6) && close(hi, b.hi, 1e-6), "{lo} {hi} {b:?}");
        assert!(bounds_cobs(1.01).is_err());
        assert!(bounds_cobs(f64::NAN).is_err());
    }

    #[test]
    fn branch_formulas_meet_at_half() {
        let c: f64 = 0.5;
        let lower = (0.0, 1.0 - (1.0 - 2.0 * c).sqrt());
        let upper = ((2.0 * c - 1.0).sqrt(), 1.0);
        assert!(close(lower.0, upper.0, 1e-12) && close(lower.1, upper.1, 1e-12));
        let klo = (-c / (1.0 - c), (1.0 - (1.0 - 2.0 * c).sqrt() - c) / (1.0 - c));
        let khi = (((2.0 * c - 1.0).sqrt() - c) / (1.0 - c), 1.0);
        assert!(close(klo.0, khi.0, 1e-12) && close(klo.1, khi.1, 1e-12));
    }

    /// Min and max overlap over all pairs of length-n vectors with the given
    /// correct counts, by enumerating the number of jointly correct trials.
    fn enumerated_overlap_range(n: usize, ki: usize, kj: usize) -> (usize, usize) {
        let mut range = (usize::MAX, 0);
        for both in 0..=ki.min(kj) {
            if ki + kj > n + both {
                continue;
            }
            let equal = n + 2 * both - ki - kj;
            range = (range.0.min(equal), range.1.max(equal));
        }
        range
    }

    #[test]
    fn bounds_from_accuracies_examples() {
        let b = |p, q| bounds_cobs_from_accuracies(&AccuracyPair::new(p, q).unwrap()).unwrap();
        assert_eq!(b(1.0, 0.0), Interval { lo: 0.0, hi: 0.0 });
        for p in [0.0, 0.2, 0.5, 0.9] {
            let r = b(p, p);
            assert!(close(r.lo, (2.0 * p - 1.0f64).abs(), 1e-15) && r.hi == 1.0);
        }
        let r = b(0.9, 0.8);
        assert!(close(r.lo, 0.7, 1e-12) && close(r.hi, 0.9, 1e-12));
        assert_eq!(enumerated_overlap_range(10, 9, 8), (7, 9));
        let exact = bounds_cobs_from_accuracies(
            &AccuracyPair::new(Ratio::new(9i64, 10), Ratio::new(8, 10)).unwrap(),
        )
        .unwrap();
        assert_eq!((exact.lo, exact.hi), (Ratio::new(7, 10), Ratio::new(9, 10)));
    }

    #[test]
    fn bounds_kappa_examples() {
        assert_eq!(bounds_kappa(0.5).unwrap(), Interval { lo: -1.0, hi: 1.0 });
        let b = bounds_kappa(0.32).unwrap();
        assert!(close(b.lo, -8.0 / 17.0, 1e-12) && close(b.lo, -0.470588, 1e-6));
        assert!(close(b.hi, 2.0 / 17.0, 1e-12) && close(b.hi, 0.117647, 1e-6));
        let b = bounds_kappa(0.74).unwrap();
        assert!(close(b.lo, (0.48f64.sqrt() - 0.74) / 0.26, 1e-12));
        assert!(close(b.lo, -0.181460, 1e-6), "{}", b.lo);
        assert_eq!(b.hi, 1.0);
        for c in [0.32, 0.74] {
            let cb = bounds_cobs(c).unwrap();
            let k = bounds_kappa(c).unwrap();
            assert!(close(kappa(cb.lo, c).unwrap().value().unwrap(), k.lo, 1e-12));
            assert!(close(kappa(cb.hi, c).unwrap().value().unwrap(), k.hi, 1e-12));
        }
        assert!(matches!(bounds_kappa(1.0), Err(Error::UndefinedKappaBounds)));
    }

    #[test]
    fn group_ci_examples() {
        let (mean, ci) = group_mean_ci(&[0.4, 0.4, 0.4, 0.4], 0.95).unwrap();
        assert_eq!((mean, ci.lo, ci.hi), (0.4, 0.4, 0.4));
        let (mean, ci) = group_mean_ci(&[0.1, 0.2, 0.3], 0.95).unwrap();
        // s = 0.1, SEM = 0.1/√3, half width = 1.959964 · SEM
        let hw = 1.959964 * 0.1 / 3f64.sqrt();
        assert!(close(mean, 0.2, 1e-15));
        assert!(close(ci.lo, 0.2 - hw, 1e-12) && close(ci.lo, 0.086841, 1e-6), "{ci:?}");
        assert!(close(ci.hi, 0.2 + hw, 1e-12) && close(ci.hi, 0.313159, 1e-6));
        assert!(matches!(group_mean_ci(&[0.1], 0.95), Err(Error::InsufficientData { .. })));
        assert!(group_mean_ci(&[0.1, f64::NAN], 0.95).is_err());
    }

    #[test]
    fn z_values() {
        assert_eq!(z_value(0.95).unwrap(), 1.959964);
        assert!(close(z_value(0.99).unwrap(), 2.5758293035489004, 1e-9));
        assert!(close(z_value(0.9).unwrap(), 1.6448536269514722, 1e-9));
        assert!(close(z_value(0.950001).unwrap(), 1.959963984540054, 1e-4));
        assert!(z_value(1.0).is_err());
    }

    #[test]
    fn ci_width_shrinks_with_sqrt_m() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let mean_width = |m: usize, rng: &mut rand_chacha::ChaCha8Rng| {
            let reps = 400;
            (0..reps)
                .map(|_| {
                    let xs: Vec<f64> = (0..m).map(|_| rng.random::<f64>()).collect();
                    group_mean_ci(&xs, 0.95).unwrap().1.width()
                })
                .sum::<f64>()
                / reps as f64
        };
        let w100 = mean_width(100, &mut rng);
        let w400 = mean_width(400, &mut rng);
        assert!(close(w100 / w400, 2.0, 0.1), "{}", w100 / w400);
    }

    fn vectors(max_n: usize) -> impl Strategy<Value = (Vec<bool>, Vec<bool>)> {
        (1..=max_n).prop_flat_map(|n| {
            (
                proptest::collection::vec(any::<bool>(), n),
                proptest::collection::vec(any::<bool>(), n),
            )
        })
    }

    proptest! {
        #[test]
        fn overlap_inside_accuracy_bounds((a, b) in vectors(64)) {
            let counts = OverlapCounts::from_vectors(&a, &b).unwrap();
            let s = counts.statistics::<f64>().unwrap();
            let acc = AccuracyPair::new(s.p_i, s.p_j).unwrap();
            let b1 = bounds_cobs_from_accuracies(&acc).unwrap();
            prop_assert!(b1.contains_approx(s.c_obs, 1e-12));
            let b2 = bounds_cobs(s.c_exp).unwrap();
            prop_assert!(b2.contains_approx(s.c_obs, 1e-12));
            if let Kappa::Value(k) = s.kappa {
                prop_assert!(bounds_kappa(s.c_exp).unwrap().contains_approx(k, 1e-9));
            }
        }

        #[test]
        fn cexp_envelope_contains_accuracy_bounds(p in 0.0..=1.0f64, q in 0.0..=1.0f64) {
            let acc = AccuracyPair::new(p, q).unwrap();
            let c = expected_overlap(&acc).unwrap();
            let outer = bounds_cobs(c).unwrap();
            let inner = bounds_cobs_from_accuracies(&acc).unwrap();
            prop_assert!(outer.lo <= inner.lo + 1e-12 && inner.hi <= outer.hi + 1e-12);
        }

        #[test]
        fn kappa_increasing_in_cobs(c_exp in 0.0..0.999f64, x in 0.0..=1.0f64, y in 0.0..=1.0f64) {
            prop_assume!(x < y);
            let kx = kappa(x, c_exp).unwrap().value().unwrap();
            let ky = kappa(y, c_exp).unwrap().value().unwrap();
            prop_assert!(kx < ky);
        }

        #[test]
        fn kappa_bounds_are_kappa_of_cobs_bounds(c in 0.0..1.0f64) {
            let cb = bounds_cobs(c).unwrap();
            let kb = bounds_kappa(c).unwrap();
            let lo = kappa(cb.lo, c).unwrap().value().unwrap();
            let hi = kappa(cb.hi, c).unwrap().value().unwrap();
            prop_assert!((lo - kb.lo).abs() <= 1e-10 && (hi - kb.hi).abs() <= 1e-10);
        }

        #[test]
        fn swap_and_relabel_invariance((a, b) in vectors(64)) {
            let ab = OverlapCounts::from_vectors(&a, &b).unwrap().statistics::<Ratio<i64>>().unwrap();
            let ba = OverlapCounts::from_vectors(&b, &a).unwrap().statistics::<Ratio<i64>>().unwrap();
            prop_assert_eq!((ab.c_obs, ab.c_exp, ab.kappa), (ba.c_obs, ba.c_exp, ba.kappa));
            let na: Vec<bool> = a.iter().map(|v| !v).collect();
            let nb: Vec<bool> = b.iter().map(|v| !v).collect();
            let neg = OverlapCounts::from_vectors(&na, &nb).unwrap().statistics::<Ratio<i64>>().unwrap();
            let one = Ratio::from_integer(1);
            prop_assert_eq!((neg.p_i, neg.p_j), (one - ab.p_i, one - ab.p_j));
            prop_assert_eq!((neg.c_obs, neg.c_exp, neg.kappa), (ab.c_obs, ab.c_exp, ab.kappa));
        }
    }

    #[test]
    fn cexp_above_half_iff_same_side() {
        let steps = 200;
        for s in 0..=steps {
            for t in 0..=steps {
                let (p, q) = (
                    Ratio::new(s as i64, steps as i64),
                    Ratio::new(t as i64, steps as i64),
                );
                let half = Ratio::new(1, 2);
                let c = expected_overlap(&AccuracyPair::new(p, q).unwrap()).unwrap();
                let same_side = (p > half && q > half) || (p < half && q < half);
                assert_eq!(c > half, same_side, "p = {p}, q = {q}");
            }
        }
    }
}
