use std::collections::HashMap;

use rayon::prelude::*;

use super::grid::build_grid;
use super::quantile::quantile_type7_counts;
use super::sampler::{draw_counts, SampleStreams, SamplingPath, SimulatedSample};
use crate::error::{Error, Result};
use crate::types::{BinStats, GridSpec, Interval, Kappa, PercentileTable, StatBand};

/// Number of c_exp bins (1% steps).
pub const DEFAULT_BINS: usize = 100;

/// Bins with fewer usable samples than this carry no band.
pub const MIN_BIN_POPULATION: u64 = 1000;

const CELLS_PER_CHUNK: usize = 2048;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Statistic {
    CObs,
    Kappa,
}

#[derive(Clone, Debug)]
pub struct SimOptions {
    pub path: SamplingPath,
    /// Worker threads; `None` uses the global rayon pool. Never affects results.
    pub threads: Option<usize>,
    pub bins: usize,
    pub min_population: u64,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self {
            path: SamplingPath::CountLevel,
            threads: None,
            bins: DEFAULT_BINS,
            min_population: MIN_BIN_POPULATION,
        }
    }
}

/// Index of the bin `[k/bins, (k+1)/bins)` holding `c`; the last bin is closed at 1.
pub fn bin_index(c: f64, bins: usize) -> usize {
    let b = bins as f64;
    let mut k = ((c * b).floor().max(0.0) as usize).min(bins - 1);
    // c·bins can land just below an integer when c is a bin edge
    while k + 1 < bins && (k + 1) as f64 / b <= c {
        k += 1;
    }
    while k > 0 && k as f64 / b > c {
        k -= 1;
    }
    k
}

/// Band of `stat` in the bin containing `c_exp`, or `None` for an empty bin.
pub fn band_lookup(table: &PercentileTable, stat: Statistic, c_exp: f64) -> Result<Option<Interval<f64>>> {
    if !(0.0..=1.0).contains(&c_exp) {
        return Err(Error::domain("c_exp", c_exp, "[0, 1]"));
    }
    if table.bins.is_empty() {
        return Err(Error::EmptyInput("percentile table has no bins"));
    }
    let bin = &table.bins[bin_index(c_exp, table.bins.len())];
    Ok(match stat {
        Statistic::CObs => bin.c_obs.band,
        Statistic::Kappa => bin.kappa.band,
    })
}

/// Fixed-point scale for moment sums; integer sums keep them independent of
/// the order in which partial results are merged.
const MOMENT_SCALE: f64 = (1u64 << 40) as f64;

/// First and second moments of (kappa, c_exp) over non-degenerate samples.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct NullMoments {
    pub count: u64,
    sum_k: i128,
    sum_c: i128,
    sum_kk: i128,
    sum_cc: i128,
    sum_kc: i128,
}

impl NullMoments {
    fn fixed(x: f64) -> i128 {
        (x * MOMENT_SCALE).round() as i128
    }

    pub fn push(&mut self, kappa: f64, c_exp: f64) {
        self.count += 1;
        self.sum_k += Self::fixed(kappa);
        self.sum_c += Self::fixed(c_exp);
        self.sum_kk += Self::fixed(kappa * kappa);
        self.sum_cc += Self::fixed(c_exp * c_exp);
        self.sum_kc += Self::fixed(kappa * c_exp);
    }

    fn merge(&mut self, other: &Self) {
        self.count += other.count;
        self.sum_k += other.sum_k;
        self.sum_c += other.sum_c;
        self.sum_kk += other.sum_kk;
        self.sum_cc += other.sum_cc;
        self.sum_kc += other.sum_kc;
    }

    fn mean_of(&self, sum: i128) -> f64 {
        sum as f64 / MOMENT_SCALE / self.count as f64
    }

    pub fn mean_kappa(&self) -> f64 {
        self.mean_of(self.sum_k)
    }

    pub fn mean_c_exp(&self) -> f64 {
        self.mean_of(self.sum_c)
    }

    /// Pearson correlation between kappa and c_exp.
    pub fn correlation(&self) -> f64 {
        let (mk, mc) = (self.mean_kappa(), self.mean_c_exp());
        let cov = self.mean_of(self.sum_kc) - mk * mc;
        let vk = self.mean_of(self.sum_kk) - mk * mk;
        let vc = self.mean_of(self.sum_cc) - mc * mc;
        cov / (vk * vc).sqrt()
    }
}

#[derive(Clone, Debug)]
pub struct SimulationOutput {
    pub table: PercentileTable,
    pub moments: NullMoments,
}

#[derive(Clone, Debug)]
struct BinAcc {
    // indexed by equal-response count
    c_obs: Vec<u64>,
    // keyed by the bit pattern of kappa
    kappa: HashMap<u64, u64>,
    dropped: u64,
}

#[derive(Clone, Debug)]
struct Acc {
    bins: Vec<BinAcc>,
    moments: NullMoments,
}

impl Acc {
    fn new(bins: usize, n: usize) -> Self {
        Self {
            bins: vec![
                BinAcc {
                    c_obs: vec![0; n + 1],
                    kappa: HashMap::new(),
                    dropped: 0,
                };
                bins
            ],
            moments: NullMoments::default(),
        }
    }

    fn push(&mut self, s: &SimulatedSample) {
        let idx = bin_index(s.c_exp_hat, self.bins.len());
        let bin = &mut self.bins[idx];
        bin.c_obs[s.counts.equal] += 1;
        match s.kappa_hat {
            Kappa::Value(k) => {
                // fold -0.0 into 0.0 so equal values share a key
                let k = k + 0.0;
                *bin.kappa.entry(k.to_bits()).or_insert(0) += 1;
                self.moments.push(k, s.c_exp_hat);
            }
            Kappa::Undefined => bin.dropped += 1,
        }
    }

    fn merge(mut self, mut other: Self) -> Self {
        for (mine, theirs) in self.bins.iter_mut().zip(other.bins.iter_mut()) {
            for (a, b) in mine.c_obs.iter_mut().zip(&theirs.c_obs) {
                *a += b;
            }
            if mine.kappa.len() < theirs.kappa.len() {
                std::mem::swap(&mut mine.kappa, &mut theirs.kappa);
            }
            for (k, c) in theirs.kappa.drain() {
                *mine.kappa.entry(k).or_insert(0) += c;
            }
            mine.dropped += theirs.dropped;
        }
        self.moments.merge(&other.moments);
        self
    }
}

struct Sweep<'a> {
    spec: &'a GridSpec,
    grid: Vec<f64>,
    streams: SampleStreams,
    path: SamplingPath,
}

impl<'a> Sweep<'a> {
    fn new(spec: &'a GridSpec, path: SamplingPath) -> Result<Self> {
        Ok(Self {
            grid: build_grid(spec)?,
            spec,
            streams: SampleStreams::new(spec.seed),
            path,
        })
    }

    fn cells(&self) -> usize {
        self.grid.len() * self.grid.len()
    }

    fn sample(&self, cell: usize, rep: usize) -> Result<SimulatedSample> {
        let k = self.grid.len();
        let (p_i, p_j) = (self.grid[cell / k], self.grid[cell % k]);
        let mut rng = self.streams.stream(cell as u64, rep as u64);
        let n = self.spec.n_trials;
        let counts = draw_counts(p_i, p_j, n, self.path, &mut rng);
        let stats = counts.statistics::<f64>()?;
        Ok(SimulatedSample {
            p_i_true: p_i,
            p_j_true: p_j,
            p_i_hat: stats.p_i,
            p_j_hat: stats.p_j,
            c_exp_hat: stats.c_exp,
            c_obs_hat: stats.c_obs,
            kappa_hat: stats.kappa,
            counts,
        })
    }
}

/// Visits every simulated sample in (cell, repetition) order, single-threaded.
/// Produces exactly the samples [`run_simulation_with`] aggregates.
pub fn for_each_sample<F>(spec: &GridSpec, path: SamplingPath, mut visit: F) -> Result<()>
where
    F: FnMut(usize, usize, &SimulatedSample),
{
    let sweep = Sweep::new(spec, path)?;
    for cell in 0..sweep.cells() {
        for rep in 0..spec.reps_per_cell {
            visit(cell, rep, &sweep.sample(cell, rep)?);
        }
    }
    Ok(())
}

pub fn run_simulation(spec: &GridSpec) -> Result<PercentileTable> {
    Ok(run_simulation_with(spec, &SimOptions::default())?.table)
}

/// Simulates the whole grid and reduces it to a percentile table.
///
/// Bins are summed as integer histograms, so the table is bit-identical for
/// any thread count.
pub fn run_simulation_with(spec: &GridSpec, opts: &SimOptions) -> Result<SimulationOutput> {
    if opts.bins == 0 {
        return Err(Error::InvalidSpec("bin count must be positive".into()));
    }
    let sweep = Sweep::new(spec, opts.path)?;
    let acc = match opts.threads {
        Some(threads) => rayon::ThreadPoolBuilder::new()
            .num_threads(threads.max(1))
            .build()
            .map_err(|e| Error::Invariant(format!("thread pool: {e}")))?
            .install(|| accumulate(&sweep, opts.bins)),
        None => accumulate(&sweep, opts.bins),
    }?;
    let table = finish(spec, opts, &acc)?;
    Ok(SimulationOutput {
        table,
        moments: acc.moments,
    })
}

fn accumulate(sweep: &Sweep<'_>, bins: usize) -> Result<Acc> {
    let cells = sweep.cells();
    let chunks = cells.div_ceil(CELLS_PER_CHUNK);
    let n = sweep.spec.n_trials;
    (0..chunks)
        .into_par_iter()
        .try_fold(
            || Acc::new(bins, n),
            |mut acc, chunk| {
                let end = ((chunk + 1) * CELLS_PER_CHUNK).min(cells);
                for cell in chunk * CELLS_PER_CHUNK..end {
                    for rep in 0..sweep.spec.reps_per_cell {
                        acc.push(&sweep.sample(cell, rep)?);
                    }
                }
                Ok(acc)
            },
        )
        .try_reduce(|| Acc::new(bins, n), |a, b| Ok(a.merge(b)))
}

fn finish(spec: &GridSpec, opts: &SimOptions, acc: &Acc) -> Result<PercentileTable> {
    let (q_lo, q_hi) = spec.quantile_pair;
    let n = spec.n_trials as f64;
    let width = 1.0 / opts.bins as f64;
    let band = |values: &[(f64, u64)], count: u64| -> Result<Option<Interval<f64>>> {
        if count < opts.min_population || count == 0 {
            return Ok(None);
        }
        Interval::new(
            quantile_type7_counts(values, q_lo)?,
            quantile_type7_counts(values, q_hi)?,
        )
        .map(Some)
    };

    let mut bins = Vec::with_capacity(opts.bins);
    for (k, b) in acc.bins.iter().enumerate() {
        let c_obs_values: Vec<(f64, u64)> = b
            .c_obs
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(e, &c)| (e as f64 / n, c))
            .collect();
        let c_obs_count: u64 = b.c_obs.iter().sum();

        let mut kappa_values: Vec<(f64, u64)> =
            b.kappa.iter().map(|(&bits, &c)| (f64::from_bits(bits), c)).collect();
        kappa_values.sort_by(|a, b| a.0.total_cmp(&b.0));
        let kappa_count: u64 = kappa_values.iter().map(|v| v.1).sum();

        bins.push(BinStats {
            lo: k as f64 * width,
            hi: (k + 1) as f64 * width,
            c_obs: StatBand {
                count: c_obs_count,
                dropped: 0,
                band: band(&c_obs_values, c_obs_count)?,
            },
            kappa: StatBand {
                count: kappa_count,
                dropped: b.dropped,
                band: band(&kappa_values, kappa_count)?,
            },
        });
    }
    Ok(PercentileTable {
        spec: spec.clone(),
        bin_width: width,
        min_population: opts.min_population,
        bins,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::consistency::{bounds_cobs, bounds_kappa};

    fn tiny() -> GridSpec {
        GridSpec::paper_160().with_axis(50).with_reps(2).with_seed(11)
    }

    #[test]
    fn bin_edges() {
        assert_eq!(bin_index(0.0, 100), 0);
        assert_eq!(bin_index(0.29, 100), 29);
        assert_eq!(bin_index(0.57, 100), 57);
        assert_eq!(bin_index(0.009999, 100), 0);
        assert_eq!(bin_index(0.01, 100), 1);
        assert_eq!(bin_index(1.0, 100), 99);
        for k in 0..100 {
            let edge = k as f64 / 100.0;
            assert_eq!(bin_index(edge, 100), k, "edge {edge}");
        }
    }

    #[test]
    fn tiny_run_shape() {
        let out = run_simulation_with(&tiny(), &SimOptions::default()).unwrap();
        let t = &out.table;
        assert_eq!(t.bins.len(), 100);
        assert_eq!(t.total_samples(), 50 * 50 * 2);
        assert!(t.degenerate_samples() > 0, "grid corners produce degenerate pairs");
        for b in &t.bins {
            for s in [b.c_obs, b.kappa] {
                if let Some(band) = s.band {
                    assert!(band.lo <= band.hi);
                    assert!(s.count >= MIN_BIN_POPULATION);
                } else {
                    assert!(s.count < MIN_BIN_POPULATION);
                }
            }
        }
        // bins below c_exp = 0.5 hold only pairs with opposite-side accuracies
        assert!(t.bins[..50].iter().map(|b| b.c_obs.count).sum::<u64>() > 0);
    }

    #[test]
    fn tiny_run_kappa_band_flares_at_high_cexp() {
        let spec = GridSpec::paper_160().with_axis(50).with_reps(100).with_seed(11);
        let t = run_simulation(&spec).unwrap();
        let width = |c: f64| band_lookup(&t, Statistic::Kappa, c).unwrap().map(|b| b.width());
        let mid = width(0.55).expect("populated middle bin");
        let high = width(0.95).expect("populated high bin");
        assert!(high > mid, "kappa band should widen towards c_exp = 1: {mid} vs {high}");
        let c_mid = band_lookup(&t, Statistic::CObs, 0.55).unwrap().unwrap().width();
        let c_high = band_lookup(&t, Statistic::CObs, 0.95).unwrap().unwrap().width();
        assert!(c_high < c_mid, "c_obs band narrows towards c_exp = 1: {c_mid} vs {c_high}");
    }

    #[test]
    fn thread_count_does_not_change_table() {
        let one = run_simulation_with(&tiny(), &SimOptions { threads: Some(1), ..Default::default() }).unwrap();
        let three = run_simulation_with(&tiny(), &SimOptions { threads: Some(3), ..Default::default() }).unwrap();
        assert_eq!(one.table, three.table);
        assert_eq!(one.moments, three.moments);
        let again = run_simulation(&tiny()).unwrap();
        assert_eq!(one.table, again);
    }

    #[test]
    fn samples_respect_analytical_bounds() {
        let mut n = 0;
        for_each_sample(&tiny(), SamplingPath::CountLevel, |_, _, s| {
            n += 1;
            assert!(bounds_cobs(s.c_exp_hat).unwrap().contains_approx(s.c_obs_hat, 1e-12));
            if let Kappa::Value(k) = s.kappa_hat {
                assert!(bounds_kappa(s.c_exp_hat).unwrap().contains_approx(k, 1e-9));
            }
        })
        .unwrap();
        assert_eq!(n, 5000);
    }

    #[test]
    fn visitor_matches_aggregate() {
        let spec = tiny();
        let mut count = [0u64; 100];
        for_each_sample(&spec, SamplingPath::CountLevel, |_, _, s| {
            count[bin_index(s.c_exp_hat, 100)] += 1;
        })
        .unwrap();
        let t = run_simulation(&spec).unwrap();
        for (b, c) in t.bins.iter().zip(count) {
            assert_eq!(b.c_obs.count, c);
        }
    }

    #[test]
    fn lookup_errors_and_empty_bins() {
        let t = run_simulation(&tiny()).unwrap();
        assert!(band_lookup(&t, Statistic::Kappa, 1.5).is_err());
        let empty = t.bins.iter().position(|b| b.kappa.band.is_none()).unwrap();
        let c = (empty as f64 + 0.5) / 100.0;
        assert_eq!(band_lookup(&t, Statistic::Kappa, c).unwrap(), None);
    }

    #[test]
    fn moments_correlation_of_known_data() {
        let mut m = NullMoments::default();
        for i in 0..100 {
            let x = i as f64 / 100.0;
            m.push(0.5 * x - 0.1, x);
        }
        assert!((m.correlation() - 1.0).abs() < 1e-9);
        assert!((m.mean_c_exp() - 0.495).abs() < 1e-12);
    }
}
