//! Plot-ready analysis artifacts: scatter data, group summaries, accuracy
//! tables and confusion matrices.

mod format;
mod table_file;

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use serde::{Deserialize, Serialize};

pub use format::{format_float, round_sig};
pub use table_file::{read_table, write_table};

use crate::consistency::{bounds_cobs, bounds_kappa, group_mean_ci, PairwiseMatrix};
use crate::error::{Error, Result};
use crate::ingest::RawTrialRow;
use crate::nullsim::{band_lookup, Statistic};
use crate::types::{AlignedOutcomes, Interval, Kappa, ObserverId, PercentileTable};

/// Separator between the two labels of a pair group.
pub const GROUP_SEPARATOR: &str = "–";

/// Slack for checking that emitted points respect the analytical bounds.
const FEASIBILITY_TOL: f64 = 1e-9;

/// One observer pair in the observed-vs-expected and kappa plots.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScatterPoint {
    pub observer_a: ObserverId,
    pub observer_b: ObserverId,
    pub group: String,
    pub n: usize,
    pub c_exp: f64,
    pub c_obs: f64,
    pub kappa: Kappa<f64>,
    /// Null-hypothesis kappa band at this pair's c_exp.
    pub band: Option<Interval<f64>>,
}

pub fn group_label(a: &str, b: &str) -> String {
    let (x, y) = if a <= b { (a, b) } else { (b, a) };
    format!("{x}{GROUP_SEPARATOR}{y}")
}

/// One point per unordered observer pair (self-pairs excluded), labelled with
/// the pair's group and, when a table is given, the kappa band at its c_exp.
pub fn scatter_report(
    matrix: &PairwiseMatrix<f64>,
    groups: &BTreeMap<ObserverId, String>,
    table: Option<&PercentileTable>,
) -> Result<Vec<ScatterPoint>> {
    for obs in matrix.observers() {
        if !groups.contains_key(obs) {
            return Err(Error::MissingGroup(obs.to_string()));
        }
    }
    let mut points = Vec::new();
    for cell in matrix.unique_pairs() {
        if let Some(t) = table {
            if t.n_trials() != cell.n {
                return Err(Error::TableMismatch {
                    table: t.n_trials(),
                    data: cell.n,
                });
            }
        }
        check_feasible(cell.c_exp, cell.c_obs, cell.kappa)?;
        let (a, b) = &cell.pair;
        let band = match table {
            Some(t) => band_lookup(t, Statistic::Kappa, cell.c_exp)?,
            None => None,
        };
        points.push(ScatterPoint {
            observer_a: a.clone(),
            observer_b: b.clone(),
            group: group_label(&groups[a], &groups[b]),
            n: cell.n,
            c_exp: cell.c_exp,
            c_obs: cell.c_obs,
            kappa: cell.kappa,
            band,
        });
    }
    Ok(points)
}

fn check_feasible(c_exp: f64, c_obs: f64, kappa: Kappa<f64>) -> Result<()> {
    if !bounds_cobs(c_exp)?.contains_approx(c_obs, FEASIBILITY_TOL) {
        return Err(Error::Invariant(format!("c_obs = {c_obs} infeasible at c_exp = {c_exp}")));
    }
    if let Kappa::Value(k) = kappa {
        if !bounds_kappa(c_exp)?.contains_approx(k, FEASIBILITY_TOL) {
            return Err(Error::Invariant(format!("kappa = {k} infeasible at c_exp = {c_exp}")));
        }
    }
    Ok(())
}

/// Mean kappa of one group with its 95% interval. Fields are absent when the
/// group has fewer than two defined kappas.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub mean_kappa: Option<f64>,
    pub ci_lo: Option<f64>,
    pub ci_hi: Option<f64>,
    /// Pairs with a defined kappa.
    pub count: usize,
    pub excluded_undefined: usize,
}

impl GroupSummary {
    pub fn is_insufficient(&self) -> bool {
        self.count < 2
    }
}

pub fn group_summary(points: &[ScatterPoint]) -> Result<BTreeMap<String, GroupSummary>> {
    let mut by_group: BTreeMap<&str, (Vec<f64>, usize)> = BTreeMap::new();
    for p in points {
        let entry = by_group.entry(&p.group).or_default();
        match p.kappa {
            Kappa::Value(k) => entry.0.push(k),
            Kappa::Undefined => entry.1 += 1,
        }
    }
    by_group
        .into_iter()
        .map(|(group, (kappas, excluded))| {
            let summary = match kappas.len() {
                0 | 1 => GroupSummary {
                    mean_kappa: kappas.first().copied(),
                    ci_lo: None,
                    ci_hi: None,
                    count: kappas.len(),
                    excluded_undefined: excluded,
                },
                _ => {
                    let (mean, ci) = group_mean_ci(&kappas, 0.95)?;
                    GroupSummary {
                        mean_kappa: Some(mean),
                        ci_lo: Some(ci.lo),
                        ci_hi: Some(ci.hi),
                        count: kappas.len(),
                        excluded_undefined: excluded,
                    }
                }
            };
            Ok((group.to_owned(), summary))
        })
        .collect()
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Normalization {
    #[default]
    None,
    Row,
}

/// Response counts per (expected, response) category pair of one observer.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub observer: ObserverId,
    pub categories: Vec<String>,
    /// Rows are expected categories, columns are responses.
    pub counts: Vec<Vec<u64>>,
    pub normalization: Normalization,
}

impl ConfusionMatrix {
    /// Cell values under the matrix's normalization. Empty rows stay zero.
    pub fn values(&self) -> Vec<Vec<f64>> {
        self.counts
            .iter()
            .map(|row| {
                let total: u64 = row.iter().sum();
                row.iter()
                    .map(|&c| match self.normalization {
                        Normalization::None => c as f64,
                        Normalization::Row if total == 0 => 0.0,
                        Normalization::Row => c as f64 / total as f64,
                    })
                    .collect()
            })
            .collect()
    }
}

/// Confusion matrix of `observer` over the categories it saw or answered.
pub fn confusion(
    rows: &[RawTrialRow],
    observer: &ObserverId,
    normalization: Normalization,
) -> Result<ConfusionMatrix> {
    let mine: Vec<&RawTrialRow> = rows.iter().filter(|r| r.observer_id == observer.as_str()).collect();
    if mine.is_empty() {
        return Err(Error::UnknownObserver(observer.to_string()));
    }
    let mut pairs = Vec::with_capacity(mine.len());
    for r in &mine {
        match (&r.expected, &r.response) {
            (Some(e), Some(resp)) => pairs.push((e.trim(), resp.trim())),
            _ => {
                return Err(Error::Parse {
                    line: r.origin.line,
                    message: format!("row for `{observer}` lacks expected/response categories"),
                })
            }
        }
    }
    let categories: Vec<String> = pairs
        .iter()
        .flat_map(|&(e, r)| [e, r])
        .collect::<BTreeSet<_>>()
        .into_iter()
        .map(str::to_owned)
        .collect();
    let index = |c: &str| categories.binary_search_by(|x| x.as_str().cmp(c)).unwrap();
    let mut counts = vec![vec![0u64; categories.len()]; categories.len()];
    for (e, r) in pairs {
        counts[index(e)][index(r)] += 1;
    }
    Ok(ConfusionMatrix {
        observer: observer.clone(),
        categories,
        counts,
        normalization,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AccuracyRow {
    pub observer: ObserverId,
    pub n: usize,
    pub correct: usize,
    pub accuracy: f64,
}

pub fn accuracy_table(outcomes: &AlignedOutcomes) -> Vec<AccuracyRow> {
    let n = outcomes.n_trials();
    outcomes
        .observers()
        .iter()
        .enumerate()
        .map(|(i, obs)| {
            let correct = outcomes.correct_count(i);
            AccuracyRow {
                observer: obs.clone(),
                n,
                correct,
                accuracy: correct as f64 / n as f64,
            }
        })
        .collect()
}

fn csv_writer<W: Write>(out: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out)
}

fn flush<W: Write>(mut w: csv::Writer<W>) -> Result<()> {
    w.flush().map_err(|e| Error::io("<report output>", e))
}

/// `observer_a,observer_b,group,n,c_exp,c_obs,kappa,band_lo,band_hi`
pub fn write_scatter_csv<W: Write>(points: &[ScatterPoint], out: W) -> Result<()> {
    let mut w = csv_writer(out);
    w.write_record(["observer_a", "observer_b", "group", "n", "c_exp", "c_obs", "kappa", "band_lo", "band_hi"])?;
    for p in points {
        w.write_record([
            p.observer_a.as_str(),
            p.observer_b.as_str(),
            &p.group,
            &p.n.to_string(),
            &format_float(p.c_exp),
            &format_float(p.c_obs),
            &p.kappa.value().map_or_else(|| "undefined".to_owned(), format_float),
            &format::format_opt(p.band.map(|b| b.lo)),
            &format::format_opt(p.band.map(|b| b.hi)),
        ])?;
    }
    flush(w)
}

/// `{group: {mean_kappa, ci_lo, ci_hi, count, excluded_undefined}}`, keys sorted.
pub fn write_summary_json<W: Write>(summary: &BTreeMap<String, GroupSummary>, mut out: W) -> Result<()> {
    let rounded: BTreeMap<&String, GroupSummary> = summary
        .iter()
        .map(|(g, s)| {
            (
                g,
                GroupSummary {
                    mean_kappa: s.mean_kappa.map(round_sig),
                    ci_lo: s.ci_lo.map(round_sig),
                    ci_hi: s.ci_hi.map(round_sig),
                    ..s.clone()
                },
            )
        })
        .collect();
    serde_json::to_writer_pretty(&mut out, &rounded)?;
    writeln!(out).map_err(|e| Error::io("<report output>", e))
}

/// `observer,n,correct,accuracy`
pub fn write_accuracy_csv<W: Write>(rows: &[AccuracyRow], out: W) -> Result<()> {
    let mut w = csv_writer(out);
    w.write_record(["observer", "n", "correct", "accuracy"])?;
    for r in rows {
        w.write_record([
            r.observer.as_str(),
            &r.n.to_string(),
            &r.correct.to_string(),
            &format_float(r.accuracy),
        ])?;
    }
    flush(w)
}

/// Confusion matrices keyed by observer, with both raw counts and the
/// normalized values.
pub fn write_confusion_json<W: Write>(matrices: &[ConfusionMatrix], mut out: W) -> Result<()> {
    #[derive(Serialize)]
    struct Entry<'a> {
        categories: &'a [String],
        counts: &'a [Vec<u64>],
        normalization: Normalization,
        values: Vec<Vec<f64>>,
    }
    let map: BTreeMap<&str, Entry<'_>> = matrices
        .iter()
        .map(|m| {
            let values = m.values().into_iter().map(|r| r.into_iter().map(round_sig).collect()).collect();
            (
                m.observer.as_str(),
                Entry {
                    categories: &m.categories,
                    counts: &m.counts,
                    normalization: m.normalization,
                    values,
                },
            )
        })
        .collect();
    serde_json::to_writer_pretty(&mut out, &map)?;
    writeln!(out).map_err(|e| Error::io("<report output>", e))
}
