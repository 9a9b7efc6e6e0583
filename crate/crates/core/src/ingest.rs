//! Loading per-trial responses from CSV and aligning observers on shared trials.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::error::{DuplicateRows, Error, Result};
use crate::types::{AlignedOutcomes, ObserverId, TrialId};

/// Where a row came from.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RowOrigin {
    pub source: Option<String>,
    pub line: u64,
}

impl std::fmt::Display for RowOrigin {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match &self.source {
            Some(src) => write!(f, "{src}:{}", self.line),
            None => write!(f, "line {}", self.line),
        }
    }
}

/// One parsed input row. Carries either an explicit correctness flag or an
/// expected/response category pair (or both).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawTrialRow {
    pub observer_id: String,
    pub trial_id: String,
    pub expected: Option<String>,
    pub response: Option<String>,
    pub is_correct: Option<bool>,
    /// Columns not used by the mapping, passed through untouched.
    pub extra: BTreeMap<String, String>,
    pub origin: RowOrigin,
}

/// Declarative mapping from CSV columns onto [`RawTrialRow`] fields.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ColumnMapping {
    pub observer: String,
    pub trial: String,
    #[serde(default)]
    pub is_correct: Option<String>,
    #[serde(default)]
    pub expected: Option<String>,
    #[serde(default)]
    pub response: Option<String>,
    /// Regex applied to the trial column; capture group 1 (or the whole match)
    /// becomes the trial id. Useful when file names embed per-session prefixes.
    #[serde(default)]
    pub trial_pattern: Option<String>,
}

impl ColumnMapping {
    /// `observer_id,trial_id,is_correct` or `observer_id,trial_id,expected,response`.
    pub fn canonical() -> Self {
        Self {
            observer: "observer_id".into(),
            trial: "trial_id".into(),
            is_correct: Some("is_correct".into()),
            expected: Some("expected".into()),
            response: Some("response".into()),
            trial_pattern: None,
        }
    }

    /// Layout of the published behavioural data: one row per subject and image,
    /// with the shown category and the subject's answer.
    pub fn published_behavioral() -> Self {
        Self {
            observer: "subj".into(),
            trial: "imagename".into(),
            is_correct: None,
            expected: Some("category".into()),
            response: Some("object_response".into()),
            trial_pattern: None,
        }
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_reader(file)?)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MatchMode {
    #[default]
    Strict,
    CaseInsensitive,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AlignPolicy {
    /// Every observer must have responded to every trial.
    #[default]
    RequireComplete,
    /// Keep only trials all observers responded to.
    Intersect,
}

fn parse_bool(raw: &str) -> Option<bool> {
    match raw {
        "true" | "TRUE" | "True" => Some(true),
        "false" | "FALSE" | "False" => Some(false),
        _ => None,
    }
}

fn non_empty(field: Option<&str>) -> Option<String> {
    field.map(str::trim).filter(|s| !s.is_empty()).map(str::to_owned)
}

/// Parses a CSV stream under `mapping`. `source` labels rows in diagnostics.
pub fn parse_responses<R: Read>(
    input: R,
    mapping: &ColumnMapping,
    source: Option<&str>,
) -> Result<Vec<RawTrialRow>> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let headers = reader.headers()?.clone();
    let column = |name: &str| headers.iter().position(|h| h.trim() == name);
    let require = |name: &str| column(name).ok_or_else(|| Error::MissingColumn(name.to_owned()));

    let observer_col = require(&mapping.observer)?;
    let trial_col = require(&mapping.trial)?;
    let correct_col = mapping.is_correct.as_deref().and_then(column);
    let expected_col = mapping.expected.as_deref().and_then(column);
    let response_col = mapping.response.as_deref().and_then(column);
    let has_categories = expected_col.is_some() && response_col.is_some();
    if correct_col.is_none() && !has_categories {
        let missing = match (&mapping.is_correct, &mapping.expected, &mapping.response) {
            (Some(c), _, _) if mapping.expected.is_none() => c.clone(),
            (_, Some(e), _) if expected_col.is_none() => e.clone(),
            (_, _, Some(r)) => r.clone(),
            _ => "is_correct".to_owned(),
        };
        return Err(Error::MissingColumn(missing));
    }
    let pattern = mapping
        .trial_pattern
        .as_deref()
        .map(Regex::new)
        .transpose()
        .map_err(|e| Error::InvalidSpec(format!("trial_pattern: {e}")))?;
    let used: BTreeSet<usize> = [Some(observer_col), Some(trial_col), correct_col, expected_col, response_col]
        .into_iter()
        .flatten()
        .collect();

    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            Error::Parse {
                line,
                message: e.to_string(),
            }
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let fail = |message: String| Error::Parse { line, message };
        let origin = RowOrigin {
            source: source.map(str::to_owned),
            line,
        };

        let observer_id = non_empty(record.get(observer_col)).ok_or_else(|| fail("empty observer id".into()))?;
        let raw_trial = non_empty(record.get(trial_col)).ok_or_else(|| fail("empty trial id".into()))?;
        let trial_id = match &pattern {
            None => raw_trial,
            Some(re) => {
                let caps = re
                    .captures(&raw_trial)
                    .ok_or_else(|| fail(format!("trial `{raw_trial}` does not match trial_pattern")))?;
                caps.get(1).or_else(|| caps.get(0)).unwrap().as_str().to_owned()
            }
        };
        let is_correct = match correct_col.and_then(|c| non_empty(record.get(c))) {
            None => None,
            Some(v) => Some(parse_bool(&v).ok_or_else(|| fail(format!("`{v}` is not a boolean (true/false)")))?),
        };
        let expected = expected_col.and_then(|c| non_empty(record.get(c)));
        let response = response_col.and_then(|c| non_empty(record.get(c)));
        if is_correct.is_none() && (expected.is_none() || response.is_none()) {
            return Err(fail("row has neither is_correct nor both expected and response".into()));
        }
        let extra = headers
            .iter()
            .zip(record.iter())
            .enumerate()
            .filter(|(i, _)| !used.contains(i))
            .map(|(_, (h, v))| (h.to_owned(), v.to_owned()))
            .collect();
        rows.push(RawTrialRow {
            observer_id,
            trial_id,
            expected,
            response,
            is_correct,
            extra,
            origin,
        });
    }
    check_duplicates(&rows)?;
    Ok(rows)
}

/// Parses several files in order and merges them, checking duplicates across files.
pub fn parse_files<P: AsRef<Path>>(paths: &[P], mapping: &ColumnMapping) -> Result<Vec<RawTrialRow>> {
    let mut rows = Vec::new();
    for path in paths {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let name = path.display().to_string();
        let parsed = parse_responses(file, mapping, Some(&name)).map_err(|e| Error::InFile {
            path: name,
            error: Box::new(e),
        })?;
        rows.extend(parsed);
    }
    check_duplicates(&rows)?;
    Ok(rows)
}

fn check_duplicates(rows: &[RawTrialRow]) -> Result<()> {
    let mut seen: BTreeMap<(&str, &str), Vec<&RowOrigin>> = BTreeMap::new();
    for row in rows {
        seen.entry((&row.observer_id, &row.trial_id)).or_default().push(&row.origin);
    }
    let dups: Vec<DuplicateRows> = seen
        .into_iter()
        .filter(|(_, origins)| origins.len() > 1)
        .map(|((o, t), origins)| DuplicateRows {
            observer: o.to_owned(),
            trial: t.to_owned(),
            locations: origins.iter().map(|o| o.to_string()).collect(),
        })
        .collect();
    if dups.is_empty() {
        Ok(())
    } else {
        Err(Error::Duplicates(dups))
    }
}

/// Whether the row's response counts as correct. An explicit flag wins over
/// the category comparison; categories are compared after trimming.
pub fn derive_correctness(row: &RawTrialRow, mode: MatchMode) -> Result<bool> {
    if let Some(v) = row.is_correct {
        return Ok(v);
    }
    match (&row.expected, &row.response) {
        (Some(e), Some(r)) => {
            let (e, r) = (e.trim(), r.trim());
            Ok(match mode {
                MatchMode::Strict => e == r,
                MatchMode::CaseInsensitive => e.to_lowercase() == r.to_lowercase(),
            })
        }
        _ => Err(Error::NoCorrectness {
            observer: row.observer_id.clone(),
            trial: row.trial_id.clone(),
        }),
    }
}

/// Result of [`align`], with the bookkeeping needed to report what happened.
#[derive(Clone, Debug, PartialEq)]
pub struct Alignment {
    pub outcomes: AlignedOutcomes,
    /// Trials dropped per observer (always zero under require-complete).
    pub dropped: BTreeMap<ObserverId, usize>,
    /// Rows whose correctness came from comparing categories.
    pub derived_from_categories: usize,
    /// Rows answered `na` (lapses), counted as incorrect.
    pub na_responses: usize,
}

/// Builds the observer × trial matrix from parsed rows.
pub fn align(rows: &[RawTrialRow], policy: AlignPolicy, mode: MatchMode) -> Result<Alignment> {
    check_duplicates(rows)?;
    let mut by_observer: BTreeMap<ObserverId, BTreeMap<TrialId, bool>> = BTreeMap::new();
    let mut derived = 0;
    let mut na = 0;
    for row in rows {
        let correct = derive_correctness(row, mode)?;
        if row.is_correct.is_none() {
            derived += 1;
            if row.response.as_deref().is_some_and(|r| r.trim().eq_ignore_ascii_case("na")) {
                na += 1;
            }
        }
        by_observer
            .entry(ObserverId::new(row.observer_id.clone())?)
            .or_default()
            .insert(TrialId::new(row.trial_id.clone())?, correct);
    }
    if by_observer.len() < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            got: by_observer.len(),
        });
    }

    let all_trials: BTreeSet<&TrialId> = by_observer.values().flat_map(|m| m.keys()).collect();
    let kept: Vec<TrialId> = match policy {
        AlignPolicy::RequireComplete => {
            for (obs, trials) in &by_observer {
                if let Some(missing) = all_trials.iter().find(|t| !trials.contains_key(**t)) {
                    return Err(Error::MissingTrial {
                        observer: obs.to_string(),
                        trial: missing.to_string(),
                    });
                }
            }
            all_trials.into_iter().cloned().collect()
        }
        AlignPolicy::Intersect => all_trials
            .into_iter()
            .filter(|t| by_observer.values().all(|m| m.contains_key(*t)))
            .cloned()
            .collect(),
    };
    if kept.is_empty() {
        return Err(Error::EmptyIntersection);
    }

    let dropped = by_observer
        .iter()
        .map(|(o, m)| (o.clone(), m.len() - kept.len()))
        .collect();
    let outcomes = by_observer
        .values()
        .map(|m| kept.iter().map(|t| m[t]).collect())
        .collect();
    Ok(Alignment {
        outcomes: AlignedOutcomes::new(by_observer.keys().cloned().collect(), kept, outcomes)?,
        dropped,
        derived_from_categories: derived,
        na_responses: na,
    })
}

/// Writes the matrix as canonical `observer_id,trial_id,is_correct` CSV.
pub fn write_canonical_csv<W: Write>(outcomes: &AlignedOutcomes, out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(["observer_id", "trial_id", "is_correct"])?;
    for rec in outcomes.to_records() {
        w.write_record([
            rec.observer.as_str(),
            rec.trial.as_str(),
            if rec.is_correct { "true" } else { "false" },
        ])?;
    }
    w.flush().map_err(|e| Error::io("<csv output>", e))?;
    Ok(())
}
