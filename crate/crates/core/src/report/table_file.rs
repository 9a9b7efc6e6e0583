//! Text format for percentile tables.
//!
//! ```text
//! # errcons percentile table v1
//! # n_trials=160
//! # ... (remaining GridSpec fields and table metadata)
//! bin_lo,bin_hi,stat,count,dropped,q_lo,q_hi
//! 0,0.01,c_obs,5321,0,0.0125,0.05
//! 0,0.01,kappa,5321,0,-0.03,0.04
//! ```
//!
//! Empty bins leave `q_lo` and `q_hi` blank.

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Read, Write};

use super::format::{format_float, format_opt};
use crate::error::{Error, Result};
use crate::nullsim::SamplingPath;
use crate::types::{BinStats, GridSpec, Interval, PercentileTable, StatBand};

const MAGIC: &str = "# errcons percentile table v1";
const COLUMNS: &str = "bin_lo,bin_hi,stat,count,dropped,q_lo,q_hi";

pub fn write_table<W: Write>(table: &PercentileTable, path: SamplingPath, mut out: W) -> Result<()> {
    let s = &table.spec;
    let io = |e| Error::io("<table output>", e);
    let mut header = vec![
        ("n_trials", s.n_trials.to_string()),
        ("axis_points", s.axis_points.to_string()),
        ("reps_per_cell", s.reps_per_cell.to_string()),
        ("tail_fraction", format_float(s.tail_fraction)),
        ("tail_width", format_float(s.tail_width)),
        ("seed", s.seed.to_string()),
        ("quantile_lo", format_float(s.quantile_pair.0)),
        ("quantile_hi", format_float(s.quantile_pair.1)),
        ("bin_width", format_float(table.bin_width)),
        ("bins", table.bins.len().to_string()),
        ("min_population", table.min_population.to_string()),
        ("sampling", path.name().to_string()),
    ];
    header.push(("total_samples", table.total_samples().to_string()));
    header.push(("degenerate_samples", table.degenerate_samples().to_string()));

    writeln!(out, "{MAGIC}").map_err(io)?;
    for (k, v) in header {
        writeln!(out, "# {k}={v}").map_err(io)?;
    }
    writeln!(out, "{COLUMNS}").map_err(io)?;
    for b in &table.bins {
        for (name, stat) in [("c_obs", &b.c_obs), ("kappa", &b.kappa)] {
            writeln!(
                out,
                "{},{},{name},{},{},{},{}",
                format_float(b.lo),
                format_float(b.hi),
                stat.count,
                stat.dropped,
                format_opt(stat.band.map(|i| i.lo)),
                format_opt(stat.band.map(|i| i.hi)),
            )
            .map_err(io)?;
        }
    }
    Ok(())
}

fn field<T: std::str::FromStr>(header: &BTreeMap<String, String>, key: &str) -> Result<T> {
    let raw = header
        .get(key)
        .ok_or_else(|| Error::Parse { line: 0, message: format!("table header lacks `{key}`") })?;
    raw.parse()
        .map_err(|_| Error::Parse { line: 0, message: format!("bad `{key}` value `{raw}`") })
}

/// Reads a table written by [`write_table`], returning it with its sampling path.
pub fn read_table<R: Read>(input: R) -> Result<(PercentileTable, SamplingPath)> {
    let mut lines = BufReader::new(input).lines().enumerate();
    let mut next = || -> Result<Option<(u64, String)>> {
        match lines.next() {
            None => Ok(None),
            Some((i, l)) => Ok(Some((i as u64 + 1, l.map_err(|e| Error::io("<table input>", e))?))),
        }
    };
    match next()? {
        Some((_, l)) if l.trim_end() == MAGIC => {}
        _ => return Err(Error::Parse { line: 1, message: "not a percentile table file".into() }),
    }
    let mut header = BTreeMap::new();
    let columns_line = loop {
        match next()? {
            Some((line, l)) if l.starts_with('#') => {
                let (k, v) = l[1..].trim().split_once('=').ok_or_else(|| Error::Parse {
                    line,
                    message: "header lines must be `# key=value`".into(),
                })?;
                header.insert(k.trim().to_owned(), v.trim().to_owned());
            }
            Some((line, l)) => break (line, l),
            None => return Err(Error::Parse { line: 0, message: "table has no column header".into() }),
        }
    };
    if columns_line.1.trim_end() != COLUMNS {
        return Err(Error::Parse { line: columns_line.0, message: format!("expected `{COLUMNS}`") });
    }

    let spec = GridSpec {
        axis_points: field(&header, "axis_points")?,
        reps_per_cell: field(&header, "reps_per_cell")?,
        tail_fraction: field(&header, "tail_fraction")?,
        tail_width: field(&header, "tail_width")?,
        n_trials: field(&header, "n_trials")?,
        seed: field(&header, "seed")?,
        quantile_pair: (field(&header, "quantile_lo")?, field(&header, "quantile_hi")?),
    };
    spec.validate()?;
    let bin_count: usize = field(&header, "bins")?;
    let sampling: String = field(&header, "sampling")?;
    let path = SamplingPath::from_name(&sampling)
        .ok_or_else(|| Error::Parse { line: 0, message: format!("unknown sampling `{sampling}`") })?;

    let mut bins = Vec::with_capacity(bin_count);
    let mut pending: Option<(f64, f64, StatBand)> = None;
    while let Some((line, l)) = next()? {
        if l.trim().is_empty() {
            continue;
        }
        let fail = |message: String| Error::Parse { line, message };
        let cols: Vec<&str> = l.trim_end().split(',').collect();
        if cols.len() != 7 {
            return Err(fail(format!("expected 7 columns, got {}", cols.len())));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|_| fail(format!("bad number `{s}`")));
        let int = |s: &str| s.parse::<u64>().map_err(|_| fail(format!("bad count `{s}`")));
        let (lo, hi) = (num(cols[0])?, num(cols[1])?);
        let band = match (cols[5], cols[6]) {
            ("", "") => None,
            (a, b) => Some(Interval::new(num(a)?, num(b)?).map_err(|e| fail(e.to_string()))?),
        };
        let stat = StatBand { count: int(cols[3])?, dropped: int(cols[4])?, band };
        match (cols[2], pending.take()) {
            ("c_obs", None) => pending = Some((lo, hi, stat)),
            ("kappa", Some((plo, phi, c_obs))) if plo == lo && phi == hi => {
                bins.push(BinStats { lo, hi, c_obs, kappa: stat });
            }
            _ => return Err(fail("rows must alternate c_obs, kappa for the same bin".into())),
        }
    }
    if pending.is_some() || bins.len() != bin_count {
        return Err(Error::Parse {
            line: 0,
            message: format!("expected {bin_count} bins, found {}", bins.len()),
        });
    }
    Ok((
        PercentileTable {
            spec,
            bin_width: field(&header, "bin_width")?,
            min_population: field(&header, "min_population")?,
            bins,
        },
        path,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nullsim::run_simulation;

    #[test]
    fn write_read_write_is_stable() {
        let spec = GridSpec::paper_160().with_axis(30).with_reps(2).with_seed(3);
        let table = run_simulation(&spec).unwrap();
        let mut first = Vec::new();
        write_table(&table, SamplingPath::CountLevel, &mut first).unwrap();
        let (back, path) = read_table(first.as_slice()).unwrap();
        assert_eq!(path, SamplingPath::CountLevel);
        assert_eq!(back.spec, spec);
        assert_eq!(back.bins.len(), 100);
        assert_eq!(back.total_samples(), table.total_samples());
        let mut second = Vec::new();
        write_table(&back, path, &mut second).unwrap();
        assert_eq!(first, second);
        let text = String::from_utf8(first).unwrap();
        assert!(text.contains("\n0,0.01,c_obs,"));
        assert!(text.contains("# n_trials=160\n"));
    }

    #[test]
    fn rejects_garbage() {
        assert!(read_table("hello\n".as_bytes()).is_err());
        let truncated = format!("{MAGIC}\n# n_trials=160\n{COLUMNS}\n");
        assert!(read_table(truncated.as_bytes()).is_err());
    }
}
