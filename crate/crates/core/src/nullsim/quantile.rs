use crate::error::{Error, Result};

fn check_p(p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::domain("probability", p, "[0, 1]"))
    }
}

/// Sample quantile with linear interpolation between order statistics
/// (Hyndman–Fan type 7, the R default). `sorted` must be ascending.
pub fn quantile_type7(sorted: &[f64], p: f64) -> Result<f64> {
    check_p(p)?;
    if sorted.is_empty() {
        return Err(Error::EmptyInput("quantile of an empty sample"));
    }
    let h = (sorted.len() - 1) as f64 * p;
    let j = h.floor() as usize;
    let frac = h - j as f64;
    let lo = sorted[j];
    if frac == 0.0 {
        return Ok(lo);
    }
    Ok(lo + frac * (sorted[j + 1] - lo))
}

/// Type-7 quantile of a sample given as distinct ascending values with
/// multiplicities. Equal to [`quantile_type7`] on the expanded sample.
pub fn quantile_type7_counts(values: &[(f64, u64)], p: f64) -> Result<f64> {
    check_p(p)?;
    let m: u64 = values.iter().map(|&(_, c)| c).sum();
    if m == 0 {
        return Err(Error::EmptyInput("quantile of an empty sample"));
    }
    let h = (m - 1) as f64 * p;
    let j = (h.floor() as u64).min(m - 1);
    let frac = h - j as f64;
    let at = |rank: u64| {
        let mut seen = 0;
        for &(v, c) in values {
            seen += c;
            if rank < seen {
                return v;
            }
        }
        values[values.len() - 1].0
    };
    let lo = at(j);
    if frac == 0.0 {
        return Ok(lo);
    }
    Ok(lo + frac * (at(j + 1) - lo))
}
