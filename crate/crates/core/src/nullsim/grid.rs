use crate::error::Result;
use crate::types::GridSpec;

/// Axis points below which the tail layout is skipped for a uniform grid.
const MIN_TAILED_AXIS: usize = 10;

/// Accuracy values along one grid axis, sorted ascending.
///
/// `round(tail_fraction · axis_points)` points are spread evenly over each of
/// `[0, tail_width]` and `[1 − tail_width, 1]` (endpoints included); the rest
/// fill the open middle interval evenly. The grid is symmetric under
/// `p ↦ 1 − p`.
pub fn build_grid(spec: &GridSpec) -> Result<Vec<f64>> {
    spec.validate()?;
    let k = spec.axis_points;
    if k < MIN_TAILED_AXIS {
        return Ok(uniform(k));
    }
    let tail = ((spec.tail_fraction * k as f64).round() as usize).min(k / 2);
    let middle = k - 2 * tail;
    let w = spec.tail_width;

    let lower: Vec<f64> = match tail {
        0 => Vec::new(),
        1 => vec![0.0],
        t => (0..t).map(|i| w * i as f64 / (t - 1) as f64).collect(),
    };
    let mut axis = Vec::with_capacity(k);
    axis.extend(&lower);
    let span = 1.0 - 2.0 * w;
    axis.extend((0..middle).map(|i| w + span * (i + 1) as f64 / (middle + 1) as f64));
    axis.extend(lower.iter().rev().map(|&p| 1.0 - p));
    debug_assert_eq!(axis.len(), k);
    debug_assert!(axis.windows(2).all(|w| w[0] <= w[1]));
    Ok(axis)
}

fn uniform(k: usize) -> Vec<f64> {
    match k {
        1 => vec![0.5],
        _ => (0..k).map(|i| i as f64 / (k - 1) as f64).collect(),
    }
}
