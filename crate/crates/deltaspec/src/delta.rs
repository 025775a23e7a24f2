//! Differential and acceleration features along the time axis of a
//! spectrogram-shaped matrix, plus the adjoint of the (linear) delta map.
//!
//! The regression window is `sum_l l*(v[t+l] - v[t-l]) / sum_l 2*l^2` with
//! out-of-range frames replicated from the edges, so constant trajectories
//! map to zero everywhere, including the boundaries.

use ndarray::Array2;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DeltaConfig {
    /// Regression order L; the window spans `t - L ..= t + L`.
    pub order: usize,
}

impl DeltaConfig {
    pub fn new(order: usize) -> Result<Self> {
        if order == 0 {
            return Err(Error::InvalidConfig("delta order must be >= 1".into()));
        }
        Ok(Self { order })
    }

    fn denominator(&self) -> f64 {
        (1..=self.order).map(|l| 2.0 * (l * l) as f64).sum()
    }
}

impl Default for DeltaConfig {
    fn default() -> Self {
        Self { order: 2 }
    }
}

fn check_nonempty(m: &Array2<f64>) -> Result<()> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Err(Error::EmptyMatrix);
    }
    Ok(())
}

/// Differential feature, applied independently per column (frequency bin)
/// along the rows (time axis).
pub fn delta(matrix: &Array2<f64>, config: &DeltaConfig) -> Result<Array2<f64>> {
    check_nonempty(matrix)?;
    let (rows, cols) = matrix.dim();
    let denom = config.denominator();
    let last = rows as isize - 1;
    let mut out = Array2::zeros((rows, cols));
    for t in 0..rows {
        for l in 1..=config.order {
            let fwd = (t as isize + l as isize).clamp(0, last) as usize;
            let bwd = (t as isize - l as isize).clamp(0, last) as usize;
            let w = l as f64 / denom;
            for c in 0..cols {
                out[[t, c]] += w * (matrix[[fwd, c]] - matrix[[bwd, c]]);
            }
        }
    }
    Ok(out)
}

/// Acceleration feature: the differential applied twice.
pub fn acceleration(matrix: &Array2<f64>, config: &DeltaConfig) -> Result<Array2<f64>> {
    delta(&delta(matrix, config)?, config)
}

/// Transpose of the [`delta`] map, including the replication-boundary terms,
/// so that `<delta(x), y> == <x, delta_adjoint(y)>`.
pub fn delta_adjoint(upstream: &Array2<f64>, config: &DeltaConfig) -> Result<Array2<f64>> {
    check_nonempty(upstream)?;
    let (rows, cols) = upstream.dim();
    let denom = config.denominator();
    let last = rows as isize - 1;
    let mut out = Array2::zeros((rows, cols));
    for t in 0..rows {
        for l in 1..=config.order {
            let fwd = (t as isize + l as isize).clamp(0, last) as usize;
            let bwd = (t as isize - l as isize).clamp(0, last) as usize;
            let w = l as f64 / denom;
            for c in 0..cols {
                out[[fwd, c]] += w * upstream[[t, c]];
                out[[bwd, c]] -= w * upstream[[t, c]];
            }
        }
    }
    Ok(out)
}
