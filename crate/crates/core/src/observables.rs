//! Order parameters and the synchronization verdict.
//!
//! Two complementary diagnostics over the phase lifts `x_1..x_N`:
//!
//! ```text
//! r = |(1/N) sum_j e^{i x_j}|          (Kuramoto-style modulus, in [0,1])
//! d = max_i |x_i - mu|                 (max deviation from the mean lift)
//! ```
//!
//! `r` only sees phases on the circle; `d` and the pairwise dispersion
//! `delta = max_{i,j} |x_i - x_j|` act on lifts and grow without bound when
//! the ensemble desynchronizes.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::ObservablesError;

/// Default verdict threshold on `d`.
pub const DEFAULT_SYNC_THRESHOLD: f64 = 3.0 * PI;

/// Snapshot of the scalar observables of one state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observables {
    /// Mean of the lifts.
    pub mean: f64,
    /// Max pairwise spread `max(x) - min(x)`.
    pub dispersion: f64,
    /// Max deviation from the mean.
    pub max_deviation: f64,
    /// Modulus of the mean unit phasor.
    pub order_modulus: f64,
}

impl Observables {
    pub fn of(x: &[f64]) -> Result<Self, ObservablesError> {
        let (mean, dispersion) = mean_dispersion(x)?;
        Ok(Self { mean, dispersion, max_deviation: order_d(x)?, order_modulus: order_r(x)? })
    }
}

/// Mean and max pairwise dispersion of the lifts, in O(N).
pub fn mean_dispersion(x: &[f64]) -> Result<(f64, f64), ObservablesError> {
    if x.is_empty() {
        return Err(ObservablesError::EmptyEnsemble);
    }
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let mut sum = 0.0;
    for &v in x {
        sum += v;
        lo = lo.min(v);
        hi = hi.max(v);
    }
    Ok((sum / x.len() as f64, hi - lo))
}

/// Modulus of the average unit phasor of the phases.
pub fn order_r(x: &[f64]) -> Result<f64, ObservablesError> {
    if x.is_empty() {
        return Err(ObservablesError::EmptyEnsemble);
    }
    let n = x.len() as f64;
    let (mut c, mut s) = (0.0, 0.0);
    for &v in x {
        let (sv, cv) = v.sin_cos();
        c += cv;
        s += sv;
    }
    Ok(((c / n).powi(2) + (s / n).powi(2)).sqrt())
}

/// Max absolute deviation of the lifts from their mean.
pub fn order_d(x: &[f64]) -> Result<f64, ObservablesError> {
    if x.is_empty() {
        return Err(ObservablesError::EmptyEnsemble);
    }
    let mu = x.iter().sum::<f64>() / x.len() as f64;
    Ok(x.iter().map(|&v| (v - mu).abs()).fold(0.0, f64::max))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SyncVerdict {
    Synchronized,
    Desynchronized,
}

impl SyncVerdict {
    pub fn is_synchronized(self) -> bool {
        self == SyncVerdict::Synchronized
    }
}

impl std::fmt::Display for SyncVerdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SyncVerdict::Synchronized => write!(f, "synchronized"),
            SyncVerdict::Desynchronized => write!(f, "desynchronized"),
        }
    }
}

/// Synchronized iff `d < threshold` (strict: `d == threshold` fails).
pub fn sync_verdict(final_max_deviation: f64, threshold: f64) -> SyncVerdict {
    assert!(threshold > 0.0, "threshold must be positive");
    if final_max_deviation < threshold {
        SyncVerdict::Synchronized
    } else {
        SyncVerdict::Desynchronized
    }
}
