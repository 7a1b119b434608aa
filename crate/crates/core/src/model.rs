//! Mean-field Winfree ensemble:
//!
//! ```text
//! dx_i/dt = omega_i - (kappa/N) * sum_j P(x_j) * R(x_i)
//! ```
//!
//! `P` (influence) and `R` (sensitivity) are C^2, 2pi-periodic functions.
//! Phases are kept as real lifts: they are never reduced modulo 2pi here,
//! so differences of entries measure accumulated phase separation.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::ModelError;

const TAU: f64 = 2.0 * PI;

type Evaluator = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Declared sup-norms of the coupling functions and their derivatives.
///
/// These feed the closed-form constants `C` and `C~` and the a-priori
/// velocity bounds, so they must dominate the true maxima.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupNorms {
    pub p: f64,
    pub p_prime: f64,
    pub r: f64,
    pub r_prime: f64,
    pub r_second: f64,
}

/// Closed-form coupling pair (P, R) with derivative evaluators and sup-norms.
#[derive(Clone)]
pub struct ModelSpec {
    p: Evaluator,
    p_prime: Evaluator,
    r: Evaluator,
    r_prime: Evaluator,
    r_second: Evaluator,
    sup_norms: SupNorms,
}

impl fmt::Debug for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ModelSpec")
            .field("sup_norms", &self.sup_norms)
            .finish_non_exhaustive()
    }
}

impl ModelSpec {
    pub fn new(
        p: Evaluator,
        p_prime: Evaluator,
        r: Evaluator,
        r_prime: Evaluator,
        r_second: Evaluator,
        sup_norms: SupNorms,
    ) -> Self {
        Self { p, p_prime, r, r_prime, r_second, sup_norms }
    }

    #[inline]
    pub fn p(&self, x: f64) -> f64 {
        (self.p)(x)
    }

    #[inline]
    pub fn p_prime(&self, x: f64) -> f64 {
        (self.p_prime)(x)
    }

    #[inline]
    pub fn r(&self, x: f64) -> f64 {
        (self.r)(x)
    }

    #[inline]
    pub fn r_prime(&self, x: f64) -> f64 {
        (self.r_prime)(x)
    }

    #[inline]
    pub fn r_second(&self, x: f64) -> f64 {
        (self.r_second)(x)
    }

    pub fn sup_norms(&self) -> SupNorms {
        self.sup_norms
    }

    /// Checks periodicity, derivative consistency and sup-norm domination
    /// on evaluation grids. Intended for custom models; the built-in
    /// simplified family passes by construction.
    pub fn validate(&self) -> Result<(), ModelError> {
        const GRID: usize = 4096;
        const PERIOD_TOL: f64 = 1e-12;
        // Central differences are O(h^2); the tolerance leaves room for the
        // third-derivative constant of any reasonable coupling function.
        const FD_H: f64 = 1e-4;
        const FD_TOL: f64 = 1e-5;

        let pairs: [(&'static str, &Evaluator); 5] = [
            ("P", &self.p),
            ("P'", &self.p_prime),
            ("R", &self.r),
            ("R'", &self.r_prime),
            ("R''", &self.r_second),
        ];
        for (name, f) in pairs {
            for k in 0..GRID {
                let x = TAU * k as f64 / GRID as f64;
                let defect = (f(x + TAU) - f(x)).abs();
                if defect > PERIOD_TOL {
                    return Err(ModelError::NotPeriodic { quantity: name, x, defect });
                }
            }
        }

        let derivative_pairs: [(&'static str, &Evaluator, &Evaluator); 3] = [
            ("P'", &self.p, &self.p_prime),
            ("R'", &self.r, &self.r_prime),
            ("R''", &self.r_prime, &self.r_second),
        ];
        for (name, f, df) in derivative_pairs {
            for k in 0..512 {
                let x = TAU * k as f64 / 512.0;
                let numeric = (f(x + FD_H) - f(x - FD_H)) / (2.0 * FD_H);
                let defect = (df(x) - numeric).abs();
                if defect > FD_TOL {
                    return Err(ModelError::DerivativeMismatch { quantity: name, x, defect });
                }
            }
        }

        let norm_pairs: [(&'static str, &Evaluator, f64); 5] = [
            ("P", &self.p, self.sup_norms.p),
            ("P'", &self.p_prime, self.sup_norms.p_prime),
            ("R", &self.r, self.sup_norms.r),
            ("R'", &self.r_prime, self.sup_norms.r_prime),
            ("R''", &self.r_second, self.sup_norms.r_second),
        ];
        for (name, f, declared) in norm_pairs {
            let mut observed = 0.0f64;
            for k in 0..=GRID {
                let x = TAU * k as f64 / GRID as f64;
                observed = observed.max(f(x).abs());
            }
            if declared < observed {
                return Err(ModelError::SupNormTooSmall { quantity: name, declared, observed });
            }
        }
        Ok(())
    }
}

/// One-parameter family `P_beta(x) = 1 + cos(x + beta)`, `R(x) = sin(x)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimplifiedModel {
    beta: f64,
}

impl SimplifiedModel {
    pub fn new(beta: f64) -> Result<Self, ModelError> {
        if !beta.is_finite() || !(0.0..=PI).contains(&beta) {
            return Err(ModelError::BetaOutOfRange(beta));
        }
        Ok(Self { beta })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Materializes the closed-form evaluators. `0 <= P_beta <= 2`, and all
    /// the derivative sup-norms equal 1.
    pub fn model_spec(&self) -> ModelSpec {
        let beta = self.beta;
        ModelSpec::new(
            Arc::new(move |x: f64| 1.0 + (x + beta).cos()),
            Arc::new(move |x: f64| -(x + beta).sin()),
            Arc::new(|x: f64| x.sin()),
            Arc::new(|x: f64| x.cos()),
            Arc::new(|x: f64| -x.sin()),
            SupNorms { p: 2.0, p_prime: 1.0, r: 1.0, r_prime: 1.0, r_second: 1.0 },
        )
    }
}

/// How the natural frequencies are drawn from `[1-gamma, 1+gamma]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FrequencyScheme {
    /// Ordered, includes both endpoints: `omega_i = 1 - gamma + 2 gamma (i-1)/(N-1)`.
    Equidistant,
    /// Sorted uniform draws, reproducible from the seed.
    SeededUniform,
}

/// Ensemble parameters: size, coupling strength, spectrum half-width and
/// the natural frequencies themselves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleParams {
    n: usize,
    kappa: f64,
    gamma: f64,
    omega: Vec<f64>,
}

impl EnsembleParams {
    pub fn new(kappa: f64, gamma: f64, omega: Vec<f64>) -> Result<Self, ModelError> {
        if omega.is_empty() {
            return Err(ModelError::EmptyEnsemble);
        }
        if !kappa.is_finite() || kappa < 0.0 {
            return Err(ModelError::InvalidKappa(kappa));
        }
        if !gamma.is_finite() || !(0.0..1.0).contains(&gamma) {
            return Err(ModelError::InvalidGamma(gamma));
        }
        // Tiny slack so that equidistant endpoints 1 +/- gamma pass in
        // floating point.
        let low = 1.0 - gamma - 1e-12;
        let high = 1.0 + gamma + 1e-12;
        for (index, &value) in omega.iter().enumerate() {
            if !value.is_finite() || value < low || value > high {
                return Err(ModelError::FrequencyOutOfRange {
                    index,
                    value,
                    low: 1.0 - gamma,
                    high: 1.0 + gamma,
                });
            }
        }
        Ok(Self { n: omega.len(), kappa, gamma, omega })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn omega(&self) -> &[f64] {
        &self.omega
    }
}

/// Phase lifts at a given time. Entries live in R, not R/2piZ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleState {
    pub t: f64,
    pub x: Vec<f64>,
}

impl EnsembleState {
    pub fn new(t: f64, x: Vec<f64>) -> Self {
        Self { t, x }
    }

    pub fn n(&self) -> usize {
        self.x.len()
    }
}

/// Natural frequencies for the requested scheme.
pub fn make_frequencies(
    n: usize,
    gamma: f64,
    scheme: FrequencyScheme,
    seed: u64,
) -> Result<Vec<f64>, ModelError> {
    if n == 0 {
        return Err(ModelError::EmptyEnsemble);
    }
    if !gamma.is_finite() || !(0.0..1.0).contains(&gamma) {
        return Err(ModelError::InvalidGamma(gamma));
    }
    match scheme {
        FrequencyScheme::Equidistant => {
            if n == 1 {
                return Ok(vec![1.0]);
            }
            Ok((0..n)
                .map(|i| 1.0 - gamma + 2.0 * gamma * i as f64 / (n - 1) as f64)
                .collect())
        }
        FrequencyScheme::SeededUniform => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let dist = Uniform::new_inclusive(1.0 - gamma, 1.0 + gamma);
            let mut omega: Vec<f64> = (0..n).map(|_| dist.sample(&mut rng)).collect();
            omega.sort_by(|a, b| a.partial_cmp(b).expect("finite draws"));
            Ok(omega)
        }
    }
}

/// Uniform initial phases in `[low, high]`, reproducible from the seed.
/// A degenerate interval (`low == high`) fills with the constant.
pub fn make_initial_conditions(
    n: usize,
    low: f64,
    high: f64,
    seed: u64,
) -> Result<EnsembleState, ModelError> {
    if n == 0 {
        return Err(ModelError::EmptyEnsemble);
    }
    if low > high {
        return Err(ModelError::EmptyInterval { low, high });
    }
    if low == high {
        return Ok(EnsembleState::new(0.0, vec![low; n]));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dist = Uniform::new_inclusive(low, high);
    Ok(EnsembleState::new(0.0, (0..n).map(|_| dist.sample(&mut rng)).collect()))
}

/// Winfree vector field through the shared mean field
/// `m = (1/N) sum_j P(x_j)`; evaluation is O(N).
#[inline]
pub fn vector_field_into(x: &[f64], omega: &[f64], kappa: f64, model: &ModelSpec, out: &mut [f64]) {
    debug_assert_eq!(x.len(), omega.len());
    debug_assert_eq!(x.len(), out.len());
    let n = x.len() as f64;
    let mut mean_field = 0.0;
    for &xj in x {
        mean_field += model.p(xj);
    }
    mean_field /= n;
    let drive = kappa * mean_field;
    for ((o, &xi), &wi) in out.iter_mut().zip(x).zip(omega) {
        *o = wi - drive * model.r(xi);
    }
}

/// Checked wrapper around [`vector_field_into`].
pub fn vector_field(
    state: &EnsembleState,
    params: &EnsembleParams,
    model: &ModelSpec,
) -> Result<Vec<f64>, ModelError> {
    if state.x.len() != params.n() {
        return Err(ModelError::DimensionMismatch { state: state.x.len(), params: params.n() });
    }
    let mut out = vec![0.0; state.x.len()];
    vector_field_into(&state.x, params.omega(), params.kappa(), model, &mut out);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn spec(beta: f64) -> ModelSpec {
        SimplifiedModel::new(beta).unwrap().model_spec()
    }

    #[test]
    fn simplified_model_validates() {
        for beta in [0.0, 0.4, PI / 2.0, PI] {
            spec(beta).validate().unwrap();
        }
    }

    #[test]
    fn simplified_model_rejects_beta_outside_range() {
        assert!(SimplifiedModel::new(-0.1).is_err());
        assert!(SimplifiedModel::new(PI + 0.1).is_err());
        assert!(SimplifiedModel::new(f64::NAN).is_err());
    }

    #[test]
    fn validate_catches_wrong_sup_norm() {
        let m = SimplifiedModel::new(0.0).unwrap().model_spec();
        let bad = ModelSpec::new(
            Arc::new(|x: f64| 1.0 + x.cos()),
            Arc::new(|x: f64| -x.sin()),
            Arc::new(|x: f64| x.sin()),
            Arc::new(|x: f64| x.cos()),
            Arc::new(|x: f64| -x.sin()),
            SupNorms { p: 1.5, ..m.sup_norms() },
        );
        assert!(matches!(bad.validate(), Err(ModelError::SupNormTooSmall { .. })));
    }

    #[test]
    fn validate_catches_wrong_derivative() {
        let m = spec(0.0);
        let bad = ModelSpec::new(
            Arc::new(|x: f64| 1.0 + x.cos()),
            Arc::new(|x: f64| x.sin()), // sign flipped
            Arc::new(|x: f64| x.sin()),
            Arc::new(|x: f64| x.cos()),
            Arc::new(|x: f64| -x.sin()),
            m.sup_norms(),
        );
        assert!(matches!(bad.validate(), Err(ModelError::DerivativeMismatch { .. })));
    }

    #[test]
    fn validate_catches_aperiodic_function() {
        let m = spec(0.0);
        let bad = ModelSpec::new(
            Arc::new(|x: f64| 1.0 + x.cos() + 1e-3 * x),
            Arc::new(|x: f64| -x.sin() + 1e-3),
            Arc::new(|x: f64| x.sin()),
            Arc::new(|x: f64| x.cos()),
            Arc::new(|x: f64| -x.sin()),
            m.sup_norms(),
        );
        assert!(matches!(bad.validate(), Err(ModelError::NotPeriodic { .. })));
    }

    #[test]
    fn uncoupled_field_returns_frequencies() {
        let model = spec(0.3);
        let omega = vec![0.95, 1.0, 1.05];
        let params = EnsembleParams::new(0.0, 0.05, omega.clone()).unwrap();
        let state = EnsembleState::new(0.0, vec![0.1, -2.0, 7.0]);
        let dx = vector_field(&state, &params, &model).unwrap();
        assert_eq!(dx, omega);
    }

    #[test]
    fn single_oscillator_at_zero_phase_is_uncoupled() {
        // R(0) = 0, so the coupling term vanishes.
        let model = spec(0.0);
        let params = EnsembleParams::new(0.5, 0.0, vec![1.0]).unwrap();
        let state = EnsembleState::new(0.0, vec![0.0]);
        let dx = vector_field(&state, &params, &model).unwrap();
        assert_abs_diff_eq!(dx[0], 1.0, epsilon = 1e-15);
    }

    #[test]
    fn identical_phases_at_quarter_period() {
        // P_0(pi/2) = 1 and R(pi/2) = 1: dx_i = 1 - 0.5.
        let model = spec(0.0);
        let params = EnsembleParams::new(0.5, 0.0, vec![1.0, 1.0]).unwrap();
        let state = EnsembleState::new(0.0, vec![PI / 2.0, PI / 2.0]);
        let dx = vector_field(&state, &params, &model).unwrap();
        for v in dx {
            assert_abs_diff_eq!(v, 0.5, epsilon = 1e-15);
        }
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let model = spec(0.0);
        let params = EnsembleParams::new(0.5, 0.0, vec![1.0, 1.0]).unwrap();
        let state = EnsembleState::new(0.0, vec![0.0]);
        assert!(matches!(
            vector_field(&state, &params, &model),
            Err(ModelError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn equidistant_frequencies_hit_endpoints() {
        let omega = make_frequencies(3, 0.1, FrequencyScheme::Equidistant, 0).unwrap();
        assert_abs_diff_eq!(omega[0], 0.9, epsilon = 1e-15);
        assert_abs_diff_eq!(omega[1], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(omega[2], 1.1, epsilon = 1e-15);
    }

    #[test]
    fn single_oscillator_frequency_is_one() {
        let omega = make_frequencies(1, 0.5, FrequencyScheme::Equidistant, 0).unwrap();
        assert_eq!(omega, vec![1.0]);
    }

    #[test]
    fn hundred_equidistant_frequencies() {
        // Independent arithmetic: spacing 2*gamma/99.
        let gamma = 0.0412;
        let omega = make_frequencies(100, gamma, FrequencyScheme::Equidistant, 0).unwrap();
        assert_abs_diff_eq!(omega[0], 0.9588, epsilon = 1e-15);
        assert_abs_diff_eq!(omega[99], 1.0412, epsilon = 1e-12);
        let spacing = 2.0 * gamma / 99.0;
        for w in omega.windows(2) {
            assert_abs_diff_eq!(w[1] - w[0], spacing, epsilon = 1e-14);
        }
    }

    #[test]
    fn seeded_uniform_frequencies_are_sorted_and_reproducible() {
        let a = make_frequencies(50, 0.2, FrequencyScheme::SeededUniform, 42).unwrap();
        let b = make_frequencies(50, 0.2, FrequencyScheme::SeededUniform, 42).unwrap();
        assert_eq!(a, b);
        assert!(a.windows(2).all(|w| w[0] <= w[1]));
        assert!(a.iter().all(|&w| (0.8..=1.2).contains(&w)));
        let c = make_frequencies(50, 0.2, FrequencyScheme::SeededUniform, 43).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn zero_oscillators_rejected() {
        assert!(matches!(
            make_frequencies(0, 0.1, FrequencyScheme::Equidistant, 0),
            Err(ModelError::EmptyEnsemble)
        ));
    }

    #[test]
    fn degenerate_ic_interval_collapses_to_constant() {
        let state = make_initial_conditions(4, 0.0, 0.0, 9).unwrap();
        assert_eq!(state.x, vec![0.0; 4]);
    }

    #[test]
    fn initial_conditions_are_deterministic_per_seed() {
        let a = make_initial_conditions(16, -1.0, 1.0, 7).unwrap();
        let b = make_initial_conditions(16, -1.0, 1.0, 7).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn initial_conditions_fill_the_interval_sanely() {
        let state = make_initial_conditions(100, -PI / 2.0, PI / 2.0, 7).unwrap();
        assert!(state.x.iter().all(|&x| (-PI / 2.0..=PI / 2.0).contains(&x)));
        let mean = state.x.iter().sum::<f64>() / 100.0;
        assert!(mean.abs() < 0.2, "mean = {mean}");
    }

    #[test]
    fn inverted_interval_rejected() {
        assert!(matches!(
            make_initial_conditions(4, 1.0, -1.0, 0),
            Err(ModelError::EmptyInterval { .. })
        ));
    }

    #[test]
    fn params_reject_frequency_outside_band() {
        assert!(matches!(
            EnsembleParams::new(0.5, 0.1, vec![1.0, 1.2]),
            Err(ModelError::FrequencyOutOfRange { .. })
        ));
    }

    #[test]
    fn diagonal_restriction_matches_reduced_model() {
        // gamma = 0 and identical phases: dx = 1 - kappa P(x) R(x).
        let model = spec(0.25);
        let kappa = 0.4;
        let params = EnsembleParams::new(kappa, 0.0, vec![1.0; 8]).unwrap();
        for &x in &[0.0, 0.7, 2.0, 4.9] {
            let state = EnsembleState::new(0.0, vec![x; 8]);
            let dx = vector_field(&state, &params, &model).unwrap();
            let reduced = 1.0 - kappa * model.p(x) * model.r(x);
            for v in dx {
                assert_abs_diff_eq!(v, reduced, epsilon = 1e-14);
            }
        }
    }
}
