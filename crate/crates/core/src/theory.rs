//! Closed-form theory: critical coupling, the synchronization-hypothesis
//! integral, the periodic dispersion curve, and the certified domain of
//! parameters.
//!
//! The central objects, for a coupling pair (P, R) and parameters
//! `(gamma, kappa)`:
//!
//! ```text
//! kappa_star   = 1 / max_x P(x) R(x)                 (+inf if the max is <= 0)
//! H(kappa)     = int_0^{2pi} P R' / (1 - kappa P R) ds
//! beta_k(s)    = kappa P(s) R'(s) / (1 - kappa P(s) R(s))
//! L(kappa)     = (1 - e^{-int beta_k}) / (2 pi kappa e^{int beta_k^-})
//! D(kappa)     = min(1, L / (2(2+C)/(1-k/k*) + 2 C~ (1+C~) k/(1-k/k*)^2))
//! ```
//!
//! A pair with `0 < gamma < kappa D(kappa)^2` is certified: the affine ODE
//! `Delta' = alpha - beta_k(s) Delta` then has a positive 2pi-periodic
//! solution whose maximum stays below `D(kappa)`, and the tube
//! `{ X : dispersion(X) < Delta(mean(X)) }` is invariant under the flow.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::TheoryError;
use crate::model::ModelSpec;
use crate::observables::mean_dispersion;
use crate::quad::{cumulative_integral, golden_max, positive_part_integral, simpson_checked};

const TAU: f64 = 2.0 * PI;

/// Subintervals for the period quadratures, refined once as an error check.
pub const QUADRATURE_SUBINTERVALS: usize = 4096;
/// Richardson rejection threshold for the period quadratures.
pub const QUADRATURE_TOLERANCE: f64 = 1e-10;
/// Grid panels for sampled periodic curves.
pub const CURVE_GRID_PANELS: usize = 2048;
/// Grid points for the critical-coupling scan.
const KAPPA_STAR_SCAN: usize = 16384;
/// Positivity below this resolution is treated as a failed hypothesis:
/// the period integral of `beta_k` is quadrature noise, not a sign.
const H3_POSITIVITY_FLOOR: f64 = 1e-12;

/// Constants built from the sup-norms:
/// `C = ||P|| ||R''|| + ||P'|| ||R'||`, `C~ = ||P'|| ||R|| + ||P|| ||R'||`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TheoryConstants {
    pub c: f64,
    pub c_tilde: f64,
}

impl TheoryConstants {
    pub fn from_model(model: &ModelSpec) -> Self {
        let s = model.sup_norms();
        Self { c: s.p * s.r_second + s.p_prime * s.r_prime, c_tilde: s.p_prime * s.r + s.p * s.r_prime }
    }
}

/// Critical coupling separating the death state from the locking state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KappaStar {
    Finite(f64),
    Unbounded,
}

impl KappaStar {
    pub fn value(&self) -> Option<f64> {
        match self {
            KappaStar::Finite(v) => Some(*v),
            KappaStar::Unbounded => None,
        }
    }

    /// `kappa / kappa_star`, zero when unbounded.
    pub fn ratio(&self, kappa: f64) -> f64 {
        match self {
            KappaStar::Finite(v) => kappa / v,
            KappaStar::Unbounded => 0.0,
        }
    }

    /// Does `kappa` lie strictly below the critical coupling?
    pub fn admits(&self, kappa: f64) -> bool {
        match self {
            KappaStar::Finite(v) => kappa < *v,
            KappaStar::Unbounded => true,
        }
    }
}

impl std::fmt::Display for KappaStar {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            KappaStar::Finite(v) => write!(f, "{v}"),
            KappaStar::Unbounded => write!(f, "inf"),
        }
    }
}

/// `kappa_star = 1 / max_x P(x) R(x)`, located by a dense grid scan over
/// one period refined by golden-section; ties go to the smallest abscissa.
pub fn kappa_star(model: &ModelSpec) -> KappaStar {
    let g = |x: f64| model.p(x) * model.r(x);
    let h = TAU / KAPPA_STAR_SCAN as f64;
    let mut best_k = 0usize;
    let mut best_v = f64::NEG_INFINITY;
    for k in 0..KAPPA_STAR_SCAN {
        let v = g(k as f64 * h);
        if v > best_v {
            best_v = v;
            best_k = k;
        }
    }
    let center = best_k as f64 * h;
    // Periodic evaluators make brackets outside [0, 2pi] harmless.
    let (_, refined) = golden_max(&g, center - h, center + h, 1e-12);
    let max = best_v.max(refined);
    if max > 0.0 {
        KappaStar::Finite(1.0 / max)
    } else {
        KappaStar::Unbounded
    }
}

fn require_kappa_in_locking_range(kappa: f64, star: &KappaStar) -> Result<(), TheoryError> {
    if !kappa.is_finite() || kappa < 0.0 || !star.admits(kappa) {
        return Err(TheoryError::KappaOutOfRange {
            kappa,
            kappa_star: star.value().unwrap_or(f64::INFINITY),
        });
    }
    Ok(())
}

fn h_integral_given_star(model: &ModelSpec, kappa: f64, star: &KappaStar) -> Result<f64, TheoryError> {
    require_kappa_in_locking_range(kappa, star)?;
    let integrand =
        |s: f64| model.p(s) * model.r_prime(s) / (1.0 - kappa * model.p(s) * model.r(s));
    Ok(simpson_checked(&integrand, 0.0, TAU, QUADRATURE_SUBINTERVALS, QUADRATURE_TOLERANCE)?)
}

/// The synchronization-hypothesis integral
/// `int_0^{2pi} P R' / (1 - kappa P R) ds`, for `0 <= kappa < kappa_star`.
pub fn h_integral(model: &ModelSpec, kappa: f64) -> Result<f64, TheoryError> {
    h_integral_given_star(model, kappa, &kappa_star(model))
}

/// Periodic coefficient `beta_k(s) = kappa P R' / (1 - kappa P R)`.
pub fn beta_kappa(model: &ModelSpec, kappa: f64, s: f64) -> Result<f64, TheoryError> {
    let den = 1.0 - kappa * model.p(s) * model.r(s);
    if den <= 0.0 {
        return Err(TheoryError::DenominatorNotPositive { s, value: den });
    }
    Ok(kappa * model.p(s) * model.r_prime(s) / den)
}

/// Unchecked closure form of [`beta_kappa`]; only valid for
/// `kappa < kappa_star` where the denominator is positive.
fn beta_kappa_fn<'a>(model: &'a ModelSpec, kappa: f64) -> impl Fn(f64) -> f64 + 'a {
    move |s: f64| kappa * model.p(s) * model.r_prime(s) / (1.0 - kappa * model.p(s) * model.r(s))
}

/// Sampled positive periodic solution of `Delta' = alpha - beta(s) Delta`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DispersionCurve {
    /// Source term of the affine equation.
    pub alpha: f64,
    /// Grid nodes over `[0, 2pi]`, both endpoints included.
    pub grid: Vec<f64>,
    /// Coefficient samples `beta(s_j)`.
    pub beta: Vec<f64>,
    /// Solution samples `Delta(s_j)`.
    pub delta: Vec<f64>,
    /// Cumulative integral `B(s_j) = int_0^{s_j} beta`.
    pub b_cumulative: Vec<f64>,
    /// Period integral of `beta`.
    pub i_beta: f64,
    /// Period integral of `beta^- = max(0, -beta)`.
    pub i_beta_minus: f64,
}

impl DispersionCurve {
    /// Periodic linear interpolation of the sampled solution.
    pub fn eval(&self, s: f64) -> f64 {
        let m = self.grid.len() - 1;
        let u = s.rem_euclid(TAU) / TAU * m as f64;
        let j = (u.floor() as usize).min(m - 1);
        let frac = u - j as f64;
        self.delta[j] * (1.0 - frac) + self.delta[j + 1] * frac
    }

    pub fn max(&self) -> f64 {
        self.delta.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.delta.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// A-priori bound on the maximum of the periodic solution:
    /// `alpha 2pi e^{int beta^-} / (1 - e^{-int beta})`.
    pub fn closed_form_max_bound(&self) -> f64 {
        self.alpha * TAU * self.i_beta_minus.exp() / (-(-self.i_beta).exp_m1())
    }
}

/// Builds the unique positive 2pi-periodic solution of
/// `Delta'(s) = alpha - beta(s) Delta(s)` on a uniform grid.
///
/// Writing `B(s) = int_0^s beta` and `F(s) = int_0^s e^B`, the solution is
///
/// ```text
/// Delta(s_j) = alpha e^{-B_j} ( F(2pi)/(e^{B(2pi)} - 1) + F_j )
/// ```
///
/// which follows from the variation-of-constants form of the periodic
/// solution after splitting the window integral at `2pi`. Both tables are
/// built with per-panel Gauss quadrature, so the grid values are accurate
/// to roundoff and the whole construction is O(grid).
pub fn periodic_affine_solution<F: Fn(f64) -> f64>(
    alpha: f64,
    beta_fn: F,
    grid_panels: usize,
) -> Result<DispersionCurve, TheoryError> {
    if !alpha.is_finite() || alpha <= 0.0 {
        return Err(TheoryError::NonPositiveAlpha(alpha));
    }
    let m = grid_panels;
    assert!(m >= 2, "need at least two grid panels");
    let h = TAU / m as f64;

    let b = cumulative_integral(&beta_fn, 0.0, TAU, m);
    let i_beta = b[m];
    if i_beta <= H3_POSITIVITY_FLOOR {
        return Err(TheoryError::CoefficientIntegralNotPositive { integral: i_beta });
    }

    // Shift the exponent so e^{B - shift} <= 1; the shift cancels in the
    // final assembly.
    let shift = b.iter().copied().fold(f64::NEG_INFINITY, f64::max);

    // F_j = int_0^{s_j} e^{B(t) - shift} dt. Inside each panel, B at the
    // Gauss nodes is B_j plus a sub-panel integral of beta.
    let mut forcing = Vec::with_capacity(m + 1);
    forcing.push(0.0);
    let mut acc = 0.0f64;
    let mut comp = 0.0f64;
    for j in 0..m {
        let s_lo = j as f64 * h;
        let b_lo = b[j];
        let panel = crate::quad::gauss5(
            &|t: f64| (b_lo + crate::quad::gauss5(&beta_fn, s_lo, t) - shift).exp(),
            s_lo,
            s_lo + h,
        );
        let term = panel - comp;
        let next = acc + term;
        comp = (next - acc) - term;
        acc = next;
        forcing.push(acc);
    }

    let denom = i_beta.exp_m1();
    let head = forcing[m] / denom;
    let grid: Vec<f64> = (0..=m).map(|j| j as f64 * h).collect();
    let delta: Vec<f64> =
        (0..=m).map(|j| alpha * (-(b[j] - shift)).exp() * (head + forcing[j])).collect();
    debug_assert!(delta.iter().all(|&v| v > 0.0), "periodic solution must be positive");

    let beta_samples: Vec<f64> = grid.iter().map(|&s| beta_fn(s)).collect();
    let i_beta_minus = positive_part_integral(
        &|s: f64| -beta_fn(s),
        0.0,
        TAU,
        m,
        QUADRATURE_SUBINTERVALS,
        QUADRATURE_TOLERANCE,
    )?;

    Ok(DispersionCurve {
        alpha,
        grid,
        beta: beta_samples,
        delta,
        b_cumulative: b,
        i_beta,
        i_beta_minus,
    })
}

/// Source term of the dispersion equation:
///
/// ```text
/// alpha(gamma, kappa, D) = (2 gamma + C kappa D^2)/(1 - k/k*)
///   + (2 gamma + C kappa D^2 + C~ kappa D)(gamma + C~ kappa D)
///     / ((1 - gamma - C~ kappa D - k/k*)(1 - k/k*))
/// ```
///
/// Requires the velocity margin `1 - gamma - C~ kappa D - k/k* > 0`.
pub fn alpha_term(
    gamma: f64,
    kappa: f64,
    capacity: f64,
    constants: &TheoryConstants,
    star: &KappaStar,
) -> Result<f64, TheoryError> {
    let q = 1.0 - star.ratio(kappa);
    let margin = 1.0 - gamma - constants.c_tilde * kappa * capacity - star.ratio(kappa);
    if margin <= 0.0 {
        return Err(TheoryError::Condition8Violated { value: margin });
    }
    let a = 2.0 * gamma + constants.c * kappa * capacity * capacity;
    let b = a + constants.c_tilde * kappa * capacity;
    let c = gamma + constants.c_tilde * kappa * capacity;
    Ok(a / q + b * c / (margin * q))
}

/// Dispersion capacity
/// `D(kappa) = min(1, L / (2(2+C)/(1-k/k*) + 2 C~ (1+C~) k/(1-k/k*)^2))`.
pub fn capacity_d(
    kappa: f64,
    constants: &TheoryConstants,
    star: &KappaStar,
    gain: f64,
) -> Result<f64, TheoryError> {
    if kappa <= 0.0 || !star.admits(kappa) {
        return Err(TheoryError::KappaOutOfRange {
            kappa,
            kappa_star: star.value().unwrap_or(f64::INFINITY),
        });
    }
    let q = 1.0 - star.ratio(kappa);
    let den = 2.0 * (2.0 + constants.c) / q
        + 2.0 * constants.c_tilde * (1.0 + constants.c_tilde) * kappa / (q * q);
    Ok(1.0f64.min(gain / den))
}

fn gain_l_given_star(model: &ModelSpec, kappa: f64, star: &KappaStar) -> Result<f64, TheoryError> {
    if kappa <= 0.0 || !star.admits(kappa) {
        return Err(TheoryError::KappaOutOfRange {
            kappa,
            kappa_star: star.value().unwrap_or(f64::INFINITY),
        });
    }
    let beta = beta_kappa_fn(model, kappa);
    let i_beta = simpson_checked(&beta, 0.0, TAU, QUADRATURE_SUBINTERVALS, QUADRATURE_TOLERANCE)?;
    if i_beta <= H3_POSITIVITY_FLOOR {
        return Err(TheoryError::H3Violated { integral: i_beta });
    }
    let i_minus = positive_part_integral(
        &|s: f64| -beta(s),
        0.0,
        TAU,
        CURVE_GRID_PANELS,
        QUADRATURE_SUBINTERVALS,
        QUADRATURE_TOLERANCE,
    )?;
    Ok((-(-i_beta).exp_m1()) / (TAU * kappa * i_minus.exp()))
}

/// Contraction gain
/// `L(kappa) = (1 - e^{-int beta_k}) / (2 pi kappa e^{int beta_k^-})`.
///
/// Fails distinctly when the synchronization hypothesis does not hold
/// (`int beta_k` not positive).
pub fn gain_l(model: &ModelSpec, kappa: f64) -> Result<f64, TheoryError> {
    gain_l_given_star(model, kappa, &kappa_star(model))
}

/// Everything the certification of a parameter pair produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainCertificate {
    pub gamma: f64,
    pub kappa: f64,
    pub kappa_star: KappaStar,
    pub constants: TheoryConstants,
    /// `L(kappa)`; absent when `kappa` is outside `(0, kappa_star)`.
    pub gain: Option<f64>,
    /// `D(kappa)`; absent when `kappa` is outside `(0, kappa_star)`.
    pub capacity: Option<f64>,
    /// Source term of the dispersion curve; absent without the velocity margin.
    pub alpha: Option<f64>,
    /// Velocity margin `1 - gamma - C~ kappa D - kappa/kappa_star > 0`.
    pub condition8: bool,
    /// `0 < gamma < kappa D(kappa)^2` and `kappa` in `(0, kappa_star)`.
    pub in_u: bool,
    /// Dispersion curve, present exactly when `in_u`.
    pub curve: Option<DispersionCurve>,
}

/// Certifies a `(gamma, kappa)` pair.
///
/// For `kappa` in `(0, kappa_star)` this computes `L`, `D`, the membership
/// test `gamma < kappa D^2`, the velocity margin, and, for members, the
/// dispersion curve together with the guaranteed strict bound
/// `max Delta < D`. A hypothesis failure (`int beta_k <= 0`) is an error;
/// a member whose guaranteed inequalities fail numerically is reported as
/// an inconsistency instead of being patched.
pub fn certify_domain(model: &ModelSpec, gamma: f64, kappa: f64) -> Result<DomainCertificate, TheoryError> {
    if !gamma.is_finite() || !(0.0..1.0).contains(&gamma) || gamma == 0.0 {
        return Err(TheoryError::ParameterOutOfRange { name: "gamma", value: gamma, range: "(0, 1)" });
    }
    if !kappa.is_finite() || kappa <= 0.0 {
        return Err(TheoryError::ParameterOutOfRange { name: "kappa", value: kappa, range: "(0, inf)" });
    }
    let star = kappa_star(model);
    let constants = TheoryConstants::from_model(model);
    if !star.admits(kappa) {
        return Ok(DomainCertificate {
            gamma,
            kappa,
            kappa_star: star,
            constants,
            gain: None,
            capacity: None,
            alpha: None,
            condition8: false,
            in_u: false,
            curve: None,
        });
    }

    let gain = gain_l_given_star(model, kappa, &star)?;
    let capacity = capacity_d(kappa, &constants, &star, gain)?;
    let in_u = gamma < kappa * capacity * capacity;
    let margin = 1.0 - gamma - constants.c_tilde * kappa * capacity - star.ratio(kappa);
    let condition8 = margin > 0.0;

    let alpha = if condition8 {
        Some(alpha_term(gamma, kappa, capacity, &constants, &star)?)
    } else {
        None
    };

    let curve = if in_u {
        if !condition8 {
            return Err(TheoryError::CertificateInconsistent {
                detail: format!(
                    "membership holds but the velocity margin is {margin} at gamma={gamma}, kappa={kappa}"
                ),
            });
        }
        let a = alpha.expect("condition8 holds");
        let curve = periodic_affine_solution(a, beta_kappa_fn(model, kappa), CURVE_GRID_PANELS)?;
        if curve.max() >= capacity {
            return Err(TheoryError::CertificateInconsistent {
                detail: format!(
                    "membership holds but max Delta = {} >= D = {capacity} at gamma={gamma}, kappa={kappa}",
                    curve.max()
                ),
            });
        }
        Some(curve)
    } else {
        None
    };

    Ok(DomainCertificate {
        gamma,
        kappa,
        kappa_star: star,
        constants,
        gain: Some(gain),
        capacity: Some(capacity),
        alpha,
        condition8,
        in_u,
        curve,
    })
}

/// Strict membership in the invariant tube:
/// `dispersion(X) < Delta(mean(X) mod 2pi)`.
pub fn in_invariant_set(x: &[f64], certificate: &DomainCertificate) -> Result<bool, TheoryError> {
    let curve = match (&certificate.curve, certificate.in_u) {
        (Some(curve), true) => curve,
        _ => return Err(TheoryError::NotCertified),
    };
    let (mu, delta) = mean_dispersion(x)?;
    Ok(delta < curve.eval(mu))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::SimplifiedModel;
    use approx::assert_abs_diff_eq;

    fn spec(beta: f64) -> ModelSpec {
        SimplifiedModel::new(beta).unwrap().model_spec()
    }

    #[test]
    fn constants_for_simplified_family() {
        for beta in [0.0, 0.7, PI / 2.0, PI] {
            let c = TheoryConstants::from_model(&spec(beta));
            assert_eq!(c.c, 3.0);
            assert_eq!(c.c_tilde, 3.0);
        }
    }

    #[test]
    fn critical_coupling_at_beta_zero() {
        // max (1+cos x) sin x = 3 sqrt(3)/4 at x = pi/3.
        let ks = kappa_star(&spec(0.0));
        let expected = 4.0 / (3.0 * 3.0f64.sqrt());
        assert_abs_diff_eq!(ks.value().unwrap(), expected, epsilon = 1e-12);
    }

    #[test]
    fn critical_coupling_unbounded_when_product_nonpositive() {
        use std::sync::Arc;
        // P = 1 + cos, R = -(1 + cos): P R <= 0 everywhere.
        let model = ModelSpec::new(
            Arc::new(|x: f64| 1.0 + x.cos()),
            Arc::new(|x: f64| -x.sin()),
            Arc::new(|x: f64| -(1.0 + x.cos())),
            Arc::new(|x: f64| x.sin()),
            Arc::new(|x: f64| x.cos()),
            crate::model::SupNorms { p: 2.0, p_prime: 1.0, r: 2.0, r_prime: 1.0, r_second: 1.0 },
        );
        assert_eq!(kappa_star(&model), KappaStar::Unbounded);
        assert!(kappa_star(&model).admits(1e9));
    }

    #[test]
    fn h_integral_at_zero_coupling_is_pi() {
        // int (1+cos s) cos s ds = pi exactly.
        let v = h_integral(&spec(0.0), 0.0).unwrap();
        assert_abs_diff_eq!(v, PI, epsilon = 1e-12);
    }

    #[test]
    fn h_integral_rejects_kappa_at_or_above_star() {
        let model = spec(0.0);
        assert!(matches!(
            h_integral(&model, 0.7699),
            Err(TheoryError::KappaOutOfRange { .. })
        ));
    }

    #[test]
    fn beta_kappa_vanishes_without_coupling() {
        let model = spec(0.0);
        for s in [0.0, 1.0, 2.0, 5.0] {
            assert_eq!(beta_kappa(&model, 0.0, s).unwrap(), 0.0);
        }
    }

    #[test]
    fn beta_kappa_zero_where_r_prime_vanishes() {
        // R'(pi/2) = 0 while the denominator is 1 - 0.5 * 1 * 1 = 0.5.
        let v = beta_kappa(&spec(0.0), 0.5, PI / 2.0).unwrap();
        assert_abs_diff_eq!(v, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn beta_kappa_reports_nonpositive_denominator() {
        // At s = pi/3 the product P R peaks, so kappa = 2 > kappa_star
        // makes the denominator negative.
        assert!(matches!(
            beta_kappa(&spec(0.0), 2.0, PI / 3.0),
            Err(TheoryError::DenominatorNotPositive { .. })
        ));
    }

    #[test]
    fn beta_kappa_integral_matches_kappa_times_h() {
        let model = spec(0.0);
        let kappa = 0.5;
        let h = h_integral(&model, kappa).unwrap();
        let direct = simpson_checked(
            &|s: f64| beta_kappa(&model, kappa, s).unwrap(),
            0.0,
            TAU,
            QUADRATURE_SUBINTERVALS,
            QUADRATURE_TOLERANCE,
        )
        .unwrap();
        assert_abs_diff_eq!(direct, kappa * h, epsilon = 1e-9);
    }

    #[test]
    fn constant_coefficient_solution_is_alpha_over_b() {
        let curve = periodic_affine_solution(0.8, |_| 2.5, 256).unwrap();
        for &v in &curve.delta {
            assert_abs_diff_eq!(v, 0.8 / 2.5, epsilon = 1e-9);
        }
        assert_abs_diff_eq!(curve.i_beta, 2.5 * TAU, epsilon = 1e-12);
        assert_eq!(curve.i_beta_minus, 0.0);
    }

    #[test]
    fn periodic_solution_closes_and_stays_positive() {
        let beta = |s: f64| 0.9 + 0.4 * s.sin() + 0.2 * (2.0 * s).cos();
        let curve = periodic_affine_solution(3e-3, beta, CURVE_GRID_PANELS).unwrap();
        assert!((curve.delta[0] - curve.delta[curve.delta.len() - 1]).abs() < 1e-10);
        assert!(curve.min() > 0.0);
        assert!(curve.max() <= curve.closed_form_max_bound() * (1.0 + 1e-12));
    }

    #[test]
    fn nonpositive_coefficient_integral_rejected() {
        assert!(matches!(
            periodic_affine_solution(1.0, |s: f64| s.sin(), 256),
            Err(TheoryError::CoefficientIntegralNotPositive { .. })
        ));
        assert!(matches!(
            periodic_affine_solution(0.0, |_| 1.0, 256),
            Err(TheoryError::NonPositiveAlpha(_))
        ));
    }

    #[test]
    fn alpha_term_vanishes_without_spread_or_capacity() {
        let constants = TheoryConstants { c: 3.0, c_tilde: 3.0 };
        let star = KappaStar::Finite(0.7698);
        let v = alpha_term(0.0, 0.3, 0.0, &constants, &star).unwrap();
        assert_eq!(v, 0.0);
    }

    #[test]
    fn alpha_term_increases_with_gamma() {
        let constants = TheoryConstants { c: 3.0, c_tilde: 3.0 };
        let star = KappaStar::Finite(0.7698);
        let mut prev = -1.0;
        for k in 1..20 {
            let gamma = 1e-4 * k as f64;
            let v = alpha_term(gamma, 0.3, 0.01, &constants, &star).unwrap();
            assert!(v > prev, "alpha must grow with gamma");
            prev = v;
        }
    }

    #[test]
    fn alpha_term_requires_velocity_margin() {
        let constants = TheoryConstants { c: 3.0, c_tilde: 3.0 };
        let star = KappaStar::Finite(0.7698);
        assert!(matches!(
            alpha_term(0.9, 0.7, 1.0, &constants, &star),
            Err(TheoryError::Condition8Violated { .. })
        ));
    }

    #[test]
    fn capacity_is_capped_at_one_and_shrinks_near_star() {
        let model = spec(0.0);
        let star = kappa_star(&model);
        let constants = TheoryConstants::from_model(&model);
        let mut prev = f64::INFINITY;
        for &k in &[0.1, 0.3, 0.5, 0.7, 0.76] {
            let gain = gain_l(&model, k).unwrap();
            let d = capacity_d(k, &constants, &star, gain).unwrap();
            assert!(d <= 1.0 && d > 0.0);
            assert!(d < prev, "capacity should shrink towards kappa_star");
            prev = d;
        }
    }

    #[test]
    fn gain_positive_in_locking_range() {
        let model = spec(0.0);
        for &k in &[0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7] {
            assert!(gain_l(&model, k).unwrap() > 0.0);
        }
    }

    #[test]
    fn gain_fails_distinctly_when_hypothesis_fails() {
        // At beta = pi/2 the period integral of beta_k vanishes identically.
        let model = spec(PI / 2.0);
        assert!(matches!(gain_l(&model, 0.5), Err(TheoryError::H3Violated { .. })));
    }

    #[test]
    fn certify_small_gamma_is_inside() {
        let cert = certify_domain(&spec(0.0), 1e-9, 0.3).unwrap();
        assert!(cert.in_u);
        assert!(cert.condition8);
        let curve = cert.curve.as_ref().unwrap();
        assert!(curve.max() < cert.capacity.unwrap());
    }

    #[test]
    fn certify_large_gamma_is_outside() {
        // kappa D^2 <= kappa since D <= 1, so gamma = 0.5 > 0.3 is out.
        let cert = certify_domain(&spec(0.0), 0.5, 0.3).unwrap();
        assert!(!cert.in_u);
        assert!(cert.curve.is_none());
    }

    #[test]
    fn certify_kappa_above_star_is_outside() {
        let cert = certify_domain(&spec(0.0), 1e-6, 0.8).unwrap();
        assert!(!cert.in_u);
        assert!(cert.gain.is_none());
    }

    #[test]
    fn certify_rejects_degenerate_gamma() {
        assert!(certify_domain(&spec(0.0), 0.0, 0.3).is_err());
        assert!(certify_domain(&spec(0.0), 1.0, 0.3).is_err());
    }

    #[test]
    fn invariant_set_membership() {
        let cert = certify_domain(&spec(0.0), 1e-9, 0.3).unwrap();
        let curve = cert.curve.as_ref().unwrap();
        // Constant vectors have zero dispersion and Delta > 0.
        assert!(in_invariant_set(&[1.0; 5], &cert).unwrap());
        // Exceeding the maximum of the curve anywhere fails.
        let spread = curve.max() + 0.1;
        assert!(!in_invariant_set(&[0.0, spread], &cert).unwrap());
    }

    #[test]
    fn invariant_set_requires_membership_certificate() {
        let cert = certify_domain(&spec(0.0), 0.5, 0.3).unwrap();
        assert!(matches!(in_invariant_set(&[0.0; 3], &cert), Err(TheoryError::NotCertified)));
    }
}
