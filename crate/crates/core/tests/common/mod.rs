//! Shared oracle helpers for the integration tests.
//!
//! The quadrature here is a recursive adaptive Simpson rule, deliberately a
//! different algorithm from the fixed-panel composite rule inside the
//! library, so the two never share a failure mode.

/// Adaptive Simpson quadrature with Richardson acceptance.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    fn rule<F: Fn(f64) -> f64>(f: &F, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        ((b - a) / 6.0 * (fa + 4.0 * fm + fb), m, fm)
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        whole: f64,
        m: f64,
        fm: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let (left, lm, flm) = rule(f, a, fa, m, fm);
        let (right, rm, frm) = rule(f, m, fm, b, fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        recurse(f, a, fa, m, fm, left, lm, flm, 0.5 * tol, depth - 1)
            + recurse(f, m, fm, b, fb, right, rm, frm, 0.5 * tol, depth - 1)
    }
    let fa = f(a);
    let fb = f(b);
    let (whole, m, fm) = rule(f, a, fa, b, fb);
    recurse(f, a, fa, b, fb, whole, m, fm, tol, 48)
}

/// Exact period of the reduced single-oscillator equation
/// `dx/dt = 1 - kappa (1 + cos(x + beta)) sin(x)`:
/// `T = int_0^{2pi} ds / (1 - kappa P_beta(s) R(s))`.
pub fn reduced_period(beta: f64, kappa: f64) -> f64 {
    adaptive_simpson(
        &|s: f64| 1.0 / (1.0 - kappa * (1.0 + (s + beta).cos()) * s.sin()),
        0.0,
        2.0 * std::f64::consts::PI,
        1e-13,
    )
}
