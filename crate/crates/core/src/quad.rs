//! Quadrature and scalar-search utilities shared by the closed-form evaluators.

use crate::error::QuadError;

/// Composite Simpson rule over `subintervals` uniform subintervals (must be even).
pub fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, subintervals: usize) -> f64 {
    assert!(subintervals >= 2 && subintervals % 2 == 0, "subinterval count must be even");
    let n = subintervals;
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    let mut comp = 0.0f64;
    for k in 1..n {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        // Kahan summation keeps the 4096-term sums near machine precision.
        let term = w * f(a + k as f64 * h) - comp;
        let next = acc + term;
        comp = (next - acc) - term;
        acc = next;
    }
    acc * h / 3.0
}

/// Simpson rule with one halving step as an error estimate.
///
/// Returns the refined value; rejects the result when the Richardson
/// estimate `|S(2n) - S(n)|/15` exceeds `tolerance`.
pub fn simpson_checked<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    subintervals: usize,
    tolerance: f64,
) -> Result<f64, QuadError> {
    let coarse = simpson(f, a, b, subintervals);
    let fine = simpson(f, a, b, 2 * subintervals);
    let estimate = (fine - coarse).abs() / 15.0;
    if estimate > tolerance {
        return Err(QuadError::ToleranceNotMet { estimate, tolerance });
    }
    Ok(fine)
}

/// Integral of `max(0, f)` over `[a, b]` for a piecewise-smooth `f`.
///
/// Simpson loses its order on the kinks of the positive part, so the sign
/// changes of `f` are located first (grid scan plus bisection) and each
/// smooth stretch is integrated separately.
pub fn positive_part_integral<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    scan_points: usize,
    subintervals: usize,
    tolerance: f64,
) -> Result<f64, QuadError> {
    assert!(scan_points >= 2);
    let h = (b - a) / scan_points as f64;
    let mut cuts = vec![a];
    let mut prev_x = a;
    let mut prev_v = f(a);
    for k in 1..=scan_points {
        let x = if k == scan_points { b } else { a + k as f64 * h };
        let v = f(x);
        if prev_v == 0.0 || v == 0.0 || (prev_v > 0.0) != (v > 0.0) {
            cuts.push(bisect_zero(f, prev_x, x, prev_v, v));
        }
        prev_x = x;
        prev_v = v;
    }
    cuts.push(b);
    cuts.dedup_by(|x, y| (*x - *y).abs() < 1e-13 * (b - a));

    let mut total = 0.0;
    for pair in cuts.windows(2) {
        let (lo, hi) = (pair[0], pair[1]);
        if hi - lo < 1e-13 * (b - a) {
            continue;
        }
        if f(0.5 * (lo + hi)) > 0.0 {
            let frac = (hi - lo) / (b - a);
            let n = ((subintervals as f64 * frac).ceil() as usize).max(16);
            let n = n + n % 2;
            total += simpson_checked(f, lo, hi, n, tolerance)?;
        }
    }
    Ok(total)
}

fn bisect_zero<F: Fn(f64) -> f64>(f: &F, mut lo: f64, mut hi: f64, v_lo: f64, v_hi: f64) -> f64 {
    if v_lo == 0.0 {
        return lo;
    }
    if v_hi == 0.0 {
        return hi;
    }
    let positive_low = v_lo > 0.0;
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        let v = f(mid);
        if v == 0.0 {
            return mid;
        }
        if (v > 0.0) == positive_low {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Locates the maximum of `f` on `[a, b]` by golden-section search.
///
/// Assumes a unimodal bracket; returns the best abscissa (interval width
/// shrunk below `xtol`) and the best function value seen.
pub fn golden_max<F: Fn(f64) -> f64>(f: &F, mut a: f64, mut b: f64, xtol: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    let (mut best_x, mut best_f) = if f1 >= f2 { (x1, f1) } else { (x2, f2) };
    while b - a > xtol {
        if f1 >= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = f(x2);
        }
        let (x, v) = if f1 >= f2 { (x1, f1) } else { (x2, f2) };
        if v > best_f {
            best_x = x;
            best_f = v;
        }
    }
    (best_x, best_f)
}

// 5-point Gauss-Legendre nodes and weights on [-1, 1].
const GL5_NODES: [f64; 5] = [
    -0.906_179_845_938_664,
    -0.538_469_310_105_683,
    0.0,
    0.538_469_310_105_683,
    0.906_179_845_938_664,
];
const GL5_WEIGHTS: [f64; 5] = [
    0.236_926_885_056_189_08,
    0.478_628_670_499_366_47,
    0.568_888_888_888_888_9,
    0.478_628_670_499_366_47,
    0.236_926_885_056_189_08,
];

/// 5-point Gauss-Legendre quadrature on a single interval.
pub fn gauss5<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> f64 {
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut acc = 0.0;
    for (x, w) in GL5_NODES.iter().zip(GL5_WEIGHTS.iter()) {
        acc += w * f(mid + half * x);
    }
    acc * half
}

/// Cumulative integral table: returns `n_panels + 1` values of
/// `x -> integral of f from a to x` at the uniform grid nodes.
///
/// Each panel uses 5-point Gauss-Legendre, so the table is exact to
/// roundoff for the smooth integrands used here; the running sum is
/// compensated to avoid O(n*eps) drift.
pub fn cumulative_integral<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, n_panels: usize) -> Vec<f64> {
    assert!(n_panels >= 1);
    let h = (b - a) / n_panels as f64;
    let mut table = Vec::with_capacity(n_panels + 1);
    table.push(0.0);
    let mut acc = 0.0f64;
    let mut comp = 0.0f64;
    for k in 0..n_panels {
        let lo = a + k as f64 * h;
        let hi = if k + 1 == n_panels { b } else { a + (k + 1) as f64 * h };
        let term = gauss5(f, lo, hi) - comp;
        let next = acc + term;
        comp = (next - acc) - term;
        acc = next;
        table.push(acc);
    }
    table
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn simpson_integrates_cosine_to_roundoff() {
        let v = simpson(&|x: f64| x.cos(), 0.0, PI / 2.0, 1024);
        assert!((v - 1.0).abs() < 1e-12, "got {v}");
    }

    #[test]
    fn simpson_checked_rejects_rough_integrand() {
        // |sin| has a kink at pi; a loose tolerance fails the Richardson test.
        let res = simpson_checked(&|x: f64| x.sin().abs(), 0.5, 2.0 * PI - 0.5, 8, 1e-14);
        assert!(res.is_err());
    }

    #[test]
    fn positive_part_handles_sign_changes() {
        // integral of max(0, sin x) over a period is 2.
        let v = positive_part_integral(&|x: f64| x.sin(), 0.0, 2.0 * PI, 512, 2048, 1e-10).unwrap();
        assert!((v - 2.0).abs() < 1e-11, "got {v}");
    }

    #[test]
    fn positive_part_of_negative_function_is_zero() {
        let v = positive_part_integral(&|x: f64| -1.0 - x.cos(), 0.0, 2.0 * PI, 512, 2048, 1e-10)
            .unwrap();
        assert_eq!(v, 0.0);
    }

    #[test]
    fn golden_max_finds_sine_peak() {
        let (x, v) = golden_max(&|x: f64| x.sin(), 0.0, PI, 1e-12);
        assert!((x - PI / 2.0).abs() < 1e-7);
        assert!((v - 1.0).abs() < 1e-14);
    }

    #[test]
    fn cumulative_table_matches_antiderivative() {
        let table = cumulative_integral(&|x: f64| x.cos(), 0.0, 2.0 * PI, 1024);
        for (k, b) in table.iter().enumerate() {
            let x = 2.0 * PI * k as f64 / 1024.0;
            assert!((b - x.sin()).abs() < 1e-14, "node {k}: {b} vs {}", x.sin());
        }
    }
}
