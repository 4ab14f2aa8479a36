//! Shared helpers for integration tests: an adaptive Simpson integrator
//! that knows nothing about the library, and small data builders.

#![allow(dead_code)]

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn adapt(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    adapt(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) + adapt(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
}

/// ∫ f over [a, b] to roughly `tol` absolute error. The interval is cut
/// into 64 panels first so narrow peaks are not stepped over.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let f: &dyn Fn(f64) -> f64 = &f;
    let panels = 64;
    let w = (b - a) / panels as f64;
    (0..panels)
        .map(|i| {
            let lo = a + i as f64 * w;
            let hi = if i + 1 == panels { b } else { lo + w };
            let (fa, fm, fb) = (f(lo), f(0.5 * (lo + hi)), f(hi));
            let whole = simpson(lo, hi, fa, fm, fb);
            adapt(f, lo, hi, fa, fm, fb, whole, tol / panels as f64, 40)
        })
        .sum()
}

/// ∫ f over [a, ∞) via x = a + t/(1−t), split into pieces so the
/// singular end of the map is approached gradually.
pub fn integrate_to_inf(f: impl Fn(f64) -> f64, a: f64, tol: f64) -> f64 {
    let g = |t: f64| {
        if t >= 1.0 {
            return 0.0;
        }
        let x = a + t / (1.0 - t);
        let v = f(x) / ((1.0 - t) * (1.0 - t));
        if v.is_finite() {
            v
        } else {
            0.0
        }
    };
    let cuts = [0.0, 0.5, 0.9, 0.99, 0.999, 0.9999, 0.99999, 0.999999, 1.0];
    cuts.windows(2).map(|w| integrate(g, w[0], w[1], tol / 8.0)).sum()
}

/// Sample mean and variance (n − 1 divisor).
pub fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    (m, xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0))
}

#[test]
fn oracle_self_check() {
    let v = integrate(|x| x * x, 0.0, 3.0, 1e-12);
    assert!((v - 9.0).abs() < 1e-10);
    let e = integrate_to_inf(|x| (-x).exp(), 0.0, 1e-10);
    assert!((e - 1.0).abs() < 1e-8, "{e}");
    let g = integrate_to_inf(|x| (-(x * x) / 2.0).exp(), -40.0, 1e-10);
    assert!((g - (2.0 * std::f64::consts::PI).sqrt()).abs() < 1e-7, "{g}");
}
