//! Oracles shared by the integration suites. Everything here is independent
//! of the library's computation paths: plain adaptive quadrature and direct
//! formula evaluation only.
#![allow(dead_code)]

/// Adaptive Simpson quadrature with Richardson correction.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    #[allow(clippy::too_many_arguments)]
    fn recurse<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        if depth == 0 || (left + right - whole).abs() < 15.0 * tol {
            left + right + (left + right - whole) / 15.0
        } else {
            recurse(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
                + recurse(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
        }
    }
    let fa = f(a);
    let fb = f(b);
    let fm = f(0.5 * (a + b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    recurse(f, a, b, fa, fm, fb, whole, tol, 48)
}

/// `int_0^eps x^lambda (1-x)^lambda dx` for `0 < eps <= 1/2` and
/// `lambda > -1`. The substitution `x = u^{1/(1+lambda)}` removes the
/// endpoint singularity, leaving a smooth integrand for Simpson.
pub fn beta_integral_tail(lambda: f64, eps: f64) -> f64 {
    assert!(eps > 0.0 && eps <= 0.5 && lambda > -1.0);
    let p = 1.0 + lambda;
    let g = |u: f64| (1.0 - u.powf(1.0 / p)).powf(lambda);
    adaptive_simpson(&g, 0.0, eps.powf(p), 1e-13) / p
}

/// `B(1 + lambda, 1 + lambda)` as a numeric integral (symmetry halves it).
pub fn beta_integral(lambda: f64) -> f64 {
    2.0 * beta_integral_tail(lambda, 0.5)
}

#[test]
fn oracle_sanity() {
    // B(1, 1) = 1
    assert!((beta_integral(0.0) - 1.0).abs() < 1e-10);
    // B(0.8, 0.8), reference value
    assert!((beta_integral(-0.2) - 1.5169642327929232).abs() < 1e-8);
    // B(0.6, 0.6)
    assert!((beta_integral(-0.4) - 2.4153442080024718).abs() < 1e-8);
    // plain polynomial check
    assert!((adaptive_simpson(&|x: f64| x * x, 0.0, 1.0, 1e-12) - 1.0 / 3.0).abs() < 1e-12);
}
