//! Adaptive quadrature for tail integrals, B_p classification and the
//! counter-example functionals. Simpson with recursive bisection and a
//! Richardson-style acceptance test; integrands here are smooth away from
//! endpoints, where callers split manually.

fn simpson(_f: &impl Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn adaptive_step(
    f: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    abs_tol: f64,
    rel_tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(f, a, m, fa, flm, fm);
    let right = simpson(f, m, b, fm, frm, fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * (abs_tol + rel_tol * (left + right).abs()) {
        return left + right + delta / 15.0;
    }
    adaptive_step(f, a, m, fa, flm, fm, left, abs_tol / 2.0, rel_tol, depth - 1)
        + adaptive_step(f, m, b, fm, frm, fb, right, abs_tol / 2.0, rel_tol, depth - 1)
}

/// ∫_a^b f, adaptive Simpson.
pub fn adaptive(f: impl Fn(f64) -> f64, a: f64, b: f64, rel_tol: f64, abs_tol: f64) -> f64 {
    if !(b > a) {
        return 0.0;
    }
    let m = 0.5 * (a + b);
    let fa = f(a);
    let fm = f(m);
    let fb = f(b);
    let whole = simpson(&f, a, b, fa, fm, fb);
    adaptive_step(&f, a, b, fa, fm, fb, whole, abs_tol, rel_tol, 48)
}

/// ∫_a^b f on a logarithmic scale (substitution x = e^u); suited to
/// integrands with power-law decay over many decades. Requires 0 < a < b.
pub fn adaptive_log(f: impl Fn(f64) -> f64, a: f64, b: f64, rel_tol: f64, abs_tol: f64) -> f64 {
    assert!(a > 0.0 && b > a);
    let g = |u: f64| {
        let x = u.exp();
        f(x) * x
    };
    adaptive(g, a.ln(), b.ln(), rel_tol, abs_tol)
}

/// Golden-section minimizer of a unimodal function on [a, b].
pub fn golden_min(f: impl Fn(f64) -> f64, a: f64, b: f64, rel_tol: f64) -> (f64, f64) {
    const INVPHI: f64 = 0.618_033_988_749_894_8;
    let (mut a, mut b) = (a, b);
    let mut c = b - INVPHI * (b - a);
    let mut d = a + INVPHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a) > rel_tol * (a.abs() + b.abs()).max(1e-300) {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INVPHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INVPHI * (b - a);
            fd = f(d);
        }
        if b - a < 1e-300 {
            break;
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

/// Monotone-increasing root bracketing + bisection: smallest x in [lo, hi]
/// with g(x) >= 0, assuming g is nondecreasing and g(hi) >= 0.
pub fn bisect_monotone(g: impl Fn(f64) -> f64, lo: f64, hi: f64, iters: u32) -> f64 {
    let (mut lo, mut hi) = (lo, hi);
    for _ in 0..iters {
        let mid = 0.5 * (lo + hi);
        if g(mid) >= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Least-squares slope, intercept and R^2 of y against x.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    assert_eq!(x.len(), y.len());
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for (&xi, &yi) in x.iter().zip(y.iter()) {
        sxx += (xi - mx) * (xi - mx);
        sxy += (xi - mx) * (yi - my);
        syy += (yi - my) * (yi - my);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    (slope, intercept, r2)
}
