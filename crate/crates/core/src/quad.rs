//! Quadrature building blocks: Gauss-Legendre rules, graded composite
//! panels, the periodic trapezoid rule and a spectrally accurate rule for
//! periodic integrands with a log(2|sin((t-s)/2)|) factor.

use std::f64::consts::PI;

/// Gauss-Legendre nodes and weights on [-1, 1], by Newton iteration on the
/// Legendre recurrence.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Tricomi-style initial guess.
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            // p1 = P_n(z), dp = P_n'(z)
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-15 {
                break;
            }
        }
        let (mut p0, mut p1) = (1.0, z);
        for k in 2..=n {
            let kf = k as f64;
            let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
            p0 = p1;
            p1 = p2;
        }
        let dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

/// Gauss-Legendre integral of `f` over [a, b].
pub fn gauss<F: FnMut(f64) -> f64>(a: f64, b: f64, n: usize, mut f: F) -> f64 {
    let (x, w) = gauss_legendre(n);
    let c = 0.5 * (b - a);
    let m = 0.5 * (a + b);
    let mut s = 0.0;
    for i in 0..n {
        s += w[i] * f(m + c * x[i]);
    }
    c * s
}

/// Composite Gauss rule on [a, b] with panels geometrically graded toward
/// both endpoints (panel ratio 1/2, `levels` panels per side plus one middle
/// panel). Handles integrands with endpoint layers or nearby singularities.
pub fn graded_gauss<F: FnMut(f64) -> f64>(
    a: f64,
    b: f64,
    levels: usize,
    pts: usize,
    mut f: F,
) -> f64 {
    if b <= a {
        return 0.0;
    }
    let len = b - a;
    let mut cuts = Vec::with_capacity(2 * levels + 2);
    cuts.push(a);
    for k in (1..=levels).rev() {
        cuts.push(a + len * 0.25 * 0.5_f64.powi(k as i32 - 1));
    }
    for k in 1..=levels {
        cuts.push(b - len * 0.25 * 0.5_f64.powi(k as i32 - 1));
    }
    cuts.push(b);
    let mut s = 0.0;
    for p in cuts.windows(2) {
        if p[1] > p[0] {
            s += gauss(p[0], p[1], pts, &mut f);
        }
    }
    s
}

/// Composite Gauss rule on [a, b] with panels geometrically refined toward
/// a scale `scale` at the left endpoint only.
pub fn left_graded_gauss<F: FnMut(f64) -> f64>(
    a: f64,
    b: f64,
    scale: f64,
    pts: usize,
    mut f: F,
) -> f64 {
    if b <= a {
        return 0.0;
    }
    let mut s = 0.0;
    let mut lo = a;
    let mut width = scale.max(1e-300);
    loop {
        let hi = (lo + width).min(b);
        s += gauss(lo, hi, pts, &mut f);
        if hi >= b {
            break;
        }
        lo = hi;
        width *= 2.0;
    }
    s
}

/// Periodic trapezoid rule over [0, 2*pi) with `n` nodes offset by `shift`.
pub fn periodic_trapezoid<F: FnMut(f64) -> f64>(n: usize, shift: f64, mut f: F) -> f64 {
    let step = 2.0 * PI / n as f64;
    let mut s = 0.0;
    for i in 0..n {
        s += f(shift + i as f64 * step);
    }
    s * step
}

/// Quadrature weights for periodic log-singular integrals:
///
///   int_0^{2pi} g(t) * log(2|sin((t-s)/2)|) dt  ~=  sum_k w_k(s) g(t_k),
///
/// t_k = 2*pi*k/n (n even). Exact whenever g is a trigonometric polynomial
/// of degree <= n/2, so spectrally accurate for analytic g.
pub fn log_sin_weights(n: usize, s: f64) -> Vec<f64> {
    assert!(n >= 4 && n % 2 == 0, "log_sin_weights needs even n >= 4");
    let half = n / 2;
    let mut w = vec![0.0; n];
    for (k, wk) in w.iter_mut().enumerate() {
        let d = s - 2.0 * PI * k as f64 / n as f64;
        let mut acc = 0.0;
        for m in 1..half {
            acc += (m as f64 * d).cos() / m as f64;
        }
        // Halved factor on the Nyquist mode; overall 1/2 because the target
        // kernel is (1/2) log(4 sin^2).
        *wk = -(2.0 * PI / n as f64) * acc - (2.0 * PI / (n * n) as f64) * (half as f64 * d).cos();
    }
    w
}
