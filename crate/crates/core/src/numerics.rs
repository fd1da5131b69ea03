//! Small shared numeric kernels: quadrature, root finding, 2x2 Hermitian
//! eigenvalues, least squares fits.

/// 16-point Gauss-Legendre nodes/weights on [-1, 1].
const GL16_X: [f64; 8] = [
    0.0950125098376374,
    0.2816035507792589,
    0.4580167776572274,
    0.6178762444026438,
    0.7554044083550030,
    0.8656312023878318,
    0.9445750230732326,
    0.9894009349916499,
];
const GL16_W: [f64; 8] = [
    0.1894506104550685,
    0.1826034150449236,
    0.1691565193950025,
    0.1495959888165767,
    0.1246289712555339,
    0.0951585116824928,
    0.0622535239386479,
    0.0271524594117541,
];

/// Composite 16-point Gauss-Legendre quadrature of `f` over [a, b] with
/// `panels` uniform panels. Exact to machine precision for smooth integrands
/// at modest panel counts.
pub fn gauss_legendre<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, panels: usize) -> f64 {
    let h = (b - a) / panels as f64;
    let mut total = 0.0;
    for p in 0..panels {
        let mid = a + (p as f64 + 0.5) * h;
        let half = 0.5 * h;
        let mut s = 0.0;
        for i in 0..8 {
            s += GL16_W[i] * (f(mid + half * GL16_X[i]) + f(mid - half * GL16_X[i]));
        }
        total += s * half;
    }
    total
}

/// Bisection for a monotone increasing function: returns x with f(x) = target
/// to absolute tolerance `tol` on x, given a bracketing interval.
pub fn bisect_increasing<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, target: f64, tol: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < tol {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Golden-section maximisation of a unimodal-ish function on [a, b].
pub fn golden_max<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, iters: usize) -> (f64, f64) {
    let inv_phi = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..iters {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

/// Eigenvalues of a 2x2 Hermitian matrix [[a, m], [conj(m), d]] with
/// m = re + i*im, returned as (min, max).
pub fn herm2_eigs(a: f64, d: f64, re: f64, im: f64) -> (f64, f64) {
    let tr = a + d;
    let det = a * d - (re * re + im * im);
    let disc = (tr * tr - 4.0 * det).max(0.0).sqrt();
    (0.5 * (tr - disc), 0.5 * (tr + disc))
}

/// Ordinary least squares fit y = slope * x + intercept; returns
/// (slope, intercept, r_squared).
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    assert_eq!(x.len(), y.len());
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for (&xi, &yi) in x.iter().zip(y) {
        sxx += (xi - mx) * (xi - mx);
        sxy += (xi - mx) * (yi - my);
        syy += (yi - my) * (yi - my);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    (slope, intercept, r2)
}

/// Richardson extrapolation of a sequence v(h_k) with h_k = h_0 / ratio^k and
/// leading error O(h^order): returns the extrapolated limit from the last two
/// entries.
pub fn richardson(values: &[f64], ratio: f64, order: f64) -> f64 {
    assert!(values.len() >= 2);
    let r = ratio.powf(order);
    let a = values[values.len() - 2];
    let b = values[values.len() - 1];
    (r * b - a) / (r - 1.0)
}

/// log(q!) via the log-gamma function, valid for non-integer q >= 0.
pub fn ln_factorial(q: f64) -> f64 {
    ln_gamma(q + 1.0)
}

/// Lanczos approximation of log Gamma, |err| < 2e-10 on the positive axis.
pub fn ln_gamma(x: f64) -> f64 {
    // Lanczos, g = 7, n = 9
    const COEF: [f64; 9] = [
        0.99999999999980993,
        676.5203681218851,
        -1259.1392167224028,
        771.32342877765313,
        -176.61502916214059,
        12.507343278686905,
        -0.13857109526572012,
        9.9843695780195716e-6,
        1.5056327351493116e-7,
    ];
    if x < 0.5 {
        let pi = std::f64::consts::PI;
        pi.ln() - (pi * x).sin().ln() - ln_gamma(1.0 - x)
    } else {
        let x = x - 1.0;
        let mut a = COEF[0];
        let t = x + 7.5;
        for (i, &c) in COEF.iter().enumerate().skip(1) {
            a += c / (x + i as f64);
        }
        0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_polynomials_exact() {
        let v = gauss_legendre(|x| x * x * x * x, 0.0, 1.0, 2);
        assert!((v - 0.2).abs() < 1e-14);
    }

    #[test]
    fn gauss_legendre_log_singularity_resolved_by_substitution() {
        // int_0^1 -ln(x) dx = 1, computed after x = e^{-u} substitution
        let v = gauss_legendre(|u| u * (-u).exp(), 0.0, 40.0, 40);
        assert!((v - 1.0).abs() < 1e-12);
    }

    #[test]
    fn herm2_eigs_diag() {
        let (lo, hi) = herm2_eigs(1.0, 3.0, 0.0, 0.0);
        assert_eq!((lo, hi), (1.0, 3.0));
        let (lo, hi) = herm2_eigs(0.0, 0.0, 1.0, 0.0);
        assert!((lo + 1.0).abs() < 1e-15 && (hi - 1.0).abs() < 1e-15);
    }

    #[test]
    fn ln_factorial_matches_integers() {
        let mut f = 1.0f64;
        for q in 1..15 {
            f *= q as f64;
            assert!((ln_factorial(q as f64) - f.ln()).abs() < 1e-9, "q={q}");
        }
    }

    #[test]
    fn golden_max_finds_peak() {
        let (x, _) = golden_max(|x| -(x - 0.3) * (x - 0.3), 0.0, 1.0, 80);
        assert!((x - 0.3).abs() < 1e-8);
    }
}
