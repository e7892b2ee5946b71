//! Gauss–Legendre quadrature, fixed and adaptive.

use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Nodes and weights of the `n`-point rule on [−1, 1], by Newton iteration on P_n.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = alloc::vec![0.0; n];
    let mut w = alloc::vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = libm::cos(core::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5));
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

/// Fixed rule on [a, b].
pub fn fixed<F: FnMut(f64) -> Result<f64>>(f: &mut F, a: f64, b: f64, rule: &(Vec<f64>, Vec<f64>)) -> Result<f64> {
    let (c, h) = (0.5 * (a + b), 0.5 * (b - a));
    let mut s = 0.0;
    for (x, w) in rule.0.iter().zip(&rule.1) {
        s += w * f(c + h * x)?;
    }
    Ok(s * h)
}

/// Adaptive bisection comparing one panel against its two halves (10-point rule).
///
/// Stops when the difference is below `tol` (absolute, split between panels) or
/// `max_depth` bisections were made, in which case `NoConvergence` is returned.
pub fn adaptive<F: FnMut(f64) -> Result<f64>>(mut f: F, a: f64, b: f64, tol: f64, max_depth: usize) -> Result<f64> {
    let rule = gauss_legendre(10);
    let whole = fixed(&mut f, a, b, &rule)?;
    recurse(&mut f, a, b, whole, tol, max_depth, &rule)
}

fn recurse<F: FnMut(f64) -> Result<f64>>(
    f: &mut F,
    a: f64,
    b: f64,
    whole: f64,
    tol: f64,
    depth: usize,
    rule: &(Vec<f64>, Vec<f64>),
) -> Result<f64> {
    let m = 0.5 * (a + b);
    let left = fixed(f, a, m, rule)?;
    let right = fixed(f, m, b, rule)?;
    let diff = (left + right - whole).abs();
    if diff <= tol {
        return Ok(left + right);
    }
    if depth == 0 {
        return Err(Error::NoConvergence { iterations: 0, residual: diff });
    }
    Ok(recurse(f, a, m, left, 0.5 * tol, depth - 1, rule)? + recurse(f, m, b, right, 0.5 * tol, depth - 1, rule)?)
}

/// Periodic trapezoid rule over one period `[0, period)` with `n` nodes.
pub fn periodic<F: FnMut(f64) -> Result<f64>>(mut f: F, period: f64, n: usize) -> Result<f64> {
    let h = period / n as f64;
    let mut s = 0.0;
    for i in 0..n {
        s += f(h * i as f64)?;
    }
    Ok(s * h)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rule_integrates_polynomials_exactly() {
        for n in [1, 2, 5, 10, 16] {
            let rule = gauss_legendre(n);
            assert!((rule.1.iter().sum::<f64>() - 2.0).abs() < 1e-14);
            let deg = 2 * n - 1;
            let v = fixed(&mut |x: f64| Ok(x.powi(deg as i32 - 1) * 3.0), -1.0, 1.0, &rule).unwrap();
            let exact = if (deg - 1) % 2 == 0 { 6.0 / deg as f64 } else { 0.0 };
            assert!((v - exact).abs() < 1e-13, "n={n}: {v} vs {exact}");
        }
    }

    #[test]
    fn adaptive_handles_peaked_integrand() {
        let v = adaptive(|x| Ok(1.0 / (1e-4 + x * x)), -1.0, 1.0, 1e-10, 40).unwrap();
        let exact = 2.0 / 1e-2 * libm::atan(1.0 / 1e-2);
        assert!((v - exact).abs() < 1e-8 * exact);
    }

    #[test]
    fn periodic_rule_is_spectral() {
        let v = periodic(|t| Ok(libm::exp(libm::cos(t))), 2.0 * core::f64::consts::PI, 32).unwrap();
        // 2π I₀(1)
        assert!((v - 2.0 * core::f64::consts::PI * 1.266_065_877_752_008_4).abs() < 1e-13);
    }
}
