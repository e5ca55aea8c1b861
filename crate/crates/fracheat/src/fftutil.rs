//! Thin wrapper over rustfft for 1-d periodic fields.
//!
//! Convention: samples live at x_j = 2 pi j / n, and
//! f(x_j) = sum over integer modes m in [-n/2, n/2) of c_m e^{i m x_j}.

use num_complex::Complex64;
use rustfft::FftPlanner;

/// Forward transform to mode coefficients c_m, m in [-n/2, n/2),
/// returned in DFT order (index k holds m = k for k < n/2, else k - n).
pub fn forward(values: &[f64]) -> Vec<Complex64> {
    let n = values.len();
    let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let scale = 1.0 / n as f64;
    for c in &mut buf {
        *c *= scale;
    }
    buf
}

/// Inverse of `forward`; imaginary parts are the caller's responsibility.
pub fn inverse(coeffs: &[Complex64]) -> Vec<Complex64> {
    let mut buf = coeffs.to_vec();
    FftPlanner::new().plan_fft_inverse(buf.len()).process(&mut buf);
    buf
}

/// Integer mode number carried by DFT index k.
pub fn mode_of_index(k: usize, n: usize) -> i64 {
    if k < n / 2 {
        k as i64
    } else {
        k as i64 - n as i64
    }
}

/// Apply a real multiplier g(|m|) to each mode.
pub fn apply_symbol(values: &[f64], g: impl Fn(f64) -> f64) -> Vec<f64> {
    let n = values.len();
    let mut coeffs = forward(values);
    for (k, c) in coeffs.iter_mut().enumerate() {
        let m = mode_of_index(k, n).unsigned_abs() as f64;
        *c *= g(m);
    }
    inverse(&coeffs).iter().map(|c| c.re).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_and_mode_extraction() {
        let n = 32;
        let vals: Vec<f64> = (0..n)
            .map(|j| {
                let x = 2.0 * std::f64::consts::PI * j as f64 / n as f64;
                1.5 + (x).cos() - 0.25 * (3.0 * x).sin()
            })
            .collect();
        let c = forward(&vals);
        assert!((c[0].re - 1.5).abs() < 1e-13);
        assert!((c[1].re - 0.5).abs() < 1e-13); // cos x splits into modes +-1
        assert!((c[3].im - 0.125).abs() < 1e-13); // -0.25 sin 3x -> i/8 at mode +3
        let back = inverse(&c);
        for (a, b) in back.iter().zip(vals.iter()) {
            assert!((a.re - b).abs() < 1e-12 && a.im.abs() < 1e-12);
        }
    }

    #[test]
    fn symbol_application_is_eigen_action() {
        let n = 64;
        let vals: Vec<f64> = (0..n)
            .map(|j| {
                let x = 2.0 * std::f64::consts::PI * j as f64 / n as f64;
                (2.0 * x).cos()
            })
            .collect();
        let out = apply_symbol(&vals, |m| m * m);
        for (o, v) in out.iter().zip(vals.iter()) {
            assert!((o - 4.0 * v).abs() < 1e-11);
        }
    }
}
