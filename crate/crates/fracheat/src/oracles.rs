//! Closed-form reference kernels and densities. Every numerical route in
//! the crate is validated against these at some point.
//!
//! Normalization fixes unit mass: the Fourier representation carries the
//! constant (2*pi)^{-d}, the Poisson constant is Gamma((d+1)/2)/pi^{(d+1)/2}.
//! Unit mass is the only convention compatible with the semigroup property
//! and the two-sided kernel envelope.

use crate::special::{erfc, ln_gamma};
use crate::Error;
use std::f64::consts::PI;

/// Closed-form kernels available as ground truth.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OracleKind {
    /// alpha = 2 heat kernel
    Gaussian,
    /// alpha = 1 kernel
    Poisson,
    /// one-sided 1/2-stable density, the subordinator for alpha = 1
    LevyHalf,
}

/// Gaussian heat kernel (4 pi t)^{-d/2} exp(-r^2 / 4t).
pub fn gaussian_kernel(t: f64, r: f64, dim: usize) -> Result<f64, Error> {
    if t <= 0.0 {
        return Err(Error::Domain(format!("gaussian_kernel needs t > 0, got {t}")));
    }
    Ok((4.0 * PI * t).powf(-(dim as f64) / 2.0) * (-r * r / (4.0 * t)).exp())
}

/// Poisson kernel c_d t / (t^2 + r^2)^{(d+1)/2}, c_d = Gamma((d+1)/2)/pi^{(d+1)/2}.
pub fn poisson_kernel(t: f64, r: f64, dim: usize) -> Result<f64, Error> {
    if t <= 0.0 {
        return Err(Error::Domain(format!("poisson_kernel needs t > 0, got {t}")));
    }
    let d = dim as f64;
    let c = (ln_gamma((d + 1.0) / 2.0) - 0.5 * (d + 1.0) * PI.ln()).exp();
    Ok(c * t / (t * t + r * r).powf((d + 1.0) / 2.0))
}

/// One-sided 1/2-stable density (2 sqrt(pi))^{-1} s^{-3/2} exp(-1/(4s)),
/// Laplace transform exp(-sqrt(lambda)).
pub fn levy_half_density(s: f64) -> Result<f64, Error> {
    if s <= 0.0 {
        return Err(Error::Domain(format!("levy_half_density needs s > 0, got {s}")));
    }
    Ok(0.5 / PI.sqrt() * s.powf(-1.5) * (-0.25 / s).exp())
}

/// CDF of the 1/2-stable law, erfc(1/(2 sqrt(s))).
pub fn levy_half_cdf(s: f64) -> Result<f64, Error> {
    if s <= 0.0 {
        return Err(Error::Domain(format!("levy_half_cdf needs s > 0, got {s}")));
    }
    Ok(erfc(0.5 / s.sqrt()))
}

/// Periodized Poisson kernel on the unit-speed circle of period 2*pi:
/// sum over n of e^{-t|n|} e^{in theta} / (2 pi), in closed form.
pub fn torus_poisson_kernel(t: f64, theta: f64) -> Result<f64, Error> {
    if t <= 0.0 {
        return Err(Error::Domain(format!("torus_poisson_kernel needs t > 0, got {t}")));
    }
    Ok(t.sinh() / (2.0 * PI * (t.cosh() - theta.cos())))
}

/// k-th time derivative of the Gaussian kernel at radial distance r,
/// computed exactly through the polynomial recurrence for derivatives of
/// t^{-d/2} exp(-a/t).
pub fn gaussian_time_deriv(t: f64, r: f64, dim: usize, k: usize) -> Result<f64, Error> {
    if t <= 0.0 {
        return Err(Error::Domain(format!("gaussian_time_deriv needs t > 0, got {t}")));
    }
    let a = r * r / 4.0;
    let half_d = dim as f64 / 2.0;
    // f^{(k)}(t) = q_k(u) f(t) with u = 1/t; q_0 = 1 and
    // q_{k+1}(u) = -u^2 q_k'(u) + (a u^2 - half_d u) q_k(u)
    let mut q = vec![0.0f64; k + 3];
    q[0] = 1.0;
    let mut deg = 0usize;
    for _ in 0..k {
        let mut next = vec![0.0f64; deg + 3];
        for (j, &c) in q.iter().enumerate().take(deg + 1) {
            if c == 0.0 {
                continue;
            }
            // -u^2 d/du u^j = -j u^{j+1}
            next[j + 1] -= j as f64 * c;
            next[j + 2] += a * c;
            next[j + 1] -= half_d * c;
        }
        deg += 2;
        q = next;
    }
    let u = 1.0 / t;
    let mut poly = 0.0;
    for &c in q.iter().rev() {
        poly = poly * u + c;
    }
    Ok(poly * gaussian_kernel(t, r, dim)?)
}

/// Multi-index space derivative of the Gaussian kernel. The kernel
/// factorizes across axes, so each axis contributes a Hermite factor.
pub fn gaussian_space_deriv(t: f64, x: &[f64], order: &[usize]) -> Result<f64, Error> {
    if t <= 0.0 {
        return Err(Error::Domain(format!("gaussian_space_deriv needs t > 0, got {t}")));
    }
    if x.len() != order.len() {
        return Err(Error::InvalidParams("point and multi-index dims differ".into()));
    }
    let mut val = 1.0;
    for (&xi, &m) in x.iter().zip(order.iter()) {
        // d^m/dx^m (4 pi t)^{-1/2} e^{-x^2/4t}
        let g = (4.0 * PI * t).powf(-0.5) * (-xi * xi / (4.0 * t)).exp();
        // physicists' Hermite via probabilists-style recurrence adapted to
        // e^{-x^2/4t}: d^m e^{-x^2/4t} = p_m(x) e^{-x^2/4t},
        // p_{m+1} = p_m' - x/(2t) p_m
        let mut p = vec![0.0f64; m + 2];
        p[0] = 1.0;
        let mut deg = 0usize;
        for _ in 0..m {
            let mut next = vec![0.0f64; deg + 2];
            for (j, &c) in p.iter().enumerate().take(deg + 1) {
                if c == 0.0 {
                    continue;
                }
                if j >= 1 {
                    next[j - 1] += j as f64 * c;
                }
                next[j + 1] -= c / (2.0 * t);
            }
            deg += 1;
            p = next;
        }
        let mut poly = 0.0;
        for &c in p.iter().rev() {
            poly = poly * xi + c;
        }
        val *= poly * g;
    }
    Ok(val)
}
