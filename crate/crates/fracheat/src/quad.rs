//! Quadrature toolbox.
//!
//! Four integrators cover everything in the crate:
//! - fixed and adaptive Gauss-Legendre panels,
//! - tanh-sinh for finite intervals with endpoint decay or mild singularities,
//! - exp-sinh for half-infinite integrands with power or exponential tails,
//! - a half-period panel scheme with Wynn epsilon extrapolation for
//!   oscillatory Fourier/Hankel tails.
//!
//! The double-double exp-sinh variant drives the contour evaluator.

use crate::dd::{self, Dd, DdComplex};
use std::f64::consts::PI;
use std::sync::OnceLock;

/// Gauss-Legendre nodes and weights on [-1, 1], computed by Newton iteration
/// on the Legendre recurrence.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut pp = 0.0;
        for _ in 0..100 {
            let mut p0 = 1.0;
            let mut p1 = x;
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            pp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / pp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * pp * pp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn gl15() -> &'static (Vec<f64>, Vec<f64>) {
    static GL: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    GL.get_or_init(|| gauss_legendre(15))
}

fn gl31() -> &'static (Vec<f64>, Vec<f64>) {
    static GL: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    GL.get_or_init(|| gauss_legendre(31))
}

/// Fixed-order Gauss-Legendre on [a, b].
pub fn gauss_panel<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, rule: &(Vec<f64>, Vec<f64>)) -> f64 {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut s = 0.0;
    for (&x, &w) in rule.0.iter().zip(rule.1.iter()) {
        s += w * f(c + h * x);
    }
    s * h
}

/// Adaptive Gauss-Legendre by bisection, error from a 15 vs 31 point compare.
pub fn adaptive<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    fn rec<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, depth: usize, whole: f64) -> f64 {
        let fine = gauss_panel(f, a, b, gl31());
        let err = (fine - whole).abs();
        if err < tol || depth >= 28 {
            return fine;
        }
        let m = 0.5 * (a + b);
        let left = gauss_panel(f, a, m, gl15());
        let right = gauss_panel(f, m, b, gl15());
        rec(f, a, m, 0.5 * tol, depth + 1, left) + rec(f, m, b, 0.5 * tol, depth + 1, right)
    }
    let coarse = gauss_panel(f, a, b, gl15());
    rec(f, a, b, tol, 0, coarse)
}

/// Tanh-sinh quadrature on [a, b] with level doubling.
pub fn tanh_sinh<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    let half = 0.5 * (b - a);
    let t_max = 6.5;
    let eval = |t: f64| -> f64 {
        let u = 0.5 * PI * t.sinh();
        let w = 0.5 * PI * t.cosh() / u.cosh().powi(2);
        if !w.is_finite() || w == 0.0 {
            return 0.0;
        }
        // distance to the endpoint computed without the 1 - tanh(u)
        // cancellation, so samples approach the endpoints to full depth
        let emu = (-2.0 * u.abs()).exp();
        let delta = 2.0 * emu / (1.0 + emu); // = 1 - |tanh(u)|
        let xv = if u >= 0.0 { b - half * delta } else { a + half * delta };
        let fv = f(xv);
        if fv.is_finite() {
            fv * w
        } else {
            0.0
        }
    };
    let mut h = 1.0;
    let mut sum = eval(0.0);
    let mut k = 1;
    while (k as f64) * h <= t_max {
        sum += eval(k as f64 * h) + eval(-(k as f64) * h);
        k += 1;
    }
    let mut value = sum * h;
    for _ in 0..10 {
        h *= 0.5;
        let mut add = 0.0;
        let mut j = 1;
        while (j as f64) * h <= t_max {
            add += eval(j as f64 * h) + eval(-(j as f64) * h);
            j += 2;
        }
        sum += add;
        let prev = value;
        value = sum * h;
        if (value - prev).abs() < tol * value.abs().max(1e-300) && h <= 0.25 {
            break;
        }
    }
    value * half
}

/// Exp-sinh quadrature of f over (0, inf) with a scale hint near the
/// integrand's mass. Requires integrable decay at both ends.
pub fn exp_sinh<F: Fn(f64) -> f64>(f: &F, scale: f64, tol: f64) -> f64 {
    let t_max = 6.0;
    let eval = |t: f64| -> f64 {
        let u = 0.5 * PI * t.sinh();
        if u.abs() > 700.0 {
            return 0.0;
        }
        let x = scale * u.exp();
        let w = x * 0.5 * PI * t.cosh();
        let fv = f(x);
        if fv.is_finite() {
            fv * w
        } else {
            0.0
        }
    };
    let mut h = 1.0;
    let mut sum = eval(0.0);
    let mut k = 1;
    while (k as f64) * h <= t_max {
        sum += eval(k as f64 * h) + eval(-(k as f64) * h);
        k += 1;
    }
    let mut value = sum * h;
    for _ in 0..10 {
        h *= 0.5;
        let mut add = 0.0;
        let mut j = 1;
        while (j as f64) * h <= t_max {
            add += eval(j as f64 * h) + eval(-(j as f64) * h);
            j += 2;
        }
        sum += add;
        let prev = value;
        value = sum * h;
        if (value - prev).abs() < tol * value.abs().max(1e-300) && h <= 0.25 {
            break;
        }
    }
    value
}

/// Oscillating kernel of a radial Fourier reduction.
#[derive(Clone, Copy, Debug)]
pub enum Oscillator {
    Cos,
    Sin,
    /// Bessel J_m
    BesselJ(usize),
}

impl Oscillator {
    pub fn eval(&self, z: f64) -> f64 {
        match *self {
            Oscillator::Cos => z.cos(),
            Oscillator::Sin => z.sin(),
            Oscillator::BesselJ(m) => crate::special::bessel_jn(m, z),
        }
    }

    /// k-th positive zero (approximate is fine, panels only need to be near
    /// half-period boundaries).
    fn zero(&self, k: usize) -> f64 {
        let kf = k as f64;
        match *self {
            Oscillator::Cos => (kf - 0.5) * PI,
            Oscillator::Sin => kf * PI,
            Oscillator::BesselJ(m) => {
                // McMahon expansion
                let mu = 4.0 * (m * m) as f64;
                let beta = (kf + 0.5 * m as f64 - 0.25) * PI;
                beta - (mu - 1.0) / (8.0 * beta)
            }
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct OscResult {
    pub value: f64,
    pub abs_error: f64,
    pub panels: usize,
}

/// Wynn epsilon acceleration of a sequence of partial sums. Builds the
/// full table and returns the even-column entry with the best internal
/// stability estimate (distance to its neighbours in the table), QUADPACK
/// style. The returned error tracks observed stability, not a bound.
fn wynn_extrapolate(sums: &[f64]) -> Option<(f64, f64)> {
    let n = sums.len();
    if n < 5 {
        return None;
    }
    let n = n.min(80);
    let sums = &sums[sums.len() - n..];
    let mut prev_prev: Vec<f64> = vec![0.0; n + 1];
    let mut prev: Vec<f64> = sums.to_vec();
    let mut last_even: Vec<f64> = sums.to_vec();
    let mut best: Option<(f64, f64)> = None;
    let mut col = 0usize;
    while prev.len() >= 2 {
        let mut cur = Vec::with_capacity(prev.len() - 1);
        for j in 0..prev.len() - 1 {
            let denom = prev[j + 1] - prev[j];
            if denom.abs() < 1e-307 || !denom.is_finite() {
                cur.push(f64::NAN);
            } else {
                cur.push(prev_prev[j + 1] + 1.0 / denom);
            }
        }
        col += 1;
        if col % 2 == 0 && cur.len() >= 2 {
            let cand = cur[cur.len() - 1];
            let above = cur[cur.len() - 2];
            let same_col_prev = last_even.last().copied().unwrap_or(f64::NAN);
            if cand.is_finite() && above.is_finite() && same_col_prev.is_finite() {
                let err = (cand - above).abs() + (cand - same_col_prev).abs();
                match best {
                    Some((_, be)) if be <= err => {}
                    _ => best = Some((cand, err)),
                }
            }
            last_even = cur.clone();
        }
        prev_prev = std::mem::replace(&mut prev, cur);
    }
    best
}

/// Integrate g(rho) * osc_fn(freq * rho) over (0, inf), with `tol` an
/// absolute target.
///
/// `g` is a smooth amplitude whose tail beyond `trunc` is below tol in
/// integral mass; `zero_k` gives approximate positions of the oscillator
/// zeros (half-period boundaries need not be exact). Panels between zeros
/// form an eventually alternating series accelerated with the epsilon
/// algorithm; everything before the first zero, and non-oscillatory
/// queries, use adaptive panels.
pub fn oscillatory_integral_fn(
    g: &dyn Fn(f64) -> f64,
    osc_fn: &dyn Fn(f64) -> f64,
    zero_k: &dyn Fn(usize) -> f64,
    freq: f64,
    trunc: f64,
    tol: f64,
    max_panels: usize,
) -> OscResult {
    assert!(freq >= 0.0 && trunc > 0.0);
    let integrand = |rho: f64| g(rho) * osc_fn(freq * rho);
    let total_phase = freq * trunc;
    if total_phase < 8.0 * PI {
        // few oscillations: direct adaptive integration is cheaper and tighter
        let v = adaptive(&integrand, 0.0, trunc, tol * 0.5);
        return OscResult {
            value: v,
            abs_error: tol * 0.5,
            panels: 1,
        };
    }

    let first = zero_k(1) / freq;
    let head = adaptive(&integrand, 0.0, first.min(trunc), tol * 0.25);
    if first >= trunc {
        return OscResult {
            value: head,
            abs_error: tol * 0.25,
            panels: 1,
        };
    }

    let gl = gl15();
    let mut lo = first;
    let mut k = 2usize;
    let mut partial = 0.0;
    let mut sums: Vec<f64> = Vec::new();
    let mut last_mag = f64::INFINITY;
    let mut decreasing_run = 0usize;
    let mut confirm: Option<(f64, f64)> = None;
    let mut panels = 0usize;
    let mut tail_bound: Option<f64> = None;

    while panels < max_panels {
        let hi = (zero_k(k) / freq).min(trunc);
        let piece = if hi - lo > 0.0 {
            gauss_panel(&integrand, lo, hi, gl)
        } else {
            0.0
        };
        partial += piece;
        panels += 1;
        if piece.abs() <= last_mag {
            decreasing_run += 1;
        } else {
            decreasing_run = 0;
        }
        // feed the epsilon table only once panel magnitudes decay; certify
        // only when extrapolation bridges at most three orders of magnitude
        // (sub-geometric envelopes converge too confidently otherwise) and
        // a re-extrapolation eight panels later confirms the value
        if decreasing_run >= 2 {
            sums.push(partial);
            if piece.abs() < 1e3 * tol && sums.len() >= 10 && sums.len() % 8 == 0 {
                if let Some((est, delta)) = wynn_extrapolate(&sums) {
                    if delta < 0.2 * tol {
                        match confirm {
                            Some((prev_est, prev_delta)) if (prev_est - est).abs() < 0.3 * tol => {
                                return OscResult {
                                    value: head + est,
                                    abs_error: delta + prev_delta + (prev_est - est).abs(),
                                    panels,
                                };
                            }
                            _ => confirm = Some((est, delta)),
                        }
                    } else {
                        confirm = None;
                    }
                }
            }
        }
        if hi >= trunc {
            // walked the whole truncated range; remainder is below tol by
            // the caller's tail bound
            tail_bound = Some(tol * 0.25);
            break;
        }
        if piece.abs() < 0.02 * tol && decreasing_run >= 4 {
            // alternating remainder is bounded by the last half-period
            tail_bound = Some(piece.abs() + 0.02 * tol);
            break;
        }
        last_mag = piece.abs();
        lo = hi;
        k += 1;
    }

    if let Some(tb) = tail_bound {
        return OscResult {
            value: head + partial,
            abs_error: tb + tol * 0.25,
            panels,
        };
    }
    // panel budget exhausted before certification; report the best estimate
    let (est, delta) = wynn_extrapolate(&sums).unwrap_or((partial, f64::INFINITY));
    OscResult {
        value: head + est,
        abs_error: delta.max(tol),
        panels,
    }
}

/// Named-oscillator wrapper around `oscillatory_integral_fn`.
pub fn oscillatory_integral<F: Fn(f64) -> f64>(
    g: &F,
    osc: Oscillator,
    freq: f64,
    trunc: f64,
    tol: f64,
) -> OscResult {
    oscillatory_integral_fn(
        g,
        &|z| osc.eval(z),
        &|k| osc.zero(k),
        freq,
        trunc,
        tol,
        400_000,
    )
}

/// Double-double exp-sinh quadrature over (0, inf) of a complex integrand.
///
/// Returns (integral, sum of |terms|); the second value exposes the
/// cancellation level so callers can attach a roundoff estimate.
pub fn exp_sinh_dd<F: Fn(Dd) -> DdComplex>(f: &F, scale: f64, rel_tol: f64) -> (DdComplex, f64) {
    let t_max = 4.3f64;
    let half_pi = dd::FRAC_PI_2;
    let scale_dd = Dd::from(scale);
    let eval = |t: f64| -> (DdComplex, f64) {
        let u = 0.5 * PI * t.sinh();
        if u.abs() > 690.0 {
            return (DdComplex::new(dd::ZERO, dd::ZERO), 0.0);
        }
        let td = Dd::from(t);
        let et = td.exp();
        let sinh_t = (et - et.recip()).ldexp(-1);
        let cosh_t = (et + et.recip()).ldexp(-1);
        let x = scale_dd * (half_pi * sinh_t).exp();
        let w = x * half_pi * cosh_t;
        let fv = f(x);
        let term = fv.scale(w);
        let mag = term.abs_upper();
        if mag.is_finite() {
            (term, mag)
        } else {
            (DdComplex::new(dd::ZERO, dd::ZERO), 0.0)
        }
    };

    let mut h = 0.5f64;
    let mut sum = DdComplex::new(dd::ZERO, dd::ZERO);
    let mut abs_sum = 0.0f64;
    {
        let (v, m) = eval(0.0);
        sum = sum.add(v);
        abs_sum += m;
        let mut k = 1;
        while (k as f64) * h <= t_max {
            let (v1, m1) = eval(k as f64 * h);
            let (v2, m2) = eval(-(k as f64) * h);
            sum = sum.add(v1).add(v2);
            abs_sum += m1 + m2;
            k += 1;
        }
    }
    let mut value = sum.scale(Dd::from(h));
    for _ in 0..9 {
        h *= 0.5;
        let mut add = DdComplex::new(dd::ZERO, dd::ZERO);
        let mut j = 1;
        while (j as f64) * h <= t_max {
            let (v1, m1) = eval(j as f64 * h);
            let (v2, m2) = eval(-(j as f64) * h);
            add = add.add(v1).add(v2);
            abs_sum += m1 + m2;
            j += 2;
        }
        sum = sum.add(add);
        let prev = value;
        value = sum.scale(Dd::from(h));
        let change = (value.re - prev.re).abs().hi + (value.im - prev.im).abs().hi;
        let scale_v = value.abs_upper().max(1e-300);
        if change < rel_tol * scale_v && h <= 0.125 {
            break;
        }
    }
    (value, abs_sum * h * 2.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::ln_gamma;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        let rule = gauss_legendre(8);
        // degree 15 polynomial integrated exactly on [-1, 1]
        let f = |x: f64| 3.0 * x.powi(15) + x.powi(8) - 2.0 * x.powi(3) + 0.5;
        let got = gauss_panel(&f, -1.0, 1.0, &rule);
        let want = 2.0 / 9.0 + 1.0; // odd terms drop
        assert!((got - want).abs() < 1e-14);
    }

    #[test]
    fn adaptive_handles_peaked_integrand() {
        let f = |x: f64| (-100.0 * (x - 0.3).powi(2)).exp();
        let got = adaptive(&f, 0.0, 1.0, 1e-12);
        let want = 0.17724342737122792475; // (1/2) sqrt(pi/100) (erf(3) + erf(7))
        assert!((got - want).abs() < 1e-11);
    }

    #[test]
    fn tanh_sinh_endpoint_singularity() {
        // integral of 1/sqrt(x) over (0,1) = 2
        let got = tanh_sinh(&|x: f64| x.powf(-0.5), 0.0, 1.0, 1e-12);
        assert!((got - 2.0).abs() < 1e-9, "got {got}");
    }

    #[test]
    fn exp_sinh_gamma_integral() {
        // integral of x^{3.5} e^{-x} = Gamma(4.5)
        let got = exp_sinh(&|x: f64| x.powf(3.5) * (-x).exp(), 3.5, 1e-12);
        let want = ln_gamma(4.5).exp();
        assert!((got - want).abs() / want < 1e-11, "got {got} want {want}");
    }

    #[test]
    fn exp_sinh_heavy_tail() {
        // integral of 1/(1+x)^{2.2} over (0, inf) = 1/1.2
        let got = exp_sinh(&|x: f64| (1.0 + x).powf(-2.2), 1.0, 1e-12);
        assert!((got - 1.0 / 1.2).abs() < 1e-10);
    }

    #[test]
    fn oscillatory_laplace_cos() {
        // integral e^{-t rho} cos(r rho) = t/(t^2+r^2), a slowly damped tail
        for &(t, r) in &[(0.1, 5.0), (1.0, 1.0), (0.05, 6.0)] {
            let g = move |rho: f64| (-t * rho).exp();
            let trunc = 40.0 / t;
            let res = oscillatory_integral(&g, Oscillator::Cos, r, trunc, 1e-12);
            let want = t / (t * t + r * r);
            assert!(
                (res.value - want).abs() < 5e-11,
                "t={t} r={r}: got {} want {want} err_est {} panels {}",
                res.value,
                res.abs_error,
                res.panels
            );
        }
    }

    #[test]
    fn oscillatory_bessel_hankel_pair() {
        // integral e^{-t rho} J0(r rho) rho drho = t/(t^2+r^2)^{3/2}
        for &(t, r) in &[(0.5, 3.0), (0.1, 5.0)] {
            let g = move |rho: f64| (-t * rho).exp() * rho;
            let trunc = 60.0 / t;
            let res = oscillatory_integral(&g, Oscillator::BesselJ(0), r, trunc, 1e-11);
            let want = t / (t * t + r * r).powf(1.5);
            assert!(
                (res.value - want).abs() < 1e-9,
                "t={t} r={r}: got {} want {want}",
                res.value
            );
        }
    }

    #[test]
    fn oscillatory_growing_then_decaying_amplitude() {
        // weight rho^6 against e^{-rho} cos: exact value from the Laplace
        // transform of rho^6: Re[6!/(1+i r)^7]
        let r = 3.0f64;
        let g = |rho: f64| rho.powi(6) * (-rho).exp();
        let res = oscillatory_integral(&g, Oscillator::Cos, r, 220.0, 1e-11);
        let z = num_complex::Complex64::new(1.0, -r);
        let want = (720.0 / z.powi(7)).re;
        assert!(
            (res.value - want).abs() < 1e-8 * want.abs().max(1.0),
            "got {} want {want}",
            res.value
        );
    }

    #[test]
    fn exp_sinh_dd_matches_gamma() {
        // integral x^4 e^{-x} = 24 computed in double-double
        let f = |x: Dd| {
            let ln_x = x.ln();
            DdComplex::new((ln_x * Dd::from(4.0) - x).exp(), dd::ZERO)
        };
        let (v, _mass) = exp_sinh_dd(&f, 4.0, 1e-28);
        let err = (v.re - Dd::from(24.0)).abs();
        assert!(err.hi < 1e-25, "err {:?}", err);
    }
}
