//! Double-double arithmetic: unevaluated sums of two f64 giving roughly 31
//! significant decimal digits. Used by the contour evaluator, where high
//! derivative orders produce cancellation far beyond what f64 can absorb.
//!
//! The error-free transforms follow Dekker and Knuth; products use FMA.
//! Elementary functions follow the usual qd-library recipes: exp by
//! range reduction and a squared Taylor tail, ln by Newton on exp,
//! sin/cos by quadrant reduction against a two-word pi/2.

use std::ops::{Add, Div, Mul, Neg, Sub};

#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };
pub const ONE: Dd = Dd { hi: 1.0, lo: 0.0 };
// two-word constants (hi + lo) accurate to ~1e-33 relative
pub const LN2: Dd = Dd {
    hi: 0.693_147_180_559_945_3,
    lo: 2.319_046_813_846_299_6e-17,
};
pub const PI: Dd = Dd {
    hi: 3.141_592_653_589_793,
    lo: 1.224_646_799_147_353_2e-16,
};
pub const FRAC_PI_2: Dd = Dd {
    hi: 1.570_796_326_794_896_6,
    lo: 6.123_233_995_736_766e-17,
};

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

impl Dd {
    #[inline]
    pub fn from(x: f64) -> Self {
        Dd { hi: x, lo: 0.0 }
    }

    #[inline]
    pub fn new(hi: f64, lo: f64) -> Self {
        let (s, e) = quick_two_sum(hi, lo);
        Dd { hi: s, lo: e }
    }

    #[inline]
    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    #[inline]
    pub fn abs(self) -> Self {
        if self.hi < 0.0 || (self.hi == 0.0 && self.lo < 0.0) {
            -self
        } else {
            self
        }
    }

    #[inline]
    pub fn is_finite(self) -> bool {
        self.hi.is_finite()
    }

    /// Exact scaling by a power of two.
    #[inline]
    pub fn ldexp(self, n: i32) -> Self {
        Dd {
            hi: libm_ldexp(self.hi, n),
            lo: libm_ldexp(self.lo, n),
        }
    }

    pub fn sqr(self) -> Self {
        let (p, mut e) = two_prod(self.hi, self.hi);
        e += 2.0 * self.hi * self.lo + self.lo * self.lo;
        let (s, e2) = quick_two_sum(p, e);
        Dd { hi: s, lo: e2 }
    }

    pub fn sqrt(self) -> Self {
        if self.hi == 0.0 {
            return ZERO;
        }
        assert!(self.hi > 0.0, "dd sqrt of negative value");
        let y = self.hi.sqrt();
        // one Newton correction in dd: y + (x - y^2) / (2y)
        let y_dd = Dd::from(y);
        let diff = self - y_dd.sqr();
        y_dd + diff / Dd::from(2.0 * y)
    }

    pub fn recip(self) -> Self {
        ONE / self
    }

    pub fn exp(self) -> Self {
        let x = self.hi;
        if x <= -709.0 {
            return ZERO;
        }
        if x >= 709.0 {
            return Dd::from(f64::INFINITY);
        }
        let m = (x / LN2.hi).round();
        let r = (self - LN2 * Dd::from(m)).ldexp(-9);
        // Taylor of exp(r) - 1 for |r| <= ln2/1024
        let mut term = r;
        let mut sum = r;
        for i in 2..=14 {
            term = term * r / Dd::from(i as f64);
            sum = sum + term;
            if term.hi.abs() < 1e-40 {
                break;
            }
        }
        // square out the 2^-9 scaling on u = exp(r) - 1
        let mut u = sum;
        for _ in 0..9 {
            u = u.sqr() + u.ldexp(1);
        }
        (u + ONE).ldexp(m as i32)
    }

    pub fn ln(self) -> Self {
        assert!(self.hi > 0.0, "dd ln of non-positive value");
        let mut y = Dd::from(self.hi.ln());
        // Newton: y <- y + x * exp(-y) - 1, two steps
        for _ in 0..2 {
            y = y + self * (-y).exp() - ONE;
        }
        y
    }

    pub fn powf(self, p: f64) -> Self {
        if p == 0.0 {
            return ONE;
        }
        (self.ln() * Dd::from(p)).exp()
    }

    /// Simultaneous sin and cos with quadrant reduction modulo pi/2.
    ///
    /// For |x| around 1e5 the reduction keeps roughly 1e-28 absolute
    /// accuracy in the angle, which is the limit of a two-word pi.
    pub fn sin_cos(self) -> (Dd, Dd) {
        let n = (self.hi / FRAC_PI_2.hi).round();
        let r = self - FRAC_PI_2 * Dd::from(n);
        let (s, c) = sin_cos_taylor(r);
        match (n as i64).rem_euclid(4) {
            0 => (s, c),
            1 => (c, -s),
            2 => (-s, -c),
            _ => (-c, s),
        }
    }

    pub fn sin(self) -> Dd {
        self.sin_cos().0
    }

    pub fn cos(self) -> Dd {
        self.sin_cos().1
    }
}

// Taylor series on |r| <= pi/4 + reduction slack.
fn sin_cos_taylor(r: Dd) -> (Dd, Dd) {
    let r2 = r.sqr();
    let mut s = r;
    let mut term = r;
    let mut k = 1.0;
    loop {
        term = term * r2 / Dd::from((k + 1.0) * (k + 2.0));
        k += 2.0;
        s = if ((k as i64 - 1) / 2) % 2 == 1 { s - term } else { s + term };
        if term.hi.abs() < 1e-36 || k > 40.0 {
            break;
        }
    }
    let mut c = ONE;
    let mut termc = ONE;
    let mut k = 0.0;
    loop {
        termc = termc * r2 / Dd::from((k + 1.0) * (k + 2.0));
        k += 2.0;
        c = if ((k as i64) / 2) % 2 == 1 { c - termc } else { c + termc };
        if termc.hi.abs() < 1e-36 || k > 40.0 {
            break;
        }
    }
    (s, c)
}

fn libm_ldexp(x: f64, n: i32) -> f64 {
    // exact for normal results; our exponents stay far from the subnormal range
    x * f64::powi(2.0, n)
}

impl Neg for Dd {
    type Output = Dd;
    #[inline]
    fn neg(self) -> Dd {
        Dd {
            hi: -self.hi,
            lo: -self.lo,
        }
    }
}

impl Add for Dd {
    type Output = Dd;
    #[inline]
    fn add(self, o: Dd) -> Dd {
        let (s1, e1) = two_sum(self.hi, o.hi);
        let (s2, e2) = two_sum(self.lo, o.lo);
        let (s, e) = quick_two_sum(s1, e1 + s2);
        let (hi, lo) = quick_two_sum(s, e + e2);
        Dd { hi, lo }
    }
}

impl Sub for Dd {
    type Output = Dd;
    #[inline]
    fn sub(self, o: Dd) -> Dd {
        self + (-o)
    }
}

impl Mul for Dd {
    type Output = Dd;
    #[inline]
    fn mul(self, o: Dd) -> Dd {
        let (p, mut e) = two_prod(self.hi, o.hi);
        e += self.hi * o.lo + self.lo * o.hi;
        let (hi, lo) = quick_two_sum(p, e);
        Dd { hi, lo }
    }
}

impl Div for Dd {
    type Output = Dd;
    fn div(self, o: Dd) -> Dd {
        let q1 = self.hi / o.hi;
        let r = self - o * Dd::from(q1);
        let q2 = r.hi / o.hi;
        let r2 = r - o * Dd::from(q2);
        let q3 = r2.hi / o.hi;
        let (s, e) = quick_two_sum(q1, q2);
        Dd::new(s, e + q3)
    }
}

/// Complex number over Dd, just enough for the contour integrand.
#[derive(Clone, Copy, Debug)]
pub struct DdComplex {
    pub re: Dd,
    pub im: Dd,
}

impl DdComplex {
    pub fn new(re: Dd, im: Dd) -> Self {
        DdComplex { re, im }
    }

    /// exp(re) * (cos(im) + i sin(im))
    pub fn exp(self) -> Self {
        let m = self.re.exp();
        let (s, c) = self.im.sin_cos();
        DdComplex {
            re: m * c,
            im: m * s,
        }
    }

    pub fn scale(self, k: Dd) -> Self {
        DdComplex {
            re: self.re * k,
            im: self.im * k,
        }
    }

    pub fn mul(self, o: DdComplex) -> Self {
        DdComplex {
            re: self.re * o.re - self.im * o.im,
            im: self.re * o.im + self.im * o.re,
        }
    }

    pub fn add(self, o: DdComplex) -> Self {
        DdComplex {
            re: self.re + o.re,
            im: self.im + o.im,
        }
    }

    pub fn abs_upper(self) -> f64 {
        self.re.hi.abs() + self.im.hi.abs()
    }
}
