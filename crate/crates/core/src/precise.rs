//! Double-double arithmetic, just enough to evaluate a monomial-basis trig
//! polynomial near a high-order zero where plain `f64` cancels to noise.

use crate::trig_algebra::TrigPolynomial;

/// Unevaluated sum `hi + lo` with `|lo| <= ulp(hi) / 2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DoubleDouble {
    pub hi: f64,
    pub lo: f64,
}

const PI_2_HI: f64 = 1.570_796_326_794_896_6;
const PI_2_LO: f64 = 6.123_233_995_736_766e-17;

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

impl DoubleDouble {
    pub const ZERO: DoubleDouble = DoubleDouble { hi: 0.0, lo: 0.0 };
    pub const ONE: DoubleDouble = DoubleDouble { hi: 1.0, lo: 0.0 };

    pub fn from_f64(v: f64) -> Self {
        DoubleDouble { hi: v, lo: 0.0 }
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    pub fn add(self, o: Self) -> Self {
        let (s, e) = two_sum(self.hi, o.hi);
        let (t, f) = two_sum(self.lo, o.lo);
        let (s, e) = quick_two_sum(s, e + t);
        let (hi, lo) = quick_two_sum(s, e + f);
        DoubleDouble { hi, lo }
    }

    pub fn neg(self) -> Self {
        DoubleDouble { hi: -self.hi, lo: -self.lo }
    }

    pub fn sub(self, o: Self) -> Self {
        self.add(o.neg())
    }

    pub fn mul(self, o: Self) -> Self {
        let (p, e) = two_prod(self.hi, o.hi);
        let e = e + (self.hi * o.lo + self.lo * o.hi);
        let (hi, lo) = quick_two_sum(p, e);
        DoubleDouble { hi, lo }
    }

    pub fn mul_f64(self, b: f64) -> Self {
        self.mul(Self::from_f64(b))
    }

    pub fn div_f64(self, b: f64) -> Self {
        let q1 = self.hi / b;
        let r = self.sub(Self::from_f64(q1).mul_f64(b));
        let q2 = r.hi / b;
        let (hi, lo) = quick_two_sum(q1, q2);
        DoubleDouble { hi, lo }
    }

    pub fn powi(self, n: u32) -> Self {
        let mut acc = Self::ONE;
        for _ in 0..n {
            acc = acc.mul(self);
        }
        acc
    }

    /// `(sin x, cos x)` to roughly 1e-31 relative for moderate `|x|`.
    pub fn sin_cos(self) -> (Self, Self) {
        let k = (self.hi / PI_2_HI).round();
        let pi_2 = DoubleDouble { hi: PI_2_HI, lo: PI_2_LO };
        let r = self.sub(pi_2.mul_f64(k));
        let (s, c) = taylor_sin_cos(r);
        match (k as i64).rem_euclid(4) {
            0 => (s, c),
            1 => (c, s.neg()),
            2 => (s.neg(), c.neg()),
            _ => (c.neg(), s),
        }
    }
}

fn taylor_sin_cos(r: DoubleDouble) -> (DoubleDouble, DoubleDouble) {
    let r2 = r.mul(r);
    let mut sin = r;
    let mut cos = DoubleDouble::ONE;
    let mut term_s = r;
    let mut term_c = DoubleDouble::ONE;
    for n in 1..40 {
        let n = n as f64;
        term_s = term_s.mul(r2).div_f64(-(2.0 * n) * (2.0 * n + 1.0));
        term_c = term_c.mul(r2).div_f64(-(2.0 * n - 1.0) * (2.0 * n));
        sin = sin.add(term_s);
        cos = cos.add(term_c);
        if term_s.hi.abs() < 1e-34 && term_c.hi.abs() < 1e-34 {
            break;
        }
    }
    (sin, cos)
}

/// `psi(theta0 + s)` in double-double. `theta0 + s` is formed exactly.
pub fn eval_shifted(psi: &TrigPolynomial, theta0: f64, s: f64) -> DoubleDouble {
    let (hi, lo) = two_sum(theta0, s);
    let (sin, cos) = DoubleDouble { hi, lo }.sin_cos();
    let mut acc = DoubleDouble::ZERO;
    for t in psi.terms() {
        let v = cos.powi(t.cos_pow).mul(sin.powi(t.sin_pow)).mul_f64(t.coef);
        acc = acc.add(v);
    }
    acc
}

/// Rough absolute noise floor of [`eval_shifted`] for `psi`.
pub fn shifted_noise_floor(psi: &TrigPolynomial) -> f64 {
    let total: f64 = psi.terms().iter().map(|t| t.coef.abs()).sum();
    // coefficients that are not short dyadics are already rounded to f64
    let rounded: f64 = psi
        .terms()
        .iter()
        .filter(|t| (t.coef * 2f64.powi(30)).fract() != 0.0)
        .map(|t| t.coef.abs())
        .sum();
    // 2^-104 per operation, times a generous operation count
    total * 4.93e-32 * 64.0 + rounded * f64::EPSILON
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sin_cos_matches_f64() {
        for k in -20..20 {
            let x = 0.37 * k as f64;
            let (s, c) = DoubleDouble::from_f64(x).sin_cos();
            assert!((s.to_f64() - x.sin()).abs() < 1e-15);
            assert!((c.to_f64() - x.cos()).abs() < 1e-15);
        }
    }

    #[test]
    fn pythagoras_holds_beyond_double_precision() {
        for k in 0..50 {
            let x = DoubleDouble::from_f64(0.123 * k as f64).add(DoubleDouble::from_f64(1e-20));
            let (s, c) = x.sin_cos();
            let one = s.mul(s).add(c.mul(c)).sub(DoubleDouble::ONE);
            assert!(one.to_f64().abs() < 1e-29, "{:e}", one.to_f64());
        }
    }

    #[test]
    fn resolves_sixth_order_zero() {
        // (1 - sin)^3 near pi/2: (s^2/2)^3 = s^6 / 8
        let one_minus_sin = &TrigPolynomial::constant(1.0) - &TrigPolynomial::sin();
        let psi = one_minus_sin.powi(3);
        let s = 1e-4;
        let v = eval_shifted(&psi, std::f64::consts::FRAC_PI_2, s).to_f64();
        let ratio = v / s.powi(6);
        assert!((ratio - 0.125).abs() < 1e-3, "{ratio}");
    }
}
