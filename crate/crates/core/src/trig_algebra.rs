//! Symbols of the quadratic and cubic parts of `F(du)` and trigonometric
//! polynomials in the monomial basis `cos^p1(theta) sin^p2(theta)`.
//!
//! Derivative index 0 is the time derivative, 1 and 2 are the spatial ones.
//! On the unit circle the symbol is evaluated at `(omega_0, omega_1,
//! omega_2) = (-1, cos theta, sin theta)`.

use std::collections::BTreeMap;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on `omega_1^2 + omega_2^2 - 1` for a valid direction.
pub const UNIT_TOLERANCE: f64 = 1e-12;

/// Coefficients `B_jk` and `C_jkl` of
/// `F_q = sum B_jk d_j u d_k u` and `F_c = sum C_jkl d_j u d_k u d_l u`.
///
/// Stored exactly as given (not symmetrized). Every evaluation sums over
/// all index tuples, so a tensor and its symmetrization give the same
/// values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FlatCoefficients", into = "FlatCoefficients")]
pub struct NonlinearityCoefficients {
    pub b: [[f64; 3]; 3],
    pub c: [[[f64; 3]; 3]; 3],
}

/// Wire form: `"B"` row-major (9 reals), `"C"` with `l` fastest (27 reals).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FlatCoefficients {
    #[serde(rename = "B")]
    pub b: Vec<f64>,
    #[serde(rename = "C")]
    pub c: Vec<f64>,
}

impl TryFrom<FlatCoefficients> for NonlinearityCoefficients {
    type Error = Error;

    fn try_from(flat: FlatCoefficients) -> Result<Self> {
        NonlinearityCoefficients::from_flat(&flat.b, &flat.c)
    }
}

impl From<NonlinearityCoefficients> for FlatCoefficients {
    fn from(coeffs: NonlinearityCoefficients) -> Self {
        let (b, c) = coeffs.to_flat();
        FlatCoefficients { b, c }
    }
}

impl Default for NonlinearityCoefficients {
    fn default() -> Self {
        Self::zero()
    }
}

impl NonlinearityCoefficients {
    pub fn zero() -> Self {
        NonlinearityCoefficients {
            b: [[0.0; 3]; 3],
            c: [[[0.0; 3]; 3]; 3],
        }
    }

    pub fn from_flat(b: &[f64], c: &[f64]) -> Result<Self> {
        if b.len() != 9 {
            return Err(Error::input(format!("\"B\" needs 9 entries, got {}", b.len())));
        }
        if c.len() != 27 {
            return Err(Error::input(format!("\"C\" needs 27 entries, got {}", c.len())));
        }
        if b.iter().chain(c).any(|v| !v.is_finite()) {
            return Err(Error::input("coefficients must be finite"));
        }
        let mut out = Self::zero();
        for j in 0..3 {
            for k in 0..3 {
                out.b[j][k] = b[3 * j + k];
                for l in 0..3 {
                    out.c[j][k][l] = c[9 * j + 3 * k + l];
                }
            }
        }
        Ok(out)
    }

    pub fn to_flat(&self) -> (Vec<f64>, Vec<f64>) {
        let b = self.b.iter().flatten().copied().collect();
        let c = self.c.iter().flatten().flatten().copied().collect();
        (b, c)
    }

    /// Adds `coef * (a . du) (b . du)` to the quadratic part.
    pub fn add_quadratic_product(mut self, coef: f64, a: [f64; 3], b: [f64; 3]) -> Self {
        for j in 0..3 {
            for k in 0..3 {
                self.b[j][k] += coef * a[j] * b[k];
            }
        }
        self
    }

    /// Adds `coef * (a . du) (b . du) (c . du)` to the cubic part.
    pub fn add_cubic_product(mut self, coef: f64, a: [f64; 3], b: [f64; 3], c: [f64; 3]) -> Self {
        for j in 0..3 {
            for k in 0..3 {
                for l in 0..3 {
                    self.c[j][k][l] += coef * a[j] * b[k] * c[l];
                }
            }
        }
        self
    }

    /// `Q_0 = (d_t u)^2 - |grad u|^2`.
    pub fn with_null_form(self) -> Self {
        let mut out = self;
        out.b[0][0] += 1.0;
        out.b[1][1] -= 1.0;
        out.b[2][2] -= 1.0;
        out
    }

    pub fn symmetrized(&self) -> Self {
        let mut out = Self::zero();
        for j in 0..3 {
            for k in 0..3 {
                out.b[j][k] = 0.5 * (self.b[j][k] + self.b[k][j]);
                for l in 0..3 {
                    let perms = [
                        self.c[j][k][l],
                        self.c[j][l][k],
                        self.c[k][j][l],
                        self.c[k][l][j],
                        self.c[l][j][k],
                        self.c[l][k][j],
                    ];
                    out.c[j][k][l] = perms.iter().sum::<f64>() / 6.0;
                }
            }
        }
        out
    }

    /// `F_q` evaluated at a derivative vector `(d_t u, d_1 u, d_2 u)`.
    pub fn quadratic_at(&self, d: [f64; 3]) -> f64 {
        let mut acc = 0.0;
        for j in 0..3 {
            for k in 0..3 {
                acc += self.b[j][k] * d[j] * d[k];
            }
        }
        acc
    }

    /// `F_c` evaluated at a derivative vector.
    pub fn cubic_at(&self, d: [f64; 3]) -> f64 {
        let mut acc = 0.0;
        for j in 0..3 {
            for k in 0..3 {
                for l in 0..3 {
                    acc += self.c[j][k][l] * d[j] * d[k] * d[l];
                }
            }
        }
        acc
    }

    pub fn is_zero(&self) -> bool {
        self.b.iter().flatten().all(|v| *v == 0.0)
            && self.c.iter().flatten().flatten().all(|v| *v == 0.0)
    }
}

/// A point `omega` on the unit circle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 2]", into = "[f64; 2]")]
pub struct Direction {
    w1: f64,
    w2: f64,
}

impl TryFrom<[f64; 2]> for Direction {
    type Error = Error;

    fn try_from(w: [f64; 2]) -> Result<Self> {
        Direction::new(w[0], w[1])
    }
}

impl From<Direction> for [f64; 2] {
    fn from(d: Direction) -> Self {
        [d.w1, d.w2]
    }
}

impl Direction {
    pub fn new(w1: f64, w2: f64) -> Result<Self> {
        let defect = w1 * w1 + w2 * w2 - 1.0;
        if !defect.is_finite() || defect.abs() > UNIT_TOLERANCE {
            return Err(Error::input(format!(
                "direction ({w1}, {w2}) is not a unit vector (|w|^2 - 1 = {defect:e})"
            )));
        }
        Ok(Direction { w1, w2 })
    }

    pub fn from_angle(theta: f64) -> Self {
        Direction {
            w1: theta.cos(),
            w2: theta.sin(),
        }
    }

    pub fn w1(&self) -> f64 {
        self.w1
    }

    pub fn w2(&self) -> f64 {
        self.w2
    }

    /// Angle in `[0, 2 pi)`.
    pub fn angle(&self) -> f64 {
        self.w2.atan2(self.w1).rem_euclid(std::f64::consts::TAU)
    }

    /// `(omega_0, omega_1, omega_2)` with `omega_0 = -1`.
    pub fn hat(&self) -> [f64; 3] {
        [-1.0, self.w1, self.w2]
    }
}

/// `F_q(omega_hat)`.
pub fn eval_quadratic_symbol(coeffs: &NonlinearityCoefficients, dir: &Direction) -> f64 {
    coeffs.quadratic_at(dir.hat())
}

/// `P(omega) = F_c(omega_hat)`.
pub fn eval_cubic_symbol(coeffs: &NonlinearityCoefficients, dir: &Direction) -> f64 {
    coeffs.cubic_at(dir.hat())
}

/// One term `coef * cos^cos_pow sin^sin_pow`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Monomial {
    pub cos_pow: u32,
    pub sin_pow: u32,
    pub coef: f64,
}

/// Finite sum of monomials `coef * cos^p1(theta) sin^p2(theta)`.
///
/// Like terms are merged and exact zeros dropped, so the term list is a
/// canonical form for the monomial expression (not for the function: the
/// basis is redundant on the circle since `cos^2 + sin^2 = 1`).
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrigPolynomial {
    terms: Vec<Monomial>,
}

impl TrigPolynomial {
    pub fn new(terms: impl IntoIterator<Item = Monomial>) -> Self {
        let mut merged: BTreeMap<(u32, u32), f64> = BTreeMap::new();
        for t in terms {
            *merged.entry((t.cos_pow, t.sin_pow)).or_insert(0.0) += t.coef;
        }
        let terms = merged
            .into_iter()
            .filter(|(_, c)| *c != 0.0)
            .map(|((cos_pow, sin_pow), coef)| Monomial {
                cos_pow,
                sin_pow,
                coef,
            })
            .collect();
        TrigPolynomial { terms }
    }

    pub fn zero() -> Self {
        TrigPolynomial { terms: Vec::new() }
    }

    pub fn constant(c: f64) -> Self {
        Self::monomial(0, 0, c)
    }

    pub fn monomial(cos_pow: u32, sin_pow: u32, coef: f64) -> Self {
        Self::new([Monomial {
            cos_pow,
            sin_pow,
            coef,
        }])
    }

    pub fn cos() -> Self {
        Self::monomial(1, 0, 1.0)
    }

    pub fn sin() -> Self {
        Self::monomial(0, 1, 1.0)
    }

    /// `(1 - cos(theta - theta0)) / 2 = sin^2((theta - theta0)/2)`, which has
    /// a zero of order 2 at `theta0` with leading coefficient 1/4.
    pub fn half_versine(theta0: f64) -> Self {
        Self::new([
            Monomial { cos_pow: 0, sin_pow: 0, coef: 0.5 },
            Monomial { cos_pow: 1, sin_pow: 0, coef: -0.5 * theta0.cos() },
            Monomial { cos_pow: 0, sin_pow: 1, coef: -0.5 * theta0.sin() },
        ])
    }

    pub fn terms(&self) -> &[Monomial] {
        &self.terms
    }

    pub fn is_zero_expression(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.terms
            .iter()
            .map(|t| t.cos_pow + t.sin_pow)
            .max()
            .unwrap_or(0)
    }

    pub fn max_abs_coefficient(&self) -> f64 {
        self.terms.iter().map(|t| t.coef.abs()).fold(0.0, f64::max)
    }

    pub fn eval(&self, theta: f64) -> f64 {
        let (s, c) = theta.sin_cos();
        self.terms
            .iter()
            .map(|t| t.coef * c.powi(t.cos_pow as i32) * s.powi(t.sin_pow as i32))
            .sum()
    }

    /// Exact derivative in theta. The total degree of each term is kept.
    pub fn derivative(&self) -> Self {
        let mut out = Vec::with_capacity(2 * self.terms.len());
        for t in &self.terms {
            if t.cos_pow > 0 {
                out.push(Monomial {
                    cos_pow: t.cos_pow - 1,
                    sin_pow: t.sin_pow + 1,
                    coef: -(t.cos_pow as f64) * t.coef,
                });
            }
            if t.sin_pow > 0 {
                out.push(Monomial {
                    cos_pow: t.cos_pow + 1,
                    sin_pow: t.sin_pow - 1,
                    coef: t.sin_pow as f64 * t.coef,
                });
            }
        }
        Self::new(out)
    }

    pub fn nth_derivative(&self, n: usize) -> Self {
        let mut d = self.clone();
        for _ in 0..n {
            d = d.derivative();
        }
        d
    }

    /// `[psi, psi', ..., psi^(n)]`.
    pub fn derivatives(&self, n: usize) -> Vec<TrigPolynomial> {
        let mut out = Vec::with_capacity(n + 1);
        out.push(self.clone());
        for k in 0..n {
            let next = out[k].derivative();
            out.push(next);
        }
        out
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self::new(self.terms.iter().map(|t| Monomial {
            coef: t.coef * factor,
            ..*t
        }))
    }

    pub fn powi(&self, n: u32) -> Self {
        let mut acc = Self::constant(1.0);
        for _ in 0..n {
            acc = &acc * self;
        }
        acc
    }

    /// Exact Fourier coefficients via `cos = (z + 1/z)/2`, `sin = (z - 1/z)/(2i)`.
    pub fn to_fourier(&self) -> FourierSeries {
        let n = self.degree() as usize;
        let mut laurent = vec![Complex64::new(0.0, 0.0); 2 * n + 1];
        for t in &self.terms {
            let term = monomial_laurent(t.cos_pow, t.sin_pow);
            let m = (t.cos_pow + t.sin_pow) as usize;
            for (idx, v) in term.iter().enumerate() {
                // term index idx is the power idx - m
                laurent[idx + n - m] += v * t.coef;
            }
        }
        let mut cos_coefs = vec![0.0; n + 1];
        let mut sin_coefs = vec![0.0; n + 1];
        cos_coefs[0] = laurent[n].re;
        for k in 1..=n {
            let ck = laurent[n + k];
            cos_coefs[k] = 2.0 * ck.re;
            sin_coefs[k] = -2.0 * ck.im;
        }
        FourierSeries {
            cos_coefs,
            sin_coefs,
        }
    }
}

/// Laurent coefficients of `cos^p sin^q`, powers `-(p+q)..=(p+q)`.
fn monomial_laurent(p: u32, q: u32) -> Vec<Complex64> {
    let mut acc = vec![Complex64::new(1.0, 0.0)];
    let cos_factor = [Complex64::new(0.5, 0.0), Complex64::new(0.0, 0.0), Complex64::new(0.5, 0.0)];
    // 1/(2i) = -i/2 multiplies z, +i/2 multiplies 1/z
    let sin_factor = [Complex64::new(0.0, 0.5), Complex64::new(0.0, 0.0), Complex64::new(0.0, -0.5)];
    for _ in 0..p {
        acc = convolve(&acc, &cos_factor);
    }
    for _ in 0..q {
        acc = convolve(&acc, &sin_factor);
    }
    acc
}

fn convolve(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// `a_0 + sum_k (a_k cos k theta + b_k sin k theta)`; `sin_coefs[0]` is unused.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FourierSeries {
    pub cos_coefs: Vec<f64>,
    pub sin_coefs: Vec<f64>,
}

impl FourierSeries {
    pub fn eval(&self, theta: f64) -> f64 {
        let mut acc = self.cos_coefs.first().copied().unwrap_or(0.0);
        for k in 1..self.cos_coefs.len() {
            let (s, c) = (k as f64 * theta).sin_cos();
            acc += self.cos_coefs[k] * c + self.sin_coefs[k] * s;
        }
        acc
    }

    pub fn max_abs_coefficient(&self) -> f64 {
        self.cos_coefs
            .iter()
            .chain(self.sin_coefs.iter().skip(1))
            .map(|v| v.abs())
            .fold(0.0, f64::max)
    }
}

impl Add for &TrigPolynomial {
    type Output = TrigPolynomial;
    fn add(self, rhs: &TrigPolynomial) -> TrigPolynomial {
        TrigPolynomial::new(self.terms.iter().chain(rhs.terms.iter()).copied())
    }
}

impl Sub for &TrigPolynomial {
    type Output = TrigPolynomial;
    fn sub(self, rhs: &TrigPolynomial) -> TrigPolynomial {
        self + &(-rhs)
    }
}

impl Neg for &TrigPolynomial {
    type Output = TrigPolynomial;
    fn neg(self) -> TrigPolynomial {
        self.scale(-1.0)
    }
}

impl Mul for &TrigPolynomial {
    type Output = TrigPolynomial;
    fn mul(self, rhs: &TrigPolynomial) -> TrigPolynomial {
        let mut out = Vec::with_capacity(self.terms.len() * rhs.terms.len());
        for a in &self.terms {
            for b in &rhs.terms {
                out.push(Monomial {
                    cos_pow: a.cos_pow + b.cos_pow,
                    sin_pow: a.sin_pow + b.sin_pow,
                    coef: a.coef * b.coef,
                });
            }
        }
        TrigPolynomial::new(out)
    }
}

/// Powers of (cos, sin) contributed by an index tuple: index 0 gives a factor
/// `omega_0 = -1`, index 1 a `cos`, index 2 a `sin`.
fn index_monomial(indices: &[usize], coef: f64) -> Monomial {
    let mut sign = 1.0;
    let (mut p1, mut p2) = (0, 0);
    for &i in indices {
        match i {
            0 => sign = -sign,
            1 => p1 += 1,
            _ => p2 += 1,
        }
    }
    Monomial {
        cos_pow: p1,
        sin_pow: p2,
        coef: sign * coef,
    }
}

/// `theta -> F_q(-1, cos theta, sin theta)`.
pub fn quadratic_to_trig_poly(coeffs: &NonlinearityCoefficients) -> TrigPolynomial {
    let mut terms = Vec::with_capacity(9);
    for j in 0..3 {
        for k in 0..3 {
            terms.push(index_monomial(&[j, k], coeffs.b[j][k]));
        }
    }
    TrigPolynomial::new(terms)
}

/// `Psi(theta) = P(cos theta, sin theta)`.
pub fn cubic_to_trig_poly(coeffs: &NonlinearityCoefficients) -> TrigPolynomial {
    let mut terms = Vec::with_capacity(27);
    for j in 0..3 {
        for k in 0..3 {
            for l in 0..3 {
                terms.push(index_monomial(&[j, k, l], coeffs.c[j][k][l]));
            }
        }
    }
    TrigPolynomial::new(terms)
}

pub fn differentiate(psi: &TrigPolynomial) -> TrigPolynomial {
    psi.derivative()
}

pub fn eval_trig(psi: &TrigPolynomial, theta: f64) -> f64 {
    psi.eval(theta)
}

/// The three cubic terms used throughout as reference cases.
pub mod examples {
    use super::NonlinearityCoefficients;

    const DT: [f64; 3] = [1.0, 0.0, 0.0];
    const D1: [f64; 3] = [0.0, 1.0, 0.0];
    const DT_PLUS_D2: [f64; 3] = [1.0, 0.0, 1.0];

    /// `-(d_1 u)^2 d_t u`, symbol `omega_1^2`.
    pub fn d1_squared_dt() -> NonlinearityCoefficients {
        NonlinearityCoefficients::zero().add_cubic_product(-1.0, D1, D1, DT)
    }

    /// `-(d_1 u)^2 (d_t u + d_2 u)`, symbol `omega_1^2 (1 - omega_2)`.
    pub fn d1_squared_dt_plus_d2() -> NonlinearityCoefficients {
        NonlinearityCoefficients::zero().add_cubic_product(-1.0, D1, D1, DT_PLUS_D2)
    }

    /// `-(d_t u + d_2 u)^3`, symbol `(1 - omega_2)^3`.
    pub fn dt_plus_d2_cubed() -> NonlinearityCoefficients {
        NonlinearityCoefficients::zero().add_cubic_product(-1.0, DT_PLUS_D2, DT_PLUS_D2, DT_PLUS_D2)
    }

    /// `-(d_t u)^3`, symbol identically 1.
    pub fn cubic_damping() -> NonlinearityCoefficients {
        NonlinearityCoefficients::zero().add_cubic_product(-1.0, DT, DT, DT)
    }

    /// `d_t u ((d_t u)^2 - |grad u|^2)`, which satisfies the cubic null condition.
    pub fn cubic_null_example() -> NonlinearityCoefficients {
        let mut c = NonlinearityCoefficients::zero();
        c.c[0][0][0] = 1.0;
        c.c[0][1][1] = -1.0;
        c.c[0][2][2] = -1.0;
        c
    }
}

#[cfg(test)]
mod tests {
    use super::examples::*;
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI, TAU};

    fn random_coeffs(rng: &mut ChaCha8Rng) -> NonlinearityCoefficients {
        let b: Vec<f64> = (0..9).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let c: Vec<f64> = (0..27).map(|_| rng.gen_range(-2.0..2.0)).collect();
        NonlinearityCoefficients::from_flat(&b, &c).unwrap()
    }

    #[test]
    fn quadratic_symbol_examples() {
        let null = NonlinearityCoefficients::zero().with_null_form();
        for k in 0..7 {
            let d = Direction::from_angle(0.37 * k as f64);
            assert!(eval_quadratic_symbol(&null, &d).abs() < 1e-15);
        }
        let mut b00 = NonlinearityCoefficients::zero();
        b00.b[0][0] = 1.0;
        assert_eq!(eval_quadratic_symbol(&b00, &Direction::new(1.0, 0.0).unwrap()), 1.0);
        let mut b12 = NonlinearityCoefficients::zero();
        b12.b[1][2] = 1.0;
        let d = Direction::from_angle(FRAC_PI_4);
        assert!((eval_quadratic_symbol(&b12, &d) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn cubic_symbol_examples() {
        let d = Direction::from_angle(1.234);
        assert_eq!(eval_cubic_symbol(&cubic_damping(), &d), 1.0);
        let x = Direction::new(1.0, 0.0).unwrap();
        let y = Direction::new(0.0, 1.0).unwrap();
        assert_eq!(eval_cubic_symbol(&d1_squared_dt(), &x), 1.0);
        assert_eq!(eval_cubic_symbol(&d1_squared_dt(), &y), 0.0);
    }

    #[test]
    fn non_unit_direction_is_rejected() {
        assert!(matches!(Direction::new(1.0, 0.1), Err(Error::InvalidInput(_))));
        assert!(Direction::new(0.6, 0.8).is_ok());
        assert!(serde_json::from_str::<Direction>("[2.0, 0.0]").is_err());
    }

    #[test]
    fn cubic_trig_poly_examples() {
        let psi = cubic_to_trig_poly(&d1_squared_dt());
        assert_eq!(psi, TrigPolynomial::monomial(2, 0, 1.0));

        let one_minus_sin = &TrigPolynomial::constant(1.0) - &TrigPolynomial::sin();
        let psi3 = cubic_to_trig_poly(&dt_plus_d2_cubed());
        assert_eq!(psi3, one_minus_sin.powi(3));

        assert!(cubic_to_trig_poly(&NonlinearityCoefficients::zero()).is_zero_expression());
    }

    #[test]
    fn derivative_examples() {
        let d = differentiate(&TrigPolynomial::monomial(2, 0, 1.0));
        assert_eq!(d, TrigPolynomial::monomial(1, 1, -2.0));
        assert!(differentiate(&TrigPolynomial::constant(1.0)).is_zero_expression());
        let one_minus_sin = &TrigPolynomial::constant(1.0) - &TrigPolynomial::sin();
        assert_eq!(differentiate(&one_minus_sin), TrigPolynomial::monomial(1, 0, -1.0));
    }

    #[test]
    fn eval_examples() {
        let cos2 = TrigPolynomial::monomial(2, 0, 1.0);
        assert!(eval_trig(&cos2, FRAC_PI_2).abs() < 1e-30);
        let psi3 = cubic_to_trig_poly(&dt_plus_d2_cubed());
        assert!(eval_trig(&psi3, FRAC_PI_2).abs() < 1e-15);
        // nonvanishing factor (1 - sin) of cos^2 (1 - sin) at 3 pi / 2
        let psi2 = cubic_to_trig_poly(&d1_squared_dt_plus_d2());
        let factor = &TrigPolynomial::constant(1.0) - &TrigPolynomial::sin();
        assert!((eval_trig(&factor, 3.0 * FRAC_PI_2) - 2.0).abs() < 1e-15);
        assert!(eval_trig(&psi2, 3.0 * FRAC_PI_2).abs() < 1e-30);
    }

    #[test]
    fn fourier_of_known_polynomials() {
        // cos^2 = 1/2 + cos(2 theta)/2
        let f = TrigPolynomial::monomial(2, 0, 1.0).to_fourier();
        assert!((f.cos_coefs[0] - 0.5).abs() < 1e-15);
        assert!((f.cos_coefs[2] - 0.5).abs() < 1e-15);
        assert!(f.cos_coefs[1].abs() < 1e-15 && f.sin_coefs[1].abs() < 1e-15);
        // cos sin = sin(2 theta)/2
        let g = TrigPolynomial::monomial(1, 1, 1.0).to_fourier();
        assert!((g.sin_coefs[2] - 0.5).abs() < 1e-15);
        // cos^2 + sin^2 - 1 vanishes as a function
        let id = TrigPolynomial::new([
            Monomial { cos_pow: 2, sin_pow: 0, coef: 1.0 },
            Monomial { cos_pow: 0, sin_pow: 2, coef: 1.0 },
            Monomial { cos_pow: 0, sin_pow: 0, coef: -1.0 },
        ]);
        assert!(!id.is_zero_expression());
        assert!(id.to_fourier().max_abs_coefficient() < 1e-15);
    }

    #[test]
    fn symbol_and_polynomial_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let coeffs = random_coeffs(&mut rng);
            let psi = cubic_to_trig_poly(&coeffs);
            let fourier = psi.to_fourier();
            for _ in 0..64 {
                let theta = rng.gen_range(0.0..TAU);
                let direct = eval_cubic_symbol(&coeffs, &Direction::from_angle(theta));
                let via_poly = psi.eval(theta);
                assert!((direct - via_poly).abs() <= 1e-12 * direct.abs().max(1.0));
                let via_fourier = fourier.eval(theta);
                assert!((via_fourier - via_poly).abs() <= 1e-10 * via_poly.abs().max(1.0));
            }
        }
    }

    #[test]
    fn symmetrization_does_not_change_symbols() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let coeffs = random_coeffs(&mut rng);
            let sym = coeffs.symmetrized();
            for _ in 0..32 {
                let d = Direction::from_angle(rng.gen_range(0.0..TAU));
                let a = eval_cubic_symbol(&coeffs, &d);
                let b = eval_cubic_symbol(&sym, &d);
                assert!((a - b).abs() < 1e-12);
                let qa = eval_quadratic_symbol(&coeffs, &d);
                let qb = eval_quadratic_symbol(&sym, &d);
                assert!((qa - qb).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn derivative_matches_central_difference() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10 {
            let psi = cubic_to_trig_poly(&random_coeffs(&mut rng));
            let d = psi.derivative();
            for _ in 0..32 {
                let theta = rng.gen_range(0.0..TAU);
                let h = 1e-5;
                let fd = (psi.eval(theta + h) - psi.eval(theta - h)) / (2.0 * h);
                assert!((fd - d.eval(theta)).abs() < 1e-7);
            }
        }
    }

    #[test]
    fn flat_round_trip_respects_index_order() {
        let mut c = vec![0.0; 27];
        c[9 * 1 + 3 * 1] = -1.0; // C_110
        let coeffs = NonlinearityCoefficients::from_flat(&[0.0; 9], &c).unwrap();
        assert_eq!(coeffs, d1_squared_dt());
        let json = serde_json::to_string(&coeffs).unwrap();
        let back: NonlinearityCoefficients = serde_json::from_str(&json).unwrap();
        assert_eq!(back, coeffs);
        assert!(NonlinearityCoefficients::from_flat(&[0.0; 8], &c).is_err());
    }

    #[test]
    fn half_versine_has_double_zero() {
        let f = TrigPolynomial::half_versine(1.0);
        assert!(f.eval(1.0).abs() < 1e-16);
        assert!((f.eval(1.0 + PI) - 1.0).abs() < 1e-15);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn poly_strategy() -> impl Strategy<Value = TrigPolynomial> {
            prop::collection::vec((0u32..4, 0u32..4, -3.0f64..3.0), 1..8).prop_map(|v| {
                TrigPolynomial::new(v.into_iter().map(|(p1, p2, coef)| Monomial {
                    cos_pow: p1,
                    sin_pow: p2,
                    coef,
                }))
            })
        }

        proptest! {
            #[test]
            fn periodic(psi in poly_strategy(), theta in 0.0f64..TAU) {
                let a = psi.eval(theta);
                let b = psi.eval(theta + TAU);
                prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
            }

            #[test]
            fn second_derivative_is_derivative_twice(psi in poly_strategy()) {
                prop_assert_eq!(psi.derivative().derivative(), psi.nth_derivative(2));
            }

            #[test]
            fn fourier_agrees_with_monomials(psi in poly_strategy(), theta in 0.0f64..TAU) {
                let a = psi.eval(theta);
                let b = psi.to_fourier().eval(theta);
                prop_assert!((a - b).abs() <= 1e-10 * a.abs().max(1.0));
            }

            #[test]
            fn product_evaluates_as_product(a in poly_strategy(), b in poly_strategy(), theta in 0.0f64..TAU) {
                let lhs = (&a * &b).eval(theta);
                let rhs = a.eval(theta) * b.eval(theta);
                prop_assert!((lhs - rhs).abs() <= 1e-10 * rhs.abs().max(1.0));
            }
        }
    }
}
