//! Random nonnegative trig polynomials with known zeros, for property suites.
//!
//! A finite-zero case is `Q(theta) * prod_j sin^{2k_j}((theta - theta_j)/2)`
//! with `Q = c + (a cos + b sin)^2`, `c > 0`, so the zero set, the orders
//! `2k_j` and the leading coefficients are known exactly.

use std::f64::consts::TAU;

use rand::Rng;

use crate::trig_algebra::TrigPolynomial;

/// Smallest circular distance between planted zeros.
pub const MIN_SEPARATION: f64 = 1.0;
/// Upper bound on `sum_j k_j`.
pub const MAX_TOTAL_NU: u32 = 6;
/// Upper bound on each `k_j` (orders up to 8).
pub const MAX_NU: u32 = 4;

#[derive(Debug, Clone, PartialEq)]
pub enum Expected {
    IdenticallyZero,
    StrictlyPositive,
    /// `(theta_j, order, leading)` sorted by angle.
    FiniteZeros(Vec<(f64, u32, f64)>),
}

#[derive(Debug, Clone)]
pub struct PlantedCase {
    pub psi: TrigPolynomial,
    pub expected: Expected,
    /// `(c, a, b)` of the positive factor.
    factor: [f64; 3],
}

impl PlantedCase {
    /// Evaluates the factored form, free of coefficient rounding near zeros.
    pub fn exact(&self, theta: f64) -> f64 {
        let [c, a, b] = self.factor;
        let q = c + (a * theta.cos() + b * theta.sin()).powi(2);
        match &self.expected {
            Expected::IdenticallyZero => 0.0,
            Expected::StrictlyPositive => q,
            Expected::FiniteZeros(zs) => zs
                .iter()
                .map(|(t, order, _)| (0.5 * (theta - t)).sin().powi(*order as i32))
                .fold(q, |acc, f| acc * f),
        }
    }
}

fn circular_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    d.min(TAU - d)
}

fn positive_factor<R: Rng>(rng: &mut R) -> (TrigPolynomial, [f64; 3]) {
    let c = rng.gen_range(0.5..1.5);
    let a = rng.gen_range(-1.0..1.0);
    let b = rng.gen_range(-1.0..1.0);
    let lin = &TrigPolynomial::cos().scale(a) + &TrigPolynomial::sin().scale(b);
    (&TrigPolynomial::constant(c) + &(&lin * &lin), [c, a, b])
}

/// Half zero, one in five strictly positive, one in ten identically zero
/// (as a nontrivial expression), the rest with one to three planted zeros.
pub fn planted_case<R: Rng>(rng: &mut R) -> PlantedCase {
    let roll: f64 = rng.gen();
    if roll < 0.1 {
        // (cos^2 + sin^2 - 1) * random factor: zero on the circle, not as monomials
        let one = &(&TrigPolynomial::cos().powi(2) + &TrigPolynomial::sin().powi(2)) - &TrigPolynomial::constant(1.0);
        let (q, factor) = positive_factor(rng);
        return PlantedCase { psi: &one * &q, expected: Expected::IdenticallyZero, factor };
    }
    if roll < 0.3 {
        let (q, factor) = positive_factor(rng);
        return PlantedCase { psi: q, expected: Expected::StrictlyPositive, factor };
    }
    let count = rng.gen_range(1..=3usize);
    let mut thetas: Vec<f64> = Vec::new();
    while thetas.len() < count {
        let t = rng.gen_range(0.0..TAU);
        if thetas.iter().all(|s| circular_distance(*s, t) >= MIN_SEPARATION) {
            thetas.push(t);
        }
    }
    let mut nus: Vec<u32> = vec![1; count];
    let mut budget = MAX_TOTAL_NU - count as u32;
    for nu in nus.iter_mut() {
        let extra = rng.gen_range(0..=budget.min(MAX_NU - 1));
        *nu += extra;
        budget -= extra;
    }
    let (q, factor) = positive_factor(rng);
    let [c, a, b] = factor;
    let q_eval = |t: f64| c + (a * t.cos() + b * t.sin()).powi(2);
    let mut psi = q;
    for (t, nu) in thetas.iter().zip(&nus) {
        psi = &psi * &TrigPolynomial::half_versine(*t).powi(*nu);
    }
    let mut zeros: Vec<(f64, u32, f64)> = thetas
        .iter()
        .zip(&nus)
        .enumerate()
        .map(|(j, (t, nu))| {
            // sin^2(s/2) = s^2/4 + O(s^4)
            let mut lead = q_eval(*t) / 4f64.powi(*nu as i32);
            for (i, (s, mu)) in thetas.iter().zip(&nus).enumerate() {
                if i != j {
                    lead *= (0.5 * (t - s)).sin().powi(2 * *mu as i32);
                }
            }
            (*t, 2 * nu, lead)
        })
        .collect();
    zeros.sort_by(|a, b| a.0.total_cmp(&b.0));
    PlantedCase { psi, expected: Expected::FiniteZeros(zeros), factor }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn planted_zeros_are_zeros() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let case = planted_case(&mut rng);
            match &case.expected {
                Expected::IdenticallyZero => {
                    assert!(!case.psi.is_zero_expression());
                    assert!(case.psi.eval(0.3).abs() < 1e-12);
                }
                Expected::StrictlyPositive => assert!(case.psi.eval(1.0) > 0.0),
                Expected::FiniteZeros(zs) => {
                    for (t, order, lead) in zs {
                        assert!(case.psi.eval(*t).abs() < 1e-12);
                        if *order > 4 {
                            continue;
                        }
                        let s = 1e-2;
                        let ratio = 0.5 * (case.psi.eval(t + s) + case.psi.eval(t - s)) / s.powi(*order as i32);
                        assert!(((ratio - lead) / lead).abs() < 0.05);
                    }
                }
            }
        }
    }

    #[test]
    fn classify_recovers_planted_structure() {
        use crate::structure_analysis::{classify, local_ratio_error, ZeroClassification};
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for k in 0..300 {
            let case = planted_case(&mut rng);
            let got = classify(&case.psi).unwrap_or_else(|e| panic!("case {k}: {e}"));
            match (&case.expected, &got) {
                (Expected::IdenticallyZero, ZeroClassification::IdenticallyZero) => {}
                (Expected::StrictlyPositive, ZeroClassification::StrictlyPositive { .. }) => {}
                (Expected::FiniteZeros(want), ZeroClassification::FiniteZeros { zeros }) => {
                    assert_eq!(want.len(), zeros.len(), "case {k}");
                    for ((t, order, lead), z) in want.iter().zip(zeros) {
                        assert!((t - z.theta).abs() < 1e-6, "case {k}: {t} vs {}", z.theta);
                        assert_eq!(*order, z.order, "case {k}");
                        assert!(((lead - z.leading) / lead).abs() < 1e-6, "case {k}: {lead} vs {}", z.leading);
                        match local_ratio_error(&case.psi, z) {
                            Some(err) => assert!(err < 5e-2, "case {k}: {err}"),
                            // rounded coefficients hide the zero; use the factored form
                            None => {
                                let s = 1e-4;
                                let ratio = case.exact(z.theta + s) / s.powi(z.order as i32);
                                assert!(((ratio - z.leading) / z.leading).abs() < 5e-2, "case {k}");
                            }
                        }
                    }
                }
                (want, got) => panic!("case {k}: expected {want:?}, got {got:?}"),
            }
        }
    }
}
