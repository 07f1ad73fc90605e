//! Null conditions, the Agemi condition, and the decay prediction.
//!
//! A nonnegative trig polynomial `Psi` either vanishes identically, is
//! strictly positive, or has finitely many zeros, each of even order `2 nu_j`
//! with `Psi(theta_j + s) ~ c_j s^(2 nu_j)`. The largest `nu_j` fixes the
//! energy decay exponent `lambda = 1/(4 nu) - delta`.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::precise;
use crate::quadrature;
use crate::trig_algebra::{cubic_to_trig_poly, quadratic_to_trig_poly, NonlinearityCoefficients, TrigPolynomial};

/// Fourier coefficients below this are treated as zero (null conditions).
pub const NULL_TOLERANCE: f64 = 1e-12;
/// `Psi < -NONNEG_TOLERANCE` anywhere means the Agemi condition fails.
pub const NONNEG_TOLERANCE: f64 = 1e-10;
/// A refined local minimum below `ZERO_TOLERANCE * scale` is a zero.
pub const ZERO_TOLERANCE: f64 = 1e-9;
/// Derivative-order threshold `tau_k = ORDER_THRESHOLD * scale * k!`.
pub const ORDER_THRESHOLD: f64 = 1e-7;
/// Uniform samples on the circle for the first pass.
pub const SAMPLES: usize = 4096;
/// Default slack in `lambda = 1/(4 nu) - delta`.
pub const DEFAULT_DELTA: f64 = 0.01;
/// `mu = MU_FACTOR * min{1/10, (1 - 4 lambda)/(2 - 4 lambda)}`.
pub const DEFAULT_MU_FACTOR: f64 = 0.9;

fn sig12<S: Serializer>(x: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_f64(round_significant(*x, 12))
}

/// Rounds to `digits` significant decimal digits.
pub fn round_significant(x: f64, digits: usize) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{:.*e}", digits - 1, x).parse().unwrap_or(x)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZeroInfo {
    /// Location in `[0, 2 pi)`.
    #[serde(serialize_with = "sig12")]
    pub theta: f64,
    /// Vanishing order `2 nu_j`; always even.
    pub order: u32,
    /// `c_j = Psi^(order)(theta_j) / order!`, strictly positive.
    pub leading: f64,
}

impl ZeroInfo {
    pub fn nu(&self) -> u32 {
        self.order / 2
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "case", rename_all = "snake_case")]
pub enum ZeroClassification {
    IdenticallyZero,
    StrictlyPositive { min_value: f64 },
    FiniteZeros { zeros: Vec<ZeroInfo> },
}

impl ZeroClassification {
    pub fn zeros(&self) -> &[ZeroInfo] {
        match self {
            ZeroClassification::FiniteZeros { zeros } => zeros,
            _ => &[],
        }
    }

    /// `nu = max nu_j` for the finite-zeros case.
    pub fn max_nu(&self) -> Option<u32> {
        self.zeros().iter().map(ZeroInfo::nu).max()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayPrediction {
    pub nu: u32,
    /// Lemma-3.2 integrability threshold `1/(2 nu)`.
    pub gamma_max: f64,
    pub lambda: f64,
    pub delta: f64,
    pub mu: f64,
    /// `||u(t)||_E = O((log t)^rate)` with `rate = -lambda`.
    pub energy_rate_exponent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Agemi {
    Fails {
        #[serde(serialize_with = "sig12")]
        witness: f64,
        value: f64,
    },
    Holds,
    HoldsStrictly { min_value: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub quadratic_null: bool,
    pub cubic_null: bool,
    pub agemi: Agemi,
    /// Absent when `Psi` takes negative values (the trichotomy needs `Psi >= 0`).
    pub classification: Option<ZeroClassification>,
    pub prediction: Option<DecayPrediction>,
    /// Quadratic null condition holds, Agemi holds, cubic null fails.
    pub theorem_regime: bool,
}

pub fn check_quadratic_null(coeffs: &NonlinearityCoefficients) -> bool {
    quadratic_to_trig_poly(coeffs).to_fourier().max_abs_coefficient() < NULL_TOLERANCE
}

pub fn check_cubic_null(coeffs: &NonlinearityCoefficients) -> bool {
    cubic_to_trig_poly(coeffs).to_fourier().max_abs_coefficient() < NULL_TOLERANCE
}

/// Scale used by the tolerances: `max(1, max |monomial coefficient|)`.
fn scale_of(psi: &TrigPolynomial) -> f64 {
    psi.max_abs_coefficient().max(1.0)
}

fn order_threshold(scale: f64, k: usize) -> f64 {
    let fact: f64 = (1..=k).map(|i| i as f64).product();
    ORDER_THRESHOLD * scale * fact
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

fn wrap_angle(theta: f64) -> f64 {
    let t = theta.rem_euclid(TAU);
    if t >= TAU {
        0.0
    } else {
        t
    }
}

/// Sign-change roots of `f` on `[a, b]` from `n` uniform subintervals.
fn roots_in(f: &TrigPolynomial, a: f64, b: f64, n: usize) -> Vec<f64> {
    let step = (b - a) / n as f64;
    let mut roots = Vec::new();
    let mut x0 = a;
    let mut f0 = f.eval(x0);
    if f0 == 0.0 {
        roots.push(x0);
    }
    for i in 1..=n {
        let x1 = if i == n { b } else { a + step * i as f64 };
        let f1 = f.eval(x1);
        if f1 == 0.0 {
            roots.push(x1);
        } else if f0 != 0.0 && (f0 < 0.0) != (f1 < 0.0) {
            roots.push(bisect(f, x0, x1, f0));
        }
        x0 = x1;
        f0 = f1;
    }
    roots
}

fn bisect(f: &TrigPolynomial, mut lo: f64, mut hi: f64, f_lo: f64) -> f64 {
    let lo_negative = f_lo < 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f.eval(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm < 0.0) == lo_negative {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Zero refinement: the zero of order `2 nu` is a simple root of
/// `Psi^(2 nu - 1)`. Walk odd `m` upwards and accept the first root of
/// `Psi^(m)` where `Psi` and all derivatives up to `m` are below threshold
/// but `Psi^(m+1)` is not.
fn resolve_zero(
    derivs: &[TrigPolynomial],
    a: f64,
    b: f64,
    scale: f64,
    max_order: usize,
) -> Result<ZeroInfo> {
    let n_sub = 256;
    let mut m = 1;
    while m < max_order {
        let mut best: Option<(f64, f64)> = None;
        for r in roots_in(&derivs[m], a, b, n_sub) {
            let v = derivs[0].eval(r).abs();
            if v >= ZERO_TOLERANCE * scale {
                continue;
            }
            if (1..=m).any(|k| derivs[k].eval(r).abs() > order_threshold(scale, k)) {
                continue;
            }
            if derivs[m + 1].eval(r).abs() <= order_threshold(scale, m + 1) {
                continue;
            }
            if best.map_or(true, |(_, bv)| v < bv) {
                best = Some((r, v));
            }
        }
        if let Some((r, _)) = best {
            // smallest k with |Psi^(k)| > tau_k; equals m + 1 by the filter above
            let order = (1..=max_order)
                .find(|&k| derivs[k].eval(r).abs() > order_threshold(scale, k))
                .unwrap_or(m + 1);
            let leading = derivs[order].eval(r) / factorial(order);
            if order % 2 == 1 || leading <= 0.0 {
                return Err(Error::NegativityDetected {
                    theta: wrap_angle(r),
                    value: derivs[0].eval(r),
                });
            }
            return Ok(ZeroInfo {
                theta: wrap_angle(r),
                order: order as u32,
                leading,
            });
        }
        m += 2;
    }
    Err(Error::OrderOverflow {
        theta: wrap_angle(0.5 * (a + b)),
        max_order,
    })
}

/// Trichotomy for a nonnegative trig polynomial.
pub fn classify(psi: &TrigPolynomial) -> Result<ZeroClassification> {
    let scale = scale_of(psi);
    let fourier = psi.to_fourier();
    if fourier.max_abs_coefficient() < NULL_TOLERANCE * scale {
        return Ok(ZeroClassification::IdenticallyZero);
    }
    let nonconstant = fourier.cos_coefs.iter().skip(1).chain(fourier.sin_coefs.iter().skip(1));
    if nonconstant.map(|v| v.abs()).fold(0.0, f64::max) < NULL_TOLERANCE * scale {
        let c = fourier.cos_coefs[0];
        if c < -NONNEG_TOLERANCE {
            return Err(Error::NegativityDetected { theta: 0.0, value: c });
        }
        return Ok(ZeroClassification::StrictlyPositive { min_value: c });
    }

    let n = SAMPLES;
    let dtheta = TAU / n as f64;
    let values: Vec<f64> = (0..n).map(|i| psi.eval(dtheta * i as f64)).collect();
    if let Some((i, v)) = values
        .iter()
        .copied()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(&b.1))
    {
        if v < -NONNEG_TOLERANCE {
            return Err(Error::NegativityDetected {
                theta: dtheta * i as f64,
                value: v,
            });
        }
    }

    // rotate so index 0 sits at the global maximum, away from any zero
    let start = values
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap_or(0);
    let at = |k: usize| values[(start + k) % n];
    let local_minima: Vec<usize> = (1..n)
        .filter(|&k| at(k) <= at(k - 1) && at(k) <= at((k + 1) % n))
        .collect();

    // merge minima separated only by a numerically flat stretch
    let flat = 1e-12 * scale;
    let mut groups: Vec<(usize, usize)> = Vec::new();
    for &k in &local_minima {
        if let Some(last) = groups.last_mut() {
            let peak = (last.1..=k).map(at).fold(f64::MIN, f64::max);
            if peak <= at(last.1).max(at(k)) + flat {
                last.1 = k;
                continue;
            }
        }
        groups.push((k, k));
    }

    let max_order = (2 * psi.degree() as usize).max(2);
    let derivs = psi.derivatives(max_order + 1);
    let mut zeros: Vec<ZeroInfo> = Vec::new();
    let mut min_value = values.iter().copied().fold(f64::INFINITY, f64::min);
    for (first, last) in groups {
        let a = dtheta * (start + first) as f64 - 2.0 * dtheta;
        let b = dtheta * (start + last) as f64 + 2.0 * dtheta;
        let sub = 64.max(8 * (last - first + 4));
        let mut candidates = roots_in(&derivs[1], a, b, sub);
        candidates.push(a);
        candidates.push(b);
        let (theta_min, v_min) = candidates
            .iter()
            .map(|&t| (t, psi.eval(t)))
            .min_by(|x, y| x.1.total_cmp(&y.1))
            .unwrap();
        if v_min < -NONNEG_TOLERANCE {
            return Err(Error::NegativityDetected {
                theta: wrap_angle(theta_min),
                value: v_min,
            });
        }
        min_value = min_value.min(v_min);
        if v_min > ZERO_TOLERANCE * scale {
            continue;
        }
        zeros.push(resolve_zero(&derivs, a, b, scale, max_order)?);
    }

    if zeros.is_empty() {
        return Ok(ZeroClassification::StrictlyPositive { min_value });
    }
    zeros.sort_by(|x, y| x.theta.total_cmp(&y.theta));
    zeros.dedup_by(|x, y| (x.theta - y.theta).abs() < 1e-6);
    if zeros.len() > 1 {
        let first = zeros[0].theta;
        let last = zeros[zeros.len() - 1].theta;
        if TAU - last + first < 1e-6 {
            zeros.pop();
        }
    }
    Ok(ZeroClassification::FiniteZeros { zeros })
}

/// Relative error of `Psi(theta_j + s) / s^order` against `c_j`, taken at
/// the smallest `s` in `{1e-4, 1e-3}` (both signs) that double-double
/// evaluation can resolve. `None` if neither can be resolved.
pub fn local_ratio_error(psi: &TrigPolynomial, zero: &ZeroInfo) -> Option<f64> {
    let floor = precise::shifted_noise_floor(psi);
    [1e-4, 1e-3]
        .into_iter()
        .find(|&s: &f64| zero.leading * s.powi(zero.order as i32) > 1e4 * floor)
        .map(|s| {
            [s, -s]
                .into_iter()
                .map(|ds| {
                    let v = precise::eval_shifted(psi, zero.theta, ds).to_f64();
                    let ratio = v / ds.powi(zero.order as i32);
                    ((ratio - zero.leading) / zero.leading).abs()
                })
                .fold(0.0, f64::max)
        })
}

/// Agemi check on the cubic symbol; never errors.
pub fn check_agemi(coeffs: &NonlinearityCoefficients) -> Agemi {
    agemi_from(classify(&cubic_to_trig_poly(coeffs)))
}

fn agemi_from(result: Result<ZeroClassification>) -> Agemi {
    match result {
        Ok(ZeroClassification::StrictlyPositive { min_value }) => Agemi::HoldsStrictly { min_value },
        Ok(_) => Agemi::Holds,
        Err(Error::NegativityDetected { theta, value }) => Agemi::Fails { witness: theta, value },
        Err(_) => Agemi::Holds,
    }
}

pub fn predict_decay(classification: &ZeroClassification, delta: f64) -> Result<DecayPrediction> {
    predict_decay_with(classification, delta, DEFAULT_MU_FACTOR)
}

pub fn predict_decay_with(
    classification: &ZeroClassification,
    delta: f64,
    mu_factor: f64,
) -> Result<DecayPrediction> {
    let nu = classification.max_nu().ok_or(Error::WrongRegime)?;
    let quarter = 1.0 / (4.0 * nu as f64);
    if !(delta > 0.0 && delta < quarter) {
        return Err(Error::input(format!("delta must lie in (0, 1/(4 nu)) = (0, {quarter}), got {delta}")));
    }
    if !(mu_factor > 0.0 && mu_factor < 1.0) {
        return Err(Error::input(format!("mu factor must lie in (0, 1), got {mu_factor}")));
    }
    let lambda = quarter - delta;
    let mu_cap = (0.1f64).min((1.0 - 4.0 * lambda) / (2.0 - 4.0 * lambda));
    Ok(DecayPrediction {
        nu,
        gamma_max: 1.0 / (2.0 * nu as f64),
        lambda,
        delta,
        mu: mu_factor * mu_cap,
        energy_rate_exponent: -lambda,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntegrabilityLevel {
    /// Half-width of the excluded neighbourhood around every zero.
    pub radius: f64,
    pub estimate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntegrabilityReport {
    pub gamma: f64,
    pub finite: bool,
    pub value: Option<f64>,
    /// `max_j gamma * order_j`; the integral is finite iff this is below 1.
    pub worst_exponent: f64,
    pub levels: Vec<IntegrabilityLevel>,
    /// `estimate[l+1] / estimate[l]`.
    pub growth_ratios: Vec<f64>,
}

const TAYLOR_TERMS: usize = 40;
const MAX_LEVELS: usize = 10;
const DIVERGENT_LEVELS: usize = 6;
const LEVEL_FACTOR: f64 = 10.0;
/// Successive corrected estimates must agree to this relative tolerance.
pub const INTEGRABILITY_TOLERANCE: f64 = 1e-4;

/// Local model around one zero: `Psi(theta_j + s) = s^order * h(s)`, with
/// `h` the Taylor tail built from exact derivatives.
struct LocalModel {
    order: u32,
    leading: f64,
    radius: f64,
    tail: Vec<f64>,
}

impl LocalModel {
    fn h(&self, s: f64) -> f64 {
        self.tail.iter().rev().fold(0.0, |acc, c| acc * s + c)
    }

    /// `int_eps^radius |s|^-alpha h(sign * s)^-gamma ds` over geometric panels.
    fn shell_integral(&self, eps: f64, gamma: f64, sign: f64) -> f64 {
        let alpha = gamma * self.order as f64;
        let f = |s: f64| s.powf(-alpha) * self.h(sign * s).powf(-gamma);
        let mut acc = 0.0;
        let mut lo = eps;
        while lo < self.radius {
            let hi = (2.0 * lo).min(self.radius);
            acc += quadrature::gk15(&f, lo, hi).0;
            lo = hi;
        }
        acc
    }
}

/// Certificate for `int_0^{2 pi} Psi^-gamma d theta < infinity`.
///
/// Each zero gets a neighbourhood of radius `rho_j`; inside it `Psi` is
/// evaluated from its Taylor expansion, outside by adaptive quadrature.
/// Refinement level `l` excludes `|theta - theta_j| < eps_l` with `eps_l`
/// shrinking by 10 per level. When every `gamma * order_j < 1`, the excluded
/// piece is replaced by its leading-order model integral and the estimates
/// must stabilize; otherwise the raw estimates are reported so their growth
/// can be inspected.
pub fn verify_integrability(psi: &TrigPolynomial, gamma: f64) -> Result<IntegrabilityReport> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::input(format!("gamma must be positive, got {gamma}")));
    }
    let classification = classify(psi)?;
    let zeros = match &classification {
        ZeroClassification::FiniteZeros { zeros } => zeros.clone(),
        _ => return Err(Error::WrongRegime),
    };
    let max_order = zeros.iter().map(|z| z.order as usize).max().unwrap_or(2);
    let derivs = psi.derivatives(max_order + TAYLOR_TERMS);

    let m = zeros.len();
    let models: Vec<LocalModel> = zeros
        .iter()
        .enumerate()
        .map(|(j, z)| {
            let gap = if m == 1 {
                TAU
            } else {
                let next = zeros[(j + 1) % m].theta + if j + 1 == m { TAU } else { 0.0 };
                let prev = zeros[(j + m - 1) % m].theta - if j == 0 { TAU } else { 0.0 };
                (next - z.theta).min(z.theta - prev)
            };
            let order = z.order as usize;
            let tail = (order..=order + TAYLOR_TERMS)
                .map(|k| derivs[k].eval(z.theta) / factorial(k))
                .collect();
            LocalModel {
                order: z.order,
                leading: z.leading,
                radius: (0.25f64).min(0.4 * gap),
                tail,
            }
        })
        .collect();

    let integrand = |t: f64| psi.eval(t).powf(-gamma);
    let mut bulk = 0.0;
    for j in 0..m {
        let a = zeros[j].theta + models[j].radius;
        let next = (j + 1) % m;
        let b = zeros[next].theta - models[next].radius + if next == 0 { TAU } else { 0.0 };
        if b > a {
            bulk += quadrature::integrate(integrand, a, b, 1e-12, 1e-14, 4000).value;
        }
    }

    let worst_exponent = models
        .iter()
        .map(|mdl| gamma * mdl.order as f64)
        .fold(0.0, f64::max);
    let convergent = worst_exponent < 1.0;
    let eps0 = models
        .iter()
        .map(|mdl| 0.5 * mdl.radius)
        .fold(0.1, f64::min);

    let estimate_at = |eps: f64| -> f64 {
        let mut total = bulk;
        for mdl in &models {
            total += mdl.shell_integral(eps, gamma, 1.0) + mdl.shell_integral(eps, gamma, -1.0);
            if convergent {
                let alpha = gamma * mdl.order as f64;
                total += 2.0 * mdl.leading.powf(-gamma) * eps.powf(1.0 - alpha) / (1.0 - alpha);
            }
        }
        total
    };

    let mut levels: Vec<IntegrabilityLevel> = Vec::new();
    let mut finite = false;
    let n_levels = if convergent { MAX_LEVELS } else { DIVERGENT_LEVELS };
    for l in 0..n_levels {
        let radius = eps0 / LEVEL_FACTOR.powi(l as i32);
        let estimate = estimate_at(radius);
        let stable = levels
            .last()
            .map(|prev| (estimate - prev.estimate).abs() < INTEGRABILITY_TOLERANCE * estimate.abs())
            .unwrap_or(false);
        levels.push(IntegrabilityLevel { radius, estimate });
        if convergent && stable {
            finite = true;
            break;
        }
    }
    let growth_ratios = levels.windows(2).map(|w| w[1].estimate / w[0].estimate).collect();
    Ok(IntegrabilityReport {
        gamma,
        finite,
        value: finite.then(|| levels.last().map(|l| l.estimate)).flatten(),
        worst_exponent,
        levels,
        growth_ratios,
    })
}

/// Full structural analysis of a nonlinearity.
pub fn analyze(coeffs: &NonlinearityCoefficients, delta: f64) -> Result<ConditionReport> {
    analyze_with(coeffs, delta, DEFAULT_MU_FACTOR)
}

pub fn analyze_with(coeffs: &NonlinearityCoefficients, delta: f64, mu_factor: f64) -> Result<ConditionReport> {
    let quadratic_null = check_quadratic_null(coeffs);
    let psi = cubic_to_trig_poly(coeffs);
    let classified = classify(&psi);
    let classification = match &classified {
        Ok(c) => Some(c.clone()),
        Err(Error::NegativityDetected { .. }) => None,
        Err(e) => return Err(e.clone()),
    };
    let agemi = agemi_from(classified);
    let cubic_null = matches!(classification, Some(ZeroClassification::IdenticallyZero));
    let prediction = match &classification {
        Some(c @ ZeroClassification::FiniteZeros { .. }) => Some(predict_decay_with(c, delta, mu_factor)?),
        _ => None,
    };
    let theorem_regime = quadratic_null && prediction.is_some();
    Ok(ConditionReport {
        quadratic_null,
        cubic_null,
        agemi,
        classification,
        prediction,
        theorem_regime,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trig_algebra::examples::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn zeros_of(psi: &TrigPolynomial) -> Vec<ZeroInfo> {
        match classify(psi).unwrap() {
            ZeroClassification::FiniteZeros { zeros } => zeros,
            other => panic!("expected zeros, got {other:?}"),
        }
    }

    #[test]
    fn quadratic_null_examples() {
        assert!(check_quadratic_null(&NonlinearityCoefficients::zero().with_null_form()));
        let mut b = NonlinearityCoefficients::zero();
        b.b[0][0] = 1.0;
        assert!(!check_quadratic_null(&b));
        let mut b = NonlinearityCoefficients::zero();
        b.b[1][1] = 1.0;
        b.b[2][2] = 1.0;
        assert!(!check_quadratic_null(&b));
    }

    #[test]
    fn classify_cos_squared() {
        let zs = zeros_of(&cubic_to_trig_poly(&d1_squared_dt()));
        assert_eq!(zs.len(), 2);
        assert!((zs[0].theta - FRAC_PI_2).abs() < 1e-9);
        assert!((zs[1].theta - 3.0 * FRAC_PI_2).abs() < 1e-9);
        assert_eq!((zs[0].order, zs[1].order), (2, 2));
        assert!((zs[0].leading - 1.0).abs() < 1e-9 && (zs[1].leading - 1.0).abs() < 1e-9);
    }

    #[test]
    fn classify_mixed_orders() {
        let zs = zeros_of(&cubic_to_trig_poly(&d1_squared_dt_plus_d2()));
        assert_eq!(zs.len(), 2);
        assert!((zs[0].theta - FRAC_PI_2).abs() < 1e-9);
        assert_eq!(zs[0].order, 4);
        assert!((zs[0].leading - 0.5).abs() < 1e-9);
        assert!((zs[1].theta - 3.0 * FRAC_PI_2).abs() < 1e-9);
        assert_eq!(zs[1].order, 2);
        assert!((zs[1].leading - 2.0).abs() < 1e-9);
    }

    #[test]
    fn classify_sixth_order() {
        let zs = zeros_of(&cubic_to_trig_poly(&dt_plus_d2_cubed()));
        assert_eq!(zs.len(), 1);
        assert!((zs[0].theta - FRAC_PI_2).abs() < 1e-9);
        assert_eq!(zs[0].order, 6);
        assert!((zs[0].leading - 0.125).abs() < 1e-9);
    }

    #[test]
    fn zero_at_the_seam_is_found_once() {
        // sin^2 vanishes at 0 and pi
        let zs = zeros_of(&TrigPolynomial::monomial(0, 2, 1.0));
        assert_eq!(zs.len(), 2);
        assert!(zs[0].theta.abs() < 1e-9);
        assert!((zs[1].theta - PI).abs() < 1e-9);
        // versine^2 centred just below 2 pi
        let zs = zeros_of(&TrigPolynomial::half_versine(TAU - 1e-3).powi(2));
        assert_eq!(zs.len(), 1);
        assert_eq!(zs[0].order, 4);
        assert!((zs[0].theta - (TAU - 1e-3)).abs() < 1e-9);
    }

    #[test]
    fn local_ratio_holds_for_examples() {
        for coeffs in [d1_squared_dt(), d1_squared_dt_plus_d2(), dt_plus_d2_cubed()] {
            let psi = cubic_to_trig_poly(&coeffs);
            for z in zeros_of(&psi) {
                let err = local_ratio_error(&psi, &z).expect("resolvable");
                assert!(err < 5e-2, "{z:?}: {err}");
            }
        }
    }

    #[test]
    fn negativity_is_reported() {
        let psi = cubic_to_trig_poly(&cubic_damping().add_cubic_product(
            2.0,
            [1.0, 0.0, 0.0],
            [1.0, 0.0, 0.0],
            [1.0, 0.0, 0.0],
        ));
        assert!(matches!(classify(&psi), Err(Error::NegativityDetected { .. })));
        // sign change between grid points still caught by refinement
        let psi = TrigPolynomial::monomial(1, 0, 1.0);
        assert!(matches!(classify(&psi), Err(Error::NegativityDetected { .. })));
    }

    #[test]
    fn agemi_examples() {
        assert_eq!(check_agemi(&cubic_damping()), Agemi::HoldsStrictly { min_value: 1.0 });
        assert_eq!(check_agemi(&d1_squared_dt()), Agemi::Holds);
        let plus = NonlinearityCoefficients::zero().add_cubic_product(
            1.0,
            [1.0, 0.0, 0.0],
            [1.0, 0.0, 0.0],
            [1.0, 0.0, 0.0],
        );
        assert!(matches!(check_agemi(&plus), Agemi::Fails { value, .. } if value < 0.0));
    }

    #[test]
    fn prediction_examples() {
        let one = ZeroClassification::FiniteZeros {
            zeros: vec![ZeroInfo { theta: 1.0, order: 2, leading: 1.0 }],
        };
        let p = predict_decay(&one, 0.01).unwrap();
        assert_eq!(p.nu, 1);
        assert!((p.lambda - 0.24).abs() < 1e-15);
        assert!((p.energy_rate_exponent - (-0.25 + 0.01)).abs() < 1e-15);

        let two = ZeroClassification::FiniteZeros {
            zeros: vec![
                ZeroInfo { theta: 1.0, order: 4, leading: 0.5 },
                ZeroInfo { theta: 2.0, order: 2, leading: 2.0 },
            ],
        };
        let p = predict_decay(&two, 0.005).unwrap();
        assert_eq!(p.nu, 2);
        assert!((p.lambda - 0.12).abs() < 1e-15);

        let three = ZeroClassification::FiniteZeros {
            zeros: vec![ZeroInfo { theta: 1.0, order: 6, leading: 0.125 }],
        };
        let p = predict_decay(&three, 0.003).unwrap();
        assert_eq!(p.nu, 3);
        assert!((p.lambda - (1.0 / 12.0 - 0.003)).abs() < 1e-15);
        assert!(p.lambda < 0.25 && 2.0 * p.lambda < p.gamma_max);
        let cap = (0.1f64).min((1.0 - 4.0 * p.lambda) / (2.0 - 4.0 * p.lambda));
        assert!(p.mu > 0.0 && p.mu < cap);
    }

    #[test]
    fn prediction_rejects_wrong_regime_and_bad_delta() {
        assert_eq!(
            predict_decay(&ZeroClassification::IdenticallyZero, 0.01),
            Err(Error::WrongRegime)
        );
        let one = ZeroClassification::FiniteZeros {
            zeros: vec![ZeroInfo { theta: 1.0, order: 2, leading: 1.0 }],
        };
        assert!(predict_decay(&one, 0.3).is_err());
        assert!(predict_decay(&one, 0.0).is_err());
    }

    #[test]
    fn integrability_examples() {
        let cos2 = TrigPolynomial::monomial(2, 0, 1.0);
        let r = verify_integrability(&cos2, 0.4).unwrap();
        assert!(r.finite);
        // 2 B(1/2, 1/2 - gamma), frozen from an arbitrary-precision evaluation
        let exact = 22.646_173_950_431_511_9;
        assert!((r.value.unwrap() - exact).abs() < 1e-4 * exact, "{r:?}");

        let r = verify_integrability(&cos2, 0.6).unwrap();
        assert!(!r.finite && r.value.is_none());
        assert_eq!(r.levels.len(), DIVERGENT_LEVELS);
        assert!(r.growth_ratios.iter().all(|g| *g > 1.1), "{r:?}");

        let psi3 = cubic_to_trig_poly(&dt_plus_d2_cubed());
        let r = verify_integrability(&psi3, 0.1).unwrap();
        assert!(r.finite);
        let exact = 10.183_457_043_929_770_5;
        assert!((r.value.unwrap() - exact).abs() < 1e-4 * exact, "{r:?}");
    }

    #[test]
    fn integrability_needs_zeros() {
        let r = verify_integrability(&TrigPolynomial::constant(1.0), 0.3);
        assert_eq!(r, Err(Error::WrongRegime));
        assert!(verify_integrability(&TrigPolynomial::monomial(2, 0, 1.0), -1.0).is_err());
    }

    #[test]
    fn analyze_examples() {
        let null = NonlinearityCoefficients::zero().with_null_form();
        let mut ex1 = d1_squared_dt();
        ex1.b = null.b;
        let r = analyze(&ex1, DEFAULT_DELTA).unwrap();
        assert!(r.quadratic_null && !r.cubic_null && r.theorem_regime);
        assert_eq!(r.agemi, Agemi::Holds);
        assert_eq!(r.prediction.as_ref().unwrap().nu, 1);

        let r = analyze(&null, DEFAULT_DELTA).unwrap();
        assert!(r.cubic_null && r.prediction.is_none() && !r.theorem_regime);
        assert_eq!(r.classification, Some(ZeroClassification::IdenticallyZero));

        let mut cn = cubic_null_example();
        cn.b = null.b;
        let r = analyze(&cn, DEFAULT_DELTA).unwrap();
        assert!(r.cubic_null && r.prediction.is_none());
        assert!(check_cubic_null(&cn));
    }

    #[test]
    fn report_serializes_angles_with_twelve_digits() {
        let r = analyze(&d1_squared_dt(), DEFAULT_DELTA).unwrap();
        let json = serde_json::to_value(&r).unwrap();
        let theta = json["classification"]["zeros"][0]["theta"].as_f64().unwrap();
        assert_eq!(theta, 1.570_796_326_79);
        assert_eq!(json["classification"]["case"], "finite_zeros");
    }
}
