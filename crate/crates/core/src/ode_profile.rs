//! The profile ODE along a characteristic ray and Matsumura's lemma.
//!
//! Along `r = t + sigma` in direction `omega` the outgoing amplitude obeys
//! `dV/dt = -P(omega)/(2t) V^3 + G(t)`. Both this and the scalar
//! differential inequality of Matsumura's lemma are integrated in
//! `x = ln t`, where they are autonomous apart from the forcing and the
//! relevant time span is short.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature;
use crate::rk::{self, StepControl};
use crate::trig_algebra::Direction;

/// Output points per decade of `t`.
pub const POINTS_PER_DECADE: usize = 64;
/// `|V|` above this trips the blow-up guard.
pub const PROFILE_GUARD: f64 = 1e6;
/// Absolute per-step tolerance on `V`.
pub const PROFILE_ABS_TOL: f64 = 1e-10;
/// Allowed relative excess of `Phi (log t)^(p*-1)` over `C_2`.
pub const MATSUMURA_SLACK: f64 = 1e-7;

/// `<z> = sqrt(1 + z^2)`.
pub fn japanese(z: f64) -> f64 {
    (1.0 + z * z).sqrt()
}

/// Hypotheses of Matsumura's lemma for
/// `Phi' <= -(C_0/t)|Phi|^p + C_1/t^q`, `t >= t_0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatsumuraParams {
    pub c0: f64,
    pub c1: f64,
    pub p: f64,
    pub q: f64,
    pub t0: f64,
    pub phi0: f64,
}

impl MatsumuraParams {
    pub fn new(c0: f64, c1: f64, p: f64, q: f64, t0: f64, phi0: f64) -> Result<Self> {
        let params = MatsumuraParams { c0, c1, p, q, t0, phi0 };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        let all_finite = [self.c0, self.c1, self.p, self.q, self.t0, self.phi0]
            .iter()
            .all(|v| v.is_finite());
        if !all_finite {
            return Err(Error::input("Matsumura parameters must be finite"));
        }
        if !(self.c0 > 0.0) {
            return Err(Error::input(format!("C0 must be positive, got {}", self.c0)));
        }
        if self.c1 < 0.0 {
            return Err(Error::input(format!("C1 must be nonnegative, got {}", self.c1)));
        }
        if !(self.p > 1.0) {
            return Err(Error::input(format!("p must exceed 1, got {}", self.p)));
        }
        if !(self.q > 1.0) {
            return Err(Error::input(format!("q must exceed 1 for the forcing integral to converge, got {}", self.q)));
        }
        if !(self.t0 >= 2.0) {
            return Err(Error::input(format!("t0 must be at least 2, got {}", self.t0)));
        }
        if self.phi0 < 0.0 {
            return Err(Error::input(format!("Phi(t0) must be nonnegative, got {}", self.phi0)));
        }
        Ok(())
    }

    /// Hölder conjugate `p / (p - 1)`.
    pub fn p_star(&self) -> f64 {
        self.p / (self.p - 1.0)
    }
}

fn log_sum_exp(terms: &[f64]) -> f64 {
    let m = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + terms.iter().map(|t| (t - m).exp()).sum::<f64>().ln()
}

/// `ln int_2^inf (ln tau)^a tau^-q d tau`, computed as
/// `int_{ln 2}^inf s^a e^{-(q-1)s} ds` with the peak factored out.
pub fn ln_log_power_integral(a: f64, q: f64) -> Result<f64> {
    if !(q > 1.0) {
        return Err(Error::input(format!("q must exceed 1, got {q}")));
    }
    let b = q - 1.0;
    let lo = std::f64::consts::LN_2;
    let peak = (a / b).max(lo);
    let log_f = |s: f64| a * s.ln() - b * s;
    let l_max = log_f(peak);
    let g = |s: f64| (log_f(s) - l_max).exp();
    // width of the peak in s
    let width = if a > 0.0 { a.sqrt() / b } else { 1.0 / b };
    let mut hi = peak + 10.0 * width + 10.0 / b;
    // tail bound int_S^inf s^a e^{-bs} <= S^a e^{-bS} / (b - a/S) once b S > a
    let tail = |s_end: f64| (log_f(s_end) - l_max).exp() / (b - a / s_end);
    while !(b * hi > 2.0 * a && tail(hi) < 1e-14) {
        hi *= 2.0;
    }
    let mut breaks = vec![lo];
    for k in [-8.0, -4.0, -2.0, -1.0, 0.0, 1.0, 2.0, 4.0, 8.0] {
        let s = peak + k * width;
        if s > lo && s < hi {
            breaks.push(s);
        }
    }
    breaks.push(hi);
    let mut body = 0.0;
    for w in breaks.windows(2) {
        body += quadrature::integrate(g, w[0], w[1], 1e-13, 0.0, 4000).value;
    }
    let total = body + tail(hi);
    Ok(l_max + total.ln())
}

/// `ln C_2`; stays finite when `C_2` itself would overflow (p close to 1).
pub fn ln_matsumura_constant(params: &MatsumuraParams) -> Result<f64> {
    params.validate()?;
    let ps = params.p_star();
    let ln_ln2 = std::f64::consts::LN_2.ln();
    let mut terms = Vec::with_capacity(3);
    if params.phi0 > 0.0 {
        terms.push(ps * params.t0.ln().ln() + params.phi0.ln() - ln_ln2);
    }
    if params.c1 > 0.0 {
        terms.push(params.c1.ln() + ln_log_power_integral(ps, params.q)? - ln_ln2);
    }
    terms.push((ps - 1.0) * (ps / (params.c0 * params.p)).ln());
    Ok(log_sum_exp(&terms))
}

/// `C_2 = (1/ln 2)((ln t0)^{p*} Phi(t0) + C_1 int_2^inf (ln tau)^{p*} tau^-q)
///        + (p* / (C_0 p))^{p* - 1}`.
pub fn matsumura_constant(params: &MatsumuraParams) -> Result<f64> {
    Ok(ln_matsumura_constant(params)?.exp())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatsumuraCheck {
    pub holds: bool,
    /// `max_t Phi(t) (ln t)^{p*-1} / C_2`.
    pub max_ratio: f64,
    pub ln_c2: f64,
    pub times: Vec<f64>,
    pub phi: Vec<f64>,
}

impl MatsumuraCheck {
    /// `C_2 / (ln t)^{p* - 1}` at every output time.
    pub fn bound(&self, params: &MatsumuraParams) -> Vec<f64> {
        let e = params.p_star() - 1.0;
        self.times
            .iter()
            .map(|t| (self.ln_c2 - e * t.ln().ln()).exp())
            .collect()
    }
}

/// Log-spaced output times from `t_start` to `t_end` inclusive.
pub fn log_grid(t_start: f64, t_end: f64, per_decade: usize) -> Vec<f64> {
    let n = ((t_end / t_start).log10() * per_decade as f64).ceil().max(1.0) as usize;
    let (ls, le) = (t_start.ln(), t_end.ln());
    let mut out: Vec<f64> = (0..=n).map(|k| (ls + (le - ls) * k as f64 / n as f64).exp()).collect();
    out[0] = t_start;
    out[n] = t_end;
    out
}

/// Integrates the saturating ODE `Phi' = -(C_0/t)|Phi|^p + C_1/t^q`
/// (`C_1` dropped when `forcing_bound_active` is false) and compares it
/// with `C_2 / (ln t)^{p* - 1}`.
pub fn check_matsumura_bound(
    params: &MatsumuraParams,
    forcing_bound_active: bool,
    t_end: f64,
) -> Result<MatsumuraCheck> {
    params.validate()?;
    if !(t_end > params.t0) {
        return Err(Error::input(format!("t_end = {t_end} must exceed t0 = {}", params.t0)));
    }
    let ln_c2 = ln_matsumura_constant(params)?;
    let c1 = if forcing_bound_active { params.c1 } else { 0.0 };
    let (c0, p, q) = (params.c0, params.p, params.q);
    let rhs = move |x: f64, phi: f64| -c0 * phi.abs().powf(p) + c1 * ((1.0 - q) * x).exp();
    let times = log_grid(params.t0, t_end, POINTS_PER_DECADE);
    let xs: Vec<f64> = times.iter().map(|t| t.ln()).collect();
    let ctrl = StepControl {
        abs_tol: 1e-13,
        rel_tol: 1e-12,
        h_max: 0.02,
        ..StepControl::default()
    };
    let phi = rk::integrate(rhs, xs[0], params.phi0, &xs, &ctrl, |_, _| Ok(()))?;
    let e = params.p_star() - 1.0;
    let max_ratio = times
        .iter()
        .zip(&phi)
        .map(|(t, &ph)| {
            if ph <= 0.0 {
                0.0
            } else {
                (ph.ln() + e * t.ln().ln() - ln_c2).exp()
            }
        })
        .fold(0.0, f64::max);
    Ok(MatsumuraCheck {
        holds: max_ratio <= 1.0 + MATSUMURA_SLACK,
        max_ratio,
        ln_c2,
        times,
        phi,
    })
}

/// `c_0` bracketing `<sigma>/c_0 <= t_{0,sigma} <= c_0 <sigma>` for `sigma <= R`.
pub fn c0_for_radius(support_radius: f64) -> f64 {
    (2.0f64).max(2.0 * (1.0 + support_radius))
}

/// `t_{0,sigma} = max{2, -2 sigma}`.
pub fn ray_start(sigma: f64) -> f64 {
    (2.0f64).max(-2.0 * sigma)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RayConfig {
    pub sigma: f64,
    pub omega: Direction,
    pub epsilon: f64,
    pub mu: f64,
    pub t_start: f64,
    pub t_end: f64,
    /// `V(t_start)`.
    pub v0: f64,
}

impl RayConfig {
    pub fn new(
        sigma: f64,
        omega: Direction,
        epsilon: f64,
        mu: f64,
        t_end: f64,
        support_radius: f64,
        v0: f64,
    ) -> Result<Self> {
        if !(sigma <= support_radius) {
            return Err(Error::input(format!("sigma = {sigma} exceeds the support radius {support_radius}")));
        }
        if !(epsilon > 0.0) {
            return Err(Error::input(format!("epsilon must be positive, got {epsilon}")));
        }
        if !(mu > 0.0 && mu < 0.1) {
            return Err(Error::input(format!("mu must lie in (0, 1/10), got {mu}")));
        }
        if !v0.is_finite() {
            return Err(Error::input("V(t_start) must be finite"));
        }
        let t_start = ray_start(sigma);
        if !(t_end > t_start) {
            return Err(Error::input(format!("t_end = {t_end} must exceed t_start = {t_start}")));
        }
        Ok(RayConfig {
            sigma,
            omega,
            epsilon,
            mu,
            t_start,
            t_end,
            v0,
        })
    }

    /// Checks `<sigma>/c_0 <= t_start <= c_0 <sigma>`.
    pub fn start_is_bracketed(&self, support_radius: f64) -> bool {
        let c0 = c0_for_radius(support_radius);
        let js = japanese(self.sigma);
        js / c0 <= self.t_start && self.t_start <= c0 * js
    }

    /// `<sigma>^{-mu-1/2} t^{2 mu - 3/2}`.
    pub fn envelope(&self, t: f64) -> f64 {
        japanese(self.sigma).powf(-self.mu - 0.5) * t.powf(2.0 * self.mu - 1.5)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvelopeSign {
    /// `sign(V)`: pushes `|V|` upwards.
    Adversarial,
    Positive,
    Negative,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ForcingSpec {
    Zero,
    /// `G = amplitude * <sigma>^{-mu-1/2} t^{2mu-3/2} * sign`.
    Envelope { amplitude: f64, sign: EnvelopeSign },
    /// Piecewise-linear samples `G(times[i]) = values[i]`.
    Tabulated { times: Vec<f64>, values: Vec<f64> },
}

impl ForcingSpec {
    fn validate(&self, ray: &RayConfig) -> Result<()> {
        match self {
            ForcingSpec::Zero => Ok(()),
            ForcingSpec::Envelope { amplitude, .. } => {
                if amplitude.is_finite() && *amplitude >= 0.0 {
                    Ok(())
                } else {
                    Err(Error::input("envelope amplitude must be finite and nonnegative"))
                }
            }
            ForcingSpec::Tabulated { times, values } => {
                if times.len() != values.len() || times.len() < 2 {
                    return Err(Error::input("tabulated forcing needs at least two (t, G) pairs"));
                }
                if times.windows(2).any(|w| !(w[1] > w[0])) {
                    return Err(Error::input("tabulated forcing times must increase strictly"));
                }
                let (first, last) = (times[0], times[times.len() - 1]);
                let span = 1e-9 * last.abs().max(1.0);
                if ray.t_start < first - span || ray.t_end > last + span {
                    return Err(Error::input(format!(
                        "tabulated forcing covers [{first}, {last}], ray needs [{}, {}]",
                        ray.t_start, ray.t_end
                    )));
                }
                Ok(())
            }
        }
    }

    fn eval(&self, ray: &RayConfig, t: f64, v: f64) -> f64 {
        match self {
            ForcingSpec::Zero => 0.0,
            ForcingSpec::Envelope { amplitude, sign } => {
                let s = match sign {
                    EnvelopeSign::Adversarial => {
                        if v < 0.0 {
                            -1.0
                        } else {
                            1.0
                        }
                    }
                    EnvelopeSign::Positive => 1.0,
                    EnvelopeSign::Negative => -1.0,
                };
                amplitude * ray.envelope(t) * s
            }
            ForcingSpec::Tabulated { times, values } => interpolate(times, values, t),
        }
    }
}

fn interpolate(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    if x <= xs[0] {
        return ys[0];
    }
    let n = xs.len();
    if x >= xs[n - 1] {
        return ys[n - 1];
    }
    let i = xs.partition_point(|&v| v <= x) - 1;
    let w = (x - xs[i]) / (xs[i + 1] - xs[i]);
    ys[i] * (1.0 - w) + ys[i + 1] * w
}

/// Time series along one ray.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileSeries {
    pub times: Vec<f64>,
    pub v: Vec<f64>,
    pub g: Vec<f64>,
    /// `P(omega) V^2`, present when `P >= 0`.
    pub phi: Option<Vec<f64>>,
}

impl ProfileSeries {
    pub fn new(times: Vec<f64>, v: Vec<f64>, g: Vec<f64>, phi: Option<Vec<f64>>) -> Result<Self> {
        let n = times.len();
        if v.len() != n || g.len() != n || phi.as_ref().is_some_and(|p| p.len() != n) {
            return Err(Error::input("profile series columns differ in length"));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::input("profile series times must increase strictly"));
        }
        if phi.as_ref().is_some_and(|p| p.iter().any(|x| *x < 0.0)) {
            return Err(Error::input("Phi must be nonnegative"));
        }
        Ok(ProfileSeries { times, v, g, phi })
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// CSV with columns `t,V,G,Phi,bound`; `bound(t)` fills the last column
    /// when given, empty cells otherwise.
    pub fn to_csv(&self, bound: Option<&dyn Fn(f64) -> f64>) -> String {
        let mut out = String::from("t,V,G,Phi,bound\n");
        for i in 0..self.len() {
            let t = self.times[i];
            let phi = self.phi.as_ref().map(|p| format!("{:.12e}", p[i])).unwrap_or_default();
            let b = bound.map(|f| format!("{:.12e}", f(t))).unwrap_or_default();
            let _ = writeln!(out, "{:.12e},{:.12e},{:.12e},{},{}", t, self.v[i], self.g[i], phi, b);
        }
        out
    }
}

/// Integrates `V' = -P V^3/(2t) + G` from `t_start` to `t_end`, output on a
/// log grid with [`POINTS_PER_DECADE`] points per decade.
pub fn integrate_profile(p_val: f64, ray: &RayConfig, forcing: &ForcingSpec) -> Result<ProfileSeries> {
    integrate_profile_with(p_val, ray, forcing, POINTS_PER_DECADE)
}

pub fn integrate_profile_with(
    p_val: f64,
    ray: &RayConfig,
    forcing: &ForcingSpec,
    per_decade: usize,
) -> Result<ProfileSeries> {
    let times = log_grid(ray.t_start, ray.t_end, per_decade);
    integrate_profile_at(p_val, ray, forcing, &times)
}

/// As [`integrate_profile`], reporting at the given increasing times
/// (the first must be `ray.t_start`).
pub fn integrate_profile_at(
    p_val: f64,
    ray: &RayConfig,
    forcing: &ForcingSpec,
    times: &[f64],
) -> Result<ProfileSeries> {
    if !p_val.is_finite() {
        return Err(Error::input("P(omega) must be finite"));
    }
    forcing.validate(ray)?;
    if times.is_empty() || times[0] < ray.t_start {
        return Err(Error::input("output times must start at or after t_start"));
    }
    let rhs = |x: f64, v: f64| {
        let t = x.exp();
        -0.5 * p_val * v * v * v + t * forcing.eval(ray, t, v)
    };
    let xs: Vec<f64> = times.iter().map(|t| t.ln()).collect();
    let ctrl = StepControl {
        abs_tol: PROFILE_ABS_TOL * 1e-2,
        rel_tol: 1e-12,
        h_max: 0.02,
        ..StepControl::default()
    };
    let v = rk::integrate(rhs, ray.t_start.ln(), ray.v0, &xs, &ctrl, |x, v| {
        if v.abs() > PROFILE_GUARD || !v.is_finite() {
            Err(Error::BlowUp { t: x.exp(), value: v.abs() })
        } else {
            Ok(())
        }
    })?;
    let g = times.iter().zip(&v).map(|(&t, &vi)| forcing.eval(ray, t, vi)).collect();
    let phi = (p_val >= 0.0).then(|| v.iter().map(|x| p_val * x * x).collect());
    ProfileSeries::new(times.to_vec(), v, g, phi)
}

/// `V0 / sqrt(1 + P V0^2 ln(t/t0))`, the unforced solution.
pub fn unforced_profile(p_val: f64, v0: f64, t0: f64, t: f64) -> f64 {
    v0 / (1.0 + p_val * v0 * v0 * (t / t0).ln()).sqrt()
}

/// `sup_t |V(t)| sqrt(P ln t)` over the series.
pub fn check_sqrtlog_decay(series: &ProfileSeries, p_val: f64) -> Result<f64> {
    if !(p_val > 0.0) {
        return Err(Error::WrongRegime);
    }
    Ok(series
        .times
        .iter()
        .zip(&series.v)
        .filter(|(t, _)| **t > 1.0)
        .map(|(t, v)| v.abs() * (p_val * t.ln()).sqrt())
        .fold(0.0, f64::max))
}

/// Lemma-based ceiling for `sup |V| sqrt(P ln t)` under envelope forcing of
/// the given amplitude: `sqrt(C_2)` with `C_0 = 1`, `p = 2`,
/// `q = 3/2 - 2 mu`, `Phi_0 = P V0^2`, `C_1 = 2 P v_max A <sigma>^{-mu-1/2}`.
pub fn envelope_decay_ceiling(p_val: f64, ray: &RayConfig, amplitude: f64, v_max: f64) -> Result<f64> {
    let params = MatsumuraParams::new(
        1.0,
        2.0 * p_val * v_max * amplitude * japanese(ray.sigma).powf(-ray.mu - 0.5),
        2.0,
        1.5 - 2.0 * ray.mu,
        ray.t_start,
        p_val * ray.v0 * ray.v0,
    )?;
    Ok((0.5 * ln_matsumura_constant(&params)?).exp())
}

/// Largest `(Phi' + Phi^2/t) t^{3/2 - 2 mu} <sigma>^{3/2}` over interior
/// points of the series, with `Phi'` from centred differences in `t`. For
/// envelope forcing of amplitude `A` this stays below
/// `2 P max|V| A <sigma>^{1 - mu}`.
pub fn fit_phi_forcing_constant(series: &ProfileSeries, p_val: f64, sigma: f64, mu: f64) -> Result<f64> {
    let phi = series.phi.as_ref().ok_or(Error::WrongRegime)?;
    let t = &series.times;
    let mut best = f64::NEG_INFINITY;
    for i in 1..t.len().saturating_sub(1) {
        let (h0, h1) = (t[i] - t[i - 1], t[i + 1] - t[i]);
        let d = -h1 / (h0 * (h0 + h1)) * phi[i - 1] + (h1 - h0) / (h0 * h1) * phi[i]
            + h0 / (h1 * (h0 + h1)) * phi[i + 1];
        let lhs = d + phi[i] * phi[i] / t[i];
        best = best.max(lhs * t[i].powf(1.5 - 2.0 * mu) * japanese(sigma).powf(1.5));
    }
    let _ = p_val;
    Ok(best)
}
