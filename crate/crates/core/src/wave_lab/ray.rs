//! The outgoing amplitude `U = (d_r - d_t)(r^{1/2} u) / 2` along rays and
//! the fits built on it.

use serde::{Deserialize, Serialize};

use super::{EnergySeries, LevelView, Snapshot};
use crate::error::{Error, Result};
use crate::ode_profile::{japanese, ray_start, ProfileSeries};
use crate::trig_algebra::Direction;

/// A ray `r = t + sigma` in direction `omega`, sampled from `max(2, -2 sigma)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RayProbe {
    pub sigma: f64,
    pub omega: Direction,
}

impl RayProbe {
    pub fn t_start(&self) -> f64 {
        ray_start(self.sigma)
    }
}

/// `U(t, (t + sigma) omega)` with bilinear interpolation of `u`, the
/// centred gradient and `d_t u`.
pub fn sample_profile(view: &LevelView<'_>, sigma: f64, omega: &Direction) -> Result<f64> {
    let t = view.t;
    let r = t + sigma;
    if !(r >= 0.5 * t && 0.5 * t >= 1.0 - 1e-12) {
        return Err(Error::RayOutsideDomain { t });
    }
    let grid = view.grid;
    let x = [r * omega.w1(), r * omega.w2()];
    let a = (x[0] + grid.half_width) / grid.h;
    let b = (x[1] + grid.half_width) / grid.h;
    let (i, j) = (a.floor(), b.floor());
    if i < 1.0 || j < 1.0 || i + 2.0 > (grid.n - 1) as f64 || j + 2.0 > (grid.n - 1) as f64 {
        return Err(Error::RayOutsideDomain { t });
    }
    let (i, j) = (i as usize, j as usize);
    let (fa, fb) = (a - i as f64, b - j as f64);
    let mut acc = [0.0; 4];
    for (di, dj, w) in [
        (0, 0, (1.0 - fa) * (1.0 - fb)),
        (1, 0, fa * (1.0 - fb)),
        (0, 1, (1.0 - fa) * fb),
        (1, 1, fa * fb),
    ] {
        let d = view.gradient(i + di, j + dj);
        acc[0] += w * view.u[grid.index(i + di, j + dj)];
        acc[1] += w * d[0];
        acc[2] += w * d[1];
        acc[3] += w * d[2];
    }
    let [u, ut, u1, u2] = acc;
    let ur = omega.w1() * u1 + omega.w2() * u2;
    let sr = r.sqrt();
    Ok(0.5 * (u / (2.0 * sr) + sr * (ur - ut)))
}

/// Samples every snapshot at or after the ray's start time.
pub fn extract_ray(snapshots: &[Snapshot], sigma: f64, omega: &Direction) -> Result<ProfileSeries> {
    let t0 = ray_start(sigma);
    let mut times = Vec::new();
    let mut v = Vec::new();
    for s in snapshots.iter().filter(|s| s.t >= t0 - 1e-12) {
        times.push(s.t);
        v.push(sample_profile(&s.view(), sigma, omega)?);
    }
    if times.len() < 3 {
        return Err(Error::input("fewer than three snapshots on the ray"));
    }
    let g = vec![0.0; times.len()];
    ProfileSeries::new(times, v, g, None)
}

/// Residual of the profile ODE on an extracted series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualFit {
    pub times: Vec<f64>,
    /// `H = V' + P V^3 / (2t)`.
    pub h: Vec<f64>,
    /// Smallest `C` with `|H| <= C eps t^{2mu - 3/2} <sigma>^{-mu-1/2}`.
    pub constant: f64,
}

/// Second-order derivative on a nonuniform grid, one-sided at the ends.
pub fn differentiate_series(t: &[f64], v: &[f64]) -> Vec<f64> {
    let n = t.len();
    let three_point = |i0: usize, at: usize| {
        let (x0, x1, x2) = (t[i0], t[i0 + 1], t[i0 + 2]);
        let x = t[at];
        let l0 = (2.0 * x - x1 - x2) / ((x0 - x1) * (x0 - x2));
        let l1 = (2.0 * x - x0 - x2) / ((x1 - x0) * (x1 - x2));
        let l2 = (2.0 * x - x0 - x1) / ((x2 - x0) * (x2 - x1));
        l0 * v[i0] + l1 * v[i0 + 1] + l2 * v[i0 + 2]
    };
    (0..n)
        .map(|i| {
            if i == 0 {
                three_point(0, 0)
            } else if i == n - 1 {
                three_point(n - 3, n - 1)
            } else {
                three_point(i - 1, i)
            }
        })
        .collect()
}

/// `H` at the interior samples of the series (centred differences only; the
/// one-sided end values are dropped) and its envelope constant.
pub fn residual_forcing(series: &ProfileSeries, p_val: f64, epsilon: f64, sigma: f64, mu: f64) -> Result<ResidualFit> {
    if series.len() < 3 {
        return Err(Error::input("residual needs at least three samples"));
    }
    if !(epsilon > 0.0) {
        return Err(Error::input("epsilon must be positive for the envelope fit"));
    }
    let n = series.len();
    let dv = differentiate_series(&series.times, &series.v);
    let times = series.times[1..n - 1].to_vec();
    let h: Vec<f64> = (1..n - 1)
        .map(|i| {
            let (t, v) = (series.times[i], series.v[i]);
            dv[i] + p_val * v * v * v / (2.0 * t)
        })
        .collect();
    let weight = japanese(sigma).powf(-mu - 0.5);
    let constant = times
        .iter()
        .zip(&h)
        .map(|(t, hv)| hv.abs() / (epsilon * t.powf(2.0 * mu - 1.5) * weight))
        .fold(0.0, f64::max);
    Ok(ResidualFit { times, h, constant })
}

/// Smallest `C` with `|du| <= C eps <t + r>^{-1/2} <t - r>^{mu - 1}` on the
/// grid interior.
pub fn fit_pointwise_constant(view: &LevelView<'_>, epsilon: f64, mu: f64) -> f64 {
    if epsilon == 0.0 {
        return 0.0;
    }
    let grid = view.grid;
    let n = grid.n;
    let t = view.t;
    let mut best = 0.0f64;
    for j in 1..n - 1 {
        let y = grid.coord(j);
        for i in 1..n - 1 {
            let r = grid.coord(i).hypot(y);
            let d = view.gradient(i, j);
            let mag = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
            if mag == 0.0 {
                continue;
            }
            let env = japanese(t + r).powf(-0.5) * japanese(t - r).powf(mu - 1.0);
            best = best.max(mag / (epsilon.abs() * env));
        }
    }
    best
}

/// Smallest `C` with `E(t) <= C eps / (1 + eps^2 log(t + 2))^lambda`.
pub fn fit_energy_bound(series: &EnergySeries, epsilon: f64, lambda: f64) -> f64 {
    if epsilon == 0.0 {
        return 0.0;
    }
    series
        .times
        .iter()
        .zip(&series.values)
        .map(|(t, e)| e * (1.0 + epsilon * epsilon * (t + 2.0).ln()).powf(lambda) / epsilon.abs())
        .fold(0.0, f64::max)
}
