//! Explicit finite differences for `u_tt - Laplace u = F(du)` on a square,
//! with `F = F_q + F_c` taken from a [`NonlinearityCoefficients`].
//!
//! Leapfrog in time, 5-point Laplacian, centred space differences inside
//! `F`, homogeneous Dirichlet boundary. The `d_t u` argument of `F` is the
//! centred difference `(u^{n+1} - u^{n-1}) / (2 dt)`, resolved pointwise by
//! fixed-point iteration.

mod export;
mod ray;

pub use export::{energy_csv, read_snapshot, write_snapshot, SnapshotHeader};
pub use ray::{
    extract_ray, fit_energy_bound, fit_pointwise_constant, residual_forcing, sample_profile,
    ResidualFit, RayProbe,
};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trig_algebra::NonlinearityCoefficients;

/// `max |u|` above this aborts the run.
pub const BLOW_UP_GUARD: f64 = 1e10;
/// Largest admissible `dt / h`.
pub const MAX_CFL: f64 = 0.5;
/// Grid spacings of slack on the light cone, for domain size and support checks.
pub const CONE_SLACK: f64 = 4.0;
/// Corrections after the predictor in the `d_t u` fixed point.
pub const FIXED_POINT_ITERATIONS: usize = 2;
/// One-step energy growth factor flagged for the linear equation.
pub const INSTABILITY_GROWTH: f64 = 1.1;
/// Regression constant for the linear energy drift of the pointwise energy:
/// `|E(T) - E(0)| / E(0) <= K h^2`, frozen from runs with `h` in `[0.025, 0.21]`.
pub const LINEAR_DRIFT_K: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    /// Nodes per side.
    pub n: usize,
    pub h: f64,
    /// The square is `[-half_width, half_width]^2`.
    pub half_width: f64,
}

impl Grid {
    /// Uniform grid whose spacing is the closest to `h` that divides `2 L`.
    pub fn new(half_width: f64, h: f64) -> Result<Self> {
        if !(half_width > 0.0 && h > 0.0 && half_width.is_finite()) {
            return Err(Error::input("grid half-width and spacing must be positive"));
        }
        let cells = (2.0 * half_width / h).round().max(4.0) as usize;
        Ok(Grid {
            n: cells + 1,
            h: 2.0 * half_width / cells as f64,
            half_width,
        })
    }

    pub fn coord(&self, i: usize) -> f64 {
        -self.half_width + i as f64 * self.h
    }

    pub fn len(&self) -> usize {
        self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.n + i
    }

    /// Samples `f(x1, x2)` at every node, row-major in `x2`.
    pub fn sample(&self, f: impl Fn(f64, f64) -> f64 + Sync) -> Vec<f64> {
        let n = self.n;
        let mut out = vec![0.0; self.len()];
        out.par_chunks_mut(n).enumerate().for_each(|(j, row)| {
            let y = self.coord(j);
            for (i, v) in row.iter_mut().enumerate() {
                *v = f(self.coord(i), y);
            }
        });
        out
    }
}

/// `exp(-1 / (1 - |x/R|^2))` inside the disc, zero outside. Returns the
/// value and its gradient.
pub fn bump(x1: f64, x2: f64, radius: f64) -> (f64, [f64; 2]) {
    let s = (x1 * x1 + x2 * x2) / (radius * radius);
    if s >= 1.0 {
        return (0.0, [0.0, 0.0]);
    }
    let v = (-1.0 / (1.0 - s)).exp();
    let d = -2.0 * v / (radius * radius * (1.0 - s) * (1.0 - s));
    (v, [d * x1, d * x2])
}

/// Square tabulation of `f` and `g` on `[-half_width, half_width]^2`,
/// bilinearly interpolated and zero outside.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TabulatedData {
    pub n: usize,
    pub half_width: f64,
    pub f: Vec<f64>,
    pub g: Vec<f64>,
}

impl TabulatedData {
    fn interpolate(&self, values: &[f64], x1: f64, x2: f64) -> f64 {
        let h = 2.0 * self.half_width / (self.n - 1) as f64;
        let (a, b) = ((x1 + self.half_width) / h, (x2 + self.half_width) / h);
        if a < 0.0 || b < 0.0 || a > (self.n - 1) as f64 || b > (self.n - 1) as f64 {
            return 0.0;
        }
        let i = (a.floor() as usize).min(self.n - 2);
        let j = (b.floor() as usize).min(self.n - 2);
        let (fa, fb) = (a - i as f64, b - j as f64);
        let at = |i: usize, j: usize| values[j * self.n + i];
        (1.0 - fa) * (1.0 - fb) * at(i, j)
            + fa * (1.0 - fb) * at(i + 1, j)
            + (1.0 - fa) * fb * at(i, j + 1)
            + fa * fb * at(i + 1, j + 1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DataKind {
    /// `f = bump`, `g = -d_1 bump`.
    SmoothBump,
    /// `f = 0`, `g = -d_1 bump`.
    DerivBump,
    Custom(TabulatedData),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitialData {
    #[serde(flatten)]
    pub kind: DataKind,
    /// Support radius `R`.
    pub radius: f64,
    pub epsilon: f64,
    #[serde(default)]
    pub center: [f64; 2],
}

impl InitialData {
    pub fn smooth_bump(radius: f64, epsilon: f64) -> Self {
        InitialData { kind: DataKind::SmoothBump, radius, epsilon, center: [0.0, 0.0] }
    }

    pub fn deriv_bump(radius: f64, epsilon: f64) -> Self {
        InitialData { kind: DataKind::DerivBump, radius, epsilon, center: [0.0, 0.0] }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            return Err(Error::input("support radius must be positive"));
        }
        if !self.epsilon.is_finite() || !self.center.iter().all(|c| c.is_finite()) {
            return Err(Error::input("epsilon and center must be finite"));
        }
        if let DataKind::Custom(tab) = &self.kind {
            let n = tab.n;
            if n < 2 || tab.f.len() != n * n || tab.g.len() != n * n || !(tab.half_width > 0.0) {
                return Err(Error::input("tabulated data needs n >= 2 and n*n samples of f and g"));
            }
            let h = 2.0 * tab.half_width / (n - 1) as f64;
            for j in 0..n {
                for i in 0..n {
                    let (x, y) = (-tab.half_width + i as f64 * h, -tab.half_width + j as f64 * h);
                    let k = j * n + i;
                    if (tab.f[k] != 0.0 || tab.g[k] != 0.0) && x.hypot(y) >= self.radius {
                        return Err(Error::input(format!(
                            "tabulated data is nonzero at |x| = {} >= R = {}",
                            x.hypot(y),
                            self.radius
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// `(f, g)` at a point, before scaling by epsilon.
    pub fn profile(&self, x1: f64, x2: f64) -> (f64, f64) {
        let (y1, y2) = (x1 - self.center[0], x2 - self.center[1]);
        match &self.kind {
            DataKind::SmoothBump => {
                let (v, d) = bump(y1, y2, self.radius);
                (v, -d[0])
            }
            DataKind::DerivBump => (0.0, -bump(y1, y2, self.radius).1[0]),
            DataKind::Custom(tab) => {
                if y1.hypot(y2) >= self.radius {
                    (0.0, 0.0)
                } else {
                    (tab.interpolate(&tab.f, y1, y2), tab.interpolate(&tab.g, y1, y2))
                }
            }
        }
    }
}

/// Only the nonzero monomials of `F`, for the inner loop.
#[derive(Debug, Clone, PartialEq)]
struct CompiledNonlinearity {
    quadratic: Vec<(f64, [usize; 2])>,
    cubic: Vec<(f64, [usize; 3])>,
    uses_dt: bool,
}

impl CompiledNonlinearity {
    fn new(c: &NonlinearityCoefficients) -> Self {
        let mut quadratic = Vec::new();
        let mut cubic = Vec::new();
        for j in 0..3 {
            for k in 0..3 {
                if c.b[j][k] != 0.0 {
                    quadratic.push((c.b[j][k], [j, k]));
                }
                for l in 0..3 {
                    if c.c[j][k][l] != 0.0 {
                        cubic.push((c.c[j][k][l], [j, k, l]));
                    }
                }
            }
        }
        let uses_dt = quadratic.iter().any(|(_, ix)| ix.contains(&0)) || cubic.iter().any(|(_, ix)| ix.contains(&0));
        CompiledNonlinearity { quadratic, cubic, uses_dt }
    }

    fn is_zero(&self) -> bool {
        self.quadratic.is_empty() && self.cubic.is_empty()
    }

    #[inline]
    fn eval(&self, d: [f64; 3]) -> f64 {
        let mut s = 0.0;
        for (c, [j, k]) in &self.quadratic {
            s += c * d[*j] * d[*k];
        }
        for (c, [j, k, l]) in &self.cubic {
            s += c * d[*j] * d[*k] * d[*l];
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub grid: Grid,
    pub dt: f64,
    pub steps: usize,
    pub t_final: f64,
    pub nonlinearity: NonlinearityCoefficients,
    compiled: CompiledNonlinearity,
}

impl SolverConfig {
    /// `dt` is the largest value `<= cfl * h` that divides `t_final` evenly.
    pub fn new(
        half_width: f64,
        h: f64,
        cfl: f64,
        t_final: f64,
        nonlinearity: NonlinearityCoefficients,
    ) -> Result<Self> {
        if !(cfl > 0.0 && cfl <= MAX_CFL) {
            return Err(Error::input(format!("cfl must lie in (0, {MAX_CFL}], got {cfl}")));
        }
        if !(t_final >= 0.0 && t_final.is_finite()) {
            return Err(Error::input("final time must be finite and nonnegative"));
        }
        let grid = Grid::new(half_width, h)?;
        let steps = (t_final / (cfl * grid.h)).ceil() as usize;
        let dt = if steps == 0 { cfl * grid.h } else { t_final / steps as f64 };
        Ok(SolverConfig {
            grid,
            dt,
            steps,
            t_final,
            compiled: CompiledNonlinearity::new(&nonlinearity),
            nonlinearity,
        })
    }

    pub fn cfl(&self) -> f64 {
        self.dt / self.grid.h
    }

    pub fn is_linear(&self) -> bool {
        self.compiled.is_zero()
    }

    /// `L >= T + dt + R + 4h`: the light cone, including the look-ahead step
    /// of [`run`], stays inside the box.
    pub fn check_domain(&self, data: &InitialData) -> Result<()> {
        let reach = self.t_final + self.dt + data.radius + data.center[0].abs().max(data.center[1].abs()) + CONE_SLACK * self.grid.h;
        if self.grid.half_width < reach {
            return Err(Error::input(format!(
                "half-width {} is below T + R + 4h = {reach}",
                self.grid.half_width
            )));
        }
        Ok(())
    }
}

/// Two time levels plus a `d_t u` estimate at the newest one.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveField {
    pub t: f64,
    pub steps_taken: usize,
    pub grid: Grid,
    /// `u^n`.
    pub u: Vec<f64>,
    /// `d_t u` at level `n`: exact at `t = 0`, second-order one-sided after.
    pub ut: Vec<f64>,
    /// `u^{n-1}`, empty before the first step.
    pub prev: Vec<f64>,
    /// `u^{n-2}`, empty before the second step.
    pub older: Vec<f64>,
    ut_spare: Vec<f64>,
    last_linear_energy: Option<f64>,
}

impl WaveField {
    pub fn zero(grid: Grid) -> Self {
        Self::from_samples(grid, vec![0.0; grid.len()], vec![0.0; grid.len()]).expect("sizes match")
    }

    /// State at `t = 0`; boundary nodes are forced to zero.
    pub fn from_samples(grid: Grid, mut u: Vec<f64>, mut ut: Vec<f64>) -> Result<Self> {
        if u.len() != grid.len() || ut.len() != grid.len() {
            return Err(Error::input("field sizes do not match the grid"));
        }
        for f in [&mut u, &mut ut] {
            zero_boundary(f, grid.n);
        }
        Ok(WaveField {
            t: 0.0,
            steps_taken: 0,
            grid,
            u,
            ut,
            prev: Vec::new(),
            older: Vec::new(),
            ut_spare: Vec::new(),
            last_linear_energy: None,
        })
    }

    pub fn max_abs(&self) -> f64 {
        self.u.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Centred-in-time view of level `n - 1`, available after two steps.
    pub fn previous_level(&self, dt: f64) -> Option<LevelView<'_>> {
        if self.steps_taken < 2 {
            return None;
        }
        Some(LevelView {
            t: self.t - dt,
            grid: self.grid,
            u: &self.prev,
            ut: UtSource::Centered { next: &self.u, prev: &self.older, inv_2dt: 0.5 / dt },
        })
    }

    pub fn current_level(&self) -> LevelView<'_> {
        LevelView { t: self.t, grid: self.grid, u: &self.u, ut: UtSource::Stored(&self.ut) }
    }

    /// `sqrt(1/2 h^2 sum[((u^n - u^{n-1})/dt)^2 + D^+ u^n . D^+ u^{n-1}])`,
    /// the quantity leapfrog conserves exactly for `F = 0`. Belongs to
    /// `t - dt/2`.
    pub fn staggered_energy(&self, dt: f64) -> Option<f64> {
        if self.prev.is_empty() {
            return None;
        }
        Some(staggered_energy(&self.grid, &self.prev, &self.u, dt))
    }
}

fn zero_boundary(f: &mut [f64], n: usize) {
    for k in 0..n {
        f[k] = 0.0;
        f[(n - 1) * n + k] = 0.0;
        f[k * n] = 0.0;
        f[k * n + n - 1] = 0.0;
    }
}

#[derive(Debug, Clone, Copy)]
pub enum UtSource<'a> {
    Stored(&'a [f64]),
    Centered { next: &'a [f64], prev: &'a [f64], inv_2dt: f64 },
}

impl UtSource<'_> {
    #[inline]
    pub fn at(&self, k: usize) -> f64 {
        match self {
            UtSource::Stored(v) => v[k],
            UtSource::Centered { next, prev, inv_2dt } => (next[k] - prev[k]) * inv_2dt,
        }
    }
}

/// Read-only access to `u` and `d_t u` at one time level.
#[derive(Debug, Clone, Copy)]
pub struct LevelView<'a> {
    pub t: f64,
    pub grid: Grid,
    pub u: &'a [f64],
    pub ut: UtSource<'a>,
}

impl LevelView<'_> {
    /// `(d_t u, d_1 u, d_2 u)` at an interior node.
    pub fn gradient(&self, i: usize, j: usize) -> [f64; 3] {
        let n = self.grid.n;
        let k = j * n + i;
        let inv = 0.5 / self.grid.h;
        [
            self.ut.at(k),
            (self.u[k + 1] - self.u[k - 1]) * inv,
            (self.u[k + n] - self.u[k - n]) * inv,
        ]
    }

    pub fn to_snapshot(&self) -> Snapshot {
        Snapshot {
            t: self.t,
            grid: self.grid,
            u: self.u.to_vec(),
            ut: (0..self.u.len()).map(|k| self.ut.at(k)).collect(),
        }
    }
}

/// Owned copy of one level.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    pub grid: Grid,
    pub u: Vec<f64>,
    pub ut: Vec<f64>,
}

impl Snapshot {
    pub fn view(&self) -> LevelView<'_> {
        LevelView { t: self.t, grid: self.grid, u: &self.u, ut: UtSource::Stored(&self.ut) }
    }
}

/// Samples `epsilon f` and `epsilon g` on the grid.
pub fn make_initial_data(data: &InitialData, cfg: &SolverConfig) -> Result<WaveField> {
    data.validate()?;
    if data.radius >= cfg.grid.half_width {
        return Err(Error::input("support radius must be below the half-width"));
    }
    let eps = data.epsilon;
    let u = cfg.grid.sample(|x, y| eps * data.profile(x, y).0);
    let ut = cfg.grid.sample(|x, y| eps * data.profile(x, y).1);
    WaveField::from_samples(cfg.grid, u, ut)
}

fn staggered_energy(grid: &Grid, a: &[f64], b: &[f64], dt: f64) -> f64 {
    let n = grid.n;
    let h = grid.h;
    let sum: f64 = (0..n)
        .into_par_iter()
        .map(|j| {
            let mut s = 0.0;
            for i in 0..n {
                let k = j * n + i;
                let v = (b[k] - a[k]) / dt;
                s += v * v;
                if i + 1 < n {
                    s += (b[k + 1] - b[k]) * (a[k + 1] - a[k]) / (h * h);
                }
                if j + 1 < n {
                    s += (b[k + n] - b[k]) * (a[k + n] - a[k]) / (h * h);
                }
            }
            s
        })
        .collect::<Vec<f64>>()
        .into_iter()
        .sum();
    (0.5 * h * h * sum).max(0.0).sqrt()
}

/// `sqrt(1/2 h^2 sum (u_t^2 + |D^+ u|^2))` with forward differences.
pub fn energy(state: &WaveField) -> f64 {
    energy_of(&state.current_level())
}

pub fn energy_of(view: &LevelView<'_>) -> f64 {
    let grid = view.grid;
    let (n, h) = (grid.n, grid.h);
    let (u, ut) = (view.u, view.ut);
    let sum: f64 = (0..n)
        .into_par_iter()
        .map(|j| {
            let mut s = 0.0;
            for i in 0..n {
                let k = j * n + i;
                let w = ut.at(k);
                s += w * w;
                if i + 1 < n {
                    let d = (u[k + 1] - u[k]) / h;
                    s += d * d;
                }
                if j + 1 < n {
                    let d = (u[k + n] - u[k]) / h;
                    s += d * d;
                }
            }
            s
        })
        .collect::<Vec<f64>>()
        .into_iter()
        .sum();
    (0.5 * h * h * sum).sqrt()
}

/// One leapfrog step. The state must have been built on `cfg.grid`.
pub fn step(state: &mut WaveField, cfg: &SolverConfig) -> Result<()> {
    let grid = cfg.grid;
    if state.grid != grid {
        return Err(Error::input("state and configuration grids differ"));
    }
    let (n, h, dt) = (grid.n, grid.h, cfg.dt);
    let inv_h2 = 1.0 / (h * h);
    let inv_2h = 0.5 / h;
    let dt2 = dt * dt;
    let nl = &cfg.compiled;
    let first = state.prev.is_empty();

    let mut next = std::mem::take(&mut state.older);
    next.resize(grid.len(), 0.0);
    let mut ut_next = std::mem::take(&mut state.ut_spare);
    ut_next.resize(grid.len(), 0.0);
    let (u, ut, prev) = (&state.u, &state.ut, &state.prev);
    let inv_2dt = 0.5 / dt;

    let peak = next
        .par_chunks_mut(n)
        .zip(ut_next.par_chunks_mut(n))
        .enumerate()
        .map(|(j, (row, ut_row))| {
            if j == 0 || j == n - 1 {
                row.fill(0.0);
                ut_row.fill(0.0);
                return 0.0;
            }
            let um = &u[(j - 1) * n..j * n];
            let u0 = &u[j * n..(j + 1) * n];
            let up = &u[(j + 1) * n..(j + 2) * n];
            let w0 = &ut[j * n..(j + 1) * n];
            let p0 = if first { w0 } else { &prev[j * n..(j + 1) * n] };
            row[0] = 0.0;
            row[n - 1] = 0.0;
            ut_row[0] = 0.0;
            ut_row[n - 1] = 0.0;
            let mut row_peak = 0.0f64;
            for i in 1..n - 1 {
                let c = u0[i];
                let lap = (u0[i + 1] + u0[i - 1] + up[i] + um[i] - 4.0 * c) * inv_h2;
                let d1 = (u0[i + 1] - u0[i - 1]) * inv_2h;
                let d2 = (up[i] - um[i]) * inv_2h;
                let (value, w_out) = if first {
                    let acc = lap + nl.eval([w0[i], d1, d2]);
                    (c + dt * w0[i] + 0.5 * dt2 * acc, w0[i] + dt * acc)
                } else {
                    let pv = p0[i];
                    let base = 2.0 * c - pv + dt2 * lap;
                    let mut w = w0[i];
                    let mut value = base + dt2 * nl.eval([w, d1, d2]);
                    if nl.uses_dt {
                        let mut last_change = f64::INFINITY;
                        for _ in 0..FIXED_POINT_ITERATIONS {
                            let w_new = (value - pv) * inv_2dt;
                            let change = (w_new - w).abs();
                            if change > last_change {
                                // not contracting: keep the lagged estimate
                                value = base + dt2 * nl.eval([w0[i], d1, d2]);
                                break;
                            }
                            last_change = change;
                            w = w_new;
                            value = base + dt2 * nl.eval([w, d1, d2]);
                        }
                    }
                    (value, (3.0 * value - 4.0 * c + pv) * inv_2dt)
                };
                row[i] = value;
                ut_row[i] = w_out;
                row_peak = if value.is_finite() { row_peak.max(value.abs()) } else { f64::INFINITY };
            }
            row_peak
        })
        .reduce(|| 0.0, f64::max);

    let t_new = cfg.dt * (state.steps_taken + 1) as f64;
    if !(peak <= BLOW_UP_GUARD) {
        state.older = next;
        state.ut_spare = ut_next;
        return Err(Error::BlowUp { t: t_new, value: peak });
    }

    let old_prev = std::mem::take(&mut state.prev);
    let old_u = std::mem::replace(&mut state.u, next);
    state.prev = old_u;
    state.older = old_prev;
    state.ut_spare = std::mem::replace(&mut state.ut, ut_next);
    state.t = t_new;
    state.steps_taken += 1;

    if cfg.is_linear() {
        let e = staggered_energy(&grid, &state.prev, &state.u, dt);
        if let Some(before) = state.last_linear_energy {
            if before > 0.0 && e > INSTABILITY_GROWTH * before {
                return Err(Error::Instability { t: state.t, growth: e / before });
            }
        }
        state.last_linear_energy = Some(e);
    }
    Ok(())
}

/// `max |u|` over nodes with `|x - center| > t + R + 4h`.
pub fn check_propagation(view: &LevelView<'_>, radius: f64, center: [f64; 2]) -> f64 {
    check_propagation_with(view, radius, center, CONE_SLACK)
}

/// As [`check_propagation`] with the cone widened by `slack_cells * h`.
pub fn check_propagation_with(view: &LevelView<'_>, radius: f64, center: [f64; 2], slack_cells: f64) -> f64 {
    let grid = view.grid;
    let limit = view.t + radius + slack_cells * grid.h;
    let n = grid.n;
    (0..n)
        .into_par_iter()
        .map(|j| {
            let y = grid.coord(j) - center[1];
            let mut m = 0.0f64;
            for i in 0..n {
                let x = grid.coord(i) - center[0];
                if x.hypot(y) > limit {
                    m = m.max(view.u[j * n + i].abs());
                }
            }
            m
        })
        .reduce(|| 0.0, f64::max)
}

/// `(t, E)` with `E` the staggered energy between consecutive levels,
/// stamped at the half step.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EnergySeries {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

impl EnergySeries {
    pub fn push(&mut self, t: f64, e: f64) {
        self.times.push(t);
        self.values.push(e);
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Largest `E_{k+1} - E_k`.
    pub fn max_increase(&self) -> f64 {
        self.values.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    /// Record the energy every this many steps.
    pub energy_every: usize,
    /// Diagnose (and maybe keep) a level every this many steps; the final
    /// level is always included.
    pub checkpoint_every: usize,
    pub keep_snapshots: bool,
    /// Rays sampled at every step.
    pub probes: Vec<RayProbe>,
    /// `mu` in the pointwise derivative envelope; `None` skips the fit.
    pub pointwise_mu: Option<f64>,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            energy_every: 1,
            checkpoint_every: 10,
            keep_snapshots: false,
            probes: Vec::new(),
            pointwise_mu: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CheckpointDiagnostics {
    pub t: f64,
    pub max_abs_u: f64,
    pub outside_cone: f64,
    pub pointwise_constant: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub energy: EnergySeries,
    /// Direct-quadrature energy at `t = 0` and at the final time.
    pub energy_initial: f64,
    pub energy_final: f64,
    pub checkpoints: Vec<CheckpointDiagnostics>,
    pub snapshots: Vec<Snapshot>,
    /// One `(t, V)` list per probe.
    pub probes: Vec<(Vec<f64>, Vec<f64>)>,
    /// Level at `t_final`.
    pub final_level: Snapshot,
}

impl RunOutput {
    pub fn max_outside_cone(&self) -> f64 {
        self.checkpoints.iter().map(|c| c.outside_cone).fold(0.0, f64::max)
    }

    pub fn pointwise_constant(&self) -> Option<f64> {
        self.checkpoints.iter().filter_map(|c| c.pointwise_constant).reduce(f64::max)
    }
}

/// Advances the data to `cfg.t_final`. One look-ahead step past the final
/// time gives every observed level a centred `d_t u`; the cone check in
/// [`SolverConfig::check_domain`] leaves room for it.
pub fn run(cfg: &SolverConfig, data: &InitialData, opts: &RunOptions) -> Result<RunOutput> {
    cfg.check_domain(data)?;
    if opts.energy_every == 0 || opts.checkpoint_every == 0 {
        return Err(Error::input("energy and checkpoint cadences must be positive"));
    }
    let mut state = make_initial_data(data, cfg)?;
    let initial_ut = state.ut.clone();
    let energy_initial = energy(&state);
    let mut out = RunOutput {
        energy: EnergySeries::default(),
        energy_initial,
        energy_final: energy_initial,
        checkpoints: Vec::new(),
        snapshots: Vec::new(),
        probes: vec![(Vec::new(), Vec::new()); opts.probes.len()],
        final_level: state.current_level().to_snapshot(),
    };

    let observe = |view: &LevelView<'_>, level: usize, out: &mut RunOutput| -> Result<()> {
        for (probe, series) in opts.probes.iter().zip(out.probes.iter_mut()) {
            if view.t >= probe.t_start() - 1e-12 {
                let v = sample_profile(view, probe.sigma, &probe.omega)?;
                series.0.push(view.t);
                series.1.push(v);
            }
        }
        if level % opts.checkpoint_every == 0 || level == cfg.steps {
            out.checkpoints.push(CheckpointDiagnostics {
                t: view.t,
                max_abs_u: view.u.iter().fold(0.0, |m, v| m.max(v.abs())),
                outside_cone: check_propagation(view, data.radius, data.center),
                pointwise_constant: opts
                    .pointwise_mu
                    .map(|mu| fit_pointwise_constant(view, data.epsilon, mu)),
            });
            if opts.keep_snapshots {
                out.snapshots.push(view.to_snapshot());
            }
        }
        if level == cfg.steps {
            out.energy_final = energy_of(view);
            out.final_level = view.to_snapshot();
        }
        Ok(())
    };

    if cfg.steps == 0 {
        let view = state.current_level();
        return observe(&view, 0, &mut out).map(|_| out);
    }
    for n in 0..=cfg.steps {
        step(&mut state, cfg)?;
        // level n is now fully known, including the centred d_t u
        if n == 0 {
            let view = LevelView {
                t: 0.0,
                grid: cfg.grid,
                u: &state.prev,
                ut: UtSource::Stored(&initial_ut),
            };
            observe(&view, 0, &mut out)?;
        } else if let Some(view) = state.previous_level(cfg.dt) {
            observe(&view, n, &mut out)?;
        }
        if n < cfg.steps && ((n + 1) % opts.energy_every == 0 || n + 1 == cfg.steps) {
            let e = state.staggered_energy(cfg.dt).expect("one step taken");
            out.energy.push(state.t - 0.5 * cfg.dt, e);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests;
