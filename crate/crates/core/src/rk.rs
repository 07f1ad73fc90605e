//! Classical RK4 with step-doubling error control for scalar ODEs.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepControl {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub h_init: f64,
    pub h_min: f64,
    pub h_max: f64,
    pub max_steps: usize,
}

impl Default for StepControl {
    fn default() -> Self {
        StepControl {
            abs_tol: 1e-10,
            rel_tol: 0.0,
            h_init: 1e-3,
            h_min: 1e-14,
            h_max: 0.05,
            max_steps: 10_000_000,
        }
    }
}

fn rk4<F: Fn(f64, f64) -> f64>(f: &F, x: f64, y: f64, h: f64) -> f64 {
    let k1 = f(x, y);
    let k2 = f(x + 0.5 * h, y + 0.5 * h * k1);
    let k3 = f(x + 0.5 * h, y + 0.5 * h * k2);
    let k4 = f(x + h, y + h * k3);
    y + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
}

/// Integrates `y' = f(x, y)` from `(x0, y0)` and returns `y` at each of the
/// increasing `outputs` (all `>= x0`). Steps are clipped to land on output
/// points. `guard(x, y)` runs after every accepted step.
///
/// The accepted value is the Richardson-extrapolated pair of half steps,
/// with the error estimated as `|y_half - y_full| / 15`.
pub fn integrate<F, G>(
    f: F,
    x0: f64,
    y0: f64,
    outputs: &[f64],
    ctrl: &StepControl,
    mut guard: G,
) -> Result<Vec<f64>>
where
    F: Fn(f64, f64) -> f64,
    G: FnMut(f64, f64) -> Result<()>,
{
    let mut out = Vec::with_capacity(outputs.len());
    let mut x = x0;
    let mut y = y0;
    let mut h = ctrl.h_init;
    let mut steps = 0usize;
    for &target in outputs {
        if target < x {
            return Err(Error::input(format!("output point {target} precedes start {x}")));
        }
        while x < target {
            steps += 1;
            if steps > ctrl.max_steps {
                return Err(Error::StepUnderflow { t: x });
            }
            let remaining = target - x;
            let last = h >= remaining;
            let step = if last { remaining } else { h };
            let full = rk4(&f, x, y, step);
            let half = rk4(&f, x, y, 0.5 * step);
            let two_half = rk4(&f, x + 0.5 * step, half, 0.5 * step);
            let err = (two_half - full).abs() / 15.0;
            let tol = ctrl.abs_tol + ctrl.rel_tol * two_half.abs();
            if err <= tol || step <= ctrl.h_min {
                if !two_half.is_finite() {
                    return Err(Error::StepUnderflow { t: x });
                }
                y = two_half + (two_half - full) / 15.0;
                x = if last { target } else { x + step };
                guard(x, y)?;
                let grow = if err == 0.0 { 4.0 } else { (0.9 * (tol / err).powf(0.2)).clamp(0.2, 4.0) };
                if !last {
                    h = (step * grow).min(ctrl.h_max);
                } else {
                    h = h.max(step * grow).min(ctrl.h_max);
                }
            } else {
                let shrink = (0.9 * (tol / err).powf(0.2)).clamp(0.1, 0.9);
                h = step * shrink;
                if h < ctrl.h_min {
                    return Err(Error::StepUnderflow { t: x });
                }
            }
        }
        out.push(y);
    }
    Ok(out)
}
