//! Command-line front end: JSON config, `--set` overrides, the five
//! commands and the run manifest written next to every output.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, ErrorClass, Result};
use crate::ode_profile::{
    self, check_sqrtlog_decay, integrate_profile_with, ForcingSpec, MatsumuraParams, ProfileSeries, RayConfig,
};
use crate::structure_analysis::{self, Agemi, ConditionReport, IntegrabilityReport};
use crate::trig_algebra::{cubic_to_trig_poly, eval_cubic_symbol, Direction, NonlinearityCoefficients};
use crate::wave_lab::{self, InitialData, RayProbe, RunOptions, SolverConfig};

pub mod suites;
mod svg;

pub use suites::Check;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONDITION: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_USAGE: i32 = 64;

/// `|P(omega)|` below this marks a degenerate direction.
pub const DEGENERATE_SYMBOL: f64 = 1e-12;

pub fn exit_code(class: ErrorClass) -> i32 {
    match class {
        ErrorClass::Input => EXIT_USAGE,
        ErrorClass::Condition => EXIT_CONDITION,
        ErrorClass::Numerical => EXIT_NUMERICAL,
    }
}

// ---------------------------------------------------------------- config

fn default_b() -> Vec<f64> {
    vec![0.0; 9]
}

fn default_c() -> Vec<f64> {
    vec![0.0; 27]
}

fn default_data() -> InitialData {
    InitialData::smooth_bump(1.0, 0.1)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    /// Quadratic coefficients, row-major.
    #[serde(rename = "B", default = "default_b")]
    pub b: Vec<f64>,
    /// Cubic coefficients, index order `j,k,l` with `l` fastest.
    #[serde(rename = "C", default = "default_c")]
    pub c: Vec<f64>,
    #[serde(default = "default_data")]
    pub data: InitialData,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub ray: RaySection,
    #[serde(default)]
    pub prediction: PredictionSection,
}

impl Default for Config {
    fn default() -> Self {
        serde_json::from_str("{}").expect("defaults deserialize")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSection {
    /// Box half-width; `None` picks `T + R + |center| + 1 + 8h`.
    pub half_width: Option<f64>,
    pub h: f64,
    pub cfl: f64,
    pub t_final: f64,
    pub energy_every: usize,
    pub checkpoint_every: usize,
    pub write_checkpoints: bool,
    pub probes: Vec<ProbeSpec>,
}

impl Default for GridSection {
    fn default() -> Self {
        GridSection {
            half_width: None,
            h: 0.1,
            cfl: 0.5,
            t_final: 10.0,
            energy_every: 1,
            checkpoint_every: 10,
            write_checkpoints: false,
            probes: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeSpec {
    pub sigma: f64,
    /// Direction angle in radians.
    pub theta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RaySection {
    pub sigma: f64,
    pub theta: f64,
    pub epsilon: f64,
    /// `None` takes the predicted `mu`, or 0.05 outside the regime.
    pub mu: Option<f64>,
    pub t_end: f64,
    pub v0: f64,
    pub forcing: ForcingSpec,
    pub per_decade: usize,
    /// Number of equally spaced directions for `ensemble.csv`; 0 skips it.
    pub ensemble: usize,
}

impl Default for RaySection {
    fn default() -> Self {
        RaySection {
            sigma: 0.0,
            theta: 0.0,
            epsilon: 0.1,
            mu: None,
            t_end: 1e8,
            v0: 0.3,
            forcing: ForcingSpec::Zero,
            per_decade: ode_profile::POINTS_PER_DECADE,
            ensemble: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PredictionSection {
    pub delta: f64,
    pub mu_factor: f64,
}

impl Default for PredictionSection {
    fn default() -> Self {
        PredictionSection {
            delta: structure_analysis::DEFAULT_DELTA,
            mu_factor: structure_analysis::DEFAULT_MU_FACTOR,
        }
    }
}

impl Config {
    pub fn coefficients(&self) -> Result<NonlinearityCoefficients> {
        NonlinearityCoefficients::from_flat(&self.b, &self.c)
    }

    pub fn from_value(value: Value) -> Result<Self> {
        serde_json::from_value(value).map_err(|e| Error::input(format!("config: {e}")))
    }

    /// Reads `path` and applies `key.path=value` overrides in order.
    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::input(format!("{}: {e}", path.display())))?;
        let mut value: Value =
            serde_json::from_str(&text).map_err(|e| Error::input(format!("{}: {e}", path.display())))?;
        for o in overrides {
            apply_override(&mut value, o)?;
        }
        Self::from_value(value)
    }

    fn half_width(&self) -> f64 {
        self.grid.half_width.unwrap_or_else(|| {
            let c = self.data.center[0].abs().max(self.data.center[1].abs());
            (self.grid.t_final + self.data.radius + c + 1.0 + 8.0 * self.grid.h).ceil()
        })
    }

    pub fn solver(&self) -> Result<SolverConfig> {
        SolverConfig::new(self.half_width(), self.grid.h, self.grid.cfl, self.grid.t_final, self.coefficients()?)
    }
}

/// `a.b.c=value`; the value is parsed as JSON and taken as a string if that
/// fails. Missing objects along the path are created.
pub fn apply_override(root: &mut Value, spec: &str) -> Result<()> {
    let (key, raw) = spec
        .split_once('=')
        .ok_or_else(|| Error::input(format!("override `{spec}` is not key=value")))?;
    if key.is_empty() {
        return Err(Error::input(format!("override `{spec}` has an empty key")));
    }
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut cur = root;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let last = i + 1 == parts.len();
        cur = match cur {
            Value::Object(map) => {
                if last {
                    map.insert(part.to_string(), value);
                    return Ok(());
                }
                map.entry(part.to_string()).or_insert_with(|| Value::Object(Default::default()))
            }
            Value::Array(items) => {
                let idx: usize = part
                    .parse()
                    .map_err(|_| Error::input(format!("override `{key}`: `{part}` is not an index")))?;
                let len = items.len();
                let slot = items
                    .get_mut(idx)
                    .ok_or_else(|| Error::input(format!("override `{key}`: index {idx} out of range ({len})")))?;
                if last {
                    *slot = value;
                    return Ok(());
                }
                slot
            }
            _ => return Err(Error::input(format!("override `{key}`: `{part}` is not inside an object"))),
        };
    }
    Ok(())
}

// -------------------------------------------------------------- manifest

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config: Value,
    pub version: String,
    pub wall_clock_seconds: f64,
    /// File names relative to the output directory.
    pub outputs: Vec<String>,
    pub checks: Vec<Check>,
    pub status: String,
    pub exit_code: i32,
    pub error_class: Option<ErrorClass>,
    pub error: Option<String>,
}

pub const MANIFEST_FILE: &str = "manifest.json";

/// Files written by one command, in write order.
#[derive(Debug)]
pub struct Outputs {
    dir: PathBuf,
    written: Vec<String>,
}

impl Outputs {
    pub fn new(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).map_err(|e| Error::input(format!("{}: {e}", dir.display())))?;
        Ok(Outputs { dir: dir.to_path_buf(), written: Vec::new() })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn write(&mut self, name: &str, body: impl AsRef<[u8]>) -> Result<PathBuf> {
        let path = self.dir.join(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| Error::input(format!("{}: {e}", parent.display())))?;
        }
        fs::write(&path, body).map_err(|e| Error::input(format!("{}: {e}", path.display())))?;
        self.record(name);
        Ok(path)
    }

    fn record(&mut self, name: &str) {
        if !self.written.iter().any(|w| w == name) {
            self.written.push(name.to_string());
        }
    }

    pub fn files(&self) -> &[String] {
        &self.written
    }
}

/// What a command produced, before the manifest is written.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Outcome {
    pub exit_code: i32,
    pub checks: Vec<Check>,
}

fn to_json<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("serializable") + "\n"
}

/// Runs `body`, then writes the manifest whatever happened.
fn with_manifest(
    command: &str,
    config: Value,
    out_dir: &Path,
    body: impl FnOnce(&mut Outputs) -> Result<Outcome>,
) -> i32 {
    let start = Instant::now();
    let mut outputs = match Outputs::new(out_dir) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    let result = body(&mut outputs);
    let (exit, checks, error_class, error) = match result {
        Ok(o) => (o.exit_code, o.checks, None, None),
        Err(e) => {
            eprintln!("error: {e}");
            (exit_code(e.class()), Vec::new(), Some(e.class()), Some(e.to_string()))
        }
    };
    let mut manifest = RunManifest {
        command: command.to_string(),
        config,
        version: env!("CARGO_PKG_VERSION").to_string(),
        wall_clock_seconds: start.elapsed().as_secs_f64(),
        outputs: outputs.files().to_vec(),
        status: if exit == EXIT_OK { "ok".into() } else { "failed".into() },
        exit_code: exit,
        checks,
        error_class,
        error,
    };
    manifest.outputs.push(MANIFEST_FILE.to_string());
    if let Err(e) = fs::write(out_dir.join(MANIFEST_FILE), to_json(&manifest)) {
        eprintln!("error: cannot write manifest: {e}");
        return EXIT_USAGE.max(exit);
    }
    exit
}

// -------------------------------------------------------------- commands

/// `analysis.json`: the condition report plus the integrability
/// certificate for `Psi^{-2 lambda}` when a prediction exists.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Analysis {
    pub report: ConditionReport,
    pub integrability: Option<IntegrabilityReport>,
}

pub fn analysis_of(config: &Config) -> Result<Analysis> {
    let coeffs = config.coefficients()?;
    let report = structure_analysis::analyze_with(&coeffs, config.prediction.delta, config.prediction.mu_factor)?;
    let integrability = match &report.prediction {
        Some(p) => Some(structure_analysis::verify_integrability(
            &cubic_to_trig_poly(&coeffs),
            2.0 * p.lambda,
        )?),
        None => None,
    };
    Ok(Analysis { report, integrability })
}

pub fn cmd_analyze(config: &Config, out: &mut Outputs) -> Result<Outcome> {
    let analysis = analysis_of(config)?;
    out.write("analysis.json", to_json(&analysis))?;
    let mut checks = Vec::new();
    let agemi_ok = !matches!(analysis.report.agemi, Agemi::Fails { .. });
    checks.push(Check::new("agemi condition", agemi_ok, format!("{:?}", analysis.report.agemi)));
    if let Some(ir) = &analysis.integrability {
        checks.push(Check::new(
            "integral of Psi^(-2 lambda) finite",
            ir.finite,
            format!("gamma = {}, value = {:?}", ir.gamma, ir.value),
        ));
    }
    let all = checks.iter().all(|c| c.passed);
    Ok(Outcome {
        exit_code: if !agemi_ok || !all { EXIT_CONDITION } else { EXIT_OK },
        checks,
    })
}

fn ray_mu(config: &Config) -> f64 {
    config.ray.mu.unwrap_or_else(|| {
        analysis_of(config)
            .ok()
            .and_then(|a| a.report.prediction.map(|p| p.mu))
            .unwrap_or(0.05)
    })
}

/// Matsumura parameters for `Phi = P V^2` along an integrated ray:
/// `Phi' <= -Phi^2/t + 2 P max|V| |G|`, `|G| <= sup(|G| t^q) / t^q`.
pub fn profile_matsumura_params(p_val: f64, series: &ProfileSeries, ray: &RayConfig) -> Result<MatsumuraParams> {
    let q = 1.5 - 2.0 * ray.mu;
    let v_max = series.v.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let g_sup = series
        .times
        .iter()
        .zip(&series.g)
        .map(|(t, g)| g.abs() * t.powf(q))
        .fold(0.0f64, f64::max);
    MatsumuraParams::new(1.0, 2.0 * p_val * v_max * g_sup, 2.0, q, ray.t_start, p_val * ray.v0 * ray.v0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileSummary {
    pub p_omega: f64,
    pub t_start: f64,
    pub t_end: f64,
    pub mu: f64,
    pub samples: usize,
    pub v_final: f64,
    /// `sup |V| sqrt(P ln t)`; absent unless `P > 0`.
    pub sqrtlog_constant: Option<f64>,
    pub matsumura_c2: Option<f64>,
    /// `max Phi ln t / C_2`.
    pub matsumura_max_ratio: Option<f64>,
    /// Largest relative deviation from the closed form (unforced rays only).
    pub closed_form_error: Option<f64>,
    pub degenerate_direction: bool,
}

fn ray_config(config: &Config, theta: f64, mu: f64) -> Result<RayConfig> {
    let r = &config.ray;
    RayConfig::new(
        r.sigma,
        Direction::from_angle(theta),
        r.epsilon,
        mu,
        r.t_end,
        config.data.radius,
        r.v0,
    )
}

fn summarize_profile(p_val: f64, ray: &RayConfig, series: &ProfileSeries, forcing: &ForcingSpec) -> Result<ProfileSummary> {
    let degenerate = p_val.abs() < DEGENERATE_SYMBOL;
    let (c2, ratio) = if p_val > 0.0 && !degenerate {
        let params = profile_matsumura_params(p_val, series, ray)?;
        let c2 = ode_profile::matsumura_constant(&params)?;
        let phi = series.phi.as_ref().expect("phi present for P > 0");
        let ratio = series
            .times
            .iter()
            .zip(phi)
            .map(|(t, ph)| ph * t.ln() / c2)
            .fold(0.0f64, f64::max);
        (Some(c2), Some(ratio))
    } else {
        (None, None)
    };
    let closed_form_error = matches!(forcing, ForcingSpec::Zero).then(|| {
        series
            .times
            .iter()
            .zip(&series.v)
            .map(|(t, v)| {
                let exact = ode_profile::unforced_profile(p_val, ray.v0, ray.t_start, *t);
                if exact == 0.0 {
                    v.abs()
                } else {
                    ((v - exact) / exact).abs()
                }
            })
            .fold(0.0f64, f64::max)
    });
    Ok(ProfileSummary {
        p_omega: p_val,
        t_start: ray.t_start,
        t_end: ray.t_end,
        mu: ray.mu,
        samples: series.len(),
        v_final: *series.v.last().expect("nonempty series"),
        sqrtlog_constant: (p_val > 0.0 && !degenerate).then(|| check_sqrtlog_decay(series, p_val)).transpose()?,
        matsumura_c2: c2,
        matsumura_max_ratio: ratio,
        closed_form_error,
        degenerate_direction: degenerate,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleRow {
    pub theta: f64,
    pub p_omega: f64,
    pub status: &'static str,
    pub constant: Option<f64>,
    pub v_final: Option<f64>,
}

/// `count` directions `2 pi k / count`, integrated in parallel and reported
/// in direction order.
pub fn profile_ensemble(config: &Config, count: usize, mu: f64) -> Result<Vec<EnsembleRow>> {
    let coeffs = config.coefficients()?;
    (0..count)
        .into_par_iter()
        .map(|k| {
            let theta = std::f64::consts::TAU * k as f64 / count as f64;
            let p_val = eval_cubic_symbol(&coeffs, &Direction::from_angle(theta));
            if p_val.abs() < DEGENERATE_SYMBOL {
                return Ok(EnsembleRow { theta, p_omega: p_val, status: "degenerate direction", constant: None, v_final: None });
            }
            if p_val < 0.0 {
                return Ok(EnsembleRow { theta, p_omega: p_val, status: "negative symbol", constant: None, v_final: None });
            }
            let ray = ray_config(config, theta, mu)?;
            let series = integrate_profile_with(p_val, &ray, &config.ray.forcing, config.ray.per_decade)?;
            Ok(EnsembleRow {
                theta,
                p_omega: p_val,
                status: "ok",
                constant: Some(check_sqrtlog_decay(&series, p_val)?),
                v_final: series.v.last().copied(),
            })
        })
        .collect()
}

fn ensemble_csv(rows: &[EnsembleRow]) -> String {
    let mut out = String::from("k,theta,P,status,C,V_end\n");
    let opt = |v: Option<f64>| v.map(|x| format!("{x:.12e}")).unwrap_or_default();
    for (k, r) in rows.iter().enumerate() {
        let _ = writeln!(out, "{k},{:.12e},{:.12e},{},{},{}", r.theta, r.p_omega, r.status, opt(r.constant), opt(r.v_final));
    }
    out
}

pub fn cmd_profile(config: &Config, out: &mut Outputs) -> Result<Outcome> {
    let coeffs = config.coefficients()?;
    let mu = ray_mu(config);
    let ray = ray_config(config, config.ray.theta, mu)?;
    if config.ray.per_decade == 0 {
        return Err(Error::input("ray.per_decade must be positive"));
    }
    let p_val = eval_cubic_symbol(&coeffs, &ray.omega);
    let series = integrate_profile_with(p_val, &ray, &config.ray.forcing, config.ray.per_decade)?;
    let summary = summarize_profile(p_val, &ray, &series, &config.ray.forcing)?;
    let bound = summary.matsumura_c2.map(|c2| move |t: f64| c2 / t.ln());
    out.write("profile.csv", series.to_csv(bound.as_ref().map(|f| f as &dyn Fn(f64) -> f64)))?;
    out.write("profile_summary.json", to_json(&summary))?;

    let mut checks = vec![Check::new(
        "ray start bracketed by <sigma>",
        ray.start_is_bracketed(config.data.radius),
        format!("t_start = {}", ray.t_start),
    )];
    if let Some(r) = summary.matsumura_max_ratio {
        checks.push(Check::new(
            "Phi below C2 / ln t",
            r <= 1.0 + ode_profile::MATSUMURA_SLACK,
            format!("max ratio {r:.6e}"),
        ));
    }
    if let Some(e) = summary.closed_form_error {
        checks.push(Check::new("unforced closed form", e < 1e-8, format!("max relative error {e:.3e}")));
    }
    if summary.degenerate_direction {
        checks.push(Check::info("degenerate direction", "P(omega) = 0: no decay from the cubic term"));
    }
    if config.ray.ensemble > 0 {
        let rows = profile_ensemble(config, config.ray.ensemble, mu)?;
        let finite = rows.iter().filter_map(|r| r.constant).all(f64::is_finite);
        out.write("ensemble.csv", ensemble_csv(&rows))?;
        checks.push(Check::new(
            "ensemble constants finite",
            finite,
            format!("{} directions, {} degenerate", rows.len(), rows.iter().filter(|r| r.status == "degenerate direction").count()),
        ));
    }
    let exit_code = if checks.iter().all(|c| c.passed) { EXIT_OK } else { EXIT_CONDITION };
    Ok(Outcome { exit_code, checks })
}

fn diagnostics_csv(run: &wave_lab::RunOutput) -> String {
    let mut out = String::from("t,max_abs_u,outside_cone,pointwise_constant\n");
    for c in &run.checkpoints {
        let pc = c.pointwise_constant.map(|v| format!("{v:.12e}")).unwrap_or_default();
        let _ = writeln!(out, "{:.12e},{:.12e},{:.12e},{}", c.t, c.max_abs_u, c.outside_cone, pc);
    }
    out
}

fn ray_csv(times: &[f64], v: &[f64], h: Option<&[f64]>) -> String {
    let mut out = String::from("t,V,H\n");
    for (i, (t, vi)) in times.iter().zip(v).enumerate() {
        // residual is defined at interior samples only
        let hv = h
            .and_then(|h| (i >= 1 && i + 1 < times.len()).then(|| h[i - 1]))
            .map(|x| format!("{x:.12e}"))
            .unwrap_or_default();
        let _ = writeln!(out, "{t:.12e},{vi:.12e},{hv}");
    }
    out
}

/// True when `F` is a positive multiple of `-(d_t u)^3`.
fn is_pure_damping(coeffs: &NonlinearityCoefficients) -> bool {
    let sym = coeffs.symmetrized();
    let lead = sym.c[0][0][0];
    lead < 0.0
        && sym.b.iter().flatten().all(|v| *v == 0.0)
        && sym
            .c
            .iter()
            .flatten()
            .flatten()
            .enumerate()
            .all(|(k, v)| k == 0 || *v == 0.0)
}

pub fn cmd_simulate(config: &Config, out: &mut Outputs) -> Result<Outcome> {
    let cfg = config.solver()?;
    let data = &config.data;
    data.validate()?;
    let coeffs = &cfg.nonlinearity;
    let analysis = analysis_of(config).ok();
    let prediction = analysis.as_ref().and_then(|a| a.report.prediction.clone());
    let mu = config.ray.mu.or(prediction.as_ref().map(|p| p.mu));
    let probes: Vec<RayProbe> = config
        .grid
        .probes
        .iter()
        .map(|p| RayProbe { sigma: p.sigma, omega: Direction::from_angle(p.theta) })
        .collect();
    let opts = RunOptions {
        energy_every: config.grid.energy_every,
        checkpoint_every: config.grid.checkpoint_every,
        keep_snapshots: config.grid.write_checkpoints,
        probes: probes.clone(),
        pointwise_mu: mu,
    };
    let run = wave_lab::run(&cfg, data, &opts)?;

    let bound = prediction
        .as_ref()
        .map(|p| (wave_lab::fit_energy_bound(&run.energy, data.epsilon, p.lambda), data.epsilon, p.lambda));
    out.write("energy.csv", wave_lab::energy_csv(&run.energy, bound))?;
    out.write("diagnostics.csv", diagnostics_csv(&run))?;
    for (k, (probe, (times, v))) in probes.iter().zip(&run.probes).enumerate() {
        let h = if times.len() >= 3 && data.epsilon > 0.0 {
            let p_val = eval_cubic_symbol(coeffs, &probe.omega);
            let series = ProfileSeries::new(times.clone(), v.clone(), vec![0.0; times.len()], None)?;
            Some(wave_lab::residual_forcing(&series, p_val, data.epsilon, probe.sigma, mu.unwrap_or(0.05))?.h)
        } else {
            None
        };
        out.write(&format!("ray_{k}.csv"), ray_csv(times, v, h.as_deref()))?;
    }
    for (k, snap) in run.snapshots.iter().enumerate() {
        let stem = format!("checkpoint_{k:04}");
        let dir = out.dir().join("checkpoints");
        fs::create_dir_all(&dir).map_err(|e| Error::input(format!("{}: {e}", dir.display())))?;
        wave_lab::write_snapshot(&dir, &stem, snap, data.radius, data.epsilon)
            .map_err(|e| Error::input(format!("{}: {e}", dir.display())))?;
        out.record(&format!("checkpoints/{stem}.json"));
        out.record(&format!("checkpoints/{stem}.bin"));
    }

    let mut checks = Vec::new();
    let finite = run.energy.values.iter().all(|e| e.is_finite());
    checks.push(Check::new("energy finite", finite, format!("{} samples", run.energy.len())));
    if cfg.is_linear() && run.energy_initial > 0.0 {
        let drift = (run.energy_final - run.energy_initial).abs() / run.energy_initial;
        let limit = wave_lab::LINEAR_DRIFT_K * cfg.grid.h * cfg.grid.h;
        checks.push(Check::new("linear energy drift below K h^2", drift <= limit, format!("{drift:.3e} <= {limit:.3e}")));
    }
    if is_pure_damping(coeffs) {
        let inc = run.energy.max_increase();
        checks.push(Check::new("energy nonincreasing", inc <= 1e-6, format!("max step increase {inc:.3e}")));
    }
    checks.push(Check::info(
        "outside the t + R + 4h cone",
        format!("max |u| = {:.3e}", run.max_outside_cone()),
    ));
    if let Some(b) = bound {
        checks.push(Check::info("fitted energy constant", format!("C = {:.6e} at lambda = {}", b.0, b.2)));
    }
    let exit_code = if checks.iter().all(|c| c.passed) { EXIT_OK } else { EXIT_CONDITION };
    Ok(Outcome { exit_code, checks })
}

pub fn cmd_verify(suite: &str, out: &mut Outputs) -> Result<Outcome> {
    let checks = suites::run_suite(suite)?;
    let mut text = String::from("suite,check,passed,detail\n");
    for c in &checks {
        let _ = writeln!(text, "{suite},{},{},\"{}\"", c.name, c.passed, c.detail.replace('"', "'"));
    }
    out.write("verify.csv", text)?;
    for c in &checks {
        println!("[{}] {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    let exit_code = if checks.iter().all(|c| c.passed) { EXIT_OK } else { EXIT_CONDITION };
    Ok(Outcome { exit_code, checks })
}

/// `energy.svg`: `E(t)/E(0)` against `(1 + eps^2 log(t+2))^{-lambda}`.
pub fn cmd_report(config: &Config, energy_path: &Path, out: &mut Outputs) -> Result<Outcome> {
    let text = fs::read_to_string(energy_path).map_err(|e| Error::input(format!("{}: {e}", energy_path.display())))?;
    let mut times = Vec::new();
    let mut values = Vec::new();
    for (i, line) in text.lines().enumerate().skip(1) {
        let mut cols = line.split(',');
        let parse = |s: Option<&str>| -> Result<f64> {
            s.and_then(|v| v.parse().ok())
                .ok_or_else(|| Error::input(format!("{}:{}: bad energy row", energy_path.display(), i + 1)))
        };
        times.push(parse(cols.next())?);
        values.push(parse(cols.next())?);
    }
    if times.len() < 2 {
        return Err(Error::input("energy CSV needs at least two rows"));
    }
    let lambda = analysis_of(config).ok().and_then(|a| a.report.prediction.map(|p| p.lambda));
    let eps = config.data.epsilon;
    let e0 = values[0];
    let measured: Vec<(f64, f64)> = times
        .iter()
        .zip(&values)
        .map(|(t, e)| (*t, if e0 > 0.0 { e / e0 } else { 0.0 }))
        .collect();
    let predicted: Option<Vec<(f64, f64)>> = lambda.map(|l| {
        times
            .iter()
            .map(|t| (*t, (1.0 + eps * eps * (t + 2.0).ln()).powf(-l)))
            .collect()
    });
    let title = match lambda {
        Some(l) => format!("energy ratio vs (1 + eps^2 log(t+2))^-{l:.4}"),
        None => "energy ratio".to_string(),
    };
    out.write("energy.svg", svg::line_plot(&title, &measured, predicted.as_deref()))?;
    Ok(Outcome { exit_code: EXIT_OK, checks: Vec::new() })
}

// ------------------------------------------------------------------ clap

#[derive(Debug, Parser)]
#[command(name = "decaylab", version, about = "Decay analysis for 2D cubic wave equations")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct ConfigArgs {
    /// JSON config file.
    pub config: PathBuf,
    /// Output directory.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Override a config value, e.g. `--set grid.h=0.05`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Null conditions, Agemi condition, zero orders and predicted rate.
    Analyze(ConfigArgs),
    /// Integrate the profile ODE along the configured ray.
    Profile(ConfigArgs),
    /// Run the finite-difference solver.
    Simulate(ConfigArgs),
    /// Run invariant suites: algebra, structure, ode, pde-smoke or all.
    Verify {
        suite: String,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Plot a simulated energy series against the predicted rate.
    Report {
        #[command(flatten)]
        args: ConfigArgs,
        /// Energy CSV; defaults to `<out>/energy.csv`.
        #[arg(long)]
        energy: Option<PathBuf>,
    },
}

fn config_command(
    name: &str,
    args: &ConfigArgs,
    f: impl FnOnce(&Config, &mut Outputs) -> Result<Outcome>,
) -> i32 {
    let loaded = Config::load(&args.config, &args.overrides);
    let echo = match &loaded {
        Ok(c) => serde_json::to_value(c).expect("config serializes"),
        Err(_) => serde_json::json!({ "path": args.config, "overrides": args.overrides }),
    };
    with_manifest(name, echo, &args.out, |out| f(&loaded?, out))
}

pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
        }
    };
    match &cli.command {
        Command::Analyze(a) => config_command("analyze", a, cmd_analyze),
        Command::Profile(a) => config_command("profile", a, cmd_profile),
        Command::Simulate(a) => config_command("simulate", a, cmd_simulate),
        Command::Verify { suite, out } => {
            with_manifest("verify", serde_json::json!({ "suite": suite }), out, |o| cmd_verify(suite, o))
        }
        Command::Report { args, energy } => {
            let energy = energy.clone().unwrap_or_else(|| args.out.join("energy.csv"));
            config_command("report", args, |c, o| cmd_report(c, &energy, o))
        }
    }
}
