//! Scenario files.
//!
//! A scenario is one JSON document. Every dimensional key carries its unit
//! in the name (`_over_2pi_hz`, `_hz`, `_m`, `_k`, ...). Frequencies are
//! converted to rad/s here and nowhere else.

use std::fs;
use std::path::{Path, PathBuf};

use rydlat_core::blockade::LinkConvention;
use rydlat_core::lattice::{Dimensionality, StandingWave};
use rydlat_core::params::{DEFAULT_REGIME_THRESHOLD, DEFAULT_V_MAX_FACTOR};
use rydlat_core::units::{hz_to_angular, SR88_MASS, SR_GAMMA_P_OVER_2PI_HZ};
use rydlat_core::{DressingParams, Error as ModelError};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::ConfigError;

pub const DEFAULT_OUTPUT_DIR: &str = "out";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub params: ParamsFile,
    /// 1 or 3.
    #[serde(default = "default_dimensionality")]
    pub dimensionality: u8,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<String>,
    #[serde(default)]
    pub potential_scan: PotentialScanFile,
    #[serde(default)]
    pub lorentzian_fit: LorentzianFitFile,
    #[serde(default)]
    pub spectrum: SpectrumFile,
    #[serde(default)]
    pub ground_state: GroundStateFile,
    #[serde(default)]
    pub loss_budget: LossBudgetFile,
    #[serde(default)]
    pub bbr: BbrFile,
    #[serde(default)]
    pub blockade: BlockadeFile,
    #[serde(default)]
    pub resonance_map: ResonanceMapFile,
}

fn default_dimensionality() -> u8 {
    1
}

/// Where the configured C₆ came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum C6Source {
    #[default]
    User,
    /// Stand-in value shipped with an example; not a computed coefficient.
    Placeholder,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsFile {
    pub omega1_over_2pi_hz: f64,
    pub omega2c_over_2pi_hz: f64,
    pub omega2sw_over_2pi_hz: f64,
    pub delta_over_2pi_hz: f64,
    #[serde(default = "default_gamma_p")]
    pub gamma_p_over_2pi_hz: f64,
    pub gamma_e_over_2pi_hz: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c6_over_2pi_hz_m6: Option<f64>,
    #[serde(default)]
    pub c6_source: C6Source,
    #[serde(default = "default_wavelength")]
    pub wavelength_m: f64,
    #[serde(default = "default_theta")]
    pub theta_rad: f64,
    #[serde(default = "default_mass")]
    pub mass_kg: f64,
    #[serde(default = "default_v_max_factor")]
    pub v_max_factor: f64,
    #[serde(default = "default_regime_threshold")]
    pub regime_threshold: f64,
}

fn default_gamma_p() -> f64 {
    SR_GAMMA_P_OVER_2PI_HZ
}
fn default_wavelength() -> f64 {
    318e-9
}
fn default_theta() -> f64 {
    std::f64::consts::PI
}
fn default_mass() -> f64 {
    SR88_MASS
}
fn default_v_max_factor() -> f64 {
    DEFAULT_V_MAX_FACTOR
}
fn default_regime_threshold() -> f64 {
    DEFAULT_REGIME_THRESHOLD
}

/// Profiles with atom 1 on node 0 and atom 2 on or near node `site`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PotentialScanFile {
    /// Ω₂(x₂) range in units of |Δ|.
    pub omega2_min_over_delta: f64,
    pub omega2_max_over_delta: f64,
    pub points: usize,
    pub site: i64,
    pub position_points: usize,
    pub position_halfwidth_in_w: f64,
    /// Recalibrates Ω₁ so the loss at the node pair equals this rate.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub calibrate_loss_hz: Option<f64>,
}

impl Default for PotentialScanFile {
    fn default() -> Self {
        Self {
            omega2_min_over_delta: 1.2,
            omega2_max_over_delta: 3.0,
            points: 500,
            site: 1,
            position_points: 401,
            position_halfwidth_in_w: 6.0,
            calibrate_loss_hz: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LorentzianFitFile {
    pub omega2sw_over_2pi_hz: Vec<f64>,
    pub points: usize,
    pub halfwidth_in_w: f64,
    pub site: i64,
}

impl Default for LorentzianFitFile {
    fn default() -> Self {
        Self { omega2sw_over_2pi_hz: vec![1.7e6, 2.5e6, 4e6, 6e6, 10e6], points: 41, halfwidth_in_w: 3.0, site: 1 }
    }
}

/// Ω₂(x₂) sweep of the double-excitation block at fixed Ω₂(x₁).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectrumFile {
    /// Defaults to Ω₂c.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub omega2_x1_over_2pi_hz: Option<f64>,
    pub omega2_min_over_delta: f64,
    pub omega2_max_over_delta: f64,
    pub points: usize,
}

impl Default for SpectrumFile {
    fn default() -> Self {
        Self { omega2_x1_over_2pi_hz: None, omega2_min_over_delta: 0.0, omega2_max_over_delta: 4.0, points: 401 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SurfaceSource {
    /// Closed-form interaction.
    #[default]
    Analytic,
    /// Steady-state interaction at every grid point.
    Numeric,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GroundStateFile {
    pub grid_points: usize,
    pub window_in_w: f64,
    pub site: i64,
    pub surface: SurfaceSource,
    /// Defaults to a quarter of the kinetic stability bound, capped at 0.1/max|U|.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt_s: Option<f64>,
    pub tol_over_2pi_hz: f64,
    pub max_iters: usize,
    pub nonlinearity_over_2pi_hz_m2: f64,
    pub mode_half_window_in_w: f64,
}

impl Default for GroundStateFile {
    fn default() -> Self {
        Self {
            grid_points: 128,
            window_in_w: 4.0,
            site: 1,
            surface: SurfaceSource::Analytic,
            dt_s: None,
            tol_over_2pi_hz: 1e-3,
            max_iters: 200_000,
            nonlinearity_over_2pi_hz_m2: 0.0,
            mode_half_window_in_w: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LossBudgetFile {
    pub omega2c_over_2pi_hz: Vec<f64>,
    pub target_loss_hz: f64,
}

impl Default for LossBudgetFile {
    fn default() -> Self {
        Self { omega2c_over_2pi_hz: vec![2e6, 5e6, 10e6, 20e6, 50e6], target_loss_hz: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BbrFile {
    pub temperatures_k: Vec<f64>,
    /// Collective Rydberg population; exclusive with `n_sites`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_r: Option<f64>,
    /// Number of dressed atoms, giving Pᵣ = N Ω₁²/Ω₂c².
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_sites: Option<u64>,
    pub survival_threshold: f64,
}

impl Default for BbrFile {
    fn default() -> Self {
        Self {
            temperatures_k: vec![300.0, 77.0, 3.0],
            p_r: None,
            n_sites: None,
            survival_threshold: rydlat_core::decoherence::DEFAULT_SURVIVAL_THRESHOLD,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthFile {
    pub n_states: usize,
    pub detuning_scale_over_2pi_hz: f64,
    pub coupling_scale_over_2pi_hz_m3: f64,
    pub sparsity: f64,
}

impl Default for SynthFile {
    fn default() -> Self {
        Self {
            n_states: 3800,
            detuning_scale_over_2pi_hz: 5e9,
            coupling_scale_over_2pi_hz_m3: 2e-8,
            sparsity: 0.99,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinkFile {
    #[default]
    AsPrinted,
    Collective,
}

impl From<LinkFile> for LinkConvention {
    fn from(l: LinkFile) -> Self {
        match l {
            LinkFile::AsPrinted => LinkConvention::AsPrinted,
            LinkFile::Collective => LinkConvention::Collective,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BlockadeFile {
    /// Manifold CSV, relative to the scenario file. A synthetic manifold
    /// is generated from `synth` and `seed` when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub manifold_path: Option<String>,
    pub synth: SynthFile,
    pub save_manifold: bool,
    /// Explicit distances; otherwise `points` log-spaced in [r_min_m, r_max_m].
    #[serde(skip_serializing_if = "Option::is_none")]
    pub distances_m: Option<Vec<f64>>,
    pub r_min_m: f64,
    pub r_max_m: f64,
    pub points: usize,
    /// Defaults to Ω₁Ω₂c/(2|Δ|).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub omega_t_over_2pi_hz: Option<f64>,
    pub link: LinkFile,
    pub periods: f64,
    pub samples_per_period: usize,
    pub lanczos_factor: f64,
}

impl Default for BlockadeFile {
    fn default() -> Self {
        Self {
            manifold_path: None,
            synth: SynthFile::default(),
            save_manifold: false,
            distances_m: None,
            r_min_m: 1.59e-7,
            r_max_m: 1e-4,
            points: 30,
            omega_t_over_2pi_hz: None,
            link: LinkFile::AsPrinted,
            periods: 10.0,
            samples_per_period: 64,
            lanczos_factor: 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ResonanceMapFile {
    /// Uniform points across one period.
    pub points_per_period: usize,
    /// Local refinement factor near the node.
    pub oversample: usize,
    pub halfwidth_in_w: f64,
    pub site: i64,
    /// Displacement direction for the 3D map.
    pub direction: [f64; 3],
}

impl Default for ResonanceMapFile {
    fn default() -> Self {
        Self { points_per_period: 512, oversample: 8, halfwidth_in_w: 4.0, site: 1, direction: [1.0, 1.0, 1.0] }
    }
}

/// Lorentzian-fit task in internal units.
#[derive(Debug, Clone, PartialEq)]
pub struct LorentzianTask {
    pub omega2sw: Vec<f64>,
    pub points: usize,
    pub halfwidth_in_w: f64,
    pub site: i64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundStateTask {
    pub grid_points: usize,
    pub window_in_w: f64,
    pub site: i64,
    pub surface: SurfaceSource,
    pub dt: Option<f64>,
    pub tol: f64,
    pub max_iters: usize,
    pub g_nl: f64,
    pub mode_half_window_in_w: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossBudgetTask {
    pub omega2c: Vec<f64>,
    pub target_loss: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumTask {
    pub omega2_x1: f64,
    pub omega2_x2: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockadeTask {
    pub manifold_path: Option<PathBuf>,
    pub n_states: usize,
    pub detuning_scale: f64,
    pub coupling_scale: f64,
    pub sparsity: f64,
    pub save_manifold: bool,
    pub distances: Vec<f64>,
    pub omega_t: f64,
    pub link: LinkConvention,
    pub periods: f64,
    pub samples_per_period: usize,
    pub lanczos_factor: f64,
}

/// The file a scenario was read from, for provenance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceFile {
    pub path: PathBuf,
    pub sha256: String,
}

/// A validated scenario in internal (rad/s) units.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub source: Option<SourceFile>,
    /// Snapshot in file units, with defaults filled in.
    pub file: ScenarioFile,
    pub params: DressingParams,
    pub standing_wave: StandingWave,
    pub c6_source: C6Source,
    pub seed: u64,
    pub output_dir: PathBuf,
    pub potential_scan: PotentialScanFile,
    pub lorentzian_fit: LorentzianTask,
    pub spectrum: SpectrumTask,
    pub ground_state: GroundStateTask,
    pub loss_budget: LossBudgetTask,
    pub bbr: BbrFile,
    pub blockade: BlockadeTask,
    pub resonance_map: ResonanceMapFile,
}

const UNIT_SUFFIXES: [&str; 9] = ["_over_2pi_hz", "_hz", "_m", "_m2", "_m3", "_m6", "_k", "_s", "_kg"];

fn has_unit_suffix(key: &str) -> bool {
    UNIT_SUFFIXES.iter().any(|s| key.ends_with(s)) || key.ends_with("_rad")
}

/// Rejects unit-suffixed keys holding strings or objects, such as `"10 MHz"`.
fn check_units(v: &Value, path: &str) -> Result<(), ConfigError> {
    let Value::Object(map) = v else { return Ok(()) };
    for (k, child) in map {
        let here = if path.is_empty() { k.clone() } else { format!("{path}.{k}") };
        if has_unit_suffix(k) {
            let plain = |x: &Value| x.is_number() || x.is_null();
            let ok = match child {
                Value::Array(xs) => xs.iter().all(plain),
                x => plain(x),
            };
            if !ok {
                return Err(ConfigError::Unit {
                    field: here,
                    reason: format!("expected a plain number in the unit named by the key, got {child}"),
                });
            }
        } else {
            check_units(child, &here)?;
        }
    }
    Ok(())
}

/// Parses `key=value`; the value is read as JSON when possible, else as a string.
pub fn parse_override(s: &str) -> Result<(String, Value), ConfigError> {
    let (k, v) = s.split_once('=').ok_or_else(|| ConfigError::Override(s.to_string()))?;
    let k = k.trim();
    if k.is_empty() || k.split('.').any(str::is_empty) {
        return Err(ConfigError::Override(s.to_string()));
    }
    let v = v.trim();
    let value = serde_json::from_str(v).unwrap_or_else(|_| Value::String(v.to_string()));
    Ok((k.to_string(), value))
}

/// Sets a dotted path inside `doc`, creating intermediate objects.
pub fn apply_override(doc: &mut Value, key: &str, value: Value) -> Result<(), ConfigError> {
    let mut cur = doc;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let Value::Object(map) = cur else {
            return Err(ConfigError::schema(parts[..i].join("."), "is not an object"));
        };
        if i + 1 == parts.len() {
            map.insert(part.to_string(), value);
            return Ok(());
        }
        cur = map.entry(part.to_string()).or_insert_with(|| Value::Object(Default::default()));
    }
    Ok(())
}

/// Maps a parameter name reported by the model to its scenario key.
fn params_key(field: &str) -> String {
    let key = match field {
        "wavelength" => "wavelength_m",
        "theta" => "theta_rad",
        "mass" => "mass_kg",
        "c6" => "c6_over_2pi_hz_m6",
        "v_max_factor" | "regime_threshold" => field,
        other => return format!("params.{other}_over_2pi_hz"),
    };
    format!("params.{key}")
}

impl ParamsFile {
    pub fn to_params(&self) -> DressingParams {
        DressingParams {
            omega1: hz_to_angular(self.omega1_over_2pi_hz),
            omega2c: hz_to_angular(self.omega2c_over_2pi_hz),
            omega2sw: hz_to_angular(self.omega2sw_over_2pi_hz),
            delta: hz_to_angular(self.delta_over_2pi_hz),
            gamma_p: hz_to_angular(self.gamma_p_over_2pi_hz),
            gamma_e: hz_to_angular(self.gamma_e_over_2pi_hz),
            c6: self.c6_over_2pi_hz_m6.map(hz_to_angular),
            wavelength: self.wavelength_m,
            theta: self.theta_rad,
            mass: self.mass_kg,
            v_max_factor: self.v_max_factor,
            regime_threshold: self.regime_threshold,
        }
    }
}

fn positive(field: &str, x: f64) -> Result<(), ConfigError> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        Err(ConfigError::schema(field, format!("must be finite and > 0, got {x}")))
    }
}

fn at_least(field: &str, n: usize, min: usize) -> Result<(), ConfigError> {
    if n >= min {
        Ok(())
    } else {
        Err(ConfigError::schema(field, format!("must be at least {min}, got {n}")))
    }
}

fn ordered_range(prefix: &str, lo: f64, hi: f64) -> Result<(), ConfigError> {
    if lo.is_finite() && hi.is_finite() && lo >= 0.0 && lo < hi {
        Ok(())
    } else {
        Err(ConfigError::schema(prefix, format!("needs 0 <= min < max, got [{lo}, {hi}]")))
    }
}

/// Log-spaced points from `lo` to `hi` inclusive.
pub fn geomspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n).map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp()).collect()
}

impl Scenario {
    /// Validates a parsed document. `base_dir` resolves relative paths.
    pub fn from_value(doc: Value, base_dir: &Path) -> Result<Self, ConfigError> {
        check_units(&doc, "")?;
        let file: ScenarioFile = serde_path_to_error::deserialize(doc).map_err(|e| {
            let field = e.path().to_string();
            ConfigError::schema(field, e.into_inner().to_string())
        })?;
        Self::from_file(file, base_dir)
    }

    pub fn from_file(file: ScenarioFile, base_dir: &Path) -> Result<Self, ConfigError> {
        let params = file.params.to_params();
        params.validate().map_err(|e| match e {
            ModelError::InvalidParameter { field, reason } => ConfigError::schema(params_key(field), reason),
            other => ConfigError::schema("params", other.to_string()),
        })?;
        if file.params.c6_source == C6Source::Placeholder && file.params.c6_over_2pi_hz_m6.is_none() {
            return Err(ConfigError::schema("params.c6_source", "placeholder flag set without a C6 value"));
        }
        let dims = Dimensionality::from_count(file.dimensionality)
            .ok_or_else(|| ConfigError::schema("dimensionality", format!("must be 1 or 3, got {}", file.dimensionality)))?;
        let standing_wave = params.standing_wave(dims);
        let delta = params.delta.abs();

        let ps = &file.potential_scan;
        ordered_range("potential_scan.omega2_*_over_delta", ps.omega2_min_over_delta, ps.omega2_max_over_delta)?;
        at_least("potential_scan.points", ps.points, 2)?;
        at_least("potential_scan.position_points", ps.position_points, 2)?;
        positive("potential_scan.position_halfwidth_in_w", ps.position_halfwidth_in_w)?;
        if let Some(l) = ps.calibrate_loss_hz {
            positive("potential_scan.calibrate_loss_hz", l)?;
        }

        let lf = &file.lorentzian_fit;
        if lf.omega2sw_over_2pi_hz.is_empty() {
            return Err(ConfigError::schema("lorentzian_fit.omega2sw_over_2pi_hz", "must not be empty"));
        }
        for &o in &lf.omega2sw_over_2pi_hz {
            positive("lorentzian_fit.omega2sw_over_2pi_hz", o)?;
        }
        at_least("lorentzian_fit.points", lf.points, rydlat_core::lattice::MIN_FIT_SAMPLES)?;
        positive("lorentzian_fit.halfwidth_in_w", lf.halfwidth_in_w)?;
        let lorentzian_fit = LorentzianTask {
            omega2sw: lf.omega2sw_over_2pi_hz.iter().map(|&o| hz_to_angular(o)).collect(),
            points: lf.points,
            halfwidth_in_w: lf.halfwidth_in_w,
            site: lf.site,
        };

        let sp = &file.spectrum;
        ordered_range("spectrum.omega2_*_over_delta", sp.omega2_min_over_delta, sp.omega2_max_over_delta)?;
        at_least("spectrum.points", sp.points, 2)?;
        if let Some(o) = sp.omega2_x1_over_2pi_hz {
            positive("spectrum.omega2_x1_over_2pi_hz", o)?;
        }
        let spectrum = SpectrumTask {
            omega2_x1: sp.omega2_x1_over_2pi_hz.map(hz_to_angular).unwrap_or(params.omega2c),
            omega2_x2: rydlat_core::math::linspace(
                sp.omega2_min_over_delta * delta,
                sp.omega2_max_over_delta * delta,
                sp.points,
            ),
        };

        let gs = &file.ground_state;
        at_least("ground_state.grid_points", gs.grid_points, 8)?;
        positive("ground_state.window_in_w", gs.window_in_w)?;
        positive("ground_state.tol_over_2pi_hz", gs.tol_over_2pi_hz)?;
        positive("ground_state.mode_half_window_in_w", gs.mode_half_window_in_w)?;
        at_least("ground_state.max_iters", gs.max_iters, 1)?;
        if let Some(dt) = gs.dt_s {
            positive("ground_state.dt_s", dt)?;
        }
        if !gs.nonlinearity_over_2pi_hz_m2.is_finite() {
            return Err(ConfigError::schema("ground_state.nonlinearity_over_2pi_hz_m2", "must be finite"));
        }
        let ground_state = GroundStateTask {
            grid_points: gs.grid_points,
            window_in_w: gs.window_in_w,
            site: gs.site,
            surface: gs.surface,
            dt: gs.dt_s,
            tol: hz_to_angular(gs.tol_over_2pi_hz),
            max_iters: gs.max_iters,
            g_nl: hz_to_angular(gs.nonlinearity_over_2pi_hz_m2),
            mode_half_window_in_w: gs.mode_half_window_in_w,
        };

        let lb = &file.loss_budget;
        if lb.omega2c_over_2pi_hz.is_empty() {
            return Err(ConfigError::schema("loss_budget.omega2c_over_2pi_hz", "must not be empty"));
        }
        for &o in &lb.omega2c_over_2pi_hz {
            positive("loss_budget.omega2c_over_2pi_hz", o)?;
        }
        positive("loss_budget.target_loss_hz", lb.target_loss_hz)?;
        let loss_budget = LossBudgetTask {
            omega2c: lb.omega2c_over_2pi_hz.iter().map(|&o| hz_to_angular(o)).collect(),
            target_loss: lb.target_loss_hz,
        };

        let bbr = &file.bbr;
        if bbr.p_r.is_some() && bbr.n_sites.is_some() {
            return Err(ConfigError::schema("bbr", "set at most one of p_r and n_sites"));
        }
        if let Some(p) = bbr.p_r {
            positive("bbr.p_r", p)?;
        }
        if bbr.n_sites == Some(0) {
            return Err(ConfigError::schema("bbr.n_sites", "must be at least 1"));
        }
        if !(bbr.survival_threshold > 0.0 && bbr.survival_threshold < 1.0) {
            return Err(ConfigError::schema("bbr.survival_threshold", "must lie in (0, 1)"));
        }

        let bl = &file.blockade;
        at_least("blockade.synth.n_states", bl.synth.n_states, 1)?;
        positive("blockade.synth.detuning_scale_over_2pi_hz", bl.synth.detuning_scale_over_2pi_hz)?;
        positive("blockade.synth.coupling_scale_over_2pi_hz_m3", bl.synth.coupling_scale_over_2pi_hz_m3)?;
        if !(0.0..1.0).contains(&bl.synth.sparsity) {
            return Err(ConfigError::schema("blockade.synth.sparsity", "must lie in [0, 1)"));
        }
        let distances = match &bl.distances_m {
            Some(d) => {
                if d.is_empty() {
                    return Err(ConfigError::schema("blockade.distances_m", "must not be empty"));
                }
                for &r in d {
                    positive("blockade.distances_m", r)?;
                }
                d.clone()
            }
            None => {
                positive("blockade.r_min_m", bl.r_min_m)?;
                ordered_range("blockade.r_*_m", bl.r_min_m, bl.r_max_m)?;
                at_least("blockade.points", bl.points, 1)?;
                geomspace(bl.r_min_m, bl.r_max_m, bl.points)
            }
        };
        positive("blockade.periods", bl.periods)?;
        at_least("blockade.samples_per_period", bl.samples_per_period, 1)?;
        positive("blockade.lanczos_factor", bl.lanczos_factor)?;
        let omega_t = match bl.omega_t_over_2pi_hz {
            Some(o) => {
                positive("blockade.omega_t_over_2pi_hz", o)?;
                hz_to_angular(o)
            }
            None => params.two_photon_rabi(),
        };
        let blockade = BlockadeTask {
            manifold_path: bl.manifold_path.as_ref().map(|p| base_dir.join(p)),
            n_states: bl.synth.n_states,
            detuning_scale: hz_to_angular(bl.synth.detuning_scale_over_2pi_hz),
            coupling_scale: hz_to_angular(bl.synth.coupling_scale_over_2pi_hz_m3),
            sparsity: bl.synth.sparsity,
            save_manifold: bl.save_manifold,
            distances,
            omega_t,
            link: bl.link.into(),
            periods: bl.periods,
            samples_per_period: bl.samples_per_period,
            lanczos_factor: bl.lanczos_factor,
        };

        let rm = &file.resonance_map;
        at_least("resonance_map.points_per_period", rm.points_per_period, 2)?;
        at_least("resonance_map.oversample", rm.oversample, 1)?;
        if !(rm.halfwidth_in_w >= 0.0) {
            return Err(ConfigError::schema("resonance_map.halfwidth_in_w", "must be >= 0"));
        }
        if !rm.direction.iter().all(|c| c.is_finite()) || rm.direction.iter().all(|&c| c == 0.0) {
            return Err(ConfigError::schema("resonance_map.direction", "must be a finite nonzero vector"));
        }

        let output_dir = base_dir.join(file.output_dir.as_deref().unwrap_or(DEFAULT_OUTPUT_DIR));
        Ok(Scenario {
            source: None,
            params,
            standing_wave,
            c6_source: file.params.c6_source,
            seed: file.seed,
            output_dir,
            potential_scan: file.potential_scan.clone(),
            lorentzian_fit,
            spectrum,
            ground_state,
            loss_budget,
            bbr: file.bbr.clone(),
            blockade,
            resonance_map: file.resonance_map.clone(),
            file,
        })
    }

    /// The scenario as a JSON value in file units, defaults included.
    pub fn snapshot(&self) -> Value {
        serde_json::to_value(&self.file).expect("scenario serializes")
    }
}

/// Parses scenario text with `key=value` overrides applied before validation.
pub fn parse_config_str(text: &str, overrides: &[(String, Value)], base_dir: &Path) -> Result<Scenario, ConfigError> {
    let mut doc: Value = serde_json::from_str(text).map_err(|e| ConfigError::schema("<document>", e.to_string()))?;
    for (k, v) in overrides {
        apply_override(&mut doc, k, v.clone())?;
    }
    Scenario::from_value(doc, base_dir)
}

/// Reads and validates a scenario file. Relative paths inside it resolve
/// against the file's directory.
pub fn parse_config(path: &Path, overrides: &[(String, Value)]) -> Result<Scenario, ConfigError> {
    let bytes = fs::read(path).map_err(|source| ConfigError::Read { path: path.to_path_buf(), source })?;
    let text = String::from_utf8(bytes).map_err(|e| ConfigError::schema("<document>", e.to_string()))?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    let mut s = parse_config_str(&text, overrides, &base)?;
    s.source = Some(SourceFile { path: path.to_path_buf(), sha256: crate::emit::sha256_hex(text.as_bytes()) });
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn minimal() -> Value {
        json!({
            "params": {
                "omega1_over_2pi_hz": 2e4,
                "omega2c_over_2pi_hz": 1e7,
                "omega2sw_over_2pi_hz": 2.5e6,
                "delta_over_2pi_hz": 5e6,
                "gamma_e_over_2pi_hz": 10.0
            }
        })
    }

    #[test]
    fn minimal_gets_defaults() {
        let s = Scenario::from_value(minimal(), Path::new("")).unwrap();
        assert_eq!(s.params.mass, SR88_MASS);
        assert_eq!(s.params.gamma_p, hz_to_angular(SR_GAMMA_P_OVER_2PI_HZ));
        assert_eq!(s.params.c6, None);
        assert_eq!(s.potential_scan.points, 500);
        assert_eq!(s.bbr.survival_threshold, 0.82);
        assert_eq!(s.blockade.distances.len(), 30);
        assert_eq!(s.spectrum.omega2_x1, s.params.omega2c);
        assert_eq!(s.output_dir, PathBuf::from(DEFAULT_OUTPUT_DIR));
    }

    #[test]
    fn negative_gamma_p_is_schema_error() {
        let mut v = minimal();
        v["params"]["gamma_p_over_2pi_hz"] = json!(-1.0);
        match Scenario::from_value(v, Path::new("")) {
            Err(ConfigError::Schema { field, .. }) => assert_eq!(field, "params.gamma_p_over_2pi_hz"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn gamma_e_is_required() {
        let mut v = minimal();
        v["params"].as_object_mut().unwrap().remove("gamma_e_over_2pi_hz");
        let e = Scenario::from_value(v, Path::new("")).unwrap_err();
        assert!(matches!(e, ConfigError::Schema { ref reason, .. } if reason.contains("gamma_e")), "{e}");
    }

    #[test]
    fn unknown_key_rejected_with_path() {
        let mut v = minimal();
        v["bbr"] = json!({ "temperature": 300 });
        match Scenario::from_value(v, Path::new("")) {
            Err(ConfigError::Schema { field, reason }) => {
                assert_eq!(field, "bbr.temperature");
                assert!(reason.contains("unknown field"), "{reason}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn string_with_unit_is_unit_error() {
        let mut v = minimal();
        v["params"]["delta_over_2pi_hz"] = json!("5 MHz");
        assert!(matches!(
            Scenario::from_value(v, Path::new("")),
            Err(ConfigError::Unit { field, .. }) if field == "params.delta_over_2pi_hz"
        ));
    }

    #[test]
    fn overrides_use_dotted_paths() {
        let text = minimal().to_string();
        let ov = vec![
            parse_override("params.omega1_over_2pi_hz=3e4").unwrap(),
            parse_override("blockade.link=collective").unwrap(),
            parse_override("bbr.p_r=2").unwrap(),
        ];
        let s = parse_config_str(&text, &ov, Path::new("")).unwrap();
        assert_eq!(s.params.omega1, hz_to_angular(3e4));
        assert_eq!(s.blockade.link, LinkConvention::Collective);
        assert_eq!(s.bbr.p_r, Some(2.0));
        assert!(parse_override("novalue").is_err());
        assert!(parse_override("a..b=1").is_err());
    }

    #[test]
    fn placeholder_flag_needs_value() {
        let mut v = minimal();
        v["params"]["c6_source"] = json!("placeholder");
        assert!(Scenario::from_value(v, Path::new("")).is_err());
    }

    #[test]
    fn geomspace_endpoints() {
        let g = geomspace(1e-7, 1e-3, 5);
        assert_eq!(g.len(), 5);
        assert!((g[0] - 1e-7).abs() < 1e-20 && (g[4] / 1e-3 - 1.0).abs() < 1e-12);
        assert!((g[2] / 1e-5 - 1.0).abs() < 1e-12);
    }
}
