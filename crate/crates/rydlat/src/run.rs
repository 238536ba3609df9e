//! One function per subcommand. Each writes its tables through an [`Emitter`]
//! and finishes with a manifest.

use std::fs;
use std::path::PathBuf;

use rayon::prelude::*;
use rydlat_core::blockade::{self, PairManifold, ScanOptions};
use rydlat_core::decoherence::{bbr_budget, bbr_budget_from_population, calibration_scan};
use rydlat_core::lattice::{
    analytic_surface, fit_lorentzian, lorentzian_params, lorentzian_profile, potential_analytic,
    potential_numeric, potential_numeric_at, resonance_surface, resonance_surface_3d, Dimensionality,
    NumericPotential, PotentialSurface, StandingWave,
};
use rydlat_core::math::{linspace, slope};
use rydlat_core::motional::{density_marginals, displacement_correlation, ground_state, mode_analysis, GroundStateOptions};
use rydlat_core::spectrum::{s3_asymptotic, s3_spectrum};
use rydlat_core::units::{angular_to_hz, HBAR};
use rydlat_core::{decoherence, DressingParams};
use nalgebra::DMatrix;
use serde_json::json;

use crate::config::{C6Source, Scenario, SurfaceSource};
use crate::emit::Emitter;
use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    PotentialScan,
    LorentzianFit,
    Spectrum,
    GroundState,
    LossBudget,
    Bbr,
    Blockade,
    ResonanceMap,
}

impl Command {
    pub const ALL: [Command; 8] = [
        Command::PotentialScan,
        Command::LorentzianFit,
        Command::Spectrum,
        Command::GroundState,
        Command::LossBudget,
        Command::Bbr,
        Command::Blockade,
        Command::ResonanceMap,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::PotentialScan => "potential-scan",
            Command::LorentzianFit => "lorentzian-fit",
            Command::Spectrum => "spectrum",
            Command::GroundState => "ground-state",
            Command::LossBudget => "loss-budget",
            Command::Bbr => "bbr",
            Command::Blockade => "blockade",
            Command::ResonanceMap => "resonance-map",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.name() == s)
    }
}

/// Runs `cmd` and returns the manifest path. `threads` sizes the worker
/// pool; output is identical for any value.
pub fn run(cmd: Command, scenario: &Scenario, threads: Option<usize>) -> CliResult<PathBuf> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().expect("thread pool");
    pool.install(|| dispatch(cmd, scenario))
}

fn dispatch(cmd: Command, s: &Scenario) -> CliResult<PathBuf> {
    if s.c6_source == C6Source::Placeholder {
        log::warn!("C6 is a placeholder; distance-dependent results are illustrative only");
    }
    let mut out = Emitter::create(&s.output_dir, cmd.name(), s.snapshot(), s.seed)?;
    if let Some(src) = &s.source {
        out.record_input("scenario", &src.path.display().to_string(), src.sha256.clone());
    }
    match cmd {
        Command::PotentialScan => potential_scan(s, &mut out)?,
        Command::LorentzianFit => lorentzian_fit(s, &mut out)?,
        Command::Spectrum => spectrum(s, &mut out)?,
        Command::GroundState => ground_state_cmd(s, &mut out)?,
        Command::LossBudget => loss_budget(s, &mut out)?,
        Command::Bbr => bbr(s, &mut out)?,
        Command::Blockade => blockade_cmd(s, &mut out)?,
        Command::ResonanceMap => resonance_map(s, &mut out)?,
    }
    out.finish()
}

fn hz(x: f64) -> f64 {
    angular_to_hz(x)
}

/// Steady-state interaction of atoms at `x1`, `x2`. Uses C₆/r⁶ when C₆ is
/// configured and the soft-core cap otherwise.
pub fn pair_numeric(p: &DressingParams, sw: &StandingWave, x1: f64, x2: f64) -> rydlat_core::Result<NumericPotential> {
    if p.c6.is_some() {
        potential_numeric(p, x1, x2, sw)
    } else {
        potential_numeric_at(p, sw.rabi(x1), sw.rabi(x2), p.v_max())
    }
}

/// Evaluates `f` over `xs` on the pool, preserving order.
fn par_map<T: Send>(xs: &[f64], f: impl Fn(f64) -> rydlat_core::Result<T> + Sync) -> rydlat_core::Result<Vec<T>> {
    xs.par_iter().map(|&x| f(x)).collect()
}

fn potential_scan(s: &Scenario, out: &mut Emitter) -> CliResult<()> {
    let task = &s.potential_scan;
    let mut p = s.params;
    let mut extra = json!({});
    if let Some(target) = task.calibrate_loss_hz {
        let cal = decoherence::calibrate_omega1(&p, target)?;
        p.omega1 = cal.omega1;
        extra = json!({
            "calibrated_omega1_over_2pi_hz": hz(cal.omega1),
            "calibrated_loss_hz": cal.loss,
            "calibration_iterations": cal.iterations,
        });
    }
    p.warn_outside_regime("potential-scan");
    let sw = s.standing_wave;
    let d = p.delta.abs();

    let o2 = linspace(task.omega2_min_over_delta * d, task.omega2_max_over_delta * d, task.points);
    let num = par_map(&o2, |o| potential_numeric_at(&p, p.omega2c, o, p.v_max()))?;
    let rows: Vec<Vec<f64>> = o2
        .iter()
        .zip(&num)
        .map(|(&o, n)| vec![hz(o), hz(n.u), hz(potential_analytic(&p, p.omega2c, o)), n.loss])
        .collect();
    out.write_csv(
        "potential_intensity.csv",
        &["omega2_x2_over_2pi_hz", "u_numeric_over_2pi_hz", "u_analytic_over_2pi_hz", "loss_hz"],
        &rows,
        extra.clone(),
    )?;

    let lp = lorentzian_params(&p, &sw);
    let (x1, xj) = (sw.node(0), sw.node(task.site));
    let h = task.position_halfwidth_in_w * lp.w;
    let xs = linspace(xj - h, xj + h, task.position_points);
    let num = par_map(&xs, |x| pair_numeric(&p, &sw, x1, x))?;
    let rows: Vec<Vec<f64>> = xs
        .iter()
        .zip(&num)
        .map(|(&x, n)| {
            let o = sw.rabi(x);
            vec![
                x,
                hz(o),
                hz(n.u),
                hz(potential_analytic(&p, sw.rabi(x1), o)),
                hz(lorentzian_profile(lp.u0_closed_form, lp.w, xj, x)),
                n.loss,
            ]
        })
        .collect();
    let mut extra = extra;
    extra["lorentzian"] = json!({
        "w_m": lp.w,
        "u0_formula_over_2pi_hz": hz(lp.u0),
        "u0_peak_over_2pi_hz": hz(lp.u0_closed_form),
        "kw": lp.kw,
        "site_x_m": xj,
    });
    out.write_csv(
        "potential_position.csv",
        &[
            "x2_m",
            "omega2_x2_over_2pi_hz",
            "u_numeric_over_2pi_hz",
            "u_analytic_over_2pi_hz",
            "u_lorentzian_over_2pi_hz",
            "loss_hz",
        ],
        &rows,
        extra,
    )?;
    Ok(())
}

fn lorentzian_fit(s: &Scenario, out: &mut Emitter) -> CliResult<()> {
    let task = &s.lorentzian_fit;
    let fits = task
        .omega2sw
        .par_iter()
        .map(|&osw| {
            let mut p = s.params;
            p.omega2sw = osw;
            let sw = StandingWave { omega2sw: osw, ..s.standing_wave };
            let lp = lorentzian_params(&p, &sw);
            let (x1, xj) = (sw.node(0), sw.node(task.site));
            let h = task.halfwidth_in_w * lp.w;
            let samples = linspace(xj - h, xj + h, task.points)
                .into_iter()
                .map(|x| Ok((x, pair_numeric(&p, &sw, x1, x)?.u)))
                .collect::<rydlat_core::Result<Vec<_>>>()?;
            Ok((osw, lp, xj, fit_lorentzian(&samples)?))
        })
        .collect::<rydlat_core::Result<Vec<_>>>()?;

    let rows: Vec<Vec<f64>> = fits
        .iter()
        .map(|(osw, lp, xj, f)| {
            vec![hz(*osw), lp.w, f.w, hz(f.u0), hz(lp.u0), hz(lp.u0_closed_form), f.x0 - xj, hz(f.rms)]
        })
        .collect();
    let lx: Vec<f64> = fits.iter().map(|(o, ..)| o.ln()).collect();
    let lw: Vec<f64> = fits.iter().map(|(.., f)| f.w.abs().ln()).collect();
    let extra = if fits.len() >= 2 { json!({ "log_w_vs_log_omega2sw_slope": slope(&lx, &lw) }) } else { json!({}) };
    out.write_csv(
        "lorentzian_fit.csv",
        &[
            "omega2sw_over_2pi_hz",
            "w_formula_m",
            "w_fit_m",
            "u0_fit_over_2pi_hz",
            "u0_formula_over_2pi_hz",
            "u0_peak_over_2pi_hz",
            "x0_offset_m",
            "rms_over_2pi_hz",
        ],
        &rows,
        extra,
    )?;
    Ok(())
}

const SPECTRUM_HEADER: [&str; 5] = ["omega2_x1", "omega2_x2", "lambda_minus", "lambda_1", "lambda_plus"];

fn spectrum(s: &Scenario, out: &mut Emitter) -> CliResult<()> {
    let p = &s.params;
    let task = &s.spectrum;
    let o1 = task.omega2_x1;
    let v = p.v_max();
    let numeric: Vec<Vec<f64>> = task
        .omega2_x2
        .par_iter()
        .map(|&o2| {
            let e = s3_spectrum(p.delta, o1, o2, v).energies;
            vec![hz(o1), hz(o2), hz(e[0]), hz(e[1]), hz(e[2])]
        })
        .collect();
    let asymptotic: Vec<Vec<f64>> = task
        .omega2_x2
        .iter()
        .map(|&o2| {
            let e = s3_asymptotic(p.delta, o1, o2).energies;
            vec![hz(o1), hz(o2), hz(e[0]), hz(e[1]), hz(e[2])]
        })
        .collect();
    let meta = |kind: &str| {
        json!({
            "units": "over_2pi_hz",
            "kind": kind,
            "v_over_2pi_hz": hz(v),
            "resonance_omega2_x2_over_2pi_hz": hz((8.0 * p.delta * p.delta - o1 * o1).max(0.0).sqrt()),
        })
    };
    out.write_csv("spectrum.csv", &SPECTRUM_HEADER, &numeric, meta("numeric"))?;
    out.write_csv("spectrum_asymptotic.csv", &SPECTRUM_HEADER, &asymptotic, meta("asymptotic"))?;
    Ok(())
}

/// `n` points spaced `2·half/n` with `centre` on the grid at index `n/2`.
fn centred_axis(centre: f64, half: f64, n: usize) -> Vec<f64> {
    let h = 2.0 * half / n as f64;
    (0..n).map(|i| centre + (i as f64 - (n / 2) as f64) * h).collect()
}

fn surface_rows(u: &PotentialSurface, scale: impl Fn(f64) -> f64) -> Vec<Vec<f64>> {
    let mut rows = Vec::with_capacity(u.axis1.len() * u.axis2.len());
    for (i, &x1) in u.axis1.iter().enumerate() {
        for (j, &x2) in u.axis2.iter().enumerate() {
            rows.push(vec![x1, x2, scale(u.values[(i, j)])]);
        }
    }
    rows
}

fn ground_state_cmd(s: &Scenario, out: &mut Emitter) -> CliResult<()> {
    let task = &s.ground_state;
    let p = s.params;
    let sw = s.standing_wave;
    let lp = lorentzian_params(&p, &sw);
    let half = task.window_in_w * lp.w;
    let centre = (sw.node(0), sw.node(task.site));
    let a1 = centred_axis(centre.0, half, task.grid_points);
    let a2 = centred_axis(centre.1, half, task.grid_points);

    let u = match task.surface {
        SurfaceSource::Analytic => analytic_surface(&p, &sw, &a1, &a2),
        SurfaceSource::Numeric => {
            let n2 = a2.len();
            let cells: Vec<f64> = (0..a1.len() * n2)
                .into_par_iter()
                .map(|k| Ok(pair_numeric(&p, &sw, a1[k / n2], a2[k % n2])?.u))
                .collect::<rydlat_core::Result<_>>()?;
            PotentialSurface {
                values: nalgebra_from_rows(a1.len(), n2, &cells),
                axis1: a1.clone(),
                axis2: a2.clone(),
                params: Some(p),
            }
        }
    };
    out.write_csv("surface.csv", &["x1_m", "x2_m", "U_rad_per_s"], &surface_rows(&u, |x| x), json!({ "surface": task.surface }))?;

    let h = 2.0 * half / task.grid_points as f64;
    // Quarter of the kinetic stability bound, and small against the deepest potential step.
    let umax = u.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let dt = task.dt.unwrap_or((0.25 * h * h * p.mass / HBAR).min(0.1 / umax));
    let opts = GroundStateOptions { dt, tol: task.tol, g_nl: task.g_nl, max_iters: task.max_iters };
    let psi = ground_state(&u, p.mass, &opts)?;
    let modes = mode_analysis(&u, centre, p.mass, task.mode_half_window_in_w * lp.w)?;
    let marg = density_marginals(&psi);
    let dens = psi.density();
    let mut rows = Vec::with_capacity(dens.len());
    for (i, &x1) in psi.axis1.iter().enumerate() {
        for (j, &x2) in psi.axis2.iter().enumerate() {
            rows.push(vec![x1, x2, dens[(i, j)]]);
        }
    }
    let summary = json!({
        "energy_over_2pi_hz": hz(psi.energy),
        "kinetic_over_2pi_hz": hz(psi.kinetic),
        "potential_over_2pi_hz": hz(psi.potential),
        "iterations": psi.iterations,
        "correlation": marg.correlation,
        "displacement_correlation": displacement_correlation(&psi, centre),
        "dt_s": dt,
        "w_m": lp.w,
        "modes": {
            "omega_plus_over_2pi_hz": hz(modes.omega_plus),
            "omega_minus_over_2pi_hz": hz(modes.omega_minus),
            "stiffness_plus_rad_per_s_m2": modes.stiffness_plus,
            "stiffness_minus_rad_per_s_m2": modes.stiffness_minus,
            "harmonic_correlation": modes.correlation,
            "bound": modes.bound,
        },
    });
    out.write_csv("ground_state.csv", &["x1_m", "x2_m", "density"], &rows, json!({ "ground_state": summary.clone() }))?;
    out.write_json("ground_state.json", json!({ "ground_state": summary }))?;
    Ok(())
}

fn nalgebra_from_rows(n1: usize, n2: usize, cells: &[f64]) -> DMatrix<f64> {
    DMatrix::from_fn(n1, n2, |i, j| cells[i * n2 + j])
}

fn loss_budget(s: &Scenario, out: &mut Emitter) -> CliResult<()> {
    let task = &s.loss_budget;
    let points = task
        .omega2c
        .par_iter()
        .map(|&o| Ok(calibration_scan(&s.params, &[o], task.target_loss)?.remove(0)))
        .collect::<rydlat_core::Result<Vec<_>>>()?;
    let rows: Vec<Vec<f64>> = points
        .iter()
        .map(|pt| vec![hz(pt.omega2c), hz(pt.calibration.omega1), hz(pt.calibration.u0), pt.calibration.loss])
        .collect();
    let extra = json!({
        "target_loss_hz": task.target_loss,
        "delta_rule": "delta = sign(delta) * omega2c / 2",
        "loss_shortcut_hz": points.iter().map(|pt| pt.calibration.loss_shortcut).collect::<Vec<_>>(),
    });
    out.write_csv(
        "loss_budget.csv",
        &["omega2c_over_2pi_hz", "omega1_over_2pi_hz", "u0_over_2pi_hz", "loss_hz"],
        &rows,
        extra,
    )?;
    Ok(())
}

fn bbr(s: &Scenario, out: &mut Emitter) -> CliResult<()> {
    let task = &s.bbr;
    let p = &s.params;
    let rows = task
        .temperatures_k
        .iter()
        .map(|&t| {
            let b = match task.n_sites {
                Some(n) => bbr_budget(n, p.omega1, p.omega2c, t, task.survival_threshold)?,
                None => bbr_budget_from_population(task.p_r.unwrap_or(1.0), t, task.survival_threshold)?,
            };
            Ok(vec![b.temperature, b.p_r, b.tau_max])
        })
        .collect::<rydlat_core::Result<Vec<_>>>()?;
    out.write_csv(
        "bbr.csv",
        &["temperature_k", "p_r", "tau_max_s"],
        &rows,
        json!({ "survival_threshold": task.survival_threshold }),
    )?;
    Ok(())
}

/// Reads a manifold CSV.
pub fn load_manifold(path: &std::path::Path) -> CliResult<(PairManifold, Vec<u8>)> {
    let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
    let text = String::from_utf8(bytes.clone())
        .map_err(|e| CliError::io(path, std::io::Error::new(std::io::ErrorKind::InvalidData, e)))?;
    Ok((PairManifold::parse_csv(&text)?, bytes))
}

fn blockade_cmd(s: &Scenario, out: &mut Emitter) -> CliResult<()> {
    let task = &s.blockade;
    let manifold = match &task.manifold_path {
        Some(path) => {
            let (m, bytes) = load_manifold(path)?;
            out.record_input("manifold", &path.display().to_string(), crate::emit::sha256_hex(&bytes));
            m
        }
        None => {
            let m = blockade::synth_manifold(s.seed, task.n_states, task.detuning_scale, task.coupling_scale, task.sparsity)?;
            if task.save_manifold {
                out.write_bytes("manifold.csv", m.to_csv().as_bytes())?;
            }
            m
        }
    };
    let opts = ScanOptions {
        omega_t: task.omega_t,
        link: task.link,
        periods: task.periods,
        samples_per_period: task.samples_per_period,
        lanczos_factor: task.lanczos_factor,
    };
    let leak = par_map(&task.distances, |r| blockade::leakage_at(&manifold, r, &opts))?;
    let rows: Vec<Vec<f64>> = task.distances.iter().zip(&leak).map(|(&r, &l)| vec![r, l]).collect();
    let extra = json!({
        "n_states": manifold.len(),
        "coupling_density": manifold.coupling_density(),
        "omega_t_over_2pi_hz": hz(task.omega_t),
        "method": if manifold.len() < blockade::DENSE_LIMIT { "dense" } else { "lanczos" },
    });
    out.write_csv("leakage.csv", &["r_m", "leakage_max"], &rows, extra)?;
    Ok(())
}

fn resonance_map(s: &Scenario, out: &mut Emitter) -> CliResult<()> {
    let task = &s.resonance_map;
    let p = &s.params;
    let sw = s.standing_wave;
    let w = lorentzian_params(p, &sw).w;
    let (surface, extra) = match sw.dims {
        Dimensionality::One => {
            let axis = sw.refined_axis(task.points_per_period, task.oversample, task.halfwidth_in_w * w);
            let a1: Vec<f64> = axis.iter().map(|x| x + sw.node(0)).collect();
            let a2: Vec<f64> = axis.iter().map(|x| x + sw.node(task.site)).collect();
            (resonance_surface(&sw, p.delta, p.gamma_p, &a1, &a2), json!({ "dimensionality": 1 }))
        }
        Dimensionality::Three => {
            // The 3D pattern has period π/k independent of θ.
            let flat = StandingWave { theta: std::f64::consts::PI, ..sw };
            let offsets = flat.refined_axis(task.points_per_period, task.oversample, task.halfwidth_in_w * w);
            let rj = [flat.node(task.site), 0.0, 0.0];
            let u = resonance_surface_3d(&sw, p.delta, p.gamma_p, [0.0; 3], rj, task.direction, &offsets, &offsets);
            (u, json!({ "dimensionality": 3, "site_j_m": rj, "direction": task.direction }))
        }
    };
    out.write_csv("resonance_map.csv", &["x1_m", "x2_m", "resonance_offset"], &surface_rows(&surface, |x| x), extra)?;
    Ok(())
}
