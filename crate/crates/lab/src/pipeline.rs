//! `geometry`, `solve` and `verify` pipelines.

use std::fs;
use std::path::{Path, PathBuf};

use aniso_core::geometry::PowerVector;
use aniso_core::harnack::{estimate_constants, two_sided_check, HarnackError, HarnackReport, SampleSpec};
use aniso_core::hoelder::{
    decay_check, hoelder_seminorm, measure_omega0, per_variable_hoelder_check, resolution_noise_floor,
    IterationParams, OscillationTrace,
};
use aniso_core::solver::{gaussian_exact, solve_with_log};
use aniso_core::{GridSolution, HarnackOptions, SolverConfig};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{ExperimentConfig, HarnackSection, InitialConfig};
use crate::error::LabError;
use crate::report::{
    write_harnack_csv, write_json, write_oscillation_csv, write_series, HarnackJson, HarnackSummary,
    OscillationSummary, SeminormJson, TwoSidedJson,
};
use crate::snapshot::{read_solution, write_solution};

/// Lower clamp applied to a fitted forward constant before it drives the
/// oscillation schedule, which needs `γ > 1`.
pub const MIN_GAMMA: f64 = 1.0 + 1e-6;

#[derive(Debug, Clone, Serialize)]
pub struct ConditionsJson {
    pub degenerate_ok: bool,
    pub bounded_ok: bool,
    pub subcritical_ok: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct GeometryReport {
    pub p: Vec<f64>,
    pub pbar: f64,
    /// `None` when `p̄ ≥ N`.
    pub sobolev_exponent: Option<f64>,
    pub supercritical: bool,
    pub conditions: ConditionsJson,
    pub rho: f64,
    pub theta: f64,
    pub halfwidths: Vec<f64>,
    pub volume: f64,
    pub time_length: f64,
}

pub fn geometry_report(p: &[f64], rho: f64, theta: f64) -> Result<GeometryReport, LabError> {
    let pv = PowerVector::new(p.to_vec()).map_err(|e| LabError::Usage(e.to_string()))?;
    if !(rho > 0.0 && theta > 0.0) {
        return Err(LabError::Usage("rho and theta must be positive".into()));
    }
    let c = pv.conditions();
    let halfwidths: Vec<f64> = (0..pv.dim()).map(|i| pv.halfwidth(i, rho, theta)).collect();
    let sobolev = pv.sobolev_exponent().ok();
    Ok(GeometryReport {
        p: p.to_vec(),
        pbar: pv.harmonic_mean(),
        sobolev_exponent: sobolev,
        supercritical: sobolev.is_none(),
        conditions: ConditionsJson {
            degenerate_ok: c.degenerate_ok,
            bounded_ok: c.bounded_ok,
            subcritical_ok: c.subcritical_ok,
        },
        rho,
        theta,
        volume: halfwidths.iter().map(|h| 2.0 * h).product(),
        halfwidths,
        time_length: pv.time_length(rho, theta),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct SnapshotJson {
    pub time: f64,
    pub mass: f64,
    pub min: f64,
    pub max: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleJson {
    pub max_error: f64,
    pub bound: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunLogJson {
    pub steps: usize,
    pub dt_min: Option<f64>,
    pub dt_max: Option<f64>,
    pub snapshots: Vec<SnapshotJson>,
    pub oracle: Option<OracleJson>,
}

#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub solution: GridSolution,
    pub log: RunLogJson,
    pub files: Vec<PathBuf>,
}

fn create_dir(dir: &Path) -> Result<(), LabError> {
    fs::create_dir_all(dir).map_err(|e| LabError::io(format!("creating {}", dir.display()), e))
}

pub fn snapshot_dir(out: &Path) -> PathBuf {
    out.join("snapshots")
}

/// Runs the solver and writes snapshots, `run_log.json`, `dt.csv` and
/// `plot_mass.csv`. Nothing is written when validation fails.
pub fn run_solve(cfg: &ExperimentConfig) -> Result<SolveOutcome, LabError> {
    cfg.validate()?;
    let p = cfg.power_vector()?;
    let grid = cfg.grid()?;
    let u0 = cfg.initial_field(&grid)?;
    let solver: SolverConfig = cfg.solver.into();
    let (sol, log) = solve_with_log(&u0, cfg.horizon(), &grid, &p, &cfg.snapshots, &solver)?;

    let out = &cfg.out_dir;
    create_dir(out)?;
    let files = write_solution(&snapshot_dir(out), &sol)?;

    let oracle = cfg.oracle.map(|o| {
        let last = sol.times().len() - 1;
        // validated: the data are the kernel at `time`
        let offset = match cfg.initial {
            InitialConfig::Gaussian { time } => time,
            _ => 0.0,
        };
        let t = sol.times()[last] + offset;
        let err = (0..grid.len())
            .map(|j| (sol.field(last)[j] - gaussian_exact(&grid.position(j), t).unwrap_or(f64::NAN)).abs())
            .fold(0.0, f64::max);
        OracleJson { max_error: err, bound: o.max_error, pass: err <= o.max_error }
    });
    let json = RunLogJson {
        steps: log.steps(),
        dt_min: log.dt.iter().copied().reduce(f64::min),
        dt_max: log.dt.iter().copied().reduce(f64::max),
        snapshots: log
            .snapshots
            .iter()
            .map(|s| SnapshotJson { time: s.time, mass: s.mass, min: s.min, max: s.max })
            .collect(),
        oracle: oracle.clone(),
    };
    write_json(&out.join("run_log.json"), &json)?;
    let dt_rows: Vec<(f64, f64)> = log.dt.iter().enumerate().map(|(k, &d)| (k as f64, d)).collect();
    write_series(&out.join("dt.csv"), "step", "dt", &dt_rows)?;
    let mass_rows: Vec<(f64, f64)> = log.snapshots.iter().map(|s| (s.time, s.mass)).collect();
    write_series(&out.join("plot_mass.csv"), "time", "mass", &mass_rows)?;

    if let Some(o) = oracle.filter(|o| !o.pass) {
        return Err(LabError::Validation(format!(
            "final snapshot differs from the heat kernel by {} (bound {})",
            o.max_error, o.bound
        )));
    }
    Ok(SolveOutcome { solution: sol, log: json, files })
}

/// Reads the snapshots named by the config and checks they match it.
pub fn load_solution(cfg: &ExperimentConfig) -> Result<GridSolution, LabError> {
    cfg.validate()?;
    let p = cfg.power_vector()?;
    let expected = cfg.grid()?;
    let sol = read_solution(&snapshot_dir(&cfg.out_dir), cfg.snapshots.len(), p, cfg.bc.into())?;
    let g = sol.grid();
    if g.dims() != expected.dims() || g.spacing() != expected.spacing() || g.origin() != expected.origin() {
        return Err(LabError::Validation("snapshot grid does not match the config".into()));
    }
    if sol.times() != cfg.snapshots.as_slice() {
        return Err(LabError::Validation("snapshot times do not match the config".into()));
    }
    Ok(sol)
}

#[derive(Debug, Clone)]
pub struct VerifyOutcome {
    pub harnack: Option<HarnackSummary>,
    pub oscillation: Option<OscillationSummary>,
    pub reports: Vec<HarnackReport>,
    pub trace: Option<OscillationTrace>,
}

impl VerifyOutcome {
    pub fn summary_line(&self) -> String {
        let f = |v: Option<f64>| v.map_or_else(|| "none".to_string(), |v| v.to_string());
        let (gf, gb) = self.harnack.as_ref().map_or((None, None), |h| (h.gamma_forward, h.gamma_backward));
        let alpha = self.oscillation.as_ref().and_then(|o| o.alpha_fit);
        format!("gamma_forward={} gamma_backward={} alpha_fit={}", f(gf), f(gb), f(alpha))
    }
}

fn harnack_options(h: &HarnackSection) -> HarnackOptions {
    HarnackOptions { threshold_rel: h.threshold_rel, containment_factor: h.containment_factor, domain: None }
}

fn two_sided(
    sol: &GridSolution,
    spec: &SampleSpec,
    h: &HarnackSection,
    c: f64,
    gamma: f64,
) -> Result<TwoSidedJson, LabError> {
    let opts = harnack_options(h);
    let (mut admissible, mut passed) = (0, 0);
    for &rho in &h.rho {
        for pt in &spec.points {
            match two_sided_check(sol, &pt.x, pt.t, rho, c, gamma, &opts) {
                Ok(ok) => {
                    admissible += 1;
                    passed += usize::from(ok);
                }
                Err(
                    HarnackError::BelowThreshold { .. }
                    | HarnackError::NotContained { .. }
                    | HarnackError::InfimumZero
                    | HarnackError::EmptyCube
                    | HarnackError::OutOfHull,
                ) => {}
                Err(e) => return Err(e.into()),
            }
        }
    }
    Ok(TwoSidedJson { gamma, admissible, passed })
}

fn run_harnack(
    sol: &GridSolution,
    h: &HarnackSection,
    out: &Path,
) -> Result<(HarnackSummary, Vec<HarnackReport>), LabError> {
    let spec = SampleSpec::lattice(sol.grid(), h.stride, &h.times);
    let opts = harnack_options(h);
    let results: Vec<Result<(HarnackReport, Option<TwoSidedJson>), LabError>> = h
        .c
        .par_iter()
        .map(|&c| {
            let rep = estimate_constants(sol, &spec, &h.rho, c, &opts)?;
            let ts = h.gamma_check.map(|g| two_sided(sol, &spec, h, c, g)).transpose()?;
            Ok((rep, ts))
        })
        .collect();
    let mut reports = Vec::with_capacity(results.len());
    let mut sweep = Vec::with_capacity(results.len());
    for r in results {
        let (rep, ts) = r?;
        sweep.push(HarnackJson::new(&rep, ts));
        reports.push(rep);
    }
    let max = |it: &mut dyn Iterator<Item = f64>| it.reduce(f64::max);
    let summary = HarnackSummary {
        threshold_rel: h.threshold_rel,
        containment_factor: h.containment_factor,
        rho: h.rho.clone(),
        gamma_forward: max(&mut reports.iter().filter_map(|r| r.gamma_forward)),
        gamma_backward: max(&mut reports.iter().filter_map(|r| r.gamma_backward)),
        sweep,
    };
    write_harnack_csv(&out.join("harnack.csv"), sol.grid().dim(), &reports)?;
    write_json(&out.join("harnack_summary.json"), &summary)?;
    let fwd: Vec<(f64, f64)> = reports.iter().filter_map(|r| r.gamma_forward.map(|g| (r.c_used, g))).collect();
    let bwd: Vec<(f64, f64)> = reports.iter().filter_map(|r| r.gamma_backward.map(|g| (r.c_used, g))).collect();
    write_series(&out.join("plot_gamma_forward_vs_c.csv"), "c", "gamma_forward", &fwd)?;
    write_series(&out.join("plot_gamma_backward_vs_c.csv"), "c", "gamma_backward", &bwd)?;
    Ok((summary, reports))
}

/// Runs the configured Harnack sweep and oscillation check on stored snapshots.
/// Failed checks are reported, not raised.
pub fn run_verify(cfg: &ExperimentConfig) -> Result<VerifyOutcome, LabError> {
    let sol = load_solution(cfg)?;
    verify_solution(cfg, &sol)
}

pub fn verify_solution(cfg: &ExperimentConfig, sol: &GridSolution) -> Result<VerifyOutcome, LabError> {
    let out = &cfg.out_dir;
    create_dir(out)?;
    let (harnack, reports) = match &cfg.harnack {
        Some(h) => {
            let (s, r) = run_harnack(sol, h, out)?;
            (Some(s), r)
        }
        None => (None, Vec::new()),
    };

    let mut oscillation = None;
    let mut trace = None;
    if let (Some(h), Some(apex)) = (&cfg.hoelder, cfg.apex()) {
        let (gamma, fitted) = match h.gamma {
            Some(g) => (g, None),
            None => {
                let hs = cfg.harnack.as_ref().expect("validated");
                let fitted = match reports.iter().find(|r| r.c_used == h.c) {
                    Some(r) => r.gamma_forward,
                    None => {
                        let spec = SampleSpec::lattice(sol.grid(), hs.stride, &hs.times);
                        estimate_constants(sol, &spec, &hs.rho, h.c, &harnack_options(hs))?.gamma_forward
                    }
                };
                let fitted = fitted.ok_or_else(|| LabError::Validation("no admissible forward sample at hoelder.c".into()))?;
                (fitted.max(MIN_GAMMA), Some(fitted))
            }
        };
        let omega0 = measure_omega0(sol, &apex, h.rho0, h.c)?;
        let params = IterationParams { omega0, rho0: h.rho0, c: h.c, gamma, n_max: h.n_max };
        let floor = resolution_noise_floor(sol, &cfg.solver.into())?;
        let t = decay_check(sol, &apex, &params, floor)?;

        let seminorm = match (&h.seminorm, cfg.seminorm_box()) {
            (Some(s), Some(k)) => {
                let k = k?;
                let m = sol.max_abs();
                let value = hoelder_seminorm(sol, &k, s.alpha, m, s.pairs, cfg.seed)?;
                let pv = per_variable_hoelder_check(sol, &k, &sol.domain()?, s.alpha, m, gamma, s.pairs, cfg.seed)?;
                Some(SeminormJson { alpha: s.alpha, m, pairs: s.pairs, value, per_variable: Some((&pv).into()) })
            }
            _ => None,
        };
        let summary = OscillationSummary::new(&t, fitted, seminorm);
        write_oscillation_csv(&out.join("oscillation.csv"), &t)?;
        write_json(&out.join("oscillation_summary.json"), &summary)?;
        let rows: Vec<(f64, f64)> = t.rows.iter().map(|r| (r.cylinder.rho, r.osc)).collect();
        write_series(&out.join("plot_osc_vs_rho.csv"), "rho_n", "osc_n", &rows)?;
        let rows: Vec<(f64, f64)> = t.rows.iter().map(|r| (r.cylinder.rho, r.bound)).collect();
        write_series(&out.join("plot_bound_vs_rho.csv"), "rho_n", "bound_n", &rows)?;
        oscillation = Some(summary);
        trace = Some(t);
    }
    Ok(VerifyOutcome { harnack, oscillation, reports, trace })
}
