//! CSV rows, JSON summaries and two-column plot series.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use aniso_core::harnack::{HarnackReport, HarnackSample, Quantiles};
use aniso_core::hoelder::{OscillationTrace, PerVariableReport};
use serde::Serialize;

use crate::error::LabError;

fn num(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), LabError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| LabError::Format(e.to_string()))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| LabError::io(format!("writing {}", path.display()), e))
}

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>, LabError> {
    csv::Writer::from_path(path).map_err(Into::into)
}

fn finish(mut w: csv::Writer<fs::File>, path: &Path) -> Result<(), LabError> {
    w.flush().map_err(|e| LabError::io(format!("writing {}", path.display()), e))
}

/// Two-column series with a header row.
pub fn write_series(path: &Path, x: &str, y: &str, rows: &[(f64, f64)]) -> Result<(), LabError> {
    let mut w = csv_writer(path)?;
    w.write_record([x, y])?;
    for (a, b) in rows {
        w.write_record([a.to_string(), b.to_string()])?;
    }
    finish(w, path)
}

pub fn harnack_header(n: usize) -> Vec<String> {
    let mut h: Vec<String> = (0..n).map(|i| format!("x{i}")).collect();
    for col in [
        "t0",
        "u0",
        "rho",
        "c",
        "theta",
        "forward_inf",
        "forward_ratio",
        "backward_sup",
        "backward_ratio",
        "censored_reason",
    ] {
        h.push(col.into());
    }
    h
}

fn harnack_row(s: &HarnackSample) -> Vec<String> {
    let mut r: Vec<String> = s.point.x.iter().map(f64::to_string).collect();
    r.push(s.point.t.to_string());
    r.push(s.value.to_string());
    r.push(s.rho.to_string());
    r.push(s.c.to_string());
    r.push(s.theta.to_string());
    r.push(num(s.forward_inf));
    r.push(num(s.forward_ratio));
    r.push(num(s.backward_sup));
    r.push(num(s.backward_ratio));
    r.push(s.censored_reason());
    r
}

pub fn write_harnack_csv(path: &Path, dim: usize, reports: &[HarnackReport]) -> Result<(), LabError> {
    let mut w = csv_writer(path)?;
    w.write_record(harnack_header(dim))?;
    for rep in reports {
        for s in &rep.samples {
            w.write_record(harnack_row(s))?;
        }
    }
    finish(w, path)
}

#[derive(Debug, Clone, Serialize)]
pub struct QuantileJson {
    pub count: usize,
    pub min: f64,
    pub median: f64,
    pub q90: f64,
    pub max: f64,
}

impl From<Quantiles> for QuantileJson {
    fn from(q: Quantiles) -> Self {
        Self { count: q.count, min: q.min, median: q.median, q90: q.q90, max: q.max }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RhoJson {
    pub rho: f64,
    pub gamma_forward: Option<f64>,
    pub gamma_backward: Option<f64>,
    pub forward: Option<QuantileJson>,
    pub backward: Option<QuantileJson>,
}

#[derive(Debug, Clone, Serialize)]
pub struct TwoSidedJson {
    pub gamma: f64,
    pub admissible: usize,
    pub passed: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct HarnackJson {
    pub c: f64,
    pub gamma_forward: Option<f64>,
    pub gamma_backward: Option<f64>,
    pub samples: usize,
    pub admissible_forward: usize,
    pub admissible_backward: usize,
    pub censored: BTreeMap<String, usize>,
    pub per_rho: Vec<RhoJson>,
    pub two_sided: Option<TwoSidedJson>,
}

impl HarnackJson {
    pub fn new(rep: &HarnackReport, two_sided: Option<TwoSidedJson>) -> Self {
        Self {
            c: rep.c_used,
            gamma_forward: rep.gamma_forward,
            gamma_backward: rep.gamma_backward,
            samples: rep.sample_count,
            admissible_forward: rep.admissible_forward(),
            admissible_backward: rep.admissible_backward(),
            censored: rep.censored.clone(),
            per_rho: rep
                .per_rho
                .iter()
                .map(|r| RhoJson {
                    rho: r.rho,
                    gamma_forward: r.gamma_forward,
                    gamma_backward: r.gamma_backward,
                    forward: r.forward.map(Into::into),
                    backward: r.backward.map(Into::into),
                })
                .collect(),
            two_sided,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct HarnackSummary {
    pub threshold_rel: f64,
    pub containment_factor: f64,
    pub rho: Vec<f64>,
    pub gamma_forward: Option<f64>,
    pub gamma_backward: Option<f64>,
    pub sweep: Vec<HarnackJson>,
}

pub fn write_oscillation_csv(path: &Path, trace: &OscillationTrace) -> Result<(), LabError> {
    let mut w = csv_writer(path)?;
    w.write_record(["n", "rho_n", "time_length_n", "osc_n", "bound_n", "pass"])?;
    for r in &trace.rows {
        w.write_record([
            r.n.to_string(),
            r.cylinder.rho.to_string(),
            r.cylinder.time_length.to_string(),
            r.osc.to_string(),
            r.bound.to_string(),
            r.pass.to_string(),
        ])?;
    }
    finish(w, path)
}

#[derive(Debug, Clone, Serialize)]
pub struct BranchJson {
    pub small_worst: Option<f64>,
    pub small_pairs: usize,
    pub large_worst: Option<f64>,
    pub large_pairs: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct PerVariableJson {
    pub pi_distance: f64,
    pub r: f64,
    pub pass: bool,
    pub axes: Vec<BranchJson>,
    pub time: BranchJson,
}

impl From<&PerVariableReport> for PerVariableJson {
    fn from(r: &PerVariableReport) -> Self {
        let b = |s: &aniso_core::hoelder::BranchSlack| BranchJson {
            small_worst: s.small.map(|x| x.worst),
            small_pairs: s.small.map_or(0, |x| x.pairs),
            large_worst: s.large.map(|x| x.worst),
            large_pairs: s.large.map_or(0, |x| x.pairs),
        };
        Self { pi_distance: r.pi_distance, r: r.r, pass: r.pass(), axes: r.axes.iter().map(b).collect(), time: b(&r.time) }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SeminormJson {
    pub alpha: f64,
    pub m: f64,
    pub pairs: usize,
    pub value: f64,
    pub per_variable: Option<PerVariableJson>,
}

#[derive(Debug, Clone, Serialize)]
pub struct OscillationSummary {
    pub alpha_fit: Option<f64>,
    pub alpha_formula: f64,
    pub gamma: f64,
    /// Fitted forward constant before the lower clamp, when γ was not given.
    pub gamma_fitted: Option<f64>,
    pub delta: f64,
    pub eps: f64,
    pub omega0: f64,
    pub noise_floor: f64,
    pub already_continuous: bool,
    pub rows: usize,
    pub vacuous_rows: usize,
    pub all_pass: bool,
    pub seminorm: Option<SeminormJson>,
}

impl OscillationSummary {
    pub fn new(trace: &OscillationTrace, gamma_fitted: Option<f64>, seminorm: Option<SeminormJson>) -> Self {
        Self {
            alpha_fit: trace.alpha_fit,
            alpha_formula: trace.alpha_formula,
            gamma: trace.gamma,
            gamma_fitted,
            delta: trace.delta,
            eps: trace.eps,
            omega0: trace.omega0,
            noise_floor: trace.noise_floor,
            already_continuous: trace.already_continuous,
            rows: trace.rows.len(),
            vacuous_rows: trace.rows.iter().filter(|r| r.vacuous).count(),
            all_pass: trace.all_pass(),
            seminorm,
        }
    }
}
