//! Empirical intrinsic Harnack ratios on computed solutions.
//!
//! For a center `(x_0, t_0)` with `u(x_0, t_0) > 0`, radius `ρ` and constant `c`,
//! the intrinsic parameter is `θ = c / u(x_0, t_0)`. The forward ratio compares
//! `u(x_0, t_0)` with the infimum of `u(·, t_0 + θ^{2-p̄} ρ^{p̄})` over
//! `x_0 + K_ρ(θ)`, the backward ratio compares the supremum at
//! `t_0 - θ^{2-p̄} ρ^{p̄}` with `u(x_0, t_0)`.
//!
//! Cube extrema are taken over the grid nodes in the closed cube, plus the cube
//! corners (interpolated) whenever fewer than `2^N` nodes fall inside.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;
use thiserror::Error;

use crate::geometry::{
    cylinder_fits, CylinderKind, DomainBox, GeometryError, IntrinsicCylinder, PowerVector,
    SpaceTimePoint,
};
use crate::math::powf;
use crate::solver::{Grid, GridSolution};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HarnackError {
    #[error("point lies outside the space-time hull of the data")]
    OutOfHull,
    #[error("u(x0, t0) = {value} is below the positivity floor {floor}")]
    BelowThreshold { value: f64, floor: f64 },
    #[error("intrinsic cylinder of radius {radius} is not contained in the domain")]
    NotContained { radius: f64 },
    #[error("no grid node inside the cube")]
    EmptyCube,
    #[error("infimum zero: ratio unbounded")]
    InfimumZero,
    #[error("no admissible sample")]
    EmptyReport,
    #[error("Harnack constant must be at least 1, got {0}")]
    InvalidGamma(f64),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Why a sample (or one direction of it) was left out of the constants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Censor {
    BelowThreshold,
    NotContained,
    EmptyCube,
    InfimumZero,
    OutOfHull,
}

impl Censor {
    pub fn label(self) -> &'static str {
        match self {
            Censor::BelowThreshold => "below_threshold",
            Censor::NotContained => "not_contained",
            Censor::EmptyCube => "empty_cube",
            Censor::InfimumZero => "infimum_zero",
            Censor::OutOfHull => "out_of_hull",
        }
    }

    fn from_error(err: &HarnackError) -> Option<Self> {
        Some(match err {
            HarnackError::BelowThreshold { .. } => Censor::BelowThreshold,
            HarnackError::NotContained { .. } => Censor::NotContained,
            HarnackError::EmptyCube => Censor::EmptyCube,
            HarnackError::InfimumZero => Censor::InfimumZero,
            HarnackError::OutOfHull => Censor::OutOfHull,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HarnackOptions {
    /// Centers need `u(x_0, t_0) ≥ threshold_rel · max u`.
    pub threshold_rel: f64,
    /// Containment is required for the cylinder of radius `containment_factor · ρ`.
    pub containment_factor: f64,
    /// `Ω_T` used for containment; defaults to [`GridSolution::domain`].
    pub domain: Option<DomainBox>,
}

impl Default for HarnackOptions {
    fn default() -> Self {
        Self { threshold_rel: 1e-6, containment_factor: 4.0, domain: None }
    }
}

impl HarnackOptions {
    fn domain_for(&self, sol: &GridSolution) -> Result<DomainBox, HarnackError> {
        match &self.domain {
            Some(d) => Ok(d.clone()),
            None => Ok(sol.domain()?),
        }
    }
}

/// Value of `u` at `(x, t)`: multilinear in space, linear in time.
pub fn eval_at(sol: &GridSolution, x: &[f64], t: f64) -> Result<f64, HarnackError> {
    let grid = sol.grid();
    if x.len() != grid.dim() {
        return Err(HarnackError::DimensionMismatch { expected: grid.dim(), got: x.len() });
    }
    let (k, w) = time_bracket(sol, t).ok_or(HarnackError::OutOfHull)?;
    let a = interpolate(grid, sol.field(k), x).ok_or(HarnackError::OutOfHull)?;
    if w == 0.0 {
        return Ok(a);
    }
    let b = interpolate(grid, sol.field(k + 1), x).ok_or(HarnackError::OutOfHull)?;
    Ok(a + w * (b - a))
}

/// Snapshot `k` and weight `w` with `t = (1 - w) t_k + w t_{k+1}`.
fn time_bracket(sol: &GridSolution, t: f64) -> Option<(usize, f64)> {
    if let Some(k) = sol.snapshot_index(t) {
        return Some((k, 0.0));
    }
    let times = sol.times();
    let k = times.windows(2).position(|w| w[0] < t && t < w[1])?;
    Some((k, (t - times[k]) / (times[k + 1] - times[k])))
}

fn interpolate(grid: &Grid, field: &[f64], x: &[f64]) -> Option<f64> {
    let n = grid.dim();
    let mut base = vec![0usize; n];
    let mut weight = vec![0.0; n];
    for i in 0..n {
        let h = grid.spacing()[i];
        let s = (x[i] - grid.origin()[i]) / h - 0.5;
        let last = (grid.dims()[i] - 1) as f64;
        let tol = 1e-9;
        if s < -tol || s > last + tol {
            return None;
        }
        let s = s.clamp(0.0, last);
        let j = crate::math::floor(s).min(last - 1.0);
        base[i] = j as usize;
        weight[i] = s - j;
    }
    // corner values, reduced one axis at a time with exact-on-constants lerps
    let mut corners: Vec<f64> = (0..(1usize << n))
        .map(|corner| {
            let k: usize = (0..n)
                .map(|i| {
                    let up = (corner >> i) & 1 == 1 && weight[i] != 0.0;
                    (base[i] + up as usize) * grid.strides()[i]
                })
                .sum();
            field[k]
        })
        .collect();
    for w in weight.iter() {
        let half = corners.len() / 2;
        let next: Vec<f64> = (0..half)
            .map(|m| {
                let a = corners[2 * m];
                let b = corners[2 * m + 1];
                if *w == 0.0 {
                    a
                } else {
                    a + w * (b - a)
                }
            })
            .collect();
        corners = next;
    }
    Some(corners[0])
}

/// Values of `u(·, t)` at every node in the closed cube of `cyl`, plus its corners
/// when fewer than `2^N` nodes are inside.
fn cube_values(
    sol: &GridSolution,
    cyl: &IntrinsicCylinder,
    t: f64,
) -> Result<Vec<f64>, HarnackError> {
    let grid = sol.grid();
    let n = grid.dim();
    let (k, w) = time_bracket(sol, t).ok_or(HarnackError::OutOfHull)?;
    let (lo, hi) = cyl.cube_bounds();
    let mut ranges = Vec::with_capacity(n);
    for i in 0..n {
        ranges.push(grid.index_range(i, lo[i], hi[i]));
    }
    let mut values = Vec::new();
    if ranges.iter().all(|r| r.is_some()) {
        let ranges: Vec<(usize, usize)> = ranges.into_iter().map(|r| r.unwrap()).collect();
        let a = sol.field(k);
        let b = if w == 0.0 { a } else { sol.field(k + 1) };
        let mut multi: Vec<usize> = ranges.iter().map(|r| r.0).collect();
        'walk: loop {
            let flat = grid.flat_index(&multi);
            values.push(if w == 0.0 { a[flat] } else { a[flat] + w * (b[flat] - a[flat]) });
            for axis in (0..n).rev() {
                if multi[axis] < ranges[axis].1 {
                    multi[axis] += 1;
                    continue 'walk;
                }
                multi[axis] = ranges[axis].0;
            }
            break;
        }
    }
    if values.len() < (1usize << n) {
        let mut x = vec![0.0; n];
        for corner in 0..(1usize << n) {
            for i in 0..n {
                x[i] = if (corner >> i) & 1 == 1 { hi[i] } else { lo[i] };
            }
            if let Ok(v) = eval_at(sol, &x, t) {
                values.push(v);
            }
        }
    }
    if values.is_empty() {
        return Err(HarnackError::EmptyCube);
    }
    Ok(values)
}

/// One Harnack evaluation at `(x_0, t_0)` for radius `ρ` and constant `c`.
#[derive(Debug, Clone, PartialEq)]
pub struct HarnackSample {
    pub point: SpaceTimePoint,
    pub value: f64,
    pub rho: f64,
    pub c: f64,
    pub theta: f64,
    pub forward_inf: Option<f64>,
    pub backward_sup: Option<f64>,
    pub forward_ratio: Option<f64>,
    pub backward_ratio: Option<f64>,
    /// Whether the centered cylinder of radius `4ρ` lies in `Ω_T`.
    pub fits_domain: bool,
    pub forward_censor: Option<Censor>,
    pub backward_censor: Option<Censor>,
}

impl HarnackSample {
    fn empty(point: SpaceTimePoint, value: f64, rho: f64, c: f64) -> Self {
        let theta = if value > 0.0 { c / value } else { f64::INFINITY };
        Self {
            point,
            value,
            rho,
            c,
            theta,
            forward_inf: None,
            backward_sup: None,
            forward_ratio: None,
            backward_ratio: None,
            fits_domain: false,
            forward_censor: None,
            backward_censor: None,
        }
    }

    /// `"forward:<reason>; backward:<reason>"`, or empty when nothing was censored.
    pub fn censored_reason(&self) -> alloc::string::String {
        let mut parts = Vec::new();
        if let Some(c) = self.forward_censor {
            parts.push(alloc::format!("forward:{}", c.label()));
        }
        if let Some(c) = self.backward_censor {
            parts.push(alloc::format!("backward:{}", c.label()));
        }
        parts.join("; ")
    }
}

struct Center {
    value: f64,
    theta: f64,
    domain: DomainBox,
}

fn center(
    sol: &GridSolution,
    x0: &[f64],
    t0: f64,
    c: f64,
    opts: &HarnackOptions,
) -> Result<Center, HarnackError> {
    let value = eval_at(sol, x0, t0)?;
    let floor = opts.threshold_rel * sol.max_value();
    if !(value > 0.0) || value < floor {
        return Err(HarnackError::BelowThreshold { value, floor });
    }
    let domain = opts.domain_for(sol)?;
    Ok(Center { value, theta: c / value, domain })
}

fn require_fit(
    point: &SpaceTimePoint,
    rho: f64,
    theta: f64,
    kind: CylinderKind,
    p: &PowerVector,
    opts: &HarnackOptions,
    domain: &DomainBox,
) -> Result<(), HarnackError> {
    let radius = opts.containment_factor * rho;
    let cyl = IntrinsicCylinder::new(point.clone(), radius, theta, kind, p)?;
    if cylinder_fits(&cyl, domain) {
        Ok(())
    } else {
        Err(HarnackError::NotContained { radius })
    }
}

fn fits_four_rho(point: &SpaceTimePoint, rho: f64, theta: f64, p: &PowerVector, dom: &DomainBox) -> bool {
    IntrinsicCylinder::new(point.clone(), 4.0 * rho, theta, CylinderKind::Centered, p)
        .map(|c| cylinder_fits(&c, dom))
        .unwrap_or(false)
}

fn forward_extremum(
    sol: &GridSolution,
    point: &SpaceTimePoint,
    rho: f64,
    theta: f64,
) -> Result<f64, HarnackError> {
    let cyl = IntrinsicCylinder::new(point.clone(), rho, theta, CylinderKind::Forward, sol.p())?;
    let values = cube_values(sol, &cyl, point.t + cyl.time_length)?;
    let inf = values.iter().copied().fold(f64::INFINITY, f64::min);
    if !(inf > 0.0) {
        return Err(HarnackError::InfimumZero);
    }
    Ok(inf)
}

fn backward_extremum(
    sol: &GridSolution,
    point: &SpaceTimePoint,
    rho: f64,
    theta: f64,
) -> Result<f64, HarnackError> {
    let cyl = IntrinsicCylinder::new(point.clone(), rho, theta, CylinderKind::Backward, sol.p())?;
    let values = cube_values(sol, &cyl, point.t - cyl.time_length)?;
    Ok(values.iter().copied().fold(f64::NEG_INFINITY, f64::max))
}

/// Forward ratio `u(x_0, t_0) / inf_{x_0 + K_ρ(θ)} u(·, t_0 + θ^{2-p̄} ρ^{p̄})`.
pub fn forward_ratio(
    sol: &GridSolution,
    x0: &[f64],
    t0: f64,
    rho: f64,
    c: f64,
    opts: &HarnackOptions,
) -> Result<HarnackSample, HarnackError> {
    let ctr = center(sol, x0, t0, c, opts)?;
    let point = SpaceTimePoint::new(x0.to_vec(), t0);
    require_fit(&point, rho, ctr.theta, CylinderKind::Forward, sol.p(), opts, &ctr.domain)?;
    let inf = forward_extremum(sol, &point, rho, ctr.theta)?;
    let mut s = HarnackSample::empty(point, ctr.value, rho, c);
    s.fits_domain = fits_four_rho(&s.point, rho, ctr.theta, sol.p(), &ctr.domain);
    s.forward_inf = Some(inf);
    s.forward_ratio = Some(ctr.value / inf);
    Ok(s)
}

/// Backward ratio `sup_{x_0 + K_ρ(θ)} u(·, t_0 - θ^{2-p̄} ρ^{p̄}) / u(x_0, t_0)`.
pub fn backward_ratio(
    sol: &GridSolution,
    x0: &[f64],
    t0: f64,
    rho: f64,
    c: f64,
    opts: &HarnackOptions,
) -> Result<HarnackSample, HarnackError> {
    let ctr = center(sol, x0, t0, c, opts)?;
    let point = SpaceTimePoint::new(x0.to_vec(), t0);
    require_fit(&point, rho, ctr.theta, CylinderKind::Backward, sol.p(), opts, &ctr.domain)?;
    let sup = backward_extremum(sol, &point, rho, ctr.theta)?;
    let mut s = HarnackSample::empty(point, ctr.value, rho, c);
    s.fits_domain = fits_four_rho(&s.point, rho, ctr.theta, sol.p(), &ctr.domain);
    s.backward_sup = Some(sup);
    s.backward_ratio = Some(sup / ctr.value);
    Ok(s)
}

/// Both ratios at one center; censored directions are recorded, not raised.
/// Only a failure to evaluate the center itself is an error.
pub fn sample(
    sol: &GridSolution,
    x0: &[f64],
    t0: f64,
    rho: f64,
    c: f64,
    opts: &HarnackOptions,
) -> Result<HarnackSample, HarnackError> {
    let point = SpaceTimePoint::new(x0.to_vec(), t0);
    let ctr = match center(sol, x0, t0, c, opts) {
        Ok(ctr) => ctr,
        Err(e @ (HarnackError::BelowThreshold { .. } | HarnackError::OutOfHull)) => {
            let value = eval_at(sol, x0, t0).unwrap_or(0.0);
            let mut s = HarnackSample::empty(point, value, rho, c);
            s.forward_censor = Censor::from_error(&e);
            s.backward_censor = s.forward_censor;
            return Ok(s);
        }
        Err(e) => return Err(e),
    };
    let mut s = HarnackSample::empty(point, ctr.value, rho, c);
    s.fits_domain = fits_four_rho(&s.point, rho, ctr.theta, sol.p(), &ctr.domain);

    let fwd = require_fit(&s.point, rho, ctr.theta, CylinderKind::Forward, sol.p(), opts, &ctr.domain)
        .and_then(|_| forward_extremum(sol, &s.point, rho, ctr.theta));
    match fwd {
        Ok(inf) => {
            s.forward_inf = Some(inf);
            s.forward_ratio = Some(ctr.value / inf);
        }
        Err(e) => s.forward_censor = Some(Censor::from_error(&e).ok_or(e)?),
    }
    let bwd = require_fit(&s.point, rho, ctr.theta, CylinderKind::Backward, sol.p(), opts, &ctr.domain)
        .and_then(|_| backward_extremum(sol, &s.point, rho, ctr.theta));
    match bwd {
        Ok(sup) => {
            s.backward_sup = Some(sup);
            s.backward_ratio = Some(sup / ctr.value);
        }
        Err(e) => s.backward_censor = Some(Censor::from_error(&e).ok_or(e)?),
    }
    Ok(s)
}

/// `γ⁻¹ sup u(·, t_0 - θ^{2-p̄}ρ^{p̄}) ≤ u(x_0, t_0) ≤ γ inf u(·, t_0 + θ^{2-p̄}ρ^{p̄})`,
/// with extrema over `x_0 + K_ρ(θ)`. The centered cylinder of radius
/// `containment_factor · ρ` must lie in the domain.
pub fn two_sided_check(
    sol: &GridSolution,
    x0: &[f64],
    t0: f64,
    rho: f64,
    c: f64,
    gamma: f64,
    opts: &HarnackOptions,
) -> Result<bool, HarnackError> {
    let ctr = center(sol, x0, t0, c, opts)?;
    let point = SpaceTimePoint::new(x0.to_vec(), t0);
    require_fit(&point, rho, ctr.theta, CylinderKind::Centered, sol.p(), opts, &ctr.domain)?;
    let inf = forward_extremum(sol, &point, rho, ctr.theta)?;
    let sup = backward_extremum(sol, &point, rho, ctr.theta)?;
    Ok(sup <= gamma * ctr.value && ctr.value <= gamma * inf)
}

/// Constants of the two-sided estimate implied by a forward constant `γ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImpliedConstants {
    /// `2γ²`
    pub gamma_two_sided: f64,
    /// `(2γ)^{(p̄-2)/p̄}`, the factor relating the two radii.
    pub radius_rescale: f64,
}

pub fn implied_backward_constants(gamma: f64, p: &PowerVector) -> Result<ImpliedConstants, HarnackError> {
    if !(gamma >= 1.0) || !gamma.is_finite() {
        return Err(HarnackError::InvalidGamma(gamma));
    }
    let pbar = p.harmonic_mean();
    Ok(ImpliedConstants {
        gamma_two_sided: 2.0 * gamma * gamma,
        radius_rescale: powf(2.0 * gamma, (pbar - 2.0) / pbar),
    })
}

/// Centers at which to sample.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SampleSpec {
    pub points: Vec<SpaceTimePoint>,
}

impl SampleSpec {
    /// Every `stride`-th node along each axis, skipping the outermost layer,
    /// at each of `times`.
    pub fn lattice(grid: &Grid, stride: usize, times: &[f64]) -> Self {
        let stride = stride.max(1);
        let n = grid.dim();
        let axes: Vec<Vec<f64>> = (0..n)
            .map(|i| (1..grid.dims()[i] - 1).step_by(stride).map(|j| grid.coord(i, j)).collect())
            .collect();
        let mut points = Vec::new();
        let mut idx = vec![0usize; n];
        'outer: loop {
            let x: Vec<f64> = (0..n).map(|i| axes[i][idx[i]]).collect();
            for &t in times {
                points.push(SpaceTimePoint::new(x.clone(), t));
            }
            for i in (0..n).rev() {
                idx[i] += 1;
                if idx[i] < axes[i].len() {
                    continue 'outer;
                }
                idx[i] = 0;
            }
            break;
        }
        Self { points }
    }
}

/// Order statistics of a set of ratios.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quantiles {
    pub count: usize,
    pub min: f64,
    pub median: f64,
    pub q90: f64,
    pub max: f64,
}

impl Quantiles {
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let mut v = values.to_vec();
        v.sort_by(|a, b| a.total_cmp(b));
        let at = |q: f64| v[crate::math::ceil(q * (v.len() - 1) as f64) as usize];
        Some(Self { count: v.len(), min: v[0], median: at(0.5), q90: at(0.9), max: v[v.len() - 1] })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RhoSummary {
    pub rho: f64,
    pub gamma_forward: Option<f64>,
    pub gamma_backward: Option<f64>,
    pub forward: Option<Quantiles>,
    pub backward: Option<Quantiles>,
}

/// Outcome of a sweep at one value of `c`.
#[derive(Debug, Clone, PartialEq)]
pub struct HarnackReport {
    pub samples: Vec<HarnackSample>,
    /// Maximum forward ratio over uncensored samples.
    pub gamma_forward: Option<f64>,
    /// Maximum backward ratio over uncensored samples.
    pub gamma_backward: Option<f64>,
    pub c_used: f64,
    pub rho_list: Vec<f64>,
    pub sample_count: usize,
    pub threshold_rel: f64,
    pub containment_factor: f64,
    /// Censoring counts per direction and reason, keyed `forward:<reason>` / `backward:<reason>`.
    pub censored: BTreeMap<alloc::string::String, usize>,
    pub per_rho: Vec<RhoSummary>,
}

impl HarnackReport {
    pub fn admissible_forward(&self) -> usize {
        self.samples.iter().filter(|s| s.forward_ratio.is_some()).count()
    }

    pub fn admissible_backward(&self) -> usize {
        self.samples.iter().filter(|s| s.backward_ratio.is_some()).count()
    }
}

fn max_of(values: impl Iterator<Item = f64>) -> Option<f64> {
    values.fold(None, |m, v| Some(m.map_or(v, |m: f64| m.max(v))))
}

/// Forward and backward ratios over every `(center, ρ)` pair.
pub fn estimate_constants(
    sol: &GridSolution,
    spec: &SampleSpec,
    rho_list: &[f64],
    c: f64,
    opts: &HarnackOptions,
) -> Result<HarnackReport, HarnackError> {
    let mut samples = Vec::with_capacity(spec.points.len() * rho_list.len());
    for &rho in rho_list {
        for pt in &spec.points {
            samples.push(sample(sol, &pt.x, pt.t, rho, c, opts)?);
        }
    }
    if samples.iter().all(|s| s.forward_ratio.is_none() && s.backward_ratio.is_none()) {
        return Err(HarnackError::EmptyReport);
    }
    let mut censored = BTreeMap::new();
    for s in &samples {
        if let Some(c) = s.forward_censor {
            *censored.entry(alloc::format!("forward:{}", c.label())).or_insert(0) += 1;
        }
        if let Some(c) = s.backward_censor {
            *censored.entry(alloc::format!("backward:{}", c.label())).or_insert(0) += 1;
        }
    }
    let per_rho = rho_list
        .iter()
        .map(|&rho| {
            let fwd: Vec<f64> =
                samples.iter().filter(|s| s.rho == rho).filter_map(|s| s.forward_ratio).collect();
            let bwd: Vec<f64> =
                samples.iter().filter(|s| s.rho == rho).filter_map(|s| s.backward_ratio).collect();
            RhoSummary {
                rho,
                gamma_forward: max_of(fwd.iter().copied()),
                gamma_backward: max_of(bwd.iter().copied()),
                forward: Quantiles::of(&fwd),
                backward: Quantiles::of(&bwd),
            }
        })
        .collect();
    Ok(HarnackReport {
        gamma_forward: max_of(samples.iter().filter_map(|s| s.forward_ratio)),
        gamma_backward: max_of(samples.iter().filter_map(|s| s.backward_ratio)),
        sample_count: samples.len(),
        samples,
        c_used: c,
        rho_list: rho_list.to_vec(),
        threshold_rel: opts.threshold_rel,
        containment_factor: opts.containment_factor,
        censored,
        per_rho,
    })
}

/// Default sweep over `c`.
pub const DEFAULT_C_SWEEP: [f64; 5] = [0.25, 0.5, 1.0, 2.0, 4.0];
