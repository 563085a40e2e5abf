//! Oscillation decay over nested intrinsic cylinders and intrinsic Hölder seminorms.
//!
//! Starting from an oscillation `ω_0` on a cylinder of radius `ρ_0`, the
//! iteration sets `ω_n = δ ω_{n-1}`, `ρ_n = ε ρ_{n-1}` and `θ_n = c / ω_n` with
//!
//! ```text
//! δ = 1 - 1/(4γ),    ε = δ^{(p̄-2)/p̄} / 4,
//! ```
//!
//! so that the measured oscillation should satisfy `osc_{Q_n} u ≤ δⁿ ω_0`. The
//! resulting Hölder exponent is `α = |ln δ| / |ln ε|`.

use alloc::vec;
use alloc::vec::Vec;
use thiserror::Error;

use crate::geometry::{
    intrinsic_distance, pi_distance, spatial_weight, temporal_weight, CylinderKind, DomainBox,
    GeometryError, IntrinsicCylinder, PowerVector, SpaceTimeBox, SpaceTimePoint, TimeInterval,
};
use crate::harnack::{eval_at, HarnackError};
use crate::math::{ln, powf};
use crate::solver::{stable_dt, step, GridSolution, SolverConfig, SolverError};

/// Relative tolerance for the algebraic nesting checks.
pub const NESTING_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HoelderError {
    #[error("Harnack constant must exceed 1, got {0}")]
    InvalidGamma(f64),
    #[error("invalid iteration parameter: {0}")]
    InvalidParameter(&'static str),
    #[error("nesting violated at step {step}: {what}")]
    NestingViolated { step: usize, what: &'static str },
    #[error("cylinder contains no grid node at any snapshot time")]
    EmptyIntersection,
    #[error("arguments must lie in (0, 1), got δ = {delta}, ε = {eps}")]
    OutOfUnitInterval { delta: f64, eps: f64 },
    #[error("need at least 3 rows above the noise floor, found {0}")]
    InsufficientRows(usize),
    #[error("Hölder exponent must lie in (0, 1), got {0}")]
    InvalidAlpha(f64),
    #[error("weight M = {m} is below the sup norm {sup}")]
    WeightBelowSupNorm { m: f64, sup: f64 },
    #[error("box is degenerate or leaves the data hull")]
    DegenerateBox,
    #[error("π-distance to the boundary is zero")]
    ZeroPiDistance,
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Harnack(#[from] HarnackError),
    #[error(transparent)]
    Solver(#[from] SolverError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationParams {
    pub omega0: f64,
    pub rho0: f64,
    pub c: f64,
    pub gamma: f64,
    pub n_max: usize,
}

impl IterationParams {
    /// `1 - 1/(4γ)`
    pub fn delta(&self) -> f64 {
        1.0 - 1.0 / (4.0 * self.gamma)
    }

    /// `δ^{(p̄-2)/p̄} / 4`
    pub fn eps(&self, p: &PowerVector) -> f64 {
        let pbar = p.harmonic_mean();
        0.25 * powf(self.delta(), (pbar - 2.0) / pbar)
    }

    fn validate(&self) -> Result<(), HoelderError> {
        if !(self.gamma > 1.0) || !self.gamma.is_finite() {
            return Err(HoelderError::InvalidGamma(self.gamma));
        }
        if !(self.rho0 > 0.0 && self.rho0.is_finite()) {
            return Err(HoelderError::InvalidParameter("rho0 must be positive"));
        }
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(HoelderError::InvalidParameter("c must be positive"));
        }
        if !(self.omega0 >= 0.0 && self.omega0.is_finite()) {
            return Err(HoelderError::InvalidParameter("omega0 must be nonnegative"));
        }
        Ok(())
    }
}

/// Nested backward cylinders `Q_n` with apex at a fixed point.
#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    pub cylinders: Vec<IntrinsicCylinder>,
    /// `ω_n` for each cylinder; in the trivial case `max(ω_0, c ρ_0)`.
    pub omegas: Vec<f64>,
    /// `ω_0 ≤ c ρ_0`: the oscillation is already controlled and no iteration is run.
    pub already_continuous: bool,
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs())
}

/// Builds `Q_0, …, Q_{n_max}` and checks the nesting relations between
/// consecutive members.
///
/// Two families of checks are made. The algebraic relations
/// `θ_{n+1}^{p̄-2} ρ_{n+1}^{p̄} = θ_n^{p̄-2} (ρ_n/4)^{p̄}` and
/// `θ_{n+1}^{(p̄-p_i)/p_i} ρ_{n+1}^{p̄/p_i} ≤ θ_n^{(p̄-p_i)/p_i} (ρ_n/4)^{p̄/p_i}`
/// are verified as written; independently, each returned cylinder must lie
/// inside its predecessor. In the trivial case `ω_0 ≤ c ρ_0` a single cylinder
/// with `θ_0 = c / max(ω_0, c ρ_0)` is returned.
pub fn iteration_schedule(
    params: &IterationParams,
    p: &PowerVector,
    apex: &SpaceTimePoint,
) -> Result<Schedule, HoelderError> {
    params.validate()?;
    let IterationParams { omega0, rho0, c, .. } = *params;
    if omega0 <= c * rho0 {
        let theta = c / omega0.max(c * rho0);
        let q0 = IntrinsicCylinder::new(apex.clone(), rho0, theta, CylinderKind::Backward, p)?;
        return Ok(Schedule { cylinders: vec![q0], omegas: vec![c / theta], already_continuous: true });
    }

    let delta = params.delta();
    let eps = params.eps(p);
    let pbar = p.harmonic_mean();
    let mut omegas = Vec::with_capacity(params.n_max + 1);
    let mut radii = Vec::with_capacity(params.n_max + 1);
    let (mut omega, mut rho) = (omega0, rho0);
    for _ in 0..=params.n_max {
        omegas.push(omega);
        radii.push(rho);
        omega *= delta;
        rho *= eps;
    }
    let mut cylinders = Vec::with_capacity(omegas.len());
    for (&w, &r) in omegas.iter().zip(&radii) {
        cylinders.push(IntrinsicCylinder::new(apex.clone(), r, c / w, CylinderKind::Backward, p)?);
    }

    for n in 0..params.n_max {
        let (theta_n, theta_next) = (c / omegas[n], c / omegas[n + 1]);
        let (rho_n, rho_next) = (radii[n], radii[n + 1]);
        let lhs = powf(theta_next, pbar - 2.0) * powf(rho_next, pbar);
        let rhs = powf(theta_n, pbar - 2.0) * powf(rho_n / 4.0, pbar);
        if !close(lhs, rhs, NESTING_TOLERANCE) {
            return Err(HoelderError::NestingViolated { step: n, what: "time identity" });
        }
        for &pi in p.exponents() {
            let e = (pbar - pi) / pi;
            let lhs = powf(theta_next, e) * powf(rho_next, pbar / pi);
            let rhs = powf(theta_n, e) * powf(rho_n / 4.0, pbar / pi);
            if lhs > rhs * (1.0 + NESTING_TOLERANCE) {
                return Err(HoelderError::NestingViolated { step: n, what: "axis inequality" });
            }
        }
        if !cylinders[n + 1].is_within(&cylinders[n], NESTING_TOLERANCE) {
            return Err(HoelderError::NestingViolated { step: n, what: "cylinder inclusion" });
        }
    }
    Ok(Schedule { cylinders, omegas, already_continuous: false })
}

/// Sup minus inf of `u` over the nodes in the closed box `[lo, hi]` and the
/// snapshot times in `interval`.
fn oscillation_in(
    sol: &GridSolution,
    lo: &[f64],
    hi: &[f64],
    interval: &TimeInterval,
) -> Result<f64, HoelderError> {
    let grid = sol.grid();
    let n = grid.dim();
    let mut ranges = Vec::with_capacity(n);
    for i in 0..n {
        ranges.push(grid.index_range(i, lo[i], hi[i]).ok_or(HoelderError::EmptyIntersection)?);
    }
    let snaps: Vec<usize> = (0..sol.times().len()).filter(|&k| interval.contains(sol.times()[k])).collect();
    if snaps.is_empty() {
        return Err(HoelderError::EmptyIntersection);
    }
    let (mut sup, mut inf) = (f64::NEG_INFINITY, f64::INFINITY);
    for &k in &snaps {
        let u = sol.field(k);
        let mut multi: Vec<usize> = ranges.iter().map(|r| r.0).collect();
        'walk: loop {
            let v = u[grid.flat_index(&multi)];
            sup = sup.max(v);
            inf = inf.min(v);
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
    Ok(sup - inf)
}

/// `osc_{cyl} u` over grid nodes and snapshot times inside the cylinder.
pub fn oscillation(sol: &GridSolution, cyl: &IntrinsicCylinder) -> Result<f64, HoelderError> {
    let (lo, hi) = cyl.cube_bounds();
    oscillation_in(sol, &lo, &hi, &cyl.time_interval())
}

/// `ω_0` measured on `Q_0` itself.
///
/// `Q_0` depends on `ω_0` through `θ_0 = c/ω_0`; the value is found by fixed-point
/// iteration started from the oscillation on the unscaled cylinder
/// `{|x_i - x_{0,i}| ≤ ρ_0} × (t_0 - ρ_0², t_0]`. The discrete oscillation takes
/// finitely many values, so the iteration either settles or cycles; on a cycle
/// the largest value in it is returned.
pub fn measure_omega0(
    sol: &GridSolution,
    apex: &SpaceTimePoint,
    rho0: f64,
    c: f64,
) -> Result<f64, HoelderError> {
    let lo: Vec<f64> = apex.x.iter().map(|x| x - rho0).collect();
    let hi: Vec<f64> = apex.x.iter().map(|x| x + rho0).collect();
    let interval = TimeInterval { lower: apex.t - rho0 * rho0, upper: apex.t, lower_closed: false, upper_closed: true };
    let mut omega = oscillation_in(sol, &lo, &hi, &interval)?;
    let mut seen = vec![omega];
    for _ in 0..64 {
        if omega <= 0.0 {
            return Ok(0.0);
        }
        let q0 = IntrinsicCylinder::new(apex.clone(), rho0, c / omega, CylinderKind::Backward, sol.p())?;
        let next = oscillation(sol, &q0)?;
        if next == omega {
            return Ok(omega);
        }
        if let Some(start) = seen.iter().position(|&w| w == next) {
            return Ok(seen[start..].iter().copied().fold(next, f64::max));
        }
        seen.push(next);
        omega = next;
    }
    Ok(omega)
}

/// Resolution estimate for oscillation comparisons: ten times the largest nodewise
/// change produced by one stable solver step from the last snapshot.
pub fn resolution_noise_floor(sol: &GridSolution, cfg: &SolverConfig) -> Result<f64, HoelderError> {
    let u = sol.field(sol.times().len() - 1);
    let dt = stable_dt(u, sol.grid(), sol.p(), cfg);
    let v = step(u, dt, sol.grid(), sol.p(), cfg)?;
    let change = u.iter().zip(&v).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    Ok(10.0 * change)
}

#[derive(Debug, Clone, PartialEq)]
pub struct OscillationRow {
    pub n: usize,
    pub cylinder: IntrinsicCylinder,
    pub osc: f64,
    /// `δⁿ ω_0`
    pub bound: f64,
    pub pass: bool,
    /// Below the noise floor (or no node inside); counted as a pass.
    pub vacuous: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OscillationTrace {
    pub rows: Vec<OscillationRow>,
    pub alpha_fit: Option<f64>,
    pub alpha_formula: f64,
    pub gamma: f64,
    pub delta: f64,
    pub eps: f64,
    pub omega0: f64,
    pub noise_floor: f64,
    pub already_continuous: bool,
}

impl OscillationTrace {
    /// Assembles a trace from measured oscillations; `osc[n] = None` marks a
    /// cylinder without nodes.
    pub fn from_measurements(
        params: &IterationParams,
        p: &PowerVector,
        schedule: Schedule,
        osc: &[Option<f64>],
        noise_floor: f64,
    ) -> Result<Self, HoelderError> {
        let delta = params.delta();
        let eps = params.eps(p);
        let rows: Vec<OscillationRow> = schedule
            .cylinders
            .into_iter()
            .zip(osc)
            .enumerate()
            .map(|(n, (cylinder, o))| {
                let bound = schedule.omegas[n];
                let value = o.unwrap_or(0.0);
                let vacuous = o.is_none() || value < noise_floor;
                let pass = vacuous || value <= bound * (1.0 + NESTING_TOLERANCE);
                OscillationRow { n, cylinder, osc: value, bound, pass, vacuous }
            })
            .collect();
        let mut trace = Self {
            rows,
            alpha_fit: None,
            alpha_formula: alpha_formula(delta, eps)?,
            gamma: params.gamma,
            delta,
            eps,
            omega0: params.omega0,
            noise_floor,
            already_continuous: schedule.already_continuous,
        };
        trace.alpha_fit = fit_alpha(&trace).ok();
        Ok(trace)
    }

    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }
}

/// Measures `osc_{Q_n} u` along the schedule and compares with `δⁿ ω_0`.
pub fn decay_check(
    sol: &GridSolution,
    apex: &SpaceTimePoint,
    params: &IterationParams,
    noise_floor: f64,
) -> Result<OscillationTrace, HoelderError> {
    let p = sol.p();
    let schedule = iteration_schedule(params, p, apex)?;
    let q0 = &schedule.cylinders[0];
    let dom = sol.domain()?;
    let (lo, hi) = q0.cube_bounds();
    let ti = q0.time_interval();
    let inside = (0..p.dim()).all(|i| lo[i] >= dom.lower[i] && hi[i] <= dom.upper[i])
        && ti.lower >= sol.times()[0];
    if !inside {
        return Err(HoelderError::DegenerateBox);
    }
    let mut osc = Vec::with_capacity(schedule.cylinders.len());
    for cyl in &schedule.cylinders {
        match oscillation(sol, cyl) {
            Ok(v) => osc.push(Some(v)),
            Err(HoelderError::EmptyIntersection) => osc.push(None),
            Err(e) => return Err(e),
        }
    }
    OscillationTrace::from_measurements(params, p, schedule, &osc, noise_floor)
}

/// `|ln δ| / |ln ε|`
pub fn alpha_formula(delta: f64, eps: f64) -> Result<f64, HoelderError> {
    let unit = |v: f64| v > 0.0 && v < 1.0;
    if !unit(delta) || !unit(eps) {
        return Err(HoelderError::OutOfUnitInterval { delta, eps });
    }
    Ok(ln(delta).abs() / ln(eps).abs())
}

/// Least-squares slope of `ln osc_n` against `ln ρ_n` over the non-vacuous rows.
pub fn fit_alpha(trace: &OscillationTrace) -> Result<f64, HoelderError> {
    let pts: Vec<(f64, f64)> = trace
        .rows
        .iter()
        .filter(|r| !r.vacuous && r.osc > 0.0)
        .map(|r| (ln(r.cylinder.rho), ln(r.osc)))
        .collect();
    if pts.len() < 3 {
        return Err(HoelderError::InsufficientRows(pts.len()));
    }
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    Ok(sxy / sxx)
}

fn primes(count: usize) -> Vec<u64> {
    let mut out = Vec::with_capacity(count);
    let mut k = 2u64;
    while out.len() < count {
        if out.iter().take_while(|&&q| q * q <= k).all(|&q| !k.is_multiple_of(q)) {
            out.push(k);
        }
        k += 1;
    }
    out
}

fn radical_inverse(mut index: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut r = 0.0;
    while index > 0 {
        r += f * (index % base) as f64;
        index /= base;
        f *= inv;
    }
    r
}

/// Halton points in `[0, 1)^dim`; the first `n` points do not depend on the total
/// count, so budgets are nested.
struct Halton {
    bases: Vec<u64>,
    index: u64,
}

impl Halton {
    fn new(dim: usize, seed: u64) -> Self {
        Self { bases: primes(dim), index: seed.wrapping_add(1) }
    }

    fn next_into(&mut self, out: &mut [f64]) {
        for (slot, &b) in out.iter_mut().zip(&self.bases) {
            *slot = radical_inverse(self.index, b);
        }
        self.index += 1;
    }
}

fn check_box(sol: &GridSolution, k: &SpaceTimeBox) -> Result<(), HoelderError> {
    let (lo, hi) = sol.grid().node_hull();
    let times = sol.times();
    if k.dim() != lo.len() {
        return Err(HoelderError::DegenerateBox);
    }
    let inside = (0..lo.len()).all(|i| k.lower[i] >= lo[i] && k.upper[i] <= hi[i])
        && k.t_lower >= times[0]
        && k.t_upper <= times[times.len() - 1];
    if inside {
        Ok(())
    } else {
        Err(HoelderError::DegenerateBox)
    }
}

fn check_weight(sol: &GridSolution, m: f64) -> Result<(), HoelderError> {
    let sup = sol.max_abs();
    if !(m >= sup) || !(m > 0.0) {
        return Err(HoelderError::WeightBelowSupNorm { m, sup });
    }
    Ok(())
}

fn check_alpha(alpha: f64) -> Result<(), HoelderError> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(HoelderError::InvalidAlpha(alpha))
    }
}

fn lerp_point(k: &SpaceTimeBox, unit: &[f64]) -> SpaceTimePoint {
    let n = k.dim();
    let x = (0..n).map(|i| k.lower[i] + unit[i] * (k.upper[i] - k.lower[i])).collect();
    SpaceTimePoint::new(x, k.t_lower + unit[n] * (k.t_upper - k.t_lower))
}

/// `max |u(a) - u(b)| / d(a, b)^α` over `pair_budget` Halton pairs in `k`, with
/// `d` the intrinsic distance weighted by `M`.
pub fn hoelder_seminorm(
    sol: &GridSolution,
    k: &SpaceTimeBox,
    alpha: f64,
    m: f64,
    pair_budget: usize,
    seed: u64,
) -> Result<f64, HoelderError> {
    check_box(sol, k)?;
    check_alpha(alpha)?;
    check_weight(sol, m)?;
    let n = k.dim();
    let mut halton = Halton::new(2 * (n + 1), seed);
    let mut unit = vec![0.0; 2 * (n + 1)];
    let mut best = 0.0f64;
    for _ in 0..pair_budget {
        halton.next_into(&mut unit);
        let a = lerp_point(k, &unit[..=n]);
        let b = lerp_point(k, &unit[n + 1..]);
        let d = intrinsic_distance(&a, &b, m, sol.p())?;
        if d == 0.0 {
            continue;
        }
        let du = (eval_at(sol, &a.x, a.t)? - eval_at(sol, &b.x, b.t)?).abs();
        best = best.max(du / powf(d, alpha));
    }
    Ok(best)
}

/// Worst `bound - |Δu|` over the pairs that fell in one branch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Slack {
    pub worst: f64,
    pub pairs: usize,
}

impl Slack {
    fn record(slot: &mut Option<Slack>, slack: f64) {
        match slot {
            Some(s) => {
                s.worst = s.worst.min(slack);
                s.pairs += 1;
            }
            None => *slot = Some(Slack { worst: slack, pairs: 1 }),
        }
    }
}

/// Small-separation branch (`γ M (d/π)^α`) and large-separation branch
/// (`4 M (d/π)^α`) for one variable.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BranchSlack {
    pub small: Option<Slack>,
    pub large: Option<Slack>,
}

impl BranchSlack {
    pub fn pass(&self) -> bool {
        [self.small, self.large].iter().flatten().all(|s| s.worst >= 0.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerVariableReport {
    pub axes: Vec<BranchSlack>,
    pub time: BranchSlack,
    pub pi_distance: f64,
    /// `R = π-dist / 2`
    pub r: f64,
}

impl PerVariableReport {
    pub fn pass(&self) -> bool {
        self.axes.iter().all(BranchSlack::pass) && self.time.pass()
    }
}

/// Checks the one-variable Hölder bounds on pairs that differ in a single
/// coordinate (or only in time). A spatial pair along axis `i` is in the small
/// branch when `|y_i - x_i| < M^{(p_i-p̄)/p_i} R^{p̄/p_i}`, a time pair when
/// `|s - t| < M^{2-p̄} R^{p̄}`.
#[allow(clippy::too_many_arguments)]
pub fn per_variable_hoelder_check(
    sol: &GridSolution,
    k: &SpaceTimeBox,
    dom: &DomainBox,
    alpha: f64,
    m: f64,
    gamma: f64,
    pair_budget: usize,
    seed: u64,
) -> Result<PerVariableReport, HoelderError> {
    check_box(sol, k)?;
    check_alpha(alpha)?;
    check_weight(sol, m)?;
    let p = sol.p();
    let pd = pi_distance(k, dom, m, p)?;
    if pd.degenerate || !(pd.value > 0.0) {
        return Err(HoelderError::ZeroPiDistance);
    }
    let r = 0.5 * pd.value;
    let pbar = p.harmonic_mean();
    let n = k.dim();

    let mut halton = Halton::new(n + 2, seed);
    let mut unit = vec![0.0; n + 2];
    let mut axes = vec![BranchSlack::default(); n];
    let mut time = BranchSlack::default();

    for _ in 0..pair_budget {
        halton.next_into(&mut unit);
        let a = lerp_point(k, &unit[..=n]);
        let ua = eval_at(sol, &a.x, a.t)?;
        let other = unit[n + 1];
        for (axis, slot) in axes.iter_mut().enumerate() {
            let mut b = a.clone();
            b.x[axis] = k.lower[axis] + other * (k.upper[axis] - k.lower[axis]);
            let d = (b.x[axis] - a.x[axis]).abs();
            let du = (eval_at(sol, &b.x, b.t)? - ua).abs();
            let pi = p.get(axis);
            let threshold = powf(m, (pi - pbar) / pi) * powf(r, pbar / pi);
            let scaled = powf(spatial_weight(p, axis, d, m) / pd.value, alpha);
            if d < threshold {
                Slack::record(&mut slot.small, gamma * m * scaled - du);
            } else {
                Slack::record(&mut slot.large, 4.0 * m * scaled - du);
            }
        }
        let mut b = a.clone();
        b.t = k.t_lower + other * (k.t_upper - k.t_lower);
        let d = (b.t - a.t).abs();
        let du = (eval_at(sol, &b.x, b.t)? - ua).abs();
        let threshold = powf(m, 2.0 - pbar) * powf(r, pbar);
        let scaled = powf(temporal_weight(p, d, m) / pd.value, alpha);
        if d < threshold {
            Slack::record(&mut time.small, gamma * m * scaled - du);
        } else {
            Slack::record(&mut time.large, 4.0 * m * scaled - du);
        }
    }
    Ok(PerVariableReport { axes, time, pi_distance: pd.value, r })
}
