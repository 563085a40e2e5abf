//! Exponent arithmetic and the intrinsic anisotropic geometry.
//!
//! Throughout, `θ` is stored unexponentiated. A cube `K_ρ(θ)` has per-axis
//! halfwidths `θ^{(p_i - p̄)/p_i} ρ^{p̄/p_i}` and an intrinsic cylinder attaches a
//! time interval of length `θ^{2 - p̄} ρ^{p̄}` to it.

use alloc::vec::Vec;
use thiserror::Error;

use crate::math::{powf, sqrt};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("exponent vector is empty")]
    EmptyExponents,
    #[error("exponent p_{index} = {value} is not a finite number >= 2")]
    ExponentBelowTwo { index: usize, value: f64 },
    #[error("exponents must be given in nondecreasing order (p_{index} < p_{prev})", prev = .index - 1)]
    Unsorted { index: usize },
    #[error("supercritical: p̄ ≥ N (p̄ = {pbar}, N = {n})")]
    Supercritical { pbar: f64, n: usize },
    #[error("radius must be positive, got {0}")]
    NonPositiveRadius(f64),
    #[error("intrinsic parameter θ must be positive, got {0}")]
    NonPositiveTheta(f64),
    #[error("sup-norm weight M must be positive, got {0}")]
    NonPositiveWeight(f64),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("box is empty along axis {0}")]
    EmptyBox(usize),
    #[error("set is not contained in the domain")]
    NotInside,
}

/// The exponent vector `p = (p_1, …, p_N)`.
///
/// Entries are at least 2 and nondecreasing. `p_i = 2` is allowed so that the
/// heat equation can serve as an exact reference; [`PowerVector::is_degenerate`]
/// tells whether every exponent is strictly above 2.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerVector {
    p: Vec<f64>,
    pbar: f64,
}

/// Outcome of [`PowerVector::conditions`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Conditions {
    /// every `p_i > 2`
    pub degenerate_ok: bool,
    /// every `p_i < p̄ (1 + 2/N)`
    pub bounded_ok: bool,
    /// `p̄ < N`
    pub subcritical_ok: bool,
}

impl PowerVector {
    pub fn new(p: Vec<f64>) -> Result<Self, GeometryError> {
        if p.is_empty() {
            return Err(GeometryError::EmptyExponents);
        }
        for (index, &value) in p.iter().enumerate() {
            if !value.is_finite() || value < 2.0 {
                return Err(GeometryError::ExponentBelowTwo { index, value });
            }
            if index > 0 && value < p[index - 1] {
                return Err(GeometryError::Unsorted { index });
            }
        }
        let pbar = harmonic_mean_of(&p);
        Ok(Self { p, pbar })
    }

    /// All axes share the exponent `value`.
    pub fn isotropic(value: f64, n: usize) -> Result<Self, GeometryError> {
        Self::new(alloc::vec![value; n])
    }

    pub fn dim(&self) -> usize {
        self.p.len()
    }

    pub fn exponents(&self) -> &[f64] {
        &self.p
    }

    pub fn get(&self, axis: usize) -> f64 {
        self.p[axis]
    }

    /// `p̄ = (N⁻¹ Σ 1/p_i)⁻¹`
    pub fn harmonic_mean(&self) -> f64 {
        self.pbar
    }

    /// `p̄* = N p̄ / (N - p̄)`, defined only when `p̄ < N`.
    pub fn sobolev_exponent(&self) -> Result<f64, GeometryError> {
        let n = self.dim() as f64;
        if self.pbar >= n {
            return Err(GeometryError::Supercritical { pbar: self.pbar, n: self.dim() });
        }
        Ok(n * self.pbar / (n - self.pbar))
    }

    pub fn conditions(&self) -> Conditions {
        let n = self.dim() as f64;
        let bound = self.pbar * (1.0 + 2.0 / n);
        Conditions {
            degenerate_ok: self.is_degenerate(),
            bounded_ok: self.p.iter().all(|&pi| pi < bound),
            subcritical_ok: self.pbar < n,
        }
    }

    pub fn is_degenerate(&self) -> bool {
        self.p.iter().all(|&pi| pi > 2.0)
    }

    pub fn is_isotropic(&self) -> bool {
        self.p.iter().all(|&pi| pi == self.p[0])
    }

    /// Halfwidth of `K_ρ(θ)` along `axis`.
    pub fn halfwidth(&self, axis: usize, rho: f64, theta: f64) -> f64 {
        let pi = self.p[axis];
        let pbar = self.pbar;
        if pi == pbar {
            return rho;
        }
        powf(theta, (pi - pbar) / pi) * powf(rho, pbar / pi)
    }

    /// Intrinsic waiting time `θ^{2 - p̄} ρ^{p̄}`.
    pub fn time_length(&self, rho: f64, theta: f64) -> f64 {
        let pbar = self.pbar;
        if pbar == 2.0 {
            return rho * rho;
        }
        powf(theta, 2.0 - pbar) * powf(rho, pbar)
    }
}

fn harmonic_mean_of(p: &[f64]) -> f64 {
    if p.iter().all(|&pi| pi == p[0]) {
        return p[0];
    }
    let n = p.len() as f64;
    let inv: f64 = p.iter().map(|&pi| 1.0 / pi).sum();
    n / inv
}

/// `p̄` of `p`; see [`PowerVector::harmonic_mean`].
pub fn harmonic_mean(p: &PowerVector) -> f64 {
    p.harmonic_mean()
}

/// `p̄*` of `p`; see [`PowerVector::sobolev_exponent`].
pub fn sobolev_exponent(p: &PowerVector) -> Result<f64, GeometryError> {
    p.sobolev_exponent()
}

pub fn check_conditions(p: &PowerVector) -> Conditions {
    p.conditions()
}

/// A point `(x, t)` of space-time.
#[derive(Debug, Clone, PartialEq)]
pub struct SpaceTimePoint {
    pub x: Vec<f64>,
    pub t: f64,
}

impl SpaceTimePoint {
    pub fn new(x: Vec<f64>, t: f64) -> Self {
        Self { x, t }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CylinderKind {
    Centered,
    Forward,
    Backward,
}

/// A time interval with per-end closedness.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeInterval {
    pub lower: f64,
    pub upper: f64,
    pub lower_closed: bool,
    pub upper_closed: bool,
}

impl TimeInterval {
    pub fn contains(&self, t: f64) -> bool {
        let above = if self.lower_closed { t >= self.lower } else { t > self.lower };
        let below = if self.upper_closed { t <= self.upper } else { t < self.upper };
        above && below
    }

    pub fn length(&self) -> f64 {
        self.upper - self.lower
    }
}

/// `(x_0, t_0) + Q_ρ(θ)` in centered, forward or backward orientation.
#[derive(Debug, Clone, PartialEq)]
pub struct IntrinsicCylinder {
    pub center: SpaceTimePoint,
    pub rho: f64,
    pub theta: f64,
    pub kind: CylinderKind,
    pub halfwidths: Vec<f64>,
    pub time_length: f64,
}

impl IntrinsicCylinder {
    pub fn new(
        center: SpaceTimePoint,
        rho: f64,
        theta: f64,
        kind: CylinderKind,
        p: &PowerVector,
    ) -> Result<Self, GeometryError> {
        if !(rho > 0.0 && rho.is_finite()) {
            return Err(GeometryError::NonPositiveRadius(rho));
        }
        if !(theta > 0.0 && theta.is_finite()) {
            return Err(GeometryError::NonPositiveTheta(theta));
        }
        if center.x.len() != p.dim() {
            return Err(GeometryError::DimensionMismatch { expected: p.dim(), got: center.x.len() });
        }
        let halfwidths = (0..p.dim()).map(|i| p.halfwidth(i, rho, theta)).collect();
        let time_length = p.time_length(rho, theta);
        Ok(Self { center, rho, theta, kind, halfwidths, time_length })
    }

    pub fn dim(&self) -> usize {
        self.halfwidths.len()
    }

    pub fn time_interval(&self) -> TimeInterval {
        let t0 = self.center.t;
        let l = self.time_length;
        match self.kind {
            CylinderKind::Centered => TimeInterval {
                lower: t0 - l,
                upper: t0 + l,
                lower_closed: false,
                upper_closed: false,
            },
            CylinderKind::Forward => TimeInterval {
                lower: t0,
                upper: t0 + l,
                lower_closed: true,
                upper_closed: false,
            },
            CylinderKind::Backward => TimeInterval {
                lower: t0 - l,
                upper: t0,
                lower_closed: false,
                upper_closed: true,
            },
        }
    }

    /// Lower and upper corners of the spatial cube.
    pub fn cube_bounds(&self) -> (Vec<f64>, Vec<f64>) {
        let lower = self.center.x.iter().zip(&self.halfwidths).map(|(c, h)| c - h).collect();
        let upper = self.center.x.iter().zip(&self.halfwidths).map(|(c, h)| c + h).collect();
        (lower, upper)
    }

    /// Membership in the closure of the cube. Sup and inf of a continuous
    /// function agree on an open cube and its closure.
    pub fn cube_closure_contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(&self.center.x)
            .zip(&self.halfwidths)
            .all(|((xi, ci), hi)| (xi - ci).abs() <= *hi)
    }

    /// Product of the side lengths, `Π 2 h_i`.
    pub fn cube_volume(&self) -> f64 {
        self.halfwidths.iter().map(|h| 2.0 * h).product()
    }

    /// The same cylinder at a different radius or orientation.
    pub fn with(&self, rho: f64, kind: CylinderKind, p: &PowerVector) -> Result<Self, GeometryError> {
        Self::new(self.center.clone(), rho, self.theta, kind, p)
    }

    /// `self ⊆ other` with relative slack `tol` on every bound.
    pub fn is_within(&self, other: &IntrinsicCylinder, tol: f64) -> bool {
        let (lo, hi) = self.cube_bounds();
        let (olo, ohi) = other.cube_bounds();
        let slack = |a: f64, b: f64| tol * a.abs().max(b.abs()).max(1.0);
        let space = (0..self.dim()).all(|i| {
            lo[i] >= olo[i] - slack(lo[i], olo[i]) && hi[i] <= ohi[i] + slack(hi[i], ohi[i])
        });
        let a = self.time_interval();
        let b = other.time_interval();
        space
            && a.lower >= b.lower - slack(a.lower, b.lower)
            && a.upper <= b.upper + slack(a.upper, b.upper)
    }
}

pub fn make_cylinder(
    center: SpaceTimePoint,
    rho: f64,
    theta: f64,
    kind: CylinderKind,
    p: &PowerVector,
) -> Result<IntrinsicCylinder, GeometryError> {
    IntrinsicCylinder::new(center, rho, theta, kind, p)
}

/// `Ω × (0, T)` for a rectangular `Ω`.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainBox {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub horizon: f64,
}

impl DomainBox {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>, horizon: f64) -> Result<Self, GeometryError> {
        if lower.len() != upper.len() {
            return Err(GeometryError::DimensionMismatch { expected: lower.len(), got: upper.len() });
        }
        for (i, (l, u)) in lower.iter().zip(&upper).enumerate() {
            if !(l < u) {
                return Err(GeometryError::EmptyBox(i));
            }
        }
        if !(horizon > 0.0) {
            return Err(GeometryError::EmptyBox(lower.len()));
        }
        Ok(Self { lower, upper, horizon })
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }
}

/// True iff the cube and the time interval of `cyl` lie strictly inside `dom`.
pub fn cylinder_fits(cyl: &IntrinsicCylinder, dom: &DomainBox) -> bool {
    if cyl.dim() != dom.dim() {
        return false;
    }
    let space = (0..cyl.dim()).all(|i| {
        let c = cyl.center.x[i];
        let h = cyl.halfwidths[i];
        c - h > dom.lower[i] && c + h < dom.upper[i]
    });
    let ti = cyl.time_interval();
    space && ti.lower > 0.0 && ti.upper < dom.horizon
}

/// A compact space-time box `K = Π [lower_i, upper_i] × [t_lower, t_upper]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpaceTimeBox {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub t_lower: f64,
    pub t_upper: f64,
}

impl SpaceTimeBox {
    pub fn new(
        lower: Vec<f64>,
        upper: Vec<f64>,
        t_lower: f64,
        t_upper: f64,
    ) -> Result<Self, GeometryError> {
        if lower.len() != upper.len() {
            return Err(GeometryError::DimensionMismatch { expected: lower.len(), got: upper.len() });
        }
        for (i, (l, u)) in lower.iter().zip(&upper).enumerate() {
            if !(l < u) {
                return Err(GeometryError::EmptyBox(i));
            }
        }
        if !(t_lower < t_upper) {
            return Err(GeometryError::EmptyBox(lower.len()));
        }
        Ok(Self { lower, upper, t_lower, t_upper })
    }

    /// `dom` shrunk by `margin` in every spatial direction and at the bottom.
    pub fn shrink(dom: &DomainBox, margin: f64, t_upper: f64) -> Result<Self, GeometryError> {
        Self::new(
            dom.lower.iter().map(|l| l + margin).collect(),
            dom.upper.iter().map(|u| u - margin).collect(),
            margin,
            t_upper,
        )
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }
}

/// Intrinsic distance
/// `Σ_i |a_i - b_i|^{p_i/p̄} M^{(p̄-p_i)/p_i} + |t_a - t_b|^{1/p̄} M^{(p̄-2)/p̄}`.
///
/// Symmetric and positive off the diagonal; it is not a metric in general.
pub fn intrinsic_distance(
    a: &SpaceTimePoint,
    b: &SpaceTimePoint,
    m: f64,
    p: &PowerVector,
) -> Result<f64, GeometryError> {
    if !(m > 0.0) {
        return Err(GeometryError::NonPositiveWeight(m));
    }
    for len in [a.x.len(), b.x.len()] {
        if len != p.dim() {
            return Err(GeometryError::DimensionMismatch { expected: p.dim(), got: len });
        }
    }
    let space: f64 = (0..p.dim()).map(|i| spatial_weight(p, i, (a.x[i] - b.x[i]).abs(), m)).sum();
    Ok(space + temporal_weight(p, (a.t - b.t).abs(), m))
}

/// `d^{p_i/p̄} M^{(p̄-p_i)/p_i}`
pub(crate) fn spatial_weight(p: &PowerVector, axis: usize, d: f64, m: f64) -> f64 {
    let pi = p.get(axis);
    let pbar = p.harmonic_mean();
    if pi == pbar {
        return d;
    }
    powf(d, pi / pbar) * powf(m, (pbar - pi) / pi)
}

/// `d^{1/p̄} M^{(p̄-2)/p̄}`
pub(crate) fn temporal_weight(p: &PowerVector, d: f64, m: f64) -> f64 {
    let pbar = p.harmonic_mean();
    if pbar == 2.0 {
        return sqrt(d);
    }
    powf(d, 1.0 / pbar) * powf(m, (pbar - 2.0) / pbar)
}

/// Result of [`pi_distance`]; `degenerate` marks a set touching the boundary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PiDistance {
    pub value: f64,
    pub degenerate: bool,
}

/// π-distance of `k` to the parabolic boundary of `dom`.
///
/// For boxes the infimum is attained between facing faces, so it reduces to the
/// minimum of the weighted per-axis gaps and the weighted gap to `t = 0`.
pub fn pi_distance(
    k: &SpaceTimeBox,
    dom: &DomainBox,
    m: f64,
    p: &PowerVector,
) -> Result<PiDistance, GeometryError> {
    if !(m > 0.0) {
        return Err(GeometryError::NonPositiveWeight(m));
    }
    if k.dim() != p.dim() || dom.dim() != p.dim() {
        return Err(GeometryError::DimensionMismatch { expected: p.dim(), got: k.dim() });
    }
    let mut gaps: Vec<f64> = (0..p.dim())
        .map(|i| (k.lower[i] - dom.lower[i]).min(dom.upper[i] - k.upper[i]))
        .collect();
    let time_gap = k.t_lower;
    gaps.push(time_gap);
    if gaps.iter().any(|&g| g < 0.0) || k.t_upper > dom.horizon {
        return Err(GeometryError::NotInside);
    }
    if gaps.contains(&0.0) {
        return Ok(PiDistance { value: 0.0, degenerate: true });
    }
    let value = (0..p.dim())
        .map(|i| spatial_weight(p, i, gaps[i], m))
        .chain(core::iter::once(temporal_weight(p, time_gap, m)))
        .fold(f64::INFINITY, f64::min);
    Ok(PiDistance { value, degenerate: false })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use approx::assert_relative_eq;

    fn pv(p: &[f64]) -> PowerVector {
        PowerVector::new(p.to_vec()).unwrap()
    }

    fn origin(n: usize) -> SpaceTimePoint {
        SpaceTimePoint::new(vec![0.0; n], 1.0)
    }

    #[test]
    fn harmonic_mean_examples() {
        assert_eq!(pv(&[2.0, 2.0]).harmonic_mean(), 2.0);
        assert_eq!(pv(&[3.0, 3.0, 3.0]).harmonic_mean(), 3.0);
        let expected = 2.0 / (1.0 / 2.2 + 1.0 / 2.4);
        assert_relative_eq!(pv(&[2.2, 2.4]).harmonic_mean(), expected, max_relative = 1e-15);
        assert_relative_eq!(expected, 2.295_652_173_913_043, max_relative = 1e-14);
    }

    #[test]
    fn sobolev_exponent_examples() {
        assert_eq!(pv(&[2.0, 2.0, 2.0]).sobolev_exponent().unwrap(), 6.0);
        assert_eq!(pv(&[2.0; 4]).sobolev_exponent().unwrap(), 4.0);
        let p = pv(&[2.2, 2.4, 2.4]);
        let pbar = 3.0 / (1.0 / 2.2 + 2.0 / 2.4);
        assert_relative_eq!(p.harmonic_mean(), pbar, max_relative = 1e-15);
        assert_relative_eq!(p.harmonic_mean(), 2.329_411_764_705_882, max_relative = 1e-13);
        assert_relative_eq!(p.sobolev_exponent().unwrap(), 3.0 * pbar / (3.0 - pbar), max_relative = 1e-14);
        assert_relative_eq!(p.sobolev_exponent().unwrap(), 10.421_052_631_578_94, max_relative = 1e-12);
    }

    #[test]
    fn sobolev_exponent_rejects_supercritical() {
        let err = pv(&[2.2, 2.4]).sobolev_exponent().unwrap_err();
        assert!(matches!(err, GeometryError::Supercritical { .. }));
        assert!(alloc::format!("{err}").starts_with("supercritical: p̄ ≥ N"));
    }

    #[test]
    fn conditions_examples() {
        let c = pv(&[2.2, 2.4]).conditions();
        assert!(c.bounded_ok && c.degenerate_ok && !c.subcritical_ok);
        let c = pv(&[3.0, 9.0]).conditions();
        assert_eq!(pv(&[3.0, 9.0]).harmonic_mean(), 4.5);
        assert!(!c.bounded_ok);
        assert!(!pv(&[2.0, 2.0]).conditions().degenerate_ok);
    }

    #[test]
    fn invalid_exponent_vectors() {
        assert_eq!(PowerVector::new(vec![]), Err(GeometryError::EmptyExponents));
        assert!(matches!(
            PowerVector::new(vec![1.5, 3.0]),
            Err(GeometryError::ExponentBelowTwo { index: 0, .. })
        ));
        assert!(matches!(
            PowerVector::new(vec![3.0, 2.5]),
            Err(GeometryError::Unsorted { index: 1 })
        ));
        assert!(PowerVector::new(vec![2.0, f64::NAN]).is_err());
    }

    #[test]
    fn cylinder_heat_case_ignores_theta() {
        let p = pv(&[2.0, 2.0]);
        for theta in [1e-3, 1.0, 7.0, 1e3] {
            let c = make_cylinder(origin(2), 0.7, theta, CylinderKind::Centered, &p).unwrap();
            assert_eq!(c.halfwidths, vec![0.7, 0.7]);
            assert_relative_eq!(c.time_length, 0.49, max_relative = 1e-15);
        }
    }

    #[test]
    fn cylinder_anisotropic_example() {
        // p̄ = 2 / (0.4 + 0.2666…) = 3
        let p = pv(&[2.5, 3.75]);
        assert_relative_eq!(p.harmonic_mean(), 3.0, max_relative = 1e-15);
        let c = make_cylinder(origin(2), 1.0, 32.0, CylinderKind::Forward, &p).unwrap();
        assert_relative_eq!(c.halfwidths[0], 0.5, max_relative = 1e-14);
        assert_relative_eq!(c.halfwidths[1], 2.0, max_relative = 1e-14);
        assert_relative_eq!(c.time_length, 0.03125, max_relative = 1e-14);
        assert_relative_eq!(c.cube_volume(), 4.0, max_relative = 1e-14);
    }

    #[test]
    fn cylinder_orientations() {
        let p = pv(&[2.0]);
        let center = SpaceTimePoint::new(vec![0.0], 1.0);
        let rho = 0.5f64.sqrt();
        let back = make_cylinder(center.clone(), rho, 1.0, CylinderKind::Backward, &p).unwrap();
        let ti = back.time_interval();
        assert_relative_eq!(ti.lower, 0.5, max_relative = 1e-15);
        assert_eq!(ti.upper, 1.0);
        assert!(!ti.contains(ti.lower) && ti.contains(1.0) && ti.contains(0.75));
        let fwd = make_cylinder(center.clone(), rho, 1.0, CylinderKind::Forward, &p).unwrap();
        let ti = fwd.time_interval();
        assert!(ti.contains(1.0) && !ti.contains(ti.upper));
        let cen = make_cylinder(center, rho, 1.0, CylinderKind::Centered, &p).unwrap();
        let ti = cen.time_interval();
        assert!(!ti.contains(ti.lower) && !ti.contains(ti.upper) && ti.contains(1.0));
    }

    #[test]
    fn cylinder_rejects_bad_scales() {
        let p = pv(&[2.0]);
        let c = SpaceTimePoint::new(vec![0.0], 0.0);
        assert_eq!(
            make_cylinder(c.clone(), 0.0, 1.0, CylinderKind::Forward, &p),
            Err(GeometryError::NonPositiveRadius(0.0))
        );
        assert_eq!(
            make_cylinder(c, 1.0, -1.0, CylinderKind::Forward, &p),
            Err(GeometryError::NonPositiveTheta(-1.0))
        );
    }

    #[test]
    fn cylinder_fits_examples() {
        let p = pv(&[2.2, 2.4]);
        let dom = DomainBox::new(vec![-1.0, -1.0], vec![1.0, 1.0], 1.0).unwrap();
        let center = SpaceTimePoint::new(vec![0.0, 0.0], 0.5);
        let small = make_cylinder(center.clone(), 0.05, 1.0, CylinderKind::Centered, &p).unwrap();
        assert!(cylinder_fits(&small, &dom));
        let early = SpaceTimePoint::new(vec![0.0, 0.0], 0.001);
        let c = make_cylinder(early, 0.05, 1.0, CylinderKind::Backward, &p).unwrap();
        assert!(!cylinder_fits(&c, &dom));
        let edge = SpaceTimePoint::new(vec![0.97, 0.0], 0.5);
        let c = make_cylinder(edge, 0.05, 1.0, CylinderKind::Forward, &p).unwrap();
        assert!(c.halfwidths[0] > 0.03);
        assert!(!cylinder_fits(&c, &dom));
    }

    #[test]
    fn intrinsic_distance_examples() {
        let p = pv(&[2.2, 2.4]);
        let a = SpaceTimePoint::new(vec![0.1, -0.3], 0.2);
        let b = SpaceTimePoint::new(vec![0.4, 0.2], 0.6);
        assert_eq!(intrinsic_distance(&a, &a, 3.0, &p).unwrap(), 0.0);

        let heat = pv(&[2.0, 2.0]);
        let expected = 0.3 + 0.5 + 0.4f64.sqrt();
        for m in [0.1, 1.0, 50.0] {
            assert_relative_eq!(intrinsic_distance(&a, &b, m, &heat).unwrap(), expected, max_relative = 1e-14);
        }

        let pbar = p.harmonic_mean();
        let expected = libm::pow(0.3, 2.2 / pbar) + libm::pow(0.5, 2.4 / pbar) + libm::pow(0.4, 1.0 / pbar);
        assert_relative_eq!(intrinsic_distance(&a, &b, 1.0, &p).unwrap(), expected, max_relative = 1e-14);
        assert!(intrinsic_distance(&a, &b, 0.0, &p).is_err());
    }

    #[test]
    fn pi_distance_examples() {
        let p = pv(&[2.2, 2.4]);
        let dom = DomainBox::new(vec![0.0, 0.0], vec![1.0, 1.0], 1.0).unwrap();
        let touching = SpaceTimeBox::shrink(&dom, 0.0, 0.5).unwrap();
        let d = pi_distance(&touching, &dom, 1.0, &p).unwrap();
        assert_eq!(d, PiDistance { value: 0.0, degenerate: true });

        let k = SpaceTimeBox::new(vec![0.3, 0.3], vec![0.7, 0.7], 0.09, 0.5).unwrap();
        let pbar = p.harmonic_mean();
        let expected = libm::pow(0.3, 2.2 / pbar)
            .min(libm::pow(0.3, 2.4 / pbar))
            .min(libm::pow(0.09, 1.0 / pbar));
        let d = pi_distance(&k, &dom, 1.0, &p).unwrap();
        assert!(!d.degenerate);
        assert_relative_eq!(d.value, expected, max_relative = 1e-14);

        let heat = pv(&[2.0, 2.0]);
        let k = SpaceTimeBox::new(vec![0.2, 0.25], vec![0.7, 0.9], 0.0225, 0.5).unwrap();
        let d = pi_distance(&k, &dom, 17.0, &heat).unwrap();
        assert_relative_eq!(d.value, 0.1, max_relative = 1e-14);
    }

    #[test]
    fn pi_distance_rejects_outside() {
        let p = pv(&[2.0]);
        let dom = DomainBox::new(vec![0.0], vec![1.0], 1.0).unwrap();
        let k = SpaceTimeBox::new(vec![-0.1], vec![0.5], 0.1, 0.5).unwrap();
        assert_eq!(pi_distance(&k, &dom, 1.0, &p), Err(GeometryError::NotInside));
    }
}
