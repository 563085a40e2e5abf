//! Conservative explicit finite differences on uniform rectangular grids.
//!
//! Unknowns live at cell centers `origin_i + (j + 1/2) h_i`. Fluxes
//! `|D u|^{p_i - 2} D u` sit on cell faces and are built from one-sided
//! differences, so the update is a discrete divergence and conserves mass
//! under periodic and zero-flux closures.

mod exact;
mod init;
mod par;
mod scheme;
mod weak;

use alloc::vec::Vec;
use thiserror::Error;

use crate::geometry::{DomainBox, GeometryError, PowerVector};

pub use exact::gaussian_exact;
pub use init::InitialData;
pub use scheme::{flux, mass, solve, solve_with_log, stable_dt, step, RunLog, SnapshotStats};
pub use weak::{weak_residual, BumpTestFunction, TestFunction};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolverError {
    #[error("grid needs at least 3 cells per axis, axis {axis} has {cells}")]
    TooFewCells { axis: usize, cells: usize },
    #[error("grid spacing along axis {axis} must be positive, got {spacing}")]
    BadSpacing { axis: usize, spacing: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("field has {got} entries, grid has {expected} cells")]
    FieldLength { expected: usize, got: usize },
    #[error("field contains a non-finite value at index {0}")]
    NonFiniteInput(usize),
    #[error("time step {dt} exceeds the stable bound {bound}")]
    UnstableStep { dt: f64, bound: f64 },
    #[error("non-finite value after step {step} (max |u| = {max_abs})")]
    NonFinite { step: usize, max_abs: f64 },
    #[error("positivity lost after step {step} (min u = {min})")]
    NegativeValue { step: usize, min: f64 },
    #[error("snapshot times must be strictly increasing and lie in [0, {horizon}]")]
    BadSnapshotTimes { horizon: f64 },
    #[error("snapshot times and fields disagree")]
    SnapshotMismatch,
    #[error("time {0} is not a snapshot time")]
    NotASnapshot(f64),
    #[error("need t1 < t2")]
    BadTimeWindow,
    #[error("test function does not vanish near the grid boundary")]
    NotCompactlySupported,
    #[error("the exact kernel needs t > 0, got {0}")]
    NonPositiveTime(f64),
    #[error("invalid solver setting: {0}")]
    BadConfig(&'static str),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Boundary closure used for ghost values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Boundary {
    /// Ghost cells hold the given value.
    Dirichlet(f64),
    Periodic,
    /// Ghost cells mirror their neighbour.
    ZeroFlux,
}

/// Uniform rectangular grid. Fields are row-major with the last axis fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    dims: Vec<usize>,
    spacing: Vec<f64>,
    origin: Vec<f64>,
    bc: Boundary,
    strides: Vec<usize>,
}

impl Grid {
    pub fn new(
        dims: Vec<usize>,
        spacing: Vec<f64>,
        origin: Vec<f64>,
        bc: Boundary,
    ) -> Result<Self, SolverError> {
        let n = dims.len();
        if n == 0 {
            return Err(SolverError::DimensionMismatch { expected: 1, got: 0 });
        }
        for len in [spacing.len(), origin.len()] {
            if len != n {
                return Err(SolverError::DimensionMismatch { expected: n, got: len });
            }
        }
        for (axis, &cells) in dims.iter().enumerate() {
            if cells < 3 {
                return Err(SolverError::TooFewCells { axis, cells });
            }
        }
        for (axis, &h) in spacing.iter().enumerate() {
            if !(h > 0.0 && h.is_finite()) || !origin[axis].is_finite() {
                return Err(SolverError::BadSpacing { axis, spacing: h });
            }
        }
        let mut strides = alloc::vec![1usize; n];
        for axis in (0..n - 1).rev() {
            strides[axis] = strides[axis + 1] * dims[axis + 1];
        }
        Ok(Self { dims, spacing, origin, bc, strides })
    }

    /// Grid covering `[lower, upper]` with `dims[i]` cells along axis `i`.
    pub fn covering(
        lower: &[f64],
        upper: &[f64],
        dims: Vec<usize>,
        bc: Boundary,
    ) -> Result<Self, SolverError> {
        if lower.len() != dims.len() || upper.len() != dims.len() {
            return Err(SolverError::DimensionMismatch { expected: dims.len(), got: lower.len() });
        }
        let spacing = (0..dims.len()).map(|i| (upper[i] - lower[i]) / dims[i] as f64).collect();
        Self::new(dims, spacing, lower.to_vec(), bc)
    }

    pub fn dim(&self) -> usize {
        self.dims.len()
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn spacing(&self) -> &[f64] {
        &self.spacing
    }

    pub fn origin(&self) -> &[f64] {
        &self.origin
    }

    pub fn bc(&self) -> Boundary {
        self.bc
    }

    pub fn strides(&self) -> &[usize] {
        &self.strides
    }

    pub fn len(&self) -> usize {
        self.dims.iter().product()
    }

    /// Always false; grids have at least 3 cells per axis.
    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing.iter().product()
    }

    /// Coordinate of node `j` along `axis`.
    #[inline]
    pub fn coord(&self, axis: usize, j: usize) -> f64 {
        self.origin[axis] + (j as f64 + 0.5) * self.spacing[axis]
    }

    #[inline]
    pub fn index_along(&self, flat: usize, axis: usize) -> usize {
        (flat / self.strides[axis]) % self.dims[axis]
    }

    pub fn position(&self, flat: usize) -> Vec<f64> {
        (0..self.dim()).map(|i| self.coord(i, self.index_along(flat, i))).collect()
    }

    pub fn position_into(&self, flat: usize, out: &mut [f64]) {
        for (i, slot) in out.iter_mut().enumerate() {
            *slot = self.coord(i, self.index_along(flat, i));
        }
    }

    pub fn flat_index(&self, multi: &[usize]) -> usize {
        multi.iter().zip(&self.strides).map(|(j, s)| j * s).sum()
    }

    /// Physical box `[origin, origin + dims h]`.
    pub fn bounds(&self) -> (Vec<f64>, Vec<f64>) {
        let upper = (0..self.dim())
            .map(|i| self.origin[i] + self.dims[i] as f64 * self.spacing[i])
            .collect();
        (self.origin.clone(), upper)
    }

    /// Box spanned by the first and last node along each axis.
    pub fn node_hull(&self) -> (Vec<f64>, Vec<f64>) {
        let lower = (0..self.dim()).map(|i| self.coord(i, 0)).collect();
        let upper = (0..self.dim()).map(|i| self.coord(i, self.dims[i] - 1)).collect();
        (lower, upper)
    }

    /// Node index range along `axis` covering the closed interval `[lo, hi]`.
    pub fn index_range(&self, axis: usize, lo: f64, hi: f64) -> Option<(usize, usize)> {
        let h = self.spacing[axis];
        let o = self.origin[axis];
        // Small slack so nodes sitting exactly on the bound are not lost to rounding.
        let slack = 1e-9;
        let first = crate::math::ceil((lo - o) / h - 0.5 - slack).max(0.0);
        let last = crate::math::floor((hi - o) / h - 0.5 + slack);
        let max = (self.dims[axis] - 1) as f64;
        let last = last.min(max);
        if last < first {
            return None;
        }
        let (first, last) = (first as usize, last as usize);
        let first = (first..=last).find(|&j| self.coord(axis, j) >= lo - slack * h)?;
        let last = (first..=last).rev().find(|&j| self.coord(axis, j) <= hi + slack * h)?;
        Some((first, last))
    }

    pub(crate) fn check_field(&self, u: &[f64]) -> Result<(), SolverError> {
        if u.len() != self.len() {
            return Err(SolverError::FieldLength { expected: self.len(), got: u.len() });
        }
        if let Some(i) = u.iter().position(|v| !v.is_finite()) {
            return Err(SolverError::NonFiniteInput(i));
        }
        Ok(())
    }
}

/// Recorded space-time trajectory of a run. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSolution {
    grid: Grid,
    p: PowerVector,
    times: Vec<f64>,
    fields: Vec<Vec<f64>>,
    max_value: f64,
    max_abs: f64,
}

impl GridSolution {
    pub fn new(
        grid: Grid,
        p: PowerVector,
        times: Vec<f64>,
        fields: Vec<Vec<f64>>,
    ) -> Result<Self, SolverError> {
        if p.dim() != grid.dim() {
            return Err(SolverError::DimensionMismatch { expected: grid.dim(), got: p.dim() });
        }
        if times.is_empty() || times.len() != fields.len() {
            return Err(SolverError::SnapshotMismatch);
        }
        if times.windows(2).any(|w| !(w[0] < w[1])) || times.iter().any(|t| !t.is_finite()) {
            let horizon = times.last().copied().unwrap_or(0.0);
            return Err(SolverError::BadSnapshotTimes { horizon });
        }
        for f in &fields {
            grid.check_field(f)?;
        }
        Ok(Self::assemble(grid, p, times, fields))
    }

    fn assemble(grid: Grid, p: PowerVector, times: Vec<f64>, fields: Vec<Vec<f64>>) -> Self {
        let max_value = fields.iter().flatten().fold(f64::NEG_INFINITY, |m, &v| m.max(v));
        let max_abs = fields.iter().flatten().fold(0.0, |m: f64, v| m.max(v.abs()));
        Self { grid, p, times, fields, max_value, max_abs }
    }

    /// Samples `f(x, t)` at every node and time.
    pub fn from_fn(
        grid: Grid,
        p: PowerVector,
        times: Vec<f64>,
        f: impl Fn(&[f64], f64) -> f64,
    ) -> Result<Self, SolverError> {
        let mut x = alloc::vec![0.0; grid.dim()];
        let fields = times
            .iter()
            .map(|&t| {
                (0..grid.len())
                    .map(|k| {
                        grid.position_into(k, &mut x);
                        f(&x, t)
                    })
                    .collect()
            })
            .collect();
        Self::new(grid, p, times, fields)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn p(&self) -> &PowerVector {
        &self.p
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn fields(&self) -> &[Vec<f64>] {
        &self.fields
    }

    pub fn field(&self, k: usize) -> &[f64] {
        &self.fields[k]
    }

    /// Index of the snapshot at time `t`, allowing for rounding.
    pub fn snapshot_index(&self, t: f64) -> Option<usize> {
        let tol = 1e-12 * t.abs().max(1.0);
        self.times.iter().position(|&s| (s - t).abs() <= tol)
    }

    pub fn max_abs(&self) -> f64 {
        self.max_abs
    }

    pub fn max_value(&self) -> f64 {
        self.max_value
    }

    /// `Ω × (0, T)` with `Ω` the grid's physical box and `T` the last snapshot time.
    pub fn domain(&self) -> Result<DomainBox, GeometryError> {
        let (lower, upper) = self.grid.bounds();
        DomainBox::new(lower, upper, *self.times.last().unwrap_or(&0.0))
    }

    /// Every field multiplied by `lambda`.
    pub fn scaled(&self, lambda: f64) -> Self {
        let fields = self.fields.iter().map(|f| f.iter().map(|v| v * lambda).collect()).collect();
        Self::assemble(self.grid.clone(), self.p.clone(), self.times.clone(), fields)
    }

    /// Every field shifted by `shift`.
    pub fn shifted(&self, shift: f64) -> Self {
        let fields = self.fields.iter().map(|f| f.iter().map(|v| v + shift).collect()).collect();
        Self::assemble(self.grid.clone(), self.p.clone(), self.times.clone(), fields)
    }
}

/// Step controls.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// Fraction of the linearized CFL bound, in `(0, 1]`.
    pub safety: f64,
    /// Cap used when the gradients vanish; `None` means `min_i h_i²`.
    pub dt_max: Option<f64>,
    /// Abort when nonnegative data turns negative.
    pub check_nonnegative: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { safety: 0.9, dt_max: None, check_nonnegative: true }
    }
}

impl SolverConfig {
    pub(crate) fn validate(&self) -> Result<(), SolverError> {
        if !(self.safety > 0.0 && self.safety <= 1.0) {
            return Err(SolverError::BadConfig("safety must lie in (0, 1]"));
        }
        if let Some(cap) = self.dt_max {
            if !(cap > 0.0 && cap.is_finite()) {
                return Err(SolverError::BadConfig("dt_max must be positive"));
            }
        }
        Ok(())
    }

    pub fn dt_cap(&self, grid: &Grid) -> f64 {
        self.dt_max
            .unwrap_or_else(|| grid.spacing().iter().map(|h| h * h).fold(f64::INFINITY, f64::min))
    }
}
