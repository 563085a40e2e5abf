use alloc::vec;
use alloc::vec::Vec;

use super::par;
use super::{Boundary, Grid, GridSolution, SolverConfig, SolverError};
use crate::geometry::PowerVector;
use crate::math::powf;

/// `|s|^{p - 2} s`. Odd and nondecreasing, zero at `s = 0`.
#[inline]
pub fn flux(s: f64, p: f64) -> f64 {
    if p == 2.0 {
        return s;
    }
    let a = s.abs();
    if a == 0.0 {
        0.0
    } else {
        powf(a, p - 2.0) * s
    }
}

#[inline]
fn plus_neighbor(u: &[f64], grid: &Grid, k: usize, axis: usize) -> f64 {
    let n = grid.dims()[axis];
    let s = grid.strides()[axis];
    if grid.index_along(k, axis) + 1 < n {
        return u[k + s];
    }
    match grid.bc() {
        Boundary::Dirichlet(g) => g,
        Boundary::Periodic => u[k - (n - 1) * s],
        Boundary::ZeroFlux => u[k],
    }
}

/// Forward difference `D_i^+ u` at cell `k`, using the ghost value on the last cell.
#[inline]
fn forward_difference(u: &[f64], grid: &Grid, k: usize, axis: usize) -> f64 {
    (plus_neighbor(u, grid, k, axis) - u[k]) / grid.spacing()[axis]
}

/// Largest `|D_i u|` over all faces along `axis`, boundary faces included.
fn max_face_gradient(u: &[f64], grid: &Grid, axis: usize) -> f64 {
    let interior = par::max_of(u.len(), |k| forward_difference(u, grid, k, axis).abs());
    match grid.bc() {
        Boundary::Dirichlet(g) => {
            let h = grid.spacing()[axis];
            let left = par::max_of(u.len(), |k| {
                if grid.index_along(k, axis) == 0 {
                    ((u[k] - g) / h).abs()
                } else {
                    0.0
                }
            });
            interior.max(left)
        }
        _ => interior,
    }
}

/// Largest stable explicit step:
/// `safety / Σ_i 2 a_i / h_i²` with `a_i = (p_i - 1) max |D_i u|^{p_i - 2}`,
/// capped by [`SolverConfig::dt_cap`]. Axes with `p_i = 2` always have `a_i = 1`.
pub fn stable_dt(u: &[f64], grid: &Grid, p: &PowerVector, cfg: &SolverConfig) -> f64 {
    let cap = cfg.dt_cap(grid);
    let mut denom = 0.0;
    for axis in 0..grid.dim() {
        let pi = p.get(axis);
        let modulus = if pi == 2.0 {
            1.0
        } else {
            (pi - 1.0) * powf(max_face_gradient(u, grid, axis), pi - 2.0)
        };
        let h = grid.spacing()[axis];
        denom += 2.0 * modulus / (h * h);
    }
    if denom == 0.0 {
        cap
    } else {
        (cfg.safety / denom).min(cap)
    }
}

/// Reusable face-flux buffers, one per axis.
struct Workspace {
    faces: Vec<Vec<f64>>,
}

impl Workspace {
    fn new(grid: &Grid) -> Self {
        Self { faces: vec![vec![0.0; grid.len()]; grid.dim()] }
    }
}

fn advance(
    u: &[f64],
    out: &mut [f64],
    dt: f64,
    grid: &Grid,
    p: &PowerVector,
    ws: &mut Workspace,
) {
    for (axis, faces) in ws.faces.iter_mut().enumerate() {
        let pi = p.get(axis);
        par::fill(faces, |k| flux(forward_difference(u, grid, k, axis), pi));
    }
    let faces = &ws.faces;
    par::fill(out, |k| {
        let mut acc = 0.0;
        for (axis, fp) in faces.iter().enumerate() {
            let h = grid.spacing()[axis];
            let s = grid.strides()[axis];
            let n = grid.dims()[axis];
            let minus = if grid.index_along(k, axis) > 0 {
                fp[k - s]
            } else {
                match grid.bc() {
                    Boundary::Dirichlet(g) => flux((u[k] - g) / h, p.get(axis)),
                    Boundary::Periodic => fp[k + (n - 1) * s],
                    Boundary::ZeroFlux => 0.0,
                }
            };
            acc += (fp[k] - minus) / h;
        }
        u[k] + dt * acc
    });
}

/// One explicit Euler step of the conservative scheme. Refuses `dt` above
/// [`stable_dt`].
pub fn step(
    u: &[f64],
    dt: f64,
    grid: &Grid,
    p: &PowerVector,
    cfg: &SolverConfig,
) -> Result<Vec<f64>, SolverError> {
    cfg.validate()?;
    grid.check_field(u)?;
    if p.dim() != grid.dim() {
        return Err(SolverError::DimensionMismatch { expected: grid.dim(), got: p.dim() });
    }
    let bound = stable_dt(u, grid, p, cfg);
    if !(dt >= 0.0) || dt > bound * (1.0 + 1e-12) {
        return Err(SolverError::UnstableStep { dt, bound });
    }
    let mut out = vec![0.0; u.len()];
    advance(u, &mut out, dt, grid, p, &mut Workspace::new(grid));
    Ok(out)
}

/// `Σ_j u_j Π h_i`
pub fn mass(u: &[f64], grid: &Grid) -> f64 {
    u.iter().sum::<f64>() * grid.cell_volume()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotStats {
    pub time: f64,
    pub mass: f64,
    pub min: f64,
    pub max: f64,
}

/// Step history of a run.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunLog {
    pub dt: Vec<f64>,
    pub snapshots: Vec<SnapshotStats>,
}

impl RunLog {
    pub fn steps(&self) -> usize {
        self.dt.len()
    }
}

fn stats(u: &[f64], grid: &Grid, time: f64) -> SnapshotStats {
    SnapshotStats {
        time,
        mass: mass(u, grid),
        min: u.iter().copied().fold(f64::INFINITY, f64::min),
        max: u.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    }
}

/// Advances `u0` to `horizon` and records the requested snapshots.
pub fn solve(
    u0: &[f64],
    horizon: f64,
    grid: &Grid,
    p: &PowerVector,
    snapshot_times: &[f64],
    cfg: &SolverConfig,
) -> Result<GridSolution, SolverError> {
    solve_with_log(u0, horizon, grid, p, snapshot_times, cfg).map(|(sol, _)| sol)
}

/// [`solve`] plus the dt history and per-snapshot mass and range.
pub fn solve_with_log(
    u0: &[f64],
    horizon: f64,
    grid: &Grid,
    p: &PowerVector,
    snapshot_times: &[f64],
    cfg: &SolverConfig,
) -> Result<(GridSolution, RunLog), SolverError> {
    cfg.validate()?;
    grid.check_field(u0)?;
    if p.dim() != grid.dim() {
        return Err(SolverError::DimensionMismatch { expected: grid.dim(), got: p.dim() });
    }
    let ordered = snapshot_times.windows(2).all(|w| w[0] < w[1]);
    let in_range = snapshot_times.iter().all(|&t| t >= 0.0 && t <= horizon);
    if snapshot_times.is_empty() || !ordered || !in_range || !(horizon >= 0.0) {
        return Err(SolverError::BadSnapshotTimes { horizon });
    }

    let nonneg_bc = !matches!(grid.bc(), Boundary::Dirichlet(g) if g < 0.0);
    let watch_sign = cfg.check_nonnegative && nonneg_bc && u0.iter().all(|&v| v >= 0.0);

    let mut log = RunLog::default();
    let mut times = Vec::with_capacity(snapshot_times.len());
    let mut fields = Vec::with_capacity(snapshot_times.len());
    let mut u = u0.to_vec();
    let mut next = vec![0.0; u.len()];
    let mut ws = Workspace::new(grid);
    let mut t = 0.0;

    let mut targets: Vec<(f64, bool)> = snapshot_times.iter().map(|&s| (s, true)).collect();
    if *snapshot_times.last().unwrap() < horizon {
        targets.push((horizon, false));
    }

    for (target, record) in targets {
        while t < target {
            let mut dt = stable_dt(&u, grid, p, cfg);
            if !(dt > 0.0) {
                let max_abs = u.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                return Err(SolverError::NonFinite { step: log.dt.len() + 1, max_abs });
            }
            let remaining = target - t;
            let landing = dt >= remaining * (1.0 - 1e-12);
            if landing {
                dt = remaining;
            }
            advance(&u, &mut next, dt, grid, p, &mut ws);
            core::mem::swap(&mut u, &mut next);
            log.dt.push(dt);
            t = if landing { target } else { t + dt };

            let step_no = log.dt.len();
            let mut min = f64::INFINITY;
            let mut finite = true;
            for &v in &u {
                finite &= v.is_finite();
                min = min.min(v);
            }
            if !finite {
                let max_abs = u.iter().filter(|v| v.is_finite()).fold(0.0f64, |m, v| m.max(v.abs()));
                return Err(SolverError::NonFinite { step: step_no, max_abs });
            }
            if watch_sign && min < 0.0 {
                return Err(SolverError::NegativeValue { step: step_no, min });
            }
        }
        if record {
            log.snapshots.push(stats(&u, grid, target));
            times.push(target);
            fields.push(u.clone());
        }
    }

    let sol = GridSolution::new(grid.clone(), p.clone(), times, fields)?;
    Ok((sol, log))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn line(n: usize, h: f64, bc: Boundary) -> Grid {
        Grid::new(vec![n], vec![h], vec![0.0], bc).unwrap()
    }

    #[test]
    fn flux_examples() {
        assert_eq!(flux(0.0, 2.7), 0.0);
        assert_eq!(flux(-3.7, 2.0), -3.7);
        assert_eq!(flux(-2.0, 3.0), -4.0);
        assert_eq!(flux(1.3, 2.4), -flux(-1.3, 2.4));
    }

    #[test]
    fn stable_dt_examples() {
        let p3 = PowerVector::new(vec![3.0]).unwrap();
        let cfg = SolverConfig::default();
        let g = line(10, 0.1, Boundary::ZeroFlux);
        assert_relative_eq!(stable_dt(&[1.5; 10], &g, &p3, &cfg), 0.01, max_relative = 1e-15);

        // one face with |D+u| = 2: a = (3 - 1) * 2 = 4, dt = safety * h² / 8
        let mut u = vec![0.0; 10];
        for v in u.iter_mut().skip(5) {
            *v = 0.2;
        }
        assert_relative_eq!(stable_dt(&u, &g, &p3, &cfg), 0.9 * 0.01 / 8.0, max_relative = 1e-14);

        let heat = PowerVector::new(vec![2.0, 2.0]).unwrap();
        let g2 = Grid::new(vec![5, 5], vec![0.1, 0.2], vec![0.0, 0.0], Boundary::Periodic).unwrap();
        let expected = 0.9 / (2.0 / 0.01 + 2.0 / 0.04);
        assert_relative_eq!(stable_dt(&[0.3; 25], &g2, &heat, &cfg), expected, max_relative = 1e-14);
    }

    #[test]
    fn constant_and_linear_fixed_points() {
        let p = PowerVector::new(vec![2.6]).unwrap();
        let cfg = SolverConfig::default();
        let g = line(8, 0.125, Boundary::Periodic);
        let u = vec![0.7; 8];
        let dt = stable_dt(&u, &g, &p, &cfg);
        assert_eq!(step(&u, dt, &g, &p, &cfg).unwrap(), u);

        let heat = PowerVector::new(vec![2.0]).unwrap();
        let g = line(9, 0.5, Boundary::Dirichlet(0.0));
        let u: Vec<f64> = (0..9).map(|j| 3.0 * g.coord(0, j)).collect();
        let dt = stable_dt(&u, &g, &heat, &cfg);
        let v = step(&u, dt, &g, &heat, &cfg).unwrap();
        for j in 1..8 {
            assert_relative_eq!(v[j], u[j], epsilon = 1e-12);
        }
    }

    #[test]
    fn periodic_spike_conserves_mass() {
        let p = PowerVector::new(vec![2.5]).unwrap();
        let cfg = SolverConfig::default();
        let g = line(64, 1.0 / 64.0, Boundary::Periodic);
        let mut u = vec![0.0; 64];
        u[20] = 64.0;
        let m0 = mass(&u, &g);
        for _ in 0..50 {
            let dt = stable_dt(&u, &g, &p, &cfg);
            let v = step(&u, dt, &g, &p, &cfg).unwrap();
            assert!(((mass(&v, &g) - mass(&u, &g)) / m0).abs() <= 1e-14);
            u = v;
        }
    }

    #[test]
    fn step_refuses_unstable_dt() {
        let p = PowerVector::new(vec![2.0]).unwrap();
        let cfg = SolverConfig::default();
        let g = line(8, 0.1, Boundary::ZeroFlux);
        let u: Vec<f64> = (0..8).map(|j| (j % 2) as f64).collect();
        let bound = stable_dt(&u, &g, &p, &cfg);
        assert!(matches!(
            step(&u, 2.0 * bound, &g, &p, &cfg),
            Err(SolverError::UnstableStep { .. })
        ));
    }

    #[test]
    fn zero_horizon_returns_initial_data() {
        let p = PowerVector::new(vec![2.3, 2.3]).unwrap();
        let g = Grid::new(vec![4, 3], vec![0.5, 0.5], vec![0.0, 0.0], Boundary::ZeroFlux).unwrap();
        let u0: Vec<f64> = (0..12).map(|k| k as f64).collect();
        let sol = solve(&u0, 0.0, &g, &p, &[0.0], &SolverConfig::default()).unwrap();
        assert_eq!(sol.times(), &[0.0]);
        assert_eq!(sol.field(0), u0.as_slice());
    }

    #[test]
    fn solve_lands_on_snapshots() {
        let p = PowerVector::new(vec![2.4]).unwrap();
        let g = line(32, 1.0 / 32.0, Boundary::ZeroFlux);
        let u0: Vec<f64> = (0..32).map(|j| if j < 16 { 1.0 } else { 0.0 }).collect();
        let (sol, log) =
            solve_with_log(&u0, 0.01, &g, &p, &[0.0, 0.0037, 0.01], &SolverConfig::default()).unwrap();
        assert_eq!(sol.times(), &[0.0, 0.0037, 0.01]);
        let total: f64 = log.dt.iter().sum();
        assert_relative_eq!(total, 0.01, max_relative = 1e-12);
        assert_eq!(log.snapshots.len(), 3);
    }

    #[test]
    fn solve_rejects_bad_snapshot_times() {
        let p = PowerVector::new(vec![2.4]).unwrap();
        let g = line(4, 0.25, Boundary::ZeroFlux);
        let u0 = vec![0.0; 4];
        let cfg = SolverConfig::default();
        for times in [&[][..], &[0.2, 0.1][..], &[0.0, 2.0][..]] {
            assert!(matches!(
                solve(&u0, 1.0, &g, &p, times, &cfg),
                Err(SolverError::BadSnapshotTimes { .. })
            ));
        }
    }

    #[test]
    fn solve_reports_non_finite_blowup() {
        // gradients overflow the diffusion modulus, leaving no admissible step
        let p = PowerVector::new(vec![4.0]).unwrap();
        let g = line(4, 0.25, Boundary::ZeroFlux);
        let u0 = vec![0.0, 1e200, -1e200, 0.0];
        let cfg = SolverConfig { check_nonnegative: false, ..SolverConfig::default() };
        let err = solve(&u0, 1.0, &g, &p, &[1.0], &cfg).unwrap_err();
        assert!(matches!(err, SolverError::NonFinite { step: 1, .. }), "{err:?}");
    }
}
