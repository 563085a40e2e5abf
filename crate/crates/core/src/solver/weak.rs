use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{FRAC_PI_2, PI};

use super::{flux, GridSolution, SolverError};
use crate::math::{cos, sin};

/// A test function `φ(x, t)` with its first derivatives.
pub trait TestFunction {
    fn value(&self, x: &[f64], t: f64) -> f64;
    fn time_derivative(&self, x: &[f64], t: f64) -> f64;
    fn gradient(&self, axis: usize, x: &[f64], t: f64) -> f64;
}

/// `φ(x, t) = (1 + rate t) Π cos⁴(π (x_i - c_i) / (2 w_i))` on `|x_i - c_i| < w_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct BumpTestFunction {
    pub center: Vec<f64>,
    pub halfwidths: Vec<f64>,
    pub rate: f64,
}

impl BumpTestFunction {
    fn factors(&self, x: &[f64]) -> Option<Vec<(f64, f64)>> {
        x.iter()
            .zip(&self.center)
            .zip(&self.halfwidths)
            .map(|((xi, ci), wi)| {
                let r = (xi - ci) / wi;
                if r.abs() >= 1.0 {
                    None
                } else {
                    Some((cos(FRAC_PI_2 * r), sin(FRAC_PI_2 * r)))
                }
            })
            .collect()
    }
}

impl TestFunction for BumpTestFunction {
    fn value(&self, x: &[f64], t: f64) -> f64 {
        match self.factors(x) {
            Some(f) => (1.0 + self.rate * t) * f.iter().map(|(c, _)| c * c * c * c).product::<f64>(),
            None => 0.0,
        }
    }

    fn time_derivative(&self, x: &[f64], _t: f64) -> f64 {
        match self.factors(x) {
            Some(f) => self.rate * f.iter().map(|(c, _)| c * c * c * c).product::<f64>(),
            None => 0.0,
        }
    }

    fn gradient(&self, axis: usize, x: &[f64], t: f64) -> f64 {
        let Some(f) = self.factors(x) else { return 0.0 };
        let mut g = 1.0 + self.rate * t;
        for (i, (c, s)) in f.iter().enumerate() {
            if i == axis {
                g *= -4.0 * c * c * c * s * PI / (2.0 * self.halfwidths[i]);
            } else {
                g *= c * c * c * c;
            }
        }
        g
    }
}

/// Discrete weak-form residual
/// `∫ u φ dx |_{t1}^{t2} + ∫∫ (-u φ_t + Σ_i flux(u_{x_i}) φ_{x_i}) dx dt`.
///
/// Space uses the midpoint rule: cell centers for `u φ` terms and interior faces
/// for the flux term. Time uses the trapezoid rule over the snapshots in `[t1, t2]`.
pub fn weak_residual(
    sol: &GridSolution,
    phi: &impl TestFunction,
    t1: f64,
    t2: f64,
) -> Result<f64, SolverError> {
    if !(t1 < t2) {
        return Err(SolverError::BadTimeWindow);
    }
    let k1 = sol.snapshot_index(t1).ok_or(SolverError::NotASnapshot(t1))?;
    let k2 = sol.snapshot_index(t2).ok_or(SolverError::NotASnapshot(t2))?;
    let grid = sol.grid();
    let n = grid.dim();
    check_support(sol, phi, &[sol.times()[k1], sol.times()[k2]])?;

    let vol = grid.cell_volume();
    let mut x = vec![0.0; n];
    let pairing = |k: usize, x: &mut [f64]| -> f64 {
        let t = sol.times()[k];
        let u = sol.field(k);
        (0..grid.len())
            .map(|j| {
                grid.position_into(j, x);
                u[j] * phi.value(x, t)
            })
            .sum::<f64>()
            * vol
    };
    let integrand = |k: usize, x: &mut [f64]| -> f64 {
        let t = sol.times()[k];
        let u = sol.field(k);
        let mut acc = 0.0;
        for j in 0..grid.len() {
            grid.position_into(j, x);
            acc -= u[j] * phi.time_derivative(x, t);
            for axis in 0..n {
                if grid.index_along(j, axis) + 1 == grid.dims()[axis] {
                    continue;
                }
                let h = grid.spacing()[axis];
                let d = (u[j + grid.strides()[axis]] - u[j]) / h;
                let centre = x[axis];
                x[axis] = centre + 0.5 * h;
                acc += flux(d, sol.p().get(axis)) * phi.gradient(axis, x, t);
                x[axis] = centre;
            }
        }
        acc * vol
    };

    let boundary_term = pairing(k2, &mut x) - pairing(k1, &mut x);
    let values: Vec<f64> = (k1..=k2).map(|k| integrand(k, &mut x)).collect();
    let times = &sol.times()[k1..=k2];
    let bulk: f64 = values
        .windows(2)
        .zip(times.windows(2))
        .map(|(v, t)| 0.5 * (v[0] + v[1]) * (t[1] - t[0]))
        .sum();
    Ok(boundary_term + bulk)
}

fn check_support(
    sol: &GridSolution,
    phi: &impl TestFunction,
    times: &[f64],
) -> Result<(), SolverError> {
    let grid = sol.grid();
    let n = grid.dim();
    let mut x = vec![0.0; n];
    for &t in times {
        for j in 0..grid.len() {
            let on_edge = (0..n).any(|i| {
                let idx = grid.index_along(j, i);
                idx == 0 || idx + 1 == grid.dims()[i]
            });
            if !on_edge {
                continue;
            }
            grid.position_into(j, &mut x);
            let mut worst = phi.value(&x, t).abs();
            for axis in 0..n {
                worst = worst.max(phi.gradient(axis, &x, t).abs());
            }
            if worst != 0.0 {
                return Err(SolverError::NotCompactlySupported);
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::PowerVector;
    use crate::solver::{Boundary, Grid};
    use approx::assert_relative_eq;

    fn bump() -> BumpTestFunction {
        BumpTestFunction { center: vec![0.0, 0.0], halfwidths: vec![0.6, 0.5], rate: 0.7 }
    }

    fn finite_difference_check(phi: &BumpTestFunction, x: &[f64], t: f64) {
        let e = 1e-6;
        for axis in 0..2 {
            let mut a = x.to_vec();
            let mut b = x.to_vec();
            a[axis] += e;
            b[axis] -= e;
            let fd = (phi.value(&a, t) - phi.value(&b, t)) / (2.0 * e);
            assert_relative_eq!(phi.gradient(axis, x, t), fd, epsilon = 1e-7, max_relative = 1e-6);
        }
        let fd = (phi.value(x, t + e) - phi.value(x, t - e)) / (2.0 * e);
        assert_relative_eq!(phi.time_derivative(x, t), fd, epsilon = 1e-7, max_relative = 1e-6);
    }

    #[test]
    fn bump_derivatives_match_finite_differences() {
        let phi = bump();
        for x in [[0.1, -0.2], [0.45, 0.3], [-0.3, 0.05]] {
            finite_difference_check(&phi, &x, 0.4);
        }
    }

    fn solution(u: impl Fn(&[f64], f64) -> f64) -> GridSolution {
        let g = Grid::covering(&[-1.0, -1.0], &[1.0, 1.0], vec![20, 20], Boundary::ZeroFlux).unwrap();
        let p = PowerVector::new(vec![2.2, 2.4]).unwrap();
        let times: Vec<f64> = (0..=10).map(|k| k as f64 * 0.05).collect();
        GridSolution::from_fn(g, p, times, u).unwrap()
    }

    #[test]
    fn zero_test_function_gives_zero() {
        let sol = solution(|x, t| x[0] * x[0] + t);
        let phi = BumpTestFunction { rate: 0.0, ..bump() };
        struct Zero;
        impl TestFunction for Zero {
            fn value(&self, _: &[f64], _: f64) -> f64 {
                0.0
            }
            fn time_derivative(&self, _: &[f64], _: f64) -> f64 {
                0.0
            }
            fn gradient(&self, _: usize, _: &[f64], _: f64) -> f64 {
                0.0
            }
        }
        assert_eq!(weak_residual(&sol, &Zero, 0.0, 0.5).unwrap(), 0.0);
        assert!(weak_residual(&sol, &phi, 0.0, 0.5).is_ok());
    }

    #[test]
    fn constant_solution_has_vanishing_residual() {
        let sol = solution(|_, _| 1.7);
        let r = weak_residual(&sol, &bump(), 0.1, 0.45).unwrap();
        assert!(r.abs() < 1e-14, "{r}");
    }

    #[test]
    fn rejects_wide_test_function_and_bad_windows() {
        let sol = solution(|_, _| 1.0);
        let wide = BumpTestFunction { halfwidths: vec![1.5, 1.5], ..bump() };
        assert_eq!(weak_residual(&sol, &wide, 0.0, 0.5), Err(SolverError::NotCompactlySupported));
        assert_eq!(weak_residual(&sol, &bump(), 0.5, 0.0), Err(SolverError::BadTimeWindow));
        assert_eq!(weak_residual(&sol, &bump(), 0.0, 0.33), Err(SolverError::NotASnapshot(0.33)));
    }
}
