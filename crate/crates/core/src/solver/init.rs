use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::FRAC_PI_2;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{gaussian_exact, Grid, SolverError};
use crate::math::cos;

/// Initial data menu.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialData {
    /// `A Π cos²(π (x_i - c_i) / (2 w_i))` inside the box `|x_i - c_i| < w_i`, zero outside.
    Bump { center: Vec<f64>, halfwidths: Vec<f64>, amplitude: f64 },
    /// All of `mass` in the cell nearest `center`.
    Spike { center: Vec<f64>, mass: f64 },
    /// Independent uniform values in `[0, max)`.
    Random { max: f64, seed: u64 },
    /// Heat kernel at time `time > 0`.
    Gaussian { time: f64 },
    Constant(f64),
}

impl InitialData {
    pub fn sample(&self, grid: &Grid) -> Result<Vec<f64>, SolverError> {
        let n = grid.dim();
        let check = |len: usize| {
            if len == n {
                Ok(())
            } else {
                Err(SolverError::DimensionMismatch { expected: n, got: len })
            }
        };
        let mut x = vec![0.0; n];
        match self {
            InitialData::Bump { center, halfwidths, amplitude } => {
                check(center.len())?;
                check(halfwidths.len())?;
                if halfwidths.iter().any(|w| !(*w > 0.0)) {
                    return Err(SolverError::BadConfig("bump halfwidths must be positive"));
                }
                Ok((0..grid.len())
                    .map(|k| {
                        grid.position_into(k, &mut x);
                        amplitude * bump_profile(&x, center, halfwidths)
                    })
                    .collect())
            }
            InitialData::Spike { center, mass } => {
                check(center.len())?;
                let multi: Vec<usize> = (0..n)
                    .map(|i| {
                        let j = (center[i] - grid.origin()[i]) / grid.spacing()[i];
                        (j.max(0.0) as usize).min(grid.dims()[i] - 1)
                    })
                    .collect();
                let mut u = vec![0.0; grid.len()];
                u[grid.flat_index(&multi)] = mass / grid.cell_volume();
                Ok(u)
            }
            InitialData::Random { max, seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                Ok((0..grid.len()).map(|_| rng.gen::<f64>() * max).collect())
            }
            InitialData::Gaussian { time } => (0..grid.len())
                .map(|k| {
                    grid.position_into(k, &mut x);
                    gaussian_exact(&x, *time)
                })
                .collect(),
            InitialData::Constant(v) => Ok(vec![*v; grid.len()]),
        }
    }
}

pub(crate) fn bump_profile(x: &[f64], center: &[f64], halfwidths: &[f64]) -> f64 {
    let mut v = 1.0;
    for ((xi, ci), wi) in x.iter().zip(center).zip(halfwidths) {
        let r = (xi - ci) / wi;
        if r.abs() >= 1.0 {
            return 0.0;
        }
        let c = cos(FRAC_PI_2 * r);
        v *= c * c;
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::Boundary;

    #[test]
    fn menu_samples() {
        let g = Grid::covering(&[-1.0, -1.0], &[1.0, 1.0], vec![10, 10], Boundary::ZeroFlux).unwrap();
        let bump = InitialData::Bump { center: vec![0.0, 0.0], halfwidths: vec![0.5, 0.5], amplitude: 2.0 }
            .sample(&g)
            .unwrap();
        assert!(bump.iter().all(|&v| (0.0..=2.0).contains(&v)));
        assert_eq!(bump[0], 0.0);

        let spike = InitialData::Spike { center: vec![0.05, 0.05], mass: 1.0 }.sample(&g).unwrap();
        let total: f64 = spike.iter().sum::<f64>() * g.cell_volume();
        assert!((total - 1.0).abs() < 1e-15);
        assert_eq!(spike.iter().filter(|&&v| v > 0.0).count(), 1);

        let a = InitialData::Random { max: 1.0, seed: 7 }.sample(&g).unwrap();
        let b = InitialData::Random { max: 1.0, seed: 7 }.sample(&g).unwrap();
        let c = InitialData::Random { max: 1.0, seed: 8 }.sample(&g).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert!(a.iter().all(|&v| (0.0..1.0).contains(&v)));

        assert!(InitialData::Gaussian { time: 0.0 }.sample(&g).is_err());
        assert!(InitialData::Bump { center: vec![0.0], halfwidths: vec![1.0], amplitude: 1.0 }
            .sample(&g)
            .is_err());
    }
}
