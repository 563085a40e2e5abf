use core::f64::consts::PI;

use super::SolverError;
use crate::math::{exp, powf};

/// Heat kernel `(4πt)^{-N/2} exp(-|x|²/(4t))`, the exact solution when every `p_i = 2`.
pub fn gaussian_exact(x: &[f64], t: f64) -> Result<f64, SolverError> {
    if !(t > 0.0) {
        return Err(SolverError::NonPositiveTime(t));
    }
    let r2: f64 = x.iter().map(|v| v * v).sum();
    let n = x.len() as f64;
    Ok(powf(4.0 * PI * t, -0.5 * n) * exp(-r2 / (4.0 * t)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn kernel_values() {
        // (4π)^{-1/2} and (3π)^{-1/2}
        assert_relative_eq!(gaussian_exact(&[0.0], 1.0).unwrap(), 0.282_094_791_773_878_1, max_relative = 1e-14);
        assert_relative_eq!(gaussian_exact(&[0.0], 0.75).unwrap(), 0.325_735_007_935_279_9, max_relative = 1e-14);
        let a = gaussian_exact(&[0.3, -1.2], 0.4).unwrap();
        let b = gaussian_exact(&[-0.3, 1.2], 0.4).unwrap();
        assert_eq!(a, b);
        assert!(gaussian_exact(&[0.0], 0.0).is_err());
    }
}
