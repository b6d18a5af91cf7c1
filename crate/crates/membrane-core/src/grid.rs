//! Equispaced periodic grid on the circle: sample points, the fourth-order
//! finite-difference derivative used by the evolution kernels, and the
//! trapezoidal quadrature / norms used by the diagnostics.
//!
//! Grid convention: `n` even, `n >= 8`, nodes `y_j = 2*pi*j/n` for
//! `j = 0..n-1`, spacing `h = 2*pi/n`. All fields are samples of 2*pi-periodic
//! functions and every operation here wraps indices periodically.

use std::f64::consts::TAU;

/// Minimum supported grid size: the 5-point derivative stencil must not wrap
/// onto itself degenerately.
pub const MIN_GRID: usize = 8;

/// Grid spacing `h = 2*pi/n`.
pub fn step(n: usize) -> f64 {
    TAU / n as f64
}

/// Sample points `y_j = 2*pi*j/n`.
pub fn points(n: usize) -> Vec<f64> {
    let h = step(n);
    (0..n).map(|j| h * j as f64).collect()
}

/// Returns true when `n` is a valid grid size (even and at least [`MIN_GRID`]).
pub fn valid_size(n: usize) -> bool {
    n >= MIN_GRID && n.is_multiple_of(2)
}

/// Fourth-order centered periodic first derivative:
/// `(8 (f[j+1] - f[j-1]) - (f[j+2] - f[j-2])) / (12 h)`, indices mod `n`.
///
/// The paired-difference grouping makes the result exactly `0.0` on
/// constant data, which downstream code relies on (zero fields stay
/// identically zero under the flux operators). On smooth periodic fields
/// the error decays like `h^4`.
///
/// # Panics
/// If `f.len()` is not a valid grid size.
pub fn spatial_derivative(f: &[f64]) -> Vec<f64> {
    let n = f.len();
    assert!(valid_size(n), "spatial_derivative needs an even grid, n >= 8");
    let inv12h = 1.0 / (12.0 * step(n));
    (0..n)
        .map(|j| {
            let fm2 = f[(j + n - 2) % n];
            let fm1 = f[(j + n - 1) % n];
            let fp1 = f[(j + 1) % n];
            let fp2 = f[(j + 2) % n];
            (8.0 * (fp1 - fm1) - (fp2 - fm2)) * inv12h
        })
        .collect()
}

/// Amplification factor of [`spatial_derivative`] on the fundamental mode:
/// the stencil maps `sin(y)` to `lambda(h) * cos(y)` with
/// `lambda = (8 sin h - sin 2h) / (6 h) = 1 - h^4/30 + O(h^6)`.
///
/// Exposed so tests can compare grid evaluations against closed-form
/// expectations without re-deriving the symbol.
pub fn stencil_mode1_factor(n: usize) -> f64 {
    let h = step(n);
    (8.0 * h.sin() - (2.0 * h).sin()) / (6.0 * h)
}

/// Periodic trapezoidal integral `h * sum_j f_j` over one period.
///
/// For smooth periodic integrands this quadrature is spectrally accurate.
pub fn trapezoid_integral(f: &[f64]) -> f64 {
    step(f.len()) * f.iter().sum::<f64>()
}

/// Mean value over the period: `trapezoid_integral / (2*pi) = (1/n) sum_j f_j`.
pub fn mean(f: &[f64]) -> f64 {
    f.iter().sum::<f64>() / f.len() as f64
}

/// Maximum absolute value, reduced in ascending index order for
/// bit-reproducibility.
pub fn max_abs(f: &[f64]) -> f64 {
    f.iter().fold(0.0_f64, |m, &v| m.max(v.abs()))
}

/// Discrete L2 norm `sqrt(h * sum_j f_j^2)`.
pub fn l2_norm(f: &[f64]) -> f64 {
    (step(f.len()) * f.iter().map(|v| v * v).sum::<f64>()).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivative_of_constant_is_zero() {
        let f = vec![3.7; 64];
        for v in spatial_derivative(&f) {
            assert_eq!(v, 0.0);
        }
    }

    #[test]
    fn derivative_of_sine_matches_cosine() {
        let n = 64;
        let y = points(n);
        let f: Vec<f64> = y.iter().map(|&y| y.sin()).collect();
        let df = spatial_derivative(&f);
        let err = df
            .iter()
            .zip(&y)
            .map(|(&d, &y)| (d - y.cos()).abs())
            .fold(0.0_f64, f64::max);
        assert!(err < 1e-5, "max error {err:.3e}");
    }

    #[test]
    fn derivative_converges_at_fourth_order() {
        let err_at = |n: usize| {
            let y = points(n);
            let f: Vec<f64> = y.iter().map(|&y| y.sin()).collect();
            spatial_derivative(&f)
                .iter()
                .zip(&y)
                .map(|(&d, &y)| (d - y.cos()).abs())
                .fold(0.0_f64, f64::max)
        };
        let ratio = err_at(64) / err_at(128);
        assert!((ratio - 16.0).abs() < 0.5, "observed ratio {ratio:.2}");
    }

    #[test]
    fn mode1_factor_matches_direct_stencil() {
        for n in [8, 32, 64, 256] {
            let y = points(n);
            let f: Vec<f64> = y.iter().map(|&y| y.sin()).collect();
            let df = spatial_derivative(&f);
            let lambda = stencil_mode1_factor(n);
            for (j, &d) in df.iter().enumerate() {
                assert!(
                    (d - lambda * y[j].cos()).abs() < 1e-13,
                    "n = {n}, j = {j}"
                );
            }
        }
    }

    #[test]
    fn trapezoid_is_exact_for_pure_modes() {
        let n = 32;
        let f: Vec<f64> = points(n).iter().map(|&y| 2.0 + (3.0 * y).cos()).collect();
        assert!((trapezoid_integral(&f) - 2.0 * TAU).abs() < 1e-13);
        assert!((mean(&f) - 2.0).abs() < 1e-14);
    }

    #[test]
    fn norms_on_known_field() {
        let n = 16;
        let f = vec![-2.0; n];
        assert_eq!(max_abs(&f), 2.0);
        let l2 = l2_norm(&f);
        assert!((l2 - (TAU * 4.0).sqrt()).abs() < 1e-14);
    }

    #[test]
    #[should_panic]
    fn rejects_small_grid()
    {
        spatial_derivative(&[1.0; 6]);
    }
}
