//! Interpolation and spectrally exact differentiation on the periodic grid.
//!
//! Three tools live here, all operating on samples of smooth 2*pi-periodic
//! functions at the equispaced nodes of [`crate::grid`]:
//!
//! * [`fourier_derivative`] — the closed-form Fourier differentiation matrix
//!   (a circulant with cotangent kernel). For fields whose Fourier content is
//!   resolved by the grid this evaluates the derivative of the trigonometric
//!   interpolant at the nodes, i.e. it is exact up to rounding. The metric
//!   and gauge diagnostics use it so that algebraic identities of the
//!   continuum (orthogonality after projection, uniform density after
//!   reparametrization) hold to machine precision instead of being polluted
//!   by stencil truncation.
//! * [`trig_interpolate`] — evaluation of the same trigonometric interpolant
//!   at arbitrary points, used to resample fields during reparametrization.
//! * [`PeriodicSpline`] — a periodic cubic spline on uniform knots, used to
//!   represent and invert the reparametrization map.
//!
//! The evolution kernels deliberately do *not* use these: time stepping is
//! pinned to the fourth-order stencil of [`crate::grid::spatial_derivative`].

use std::f64::consts::TAU;

use crate::grid;

/// Derivative of the trigonometric interpolant at the nodes.
///
/// For even `n` the interpolant through `(y_j, f_j)` is
/// `p(x) = sum_j f_j phi(x - y_j)` with the periodic sinc
/// `phi(u) = sin(n u / 2) cot(u / 2) / n`, and its derivative at the nodes is
/// the circulant
///
/// `p'(y_i) = sum_{p=1}^{n/2-1} k_p (f[i-p] - f[i+p])`,
/// `k_p = (-1)^p / 2 * cot(p h / 2)`.
///
/// The paired form keeps the operator exactly antisymmetric, so constants map
/// to exactly zero.
pub fn fourier_derivative(f: &[f64]) -> Vec<f64> {
    let n = f.len();
    assert!(grid::valid_size(n), "fourier_derivative needs an even grid, n >= 8");
    let h = grid::step(n);
    // k_p for p = 1 .. n/2 - 1; the p = n/2 entry is cot(pi/2) = 0.
    let kernel: Vec<f64> = (1..n / 2)
        .map(|p| {
            let sign = if p % 2 == 0 { 0.5 } else { -0.5 };
            sign / (0.5 * p as f64 * h).tan()
        })
        .collect();
    (0..n)
        .map(|i| {
            let mut acc = 0.0;
            for (idx, &k) in kernel.iter().enumerate() {
                let p = idx + 1;
                acc += k * (f[(i + n - p) % n] - f[(i + p) % n]);
            }
            acc
        })
        .collect()
}

/// Evaluates the trigonometric interpolant of `f` at an arbitrary point `x`.
///
/// Uses the periodic sinc expansion `p(x) = sum_j f_j phi(x - y_j)` with
/// `phi(u) = sin(n u / 2) cos(u / 2) / (n sin(u / 2))`. Exact (to rounding)
/// for fields band-limited below the Nyquist mode; spectrally accurate for
/// smooth fields. Cost is `O(n)` per evaluation.
pub fn trig_interpolate(f: &[f64], x: f64) -> f64 {
    let n = f.len();
    assert!(grid::valid_size(n), "trig_interpolate needs an even grid, n >= 8");
    let h = grid::step(n);
    let nf = n as f64;
    let mut acc = 0.0;
    for (j, &fj) in f.iter().enumerate() {
        let u = x - h * j as f64;
        let s = (0.5 * u).sin();
        if s.abs() < 1e-14 {
            // x coincides with node j (mod 2*pi); every other basis function
            // vanishes there, so the interpolant reproduces the sample.
            return fj;
        }
        acc += fj * (0.5 * nf * u).sin() * (0.5 * u).cos() / (nf * s);
    }
    acc
}

/// Antiderivative of the oscillating part of a sampled periodic function.
///
/// Built from the real Fourier coefficients of the samples, `eval(y)` returns
/// `F(y) = integral_0^y (w(s) - mean(w)) ds`
///
/// for the trigonometric interpolant `w`. `F` is itself 2*pi-periodic
/// (the mean has been removed), smooth, and spectrally accurate; it is the
/// backbone of the area-density reparametrization, where the new coordinate
/// is `C * (mean * y + F(y))`.
#[derive(Debug, Clone)]
pub struct TrigAntiderivative {
    mean: f64,
    /// Coefficients of `w - mean`: `a_k cos(k y) + b_k sin(k y)`, k = 1..n/2.
    /// The Nyquist entry holds the half-weight cosine coefficient, b = 0.
    cos_amp: Vec<f64>,
    sin_amp: Vec<f64>,
}

impl TrigAntiderivative {
    /// Fits the Fourier coefficients of `w` by direct summation (`O(n^2)`;
    /// the reparametrization calls this once per run, so no transform
    /// machinery is warranted).
    pub fn fit(w: &[f64]) -> Self {
        let n = w.len();
        assert!(grid::valid_size(n), "TrigAntiderivative needs an even grid, n >= 8");
        let h = grid::step(n);
        let mean = grid::mean(w);
        let half = n / 2;
        let mut cos_amp = Vec::with_capacity(half);
        let mut sin_amp = Vec::with_capacity(half);
        for k in 1..=half {
            let mut ac = 0.0;
            let mut as_ = 0.0;
            for (j, &wj) in w.iter().enumerate() {
                let arg = k as f64 * h * j as f64;
                ac += wj * arg.cos();
                as_ += wj * arg.sin();
            }
            // Interior modes carry weight 2/n; the Nyquist cosine carries 1/n
            // (the standard convention for the even-n trigonometric
            // interpolant, matching `trig_interpolate`).
            let weight = if k == half { 1.0 / n as f64 } else { 2.0 / n as f64 };
            cos_amp.push(weight * ac);
            sin_amp.push(if k == half { 0.0 } else { weight * as_ });
        }
        Self { mean, cos_amp, sin_amp }
    }

    /// Mean of the fitted samples.
    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// `integral_0^y (w(s) - mean) ds`, evaluated term by term.
    pub fn eval(&self, y: f64) -> f64 {
        let mut acc = 0.0;
        for (idx, (&a, &b)) in self.cos_amp.iter().zip(&self.sin_amp).enumerate() {
            let k = (idx + 1) as f64;
            let arg = k * y;
            acc += (a * arg.sin() + b * (1.0 - arg.cos())) / k;
        }
        acc
    }

    /// Derivative of [`Self::eval`], i.e. `w(y) - mean` for the interpolant.
    pub fn deriv(&self, y: f64) -> f64 {
        let mut acc = 0.0;
        for (idx, (&a, &b)) in self.cos_amp.iter().zip(&self.sin_amp).enumerate() {
            let k = (idx + 1) as f64;
            let arg = k * y;
            acc += a * arg.cos() + b * arg.sin();
        }
        acc
    }
}

/// Periodic cubic spline on the uniform grid, in second-derivative form.
///
/// Solves the cyclic tridiagonal continuity system with the Sherman-Morrison
/// correction on top of the Thomas algorithm. `C^2`-smooth across the period
/// boundary.
#[derive(Debug, Clone)]
pub struct PeriodicSpline {
    values: Vec<f64>,
    second: Vec<f64>,
    h: f64,
}

impl PeriodicSpline {
    /// Builds the spline through `(y_j, f_j)` with period 2*pi.
    pub fn new(f: &[f64]) -> Self {
        let n = f.len();
        assert!(grid::valid_size(n), "PeriodicSpline needs an even grid, n >= 8");
        let h = grid::step(n);
        // Continuity of S' at every knot: M[j-1] + 4 M[j] + M[j+1] = d[j],
        // d[j] = 6 (f[j-1] - 2 f[j] + f[j+1]) / h^2, indices mod n.
        let d: Vec<f64> = (0..n)
            .map(|j| {
                6.0 * (f[(j + n - 1) % n] - 2.0 * f[j] + f[(j + 1) % n]) / (h * h)
            })
            .collect();
        let second = solve_cyclic_tridiagonal(4.0, &d);
        Self { values: f.to_vec(), second, h }
    }

    fn locate(&self, x: f64) -> (usize, f64) {
        let n = self.values.len();
        let wrapped = x.rem_euclid(TAU);
        let mut j = (wrapped / self.h) as usize;
        if j >= n {
            j = n - 1;
        }
        (j, wrapped - self.h * j as f64)
    }

    /// Spline value at `x` (any real; evaluated periodically).
    pub fn eval(&self, x: f64) -> f64 {
        let n = self.values.len();
        let (j, t) = self.locate(x);
        let jp = (j + 1) % n;
        let h = self.h;
        let (fa, fb) = (self.values[j], self.values[jp]);
        let (ma, mb) = (self.second[j], self.second[jp]);
        let u = h - t;
        ma * u * u * u / (6.0 * h)
            + mb * t * t * t / (6.0 * h)
            + (fa - ma * h * h / 6.0) * u / h
            + (fb - mb * h * h / 6.0) * t / h
    }

    /// Spline derivative at `x`.
    pub fn deriv(&self, x: f64) -> f64 {
        let n = self.values.len();
        let (j, t) = self.locate(x);
        let jp = (j + 1) % n;
        let h = self.h;
        let (fa, fb) = (self.values[j], self.values[jp]);
        let (ma, mb) = (self.second[j], self.second[jp]);
        let u = h - t;
        -ma * u * u / (2.0 * h) + mb * t * t / (2.0 * h) + (fb - fa) / h
            - (mb - ma) * h / 6.0
    }
}

/// Solves the cyclic tridiagonal system with constant diagonals
/// `x[j-1] + diag * x[j] + x[j+1] = d[j]` (indices mod n) via the
/// Sherman-Morrison splitting.
fn solve_cyclic_tridiagonal(diag: f64, d: &[f64]) -> Vec<f64> {
    let n = d.len();
    assert!(n >= 3);
    // A = A' + u v^T with u = (gamma, 0, .., 0, 1), v = (1, 0, .., 0, 1/gamma),
    // where A' is tridiagonal with modified corners.
    let gamma = -diag;
    let mut b = vec![diag; n];
    b[0] = diag - gamma;
    b[n - 1] = diag - 1.0 / gamma;
    let x1 = solve_tridiagonal(&b, d);
    let mut u = vec![0.0; n];
    u[0] = gamma;
    u[n - 1] = 1.0;
    let x2 = solve_tridiagonal(&b, &u);
    let vx1 = x1[0] + x1[n - 1] / gamma;
    let vx2 = x2[0] + x2[n - 1] / gamma;
    let factor = vx1 / (1.0 + vx2);
    x1.iter().zip(&x2).map(|(&a, &c)| a - factor * c).collect()
}

/// Thomas algorithm for a (non-cyclic) tridiagonal system with unit
/// off-diagonals and the given main diagonal.
fn solve_tridiagonal(diag: &[f64], d: &[f64]) -> Vec<f64> {
    let n = d.len();
    let mut c_prime = vec![0.0; n];
    let mut d_prime = vec![0.0; n];
    c_prime[0] = 1.0 / diag[0];
    d_prime[0] = d[0] / diag[0];
    for i in 1..n {
        let m = diag[i] - c_prime[i - 1];
        c_prime[i] = 1.0 / m;
        d_prime[i] = (d[i] - d_prime[i - 1]) / m;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = d_prime[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = d_prime[i] - c_prime[i] * x[i + 1];
    }
    x
}
