//! Symmetry data, discrete field representation, and pointwise metric
//! computations for axially symmetric membranes.
//!
//! A membrane here is generated by profile functions on the circle: a map
//! `z : S^1 -> R^m` plus `k` strictly positive radii `r_1..r_k`, each radius
//! sweeping a round sphere factor `S^{d_i}`. The induced metric on the
//! worldvolume has warped-product form with coefficients depending only on
//! first derivatives of the profiles, which is all this module computes.
//!
//! Derivatives of sampled fields are taken with the spectrally exact
//! operator [`crate::interp::fourier_derivative`], so that states that
//! satisfy the gauge identities as continuum objects (homogeneous states,
//! freshly reparametrized states) satisfy them on the grid to rounding
//! rather than to stencil truncation.

use crate::error::{Error, Result};
use crate::grid;
use crate::interp;

/// Tolerance for unit-norm validation of sphere sample vectors.
const UNIT_NORM_TOL: f64 = 1e-12;

/// Structural data of the symmetry ansatz: the dimension `m` of the
/// z-target and the dimensions `d_1..d_k` of the sphere factors.
///
/// Derived quantities: spatial dimension `1 + sum(d_i)` of the membrane and
/// ambient dimension `N = m + k + sum(d_i)` of the Minkowski target.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AxisymmetryShape {
    m: usize,
    d: Vec<u32>,
}

impl AxisymmetryShape {
    /// Validates `m >= 1`, `k >= 1`, and every `d_i >= 1`.
    pub fn new(m: usize, d: Vec<u32>) -> Result<Self> {
        if m < 1 {
            return Err(Error::InvalidShape {
                reason: "z-target dimension m must be at least 1".into(),
            });
        }
        if d.is_empty() {
            return Err(Error::InvalidShape {
                reason: "at least one sphere factor is required".into(),
            });
        }
        if let Some(&bad) = d.iter().find(|&&di| di < 1) {
            return Err(Error::InvalidShape {
                reason: format!("sphere dimensions must be >= 1, got {bad}"),
            });
        }
        Ok(Self { m, d })
    }

    /// The standard square torus ansatz: `z` valued in the plane, one circle
    /// factor (`m = 2`, `k = 1`, `d_1 = 1`).
    pub fn clifford() -> Self {
        Self { m: 2, d: vec![1] }
    }

    /// Dimension of the z-target.
    pub fn m(&self) -> usize {
        self.m
    }

    /// Number of sphere factors.
    pub fn k(&self) -> usize {
        self.d.len()
    }

    /// Sphere dimensions `d_1..d_k`.
    pub fn d(&self) -> &[u32] {
        &self.d
    }

    /// Spatial dimension of the membrane: `1 + sum(d_i)`.
    pub fn spatial_dim(&self) -> u32 {
        1 + self.d.iter().sum::<u32>()
    }

    /// Ambient spatial dimension: `N = m + k + sum(d_i)` (the z-block plus
    /// one `R^{d_i + 1}` block per sphere factor).
    pub fn ambient_dim(&self) -> usize {
        self.m + self.k() + self.d.iter().sum::<u32>() as usize
    }
}

/// Profile fields and their velocities sampled on the periodic grid at one
/// coordinate time.
///
/// Layout: `z[alpha][j]` is the `alpha`-th z-component at grid point `j`,
/// likewise `r`, `vz` (time derivative of `z`), `vr`. All inner arrays share
/// the grid length `n`, which must be even and at least 8; radii must be
/// strictly positive and every entry finite.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldState {
    pub t: f64,
    pub z: Vec<Vec<f64>>,
    pub r: Vec<Vec<f64>>,
    pub vz: Vec<Vec<f64>>,
    pub vr: Vec<Vec<f64>>,
}

impl FieldState {
    /// Builds a state and checks all invariants against `shape`.
    pub fn new(
        t: f64,
        z: Vec<Vec<f64>>,
        r: Vec<Vec<f64>>,
        vz: Vec<Vec<f64>>,
        vr: Vec<Vec<f64>>,
        shape: &AxisymmetryShape,
    ) -> Result<Self> {
        let state = Self { t, z, r, vz, vr };
        state.validate(shape)?;
        Ok(state)
    }

    /// Grid size (length of the inner arrays).
    pub fn n(&self) -> usize {
        self.z.first().map_or(0, Vec::len)
    }

    /// Checks grid size, array shape, finiteness, and radius positivity.
    pub fn validate(&self, shape: &AxisymmetryShape) -> Result<()> {
        let n = self.n();
        if !grid::valid_size(n) {
            return Err(Error::InvalidState {
                reason: format!("grid size {n} must be even and >= {}", grid::MIN_GRID),
            });
        }
        if self.z.len() != shape.m() || self.vz.len() != shape.m() {
            return Err(Error::InvalidState {
                reason: format!(
                    "expected {} z-components, got {} positions / {} velocities",
                    shape.m(),
                    self.z.len(),
                    self.vz.len()
                ),
            });
        }
        if self.r.len() != shape.k() || self.vr.len() != shape.k() {
            return Err(Error::InvalidState {
                reason: format!(
                    "expected {} radius fields, got {} positions / {} velocities",
                    shape.k(),
                    self.r.len(),
                    self.vr.len()
                ),
            });
        }
        for family in [&self.z, &self.r, &self.vz, &self.vr] {
            for field in family {
                if field.len() != n {
                    return Err(Error::InvalidState {
                        reason: format!(
                            "ragged field arrays: expected length {n}, got {}",
                            field.len()
                        ),
                    });
                }
                if let Some(bad) = field.iter().position(|v| !v.is_finite()) {
                    return Err(Error::InvalidState {
                        reason: format!("non-finite entry at grid point {bad}"),
                    });
                }
            }
        }
        if !self.t.is_finite() {
            return Err(Error::InvalidState {
                reason: "non-finite time".into(),
            });
        }
        for (i, field) in self.r.iter().enumerate() {
            if let Some(j) = field.iter().position(|&v| v <= 0.0) {
                return Err(Error::NonPositiveRadius {
                    factor: i + 1,
                    index: j,
                    value: field[j],
                });
            }
        }
        Ok(())
    }

    /// True if every entry of every field is finite.
    pub fn all_finite(&self) -> bool {
        self.t.is_finite()
            && [&self.z, &self.r, &self.vz, &self.vr]
                .iter()
                .all(|fam| fam.iter().all(|f| f.iter().all(|v| v.is_finite())))
    }

    /// Returns a copy with all velocities negated (time reflection about the
    /// current instant).
    pub fn with_negated_velocities(&self) -> Self {
        let flip = |fam: &Vec<Vec<f64>>| {
            fam.iter()
                .map(|f| f.iter().map(|v| -v).collect())
                .collect()
        };
        Self {
            t: self.t,
            z: self.z.clone(),
            r: self.r.clone(),
            vz: flip(&self.vz),
            vr: flip(&self.vr),
        }
    }
}

/// Induced metric coefficients per grid point.
///
/// `g_tt < 0` for time-like states; `g_ty` is the orthogonality residual
/// (zero in the ideal comoving gauge); `sqrt_det` is the coefficient of the
/// worldvolume volume form, `sqrt(|g_tt| g_yy) * prod r_i^{d_i}`.
#[derive(Debug, Clone)]
pub struct MetricField {
    pub g_tt: Vec<f64>,
    pub g_yy: Vec<f64>,
    pub g_ty: Vec<f64>,
    pub sqrt_det: Vec<f64>,
}

/// Pointwise `g_tt = -1 + |vz|^2 + sum vr_i^2` from velocities alone.
///
/// Cheap (no derivatives); the evolution loop uses it every step for floor
/// checks and the full metric uses it as its time-time component.
pub fn g_tt_from_velocities(state: &FieldState) -> Vec<f64> {
    let n = state.n();
    let mut g_tt = vec![-1.0; n];
    for field in state.vz.iter().chain(state.vr.iter()) {
        for (g, &v) in g_tt.iter_mut().zip(field) {
            *g += v * v;
        }
    }
    g_tt
}

/// Pointwise product `prod_i r_i(y_j)^{d_i}` (the sphere-area radius factor).
///
/// Its square is the flux coefficient of the reduced evolution equations,
/// and multiplied by `C` it is the characteristic speed.
pub fn area_radius_product(state: &FieldState, shape: &AxisymmetryShape) -> Vec<f64> {
    let n = state.n();
    let mut p = vec![1.0; n];
    for (field, &di) in state.r.iter().zip(shape.d()) {
        for (pj, &rj) in p.iter_mut().zip(field) {
            *pj *= rj.powi(di as i32);
        }
    }
    p
}

/// Computes the induced metric of `state`.
///
/// Spatial derivatives are spectrally exact; `g_tt` comes pointwise from the
/// velocities. Fails with [`Error::NonTimelike`] if `g_tt >= 0` anywhere.
pub fn compute_metric(state: &FieldState, shape: &AxisymmetryShape) -> Result<MetricField> {
    let n = state.n();
    let g_tt = g_tt_from_velocities(state);
    if let Some(j) = g_tt.iter().position(|&g| g >= 0.0) {
        return Err(Error::NonTimelike { index: j, g_tt: g_tt[j] });
    }

    let dz: Vec<Vec<f64>> = state.z.iter().map(|f| interp::fourier_derivative(f)).collect();
    let dr: Vec<Vec<f64>> = state.r.iter().map(|f| interp::fourier_derivative(f)).collect();

    let mut g_yy = vec![0.0; n];
    let mut g_ty = vec![0.0; n];
    for (df, vf) in dz.iter().zip(&state.vz).chain(dr.iter().zip(&state.vr)) {
        for j in 0..n {
            g_yy[j] += df[j] * df[j];
            g_ty[j] += vf[j] * df[j];
        }
    }

    let area = area_radius_product(state, shape);
    let sqrt_det = (0..n)
        .map(|j| (g_tt[j].abs() * g_yy[j]).sqrt() * area[j])
        .collect();

    Ok(MetricField { g_tt, g_yy, g_ty, sqrt_det })
}

/// Immersivity indicator `|g_tt| * r_1 * ... * r_k` per grid point, plus its
/// minimum over the grid (fixed ascending reduction order).
///
/// The indicator tending to zero is the breakdown signal: either the state
/// stops being time-like (`g_tt -> 0`) or a sphere factor collapses
/// (`r_i -> 0`).
pub fn immersivity_indicator(state: &FieldState, metric: &MetricField) -> (Vec<f64>, f64) {
    let n = state.n();
    let mut per_point = Vec::with_capacity(n);
    for j in 0..n {
        let mut v = metric.g_tt[j].abs();
        for field in &state.r {
            v *= field[j];
        }
        per_point.push(v);
    }
    let min = per_point.iter().fold(f64::INFINITY, |m, &v| m.min(v));
    (per_point, min)
}

/// Embeds the state into Minkowski space `R^{1+N}` as a point cloud.
///
/// `sphere_samples[i]` lists unit vectors in `R^{d_i + 1}` at which the
/// `i`-th sphere factor is sampled; the output contains one point
/// `(t, z(y_j), r_1(y_j) theta_1, ..., r_k(y_j) theta_k)` per grid point and
/// per combination of samples. Export/visualization only.
pub fn reconstruct_embedding(
    state: &FieldState,
    shape: &AxisymmetryShape,
    sphere_samples: &[Vec<Vec<f64>>],
) -> Result<Vec<Vec<f64>>> {
    if sphere_samples.len() != shape.k() {
        return Err(Error::DimensionMismatch {
            factor: sphere_samples.len(),
            reason: format!(
                "need sample lists for {} sphere factors, got {}",
                shape.k(),
                sphere_samples.len()
            ),
        });
    }
    for (i, (samples, &di)) in sphere_samples.iter().zip(shape.d()).enumerate() {
        for theta in samples {
            if theta.len() != di as usize + 1 {
                return Err(Error::DimensionMismatch {
                    factor: i + 1,
                    reason: format!(
                        "sample vector has dimension {}, expected {}",
                        theta.len(),
                        di + 1
                    ),
                });
            }
            let norm = theta.iter().map(|v| v * v).sum::<f64>().sqrt();
            if (norm - 1.0).abs() > UNIT_NORM_TOL {
                return Err(Error::DimensionMismatch {
                    factor: i + 1,
                    reason: format!("sample vector has norm {norm:.15}, expected 1"),
                });
            }
        }
    }

    let n = state.n();
    let point_dim = 1 + shape.ambient_dim();
    let mut cloud = Vec::new();
    // Odometer over the cartesian product of per-factor sample choices.
    let counts: Vec<usize> = sphere_samples.iter().map(Vec::len).collect();
    if counts.contains(&0) {
        return Ok(cloud);
    }
    let mut choice = vec![0usize; shape.k()];
    loop {
        for j in 0..n {
            let mut point = Vec::with_capacity(point_dim);
            point.push(state.t);
            for field in &state.z {
                point.push(field[j]);
            }
            for (i, field) in state.r.iter().enumerate() {
                let theta = &sphere_samples[i][choice[i]];
                for &c in theta {
                    point.push(field[j] * c);
                }
            }
            cloud.push(point);
        }
        // Advance the odometer.
        let mut i = 0;
        loop {
            choice[i] += 1;
            if choice[i] < counts[i] {
                break;
            }
            choice[i] = 0;
            i += 1;
            if i == shape.k() {
                return Ok(cloud);
            }
        }
    }
}
