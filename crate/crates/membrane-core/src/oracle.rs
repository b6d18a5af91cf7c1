//! Homogeneous ("square-torus") reduction used as independent ground truth.
//!
//! For profiles of the form `z = rho(t) (cos y, sin y)`, `r_i = a_i(t)` the
//! reduced PDE collapses to an ODE system,
//!
//! ```text
//! rho'' = -C^2 (prod a_i^{2 d_i}) rho
//! a_j'' = -d_j (1 - rho'^2 - sum a_i'^2) / a_j
//! ```
//!
//! which this module integrates to high accuracy with an embedded
//! Dormand-Prince 5(4) pair and adaptive step control. PDE runs on lifted
//! versions of these states must reproduce the ODE trajectories; the
//! suite's reference collapse time is produced here (and cross-checked
//! against closed-form quadrature in the tests) rather than hand-entered.
//!
//! Along exact trajectories the quantity `sqrt(1 - v^2) / (rho prod
//! a_i^{d_i})` is a constant of motion equal to the gauge constant `C`;
//! its drift bounds the integration error independently of the controller.
//!
//! Integration stops when `min(rho, a_i, 1 - v^2)` reaches [`ORACLE_FLOOR`]
//! (the state is about to leave the admissible set) or at the requested
//! horizon; the crossing time is refined by bisection on the step size to
//! an absolute tolerance of 1e-10.

use crate::error::{Error, Result};
use crate::gauge::GaugeConstant;
use crate::geometry::{AxisymmetryShape, FieldState};
use crate::grid;

/// Stopping floor for `min(rho, a_i, 1 - v^2)`.
pub const ORACLE_FLOOR: f64 = 1e-8;
/// Absolute tolerance of the collapse-time bisection.
const BISECTION_TOL: f64 = 1e-10;
/// Hard cap on accepted + rejected steps per call.
const MAX_ODE_STEPS: usize = 2_000_000;

/// Homogeneous state: the z-circle radius `rho`, one radius `a_i` per
/// sphere factor `S^{d_i}`, their velocities, and the gauge constant `c`
/// (computed from the data at construction and carried unchanged).
#[derive(Debug, Clone, PartialEq)]
pub struct CliffordState {
    pub t: f64,
    pub rho: f64,
    pub rho_dot: f64,
    pub a: Vec<f64>,
    pub a_dot: Vec<f64>,
    pub d: Vec<u32>,
    pub c: f64,
}

impl CliffordState {
    /// Validates the data and computes the gauge constant
    /// `c = sqrt(1 - v^2) / (rho prod a_i^{d_i})`.
    pub fn new(
        t: f64,
        rho: f64,
        rho_dot: f64,
        a: Vec<f64>,
        a_dot: Vec<f64>,
        d: Vec<u32>,
    ) -> Result<Self> {
        let mut state = Self { t, rho, rho_dot, a, a_dot, d, c: f64::NAN };
        state.c = state.invariant();
        state.validate()?;
        Ok(state)
    }

    /// The minimal compact case (`k = 1`, `d_1 = 1`) with velocities.
    pub fn square_torus(rho: f64, a: f64, rho_dot: f64, a_dot: f64) -> Result<Self> {
        Self::new(0.0, rho, rho_dot, vec![a], vec![a_dot], vec![1])
    }

    /// The minimal compact case at rest.
    pub fn square_torus_rest(rho: f64, a: f64) -> Result<Self> {
        Self::square_torus(rho, a, 0.0, 0.0)
    }

    pub fn validate(&self) -> Result<()> {
        if self.d.is_empty() || self.d.iter().any(|&di| di < 1) {
            return Err(Error::InvalidState {
                reason: "sphere dimensions must be a nonempty list of values >= 1".into(),
            });
        }
        if self.a.len() != self.d.len() || self.a_dot.len() != self.d.len() {
            return Err(Error::InvalidState {
                reason: format!(
                    "expected {} radii and velocities, got {} / {}",
                    self.d.len(),
                    self.a.len(),
                    self.a_dot.len()
                ),
            });
        }
        let finite = self.t.is_finite()
            && self.rho.is_finite()
            && self.rho_dot.is_finite()
            && self.a.iter().chain(&self.a_dot).all(|v| v.is_finite())
            && self.c.is_finite();
        if !finite {
            return Err(Error::InvalidState { reason: "non-finite entry".into() });
        }
        if self.rho <= 0.0 {
            return Err(Error::InvalidState {
                reason: format!("z-circle radius must be positive, got {}", self.rho),
            });
        }
        for (i, &ai) in self.a.iter().enumerate() {
            if ai <= 0.0 {
                return Err(Error::NonPositiveRadius { factor: i + 1, index: 0, value: ai });
            }
        }
        let v2 = self.speed_squared();
        if v2 >= 1.0 {
            return Err(Error::NonTimelike { index: 0, g_tt: v2 - 1.0 });
        }
        Ok(())
    }

    pub fn speed_squared(&self) -> f64 {
        self.rho_dot * self.rho_dot + self.a_dot.iter().map(|v| v * v).sum::<f64>()
    }

    /// `prod a_i^{d_i}`.
    pub fn area_product(&self) -> f64 {
        self.a
            .iter()
            .zip(&self.d)
            .map(|(&ai, &di)| ai.powi(di as i32))
            .product()
    }

    /// `sqrt(1 - v^2) / (rho prod a_i^{d_i})`; a constant of motion whose
    /// value is the gauge constant.
    pub fn invariant(&self) -> f64 {
        (1.0 - self.speed_squared()).sqrt() / (self.rho * self.area_product())
    }

    /// `min(rho, a_i, 1 - v^2)`: integration stops when this reaches
    /// [`ORACLE_FLOOR`].
    pub fn stop_quantity(&self) -> f64 {
        let mut q = self.rho.min(1.0 - self.speed_squared());
        for &ai in &self.a {
            q = q.min(ai);
        }
        q
    }

    /// `|g_tt| * prod a_i`, the immersivity indicator of the lifted state.
    pub fn indicator(&self) -> f64 {
        (1.0 - self.speed_squared()) * self.a.iter().product::<f64>()
    }

    /// Shape of the lifted grid state (`m = 2` plus this state's factors).
    pub fn shape(&self) -> AxisymmetryShape {
        AxisymmetryShape::new(2, self.d.clone()).expect("dimensions validated at construction")
    }

    pub fn gauge_constant(&self) -> Result<GaugeConstant> {
        GaugeConstant::new(self.c)
    }

    fn pack(&self) -> Vec<f64> {
        let k = self.a.len();
        let mut y = Vec::with_capacity(2 + 2 * k);
        y.push(self.rho);
        y.push(self.rho_dot);
        y.extend_from_slice(&self.a);
        y.extend_from_slice(&self.a_dot);
        y
    }

    fn unpack(&self, t: f64, y: &[f64]) -> CliffordState {
        let k = self.a.len();
        CliffordState {
            t,
            rho: y[0],
            rho_dot: y[1],
            a: y[2..2 + k].to_vec(),
            a_dot: y[2 + k..2 + 2 * k].to_vec(),
            d: self.d.clone(),
            c: self.c,
        }
    }
}

/// Second derivatives `(rho'', a_j'')` of the homogeneous system.
pub fn clifford_rhs(s: &CliffordState) -> Result<(f64, Vec<f64>)> {
    let v2 = s.speed_squared();
    if v2 >= 1.0 {
        return Err(Error::NonTimelike { index: 0, g_tt: v2 - 1.0 });
    }
    if s.rho <= 0.0 {
        return Err(Error::InvalidState {
            reason: format!("z-circle radius must be positive, got {}", s.rho),
        });
    }
    for (i, &ai) in s.a.iter().enumerate() {
        if ai <= 0.0 {
            return Err(Error::NonPositiveRadius { factor: i + 1, index: 0, value: ai });
        }
    }
    let area = s.area_product();
    let rho_ddot = -s.c * s.c * area * area * s.rho;
    let g_abs = 1.0 - v2;
    let a_ddot = s
        .a
        .iter()
        .zip(&s.d)
        .map(|(&ai, &di)| -(di as f64) * g_abs / ai)
        .collect();
    Ok((rho_ddot, a_ddot))
}

// Dormand-Prince 5(4) tableau.
const A2: [f64; 1] = [1.0 / 5.0];
const A3: [f64; 2] = [3.0 / 40.0, 9.0 / 40.0];
const A4: [f64; 3] = [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0];
const A5: [f64; 4] = [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0];
const A6: [f64; 5] = [
    9017.0 / 3168.0,
    -355.0 / 33.0,
    46732.0 / 5247.0,
    49.0 / 176.0,
    -5103.0 / 18656.0,
];
const B5: [f64; 6] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
];
/// Difference between the 5th- and embedded 4th-order weights.
const ERR: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

fn combo(y: &[f64], h: f64, ks: &[&[f64]], ws: &[f64]) -> Vec<f64> {
    (0..y.len())
        .map(|i| {
            let slope: f64 = ks.iter().zip(ws).map(|(k, &w)| w * k[i]).sum();
            y[i] + h * slope
        })
        .collect()
}

/// One trial Dormand-Prince step; returns the 5th-order solution and the
/// scaled error estimate (acceptable when <= 1).
fn dp_step(
    y: &[f64],
    h: f64,
    tol: f64,
    deriv: &impl Fn(&[f64]) -> Result<Vec<f64>>,
) -> Result<(Vec<f64>, f64)> {
    let k1 = deriv(y)?;
    let k2 = deriv(&combo(y, h, &[&k1], &A2))?;
    let k3 = deriv(&combo(y, h, &[&k1, &k2], &A3))?;
    let k4 = deriv(&combo(y, h, &[&k1, &k2, &k3], &A4))?;
    let k5 = deriv(&combo(y, h, &[&k1, &k2, &k3, &k4], &A5))?;
    let k6 = deriv(&combo(y, h, &[&k1, &k2, &k3, &k4, &k5], &A6))?;
    let y5 = combo(y, h, &[&k1, &k2, &k3, &k4, &k5, &k6], &B5);
    let k7 = deriv(&y5)?;

    let ks: [&[f64]; 7] = [&k1, &k2, &k3, &k4, &k5, &k6, &k7];
    let mut err = 0.0_f64;
    for i in 0..y.len() {
        let e: f64 = ks.iter().zip(&ERR).map(|(k, &w)| w * k[i]).sum::<f64>() * h;
        let scale = tol * (1.0 + y[i].abs().max(y5[i].abs()));
        err = err.max((e / scale).abs());
    }
    if !err.is_finite() {
        return Err(Error::NonFinite { context: "ODE step error estimate".into() });
    }
    Ok((y5, err))
}

fn step_scale(err: f64) -> f64 {
    (0.9 * err.max(1e-12).powf(-0.2)).clamp(0.2, 5.0)
}

/// Derivative of the packed vector `[rho, rho', a.., a'..]`.
fn packed_deriv(template: &CliffordState) -> impl Fn(&[f64]) -> Result<Vec<f64>> + '_ {
    let k = template.a.len();
    move |y: &[f64]| {
        let s = template.unpack(0.0, y);
        let (rho_ddot, a_ddot) = clifford_rhs(&s)?;
        let mut dy = Vec::with_capacity(2 + 2 * k);
        dy.push(y[1]);
        dy.push(rho_ddot);
        dy.extend_from_slice(&y[2 + k..2 + 2 * k]);
        dy.extend_from_slice(&a_ddot);
        Ok(dy)
    }
}

fn stop_of(template: &CliffordState, y: &[f64]) -> f64 {
    template.unpack(0.0, y).stop_quantity()
}

/// Projects an accepted step back onto the level set of the constant of
/// motion, `1 - v^2 = (c rho prod a_i^{d_i})^2`, by rescaling the
/// velocity block. The exact trajectory lies on this set, so the
/// correction is the size of the local error; it keeps the conserved
/// quantity at its initial value to rounding instead of letting
/// truncation error accumulate. Skipped near rest points (where the
/// rescaling is ill-conditioned) and whenever the correction is not a
/// small one.
fn project_invariant(template: &CliffordState, y: &mut [f64]) {
    let k = template.a.len();
    let area: f64 = y[2..2 + k]
        .iter()
        .zip(&template.d)
        .map(|(&ai, &di)| ai.powi(di as i32))
        .product();
    let target = 1.0 - (template.c * y[0] * area).powi(2);
    let v2 = y[1] * y[1] + y[2 + k..2 + 2 * k].iter().map(|v| v * v).sum::<f64>();
    if target <= 1e-20 || v2 <= 1e-20 {
        return;
    }
    let scale = (target / v2).sqrt();
    if !(0.5..=2.0).contains(&scale) {
        return;
    }
    y[1] *= scale;
    for v in &mut y[2 + k..2 + 2 * k] {
        *v *= scale;
    }
}

/// Integrates from `s0` toward `t_end` (either direction) with local error
/// tolerance `tol`, stopping early when the state approaches the boundary
/// of the admissible set.
///
/// Returns the accepted trajectory (starting with `s0`) and the floor
/// crossing time, if one occurred before the horizon. Trial steps that
/// fail outright (stages leaving the admissible set) are treated as
/// crossed territory: the step shrinks, and the bisection counts them on
/// the far side.
pub fn clifford_integrate(
    s0: &CliffordState,
    t_end: f64,
    tol: f64,
) -> Result<(Vec<CliffordState>, Option<f64>)> {
    s0.validate()?;
    let tol = tol.max(1e-14);
    let mut traj = vec![s0.clone()];
    if s0.stop_quantity() < ORACLE_FLOOR {
        return Ok((traj, Some(s0.t)));
    }
    let total = (t_end - s0.t).abs();
    if total == 0.0 {
        return Ok((traj, None));
    }
    let sign = if t_end >= s0.t { 1.0 } else { -1.0 };
    let deriv = packed_deriv(s0);

    let mut y = s0.pack();
    let mut t_off = 0.0_f64; // unsigned distance from s0.t
    let mut h = 1e-3_f64.min(total);
    let mut collapse = None;

    for _ in 0..MAX_ODE_STEPS {
        if total - t_off <= 1e-14 {
            break;
        }
        h = h.min(total - t_off);
        match dp_step(&y, sign * h, tol, &deriv) {
            Ok((mut y_new, err)) if err <= 1.0 => {
                project_invariant(s0, &mut y_new);
                if stop_of(s0, &y_new) < ORACLE_FLOOR {
                    // Crossed: bisect the step size down to the crossing.
                    let (mut lo, mut hi) = (0.0_f64, h);
                    let mut y_lo = y.clone();
                    while hi - lo > BISECTION_TOL {
                        let mid = 0.5 * (lo + hi);
                        match dp_step(&y, sign * mid, tol, &deriv) {
                            Ok((mut y_mid, _)) => {
                                project_invariant(s0, &mut y_mid);
                                if stop_of(s0, &y_mid) >= ORACLE_FLOOR {
                                    lo = mid;
                                    y_lo = y_mid;
                                } else {
                                    hi = mid;
                                }
                            }
                            _ => hi = mid,
                        }
                    }
                    collapse = Some(s0.t + sign * (t_off + hi));
                    traj.push(s0.unpack(s0.t + sign * (t_off + lo), &y_lo));
                    break;
                }
                t_off += h;
                y = y_new;
                traj.push(s0.unpack(s0.t + sign * t_off, &y));
                h *= step_scale(err);
            }
            Ok((_, err)) => h *= step_scale(err),
            Err(_) => {
                h *= 0.5;
                if h < 1e-13 {
                    collapse = Some(s0.t + sign * t_off);
                    break;
                }
            }
        }
    }
    Ok((traj, collapse))
}

/// Integrates `s0` to each requested time (monotone away from `s0.t`,
/// either direction) and returns the state at those times exactly.
///
/// Stops early — returning fewer states — if the floor is crossed or a
/// step fails before the remaining targets are reached.
pub fn clifford_states_at(
    s0: &CliffordState,
    times: &[f64],
    tol: f64,
) -> Result<Vec<CliffordState>> {
    s0.validate()?;
    let tol = tol.max(1e-14);
    if times.is_empty() {
        return Ok(Vec::new());
    }
    let sign = if times[times.len() - 1] >= s0.t { 1.0 } else { -1.0 };
    for pair in times.windows(2) {
        if sign * (pair[1] - pair[0]) <= 0.0 {
            return Err(Error::InvalidState {
                reason: "requested times must be strictly monotone away from the start".into(),
            });
        }
    }
    let deriv = packed_deriv(s0);
    let mut y = s0.pack();
    let mut t_off = 0.0_f64;
    let mut h = 1e-3_f64;
    let mut out = Vec::with_capacity(times.len());
    let mut budget = MAX_ODE_STEPS;

    'targets: for &target in times {
        let target_off = sign * (target - s0.t);
        if target_off < 0.0 {
            return Err(Error::InvalidState {
                reason: "requested times must lie on one side of the start".into(),
            });
        }
        loop {
            if budget == 0 {
                return Err(Error::InvalidState {
                    reason: "ODE step budget exhausted".into(),
                });
            }
            budget -= 1;
            let rem = target_off - t_off;
            if rem <= 1e-14 {
                out.push(s0.unpack(target, &y));
                continue 'targets;
            }
            let h_try = h.min(rem);
            match dp_step(&y, sign * h_try, tol, &deriv) {
                Ok((mut y_new, err)) if err <= 1.0 => {
                    project_invariant(s0, &mut y_new);
                    if stop_of(s0, &y_new) < ORACLE_FLOOR {
                        break 'targets;
                    }
                    t_off += h_try;
                    y = y_new;
                    h = h_try * step_scale(err);
                }
                Ok((_, err)) => h = h_try * step_scale(err),
                Err(_) => {
                    h = h_try * 0.5;
                    if h < 1e-13 {
                        break 'targets;
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Samples the homogeneous state on the `n`-point grid:
/// `z = rho (cos y, sin y)`, `r_i = a_i`, velocities accordingly. The
/// result is exactly gauged for this state's own constant `c`.
pub fn lift_to_grid(s: &CliffordState, n: usize) -> Result<FieldState> {
    s.validate()?;
    let y = grid::points(n);
    let shape = s.shape();
    FieldState::new(
        s.t,
        vec![
            y.iter().map(|&y| s.rho * y.cos()).collect(),
            y.iter().map(|&y| s.rho * y.sin()).collect(),
        ],
        s.a.iter().map(|&ai| vec![ai; n]).collect(),
        vec![
            y.iter().map(|&y| s.rho_dot * y.cos()).collect(),
            y.iter().map(|&y| s.rho_dot * y.sin()).collect(),
        ],
        s.a_dot.iter().map(|&vi| vec![vi; n]).collect(),
        &shape,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gauge;
    use crate::geometry;

    #[test]
    fn rest_state_accelerations_are_minus_one() {
        let s = CliffordState::square_torus_rest(1.0, 1.0).unwrap();
        assert_eq!(s.c, 1.0);
        let (rho_ddot, a_ddot) = clifford_rhs(&s).unwrap();
        assert!((rho_ddot + 1.0).abs() < 1e-15);
        assert!((a_ddot[0] + 1.0).abs() < 1e-15);
    }

    #[test]
    fn radial_source_vanishes_at_the_light_speed_limit() {
        let s = CliffordState::square_torus(1.0, 1.0, 0.9999, 0.0).unwrap();
        let (_, a_ddot) = clifford_rhs(&s).unwrap();
        assert!(a_ddot[0].abs() < 3e-4, "a_ddot = {}", a_ddot[0]);
    }

    #[test]
    fn invalid_states_are_rejected() {
        assert!(CliffordState::square_torus(1.0, 1.0, 0.8, 0.7).is_err()); // v^2 > 1
        assert!(CliffordState::square_torus_rest(-1.0, 1.0).is_err());
        assert!(CliffordState::square_torus_rest(1.0, 0.0).is_err());
        assert!(CliffordState::new(0.0, 1.0, 0.0, vec![1.0], vec![0.0], vec![]).is_err());
    }

    #[test]
    fn unit_rest_data_collapse_in_finite_time() {
        let s0 = CliffordState::square_torus_rest(1.0, 1.0).unwrap();
        let (traj, collapse) = clifford_integrate(&s0, 10.0, 1e-10).unwrap();
        let t_star = collapse.expect("must collapse");
        assert!(t_star > 1.5 && t_star < 2.2, "T* = {t_star}");
        // Trajectory is monotone in t and ends just above the floor.
        assert!(traj.windows(2).all(|w| w[1].t > w[0].t));
        let last = traj.last().unwrap();
        assert!(last.stop_quantity() >= ORACLE_FLOOR);
        assert!(last.stop_quantity() < 1e-4, "stopped far from floor");
        // rho = a by symmetry for this datum.
        assert!((last.rho - last.a[0]).abs() < 1e-8);
    }

    #[test]
    fn rest_data_collapse_symmetrically_backward() {
        let s0 = CliffordState::square_torus_rest(1.0, 1.0).unwrap();
        let (_, fwd) = clifford_integrate(&s0, 10.0, 1e-10).unwrap();
        let (_, bwd) = clifford_integrate(&s0, -10.0, 1e-10).unwrap();
        let (tf, tb) = (fwd.unwrap(), bwd.unwrap());
        assert!((tf + tb).abs() < 1e-8, "T*_fwd = {tf}, T*_bwd = {tb}");
    }

    #[test]
    fn gauge_invariant_is_conserved_along_trajectories() {
        let s0 = CliffordState::square_torus(1.1, 0.8, 0.1, -0.2).unwrap();
        let tol = 1e-10;
        let (traj, _) = clifford_integrate(&s0, 10.0, tol).unwrap();
        assert!(traj.len() > 10);
        for s in &traj {
            // Recomputing sqrt(1 - v^2) is ill-conditioned once 1 - v^2 is
            // tiny (relative noise ~ 2 eps / (1 - v^2)); allow for that
            // measurement noise on top of the integration budget, which is
            // what the 10 * tol clause actually constrains.
            let conditioning = 2.0 * f64::EPSILON / (1.0 - s.speed_squared());
            let allowed = (10.0 * tol + 4.0 * conditioning) * s0.c;
            assert!(
                (s.invariant() - s0.c).abs() <= allowed,
                "invariant drifted to {} at t = {}",
                s.invariant(),
                s.t
            );
        }
    }

    #[test]
    fn horizon_prevents_collapse_detection() {
        let s0 = CliffordState::square_torus_rest(1.0, 1.0).unwrap();
        let (traj, collapse) = clifford_integrate(&s0, 0.5, 1e-10).unwrap();
        assert!(collapse.is_none());
        let last = traj.last().unwrap();
        assert!((last.t - 0.5).abs() < 1e-12);
    }

    #[test]
    fn sampled_times_are_hit_exactly_and_accurately() {
        let s0 = CliffordState::square_torus_rest(1.0, 1.0).unwrap();
        let times = [0.3, 0.6, 0.9, 1.2];
        let states = clifford_states_at(&s0, &times, 1e-10).unwrap();
        assert_eq!(states.len(), 4);
        for (s, &t) in states.iter().zip(&times) {
            assert_eq!(s.t, t);
        }
        // Cross-check against a much tighter tolerance.
        let tight = clifford_states_at(&s0, &times, 1e-13).unwrap();
        for (a, b) in states.iter().zip(&tight) {
            assert!((a.rho - b.rho).abs() < 1e-8);
            assert!((a.a[0] - b.a[0]).abs() < 1e-8);
        }
    }

    #[test]
    fn lift_of_unit_rest_state_is_the_static_torus() {
        let s = CliffordState::square_torus_rest(1.0, 1.0).unwrap();
        let lifted = lift_to_grid(&s, 64).unwrap();
        let (torus, _) = geometry::testing::static_unit_torus(64);
        assert_eq!(lifted, torus);
    }

    #[test]
    fn lifted_states_are_exactly_gauged() {
        let s = CliffordState::square_torus(1.2, 0.7, 0.25, -0.15).unwrap();
        let lifted = lift_to_grid(&s, 64).unwrap();
        let shape = s.shape();
        let res = gauge::gauge_residuals(&lifted, s.gauge_constant().unwrap(), &shape);
        assert!(res.x_inf < 1e-12, "X_inf = {}", res.x_inf);
        assert!(res.y_inf < 1e-12, "Y_inf = {}", res.y_inf);

        // Indicator is uniform: (1 - v^2) * a.
        let metric = geometry::compute_metric(&lifted, &shape).unwrap();
        let (per_point, min) = geometry::immersivity_indicator(&lifted, &metric);
        let expected = (1.0 - s.speed_squared()) * s.a[0];
        for v in per_point {
            assert!((v - expected).abs() < 1e-13);
        }
        assert!((min - expected).abs() < 1e-13);
    }
}
