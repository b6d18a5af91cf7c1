//! Time integration of the reduced membrane equations.
//!
//! In the fixed gauge the profiles obey the quasilinear wave system
//!
//! ```text
//! z_tt   = C^2 d_y(R d_y z)
//! r_j,tt = C^2 d_y(R d_y r_j) - d_j |g_tt| / r_j,    R = prod r_i^{2 d_i}
//! ```
//!
//! with `|g_tt|` recomputed pointwise from the current velocities. The
//! flux divergence is discretized in conservation form -- two applications
//! of the fourth-order stencil [`crate::grid::spatial_derivative`], the
//! inner one producing `R * d_y u` pointwise -- and stepped with classical
//! RK4 under a CFL bound on the characteristic speed `C * prod r_i^{d_i}`.
//!
//! Runs never integrate through a breakdown: the loop watches the
//! immersivity indicator, the radii, the time-like condition, and the step
//! size, and stops with a [`Termination`] describing what it saw. Terminal
//! events are data, not errors; the caller gets the last valid state plus
//! the recorded time series either way.
//!
//! The pre-gauge form of the equations, whose flux coefficients involve the
//! full metric, is implemented as [`rhs_general`] purely as an independent
//! cross-check of [`rhs_reduced`]; the stepper never calls it.

use crate::diagnostics::{self, DiagnosticsRecord};
use crate::error::{Error, Result};
use crate::gauge::GaugeConstant;
use crate::geometry::{self, AxisymmetryShape, FieldState};
use crate::grid;

/// Below this `g_yy` a point counts as parametrically degenerate in
/// [`rhs_general`]; uniform data (all profile derivatives zero there) are
/// still accepted since their flux vanishes identically.
const GYY_FLOOR: f64 = 1e-14;

/// Step-size, horizon, floor, and recording controls for [`evolve`].
#[derive(Debug, Clone, PartialEq)]
pub struct SolverParams {
    /// CFL number in (0, 1].
    pub cfl: f64,
    /// Coordinate-time horizon per direction (> 0).
    pub t_end: f64,
    /// Stop when the minimal immersivity indicator falls to this value.
    pub indicator_floor: f64,
    /// Stop when any radius falls to this value.
    pub radius_floor: f64,
    /// Smallest admissible time step.
    pub dt_floor: f64,
    /// Record diagnostics every this many steps (>= 1).
    pub record_every: usize,
    /// Hard cap on step count.
    pub max_steps: usize,
}

impl Default for SolverParams {
    fn default() -> Self {
        Self {
            cfl: 0.4,
            t_end: 10.0,
            indicator_floor: 1e-3,
            radius_floor: 1e-4,
            dt_floor: 1e-12,
            record_every: 1,
            max_steps: 200_000,
        }
    }
}

impl SolverParams {
    /// Checks positivity/finiteness of every control.
    pub fn validate(&self) -> Result<()> {
        let bad = |reason: String| Err(Error::InvalidState { reason });
        if !(self.cfl.is_finite() && self.cfl > 0.0 && self.cfl <= 1.0) {
            return bad(format!("cfl must lie in (0, 1], got {}", self.cfl));
        }
        if !(self.t_end.is_finite() && self.t_end > 0.0) {
            return bad(format!("t_end must be positive, got {}", self.t_end));
        }
        for (name, v) in [
            ("indicator_floor", self.indicator_floor),
            ("radius_floor", self.radius_floor),
            ("dt_floor", self.dt_floor),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return bad(format!("{name} must be positive, got {v}"));
            }
        }
        if self.record_every < 1 {
            return bad("record_every must be at least 1".into());
        }
        if self.max_steps < 1 {
            return bad("max_steps must be at least 1".into());
        }
        Ok(())
    }
}

/// Run direction in coordinate time.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Backward,
}

impl Direction {
    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Forward => "forward",
            Direction::Backward => "backward",
        }
    }
}

/// Why an evolution loop stopped. `HorizonReached` is the only "healthy"
/// outcome; the floor variants indicate detected breakdown, and
/// `NaNDetected`/`NonTimelike` indicate the discrete solution left the
/// admissible set mid-flight.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    HorizonReached,
    IndicatorFloor,
    RadiusFloor,
    DtFloor,
    NonTimelike,
    NaNDetected,
    MaxSteps,
}

impl Termination {
    pub fn as_str(self) -> &'static str {
        match self {
            Termination::HorizonReached => "HorizonReached",
            Termination::IndicatorFloor => "IndicatorFloor",
            Termination::RadiusFloor => "RadiusFloor",
            Termination::DtFloor => "DtFloor",
            Termination::NonTimelike => "NonTimelike",
            Termination::NaNDetected => "NaNDetected",
            Termination::MaxSteps => "MaxSteps",
        }
    }
}

/// Outcome of [`evolve`]: why it stopped, where it stopped, and the
/// diagnostics time series (strictly monotone in `t` in the run direction;
/// the terminal state is always included for floor/horizon terminations).
#[derive(Debug, Clone)]
pub struct RunResult {
    pub termination: Termination,
    pub final_state: FieldState,
    pub records: Vec<DiagnosticsRecord>,
    pub direction: Direction,
    pub steps_taken: usize,
}

/// Second time derivatives of the profile fields (`az` for the z-block,
/// `ar` for the radii), in the field order of [`FieldState`].
#[derive(Debug, Clone)]
pub struct Accelerations {
    pub az: Vec<Vec<f64>>,
    pub ar: Vec<Vec<f64>>,
}

/// Flux divergence `d_y(coeff * d_y u)` with both derivatives taken by the
/// fourth-order stencil (conservation form).
fn flux_divergence(u: &[f64], coeff: &[f64]) -> Vec<f64> {
    let du = grid::spatial_derivative(u);
    let q: Vec<f64> = du.iter().zip(coeff).map(|(&d, &c)| c * d).collect();
    grid::spatial_derivative(&q)
}

/// Right-hand side of the reduced (gauge-fixed) system.
///
/// Fails with [`Error::NonPositiveRadius`] or [`Error::NonTimelike`] when a
/// stage state has left the admissible set.
pub fn rhs_reduced(
    state: &FieldState,
    c: GaugeConstant,
    shape: &AxisymmetryShape,
) -> Result<Accelerations> {
    let n = state.n();
    let mut area = vec![1.0; n];
    for (i, (field, &di)) in state.r.iter().zip(shape.d()).enumerate() {
        for (j, &rj) in field.iter().enumerate() {
            if rj <= 0.0 {
                return Err(Error::NonPositiveRadius { factor: i + 1, index: j, value: rj });
            }
            area[j] *= rj.powi(di as i32);
        }
    }
    let g_tt = geometry::g_tt_from_velocities(state);
    if let Some(j) = g_tt.iter().position(|&g| g >= 0.0) {
        return Err(Error::NonTimelike { index: j, g_tt: g_tt[j] });
    }
    let big_r: Vec<f64> = area.iter().map(|&a| a * a).collect();
    let c2 = c.c * c.c;

    let scale = |mut acc: Vec<f64>| {
        for a in &mut acc {
            *a *= c2;
        }
        acc
    };
    let az: Vec<Vec<f64>> = state
        .z
        .iter()
        .map(|u| scale(flux_divergence(u, &big_r)))
        .collect();
    let ar: Vec<Vec<f64>> = state
        .r
        .iter()
        .zip(shape.d())
        .map(|(u, &di)| {
            let mut acc = scale(flux_divergence(u, &big_r));
            for j in 0..n {
                acc[j] -= di as f64 * g_tt[j].abs() / u[j];
            }
            acc
        })
        .collect();
    Ok(Accelerations { az, ar })
}

/// Right-hand side of the pre-gauge system, with flux coefficient
/// `sqrt_det / g_yy` and outer coefficient `|g_tt| / sqrt_det` taken from
/// the full metric. Validation-only counterpart of [`rhs_reduced`]: on
/// gauged states the two agree up to rounding amplified by one stencil
/// application, and the difference measures gauge drift otherwise.
///
/// Grid points where `g_yy` vanishes are accepted only if every profile
/// derivative vanishes there too (uniform data, zero flux); otherwise the
/// parametrization is degenerate and an error is returned.
pub fn rhs_general(state: &FieldState, shape: &AxisymmetryShape) -> Result<Accelerations> {
    let n = state.n();
    for (i, field) in state.r.iter().enumerate() {
        if let Some(j) = field.iter().position(|&v| v <= 0.0) {
            return Err(Error::NonPositiveRadius { factor: i + 1, index: j, value: field[j] });
        }
    }
    let metric = geometry::compute_metric(state, shape)?;
    let degenerate: Vec<bool> = metric.g_yy.iter().map(|&g| g < GYY_FLOOR).collect();

    let flux = |u: &[f64]| -> Result<Vec<f64>> {
        let du = grid::spatial_derivative(u);
        let mut q = vec![0.0; n];
        for j in 0..n {
            if degenerate[j] {
                if du[j] != 0.0 {
                    return Err(Error::DegenerateParametrization {
                        index: j,
                        g_yy: metric.g_yy[j],
                    });
                }
            } else {
                q[j] = metric.sqrt_det[j] * du[j] / metric.g_yy[j];
            }
        }
        let dq = grid::spatial_derivative(&q);
        Ok((0..n)
            .map(|j| {
                if degenerate[j] {
                    0.0
                } else {
                    metric.g_tt[j].abs() / metric.sqrt_det[j] * dq[j]
                }
            })
            .collect())
    };

    let az = state.z.iter().map(|u| flux(u)).collect::<Result<Vec<_>>>()?;
    let ar = state
        .r
        .iter()
        .zip(shape.d())
        .map(|(u, &di)| {
            let mut acc = flux(u)?;
            for j in 0..n {
                acc[j] -= di as f64 * metric.g_tt[j].abs() / u[j];
            }
            Ok(acc)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Accelerations { az, ar })
}

/// Stability-bounded step: the smaller of the CFL bound
/// `cfl * h / max_y(C * prod r_i^{d_i})` and the radial-source bound
/// `cfl * min_{y,i} r_i / sqrt(d_i |g_tt|)`.
///
/// The second bound resolves the oscillation timescale of the curvature
/// sources `-d_i |g_tt| / r_i`. It matters when some radius dips small
/// while the flux speed — which only sees the largest radius product —
/// stays slow; the CFL bound alone would then step far past the source
/// oscillation and shoot a radius through zero.
///
/// Fails with [`Error::DtBelowFloor`] when the bound drops under
/// `params.dt_floor` (the characteristic speed has blown up).
pub fn cfl_dt(
    state: &FieldState,
    c: GaugeConstant,
    shape: &AxisymmetryShape,
    params: &SolverParams,
) -> Result<f64> {
    let area = geometry::area_radius_product(state, shape);
    let speed = c.c * area.iter().fold(0.0_f64, |m, &v| m.max(v));
    if !(speed.is_finite() && speed > 0.0) {
        return Err(Error::InvalidState {
            reason: format!("characteristic speed {speed} is not positive and finite"),
        });
    }
    let g_tt = geometry::g_tt_from_velocities(state);
    let mut tau = f64::INFINITY;
    for (field, &di) in state.r.iter().zip(shape.d()) {
        for (j, &r) in field.iter().enumerate() {
            let omega2 = di as f64 * g_tt[j].abs();
            if omega2 > 0.0 {
                tau = tau.min(r / omega2.sqrt());
            }
        }
    }
    let dt = (params.cfl * grid::step(state.n()) / speed).min(params.cfl * tau);
    if dt < params.dt_floor {
        return Err(Error::DtBelowFloor { dt, floor: params.dt_floor });
    }
    Ok(dt)
}

fn add_scaled(base: &[Vec<f64>], slope: &[Vec<f64>], dt: f64) -> Vec<Vec<f64>> {
    base.iter()
        .zip(slope)
        .map(|(b, s)| b.iter().zip(s).map(|(&b, &s)| b + dt * s).collect())
        .collect()
}

fn rk4_combine(
    base: &[Vec<f64>],
    k1: &[Vec<f64>],
    k2: &[Vec<f64>],
    k3: &[Vec<f64>],
    k4: &[Vec<f64>],
    dt: f64,
) -> Vec<Vec<f64>> {
    let sixth = dt / 6.0;
    base.iter()
        .enumerate()
        .map(|(i, b)| {
            b.iter()
                .enumerate()
                .map(|(j, &v)| {
                    v + sixth * (k1[i][j] + 2.0 * (k2[i][j] + k3[i][j]) + k4[i][j])
                })
                .collect()
        })
        .collect()
}

/// Intermediate RK4 stage: positions advanced by the given stage
/// velocities, velocities by the given accelerations.
fn stage(
    base: &FieldState,
    vz: &[Vec<f64>],
    vr: &[Vec<f64>],
    acc: &Accelerations,
    dt: f64,
) -> FieldState {
    FieldState {
        t: base.t + dt,
        z: add_scaled(&base.z, vz, dt),
        r: add_scaled(&base.r, vr, dt),
        vz: add_scaled(&base.vz, &acc.az, dt),
        vr: add_scaled(&base.vr, &acc.ar, dt),
    }
}

/// One classical RK4 step of the first-order (positions, velocities)
/// system; `dt` may be negative. The source `|g_tt|` is recomputed from
/// each stage's own velocities, keeping the scheme fully coupled and
/// fourth-order accurate.
///
/// Propagates admissibility errors from any stage and reports
/// [`Error::NonFinite`] if the combined output is not finite.
pub fn step_rk4(
    state: &FieldState,
    dt: f64,
    c: GaugeConstant,
    shape: &AxisymmetryShape,
) -> Result<FieldState> {
    let k1 = rhs_reduced(state, c, shape)?;
    let s2 = stage(state, &state.vz, &state.vr, &k1, 0.5 * dt);
    let k2 = rhs_reduced(&s2, c, shape)?;
    let s3 = stage(state, &s2.vz, &s2.vr, &k2, 0.5 * dt);
    let k3 = rhs_reduced(&s3, c, shape)?;
    let s4 = stage(state, &s3.vz, &s3.vr, &k3, dt);
    let k4 = rhs_reduced(&s4, c, shape)?;

    let out = FieldState {
        t: state.t + dt,
        z: rk4_combine(&state.z, &state.vz, &s2.vz, &s3.vz, &s4.vz, dt),
        r: rk4_combine(&state.r, &state.vr, &s2.vr, &s3.vr, &s4.vr, dt),
        vz: rk4_combine(&state.vz, &k1.az, &k2.az, &k3.az, &k4.az, dt),
        vr: rk4_combine(&state.vr, &k1.ar, &k2.ar, &k3.ar, &k4.ar, dt),
    };
    if !out.all_finite() {
        return Err(Error::NonFinite { context: "time-step output".into() });
    }
    Ok(out)
}

/// Cheap per-step monitors (no derivatives): worst `g_tt`, minimal
/// indicator `|g_tt| * prod r_i`, minimal radius.
struct Monitors {
    max_g_tt: f64,
    min_indicator: f64,
    min_radius: f64,
}

fn pointwise_monitors(state: &FieldState) -> Monitors {
    let n = state.n();
    let g_tt = geometry::g_tt_from_velocities(state);
    let mut mon = Monitors {
        max_g_tt: f64::NEG_INFINITY,
        min_indicator: f64::INFINITY,
        min_radius: f64::INFINITY,
    };
    for j in 0..n {
        mon.max_g_tt = mon.max_g_tt.max(g_tt[j]);
        let mut ind = g_tt[j].abs();
        for field in &state.r {
            ind *= field[j];
            mon.min_radius = mon.min_radius.min(field[j]);
        }
        mon.min_indicator = mon.min_indicator.min(ind);
    }
    mon
}

/// Evolves `initial` until the horizon `t_end` or the first terminal
/// condition, recording diagnostics every `record_every` steps (the initial
/// state and, for floor/horizon terminations, the terminal state are always
/// recorded).
///
/// The step size is the CFL bound, additionally limited near breakdown so
/// the indicator cannot cross its floor by more than roughly a `cfl`
/// fraction per step (trend-based: the indicator's current decay rate is
/// estimated from the previous step).
///
/// Backward runs evolve the velocity-negated state forward and re-reflect
/// times (`t -> 2 t0 - t`) and velocities in the reported result.
///
/// `Err` is reserved for invalid inputs and internal failures; everything
/// the dynamics can do is reported as a [`Termination`].
pub fn evolve(
    initial: &FieldState,
    c: GaugeConstant,
    shape: &AxisymmetryShape,
    params: &SolverParams,
    direction: Direction,
) -> Result<RunResult> {
    params.validate()?;
    initial.validate(shape)?;
    match direction {
        Direction::Forward => run_forward(initial.clone(), c, shape, params),
        Direction::Backward => {
            let t0 = initial.t;
            let mut result = run_forward(initial.with_negated_velocities(), c, shape, params)?;
            for rec in &mut result.records {
                rec.t = 2.0 * t0 - rec.t;
            }
            result.final_state = result.final_state.with_negated_velocities();
            result.final_state.t = 2.0 * t0 - result.final_state.t;
            result.direction = Direction::Backward;
            Ok(result)
        }
    }
}

fn run_forward(
    mut state: FieldState,
    c: GaugeConstant,
    shape: &AxisymmetryShape,
    params: &SolverParams,
) -> Result<RunResult> {
    let t_stop = state.t + params.t_end;
    let mut records: Vec<DiagnosticsRecord> = Vec::new();
    let mut recorded_step = usize::MAX;
    let mut steps = 0usize;
    let mut prev_trend: Option<(f64, f64)> = None;

    let (termination, record_final) = loop {
        if !state.all_finite() {
            break (Termination::NaNDetected, false);
        }
        let mon = pointwise_monitors(&state);
        if mon.max_g_tt >= 0.0 {
            break (Termination::NonTimelike, false);
        }
        if mon.min_indicator <= params.indicator_floor {
            break (Termination::IndicatorFloor, true);
        }
        if mon.min_radius <= params.radius_floor {
            break (Termination::RadiusFloor, true);
        }
        if t_stop - state.t <= params.dt_floor {
            break (Termination::HorizonReached, true);
        }
        if steps >= params.max_steps {
            break (Termination::MaxSteps, true);
        }
        if steps.is_multiple_of(params.record_every) && recorded_step != steps {
            records.push(diagnostics::compute_record(&state, c, shape)?);
            recorded_step = steps;
        }

        let base_dt = match cfl_dt(&state, c, shape, params) {
            Ok(dt) => dt,
            Err(Error::DtBelowFloor { .. }) => break (Termination::DtFloor, true),
            Err(e) => return Err(e),
        };
        let mut dt = base_dt.min(t_stop - state.t);
        if let Some((t_prev, ind_prev)) = prev_trend {
            let slope = (mon.min_indicator - ind_prev) / (state.t - t_prev);
            if slope < 0.0 {
                dt = dt.min(params.cfl * mon.min_indicator / -slope);
            }
        }
        if dt < params.dt_floor {
            break (Termination::DtFloor, true);
        }

        match step_rk4(&state, dt, c, shape) {
            Ok(next) => {
                prev_trend = Some((state.t, mon.min_indicator));
                state = next;
                steps += 1;
            }
            // Mid-step failures: report the last valid state.
            Err(Error::NonPositiveRadius { .. }) => break (Termination::RadiusFloor, true),
            Err(Error::NonTimelike { .. }) => break (Termination::NonTimelike, true),
            Err(Error::NonFinite { .. }) => break (Termination::NaNDetected, true),
            Err(e) => return Err(e),
        }
    };

    if record_final && recorded_step != steps {
        records.push(diagnostics::compute_record(&state, c, shape)?);
    }
    Ok(RunResult {
        termination,
        final_state: state,
        records,
        direction: Direction::Forward,
        steps_taken: steps,
    })
}
