//! Per-record invariants and breakdown classification.
//!
//! Each recording step of an evolution produces a [`DiagnosticsRecord`]
//! capturing the quantities the theory constrains: the immersivity
//! indicator `|g_tt| * prod r_i` (whose vanishing defines breakdown), the
//! mean radii (strictly concave in time for solutions), the conserved
//! density `sqrt_det / |g_tt|` (constant `1/C` in gauge), the gauge
//! residual norms, the characteristic speed, the velocity-bound margin,
//! and the circulation integral of `|g_tt|`.
//!
//! After a run, [`detect_breakdown`] turns the tail of the series into a
//! [`BreakdownReport`]: a linear extrapolation of the indicator to zero
//! (the collapse-time estimate) and a mechanism label. `ImmersivityLoss`
//! is claimed only when the indicator decayed monotonically over the trend
//! window while gauge residuals stayed within budget; `RegularitySuspected`
//! flags runs where the discrete solution itself degraded (NaNs, residual
//! blow-up), a heuristic label for a question the theory leaves open.

use crate::error::{Error, Result};
use crate::evolution::{Direction, RunResult, Termination};
use crate::gauge::GaugeConstant;
use crate::geometry::{self, AxisymmetryShape, FieldState};
use crate::grid;

/// Default number of trailing records used for trend fits.
pub const DEFAULT_TREND_WINDOW: usize = 10;

/// Convexity tolerance is this factor times the largest mean radius.
const CONVEXITY_TOL_FACTOR: f64 = 1e-8;

/// Rounding allowance of the second-divided-difference estimator, in
/// units of `eps * max r / (h_min * h_mean)`. Near breakdown the step
/// limiter clusters records (h down to ~1e-4), and a divided second
/// difference amplifies ulp-level noise in the mean radii by `1/h^2`;
/// measured excursions on collapse tails reach ~14 units. A genuinely
/// convex stretch sits many orders of magnitude above this floor.
const CONVEXITY_ROUNDING_UNITS: f64 = 64.0;

/// A recorded indicator minimum at or below this fraction of the initial
/// indicator counts as a near-degeneracy in the rebound scan.
pub const REBOUND_DEPTH_FRACTION: f64 = 1e-4;

/// Growth past a near-degenerate minimum (relative to the minimum) that
/// marks a rebound: the discrete trajectory passed the degenerate set and
/// re-expanded.
pub const REBOUND_GROWTH_FACTOR: f64 = 10.0;

/// One time slice of monitored invariants.
///
/// The first nine fields form the stable on-disk schema; `max_radii` and
/// `mean_z_radius` are in-memory extras (Lipschitz bound checks and
/// homogeneous-trajectory extraction) that writers skip.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsRecord {
    pub t: f64,
    /// `min_y |g_tt| * prod r_i`.
    pub min_indicator: f64,
    /// Trapezoidal means of each radius field, normalized by `2 pi`.
    pub mean_radii: Vec<f64>,
    /// `max_y |C * density - 1|` with density `sqrt_det / |g_tt|`.
    pub density_spread: f64,
    /// Max-abs of the density-gauge residual `X`.
    pub x_inf: f64,
    /// Max-abs of the orthogonality residual `Y`.
    pub y_inf: f64,
    /// `max_y C * prod r_i^{d_i}` (characteristic speed).
    pub max_speed: f64,
    /// `1 - max_y(|vz|^2 + sum vr_i^2)`; positive for time-like states.
    pub velocity_margin: f64,
    /// Trapezoidal `oint |g_tt| dy`.
    pub gtt_integral: f64,
    /// Per-factor `max_y r_i`.
    pub max_radii: Vec<f64>,
    /// Mean of `|z(y)|`; the z-circle radius for homogeneous states.
    pub mean_z_radius: f64,
}

/// Computes a full record for one state. The only failure mode is a state
/// outside the admissible set (non-time-like).
pub fn compute_record(
    state: &FieldState,
    c: GaugeConstant,
    shape: &AxisymmetryShape,
) -> Result<DiagnosticsRecord> {
    let n = state.n();
    let metric = geometry::compute_metric(state, shape)?;
    let (_, min_indicator) = geometry::immersivity_indicator(state, &metric);
    let area = geometry::area_radius_product(state, shape);

    let mut density_spread = 0.0_f64;
    let mut x_inf = 0.0_f64;
    let mut y_inf = 0.0_f64;
    let mut max_speed = 0.0_f64;
    let mut max_g_tt = f64::NEG_INFINITY;
    for (j, &aj) in area.iter().enumerate() {
        let g_abs = metric.g_tt[j].abs();
        density_spread = density_spread.max((c.c * metric.sqrt_det[j] / g_abs - 1.0).abs());
        let x = metric.g_tt[j] / (aj * aj) + c.c * c.c * metric.g_yy[j];
        x_inf = x_inf.max(x.abs());
        y_inf = y_inf.max(metric.g_ty[j].abs());
        max_speed = max_speed.max(c.c * aj);
        max_g_tt = max_g_tt.max(metric.g_tt[j]);
    }
    let abs_g_tt: Vec<f64> = metric.g_tt.iter().map(|g| g.abs()).collect();

    let mut mean_z = vec![0.0; n];
    for field in &state.z {
        for (s, &v) in mean_z.iter_mut().zip(field) {
            *s += v * v;
        }
    }
    for v in &mut mean_z {
        *v = v.sqrt();
    }

    Ok(DiagnosticsRecord {
        t: state.t,
        min_indicator,
        mean_radii: mean_radii(state),
        density_spread,
        x_inf,
        y_inf,
        max_speed,
        velocity_margin: -max_g_tt,
        gtt_integral: grid::trapezoid_integral(&abs_g_tt),
        max_radii: state.r.iter().map(|f| grid::max_abs(f)).collect(),
        mean_z_radius: grid::mean(&mean_z),
    })
}

/// Pointwise conserved density `sqrt_det / |g_tt|` and its maximal relative
/// deviation from the gauge value `1/C`.
pub fn conserved_density(
    state: &FieldState,
    c: GaugeConstant,
    shape: &AxisymmetryShape,
) -> Result<(Vec<f64>, f64)> {
    let metric = geometry::compute_metric(state, shape)?;
    let density: Vec<f64> = metric
        .sqrt_det
        .iter()
        .zip(&metric.g_tt)
        .map(|(&s, &g)| s / g.abs())
        .collect();
    let spread = density
        .iter()
        .map(|&w| (c.c * w - 1.0).abs())
        .fold(0.0, f64::max);
    Ok((density, spread))
}

/// Trapezoidal mean of each radius field (the `2 pi`-normalized circulation
/// of `r_j`).
pub fn mean_radii(state: &FieldState) -> Vec<f64> {
    state.r.iter().map(|f| grid::mean(f)).collect()
}

/// Trapezoidal `oint |g_tt| dy`, recorded for inspection of long healthy
/// runs (a finite run cannot decide asymptotic statements, so this is
/// never asserted against).
pub fn gtt_integral(state: &FieldState) -> f64 {
    let g_tt = geometry::g_tt_from_velocities(state);
    let abs: Vec<f64> = g_tt.iter().map(|g| g.abs()).collect();
    grid::trapezoid_integral(&abs)
}

/// Three-point second derivative of `f` at the interior node `i` of a
/// possibly non-uniform time series (twice the second divided difference).
fn second_derivative(ts: &[f64], fs: &[f64], i: usize) -> f64 {
    let (t0, t1, t2) = (ts[i - 1], ts[i], ts[i + 1]);
    let (f0, f1, f2) = (fs[i - 1], fs[i], fs[i + 1]);
    2.0 * ((f2 - f1) / (t2 - t1) - (f1 - f0) / (t1 - t0)) / (t2 - t0)
}

/// Checks concavity of each mean radius over a recorded series: verdict
/// `true` when every interior three-point second derivative stays below
/// `+1e-8 * max mean radius` plus the estimator's own rounding floor
/// (which matters only where records cluster in time).
///
/// Needs at least three records.
pub fn convexity_check(records: &[DiagnosticsRecord]) -> Result<Vec<bool>> {
    if records.len() < 3 {
        return Err(Error::InsufficientHistory { needed: 3, got: records.len() });
    }
    let k = records[0].mean_radii.len();
    let ts: Vec<f64> = records.iter().map(|r| r.t).collect();
    let mut verdicts = Vec::with_capacity(k);
    for j in 0..k {
        let fs: Vec<f64> = records.iter().map(|r| r.mean_radii[j]).collect();
        let f_max = fs.iter().fold(0.0_f64, |m, &v| m.max(v));
        let tol = CONVEXITY_TOL_FACTOR * f_max;
        let ok = (1..records.len() - 1).all(|i| {
            let h1 = (ts[i] - ts[i - 1]).abs();
            let h2 = (ts[i + 1] - ts[i]).abs();
            let rounding = CONVEXITY_ROUNDING_UNITS * f64::EPSILON * f_max
                / (h1.min(h2) * 0.5 * (h1 + h2));
            second_derivative(&ts, &fs, i) < tol + rounding
        });
        verdicts.push(ok);
    }
    Ok(verdicts)
}

/// Why a run broke down, as inferred from its diagnostics tail.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mechanism {
    /// The immersivity indicator decayed monotonically to its floor with
    /// healthy gauge residuals: the collapse the theory predicts.
    ImmersivityLoss,
    /// The discrete solution itself degraded (NaNs or residuals above
    /// budget); a heuristic label, since whether loss of immersivity can be
    /// accompanied by loss of regularity is an open question.
    RegularitySuspected,
    /// No breakdown signature (healthy horizon, step budget) or an
    /// ambiguous tail.
    Undetermined,
}

impl Mechanism {
    pub fn as_str(self) -> &'static str {
        match self {
            Mechanism::ImmersivityLoss => "ImmersivityLoss",
            Mechanism::RegularitySuspected => "RegularitySuspected",
            Mechanism::Undetermined => "Undetermined",
        }
    }
}

/// Tail-of-run data backing a [`BreakdownReport`].
#[derive(Debug, Clone)]
pub struct TrendSummary {
    /// Last few `min_indicator` values (run order).
    pub indicator_tail: Vec<f64>,
    /// Interior three-point second derivatives of each mean radius over the
    /// tail.
    pub radius_second_differences: Vec<Vec<f64>>,
    /// Whether the indicator tail decreased strictly monotonically; a
    /// `false` here marks an oscillatory approach the linear extrapolator
    /// is not designed for.
    pub monotone_decreasing: bool,
}

/// Classification of a terminated run.
#[derive(Debug, Clone)]
pub struct BreakdownReport {
    pub direction: Direction,
    /// Breakdown-time estimate from extrapolating the indicator tail to
    /// zero: a power-law fit `indicator ~ A (T - t)^p` when the tail
    /// supports it, otherwise the zero crossing of a least-squares line.
    /// `None` for healthy terminations or non-decaying tails.
    pub t_star_estimate: Option<f64>,
    pub mechanism: Mechanism,
    /// The termination that ended the run.
    pub trigger: Termination,
    pub trend: TrendSummary,
}

/// Least-squares line through `(ts, vs)`, extrapolated to its zero
/// crossing; `None` for a non-negative or degenerate slope.
fn linear_zero_crossing(ts: &[f64], vs: &[f64], forward: bool) -> Option<f64> {
    let m = ts.len() as f64;
    let t_bar = ts.iter().sum::<f64>() / m;
    let v_bar = vs.iter().sum::<f64>() / m;
    let mut num = 0.0;
    let mut den = 0.0;
    for (&t, &v) in ts.iter().zip(vs) {
        num += (t - t_bar) * (v - v_bar);
        den += (t - t_bar) * (t - t_bar);
    }
    if den == 0.0 {
        return None;
    }
    let slope = num / den;
    // Decay means slope < 0 in forward time, > 0 in backward time.
    let decaying = if forward { slope < 0.0 } else { slope > 0.0 };
    if !decaying {
        return None;
    }
    let t_star = t_bar - v_bar / slope;
    t_star.is_finite().then_some(t_star)
}

/// Residual sum of squares of the least-squares line through `(xs, ys)`,
/// together with its slope.
fn line_fit_sse(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let m = xs.len() as f64;
    let x_bar = xs.iter().sum::<f64>() / m;
    let y_bar = ys.iter().sum::<f64>() / m;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        sxy += (x - x_bar) * (y - y_bar);
        sxx += (x - x_bar) * (x - x_bar);
        syy += (y - y_bar) * (y - y_bar);
    }
    if sxx == 0.0 {
        return (f64::INFINITY, 0.0);
    }
    let slope = sxy / sxx;
    ((syy - slope * sxy).max(0.0), slope)
}

/// Power-law extrapolation of a positive, strictly decaying tail: finds
/// the breakdown time `T` for which `log(indicator)` is most nearly
/// linear in `log(T - t)`, i.e. fits `indicator ~ A (T - t)^p`.
///
/// Near a breakdown the indicator vanishes like a power of the remaining
/// time (the power depends on which circle degenerates), so this tracks
/// the true breakdown time far better than a straight line through the
/// tail. Falls back to [`linear_zero_crossing`] when the tail is short,
/// non-positive, not strictly decaying, or not power-law-like.
fn breakdown_time_estimate(ts: &[f64], vs: &[f64], forward: bool) -> Option<f64> {
    let fallback = || linear_zero_crossing(ts, vs, forward);
    if ts.len() < 4 || vs.iter().any(|&v| !(v > 0.0)) {
        return fallback();
    }
    // Oriented time increases toward the breakdown in either direction.
    let sign = if forward { 1.0 } else { -1.0 };
    let s: Vec<f64> = ts.iter().map(|&t| sign * t).collect();
    if !s.windows(2).all(|w| w[1] > w[0]) || !vs.windows(2).all(|w| w[1] < w[0]) {
        return fallback();
    }
    let s_last = *s.last().expect("tail is nonempty");
    let span = s_last - s[0];
    if !(span > 0.0 && span.is_finite()) {
        return fallback();
    }
    let logv: Vec<f64> = vs.iter().map(|&v| v.ln()).collect();
    let sse_at = |offset: f64| -> f64 {
        let xs: Vec<f64> = s.iter().map(|&si| (s_last + offset - si).ln()).collect();
        line_fit_sse(&xs, &logv).0
    };

    // Coarse geometric scan of the offset T - t_last, then golden-section
    // refinement around the best cell. Offsets range from a tiny fraction
    // of the tail span (breakdown just past the last record) to far
    // beyond it (nearly linear decay).
    const SCAN: usize = 256;
    let lo = span * 1e-7;
    let hi = span * 64.0;
    let ratio = (hi / lo).powf(1.0 / (SCAN as f64 - 1.0));
    let mut best = (f64::INFINITY, lo);
    for i in 0..SCAN {
        let offset = lo * ratio.powi(i as i32);
        let sse = sse_at(offset);
        if sse < best.0 {
            best = (sse, offset);
        }
    }
    let mut a = (best.1 / ratio).max(lo);
    let mut b = (best.1 * ratio).min(hi);
    let inv_phi = 0.618_033_988_749_894_9_f64;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (sse_at(c), sse_at(d));
    for _ in 0..160 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = sse_at(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = sse_at(d);
        }
    }
    let offset = 0.5 * (a + b);
    // A minimum glued to the scan edges means the tail does not look like
    // a power law at all; trust the plain linear extrapolation instead.
    if offset >= hi * 0.9 {
        return fallback();
    }
    let xs: Vec<f64> = s.iter().map(|&si| (s_last + offset - si).ln()).collect();
    let (_, p) = line_fit_sse(&xs, &logv);
    if !(p > 0.0) {
        return fallback();
    }
    let t_star = sign * (s_last + offset);
    t_star.is_finite().then_some(t_star)
}

/// Scans the whole record series for a deep indicator minimum followed by
/// a strong rebound.
///
/// A discrete trajectory can pass arbitrarily close to the degenerate set
/// and re-expand even though the continuum solution ends at the touch; the
/// run then continues on an unphysical continuation and terminates late
/// (or not at all inside the window). The first local minimum at or below
/// [`REBOUND_DEPTH_FRACTION`] of the initial indicator whose aftermath
/// regrows by [`REBOUND_GROWTH_FACTOR`] marks that touch; its record time
/// is the best breakdown-time estimate for such a run.
fn deep_rebound(records: &[DiagnosticsRecord]) -> Option<f64> {
    if records.len() < 3 {
        return None;
    }
    let threshold = REBOUND_DEPTH_FRACTION * records[0].min_indicator;
    if !(threshold > 0.0) {
        return None;
    }
    let inds: Vec<f64> = records.iter().map(|r| r.min_indicator).collect();
    // suffix_max[i] = max of inds[i..].
    let mut suffix_max = inds.clone();
    for i in (0..inds.len() - 1).rev() {
        suffix_max[i] = suffix_max[i].max(suffix_max[i + 1]);
    }
    for i in 1..inds.len() - 1 {
        let local_min = inds[i] <= inds[i - 1] && inds[i] <= inds[i + 1];
        if local_min
            && inds[i] <= threshold
            && suffix_max[i + 1] >= REBOUND_GROWTH_FACTOR * inds[i]
        {
            return Some(records[i].t);
        }
    }
    None
}

/// Builds a [`BreakdownReport`] from a finished run.
///
/// `budget` bounds the acceptable gauge residual norms over the whole
/// series; `window` is the number of trailing records used for trend fits
/// (at least 2). At least two records are required.
pub fn detect_breakdown(
    result: &RunResult,
    budget: f64,
    window: usize,
) -> Result<BreakdownReport> {
    if window < 2 {
        return Err(Error::InvalidState {
            reason: format!("trend window must be at least 2, got {window}"),
        });
    }
    let records = &result.records;
    if records.len() < 2 {
        return Err(Error::InsufficientHistory { needed: 2, got: records.len() });
    }
    let tail = &records[records.len() - window.min(records.len())..];
    let ts: Vec<f64> = tail.iter().map(|r| r.t).collect();
    let inds: Vec<f64> = tail.iter().map(|r| r.min_indicator).collect();
    let forward = result.direction == Direction::Forward;

    let monotone = inds.windows(2).all(|w| w[1] < w[0]);
    let radius_second_differences = if tail.len() >= 3 {
        (0..tail[0].mean_radii.len())
            .map(|j| {
                let fs: Vec<f64> = tail.iter().map(|r| r.mean_radii[j]).collect();
                (1..tail.len() - 1)
                    .map(|i| second_derivative(&ts, &fs, i))
                    .collect()
            })
            .collect()
    } else {
        vec![Vec::new(); tail[0].mean_radii.len()]
    };
    let trend = TrendSummary {
        indicator_tail: inds.clone(),
        radius_second_differences,
        monotone_decreasing: monotone,
    };

    // A deep rebound overrides everything else: the trajectory touched the
    // degenerate set mid-run and whatever happened afterwards (including a
    // "healthy" horizon stop on the unphysical continuation) postdates the
    // actual breakdown.
    let rebound = deep_rebound(records);

    let healthy_stop = matches!(
        result.termination,
        Termination::HorizonReached | Termination::MaxSteps
    );
    if healthy_stop && rebound.is_none() {
        return Ok(BreakdownReport {
            direction: result.direction,
            t_star_estimate: None,
            mechanism: Mechanism::Undetermined,
            trigger: result.termination,
            trend,
        });
    }

    let t_star_estimate = rebound.or_else(|| breakdown_time_estimate(&ts, &inds, forward));
    let residuals_ok = records
        .iter()
        .all(|r| r.x_inf.max(r.y_inf) <= budget);
    let mechanism = if result.termination == Termination::NaNDetected || !residuals_ok {
        Mechanism::RegularitySuspected
    } else if rebound.is_some() || monotone {
        Mechanism::ImmersivityLoss
    } else {
        Mechanism::Undetermined
    };
    Ok(BreakdownReport {
        direction: result.direction,
        t_star_estimate,
        mechanism,
        trigger: result.termination,
        trend,
    })
}
