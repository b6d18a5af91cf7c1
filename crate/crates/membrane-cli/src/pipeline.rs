//! Run orchestration: initial data -> gauge preparation -> evolution ->
//! breakdown classification -> persisted outputs.
//!
//! Errors split into two families that map onto process exit codes:
//! configuration problems (bad input, exit 2) and internal invariant
//! violations (bugs or unwritable outputs, exit 3).

use std::fmt;
use std::path::Path;

use membrane_core::diagnostics::{
    self, BreakdownReport, DiagnosticsRecord, DEFAULT_TREND_WINDOW,
};
use membrane_core::evolution::{self, Direction, RunResult, SolverParams, Termination};
use membrane_core::gauge::{self, GaugeConstant};
use membrane_core::geometry::{AxisymmetryShape, FieldState};

use crate::config::{RunConfig, SnapshotPolicy};
use crate::families;
use crate::output;

/// Residual-explosion budget separating shrink-driven breakdowns from
/// suspected loss of regularity, used wherever no explicit budget is
/// given. Healthy collapse runs at production resolutions keep
/// `max(X_inf, Y_inf)` below roughly 1e-4; a residual above this budget
/// means the gauge structure itself failed.
pub const DEFAULT_RESIDUAL_BUDGET: f64 = 1e-2;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PipelineError {
    /// The input cannot be run as given; exit code 2.
    Config(String),
    /// An internal invariant failed mid-run; exit code 3.
    Internal(String),
}

impl PipelineError {
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Config(_) => 2,
            PipelineError::Internal(_) => 3,
        }
    }

    /// Machine-readable error class for stderr reporting.
    pub fn class(&self) -> &'static str {
        match self {
            PipelineError::Config(_) => "config",
            PipelineError::Internal(_) => "internal",
        }
    }

    pub fn message(&self) -> &str {
        match self {
            PipelineError::Config(m) | PipelineError::Internal(m) => m,
        }
    }
}

impl fmt::Display for PipelineError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "error[{}]: {}", self.class(), self.message())
    }
}

impl std::error::Error for PipelineError {}

/// Gauge-prepared initial data: projected to comoving parametrization and
/// reparametrized to the uniform-density gauge.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub state: FieldState,
    pub gauge: GaugeConstant,
    pub shape: AxisymmetryShape,
}

/// Everything one direction of a run produced.
#[derive(Debug, Clone)]
pub struct DirectionOutcome {
    pub run: RunResult,
    pub report: BreakdownReport,
}

#[derive(Debug, Clone)]
pub struct PipelineOutcome {
    pub prepared: Prepared,
    pub outcomes: Vec<DirectionOutcome>,
}

/// Builds the configured initial data and fixes the gauge.
pub fn prepare(config: &RunConfig) -> Result<Prepared, PipelineError> {
    let (raw, shape) = families::build(config).map_err(PipelineError::Config)?;
    let projected = gauge::comoving_project(&raw)
        .map_err(|e| PipelineError::Config(format!("comoving projection failed: {e}")))?;
    let (state, c) = gauge::fix_parametrization(&projected, &shape)
        .map_err(|e| PipelineError::Config(format!("parametrization fixing failed: {e}")))?;
    Ok(Prepared { state, gauge: c, shape })
}

/// Runs every requested direction and classifies each termination.
pub fn execute(config: &RunConfig) -> Result<PipelineOutcome, PipelineError> {
    let prepared = prepare(config)?;
    let params = config.solver.to_params();
    let mut outcomes = Vec::with_capacity(config.directions.len());
    for dir in &config.directions {
        let direction = dir.to_direction();
        let run = evolution::evolve(
            &prepared.state,
            prepared.gauge,
            &prepared.shape,
            &params,
            direction,
        )
        .map_err(|e| PipelineError::Internal(format!("evolution failed: {e}")))?;
        let report = diagnostics::detect_breakdown(&run, DEFAULT_RESIDUAL_BUDGET, DEFAULT_TREND_WINDOW)
            .map_err(|e| PipelineError::Internal(format!("breakdown analysis failed: {e}")))?;
        outcomes.push(DirectionOutcome { run, report });
    }
    Ok(PipelineOutcome { prepared, outcomes })
}

/// Largest `max(X_inf, Y_inf)` over a run's records.
pub fn max_gauge_residual(records: &[DiagnosticsRecord]) -> f64 {
    records
        .iter()
        .fold(0.0_f64, |m, r| m.max(r.x_inf.max(r.y_inf)))
}

/// Reproduces the field state behind each diagnostics record.
///
/// The evolution loop is deterministic, so re-running it with the step
/// budget capped at a record's step index lands on that record's state bit
/// for bit; records live at multiples of `record_every` except the
/// terminal one, which is the run's own final state.
pub fn states_at_records(
    prepared: &Prepared,
    params: &SolverParams,
    run: &RunResult,
) -> Result<Vec<FieldState>, PipelineError> {
    let mut states = Vec::with_capacity(run.records.len());
    for (k, rec) in run.records.iter().enumerate() {
        let step_cap = (k * params.record_every).min(run.steps_taken);
        let state = if k == 0 {
            // Record 0 is the prepared state itself in either direction.
            prepared.state.clone()
        } else if step_cap == run.steps_taken {
            run.final_state.clone()
        } else {
            let mut capped = params.clone();
            capped.max_steps = step_cap;
            let rerun = evolution::evolve(
                &prepared.state,
                prepared.gauge,
                &prepared.shape,
                &capped,
                run.direction,
            )
            .map_err(|e| PipelineError::Internal(format!("snapshot re-run failed: {e}")))?;
            if rerun.termination != Termination::MaxSteps || rerun.steps_taken != step_cap {
                return Err(PipelineError::Internal(format!(
                    "snapshot re-run diverged: expected {step_cap} steps, got {} ({:?})",
                    rerun.steps_taken, rerun.termination
                )));
            }
            rerun.final_state
        };
        if state.t != rec.t {
            return Err(PipelineError::Internal(format!(
                "snapshot state time {} does not match record time {}",
                state.t, rec.t
            )));
        }
        states.push(state);
    }
    Ok(states)
}

fn persist(path: &Path, content: &str) -> Result<(), PipelineError> {
    output::atomic_write(path, content.as_bytes())
        .map_err(|e| PipelineError::Internal(format!("write {}: {e}", path.display())))
}

/// Writes the full run directory: manifest, config copy, plot script, and
/// per-direction diagnostics, result metadata, breakdown report, and
/// snapshots per the configured policy.
pub fn write_run_outputs(
    run_dir: &Path,
    config_text: &str,
    config: &RunConfig,
    outcome: &PipelineOutcome,
) -> Result<(), PipelineError> {
    std::fs::create_dir_all(run_dir)
        .map_err(|e| PipelineError::Internal(format!("create {}: {e}", run_dir.display())))?;
    let k = outcome.prepared.shape.k();
    persist(
        &run_dir.join("manifest.toml"),
        &output::manifest_toml(env!("CARGO_PKG_VERSION"), config_text),
    )?;
    persist(&run_dir.join("config.toml"), config_text)?;
    let directions: Vec<Direction> =
        outcome.outcomes.iter().map(|o| o.run.direction).collect();
    persist(&run_dir.join("plot.gp"), &output::plot_script(&directions, k))?;

    let params = config.solver.to_params();
    for o in &outcome.outcomes {
        let dir = run_dir.join(output::direction_to_str(o.run.direction));
        persist(&dir.join("diagnostics.csv"), &output::diagnostics_csv(&o.run.records, k))?;
        let meta = output::ResultMeta {
            direction: o.run.direction,
            termination: o.run.termination,
            steps_taken: o.run.steps_taken,
            final_t: o.run.final_state.t,
        };
        persist(&dir.join("result.toml"), &output::result_toml(&meta))?;
        persist(&dir.join("breakdown.txt"), &output::breakdown_txt(&o.report))?;

        match config.output.snapshots {
            SnapshotPolicy::None => {}
            SnapshotPolicy::Final => {
                persist(
                    &dir.join("snapshots").join("final.csv"),
                    &output::snapshot_csv(&o.run.final_state),
                )?;
            }
            SnapshotPolicy::All => {
                let states = states_at_records(&outcome.prepared, &params, &o.run)?;
                for (i, state) in states.iter().enumerate() {
                    persist(
                        &dir.join("snapshots").join(format!("record_{i:06}.csv")),
                        &output::snapshot_csv(state),
                    )?;
                }
                persist(
                    &dir.join("snapshots").join("final.csv"),
                    &output::snapshot_csv(&o.run.final_state),
                )?;
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;

    fn clifford_config(extra: &str) -> RunConfig {
        let text = format!(
            r#"
            n = 32
            {extra}
            [family]
            name = "clifford"
            rho0 = 1.0
            a0 = 1.0
            [solver]
            t_end = 0.8
            record_every = 2
            "#
        );
        parse_config(&text).expect("config parses")
    }

    #[test]
    fn execute_runs_both_directions_by_default() {
        let outcome = execute(&clifford_config("")).expect("pipeline runs");
        assert_eq!(outcome.outcomes.len(), 2);
        assert_eq!(outcome.outcomes[0].run.direction, Direction::Forward);
        assert_eq!(outcome.outcomes[1].run.direction, Direction::Backward);
        for o in &outcome.outcomes {
            assert_eq!(o.run.termination, Termination::HorizonReached);
        }
        // Time-reflection symmetry of rest data: the backward end time
        // mirrors the forward one.
        let tf = outcome.outcomes[0].run.final_state.t;
        let tb = outcome.outcomes[1].run.final_state.t;
        assert!((tf + tb).abs() < 1e-12, "tf = {tf}, tb = {tb}");
    }

    #[test]
    fn states_at_records_reproduces_record_times_bitwise() {
        let config = clifford_config("directions = [\"forward\"]");
        let outcome = execute(&config).expect("pipeline runs");
        let params = config.solver.to_params();
        let run = &outcome.outcomes[0].run;
        assert!(run.records.len() >= 3, "want several records");
        let states = states_at_records(&outcome.prepared, &params, run).expect("capture");
        assert_eq!(states.len(), run.records.len());
        for (state, rec) in states.iter().zip(&run.records) {
            assert_eq!(state.t, rec.t);
        }
        // Spot-check dynamics: the captured mid-run state must differ from
        // the initial one.
        assert!(states.len() > 2);
        let mid = &states[states.len() / 2];
        let moved = mid
            .r
            .iter()
            .zip(&outcome.prepared.state.r)
            .any(|(a, b)| a.iter().zip(b.iter()).any(|(x, y)| x != y));
        assert!(moved, "mid-run state should differ from the initial state");
    }

    #[test]
    fn bad_family_parameters_surface_as_config_errors() {
        let mut config = clifford_config("");
        // Reach into the parsed config and break it the way a bad build
        // would: a perturbation this large destroys admissibility.
        if let crate::config::FamilyConfig::Clifford(ref mut p) = config.family {
            p.rho_dot0 = 0.0;
            p.a_dot0 = 0.0;
        }
        config.family = crate::config::FamilyConfig::Perturbed(crate::config::PerturbedParams {
            base: Box::new(config.family.clone()),
            modes: vec![crate::config::ModeConfig {
                target: "r1".into(),
                mode: 1,
                amplitude: -5.0,
                phase: 0.0,
            }],
            random: None,
        });
        let err = execute(&config).expect_err("destructive amplitude must fail");
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().starts_with("error[config]:"), "{err}");
    }
}
