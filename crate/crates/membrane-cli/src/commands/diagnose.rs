//! `diagnose <run-dir>`: reclassify a finished run from its persisted
//! diagnostics, without re-running any dynamics.

use std::path::Path;

use membrane_core::diagnostics::{self, DEFAULT_TREND_WINDOW};
use membrane_core::error::Error;
use membrane_core::evolution::RunResult;
use membrane_core::geometry::FieldState;

use crate::commands::fmt_t_star;
use crate::output::{self, read_diagnostics_csv, read_result_toml};
use crate::pipeline::{self, PipelineError};

/// Rebuilds an analyzable run result from the on-disk record series.
///
/// Classification consumes only the records, termination, and direction;
/// the field state is not persisted per record, so a placeholder stands in
/// for `final_state` and must never be evolved or measured.
fn reload_run(dir: &Path) -> Result<RunResult, PipelineError> {
    let meta = read_result_toml(&dir.join("result.toml")).map_err(PipelineError::Config)?;
    let records =
        read_diagnostics_csv(&dir.join("diagnostics.csv")).map_err(PipelineError::Config)?;
    let placeholder = FieldState {
        t: meta.final_t,
        z: vec![],
        r: vec![],
        vz: vec![],
        vr: vec![],
    };
    Ok(RunResult {
        termination: meta.termination,
        final_state: placeholder,
        records,
        direction: meta.direction,
        steps_taken: meta.steps_taken,
    })
}

fn report_direction(dir: &Path, name: &str, budget: f64) -> Result<(), PipelineError> {
    let run = reload_run(dir)?;
    let report = diagnostics::detect_breakdown(&run, budget, DEFAULT_TREND_WINDOW)
        .map_err(|e| PipelineError::Config(format!("{name}: {e}")))?;

    println!("direction = {name}");
    println!("termination = {}", output::termination_to_str(run.termination));
    println!("steps_taken = {}", run.steps_taken);
    println!("final_t = {:.9e}", run.final_state.t);
    println!("records = {}", run.records.len());
    println!("mechanism = {:?}", report.mechanism);
    println!("t_star = {}", fmt_t_star(report.t_star_estimate));
    println!(
        "max_gauge_residual = {:.3e}",
        pipeline::max_gauge_residual(&run.records)
    );
    println!("monotone_decreasing_tail = {}", report.trend.monotone_decreasing);
    match diagnostics::convexity_check(&run.records) {
        Ok(verdicts) => {
            let bad: Vec<String> = verdicts
                .iter()
                .enumerate()
                .filter(|(_, &ok)| !ok)
                .map(|(i, _)| format!("r_{}", i + 1))
                .collect();
            if bad.is_empty() {
                println!("convexity = ok");
            } else {
                println!("convexity = violated: {}", bad.join(","));
            }
        }
        Err(Error::InsufficientHistory { .. }) => println!("convexity = insufficient-data"),
        Err(e) => {
            return Err(PipelineError::Internal(format!("convexity check failed: {e}")))
        }
    }
    Ok(())
}

pub fn run(run_dir: &Path, budget: f64) -> Result<(), PipelineError> {
    if !(budget.is_finite() && budget > 0.0) {
        return Err(PipelineError::Config(format!(
            "residual budget must be positive and finite, got {budget}"
        )));
    }
    let resolved = output::resolve_output_dir(run_dir);
    if !resolved.is_dir() {
        return Err(PipelineError::Config(format!(
            "{} is not a directory",
            resolved.display()
        )));
    }
    let mut found = 0usize;
    for name in ["forward", "backward"] {
        let dir = resolved.join(name);
        if dir.join("result.toml").is_file() {
            if found > 0 {
                println!();
            }
            report_direction(&dir, name, budget)?;
            found += 1;
        }
    }
    if found == 0 {
        return Err(PipelineError::Config(format!(
            "{} contains no forward/ or backward/ run data",
            resolved.display()
        )));
    }
    Ok(())
}
