//! `evolve <config>`: one full run of the configured initial datum.

use std::path::Path;

use crate::commands::{fmt_t_star, load_config};
use crate::output;
use crate::pipeline::{self, PipelineError};

pub fn run(config_path: &Path) -> Result<(), PipelineError> {
    let (text, config) = load_config(config_path)?;
    let outcome = pipeline::execute(&config)?;

    println!(
        "family = {} (m = {}, k = {}), n = {}",
        config.family.name(),
        outcome.prepared.shape.m(),
        outcome.prepared.shape.k(),
        config.n
    );
    println!("gauge_constant = {:.9e}", outcome.prepared.gauge.c);
    for o in &outcome.outcomes {
        let dir = output::direction_to_str(o.run.direction);
        println!(
            "{dir}: {} at t = {:.9e} after {} steps; mechanism = {:?}; t_star = {}; max_gauge_residual = {:.3e}",
            output::termination_to_str(o.run.termination),
            o.run.final_state.t,
            o.run.steps_taken,
            o.report.mechanism,
            fmt_t_star(o.report.t_star_estimate),
            pipeline::max_gauge_residual(&o.run.records),
        );
    }

    if let Some(dir) = &config.output_dir {
        let resolved = output::resolve_output_dir(dir);
        pipeline::write_run_outputs(&resolved, &text, &config, &outcome)?;
        println!("output = {}", resolved.display());
    }
    Ok(())
}
