//! `convergence <config> --resolutions n1,n2,...`: refinement study of one
//! configured datum over the config's time window.
//!
//! Each resolution runs the same physics forward to `t_end`; shared-node
//! differences between successive resolutions yield observed convergence
//! orders, and per-resolution gauge-residual and conserved-density maxima
//! quantify the invariant drift.

use std::path::Path;

use membrane_core::evolution::Termination;
use membrane_core::geometry::FieldState;

use crate::commands::load_config;
use crate::config::DirectionName;
use crate::output;
use crate::pipeline::{self, PipelineError};

fn config_err(msg: impl Into<String>) -> PipelineError {
    PipelineError::Config(msg.into())
}

fn validate_resolutions(resolutions: &[usize]) -> Result<(), PipelineError> {
    if resolutions.len() < 3 {
        return Err(config_err(format!(
            "need at least 3 resolutions for an order estimate, got {}",
            resolutions.len()
        )));
    }
    for &n in resolutions {
        if !membrane_core::grid::valid_size(n) {
            return Err(config_err(format!(
                "resolution {n} is not a usable grid size (even, at least 8)"
            )));
        }
    }
    for pair in resolutions.windows(2) {
        if pair[1] != 2 * pair[0] {
            return Err(config_err(format!(
                "resolutions must double at each step, got {} after {}",
                pair[1], pair[0]
            )));
        }
    }
    Ok(())
}

/// Max-abs difference over all fields at the coarse grid's nodes, which
/// the doubled grid contains as every second node.
fn shared_node_diff(coarse: &FieldState, fine: &FieldState) -> f64 {
    let stride = fine.n() / coarse.n();
    let mut diff = 0.0_f64;
    for (cg, fg) in [
        (&coarse.z, &fine.z),
        (&coarse.r, &fine.r),
        (&coarse.vz, &fine.vz),
        (&coarse.vr, &fine.vr),
    ] {
        for (cf, ff) in cg.iter().zip(fg) {
            for (j, &cv) in cf.iter().enumerate() {
                diff = diff.max((cv - ff[j * stride]).abs());
            }
        }
    }
    diff
}

pub fn run(config_path: &Path, resolutions: &[usize]) -> Result<(), PipelineError> {
    let (_, base_config) = load_config(config_path)?;
    validate_resolutions(resolutions)?;

    let t0 = 0.0;
    println!(
        "window = [{}, {}]",
        output::fmt_f64(t0),
        output::fmt_f64(t0 + base_config.solver.to_params().t_end)
    );

    let mut finals: Vec<FieldState> = Vec::with_capacity(resolutions.len());
    for &n in resolutions {
        let mut config = base_config.clone();
        config.n = n;
        config.directions = vec![DirectionName::Forward];
        let outcome = pipeline::execute(&config)?;
        let o = &outcome.outcomes[0];
        if o.run.termination != Termination::HorizonReached {
            return Err(config_err(format!(
                "WindowTooLong: at n = {n} the run terminated {} at t = {:.9e} before the window end",
                output::termination_to_str(o.run.termination),
                o.run.final_state.t,
            )));
        }
        let max_spread = o
            .run
            .records
            .iter()
            .fold(0.0_f64, |m, r| m.max(r.density_spread));
        println!(
            "n = {n}: steps = {}, final_t = {:.9e}, max_gauge_residual = {:.3e}, max_density_spread = {:.3e}",
            o.run.steps_taken,
            o.run.final_state.t,
            pipeline::max_gauge_residual(&o.run.records),
            max_spread,
        );
        finals.push(o.run.final_state.clone());
    }

    let diffs: Vec<f64> = finals
        .windows(2)
        .map(|pair| shared_node_diff(&pair[0], &pair[1]))
        .collect();
    for (i, d) in diffs.iter().enumerate() {
        println!(
            "pair {}->{}: error_inf = {:.6e}",
            resolutions[i],
            resolutions[i + 1],
            d
        );
    }

    let mut min_order = f64::INFINITY;
    for (i, pair) in diffs.windows(2).enumerate() {
        let order = if pair[1] > f64::MIN_POSITIVE {
            (pair[0] / pair[1]).log2()
        } else {
            f64::INFINITY
        };
        min_order = min_order.min(order);
        println!(
            "order {}->{}->{} = {:.3}",
            resolutions[i],
            resolutions[i + 1],
            resolutions[i + 2],
            order
        );
    }
    println!("min_observed_order = {min_order:.3}");
    Ok(())
}
