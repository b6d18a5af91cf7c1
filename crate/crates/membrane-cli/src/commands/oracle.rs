//! `oracle <family> <params>`: integrate the homogeneous reference system
//! and report its collapse time, optionally dumping the trajectory.

use std::path::Path;

use membrane_core::oracle::{clifford_integrate, CliffordState};

use crate::output::{atomic_write, fmt_f64, resolve_output_dir};
use crate::pipeline::PipelineError;

pub struct OracleArgs<'a> {
    pub family: &'a str,
    pub params: &'a [String],
    pub t_end: f64,
    pub tol: f64,
    pub csv: Option<&'a Path>,
}

fn parse_params(params: &[String]) -> Result<CliffordState, PipelineError> {
    let mut rho0 = None;
    let mut a0 = None;
    let mut rho_dot0 = 0.0;
    let mut a_dot0 = 0.0;
    for p in params {
        let (key, value) = p.split_once('=').ok_or_else(|| {
            PipelineError::Config(format!("parameter {p:?} is not of the form key=value"))
        })?;
        let value: f64 = value
            .parse()
            .map_err(|e| PipelineError::Config(format!("parameter {key}: {e}")))?;
        match key {
            "rho0" => rho0 = Some(value),
            "a0" => a0 = Some(value),
            "rho_dot0" => rho_dot0 = value,
            "a_dot0" => a_dot0 = value,
            other => {
                return Err(PipelineError::Config(format!(
                    "unknown parameter {other:?} (expected rho0, a0, rho_dot0, a_dot0)"
                )))
            }
        }
    }
    let rho0 = rho0.ok_or_else(|| PipelineError::Config("missing parameter rho0".into()))?;
    let a0 = a0.ok_or_else(|| PipelineError::Config("missing parameter a0".into()))?;
    CliffordState::square_torus(rho0, a0, rho_dot0, a_dot0)
        .map_err(|e| PipelineError::Config(format!("inadmissible initial data: {e}")))
}

fn trajectory_csv(traj: &[CliffordState]) -> String {
    let k = traj[0].a.len();
    let mut cols = vec!["t".to_string(), "rho".to_string(), "rho_dot".to_string()];
    cols.extend((1..=k).map(|i| format!("a_{i}")));
    cols.extend((1..=k).map(|i| format!("a_dot_{i}")));
    cols.push("speed_squared".to_string());
    let mut out = cols.join(",");
    out.push('\n');
    for s in traj {
        let mut row = vec![fmt_f64(s.t), fmt_f64(s.rho), fmt_f64(s.rho_dot)];
        row.extend(s.a.iter().map(|&v| fmt_f64(v)));
        row.extend(s.a_dot.iter().map(|&v| fmt_f64(v)));
        row.push(fmt_f64(s.speed_squared()));
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub fn run(args: &OracleArgs<'_>) -> Result<(), PipelineError> {
    if args.family != "clifford" {
        return Err(PipelineError::Config(format!(
            "unknown homogeneous family {:?} (only \"clifford\" evolves homogeneously)",
            args.family
        )));
    }
    if !(args.t_end.is_finite() && args.t_end > 0.0) {
        return Err(PipelineError::Config(format!(
            "t_end must be a positive finite number, got {}",
            args.t_end
        )));
    }
    if !(args.tol.is_finite() && args.tol > 0.0) {
        return Err(PipelineError::Config(format!(
            "tol must be a positive finite number, got {}",
            args.tol
        )));
    }
    let s0 = parse_params(args.params)?;
    let (traj, collapse) = clifford_integrate(&s0, args.t_end, args.tol)
        .map_err(|e| PipelineError::Internal(format!("reference integration failed: {e}")))?;

    println!("family = clifford");
    println!("rho0 = {}", fmt_f64(s0.rho));
    println!("a0 = {}", fmt_f64(s0.a[0]));
    println!("rho_dot0 = {}", fmt_f64(s0.rho_dot));
    println!("a_dot0 = {}", fmt_f64(s0.a_dot[0]));
    println!("invariant = {}", fmt_f64(s0.c));
    println!("states = {}", traj.len());
    let last = traj.last().expect("trajectory is never empty");
    println!("final_t = {}", fmt_f64(last.t));
    match collapse {
        Some(t) => println!("collapse_t = {}", fmt_f64(t)),
        None => println!("collapse_t = none"),
    }

    if let Some(path) = args.csv {
        let resolved = resolve_output_dir(path);
        atomic_write(&resolved, trajectory_csv(&traj).as_bytes())
            .map_err(|e| PipelineError::Internal(format!("write {}: {e}", resolved.display())))?;
        println!("trajectory = {}", resolved.display());
    }
    Ok(())
}
