//! `sweep <template> <grid>`: cartesian product of parameter overrides
//! applied to a template configuration, one row per combination.
//!
//! The grid file holds a `[grid]` table whose leaf arrays are the sweep
//! axes; a leaf's dotted path names the template key it overrides, so
//! `"family.rho0" = [0.8, 1.0]` (or the equivalent nested tables) varies
//! `rho0` inside `[family]`. Axes combine in sorted-path order with the
//! last axis varying fastest. Every combination runs in isolation: a
//! failing row becomes a `config-error`/`internal-error` row in the
//! summary and the sweep continues.

use std::fmt::Write as _;
use std::path::Path;

use crate::config::parse_config;
use crate::output::{self, atomic_write};
use crate::pipeline::{self, PipelineError};

/// One sweep axis: a dotted config path and its override values.
#[derive(Debug, Clone)]
struct Axis {
    path: String,
    values: Vec<toml::Value>,
}

fn config_err(msg: impl Into<String>) -> PipelineError {
    PipelineError::Config(msg.into())
}

/// Collects `[grid]` leaf arrays as sweep axes, accepting both quoted
/// dotted keys and nested tables.
fn collect_axes(grid: &toml::Value) -> Result<Vec<Axis>, PipelineError> {
    let table = grid
        .get("grid")
        .ok_or_else(|| config_err("grid file needs a [grid] table"))?
        .as_table()
        .ok_or_else(|| config_err("[grid] must be a table"))?;
    let mut axes = Vec::new();
    let mut stack: Vec<(String, &toml::map::Map<String, toml::Value>)> =
        vec![(String::new(), table)];
    while let Some((prefix, tbl)) = stack.pop() {
        for (key, value) in tbl {
            let path = if prefix.is_empty() {
                key.clone()
            } else {
                format!("{prefix}.{key}")
            };
            match value {
                toml::Value::Array(values) => {
                    if values.is_empty() {
                        return Err(config_err(format!("grid axis {path:?} has no values")));
                    }
                    axes.push(Axis { path, values: values.clone() });
                }
                toml::Value::Table(inner) => stack.push((path, inner)),
                _ => {
                    return Err(config_err(format!(
                        "grid axis {path:?} must be an array of values"
                    )))
                }
            }
        }
    }
    axes.sort_by(|a, b| a.path.cmp(&b.path));
    Ok(axes)
}

/// Sets `value` at a dotted path inside a parsed config, creating
/// intermediate tables as needed.
fn apply_override(
    root: &mut toml::Value,
    path: &str,
    value: &toml::Value,
) -> Result<(), PipelineError> {
    let mut cursor = root;
    let parts: Vec<&str> = path.split('.').collect();
    for part in &parts[..parts.len() - 1] {
        let table = cursor
            .as_table_mut()
            .ok_or_else(|| config_err(format!("grid path {path:?}: {part:?} is not a table")))?;
        cursor = table
            .entry((*part).to_string())
            .or_insert_with(|| toml::Value::Table(toml::map::Map::new()));
    }
    let last = parts.last().expect("split yields at least one part");
    let table = cursor
        .as_table_mut()
        .ok_or_else(|| config_err(format!("grid path {path:?} does not end inside a table")))?;
    table.insert((*last).to_string(), value.clone());
    Ok(())
}

/// Renders a TOML scalar for a summary cell.
fn cell(value: &toml::Value) -> String {
    match value {
        toml::Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

struct Row {
    index: usize,
    values: Vec<String>,
    status: &'static str,
    forward_termination: String,
    backward_termination: String,
    t_star_forward: String,
    t_star_backward: String,
    max_gauge_residual: String,
    error: String,
}

fn run_row(
    template: &toml::Value,
    axes: &[Axis],
    choice: &[usize],
    index: usize,
    output_dir: Option<&Path>,
) -> Row {
    let mut row = Row {
        index,
        values: axes
            .iter()
            .zip(choice)
            .map(|(axis, &i)| cell(&axis.values[i]))
            .collect(),
        status: "ok",
        forward_termination: String::new(),
        backward_termination: String::new(),
        t_star_forward: String::new(),
        t_star_backward: String::new(),
        max_gauge_residual: String::new(),
        error: String::new(),
    };

    let mut attempt = || -> Result<(), PipelineError> {
        let mut patched = template.clone();
        for (axis, &i) in axes.iter().zip(choice) {
            apply_override(&mut patched, &axis.path, &axis.values[i])?;
        }
        let text = toml::to_string(&patched)
            .map_err(|e| PipelineError::Internal(format!("serialize row config: {e}")))?;
        let config = parse_config(&text).map_err(|e| config_err(e.to_string()))?;
        let outcome = pipeline::execute(&config)?;

        let mut max_residual = 0.0_f64;
        for o in &outcome.outcomes {
            let termination = output::termination_to_str(o.run.termination).to_string();
            let t_star = crate::commands::fmt_t_star(o.report.t_star_estimate);
            max_residual = max_residual.max(pipeline::max_gauge_residual(&o.run.records));
            match o.run.direction {
                membrane_core::evolution::Direction::Forward => {
                    row.forward_termination = termination;
                    row.t_star_forward = t_star;
                }
                membrane_core::evolution::Direction::Backward => {
                    row.backward_termination = termination;
                    row.t_star_backward = t_star;
                }
            }
        }
        row.max_gauge_residual = format!("{max_residual:.3e}");

        if let Some(root) = output_dir {
            let run_dir = root.join(format!("row_{index:03}"));
            pipeline::write_run_outputs(&run_dir, &text, &config, &outcome)?;
        }
        Ok(())
    };

    if let Err(e) = attempt() {
        row.status = match e {
            PipelineError::Config(_) => "config-error",
            PipelineError::Internal(_) => "internal-error",
        };
        row.error = e.message().to_string();
    }
    row
}

fn header_cells(axes: &[Axis]) -> Vec<String> {
    let mut cells = vec!["row".to_string()];
    cells.extend(axes.iter().map(|a| a.path.clone()));
    cells.extend(
        [
            "status",
            "forward_termination",
            "backward_termination",
            "t_star_forward",
            "t_star_backward",
            "max_gauge_residual",
            "error",
        ]
        .map(String::from),
    );
    cells
}

fn row_cells(row: &Row) -> Vec<String> {
    let mut cells = vec![row.index.to_string()];
    cells.extend(row.values.iter().cloned());
    cells.extend(
        [
            row.status.to_string(),
            row.forward_termination.clone(),
            row.backward_termination.clone(),
            row.t_star_forward.clone(),
            row.t_star_backward.clone(),
            row.max_gauge_residual.clone(),
            row.error.clone(),
        ],
    );
    cells
}

fn print_table(header: &[String], rows: &[Vec<String>]) {
    let mut widths: Vec<usize> = header.iter().map(String::len).collect();
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.len());
        }
    }
    let render = |cells: &[String]| {
        let mut line = String::new();
        for (i, (cell, w)) in cells.iter().zip(&widths).enumerate() {
            if i > 0 {
                line.push_str("  ");
            }
            let _ = write!(line, "{cell:<w$}");
        }
        println!("{}", line.trim_end());
    };
    render(header);
    for row in rows {
        render(row);
    }
}

fn csv_escape(cell: &str) -> String {
    if cell.contains(',') || cell.contains('"') || cell.contains('\n') {
        format!("\"{}\"", cell.replace('"', "\"\""))
    } else {
        cell.to_string()
    }
}

pub fn run(
    template_path: &Path,
    grid_path: &Path,
    output_dir: Option<&Path>,
) -> Result<(), PipelineError> {
    let template_text = std::fs::read_to_string(template_path)
        .map_err(|e| config_err(format!("read {}: {e}", template_path.display())))?;
    let template: toml::Value = toml::from_str(&template_text)
        .map_err(|e| config_err(format!("{}: {e}", template_path.display())))?;
    let grid_text = std::fs::read_to_string(grid_path)
        .map_err(|e| config_err(format!("read {}: {e}", grid_path.display())))?;
    let grid: toml::Value = toml::from_str(&grid_text)
        .map_err(|e| config_err(format!("{}: {e}", grid_path.display())))?;
    let axes = collect_axes(&grid)?;
    let output_dir = output_dir.map(output::resolve_output_dir);

    let header = header_cells(&axes);
    let mut printed_rows: Vec<Vec<String>> = Vec::new();
    let mut csv = header.iter().map(|c| csv_escape(c)).collect::<Vec<_>>().join(",");
    csv.push('\n');

    if !axes.is_empty() {
        let total: usize = axes.iter().map(|a| a.values.len()).product();
        let mut choice = vec![0usize; axes.len()];
        for index in 0..total {
            let row = run_row(&template, &axes, &choice, index, output_dir.as_deref());
            let cells = row_cells(&row);
            csv.push_str(
                &cells.iter().map(|c| csv_escape(c)).collect::<Vec<_>>().join(","),
            );
            csv.push('\n');
            printed_rows.push(cells);

            // Odometer increment, last axis fastest.
            for pos in (0..axes.len()).rev() {
                choice[pos] += 1;
                if choice[pos] < axes[pos].values.len() {
                    break;
                }
                choice[pos] = 0;
            }
        }
    }

    print_table(&header, &printed_rows);
    if let Some(root) = &output_dir {
        std::fs::create_dir_all(root)
            .map_err(|e| PipelineError::Internal(format!("create {}: {e}", root.display())))?;
        let path = root.join("summary.csv");
        atomic_write(&path, csv.as_bytes())
            .map_err(|e| PipelineError::Internal(format!("write {}: {e}", path.display())))?;
        println!("summary = {}", path.display());
    }
    Ok(())
}
