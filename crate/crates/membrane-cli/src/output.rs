//! Run-directory layout and atomic persistence.
//!
//! ```text
//! <run-dir>/
//!   manifest.toml      tool version + sha256 of the configuration text
//!   config.toml        byte-for-byte copy of the input configuration
//!   plot.gp            gnuplot script over the emitted CSVs
//!   forward/           one subdirectory per requested direction
//!     diagnostics.csv  stable schema: t, min_indicator, mean_r_1..k,
//!                      density_spread, X_inf, Y_inf, max_speed,
//!                      velocity_margin, gtt_integral
//!     result.toml      termination, step count, final time
//!     breakdown.txt    mechanism classification and trend summary
//!     snapshots/       record_XXXXXX.csv: y, z_1..m, r_1..k, vz_1..m, vr_1..k
//!   backward/          same layout
//! ```
//!
//! All files are written atomically (temp file + rename) and floats are
//! serialized with 17 significant digits so a reload reproduces the run
//! bit for bit. The `MEMBRANE_OUTPUT_ROOT` environment variable prefixes
//! relative run directories.

use std::io::{self, Write as _};
use std::path::{Path, PathBuf};

use membrane_core::diagnostics::{BreakdownReport, DiagnosticsRecord};
use membrane_core::evolution::{Direction, Termination};
use membrane_core::geometry::FieldState;
use sha2::{Digest, Sha256};

/// Environment variable that prefixes relative output directories.
pub const OUTPUT_ROOT_ENV: &str = "MEMBRANE_OUTPUT_ROOT";

/// Applies the output-root override to a (possibly relative) directory.
pub fn resolve_output_dir(dir: &Path) -> PathBuf {
    if dir.is_absolute() {
        return dir.to_path_buf();
    }
    match std::env::var_os(OUTPUT_ROOT_ENV) {
        Some(root) if !root.is_empty() => PathBuf::from(root).join(dir),
        _ => dir.to_path_buf(),
    }
}

/// Serializes a float with enough digits to round-trip exactly.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.17e}")
}

/// Writes `bytes` to `path` atomically: the content lands under a
/// temporary name in the same directory and is renamed into place.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let dir = path
        .parent()
        .ok_or_else(|| io::Error::other("path has no parent directory"))?;
    std::fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.flush()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// The diagnostics CSV header for `k` radius factors.
pub fn diagnostics_header(k: usize) -> String {
    let mut cols = vec!["t".to_string(), "min_indicator".to_string()];
    cols.extend((1..=k).map(|i| format!("mean_r_{i}")));
    cols.extend(
        ["density_spread", "X_inf", "Y_inf", "max_speed", "velocity_margin", "gtt_integral"]
            .map(String::from),
    );
    cols.join(",")
}

pub fn diagnostics_csv(records: &[DiagnosticsRecord], k: usize) -> String {
    let mut out = diagnostics_header(k);
    out.push('\n');
    for r in records {
        let mut row = vec![fmt_f64(r.t), fmt_f64(r.min_indicator)];
        assert_eq!(r.mean_radii.len(), k, "record with wrong radius count");
        row.extend(r.mean_radii.iter().map(|&v| fmt_f64(v)));
        row.extend(
            [r.density_spread, r.x_inf, r.y_inf, r.max_speed, r.velocity_margin, r.gtt_integral]
                .map(fmt_f64),
        );
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Reads a diagnostics CSV back into records. The two in-memory-only
/// fields (`max_radii`, `mean_z_radius`) are not part of the schema and
/// come back as NaN; nothing downstream of a reload consumes them.
pub fn read_diagnostics_csv(path: &Path) -> Result<Vec<DiagnosticsRecord>, String> {
    let mut reader = csv::Reader::from_path(path)
        .map_err(|e| format!("{}: {e}", path.display()))?;
    let headers = reader
        .headers()
        .map_err(|e| format!("{}: {e}", path.display()))?
        .clone();
    let k = headers.iter().filter(|h| h.starts_with("mean_r_")).count();
    let expected = diagnostics_header(k);
    let got = headers.iter().collect::<Vec<_>>().join(",");
    if got != expected {
        return Err(format!(
            "{}: unexpected columns {got:?} (expected {expected:?})",
            path.display()
        ));
    }
    let mut records = Vec::new();
    for (line, row) in reader.records().enumerate() {
        let row = row.map_err(|e| format!("{}: {e}", path.display()))?;
        let field = |i: usize| -> Result<f64, String> {
            row.get(i)
                .ok_or_else(|| format!("{}: row {line}: missing column {i}", path.display()))?
                .parse::<f64>()
                .map_err(|e| format!("{}: row {line}: {e}", path.display()))
        };
        let mean_radii = (0..k).map(|i| field(2 + i)).collect::<Result<Vec<_>, _>>()?;
        records.push(DiagnosticsRecord {
            t: field(0)?,
            min_indicator: field(1)?,
            mean_radii,
            density_spread: field(2 + k)?,
            x_inf: field(3 + k)?,
            y_inf: field(4 + k)?,
            max_speed: field(5 + k)?,
            velocity_margin: field(6 + k)?,
            gtt_integral: field(7 + k)?,
            max_radii: vec![f64::NAN; k],
            mean_z_radius: f64::NAN,
        });
    }
    Ok(records)
}

/// One snapshot file: grid coordinate plus every field column.
pub fn snapshot_csv(state: &FieldState) -> String {
    let n = state.n();
    let y = membrane_core::grid::points(n);
    let mut cols = vec!["y".to_string()];
    cols.extend((1..=state.z.len()).map(|i| format!("z_{i}")));
    cols.extend((1..=state.r.len()).map(|i| format!("r_{i}")));
    cols.extend((1..=state.vz.len()).map(|i| format!("vz_{i}")));
    cols.extend((1..=state.vr.len()).map(|i| format!("vr_{i}")));
    let mut out = cols.join(",");
    out.push('\n');
    for j in 0..n {
        let mut row = vec![fmt_f64(y[j])];
        for group in [&state.z, &state.r, &state.vz, &state.vr] {
            row.extend(group.iter().map(|f| fmt_f64(f[j])));
        }
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub fn read_snapshot_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>), String> {
    let mut reader = csv::Reader::from_path(path)
        .map_err(|e| format!("{}: {e}", path.display()))?;
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| format!("{}: {e}", path.display()))?
        .iter()
        .map(String::from)
        .collect();
    let mut columns = vec![Vec::new(); headers.len()];
    for row in reader.records() {
        let row = row.map_err(|e| format!("{}: {e}", path.display()))?;
        for (i, cell) in row.iter().enumerate() {
            columns[i].push(
                cell.parse::<f64>()
                    .map_err(|e| format!("{}: {e}", path.display()))?,
            );
        }
    }
    Ok((headers, columns))
}

pub fn termination_to_str(t: Termination) -> &'static str {
    match t {
        Termination::HorizonReached => "HorizonReached",
        Termination::IndicatorFloor => "IndicatorFloor",
        Termination::RadiusFloor => "RadiusFloor",
        Termination::DtFloor => "DtFloor",
        Termination::NonTimelike => "NonTimelike",
        Termination::NaNDetected => "NaNDetected",
        Termination::MaxSteps => "MaxSteps",
    }
}

pub fn termination_from_str(s: &str) -> Result<Termination, String> {
    Ok(match s {
        "HorizonReached" => Termination::HorizonReached,
        "IndicatorFloor" => Termination::IndicatorFloor,
        "RadiusFloor" => Termination::RadiusFloor,
        "DtFloor" => Termination::DtFloor,
        "NonTimelike" => Termination::NonTimelike,
        "NaNDetected" => Termination::NaNDetected,
        "MaxSteps" => Termination::MaxSteps,
        other => return Err(format!("unknown termination {other:?}")),
    })
}

pub fn direction_to_str(d: Direction) -> &'static str {
    match d {
        Direction::Forward => "forward",
        Direction::Backward => "backward",
    }
}

pub fn direction_from_str(s: &str) -> Result<Direction, String> {
    Ok(match s {
        "forward" => Direction::Forward,
        "backward" => Direction::Backward,
        other => return Err(format!("unknown direction {other:?}")),
    })
}

/// Per-direction run metadata, round-tripped through `result.toml`.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultMeta {
    pub direction: Direction,
    pub termination: Termination,
    pub steps_taken: usize,
    pub final_t: f64,
}

pub fn result_toml(meta: &ResultMeta) -> String {
    format!(
        "direction = \"{}\"\ntermination = \"{}\"\nsteps_taken = {}\nfinal_t = \"{}\"\n",
        direction_to_str(meta.direction),
        termination_to_str(meta.termination),
        meta.steps_taken,
        fmt_f64(meta.final_t),
    )
}

pub fn read_result_toml(path: &Path) -> Result<ResultMeta, String> {
    let text =
        std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let value: toml::Value =
        toml::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?;
    let get_str = |key: &str| -> Result<&str, String> {
        value
            .get(key)
            .and_then(|v| v.as_str())
            .ok_or_else(|| format!("{}: missing string key {key:?}", path.display()))
    };
    let direction = direction_from_str(get_str("direction")?)?;
    let termination = termination_from_str(get_str("termination")?)?;
    let steps_taken = value
        .get("steps_taken")
        .and_then(|v| v.as_integer())
        .ok_or_else(|| format!("{}: missing integer key \"steps_taken\"", path.display()))?
        as usize;
    let final_t = get_str("final_t")?
        .parse::<f64>()
        .map_err(|e| format!("{}: final_t: {e}", path.display()))?;
    Ok(ResultMeta { direction, termination, steps_taken, final_t })
}

pub fn breakdown_txt(report: &BreakdownReport) -> String {
    let mut out = String::new();
    out.push_str(&format!("direction: {}\n", direction_to_str(report.direction)));
    out.push_str(&format!("trigger: {}\n", termination_to_str(report.trigger)));
    out.push_str(&format!("mechanism: {:?}\n", report.mechanism));
    match report.t_star_estimate {
        Some(t) => out.push_str(&format!("t_star_estimate: {}\n", fmt_f64(t))),
        None => out.push_str("t_star_estimate: none\n"),
    }
    out.push_str(&format!(
        "monotone_decreasing_tail: {}\n",
        report.trend.monotone_decreasing
    ));
    let tail: Vec<String> = report.trend.indicator_tail.iter().map(|&v| fmt_f64(v)).collect();
    out.push_str(&format!("indicator_tail: {}\n", tail.join(" ")));
    for (i, diffs) in report.trend.radius_second_differences.iter().enumerate() {
        let vals: Vec<String> = diffs.iter().map(|&v| fmt_f64(v)).collect();
        out.push_str(&format!("mean_r_{}_second_differences: {}\n", i + 1, vals.join(" ")));
    }
    out
}

pub fn manifest_toml(version: &str, config_text: &str) -> String {
    format!(
        "tool = \"membrane\"\nversion = \"{version}\"\nconfig_file = \"config.toml\"\nconfig_sha256 = \"{}\"\n",
        sha256_hex(config_text.as_bytes()),
    )
}

/// The gnuplot companion script: indicator decay and mean radii for every
/// direction that produced data.
pub fn plot_script(directions: &[Direction], k: usize) -> String {
    let mut out = String::from(
        "# gnuplot script; run from the run directory: gnuplot -p plot.gp\n\
         set datafile separator ','\n\
         set xlabel 't'\n\
         set ylabel 'min immersivity indicator'\n\
         set logscale y\n",
    );
    let mut plots = Vec::new();
    for &d in directions {
        let name = direction_to_str(d);
        plots.push(format!(
            "'{name}/diagnostics.csv' every ::1 using 1:2 with lines title 'indicator ({name})'"
        ));
    }
    out.push_str(&format!("plot {}\n", plots.join(", \\\n     ")));
    out.push_str("pause -1 'indicator decay; press enter for mean radii'\n");
    out.push_str("unset logscale y\nset ylabel 'mean radii'\n");
    let mut radii = Vec::new();
    for &d in directions {
        let name = direction_to_str(d);
        for i in 1..=k {
            radii.push(format!(
                "'{name}/diagnostics.csv' every ::1 using 1:{} with lines title 'mean r_{i} ({name})'",
                2 + i
            ));
        }
    }
    out.push_str(&format!("plot {}\n", radii.join(", \\\n     ")));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(t: f64) -> DiagnosticsRecord {
        DiagnosticsRecord {
            t,
            min_indicator: 0.5 + t,
            mean_radii: vec![1.0, 2.0],
            density_spread: 1e-9,
            x_inf: 2e-9,
            y_inf: 3e-9,
            max_speed: 1.5,
            velocity_margin: 0.9,
            gtt_integral: 6.25,
            max_radii: vec![1.1, 2.1],
            mean_z_radius: 0.99,
        }
    }

    #[test]
    fn diagnostics_csv_round_trips_bit_for_bit() {
        let records = vec![record(0.0), record(0.125), record(1.0 / 3.0)];
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("diagnostics.csv");
        atomic_write(&path, diagnostics_csv(&records, 2).as_bytes()).unwrap();
        let loaded = read_diagnostics_csv(&path).unwrap();
        assert_eq!(loaded.len(), 3);
        for (a, b) in records.iter().zip(&loaded) {
            assert_eq!(a.t, b.t);
            assert_eq!(a.min_indicator, b.min_indicator);
            assert_eq!(a.mean_radii, b.mean_radii);
            assert_eq!(a.density_spread, b.density_spread);
            assert_eq!(a.x_inf, b.x_inf);
            assert_eq!(a.y_inf, b.y_inf);
            assert_eq!(a.max_speed, b.max_speed);
            assert_eq!(a.velocity_margin, b.velocity_margin);
            assert_eq!(a.gtt_integral, b.gtt_integral);
            assert!(b.max_radii.iter().all(|v| v.is_nan()));
            assert!(b.mean_z_radius.is_nan());
        }
    }

    #[test]
    fn header_schema_is_stable() {
        assert_eq!(
            diagnostics_header(2),
            "t,min_indicator,mean_r_1,mean_r_2,density_spread,X_inf,Y_inf,max_speed,velocity_margin,gtt_integral"
        );
    }

    #[test]
    fn result_meta_round_trips() {
        let meta = ResultMeta {
            direction: Direction::Backward,
            termination: Termination::IndicatorFloor,
            steps_taken: 431,
            final_t: -1.8399325,
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("result.toml");
        atomic_write(&path, result_toml(&meta).as_bytes()).unwrap();
        assert_eq!(read_result_toml(&path).unwrap(), meta);
    }

    #[test]
    fn atomic_write_replaces_content() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.txt");
        atomic_write(&path, b"one").unwrap();
        atomic_write(&path, b"two").unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), b"two");
    }

    #[test]
    fn sha256_matches_known_vector() {
        // SHA-256 of the empty string, a published test vector.
        assert_eq!(
            sha256_hex(b""),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        );
    }

    #[test]
    fn output_root_env_prefixes_relative_paths() {
        // Env vars are process-global; exercise both branches carefully.
        let key = OUTPUT_ROOT_ENV;
        let old = std::env::var_os(key);
        std::env::set_var(key, "/tmp/membrane-root");
        assert_eq!(
            resolve_output_dir(Path::new("runs/a")),
            PathBuf::from("/tmp/membrane-root/runs/a")
        );
        assert_eq!(resolve_output_dir(Path::new("/abs/b")), PathBuf::from("/abs/b"));
        match old {
            Some(v) => std::env::set_var(key, v),
            None => std::env::remove_var(key),
        }
    }
}
