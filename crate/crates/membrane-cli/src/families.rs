//! Initial-data families: named closed-form generatrices plus an optional
//! perturbation layer (explicit Fourier modes and seeded random modes).
//!
//! Every built state is re-validated before it is returned: radii must
//! stay positive and the velocity field strictly time-like, so a
//! perturbation that breaks either bound is reported as a configuration
//! error rather than surfacing mid-run.

use membrane_core::geometry::{self, AxisymmetryShape, FieldState};
use membrane_core::grid;
use membrane_core::oracle::{self, CliffordState};

use crate::config::{FamilyConfig, ModeConfig, RunConfig};
use crate::rng::Xoshiro256PlusPlus;

/// Field selector for perturbation targets: `z1..zm`, `r1..rk`,
/// `vz1..vzm`, `vr1..vrk` (one-based).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldTarget {
    Z(usize),
    R(usize),
    Vz(usize),
    Vr(usize),
}

impl FieldTarget {
    pub fn parse(name: &str, m: usize, k: usize) -> Result<Self, String> {
        let (kind, index_str) = if let Some(rest) = name.strip_prefix("vz") {
            ("vz", rest)
        } else if let Some(rest) = name.strip_prefix("vr") {
            ("vr", rest)
        } else if let Some(rest) = name.strip_prefix('z') {
            ("z", rest)
        } else if let Some(rest) = name.strip_prefix('r') {
            ("r", rest)
        } else {
            return Err(format!(
                "unknown perturbation target {name:?} (expected z/r/vz/vr + one-based index)"
            ));
        };
        let index: usize = index_str
            .parse()
            .map_err(|_| format!("perturbation target {name:?}: bad index {index_str:?}"))?;
        let (bound, label) = match kind {
            "z" | "vz" => (m, "z components"),
            _ => (k, "radius factors"),
        };
        if index == 0 || index > bound {
            return Err(format!(
                "perturbation target {name:?}: index out of range (the shape has {bound} {label})"
            ));
        }
        Ok(match kind {
            "z" => FieldTarget::Z(index - 1),
            "r" => FieldTarget::R(index - 1),
            "vz" => FieldTarget::Vz(index - 1),
            _ => FieldTarget::Vr(index - 1),
        })
    }

    /// All admissible targets for a shape, in a fixed documented order
    /// (z's, r's, vz's, vr's); random draws index into this list.
    pub fn all(m: usize, k: usize) -> Vec<FieldTarget> {
        let mut out = Vec::with_capacity(2 * (m + k));
        out.extend((0..m).map(FieldTarget::Z));
        out.extend((0..k).map(FieldTarget::R));
        out.extend((0..m).map(FieldTarget::Vz));
        out.extend((0..k).map(FieldTarget::Vr));
        out
    }
}

struct RawFields {
    z: Vec<Vec<f64>>,
    r: Vec<Vec<f64>>,
    vz: Vec<Vec<f64>>,
    vr: Vec<Vec<f64>>,
}

impl RawFields {
    fn field_mut(&mut self, target: FieldTarget) -> &mut Vec<f64> {
        match target {
            FieldTarget::Z(i) => &mut self.z[i],
            FieldTarget::R(i) => &mut self.r[i],
            FieldTarget::Vz(i) => &mut self.vz[i],
            FieldTarget::Vr(i) => &mut self.vr[i],
        }
    }
}

fn base_fields(family: &FamilyConfig, n: usize) -> Result<RawFields, String> {
    let y = grid::points(n);
    match family {
        FamilyConfig::Clifford(p) => {
            let s = CliffordState::square_torus(p.rho0, p.a0, p.rho_dot0, p.a_dot0)
                .map_err(|e| format!("clifford data: {e}"))?;
            let state = oracle::lift_to_grid(&s, n).map_err(|e| format!("clifford data: {e}"))?;
            Ok(RawFields { z: state.z, r: state.r, vz: state.vz, vr: state.vr })
        }
        FamilyConfig::TorusOfRevolution(p) => Ok(RawFields {
            z: vec![y.iter().map(|&y| p.b * y.sin()).collect()],
            r: vec![y.iter().map(|&y| p.r0 + p.b * y.cos()).collect()],
            vz: vec![vec![0.0; n]],
            vr: vec![vec![0.0; n]],
        }),
        FamilyConfig::Perturbed(_) => unreachable!("nested perturbations rejected at parse time"),
    }
}

fn apply_mode(fields: &mut RawFields, target: FieldTarget, mode: u32, amplitude: f64, phase: f64) {
    let n = fields.z[0].len();
    let y = grid::points(n);
    let field = fields.field_mut(target);
    for j in 0..n {
        field[j] += amplitude * (mode as f64 * y[j] + phase).cos();
    }
}

/// Builds the initial state for a configuration and validates the
/// admissibility bounds (`r > 0` pointwise, strictly time-like
/// velocities).
pub fn build(config: &RunConfig) -> Result<(FieldState, AxisymmetryShape), String> {
    let (m, d) = config.family.implied_shape();
    let k = d.len();
    let shape = AxisymmetryShape::new(m, d).map_err(|e| e.to_string())?;

    let fields = match &config.family {
        FamilyConfig::Perturbed(p) => {
            let mut fields = base_fields(&p.base, config.n)?;
            for mode in &p.modes {
                let target = FieldTarget::parse(&mode.target, m, k)?;
                apply_mode(&mut fields, target, mode.mode, mode.amplitude, mode.phase);
            }
            if let Some(random) = &p.random {
                let targets = FieldTarget::all(m, k);
                let mut rng = Xoshiro256PlusPlus::seed_from_u64(config.seed);
                for _ in 0..random.count {
                    let target = targets[rng.below(targets.len())];
                    let mode = 1 + rng.below(random.max_mode as usize) as u32;
                    let phase = rng.unit_f64() * std::f64::consts::TAU;
                    apply_mode(&mut fields, target, mode, random.amplitude, phase);
                }
            }
            fields
        }
        other => base_fields(other, config.n)?,
    };

    let state = FieldState::new(0.0, fields.z, fields.r, fields.vz, fields.vr, &shape)
        .map_err(|e| format!("built initial data violate admissibility: {e}"))?;
    let g_tt = geometry::g_tt_from_velocities(&state);
    if let Some((j, g)) = g_tt
        .iter()
        .enumerate()
        .find(|(_, &g)| !(g < 0.0))
    {
        return Err(format!(
            "built initial data violate the velocity bound at grid point {j} (g_tt = {g})"
        ));
    }
    Ok((state, shape))
}

/// Explicit-mode description used when echoing a run's perturbations.
pub fn describe_modes(modes: &[ModeConfig]) -> String {
    modes
        .iter()
        .map(|m| format!("{}+={}cos({}y+{})", m.target, m.amplitude, m.mode, m.phase))
        .collect::<Vec<_>>()
        .join(", ")
}
