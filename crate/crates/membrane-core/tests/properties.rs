//! Randomized invariants: structural properties that must hold for any
//! admissible state, not just hand-picked benchmarks.

use membrane_core::gauge;
use membrane_core::geometry::{self, AxisymmetryShape, FieldState};
use membrane_core::grid;
use proptest::prelude::*;

const N: usize = 32;

/// A smooth torus-like state (m = 2, one circle factor) built from a few
/// bounded low-frequency modes. Velocity amplitudes are kept small enough
/// that the state is always strictly time-like.
fn random_state(
    base: f64,
    ra: f64,
    rb: f64,
    va: f64,
    vb: f64,
    wa: f64,
) -> (FieldState, AxisymmetryShape) {
    let shape = AxisymmetryShape::new(2, vec![1]).unwrap();
    let y = grid::points(N);
    let state = FieldState::new(
        0.0,
        vec![
            y.iter().map(|&y| (1.0 + ra * (2.0 * y).cos()) * y.cos()).collect(),
            y.iter().map(|&y| (1.0 + ra * (2.0 * y).cos()) * y.sin()).collect(),
        ],
        vec![y.iter().map(|&y| base + rb * y.cos()).collect()],
        vec![
            y.iter().map(|&y| va * y.sin()).collect(),
            y.iter().map(|&y| vb * (2.0 * y).cos()).collect(),
        ],
        vec![y.iter().map(|&y| wa * y.sin()).collect()],
        &shape,
    )
    .unwrap();
    (state, shape)
}

fn amplitudes() -> impl Strategy<Value = (f64, f64, f64, f64, f64, f64)> {
    (
        0.8..1.5_f64,
        -0.2..0.2_f64,
        -0.3..0.3_f64,
        -0.3..0.3_f64,
        -0.3..0.3_f64,
        -0.3..0.3_f64,
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn indicator_is_bounded_by_the_radius_product(
        (base, ra, rb, va, vb, wa) in amplitudes()
    ) {
        let (state, shape) = random_state(base, ra, rb, va, vb, wa);
        let metric = geometry::compute_metric(&state, &shape).unwrap();
        let (per_point, min) = geometry::immersivity_indicator(&state, &metric);
        let mut min_seen = f64::INFINITY;
        for (j, &v) in per_point.iter().enumerate() {
            prop_assert!(v > 0.0);
            prop_assert!(v <= state.r[0][j] * (1.0 + 1e-12));
            min_seen = min_seen.min(v);
        }
        prop_assert_eq!(min, min_seen);
    }

    #[test]
    fn comoving_projection_is_idempotent_and_orthogonalizes(
        (base, ra, rb, va, vb, wa) in amplitudes()
    ) {
        let (state, _) = random_state(base, ra, rb, va, vb, wa);
        let once = gauge::comoving_project(&state).unwrap();
        let shape = AxisymmetryShape::new(2, vec![1]).unwrap();

        // The mixed component is suppressed relative to its input size.
        let before = geometry::compute_metric(&state, &shape).unwrap();
        let after = geometry::compute_metric(&once, &shape).unwrap();
        let max_before = grid::max_abs(&before.g_ty);
        let max_after = grid::max_abs(&after.g_ty);
        prop_assert!(max_after <= 1e-10 * (max_before + 1.0));

        // Projecting again changes nothing (to rounding).
        let twice = gauge::comoving_project(&once).unwrap();
        for (a, b) in once.vz.iter().flatten().zip(twice.vz.iter().flatten()) {
            prop_assert!((a - b).abs() < 1e-12);
        }
        for (a, b) in once.vr.iter().flatten().zip(twice.vr.iter().flatten()) {
            prop_assert!((a - b).abs() < 1e-12);
        }
        // Positions are untouched, bit for bit.
        prop_assert_eq!(&state.z, &once.z);
        prop_assert_eq!(&state.r, &once.r);
    }

    #[test]
    fn stencil_derivative_kills_constants_and_respects_reflection(
        value in -100.0..100.0_f64,
        ra in -0.5..0.5_f64,
        rb in -0.5..0.5_f64,
    ) {
        // Constants map to exact zero.
        for v in grid::spatial_derivative(&vec![value; N]) {
            prop_assert_eq!(v, 0.0);
        }

        // Reflecting the samples (y -> -y) flips the sign of the result.
        let y = grid::points(N);
        let f: Vec<f64> = y
            .iter()
            .map(|&y| value * 0.01 + ra * y.cos() + rb * (3.0 * y).sin())
            .collect();
        let reflected: Vec<f64> = (0..N).map(|j| f[(N - j) % N]).collect();
        let df = grid::spatial_derivative(&f);
        let dref = grid::spatial_derivative(&reflected);
        for j in 0..N {
            prop_assert!((dref[j] + df[(N - j) % N]).abs() < 1e-12);
        }
    }

    #[test]
    fn parametrization_fixing_is_idempotent_on_random_skews(
        skew in -0.4..0.4_f64,
        rb in -0.2..0.2_f64,
    ) {
        let shape = AxisymmetryShape::new(2, vec![1]).unwrap();
        let y = grid::points(N);
        // A skewed parametrization of a smooth torus-like curve.
        let phi: Vec<f64> = y.iter().map(|&y| y + skew * y.sin()).collect();
        let state = FieldState::new(
            0.0,
            vec![
                phi.iter().map(|&p| p.cos()).collect(),
                phi.iter().map(|&p| p.sin()).collect(),
            ],
            vec![phi.iter().map(|&p| 1.0 + rb * p.cos()).collect()],
            vec![vec![0.0; N], vec![0.0; N]],
            vec![vec![0.0; N]],
            &shape,
        )
        .unwrap();
        let (fixed, c1) = gauge::fix_parametrization(&state, &shape).unwrap();
        let (fixed2, c2) = gauge::fix_parametrization(&fixed, &shape).unwrap();
        prop_assert!((c1.c - c2.c).abs() < 1e-8 * c1.c);
        for (a, b) in fixed.z.iter().flatten().zip(fixed2.z.iter().flatten()) {
            prop_assert!((a - b).abs() < 1e-6);
        }
        for (a, b) in fixed.r.iter().flatten().zip(fixed2.r.iter().flatten()) {
            prop_assert!((a - b).abs() < 1e-6);
        }
    }
}
