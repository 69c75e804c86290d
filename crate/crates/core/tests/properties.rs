//! Property tests for the structural invariants: notation round-trips,
//! amplitude splitting, and exact rotation algebra.

use blochpulse::notation::{parse_program, serialize_program};
use blochpulse::pulse::{split_amplitude, Block, Event, PulseProgram, RfSegment};
use blochpulse::sim::{program_rotation, SimOptions};
use blochpulse::so3::Rotation;
use nalgebra::Vector3;
use proptest::prelude::*;

fn arb_segment() -> impl Strategy<Value = RfSegment> {
    (-3600.0f64..3600.0, 0.0f64..360.0)
        .prop_map(|(flip, phase)| RfSegment::new(flip, phase))
}

fn arb_program() -> impl Strategy<Value = PulseProgram> {
    prop::collection::vec(
        (prop::collection::vec(arb_segment(), 1..6), 1u32..30).prop_map(|(segs, reps)| Block {
            events: segs.into_iter().map(Event::Rf).collect(),
            reps,
        }),
        1..5,
    )
    .prop_map(|blocks| PulseProgram { blocks, meta: None })
}

proptest! {
    /// Serializing and re-parsing the canonical text is the identity on the
    /// canonical form (angles quantized to 0.1 degree).
    #[test]
    fn serialize_parse_is_idempotent(program in arb_program()) {
        let text = serialize_program(&program).unwrap();
        let reparsed = parse_program(&text).unwrap();
        let text2 = serialize_program(&reparsed).unwrap();
        prop_assert_eq!(text, text2);
        let reparsed2 = parse_program(&serialize_program(&reparsed).unwrap()).unwrap();
        prop_assert_eq!(reparsed, reparsed2);
    }

    /// Round-tripping perturbs every angle by at most the display quantum.
    #[test]
    fn round_trip_quantization_is_bounded(program in arb_program()) {
        let text = serialize_program(&program).unwrap();
        let reparsed = parse_program(&text).unwrap();
        for (a, b) in program.events_expanded().zip(reparsed.events_expanded()) {
            let (Event::Rf(a), Event::Rf(b)) = (a, b) else { unreachable!() };
            prop_assert!((a.flip_deg - b.flip_deg).abs() <= 0.05 + 1e-9);
            let phase_dev = (a.phase_deg - b.phase_deg).abs();
            let phase_dev = phase_dev.min(360.0 - phase_dev);
            prop_assert!(phase_dev <= 0.05 + 1e-9);
        }
    }

    /// The splitter reconstructs the amplitude exactly and respects the bound.
    #[test]
    fn split_amplitude_reconstructs(alpha in -720.0f64..720.0, threshold in 0.5f64..45.0) {
        let (reps, per) = split_amplitude(alpha, threshold).unwrap();
        prop_assert!(reps >= 1);
        prop_assert!((per * reps as f64 - alpha).abs() < 1e-9);
        prop_assert!(per.abs() <= threshold + 1e-9);
    }

    /// Net program rotations are proper and norm-preserving at every scale.
    #[test]
    fn simulation_is_norm_preserving(program in arb_program(), eps in 0.5f64..1.5) {
        let r = program_rotation(&program, eps, &SimOptions::default());
        prop_assert!(r.orthogonality_defect() < 1e-10);
        prop_assert!((r.determinant() - 1.0).abs() < 1e-10);
        prop_assert!((r.apply(&Vector3::z()).norm() - 1.0).abs() < 1e-12);
    }

    /// Composition with the inverse cancels exactly within tolerance.
    #[test]
    fn rotation_inverse_cancels(wx in -3.0f64..3.0, wy in -3.0f64..3.0, wz in -3.0f64..3.0) {
        let r = Rotation::from_scaled_axis(Vector3::new(wx, wy, wz));
        let id = r.inverse().after(&r);
        prop_assert!(id.angle() < 1e-12);
    }
}
