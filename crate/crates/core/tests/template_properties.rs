//! Structural properties of the layered template and the circuit JSON
//! round-trip, checked over randomized shapes and parameters.

use proptest::prelude::*;

use cvdv::budget::template_gate_count;
use cvdv::circuit::{CvCircuit, CvGate, PassiveRound, TemplateSpec};

fn arb_round(n: usize) -> impl Strategy<Value = PassiveRound> {
    let angle = -3.2f64..3.2;
    let amp = -1.0f64..1.0;
    (
        proptest::collection::vec((angle.clone(), angle.clone()), n * (n - 1) / 2),
        proptest::collection::vec(angle, n),
        proptest::collection::vec((amp.clone(), amp), n),
    )
        .prop_map(|(mz, rotations, displacements)| PassiveRound { mz, rotations, displacements })
}

fn arb_template() -> impl Strategy<Value = (TemplateSpec, usize)> {
    (0usize..=3, 1usize..=4).prop_flat_map(|(k, n)| {
        (
            proptest::collection::vec(arb_round(n), k + 2),
            proptest::collection::vec(-0.5f64..0.5, k),
            proptest::collection::vec(-0.6f64..0.6, n),
        )
            .prop_map(move |(rounds, gammas, squeeze)| {
                (TemplateSpec { k, rounds, gammas, squeeze }, n)
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, ..ProptestConfig::default() })]

    #[test]
    fn expansion_matches_the_count_formula((spec, n) in arb_template()) {
        let circuit = spec.expand(n, 50.0).unwrap();
        let count = circuit.count_elementary();
        let k = spec.k;

        prop_assert_eq!(count.total, template_gate_count(k, n));
        prop_assert_eq!(count.cubic, k);
        prop_assert_eq!(count.per_kind.get("MZ").copied().unwrap_or(0), (k + 2) * (n * (n - 1) / 2));
        prop_assert_eq!(count.per_kind.get("R").copied().unwrap_or(0), (k + 2) * n);
        prop_assert_eq!(count.per_kind.get("D").copied().unwrap_or(0), (k + 2) * n);
        prop_assert_eq!(count.per_kind.get("S").copied().unwrap_or(0), n);
        if k >= 1 {
            prop_assert!(count.within_template_budget(n), "L = {} > 10*{}*{}^2", count.total, k, n);
        }
    }

    #[test]
    fn expansion_round_trips_through_json((spec, n) in arb_template()) {
        let circuit = spec.expand(n, 50.0).unwrap();
        let back = CvCircuit::from_json(&circuit.to_json()).unwrap();
        prop_assert_eq!(back, circuit);
    }
}

fn arb_gate(modes: usize) -> impl Strategy<Value = CvGate> {
    let m = 0..modes;
    let pair = (0..modes, 0..modes)
        .prop_filter("distinct modes", |(a, b)| a != b);
    let x = -4.0f64..4.0;
    prop_oneof![
        m.clone().prop_map(|mode| CvGate::Fourier { mode }),
        (m.clone(), x.clone()).prop_map(|(mode, theta)| CvGate::Rotation { mode, theta }),
        (m.clone(), x.clone()).prop_map(|(mode, s)| CvGate::Shear { mode, s }),
        (m.clone(), x.clone()).prop_map(|(mode, gamma)| CvGate::Cubic { mode, gamma }),
        (m.clone(), x.clone()).prop_map(|(mode, r)| CvGate::Squeeze { mode, r }),
        (m.clone(), x.clone()).prop_map(|(mode, s)| CvGate::DisplaceX { mode, s }),
        (m.clone(), x.clone()).prop_map(|(mode, s)| CvGate::DisplaceZ { mode, s }),
        (m, x.clone(), x.clone()).prop_map(|(mode, rq, rp)| CvGate::Displace { mode, rq, rp }),
        (pair.clone(), x.clone()).prop_map(|(modes, s)| CvGate::CZ { modes, s }),
        (pair.clone(), x.clone()).prop_map(|(modes, theta)| CvGate::BeamSplitter { modes, theta }),
        (pair, x.clone(), x).prop_map(|(modes, theta, phi)| CvGate::MachZehnder { modes, theta, phi }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, ..ProptestConfig::default() })]

    // Bit-exact parameter round-trips: the comparison below is `==` on the
    // raw floats, not an approximate one.
    #[test]
    fn gate_lists_round_trip_through_json(
        gates in proptest::collection::vec(arb_gate(3), 0..12),
    ) {
        let circuit = CvCircuit { modes: 3, energy_budget: 9.75, gates };
        let back = CvCircuit::from_json(&circuit.to_json()).unwrap();
        prop_assert_eq!(back, circuit);
    }
}
