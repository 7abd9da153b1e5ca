//! Empirical energy-growth checks: the closed-form worst-case factors the
//! budget ledger uses must dominate the exact post-gate energy on randomly
//! drawn low-energy states, and passive gates must not move it at all.

use cvdv::circuit::CvGate;
use cvdv::fock::FockRep;
use cvdv::random::{random_low_energy_state, seeded};

use rand::Rng;

const TRIALS: usize = 100;
const SLACK: f64 = 1e-8;

#[test]
fn squeeze_energy_stays_in_the_two_sided_envelope() {
    // r up to 0.8 doubles the occupation scale repeatedly; cutoff 64 keeps
    // the top-level mass under the leakage guard.
    let rep = FockRep::new(64).unwrap();
    let mut rng = seeded(101);
    for _ in 0..TRIALS {
        let mut state = random_low_energy_state(&mut rng, 1, 64, 2.0);
        let e = state.energy();
        let r: f64 = rng.gen_range(-0.8..0.8);
        state.apply_gate(&rep, &CvGate::Squeeze { mode: 0, r }).unwrap();
        let after = state.energy();
        let factor = (2.0 * r.abs()).exp();
        assert!(after <= factor * e + SLACK, "r={r}: {after} > {factor}*{e}");
        assert!(after >= e / factor - SLACK, "r={r}: {after} < {e}/{factor}");
    }
}

#[test]
fn shear_energy_respects_the_quadratic_factor() {
    let rep = FockRep::new(64).unwrap();
    let mut rng = seeded(102);
    for _ in 0..TRIALS {
        let mut state = random_low_energy_state(&mut rng, 1, 64, 2.0);
        let e = state.energy();
        let s: f64 = rng.gen_range(-1.5..1.5);
        state.apply_gate(&rep, &CvGate::Shear { mode: 0, s }).unwrap();
        let after = state.energy();
        let bound = (1.0 + s.abs()).powi(2) * e;
        assert!(after <= bound + SLACK, "s={s}: {after} > {bound}");
    }
}

#[test]
fn controlled_z_energy_respects_the_quartic_factor() {
    let rep = FockRep::new(24).unwrap();
    let mut rng = seeded(103);
    for _ in 0..TRIALS {
        let mut state = random_low_energy_state(&mut rng, 2, 24, 2.5);
        let e = state.energy();
        let s: f64 = rng.gen_range(-0.8..0.8);
        state.apply_gate(&rep, &CvGate::CZ { modes: (0, 1), s }).unwrap();
        let after = state.energy();
        let bound = (1.0 + s.abs()).powi(4) * e;
        assert!(after <= bound + SLACK, "s={s}: {after} > {bound}");
    }
}

#[test]
fn displacement_energy_respects_the_amplitude_shift() {
    let rep = FockRep::new(48).unwrap();
    let mut rng = seeded(104);
    for _ in 0..TRIALS {
        let mut state = random_low_energy_state(&mut rng, 1, 48, 2.0);
        let e = state.energy();
        let rq: f64 = rng.gen_range(-1.0..1.0);
        let rp: f64 = rng.gen_range(-1.0..1.0);
        state.apply_gate(&rep, &CvGate::Displace { mode: 0, rq, rp }).unwrap();
        let after = state.energy();
        let bound = (e.sqrt() + rq.hypot(rp) / std::f64::consts::SQRT_2).powi(2);
        assert!(after <= bound + SLACK, "({rq},{rp}): {after} > {bound}");
    }
}

#[test]
fn passive_gates_leave_random_state_energies_alone() {
    let rep = FockRep::new(20).unwrap();
    let mut rng = seeded(105);
    for _ in 0..25 {
        let mut state = random_low_energy_state(&mut rng, 2, 20, 2.5);
        let e = state.energy();
        let gates = [
            CvGate::Fourier { mode: 0 },
            CvGate::Rotation { mode: 1, theta: rng.gen_range(-3.0..3.0) },
            CvGate::BeamSplitter { modes: (0, 1), theta: rng.gen_range(-3.0..3.0) },
            CvGate::MachZehnder {
                modes: (0, 1),
                theta: rng.gen_range(-3.0..3.0),
                phi: rng.gen_range(-3.0..3.0),
            },
        ];
        for gate in gates {
            state.apply_gate(&rep, &gate).unwrap();
            assert!((state.energy() - e).abs() <= 1e-8, "{} drifted from {e}", state.energy());
        }
    }
}
