//! The analytic per-gate bounds must dominate the measured decomposition
//! defect `(1/2)||SSD(U rho U*) - U_d SSD(rho) U_d*||_1` on random
//! low-energy states, for every gate kind.

use cvdv::budget::gate_error_bound;
use cvdv::circuit::CvGate;
use cvdv::compare::ssd_pushthrough_distance;
use cvdv::fock::CvState;
use cvdv::measure::lattice_spacing;
use cvdv::random::{random_low_energy_state, seeded};
use cvdv::ssd::QuadratureConfig;

use rand::Rng;

/// Quadrature noise allowance on top of each analytic bound.
const FLOOR: f64 = 5e-6;

fn check(state: &CvState, gate: CvGate, d: usize, nodes: Option<usize>) {
    let mut cfg = QuadratureConfig::defaults(state.modes, state.cutoff, d);
    if let Some(m) = nodes {
        cfg.nodes = m;
    }
    let measured = ssd_pushthrough_distance(state, &[gate.clone()], d, &cfg).unwrap();
    let bound = gate_error_bound(&gate, state.energy(), d).bound;
    assert!(
        measured <= bound + FLOOR,
        "{}: measured {measured:.3e} over bound {bound:.3e} at d = {d}",
        gate.kind()
    );
}

#[test]
fn exact_gates_sit_at_the_quadrature_floor_on_random_states() {
    let mut rng = seeded(21);
    let d = 8;
    let l = lattice_spacing(d);
    for _ in 0..2 {
        let state = random_low_energy_state(&mut rng, 1, 32, 1.5);
        check(&state, CvGate::Fourier { mode: 0 }, d, None);
        // Lattice-aligned shifts commute with the decomposition on any
        // state; fractional ones only on window-supported states, so the
        // zero bound is tested where its hypothesis holds.
        check(&state, CvGate::DisplaceX { mode: 0, s: l }, d, None);
        check(&state, CvGate::DisplaceZ { mode: 0, s: -l }, d, None);
        check(&state, CvGate::Displace { mode: 0, rq: l, rp: l }, d, None);
    }
}

#[test]
fn single_mode_bounds_dominate_on_random_states() {
    let mut rng = seeded(22);
    let d = 16;
    for _ in 0..2 {
        let state = random_low_energy_state(&mut rng, 1, 40, 1.5);
        let s = rng.gen_range(0.3..0.9);
        check(&state, CvGate::Shear { mode: 0, s }, d, None);
        let gamma = rng.gen_range(0.04..0.1);
        check(&state, CvGate::Cubic { mode: 0, gamma }, d, None);
        let r = rng.gen_range(-0.35..0.35);
        check(&state, CvGate::Squeeze { mode: 0, r }, d, None);
        let theta = rng.gen_range(-3.0..3.0);
        check(&state, CvGate::Rotation { mode: 0, theta }, d, None);
    }
}

#[test]
fn two_mode_bounds_dominate_on_random_states() {
    let mut rng = seeded(23);
    let state = random_low_energy_state(&mut rng, 2, 16, 2.0);
    let s = rng.gen_range(0.3..0.6);
    check(&state, CvGate::CZ { modes: (0, 1), s }, 8, Some(151));

    let state = random_low_energy_state(&mut rng, 2, 10, 2.0);
    let theta = rng.gen_range(-1.5..1.5);
    check(&state, CvGate::BeamSplitter { modes: (0, 1), theta }, 4, Some(151));
    let phi = rng.gen_range(-3.0..3.0);
    check(&state, CvGate::MachZehnder { modes: (0, 1), theta, phi }, 4, Some(151));
}
