//! Seeded random inputs for the verification harness: low-energy states and
//! admissible template circuits.
//!
//! Everything here is a pure function of the RNG state, so a fixed seed
//! replays bit-identically. The generators never return a marginal object:
//! states come back strictly under their energy cap and circuits come back
//! already proven to survive both simulation models with headroom.

use ndarray::Array2;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::circuit::{CvCircuit, PassiveRound, TemplateSpec};
use crate::fock::CvState;
use crate::measure::Model;
use crate::simulate::{simulate_model, SimOptions};

/// Fraction of the energy budget a generated circuit may actually reach in
/// the probe runs. The slack absorbs the small energy wiggle the cutoff
/// model's window projections add on top of the probe trajectory.
const ENERGY_HEADROOM: f64 = 0.95;

/// Dimension used for the cutoff-model probe run. Only the window width
/// depends on it; 16 is the narrowest window the harness combines with
/// gate-carrying circuits, so passing here is the conservative check.
const PROBE_D: usize = 16;

/// The harness RNG. One stream per experiment, seeded explicitly.
pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random mixed state on `modes` modes with total energy strictly below
/// `e_max`, supported on total occupation number at most 3.
///
/// The draw is a one-to-three component mixture of random low-occupation
/// pure states with a guaranteed vacuum component. The energy is then set
/// by tilting the Fock weights, `rho_{ij} <- t^{n_i + n_j} rho_{ij}` with
/// `t` found by bisection: tilting is a congruence by a positive diagonal
/// matrix, so positivity survives, and the energy moves monotonically from
/// the vacuum value at `t = 0` to the raw value at `t = 1`.
pub fn random_low_energy_state<R: Rng>(
    rng: &mut R,
    modes: usize,
    cutoff: usize,
    e_max: f64,
) -> CvState {
    let vacuum = 0.5 * modes as f64;
    assert!(e_max > vacuum, "energy cap {e_max} leaves no room above the vacuum {vacuum}");
    assert!(cutoff >= 4, "cutoff {cutoff} too small for a 3-quantum support");

    let dim = cutoff.pow(modes as u32);
    let occupation: Vec<usize> = (0..dim)
        .map(|i| {
            let mut idx = i;
            let mut total = 0;
            for _ in 0..modes {
                total += idx % cutoff;
                idx /= cutoff;
            }
            total
        })
        .collect();

    let components = rng.gen_range(1..=3);
    let mut rho = Array2::zeros((dim, dim));
    let mut weight_sum = 0.0;
    for _ in 0..components {
        let weight = -(1.0 - rng.gen::<f64>()).ln().max(f64::MIN_POSITIVE.ln());
        let mut psi = vec![crate::C64::new(0.0, 0.0); dim];
        for (i, c) in psi.iter_mut().enumerate() {
            if occupation[i] <= 3 {
                let damp = 0.7f64.powi(occupation[i] as i32);
                *c = crate::C64::new(
                    damp * rng.gen_range(-1.0..1.0),
                    damp * rng.gen_range(-1.0..1.0),
                );
            }
        }
        // A solid vacuum amplitude keeps the t -> 0 end of the tilt at the
        // vacuum state, which the bisection below relies on.
        psi[0] += crate::C64::new(1.0, 0.0);
        let norm2: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
        for (i, zi) in psi.iter().enumerate() {
            for (j, zj) in psi.iter().enumerate() {
                rho[[i, j]] += weight / norm2 * zi * zj.conj();
            }
        }
        weight_sum += weight;
    }
    rho.mapv_inplace(|z| z / weight_sum);

    let raw = CvState { modes, cutoff, rho };
    let target = vacuum + (e_max - vacuum) * rng.gen_range(0.35..0.95);
    if raw.energy() <= target {
        return raw;
    }
    let tilted = |t: f64| -> CvState {
        let mut rho = raw.rho.clone();
        for ((i, j), z) in rho.indexed_iter_mut() {
            *z *= t.powi((occupation[i] + occupation[j]) as i32);
        }
        let mut state = CvState { modes, cutoff, rho };
        state.renormalize();
        state
    };
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..64 {
        let mid = 0.5 * (lo + hi);
        if tilted(mid).energy() <= target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    tilted(lo)
}

/// Random layered template circuit on `n` modes with `k` cubic rounds,
/// admissible at energy budget `e_star`: its parameters sit inside the
/// static caps and both simulation models evolve the vacuum through it
/// without the exact energy ever reaching `ENERGY_HEADROOM * e_star`.
///
/// Passive angles are drawn uniformly and kept; the active parameters
/// (displacements, squeezing, cubicities) start at a modest scale and the
/// whole draw is shrunk geometrically until the probe runs pass. The
/// shrink consumes no randomness, so the result is a deterministic
/// function of the RNG state.
pub fn admissible_random_template<R: Rng>(
    rng: &mut R,
    k: usize,
    n: usize,
    e_star: f64,
) -> CvCircuit {
    assert!((1..=2).contains(&n), "templates are generated for one or two modes");
    let vacuum = 0.5 * n as f64;
    assert!(
        e_star * ENERGY_HEADROOM > vacuum + 1e-6,
        "budget {e_star} leaves no headroom above the vacuum {vacuum}"
    );

    // e^{|r|} <= sqrt(2 E*) caps the squeeze; the cubicity cap is far above
    // anything a desk-scale probe survives, so gamma starts small instead.
    let r_limit = 0.8 * 0.5 * (2.0 * e_star).ln();
    let base = TemplateSpec {
        k,
        rounds: (0..k + 2).map(|_| random_round(rng, n, 0.4)).collect(),
        gammas: (0..k).map(|_| rng.gen_range(-0.3..0.3)).collect(),
        squeeze: (0..n).map(|_| rng.gen_range(-1.0..1.0) * r_limit).collect(),
    };

    let mut scale = 1.0;
    for _ in 0..120 {
        let circuit = scale_active(&base, scale)
            .expand(n, e_star)
            .expect("generated template is structurally sound");
        if admissible(&circuit, e_star) {
            return circuit;
        }
        scale *= 0.75;
    }
    unreachable!("active parameters shrink to zero, so the probe run must pass");
}

fn random_round<R: Rng>(rng: &mut R, n: usize, disp_scale: f64) -> PassiveRound {
    use std::f64::consts::PI;
    PassiveRound {
        mz: (0..n * (n - 1) / 2)
            .map(|_| (rng.gen_range(-PI..PI), rng.gen_range(-PI..PI)))
            .collect(),
        rotations: (0..n).map(|_| rng.gen_range(-PI..PI)).collect(),
        displacements: (0..n)
            .map(|_| (disp_scale * rng.gen_range(-1.0..1.0), disp_scale * rng.gen_range(-1.0..1.0)))
            .collect(),
    }
}

/// Scales every energy-moving parameter by `s`, leaving passive angles as
/// drawn.
fn scale_active(spec: &TemplateSpec, s: f64) -> TemplateSpec {
    let mut out = spec.clone();
    for round in &mut out.rounds {
        for d in &mut round.displacements {
            d.0 *= s;
            d.1 *= s;
        }
    }
    for g in &mut out.gammas {
        *g *= s;
    }
    for r in &mut out.squeeze {
        *r *= s;
    }
    out
}

/// Probe the simulation models. The realistic run checks the raw energy
/// trajectory; for single-mode circuits the cutoff run additionally
/// exercises the window projections, whose renormalization can push the
/// energy slightly above the raw trajectory near the budget. Two-mode
/// draws only feed the raw-trajectory checks, and their window operators
/// are the one genuinely expensive object in the harness, so they skip the
/// cutoff probe and keep the escalation ceiling low.
fn admissible(circuit: &CvCircuit, e_star: f64) -> bool {
    let opts = SimOptions { max_cutoff_two: 32, ..SimOptions::default() };
    let mut models = vec![Model::Realistic];
    if circuit.modes == 1 {
        models.push(Model::Cutoff);
    }
    for model in models {
        match simulate_model(circuit, PROBE_D, model, &opts) {
            Ok((_, trace)) if trace.max_energy() <= ENERGY_HEADROOM * e_star => {}
            _ => return false,
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::budget::template_gate_count;

    #[test]
    fn low_energy_states_are_valid_and_capped() {
        let mut rng = seeded(7);
        for _ in 0..20 {
            let state = random_low_energy_state(&mut rng, 1, 24, 2.0);
            state.validate(1.0).unwrap();
            assert!(state.energy() <= 2.0, "energy {}", state.energy());
            assert!(state.energy() >= 0.5);
        }
    }

    #[test]
    fn two_mode_states_respect_the_cap() {
        let mut rng = seeded(11);
        for _ in 0..5 {
            let state = random_low_energy_state(&mut rng, 2, 8, 2.5);
            state.validate(1.0).unwrap();
            assert!(state.energy() <= 2.5);
            assert!(state.energy() >= 1.0);
        }
    }

    #[test]
    fn state_draws_vary_and_replay_with_the_seed() {
        let a = random_low_energy_state(&mut seeded(1), 1, 16, 1.5);
        let b = random_low_energy_state(&mut seeded(1), 1, 16, 1.5);
        let c = random_low_energy_state(&mut seeded(2), 1, 16, 1.5);
        assert_eq!(a.rho, b.rho);
        assert_ne!(a.rho, c.rho);
    }

    #[test]
    fn templates_probe_clean_and_keep_their_shape() {
        let mut rng = seeded(3);
        for _ in 0..4 {
            let circuit = admissible_random_template(&mut rng, 1, 1, 2.0);
            assert_eq!(circuit.gates.len(), template_gate_count(1, 1));
            assert!(circuit.validate_parameters().passed());
            let (_, trace) =
                simulate_model(&circuit, 16, Model::Cutoff, &SimOptions::default()).unwrap();
            assert!(trace.max_energy() <= ENERGY_HEADROOM * 2.0);
        }
    }

    #[test]
    fn two_mode_template_is_admissible() {
        let mut rng = seeded(5);
        let circuit = admissible_random_template(&mut rng, 1, 2, 2.5);
        assert_eq!(circuit.modes, 2);
        assert_eq!(circuit.gates.len(), template_gate_count(1, 2));
        simulate_model(&circuit, 16, Model::Realistic, &SimOptions::default()).unwrap();
    }

    #[test]
    fn template_draws_replay_with_the_seed() {
        let a = admissible_random_template(&mut seeded(9), 1, 1, 1.5);
        let b = admissible_random_template(&mut seeded(9), 1, 1, 1.5);
        assert_eq!(a.to_json(), b.to_json());
    }
}
