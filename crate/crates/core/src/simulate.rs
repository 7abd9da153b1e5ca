//! Whole-circuit evolution from the vacuum under two simulation models.
//!
//! Model `R` applies each gate to the raw truncated state. Model `C`
//! additionally sandwiches the window projection around the evolution:
//! every mode is projected onto the measurement window before each gate and
//! once more before the final readout, with each projection's survival
//! probability recorded. Both models track the exact energy after every
//! gate and abort the moment it crosses the declared budget.
//!
//! The Fock cutoff is adaptive: if the leakage guard trips, the run is
//! replayed from scratch at double the cutoff until either the guard is
//! satisfied or the per-arity ceiling is reached.

use crate::circuit::CvCircuit;
use crate::fock::{CvState, FockRep};
use crate::measure::{BinOperators, Model};
use crate::{Error, Result};

/// Slack added to the budget comparison so exact-boundary circuits (caps
/// chosen to saturate `E*`) do not fail on roundoff.
const BUDGET_SLACK: f64 = 1e-9;

/// Fock-space sizing policy.
#[derive(Debug, Clone, Copy)]
pub struct SimOptions {
    /// Starting cutoff for single-mode circuits.
    pub cutoff_single: usize,
    /// Starting cutoff for two-mode circuits.
    pub cutoff_two: usize,
    /// Doubling ceiling for single-mode circuits.
    pub max_cutoff_single: usize,
    /// Doubling ceiling for two-mode circuits.
    pub max_cutoff_two: usize,
}

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions {
            cutoff_single: 64,
            cutoff_two: 24,
            max_cutoff_single: 256,
            max_cutoff_two: 64,
        }
    }
}

impl SimOptions {
    fn start_and_cap(&self, modes: usize) -> (usize, usize) {
        if modes == 1 {
            (self.cutoff_single.min(self.max_cutoff_single), self.max_cutoff_single)
        } else {
            (self.cutoff_two.min(self.max_cutoff_two), self.max_cutoff_two)
        }
    }
}

/// Exact per-step energies and projection survivals of one run.
#[derive(Debug, Clone)]
pub struct EnergyTrace {
    /// `E_j = tr(rho_j H)` with `H = sum_j (n_j + 1/2)`: the input state at
    /// index 0, then one entry per gate.
    pub energies: Vec<f64>,
    /// Survival probability of each window projection; empty under model
    /// `R`, one entry per gate plus the pre-measurement projection under
    /// model `C`.
    pub survivals: Vec<f64>,
    /// Cutoff the run finally succeeded at.
    pub cutoff: usize,
}

impl EnergyTrace {
    pub fn max_energy(&self) -> f64 {
        self.energies.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b))
    }

    /// Probability that every projection succeeded (1 under model `R`).
    pub fn total_survival(&self) -> f64 {
        self.survivals.iter().product()
    }
}

/// Evolves the vacuum through `circuit` under the given model, returning the
/// final (pre-measurement) state and the energy trace.
///
/// Under model `C` the returned state is already window-projected, so a
/// subsequent cutoff readout re-projects it at negligible cost and effect.
pub fn simulate_model(
    circuit: &CvCircuit,
    d: usize,
    model: Model,
    opts: &SimOptions,
) -> Result<(CvState, EnergyTrace)> {
    match model {
        Model::Realistic | Model::Cutoff => {}
        other => {
            return Err(Error::InvalidArgument(format!(
                "simulation models are R and C, got {}",
                other.tag()
            )));
        }
    }
    circuit.check_structure()?;
    let report = circuit.validate_parameters();
    if let Some(v) = report.violations.first() {
        return Err(Error::TemplateViolation(format!(
            "gate {} ({}): parameter measure {:.6} over cap {:.6} at E* = {}",
            v.gate_index, v.kind, v.value, v.cap, circuit.energy_budget
        )));
    }

    let (mut cutoff, cap) = opts.start_and_cap(circuit.modes);
    loop {
        match run_attempt(circuit, d, model, cutoff) {
            Err(Error::Leakage { .. }) if cutoff < cap => {
                cutoff = (cutoff * 2).min(cap);
            }
            other => return other,
        }
    }
}

fn run_attempt(
    circuit: &CvCircuit,
    d: usize,
    model: Model,
    cutoff: usize,
) -> Result<(CvState, EnergyTrace)> {
    let rep = FockRep::new(cutoff)?;
    let ops = match model {
        Model::Cutoff => Some(BinOperators::new(&rep, d)?),
        _ => None,
    };
    let mut state = CvState::vacuum(circuit.modes, cutoff);
    let mut energies = vec![state.energy()];
    let mut survivals = Vec::new();
    check_budget(energies[0], circuit.energy_budget, 0)?;

    for (i, gate) in circuit.gates.iter().enumerate() {
        if let Some(ops) = &ops {
            survivals.push(project_window(&mut state, ops)?);
        }
        state.apply_gate(&rep, gate)?;
        let e = state.energy();
        check_budget(e, circuit.energy_budget, i + 1)?;
        energies.push(e);
    }
    if let Some(ops) = &ops {
        survivals.push(project_window(&mut state, ops)?);
    }
    Ok((state, EnergyTrace { energies, survivals, cutoff }))
}

/// Projects every mode onto the window, renormalizes, and returns the
/// survival probability of the projection.
fn project_window(state: &mut CvState, ops: &BinOperators) -> Result<f64> {
    let survival = state.all_modes_expectation(&ops.window).re / state.trace();
    if survival < 1e-12 {
        return Err(Error::DegenerateNormalization { mass: survival });
    }
    for mode in 0..state.modes {
        state.conjugate_on(&ops.window, &[mode]);
    }
    state.hermitize();
    state.renormalize();
    Ok(survival)
}

fn check_budget(energy: f64, budget: f64, step: usize) -> Result<()> {
    if energy > budget + BUDGET_SLACK {
        return Err(Error::EnergyBudget { energy, budget, step });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::CvGate;
    use crate::fock::LEAK_TOL;

    fn circuit(modes: usize, budget: f64, gates: Vec<CvGate>) -> CvCircuit {
        CvCircuit { modes, energy_budget: budget, gates }
    }

    #[test]
    fn empty_circuit_keeps_vacuum() {
        for modes in [1usize, 2] {
            let c = circuit(modes, 1.0, vec![]);
            let (state, trace) =
                simulate_model(&c, 8, Model::Realistic, &SimOptions::default()).unwrap();
            assert_eq!(trace.energies, vec![0.5 * modes as f64]);
            assert!(trace.survivals.is_empty());
            assert!((state.rho[[0, 0]].re - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn squeeze_at_cap_matches_sinh_energy() {
        // e^r = sqrt(2 E*) is exactly the admissible cap; the run must
        // complete with E = sinh^2 r + 1/2 <= E*.
        let estar = 2.0;
        let r = (2.0f64 * estar).sqrt().ln();
        let c = circuit(1, estar, vec![CvGate::Squeeze { mode: 0, r }]);
        let (_, trace) =
            simulate_model(&c, 8, Model::Realistic, &SimOptions::default()).unwrap();
        let expect = r.sinh().powi(2) + 0.5;
        assert!((trace.max_energy() - expect).abs() < 1e-6);
        assert!(trace.max_energy() <= estar + BUDGET_SLACK);
    }

    #[test]
    fn displaced_vacuum_energy_is_exact() {
        let c = circuit(
            1,
            2.0,
            vec![CvGate::Displace { mode: 0, rq: 0.6, rp: 0.3 }],
        );
        let (_, trace) =
            simulate_model(&c, 8, Model::Realistic, &SimOptions::default()).unwrap();
        let expect = 0.5 + (0.36 + 0.09) / 2.0;
        assert!((trace.energies[1] - expect).abs() < 1e-9);
    }

    #[test]
    fn passive_gates_leave_energy_unchanged() {
        let c = circuit(
            2,
            3.0,
            vec![
                CvGate::Displace { mode: 0, rq: 0.7, rp: -0.2 },
                CvGate::Rotation { mode: 0, theta: 0.9 },
                CvGate::Fourier { mode: 1 },
                CvGate::BeamSplitter { modes: (0, 1), theta: 0.4 },
                CvGate::MachZehnder { modes: (0, 1), theta: 0.3, phi: 1.1 },
            ],
        );
        let (_, trace) =
            simulate_model(&c, 8, Model::Realistic, &SimOptions::default()).unwrap();
        // Steps 2..=5 are passive.
        for j in 2..=5 {
            assert!(
                (trace.energies[j] - trace.energies[1]).abs() < 1e-8,
                "step {j}: {} vs {}",
                trace.energies[j],
                trace.energies[1]
            );
        }
    }

    #[test]
    fn budget_violation_is_detected() {
        // Displacements carry no static cap, so this passes validation but
        // must trip the runtime energy check.
        let c = circuit(
            1,
            0.6,
            vec![CvGate::Displace { mode: 0, rq: 1.0, rp: 0.0 }],
        );
        let err = simulate_model(&c, 8, Model::Realistic, &SimOptions::default())
            .unwrap_err();
        match err {
            Error::EnergyBudget { energy, budget, step } => {
                assert!((energy - 1.0).abs() < 1e-6);
                assert_eq!(budget, 0.6);
                assert_eq!(step, 1);
            }
            other => panic!("expected EnergyBudget, got {other}"),
        }
    }

    #[test]
    fn over_cap_squeeze_is_rejected_statically() {
        let c = circuit(1, 0.6, vec![CvGate::Squeeze { mode: 0, r: 0.8 }]);
        let err = simulate_model(&c, 8, Model::Realistic, &SimOptions::default())
            .unwrap_err();
        assert!(matches!(err, Error::TemplateViolation(_)));
    }

    #[test]
    fn cutoff_model_survival_respects_energy_bound() {
        // Each projection keeps at least 1 - 4E/(d pi); with one gate there
        // are two projections.
        let d = 16;
        let c = circuit(
            1,
            1.0,
            vec![CvGate::Displace { mode: 0, rq: 0.4, rp: 0.2 }],
        );
        let (state, trace) =
            simulate_model(&c, d, Model::Cutoff, &SimOptions::default()).unwrap();
        assert_eq!(trace.survivals.len(), 2);
        for (j, &s) in trace.survivals.iter().enumerate() {
            let e = trace.energies[j.min(trace.energies.len() - 1)];
            let bound = 1.0 - 4.0 * e / (d as f64 * std::f64::consts::PI);
            assert!(s >= bound - 1e-12, "survival {s} below bound {bound}");
        }
        assert!((state.trace() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn leakage_escalates_cutoff_until_guard_passes() {
        let c = circuit(1, 3.5, vec![CvGate::Squeeze { mode: 0, r: 0.9 }]);
        let opts = SimOptions { cutoff_single: 12, ..SimOptions::default() };
        let (state, trace) = simulate_model(&c, 8, Model::Realistic, &opts).unwrap();
        assert!(trace.cutoff > 12, "no escalation happened");
        assert_eq!(state.cutoff, trace.cutoff);
        assert!(state.leakage_fraction() < LEAK_TOL);
    }

    #[test]
    fn leakage_beyond_ceiling_reports_leakage() {
        let c = circuit(1, 3.5, vec![CvGate::Squeeze { mode: 0, r: 0.9 }]);
        let opts = SimOptions {
            cutoff_single: 12,
            max_cutoff_single: 24,
            ..SimOptions::default()
        };
        let err = simulate_model(&c, 8, Model::Realistic, &opts).unwrap_err();
        assert!(matches!(err, Error::Leakage { cutoff: 24, .. }), "got {err}");
    }

    #[test]
    fn modular_model_is_not_simulable() {
        let c = circuit(1, 1.0, vec![]);
        let err = simulate_model(&c, 8, Model::Modular, &SimOptions::default())
            .unwrap_err();
        assert!(matches!(err, Error::InvalidArgument(_)));
    }
}
