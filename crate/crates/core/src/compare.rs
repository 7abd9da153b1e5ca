//! End-to-end comparison of the four simulation routes.
//!
//! One run evolves the same circuit under the realistic (`R`) and cutoff
//! (`C`) Fock-space models, reads the modular distribution (`M`) off the
//! cutoff-evolved state, and runs the fully discrete route (`D`):
//! decompose the window-projected input into a qudit density, compile the
//! circuit, and evolve the labels. Total variation distances between the
//! selected models are then checked against the analytic budget of each
//! link in the chain `R - C - M - D`: the cutoff gap for `R - C`, exact
//! equality for `C - M`, and the per-gate bound sum along the worst-case
//! energy ledger for `M - D`. Distances across non-adjacent models are
//! checked against the sum of the skipped links.
//!
//! Reports carry every input, bound, distribution, and diagnostic needed
//! to reproduce a violation offline; a stage failure yields a partial
//! report with the failed stage named rather than an error.

use std::collections::BTreeMap;
use std::time::Instant;

use serde::Serialize;

use crate::budget::{budget_report, BudgetReport};
use crate::circuit::{CvCircuit, CvGate};
use crate::dv::{self, QuditGate};
use crate::fock::{CvState, FockRep};
use crate::measure::{
    grid_values, pdf_cutoff, pdf_modular, pdf_realistic, BinOperators, Model, OutcomeDistribution,
};
use crate::simulate::{simulate_model, SimOptions};
use crate::ssd::{sanitize, ssd, QuadratureConfig, SsdDiagnostics};
use crate::{linalg, Error, Result};

/// Numerical floor added to every bound comparison, absorbing quadrature
/// and truncation noise in distances whose analytic value is zero.
pub const TVD_FLOOR: f64 = 5e-6;

/// Everything one comparison run depends on.
#[derive(Debug, Clone, Serialize)]
pub struct ExperimentConfig {
    pub circuit: CvCircuit,
    /// Qudit dimension / grid size.
    pub d: usize,
    /// Fock cutoff `N_F` used for every continuous-side object.
    pub n_fock: usize,
    /// Models to simulate and compare; at least two, duplicates ignored.
    pub models: Vec<Model>,
    /// Torus quadrature; `None` picks the size-adapted defaults.
    pub quadrature: Option<QuadratureConfig>,
    /// Zero out wall-clock fields so the report JSON is bitwise
    /// reproducible. All reductions are fixed-order regardless.
    pub deterministic: bool,
    /// Lifts the desk-scale caps `d <= 64`, `n_fock <= 200`.
    pub allow_large: bool,
    /// Test hook: appends a spurious gate to the compiled qudit circuit,
    /// so the discrete route must fail its budget.
    pub corrupt_dv: bool,
}

impl ExperimentConfig {
    /// All four models, deterministic reporting, caps enforced.
    pub fn new(circuit: CvCircuit, d: usize, n_fock: usize) -> ExperimentConfig {
        ExperimentConfig {
            circuit,
            d,
            n_fock,
            models: vec![Model::Realistic, Model::Cutoff, Model::Modular, Model::Discrete],
            quadrature: None,
            deterministic: true,
            allow_large: false,
            corrupt_dv: false,
        }
    }
}

/// One measured model pair.
#[derive(Debug, Clone, Serialize)]
pub struct PairReport {
    pub left: Model,
    pub right: Model,
    pub tvd: f64,
    /// Sum of the analytic link bounds between the two models.
    pub bound: f64,
    /// `tvd <= bound + TVD_FLOOR`.
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct StageTiming {
    pub name: String,
    pub seconds: f64,
}

/// Health of the discrete route.
#[derive(Debug, Clone, Serialize)]
pub struct DvDiagnostics {
    pub ssd: SsdDiagnostics,
    /// Negative eigenvalue mass clipped by sanitation.
    pub clipped_mass: f64,
    pub compiled_gates: usize,
}

/// Full record of one comparison run. Optional fields stay `None` when
/// their stage did not run (not selected, or the run failed earlier).
#[derive(Debug, Clone, Serialize)]
pub struct CompareReport {
    pub schema: String,
    pub config: ExperimentConfig,
    pub grid: Vec<f64>,
    pub budget: Option<BudgetReport>,
    pub pairs: Vec<PairReport>,
    /// Measured distributions keyed by model tag.
    pub distributions: BTreeMap<String, OutcomeDistribution>,
    pub energy_trace_realistic: Option<Vec<f64>>,
    pub energy_trace_cutoff: Option<Vec<f64>>,
    /// Window survival of each cutoff projection.
    pub survivals_cutoff: Option<Vec<f64>>,
    /// Mass outside the window under the realistic readout.
    pub overflow_realistic: Option<f64>,
    pub dv_diagnostics: Option<DvDiagnostics>,
    pub stages: Vec<StageTiming>,
    pub failed_stage: Option<String>,
    pub error: Option<String>,
}

impl CompareReport {
    /// Whether the run completed and every measured pair met its budget.
    pub fn passed(&self) -> bool {
        self.failed_stage.is_none() && self.error.is_none() && self.pairs.iter().all(|p| p.pass)
    }
}

/// Total variation distance between two distributions on the same grid:
/// half the L1 distance, which on a finite outcome set equals the largest
/// probability disagreement over events.
pub fn tvd(p: &OutcomeDistribution, q: &OutcomeDistribution) -> Result<f64> {
    if p.d != q.d || p.modes != q.modes || p.probs.len() != q.probs.len() {
        return Err(Error::InvalidArgument(format!(
            "distributions live on different grids: {}^{} vs {}^{}",
            p.d, p.modes, q.d, q.modes
        )));
    }
    Ok(0.5 * p.probs.iter().zip(&q.probs).map(|(a, b)| (a - b).abs()).sum::<f64>())
}

/// Trace distance between decomposing after the gates act and acting with
/// the compiled gates after decomposing:
/// `(1/2) || SSD(U rho U^dag) - U_d SSD(rho) U_d^dag ||_1`.
///
/// This is the per-gate quantity the analytic bounds of
/// [`crate::budget::gate_error_bound`] control, measured with both routes
/// starting from the same state so that preparation error cancels.
///
/// The zero bounds (Fourier, displacements) are exact here only for the
/// Fourier gate and for lattice-aligned shifts (multiples of `l`). A
/// fractional shift commutes with the decomposition only on states confined
/// to the measurement window, so on raw states the measured distance floors
/// at the state's amplitude at the window edge `d*l/2`: about `e^{-pi d/4}`
/// for the vacuum, independent of the Fock cutoff and the node count.
pub fn ssd_pushthrough_distance(
    rho: &CvState,
    gates: &[CvGate],
    d: usize,
    cfg: &QuadratureConfig,
) -> Result<f64> {
    let circuit = CvCircuit {
        modes: rho.modes,
        energy_budget: f64::MAX,
        gates: gates.to_vec(),
    };
    let rep = FockRep::new(rho.cutoff)?;
    let mut evolved = rho.clone();
    for gate in &circuit.gates {
        evolved.apply_gate(&rep, gate)?;
    }
    let (sigma_cv, _) = ssd(&evolved, d, cfg)?;

    let (sigma0, _) = ssd(rho, d, cfg)?;
    let qc = dv::compile(&circuit, d)?;
    let sigma_dv = dv::apply(&sigma0, &qc)?;

    linalg::trace_distance(&sigma_cv.sigma, &sigma_dv.sigma)
}

/// Chain position of a model in `R - C - M - D`.
fn chain_index(m: Model) -> usize {
    match m {
        Model::Realistic => 0,
        Model::Cutoff => 1,
        Model::Modular => 2,
        Model::Discrete => 3,
    }
}

/// Runs the full comparison. Configuration errors (bad dimensions, caps,
/// malformed circuits) return `Err`; failures inside the pipeline return a
/// partial report with `failed_stage` and `error` set.
pub fn run_compare(cfg: &ExperimentConfig) -> Result<CompareReport> {
    let mut models: Vec<Model> = cfg.models.clone();
    models.sort_by_key(|&m| chain_index(m));
    models.dedup();
    if models.len() < 2 {
        return Err(Error::InvalidArgument(
            "need at least two distinct models to compare".into(),
        ));
    }
    if cfg.d < 2 {
        return Err(Error::InvalidArgument(format!("dimension {} below 2", cfg.d)));
    }
    if cfg.n_fock < 4 {
        return Err(Error::InvalidArgument(format!(
            "Fock cutoff {} too small to represent the window",
            cfg.n_fock
        )));
    }
    cfg.circuit.check_structure()?;
    if cfg.circuit.modes > 2 {
        return Err(Error::ResourceLimit(format!(
            "comparison supports at most 2 modes, got {}",
            cfg.circuit.modes
        )));
    }
    if !cfg.allow_large && (cfg.d > 64 || cfg.n_fock > 200) {
        return Err(Error::ResourceLimit(format!(
            "d = {} / N_F = {} over the desk-scale caps (64, 200)",
            cfg.d, cfg.n_fock
        )));
    }
    let qcfg = cfg
        .quadrature
        .unwrap_or_else(|| QuadratureConfig::defaults(cfg.circuit.modes, cfg.n_fock, cfg.d));
    qcfg.validate(cfg.d)?;

    let mut report = CompareReport {
        schema: "compare-report/v1".into(),
        config: ExperimentConfig { models: models.clone(), quadrature: Some(qcfg), ..cfg.clone() },
        grid: grid_values(cfg.d),
        budget: None,
        pairs: Vec::new(),
        distributions: BTreeMap::new(),
        energy_trace_realistic: None,
        energy_trace_cutoff: None,
        survivals_cutoff: None,
        overflow_realistic: None,
        dv_diagnostics: None,
        stages: Vec::new(),
        failed_stage: None,
        error: None,
    };
    if let Err(e) = pipeline(cfg, &models, &qcfg, &mut report) {
        report.error = Some(e.to_string());
    }
    Ok(report)
}

struct Clock {
    last: Instant,
    deterministic: bool,
}

impl Clock {
    fn lap(&mut self, report: &mut CompareReport, name: &str) {
        let seconds =
            if self.deterministic { 0.0 } else { self.last.elapsed().as_secs_f64() };
        report.stages.push(StageTiming { name: name.into(), seconds });
        self.last = Instant::now();
    }
}

fn pipeline(
    cfg: &ExperimentConfig,
    models: &[Model],
    qcfg: &QuadratureConfig,
    report: &mut CompareReport,
) -> Result<()> {
    let circuit = &cfg.circuit;
    let modes = circuit.modes;
    let want = |m: Model| models.contains(&m);
    let mut clock = Clock { last: Instant::now(), deterministic: cfg.deterministic };
    let stage = |report: &mut CompareReport, name: &str| {
        report.failed_stage = Some(name.to_string());
    };
    // Pin the cutoff at N_F for every route so all states share one grid.
    let opts = SimOptions {
        cutoff_single: cfg.n_fock,
        cutoff_two: cfg.n_fock,
        max_cutoff_single: cfg.n_fock,
        max_cutoff_two: cfg.n_fock,
    };

    stage(report, "budget");
    let budget = budget_report(circuit, cfg.d, 0.5 * modes as f64)?;
    let link_rc = budget.eps_rc;
    let link_md = budget.per_gate_sum;
    report.budget = Some(budget);
    clock.lap(report, "budget");

    stage(report, "operators");
    let rep = FockRep::new(cfg.n_fock)?;
    let ops = BinOperators::new(&rep, cfg.d)?;
    clock.lap(report, "operators");

    if want(Model::Realistic) {
        stage(report, "simulate_realistic");
        let (state, trace) = simulate_model(circuit, cfg.d, Model::Realistic, &opts)?;
        report.energy_trace_realistic = Some(trace.energies.clone());
        clock.lap(report, "simulate_realistic");

        stage(report, "measure_realistic");
        let p = pdf_realistic(&state, &ops)?;
        report.overflow_realistic = Some(p.overflow);
        report.distributions.insert("R".into(), p);
        clock.lap(report, "measure_realistic");
    }

    if want(Model::Cutoff) || want(Model::Modular) {
        stage(report, "simulate_cutoff");
        let (state, trace) = simulate_model(circuit, cfg.d, Model::Cutoff, &opts)?;
        report.energy_trace_cutoff = Some(trace.energies.clone());
        report.survivals_cutoff = Some(trace.survivals.clone());
        clock.lap(report, "simulate_cutoff");

        if want(Model::Cutoff) {
            stage(report, "measure_cutoff");
            let p = pdf_cutoff(&state, &ops)?;
            report.distributions.insert("C".into(), p);
            clock.lap(report, "measure_cutoff");
        }
        if want(Model::Modular) {
            stage(report, "measure_modular");
            let p = pdf_modular(&state, &ops)?;
            report.distributions.insert("M".into(), p);
            clock.lap(report, "measure_modular");
        }
    }

    if want(Model::Discrete) {
        stage(report, "decompose_input");
        // The discrete route starts from the decomposition of the
        // window-projected input, the same object the cutoff evolution
        // starts from.
        let mut input = CvState::vacuum(modes, cfg.n_fock);
        let survival = input.all_modes_expectation(&ops.window).re / input.trace();
        if survival < 1e-12 {
            return Err(Error::DegenerateNormalization { mass: survival });
        }
        for mode in 0..modes {
            input.conjugate_on(&ops.window, &[mode]);
        }
        input.hermitize();
        input.renormalize();
        let (raw, diag) = ssd(&input, cfg.d, qcfg)?;
        let (clean, clipped_mass) = sanitize(&raw)?;
        clock.lap(report, "decompose_input");

        stage(report, "compile_dv");
        let mut qc = dv::compile(circuit, cfg.d)?;
        if cfg.corrupt_dv {
            qc.gates.push(QuditGate::XShift { qudit: 0, s: 0.7 });
            qc.provenance.push(qc.provenance.last().copied().unwrap_or(0));
        }
        report.dv_diagnostics = Some(DvDiagnostics {
            ssd: diag,
            clipped_mass,
            compiled_gates: qc.gates.len(),
        });
        clock.lap(report, "compile_dv");

        stage(report, "evolve_dv");
        let evolved = dv::apply(&clean, &qc)?;
        clock.lap(report, "evolve_dv");

        stage(report, "measure_discrete");
        let p = dv::pdf_dv(&evolved)?;
        report.distributions.insert("D".into(), p);
        clock.lap(report, "measure_discrete");
    }

    stage(report, "tvd");
    // Link bounds along the chain R - C - M - D.
    let links = [link_rc, 0.0, link_md];
    for pair in models.windows(2) {
        let (left, right) = (pair[0], pair[1]);
        let p = &report.distributions[left.tag()];
        let q = &report.distributions[right.tag()];
        let value = tvd(p, q)?;
        let bound: f64 = links[chain_index(left)..chain_index(right)].iter().sum();
        report.pairs.push(PairReport {
            left,
            right,
            tvd: value,
            bound,
            pass: value <= bound + TVD_FLOOR,
        });
    }
    clock.lap(report, "tvd");
    report.failed_stage = None;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::lattice_spacing;
    use std::f64::consts::PI;

    fn dist(probs: Vec<f64>, d: usize, modes: usize) -> OutcomeDistribution {
        OutcomeDistribution {
            model: Model::Realistic,
            d,
            modes,
            probs,
            overflow: 0.0,
            survival: 1.0,
        }
    }

    #[test]
    fn tvd_identities() {
        let p = dist(vec![0.25; 4], 4, 1);
        assert_eq!(tvd(&p, &p).unwrap(), 0.0);
        let a = dist(vec![1.0, 0.0, 0.0, 0.0], 4, 1);
        let b = dist(vec![0.0, 0.0, 1.0, 0.0], 4, 1);
        assert_eq!(tvd(&a, &b).unwrap(), 1.0);
        let h = dist(vec![0.5, 0.5], 2, 1);
        let o = dist(vec![1.0, 0.0], 2, 1);
        assert!((tvd(&h, &o).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn tvd_rejects_grid_mismatch() {
        let p = dist(vec![0.5, 0.5], 2, 1);
        let q = dist(vec![0.25; 4], 4, 1);
        assert!(matches!(tvd(&p, &q), Err(Error::InvalidArgument(_))));
    }

    fn base_config(gates: Vec<CvGate>, d: usize, n_fock: usize) -> ExperimentConfig {
        let circuit = CvCircuit { modes: 1, energy_budget: 2.0, gates };
        ExperimentConfig::new(circuit, d, n_fock)
    }

    #[test]
    fn empty_circuit_compares_all_models_within_floor() {
        // d = 32 puts the window edge far enough out that the projected
        // vacuum's residual out-of-window mass (the only C-M discrepancy)
        // is negligible; at d = 8 that artifact is ~1e-5 and at d = 16
        // still ~1e-8.
        let report = run_compare(&base_config(vec![], 32, 64)).unwrap();
        assert!(report.passed(), "{:?}", report.pairs);
        assert_eq!(report.pairs.len(), 3);
        // No gates: the modular and discrete readouts see the same state
        // through exactly equivalent measurements.
        let md = report.pairs.iter().find(|p| p.right == Model::Discrete).unwrap();
        assert!(md.tvd <= TVD_FLOOR, "M-D tvd {}", md.tvd);
        assert_eq!(md.bound, 0.0);
        let cm = &report.pairs[1];
        assert_eq!((cm.left, cm.right), (Model::Cutoff, Model::Modular));
        assert!(cm.tvd <= 1e-9, "C-M tvd {}", cm.tvd);
        assert_eq!(report.distributions.len(), 4);
        assert!(report.failed_stage.is_none());
        let budget = report.budget.as_ref().unwrap();
        assert_eq!(budget.elementary, 0);
    }

    #[test]
    fn modular_matches_discrete_at_small_dimension() {
        let mut cfg = base_config(vec![], 8, 32);
        cfg.models = vec![Model::Modular, Model::Discrete];
        let report = run_compare(&cfg).unwrap();
        assert!(report.passed(), "{:?}", report.pairs);
        assert_eq!(report.pairs.len(), 1);
        assert!(report.pairs[0].tvd <= TVD_FLOOR, "M-D tvd {}", report.pairs[0].tvd);
    }

    #[test]
    fn shear_distance_obeys_bound_and_shrinks_with_dimension() {
        let mut tvds = Vec::new();
        for d in [16usize, 32] {
            let mut cfg = base_config(vec![CvGate::Shear { mode: 0, s: 1.0 }], d, 64);
            cfg.models = vec![Model::Modular, Model::Discrete];
            let report = run_compare(&cfg).unwrap();
            assert!(report.passed(), "d={d}: {:?} {:?}", report.pairs, report.error);
            let pair = &report.pairs[0];
            // Worst-case input energy of the single-mode vacuum is 1/2.
            let bound = (PI / d as f64) * (0.5f64 / 2.0).sqrt();
            assert!((pair.bound - bound).abs() < 1e-12);
            tvds.push(pair.tvd);
        }
        assert!(tvds[1] < tvds[0], "no improvement with d: {tvds:?}");
    }

    #[test]
    fn budget_violation_yields_partial_report() {
        // A displacement past the declared budget passes static checks but
        // trips the runtime energy ledger in the first simulation stage.
        let circuit = CvCircuit {
            modes: 1,
            energy_budget: 0.6,
            gates: vec![CvGate::Displace { mode: 0, rq: 1.2, rp: 0.0 }],
        };
        let cfg = ExperimentConfig::new(circuit, 8, 32);
        let report = run_compare(&cfg).unwrap();
        assert_eq!(report.failed_stage.as_deref(), Some("simulate_realistic"));
        assert!(report.error.is_some());
        assert!(!report.passed());
        assert!(report.budget.is_some(), "budget stage ran before the failure");
        assert!(report.pairs.is_empty());
    }

    #[test]
    fn corrupted_discrete_route_fails_its_budget() {
        let mut cfg = base_config(vec![], 8, 32);
        cfg.corrupt_dv = true;
        let report = run_compare(&cfg).unwrap();
        assert!(report.failed_stage.is_none());
        let md = report.pairs.iter().find(|p| p.right == Model::Discrete).unwrap();
        assert!(!md.pass, "corruption must violate the zero bound: tvd {}", md.tvd);
        assert!(!report.passed());
    }

    #[test]
    fn reports_are_bitwise_deterministic() {
        let cfg = base_config(vec![CvGate::Fourier { mode: 0 }], 8, 32);
        let a = serde_json::to_string(&run_compare(&cfg).unwrap()).unwrap();
        let b = serde_json::to_string(&run_compare(&cfg).unwrap()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn config_validation_rejects_bad_setups() {
        let mut cfg = base_config(vec![], 8, 32);
        cfg.models = vec![Model::Realistic, Model::Realistic];
        assert!(run_compare(&cfg).is_err());
        let cfg = base_config(vec![], 1, 32);
        assert!(run_compare(&cfg).is_err());
        let cfg = base_config(vec![], 128, 32);
        assert!(matches!(run_compare(&cfg), Err(Error::ResourceLimit(_))));
        let mut cfg = base_config(vec![], 8, 300);
        assert!(run_compare(&cfg).is_err());
        cfg.allow_large = false;
        let circuit = CvCircuit { modes: 0, energy_budget: 1.0, gates: vec![] };
        assert!(run_compare(&ExperimentConfig::new(circuit, 8, 32)).is_err());
    }



    #[test]
    fn pushthrough_distance_is_tiny_for_exact_gates() {
        let state = CvState::vacuum(1, 32);
        let qcfg = QuadratureConfig::defaults(1, 32, 8);
        let dist = ssd_pushthrough_distance(
            &state,
            &[CvGate::Fourier { mode: 0 }],
            8,
            &qcfg,
        )
        .unwrap();
        assert!(dist < 5e-6, "Fourier pushthrough distance {dist}");
        // Lattice-aligned shifts commute with the decomposition on any
        // state, so the distance is quadrature noise only.
        let l = lattice_spacing(8);
        let dist = ssd_pushthrough_distance(
            &state,
            &[CvGate::Displace { mode: 0, rq: l, rp: -l }],
            8,
            &qcfg,
        )
        .unwrap();
        assert!(dist < 5e-6, "lattice displacement pushthrough distance {dist}");
    }

    #[test]
    fn fractional_shift_floors_at_window_edge_amplitude() {
        // A non-lattice shift is exact only on window-supported states; on
        // the raw vacuum the distance sits at the edge amplitude, which
        // drops from ~2.5e-3 (d = 8) under the 5e-6 tolerance by d = 16.
        let state = CvState::vacuum(1, 48);
        let shift = [CvGate::DisplaceX { mode: 0, s: 0.4 }];
        let coarse = ssd_pushthrough_distance(
            &state,
            &shift,
            8,
            &QuadratureConfig::defaults(1, 48, 8),
        )
        .unwrap();
        assert!(
            (1e-4..1e-2).contains(&coarse),
            "expected edge-amplitude floor at d = 8, got {coarse}"
        );
        let fine = ssd_pushthrough_distance(
            &state,
            &shift,
            16,
            &QuadratureConfig::defaults(1, 48, 16),
        )
        .unwrap();
        assert!(fine < 5e-6, "fractional shift at d = 16: {fine}");
    }
}
