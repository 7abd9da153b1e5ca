//! Continuous-variable gate set, circuit representation, and the layered
//! circuit template.
//!
//! Quadrature convention: `q = (a + a^dag)/sqrt(2)`, `p = i(a^dag - a)/sqrt(2)`,
//! so `[q, p] = i` and the energy of a mode is `<n> + 1/2`.
//!
//! Circuits are plain JSON documents, either an explicit gate list
//!
//! ```json
//! {"modes": 1, "energy_budget": 4.0,
//!  "gates": [{"type": "R", "mode": 0, "theta": 0.5}]}
//! ```
//!
//! or a layered template (see [`TemplateSpec`]) under a `"template"` key.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// One elementary continuous-variable gate.
///
/// The serde tag strings (`F`, `R`, `P`, `C3`, `S`, `DX`, `DZ`, `D`, `CZ`,
/// `BS`, `MZ`) are the `"type"` values used in circuit documents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type")]
pub enum CvGate {
    /// Fourier transform `F = R(pi/2)`, the exact quarter-cycle rotation.
    #[serde(rename = "F")]
    Fourier { mode: usize },
    /// Phase-space rotation `R(theta) = e^{i theta (q^2 + p^2)/2}`.
    #[serde(rename = "R")]
    Rotation { mode: usize, theta: f64 },
    /// Shear (phase gate) `P(s) = e^{i s q^2 / 2}`.
    #[serde(rename = "P")]
    Shear { mode: usize, s: f64 },
    /// Cubic phase gate `C(gamma) = e^{i gamma q^3}`.
    #[serde(rename = "C3")]
    Cubic { mode: usize, gamma: f64 },
    /// Squeeze `S(r) = e^{-i r (qp + pq)/2}`; Heisenberg action
    /// `S^dag q S = e^r q`, `S^dag p S = e^{-r} p`.
    #[serde(rename = "S")]
    Squeeze { mode: usize, r: f64 },
    /// Position displacement `X(s) = e^{-i s p}`, shifting `<q>` by `s`.
    #[serde(rename = "DX")]
    DisplaceX { mode: usize, s: f64 },
    /// Momentum displacement `Z(s) = e^{i s q}`, shifting `<p>` by `s`.
    #[serde(rename = "DZ")]
    DisplaceZ { mode: usize, s: f64 },
    /// General displacement `D(r_q, r_p) = e^{i (r_p q - r_q p)}`, shifting
    /// `(<q>, <p>)` by `(r_q, r_p)`.
    #[serde(rename = "D")]
    Displace { mode: usize, rq: f64, rp: f64 },
    /// Controlled phase `CZ(s) = e^{i s q_k q_l}` on modes `(k, l)`.
    #[serde(rename = "CZ")]
    CZ { modes: (usize, usize), s: f64 },
    /// Beam splitter `BS(theta) = e^{i theta (p_k q_l - q_k p_l)}`; the
    /// balanced splitter is `BS(pi/4)`.
    #[serde(rename = "BS")]
    BeamSplitter { modes: (usize, usize), theta: f64 },
    /// Mach-Zehnder interferometer
    /// `MZ(theta, phi) = BS(pi/4) R_k(2 theta) BS(pi/4) R_k(phi)`
    /// (rightmost factor applied first, `k` the first mode).
    #[serde(rename = "MZ")]
    MachZehnder { modes: (usize, usize), theta: f64, phi: f64 },
}

impl CvGate {
    /// Document tag for this gate kind.
    pub fn kind(&self) -> &'static str {
        match self {
            CvGate::Fourier { .. } => "F",
            CvGate::Rotation { .. } => "R",
            CvGate::Shear { .. } => "P",
            CvGate::Cubic { .. } => "C3",
            CvGate::Squeeze { .. } => "S",
            CvGate::DisplaceX { .. } => "DX",
            CvGate::DisplaceZ { .. } => "DZ",
            CvGate::Displace { .. } => "D",
            CvGate::CZ { .. } => "CZ",
            CvGate::BeamSplitter { .. } => "BS",
            CvGate::MachZehnder { .. } => "MZ",
        }
    }

    /// Target modes in declaration order (one or two entries).
    pub fn modes(&self) -> Vec<usize> {
        match *self {
            CvGate::Fourier { mode }
            | CvGate::Rotation { mode, .. }
            | CvGate::Shear { mode, .. }
            | CvGate::Cubic { mode, .. }
            | CvGate::Squeeze { mode, .. }
            | CvGate::DisplaceX { mode, .. }
            | CvGate::DisplaceZ { mode, .. }
            | CvGate::Displace { mode, .. } => vec![mode],
            CvGate::CZ { modes, .. }
            | CvGate::BeamSplitter { modes, .. }
            | CvGate::MachZehnder { modes, .. } => vec![modes.0, modes.1],
        }
    }

    /// Real parameters of the gate, if any.
    pub fn params(&self) -> Vec<f64> {
        match *self {
            CvGate::Fourier { .. } => vec![],
            CvGate::Rotation { theta, .. } => vec![theta],
            CvGate::Shear { s, .. } => vec![s],
            CvGate::Cubic { gamma, .. } => vec![gamma],
            CvGate::Squeeze { r, .. } => vec![r],
            CvGate::DisplaceX { s, .. } | CvGate::DisplaceZ { s, .. } => vec![s],
            CvGate::Displace { rq, rp, .. } => vec![rq, rp],
            CvGate::CZ { s, .. } => vec![s],
            CvGate::BeamSplitter { theta, .. } => vec![theta],
            CvGate::MachZehnder { theta, phi, .. } => vec![theta, phi],
        }
    }

    /// Whether the gate is passive (commutes with the total number operator
    /// and therefore never changes the energy).
    pub fn is_passive(&self) -> bool {
        matches!(
            self,
            CvGate::Fourier { .. }
                | CvGate::Rotation { .. }
                | CvGate::BeamSplitter { .. }
                | CvGate::MachZehnder { .. }
        )
    }
}

/// An ordered continuous-variable circuit on `modes` modes with a declared
/// input energy budget `E*` (mean energy per mode of any admissible input).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvCircuit {
    pub modes: usize,
    pub energy_budget: f64,
    pub gates: Vec<CvGate>,
}

impl CvCircuit {
    /// Parses a circuit document, expanding a template form if present, and
    /// checks the structural invariants.
    pub fn from_json(text: &str) -> Result<CvCircuit> {
        let doc: CircuitDoc = serde_json::from_str(text)?;
        let circuit = match (doc.gates, doc.template) {
            (Some(_), Some(_)) => {
                return Err(Error::InvalidCircuit(
                    "document has both \"gates\" and \"template\"".into(),
                ));
            }
            (None, None) => {
                return Err(Error::InvalidCircuit(
                    "document has neither \"gates\" nor \"template\"".into(),
                ));
            }
            (Some(gates), None) => CvCircuit { modes: doc.modes, energy_budget: doc.energy_budget, gates },
            (None, Some(template)) => template.expand(doc.modes, doc.energy_budget)?,
        };
        circuit.check_structure()?;
        Ok(circuit)
    }

    /// Serializes to the explicit gate-list document form. Round-trips
    /// losslessly through [`CvCircuit::from_json`].
    pub fn to_json(&self) -> String {
        let doc = CircuitDoc {
            modes: self.modes,
            energy_budget: self.energy_budget,
            gates: Some(self.gates.clone()),
            template: None,
        };
        serde_json::to_string_pretty(&doc).expect("circuit serializes")
    }

    /// Structural invariants: positive mode count, energy budget at least
    /// the vacuum energy, in-range and distinct mode indices, finite
    /// parameters.
    pub fn check_structure(&self) -> Result<()> {
        if self.modes == 0 {
            return Err(Error::InvalidCircuit("mode count must be at least 1".into()));
        }
        if !(self.energy_budget >= 0.5) {
            return Err(Error::InvalidCircuit(format!(
                "energy budget {} below vacuum energy 1/2",
                self.energy_budget
            )));
        }
        for (i, gate) in self.gates.iter().enumerate() {
            let modes = gate.modes();
            if modes.len() == 2 && modes[0] == modes[1] {
                return Err(Error::InvalidCircuit(format!(
                    "gate {} ({}): modes must be distinct",
                    i,
                    gate.kind()
                )));
            }
            for &m in &modes {
                if m >= self.modes {
                    return Err(Error::InvalidCircuit(format!(
                        "gate {} ({}): mode {} out of range for {} modes",
                        i,
                        gate.kind(),
                        m,
                        self.modes
                    )));
                }
            }
            for p in gate.params() {
                if !p.is_finite() {
                    return Err(Error::InvalidCircuit(format!(
                        "gate {} ({}): non-finite parameter",
                        i,
                        gate.kind()
                    )));
                }
            }
        }
        Ok(())
    }

    /// Checks every gate parameter against its cap at the declared energy
    /// budget: `e^{|r|} <= sqrt(2 E*)` for squeezing and
    /// `|gamma| <= 8 E*^{3/2}` for the cubic gate. Other gates carry no
    /// static cap. Report-only; an empty violation list means the circuit
    /// passes.
    pub fn validate_parameters(&self) -> ValidationReport {
        let estar = self.energy_budget;
        let mut violations = Vec::new();
        for (i, gate) in self.gates.iter().enumerate() {
            let (value, cap) = match *gate {
                CvGate::Squeeze { r, .. } => {
                    (r.abs().exp(), crate::budget::max_squeeze_amplitude(estar))
                }
                CvGate::Cubic { gamma, .. } => (gamma.abs(), crate::budget::max_cubicity(estar)),
                _ => continue,
            };
            if value > cap {
                violations.push(CapViolation {
                    gate_index: i,
                    kind: gate.kind(),
                    value,
                    cap,
                });
            }
        }
        ValidationReport { energy_budget: estar, violations }
    }

    /// Per-kind gate tally.
    pub fn count_elementary(&self) -> GateCount {
        let mut per_kind = BTreeMap::new();
        for gate in &self.gates {
            *per_kind.entry(gate.kind().to_string()).or_insert(0) += 1;
        }
        GateCount {
            total: self.gates.len(),
            cubic: per_kind.get("C3").copied().unwrap_or(0),
            per_kind,
        }
    }
}

/// Result of static parameter validation.
#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub energy_budget: f64,
    pub violations: Vec<CapViolation>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// One over-cap gate parameter (`value` and `cap` are on the scale the cap
/// is stated on, e.g. `e^{|r|}` for squeezing).
#[derive(Debug, Clone, Serialize)]
pub struct CapViolation {
    pub gate_index: usize,
    pub kind: &'static str,
    pub value: f64,
    pub cap: f64,
}

/// Gate tally of a circuit.
#[derive(Debug, Clone, Serialize)]
pub struct GateCount {
    /// Total elementary gates `L`.
    pub total: usize,
    /// Cubic gate count `K`.
    pub cubic: usize,
    /// Counts keyed by serialization tag.
    pub per_kind: BTreeMap<String, usize>,
}

impl GateCount {
    /// Template circuits on `n` modes satisfy `L <= 10 K n^2`.
    pub fn within_template_budget(&self, n: usize) -> bool {
        self.total <= 10 * self.cubic * n * n
    }
}

/// One passive block of the layered template: a Clements mesh of
/// Mach-Zehnder gates on neighboring modes, then a rotation on every mode,
/// then a displacement on every mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PassiveRound {
    /// `(theta, phi)` per Mach-Zehnder, `n(n-1)/2` entries in mesh order.
    pub mz: Vec<(f64, f64)>,
    /// Rotation angle per mode, `n` entries.
    pub rotations: Vec<f64>,
    /// `(r_q, r_p)` displacement per mode, `n` entries.
    pub displacements: Vec<(f64, f64)>,
}

/// The layered circuit template: `K + 2` passive blocks interleaved with
/// `K` cubic gates on mode 0 and one squeezing layer,
///
/// ```text
/// V_1, C(gamma_1), V_2, ..., C(gamma_K), V_{K+1}, S(s_0)...S(s_{n-1}), V_{K+2}
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemplateSpec {
    #[serde(rename = "K")]
    pub k: usize,
    /// The `K + 2` passive blocks in application order.
    pub rounds: Vec<PassiveRound>,
    /// Cubicities `gamma_1 .. gamma_K`.
    pub gammas: Vec<f64>,
    /// Squeezing amount per mode, `n` entries.
    pub squeeze: Vec<f64>,
}

impl TemplateSpec {
    /// Expands to the elementary gate sequence on `n` modes.
    pub fn expand(&self, n: usize, energy_budget: f64) -> Result<CvCircuit> {
        let mz_per_round = n * (n - 1) / 2;
        if self.rounds.len() != self.k + 2 {
            return Err(Error::InvalidCircuit(format!(
                "template needs {} rounds, got {}",
                self.k + 2,
                self.rounds.len()
            )));
        }
        if self.gammas.len() != self.k {
            return Err(Error::InvalidCircuit(format!(
                "template needs {} cubicities, got {}",
                self.k,
                self.gammas.len()
            )));
        }
        if self.squeeze.len() != n {
            return Err(Error::InvalidCircuit(format!(
                "template needs {} squeezing amounts, got {}",
                n,
                self.squeeze.len()
            )));
        }
        let pairs = clements_pairs(n);
        let mut gates = Vec::new();
        let push_round = |gates: &mut Vec<CvGate>, round: &PassiveRound| -> Result<()> {
            if round.mz.len() != mz_per_round
                || round.rotations.len() != n
                || round.displacements.len() != n
            {
                return Err(Error::InvalidCircuit(format!(
                    "passive block needs {} MZ, {} rotations, {} displacements; \
                     got {}, {}, {}",
                    mz_per_round,
                    n,
                    n,
                    round.mz.len(),
                    round.rotations.len(),
                    round.displacements.len()
                )));
            }
            for (&(theta, phi), &modes) in round.mz.iter().zip(&pairs) {
                gates.push(CvGate::MachZehnder { modes, theta, phi });
            }
            for (mode, &theta) in round.rotations.iter().enumerate() {
                gates.push(CvGate::Rotation { mode, theta });
            }
            for (mode, &(rq, rp)) in round.displacements.iter().enumerate() {
                gates.push(CvGate::Displace { mode, rq, rp });
            }
            Ok(())
        };
        for j in 0..=self.k {
            push_round(&mut gates, &self.rounds[j])?;
            if j < self.k {
                gates.push(CvGate::Cubic { mode: 0, gamma: self.gammas[j] });
            }
        }
        for (mode, &r) in self.squeeze.iter().enumerate() {
            gates.push(CvGate::Squeeze { mode, r });
        }
        push_round(&mut gates, &self.rounds[self.k + 1])?;
        let circuit = CvCircuit { modes: n, energy_budget, gates };
        circuit.check_structure()?;
        Ok(circuit)
    }
}

/// Neighboring mode pairs of the Clements mesh on `n` modes: `n` alternating
/// layers of `(even, even+1)` and `(odd, odd+1)` couplings, `n(n-1)/2` pairs
/// in total.
pub fn clements_pairs(n: usize) -> Vec<(usize, usize)> {
    let mut pairs = Vec::with_capacity(n * (n - 1) / 2);
    for layer in 0..n {
        let mut k = layer % 2;
        while k + 1 < n {
            pairs.push((k, k + 1));
            k += 2;
        }
    }
    pairs
}

#[derive(Serialize, Deserialize)]
struct CircuitDoc {
    modes: usize,
    energy_budget: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    gates: Option<Vec<CvGate>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    template: Option<TemplateSpec>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_single_fourier_gate() {
        let c = CvCircuit::from_json(
            r#"{"modes": 1, "energy_budget": 1.0,
                "gates": [{"type": "F", "mode": 0}]}"#,
        )
        .unwrap();
        assert_eq!(c.modes, 1);
        assert_eq!(c.gates, vec![CvGate::Fourier { mode: 0 }]);
    }

    #[test]
    fn parse_rejects_coincident_cz_modes() {
        let err = CvCircuit::from_json(
            r#"{"modes": 2, "energy_budget": 1.0,
                "gates": [{"type": "CZ", "modes": [0, 0], "s": 1.0}]}"#,
        )
        .unwrap_err();
        assert!(err.to_string().contains("distinct"), "{err}");
    }

    #[test]
    fn parse_rejects_out_of_range_mode() {
        let err = CvCircuit::from_json(
            r#"{"modes": 1, "energy_budget": 1.0,
                "gates": [{"type": "R", "mode": 1, "theta": 0.1}]}"#,
        )
        .unwrap_err();
        assert!(err.to_string().contains("out of range"), "{err}");
    }

    #[test]
    fn parse_rejects_unknown_gate_kind() {
        let err = CvCircuit::from_json(
            r#"{"modes": 1, "energy_budget": 1.0,
                "gates": [{"type": "Q", "mode": 0}]}"#,
        )
        .unwrap_err();
        assert!(matches!(err, Error::Json(_)), "{err}");
    }

    #[test]
    fn parse_rejects_sub_vacuum_energy_budget() {
        let err = CvCircuit::from_json(r#"{"modes": 1, "energy_budget": 0.3, "gates": []}"#)
            .unwrap_err();
        assert!(err.to_string().contains("vacuum"), "{err}");
    }

    fn template_doc(k: usize, n: usize) -> String {
        let mz_count = n * (n - 1) / 2;
        let round = PassiveRound {
            mz: (0..mz_count).map(|i| (0.1 * i as f64, 0.2)).collect(),
            rotations: vec![0.3; n],
            displacements: vec![(0.5, -0.5); n],
        };
        let spec = TemplateSpec {
            k,
            rounds: vec![round; k + 2],
            gammas: vec![0.05; k],
            squeeze: vec![0.1; n],
        };
        format!(
            r#"{{"modes": {}, "energy_budget": 6.0, "template": {}}}"#,
            n,
            serde_json::to_string(&spec).unwrap()
        )
    }

    #[test]
    fn template_k1_n2_expands_to_three_passive_blocks() {
        let c = CvCircuit::from_json(&template_doc(1, 2)).unwrap();
        let count = c.count_elementary();
        assert_eq!(count.cubic, 1);
        assert_eq!(count.per_kind["MZ"], 3);
        assert_eq!(count.per_kind["R"], 6);
        assert_eq!(count.per_kind["D"], 6);
        assert_eq!(count.per_kind["S"], 2);
    }

    #[test]
    fn template_k1_n1_gate_order() {
        let c = CvCircuit::from_json(&template_doc(1, 1)).unwrap();
        let kinds: Vec<&str> = c.gates.iter().map(|g| g.kind()).collect();
        assert_eq!(kinds, ["R", "D", "C3", "R", "D", "S", "R", "D"]);
    }

    #[test]
    fn template_k2_n3_total_count() {
        let c = CvCircuit::from_json(&template_doc(2, 3)).unwrap();
        let count = c.count_elementary();
        assert_eq!(count.total, 41);
        assert!(count.within_template_budget(3), "41 <= 10*2*9");
    }

    #[test]
    fn template_dimension_mismatch_is_rejected() {
        let spec = TemplateSpec {
            k: 1,
            rounds: vec![
                PassiveRound { mz: vec![], rotations: vec![0.0], displacements: vec![(0.0, 0.0)] };
                2 // needs 3
            ],
            gammas: vec![0.1],
            squeeze: vec![0.0],
        };
        assert!(spec.expand(1, 2.0).is_err());
    }

    #[test]
    fn clements_mesh_covers_all_neighbor_pairs() {
        assert_eq!(clements_pairs(1), vec![]);
        assert_eq!(clements_pairs(2), vec![(0, 1)]);
        assert_eq!(clements_pairs(3), vec![(0, 1), (1, 2), (0, 1)]);
        assert_eq!(clements_pairs(4).len(), 6);
    }

    #[test]
    fn validation_caps_squeeze_and_cubic_only() {
        let c = CvCircuit {
            modes: 1,
            energy_budget: 2.0,
            gates: vec![
                CvGate::Squeeze { mode: 0, r: 0.3 },
                CvGate::Rotation { mode: 0, theta: std::f64::consts::PI / 3.0 },
            ],
        };
        assert!(c.validate_parameters().passed());

        let c = CvCircuit {
            modes: 1,
            energy_budget: 1.0,
            gates: vec![CvGate::Cubic { mode: 0, gamma: 9.0 }],
        };
        let report = c.validate_parameters();
        assert!(!report.passed());
        assert_eq!(report.violations[0].kind, "C3");
        assert_eq!(report.violations[0].cap, 8.0);
    }

    #[test]
    fn squeeze_cap_is_two_sided() {
        let c = CvCircuit {
            modes: 1,
            energy_budget: 0.5,
            // anti-squeezing by the same amount is just as energy-hungry
            gates: vec![CvGate::Squeeze { mode: 0, r: -0.7 }],
        };
        assert!(!c.validate_parameters().passed());
    }

    #[test]
    fn empty_and_passive_circuits_count_correctly() {
        let empty = CvCircuit { modes: 1, energy_budget: 0.5, gates: vec![] };
        assert_eq!(empty.count_elementary().total, 0);

        let fives = CvCircuit {
            modes: 1,
            energy_budget: 0.5,
            gates: vec![CvGate::Fourier { mode: 0 }; 5],
        };
        let count = fives.count_elementary();
        assert_eq!(count.total, 5);
        assert_eq!(count.cubic, 0);
    }

    #[test]
    fn json_round_trip_preserves_every_gate_kind() {
        let c = CvCircuit {
            modes: 3,
            energy_budget: 7.25,
            gates: vec![
                CvGate::Fourier { mode: 0 },
                CvGate::Rotation { mode: 1, theta: -0.25 },
                CvGate::Shear { mode: 2, s: 1.5 },
                CvGate::Cubic { mode: 0, gamma: 0.031 },
                CvGate::Squeeze { mode: 1, r: -0.4 },
                CvGate::DisplaceX { mode: 2, s: 1.125 },
                CvGate::DisplaceZ { mode: 0, s: -2.5 },
                CvGate::Displace { mode: 1, rq: 0.1, rp: -0.2 },
                CvGate::CZ { modes: (0, 2), s: 0.75 },
                CvGate::BeamSplitter { modes: (1, 2), theta: 0.7853981633974483 },
                CvGate::MachZehnder { modes: (0, 1), theta: 0.3, phi: -1.1 },
            ],
        };
        let round = CvCircuit::from_json(&c.to_json()).unwrap();
        assert_eq!(round, c);
    }
}
