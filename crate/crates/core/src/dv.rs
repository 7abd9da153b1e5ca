//! Discrete backend: the qudit gate set, compilation of continuous-variable
//! circuits into it, and exact evolution of decomposed densities.
//!
//! Diagonal primitives phase the grid coordinate `l*{a}_d` (`l` the lattice
//! spacing) raised to the power of their continuous counterpart's generator;
//! `F_d` is the discrete Fourier transform `<a|F_d|b> = omega^{ab}/sqrt(d)`.
//! The shift is defined through the Fourier frame, `X_d(s) = F_d^dag Z_d(s)
//! F_d`, with the orientation fixed so that `X_d(l)` is the cyclic label
//! shift `|a> -> |a+1 mod d>`, matching how a one-step position displacement
//! moves decomposition labels.
//!
//! Compilation maps displacement, shear, cubic, and controlled-phase gates
//! one to one, and expands the remaining kinds through exact gate identities
//! (verified against dense Fock-space unitaries in the tests):
//!
//! * `R(t) = F P(s1) F P(cos t) F P(s1)` with `s1 = (1 + sin t)/cos t`,
//!   after reducing `t` by exact quarter turns `R(pi/2) = F`;
//! * `S(r) = F P(e^r) F P(e^-r) F P(e^r)`;
//! * `BS(pi/4) R_k(2t) BS(pi/4) = R_k(t) R_l(t + pi) T(t) R_l(pi)` up to a
//!   global phase, where `T(t) = CZ(s1) A CZ(s2) A CZ(s1) A`,
//!   `A = F_k^dag F_l`, `s1 = (1 - sin t)/cos t`, `s2 = -cos t`; this covers
//!   Mach-Zehnder gates, since one swap moves the reduced angle into
//!   `[0, pi/2)` where both controlled-phase strengths stay at most 1;
//! * beam splitters go through `BS(x) = F_k^dag T(pi/2 + x) F_l` after
//!   splitting off exact quarter turns, `BS(pi/2) = R_k(pi) SWAP`.
//!
//! Global phases of the continuous gates are not tracked: every downstream
//! consumer works at the density or distribution level.

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::circuit::{CvCircuit, CvGate};
use crate::fock::left_apply;
use crate::measure::{lattice_spacing, Model, OutcomeDistribution};
use crate::ssd::{centered_residue, label_flat_to_bin_flat, QuditDensity};
use crate::{linalg, C64, Error, Result};

use std::f64::consts::{FRAC_PI_2, PI};

/// One primitive gate on a register of `d`-level systems.
///
/// `ZPhase`, `Shear`, `Cubic`, and `ControlledZ` are diagonal in the label
/// basis; `Fourier`, `XShift`, and `Swap` are the only non-diagonal kinds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type")]
pub enum QuditGate {
    /// Discrete Fourier transform on one qudit.
    #[serde(rename = "Fd")]
    Fourier { qudit: usize },
    /// Momentum boost `Z_d(s) = diag(e^{i s l {a}_d})`.
    #[serde(rename = "Zd")]
    ZPhase { qudit: usize, s: f64 },
    /// Position shift `X_d(s) = F_d^dag Z_d(s) F_d`.
    #[serde(rename = "Xd")]
    XShift { qudit: usize, s: f64 },
    /// Quadratic phase `P_d(s) = diag(e^{i s (l {a}_d)^2 / 2})`.
    #[serde(rename = "Pd")]
    Shear { qudit: usize, s: f64 },
    /// Cubic phase `C_d(gamma) = diag(e^{i gamma (l {a}_d)^3})`.
    #[serde(rename = "Cd")]
    Cubic { qudit: usize, gamma: f64 },
    /// Controlled phase `CZ_d(s) = diag(e^{i s l^2 {a}_d {b}_d})`.
    #[serde(rename = "CZd")]
    ControlledZ { qudits: (usize, usize), s: f64 },
    /// Label swap of two qudits.
    #[serde(rename = "SWAPd")]
    Swap { qudits: (usize, usize) },
}

impl QuditGate {
    /// Serialization tag for this gate kind.
    pub fn kind(&self) -> &'static str {
        match self {
            QuditGate::Fourier { .. } => "Fd",
            QuditGate::ZPhase { .. } => "Zd",
            QuditGate::XShift { .. } => "Xd",
            QuditGate::Shear { .. } => "Pd",
            QuditGate::Cubic { .. } => "Cd",
            QuditGate::ControlledZ { .. } => "CZd",
            QuditGate::Swap { .. } => "SWAPd",
        }
    }

    /// Target qudits in declaration order.
    pub fn qudits(&self) -> Vec<usize> {
        match *self {
            QuditGate::Fourier { qudit }
            | QuditGate::ZPhase { qudit, .. }
            | QuditGate::XShift { qudit, .. }
            | QuditGate::Shear { qudit, .. }
            | QuditGate::Cubic { qudit, .. } => vec![qudit],
            QuditGate::ControlledZ { qudits, .. } | QuditGate::Swap { qudits } => {
                vec![qudits.0, qudits.1]
            }
        }
    }

    /// Whether the gate is diagonal in the label basis.
    pub fn is_diagonal(&self) -> bool {
        matches!(
            self,
            QuditGate::ZPhase { .. }
                | QuditGate::Shear { .. }
                | QuditGate::Cubic { .. }
                | QuditGate::ControlledZ { .. }
        )
    }
}

/// A compiled circuit on `n` qudits of dimension `d`.
///
/// `provenance[i]` is the index of the source gate that produced `gates[i]`;
/// compilation emits at least one qudit gate per source gate, in source
/// order, so the map is total and non-decreasing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuditCircuit {
    pub d: usize,
    pub n: usize,
    pub gates: Vec<QuditGate>,
    pub provenance: Vec<usize>,
}

impl QuditCircuit {
    /// Structural validity: targets in range and distinct, provenance
    /// parallel to the gate list, total over `source_gates` and
    /// non-decreasing.
    pub fn check(&self, source_gates: usize) -> Result<()> {
        if self.d < 2 {
            return Err(Error::InvalidArgument(format!(
                "qudit dimension must be at least 2, got {}",
                self.d
            )));
        }
        for g in &self.gates {
            let t = g.qudits();
            if t.iter().any(|&q| q >= self.n) {
                return Err(Error::InvalidCircuit(format!(
                    "{} targets qudit outside the register of {}",
                    g.kind(),
                    self.n
                )));
            }
            if t.len() == 2 && t[0] == t[1] {
                return Err(Error::InvalidCircuit(format!(
                    "{} targets the same qudit twice",
                    g.kind()
                )));
            }
        }
        if self.provenance.len() != self.gates.len() {
            return Err(Error::InvalidCircuit(
                "provenance map is not parallel to the gate list".into(),
            ));
        }
        let mut seen = vec![false; source_gates];
        let mut last = 0usize;
        for &src in &self.provenance {
            if src >= source_gates || src < last {
                return Err(Error::InvalidCircuit(
                    "provenance indices must be non-decreasing and in range".into(),
                ));
            }
            seen[src] = true;
            last = src;
        }
        if seen.iter().any(|&s| !s) {
            return Err(Error::InvalidCircuit(
                "every source gate must produce at least one qudit gate".into(),
            ));
        }
        Ok(())
    }
}

/// Grid coordinate `l*{a}_d` of label `a`.
pub(crate) fn grid_coordinate(a: usize, d: usize) -> f64 {
    lattice_spacing(d) * centered_residue(a as i64, d) as f64
}

fn fourier_matrix(d: usize) -> Array2<C64> {
    let norm = 1.0 / (d as f64).sqrt();
    Array2::from_shape_fn((d, d), |(a, b)| {
        // omega^{ab} at full precision: reduce the exponent mod d first.
        let e = (a * b) % d;
        C64::new(0.0, 2.0 * PI * e as f64 / d as f64).exp() * norm
    })
}

/// Diagonal phases of a single-qudit diagonal gate, as a length-`d` vector.
pub(crate) fn diagonal_phases(gate: &QuditGate, d: usize) -> Option<Vec<f64>> {
    let profile = |f: &dyn Fn(f64) -> f64| (0..d).map(|a| f(grid_coordinate(a, d))).collect();
    match *gate {
        QuditGate::ZPhase { s, .. } => Some(profile(&|x| s * x)),
        QuditGate::Shear { s, .. } => Some(profile(&|x| s * x * x / 2.0)),
        QuditGate::Cubic { gamma, .. } => Some(profile(&|x| gamma * x * x * x)),
        _ => None,
    }
}

/// Dense matrix of a primitive gate: `d x d` for single-qudit kinds,
/// `d^2 x d^2` (first listed qudit major) for two-qudit kinds.
pub fn build_gate(gate: &QuditGate, d: usize) -> Result<Array2<C64>> {
    if d < 2 {
        return Err(Error::InvalidArgument(format!(
            "qudit dimension must be at least 2, got {d}"
        )));
    }
    if let Some(phases) = diagonal_phases(gate, d) {
        return Ok(linalg::diag_unitary(&phases));
    }
    match *gate {
        QuditGate::Fourier { .. } => Ok(fourier_matrix(d)),
        QuditGate::XShift { s, .. } => {
            let f = fourier_matrix(d);
            let z = build_gate(&QuditGate::ZPhase { qudit: 0, s }, d)?;
            Ok(linalg::dagger(&f).dot(&z).dot(&f))
        }
        QuditGate::ControlledZ { s, .. } => {
            let mut phases = Vec::with_capacity(d * d);
            for a in 0..d {
                for b in 0..d {
                    phases.push(s * grid_coordinate(a, d) * grid_coordinate(b, d));
                }
            }
            Ok(linalg::diag_unitary(&phases))
        }
        QuditGate::Swap { .. } => {
            let mut m = Array2::<C64>::zeros((d * d, d * d));
            for a in 0..d {
                for b in 0..d {
                    m[[b * d + a, a * d + b]] = C64::new(1.0, 0.0);
                }
            }
            Ok(m)
        }
        _ => unreachable!("diagonal kinds are handled above"),
    }
}

/// Compiles a continuous-variable circuit to the qudit gate set at dimension
/// `d`. Every source gate expands to at least one qudit gate; global phases
/// are dropped.
pub fn compile(circuit: &CvCircuit, d: usize) -> Result<QuditCircuit> {
    circuit.check_structure()?;
    if d < 2 {
        return Err(Error::InvalidArgument(format!(
            "qudit dimension must be at least 2, got {d}"
        )));
    }
    let mut gates = Vec::new();
    let mut provenance = Vec::new();
    for (i, g) in circuit.gates.iter().enumerate() {
        let start = gates.len();
        emit_gate(g, &mut gates);
        if gates.len() == start {
            // identity-equivalent source gates still leave a marker so the
            // provenance map stays total.
            gates.push(QuditGate::Shear { qudit: g.modes()[0], s: 0.0 });
        }
        provenance.resize(gates.len(), i);
    }
    let compiled = QuditCircuit { d, n: circuit.modes, gates, provenance };
    compiled.check(circuit.gates.len())?;
    Ok(compiled)
}

fn emit_gate(gate: &CvGate, out: &mut Vec<QuditGate>) {
    match *gate {
        CvGate::Fourier { mode } => out.push(QuditGate::Fourier { qudit: mode }),
        CvGate::Shear { mode, s } => out.push(QuditGate::Shear { qudit: mode, s }),
        CvGate::Cubic { mode, gamma } => out.push(QuditGate::Cubic { qudit: mode, gamma }),
        CvGate::DisplaceX { mode, s } => out.push(QuditGate::XShift { qudit: mode, s }),
        CvGate::DisplaceZ { mode, s } => out.push(QuditGate::ZPhase { qudit: mode, s }),
        CvGate::Displace { mode, rq, rp } => {
            // D(rq, rp) = Z(rp) X(rq) up to a global phase.
            out.push(QuditGate::XShift { qudit: mode, s: rq });
            out.push(QuditGate::ZPhase { qudit: mode, s: rp });
        }
        CvGate::CZ { modes, s } => out.push(QuditGate::ControlledZ { qudits: modes, s }),
        CvGate::Rotation { mode, theta } => emit_rotation(mode, theta, out),
        CvGate::Squeeze { mode, r } => {
            let (outer, inner) = (r.exp(), (-r).exp());
            for g in shear_sandwich(mode, outer, inner, outer) {
                out.push(g);
            }
        }
        CvGate::BeamSplitter { modes, theta } => emit_beam_splitter(modes, theta, out),
        CvGate::MachZehnder { modes, theta, phi } => {
            emit_mach_zehnder(modes, theta, phi, out)
        }
    }
}

/// Application-order expansion of the operator product `F P(s3) F P(s2) F
/// P(s1)` (rightmost factor applied first).
fn shear_sandwich(mode: usize, s3: f64, s2: f64, s1: f64) -> [QuditGate; 6] {
    let f = QuditGate::Fourier { qudit: mode };
    [
        QuditGate::Shear { qudit: mode, s: s1 },
        f.clone(),
        QuditGate::Shear { qudit: mode, s: s2 },
        f.clone(),
        QuditGate::Shear { qudit: mode, s: s3 },
        f,
    ]
}

fn emit_rotation(mode: usize, theta: f64, out: &mut Vec<QuditGate>) {
    // Quarter turns are exact Fourier powers; the residue becomes the
    // three-shear sandwich. Rounding the quarter count up pins the residue
    // to (-pi/2, 0], where the outer strength (1 + sin t)/cos t lies in
    // (0, 1]; rounding to nearest would let it grow to 1 + sqrt(2). Full
    // turns reduce to a global phase.
    let quarter = (theta / FRAC_PI_2).ceil();
    let t = theta - quarter * FRAC_PI_2;
    let quarters = (quarter as i64).rem_euclid(4) as usize;
    for _ in 0..quarters {
        out.push(QuditGate::Fourier { qudit: mode });
    }
    if t != 0.0 {
        let s_outer = (1.0 + t.sin()) / t.cos();
        for g in shear_sandwich(mode, s_outer, t.cos(), s_outer) {
            out.push(g);
        }
    }
}

/// Application-order expansion of `T(t) = CZ(s1) A CZ(s2) A CZ(s1) A` on
/// modes `(k, l)`, `A = F_k^dag F_l`, `s1 = (1 - sin t)/cos t`,
/// `s2 = -cos t`. The shear strengths stay bounded for `t` away from
/// `+-pi/2`; both callers arrange that.
fn emit_cz_sandwich(k: usize, l: usize, t: f64, out: &mut Vec<QuditGate>) {
    let s1 = (1.0 - t.sin()) / t.cos();
    let s2 = -t.cos();
    let push_a = |out: &mut Vec<QuditGate>| {
        // F^dag = F^3 exactly.
        for _ in 0..3 {
            out.push(QuditGate::Fourier { qudit: k });
        }
        out.push(QuditGate::Fourier { qudit: l });
    };
    for &s in &[s1, s2, s1] {
        push_a(out);
        out.push(QuditGate::ControlledZ { qudits: (k, l), s });
    }
}

fn emit_beam_splitter(modes: (usize, usize), theta: f64, out: &mut Vec<QuditGate>) {
    let (k, l) = modes;
    // Reduce by the 2*pi period, then split off exact quarter turns, which
    // commute with the residue (same generator).
    let theta = theta - (theta / (2.0 * PI)).round() * 2.0 * PI;
    let quarter = (theta / FRAC_PI_2).round();
    let t = theta - quarter * FRAC_PI_2;
    match quarter as i64 {
        0 => {}
        1 => {
            // BS(pi/2) = R_k(pi) SWAP up to a global phase.
            out.push(QuditGate::Swap { qudits: (k, l) });
            out.push(QuditGate::Fourier { qudit: k });
            out.push(QuditGate::Fourier { qudit: k });
        }
        -1 => {
            out.push(QuditGate::Swap { qudits: (k, l) });
            out.push(QuditGate::Fourier { qudit: l });
            out.push(QuditGate::Fourier { qudit: l });
        }
        _ => {
            // BS(+-pi) is the two-mode parity.
            for q in [k, k, l, l] {
                out.push(QuditGate::Fourier { qudit: q });
            }
        }
    }
    if t != 0.0 {
        // BS(t) = F_k^dag T(pi/2 + t) F_l exactly; the sandwich angle stays
        // in (pi/4, 3pi/4), keeping both controlled-phase strengths below 1.
        out.push(QuditGate::Fourier { qudit: l });
        emit_cz_sandwich(k, l, FRAC_PI_2 + t, out);
        for _ in 0..3 {
            out.push(QuditGate::Fourier { qudit: k });
        }
    }
}

fn emit_mach_zehnder(modes: (usize, usize), theta: f64, phi: f64, out: &mut Vec<QuditGate>) {
    let (k, l) = modes;
    // MZ(theta, phi) = core(theta) R_k(phi) with
    // core(t) = BS(pi/4) R_k(2t) BS(pi/4). The internal rotation makes the
    // core pi-periodic in t up to a global phase, and a quarter turn costs
    // one swap, core(t) = core(t + pi/2) SWAP, which always lands the
    // residue in [0, pi/2) where the sandwich shears are well conditioned.
    let t0 = theta - (theta / PI).round() * PI;
    emit_rotation(k, phi, out);
    let t = if t0 < 0.0 {
        out.push(QuditGate::Swap { qudits: (k, l) });
        t0 + FRAC_PI_2
    } else {
        t0
    };
    // core(t) = R_k(t) R_l(t + pi) T(t) R_l(pi) up to a global phase,
    // rightmost factor applied first.
    out.push(QuditGate::Fourier { qudit: l });
    out.push(QuditGate::Fourier { qudit: l });
    emit_cz_sandwich(k, l, t, out);
    emit_rotation(k, t, out);
    emit_rotation(l, t + PI, out);
}

/// Evolves a decomposed density through a compiled circuit, `sigma -> U
/// sigma U^dag`. Diagonal gates multiply phase masks elementwise; `Fourier`
/// and `XShift` contract dense `d x d` blocks; `Swap` permutes labels.
pub fn apply(qd: &QuditDensity, qc: &QuditCircuit) -> Result<QuditDensity> {
    if qd.d != qc.d || qd.n != qc.n {
        return Err(Error::InvalidArgument(format!(
            "density is {} qudits of dimension {}, circuit wants {} of {}",
            qd.n, qd.d, qc.n, qc.d
        )));
    }
    for g in &qc.gates {
        if g.qudits().iter().any(|&q| q >= qc.n) {
            return Err(Error::InvalidCircuit(format!(
                "{} targets qudit outside the register of {}",
                g.kind(),
                qc.n
            )));
        }
    }
    let (d, n) = (qd.d, qd.n);
    let dim = qd.dim();
    let mut sigma = qd.sigma.clone();
    // Position of a qudit's digit in a flat index, mode 0 most significant.
    let digit = |flat: usize, q: usize| (flat / d.pow((n - 1 - q) as u32)) % d;
    for gate in &qc.gates {
        match *gate {
            QuditGate::ZPhase { qudit, .. }
            | QuditGate::Shear { qudit, .. }
            | QuditGate::Cubic { qudit, .. } => {
                let phases = diagonal_phases(gate, d).expect("diagonal kind");
                let mask: Array1<C64> = (0..dim)
                    .map(|f| C64::new(0.0, phases[digit(f, qudit)]).exp())
                    .collect();
                scale_rows_cols(&mut sigma, &mask);
            }
            QuditGate::ControlledZ { qudits: (a, b), s } => {
                let scale = lattice_spacing(d).powi(2) * s;
                let mask: Array1<C64> = (0..dim)
                    .map(|f| {
                        let (ra, rb) = (
                            centered_residue(digit(f, a) as i64, d),
                            centered_residue(digit(f, b) as i64, d),
                        );
                        C64::new(0.0, scale * (ra * rb) as f64).exp()
                    })
                    .collect();
                scale_rows_cols(&mut sigma, &mask);
            }
            QuditGate::Fourier { qudit } | QuditGate::XShift { qudit, .. } => {
                let u = build_gate(gate, d)?;
                sigma = conjugate(&sigma, &u, n, d, qudit);
            }
            QuditGate::Swap { qudits: (a, b) } => {
                let perm: Vec<usize> = (0..dim)
                    .map(|f| {
                        let (da, db) = (digit(f, a), digit(f, b));
                        let (wa, wb) =
                            (d.pow((n - 1 - a) as u32), d.pow((n - 1 - b) as u32));
                        f - da * wa - db * wb + db * wa + da * wb
                    })
                    .collect();
                let mut next = Array2::<C64>::zeros(sigma.raw_dim());
                for r in 0..dim {
                    for c in 0..dim {
                        next[[perm[r], perm[c]]] = sigma[[r, c]];
                    }
                }
                sigma = next;
            }
        }
    }
    Ok(QuditDensity { d, n, sigma })
}

/// `sigma[r, c] *= mask[r] * conj(mask[c])`.
fn scale_rows_cols(sigma: &mut Array2<C64>, mask: &Array1<C64>) {
    for ((r, c), v) in sigma.indexed_iter_mut() {
        *v *= mask[r] * mask[c].conj();
    }
}

/// `u sigma u^dag` with `u` acting on one qudit of the register.
fn conjugate(sigma: &Array2<C64>, u: &Array2<C64>, n: usize, d: usize, qudit: usize) -> Array2<C64> {
    let half = left_apply(sigma, u, n, d, &[qudit]);
    linalg::dagger(&left_apply(&linalg::dagger(&half), u, n, d, &[qudit]))
}

/// Readout of a decomposed density: `p(x = l {a}_d) = sigma_aa`, relabeled
/// to grid-bin order and renormalized against rounding.
pub fn pdf_dv(qd: &QuditDensity) -> Result<OutcomeDistribution> {
    let dim = qd.dim();
    let mut probs = vec![0.0; dim];
    for f in 0..dim {
        probs[label_flat_to_bin_flat(f, qd.d, qd.n)] = qd.sigma[[f, f]].re;
    }
    let total: f64 = probs.iter().sum();
    if total <= 0.0 {
        return Err(Error::DegenerateNormalization { mass: total });
    }
    for p in probs.iter_mut() {
        *p = (*p / total).max(0.0);
    }
    Ok(OutcomeDistribution {
        model: Model::Discrete,
        d: qd.d,
        modes: qd.n,
        probs,
        overflow: 0.0,
        survival: 1.0,
    })
}
