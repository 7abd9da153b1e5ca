//! Subsystem decomposition: the torus-averaged partial trace that carries a
//! truncated-Fock CV state to a `d^n`-dimensional qudit state.
//!
//! Per mode, the map pairs ideal position-comb bras and kets (peaks at
//! `l*a mod l*d`, never normalized: only their matrix elements against a
//! finite-energy state are ever formed) with an average over displacements
//! `t = (t_q, t_p)` ranging over the torus cell `(-l/2, l/2]^2`. Both torus
//! axes are discretized with the same `M`-node midpoint rule. The phase axis
//! is then summed in closed form (a Dirichlet kernel), so the cost stays
//! linear in `M` while remaining exactly the midpoint discretization; the
//! position axis is an explicit node sum against the Hermite expansion of
//! the state.
//!
//! The resulting map is a family of real operators `E_ab` per mode with
//! `sigma_ab = tr(rho E_ab)`; tensor products of the family give the
//! multi-mode decomposition because the torus cells and combs of different
//! modes are independent.

use std::f64::consts::PI;

use ndarray::{Array2, IxDyn};
use ndarray_linalg::{Eigh, UPLO};
use serde::Serialize;

use crate::fock::CvState;
use crate::hermite;
use crate::measure::{lattice_spacing, position_support};
use crate::{linalg, Error, Result, C64};

/// Max-norm refinement threshold above which the decomposition is reported
/// as not converged.
const CONV_TOL: f64 = 1e-5;

/// Discretization of the torus average.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct QuadratureConfig {
    /// Midpoint nodes per torus axis (odd, at least 11).
    pub nodes: usize,
    /// Comb truncation radius in units of `l*d`.
    pub comb_radius: usize,
    /// Position radius beyond which the truncated basis carries negligible
    /// (< 1e-14) mass; comb peaks outside it are dropped.
    pub q_support: f64,
}

impl QuadratureConfig {
    /// Defaults sized for the given problem: enough comb shifts to cover the
    /// basis support, and a node count that keeps the refinement delta well
    /// under the convergence threshold (the phase axis is summed in closed
    /// form, so cost is linear in `nodes` and single-mode runs afford a much
    /// finer rule).
    pub fn defaults(modes: usize, cutoff: usize, d: usize) -> QuadratureConfig {
        let q_support = position_support(cutoff);
        let nodes = if modes == 1 { 1023 } else { 301 };
        let comb_radius = (q_support / (d as f64 * lattice_spacing(d))).floor() as usize + 1;
        QuadratureConfig { nodes, comb_radius, q_support }
    }

    pub fn validate(&self, d: usize) -> Result<()> {
        if self.nodes % 2 == 0 || self.nodes < 11 {
            return Err(Error::InvalidArgument(format!(
                "quadrature nodes must be odd and at least 11, got {}",
                self.nodes
            )));
        }
        if (d * self.comb_radius) as f64 * lattice_spacing(d) <= self.q_support {
            return Err(Error::InvalidArgument(format!(
                "comb radius {} leaves support {:.2} uncovered at d = {d}",
                self.comb_radius, self.q_support
            )));
        }
        Ok(())
    }

    /// The next refinement level (`M -> 2M + 1` keeps the count odd).
    pub fn refined(&self) -> QuadratureConfig {
        QuadratureConfig { nodes: 2 * self.nodes + 1, ..*self }
    }
}

/// A `d^n x d^n` qudit density matrix produced by the decomposition.
#[derive(Debug, Clone)]
pub struct QuditDensity {
    pub d: usize,
    pub n: usize,
    pub sigma: Array2<C64>,
}

impl QuditDensity {
    pub fn dim(&self) -> usize {
        self.d.pow(self.n as u32)
    }

    pub fn trace(&self) -> C64 {
        linalg::trace(&self.sigma)
    }

    pub fn hermiticity_residual(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.sigma.nrows() {
            for j in 0..self.sigma.ncols() {
                worst = worst.max((self.sigma[[i, j]] - self.sigma[[j, i]].conj()).norm());
            }
        }
        worst
    }
}

/// Numerical health of one decomposition run.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SsdDiagnostics {
    /// `|1 - tr sigma|`.
    pub trace_deficit: f64,
    /// Max-norm distance from the Hermitian part.
    pub hermiticity_residual: f64,
    /// Most negative eigenvalue of the Hermitian part (0 if none).
    pub min_eigenvalue: f64,
    /// Max-norm change of sigma under node doubling.
    pub refinement_delta: f64,
}

/// Centered residue `{a}_d` in `[-floor(d/2), ceil(d/2))`.
pub fn centered_residue(a: i64, d: usize) -> i64 {
    let d = d as i64;
    (a + d / 2).rem_euclid(d) - d / 2
}

/// Measurement-grid bin index of qudit label `a`: the label sits at position
/// `l*{a}_d`, which is bin `(a + floor(d/2)) mod d`.
pub fn label_to_bin(a: usize, d: usize) -> usize {
    (a + d / 2) % d
}

/// Relabels a flat qudit outcome (base-`d` digits, mode 0 most significant)
/// to the flat measurement-grid index used by outcome distributions.
pub fn label_flat_to_bin_flat(flat: usize, d: usize, n: usize) -> usize {
    let mut rest = flat;
    let mut digits = vec![0usize; n];
    for slot in digits.iter_mut().rev() {
        *slot = rest % d;
        rest /= d;
    }
    digits.into_iter().fold(0, |acc, a| acc * d + label_to_bin(a, d))
}

/// Maps a CV state to its qudit density matrix, refining the quadrature once
/// to bound the discretization error.
pub fn ssd(
    state: &CvState,
    d: usize,
    cfg: &QuadratureConfig,
) -> Result<(QuditDensity, SsdDiagnostics)> {
    check_inputs(state, d, cfg)?;
    let base = sigma_matrix(state, d, cfg)?;
    let refined = sigma_matrix(state, d, &cfg.refined())?;
    let delta = max_abs_diff(&base, &refined);
    if delta > CONV_TOL {
        return Err(Error::QuadratureNotConverged { delta, tol: CONV_TOL });
    }
    let qd = QuditDensity { d, n: state.modes, sigma: refined };
    let herm = qd.hermiticity_residual();
    let trace_deficit = (qd.trace() - C64::new(1.0, 0.0)).norm();
    let hpart = linalg::hermitize(&qd.sigma);
    let (eigs, _) = hpart.eigh(UPLO::Lower)?;
    let min_eigenvalue = eigs.iter().cloned().fold(0.0f64, f64::min);
    let diag = SsdDiagnostics {
        trace_deficit,
        hermiticity_residual: herm,
        min_eigenvalue,
        refinement_delta: delta,
    };
    Ok((qd, diag))
}

/// The diagonal of the decomposition: outcome probabilities over `Z_d^n`,
/// computed with the comb-diagonal operators only (the off-diagonal comb
/// shifts carry an exactly vanishing Dirichlet weight on the diagonal).
pub fn ssd_diagonal(state: &CvState, d: usize, cfg: &QuadratureConfig) -> Result<Vec<f64>> {
    check_inputs(state, d, cfg)?;
    let base = diagonal_probs(state, d, cfg)?;
    let refined = diagonal_probs(state, d, &cfg.refined())?;
    let delta = base
        .iter()
        .zip(&refined)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0f64, f64::max);
    if delta > CONV_TOL {
        return Err(Error::QuadratureNotConverged { delta, tol: CONV_TOL });
    }
    Ok(refined)
}

/// Hermitizes, clips negative eigenvalues, and restores unit trace,
/// returning the cleaned matrix and the clipped mass.
pub fn sanitize(qd: &QuditDensity) -> Result<(QuditDensity, f64)> {
    let herm = qd.hermiticity_residual();
    if herm > 1e-6 {
        return Err(Error::InvalidArgument(format!(
            "hermiticity residual {herm:.3e} too large to sanitize"
        )));
    }
    let hpart = linalg::hermitize(&qd.sigma);
    let (eigs, vecs) = hpart.eigh(UPLO::Lower)?;
    // eigh on a row-major buffer diagonalizes the transpose; conjugating the
    // vectors recovers hpart = W diag(eigs) W^dag.
    let w = vecs.mapv(|z| z.conj());
    let clipped: f64 = eigs.iter().map(|&e| (-e).max(0.0)).sum();
    if clipped > 1e-4 {
        return Err(Error::CorrectionTooLarge { mass: clipped });
    }
    let mut scaled = w.clone();
    for (j, mut col) in scaled.columns_mut().into_iter().enumerate() {
        let e = C64::new(eigs[j].max(0.0), 0.0);
        col.mapv_inplace(|z| z * e);
    }
    let mut sigma = scaled.dot(&linalg::dagger(&w));
    let tr = linalg::trace(&sigma).re;
    if tr < 1e-12 {
        return Err(Error::DegenerateNormalization { mass: tr });
    }
    sigma.mapv_inplace(|z| z / tr);
    Ok((QuditDensity { d: qd.d, n: qd.n, sigma }, clipped))
}

fn check_inputs(state: &CvState, d: usize, cfg: &QuadratureConfig) -> Result<()> {
    if d < 2 {
        return Err(Error::InvalidArgument(format!(
            "qudit dimension {d} too small, need d >= 2"
        )));
    }
    if state.modes > 2 {
        return Err(Error::ResourceLimit(format!(
            "decomposition supports at most 2 modes, got {}",
            state.modes
        )));
    }
    cfg.validate(d)
}

/// Closed-form midpoint sum over the phase axis: the `M`-node midpoint rule
/// applied to `e^{i t l k}` over `(-l/2, l/2]`, divided by the cell length.
/// Evaluates to 1 at `k = 0`, to exactly 0 at nonzero multiples of `d`
/// below the aliasing scale, and to a Dirichlet-kernel value in between.
fn phase_weight(k: i64, d: usize, m_nodes: usize) -> f64 {
    if k == 0 {
        return 1.0;
    }
    let alias = (d * m_nodes) as i64;
    if k % alias == 0 {
        // With an odd node count the aliased limit is +1.
        return 1.0;
    }
    let kk = k as f64;
    let num = (PI * kk / d as f64).sin();
    let den = (PI * kk / alias as f64).sin();
    num / (m_nodes as f64 * den)
}

/// Comb positions of one label: for each admissible shift `m`, the block of
/// `M` midpoint-displaced peak positions `l*{a}_d + l*d*m - t_j`.
struct LabelComb {
    /// Admissible comb shifts.
    shifts: Vec<i64>,
    /// `psi` table, `cutoff x (shifts * M)` with the node index fastest.
    table: Array2<f64>,
}

fn label_comb(
    a: usize,
    d: usize,
    cutoff: usize,
    cfg: &QuadratureConfig,
    nodes: &[f64],
) -> LabelComb {
    let l = lattice_spacing(d);
    let period = d as f64 * l;
    let base = l * centered_residue(a as i64, d) as f64;
    let radius = cfg.comb_radius as i64;
    let mut shifts = Vec::new();
    for m in -radius..=radius {
        let peak = base + period * m as f64;
        if peak.abs() <= cfg.q_support + l {
            shifts.push(m);
        }
    }
    let m_nodes = nodes.len();
    let mut positions = Vec::with_capacity(shifts.len() * m_nodes);
    for &m in &shifts {
        let peak = base + period * m as f64;
        for &t in nodes {
            positions.push(peak - t);
        }
    }
    let mut table = Array2::zeros((cutoff, positions.len()));
    for (col, &x) in positions.iter().enumerate() {
        let psi = hermite::oscillator_eigenfunctions(cutoff, x);
        for (row, v) in psi.into_iter().enumerate() {
            table[[row, col]] = v;
        }
    }
    LabelComb { shifts, table }
}

/// The per-mode operator family `E_ab` (row-major over `a*d + b`), so that
/// `sigma_ab = tr(rho E_ab)` for a single mode.
fn mode_family(cutoff: usize, d: usize, cfg: &QuadratureConfig) -> Vec<Array2<f64>> {
    let l = lattice_spacing(d);
    let m_nodes = cfg.nodes;
    let (nodes, h) = hermite::midpoint_nodes(-l / 2.0, l / 2.0, m_nodes);
    let combs: Vec<LabelComb> = (0..d)
        .map(|a| label_comb(a, d, cutoff, cfg, &nodes))
        .collect();

    let mut family: Vec<Option<Array2<f64>>> = (0..d * d).map(|_| None).collect();
    for a in 0..d {
        for b in a..d {
            let delta_int =
                centered_residue(a as i64, d) - centered_residue(b as i64, d);
            let ca = &combs[a];
            let cb = &combs[b];
            // Weighted copy of the `a` table: column block `m` becomes
            // sum_m' w_{delta + d(m - m')} times block `m'` evaluated at the
            // same node, folding the comb coupling before the single GEMM.
            let cols_a = ca.table.ncols();
            let mut weighted = Array2::<f64>::zeros((cutoff, cols_a));
            for (ia, &ma) in ca.shifts.iter().enumerate() {
                for (ib, &mb) in cb.shifts.iter().enumerate() {
                    let w = phase_weight(delta_int + d as i64 * (ma - mb), d, m_nodes);
                    if w == 0.0 {
                        continue;
                    }
                    for t in 0..m_nodes {
                        let src = ib * m_nodes + t;
                        let dst = ia * m_nodes + t;
                        for row in 0..cutoff {
                            weighted[[row, dst]] += w * cb.table[[row, src]];
                        }
                    }
                }
            }
            // E_ab = h * sum_{m,t} |weighted_b column> <a column|.
            let mut e = weighted.dot(&ca.table.t());
            e.mapv_inplace(|v| v * h);
            family[b * d + a] = Some(e.t().as_standard_layout().into_owned());
            family[a * d + b] = Some(e);
        }
    }
    family.into_iter().map(|x| x.expect("family complete")).collect()
}

fn sigma_matrix(state: &CvState, d: usize, cfg: &QuadratureConfig) -> Result<Array2<C64>> {
    let nf = state.cutoff;
    let family = mode_family(nf, d, cfg);
    match state.modes {
        1 => {
            let mut sigma = Array2::<C64>::zeros((d, d));
            for a in 0..d {
                for b in 0..d {
                    sigma[[a, b]] = trace_prod_real(&family[a * d + b], &state.rho);
                }
            }
            Ok(sigma)
        }
        2 => {
            // G[p, q] = tr((E_p (x) E_q) rho) via the regrouped density
            // matrix, then reindex pairs (p, q) = ((a1, b1), (a2, b2)) into
            // sigma rows (a1, a2) and columns (b1, b2).
            let rho = state.rho.as_standard_layout();
            let tensor = rho
                .view()
                .into_shape(IxDyn(&[nf, nf, nf, nf]))
                .expect("density matrix shape");
            let regrouped = tensor.permuted_axes(IxDyn(&[0, 2, 1, 3]));
            let regrouped = regrouped.as_standard_layout().into_owned();
            let r = regrouped
                .into_shape((nf * nf, nf * nf))
                .expect("regrouped shape");
            let mut mat = Array2::<C64>::zeros((d * d, nf * nf));
            for (p, e) in family.iter().enumerate() {
                for i in 0..nf {
                    for k in 0..nf {
                        mat[[p, i * nf + k]] = C64::new(e[[k, i]], 0.0);
                    }
                }
            }
            let g = mat.dot(&r).dot(&mat.t());
            let dim = d * d;
            let mut sigma = Array2::<C64>::zeros((dim, dim));
            for a1 in 0..d {
                for b1 in 0..d {
                    for a2 in 0..d {
                        for b2 in 0..d {
                            sigma[[a1 * d + a2, b1 * d + b2]] =
                                g[[a1 * d + b1, a2 * d + b2]];
                        }
                    }
                }
            }
            Ok(sigma)
        }
        n => Err(Error::ResourceLimit(format!(
            "decomposition supports at most 2 modes, got {n}"
        ))),
    }
}

fn diagonal_probs(state: &CvState, d: usize, cfg: &QuadratureConfig) -> Result<Vec<f64>> {
    let nf = state.cutoff;
    let l = lattice_spacing(d);
    let (nodes, h) = hermite::midpoint_nodes(-l / 2.0, l / 2.0, cfg.nodes);
    // Diagonal operators: only the aligned comb terms survive (off-shift
    // weights vanish identically on the diagonal), so D_a = h Phi_a Phi_a^T.
    let ops: Vec<Array2<C64>> = (0..d)
        .map(|a| {
            let comb = label_comb(a, d, nf, cfg, &nodes);
            let mut op = comb.table.dot(&comb.table.t());
            op.mapv_inplace(|v| v * h);
            op.mapv(|v| C64::new(v, 0.0))
        })
        .collect();
    crate::measure::joint_probs(state, &ops)
}

/// `tr(rho E)` for a real operator `E`.
fn trace_prod_real(e: &Array2<f64>, rho: &Array2<C64>) -> C64 {
    let n = e.nrows();
    let mut acc = C64::new(0.0, 0.0);
    for j in 0..n {
        for k in 0..n {
            acc += rho[[j, k]] * e[[k, j]];
        }
    }
    acc
}

fn max_abs_diff(a: &Array2<C64>, b: &Array2<C64>) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0f64, f64::max)
}
