//! Homodyne-style position measurements coarse-grained onto the qudit grid.
//!
//! A dimension-`d` readout bins the position axis at spacing `l =
//! sqrt(2*pi/d)`. Three conventions are supported and kept deliberately
//! separate so that their disagreement is observable:
//!
//! * realistic (`R`): bin the raw position density over the central window,
//!   report the off-window mass as `overflow`, and renormalize the rest;
//! * cutoff (`C`): project onto the window first (`rho -> L rho L / tr(L
//!   rho)`), then bin;
//! * modular (`M`): fold the whole axis into the window with period `l*d`
//!   before binning, so every bin collects its full displaced comb.
//!
//! All bin operators are assembled in the truncated Fock basis from
//! Gauss-Legendre quadrature of the position eigenfunctions, which is exact
//! to machine precision for the polynomial-times-Gaussian integrands that
//! arise below any practical cutoff.

use std::f64::consts::PI;

use ndarray::{Array2, IxDyn};
use serde::{Deserialize, Serialize};

use crate::fock::{CvState, FockRep};
use crate::hermite;
use crate::{Error, Result, C64};

/// Nodes per bin for the Gauss-Legendre rule; exact for integrands of
/// polynomial degree below 32 against the Gaussian weight, far beyond what a
/// width-`l` slice of any confined state needs.
const BIN_NODES: usize = 16;

/// Measurement conventions, tagged by the letter used in reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Model {
    /// Raw binning with explicit overflow.
    #[serde(rename = "R")]
    Realistic,
    /// Window projection before binning.
    #[serde(rename = "C")]
    Cutoff,
    /// Modular (comb) binning.
    #[serde(rename = "M")]
    Modular,
    /// Native qudit measurement of a lowered circuit.
    #[serde(rename = "D")]
    Discrete,
}

impl Model {
    pub fn tag(&self) -> &'static str {
        match self {
            Model::Realistic => "R",
            Model::Cutoff => "C",
            Model::Modular => "M",
            Model::Discrete => "D",
        }
    }
}

/// Grid spacing `l = sqrt(2*pi/d)` of the dimension-`d` readout.
pub fn lattice_spacing(d: usize) -> f64 {
    (2.0 * PI / d as f64).sqrt()
}

/// Bin centers `l*(u - floor(d/2))` for `u = 0..d`, ascending.
pub fn grid_values(d: usize) -> Vec<f64> {
    let l = lattice_spacing(d);
    (0..d).map(|u| l * (u as f64 - (d / 2) as f64)).collect()
}

/// Half-open window `[lo, hi)` covered by the `d` bins together.
pub fn window_edges(d: usize) -> (f64, f64) {
    let l = lattice_spacing(d);
    let lo = -((d / 2) as f64 + 0.5) * l;
    let hi = (d.div_ceil(2) as f64 - 0.5) * l;
    (lo, hi)
}

/// Largest position with non-negligible weight below the cutoff: the
/// classical turning point of the top retained level plus a tail margin.
pub fn position_support(cutoff: usize) -> f64 {
    (2.0 * cutoff as f64).sqrt() + 5.0
}

/// Positive-semidefinite bin, window, and comb operators in the Fock basis.
pub struct BinOperators {
    pub d: usize,
    pub cutoff: usize,
    /// `bins[u]` integrates `|x><x|` over bin `u` of the window.
    pub bins: Vec<Array2<C64>>,
    /// Sum of all bins: the window projector up to truncation.
    pub window: Array2<C64>,
    /// `combs[u]` additionally sums every displaced copy of bin `u` at
    /// period `l*d` within the support of the truncated basis.
    pub combs: Vec<Array2<C64>>,
}

impl BinOperators {
    pub fn new(rep: &FockRep, d: usize) -> Result<BinOperators> {
        if d < 2 {
            return Err(Error::InvalidArgument(format!(
                "readout dimension {d} too small, need d >= 2"
            )));
        }
        let nf = rep.cutoff;
        let l = lattice_spacing(d);
        let period = l * d as f64;
        let support = position_support(nf);
        let centers = grid_values(d);

        let mut bins = Vec::with_capacity(d);
        let mut combs = Vec::with_capacity(d);
        let mut window = Array2::<C64>::zeros((nf, nf));
        for &center in &centers {
            let bin = interval_operator(rep, center - l / 2.0, center + l / 2.0);
            window += &bin;

            // Every period-shifted copy of the bin that still overlaps the
            // support contributes; shifts strictly outside carry only mass
            // the truncated basis cannot represent anyway.
            let m_lo = ((-support - l / 2.0 - center) / period).ceil() as i64;
            let m_hi = ((support + l / 2.0 - center) / period).floor() as i64;
            let mut comb = Array2::<C64>::zeros((nf, nf));
            for m in m_lo..=m_hi {
                if m == 0 {
                    comb += &bin;
                } else {
                    let c = center + m as f64 * period;
                    comb += &interval_operator(rep, c - l / 2.0, c + l / 2.0);
                }
            }
            bins.push(bin);
            combs.push(comb);
        }
        Ok(BinOperators { d, cutoff: nf, bins, window, combs })
    }
}

/// `int_a^b |x><x| dx` in the Fock basis by Gauss-Legendre quadrature.
fn interval_operator(rep: &FockRep, a: f64, b: f64) -> Array2<C64> {
    let nf = rep.cutoff;
    let (nodes, weights) = hermite::gauss_legendre(BIN_NODES);
    let half = (b - a) / 2.0;
    let mid = (a + b) / 2.0;
    let xs: Vec<f64> = nodes.iter().map(|&t| mid + half * t).collect();
    let table = rep.position_table(&xs);
    // op[j,k] = sum_t w_t psi_j(x_t) psi_k(x_t); fold sqrt(w) into the table
    // so the sum is a plain Gram product.
    let mut scaled = table;
    for (t, mut row) in scaled.rows_mut().into_iter().enumerate() {
        let w = (half * weights[t]).sqrt();
        row.mapv_inplace(|v| v * w);
    }
    let mut op = Array2::<C64>::zeros((nf, nf));
    for j in 0..nf {
        for k in j..nf {
            let mut acc = 0.0;
            for t in 0..BIN_NODES {
                acc += scaled[[t, j]] * scaled[[t, k]];
            }
            op[[j, k]] = C64::new(acc, 0.0);
            op[[k, j]] = C64::new(acc, 0.0);
        }
    }
    op
}

/// One measured distribution over the `d^modes` grid outcomes.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OutcomeDistribution {
    pub model: Model,
    pub d: usize,
    pub modes: usize,
    /// Probabilities over flat outcome indices (mode 0 is the most
    /// significant digit); always sums to 1.
    pub probs: Vec<f64>,
    /// Mass outside the measurement window, before renormalization.
    /// Nonzero only for the realistic model.
    pub overflow: f64,
    /// Fraction of the state the window retains (`R`, `C`) or the comb
    /// accounts for (`M`); 1 for the discrete model.
    pub survival: f64,
}

impl OutcomeDistribution {
    /// Digits `(u_0, ..., u_{modes-1})` of a flat outcome index.
    pub fn digits(&self, mut flat: usize) -> Vec<usize> {
        let mut out = vec![0; self.modes];
        for slot in out.iter_mut().rev() {
            *slot = flat % self.d;
            flat /= self.d;
        }
        out
    }
}

/// Realistic readout: bin the raw density, renormalize over the window, and
/// report the lost mass as overflow.
pub fn pdf_realistic(state: &CvState, ops: &BinOperators) -> Result<OutcomeDistribution> {
    check_compat(state, ops)?;
    let raw = joint_probs(state, &ops.bins)?;
    let total = state.trace();
    let kept: f64 = raw.iter().sum();
    if kept < 1e-12 {
        return Err(Error::DegenerateNormalization { mass: kept });
    }
    let overflow = ((total - kept) / total).clamp(0.0, 1.0);
    let probs = raw.iter().map(|&p| (p / kept).max(0.0)).collect();
    Ok(OutcomeDistribution {
        model: Model::Realistic,
        d: ops.d,
        modes: state.modes,
        probs,
        overflow,
        survival: kept / total,
    })
}

/// Cutoff readout: project onto the window on every mode, renormalize, then
/// bin the projected state.
pub fn pdf_cutoff(state: &CvState, ops: &BinOperators) -> Result<OutcomeDistribution> {
    check_compat(state, ops)?;
    let total = state.trace();
    let survival = state.all_modes_expectation(&ops.window).re / total;
    if survival < 1e-12 {
        return Err(Error::DegenerateNormalization { mass: survival });
    }
    let mut projected = state.clone();
    for mode in 0..state.modes {
        projected.conjugate_on(&ops.window, &[mode]);
    }
    projected.hermitize();
    projected.renormalize();
    let raw = joint_probs(&projected, &ops.bins)?;
    let kept: f64 = raw.iter().sum();
    let probs = raw.iter().map(|&p| (p / kept).max(0.0)).collect();
    Ok(OutcomeDistribution {
        model: Model::Cutoff,
        d: ops.d,
        modes: state.modes,
        probs,
        overflow: 0.0,
        survival,
    })
}

/// Modular readout: fold the axis into the window, so the comb operators
/// resolve the identity and nothing is lost.
pub fn pdf_modular(state: &CvState, ops: &BinOperators) -> Result<OutcomeDistribution> {
    check_compat(state, ops)?;
    let raw = joint_probs(state, &ops.combs)?;
    let total = state.trace();
    let kept: f64 = raw.iter().sum();
    let probs = raw.iter().map(|&p| (p / kept).max(0.0)).collect();
    Ok(OutcomeDistribution {
        model: Model::Modular,
        d: ops.d,
        modes: state.modes,
        probs,
        overflow: 0.0,
        survival: kept / total,
    })
}

fn check_compat(state: &CvState, ops: &BinOperators) -> Result<()> {
    if state.cutoff != ops.cutoff {
        return Err(Error::InvalidArgument(format!(
            "bin operators built at cutoff {} cannot measure a cutoff-{} state",
            ops.cutoff, state.cutoff
        )));
    }
    Ok(())
}

/// Joint outcome probabilities `tr((O_{u_0} (x) ... ) rho)` for one operator
/// per outcome per mode, flattened with mode 0 most significant.
pub(crate) fn joint_probs(state: &CvState, ops: &[Array2<C64>]) -> Result<Vec<f64>> {
    let d = ops.len();
    let nf = state.cutoff;
    match state.modes {
        1 => Ok(ops.iter().map(|op| re_trace_prod(op, &state.rho)).collect()),
        2 => {
            // tr((A (x) B) rho) = sum A[k,i] B[l,j] rho[(i,j),(k,l)]: regroup
            // rho's axes as ((i,k),(j,l)) once, then both contractions are a
            // single GEMM against the vectorized bin family.
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
            let mut bv = Array2::<C64>::zeros((d, nf * nf));
            for (u, op) in ops.iter().enumerate() {
                for i in 0..nf {
                    for k in 0..nf {
                        bv[[u, i * nf + k]] = op[[k, i]];
                    }
                }
            }
            let p = bv.dot(&r).dot(&bv.t());
            Ok((0..d * d).map(|f| p[[f / d, f % d]].re).collect())
        }
        n => Err(Error::ResourceLimit(format!(
            "joint readout supports at most 2 modes, got {n}"
        ))),
    }
}

/// `Re tr(a b)` without forming the product.
fn re_trace_prod(a: &Array2<C64>, b: &Array2<C64>) -> f64 {
    let n = a.nrows();
    let mut acc = 0.0;
    for j in 0..n {
        for k in 0..n {
            let p = a[[j, k]] * b[[k, j]];
            acc += p.re;
        }
    }
    acc
}

/// Checks, pointwise on a dense position grid, that restricting the comb
/// indicator of each bin to the window reproduces exactly that bin: the
/// algebraic fact that makes the modular and cutoff readouts agree on
/// window-supported states. Returns the worst absolute discrepancy (0 when
/// the identity holds; sample points sit at cell midpoints so no sample ever
/// lands on an edge).
pub fn comb_window_identity_residual(d: usize, samples_per_bin: usize) -> f64 {
    let l = lattice_spacing(d);
    let period = l * d as f64;
    let (lo, hi) = window_edges(d);
    let in_window = |x: f64| x >= lo && x < hi;

    let scan_lo = lo - 2.0 * period;
    let scan_hi = hi + 2.0 * period;
    let step = l / samples_per_bin as f64;
    let samples = ((scan_hi - scan_lo) / step).round() as usize;

    let mut worst: f64 = 0.0;
    for (u, center) in grid_values(d).into_iter().enumerate() {
        let in_bin =
            |x: f64| x >= center - l / 2.0 && x < center + l / 2.0;
        for t in 0..samples {
            let x = scan_lo + (t as f64 + 0.5) * step;
            // Comb membership: only the nearest period shift can land in a
            // width-l bin.
            let m = ((x - center) / period).round();
            let in_comb = in_bin(x - m * period);
            let lhs = (in_window(x) && in_comb) as i32 as f64;
            let rhs = in_bin(x) as i32 as f64;
            worst = worst.max((lhs - rhs).abs());
        }
        let _ = u;
    }
    worst
}
