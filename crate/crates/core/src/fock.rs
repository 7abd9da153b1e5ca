//! Truncated Fock-basis simulation of continuous-variable modes.
//!
//! A mode is truncated to `cutoff` Fock levels. All gates are realized as
//! matrix exponentials of their truncated generators, computed through the
//! spectral decomposition of the generator; no closed-form special cases.
//! The exponential of the *truncated* generator is exactly unitary, so
//! truncation error shows up as state population leaking toward the cutoff,
//! which is what the leakage guard watches.
//!
//! Multi-mode states are stored as dense density matrices of dimension
//! `cutoff^modes` with mode 0 the most significant index. Gates never build
//! `cutoff^modes`-dimensional unitaries: single-mode and two-mode operators
//! are applied by tensor contraction, the controlled-Z by a per-mode change
//! to the position eigenbasis, and the (number-conserving) beam splitter and
//! Mach-Zehnder blockwise on total-photon-number sectors.

use ndarray::{Array1, Array2, Ix2, IxDyn};

use crate::circuit::CvGate;
use crate::hermite;
use crate::linalg::{self, dagger, expi_hermitian};
use crate::{C64, Error, Result};

/// Tolerance on the population found in the guarded top Fock levels after a
/// gate; beyond this the truncated simulation is declared untrustworthy.
pub const LEAK_TOL: f64 = 1e-8;

/// Number of top Fock levels watched by the leakage guard.
pub fn guard_levels(cutoff: usize) -> usize {
    (cutoff / 10).max(2)
}

/// Cached single-mode operators at a fixed cutoff.
pub struct FockRep {
    pub cutoff: usize,
    /// Annihilation operator.
    pub a: Array2<C64>,
    /// Creation operator.
    pub adag: Array2<C64>,
    /// Position quadrature `q = (a + a^dag)/sqrt(2)`.
    pub q: Array2<C64>,
    /// Momentum quadrature `p = i(a^dag - a)/sqrt(2)`.
    pub p: Array2<C64>,
    /// Number operator.
    pub num: Array2<C64>,
    /// Eigenvalues of the truncated `q`, ascending.
    q_vals: Array1<f64>,
    /// Eigenvectors of the truncated `q`, one per column.
    q_vecs: Array2<C64>,
}

impl FockRep {
    pub fn new(cutoff: usize) -> Result<FockRep> {
        if cutoff < 2 {
            return Err(Error::InvalidArgument(format!(
                "cutoff {cutoff} too small, need at least 2 Fock levels"
            )));
        }
        let mut a = Array2::<C64>::zeros((cutoff, cutoff));
        for k in 1..cutoff {
            a[[k - 1, k]] = C64::new((k as f64).sqrt(), 0.0);
        }
        let adag = dagger(&a);
        let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
        let q = (&a + &adag).mapv(|z| z * inv_sqrt2);
        let p = (&adag - &a).mapv(|z| z * C64::new(0.0, inv_sqrt2));
        let num = adag.dot(&a);
        // row-major eigh quirk: conjugate to get eigenvectors of q itself
        // (no-op here since q is real, but kept for uniformity).
        let (q_vals, q_vecs) = ndarray_linalg::Eigh::eigh(&q, ndarray_linalg::UPLO::Lower)?;
        let q_vecs = q_vecs.mapv(|z| z.conj());
        Ok(FockRep { cutoff, a, adag, q, p, num, q_vals, q_vecs })
    }

    /// `psi_k(x)` for `k < cutoff` at each requested position; one row per
    /// position, one column per Fock level.
    pub fn position_table(&self, xs: &[f64]) -> Array2<f64> {
        let mut table = Array2::zeros((xs.len(), self.cutoff));
        for (row, &x) in xs.iter().enumerate() {
            let psi = hermite::oscillator_eigenfunctions(self.cutoff, x);
            for (col, v) in psi.into_iter().enumerate() {
                table[[row, col]] = v;
            }
        }
        table
    }

    /// Generator `(H, t)` with `U = e^{i t H}` for single-mode gates.
    fn single_mode_generator(&self, gate: &CvGate) -> Option<(Array2<C64>, f64)> {
        let half_diag = || {
            Array2::from_diag(&Array1::from_iter(
                (0..self.cutoff).map(|k| C64::new(k as f64 + 0.5, 0.0)),
            ))
        };
        match *gate {
            CvGate::Fourier { .. } => Some((half_diag(), std::f64::consts::FRAC_PI_2)),
            CvGate::Rotation { theta, .. } => Some((half_diag(), theta)),
            CvGate::Shear { s, .. } => Some((self.q.dot(&self.q), 0.5 * s)),
            CvGate::Cubic { gamma, .. } => {
                Some((self.q.dot(&self.q).dot(&self.q), gamma))
            }
            CvGate::Squeeze { r, .. } => {
                let qp = self.q.dot(&self.p);
                Some((linalg::hermitize(&qp), -2.0 * r / 2.0))
            }
            CvGate::DisplaceX { s, .. } => Some((self.p.clone(), -s)),
            CvGate::DisplaceZ { s, .. } => Some((self.q.clone(), s)),
            CvGate::Displace { rq, rp, .. } => {
                let h = &self.q.mapv(|z| z * rp) - &self.p.mapv(|z| z * rq);
                Some((h, 1.0))
            }
            _ => None,
        }
    }

    /// Truncated-space unitary of a single-mode gate.
    pub fn single_mode_unitary(&self, gate: &CvGate) -> Result<Array2<C64>> {
        let (h, t) = self.single_mode_generator(gate).ok_or_else(|| {
            Error::InvalidArgument(format!("{} is not a single-mode gate", gate.kind()))
        })?;
        expi_hermitian(&h, t)
    }

    /// Dense two-mode unitary on the `cutoff^2` product space, first listed
    /// mode major. Used for cross-checks and as the fallback when the state
    /// has more than two modes.
    pub fn two_mode_unitary(&self, gate: &CvGate) -> Result<Array2<C64>> {
        match *gate {
            CvGate::CZ { s, .. } => {
                expi_hermitian(&linalg::kron(&self.q, &self.q), s)
            }
            CvGate::BeamSplitter { theta, .. } => {
                let h = &linalg::kron(&self.p, &self.q) - &linalg::kron(&self.q, &self.p);
                expi_hermitian(&h, theta)
            }
            CvGate::MachZehnder { theta, phi, .. } => {
                let eye = linalg::identity(self.cutoff);
                let bs = self.two_mode_unitary(&CvGate::BeamSplitter {
                    modes: (0, 1),
                    theta: std::f64::consts::FRAC_PI_4,
                })?;
                let r1 = linalg::kron(
                    &self.single_mode_unitary(&CvGate::Rotation { mode: 0, theta: phi })?,
                    &eye,
                );
                let r2 = linalg::kron(
                    &self.single_mode_unitary(&CvGate::Rotation { mode: 0, theta: 2.0 * theta })?,
                    &eye,
                );
                Ok(bs.dot(&r2).dot(&bs).dot(&r1))
            }
            _ => Err(Error::InvalidArgument(format!(
                "{} is not a two-mode gate",
                gate.kind()
            ))),
        }
    }

    /// Per-sector unitaries of a number-conserving two-mode gate, sector
    /// `N = n_first + n_second`, basis ordered by ascending `n_first`.
    fn sector_unitaries(&self, gate: &CvGate) -> Result<Vec<Array2<C64>>> {
        let nf = self.cutoff;
        let mut out = Vec::with_capacity(2 * nf - 1);
        for total in 0..=(2 * (nf - 1)) {
            let lo = total.saturating_sub(nf - 1);
            let hi = total.min(nf - 1);
            let dim = hi - lo + 1;
            // beam splitter generator i(a1^dag a2 - a1 a2^dag) restricted to
            // the sector: tridiagonal with entry i sqrt((n1+1) n2) coupling
            // n1 -> n1+1.
            let bs = |angle: f64| -> Result<Array2<C64>> {
                let mut h = Array2::<C64>::zeros((dim, dim));
                for t in 0..dim - 1 {
                    let n1 = (lo + t) as f64;
                    let n2 = (total - lo - t) as f64;
                    let c = ((n1 + 1.0) * n2).sqrt();
                    h[[t + 1, t]] = C64::new(0.0, c);
                    h[[t, t + 1]] = C64::new(0.0, -c);
                }
                expi_hermitian(&h, angle)
            };
            // rotation on the first mode is diagonal in the sector basis.
            let rot = |angle: f64| -> Array2<C64> {
                Array2::from_diag(&Array1::from_iter((0..dim).map(|t| {
                    C64::new(0.0, angle * ((lo + t) as f64 + 0.5)).exp()
                })))
            };
            let u = match *gate {
                CvGate::BeamSplitter { theta, .. } => bs(theta)?,
                CvGate::MachZehnder { theta, phi, .. } => {
                    let b = bs(std::f64::consts::FRAC_PI_4)?;
                    b.dot(&rot(2.0 * theta)).dot(&b).dot(&rot(phi))
                }
                _ => {
                    return Err(Error::InvalidArgument(format!(
                        "{} is not number-conserving",
                        gate.kind()
                    )))
                }
            };
            out.push(u);
        }
        Ok(out)
    }
}

/// A (possibly unnormalized) density matrix over `modes` truncated modes,
/// mode 0 most significant.
#[derive(Debug, Clone)]
pub struct CvState {
    pub modes: usize,
    pub cutoff: usize,
    pub rho: Array2<C64>,
}

impl CvState {
    pub fn vacuum(modes: usize, cutoff: usize) -> CvState {
        let dim = cutoff.pow(modes as u32);
        let mut rho = Array2::zeros((dim, dim));
        rho[[0, 0]] = C64::new(1.0, 0.0);
        CvState { modes, cutoff, rho }
    }

    /// Pure state from a (not necessarily normalized) Fock-basis vector.
    pub fn from_pure(psi: &Array1<C64>, modes: usize, cutoff: usize) -> Result<CvState> {
        let dim = cutoff.pow(modes as u32);
        if psi.len() != dim {
            return Err(Error::InvalidArgument(format!(
                "state vector length {} does not match {}^{}",
                psi.len(),
                cutoff,
                modes
            )));
        }
        let norm2: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
        if norm2 <= 0.0 || !norm2.is_finite() {
            return Err(Error::InvalidArgument("state vector has no norm".into()));
        }
        let mut rho = Array2::zeros((dim, dim));
        for (i, zi) in psi.iter().enumerate() {
            for (j, zj) in psi.iter().enumerate() {
                rho[[i, j]] = zi * zj.conj() / norm2;
            }
        }
        Ok(CvState { modes, cutoff, rho })
    }

    pub fn dim(&self) -> usize {
        self.cutoff.pow(self.modes as u32)
    }

    pub fn trace(&self) -> f64 {
        self.rho.diag().iter().map(|z| z.re).sum()
    }

    pub fn purity(&self) -> f64 {
        self.rho.iter().map(|z| z.norm_sqr()).sum::<f64>() / self.trace().powi(2)
    }

    /// Fock occupation of basis index `i` on `mode`.
    fn digit(&self, i: usize, mode: usize) -> usize {
        (i / self.cutoff.pow((self.modes - 1 - mode) as u32)) % self.cutoff
    }

    /// Total energy `sum_j Tr(rho (n_j + 1/2))`, exact on the truncated
    /// space; no operator matrices needed since the Hamiltonian is diagonal.
    pub fn energy(&self) -> f64 {
        let offset = 0.5 * self.modes as f64;
        self.rho
            .diag()
            .iter()
            .enumerate()
            .map(|(i, z)| {
                let mut total = 0usize;
                let mut idx = i;
                for _ in 0..self.modes {
                    total += idx % self.cutoff;
                    idx /= self.cutoff;
                }
                z.re * (total as f64 + offset)
            })
            .sum::<f64>()
            / self.trace()
    }

    /// Fraction of the population sitting in the guarded top Fock levels of
    /// any mode.
    pub fn leakage_fraction(&self) -> f64 {
        let guard = guard_levels(self.cutoff);
        let floor = self.cutoff - guard;
        let mut leaked = 0.0;
        for (i, z) in self.rho.diag().iter().enumerate() {
            let mut idx = i;
            let mut hot = false;
            for _ in 0..self.modes {
                if idx % self.cutoff >= floor {
                    hot = true;
                }
                idx /= self.cutoff;
            }
            if hot {
                leaked += z.re;
            }
        }
        leaked / self.trace()
    }

    /// `rho <- (rho + rho^dag)/2`.
    pub fn hermitize(&mut self) {
        self.rho = linalg::hermitize(&self.rho);
    }

    /// Scales the trace to 1, returning the prior trace.
    pub fn renormalize(&mut self) -> f64 {
        let t = self.trace();
        if t > 0.0 {
            self.rho.mapv_inplace(|z| z / t);
        }
        t
    }

    /// Same state at a larger cutoff (exact zero-padded embedding).
    pub fn embed(&self, new_cutoff: usize) -> CvState {
        assert!(new_cutoff >= self.cutoff);
        let old_dim = self.dim();
        let map: Vec<usize> = (0..old_dim)
            .map(|i| {
                let mut out = 0usize;
                for mode in 0..self.modes {
                    out = out * new_cutoff + self.digit(i, mode);
                }
                out
            })
            .collect();
        let dim = new_cutoff.pow(self.modes as u32);
        let mut rho = Array2::zeros((dim, dim));
        for (i, &ri) in map.iter().enumerate() {
            for (j, &rj) in map.iter().enumerate() {
                rho[[ri, rj]] = self.rho[[i, j]];
            }
        }
        CvState { modes: self.modes, cutoff: new_cutoff, rho }
    }

    /// Applies `m . rho . m^dag` with `m` acting on the listed modes (in
    /// `m`'s factor order).
    pub fn conjugate_on(&mut self, m: &Array2<C64>, targets: &[usize]) {
        let a = left_apply(&self.rho, m, self.modes, self.cutoff, targets);
        let ad = a.t().mapv(|z| z.conj());
        let b = left_apply(&ad, m, self.modes, self.cutoff, targets);
        self.rho = b.t().mapv(|z| z.conj());
    }

    /// Expectation `Tr(rho (op on mode))` for a single-mode operator.
    pub fn mode_expectation(&self, op: &Array2<C64>, mode: usize) -> C64 {
        let applied = left_apply(&self.rho, op, self.modes, self.cutoff, &[mode]);
        linalg::trace(&applied)
    }

    /// Expectation `Tr(rho (op (x) ... (x) op))` of the same single-mode
    /// operator acting on every mode.
    pub fn all_modes_expectation(&self, op: &Array2<C64>) -> C64 {
        let mut acc = self.rho.clone();
        for mode in 0..self.modes {
            acc = left_apply(&acc, op, self.modes, self.cutoff, &[mode]);
        }
        linalg::trace(&acc)
    }

    /// Evolves the state by one gate: `rho <- U rho U^dag` with `U` the
    /// exponential of the truncated generator, then re-Hermitizes and runs
    /// the leakage guard.
    pub fn apply_gate(&mut self, rep: &FockRep, gate: &CvGate) -> Result<()> {
        assert_eq!(rep.cutoff, self.cutoff, "FockRep cutoff mismatch");
        match *gate {
            CvGate::CZ { modes: (k, l), s } => self.apply_cz(rep, k, l, s),
            CvGate::BeamSplitter { modes: (k, l), .. }
            | CvGate::MachZehnder { modes: (k, l), .. } => {
                if self.modes == 2 {
                    let sectors = rep.sector_unitaries(gate)?;
                    self.apply_sectorwise(&sectors, k);
                } else {
                    let u = rep.two_mode_unitary(gate)?;
                    self.conjugate_on(&u, &[k, l]);
                }
            }
            _ => {
                let u = rep.single_mode_unitary(gate)?;
                self.conjugate_on(&u, &[gate.modes()[0]]);
            }
        }
        self.hermitize();
        self.check_health()
    }

    /// Controlled-Z `e^{i s q_k q_l}` through the eigenbasis of the
    /// truncated `q`: per-mode basis change, elementwise phases, change
    /// back.
    fn apply_cz(&mut self, rep: &FockRep, k: usize, l: usize, s: f64) {
        let vd = dagger(&rep.q_vecs);
        self.conjugate_on(&vd, &[k]);
        self.conjugate_on(&vd, &[l]);
        let phi: Vec<f64> = (0..self.dim())
            .map(|i| rep.q_vals[self.digit(i, k)] * rep.q_vals[self.digit(i, l)])
            .collect();
        for ((r, c), z) in self.rho.indexed_iter_mut() {
            *z *= C64::new(0.0, s * (phi[r] - phi[c])).exp();
        }
        self.conjugate_on(&rep.q_vecs, &[k]);
        self.conjugate_on(&rep.q_vecs, &[l]);
    }

    /// Applies a number-conserving two-mode unitary given per-sector blocks
    /// (two-mode states only). `first` names the mode that is the sector
    /// basis' leading factor.
    fn apply_sectorwise(&mut self, sectors: &[Array2<C64>], first: usize) {
        assert_eq!(self.modes, 2);
        let nf = self.cutoff;
        let mut index_of: Vec<Vec<usize>> = vec![Vec::new(); 2 * nf - 1];
        for n1 in 0..nf {
            for n2 in 0..nf {
                let r = if first == 0 { n1 * nf + n2 } else { n2 * nf + n1 };
                index_of[n1 + n2].push(r);
            }
        }
        let daggered: Vec<Array2<C64>> = sectors.iter().map(dagger).collect();
        let mut out = Array2::<C64>::zeros(self.rho.raw_dim());
        for (m, rows) in index_of.iter().enumerate() {
            for (n, cols) in index_of.iter().enumerate() {
                let mut block = Array2::<C64>::zeros((rows.len(), cols.len()));
                for (bi, &r) in rows.iter().enumerate() {
                    for (bj, &c) in cols.iter().enumerate() {
                        block[[bi, bj]] = self.rho[[r, c]];
                    }
                }
                let transformed = sectors[m].dot(&block).dot(&daggered[n]);
                for (bi, &r) in rows.iter().enumerate() {
                    for (bj, &c) in cols.iter().enumerate() {
                        out[[r, c]] = transformed[[bi, bj]];
                    }
                }
            }
        }
        self.rho = out;
    }

    fn check_health(&self) -> Result<()> {
        if !self.rho.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            return Err(Error::Linalg("state became non-finite".into()));
        }
        let leak = self.leakage_fraction();
        if leak > LEAK_TOL {
            return Err(Error::Leakage { leak, tol: LEAK_TOL, cutoff: self.cutoff });
        }
        Ok(())
    }

    /// Density-matrix invariants: Hermitian within 1e-12, trace within
    /// 1e-10 of `expected_trace`, eigenvalues above -1e-10.
    pub fn validate(&self, expected_trace: f64) -> Result<()> {
        let herm_err = (&self.rho - &dagger(&self.rho))
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        if herm_err > 1e-12 {
            return Err(Error::InvalidArgument(format!(
                "density matrix not Hermitian: deviation {herm_err:.3e}"
            )));
        }
        let tr = self.trace();
        if (tr - expected_trace).abs() > 1e-10 {
            return Err(Error::InvalidArgument(format!(
                "trace {tr} differs from expected {expected_trace}"
            )));
        }
        let eigs: Array1<f64> =
            ndarray_linalg::EigValsh::eigvalsh(&self.rho, ndarray_linalg::UPLO::Lower)?;
        if let Some(&min) = eigs
            .iter()
            .min_by(|a, b| a.partial_cmp(b).expect("finite eigenvalues"))
        {
            if min < -1e-10 {
                return Err(Error::InvalidArgument(format!(
                    "density matrix has negative eigenvalue {min:.3e}"
                )));
            }
        }
        Ok(())
    }
}

/// `m <- (u on targets) . m`, treating the rows of `m` as a rank-`n_modes`
/// tensor with `cutoff`-sized indices. `u`'s dimension must be
/// `cutoff^targets.len()`, factors ordered as listed in `targets`.
pub(crate) fn left_apply(
    m: &Array2<C64>,
    u: &Array2<C64>,
    n_modes: usize,
    cutoff: usize,
    targets: &[usize],
) -> Array2<C64> {
    let (rows, cols) = m.dim();
    let du = u.nrows();
    debug_assert_eq!(rows, cutoff.pow(n_modes as u32));
    debug_assert_eq!(du, cutoff.pow(targets.len() as u32));
    // into_shape follows the memory order, so a transposed (F-layout) input
    // would silently swap the mode roles; force row-major first.
    let m = m.as_standard_layout();
    if targets.iter().enumerate().all(|(i, &t)| t == i) {
        // targets are the leading row indices in order: plain reshape.
        let m2 = m
            .view()
            .into_shape((du, rows / du * cols))
            .expect("row-major reshape");
        return u
            .dot(&m2)
            .into_shape((rows, cols))
            .expect("row-major reshape")
            .into_dimensionality::<Ix2>()
            .expect("2-d result");
    }
    let mut shape = vec![cutoff; n_modes];
    shape.push(cols);
    let tensor = m
        .view()
        .into_shape(IxDyn(&shape))
        .expect("row-major reshape");
    let mut perm: Vec<usize> = targets.to_vec();
    perm.extend((0..n_modes).filter(|i| !targets.contains(i)));
    perm.push(n_modes);
    let permuted = tensor.permuted_axes(IxDyn(&perm));
    let pshape: Vec<usize> = permuted.shape().to_vec();
    let flat = permuted.as_standard_layout().into_owned();
    let mat = flat
        .view()
        .into_shape((du, rows / du * cols))
        .expect("standard layout reshape");
    let out = u.dot(&mat);
    let out = out.into_shape(IxDyn(&pshape)).expect("reshape back");
    let mut inv = vec![0usize; perm.len()];
    for (pos, &ax) in perm.iter().enumerate() {
        inv[ax] = pos;
    }
    let back = out.permuted_axes(IxDyn(&inv));
    back.as_standard_layout()
        .into_owned()
        .into_shape((rows, cols))
        .expect("reshape to matrix")
        .into_dimensionality::<Ix2>()
        .expect("2-d result")
}
