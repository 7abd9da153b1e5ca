//! Harmonic oscillator eigenfunctions and quadrature rules.
//!
//! Position wavefunctions of Fock states are evaluated with the stable
//! three-term recurrence for Hermite functions; integrals over position are
//! done with composite Gauss-Legendre panels whose nodes are generated once
//! by Newton iteration (deterministic to the last bit for a fixed order).

/// Values `psi_k(x)` for `k = 0..n`, where `psi_k` is the `k`-th harmonic
/// oscillator eigenfunction with unit mass and frequency:
/// `psi_0(x) = pi^{-1/4} exp(-x^2/2)` and
/// `psi_{k+1} = sqrt(2/(k+1)) x psi_k - sqrt(k/(k+1)) psi_{k-1}`.
pub fn oscillator_eigenfunctions(n: usize, x: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(n);
    if n == 0 {
        return out;
    }
    let psi0 = std::f64::consts::PI.powf(-0.25) * (-0.5 * x * x).exp();
    out.push(psi0);
    if n == 1 {
        return out;
    }
    out.push(std::f64::consts::SQRT_2 * x * psi0);
    for k in 1..n - 1 {
        let kf = k as f64;
        let next = (2.0 / (kf + 1.0)).sqrt() * x * out[k] - (kf / (kf + 1.0)).sqrt() * out[k - 1];
        out.push(next);
    }
    out
}

/// Gauss-Legendre nodes and weights of order `n` on `[-1, 1]`.
///
/// Nodes are roots of the Legendre polynomial `P_n`, found by Newton
/// iteration from the Tricomi initial guess; weights are
/// `2 / ((1 - x^2) P_n'(x)^2)`. Exact for polynomials of degree `2n - 1`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        // Newton on P_n(x); the derivative comes from the standard identity
        // (1 - x^2) P_n'(x) = n (P_{n-1}(x) - x P_n(x)).
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, pm1) = legendre_pair(n, x);
            dp = n as f64 * (pm1 - x * p) / (1.0 - x * x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                let (p, pm1) = legendre_pair(n, x);
                dp = n as f64 * (pm1 - x * p) / (1.0 - x * x);
                break;
            }
        }
        nodes[i] = x;
        weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    // Roots came out in decreasing order; flip to ascending for readability.
    nodes.reverse();
    weights.reverse();
    (nodes, weights)
}

/// `(P_n(x), P_{n-1}(x))` by the Bonnet recurrence.
fn legendre_pair(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 1..n {
        let kf = k as f64;
        let p2 = ((2.0 * kf + 1.0) * x * p1 - kf * p0) / (kf + 1.0);
        p0 = p1;
        p1 = p2;
    }
    (p1, p0)
}

/// Midpoint nodes and the common weight for `m` panels on `[a, b]`.
pub fn midpoint_nodes(a: f64, b: f64, m: usize) -> (Vec<f64>, f64) {
    assert!(m >= 1 && b > a);
    let h = (b - a) / m as f64;
    let nodes = (0..m).map(|j| a + (j as f64 + 0.5) * h).collect();
    (nodes, h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn ground_state_peak_value() {
        let psi = oscillator_eigenfunctions(1, 0.0);
        assert_abs_diff_eq!(psi[0], std::f64::consts::PI.powf(-0.25), epsilon = 1e-15);
    }

    #[test]
    fn eigenfunctions_are_orthonormal() {
        // Composite GL-16 over [-8, 8] resolves the first few states easily.
        let (gx, gw) = gauss_legendre(16);
        let panels = 16;
        let (lo, hi) = (-8.0, 8.0);
        let h = (hi - lo) / panels as f64;
        let mut gram = [[0.0; 5]; 5];
        for p in 0..panels {
            let a = lo + p as f64 * h;
            for (x, w) in gx.iter().zip(&gw) {
                let t = a + 0.5 * h * (x + 1.0);
                let ww = 0.5 * h * w;
                let psi = oscillator_eigenfunctions(5, t);
                for i in 0..5 {
                    for j in 0..5 {
                        gram[i][j] += ww * psi[i] * psi[j];
                    }
                }
            }
        }
        for i in 0..5 {
            for j in 0..5 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(gram[i][j], want, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn gauss_legendre_is_exact_on_high_degree_polynomials() {
        let (x, w) = gauss_legendre(16);
        assert_eq!(x.len(), 16);
        // integral of x^30 over [-1,1] is 2/31; degree 30 <= 2*16-1.
        let got: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi.powi(30)).sum();
        assert_abs_diff_eq!(got, 2.0 / 31.0, epsilon = 1e-14);
        // weights sum to the interval length.
        assert_abs_diff_eq!(w.iter().sum::<f64>(), 2.0, epsilon = 1e-14);
    }

    #[test]
    fn midpoint_rule_covers_interval() {
        let (nodes, h) = midpoint_nodes(-1.0, 3.0, 8);
        assert_abs_diff_eq!(h, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(nodes[0], -0.75, epsilon = 1e-15);
        assert_abs_diff_eq!(nodes[7], 2.75, epsilon = 1e-15);
    }
}
