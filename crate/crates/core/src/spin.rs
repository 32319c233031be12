//! Exactly solvable interacting-spin models: the 1-D Ising chain by transfer
//! matrix (with a brute-force enumeration oracle for small chains) and the
//! mean-field Curie-Weiss model by fixed-point analysis.

use crate::asymptotics::h2_unchecked;
use crate::error::{Error, Result};
use crate::numerics::{bisect, grid_then_golden_max, log_sum_exp};
use serde::{Deserialize, Serialize};

/// Ising couplings. `h = beta B` and `K = beta J` are the dimensionless
/// field and coupling the transfer matrix is written in.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct IsingParams {
    pub beta: f64,
    pub field: f64,
    pub coupling: f64,
}

impl IsingParams {
    pub fn new(beta: f64, field: f64, coupling: f64) -> Result<Self> {
        if beta < 0.0 {
            return Err(Error::Domain(format!("IsingParams: beta = {beta} < 0")));
        }
        Ok(Self { beta, field, coupling })
    }

    pub fn h(&self) -> f64 {
        self.beta * self.field
    }

    pub fn k(&self) -> f64 {
        self.beta * self.coupling
    }
}

/// Per-spin log-partition of the 1-D chain: ln of the dominant transfer
/// matrix eigenvalue
/// lambda_1 = e^K cosh h + sqrt(e^{-2K} + e^{2K} sinh^2 h),
/// computed with e^K factored out so K up to a few hundred stays finite.
pub fn ising1d_phi(params: &IsingParams) -> f64 {
    let h = params.h();
    let k = params.k();
    // lambda_1 = e^K [cosh h + sqrt(e^{-4K} + sinh^2 h)]
    k + (h.cosh() + ((-4.0 * k).exp() + h.sinh() * h.sinh()).sqrt()).ln()
}

/// Both transfer-matrix eigenvalues (lambda_1 dominant).
pub fn ising1d_eigenvalues(params: &IsingParams) -> (f64, f64) {
    let h = params.h();
    let k = params.k();
    let root = ((-2.0 * k).exp() + (2.0 * k).exp() * h.sinh() * h.sinh()).sqrt();
    (k.exp() * h.cosh() + root, k.exp() * h.cosh() - root)
}

/// Closed-form per-spin magnetization
/// m(beta, B) = sinh(beta B) / sqrt(e^{-4 beta J} + sinh^2(beta B)).
pub fn ising1d_magnetization(params: &IsingParams) -> f64 {
    let h = params.h();
    let k = params.k();
    if h == 0.0 {
        return 0.0;
    }
    h.sinh() / ((-4.0 * k).exp() + h.sinh() * h.sinh()).sqrt()
}

/// Exact ln Z by enumeration over all 2^n configurations with the periodic
/// boundary s_{n+1} = s_1. Capped at n = 20.
pub fn ising1d_exact(n: u32, params: &IsingParams) -> Result<f64> {
    if !(2..=20).contains(&n) {
        return Err(Error::Size(format!("ising1d_exact: n = {n} outside 2..=20")));
    }
    let h = params.h();
    let k = params.k();
    let states = 1u32 << n;
    let spin = |bits: u32, i: u32| if bits >> (i % n) & 1 == 1 { 1.0 } else { -1.0 };
    let mut acc = crate::numerics::OnlineLogSumExp::new();
    for bits in 0..states {
        let mut field_sum = 0.0;
        let mut bond_sum = 0.0;
        for i in 0..n {
            field_sum += spin(bits, i);
            bond_sum += spin(bits, i) * spin(bits, i + 1);
        }
        acc.push(h * field_sum + k * bond_sum);
    }
    Ok(acc.value())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SpinPhase {
    Paramagnetic,
    Ordered,
}

/// Curie-Weiss fixed-point analysis at one (beta, B, J) point.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CwSolution {
    /// All solutions of m = tanh(beta B + beta J m) in [-1, 1].
    pub fixed_points: Vec<f64>,
    /// The fixed point maximizing psi(m) = h2((1+m)/2) + beta B m + beta J m^2/2.
    pub global_maximizer: f64,
    /// psi at the global maximizer: the per-spin log-partition.
    pub phi: f64,
    pub phase: SpinPhase,
}

fn cw_psi(m: f64, h: f64, k: f64) -> f64 {
    h2_unchecked(0.5 * (1.0 + m)) + h * m + 0.5 * k * m * m
}

/// Solve the Curie-Weiss model: all fixed points of m = tanh(h + K m) by a
/// sign-change scan over a 1e4-point grid refined by bisection, classified
/// through psi'' and ranked by psi. Ties between symmetric maxima at B = 0
/// are broken toward the nonnegative branch.
pub fn curie_weiss_solve(params: &IsingParams) -> Result<CwSolution> {
    if params.coupling < 0.0 {
        return Err(Error::Domain("curie_weiss_solve: J must be >= 0".into()));
    }
    let h = params.h();
    let k = params.k();
    let g = |m: f64| (h + k * m).tanh() - m;
    const GRID: usize = 10_000;
    let lo = -1.0 + 1e-12;
    let hi = 1.0 - 1e-12;
    let mut fixed_points = Vec::new();
    let mut prev_m = lo;
    let mut prev_g = g(lo);
    for i in 1..=GRID {
        let m = lo + (hi - lo) * i as f64 / GRID as f64;
        let gm = g(m);
        if prev_g == 0.0 {
            fixed_points.push(prev_m);
        } else if prev_g * gm < 0.0 {
            fixed_points.push(bisect(g, prev_m, m, 1e-13)?);
        }
        prev_m = m;
        prev_g = gm;
    }
    if g(hi) == 0.0 {
        fixed_points.push(hi);
    }
    if fixed_points.is_empty() {
        // cannot happen: g(-1) > 0 > g(1) by continuity
        return Err(Error::Convergence("curie_weiss_solve: no fixed point found".into()));
    }
    fixed_points.dedup_by(|a, b| (*a - *b).abs() < 1e-10);

    let mut best = fixed_points[0];
    let mut best_psi = cw_psi(best, h, k);
    for &m in &fixed_points[1..] {
        let psi = cw_psi(m, h, k);
        if psi > best_psi + 1e-14 || ((psi - best_psi).abs() <= 1e-14 && m > best) {
            best = m;
            best_psi = psi;
        }
    }

    let phase = if params.field == 0.0 {
        if best.abs() > 1e-6 {
            SpinPhase::Ordered
        } else {
            SpinPhase::Paramagnetic
        }
    } else if k > 1.0 {
        SpinPhase::Ordered
    } else {
        SpinPhase::Paramagnetic
    };

    Ok(CwSolution { fixed_points, global_maximizer: best, phi: best_psi, phase })
}

/// Second derivative of psi at m (for classifying fixed points).
pub fn cw_psi_second_derivative(m: f64, params: &IsingParams) -> f64 {
    -1.0 / (1.0 - m * m) + params.k()
}

/// The two routes to the Curie-Weiss exponent: the magnetization form
/// max_m psi(m) and the auxiliary-field form
/// ln 2 + max_z [ln cosh(h+z) - z^2/(2K)]. Returns
/// (psi route, auxiliary route, maximizing z); the maximizing z satisfies
/// z = K m*.
pub fn curie_weiss_landau_check(params: &IsingParams) -> Result<(f64, f64, f64)> {
    let k = params.k();
    if k <= 0.0 {
        return Err(Error::Domain("curie_weiss_landau_check: K must be > 0".into()));
    }
    let h = params.h();
    let psi_route = curie_weiss_solve(params)?.phi;
    let objective = |z: f64| (h + z).cosh().ln() - z * z / (2.0 * k);
    // |z*| = K |m*| <= K; scan a bracket with margin
    let span = k.abs() + h.abs() + 2.0;
    let (z_star, v) = grid_then_golden_max(&objective, -span, span, 8001, 1e-12);
    Ok((psi_route, 2f64.ln() + v, z_star))
}

/// Per-spin log-partition of independent spins in a field (the J = 0
/// reduction): ln(2 cosh h), stable for large |h|.
pub fn free_spin_phi(h: f64) -> f64 {
    h.abs() + (-2.0 * h.abs()).exp().ln_1p()
}

/// Energy of one configuration of the n-spin Curie-Weiss Hamiltonian
/// E(s) = -B sum s_i - (J / 2n) sum_{i != j} s_i s_j; shared with the
/// samplers and enumeration oracles.
pub fn curie_weiss_energy(spins: &[i8], field: f64, coupling: f64) -> f64 {
    let n = spins.len() as f64;
    let total: f64 = spins.iter().map(|&s| s as f64).sum();
    // sum_{i != j} s_i s_j = total^2 - n
    -field * total - coupling / (2.0 * n) * (total * total - n)
}

/// Energy of one configuration of the periodic 1-D Ising chain.
pub fn ising1d_energy(spins: &[i8], field: f64, coupling: f64) -> f64 {
    let n = spins.len();
    let mut e = 0.0;
    for i in 0..n {
        let s = spins[i] as f64;
        let s_next = spins[(i + 1) % n] as f64;
        e -= field * s + coupling * s * s_next;
    }
    e
}

/// ln Z of the n-spin Curie-Weiss model by exact enumeration (n <= 20).
pub fn curie_weiss_exact(n: u32, params: &IsingParams) -> Result<f64> {
    if !(2..=20).contains(&n) {
        return Err(Error::Size(format!("curie_weiss_exact: n = {n} outside 2..=20")));
    }
    let mut terms = Vec::with_capacity(1 << n);
    let mut spins = vec![0i8; n as usize];
    for bits in 0u32..(1 << n) {
        for (i, s) in spins.iter_mut().enumerate() {
            *s = if bits >> i & 1 == 1 { 1 } else { -1 };
        }
        terms.push(-params.beta * curie_weiss_energy(&spins, params.field, params.coupling));
    }
    Ok(log_sum_exp(&terms))
}
