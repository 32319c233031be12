//! Exact canonical-ensemble computations on finite discrete systems and 1-D
//! continuous Hamiltonians: partition functions, log-moment derivatives,
//! free energies, Gibbs-inequality bounds, equipartition checks,
//! grand-partition products and variational free-energy bounds.

use crate::error::{Error, Result};
use crate::numerics::{adaptive_simpson, golden_max, log_sum_exp};
use serde::{Deserialize, Serialize};

/// A finite list of energy levels with degeneracies; the exact-computation
/// substrate for Z(beta). Energies are in k = 1 units.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DiscreteSystem {
    pub label: String,
    pub energies: Vec<f64>,
    pub degeneracies: Vec<u64>,
}

impl DiscreteSystem {
    pub fn new(label: impl Into<String>, energies: Vec<f64>, degeneracies: Vec<u64>) -> Result<Self> {
        if energies.is_empty() {
            return Err(Error::Shape("discrete system needs at least one level".into()));
        }
        if energies.len() != degeneracies.len() {
            return Err(Error::Shape(format!(
                "{} energies vs {} degeneracies",
                energies.len(),
                degeneracies.len()
            )));
        }
        if degeneracies.iter().any(|&g| g == 0) {
            return Err(Error::Shape("degeneracies must be >= 1".into()));
        }
        if energies.iter().any(|e| !e.is_finite()) {
            return Err(Error::Shape("energies must be finite".into()));
        }
        Ok(Self { label: label.into(), energies, degeneracies })
    }

    /// All degeneracies 1.
    pub fn simple(label: impl Into<String>, energies: Vec<f64>) -> Result<Self> {
        let g = vec![1; energies.len()];
        Self::new(label, energies, g)
    }

    /// Two levels {0, eps0}.
    pub fn two_level(eps0: f64) -> Self {
        Self::simple("two-level", vec![0.0, eps0]).unwrap()
    }

    /// N independent two-level particles folded into N+1 binomial levels.
    /// Degeneracies are exact binomials, so N must stay below 63 or so;
    /// the defect-count examples use N = 100 via `schottky_log`.
    pub fn schottky(n: u64, eps0: f64) -> Result<Self> {
        let energies: Vec<f64> = (0..=n).map(|k| k as f64 * eps0).collect();
        let mut degeneracies = Vec::with_capacity(n as usize + 1);
        for k in 0..=n {
            let mut c = 1u128;
            for i in 0..k {
                c = c * (n - i) as u128 / (i + 1) as u128;
            }
            degeneracies.push(u64::try_from(c).map_err(|_| {
                Error::Size(format!("schottky: C({n},{k}) exceeds u64; use schottky_log"))
            })?);
        }
        Self::new(format!("schottky-{n}"), energies, degeneracies)
    }

    pub fn len(&self) -> usize {
        self.energies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.energies.is_empty()
    }

    pub fn total_states(&self) -> f64 {
        self.degeneracies.iter().map(|&g| g as f64).sum()
    }

    pub fn ground_state_energy(&self) -> f64 {
        self.energies.iter().copied().fold(f64::INFINITY, f64::min)
    }

    fn log_weights(&self, beta: f64) -> Vec<f64> {
        self.energies
            .iter()
            .zip(&self.degeneracies)
            .map(|(&e, &g)| (g as f64).ln() - beta * e)
            .collect()
    }

    /// Level probabilities of the Boltzmann distribution at `beta`.
    pub fn boltzmann(&self, beta: f64) -> Vec<f64> {
        let terms = self.log_weights(beta);
        let lz = log_sum_exp(&terms);
        terms.iter().map(|t| (t - lz).exp()).collect()
    }
}

/// ln Z(beta) = ln sum_i g_i exp(-beta E_i), stable for beta up to 1e6.
pub fn partition_function(system: &DiscreteSystem, beta: f64) -> Result<f64> {
    if beta < 0.0 {
        return Err(Error::Domain(format!("partition_function: beta = {beta} < 0")));
    }
    Ok(log_sum_exp(&system.log_weights(beta)))
}

/// Macroscopic summary of a canonical state. `entropy` counts microstates,
/// so H = ln Z + beta <E> holds exactly.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ThermoState {
    pub beta: f64,
    pub log_z: f64,
    pub mean_energy: f64,
    pub var_energy: f64,
    pub entropy: f64,
    pub free_energy: f64,
}

/// Mean and variance of the energy by exact reweighted sums (the log-moment
/// derivatives), entropy from -sum P ln(P/g).
pub fn thermo_state(system: &DiscreteSystem, beta: f64) -> Result<ThermoState> {
    if beta <= 0.0 {
        return Err(Error::Domain(format!("thermo_state: beta = {beta} must be > 0")));
    }
    let log_z = partition_function(system, beta)?;
    let probs = system.boltzmann(beta);
    let mean: f64 = probs.iter().zip(&system.energies).map(|(p, e)| p * e).sum();
    let var: f64 = probs
        .iter()
        .zip(&system.energies)
        .map(|(p, e)| p * (e - mean) * (e - mean))
        .sum();
    let entropy: f64 = probs
        .iter()
        .zip(&system.degeneracies)
        .filter(|(p, _)| **p > 0.0)
        .map(|(p, &g)| -p * (p / g as f64).ln())
        .sum();
    Ok(ThermoState {
        beta,
        log_z,
        mean_energy: mean,
        var_energy: var,
        entropy,
        free_energy: -log_z / beta,
    })
}

/// Gibbs' inequality ln Z1 >= ln Z0 + beta <E0 - E1>_0 over a shared state
/// list. Returns the lower bound and the gap ln Z1 - bound, which equals
/// D(P0 || P1).
pub fn gibbs_bound(
    energies0: &[f64],
    energies1: &[f64],
    degeneracies: &[u64],
    beta: f64,
) -> Result<(f64, f64)> {
    if energies0.len() != energies1.len() || energies0.len() != degeneracies.len() {
        return Err(Error::Shape("gibbs_bound: mismatched state lists".into()));
    }
    if beta <= 0.0 {
        return Err(Error::Domain("gibbs_bound: beta must be > 0".into()));
    }
    let sys0 = DiscreteSystem::new("sys0", energies0.to_vec(), degeneracies.to_vec())?;
    let sys1 = DiscreteSystem::new("sys1", energies1.to_vec(), degeneracies.to_vec())?;
    let lz0 = partition_function(&sys0, beta)?;
    let lz1 = partition_function(&sys1, beta)?;
    let p0 = sys0.boltzmann(beta);
    let mean_diff: f64 = p0
        .iter()
        .zip(energies0.iter().zip(energies1))
        .map(|(p, (e0, e1))| p * (e0 - e1))
        .sum();
    let bound = lz0 + beta * mean_diff;
    Ok((bound, lz1 - bound))
}

/// F_Q - F_P for a non-equilibrium distribution Q over the system's levels;
/// equals D(Q || P_beta) / beta.
pub fn free_energy_divergence(q: &[f64], beta: f64, system: &DiscreteSystem) -> Result<f64> {
    if q.len() != system.len() {
        return Err(Error::Shape("free_energy_divergence: distribution/system mismatch".into()));
    }
    if beta <= 0.0 {
        return Err(Error::Domain("free_energy_divergence: beta must be > 0".into()));
    }
    let total: f64 = q.iter().sum();
    if (total - 1.0).abs() > 1e-12 || q.iter().any(|&p| p < 0.0) {
        return Err(Error::Normalization(format!(
            "free_energy_divergence: sum(Q) = {total}, entries must be >= 0"
        )));
    }
    let log_z = partition_function(system, beta)?;
    let mean_q: f64 = q.iter().zip(&system.energies).map(|(p, e)| p * e).sum();
    let entropy_q: f64 = q
        .iter()
        .zip(&system.degeneracies)
        .filter(|(p, _)| **p > 0.0)
        .map(|(p, &g)| -p * (p / g as f64).ln())
        .sum();
    let f_q = mean_q - entropy_q / beta;
    let f_p = -log_z / beta;
    Ok(f_q - f_p)
}

/// Result of the generalized equipartition evaluation for the power-law
/// Hamiltonian E(x) = alpha |x|^theta.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Equipartition {
    /// <alpha |X|^theta> by quadrature.
    pub mean_energy: f64,
    /// Analytic target 1/(beta theta).
    pub energy_target: f64,
    /// <X E'(X)> by quadrature.
    pub virial: f64,
    /// Analytic target 1/beta.
    pub virial_target: f64,
}

/// Generalized equipartition for E(x) = alpha |x|^theta under the Boltzmann
/// weight: <E> = kT/theta and <X E'(X)> = kT.
pub fn equipartition(theta: f64, alpha: f64, beta: f64) -> Result<Equipartition> {
    if theta <= 0.0 || alpha <= 0.0 || beta <= 0.0 {
        return Err(Error::Domain(format!(
            "equipartition: theta = {theta}, alpha = {alpha}, beta = {beta} must all be > 0"
        )));
    }
    // Truncate where beta*alpha*x^theta ~ 690 (integrand below 1e-300) and
    // integrate in t = ln x, which keeps the panel count bounded for every
    // exponent: int f(x) dx = int f(e^t) e^t dt. The lower cut at x = e^-45
    // contributes less than 1e-16 in relative terms.
    let x_max = (690.0 / (beta * alpha)).powf(1.0 / theta);
    let t_hi = x_max.ln();
    let t_lo = (x_max.ln() - 110.0).min(-45.0);
    let weight = |x: f64| (-beta * alpha * x.powf(theta)).exp();
    let in_log = |f: &dyn Fn(f64) -> f64, lo: f64, hi: f64| {
        adaptive_simpson(
            &|t: f64| {
                let x = t.exp();
                f(x) * x
            },
            lo,
            hi,
            1e-11,
        )
    };
    let z0 = in_log(&weight, t_lo, t_hi)?;
    let energy_num = in_log(&|x: f64| alpha * x.powf(theta) * weight(x), t_lo, t_hi)?;
    let virial_num = in_log(&|x: f64| alpha * theta * x.powf(theta) * weight(x), t_lo, t_hi)?;
    if z0 <= 0.0 || !z0.is_finite() {
        return Err(Error::Quadrature("equipartition: normalization integral failed".into()));
    }
    Ok(Equipartition {
        mean_energy: energy_num / z0,
        energy_target: 1.0 / (beta * theta),
        virial: virial_num / z0,
        virial_target: 1.0 / beta,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum QuantumStatistics {
    Boson,
    Fermion,
}

/// Grand partition function over single-particle levels at fugacity z:
/// ln Xi = sum_r -+ ln(1 -+ z e^{-beta eps_r}); mean particle number from the
/// analytic per-level occupancies.
pub fn grand_partition(
    levels: &[f64],
    beta: f64,
    z: f64,
    statistics: QuantumStatistics,
) -> Result<(f64, f64)> {
    if levels.is_empty() {
        return Err(Error::Shape("grand_partition: no levels".into()));
    }
    if z <= 0.0 {
        return Err(Error::Domain("grand_partition: fugacity must be > 0".into()));
    }
    if statistics == QuantumStatistics::Boson {
        let min_e = levels.iter().copied().fold(f64::INFINITY, f64::min);
        if z * (-beta * min_e).exp() >= 1.0 {
            return Err(Error::Convergence(format!(
                "grand_partition: boson series diverges, z e^(-beta min eps) = {} >= 1",
                z * (-beta * min_e).exp()
            )));
        }
    }
    let mut ln_xi = 0.0;
    let mut mean_n = 0.0;
    for &eps in levels {
        let w = z * (-beta * eps).exp();
        match statistics {
            QuantumStatistics::Boson => {
                ln_xi -= (1.0 - w).ln();
                mean_n += w / (1.0 - w);
            }
            QuantumStatistics::Fermion => {
                ln_xi += (1.0 + w).ln();
                mean_n += w / (1.0 + w);
            }
        }
    }
    Ok((ln_xi, mean_n))
}

/// Quartic-well oscillator E = p^2/(2m) + A z^4 with the temperature and
/// (optional) Planck constant entering the classical state count. The Planck
/// constant defaults to 1; it cancels in every ratio this crate verifies.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct OscillatorProblem {
    pub amplitude: f64,
    pub mass: f64,
    pub k_t: f64,
    pub planck_h: f64,
}

impl OscillatorProblem {
    pub fn new(amplitude: f64, mass: f64, k_t: f64) -> Result<Self> {
        Self::with_planck(amplitude, mass, k_t, 1.0)
    }

    pub fn with_planck(amplitude: f64, mass: f64, k_t: f64, planck_h: f64) -> Result<Self> {
        if amplitude <= 0.0 || mass <= 0.0 || k_t <= 0.0 || planck_h <= 0.0 {
            return Err(Error::Domain("oscillator: all parameters must be > 0".into()));
        }
        Ok(Self { amplitude, mass, k_t, planck_h })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TrialPotential {
    /// Infinite square well of width L; optimum L* = (20 kT / A)^{1/4}.
    SquareWell,
    /// Harmonic well (m w0^2 / 2) z^2; optimum w0* = (12 A kT)^{1/4}/sqrt(m).
    Harmonic,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct VariationalBound {
    pub ln_z_bound: f64,
    pub ln_z_exact: f64,
    /// exp(bound - exact) = Z_approx / Z_exact, in (0, 1].
    pub ratio: f64,
    /// The optimal trial parameter (L* or w0*).
    pub optimal_parameter: f64,
}

/// Variational lower bound on ln Z of the quartic oscillator from the Gibbs
/// inequality, evaluated at the closed-form optimal trial parameter, next to
/// the exact ln Z by quadrature.
pub fn variational_bound_oscillator(
    problem: &OscillatorProblem,
    trial: TrialPotential,
) -> Result<VariationalBound> {
    let OscillatorProblem { amplitude: a, mass: m, k_t, planck_h: h } = *problem;
    let momentum_factor = (2.0 * std::f64::consts::PI * m * k_t).sqrt() / h;

    let (bound, parameter) = match trial {
        TrialPotential::SquareWell => {
            let l_star = (20.0 * k_t / a).powf(0.25);
            // ln Z0 + beta <E0 - E>_0 = ln(L sqrt(2 pi m kT)/h) - A L^4/(80 kT)
            let b = (l_star * momentum_factor).ln() - a * l_star.powi(4) / (80.0 * k_t);
            (b, l_star)
        }
        TrialPotential::Harmonic => {
            let w_star = (12.0 * a * k_t).powf(0.25) / m.sqrt();
            let hbar = h / (2.0 * std::f64::consts::PI);
            let b = (k_t / (hbar * w_star)).ln() + 0.5
                - 3.0 * a * k_t / (m * m * w_star.powi(4));
            (b, w_star)
        }
    };

    // Exact: Z = (sqrt(2 pi m kT)/h) * int exp(-A z^4 / kT) dz
    let z_cut = (690.0 * k_t / a).powf(0.25);
    let config = 2.0 * adaptive_simpson(&|z: f64| (-a * z.powi(4) / k_t).exp(), 0.0, z_cut, 1e-12)?;
    let exact = momentum_factor.ln() + config.ln();

    Ok(VariationalBound {
        ln_z_bound: bound,
        ln_z_exact: exact,
        ratio: (bound - exact).exp(),
        optimal_parameter: parameter,
    })
}

/// Numerically re-optimized variational bound (golden section over the trial
/// parameter), used to confirm the closed-form optima.
pub fn variational_bound_reoptimized(
    problem: &OscillatorProblem,
    trial: TrialPotential,
) -> Result<(f64, f64)> {
    let OscillatorProblem { amplitude: a, mass: m, k_t, planck_h: h } = *problem;
    let momentum_factor = (2.0 * std::f64::consts::PI * m * k_t).sqrt() / h;
    let objective = |p: f64| match trial {
        TrialPotential::SquareWell => (p * momentum_factor).ln() - a * p.powi(4) / (80.0 * k_t),
        TrialPotential::Harmonic => {
            let hbar = h / (2.0 * std::f64::consts::PI);
            (k_t / (hbar * p)).ln() + 0.5 - 3.0 * a * k_t / (m * m * p.powi(4))
        }
    };
    let guess = match trial {
        TrialPotential::SquareWell => (20.0 * k_t / a).powf(0.25),
        TrialPotential::Harmonic => (12.0 * a * k_t).powf(0.25) / m.sqrt(),
    };
    let (p_star, best) = golden_max(objective, guess * 0.05, guess * 20.0, 1e-12 * guess);
    Ok((p_star, best))
}
