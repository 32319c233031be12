//! Seeded Markov chain Monte Carlo samplers targeting Boltzmann-Gibbs
//! distributions: single-flip Metropolis over symmetric proposals and
//! component-wise heat-bath resampling on product spaces. Runs are
//! reproducible: the same seed yields the same path on every platform
//! (ChaCha12 generator).

use crate::ensembles::DiscreteSystem;
use crate::error::{Error, Result};
use crate::spin::{curie_weiss_energy, ising1d_energy};
use rand::prelude::*;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kernel {
    Metropolis,
    HeatBath,
}

/// Run parameters. `record_every` thins the stored sample path; the
/// empirical distribution always counts every post-burn-in step.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub beta: f64,
    pub steps: u64,
    pub seed: u64,
    pub kernel: Kernel,
    pub record_every: u64,
    /// Fraction of initial steps discarded from the empirical statistics.
    pub burn_in_fraction: f64,
}

impl SamplerConfig {
    pub fn new(beta: f64, steps: u64, seed: u64, kernel: Kernel) -> Result<Self> {
        if beta < 0.0 {
            return Err(Error::Domain("sampler: beta must be >= 0".into()));
        }
        if steps < 1 {
            return Err(Error::Domain("sampler: steps must be >= 1".into()));
        }
        Ok(Self { beta, steps, seed, kernel, record_every: 1, burn_in_fraction: 0.1 })
    }
}

/// What the chain walks on: either an explicit energy table (uniform
/// proposals over the other states) or an n-spin product system (single
/// site flips / site resampling).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum SamplerTarget {
    /// Explicit state list; heat-bath needs a product space, so only
    /// Metropolis applies here.
    Table { energies: Vec<f64> },
    /// Periodic 1-D chain with E = -B sum s_i - J sum s_i s_{i+1}.
    Ising1d { n: u32, field: f64, coupling: f64 },
    /// Mean-field model with E = -B sum s_i - (J/2n) sum_{i != j} s_i s_j.
    CurieWeiss { n: u32, field: f64, coupling: f64 },
}

impl SamplerTarget {
    pub fn from_system(system: &DiscreteSystem) -> Result<Self> {
        if system.degeneracies.iter().any(|&g| g != 1) {
            return Err(Error::Domain(
                "sampler: table targets need unit degeneracies (expand levels first)".into(),
            ));
        }
        Ok(SamplerTarget::Table { energies: system.energies.clone() })
    }

    pub fn state_count(&self) -> Result<usize> {
        match self {
            SamplerTarget::Table { energies } => Ok(energies.len()),
            SamplerTarget::Ising1d { n, .. } | SamplerTarget::CurieWeiss { n, .. } => {
                if !(2..=24).contains(n) {
                    return Err(Error::Size(format!("sampler: n = {n} spins outside 2..=24")));
                }
                Ok(1usize << n)
            }
        }
    }

    pub fn energy(&self, state: usize) -> f64 {
        match self {
            SamplerTarget::Table { energies } => energies[state],
            SamplerTarget::Ising1d { n, field, coupling } => {
                let spins = bits_to_spins(state, *n);
                ising1d_energy(&spins, *field, *coupling)
            }
            SamplerTarget::CurieWeiss { n, field, coupling } => {
                let spins = bits_to_spins(state, *n);
                curie_weiss_energy(&spins, *field, *coupling)
            }
        }
    }

    fn site_count(&self) -> Option<u32> {
        match self {
            SamplerTarget::Table { .. } => None,
            SamplerTarget::Ising1d { n, .. } | SamplerTarget::CurieWeiss { n, .. } => Some(*n),
        }
    }

    /// Per-spin magnetization of a state, when the target is a spin array.
    pub fn magnetization(&self, state: usize) -> Option<f64> {
        let n = self.site_count()?;
        let up = (state as u64 & ((1u64 << n) - 1)).count_ones();
        Some((2.0 * up as f64 - n as f64) / n as f64)
    }

    /// Exact Boltzmann distribution by enumeration.
    pub fn boltzmann(&self, beta: f64) -> Result<Vec<f64>> {
        let k = self.state_count()?;
        let log_w: Vec<f64> = (0..k).map(|s| -beta * self.energy(s)).collect();
        let lz = crate::numerics::log_sum_exp(&log_w);
        Ok(log_w.iter().map(|w| (w - lz).exp()).collect())
    }
}

fn bits_to_spins(state: usize, n: u32) -> Vec<i8> {
    (0..n).map(|i| if state >> i & 1 == 1 { 1 } else { -1 }).collect()
}

/// Log acceptance ratio of the Metropolis rule: min(0, -beta dE).
pub fn metropolis_log_acceptance(beta_delta_e: f64) -> f64 {
    (-beta_delta_e).min(0.0)
}

/// Log acceptance ratio of the heat-bath rule:
/// A = 1/(1 + e^{beta dE}) = (1/2)[1 - tanh(beta dE / 2)].
pub fn heat_bath_log_acceptance(beta_delta_e: f64) -> f64 {
    // -ln(1 + e^{x}) computed stably on both sides
    let x = beta_delta_e;
    if x > 0.0 {
        -x - (-x).exp().ln_1p()
    } else {
        -x.exp().ln_1p()
    }
}

/// Everything a run produces: the (thinned) path, the post-burn-in state
/// histogram and summary statistics.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunResult {
    /// State indices recorded every `record_every` steps (burn-in included,
    /// for inspection).
    pub samples: Vec<u32>,
    /// Post-burn-in empirical distribution over states.
    pub empirical: Vec<f64>,
    pub acceptance_rate: f64,
    pub mean_energy: f64,
    pub mean_magnetization: Option<f64>,
    /// Post-burn-in step count behind the empirical statistics.
    pub counted_steps: u64,
}

/// Run the configured kernel against the target. Metropolis proposes a
/// uniformly random single-site flip (spin targets) or a uniformly random
/// other state (table targets) -- both symmetric -- and accepts with
/// probability min(1, e^{-beta dE}). Heat bath picks a uniformly random
/// site and resamples it from its exact conditional; it requires a product
/// space.
pub fn run_sampler(target: &SamplerTarget, config: &SamplerConfig) -> Result<RunResult> {
    let k = target.state_count()?;
    if k > 1 << 24 {
        return Err(Error::Size("sampler: state space too large to histogram".into()));
    }
    if config.kernel == Kernel::HeatBath && target.site_count().is_none() {
        return Err(Error::Domain(
            "sampler: heat bath needs a product configuration space".into(),
        ));
    }
    let mut rng = ChaCha12Rng::seed_from_u64(config.seed);
    let mut state = rng.gen_range(0..k);
    let mut energy = target.energy(state);
    let burn_in = (config.steps as f64 * config.burn_in_fraction) as u64;
    let mut counts = vec![0u64; k];
    let mut samples = Vec::new();
    let mut accepted = 0u64;
    let mut energy_sum = 0.0;
    let mut magnetization_sum = 0.0;
    let has_spins = target.site_count().is_some();

    for step in 0..config.steps {
        match config.kernel {
            Kernel::Metropolis => {
                let proposal = match target {
                    SamplerTarget::Table { .. } => {
                        // uniform over the other states (symmetric)
                        let mut cand = rng.gen_range(0..k - 1);
                        if cand >= state {
                            cand += 1;
                        }
                        cand
                    }
                    _ => {
                        let site = rng.gen_range(0..target.site_count().unwrap());
                        state ^ (1usize << site)
                    }
                };
                let e_new = target.energy(proposal);
                let log_a = metropolis_log_acceptance(config.beta * (e_new - energy));
                if log_a >= 0.0 || rng.gen::<f64>() < log_a.exp() {
                    state = proposal;
                    energy = e_new;
                    accepted += 1;
                }
            }
            Kernel::HeatBath => {
                let site = rng.gen_range(0..target.site_count().unwrap());
                let flipped = state ^ (1usize << site);
                let e_flip = target.energy(flipped);
                // exact conditional over the two values of this site
                let p_flip = 1.0 / (1.0 + (config.beta * (e_flip - energy)).exp());
                if rng.gen::<f64>() < p_flip {
                    state = flipped;
                    energy = e_flip;
                    accepted += 1;
                }
            }
        }
        if step % config.record_every == 0 {
            samples.push(state as u32);
        }
        if step >= burn_in {
            counts[state] += 1;
            energy_sum += energy;
            if has_spins {
                magnetization_sum += target.magnetization(state).unwrap();
            }
        }
    }

    let counted = config.steps - burn_in;
    let empirical: Vec<f64> = counts.iter().map(|&c| c as f64 / counted as f64).collect();
    Ok(RunResult {
        samples,
        empirical,
        acceptance_rate: accepted as f64 / config.steps as f64,
        mean_energy: energy_sum / counted as f64,
        mean_magnetization: if has_spins {
            Some(magnetization_sum / counted as f64)
        } else {
            None
        },
        counted_steps: counted,
    })
}

/// Total variation distance between two distributions on the same support.
pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

/// Standard error of the mean of a correlated series by batch means.
pub fn batch_standard_error(series: &[f64], batches: usize) -> f64 {
    let b = batches.max(2).min(series.len());
    let size = series.len() / b;
    let means: Vec<f64> = (0..b)
        .map(|i| {
            let chunk = &series[i * size..(i + 1) * size];
            chunk.iter().sum::<f64>() / size as f64
        })
        .collect();
    let grand = means.iter().sum::<f64>() / b as f64;
    let var = means.iter().map(|m| (m - grand) * (m - grand)).sum::<f64>() / (b as f64 - 1.0);
    (var / b as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensembles::{thermo_state, DiscreteSystem};
    use crate::spin::IsingParams;

    #[test]
    fn kernel_log_ratio_identity() {
        // W_rs / W_sr = e^{-beta dE} exactly, for both kernels
        for delta in [-3.0, -0.7, 0.0, 0.4, 2.5, 40.0] {
            for beta in [0.1, 1.0, 5.0] {
                let x = beta * delta;
                let metro = metropolis_log_acceptance(x) - metropolis_log_acceptance(-x);
                assert!((metro + x).abs() < 1e-14, "metropolis at {x}");
                let hb = heat_bath_log_acceptance(x) - heat_bath_log_acceptance(-x);
                assert!((hb + x).abs() < 1e-14, "heat bath at {x}");
            }
        }
        // heat-bath single site: A = e^{-beta d}/(1 + e^{-beta d}); 1/2 at d=0
        assert!((heat_bath_log_acceptance(0.0).exp() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn infinite_temperature_is_uniform() {
        let target = SamplerTarget::Table {
            energies: vec![0.0, 1.0, -0.5, 2.0, 0.3, 1.7, -1.0, 0.8],
        };
        let config = SamplerConfig::new(0.0, 1_000_000, 5, Kernel::Metropolis).unwrap();
        let run = run_sampler(&target, &config).unwrap();
        let uniform = vec![1.0 / 8.0; 8];
        let tv = total_variation(&run.empirical, &uniform);
        assert!(tv < 0.02, "TV to uniform = {tv}");
        // all moves accepted at beta = 0
        assert!((run.acceptance_rate - 1.0).abs() < 1e-12);
    }

    #[test]
    fn metropolis_matches_boltzmann_on_table() {
        let target = SamplerTarget::Table {
            energies: vec![0.0, 0.8, -0.4, 1.5, 0.2, -0.9, 0.6, 1.1],
        };
        let beta = 0.7;
        let config = SamplerConfig::new(beta, 1_000_000, 11, Kernel::Metropolis).unwrap();
        let run = run_sampler(&target, &config).unwrap();
        let exact = target.boltzmann(beta).unwrap();
        let tv = total_variation(&run.empirical, &exact);
        assert!(tv < 0.02, "TV = {tv}");
    }

    #[test]
    fn curie_weiss_magnetization_matches_enumeration() {
        let n = 4;
        let (field, coupling, beta) = (0.0, 0.5, 1.0); // beta J = 0.5
        let target = SamplerTarget::CurieWeiss { n, field, coupling };
        let config = SamplerConfig::new(beta, 400_000, 3, Kernel::Metropolis).unwrap();
        let run = run_sampler(&target, &config).unwrap();
        // exact enumeration oracle
        let exact_p = target.boltzmann(beta).unwrap();
        let exact_m: f64 = exact_p
            .iter()
            .enumerate()
            .map(|(s, p)| p * target.magnetization(s).unwrap())
            .sum();
        // batch-mean standard error from the recorded series
        let series: Vec<f64> = run
            .samples
            .iter()
            .skip(run.samples.len() / 10)
            .map(|&s| target.magnetization(s as usize).unwrap())
            .collect();
        let se = batch_standard_error(&series, 100).max(1e-6);
        let got = run.mean_magnetization.unwrap();
        assert!(
            (got - exact_m).abs() < 3.0 * se,
            "m = {got} vs exact {exact_m} (3 se = {})",
            3.0 * se
        );
    }

    #[test]
    fn ising_energy_matches_enumerated_thermo_state() {
        let n = 8u32;
        let (field, coupling, beta) = (0.0, 1.0, 0.7);
        let target = SamplerTarget::Ising1d { n, field, coupling };
        let config = SamplerConfig::new(beta, 400_000, 9, Kernel::Metropolis).unwrap();
        let run = run_sampler(&target, &config).unwrap();
        // exact canonical mean energy from the enumerated system
        let energies: Vec<f64> = (0..(1usize << n)).map(|s| target.energy(s)).collect();
        let system = DiscreteSystem::simple("ising-enum", energies).unwrap();
        let exact = thermo_state(&system, beta).unwrap();
        let series: Vec<f64> = run
            .samples
            .iter()
            .skip(run.samples.len() / 10)
            .map(|&s| target.energy(s as usize))
            .collect();
        let se = batch_standard_error(&series, 100).max(1e-6);
        assert!(
            (run.mean_energy - exact.mean_energy).abs() < 3.0 * se,
            "E = {} vs exact {} (3 se = {})",
            run.mean_energy,
            exact.mean_energy,
            3.0 * se
        );
        // chain parameters line up with the transfer-matrix module
        let _ = IsingParams::new(beta, field, coupling).unwrap();
    }

    #[test]
    fn heat_bath_matches_boltzmann() {
        // 3-spin system: 8 states
        let target = SamplerTarget::Ising1d { n: 3, field: 0.2, coupling: 0.8 };
        let beta = 0.9;
        let config = SamplerConfig::new(beta, 1_000_000, 17, Kernel::HeatBath).unwrap();
        let run = run_sampler(&target, &config).unwrap();
        let exact = target.boltzmann(beta).unwrap();
        let tv = total_variation(&run.empirical, &exact);
        assert!(tv < 0.02, "TV = {tv}");
    }

    #[test]
    fn heat_bath_requires_product_space() {
        let target = SamplerTarget::Table { energies: vec![0.0, 1.0] };
        let config = SamplerConfig::new(1.0, 100, 0, Kernel::HeatBath).unwrap();
        assert!(run_sampler(&target, &config).is_err());
    }

    #[test]
    fn identical_seeds_identical_paths() {
        let target = SamplerTarget::CurieWeiss { n: 6, field: 0.1, coupling: 1.0 };
        let config = SamplerConfig::new(0.8, 20_000, 123, Kernel::HeatBath).unwrap();
        let a = run_sampler(&target, &config).unwrap();
        let b = run_sampler(&target, &config).unwrap();
        assert_eq!(a.samples, b.samples);
        assert_eq!(a.mean_energy, b.mean_energy);
        // a different seed diverges
        let mut other = config;
        other.seed = 124;
        let c = run_sampler(&target, &other).unwrap();
        assert_ne!(a.samples, c.samples);
    }

    #[test]
    fn table_target_from_discrete_system() {
        let system = DiscreteSystem::simple("t", vec![0.0, 0.5, 1.0]).unwrap();
        let target = SamplerTarget::from_system(&system).unwrap();
        assert_eq!(target.state_count().unwrap(), 3);
        let degenerate = DiscreteSystem::new("d", vec![0.0], vec![2]).unwrap();
        assert!(SamplerTarget::from_system(&degenerate).is_err());
    }
}
