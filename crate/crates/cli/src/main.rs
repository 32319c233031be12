//! Command-line front end: every library subsystem exposed as a subcommand
//! with CSV/JSON output, plus sweep drivers for tables and phase diagrams.
//!
//! Exit codes: 0 success, 2 domain/shape errors, 3 numerical
//! non-convergence, 64 malformed flags.

mod output;
mod sweep;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use output::{Cell, Table};
use rayon::prelude::*;
use statmech::asymptotics::LN_2;
use statmech::coding::{
    decoder_phase, erasure_exponent_direct, erasure_exponent_jensen, ferro_exponent, pc_exponent,
    rd_mmse_representation, rd_parametric, ze_phi, BscSpec, RdProblem,
};
use statmech::dynamics::{evolve, monotone_monitor, ChainSpec, MonitorFunctional};
use statmech::ensembles::{partition_function, thermo_state, DiscreteSystem};
use statmech::error::Error as CoreError;
use statmech::estimation::{
    de_bruijn_check, fisher_information, generalized_temperature, hmm_entropy_rate_monte_carlo,
    hmm_entropy_upper_bound, GriddedDensity, HmmBoundOptions, HmmSpec,
};
use statmech::rem::{
    grem_phi, rem_field_beta_c, rem_field_phi, rem_monte_carlo, rem_phi, rem_susceptibility,
    sk_capacity, GremSpec,
};
use statmech::sampler::{run_sampler, Kernel, SamplerConfig, SamplerTarget};
use statmech::spin::{
    curie_weiss_landau_check, curie_weiss_solve, ising1d_exact, ising1d_magnetization,
    ising1d_phi, IsingParams,
};
use sweep::Sweep;

/// Default RNG seed when neither --seed nor STATMECH_SEED is given.
const DEFAULT_SEED: u64 = 1729;

#[derive(Parser)]
#[command(
    name = "statmech",
    version,
    about = "Partition-function toolbox: exact ensembles, solvable spin models, \
             random-energy phase diagrams, coding exponents, rate-distortion, \
             Markov dynamics and MCMC sampling"
)]
struct Cli {
    #[command(flatten)]
    global: GlobalOpts,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct GlobalOpts {
    /// Write the table here instead of stdout
    #[arg(long, global = true)]
    out: Option<std::path::PathBuf>,
    /// Output format
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// RNG seed (overrides the STATMECH_SEED environment variable)
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for sweep subcommands
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
}

#[derive(Clone, Copy, ValueEnum, PartialEq)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Canonical thermodynamics of a finite level system over a beta sweep
    Thermo {
        /// Comma-separated energy levels
        #[arg(long, conflicts_with = "system")]
        energies: Option<String>,
        /// Comma-separated level degeneracies (defaults to all 1)
        #[arg(long)]
        degeneracies: Option<String>,
        /// JSON file with {label, energies[], degeneracies[]}
        #[arg(long)]
        system: Option<std::path::PathBuf>,
        /// Inverse temperature or sweep start:stop:step
        #[arg(long, default_value = "1.0")]
        beta: String,
    },
    /// 1-D nearest-neighbor chain: per-spin free energy and magnetization
    Ising {
        #[arg(long, default_value = "1.0")]
        beta: String,
        #[arg(long, default_value_t = 0.0)]
        field: f64,
        #[arg(long, default_value_t = 1.0)]
        coupling: f64,
        /// Also enumerate a finite periodic chain of this length (<= 20)
        #[arg(long)]
        exact_n: Option<u32>,
    },
    /// Mean-field (infinite-range) model: fixed points and phase
    Cw {
        #[arg(long, default_value = "1.0")]
        beta: String,
        #[arg(long, default_value_t = 0.0)]
        field: f64,
        #[arg(long, default_value_t = 1.0)]
        coupling: f64,
        /// Compare against the auxiliary-field route
        #[arg(long)]
        landau: bool,
    },
    /// Random-energy landscape: free energy, entropy, susceptibility,
    /// optional field and finite-size Monte Carlo
    Rem {
        #[arg(long, default_value = "0:3:0.1")]
        beta: String,
        #[arg(long, default_value_t = 1.0)]
        coupling: f64,
        #[arg(long)]
        field: Option<f64>,
        /// Monte Carlo spin count (10..=24); adds a sample column
        #[arg(long)]
        mc_n: Option<u32>,
        /// Instead of the free-energy sweep, solve the metastable-state
        /// capacity at this threshold
        #[arg(long)]
        sk_threshold: Option<f64>,
    },
    /// Two-stage hierarchical random-energy landscape
    Grem {
        #[arg(long, default_value = "0:4:0.1")]
        beta: String,
        #[arg(long, default_value_t = 1.0)]
        coupling: f64,
        #[arg(long)]
        r1: f64,
        #[arg(long)]
        a1: f64,
    },
    /// Finite-temperature decoder over a binary symmetric channel:
    /// codeword-sum free energies and the phase at each point
    Coding {
        #[arg(long)]
        p: f64,
        #[arg(long)]
        rate: f64,
        #[arg(long, default_value = "0.1:3:0.1")]
        beta: String,
    },
    /// Parametric rate-distortion curve (binary symmetric source by
    /// default, or a JSON problem file)
    Rd {
        /// Distortion level or sweep
        #[arg(long, default_value = "0.02:0.4:0.02")]
        distortion: String,
        /// JSON file with {source[], coding[], distortion[][]}
        #[arg(long)]
        problem: Option<std::path::PathBuf>,
        /// Also print the estimation-integral representation at this beta
        #[arg(long)]
        mmse_beta: Option<f64>,
    },
    /// Joint source-channel phase boundaries
    Jscc {
        #[arg(long)]
        p: f64,
        #[arg(long)]
        q: f64,
        #[arg(long, default_value_t = 1.0)]
        theta: f64,
    },
    /// Master-equation evolution of a finite chain with optional monotone
    /// monitors
    Dynamics {
        /// JSON file with {mode, states[], matrix[][]}
        #[arg(long)]
        chain: std::path::PathBuf,
        /// Comma-separated initial distribution
        #[arg(long)]
        p0: String,
        #[arg(long, default_value = "0.1:5:0.1")]
        times: String,
        /// Monitor column: entropy | divergence | reverse | smoment:<s>
        #[arg(long)]
        monitor: Option<String>,
    },
    /// Reproducible MCMC sampling of a Boltzmann target
    Sample {
        #[arg(long, value_enum)]
        kernel: KernelArg,
        #[arg(long, value_enum)]
        model: ModelArg,
        /// Spin count (spin models) -- state count comes from the energy
        /// list for table targets
        #[arg(long, default_value_t = 8)]
        n: u32,
        #[arg(long)]
        beta: f64,
        #[arg(long, default_value_t = 1_000_000)]
        steps: u64,
        #[arg(long, default_value_t = 0.0)]
        field: f64,
        #[arg(long, default_value_t = 1.0)]
        coupling: f64,
        /// Comma-separated energies (table model)
        #[arg(long)]
        energies: Option<String>,
        /// Emit every k-th step of the path instead of the summary
        #[arg(long)]
        path_every: Option<u64>,
    },
    /// Fisher information, temperature readout and the entropy-slope check
    /// on a gridded density; or the entropy-rate bound of a hidden Markov
    /// source
    Estimate {
        /// gaussian:<variance> | laplace:<scale> | CSV file with x,q rows
        #[arg(long)]
        density: Option<String>,
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
        /// Run the additive-perturbation slope check
        #[arg(long)]
        de_bruijn: bool,
        /// JSON file with {transition[][], emission[][], stationary[]}
        #[arg(long)]
        hmm: Option<std::path::PathBuf>,
        /// Monte Carlo steps for the entropy-rate estimate
        #[arg(long, default_value_t = 200_000)]
        mc_steps: u64,
    },
    /// Erasure-decoding exponent table over a rate sweep
    Table1 {
        #[arg(long, default_value_t = 0.1)]
        p: f64,
        #[arg(long, default_value_t = 0.5)]
        beta: f64,
        #[arg(long = "T", default_value_t = 0.001)]
        threshold: f64,
        #[arg(long, default_value = "0:0.06:0.01")]
        rate: String,
        #[arg(long, default_value_t = 0.005)]
        grid_step: f64,
    },
    /// Phase-boundary sweeps for the random-energy, decoder and joint
    /// source-channel models
    PhaseDiagram {
        #[arg(long, value_enum)]
        model: PhaseModel,
        /// Field sweep (rem-field, jscc boundary vs B)
        #[arg(long, default_value = "0:2:0.05")]
        field: String,
        /// Rate sweep (decoder boundary vs R)
        #[arg(long, default_value = "0.05:0.35:0.01")]
        rate: String,
        #[arg(long, default_value_t = 0.1)]
        p: f64,
        #[arg(long, default_value_t = 1.0)]
        coupling: f64,
        #[arg(long, default_value_t = 1.0)]
        theta: f64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum KernelArg {
    Metropolis,
    HeatBath,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelArg {
    Ising1d,
    Cw,
    Table,
}

#[derive(Clone, Copy, ValueEnum, PartialEq)]
enum PhaseModel {
    RemField,
    Decoder,
    Jscc,
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 64,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    let seed = cli
        .global
        .seed
        .or_else(|| std::env::var("STATMECH_SEED").ok().and_then(|s| s.parse().ok()))
        .unwrap_or(DEFAULT_SEED);
    match run(&cli, seed) {
        Ok(table) => {
            let rendered = match cli.global.format {
                Format::Csv => table.to_csv(),
                Format::Json => table.to_json(),
            };
            match &cli.global.out {
                Some(path) => {
                    if let Err(e) = std::fs::write(path, rendered) {
                        eprintln!("error: cannot write {}: {e}", path.display());
                        std::process::exit(2);
                    }
                }
                None => print!("{rendered}"),
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(e.exit_code());
        }
    }
}

fn parse_f64_list(text: &str, what: &str) -> Result<Vec<f64>, CoreError> {
    text.split(',')
        .map(|tok| {
            tok.trim()
                .parse::<f64>()
                .map_err(|_| CoreError::Domain(format!("{what}: cannot parse '{tok}'")))
        })
        .collect()
}

fn read_json<T: serde::de::DeserializeOwned>(
    path: &std::path::Path,
    what: &str,
) -> Result<T, CoreError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CoreError::Domain(format!("{what}: cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CoreError::Shape(format!("{what}: malformed JSON: {e}")))
}

fn run(cli: &Cli, seed: u64) -> Result<Table, CoreError> {
    match &cli.command {
        Command::Thermo { energies, degeneracies, system, beta } => {
            let system = if let Some(path) = system {
                read_json::<DiscreteSystem>(path, "thermo --system")?
            } else {
                let energies = parse_f64_list(
                    energies.as_deref().ok_or_else(|| {
                        CoreError::Domain("thermo: provide --energies or --system".into())
                    })?,
                    "thermo --energies",
                )?;
                let degeneracies = match degeneracies {
                    Some(text) => text
                        .split(',')
                        .map(|tok| {
                            tok.trim().parse::<u64>().map_err(|_| {
                                CoreError::Domain(format!("thermo: bad degeneracy '{tok}'"))
                            })
                        })
                        .collect::<Result<Vec<_>, _>>()?,
                    None => vec![1; energies.len()],
                };
                DiscreteSystem::new("cli", energies, degeneracies)?
            };
            let betas = Sweep::parse(beta)?.values();
            let mut table = Table::new(
                config_json(cli, seed),
                &["beta", "log_z", "mean_energy", "var_energy", "entropy", "free_energy"],
            );
            for b in betas {
                if b <= 0.0 {
                    let lz = partition_function(&system, b)?;
                    table.row(vec![
                        Cell::F(b),
                        Cell::F(lz),
                        Cell::S("".into()),
                        Cell::S("".into()),
                        Cell::S("".into()),
                        Cell::S("".into()),
                    ]);
                    continue;
                }
                let st = thermo_state(&system, b)?;
                table.row(vec![
                    Cell::F(st.beta),
                    Cell::F(st.log_z),
                    Cell::F(st.mean_energy),
                    Cell::F(st.var_energy),
                    Cell::F(st.entropy),
                    Cell::F(st.free_energy),
                ]);
            }
            Ok(table)
        }
        Command::Ising { beta, field, coupling, exact_n } => {
            let betas = Sweep::parse(beta)?.values();
            let mut header = vec!["beta", "phi", "magnetization"];
            if exact_n.is_some() {
                header.push("ln_z_exact");
            }
            let mut table = Table::new(config_json(cli, seed), &header);
            for b in betas {
                let params = IsingParams::new(b, *field, *coupling)?;
                let mut row = vec![
                    Cell::F(b),
                    Cell::F(ising1d_phi(&params)),
                    Cell::F(ising1d_magnetization(&params)),
                ];
                if let Some(n) = exact_n {
                    row.push(Cell::F(ising1d_exact(*n, &params)?));
                }
                table.row(row);
            }
            Ok(table)
        }
        Command::Cw { beta, field, coupling, landau } => {
            let betas = Sweep::parse(beta)?.values();
            let mut header =
                vec!["beta", "field", "coupling", "m_star", "phi", "phase", "fixed_points"];
            if *landau {
                header.extend_from_slice(&["aux_route", "z_star"]);
            }
            let mut table = Table::new(config_json(cli, seed), &header);
            for b in betas {
                let params = IsingParams::new(b, *field, *coupling)?;
                let sol = curie_weiss_solve(&params)?;
                let fps = sol
                    .fixed_points
                    .iter()
                    .map(|m| format!("{m:.9e}"))
                    .collect::<Vec<_>>()
                    .join(";");
                let mut row = vec![
                    Cell::F(b),
                    Cell::F(*field),
                    Cell::F(*coupling),
                    Cell::F(sol.global_maximizer),
                    Cell::F(sol.phi),
                    Cell::S(format!("{:?}", sol.phase).to_lowercase()),
                    Cell::S(fps),
                ];
                if *landau {
                    let (_, aux, z) = curie_weiss_landau_check(&params)?;
                    row.push(Cell::F(aux));
                    row.push(Cell::F(z));
                }
                table.row(row);
            }
            Ok(table)
        }
        Command::Rem { beta, coupling, field, mc_n, sk_threshold } => {
            if let Some(k) = sk_threshold {
                let sol = sk_capacity(*k, *coupling)?;
                let mut table = Table::new(
                    config_json(cli, seed),
                    &["threshold", "capacity", "t_star", "residual"],
                );
                table.row(vec![
                    Cell::F(*k),
                    Cell::F(sol.capacity),
                    Cell::F(sol.t_star),
                    Cell::F(sol.residual),
                ]);
                return Ok(table);
            }
            let betas = Sweep::parse(beta)?.values();
            let mut header = vec!["beta", "phi", "phase", "entropy", "susceptibility"];
            if field.is_some() {
                header.insert(3, "m_star");
            }
            if mc_n.is_some() {
                header.push("mc_sample");
            }
            let mut table = Table::new(config_json(cli, seed), &header);
            for b in betas {
                let mut row = Vec::new();
                match field {
                    Some(bf) => {
                        let st = rem_field_phi(b, *bf, *coupling)?;
                        row.push(Cell::F(b));
                        row.push(Cell::F(st.phi));
                        row.push(Cell::S(format!("{:?}", st.phase).to_lowercase()));
                        row.push(Cell::F(st.m_star));
                        // entropy phi - beta phi': the envelope form
                        // h2((1+m)/2) - beta^2 J^2/4 on the paramagnetic
                        // branch, zero once frozen
                        let entropy = match st.phase {
                            statmech::rem::RemPhase::Paramagnetic => {
                                statmech::asymptotics::binary_entropy(0.5 * (1.0 + st.m_star))?
                                    - b * b * coupling * coupling / 4.0
                            }
                            statmech::rem::RemPhase::Glassy => 0.0,
                        };
                        row.push(Cell::F(entropy));
                    }
                    None => {
                        let (phi, phase) = rem_phi(b, *coupling)?;
                        row.push(Cell::F(b));
                        row.push(Cell::F(phi));
                        row.push(Cell::S(format!("{phase:?}").to_lowercase()));
                        let curve = statmech::rem::rem_piecewise(*coupling)?;
                        row.push(Cell::F(curve.entropy(b)?));
                    }
                }
                if b > 0.0 {
                    row.push(Cell::F(rem_susceptibility(1.0 / b, *coupling)?));
                } else {
                    row.push(Cell::S("".into()));
                }
                if let Some(n) = mc_n {
                    row.push(Cell::F(rem_monte_carlo(*n, *coupling, b, seed)?));
                }
                table.row(row);
            }
            Ok(table)
        }
        Command::Grem { beta, coupling, r1, a1 } => {
            let spec = GremSpec::new(*coupling, *r1, *a1)?;
            let betas = Sweep::parse(beta)?.values();
            let mut table =
                Table::new(config_json(cli, seed), &["beta", "phi", "phase", "transitions"]);
            for b in betas {
                let (phi, label, n_trans) = grem_phi(b, &spec)?;
                table.row(vec![
                    Cell::F(b),
                    Cell::F(phi),
                    Cell::S(label),
                    Cell::I(n_trans as i64),
                ]);
            }
            Ok(table)
        }
        Command::Coding { p, rate, beta } => {
            let betas = Sweep::parse(beta)?.values();
            let spec = BscSpec::new(*p)?;
            let mut table = Table::new(
                config_json(cli, seed),
                &[
                    "beta",
                    "codeword_sum_phi",
                    "branch",
                    "transmitted_weight",
                    "phase",
                    "correct_decoding_exponent",
                    "capacity",
                ],
            );
            for b in betas {
                let (ze, branch) = ze_phi(b, *rate, *p)?;
                let point = decoder_phase(b, *rate, *p)?;
                table.row(vec![
                    Cell::F(b),
                    Cell::F(ze),
                    Cell::S(format!("{branch:?}").to_lowercase()),
                    Cell::F(ferro_exponent(b, *p)?),
                    Cell::S(format!("{:?}", point.phase).to_lowercase()),
                    Cell::F(pc_exponent(*rate, *p)?),
                    Cell::F(spec.capacity()),
                ]);
            }
            Ok(table)
        }
        Command::Rd { distortion, problem, mmse_beta } => {
            let problem = match problem {
                Some(path) => read_json::<RdProblem>(path, "rd --problem")?,
                None => RdProblem::bss_hamming(),
            };
            if let Some(beta) = mmse_beta {
                let rep = rd_mmse_representation(&problem, *beta)?;
                let mut table = Table::new(
                    config_json(cli, seed),
                    &["beta", "rate_integral", "rate_direct", "d_beta", "d_from_integral"],
                );
                table.row(vec![
                    Cell::F(*beta),
                    Cell::F(rep.rate_integral),
                    Cell::F(rep.rate_direct),
                    Cell::F(rep.d_beta),
                    Cell::F(rep.d_from_integral),
                ]);
                return Ok(table);
            }
            let ds = Sweep::parse(distortion)?.values();
            let mut table =
                Table::new(config_json(cli, seed), &["distortion", "rate", "beta_star"]);
            for d in ds {
                let (r, b) = rd_parametric(&problem, d)?;
                table.row(vec![Cell::F(d), Cell::F(r), Cell::F(b)]);
            }
            Ok(table)
        }
        Command::Jscc { p, q, theta } => {
            let b = statmech::coding::jscc_boundaries(*p, *q, *theta)?;
            let mut table = Table::new(
                config_json(cli, seed),
                &["field", "q_star", "field_boundary", "beta_c"],
            );
            table.row(vec![
                Cell::F(b.field),
                Cell::F(b.q_star),
                Cell::F(b.field_boundary),
                Cell::F(b.beta_c),
            ]);
            Ok(table)
        }
        Command::Dynamics { chain, p0, times, monitor } => {
            let chain = read_json::<ChainSpec>(chain, "dynamics --chain")?;
            // revalidate through the constructor
            let chain = ChainSpec::new(
                chain.mode,
                chain.states.clone(),
                chain.matrix.clone(),
                chain.stationary.clone(),
            )?;
            let p0 = parse_f64_list(p0, "dynamics --p0")?;
            let times = Sweep::parse(times)?.values();
            let trajectory = evolve(&chain, &p0, &times)?;
            let monitor_values = match monitor.as_deref() {
                None => None,
                Some(name) => {
                    let functional = match name {
                        "entropy" => MonitorFunctional::Entropy,
                        "divergence" => MonitorFunctional::DivergenceToStationary,
                        "reverse" => MonitorFunctional::ReverseDivergence,
                        other => match other.strip_prefix("smoment:") {
                            Some(s) => MonitorFunctional::SMoment(s.parse().map_err(|_| {
                                CoreError::Domain(format!("dynamics: bad s-moment '{other}'"))
                            })?),
                            None => {
                                return Err(CoreError::Domain(format!(
                                    "dynamics: unknown monitor '{other}'"
                                )))
                            }
                        },
                    };
                    let pi_owned;
                    let pi = match &chain.stationary {
                        Some(pi) => Some(pi.as_slice()),
                        None if functional != MonitorFunctional::Entropy => {
                            pi_owned = chain.solve_stationary()?;
                            Some(pi_owned.as_slice())
                        }
                        None => None,
                    };
                    Some(monotone_monitor(&trajectory, functional, pi)?)
                }
            };
            let mut header: Vec<String> = vec!["t".into()];
            header.extend(chain.states.iter().map(|s| format!("p_{s}")));
            if monitor_values.is_some() {
                header.push("monitor".into());
            }
            let header_refs: Vec<&str> = header.iter().map(|s| s.as_str()).collect();
            let mut table = Table::new(config_json(cli, seed), &header_refs);
            for (i, (t, p)) in trajectory
                .times
                .iter()
                .zip(&trajectory.distributions)
                .enumerate()
            {
                let mut row = vec![Cell::F(*t)];
                row.extend(p.iter().map(|&x| Cell::F(x)));
                if let Some(rep) = &monitor_values {
                    row.push(Cell::F(rep.values[i]));
                }
                table.row(row);
            }
            Ok(table)
        }
        Command::Sample {
            kernel,
            model,
            n,
            beta,
            steps,
            field,
            coupling,
            energies,
            path_every,
        } => {
            let target = match model {
                ModelArg::Ising1d => {
                    SamplerTarget::Ising1d { n: *n, field: *field, coupling: *coupling }
                }
                ModelArg::Cw => {
                    SamplerTarget::CurieWeiss { n: *n, field: *field, coupling: *coupling }
                }
                ModelArg::Table => SamplerTarget::Table {
                    energies: parse_f64_list(
                        energies.as_deref().ok_or_else(|| {
                            CoreError::Domain("sample: table model needs --energies".into())
                        })?,
                        "sample --energies",
                    )?,
                },
            };
            let mut config = SamplerConfig::new(
                *beta,
                *steps,
                seed,
                match kernel {
                    KernelArg::Metropolis => Kernel::Metropolis,
                    KernelArg::HeatBath => Kernel::HeatBath,
                },
            )?;
            if let Some(k) = path_every {
                config.record_every = (*k).max(1);
            }
            let result = run_sampler(&target, &config)?;
            if let Some(k) = path_every {
                let mut table = Table::new(
                    config_json(cli, seed),
                    &["step", "state", "energy", "magnetization"],
                );
                for (i, &s) in result.samples.iter().enumerate() {
                    table.row(vec![
                        Cell::I((i as u64 * (*k).max(1)) as i64),
                        Cell::I(s as i64),
                        Cell::F(target.energy(s as usize)),
                        match target.magnetization(s as usize) {
                            Some(m) => Cell::F(m),
                            None => Cell::S("".into()),
                        },
                    ]);
                }
                return Ok(table);
            }
            let mut table = Table::new(
                config_json(cli, seed),
                &["steps", "acceptance_rate", "mean_energy", "mean_magnetization"],
            );
            table.row(vec![
                Cell::I(*steps as i64),
                Cell::F(result.acceptance_rate),
                Cell::F(result.mean_energy),
                match result.mean_magnetization {
                    Some(m) => Cell::F(m),
                    None => Cell::S("".into()),
                },
            ]);
            Ok(table)
        }
        Command::Estimate { density, alpha, de_bruijn, hmm, mc_steps } => {
            if let Some(path) = hmm {
                let hmm = read_json::<HmmSpec>(path, "estimate --hmm")?;
                let hmm = HmmSpec::with_stationary(
                    hmm.transition.clone(),
                    hmm.emission.clone(),
                    hmm.stationary.clone(),
                )?;
                let bound =
                    hmm_entropy_upper_bound(&hmm, &HmmBoundOptions { seed, ..Default::default() })?;
                let (mc, se) = hmm_entropy_rate_monte_carlo(&hmm, *mc_steps, seed)?;
                let mut table = Table::new(
                    config_json(cli, seed),
                    &["entropy_rate_bound", "mc_estimate", "mc_standard_error", "converged"],
                );
                table.row(vec![
                    Cell::F(bound.bound),
                    Cell::F(mc),
                    Cell::F(se),
                    Cell::S(bound.converged.to_string()),
                ]);
                return Ok(table);
            }
            let spec = density.as_deref().ok_or_else(|| {
                CoreError::Domain("estimate: provide --density or --hmm".into())
            })?;
            let density = parse_density(spec)?;
            let j = fisher_information(&density)?;
            let t = generalized_temperature(&density, *alpha)?;
            if *de_bruijn {
                let kernel =
                    GriddedDensity::from_fn(-8.0, 8.0, 4001, |z| (-z * z / 2.0).exp())?;
                let rep = de_bruijn_check(&density, &kernel, &[1e-2, 5e-3, 2.5e-3])?;
                let mut table = Table::new(
                    config_json(cli, seed),
                    &["fisher_information", "temperature", "entropy_slope", "half_fisher"],
                );
                table.row(vec![
                    Cell::F(j),
                    Cell::F(t),
                    Cell::F(rep.slope),
                    Cell::F(rep.half_fisher),
                ]);
                return Ok(table);
            }
            let mut table =
                Table::new(config_json(cli, seed), &["fisher_information", "temperature"]);
            table.row(vec![Cell::F(j), Cell::F(t)]);
            Ok(table)
        }
        Command::Table1 { p, beta, threshold, rate, grid_step } => {
            let rates = Sweep::parse(rate)?.values();
            let mut table = Table::new(
                config_json(cli, seed),
                &["R", "E1_jensen", "E1_direct", "s_star", "rho_star"],
            );
            for r in rates {
                let jensen = erasure_exponent_jensen(r, *threshold, *p, *beta, *grid_step)?;
                let direct =
                    erasure_exponent_direct(r, *threshold, *p, *beta, *grid_step, 5.0, false)?;
                table.row(vec![
                    Cell::F(r),
                    Cell::F(jensen.value),
                    Cell::F(direct.value),
                    Cell::F(direct.s_star.unwrap_or(f64::NAN)),
                    Cell::F(jensen.rho_star.unwrap_or(f64::NAN)),
                ]);
            }
            Ok(table)
        }
        Command::PhaseDiagram { model, field, rate, p, coupling, theta } => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(cli.global.jobs.max(1))
                .build()
                .map_err(|e| CoreError::Convergence(format!("phase-diagram: {e}")))?;
            match model {
                PhaseModel::RemField => {
                    let fields = Sweep::parse(field)?.values();
                    let rows: Vec<(f64, Result<f64, CoreError>)> = pool.install(|| {
                        fields
                            .par_iter()
                            .map(|&b| (b, rem_field_beta_c(b, *coupling)))
                            .collect()
                    });
                    let mut table =
                        Table::new(config_json(cli, seed), &["field", "beta_c", "t_c"]);
                    for (b, res) in rows {
                        let bc = res?;
                        table.row(vec![Cell::F(b), Cell::F(bc), Cell::F(1.0 / bc)]);
                    }
                    Ok(table)
                }
                PhaseModel::Decoder => {
                    let rates = Sweep::parse(rate)?.values();
                    let rows: Vec<(f64, Result<Option<f64>, CoreError>)> = pool.install(|| {
                        rates
                            .par_iter()
                            .map(|&r| {
                                (r, statmech::coding::decoder_boundary_beta(r, *p, 50.0))
                            })
                            .collect()
                    });
                    let mut table = Table::new(
                        config_json(cli, seed),
                        &["rate", "boundary_beta", "capacity"],
                    );
                    let c = LN_2 - statmech::asymptotics::binary_entropy(*p)?;
                    for (r, res) in rows {
                        let cell = match res? {
                            Some(b) => Cell::F(b),
                            None => Cell::S("".into()),
                        };
                        table.row(vec![Cell::F(r), cell, Cell::F(c)]);
                    }
                    Ok(table)
                }
                PhaseModel::Jscc => {
                    let fields = Sweep::parse(field)?.values();
                    let rows: Vec<(f64, Result<f64, CoreError>)> = pool.install(|| {
                        fields
                            .par_iter()
                            .map(|&b| (b, statmech::coding::jscc_beta_c(b, *theta, *p)))
                            .collect()
                    });
                    let mut table =
                        Table::new(config_json(cli, seed), &["field", "beta_c", "t_c"]);
                    for (b, res) in rows {
                        let bc = res?;
                        table.row(vec![Cell::F(b), Cell::F(bc), Cell::F(1.0 / bc)]);
                    }
                    Ok(table)
                }
            }
        }
    }
}

fn parse_density(spec: &str) -> Result<GriddedDensity, CoreError> {
    if let Some(var) = spec.strip_prefix("gaussian:") {
        let variance: f64 = var
            .parse()
            .map_err(|_| CoreError::Domain(format!("estimate: bad variance '{var}'")))?;
        if variance <= 0.0 {
            return Err(CoreError::Domain("estimate: variance must be > 0".into()));
        }
        let sigma = variance.sqrt();
        return GriddedDensity::from_fn(-12.0 * sigma, 12.0 * sigma, 8001, move |x| {
            (-x * x / (2.0 * variance)).exp()
        });
    }
    if let Some(scale) = spec.strip_prefix("laplace:") {
        let b: f64 = scale
            .parse()
            .map_err(|_| CoreError::Domain(format!("estimate: bad scale '{scale}'")))?;
        if b <= 0.0 {
            return Err(CoreError::Domain("estimate: scale must be > 0".into()));
        }
        return GriddedDensity::from_fn(-32.0 * b, 32.0 * b, 60_001, move |x| {
            (-x.abs() / b).exp()
        });
    }
    // CSV file with x,q rows
    let text = std::fs::read_to_string(spec)
        .map_err(|e| CoreError::Domain(format!("estimate: cannot read '{spec}': {e}")))?;
    let mut xs = Vec::new();
    let mut qs = Vec::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with('x') {
            continue;
        }
        let mut parts = line.split(',');
        let x: f64 = parts
            .next()
            .and_then(|t| t.trim().parse().ok())
            .ok_or_else(|| CoreError::Shape(format!("estimate: bad density row '{line}'")))?;
        let q: f64 = parts
            .next()
            .and_then(|t| t.trim().parse().ok())
            .ok_or_else(|| CoreError::Shape(format!("estimate: bad density row '{line}'")))?;
        xs.push(x);
        qs.push(q);
    }
    if xs.len() < 5 {
        return Err(CoreError::Shape("estimate: density file too short".into()));
    }
    let dx = xs[1] - xs[0];
    GriddedDensity::new(xs[0], dx, qs)
}

fn config_json(cli: &Cli, seed: u64) -> String {
    let name = match &cli.command {
        Command::Thermo { .. } => "thermo",
        Command::Ising { .. } => "ising",
        Command::Cw { .. } => "cw",
        Command::Rem { .. } => "rem",
        Command::Grem { .. } => "grem",
        Command::Coding { .. } => "coding",
        Command::Rd { .. } => "rd",
        Command::Jscc { .. } => "jscc",
        Command::Dynamics { .. } => "dynamics",
        Command::Sample { .. } => "sample",
        Command::Estimate { .. } => "estimate",
        Command::Table1 { .. } => "table1",
        Command::PhaseDiagram { .. } => "phase-diagram",
    };
    let args: Vec<String> = std::env::args().skip(1).collect();
    serde_json::json!({
        "subcommand": name,
        "argv": args,
        "seed": seed,
    })
    .to_string()
}
