//! Markov-chain dynamics: master-equation integration, global/detailed
//! balance checkers, monotone information-measure monitors, and the
//! truncated single-server queue example.

use crate::error::{Error, Result};
use crate::numerics::solve_dense;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChainMode {
    /// `matrix` holds one-step transition probabilities (rows sum to 1).
    DiscreteTime,
    /// `matrix` holds off-diagonal transition rates W_rs >= 0; diagonals
    /// are ignored by the master equations.
    ContinuousTime,
}

/// A finite-state Markov chain in either time convention, with an optional
/// declared stationary distribution.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChainSpec {
    pub mode: ChainMode,
    pub states: Vec<String>,
    pub matrix: Vec<Vec<f64>>,
    #[serde(default)]
    pub stationary: Option<Vec<f64>>,
}

impl ChainSpec {
    pub fn discrete(matrix: Vec<Vec<f64>>) -> Result<Self> {
        let states = (0..matrix.len()).map(|i| i.to_string()).collect();
        Self::new(ChainMode::DiscreteTime, states, matrix, None)
    }

    pub fn continuous(matrix: Vec<Vec<f64>>) -> Result<Self> {
        let states = (0..matrix.len()).map(|i| i.to_string()).collect();
        Self::new(ChainMode::ContinuousTime, states, matrix, None)
    }

    pub fn new(
        mode: ChainMode,
        states: Vec<String>,
        matrix: Vec<Vec<f64>>,
        stationary: Option<Vec<f64>>,
    ) -> Result<Self> {
        let n = states.len();
        if n == 0 || matrix.len() != n || matrix.iter().any(|row| row.len() != n) {
            return Err(Error::Shape("chain: matrix must be square over the state list".into()));
        }
        match mode {
            ChainMode::DiscreteTime => {
                for (r, row) in matrix.iter().enumerate() {
                    if row.iter().any(|&w| w < 0.0) {
                        return Err(Error::Domain(format!("chain: negative probability in row {r}")));
                    }
                    let total: f64 = row.iter().sum();
                    if (total - 1.0).abs() > 1e-12 {
                        return Err(Error::Normalization(format!(
                            "chain: row {r} sums to {total}, expected 1"
                        )));
                    }
                }
            }
            ChainMode::ContinuousTime => {
                for (r, row) in matrix.iter().enumerate() {
                    for (s, &w) in row.iter().enumerate() {
                        if r != s && w < 0.0 {
                            return Err(Error::Domain(format!(
                                "chain: negative rate {w} at ({r}, {s})"
                            )));
                        }
                    }
                }
            }
        }
        let chain = Self { mode, states, matrix, stationary: None };
        if let Some(pi) = stationary {
            chain.check_stationary(&pi)?;
            return Ok(Self { stationary: Some(pi), ..chain });
        }
        Ok(chain)
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Net probability flow into each state (zero at a stationary point).
    fn flow(&self, p: &[f64]) -> Vec<f64> {
        let n = self.len();
        let mut out = vec![0.0; n];
        for r in 0..n {
            let mut acc = 0.0;
            for s in 0..n {
                if s != r {
                    acc += p[s] * self.matrix[s][r] - p[r] * self.matrix[r][s];
                }
            }
            out[r] = acc;
        }
        out
    }

    fn check_stationary(&self, pi: &[f64]) -> Result<()> {
        if pi.len() != self.len() {
            return Err(Error::Shape("chain: stationary length mismatch".into()));
        }
        let violation = match self.mode {
            ChainMode::ContinuousTime => self
                .flow(pi)
                .iter()
                .fold(0.0f64, |acc, &f| acc.max(f.abs())),
            ChainMode::DiscreteTime => {
                let next = self.step_discrete(pi);
                next.iter().zip(pi).fold(0.0f64, |acc, (a, b)| acc.max((a - b).abs()))
            }
        };
        if violation > 1e-10 {
            return Err(Error::Domain(format!(
                "chain: declared stationary violates global balance by {violation}"
            )));
        }
        Ok(())
    }

    fn step_discrete(&self, p: &[f64]) -> Vec<f64> {
        let n = self.len();
        let mut out = vec![0.0; n];
        for s in 0..n {
            for r in 0..n {
                out[s] += p[r] * self.matrix[r][s];
            }
        }
        out
    }

    /// Solve for the stationary distribution by dense linear algebra
    /// (global balance plus normalization).
    pub fn solve_stationary(&self) -> Result<Vec<f64>> {
        let n = self.len();
        // rows: balance equations for states 0..n-1, last row replaced by
        // the normalization constraint
        let mut a = vec![vec![0.0; n]; n];
        for r in 0..n - 1 {
            for s in 0..n {
                match self.mode {
                    ChainMode::ContinuousTime => {
                        if s != r {
                            a[r][s] += self.matrix[s][r];
                            a[r][r] -= self.matrix[r][s];
                        }
                    }
                    ChainMode::DiscreteTime => {
                        a[r][s] += self.matrix[s][r];
                        if s == r {
                            a[r][s] -= 1.0;
                        }
                    }
                }
            }
        }
        for s in 0..n {
            a[n - 1][s] = 1.0;
        }
        let mut b = vec![0.0; n];
        b[n - 1] = 1.0;
        let pi = solve_dense(&a, &b)?;
        if pi.iter().any(|&x| x < -1e-9) {
            return Err(Error::Convergence("chain: stationary solve went negative".into()));
        }
        Ok(pi.iter().map(|&x| x.max(0.0)).collect())
    }
}

/// A sampled distribution path P(t).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub distributions: Vec<Vec<f64>>,
}

impl Trajectory {
    pub fn new(times: Vec<f64>, distributions: Vec<Vec<f64>>) -> Result<Self> {
        if times.len() != distributions.len() {
            return Err(Error::Shape("trajectory: times/distributions mismatch".into()));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Shape("trajectory: times must be strictly increasing".into()));
        }
        for (t, p) in times.iter().zip(&distributions) {
            let total: f64 = p.iter().sum();
            if (total - 1.0).abs() > 1e-10 {
                return Err(Error::Normalization(format!(
                    "trajectory: distribution at t = {t} sums to {total}"
                )));
            }
        }
        Ok(Self { times, distributions })
    }
}

fn validate_distribution(p: &[f64], n: usize, what: &str) -> Result<()> {
    if p.len() != n {
        return Err(Error::Shape(format!("{what}: length {} vs {n} states", p.len())));
    }
    let total: f64 = p.iter().sum();
    if (total - 1.0).abs() > 1e-10 || p.iter().any(|&x| x < 0.0) {
        return Err(Error::Normalization(format!("{what}: sums to {total}")));
    }
    Ok(())
}

/// Integrate the master equations dP_r/dt = sum_s [P_s W_sr - P_r W_rs]
/// (continuous time, adaptive 4th/5th-order stepping with local error 1e-10
/// and per-step renormalization), or iterate the stochastic matrix at
/// integer times (discrete time). `sample_times` must be increasing and
/// start at or after 0.
pub fn evolve(chain: &ChainSpec, p0: &[f64], sample_times: &[f64]) -> Result<Trajectory> {
    validate_distribution(p0, chain.len(), "evolve: initial distribution")?;
    if sample_times.is_empty() || sample_times[0] < 0.0 {
        return Err(Error::Domain("evolve: sample times must start at t >= 0".into()));
    }
    match chain.mode {
        ChainMode::DiscreteTime => {
            let mut p = p0.to_vec();
            let mut step = 0u64;
            let mut out = Vec::with_capacity(sample_times.len());
            for &t in sample_times {
                let target = t.round();
                if (t - target).abs() > 1e-9 || target < step as f64 {
                    return Err(Error::Domain(format!(
                        "evolve: discrete chains sample at non-decreasing integer times, got {t}"
                    )));
                }
                while (step as f64) < target {
                    p = chain.step_discrete(&p);
                    step += 1;
                }
                out.push(p.clone());
            }
            Trajectory::new(sample_times.to_vec(), out)
        }
        ChainMode::ContinuousTime => {
            let mut p = p0.to_vec();
            let mut t = 0.0;
            let mut dt = 1e-3;
            let mut out = Vec::with_capacity(sample_times.len());
            for &target in sample_times {
                if target < t {
                    return Err(Error::Domain("evolve: times must be non-decreasing".into()));
                }
                integrate_to(chain, &mut p, &mut t, target, &mut dt)?;
                out.push(p.clone());
            }
            Trajectory::new(sample_times.to_vec(), out)
        }
    }
}

/// One Cash-Karp embedded Runge-Kutta step (orders 4 and 5).
fn cash_karp_step(chain: &ChainSpec, p: &[f64], dt: f64) -> (Vec<f64>, f64) {
    const A2: f64 = 0.2;
    const A3: [f64; 2] = [3.0 / 40.0, 9.0 / 40.0];
    const A4: [f64; 3] = [0.3, -0.9, 1.2];
    const A5: [f64; 4] = [-11.0 / 54.0, 2.5, -70.0 / 27.0, 35.0 / 27.0];
    const A6: [f64; 5] = [
        1631.0 / 55296.0,
        175.0 / 512.0,
        575.0 / 13824.0,
        44275.0 / 110592.0,
        253.0 / 4096.0,
    ];
    const B5: [f64; 6] = [37.0 / 378.0, 0.0, 250.0 / 621.0, 125.0 / 594.0, 0.0, 512.0 / 1771.0];
    const B4: [f64; 6] = [
        2825.0 / 27648.0,
        0.0,
        18575.0 / 48384.0,
        13525.0 / 55296.0,
        277.0 / 14336.0,
        0.25,
    ];
    let n = p.len();
    let deriv = |state: &[f64]| chain.flow(state);
    let k1 = deriv(p);
    let stage = |coefs: &[f64], ks: &[&Vec<f64>]| -> Vec<f64> {
        let mut s = p.to_vec();
        for (c, k) in coefs.iter().zip(ks) {
            for i in 0..n {
                s[i] += dt * c * k[i];
            }
        }
        s
    };
    let k2 = deriv(&stage(&[A2], &[&k1]));
    let k3 = deriv(&stage(&A3, &[&k1, &k2]));
    let k4 = deriv(&stage(&A4, &[&k1, &k2, &k3]));
    let k5 = deriv(&stage(&A5, &[&k1, &k2, &k3, &k4]));
    let k6 = deriv(&stage(&A6, &[&k1, &k2, &k3, &k4, &k5]));
    let ks = [&k1, &k2, &k3, &k4, &k5, &k6];
    let mut next = p.to_vec();
    let mut err = 0.0f64;
    for i in 0..n {
        let mut hi = 0.0;
        let mut lo = 0.0;
        for (j, k) in ks.iter().enumerate() {
            hi += B5[j] * k[i];
            lo += B4[j] * k[i];
        }
        next[i] += dt * hi;
        err = err.max((dt * (hi - lo)).abs());
    }
    (next, err)
}

fn integrate_to(
    chain: &ChainSpec,
    p: &mut Vec<f64>,
    t: &mut f64,
    target: f64,
    dt: &mut f64,
) -> Result<()> {
    const TOL: f64 = 1e-10;
    while *t < target {
        let step = dt.min(target - *t);
        let (next, err) = cash_karp_step(chain, p, step);
        if err <= TOL || step < 1e-13 * (1.0 + target.abs()) {
            *t += step;
            *p = next;
            // keep the simplex drift below tolerance
            let total: f64 = p.iter().sum();
            if (total - 1.0).abs() > 1e-9 {
                return Err(Error::Convergence(format!(
                    "evolve: normalization drifted to {total} at t = {t}"
                )));
            }
            for x in p.iter_mut() {
                *x /= total;
            }
            if err > 0.0 {
                *dt = (step * (TOL / err).powf(0.2) * 0.9).min(4.0 * step);
            } else {
                *dt = 4.0 * step;
            }
        } else {
            *dt = (step * (TOL / err).powf(0.25) * 0.9).max(1e-14);
            if *dt < 1e-13 * (1.0 + target.abs()) {
                return Err(Error::Convergence(format!(
                    "evolve: step size underflow at t = {t} (local error {err})"
                )));
            }
        }
    }
    Ok(())
}

/// Largest violation of P_s W_sr = P_r W_rs over all pairs, and whether it
/// clears the tolerance.
pub fn detailed_balance_check(chain: &ChainSpec, p: &[f64]) -> Result<(bool, f64)> {
    validate_distribution(p, chain.len(), "detailed_balance_check")?;
    let n = chain.len();
    let mut worst = 0.0f64;
    for r in 0..n {
        for s in r + 1..n {
            worst = worst.max((p[s] * chain.matrix[s][r] - p[r] * chain.matrix[r][s]).abs());
        }
    }
    Ok((worst < 1e-10, worst))
}

/// Cycle-product reversibility criterion: forward and backward rate
/// products agree (in the log domain) around every simple cycle up to
/// `max_cycle_len`. Returns the worst violating cycle when one exists.
/// State count is capped at 12 to keep the enumeration honest.
pub fn kolmogorov_cycle_check(
    chain: &ChainSpec,
    max_cycle_len: usize,
) -> Result<(bool, Option<Vec<usize>>)> {
    if max_cycle_len < 3 {
        return Err(Error::Domain("kolmogorov_cycle_check: max cycle length must be >= 3".into()));
    }
    let n = chain.len();
    if n > 12 {
        return Err(Error::Size(format!(
            "kolmogorov_cycle_check: {n} states exceeds the enumeration cap of 12"
        )));
    }
    let cap = max_cycle_len.min(n);
    let mut worst: Option<(f64, Vec<usize>)> = None;
    // enumerate simple cycles whose smallest state is the start vertex
    let mut path = Vec::with_capacity(cap);
    for start in 0..n {
        path.clear();
        path.push(start);
        let mut visited = vec![false; n];
        visited[start] = true;
        dfs_cycles(chain, start, cap, &mut path, &mut visited, &mut worst);
    }
    match worst {
        Some((gap, cycle)) if gap > 1e-9 => Ok((false, Some(cycle))),
        _ => Ok((true, None)),
    }
}

fn dfs_cycles(
    chain: &ChainSpec,
    start: usize,
    cap: usize,
    path: &mut Vec<usize>,
    visited: &mut Vec<bool>,
    worst: &mut Option<(f64, Vec<usize>)>,
) {
    let here = *path.last().unwrap();
    let n = chain.len();
    for next in start + 1..n {
        if visited[next] {
            continue;
        }
        // traversable in either direction keeps the cycle relevant
        if chain.matrix[here][next] <= 0.0 && chain.matrix[next][here] <= 0.0 {
            continue;
        }
        path.push(next);
        visited[next] = true;
        if path.len() >= 3 {
            evaluate_cycle(chain, path, worst);
        }
        if path.len() < cap {
            dfs_cycles(chain, start, cap, path, visited, worst);
        }
        visited[next] = false;
        path.pop();
    }
}

fn evaluate_cycle(chain: &ChainSpec, path: &[usize], worst: &mut Option<(f64, Vec<usize>)>) {
    // close the cycle back to the start
    let mut fwd = 0.0f64;
    let mut bwd = 0.0f64;
    let k = path.len();
    for i in 0..k {
        let a = path[i];
        let b = path[(i + 1) % k];
        let wf = chain.matrix[a][b];
        let wb = chain.matrix[b][a];
        if wf <= 0.0 && wb <= 0.0 {
            return; // not traversable; irrelevant for the criterion
        }
        if wf <= 0.0 || wb <= 0.0 {
            // one-way edge: infinite log mismatch
            let cycle = close_cycle(path);
            if worst.as_ref().map_or(true, |(g, _)| *g < f64::INFINITY) {
                *worst = Some((f64::INFINITY, cycle));
            }
            return;
        }
        fwd += wf.ln();
        bwd += wb.ln();
    }
    let gap = (fwd - bwd).abs();
    if worst.as_ref().map_or(true, |(g, _)| gap > *g) {
        *worst = Some((gap, close_cycle(path)));
    }
}

fn close_cycle(path: &[usize]) -> Vec<usize> {
    let mut c = path.to_vec();
    c.push(path[0]);
    c
}

/// Which information measure to track along a trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MonitorFunctional {
    /// Shannon entropy H(X_t); monotone non-decreasing when the uniform
    /// distribution is stationary (e.g. symmetric or doubly stochastic
    /// dynamics).
    Entropy,
    /// D(P(t) || P) against the stationary law; non-increasing.
    DivergenceToStationary,
    /// D(P || P(t)); non-increasing.
    ReverseDivergence,
    /// sum_r P_r^{1-s} P_r(t)^s for s in (0, 1); non-decreasing.
    SMoment(f64),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MonitorReport {
    pub values: Vec<f64>,
    /// True when the expected monotonicity holds within slack 1e-9.
    pub monotone: bool,
}

fn divergence(p: &[f64], q: &[f64]) -> f64 {
    p.iter()
        .zip(q)
        .map(|(&a, &b)| {
            if a <= 0.0 {
                0.0
            } else if b <= 0.0 {
                f64::INFINITY
            } else {
                a * (a / b).ln()
            }
        })
        .sum()
}

fn entropy(p: &[f64]) -> f64 {
    p.iter().filter(|&&x| x > 0.0).map(|&x| -x * x.ln()).sum()
}

const MONOTONE_SLACK: f64 = 1e-9;

/// Evaluate a monotone functional along a trajectory and check the
/// second-law direction: entropy and s-moments must not decrease,
/// divergences must not increase.
pub fn monotone_monitor(
    trajectory: &Trajectory,
    functional: MonitorFunctional,
    stationary: Option<&[f64]>,
) -> Result<MonitorReport> {
    let needs_pi = !matches!(functional, MonitorFunctional::Entropy);
    let pi = match (needs_pi, stationary) {
        (true, None) => {
            return Err(Error::Domain(
                "monotone_monitor: this functional needs the stationary distribution".into(),
            ))
        }
        (_, maybe) => maybe,
    };
    if let MonitorFunctional::SMoment(s) = functional {
        if !(0.0 < s && s < 1.0) {
            return Err(Error::Domain(format!("monotone_monitor: s = {s} outside (0, 1)")));
        }
    }
    let values: Vec<f64> = trajectory
        .distributions
        .iter()
        .map(|p| match functional {
            MonitorFunctional::Entropy => entropy(p),
            MonitorFunctional::DivergenceToStationary => divergence(p, pi.unwrap()),
            MonitorFunctional::ReverseDivergence => divergence(pi.unwrap(), p),
            MonitorFunctional::SMoment(s) => pi
                .unwrap()
                .iter()
                .zip(p)
                .map(|(&q, &pt)| q.powf(1.0 - s) * pt.powf(s))
                .sum(),
        })
        .collect();
    let decreasing = matches!(
        functional,
        MonitorFunctional::DivergenceToStationary | MonitorFunctional::ReverseDivergence
    );
    let monotone = values.windows(2).all(|w| {
        if decreasing {
            w[1] <= w[0] + MONOTONE_SLACK
        } else {
            w[1] >= w[0] - MONOTONE_SLACK
        }
    });
    Ok(MonitorReport { values, monotone })
}

/// A concave comparison functional applied along a trajectory against a
/// stationary law: U(t) = sum_r P_r V(P_r(t)/P_r); non-decreasing for
/// concave V.
pub fn custom_monitor<V: Fn(f64) -> f64>(
    trajectory: &Trajectory,
    v: V,
    stationary: &[f64],
) -> Result<MonitorReport> {
    let values: Vec<f64> = trajectory
        .distributions
        .iter()
        .map(|p| {
            stationary
                .iter()
                .zip(p)
                .filter(|(&q, _)| q > 0.0)
                .map(|(&q, &pt)| q * v(pt / q))
                .sum()
        })
        .collect();
    let monotone = values.windows(2).all(|w| w[1] >= w[0] - MONOTONE_SLACK);
    Ok(MonitorReport { values, monotone })
}

/// Evolve two initial laws under the same chain and verify that the
/// divergence between them never increases.
pub fn divergence_pair_monitor(
    chain: &ChainSpec,
    p0: &[f64],
    p0_other: &[f64],
    times: &[f64],
) -> Result<MonitorReport> {
    let a = evolve(chain, p0, times)?;
    let b = evolve(chain, p0_other, times)?;
    let values: Vec<f64> = a
        .distributions
        .iter()
        .zip(&b.distributions)
        .map(|(p, q)| divergence(p, q))
        .collect();
    let monotone = values.windows(2).all(|w| w[1] <= w[0] + MONOTONE_SLACK);
    Ok(MonitorReport { values, monotone })
}

/// Transition kernel over a horizon t: K[r][s] = P(X_t = s | X_0 = r),
/// computed by evolving the basis distributions.
pub fn transition_kernel(chain: &ChainSpec, t: f64) -> Result<Vec<Vec<f64>>> {
    let n = chain.len();
    let mut kernel = Vec::with_capacity(n);
    for r in 0..n {
        let mut basis = vec![0.0; n];
        basis[r] = 1.0;
        if t == 0.0 {
            kernel.push(basis);
            continue;
        }
        let tr = evolve(chain, &basis, &[t])?;
        kernel.push(tr.distributions[0].clone());
    }
    Ok(kernel)
}

/// Dependence monitor between X_0 and X_t:
/// J(t) = sum_{r,s} P(X_0 = r, X_t = s) V(P(X_0 = r) P(X_t = s) / joint),
/// non-decreasing in t for concave V. With V = ln this is minus the mutual
/// information.
pub fn ziv_zakai_monitor<V: Fn(f64) -> f64>(
    chain: &ChainSpec,
    p0: &[f64],
    v: V,
    times: &[f64],
) -> Result<MonitorReport> {
    validate_distribution(p0, chain.len(), "ziv_zakai_monitor")?;
    let n = chain.len();
    let mut values = Vec::with_capacity(times.len());
    for &t in times {
        let kernel = transition_kernel(chain, t)?;
        // marginal of X_t
        let mut pt = vec![0.0; n];
        for r in 0..n {
            for s in 0..n {
                pt[s] += p0[r] * kernel[r][s];
            }
        }
        let mut j = 0.0;
        for r in 0..n {
            for s in 0..n {
                let joint = p0[r] * kernel[r][s];
                if joint > 0.0 {
                    j += joint * v(p0[r] * pt[s] / joint);
                }
            }
        }
        values.push(j);
    }
    let monotone = values.windows(2).all(|w| w[1] >= w[0] - MONOTONE_SLACK);
    Ok(MonitorReport { values, monotone })
}

/// Truncated single-server queue with arrival rate lambda and service rate
/// mu: a birth-death chain on {0, .., n_max} with a reflecting cap. Its
/// stationary law is the renormalized geometric (lambda/mu)^r.
pub fn mm1_chain(lambda: f64, mu: f64, n_max: usize) -> Result<ChainSpec> {
    if lambda <= 0.0 || mu <= 0.0 || lambda >= mu {
        return Err(Error::Domain(format!(
            "mm1_chain: need 0 < lambda < mu, got lambda = {lambda}, mu = {mu}"
        )));
    }
    if n_max < 1 {
        return Err(Error::Domain("mm1_chain: need at least two states".into()));
    }
    let n = n_max + 1;
    let mut matrix = vec![vec![0.0; n]; n];
    for r in 0..n_max {
        matrix[r][r + 1] = lambda;
        matrix[r + 1][r] = mu;
    }
    ChainSpec::continuous(matrix)
}

/// Renormalized geometric stationary law of the truncated queue.
pub fn mm1_geometric(lambda: f64, mu: f64, n_max: usize) -> Vec<f64> {
    let rho = lambda / mu;
    let weights: Vec<f64> = (0..=n_max).map(|r| rho.powi(r as i32)).collect();
    let total: f64 = weights.iter().sum();
    weights.into_iter().map(|w| w / total).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::prelude::*;
    use rand_chacha::ChaCha12Rng;

    fn random_positive_chain(rng: &mut ChaCha12Rng, n: usize) -> ChainSpec {
        let matrix: Vec<Vec<f64>> = (0..n)
            .map(|r| {
                (0..n)
                    .map(|s| if r == s { 0.0 } else { rng.gen_range(0.05..1.0) })
                    .collect()
            })
            .collect();
        ChainSpec::continuous(matrix).unwrap()
    }

    fn random_reversible_chain(rng: &mut ChaCha12Rng, n: usize) -> (ChainSpec, Vec<f64>) {
        // conductances S_rs = S_sr and weights pi_r; W_rs = S_rs / pi_r
        let mut pi: Vec<f64> = (0..n).map(|_| rng.gen_range(0.2..1.0)).collect();
        let total: f64 = pi.iter().sum();
        for x in pi.iter_mut() {
            *x /= total;
        }
        let mut s = vec![vec![0.0; n]; n];
        for r in 0..n {
            for c in r + 1..n {
                let v = rng.gen_range(0.05..0.5);
                s[r][c] = v;
                s[c][r] = v;
            }
        }
        let matrix: Vec<Vec<f64>> = (0..n)
            .map(|r| (0..n).map(|c| if r == c { 0.0 } else { s[r][c] / pi[r] }).collect())
            .collect();
        (ChainSpec::continuous(matrix).unwrap(), pi)
    }

    #[test]
    fn two_state_closed_form() {
        // symmetric rate w: P(t) = (1/2)(1 + e^{-2wt}), (1/2)(1 - e^{-2wt})
        let w = 0.7;
        let chain = ChainSpec::continuous(vec![vec![0.0, w], vec![w, 0.0]]).unwrap();
        let times = [0.1, 0.5, 1.0, 2.0, 5.0];
        let tr = evolve(&chain, &[1.0, 0.0], &times).unwrap();
        for (t, p) in times.iter().zip(&tr.distributions) {
            let expect = 0.5 * (1.0 + (-2.0 * w * t).exp());
            assert!((p[0] - expect).abs() < 1e-8, "t = {t}: {} vs {expect}", p[0]);
        }
    }

    #[test]
    fn stationary_start_stays_put() {
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let chain = random_positive_chain(&mut rng, 5);
        let pi = chain.solve_stationary().unwrap();
        let tr = evolve(&chain, &pi, &[0.5, 2.0, 10.0]).unwrap();
        for p in &tr.distributions {
            for (a, b) in p.iter().zip(&pi) {
                assert!((a - b).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn doubly_stochastic_discrete_goes_uniform() {
        // circulant doubly stochastic 5-state chain
        let n = 5;
        let mut matrix = vec![vec![0.0; n]; n];
        for r in 0..n {
            matrix[r][r] = 0.2;
            matrix[r][(r + 1) % n] = 0.5;
            matrix[r][(r + 2) % n] = 0.3;
        }
        let chain = ChainSpec::discrete(matrix).unwrap();
        let tr = evolve(&chain, &[1.0, 0.0, 0.0, 0.0, 0.0], &[200.0]).unwrap();
        for &x in &tr.distributions[0] {
            assert!((x - 0.2).abs() < 1e-10);
        }
    }

    #[test]
    fn trajectory_normalization_preserved() {
        let mut rng = ChaCha12Rng::seed_from_u64(9);
        let chain = random_positive_chain(&mut rng, 6);
        let p0 = {
            let mut v: Vec<f64> = (0..6).map(|_| rng.gen_range(0.01..1.0)).collect();
            let t: f64 = v.iter().sum();
            v.iter_mut().for_each(|x| *x /= t);
            v
        };
        let times: Vec<f64> = (1..=100).map(|i| i as f64 * 0.1).collect();
        let tr = evolve(&chain, &p0, &times).unwrap();
        for p in &tr.distributions {
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn detailed_balance_cases() {
        // symmetric rates with the uniform law: balanced
        let chain =
            ChainSpec::continuous(vec![vec![0.0, 0.3], vec![0.3, 0.0]]).unwrap();
        let (ok, _) = detailed_balance_check(&chain, &[0.5, 0.5]).unwrap();
        assert!(ok);
        // one-way 3-cycle: globally balanced under uniform, not detailed
        let cycle = ChainSpec::continuous(vec![
            vec![0.0, 1.0, 0.0],
            vec![0.0, 0.0, 1.0],
            vec![1.0, 0.0, 0.0],
        ])
        .unwrap();
        let uniform = vec![1.0 / 3.0; 3];
        assert!(cycle.flow(&uniform).iter().all(|f| f.abs() < 1e-12));
        let (ok, worst) = detailed_balance_check(&cycle, &uniform).unwrap();
        assert!(!ok);
        assert!(worst > 0.1);
        // truncated queue with its geometric law
        let chain = mm1_chain(0.3, 0.5, 50).unwrap();
        let pi = mm1_geometric(0.3, 0.5, 50);
        let (ok, _) = detailed_balance_check(&chain, &pi).unwrap();
        assert!(ok);
    }

    #[test]
    fn mm1_stationary_matches_geometric() {
        let chain = mm1_chain(0.3, 0.5, 50).unwrap();
        let solved = chain.solve_stationary().unwrap();
        let geometric = mm1_geometric(0.3, 0.5, 50);
        for (a, b) in solved.iter().zip(&geometric) {
            assert!((a - b).abs() < 1e-10, "{a} vs {b}");
        }
    }

    #[test]
    fn kolmogorov_cases() {
        // birth-death topology: no cycles beyond back-and-forth pairs
        let chain = mm1_chain(0.4, 0.9, 6).unwrap();
        let (ok, worst) = kolmogorov_cycle_check(&chain, 7).unwrap();
        assert!(ok);
        assert!(worst.is_none());
        // asymmetric 3-cycle fails and reports the cycle
        let cycle = ChainSpec::continuous(vec![
            vec![0.0, 1.0, 0.2],
            vec![0.2, 0.0, 1.0],
            vec![1.0, 0.2, 0.0],
        ])
        .unwrap();
        let (ok, worst) = kolmogorov_cycle_check(&cycle, 3).unwrap();
        assert!(!ok);
        assert_eq!(worst.unwrap().len(), 4); // closed triangle
        // symmetric rates pass on any topology
        let mut rng = ChaCha12Rng::seed_from_u64(4);
        let mut m = vec![vec![0.0; 6]; 6];
        for r in 0..6 {
            for s in r + 1..6 {
                let v = rng.gen_range(0.0..1.0);
                m[r][s] = v;
                m[s][r] = v;
            }
        }
        let chain = ChainSpec::continuous(m).unwrap();
        assert!(kolmogorov_cycle_check(&chain, 6).unwrap().0);
    }

    #[test]
    fn detailed_balance_iff_cycle_criterion() {
        let mut rng = ChaCha12Rng::seed_from_u64(12);
        // reversible chains pass both
        for _ in 0..6 {
            let (chain, _) = random_reversible_chain(&mut rng, 7);
            let pi = chain.solve_stationary().unwrap();
            let (db, _) = detailed_balance_check(&chain, &pi).unwrap();
            let (kc, _) = kolmogorov_cycle_check(&chain, 7).unwrap();
            assert!(db && kc);
        }
        // generic positive chains fail both
        for _ in 0..6 {
            let chain = random_positive_chain(&mut rng, 7);
            let pi = chain.solve_stationary().unwrap();
            let (db, _) = detailed_balance_check(&chain, &pi).unwrap();
            let (kc, _) = kolmogorov_cycle_check(&chain, 7).unwrap();
            assert_eq!(db, kc);
            assert!(!db);
        }
    }

    #[test]
    fn monitors_move_the_right_way() {
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        let chain = random_positive_chain(&mut rng, 6);
        let pi = chain.solve_stationary().unwrap();
        let p0 = {
            let mut v = vec![0.0; 6];
            v[0] = 0.9;
            v[3] = 0.1;
            v
        };
        let times: Vec<f64> = (1..=100).map(|i| i as f64 * 0.05).collect();
        let tr = evolve(&chain, &p0, &times).unwrap();
        let div =
            monotone_monitor(&tr, MonitorFunctional::DivergenceToStationary, Some(&pi)).unwrap();
        assert!(div.monotone, "divergence failed to decrease");
        let rev = monotone_monitor(&tr, MonitorFunctional::ReverseDivergence, Some(&pi)).unwrap();
        assert!(rev.monotone);
        let smoment = monotone_monitor(&tr, MonitorFunctional::SMoment(0.5), Some(&pi)).unwrap();
        assert!(smoment.monotone);
        // custom concave: V(x) = -x ln x gives -D(P(t)||P), non-decreasing
        let custom = custom_monitor(&tr, |x| if x > 0.0 { -x * x.ln() } else { 0.0 }, &pi).unwrap();
        assert!(custom.monotone);
        for (u, d) in custom.values.iter().zip(&div.values) {
            assert_relative_eq!(*u, -d, epsilon = 1e-9);
        }
    }

    #[test]
    fn entropy_grows_for_symmetric_dynamics() {
        let mut rng = ChaCha12Rng::seed_from_u64(8);
        let mut m = vec![vec![0.0; 5]; 5];
        for r in 0..5 {
            for s in r + 1..5 {
                let v = rng.gen_range(0.05..0.6);
                m[r][s] = v;
                m[s][r] = v;
            }
        }
        let chain = ChainSpec::continuous(m).unwrap();
        let times: Vec<f64> = (1..=80).map(|i| i as f64 * 0.05).collect();
        let tr = evolve(&chain, &[1.0, 0.0, 0.0, 0.0, 0.0], &times).unwrap();
        let h = monotone_monitor(&tr, MonitorFunctional::Entropy, None).unwrap();
        assert!(h.monotone);
    }

    #[test]
    fn entropy_grows_for_doubly_stochastic_discrete() {
        let mut rng = ChaCha12Rng::seed_from_u64(15);
        for _ in 0..20 {
            // random doubly stochastic mix of permutation-like kernels
            let n = 5;
            let mut m = vec![vec![0.0; n]; n];
            for _ in 0..12 {
                let w = rng.gen_range(0.01..0.2);
                let shift = rng.gen_range(0..n);
                for r in 0..n {
                    m[r][(r + shift) % n] += w;
                }
            }
            // normalize rows (shifts keep it doubly stochastic)
            for r in 0..n {
                let t: f64 = m[r].iter().sum();
                for x in m[r].iter_mut() {
                    *x /= t;
                }
            }
            let chain = ChainSpec::discrete(m).unwrap();
            let times: Vec<f64> = (1..=200).map(|i| i as f64).collect();
            let p0 = {
                let mut v: Vec<f64> = (0..n).map(|_| rng.gen_range(0.01..1.0)).collect();
                let t: f64 = v.iter().sum();
                v.iter_mut().for_each(|x| *x /= t);
                v
            };
            let tr = evolve(&chain, &p0, &times).unwrap();
            let h = monotone_monitor(&tr, MonitorFunctional::Entropy, None).unwrap();
            assert!(h.monotone);
        }
    }

    #[test]
    fn divergence_pair_cases() {
        let mut rng = ChaCha12Rng::seed_from_u64(10);
        let chain = random_positive_chain(&mut rng, 6);
        let times: Vec<f64> = (1..=100).map(|i| i as f64 * 0.05).collect();
        let p = {
            let mut v: Vec<f64> = (0..6).map(|_| rng.gen_range(0.01..1.0)).collect();
            let t: f64 = v.iter().sum();
            v.iter_mut().for_each(|x| *x /= t);
            v
        };
        // identical starts: divergence identically zero
        let rep = divergence_pair_monitor(&chain, &p, &p, &times).unwrap();
        assert!(rep.values.iter().all(|v| v.abs() < 1e-12));
        // generic pair: non-increasing
        let q = {
            let mut v: Vec<f64> = (0..6).map(|_| rng.gen_range(0.01..1.0)).collect();
            let t: f64 = v.iter().sum();
            v.iter_mut().for_each(|x| *x /= t);
            v
        };
        let rep = divergence_pair_monitor(&chain, &p, &q, &times).unwrap();
        assert!(rep.monotone);
        // against the stationary start this is the divergence-to-stationary
        let pi = chain.solve_stationary().unwrap();
        let rep2 = divergence_pair_monitor(&chain, &p, &pi, &times).unwrap();
        let tr = evolve(&chain, &p, &times).unwrap();
        let direct =
            monotone_monitor(&tr, MonitorFunctional::DivergenceToStationary, Some(&pi)).unwrap();
        for (a, b) in rep2.values.iter().zip(&direct.values) {
            assert!((a - b).abs() < 1e-8);
        }
    }

    #[test]
    fn ziv_zakai_information_decays() {
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        let chain = random_positive_chain(&mut rng, 5);
        let p0 = {
            let mut v: Vec<f64> = (0..5).map(|_| rng.gen_range(0.05..1.0)).collect();
            let t: f64 = v.iter().sum();
            v.iter_mut().for_each(|x| *x /= t);
            v
        };
        let times: Vec<f64> = (0..=50).map(|i| i as f64 * 0.1).collect();
        // V = ln: J = -I(X_0; X_t); at t = 0 this is -H(X_0)
        let rep = ziv_zakai_monitor(&chain, &p0, |x| x.ln(), &times).unwrap();
        let worst = rep
            .values
            .windows(2)
            .map(|w| w[0] - w[1])
            .fold(f64::NEG_INFINITY, f64::max);
        assert!(rep.monotone, "mutual information failed to decay (worst drop {worst:e})");
        assert_relative_eq!(rep.values[0], -entropy(&p0), epsilon = 1e-12);
        // V = -x ln x stays monotone as well; this V grows superlinearly,
        // so the deterministic t = 0 coupling (zero off-diagonal joints) is
        // singular and the monitor starts at t > 0
        let later: Vec<f64> = (1..=50).map(|i| i as f64 * 0.1).collect();
        let rep =
            ziv_zakai_monitor(&chain, &p0, |x| if x > 0.0 { -x * x.ln() } else { 0.0 }, &later)
                .unwrap();
        assert!(rep.monotone);
    }

    #[test]
    fn chain_spec_validation() {
        assert!(ChainSpec::discrete(vec![vec![0.6, 0.3], vec![0.5, 0.5]]).is_err());
        assert!(ChainSpec::continuous(vec![vec![0.0, -0.1], vec![0.2, 0.0]]).is_err());
        let chain = ChainSpec::new(
            ChainMode::ContinuousTime,
            vec!["a".into(), "b".into()],
            vec![vec![0.0, 0.3], vec![0.7, 0.0]],
            Some(vec![0.7, 0.3]),
        )
        .unwrap();
        assert_eq!(chain.stationary.as_ref().unwrap().len(), 2);
        // wrong stationary rejected
        assert!(ChainSpec::new(
            ChainMode::ContinuousTime,
            vec!["a".into(), "b".into()],
            vec![vec![0.0, 0.3], vec![0.7, 0.0]],
            Some(vec![0.5, 0.5]),
        )
        .is_err());
    }

    #[test]
    fn chain_spec_json_round_trip() {
        let chain = mm1_chain(0.3, 0.5, 3).unwrap();
        let text = serde_json::to_string(&chain).unwrap();
        let back: ChainSpec = serde_json::from_str(&text).unwrap();
        assert_eq!(back.mode, ChainMode::ContinuousTime);
        assert_eq!(back.matrix, chain.matrix);
    }
}
