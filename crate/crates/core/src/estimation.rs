//! Fisher information on gridded densities, the small-perturbation entropy
//! slope (a one-sided de Bruijn identity), the Fisher-information reading
//! of temperature, and a log-sum upper bound on the entropy rate of a
//! hidden Markov process.

use crate::error::{Error, Result};
use crate::numerics::trapezoid_uniform;
use rand::prelude::*;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

/// A probability density tabulated on a uniform grid, trapezoid-normalized,
/// with its support strictly inside the grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GriddedDensity {
    pub x0: f64,
    pub dx: f64,
    pub values: Vec<f64>,
}

impl GriddedDensity {
    pub fn new(x0: f64, dx: f64, values: Vec<f64>) -> Result<Self> {
        if values.len() < 5 || dx <= 0.0 {
            return Err(Error::Shape("gridded density: need dx > 0 and >= 5 points".into()));
        }
        if values.iter().any(|&v| v < 0.0 || !v.is_finite()) {
            return Err(Error::Domain("gridded density: values must be finite and >= 0".into()));
        }
        let norm = trapezoid_uniform(&values, dx);
        if (norm - 1.0).abs() > 1e-8 {
            return Err(Error::Normalization(format!(
                "gridded density: trapezoid mass {norm} is not 1"
            )));
        }
        if values[0] >= 1e-12 || values[values.len() - 1] >= 1e-12 {
            return Err(Error::Domain(
                "gridded density: support must lie strictly inside the grid".into(),
            ));
        }
        Ok(Self { x0, dx, values })
    }

    /// Tabulate and renormalize a nonnegative shape function on [lo, hi].
    pub fn from_fn<F: Fn(f64) -> f64>(lo: f64, hi: f64, n: usize, f: F) -> Result<Self> {
        let dx = (hi - lo) / (n - 1) as f64;
        let mut values: Vec<f64> = (0..n).map(|i| f(lo + i as f64 * dx).max(0.0)).collect();
        let norm = trapezoid_uniform(&values, dx);
        if norm <= 0.0 {
            return Err(Error::Normalization("gridded density: zero mass".into()));
        }
        for v in values.iter_mut() {
            *v /= norm;
        }
        Self::new(lo, dx, values)
    }

    pub fn grid(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.values.len()).map(move |i| self.x0 + i as f64 * self.dx)
    }

    pub fn mean(&self) -> f64 {
        let weighted: Vec<f64> =
            self.grid().zip(&self.values).map(|(x, &v)| x * v).collect();
        trapezoid_uniform(&weighted, self.dx)
    }

    pub fn variance(&self) -> f64 {
        let mu = self.mean();
        let weighted: Vec<f64> =
            self.grid().zip(&self.values).map(|(x, &v)| (x - mu) * (x - mu) * v).collect();
        trapezoid_uniform(&weighted, self.dx)
    }

    /// Differential entropy -int q ln q by the trapezoid rule.
    pub fn differential_entropy(&self) -> f64 {
        let integrand: Vec<f64> = self
            .values
            .iter()
            .map(|&q| if q > 1e-300 { -q * q.ln() } else { 0.0 })
            .collect();
        trapezoid_uniform(&integrand, self.dx)
    }
}

/// Fisher information J(Q) = int [Q'(x)]^2 / Q(x) dx for a translation
/// parameter: central-difference derivative, trapezoid integral, points
/// with Q below 1e-12 excluded from the quotient.
pub fn fisher_information(density: &GriddedDensity) -> Result<f64> {
    let q = &density.values;
    let n = q.len();
    let mut integrand = vec![0.0; n];
    for i in 1..n - 1 {
        if q[i] > 1e-12 {
            let dq = (q[i + 1] - q[i - 1]) / (2.0 * density.dx);
            integrand[i] = dq * dq / q[i];
        }
    }
    Ok(trapezoid_uniform(&integrand, density.dx))
}

/// The Fisher-information reading of temperature for the quadratic
/// Hamiltonian convention (alpha/2) x^2: T = alpha / J(Q) in k = 1 units.
/// At the Boltzmann density (variance kT/alpha) this recovers T.
pub fn generalized_temperature(density: &GriddedDensity, alpha: f64) -> Result<f64> {
    if alpha <= 0.0 {
        return Err(Error::Domain("generalized_temperature: alpha must be > 0".into()));
    }
    Ok(alpha / fisher_information(density)?)
}

/// Outcome of the additive-perturbation entropy-slope check.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DeBruijnReport {
    /// Slope of h(X + sqrt(delta) Z) at delta = 0, extrapolated from the
    /// sampled deltas.
    pub slope: f64,
    /// J(Q)/2, the analytic value of that slope.
    pub half_fisher: f64,
    /// (effective delta, entropy) pairs actually used.
    pub entropies: Vec<(f64, f64)>,
}

/// Estimate d h(X + sqrt(delta) Z)/d delta at delta = 0 for an arbitrary
/// symmetric unit-variance perturbation law Z, and report it next to
/// J(Q)/2.
///
/// For each delta the scaled kernel is sampled on the density's own
/// lattice (mass renormalized), the convolution is taken by direct
/// summation, and the forward slope is charged to the kernel's measured
/// second moment rather than the nominal delta; a polynomial extrapolation
/// through the sampled slopes then removes the O(delta) and O(delta^2)
/// error terms.
pub fn de_bruijn_check(
    density: &GriddedDensity,
    perturbation: &GriddedDensity,
    deltas: &[f64],
) -> Result<DeBruijnReport> {
    if deltas.iter().filter(|&&d| d > 0.0).count() < 2 || deltas.iter().any(|&d| d < 0.0) {
        return Err(Error::Domain("de_bruijn_check: need >= 2 positive deltas".into()));
    }
    // perturbation contract: symmetric about zero, unit variance
    if (perturbation.mean()).abs() > 1e-9 {
        return Err(Error::Domain("de_bruijn_check: perturbation mean must be 0".into()));
    }
    let m = &perturbation.values;
    let half = m.len() / 2;
    for i in 0..half {
        if (m[i] - m[m.len() - 1 - i]).abs() > 1e-9 {
            return Err(Error::Domain(
                "de_bruijn_check: perturbation must be symmetric about 0".into(),
            ));
        }
    }
    let pvar = perturbation.variance();
    if (pvar - 1.0).abs() > 1e-6 {
        return Err(Error::Domain(format!(
            "de_bruijn_check: perturbation variance {pvar} is not 1"
        )));
    }

    let h0 = density.differential_entropy();
    let dx = density.dx;
    let z_reach = perturbation
        .grid()
        .last()
        .unwrap()
        .abs()
        .max(perturbation.x0.abs());
    let mut slopes: Vec<(f64, f64)> = Vec::with_capacity(deltas.len());
    let mut entropies = Vec::with_capacity(deltas.len());
    for &delta in deltas {
        if delta == 0.0 {
            // no perturbation: the entry is h(X) itself
            entropies.push((0.0, h0));
            continue;
        }
        let sd = delta.sqrt();
        let reach = (sd * z_reach / dx).ceil() as i64 + 2;
        if reach as usize > 8 * density.values.len() {
            return Err(Error::Quadrature(
                "de_bruijn_check: scaled kernel overflows the convolution grid".into(),
            ));
        }
        // kernel of sqrt(delta) Z sampled on the lattice
        let mut kernel: Vec<f64> = (-reach..=reach)
            .map(|mm| {
                let u = mm as f64 * dx;
                interp_density(perturbation, u / sd) / sd
            })
            .collect();
        let mass: f64 = kernel.iter().sum::<f64>() * dx;
        if mass <= 0.0 {
            return Err(Error::Quadrature("de_bruijn_check: kernel lost all mass".into()));
        }
        for kv in kernel.iter_mut() {
            *kv /= mass;
        }
        let v_eff: f64 = kernel
            .iter()
            .enumerate()
            .map(|(idx, &kv)| {
                let u = (idx as i64 - reach) as f64 * dx;
                u * u * kv
            })
            .sum::<f64>()
            * dx;
        // direct lattice convolution
        let n = density.values.len();
        let mut conv = vec![0.0; n];
        for (idx, &kv) in kernel.iter().enumerate() {
            if kv == 0.0 {
                continue;
            }
            let shift = idx as i64 - reach;
            for i in 0..n {
                let j = i as i64 - shift;
                if (0..n as i64).contains(&j) {
                    conv[i] += kv * density.values[j as usize] * dx;
                }
            }
        }
        let h = {
            let integrand: Vec<f64> = conv
                .iter()
                .map(|&q| if q > 1e-300 { -q * q.ln() } else { 0.0 })
                .collect();
            trapezoid_uniform(&integrand, dx)
        };
        if h < h0 - 1e-12 {
            return Err(Error::Quadrature(format!(
                "de_bruijn_check: entropy decreased under perturbation ({h} < {h0})"
            )));
        }
        slopes.push((v_eff, (h - h0) / v_eff));
        entropies.push((v_eff, h));
    }
    // Lagrange extrapolation of the slopes to zero effective variance
    let mut slope = 0.0;
    for (k, &(vk, sk)) in slopes.iter().enumerate() {
        let mut weight = 1.0;
        for (j, &(vj, _)) in slopes.iter().enumerate() {
            if j != k {
                weight *= -vj / (vk - vj);
            }
        }
        slope += weight * sk;
    }
    Ok(DeBruijnReport { slope, half_fisher: fisher_information(density)? / 2.0, entropies })
}

fn interp_density(d: &GriddedDensity, x: f64) -> f64 {
    let pos = (x - d.x0) / d.dx;
    if pos < 0.0 || pos > (d.values.len() - 1) as f64 {
        return 0.0;
    }
    let i = pos.floor() as usize;
    if i + 1 >= d.values.len() {
        return d.values[d.values.len() - 1];
    }
    let frac = pos - i as f64;
    d.values[i] * (1.0 - frac) + d.values[i + 1] * frac
}

// ---------------------------------------------------------------------------
// Hidden Markov entropy-rate upper bound
// ---------------------------------------------------------------------------

/// A stationary hidden Markov source: state transitions Q(x_t | x_{t-1}),
/// emissions W(y | x), and the stationary state law.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HmmSpec {
    pub transition: Vec<Vec<f64>>,
    pub emission: Vec<Vec<f64>>,
    pub stationary: Vec<f64>,
}

impl HmmSpec {
    /// Build from the two stochastic matrices, solving for the stationary
    /// state law.
    pub fn new(transition: Vec<Vec<f64>>, emission: Vec<Vec<f64>>) -> Result<Self> {
        let nx = transition.len();
        if nx == 0 || transition.iter().any(|r| r.len() != nx) {
            return Err(Error::Shape("hmm: transition matrix must be square".into()));
        }
        if emission.len() != nx || emission.is_empty() {
            return Err(Error::Shape("hmm: emission rows must match the state count".into()));
        }
        for (name, rows) in [("transition", &transition), ("emission", &emission)] {
            for (i, row) in rows.iter().enumerate() {
                if row.iter().any(|&v| v < 0.0) {
                    return Err(Error::Domain(format!("hmm: negative entry in {name} row {i}")));
                }
                let total: f64 = row.iter().sum();
                if (total - 1.0).abs() > 1e-12 {
                    return Err(Error::Normalization(format!(
                        "hmm: {name} row {i} sums to {total}"
                    )));
                }
            }
        }
        let chain = crate::dynamics::ChainSpec::discrete(transition.clone())?;
        let stationary = chain.solve_stationary()?;
        Self::with_stationary(transition, emission, stationary)
    }

    pub fn with_stationary(
        transition: Vec<Vec<f64>>,
        emission: Vec<Vec<f64>>,
        stationary: Vec<f64>,
    ) -> Result<Self> {
        let nx = transition.len();
        if stationary.len() != nx {
            return Err(Error::Shape("hmm: stationary length mismatch".into()));
        }
        // pi Q = pi within 1e-10
        for s in 0..nx {
            let flowed: f64 = (0..nx).map(|r| stationary[r] * transition[r][s]).sum();
            if (flowed - stationary[s]).abs() > 1e-10 {
                return Err(Error::Domain(format!(
                    "hmm: declared stationary violates balance at state {s}"
                )));
            }
        }
        Ok(Self { transition, emission, stationary })
    }

    pub fn state_count(&self) -> usize {
        self.transition.len()
    }

    pub fn symbol_count(&self) -> usize {
        self.emission[0].len()
    }

    /// The true two-symbol output law
    /// P(y0, y1) = sum_{x0,x1} pi(x0) Q(x1|x0) W(y0|x0) W(y1|x1).
    pub fn pair_law(&self) -> Vec<Vec<f64>> {
        let (nx, ny) = (self.state_count(), self.symbol_count());
        let mut law = vec![vec![0.0; ny]; ny];
        for x0 in 0..nx {
            for x1 in 0..nx {
                let w = self.stationary[x0] * self.transition[x0][x1];
                if w == 0.0 {
                    continue;
                }
                for y0 in 0..ny {
                    for y1 in 0..ny {
                        law[y0][y1] += w * self.emission[x0][y0] * self.emission[x1][y1];
                    }
                }
            }
        }
        law
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HmmBound {
    /// Upper bound on the entropy rate in nats per symbol.
    pub bound: f64,
    /// The optimized backward conditionals P0(x | y); the bound depends on
    /// the auxiliary joint law only through these.
    pub conditionals: Vec<Vec<f64>>,
    /// False when the ascent was still moving at the iteration cap.
    pub converged: bool,
}

#[derive(Debug, Clone, Copy)]
pub struct HmmBoundOptions {
    pub iterations: usize,
    pub restarts: usize,
    pub seed: u64,
}

impl Default for HmmBoundOptions {
    fn default() -> Self {
        Self { iterations: 300, restarts: 5, seed: 0 }
    }
}

/// Upper bound on the entropy rate of the output process from the log-sum
/// inequality: H <= -max_{P0} E[Delta(Y0, Y1; P0)] per symbol, where the
/// expectation runs over the true two-symbol law and
/// Delta(y0, y1) = E0 ln[Q(X1|X0) W(y1|X1) / P0(X1|y1)]
/// with X0 ~ P0(.|y0) and X1 ~ P0(.|y1) independent. Any auxiliary law
/// gives a valid bound; the multiplicative-update ascent (product start
/// plus random restarts) only tightens it.
pub fn hmm_entropy_upper_bound(hmm: &HmmSpec, options: &HmmBoundOptions) -> Result<HmmBound> {
    let (nx, ny) = (hmm.state_count(), hmm.symbol_count());
    let pair = hmm.pair_law();
    let ln_q: Vec<Vec<f64>> = hmm
        .transition
        .iter()
        .map(|row| row.iter().map(|&v| if v > 0.0 { v.ln() } else { f64::NEG_INFINITY }).collect())
        .collect();
    let ln_w: Vec<Vec<f64>> = hmm
        .emission
        .iter()
        .map(|row| row.iter().map(|&v| if v > 0.0 { v.ln() } else { f64::NEG_INFINITY }).collect())
        .collect();

    let objective = |c: &[Vec<f64>]| -> f64 {
        let mut total = 0.0;
        for y0 in 0..ny {
            for y1 in 0..ny {
                let w = pair[y0][y1];
                if w == 0.0 {
                    continue;
                }
                let mut term = 0.0;
                for x0 in 0..nx {
                    if c[y0][x0] == 0.0 {
                        continue;
                    }
                    for x1 in 0..nx {
                        if c[y1][x1] > 0.0 {
                            term += c[y0][x0] * c[y1][x1] * ln_q[x0][x1];
                        }
                    }
                }
                for x1 in 0..nx {
                    let cx = c[y1][x1];
                    if cx > 0.0 {
                        term += cx * (ln_w[x1][y1] - cx.ln());
                    }
                }
                total += w * term;
            }
        }
        total
    };

    let gradient = |c: &[Vec<f64>]| -> Vec<Vec<f64>> {
        let mut g = vec![vec![0.0; nx]; ny];
        for y in 0..ny {
            for x in 0..nx {
                if c[y][x] == 0.0 {
                    g[y][x] = f64::NEG_INFINITY;
                    continue;
                }
                let mut acc = 0.0;
                // terms where y plays the earlier symbol (x is X0)
                for (y1, row) in g.iter().enumerate().map(|(i, _)| i).zip(0..ny) {
                    let _ = row;
                    let w = pair[y][y1];
                    if w == 0.0 {
                        continue;
                    }
                    let mut inner = 0.0;
                    for x1 in 0..nx {
                        if c[y1][x1] > 0.0 {
                            inner += c[y1][x1] * ln_q[x][x1];
                        }
                    }
                    acc += w * inner;
                }
                // terms where y plays the later symbol (x is X1)
                for y0 in 0..ny {
                    let w = pair[y0][y];
                    if w == 0.0 {
                        continue;
                    }
                    let mut inner = ln_w[x][y] - c[y][x].ln() - 1.0;
                    for x0 in 0..nx {
                        if c[y0][x0] > 0.0 {
                            inner += c[y0][x0] * ln_q[x0][x];
                        }
                    }
                    acc += w * inner;
                }
                g[y][x] = acc;
            }
        }
        g
    };

    let ascend = |mut c: Vec<Vec<f64>>| -> (Vec<Vec<f64>>, f64, bool) {
        let mut prev = objective(&c);
        let mut converged = false;
        for _ in 0..options.iterations {
            let g = gradient(&c);
            for y in 0..ny {
                let finite_max =
                    g[y].iter().copied().filter(|v| v.is_finite()).fold(f64::NEG_INFINITY, f64::max);
                let mut total = 0.0;
                for x in 0..nx {
                    if c[y][x] > 0.0 && g[y][x].is_finite() {
                        c[y][x] *= (0.5 * (g[y][x] - finite_max)).exp();
                    } else {
                        c[y][x] = 0.0;
                    }
                    total += c[y][x];
                }
                for x in 0..nx {
                    c[y][x] /= total;
                }
            }
            let cur = objective(&c);
            if (cur - prev).abs() < 1e-13 {
                converged = true;
                prev = cur;
                break;
            }
            prev = cur;
        }
        (c, prev, converged)
    };

    // product initialization P0(x|y) proportional to pi(x) W(y|x)
    let mut inits: Vec<Vec<Vec<f64>>> = Vec::new();
    let product: Vec<Vec<f64>> = (0..ny)
        .map(|y| {
            let mut row: Vec<f64> =
                (0..nx).map(|x| hmm.stationary[x] * hmm.emission[x][y]).collect();
            let total: f64 = row.iter().sum();
            if total > 0.0 {
                row.iter_mut().for_each(|v| *v /= total);
            } else {
                row = vec![1.0 / nx as f64; nx];
            }
            row
        })
        .collect();
    inits.push(product);
    let mut rng = ChaCha12Rng::seed_from_u64(options.seed);
    for _ in 0..options.restarts {
        inits.push(
            (0..ny)
                .map(|_| {
                    let mut row: Vec<f64> = (0..nx).map(|_| rng.gen_range(0.05..1.0)).collect();
                    let total: f64 = row.iter().sum();
                    row.iter_mut().for_each(|v| *v /= total);
                    row
                })
                .collect(),
        );
    }

    let mut best_val = f64::NEG_INFINITY;
    let mut best_c = inits[0].clone();
    let mut any_converged = false;
    for init in inits {
        let (c, val, conv) = ascend(init);
        any_converged |= conv;
        if val > best_val {
            best_val = val;
            best_c = c;
        }
    }
    Ok(HmmBound { bound: -best_val, conditionals: best_c, converged: any_converged })
}

/// Monte Carlo estimate of the output entropy rate by the forward
/// (filtering) recursion along a simulated path. Returns the per-symbol
/// estimate and a batch-means standard error.
pub fn hmm_entropy_rate_monte_carlo(hmm: &HmmSpec, steps: u64, seed: u64) -> Result<(f64, f64)> {
    if steps < 1000 {
        return Err(Error::Domain("hmm entropy rate: need at least 1000 steps".into()));
    }
    let (nx, ny) = (hmm.state_count(), hmm.symbol_count());
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let draw = |dist: &[f64], rng: &mut ChaCha12Rng| -> usize {
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        for (i, &p) in dist.iter().enumerate() {
            acc += p;
            if u < acc {
                return i;
            }
        }
        dist.len() - 1
    };
    let mut x = draw(&hmm.stationary, &mut rng);
    let mut filter = hmm.stationary.clone();
    let mut increments = Vec::with_capacity(steps as usize);
    for _ in 0..steps {
        x = draw(&hmm.transition[x], &mut rng);
        let y = draw(&hmm.emission[x], &mut rng);
        // predict
        let mut pred = vec![0.0; nx];
        for r in 0..nx {
            for s in 0..nx {
                pred[s] += filter[r] * hmm.transition[r][s];
            }
        }
        // update
        let mut py = 0.0;
        for s in 0..nx {
            pred[s] *= hmm.emission[s][y];
            py += pred[s];
        }
        increments.push(-py.ln());
        for s in 0..nx {
            pred[s] /= py;
        }
        filter = pred;
        let _ = ny;
    }
    let mean = increments.iter().sum::<f64>() / increments.len() as f64;
    let se = crate::sampler::batch_standard_error(&increments, 200);
    Ok((mean, se))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn gaussian_density(variance: f64, half_width_sigmas: f64, n: usize) -> GriddedDensity {
        let sigma = variance.sqrt();
        let lim = half_width_sigmas * sigma;
        GriddedDensity::from_fn(-lim, lim, n, |x| (-x * x / (2.0 * variance)).exp()).unwrap()
    }

    #[test]
    fn fisher_gaussian() {
        // J = 1/variance for the Boltzmann (Gaussian) case
        let d = gaussian_density(2.0, 10.0, 4001);
        assert!((fisher_information(&d).unwrap() - 0.5).abs() < 1e-4);
        let d = gaussian_density(1.0, 10.0, 4001);
        assert!((fisher_information(&d).unwrap() - 1.0).abs() < 1e-4);
    }

    #[test]
    fn fisher_laplace() {
        // two-sided exponential with unit scale: J = 1
        let d = GriddedDensity::from_fn(-30.0, 30.0, 60_001, |x| (-x.abs()).exp()).unwrap();
        assert!((fisher_information(&d).unwrap() - 1.0).abs() < 1e-3);
    }

    #[test]
    fn fisher_positive_on_nondegenerate_densities() {
        for d in [
            gaussian_density(0.5, 12.0, 4001),
            GriddedDensity::from_fn(-20.0, 20.0, 20_001, |x| (-x.abs().powf(1.5)).exp()).unwrap(),
        ] {
            assert!(fisher_information(&d).unwrap() > 0.0);
        }
    }

    #[test]
    fn temperature_recovers_boltzmann() {
        // Q with variance kT/alpha: T = alpha/J = kT
        let (alpha, k_t) = (3.0, 0.7);
        let d = gaussian_density(k_t / alpha, 12.0, 8001);
        let t = generalized_temperature(&d, alpha).unwrap();
        assert!((t - k_t).abs() < 1e-3);
        // alpha = 2, unit-scale two-sided exponential: J = 1, T = 2
        let d = GriddedDensity::from_fn(-30.0, 30.0, 60_001, |x| (-x.abs()).exp()).unwrap();
        assert!((generalized_temperature(&d, 2.0).unwrap() - 2.0).abs() < 3e-3);
    }

    #[test]
    fn temperature_translation_invariant() {
        let d0 = gaussian_density(1.0, 12.0, 8001);
        let shifted =
            GriddedDensity::from_fn(-12.0 + 2.5, 12.0 + 2.5, 8001, |x| {
                (-(x - 2.5) * (x - 2.5) / 2.0).exp()
            })
            .unwrap();
        let t0 = generalized_temperature(&d0, 1.0).unwrap();
        let t1 = generalized_temperature(&shifted, 1.0).unwrap();
        assert!((t0 - t1).abs() < 1e-9);
    }

    fn unit_uniform(n_inside: usize) -> GriddedDensity {
        // uniform on [-sqrt(3), sqrt(3)], variance 1. The jump sits exactly
        // on a grid point and carries the half value, which makes the
        // trapezoid mass exact and the variance error O(dx^2).
        let a = 3f64.sqrt();
        let dx = a / n_inside as f64;
        let margin = 50usize;
        let total = 2 * (n_inside + margin) + 1;
        let c = 1.0 / (2.0 * a);
        let values: Vec<f64> = (0..total)
            .map(|i| {
                let offset = i as i64 - (n_inside + margin) as i64;
                match offset.unsigned_abs() as usize {
                    k if k < n_inside => c,
                    k if k == n_inside => 0.5 * c,
                    _ => 0.0,
                }
            })
            .collect();
        GriddedDensity::new(-((n_inside + margin) as f64) * dx, dx, values).unwrap()
    }

    fn unit_triangular(n_inside: usize) -> GriddedDensity {
        // triangle on [-sqrt(6), sqrt(6)], variance 1; the kinks sit on grid
        // points so the trapezoid rule is exact on the piecewise-linear law
        let b = 6f64.sqrt();
        let dx = b / n_inside as f64;
        let margin = 50usize;
        let total = 2 * (n_inside + margin) + 1;
        let values: Vec<f64> = (0..total)
            .map(|i| {
                let z = (i as i64 - (n_inside + margin) as i64) as f64 * dx;
                ((1.0 - z.abs() / b) / b).max(0.0)
            })
            .collect();
        GriddedDensity::new(-((n_inside + margin) as f64) * dx, dx, values).unwrap()
    }

    fn unit_gaussian_kernel(n: usize) -> GriddedDensity {
        GriddedDensity::from_fn(-8.0, 8.0, n, |z| (-z * z / 2.0).exp()).unwrap()
    }

    #[test]
    fn de_bruijn_three_perturbation_laws() {
        let q = gaussian_density(1.0, 12.0, 4001);
        let deltas = [1e-2, 5e-3, 2.5e-3];
        let mut slopes = Vec::new();
        for z in [unit_gaussian_kernel(4001), unit_uniform(1500), unit_triangular(1500)] {
            let rep = de_bruijn_check(&q, &z, &deltas).unwrap();
            assert!(
                (rep.slope - rep.half_fisher).abs() < 1e-3,
                "slope {} vs J/2 = {}",
                rep.slope,
                rep.half_fisher
            );
            // perturbation can only add entropy
            let h0 = q.differential_entropy();
            for &(_, h) in &rep.entropies {
                assert!(h >= h0);
            }
            slopes.push(rep.slope);
        }
        // perturbation-universality: pairwise agreement
        for i in 0..slopes.len() {
            for j in i + 1..slopes.len() {
                assert!((slopes[i] - slopes[j]).abs() < 2e-3);
            }
        }
    }

    #[test]
    fn de_bruijn_closed_form_gaussian() {
        // gaussian + gaussian: h = (1/2) ln(2 pi e (1 + delta)); slope 1/2
        let q = gaussian_density(1.0, 12.0, 4001);
        let z = unit_gaussian_kernel(4001);
        let rep = de_bruijn_check(&q, &z, &[0.0, 1e-2, 5e-3, 2.5e-3]).unwrap();
        assert!((rep.slope - 0.5).abs() < 1e-4);
        // the zero-delta entry is the unperturbed entropy itself
        assert_eq!(rep.entropies[0].0, 0.0);
        assert_eq!(rep.entropies[0].1, q.differential_entropy());
        assert_relative_eq!(
            q.differential_entropy(),
            0.5 * (2.0 * std::f64::consts::PI * std::f64::consts::E).ln(),
            epsilon = 1e-6
        );
    }

    #[test]
    fn de_bruijn_rejects_bad_perturbations() {
        let q = gaussian_density(1.0, 12.0, 2001);
        // wrong variance
        let z = GriddedDensity::from_fn(-8.0, 8.0, 2001, |x| (-x * x).exp()).unwrap();
        assert!(de_bruijn_check(&q, &z, &[1e-2, 5e-3]).is_err());
        // asymmetric law
        let z = GriddedDensity::from_fn(-6.0, 10.0, 2001, |x| {
            if x > -1.0 && x < 1.9 {
                (1.0 + 0.4 * x).max(0.0)
            } else {
                0.0
            }
        })
        .unwrap();
        assert!(de_bruijn_check(&q, &z, &[1e-2, 5e-3]).is_err());
    }

    fn binary_hmm(flip_q: f64, flip_w: f64) -> HmmSpec {
        HmmSpec::new(
            vec![vec![1.0 - flip_q, flip_q], vec![flip_q, 1.0 - flip_q]],
            vec![vec![1.0 - flip_w, flip_w], vec![flip_w, 1.0 - flip_w]],
        )
        .unwrap()
    }

    #[test]
    fn hmm_bound_observable_chain() {
        // identity channel: the output is the Markov chain itself
        let hmm = HmmSpec::new(
            vec![vec![0.9, 0.1], vec![0.2, 0.8]],
            vec![vec![1.0, 0.0], vec![0.0, 1.0]],
        )
        .unwrap();
        let bound = hmm_entropy_upper_bound(&hmm, &HmmBoundOptions::default()).unwrap();
        assert!(bound.bound.is_finite());
        // entropy rate of the chain: sum pi(x) H(Q(.|x))
        let rate: f64 = hmm
            .stationary
            .iter()
            .zip(&hmm.transition)
            .map(|(&pi, row)| {
                pi * row.iter().filter(|&&v| v > 0.0).map(|&v| -v * v.ln()).sum::<f64>()
            })
            .sum();
        assert!(bound.bound >= rate - 1e-9, "bound {} vs rate {rate}", bound.bound);
    }

    #[test]
    fn hmm_bound_vs_monte_carlo() {
        let hmm = binary_hmm(0.1, 0.2);
        let bound = hmm_entropy_upper_bound(&hmm, &HmmBoundOptions::default()).unwrap();
        let (mc, se) = hmm_entropy_rate_monte_carlo(&hmm, 200_000, 42).unwrap();
        assert!(
            bound.bound >= mc - 3.0 * se,
            "bound {} vs MC {mc} (3 se = {})",
            bound.bound,
            3.0 * se
        );
    }

    #[test]
    fn hmm_bound_tight_for_iid() {
        // transitions ignore the previous state: output is i.i.d. and the
        // bound collapses to the exact single-letter entropy
        let mu = [0.3, 0.7];
        let hmm = HmmSpec::new(
            vec![vec![mu[0], mu[1]], vec![mu[0], mu[1]]],
            vec![vec![0.8, 0.2], vec![0.25, 0.75]],
        )
        .unwrap();
        let bound = hmm_entropy_upper_bound(&hmm, &HmmBoundOptions::default()).unwrap();
        let py: Vec<f64> = (0..2)
            .map(|y| mu[0] * hmm.emission[0][y] + mu[1] * hmm.emission[1][y])
            .collect();
        let exact: f64 = py.iter().map(|&p| -p * p.ln()).sum();
        assert!(bound.bound - exact >= -1e-9);
        assert!((bound.bound - exact).abs() < 1e-6, "{} vs {exact}", bound.bound);
    }

    #[test]
    fn hmm_spec_validation() {
        assert!(HmmSpec::new(vec![vec![0.6, 0.3], vec![0.5, 0.5]], vec![vec![1.0], vec![1.0]])
            .is_err());
        assert!(HmmSpec::with_stationary(
            vec![vec![0.9, 0.1], vec![0.2, 0.8]],
            vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            vec![0.5, 0.5],
        )
        .is_err());
    }
}
