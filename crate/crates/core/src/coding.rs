//! Random-coding exponents and rate-distortion machinery: the finite
//! temperature decoder's phase diagram over a binary symmetric channel,
//! the correct-decoding exponent above capacity, erasure-decoding error
//! exponents, the parametric rate-distortion function with its estimation
//! (conditional-variance) integral representation, hierarchical and tree
//! code distortion exponents, and the phase boundaries of joint
//! source-channel coding.

use crate::asymptotics::{binary_divergence, gv_distance, h2_unchecked, LN_2};
use crate::error::{Error, Result};
use crate::numerics::{adaptive_simpson, bisect, golden_max, golden_min, parabolic_vertex};
use crate::rem::RemPhase;
use serde::{Deserialize, Serialize};

/// Binary symmetric channel with crossover probability p < 1/2.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct BscSpec {
    pub p: f64,
}

impl BscSpec {
    pub fn new(p: f64) -> Result<Self> {
        if !(p > 0.0 && p < 0.5) {
            return Err(Error::Domain(format!("BscSpec: p = {p} outside (0, 1/2)")));
        }
        Ok(Self { p })
    }

    /// J = ln((1-p)/p) > 0, the log-likelihood slope per flipped bit.
    pub fn j(&self) -> f64 {
        ((1.0 - self.p) / self.p).ln()
    }

    /// C = ln 2 - h2(p) in nats per channel use.
    pub fn capacity(&self) -> f64 {
        LN_2 - h2_unchecked(self.p)
    }
}

/// Attracting distortion level of the temperature-beta posterior:
/// p_beta = p^beta / (p^beta + (1-p)^beta), computed as a stable sigmoid.
pub fn p_beta(p: f64, beta: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Domain(format!("p_beta: p = {p} outside (0, 1)")));
    }
    if beta < 0.0 {
        return Err(Error::Domain("p_beta: beta must be >= 0".into()));
    }
    Ok(sigmoid_p_beta(p, beta))
}

fn sigmoid_p_beta(p: f64, beta: f64) -> f64 {
    let bj = beta * ((1.0 - p) / p).ln();
    if bj >= 0.0 {
        (-bj).exp() / (1.0 + (-bj).exp())
    } else {
        1.0 / (1.0 + bj.exp())
    }
}

/// ln[p^beta + (1-p)^beta], stable for large beta.
fn log_moment(p: f64, beta: f64) -> f64 {
    let j = ((1.0 - p) / p).ln();
    beta * (1.0 - p).ln() + (-beta * j).exp().ln_1p()
}

/// The glassy-paramagnetic boundary temperature of the incorrect-codeword
/// sum: beta_c(R) = ln[(1 - d_GV)/d_GV] / ln[(1-p)/p].
pub fn ze_beta_c(rate: f64, p: f64) -> Result<f64> {
    let spec = BscSpec::new(p)?;
    let d = gv_distance(rate)?;
    if d <= 0.0 {
        return Err(Error::Domain("ze_beta_c: rate = ln 2 has no finite boundary".into()));
    }
    Ok(((1.0 - d) / d).ln() / spec.j())
}

/// Free energy of the incorrect-codeword ensemble: the paramagnetic branch
/// R - ln 2 + ln[p^beta + (1-p)^beta] below beta_c(R), the frozen branch
/// beta [d_GV ln p + (1 - d_GV) ln(1-p)] above it.
pub fn ze_phi(beta: f64, rate: f64, p: f64) -> Result<(f64, RemPhase)> {
    if rate <= 0.0 || rate >= LN_2 {
        return Err(Error::Domain(format!("ze_phi: rate = {rate} outside (0, ln 2)")));
    }
    if beta < 0.0 {
        return Err(Error::Domain("ze_phi: beta must be >= 0".into()));
    }
    let bc = ze_beta_c(rate, p)?;
    if beta <= bc {
        Ok((rate - LN_2 + log_moment(p, beta), RemPhase::Paramagnetic))
    } else {
        let d = gv_distance(rate)?;
        Ok((beta * (d * p.ln() + (1.0 - d) * (1.0 - p).ln()), RemPhase::Glassy))
    }
}

/// Per-symbol log-weight of the transmitted codeword:
/// beta [ln(1-p) - J p] = beta [p ln p + (1-p) ln(1-p)].
pub fn ferro_exponent(beta: f64, p: f64) -> Result<f64> {
    let spec = BscSpec::new(p)?;
    Ok(beta * ((1.0 - p).ln() - spec.j() * p))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DecoderPhase {
    /// The transmitted codeword dominates the posterior: reliable decoding.
    Ferromagnetic,
    /// Exponentially many incorrect codewords dominate.
    Paramagnetic,
    /// A subexponential belt of incorrect codewords at the minimum distance
    /// dominates.
    Glassy,
}

/// One point of the decoder phase diagram.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PhasePoint {
    pub beta: f64,
    pub rate: f64,
    pub phase: DecoderPhase,
    /// The per-symbol exponent of the dominant contribution.
    pub dominant_exponent: f64,
}

/// Classify a (beta, R) point by comparing the transmitted-codeword weight
/// against the incorrect-codeword free energy.
pub fn decoder_phase(beta: f64, rate: f64, p: f64) -> Result<PhasePoint> {
    let ferro = ferro_exponent(beta, p)?;
    let (ze, branch) = ze_phi(beta, rate, p)?;
    let (phase, dominant) = if ferro >= ze {
        (DecoderPhase::Ferromagnetic, ferro)
    } else {
        match branch {
            RemPhase::Paramagnetic => (DecoderPhase::Paramagnetic, ze),
            RemPhase::Glassy => (DecoderPhase::Glassy, ze),
        }
    };
    Ok(PhasePoint { beta, rate, phase, dominant_exponent: dominant })
}

/// Locate the reliable-unreliable boundary in beta for a fixed rate by
/// bisection on the exponent difference; `None` when one side dominates
/// throughout (e.g. R > C never turns ferromagnetic).
pub fn decoder_boundary_beta(rate: f64, p: f64, beta_max: f64) -> Result<Option<f64>> {
    let diff =
        |beta: f64| ferro_exponent(beta, p).unwrap() - ze_phi(beta, rate, p).unwrap().0;
    BscSpec::new(p)?;
    ze_phi(0.1, rate, p)?; // validate rate once
    let steps = 4000;
    let mut prev_b = 1e-9;
    let mut prev = diff(prev_b);
    for i in 1..=steps {
        let b = beta_max * i as f64 / steps as f64;
        let cur = diff(b);
        if prev * cur <= 0.0 {
            return Ok(Some(bisect(diff, prev_b, b, 1e-12)?));
        }
        prev_b = b;
        prev = cur;
    }
    Ok(None)
}

/// Exponential decay rate of the probability of correct decoding above
/// capacity: D(d_GV(R) || p) when d_GV(R) <= p, zero below capacity.
pub fn pc_exponent(rate: f64, p: f64) -> Result<f64> {
    if !(0.0..LN_2).contains(&rate) {
        return Err(Error::Domain(format!("pc_exponent: rate = {rate} outside [0, ln 2)")));
    }
    BscSpec::new(p)?;
    let d = gv_distance(rate)?;
    if d > p {
        return Ok(0.0);
    }
    binary_divergence(d, p)
}

/// An optimized exponent with whichever achieving parameters apply.
#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
pub struct ExponentResult {
    pub value: f64,
    pub s_star: Option<f64>,
    pub rho_star: Option<f64>,
    pub beta_star: Option<f64>,
    pub delta_star: Option<f64>,
    pub m_star: Option<f64>,
}

fn positive_part(x: f64) -> f64 {
    x.max(0.0)
}

/// Erasure-decoding exponent from the two-parameter bound:
/// max over 0 <= s <= rho <= 1 of
/// (rho - [rho - beta s]_+) ln 2
///   - (1 + beta s) ln[p^{1/(1+beta s)} + (1-p)^{1/(1+beta s)}] - rho R - s T,
/// by exhaustive search on a lattice of the given step.
pub fn erasure_exponent_jensen(
    rate: f64,
    threshold: f64,
    p: f64,
    beta: f64,
    grid_step: f64,
) -> Result<ExponentResult> {
    BscSpec::new(p)?;
    if grid_step <= 0.0 || grid_step > 0.5 {
        return Err(Error::Domain(format!("erasure exponent: grid step {grid_step} unusable")));
    }
    let n = (1.0 / grid_step).round() as usize;
    let mut best = f64::NEG_INFINITY;
    let mut arg = (0.0, 0.0);
    for i_s in 0..=n {
        let s = i_s as f64 * grid_step;
        let bs = beta * s;
        let moment = (1.0 + bs) * log_moment(p, 1.0 / (1.0 + bs));
        for i_rho in i_s..=n {
            let rho = i_rho as f64 * grid_step;
            let v = (rho - positive_part(rho - bs)) * LN_2 - moment - rho * rate - s * threshold;
            if v > best {
                best = v;
                arg = (s, rho);
            }
        }
    }
    Ok(ExponentResult {
        value: best,
        s_star: Some(arg.0),
        rho_star: Some(arg.1),
        ..Default::default()
    })
}

/// The moment-enumerator route to the same erasure event:
/// phi(R, beta, s) = min{(ln2 - R)(1 - [1 - beta s]_+),
///                        s (beta [ln2 - R] - R [1 - beta]_+)}
/// and the exponent max over s >= 0 of
/// phi - (1 + beta s) ln[p^{1/(1+beta s)} + (1-p)^{1/(1+beta s)}] - s T.
/// The lattice search runs over [0, s_max]; `refine` adds a golden-section
/// pass around the best cell (kept off when reproducing printed lattice
/// values).
pub fn erasure_exponent_direct(
    rate: f64,
    threshold: f64,
    p: f64,
    beta: f64,
    grid_step: f64,
    s_max: f64,
    refine: bool,
) -> Result<ExponentResult> {
    BscSpec::new(p)?;
    if grid_step <= 0.0 || s_max <= 0.0 {
        return Err(Error::Domain("erasure exponent: bad search parameters".into()));
    }
    let objective = |s: f64| {
        let bs = beta * s;
        let phi = ((LN_2 - rate) * (1.0 - positive_part(1.0 - bs)))
            .min(s * (beta * (LN_2 - rate) - rate * positive_part(1.0 - beta)));
        phi - (1.0 + bs) * log_moment(p, 1.0 / (1.0 + bs)) - s * threshold
    };
    let n = (s_max / grid_step).round() as usize;
    let mut best = f64::NEG_INFINITY;
    let mut best_i = 0;
    for i in 0..=n {
        let v = objective(i as f64 * grid_step);
        if v > best {
            best = v;
            best_i = i;
        }
    }
    let mut s_star = best_i as f64 * grid_step;
    if refine {
        let lo = (s_star - grid_step).max(0.0);
        let hi = (s_star + grid_step).min(s_max);
        let (s_ref, v_ref) = golden_max(objective, lo, hi, 1e-12);
        if v_ref > best {
            best = v_ref;
            s_star = s_ref;
        }
    }
    Ok(ExponentResult { value: best, s_star: Some(s_star), ..Default::default() })
}

// ---------------------------------------------------------------------------
// Rate-distortion
// ---------------------------------------------------------------------------

/// Finite rate-distortion problem: source law q(y), random-coding law p(x)
/// over the reproduction alphabet, distortion matrix d[x][y] >= 0.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RdProblem {
    pub source: Vec<f64>,
    pub coding: Vec<f64>,
    /// distortion[x][y]
    pub distortion: Vec<Vec<f64>>,
}

impl RdProblem {
    pub fn new(source: Vec<f64>, coding: Vec<f64>, distortion: Vec<Vec<f64>>) -> Result<Self> {
        for (name, dist) in [("source", &source), ("coding", &coding)] {
            let total: f64 = dist.iter().sum();
            if (total - 1.0).abs() > 1e-12 || dist.iter().any(|&v| v < 0.0) {
                return Err(Error::Normalization(format!(
                    "rd problem: {name} distribution sums to {total}"
                )));
            }
        }
        if distortion.len() != coding.len()
            || distortion.iter().any(|row| row.len() != source.len())
        {
            return Err(Error::Shape("rd problem: distortion matrix shape mismatch".into()));
        }
        if distortion.iter().flatten().any(|d| !d.is_finite() || *d < 0.0) {
            return Err(Error::Domain("rd problem: distortion must be finite and >= 0".into()));
        }
        Ok(Self { source, coding, distortion })
    }

    /// Binary symmetric source, uniform coding, Hamming distortion.
    pub fn bss_hamming() -> Self {
        Self::new(vec![0.5, 0.5], vec![0.5, 0.5], vec![vec![0.0, 1.0], vec![1.0, 0.0]])
            .unwrap()
    }

    /// D0 = E_{p x q} d(X, Y): the zero-rate distortion.
    pub fn d_zero(&self) -> f64 {
        let mut total = 0.0;
        for (x, px) in self.coding.iter().enumerate() {
            for (y, qy) in self.source.iter().enumerate() {
                total += px * qy * self.distortion[x][y];
            }
        }
        total
    }

    /// D_min = E_q min_x d(x, Y) over the coding support.
    pub fn d_min(&self) -> f64 {
        self.source
            .iter()
            .enumerate()
            .map(|(y, qy)| {
                let m = self
                    .distortion
                    .iter()
                    .zip(&self.coding)
                    .filter(|(_, &px)| px > 0.0)
                    .map(|(row, _)| row[y])
                    .fold(f64::INFINITY, f64::min);
                qy * m
            })
            .sum()
    }

    /// ln Z_y(beta) = ln sum_x p(x) e^{-beta d(x,y)} for each source letter.
    fn log_z_rows(&self, beta: f64) -> Vec<f64> {
        (0..self.source.len())
            .map(|y| {
                let mut acc = crate::numerics::OnlineLogSumExp::new();
                for (x, &px) in self.coding.iter().enumerate() {
                    if px > 0.0 {
                        acc.push(px.ln() - beta * self.distortion[x][y]);
                    }
                }
                acc.value()
            })
            .collect()
    }

    /// The convex objective f(beta) = beta D + sum_y q(y) ln Z_y(beta).
    fn objective(&self, beta: f64, d: f64) -> f64 {
        let rows = self.log_z_rows(beta);
        beta * d + self.source.iter().zip(&rows).map(|(q, lz)| q * lz).sum::<f64>()
    }

    /// The rate along the parametric curve at inverse temperature beta.
    pub fn rate_at(&self, beta: f64) -> f64 {
        -self.objective(beta, self.distortion_at(beta))
    }

    /// Expected distortion D_beta under the tilted posterior.
    pub fn distortion_at(&self, beta: f64) -> f64 {
        let mut total = 0.0;
        for (y, &qy) in self.source.iter().enumerate() {
            let dmin = self.distortion.iter().map(|row| row[y]).fold(f64::INFINITY, f64::min);
            let mut z = 0.0;
            let mut num = 0.0;
            for (x, &px) in self.coding.iter().enumerate() {
                let w = px * (-beta * (self.distortion[x][y] - dmin)).exp();
                z += w;
                num += w * self.distortion[x][y];
            }
            total += qy * num / z;
        }
        total
    }

    /// Average conditional variance of the distortion under the tilted
    /// posterior: sum_y q(y) Var_beta{d(X, y)}.
    pub fn conditional_distortion_variance(&self, beta: f64) -> f64 {
        let mut total = 0.0;
        for (y, &qy) in self.source.iter().enumerate() {
            let dmin = self.distortion.iter().map(|row| row[y]).fold(f64::INFINITY, f64::min);
            let mut z = 0.0;
            let mut m1 = 0.0;
            let mut m2 = 0.0;
            for (x, &px) in self.coding.iter().enumerate() {
                let d = self.distortion[x][y];
                let w = px * (-beta * (d - dmin)).exp();
                z += w;
                m1 += w * d;
                m2 += w * d * d;
            }
            let mean = m1 / z;
            total += qy * (m2 / z - mean * mean).max(0.0);
        }
        total
    }
}

/// Parametric rate-distortion value:
/// R(D) = -min_{beta >= 0} [beta D + sum_y q(y) ln sum_x p(x) e^{-beta d(x,y)}],
/// minimized by golden section after bracket expansion. Returns (R, beta*);
/// beta* is the negative local slope of the curve.
pub fn rd_parametric(problem: &RdProblem, d: f64) -> Result<(f64, f64)> {
    let d0 = problem.d_zero();
    let dmin = problem.d_min();
    if !(dmin..=d0).contains(&d) {
        return Err(Error::Domain(format!("rd_parametric: D = {d} outside [{dmin}, {d0}]")));
    }
    // expand until the derivative D - D_beta turns positive
    let mut hi = 1.0;
    let mut iter = 0;
    while problem.distortion_at(hi) > d && hi < 1e15 {
        hi *= 2.0;
        iter += 1;
        if iter > 60 {
            break;
        }
    }
    let (beta_star, fmin) = golden_min(|b| problem.objective(b, d), 0.0, hi, 1e-10);
    // the boundary beta = 0 wins when D = D0
    let f0 = problem.objective(0.0, d);
    if f0 <= fmin {
        return Ok((-f0, 0.0));
    }
    Ok(((-fmin).max(0.0), beta_star))
}

/// Both routes to R at inverse temperature beta: the integral of
/// beta' Var(distortion) d beta' and the direct parametric evaluation.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct MmseRepresentation {
    pub rate_integral: f64,
    pub d_beta: f64,
    pub rate_direct: f64,
    /// D0 minus the integral of the conditional variance; equals d_beta.
    pub d_from_integral: f64,
}

/// Integral representation of the rate at the distortion level D_beta:
/// R = int_0^beta b Var_b db, with the companion identity
/// D_beta = D0 - int_0^beta Var_b db.
pub fn rd_mmse_representation(problem: &RdProblem, beta: f64) -> Result<MmseRepresentation> {
    if beta < 0.0 {
        return Err(Error::Domain("rd_mmse_representation: beta must be >= 0".into()));
    }
    let d_beta = problem.distortion_at(beta);
    let rate_direct = -problem.objective(beta, d_beta);
    if beta == 0.0 {
        return Ok(MmseRepresentation {
            rate_integral: 0.0,
            d_beta,
            rate_direct,
            d_from_integral: problem.d_zero(),
        });
    }
    let rate_integral = adaptive_simpson(
        &|b: f64| b * problem.conditional_distortion_variance(b),
        0.0,
        beta,
        1e-10,
    )?;
    let var_integral = adaptive_simpson(
        &|b: f64| problem.conditional_distortion_variance(b),
        0.0,
        beta,
        1e-10,
    )?;
    Ok(MmseRepresentation {
        rate_integral,
        d_beta,
        rate_direct,
        d_from_integral: problem.d_zero() - var_integral,
    })
}

/// Channel capacity of the BSC from the parametric form
/// C = -min_beta [beta H(Y|X) + sum_y q(y) ln sum_x p(x) W^beta(y|x)];
/// the minimizer is beta* = 1 and C = ln 2 - h2(p).
pub fn capacity_parametric(p: f64) -> Result<(f64, f64)> {
    BscSpec::new(p)?;
    let h = h2_unchecked(p);
    // uniform input: sum_x p(x) W^beta(y|x) = (p^beta + (1-p)^beta)/2 per y
    let f = |beta: f64| beta * h + log_moment(p, beta) - LN_2;
    let (beta_star, fmin) = golden_min(f, 0.0, 5.0, 1e-10);
    Ok((-fmin, beta_star))
}

/// Least-squares fit of the high-rate decay of the distortion-rate curve
/// for the |x - y|^theta distortion with a uniform coding density on
/// [-1, 1] discretized to `points` levels.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HighResFit {
    pub rates: Vec<f64>,
    pub distortions: Vec<f64>,
    /// Fitted slope of ln D against R; the high-resolution law gives -theta.
    pub slope: f64,
}

pub fn highres_check(theta: u32, r_grid: &[f64], points: usize) -> Result<HighResFit> {
    if !(1..=3).contains(&theta) {
        return Err(Error::Domain(format!("highres_check: theta = {theta} outside {{1, 2, 3}}")));
    }
    if points < 2001 {
        return Err(Error::Domain(format!(
            "highres_check: {points} reproduction levels is too coarse (need >= 2001)"
        )));
    }
    if r_grid.len() < 2 {
        return Err(Error::Domain("highres_check: need at least two rates".into()));
    }
    let nx = points;
    let ny = 51;
    let xs: Vec<f64> = (0..nx).map(|i| -1.0 + 2.0 * i as f64 / (nx - 1) as f64).collect();
    let ys: Vec<f64> = (0..ny).map(|i| -0.5 + i as f64 / (ny - 1) as f64).collect();
    let coding = vec![1.0 / nx as f64; nx];
    let source = vec![1.0 / ny as f64; ny];
    let distortion: Vec<Vec<f64>> = xs
        .iter()
        .map(|&x| ys.iter().map(|&y| (x - y).abs().powi(theta as i32)).collect())
        .collect();
    let problem = RdProblem::new(source, coding, distortion)?;

    // R(beta) is increasing: bisect beta to reach each requested rate
    let mut rates = Vec::new();
    let mut distortions = Vec::new();
    for &target in r_grid {
        let mut lo = 1e-6;
        let mut hi = 10.0;
        while problem.rate_at(hi) < target {
            hi *= 2.0;
            if hi > 1e9 {
                return Err(Error::Convergence(format!(
                    "highres_check: rate {target} unreachable on this grid"
                )));
            }
        }
        for _ in 0..50 {
            let mid = 0.5 * (lo + hi);
            if problem.rate_at(mid) < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let beta = 0.5 * (lo + hi);
        rates.push(problem.rate_at(beta));
        distortions.push(problem.distortion_at(beta));
    }
    // least-squares slope of ln D against R
    let n = rates.len() as f64;
    let mean_r = rates.iter().sum::<f64>() / n;
    let mean_ld = distortions.iter().map(|d| d.ln()).sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for (r, d) in rates.iter().zip(&distortions) {
        num += (r - mean_r) * (d.ln() - mean_ld);
        den += (r - mean_r) * (r - mean_r);
    }
    Ok(HighResFit { rates, distortions, slope: num / den })
}

// ---------------------------------------------------------------------------
// Hierarchical / tree code exponents
// ---------------------------------------------------------------------------

/// The corner point s_R = ln[(1 - d_GV(R)) / d_GV(R)] of the
/// characteristic-function exponent.
pub fn hierarchical_s_corner(rate: f64) -> Result<f64> {
    let d = gv_distance(rate)?;
    if d <= 0.0 {
        return Err(Error::Domain("hierarchical_s_corner: rate = ln 2 degenerates".into()));
    }
    Ok(((1.0 - d) / d).ln())
}

/// Characteristic-function exponent of the distortion of an unstructured
/// random code:
/// u(s, R) = s d_GV(R) for s <= s_R, otherwise
/// v(s, R) = ln 2 - R + s - ln(1 + e^s).
pub fn hierarchical_u(s: f64, rate: f64) -> Result<f64> {
    if s < 0.0 {
        return Err(Error::Domain("hierarchical_u: s must be >= 0".into()));
    }
    if rate <= 0.0 || rate >= LN_2 {
        return Err(Error::Domain(format!("hierarchical_u: rate {rate} outside (0, ln 2)")));
    }
    let s_r = hierarchical_s_corner(rate)?;
    if s <= s_r {
        Ok(s * gv_distance(rate)?)
    } else {
        // ln(1 + e^s) = s + ln(1 + e^{-s}) keeps large s finite
        Ok(LN_2 - rate + s - (s + (-s).exp().ln_1p()))
    }
}

/// How far a two-stage exponent value is known to apply.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum TwoStageValidity {
    /// Valid for every s.
    Unrestricted,
    /// The single-code expression holds for small s only; the true
    /// threshold is not pinned down by the analysis, so the corner point
    /// s_R is reported as a conservative cap.
    ConservativeUpTo(f64),
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TwoStageExponent {
    pub value: f64,
    pub validity: TwoStageValidity,
    /// Whether the requested s falls inside the validity range.
    pub valid_here: bool,
}

/// Characteristic-function exponent of a two-segment code with rates
/// (R1, R2) and first-segment share lambda. R1 < R2 decouples into
/// lambda u(s, R1) + (1 - lambda) u(s, R2); R1 >= R2 behaves like one
/// unstructured code at the average rate for small s.
pub fn hierarchical_two_stage(s: f64, r1: f64, r2: f64, lambda: f64) -> Result<TwoStageExponent> {
    if lambda <= 0.0 || lambda >= 1.0 {
        return Err(Error::Domain(format!("two_stage: lambda = {lambda} outside (0, 1)")));
    }
    let rate = lambda * r1 + (1.0 - lambda) * r2;
    if rate <= 0.0 || rate >= LN_2 {
        return Err(Error::Domain(format!("two_stage: average rate {rate} outside (0, ln 2)")));
    }
    if r1 < r2 {
        let value = lambda * hierarchical_u(s, r1)? + (1.0 - lambda) * hierarchical_u(s, r2)?;
        Ok(TwoStageExponent { value, validity: TwoStageValidity::Unrestricted, valid_here: true })
    } else if r1 == r2 {
        Ok(TwoStageExponent {
            value: hierarchical_u(s, rate)?,
            validity: TwoStageValidity::Unrestricted,
            valid_here: true,
        })
    } else {
        let s_r = hierarchical_s_corner(rate)?;
        Ok(TwoStageExponent {
            value: hierarchical_u(s, rate)?,
            validity: TwoStageValidity::ConservativeUpTo(s_r),
            valid_here: s <= s_r,
        })
    }
}

/// Distortion achieved by the ensemble of tree codes at rate R:
/// D(R) = max_{beta >= 0} [-(R + ln E e^{-beta d(X, y)}) / beta],
/// requiring the per-letter distortion distribution to be the same for
/// every source letter (checked on the weighted multisets).
pub fn dprm_distortion(problem: &RdProblem, rate: f64) -> Result<f64> {
    if rate <= 0.0 {
        return Err(Error::Domain("dprm_distortion: rate must be > 0".into()));
    }
    // symmetry check: sorted (distortion, weight) pairs match across columns
    let column = |y: usize| {
        let mut pairs: Vec<(f64, f64)> = problem
            .distortion
            .iter()
            .zip(&problem.coding)
            .filter(|(_, &px)| px > 0.0)
            .map(|(row, &px)| (row[y], px))
            .collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut merged: Vec<(f64, f64)> = Vec::new();
        for (d, w) in pairs {
            match merged.last_mut() {
                Some((dl, wl)) if (*dl - d).abs() < 1e-12 => *wl += w,
                _ => merged.push((d, w)),
            }
        }
        merged
    };
    let reference = column(0);
    for y in 1..problem.source.len() {
        let other = column(y);
        let same = reference.len() == other.len()
            && reference
                .iter()
                .zip(&other)
                .all(|(a, b)| (a.0 - b.0).abs() < 1e-9 && (a.1 - b.1).abs() < 1e-9);
        if !same {
            return Err(Error::Assumption(format!(
                "dprm_distortion: per-letter distortion law differs between source letters 0 and {y}"
            )));
        }
    }
    // phi0(beta) = (R + ln M(beta)) / beta with M the common moment function
    let log_m = |beta: f64| {
        let mut acc = crate::numerics::OnlineLogSumExp::new();
        for &(d, w) in &reference {
            acc.push(w.ln() - beta * d);
        }
        acc.value()
    };
    let phi0 = |beta: f64| (rate + log_m(beta)) / beta;
    let mut hi = 1.0;
    let mut iter = 0;
    while phi0(hi * 2.0) < phi0(hi) && iter < 60 {
        hi *= 2.0;
        iter += 1;
    }
    let (_, min_phi) = golden_min(phi0, 1e-9, hi * 2.0, 1e-12);
    Ok(-min_phi)
}

// ---------------------------------------------------------------------------
// Joint source-channel coding
// ---------------------------------------------------------------------------

/// Phase boundaries of a joint source-channel system with source skew q,
/// channel crossover p and bandwidth expansion theta.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct JsccBoundaries {
    /// Source skew expressed as a field: B = (1/2) ln(q / (1-q)).
    pub field: f64,
    /// The root in [0, 1/2] of h2(q*) = theta [ln 2 - h2(p)].
    pub q_star: f64,
    /// Reliable-unreliable boundary field B0 = (1/2) ln(q*/(1-q*)); by
    /// symmetry the boundary sits at |B| = |B0|.
    pub field_boundary: f64,
    /// Glassy-paramagnetic boundary beta_c(B).
    pub beta_c: f64,
}

/// delta_m = d_GV(h2((1+m)/2) / theta), zero when the partial rate exceeds
/// ln 2 (every distance is then populated).
fn jscc_delta_m(m: f64, theta: f64) -> f64 {
    let rate = h2_unchecked(0.5 * (1.0 + m)) / theta;
    if rate >= LN_2 {
        0.0
    } else {
        gv_distance(rate).unwrap_or(0.0)
    }
}

/// Per-channel-symbol free energy of the incorrect-codeword sum at fixed
/// source magnetization m.
fn jscc_psi(beta: f64, m: f64, theta: f64, p: f64) -> f64 {
    let dm = jscc_delta_m(m, theta);
    let pb = sigmoid_p_beta(p, beta);
    let j = ((1.0 - p) / p).ln();
    if pb >= dm {
        h2_unchecked(0.5 * (1.0 + m)) / theta + h2_unchecked(pb) - LN_2 - beta * j * pb
    } else {
        -beta * j * dm
    }
}

/// Solve the boundaries: q* by bisection on h2 over [0, 1/2], beta_c(B) by
/// a scan-bracketed bisection of
/// ln 2 - h2(p_beta) = (1/theta) h2((1 + tanh(beta B))/2).
pub fn jscc_boundaries(p: f64, q: f64, theta: f64) -> Result<JsccBoundaries> {
    BscSpec::new(p)?;
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::Domain(format!("jscc_boundaries: q = {q} outside (0, 1)")));
    }
    if theta <= 0.0 {
        return Err(Error::Domain("jscc_boundaries: theta must be > 0".into()));
    }
    let field = 0.5 * (q / (1.0 - q)).ln();
    let target = theta * (LN_2 - h2_unchecked(p));
    if target > LN_2 {
        return Err(Error::Domain(format!(
            "jscc_boundaries: theta [ln 2 - h2(p)] = {target} exceeds ln 2; no source matches"
        )));
    }
    let q_star = bisect(|x| h2_unchecked(x) - target, 0.0, 0.5, 1e-13)?;
    let field_boundary = if q_star <= 0.0 {
        f64::NEG_INFINITY
    } else {
        0.5 * (q_star / (1.0 - q_star)).ln()
    };
    let beta_c = jscc_beta_c(field, theta, p)?;
    Ok(JsccBoundaries { field, q_star, field_boundary, beta_c })
}

/// Glassy-paramagnetic boundary of the joint system at field B.
pub fn jscc_beta_c(field: f64, theta: f64, p: f64) -> Result<f64> {
    BscSpec::new(p)?;
    let g = |beta: f64| {
        LN_2 - h2_unchecked(sigmoid_p_beta(p, beta))
            - h2_unchecked(0.5 * (1.0 + (beta * field).tanh())) / theta
    };
    let mut prev_b = 0.0;
    let mut prev = g(0.0);
    let steps = 8000;
    let hi_end = 50.0;
    for i in 1..=steps {
        let b = hi_end * i as f64 / steps as f64;
        let cur = g(b);
        if prev * cur <= 0.0 {
            return bisect(g, prev_b, b, 1e-13);
        }
        prev_b = b;
        prev = cur;
    }
    Err(Error::Convergence(format!(
        "jscc_beta_c: no glassy-paramagnetic crossing for B = {field}, theta = {theta}, p = {p} \
         on beta in (0, {hi_end}]"
    )))
}

/// Free energy (per source symbol) of the incorrect-codeword sum of the
/// joint system: phi = max_m [theta psi(beta, m) + beta m B], maximized on
/// a 1e4-point magnetization grid with parabolic refinement. Returns
/// (phi, phase, m_star).
pub fn jscc_phi(beta: f64, field: f64, theta: f64, p: f64) -> Result<(f64, RemPhase, f64)> {
    BscSpec::new(p)?;
    if beta < 0.0 || theta <= 0.0 {
        return Err(Error::Domain("jscc_phi: beta >= 0, theta > 0 required".into()));
    }
    const GRID: usize = 10_000;
    let lo = -1.0 + 1e-9;
    let hi = 1.0 - 1e-9;
    let objective = |m: f64| theta * jscc_psi(beta, m, theta, p) + beta * m * field;
    let ms: Vec<f64> = (0..=GRID).map(|i| lo + (hi - lo) * i as f64 / GRID as f64).collect();
    let vals: Vec<f64> = ms.iter().map(|&m| objective(m)).collect();
    let mut best_i = 0;
    let mut best = f64::NEG_INFINITY;
    for (i, &v) in vals.iter().enumerate() {
        if v > best {
            best = v;
            best_i = i;
        }
    }
    let (m_star, phi) = if best_i > 0 && best_i < GRID {
        let x = parabolic_vertex(
            ms[best_i - 1],
            vals[best_i - 1],
            ms[best_i],
            vals[best_i],
            ms[best_i + 1],
            vals[best_i + 1],
        );
        (x, objective(x).max(best))
    } else {
        (ms[best_i], best)
    };
    let grid_tol = 2.0 * (hi - lo) / GRID as f64;
    let phase = if (m_star - (beta * field).tanh()).abs() <= grid_tol {
        RemPhase::Paramagnetic
    } else {
        RemPhase::Glassy
    };
    Ok((phi, phase, m_star))
}
