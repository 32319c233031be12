//! Phase analysis of random-energy landscapes: the random energy model
//! (quenched and annealed, with and without a magnetic field), its two-stage
//! hierarchical generalization, finite-size Monte Carlo validation, and the
//! metastable-state capacity of the infinite-range spin glass.

use crate::asymptotics::{h2_unchecked, Sample, LN_2};
use crate::error::{Error, Result};
use crate::numerics::{bisect, OnlineLogSumExp};
use rand::SeedableRng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

/// Upper Gaussian tail Q(t) = P(N(0,1) > t), through the complementary
/// error function.
pub fn gaussian_tail(t: f64) -> f64 {
    0.5 * erfc(t / std::f64::consts::SQRT_2)
}

/// Lower Gaussian CDF 1 - Q(t), computed without cancellation for t << 0.
pub fn gaussian_cdf(t: f64) -> f64 {
    0.5 * erfc(-t / std::f64::consts::SQRT_2)
}

fn gaussian_pdf(t: f64) -> f64 {
    (-0.5 * t * t).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RemPhase {
    Paramagnetic,
    Glassy,
}

/// One closed-form branch of a free-energy curve:
/// phi(beta) = constant + linear * beta + quadratic * beta^2 on
/// [beta_min, beta_max).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PhiSegment {
    pub beta_min: f64,
    /// Upper interval end; the final segment uses infinity, written as null
    /// in JSON.
    #[serde(with = "infinite_as_null")]
    pub beta_max: f64,
    pub constant: f64,
    pub linear: f64,
    pub quadratic: f64,
    pub label: String,
}

mod infinite_as_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_some(v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

impl PhiSegment {
    pub fn eval(&self, beta: f64) -> f64 {
        self.constant + self.linear * beta + self.quadratic * beta * beta
    }

    pub fn slope(&self, beta: f64) -> f64 {
        self.linear + 2.0 * self.quadratic * beta
    }

    /// Entropy along this branch: phi - beta phi' = constant - quadratic beta^2.
    pub fn entropy(&self, beta: f64) -> f64 {
        self.constant - self.quadratic * beta * beta
    }
}

/// A free-energy curve assembled from contiguous closed-form segments
/// covering [0, infinity), continuous at every transition point.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PiecewisePhi {
    pub segments: Vec<PhiSegment>,
    pub transition_points: Vec<f64>,
}

impl PiecewisePhi {
    pub fn new(segments: Vec<PhiSegment>) -> Result<Self> {
        if segments.is_empty() {
            return Err(Error::Shape("piecewise phi needs at least one segment".into()));
        }
        if segments[0].beta_min != 0.0 {
            return Err(Error::Shape("piecewise phi must start at beta = 0".into()));
        }
        if segments.last().unwrap().beta_max.is_finite() {
            return Err(Error::Shape("piecewise phi must extend to beta = infinity".into()));
        }
        let mut transitions = Vec::new();
        for w in segments.windows(2) {
            if (w[0].beta_max - w[1].beta_min).abs() > 1e-12 {
                return Err(Error::Shape("piecewise phi segments must be contiguous".into()));
            }
            let t = w[0].beta_max;
            if (w[0].eval(t) - w[1].eval(t)).abs() > 1e-10 {
                return Err(Error::Shape(format!(
                    "piecewise phi discontinuous at beta = {t}: {} vs {}",
                    w[0].eval(t),
                    w[1].eval(t)
                )));
            }
            transitions.push(t);
        }
        Ok(Self { segments, transition_points: transitions })
    }

    fn segment_at(&self, beta: f64) -> Result<&PhiSegment> {
        if beta < 0.0 || !beta.is_finite() {
            return Err(Error::Domain(format!("piecewise phi: beta = {beta} out of range")));
        }
        Ok(self
            .segments
            .iter()
            .find(|s| beta >= s.beta_min && beta < s.beta_max)
            .unwrap_or_else(|| self.segments.last().unwrap()))
    }

    pub fn eval(&self, beta: f64) -> Result<(f64, &str)> {
        let seg = self.segment_at(beta)?;
        Ok((seg.eval(beta), &seg.label))
    }

    /// Entropy Sigma(beta) = phi - beta phi' along the active branch.
    pub fn entropy(&self, beta: f64) -> Result<f64> {
        Ok(self.segment_at(beta)?.entropy(beta))
    }

    /// Largest continuity violation across the transition points.
    pub fn max_continuity_gap(&self) -> f64 {
        self.segments
            .windows(2)
            .map(|w| (w[0].eval(w[0].beta_max) - w[1].eval(w[0].beta_max)).abs())
            .fold(0.0, f64::max)
    }
}

fn rem_beta_c(j: f64) -> f64 {
    2.0 * LN_2.sqrt() / j
}

/// The full REM free-energy curve: quadratic below beta_c = (2/J) sqrt(ln 2),
/// linear (frozen) above.
pub fn rem_piecewise(j: f64) -> Result<PiecewisePhi> {
    if j <= 0.0 {
        return Err(Error::Domain("rem: J must be > 0".into()));
    }
    let bc = rem_beta_c(j);
    PiecewisePhi::new(vec![
        PhiSegment {
            beta_min: 0.0,
            beta_max: bc,
            constant: LN_2,
            linear: 0.0,
            quadratic: j * j / 4.0,
            label: "paramagnetic".into(),
        },
        PhiSegment {
            beta_min: bc,
            beta_max: f64::INFINITY,
            constant: 0.0,
            linear: j * LN_2.sqrt(),
            quadratic: 0.0,
            label: "glassy".into(),
        },
    ])
}

/// Quenched REM free energy at one point: ln 2 + beta^2 J^2/4 below the
/// transition, beta J sqrt(ln 2) above.
pub fn rem_phi(beta: f64, j: f64) -> Result<(f64, RemPhase)> {
    if beta < 0.0 {
        return Err(Error::Domain("rem_phi: beta must be >= 0".into()));
    }
    if j <= 0.0 {
        return Err(Error::Domain("rem_phi: J must be > 0".into()));
    }
    if beta <= rem_beta_c(j) {
        Ok((LN_2 + beta * beta * j * j / 4.0, RemPhase::Paramagnetic))
    } else {
        Ok((beta * j * LN_2.sqrt(), RemPhase::Glassy))
    }
}

/// Typical-realization entropy Sigma(eps) = ln 2 - (eps/J)^2 inside
/// |eps| <= J sqrt(ln 2), empty outside.
pub fn rem_entropy(eps: f64, j: f64) -> Result<Sample> {
    if j <= 0.0 {
        return Err(Error::Domain("rem_entropy: J must be > 0".into()));
    }
    let eps0 = j * LN_2.sqrt();
    if eps.abs() <= eps0 {
        Ok(Sample::Finite(LN_2 - (eps / j) * (eps / j)))
    } else {
        Ok(Sample::Unattainable)
    }
}

/// Annealed REM free energy ln 2 + beta^2 J^2 / 4 (no transition).
pub fn rem_annealed_phi(beta: f64, j: f64) -> Result<f64> {
    if beta < 0.0 || j <= 0.0 {
        return Err(Error::Domain("rem_annealed_phi: beta >= 0, J > 0 required".into()));
    }
    Ok(LN_2 + beta * beta * j * j / 4.0)
}

/// One finite-size sample of (ln Z)/n: 2^n i.i.d. N(0, n J^2/2) energies
/// from a seeded ChaCha12 stream, summed by streaming log-sum-exp so memory
/// stays O(1) in the number of configurations.
pub fn rem_monte_carlo(n: u32, j: f64, beta: f64, seed: u64) -> Result<f64> {
    if !(10..=24).contains(&n) {
        return Err(Error::Size(format!("rem_monte_carlo: n = {n} outside 10..=24")));
    }
    if j <= 0.0 || beta < 0.0 {
        return Err(Error::Domain("rem_monte_carlo: J > 0, beta >= 0 required".into()));
    }
    let sigma = (n as f64 * j * j / 2.0).sqrt();
    let normal =
        Normal::new(0.0, sigma).map_err(|e| Error::Domain(format!("rem_monte_carlo: {e}")))?;
    let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(seed);
    let mut acc = OnlineLogSumExp::new();
    let states: u64 = 1 << n;
    for _ in 0..states {
        let energy: f64 = normal.sample(&mut rng);
        acc.push(-beta * energy);
    }
    Ok(acc.value() / n as f64)
}

/// REM in a magnetic field at one (beta, B) point.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RemFieldState {
    pub beta: f64,
    pub field: f64,
    pub coupling: f64,
    /// Dominant magnetization: tanh(beta B) in the paramagnetic phase,
    /// tanh(B beta_c(B)) (beta-independent) in the glassy phase.
    pub m_star: f64,
    pub phase: RemPhase,
    pub phi: f64,
    /// The phase-transition point beta_c(B).
    pub beta_c: f64,
}

/// Glassy-paramagnetic boundary of the REM in a field: the root of
/// beta^2 J^2/4 = h2((1 + tanh(beta B))/2). The left side increases from
/// zero and the right side decreases from ln 2, so the root is bracketed on
/// [0, beta_c(0)] and the transition temperature grows with |B|.
pub fn rem_field_beta_c(field: f64, j: f64) -> Result<f64> {
    if j <= 0.0 {
        return Err(Error::Domain("rem_field_beta_c: J must be > 0".into()));
    }
    let bc0 = rem_beta_c(j);
    let g = |beta: f64| {
        beta * beta * j * j / 4.0 - h2_unchecked(0.5 * (1.0 + (beta * field).tanh()))
    };
    // the analytic root never exceeds beta_c(0); pad the bracket so B = 0,
    // where the root sits exactly at beta_c(0), survives roundoff
    let hi = bc0 * (1.0 + 1e-9);
    if g(hi) < 0.0 {
        return Err(Error::Convergence(format!(
            "rem_field_beta_c: bracket [0, {hi}] failed (g({hi}) = {} < 0)",
            g(hi)
        )));
    }
    bisect(g, 0.0, hi, 1e-13)
}

/// REM free energy in a field: the paramagnetic branch
/// h2((1+m_p)/2) + beta^2 J^2/4 + beta B m_p with m_p = tanh(beta B), and
/// the frozen branch beta [J sqrt(h2((1+m_g)/2)) + B m_g] with the
/// beta-independent m_g = tanh(B beta_c(B)).
pub fn rem_field_phi(beta: f64, field: f64, j: f64) -> Result<RemFieldState> {
    if beta < 0.0 {
        return Err(Error::Domain("rem_field_phi: beta must be >= 0".into()));
    }
    let beta_c = rem_field_beta_c(field, j)?;
    let (m_star, phase, phi) = if beta <= beta_c {
        let m = (beta * field).tanh();
        let phi = h2_unchecked(0.5 * (1.0 + m)) + beta * beta * j * j / 4.0 + beta * field * m;
        (m, RemPhase::Paramagnetic, phi)
    } else {
        let m = (field * beta_c).tanh();
        let phi = beta * (j * h2_unchecked(0.5 * (1.0 + m)).sqrt() + field * m);
        (m, RemPhase::Glassy, phi)
    };
    Ok(RemFieldState { beta, field, coupling: j, m_star, phase, phi, beta_c })
}

/// Weak-field magnetic susceptibility of the REM: 1/T above the zero-field
/// transition temperature T_c(0) = J/(2 sqrt(ln 2)), saturating at 1/T_c(0)
/// below it.
pub fn rem_susceptibility(temperature: f64, j: f64) -> Result<f64> {
    if temperature <= 0.0 || j <= 0.0 {
        return Err(Error::Domain("rem_susceptibility: T > 0, J > 0 required".into()));
    }
    let t_c = j / (2.0 * LN_2.sqrt());
    Ok(if temperature >= t_c { 1.0 / temperature } else { 1.0 / t_c })
}

/// Two-stage hierarchical random-energy landscape: the first stage carries
/// rate R1 and variance share a1, the second R2 = ln 2 - R1 and a2 = 1 - a1.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct GremSpec {
    pub j: f64,
    pub r1: f64,
    pub a1: f64,
}

impl GremSpec {
    pub fn new(j: f64, r1: f64, a1: f64) -> Result<Self> {
        if j <= 0.0 {
            return Err(Error::Domain("grem: J must be > 0".into()));
        }
        if r1 <= 0.0 || r1 >= LN_2 {
            return Err(Error::Domain(format!("grem: R1 = {r1} outside (0, ln 2)")));
        }
        if a1 <= 0.0 || a1 >= 1.0 {
            return Err(Error::Domain(format!("grem: a1 = {a1} outside (0, 1)")));
        }
        Ok(Self { j, r1, a1 })
    }

    pub fn r2(&self) -> f64 {
        LN_2 - self.r1
    }

    pub fn a2(&self) -> f64 {
        1.0 - self.a1
    }

    /// Two separate transitions happen exactly when R1/a1 < ln 2, which by
    /// the mediant inequality is the same as R1/a1 < R2/a2.
    pub fn has_two_transitions(&self) -> bool {
        self.r1 / self.a1 < LN_2
    }
}

/// The full two-stage free-energy curve: three segments when R1/a1 < ln 2
/// (paramagnetic, first stage frozen, fully frozen), otherwise the plain
/// REM curve.
pub fn grem_piecewise(spec: &GremSpec) -> Result<PiecewisePhi> {
    let GremSpec { j, r1, a1 } = *spec;
    let (r2, a2) = (spec.r2(), spec.a2());
    if !spec.has_two_transitions() {
        return rem_piecewise(j);
    }
    let b1 = 2.0 / j * (r1 / a1).sqrt();
    let b2 = 2.0 / j * (r2 / a2).sqrt();
    PiecewisePhi::new(vec![
        PhiSegment {
            beta_min: 0.0,
            beta_max: b1,
            constant: LN_2,
            linear: 0.0,
            quadratic: j * j / 4.0,
            label: "paramagnetic".into(),
        },
        PhiSegment {
            beta_min: b1,
            beta_max: b2,
            constant: r2,
            linear: j * (a1 * r1).sqrt(),
            quadratic: a2 * j * j / 4.0,
            label: "first-stage-frozen".into(),
        },
        PhiSegment {
            beta_min: b2,
            beta_max: f64::INFINITY,
            constant: 0.0,
            linear: j * ((a1 * r1).sqrt() + (a2 * r2).sqrt()),
            quadratic: 0.0,
            label: "glassy".into(),
        },
    ])
}

/// Evaluate the two-stage free energy: (value, phase label, transition count).
pub fn grem_phi(beta: f64, spec: &GremSpec) -> Result<(f64, String, usize)> {
    if beta < 0.0 {
        return Err(Error::Domain("grem_phi: beta must be >= 0".into()));
    }
    let curve = grem_piecewise(spec)?;
    let n_trans = curve.transition_points.len();
    let (value, label) = curve.eval(beta)?;
    Ok((value, label.to_string(), n_trans))
}

/// Metastable-state capacity of the infinite-range spin glass.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SkCapacity {
    /// ln[2 (1 - Q(t*))] - (t* + K/J)^2 / 2 in nats.
    pub capacity: f64,
    /// The stationary point of the exponent.
    pub t_star: f64,
    /// Residual of the stationarity equation at t*.
    pub residual: f64,
}

/// Solve the stationarity equation
/// pdf(t) / (1 - Q(t)) = t + K/J
/// by a scan-bracketed bisection polished with Newton steps, then evaluate
/// the capacity exponent there. The K -> -inf limit gives ln 2 (every state
/// metastable); a large positive threshold drives the count to zero.
pub fn sk_capacity(k_threshold: f64, j: f64) -> Result<SkCapacity> {
    if j <= 0.0 {
        return Err(Error::Domain("sk_capacity: J must be > 0".into()));
    }
    let shift = k_threshold / j;
    let g = |t: f64| gaussian_pdf(t) / gaussian_cdf(t) - (t + shift);
    // inverse Mills ratio ~ |t| for t << 0, so g > 0 far left and
    // g ~ -(t + shift) < 0 far right: scan for the sign change.
    let lo_end = -12.0 - 2.0 * shift.abs();
    let hi_end = 12.0 + 2.0 * shift.abs();
    let steps = 8000;
    let mut bracket = None;
    let mut prev_t = lo_end;
    let mut prev_g = g(lo_end);
    for i in 1..=steps {
        let t = lo_end + (hi_end - lo_end) * i as f64 / steps as f64;
        let gt = g(t);
        if prev_g.is_finite() && gt.is_finite() && prev_g * gt <= 0.0 {
            bracket = Some((prev_t, t));
            break;
        }
        prev_t = t;
        prev_g = gt;
    }
    let (lo, hi) = bracket.ok_or_else(|| {
        Error::Convergence(format!(
            "sk_capacity: no sign change of the stationarity equation on [{lo_end}, {hi_end}]"
        ))
    })?;
    let mut t = bisect(g, lo, hi, 1e-13)?;
    // Newton polish: d/dt [pdf/cdf] = -t (pdf/cdf) - (pdf/cdf)^2
    for _ in 0..4 {
        let ratio = gaussian_pdf(t) / gaussian_cdf(t);
        let deriv = -t * ratio - ratio * ratio - 1.0;
        if deriv.abs() < 1e-300 {
            break;
        }
        let step = g(t) / deriv;
        if !step.is_finite() {
            break;
        }
        t -= step;
    }
    let residual = g(t);
    if residual.abs() > 1e-12 {
        return Err(Error::Convergence(format!(
            "sk_capacity: residual {residual} at t = {t} exceeds 1e-12 (bracket [{lo}, {hi}])"
        )));
    }
    let capacity = (2.0 * gaussian_cdf(t)).ln() - 0.5 * (t + shift) * (t + shift);
    Ok(SkCapacity { capacity, t_star: t, residual })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn rem_phi_branches() {
        // infinite temperature counts configurations
        assert_relative_eq!(rem_phi(0.0, 1.0).unwrap().0, LN_2, epsilon = 1e-15);
        // both branches meet at beta_c with value 2 ln 2 (J = 1)
        let bc = 2.0 * LN_2.sqrt();
        assert_relative_eq!(LN_2 + bc * bc / 4.0, 2.0 * LN_2, epsilon = 1e-14);
        assert_relative_eq!(bc * LN_2.sqrt(), 2.0 * LN_2, epsilon = 1e-14);
        assert_relative_eq!(rem_phi(bc, 1.0).unwrap().0, 2.0 * LN_2, epsilon = 1e-14);
        // deep glassy point
        let (phi, phase) = rem_phi(3.0, 1.0).unwrap();
        assert_eq!(phase, RemPhase::Glassy);
        assert_relative_eq!(phi, 3.0 * LN_2.sqrt(), epsilon = 1e-14);
    }

    #[test]
    fn rem_phi_first_derivative_continuous() {
        let curve = rem_piecewise(1.3).unwrap();
        let bc = curve.transition_points[0];
        assert_relative_eq!(
            curve.segments[0].slope(bc),
            curve.segments[1].slope(bc),
            epsilon = 1e-12
        );
        // second derivative jumps: quadratic coefficients differ
        assert!(curve.segments[0].quadratic > 0.0);
        assert_eq!(curve.segments[1].quadratic, 0.0);
    }

    #[test]
    fn rem_entropy_support() {
        assert_eq!(rem_entropy(0.0, 1.0).unwrap(), Sample::Finite(LN_2));
        let eps0 = LN_2.sqrt();
        match rem_entropy(eps0, 1.0).unwrap() {
            Sample::Finite(v) => assert!(v.abs() < 1e-14),
            _ => panic!("edge of support should be attainable"),
        }
        assert_eq!(rem_entropy(1.1 * eps0, 1.0).unwrap(), Sample::Unattainable);
    }

    #[test]
    fn annealed_dominates_quenched() {
        assert_relative_eq!(rem_annealed_phi(0.0, 1.0).unwrap(), LN_2, epsilon = 1e-15);
        let bc = 2.0 * LN_2.sqrt();
        // phases meet at beta_c
        assert_relative_eq!(
            rem_annealed_phi(bc, 1.0).unwrap(),
            rem_phi(bc, 1.0).unwrap().0,
            epsilon = 1e-13
        );
        // gap at 2 beta_c equals (beta J/2 - sqrt(ln 2))^2
        let beta = 2.0 * bc;
        let gap = rem_annealed_phi(beta, 1.0).unwrap() - rem_phi(beta, 1.0).unwrap().0;
        let expect = (beta / 2.0 - LN_2.sqrt()) * (beta / 2.0 - LN_2.sqrt());
        assert_relative_eq!(gap, expect, epsilon = 1e-12);
        assert!(gap > 0.0);
        // Jensen direction everywhere
        for i in 0..=60 {
            let b = i as f64 * 0.1;
            assert!(rem_annealed_phi(b, 1.0).unwrap() >= rem_phi(b, 1.0).unwrap().0 - 1e-12);
        }
    }

    #[test]
    fn monte_carlo_counting_limit() {
        for seed in [0, 1, 99] {
            let v = rem_monte_carlo(12, 1.0, 0.0, seed).unwrap();
            assert_relative_eq!(v, LN_2, epsilon = 1e-12);
        }
    }

    #[test]
    fn monte_carlo_paramagnetic_concentration() {
        let bc = 2.0 * LN_2.sqrt();
        let beta = 0.5 * bc;
        let phi = rem_phi(beta, 1.0).unwrap().0;
        for seed in 0..3u64 {
            let v = rem_monte_carlo(16, 1.0, beta, seed).unwrap();
            assert!((v - phi).abs() < 0.05, "seed {seed}: {v} vs {phi}");
        }
    }

    #[test]
    fn monte_carlo_size_cap() {
        assert!(rem_monte_carlo(25, 1.0, 1.0, 0).is_err());
        assert!(rem_monte_carlo(9, 1.0, 1.0, 0).is_err());
    }

    #[test]
    fn monte_carlo_deterministic_per_seed() {
        let a = rem_monte_carlo(12, 1.0, 1.0, 7).unwrap();
        let b = rem_monte_carlo(12, 1.0, 1.0, 7).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn field_free_reduction() {
        let s = rem_field_phi(1.0, 0.0, 1.0).unwrap();
        assert_relative_eq!(s.phi, rem_phi(1.0, 1.0).unwrap().0, epsilon = 1e-12);
        assert_relative_eq!(s.beta_c, 2.0 * LN_2.sqrt(), epsilon = 1e-10);
        assert_eq!(s.m_star, 0.0);
        // glassy side too
        let s = rem_field_phi(5.0, 0.0, 1.0).unwrap();
        assert_relative_eq!(s.phi, rem_phi(5.0, 1.0).unwrap().0, epsilon = 1e-10);
    }

    #[test]
    fn field_no_spontaneous_magnetization() {
        for beta in [1.0, 5.0] {
            let mut prev = f64::INFINITY;
            for b in [0.1, 0.01, 0.001] {
                let s = rem_field_phi(beta, b, 1.0).unwrap();
                assert!(s.m_star.abs() < prev);
                prev = s.m_star.abs();
            }
            assert!(prev < 5e-3, "m* failed to vanish as B -> 0 at beta {beta}");
        }
    }

    #[test]
    fn transition_temperature_increases_with_field() {
        // T_c(B) = 1/beta_c(B) grows with |B| (equivalently beta_c shrinks)
        let mut prev_tc = 0.0;
        for b in [0.0, 0.5, 1.0, 2.0] {
            let bc = rem_field_beta_c(b, 1.0).unwrap();
            let tc = 1.0 / bc;
            assert!(tc > prev_tc - 1e-12, "T_c not increasing at B = {b}");
            prev_tc = tc;
        }
        // boundary residual
        let bc = rem_field_beta_c(1.0, 1.0).unwrap();
        let lhs = bc * bc / 4.0;
        let rhs = h2_unchecked(0.5 * (1.0 + bc.tanh()));
        assert!((lhs - rhs).abs() < 1e-10);
    }

    #[test]
    fn field_phi_continuous_at_transition() {
        for b in [0.3, 1.0, 2.0] {
            let bc = rem_field_beta_c(b, 1.0).unwrap();
            let below = rem_field_phi(bc - 1e-9, b, 1.0).unwrap().phi;
            let above = rem_field_phi(bc + 1e-9, b, 1.0).unwrap().phi;
            assert!((below - above).abs() < 1e-7, "B = {b}: {below} vs {above}");
        }
    }

    #[test]
    fn glassy_magnetization_beta_independent() {
        let b = 0.8;
        let s1 = rem_field_phi(4.0, b, 1.0).unwrap();
        let s2 = rem_field_phi(8.0, b, 1.0).unwrap();
        assert_eq!(s1.phase, RemPhase::Glassy);
        assert_relative_eq!(s1.m_star, s2.m_star, epsilon = 1e-14);
        assert_relative_eq!(s1.m_star, (b * s1.beta_c).tanh(), epsilon = 1e-12);
    }

    #[test]
    fn susceptibility_curie_law_and_plateau() {
        let t_c = 1.0 / (2.0 * LN_2.sqrt());
        assert_relative_eq!(
            rem_susceptibility(2.0 * t_c, 1.0).unwrap(),
            1.0 / (2.0 * t_c),
            epsilon = 1e-14
        );
        assert_relative_eq!(rem_susceptibility(0.5 * t_c, 1.0).unwrap(), 1.0 / t_c, epsilon = 1e-14);
        // continuity at T_c
        assert_relative_eq!(
            rem_susceptibility(t_c * (1.0 + 1e-12), 1.0).unwrap(),
            rem_susceptibility(t_c * (1.0 - 1e-12), 1.0).unwrap(),
            epsilon = 1e-9
        );
    }

    #[test]
    fn grem_boundary_ratio_reduces_to_rem() {
        // R1 = a1 ln 2 puts the ratio exactly at ln 2: single transition
        let spec = GremSpec::new(1.0, 0.5 * LN_2, 0.5).unwrap();
        assert!(!spec.has_two_transitions());
        for beta in [0.0, 1.0, 2.0, 4.0] {
            let (v, _, n) = grem_phi(beta, &spec).unwrap();
            assert_eq!(n, 1);
            assert_relative_eq!(v, rem_phi(beta, 1.0).unwrap().0, epsilon = 1e-13);
        }
    }

    #[test]
    fn grem_case_a_structure() {
        let spec = GremSpec::new(1.0, 0.2, 0.5).unwrap(); // ratio 0.4 < ln 2
        assert!(spec.has_two_transitions());
        let curve = grem_piecewise(&spec).unwrap();
        assert_eq!(curve.segments.len(), 3);
        let (b1, b2) = (curve.transition_points[0], curve.transition_points[1]);
        assert!(b1 < b2);
        assert!(curve.max_continuity_gap() < 1e-12);
    }

    #[test]
    fn grem_asymptotic_slope_bounded_by_rem() {
        // beta -> infinity slope J(sqrt(a1 R1) + sqrt(a2 R2)) <= J sqrt(ln 2),
        // equality only at matched ratios (Cauchy-Schwarz)
        let spec = GremSpec::new(1.0, 0.2, 0.5).unwrap();
        let slope = (spec.a1 * spec.r1).sqrt() + (spec.a2() * spec.r2()).sqrt();
        assert!(slope < LN_2.sqrt());
        let matched = GremSpec::new(1.0, 0.5 * LN_2, 0.5).unwrap();
        let slope = (matched.a1 * matched.r1).sqrt() + (matched.a2() * matched.r2()).sqrt();
        assert_relative_eq!(slope, LN_2.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn grem_case_dichotomy() {
        // R1/a1 < ln 2 iff R1/a1 < R2/a2, over a deterministic pseudo-random
        // sweep of (R1, a1)
        let mut x = 0.123_f64;
        for _ in 0..1000 {
            x = (x * 877.31).fract();
            let r1 = 1e-4 + x * (LN_2 - 2e-4);
            x = (x * 997.57).fract();
            let a1 = 1e-4 + x * (1.0 - 2e-4);
            let spec = GremSpec::new(1.0, r1, a1).unwrap();
            let lhs = spec.r1 / spec.a1 < LN_2;
            let rhs = spec.r1 / spec.a1 < spec.r2() / spec.a2();
            assert_eq!(lhs, rhs, "R1 = {r1}, a1 = {a1}");
        }
    }

    #[test]
    fn phi_convexity_across_models() {
        let curves = [
            rem_piecewise(1.0).unwrap(),
            grem_piecewise(&GremSpec::new(1.0, 0.2, 0.5).unwrap()).unwrap(),
            grem_piecewise(&GremSpec::new(0.7, 0.6, 0.4).unwrap()).unwrap(),
        ];
        for curve in &curves {
            let mut prev = [f64::NAN; 3];
            for i in 0..2000 {
                let beta = i as f64 * 0.005;
                let v = curve.eval(beta).unwrap().0;
                prev.rotate_left(1);
                prev[2] = v;
                if i >= 2 {
                    assert!(prev[0] - 2.0 * prev[1] + prev[2] >= -1e-9);
                }
            }
        }
        // field curve: numerical second differences
        for field in [0.4, 1.2] {
            let mut prev = [f64::NAN; 3];
            for i in 0..1200 {
                let beta = i as f64 * 0.005;
                let v = rem_field_phi(beta, field, 1.0).unwrap().phi;
                prev.rotate_left(1);
                prev[2] = v;
                if i >= 2 {
                    assert!(prev[0] - 2.0 * prev[1] + prev[2] >= -1e-9);
                }
            }
        }
    }

    #[test]
    fn entropy_from_phi_nonnegative_and_zero_when_frozen() {
        let curve = rem_piecewise(1.0).unwrap();
        for i in 0..=600 {
            let beta = i as f64 * 0.01;
            let s = curve.entropy(beta).unwrap();
            assert!(s >= -1e-9, "Sigma({beta}) = {s}");
            if beta > curve.transition_points[0] {
                assert!(s.abs() < 1e-12, "glassy branch entropy should vanish");
            }
        }
        let spec = GremSpec::new(1.0, 0.2, 0.5).unwrap();
        let curve = grem_piecewise(&spec).unwrap();
        for i in 0..=800 {
            let beta = i as f64 * 0.01;
            assert!(curve.entropy(beta).unwrap() >= -1e-9);
        }
    }

    #[test]
    fn sk_capacity_limits() {
        // K/J -> -inf: every state metastable, C -> ln 2
        let c = sk_capacity(-10.0, 1.0).unwrap();
        assert!((c.capacity - LN_2).abs() < 1e-3, "C = {}", c.capacity);
        // strongly positive threshold empties the count
        let c = sk_capacity(6.0, 1.0).unwrap();
        assert!(c.capacity < 1e-3, "C = {}", c.capacity);
    }

    #[test]
    fn sk_capacity_matches_grid_search() {
        let sol = sk_capacity(0.0, 1.0).unwrap();
        assert!(sol.residual.abs() < 1e-12);
        // independent dense grid + parabolic refinement of the exponent
        let f = |t: f64| (2.0 * gaussian_cdf(t)).ln() - 0.5 * t * t;
        let mut best_i = 0;
        let mut best = f64::NEG_INFINITY;
        let n = 400_000;
        for i in 0..=n {
            let t = -2.0 + 4.0 * i as f64 / n as f64;
            let v = f(t);
            if v > best {
                best = v;
                best_i = i;
            }
        }
        let step = 4.0 / n as f64;
        let t1 = -2.0 + best_i as f64 * step;
        let (t0, t2) = (t1 - step, t1 + step);
        let x = crate::numerics::parabolic_vertex(t0, f(t0), t1, f(t1), t2, f(t2));
        let grid_best = f(x);
        assert!((sol.capacity - grid_best).abs() < 1e-8, "{} vs grid {grid_best}", sol.capacity);
        // known magnitude of the zero-threshold capacity
        assert!((sol.capacity - 0.1992).abs() < 1e-3);
    }

    #[test]
    fn piecewise_phi_serializes() {
        let curve = rem_piecewise(1.0).unwrap();
        let text = serde_json::to_string(&curve).unwrap();
        let back: PiecewisePhi = serde_json::from_str(&text).unwrap();
        assert_eq!(back.segments.len(), 2);
        assert_relative_eq!(back.eval(1.0).unwrap().0, curve.eval(1.0).unwrap().0, epsilon = 1e-15);
    }
}
