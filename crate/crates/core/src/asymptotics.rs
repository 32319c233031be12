//! Binary-entropy utilities, the Gilbert–Varshamov root, Laplace/saddle-point
//! asymptotics and the numerical Legendre-transform engine.
//!
//! Everything downstream (spin models, random-energy phases, coding
//! exponents) leans on these primitives, so they are kept deliberately
//! boring: natural-log units everywhere, k = 1, derivatives by central
//! differences with a fixed step.

use crate::error::{Error, Result};
use crate::numerics::{
    adaptive_simpson, bisect, central_d2, golden_max, golden_min, FD_STEP,
};
use serde::{Deserialize, Serialize};

pub const LN_2: f64 = std::f64::consts::LN_2;

/// Binary entropy h2(x) = -x ln x - (1-x) ln(1-x) in nats, with 0 ln 0 = 0.
pub fn binary_entropy(x: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::Domain(format!("binary_entropy: x = {x} outside [0, 1]")));
    }
    Ok(h2_unchecked(x))
}

pub(crate) fn h2_unchecked(x: f64) -> f64 {
    let mut s = 0.0;
    if x > 0.0 {
        s -= x * x.ln();
    }
    if x < 1.0 {
        s -= (1.0 - x) * (1.0 - x).ln();
    }
    s
}

/// Binary divergence D(a||b) = a ln(a/b) + (1-a) ln((1-a)/(1-b)) in nats.
pub fn binary_divergence(a: f64, b: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&a) || !(0.0..=1.0).contains(&b) {
        return Err(Error::Domain(format!("binary_divergence: ({a}, {b}) outside [0, 1]^2")));
    }
    let mut s = 0.0;
    if a > 0.0 {
        if b == 0.0 {
            return Ok(f64::INFINITY);
        }
        s += a * (a / b).ln();
    }
    if a < 1.0 {
        if b == 1.0 {
            return Ok(f64::INFINITY);
        }
        s += (1.0 - a) * ((1.0 - a) / (1.0 - b)).ln();
    }
    Ok(s)
}

/// Gilbert–Varshamov distance: the root delta in [0, 1/2] of
/// R + h2(delta) = ln 2, found by bisection to 1e-12.
pub fn gv_distance(rate: f64) -> Result<f64> {
    if !(0.0..=LN_2).contains(&rate) {
        return Err(Error::Domain(format!("gv_distance: R = {rate} outside [0, ln 2]")));
    }
    let target = LN_2 - rate;
    bisect(|d| h2_unchecked(d) - target, 0.0, 0.5, 1e-12)
}

// ---------------------------------------------------------------------------
// Sampled functions and the Legendre transform
// ---------------------------------------------------------------------------

/// A single ordinate: either a finite value or "no configurations here"
/// (entropy identically -infinity outside its support). Keeping the sentinel
/// explicit prevents large negative floats from leaking into extrema.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Sample {
    Finite(f64),
    Unattainable,
}

impl Sample {
    pub fn finite(self) -> Option<f64> {
        match self {
            Sample::Finite(v) => Some(v),
            Sample::Unattainable => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DomainKind {
    ClosedInterval,
    HalfLine,
    FullLine,
}

/// A function tabulated on a strictly increasing grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SampledFunction {
    grid: Vec<f64>,
    values: Vec<Sample>,
    pub domain_kind: DomainKind,
}

impl SampledFunction {
    pub fn new(grid: Vec<f64>, values: Vec<Sample>, domain_kind: DomainKind) -> Result<Self> {
        if grid.len() != values.len() {
            return Err(Error::Shape(format!(
                "sampled function: {} abscissae vs {} ordinates",
                grid.len(),
                values.len()
            )));
        }
        if grid.len() < 3 {
            return Err(Error::Shape("sampled function needs at least 3 samples".into()));
        }
        if grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Shape("sampled function grid must be strictly increasing".into()));
        }
        if values.iter().any(|v| matches!(v, Sample::Finite(x) if !x.is_finite())) {
            return Err(Error::Shape(
                "non-finite ordinate; use Sample::Unattainable for empty support".into(),
            ));
        }
        Ok(Self { grid, values, domain_kind })
    }

    /// Tabulate a closure returning `None` where the function is unattainable.
    pub fn from_fn<F: Fn(f64) -> Option<f64>>(
        grid: Vec<f64>,
        domain_kind: DomainKind,
        f: F,
    ) -> Result<Self> {
        let values = grid
            .iter()
            .map(|&x| match f(x) {
                Some(v) => Sample::Finite(v),
                None => Sample::Unattainable,
            })
            .collect();
        Self::new(grid, values, domain_kind)
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn values(&self) -> &[Sample] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    /// Sign-constrained check of the discrete second differences over every
    /// run of consecutive finite samples. `want_nonpositive = true` tests
    /// concavity, `false` convexity; `tol` absorbs roundoff. On non-uniform
    /// grids the divided-difference curvature is rescaled by the local
    /// spacing so the tolerance keeps its uniform-grid meaning.
    pub fn curvature_ok(&self, want_nonpositive: bool, tol: f64) -> bool {
        for w in self.finite_triples() {
            let [(x0, y0), (x1, y1), (x2, y2)] = w;
            let curv = ((y2 - y1) / (x2 - x1) - (y1 - y0) / (x1 - x0)) / (x2 - x0);
            let h = (x1 - x0).min(x2 - x1);
            let second_diff = 2.0 * curv * h * h;
            if want_nonpositive && second_diff > tol {
                return false;
            }
            if !want_nonpositive && second_diff < -tol {
                return false;
            }
        }
        true
    }

    fn finite_triples(&self) -> Vec<[(f64, f64); 3]> {
        let mut out = Vec::new();
        for i in 0..self.len().saturating_sub(2) {
            let t = [&self.values[i], &self.values[i + 1], &self.values[i + 2]];
            if let (Sample::Finite(a), Sample::Finite(b), Sample::Finite(c)) = (t[0], t[1], t[2]) {
                out.push([
                    (self.grid[i], *a),
                    (self.grid[i + 1], *b),
                    (self.grid[i + 2], *c),
                ]);
            }
        }
        out
    }
}

/// Which conjugate is being taken.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LegendreDirection {
    /// out(y) = max_x [ f(x) - x y ]; concave input, convex output
    /// (entropy-to-log-partition direction).
    SupType,
    /// out(y) = min_x [ x y + f(x) ]; convex input, concave output
    /// (log-partition-to-entropy direction).
    InfType,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LegendrePair {
    pub source: SampledFunction,
    pub transform: SampledFunction,
    pub direction: LegendreDirection,
    /// Refined achieving abscissa for each output point (the map eps*(beta)
    /// or beta*(eps)).
    pub achievers: Vec<f64>,
}

/// Numerical Legendre transform: grid extremum refined by a three-point
/// parabolic fit, ties broken toward the smallest abscissa, unattainable
/// samples excluded.
pub fn legendre_transform(
    f: &SampledFunction,
    direction: LegendreDirection,
    out_grid: &[f64],
) -> Result<LegendrePair> {
    if out_grid.len() < 3 || out_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Shape("output grid must be strictly increasing, length >= 3".into()));
    }
    let shape_ok = match direction {
        LegendreDirection::SupType => f.curvature_ok(true, 1e-8),
        LegendreDirection::InfType => f.curvature_ok(false, 1e-8),
    };
    if !shape_ok {
        return Err(Error::Shape(match direction {
            LegendreDirection::SupType => "sup-type transform requires a concave input".into(),
            LegendreDirection::InfType => "inf-type transform requires a convex input".into(),
        }));
    }
    let pts: Vec<(f64, f64)> = f
        .grid()
        .iter()
        .zip(f.values())
        .filter_map(|(&x, v)| v.finite().map(|y| (x, y)))
        .collect();
    if pts.len() < 3 {
        return Err(Error::Shape("fewer than 3 attainable samples".into()));
    }

    let mut out_vals = Vec::with_capacity(out_grid.len());
    let mut achievers = Vec::with_capacity(out_grid.len());
    for &y in out_grid {
        let obj = |x: f64, fx: f64| match direction {
            LegendreDirection::SupType => fx - x * y,
            LegendreDirection::InfType => -(x * y + fx), // maximize the negation
        };
        let mut best = 0usize;
        let mut best_v = f64::NEG_INFINITY;
        for (i, &(x, fx)) in pts.iter().enumerate() {
            let v = obj(x, fx);
            if v > best_v {
                best_v = v;
                best = i;
            }
        }
        let (x_star, v_star) = if best > 0 && best + 1 < pts.len() {
            let (x0, f0) = pts[best - 1];
            let (x1, f1) = pts[best];
            let (x2, f2) = pts[best + 1];
            parabolic_peak(x0, obj(x0, f0), x1, obj(x1, f1), x2, obj(x2, f2))
        } else {
            (pts[best].0, best_v)
        };
        let value = match direction {
            LegendreDirection::SupType => v_star,
            LegendreDirection::InfType => -v_star,
        };
        out_vals.push(Sample::Finite(value));
        achievers.push(x_star);
    }
    let transform = SampledFunction::new(out_grid.to_vec(), out_vals, DomainKind::ClosedInterval)?;
    Ok(LegendrePair { source: f.clone(), transform, direction, achievers: achievers.clone() })
}

/// Vertex (position, value) of the parabola through three points; clamped to
/// the bracketing abscissae so refinement never leaves the cell.
fn parabolic_peak(x0: f64, y0: f64, x1: f64, y1: f64, x2: f64, y2: f64) -> (f64, f64) {
    let d1 = (y1 - y0) / (x1 - x0);
    let curv = ((y2 - y1) / (x2 - x1) - d1) / (x2 - x0);
    if !curv.is_finite() || curv.abs() < 1e-300 {
        return (x1, y1);
    }
    let xv = (0.5 * (x0 + x1) - d1 / (2.0 * curv)).clamp(x0, x2);
    let yv = y0 + d1 * (xv - x0) + curv * (xv - x0) * (xv - x1);
    (xv, yv)
}

// ---------------------------------------------------------------------------
// Laplace method / saddle-point evaluation
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum LaplaceDomain {
    FullLine,
    HalfLine { lower: f64 },
    Interval { lower: f64, upper: f64 },
}

/// Second-order estimate of (1/n) ln of an integral of g(x) e^{n h(x)}.
///
/// `integral ~ prefactor * exp(n * exponent_rate)`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct LaplaceEstimate {
    /// h at the dominating point (nats per particle).
    pub exponent_rate: f64,
    /// g(x0) sqrt(2 pi / (n |h''(x0)|)), or g(x0) / (n |h'(x0)|) at an edge.
    pub prefactor: f64,
    pub maximizer: f64,
    /// Set when the dominating point is a domain edge with nonzero slope.
    pub boundary_case: bool,
    /// Second derivative of h along the dominant integration direction;
    /// negative whenever `boundary_case` is false. `None` at an edge.
    pub contour_curvature: Option<f64>,
}

const SCAN_POINTS: usize = 4097;

/// Laplace/saddle-point estimate of `int g(x) exp(n h(x)) dx`.
///
/// The dominating point is located by a grid scan plus golden-section
/// refinement. Three situations are handled:
///
/// * an interior maximum of h (the classical Gaussian-peak formula);
/// * a domain edge where h is maximal with h' != 0 (exponential boundary
///   layer, leading prefactor 1 / (n |h'|));
/// * no real maximum but a unique interior stationary minimum on an
///   unbounded domain; this is the vertical-contour reduction of a complex
///   saddle-point integral, where the modulus peaks at the real stationary
///   point and the curvature along the contour is -h''. The estimate is the
///   same Gaussian formula with |h''|.
pub fn laplace_integral<H, G>(h: H, g: G, domain: LaplaceDomain, n: u32) -> Result<LaplaceEstimate>
where
    H: Fn(f64) -> f64,
    G: Fn(f64) -> f64,
{
    if n < 1 {
        return Err(Error::Domain("laplace_integral: n must be >= 1".into()));
    }
    let xs = scan_grid(domain);
    let hs: Vec<f64> = xs.iter().map(|&x| h(x)).collect();

    let nf = f64::from(n);
    let mut interior_max: Option<(f64, f64)> = None;
    let mut interior_min: Option<(f64, f64)> = None;
    let mut n_mins = 0usize;
    for i in 1..xs.len() - 1 {
        let (a, b, c) = (hs[i - 1], hs[i], hs[i + 1]);
        if !(a.is_finite() && b.is_finite() && c.is_finite()) {
            continue;
        }
        if b >= a && b >= c && (b > a || b > c) {
            let (x, v) = golden_max(&h, xs[i - 1], xs[i + 1], 1e-12 * (1.0 + xs[i].abs()));
            if interior_max.map_or(true, |(_, bv)| v > bv) {
                interior_max = Some((x, v));
            }
        }
        if b <= a && b <= c && (b < a || b < c) {
            let (x, v) = golden_min(&h, xs[i - 1], xs[i + 1], 1e-12 * (1.0 + xs[i].abs()));
            n_mins += 1;
            if interior_min.map_or(true, |(_, bv)| v < bv) {
                interior_min = Some((x, v));
            }
        }
    }

    // Edges of genuinely bounded sides.
    let mut edge_best: Option<(f64, f64, f64)> = None; // (x, h, inward sign)
    let mut consider_edge = |x: f64, inward: f64| {
        let v = h(x);
        if v.is_finite() && edge_best.map_or(true, |(_, bv, _)| v > bv) {
            edge_best = Some((x, v, inward));
        }
    };
    match domain {
        LaplaceDomain::Interval { lower, upper } => {
            consider_edge(lower, 1.0);
            consider_edge(upper, -1.0);
        }
        LaplaceDomain::HalfLine { lower } => consider_edge(lower, 1.0),
        LaplaceDomain::FullLine => {}
    }

    let interior_beats_edge =
        |(_, v): &(f64, f64)| edge_best.map_or(true, |(_, ev, _)| *v >= ev - 1e-12);

    if let Some(peak) = interior_max {
        if interior_beats_edge(&peak) {
            let (x0, hx0) = peak;
            let d2 = central_d2(&h, x0);
            if !(d2 < 0.0) || !d2.is_finite() {
                return Err(Error::Convergence(format!(
                    "laplace_integral: degenerate curvature {d2} at interior maximum {x0}"
                )));
            }
            return Ok(LaplaceEstimate {
                exponent_rate: hx0,
                prefactor: g(x0) * (2.0 * std::f64::consts::PI / (nf * d2.abs())).sqrt(),
                maximizer: x0,
                boundary_case: false,
                contour_curvature: Some(d2),
            });
        }
    }

    if let Some((xe, he, inward)) = edge_best {
        // One-sided slope into the domain (second-order forward difference).
        let h1 = FD_STEP * inward;
        let d1 = (4.0 * h(xe + h1) - 3.0 * h(xe) - h(xe + 2.0 * h1)) / (2.0 * h1);
        if interior_max.is_none() || edge_best_is_global(interior_max, he) {
            if d1.abs() < 1e-9 {
                return Err(Error::Convergence(
                    "laplace_integral: edge maximum with vanishing slope is not supported".into(),
                ));
            }
            return Ok(LaplaceEstimate {
                exponent_rate: he,
                prefactor: g(xe) / (nf * d1.abs()),
                maximizer: xe,
                boundary_case: true,
                contour_curvature: None,
            });
        }
    }

    // Saddle-point fallback: a unique stationary minimum on an unbounded
    // domain marks the crossing point of a steepest-descent contour.
    if matches!(domain, LaplaceDomain::FullLine | LaplaceDomain::HalfLine { .. }) {
        if let (Some((x0, hx0)), true) = (interior_min, n_mins == 1 && interior_max.is_none()) {
            let d2 = central_d2(&h, x0);
            if d2 > 0.0 && d2.is_finite() {
                return Ok(LaplaceEstimate {
                    exponent_rate: hx0,
                    prefactor: g(x0) * (2.0 * std::f64::consts::PI / (nf * d2)).sqrt(),
                    maximizer: x0,
                    boundary_case: false,
                    contour_curvature: Some(-d2),
                });
            }
        }
    }

    Err(Error::Convergence(
        "laplace_integral: no interior or edge maximum bracketed on the domain".into(),
    ))
}

fn edge_best_is_global(interior_max: Option<(f64, f64)>, edge_h: f64) -> bool {
    interior_max.map_or(true, |(_, v)| edge_h > v - 1e-12)
}

fn scan_grid(domain: LaplaceDomain) -> Vec<f64> {
    let n = SCAN_POINTS;
    match domain {
        LaplaceDomain::Interval { lower, upper } => (0..n)
            .map(|i| lower + (upper - lower) * i as f64 / (n - 1) as f64)
            .collect(),
        LaplaceDomain::HalfLine { lower } => (0..n)
            .map(|i| {
                let t = (i as f64 + 0.5) / n as f64; // (0, 1)
                lower + t / (1.0 - t)
            })
            .collect(),
        LaplaceDomain::FullLine => (0..n)
            .map(|i| {
                let t = (i as f64 + 0.5) / n as f64;
                (std::f64::consts::PI * (t - 0.5)).tan()
            })
            .collect(),
    }
}

/// Saddle-point size estimate of a binomial type class.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TypeClassEstimate {
    /// N h2(n/N) - (1/2) ln(2 pi N alpha (1-alpha)); `None` when the saddle
    /// degenerates (n = 0 or n = N).
    pub estimate: Option<f64>,
    /// ln C(N, n) via log-gamma.
    pub exact: f64,
}

/// Log-size of the set of binary N-sequences of weight n: second-order
/// saddle-point estimate next to the exact log-binomial.
pub fn type_class_size_estimate(cap_n: u64, n: u64) -> Result<TypeClassEstimate> {
    if cap_n < 1 {
        return Err(Error::Domain("type_class_size_estimate: N must be >= 1".into()));
    }
    if n > cap_n {
        return Err(Error::Domain(format!(
            "type_class_size_estimate: weight {n} exceeds length {cap_n}"
        )));
    }
    if n == 0 || n == cap_n {
        return Ok(TypeClassEstimate { estimate: None, exact: 0.0 });
    }
    let exact = ln_binomial(cap_n, n);
    let nn = cap_n as f64;
    let alpha = n as f64 / nn;
    let estimate = nn * h2_unchecked(alpha)
        - 0.5 * (2.0 * std::f64::consts::PI * nn * alpha * (1.0 - alpha)).ln();
    Ok(TypeClassEstimate { estimate: Some(estimate), exact })
}

/// ln C(n, k) through log-gamma.
pub fn ln_binomial(n: u64, k: u64) -> f64 {
    use statrs::function::gamma::ln_gamma;
    ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0)
}

/// Brute-force quadrature of int g(x) exp(n h(x)) dx over [lo, hi], used by
/// tests as the truth against Laplace estimates.
pub fn exponential_integral_quadrature<H, G>(
    h: H,
    g: G,
    lo: f64,
    hi: f64,
    n: u32,
    shift: f64,
) -> Result<f64>
where
    H: Fn(f64) -> f64,
    G: Fn(f64) -> f64,
{
    // Integrates g e^{n h - shift} so the caller can keep the result in range.
    let nf = f64::from(n);
    adaptive_simpson(&|x: f64| g(x) * (nf * h(x) - shift).exp(), lo, hi, 1e-12)
}
