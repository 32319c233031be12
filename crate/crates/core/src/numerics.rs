//! Shared numerical kernels: stable log-sums, root finding, 1-D optimization,
//! adaptive quadrature and small dense linear algebra.
//!
//! Everything here is deterministic and allocation-light; the domain modules
//! build on these rather than re-rolling their own loops.

use crate::error::{Error, Result};

/// log(sum(exp(x_i))) computed against the running maximum.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let mut it = values.iter().copied().filter(|v| !v.is_infinite() || *v > 0.0);
    let first = match it.next() {
        Some(v) => v,
        None => return f64::NEG_INFINITY,
    };
    let mut acc = OnlineLogSumExp::new();
    acc.push(first);
    for v in it {
        acc.push(v);
    }
    acc.value()
}

/// Streaming log-sum-exp: O(1) memory regardless of the number of terms.
#[derive(Debug, Clone)]
pub struct OnlineLogSumExp {
    max: f64,
    sum: f64, // sum of exp(x - max)
}

impl OnlineLogSumExp {
    pub fn new() -> Self {
        Self { max: f64::NEG_INFINITY, sum: 0.0 }
    }

    pub fn push(&mut self, x: f64) {
        if x == f64::NEG_INFINITY {
            return;
        }
        if x > self.max {
            self.sum = self.sum * (self.max - x).exp() + 1.0;
            self.max = x;
        } else {
            self.sum += (x - self.max).exp();
        }
    }

    pub fn value(&self) -> f64 {
        if self.max == f64::NEG_INFINITY {
            f64::NEG_INFINITY
        } else {
            self.max + self.sum.ln()
        }
    }
}

impl Default for OnlineLogSumExp {
    fn default() -> Self {
        Self::new()
    }
}

/// Bisection for f(x) = 0 on [lo, hi]; requires a sign change.
pub fn bisect<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> Result<f64> {
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.is_nan() || fhi.is_nan() {
        return Err(Error::Convergence(format!(
            "bisection endpoints not finite: f({lo}) = {flo}, f({hi}) = {fhi}"
        )));
    }
    if flo * fhi > 0.0 {
        return Err(Error::Convergence(format!(
            "bisection bracket has no sign change: f({lo}) = {flo}, f({hi}) = {fhi}"
        )));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if hi - lo < tol {
            return Ok(mid);
        }
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if flo * fm < 0.0 {
            hi = mid;
        } else {
            lo = mid;
            flo = fm;
        }
    }
    Ok(0.5 * (lo + hi))
}

const INV_PHI: f64 = 0.618_033_988_749_894_9; // 1/golden ratio

/// Golden-section minimizer on [lo, hi]; unimodality is the caller's promise.
/// Returns (argmin, min).
pub fn golden_min<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> (f64, f64) {
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > tol {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        }
    }
    let xm = 0.5 * (lo + hi);
    (xm, f(xm))
}

/// Golden-section maximizer; returns (argmax, max).
pub fn golden_max<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, tol: f64) -> (f64, f64) {
    let (x, v) = golden_min(|x| -f(x), lo, hi, tol);
    (x, -v)
}

/// Coarse grid scan followed by golden-section refinement in the bracketing
/// cells. Returns (argmax, max). The grid pins the basin; golden section
/// handles the rest.
pub fn grid_then_golden_max<F: Fn(f64) -> f64>(
    f: &F,
    lo: f64,
    hi: f64,
    points: usize,
    tol: f64,
) -> (f64, f64) {
    let n = points.max(3);
    let step = (hi - lo) / (n - 1) as f64;
    let mut best_i = 0;
    let mut best_v = f64::NEG_INFINITY;
    for i in 0..n {
        let v = f(lo + i as f64 * step);
        if v > best_v {
            best_v = v;
            best_i = i;
        }
    }
    let a = lo + step * best_i.saturating_sub(1) as f64;
    let b = (lo + step * (best_i + 1) as f64).min(hi);
    golden_max(f, a, b, tol)
}

/// Adaptive Simpson quadrature with a relative tolerance. The error scale is
/// seeded from a coarse scan so narrow bumps inside a wide interval cannot
/// starve the tolerance and blow up the recursion.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, rel_tol: f64) -> Result<f64> {
    const SCAN: usize = 128;
    let step = (b - a) / SCAN as f64;
    let mut rough = 0.0;
    let mut peak = 0.0f64;
    let mut prev = f(a);
    let mut total = 0.0;
    let mut segments: Vec<(f64, f64, f64, f64)> = Vec::with_capacity(SCAN);
    for i in 0..SCAN {
        let x0 = a + i as f64 * step;
        let x1 = a + (i + 1) as f64 * step;
        let fx1 = if i + 1 == SCAN { f(b) } else { f(x1) };
        rough += 0.5 * (prev + fx1) * step;
        peak = peak.max(prev.abs()).max(fx1.abs());
        segments.push((x0, x1, prev, fx1));
        prev = fx1;
    }
    let scale = rough.abs().max(peak * (b - a).abs() / 16.0).max(1e-300);
    let eps = (rel_tol * scale).max(1e-300);
    for (x0, x1, f0, f1) in segments {
        let m = 0.5 * (x0 + x1);
        let fm = f(m);
        let whole = (x1 - x0) / 6.0 * (f0 + 4.0 * fm + f1);
        total += simpson_rec(f, x0, x1, f0, fm, f1, whole, eps / SCAN as f64, 48)?;
    }
    Ok(total)
}

#[allow(clippy::too_many_arguments)]
fn simpson_rec<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    eps: f64,
    depth: u32,
) -> Result<f64> {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if delta.abs() <= 15.0 * eps || b - a < 1e-14 * (1.0 + a.abs() + b.abs()) {
        return Ok(left + right + delta / 15.0);
    }
    if depth == 0 {
        return Err(Error::Quadrature(format!(
            "adaptive Simpson recursion exhausted on [{a}, {b}]"
        )));
    }
    let l = simpson_rec(f, a, m, fa, flm, fm, left, eps * 0.5, depth - 1)?;
    let r = simpson_rec(f, m, b, fm, frm, fb, right, eps * 0.5, depth - 1)?;
    Ok(l + r)
}

/// Central first derivative with the fixed step used throughout this crate.
pub const FD_STEP: f64 = 1e-5;

pub fn central_d1<F: Fn(f64) -> f64>(f: &F, x: f64) -> f64 {
    (f(x + FD_STEP) - f(x - FD_STEP)) / (2.0 * FD_STEP)
}

pub fn central_d2<F: Fn(f64) -> f64>(f: &F, x: f64) -> f64 {
    (f(x + FD_STEP) - 2.0 * f(x) + f(x - FD_STEP)) / (FD_STEP * FD_STEP)
}

/// Trapezoid rule on a uniform grid with spacing `dx`.
pub fn trapezoid_uniform(values: &[f64], dx: f64) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let inner: f64 = values[1..values.len() - 1].iter().sum();
    dx * (0.5 * (values[0] + values[values.len() - 1]) + inner)
}

/// Solve the dense linear system A x = b by Gaussian elimination with
/// partial pivoting. Sized for the small chains this crate works with.
pub fn solve_dense(a: &[Vec<f64>], b: &[f64]) -> Result<Vec<f64>> {
    let n = b.len();
    if a.len() != n || a.iter().any(|row| row.len() != n) {
        return Err(Error::Shape("solve_dense: non-square system".into()));
    }
    let mut m: Vec<Vec<f64>> = a.to_vec();
    let mut rhs = b.to_vec();
    for col in 0..n {
        let (pivot, pv) = (col..n)
            .map(|r| (r, m[r][col].abs()))
            .max_by(|x, y| x.1.total_cmp(&y.1))
            .unwrap();
        if pv < 1e-300 {
            return Err(Error::Convergence("solve_dense: singular matrix".into()));
        }
        m.swap(col, pivot);
        rhs.swap(col, pivot);
        for r in col + 1..n {
            let factor = m[r][col] / m[col][col];
            if factor != 0.0 {
                for c in col..n {
                    m[r][c] -= factor * m[col][c];
                }
                rhs[r] -= factor * rhs[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let mut s = rhs[r];
        for c in r + 1..n {
            s -= m[r][c] * x[c];
        }
        x[r] = s / m[r][r];
    }
    Ok(x)
}

/// Parabolic (three-point) refinement of a grid extremum: fit a quadratic
/// through (x0,y0), (x1,y1), (x2,y2) and return its stationary point clamped
/// to [x0, x2]. Falls back to x1 when the points are collinear.
pub fn parabolic_vertex(x0: f64, y0: f64, x1: f64, y1: f64, x2: f64, y2: f64) -> f64 {
    let d1 = (y1 - y0) / (x1 - x0);
    let d2 = (y2 - y1) / (x2 - x1);
    let curv = (d2 - d1) / (x2 - x0);
    if curv.abs() < 1e-300 || !curv.is_finite() {
        return x1;
    }
    let vertex = 0.5 * (x0 + x1) - d1 / (2.0 * curv);
    vertex.clamp(x0.min(x2), x0.max(x2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn log_sum_exp_matches_direct() {
        let xs = [-1.0_f64, 0.5, 2.0, -30.0];
        let direct: f64 = xs.iter().map(|x| x.exp()).sum::<f64>().ln();
        assert_relative_eq!(log_sum_exp(&xs), direct, max_relative = 1e-14);
    }

    #[test]
    fn log_sum_exp_handles_large_offsets() {
        let xs = [-1e6, -1e6 + 1.0];
        assert_relative_eq!(log_sum_exp(&xs), -1e6 + (1.0 + 1f64.exp()).ln(), epsilon = 1e-9);
    }

    #[test]
    fn online_matches_batch() {
        let xs = [0.3, -2.0, 5.5, 5.5, -100.0];
        let mut acc = OnlineLogSumExp::new();
        for &x in &xs {
            acc.push(x);
        }
        assert_relative_eq!(acc.value(), log_sum_exp(&xs), epsilon = 1e-13);
    }

    #[test]
    fn bisect_finds_sqrt2() {
        let r = bisect(|x| x * x - 2.0, 0.0, 2.0, 1e-13).unwrap();
        assert_relative_eq!(r, 2f64.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn bisect_rejects_bad_bracket() {
        assert!(bisect(|x| x * x + 1.0, -1.0, 1.0, 1e-12).is_err());
    }

    #[test]
    fn golden_min_quartic() {
        let (x, v) = golden_min(|x| (x - 1.3).powi(4) + 2.0, -10.0, 10.0, 1e-11);
        assert_relative_eq!(x, 1.3, epsilon = 1e-3);
        assert_relative_eq!(v, 2.0, epsilon = 1e-10);
    }

    #[test]
    fn simpson_integrates_gaussian() {
        let v = adaptive_simpson(&|x: f64| (-x * x / 2.0).exp(), -12.0, 12.0, 1e-12).unwrap();
        assert_relative_eq!(v, (2.0 * std::f64::consts::PI).sqrt(), max_relative = 1e-10);
    }

    #[test]
    fn simpson_handles_cusp() {
        // integral of exp(-sqrt(x)) over [0, 50] = 2 - 2 e^{-sqrt(50)}(1+sqrt(50))
        let v = adaptive_simpson(&|x: f64| (-x.sqrt()).exp(), 0.0, 50.0, 1e-11).unwrap();
        let s = 50f64.sqrt();
        let exact = 2.0 - 2.0 * (-s).exp() * (1.0 + s);
        assert_relative_eq!(v, exact, max_relative = 1e-9);
    }

    #[test]
    fn dense_solve_roundtrip() {
        let a = vec![vec![2.0, 1.0, 0.0], vec![1.0, 3.0, 1.0], vec![0.0, 1.0, 4.0]];
        let x_true = [1.0, -2.0, 0.5];
        let b: Vec<f64> = (0..3)
            .map(|r| (0..3).map(|c| a[r][c] * x_true[c]).sum())
            .collect();
        let x = solve_dense(&a, &b).unwrap();
        for (xi, ti) in x.iter().zip(x_true.iter()) {
            assert_relative_eq!(xi, ti, epsilon = 1e-12);
        }
    }

    #[test]
    fn parabola_vertex_recovers_quadratic_max() {
        let f = |x: f64| -(x - 0.37).powi(2);
        let v = parabolic_vertex(0.0, f(0.0), 0.5, f(0.5), 1.0, f(1.0));
        assert_relative_eq!(v, 0.37, epsilon = 1e-12);
    }
}
