//! Zeros of a truncated GEF: a root finder, an independent argument-principle
//! count, and linear statistics `n(r, h) = Σ h(a/r)`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};

use crate::error::{Error, Result};
use crate::gef::TruncatedGef;

/// Zeros are only trusted on `|z| ≤ WINDOW_SAFETY · r_max`.
pub const WINDOW_SAFETY: f64 = 0.8;

/// Default cap on `max |F*|` at reported zeros.
pub const RESIDUAL_TOL: f64 = 1e-8;

/// Relative radius step used to move a counting circle off a nearby zero.
pub const RADIUS_JITTER: f64 = 1e-4;

/// Largest degree served by the dense companion-matrix fallback.
pub const COMPANION_MAX_DEGREE: usize = 600;

const MAX_ORACLE_NODES: usize = 1 << 18;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ZeroSet {
    pub zeros: Vec<Complex64>,
    /// Radius actually used, possibly jittered off a zero on the circle.
    pub window_radius: f64,
    pub oracle_count: usize,
    /// `max |F*|` over the returned zeros.
    pub residual_max: f64,
    /// Minimal pairwise distance (infinite for fewer than two zeros).
    pub min_separation: f64,
    /// Whether the companion fallback had to be used.
    pub used_fallback: bool,
}

impl ZeroSet {
    pub fn count(&self) -> usize {
        self.zeros.len()
    }

    pub fn count_in_disk(&self, center: Complex64, radius: f64) -> usize {
        self.zeros.iter().filter(|z| (*z - center).norm() <= radius).count()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("re,im\n");
        for z in &self.zeros {
            s.push_str(&format!("{},{}\n", z.re, z.im));
        }
        s
    }
}

/// All roots of `Σ a_k u^k` by Aberth–Ehrlich iteration.
pub fn aberth_roots(a: &[Complex64]) -> Result<Vec<Complex64>> {
    let (low, a) = strip(a);
    let n = a.len() - 1;
    let mut roots = vec![Complex64::new(0.0, 0.0); low];
    if n == 0 {
        return Ok(roots);
    }
    let abs: Vec<f64> = a.iter().map(|c| c.norm()).collect();
    let mut u = initial_guesses(&abs);
    let mut done = vec![false; n];
    let eps = f64::EPSILON;
    let mut converged = false;
    for _ in 0..500 {
        let mut active = false;
        for i in 0..n {
            if done[i] {
                continue;
            }
            let (ratio, small) = newton_ratio(a, &abs, u[i]);
            if small {
                done[i] = true;
                continue;
            }
            let mut s = Complex64::new(0.0, 0.0);
            for j in 0..n {
                if j != i {
                    s += (u[i] - u[j]).inv();
                }
            }
            let w = ratio / (Complex64::new(1.0, 0.0) - ratio * s);
            if !w.re.is_finite() || !w.im.is_finite() {
                return Err(Error::Numerical("non-finite Aberth correction".into()));
            }
            u[i] -= w;
            if w.norm() <= 4.0 * eps * u[i].norm() {
                done[i] = true;
            }
            active = true;
        }
        if !active {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::Numerical("Aberth iteration did not converge".into()));
    }
    roots.extend(u);
    Ok(roots)
}

/// Drop exact zero coefficients at both ends; returns the number of roots at 0.
fn strip(a: &[Complex64]) -> (usize, &[Complex64]) {
    let low = a.iter().take_while(|c| c.norm() == 0.0).count();
    assert!(low < a.len(), "zero polynomial");
    let high = a.iter().rposition(|c| c.norm() != 0.0).unwrap();
    (low, &a[low..=high])
}

/// Roots spread on circles whose radii come from the upper convex hull of
/// `(k, log|a_k|)`.
fn initial_guesses(abs: &[f64]) -> Vec<Complex64> {
    let n = abs.len() - 1;
    let pts: Vec<(f64, f64)> = abs
        .iter()
        .enumerate()
        .filter(|(_, a)| **a > 0.0)
        .map(|(k, a)| (k as f64, a.ln()))
        .collect();
    let mut hull: Vec<(f64, f64)> = Vec::new();
    for p in pts {
        while hull.len() >= 2 {
            let (x1, y1) = hull[hull.len() - 2];
            let (x2, y2) = hull[hull.len() - 1];
            if (x2 - x1) * (p.1 - y1) - (y2 - y1) * (p.0 - x1) >= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }
    let mut out = Vec::with_capacity(n);
    for (seg, w) in hull.windows(2).enumerate() {
        let cnt = (w[1].0 - w[0].0) as usize;
        let radius = ((w[0].1 - w[1].1) / (w[1].0 - w[0].0)).exp();
        let offset = 0.7 + 1.9 * seg as f64;
        for j in 0..cnt {
            let theta = TAU * j as f64 / cnt as f64 + offset;
            out.push(Complex64::from_polar(radius, theta));
        }
    }
    out
}

/// Newton ratio `p/p'` at `u` and whether `|p(u)|` is already at rounding level.
/// Evaluates the reversed polynomial outside the unit circle.
fn newton_ratio(a: &[Complex64], abs: &[f64], u: Complex64) -> (Complex64, bool) {
    let n = a.len() - 1;
    let zero = Complex64::new(0.0, 0.0);
    let r = u.norm();
    let tol = 8.0 * f64::EPSILON * (2.0 * n as f64 + 1.0);
    if r <= 1.0 {
        let (mut p, mut dp, mut bound) = (zero, zero, 0.0);
        for (c, m) in a.iter().rev().zip(abs.iter().rev()) {
            dp = dp * u + p;
            p = p * u + c;
            bound = bound * r + m;
        }
        (p / dp, p.norm() <= tol * bound)
    } else {
        let w = u.inv();
        let rw = 1.0 / r;
        let (mut q, mut dq, mut bound) = (zero, zero, 0.0);
        for (c, m) in a.iter().zip(abs.iter()) {
            dq = dq * w + q;
            q = q * w + c;
            bound = bound * rw + m;
        }
        let ratio = u / (Complex64::new(n as f64, 0.0) - w * dq / q);
        (ratio, q.norm() <= tol * bound)
    }
}

/// All roots of `Σ a_k u^k` as eigenvalues of the companion matrix.
pub fn companion_roots(a: &[Complex64]) -> Result<Vec<Complex64>> {
    let (low, a) = strip(a);
    let n = a.len() - 1;
    let mut roots = vec![Complex64::new(0.0, 0.0); low];
    if n == 0 {
        return Ok(roots);
    }
    if n > COMPANION_MAX_DEGREE {
        return Err(Error::Resource(format!(
            "companion matrix of degree {n} exceeds {COMPANION_MAX_DEGREE}"
        )));
    }
    let lead = a[n];
    let mut m = DMatrix::<Complex64>::zeros(n, n);
    for i in 1..n {
        m[(i, i - 1)] = Complex64::new(1.0, 0.0);
    }
    for i in 0..n {
        m[(i, n - 1)] = -a[i] / lead;
    }
    let schur = nalgebra::linalg::Schur::try_new(m, 1e-15, 100_000)
        .ok_or_else(|| Error::Numerical("companion Schur decomposition failed".into()))?;
    let eig = schur
        .eigenvalues()
        .ok_or_else(|| Error::Numerical("companion eigenvalues unavailable".into()))?;
    roots.extend(eig.iter().copied());
    Ok(roots)
}

/// Newton polishing on the scaled polynomial.
fn polish(a: &[Complex64], u: Complex64) -> Complex64 {
    let mut u = u;
    for _ in 0..3 {
        let (mut p, mut dp) = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
        for c in a.iter().rev() {
            dp = dp * u + p;
            p = p * u + c;
        }
        if dp.norm() == 0.0 {
            break;
        }
        let step = p / dp;
        if !(step.norm() < 1e-3 * u.norm().max(1e-3)) {
            break;
        }
        u -= step;
        if step.norm() <= f64::EPSILON * u.norm() {
            break;
        }
    }
    u
}

/// All roots of the truncation, in `z` coordinates, optionally with fallback.
pub fn all_roots(f: &TruncatedGef) -> Result<Vec<Complex64>> {
    let a = f.scaled_coeffs();
    let s = f.scale();
    let roots = match aberth_roots(a) {
        Ok(r) => r,
        Err(_) => companion_roots(a)?,
    };
    Ok(roots.into_iter().map(|u| polish(a, u) * s).collect())
}

/// Argument-principle count result.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindingCount {
    pub count: usize,
    pub raw: Complex64,
    pub radius: f64,
    pub nodes: usize,
}

/// Trapezoid rule for `(1/2πi)∮ F'/F` on `|z − center| = radius`, with node
/// doubling until the value settles on an integer.
pub fn winding_count(f: &TruncatedGef, center: Complex64, radius: f64) -> Result<WindingCount> {
    if center.norm() + radius > f.r_max() * (1.0 + 1e-12) {
        return Err(Error::Domain(format!(
            "circle of radius {radius} about {center} leaves the validity disk"
        )));
    }
    let term = |theta: f64| {
        let d = Complex64::from_polar(radius, theta);
        let (p, dp) = f.eval_with_derivative(center + d);
        d * dp / p
    };
    let mut m = 32;
    let mut sum: Complex64 = (0..m).map(|k| term(TAU * k as f64 / m as f64)).sum();
    let mut prev = sum / m as f64;
    while m < MAX_ORACLE_NODES {
        let mid: Complex64 = (0..m).map(|k| term(TAU * (k as f64 + 0.5) / m as f64)).sum();
        sum += mid;
        m *= 2;
        let cur = sum / m as f64;
        if !cur.re.is_finite() || !cur.im.is_finite() {
            return Err(Error::Numerical("zero on the counting circle".into()));
        }
        let rounded = cur.re.round();
        if (cur - prev).norm() < 1e-3 && (cur.re - rounded).abs() < 0.01 && cur.im.abs() < 0.01 {
            return Ok(WindingCount {
                count: rounded.max(0.0) as usize,
                raw: cur,
                radius,
                nodes: m,
            });
        }
        prev = cur;
    }
    Err(Error::Numerical(format!(
        "argument-principle quadrature unsettled at {m} nodes (raw {prev})"
    )))
}

/// Jittered radii `r, r(1+2δ), r(1+4δ), …`, always enlarging the disk.
fn jittered(r: f64, k: usize) -> f64 {
    r * (1.0 + 2.0 * RADIUS_JITTER * k as f64)
}

/// Zero count in `|z| ≤ r` from the argument principle alone.
pub fn count_zeros_oracle(f: &TruncatedGef, r: f64) -> Result<usize> {
    count_zeros_in_disk(f, Complex64::new(0.0, 0.0), r)
}

/// Zero count in `|z − center| ≤ r`, enlarging `r` slightly if a zero sits
/// on the circle.
pub fn count_zeros_in_disk(f: &TruncatedGef, center: Complex64, r: f64) -> Result<usize> {
    let mut last = None;
    for k in 0..8 {
        match winding_count(f, center, jittered(r, k)) {
            Ok(w) => return Ok(w.count),
            Err(e @ Error::Numerical(_)) => last = Some(e),
            Err(e) => return Err(e),
        }
    }
    Err(last.unwrap())
}

/// Zeros of the truncation in `|z| ≤ r`, cross-checked against the oracle.
pub fn find_zeros(f: &TruncatedGef, r: f64) -> Result<ZeroSet> {
    if !(r > 0.0) || r > WINDOW_SAFETY * f.r_max() * (1.0 + 1e-12) {
        return Err(Error::Config(format!(
            "search radius {r} must lie in (0, {WINDOW_SAFETY}·r_max = {}]",
            WINDOW_SAFETY * f.r_max()
        )));
    }
    let roots = all_roots(f)?;
    match select(f, &roots, r) {
        Ok(z) => Ok(z),
        Err(_) if f.order() <= COMPANION_MAX_DEGREE => {
            let a = f.scaled_coeffs();
            let alt: Vec<Complex64> = companion_roots(a)?
                .into_iter()
                .map(|u| polish(a, u) * f.scale())
                .collect();
            let mut z = select(f, &alt, r)?;
            z.used_fallback = true;
            Ok(z)
        }
        Err(e) => Err(e),
    }
}

fn select(f: &TruncatedGef, roots: &[Complex64], r: f64) -> Result<ZeroSet> {
    let clearance = RADIUS_JITTER * r;
    let r_eff = (0..64)
        .map(|k| jittered(r, k))
        .find(|re| roots.iter().all(|z| (z.norm() - re).abs() > clearance))
        .ok_or_else(|| Error::Numerical("no zero-free counting circle near r".into()))?;
    let zeros: Vec<Complex64> = roots.iter().copied().filter(|z| z.norm() <= r_eff).collect();
    let oracle = winding_count(f, Complex64::new(0.0, 0.0), r_eff)?;
    if oracle.count != zeros.len() {
        return Err(Error::Numerical(format!(
            "root finder found {} zeros, argument principle {}",
            zeros.len(),
            oracle.count
        )));
    }
    let residual_max = zeros
        .iter()
        .map(|z| f.eval_unchecked(*z).norm() * (-0.5 * z.norm_sqr()).exp())
        .fold(0.0, f64::max);
    if residual_max > RESIDUAL_TOL {
        return Err(Error::Numerical(format!("residual {residual_max:e} above tolerance")));
    }
    let mut min_separation = f64::INFINITY;
    for i in 0..zeros.len() {
        for j in 0..i {
            min_separation = min_separation.min((zeros[i] - zeros[j]).norm());
        }
    }
    Ok(ZeroSet {
        zeros,
        window_radius: r_eff,
        oracle_count: oracle.count,
        residual_max,
        min_separation,
        used_fallback: false,
    })
}

/// Test functions `h` for linear statistics.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum TestFunction {
    /// `1_{|x| ≤ 1}`
    IndicatorDisk,
    /// `1` on the unit-area square `[-½, ½]²`
    IndicatorSquare,
    /// `exp(−|x|²/2σ²)`, cut where it drops below `GAUSSIAN_CUTOFF`
    GaussianBump { sigma: f64 },
    /// `(1 − |x|²)³` on the unit disk (a `C²` bump)
    SmoothCompact,
    /// `|x|^α (1 − |x|²)³` on the unit disk
    CuspAlpha { alpha: f64 },
    /// The zero function.
    Zero,
}

pub const GAUSSIAN_CUTOFF: f64 = 1e-8;

impl TestFunction {
    pub fn validate(&self) -> Result<()> {
        match *self {
            TestFunction::GaussianBump { sigma } if !(sigma > 0.0) => {
                Err(Error::Config(format!("bump width must be positive, got {sigma}")))
            }
            TestFunction::CuspAlpha { alpha } if !(alpha > -1.0) => Err(Error::Config(format!(
                "|x|^α is not square integrable near 0 for α = {alpha}"
            ))),
            _ => Ok(()),
        }
    }

    /// Radius outside which `h` vanishes.
    pub fn support_radius(&self) -> f64 {
        match *self {
            TestFunction::IndicatorSquare => std::f64::consts::FRAC_1_SQRT_2,
            TestFunction::GaussianBump { sigma } => sigma * (-2.0 * GAUSSIAN_CUTOFF.ln()).sqrt(),
            TestFunction::Zero => 0.0,
            _ => 1.0,
        }
    }

    pub fn is_radial(&self) -> bool {
        !matches!(self, TestFunction::IndicatorSquare)
    }

    /// Value at radius `s` (radial functions only).
    pub fn radial(&self, s: f64) -> f64 {
        let s = s.abs();
        match *self {
            TestFunction::IndicatorDisk => (s <= 1.0) as u8 as f64,
            TestFunction::IndicatorSquare => panic!("the square indicator is not radial"),
            TestFunction::GaussianBump { sigma } => {
                let v = (-s * s / (2.0 * sigma * sigma)).exp();
                if v < GAUSSIAN_CUTOFF {
                    0.0
                } else {
                    v
                }
            }
            TestFunction::SmoothCompact => {
                if s >= 1.0 {
                    0.0
                } else {
                    (1.0 - s * s).powi(3)
                }
            }
            TestFunction::CuspAlpha { alpha } => {
                if s >= 1.0 {
                    0.0
                } else {
                    s.powf(alpha) * (1.0 - s * s).powi(3)
                }
            }
            TestFunction::Zero => 0.0,
        }
    }

    pub fn eval(&self, x: Complex64) -> f64 {
        match self {
            TestFunction::IndicatorSquare => (x.re.abs() <= 0.5 && x.im.abs() <= 0.5) as u8 as f64,
            _ => self.radial(x.norm()),
        }
    }

    /// `∫ h dm` over the plane.
    pub fn integral(&self) -> f64 {
        match *self {
            TestFunction::IndicatorDisk => PI,
            TestFunction::IndicatorSquare => 1.0,
            TestFunction::GaussianBump { sigma } => {
                2.0 * PI * sigma * sigma * (1.0 - GAUSSIAN_CUTOFF)
            }
            TestFunction::SmoothCompact => PI / 4.0,
            TestFunction::CuspAlpha { .. } | TestFunction::Zero => {
                crate::spectral_stats::radial_integral(|s| self.radial(s), self.support_radius())
            }
        }
    }
}

/// `n(r, h) = Σ h(a/r)` over the located zeros.
pub fn linear_statistic(zs: &ZeroSet, h: &TestFunction, r: f64) -> Result<f64> {
    h.validate()?;
    if r * h.support_radius() > zs.window_radius * (1.0 + 1e-12) {
        return Err(Error::Config(format!(
            "support of h(·/{r}) (radius {}) escapes the zero window {}",
            r * h.support_radius(),
            zs.window_radius
        )));
    }
    Ok(zs.zeros.iter().map(|a| h.eval(a / r)).sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gef::sample_gef;
    use crate::randomness::GaussianStream;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn z2m1() -> TruncatedGef {
        TruncatedGef::from_coefficients(vec![c(-1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)], 3.0)
    }

    #[test]
    fn quadratic_zeros() {
        let f = TruncatedGef::from_coefficients(vec![c(-1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)], 2.5);
        let zs = find_zeros(&f, 2.0).unwrap();
        let mut re: Vec<f64> = zs.zeros.iter().map(|z| z.re).collect();
        re.sort_by(f64::total_cmp);
        assert!((re[0] + 1.0).abs() < 1e-14 && (re[1] - 1.0).abs() < 1e-14);
        assert_eq!(zs.oracle_count, 2);
        assert!(zs.zeros.iter().all(|z| z.im.abs() < 1e-14));
        assert_eq!(count_zeros_oracle(&z2m1(), 2.0).unwrap(), 2);
        assert_eq!(count_zeros_oracle(&z2m1(), 0.5).unwrap(), 0);
        assert!(zs.to_csv().starts_with("re,im\n"));
    }

    #[test]
    fn window_precondition() {
        let f = z2m1();
        assert!(matches!(find_zeros(&f, 2.9), Err(Error::Config(_))));
    }

    #[test]
    fn aberth_matches_companion() {
        let a: Vec<Complex64> = (0..30).map(|k| c((k as f64 * 0.7).sin() + 1.1, (k as f64).cos())).collect();
        let mut x = aberth_roots(&a).unwrap();
        let mut y = companion_roots(&a).unwrap();
        assert_eq!(x.len(), 29);
        let key = |z: &Complex64| (z.arg() * 1e6).round() as i64;
        x.sort_by_key(key);
        y.sort_by_key(key);
        for (p, q) in x.iter().zip(&y) {
            assert!((p - q).norm() < 1e-8, "{p} {q}");
        }
    }

    #[test]
    fn zero_roots_are_stripped() {
        let a = vec![c(0.0, 0.0), c(0.0, 0.0), c(2.0, 0.0), c(1.0, 0.0)];
        let mut r = aberth_roots(&a).unwrap();
        r.sort_by(|p, q| p.re.total_cmp(&q.re));
        assert!((r[0] + 2.0).norm() < 1e-14);
        assert_eq!(r[1], c(0.0, 0.0));
        assert_eq!(r[2], c(0.0, 0.0));
    }

    #[test]
    fn root_finder_agrees_with_oracle_on_random_samples() {
        let mut disagreements = 0;
        let trials = 300;
        for t in 0..trials {
            let mut s = GaussianStream::new(100, t);
            let f = sample_gef(3.0 / WINDOW_SAFETY, 1e-10, &mut s).unwrap();
            let zs = find_zeros(&f, 3.0).unwrap();
            assert!(zs.residual_max < RESIDUAL_TOL);
            assert!(zs.min_separation > 0.0);
            if count_zeros_oracle(&f, zs.window_radius).unwrap() != zs.count() {
                disagreements += 1;
            }
        }
        assert_eq!(disagreements, 0);
    }

    #[test]
    fn high_degree_sample() {
        let mut s = GaussianStream::new(5, 1);
        let f = sample_gef(12.5, 1e-9, &mut s).unwrap();
        assert!(f.order() > 450);
        let zs = find_zeros(&f, 10.0).unwrap();
        assert_eq!(zs.count(), zs.oracle_count);
        // E n(10) = 100, and the count fluctuates on scale √r
        assert!((zs.count() as f64 - 100.0).abs() < 25.0, "{}", zs.count());
    }

    #[test]
    fn winding_in_small_disks() {
        let f = z2m1();
        assert_eq!(winding_count(&f, c(1.0, 0.0), 0.1).unwrap().count, 1);
        assert_eq!(winding_count(&f, c(0.0, 0.0), 0.1).unwrap().count, 0);
        assert!(matches!(winding_count(&f, c(2.5, 0.0), 1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn linear_statistics() {
        let f = z2m1();
        let zs = find_zeros(&f, 2.0).unwrap();
        assert_eq!(linear_statistic(&zs, &TestFunction::IndicatorDisk, 1.5).unwrap(), 2.0);
        assert_eq!(linear_statistic(&zs, &TestFunction::Zero, 1.5).unwrap(), 0.0);
        assert!(matches!(
            linear_statistic(&zs, &TestFunction::IndicatorDisk, 3.0),
            Err(Error::Config(_))
        ));
        let v = linear_statistic(&zs, &TestFunction::SmoothCompact, 2.0).unwrap();
        assert!((v - 2.0 * 0.75f64.powi(3)).abs() < 1e-13);
    }

    #[test]
    fn gaussian_support() {
        let h = TestFunction::GaussianBump { sigma: 0.2 };
        let s = h.support_radius();
        assert!((h.radial(s * 0.999999) - GAUSSIAN_CUTOFF).abs() < 1e-12);
        assert_eq!(h.radial(s * 1.0001), 0.0);
        assert!((s - 0.2 * 6.0697).abs() < 1e-3);
        assert!(TestFunction::CuspAlpha { alpha: -2.0 }.validate().is_err());
    }

    #[test]
    fn counts_in_distant_disks_uncorrelated() {
        let trials = 3000;
        let (mut a, mut b) = (Vec::new(), Vec::new());
        for t in 0..trials {
            let mut s = GaussianStream::new(40, t);
            let f = sample_gef(5.3, 1e-10, &mut s).unwrap();
            a.push(count_zeros_in_disk(&f, c(-4.0, 0.0), 1.0).unwrap() as f64);
            b.push(count_zeros_in_disk(&f, c(4.0, 0.0), 1.0).unwrap() as f64);
        }
        let rho = crate::stats::correlation(&a, &b);
        // SE of a null correlation is 1/√n ≈ 0.018
        assert!(rho.abs() < 4.0 / (trials as f64).sqrt(), "{rho}");
        assert!((crate::stats::mean(&a) - 1.0).abs() < 0.1);
    }

    #[test]
    fn counts_are_translation_invariant() {
        let trials = 10_000;
        let (mut a, mut b) = (Vec::new(), Vec::new());
        for t in 0..trials {
            let mut s = GaussianStream::new(41, t);
            let f = sample_gef(4.7, 1e-10, &mut s).unwrap();
            a.push(count_zeros_in_disk(&f, c(0.0, 0.0), 1.0).unwrap() as f64);
            b.push(count_zeros_in_disk(&f, c(3.0, 2.0), 1.0).unwrap() as f64);
        }
        let d = crate::stats::ks_two_sample(&a, &b);
        assert!(d < crate::stats::ks_two_sample_critical(trials as usize, trials as usize, 0.01), "{d}");
    }
}
