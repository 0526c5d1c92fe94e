//! The Gaussian entire function `F(z) = Σ ζ_n zⁿ/√n!`, its covariance
//! kernels, and the two comparison processes: the perturbed lattice and the
//! limiting Ginibre process.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::{E, PI};

use crate::error::{Error, Result};
use crate::randomness::GaussianStream;

/// Degree cap for truncations; beyond this we report a resource limit.
pub const DEFAULT_MAX_DEGREE: usize = 4096;

/// `e^{r²/2}` overflows an `f64` a little after `r = 37`.
pub const MAX_VALID_RADIUS: f64 = 30.0;

/// Spacing of the comparison lattice `√π·Z²` (one point per area `π`).
pub fn lattice_spacing() -> f64 {
    PI.sqrt()
}

/// How many Taylor terms to keep for a given validity radius.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruncationPlan {
    pub order: usize,
    /// Deterministic bound on `Σ_{n>N} B_n rⁿ/√n!` on the disk.
    pub envelope: f64,
    /// Probability that some neglected `|ζ_n|` exceeds its envelope `B_n`.
    pub tail_bound: f64,
}

/// Coefficient envelope `B_n` with `P{|ζ_n| > B_n} = e^{-B_n²} = tol/(2n²)`.
fn coefficient_envelope(n: usize, tol: f64) -> f64 {
    (2.0 * (n as f64).powi(2) / tol).ln().sqrt()
}

/// `Σ_{n>order} B_n r^n / √n!`, summed in log space.
pub fn tail_envelope(order: usize, r: f64, tol: f64) -> f64 {
    let ln_r = r.ln();
    let mut ln_fact = ln_factorial(order);
    let mut sum = 0.0;
    let mut n = order;
    loop {
        n += 1;
        ln_fact += (n as f64).ln();
        let ln_term = n as f64 * ln_r - 0.5 * ln_fact;
        let term = coefficient_envelope(n, tol) * ln_term.exp();
        sum += term;
        // terms are eventually decreasing faster than geometric
        if n as f64 > E * r * r && term < 1e-30 * sum.max(1e-300) {
            break;
        }
        if n > order + 100_000 {
            break;
        }
    }
    sum
}

pub fn ln_factorial(n: usize) -> f64 {
    (1..=n).map(|k| (k as f64).ln()).sum()
}

/// `N = ⌈e·r²⌉ + ⌈C·r⌉ + 30`, with the smallest integer `C ≥ 0` such that the
/// envelope is at most `tol/10`.
pub fn truncation_order(r_max: f64, tol: f64, max_degree: usize) -> Result<TruncationPlan> {
    if !(r_max > 0.0) || !(tol > 0.0 && tol < 1.0) {
        return Err(Error::Config(format!("need r_max > 0 and 0 < tol < 1 (r_max={r_max}, tol={tol})")));
    }
    if r_max > MAX_VALID_RADIUS {
        return Err(Error::Resource(format!("r_max {r_max} exceeds {MAX_VALID_RADIUS}")));
    }
    let base = (E * r_max * r_max).ceil() as usize + 30;
    for c in 0.. {
        let order = base + (c as f64 * r_max).ceil() as usize;
        if order > max_degree {
            return Err(Error::Resource(format!(
                "truncation order {order} for r_max {r_max} exceeds the maximum degree {max_degree}"
            )));
        }
        let envelope = tail_envelope(order, r_max, tol);
        if envelope <= tol / 10.0 {
            let tail_bound: f64 = (order + 1..order + 200_000)
                .map(|n| tol / (2.0 * (n as f64).powi(2)))
                .sum();
            return Ok(TruncationPlan {
                order,
                envelope,
                tail_bound,
            });
        }
    }
    unreachable!()
}

/// A sampled GEF truncated at degree `N`, certified on `|z| ≤ r_max`.
///
/// Stored as `Σ a_n (z/s)ⁿ` with `a_n = c_n sⁿ`; plain `c_n = ζ_n/√n!`
/// underflows long before the degrees needed at moderate radii.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TruncatedGef {
    scale: f64,
    scaled: Vec<Complex64>,
    r_max: f64,
    tail_bound: f64,
}

pub fn sample_gef(r_max: f64, tol: f64, stream: &mut GaussianStream) -> Result<TruncatedGef> {
    sample_gef_with_limit(r_max, tol, DEFAULT_MAX_DEGREE, stream)
}

pub fn sample_gef_with_limit(
    r_max: f64,
    tol: f64,
    max_degree: usize,
    stream: &mut GaussianStream,
) -> Result<TruncatedGef> {
    let plan = truncation_order(r_max, tol, max_degree)?;
    let zetas: Vec<Complex64> = (0..=plan.order).map(|_| stream.complex()).collect();
    let mut f = TruncatedGef::from_gaussians(&zetas, r_max);
    f.tail_bound = plan.tail_bound;
    Ok(f)
}

impl TruncatedGef {
    /// A deterministic polynomial `Σ c_n zⁿ` treated as exact on `|z| ≤ r_max`.
    pub fn from_coefficients(coeffs: Vec<Complex64>, r_max: f64) -> Self {
        assert!(!coeffs.is_empty());
        Self {
            scale: 1.0,
            scaled: coeffs,
            r_max,
            tail_bound: 0.0,
        }
    }

    /// Build from raw Gaussian weights `ζ_n` (scaled here by `1/√n!`).
    pub fn from_gaussians(zetas: &[Complex64], r_max: f64) -> Self {
        assert!(!zetas.is_empty());
        let s = r_max.max(1.0);
        let mut t = 1.0;
        let scaled = zetas
            .iter()
            .enumerate()
            .map(|(n, z)| {
                if n > 0 {
                    t *= s / (n as f64).sqrt();
                }
                z * t
            })
            .collect();
        Self {
            scale: s,
            scaled,
            r_max,
            tail_bound: 0.0,
        }
    }

    /// `c_n`; may underflow to zero for large `n`.
    pub fn coefficient(&self, n: usize) -> Complex64 {
        self.scaled[n] * self.scale.powi(-(n as i32))
    }

    /// The scaled coefficients `a_n = c_n sⁿ`.
    pub fn scaled_coeffs(&self) -> &[Complex64] {
        &self.scaled
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn order(&self) -> usize {
        self.scaled.len() - 1
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    pub fn tail_bound(&self) -> f64 {
        self.tail_bound
    }

    fn check(&self, z: Complex64) -> Result<()> {
        if z.norm() > self.r_max * (1.0 + 1e-12) {
            Err(Error::Domain(format!(
                "|z| = {} outside validity radius {}",
                z.norm(),
                self.r_max
            )))
        } else {
            Ok(())
        }
    }

    pub fn eval(&self, z: Complex64) -> Result<Complex64> {
        self.check(z)?;
        Ok(self.eval_unchecked(z))
    }

    /// `F*(z) = F(z) e^{-|z|²/2}`, the normalized (unit-variance) process.
    pub fn eval_normalized(&self, z: Complex64) -> Result<Complex64> {
        Ok(self.eval(z)? * (-0.5 * z.norm_sqr()).exp())
    }

    /// Horner evaluation without the radius check.
    pub fn eval_unchecked(&self, z: Complex64) -> Complex64 {
        let u = z / self.scale;
        let mut acc = Complex64::new(0.0, 0.0);
        for c in self.scaled.iter().rev() {
            acc = acc * u + c;
        }
        acc
    }

    /// `(F(z), F'(z))` by a single Horner pass.
    pub fn eval_with_derivative(&self, z: Complex64) -> (Complex64, Complex64) {
        let u = z / self.scale;
        let mut p = Complex64::new(0.0, 0.0);
        let mut dp = Complex64::new(0.0, 0.0);
        for c in self.scaled.iter().rev() {
            dp = dp * u + p;
            p = p * u + c;
        }
        (p, dp / self.scale)
    }

    /// `(F, F', F'')`.
    pub fn eval_with_derivatives2(&self, z: Complex64) -> (Complex64, Complex64, Complex64) {
        let u = z / self.scale;
        let zero = Complex64::new(0.0, 0.0);
        let (mut p, mut dp, mut ddp) = (zero, zero, zero);
        for c in self.scaled.iter().rev() {
            ddp = ddp * u + dp * 2.0;
            dp = dp * u + p;
            p = p * u + c;
        }
        (p, dp / self.scale, ddp / (self.scale * self.scale))
    }

    /// `Σ |c_n| |z|ⁿ`, the scale against which rounding in `eval` is measured.
    pub fn abs_sum(&self, z: Complex64) -> f64 {
        let r = z.norm() / self.scale;
        self.scaled.iter().rev().fold(0.0, |acc, c| acc * r + c.norm())
    }

    /// The translated function `F_λ(z) = F(z+λ) e^{-z λ̄ - |λ|²/2}`, which has
    /// the same distribution as `F`.
    pub fn translated(&self, lambda: Complex64, z: Complex64) -> Result<Complex64> {
        let w = z + lambda;
        let v = self.eval(w)?;
        Ok(v * (-z * lambda.conj() - 0.5 * lambda.norm_sqr()).exp())
    }
}

/// The closed-form covariance kernels.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum KernelId {
    /// `E F(z) conj(F(w)) = e^{z w̄}`
    GefRaw,
    /// `E F*(z) conj(F*(w)) = e^{i Im(z w̄) - |z-w|²/2}`
    GefNormalized,
    /// Correlation kernel of the limiting Ginibre process,
    /// `π⁻¹ e^{z w̄ - |z|²/2 - |w|²/2}`.
    Ginibre,
}

pub fn covariance(kernel: KernelId, z: Complex64, w: Complex64) -> Complex64 {
    let zw = z * w.conj();
    match kernel {
        KernelId::GefRaw => zw.exp(),
        KernelId::GefNormalized => Complex64::new(-0.5 * (z - w).norm_sqr(), zw.im).exp(),
        KernelId::Ginibre => Complex64::new(-0.5 * (z - w).norm_sqr(), zw.im).exp() / PI,
    }
}

/// Result of comparing the empirical covariance of `F_λ` to `e^{z w̄}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TranslationReport {
    pub lambda: Complex64,
    pub trials: usize,
    pub pairs: usize,
    pub max_discrepancy: f64,
    /// max over pairs of discrepancy / standard error
    pub max_z_score: f64,
}

/// Empirical covariance of `F_λ` on all ordered pairs of `test_points`.
pub fn translate_check(
    lambda: Complex64,
    test_points: &[Complex64],
    trials: usize,
    seed: u64,
) -> Result<TranslationReport> {
    let reach = test_points
        .iter()
        .map(|z| (z + lambda).norm())
        .fold(0.0, f64::max)
        .max(1.0);
    let k = test_points.len();
    let mut sum = vec![Complex64::new(0.0, 0.0); k * k];
    let mut sum2 = vec![0.0; k * k];
    for t in 0..trials {
        let mut s = GaussianStream::new(seed, t as u64);
        let f = sample_gef(reach, 1e-12, &mut s)?;
        let vals: Vec<Complex64> = test_points
            .iter()
            .map(|z| f.translated(lambda, *z))
            .collect::<Result<_>>()?;
        for i in 0..k {
            for j in 0..k {
                let p = vals[i] * vals[j].conj();
                sum[i * k + j] += p;
                sum2[i * k + j] += p.norm_sqr();
            }
        }
    }
    let n = trials as f64;
    let mut max_discrepancy: f64 = 0.0;
    let mut max_z: f64 = 0.0;
    for i in 0..k {
        for j in 0..k {
            let m = sum[i * k + j] / n;
            let exact = covariance(KernelId::GefRaw, test_points[i], test_points[j]);
            let var = (sum2[i * k + j] / n - m.norm_sqr()).max(0.0);
            let se = (var / n).sqrt();
            let d = (m - exact).norm();
            max_discrepancy = max_discrepancy.max(d);
            max_z = max_z.max(d / se.max(1e-300));
        }
    }
    Ok(TranslationReport {
        lambda,
        trials,
        pairs: k * k,
        max_discrepancy,
        max_z_score: max_z,
    })
}

/// An axis-aligned square window.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Square {
    pub center: Complex64,
    pub half_side: f64,
}

impl Square {
    pub fn centered(half_side: f64) -> Self {
        Self {
            center: Complex64::new(0.0, 0.0),
            half_side,
        }
    }

    pub fn contains(&self, z: Complex64) -> bool {
        let d = z - self.center;
        d.re.abs() <= self.half_side && d.im.abs() <= self.half_side
    }

    /// Radius of the smallest disk about the origin containing the square.
    pub fn reach(&self) -> f64 {
        self.center.norm() + self.half_side * std::f64::consts::SQRT_2
    }

    pub fn shrink(&self, margin: f64) -> Self {
        Self {
            center: self.center,
            half_side: self.half_side - margin,
        }
    }

    pub fn side(&self) -> f64 {
        2.0 * self.half_side
    }

    pub fn area(&self) -> f64 {
        self.side() * self.side()
    }
}

/// Points of `√π·Z²` inside the window.
pub fn lattice_points(window: &Square) -> Vec<Complex64> {
    let h = lattice_spacing();
    let lo_x = ((window.center.re - window.half_side) / h).ceil() as i64;
    let hi_x = ((window.center.re + window.half_side) / h).floor() as i64;
    let lo_y = ((window.center.im - window.half_side) / h).ceil() as i64;
    let hi_y = ((window.center.im + window.half_side) / h).floor() as i64;
    let mut out = Vec::new();
    for i in lo_x..=hi_x {
        for j in lo_y..=hi_y {
            out.push(Complex64::new(i as f64 * h, j as f64 * h));
        }
    }
    out
}

/// `#(√π·Z² ∩ {|z| ≤ r})`.
pub fn lattice_count(r: f64) -> usize {
    lattice_points(&Square::centered(r))
        .into_iter()
        .filter(|z| z.norm() <= r)
        .count()
}

/// The `1 − 10⁻⁹` quantile of the perturbation modulus, `P{|ζ| > t} = e^{-t^ν}`.
pub fn perturbation_pad(nu: f64) -> f64 {
    (1e9f64).ln().powf(1.0 / nu)
}

/// The lattice `√π·Z²` with i.i.d. radially symmetric perturbations.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PerturbedLattice {
    pub nu: f64,
    pub window: Square,
    pub points: Vec<Complex64>,
}

/// Perturb every lattice point of `window` by an independent `ζ_ω` with
/// `P{|ζ_ω| > t} = exp(−t^ν)` and uniform argument. For `ν = 2` this is a
/// standard complex Gaussian, sampled directly.
pub fn sample_perturbed_lattice(
    nu: f64,
    window: Square,
    stream: &mut GaussianStream,
) -> Result<PerturbedLattice> {
    if !(nu > 0.0) {
        return Err(Error::Config(format!("tail exponent must be positive, got {nu}")));
    }
    let points = lattice_points(&window)
        .into_iter()
        .map(|w| {
            let d = if nu == 2.0 {
                stream.complex()
            } else {
                let radius = (-stream.uniform_open0().ln()).powf(1.0 / nu);
                stream.unit_phase() * radius
            };
            w + d
        })
        .collect();
    Ok(PerturbedLattice { nu, window, points })
}

impl PerturbedLattice {
    pub fn unperturbed(window: Square) -> Self {
        Self {
            nu: f64::INFINITY,
            window,
            points: lattice_points(&window),
        }
    }

    /// `n_ν(r)`: perturbed points in `|z| ≤ r`. Fails if a lattice point outside
    /// the window could land in the disk with non-negligible probability.
    pub fn count_in_disk(&self, r: f64) -> Result<usize> {
        let pad = if self.nu.is_finite() {
            perturbation_pad(self.nu)
        } else {
            0.0
        };
        let need = Square {
            center: Complex64::new(0.0, 0.0),
            half_side: r + pad,
        };
        let w = &self.window;
        let ok = w.center.re - w.half_side <= -need.half_side
            && w.center.re + w.half_side >= need.half_side
            && w.center.im - w.half_side <= -need.half_side
            && w.center.im + w.half_side >= need.half_side;
        if !ok {
            return Err(Error::Config(format!(
                "window of half side {} too small for r = {r} plus pad {pad}",
                w.half_side
            )));
        }
        Ok(count_nu(&self.points, r))
    }
}

pub fn count_nu(points: &[Complex64], r: f64) -> usize {
    points.iter().filter(|z| z.norm() <= r).count()
}

/// k-point intensity of the limiting Ginibre process,
/// `π^{-k} e^{-Σ|z_i|²} det[e^{z_i z̄_j}]`, evaluated as the determinant of
/// the row/column-scaled (unit diagonal) kernel matrix.
pub fn ginibre_rho(points: &[Complex64]) -> Result<f64> {
    let k = points.len();
    for i in 0..k {
        for j in 0..i {
            if points[i] == points[j] {
                return Err(Error::Degenerate(format!(
                    "coincident points {} and {}",
                    points[i], points[j]
                )));
            }
        }
    }
    let m = DMatrix::from_fn(k, k, |i, j| {
        covariance(KernelId::GefNormalized, points[i], points[j])
    });
    let log_det = match m.clone().cholesky() {
        Some(ch) => 2.0 * ch.l().diagonal().iter().map(|d| d.re.ln()).sum::<f64>(),
        None => {
            let d = m.determinant().re;
            if d <= 0.0 {
                return Ok(0.0);
            }
            d.ln()
        }
    };
    Ok((log_det - k as f64 * PI.ln()).exp())
}
