//! k-point functions of the zero process: exact values from the Gaussian jet
//! `(f(z₁), f'(z₁), …, f(z_k), f'(z_k))`, small-disk Monte Carlo estimates,
//! and the repulsion/clustering envelopes.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::constants;
use crate::error::{Error, Result};
use crate::gef::sample_gef;
use crate::randomness::GaussianStream;
use crate::stats::Proportion;
use crate::zeros::count_zeros_in_disk;

/// Largest `k` served by `rho_exact`.
pub const MAX_K: usize = 3;

/// Condition number of the value covariance beyond which `rho_exact` refuses.
pub const CONDITION_LIMIT: f64 = 1e12;

/// Covariance kernel of a Gaussian Taylor series `Σ ζ_n c_n zⁿ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Kernel {
    /// `c_n² = 1/n!`, i.e. `K(z, w) = e^{z w̄}`.
    Gef,
    /// User-supplied `c_n²`, summed as a finite series.
    Series(Vec<f64>),
}

impl Kernel {
    /// `(K, ∂_z K, ∂_{w̄} K, ∂_z ∂_{w̄} K)` at `(z, w)`.
    fn parts(&self, z: Complex64, w: Complex64) -> [Complex64; 4] {
        match self {
            Kernel::Gef => {
                let k = (z * w.conj()).exp();
                [k, w.conj() * k, z * k, (1.0 + z * w.conj()) * k]
            }
            Kernel::Series(c2) => {
                let x = z * w.conj();
                let zero = Complex64::new(0.0, 0.0);
                let (mut k, mut kz, mut kw, mut kzw) = (zero, zero, zero, zero);
                let mut xn1 = Complex64::new(1.0, 0.0); // x^{n-1}
                for (n, a) in c2.iter().enumerate() {
                    if n == 0 {
                        k += *a;
                        continue;
                    }
                    let nf = n as f64;
                    kz += nf * a * xn1 * w.conj();
                    kw += nf * a * xn1 * z;
                    kzw += nf * nf * a * xn1;
                    xn1 *= x;
                    k += a * xn1;
                }
                [k, kz, kw, kzw]
            }
        }
    }

    /// Checks `c_0, …, c_{d−1} ≠ 0`, which makes the jet of `d/2` distinct
    /// points nondegenerate.
    pub fn check_nondegenerate(&self, d: usize) -> Result<()> {
        if let Kernel::Series(c2) = self {
            if c2.len() < d || c2[..d].iter().any(|c| *c == 0.0) {
                return Err(Error::Degenerate(format!(
                    "the first {d} coefficients must be nonzero"
                )));
            }
        }
        Ok(())
    }
}

/// The `2k × 2k` covariance of `(f(z₁), f'(z₁), …, f(z_k), f'(z_k))`.
#[derive(Clone, Debug)]
pub struct JetCovariance {
    pub points: Vec<Complex64>,
    pub matrix: DMatrix<Complex64>,
}

pub fn jet_covariance(points: &[Complex64]) -> JetCovariance {
    jet_covariance_with(&Kernel::Gef, points)
}

pub fn jet_covariance_with(kernel: &Kernel, points: &[Complex64]) -> JetCovariance {
    let k = points.len();
    let mut m = DMatrix::zeros(2 * k, 2 * k);
    for i in 0..k {
        for j in 0..k {
            let [kk, kz, kw, kzw] = kernel.parts(points[i], points[j]);
            m[(2 * i, 2 * j)] = kk;
            m[(2 * i + 1, 2 * j)] = kz;
            m[(2 * i, 2 * j + 1)] = kw;
            m[(2 * i + 1, 2 * j + 1)] = kzw;
        }
    }
    JetCovariance {
        points: points.to_vec(),
        matrix: m,
    }
}

fn permanent(m: &DMatrix<Complex64>) -> Complex64 {
    fn rec(m: &DMatrix<Complex64>, row: usize, used: &mut [bool]) -> Complex64 {
        let n = m.nrows();
        if row == n {
            return Complex64::new(1.0, 0.0);
        }
        let mut s = Complex64::new(0.0, 0.0);
        for c in 0..n {
            if !used[c] {
                used[c] = true;
                s += m[(row, c)] * rec(m, row + 1, used);
                used[c] = false;
            }
        }
        s
    }
    rec(m, 0, &mut vec![false; m.nrows()])
}

fn check_points(points: &[Complex64]) -> Result<()> {
    if points.is_empty() || points.len() > MAX_K {
        return Err(Error::Config(format!(
            "rho_exact supports 1 ≤ k ≤ {MAX_K}, got {}",
            points.len()
        )));
    }
    for i in 0..points.len() {
        for j in 0..i {
            if points[i] == points[j] {
                return Err(Error::Degenerate(format!("coincident points {}", points[i])));
            }
        }
    }
    Ok(())
}

/// `ρ(z₁, …, z_k) = E[Π|f'(z_i)|² | f(z_i) = 0] / (π^k det Σ_ff)`. The
/// conditional expectation is the permanent of the conditional covariance of
/// the derivatives (complex Wick formula).
pub fn rho_exact(points: &[Complex64]) -> Result<f64> {
    check_points(points)?;
    // the zero process is translation invariant; centring keeps e^{z w̄} tame
    let k = points.len() as f64;
    let centroid: Complex64 = points.iter().sum::<Complex64>() / k;
    let shifted: Vec<Complex64> = points.iter().map(|z| z - centroid).collect();
    rho_from_kernel(&Kernel::Gef, &shifted)
}

/// `rho_exact` for any supported kernel, without recentring.
pub fn rho_exact_with(kernel: &Kernel, points: &[Complex64]) -> Result<f64> {
    check_points(points)?;
    kernel.check_nondegenerate(2 * points.len())?;
    rho_from_kernel(kernel, points)
}

fn rho_from_kernel(kernel: &Kernel, points: &[Complex64]) -> Result<f64> {
    let k = points.len();
    let jet = jet_covariance_with(kernel, points);
    let g = &jet.matrix;
    // rescale f(z_i), f'(z_i) by 1/√K(z_i, z_i): ρ is invariant
    let d: Vec<f64> = (0..k).map(|i| 1.0 / g[(2 * i, 2 * i)].re.sqrt()).collect();
    let ff = DMatrix::from_fn(k, k, |i, j| g[(2 * i, 2 * j)] * d[i] * d[j]);
    let df = DMatrix::from_fn(k, k, |i, j| g[(2 * i + 1, 2 * j)] * d[i] * d[j]);
    let dd = DMatrix::from_fn(k, k, |i, j| g[(2 * i + 1, 2 * j + 1)] * d[i] * d[j]);
    let eig = ff.clone().symmetric_eigen().eigenvalues;
    let (lo, hi) = eig.iter().fold((f64::INFINITY, 0.0f64), |(a, b), v| (a.min(*v), b.max(*v)));
    let cond = hi / lo;
    if !(lo > 0.0) || cond > CONDITION_LIMIT {
        return Err(Error::Numerical(format!(
            "value covariance ill-conditioned (condition number {cond:.3e})"
        )));
    }
    let chol = ff
        .cholesky()
        .ok_or_else(|| Error::Numerical("value covariance not positive definite".into()))?;
    let det: f64 = chol.l().diagonal().iter().map(|v| v.re * v.re).product();
    let fd = df.adjoint();
    let cond_cov = &dd - &df * chol.solve(&fd);
    let p = permanent(&cond_cov);
    Ok(p.re / (PI.powi(k as i32) * det))
}

/// Closed-form two-point function, used as an independent check:
/// `π²ρ(0, z) = ((sinh²t + t²) cosh t − 2t sinh t) / sinh³t`, `t = |z|²/2`.
pub fn two_point_closed_form(d: f64) -> f64 {
    let t = d * d / 2.0;
    if t < 1e-3 {
        // series: t − t³/9 + …
        return (t - t.powi(3) / 9.0) / (PI * PI);
    }
    if t > 300.0 {
        return 1.0 / (PI * PI);
    }
    let (s, c) = (t.sinh(), t.cosh());
    ((s * s + t * t) * c - 2.0 * t * s) / (s * s * s) / (PI * PI)
}

/// Small-disk estimate `P{each D(z_i, ε) has a zero} / (πε²)^k`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RhoEstimate {
    pub value: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub hits: u64,
    pub trials: u64,
}

pub fn rho_empirical(points: &[Complex64], eps: f64, trials: usize, seed: u64) -> Result<RhoEstimate> {
    check_points(points)?;
    let min_sep = min_separation(points);
    if !(eps > 0.0) || 2.0 * eps >= min_sep {
        return Err(Error::Config(format!(
            "ε = {eps} must be positive and below half the minimal separation {min_sep}"
        )));
    }
    let reach = points.iter().map(|z| z.norm()).fold(0.0, f64::max) + eps + 0.5;
    let hits: usize = (0..trials)
        .into_par_iter()
        .map(|t| -> Result<usize> {
            let mut s = GaussianStream::new(seed, t as u64);
            let f = sample_gef(reach, 1e-10, &mut s)?;
            for z in points {
                if count_zeros_in_disk(&f, *z, eps)? == 0 {
                    return Ok(0);
                }
            }
            Ok(1)
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .sum();
    let p = Proportion::wilson(hits as u64, trials as u64, 1.96);
    let vol = (PI * eps * eps).powi(points.len() as i32);
    Ok(RhoEstimate {
        value: p.estimate / vol,
        ci_lo: p.ci_lo / vol,
        ci_hi: p.ci_hi / vol,
        hits: hits as u64,
        trials: trials as u64,
    })
}

/// Range of `rho_exact` over configurations with each point moved within its
/// ε-disk (polar grid); the estimator's bias lies inside this range.
pub fn rho_disk_range(points: &[Complex64], eps: f64) -> Result<(f64, f64)> {
    let mut offsets = vec![Complex64::new(0.0, 0.0)];
    for rad in [0.5, 1.0] {
        for a in 0..8 {
            offsets.push(Complex64::from_polar(rad * eps, a as f64 * PI / 4.0));
        }
    }
    let k = points.len();
    let mut idx = vec![0usize; k];
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    loop {
        let cfg: Vec<Complex64> = (0..k).map(|i| points[i] + offsets[idx[i]]).collect();
        let v = rho_exact(&cfg)?;
        lo = lo.min(v);
        hi = hi.max(v);
        let mut i = 0;
        while i < k {
            idx[i] += 1;
            if idx[i] < offsets.len() {
                break;
            }
            idx[i] = 0;
            i += 1;
        }
        if i == k {
            break;
        }
    }
    Ok((lo, hi))
}

pub fn min_separation(points: &[Complex64]) -> f64 {
    let mut m = f64::INFINITY;
    for i in 0..points.len() {
        for j in 0..i {
            m = m.min((points[i] - points[j]).norm());
        }
    }
    m
}

/// `ℓ(t) = min(t², 1)`.
pub fn ell(t: f64) -> f64 {
    (t * t).min(1.0)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EnvelopeReport {
    /// `π^k ρ`
    pub value: f64,
    /// `Π_{i<j} ℓ(|z_i − z_j|)`
    pub ell_product: f64,
    pub lower: f64,
    pub upper: f64,
    pub violated: bool,
}

/// Compares `π^k ρ` with `C_k^{±1} Π ℓ(|z_i − z_j|)` for the calibrated `C_k`.
pub fn envelope_check(points: &[Complex64]) -> Result<EnvelopeReport> {
    let k = points.len();
    let value = rho_exact(points)? * PI.powi(k as i32);
    let mut ell_product = 1.0;
    for i in 0..k {
        for j in 0..i {
            ell_product *= ell((points[i] - points[j]).norm());
        }
    }
    let c = match k {
        1 => 1.0,
        2 => constants::ENVELOPE_C2,
        _ => constants::ENVELOPE_C3,
    };
    let lower = ell_product / c;
    let upper = ell_product * c;
    Ok(EnvelopeReport {
        value,
        ell_product,
        lower,
        upper,
        violated: value < lower || value > upper,
    })
}

/// Deterministic calibration sweep: `count` triples in the disk of radius 2
/// with all pairwise distances at least `min_sep`.
pub fn calibration_triples(count: usize, min_sep: f64, seed: u64) -> Vec<[Complex64; 3]> {
    let mut s = GaussianStream::new(seed, 0);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let p: Vec<Complex64> = (0..3)
            .map(|_| s.unit_phase() * 2.0 * s.uniform().sqrt())
            .collect();
        if min_separation(&p) >= min_sep {
            out.push([p[0], p[1], p[2]]);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn jet_covariance_basics() {
        let j = jet_covariance(&[c(0.0, 0.0)]);
        assert_eq!(j.matrix, DMatrix::identity(2, 2));
        let z = c(0.7, -0.4);
        let j = jet_covariance(&[z, c(-0.3, 1.1)]);
        assert_eq!(j.matrix, j.matrix.adjoint());
        let single = jet_covariance(&[z]).matrix;
        let det = single.determinant();
        assert!((det - (2.0 * z.norm_sqr()).exp()).norm() < 1e-12);
    }

    #[test]
    fn jet_covariance_matches_sampled_jets() {
        let pts = [c(0.0, 0.0), c(0.8, 0.3)];
        let trials = 20_000;
        let mut acc = DMatrix::<Complex64>::zeros(4, 4);
        for t in 0..trials {
            let mut s = GaussianStream::new(12, t);
            let f = sample_gef(2.0, 1e-12, &mut s).unwrap();
            let mut v = Vec::new();
            for z in pts {
                let (p, dp) = f.eval_with_derivative(z);
                v.push(p);
                v.push(dp);
            }
            for i in 0..4 {
                for j in 0..4 {
                    acc[(i, j)] += v[i] * v[j].conj();
                }
            }
        }
        let exact = jet_covariance(&pts).matrix;
        for i in 0..4 {
            for j in 0..4 {
                let e = acc[(i, j)] / trials as f64;
                let scale = (exact[(i, i)].re * exact[(j, j)].re).sqrt();
                assert!((e - exact[(i, j)]).norm() < 5.0 * scale / (trials as f64).sqrt(), "{i}{j}");
            }
        }
    }

    #[test]
    fn one_point_intensity() {
        for z in [c(0.0, 0.0), c(1.0, 1.0), c(-7.0, 3.0)] {
            assert!((rho_exact(&[z]).unwrap() - 1.0 / PI).abs() < 1e-10);
        }
    }

    #[test]
    fn two_point_matches_closed_form() {
        for d in [0.05, 0.3, 1.0, 2.0, 3.5, 6.0] {
            let a = rho_exact(&[c(0.0, 0.0), c(d, 0.0)]).unwrap();
            let b = two_point_closed_form(d);
            assert!((a - b).abs() < 1e-9 * b.max(1e-6), "d={d}: {a} {b}");
        }
    }

    #[test]
    fn repulsion_slope_is_two() {
        let ds: Vec<f64> = (0..10).map(|i| 1e-3 * 10f64.powf(i as f64 / 9.0)).collect();
        let xs: Vec<f64> = ds.iter().map(|d| d.ln()).collect();
        let ys: Vec<f64> = ds
            .iter()
            .map(|d| rho_exact(&[c(0.0, 0.0), c(*d, 0.0)]).unwrap().ln())
            .collect();
        let (slope, _) = crate::stats::linear_fit(&xs, &ys);
        assert!((slope - 2.0).abs() < 0.01, "{slope}");
    }

    #[test]
    fn clustering_is_monotone_with_gaussian_envelope() {
        let mut prev = f64::INFINITY;
        for i in 0..=30 {
            let d = 3.0 + 0.1 * i as f64;
            let dev = (rho_exact(&[c(0.0, 0.0), c(d, 0.0)]).unwrap() * PI * PI - 1.0).abs();
            assert!(dev < prev, "d={d}");
            let env = constants::CLUSTER_C2 * (-0.5 * (d - constants::CLUSTER_DELTA2).powi(2)).exp();
            assert!(dev <= env, "d={d}: {dev} > {env}");
            prev = dev;
        }
    }

    #[test]
    fn far_triple_factorizes() {
        let r = envelope_check(&[c(0.0, 0.0), c(10.0, 0.0), c(0.0, 20.0)]).unwrap();
        assert_eq!(r.ell_product, 1.0);
        assert!((r.value - 1.0).abs() < 1e-3, "{r:?}");
    }

    #[test]
    fn envelope_examples() {
        assert_eq!(ell(0.5), 0.25);
        assert_eq!(ell(2.0), 1.0);
        let r = envelope_check(&[c(0.0, 0.0), c(0.3, 0.0), c(0.6, 0.0)]).unwrap();
        assert!(!r.violated, "{r:?}");
    }

    #[test]
    fn calibrated_constants_cover_the_sweep() {
        let mut worst3: f64 = 1.0;
        for t in calibration_triples(100, 0.05, constants::CALIBRATION_SEED) {
            let r = envelope_check(&t).unwrap();
            worst3 = worst3.max(r.value / r.ell_product).max(r.ell_product / r.value);
            assert!(!r.violated, "{t:?}: {r:?}");
        }
        assert!(worst3 > constants::ENVELOPE_C3 / 1.5, "C₃ is far from tight: {worst3}");
        let mut worst2: f64 = 1.0;
        for i in 1..=400 {
            let d = 0.02 * i as f64;
            let r = envelope_check(&[c(0.0, 0.0), c(d, 0.0)]).unwrap();
            worst2 = worst2.max(r.value / r.ell_product).max(r.ell_product / r.value);
            assert!(!r.violated);
        }
        assert!(worst2 > constants::ENVELOPE_C2 / 1.5);
    }

    #[test]
    fn ill_conditioned_and_bad_inputs() {
        assert!(matches!(rho_exact(&[c(0.0, 0.0), c(1e-7, 0.0)]), Err(Error::Numerical(_))));
        assert!(matches!(rho_exact(&[c(1.0, 0.0), c(1.0, 0.0)]), Err(Error::Degenerate(_))));
        assert!(rho_exact(&[c(0.0, 0.0); 0]).is_err());
        let four = [c(0.0, 0.0), c(1.0, 0.0), c(2.0, 0.0), c(3.0, 0.0)];
        assert!(matches!(rho_exact(&four), Err(Error::Config(_))));
        assert!(matches!(rho_empirical(&[c(0.0, 0.0), c(0.3, 0.0)], 0.2, 10, 1), Err(Error::Config(_))));
    }

    #[test]
    fn series_kernel_agrees_with_gef() {
        let mut c2 = vec![1.0];
        for n in 1..80 {
            c2.push(c2[n - 1] / n as f64);
        }
        let k = Kernel::Series(c2);
        let pts = [c(0.2, -0.1), c(-0.4, 0.5), c(0.6, 0.3)];
        let a = rho_exact_with(&k, &pts).unwrap();
        let b = rho_exact(&pts).unwrap();
        assert!((a - b).abs() < 1e-10 * b);
        let bad = Kernel::Series(vec![1.0, 0.0, 1.0, 1.0, 1.0, 1.0]);
        assert!(matches!(rho_exact_with(&bad, &pts), Err(Error::Degenerate(_))));
    }

    #[test]
    fn empirical_one_point() {
        let est = rho_empirical(&[c(0.0, 0.0)], 0.1, 20_000, 5).unwrap();
        let (lo, hi) = rho_disk_range(&[c(0.0, 0.0)], 0.1).unwrap();
        assert!(est.ci_lo <= hi && est.ci_hi >= lo, "{est:?}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn symmetric_and_invariant(
            a in -1.5f64..1.5, b in -1.5f64..1.5, cc in -1.5f64..1.5,
            d in -1.5f64..1.5, e in -1.5f64..1.5, f in -1.5f64..1.5,
            lr in -5.0f64..5.0, li in -5.0f64..5.0, theta in 0.0f64..6.3,
        ) {
            let p = [c(a, b), c(cc, d), c(e, f)];
            prop_assume!(min_separation(&p) > 0.1);
            let base = rho_exact(&p).unwrap();
            let perm = rho_exact(&[p[2], p[0], p[1]]).unwrap();
            let lam = c(lr, li);
            let shifted = rho_exact(&[p[0] + lam, p[1] + lam, p[2] + lam]).unwrap();
            let rot = Complex64::from_polar(1.0, theta);
            let rotated = rho_exact(&[p[0] * rot, p[1] * rot, p[2] * rot]).unwrap();
            prop_assert!((perm - base).abs() <= 1e-9 * base);
            prop_assert!((shifted - base).abs() <= 1e-9 * base);
            prop_assert!((rotated - base).abs() <= 1e-9 * base);
        }
    }
}
