//! Gaussian spherical harmonics, the Gaussian plane wave, arithmetic random
//! waves and the rescaled exponential map linking them.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::randomness::GaussianStream;
use crate::special::{bessel_j_all, legendre_p};

pub type Vec3 = [f64; 3];

const UNIT_TOL: f64 = 1e-12;

pub fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn cross(a: Vec3, b: Vec3) -> Vec3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

pub fn norm(a: Vec3) -> f64 {
    dot(a, a).sqrt()
}

pub fn normalize(a: Vec3) -> Vec3 {
    let n = norm(a);
    [a[0] / n, a[1] / n, a[2] / n]
}

/// Great-circle distance between unit vectors, accurate at small angles.
pub fn geodesic(a: Vec3, b: Vec3) -> f64 {
    norm(cross(a, b)).atan2(dot(a, b))
}

fn check_unit(x: Vec3) -> Result<()> {
    if (norm(x) - 1.0).abs() > UNIT_TOL {
        return Err(Error::Domain(format!("|x| = {} is not 1", norm(x))));
    }
    Ok(())
}

/// `P_n(t)` for `|t| ≤ 1`.
pub fn legendre_checked(n: usize, t: f64) -> Result<f64> {
    if !(t.abs() <= 1.0) {
        return Err(Error::Domain(format!("Legendre argument {t} outside [-1, 1]")));
    }
    Ok(legendre_p(n, t))
}

/// Fully normalized associated Legendre values
/// `P̃_l^m(t) = √((2l+1)/(4π) (l−m)!/(l+m)!) P_l^m(t)` for `l = n`, all `m ≤ n`.
fn normalized_legendre_row(n: usize, t: f64, s: f64) -> Vec<f64> {
    let mut out = vec![0.0; n + 1];
    let mut pmm = (0.25 / PI).sqrt();
    for m in 0..=n {
        if m > 0 {
            pmm *= -((2 * m + 1) as f64 / (2 * m) as f64).sqrt() * s;
        }
        if m == n {
            out[m] = pmm;
            break;
        }
        let mut p0 = pmm;
        let mut p1 = t * ((2 * m + 3) as f64).sqrt() * pmm;
        for l in m + 2..=n {
            let (lf, mf) = (l as f64, m as f64);
            let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
            let lp = lf - 1.0;
            let a_prev = ((4.0 * lp * lp - 1.0) / (lp * lp - mf * mf)).sqrt();
            let p2 = a * (t * p1 - p0 / a_prev);
            p0 = p1;
            p1 = p2;
        }
        out[m] = p1;
    }
    out
}

/// Real orthonormal basis of degree-`n` harmonics, normalized so that
/// `∫ Y_k² dσ = 1` for the uniform probability measure `σ`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Basis {
    /// `Y_n^0`, `√2 Y_n^m cos mφ`, `√2 Y_n^m sin mφ` about the z-axis.
    Standard,
    /// The standard basis composed with a fixed rotation of the sphere.
    Rotated,
}

const ROTATION: [[f64; 3]; 3] = rotation_matrix();

const fn rotation_matrix() -> [[f64; 3]; 3] {
    // Rz(0.7)·Ry(1.1)·Rz(−0.4), precomputed
    [
        [0.5704133675980294, -0.45826309217872424, 0.681632986593423],
        [-0.028696065972916098, 0.8182600476512798, 0.5741315443479861],
        [-0.8208563369208728, -0.34705249280839284, 0.4535961214255773],
    ]
}

fn rotate(x: Vec3) -> Vec3 {
    let r = &ROTATION;
    [dot(r[0], x), dot(r[1], x), dot(r[2], x)]
}

/// Values of all `2n+1` basis functions at a unit vector.
pub fn basis_values(n: usize, basis: Basis, x: Vec3) -> Vec<f64> {
    let x = match basis {
        Basis::Standard => x,
        Basis::Rotated => rotate(x),
    };
    let t = x[2].clamp(-1.0, 1.0);
    let s = (x[0] * x[0] + x[1] * x[1]).sqrt();
    let row = normalized_legendre_row(n, t, s);
    let norm0 = (4.0 * PI).sqrt();
    let mut out = vec![0.0; 2 * n + 1];
    out[0] = norm0 * row[0];
    let unit = if s > 0.0 {
        Complex64::new(x[0] / s, x[1] / s)
    } else {
        Complex64::new(1.0, 0.0)
    };
    let mut e = Complex64::new(1.0, 0.0);
    for m in 1..=n {
        e *= unit;
        let a = norm0 * std::f64::consts::SQRT_2 * row[m];
        out[2 * m - 1] = a * e.re;
        out[2 * m] = a * e.im;
    }
    out
}

/// `f_n = Σ ξ_k Y_k` with `ξ_k ~ N(0, 1/(2n+1))`, so `E f_n(x) f_n(y) = P_n(cos Θ)`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SphericalHarmonicSample {
    pub degree: usize,
    pub coeffs: Vec<f64>,
    pub basis: Basis,
}

pub fn sample_sh(n: usize, basis: Basis, stream: &mut GaussianStream) -> Result<SphericalHarmonicSample> {
    if n == 0 {
        return Err(Error::Config("degree must be at least 1".into()));
    }
    let sd = 1.0 / ((2 * n + 1) as f64).sqrt();
    Ok(SphericalHarmonicSample {
        degree: n,
        coeffs: (0..2 * n + 1).map(|_| sd * stream.real()).collect(),
        basis,
    })
}

impl SphericalHarmonicSample {
    /// A single basis element, e.g. `k = 0, n = 1` gives `√3 cos θ`.
    pub fn basis_element(n: usize, k: usize, basis: Basis) -> Self {
        let mut coeffs = vec![0.0; 2 * n + 1];
        coeffs[k] = 1.0;
        Self {
            degree: n,
            coeffs,
            basis,
        }
    }

    pub fn eval(&self, x: Vec3) -> Result<f64> {
        check_unit(x)?;
        Ok(self.eval_unchecked(x))
    }

    pub fn eval_unchecked(&self, x: Vec3) -> f64 {
        basis_values(self.degree, self.basis, x)
            .iter()
            .zip(&self.coeffs)
            .map(|(y, c)| y * c)
            .sum()
    }

    /// `Σ ξ_k²`, the `L²(σ)` norm squared.
    pub fn norm_sq(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum()
    }
}

/// A real function on the sphere with a band limit, for rasterization.
pub trait SphereField: Sync {
    fn value(&self, x: Vec3) -> f64;
    /// Degree of the highest harmonic present.
    fn band_limit(&self) -> usize;
}

impl SphereField for SphericalHarmonicSample {
    fn value(&self, x: Vec3) -> f64 {
        self.eval_unchecked(x)
    }
    fn band_limit(&self) -> usize {
        self.degree
    }
}

/// The constant field `g ≡ c`.
#[derive(Clone, Copy, Debug)]
pub struct ConstantField(pub f64);

impl SphereField for ConstantField {
    fn value(&self, _: Vec3) -> f64 {
        self.0
    }
    fn band_limit(&self) -> usize {
        0
    }
}

/// `√(2n+1) P_n(cos d(pole, x))`, of unit `L²(σ)` norm.
pub fn eval_zonal(n: usize, pole: Vec3, x: Vec3) -> Result<f64> {
    check_unit(pole)?;
    check_unit(x)?;
    Ok(((2 * n + 1) as f64).sqrt() * legendre_p(n, dot(pole, x).clamp(-1.0, 1.0)))
}

/// `F(x) = Re Σ_{|m| ≤ m_max} ζ_m J_{|m|}(r) e^{imθ}`, `E|ζ_m|² = 2`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PlaneWaveSample {
    pub m_max: usize,
    /// `coeffs[m_max + m]` is `ζ_m`.
    pub coeffs: Vec<Complex64>,
    pub r_valid: f64,
}

/// Truncation order keeping `Σ_{|m| > m_max} J_m(r)²` negligible on `|x| ≤ r`.
pub fn plane_wave_order(r_valid: f64) -> usize {
    (std::f64::consts::E * r_valid / 2.0).ceil() as usize + 40
}

pub fn sample_plane_wave(r_valid: f64, stream: &mut GaussianStream) -> Result<PlaneWaveSample> {
    if !(r_valid > 0.0) || r_valid > 200.0 {
        return Err(Error::Config(format!("validity radius {r_valid} outside (0, 200]")));
    }
    let m_max = plane_wave_order(r_valid);
    let coeffs = (0..2 * m_max + 1)
        .map(|_| stream.complex() * std::f64::consts::SQRT_2)
        .collect();
    Ok(PlaneWaveSample {
        m_max,
        coeffs,
        r_valid,
    })
}

impl PlaneWaveSample {
    pub fn eval(&self, x: [f64; 2]) -> Result<f64> {
        let r = (x[0] * x[0] + x[1] * x[1]).sqrt();
        if r > self.r_valid {
            return Err(Error::Domain(format!("|x| = {r} beyond validity radius {}", self.r_valid)));
        }
        let j = bessel_j_all(self.m_max, r);
        let u = if r > 0.0 {
            Complex64::new(x[0] / r, x[1] / r)
        } else {
            Complex64::new(1.0, 0.0)
        };
        let mut acc = self.coeffs[self.m_max] * j[0];
        let (mut ep, mut em) = (Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0));
        for m in 1..=self.m_max {
            ep *= u;
            em *= u.conj();
            acc += (self.coeffs[self.m_max + m] * ep + self.coeffs[self.m_max - m] * em) * j[m];
        }
        Ok(acc.re)
    }

    /// `Σ_{|m| ≤ m_max} J_{|m|}(r)²`, which equals `1` up to the truncation tail.
    pub fn retained_mass(&self, r: f64) -> f64 {
        let j = bessel_j_all(self.m_max, r);
        j[0] * j[0] + 2.0 * j[1..].iter().map(|v| v * v).sum::<f64>()
    }
}

/// `h_N(x) = Re Σ_{|ν|² = N} ζ_ν e^{2πi ν·x}` on the torus, `E|ζ_ν|² = 2`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ArithmeticWave {
    pub n: u64,
    pub vectors: Vec<(i64, i64)>,
    pub coeffs: Vec<Complex64>,
}

/// All `(a, b) ∈ Z²` with `a² + b² = n`, by direct enumeration.
pub fn lattice_representations(n: u64) -> Vec<(i64, i64)> {
    let r = (n as f64).sqrt().ceil() as i64 + 1;
    let mut out = Vec::new();
    for a in -r..=r {
        for b in -r..=r {
            if (a * a + b * b) as u64 == n {
                out.push((a, b));
            }
        }
    }
    out
}

/// A prime `p ≡ 3 (mod 4)` dividing `n` to an odd power, if any.
fn sum_of_squares_obstruction(mut n: u64) -> Option<(u64, u32)> {
    let mut p = 2;
    while p * p <= n {
        let mut e = 0;
        while n % p == 0 {
            n /= p;
            e += 1;
        }
        if p % 4 == 3 && e % 2 == 1 {
            return Some((p, e));
        }
        p += 1;
    }
    (n > 1 && n % 4 == 3).then_some((n, 1))
}

pub fn sample_arithmetic_wave(n: u64, stream: &mut GaussianStream) -> Result<ArithmeticWave> {
    if n == 0 {
        return Err(Error::Config("N must be positive".into()));
    }
    if let Some((p, e)) = sum_of_squares_obstruction(n) {
        return Err(Error::Config(format!(
            "{n} is not a sum of two squares: prime {p} ≡ 3 mod 4 divides it to the odd power {e}"
        )));
    }
    let vectors = lattice_representations(n);
    let coeffs = vectors
        .iter()
        .map(|_| stream.complex() * std::f64::consts::SQRT_2)
        .collect();
    Ok(ArithmeticWave { n, vectors, coeffs })
}

impl ArithmeticWave {
    pub fn eval(&self, x: [f64; 2]) -> f64 {
        self.vectors
            .iter()
            .zip(&self.coeffs)
            .map(|(&(a, b), c)| {
                let ph = 2.0 * PI * (a as f64 * x[0] + b as f64 * x[1]);
                (c * Complex64::from_polar(1.0, ph)).re
            })
            .sum()
    }
}

/// `Σ_{|ν|² = N} cos 2π(ν·d)`.
pub fn covariance_aw(n: u64, d: [f64; 2]) -> Result<f64> {
    if let Some((p, e)) = sum_of_squares_obstruction(n) {
        return Err(Error::Config(format!(
            "{n} is not a sum of two squares: prime {p} ≡ 3 mod 4 divides it to the odd power {e}"
        )));
    }
    Ok(lattice_representations(n)
        .iter()
        .map(|&(a, b)| (2.0 * PI * (a as f64 * d[0] + b as f64 * d[1])).cos())
        .sum())
}

/// An orthonormal tangent frame at a point of the sphere.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct Frame {
    pub base: Vec3,
    pub e1: Vec3,
    pub e2: Vec3,
}

impl Frame {
    /// The default frame: `e1` is the projection of the coordinate axis least
    /// aligned with `base`.
    pub fn at(base: Vec3) -> Result<Self> {
        check_unit(base)?;
        let k = (0..3)
            .min_by(|&i, &j| base[i].abs().total_cmp(&base[j].abs()))
            .unwrap();
        let mut axis = [0.0; 3];
        axis[k] = 1.0;
        let e1 = normalize(cross(cross(base, axis), base));
        let e2 = cross(base, e1);
        Ok(Self { base, e1, e2 })
    }

    /// The same frame turned by `angle` in the tangent plane.
    pub fn rotated(&self, angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        let mix = |a: Vec3, b: Vec3, p: f64, q: f64| [p * a[0] + q * b[0], p * a[1] + q * b[1], p * a[2] + q * b[2]];
        Self {
            base: self.base,
            e1: mix(self.e1, self.e2, c, s),
            e2: mix(self.e1, self.e2, -s, c),
        }
    }

    /// `exp_{base}(v)` for the tangent vector `v = v₀e1 + v₁e2`, `|v| < π`.
    pub fn exp(&self, v: [f64; 2]) -> Result<Vec3> {
        let t = (v[0] * v[0] + v[1] * v[1]).sqrt();
        if t >= PI {
            return Err(Error::Domain(format!("|v| = {t} reaches the antipode")));
        }
        if t == 0.0 {
            return Ok(self.base);
        }
        let (s, c) = t.sin_cos();
        let k = s / t;
        Ok(std::array::from_fn(|i| {
            c * self.base[i] + k * (v[0] * self.e1[i] + v[1] * self.e2[i])
        }))
    }
}

/// `F_n(u) = f_n(exp_{x₀}(u/n))`.
pub fn scaled_field(f: &SphericalHarmonicSample, frame: &Frame, u: [f64; 2]) -> Result<f64> {
    let n = f.degree as f64;
    let x = frame.exp([u[0] / n, u[1] / n])?;
    Ok(f.eval_unchecked(x))
}

/// `max |P_n(cos Θ(exp(u/n), exp(v/n))) − J₀(|u−v|)|` over pairs of `points`
/// with `|u − v| ≤ max_dist`.
pub fn scaling_limit_deviation(n: usize, frame: &Frame, points: &[[f64; 2]], max_dist: f64) -> Result<f64> {
    let nf = n as f64;
    let mapped: Vec<Vec3> = points
        .iter()
        .map(|u| frame.exp([u[0] / nf, u[1] / nf]))
        .collect::<Result<_>>()?;
    let mut worst: f64 = 0.0;
    for i in 0..points.len() {
        for j in 0..=i {
            let d = ((points[i][0] - points[j][0]).powi(2) + (points[i][1] - points[j][1]).powi(2)).sqrt();
            if d > max_dist {
                continue;
            }
            let p = legendre_p(n, dot(mapped[i], mapped[j]).clamp(-1.0, 1.0));
            worst = worst.max((p - bessel_j_all(0, d)[0]).abs());
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::bessel_j;
    use crate::stats::{ks_two_sample, ks_two_sample_critical, mean, std_error};

    fn random_unit(s: &mut GaussianStream) -> Vec3 {
        normalize([s.real(), s.real(), s.real()])
    }

    #[test]
    fn rotation_is_orthogonal() {
        let r = &ROTATION;
        for i in 0..3 {
            for j in 0..3 {
                let d = dot(r[i], r[j]);
                assert!((d - if i == j { 1.0 } else { 0.0 }).abs() < 1e-14);
            }
        }
        let det = dot(r[0], cross(r[1], r[2]));
        assert!((det - 1.0).abs() < 1e-14);
    }

    #[test]
    fn legendre_values() {
        for n in [0, 5, 40] {
            assert!((legendre_checked(n, 1.0).unwrap() - 1.0).abs() < 1e-14);
        }
        assert!((legendre_checked(1, 0.3).unwrap() - 0.3).abs() < 1e-16);
        assert!(legendre_checked(3, 1.1).is_err());
        // exact rational value of the explicit P10 at 7/10
        let c: [i128; 6] = [-63, 3465, -30030, 90090, -109395, 46189];
        let num: i128 = c
            .iter()
            .enumerate()
            .map(|(k, ck)| ck * 7i128.pow(2 * k as u32) * 10i128.pow(10 - 2 * k as u32))
            .sum();
        let exact = num as f64 / (256.0 * 1e10);
        assert!((legendre_p(10, 0.7) - exact).abs() < 1e-15, "{} {exact}", legendre_p(10, 0.7));
    }

    #[test]
    fn addition_theorem() {
        // Σ_k Y_k(x) Y_k(y) = (2n+1) P_n(x·y) in both conventions
        let mut s = GaussianStream::new(1, 1);
        for n in [1, 7, 30, 100] {
            for basis in [Basis::Standard, Basis::Rotated] {
                let x = random_unit(&mut s);
                let y = random_unit(&mut s);
                let a = basis_values(n, basis, x);
                let b = basis_values(n, basis, y);
                let lhs: f64 = a.iter().zip(&b).map(|(p, q)| p * q).sum();
                let rhs = (2 * n + 1) as f64 * legendre_p(n, dot(x, y));
                assert!((lhs - rhs).abs() < 1e-9 * (2 * n + 1) as f64, "n={n}: {lhs} {rhs}");
                let diag: f64 = a.iter().map(|p| p * p).sum();
                assert!((diag - (2 * n + 1) as f64).abs() < 1e-9 * n as f64);
            }
        }
    }

    #[test]
    fn basis_is_orthonormal_by_quadrature() {
        // Gauss–Legendre in cos θ times a uniform rule in φ is exact here
        let n = 6;
        let (xs, ws) = crate::special::gauss_legendre(16);
        let nphi = 32;
        let dim = 2 * n + 1;
        let mut gram = vec![0.0; dim * dim];
        for (t, w) in xs.iter().zip(&ws) {
            for k in 0..nphi {
                let phi = 2.0 * PI * k as f64 / nphi as f64;
                let s = (1.0 - t * t).sqrt();
                let v = basis_values(n, Basis::Standard, [s * phi.cos(), s * phi.sin(), *t]);
                for a in 0..dim {
                    for b in 0..dim {
                        gram[a * dim + b] += v[a] * v[b] * w / (2.0 * nphi as f64);
                    }
                }
            }
        }
        for a in 0..dim {
            for b in 0..dim {
                let e = if a == b { 1.0 } else { 0.0 };
                assert!((gram[a * dim + b] - e).abs() < 1e-12, "{a},{b}: {}", gram[a * dim + b]);
            }
        }
    }

    #[test]
    fn antipodal_parity() {
        let mut s = GaussianStream::new(5, 0);
        for n in [3, 8] {
            let f = sample_sh(n, Basis::Standard, &mut s).unwrap();
            for _ in 0..100 {
                let x = random_unit(&mut s);
                let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
                let d = f.eval(x).unwrap() - sign * f.eval([-x[0], -x[1], -x[2]]).unwrap();
                assert!(d.abs() < 1e-9);
            }
        }
    }

    #[test]
    fn covariance_and_basis_independence() {
        let n = 20;
        let x = [0.0, 0.0, 1.0];
        let y = [(PI / 3.0).sin(), 0.0, (PI / 3.0).cos()];
        let mut prods = [Vec::new(), Vec::new()];
        let mut at_x = [Vec::new(), Vec::new()];
        for (b, basis) in [Basis::Standard, Basis::Rotated].into_iter().enumerate() {
            for t in 0..4000 {
                let mut s = GaussianStream::new(77 + b as u64, t);
                let f = sample_sh(n, basis, &mut s).unwrap();
                let fx = f.eval(x).unwrap();
                prods[b].push(fx * f.eval(y).unwrap());
                at_x[b].push(fx);
            }
            let target = legendre_p(n, 0.5);
            assert!((mean(&prods[b]) - target).abs() < 4.0 * std_error(&prods[b]));
            let sq: Vec<f64> = at_x[b].iter().map(|v| v * v).collect();
            assert!((mean(&sq) - 1.0).abs() < 4.0 * std_error(&sq));
        }
        let ks = ks_two_sample(&at_x[0], &at_x[1]);
        assert!(ks < ks_two_sample_critical(4000, 4000, 0.001));
    }

    #[test]
    fn rejects_non_unit_points() {
        let mut s = GaussianStream::new(5, 0);
        let f = sample_sh(4, Basis::Standard, &mut s).unwrap();
        assert!(matches!(f.eval([1.0, 1.0, 0.0]), Err(Error::Domain(_))));
        assert!(sample_sh(0, Basis::Standard, &mut s).is_err());
    }

    #[test]
    fn zonal_harmonic() {
        let pole = [0.0, 0.0, 1.0];
        let mut ratios = Vec::new();
        for n in [20, 40, 80] {
            let v = eval_zonal(n, pole, pole).unwrap();
            ratios.push(v / (n as f64).sqrt());
            // sign change on the circle d = ρ/n
            let neg = (1..=500).map(|k| k as f64 * 0.01).find(|rho: &f64| {
                let d = rho / n as f64;
                eval_zonal(n, pole, [d.sin(), 0.0, d.cos()]).unwrap() < 0.0
            });
            let rho = neg.unwrap();
            assert!(rho > 2.0 && rho < 3.0, "{rho}");
        }
        assert!(ratios.iter().all(|r| *r > 1.4 && *r < 1.5), "{ratios:?}");
        // unit norm: ∫ (2n+1) P_n² dσ = 1
        let n = 20;
        let (xs, ws) = crate::special::gauss_legendre(40);
        let q: f64 = xs.iter().zip(&ws).map(|(t, w)| w * 0.5 * (2 * n + 1) as f64 * legendre_p(n, *t).powi(2)).sum();
        assert!((q - 1.0).abs() < 1e-12);
    }

    #[test]
    fn plane_wave_covariance_and_helmholtz() {
        let (x, y) = ([1.0, 0.5], [1.0 + 2.0f64.sqrt(), 0.5 + 2.0f64.sqrt()]);
        let mut prods = Vec::new();
        let mut sq = Vec::new();
        for t in 0..4000 {
            let mut s = GaussianStream::new(9, t);
            let f = sample_plane_wave(5.0, &mut s).unwrap();
            let fx = f.eval(x).unwrap();
            prods.push(fx * f.eval(y).unwrap());
            sq.push(fx * fx);
        }
        let j0 = bessel_j(0, 2.0);
        assert!((j0 - 0.223_890_779_141_235_7).abs() < 1e-14);
        assert!((mean(&prods) - j0).abs() < 4.0 * std_error(&prods));
        assert!((mean(&sq) - 1.0).abs() < 4.0 * std_error(&sq));

        let mut s = GaussianStream::new(10, 0);
        let f = sample_plane_wave(8.0, &mut s).unwrap();
        assert!((f.retained_mass(8.0) - 1.0).abs() < 1e-13);
        let h = 1e-3;
        for _ in 0..100 {
            let p = [s.uniform() * 10.0 - 5.0, s.uniform() * 10.0 - 5.0];
            let v = |dx: f64, dy: f64| f.eval([p[0] / 2.0 + dx, p[1] / 2.0 + dy]).unwrap();
            let lap = (v(h, 0.0) + v(-h, 0.0) + v(0.0, h) + v(0.0, -h) - 4.0 * v(0.0, 0.0)) / (h * h);
            assert!((lap + v(0.0, 0.0)).abs() < 1e-4, "{}", lap + v(0.0, 0.0));
        }
        assert!(matches!(f.eval([9.0, 0.0]), Err(Error::Domain(_))));
    }

    #[test]
    fn arithmetic_waves() {
        let mut r1 = lattice_representations(1);
        r1.sort();
        assert_eq!(r1, vec![(-1, 0), (0, -1), (0, 1), (1, 0)]);
        assert!((covariance_aw(1, [0.25, 0.0]).unwrap() - 2.0).abs() < 1e-14);
        let mut s = GaussianStream::new(3, 3);
        assert!(matches!(sample_arithmetic_wave(3, &mut s), Err(Error::Config(_))));
        assert!(sample_arithmetic_wave(21, &mut s).is_err());
        assert!(sample_arithmetic_wave(9, &mut s).is_ok());
        assert_eq!(lattice_representations(25).len(), 12);
        let offsets = [[0.1, 0.0], [0.03, 0.21], [0.5, 0.5], [0.17, -0.4], [0.33, 0.05]];
        let base = [0.2, 0.7];
        let mut prods = vec![Vec::new(); offsets.len()];
        for t in 0..4000 {
            let mut s = GaussianStream::new(4, t);
            let h = sample_arithmetic_wave(25, &mut s).unwrap();
            let h0 = h.eval(base);
            for (k, d) in offsets.iter().enumerate() {
                prods[k].push(h0 * h.eval([base[0] + d[0], base[1] + d[1]]));
            }
        }
        for (k, d) in offsets.iter().enumerate() {
            let c = covariance_aw(25, *d).unwrap();
            assert!((mean(&prods[k]) - c).abs() < 4.0 * std_error(&prods[k]), "{d:?}");
        }
    }

    #[test]
    fn exponential_map_and_scaling_limit() {
        let x0 = normalize([0.3, -0.2, 0.9]);
        let frame = Frame::at(x0).unwrap();
        let mut s = GaussianStream::new(6, 0);
        let f = sample_sh(100, Basis::Standard, &mut s).unwrap();
        assert_eq!(scaled_field(&f, &frame, [0.0, 0.0]).unwrap(), f.eval(x0).unwrap());
        let n = 100.0;
        let hop = |u: [f64; 2], v: [f64; 2], fr: &Frame| {
            let a = fr.exp([u[0] / n, u[1] / n]).unwrap();
            let b = fr.exp([v[0] / n, v[1] / n]).unwrap();
            geodesic(a, b) * n
        };
        let other = frame.rotated(1.234);
        let pairs: [([f64; 2], [f64; 2]); 3] = [([1.0, 2.0], [-3.0, 0.5]), ([4.0, -1.0], [0.0, 0.0]), ([-2.5, -2.5], [2.0, 1.0])];
        for (u, v) in pairs {
            let d = ((u[0] - v[0]).powi(2) + (u[1] - v[1]).powi(2)).sqrt();
            assert!((hop(u, v, &frame) - d).abs() < 0.01 * d);
            assert!((hop(u, v, &frame) - hop(u, v, &other)).abs() < 1e-12);
        }
        let grid: Vec<[f64; 2]> = (0..25).map(|k| [(k % 5) as f64 - 2.0, (k / 5) as f64 - 2.0]).collect();
        assert!(scaling_limit_deviation(100, &frame, &grid, 5.0).unwrap() < 0.02);
        assert!(frame.exp([4.0, 0.0]).is_err());
    }
}
