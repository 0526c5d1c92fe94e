//! The exact variance of linear statistics, its asymptotic regimes, the JLM
//! exponent, and Monte Carlo tail estimates.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::constants;
use crate::error::{Error, Result};
use crate::gef::sample_gef;
use crate::randomness::GaussianStream;
use crate::special::{bessel_j_single, integrate, riemann_zeta};
use crate::stats::Proportion;
use crate::zeros::{count_zeros_oracle, TestFunction, WINDOW_SAFETY};

pub use crate::stats::{normality_diagnostics, NormalityReport};

/// Truncation of the series defining `M`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralDensity {
    pub alpha_max: usize,
}

impl Default for SpectralDensity {
    fn default() -> Self {
        Self { alpha_max: 10_000 }
    }
}

impl SpectralDensity {
    /// `M(μ) = π³ μ⁴ Σ_{α≥1} α⁻³ e^{−π²μ²/α}`; the first `alpha_max` terms are
    /// summed and the rest handled by Euler–Maclaurin.
    pub fn m(&self, mu: f64) -> f64 {
        let mu = mu.abs();
        if mu == 0.0 {
            return 0.0;
        }
        let c = PI * PI * mu * mu;
        let a = self.alpha_max;
        let mut sum = 0.0;
        for k in 1..=a {
            let k = k as f64;
            sum += (-c / k).exp() / (k * k * k);
        }
        sum += series_tail(c, a as f64);
        PI.powi(3) * mu.powi(4) * sum
    }

    /// `M(μ) − 1/π`; vanishes rapidly as `μ → ∞`.
    pub fn m_excess(&self, mu: f64) -> f64 {
        self.m(mu) - 1.0 / PI
    }
}

/// `Σ_{α>A} α⁻³ e^{−c/α}` by Euler–Maclaurin about `A`.
fn series_tail(c: f64, a: f64) -> f64 {
    let h = 1.0 / a;
    // ∫_A^∞ α⁻³ e^{−c/α} dα = ∫_0^h t e^{−ct} dt
    let integral = if c * h < 0.5 {
        let mut term = h * h / 2.0;
        let mut s: f64 = 0.0;
        let mut k = 0;
        while term.abs() > 1e-20 * s.abs().max(1e-300) && k < 60 {
            s += term;
            term *= -c * h * (k + 2) as f64 / ((k + 1) as f64 * (k + 3) as f64);
            k += 1;
        }
        s
    } else {
        (1.0 - (1.0 + c * h) * (-c * h).exp()) / (c * c)
    };
    let e = (-c / a).exp();
    let f = e / a.powi(3);
    let df = e * (-3.0 / a.powi(4) + c / a.powi(5));
    integral - 0.5 * f - df / 12.0
}

pub fn m_function(mu: f64) -> f64 {
    SpectralDensity::default().m(mu)
}

/// `2π ∫_0^R f(s) s ds` for a radial function, robust to `|x|^α` at the origin.
pub fn radial_integral(f: impl Fn(f64) -> f64, support: f64) -> f64 {
    if support == 0.0 {
        return 0.0;
    }
    // s = R t⁴ smooths power-law behaviour at s = 0
    let r = support;
    2.0 * PI * integrate(
        |t| {
            let s = r * t.powi(4);
            f(s) * s * 4.0 * r * t.powi(3)
        },
        0.0,
        1.0,
        64,
        16,
    )
}

/// The radial Fourier transform `ĥ(ρ) = 2π ∫ h(s) J₀(2πρs) s ds`.
pub fn hankel(h: &TestFunction, rho: f64) -> Result<f64> {
    h.validate()?;
    let k = 2.0 * PI * rho;
    Ok(match *h {
        TestFunction::IndicatorDisk => {
            if rho == 0.0 {
                PI
            } else {
                bessel_j_single(1, k) / rho
            }
        }
        TestFunction::GaussianBump { sigma } => {
            2.0 * PI * sigma * sigma * (-2.0 * PI * PI * sigma * sigma * rho * rho).exp()
        }
        TestFunction::SmoothCompact => {
            if k < 1e-2 {
                // J₄(k)/k⁴ = (1 − k²/20 + k⁴/960 − …)/384
                2.0 * PI * 48.0 * (1.0 - k * k / 20.0 + k.powi(4) / 960.0) / 384.0
            } else {
                2.0 * PI * 48.0 * bessel_j_single(4, k) / k.powi(4)
            }
        }
        TestFunction::CuspAlpha { .. } => {
            let panels = 8 + (2.0 * rho).ceil() as usize;
            2.0 * PI
                * integrate(
                    |t| {
                        let s = t.powi(4);
                        h.radial(s) * bessel_j_single(0, k * s) * s * 4.0 * t.powi(3)
                    },
                    0.0,
                    1.0,
                    panels,
                    16,
                )
        }
        TestFunction::Zero => 0.0,
        TestFunction::IndicatorSquare => {
            return Err(Error::Config("the square indicator is not radial".into()))
        }
    })
}

/// `‖h‖²₂`.
pub fn l2_norm_sq(h: &TestFunction) -> Result<f64> {
    h.validate()?;
    Ok(match *h {
        TestFunction::IndicatorDisk => PI,
        TestFunction::IndicatorSquare => 1.0,
        TestFunction::GaussianBump { sigma } => {
            PI * sigma * sigma * (1.0 - crate::zeros::GAUSSIAN_CUTOFF.powi(2))
        }
        TestFunction::SmoothCompact => PI / 7.0,
        _ => radial_integral(|s| h.radial(s).powi(2), h.support_radius()),
    })
}

/// Frequency cutoff (in units of `r`) beyond which `M − 1/π` is negligible.
const MU_MAX: f64 = 6.0;

/// `Var n(r, h) = r² ∫ |ĥ(λ)|² M(λ/r) dm(λ)`, split as
/// `(r²/π)‖h‖² + r² ∫ |ĥ|² (M(λ/r) − 1/π) dm` so that only a finite frequency
/// range needs quadrature.
pub fn variance_exact(h: &TestFunction, r: f64) -> Result<f64> {
    if !h.is_radial() {
        return Err(Error::Config("variance_exact supports radial test functions".into()));
    }
    let l2 = l2_norm_sq(h)?;
    let hat = |rho: f64| hankel(h, rho).unwrap();
    variance_from_transform(hat, l2, r)
}

/// The variance formula for a radial transform supplied by the caller.
pub fn variance_from_transform(hat: impl Fn(f64) -> f64 + Sync, l2_norm_sq: f64, r: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::Config(format!("radius must be positive, got {r}")));
    }
    let m = SpectralDensity::default();
    let top = MU_MAX * r;
    let panels = (top / 0.125).ceil() as usize;
    let width = top / panels as f64;
    let (x, w) = crate::special::gauss_legendre(8);
    let correction: f64 = (0..panels)
        .into_par_iter()
        .map(|p| {
            let mid = (p as f64 + 0.5) * width;
            x.iter()
                .zip(&w)
                .map(|(xi, wi)| {
                    let rho = mid + 0.5 * width * xi;
                    wi * hat(rho).powi(2) * m.m_excess(rho / r) * 2.0 * PI * rho
                })
                .sum::<f64>()
                * 0.5
                * width
        })
        .sum();
    Ok(r * r * (l2_norm_sq / PI + correction))
}

/// `‖Δh‖²₂ = ∫ |ĥ(λ)|² (2π|λ|)⁴ dm(λ)`, by quadrature in frequency.
pub fn laplacian_norm_sq(h: &TestFunction) -> Result<f64> {
    let top = 400.0;
    Ok(integrate(
        |rho| hankel(h, rho).unwrap().powi(2) * (2.0 * PI * rho).powi(4) * 2.0 * PI * rho,
        0.0,
        top,
        3200,
        8,
    ))
}

/// Parseval defect `|∫|ĥ|² − ‖h‖²| / ‖h‖²`, including the analytic `ρ⁻³`
/// tail of the disk indicator.
pub fn parseval_defect(h: &TestFunction) -> Result<f64> {
    let l2 = l2_norm_sq(h)?;
    let top = 200.0;
    let mut total = integrate(
        |rho| hankel(h, rho).unwrap().powi(2) * 2.0 * PI * rho,
        0.0,
        top,
        1600,
        8,
    );
    if matches!(h, TestFunction::IndicatorDisk) {
        // 2πρ·J₁(2πρ)²/ρ² averages to 1/(πρ²) (next order ~ρ⁻³ oscillating)
        total += 1.0 / (PI * top);
    }
    Ok((total - l2).abs() / l2)
}

/// `ζ(3)/(16π)`: the limit of `r² Var n(r,h) / ‖Δh‖²` for smooth `h`.
pub fn smooth_asymptotic_constant() -> f64 {
    riemann_zeta(3.0) / (16.0 * PI)
}

/// `ζ(3/2)/(4√π)`: the limit of `Var n(r)/r` for the unit disk.
pub fn boundary_asymptotic_constant() -> f64 {
    riemann_zeta(1.5) / (4.0 * PI.sqrt())
}

/// The two-piece comparison quantity
/// `A = r⁻² ∫_{|λ|≤r} |ĥ|²|λ|⁴ + r² ∫_{|λ|≥r} |ĥ|²` and the envelope
/// `[C_lo·A, C_hi·A]` that contains the exact variance.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VarianceEnvelope {
    pub low: f64,
    pub high: f64,
    pub a: f64,
}

pub fn variance_envelope(h: &TestFunction, r: f64) -> Result<VarianceEnvelope> {
    let l2 = l2_norm_sq(h)?;
    let hat = |rho: f64| hankel(h, rho).unwrap();
    let panels = (r / 0.125).ceil() as usize;
    let low_part = integrate(|rho| hat(rho).powi(2) * rho.powi(4) * 2.0 * PI * rho, 0.0, r, panels, 8);
    let inner = integrate(|rho| hat(rho).powi(2) * 2.0 * PI * rho, 0.0, r, panels, 8);
    let a = low_part / (r * r) + r * r * (l2 - inner).max(0.0);
    Ok(VarianceEnvelope {
        low: constants::ENVELOPE_LOW * a,
        high: constants::ENVELOPE_HIGH * a,
        a,
    })
}

/// The JLM exponent `φ(α, ν)`.
pub fn jlm_phi(alpha: f64, nu: f64) -> Result<f64> {
    if !(alpha >= 0.5) {
        return Err(Error::Domain(format!("φ(α, ν) needs α ≥ ½, got {alpha}")));
    }
    if !(nu > 0.0) {
        return Err(Error::Domain(format!("φ(α, ν) needs ν > 0, got {nu}")));
    }
    Ok(if alpha <= 1.0 {
        2.0 * alpha - 1.0
    } else if alpha <= 2.0 {
        (nu + 1.0) * alpha - nu
    } else {
        (nu / 2.0 + 1.0) * alpha
    })
}

/// Minimum expected number of hits for a tail probability to count as sampleable.
pub const MIN_EXPECTED_HITS: f64 = 30.0;

/// Probability that `|n(r) − r²| > r^α`, with a Wilson interval.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TailEstimate {
    pub r: f64,
    pub alpha: f64,
    pub proportion: Proportion,
}

fn counts_at(radii: &[f64], trials: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    let r_top = radii.iter().cloned().fold(0.0, f64::max);
    let r_max = (r_top / WINDOW_SAFETY).max(1.0);
    (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut s = GaussianStream::new(seed, t as u64);
            let f = sample_gef(r_max, 1e-10, &mut s)?;
            radii.iter().map(|r| count_zeros_oracle(&f, *r)).collect()
        })
        .collect()
}

pub fn deviation_probability_mc(alpha: f64, r: f64, trials: usize, seed: u64) -> Result<TailEstimate> {
    if !(r > 0.0) {
        return Err(Error::Degenerate(format!("the disk of radius {r} is empty")));
    }
    let phi = jlm_phi(alpha, 2.0)?;
    let expected = trials as f64 * (-r.powf(phi)).exp();
    if expected < MIN_EXPECTED_HITS {
        return Err(Error::Infeasible(format!(
            "trials·exp(−r^φ) = {trials}·exp(−{:.3}) = {expected:.3e} < {MIN_EXPECTED_HITS}",
            r.powf(phi)
        )));
    }
    let thresh = r.powf(alpha);
    let counts = counts_at(&[r], trials, seed)?;
    let hits = counts
        .iter()
        .filter(|c| (c[0] as f64 - r * r).abs() > thresh)
        .count();
    Ok(TailEstimate {
        r,
        alpha,
        proportion: Proportion::wilson(hits as u64, trials as u64, 1.96),
    })
}

/// `3e²/4`, the leading constant of the hole probability exponent.
pub fn hole_exponent_constant() -> f64 {
    3.0 * std::f64::consts::E.powi(2) / 4.0
}

/// `P{n(r) = 0}` at each radius, all from the same samples.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HoleCurve {
    pub radii: Vec<f64>,
    pub estimates: Vec<Proportion>,
}

pub fn hole_probability_mc(radii: &[f64], trials: usize, seed: u64) -> Result<HoleCurve> {
    for &r in radii {
        if !(r > 0.0) {
            return Err(Error::Degenerate(format!("the disk of radius {r} is empty")));
        }
        let expected = trials as f64 * (-hole_exponent_constant() * r.powi(4)).exp();
        if expected < MIN_EXPECTED_HITS {
            return Err(Error::Infeasible(format!(
                "hole at r = {r}: trials·exp(−(3e²/4)r⁴) = {expected:.3e} < {MIN_EXPECTED_HITS}; \
                 about {:.3e} trials would be needed",
                MIN_EXPECTED_HITS * (hole_exponent_constant() * r.powi(4)).exp()
            )));
        }
    }
    let counts = counts_at(radii, trials, seed)?;
    let estimates = (0..radii.len())
        .map(|i| {
            let hits = counts.iter().filter(|c| c[i] == 0).count();
            Proportion::wilson(hits as u64, trials as u64, 1.96)
        })
        .collect();
    Ok(HoleCurve {
        radii: radii.to_vec(),
        estimates,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn brute_m(mu: f64, terms: usize) -> f64 {
        let c = PI * PI * mu * mu;
        let s: f64 = (1..=terms).rev().map(|k| (-c / k as f64).exp() / (k as f64).powi(3)).sum();
        PI.powi(3) * mu.powi(4) * s
    }

    #[test]
    fn m_against_brute_force_with_richardson() {
        // Σ_{α>N} α⁻³ ≈ 1/(2N²): Richardson on N and 2N removes it
        let (n1, n2) = (500_000, 1_000_000);
        let b1 = brute_m(1.0, n1);
        let b2 = brute_m(1.0, n2);
        let rich = (4.0 * b2 - b1) / 3.0;
        assert!((m_function(1.0) - rich).abs() < 1e-12, "{} {}", m_function(1.0), rich);
        assert_eq!(m_function(0.0), 0.0);
    }

    #[test]
    fn m_small_argument_limit() {
        let mu: f64 = 1e-3;
        let ratio = m_function(mu) / (PI.powi(3) * riemann_zeta(3.0) * mu.powi(4));
        assert!((ratio - 1.0).abs() < 1e-4);
    }

    #[test]
    fn m_large_argument_limit() {
        assert!(SpectralDensity::default().m_excess(MU_MAX).abs() < 1e-12);
        assert!((m_function(3.0) - 1.0 / PI).abs() < 1e-6);
    }

    #[test]
    fn parseval_holds() {
        for h in [
            TestFunction::IndicatorDisk,
            TestFunction::GaussianBump { sigma: 0.3 },
            TestFunction::SmoothCompact,
        ] {
            let d = parseval_defect(&h).unwrap();
            assert!(d < 1e-6, "{h:?}: {d}");
        }
        let d = parseval_defect(&TestFunction::CuspAlpha { alpha: 0.5 }).unwrap();
        assert!(d < 1e-5, "cusp: {d}");
    }

    #[test]
    fn transforms_at_origin_equal_integrals() {
        for h in [
            TestFunction::IndicatorDisk,
            TestFunction::SmoothCompact,
            TestFunction::CuspAlpha { alpha: 0.5 },
        ] {
            let a = hankel(&h, 0.0).unwrap();
            let b = radial_integral(|s| h.radial(s), 1.0);
            assert!((a - b).abs() < 1e-9 * b, "{h:?}: {a} {b}");
        }
        // small-k branch of the C² bump joins the Bessel branch
        let h = TestFunction::SmoothCompact;
        let k = 1e-2 / (2.0 * PI);
        let a = hankel(&h, k * (1.0 - 1e-9)).unwrap();
        let b = hankel(&h, k * (1.0 + 1e-9)).unwrap();
        assert!((a - b).abs() < 1e-13, "{a} {b}");
    }

    #[test]
    fn laplacian_norms_match_closed_forms() {
        let v = laplacian_norm_sq(&TestFunction::SmoothCompact).unwrap();
        assert!((v - 19.2 * PI).abs() < 1e-4 * v, "{v}");
        let sigma = 0.5;
        let v = laplacian_norm_sq(&TestFunction::GaussianBump { sigma }).unwrap();
        assert!((v - 2.0 * PI / (sigma * sigma)).abs() < 1e-6 * v, "{v}");
    }

    #[test]
    fn asymptotic_constants() {
        // ζ(3)/(16π) = 0.0239140…
        assert!((smooth_asymptotic_constant() - 0.023914).abs() < 1e-6);
        assert!((boundary_asymptotic_constant() - 0.3684).abs() < 1e-4);
    }

    #[test]
    fn variance_regimes() {
        let r = 16.0;
        let v = variance_exact(&TestFunction::SmoothCompact, r).unwrap();
        let target = smooth_asymptotic_constant() * 19.2 * PI;
        assert!((r * r * v / target - 1.0).abs() < 0.05, "{}", r * r * v / target);
        let v = variance_exact(&TestFunction::IndicatorDisk, r).unwrap();
        assert!((v / r / boundary_asymptotic_constant() - 1.0).abs() < 0.1);
        assert!(variance_exact(&TestFunction::IndicatorSquare, r).is_err());
        assert!(variance_exact(&TestFunction::IndicatorDisk, 0.0).is_err());
    }

    #[test]
    fn envelope_contains_variance() {
        let h = TestFunction::GaussianBump { sigma: 0.3 };
        for r in [2.0, 4.0, 8.0, 16.0] {
            let v = variance_exact(&h, r).unwrap();
            let e = variance_envelope(&h, r).unwrap();
            assert!(e.low <= v && v <= e.high, "r={r}: {e:?} {v}");
        }
        let disk = TestFunction::IndicatorDisk;
        let v = variance_exact(&disk, 8.0).unwrap();
        let e = variance_envelope(&disk, 8.0).unwrap();
        assert!(e.low <= v && v <= e.high);
    }

    #[test]
    fn envelope_constants_bracket_the_density() {
        let dens = SpectralDensity::default();
        let mut lo = f64::INFINITY;
        let mut hi: f64 = 0.0;
        for i in 1..=600 {
            let mu = i as f64 * 0.01;
            let q = dens.m(mu) / mu.powi(4).min(1.0);
            lo = lo.min(q);
            hi = hi.max(q);
        }
        assert!(constants::ENVELOPE_LOW <= lo && lo < constants::ENVELOPE_LOW * 1.01);
        assert!(constants::ENVELOPE_HIGH >= hi && hi > constants::ENVELOPE_HIGH * 0.99);
    }

    #[test]
    fn jlm_branches() {
        assert_eq!(jlm_phi(0.5, 2.0).unwrap(), 0.0);
        assert_eq!(jlm_phi(1.0, 2.0).unwrap(), 1.0);
        assert_eq!(3.0 * 1.0 - 2.0, 1.0);
        assert_eq!(jlm_phi(2.0, 2.0).unwrap(), 4.0);
        assert_eq!(jlm_phi(2.0 + 1e-12, 2.0).unwrap().round(), 4.0);
        assert!(jlm_phi(0.4, 2.0).is_err());
        for nu in [0.5, 1.0, 2.0, 3.5] {
            let e = 1e-12;
            for b in [1.0, 2.0] {
                let l = jlm_phi(b - e, nu).unwrap();
                let r = jlm_phi(b + e, nu).unwrap();
                assert!((l - r).abs() < 1e-9, "ν={nu} at {b}");
            }
        }
    }

    #[test]
    fn infeasible_regimes_refused() {
        assert!(matches!(deviation_probability_mc(3.0, 4.0, 10_000, 1), Err(Error::Infeasible(_))));
        assert!(matches!(deviation_probability_mc(0.6, 0.0, 10, 1), Err(Error::Degenerate(_))));
        let e = hole_probability_mc(&[2.0], 1_000_000, 1).unwrap_err();
        assert!(matches!(e, Error::Infeasible(_)));
    }

    #[test]
    fn hole_probability_is_monotone() {
        let h = hole_probability_mc(&[0.3, 0.5, 0.8], 4000, 3).unwrap();
        let p: Vec<f64> = h.estimates.iter().map(|e| e.estimate).collect();
        assert!(p[0] >= p[1] && p[1] >= p[2]);
        assert!(p[0] > 0.85);
    }

    #[test]
    fn mean_linear_statistic_of_bump() {
        let h = TestFunction::GaussianBump { sigma: 0.3 };
        let r = 4.0;
        let trials = 2000;
        let vals: Vec<f64> = (0..trials)
            .map(|t| {
                let mut s = GaussianStream::new(11, t);
                let reach = r * h.support_radius();
                let f = sample_gef(reach / WINDOW_SAFETY, 1e-10, &mut s).unwrap();
                let zs = crate::zeros::find_zeros(&f, reach).unwrap();
                crate::zeros::linear_statistic(&zs, &h, r).unwrap()
            })
            .collect();
        let m = crate::stats::mean(&vals);
        let se = crate::stats::std_error(&vals);
        let target = r * r / PI * h.integral();
        assert!((m - target).abs() < 4.0 * se, "{m} vs {target} (se {se})");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn variance_is_quadratic_in_amplitude(c in 0.1f64..5.0, r in 1.0f64..6.0) {
            let h = TestFunction::GaussianBump { sigma: 0.4 };
            let l2 = l2_norm_sq(&h).unwrap();
            let base = variance_from_transform(|rho| hankel(&h, rho).unwrap(), l2, r).unwrap();
            let scaled = variance_from_transform(|rho| c * hankel(&h, rho).unwrap(), c * c * l2, r).unwrap();
            prop_assert!((scaled - c * c * base).abs() <= 1e-12 * scaled.abs());
        }

        #[test]
        fn m_is_positive_and_below_the_quartic_bound(mu in 1e-3f64..5.0) {
            let m = m_function(mu);
            prop_assert!(m > 0.0);
            prop_assert!(m <= PI.powi(3) * riemann_zeta(3.0) * mu.powi(4) * (1.0 + 1e-12));
        }
    }
}
