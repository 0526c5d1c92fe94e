//! Zero counts and linear statistics of the GEF.

use rayon::prelude::*;

use gaussfield::gef::sample_gef;
use gaussfield::randomness::{derive_seed, GaussianStream};
use gaussfield::spectral_stats::{
    boundary_asymptotic_constant, deviation_probability_mc, hole_exponent_constant, hole_probability_mc, jlm_phi,
    laplacian_norm_sq, smooth_asymptotic_constant, variance_exact,
};
use gaussfield::stats::{linear_fit, mean, normal_cdf, normality_diagnostics, std_dev, std_error, variance, variance_std_error};
use gaussfield::zeros::{count_zeros_oracle, find_zeros, linear_statistic, TestFunction, WINDOW_SAFETY};

use super::{decreasing, require};
use crate::error::HResult;
use crate::record::Ctx;

fn disk_counts(r: f64, trials: usize, seed: u64) -> HResult<Vec<f64>> {
    let counts = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut s = GaussianStream::new(seed, t as u64);
            let f = sample_gef((r / WINDOW_SAFETY).max(1.0), 1e-10, &mut s)?;
            count_zeros_oracle(&f, r).map(|c| c as f64)
        })
        .collect::<gaussfield::Result<Vec<f64>>>()?;
    Ok(counts)
}

pub fn mean_count(ctx: &mut Ctx) -> HResult<()> {
    let r = ctx.params.f64_in("r", 0.1, 20.0)?;
    let trials = ctx.params.usize_in("trials", 10, 10_000_000)?;
    let xs = disk_counts(r, trials, ctx.seed)?;
    let (m, se) = (mean(&xs), std_error(&xs));
    ctx.check("abs_mean_minus_r2", (m - r * r).abs(), (m - r * r).abs() < 4.0 * se)
        .target(0.0)
        .tolerance(4.0 * se);
    ctx.report("mean_count", m).ci(m - 1.96 * se, m + 1.96 * se).target(r * r);
    ctx.report("variance", variance(&xs)).target(variance_exact(&TestFunction::IndicatorDisk, r)?);
    let rows = xs.iter().enumerate().map(|(t, c)| format!("{t},{c}"));
    ctx.csv("counts.csv", "trial,count", rows)
}

pub fn variance_formula(ctx: &mut Ctx) -> HResult<()> {
    let radii = ctx.params.f64_list("radii")?;
    let sigma = ctx.params.f64_in("sigma", 0.01, 1.0)?;
    let trials = ctx.params.usize_in("trials", 10, 1_000_000)?;
    require(!radii.is_empty() && radii.iter().all(|r| *r > 0.0), "radii must be positive")?;
    let h = TestFunction::GaussianBump { sigma };
    let reach = radii.iter().cloned().fold(0.0, f64::max) * h.support_radius();
    require(reach < 20.0, format!("support radius {reach:.2} of the largest dilation exceeds 20"))?;
    let seed = ctx.seed;
    let stats: Vec<Vec<f64>> = (0..trials)
        .into_par_iter()
        .map(|t| -> gaussfield::Result<Vec<f64>> {
            let mut s = GaussianStream::new(seed, t as u64);
            let f = sample_gef(reach / WINDOW_SAFETY + 0.1, 1e-10, &mut s)?;
            let zs = find_zeros(&f, reach)?;
            radii.iter().map(|r| linear_statistic(&zs, &h, *r)).collect()
        })
        .collect::<gaussfield::Result<_>>()?;
    let mut rows = Vec::new();
    for (k, r) in radii.iter().enumerate() {
        let xs: Vec<f64> = stats.iter().map(|v| v[k]).collect();
        let (v, se) = (variance(&xs), variance_std_error(&xs));
        let exact = variance_exact(&h, *r)?;
        let tol = 0.1 * exact + 4.0 * se;
        ctx.check_near(&format!("variance_r{r}"), v, exact, tol).ci(v - 1.96 * se, v + 1.96 * se);
        ctx.report(&format!("mean_r{r}"), mean(&xs)).target(r * r / std::f64::consts::PI * h.integral());
        rows.push(format!("{r},{v},{se},{exact}"));
    }
    ctx.csv("variances.csv", "r,variance_mc,se,variance_exact", rows)
}

fn smooth_h(ctx: &Ctx) -> HResult<TestFunction> {
    match ctx.params.str("h") {
        "smooth" => Ok(TestFunction::SmoothCompact),
        "bump" => Ok(TestFunction::GaussianBump {
            sigma: ctx.params.f64_in("sigma", 0.01, 5.0)?,
        }),
        other => Err(crate::HarnessError::Config(format!("h = '{other}': expected smooth or bump"))),
    }
}

pub fn smooth_asymptotics(ctx: &mut Ctx) -> HResult<()> {
    let r = ctx.params.f64_in("r", 1.0, 1000.0)?;
    let h = smooth_h(ctx)?;
    let target = smooth_asymptotic_constant() * laplacian_norm_sq(&h)?;
    let mut rows = Vec::new();
    let mut rr = 1.0;
    while rr < r {
        rows.push(format!("{rr},{}", rr * rr * variance_exact(&h, rr)? / target));
        rr *= 2.0;
    }
    let ratio = r * r * variance_exact(&h, r)? / target;
    rows.push(format!("{r},{ratio}"));
    ctx.check_near("scaled_variance_ratio", ratio, 1.0, 0.05);
    ctx.report("limit_constant", target);
    ctx.csv("convergence.csv", "r,r2_variance_over_limit", rows)
}

pub fn boundary_asymptotics(ctx: &mut Ctx) -> HResult<()> {
    let r = ctx.params.f64_in("r", 1.0, 1000.0)?;
    let target = boundary_asymptotic_constant();
    let mut rows = Vec::new();
    let mut rr = 1.0;
    while rr < r {
        rows.push(format!("{rr},{}", variance_exact(&TestFunction::IndicatorDisk, rr)? / rr));
        rr *= 2.0;
    }
    let v = variance_exact(&TestFunction::IndicatorDisk, r)? / r;
    rows.push(format!("{r},{v}"));
    ctx.check_near("variance_over_r", v, target, 0.1 * target);
    ctx.csv("convergence.csv", "r,variance_over_r", rows)
}

pub fn clt(ctx: &mut Ctx) -> HResult<()> {
    let r = ctx.params.f64_in("r", 0.5, 20.0)?;
    let trials = ctx.params.usize_in("trials", 1000, 10_000_000)?;
    let h = TestFunction::IndicatorSquare;
    let reach = r * h.support_radius();
    let seed = ctx.seed;
    let xs = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut s = GaussianStream::new(seed, t as u64);
            let f = sample_gef((reach / WINDOW_SAFETY).max(1.0), 1e-10, &mut s)?;
            linear_statistic(&find_zeros(&f, reach)?, &h, r)
        })
        .collect::<gaussfield::Result<Vec<f64>>>()?;
    let (m, sd) = (mean(&xs), std_dev(&xs));
    // raw counts: the lattice KS branch needs the integer support
    let rep = normality_diagnostics(&xs, 200, derive_seed(ctx.seed, 5))?;
    let s = rep.skewness;
    ctx.check("skewness", s.value, s.value.abs() < 0.1).ci(s.ci_lo, s.ci_hi).tolerance(0.1);
    let k = rep.excess_kurtosis;
    ctx.check("excess_kurtosis", k.value, k.value.abs() < 0.2).ci(k.ci_lo, k.ci_hi).tolerance(0.2);
    let d = rep.ks_distance;
    ctx.check("ks_distance", d.value, d.value < 0.02).ci(d.ci_lo, d.ci_hi).tolerance(0.02);
    ctx.report("mean_count", m).target(r * r / std::f64::consts::PI);
    ctx.report("variance", sd * sd);
    ctx.report("ks_distance_uncorrected", ks_uncorrected(&xs, m, sd));
    let rows = xs.iter().enumerate().map(|(t, c)| format!("{t},{c}"));
    ctx.csv("counts.csv", "trial,count", rows)
}

/// Plain KS distance to the continuous `N(m, sd²)`; bounded below by half the
/// largest atom for lattice data.
fn ks_uncorrected(xs: &[f64], m: f64, sd: f64) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    v.iter().enumerate().fold(0.0f64, |d, (i, x)| {
        let f = normal_cdf((x - m) / sd);
        d.max((f - i as f64 / n).abs()).max(((i + 1) as f64 / n - f).abs())
    })
}

pub fn jlm_moderate(ctx: &mut Ctx) -> HResult<()> {
    let radii = ctx.params.f64_list("radii")?;
    let alpha = ctx.params.f64_in("alpha", 0.5, 1.0)?;
    let trials = ctx.params.usize_in("trials", 100, 10_000_000)?;
    require(radii.len() >= 2, "need at least two radii for a fit")?;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut rows = Vec::new();
    for (k, r) in radii.iter().enumerate() {
        let est = deviation_probability_mc(alpha, *r, trials, derive_seed(ctx.seed, k as u64))?;
        let p = est.proportion;
        require(p.hits > 0 && p.hits < p.trials, format!("no usable tail estimate at r = {r}"))?;
        xs.push(r.ln());
        ys.push((-p.estimate.ln()).ln());
        rows.push(format!("{r},{},{},{},{}", p.hits, p.estimate, p.ci_lo, p.ci_hi));
    }
    let (slope, _) = linear_fit(&xs, &ys);
    let phi = jlm_phi(alpha, 2.0)?;
    ctx.check_near("fitted_exponent", slope, phi, 0.15);
    ctx.csv("tails.csv", "r,hits,p_hat,ci_lo,ci_hi", rows)
}

pub fn hole_probability(ctx: &mut Ctx) -> HResult<()> {
    let radii = ctx.params.f64_list("radii")?;
    let trials = ctx.params.usize_in("trials", 100, 100_000_000)?;
    require(!radii.is_empty(), "need at least one radius")?;
    let curve = hole_probability_mc(&radii, trials, ctx.seed)?;
    let est: Vec<f64> = curve.estimates.iter().map(|p| p.estimate).collect();
    let last = curve.estimates.last().unwrap();
    let r_last = *radii.last().unwrap();
    ctx.check("hole_probability_positive", last.estimate, last.hits > 0 && last.ci_lo > 0.0)
        .ci(last.ci_lo, last.ci_hi);
    ctx.check("monotone_in_r", decreasing(&est) as u8 as f64, decreasing(&est));
    let law = (-hole_exponent_constant() * r_last.powi(4)).exp();
    ctx.report("log10_ratio_to_leading_law", (last.estimate / law).log10()).target(0.0);
    let rows = radii
        .iter()
        .zip(&curve.estimates)
        .map(|(r, p)| format!("{r},{},{},{},{},{}", p.hits, p.estimate, p.ci_lo, p.ci_hi, (-hole_exponent_constant() * r.powi(4)).exp()));
    ctx.csv("holes.csv", "r,hits,p_hat,ci_lo,ci_hi,leading_law", rows)
}
