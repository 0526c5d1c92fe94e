//! Gaussian spherical harmonics: covariance, scaling limit and nodal censuses.

use std::f64::consts::PI;

use rayon::prelude::*;

use gaussfield::nodal::{
    cells_for_degree, certified_census, concentration_experiment, count_nodal, rasterize, unstable_disk_census,
    NodalCensus, DEFAULT_SPACING,
};
use gaussfield::randomness::{derive_seed, GaussianStream};
use gaussfield::special::legendre_p;
use gaussfield::sphere_waves::{normalize, sample_sh, scaling_limit_deviation, Basis, Frame, SphericalHarmonicSample};
use gaussfield::stats::{linear_fit, mean, std_error, variance, variance_std_error, Proportion};

use super::{decreasing, require};
use crate::error::HResult;
use crate::record::Ctx;

fn sample(n: usize, seed: u64, tag: u64, k: usize) -> HResult<SphericalHarmonicSample> {
    let mut s = GaussianStream::new(derive_seed(seed, tag), k as u64);
    Ok(sample_sh(n, Basis::Standard, &mut s)?)
}

fn spacing(ctx: &Ctx) -> HResult<f64> {
    ctx.params.f64_in("spacing", 0.01, 1.0)
}

pub fn sphere_covariance(ctx: &mut Ctx) -> HResult<()> {
    let n = ctx.params.usize_in("n", 1, 2000)?;
    let theta = ctx.params.f64_in("theta", 0.0, PI)?;
    let trials = ctx.params.usize_in("trials", 10, 100_000_000)?;
    let x = [0.0, 0.0, 1.0];
    let y = [theta.sin(), 0.0, theta.cos()];
    let seed = ctx.seed;
    let prods: Vec<(f64, f64)> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let f = sample(n, seed, 0, t)?;
            let (a, b) = (f.eval(x)?, f.eval(y)?);
            Ok((a * b, a * a))
        })
        .collect::<HResult<_>>()?;
    let xy: Vec<f64> = prods.iter().map(|p| p.0).collect();
    let xx: Vec<f64> = prods.iter().map(|p| p.1).collect();
    let (m, se) = (mean(&xy), std_error(&xy));
    let target = legendre_p(n, theta.cos());
    ctx.check_near("covariance", m, target, 4.0 * se).ci(m - 1.96 * se, m + 1.96 * se);
    ctx.report("variance_at_point", mean(&xx)).target(1.0);
    Ok(())
}

pub fn scaling_limit(ctx: &mut Ctx) -> HResult<()> {
    let n = ctx.params.usize_in("n", 1, 5000)?;
    let max_dist = ctx.params.f64_in("max_dist", 0.1, 50.0)?;
    let step = ctx.params.f64_in("step", 0.01, 10.0)?;
    let half = max_dist / 2.0;
    let k = (half / step).floor() as i64;
    let mut pts = Vec::new();
    for i in -k..=k {
        for j in -k..=k {
            pts.push([i as f64 * step, j as f64 * step]);
        }
    }
    let frames = [
        ("north_pole", Frame::at([0.0, 0.0, 1.0])?),
        ("generic", Frame::at(normalize([0.3, -0.5, 0.81]))?.rotated(0.4)),
    ];
    let mut rows = Vec::new();
    for (i, (name, fr)) in frames.iter().enumerate() {
        let dev = scaling_limit_deviation(n, fr, &pts, max_dist)?;
        if i == 0 {
            ctx.check("max_deviation", dev, dev < 0.02).tolerance(0.02);
        } else {
            ctx.report(&format!("max_deviation_{name}"), dev);
        }
        rows.push(format!("{name},{dev}"));
    }
    ctx.csv("deviation.csv", "frame,max_deviation", rows)
}

/// Uncertified censuses at one degree, one sample at a time.
fn censuses(n: usize, samples: usize, seed: u64, tag: u64, spacing: f64) -> HResult<Vec<NodalCensus>> {
    let m = cells_for_degree(n, spacing);
    (0..samples)
        .map(|k| {
            let f = sample(n, seed, tag, k)?;
            let g = rasterize(&f, m, false)?;
            Ok(count_nodal(&g))
        })
        .collect()
}

fn courant_violations(cs: &[NodalCensus]) -> usize {
    cs.iter()
        .filter(|c| c.resolved != Some(false) && c.components > c.band_limit * c.band_limit)
        .count()
}

fn census_rows(cs: &[NodalCensus], seed: u64) -> Vec<String> {
    cs.iter().map(|c| c.csv_row(seed)).collect()
}

fn parity_error(f: &SphericalHarmonicSample, n: usize, stream: &mut GaussianStream) -> f64 {
    let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
    (0..100)
        .map(|_| {
            let x = normalize([stream.real(), stream.real(), stream.real()]);
            let y = [-x[0], -x[1], -x[2]];
            (f.eval_unchecked(y) - sign * f.eval_unchecked(x)).abs()
        })
        .fold(0.0, f64::max)
}

pub fn nodal_length(ctx: &mut Ctx) -> HResult<()> {
    let n = ctx.params.usize_in("n", 1, 400)?;
    let samples = ctx.params.usize_in("samples", 1, 100_000)?;
    let sp = spacing(ctx)?;
    let cs = censuses(n, samples, ctx.seed, 14, sp)?;
    let lengths: Vec<f64> = cs.iter().map(|c| c.length).collect();
    let target = PI * (2.0 * (n * (n + 1)) as f64).sqrt();
    let (m, se) = (mean(&lengths), std_error(&lengths));
    ctx.check_near("mean_length", m, target, 0.03 * target).ci(m - 1.96 * se, m + 1.96 * se);
    let v = courant_violations(&cs);
    ctx.check("courant_violations", v as f64, v == 0).target(0.0);
    let mut s = GaussianStream::new(derive_seed(ctx.seed, 99), 0);
    let parity = (0..samples.min(20))
        .map(|k| Ok(parity_error(&sample(n, ctx.seed, 14, k)?, n, &mut s)))
        .collect::<HResult<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    ctx.check("antipodal_parity_error", parity, parity < 1e-9).tolerance(1e-9);
    let seed = ctx.seed;
    ctx.csv("censuses.csv", NodalCensus::csv_header(), census_rows(&cs, seed))
}

pub fn courant(ctx: &mut Ctx) -> HResult<()> {
    let n_list = ctx.params.usize_list("n_list")?;
    let samples = ctx.params.usize_in("samples", 1, 100_000)?;
    let sp = spacing(ctx)?;
    require(!n_list.is_empty() && n_list.iter().all(|n| *n >= 1), "n_list must hold positive degrees")?;
    let (mut total, mut resolved, mut violations, mut pleijel) = (0, 0, 0, 0);
    let mut rows = Vec::new();
    for (i, &n) in n_list.iter().enumerate() {
        for k in 0..samples {
            let f = sample(n, ctx.seed, 15 + i as u64, k)?;
            let c = certified_census(&f, cells_for_degree(n, sp))?;
            total += 1;
            if c.resolved == Some(true) {
                resolved += 1;
                violations += (c.components > n * n) as usize;
                pleijel += (c.domains as f64 > 0.69 * (n * n) as f64) as usize;
            }
            rows.push(c.csv_row(ctx.seed));
        }
    }
    ctx.check("courant_violations", violations as f64, violations == 0).target(0.0);
    ctx.report("resolved_fraction", resolved as f64 / total as f64);
    ctx.report("pleijel_excess_samples", pleijel as f64);
    ctx.csv("censuses.csv", NodalCensus::csv_header(), rows)
}

fn pooled(a: f64, b: f64) -> f64 {
    (a * a + b * b).sqrt()
}

pub fn nodal_concentration(ctx: &mut Ctx) -> HResult<()> {
    let n_list = ctx.params.usize_list("n_list")?;
    let trials = ctx.params.usize_in("trials", 2, 100_000)?;
    let sp = spacing(ctx)?;
    require(n_list.len() >= 2, "need at least two degrees")?;
    let rows = concentration_experiment(&n_list, trials, derive_seed(ctx.seed, 16), sp)?;
    let mut all_positive = true;
    for r in &rows {
        let lo = r.mean - 2.576 * r.se;
        all_positive &= lo > 0.0;
        ctx.report(&format!("mean_n{}", r.n), r.mean).ci(lo, r.mean + 2.576 * r.se);
        ctx.report(&format!("sd_n{}", r.n), r.sd);
        ctx.report(&format!("resolved_n{}", r.n), r.resolved as f64).target(trials as f64);
        ctx.report(&format!("small_component_density_n{}", r.n), r.small_component_density);
    }
    ctx.check("mean_ci_excludes_zero", all_positive as u8 as f64, all_positive);
    let mut worst = 0.0f64;
    for i in 0..rows.len() {
        for j in 0..i {
            let d = (rows[i].mean - rows[j].mean).abs() / pooled(rows[i].se, rows[j].se);
            worst = worst.max(d);
        }
    }
    ctx.check("max_pairwise_mean_gap_in_pooled_se", worst, worst < 2.0).tolerance(2.0);
    let sds: Vec<f64> = rows.iter().map(|r| r.sd).collect();
    ctx.check("sd_decreasing", decreasing(&sds) as u8 as f64, decreasing(&sds));
    let v: usize = rows.iter().map(|r| r.courant_violations).sum();
    ctx.check("courant_violations", v as f64, v == 0).target(0.0);
    ctx.report("a_estimate", rows.last().unwrap().mean);
    // N/n² ≈ a + b/n over the measured degrees
    let inv: Vec<f64> = rows.iter().map(|r| 1.0 / r.n as f64).collect();
    let ms: Vec<f64> = rows.iter().map(|r| r.mean).collect();
    let (b, a) = linear_fit(&inv, &ms);
    ctx.report("a_extrapolated", a);
    ctx.report("inverse_n_coefficient", b);
    let table: Vec<String> = rows
        .iter()
        .map(|r| format!("{},{},{},{},{},{},{}", r.n, r.trials, r.resolved, r.mean, r.sd, r.se, r.tail_fraction))
        .collect();
    ctx.csv("concentration.csv", "n,trials,resolved,mean,sd,se,tail_fraction", table)?;
    let seed = ctx.seed;
    let cs: Vec<String> = rows.iter().flat_map(|r| census_rows(&r.censuses, seed)).collect();
    ctx.csv("censuses.csv", NodalCensus::csv_header(), cs)
}

pub fn unstable_census(ctx: &mut Ctx) -> HResult<()> {
    let n_list = ctx.params.usize_list("n_list")?;
    let trials = ctx.params.usize_in("trials", 1, 100_000)?;
    let alpha = ctx.params.f64_in("alpha", 0.0, 10.0)?;
    let alpha_small = ctx.params.f64_in("alpha_small", 0.0, 10.0)?;
    let radius = ctx.params.f64_in("radius", 0.1, 20.0)?;
    let delta = ctx.params.f64_in("delta", 0.0, 100.0)?;
    let sp = spacing(ctx)?;
    require(n_list.len() >= 2, "need at least two degrees")?;
    let mut p_main = Vec::new();
    let mut rows = Vec::new();
    for (i, &n) in n_list.iter().enumerate() {
        let m = cells_for_degree(n, sp);
        let (mut hits, mut hits_small) = (0u64, 0u64);
        let mut fr = Vec::new();
        for k in 0..trials {
            let f = sample(n, ctx.seed, 17 + i as u64, k)?;
            let g = rasterize(&f, m, true)?;
            let a = unstable_disk_census(&g, n, alpha, radius)?;
            let b = unstable_disk_census(&g, n, alpha_small, radius)?;
            hits += a.exceptional(delta) as u64;
            hits_small += b.exceptional(delta) as u64;
            fr.push(a.unstable as f64 / (n * n) as f64);
            rows.push(format!("{n},{k},{},{},{},{}", a.disks, a.unstable, b.unstable, a.max_multiplicity));
        }
        let p = Proportion::wilson(hits, trials as u64, 1.96);
        let q = Proportion::wilson(hits_small, trials as u64, 1.96);
        ctx.report(&format!("p_exceptional_n{n}"), p.estimate).ci(p.ci_lo, p.ci_hi);
        ctx.report(&format!("mean_unstable_over_n2_n{n}"), mean(&fr)).target(delta);
        ctx.report(&format!("p_exceptional_small_alpha_n{n}"), q.estimate).ci(q.ci_lo, q.ci_hi);
        p_main.push(p.estimate);
    }
    ctx.check("p_exceptional_decreasing", decreasing(&p_main) as u8 as f64, decreasing(&p_main));
    ctx.csv("census.csv", "n,trial,disks,unstable,unstable_small_alpha,max_multiplicity", rows)
}

pub fn length_variance(ctx: &mut Ctx) -> HResult<()> {
    let n_list = ctx.params.usize_list("n_list")?;
    let samples = ctx.params.usize_in("samples", 2, 100_000)?;
    let sp = spacing(ctx)?;
    require(n_list.len() >= 2, "need at least two degrees")?;
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    let mut table = Vec::new();
    let mut all = Vec::new();
    for (i, &n) in n_list.iter().enumerate() {
        let cs = censuses(n, samples, ctx.seed, 19 + i as u64, sp)?;
        let ls: Vec<f64> = cs.iter().map(|c| c.length).collect();
        let (v, se) = (variance(&ls), variance_std_error(&ls));
        ctx.report(&format!("length_variance_n{n}"), v)
            .ci(v - 1.96 * se, v + 1.96 * se)
            .target(65.0 / 32.0 * (n as f64).ln());
        xs.push((n as f64).ln());
        ys.push(v.ln());
        table.push(format!("{n},{},{v},{se}", mean(&ls)));
        all.extend(cs);
    }
    let (slope, _) = linear_fit(&xs, &ys);
    ctx.report("log_variance_slope", slope).target(0.0);
    let v = courant_violations(&all);
    ctx.check("courant_violations", v as f64, v == 0).target(0.0);
    let y1 = SphericalHarmonicSample::basis_element(1, 0, Basis::Rotated);
    let g = rasterize(&y1, cells_for_degree(1, DEFAULT_SPACING), false)?;
    let c = count_nodal(&g);
    ctx.check_near("y1_length_ratio", c.length / (2.0 * PI), 1.0, 0.005);
    ctx.csv("variance.csv", "n,mean_length,length_variance,se", table)?;
    let seed = ctx.seed;
    ctx.csv("censuses.csv", NodalCensus::csv_header(), census_rows(&all, seed))
}
