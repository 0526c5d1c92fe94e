//! Exact and sampled k-point functions.

use std::f64::consts::PI;

use gaussfield::kpoint::{rho_disk_range, rho_empirical, rho_exact, two_point_closed_form};
use gaussfield::randomness::derive_seed;
use gaussfield::stats::linear_fit;
use gaussfield::Complex64;

use crate::error::HResult;
use crate::record::Ctx;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn kpoint_functions(ctx: &mut Ctx) -> HResult<()> {
    let trials = ctx.params.usize_in("trials", 1000, 100_000_000)?;

    let rho1 = rho_exact(&[c(0.3, -0.2)])?;
    ctx.check_near("rho1_minus_inv_pi", rho1 - 1.0 / PI, 0.0, 1e-10);

    let ds: Vec<f64> = (0..=20).map(|i| 1e-3 * 10f64.powf(i as f64 / 20.0)).collect();
    let xs: Vec<f64> = ds.iter().map(|d| d.ln()).collect();
    let ys = ds
        .iter()
        .map(|d| rho_exact(&[c(0.0, 0.0), c(*d, 0.0)]).map(f64::ln))
        .collect::<gaussfield::Result<Vec<f64>>>()?;
    let (slope, _) = linear_fit(&xs, &ys);
    ctx.check_near("repulsion_slope", slope, 2.0, 0.01);

    let mut rows = Vec::new();
    let mut devs = Vec::new();
    for i in 0..=30 {
        let d = 3.0 + 0.1 * i as f64;
        let v = rho_exact(&[c(0.0, 0.0), c(d, 0.0)])? * PI * PI;
        devs.push((v - 1.0).abs());
        rows.push(format!("{d},{v},{}", two_point_closed_form(d) * PI * PI));
    }
    let monotone = super::decreasing(&devs);
    ctx.check("clustering_monotone", monotone as u8 as f64, monotone);
    ctx.check_near("clustering_at_6", 1.0 + devs[30], 1.0, 1e-3);
    ctx.csv("clustering.csv", "d,rho2_times_pi2,closed_form_times_pi2", rows)?;

    let configs: [(&str, Vec<Complex64>, f64); 3] = [
        ("k1_origin", vec![c(0.0, 0.0)], 0.1),
        ("k2_d1.5", vec![c(0.0, 0.0), c(1.5, 0.0)], 0.2),
        ("k2_d3", vec![c(0.0, 0.0), c(0.0, 3.0)], 0.2),
    ];
    let mut rows = Vec::new();
    for (k, (name, pts, eps)) in configs.iter().enumerate() {
        let est = rho_empirical(pts, *eps, trials, derive_seed(ctx.seed, k as u64))?;
        let exact = rho_exact(pts)?;
        let (lo, hi) = rho_disk_range(pts, *eps)?;
        let ok = est.ci_lo <= hi && est.ci_hi >= lo;
        ctx.check(&format!("rho_empirical_{name}"), est.value, ok)
            .ci(est.ci_lo, est.ci_hi)
            .target(exact);
        rows.push(format!("{name},{},{eps},{exact},{},{},{},{lo},{hi}", pts.len(), est.value, est.ci_lo, est.ci_hi));
    }
    ctx.csv(
        "empirical.csv",
        "config,k,eps,rho_exact,rho_empirical,ci_lo,ci_hi,bias_lo,bias_hi",
        rows,
    )
}
