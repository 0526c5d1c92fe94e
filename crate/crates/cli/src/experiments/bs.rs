//! The avoided-crossing percolation model and its comparison with nodal counts.

use std::f64::consts::PI;

use gaussfield::nodal::{concentration_experiment, DEFAULT_SPACING};
use gaussfield::percolation::{
    bs_statistics, count_bs_clusters, count_by_rendering, cycle_balance, enumerate_totals, Boundary, CrossingGrid,
};
use gaussfield::randomness::derive_seed;
use serde::Serialize;

use super::require;
use crate::error::{HResult, HarnessError};
use crate::record::Ctx;

#[derive(Serialize)]
struct ComparisonRow {
    n: usize,
    nodal_mean: f64,
    /// `â · (E L(f_n))² / n²`, with one site per unit of expected length squared.
    bs_prediction: f64,
    /// `nodal_mean / â`: sites per `n²` that would reconcile the two.
    fitted_sites_per_n2: f64,
}

fn parse_means(raw: &str) -> HResult<Vec<(usize, f64)>> {
    if raw.trim().is_empty() {
        return Ok(Vec::new());
    }
    raw.split(',')
        .map(|pair| {
            let (n, m) = pair
                .split_once(':')
                .ok_or_else(|| HarnessError::Config(format!("nodal_means entry '{pair}' is not n:mean")))?;
            let n = n.trim().parse().map_err(|_| HarnessError::Config(format!("bad degree '{n}'")))?;
            let m = m.trim().parse().map_err(|_| HarnessError::Config(format!("bad mean '{m}'")))?;
            Ok((n, m))
        })
        .collect()
}

pub fn bs_percolation(ctx: &mut Ctx) -> HResult<()> {
    let ls = ctx.params.usize_list("l_pair")?;
    let trials = ctx.params.usize_in("trials", 200, 10_000_000)?;
    let norm_trials = ctx.params.usize_in("normality_trials", 1000, 10_000_000)?;
    let boundary = match ctx.params.str("boundary") {
        "periodic" => Boundary::Periodic,
        "free" => Boundary::Free,
        other => return Err(HarnessError::Config(format!("boundary '{other}': expected periodic or free"))),
    };
    require(ls.len() == 2 && ls[0] < ls[1], "l_pair must be two increasing sizes")?;

    // every configuration, both counting routes
    let mut mismatches = 0usize;
    for (l, bd) in [(2, Boundary::Free), (3, Boundary::Free), (2, Boundary::Periodic)] {
        for code in 0..1u64 << (l * l) {
            let g = CrossingGrid::from_code(l, bd, code);
            mismatches += (count_bs_clusters(&g).total_domains != count_by_rendering(&g)) as usize;
        }
    }
    ctx.check("exhaustive_count_mismatches", mismatches as f64, mismatches == 0).target(0.0);
    let mut unbalanced = 0usize;
    for l in 2..=3 {
        for code in 0..1u64 << (l * l) {
            let g = CrossingGrid::from_code(l, Boundary::Free, code);
            for blue in [true, false] {
                let (cycles, enclosed) = cycle_balance(&g, blue)?;
                unbalanced += (cycles != enclosed) as usize;
            }
        }
    }
    ctx.check("cycle_duality_failures", unbalanced as f64, unbalanced == 0).target(0.0);
    let hist = enumerate_totals(2, Boundary::Free, count_by_rendering)?;
    let exact: f64 = hist.iter().map(|&(t, k)| t as f64 * k as f64).sum::<f64>() / 16.0;
    ctx.report("exact_mean_total_l2", exact);

    let st = bs_statistics(&ls, boundary, trials, derive_seed(ctx.seed, 1))?;
    let (s0, s1) = (&st.sizes[0], &st.sizes[1]);
    let gap_a = (s0.a_hat - s1.a_hat).abs() / (s0.a_se.powi(2) + s1.a_se.powi(2)).sqrt();
    let gap_b = (s0.b_hat - s1.b_hat).abs() / (s0.b_se.powi(2) + s1.b_se.powi(2)).sqrt();
    ctx.check("a_hat_gap_in_pooled_se", gap_a, gap_a < 2.0).tolerance(2.0);
    ctx.check("b_hat_gap_in_pooled_se", gap_b, gap_b < 2.0).tolerance(2.0);
    let mut rows = Vec::new();
    for s in &st.sizes {
        ctx.report(&format!("a_hat_l{}", s.l), s.a_hat).ci(s.a_hat - 1.96 * s.a_se, s.a_hat + 1.96 * s.a_se);
        ctx.report(&format!("b_hat_l{}", s.l), s.b_hat).ci(s.b_hat - 1.96 * s.b_se, s.b_hat + 1.96 * s.b_se);
        for (t, total) in s.totals.iter().enumerate() {
            rows.push(format!("{},{t},{total}", s.l));
        }
    }
    if boundary == Boundary::Periodic {
        // the free-boundary drift, for reference
        let free = bs_statistics(&ls, Boundary::Free, trials, derive_seed(ctx.seed, 1))?;
        for s in &free.sizes {
            ctx.report(&format!("a_hat_free_l{}", s.l), s.a_hat).ci(s.a_hat - 1.96 * s.a_se, s.a_hat + 1.96 * s.a_se);
        }
    }

    let big = bs_statistics(&ls[1..], boundary, norm_trials, derive_seed(ctx.seed, 2))?;
    let rep = big.normality.expect("at least 1000 trials");
    let s = rep.skewness;
    ctx.check("skewness", s.value, s.value.abs() < 0.1).ci(s.ci_lo, s.ci_hi).tolerance(0.1);
    let k = rep.excess_kurtosis;
    ctx.check("excess_kurtosis", k.value, k.value.abs() < 0.2).ci(k.ci_lo, k.ci_hi).tolerance(0.2);
    let d = rep.ks_distance;
    ctx.check("ks_distance", d.value, d.value < 0.02).ci(d.ci_lo, d.ci_hi).tolerance(0.02);

    let mut means = parse_means(ctx.params.str("nodal_means"))?;
    if means.is_empty() {
        let t = ctx.params.usize_in("nodal_trials", 2, 100_000)?;
        let r = concentration_experiment(&[20], t, derive_seed(ctx.seed, 3), DEFAULT_SPACING)?;
        means.push((20, r[0].mean));
    }
    let a_hat = big.sizes[0].a_hat;
    let table: Vec<ComparisonRow> = means
        .iter()
        .map(|&(n, m)| {
            let el2 = 2.0 * PI * PI * (n * (n + 1)) as f64;
            ComparisonRow {
                n,
                nodal_mean: m,
                bs_prediction: a_hat * el2 / (n * n) as f64,
                fitted_sites_per_n2: m / a_hat,
            }
        })
        .collect();
    for r in &table {
        ctx.report(&format!("fitted_sites_per_n2_n{}", r.n), r.fitted_sites_per_n2);
    }
    ctx.json("comparison.json", &table)?;
    ctx.csv("totals.csv", "l,trial,total_domains", rows)
}
