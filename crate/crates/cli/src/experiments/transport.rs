//! Gradient-flow basins, critical points and lattice matchings.

use std::f64::consts::PI;

use gaussfield::gef::{sample_gef, Square};
use gaussfield::randomness::GaussianStream;
use gaussfield::stats::{mean, std_dev, std_error};
use gaussfield::transport::{
    basin_partition, critical_points, lattice_matching, saddle_sinks, stretched_exponent, tail_fractions, Potential,
    BOUNDARY_MARGIN,
};
use gaussfield::zeros::WINDOW_SAFETY;

use super::{decreasing, require};
use crate::error::HResult;
use crate::record::Ctx;

fn potential(seed: u64, sample: usize, window: Square) -> HResult<Potential> {
    let mut s = GaussianStream::new(seed, sample as u64);
    let f = sample_gef((window.reach() + 0.5) / WINDOW_SAFETY, 1e-10, &mut s)?;
    Ok(Potential::new(&f, window)?)
}

pub fn basin_areas(ctx: &mut Ctx) -> HResult<()> {
    let samples = ctx.params.usize_in("samples", 1, 100_000)?;
    let half = ctx.params.f64_in("half_side", 2.0, 15.0)?;
    let grid = ctx.params.usize_in("grid", 16, 8192)?;
    let block = ctx.params.usize_in("block", 1, 64)?;
    require(grid % block == 0, "grid must be a multiple of block")?;
    let window = Square::centered(half);
    let (mut areas, mut dists, mut diams) = (Vec::new(), Vec::new(), Vec::new());
    let (mut disconnected, mut worst_unresolved) = (0usize, 0.0f64);
    let mut rows = Vec::new();
    for k in 0..samples {
        let p = potential(ctx.seed, k, window)?;
        let map = basin_partition(&p, grid, block)?;
        let interior = map.interior_basins(BOUNDARY_MARGIN);
        let a = map.areas();
        let comps = map.flow_linked_component_counts(&p);
        disconnected += interior.iter().filter(|b| comps[**b] != 1).count();
        worst_unresolved = worst_unresolved.max(map.unresolved_fraction(BOUNDARY_MARGIN));
        for b in &interior {
            areas.push(a[*b]);
            rows.push(format!("{k},{b},{},{},{}", p.zeros[*b].re, p.zeros[*b].im, a[*b]));
        }
        dists.extend(map.sink_distances(&interior));
        diams.extend(map.basin_diameters(&interior));
    }
    require(!areas.is_empty(), "no interior basins; enlarge the window")?;
    let (m, se) = (mean(&areas), std_error(&areas));
    ctx.check_near("mean_interior_area", m, PI, 0.02 * PI).ci(m - 1.96 * se, m + 1.96 * se);
    ctx.report("area_sd", std_dev(&areas));
    ctx.report("interior_basins", areas.len() as f64);
    ctx.check("disconnected_basins", disconnected as f64, disconnected == 0).target(0.0);
    ctx.report("max_unresolved_fraction", worst_unresolved).target(0.0);
    let rs = [1.5, 2.0, 2.5, 3.0];
    let tails = tail_fractions(&dists, &rs);
    ctx.report("sink_distance_exponent", stretched_exponent(&rs, &tails).unwrap_or(f64::NAN)).target(1.6);
    let drs = [2.0, 3.0, 4.0];
    let dtails = tail_fractions(&diams, &drs);
    ctx.report("diameter_tail_exponent", stretched_exponent(&drs, &dtails).unwrap_or(f64::NAN)).target(1.0);
    ctx.csv("basins.csv", "sample,basin,zero_re,zero_im,area", rows)?;
    let tail_rows = rs
        .iter()
        .zip(&tails)
        .map(|(r, t)| format!("sink_distance,{r},{t}"))
        .chain(drs.iter().zip(&dtails).map(|(r, t)| format!("diameter,{r},{t}")));
    ctx.csv("tails.csv", "quantity,r,fraction_above", tail_rows)
}

pub fn saddle_density(ctx: &mut Ctx) -> HResult<()> {
    let samples = ctx.params.usize_in("samples", 1, 100_000)?;
    let half = ctx.params.f64_in("half_side", 2.0, 15.0)?;
    let grid = ctx.params.usize_in("grid", 16, 8192)?;
    let window = Square::centered(half);
    let inner = window.shrink(BOUNDARY_MARGIN * window.side());
    let (mut sd, mut md, mut per_zero) = (Vec::new(), Vec::new(), Vec::new());
    let mut rows = Vec::new();
    for k in 0..samples {
        let p = potential(ctx.seed, k, window)?;
        let cp = critical_points(&p, &window, grid);
        sd.push(cp.saddles.len() as f64 / window.area());
        md.push(cp.maxima.len() as f64 / window.area());
        // saddles attached to each zero of the inner square
        let mut hits = vec![0usize; p.zeros.len()];
        for s in &cp.saddles {
            if let Some((a, b)) = saddle_sinks(&p, *s) {
                hits[a] += 1;
                hits[b] += 1;
            }
        }
        for (z, h) in p.zeros.iter().zip(&hits) {
            if inner.contains(*z) {
                per_zero.push(*h as f64);
            }
        }
        rows.push(format!("{k},{},{},{},{}", cp.saddles.len(), cp.maxima.len(), cp.zero_cells, cp.newton_failures));
    }
    let (m, se) = (mean(&sd), std_error(&sd));
    let target = 4.0 / (3.0 * PI);
    ctx.check_near("saddle_density", m, target, 0.05 * target).ci(m - 1.96 * se, m + 1.96 * se);
    ctx.report("maximum_density", mean(&md)).target(1.0 / (3.0 * PI));
    ctx.report("mean_n_z", mean(&per_zero)).target(8.0 / 3.0);
    ctx.csv("critical_points.csv", "sample,saddles,maxima,zero_cells,newton_failures", rows)
}

pub fn matching_tails(ctx: &mut Ctx) -> HResult<()> {
    let windows = ctx.params.usize_in("windows", 1, 100_000)?;
    let half = ctx.params.f64_in("half_side", 2.0, 15.0)?;
    let margin = ctx.params.f64_in("margin", 0.0, 10.0)?;
    let radii = ctx.params.f64_list("radii")?;
    require(radii.len() >= 2, "need at least two radii")?;
    let window = Square::centered(half);
    let (mut disp, mut ok) = (Vec::new(), 0usize);
    let mut rows = Vec::new();
    for k in 0..windows {
        let p = potential(ctx.seed, k, window)?;
        match lattice_matching(&p.zeros, &window, margin) {
            Ok((m, used)) => {
                if m.certified && m.bottleneck <= used {
                    ok += 1;
                }
                rows.push(format!("{k},{},{},{used}", m.pairs.len(), m.bottleneck));
                disp.extend(m.displacements());
            }
            Err(gaussfield::Error::Infeasible(_)) => rows.push(format!("{k},0,,")),
            Err(e) => return Err(e.into()),
        }
    }
    let rate = ok as f64 / windows as f64;
    ctx.check_near("success_rate", rate, 1.0, 0.0);
    let tails = tail_fractions(&disp, &radii);
    ctx.check("tail_decreasing", decreasing(&tails) as u8 as f64, decreasing(&tails));
    ctx.report("stretched_exponent", stretched_exponent(&radii, &tails).unwrap_or(f64::NAN)).target(2.0);
    for (r, t) in radii.iter().zip(&tails) {
        ctx.report(&format!("tail_r{r}"), *t).target((-r * r).exp());
    }
    ctx.report("mean_displacement", mean(&disp));
    ctx.csv("matchings.csv", "window,pairs,bottleneck,margin", rows)?;
    ctx.csv(
        "tails.csv",
        "r,fraction_above,gaussian_reference",
        radii.iter().zip(&tails).map(|(r, t)| format!("{r},{t},{}", (-r * r).exp())),
    )
}
