//! The random potential `U = log|F| − |z|²/2`: gradient-flow basins, critical
//! points, lattice matchings and the transportation-distance bound.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::{HashMap, VecDeque};

use crate::error::{Error, Result};
use crate::gef::{lattice_points, sample_gef, Square, TruncatedGef};
use crate::randomness::GaussianStream;
use crate::stats::Proportion;
use crate::unionfind::UnionFind;
use crate::zeros::{find_zeros, WINDOW_SAFETY};

/// Trajectories ending this close to a zero are captured (then Newton-confirmed).
pub const CAPTURE_RADIUS: f64 = 1e-3;

/// Margin, as a fraction of the window side, excluded from per-basin statistics.
pub const BOUNDARY_MARGIN: f64 = 0.15;

const LOCAL_DEGREE: usize = 20;
const LOCAL_SPACING: f64 = 0.5;
const MAX_STEP: f64 = 0.25;
const STEP_TOL: f64 = 1e-7;
const MAX_STEPS: usize = 20_000;
const STALL_GRADIENT: f64 = 1e-9;
const STALL_KICK: f64 = 1e-6;
const MAX_KICKS: usize = 3;

/// Re-expansions `F(c + w) = e^{c̄w + |c|²/2} Ĝ_c(w)` on a lattice of centres.
/// `Ĝ_c` is again GEF-like, so a short Taylor series is accurate on each cell,
/// and `∇U = conj(Ĝ_c'/Ĝ_c) − w`, `U = log|Ĝ_c| − |w|²/2` exactly.
#[derive(Clone, Debug)]
struct LocalGrid {
    origin: Complex64,
    nx: usize,
    ny: usize,
    coeffs: Vec<[Complex64; LOCAL_DEGREE + 1]>,
}

impl LocalGrid {
    fn new(f: &TruncatedGef, region: &Square) -> Self {
        let h = LOCAL_SPACING;
        let lo = region.center - Complex64::new(region.half_side, region.half_side);
        let n = (2.0 * region.half_side / h).ceil() as usize + 1;
        let centers: Vec<Complex64> = (0..n * n)
            .map(|k| lo + Complex64::new((k % n) as f64 * h, (k / n) as f64 * h))
            .collect();
        let coeffs = centers.par_iter().map(|c| local_coefficients(f, *c)).collect();
        Self {
            origin: lo,
            nx: n,
            ny: n,
            coeffs,
        }
    }

    fn locate(&self, z: Complex64) -> Option<(usize, Complex64)> {
        let d = (z - self.origin) / LOCAL_SPACING;
        let i = d.re.round();
        let j = d.im.round();
        if i < 0.0 || j < 0.0 || i as usize >= self.nx || j as usize >= self.ny {
            return None;
        }
        let (i, j) = (i as usize, j as usize);
        let c = self.origin + Complex64::new(i as f64, j as f64) * LOCAL_SPACING;
        Some((j * self.nx + i, z - c))
    }

    /// `(Ĝ, Ĝ', Ĝ'')` at the local offset.
    fn eval(&self, k: usize, w: Complex64) -> [Complex64; 3] {
        let zero = Complex64::new(0.0, 0.0);
        let (mut p, mut dp, mut ddp) = (zero, zero, zero);
        for c in self.coeffs[k].iter().rev() {
            ddp = ddp * w + dp * 2.0;
            dp = dp * w + p;
            p = p * w + c;
        }
        [p, dp, ddp]
    }
}

/// Taylor coefficients of `Ĝ_c(w) = F(c + w) e^{−c̄w − |c|²/2}`.
fn local_coefficients(f: &TruncatedGef, c: Complex64) -> [Complex64; LOCAL_DEGREE + 1] {
    let s = f.scale();
    let u0 = c / s;
    let mut b: Vec<Complex64> = f.scaled_coeffs().to_vec();
    let n = b.len() - 1;
    // repeated synthetic division: b[k] becomes the k-th Taylor coefficient in u
    let mut taylor = [Complex64::new(0.0, 0.0); LOCAL_DEGREE + 1];
    let mut inv_s = 1.0;
    for (k, t) in taylor.iter_mut().enumerate() {
        if k > n {
            break;
        }
        for j in (k..n).rev() {
            let next = b[j + 1];
            b[j] += u0 * next;
        }
        *t = b[k] * inv_s;
        inv_s /= s;
    }
    let damp = (-0.5 * c.norm_sqr()).exp();
    let mc = -c.conj();
    let mut out = [Complex64::new(0.0, 0.0); LOCAL_DEGREE + 1];
    // e^{−c̄w} series
    let mut e = [Complex64::new(0.0, 0.0); LOCAL_DEGREE + 1];
    e[0] = Complex64::new(1.0, 0.0);
    for k in 1..=LOCAL_DEGREE {
        e[k] = e[k - 1] * mc / k as f64;
    }
    for k in 0..=LOCAL_DEGREE {
        let mut acc = Complex64::new(0.0, 0.0);
        for j in 0..=k {
            acc += taylor[j] * e[k - j];
        }
        out[k] = acc * damp;
    }
    out
}

/// Bucketed zero positions for nearest-zero queries.
#[derive(Clone, Debug)]
struct ZeroIndex {
    origin: Complex64,
    n: usize,
    cells: Vec<Vec<usize>>,
}

impl ZeroIndex {
    fn new(zeros: &[Complex64], region: &Square) -> Self {
        let origin = region.center - Complex64::new(region.half_side, region.half_side);
        let n = (2.0 * region.half_side).ceil() as usize + 1;
        let mut cells = vec![Vec::new(); n * n];
        for (k, z) in zeros.iter().enumerate() {
            if let Some(c) = Self::cell(origin, n, *z) {
                cells[c].push(k);
            }
        }
        Self { origin, n, cells }
    }

    fn cell(origin: Complex64, n: usize, z: Complex64) -> Option<usize> {
        let d = z - origin;
        if d.re < 0.0 || d.im < 0.0 {
            return None;
        }
        let (i, j) = (d.re as usize, d.im as usize);
        (i < n && j < n).then_some(j * n + i)
    }

    /// Nearest zero within the 3×3 block of buckets (distance capped at 1).
    fn nearest(&self, zeros: &[Complex64], z: Complex64) -> (Option<usize>, f64) {
        let d = z - self.origin;
        let (ci, cj) = (d.re.floor() as i64, d.im.floor() as i64);
        let mut best = (None, 1.0);
        for dj in -1..=1 {
            for di in -1..=1 {
                let (i, j) = (ci + di, cj + dj);
                if i < 0 || j < 0 || i >= self.n as i64 || j >= self.n as i64 {
                    continue;
                }
                for &k in &self.cells[j as usize * self.n + i as usize] {
                    let dist = (zeros[k] - z).norm();
                    if dist < best.1 {
                        best = (Some(k), dist);
                    }
                }
            }
        }
        best
    }
}

/// `U(z) = log|F(z)| − |z|²/2` on a window, with the zeros located once.
#[derive(Clone, Debug)]
pub struct Potential {
    f: TruncatedGef,
    pub window: Square,
    pub zeros: Vec<Complex64>,
    local: LocalGrid,
    index: ZeroIndex,
}

/// How a trajectory ended.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum FlowEnd {
    Sink(usize),
    Diverged,
    SaddleStall,
}

impl Potential {
    pub fn new(f: &TruncatedGef, window: Square) -> Result<Self> {
        let reach = window.reach();
        let search = (reach + 0.5).min(WINDOW_SAFETY * f.r_max());
        if search < reach {
            return Err(Error::Config(format!(
                "window reach {reach} exceeds the certified zero window {}",
                WINDOW_SAFETY * f.r_max()
            )));
        }
        let zs = find_zeros(f, search)?;
        let padded = Square {
            center: window.center,
            half_side: window.half_side + 1.0,
        };
        Ok(Self {
            f: f.clone(),
            window,
            local: LocalGrid::new(f, &padded),
            index: ZeroIndex::new(&zs.zeros, &padded),
            zeros: zs.zeros,
        })
    }

    pub fn function(&self) -> &TruncatedGef {
        &self.f
    }

    /// `(∇U, U)`; `∇U = conj(F'/F) − z` as a planar vector.
    pub fn grad_value(&self, z: Complex64) -> (Complex64, f64) {
        match self.local.locate(z) {
            Some((k, w)) => {
                let [g, dg, _] = self.local.eval(k, w);
                ((dg / g).conj() - w, g.norm().ln() - 0.5 * w.norm_sqr())
            }
            None => {
                let (p, dp) = self.f.eval_with_derivative(z);
                ((dp / p).conj() - z, p.norm().ln() - 0.5 * z.norm_sqr())
            }
        }
    }

    pub fn grad(&self, z: Complex64) -> Complex64 {
        self.grad_value(z).0
    }

    pub fn value(&self, z: Complex64) -> f64 {
        self.grad_value(z).1
    }

    /// `(conj ∇U, (F'/F)')`, the ingredients of Newton's method on `∇U = 0`.
    fn critical_system(&self, z: Complex64) -> (Complex64, Complex64) {
        let (r, dr) = match self.local.locate(z) {
            Some((k, w)) => {
                let [g, dg, ddg] = self.local.eval(k, w);
                let q = dg / g;
                (q + (z - w).conj(), ddg / g - q * q)
            }
            None => {
                let (p, dp, ddp) = self.f.eval_with_derivatives2(z);
                let q = dp / p;
                (q, ddp / p - q * q)
            }
        };
        (r - z.conj(), dr)
    }

    fn nearest_zero(&self, z: Complex64) -> (Option<usize>, f64) {
        self.index.nearest(&self.zeros, z)
    }

    fn confirm(&self, z: Complex64, k: usize) -> bool {
        let mut z = z;
        for _ in 0..8 {
            let (p, dp) = self.f.eval_with_derivative(z);
            if dp.norm() == 0.0 {
                return false;
            }
            z -= p / dp;
        }
        (z - self.zeros[k]).norm() < 1e-7
    }

    /// Integrates the arclength-parametrized flow `dZ/ds = ∓∇U/|∇U|`
    /// (descending for `ascend = false`). The observer sees every accepted
    /// point and may stop the integration by returning `true`.
    pub fn integrate(
        &self,
        z0: Complex64,
        ascend: bool,
        bounds: &Square,
        mut observer: impl FnMut(Complex64) -> bool,
    ) -> FlowEnd {
        let sign = if ascend { 1.0 } else { -1.0 };
        let field = |z: Complex64| {
            let g = self.grad(z);
            let n = g.norm();
            if n == 0.0 {
                Complex64::new(0.0, 0.0)
            } else {
                g * (sign / n)
            }
        };
        let mut z = z0;
        let mut h: f64 = 0.05;
        let mut kicks = 0;
        let mut rng_state = (z0.re.to_bits() ^ z0.im.to_bits().rotate_left(17)) | 1;
        for _ in 0..MAX_STEPS {
            if !bounds.contains(z) {
                return FlowEnd::Diverged;
            }
            let (near, dist) = self.nearest_zero(z);
            if !ascend {
                if let Some(k) = near {
                    if dist < CAPTURE_RADIUS {
                        return if self.confirm(z, k) {
                            FlowEnd::Sink(k)
                        } else {
                            FlowEnd::SaddleStall
                        };
                    }
                }
            }
            let (g, u0) = self.grad_value(z);
            if g.norm() < STALL_GRADIENT {
                if ascend || kicks == MAX_KICKS {
                    return FlowEnd::SaddleStall;
                }
                kicks += 1;
                rng_state = rng_state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                let theta = (rng_state >> 11) as f64 / (1u64 << 53) as f64 * std::f64::consts::TAU;
                z += Complex64::from_polar(STALL_KICK, theta);
                continue;
            }
            let hmax = MAX_STEP.min(0.5 * dist);
            h = h.min(hmax);
            let (z_new, err) = dormand_prince(&field, z, h);
            if err > STEP_TOL {
                h *= (0.9 * (STEP_TOL / err).powf(0.2)).max(0.2);
                if h < 1e-13 {
                    return FlowEnd::SaddleStall;
                }
                continue;
            }
            let u1 = self.value(z_new);
            if (u1 - u0) * sign <= 0.0 {
                h *= 0.5;
                if h < 1e-13 {
                    if ascend || kicks == MAX_KICKS {
                        return FlowEnd::SaddleStall;
                    }
                    kicks += 1;
                    z += Complex64::from_polar(STALL_KICK, (kicks as f64) * 2.3);
                    h = 1e-4;
                }
                continue;
            }
            z = z_new;
            if observer(z) {
                return FlowEnd::Diverged;
            }
            let grow = if err == 0.0 { 5.0 } else { (0.9 * (STEP_TOL / err).powf(0.2)).min(5.0) };
            h = (h * grow).min(MAX_STEP);
        }
        FlowEnd::SaddleStall
    }

    /// Descends from `z0` to a zero of `F` (or reports why not).
    pub fn flow_to_sink(&self, z0: Complex64) -> FlowEnd {
        self.integrate(z0, false, &self.window, |_| false)
    }
}

fn dormand_prince(f: &impl Fn(Complex64) -> Complex64, z: Complex64, h: f64) -> (Complex64, f64) {
    let k1 = f(z);
    let k2 = f(z + h * (k1 * (1.0 / 5.0)));
    let k3 = f(z + h * (k1 * (3.0 / 40.0) + k2 * (9.0 / 40.0)));
    let k4 = f(z + h * (k1 * (44.0 / 45.0) - k2 * (56.0 / 15.0) + k3 * (32.0 / 9.0)));
    let k5 = f(z + h
        * (k1 * (19372.0 / 6561.0) - k2 * (25360.0 / 2187.0) + k3 * (64448.0 / 6561.0)
            - k4 * (212.0 / 729.0)));
    let k6 = f(z + h
        * (k1 * (9017.0 / 3168.0) - k2 * (355.0 / 33.0)
            + k3 * (46732.0 / 5247.0)
            + k4 * (49.0 / 176.0)
            - k5 * (5103.0 / 18656.0)));
    let inc = k1 * (35.0 / 384.0) + k3 * (500.0 / 1113.0) + k4 * (125.0 / 192.0)
        - k5 * (2187.0 / 6784.0)
        + k6 * (11.0 / 84.0);
    let z5 = z + h * inc;
    let k7 = f(z5);
    let err = h
        * (k1 * (35.0 / 384.0 - 5179.0 / 57600.0)
            + k3 * (500.0 / 1113.0 - 7571.0 / 16695.0)
            + k4 * (125.0 / 192.0 - 393.0 / 640.0)
            + k5 * (-2187.0 / 6784.0 + 92097.0 / 339200.0)
            + k6 * (11.0 / 84.0 - 187.0 / 2100.0)
            + k7 * (-1.0 / 40.0));
    (z5, err.norm())
}

/// Per-cell sink labels on a square grid covering the potential's window.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BasinMap {
    pub window: Square,
    pub grid_n: usize,
    /// Zero index per cell, `-1` when the flow diverged or stalled.
    pub labels: Vec<i32>,
    pub zeros: Vec<Complex64>,
    /// Number of trajectories integrated.
    pub flows: usize,
}

pub const UNRESOLVED: i32 = -1;
const UNKNOWN: i32 = i32::MIN;

/// Basin labels by adaptive refinement: trajectories start at the corners of
/// `block`-sized blocks; blocks whose corners disagree are split.
pub fn basin_partition(p: &Potential, grid_n: usize, block: usize) -> Result<BasinMap> {
    if grid_n == 0 || block == 0 || !block.is_power_of_two() || grid_n % block != 0 {
        return Err(Error::Config(format!(
            "grid {grid_n} must be a positive multiple of the power-of-two block {block}"
        )));
    }
    let w = p.window;
    let h = w.side() / grid_n as f64;
    let lo = w.center - Complex64::new(w.half_side, w.half_side);
    let center = |i: usize, j: usize| lo + Complex64::new((i as f64 + 0.5) * h, (j as f64 + 0.5) * h);
    let label_of = |z: Complex64| match p.flow_to_sink(z) {
        FlowEnd::Sink(k) => k as i32,
        _ => UNRESOLVED,
    };
    let mut labels = vec![UNKNOWN; grid_n * grid_n];
    let clip = |i: usize| i.min(grid_n - 1);
    // coarse corners first, in parallel
    let coarse: Vec<(usize, usize)> = (0..=grid_n / block)
        .flat_map(|j| (0..=grid_n / block).map(move |i| (clip(i * block), clip(j * block))))
        .collect();
    let values: Vec<i32> = coarse.par_iter().map(|&(i, j)| label_of(center(i, j))).collect();
    let mut flows = coarse.len();
    for (&(i, j), v) in coarse.iter().zip(values) {
        labels[j * grid_n + i] = v;
    }
    let mut stack: Vec<(usize, usize, usize)> = Vec::new();
    for bj in 0..grid_n / block {
        for bi in 0..grid_n / block {
            stack.push((bi * block, bj * block, block));
        }
    }
    while let Some((i0, j0, size)) = stack.pop() {
        let corners = [
            (i0, j0),
            (clip(i0 + size), j0),
            (i0, clip(j0 + size)),
            (clip(i0 + size), clip(j0 + size)),
        ];
        let mut vals = [0i32; 4];
        for (v, &(i, j)) in vals.iter_mut().zip(&corners) {
            let idx = j * grid_n + i;
            if labels[idx] == UNKNOWN {
                labels[idx] = label_of(center(i, j));
                flows += 1;
            }
            *v = labels[idx];
        }
        if vals.iter().all(|v| *v == vals[0]) && vals[0] != UNRESOLVED {
            for j in j0..j0 + size {
                for i in i0..i0 + size {
                    labels[j * grid_n + i] = vals[0];
                }
            }
        } else if size > 1 {
            let s = size / 2;
            stack.extend([(i0, j0, s), (i0 + s, j0, s), (i0, j0 + s, s), (i0 + s, j0 + s, s)]);
        }
    }
    Ok(BasinMap {
        window: w,
        grid_n,
        labels,
        zeros: p.zeros.clone(),
        flows,
    })
}

impl BasinMap {
    pub fn cell_side(&self) -> f64 {
        self.window.side() / self.grid_n as f64
    }

    pub fn cell_center(&self, i: usize, j: usize) -> Complex64 {
        let h = self.cell_side();
        self.window.center - Complex64::new(self.window.half_side, self.window.half_side)
            + Complex64::new((i as f64 + 0.5) * h, (j as f64 + 0.5) * h)
    }

    /// Cell-count area of each zero's basin within the grid.
    pub fn areas(&self) -> Vec<f64> {
        let a = self.cell_side().powi(2);
        let mut out = vec![0.0; self.zeros.len()];
        for &l in &self.labels {
            if l >= 0 {
                out[l as usize] += a;
            }
        }
        out
    }

    /// Zero indices whose basin cells all lie inside the window shrunk by
    /// `margin` (a fraction of the side) and do not touch an unresolved cell
    /// on the grid edge.
    pub fn interior_basins(&self, margin: f64) -> Vec<usize> {
        let inner = self.window.shrink(margin * self.window.side());
        let n = self.grid_n;
        let mut ok = vec![true; self.zeros.len()];
        let mut seen = vec![false; self.zeros.len()];
        for j in 0..n {
            for i in 0..n {
                let l = self.labels[j * n + i];
                if l < 0 {
                    continue;
                }
                seen[l as usize] = true;
                let edge = i == 0 || j == 0 || i == n - 1 || j == n - 1;
                if edge || !inner.contains(self.cell_center(i, j)) {
                    ok[l as usize] = false;
                }
            }
        }
        (0..self.zeros.len()).filter(|&k| ok[k] && seen[k]).collect()
    }

    /// Number of 4-connected components of each label.
    pub fn component_counts(&self) -> Vec<usize> {
        let n = self.grid_n;
        let mut uf = UnionFind::new(n * n);
        for j in 0..n {
            for i in 0..n {
                let l = self.labels[j * n + i];
                if i + 1 < n && self.labels[j * n + i + 1] == l {
                    uf.union(j * n + i, j * n + i + 1);
                }
                if j + 1 < n && self.labels[(j + 1) * n + i] == l {
                    uf.union(j * n + i, (j + 1) * n + i);
                }
            }
        }
        let mut roots: Vec<Vec<usize>> = vec![Vec::new(); self.zeros.len()];
        for c in 0..n * n {
            let l = self.labels[c];
            if l >= 0 {
                roots[l as usize].push(uf.find(c));
            }
        }
        roots
            .into_iter()
            .map(|mut r| {
                r.sort_unstable();
                r.dedup();
                r.len()
            })
            .collect()
    }

    /// Cell index containing `z`, if inside the grid.
    pub fn cell_of(&self, z: Complex64) -> Option<usize> {
        let d = (z - self.window.center + Complex64::new(self.window.half_side, self.window.half_side))
            / self.cell_side();
        let (i, j) = (d.re.floor(), d.im.floor());
        let n = self.grid_n as f64;
        (i >= 0.0 && j >= 0.0 && i < n && j < n).then(|| j as usize * self.grid_n + i as usize)
    }

    /// Component counts after additionally joining every minor component to
    /// the cells its own trajectory passes through. Thin basin fingers
    /// narrower than a cell otherwise show up as spurious islands.
    pub fn flow_linked_component_counts(&self, p: &Potential) -> Vec<usize> {
        let n = self.grid_n;
        let mut uf = UnionFind::new(n * n);
        for j in 0..n {
            for i in 0..n {
                let l = self.labels[j * n + i];
                if i + 1 < n && self.labels[j * n + i + 1] == l {
                    uf.union(j * n + i, j * n + i + 1);
                }
                if j + 1 < n && self.labels[(j + 1) * n + i] == l {
                    uf.union(j * n + i, (j + 1) * n + i);
                }
            }
        }
        let mut reps: HashMap<usize, usize> = HashMap::new();
        for c in 0..n * n {
            if self.labels[c] >= 0 {
                reps.entry(uf.find(c)).or_insert(c);
            }
        }
        let counts = self.component_counts();
        let mut reps: Vec<usize> = reps.into_values().collect();
        reps.sort_unstable();
        for c in reps {
            let l = self.labels[c];
            if counts[l as usize] < 2 {
                continue;
            }
            let (i, j) = (c % n, c / n);
            let mut crossed = Vec::new();
            p.integrate(self.cell_center(i, j), false, &self.window, |z| {
                if let Some(k) = self.cell_of(z) {
                    if self.labels[k] == l {
                        crossed.push(k);
                    }
                }
                false
            });
            for k in crossed {
                uf.union(c, k);
            }
        }
        let mut roots: Vec<Vec<usize>> = vec![Vec::new(); self.zeros.len()];
        for c in 0..n * n {
            let l = self.labels[c];
            if l >= 0 {
                roots[l as usize].push(uf.find(c));
            }
        }
        roots
            .into_iter()
            .map(|mut r| {
                r.sort_unstable();
                r.dedup();
                r.len()
            })
            .collect()
    }

    /// Fraction of unresolved cells inside the window shrunk by `margin`.
    pub fn unresolved_fraction(&self, margin: f64) -> f64 {
        let inner = self.window.shrink(margin * self.window.side());
        let n = self.grid_n;
        let (mut bad, mut total) = (0usize, 0usize);
        for j in 0..n {
            for i in 0..n {
                if inner.contains(self.cell_center(i, j)) {
                    total += 1;
                    bad += (self.labels[j * n + i] < 0) as usize;
                }
            }
        }
        bad as f64 / total.max(1) as f64
    }

    /// Number of distinct basins sharing at least `min_edges` grid edges with
    /// each given basin. Thin sectors meeting at a local maximum touch along a
    /// few edges without sharing a gradient curve; the threshold drops them.
    pub fn neighbor_counts(&self, basins: &[usize], min_edges: usize) -> Vec<usize> {
        let n = self.grid_n;
        let keep: std::collections::HashSet<i32> = basins.iter().map(|b| *b as i32).collect();
        let mut shared: HashMap<(i32, i32), usize> = HashMap::new();
        for j in 0..n {
            for i in 0..n {
                let l = self.labels[j * n + i];
                for (a, b) in [(i + 1, j), (i, j + 1)] {
                    if a >= n || b >= n {
                        continue;
                    }
                    let m = self.labels[b * n + a];
                    if m == l || m < 0 || l < 0 || !(keep.contains(&l) || keep.contains(&m)) {
                        continue;
                    }
                    *shared.entry((l.min(m), l.max(m))).or_insert(0) += 1;
                }
            }
        }
        let mut count: HashMap<i32, usize> = HashMap::new();
        for (&(a, b), &e) in &shared {
            if e >= min_edges.max(1) {
                *count.entry(a).or_insert(0) += 1;
                *count.entry(b).or_insert(0) += 1;
            }
        }
        basins.iter().map(|b| count.get(&(*b as i32)).copied().unwrap_or(0)).collect()
    }

    /// Distances from cell centres of the given basins to their sinks.
    pub fn sink_distances(&self, basins: &[usize]) -> Vec<f64> {
        let keep: std::collections::HashSet<i32> = basins.iter().map(|b| *b as i32).collect();
        let n = self.grid_n;
        let mut out = Vec::new();
        for j in 0..n {
            for i in 0..n {
                let l = self.labels[j * n + i];
                if keep.contains(&l) {
                    out.push((self.cell_center(i, j) - self.zeros[l as usize]).norm());
                }
            }
        }
        out
    }

    /// Largest distance between two cell centres of each basin (via the
    /// distance from the sink: max over cells of pairwise is bounded by
    /// twice this, so both are reported by callers as needed).
    pub fn basin_diameters(&self, basins: &[usize]) -> Vec<f64> {
        let n = self.grid_n;
        let mut cells: HashMap<i32, Vec<Complex64>> = basins.iter().map(|b| (*b as i32, Vec::new())).collect();
        for j in 0..n {
            for i in 0..n {
                let l = self.labels[j * n + i];
                if let Some(v) = cells.get_mut(&l) {
                    // boundary cells suffice for the diameter
                    let boundary = [(1i64, 0i64), (-1, 0), (0, 1), (0, -1)].iter().any(|(di, dj)| {
                        let (a, b) = (i as i64 + di, j as i64 + dj);
                        a < 0 || b < 0 || a >= n as i64 || b >= n as i64
                            || self.labels[b as usize * n + a as usize] != l
                    });
                    if boundary {
                        v.push(self.cell_center(i, j));
                    }
                }
            }
        }
        basins
            .iter()
            .map(|b| {
                let v = &cells[&(*b as i32)];
                let mut d: f64 = 0.0;
                for x in 0..v.len() {
                    for y in 0..x {
                        d = d.max((v[x] - v[y]).norm());
                    }
                }
                d
            })
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        for j in 0..self.grid_n {
            let row: Vec<String> = (0..self.grid_n)
                .map(|i| self.labels[j * self.grid_n + i].to_string())
                .collect();
            s.push_str(&row.join(","));
            s.push('\n');
        }
        s
    }
}

/// Critical points of `U` other than the zeros of `F`.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct CriticalPoints {
    pub saddles: Vec<Complex64>,
    pub maxima: Vec<Complex64>,
    /// Cells whose discrete winding of `∇U` was nonzero.
    pub seeds: usize,
    /// Winding cells explained by a zero of `F` (a pole of `∇U`).
    pub zero_cells: usize,
    pub newton_failures: usize,
}

fn arg_step(a: Complex64, b: Complex64) -> f64 {
    (b / a).arg()
}

/// Critical points of `U` in `region`, seeded from grid cells around which
/// `∇U` winds, refined by Newton's method on `conj ∇U = F'/F − z̄ = 0`, and
/// classified by `|(F'/F)'| > 1` (saddle) versus `< 1` (local maximum).
pub fn critical_points(p: &Potential, region: &Square, grid_n: usize) -> CriticalPoints {
    let h = region.side() / grid_n as f64;
    let lo = region.center - Complex64::new(region.half_side, region.half_side);
    let node = |i: usize, j: usize| lo + Complex64::new(i as f64 * h, j as f64 * h);
    let m = grid_n + 1;
    let vals: Vec<Complex64> = (0..m * m)
        .into_par_iter()
        .map(|k| p.grad(node(k % m, k / m)))
        .collect();
    let mut seeds = Vec::new();
    let mut zero_cells = 0;
    for j in 0..grid_n {
        for i in 0..grid_n {
            let c = [vals[j * m + i], vals[j * m + i + 1], vals[(j + 1) * m + i + 1], vals[(j + 1) * m + i]];
            let wind: f64 = (0..4).map(|k| arg_step(c[k], c[(k + 1) % 4])).sum();
            if wind.abs() > std::f64::consts::PI {
                let mid = node(i, j) + Complex64::new(0.5 * h, 0.5 * h);
                let (_, dist) = p.nearest_zero(mid);
                if dist < 0.75 * h {
                    zero_cells += 1;
                } else {
                    seeds.push(mid);
                }
            }
        }
    }
    let refined: Vec<Option<(Complex64, bool)>> = seeds
        .par_iter()
        .map(|&z0| {
            let mut z = z0;
            for _ in 0..40 {
                let (hval, dh) = p.critical_system(z);
                // (F'/F)' δ − δ̄ = −H, solved in real coordinates
                let (p1, p2) = (dh.re, dh.im);
                let det = p1 * p1 + p2 * p2 - 1.0;
                if det.abs() < 1e-14 {
                    return None;
                }
                let x = (-(p1 + 1.0) * hval.re - p2 * hval.im) / det;
                let y = (p2 * hval.re - (p1 - 1.0) * hval.im) / det;
                let step = Complex64::new(x, y);
                z += step;
                if (z - z0).norm() > 4.0 * h {
                    return None;
                }
                if step.norm() < 1e-13 {
                    break;
                }
            }
            let (hval, dh) = p.critical_system(z);
            let (_, dist) = p.nearest_zero(z);
            if hval.norm() > 1e-8 || dist < 1e-6 || !region.contains(z) {
                return None;
            }
            Some((z, dh.norm() > 1.0))
        })
        .collect();
    let mut out = CriticalPoints {
        seeds: seeds.len(),
        zero_cells,
        ..Default::default()
    };
    for r in refined {
        match r {
            None => out.newton_failures += 1,
            Some((z, saddle)) => {
                let list = if saddle { &mut out.saddles } else { &mut out.maxima };
                if list.iter().all(|w| (w - z).norm() > 1e-7) {
                    list.push(z);
                }
            }
        }
    }
    out
}

/// Number of saddle points of `U` in `region`.
pub fn count_saddles(p: &Potential, region: &Square, grid_n: usize) -> usize {
    critical_points(p, region, grid_n).saddles.len()
}

/// The two sinks reached by descending from a saddle along its unstable
/// directions.
pub fn saddle_sinks(p: &Potential, saddle: Complex64) -> Option<(usize, usize)> {
    let (p0, dp, ddp) = p.function().eval_with_derivatives2(saddle);
    let q = dp / p0;
    let a = ddp / p0 - q * q; // 2·U_zz
    let dir = Complex64::from_polar(1.0, (std::f64::consts::PI - a.arg()) / 2.0);
    let ends: Vec<FlowEnd> = [1.0, -1.0]
        .iter()
        .map(|s| p.flow_to_sink(saddle + dir * (1e-5 * s)))
        .collect();
    match (ends[0], ends[1]) {
        (FlowEnd::Sink(x), FlowEnd::Sink(y)) => Some((x, y)),
        _ => None,
    }
}

/// Whether some gradient curve joins `∂Q(R)` and `∂Q(2R)` (`Q(R)` the square
/// of side `R`), probed with `seeds_per_side` trajectories per edge of
/// `∂Q(2R)`, followed both downhill and uphill.
pub fn has_long_gradient_curve(p: &Potential, r: f64, seeds_per_side: usize) -> bool {
    let outer = Square::centered(r);
    let inner = Square::centered(r / 2.0);
    let bounds = Square::centered(r * (1.0 + 1e-9));
    let mut seeds = Vec::with_capacity(4 * seeds_per_side);
    for k in 0..seeds_per_side {
        let t = -r + 2.0 * r * (k as f64 + 0.5) / seeds_per_side as f64;
        seeds.extend([
            Complex64::new(t, -r),
            Complex64::new(t, r),
            Complex64::new(-r, t),
            Complex64::new(r, t),
        ]);
    }
    let _ = outer;
    seeds.par_iter().any(|&z0| {
        [false, true].iter().any(|&ascend| {
            let mut hit = false;
            p.integrate(z0, ascend, &bounds, |z| {
                hit = inner.contains(z);
                hit
            });
            hit
        })
    })
}

pub fn long_gradient_curve_prob(
    r: f64,
    trials: usize,
    seeds_per_side: usize,
    seed: u64,
) -> Result<Proportion> {
    let window = Square::centered(r + 0.5);
    let hits = (0..trials)
        .into_par_iter()
        .map(|t| -> Result<bool> {
            let mut s = GaussianStream::new(seed, t as u64);
            let f = sample_gef((window.reach() + 0.5) / WINDOW_SAFETY, 1e-10, &mut s)?;
            let p = Potential::new(&f, window)?;
            Ok(has_long_gradient_curve(&p, r, seeds_per_side))
        })
        .collect::<Result<Vec<bool>>>()?
        .into_iter()
        .filter(|h| *h)
        .count();
    Ok(Proportion::wilson(hits as u64, trials as u64, 1.96))
}

/// A minimal-bottleneck matching of lattice points into zeros.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Matching {
    /// `(zero, lattice point)` pairs.
    pub pairs: Vec<(Complex64, Complex64)>,
    pub bottleneck: f64,
    /// The next smaller candidate radius admits no saturating matching.
    pub certified: bool,
}

impl Matching {
    pub fn displacements(&self) -> Vec<f64> {
        self.pairs.iter().map(|(a, b)| (a - b).norm()).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("zero_re,zero_im,lattice_re,lattice_im\n");
        for (a, b) in &self.pairs {
            s.push_str(&format!("{},{},{},{}\n", a.re, a.im, b.re, b.im));
        }
        s
    }
}

/// Maximum matching size via Hopcroft–Karp, left vertices `0..adj.len()`.
fn hopcroft_karp(adj: &[Vec<usize>], n_right: usize) -> (usize, Vec<Option<usize>>) {
    let n_left = adj.len();
    let mut match_l: Vec<Option<usize>> = vec![None; n_left];
    let mut match_r: Vec<Option<usize>> = vec![None; n_right];
    let mut dist = vec![0usize; n_left];
    let mut size = 0;
    loop {
        let mut queue = VecDeque::new();
        let mut found = false;
        for u in 0..n_left {
            if match_l[u].is_none() {
                dist[u] = 0;
                queue.push_back(u);
            } else {
                dist[u] = usize::MAX;
            }
        }
        while let Some(u) = queue.pop_front() {
            for &v in &adj[u] {
                match match_r[v] {
                    None => found = true,
                    Some(w) if dist[w] == usize::MAX => {
                        dist[w] = dist[u] + 1;
                        queue.push_back(w);
                    }
                    _ => {}
                }
            }
        }
        if !found {
            break;
        }
        fn dfs(
            u: usize,
            adj: &[Vec<usize>],
            dist: &mut [usize],
            match_l: &mut [Option<usize>],
            match_r: &mut [Option<usize>],
        ) -> bool {
            for &v in &adj[u] {
                let ok = match match_r[v] {
                    None => true,
                    Some(w) => dist[w] == dist[u] + 1 && dfs(w, adj, dist, match_l, match_r),
                };
                if ok {
                    match_l[u] = Some(v);
                    match_r[v] = Some(u);
                    return true;
                }
            }
            dist[u] = usize::MAX;
            false
        }
        for u in 0..n_left {
            if match_l[u].is_none() && dfs(u, adj, &mut dist, &mut match_l, &mut match_r) {
                size += 1;
            }
        }
    }
    (size, match_l)
}

/// Matches every point of `left` to a distinct point of `right`, minimizing
/// the largest distance: binary search over the sorted distance multiset with
/// Hopcroft–Karp feasibility.
pub fn bottleneck_matching(left: &[Complex64], right: &[Complex64]) -> Result<Matching> {
    if left.len() > right.len() {
        return Err(Error::Infeasible(format!(
            "{} points cannot be matched into {}",
            left.len(),
            right.len()
        )));
    }
    if left.is_empty() {
        return Ok(Matching {
            pairs: Vec::new(),
            bottleneck: 0.0,
            certified: true,
        });
    }
    let mut cands: Vec<f64> = left
        .iter()
        .flat_map(|a| right.iter().map(move |b| (a - b).norm()))
        .collect();
    cands.sort_by(f64::total_cmp);
    cands.dedup();
    let feasible = |t: f64| {
        let adj: Vec<Vec<usize>> = left
            .iter()
            .map(|a| (0..right.len()).filter(|&j| (a - right[j]).norm() <= t).collect())
            .collect();
        hopcroft_karp(&adj, right.len())
    };
    let (mut lo, mut hi) = (0usize, cands.len() - 1);
    if feasible(cands[hi]).0 < left.len() {
        return Err(Error::Infeasible("no saturating matching exists".into()));
    }
    while lo < hi {
        let mid = (lo + hi) / 2;
        if feasible(cands[mid]).0 == left.len() {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    let (_, m) = feasible(cands[lo]);
    let certified = lo == 0 || feasible(cands[lo - 1]).0 < left.len();
    let pairs = m
        .iter()
        .enumerate()
        .map(|(i, j)| (right[j.unwrap()], left[i]))
        .collect();
    Ok(Matching {
        pairs,
        bottleneck: cands[lo],
        certified,
    })
}

/// Matches the lattice points of `window` shrunk by `margin` into the zeros in
/// `window`, enlarging the margin in steps of `0.5` if infeasible.
pub fn lattice_matching(zeros: &[Complex64], window: &Square, margin: f64) -> Result<(Matching, f64)> {
    let inside: Vec<Complex64> = zeros.iter().copied().filter(|z| window.contains(*z)).collect();
    let mut m = margin;
    while m < window.half_side {
        let lattice = lattice_points(&window.shrink(m));
        match bottleneck_matching(&lattice, &inside) {
            Ok(res) if res.bottleneck <= m => return Ok((res, m)),
            Ok(_) | Err(Error::Infeasible(_)) => m += 0.5,
            Err(e) => return Err(e),
        }
    }
    Err(Error::Infeasible(format!("no matching with margin below {}", window.half_side)))
}

/// Scalar field on a regular grid: `values[j·nx + i]` at `origin + h(i + ij)`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GridField {
    pub origin: Complex64,
    pub h: f64,
    pub nx: usize,
    pub ny: usize,
    pub values: Vec<f64>,
}

/// Samples `scale · U` on an `n × n` node grid over `window`.
pub fn potential_grid(p: &Potential, window: &Square, n: usize, scale: f64) -> GridField {
    let h = window.side() / (n - 1) as f64;
    let origin = window.center - Complex64::new(window.half_side, window.half_side);
    let values = (0..n * n)
        .into_par_iter()
        .map(|k| scale * p.value(origin + Complex64::new((k % n) as f64 * h, (k / n) as f64 * h)))
        .collect();
    GridField {
        origin,
        h,
        nx: n,
        ny: n,
        values,
    }
}

/// `min_r { r + √(max |u ∗ χ_r|) }` over `radii`, with `χ_r` the normalized
/// indicator of the `r`-disk and the maximum over nodes at distance `≥ r`
/// from the grid edge.
pub fn discrepancy_bound(u: &GridField, radii: &[f64]) -> Result<f64> {
    let mut best = f64::INFINITY;
    for &r in radii {
        let k = (r / u.h).floor() as i64;
        if 2 * k as usize + 1 > u.nx.min(u.ny) {
            return Err(Error::Config(format!("radius {r} leaves no interior nodes")));
        }
        let stencil: Vec<(i64, i64)> = (-k..=k)
            .flat_map(|dj| (-k..=k).map(move |di| (di, dj)))
            .filter(|(di, dj)| (((di * di + dj * dj) as f64).sqrt() * u.h) <= r + 1e-12)
            .collect();
        let w = 1.0 / stencil.len() as f64;
        let mut worst: f64 = 0.0;
        for j in k..u.ny as i64 - k {
            for i in k..u.nx as i64 - k {
                let s: f64 = stencil
                    .iter()
                    .map(|(di, dj)| u.values[((j + dj) as usize) * u.nx + (i + di) as usize])
                    .sum();
                worst = worst.max((s * w).abs());
            }
        }
        best = best.min(r + worst.sqrt());
    }
    Ok(best)
}

/// Empirical `P{X > R}` for each `R`.
pub fn tail_fractions(samples: &[f64], radii: &[f64]) -> Vec<f64> {
    radii
        .iter()
        .map(|r| samples.iter().filter(|x| **x > *r).count() as f64 / samples.len().max(1) as f64)
        .collect()
}

/// Slope of `log(−log P)` against `log R`, the exponent `κ` in `P ≈ e^{−cR^κ}`.
pub fn stretched_exponent(radii: &[f64], tails: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = radii
        .iter()
        .zip(tails)
        .filter(|(_, p)| **p > 0.0 && **p < 1.0)
        .map(|(r, p)| (r.ln(), (-p.ln()).ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
    Some(crate::stats::linear_fit(&xs, &ys).0)
}
