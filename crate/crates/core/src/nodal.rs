//! Nodal sets of fields on the sphere: cube-sphere rasterization, domain and
//! component counts, length, geometric checks and the stability census.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use crate::error::{Error, Result};
use crate::randomness::GaussianStream;
use crate::sphere_waves::{geodesic, normalize, sample_sh, Basis, SphereField, Vec3};
use crate::stats::{mean, std_dev, std_error};
use crate::unionfind::UnionFind;

/// Upper limit on cells along a cube edge.
pub const MAX_CELLS_PER_EDGE: usize = 4096;

/// Default grid spacing at a face centre, in units of `1/n`.
pub const DEFAULT_SPACING: f64 = 0.05;

const CHEB_DEGREE: usize = 24;
const ZERO_JITTER: f64 = 1e-14;

const FACES: [(Vec3, Vec3, Vec3); 6] = [
    ([1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]),
    ([-1.0, 0.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, 1.0]),
    ([0.0, 1.0, 0.0], [-1.0, 0.0, 0.0], [0.0, 0.0, 1.0]),
    ([0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]),
    ([0.0, 0.0, 1.0], [0.0, 1.0, 0.0], [-1.0, 0.0, 0.0]),
    ([0.0, 0.0, -1.0], [0.0, 1.0, 0.0], [1.0, 0.0, 0.0]),
];

fn cube_point(f: usize, a: f64, b: f64) -> Vec3 {
    let (n, u, v) = FACES[f];
    normalize(std::array::from_fn(|k| n[k] + a * u[k] + b * v[k]))
}

fn cube_corner(f: usize, a: i32, b: i32) -> [i32; 3] {
    let (n, u, v) = FACES[f];
    std::array::from_fn(|k| (n[k] + a as f64 * u[k] + b as f64 * v[k]) as i32)
}

#[derive(Clone, Copy, Debug)]
struct SideLink {
    face: usize,
    side: usize,
    reversed: bool,
}

/// Equiangular cube-sphere with `m × m` cells per face. Sides are numbered
/// `i = 0`, `i = m−1`, `j = 0`, `j = m−1`.
#[derive(Clone, Debug)]
struct CubeSphere {
    m: usize,
    tans: Vec<f64>,
    vtans: Vec<f64>,
    links: [[SideLink; 4]; 6],
}

fn side_ends(s: usize) -> [(i32, i32); 2] {
    match s {
        0 => [(-1, -1), (-1, 1)],
        1 => [(1, -1), (1, 1)],
        2 => [(-1, -1), (1, -1)],
        _ => [(-1, 1), (1, 1)],
    }
}

impl CubeSphere {
    fn new(m: usize) -> Self {
        let d = FRAC_PI_2 / m as f64;
        let tans = (0..m).map(|i| (-FRAC_PI_4 + (i as f64 + 0.5) * d).tan()).collect();
        let vtans = (0..=m)
            .map(|i| match i {
                0 => -1.0,
                _ if i == m => 1.0,
                _ => (-FRAC_PI_4 + i as f64 * d).tan(),
            })
            .collect();
        let ends = |f: usize, s: usize| side_ends(s).map(|(a, b)| cube_corner(f, a, b));
        let mut links = [[SideLink {
            face: 0,
            side: 0,
            reversed: false,
        }; 4]; 6];
        for f in 0..6 {
            for s in 0..4 {
                let e = ends(f, s);
                let mut found = None;
                for g in 0..6 {
                    for t in 0..4 {
                        if g == f {
                            continue;
                        }
                        let o = ends(g, t);
                        if e == o {
                            found = Some((g, t, false));
                        } else if e[0] == o[1] && e[1] == o[0] {
                            found = Some((g, t, true));
                        }
                    }
                }
                let (g, t, reversed) = found.expect("every cube edge is shared by two faces");
                links[f][s] = SideLink {
                    face: g,
                    side: t,
                    reversed,
                };
            }
        }
        Self { m, tans, vtans, links }
    }

    fn cells(&self) -> usize {
        6 * self.m * self.m
    }

    fn cell(&self, f: usize, i: usize, j: usize) -> usize {
        (f * self.m + j) * self.m + i
    }

    fn side_cell(&self, f: usize, s: usize, t: usize) -> usize {
        let m = self.m;
        match s {
            0 => self.cell(f, 0, t),
            1 => self.cell(f, m - 1, t),
            2 => self.cell(f, t, 0),
            _ => self.cell(f, t, m - 1),
        }
    }

    fn center(&self, c: usize) -> Vec3 {
        let m = self.m;
        let (f, j, i) = (c / (m * m), (c / m) % m, c % m);
        cube_point(f, self.tans[i], self.tans[j])
    }

    fn vertex(&self, f: usize, i: usize, j: usize) -> Vec3 {
        cube_point(f, self.vtans[i], self.vtans[j])
    }

    fn side_vertex(&self, f: usize, s: usize, t: usize) -> Vec3 {
        let m = self.m;
        match s {
            0 => self.vertex(f, 0, t),
            1 => self.vertex(f, m, t),
            2 => self.vertex(f, t, 0),
            _ => self.vertex(f, t, m),
        }
    }

    /// Largest geodesic cell diagonal (attained near face centres).
    fn max_cell_diameter(&self) -> f64 {
        let m = self.m;
        let mut worst: f64 = 0.0;
        for i in 0..m {
            for j in [i, m / 2] {
                let a = geodesic(self.vertex(0, i, j), self.vertex(0, i + 1, j + 1));
                let b = geodesic(self.vertex(0, i + 1, j), self.vertex(0, i, j + 1));
                worst = worst.max(a).max(b);
            }
        }
        worst
    }

    /// Every dual cell: its grid vertex position and the surrounding cells in
    /// cyclic order (four, or three at cube corners).
    fn for_each_dual(&self, mut visit: impl FnMut(&[usize], &dyn Fn() -> Vec3)) {
        let m = self.m;
        for f in 0..6 {
            for j in 1..m {
                for i in 1..m {
                    let cells = [
                        self.cell(f, i - 1, j - 1),
                        self.cell(f, i, j - 1),
                        self.cell(f, i, j),
                        self.cell(f, i - 1, j),
                    ];
                    visit(&cells, &|| self.vertex(f, i, j));
                }
            }
        }
        for f in 0..6 {
            for s in 0..4 {
                let l = self.links[f][s];
                if (l.face, l.side) < (f, s) {
                    continue;
                }
                let map = |t: usize| if l.reversed { m - 1 - t } else { t };
                for t in 1..m {
                    let cells = [
                        self.side_cell(f, s, t - 1),
                        self.side_cell(f, s, t),
                        self.side_cell(l.face, l.side, map(t)),
                        self.side_cell(l.face, l.side, map(t - 1)),
                    ];
                    visit(&cells, &|| self.side_vertex(f, s, t));
                }
            }
        }
        let mut corners: HashMap<[i32; 3], Vec<usize>> = HashMap::new();
        for f in 0..6 {
            for (a, b) in [(-1, -1), (1, -1), (-1, 1), (1, 1)] {
                let i = if a < 0 { 0 } else { m - 1 };
                let j = if b < 0 { 0 } else { m - 1 };
                corners.entry(cube_corner(f, a, b)).or_default().push(self.cell(f, i, j));
            }
        }
        let mut keys: Vec<[i32; 3]> = corners.keys().copied().collect();
        keys.sort();
        for k in keys {
            let p = normalize(k.map(|x| x as f64));
            visit(&corners[&k], &|| p);
        }
    }

    /// Pairs of edge-adjacent cells.
    fn for_each_edge(&self, mut visit: impl FnMut(usize, usize)) {
        let m = self.m;
        for f in 0..6 {
            for j in 0..m {
                for i in 0..m {
                    let c = self.cell(f, i, j);
                    if i + 1 < m {
                        visit(c, c + 1);
                    }
                    if j + 1 < m {
                        visit(c, c + m);
                    }
                }
            }
            for s in 0..4 {
                let l = self.links[f][s];
                if (l.face, l.side) < (f, s) {
                    continue;
                }
                for t in 0..m {
                    let u = if l.reversed { m - 1 - t } else { t };
                    visit(self.side_cell(f, s, t), self.side_cell(l.face, l.side, u));
                }
            }
        }
    }
}

/// Field values (and optionally gradient norms) at cube-sphere cell centres.
pub struct SphereGrid<'a> {
    field: &'a dyn SphereField,
    geom: CubeSphere,
    pub m: usize,
    pub values: Vec<f64>,
    pub grad_norm: Option<Vec<f64>>,
    /// Largest geodesic cell diameter.
    pub h_grid: f64,
}

/// Cells per cube edge giving face-centre spacing `spacing / n`.
pub fn cells_for_degree(n: usize, spacing: f64) -> usize {
    ((FRAC_PI_2 * n.max(1) as f64 / spacing).ceil() as usize).max(2)
}

fn chebyshev_tables(xs: &[f64], d: usize) -> (Vec<f64>, Vec<f64>) {
    // T_k(x) and T_k'(x) = k U_{k−1}(x), row-major per target
    let mut t = vec![0.0; xs.len() * (d + 1)];
    let mut dt = vec![0.0; xs.len() * (d + 1)];
    for (r, &x) in xs.iter().enumerate() {
        let row = &mut t[r * (d + 1)..(r + 1) * (d + 1)];
        row[0] = 1.0;
        if d > 0 {
            row[1] = x;
        }
        for k in 2..=d {
            row[k] = 2.0 * x * row[k - 1] - row[k - 2];
        }
        let drow = &mut dt[r * (d + 1)..(r + 1) * (d + 1)];
        let (mut u0, mut u1) = (1.0, 2.0 * x);
        for k in 1..=d {
            drow[k] = k as f64 * u0;
            let u2 = 2.0 * x * u1 - u0;
            u0 = u1;
            u1 = u2;
        }
    }
    (t, dt)
}

/// Chebyshev coefficients from values at the Lobatto points `cos(πk/d)`.
fn chebyshev_coefficients(vals: &[f64], d: usize) -> Vec<f64> {
    let mut c = vec![0.0; d + 1];
    for (j, cj) in c.iter_mut().enumerate() {
        let mut s = 0.0;
        for (k, v) in vals.iter().enumerate() {
            let w = if k == 0 || k == d { 0.5 } else { 1.0 };
            s += w * v * (PI * (j * k) as f64 / d as f64).cos();
        }
        *cj = s * 2.0 / d as f64;
    }
    c[0] *= 0.5;
    c[d] *= 0.5;
    c
}

/// Samples `field` on the `m × m`-per-face cube-sphere. Values come from
/// tensor Chebyshev interpolants on patches a few wavelengths wide, exact to
/// near machine precision for band-limited fields.
pub fn rasterize<'a>(field: &'a dyn SphereField, m: usize, with_gradient: bool) -> Result<SphereGrid<'a>> {
    if m < 2 || m > MAX_CELLS_PER_EDGE {
        return Err(Error::Resource(format!(
            "{m} cells per edge outside [2, {MAX_CELLS_PER_EDGE}]"
        )));
    }
    let geom = CubeSphere::new(m);
    let d = CHEB_DEGREE;
    let band = field.band_limit() as f64;
    let p = ((band * FRAC_PI_2 / 8.0).ceil() as usize).clamp(1, m);
    let w = FRAC_PI_2 / p as f64;
    let delta = FRAC_PI_2 / m as f64;
    let mut groups: Vec<Vec<usize>> = vec![Vec::new(); p];
    for i in 0..m {
        let a = (i as f64 + 0.5) * delta;
        groups[((a / w) as usize).min(p - 1)].push(i);
    }
    let nodes: Vec<f64> = (0..=d).map(|k| (PI * k as f64 / d as f64).cos()).collect();
    let tasks: Vec<(usize, usize, usize)> = (0..6)
        .flat_map(|f| (0..p).flat_map(move |pb| (0..p).map(move |pa| (f, pa, pb))))
        .collect();
    let results: Vec<Vec<(usize, f64, f64)>> = tasks
        .par_iter()
        .map(|&(f, pa, pb)| {
            let mid = |q: usize| -FRAC_PI_4 + (q as f64 + 0.5) * w;
            let (ma, mb, half) = (mid(pa), mid(pb), 0.5 * w);
            // samples on the Chebyshev tensor grid, then 2D coefficients
            let mut vals = vec![0.0; (d + 1) * (d + 1)];
            for l in 0..=d {
                for k in 0..=d {
                    let x = cube_point(f, (ma + half * nodes[k]).tan(), (mb + half * nodes[l]).tan());
                    vals[l * (d + 1) + k] = field.value(x);
                }
            }
            let mut rows = vec![0.0; (d + 1) * (d + 1)];
            for l in 0..=d {
                let c = chebyshev_coefficients(&vals[l * (d + 1)..(l + 1) * (d + 1)], d);
                rows[l * (d + 1)..(l + 1) * (d + 1)].copy_from_slice(&c);
            }
            let mut coef = vec![0.0; (d + 1) * (d + 1)];
            for k in 0..=d {
                let col: Vec<f64> = (0..=d).map(|l| rows[l * (d + 1) + k]).collect();
                let c = chebyshev_coefficients(&col, d);
                for l in 0..=d {
                    coef[l * (d + 1) + k] = c[l];
                }
            }
            let ia = &groups[pa];
            let jb = &groups[pb];
            let xa: Vec<f64> = ia.iter().map(|&i| ((i as f64 + 0.5) * delta - FRAC_PI_4 - ma) / half).collect();
            let xb: Vec<f64> = jb.iter().map(|&j| ((j as f64 + 0.5) * delta - FRAC_PI_4 - mb) / half).collect();
            let (ta, dta) = chebyshev_tables(&xa, d);
            let (tb, dtb) = chebyshev_tables(&xb, d);
            // tmp[r][l] = Σ_k T_k(xa_r) coef[l][k]
            let contract = |t: &[f64]| {
                let mut out = vec![0.0; ia.len() * (d + 1)];
                for r in 0..ia.len() {
                    for l in 0..=d {
                        let mut s = 0.0;
                        for k in 0..=d {
                            s += t[r * (d + 1) + k] * coef[l * (d + 1) + k];
                        }
                        out[r * (d + 1) + l] = s;
                    }
                }
                out
            };
            let tmp = contract(&ta);
            let dtmp = if with_gradient { contract(&dta) } else { Vec::new() };
            let mut out = Vec::with_capacity(ia.len() * jb.len());
            for (cb, &j) in jb.iter().enumerate() {
                for (r, &i) in ia.iter().enumerate() {
                    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
                    let trow = &tb[cb * (d + 1)..(cb + 1) * (d + 1)];
                    let v = dot(&tmp[r * (d + 1)..(r + 1) * (d + 1)], trow);
                    let g = if with_gradient {
                        let fa = dot(&dtmp[r * (d + 1)..(r + 1) * (d + 1)], trow) / half;
                        let fb = dot(&tmp[r * (d + 1)..(r + 1) * (d + 1)], &dtb[cb * (d + 1)..(cb + 1) * (d + 1)]) / half;
                        surface_gradient_norm(f, geom.tans[i], geom.tans[j], fa, fb)
                    } else {
                        0.0
                    };
                    out.push((geom.cell(f, i, j), v, g));
                }
            }
            out
        })
        .collect();
    let mut values = vec![0.0; geom.cells()];
    let mut grads = if with_gradient { vec![0.0; geom.cells()] } else { Vec::new() };
    for chunk in results {
        for (c, v, g) in chunk {
            values[c] = if v == 0.0 { jitter(c) } else { v };
            if with_gradient {
                grads[c] = g;
            }
        }
    }
    Ok(SphereGrid {
        field,
        h_grid: geom.max_cell_diameter(),
        geom,
        m,
        values,
        grad_norm: with_gradient.then_some(grads),
    })
}

fn jitter(c: usize) -> f64 {
    let h = (c as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    if h >> 63 == 0 {
        ZERO_JITTER
    } else {
        -ZERO_JITTER
    }
}

/// `|∇f|` on the sphere from the chart derivatives in equiangular coordinates.
fn surface_gradient_norm(f: usize, a: f64, b: f64, fa: f64, fb: f64) -> f64 {
    let (n, u, v) = FACES[f];
    let y: Vec3 = std::array::from_fn(|k| n[k] + a * u[k] + b * v[k]);
    let r = (y[0] * y[0] + y[1] * y[1] + y[2] * y[2]).sqrt();
    let x: Vec3 = y.map(|c| c / r);
    let proj = |w: Vec3, s: f64| -> Vec3 {
        let d = x[0] * w[0] + x[1] * w[1] + x[2] * w[2];
        std::array::from_fn(|k| (w[k] - d * x[k]) * s / r)
    };
    let xa = proj(u, 1.0 + a * a);
    let xb = proj(v, 1.0 + b * b);
    let g11 = xa.iter().map(|c| c * c).sum::<f64>();
    let g22 = xb.iter().map(|c| c * c).sum::<f64>();
    let g12 = xa.iter().zip(&xb).map(|(p, q)| p * q).sum::<f64>();
    let det = g11 * g22 - g12 * g12;
    ((g22 * fa * fa - 2.0 * g12 * fa * fb + g11 * fb * fb) / det).max(0.0).sqrt()
}

/// Counts for one rasterized field.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NodalCensus {
    pub band_limit: usize,
    pub m: usize,
    pub h_grid: f64,
    pub domains: usize,
    pub components: usize,
    pub length: f64,
    pub component_diameters: Vec<f64>,
    /// Counts agree with the once-refined grid; `None` when not certified.
    pub resolved: Option<bool>,
}

impl NodalCensus {
    pub fn euler_consistent(&self) -> bool {
        self.domains == self.components + 1
    }

    pub fn csv_header() -> &'static str {
        "n,seed,domains,components,length,resolved,m"
    }

    pub fn csv_row(&self, seed: u64) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            self.band_limit,
            seed,
            self.domains,
            self.components,
            self.length,
            self.resolved.map_or("na".to_string(), |r| r.to_string()),
            self.m
        )
    }
}

/// Domain labels and nodal-line structure of `{f > t}` versus `{f ≤ t}`.
struct Picture {
    cell_uf: UnionFind,
    crossing_points: Vec<Vec3>,
    line_uf: UnionFind,
    length: f64,
}

fn analyze(g: &SphereGrid, t: f64) -> Picture {
    let geom = &g.geom;
    let above = |c: usize| g.values[c] > t;
    let mut cell_uf = UnionFind::new(geom.cells());
    geom.for_each_edge(|a, b| {
        if above(a) == above(b) {
            cell_uf.union(a, b);
        }
    });
    let ncell = geom.cells() as u64;
    let mut edge_ids: HashMap<u64, usize> = HashMap::new();
    let mut points: Vec<Vec3> = Vec::new();
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    let mut length = 0.0;
    let mut crossing = |a: usize, b: usize, points: &mut Vec<Vec3>| -> usize {
        let key = a.min(b) as u64 * ncell + a.max(b) as u64;
        *edge_ids.entry(key).or_insert_with(|| {
            let (va, vb) = (g.values[a] - t, g.values[b] - t);
            let s = va / (va - vb);
            let (pa, pb) = (geom.center(a), geom.center(b));
            points.push(normalize(std::array::from_fn(|k| pa[k] + s * (pb[k] - pa[k]))));
            points.len() - 1
        })
    };
    geom.for_each_dual(|cells, vertex| {
        let k = cells.len();
        let signs: Vec<bool> = cells.iter().map(|&c| above(c)).collect();
        let changes: Vec<usize> = (0..k).filter(|&e| signs[e] != signs[(e + 1) % k]).collect();
        if changes.is_empty() {
            return;
        }
        let edge = |e: usize, points: &mut Vec<Vec3>, cr: &mut dyn FnMut(usize, usize, &mut Vec<Vec3>) -> usize| {
            cr(cells[e], cells[(e + 1) % k], points)
        };
        let mut link = |e1: usize, e2: usize, points: &mut Vec<Vec3>, pairs: &mut Vec<(usize, usize)>, length: &mut f64| {
            let a = edge(e1, points, &mut crossing);
            let b = edge(e2, points, &mut crossing);
            *length += geodesic(points[a], points[b]);
            pairs.push((a, b));
        };
        if changes.len() == 4 {
            // checkerboard: the sign at the vertex decides which diagonal joins
            let mut v = g.field.value(vertex()) - t;
            if v == 0.0 {
                v = ZERO_JITTER;
            }
            if (v > 0.0) == signs[0] {
                cell_uf.union(cells[0], cells[2]);
                link(0, 1, &mut points, &mut pairs, &mut length);
                link(2, 3, &mut points, &mut pairs, &mut length);
            } else {
                cell_uf.union(cells[1], cells[3]);
                link(3, 0, &mut points, &mut pairs, &mut length);
                link(1, 2, &mut points, &mut pairs, &mut length);
            }
        } else {
            link(changes[0], changes[1], &mut points, &mut pairs, &mut length);
        }
    });
    let mut line_uf = UnionFind::new(points.len());
    for (a, b) in pairs {
        line_uf.union(a, b);
    }
    Picture {
        cell_uf,
        crossing_points: points,
        line_uf,
        length,
    }
}

/// Lower bound on the diameter of a point set by a double farthest-point sweep.
fn sweep_diameter(points: &[Vec3]) -> f64 {
    if points.is_empty() {
        return 0.0;
    }
    let far = |from: Vec3| {
        points
            .iter()
            .map(|p| (geodesic(from, *p), *p))
            .fold((0.0, from), |a, b| if b.0 > a.0 { b } else { a })
    };
    let (_, b) = far(points[0]);
    far(b).0
}

fn group_by_root(uf: &mut UnionFind, items: impl Iterator<Item = (usize, Vec3)>) -> Vec<Vec<Vec3>> {
    let mut index: HashMap<usize, usize> = HashMap::new();
    let mut groups: Vec<Vec<Vec3>> = Vec::new();
    for (e, p) in items {
        let r = uf.find(e);
        let k = *index.entry(r).or_insert_with(|| {
            groups.push(Vec::new());
            groups.len() - 1
        });
        groups[k].push(p);
    }
    groups
}

/// Nodal domains (same-sign cell clusters, checkerboards resolved at the
/// vertex) and nodal components (crossing points linked by marching squares),
/// counted independently.
pub fn count_nodal(g: &SphereGrid) -> NodalCensus {
    let mut pic = analyze(g, 0.0);
    let n = g.geom.cells();
    let domains = pic.cell_uf.count_roots(0..n);
    let pts = std::mem::take(&mut pic.crossing_points);
    let groups = group_by_root(&mut pic.line_uf, pts.iter().copied().enumerate());
    NodalCensus {
        band_limit: g.field.band_limit(),
        m: g.m,
        h_grid: g.h_grid,
        domains,
        components: groups.len(),
        length: pic.length,
        component_diameters: groups.iter().map(|p| sweep_diameter(p)).collect(),
        resolved: None,
    }
}

/// Census at `m` and `2m`; the finer one is returned, marked resolved when
/// both counts agree.
pub fn certified_census(field: &dyn SphereField, m: usize) -> Result<NodalCensus> {
    let coarse = count_nodal(&rasterize(field, m, false)?);
    let mut fine = count_nodal(&rasterize(field, 2 * m, false)?);
    fine.resolved = Some(coarse.domains == fine.domains && coarse.components == fine.components);
    Ok(fine)
}

/// Sparse bucket grid over unit vectors for proximity queries.
struct PointIndex {
    cell: f64,
    buckets: HashMap<(i32, i32, i32), Vec<usize>>,
    points: Vec<Vec3>,
}

impl PointIndex {
    fn new(points: Vec<Vec3>, cell: f64) -> Self {
        let mut buckets: HashMap<(i32, i32, i32), Vec<usize>> = HashMap::new();
        for (k, p) in points.iter().enumerate() {
            buckets.entry(Self::key(*p, cell)).or_default().push(k);
        }
        Self { cell, buckets, points }
    }

    fn key(p: Vec3, cell: f64) -> (i32, i32, i32) {
        (
            (p[0] / cell).floor() as i32,
            (p[1] / cell).floor() as i32,
            (p[2] / cell).floor() as i32,
        )
    }

    fn chord(a: Vec3, b: Vec3) -> f64 {
        ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
    }

    /// Geodesic distance to the nearest indexed point.
    fn nearest(&self, p: Vec3) -> f64 {
        if self.points.is_empty() {
            return f64::INFINITY;
        }
        let (ci, cj, ck) = Self::key(p, self.cell);
        let mut best = f64::INFINITY;
        let max_shell = (2.0 / self.cell).ceil() as i32 + 1;
        for s in 0..=max_shell {
            for di in -s..=s {
                for dj in -s..=s {
                    for dk in -s..=s {
                        if di.abs().max(dj.abs()).max(dk.abs()) != s {
                            continue;
                        }
                        if let Some(v) = self.buckets.get(&(ci + di, cj + dj, ck + dk)) {
                            for &q in v {
                                best = best.min(Self::chord(p, self.points[q]));
                            }
                        }
                    }
                }
            }
            if best <= s as f64 * self.cell {
                break;
            }
        }
        2.0 * (0.5 * best).min(1.0).asin()
    }

    /// Indices within geodesic distance `r`.
    fn within(&self, p: Vec3, r: f64) -> Vec<usize> {
        let chord = 2.0 * (0.5 * r).min(FRAC_PI_2).sin();
        let s = (chord / self.cell).ceil() as i32;
        let (ci, cj, ck) = Self::key(p, self.cell);
        let mut out = Vec::new();
        for di in -s..=s {
            for dj in -s..=s {
                for dk in -s..=s {
                    if let Some(v) = self.buckets.get(&(ci + di, cj + dj, ck + dk)) {
                        out.extend(v.iter().copied().filter(|&q| Self::chord(p, self.points[q]) <= chord));
                    }
                }
            }
        }
        out
    }
}

/// Net and inscribed-disk constants of a nodal picture.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GeometryReport {
    /// `n · max_x d(x, Z)` over cell centres.
    pub net_constant: f64,
    /// `n · min over domains of the largest distance to Z inside the domain`.
    pub inscribed_constant: f64,
    pub max_distance: f64,
}

pub fn geometry_checks(g: &SphereGrid) -> GeometryReport {
    let mut pic = analyze(g, 0.0);
    let n = g.field.band_limit().max(1) as f64;
    let cells = g.geom.cells();
    let index = PointIndex::new(std::mem::take(&mut pic.crossing_points), (0.5 / n).clamp(0.005, 0.25));
    let dist: Vec<f64> = (0..cells).into_par_iter().map(|c| index.nearest(g.geom.center(c))).collect();
    let mut per_domain: HashMap<usize, f64> = HashMap::new();
    for (c, d) in dist.iter().enumerate() {
        let r = pic.cell_uf.find(c);
        let e = per_domain.entry(r).or_insert(0.0);
        *e = e.max(*d);
    }
    let max_distance = dist.iter().cloned().fold(0.0, f64::max);
    let inscribed = per_domain.values().cloned().fold(f64::INFINITY, f64::min);
    GeometryReport {
        net_constant: n * max_distance,
        inscribed_constant: n * inscribed,
        max_distance,
    }
}

/// Component structure of the superlevel set `{f > t}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LevelStats {
    pub threshold: f64,
    pub components: usize,
    /// Double-sweep diameter of each component, descending.
    pub diameters: Vec<f64>,
}

impl LevelStats {
    pub fn fraction_wider_than(&self, d: f64) -> f64 {
        self.diameters.iter().filter(|x| **x > d).count() as f64 / self.diameters.len().max(1) as f64
    }
}

pub fn level_component_stats(g: &SphereGrid, t: f64) -> LevelStats {
    let mut pic = analyze(g, t);
    let cells = g.geom.cells();
    let items = (0..cells).filter(|&c| g.values[c] > t).map(|c| (c, g.geom.center(c)));
    let groups = group_by_root(&mut pic.cell_uf, items);
    let mut diameters: Vec<f64> = groups.par_iter().map(|p| sweep_diameter(p)).collect();
    diameters.sort_by(|a, b| b.total_cmp(a));
    LevelStats {
        threshold: t,
        components: groups.len(),
        diameters,
    }
}

/// Stable/unstable classification of a disk cover of radius `R/n`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StabilityCensus {
    pub n: usize,
    pub alpha: f64,
    pub radius: f64,
    pub disks: usize,
    pub unstable: usize,
    /// Largest number of `4D_j` containing a sampled point.
    pub max_multiplicity: usize,
}

impl StabilityCensus {
    pub fn exceptional(&self, delta: f64) -> bool {
        self.unstable as f64 >= delta * (self.n * self.n) as f64
    }
}

/// A disk `D_j` is stable when every sampled `x ∈ 3D_j` has `|f(x)| ≥ α` or
/// `|∇f(x)| ≥ αn`. Centres are the cells of a coarser cube-sphere whose cells
/// have circumradius at most `R/n`, so the `D_j` cover the sphere.
pub fn unstable_disk_census(g: &SphereGrid, n: usize, alpha: f64, radius: f64) -> Result<StabilityCensus> {
    let grads = g
        .grad_norm
        .as_ref()
        .ok_or_else(|| Error::Config("the census needs a grid rasterized with gradients".into()))?;
    let nf = n as f64;
    let r = radius / nf;
    let mut md = (FRAC_PI_2 / (std::f64::consts::SQRT_2 * r)).ceil() as usize;
    let centres = loop {
        let cs = CubeSphere::new(md.max(1));
        if cs.max_cell_diameter() <= 2.0 * r {
            break cs;
        }
        md += 1;
    };
    let centre_pts: Vec<Vec3> = (0..centres.cells()).map(|c| centres.center(c)).collect();
    let index = PointIndex::new(centre_pts, r.clamp(0.01, 0.5));
    let mut unstable = vec![false; centres.cells()];
    for c in 0..g.geom.cells() {
        if g.values[c].abs() < alpha && grads[c] < alpha * nf {
            for j in index.within(g.geom.center(c), 3.0 * r) {
                unstable[j] = true;
            }
        }
    }
    let stride = (g.geom.cells() / 20_000).max(1);
    let max_multiplicity = (0..g.geom.cells())
        .step_by(stride)
        .map(|c| index.within(g.geom.center(c), 4.0 * r).len())
        .max()
        .unwrap_or(0);
    Ok(StabilityCensus {
        n,
        alpha,
        radius,
        disks: centres.cells(),
        unstable: unstable.iter().filter(|u| **u).count(),
        max_multiplicity,
    })
}

/// Summary of `N(f_n)/n²` at one degree.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConcentrationRow {
    pub n: usize,
    pub trials: usize,
    pub resolved: usize,
    pub mean: f64,
    pub sd: f64,
    pub se: f64,
    /// Fraction of samples with `|N/n² − mean| > 0.1·mean`.
    pub tail_fraction: f64,
    /// Components fitting in a `ρ/n`-disk (`ρ = 3`) per disjoint `ρ/n`-disk.
    pub small_component_density: f64,
    pub courant_violations: usize,
    pub mean_length: f64,
    pub censuses: Vec<NodalCensus>,
}

pub fn concentration_experiment(n_list: &[usize], trials: usize, seed: u64, spacing: f64) -> Result<Vec<ConcentrationRow>> {
    let rho = 3.0;
    n_list
        .iter()
        .map(|&n| {
            let censuses: Vec<NodalCensus> = (0..trials)
                .map(|t| {
                    let mut s = GaussianStream::new(seed, (n as u64) << 32 | t as u64);
                    let f = sample_sh(n, Basis::Standard, &mut s)?;
                    certified_census(&f, cells_for_degree(n, spacing))
                })
                .collect::<Result<_>>()?;
            let ok: Vec<&NodalCensus> = censuses.iter().filter(|c| c.resolved == Some(true)).collect();
            let n2 = (n * n) as f64;
            let ratios: Vec<f64> = ok.iter().map(|c| c.components as f64 / n2).collect();
            let m = mean(&ratios);
            let disks = 4.0 * n2 / (rho * rho);
            let small: Vec<f64> = ok
                .iter()
                .map(|c| c.component_diameters.iter().filter(|d| **d < 2.0 * rho / n as f64).count() as f64 / disks)
                .collect();
            Ok(ConcentrationRow {
                n,
                trials,
                resolved: ok.len(),
                mean: m,
                sd: std_dev(&ratios),
                se: std_error(&ratios),
                tail_fraction: ratios.iter().filter(|r| (*r - m).abs() > 0.1 * m).count() as f64
                    / ratios.len().max(1) as f64,
                small_component_density: mean(&small),
                courant_violations: censuses.iter().filter(|c| c.components > n * n).count(),
                mean_length: mean(&ok.iter().map(|c| c.length).collect::<Vec<_>>()),
                censuses,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sphere_waves::{ConstantField, SphericalHarmonicSample};

    fn y1() -> SphericalHarmonicSample {
        // √3 cos θ in the rotated frame: a tilted great circle
        SphericalHarmonicSample::basis_element(1, 0, Basis::Rotated)
    }

    #[test]
    fn cube_sphere_topology() {
        let g = CubeSphere::new(5);
        let mut edges = 0;
        let mut deg = vec![0; g.cells()];
        g.for_each_edge(|a, b| {
            edges += 1;
            deg[a] += 1;
            deg[b] += 1;
            assert!(geodesic(g.center(a), g.center(b)) < 0.5);
        });
        assert!(deg.iter().all(|d| *d == 4));
        let (mut quads, mut tris) = (0, 0);
        g.for_each_dual(|cells, _| match cells.len() {
            4 => quads += 1,
            3 => tris += 1,
            _ => panic!(),
        });
        assert_eq!(tris, 8);
        // Euler on the dual mesh: V − E + F = 2
        assert_eq!((quads + tris) as i64 - edges as i64 + g.cells() as i64, 2);
    }

    #[test]
    fn constant_field_has_one_domain() {
        let f = ConstantField(1.0);
        let g = rasterize(&f, 8, false).unwrap();
        assert!(g.values.iter().all(|v| *v > 0.0));
        let c = count_nodal(&g);
        assert_eq!((c.domains, c.components), (1, 0));
        let l = level_component_stats(&g, -2.0);
        assert_eq!(l.components, 1);
        assert!((l.diameters[0] - PI).abs() < 0.05);
    }


    #[test]
    fn first_harmonic_is_a_great_circle() {
        let f = y1();
        let g = rasterize(&f, 64, true).unwrap();
        let c = count_nodal(&g);
        assert_eq!((c.domains, c.components), (2, 1));
        assert!(c.euler_consistent());
        assert!((c.length - 2.0 * PI).abs() < 0.005 * 2.0 * PI, "{}", c.length);
        let geo = geometry_checks(&g);
        assert!((geo.max_distance - FRAC_PI_2).abs() < 0.02, "{}", geo.max_distance);
        // |∇f| = √3 sin θ
        let grads = g.grad_norm.as_ref().unwrap();
        for c in (0..g.geom.cells()).step_by(997) {
            let x = g.geom.center(c);
            let v = g.values[c] / 3f64.sqrt();
            let expect = 3f64.sqrt() * (1.0 - v * v).max(0.0).sqrt();
            assert!((grads[c] - expect).abs() < 1e-8, "{} {expect}", grads[c]);
            assert!((g.values[c] - f.eval_unchecked(x)).abs() < 1e-12);
        }
    }

    #[test]
    fn interpolated_values_and_gradients_match_direct_evaluation() {
        let mut s = GaussianStream::new(12, 0);
        let f = sample_sh(30, Basis::Standard, &mut s).unwrap();
        let g = rasterize(&f, 150, true).unwrap();
        let grads = g.grad_norm.as_ref().unwrap();
        let mut worst: f64 = 0.0;
        for c in (0..g.geom.cells()).step_by(701) {
            let x = g.geom.center(c);
            worst = worst.max((g.values[c] - f.eval_unchecked(x)).abs());
            // finite-difference surface gradient
            let h = 1e-6;
            let mut grad2 = 0.0;
            let e = if x[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
            let t1 = normalize(crate::sphere_waves::cross(x, e));
            let t2 = crate::sphere_waves::cross(x, t1);
            for t in [t1, t2] {
                let p = normalize(std::array::from_fn(|k| x[k] + h * t[k]));
                let q = normalize(std::array::from_fn(|k| x[k] - h * t[k]));
                grad2 += ((f.eval_unchecked(p) - f.eval_unchecked(q)) / (2.0 * h)).powi(2);
            }
            assert!((grads[c] - grad2.sqrt()).abs() < 1e-5 * 30.0, "{} {}", grads[c], grad2.sqrt());
        }
        assert!(worst < 1e-10, "{worst}");
    }

    #[test]
    fn sample_censuses_are_consistent() {
        for seed in 0..3 {
            let mut s = GaussianStream::new(seed, 0);
            let n = 12;
            let f = sample_sh(n, Basis::Standard, &mut s).unwrap();
            let c = certified_census(&f, cells_for_degree(n, DEFAULT_SPACING)).unwrap();
            assert!(c.euler_consistent(), "{c:?}");
            assert!(c.components <= n * n);
            assert_eq!(c.resolved, Some(true));
            let l0 = level_component_stats(&rasterize(&f, c.m, false).unwrap(), 0.0);
            // positive domains are a subset of all domains
            assert!(l0.components < c.domains && l0.components > 0);
        }
    }

    #[test]
    fn stability_census_limits() {
        let mut s = GaussianStream::new(4, 0);
        let n = 15;
        let f = sample_sh(n, Basis::Standard, &mut s).unwrap();
        let g = rasterize(&f, cells_for_degree(n, 0.3), true).unwrap();
        let tiny = unstable_disk_census(&g, n, 1e-9, 3.0).unwrap();
        assert_eq!(tiny.unstable, 0);
        let big = unstable_disk_census(&g, n, 3.0, 3.0).unwrap();
        assert!(big.unstable as f64 > 0.95 * big.disks as f64);
        assert!(big.max_multiplicity < 60);
        let g0 = rasterize(&f, 20, false).unwrap();
        assert!(unstable_disk_census(&g0, n, 0.1, 3.0).is_err());
    }

    #[test]
    fn resource_limit() {
        let f = ConstantField(1.0);
        assert!(matches!(rasterize(&f, MAX_CELLS_PER_EDGE + 1, false), Err(Error::Resource(_))));
    }
}

