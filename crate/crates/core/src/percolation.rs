//! The avoided-crossing lattice model: an `L × L` grid of nodal-line
//! crossings, each resolved one of two ways by a fair coin.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::randomness::GaussianStream;
use crate::stats::{mean, normality_diagnostics, std_error, variance, variance_std_error, NormalityReport};
use crate::unionfind::UnionFind;

/// How the window edge is treated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Boundary {
    /// `(L+1)²` cells surround the `L²` sites; nothing wraps.
    Free,
    /// `L²` cells on a torus, `L` even so the checkerboard closes up.
    Periodic,
}

/// Site states of the crossing grid. Cells are checkerboard-coloured, blue
/// where `a + b` is even. At site `(i, j)` the crossing opens between the two
/// blue diagonal cells when the state is `true`, otherwise between the two
/// red ones.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrossingGrid {
    pub l: usize,
    pub boundary: Boundary,
    pub states: Vec<bool>,
}

fn check_size(l: usize, boundary: Boundary) -> Result<()> {
    match boundary {
        Boundary::Free if l == 0 => Err(Error::Config("the grid needs at least one site".into())),
        Boundary::Periodic if l < 2 || l % 2 == 1 => {
            Err(Error::Config(format!("a periodic grid needs an even L ≥ 2, got {l}")))
        }
        _ => Ok(()),
    }
}

pub fn sample_bs(l: usize, boundary: Boundary, stream: &mut GaussianStream) -> Result<CrossingGrid> {
    check_size(l, boundary)?;
    Ok(CrossingGrid {
        l,
        boundary,
        states: (0..l * l).map(|_| stream.coin()).collect(),
    })
}

impl CrossingGrid {
    pub fn uniform(l: usize, state: bool) -> Self {
        Self {
            l,
            boundary: Boundary::Free,
            states: vec![state; l * l],
        }
    }

    /// Configuration number `code` in binary, site `k` taking bit `k`.
    pub fn from_code(l: usize, boundary: Boundary, code: u64) -> Self {
        Self {
            l,
            boundary,
            states: (0..l * l).map(|k| code >> k & 1 == 1).collect(),
        }
    }

    fn side(&self) -> usize {
        match self.boundary {
            Boundary::Free => self.l + 1,
            Boundary::Periodic => self.l,
        }
    }

    fn cell(&self, a: usize, b: usize) -> usize {
        let s = self.side();
        (b % s) * s + a % s
    }

    pub fn is_blue(&self, c: usize) -> bool {
        let s = self.side();
        (c % s + c / s) % 2 == 0
    }

    /// The two diagonal pairs at site `(i, j)`: `(blue pair, red pair)`.
    fn pairs(&self, i: usize, j: usize) -> ((usize, usize), (usize, usize)) {
        let main = (self.cell(i, j), self.cell(i + 1, j + 1));
        let anti = (self.cell(i + 1, j), self.cell(i, j + 1));
        if (i + j) % 2 == 0 {
            (main, anti)
        } else {
            (anti, main)
        }
    }

    /// Open bonds of the blue graph (`true`) or the red graph.
    pub fn bonds(&self, blue: bool) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for j in 0..self.l {
            for i in 0..self.l {
                let (b, r) = self.pairs(i, j);
                let state = self.states[j * self.l + i];
                if state == blue {
                    out.push(if blue { b } else { r });
                }
            }
        }
        out
    }

    pub fn is_boundary(&self, c: usize) -> bool {
        if self.boundary == Boundary::Periodic {
            return false;
        }
        let s = self.side();
        let (a, b) = (c % s, c / s);
        a == 0 || b == 0 || a == self.l || b == self.l
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterCounts {
    pub blue: usize,
    pub red: usize,
    pub total_domains: usize,
}

fn clusters(g: &CrossingGrid, blue: bool) -> (UnionFind, usize) {
    let n = g.side() * g.side();
    let mut uf = UnionFind::new(n);
    for (a, b) in g.bonds(blue) {
        uf.union(a, b);
    }
    let count = {
        let members: Vec<usize> = (0..n).filter(|&c| g.is_blue(c) == blue).collect();
        uf.count_roots(members.into_iter())
    };
    (uf, count)
}

/// Blue and red clusters by union-find on each bond graph.
pub fn count_bs_clusters(g: &CrossingGrid) -> ClusterCounts {
    let blue = clusters(g, true).1;
    let red = clusters(g, false).1;
    ClusterCounts {
        blue,
        red,
        total_domains: blue + red,
    }
}

/// Planar bookkeeping of one colour: independent cycles `E − V + C` of its
/// bond graph, and the number of clusters of the other colour that avoid the
/// boundary (each is enclosed by exactly one independent cycle). Free
/// boundary only; the torus has non-contractible cycles.
pub fn cycle_balance(g: &CrossingGrid, blue: bool) -> Result<(usize, usize)> {
    if g.boundary != Boundary::Free {
        return Err(Error::Config("the cycle balance needs a free boundary".into()));
    }
    let n = g.side() * g.side();
    let v = (0..n).filter(|&c| g.is_blue(c) == blue).count();
    let e = g.bonds(blue).len();
    let (_, c) = clusters(g, blue);
    let (mut other, _) = clusters(g, !blue);
    let mut touches = vec![false; n];
    for cell in 0..n {
        if g.is_blue(cell) != blue && g.is_boundary(cell) {
            touches[other.find(cell)] = true;
        }
    }
    let mut roots: Vec<usize> = (0..n)
        .filter(|&cell| g.is_blue(cell) != blue)
        .map(|cell| other.find(cell))
        .filter(|r| !touches[*r])
        .collect();
    roots.sort_unstable();
    roots.dedup();
    Ok((e + c - v, roots.len()))
}

/// Domain count from a rendered picture: each cell becomes a 3×3 pixel block,
/// an open crossing recolours one corner pixel of the closed pair so that the
/// open pair touches, and 4-connected regions are flood-filled (wrapping on
/// the torus).
pub fn count_by_rendering(g: &CrossingGrid) -> usize {
    let w = 3 * g.side();
    let wrap = g.boundary == Boundary::Periodic;
    let mut px = vec![false; w * w];
    for y in 0..w {
        for x in 0..w {
            px[y * w + x] = (x / 3 + y / 3) % 2 == 0;
        }
    }
    for j in 0..g.l {
        for i in 0..g.l {
            let blue_main = (i + j) % 2 == 0;
            let open_blue = g.states[j * g.l + i];
            // open pair on the main diagonal ⇒ recolour the (i+1, j) corner
            let main_open = open_blue == blue_main;
            let (x, y) = if main_open { (3 * i + 3, 3 * j + 2) } else { (3 * i + 2, 3 * j + 2) };
            let (x, y) = (x % w, y % w);
            px[y * w + x] = !px[y * w + x];
        }
    }
    let mut seen = vec![false; w * w];
    let mut regions = 0;
    for start in 0..w * w {
        if seen[start] {
            continue;
        }
        regions += 1;
        seen[start] = true;
        let mut queue = VecDeque::from([start]);
        while let Some(p) = queue.pop_front() {
            let (x, y) = (p % w, p / w);
            let mut nb = Vec::with_capacity(4);
            if x > 0 || wrap {
                nb.push(y * w + (x + w - 1) % w);
            }
            if x + 1 < w || wrap {
                nb.push(y * w + (x + 1) % w);
            }
            if y > 0 || wrap {
                nb.push((y + w - 1) % w * w + x);
            }
            if y + 1 < w || wrap {
                nb.push((y + 1) % w * w + x);
            }
            for q in nb {
                if !seen[q] && px[q] == px[p] {
                    seen[q] = true;
                    queue.push_back(q);
                }
            }
        }
    }
    regions
}

/// `(total_domains, multiplicity)` over all `2^{L²}` configurations.
pub fn enumerate_totals(
    l: usize,
    boundary: Boundary,
    counter: impl Fn(&CrossingGrid) -> usize,
) -> Result<Vec<(usize, u64)>> {
    check_size(l, boundary)?;
    if l * l > 20 {
        return Err(Error::Resource(format!("2^{} configurations", l * l)));
    }
    let mut hist = std::collections::BTreeMap::new();
    for code in 0..1u64 << (l * l) {
        *hist.entry(counter(&CrossingGrid::from_code(l, boundary, code))).or_insert(0u64) += 1;
    }
    Ok(hist.into_iter().collect())
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SizeStats {
    pub l: usize,
    pub trials: usize,
    /// `mean(total) / L²` and its standard error.
    pub a_hat: f64,
    pub a_se: f64,
    /// `var(total) / L²` and its standard error.
    pub b_hat: f64,
    pub b_se: f64,
    /// Fraction of open blue bonds over all trials.
    pub blue_fraction: f64,
    pub totals: Vec<usize>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BSStats {
    pub sizes: Vec<SizeStats>,
    /// Diagnostics of the counts at the largest `L`, when it has at least
    /// 1000 trials.
    pub normality: Option<NormalityReport>,
}

pub fn bs_statistics(l_list: &[usize], boundary: Boundary, trials: usize, seed: u64) -> Result<BSStats> {
    if trials < 2 || l_list.is_empty() {
        return Err(Error::Config("need at least one size and two trials".into()));
    }
    let sizes: Vec<SizeStats> = l_list
        .iter()
        .map(|&l| -> Result<SizeStats> {
            let runs: Vec<(usize, usize)> = (0..trials)
                .into_par_iter()
                .map(|t| {
                    let mut s = GaussianStream::new(seed, (l as u64) << 32 | t as u64);
                    let g = sample_bs(l, boundary, &mut s)?;
                    let open = g.states.iter().filter(|x| **x).count();
                    Ok((count_bs_clusters(&g).total_domains, open))
                })
                .collect::<Result<_>>()?;
            let totals: Vec<usize> = runs.iter().map(|r| r.0).collect();
            let xs: Vec<f64> = totals.iter().map(|t| *t as f64).collect();
            let sites = (l * l) as f64;
            Ok(SizeStats {
                l,
                trials,
                a_hat: mean(&xs) / sites,
                a_se: std_error(&xs) / sites,
                b_hat: variance(&xs) / sites,
                b_se: variance_std_error(&xs) / sites,
                blue_fraction: runs.iter().map(|r| r.1).sum::<usize>() as f64 / (sites * trials as f64),
                totals,
            })
        })
        .collect::<Result<_>>()?;
    let last = sizes.last().unwrap();
    let xs: Vec<f64> = last.totals.iter().map(|t| *t as f64).collect();
    let normality = if xs.len() >= 1000 {
        Some(normality_diagnostics(&xs, 200, seed ^ 0x5eed)?)
    } else {
        None
    };
    Ok(BSStats { sizes, normality })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn single_site() {
        for state in [false, true] {
            let g = CrossingGrid::uniform(1, state);
            let c = count_bs_clusters(&g);
            // two cells of one colour join, the other two stay apart
            assert_eq!(c.total_domains, 3);
            assert_eq!(count_by_rendering(&g), 3);
            assert_eq!(if state { (c.blue, c.red) } else { (c.red, c.blue) }, (1, 2));
        }
    }

    #[test]
    fn forced_three_by_three() {
        // all blue crossings open: the blue cells form one diagonal mesh
        let g = CrossingGrid::uniform(3, true);
        let c = count_bs_clusters(&g);
        assert_eq!(c.blue, 1);
        assert_eq!(c.red, 8);
        assert_eq!(count_by_rendering(&g), 9);
        let r = count_bs_clusters(&CrossingGrid::uniform(3, false));
        assert_eq!((r.blue, r.red), (8, 1));
    }

    #[test]
    fn exhaustive_agreement_of_both_routes() {
        for l in 1..=3 {
            let a = enumerate_totals(l, Boundary::Free, |g| count_bs_clusters(g).total_domains).unwrap();
            let b = enumerate_totals(l, Boundary::Free, count_by_rendering).unwrap();
            assert_eq!(a, b, "L = {l}");
        }
        let two = enumerate_totals(2, Boundary::Free, |g| count_bs_clusters(g).total_domains).unwrap();
        assert_eq!(two.iter().map(|x| x.1).sum::<u64>(), 16);
        for l in [2, 4] {
            let a = enumerate_totals(l, Boundary::Periodic, |g| count_bs_clusters(g).total_domains).unwrap();
            let b = enumerate_totals(l, Boundary::Periodic, count_by_rendering).unwrap();
            assert_eq!(a, b, "torus L = {l}");
        }
    }

    #[test]
    fn torus_two_by_two() {
        // all blue open: the two blue cells join through both blue pairs
        let mut g = CrossingGrid::uniform(2, true);
        g.boundary = Boundary::Periodic;
        let c = count_bs_clusters(&g);
        assert_eq!((c.blue, c.red), (1, 2));
        assert!(cycle_balance(&g, true).is_err());
        assert!(sample_bs(3, Boundary::Periodic, &mut GaussianStream::new(0, 0)).is_err());
    }

    #[test]
    fn cycle_balance_holds_exhaustively() {
        for l in 1..=4 {
            for code in 0..1u64 << (l * l) {
                let g = CrossingGrid::from_code(l, Boundary::Free, code);
                for blue in [true, false] {
                    let (cycles, enclosed) = cycle_balance(&g, blue).unwrap();
                    assert_eq!(cycles, enclosed, "L={l} code={code} blue={blue}");
                }
            }
        }
    }

    #[test]
    fn fair_coin_and_stability() {
        let st = bs_statistics(&[64], Boundary::Free, 200, 11).unwrap();
        let s = &st.sizes[0];
        let tol = 4.0 / ((64 * 64 * 200) as f64).sqrt();
        assert!((s.blue_fraction - 0.5).abs() < tol);
        assert!(s.a_hat > 0.0 && s.b_hat > 0.0);
        assert!(s.a_se < 0.01 * s.a_hat);
        assert!(st.normality.is_none());
        assert!(sample_bs(0, Boundary::Free, &mut GaussianStream::new(0, 0)).is_err());
        assert!(enumerate_totals(5, Boundary::Free, count_by_rendering).is_err());
    }

    proptest! {
        #[test]
        fn bonds_are_complementary(code in 0u64..(1 << 16), torus in any::<bool>()) {
            let b = if torus { Boundary::Periodic } else { Boundary::Free };
            let g = CrossingGrid::from_code(4, b, code);
            prop_assert_eq!(g.bonds(true).len() + g.bonds(false).len(), 16);
            prop_assert_eq!(count_bs_clusters(&g).total_domains, count_by_rendering(&g));
        }
    }
}
