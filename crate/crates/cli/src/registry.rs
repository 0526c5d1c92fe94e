//! The experiment table. Each entry maps onto one acceptance criterion.

use crate::error::HResult;
use crate::experiments::{bs, kpoint, sphere, transport, zeros};
use crate::record::Ctx;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Runtime {
    /// Under a minute.
    Seconds,
    /// A few minutes.
    Minutes,
    /// Ten minutes or more.
    Long,
}

impl Runtime {
    pub fn label(&self) -> &'static str {
        match self {
            Runtime::Seconds => "seconds",
            Runtime::Minutes => "minutes",
            Runtime::Long => "long",
        }
    }
}

pub struct Param {
    pub key: &'static str,
    pub default: &'static str,
    pub doc: &'static str,
}

const fn p(key: &'static str, default: &'static str, doc: &'static str) -> Param {
    Param { key, default, doc }
}

pub struct Experiment {
    pub name: &'static str,
    pub criterion: u8,
    pub anchor: &'static str,
    pub runtime: Runtime,
    pub params: &'static [Param],
    pub run: fn(&mut Ctx) -> HResult<()>,
}

static REGISTRY: &[Experiment] = &[
    Experiment {
        name: "mean_count",
        criterion: 1,
        anchor: "E n(r) = r²",
        runtime: Runtime::Seconds,
        params: &[p("r", "4", "disk radius"), p("trials", "2000", "GEF samples")],
        run: zeros::mean_count,
    },
    Experiment {
        name: "variance_formula",
        criterion: 2,
        anchor: "Var n(r,h) equals its spectral integral",
        runtime: Runtime::Minutes,
        params: &[
            p("radii", "2,4,8", "dilations r"),
            p("sigma", "0.2", "width of the Gaussian bump h"),
            p("trials", "2000", "GEF samples"),
        ],
        run: zeros::variance_formula,
    },
    Experiment {
        name: "smooth_asymptotics",
        criterion: 3,
        anchor: "r² Var n(r,h) → ζ(3)/(16π) ‖Δh‖²",
        runtime: Runtime::Seconds,
        params: &[
            p("r", "16", "dilation where the limit is checked"),
            p("h", "smooth", "test function: smooth or bump"),
            p("sigma", "0.3", "bump width when h = bump"),
        ],
        run: zeros::smooth_asymptotics,
    },
    Experiment {
        name: "boundary_asymptotics",
        criterion: 4,
        anchor: "Var n(r)/r → ζ(3/2)/(4√π)",
        runtime: Runtime::Seconds,
        params: &[p("r", "16", "disk radius where the limit is checked")],
        run: zeros::boundary_asymptotics,
    },
    Experiment {
        name: "clt",
        criterion: 5,
        anchor: "standardized n(rE) → N(0,1), E the unit square",
        runtime: Runtime::Minutes,
        params: &[p("r", "6", "disk radius"), p("trials", "10000", "GEF samples")],
        run: zeros::clt,
    },
    Experiment {
        name: "jlm_moderate",
        criterion: 6,
        anchor: "P{|n(r) − r²| > r^α} = exp(−r^φ(α))",
        runtime: Runtime::Minutes,
        params: &[
            p("radii", "4,6,8", "disk radii"),
            p("alpha", "0.6", "deviation exponent α"),
            p("trials", "10000", "GEF samples per radius"),
        ],
        run: zeros::jlm_moderate,
    },
    Experiment {
        name: "hole_probability",
        criterion: 7,
        anchor: "hole probability exp(−(3e²/4) r⁴)",
        runtime: Runtime::Minutes,
        params: &[p("radii", "0.25,0.5,0.75,1", "disk radii"), p("trials", "20000", "GEF samples")],
        run: zeros::hole_probability,
    },
    Experiment {
        name: "kpoint_functions",
        criterion: 8,
        anchor: "ρ_k repulsion |z₁−z₂|² and fast clustering",
        runtime: Runtime::Minutes,
        params: &[p("trials", "100000", "GEF samples per empirical configuration")],
        run: kpoint::kpoint_functions,
    },
    Experiment {
        name: "basin_areas",
        criterion: 9,
        anchor: "all bounded basins have area π",
        runtime: Runtime::Long,
        params: &[
            p("samples", "100", "GEF samples"),
            p("half_side", "5", "half side of the square window"),
            p("grid", "1024", "cells per window side"),
            p("block", "8", "quadtree block size"),
        ],
        run: transport::basin_areas,
    },
    Experiment {
        name: "saddle_density",
        criterion: 10,
        anchor: "saddle density 4/(3π)",
        runtime: Runtime::Minutes,
        params: &[
            p("samples", "100", "GEF samples"),
            p("half_side", "5", "half side of the square window"),
            p("grid", "400", "seeding cells per window side"),
        ],
        run: transport::saddle_density,
    },
    Experiment {
        name: "matching_tails",
        criterion: 11,
        anchor: "lattice matching with Gaussian-type tails",
        runtime: Runtime::Minutes,
        params: &[
            p("windows", "200", "GEF samples"),
            p("half_side", "6", "half side of the square window"),
            p("margin", "1.5", "initial trimming margin"),
            p("radii", "1,1.5,2", "displacement thresholds R"),
        ],
        run: transport::matching_tails,
    },
    Experiment {
        name: "sphere_covariance",
        criterion: 12,
        anchor: "E f(x)f(y) = P_n(cos Θ)",
        runtime: Runtime::Seconds,
        params: &[
            p("n", "20", "degree"),
            p("theta", "1.0471975511965976", "angle between the two points"),
            p("trials", "10000", "samples"),
        ],
        run: sphere::sphere_covariance,
    },
    Experiment {
        name: "scaling_limit",
        criterion: 13,
        anchor: "P_n(cos(|u−v|/n)) → J₀(|u−v|)",
        runtime: Runtime::Seconds,
        params: &[
            p("n", "100", "degree"),
            p("max_dist", "5", "largest |u − v|"),
            p("step", "0.5", "spacing of the evaluation grid"),
        ],
        run: sphere::scaling_limit,
    },
    Experiment {
        name: "nodal_length",
        criterion: 14,
        anchor: "E L(f_n) = π√(2λ_n)",
        runtime: Runtime::Long,
        params: &[
            p("n", "40", "degree"),
            p("samples", "200", "samples"),
            p("spacing", "0.1", "grid spacing in units of 1/n"),
        ],
        run: sphere::nodal_length,
    },
    Experiment {
        name: "courant",
        criterion: 15,
        anchor: "N(g) ≤ n²",
        runtime: Runtime::Minutes,
        params: &[
            p("n_list", "5,10,20", "degrees"),
            p("samples", "40", "certified samples per degree"),
            p("spacing", "0.05", "grid spacing in units of 1/n"),
        ],
        run: sphere::courant,
    },
    Experiment {
        name: "nodal_concentration",
        criterion: 16,
        anchor: "N(f_n)/n² concentrates at a > 0",
        runtime: Runtime::Long,
        params: &[
            p("n_list", "20,30,40", "degrees"),
            p("trials", "100", "certified samples per degree"),
            p("spacing", "0.05", "grid spacing in units of 1/n"),
        ],
        run: sphere::nodal_concentration,
    },
    Experiment {
        name: "unstable_census",
        criterion: 17,
        anchor: "unstable disks occupy a vanishing fraction",
        runtime: Runtime::Long,
        params: &[
            p("n_list", "20,30,40", "degrees"),
            p("trials", "100", "samples per degree"),
            p("alpha", "0.1", "stability threshold α"),
            p("alpha_small", "0.01", "smaller α reported alongside"),
            p("radius", "2", "disk radius R in units of 1/n"),
            p("delta", "0.05", "exceptional fraction δ of n²"),
            p("spacing", "0.1", "grid spacing in units of 1/n"),
        ],
        run: sphere::unstable_census,
    },
    Experiment {
        name: "bs_percolation",
        criterion: 18,
        anchor: "avoided-crossing bond percolation model",
        runtime: Runtime::Minutes,
        params: &[
            p("l_pair", "128,256", "two lattice sizes compared for stability"),
            p("trials", "200", "samples per size for the stability check"),
            p("normality_trials", "10000", "samples at the larger size for normality"),
            p("boundary", "periodic", "periodic or free"),
            p("nodal_means", "", "n:mean pairs of N/n² from nodal_concentration"),
            p("nodal_trials", "30", "samples for a fallback N/n² estimate at n = 20"),
        ],
        run: bs::bs_percolation,
    },
    Experiment {
        name: "length_variance",
        criterion: 19,
        anchor: "Var L(f_n) = (65/32) log n + O(1)",
        runtime: Runtime::Long,
        params: &[
            p("n_list", "20,40,80", "degrees"),
            p("samples", "100", "samples per degree"),
            p("spacing", "0.1", "grid spacing in units of 1/n"),
        ],
        run: sphere::length_variance,
    },
];

/// All experiments, sorted by name.
pub fn experiments() -> Vec<&'static Experiment> {
    let mut v: Vec<&Experiment> = REGISTRY.iter().collect();
    v.sort_by_key(|e| e.name);
    v
}

pub fn find(name: &str) -> Option<&'static Experiment> {
    REGISTRY.iter().find(|e| e.name == name)
}

pub fn by_criterion(c: u8) -> Option<&'static Experiment> {
    REGISTRY.iter().find(|e| e.criterion == c)
}

/// The `list` table: name, criterion, anchor, runtime class.
pub fn list_table() -> String {
    let rows = experiments();
    let w = rows.iter().map(|e| e.name.len()).max().unwrap_or(4);
    let mut s = format!("{:<w$}  crit  {:<8}  anchor\n", "name", "runtime");
    for e in rows {
        s.push_str(&format!("{:<w$}  {:>4}  {:<8}  {}\n", e.name, e.criterion, e.runtime.label(), e.anchor));
    }
    s
}

/// Keys, defaults and descriptions of one experiment.
pub fn describe(e: &Experiment) -> String {
    let mut s = format!("{} (criterion {}): {}\n", e.name, e.criterion, e.anchor);
    for p in e.params {
        s.push_str(&format!("  {} = {:<12} {}\n", p.key, p.default, p.doc));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_experiment_per_criterion() {
        for c in 1..=19u8 {
            assert_eq!(REGISTRY.iter().filter(|e| e.criterion == c).count(), 1, "criterion {c}");
        }
        let names = experiments();
        assert!(names.windows(2).all(|w| w[0].name < w[1].name));
    }
}
