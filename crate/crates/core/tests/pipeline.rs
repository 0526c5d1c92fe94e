use gaussfield::gef::sample_gef;
use gaussfield::nodal::{cells_for_degree, certified_census, DEFAULT_SPACING};
use gaussfield::percolation::{bs_statistics, Boundary};
use gaussfield::sphere_waves::{sample_sh, Basis, SphericalHarmonicSample};
use gaussfield::transport::{basin_partition, Potential, BOUNDARY_MARGIN};
use gaussfield::zeros::{count_zeros_oracle, find_zeros, WINDOW_SAFETY};
use gaussfield::{GaussianStream, Square};
use proptest::prelude::*;

#[test]
fn located_zeros_match_the_winding_count() {
    for k in 0..5 {
        let mut s = GaussianStream::new(3, k);
        let f = sample_gef(6.0, 1e-10, &mut s).unwrap();
        let zs = find_zeros(&f, 4.5).unwrap();
        for r in [1.0, 2.5, 4.0] {
            assert_eq!(zs.count_in_disk(0.0.into(), r), count_zeros_oracle(&f, r).unwrap(), "sample {k} r {r}");
        }
    }
}

#[test]
fn streams_are_reproducible() {
    let a = sample_gef(3.0, 1e-10, &mut GaussianStream::new(9, 4)).unwrap();
    let b = sample_gef(3.0, 1e-10, &mut GaussianStream::new(9, 4)).unwrap();
    let c = sample_gef(3.0, 1e-10, &mut GaussianStream::new(9, 5)).unwrap();
    assert_eq!(a.scaled_coeffs(), b.scaled_coeffs());
    assert_ne!(a.scaled_coeffs(), c.scaled_coeffs());
    let st1 = bs_statistics(&[16], Boundary::Periodic, 20, 2).unwrap();
    let st2 = bs_statistics(&[16], Boundary::Periodic, 20, 2).unwrap();
    assert_eq!(st1.sizes[0].totals, st2.sizes[0].totals);
}

#[test]
fn zonal_harmonics_have_known_nodal_sets() {
    // Y_n^0 has n latitude circles as nodal set
    for n in 1..=3 {
        let f = SphericalHarmonicSample::basis_element(n, 0, Basis::Standard);
        let c = certified_census(&f, cells_for_degree(n.max(4), DEFAULT_SPACING)).unwrap();
        assert_eq!(c.components, n, "n = {n}");
        assert_eq!(c.domains, n + 1, "n = {n}");
        assert_eq!(c.resolved, Some(true));
    }
}

#[test]
fn random_harmonic_respects_courant() {
    let n = 6;
    let f = sample_sh(n, Basis::Standard, &mut GaussianStream::new(5, 0)).unwrap();
    let c = certified_census(&f, cells_for_degree(n, DEFAULT_SPACING)).unwrap();
    assert!(c.domains >= 2 && c.domains <= n * n);
    let expected = std::f64::consts::PI * (2.0 * (n * (n + 1)) as f64).sqrt();
    assert!((c.length / expected - 1.0).abs() < 0.5);
}

#[test]
fn interior_basins_of_one_sample_have_area_pi() {
    let w = Square::centered(3.0);
    let f = sample_gef((w.reach() + 0.5) / WINDOW_SAFETY, 1e-10, &mut GaussianStream::new(21, 0)).unwrap();
    let p = Potential::new(&f, w).unwrap();
    let map = basin_partition(&p, 256, 8).unwrap();
    let areas = map.areas();
    let interior = map.interior_basins(BOUNDARY_MARGIN);
    assert!(!interior.is_empty());
    for b in interior {
        assert!((areas[b] - std::f64::consts::PI).abs() < 0.05, "basin {b}: {}", areas[b]);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn disk_counts_grow_with_radius(seed in 0u64..1000, r1 in 0.5f64..3.0, dr in 0.01f64..1.0) {
        let f = sample_gef(5.0, 1e-10, &mut GaussianStream::new(seed, 0)).unwrap();
        let zs = find_zeros(&f, 4.0).unwrap();
        prop_assert!(zs.count_in_disk(0.0.into(), r1) <= zs.count_in_disk(0.0.into(), r1 + dr));
    }
}
