use criterion::{black_box, criterion_group, criterion_main, Criterion};
use gaussfield::gef::sample_gef;
use gaussfield::nodal::{cells_for_degree, count_nodal, rasterize};
use gaussfield::percolation::{count_bs_clusters, count_by_rendering, sample_bs, Boundary};
use gaussfield::sphere_waves::{sample_sh, Basis};
use gaussfield::transport::{basin_partition, Potential};
use gaussfield::zeros::{count_zeros_oracle, find_zeros};
use gaussfield::{GaussianStream, Square};

fn gef(c: &mut Criterion) {
    let mut s = GaussianStream::new(7, 0);
    c.bench_function("sample_gef r=8", |b| b.iter(|| sample_gef(black_box(8.0), 1e-12, &mut s).unwrap()));
    let f = sample_gef(10.0, 1e-12, &mut s).unwrap();
    c.bench_function("count_zeros_oracle r=8", |b| b.iter(|| count_zeros_oracle(&f, black_box(8.0)).unwrap()));
    c.bench_function("find_zeros r=8", |b| b.iter(|| find_zeros(&f, black_box(8.0)).unwrap()));
}

fn basins(c: &mut Criterion) {
    let mut s = GaussianStream::new(7, 1);
    let f = sample_gef(12.0, 1e-12, &mut s).unwrap();
    let p = Potential::new(&f, Square::centered(3.0)).unwrap();
    let mut g = c.benchmark_group("basins");
    g.sample_size(10);
    g.bench_function("basin_partition grid=256", |b| b.iter(|| basin_partition(&p, 256, 8).unwrap()));
    g.finish();
}

fn nodal(c: &mut Criterion) {
    let mut s = GaussianStream::new(7, 2);
    let f = sample_sh(20, Basis::Standard, &mut s).unwrap();
    let m = cells_for_degree(20, 0.1);
    let mut g = c.benchmark_group("nodal");
    g.sample_size(10);
    g.bench_function("rasterize n=20", |b| b.iter(|| rasterize(&f, m, false).unwrap()));
    let grid = rasterize(&f, m, false).unwrap();
    g.bench_function("count_nodal n=20", |b| b.iter(|| count_nodal(black_box(&grid))));
    g.finish();
}

fn percolation(c: &mut Criterion) {
    let mut s = GaussianStream::new(7, 3);
    let grid = sample_bs(256, Boundary::Periodic, &mut s).unwrap();
    c.bench_function("count_bs_clusters L=256", |b| b.iter(|| count_bs_clusters(black_box(&grid))));
    let small = sample_bs(64, Boundary::Free, &mut s).unwrap();
    c.bench_function("count_by_rendering L=64", |b| b.iter(|| count_by_rendering(black_box(&small))));
}

criterion_group!(benches, gef, basins, nodal, percolation);
criterion_main!(benches);
