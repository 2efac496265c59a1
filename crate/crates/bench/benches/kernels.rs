use std::f64::consts::PI;

use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use msfrac_core::evolve::{Solver, SolverConfig};
use msfrac_core::fields::{random_band_limited, TorusField, TorusGrid};
use msfrac_core::fraclap::{apply_spectral, shell_cutoff_for_tolerance, FracOrder, LatticeSum};
use msfrac_core::modulus::{assemble_time_modulus, breakthrough_scan, scan_pairs};
use msfrac_core::PdeParams;

fn grid(dim: usize, n: usize) -> TorusGrid {
    TorusGrid::new(dim, 2.0 * PI, n).unwrap()
}

fn fractional_laplacian(c: &mut Criterion) {
    let mut group = c.benchmark_group("fractional_laplacian");
    for (dim, n) in [(1, 256), (2, 64)] {
        let g = grid(dim, n);
        let order = FracOrder::new(dim, 0.25).unwrap();
        let f = random_band_limited(&g, 4, 1);
        group.bench_with_input(BenchmarkId::new("spectral", format!("d{dim}_n{n}")), &f, |b, f| {
            b.iter(|| apply_spectral(black_box(f), &order).unwrap())
        });
        let shells = shell_cutoff_for_tolerance(&g, &order, 1e-4);
        let lattice = LatticeSum::new(&g, &order, shells).unwrap().with_tail_warning(1.0);
        lattice.apply(&f).unwrap();
        group.bench_with_input(BenchmarkId::new("lattice_cached", format!("d{dim}_n{n}")), &f, |b, f| {
            b.iter(|| lattice.apply(black_box(f)).unwrap())
        });
    }
    group.finish();
}

fn solver_step(c: &mut Criterion) {
    let mut group = c.benchmark_group("solver_step");
    for (dim, n) in [(1, 256), (2, 64)] {
        let params = PdeParams::new(1.0, 0.25, 2.0, 1.0, 1.0, dim).unwrap();
        let g = grid(dim, n);
        let solver = Solver::new(SolverConfig::new(params, g.clone(), 1e-3, 1.0).unwrap()).unwrap();
        let theta = TorusField::from_fn(&g, |x| x.iter().map(|v| v.sin()).sum());
        group.bench_function(format!("d{dim}_n{n}"), |b| b.iter(|| solver.step(black_box(&theta), 0.0).unwrap()));
    }
    group.finish();
}

fn modulus_scan(c: &mut Criterion) {
    let params = PdeParams::new(1.0, 0.25, 2.0, 1.0, 1.0, 1).unwrap();
    let g = grid(1, 256);
    let theta = TorusField::from_fn(&g, |x| x[0].sin());
    let tm = assemble_time_modulus(&theta, &params).unwrap();
    let pairs = scan_pairs(&theta, 10_000, 7);
    c.bench_function("breakthrough_scan_d1_n256", |b| {
        b.iter(|| breakthrough_scan(black_box(&theta), &tm, 0.5, &pairs).unwrap())
    });
}

criterion_group!(benches, fractional_laplacian, solver_step, modulus_scan);
criterion_main!(benches);
