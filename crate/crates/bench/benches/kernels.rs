use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use twistlab::fieldgrid::{lens_fourier, sample, GridSpec};
use twistlab::modes::ModeSpec;
use twistlab::projection::{fiber_rates, oam_overlap_amplitude, ArmCenters, FiberSpec, MomentumQuadrature, ProjectionSpec, RadialQuadrature};
use twistlab::spdc::{presets, signal_angular_spectrum, BiphotonKernel, IdlerQuadrature, KPerp};
use twistlab::specialfn::{bessel_i_scaled, bessel_j};

const UM: f64 = 1e-6;

fn special_functions(c: &mut Criterion) {
    let mut g = c.benchmark_group("specialfn");
    for order in [0, 5, 25] {
        g.bench_with_input(BenchmarkId::new("bessel_j", order), &order, |b, &n| {
            b.iter(|| (1..200).map(|i| bessel_j(n, black_box(0.37 * i as f64)).unwrap()).sum::<f64>())
        });
        g.bench_with_input(BenchmarkId::new("bessel_i_scaled", order), &order, |b, &n| {
            b.iter(|| (1..200).map(|i| bessel_i_scaled(n, black_box(0.37 * i as f64)).unwrap()).sum::<f64>())
        });
    }
    g.finish();
}

fn fields(c: &mut Criterion) {
    let mut g = c.benchmark_group("fieldgrid");
    g.sample_size(20);
    for n in [256, 1024] {
        let grid = GridSpec::new(n, 2.0 * UM).unwrap();
        let nov = ModeSpec::nov(5, 40.0 * UM).unwrap();
        let pov = ModeSpec::pov(5, 150.0 * UM, 15.0 * UM, 1e-3).unwrap();
        g.bench_with_input(BenchmarkId::new("sample_nov", n), &grid, |b, &gr| b.iter(|| sample(&nov, gr).unwrap()));
        g.bench_with_input(BenchmarkId::new("sample_pov", n), &grid, |b, &gr| b.iter(|| sample(&pov, gr).unwrap()));
        let field = sample(&nov, grid).unwrap();
        g.bench_with_input(BenchmarkId::new("lens_fourier", n), &field, |b, f| b.iter(|| lens_fourier(f, 0.5, 405e-9).unwrap()));
    }
    g.finish();
}

fn spdc(c: &mut Criterion) {
    let (crystal, wl) = presets::bbo_like();
    let pump = ModeSpec::nov(1, 150.0 * UM).unwrap();
    let kernel = BiphotonKernel::from_mode(&pump, GridSpec::new(256, 10.0 * UM).unwrap(), crystal, wl).unwrap();
    let ring = kernel.phase_matching_ring_radius();
    let mut g = c.benchmark_group("spdc");
    g.sample_size(10);
    g.bench_function("amplitude", |b| {
        b.iter(|| kernel.amplitude(black_box(KPerp::new(ring, 0.0)), black_box(KPerp::new(-ring, 1e3))).unwrap())
    });
    let signal = GridSpec::new(64, 1.5 * ring / 32.0).unwrap();
    for n in [64, 128] {
        let quad = IdlerQuadrature::covering(&kernel, n).unwrap();
        g.bench_with_input(BenchmarkId::new("signal_angular_spectrum_64", n), &quad, |b, q| {
            b.iter(|| signal_angular_spectrum(&kernel, signal, q).unwrap())
        });
    }
    g.finish();
}

fn projection(c: &mut Criterion) {
    let w = 206.0 * UM;
    let pump = ModeSpec::pov(1, 0.5 * w, 0.3 * w, 1e-3).unwrap().normalized().unwrap();
    let proj = ProjectionSpec::bg(0, w, 3.5 / w).unwrap();
    let (s, i) = (proj.with_ell(3).mode().unwrap(), proj.with_ell(-2).mode().unwrap());
    let rq = RadialQuadrature::default();
    let mut g = c.benchmark_group("projection");
    g.sample_size(20);
    g.bench_function("oam_overlap_amplitude", |b| b.iter(|| oam_overlap_amplitude(&pump, &s, &i, &rq).unwrap()));

    let (crystal, wl) = presets::ppktp_like();
    let w_o = 96.7 * UM;
    let kernel =
        BiphotonKernel::from_mode(&ModeSpec::nov(2, w_o).unwrap(), GridSpec::new(256, 20.0 * UM).unwrap(), crystal, wl).unwrap();
    let xi_i = FiberSpec::from_mfd(5.0 * UM).unwrap().through_coupler(wl.idler, 2e-3).unwrap();
    let xi_s = FiberSpec::multi_mode(w_o).unwrap();
    let q = MomentumQuadrature::auto(&kernel, &xi_s, &xi_i, 16).unwrap();
    g.bench_function("fiber_rates_16", |b| b.iter(|| fiber_rates(&kernel, &xi_s, &xi_i, ArmCenters::collinear(), &q).unwrap()));
    g.finish();
}

criterion_group!(benches, special_functions, fields, spdc, projection);
criterion_main!(benches);
