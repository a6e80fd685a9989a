use criterion::{black_box, criterion_group, criterion_main, Criterion};
use ldplab_core::sde::sample_terminal;
use ldplab_core::{
    simulate, ControlPath, EigenBasis, ModelParams, NoiseSpec, SpectralField, StreamKey,
};

fn basis_build(c: &mut Criterion) {
    c.bench_function("basis_build_k32", |b| {
        b.iter(|| EigenBasis::build(black_box(32), 128).unwrap())
    });
}

fn rng(c: &mut Criterion) {
    let key = StreamKey::new(1, 0);
    c.bench_function("brownian_increments_512", |b| {
        b.iter(|| key.brownian_increments(black_box(3), 512, 1.0))
    });
}

fn integrate(c: &mut Criterion) {
    let basis = EigenBasis::build(32, 128).unwrap();
    let noise = NoiseSpec::canonical(&basis, 2.0, 0.01).unwrap();
    let chi = SpectralField::unit(32, 1).unwrap();
    let params = ModelParams::ns(0.05, 1.0, 512);
    let zero = ControlPath::zero(32, 512, 1.0);
    c.bench_function("simulate_ns_k32_512", |b| {
        let mut r = 0;
        b.iter(|| {
            r += 1;
            simulate(&basis, &params, &chi, &noise, &zero, StreamKey::new(7, r)).unwrap()
        })
    });
    let single = ModelParams::sg(0.05, 0.025, 1.0, 512);
    c.bench_function("terminal_sg_k32_512", |b| {
        let mut r = 0;
        b.iter(|| {
            r += 1;
            sample_terminal(
                &basis,
                &single,
                &chi,
                &noise,
                None,
                None,
                StreamKey::new(7, r),
            )
            .unwrap()
        })
    });
}

criterion_group!(benches, basis_build, rng, integrate);
criterion_main!(benches);
