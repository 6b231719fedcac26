use criterion::{criterion_group, criterion_main, Criterion};
use hasfit::param::{subset_mobius, superset_sums};
use hasfit::{corner_params, Distribution, SampleSpace};
use std::hint::black_box;

fn transforms(c: &mut Criterion) {
    let k = 12;
    let base: Vec<f64> = (0..1u32 << k).map(|i| 1.0 + f64::from(i % 97)).collect();
    c.bench_function("superset_sums_k12", |b| {
        b.iter(|| {
            let mut a = base.clone();
            superset_sums(black_box(&mut a), k);
            a
        })
    });
    c.bench_function("subset_mobius_k12", |b| {
        b.iter(|| {
            let mut a = base.clone();
            subset_mobius(black_box(&mut a), k);
            a
        })
    });
    let ss = SampleSpace::ip(k).unwrap();
    let p = Distribution::from_weights(ss, &base[1..]).unwrap();
    c.bench_function("corner_params_k12", |b| {
        b.iter(|| corner_params(black_box(&p)).unwrap())
    });
}

criterion_group!(benches, transforms);
criterion_main!(benches);
