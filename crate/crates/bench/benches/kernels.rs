use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use lensspec::random::{random_path, trial_rng};
use lensspec::{geodesic_report, maslov_index, selector_range, LensSpace};

fn maslov(c: &mut Criterion) {
    let mut g = c.benchmark_group("maslov_index");
    for n in 1..=3 {
        let l = LensSpace::standard(3, n).unwrap();
        let p = random_path(&mut trial_rng(1, 0), &l, 4, 3.0);
        g.bench_with_input(BenchmarkId::from_parameter(n), &p, |b, p| {
            b.iter(|| maslov_index(p).unwrap())
        });
    }
    g.finish();
}

fn selectors(c: &mut Criterion) {
    let l = LensSpace::new(5, &[1, 2]).unwrap();
    let p = random_path(&mut trial_rng(2, 0), &l, 3, 3.0);
    c.bench_function("selectors_L5(1,2)", |b| b.iter(|| selector_range(&p, -3, 3).unwrap()));
}

fn geodesic(c: &mut Criterion) {
    let l = LensSpace::standard(3, 2).unwrap();
    c.bench_function("geodesic_L3(1,1)_6pi", |b| {
        b.iter(|| geodesic_report(&l, 6.0 * std::f64::consts::PI).unwrap())
    });
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(10);
    targets = maslov, selectors, geodesic
}
criterion_main!(benches);
