use criterion::{criterion_group, criterion_main, Criterion, Throughput};
use tomonoise::estimators::{
    estimate_complex, estimate_mean, kernel_variance_with_error, phase_kernel_distribution,
};
use tomonoise::noise::{sweep, SweepMode};
use tomonoise::Observable;
use tomonoise_bench::coherent_dataset;

fn estimators(c: &mut Criterion) {
    let data = coherent_dataset(1_000_000);
    let mut group = c.benchmark_group("estimators");
    group.throughput(Throughput::Elements(data.n() as u64));
    group.sample_size(20);
    group.bench_function("mean_intensity", |b| {
        b.iter(|| estimate_mean(&data, &Observable::Intensity).unwrap())
    });
    group.bench_function("mean_monomial_3_3", |b| {
        b.iter(|| estimate_mean(&data, &Observable::Monomial { n: 3, m: 3 }).unwrap())
    });
    group.bench_function("complex_amplitude", |b| {
        b.iter(|| estimate_complex(&data).unwrap())
    });
    group.bench_function("variance_intensity", |b| {
        b.iter(|| kernel_variance_with_error(&data, &Observable::Intensity).unwrap())
    });
    group.bench_function("phase_histogram", |b| {
        b.iter(|| phase_kernel_distribution(&data, 64).unwrap())
    });
    group.finish();
}

fn analytic_sweep(c: &mut Criterion) {
    let grid: Vec<f64> = (0..=75).map(|k| 0.25 + 0.05 * k as f64).collect();
    c.bench_function("sweep/analytic", |b| {
        b.iter(|| {
            sweep(
                &Observable::FIELD_QUANTITIES,
                &grid,
                &[0.2, 0.6, 1.0],
                SweepMode::Analytic,
            )
            .unwrap()
        })
    });
}

criterion_group!(benches, estimators, analytic_sweep);
criterion_main!(benches);
