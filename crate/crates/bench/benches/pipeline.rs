use cospeech::metrics::{frechet_distance, FeatureGaussian};
use cospeech::train::{LossWeights, OptimizerConfig, Trainer};
use cospeech_bench::{model, samples, spec};
use criterion::{criterion_group, criterion_main, Criterion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn training(c: &mut Criterion) {
    let data = samples(8);
    let m = model(spec(8, 1, 32), &data);
    let opt = OptimizerConfig {
        batch_size: 8,
        ..OptimizerConfig::default()
    };
    let mut g = c.benchmark_group("train");
    g.sample_size(10);
    g.bench_function("epoch_8_windows_d8", |b| {
        b.iter_batched(
            || Trainer::new(m.clone(), LossWeights::default(), opt.clone(), 1).unwrap(),
            |mut t| t.run_epoch(&data).unwrap(),
            criterion::BatchSize::LargeInput,
        )
    });
    g.finish();
}

fn synthesis(c: &mut Criterion) {
    let data = samples(4);
    let mut g = c.benchmark_group("synthesize_window");
    g.sample_size(10);
    for d in [8, 32] {
        let m = model(spec(d, 1, 32), &data);
        let nets = m.networks();
        let input = m.input(&data[0], 0, vec![0.0; m.spec.plan.d_k]);
        g.bench_function(format!("d{d}"), |b| b.iter(|| m.synthesize(&nets, &input).unwrap()));
    }
    g.finish();
}

fn frechet(c: &mut Criterion) {
    let mut r = ChaCha8Rng::seed_from_u64(7);
    let features = |r: &mut ChaCha8Rng| -> Vec<Vec<f64>> {
        (0..200)
            .map(|_| (0..32).map(|_| r.random_range(-1.0..1.0)).collect())
            .collect()
    };
    let a = FeatureGaussian::fit(&features(&mut r)).unwrap();
    let b = FeatureGaussian::fit(&features(&mut r)).unwrap();
    c.bench_function("frechet_distance_32", |bench| {
        bench.iter(|| frechet_distance(&a, &b).unwrap())
    });
}

criterion_group!(benches, training, synthesis, frechet);
criterion_main!(benches);
