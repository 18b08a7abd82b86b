use std::f64::consts::PI;

use criterion::{black_box, criterion_group, criterion_main, Criterion};
use mchd_core::features::{channel_features, extract_window_features, Calibration, SignalWindow, N_FEATURES};
use mchd_core::hdcore::BundleCounter;
use mchd_core::training::MultiCentroidOptions;
use mchd_core::{classify_window, train_multicentroid, EncoderContext, GlobalLabel, Hypervector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const FS: f64 = 256.0;
const CHANNELS: usize = 18;

fn signal(n: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..CHANNELS)
        .map(|c| {
            (0..n)
                .map(|i| 30.0 * (2.0 * PI * (6.0 + c as f64) * i as f64 / FS).sin() + rng.random_range(-10.0..10.0))
                .collect()
        })
        .collect()
}

fn features(c: &mut Criterion) {
    let len = 8 * FS as usize;
    let x = signal(len, 1);
    c.bench_function("channel_features_8s", |b| {
        b.iter(|| channel_features(black_box(&x[0]), FS).unwrap())
    });
    c.bench_function("window_features_18ch_8s", |b| {
        let w = SignalWindow {
            channels: &x,
            start: 0,
            len,
            fs: FS,
        };
        b.iter(|| extract_window_features(black_box(&w), len).unwrap())
    });
}

fn encode_and_classify(c: &mut Criterion) {
    let len = 8 * FS as usize;
    let x = signal(len * 4, 2);
    let fms: Vec<_> = (0..4)
        .map(|k| {
            let w = SignalWindow {
                channels: &x,
                start: k * len,
                len,
                fs: FS,
            };
            extract_window_features(&w, len).unwrap()
        })
        .collect();
    let cal = Calibration::fit(fms.iter()).unwrap();
    let ctx = EncoderContext::generate(10240, 20, CHANNELS, N_FEATURES, 3).unwrap();
    let df = cal.discretize(&fms[0], 20);
    c.bench_function("encode_window_10240", |b| {
        let mut counter = BundleCounter::new(10240).unwrap();
        b.iter(|| ctx.encode_with(black_box(&df), &mut counter).unwrap())
    });

    let mut rng = ChaCha8Rng::seed_from_u64(4);
    // random vectors are near-orthogonal, so nearly every one founds a
    // sub-class: 64 windows give a model of about 64 prototypes
    let windows: Vec<(Hypervector, GlobalLabel)> = (0..65)
        .map(|i| {
            (
                Hypervector::random(10240, &mut rng).unwrap(),
                GlobalLabel::from_bool(i % 11 == 0),
            )
        })
        .collect();
    let stream = || windows[..64].iter().map(|(v, l)| (v, *l));
    let model = train_multicentroid(stream(), ctx.tiebreak(), MultiCentroidOptions::default()).unwrap();
    c.bench_function("classify_64_subclasses", |b| {
        b.iter(|| classify_window(&model, black_box(&windows[64].0)).unwrap())
    });
    c.bench_function("train_multicentroid_64", |b| {
        b.iter(|| train_multicentroid(stream(), ctx.tiebreak(), MultiCentroidOptions::default()).unwrap())
    });
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(20);
    targets = features, encode_and_classify
}
criterion_main!(benches);
