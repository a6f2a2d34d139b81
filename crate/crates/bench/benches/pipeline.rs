use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion, Throughput};

use voxguide::pipeline::{enhance, pcm_to_f64, Modules};
use voxguide::spectral::{analyze, synthesize};
use voxguide::{decode, encode, ControllerConfig};
use voxguide_bench::{link, noisy_speech, SECONDS};

fn stft(c: &mut Criterion) {
    let x = pcm_to_f64(&noisy_speech());
    let frames = analyze(&x);
    let mut g = c.benchmark_group("stft");
    g.throughput(Throughput::Elements(x.len() as u64));
    g.bench_function("analyze", |b| b.iter(|| analyze(black_box(&x))));
    g.bench_function("synthesize", |b| b.iter(|| synthesize(black_box(&frames))));
    g.finish();
}

fn codec(c: &mut Criterion) {
    let pcm = noisy_speech();
    let (header, frames) = encode(&pcm, true);
    let mut g = c.benchmark_group("codec");
    g.throughput(Throughput::Elements(pcm.len() as u64));
    g.bench_function("encode", |b| b.iter(|| encode(black_box(&pcm), true)));
    g.bench_function("decode", |b| {
        b.iter(|| decode(black_box(&header), black_box(&frames)).unwrap())
    });
    g.finish();
}

fn enhancement(c: &mut Criterion) {
    let link = link();
    let x = pcm_to_f64(&link.decoded);
    let cfg = ControllerConfig::default();
    let mut g = c.benchmark_group(format!("enhance_{SECONDS}s"));
    for (name, modules) in [
        ("nr", Modules::NR),
        ("mdrp", Modules::MDRP),
        ("both", Modules::BOTH),
    ] {
        g.bench_function(format!("{name}_unguided"), |b| {
            b.iter(|| enhance(black_box(&x), None, modules, &cfg).unwrap())
        });
        g.bench_function(format!("{name}_guided"), |b| {
            b.iter(|| enhance(black_box(&x), Some(&link.states), modules, &cfg).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, stft, codec, enhancement);
criterion_main!(benches);
