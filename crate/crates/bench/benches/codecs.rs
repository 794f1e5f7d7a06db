use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use qnn_bench::{graph, layer};
use qnn_codec::infer::{dense_layer, infer_layer};
use qnn_codec::plbg::{plbg_decode, plbg_encode};
use qnn_codec::ubg::{ubg_decode, ubg_encode};
use qnn_codec::{ActivationKind, EdgeModel};

fn plbg(c: &mut Criterion) {
    let mut g = c.benchmark_group("plbg");
    for (rows, cols) in [(50, 784), (100, 200)] {
        let f = layer(rows, cols, 16, 1);
        let id = format!("{cols}x{rows}");
        g.bench_function(BenchmarkId::new("encode", &id), |b| {
            b.iter(|| plbg_encode(black_box(&f.matrix), &f.model).unwrap())
        });
        g.bench_function(BenchmarkId::new("decode", &id), |b| {
            b.iter(|| plbg_decode(black_box(&f.stream), &f.model, cols).unwrap())
        });
    }
    g.finish();
}

fn inference(c: &mut Criterion) {
    let mut g = c.benchmark_group("inference");
    for (rows, cols) in [(50, 784), (100, 200)] {
        let f = layer(rows, cols, 16, 2);
        let id = format!("{cols}x{rows}");
        g.bench_function(BenchmarkId::new("compressed", &id), |b| {
            b.iter(|| {
                infer_layer(
                    black_box(&f.stream),
                    &f.model,
                    &f.codebook,
                    &f.input,
                    ActivationKind::Relu,
                )
                .unwrap()
            })
        });
        g.bench_function(BenchmarkId::new("dense", &id), |b| {
            b.iter(|| dense_layer(black_box(&f.matrix), &f.codebook, &f.input, ActivationKind::Relu).unwrap())
        });
    }
    g.finish();
}

fn unlabeled(c: &mut Criterion) {
    let mut g = c.benchmark_group("ubg");
    let model = EdgeModel::binary(1, 1).unwrap();
    for n in [16, 64] {
        let adj = graph(n, 3);
        let stream = ubg_encode(&adj, &model).unwrap();
        g.bench_function(BenchmarkId::new("encode", n), |b| {
            b.iter(|| ubg_encode(black_box(&adj), &model).unwrap())
        });
        g.bench_function(BenchmarkId::new("decode", n), |b| {
            b.iter(|| ubg_decode(black_box(&stream), &model, n).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, plbg, inference, unlabeled);
criterion_main!(benches);
