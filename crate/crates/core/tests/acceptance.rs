//! Acceptance gate: prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use qnn_codec::bounds::{mc_multiset_entropy, plbg_bound, ubg_bound, xy_recursion};
use qnn_codec::coder::{elias_len, TERMINATION_BUDGET_BITS};
use qnn_codec::deepcodec::{argmax, compress_network_plbg, infer_network, Mode, QuantizedNetwork};
use qnn_codec::harness::{run_bench, BenchSpec};
use qnn_codec::infer::infer_layer;
use qnn_codec::model::empirical_model;
use qnn_codec::plbg::{arithmetic_payload_bits, multiset_log_prob, plbg_decode, plbg_encode};
use qnn_codec::randgen::{gen_network, rng_from_seed, sample_matrix, ColorDistribution};
use qnn_codec::ubg::{ubg_decode, ubg_encode, BinaryAdjacency};
use qnn_codec::{ActivationKind, Codebook, ColorMatrix, EdgeModel};
use rand::seq::SliceRandom;
use rand::Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn log2_fact(n: u64) -> f64 {
    (2..=n).map(|k| (k as f64).log2()).sum()
}

fn rows_of(m: &ColorMatrix) -> Vec<Vec<u16>> {
    let mut rows: Vec<Vec<u16>> = (0..m.rows())
        .map(|r| (0..m.cols()).map(|c| m.get(r, c)).collect())
        .collect();
    rows.sort();
    rows
}

fn random_dist(rng: &mut impl Rng, m: u16) -> ColorDistribution {
    let w: Vec<f64> = (0..=m).map(|_| rng.gen_range(0.05..1.0)).collect();
    let s: f64 = w.iter().sum();
    ColorDistribution::new(w.into_iter().map(|v| v / s).collect()).unwrap()
}

fn half() -> EdgeModel {
    EdgeModel::binary(1, 1).unwrap()
}

/// Random `N x M` instances of criteria 1 and 2.
fn instances() -> Vec<ColorMatrix> {
    let mut rng = rng_from_seed(101);
    (0..500)
        .map(|i| {
            let m = [1u16, 4, 16][i % 3];
            let (n, cols) = (rng.gen_range(1..=32), rng.gen_range(1..=32));
            let dist = random_dist(&mut rng, m);
            sample_matrix(&mut rng, n, cols, &dist).unwrap()
        })
        .collect()
}

fn criterion_1(inst: &[ColorMatrix]) -> Outcome {
    let start = Instant::now();
    let mut bad = 0;
    for w in inst {
        let model = empirical_model(w);
        let ok = plbg_encode(w, &model)
            .and_then(|s| plbg_decode(&s, &model, w.cols()))
            .map(|d| rows_of(&d) == rows_of(w))
            .unwrap_or(false);
        bad += usize::from(!ok);
    }
    let t = start.elapsed();
    outcome(
        bad == 0 && t < Duration::from_secs(30),
        format!(
            "{} matrices, {bad} mismatches, {:.2}s (limit 30s)",
            inst.len(),
            t.as_secs_f64()
        ),
    )
}

fn criterion_2(inst: &[ColorMatrix]) -> Outcome {
    let mut worst = f64::NEG_INFINITY;
    for w in inst {
        let model = empirical_model(w);
        let bits = arithmetic_payload_bits(&plbg_encode(w, &model).unwrap()).unwrap() as f64;
        worst = worst.max(bits - multiset_log_prob(w, &model).unwrap());
    }
    let mut rng = rng_from_seed(102);
    let dist = ColorDistribution::binary(0.5).unwrap();
    let (mut payload, mut ideal) = (0.0, 0.0);
    let trials = 1000;
    for _ in 0..trials {
        let w = sample_matrix(&mut rng, 8, 8, &dist).unwrap();
        payload += arithmetic_payload_bits(&plbg_encode(&w, &half()).unwrap()).unwrap() as f64;
        // Probability of the row multiset at p = 1/2: N!/prod(k_i!) 2^-NM.
        let rows = rows_of(&w);
        let mut mult = 0.0;
        let mut i = 0;
        while i < rows.len() {
            let j = (i..rows.len()).find(|&j| rows[j] != rows[i]).unwrap_or(rows.len());
            mult += log2_fact((j - i) as u64);
            i = j;
        }
        ideal += 64.0 - log2_fact(8) + mult;
    }
    let gap = (payload - ideal) / trials as f64;
    outcome(
        worst <= TERMINATION_BUDGET_BITS && gap < 4.0,
        format!("max excess {worst:.3} bits (limit 64), mean excess at 8x8 p=1/2 {gap:.3} bits (limit 4)"),
    )
}

fn criterion_3() -> Outcome {
    let mut rng = rng_from_seed(103);
    let dist = ColorDistribution::binary(0.5).unwrap();
    let trials = 300;
    let total: u64 = (0..trials)
        .map(|_| {
            let w = sample_matrix(&mut rng, 16, 16, &dist).unwrap();
            arithmetic_payload_bits(&plbg_encode(&w, &half()).unwrap()).unwrap()
        })
        .sum();
    let mean = total as f64 / trials as f64;
    let limit = 256.0 - log2_fact(16) + 8.0;
    outcome(mean < limit, format!("mean payload {mean:.2} bits (limit {limit:.2})"))
}

fn dense_oracle(net: &QuantizedNetwork, x: &[f64]) -> Vec<f64> {
    let mut v = x.to_vec();
    let k = net.layers().len();
    for (l, layer) in net.layers().iter().enumerate() {
        let w = &layer.matrix;
        let mut y: Vec<f64> = (0..w.rows())
            .map(|r| {
                (0..w.cols())
                    .map(|c| layer.codebook.weights()[w.get(r, c) as usize] * v[c])
                    .sum()
            })
            .collect();
        if l + 1 < k {
            y.iter_mut().for_each(|a| *a = a.max(0.0));
        }
        v = y;
    }
    v
}

fn queue_ceiling(n: usize, m: u16) -> f64 {
    let (n, c) = (n as f64, m as f64 + 1.0);
    2.0 * n * c + 4.0 * n * c * ((c + 1.0) / c).log2()
}

/// Criteria 4 and 5 share the same 200 networks.
fn criteria_4_5() -> (Outcome, Outcome) {
    let mut rng = rng_from_seed(104);
    let (mut max_err, mut argmax_ok, mut streams_ok, mut queue_ok) = (0.0f64, 0, true, true);
    let nets = 200;
    for i in 0..nets {
        let k = [2, 3, 4][i % 3];
        let dims: Vec<usize> = (0..=k).map(|_| rng.gen_range(1..=32)).collect();
        let m = [1u16, 4, 16][rng.gen_range(0..3)];
        let dist = random_dist(&mut rng, m);
        let net = gen_network(&dims, &dist, &Codebook::uniform(m, 0.16), rng.gen()).unwrap();
        let c = compress_network_plbg(&net).unwrap();
        let x: Vec<f64> = (0..dims[0]).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let got = infer_network(&c, &x, ActivationKind::Relu, ActivationKind::Identity).unwrap();
        let want = dense_oracle(&net, &x);
        max_err = got
            .y
            .iter()
            .zip(&want)
            .map(|(a, b)| (a - b).abs())
            .fold(max_err, f64::max);
        argmax_ok += usize::from(argmax(&got.y) == argmax(&want) && got.y.len() == want.len());

        assert_eq!(c.mode(), Mode::Plbg);
        let records = c.layers();
        let mut v = x.clone();
        for r in &records[..records.len() - 1] {
            let before = r.payload.clone();
            let out = infer_layer(&r.payload, &r.model, &r.codebook, &v, ActivationKind::Relu).unwrap();
            streams_ok &= out.stream == before && r.payload == before;
            queue_ok &= (out.metrics.max_bits as f64) <= queue_ceiling(r.rows, r.m());
            v = out.y;
        }
    }
    let c4 = outcome(
        max_err <= 1e-9 && argmax_ok == nets && streams_ok,
        format!("max |err| {max_err:.2e} (limit 1e-9), argmax {argmax_ok}/{nets}, streams identical: {streams_ok}"),
    );

    let max_queue = |n: usize| -> u64 {
        let mut rng = rng_from_seed(105 + n as u64);
        let dist = ColorDistribution::new(vec![1.0 / 17.0; 17]).unwrap();
        let cb = Codebook::uniform(16, 0.16);
        (0..10)
            .map(|_| {
                let w = sample_matrix(&mut rng, n, n, &dist).unwrap();
                let model = empirical_model(&w);
                let s = plbg_encode(&w, &model).unwrap();
                infer_layer(&s, &model, &cb, &vec![1.0; n], ActivationKind::Identity)
                    .unwrap()
                    .metrics
                    .max_bits
            })
            .max()
            .unwrap()
    };
    let (q8, q64) = (max_queue(8), max_queue(64));
    let c5 = outcome(
        queue_ok && q64 <= 8 * q8,
        format!(
            "ceiling held on every layer: {queue_ok}; m=16 max queue N=8 {q8} bits, N=64 {q64} bits (limit {})",
            8 * q8
        ),
    );
    (c4, c5)
}

fn iso_oracle(a: &BinaryAdjacency, b: &BinaryAdjacency) -> bool {
    let n = a.n();
    if b.n() != n {
        return false;
    }
    let sorted_cols = |g: &BinaryAdjacency, rows: &[usize]| {
        let mut cols: Vec<Vec<bool>> = (0..n).map(|c| rows.iter().map(|&r| g.get(r, c)).collect()).collect();
        cols.sort();
        cols
    };
    let want = sorted_cols(b, &(0..n).collect::<Vec<_>>());
    fn perms(k: usize, cur: &mut Vec<usize>, used: &mut Vec<bool>, f: &mut dyn FnMut(&[usize]) -> bool) -> bool {
        if cur.len() == k {
            return f(cur);
        }
        for v in 0..k {
            if !used[v] {
                used[v] = true;
                cur.push(v);
                if perms(k, cur, used, f) {
                    return true;
                }
                cur.pop();
                used[v] = false;
            }
        }
        false
    }
    perms(n, &mut Vec::new(), &mut vec![false; n], &mut |p| {
        sorted_cols(a, p) == want
    })
}

fn random_graph(rng: &mut impl Rng, n: usize, p: f64) -> BinaryAdjacency {
    BinaryAdjacency::new(n, (0..n * n).map(|_| rng.gen_bool(p)).collect()).unwrap()
}

fn criterion_6() -> Outcome {
    let mut rng = rng_from_seed(106);
    let mut variant = 0;
    for _ in 0..20 {
        let g = random_graph(&mut rng, 12, 0.5);
        let s = ubg_encode(&g, &half()).unwrap();
        for _ in 0..50 {
            let mut rows: Vec<usize> = (0..12).collect();
            let mut cols = rows.clone();
            rows.shuffle(&mut rng);
            cols.shuffle(&mut rng);
            variant += usize::from(ubg_encode(&g.rearrange(&rows, &cols), &half()).unwrap() != s);
        }
    }
    let mut non_iso = 0;
    let mut checked = 0;
    for n in 1..=8 {
        for _ in 0..25 {
            let p = rng.gen_range(0.1..0.9);
            let g = random_graph(&mut rng, n, p);
            let d = ubg_decode(&ubg_encode(&g, &half()).unwrap(), &half(), n).unwrap();
            non_iso += usize::from(!iso_oracle(&g, &d));
            checked += 1;
        }
    }
    outcome(
        variant == 0 && non_iso == 0,
        format!(
            "{variant}/1000 rearrangements changed the stream; {non_iso}/{checked} decodes not isomorphic (N <= 8)"
        ),
    )
}

fn criterion_7() -> Outcome {
    let mut rng = rng_from_seed(107);
    let (mut u, mut p) = (0.0, 0.0);
    let trials = 300;
    for _ in 0..trials {
        let g = random_graph(&mut rng, 16, 0.5);
        u += (ubg_encode(&g, &half()).unwrap().bit_len() - elias_len(16) as u64) as f64;
        p += arithmetic_payload_bits(&plbg_encode(&g.to_matrix(), &half()).unwrap()).unwrap() as f64;
    }
    let (u, p) = (u / trials as f64, p / trials as f64);
    let gap = p - u;
    let lf = log2_fact(16);
    outcome(
        u < p && gap >= 0.25 * lf && gap <= 2.0 * lf,
        format!(
            "mean ubg {u:.2}, plbg {p:.2}, gap {gap:.2} bits (window {:.2}..{:.2})",
            0.25 * lf,
            2.0 * lf
        ),
    )
}

fn criterion_8() -> Outcome {
    let t = xy_recursion(2, 0.5);
    let seeds = t.x[0] == 0.0
        && t.x[1] == 0.0
        && (t.x[2] - 4.0).abs() < 1e-12
        && t.y[0] == 0.0
        && t.y[1] == 0.0
        && (t.y[2] - 1.0).abs() < 1e-12;
    let half = [0.5, 0.5];
    let gap_err = (1..=100u64)
        .map(|n| (plbg_bound(n as usize, n as usize, &half) - ubg_bound(n as usize, &half) - log2_fact(n)).abs())
        .fold(0.0, f64::max);
    let mc = mc_multiset_entropy(2, 1, &ColorDistribution::binary(0.5).unwrap(), 100_000, 108).unwrap();
    let z = (mc.mean - 1.5).abs() / mc.std_error;
    outcome(
        seeds && gap_err <= 1e-9 && z <= 3.0,
        format!("recursion seeds ok: {seeds}; max |gap - log2 N!| {gap_err:.1e} (limit 1e-9); MC {:.4} +- {:.4}, {z:.2} SE from 1.5", mc.mean, mc.std_error),
    )
}

fn tables_spec(rows: usize, cols: usize, seed: u64) -> BenchSpec {
    BenchSpec {
        rows,
        cols,
        dist: ColorDistribution::gaussian_levels(16, 2.5).unwrap(),
        clip: 0.16,
        trials: 3,
        seed,
    }
}

fn criteria_9_10() -> (Outcome, Outcome) {
    let start = Instant::now();
    let mut worst = 0.0f64;
    let mut detail = Vec::new();
    let mut share = 0.0;
    for (rows, cols) in [(50, 784), (100, 200)] {
        let (bench, summary) = run_bench(&tables_spec(rows, cols, 109)).unwrap();
        for r in &bench {
            worst = worst.max((r.observed_bits as f64 - r.table_bound).abs() / r.table_bound);
        }
        detail.push(format!(
            "{cols}x{rows}: observed {:.0} vs bound {:.0}",
            summary.mean_observed, summary.mean_table_bound
        ));
        if rows == 50 {
            share = summary.coding_share();
        }
    }
    let t = start.elapsed();
    let c9 = outcome(
        worst <= 0.05 && t < Duration::from_secs(300),
        format!(
            "{}; worst deviation {:.2}% (limit 5%), {:.1}s (limit 300s)",
            detail.join(", "),
            100.0 * worst,
            t.as_secs_f64()
        ),
    );
    let c10 = outcome(
        share > 50.0,
        format!("pmf + arithmetic share of compressed inference {share:.1}% (limit > 50%)"),
    );
    (c9, c10)
}

fn main() -> ExitCode {
    let inst = instances();
    let (c4, c5) = criteria_4_5();
    let (c9, c10) = criteria_9_10();
    let results = [
        ("lossless round trip", criterion_1(&inst)),
        ("rate vs multiset oracle", criterion_2(&inst)),
        ("permutation-invariance saving", criterion_3()),
        ("network inference correctness", c4),
        ("succinct queue space", c5),
        ("unlabeled graph invariance and round trip", criterion_6()),
        ("unlabeled graph saving", criterion_7()),
        ("bound calculators", criterion_8()),
        ("observed size vs table bound", c9),
        ("inference time breakdown", c10),
    ];
    let mut failed = 0;
    for (i, (name, o)) in results.iter().enumerate() {
        println!(
            "{} criterion {} ({name}): {}",
            if o.pass { "PASS" } else { "FAIL" },
            i + 1,
            o.detail
        );
        failed += usize::from(!o.pass);
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
