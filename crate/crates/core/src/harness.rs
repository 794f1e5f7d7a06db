//! Generate, compress, infer and verify loops over random matrices.
//!
//! Each trial draws an `N x M` matrix, compresses it against its empirical
//! model, runs streaming inference on a random input and checks the result
//! against a dense product with the decoded matrix. Rows carry sizes, queue
//! statistics and a phase breakdown of the compressed inference time.

use std::fmt::Write as _;
use std::time::{Duration, Instant};

use rand::Rng;

use crate::bounds::{entropy_h, table_bound};
use crate::deepcodec::{LayerRecord, Mode, NetworkContainer};
use crate::infer::{dense_layer, infer_layer_timed, ActivationKind, PhaseTimes};
use crate::model::{canonical_sort_rows, empirical_model, Codebook, ColorMatrix};
use crate::plbg::{arithmetic_payload_bits, multiset_log_prob, plbg_decode_checked, plbg_encode};
use crate::randgen::{rng_from_seed, sample_matrix, ColorDistribution, PRNG_NAME};
use crate::{Error, Result};

/// Largest allowed gap between compressed and dense outputs.
pub const VERIFY_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct BenchSpec {
    pub rows: usize,
    pub cols: usize,
    pub dist: ColorDistribution,
    /// Codebook spans `[-clip, clip]`.
    pub clip: f64,
    pub trials: usize,
    pub seed: u64,
}

/// One measured layer.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub trial: usize,
    pub seed: u64,
    pub rows: usize,
    pub cols: usize,
    pub m: u16,
    /// `M N H(p) - N log2 N` at the empirical color frequencies.
    pub table_bound: f64,
    /// Arithmetic payload, without the leading row count.
    pub observed_bits: u64,
    /// `-log2` of the multiset's probability under the same model.
    pub ideal_bits: f64,
    pub avg_queue_bits: f64,
    pub max_queue_bits: u64,
    pub compressed_time: Duration,
    pub uncompressed_time: Duration,
    pub pmf_percent: f64,
    pub arith_percent: f64,
}

impl BenchRow {
    pub const FIELDS: [&'static str; 15] = [
        "trial",
        "seed",
        "rows",
        "cols",
        "m",
        "table_bound_bits",
        "observed_bits",
        "ideal_bits",
        "avg_queue_bits",
        "max_queue_bits",
        "compressed_seconds",
        "uncompressed_seconds",
        "pmf_percent",
        "arith_percent",
        "prng",
    ];

    pub fn record(&self) -> Vec<String> {
        vec![
            self.trial.to_string(),
            self.seed.to_string(),
            self.rows.to_string(),
            self.cols.to_string(),
            self.m.to_string(),
            format!("{:.3}", self.table_bound),
            self.observed_bits.to_string(),
            format!("{:.3}", self.ideal_bits),
            format!("{:.3}", self.avg_queue_bits),
            self.max_queue_bits.to_string(),
            format!("{:.9}", self.compressed_time.as_secs_f64()),
            format!("{:.9}", self.uncompressed_time.as_secs_f64()),
            format!("{:.2}", self.pmf_percent),
            format!("{:.2}", self.arith_percent),
            PRNG_NAME.to_string(),
        ]
    }
}

/// Measures one compressed layer: runs it on `x`, times the dense product
/// with the decoded matrix and checks that both agree.
pub fn measure_layer(record: &LayerRecord, x: &[f64]) -> Result<(BenchRow, PhaseTimes)> {
    let stream = &record.payload;
    let decoded = plbg_decode_checked(stream, &record.model, record.cols, Some(record.rows))?;
    let mut times = PhaseTimes::default();
    let out = infer_layer_timed(
        stream,
        &record.model,
        &record.codebook,
        x,
        ActivationKind::Identity,
        &mut times,
    )?;
    let start = Instant::now();
    let dense = dense_layer(&decoded, &record.codebook, x, ActivationKind::Identity)?;
    let uncompressed_time = start.elapsed();
    if &out.stream != stream {
        return Err(Error::Verification("re-encoded stream differs from the input".into()));
    }
    if let Some(i) = (0..dense.len()).find(|&i| (dense[i] - out.y[i]).abs() > VERIFY_TOLERANCE) {
        return Err(Error::Verification(format!(
            "output {i}: compressed {} vs dense {}",
            out.y[i], dense[i]
        )));
    }
    let row = BenchRow {
        trial: 0,
        seed: 0,
        rows: record.rows,
        cols: record.cols,
        m: record.m(),
        table_bound: table_bound(record.rows, record.cols, &record.model.probabilities()),
        observed_bits: arithmetic_payload_bits(stream)?,
        ideal_bits: multiset_log_prob(&decoded, &record.model)?,
        avg_queue_bits: out.metrics.avg_bits,
        max_queue_bits: out.metrics.max_bits,
        compressed_time: times.total,
        uncompressed_time,
        pmf_percent: times.pmf_percent(),
        arith_percent: times.coding_percent(),
    };
    Ok((row, times))
}

/// Rows for every compressed layer of a container, measured on a zero input.
pub fn container_rows(container: &NetworkContainer) -> Result<Vec<BenchRow>> {
    if container.mode() != Mode::Plbg {
        return Ok(Vec::new());
    }
    let records = container.layers();
    records[..records.len() - 1]
        .iter()
        .enumerate()
        .map(|(l, r)| {
            let (mut row, _) = measure_layer(r, &vec![0.0; r.cols])?;
            row.trial = l;
            Ok(row)
        })
        .collect()
}

fn trial(spec: &BenchSpec, index: usize, seed: u64) -> Result<(BenchRow, PhaseTimes)> {
    let mut rng = rng_from_seed(seed);
    let matrix = sample_matrix(&mut rng, spec.rows, spec.cols, &spec.dist)?;
    let codebook = Codebook::uniform(spec.dist.m(), spec.clip);
    let model = empirical_model(&matrix);
    let stream = plbg_encode(&matrix, &model)?;
    let record = LayerRecord {
        rows: spec.rows,
        cols: spec.cols,
        codebook,
        model,
        payload: stream,
    };
    let x: Vec<f64> = (0..spec.cols).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let (mut row, times) = measure_layer(&record, &x)?;
    let decoded = plbg_decode_checked(&record.payload, &record.model, spec.cols, Some(spec.rows))?;
    if decoded != canonical_sort_rows(&matrix).0 {
        return Err(Error::Verification(format!("trial {index}: decoded rows differ")));
    }
    row.trial = index;
    row.seed = seed;
    Ok((row, times))
}

/// Aggregate over a bench run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BenchSummary {
    pub trials: usize,
    pub mean_observed: f64,
    pub mean_ideal: f64,
    pub mean_table_bound: f64,
    pub max_queue_bits: u64,
    /// Phase times summed over all trials.
    pub times: PhaseTimes,
}

impl BenchSummary {
    /// Share of compressed inference spent building tables, decoding and
    /// re-encoding.
    pub fn coding_share(&self) -> f64 {
        self.times.pmf_percent() + self.times.coding_percent()
    }
}

impl std::fmt::Display for BenchSummary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let mut s = String::new();
        let _ = writeln!(s, "trials={}", self.trials);
        let _ = writeln!(s, "mean_observed_bits={:.3}", self.mean_observed);
        let _ = writeln!(s, "mean_ideal_bits={:.3}", self.mean_ideal);
        let _ = writeln!(s, "mean_table_bound_bits={:.3}", self.mean_table_bound);
        let _ = writeln!(s, "max_queue_bits={}", self.max_queue_bits);
        let _ = writeln!(s, "pmf_percent={:.2}", self.times.pmf_percent());
        let _ = writeln!(s, "arith_percent={:.2}", self.times.coding_percent());
        let _ = writeln!(s, "accumulate_percent={:.2}", self.times.accumulate_percent());
        let _ = write!(s, "prng={PRNG_NAME}");
        f.write_str(&s)
    }
}

/// Runs `spec.trials` trials. Trial seeds are drawn from `spec.seed`, so
/// any single row can be reproduced from its `seed` field.
pub fn run_bench(spec: &BenchSpec) -> Result<(Vec<BenchRow>, BenchSummary)> {
    if spec.rows == 0 || spec.cols == 0 {
        return Err(Error::InvalidMatrix(
            "bench needs at least one row and one column".into(),
        ));
    }
    let mut seeds = rng_from_seed(spec.seed);
    let mut rows = Vec::with_capacity(spec.trials);
    let mut summary = BenchSummary::default();
    for i in 0..spec.trials {
        let (row, times) = trial(spec, i, seeds.gen())?;
        summary.times.add(&times);
        summary.max_queue_bits = summary.max_queue_bits.max(row.max_queue_bits);
        summary.mean_observed += row.observed_bits as f64;
        summary.mean_ideal += row.ideal_bits;
        summary.mean_table_bound += row.table_bound;
        rows.push(row);
    }
    summary.trials = rows.len();
    if !rows.is_empty() {
        let n = rows.len() as f64;
        summary.mean_observed /= n;
        summary.mean_ideal /= n;
        summary.mean_table_bound /= n;
    }
    Ok((rows, summary))
}

/// Entropy of the empirical color frequencies of `matrix`.
pub fn empirical_entropy(matrix: &ColorMatrix) -> f64 {
    entropy_h(&empirical_model(matrix).probabilities())
}
