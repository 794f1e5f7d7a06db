//! Fixtures shared by the benchmarks.

use qnn_codec::model::empirical_model;
use qnn_codec::plbg::plbg_encode;
use qnn_codec::randgen::{gen_matrix, ColorDistribution, GenSpec};
use qnn_codec::ubg::BinaryAdjacency;
use qnn_codec::{Bitstream, Codebook, ColorMatrix, EdgeModel};

/// A compressed `rows x cols` layer with its model, codebook and an input.
pub struct LayerFixture {
    pub matrix: ColorMatrix,
    pub model: EdgeModel,
    pub codebook: Codebook,
    pub stream: Bitstream,
    pub input: Vec<f64>,
}

pub fn layer(rows: usize, cols: usize, m: u16, seed: u64) -> LayerFixture {
    let spec = GenSpec {
        rows,
        cols,
        dist: ColorDistribution::gaussian_levels(m, 2.5).expect("valid levels"),
        seed,
    };
    let matrix = gen_matrix(&spec).expect("valid spec");
    let model = empirical_model(&matrix);
    let stream = plbg_encode(&matrix, &model).expect("model covers the matrix");
    LayerFixture {
        matrix,
        model,
        codebook: Codebook::uniform(m, 0.16),
        stream,
        input: (0..cols).map(|i| ((i * 37 % 101) as f64 - 50.0) / 50.0).collect(),
    }
}

pub fn graph(n: usize, seed: u64) -> BinaryAdjacency {
    let spec = GenSpec {
        rows: n,
        cols: n,
        dist: ColorDistribution::binary(0.5).expect("valid p"),
        seed,
    };
    BinaryAdjacency::from_matrix(&gen_matrix(&spec).expect("valid spec")).expect("square binary")
}
