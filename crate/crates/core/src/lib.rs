//! Lossless compression of quantized feedforward neural networks that strips
//! the node-permutation redundancy of hidden layers, plus inference that runs
//! directly on the compressed form.
//!
//! The crate is organised bottom-up:
//!
//! * [`model`]: color matrices, edge models, codebooks, canonical row order.
//! * [`coder`]: bit I/O, a static arithmetic coder, binomial tables, Elias gamma.
//! * [`plbg`]: the partially-labeled bipartite graph codec (count tree).
//! * [`infer`]: streaming inference over a compressed layer with a bounded queue.
//! * [`ubg`]: the two-tree codec for unlabeled binary bipartite graphs.
//! * [`deepcodec`]: K-layer compression, the `QNNC` container and network inference.
//! * [`bounds`]: closed-form rate bounds and Monte-Carlo estimators.
//! * [`randgen`]: seeded generators for the random graph models.
//! * [`harness`]: the generate/compress/infer/verify benchmark loop.

pub mod bounds;
pub mod coder;
pub mod deepcodec;
mod error;
pub mod harness;
pub mod infer;
pub mod model;
pub mod plbg;
pub mod randgen;
pub mod ubg;

pub use coder::Bitstream;
pub use deepcodec::{NetworkContainer, QuantizedNetwork};
pub use error::{Error, Result};
pub use infer::{ActivationKind, QueueMetrics};
pub use model::{Codebook, ColorMatrix, EdgeModel, RowPermutation};
