//! Long-tail entity question answering: dataset construction from knowledge
//! triples, popularity annotation, BM25 retrieval, LM prompting, evaluation
//! and popularity-gated adaptive retrieval.
//!
//! Numeric kernels are generic over [`Scalar`]; the aliases below fix them to
//! `f64`, which is what the pipeline and the CLI use.

// `!(x >= 0.0)` is used on purpose so that NaN is rejected too; ureq's error
// type is large but is only ever handed straight back to the retry loop.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::result_large_err)]

pub mod adaptive;
pub mod cache;
pub mod config;
pub mod dataset;
pub mod demo;
pub mod error;
pub mod eval;
pub mod http;
pub mod io;
pub mod lm;
pub mod pipeline;
pub mod popularity;
pub mod report;
pub mod retriever;
pub mod rng;
pub mod scalar;
pub mod stats;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Bm25Index = retriever::Bm25Index<f64>;
pub type Bm25Params = retriever::Bm25Params<f64>;
pub type SearchHit = retriever::SearchHit<f64>;
pub type WilsonInterval = stats::WilsonInterval<f64>;
pub type RelationPopularityStats = popularity::RelationPopularityStats<f64>;
pub type TunePoint = adaptive::TunePoint<f64>;
