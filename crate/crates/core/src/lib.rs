//! Quantized Johnson-Lindenstrauss embeddings and the N-dimensional Buffon
//! distribution that governs their distortion.

pub mod buffon;
pub mod embedding;
pub mod error;
pub mod gdelta;
pub mod harness;
pub mod quadrature;
pub mod rng;
pub mod special;

pub use buffon::{build_pmf, BuffonParams, BuffonPmf, Histogram};
pub use embedding::{
    embed, l1_estimate, l2_estimate, l2_raw, PointSet, Projector, RowModel, Sketch,
};
pub use error::{Error, Result};
pub use gdelta::{build_gdelta, GDeltaTable};
pub use harness::{ExperimentConfig, ExperimentReport};
pub use special::{chi, chi_moment, tau};
