// Comparisons such as `!(x > 0)` also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod conformal;
pub mod error;
pub mod fluctuation;
pub mod orthopoly;
pub mod potential;
pub mod qdist;
pub mod quad;
pub mod sampler;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::Real;

pub type RadialPotential64 = potential::RadialPotential<f64>;
pub type HeineParams64 = qdist::HeineParams<f64>;
pub type DNormParams64 = qdist::DNormParams<f64>;
pub type PerturbedWeight64 = orthopoly::PerturbedWeight<f64>;
pub type QuasiPolyData64 = orthopoly::QuasiPolyData<f64>;
pub type LogNormTable64 = orthopoly::LogNormTable<f64>;
pub type ExteriorMap64 = conformal::ExteriorMap<f64>;
pub type ModuliSampler64 = sampler::ModuliSampler<f64>;
pub type SampleBatch64 = sampler::SampleBatch<f64>;
pub type GapContext64 = fluctuation::GapContext<f64>;
pub type FluctPrediction64 = fluctuation::FluctPrediction<f64>;
