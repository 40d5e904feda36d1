//! Holographic ISAC simulator.

pub mod analog;
pub mod baseline;
pub mod digital;
pub mod error;
pub mod harness;
pub mod holography;
pub mod linalg;
pub mod linksim;
pub mod metrics;
pub mod rhs;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::Real;

/// Concrete double-precision aliases.
pub type RhsLayoutF64 = rhs::RhsLayout<f64>;
pub type PatternBankF64 = holography::PatternBank<f64>;
pub type HybridSystemF64 = analog::HybridSystem<f64>;
pub type OptimizerConfigF64 = analog::OptimizerConfig<f64>;
pub type DigitalBeamformerF64 = digital::DigitalBeamformer<f64>;
pub type PhasedArrayLayoutF64 = baseline::PhasedArrayLayout<f64>;
pub type WaveformF64 = linksim::Waveform<f64>;

/// Concrete single-precision aliases.
pub type RhsLayoutF32 = rhs::RhsLayout<f32>;
pub type PatternBankF32 = holography::PatternBank<f32>;
pub type HybridSystemF32 = analog::HybridSystem<f32>;
pub type OptimizerConfigF32 = analog::OptimizerConfig<f32>;
pub type DigitalBeamformerF32 = digital::DigitalBeamformer<f32>;
pub type PhasedArrayLayoutF32 = baseline::PhasedArrayLayout<f32>;
pub type WaveformF32 = linksim::Waveform<f32>;
