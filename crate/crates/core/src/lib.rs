pub mod assembly;
pub mod blocks;
pub mod certify;
pub mod error;
pub mod instance;
pub mod spheremaps;
pub mod numerics;
pub mod scalar;

/// Double-precision instance.
pub type Instance64 = assembly::Instance<f64>;
/// Single-precision instance.
pub type Instance32 = assembly::Instance<f32>;
pub type InstanceParams64 = instance::InstanceParams<f64>;
pub type EvalResult64 = assembly::EvalResult<f64>;
pub type JetSample64 = numerics::JetSample<f64>;
pub type SyntheticFactoredMap64 = certify::SyntheticFactoredMap<f64>;

pub use error::{Error, Result};
