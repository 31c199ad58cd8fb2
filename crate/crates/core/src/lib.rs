//! Partially information-coupled (PIC) and partially parity-coupled (PPC)
//! turbo codes on the binary erasure channel.

pub mod config;
pub mod coupling;
pub mod de;
pub mod error;
pub mod optimizer;
pub mod rng;
pub mod sim;
pub mod trellis;
pub mod turbo;

pub use config::{CouplingConfig, Family, Rational};
pub use error::{Error, Result};
pub use trellis::{build_trellis, GeneratorSpec, Ternary, TernaryVec, Trellis};
