//! HINT: a hierarchical multi-head channel-attention network for image
//! restoration, with query-key cache modulation inside and across blocks.
//!
//! The network is a 4-level asymmetric U-shape: encoder levels run
//! feed-forward blocks only, the bottleneck and decoder levels add
//! channel attention whose heads split the channel extent unequally.
//! Attention maps are modulated by an exponential-moving-average cache of
//! earlier layers' maps and feed a per-layer query-key cache on the output
//! path. The final output is residual: `restored = input + r(input)`.

pub mod checkpoint;
pub mod config;
pub mod flops;
pub mod hmha;
pub mod layers;
pub mod model;
pub mod qkcu;

pub use config::ModelConfig;
pub use model::{DiagMode, ForwardDiagnostics, Model};
