//! Pruned polar codes over binary erasure channels.
//!
//! The crate grows a pruned channel tree from a BEC erasure rate, picks the
//! information set, reads off exact code metrics, runs a bit-level encoder and
//! successive-cancellation decoder on the pruned circuit, simulates block
//! errors and stopping times, and certifies the scaling-exponent inequality
//! with outward-rounded interval arithmetic.
//!
//! Channel and tree math is generic over [`Scalar`], so the same construction
//! runs in `f32`, `f64` or exact rationals. The concrete aliases below are
//! what the codec, simulator and CLI use.

pub mod channel;
pub mod cli;
pub mod codec;
pub mod error;
pub mod interval;
pub mod scalar;
pub mod sim;
pub mod tree;

pub use channel::ErasureRate;
pub use codec::{MessageLayout, Outcome, ScDecoder, TernarySymbol};
pub use error::{Error, Result};
pub use interval::{Certificate, Interval};
pub use scalar::{RoundingFloat, Scalar};
pub use sim::{SimReport, SweepRow, TauSample};
pub use tree::{ChannelTree, CodeMetrics, CodeSpec, LeafClass, NodeId, TreeNode};

/// Exact rational scalar; erasure rates on a pruned tree are dyadic so this
/// reproduces small constructions without any rounding.
pub type Exact = num_rational::BigRational;

pub type ErasureRate64 = ErasureRate<f64>;
pub type ErasureRate32 = ErasureRate<f32>;
pub type ExactErasureRate = ErasureRate<Exact>;

pub type CodeSpec64 = CodeSpec<f64>;
pub type CodeSpec32 = CodeSpec<f32>;
pub type ExactCodeSpec = CodeSpec<Exact>;

pub type Interval64 = Interval<f64>;
pub type Interval32 = Interval<f32>;
