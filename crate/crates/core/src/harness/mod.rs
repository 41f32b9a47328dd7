//! Prediction-structure coding layer: rate model, AAMVP and AMM candidate
//! lists, RD mode decision over a quadtree, and reports.

pub mod bits;
pub mod candidates;
pub mod encoder;
pub mod report;

pub use encoder::{encode_frame, EncodedFrame, EncoderConfig, FrameStats, Mode, NodeLog, Partition, PredictionUnit, PuMotion};
