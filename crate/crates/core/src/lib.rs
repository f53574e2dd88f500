//! Geometry coding for voxelized point clouds.
//!
//! The pipeline projects a cloud onto axis-aligned patches, stores the
//! lowest and highest depth per pixel in a near/far frame pair together with
//! an occupancy map, and codes both frames with a small quadtree block codec.
//! The far layer is predicted from the reconstructed near layer. Two encoder
//! tools sit on top of that codec:
//!
//! * surface-angle lambda scaling (`epm`), which weights the rate term of the
//!   far-layer mode decision by `1 / cos²θ` so that the decision tracks the
//!   point-to-plane error instead of the raw depth error;
//! * refined merge prediction, which adds one depth unit to the co-located
//!   near-layer prediction, either on occupied pixels only or everywhere.
//!
//! [`metrics`] provides the point-to-point and point-to-plane geometry errors
//! and the Bjøntegaard delta-rate used to compare encoder configurations.

pub mod codec;
pub mod config;
pub mod epm;
pub mod harness;
pub mod metrics;
pub mod pipeline;
pub mod pointcloud;
pub mod projection;
pub mod spatial;
pub mod synth;

mod error;

pub use error::{Error, Result};
