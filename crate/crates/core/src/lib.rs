//! LiDAR-cluster-first, camera-inference-later perception pipeline.
//!
//! A LiDAR range image is segmented into clusters, projected onto the
//! camera frame and merged into collision-avoidance zones (CAZones). Zones
//! are downsized by depth, packed onto square composite images and run
//! through a latency-table GPU model under a hard per-frame budget, with
//! high-priority zones never dropped.

// `!(x >= 0.0)` style checks also reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cazone;
pub mod config;
pub mod detect;
pub mod error;
pub mod geom;
pub mod lidar;
pub mod packing;
pub mod pipeline;
pub mod raster;
pub mod scene;
pub mod scheduler;
pub mod viz;

pub use cazone::{CAZone, MergeParams, Priority, SafetyPolicy};
pub use config::PipelineConfig;
pub use detect::{Detection, Detector, OracleDetector};
pub use error::{Error, Result};
pub use geom::{iou, FrameSize, PixelBox};
pub use lidar::{Cluster2D, ClusterParams};
pub use packing::{CompositeImage, DownsizeParams, Placement};
pub use pipeline::{compare_fullframe, FrameReport, FrameRun, Pipeline};
pub use raster::{Raster, Rgb, NULL_BG};
pub use scene::{CameraModel, Extrinsic, LidarSpec, Scene, SceneObject};
pub use scheduler::{Budget, LatencyTable, SchedulePlan, Scheduler};
