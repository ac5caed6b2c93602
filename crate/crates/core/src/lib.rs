//! Camera-pose driven preprocessing for large-scene reconstruction.
//!
//! Starting from coarse camera poses the crate produces:
//!
//! - a sparse, always-connected list of image pairs for feature matching
//!   ([`pairing`]), thinned by a 64-state relative pose table
//!   ([`quadrant_filter`]);
//! - a weighted camera graph with betweenness-based per-camera sampling
//!   probabilities and per-edge weights ([`graph`]);
//! - octree pruning of the initial point cloud ([`octree`]);
//! - the multi-view photometric consistency loss between a camera and its
//!   strongest neighbour ([`photometric`]).
//!
//! File formats (COLMAP `images.txt`, pose JSON, PLY, PFM, match lists and
//! the weights export) live in [`io`]; [`cli`] wires everything into the
//! `camgraph` binary.

pub mod cli;
pub mod error;
pub mod geometry;
pub mod graph;
pub mod io;
pub mod kdtree;
pub mod octree;
pub mod pairing;
pub mod parallel;
pub mod photometric;
pub mod quadrant_filter;
pub mod validation;

pub use error::{Error, Result};
pub use geometry::{CameraId, CameraPose, PoseSet, QuadrantEncoding};
pub use graph::{CameraGraph, EdgeWeightParams, GraphParams, NodeWeighting};
pub use octree::{Octree, OctreeParams};
pub use pairing::{PairOrigin, PairSet, PairingParams};
pub use photometric::{ConsistencyInputs, Image, Intrinsics};
pub use quadrant_filter::{FilterMode, FilterReport, StateTable};
