//! Compact storage, coordinate maps and stencil simulation for discrete
//! fractals of the Non-overlapping-Bounding-Boxes (NBB) class.
//!
//! An NBB fractal at scale level `r` occupies `k^r` cells of an `n x n`
//! bounding box, `n = s^r`. This crate stores those cells densely in a
//! compact `k^ceil(r/2) x k^floor(r/2)` rectangle and translates between the
//! two coordinate systems with a pair of exact maps: `nu` (embedded to
//! compact) and `lambda` (compact to embedded). The stencil engine runs
//! Game-of-Life style rules on either representation with bit-identical
//! results.

pub mod bench;
pub mod descriptor;
pub mod error;
pub mod frame;
pub mod geometry;
pub mod maps;
pub mod oracle;
pub mod stencil;
pub mod storage;

pub use bench::{BenchConfig, BenchRecord};
pub use descriptor::{FractalDescriptor, ReplicaPos};
pub use error::{DescriptorError, Error, Result};
pub use frame::FrameFormat;
pub use geometry::{EmbeddedCoord, Layout};
pub use maps::{CompactCoord, FractalMap};
pub use oracle::{MapReport, StencilReport};
pub use stencil::{Backend, Engine, Neighborhood, SimConfig, SimState, StencilRule};
pub use storage::{Grid, MemoryCap};
