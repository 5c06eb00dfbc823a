//! Rendering and image-quality core.
//!
//! Everything here is a pure function of its inputs and builds without `std`
//! (only `alloc`): the scene model and material overrides, a path tracer with
//! direct, global-illumination and lightmap-baked modes, full- and
//! no-reference quality metrics, and report assembly. File formats, threads
//! and the command line live in the `renderproof` crate.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod fixtures;
pub mod iqa;
pub mod math;
pub mod render;
pub mod report;
pub mod rng;
pub mod scene;

pub use math::Vec3;
