//! File formats, scene documents, parallel rendering, the experiment
//! runner and the command-line front end built on `renderproof-core`.

pub mod formats;
pub mod scene_file;
pub mod calibration;
pub mod experiment;
pub mod metrics;
pub mod parallel;
pub mod cli;
