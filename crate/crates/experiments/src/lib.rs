//! Configuration, canned studies and artifact output for `sspde`.

pub mod config;
pub mod io;
pub mod manifest;
pub mod run;
pub mod studies;

pub use config::RunConfig;
pub use manifest::RunManifest;
pub use studies::{run_study, StudyReport};
