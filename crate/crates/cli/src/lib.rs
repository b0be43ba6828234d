//! Command-line front end: argument parsing, output files, and manifests.

pub mod args;
pub mod output;

pub use args::{parse_args, Command};
pub use output::{write_convergence, write_snapshots, RunManifest};
