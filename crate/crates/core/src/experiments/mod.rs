//! Configuration, seeded end-to-end runs and CSV artifacts.
//!
//! A run reads an [`ExperimentConfig`], dispatches on its [`Kind`] and
//! writes plot-ready CSV files plus `summary.txt` into an output directory.
//! Every file starts with `# driftwalk <version> config=<sha256>`.

mod artifacts;
mod config;
pub mod constants;
mod runs;
mod sampling;
mod statistics;

pub use artifacts::ArtifactWriter;
pub use config::{
    ChainSection, DriftSection, EmpiricalSection, EquidistributionSection, ExperimentConfig, GridSection, Kind, Model,
    ScheduleSection, WalkSection,
};
pub use runs::{run, Check, RunSummary};
pub use sampling::{random_orthogonal, sample_high_lattice};
pub use statistics::{
    occupation_experiment, primitive_ball_count, siegel_equidistribution, OccupationTable, SiegelReport,
};
