//! Scenario files, trajectory CSV and JSON reports.
//!
//! Scenarios are TOML; unknown keys are rejected. Trajectories are written as
//! rectangular CSV (`t,R,B,x,y,mu[,a,b][,envelope]`, LF line endings, every
//! number with 17 significant digits, empty cell where a value is undefined).
//! Reports are pretty-printed JSON carrying `format_version = 1`; events go in
//! a trailing `events` array, never in the CSV.

pub mod error;
pub mod report;
pub mod scenario;
pub mod table;

pub use error::{IoError, Result};
pub use report::{write_report, FORMAT_VERSION};
pub use scenario::{load_scenario, parse_scenario, Scenario, SystemKind};
pub use table::{read_trajectory, write_trajectory, TrajectoryRow, TrajectoryTable};
