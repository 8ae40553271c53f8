//! Instance files, generators, experiment drivers and the `resilient-te`
//! command-line tool.

pub mod bundled;
pub mod cli;
pub mod error;
pub mod format;
pub mod gen;
pub mod report;

pub use bundled::{bundled, BUNDLED};
pub use error::{HarnessError, Result};
pub use format::{InstanceFile, SCHEMA};
pub use gen::{generate_gravity_demands, select_tunnels, split_instance, split_sublinks, GravityWeights};
pub use report::{robust_report, scheme_report, write_csv, ReportRow, Scheme, SchemeRow};
