//! Problem files, parameter sweeps and example reproduction on top of
//! `fredholm-core`.

pub mod config;
pub mod expr;
pub mod reproduce;
pub mod run;

pub use config::{normalize, parse_config, ConfigError, ProblemConfig};
pub use reproduce::{reproduce_example, ExampleTable, EXAMPLES};
pub use run::{check_problem, run_problem, RunError, RunReport};
