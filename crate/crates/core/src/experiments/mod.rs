//! Vanishing-viscosity, regularization-consistency, truncation and
//! contraction studies built on the dynamics module.
//!
//! Runs within a study execute on the rayon pool; results are aggregated in
//! schedule order, so output is independent of thread scheduling.

mod metrics;
mod report;
mod scenario;
mod studies;

pub use metrics::{trapezoid, ErrorBundle, ObservationWindow, RateFit, WINDOW_MARGIN};
pub use report::{num, StudyReport, Table};
pub use scenario::{FieldProfile, GridSpec, InitialSpec, Scenario};
pub use studies::*;
