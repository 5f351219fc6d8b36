//! Secrecy-rate-optimal UAV placement and trajectory planning.
//!
//! A single UAV transmits to `K` cooperating ground receivers (GRs) that
//! combine their observations by maximal ratio combining, while `J`
//! eavesdroppers listen either independently (non-colluding) or jointly
//! (colluding). The crate provides:
//!
//! - [`scenario`]: problem instances, the key/value scenario file format and
//!   trajectory feasibility checks.
//! - [`channel`]: line-of-sight channel gains, combined SNRs and secrecy rates.
//! - [`placement_opt`]: optimal quasi-stationary placement (altitude search,
//!   on/off power rule and a multi-resolution horizontal search).
//! - [`power_alloc`]: optimal per-slot power for a fixed trajectory.
//! - [`convex_core`]: a log-barrier interior-point solver for smooth concave
//!   programs.
//! - [`traj_sca`]: successive convex approximation of the trajectory
//!   subproblem for a fixed power schedule.
//! - [`planner`]: fly-hover-fly initialization, alternating optimization and
//!   the benchmark schemes.

pub mod channel;
pub mod convex_core;
pub mod geom;
pub mod placement_opt;
pub mod planner;
pub mod power_alloc;
pub mod scenario;
pub mod traj_sca;

pub use channel::{ColludeMode, Placement};
pub use geom::Point2;
pub use placement_opt::StaticSolution;
pub use planner::{PlanResult, Scheme};
pub use power_alloc::{PowerSchedule, SlotGains};
pub use scenario::{Scenario, ScenarioError};
pub use traj_sca::Trajectory;
