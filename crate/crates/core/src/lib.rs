//! Resource-based maneuver planning for automated vehicles, with a deterministic
//! closed-loop simulator, rule-based baselines and evaluation tooling.

pub mod baselines;
pub mod bezier;
pub mod config;
pub mod error;
pub mod geometry;
pub mod identification;
pub mod metrics;
pub mod par;
pub mod planner;
pub mod plot;
pub mod report;
pub mod resources;
pub mod scenario;
pub mod sim;

pub use config::PlannerConfig;
pub use error::{ConfigError, GeometryError, ScenarioError, WeightError};
pub use identification::{InfeasibilityReason, Maneuver, ManeuverCandidate, Prediction};
pub use scenario::{load_scenario, AgentState, DriverProfile, Scenario};
