//! Planner configuration. Every constant the planner, resources and baselines use is a
//! field here; a JSON config document may override any subset of them.

use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::ConfigError;
use crate::scenario::DriverProfile;

/// Environment variable consulted for a config path when none is given on the command line.
pub const CONFIG_ENV: &str = "CORMP_CONFIG";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlannerConfig {
    /// Overrides the scenario's driver profile when set.
    pub profile: Option<DriverProfile>,
    pub dt: f64,
    pub horizon_s: f64,
    pub replan_interval_s: f64,
    /// Objects farther than this from the ego are not predicted.
    pub interaction_range: f64,
    pub maneuver: ManeuverParams,
    pub ttc_min: f64,
    pub speed_tolerance: f64,
    pub safety: SafetyParams,
    pub comfort: ComfortParams,
    /// Reference acceleration for the energy normalizer `E_ref = m (a_ref T_p)^2 / 2`.
    pub energy_accel_ref: f64,
    pub crowdedness: CrowdednessParams,
    pub thresholds: StateThresholds,
    pub mobil: MobilParams,
    pub idm: IdmParams,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self {
            profile: None,
            dt: 0.1,
            horizon_s: 4.0,
            replan_interval_s: 0.5,
            interaction_range: 100.0,
            maneuver: ManeuverParams::default(),
            ttc_min: 2.5,
            speed_tolerance: 1e-6,
            safety: SafetyParams::default(),
            comfort: ComfortParams::default(),
            energy_accel_ref: 2.5,
            crowdedness: CrowdednessParams::default(),
            thresholds: StateThresholds::default(),
            mobil: MobilParams::default(),
            idm: IdmParams::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ManeuverParams {
    pub keep_accel: f64,
    pub keep_decel: f64,
    pub stop_decel_max: f64,
    /// Distance kept between the ego front and a stop line or crosswalk (m).
    pub stop_margin: f64,
    pub lane_change_duration_s: f64,
    /// Handle length of the lane-change curve as a fraction of its longitudinal length.
    pub lane_change_handle: f64,
    pub lane_change_min_speed: f64,
    pub lane_change_min_length: f64,
}

impl Default for ManeuverParams {
    fn default() -> Self {
        Self {
            keep_accel: 1.5,
            keep_decel: 1.5,
            stop_decel_max: 3.0,
            stop_margin: 1.0,
            lane_change_duration_s: 3.0,
            lane_change_handle: 0.4,
            lane_change_min_speed: 1.0,
            lane_change_min_length: 10.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SafetyParams {
    pub time_headway: f64,
    pub d_min: f64,
    /// Added to the half-width sum to get the required lateral clearance.
    pub lateral_margin: f64,
}

impl Default for SafetyParams {
    fn default() -> Self {
        Self {
            time_headway: 2.0,
            d_min: 5.0,
            lateral_margin: 0.5,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ComfortParams {
    /// Comfortable forward acceleration (m/s^2).
    pub lon_accel_comfort: f64,
    /// Comfortable braking magnitude (m/s^2).
    pub lon_brake_comfort: f64,
    pub lon_max: f64,
    pub lat_comfort: f64,
    pub lat_max: f64,
}

impl Default for ComfortParams {
    fn default() -> Self {
        Self {
            lon_accel_comfort: 1.5,
            lon_brake_comfort: 0.9,
            lon_max: 3.0,
            lat_comfort: 1.8,
            lat_max: 2.5,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CrowdednessParams {
    pub n_ref: f64,
    /// Lateral and longitudinal inflation of the ego corridor (m).
    pub corridor_margin: f64,
}

impl Default for CrowdednessParams {
    fn default() -> Self {
        Self {
            n_ref: 5.0,
            corridor_margin: 0.5,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StateThresholds {
    pub loss: f64,
    pub acquired: f64,
}

impl Default for StateThresholds {
    fn default() -> Self {
        Self {
            loss: 0.05,
            acquired: 0.6,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MobilParams {
    pub politeness: f64,
    pub threshold: f64,
    pub b_safe: f64,
}

impl Default for MobilParams {
    fn default() -> Self {
        Self {
            politeness: 0.5,
            threshold: 0.1,
            b_safe: 4.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IdmParams {
    pub a_max: f64,
    pub b_comfort: f64,
    pub time_headway: f64,
    pub min_gap: f64,
    pub delta: f64,
    /// Hard braking bound applied to every baseline command.
    pub b_max: f64,
}

impl Default for IdmParams {
    fn default() -> Self {
        Self {
            a_max: 1.5,
            b_comfort: 2.0,
            time_headway: 1.5,
            min_gap: 2.0,
            delta: 4.0,
            b_max: 8.0,
        }
    }
}

impl PlannerConfig {
    pub fn from_reader<R: Read>(r: R) -> Result<Self, ConfigError> {
        let cfg: PlannerConfig = serde_json::from_reader(r)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        Self::from_reader(std::io::BufReader::new(std::fs::File::open(path)?))
    }

    /// Loads from `path`, else from `$CORMP_CONFIG`, else defaults.
    pub fn resolve(path: Option<&Path>) -> Result<Self, ConfigError> {
        match path {
            Some(p) => Self::from_path(p),
            None => match std::env::var_os(CONFIG_ENV) {
                Some(p) if !p.is_empty() => Self::from_path(p),
                _ => Ok(Self::default()),
            },
        }
    }

    pub fn replan_ticks(&self) -> usize {
        ((self.replan_interval_s / self.dt).round() as usize).max(1)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let positive = [
            ("dt", self.dt),
            ("horizon_s", self.horizon_s),
            ("replan_interval_s", self.replan_interval_s),
            ("ttc_min", self.ttc_min),
            ("maneuver.keep_accel", self.maneuver.keep_accel),
            ("maneuver.keep_decel", self.maneuver.keep_decel),
            ("maneuver.stop_decel_max", self.maneuver.stop_decel_max),
            ("maneuver.lane_change_duration_s", self.maneuver.lane_change_duration_s),
            ("safety.time_headway", self.safety.time_headway),
            ("energy_accel_ref", self.energy_accel_ref),
            ("crowdedness.n_ref", self.crowdedness.n_ref),
            ("idm.a_max", self.idm.a_max),
            ("idm.b_comfort", self.idm.b_comfort),
        ];
        for (name, value) in positive {
            if !(value > 0.0 && value.is_finite()) {
                return Err(ConfigError::Invalid(format!("{name} must be > 0")));
            }
        }
        let c = &self.comfort;
        if !(c.lon_max > c.lon_accel_comfort && c.lon_max > c.lon_brake_comfort && c.lat_max > c.lat_comfort) {
            return Err(ConfigError::Invalid("comfort maxima must exceed comfort bounds".into()));
        }
        if !(0.0 <= self.thresholds.loss && self.thresholds.loss < self.thresholds.acquired && self.thresholds.acquired <= 1.0) {
            return Err(ConfigError::Invalid("need 0 <= thresholds.loss < thresholds.acquired <= 1".into()));
        }
        if self.horizon_s < self.dt {
            return Err(ConfigError::Invalid("horizon_s must cover at least one tick".into()));
        }
        Ok(())
    }
}
