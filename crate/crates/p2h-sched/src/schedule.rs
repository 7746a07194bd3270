//! Typed plant schedule: the solver's decisions per electrolyzer and step,
//! plus the model-side state trajectories when the model carries them.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::physics::OpState;

pub const SCHEDULE_FORMAT_VERSION: u32 = 1;

/// Decisions and modeled state for one electrolyzer over one step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnitStep {
    pub state: OpState,
    pub startup: bool,
    pub shutdown: bool,
    pub p_ele_mw: f64,
    pub p_heat_mw: f64,
    pub p_cool_mw: f64,
    /// Scheduled hydrogen production [mol/s].
    pub prod_mol_s: f64,
    /// Model-side temperature [K]; absent for models without thermal rows.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub temp_k: Option<f64>,
    /// Model-side impurity amount [mol]; absent for models without it.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hto_mol: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub version: u32,
    pub scenario: String,
    pub fleet: usize,
    pub horizon: usize,
    pub step_s: f64,
    /// `units[i][k]`.
    pub units: Vec<Vec<UnitStep>>,
}

#[derive(Debug, Error)]
pub enum ScheduleError {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported schedule format version {0}")]
    BadVersion(u32),
    #[error("unit {unit} step {step}: {reason}")]
    Invalid {
        unit: usize,
        step: usize,
        reason: String,
    },
    #[error("schedule shape mismatch: declared {fleet}x{horizon}, found {found}")]
    Shape {
        fleet: usize,
        horizon: usize,
        found: String,
    },
}

impl Schedule {
    /// Structural invariants: shape, nonnegative powers, production only
    /// while producing.
    pub fn validate(&self) -> Result<(), ScheduleError> {
        if self.version != SCHEDULE_FORMAT_VERSION {
            return Err(ScheduleError::BadVersion(self.version));
        }
        if self.units.len() != self.fleet {
            return Err(ScheduleError::Shape {
                fleet: self.fleet,
                horizon: self.horizon,
                found: format!("{} units", self.units.len()),
            });
        }
        for (i, unit) in self.units.iter().enumerate() {
            if unit.len() != self.horizon {
                return Err(ScheduleError::Shape {
                    fleet: self.fleet,
                    horizon: self.horizon,
                    found: format!("unit {i} with {} steps", unit.len()),
                });
            }
            for (k, s) in unit.iter().enumerate() {
                let bad = |reason: String| ScheduleError::Invalid {
                    unit: i,
                    step: k,
                    reason,
                };
                if s.p_ele_mw < 0.0 || s.p_heat_mw < 0.0 || s.p_cool_mw < 0.0 {
                    return Err(bad("negative power".to_string()));
                }
                if s.prod_mol_s < 0.0 {
                    return Err(bad("negative production".to_string()));
                }
                if s.state != OpState::Production && s.prod_mol_s > 1e-9 {
                    return Err(bad(format!(
                        "production {} while {}",
                        s.prod_mol_s, s.state
                    )));
                }
                if s.state != OpState::Production && s.p_ele_mw > 1e-9 {
                    return Err(bad(format!(
                        "electrolytic power {} while {}",
                        s.p_ele_mw, s.state
                    )));
                }
            }
        }
        Ok(())
    }

    /// Startups per the state sequence, including the initial transition.
    pub fn count_startups(&self, initial_states: &[OpState]) -> usize {
        let mut n = 0;
        for (i, unit) in self.units.iter().enumerate() {
            let mut prev_idle = initial_states
                .get(i)
                .map(|s| *s == OpState::Idle)
                .unwrap_or(true);
            for s in unit {
                let idle = s.state == OpState::Idle;
                if prev_idle && !idle {
                    n += 1;
                }
                prev_idle = idle;
            }
        }
        n
    }

    pub fn save(&self, path: &Path) -> Result<(), ScheduleError> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text).map_err(|source| ScheduleError::Io {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn load(path: &Path) -> Result<Schedule, ScheduleError> {
        let text = std::fs::read_to_string(path).map_err(|source| ScheduleError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let schedule: Schedule = serde_json::from_str(&text)?;
        schedule.validate()?;
        Ok(schedule)
    }
}
