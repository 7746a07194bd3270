//! Brute-force scheduling oracle for tiny instances.
//!
//! Enumerates every state string and gridded power assignment over the
//! horizon with depth-first search, simulating the exact nonlinear process
//! models at every node and discarding branches that violate a constraint
//! or cannot beat the incumbent on an optimistic bound. Serves as an
//! independent check on the whole MILP pipeline: same constraints, no
//! linearization anywhere.
//!
//! To compare against the relaxed MILP, optional safety margins shrink the
//! oracle's caps so that every oracle-feasible trajectory stays feasible
//! under the model's (slightly conservative) linearized state rows.

use thiserror::Error;

use crate::milp::build::PlantScenario;
use crate::physics::{
    self, ElectrolyzerParams, OpState,
};
use crate::schedule::{Schedule, UnitStep, SCHEDULE_FORMAT_VERSION};

/// Documented enumeration bounds.
pub const MAX_UNITS: usize = 2;
pub const MAX_STEPS: usize = 8;
pub const MAX_LEVELS: usize = 5;
const MAX_NODES: u64 = 2_000_000_000;

/// Safety margins subtracted from the caps the oracle enforces.
#[derive(Debug, Clone, Copy, Default)]
pub struct OracleMargins {
    /// Thermostat target below the temperature cap [K].
    pub temp_k: f64,
    /// Voltage headroom [V].
    pub voltage_v: f64,
    /// Impurity headroom as a fraction of the cap.
    pub hto_frac: f64,
    /// Ramp headroom [mol/s per step].
    pub ramp_mol_s: f64,
}

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("instance exceeds the enumeration bound: {0}")]
    TooLarge(String),
    #[error("scenario invalid: {0}")]
    Scenario(#[from] crate::milp::build::ScenarioError),
    #[error("node budget exhausted after {0} nodes")]
    NodeBudget(u64),
    #[error("no feasible schedule exists for this instance")]
    Infeasible,
}

#[derive(Debug, Clone, Copy)]
struct Choice {
    state: OpState,
    p_ele: f64,
    heat: f64,
}

#[derive(Debug, Clone, Copy)]
struct UnitState {
    temp: f64,
    hto: f64,
    idle_run: usize,
    was_idle: bool,
    prev_prod: Option<f64>,
}

struct Searcher<'a> {
    scenario: &'a PlantScenario,
    params: &'a ElectrolyzerParams,
    margins: OracleMargins,
    choices: Vec<Choice>,
    /// Optimistic profit of the remaining steps, `suffix[k]` for steps `k..`.
    suffix_bound: Vec<f64>,
    best_value: f64,
    best_path: Option<Vec<u8>>,
    path: Vec<u8>,
    nodes: u64,
}

/// Exhaustively finds the profit-maximizing schedule over the given
/// electrolytic power grid, heater levels `{0, max}` and the three states,
/// under exact nonlinear dynamics with thermostat cooling. Ties are broken
/// toward the lexicographically smallest choice string (idle before
/// standby before production, lower power first).
pub fn oracle_best(
    scenario: &PlantScenario,
    params: &ElectrolyzerParams,
    power_grid: &[f64],
    margins: OracleMargins,
) -> Result<(Schedule, f64), OracleError> {
    scenario.validate()?;
    if scenario.fleet > MAX_UNITS {
        return Err(OracleError::TooLarge(format!(
            "{} units > {MAX_UNITS}",
            scenario.fleet
        )));
    }
    if scenario.horizon > MAX_STEPS {
        return Err(OracleError::TooLarge(format!(
            "{} steps > {MAX_STEPS}",
            scenario.horizon
        )));
    }
    if power_grid.len() > MAX_LEVELS || power_grid.is_empty() {
        return Err(OracleError::TooLarge(format!(
            "{} power levels (1..={MAX_LEVELS})",
            power_grid.len()
        )));
    }
    let mut grid: Vec<f64> = power_grid.to_vec();
    grid.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let heats: Vec<f64> = if params.max_heating_power > 0.0 {
        vec![0.0, params.max_heating_power]
    } else {
        vec![0.0]
    };
    // canonical choice order defines the lexicographic tie-break
    let mut choices = vec![Choice {
        state: OpState::Idle,
        p_ele: 0.0,
        heat: 0.0,
    }];
    for &heat in &heats {
        choices.push(Choice {
            state: OpState::Standby,
            p_ele: 0.0,
            heat,
        });
    }
    for &p in &grid {
        for &heat in &heats {
            choices.push(Choice {
                state: OpState::Production,
                p_ele: p,
                heat,
            });
        }
    }

    // optimistic per-step value: best revenue-minus-power margin any unit
    // could achieve at the best temperature, ignoring dynamics
    let h2 = scenario.h2_coeff();
    let mut suffix_bound = vec![0.0; scenario.horizon + 1];
    for k in (0..scenario.horizon).rev() {
        let mut best_step = 0.0f64;
        for &p in &grid {
            let rate = physics::production_from_power(p, params.max_temp, params);
            let value = h2 * rate - scenario.power_coeff(k) * (p + params.aux_power);
            best_step = best_step.max(value);
        }
        suffix_bound[k] = suffix_bound[k + 1] + best_step * scenario.fleet as f64;
    }

    let mut searcher = Searcher {
        scenario,
        params,
        margins,
        choices,
        suffix_bound,
        best_value: f64::NEG_INFINITY,
        best_path: None,
        path: vec![0; scenario.fleet * scenario.horizon],
        nodes: 0,
    };
    let init: Vec<UnitState> = scenario
        .initial_states
        .iter()
        .map(|s| UnitState {
            temp: s.temperature,
            hto: s.hto_moles,
            idle_run: if s.op_state == OpState::Idle {
                params.min_idle_steps
            } else {
                0
            },
            was_idle: s.op_state == OpState::Idle,
            prev_prod: None,
        })
        .collect();
    searcher.step(0, &init, 0.0)?;
    let path = searcher.best_path.take().ok_or(OracleError::Infeasible)?;
    let schedule = searcher.path_to_schedule(&path);
    Ok((schedule, searcher.best_value))
}

impl<'a> Searcher<'a> {
    /// Applies `choice` to one unit at step `k`; `None` when infeasible.
    /// Returns the next state, this unit's total power and its profit
    /// contribution (excluding the startup cost, handled by the caller).
    fn apply(&self, k: usize, state: &UnitState, choice: &Choice) -> Option<(UnitState, f64, f64)> {
        let p = self.params;
        let m = &self.margins;
        if choice.state == OpState::Idle {
            let next = UnitState {
                temp: physics::temperature_step_heat(state.temp, 0.0, 0.0, 0.0, p, self.scenario.step_s),
                hto: state.hto,
                idle_run: state.idle_run.saturating_add(1),
                was_idle: true,
                prev_prod: Some(0.0),
            };
            // production halt still must respect the downward ramp
            if let Some(prev) = state.prev_prod {
                if -prev < physics::nm3_h_to_mol_s(p.ramp_down) + m.ramp_mol_s {
                    return None;
                }
            }
            return Some((next, 0.0, 0.0));
        }
        // leaving idle before the minimum gap is illegal
        if state.was_idle && state.idle_run < p.min_idle_steps {
            return None;
        }
        let producing = choice.state == OpState::Production;
        let current = if producing {
            physics::current_from_power(choice.p_ele, state.temp, p)
        } else {
            0.0
        };
        if physics::cell_voltage(current, state.temp, p) > p.max_cell_voltage - m.voltage_v {
            return None;
        }
        let rate = physics::production_from_current(current, p);
        // the first step has no ramp anchor, matching the model
        if let Some(prev) = state.prev_prod {
            let delta = rate - prev;
            if delta > physics::nm3_h_to_mol_s(p.ramp_up) - m.ramp_mol_s
                || delta < physics::nm3_h_to_mol_s(p.ramp_down) + m.ramp_mol_s
            {
                return None;
            }
        }
        let react = physics::reaction_heat(current, state.temp, p);
        // thermostat: land the Euler step at the (margined) cap
        let target = p.max_temp - m.temp_k;
        let need = react - p.dissipation_conductance * (state.temp - p.ambient_temp) + choice.heat
            - (target - state.temp) * p.heat_capacity / self.scenario.step_s;
        let cool = need.clamp(0.0, physics::max_cooling(state.temp, p, choice.state));
        let next_temp = physics::temperature_step_heat(
            state.temp,
            react,
            cool,
            choice.heat,
            p,
            self.scenario.step_s,
        );
        if next_temp > target + 1e-9 {
            return None; // cooling capacity exhausted
        }
        let st = physics::ElectrolyzerState {
            temperature: state.temp,
            hto_moles: state.hto,
            op_state: choice.state,
        };
        let next_hto = physics::hto_step(&st, rate / 2.0, producing, p, self.scenario.step_s);
        let cap = p.hto_limit * p.o2_holdup * (1.0 - m.hto_frac);
        if next_hto > cap || state.hto > cap {
            return None;
        }
        let power = choice.p_ele
            + choice.heat / p.heating_eff
            + cool / p.cooling_eff
            + p.aux_power;
        let profit = self.scenario.h2_coeff() * rate - self.scenario.power_coeff(k) * power;
        let next = UnitState {
            temp: next_temp,
            hto: next_hto,
            idle_run: 0,
            was_idle: false,
            prev_prod: Some(rate),
        };
        Some((next, power, profit))
    }

    fn step(&mut self, k: usize, states: &[UnitState], value: f64) -> Result<(), OracleError> {
        if k == self.scenario.horizon {
            let better = value > self.best_value + 1e-9
                || ((value - self.best_value).abs() <= 1e-9
                    && self
                        .best_path
                        .as_ref()
                        .map(|b| self.path.as_slice() < b.as_slice())
                        .unwrap_or(true));
            if better {
                self.best_value = value;
                self.best_path = Some(self.path.clone());
            }
            return Ok(());
        }
        if value + self.suffix_bound[k] <= self.best_value + 1e-9 {
            return Ok(()); // cannot beat the incumbent
        }
        self.unit_choice(k, 0, states, value, 0.0)
    }

    fn unit_choice(
        &mut self,
        k: usize,
        unit: usize,
        states: &[UnitState],
        value: f64,
        fleet_power: f64,
    ) -> Result<(), OracleError> {
        if unit == self.scenario.fleet {
            return self.step(k + 1, states, value);
        }
        self.nodes += 1;
        if self.nodes > MAX_NODES {
            return Err(OracleError::NodeBudget(self.nodes));
        }
        for c in 0..self.choices.len() {
            let choice = self.choices[c];
            if let Some((next_state, power, profit)) = self.apply(k, &states[unit], &choice) {
                let total = fleet_power + power;
                if total > self.scenario.available_power[k] + 1e-12 {
                    continue;
                }
                let startup = if states[unit].was_idle && choice.state != OpState::Idle {
                    self.scenario.startup_cost
                } else {
                    0.0
                };
                let mut advanced = states.to_vec();
                advanced[unit] = next_state;
                self.path[k * self.scenario.fleet + unit] = c as u8;
                self.unit_choice(k, unit + 1, &advanced, value + profit - startup, total)?;
            }
        }
        Ok(())
    }

    fn path_to_schedule(&self, path: &[u8]) -> Schedule {
        let fleet = self.scenario.fleet;
        let mut units = vec![Vec::with_capacity(self.scenario.horizon); fleet];
        let mut states: Vec<UnitState> = self
            .scenario
            .initial_states
            .iter()
            .map(|s| UnitState {
                temp: s.temperature,
                hto: s.hto_moles,
                idle_run: if s.op_state == OpState::Idle {
                    self.params.min_idle_steps
                } else {
                    0
                },
                was_idle: s.op_state == OpState::Idle,
                prev_prod: None,
            })
            .collect();
        for k in 0..self.scenario.horizon {
            for i in 0..fleet {
                let choice = self.choices[path[k * fleet + i] as usize];
                let before = states[i];
                let (next, _, _) = self
                    .apply(k, &before, &choice)
                    .expect("stored path re-simulates feasibly");
                let current = if choice.state == OpState::Production {
                    physics::current_from_power(choice.p_ele, before.temp, self.params)
                } else {
                    0.0
                };
                let rate = physics::production_from_current(current, self.params);
                let react = physics::reaction_heat(current, before.temp, self.params);
                let target = self.params.max_temp - self.margins.temp_k;
                let cool = if choice.state == OpState::Idle {
                    0.0
                } else {
                    (react
                        - self.params.dissipation_conductance
                            * (before.temp - self.params.ambient_temp)
                        + choice.heat
                        - (target - before.temp) * self.params.heat_capacity
                            / self.scenario.step_s)
                        .clamp(
                            0.0,
                            physics::max_cooling(before.temp, self.params, choice.state),
                        )
                };
                units[i].push(UnitStep {
                    state: choice.state,
                    startup: before.was_idle && choice.state != OpState::Idle,
                    shutdown: !before.was_idle && choice.state == OpState::Idle,
                    p_ele_mw: choice.p_ele,
                    p_heat_mw: choice.heat,
                    p_cool_mw: cool,
                    prod_mol_s: rate,
                    temp_k: Some(before.temp),
                    hto_mol: Some(before.hto),
                });
                states[i] = next;
            }
        }
        Schedule {
            version: SCHEDULE_FORMAT_VERSION,
            scenario: self.scenario.name.clone(),
            fleet,
            horizon: self.scenario.horizon,
            step_s: self.scenario.step_s,
            units,
        }
    }
}
