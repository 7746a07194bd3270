//! Assembly of the plant scheduling MILP from a scenario, electrolyzer
//! parameters and a production-surface half-space set.
//!
//! Bilinear terms are linearized two ways: products of a binary and a real
//! variable get the standard big-M sandwich, and products of two reals go
//! through a binary expansion of the stack current
//! `I = sum_j 2^j * beta_j * dI + rem` whose bits are reused for `I*T`,
//! `I*I` and, scaled through the Faraday slope, for the oxygen-rate times
//! impurity product in the separator balance. The remainder products are
//! dropped; their worst-case contribution is bounded by the step sizes and
//! documented on [`LinearizationOptions`].

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::milp::{Meta, MilpModel, Sense, VarId, VarKind};
use crate::physics::{nm3_h_to_mol_s, ElectrolyzerParams, ElectrolyzerState, OpState};
use crate::surface::HalfspaceSet;

/// Scheduling problem instance: horizon, fleet and prices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantScenario {
    /// Identifier used in artifacts and comparison tables.
    pub name: String,
    /// Number of scheduling steps.
    pub horizon: usize,
    /// Step length [s].
    pub step_s: f64,
    /// Number of electrolyzers.
    pub fleet: usize,
    /// Available renewable power per step [MW].
    pub available_power: Vec<f64>,
    /// Hydrogen price [$/Nm3].
    pub h2_price: f64,
    /// Electric power price per step [$/MWh].
    pub power_price: Vec<f64>,
    /// Cost per startup [$].
    pub startup_cost: f64,
    /// Initial state of each unit.
    pub initial_states: Vec<ElectrolyzerState>,
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("horizon {0} does not match {1} length {2}")]
    LengthMismatch(usize, &'static str, usize),
    #[error("fleet {0} does not match initial_states length {1}")]
    FleetMismatch(usize, usize),
    #[error("{0} must be nonnegative, got {1}")]
    Negative(&'static str, f64),
    #[error("horizon must be at least 1")]
    EmptyHorizon,
}

impl PlantScenario {
    pub fn validate(&self) -> Result<(), ScenarioError> {
        if self.horizon == 0 {
            return Err(ScenarioError::EmptyHorizon);
        }
        if self.available_power.len() != self.horizon {
            return Err(ScenarioError::LengthMismatch(
                self.horizon,
                "available_power",
                self.available_power.len(),
            ));
        }
        if self.power_price.len() != self.horizon {
            return Err(ScenarioError::LengthMismatch(
                self.horizon,
                "power_price",
                self.power_price.len(),
            ));
        }
        if self.initial_states.len() != self.fleet {
            return Err(ScenarioError::FleetMismatch(
                self.fleet,
                self.initial_states.len(),
            ));
        }
        if self.step_s <= 0.0 {
            return Err(ScenarioError::Negative("step_s", self.step_s));
        }
        if self.h2_price < 0.0 {
            return Err(ScenarioError::Negative("h2_price", self.h2_price));
        }
        if self.startup_cost < 0.0 {
            return Err(ScenarioError::Negative("startup_cost", self.startup_cost));
        }
        for &p in &self.available_power {
            if p < 0.0 {
                return Err(ScenarioError::Negative("available_power", p));
            }
        }
        for &p in &self.power_price {
            if p < 0.0 {
                return Err(ScenarioError::Negative("power_price", p));
            }
        }
        Ok(())
    }

    /// Revenue coefficient for a production variable [$ per (mol/s)]:
    /// converts a molar rate held for one step into Nm3.
    pub fn h2_coeff(&self) -> f64 {
        self.h2_price * self.step_s * crate::physics::LITRES_PER_MOL / 1000.0
    }

    /// Cost coefficient for a power variable at step `k` [$ per MW].
    pub fn power_coeff(&self, k: usize) -> f64 {
        self.power_price[k] * self.step_s / 3600.0
    }
}

/// Discretization and big-M configuration for the bilinear reformulations.
///
/// The dropped remainder products are bounded per step by
/// `current_step * big_m_current` inside the squared-current term of the
/// reaction heat, and by `o2_step * big_m_hto * step_s /
/// hto_discharge_const` inside the separator balance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearizationOptions {
    /// Bit count of the current expansion.
    pub current_bits: usize,
    /// Current expansion step [A].
    pub current_step: f64,
    /// Bit count of the oxygen-rate expansion (shares the current bits).
    pub o2_bits: usize,
    /// Oxygen-rate expansion step [mol/s], `faraday_slope * current_step / 2`.
    pub o2_step: f64,
    /// Big-M for temperature products: the temperature cap.
    pub big_m_temp: f64,
    /// Big-M for current products: `2^current_bits * current_step`.
    pub big_m_current: f64,
    /// Big-M for impurity products: twice the impurity cap.
    pub big_m_hto: f64,
}

#[derive(Debug, Error)]
pub enum BuildError {
    #[error(
        "current discretization too small: 2^{bits} * {step} A = {span} A \
         cannot reach the maximum feasible current {needed} A"
    )]
    CurrentBitsTooSmall {
        bits: usize,
        step: f64,
        span: f64,
        needed: f64,
    },
    #[error("half-space set is empty")]
    EmptyHalfspaces,
    #[error("scenario invalid: {0}")]
    Scenario(#[from] ScenarioError),
    #[error("nominal temperature {0} K outside [{1}, {2}] K")]
    BadNominalTemp(f64, f64, f64),
}

impl LinearizationOptions {
    /// Spec defaults: 7 bits, sized so the grid spans 1.05x the current at
    /// rated power and maximum temperature.
    pub fn derive(params: &ElectrolyzerParams) -> Self {
        let bits = 7;
        let i_hot = crate::physics::current_from_power(params.rated_power, params.max_temp, params);
        let step = 1.05 * i_hot / (1 << bits) as f64;
        let slope = params.faraday_slope();
        LinearizationOptions {
            current_bits: bits,
            current_step: step,
            o2_bits: bits,
            o2_step: slope * step / 2.0,
            big_m_temp: params.max_temp,
            big_m_current: (1 << bits) as f64 * step,
            big_m_hto: 2.0 * params.hto_limit * params.o2_holdup,
        }
    }

    fn validate(&self, max_current: f64) -> Result<(), BuildError> {
        let span = (1u64 << self.current_bits) as f64 * self.current_step;
        if span + 1e-9 < max_current {
            return Err(BuildError::CurrentBitsTooSmall {
                bits: self.current_bits,
                step: self.current_step,
                span,
                needed: max_current,
            });
        }
        Ok(())
    }
}

/// Variable handles for one model build, indexed `[unit][step]`.
pub struct PlantVars {
    pub on: Vec<Vec<VarId>>,
    pub standby: Vec<Vec<VarId>>,
    pub idle: Vec<Vec<VarId>>,
    pub startup: Vec<Vec<VarId>>,
    pub shutdown: Vec<Vec<VarId>>,
    pub p_ele: Vec<Vec<VarId>>,
    pub p_heat: Vec<Vec<VarId>>,
    pub p_cool: Vec<Vec<VarId>>,
    pub p_tot: Vec<Vec<VarId>>,
    pub prod: Vec<Vec<VarId>>,
    /// Present only in the process-aware model.
    pub temp: Vec<Vec<VarId>>,
    pub current: Vec<Vec<VarId>>,
    pub current_rem: Vec<Vec<VarId>>,
    pub hto: Vec<Vec<VarId>>,
    pub d_on_temp: Vec<Vec<VarId>>,
    pub d_idle_temp: Vec<Vec<VarId>>,
    /// `[unit][step][bit]`.
    pub bits: Vec<Vec<Vec<VarId>>>,
    pub d_bit_temp: Vec<Vec<Vec<VarId>>>,
    pub d_bit_current: Vec<Vec<Vec<VarId>>>,
    pub d_bit_hto: Vec<Vec<Vec<VarId>>>,
}

/// Systematic variable names shared by the builder and schedule extraction.
pub mod names {
    pub fn unit_step(prefix: &str, i: usize, k: usize) -> String {
        format!("{prefix}_i{i}_k{k}")
    }
    pub fn unit_step_bit(prefix: &str, i: usize, k: usize, j: usize) -> String {
        format!("{prefix}{j}_i{i}_k{k}")
    }
    pub const ON: &str = "on";
    pub const STANDBY: &str = "sb";
    pub const IDLE: &str = "id";
    pub const STARTUP: &str = "su";
    pub const SHUTDOWN: &str = "sd";
    pub const P_ELE: &str = "pele";
    pub const P_HEAT: &str = "pheat";
    pub const P_COOL: &str = "pcool";
    pub const P_TOT: &str = "ptot";
    pub const PROD: &str = "prod";
    pub const TEMP: &str = "temp";
    pub const CURRENT: &str = "cur";
    pub const CURRENT_REM: &str = "crem";
    pub const HTO: &str = "hto";
    pub const D_ON_TEMP: &str = "dOnT";
    pub const D_IDLE_TEMP: &str = "dIdT";
    pub const BIT: &str = "bI";
    pub const D_BIT_TEMP: &str = "dIT";
    pub const D_BIT_CURRENT: &str = "dII";
    pub const D_BIT_HTO: &str = "dIN";
}

/// Maximum production rate representable in the model [mol/s]: the envelope
/// value at rated power and maximum temperature (the envelope dominates the
/// physical surface, so this also bounds the relaxation).
pub fn prod_upper_bound(params: &ElectrolyzerParams, halfspaces: &HalfspaceSet) -> f64 {
    halfspaces.envelope_rate(params.rated_power, params.max_temp)
}

fn empty_grid(fleet: usize) -> Vec<Vec<VarId>> {
    vec![Vec::new(); fleet]
}

/// Declares every variable of the process-aware model in deterministic
/// order: unit-major, step-minor, fixed kind order within a step.
fn declare_variables(
    model: &mut MilpModel,
    scenario: &PlantScenario,
    params: &ElectrolyzerParams,
    halfspaces: &HalfspaceSet,
    options: &LinearizationOptions,
) -> PlantVars {
    use names::*;
    let n = scenario.horizon;
    let fleet = scenario.fleet;
    let prod_max = prod_upper_bound(params, halfspaces);
    let bop_max = params.max_heating_power / params.heating_eff
        + params.cooling_conductance * (params.max_temp - params.coolant_temp)
            / params.cooling_eff
        + params.aux_power;
    let cool_max = params.cooling_conductance * (params.max_temp - params.coolant_temp);
    let mut vars = PlantVars {
        on: empty_grid(fleet),
        standby: empty_grid(fleet),
        idle: empty_grid(fleet),
        startup: empty_grid(fleet),
        shutdown: empty_grid(fleet),
        p_ele: empty_grid(fleet),
        p_heat: empty_grid(fleet),
        p_cool: empty_grid(fleet),
        p_tot: empty_grid(fleet),
        prod: empty_grid(fleet),
        temp: empty_grid(fleet),
        current: empty_grid(fleet),
        current_rem: empty_grid(fleet),
        hto: empty_grid(fleet),
        d_on_temp: empty_grid(fleet),
        d_idle_temp: empty_grid(fleet),
        bits: vec![Vec::new(); fleet],
        d_bit_temp: vec![Vec::new(); fleet],
        d_bit_current: vec![Vec::new(); fleet],
        d_bit_hto: vec![Vec::new(); fleet],
    };
    for i in 0..fleet {
        for k in 0..n {
            let init = &scenario.initial_states[i];
            let m = |tag: &str| Meta::new(i, k, tag);
            vars.on[i].push(model.add_binary(unit_step(ON, i, k), m("state")));
            vars.standby[i].push(model.add_binary(unit_step(STANDBY, i, k), m("state")));
            vars.idle[i].push(model.add_binary(unit_step(IDLE, i, k), m("state")));
            vars.startup[i].push(model.add_binary(unit_step(STARTUP, i, k), m("state")));
            vars.shutdown[i].push(model.add_binary(unit_step(SHUTDOWN, i, k), m("state")));
            let mut bits = Vec::new();
            for j in 0..options.current_bits {
                bits.push(model.add_binary(unit_step_bit(BIT, i, k, j), m("current_expansion")));
            }
            vars.bits[i].push(bits);
            vars.p_ele[i].push(model.add_var(
                unit_step(P_ELE, i, k),
                VarKind::Continuous,
                0.0,
                params.rated_power,
                m("power"),
            ));
            vars.p_heat[i].push(model.add_var(
                unit_step(P_HEAT, i, k),
                VarKind::Continuous,
                0.0,
                params.max_heating_power,
                m("power"),
            ));
            vars.p_cool[i].push(model.add_var(
                unit_step(P_COOL, i, k),
                VarKind::Continuous,
                0.0,
                cool_max,
                m("power"),
            ));
            vars.p_tot[i].push(model.add_var(
                unit_step(P_TOT, i, k),
                VarKind::Continuous,
                0.0,
                params.rated_power + bop_max,
                m("power"),
            ));
            vars.prod[i].push(model.add_var(
                unit_step(PROD, i, k),
                VarKind::Continuous,
                0.0,
                prod_max,
                m("production"),
            ));
            // the step-0 state is the scenario's initial condition, pinned
            let (t_lo, t_hi) = if k == 0 {
                (init.temperature, init.temperature)
            } else {
                (params.coolant_temp, params.max_temp)
            };
            vars.temp[i].push(model.add_var(
                unit_step(TEMP, i, k),
                VarKind::Continuous,
                t_lo,
                t_hi,
                m(if k == 0 { "initial_state" } else { "temperature" }),
            ));
            vars.current[i].push(model.add_var(
                unit_step(CURRENT, i, k),
                VarKind::Continuous,
                0.0,
                options.big_m_current,
                m("current"),
            ));
            vars.current_rem[i].push(model.add_var(
                unit_step(CURRENT_REM, i, k),
                VarKind::Continuous,
                0.0,
                options.current_step,
                m("current_expansion"),
            ));
            let (h_lo, h_hi) = if k == 0 {
                (init.hto_moles, init.hto_moles)
            } else {
                (0.0, options.big_m_hto)
            };
            vars.hto[i].push(model.add_var(
                unit_step(HTO, i, k),
                VarKind::Continuous,
                h_lo,
                h_hi,
                m(if k == 0 { "initial_state" } else { "impurity" }),
            ));
            vars.d_on_temp[i].push(model.add_var(
                unit_step(D_ON_TEMP, i, k),
                VarKind::Continuous,
                0.0,
                options.big_m_temp,
                m("product_on_temp"),
            ));
            vars.d_idle_temp[i].push(model.add_var(
                unit_step(D_IDLE_TEMP, i, k),
                VarKind::Continuous,
                0.0,
                options.big_m_temp,
                m("product_idle_temp"),
            ));
            let mut dt = Vec::new();
            let mut dc = Vec::new();
            let mut dh = Vec::new();
            for j in 0..options.current_bits {
                dt.push(model.add_var(
                    unit_step_bit(D_BIT_TEMP, i, k, j),
                    VarKind::Continuous,
                    0.0,
                    options.big_m_temp,
                    m("product_bit_temp"),
                ));
                dc.push(model.add_var(
                    unit_step_bit(D_BIT_CURRENT, i, k, j),
                    VarKind::Continuous,
                    0.0,
                    options.big_m_current,
                    m("product_bit_current"),
                ));
                dh.push(model.add_var(
                    unit_step_bit(D_BIT_HTO, i, k, j),
                    VarKind::Continuous,
                    0.0,
                    options.big_m_hto,
                    m("product_bit_hto"),
                ));
            }
            vars.d_bit_temp[i].push(dt);
            vars.d_bit_current[i].push(dc);
            vars.d_bit_hto[i].push(dh);
        }
    }
    vars
}

/// Big-M sandwich pinning `delta = beta * x` for `x` in `[x_lo, big_m]`:
/// `x - M(1-beta) <= delta <= x - x_lo(1-beta)` and
/// `x_lo*beta <= delta <= M*beta`.
///
/// The per-side constants are the variable's own bounds, the tightest
/// values that keep the sandwich valid, so the relaxation is the McCormick
/// hull of the product; at binary `beta` it still pins `delta` exactly.
fn add_product_sandwich(
    model: &mut MilpModel,
    name: &str,
    delta: VarId,
    beta: VarId,
    x: VarId,
    x_lo: f64,
    big_m: f64,
    meta: Meta,
) {
    model.add_constraint(
        format!("{name}a"),
        vec![(delta, 1.0), (x, -1.0), (beta, -x_lo)],
        Sense::Le,
        -x_lo,
        meta.clone(),
    );
    model.add_constraint(
        format!("{name}b"),
        vec![(x, 1.0), (delta, -1.0), (beta, big_m)],
        Sense::Le,
        big_m,
        meta.clone(),
    );
    model.add_constraint(
        format!("{name}c"),
        vec![(delta, 1.0), (beta, -big_m)],
        Sense::Le,
        0.0,
        meta.clone(),
    );
    model.add_constraint(
        format!("{name}d"),
        vec![(delta, -1.0), (beta, x_lo)],
        Sense::Le,
        0.0,
        meta,
    );
}

/// State switching: one-hot states, startup/shutdown detection against the
/// previous step (the scenario's initial state is the step `-1` history,
/// assumed to have held indefinitely), and the minimum idle gap expressed as
/// startup/shutdown exclusion over the gap window.
pub fn add_state_constraints(
    model: &mut MilpModel,
    vars: &PlantVars,
    scenario: &PlantScenario,
    params: &ElectrolyzerParams,
) {
    use names::unit_step;
    for i in 0..scenario.fleet {
        let init_idle = if scenario.initial_states[i].op_state == OpState::Idle {
            1.0
        } else {
            0.0
        };
        for k in 0..scenario.horizon {
            let m = |tag: &str| Meta::new(i, k, tag);
            model.add_constraint(
                unit_step("onehot", i, k),
                vec![
                    (vars.on[i][k], 1.0),
                    (vars.standby[i][k], 1.0),
                    (vars.idle[i][k], 1.0),
                ],
                Sense::Eq,
                1.0,
                m("one_hot"),
            );
            // startup: leaving idle
            let mut terms = vec![
                (vars.on[i][k], 1.0),
                (vars.standby[i][k], 1.0),
                (vars.startup[i][k], -1.0),
            ];
            let rhs = if k == 0 {
                1.0 - init_idle
            } else {
                terms.push((vars.idle[i][k - 1], 1.0));
                1.0
            };
            model.add_constraint(
                unit_step("startup", i, k),
                terms,
                Sense::Le,
                rhs,
                m("startup_detect"),
            );
            // shutdown: entering idle
            let mut terms = vec![(vars.idle[i][k], 1.0), (vars.shutdown[i][k], -1.0)];
            let rhs = if k == 0 {
                init_idle
            } else {
                terms.push((vars.on[i][k - 1], 1.0));
                terms.push((vars.standby[i][k - 1], 1.0));
                1.0
            };
            model.add_constraint(
                unit_step("shutdown", i, k),
                terms,
                Sense::Le,
                rhs,
                m("shutdown_detect"),
            );
            // a shutdown forbids startups for the next min_idle_steps - 1 steps
            for j in 1..params.min_idle_steps {
                if j <= k {
                    model.add_constraint(
                        format!("minidle{j}_i{i}_k{k}"),
                        vec![(vars.startup[i][k], 1.0), (vars.shutdown[i][k - j], 1.0)],
                        Sense::Le,
                        1.0,
                        m("min_idle"),
                    );
                }
            }
        }
    }
}

/// Production envelope, on-state gating and ramp limits.
pub fn add_production_constraints(
    model: &mut MilpModel,
    vars: &PlantVars,
    scenario: &PlantScenario,
    params: &ElectrolyzerParams,
    halfspaces: &HalfspaceSet,
    options: &LinearizationOptions,
) -> Result<(), BuildError> {
    use names::unit_step;
    if halfspaces.facets.is_empty() {
        return Err(BuildError::EmptyHalfspaces);
    }
    let prod_max = prod_upper_bound(params, halfspaces);
    let ramp_up = nm3_h_to_mol_s(params.ramp_up);
    let ramp_down = nm3_h_to_mol_s(params.ramp_down);
    for i in 0..scenario.fleet {
        for k in 0..scenario.horizon {
            let m = |tag: &str| Meta::new(i, k, tag);
            for (f, facet) in halfspaces.facets.iter().enumerate() {
                model.add_constraint(
                    format!("fac{f}_i{i}_k{k}"),
                    vec![
                        (vars.prod[i][k], 1.0),
                        (vars.p_ele[i][k], -facet[0]),
                        (vars.d_on_temp[i][k], -facet[1]),
                        (vars.on[i][k], -facet[2]),
                    ],
                    Sense::Le,
                    0.0,
                    m("production_facet"),
                );
            }
            // facets that stay nonnegative over the whole operating box also
            // hold unconditionally against the real temperature (production
            // is zero when off); they stop the relaxation from pairing a
            // fractional on-state with a temperature it never reached
            for (f, facet) in halfspaces.facets.iter().enumerate() {
                if facet_box_min(facet, params) >= 0.0 {
                    model.add_constraint(
                        format!("facu{f}_i{i}_k{k}"),
                        vec![
                            (vars.prod[i][k], 1.0),
                            (vars.p_ele[i][k], -facet[0]),
                            (vars.temp[i][k], -facet[1]),
                        ],
                        Sense::Le,
                        facet[2],
                        m("relaxation_cut"),
                    );
                }
            }
            model.add_constraint(
                unit_step("prodcap", i, k),
                vec![(vars.prod[i][k], 1.0), (vars.on[i][k], -prod_max)],
                Sense::Le,
                0.0,
                m("production_gate"),
            );
            if k > 0 {
                model.add_constraint(
                    unit_step("rampup", i, k),
                    vec![(vars.prod[i][k], 1.0), (vars.prod[i][k - 1], -1.0)],
                    Sense::Le,
                    ramp_up,
                    m("ramp_up"),
                );
                model.add_constraint(
                    unit_step("rampdn", i, k),
                    vec![(vars.prod[i][k], 1.0), (vars.prod[i][k - 1], -1.0)],
                    Sense::Ge,
                    ramp_down,
                    m("ramp_down"),
                );
            }
            add_product_sandwich(
                model,
                &unit_step("sOnT", i, k),
                vars.d_on_temp[i][k],
                vars.on[i][k],
                vars.temp[i][k],
                params.coolant_temp,
                options.big_m_temp,
                m("product_on_temp"),
            );
        }
    }
    Ok(())
}

/// Per-unit power balance, electrolytic power gating and the fleet cap
/// against the available renewable power.
pub fn add_power_constraints(
    model: &mut MilpModel,
    vars: &PlantVars,
    scenario: &PlantScenario,
    params: &ElectrolyzerParams,
) {
    use names::unit_step;
    for i in 0..scenario.fleet {
        for k in 0..scenario.horizon {
            let m = |tag: &str| Meta::new(i, k, tag);
            // heater and cooler are forced to zero while idle by their own
            // bounds, so only the constant auxiliary draw needs gating
            model.add_constraint(
                unit_step("pdef", i, k),
                vec![
                    (vars.p_tot[i][k], 1.0),
                    (vars.p_ele[i][k], -1.0),
                    (vars.p_heat[i][k], -1.0 / params.heating_eff),
                    (vars.p_cool[i][k], -1.0 / params.cooling_eff),
                    (vars.on[i][k], -params.aux_power),
                    (vars.standby[i][k], -params.aux_power),
                ],
                Sense::Eq,
                0.0,
                m("power_balance"),
            );
            model.add_constraint(
                unit_step("pelecap", i, k),
                vec![
                    (vars.p_ele[i][k], 1.0),
                    (vars.on[i][k], -params.rated_power),
                ],
                Sense::Le,
                0.0,
                m("electrolytic_gate"),
            );
        }
    }
    for k in 0..scenario.horizon {
        let terms: Vec<(VarId, f64)> = (0..scenario.fleet)
            .map(|i| (vars.p_tot[i][k], 1.0))
            .collect();
        model.add_constraint(
            format!("fleet_k{k}"),
            terms,
            Sense::Le,
            scenario.available_power[k],
            Meta::step_only(k, "fleet_cap"),
        );
    }
}

/// Thermal dynamics, heater/cooler limits, the temperature cap, the voltage
/// cap, the Faraday link and the current expansion with its products.
pub fn add_thermal_constraints(
    model: &mut MilpModel,
    vars: &PlantVars,
    scenario: &PlantScenario,
    params: &ElectrolyzerParams,
    options: &LinearizationOptions,
) -> Result<(), BuildError> {
    use names::{unit_step, unit_step_bit};
    let c = &params.voltage_coeffs;
    let slope = params.faraday_slope();
    let h_over_c = scenario.step_s / params.heat_capacity;
    for i in 0..scenario.fleet {
        for k in 0..scenario.horizon {
            let m = |tag: &str| Meta::new(i, k, tag);
            model.add_constraint(
                unit_step("heatcap", i, k),
                vec![
                    (vars.p_heat[i][k], 1.0),
                    (vars.on[i][k], -params.max_heating_power),
                    (vars.standby[i][k], -params.max_heating_power),
                ],
                Sense::Le,
                0.0,
                m("heater_limit"),
            );
            // cooler: p_cool <= c_cool * ((1 - idle) * temp - coolant * (1 - idle))
            model.add_constraint(
                unit_step("coolcap", i, k),
                vec![
                    (vars.p_cool[i][k], 1.0),
                    (vars.temp[i][k], -params.cooling_conductance),
                    (vars.d_idle_temp[i][k], params.cooling_conductance),
                    (vars.on[i][k], params.cooling_conductance * params.coolant_temp),
                    (
                        vars.standby[i][k],
                        params.cooling_conductance * params.coolant_temp,
                    ),
                ],
                Sense::Le,
                0.0,
                m("cooler_limit"),
            );
            add_product_sandwich(
                model,
                &unit_step("sIdT", i, k),
                vars.d_idle_temp[i][k],
                vars.idle[i][k],
                vars.temp[i][k],
                params.coolant_temp,
                options.big_m_temp,
                m("product_idle_temp"),
            );
            model.add_constraint(
                unit_step("volt", i, k),
                vec![(vars.temp[i][k], c.a1), (vars.current[i][k], c.a2)],
                Sense::Le,
                params.max_cell_voltage - c.a0,
                m("voltage_cap"),
            );
            model.add_constraint(
                unit_step("tcap", i, k),
                vec![(vars.temp[i][k], 1.0)],
                Sense::Le,
                params.max_temp,
                m("temp_cap"),
            );
            model.add_constraint(
                unit_step("farad", i, k),
                vec![(vars.prod[i][k], 1.0), (vars.current[i][k], -slope)],
                Sense::Eq,
                0.0,
                m("faraday_link"),
            );
            let mut terms = vec![
                (vars.current[i][k], 1.0),
                (vars.current_rem[i][k], -1.0),
            ];
            for j in 0..options.current_bits {
                terms.push((
                    vars.bits[i][k][j],
                    -((1u64 << j) as f64) * options.current_step,
                ));
            }
            model.add_constraint(
                unit_step("curexp", i, k),
                terms,
                Sense::Eq,
                0.0,
                m("current_expansion"),
            );
            for j in 0..options.current_bits {
                add_product_sandwich(
                    model,
                    &unit_step_bit("sIT", i, k, j),
                    vars.d_bit_temp[i][k][j],
                    vars.bits[i][k][j],
                    vars.temp[i][k],
                    params.coolant_temp,
                    options.big_m_temp,
                    m("product_bit_temp"),
                );
                add_product_sandwich(
                    model,
                    &unit_step_bit("sII", i, k, j),
                    vars.d_bit_current[i][k][j],
                    vars.bits[i][k][j],
                    vars.current[i][k],
                    0.0,
                    options.big_m_current,
                    m("product_bit_current"),
                );
            }
            add_expansion_cuts(model, vars, params, options, i, k);
            if k > 0 {
                // temp_k = temp_{k-1} + (h/C) * (p_react - c_diss*(temp - T_am) - p_cool + p_heat)
                // p_react [MW] = 1e-6 * n_cells * ((a0 - U_th)*I + a1*(I*T) + a2*(I*I))
                // with I*T and I*I through the expansion products at k-1
                let w = 1e-6 * params.n_cells;
                let mut terms = vec![
                    (vars.temp[i][k], 1.0),
                    (
                        vars.temp[i][k - 1],
                        -1.0 + h_over_c * params.dissipation_conductance,
                    ),
                    (
                        vars.current[i][k - 1],
                        -h_over_c * w * (c.a0 - params.thermal_neutral_voltage),
                    ),
                    (vars.p_cool[i][k - 1], h_over_c),
                    (vars.p_heat[i][k - 1], -h_over_c),
                ];
                for j in 0..options.current_bits {
                    let weight = (1u64 << j) as f64 * options.current_step;
                    terms.push((vars.d_bit_temp[i][k - 1][j], -h_over_c * w * c.a1 * weight));
                    terms.push((
                        vars.d_bit_current[i][k - 1][j],
                        -h_over_c * w * c.a2 * weight,
                    ));
                }
                model.add_constraint(
                    unit_step("tdyn", i, k),
                    terms,
                    Sense::Eq,
                    h_over_c * params.dissipation_conductance * params.ambient_temp,
                    m("temp_dynamics"),
                );
            }
        }
    }
    let max_current = prod_upper_bound_from_model(model, vars, scenario) / slope;
    options.validate(max_current)?;
    Ok(())
}

/// Number of tangent supports under the squared-current expression.
const SQUARE_TANGENTS: usize = 8;

/// Minimum of `A*P + B*T + C` over `[0, rated] x [coolant, max_temp]`.
pub fn facet_box_min(facet: &[f64; 3], params: &ElectrolyzerParams) -> f64 {
    let p = if facet[0] < 0.0 { params.rated_power } else { 0.0 };
    let t = if facet[1] < 0.0 {
        params.max_temp
    } else {
        params.coolant_temp
    };
    facet[0] * p + facet[1] * t + facet[2]
}

/// Valid inequalities that sharpen the continuous relaxation of the
/// expansion products. Every cut holds with equality machinery at integral
/// bit values, so the model's solution set is unchanged; they exist to stop
/// the relaxation from under- or over-stating the reaction heat and the
/// impurity flushing rate through fractional bits.
///
/// With `G = sum_j 2^j dI beta_j = I - rem`:
/// squared current `S = sum_j 2^j dI d_bit_current_j = G*I`:
///   `S >= (2 I_m - dI) I - I_m^2` (parabola tangents shifted by the
///   remainder), `S <= I_max I`, and per bit `d_bit_current_j >= 2^j dI
///   beta_j`;
/// temperature product `P = sum_j 2^j dI d_bit_temp_j = G*T`:
///   McCormick aggregates of `G*T` over `[0, I_max] x [T_cool, T_max]`
///   widened by `dI` on the lower side;
/// impurity product `D = sum_j 2^j dO2 d_bit_hto_j = o2_grid * n`:
///   `D <= o2_span * n` and `D <= n_max * o2` so the relaxation cannot
///   flush the separator faster than full-rate operation would.
fn add_expansion_cuts(
    model: &mut MilpModel,
    vars: &PlantVars,
    params: &ElectrolyzerParams,
    options: &LinearizationOptions,
    i: usize,
    k: usize,
) {
    let m = Meta::new(i, k, "relaxation_cut");
    let di = options.current_step;
    let i_max = options.big_m_current;
    let t_lo = params.coolant_temp;
    let t_hi = params.max_temp;
    let weight = |j: usize| (1u64 << j) as f64 * di;
    let sq_terms = |sign: f64| -> Vec<(VarId, f64)> {
        (0..options.current_bits)
            .map(|j| (vars.d_bit_current[i][k][j], sign * weight(j)))
            .collect()
    };
    let it_terms = |sign: f64| -> Vec<(VarId, f64)> {
        (0..options.current_bits)
            .map(|j| (vars.d_bit_temp[i][k][j], sign * weight(j)))
            .collect()
    };
    let cur = vars.current[i][k];
    let temp = vars.temp[i][k];
    // S >= tangents of I^2 - dI*I
    for t in 1..SQUARE_TANGENTS {
        let i0 = i_max * t as f64 / SQUARE_TANGENTS as f64;
        let mut terms = sq_terms(1.0);
        terms.push((cur, -(2.0 * i0 - di)));
        model.add_constraint(
            format!("cSqT{t}_i{i}_k{k}"),
            terms,
            Sense::Ge,
            -i0 * i0,
            m.clone(),
        );
    }
    // S <= I_max * I
    let mut terms = sq_terms(1.0);
    terms.push((cur, -i_max));
    model.add_constraint(format!("cSqU_i{i}_k{k}"), terms, Sense::Le, 0.0, m.clone());
    // per-bit floor: delta_j >= 2^j dI beta_j
    for j in 0..options.current_bits {
        model.add_constraint(
            format!("cBf{j}_i{i}_k{k}"),
            vec![
                (vars.d_bit_current[i][k][j], 1.0),
                (vars.bits[i][k][j], -weight(j)),
            ],
            Sense::Ge,
            0.0,
            m.clone(),
        );
    }
    // P <= T_hi * I  and  P <= I_max*T + T_lo*I - I_max*T_lo
    let mut terms = it_terms(1.0);
    terms.push((cur, -t_hi));
    model.add_constraint(format!("cItU1_i{i}_k{k}"), terms, Sense::Le, 0.0, m.clone());
    let mut terms = it_terms(1.0);
    terms.push((temp, -i_max));
    terms.push((cur, -t_lo));
    model.add_constraint(
        format!("cItU2_i{i}_k{k}"),
        terms,
        Sense::Le,
        -i_max * t_lo,
        m.clone(),
    );
    // P >= T_lo*(I - dI)  and  P >= T_hi*(I - dI) + I_max*T - I_max*T_hi
    let mut terms = it_terms(1.0);
    terms.push((cur, -t_lo));
    model.add_constraint(
        format!("cItL1_i{i}_k{k}"),
        terms,
        Sense::Ge,
        -t_lo * di,
        m.clone(),
    );
    let mut terms = it_terms(1.0);
    terms.push((cur, -t_hi));
    terms.push((temp, -i_max));
    model.add_constraint(
        format!("cItL2_i{i}_k{k}"),
        terms,
        Sense::Ge,
        -i_max * t_hi - t_hi * di,
        m.clone(),
    );
    // D <= o2_span * n  and  D <= n_max * (o2 slope) * I
    let o2w = |j: usize| (1u64 << j) as f64 * options.o2_step;
    let o2_span = ((1u64 << options.current_bits) - 1) as f64 * options.o2_step;
    let mut terms: Vec<(VarId, f64)> = (0..options.current_bits)
        .map(|j| (vars.d_bit_hto[i][k][j], o2w(j)))
        .collect();
    terms.push((vars.hto[i][k], -o2_span));
    model.add_constraint(format!("cInU1_i{i}_k{k}"), terms, Sense::Le, 0.0, m.clone());
    let mut terms: Vec<(VarId, f64)> = (0..options.current_bits)
        .map(|j| (vars.d_bit_hto[i][k][j], o2w(j)))
        .collect();
    terms.push((cur, -options.big_m_hto * params.faraday_slope() / 2.0));
    model.add_constraint(format!("cInU2_i{i}_k{k}"), terms, Sense::Le, 0.0, m);
}

fn prod_upper_bound_from_model(
    model: &MilpModel,
    vars: &PlantVars,
    scenario: &PlantScenario,
) -> f64 {
    let mut max = 0.0f64;
    for i in 0..scenario.fleet {
        for k in 0..scenario.horizon {
            max = max.max(model.vars[vars.prod[i][k].0].upper);
        }
    }
    max
}

/// Separator impurity balance and the impurity cap. The oxygen rate is half
/// the hydrogen rate, i.e. linear in the stack current, so its binary
/// expansion reuses the current bits scaled by the Faraday slope.
pub fn add_hto_constraints(
    model: &mut MilpModel,
    vars: &PlantVars,
    scenario: &PlantScenario,
    params: &ElectrolyzerParams,
    options: &LinearizationOptions,
) {
    use names::{unit_step, unit_step_bit};
    let cap = params.hto_limit * params.o2_holdup;
    let h = scenario.step_s;
    let o2_per_bit = options.o2_step; // mol/s of O2 per unit of a bit's delta
    for i in 0..scenario.fleet {
        for k in 0..scenario.horizon {
            let m = |tag: &str| Meta::new(i, k, tag);
            for j in 0..options.current_bits {
                add_product_sandwich(
                    model,
                    &unit_step_bit("sIN", i, k, j),
                    vars.d_bit_hto[i][k][j],
                    vars.bits[i][k][j],
                    vars.hto[i][k],
                    0.0,
                    options.big_m_hto,
                    m("product_bit_hto"),
                );
            }
            model.add_constraint(
                unit_step("htocap", i, k),
                vec![(vars.hto[i][k], 1.0)],
                Sense::Le,
                cap,
                m("hto_cap"),
            );
            if k > 0 {
                // hto_k = hto_{k-1} + h*(inflow*on - o2_rate*hto/c_out) at k-1
                let mut terms = vec![
                    (vars.hto[i][k], 1.0),
                    (vars.hto[i][k - 1], -1.0),
                    (vars.on[i][k - 1], -h * params.hto_inflow),
                ];
                for j in 0..options.current_bits {
                    let weight = (1u64 << j) as f64 * o2_per_bit;
                    terms.push((
                        vars.d_bit_hto[i][k - 1][j],
                        h * weight / params.hto_discharge_const,
                    ));
                }
                model.add_constraint(
                    unit_step("hdyn", i, k),
                    terms,
                    Sense::Eq,
                    0.0,
                    m("hto_dynamics"),
                );
            }
        }
    }
}

/// Profit objective: hydrogen revenue minus energy cost minus startup cost.
pub fn set_objective(model: &mut MilpModel, vars: &PlantVars, scenario: &PlantScenario) {
    let h2 = scenario.h2_coeff();
    for i in 0..scenario.fleet {
        for k in 0..scenario.horizon {
            model.set_objective_coeff(vars.prod[i][k], h2);
            model.set_objective_coeff(vars.p_tot[i][k], -scenario.power_coeff(k));
            model.set_objective_coeff(vars.startup[i][k], -scenario.startup_cost);
        }
    }
}

/// Builds the full process-aware scheduling model.
///
/// Sizes for fleet `E`, horizon `N`, `F` facets (of which `Fu` stay
/// nonnegative over the operating box), `B` current bits and minimum idle
/// gap `G`:
/// variables = `E*N*(16 + 4*B)` of which `E*N*(5 + B)` binary;
/// rows = `E*(N*(35 + F + Fu + 13*B) + 4*(N-1) + sum_{k=1}^{N-1} min(k, G-1)) + N`
/// plus `E-1` unit-ordering rows when all initial states are identical
/// (per step: 3 state rows, `F` gated plus `Fu` ungated facets, production
/// gate, power balance, electrolytic gate, heater/cooler limits, voltage
/// and temperature caps, Faraday link, expansion definition, impurity cap,
/// `4*(2 + 3*B)` sandwich rows and `14 + B` relaxation cuts; per
/// transition: two ramp rows and the two dynamics rows; plus one fleet row
/// per step).
pub fn build_model(
    scenario: &PlantScenario,
    params: &ElectrolyzerParams,
    halfspaces: &HalfspaceSet,
    options: &LinearizationOptions,
) -> Result<MilpModel, BuildError> {
    scenario.validate()?;
    if halfspaces.facets.is_empty() {
        return Err(BuildError::EmptyHalfspaces);
    }
    let mut model = MilpModel::new(&model_name(&scenario.name, "plant"));
    let vars = declare_variables(&mut model, scenario, params, halfspaces, options);
    add_state_constraints(&mut model, &vars, scenario, params);
    add_production_constraints(&mut model, &vars, scenario, params, halfspaces, options)?;
    add_power_constraints(&mut model, &vars, scenario, params);
    add_thermal_constraints(&mut model, &vars, scenario, params, options)?;
    add_hto_constraints(&mut model, &vars, scenario, params, options);
    add_symmetry_ordering(&mut model, &vars, scenario);
    set_objective(&mut model, &vars, scenario);
    debug_assert!(model.validate().is_ok());
    Ok(model)
}

/// For fleets of interchangeable units (identical initial states), requires
/// units sorted by total scheduled production. Any assignment can be
/// unit-permuted into this order, so at least one optimum survives while
/// the solver stops exploring relabelings.
fn add_symmetry_ordering(model: &mut MilpModel, vars: &PlantVars, scenario: &PlantScenario) {
    let identical = scenario
        .initial_states
        .windows(2)
        .all(|w| w[0] == w[1]);
    if !identical || scenario.fleet < 2 {
        return;
    }
    for i in 0..scenario.fleet - 1 {
        let mut terms = Vec::with_capacity(2 * scenario.horizon);
        for k in 0..scenario.horizon {
            terms.push((vars.prod[i][k], 1.0));
            terms.push((vars.prod[i + 1][k], -1.0));
        }
        model.add_constraint(
            format!("symord_i{i}"),
            terms,
            Sense::Ge,
            0.0,
            Meta::global("symmetry_order"),
        );
    }
}

fn model_name(scenario: &str, kind: &str) -> String {
    let safe: String = scenario
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() { c } else { '_' })
        .collect();
    format!("{safe}_{kind}")
}

/// Builds the traditional constant-constraint model: state switching, ramp,
/// power balance and fleet cap, production from the half-spaces frozen at
/// `nominal_temp`, and a minimum-load floor at the calibrated steady-state
/// load. No thermal or impurity dynamics.
pub fn build_baseline_model(
    scenario: &PlantScenario,
    params: &ElectrolyzerParams,
    halfspaces: &HalfspaceSet,
    nominal_temp: f64,
) -> Result<MilpModel, BuildError> {
    use names::*;
    scenario.validate()?;
    if halfspaces.facets.is_empty() {
        return Err(BuildError::EmptyHalfspaces);
    }
    if nominal_temp < params.ambient_temp || nominal_temp > params.max_temp {
        return Err(BuildError::BadNominalTemp(
            nominal_temp,
            params.ambient_temp,
            params.max_temp,
        ));
    }
    let min_load = crate::physics::min_steady_load(params).unwrap_or(0.0);
    let mut model = MilpModel::new(&model_name(&scenario.name, "baseline"));
    let n = scenario.horizon;
    let fleet = scenario.fleet;
    let prod_max = prod_upper_bound(params, halfspaces);
    let bop_max = params.max_heating_power / params.heating_eff
        + params.cooling_conductance * (params.max_temp - params.coolant_temp)
            / params.cooling_eff
        + params.aux_power;
    let cool_max = params.cooling_conductance * (nominal_temp - params.coolant_temp).max(0.0);
    let mut vars = PlantVars {
        on: empty_grid(fleet),
        standby: empty_grid(fleet),
        idle: empty_grid(fleet),
        startup: empty_grid(fleet),
        shutdown: empty_grid(fleet),
        p_ele: empty_grid(fleet),
        p_heat: empty_grid(fleet),
        p_cool: empty_grid(fleet),
        p_tot: empty_grid(fleet),
        prod: empty_grid(fleet),
        temp: empty_grid(fleet),
        current: empty_grid(fleet),
        current_rem: empty_grid(fleet),
        hto: empty_grid(fleet),
        d_on_temp: empty_grid(fleet),
        d_idle_temp: empty_grid(fleet),
        bits: vec![Vec::new(); fleet],
        d_bit_temp: vec![Vec::new(); fleet],
        d_bit_current: vec![Vec::new(); fleet],
        d_bit_hto: vec![Vec::new(); fleet],
    };
    for i in 0..fleet {
        for k in 0..n {
            let m = |tag: &str| Meta::new(i, k, tag);
            vars.on[i].push(model.add_binary(unit_step(ON, i, k), m("state")));
            vars.standby[i].push(model.add_binary(unit_step(STANDBY, i, k), m("state")));
            vars.idle[i].push(model.add_binary(unit_step(IDLE, i, k), m("state")));
            vars.startup[i].push(model.add_binary(unit_step(STARTUP, i, k), m("state")));
            vars.shutdown[i].push(model.add_binary(unit_step(SHUTDOWN, i, k), m("state")));
            vars.p_ele[i].push(model.add_var(
                unit_step(P_ELE, i, k),
                VarKind::Continuous,
                0.0,
                params.rated_power,
                m("power"),
            ));
            vars.p_heat[i].push(model.add_var(
                unit_step(P_HEAT, i, k),
                VarKind::Continuous,
                0.0,
                params.max_heating_power,
                m("power"),
            ));
            vars.p_cool[i].push(model.add_var(
                unit_step(P_COOL, i, k),
                VarKind::Continuous,
                0.0,
                cool_max,
                m("power"),
            ));
            vars.p_tot[i].push(model.add_var(
                unit_step(P_TOT, i, k),
                VarKind::Continuous,
                0.0,
                params.rated_power + bop_max,
                m("power"),
            ));
            vars.prod[i].push(model.add_var(
                unit_step(PROD, i, k),
                VarKind::Continuous,
                0.0,
                prod_max,
                m("production"),
            ));
        }
    }
    add_state_constraints(&mut model, &vars, scenario, params);
    let ramp_up = nm3_h_to_mol_s(params.ramp_up);
    let ramp_down = nm3_h_to_mol_s(params.ramp_down);
    for i in 0..fleet {
        for k in 0..n {
            let m = |tag: &str| Meta::new(i, k, tag);
            for (f, facet) in halfspaces.facets.iter().enumerate() {
                model.add_constraint(
                    format!("fac{f}_i{i}_k{k}"),
                    vec![
                        (vars.prod[i][k], 1.0),
                        (vars.p_ele[i][k], -facet[0]),
                        (vars.on[i][k], -(facet[1] * nominal_temp + facet[2])),
                    ],
                    Sense::Le,
                    0.0,
                    m("production_facet"),
                );
            }
            model.add_constraint(
                unit_step("prodcap", i, k),
                vec![(vars.prod[i][k], 1.0), (vars.on[i][k], -prod_max)],
                Sense::Le,
                0.0,
                m("production_gate"),
            );
            if k > 0 {
                model.add_constraint(
                    unit_step("rampup", i, k),
                    vec![(vars.prod[i][k], 1.0), (vars.prod[i][k - 1], -1.0)],
                    Sense::Le,
                    ramp_up,
                    m("ramp_up"),
                );
                model.add_constraint(
                    unit_step("rampdn", i, k),
                    vec![(vars.prod[i][k], 1.0), (vars.prod[i][k - 1], -1.0)],
                    Sense::Ge,
                    ramp_down,
                    m("ramp_down"),
                );
            }
            // the traditional fixed operating floor
            model.add_constraint(
                unit_step("minload", i, k),
                vec![
                    (vars.p_ele[i][k], 1.0),
                    (vars.on[i][k], -min_load * params.rated_power),
                ],
                Sense::Ge,
                0.0,
                m("baseline_min_load"),
            );
            model.add_constraint(
                unit_step("heatcap", i, k),
                vec![
                    (vars.p_heat[i][k], 1.0),
                    (vars.on[i][k], -params.max_heating_power),
                    (vars.standby[i][k], -params.max_heating_power),
                ],
                Sense::Le,
                0.0,
                m("heater_limit"),
            );
            model.add_constraint(
                unit_step("coolcap", i, k),
                vec![
                    (vars.p_cool[i][k], 1.0),
                    (vars.on[i][k], -cool_max),
                    (vars.standby[i][k], -cool_max),
                ],
                Sense::Le,
                0.0,
                m("cooler_limit"),
            );
        }
    }
    add_power_constraints(&mut model, &vars, scenario, params);
    add_symmetry_ordering(&mut model, &vars, scenario);
    set_objective(&mut model, &vars, scenario);
    debug_assert!(model.validate().is_ok());
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::physics::VoltageCoeffs;
    use crate::surface::default_envelope;

    pub(crate) fn test_params() -> ElectrolyzerParams {
        let mut p = ElectrolyzerParams {
            rated_power: 5.0,
            n_cells: 1000.0,
            voltage_coeffs: VoltageCoeffs {
                a0: 2.2266,
                a1: -0.0022,
                a2: 2.2e-4,
            },
            thermal_neutral_voltage: 1.48,
            faraday_efficiency: 0.98,
            faraday_constant: 96485.3,
            heat_capacity: 74.533,
            dissipation_conductance: 0.0055,
            ambient_temp: 298.0,
            coolant_temp: 278.0,
            max_temp: 373.0,
            cooling_conductance: 0.04,
            max_heating_power: 0.5,
            heating_eff: 0.95,
            cooling_eff: 3.0,
            aux_power: 0.05,
            max_cell_voltage: 2.1,
            hto_inflow: 0.003182,
            hto_discharge_const: 5.68e5,
            o2_holdup: 1.0,
            hto_limit: 0.02,
            ramp_up: 400.0,
            ramp_down: -1200.0,
            min_idle_steps: 2,
        };
        p.o2_holdup = crate::physics::calibrate_o2_holdup(&p, 0.34);
        p
    }

    fn tiny_scenario(fleet: usize, horizon: usize) -> PlantScenario {
        PlantScenario {
            name: "tiny".to_string(),
            horizon,
            step_s: 900.0,
            fleet,
            available_power: vec![30.0; horizon],
            h2_price: 0.38,
            power_price: vec![34.7; horizon],
            startup_cost: 280.0,
            initial_states: vec![
                ElectrolyzerState {
                    temperature: 298.0,
                    hto_moles: 0.0,
                    op_state: OpState::Idle,
                };
                fleet
            ],
        }
    }

    #[test]
    fn variable_and_row_counts_match_formula_for_tiny_case() {
        let params = test_params();
        let hs = default_envelope(&params).unwrap();
        let options = LinearizationOptions::derive(&params);
        let scenario = tiny_scenario(1, 2);
        let model = build_model(&scenario, &params, &hs, &options).unwrap();
        model.validate().unwrap();
        let (e, n, f, b, g) = (1usize, 2usize, hs.facets.len(), options.current_bits, 2usize);
        let fu = hs
            .facets
            .iter()
            .filter(|fc| facet_box_min(fc, &params) >= 0.0)
            .count();
        // hand count, mirrored in build_model's docs
        let vars = e * n * (16 + 4 * b);
        let binaries = e * n * (5 + b);
        let min_idle_rows: usize = (1..n).map(|k| k.min(g - 1)).sum();
        let rows = e * (n * (35 + f + fu + 13 * b) + 4 * (n - 1) + min_idle_rows) + n + (e - 1);
        assert_eq!(model.vars.len(), vars);
        assert_eq!(model.n_binaries(), binaries);
        assert_eq!(model.constraints.len(), rows);
    }

    #[test]
    fn identical_scenarios_build_identical_models() {
        let params = test_params();
        let hs = default_envelope(&params).unwrap();
        let options = LinearizationOptions::derive(&params);
        let scenario = tiny_scenario(2, 3);
        let a = build_model(&scenario, &params, &hs, &options).unwrap();
        let b = build_model(&scenario, &params, &hs, &options).unwrap();
        assert_eq!(a, b);
        assert_eq!(crate::mps::mps_string(&a), crate::mps::mps_string(&b));
    }

    #[test]
    fn bit_width_error_names_the_option() {
        let params = test_params();
        let hs = default_envelope(&params).unwrap();
        let mut options = LinearizationOptions::derive(&params);
        options.current_bits = 2;
        options.big_m_current = 4.0 * options.current_step;
        let scenario = tiny_scenario(1, 2);
        match build_model(&scenario, &params, &hs, &options) {
            Err(BuildError::CurrentBitsTooSmall { bits: 2, .. }) => {}
            other => panic!("expected CurrentBitsTooSmall, got {other:?}"),
        }
    }

    #[test]
    fn baseline_has_no_thermal_rows_and_a_load_floor() {
        let params = test_params();
        let hs = default_envelope(&params).unwrap();
        let scenario = tiny_scenario(1, 3);
        let model = build_baseline_model(&scenario, &params, &hs, 353.0).unwrap();
        model.validate().unwrap();
        assert!(model
            .constraints
            .iter()
            .any(|c| c.name.starts_with("minload")));
        assert!(!model.vars.iter().any(|v| v.name.starts_with("temp")));
        assert!(!model.vars.iter().any(|v| v.name.starts_with("hto")));
        assert!(matches!(
            build_baseline_model(&scenario, &params, &hs, 100.0),
            Err(BuildError::BadNominalTemp(..))
        ));
    }
}
