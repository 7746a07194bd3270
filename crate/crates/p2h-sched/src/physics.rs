//! Nonlinear process models of a single alkaline electrolyzer.
//!
//! Covers the lumped first-order thermal model, hydrogen-to-oxygen (HTO)
//! impurity accumulation in the oxygen separator, the affine cell-voltage
//! model and the Faraday production law, plus explicit-Euler trajectory
//! simulation. All functions are pure; units are SI with power in MW,
//! energy in MJ, temperature in K, current in A and molar amounts in mol.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Litres of gas per mol at normal conditions, used for Nm3 reporting.
pub const LITRES_PER_MOL: f64 = 22.414;

/// mol/s -> Nm3/h conversion factor.
pub const NM3_PER_H_PER_MOL_S: f64 = LITRES_PER_MOL * 3600.0 / 1000.0;

/// Converts a molar hydrogen rate [mol/s] to [Nm3/h].
pub fn mol_s_to_nm3_h(rate: f64) -> f64 {
    rate * NM3_PER_H_PER_MOL_S
}

/// Converts a volumetric hydrogen rate [Nm3/h] to [mol/s].
pub fn nm3_h_to_mol_s(rate: f64) -> f64 {
    rate / NM3_PER_H_PER_MOL_S
}

/// Affine cell-voltage model coefficients: `U = a0 + a1*T + a2*I`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VoltageCoeffs {
    /// Intercept [V].
    pub a0: f64,
    /// Temperature coefficient [V/K]; negative for alkaline cells.
    pub a1: f64,
    /// Ohmic coefficient [V/A]; positive.
    pub a2: f64,
}

/// Per-unit physical and economic constants of one electrolyzer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElectrolyzerParams {
    /// Rated electrolytic power [MW].
    pub rated_power: f64,
    /// Number of series cells in the stack.
    pub n_cells: f64,
    /// Cell-voltage model coefficients.
    pub voltage_coeffs: VoltageCoeffs,
    /// Thermal-neutral voltage [V]; heat generation is zero at this cell voltage.
    pub thermal_neutral_voltage: f64,
    /// Faraday efficiency, in (0, 1].
    pub faraday_efficiency: f64,
    /// Faraday constant [C/mol].
    pub faraday_constant: f64,
    /// Lumped heat capacity of stack and lye loop [MJ/K].
    pub heat_capacity: f64,
    /// Passive heat-dissipation conductance to ambient [MW/K].
    pub dissipation_conductance: f64,
    /// Ambient temperature [K].
    pub ambient_temp: f64,
    /// Coolant supply temperature [K].
    pub coolant_temp: f64,
    /// Stack temperature limit [K].
    pub max_temp: f64,
    /// Cooler heat-exchange conductance [MW/K].
    pub cooling_conductance: f64,
    /// Heater power limit [MW].
    pub max_heating_power: f64,
    /// Heater electric-to-thermal efficiency.
    pub heating_eff: f64,
    /// Cooler coefficient of performance (thermal removed per electric).
    pub cooling_eff: f64,
    /// Constant auxiliary (pumps, controls) power while not idle [MW].
    pub aux_power: f64,
    /// Cell-voltage safety limit [V].
    pub max_cell_voltage: f64,
    /// Hydrogen impurity crossover inflow while producing [mol/s].
    pub hto_inflow: f64,
    /// Impurity discharge constant [mol].
    pub hto_discharge_const: f64,
    /// Oxygen separator holdup used as the HTO ratio denominator [mol].
    pub o2_holdup: f64,
    /// Impurity ratio shutdown limit (volume fraction).
    pub hto_limit: f64,
    /// Production ramp-up bound per scheduling step [Nm3/h].
    pub ramp_up: f64,
    /// Production ramp-down bound per scheduling step [Nm3/h]; negative.
    pub ramp_down: f64,
    /// Minimum number of idle steps between shutdown and the next startup.
    pub min_idle_steps: usize,
}

#[derive(Debug, Error)]
pub enum PhysicsError {
    #[error("parameter `{0}` must be strictly positive, got {1}")]
    NonPositive(&'static str, f64),
    #[error("parameter `{name}` = {value} outside {low}..={high}")]
    OutOfRange {
        name: &'static str,
        value: f64,
        low: f64,
        high: f64,
    },
    #[error("ambient temperature {ambient} K exceeds max temperature {max} K")]
    AmbientAboveMax { ambient: f64, max: f64 },
    #[error("coolant temperature {coolant} K exceeds ambient temperature {ambient} K")]
    CoolantAboveAmbient { coolant: f64, ambient: f64 },
    #[error("ohmic voltage coefficient a2 must be positive, got {0}")]
    NonPositiveOhmic(f64),
    #[error("steady-state HTO ratio never reaches the limit for any load in (0, 1]")]
    NoSteadyLoadRoot,
    #[error("step {index}: {reason}")]
    BadStepInput { index: usize, reason: String },
}

impl ElectrolyzerParams {
    /// Checks the structural invariants of the parameter set.
    pub fn validate(&self) -> Result<(), PhysicsError> {
        let positives = [
            ("rated_power", self.rated_power),
            ("n_cells", self.n_cells),
            ("thermal_neutral_voltage", self.thermal_neutral_voltage),
            ("faraday_constant", self.faraday_constant),
            ("heat_capacity", self.heat_capacity),
            ("dissipation_conductance", self.dissipation_conductance),
            ("ambient_temp", self.ambient_temp),
            ("coolant_temp", self.coolant_temp),
            ("max_temp", self.max_temp),
            ("cooling_conductance", self.cooling_conductance),
            ("heating_eff", self.heating_eff),
            ("cooling_eff", self.cooling_eff),
            ("max_cell_voltage", self.max_cell_voltage),
            ("hto_discharge_const", self.hto_discharge_const),
            ("o2_holdup", self.o2_holdup),
        ];
        for (name, value) in positives {
            if !(value > 0.0) {
                return Err(PhysicsError::NonPositive(name, value));
            }
        }
        if self.max_heating_power < 0.0 {
            return Err(PhysicsError::NonPositive(
                "max_heating_power",
                self.max_heating_power,
            ));
        }
        if self.aux_power < 0.0 {
            return Err(PhysicsError::NonPositive("aux_power", self.aux_power));
        }
        if self.hto_inflow < 0.0 {
            return Err(PhysicsError::NonPositive("hto_inflow", self.hto_inflow));
        }
        if !(self.faraday_efficiency > 0.0 && self.faraday_efficiency <= 1.0) {
            return Err(PhysicsError::OutOfRange {
                name: "faraday_efficiency",
                value: self.faraday_efficiency,
                low: 0.0,
                high: 1.0,
            });
        }
        if !(self.hto_limit > 0.0 && self.hto_limit < 1.0) {
            return Err(PhysicsError::OutOfRange {
                name: "hto_limit",
                value: self.hto_limit,
                low: 0.0,
                high: 1.0,
            });
        }
        if self.ambient_temp > self.max_temp {
            return Err(PhysicsError::AmbientAboveMax {
                ambient: self.ambient_temp,
                max: self.max_temp,
            });
        }
        if self.coolant_temp > self.ambient_temp {
            return Err(PhysicsError::CoolantAboveAmbient {
                coolant: self.coolant_temp,
                ambient: self.ambient_temp,
            });
        }
        if !(self.voltage_coeffs.a2 > 0.0) {
            return Err(PhysicsError::NonPositiveOhmic(self.voltage_coeffs.a2));
        }
        Ok(())
    }

    /// mol of H2 per second per ampere of stack current.
    pub fn faraday_slope(&self) -> f64 {
        self.n_cells * self.faraday_efficiency / (2.0 * self.faraday_constant)
    }

    /// Best-case production rate [mol/s]: rated power at the temperature limit.
    ///
    /// Used as the reference for load fractions and HTO calibration.
    pub fn rated_production(&self) -> f64 {
        production_from_power(self.rated_power, self.max_temp, self)
    }
}

/// Operational state of an electrolyzer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OpState {
    Production,
    Standby,
    Idle,
}

impl OpState {
    /// Production or Standby: auxiliaries, heater and cooler are powered.
    pub fn is_active(self) -> bool {
        !matches!(self, OpState::Idle)
    }
}

impl std::fmt::Display for OpState {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            OpState::Production => write!(f, "production"),
            OpState::Standby => write!(f, "standby"),
            OpState::Idle => write!(f, "idle"),
        }
    }
}

/// Dynamic state of one electrolyzer at a step boundary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ElectrolyzerState {
    /// Stack temperature [K].
    pub temperature: f64,
    /// Accumulated hydrogen impurity in the oxygen separator [mol].
    pub hto_moles: f64,
    /// Operational state.
    pub op_state: OpState,
}

/// Power commands applied over one step.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct StepInputs {
    /// Electrolytic (stack) power [MW]; zero unless producing.
    pub electrolytic_power: f64,
    /// Heater power [MW], thermal.
    pub heating_power: f64,
    /// Cooler power [MW], thermal removed.
    pub cooling_power: f64,
}

/// Cell voltage from the affine model: `a0 + a1*T + a2*I` [V].
pub fn cell_voltage(current: f64, temperature: f64, params: &ElectrolyzerParams) -> f64 {
    let c = &params.voltage_coeffs;
    c.a0 + c.a1 * temperature + c.a2 * current
}

/// Stack current [A] that produces `rate` mol/s of hydrogen.
pub fn current_from_production(rate: f64, params: &ElectrolyzerParams) -> f64 {
    2.0 * params.faraday_constant * rate / (params.n_cells * params.faraday_efficiency)
}

/// Hydrogen production rate [mol/s] at stack current `current` [A].
pub fn production_from_current(current: f64, params: &ElectrolyzerParams) -> f64 {
    params.faraday_slope() * current
}

/// Stack current [A] that consumes `power` MW of electrolytic power at
/// temperature `temperature`.
///
/// Solves `n_cells * I * (a0 + a1*T + a2*I) = power` for the positive root.
pub fn current_from_power(power: f64, temperature: f64, params: &ElectrolyzerParams) -> f64 {
    if power <= 0.0 {
        return 0.0;
    }
    let c = &params.voltage_coeffs;
    let u = c.a0 + c.a1 * temperature;
    let w = power * 1e6 / params.n_cells;
    // a2*I^2 + u*I - w = 0, positive root
    (-u + (u * u + 4.0 * c.a2 * w).sqrt()) / (2.0 * c.a2)
}

/// Derived production function `f(P, T)` [mol/s]: invert the voltage model
/// for the stack current, then apply the Faraday law. Concave and increasing
/// in power; increasing in temperature for `a1 < 0`.
pub fn production_from_power(power: f64, temperature: f64, params: &ElectrolyzerParams) -> f64 {
    production_from_current(current_from_power(power, temperature, params), params)
}

/// Electrolytic power [MW] drawn at stack current `current` and temperature
/// `temperature`: `n_cells * I * U(I, T)`.
pub fn power_from_current(current: f64, temperature: f64, params: &ElectrolyzerParams) -> f64 {
    params.n_cells * current * cell_voltage(current, temperature, params) * 1e-6
}

/// Reaction heat [MW] released into the lye loop at current `current`:
/// `n_cells * I * (U - U_th)`. Negative below the thermal-neutral point and
/// deliberately not clamped.
pub fn reaction_heat(current: f64, temperature: f64, params: &ElectrolyzerParams) -> f64 {
    params.n_cells
        * current
        * (cell_voltage(current, temperature, params) - params.thermal_neutral_voltage)
        * 1e-6
}

/// One explicit-Euler step of the first-order thermal model, with the heat
/// terms given directly [MW]. `h` in seconds; MW * s = MJ keeps units closed.
pub fn temperature_step_heat(
    temperature: f64,
    reaction_heat_mw: f64,
    cooling_power: f64,
    heating_power: f64,
    params: &ElectrolyzerParams,
    h: f64,
) -> f64 {
    let net = reaction_heat_mw
        - params.dissipation_conductance * (temperature - params.ambient_temp)
        - cooling_power
        + heating_power;
    temperature + h * net / params.heat_capacity
}

/// One explicit-Euler step of the thermal model with the step's current
/// derived from the commanded electrolytic power.
pub fn temperature_step(
    state: &ElectrolyzerState,
    inputs: &StepInputs,
    params: &ElectrolyzerParams,
    h: f64,
) -> f64 {
    let current = if state.op_state == OpState::Production {
        current_from_power(inputs.electrolytic_power, state.temperature, params)
    } else {
        0.0
    };
    temperature_step_heat(
        state.temperature,
        reaction_heat(current, state.temperature, params),
        inputs.cooling_power,
        inputs.heating_power,
        params,
        h,
    )
}

/// Maximum cooling power [MW] available at `temperature`: the cooler only
/// runs while the unit is active and can never pump heat below the coolant
/// temperature.
pub fn max_cooling(temperature: f64, params: &ElectrolyzerParams, op_state: OpState) -> f64 {
    if op_state.is_active() {
        (params.cooling_conductance * (temperature - params.coolant_temp)).max(0.0)
    } else {
        0.0
    }
}

/// One explicit-Euler step of the HTO impurity balance [mol], clamped at zero.
///
/// `o2_rate` is the oxygen production rate, i.e. half the hydrogen rate.
pub fn hto_step(
    state: &ElectrolyzerState,
    o2_rate: f64,
    on: bool,
    params: &ElectrolyzerParams,
    h: f64,
) -> f64 {
    let inflow = if on { params.hto_inflow } else { 0.0 };
    let outflow = o2_rate * state.hto_moles / params.hto_discharge_const;
    (state.hto_moles + h * (inflow - outflow)).max(0.0)
}

/// HTO impurity expressed as a fraction of the separator oxygen holdup.
pub fn hto_ratio(hto_moles: f64, params: &ElectrolyzerParams) -> f64 {
    hto_moles / params.o2_holdup
}

/// Steady-state impurity amount [mol] while producing at a fixed oxygen rate.
pub fn hto_steady_state(o2_rate: f64, params: &ElectrolyzerParams) -> f64 {
    params.hto_inflow * params.hto_discharge_const / o2_rate
}

/// Load fraction (of `rated_production`) at which the steady-state HTO ratio
/// equals the shutdown limit. Loads held below this fraction eventually trip
/// the impurity limit; loads above it settle below.
pub fn min_steady_load(params: &ElectrolyzerParams) -> Result<f64, PhysicsError> {
    if params.hto_inflow == 0.0 {
        return Ok(0.0);
    }
    // ratio_ss(load) = 2*inflow*c_out / (load * rated * holdup) = limit
    let load = 2.0 * params.hto_inflow * params.hto_discharge_const
        / (params.hto_limit * params.o2_holdup * params.rated_production());
    if load > 0.0 && load <= 1.0 {
        Ok(load)
    } else {
        Err(PhysicsError::NoSteadyLoadRoot)
    }
}

/// Separator holdup [mol] that calibrates `min_steady_load` to `target_load`.
pub fn calibrate_o2_holdup(params: &ElectrolyzerParams, target_load: f64) -> f64 {
    2.0 * params.hto_inflow * params.hto_discharge_const
        / (params.hto_limit * target_load * params.rated_production())
}

/// One simulated step of a single-unit trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub step: usize,
    pub time_s: f64,
    pub state: OpState,
    /// Stack temperature at the start of the step [K].
    pub temp_k: f64,
    /// Impurity amount at the start of the step [mol].
    pub hto_mol: f64,
    /// Impurity ratio at the start of the step.
    pub hto_ratio: f64,
    /// Stack current over the step [A].
    pub current_a: f64,
    /// Cell voltage over the step [V].
    pub voltage_v: f64,
    /// Hydrogen production over the step [Nm3/h].
    pub prod_nm3ph: f64,
    /// Total electric consumption over the step [MW].
    pub power_mw: f64,
}

/// Per-step trajectory of one electrolyzer plus the end-of-horizon state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationTrace {
    pub points: Vec<TracePoint>,
    pub final_state: ElectrolyzerState,
}

impl SimulationTrace {
    /// Total hydrogen produced across the horizon [Nm3], for step length `h` seconds.
    pub fn total_production_nm3(&self, h: f64) -> f64 {
        self.points.iter().map(|p| p.prod_nm3ph * h / 3600.0).sum()
    }

    /// Total energy consumed across the horizon [MWh], for step length `h` seconds.
    pub fn total_energy_mwh(&self, h: f64) -> f64 {
        self.points.iter().map(|p| p.power_mw * h / 3600.0).sum()
    }
}

/// Total electric consumption [MW] for a step: electrolytic power plus the
/// balance of plant while active.
pub fn total_power(state: OpState, inputs: &StepInputs, params: &ElectrolyzerParams) -> f64 {
    let bop = if state.is_active() {
        inputs.heating_power / params.heating_eff
            + inputs.cooling_power / params.cooling_eff
            + params.aux_power
    } else {
        0.0
    };
    inputs.electrolytic_power + bop
}

/// Simulates a power/state profile with explicit Euler at step `h` seconds.
///
/// `substeps` > 1 subdivides each scheduling step for audit-grade integration
/// of the same inputs. Inputs are validated; the index of the first offending
/// step is reported. Cooling is clamped to the exchanger capacity at the
/// current temperature.
pub fn simulate_trajectory(
    profile: &[(OpState, StepInputs)],
    initial: &ElectrolyzerState,
    params: &ElectrolyzerParams,
    h: f64,
    substeps: usize,
) -> Result<SimulationTrace, PhysicsError> {
    let substeps = substeps.max(1);
    let mut temp = initial.temperature;
    let mut hto = initial.hto_moles;
    let mut points = Vec::with_capacity(profile.len());
    for (k, (op, inputs)) in profile.iter().enumerate() {
        validate_step_inputs(k, *op, inputs, params)?;
        let current = if *op == OpState::Production {
            current_from_power(inputs.electrolytic_power, temp, params)
        } else {
            0.0
        };
        let prod = production_from_current(current, params);
        points.push(TracePoint {
            step: k,
            time_s: k as f64 * h,
            state: *op,
            temp_k: temp,
            hto_mol: hto,
            hto_ratio: hto_ratio(hto, params),
            current_a: current,
            voltage_v: cell_voltage(current, temp, params),
            prod_nm3ph: mol_s_to_nm3_h(prod),
            power_mw: total_power(*op, inputs, params),
        });
        let dt = h / substeps as f64;
        for _ in 0..substeps {
            let sub_current = if *op == OpState::Production {
                current_from_power(inputs.electrolytic_power, temp, params)
            } else {
                0.0
            };
            let sub_prod = production_from_current(sub_current, params);
            let cooling = inputs.cooling_power.min(max_cooling(temp, params, *op));
            let state = ElectrolyzerState {
                temperature: temp,
                hto_moles: hto,
                op_state: *op,
            };
            let heat = reaction_heat(sub_current, temp, params);
            temp = temperature_step_heat(temp, heat, cooling, inputs.heating_power, params, dt);
            hto = hto_step(
                &state,
                sub_prod / 2.0,
                *op == OpState::Production,
                params,
                dt,
            );
        }
    }
    Ok(SimulationTrace {
        points,
        final_state: ElectrolyzerState {
            temperature: temp,
            hto_moles: hto,
            op_state: profile.last().map(|(s, _)| *s).unwrap_or(initial.op_state),
        },
    })
}

fn validate_step_inputs(
    index: usize,
    op: OpState,
    inputs: &StepInputs,
    params: &ElectrolyzerParams,
) -> Result<(), PhysicsError> {
    let bad = |reason: String| PhysicsError::BadStepInput { index, reason };
    if inputs.electrolytic_power < 0.0 || inputs.heating_power < 0.0 || inputs.cooling_power < 0.0
    {
        return Err(bad(format!("negative power command: {inputs:?}")));
    }
    if op != OpState::Production && inputs.electrolytic_power != 0.0 {
        return Err(bad(format!(
            "electrolytic power {} MW while {op}",
            inputs.electrolytic_power
        )));
    }
    if op.is_active() {
        if inputs.heating_power > params.max_heating_power + 1e-9 {
            return Err(bad(format!(
                "heating power {} MW exceeds limit {} MW",
                inputs.heating_power, params.max_heating_power
            )));
        }
    } else if inputs.heating_power != 0.0 || inputs.cooling_power != 0.0 {
        return Err(bad("heater or cooler commanded while idle".to_string()));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    /// Coefficients used throughout the hand-arithmetic checks.
    fn toy_params() -> ElectrolyzerParams {
        ElectrolyzerParams {
            rated_power: 5.0,
            n_cells: 120.0,
            voltage_coeffs: VoltageCoeffs {
                a0: 1.90,
                a1: -0.001,
                a2: 2e-5,
            },
            thermal_neutral_voltage: 1.48,
            faraday_efficiency: 0.98,
            faraday_constant: 96485.3,
            heat_capacity: 447.2,
            dissipation_conductance: 0.033,
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
            o2_holdup: 4.0e4,
            hto_limit: 0.02,
            ramp_up: 400.0,
            ramp_down: -1200.0,
            min_idle_steps: 2,
        }
    }

    #[test]
    fn cell_voltage_affine_form() {
        let p = toy_params();
        assert_relative_eq!(cell_voltage(0.0, 298.0, &p), 1.602, max_relative = 1e-12);
        // coefficient recovery at T = 0, I = 0
        assert_eq!(cell_voltage(0.0, 0.0, &p), 1.90);
        // invert the affine equation for the 2.1 V point and re-evaluate
        let i_cap = (2.1 - (1.90 - 0.001 * 298.0)) / 2e-5;
        assert_relative_eq!(cell_voltage(i_cap, 298.0, &p), 2.1, max_relative = 1e-12);
    }

    #[test]
    fn faraday_law_arithmetic() {
        let p = toy_params();
        assert_eq!(current_from_production(0.0, &p), 0.0);
        let i = current_from_production(0.062, &p);
        assert_relative_eq!(
            i,
            2.0 * 96485.3 * 0.062 / (120.0 * 0.98),
            max_relative = 1e-12
        );
        assert!((i - 101.7).abs() < 0.1);
    }

    #[test]
    fn faraday_inverse_pair() {
        let p = toy_params();
        for rate in [0.001, 0.05, 1.3, 12.9] {
            let back = production_from_current(current_from_production(rate, &p), &p);
            assert_relative_eq!(back, rate, max_relative = 1e-12);
        }
    }

    #[test]
    fn reaction_heat_arithmetic() {
        let p = toy_params();
        assert_eq!(reaction_heat(0.0, 350.0, &p), 0.0);
        // thermal-neutral point: U(I*, T) = U_th
        let i_th = (1.48 - (1.90 - 0.001 * 340.0)) / 2e-5;
        assert!(i_th < 0.0 || reaction_heat(i_th, 340.0, &p).abs() < 1e-15);
        // hand value: 120 * 100 * (1.604 - 1.48) W = 0.001488 MW
        assert_relative_eq!(reaction_heat(100.0, 298.0, &p), 0.001488, epsilon = 1e-9);
    }

    #[test]
    fn reaction_heat_negative_below_thermal_neutral() {
        let mut p = toy_params();
        // force endothermic: low intercept at high temperature
        p.voltage_coeffs = VoltageCoeffs {
            a0: 2.2266,
            a1: -0.0022,
            a2: 2.2e-4,
        };
        let heat = reaction_heat(100.0, 373.0, &p);
        assert!(
            heat < 0.0,
            "below the thermal-neutral point heat must pass through negative, got {heat}"
        );
    }

    #[test]
    fn temperature_step_hand_arithmetic() {
        let p = toy_params();
        let next = temperature_step_heat(353.0, 0.5, 0.2, 0.0, &p, 900.0);
        let expected = 353.0 + 900.0 * (0.5 - 0.033 * 55.0 - 0.2) / 447.2;
        assert_relative_eq!(next, expected, max_relative = 1e-12);
        assert_abs_diff_eq!(next, 349.951, epsilon = 5e-4);
    }

    #[test]
    fn temperature_ambient_fixed_point() {
        let p = toy_params();
        for h in [1.0, 60.0, 900.0, 7200.0] {
            let next = temperature_step_heat(p.ambient_temp, 0.0, 0.0, 0.0, &p, h);
            assert_eq!(next, p.ambient_temp);
        }
    }

    #[test]
    fn idle_decay_matches_exponential() {
        let p = toy_params();
        let h = 900.0;
        let profile = vec![(OpState::Idle, StepInputs::default()); 96];
        let initial = ElectrolyzerState {
            temperature: 373.0,
            hto_moles: 0.0,
            op_state: OpState::Idle,
        };
        let trace = simulate_trajectory(&profile, &initial, &p, h, 1).unwrap();
        // closed form of the Euler recursion: geometric decay toward ambient
        let decay = 1.0 - h * p.dissipation_conductance / p.heat_capacity;
        let mut prev = f64::INFINITY;
        for pt in &trace.points {
            assert!(pt.temp_k <= prev + 1e-12, "decay must be monotone");
            prev = pt.temp_k;
            let exact = 298.0 + 75.0 * decay.powf(pt.time_s / h);
            assert!(
                (pt.temp_k - exact).abs() < 0.5,
                "Euler vs closed form at t={}: {} vs {}",
                pt.time_s,
                pt.temp_k,
                exact
            );
        }
        // after a full day the stack has lost most of the 75 K excess
        let end = trace.final_state.temperature;
        assert!(end > 298.0 && end - 298.0 < 75.0 * 0.01);
    }

    #[test]
    fn max_cooling_cases() {
        let p = toy_params();
        assert_eq!(max_cooling(350.0, &p, OpState::Idle), 0.0);
        assert_eq!(max_cooling(278.0, &p, OpState::Production), 0.0);
        assert_relative_eq!(
            max_cooling(353.0, &p, OpState::Production),
            3.0,
            max_relative = 1e-12
        );
    }

    #[test]
    fn hto_step_hand_arithmetic() {
        let p = toy_params();
        let state = ElectrolyzerState {
            temperature: 350.0,
            hto_moles: 100.0,
            op_state: OpState::Production,
        };
        let next = hto_step(&state, 0.1, true, &p, 900.0);
        let expected = 100.0 + 900.0 * (0.003182 - 0.1 * 100.0 / 5.68e5);
        assert_relative_eq!(next, expected, max_relative = 1e-12);
        assert_abs_diff_eq!(next, 102.848, epsilon = 5e-4);
    }

    #[test]
    fn hto_off_is_stationary() {
        let p = toy_params();
        let state = ElectrolyzerState {
            temperature: 298.0,
            hto_moles: 0.0,
            op_state: OpState::Idle,
        };
        assert_eq!(hto_step(&state, 0.0, false, &p, 900.0), 0.0);
    }

    #[test]
    fn hto_converges_to_fixed_point_from_both_sides() {
        let p = toy_params();
        let o2 = 0.1;
        let n_ss = hto_steady_state(o2, &p);
        for start in [0.0, n_ss * 3.0] {
            let mut state = ElectrolyzerState {
                temperature: 350.0,
                hto_moles: start,
                op_state: OpState::Production,
            };
            let mut dist = (start - n_ss).abs();
            // enough steps for several time constants at this discharge rate
            for _ in 0..200_000 {
                state.hto_moles = hto_step(&state, o2, true, &p, 900.0);
                let d = (state.hto_moles - n_ss).abs();
                assert!(d <= dist + 1e-9, "convergence must be monotone");
                dist = d;
            }
            assert!(
                dist / n_ss < 1e-3,
                "within 0.1% of steady state, got {} vs {}",
                state.hto_moles,
                n_ss
            );
        }
    }

    #[test]
    fn hto_ratio_cases() {
        let p = toy_params();
        assert_eq!(hto_ratio(0.0, &p), 0.0);
        assert_relative_eq!(
            hto_ratio(0.02 * p.o2_holdup, &p),
            0.02,
            max_relative = 1e-12
        );
    }

    #[test]
    fn steady_ratio_decreases_with_load() {
        let p = toy_params();
        let rated = p.rated_production();
        let mut prev = f64::INFINITY;
        for load in [0.1, 0.2, 0.34, 0.5, 0.8, 1.0] {
            let ratio = hto_steady_state(load * rated / 2.0, &p) / p.o2_holdup;
            assert!(ratio < prev, "higher load must mean lower impurity");
            prev = ratio;
        }
    }

    #[test]
    fn min_steady_load_calibration() {
        let mut p = toy_params();
        p.o2_holdup = calibrate_o2_holdup(&p, 0.34);
        let load = min_steady_load(&p).unwrap();
        assert_abs_diff_eq!(load, 0.34, epsilon = 5e-3);
        // no crossover, no floor
        p.hto_inflow = 0.0;
        assert_eq!(min_steady_load(&p).unwrap(), 0.0);
        // doubling the inflow doubles the steady-state ratio at fixed load
        let mut p2 = toy_params();
        p2.o2_holdup = calibrate_o2_holdup(&p2, 0.34);
        let base = hto_steady_state(0.5, &p2);
        p2.hto_inflow *= 2.0;
        assert_relative_eq!(hto_steady_state(0.5, &p2), 2.0 * base, max_relative = 1e-12);
    }

    #[test]
    fn min_steady_load_detects_inconsistent_calibration() {
        let mut p = toy_params();
        p.o2_holdup = 1.0; // absurdly small holdup: no load in (0,1] reaches the limit
        assert!(matches!(
            min_steady_load(&p),
            Err(PhysicsError::NoSteadyLoadRoot)
        ));
    }

    #[test]
    fn all_idle_profile_from_ambient_is_constant() {
        let p = toy_params();
        let profile = vec![(OpState::Idle, StepInputs::default()); 12];
        let initial = ElectrolyzerState {
            temperature: p.ambient_temp,
            hto_moles: 5.0,
            op_state: OpState::Idle,
        };
        let trace = simulate_trajectory(&profile, &initial, &p, 900.0, 1).unwrap();
        assert_eq!(trace.points.len(), 12);
        for pt in &trace.points {
            assert_eq!(pt.temp_k, p.ambient_temp);
            assert_eq!(pt.hto_mol, 5.0);
            assert_eq!(pt.power_mw, 0.0);
            assert_eq!(pt.prod_nm3ph, 0.0);
        }
    }

    #[test]
    fn trajectory_rejects_bad_inputs_with_index() {
        let p = toy_params();
        let mut profile = vec![(OpState::Production, StepInputs::default()); 4];
        profile[2].1.electrolytic_power = -1.0;
        let initial = ElectrolyzerState {
            temperature: 298.0,
            hto_moles: 0.0,
            op_state: OpState::Idle,
        };
        match simulate_trajectory(&profile, &initial, &p, 900.0, 1) {
            Err(PhysicsError::BadStepInput { index: 2, .. }) => {}
            other => panic!("expected BadStepInput at 2, got {other:?}"),
        }
        // idle step with electrolytic power
        let mut profile = vec![(OpState::Idle, StepInputs::default()); 3];
        profile[1].1.electrolytic_power = 1.0;
        assert!(matches!(
            simulate_trajectory(&profile, &initial, &p, 900.0, 1),
            Err(PhysicsError::BadStepInput { index: 1, .. })
        ));
    }

    #[test]
    fn step_up_profile_heats_until_cooling_saturates() {
        let p = toy_params();
        let mut profile = Vec::new();
        for k in 0..24 {
            let power = 5.0 * ((k + 1) as f64 / 24.0);
            profile.push((
                OpState::Production,
                StepInputs {
                    electrolytic_power: power,
                    ..Default::default()
                },
            ));
        }
        let initial = ElectrolyzerState {
            temperature: 298.0,
            hto_moles: 0.0,
            op_state: OpState::Production,
        };
        let trace = simulate_trajectory(&profile, &initial, &p, 900.0, 1).unwrap();
        let mut prev = 0.0;
        for pt in &trace.points {
            assert!(
                pt.temp_k >= prev - 1e-9,
                "temperature must be nondecreasing under rising load with no cooling"
            );
            prev = pt.temp_k;
        }
    }

    #[test]
    fn trajectory_composition() {
        let p = toy_params();
        let mut profile = Vec::new();
        for k in 0..16 {
            let op = if k % 5 == 0 {
                OpState::Standby
            } else {
                OpState::Production
            };
            let inputs = StepInputs {
                electrolytic_power: if op == OpState::Production {
                    2.0 + 0.1 * k as f64
                } else {
                    0.0
                },
                heating_power: if op == OpState::Standby { 0.3 } else { 0.0 },
                cooling_power: 0.0,
            };
            profile.push((op, inputs));
        }
        let initial = ElectrolyzerState {
            temperature: 320.0,
            hto_moles: 40.0,
            op_state: OpState::Idle,
        };
        let whole = simulate_trajectory(&profile, &initial, &p, 900.0, 1).unwrap();
        let first = simulate_trajectory(&profile[..7], &initial, &p, 900.0, 1).unwrap();
        let second = simulate_trajectory(&profile[7..], &first.final_state, &p, 900.0, 1).unwrap();
        for (a, b) in whole.points[..7].iter().zip(&first.points) {
            assert_eq!(a.temp_k, b.temp_k);
            assert_eq!(a.hto_mol, b.hto_mol);
        }
        for (a, b) in whole.points[7..].iter().zip(&second.points) {
            assert_relative_eq!(a.temp_k, b.temp_k, max_relative = 1e-12);
            assert_relative_eq!(a.hto_mol, b.hto_mol, max_relative = 1e-12);
        }
    }

    #[test]
    fn params_validation_catches_inversions() {
        let mut p = toy_params();
        p.coolant_temp = 400.0;
        assert!(p.validate().is_err());
        let mut p = toy_params();
        p.faraday_efficiency = 1.2;
        assert!(p.validate().is_err());
        let mut p = toy_params();
        p.voltage_coeffs.a2 = -1e-5;
        assert!(p.validate().is_err());
        assert!(toy_params().validate().is_ok());
    }
}
