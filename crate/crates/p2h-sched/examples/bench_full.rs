//! Scratch benchmark: emit a plant model for solver timing experiments.
//!
//! Usage: bench_full [fleet] [out.mps] [baseline]

use p2h_sched::milp::build::{
    build_baseline_model, build_model, LinearizationOptions, PlantScenario,
};
use p2h_sched::physics::{
    calibrate_o2_holdup, ElectrolyzerParams, ElectrolyzerState, OpState, VoltageCoeffs,
};
use p2h_sched::surface::default_envelope;

fn main() {
    let fleet: usize = std::env::args()
        .nth(1)
        .map(|s| s.parse().unwrap())
        .unwrap_or(6);
    let out = std::env::args().nth(2).unwrap_or("/tmp/full.mps".into());
    let baseline = std::env::args().nth(3).is_some();
    let mut params = ElectrolyzerParams {
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
    params.o2_holdup = calibrate_o2_holdup(&params, 0.34);
    let hs = default_envelope(&params).unwrap();
    eprintln!("facets: {}", hs.facets.len());
    let options = LinearizationOptions::derive(&params);
    let horizon = 96;
    let pv: Vec<f64> = (0..horizon)
        .map(|k| {
            let t = k as f64 / 95.0 * 24.0;
            if t < 6.5 || t > 19.5 {
                0.0
            } else {
                let x = (t - 6.5) / 13.0 * std::f64::consts::PI;
                (32.0 * x.sin().powf(1.3)).max(0.0) * fleet as f64 / 6.0
            }
        })
        .collect();
    let scenario = PlantScenario {
        name: "bench".into(),
        horizon,
        step_s: 900.0,
        fleet,
        available_power: pv,
        h2_price: 0.38,
        power_price: vec![34.7; horizon],
        startup_cost: 280.0,
        initial_states: vec![
            ElectrolyzerState {
                temperature: 298.0,
                hto_moles: 0.0,
                op_state: OpState::Idle
            };
            fleet
        ],
    };
    let t0 = std::time::Instant::now();
    let model = if baseline {
        build_baseline_model(&scenario, &params, &hs, 353.0).unwrap()
    } else {
        build_model(&scenario, &params, &hs, &options).unwrap()
    };
    eprintln!(
        "build: {:?} vars={} bins={} rows={}",
        t0.elapsed(),
        model.vars.len(),
        model.n_binaries(),
        model.constraints.len()
    );
    p2h_sched::mps::write_mps(&model, std::path::Path::new(&out)).unwrap();
    eprintln!("wrote {out}");
}
