//! Scenario and parameter file loading, PV profile ingestion, and the
//! synthetic PV day generator used by the bundled comparison batch.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::milp::build::PlantScenario;
use crate::physics::{
    calibrate_o2_holdup, ElectrolyzerParams, ElectrolyzerState, OpState, VoltageCoeffs,
};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {pointer}: {msg}")]
    Schema {
        path: String,
        pointer: String,
        msg: String,
    },
    #[error("{path}: json: {source}")]
    Json {
        path: String,
        #[source]
        source: serde_json::Error,
    },
    #[error("{path} line {line}: {msg}")]
    Csv {
        path: String,
        line: usize,
        msg: String,
    },
    #[error("physics: {0}")]
    Physics(#[from] crate::physics::PhysicsError),
}

// ---------------------------------------------------------------------------
// parameter file

/// One parameter entry: a value with unit documentation and a flag marking
/// values not published in the source material.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct ParamEntry {
    value: serde_json::Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    unit: Option<String>,
    #[serde(default)]
    implementer_default: bool,
}

/// The reference electrolyzer shipped with the crate: a 5 MW alkaline unit.
///
/// Published constants keep their sourced values; the remaining ones are
/// literature-plausible and calibrated so that (a) rated power is reached
/// near 2.0 V/cell at 353 K, (b) a cold start hits the 2.1 V cap below
/// rated current, and (c) the minimum sustainable steady load lands at 34%
/// of rated production. Lumped heat capacity and dissipation are per unit
/// (a sixth of the plant aggregate), preserving the plant time constant.
pub fn reference_params() -> ElectrolyzerParams {
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
        heat_capacity: 447.2 / 6.0,
        dissipation_conductance: 0.033 / 6.0,
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
        ramp_up: 1600.0 * 0.25,
        ramp_down: -4800.0 * 0.25,
        min_idle_steps: 2,
    };
    p.o2_holdup = calibrate_o2_holdup(&p, 0.34);
    p
}

/// Which reference fields carry values chosen here rather than sourced.
fn implementer_default_fields() -> &'static [&'static str] {
    &[
        "n_cells",
        "voltage_coeffs",
        "faraday_efficiency",
        "heat_capacity",
        "dissipation_conductance",
        "cooling_conductance",
        "max_heating_power",
        "heating_eff",
        "cooling_eff",
        "aux_power",
        "o2_holdup",
        "min_idle_steps",
    ]
}

fn unit_of(field: &str) -> Option<&'static str> {
    Some(match field {
        "rated_power" | "max_heating_power" | "aux_power" => "MW",
        "n_cells" => "count",
        "voltage_coeffs" => "V, V/K, V/A",
        "thermal_neutral_voltage" | "max_cell_voltage" => "V",
        "faraday_constant" => "C/mol",
        "heat_capacity" => "MJ/K",
        "dissipation_conductance" | "cooling_conductance" => "MW/K",
        "ambient_temp" | "coolant_temp" | "max_temp" => "K",
        "hto_inflow" => "mol/s",
        "hto_discharge_const" | "o2_holdup" => "mol",
        "ramp_up" | "ramp_down" => "Nm3/h per step",
        "min_idle_steps" => "steps",
        _ => return None,
    })
}

/// Serializes a parameter set in the interchange layout: one object per
/// field with value, unit and the implementer-default flag.
pub fn params_to_json(params: &ElectrolyzerParams) -> serde_json::Value {
    let defaults = implementer_default_fields();
    let value = serde_json::to_value(params).expect("params serialize");
    let mut out = BTreeMap::new();
    for (field, v) in value.as_object().expect("params are an object") {
        out.insert(
            field.clone(),
            ParamEntry {
                value: v.clone(),
                unit: unit_of(field).map(str::to_string),
                implementer_default: defaults.contains(&field.as_str()),
            },
        );
    }
    serde_json::to_value(out).expect("entries serialize")
}

pub fn save_params(params: &ElectrolyzerParams, path: &Path) -> Result<(), IoError> {
    let text = serde_json::to_string_pretty(&params_to_json(params)).expect("serialize");
    std::fs::write(path, text).map_err(|source| IoError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn load_params(path: &Path) -> Result<ElectrolyzerParams, IoError> {
    let text = std::fs::read_to_string(path).map_err(|source| IoError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let entries: BTreeMap<String, ParamEntry> =
        serde_json::from_str(&text).map_err(|source| IoError::Json {
            path: path.display().to_string(),
            source,
        })?;
    let mut object = serde_json::Map::new();
    for (field, entry) in entries {
        object.insert(field, entry.value);
    }
    let params: ElectrolyzerParams =
        serde_json::from_value(serde_json::Value::Object(object)).map_err(|source| {
            IoError::Json {
                path: path.display().to_string(),
                source,
            }
        })?;
    params.validate()?;
    Ok(params)
}

// ---------------------------------------------------------------------------
// scenario file

#[derive(Debug, Clone, Serialize, Deserialize)]
struct PricesFile {
    h2_usd_per_nm3: f64,
    /// Scalar broadcast to every step, or one entry per step.
    power_usd_per_mwh: serde_json::Value,
    startup_usd: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct InitialStateFile {
    temp_k: f64,
    hto_mol: f64,
    state: OpState,
}

/// On-disk scenario layout.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct ScenarioFile {
    #[serde(default)]
    name: Option<String>,
    horizon: usize,
    step_s: f64,
    fleet: usize,
    prices: PricesFile,
    /// Inline per-step powers [MW] or a CSV path relative to this file.
    pv_profile: serde_json::Value,
    /// One state broadcast to the fleet, or one entry per unit.
    initial_states: serde_json::Value,
}

/// Loads and validates a scenario; relative CSV paths resolve against the
/// scenario file's directory.
pub fn load_scenario(path: &Path) -> Result<PlantScenario, IoError> {
    let text = std::fs::read_to_string(path).map_err(|source| IoError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let file: ScenarioFile = serde_json::from_str(&text).map_err(|source| IoError::Json {
        path: path.display().to_string(),
        source,
    })?;
    let schema = |pointer: &str, msg: String| IoError::Schema {
        path: path.display().to_string(),
        pointer: pointer.to_string(),
        msg,
    };
    let name = file.name.clone().unwrap_or_else(|| {
        path.file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "scenario".to_string())
    });
    let power_price: Vec<f64> = match &file.prices.power_usd_per_mwh {
        serde_json::Value::Number(n) => {
            let v = n.as_f64().unwrap_or(f64::NAN);
            vec![v; file.horizon]
        }
        serde_json::Value::Array(a) => {
            if a.len() != file.horizon {
                return Err(schema(
                    "/prices/power_usd_per_mwh",
                    format!("length {} does not match horizon {}", a.len(), file.horizon),
                ));
            }
            a.iter()
                .map(|v| v.as_f64().unwrap_or(f64::NAN))
                .collect()
        }
        other => {
            return Err(schema(
                "/prices/power_usd_per_mwh",
                format!("expected number or array, got {other}"),
            ))
        }
    };
    let available_power: Vec<f64> = match &file.pv_profile {
        serde_json::Value::Array(a) => a
            .iter()
            .map(|v| v.as_f64().unwrap_or(f64::NAN))
            .collect(),
        serde_json::Value::String(rel) => {
            let csv_path = path.parent().unwrap_or(Path::new(".")).join(rel);
            load_pv_csv(&csv_path)?
        }
        other => {
            return Err(schema(
                "/pv_profile",
                format!("expected array or CSV path, got {other}"),
            ))
        }
    };
    if available_power.len() != file.horizon {
        return Err(schema(
            "/pv_profile",
            format!(
                "length {} does not match horizon {}",
                available_power.len(),
                file.horizon
            ),
        ));
    }
    let parse_state = |v: &serde_json::Value, pointer: &str| -> Result<ElectrolyzerState, IoError> {
        let s: InitialStateFile = serde_json::from_value(v.clone()).map_err(|e| {
            schema(pointer, format!("bad initial state: {e}"))
        })?;
        Ok(ElectrolyzerState {
            temperature: s.temp_k,
            hto_moles: s.hto_mol,
            op_state: s.state,
        })
    };
    let initial_states: Vec<ElectrolyzerState> = match &file.initial_states {
        serde_json::Value::Array(a) => {
            if a.len() != file.fleet {
                return Err(schema(
                    "/initial_states",
                    format!("length {} does not match fleet {}", a.len(), file.fleet),
                ));
            }
            a.iter()
                .enumerate()
                .map(|(i, v)| parse_state(v, &format!("/initial_states/{i}")))
                .collect::<Result<_, _>>()?
        }
        v @ serde_json::Value::Object(_) => {
            vec![parse_state(v, "/initial_states")?; file.fleet]
        }
        other => {
            return Err(schema(
                "/initial_states",
                format!("expected object or array, got {other}"),
            ))
        }
    };
    let scenario = PlantScenario {
        name,
        horizon: file.horizon,
        step_s: file.step_s,
        fleet: file.fleet,
        available_power,
        h2_price: file.prices.h2_usd_per_nm3,
        power_price,
        startup_cost: file.prices.startup_usd,
        initial_states,
    };
    scenario.validate().map_err(|e| schema("/", e.to_string()))?;
    Ok(scenario)
}

/// Reads a PV series from CSV with header `step,power_MW` or `time,power_MW`.
pub fn load_pv_csv(path: &Path) -> Result<Vec<f64>, IoError> {
    let text = std::fs::read_to_string(path).map_err(|source| IoError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let bad = |line: usize, msg: String| IoError::Csv {
        path: path.display().to_string(),
        line,
        msg,
    };
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| bad(1, "empty file".to_string()))?;
    let header = header.trim();
    if header != "step,power_MW" && header != "time,power_MW" {
        return Err(bad(
            1,
            format!("expected header `step,power_MW` or `time,power_MW`, got `{header}`"),
        ));
    }
    let mut series = Vec::new();
    for (idx, raw) in lines {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split(',');
        let _key = parts
            .next()
            .ok_or_else(|| bad(idx + 1, "missing step column".to_string()))?;
        let power: f64 = parts
            .next()
            .ok_or_else(|| bad(idx + 1, "missing power column".to_string()))?
            .trim()
            .parse()
            .map_err(|e| bad(idx + 1, format!("bad power value: {e}")))?;
        if parts.next().is_some() {
            return Err(bad(idx + 1, "trailing columns".to_string()));
        }
        if power < 0.0 {
            return Err(bad(idx + 1, format!("negative power {power}")));
        }
        series.push(power);
    }
    Ok(series)
}

pub fn pv_to_csv(series: &[f64]) -> String {
    let mut out = String::from("step,power_MW\n");
    for (k, p) in series.iter().enumerate() {
        out.push_str(&format!("{k},{p:.4}\n"));
    }
    out
}

// ---------------------------------------------------------------------------
// synthetic PV days

/// Deterministic synthetic PV day: a sunrise-to-sunset bell with randomized
/// amplitude, day length, shape and a few cloud dips. Clearly synthetic;
/// not measurement data.
pub fn synthetic_pv_day(seed: u64, horizon: usize, step_s: f64, peak_mw: f64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sunrise = 5.8 + rng.gen::<f64>() * 1.6;
    let sunset = 18.2 + rng.gen::<f64>() * 1.8;
    let amplitude = peak_mw * (0.85 + rng.gen::<f64>() * 0.3);
    let shape = 1.1 + rng.gen::<f64>() * 0.5;
    let n_dips = 1 + (rng.gen::<f64>() * 3.0) as usize;
    let dips: Vec<(f64, f64, f64)> = (0..n_dips)
        .map(|_| {
            let center = sunrise + 1.0 + rng.gen::<f64>() * (sunset - sunrise - 2.0);
            let depth = 0.3 + rng.gen::<f64>() * 0.55;
            let width = 0.2 + rng.gen::<f64>() * 0.8;
            (center, depth, width)
        })
        .collect();
    (0..horizon)
        .map(|k| {
            let t = (k as f64 + 0.5) * step_s / 3600.0;
            if t <= sunrise || t >= sunset {
                return 0.0;
            }
            let x = (t - sunrise) / (sunset - sunrise) * std::f64::consts::PI;
            let mut p = amplitude * x.sin().powf(shape);
            for &(center, depth, width) in &dips {
                let d = (t - center) / width;
                p *= 1.0 - depth * (-0.5 * d * d).exp();
            }
            p.max(0.0)
        })
        .collect()
}

/// The bundled scenario batch: one fixed PV day plus synthetic days.
pub fn synthetic_batch(
    base: &PlantScenario,
    n_days: usize,
    peak_mw: f64,
) -> Vec<PlantScenario> {
    (0..n_days)
        .map(|d| {
            let mut s = base.clone();
            s.name = format!("synth_{d:02}");
            s.available_power =
                synthetic_pv_day(1000 + d as u64, base.horizon, base.step_s, peak_mw);
            s
        })
        .collect()
}

/// Locates the crate's bundled data directory.
pub fn data_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_params_meet_calibration_targets() {
        let p = reference_params();
        p.validate().unwrap();
        // (a) rated power near 2.0 V/cell warm
        let i = crate::physics::current_from_power(p.rated_power, 353.0, &p);
        let u = crate::physics::cell_voltage(i, 353.0, &p);
        assert!((1.95..=2.05).contains(&u), "rated warm voltage {u}");
        // (b) cold start: the voltage cap current is below rated current
        let i_rated = crate::physics::current_from_power(p.rated_power, 353.0, &p);
        let i_cap = (p.max_cell_voltage
            - (p.voltage_coeffs.a0 + p.voltage_coeffs.a1 * p.ambient_temp))
            / p.voltage_coeffs.a2;
        assert!(i_cap < i_rated, "cold cap {i_cap} vs rated {i_rated}");
        // (c) minimum steady load calibrates to 34%
        let load = crate::physics::min_steady_load(&p).unwrap();
        assert!((load - 0.34).abs() < 5e-3, "steady load {load}");
    }

    #[test]
    fn params_file_round_trip() {
        let p = reference_params();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("params.json");
        save_params(&p, &path).unwrap();
        let back = load_params(&path).unwrap();
        assert_eq!(p, back);
        // flags present in the file
        let text = std::fs::read_to_string(&path).unwrap();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["heat_capacity"]["implementer_default"], true);
        assert_eq!(v["hto_inflow"]["implementer_default"], false);
    }

    #[test]
    fn scenario_loading_and_schema_errors() {
        let dir = tempfile::tempdir().unwrap();
        let pv = dir.path().join("pv.csv");
        std::fs::write(&pv, pv_to_csv(&[0.0, 5.0, 10.0, 3.0])).unwrap();
        let scenario_path = dir.path().join("scenario.json");
        std::fs::write(
            &scenario_path,
            serde_json::json!({
                "horizon": 4,
                "step_s": 900.0,
                "fleet": 2,
                "prices": {"h2_usd_per_nm3": 0.38, "power_usd_per_mwh": 34.7, "startup_usd": 280.0},
                "pv_profile": "pv.csv",
                "initial_states": {"temp_k": 298.0, "hto_mol": 0.0, "state": "idle"}
            })
            .to_string(),
        )
        .unwrap();
        let sc = load_scenario(&scenario_path).unwrap();
        assert_eq!(sc.horizon, 4);
        assert_eq!(sc.fleet, 2);
        assert_eq!(sc.power_price, vec![34.7; 4], "scalar price broadcast");
        assert_eq!(sc.available_power[2], 10.0);

        // length mismatch names the field
        std::fs::write(
            &scenario_path,
            serde_json::json!({
                "horizon": 4,
                "step_s": 900.0,
                "fleet": 1,
                "prices": {"h2_usd_per_nm3": 0.38, "power_usd_per_mwh": [1.0, 2.0], "startup_usd": 280.0},
                "pv_profile": [0.0, 0.0, 0.0, 0.0],
                "initial_states": {"temp_k": 298.0, "hto_mol": 0.0, "state": "idle"}
            })
            .to_string(),
        )
        .unwrap();
        match load_scenario(&scenario_path) {
            Err(IoError::Schema { pointer, .. }) => {
                assert_eq!(pointer, "/prices/power_usd_per_mwh")
            }
            other => panic!("expected schema error, got {other:?}"),
        }
    }

    #[test]
    fn pv_csv_rejects_negative_and_malformed_rows() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("pv.csv");
        std::fs::write(&path, "step,power_MW\n0,1.0\n1,-1.0\n").unwrap();
        match load_pv_csv(&path) {
            Err(IoError::Csv { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected CSV error, got {other:?}"),
        }
        std::fs::write(&path, "step,power_MW\n0,abc\n").unwrap();
        assert!(matches!(load_pv_csv(&path), Err(IoError::Csv { line: 2, .. })));
        // all-zero file is fine
        std::fs::write(&path, "step,power_MW\n0,0\n1,0\n").unwrap();
        assert_eq!(load_pv_csv(&path).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn synthetic_days_are_deterministic_and_nonnegative() {
        let a = synthetic_pv_day(7, 96, 900.0, 32.0);
        let b = synthetic_pv_day(7, 96, 900.0, 32.0);
        assert_eq!(a, b);
        assert!(a.iter().all(|&p| p >= 0.0));
        assert!(a.iter().any(|&p| p > 10.0), "daylight exists");
        assert_eq!(a[0], 0.0, "night at the start");
        let c = synthetic_pv_day(8, 96, 900.0, 32.0);
        assert_ne!(a, c, "different seeds differ");
    }
}
