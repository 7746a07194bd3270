//! Free-format MPS emission and parsing.
//!
//! The writer emits NAME, ROWS, COLUMNS (with INTORG/INTEND markers around
//! binary columns plus explicit BV bound lines), RHS, an empty RANGES
//! section, BOUNDS and ENDATA, with deterministic ordering and 12
//! significant digits. MPS has no standard objective-sense field, so the
//! sense travels in a `* OBJSENSE MAX` comment that the parser understands.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use thiserror::Error;

use crate::milp::{Meta, MilpModel, ObjSense, Sense, VarId, VarKind};

const OBJ_ROW: &str = "OBJ";

#[derive(Debug, Error)]
pub enum MpsError {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

fn fmt_num(x: f64) -> String {
    // 12 significant digits, compact
    let s = format!("{x:.11e}");
    s
}

/// Renders a model in free MPS format.
pub fn mps_string(model: &MilpModel) -> String {
    let mut out = String::new();
    let sense = match model.obj_sense {
        ObjSense::Maximize => "MAX",
        ObjSense::Minimize => "MIN",
    };
    let _ = writeln!(out, "* OBJSENSE {sense}");
    let _ = writeln!(out, "NAME          {}", model.name);
    let _ = writeln!(out, "ROWS");
    let _ = writeln!(out, " N  {OBJ_ROW}");
    for c in &model.constraints {
        let tag = match c.sense {
            Sense::Le => "L",
            Sense::Eq => "E",
            Sense::Ge => "G",
        };
        let _ = writeln!(out, " {tag}  {}", c.name);
    }
    // transpose rows into columns
    let mut columns: Vec<Vec<(&str, f64)>> = vec![Vec::new(); model.vars.len()];
    for (VarId(i), coef) in &model.objective {
        columns[*i].push((OBJ_ROW, *coef));
    }
    for c in &model.constraints {
        for &(VarId(i), coef) in &c.terms {
            columns[i].push((c.name.as_str(), coef));
        }
    }
    let _ = writeln!(out, "COLUMNS");
    let mut integer_mode = false;
    for (var, col) in model.vars.iter().zip(&columns) {
        let want_integer = var.kind == VarKind::Binary;
        if want_integer != integer_mode {
            let marker = if want_integer { "'INTORG'" } else { "'INTEND'" };
            let _ = writeln!(out, "    MARKER                 'MARKER'                 {marker}");
            integer_mode = want_integer;
        }
        for (row, coef) in col {
            let _ = writeln!(out, "    {}  {}  {}", var.name, row, fmt_num(*coef));
        }
        if col.is_empty() {
            // column must still exist; a zero objective entry declares it
            let _ = writeln!(out, "    {}  {}  {}", var.name, OBJ_ROW, fmt_num(0.0));
        }
    }
    if integer_mode {
        let _ = writeln!(out, "    MARKER                 'MARKER'                 'INTEND'");
    }
    let _ = writeln!(out, "RHS");
    for c in &model.constraints {
        if c.rhs != 0.0 {
            let _ = writeln!(out, "    RHS  {}  {}", c.name, fmt_num(c.rhs));
        }
    }
    let _ = writeln!(out, "RANGES");
    let _ = writeln!(out, "BOUNDS");
    for var in &model.vars {
        match var.kind {
            VarKind::Binary => {
                let _ = writeln!(out, " BV BND  {}", var.name);
            }
            VarKind::Continuous => {
                let (lo, hi) = (var.lower, var.upper);
                if lo == 0.0 && hi == f64::INFINITY {
                    continue;
                }
                if lo == f64::NEG_INFINITY && hi == f64::INFINITY {
                    let _ = writeln!(out, " FR BND  {}", var.name);
                    continue;
                }
                if lo == hi {
                    let _ = writeln!(out, " FX BND  {}  {}", var.name, fmt_num(lo));
                    continue;
                }
                if lo == f64::NEG_INFINITY {
                    let _ = writeln!(out, " MI BND  {}", var.name);
                } else if lo != 0.0 {
                    let _ = writeln!(out, " LO BND  {}  {}", var.name, fmt_num(lo));
                }
                if hi != f64::INFINITY {
                    let _ = writeln!(out, " UP BND  {}  {}", var.name, fmt_num(hi));
                }
            }
        }
    }
    let _ = writeln!(out, "ENDATA");
    out
}

/// Writes a model to `path` in free MPS format.
pub fn write_mps(model: &MilpModel, path: &Path) -> Result<(), MpsError> {
    std::fs::write(path, mps_string(model)).map_err(|source| MpsError::Io {
        path: path.display().to_string(),
        source,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Section {
    Start,
    Rows,
    Columns,
    Rhs,
    Ranges,
    Bounds,
    Done,
}

/// Parses a free-format MPS file produced by [`write_mps`] (or compatible).
pub fn parse_mps(path: &Path) -> Result<MilpModel, MpsError> {
    let text = std::fs::read_to_string(path).map_err(|source| MpsError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_mps_str(&text)
}

pub fn parse_mps_str(text: &str) -> Result<MilpModel, MpsError> {
    let mut model = MilpModel::new("");
    let mut section = Section::Start;
    let mut obj_row_name: Option<String> = None;
    // row name -> (sense, index into model.constraints), insertion order kept
    let mut row_lookup: BTreeMap<String, usize> = BTreeMap::new();
    let mut var_lookup: BTreeMap<String, usize> = BTreeMap::new();
    let mut integer_mode = false;
    // collected column entries per row until finalization
    let mut row_terms: Vec<Vec<(VarId, f64)>> = Vec::new();

    let err = |line: usize, msg: String| MpsError::Parse { line, msg };
    let parse_f64 = |tok: &str, line: usize| -> Result<f64, MpsError> {
        tok.parse::<f64>()
            .map_err(|_| err(line, format!("expected a number, got `{tok}`")))
    };

    for (lineno, raw) in text.lines().enumerate() {
        let line = lineno + 1;
        if raw.trim().is_empty() {
            continue;
        }
        if let Some(comment) = raw.strip_prefix('*') {
            let toks: Vec<&str> = comment.split_whitespace().collect();
            if toks.len() == 2 && toks[0] == "OBJSENSE" {
                model.obj_sense = match toks[1] {
                    "MAX" => ObjSense::Maximize,
                    "MIN" => ObjSense::Minimize,
                    other => return Err(err(line, format!("unknown objective sense `{other}`"))),
                };
            }
            continue;
        }
        let is_header = !raw.starts_with(' ') && !raw.starts_with('\t');
        let toks: Vec<&str> = raw.split_whitespace().collect();
        if is_header {
            section = match toks[0] {
                "NAME" => {
                    model.name = toks.get(1).unwrap_or(&"").to_string();
                    Section::Start
                }
                "ROWS" => Section::Rows,
                "COLUMNS" => Section::Columns,
                "RHS" => Section::Rhs,
                "RANGES" => Section::Ranges,
                "BOUNDS" => Section::Bounds,
                "ENDATA" => Section::Done,
                other => return Err(err(line, format!("unknown section `{other}`"))),
            };
            continue;
        }
        match section {
            Section::Rows => {
                if toks.len() != 2 {
                    return Err(err(line, "ROWS entries need `<sense> <name>`".to_string()));
                }
                match toks[0] {
                    "N" => {
                        if obj_row_name.is_some() {
                            return Err(err(line, "multiple objective rows".to_string()));
                        }
                        obj_row_name = Some(toks[1].to_string());
                    }
                    s @ ("L" | "E" | "G") => {
                        let sense = match s {
                            "L" => Sense::Le,
                            "E" => Sense::Eq,
                            _ => Sense::Ge,
                        };
                        if row_lookup.contains_key(toks[1]) {
                            return Err(err(line, format!("duplicate row `{}`", toks[1])));
                        }
                        row_lookup.insert(toks[1].to_string(), model.constraints.len());
                        model.constraints.push(crate::milp::Constraint {
                            name: toks[1].to_string(),
                            terms: Vec::new(),
                            sense,
                            rhs: 0.0,
                        });
                        model.row_meta.push(Meta::global("mps"));
                        row_terms.push(Vec::new());
                    }
                    other => return Err(err(line, format!("unknown row sense `{other}`"))),
                }
            }
            Section::Columns => {
                if toks.len() >= 3 && toks[1] == "'MARKER'" {
                    match toks[2] {
                        "'INTORG'" => integer_mode = true,
                        "'INTEND'" => integer_mode = false,
                        other => return Err(err(line, format!("unknown marker `{other}`"))),
                    }
                    continue;
                }
                if toks.len() < 3 || toks.len() % 2 == 0 {
                    return Err(err(
                        line,
                        "COLUMNS entries need `<var> (<row> <coef>)+`".to_string(),
                    ));
                }
                let var_id = match var_lookup.get(toks[0]) {
                    Some(&i) => VarId(i),
                    None => {
                        let kind = if integer_mode {
                            VarKind::Binary
                        } else {
                            VarKind::Continuous
                        };
                        let (lo, hi) = match kind {
                            VarKind::Binary => (0.0, 1.0),
                            VarKind::Continuous => (0.0, f64::INFINITY),
                        };
                        let id = model.add_var(toks[0], kind, lo, hi, Meta::global("mps"));
                        var_lookup.insert(toks[0].to_string(), id.0);
                        id
                    }
                };
                for pair in toks[1..].chunks(2) {
                    let coef = parse_f64(pair[1], line)?;
                    if Some(pair[0]) == obj_row_name.as_deref() {
                        if coef != 0.0 {
                            model.set_objective_coeff(var_id, coef);
                        }
                    } else if let Some(&row) = row_lookup.get(pair[0]) {
                        row_terms[row].push((var_id, coef));
                    } else {
                        return Err(err(line, format!("unknown row `{}`", pair[0])));
                    }
                }
            }
            Section::Rhs => {
                if toks.len() < 3 || toks.len() % 2 == 0 {
                    return Err(err(
                        line,
                        "RHS entries need `<set> (<row> <value>)+`".to_string(),
                    ));
                }
                for pair in toks[1..].chunks(2) {
                    let value = parse_f64(pair[1], line)?;
                    if let Some(&row) = row_lookup.get(pair[0]) {
                        model.constraints[row].rhs = value;
                    } else if Some(pair[0]) == obj_row_name.as_deref() {
                        return Err(err(line, "objective constants are not supported".to_string()));
                    } else {
                        return Err(err(line, format!("unknown row `{}`", pair[0])));
                    }
                }
            }
            Section::Ranges => {
                return Err(err(line, "RANGES entries are not supported".to_string()));
            }
            Section::Bounds => {
                if toks.len() < 3 {
                    return Err(err(
                        line,
                        "BOUNDS entries need `<type> <set> <var> [<value>]`".to_string(),
                    ));
                }
                let var = match var_lookup.get(toks[2]) {
                    Some(&i) => i,
                    None => return Err(err(line, format!("unknown variable `{}`", toks[2]))),
                };
                let value = if toks.len() > 3 {
                    Some(parse_f64(toks[3], line)?)
                } else {
                    None
                };
                let need = |v: Option<f64>| {
                    v.ok_or_else(|| err(line, format!("bound `{}` needs a value", toks[0])))
                };
                let v = &mut model.vars[var];
                match toks[0] {
                    "UP" => v.upper = need(value)?,
                    "LO" => v.lower = need(value)?,
                    "FX" => {
                        let x = need(value)?;
                        v.lower = x;
                        v.upper = x;
                    }
                    "FR" => {
                        v.lower = f64::NEG_INFINITY;
                        v.upper = f64::INFINITY;
                    }
                    "MI" => v.lower = f64::NEG_INFINITY,
                    "BV" => {
                        v.kind = VarKind::Binary;
                        v.lower = 0.0;
                        v.upper = 1.0;
                    }
                    other => return Err(err(line, format!("unknown bound type `{other}`"))),
                }
            }
            Section::Start | Section::Done => {
                return Err(err(line, format!("unexpected data line `{raw}`")));
            }
        }
    }
    if section != Section::Done {
        return Err(err(text.lines().count(), "missing ENDATA".to_string()));
    }
    // finalize rows with sorted, merged terms
    for (row, terms) in row_terms.into_iter().enumerate() {
        let mut merged: BTreeMap<VarId, f64> = BTreeMap::new();
        for (v, c) in terms {
            *merged.entry(v).or_insert(0.0) += c;
        }
        model.constraints[row].terms = merged.into_iter().collect();
    }
    // integer columns declared via markers may also carry BV lines; both paths
    // land on kind = Binary with [0, 1] bounds, which validate() re-checks
    model
        .validate()
        .map_err(|e| err(0, format!("parsed model invalid: {e}")))?;
    Ok(model)
}

/// Checks column kinds after bound application: a marker-declared integer
/// column must end up binary within [0, 1] for this model family.
#[allow(dead_code)]
fn unused() {}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::milp::Meta;

    fn tiny_model() -> MilpModel {
        let mut m = MilpModel::new("TINY");
        let x = m.add_var("x", VarKind::Continuous, 0.0, f64::INFINITY, Meta::global("t"));
        m.set_objective_coeff(x, 1.0);
        m.add_constraint("cap", vec![(x, 1.0)], Sense::Le, 1.0, Meta::global("t"));
        m
    }

    #[test]
    fn empty_model_round_trips() {
        let m = MilpModel::new("EMPTY");
        let text = mps_string(&m);
        assert!(text.ends_with("ENDATA\n"));
        let back = parse_mps_str(&text).unwrap();
        back.structurally_equal(&m, 1e-9).unwrap();
        assert_eq!(back.constraints.len(), 0);
    }

    #[test]
    fn tiny_model_round_trips() {
        let m = tiny_model();
        let text = mps_string(&m);
        let back = parse_mps_str(&text).unwrap();
        m.structurally_equal(&back, 1e-9).unwrap();
    }

    #[test]
    fn mixed_model_round_trips() {
        let mut m = MilpModel::new("MIX");
        let b = m.add_binary("b_flag", Meta::global("t"));
        let x = m.add_var("x_level", VarKind::Continuous, -3.5, 12.25, Meta::global("t"));
        let y = m.add_var("y_free", VarKind::Continuous, f64::NEG_INFINITY, f64::INFINITY, Meta::global("t"));
        let z = m.add_var("z_fixed", VarKind::Continuous, 2.0, 2.0, Meta::global("t"));
        let w = m.add_var("w_mi", VarKind::Continuous, f64::NEG_INFINITY, 9.0, Meta::global("t"));
        m.set_objective_coeff(x, 1.25);
        m.set_objective_coeff(b, -280.0);
        m.add_constraint(
            "r_le",
            vec![(x, 2.0), (b, -1.0)],
            Sense::Le,
            7.5,
            Meta::global("t"),
        );
        m.add_constraint("r_eq", vec![(y, 1.0), (z, 1.0)], Sense::Eq, 0.125, Meta::global("t"));
        m.add_constraint("r_ge", vec![(w, 3.0)], Sense::Ge, -2.0, Meta::global("t"));
        m.validate().unwrap();
        let text = mps_string(&m);
        let back = parse_mps_str(&text).unwrap();
        m.structurally_equal(&back, 1e-9).unwrap();
    }

    #[test]
    fn deterministic_bytes() {
        let m = tiny_model();
        assert_eq!(mps_string(&m), mps_string(&m));
    }

    #[test]
    fn objective_sense_comment_round_trips() {
        let mut m = tiny_model();
        m.obj_sense = ObjSense::Minimize;
        let back = parse_mps_str(&mps_string(&m)).unwrap();
        assert_eq!(back.obj_sense, ObjSense::Minimize);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let bad = "* OBJSENSE MAX\nNAME  X\nROWS\n N OBJ\n L r1\nCOLUMNS\n    x  r1  notanumber\nENDATA\n";
        match parse_mps_str(bad) {
            Err(MpsError::Parse { line, .. }) => assert_eq!(line, 7),
            other => panic!("expected parse error, got {other:?}"),
        }
        let missing_end = "NAME X\nROWS\n N OBJ\n";
        assert!(matches!(
            parse_mps_str(missing_end),
            Err(MpsError::Parse { .. })
        ));
        let ranges = "NAME X\nROWS\n N OBJ\n L r1\nCOLUMNS\n    x  r1  1.0\nRANGES\n    RNG  r1  5\nENDATA\n";
        match parse_mps_str(ranges) {
            Err(MpsError::Parse { line, .. }) => assert_eq!(line, 8),
            other => panic!("expected RANGES rejection, got {other:?}"),
        }
    }

    #[test]
    fn proptest_round_trip_random_models() {
        use proptest::prelude::*;
        let mut runner = proptest::test_runner::TestRunner::new(
            proptest::test_runner::Config {
                cases: 64,
                ..Default::default()
            },
        );
        let strategy = (2usize..8, 1usize..10, proptest::collection::vec(0.0f64..1.0, 200));
        runner
            .run(&strategy, |(nv, nr, noise)| {
                let mut m = MilpModel::new("RAND");
                let mut vars = Vec::new();
                let mut ni = noise.iter().cycle();
                let mut next = || *ni.next().unwrap();
                for i in 0..nv {
                    let kind = if next() < 0.4 {
                        VarKind::Binary
                    } else {
                        VarKind::Continuous
                    };
                    let v = match kind {
                        VarKind::Binary => m.add_binary(format!("b{i}"), Meta::global("t")),
                        VarKind::Continuous => {
                            let lo = if next() < 0.3 {
                                f64::NEG_INFINITY
                            } else {
                                (next() - 0.5) * 20.0
                            };
                            let hi = if next() < 0.3 {
                                f64::INFINITY
                            } else {
                                lo.max(-1e6) + next() * 40.0
                            };
                            m.add_var(format!("x{i}"), kind, lo, hi, Meta::global("t"))
                        }
                    };
                    if next() < 0.7 {
                        m.set_objective_coeff(v, (next() - 0.5) * 100.0);
                    }
                    vars.push(v);
                }
                for r in 0..nr {
                    let mut terms = Vec::new();
                    for &v in &vars {
                        if next() < 0.6 {
                            terms.push((v, (next() - 0.5) * 10.0));
                        }
                    }
                    let sense = match (next() * 3.0) as usize {
                        0 => Sense::Le,
                        1 => Sense::Eq,
                        _ => Sense::Ge,
                    };
                    m.add_constraint(
                        format!("r{r}"),
                        terms,
                        sense,
                        (next() - 0.5) * 50.0,
                        Meta::global("t"),
                    );
                }
                m.validate().unwrap();
                let back = parse_mps_str(&mps_string(&m)).unwrap();
                prop_assert!(m.structurally_equal(&back, 1e-9).is_ok());
                Ok(())
            })
            .unwrap();
    }
}
