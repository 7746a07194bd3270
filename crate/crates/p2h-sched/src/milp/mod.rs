//! Solver-agnostic mixed-integer linear model: typed variables, sparse
//! constraint rows, a linear objective, and metadata tying every variable
//! and row back to (electrolyzer, step, equation tag) for diagnostics.

pub mod build;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VarKind {
    Binary,
    Continuous,
}

/// Index of a variable within its model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VarId(pub usize);

#[derive(Debug, Clone, PartialEq)]
pub struct Variable {
    pub name: String,
    pub kind: VarKind,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sense {
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = "=")]
    Eq,
    #[serde(rename = ">=")]
    Ge,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub name: String,
    /// Sorted by variable index, duplicates merged.
    pub terms: Vec<(VarId, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ObjSense {
    Maximize,
    Minimize,
}

/// Provenance of a variable or row: which electrolyzer and step it belongs
/// to, and which model-equation family produced it.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Meta {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub unit: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub step: Option<usize>,
    pub tag: String,
}

impl Meta {
    pub fn new(unit: usize, step: usize, tag: &str) -> Self {
        Meta {
            unit: Some(unit),
            step: Some(step),
            tag: tag.to_string(),
        }
    }

    pub fn step_only(step: usize, tag: &str) -> Self {
        Meta {
            unit: None,
            step: Some(step),
            tag: tag.to_string(),
        }
    }

    pub fn global(tag: &str) -> Self {
        Meta {
            unit: None,
            step: None,
            tag: tag.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MilpModel {
    pub name: String,
    pub vars: Vec<Variable>,
    pub constraints: Vec<Constraint>,
    /// Sparse objective, sorted by variable index.
    pub objective: Vec<(VarId, f64)>,
    pub obj_sense: ObjSense,
    /// Parallel to `vars`.
    pub var_meta: Vec<Meta>,
    /// Parallel to `constraints`.
    pub row_meta: Vec<Meta>,
}

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("duplicate variable name `{0}`")]
    DuplicateVar(String),
    #[error("duplicate constraint name `{0}`")]
    DuplicateRow(String),
    #[error("constraint `{0}` references undeclared variable index {1}")]
    BadVarRef(String, usize),
    #[error("binary variable `{0}` has bounds [{1}, {2}], expected within [0, 1]")]
    BadBinaryBounds(String, f64, f64),
    #[error("variable `{0}` has inverted bounds [{1}, {2}]")]
    InvertedBounds(String, f64, f64),
    #[error("name `{0}` exceeds 255 characters")]
    NameTooLong(String),
    #[error("assignment missing variable `{0}`")]
    MissingAssignment(String),
}

impl MilpModel {
    pub fn new(name: &str) -> Self {
        MilpModel {
            name: name.to_string(),
            vars: Vec::new(),
            constraints: Vec::new(),
            objective: Vec::new(),
            obj_sense: ObjSense::Maximize,
            var_meta: Vec::new(),
            row_meta: Vec::new(),
        }
    }

    pub fn add_var(
        &mut self,
        name: impl Into<String>,
        kind: VarKind,
        lower: f64,
        upper: f64,
        meta: Meta,
    ) -> VarId {
        let id = VarId(self.vars.len());
        self.vars.push(Variable {
            name: name.into(),
            kind,
            lower,
            upper,
        });
        self.var_meta.push(meta);
        id
    }

    pub fn add_binary(&mut self, name: impl Into<String>, meta: Meta) -> VarId {
        self.add_var(name, VarKind::Binary, 0.0, 1.0, meta)
    }

    /// Adds a row; terms are merged and sorted by variable index.
    pub fn add_constraint(
        &mut self,
        name: impl Into<String>,
        terms: Vec<(VarId, f64)>,
        sense: Sense,
        rhs: f64,
        meta: Meta,
    ) {
        let mut merged: BTreeMap<VarId, f64> = BTreeMap::new();
        for (v, c) in terms {
            *merged.entry(v).or_insert(0.0) += c;
        }
        self.constraints.push(Constraint {
            name: name.into(),
            terms: merged.into_iter().collect(),
            sense,
            rhs,
        });
        self.row_meta.push(meta);
    }

    pub fn set_objective_coeff(&mut self, var: VarId, coeff: f64) {
        match self.objective.binary_search_by_key(&var, |&(v, _)| v) {
            Ok(pos) => self.objective[pos].1 += coeff,
            Err(pos) => self.objective.insert(pos, (var, coeff)),
        }
    }

    pub fn var_index(&self) -> BTreeMap<&str, usize> {
        self.vars
            .iter()
            .enumerate()
            .map(|(i, v)| (v.name.as_str(), i))
            .collect()
    }

    pub fn n_binaries(&self) -> usize {
        self.vars.iter().filter(|v| v.kind == VarKind::Binary).count()
    }

    /// Structural invariants: unique short names, declared references,
    /// binary bounds within [0, 1].
    pub fn validate(&self) -> Result<(), ModelError> {
        let mut names = std::collections::BTreeSet::new();
        for v in &self.vars {
            if v.name.len() > 255 {
                return Err(ModelError::NameTooLong(v.name.clone()));
            }
            if !names.insert(v.name.as_str()) {
                return Err(ModelError::DuplicateVar(v.name.clone()));
            }
            if v.lower > v.upper {
                return Err(ModelError::InvertedBounds(v.name.clone(), v.lower, v.upper));
            }
            if v.kind == VarKind::Binary && (v.lower < 0.0 || v.upper > 1.0) {
                return Err(ModelError::BadBinaryBounds(
                    v.name.clone(),
                    v.lower,
                    v.upper,
                ));
            }
        }
        let mut rows = std::collections::BTreeSet::new();
        for c in &self.constraints {
            if c.name.len() > 255 {
                return Err(ModelError::NameTooLong(c.name.clone()));
            }
            if !rows.insert(c.name.as_str()) {
                return Err(ModelError::DuplicateRow(c.name.clone()));
            }
            for &(VarId(i), _) in &c.terms {
                if i >= self.vars.len() {
                    return Err(ModelError::BadVarRef(c.name.clone(), i));
                }
            }
        }
        for &(VarId(i), _) in &self.objective {
            if i >= self.vars.len() {
                return Err(ModelError::BadVarRef("<objective>".to_string(), i));
            }
        }
        Ok(())
    }

    /// Objective value of a full assignment (by variable order).
    pub fn objective_value(&self, values: &[f64]) -> f64 {
        self.objective
            .iter()
            .map(|&(VarId(i), c)| c * values[i])
            .sum()
    }

    /// Checks an assignment against every bound, integrality requirement and
    /// row, with tolerance `tol * (1 + |rhs|)`. Returns human-readable
    /// violation descriptions; empty means feasible.
    pub fn violations(&self, values: &[f64], tol: f64) -> Vec<String> {
        let mut out = Vec::new();
        for (v, &x) in self.vars.iter().zip(values) {
            let t = tol * (1.0 + v.lower.abs().max(v.upper.abs().min(1e100)));
            if x < v.lower - t || x > v.upper + t {
                out.push(format!(
                    "variable {} = {x} outside [{}, {}]",
                    v.name, v.lower, v.upper
                ));
            }
            if v.kind == VarKind::Binary && (x - x.round()).abs() > 1e-5 {
                out.push(format!("binary {} = {x} is fractional", v.name));
            }
        }
        for c in &self.constraints {
            let lhs: f64 = c.terms.iter().map(|&(VarId(i), co)| co * values[i]).sum();
            let t = tol * (1.0 + c.rhs.abs());
            let bad = match c.sense {
                Sense::Le => lhs > c.rhs + t,
                Sense::Ge => lhs < c.rhs - t,
                Sense::Eq => (lhs - c.rhs).abs() > t,
            };
            if bad {
                out.push(format!(
                    "row {}: lhs {lhs} {} rhs {}",
                    c.name,
                    match c.sense {
                        Sense::Le => "<=",
                        Sense::Eq => "=",
                        Sense::Ge => ">=",
                    },
                    c.rhs
                ));
            }
        }
        out
    }

    /// Solver-facing equality: names, kinds, bounds, rows and objective agree
    /// within `tol` on coefficients. Metadata is not part of the interchange
    /// format and is ignored.
    pub fn structurally_equal(&self, other: &MilpModel, tol: f64) -> Result<(), String> {
        let close = |a: f64, b: f64| -> bool {
            if a.is_infinite() || b.is_infinite() {
                return a == b;
            }
            (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
        };
        if self.name != other.name {
            return Err(format!("name: {} vs {}", self.name, other.name));
        }
        if self.obj_sense != other.obj_sense {
            return Err("objective sense differs".to_string());
        }
        if self.vars.len() != other.vars.len() {
            return Err(format!(
                "variable count: {} vs {}",
                self.vars.len(),
                other.vars.len()
            ));
        }
        for (a, b) in self.vars.iter().zip(&other.vars) {
            if a.name != b.name || a.kind != b.kind {
                return Err(format!("variable {} kind/name mismatch", a.name));
            }
            if !close(a.lower, b.lower) || !close(a.upper, b.upper) {
                return Err(format!("variable {} bounds mismatch", a.name));
            }
        }
        if self.constraints.len() != other.constraints.len() {
            return Err(format!(
                "row count: {} vs {}",
                self.constraints.len(),
                other.constraints.len()
            ));
        }
        for (a, b) in self.constraints.iter().zip(&other.constraints) {
            if a.name != b.name || a.sense != b.sense {
                return Err(format!("row {} name/sense mismatch", a.name));
            }
            if !close(a.rhs, b.rhs) {
                return Err(format!("row {} rhs {} vs {}", a.name, a.rhs, b.rhs));
            }
            if a.terms.len() != b.terms.len() {
                return Err(format!("row {} term count mismatch", a.name));
            }
            for (&(va, ca), &(vb, cb)) in a.terms.iter().zip(&b.terms) {
                if va != vb || !close(ca, cb) {
                    return Err(format!("row {} coefficient mismatch", a.name));
                }
            }
        }
        if self.objective.len() != other.objective.len() {
            return Err("objective term count mismatch".to_string());
        }
        for (&(va, ca), &(vb, cb)) in self.objective.iter().zip(&other.objective) {
            if va != vb || !close(ca, cb) {
                return Err(format!("objective coefficient mismatch at {}", va.0));
            }
        }
        Ok(())
    }

    /// Diagnostics export: variable and row names mapped to provenance.
    pub fn metadata_json(&self) -> serde_json::Value {
        let vars: BTreeMap<&str, &Meta> = self
            .vars
            .iter()
            .zip(&self.var_meta)
            .map(|(v, m)| (v.name.as_str(), m))
            .collect();
        let rows: BTreeMap<&str, &Meta> = self
            .constraints
            .iter()
            .zip(&self.row_meta)
            .map(|(c, m)| (c.name.as_str(), m))
            .collect();
        serde_json::json!({ "variables": vars, "rows": rows })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn merge_and_sort_terms() {
        let mut m = MilpModel::new("t");
        let x = m.add_var("x", VarKind::Continuous, 0.0, 1.0, Meta::global("test"));
        let y = m.add_var("y", VarKind::Continuous, 0.0, 1.0, Meta::global("test"));
        m.add_constraint(
            "r",
            vec![(y, 1.0), (x, 2.0), (y, 3.0)],
            Sense::Le,
            5.0,
            Meta::global("test"),
        );
        assert_eq!(m.constraints[0].terms, vec![(x, 2.0), (y, 4.0)]);
        m.validate().unwrap();
    }

    #[test]
    fn validation_rejects_duplicates_and_bad_bounds() {
        let mut m = MilpModel::new("t");
        m.add_var("x", VarKind::Continuous, 0.0, 1.0, Meta::global("test"));
        m.add_var("x", VarKind::Continuous, 0.0, 1.0, Meta::global("test"));
        assert!(matches!(m.validate(), Err(ModelError::DuplicateVar(_))));

        let mut m = MilpModel::new("t");
        m.add_var("b", VarKind::Binary, 0.0, 2.0, Meta::global("test"));
        assert!(matches!(m.validate(), Err(ModelError::BadBinaryBounds(..))));
    }

    #[test]
    fn violations_catch_bound_row_and_integrality() {
        let mut m = MilpModel::new("t");
        let x = m.add_var("x", VarKind::Continuous, 0.0, 10.0, Meta::global("test"));
        let b = m.add_binary("b", Meta::global("test"));
        m.add_constraint("cap", vec![(x, 1.0), (b, 5.0)], Sense::Le, 6.0, Meta::global("test"));
        assert!(m.violations(&[1.0, 1.0], 1e-6).is_empty());
        let v = m.violations(&[2.0, 1.0], 1e-6);
        assert_eq!(v.len(), 1, "{v:?}");
        let v = m.violations(&[0.5, 0.5], 1e-6);
        assert_eq!(v.len(), 1, "{v:?}");
        let v = m.violations(&[-1.0, 0.0], 1e-6);
        assert_eq!(v.len(), 1, "{v:?}");
    }
}
