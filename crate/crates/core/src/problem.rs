//! Problem data: objective weights `c_m`, constraint weights `a_{j,m}` and
//! thresholds `b_j`, plus POVMs and state ensembles.
//!
//! A problem asks for the POVM maximizing `f(Π) = Σ_m Tr(c_m Π_m)` subject to
//! `β_j(Π) = Σ_m Tr(a_{j,m} Π_m) ≥ b_j` for every constraint row `j`.
//! The solvers assume every weight is PSD and every threshold nonnegative;
//! [`DiscriminationProblem::normalize`] brings an arbitrary Hermitian problem
//! into that form by shifting each family by a multiple of the identity.

use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::linalg::{HermitianMatrix, C64, TOL_PSD};

/// Completeness tolerance (Frobenius) for `Σ Π_m = I`.
pub const TOL_POVM: f64 = 1e-9;
/// Absolute slack allowed by [`DiscriminationProblem::is_feasible`].
pub const TOL_FEAS: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct DiscriminationProblem {
    dim: usize,
    c: Vec<HermitianMatrix>,
    a: Vec<Vec<HermitianMatrix>>,
    b: Vec<f64>,
    /// `Tr τ_c` accumulated by normalization: normalized f = raw f + offset.
    offset: f64,
}

/// Which operator family a diagnostic refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Family {
    Objective,
    Constraint(usize),
}

#[derive(Clone, Debug, PartialEq)]
pub enum Violation {
    PsdViolation {
        family: Family,
        index: usize,
        min_eigenvalue: f64,
    },
    NegativeThreshold {
        index: usize,
        value: f64,
    },
}

impl DiscriminationProblem {
    pub fn new(
        c: Vec<HermitianMatrix>,
        a: Vec<Vec<HermitianMatrix>>,
        b: Vec<f64>,
    ) -> Result<Self> {
        let m = c.len();
        if m == 0 {
            return Err(Error::InvalidConfig("problem needs at least one outcome".into()));
        }
        let dim = c[0].dim();
        check_dims(&c, dim)?;
        if a.len() != b.len() {
            return Err(Error::DimensionMismatch {
                expected: a.len(),
                found: b.len(),
            });
        }
        for row in &a {
            if row.len() != m {
                return Err(Error::DimensionMismatch {
                    expected: m,
                    found: row.len(),
                });
            }
            check_dims(row, dim)?;
        }
        if b.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidConfig("thresholds must be finite".into()));
        }
        Ok(Self {
            dim,
            c,
            a,
            b,
            offset: 0.0,
        })
    }

    pub fn with_offset(mut self, offset: f64) -> Self {
        self.offset = offset;
        self
    }

    /// Minimum-error discrimination of `e`: `c_m = ξ_m ρ_m`, no constraints.
    pub fn from_min_error(e: &StateEnsemble) -> Self {
        let c = e
            .priors
            .iter()
            .zip(&e.states)
            .map(|(&p, rho)| rho.scale(p))
            .collect();
        Self::new(c, Vec::new(), Vec::new()).expect("ensemble shapes are consistent")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_outcomes(&self) -> usize {
        self.c.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.b.len()
    }

    pub fn objective_weights(&self) -> &[HermitianMatrix] {
        &self.c
    }

    pub fn constraint_weights(&self) -> &[Vec<HermitianMatrix>] {
        &self.a
    }

    pub fn constraint_row(&self, j: usize) -> Result<&[HermitianMatrix]> {
        self.a.get(j).map(Vec::as_slice).ok_or(Error::IndexOutOfRange {
            index: j,
            len: self.b.len(),
        })
    }

    pub fn thresholds(&self) -> &[f64] {
        &self.b
    }

    pub fn objective_offset(&self) -> f64 {
        self.offset
    }

    /// Same weights with new thresholds.
    pub fn with_thresholds(&self, b: Vec<f64>) -> Result<Self> {
        if b.len() != self.b.len() {
            return Err(Error::DimensionMismatch {
                expected: self.b.len(),
                found: b.len(),
            });
        }
        let mut p = self.clone();
        p.b = b;
        Ok(p)
    }

    fn check_povm(&self, povm: &Povm) -> Result<()> {
        if povm.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: povm.dim(),
            });
        }
        if povm.len() != self.num_outcomes() {
            return Err(Error::DimensionMismatch {
                expected: self.num_outcomes(),
                found: povm.len(),
            });
        }
        Ok(())
    }

    /// `f(Π) = Σ_m Tr(c_m Π_m)`.
    pub fn objective(&self, povm: &Povm) -> Result<f64> {
        self.check_povm(povm)?;
        Ok(pair_sum(&self.c, povm.elements()))
    }

    /// `β_j(Π) = Σ_m Tr(a_{j,m} Π_m)`.
    pub fn beta(&self, povm: &Povm, j: usize) -> Result<f64> {
        let row = self.constraint_row(j)?;
        self.check_povm(povm)?;
        Ok(pair_sum(row, povm.elements()))
    }

    pub fn betas(&self, povm: &Povm) -> Result<Vec<f64>> {
        self.check_povm(povm)?;
        Ok(self.a.iter().map(|row| pair_sum(row, povm.elements())).collect())
    }

    /// `β_j(Π) ≥ b_j − TOL_FEAS` for every row.
    pub fn is_feasible(&self, povm: &Povm) -> Result<bool> {
        let betas = self.betas(povm)?;
        Ok(betas.iter().zip(&self.b).all(|(&beta, &b)| beta >= b - TOL_FEAS))
    }

    /// Every PSD or threshold violation; empty for a normalized problem.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let mut check = |family: Family, ops: &[HermitianMatrix]| {
            for (index, op) in ops.iter().enumerate() {
                match op.eig() {
                    Ok(s) if s.min() >= -TOL_PSD * s.scale().max(1.0) => {}
                    Ok(s) => out.push(Violation::PsdViolation {
                        family,
                        index,
                        min_eigenvalue: s.min(),
                    }),
                    Err(_) => out.push(Violation::PsdViolation {
                        family,
                        index,
                        min_eigenvalue: f64::NAN,
                    }),
                }
            }
        };
        check(Family::Objective, &self.c);
        for (j, row) in self.a.iter().enumerate() {
            check(Family::Constraint(j), row);
        }
        for (index, &value) in self.b.iter().enumerate() {
            if value < 0.0 {
                out.push(Violation::NegativeThreshold { index, value });
            }
        }
        out
    }

    /// Shifts the objective family and each constraint row by `σ I` with
    /// `σ = max(0, −min eigenvalue over the family)`, adjusts `b_j` by the
    /// trace of the shift, then clamps negative thresholds to zero.
    pub fn normalize(&self) -> Self {
        let n = self.dim as f64;
        let sigma_c = identity_shift(&self.c);
        let c = shift_all(&self.c, sigma_c);
        let mut a = Vec::with_capacity(self.a.len());
        let mut b = Vec::with_capacity(self.b.len());
        for (row, &bj) in self.a.iter().zip(&self.b) {
            let sigma = identity_shift(row);
            a.push(shift_all(row, sigma));
            b.push((bj + n * sigma).max(0.0));
        }
        Self {
            dim: self.dim,
            c,
            a,
            b,
            offset: self.offset + n * sigma_c,
        }
    }

    /// Rank of `Σ c_m + Σ a_{j,m}`: the dimension of the space the problem
    /// actually acts on (for PSD weights).
    pub fn support_dimension(&self) -> Result<usize> {
        let mut total = HermitianMatrix::zeros(self.dim);
        for op in self.c.iter().chain(self.a.iter().flatten()) {
            total += op;
        }
        Ok(total.eig()?.rank())
    }

    pub fn to_json(&self) -> String {
        let mut s = String::new();
        s.push_str(&format!(
            "{{\"dim\":{},\"M\":{},\"J\":{},\"c\":",
            self.dim,
            self.num_outcomes(),
            self.num_constraints()
        ));
        write_matrix_list(&mut s, &self.c);
        s.push_str(",\"a\":[");
        for (j, row) in self.a.iter().enumerate() {
            if j > 0 {
                s.push(',');
            }
            write_matrix_list(&mut s, row);
        }
        s.push_str("],\"b\":[");
        for (j, &bj) in self.b.iter().enumerate() {
            if j > 0 {
                s.push(',');
            }
            s.push_str(&fmt_f64(bj));
        }
        s.push(']');
        if self.offset != 0.0 {
            s.push_str(",\"offset\":");
            s.push_str(&fmt_f64(self.offset));
        }
        s.push_str("}\n");
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let v: Value = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        let obj = v
            .as_object()
            .ok_or_else(|| Error::Parse("problem must be a JSON object".into()))?;
        let dim = get_usize(obj, "dim")?;
        let m = get_usize(obj, "M")?;
        let j = get_usize(obj, "J")?;
        let c = parse_matrix_list(field(obj, "c")?, dim, "c")?;
        if c.len() != m {
            return Err(Error::Parse(format!("expected {m} objective matrices, found {}", c.len())));
        }
        let a_rows = field(obj, "a")?
            .as_array()
            .ok_or_else(|| Error::Parse("\"a\" must be an array".into()))?;
        if a_rows.len() != j {
            return Err(Error::Parse(format!("expected {j} constraint rows, found {}", a_rows.len())));
        }
        let mut a = Vec::with_capacity(j);
        for (idx, row) in a_rows.iter().enumerate() {
            let row = parse_matrix_list(row, dim, &format!("a[{idx}]"))?;
            if row.len() != m {
                return Err(Error::Parse(format!(
                    "constraint row {idx} has {} matrices, expected {m}",
                    row.len()
                )));
            }
            a.push(row);
        }
        let b = parse_f64_list(field(obj, "b")?, "b")?;
        if b.len() != j {
            return Err(Error::Parse(format!("expected {j} thresholds, found {}", b.len())));
        }
        let offset = match obj.get("offset") {
            Some(v) => v
                .as_f64()
                .ok_or_else(|| Error::Parse("\"offset\" must be a number".into()))?,
            None => 0.0,
        };
        Ok(Self::new(c, a, b)?.with_offset(offset))
    }
}

fn check_dims(ops: &[HermitianMatrix], dim: usize) -> Result<()> {
    for op in ops {
        if op.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: op.dim(),
            });
        }
    }
    Ok(())
}

fn pair_sum(weights: &[HermitianMatrix], elements: &[HermitianMatrix]) -> f64 {
    weights.iter().zip(elements).map(|(w, e)| w.inner(e)).sum()
}

fn identity_shift(ops: &[HermitianMatrix]) -> f64 {
    let mut worst: f64 = 0.0;
    for op in ops {
        if let Ok(s) = op.eig() {
            if s.min() < -TOL_PSD * s.scale().max(1.0) {
                worst = worst.max(-s.min());
            }
        }
    }
    worst
}

fn shift_all(ops: &[HermitianMatrix], sigma: f64) -> Vec<HermitianMatrix> {
    if sigma == 0.0 {
        return ops.to_vec();
    }
    let shift = HermitianMatrix::identity(ops.first().map_or(1, HermitianMatrix::dim)).scale(sigma);
    ops.iter().map(|op| op + &shift).collect()
}

/// A measurement: `M` PSD operators summing to the identity.
#[derive(Clone, Debug, PartialEq)]
pub struct Povm {
    elements: Vec<HermitianMatrix>,
}

impl Povm {
    /// Checks positivity of each element and completeness within [`TOL_POVM`].
    pub fn new(elements: Vec<HermitianMatrix>) -> Result<Self> {
        let p = Self::new_unchecked(elements)?;
        for (m, e) in p.elements.iter().enumerate() {
            let s = e.eig()?;
            if s.min() < -TOL_PSD.max(TOL_POVM) * s.scale().max(1.0) {
                return Err(Error::InvalidPovm(format!(
                    "element {m} has eigenvalue {:.3e}",
                    s.min()
                )));
            }
        }
        let defect = p.completeness_defect();
        if defect > TOL_POVM {
            return Err(Error::InvalidPovm(format!(
                "elements sum to identity only within {defect:.3e}"
            )));
        }
        Ok(p)
    }

    /// Shape checks only.
    pub fn new_unchecked(elements: Vec<HermitianMatrix>) -> Result<Self> {
        let first = elements
            .first()
            .ok_or_else(|| Error::InvalidPovm("a POVM needs at least one element".into()))?;
        check_dims(&elements, first.dim())?;
        Ok(Self { elements })
    }

    /// `Π_m = I/M`.
    pub fn uniform(dim: usize, m: usize) -> Self {
        let e = HermitianMatrix::identity(dim).scale(1.0 / m as f64);
        Self {
            elements: vec![e; m],
        }
    }

    pub fn dim(&self) -> usize {
        self.elements[0].dim()
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn elements(&self) -> &[HermitianMatrix] {
        &self.elements
    }

    pub fn into_elements(self) -> Vec<HermitianMatrix> {
        self.elements
    }

    /// `‖Σ Π_m − I‖_F`.
    pub fn completeness_defect(&self) -> f64 {
        let mut sum = HermitianMatrix::identity(self.dim()).scale(-1.0);
        for e in &self.elements {
            sum += e;
        }
        sum.frobenius_norm()
    }

    /// `(w1 Π1 + w2 Π2)` elementwise; a POVM when `w1 + w2 = 1`, `w1, w2 ≥ 0`.
    pub fn mix(first: &Povm, w1: f64, second: &Povm, w2: f64) -> Result<Povm> {
        if first.len() != second.len() || first.dim() != second.dim() {
            return Err(Error::DimensionMismatch {
                expected: first.len(),
                found: second.len(),
            });
        }
        let elements = first
            .elements
            .iter()
            .zip(&second.elements)
            .map(|(x, y)| {
                let mut e = x.scale(w1);
                e.add_scaled(w2, y);
                e
            })
            .collect();
        Ok(Povm { elements })
    }

    pub fn to_json(&self) -> String {
        let mut s = format!("{{\"dim\":{},\"M\":{},\"elements\":", self.dim(), self.len());
        write_matrix_list(&mut s, &self.elements);
        s.push_str("}\n");
        s
    }

    /// Parses and validates a POVM document.
    pub fn from_json(text: &str) -> Result<Self> {
        Self::new(Self::parse_elements(text)?)
    }

    /// Parses a POVM document checking shapes only.
    pub fn from_json_unchecked(text: &str) -> Result<Self> {
        Self::new_unchecked(Self::parse_elements(text)?)
    }

    fn parse_elements(text: &str) -> Result<Vec<HermitianMatrix>> {
        let v: Value = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        let obj = v
            .as_object()
            .ok_or_else(|| Error::Parse("POVM must be a JSON object".into()))?;
        let dim = get_usize(obj, "dim")?;
        let m = get_usize(obj, "M")?;
        let elements = parse_matrix_list(field(obj, "elements")?, dim, "elements")?;
        if elements.len() != m || m == 0 {
            return Err(Error::Parse(format!("expected {m} elements, found {}", elements.len())));
        }
        Ok(elements)
    }
}

/// Density operators `ρ_r` with prior probabilities `ξ_r`.
#[derive(Clone, Debug, PartialEq)]
pub struct StateEnsemble {
    pub priors: Vec<f64>,
    pub states: Vec<HermitianMatrix>,
    /// Common rank of the states (metadata).
    pub rank: usize,
}

impl StateEnsemble {
    pub fn new(priors: Vec<f64>, states: Vec<HermitianMatrix>, rank: usize) -> Result<Self> {
        if priors.len() != states.len() || priors.is_empty() {
            return Err(Error::InvalidConfig(
                "ensemble needs one prior per state and at least one state".into(),
            ));
        }
        if priors.iter().any(|&p| !(p >= 0.0)) {
            return Err(Error::InvalidConfig("priors must be nonnegative".into()));
        }
        let total: f64 = priors.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidConfig(format!("priors sum to {total}")));
        }
        check_dims(&states, states[0].dim())?;
        for (r, rho) in states.iter().enumerate() {
            if (rho.trace() - 1.0).abs() > 1e-10 {
                return Err(Error::InvalidConfig(format!(
                    "state {r} has trace {}",
                    rho.trace()
                )));
            }
            let s = rho.eig()?;
            if s.min() < -TOL_PSD * s.scale().max(1.0) {
                return Err(Error::NotPsd(s.min()));
            }
        }
        Ok(Self {
            priors,
            states,
            rank,
        })
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.states[0].dim()
    }
}

/// Dual point `(X, λ)` as `{"dim": N, "X": matrix, "lambda": [...]}`.
pub fn dual_to_json(x: &HermitianMatrix, lambda: &[f64]) -> String {
    let mut s = format!("{{\"dim\":{},\"X\":", x.dim());
    write_matrix(&mut s, x);
    s.push_str(",\"lambda\":[");
    for (k, l) in lambda.iter().enumerate() {
        if k > 0 {
            s.push(',');
        }
        s.push_str(&fmt_f64(*l));
    }
    s.push_str("]}\n");
    s
}

pub fn dual_from_json(text: &str) -> Result<(HermitianMatrix, Vec<f64>)> {
    let v: Value = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    let obj = v
        .as_object()
        .ok_or_else(|| Error::Parse("dual point must be a JSON object".into()))?;
    let dim = get_usize(obj, "dim")?;
    let x = parse_matrix(field(obj, "X")?, dim, "X")?;
    let lambda = parse_f64_list(field(obj, "lambda")?, "lambda")?;
    Ok((x, lambda))
}

/// Seventeen significant digits; valid JSON and exact on re-parse.
pub(crate) fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn write_matrix(s: &mut String, m: &HermitianMatrix) {
    let n = m.dim();
    s.push('[');
    for i in 0..n {
        if i > 0 {
            s.push(',');
        }
        s.push('[');
        for j in 0..n {
            if j > 0 {
                s.push(',');
            }
            let z = m.get(i, j);
            s.push('[');
            s.push_str(&fmt_f64(z.re));
            s.push(',');
            s.push_str(&fmt_f64(z.im));
            s.push(']');
        }
        s.push(']');
    }
    s.push(']');
}

fn write_matrix_list(s: &mut String, ms: &[HermitianMatrix]) {
    s.push('[');
    for (k, m) in ms.iter().enumerate() {
        if k > 0 {
            s.push(',');
        }
        write_matrix(s, m);
    }
    s.push(']');
}

fn field<'a>(obj: &'a Map<String, Value>, key: &str) -> Result<&'a Value> {
    obj.get(key)
        .ok_or_else(|| Error::Parse(format!("missing field \"{key}\"")))
}

fn get_usize(obj: &Map<String, Value>, key: &str) -> Result<usize> {
    field(obj, key)?
        .as_u64()
        .map(|v| v as usize)
        .ok_or_else(|| Error::Parse(format!("\"{key}\" must be a nonnegative integer")))
}

fn parse_f64_list(v: &Value, what: &str) -> Result<Vec<f64>> {
    v.as_array()
        .ok_or_else(|| Error::Parse(format!("\"{what}\" must be an array")))?
        .iter()
        .map(|x| {
            x.as_f64()
                .ok_or_else(|| Error::Parse(format!("\"{what}\" entries must be numbers")))
        })
        .collect()
}

fn parse_matrix(v: &Value, dim: usize, what: &str) -> Result<HermitianMatrix> {
    let rows = v
        .as_array()
        .ok_or_else(|| Error::Parse(format!("{what}: matrix must be an array of rows")))?;
    if rows.len() != dim {
        return Err(Error::Parse(format!("{what}: expected {dim} rows, found {}", rows.len())));
    }
    let mut out = Vec::with_capacity(dim);
    for row in rows {
        let row = row
            .as_array()
            .ok_or_else(|| Error::Parse(format!("{what}: row must be an array")))?;
        if row.len() != dim {
            return Err(Error::Parse(format!(
                "{what}: matrix is not square ({dim} rows, row of length {})",
                row.len()
            )));
        }
        let mut parsed = Vec::with_capacity(dim);
        for entry in row {
            let pair = parse_f64_list(entry, what)?;
            if pair.len() != 2 {
                return Err(Error::Parse(format!("{what}: entries must be [re, im] pairs")));
            }
            parsed.push(C64::new(pair[0], pair[1]));
        }
        out.push(parsed);
    }
    HermitianMatrix::from_rows(&out).map_err(|e| Error::Parse(format!("{what}: {e}")))
}

fn parse_matrix_list(v: &Value, dim: usize, what: &str) -> Result<Vec<HermitianMatrix>> {
    v.as_array()
        .ok_or_else(|| Error::Parse(format!("\"{what}\" must be an array of matrices")))?
        .iter()
        .enumerate()
        .map(|(k, m)| parse_matrix(m, dim, &format!("{what}[{k}]")))
        .collect()
}
