//! Linear program "minimize the root value subject to a constraint set":
//! construction, exact solution, lp_solve text format and certificate checks.

mod certify;
mod fixpoint;
mod format;
mod simplex;
pub mod sparse;

pub use certify::{verify_certificate, Verdict};
pub use format::{emit_lp, parse_lp};

use std::collections::{BTreeMap, HashMap};

use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::constraint::{Constraint, ConstraintSet};
use crate::error::{Error, Result};
use crate::position::Position;
use crate::scalar::{decimal_string, parse_rational, rational_string, Rational};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Relation {
    Ge,
    Eq,
}

/// `sum(coef * var) relation rhs`, terms sorted by variable index.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Row {
    pub terms: Vec<(usize, Rational)>,
    pub relation: Relation,
    pub rhs: Rational,
}

impl Row {
    fn new(terms: impl IntoIterator<Item = (usize, Rational)>, relation: Relation, rhs: Rational) -> Self {
        let mut merged: BTreeMap<usize, Rational> = BTreeMap::new();
        for (v, a) in terms {
            *merged.entry(v).or_insert_with(Rational::zero) += a;
        }
        let terms = merged.into_iter().filter(|(_, a)| !a.is_zero()).collect();
        Self { terms, relation, rhs }
    }

    pub fn lhs(&self, x: &[Rational]) -> Rational {
        self.terms.iter().map(|(v, a)| a * &x[*v]).sum()
    }

    pub fn is_satisfied(&self, x: &[Rational]) -> bool {
        let lhs = self.lhs(x);
        match self.relation {
            Relation::Ge => lhs >= self.rhs,
            Relation::Eq => lhs == self.rhs,
        }
    }
}

/// Minimize `v[objective]` subject to `rows`, all variables nonnegative.
/// Variables are sorted lexicographically by position.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LpModel {
    pub variables: Vec<Position<u32>>,
    pub objective: usize,
    pub rows: Vec<Row>,
}

impl LpModel {
    pub fn index_of(&self, p: &Position<u32>) -> Option<usize> {
        self.variables.binary_search(p).ok()
    }

    /// `A^T y` as a dense vector.
    pub fn transpose_times(&self, y: &[Rational]) -> Vec<Rational> {
        let mut out = vec![Rational::zero(); self.variables.len()];
        for (row, yi) in self.rows.iter().zip(y) {
            if yi.is_zero() {
                continue;
            }
            for (v, a) in &row.terms {
                out[*v] += a * yi;
            }
        }
        out
    }
}

/// One row per constraint, in order. Fails when the set is not closed.
pub fn build_lp(cs: &ConstraintSet) -> Result<LpModel> {
    cs.check_closed()?;
    let variables: Vec<Position<u32>> = cs.positions().into_iter().collect();
    let index: HashMap<&Position<u32>, usize> = variables.iter().enumerate().map(|(i, p)| (p, i)).collect();
    let one = || Rational::from_integer(1.into());
    let rows = cs
        .constraints
        .iter()
        .map(|c| match c {
            Constraint::Split { parent, left, right, .. } => Row::new(
                [(index[parent], one()), (index[left], -one()), (index[right], -one())],
                Relation::Ge,
                Rational::zero(),
            ),
            Constraint::Scale { base, factor, scaled } => Row::new(
                [(index[base], Rational::from_integer((*factor).into())), (index[scaled], -one())],
                Relation::Eq,
                Rational::zero(),
            ),
            Constraint::ZeroBit { position, constant } => Row::new([(index[position], one())], Relation::Ge, constant.clone()),
        })
        .collect();
    let objective = index[&cs.root];
    Ok(LpModel { variables, objective, rows })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

/// Exact optimum with its dual certificate: `duals` has one entry per row,
/// nonnegative on inequality rows, with `A^T y <= c` and `b^T y` equal to the
/// objective.
#[derive(Clone, Debug, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    pub objective: Rational,
    pub variables: Vec<Position<u32>>,
    pub assignment: Vec<Rational>,
    pub duals: Vec<Rational>,
    /// Rows held with equality by the basis that produced the solution.
    pub basis: Vec<usize>,
    pub method: SolveMethod,
}

impl LpSolution {
    pub fn values(&self) -> BTreeMap<Position<u32>, Rational> {
        self.variables.iter().cloned().zip(self.assignment.iter().cloned()).collect()
    }

    pub fn value(&self, p: &Position<u32>) -> Option<&Rational> {
        self.variables.binary_search(p).ok().map(|i| &self.assignment[i])
    }

    pub fn to_json(&self) -> Result<String> {
        let file = SolutionFile {
            status: self.status,
            method: self.method,
            objective: ExactNumber::of(&self.objective),
            assignment: self
                .variables
                .iter()
                .zip(&self.assignment)
                .map(|(p, v)| AssignmentEntry { position: p.to_string(), value: rational_string(v) })
                .collect(),
            duals: self.duals.iter().map(rational_string).collect(),
            basis: self.basis.clone(),
        };
        Ok(serde_json::to_string_pretty(&file)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: SolutionFile = serde_json::from_str(text)?;
        let parse = |s: &str| parse_rational(s).ok_or_else(|| Error::Format(format!("bad rational {s:?}")));
        let mut entries = Vec::with_capacity(file.assignment.len());
        for e in &file.assignment {
            entries.push((e.position.parse::<Position<u32>>().map_err(|e| Error::Format(e.to_string()))?, parse(&e.value)?));
        }
        entries.sort_by(|a, b| a.0.cmp(&b.0));
        let (variables, assignment) = entries.into_iter().unzip();
        Ok(Self {
            status: file.status,
            objective: parse(&file.objective.exact)?,
            variables,
            assignment,
            duals: file.duals.iter().map(|s| parse(s)).collect::<Result<_>>()?,
            basis: file.basis,
            method: file.method,
        })
    }
}

/// A number as exact rational text plus a decimal rendering.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExactNumber {
    pub exact: String,
    pub decimal: String,
}

impl ExactNumber {
    pub fn of(r: &Rational) -> Self {
        Self { exact: rational_string(r), decimal: decimal_string(r, 12) }
    }
}

#[derive(Serialize, Deserialize)]
struct AssignmentEntry {
    position: String,
    value: String,
}

#[derive(Serialize, Deserialize)]
struct SolutionFile {
    status: LpStatus,
    method: SolveMethod,
    objective: ExactNumber,
    assignment: Vec<AssignmentEntry>,
    duals: Vec<String>,
    basis: Vec<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolveMethod {
    /// Least fixpoint of the constraints, confirmed by an exact basis solve.
    Fixpoint,
    /// Dense two-phase primal simplex with Bland's rule.
    Simplex,
}

/// Solves exactly, trying the fixpoint basis first and falling back to simplex.
pub fn solve_exact(model: &LpModel) -> Result<LpSolution> {
    match fixpoint::solve(model) {
        Some(sol) => Ok(sol),
        None => simplex::solve(model),
    }
}

/// Solves with a specific method; the fixpoint method fails when its basis
/// cannot be certified.
pub fn solve_with(model: &LpModel, method: SolveMethod) -> Result<LpSolution> {
    match method {
        SolveMethod::Fixpoint => {
            fixpoint::solve(model).ok_or_else(|| Error::Certificate("fixpoint basis could not be certified".into()))
        }
        SolveMethod::Simplex => simplex::solve(model),
    }
}

/// Checks primal feasibility, dual feasibility and equal objectives exactly.
/// Returns the first failing row or variable.
pub fn check_optimality(model: &LpModel, assignment: &[Rational], duals: &[Rational], objective: &Rational) -> Result<()> {
    if assignment.len() != model.variables.len() || duals.len() != model.rows.len() {
        return Err(Error::Certificate("solution does not match the model dimensions".into()));
    }
    if let Some(v) = assignment.iter().position(|x| x.is_negative()) {
        return Err(Error::Infeasible { row: v, reason: format!("variable {} is negative", model.variables[v]) });
    }
    for (row, r) in model.rows.iter().enumerate() {
        if !r.is_satisfied(assignment) {
            return Err(Error::Infeasible { row, reason: "row violated by the claimed assignment".into() });
        }
    }
    if assignment[model.objective] != *objective {
        return Err(Error::Certificate("claimed objective differs from the root value".into()));
    }
    for (row, (r, y)) in model.rows.iter().zip(duals).enumerate() {
        if r.relation == Relation::Ge && y.is_negative() {
            return Err(Error::Certificate(format!("dual of inequality row {row} is negative")));
        }
    }
    let aty = model.transpose_times(duals);
    for (v, value) in aty.iter().enumerate() {
        let c = if v == model.objective { Rational::from_integer(1.into()) } else { Rational::zero() };
        if *value > c {
            return Err(Error::Certificate(format!("dual constraint of variable {} violated", model.variables[v])));
        }
    }
    let bty: Rational = model.rows.iter().zip(duals).map(|(r, y)| &r.rhs * y).sum();
    if bty != *objective {
        return Err(Error::Certificate(format!(
            "dual objective {} differs from primal {}",
            rational_string(&bty),
            rational_string(objective)
        )));
    }
    Ok(())
}
