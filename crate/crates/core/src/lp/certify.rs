//! Independent check of a constraint set together with a claimed optimum.

use num_traits::Zero;
use serde::Serialize;

use crate::constraint::ConstraintSet;
use crate::error::{Error, Result};
use crate::lp::{build_lp, check_optimality, ExactNumber, LpSolution, LpStatus};
use crate::scalar::Rational;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Verdict {
    pub certified: bool,
    pub root: String,
    /// Optimal value of the root variable.
    pub objective: ExactNumber,
    /// Certified lower bound (divided by the root's L1 norm when normalized).
    pub bound: ExactNumber,
    pub normalized: bool,
    pub constraints: usize,
    pub variables: usize,
}

impl Verdict {
    pub fn bound_value(&self) -> Rational {
        crate::scalar::parse_rational(&self.bound.exact).expect("verdicts carry exact bounds")
    }
}

/// Validates every constraint, closure, and the exact optimality of `claimed`
/// (primal feasibility, dual feasibility, equal objectives). Returns the
/// certified bound or the first failure.
pub fn verify_certificate(cs: &ConstraintSet, claimed: &LpSolution, normalize: bool) -> Result<Verdict> {
    cs.validate()?;
    let model = build_lp(cs)?;
    if claimed.status != LpStatus::Optimal {
        return Err(Error::Certificate(format!("claimed status is {:?}", claimed.status)));
    }
    let mut assignment = Vec::with_capacity(model.variables.len());
    for p in &model.variables {
        let v = claimed
            .value(p)
            .ok_or_else(|| Error::Certificate(format!("claimed solution has no value for {p}")))?;
        assignment.push(v.clone());
    }
    check_optimality(&model, &assignment, &claimed.duals, &claimed.objective)?;
    let norm = Rational::from_integer(cs.root.norm1().into());
    let bound = if normalize && !norm.is_zero() { &claimed.objective / norm } else { claimed.objective.clone() };
    Ok(Verdict {
        certified: true,
        root: cs.root.to_string(),
        objective: ExactNumber::of(&claimed.objective),
        bound: ExactNumber::of(&bound),
        normalized: normalize,
        constraints: cs.len(),
        variables: model.variables.len(),
    })
}
