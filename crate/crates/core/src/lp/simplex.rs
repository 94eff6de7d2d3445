//! Dense two-phase primal simplex over exact rationals with Bland's rule.

use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::lp::{check_optimality, LpModel, LpSolution, LpStatus, Relation, SolveMethod};
use crate::scalar::Rational;

struct Tableau {
    rows: Vec<Vec<Rational>>,
    // reduced costs, last entry is minus the objective
    z: Vec<Rational>,
    basis: Vec<usize>,
    width: usize,
}

enum Outcome {
    Optimal,
    Unbounded(usize),
}

impl Tableau {
    fn price(&mut self, cost: &[Rational]) {
        let mut z: Vec<Rational> = cost.to_vec();
        z.push(Rational::zero());
        for (i, &b) in self.basis.iter().enumerate() {
            let cb = &cost[b];
            if cb.is_zero() {
                continue;
            }
            for (zj, tij) in z.iter_mut().zip(&self.rows[i]) {
                if !tij.is_zero() {
                    *zj -= cb * tij;
                }
            }
        }
        self.z = z;
    }

    fn pivot(&mut self, r: usize, e: usize) {
        let inv = Rational::one() / &self.rows[r][e];
        for v in self.rows[r].iter_mut() {
            if !v.is_zero() {
                *v *= &inv;
            }
        }
        let pivot_row = self.rows[r].clone();
        let nonzero: Vec<usize> = (0..=self.width).filter(|&j| !pivot_row[j].is_zero()).collect();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r || row[e].is_zero() {
                continue;
            }
            let f = row[e].clone();
            for &j in &nonzero {
                row[j] -= &f * &pivot_row[j];
            }
        }
        if !self.z[e].is_zero() {
            let f = self.z[e].clone();
            for &j in &nonzero {
                self.z[j] -= &f * &pivot_row[j];
            }
        }
        self.basis[r] = e;
    }

    fn run(&mut self, allowed: impl Fn(usize) -> bool) -> Outcome {
        loop {
            let Some(e) = (0..self.width).find(|&j| allowed(j) && self.z[j].is_negative()) else {
                return Outcome::Optimal;
            };
            let mut best: Option<(Rational, usize)> = None;
            for (i, row) in self.rows.iter().enumerate() {
                if !row[e].is_positive() {
                    continue;
                }
                let ratio = &row[self.width] / &row[e];
                let better = match &best {
                    None => true,
                    Some((q, bi)) => ratio < *q || (ratio == *q && self.basis[i] < self.basis[*bi]),
                };
                if better {
                    best = Some((ratio, i));
                }
            }
            match best {
                Some((_, r)) => self.pivot(r, e),
                None => return Outcome::Unbounded(e),
            }
        }
    }
}

pub(super) fn solve(model: &LpModel) -> Result<LpSolution> {
    let n = model.variables.len();
    let m = model.rows.len();
    let surplus: Vec<Option<usize>> = {
        let mut next = n;
        model
            .rows
            .iter()
            .map(|r| {
                (r.relation == Relation::Ge).then(|| {
                    next += 1;
                    next - 1
                })
            })
            .collect()
    };
    let first_art = n + surplus.iter().flatten().count();
    let width = first_art + m;
    let mut signs = Vec::with_capacity(m);
    let mut rows = Vec::with_capacity(m);
    for (i, r) in model.rows.iter().enumerate() {
        let sign = if r.rhs.is_negative() { -Rational::one() } else { Rational::one() };
        let mut row = vec![Rational::zero(); width + 1];
        for (v, a) in &r.terms {
            row[*v] = a * &sign;
        }
        if let Some(s) = surplus[i] {
            row[s] = -sign.clone();
        }
        row[first_art + i] = Rational::one();
        row[width] = &r.rhs * &sign;
        rows.push(row);
        signs.push(sign);
    }
    let mut t = Tableau { rows, z: Vec::new(), basis: (first_art..width).collect(), width };

    let phase1: Vec<Rational> = (0..width).map(|j| if j >= first_art { Rational::one() } else { Rational::zero() }).collect();
    t.price(&phase1);
    t.run(|_| true);
    if !t.z[width].is_zero() {
        let row = t.basis.iter().zip(&t.rows).position(|(&b, r)| b >= first_art && r[width].is_positive()).map_or(0, |i| t.basis[i] - first_art);
        return Err(Error::Infeasible {
            row,
            reason: format!("phase one ends with infeasibility {}", -t.z[width].clone()),
        });
    }
    // move zero-level artificials out of the basis where possible
    for i in 0..m {
        if t.basis[i] >= first_art {
            if let Some(e) = (0..first_art).find(|&j| !t.rows[i][j].is_zero()) {
                t.pivot(i, e);
            }
        }
    }
    let mut cost = vec![Rational::zero(); width];
    cost[model.objective] = Rational::one();
    t.price(&cost);
    if let Outcome::Unbounded(e) = t.run(|j| j < first_art) {
        return Err(Error::Unbounded(format!("column {e} improves the objective without limit")));
    }

    let mut x = vec![Rational::zero(); width];
    for (i, &b) in t.basis.iter().enumerate() {
        x[b] = t.rows[i][width].clone();
    }
    let assignment: Vec<Rational> = x[..n].to_vec();
    // B^{-1} sits in the artificial columns, so their reduced costs are -y
    let duals: Vec<Rational> = (0..m).map(|i| -(&t.z[first_art + i]) * &signs[i]).collect();
    let objective = assignment[model.objective].clone();
    check_optimality(model, &assignment, &duals, &objective)?;
    let basis = (0..m).filter(|&i| model.rows[i].lhs(&assignment) == model.rows[i].rhs).collect();
    Ok(LpSolution {
        status: LpStatus::Optimal,
        objective,
        variables: model.variables.clone(),
        assignment,
        duals,
        basis,
        method: SolveMethod::Simplex,
    })
}
