//! Optimal basis from the least fixpoint.
//!
//! Every row is a lower bound on its single positive-coefficient variable
//! (equalities count in both directions), so the feasible region has a least
//! element and it minimizes every variable at once. A float iteration finds it
//! approximately; the tight rows then fix an exact square system whose
//! solution and duals are checked exactly.

use std::collections::VecDeque;

use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::lp::sparse::{solve_blocks, transpose, SparseRow};
use crate::lp::{check_optimality, LpModel, LpSolution, LpStatus, Relation, SolveMethod};
use crate::scalar::Rational;

const MAX_SWEEPS: usize = 200_000;
const MAX_POLICY_ROUNDS: usize = 200;

/// A directed lower bound `x[head] >= (rhs - sum(others)) / coef`.
struct Bound {
    row: usize,
    head: usize,
    coef: f64,
    others: Vec<(usize, f64)>,
    rhs: f64,
}

fn bounds(model: &LpModel) -> Option<Vec<Bound>> {
    let mut out = Vec::new();
    for (row, r) in model.rows.iter().enumerate() {
        let signs: &[f64] = match r.relation {
            Relation::Ge => &[1.0],
            Relation::Eq => &[1.0, -1.0],
        };
        let terms: Vec<(usize, f64)> = r.terms.iter().map(|(v, a)| (*v, a.to_f64().unwrap_or(f64::NAN))).collect();
        let rhs = r.rhs.to_f64()?;
        for &sign in signs {
            let positive: Vec<_> = terms.iter().filter(|(_, a)| a * sign > 0.0).collect();
            if positive.len() != 1 {
                return None;
            }
            let (head, coef) = *positive[0];
            out.push(Bound {
                row,
                head,
                coef: coef * sign,
                others: terms.iter().filter(|(v, _)| *v != head).map(|(v, a)| (*v, a * sign)).collect(),
                rhs: rhs * sign,
            });
        }
    }
    Some(out)
}

/// Least fixpoint by Gauss-Seidel sweeps, with the time each row last raised
/// its head.
fn least_fixpoint(model: &LpModel, bounds: &[Bound]) -> Option<(Vec<f64>, Vec<u64>)> {
    let n = model.variables.len();
    let mut x = vec![0.0f64; n];
    let mut raised = vec![0u64; model.rows.len()];
    let mut clock = 0u64;
    for _ in 0..MAX_SWEEPS {
        let mut change = 0.0f64;
        for b in bounds {
            let rest: f64 = b.others.iter().map(|(v, a)| a * x[*v]).sum();
            let candidate = (b.rhs - rest) / b.coef;
            if candidate > x[b.head] {
                change = change.max((candidate - x[b.head]) / (1.0 + candidate.abs()));
                x[b.head] = candidate;
                clock += 1;
                raised[b.row] = clock;
            }
        }
        if !x.iter().all(|v| v.is_finite()) {
            return None;
        }
        if change < 1e-15 {
            return Some((x, raised));
        }
    }
    None
}

/// Equality components: `x[v] = alpha[v] * x[rep[v]]`, plus the BFS tree edges.
struct Components {
    comp: Vec<usize>,
    alpha: Vec<Rational>,
    reps: Vec<usize>,
    // per variable: (eq row, neighbour) of the tree edge towards the representative
    parent_edge: Vec<Option<(usize, usize)>>,
    order: Vec<usize>,
}

fn components(model: &LpModel) -> Option<Components> {
    let n = model.variables.len();
    let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
    for (row, r) in model.rows.iter().enumerate() {
        if r.relation == Relation::Eq {
            if r.terms.len() != 2 || !r.rhs.is_zero() {
                return None;
            }
            let (u, v) = (r.terms[0].0, r.terms[1].0);
            adj[u].push((row, v));
            adj[v].push((row, u));
        }
    }
    let mut comp = vec![usize::MAX; n];
    let mut alpha = vec![Rational::zero(); n];
    let mut parent_edge = vec![None; n];
    let mut reps = Vec::new();
    let mut order = Vec::new();
    for start in 0..n {
        if comp[start] != usize::MAX {
            continue;
        }
        let id = reps.len();
        reps.push(start);
        comp[start] = id;
        alpha[start] = Rational::one();
        let mut queue = VecDeque::from([start]);
        while let Some(u) = queue.pop_front() {
            order.push(u);
            for &(row, v) in &adj[u] {
                let r = &model.rows[row];
                let coef = |w: usize| r.terms.iter().find(|(t, _)| *t == w).map(|(_, a)| a.clone()).unwrap();
                // a_u x_u + a_v x_v = 0
                let implied = -(coef(u) * &alpha[u]) / coef(v);
                if comp[v] == usize::MAX {
                    comp[v] = id;
                    alpha[v] = implied;
                    parent_edge[v] = Some((row, u));
                    queue.push_back(v);
                } else if alpha[v] != implied {
                    return None;
                }
            }
        }
    }
    Some(Components { comp, alpha, reps, parent_edge, order })
}

/// Which row pins each component: a tight inequality, or the bound `x >= 0`.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Policy {
    Row(usize),
    Floor,
}

pub(super) fn solve(model: &LpModel) -> Option<LpSolution> {
    let n = model.variables.len();
    let bounds = bounds(model)?;
    let (approx, raised) = least_fixpoint(model, &bounds)?;
    let comps = components(model)?;
    let k = comps.reps.len();

    // a row can pin its head's component only if it bounds that component
    // with positive net coefficient
    let mut eligible: Vec<Option<usize>> = vec![None; model.rows.len()];
    let mut tight: Vec<(usize, f64)> = Vec::new();
    for b in &bounds {
        if model.rows[b.row].relation != Relation::Ge {
            continue;
        }
        let c = comps.comp[b.head];
        let own: Rational = model.rows[b.row]
            .terms
            .iter()
            .filter(|(v, _)| comps.comp[*v] == c)
            .map(|(v, a)| a * &comps.alpha[*v])
            .sum();
        if !own.is_positive() {
            continue;
        }
        eligible[b.row] = Some(c);
        let lhs: f64 = b.coef * approx[b.head] + b.others.iter().map(|(v, a)| a * approx[*v]).sum::<f64>();
        let residual = (lhs - b.rhs).abs() / (1.0 + approx[b.head].abs() + b.rhs.abs());
        if residual < 1e-9 {
            tight.push((b.row, residual));
        }
    }

    // Pin components in derivation order: a tight row is used once every
    // other component it mentions is pinned, like a shortest-path tree. Rows
    // inside a cycle of equal values would make the exact system singular.
    let mut policy: Vec<Option<Policy>> = (0..k)
        .map(|c| {
            let rep_value = approx[comps.reps[c]];
            (rep_value.abs() < 1e-12).then_some(Policy::Floor)
        })
        .collect();
    loop {
        let mut progress = false;
        for &(row, _) in &tight {
            let c = eligible[row].expect("tight rows are eligible");
            if policy[c].is_some() {
                continue;
            }
            let ready = model.rows[row].terms.iter().all(|(v, _)| {
                let d = comps.comp[*v];
                d == c || policy[d].is_some()
            });
            if ready {
                policy[c] = Some(Policy::Row(row));
                progress = true;
            }
        }
        if !progress {
            break;
        }
    }
    // whatever is left sits on a genuine cycle: take the row that raised it last
    let mut cyclic: Vec<Option<usize>> = vec![None; k];
    for &(row, _) in &tight {
        let c = eligible[row].expect("tight rows are eligible");
        if policy[c].is_none() && cyclic[c].is_none_or(|r| raised[r] < raised[row]) {
            cyclic[c] = Some(row);
        }
    }
    for (p, row) in policy.iter_mut().zip(cyclic) {
        if p.is_none() {
            *p = row.map(Policy::Row);
        }
    }
    let mut policy: Vec<Policy> = policy.into_iter().map(|p| p.unwrap_or(Policy::Floor)).collect();

    for _ in 0..MAX_POLICY_ROUNDS {
        let reduced = reduced_rows(model, &comps, &policy);
        let rhs: Vec<Rational> = policy
            .iter()
            .map(|p| match p {
                Policy::Row(r) => model.rows[*r].rhs.clone(),
                Policy::Floor => Rational::zero(),
            })
            .collect();
        let v = solve_blocks(&reduced, &rhs).ok()?;
        let x: Vec<Rational> = (0..n).map(|i| &comps.alpha[i] * &v[comps.comp[i]]).collect();

        // most violated inequality per component, measured per unit of its head
        let mut worst: Vec<Option<(Rational, usize)>> = vec![None; k];
        for (row, r) in model.rows.iter().enumerate() {
            if r.relation != Relation::Ge {
                continue;
            }
            let lhs = r.lhs(&x);
            if lhs >= r.rhs || eligible[row].is_none() {
                continue;
            }
            let (head, coef) = r.terms.iter().find(|(_, a)| a.is_positive()).map(|(h, a)| (*h, a.clone()))?;
            let scale = coef * &comps.alpha[head];
            let gap = (&r.rhs - lhs) / scale.abs();
            let c = comps.comp[head];
            if worst[c].as_ref().is_none_or(|(g, _)| gap > *g) {
                worst[c] = Some((gap, row));
            }
        }
        if x.iter().any(|xi| xi.is_negative()) {
            return None;
        }
        if worst.iter().any(Option::is_some) {
            for (c, w) in worst.into_iter().enumerate() {
                if let Some((_, row)) = w {
                    policy[c] = Policy::Row(row);
                }
            }
            continue;
        }
        let duals = duals(model, &comps, &policy, &reduced)?;
        let objective = x[model.objective].clone();
        check_optimality(model, &x, &duals, &objective).ok()?;
        let mut basis: Vec<usize> = policy.iter().filter_map(|p| if let Policy::Row(r) = p { Some(*r) } else { None }).collect();
        basis.extend(comps.parent_edge.iter().filter_map(|e| e.map(|(row, _)| row)));
        basis.sort_unstable();
        return Some(LpSolution {
            status: LpStatus::Optimal,
            objective,
            variables: model.variables.clone(),
            assignment: x,
            duals,
            basis,
            method: SolveMethod::Fixpoint,
        });
    }
    None
}

/// Pinning rows rewritten over component representatives.
fn reduced_rows(model: &LpModel, comps: &Components, policy: &[Policy]) -> Vec<SparseRow> {
    policy
        .iter()
        .enumerate()
        .map(|(c, p)| match p {
            Policy::Floor => vec![(c, Rational::one())],
            Policy::Row(r) => {
                let mut acc: std::collections::BTreeMap<usize, Rational> = Default::default();
                for (v, a) in &model.rows[*r].terms {
                    *acc.entry(comps.comp[*v]).or_insert_with(Rational::zero) += a * &comps.alpha[*v];
                }
                acc.into_iter().filter(|(_, a)| !a.is_zero()).collect()
            }
        })
        .collect()
}

/// Duals of the pinning rows from the reduced transpose system, then duals of
/// the equality tree edges by peeling leaves towards each representative.
fn duals(model: &LpModel, comps: &Components, policy: &[Policy], reduced: &[SparseRow]) -> Option<Vec<Rational>> {
    let k = policy.len();
    let mut c_red = vec![Rational::zero(); k];
    c_red[comps.comp[model.objective]] = comps.alpha[model.objective].clone();
    let y_red = solve_blocks(&transpose(reduced), &c_red).ok()?;
    let mut y = vec![Rational::zero(); model.rows.len()];
    for (c, p) in policy.iter().enumerate() {
        match p {
            Policy::Row(r) => y[*r] = y_red[c].clone(),
            // the floor's dual is a reduced cost and must not be negative
            Policy::Floor => {
                if y_red[c].is_negative() {
                    return None;
                }
            }
        }
    }
    // residual of each variable's dual equation before equality duals
    let mut residual: Vec<Rational> = model.transpose_times(&y).into_iter().map(|v| -v).collect();
    residual[model.objective] += Rational::one();
    for &v in comps.order.iter().rev() {
        if let Some((row, _)) = comps.parent_edge[v] {
            let r = &model.rows[row];
            let coef_v = r.terms.iter().find(|(t, _)| *t == v).map(|(_, a)| a.clone())?;
            let z = &residual[v] / &coef_v;
            for (t, a) in &r.terms {
                residual[*t] -= a * &z;
            }
            y[row] = z;
        }
    }
    Some(y)
}
