//! Exact solution of sparse square systems by strongly connected blocks.

use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::scalar::Rational;

/// Sparse row: `(column, coefficient)` pairs.
pub type SparseRow = Vec<(usize, Rational)>;

/// Solves `A x = b` where row `k` of `A` is the equation attached to unknown `k`.
///
/// Unknowns are grouped into strongly connected blocks of the dependency graph
/// (`k -> j` when row `k` mentions `j`); blocks are solved dependencies first,
/// each by dense elimination.
pub fn solve_blocks(rows: &[SparseRow], rhs: &[Rational]) -> Result<Vec<Rational>> {
    let n = rows.len();
    assert_eq!(rhs.len(), n, "one right-hand side per row");
    let mut graph = DiGraph::<(), ()>::with_capacity(n, rows.iter().map(Vec::len).sum());
    let nodes: Vec<_> = (0..n).map(|_| graph.add_node(())).collect();
    for (k, row) in rows.iter().enumerate() {
        for &(j, _) in row {
            if j != k {
                graph.add_edge(nodes[k], nodes[j], ());
            }
        }
    }
    let mut x: Vec<Option<Rational>> = vec![None; n];
    // tarjan_scc lists blocks so that every block comes after the blocks it points to
    for block in tarjan_scc(&graph) {
        let vars: Vec<usize> = block.iter().map(|v| v.index()).collect();
        let local: std::collections::HashMap<usize, usize> = vars.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let m = vars.len();
        let mut dense = vec![vec![Rational::zero(); m + 1]; m];
        for (i, &k) in vars.iter().enumerate() {
            let mut b = rhs[k].clone();
            for (j, a) in &rows[k] {
                match local.get(j) {
                    Some(&col) => dense[i][col] += a,
                    None => {
                        let known = x[*j].as_ref().expect("dependencies solved first");
                        b -= a * known;
                    }
                }
            }
            dense[i][m] = b;
        }
        let sol = gauss(dense).ok_or_else(|| {
            Error::InvalidGraph(format!("singular block of {m} equations containing unknown {}", vars[0]))
        })?;
        for (i, v) in vars.iter().enumerate() {
            x[*v] = Some(sol[i].clone());
        }
    }
    Ok(x.into_iter().map(|v| v.expect("every unknown lies in a block")).collect())
}

/// Dense Gauss-Jordan on an augmented matrix; `None` when singular.
pub fn gauss(mut a: Vec<Vec<Rational>>) -> Option<Vec<Rational>> {
    let m = a.len();
    for col in 0..m {
        let pivot = (col..m).find(|&r| !a[r][col].is_zero())?;
        a.swap(col, pivot);
        let inv = Rational::one() / &a[col][col];
        for v in a[col][col..].iter_mut() {
            *v *= &inv;
        }
        for r in 0..m {
            if r == col || a[r][col].is_zero() {
                continue;
            }
            let f = a[r][col].clone();
            let (src, dst) = if r < col {
                let (lo, hi) = a.split_at_mut(col);
                (&hi[0], &mut lo[r])
            } else {
                let (lo, hi) = a.split_at_mut(r);
                (&lo[col], &mut hi[0])
            };
            for c in col..=m {
                if !src[c].is_zero() {
                    dst[c] -= &f * &src[c];
                }
            }
        }
    }
    Some(a.into_iter().map(|row| row[m].clone()).collect())
}

/// Transposes a square sparse matrix given by rows.
pub fn transpose(rows: &[SparseRow]) -> Vec<SparseRow> {
    let mut out = vec![Vec::new(); rows.len()];
    for (k, row) in rows.iter().enumerate() {
        for (j, a) in row {
            out[*j].push((k, a.clone()));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::ratio;

    #[test]
    fn triangular_and_cyclic_blocks() {
        // x0 = 1 ; x1 - x0 - (2/9) x2 = 0 ; x2 - x1 = 1/2  (a two-cycle between x1 and x2)
        let rows = vec![
            vec![(0, ratio(1, 1))],
            vec![(1, ratio(1, 1)), (0, ratio(-1, 1)), (2, ratio(-2, 9))],
            vec![(2, ratio(1, 1)), (1, ratio(-1, 1))],
        ];
        let rhs = vec![ratio(1, 1), ratio(0, 1), ratio(1, 2)];
        let x = solve_blocks(&rows, &rhs).unwrap();
        assert_eq!(x[0], ratio(1, 1));
        // x1 = 1 + 2/9 (x1 + 1/2)  =>  x1 = (10/9) / (7/9) = 10/7
        assert_eq!(x[1], ratio(10, 7));
        assert_eq!(x[2], ratio(10, 7) + ratio(1, 2));
    }

    #[test]
    fn singular_block_is_reported() {
        let rows = vec![vec![(0, ratio(1, 1)), (1, ratio(-1, 1))], vec![(1, ratio(1, 1)), (0, ratio(-1, 1))]];
        assert!(solve_blocks(&rows, &[ratio(0, 1), ratio(0, 1)]).is_err());
    }
}
