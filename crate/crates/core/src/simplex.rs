//! Dense primal simplex for small linear programs of the form
//!
//! ```text
//! maximize cᵀz  subject to  A z ≤ b,  z ≥ 0
//! ```
//!
//! The solver works on a condensed dictionary (one column per nonbasic variable)
//! that is never updated in place. At every pivot the basis is re-solved from the
//! original, row-equilibrated data with an LU factorisation of the active
//! constraints, which is small (at most one row per structural variable), so
//! round-off never accumulates across pivots. Only the parts of the dictionary a
//! pivot needs are formed, so a pivot costs `O(rows · basis size)` even with
//! thousands of inequality rows.
//!
//! The entering variable follows Bland's rule. Infeasible starts (`b` with
//! negative entries) go through a single-auxiliary-variable phase one. Variables
//! can also be declared free (unrestricted in sign); a free variable enters in
//! whichever direction improves the objective and never leaves the basis, which
//! avoids the singular bases that split `z⁺ − z⁻` pairs produce.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

const PIVOT_TOL: f64 = 1e-10;
/// Primal feasibility tolerance on the equilibrated rows.
const FEAS_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    pub pivots: usize,
}

/// Row-equilibrated constraint data. Variables `0..n` are structural, `n..n+m` slacks.
struct Constraints {
    n: usize,
    m: usize,
    a: Vec<f64>,
    b: Vec<f64>,
    free: Vec<bool>,
}

impl Constraints {
    fn is_free(&self, v: usize) -> bool {
        v < self.n && self.free[v]
    }

    fn at(&self, i: usize, j: usize) -> f64 {
        self.a[i * self.n + j]
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.a[i * self.n..(i + 1) * self.n]
    }
}

/// One basis, described by its nonbasic set. In dictionary form
/// `basic_i = rhs_i − Σ_q tab[i][q] · nonbasic_q` and `ζ = value + Σ_q cost_q · nonbasic_q`.
/// Basic rows are ordered as the basic structurals followed by the basic slacks.
struct Dictionary<'a> {
    lp: &'a Constraints,
    nonbasic: &'a [usize],
    basic_structural: Vec<usize>,
    basic_slack_rows: Vec<usize>,
    /// Column 0 holds the basic structurals' values; column `1 + q` their change
    /// per unit increase of nonbasic `q`.
    delta: DMatrix<f64>,
    cost: Vec<f64>,
    value: f64,
}

impl<'a> Dictionary<'a> {
    fn build(lp: &'a Constraints, c: &[f64], nonbasic: &'a [usize]) -> Result<Self> {
        let (n, m) = (lp.n, lp.m);
        let cols = nonbasic.len();
        let mut is_nonbasic = vec![false; n + m];
        nonbasic.iter().for_each(|&v| is_nonbasic[v] = true);
        let basic_structural: Vec<usize> = (0..n).filter(|&j| !is_nonbasic[j]).collect();
        let basic_slack_rows: Vec<usize> = (0..m).filter(|&i| !is_nonbasic[n + i]).collect();
        let tight: Vec<usize> = nonbasic.iter().filter(|&&v| v >= n).map(|&v| v - n).collect();
        let p = basic_structural.len();
        if tight.len() != p {
            return Err(Error::NumericalFailure("inconsistent simplex basis".into()));
        }

        // The tight rows pin down the basic structurals:
        // A[tight, B] z_B = b_tight − A[tight, N] z_N − s_tight.
        let mut delta = DMatrix::<f64>::zeros(p, cols + 1);
        if p > 0 {
            let k = DMatrix::from_fn(p, p, |r, col| lp.at(tight[r], basic_structural[col]));
            let rhs = DMatrix::from_fn(p, cols + 1, |r, col| {
                let row = tight[r];
                if col == 0 {
                    return lp.b[row];
                }
                let v = nonbasic[col - 1];
                if v < n {
                    -lp.at(row, v)
                } else if v - n == row {
                    -1.0
                } else {
                    0.0
                }
            });
            delta = k.lu().solve(&rhs).ok_or_else(|| Error::NumericalFailure("singular simplex basis".into()))?;
            if delta.iter().any(|v| !v.is_finite()) {
                return Err(Error::NumericalFailure("singular simplex basis".into()));
            }
        }

        let through_basis =
            |col: usize| basic_structural.iter().enumerate().map(|(idx, &j)| c[j] * delta[(idx, col)]).sum::<f64>();
        let value = through_basis(0);
        let cost = nonbasic
            .iter()
            .enumerate()
            .map(|(q, &v)| through_basis(q + 1) + if v < n { c[v] } else { 0.0 })
            .collect();
        Ok(Self { lp, nonbasic, basic_structural, basic_slack_rows, delta, cost, value })
    }

    fn basic_len(&self) -> usize {
        self.basic_structural.len() + self.basic_slack_rows.len()
    }

    fn basic_label(&self, i: usize) -> usize {
        let p = self.basic_structural.len();
        if i < p {
            self.basic_structural[i]
        } else {
            self.lp.n + self.basic_slack_rows[i - p]
        }
    }

    /// `A[row, B] · delta[:, col]`.
    fn row_times_delta(&self, row: usize, col: usize) -> f64 {
        let a = self.lp.row(row);
        self.basic_structural.iter().enumerate().map(|(idx, &j)| a[j] * self.delta[(idx, col)]).sum()
    }

    /// Current values of all basic variables.
    fn rhs(&self) -> Vec<f64> {
        let structural = (0..self.basic_structural.len()).map(|idx| self.delta[(idx, 0)]);
        let slack = self.basic_slack_rows.iter().map(|&i| self.lp.b[i] - self.row_times_delta(i, 0));
        structural.chain(slack).collect()
    }

    /// Dictionary column of nonbasic `q`: the decrease of every basic variable per
    /// unit increase of that nonbasic.
    fn column(&self, q: usize) -> Vec<f64> {
        let v = self.nonbasic[q];
        let structural = (0..self.basic_structural.len()).map(|idx| -self.delta[(idx, q + 1)]);
        let slack = self.basic_slack_rows.iter().map(|&i| {
            let direct = if v < self.lp.n { self.lp.at(i, v) } else { 0.0 };
            self.row_times_delta(i, q + 1) + direct
        });
        structural.chain(slack).collect()
    }

    /// Dictionary row of basic position `i`.
    fn row(&self, i: usize) -> Vec<f64> {
        (0..self.nonbasic.len()).map(|q| self.column_entry(i, q)).collect()
    }

    fn column_entry(&self, i: usize, q: usize) -> f64 {
        let p = self.basic_structural.len();
        if i < p {
            return -self.delta[(i, q + 1)];
        }
        let row = self.basic_slack_rows[i - p];
        let v = self.nonbasic[q];
        let direct = if v < self.lp.n { self.lp.at(row, v) } else { 0.0 };
        self.row_times_delta(row, q + 1) + direct
    }

    /// Picks the next pivot as `(basic position, nonbasic position)`, or `None` at
    /// optimality. The entering column follows Bland's rule (lowest-labelled
    /// improving variable; free variables may improve in either direction). The
    /// leaving row uses a two-pass Harris test over the sign-restricted basics:
    /// rows whose ratio is within the feasibility tolerance of the minimum are
    /// candidates, and the largest pivot element among them wins, ties going to the
    /// lowest label. Free basics never leave.
    fn choose_pivot(&self, cost_tol: f64) -> Result<Option<(usize, usize)>> {
        let improving = |q: usize| {
            self.cost[q] > cost_tol || (self.lp.is_free(self.nonbasic[q]) && self.cost[q] < -cost_tol)
        };
        let entering = (0..self.nonbasic.len()).filter(|&q| improving(q)).min_by_key(|&q| self.nonbasic[q]);
        let Some(e) = entering else { return Ok(None) };
        let mut column = self.column(e);
        if self.cost[e] < 0.0 {
            column.iter_mut().for_each(|v| *v = -*v);
        }
        let rhs = self.rhs();
        let rows =
            || (0..self.basic_len()).filter(|&i| column[i] > PIVOT_TOL && !self.lp.is_free(self.basic_label(i)));
        let bound = rows().map(|i| (rhs[i].max(0.0) + FEAS_TOL) / column[i]).fold(f64::INFINITY, f64::min);
        if bound.is_infinite() {
            return Err(Error::NumericalFailure("linear program is unbounded".into()));
        }
        let leaving = rows()
            .filter(|&i| rhs[i].max(0.0) / column[i] <= bound)
            .max_by(|&i, &j| {
                column[i].total_cmp(&column[j]).then_with(|| self.basic_label(j).cmp(&self.basic_label(i)))
            })
            .expect("the minimising row is always a candidate");
        Ok(Some((leaving, e)))
    }
}

/// Pivots from the basis described by `nonbasic` until optimal; returns the
/// optimal objective value.
fn run_simplex(
    lp: &Constraints,
    c: &[f64],
    nonbasic: &mut [usize],
    pivots: &mut usize,
    max_pivots: usize,
) -> Result<f64> {
    let cost_tol = 1e-9 * (1.0 + c.iter().fold(0.0f64, |acc, v| acc.max(v.abs())));
    loop {
        let (e, leaving) = {
            let dict = Dictionary::build(lp, c, nonbasic)?;
            match dict.choose_pivot(cost_tol)? {
                None => return Ok(dict.value),
                Some((r, e)) => (e, dict.basic_label(r)),
            }
        };
        if *pivots >= max_pivots {
            return Err(Error::NumericalFailure(format!("no convergence after {max_pivots} pivots")));
        }
        nonbasic[e] = leaving;
        *pivots += 1;
    }
}

/// Maximises `cᵀz` subject to `A z ≤ b`, `z ≥ 0`, with `A` given row-major.
pub fn maximize(c: &[f64], a: &[f64], b: &[f64]) -> Result<LpSolution> {
    maximize_with_free(c, a, b, &vec![false; c.len()])
}

/// As [`maximize`], but variables flagged in `free` are unrestricted in sign.
pub fn maximize_with_free(c: &[f64], a: &[f64], b: &[f64], free: &[bool]) -> Result<LpSolution> {
    let n = c.len();
    let m = b.len();
    if a.len() != n * m {
        return Err(Error::DimensionMismatch { expected: n * m, found: a.len() });
    }
    if free.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: free.len() });
    }
    if c.iter().chain(a).chain(b).any(|v| !v.is_finite()) {
        return Err(Error::NumericalFailure("non-finite linear program data".into()));
    }
    let max_pivots = 50 * (n + m) + 1000;

    // Equilibrate rows; phase one appends an auxiliary column of −1 at index n.
    let needs_phase_one = b.iter().any(|&v| v < 0.0);
    let width = if needs_phase_one { n + 1 } else { n };
    let mut scaled_a = Vec::with_capacity(m * width);
    let mut scaled_b = Vec::with_capacity(m);
    for i in 0..m {
        let row = &a[i * n..(i + 1) * n];
        let scale = row.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        let scale = if scale > 0.0 { scale } else { 1.0 };
        scaled_a.extend(row.iter().map(|v| v / scale));
        if needs_phase_one {
            scaled_a.push(-1.0);
        }
        scaled_b.push(b[i] / scale);
    }
    let mut pivots = 0;
    let mut nonbasic: Vec<usize>;

    if needs_phase_one {
        let mut aux_free = free.to_vec();
        aux_free.push(false);
        let lp = Constraints { n: n + 1, m, a: scaled_a, b: scaled_b, free: aux_free };
        let mut aux_cost = vec![0.0; n + 1];
        aux_cost[n] = -1.0;
        // The auxiliary variable enters at the most violated row.
        let worst = (0..m).min_by(|&i, &j| lp.b[i].total_cmp(&lp.b[j])).expect("at least one row");
        nonbasic = (0..=n).collect();
        nonbasic[n] = (n + 1) + worst;
        pivots += 1;
        let value = run_simplex(&lp, &aux_cost, &mut nonbasic, &mut pivots, max_pivots)?;
        let scale = 1.0 + lp.b.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        if value < -FEAS_TOL * scale {
            return Err(Error::NumericalFailure(format!(
                "linear program is infeasible (phase one optimum {value:e})"
            )));
        }
        let dict = Dictionary::build(&lp, &aux_cost, &nonbasic)?;
        if let Some(r) = (0..dict.basic_len()).find(|&i| dict.basic_label(i) == n) {
            // Degenerate finish: pivot the auxiliary variable out of the basis.
            let row = dict.row(r);
            let q = (0..row.len())
                .max_by(|&i, &j| row[i].abs().total_cmp(&row[j].abs()))
                .filter(|&q| row[q].abs() > PIVOT_TOL)
                .ok_or_else(|| Error::NumericalFailure("auxiliary variable stuck in basis".into()))?;
            drop(dict);
            nonbasic[q] = n;
            pivots += 1;
        }
        // Drop the auxiliary column and shift slack labels back.
        nonbasic = nonbasic.into_iter().filter(|&v| v != n).map(|v| if v > n { v - 1 } else { v }).collect();
        scaled_a = lp.a.chunks_exact(n + 1).flat_map(|row| row[..n].iter().copied()).collect();
        scaled_b = lp.b;
    } else {
        nonbasic = (0..n).collect();
    }

    let lp = Constraints { n, m, a: scaled_a, b: scaled_b, free: free.to_vec() };
    run_simplex(&lp, c, &mut nonbasic, &mut pivots, max_pivots)?;
    let dict = Dictionary::build(&lp, c, &nonbasic)?;
    let mut x = vec![0.0; n];
    for (idx, &j) in dict.basic_structural.iter().enumerate() {
        let value = dict.delta[(idx, 0)];
        x[j] = if free[j] { value } else { value.max(0.0) };
    }
    let objective = c.iter().zip(&x).map(|(ci, xi)| ci * xi).sum();
    Ok(LpSolution { x, objective, pivots })
}
