//! Dense two-phase simplex for small linear programs
//!
//! ```text
//! minimize c^T x  subject to  A x <= b,  x >= 0
//! ```
//!
//! Pivoting follows Bland's rule, so the method terminates on degenerate
//! problems and is deterministic.

use crate::error::{Error, Result};

const PIVOT_EPS: f64 = 1e-12;
const PHASE_ONE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    pub cost: Vec<f64>,
    /// Rows of `A`, each of length `cost.len()`.
    pub rows: Vec<Vec<f64>>,
    pub rhs: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    /// Reduced costs of the structural columns followed by one per row slack.
    pub reduced_costs: Vec<f64>,
}

impl LinearProgram {
    pub fn new(cost: Vec<f64>) -> Self {
        Self {
            cost,
            rows: Vec::new(),
            rhs: Vec::new(),
        }
    }

    /// Adds `row . x <= rhs`.
    pub fn add_le(&mut self, row: Vec<f64>, rhs: f64) {
        assert_eq!(row.len(), self.cost.len(), "constraint width mismatch");
        self.rows.push(row);
        self.rhs.push(rhs);
    }

    pub fn solve(&self) -> Result<LpSolution> {
        Tableau::build(self).solve(&self.cost)
    }

    /// Copy whose feasible set is the face of optimal solutions certified by
    /// `sol`: columns with a positive reduced cost are pinned to zero, which
    /// fixes a variable at 0 or makes a row tight.
    pub fn optimal_face(&self, sol: &LpSolution, tol: f64) -> Self {
        let n = self.cost.len();
        let mut face = self.clone();
        for (j, &r) in sol.reduced_costs.iter().enumerate() {
            if r <= tol {
                continue;
            }
            if j < n {
                let mut row = vec![0.0; n];
                row[j] = 1.0;
                face.add_le(row, 0.0);
            } else {
                let i = j - n;
                face.add_le(self.rows[i].iter().map(|v| -v).collect(), -self.rhs[i]);
            }
        }
        face
    }
}

/// Column layout: structural variables, one slack/surplus per row, then one
/// artificial per row whose right-hand side was negative.
struct Tableau {
    cells: Vec<Vec<f64>>,
    basis: Vec<usize>,
    n_structural: usize,
    first_artificial: usize,
    width: usize,
}

impl Tableau {
    fn build(lp: &LinearProgram) -> Self {
        let n = lp.cost.len();
        let m = lp.rows.len();
        let negative: Vec<usize> = (0..m).filter(|&i| lp.rhs[i] < 0.0).collect();
        let first_artificial = n + m;
        let width = first_artificial + negative.len();
        let mut cells = vec![vec![0.0; width + 1]; m];
        let mut basis = vec![0; m];
        let mut next_artificial = first_artificial;
        for (i, row) in cells.iter_mut().enumerate() {
            let flip = if lp.rhs[i] < 0.0 { -1.0 } else { 1.0 };
            for (j, &a) in lp.rows[i].iter().enumerate() {
                row[j] = flip * a;
            }
            row[n + i] = flip;
            row[width] = flip * lp.rhs[i];
            if flip < 0.0 {
                row[next_artificial] = 1.0;
                basis[i] = next_artificial;
                next_artificial += 1;
            } else {
                basis[i] = n + i;
            }
        }
        Self {
            cells,
            basis,
            n_structural: n,
            first_artificial,
            width,
        }
    }

    fn solve(mut self, cost: &[f64]) -> Result<LpSolution> {
        if self.width > self.first_artificial {
            let mut phase_one = vec![0.0; self.width];
            for c in &mut phase_one[self.first_artificial..] {
                *c = 1.0;
            }
            self.optimize(&phase_one, self.width)?;
            let infeasibility: f64 = self
                .basis
                .iter()
                .zip(&self.cells)
                .filter(|(&b, _)| b >= self.first_artificial)
                .map(|(_, row)| row[self.width])
                .sum();
            if infeasibility > PHASE_ONE_TOL {
                return Err(Error::LpInfeasible);
            }
            self.drive_out_artificials();
        }
        let mut full_cost = vec![0.0; self.width];
        full_cost[..self.n_structural].copy_from_slice(cost);
        self.optimize(&full_cost, self.first_artificial)?;
        let mut x = vec![0.0; self.n_structural];
        for (row, &b) in self.cells.iter().zip(&self.basis) {
            if b < self.n_structural {
                x[b] = row[self.width].max(0.0);
            }
        }
        let objective = x.iter().zip(cost).map(|(xi, ci)| xi * ci).sum();
        let reduced_costs = (0..self.first_artificial)
            .map(|j| self.reduced_cost(&full_cost, j))
            .collect();
        Ok(LpSolution {
            x,
            objective,
            reduced_costs,
        })
    }

    /// Primal simplex over columns `< allowed`. The basis must be feasible.
    fn optimize(&mut self, cost: &[f64], allowed: usize) -> Result<()> {
        loop {
            let Some(entering) = self.entering_column(cost, allowed) else {
                return Ok(());
            };
            let Some(leaving) = self.leaving_row(entering) else {
                return Err(Error::LpUnbounded);
            };
            self.pivot(leaving, entering);
        }
    }

    fn reduced_cost(&self, cost: &[f64], j: usize) -> f64 {
        if self.basis.contains(&j) {
            return 0.0;
        }
        cost[j]
            - self
                .cells
                .iter()
                .zip(&self.basis)
                .map(|(row, &b)| cost[b] * row[j])
                .sum::<f64>()
    }

    fn entering_column(&self, cost: &[f64], allowed: usize) -> Option<usize> {
        (0..allowed).find(|&j| !self.basis.contains(&j) && self.reduced_cost(cost, j) < -PIVOT_EPS)
    }

    fn leaving_row(&self, entering: usize) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for (i, row) in self.cells.iter().enumerate() {
            let a = row[entering];
            if a <= PIVOT_EPS {
                continue;
            }
            let ratio = row[self.width] / a;
            best = match best {
                None => Some((i, ratio)),
                Some((k, r)) => {
                    if ratio < r - PIVOT_EPS * (1.0 + r.abs())
                        || (ratio <= r + PIVOT_EPS * (1.0 + r.abs()) && self.basis[i] < self.basis[k])
                    {
                        Some((i, ratio))
                    } else {
                        Some((k, r))
                    }
                }
            };
        }
        best.map(|(i, _)| i)
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.cells[r][c];
        for v in &mut self.cells[r] {
            *v /= p;
        }
        let pivot_row = self.cells[r].clone();
        for (i, row) in self.cells.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[c];
            if f != 0.0 {
                for (v, pv) in row.iter_mut().zip(&pivot_row) {
                    *v -= f * pv;
                }
                row[c] = 0.0;
            }
        }
        self.basis[r] = c;
    }

    /// Replaces zero-valued basic artificials by real columns where possible.
    /// Rows with no usable column are redundant and keep their artificial,
    /// which then stays at zero.
    fn drive_out_artificials(&mut self) {
        for r in 0..self.cells.len() {
            if self.basis[r] < self.first_artificial {
                continue;
            }
            let column =
                (0..self.first_artificial).find(|&j| !self.basis.contains(&j) && self.cells[r][j].abs() > PIVOT_EPS);
            if let Some(c) = column {
                self.pivot(r, c);
            }
        }
    }
}
