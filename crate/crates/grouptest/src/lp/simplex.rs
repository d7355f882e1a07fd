//! Two-phase primal simplex for the covering relaxation.
//!
//! The program is min Σz subject to Az ≥ 1, z ≥ 0 with a 0/1 matrix A.
//! Surplus variables put it in standard form, phase one starts from an
//! all-artificial basis (no Big-M), and Bland's rule (lowest eligible
//! index in, lowest basic index out on ratio ties) guarantees
//! termination. Vertex selection is therefore deterministic.

use super::{CoverLp, LpSolution, SolveStatus};
use crate::error::{Error, Result};

/// Default pivot cap, scaled generously with instance size.
fn default_pivot_cap(num_vars: usize, num_constraints: usize) -> usize {
    1000 + 50 * (num_vars + num_constraints)
}

/// Solve with the default pivot cap.
pub fn simplex_solve(lp: &CoverLp, tol: f64) -> Result<LpSolution> {
    simplex_solve_with(lp, tol, default_pivot_cap(lp.num_variables(), lp.num_constraints()))
}

/// Solve with an explicit pivot cap; exceeding it is an error, never a
/// silently wrong answer.
pub fn simplex_solve_with(lp: &CoverLp, tol: f64, max_pivots: usize) -> Result<LpSolution> {
    if tol < 0.0 || !tol.is_finite() {
        return Err(Error::OutOfDomain { what: "tol", value: tol });
    }
    let nv = lp.num_variables();
    let m = lp.num_constraints();
    if m == 0 {
        return Ok(LpSolution::new(
            lp.variables().to_vec(),
            vec![0.0; nv],
            SolveStatus::Optimal,
            tol,
        ));
    }

    let mut tableau = Tableau::phase_one(lp);
    let mut pivots_left = max_pivots;
    tableau.run(&mut pivots_left, tol, max_pivots)?;
    if -tableau.objective_cell() > tol.max(1e-9) {
        return Ok(LpSolution::new(
            lp.variables().to_vec(),
            vec![0.0; nv],
            SolveStatus::Infeasible,
            tol,
        ));
    }
    tableau.drive_out_artificials(tol);
    tableau.enter_phase_two(nv);
    tableau.run(&mut pivots_left, tol, max_pivots)?;

    let mut values = vec![0.0; nv];
    for (row, &basic) in tableau.basis.iter().enumerate() {
        if basic < nv {
            values[basic] = tableau.rhs(row);
        }
    }
    Ok(LpSolution::new(lp.variables().to_vec(), values, SolveStatus::Optimal, tol))
}

struct Tableau {
    /// m constraint rows followed by the reduced-cost row; each row has
    /// `cols` coefficient entries plus the right-hand side.
    rows: Vec<Vec<f64>>,
    basis: Vec<usize>,
    cols: usize,
    num_artificial: usize,
}

impl Tableau {
    /// Columns: [z variables | surplus | artificial], RHS last.
    fn phase_one(lp: &CoverLp) -> Tableau {
        let nv = lp.num_variables();
        let m = lp.num_constraints();
        let cols = nv + 2 * m;
        let mut rows = vec![vec![0.0; cols + 1]; m + 1];
        for (r, constraint) in lp.constraints().iter().enumerate() {
            for &item in constraint {
                let col = lp.column_of(item).expect("constraint items are variables");
                rows[r][col] = 1.0;
            }
            rows[r][nv + r] = -1.0;
            rows[r][nv + m + r] = 1.0;
            rows[r][cols] = 1.0;
        }
        // Reduced costs for min Σ artificial with the artificial basis:
        // zero on artificial columns, minus the column sums elsewhere.
        let mut cost = vec![0.0; cols + 1];
        for (col, entry) in cost.iter_mut().enumerate() {
            if (nv + m..nv + 2 * m).contains(&col) {
                continue;
            }
            *entry = -(0..m).map(|r| rows[r][col]).sum::<f64>();
        }
        rows[m] = cost;
        let basis = (nv + m..nv + 2 * m).collect();
        Tableau { rows, basis, cols, num_artificial: m }
    }

    fn num_constraints(&self) -> usize {
        self.basis.len()
    }

    fn rhs(&self, row: usize) -> f64 {
        self.rows[row][self.cols]
    }

    /// Cost-row RHS; equals minus the current objective value.
    fn objective_cell(&self) -> f64 {
        self.rows[self.num_constraints()][self.cols]
    }

    fn pivot(&mut self, pivot_row: usize, pivot_col: usize) {
        let pivot_value = self.rows[pivot_row][pivot_col];
        for entry in self.rows[pivot_row].iter_mut() {
            *entry /= pivot_value;
        }
        let source = self.rows[pivot_row].clone();
        for (r, row) in self.rows.iter_mut().enumerate() {
            if r == pivot_row {
                continue;
            }
            let factor = row[pivot_col];
            if factor == 0.0 {
                continue;
            }
            for (entry, &src) in row.iter_mut().zip(&source) {
                *entry -= factor * src;
            }
            row[pivot_col] = 0.0;
        }
        self.basis[pivot_row] = pivot_col;
    }

    /// Bland's rule loop; errors if the pivot budget runs out.
    fn run(&mut self, pivots_left: &mut usize, tol: f64, cap: usize) -> Result<()> {
        let m = self.num_constraints();
        loop {
            let cost_row = &self.rows[m];
            let entering = (0..self.cols).find(|&c| cost_row[c] < -tol);
            let Some(col) = entering else { return Ok(()) };

            let mut leaving: Option<(usize, f64)> = None;
            for r in 0..m {
                let coeff = self.rows[r][col];
                if coeff <= tol {
                    continue;
                }
                let ratio = self.rhs(r) / coeff;
                leaving = match leaving {
                    None => Some((r, ratio)),
                    Some((best_r, best)) => {
                        if ratio < best - tol
                            || ((ratio - best).abs() <= tol && self.basis[r] < self.basis[best_r])
                        {
                            Some((r, ratio))
                        } else {
                            Some((best_r, best))
                        }
                    }
                };
            }
            let Some((row, _)) = leaving else { return Err(Error::Unbounded) };

            if *pivots_left == 0 {
                return Err(Error::PivotCapExceeded { cap });
            }
            *pivots_left -= 1;
            self.pivot(row, col);
        }
    }

    /// Replace any artificial still in the basis (necessarily at value
    /// zero after a feasible phase one) with a structural column.
    fn drive_out_artificials(&mut self, tol: f64) {
        let m = self.num_constraints();
        let structural = self.cols - self.num_artificial;
        for r in 0..m {
            if self.basis[r] < structural {
                continue;
            }
            if let Some(col) = (0..structural).find(|&c| self.rows[r][c].abs() > tol) {
                self.pivot(r, col);
            }
        }
    }

    /// Discard artificial columns and install the real objective
    /// (unit cost on every z variable).
    fn enter_phase_two(&mut self, nv: usize) {
        let m = self.num_constraints();
        let structural = self.cols - self.num_artificial;
        for row in self.rows.iter_mut() {
            let rhs = row[self.cols];
            row.truncate(structural);
            row.push(rhs);
        }
        self.cols = structural;
        self.num_artificial = 0;

        let mut cost = vec![0.0; self.cols + 1];
        for entry in cost.iter_mut().take(nv) {
            *entry = 1.0;
        }
        for r in 0..m {
            let basic_cost = if self.basis[r] < nv { 1.0 } else { 0.0 };
            if basic_cost == 0.0 {
                continue;
            }
            let source = self.rows[r].clone();
            for (entry, &src) in cost.iter_mut().zip(&source) {
                *entry -= basic_cost * src;
            }
        }
        self.rows[m] = cost;
    }
}
