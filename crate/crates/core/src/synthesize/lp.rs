//! Dense two-phase simplex with Bland's rule.
//!
//! Problems here have at most a few hundred columns, so the tableau is kept
//! dense and every pivot recomputes reduced costs from scratch.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const PIVOT_EPS: f64 = 1e-11;
const FEAS_TOL: f64 = 1e-9;

/// `maximize c·x  s.t.  row_lower ≤ A x ≤ row_upper,  var_lower ≤ x ≤ var_upper`.
///
/// Variable lower bounds must be finite. Upper bounds and row bounds may be
/// infinite; equal row bounds give an equality constraint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub constraints: Vec<Vec<f64>>,
    pub row_lower: Vec<f64>,
    pub row_upper: Vec<f64>,
    pub var_lower: Vec<f64>,
    pub var_upper: Vec<f64>,
}

impl LinearProgram {
    /// Nonnegative variables and no constraints yet.
    pub fn new(objective: Vec<f64>) -> Self {
        let n = objective.len();
        LinearProgram {
            objective,
            constraints: Vec::new(),
            row_lower: Vec::new(),
            row_upper: Vec::new(),
            var_lower: vec![0.0; n],
            var_upper: vec![f64::INFINITY; n],
        }
    }

    pub fn add_row(&mut self, coefficients: Vec<f64>, lower: f64, upper: f64) {
        self.constraints.push(coefficients);
        self.row_lower.push(lower);
        self.row_upper.push(upper);
    }

    pub fn add_equality(&mut self, coefficients: Vec<f64>, rhs: f64) {
        self.add_row(coefficients, rhs, rhs);
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    fn validate(&self) -> Result<()> {
        let n = self.num_vars();
        let m = self.constraints.len();
        if self.row_lower.len() != m || self.row_upper.len() != m {
            return Err(Error::usage("row bound count differs from constraint count"));
        }
        if self.var_lower.len() != n || self.var_upper.len() != n {
            return Err(Error::usage("variable bound count differs from objective length"));
        }
        if let Some(i) = self.constraints.iter().position(|r| r.len() != n) {
            return Err(Error::usage(format!("constraint row {i} has the wrong length")));
        }
        let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
        if !finite(&self.objective) || self.constraints.iter().any(|r| !finite(r)) {
            return Err(Error::usage("objective and constraint coefficients must be finite"));
        }
        if !finite(&self.var_lower) {
            return Err(Error::usage("variable lower bounds must be finite"));
        }
        let nan = |v: &[f64]| v.iter().any(|x| x.is_nan());
        if nan(&self.var_upper) || nan(&self.row_lower) || nan(&self.row_upper) {
            return Err(Error::usage("bounds must not be NaN"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Optimal point; empty unless the status is optimal.
    pub x: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
}

struct Tableau {
    rows: Vec<Vec<f64>>,
    basis: Vec<usize>,
    width: usize,
    iterations: usize,
}

enum Phase {
    Optimal,
    Unbounded,
}

impl Tableau {
    fn rhs(&self, i: usize) -> f64 {
        self.rows[i][self.width]
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.rows[r][c];
        for v in self.rows[r].iter_mut() {
            *v /= p;
        }
        let pivot_row = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
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
        self.iterations += 1;
    }

    /// Maximize `cost·x` over columns `< allowed`, starting from the current basis.
    fn optimize(&mut self, cost: &[f64], allowed: usize) -> Phase {
        loop {
            let entering = (0..allowed).find(|&j| {
                if self.basis.contains(&j) {
                    return false;
                }
                let reduced = cost[j]
                    - self
                        .rows
                        .iter()
                        .zip(&self.basis)
                        .map(|(row, &b)| cost[b] * row[j])
                        .sum::<f64>();
                reduced > PIVOT_EPS
            });
            let Some(c) = entering else {
                return Phase::Optimal;
            };
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.rows.len() {
                let a = self.rows[i][c];
                if a > PIVOT_EPS {
                    let ratio = self.rhs(i) / a;
                    let better = match leave {
                        None => true,
                        Some((li, lr)) => {
                            ratio < lr - PIVOT_EPS || (ratio <= lr + PIVOT_EPS && self.basis[i] < self.basis[li])
                        }
                    };
                    if better {
                        leave = Some((i, ratio));
                    }
                }
            }
            match leave {
                Some((r, _)) => self.pivot(r, c),
                None => return Phase::Unbounded,
            }
        }
    }
}

/// Solve a linear program. Dimension mismatches are usage errors; infeasible
/// and unbounded problems are reported through [`LpStatus`].
pub fn lp_solve(lp: &LinearProgram) -> Result<LpSolution> {
    lp.validate()?;
    let n = lp.num_vars();

    // Shift x = lower + y with y ≥ 0, then collect rows `coeffs·y (≤|=|≥) rhs`.
    enum Sense {
        Le,
        Ge,
        Eq,
    }
    let mut rows: Vec<(Vec<f64>, Sense, f64)> = Vec::new();
    for (i, a) in lp.constraints.iter().enumerate() {
        let shift: f64 = a.iter().zip(&lp.var_lower).map(|(c, l)| c * l).sum();
        let (lo, hi) = (lp.row_lower[i] - shift, lp.row_upper[i] - shift);
        if lo > hi + FEAS_TOL {
            return Ok(infeasible(0));
        }
        if lo.is_finite() && hi.is_finite() && (hi - lo).abs() <= FEAS_TOL * (1.0 + lo.abs()) {
            rows.push((a.clone(), Sense::Eq, lo));
            continue;
        }
        if hi.is_finite() {
            rows.push((a.clone(), Sense::Le, hi));
        }
        if lo.is_finite() {
            rows.push((a.clone(), Sense::Ge, lo));
        }
    }
    for j in 0..n {
        let span = lp.var_upper[j] - lp.var_lower[j];
        if span < -FEAS_TOL {
            return Ok(infeasible(0));
        }
        if span.is_finite() {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            rows.push((e, Sense::Le, span.max(0.0)));
        }
    }

    let m = rows.len();
    let slack_count = rows.iter().filter(|r| !matches!(r.1, Sense::Eq)).count();
    let art_start = n + slack_count;
    let width = art_start + m;
    let mut tab = Tableau {
        rows: Vec::with_capacity(m),
        basis: Vec::with_capacity(m),
        width,
        iterations: 0,
    };
    let mut slack = n;
    let mut artificials = 0;
    for (i, (a, sense, rhs)) in rows.into_iter().enumerate() {
        let mut row = vec![0.0; width + 1];
        row[..n].copy_from_slice(&a);
        let slack_col = match sense {
            Sense::Le => {
                row[slack] = 1.0;
                slack += 1;
                Some(slack - 1)
            }
            Sense::Ge => {
                row[slack] = -1.0;
                slack += 1;
                Some(slack - 1)
            }
            Sense::Eq => None,
        };
        row[width] = rhs;
        if rhs < 0.0 {
            for v in row.iter_mut() {
                *v = -*v;
            }
        }
        match slack_col {
            Some(s) if row[s] > 0.0 => tab.basis.push(s),
            _ => {
                row[art_start + i] = 1.0;
                tab.basis.push(art_start + i);
                artificials += 1;
            }
        }
        tab.rows.push(row);
    }

    if artificials > 0 {
        let mut cost = vec![0.0; width];
        for c in cost.iter_mut().skip(art_start) {
            *c = -1.0;
        }
        tab.optimize(&cost, width);
        let infeasibility: f64 = tab
            .basis
            .iter()
            .enumerate()
            .filter(|(_, &b)| b >= art_start)
            .map(|(i, _)| tab.rhs(i))
            .sum();
        if infeasibility > FEAS_TOL * (1.0 + m as f64) {
            return Ok(infeasible(tab.iterations));
        }
        // Drive zero-level artificials out where a structural column allows it;
        // rows with no such column are redundant and stay inert.
        for i in 0..m {
            if tab.basis[i] >= art_start {
                if let Some(c) = (0..art_start).find(|&j| tab.rows[i][j].abs() > 1e-9) {
                    tab.pivot(i, c);
                }
            }
        }
    }

    let mut cost = vec![0.0; width];
    cost[..n].copy_from_slice(&lp.objective);
    if let Phase::Unbounded = tab.optimize(&cost, art_start) {
        return Ok(LpSolution {
            status: LpStatus::Unbounded,
            x: Vec::new(),
            objective: f64::INFINITY,
            iterations: tab.iterations,
        });
    }
    let mut x = lp.var_lower.clone();
    for (i, &b) in tab.basis.iter().enumerate() {
        if b < n {
            x[b] += tab.rhs(i);
        }
    }
    let objective = x.iter().zip(&lp.objective).map(|(a, b)| a * b).sum();
    Ok(LpSolution {
        status: LpStatus::Optimal,
        x,
        objective,
        iterations: tab.iterations,
    })
}

fn infeasible(iterations: usize) -> LpSolution {
    LpSolution {
        status: LpStatus::Infeasible,
        x: Vec::new(),
        objective: f64::NAN,
        iterations,
    }
}
