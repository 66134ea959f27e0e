//! Bounded-variable primal simplex for small dense linear programs
//!
//! ```text
//! minimize    c^T x
//! subject to  A_eq x  = b_eq
//!             A_le x <= b_le
//!             0 <= x <= u        (u may be +inf)
//! ```
//!
//! Upper bounds are handled natively: a non-basic variable sits at either
//! its lower or its upper bound and may flip between them without a basis
//! change. Entering and leaving variables follow Bland's rule, so the method
//! terminates on degenerate problems. Feasibility is established with a
//! first phase over artificial variables.
//!
//! The problems this crate builds have at most a few hundred columns and a
//! handful of rows; the dense tableau is sized for that. Worst-case simplex
//! running time is exponential in the number of columns.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::solve_dense;

/// Pivot elements smaller than this are treated as zero.
pub const PIVOT_TOLERANCE: f64 = 1e-10;
/// Absolute tolerance for constraint satisfaction.
pub const FEASIBILITY_TOLERANCE: f64 = 1e-7;
const OPTIMALITY_TOLERANCE: f64 = 1e-11;
const ORACLE_SIZE_LIMIT: usize = 20;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LpError {
    #[error("LP dimension mismatch: {0}")]
    Dimension(String),
    #[error("LP contains a non-finite or invalid entry: {0}")]
    InvalidEntry(String),
    #[error("simplex did not converge within {0} iterations")]
    IterationLimit(usize),
    #[error("brute-force oracle supports at most {ORACLE_SIZE_LIMIT} rows + variables, got {0}")]
    OracleTooLarge(usize),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LpProblem {
    pub objective: Vec<f64>,
    pub eq_rows: Vec<Vec<f64>>,
    pub eq_rhs: Vec<f64>,
    pub le_rows: Vec<Vec<f64>>,
    pub le_rhs: Vec<f64>,
    /// Per-variable upper bounds; lower bounds are fixed at zero.
    pub upper_bounds: Vec<f64>,
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
    pub x: Vec<f64>,
    pub objective_value: f64,
    pub iterations: usize,
}

impl LpSolution {
    fn without_point(status: LpStatus, n: usize, iterations: usize) -> Self {
        let objective_value = match status {
            LpStatus::Unbounded => f64::NEG_INFINITY,
            _ => f64::NAN,
        };
        Self {
            status,
            x: vec![f64::NAN; n],
            objective_value,
            iterations,
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl LpProblem {
    /// Problem with `n` variables, zero objective and no constraints.
    pub fn new(objective: Vec<f64>, upper_bounds: Vec<f64>) -> Self {
        Self {
            objective,
            upper_bounds,
            ..Self::default()
        }
    }

    pub fn add_eq(&mut self, row: Vec<f64>, rhs: f64) {
        self.eq_rows.push(row);
        self.eq_rhs.push(rhs);
    }

    pub fn add_le(&mut self, row: Vec<f64>, rhs: f64) {
        self.le_rows.push(row);
        self.le_rhs.push(rhs);
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn num_rows(&self) -> usize {
        self.eq_rows.len() + self.le_rows.len()
    }

    pub fn validate(&self) -> Result<(), LpError> {
        let n = self.num_vars();
        if self.upper_bounds.len() != n {
            return Err(LpError::Dimension(format!(
                "{} upper bounds for {n} variables",
                self.upper_bounds.len()
            )));
        }
        if self.eq_rows.len() != self.eq_rhs.len() || self.le_rows.len() != self.le_rhs.len() {
            return Err(LpError::Dimension(
                "row count does not match right-hand side length".into(),
            ));
        }
        for (i, row) in self.eq_rows.iter().chain(&self.le_rows).enumerate() {
            if row.len() != n {
                return Err(LpError::Dimension(format!(
                    "row {i} has {} entries, expected {n}",
                    row.len()
                )));
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(LpError::InvalidEntry(format!("row {i}")));
            }
        }
        if self
            .objective
            .iter()
            .chain(&self.eq_rhs)
            .chain(&self.le_rhs)
            .any(|v| !v.is_finite())
        {
            return Err(LpError::InvalidEntry("objective or right-hand side".into()));
        }
        if self.upper_bounds.iter().any(|u| u.is_nan() || *u < 0.0) {
            return Err(LpError::InvalidEntry("upper bounds must be >= 0".into()));
        }
        Ok(())
    }

    pub fn objective_at(&self, x: &[f64]) -> f64 {
        dot(&self.objective, x)
    }

    /// Largest violation of any constraint or bound at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let eq = self
            .eq_rows
            .iter()
            .zip(&self.eq_rhs)
            .map(|(r, b)| (dot(r, x) - b).abs());
        let le = self
            .le_rows
            .iter()
            .zip(&self.le_rhs)
            .map(|(r, b)| (dot(r, x) - b).max(0.0));
        let bounds = x
            .iter()
            .zip(&self.upper_bounds)
            .map(|(v, u)| (-v).max(v - u).max(0.0));
        eq.chain(le).chain(bounds).fold(0.0, f64::max)
    }

    pub fn is_feasible(&self, x: &[f64], tol: f64) -> bool {
        x.len() == self.num_vars() && self.max_violation(x) <= tol
    }
}

struct Tableau {
    rows: usize,
    cols: usize,
    /// `B^{-1} [A | b]`, row-major with `cols + 1` entries per row.
    t: Vec<f64>,
    basis: Vec<usize>,
    is_basic: Vec<bool>,
    at_upper: Vec<bool>,
    can_enter: Vec<bool>,
    upper: Vec<f64>,
    x: Vec<f64>,
    iterations: usize,
    max_iterations: usize,
}

enum Step {
    Optimal,
    Unbounded,
    Moved,
}

impl Tableau {
    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.t[i * (self.cols + 1) + j]
    }

    fn rhs(&self, i: usize) -> f64 {
        self.at(i, self.cols)
    }

    /// Recomputes basic values from `B^{-1} b` and the non-basic bound values.
    fn refresh_basics(&mut self) {
        for i in 0..self.rows {
            let mut v = self.rhs(i);
            for j in 0..self.cols {
                if !self.is_basic[j] && self.x[j] != 0.0 {
                    v -= self.at(i, j) * self.x[j];
                }
            }
            self.x[self.basis[i]] = v;
        }
    }

    fn pivot(&mut self, r: usize, j: usize) {
        let w = self.cols + 1;
        let p = self.at(r, j);
        for k in 0..w {
            self.t[r * w + k] /= p;
        }
        for i in 0..self.rows {
            if i == r {
                continue;
            }
            let f = self.at(i, j);
            if f != 0.0 {
                for k in 0..w {
                    self.t[i * w + k] -= f * self.t[r * w + k];
                }
            }
        }
        let leaving = self.basis[r];
        self.is_basic[leaving] = false;
        self.is_basic[j] = true;
        self.basis[r] = j;
    }

    fn step(&mut self, cost: &[f64]) -> Result<Step, LpError> {
        if self.iterations >= self.max_iterations {
            return Err(LpError::IterationLimit(self.max_iterations));
        }
        // Bland: lowest-index improving non-basic column.
        let mut entering = None;
        for j in 0..self.cols {
            if self.is_basic[j] || !self.can_enter[j] || self.upper[j] <= 0.0 {
                continue;
            }
            let d = cost[j]
                - (0..self.rows)
                    .map(|i| cost[self.basis[i]] * self.at(i, j))
                    .sum::<f64>();
            let improving = if self.at_upper[j] {
                d > OPTIMALITY_TOLERANCE
            } else {
                d < -OPTIMALITY_TOLERANCE
            };
            if improving {
                entering = Some(j);
                break;
            }
        }
        let Some(j) = entering else {
            return Ok(Step::Optimal);
        };
        self.iterations += 1;
        let dir = if self.at_upper[j] { -1.0 } else { 1.0 };

        let mut best: Option<(f64, usize, bool)> = None; // (ratio, row, leaves at upper)
        for i in 0..self.rows {
            let alpha = dir * self.at(i, j);
            let b = self.basis[i];
            let (limit, to_upper) = if alpha > PIVOT_TOLERANCE {
                ((self.x[b] / alpha).max(0.0), false)
            } else if alpha < -PIVOT_TOLERANCE && self.upper[b].is_finite() {
                (((self.upper[b] - self.x[b]) / -alpha).max(0.0), true)
            } else {
                continue;
            };
            let better = match best {
                None => true,
                Some((lim, row, _)) => {
                    limit < lim - 1e-12 || (limit <= lim + 1e-12 && b < self.basis[row])
                }
            };
            if better {
                best = Some((limit, i, to_upper));
            }
        }

        let flip = self.upper[j];
        let theta = match best {
            Some((lim, _, _)) => lim.min(flip),
            None => flip,
        };
        if !theta.is_finite() {
            return Ok(Step::Unbounded);
        }

        match best {
            Some((lim, r, to_upper)) if lim < flip => {
                let leaving = self.basis[r];
                self.x[j] += dir * theta;
                self.at_upper[j] = false;
                self.pivot(r, j);
                self.at_upper[leaving] = to_upper;
                self.x[leaving] = if to_upper { self.upper[leaving] } else { 0.0 };
            }
            _ => {
                self.at_upper[j] = !self.at_upper[j];
                self.x[j] = if self.at_upper[j] { self.upper[j] } else { 0.0 };
            }
        }
        self.refresh_basics();
        Ok(Step::Moved)
    }

    fn run(&mut self, cost: &[f64]) -> Result<bool, LpError> {
        loop {
            match self.step(cost)? {
                Step::Optimal => return Ok(true),
                Step::Unbounded => return Ok(false),
                Step::Moved => {}
            }
        }
    }
}

/// Solves the problem with the bounded-variable simplex method.
///
/// Infeasible and unbounded problems are reported through
/// [`LpSolution::status`]; malformed input is an error.
pub fn solve(problem: &LpProblem) -> Result<LpSolution, LpError> {
    problem.validate()?;
    let n = problem.num_vars();
    let m_eq = problem.eq_rows.len();
    let m_le = problem.le_rows.len();
    let rows = m_eq + m_le;
    let slack0 = n;
    let art0 = n + m_le;
    let cols = n + m_le + rows;
    let w = cols + 1;

    let mut t = vec![0.0; rows * w];
    let row_iter = problem
        .eq_rows
        .iter()
        .zip(&problem.eq_rhs)
        .chain(problem.le_rows.iter().zip(&problem.le_rhs));
    for (i, (row, &b)) in row_iter.enumerate() {
        let sign = if b < 0.0 { -1.0 } else { 1.0 };
        for (j, v) in row.iter().enumerate() {
            t[i * w + j] = sign * v;
        }
        if i >= m_eq {
            t[i * w + slack0 + (i - m_eq)] = sign;
        }
        t[i * w + art0 + i] = 1.0;
        t[i * w + cols] = sign * b;
    }

    let mut upper = problem.upper_bounds.clone();
    upper.extend(std::iter::repeat_n(f64::INFINITY, m_le + rows));
    let mut is_basic = vec![false; cols];
    let basis: Vec<usize> = (art0..cols).collect();
    for &b in &basis {
        is_basic[b] = true;
    }

    let mut tab = Tableau {
        rows,
        cols,
        t,
        basis,
        is_basic,
        at_upper: vec![false; cols],
        can_enter: vec![true; cols],
        upper,
        x: vec![0.0; cols],
        iterations: 0,
        max_iterations: 50_000 + 100 * cols,
    };
    tab.refresh_basics();

    // Phase one: drive the artificial variables to zero.
    let mut phase1 = vec![0.0; cols];
    phase1[art0..].iter_mut().for_each(|c| *c = 1.0);
    tab.run(&phase1)?;
    let infeasibility: f64 = tab.x[art0..].iter().sum();
    let scale = problem
        .eq_rhs
        .iter()
        .chain(&problem.le_rhs)
        .fold(1.0f64, |a, b| a.max(b.abs()));
    if infeasibility > FEASIBILITY_TOLERANCE * scale {
        return Ok(LpSolution::without_point(
            LpStatus::Infeasible,
            n,
            tab.iterations,
        ));
    }

    for j in art0..cols {
        tab.can_enter[j] = false;
        tab.upper[j] = 0.0;
    }
    // Swap remaining zero-valued artificials out of the basis where possible;
    // rows where that fails are redundant and keep a fixed-at-zero artificial.
    for r in 0..rows {
        if tab.basis[r] < art0 {
            continue;
        }
        let candidate = (0..art0)
            .filter(|&j| !tab.is_basic[j])
            .filter(|&j| tab.at(r, j).abs() > 1e-9)
            .max_by(|&a, &b| tab.at(r, a).abs().total_cmp(&tab.at(r, b).abs()));
        if let Some(j) = candidate {
            let leaving = tab.basis[r];
            tab.pivot(r, j);
            tab.at_upper[leaving] = false;
            tab.x[leaving] = 0.0;
        }
    }
    tab.refresh_basics();

    let mut phase2 = vec![0.0; cols];
    phase2[..n].copy_from_slice(&problem.objective);
    if !tab.run(&phase2)? {
        return Ok(LpSolution::without_point(
            LpStatus::Unbounded,
            n,
            tab.iterations,
        ));
    }

    let x: Vec<f64> = tab.x[..n]
        .iter()
        .zip(&problem.upper_bounds)
        .map(|(&v, &u)| v.clamp(0.0, u))
        .collect();
    Ok(LpSolution {
        status: LpStatus::Optimal,
        objective_value: problem.objective_at(&x),
        x,
        iterations: tab.iterations,
    })
}

/// Exact optimum by enumerating every candidate basic solution.
///
/// Each candidate fixes some variables at a bound, marks a subset of the
/// inequality rows active, and solves the equality system for the remaining
/// variables. Intended as an independent test oracle for [`solve`].
pub fn brute_force_oracle(problem: &LpProblem) -> Result<LpSolution, LpError> {
    problem.validate()?;
    let size = problem.num_vars() + problem.num_rows();
    if size > ORACLE_SIZE_LIMIT {
        return Err(LpError::OracleTooLarge(size));
    }
    if problem.upper_bounds.iter().all(|u| u.is_finite()) {
        return Ok(enumerate_vertices(problem, &problem.upper_bounds));
    }
    // Box the free directions; a ray shows up as an objective that keeps
    // improving when the box grows.
    let boxed = |limit: f64| -> Vec<f64> {
        problem
            .upper_bounds
            .iter()
            .map(|u| if u.is_finite() { *u } else { limit })
            .collect()
    };
    let small = enumerate_vertices(problem, &boxed(1e6));
    if small.status != LpStatus::Optimal {
        return Ok(small);
    }
    let large = enumerate_vertices(problem, &boxed(2e6));
    if large.objective_value < small.objective_value - 1e-6 * (1.0 + small.objective_value.abs()) {
        return Ok(LpSolution::without_point(
            LpStatus::Unbounded,
            problem.num_vars(),
            0,
        ));
    }
    Ok(small)
}

fn enumerate_vertices(problem: &LpProblem, upper: &[f64]) -> LpSolution {
    let n = problem.num_vars();
    let m_eq = problem.eq_rows.len();
    let m_le = problem.le_rows.len();
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut examined = 0usize;

    for free_mask in 0u32..(1 << n) {
        let free: Vec<usize> = (0..n).filter(|j| free_mask & (1 << j) != 0).collect();
        let fixed: Vec<usize> = (0..n).filter(|j| free_mask & (1 << j) == 0).collect();
        for active_mask in 0u32..(1 << m_le) {
            let active: Vec<usize> = (0..m_le).filter(|i| active_mask & (1 << i) != 0).collect();
            if active.len() > free.len() || m_eq + active.len() < free.len() {
                continue;
            }
            for bound_mask in 0u32..(1 << fixed.len()) {
                let mut x = vec![0.0; n];
                for (bit, &j) in fixed.iter().enumerate() {
                    if bound_mask & (1 << bit) != 0 {
                        x[j] = upper[j];
                    }
                }
                let rows: Vec<(&Vec<f64>, f64)> = problem
                    .eq_rows
                    .iter()
                    .zip(problem.eq_rhs.iter().copied())
                    .chain(
                        active
                            .iter()
                            .map(|&i| (&problem.le_rows[i], problem.le_rhs[i])),
                    )
                    .collect();
                if !free.is_empty() {
                    let a: Vec<Vec<f64>> = rows
                        .iter()
                        .map(|(r, _)| free.iter().map(|&j| r[j]).collect())
                        .collect();
                    let b: Vec<f64> = rows.iter().map(|(r, rhs)| rhs - dot(r, &x)).collect();
                    let Some(sol) = solve_dense(&a, &b, 1e-9) else {
                        continue;
                    };
                    for (&j, v) in free.iter().zip(sol) {
                        x[j] = v;
                    }
                }
                examined += 1;
                let boxed = LpProblem {
                    upper_bounds: upper.to_vec(),
                    ..problem.clone()
                };
                if !boxed.is_feasible(&x, 1e-9) {
                    continue;
                }
                let obj = problem.objective_at(&x);
                if best.as_ref().is_none_or(|(b, _)| obj < *b) {
                    best = Some((obj, x));
                }
            }
        }
    }
    match best {
        Some((objective_value, x)) => LpSolution {
            status: LpStatus::Optimal,
            x,
            objective_value,
            iterations: examined,
        },
        None => LpSolution::without_point(LpStatus::Infeasible, n, examined),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cap_binds() {
        let mut p = LpProblem::new(vec![-1.0, 0.0], vec![0.6, 1.0]);
        p.add_eq(vec![1.0, 1.0], 1.0);
        let s = solve(&p).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.x[0] - 0.6).abs() < 1e-12 && (s.x[1] - 0.4).abs() < 1e-12);
        assert!((s.objective_value + 0.6).abs() < 1e-12);
        let o = brute_force_oracle(&p).unwrap();
        assert!((o.objective_value + 0.6).abs() < 1e-12);
    }

    #[test]
    fn degenerate_objective() {
        let mut p = LpProblem::new(vec![1.0; 3], vec![1.0; 3]);
        p.add_eq(vec![0.5, 0.5, 0.5], 1.0);
        let s = solve(&p).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!(p.is_feasible(&s.x, 1e-9));
        assert!((s.objective_value - 2.0).abs() < 1e-12);
        assert!((brute_force_oracle(&p).unwrap().objective_value - 2.0).abs() < 1e-12);
    }

    #[test]
    fn contradictory_equalities() {
        let mut p = LpProblem::new(vec![1.0, 1.0], vec![5.0, 5.0]);
        p.add_eq(vec![1.0, 1.0], 1.0);
        p.add_eq(vec![1.0, 1.0], 2.0);
        assert_eq!(solve(&p).unwrap().status, LpStatus::Infeasible);
        assert_eq!(brute_force_oracle(&p).unwrap().status, LpStatus::Infeasible);
    }

    #[test]
    fn redundant_equalities() {
        let mut p = LpProblem::new(vec![1.0, 2.0], vec![5.0, 5.0]);
        p.add_eq(vec![1.0, 1.0], 1.0);
        p.add_eq(vec![2.0, 2.0], 2.0);
        let s = solve(&p).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.objective_value - 1.0).abs() < 1e-12);
        assert!((brute_force_oracle(&p).unwrap().objective_value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn unbounded() {
        let mut p = LpProblem::new(vec![-1.0, 0.0], vec![f64::INFINITY, 1.0]);
        p.add_le(vec![-1.0, 1.0], 1.0);
        assert_eq!(solve(&p).unwrap().status, LpStatus::Unbounded);
        assert_eq!(brute_force_oracle(&p).unwrap().status, LpStatus::Unbounded);
    }

    #[test]
    fn negative_rhs_and_inequalities() {
        // min x0 + x1 s.t. -x0 - x1 <= -1.5, x0 <= 1, x1 <= 1
        let mut p = LpProblem::new(vec![1.0, 1.0], vec![1.0, 1.0]);
        p.add_le(vec![-1.0, -1.0], -1.5);
        let s = solve(&p).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.objective_value - 1.5).abs() < 1e-12);
    }

    #[test]
    fn dimension_errors() {
        let mut p = LpProblem::new(vec![1.0, 1.0], vec![1.0]);
        assert!(matches!(solve(&p), Err(LpError::Dimension(_))));
        p.upper_bounds.push(1.0);
        p.add_eq(vec![1.0], 1.0);
        assert!(matches!(solve(&p), Err(LpError::Dimension(_))));
        let q = LpProblem::new(vec![0.0; 21], vec![1.0; 21]);
        assert!(matches!(
            brute_force_oracle(&q),
            Err(LpError::OracleTooLarge(21))
        ));
    }
}
