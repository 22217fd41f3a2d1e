//! Margin-maximising LMI solver.
//!
//! Solves `max t` subject to `F_k(x) - t I >= 0` for every oriented
//! constraint and the box `|x_i| <= B`, with a log-det barrier method:
//! damped Newton steps on
//!
//! ```text
//! -s t - sum_k log det(F_k(x) - t I) - sum_i log(B - x_i) - sum_i log(B + x_i)
//! ```
//!
//! for an increasing barrier weight `s`. The box keeps the problem bounded;
//! without it the homogeneous observer conditions would admit arbitrarily
//! large margins by scaling.

use nalgebra::{DMatrix, DVector};

use crate::lmi::{evaluate_lmi_system, min_margin, Assignment, ConstraintMargin, LmiError, LmiSystem, SparseSym};

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    /// Cap on the total number of Newton steps.
    pub max_iterations: usize,
    /// Stop once the duality-gap bound, relative to `1 + |margin|`, falls below this.
    pub tolerance: f64,
    /// A solution counts as feasible once its margin reaches this.
    pub margin_target: f64,
    pub barrier_initial: f64,
    pub barrier_growth: f64,
    /// Box bound on every decision coordinate.
    pub variable_bound: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            max_iterations: 500,
            tolerance: 1e-7,
            margin_target: 1e-6,
            barrier_initial: 1.0,
            barrier_growth: 10.0,
            variable_bound: 100.0,
        }
    }
}

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("invalid solver configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Lmi(#[from] LmiError),
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), SolverError> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if self.max_iterations == 0 {
            return Err(SolverError::Config("max_iterations must be positive".into()));
        }
        if !positive(self.tolerance) {
            return Err(SolverError::Config("tolerance must be positive".into()));
        }
        if !self.margin_target.is_finite() {
            return Err(SolverError::Config("margin_target must be finite".into()));
        }
        if !positive(self.barrier_initial) {
            return Err(SolverError::Config("barrier_initial must be positive".into()));
        }
        if !(self.barrier_growth.is_finite() && self.barrier_growth > 1.0) {
            return Err(SolverError::Config("barrier_growth must exceed 1".into()));
        }
        if !positive(self.variable_bound) {
            return Err(SolverError::Config("variable_bound must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum SolveStatus {
    Feasible,
    MarginBelowTarget,
    IterationLimit,
}

impl std::fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            SolveStatus::Feasible => "Feasible",
            SolveStatus::MarginBelowTarget => "MarginBelowTarget",
            SolveStatus::IterationLimit => "IterationLimit",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOutcome {
    pub status: SolveStatus,
    pub assignment: Assignment,
    /// Smallest re-evaluated constraint margin at `assignment`.
    pub margin: f64,
    pub margins: Vec<ConstraintMargin>,
    pub iterations: usize,
}

/// One constraint in oriented form (`>= 0`).
struct Oriented {
    constant: DMatrix<f64>,
    coefficients: Vec<(usize, SparseSym)>,
}

impl Oriented {
    fn slack(&self, x: &DVector<f64>, t: f64) -> DMatrix<f64> {
        let mut s = self.constant.clone();
        for (k, c) in &self.coefficients {
            c.add_scaled_to(&mut s, x[*k]);
        }
        for i in 0..s.nrows() {
            s[(i, i)] -= t;
        }
        s
    }
}

struct Barrier {
    constraints: Vec<Oriented>,
    bound: f64,
    nvars: usize,
}

fn log_det(s: &DMatrix<f64>) -> Option<f64> {
    let chol = s.clone().cholesky()?;
    Some(2.0 * chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>())
}

impl Barrier {
    fn new(system: &LmiSystem, bound: f64) -> Self {
        let constraints = system
            .constraints
            .iter()
            .map(|c| {
                let flip = match c.sign {
                    crate::lmi::Sign::PositiveSemidefinite => 1.0,
                    crate::lmi::Sign::NegativeDefinite => -1.0,
                };
                let scaled = c.scaled(flip);
                Oriented { constant: scaled.constant, coefficients: scaled.coefficients }
            })
            .collect();
        Self { constraints, bound, nvars: system.layout.len() }
    }

    fn total_dim(&self) -> usize {
        self.constraints.iter().map(|c| c.constant.nrows()).sum::<usize>() + 2 * self.nvars
    }

    /// Barrier value, or `None` outside the domain.
    fn value(&self, x: &DVector<f64>, t: f64, weight: f64) -> Option<f64> {
        let mut v = -weight * t;
        for xi in x.iter() {
            let (a, b) = (self.bound - xi, self.bound + xi);
            if a <= 0.0 || b <= 0.0 {
                return None;
            }
            v -= a.ln() + b.ln();
        }
        for c in &self.constraints {
            v -= log_det(&c.slack(x, t))?;
        }
        Some(v)
    }

    /// Gradient and Hessian over `(x, t)`; `t` is the last coordinate.
    fn derivatives(&self, x: &DVector<f64>, t: f64, weight: f64) -> Option<(DVector<f64>, DMatrix<f64>)> {
        let nv = self.nvars;
        let mut grad = DVector::zeros(nv + 1);
        let mut hess = DMatrix::zeros(nv + 1, nv + 1);
        grad[nv] = -weight;
        for i in 0..nv {
            let (a, b) = (self.bound - x[i], self.bound + x[i]);
            grad[i] += 1.0 / a - 1.0 / b;
            hess[(i, i)] += 1.0 / (a * a) + 1.0 / (b * b);
        }
        for c in &self.constraints {
            let s_inv = c.slack(x, t).cholesky()?.inverse();
            grad[nv] += s_inv.trace();
            hess[(nv, nv)] += s_inv.norm_squared();
            let mut products = Vec::with_capacity(c.coefficients.len());
            for (k, f) in &c.coefficients {
                grad[*k] -= f.dot(&s_inv);
                // Y = S^-1 F S^-1, so tr(S^-1 F_i S^-1 F_j) = <F_j, Y_i>.
                let y = &s_inv * f.mul_dense(&s_inv);
                hess[(*k, nv)] -= y.trace();
                products.push(y);
            }
            for (a, (ka, _)) in c.coefficients.iter().enumerate() {
                for (kb, fb) in &c.coefficients[a..] {
                    let h = fb.dot(&products[a]);
                    hess[(*ka, *kb)] += h;
                    if ka != kb {
                        hess[(*kb, *ka)] += h;
                    }
                }
            }
        }
        for i in 0..nv {
            hess[(nv, i)] = hess[(i, nv)];
        }
        Some((grad, hess))
    }

    fn min_eig_margin(&self, x: &DVector<f64>) -> f64 {
        self.constraints
            .iter()
            .map(|c| crate::lmi::min_eigenvalue(&c.slack(x, 0.0)))
            .fold(f64::INFINITY, f64::min)
    }
}

fn newton_direction(grad: &DVector<f64>, hess: &DMatrix<f64>) -> Option<DVector<f64>> {
    let mut reg = 0.0;
    let scale = hess.diagonal().amax().max(1.0);
    for _ in 0..8 {
        let mut h = hess.clone();
        if reg > 0.0 {
            for i in 0..h.nrows() {
                h[(i, i)] += reg;
            }
        }
        if let Some(chol) = h.cholesky() {
            return Some(-chol.solve(grad));
        }
        reg = if reg == 0.0 { 1e-14 * scale } else { reg * 100.0 };
    }
    None
}

/// Maximises the common margin of every constraint in `system`.
///
/// Deterministic: identical inputs give identical outputs.
pub fn solve_margin(system: &LmiSystem, config: &SolverConfig) -> Result<SolveOutcome, SolverError> {
    config.validate()?;
    let barrier = Barrier::new(system, config.variable_bound);
    let mut x = DVector::zeros(barrier.nvars);
    let mut t = barrier.min_eig_margin(&x) - 1.0;
    let mut weight = config.barrier_initial;
    let total_dim = barrier.total_dim() as f64;
    let mut iterations = 0;
    let mut converged = false;

    'outer: loop {
        // Centering.
        loop {
            if iterations >= config.max_iterations {
                break 'outer;
            }
            iterations += 1;
            let Some((grad, hess)) = barrier.derivatives(&x, t, weight) else {
                break 'outer;
            };
            let Some(dir) = newton_direction(&grad, &hess) else {
                break 'outer;
            };
            let decrement = -grad.dot(&dir);
            if decrement / 2.0 <= 1e-10 {
                break;
            }
            let current = barrier
                .value(&x, t, weight)
                .expect("iterate stays strictly inside the barrier domain");
            let dx = dir.rows(0, barrier.nvars).into_owned();
            let dt = dir[barrier.nvars];
            let mut step = 1.0;
            let mut accepted = false;
            let mut stalled = false;
            for _ in 0..60 {
                let xn = &x + &dx * step;
                let tn = t + dt * step;
                if let Some(v) = barrier.value(&xn, tn, weight) {
                    if v <= current - 0.01 * step * decrement {
                        stalled = current - v <= 1e-13 * current.abs().max(1.0);
                        x = xn;
                        t = tn;
                        accepted = true;
                        break;
                    }
                }
                step *= 0.5;
            }
            if !accepted || stalled {
                // No further progress is possible at this weight.
                break;
            }
        }
        if total_dim / weight < config.tolerance * (1.0 + t.abs()) {
            converged = true;
            break;
        }
        weight *= config.barrier_growth;
    }

    let assignment = Assignment(x);
    let margins = evaluate_lmi_system(system, &assignment)?;
    let margin = min_margin(&margins);
    let status = if margin >= config.margin_target {
        SolveStatus::Feasible
    } else if converged {
        SolveStatus::MarginBelowTarget
    } else {
        SolveStatus::IterationLimit
    };
    Ok(SolveOutcome { status, assignment, margin, margins, iterations })
}

/// Re-evaluates an assignment against a system.
pub fn verify_assignment(system: &LmiSystem, x: &Assignment) -> Result<Vec<ConstraintMargin>, LmiError> {
    evaluate_lmi_system(system, x)
}
