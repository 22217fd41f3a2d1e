//! End-to-end observer synthesis: assemble, solve, recover the gains.

use nalgebra::DMatrix;

use crate::lmi::{
    assemble_lmi_system, assemble_lmi_system_with_gains, evaluate_lmi_system, ConstraintMargin, LmiError,
    ObserverProblem, SlotId,
};
use crate::sdp::{solve_margin, SolveOutcome, SolveStatus, SolverConfig, SolverError};

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum SynthesisError {
    #[error("{which} must be a positive diagonal matrix (entry {index} is {value})")]
    NonPositiveDiagonal { which: &'static str, index: usize, value: f64 },
    #[error("{which} has shape {got:?}, expected {expected:?}")]
    Shape {
        which: &'static str,
        expected: (usize, usize),
        got: (usize, usize),
    },
    #[error("solver finished with status {}, margin {:.3e}", .0.status, .0.margin)]
    NotFeasible(Box<SolveOutcome>),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Lmi(#[from] LmiError),
}

/// Observer gains together with the certificate that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct ObserverGains {
    pub k1: DMatrix<f64>,
    pub k2: DMatrix<f64>,
    pub certificate: SolveOutcome,
}

fn diagonal_inverse_times(
    p: &DMatrix<f64>,
    w: &DMatrix<f64>,
    which: &'static str,
) -> Result<DMatrix<f64>, SynthesisError> {
    let n = p.nrows();
    if p.ncols() != n {
        return Err(SynthesisError::Shape { which, expected: (n, n), got: p.shape() });
    }
    if w.nrows() != n {
        return Err(SynthesisError::Shape { which: "W", expected: (n, w.ncols()), got: w.shape() });
    }
    for i in 0..n {
        let d = p[(i, i)];
        if !(d.is_finite() && d > 0.0) {
            return Err(SynthesisError::NonPositiveDiagonal { which, index: i, value: d });
        }
    }
    Ok(DMatrix::from_fn(n, w.ncols(), |i, j| w[(i, j)] / p[(i, i)]))
}

/// `K1 = P1^-1 W1`, `K2 = P2^-1 W2` for positive diagonal `P1`, `P2`.
/// Off-diagonal entries of `P` are ignored.
pub fn extract_gains(
    p1: &DMatrix<f64>,
    p2: &DMatrix<f64>,
    w1: &DMatrix<f64>,
    w2: &DMatrix<f64>,
) -> Result<(DMatrix<f64>, DMatrix<f64>), SynthesisError> {
    Ok((diagonal_inverse_times(p1, w1, "P1")?, diagonal_inverse_times(p2, w2, "P2")?))
}

/// Solves the observer conditions and returns gains with a strictly
/// feasible certificate.
pub fn synthesize_observer(problem: &ObserverProblem, config: &SolverConfig) -> Result<ObserverGains, SynthesisError> {
    let system = assemble_lmi_system(problem)?;
    let outcome = solve_margin(&system, config)?;
    if outcome.status != SolveStatus::Feasible {
        return Err(SynthesisError::NotFeasible(Box::new(outcome)));
    }
    let get = |id| system.layout.unpack(&outcome.assignment, id);
    let (k1, k2) = extract_gains(&get(SlotId::P1)?, &get(SlotId::P2)?, &get(SlotId::W1)?, &get(SlotId::W2)?)?;
    Ok(ObserverGains { k1, k2, certificate: outcome })
}

/// Re-checks synthesized gains: the gains are held fixed and the
/// certificate's remaining decision matrices are evaluated against the
/// conditions, with `W` rebuilt as `P K`.
pub fn recertify(problem: &ObserverProblem, gains: &ObserverGains) -> Result<Vec<ConstraintMargin>, SynthesisError> {
    let free = assemble_lmi_system(problem)?;
    let fixed = assemble_lmi_system_with_gains(problem, &gains.k1, &gains.k2)?;
    let x = &gains.certificate.assignment;
    let y = fixed.layout.pack(|id| free.layout.unpack(x, id).ok())?;
    Ok(evaluate_lmi_system(&fixed, &y)?)
}
