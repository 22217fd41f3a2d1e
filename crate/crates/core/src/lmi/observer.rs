//! The delay-dependent observer conditions: four vertex LMIs `Phi(tau, sigma) < 0`,
//! the two reciprocally-convex couplings `R_hat_j >= 0`, and positivity of
//! every definite decision matrix.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use super::selectors::{build_interval_blocks, build_selectors, hcat, IntervalBlocks, Selectors};
use super::{AffineLmi, AffineMatrix, Assignment, DecisionLayout, LmiError, Sign, SlotId};
use crate::model::{
    compute_diffusion_bound, validate_model, DelayBounds, GrnModel, MeasurementModel, SectorBound,
};

/// Slack used to encode strict positivity `X > 0` as `X - eps I >= 0`.
pub const POSITIVITY_SLACK: f64 = 1e-6;

/// All data the observer conditions depend on.
#[derive(Debug, Clone, PartialEq)]
pub struct ObserverProblem {
    pub model: GrnModel,
    pub meas: MeasurementModel,
    pub delays: DelayBounds,
    pub sector: SectorBound,
}

impl ObserverProblem {
    pub fn new(model: GrnModel, meas: MeasurementModel, delays: DelayBounds, sector: SectorBound) -> Self {
        Self { model, meas, delays, sector }
    }

    /// Validates plant, outputs, delays and the sector slopes.
    pub fn validate(&self) -> Result<(), LmiError> {
        let mut report = validate_model(&self.model, &self.meas, &self.delays);
        let n = self.model.n();
        if self.sector.slopes.len() != n {
            report.violations.push(crate::model::Violation {
                field: "sector.slopes".into(),
                message: format!(
                    "dimension mismatch: expected {n} entries, got {}",
                    self.sector.slopes.len()
                ),
            });
        } else if let Some(i) = self.sector.slopes.iter().position(|x| !(x.is_finite() && *x > 0.0)) {
            report.violations.push(crate::model::Violation {
                field: format!("sector.slopes[{i}]"),
                message: format!("sector slope must be positive, got {}", self.sector.slopes[i]),
            });
        }
        if report.is_pass() {
            Ok(())
        } else {
            Err(LmiError::Validation(report))
        }
    }

    pub fn layout(&self, free_gains: bool) -> DecisionLayout {
        DecisionLayout::observer(self.model.n(), self.meas.r_m(), self.meas.r_p(), free_gains)
    }
}

/// How the observer gains enter the conditions.
#[derive(Debug, Clone, Copy)]
pub enum GainMode<'a> {
    /// Gains eliminated through `W1 = P1 K1`, `W2 = P2 K2`; the `W` slots are
    /// decision variables.
    Free,
    /// Gains fixed; the conditions are linear in the remaining slots.
    Fixed { k1: &'a DMatrix<f64>, k2: &'a DMatrix<f64> },
}

/// A corner `(tau, sigma)` of the delay box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Vertex {
    pub tau: f64,
    pub sigma: f64,
}

impl Vertex {
    pub fn all(delays: &DelayBounds) -> [Vertex; 4] {
        let (t, s) = (delays.tau_bar, delays.sigma_bar);
        [
            Vertex { tau: 0.0, sigma: 0.0 },
            Vertex { tau: t, sigma: 0.0 },
            Vertex { tau: 0.0, sigma: s },
            Vertex { tau: t, sigma: s },
        ]
    }

    pub fn name(&self, delays: &DelayBounds) -> String {
        let tau = if self.tau == 0.0 { "0" } else if self.tau == delays.tau_bar { "tau_bar" } else { "tau" };
        let sigma = if self.sigma == 0.0 {
            "0"
        } else if self.sigma == delays.sigma_bar {
            "sigma_bar"
        } else {
            "sigma"
        };
        format!("phi({tau},{sigma})")
    }
}

/// Precomputed pieces shared by every vertex.
struct Parts {
    e: Selectors,
    blocks: IntervalBlocks,
    /// `[Delta_7 Delta_8]` and `[Theta_7 Theta_8]`.
    delta78: DMatrix<f64>,
    theta78: DMatrix<f64>,
    q1: AffineMatrix,
    q2: AffineMatrix,
    q3: AffineMatrix,
    q4: AffineMatrix,
    q5: AffineMatrix,
    r1: AffineMatrix,
    r2: AffineMatrix,
    r3: AffineMatrix,
    r4: AffineMatrix,
    m1: AffineMatrix,
    m2: AffineMatrix,
    p1: AffineMatrix,
    p2: AffineMatrix,
    lambda1: AffineMatrix,
    lambda2: AffineMatrix,
    r_hat1: AffineMatrix,
    r_hat2: AffineMatrix,
    /// `P1 A + W1 M` (or `P1 (A + K1 M)` for fixed gains).
    x1: AffineMatrix,
    /// `P2 C + W2 N` (or `P2 (C + K2 N)`).
    x2: AffineMatrix,
    dl: DVector<f64>,
    dl_star: DVector<f64>,
}

fn diag_pair(x: &AffineMatrix, weight: f64) -> AffineMatrix {
    AffineMatrix::block_diag(x, &x.scale(weight))
}

fn r_hat(r: &AffineMatrix, g: &AffineMatrix) -> AffineMatrix {
    let tilde = diag_pair(r, 3.0);
    AffineMatrix::block2x2(&tilde, g, &g.transpose(), &tilde)
}

impl Parts {
    fn new(problem: &ObserverProblem, layout: &DecisionLayout, gains: GainMode<'_>) -> Result<Self, LmiError> {
        let n = problem.model.n();
        let e = build_selectors(n);
        let blocks = build_interval_blocks(&e, problem.delays.tau_bar, problem.delays.sigma_bar);
        let delta78 = hcat(blocks.delta(7), blocks.delta(8));
        let theta78 = hcat(blocks.theta(7), blocks.theta(8));
        let s = |id| layout.expr(id);
        let p1 = s(SlotId::P1)?;
        let p2 = s(SlotId::P2)?;
        let (a, c) = (problem.model.a(), problem.model.c());
        let (x1, x2) = match gains {
            GainMode::Free => {
                let mut x1 = p1.right_mul(&a);
                x1.add_assign(&s(SlotId::W1)?.right_mul(&problem.meas.mrna));
                let mut x2 = p2.right_mul(&c);
                x2.add_assign(&s(SlotId::W2)?.right_mul(&problem.meas.protein));
                (x1, x2)
            }
            GainMode::Fixed { k1, k2 } => {
                let (r_m, r_p) = (problem.meas.r_m(), problem.meas.r_p());
                if k1.shape() != (n, r_m) || k2.shape() != (n, r_p) {
                    return Err(LmiError::GainShape {
                        expected: ((n, r_m), (n, r_p)),
                        got: (k1.shape(), k2.shape()),
                    });
                }
                (
                    p1.right_mul(&(&a + k1 * &problem.meas.mrna)),
                    p2.right_mul(&(&c + k2 * &problem.meas.protein)),
                )
            }
        };
        let r1 = s(SlotId::R1)?;
        let r2 = s(SlotId::R2)?;
        let r_hat1 = r_hat(&r1, &s(SlotId::G1)?);
        let r_hat2 = r_hat(&r2, &s(SlotId::G2)?);
        let (dl, dl_star) = compute_diffusion_bound(&problem.model);
        Ok(Self {
            e,
            blocks,
            delta78,
            theta78,
            q1: s(SlotId::Q1)?,
            q2: s(SlotId::Q2)?,
            q3: s(SlotId::Q3)?,
            q4: s(SlotId::Q4)?,
            q5: s(SlotId::Q5)?,
            r1,
            r2,
            r3: s(SlotId::R3)?,
            r4: s(SlotId::R4)?,
            m1: s(SlotId::M1)?,
            m2: s(SlotId::M2)?,
            p1,
            p2,
            lambda1: s(SlotId::Lambda1)?,
            lambda2: s(SlotId::Lambda2)?,
            r_hat1,
            r_hat2,
            x1,
            x2,
            dl,
            dl_star,
        })
    }

    fn phi(&self, problem: &ObserverProblem, tau: f64, sigma: f64) -> AffineMatrix {
        let n = problem.model.n();
        let e = |i| self.e.e(i);
        let d = |i| self.blocks.delta(i);
        let th = |i| self.blocks.theta(i);
        let DelayBounds { tau_bar, sigma_bar, mu1, mu2 } = problem.delays;
        let k = problem.sector.matrix();
        let w = &problem.model.coupling;
        let b = problem.model.b();

        let mut phi = AffineMatrix::zeros(14 * n, 14 * n);
        let mut add = |term: AffineMatrix, weight: f64| phi.add_scaled(&term, weight);

        // Sector terms, error dynamics and their descriptor form.
        add(self.lambda1.congruence(e(7)), -2.0);
        add(self.lambda1.right_mul(&k).symmetric_sandwich(e(4), e(7)), 1.0);
        add(self.lambda2.congruence(e(8)), -2.0);
        add(self.lambda2.left_mul(&k).symmetric_sandwich(e(6), e(8)), 1.0);
        add(self.x1.symmetric_sandwich(e(9), e(1)), -1.0);
        add(self.p1.right_mul(w).symmetric_sandwich(e(9), e(8)), 1.0);
        add(self.p1.congruence(e(9)), -2.0);
        add(self.x2.symmetric_sandwich(e(10), e(4)), -1.0);
        add(self.p2.right_mul(&b).symmetric_sandwich(e(10), e(3)), 1.0);
        add(self.p2.congruence(e(10)), -2.0);

        // Diffusion bound and the state-side error dynamics. The
        // non-symmetric `-2 e1 X1 e1^T` enters through its symmetric part.
        add(self.p1.right_mul(&DMatrix::from_diagonal(&self.dl)).congruence(e(1)), -0.5 * PI * PI);
        add(self.x1.symmetric_sandwich(e(1), e(1)), -1.0);
        add(self.p1.right_mul(w).symmetric_sandwich(e(1), e(8)), 1.0);
        add(self.p2.right_mul(&DMatrix::from_diagonal(&self.dl_star)).congruence(e(4)), -0.5 * PI * PI);
        add(self.x2.symmetric_sandwich(e(4), e(4)), -1.0);
        add(self.p2.right_mul(&b).symmetric_sandwich(e(4), e(3)), 1.0);

        // Delayed-state integral terms.
        add(self.q1.congruence(e(1)), 1.0);
        add(self.q1.congruence(e(3)), -(1.0 - mu1));
        add(self.q3.congruence(e(4)), 1.0);
        add(self.q3.congruence(e(6)), -(1.0 - mu2));
        add(self.q2.congruence(d(1)), 1.0);
        add(self.q2.symmetric_sandwich(d(1), d(2)), tau);
        add(self.q2.congruence(d(3)), -1.0);
        add(self.q2.symmetric_sandwich(d(3), d(2)), -tau);
        add(self.q2.symmetric_sandwich(d(4), d(6)), 1.0);
        add(self.q2.symmetric_sandwich(d(5), d(6)), tau);
        add(self.q4.congruence(th(1)), 1.0);
        add(self.q4.symmetric_sandwich(th(1), th(2)), sigma);
        add(self.q4.congruence(th(3)), -1.0);
        add(self.q4.symmetric_sandwich(th(3), th(2)), -sigma);
        add(self.q4.symmetric_sandwich(th(4), th(6)), 1.0);
        add(self.q4.symmetric_sandwich(th(5), th(6)), sigma);

        // Nonlinearity integral.
        add(self.q5.congruence(e(7)), 1.0);
        add(self.q5.congruence(e(8)), -(1.0 - mu2));

        // Derivative and state double integrals with the reciprocally
        // convex bound.
        add(self.r1.congruence(e(9)), tau_bar * tau_bar);
        add(self.r2.congruence(e(10)), sigma_bar * sigma_bar);
        add(self.r3.congruence(e(1)), tau_bar * tau_bar);
        add(self.r4.congruence(e(4)), sigma_bar * sigma_bar);
        add(self.r3.congruence(e(12)), -tau_bar * (tau_bar - tau));
        add(self.r3.congruence(e(11)), -tau_bar * tau);
        add(self.r4.congruence(e(14)), -sigma_bar * (sigma_bar - sigma));
        add(self.r4.congruence(e(13)), -sigma_bar * sigma);
        add(self.r_hat1.congruence(&self.delta78), -1.0);
        add(self.r_hat2.congruence(&self.theta78), -1.0);

        // Triple integrals. `(bar - tau)/bar * Delta8 Mtilde Delta8^T` with
        // `Mtilde = diag(M, 3M)/bar` vanishes in the `bar -> 0` limit.
        add(self.m1.congruence(e(9)), 0.5 * tau_bar * tau_bar);
        add(self.m2.congruence(e(10)), 0.5 * sigma_bar * sigma_bar);
        add(self.m1.congruence(&(e(1) - e(11))), -1.0);
        add(self.m1.congruence(&(e(3) - e(12))), -1.0);
        add(self.m2.congruence(&(e(4) - e(13))), -1.0);
        add(self.m2.congruence(&(e(6) - e(14))), -1.0);
        if tau_bar > 0.0 {
            add(diag_pair(&self.m1, 3.0).congruence(d(8)), -(tau_bar - tau) / (tau_bar * tau_bar));
        }
        if sigma_bar > 0.0 {
            add(diag_pair(&self.m2, 3.0).congruence(th(8)), -(sigma_bar - sigma) / (sigma_bar * sigma_bar));
        }

        phi
    }
}

fn check_delay_point(delays: &DelayBounds, tau: f64, sigma: f64) -> Result<(), LmiError> {
    let inside = |v: f64, bar: f64| v.is_finite() && (0.0..=bar).contains(&v);
    if inside(tau, delays.tau_bar) && inside(sigma, delays.sigma_bar) {
        Ok(())
    } else {
        Err(LmiError::DelayOutOfRange { tau, sigma })
    }
}

/// `Phi(tau, sigma)` as an affine expression over `layout`, for any delay
/// pair inside the box `[0, tau_bar] x [0, sigma_bar]`.
pub fn assemble_phi(
    problem: &ObserverProblem,
    layout: &DecisionLayout,
    gains: GainMode<'_>,
    tau: f64,
    sigma: f64,
) -> Result<AffineMatrix, LmiError> {
    check_delay_point(&problem.delays, tau, sigma)?;
    let parts = Parts::new(problem, layout, gains)?;
    Ok(parts.phi(problem, tau, sigma))
}

/// The constraint `Phi(vertex) < 0` with the gains eliminated.
pub fn assemble_phi_vertex(problem: &ObserverProblem, vertex: Vertex) -> Result<AffineLmi, LmiError> {
    problem.validate()?;
    let d = &problem.delays;
    let on_corner = (vertex.tau == 0.0 || vertex.tau == d.tau_bar)
        && (vertex.sigma == 0.0 || vertex.sigma == d.sigma_bar);
    if !on_corner {
        return Err(LmiError::DelayOutOfRange { tau: vertex.tau, sigma: vertex.sigma });
    }
    let layout = problem.layout(true);
    let phi = assemble_phi(problem, &layout, GainMode::Free, vertex.tau, vertex.sigma)?;
    Ok(AffineLmi::from_affine(vertex.name(d), Sign::NegativeDefinite, &phi))
}

/// A family of affine LMIs over one decision layout.
#[derive(Debug, Clone, PartialEq)]
pub struct LmiSystem {
    pub layout: DecisionLayout,
    pub constraints: Vec<AffineLmi>,
}

/// Smallest eigenvalue of one oriented constraint at an assignment.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintMargin {
    pub name: String,
    pub margin: f64,
}

impl LmiSystem {
    pub fn new(layout: DecisionLayout, constraints: Vec<AffineLmi>) -> Self {
        Self { layout, constraints }
    }

    /// Same system with every oriented constraint multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            layout: self.layout.clone(),
            constraints: self.constraints.iter().map(|c| c.scaled(factor)).collect(),
        }
    }

    pub fn constraint(&self, name: &str) -> Option<&AffineLmi> {
        self.constraints.iter().find(|c| c.name == name)
    }
}

/// Per-constraint margins; all positive iff `x` is strictly feasible.
pub fn evaluate_lmi_system(system: &LmiSystem, x: &Assignment) -> Result<Vec<ConstraintMargin>, LmiError> {
    system.layout.check_len(x)?;
    system
        .constraints
        .iter()
        .map(|c| Ok(ConstraintMargin { name: c.name.clone(), margin: c.margin(x.values())? }))
        .collect()
}

/// Smallest margin over all constraints.
pub fn min_margin(margins: &[ConstraintMargin]) -> f64 {
    margins.iter().map(|m| m.margin).fold(f64::INFINITY, f64::min)
}

fn build_system(problem: &ObserverProblem, gains: GainMode<'_>) -> Result<LmiSystem, LmiError> {
    problem.validate()?;
    let free = matches!(gains, GainMode::Free);
    let layout = problem.layout(free);
    let parts = Parts::new(problem, &layout, gains)?;
    let mut constraints = Vec::new();
    for vertex in Vertex::all(&problem.delays) {
        let phi = parts.phi(problem, vertex.tau, vertex.sigma);
        constraints.push(AffineLmi::from_affine(vertex.name(&problem.delays), Sign::NegativeDefinite, &phi));
    }
    constraints.push(AffineLmi::from_affine("r_hat_1", Sign::PositiveSemidefinite, &parts.r_hat1));
    constraints.push(AffineLmi::from_affine("r_hat_2", Sign::PositiveSemidefinite, &parts.r_hat2));
    use SlotId::*;
    for id in [Q1, Q2, Q3, Q4, Q5, R1, R2, R3, R4, M1, M2, P1, P2, Lambda1, Lambda2] {
        let mut expr = layout.expr(id)?;
        let dim = expr.nrows();
        expr.add_assign(&AffineMatrix::constant(DMatrix::identity(dim, dim) * -POSITIVITY_SLACK));
        constraints.push(AffineLmi::from_affine(format!("pos({id})"), Sign::PositiveSemidefinite, &expr));
    }
    Ok(LmiSystem::new(layout, constraints))
}

/// Every condition with the gains eliminated through the `W` slots.
pub fn assemble_lmi_system(problem: &ObserverProblem) -> Result<LmiSystem, LmiError> {
    build_system(problem, GainMode::Free)
}

/// Every condition for fixed gains `K1`, `K2`; the layout has no `W` slots.
pub fn assemble_lmi_system_with_gains(
    problem: &ObserverProblem,
    k1: &DMatrix<f64>,
    k2: &DMatrix<f64>,
) -> Result<LmiSystem, LmiError> {
    build_system(problem, GainMode::Fixed { k1, k2 })
}
