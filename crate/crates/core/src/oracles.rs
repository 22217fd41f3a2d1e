//! Numerical checks of the integral and convexity inequalities behind the
//! observer conditions, evaluated on concrete function families.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::sim::Grid1D;

/// Simpson panels used by every quadrature here.
pub const PANELS: usize = 512;

/// Slack floor below which an inequality counts as violated.
pub const SLACK_FLOOR: f64 = -1e-9;

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("precondition violated: {0}")]
    Precondition(String),
}

/// A vector-valued test function with a closed-form derivative.
#[derive(Debug, Clone, PartialEq)]
pub enum TestFunction {
    /// Component `i` is `sum_k coeffs[i][k] u^k`.
    Polynomial(Vec<Vec<f64>>),
    /// Component `i` is `offset[i] + sum amplitude * sin(freq * u + phase)`.
    Trig { offset: Vec<f64>, terms: Vec<Vec<(f64, f64, f64)>> },
}

impl TestFunction {
    pub fn constant(v: &[f64]) -> Self {
        TestFunction::Polynomial(v.iter().map(|&c| vec![c]).collect())
    }

    pub fn dim(&self) -> usize {
        match self {
            TestFunction::Polynomial(c) => c.len(),
            TestFunction::Trig { offset, .. } => offset.len(),
        }
    }

    pub fn eval(&self, u: f64) -> DVector<f64> {
        match self {
            TestFunction::Polynomial(c) => {
                DVector::from_iterator(c.len(), c.iter().map(|p| p.iter().rev().fold(0.0, |acc, &k| acc * u + k)))
            }
            TestFunction::Trig { offset, terms } => DVector::from_iterator(
                offset.len(),
                offset
                    .iter()
                    .zip(terms)
                    .map(|(o, t)| o + t.iter().map(|&(a, f, p)| a * (f * u + p).sin()).sum::<f64>()),
            ),
        }
    }

    pub fn derivative(&self, u: f64) -> DVector<f64> {
        match self {
            TestFunction::Polynomial(c) => DVector::from_iterator(
                c.len(),
                c.iter().map(|p| {
                    p.iter()
                        .enumerate()
                        .skip(1)
                        .rev()
                        .fold(0.0, |acc, (k, &ck)| acc * u + k as f64 * ck)
                }),
            ),
            TestFunction::Trig { terms, .. } => DVector::from_iterator(
                terms.len(),
                terms.iter().map(|t| t.iter().map(|&(a, f, p)| a * f * (f * u + p).cos()).sum::<f64>()),
            ),
        }
    }

    /// Random polynomial of the given degree with coefficients in `[-1, 1]`.
    pub fn random_polynomial(rng: &mut impl Rng, dim: usize, degree: usize) -> Self {
        TestFunction::Polynomial(
            (0..dim)
                .map(|_| (0..=degree).map(|_| rng.gen_range(-1.0..1.0)).collect())
                .collect(),
        )
    }

    /// Random mixture of `count` sinusoids with frequencies up to `max_freq`.
    pub fn random_trig(rng: &mut impl Rng, dim: usize, count: usize, max_freq: f64) -> Self {
        TestFunction::Trig {
            offset: (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            terms: (0..dim)
                .map(|_| {
                    (0..count)
                        .map(|_| {
                            (
                                rng.gen_range(-1.0..1.0),
                                rng.gen_range(0.1..max_freq),
                                rng.gen_range(0.0..std::f64::consts::TAU),
                            )
                        })
                        .collect()
                })
                .collect(),
        }
    }

    /// Random Dirichlet sine series on `[a, b]`, so `f(a) = f(b) = 0`.
    pub fn random_sine_series(rng: &mut impl Rng, dim: usize, modes: usize, a: f64, b: f64) -> Self {
        let base = std::f64::consts::PI / (b - a);
        TestFunction::Trig {
            offset: vec![0.0; dim],
            terms: (0..dim)
                .map(|_| {
                    (1..=modes)
                        .map(|k| {
                            let f = k as f64 * base;
                            (rng.gen_range(-1.0..1.0) / k as f64, f, -f * a)
                        })
                        .collect()
                })
                .collect(),
        }
    }

    /// `(u - a)(b - u) q(u)` for a random polynomial `q`.
    pub fn random_bubble(rng: &mut impl Rng, dim: usize, degree: usize, a: f64, b: f64) -> Self {
        let bubble = [-a * b, a + b, -1.0];
        TestFunction::Polynomial(
            (0..dim)
                .map(|_| {
                    let q: Vec<f64> = (0..=degree).map(|_| rng.gen_range(-1.0..1.0)).collect();
                    let mut out = vec![0.0; q.len() + 2];
                    for (i, qi) in q.iter().enumerate() {
                        for (j, bj) in bubble.iter().enumerate() {
                            out[i + j] += qi * bj;
                        }
                    }
                    out
                })
                .collect(),
        )
    }
}

/// Composite Simpson rule with [`PANELS`] panels.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let h = (b - a) / PANELS as f64;
    let mut acc = f(a) + f(b);
    for k in 1..PANELS {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + k as f64 * h);
    }
    acc * h / 3.0
}

fn simpson_vec(f: impl Fn(f64) -> DVector<f64>, dim: usize, a: f64, b: f64) -> DVector<f64> {
    let h = (b - a) / PANELS as f64;
    let mut acc = f(a) + f(b);
    for k in 1..PANELS {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        acc += f(a + k as f64 * h) * w;
    }
    debug_assert_eq!(acc.len(), dim);
    acc * (h / 3.0)
}

fn check_interval(a: f64, b: f64) -> Result<(), OracleError> {
    if a.is_finite() && b.is_finite() && a < b {
        Ok(())
    } else {
        Err(OracleError::Precondition(format!("need a < b, got [{a}, {b}]")))
    }
}

fn check_spd(m: &DMatrix<f64>, dim: usize, name: &str) -> Result<(), OracleError> {
    let symmetric = m.is_square() && (m - m.transpose()).amax() <= 1e-12 * m.amax().max(1.0);
    if m.shape() != (dim, dim) || !symmetric || m.clone().cholesky().is_none() {
        return Err(OracleError::Precondition(format!("{name} must be a symmetric positive definite {dim}x{dim} matrix")));
    }
    Ok(())
}

fn quad(x: &DVector<f64>, m: &DMatrix<f64>) -> f64 {
    (x.transpose() * m * x)[(0, 0)]
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JensenSlack {
    pub single: f64,
    pub double: f64,
}

/// Right minus left side of the single and double integral Jensen bounds.
pub fn check_jensen(w: &TestFunction, a: f64, b: f64, m: &DMatrix<f64>) -> Result<JensenSlack, OracleError> {
    check_interval(a, b)?;
    let n = w.dim();
    check_spd(m, n, "M")?;
    let int_w = simpson_vec(|s| w.eval(s), n, a, b);
    let int_q = simpson(|s| quad(&w.eval(s), m), a, b);
    // The inner integral over [theta, b] swaps into a weight (s - a).
    let dbl_w = simpson_vec(|s| w.eval(s) * (s - a), n, a, b);
    let dbl_q = simpson(|s| (s - a) * quad(&w.eval(s), m), a, b);
    Ok(JensenSlack {
        single: (b - a) * int_q - quad(&int_w, m),
        double: (b - a).powi(2) / 2.0 * dbl_q - quad(&dbl_w, m),
    })
}

/// Left minus right side of the Wirtinger-based bound with `diag(Q, 3Q)`.
pub fn check_wirtinger_based(w: &TestFunction, a: f64, b: f64, q: &DMatrix<f64>) -> Result<f64, OracleError> {
    check_interval(a, b)?;
    let n = w.dim();
    check_spd(q, n, "Q")?;
    let lhs = simpson(|u| quad(&w.derivative(u), q), a, b);
    let omega0 = w.eval(b) - w.eval(a);
    let omega1 = w.eval(b) + w.eval(a) - simpson_vec(|u| w.eval(u), n, a, b) * (2.0 / (b - a));
    let rhs = (quad(&omega0, q) + 3.0 * quad(&omega1, q)) / (b - a);
    Ok(lhs - rhs)
}

/// `(b - a)^2 / pi^2 * int |f'|^2 - int |f|^2` for `f` vanishing at both ends.
pub fn check_wirtinger(f: &TestFunction, a: f64, b: f64) -> Result<f64, OracleError> {
    check_interval(a, b)?;
    for end in [a, b] {
        let v = f.eval(end).amax();
        if v > 1e-12 {
            return Err(OracleError::Precondition(format!("f({end}) = {v} is not zero")));
        }
    }
    let d2 = simpson(|v| f.derivative(v).norm_squared(), a, b);
    let f2 = simpson(|v| f.eval(v).norm_squared(), a, b);
    Ok((b - a).powi(2) / std::f64::consts::PI.powi(2) * d2 - f2)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RccCheck {
    /// `min over alpha of f1 / alpha + f2 / (1 - alpha)`.
    pub lhs_min: f64,
    pub argmin: f64,
    /// `f1 + f2 + 2 g`.
    pub rhs_bound: f64,
}

impl RccCheck {
    pub fn slack(&self) -> f64 {
        self.lhs_min - self.rhs_bound
    }
}

/// Two-term reciprocally convex bound for positive `f1`, `f2` and a
/// coupling `g` with `[[f1, g], [g, f2]]` positive semidefinite.
pub fn check_rcc(f1: f64, f2: f64, g: f64) -> Result<RccCheck, OracleError> {
    if !(f1.is_finite() && f2.is_finite() && f1 > 0.0 && f2 > 0.0) {
        return Err(OracleError::Precondition(format!("f1 = {f1}, f2 = {f2} must be positive and finite")));
    }
    if !g.is_finite() || g * g > f1 * f2 * (1.0 + 1e-12) {
        return Err(OracleError::Precondition(format!("[[{f1}, {g}], [{g}, {f2}]] is not positive semidefinite")));
    }
    let phi = |a: f64| f1 / a + f2 / (1.0 - a);
    const GRID: usize = 10_000;
    let step = 1.0 / (GRID + 1) as f64;
    let best = (1..=GRID)
        .map(|k| k as f64 * step)
        .min_by(|x, y| phi(*x).total_cmp(&phi(*y)))
        .expect("nonempty grid");
    let (mut lo, mut hi) = ((best - step).max(step * 1e-3), (best + step).min(1.0 - step * 1e-3));
    let r = (5f64.sqrt() - 1.0) / 2.0;
    while hi - lo > 1e-13 {
        let x1 = hi - r * (hi - lo);
        let x2 = lo + r * (hi - lo);
        if phi(x1) <= phi(x2) {
            hi = x2;
        } else {
            lo = x1;
        }
    }
    let argmin = 0.5 * (lo + hi);
    Ok(RccCheck { lhs_min: phi(argmin), argmin, rhs_bound: f1 + f2 + 2.0 * g })
}

fn neumaier(terms: impl Iterator<Item = f64>) -> f64 {
    let (mut sum, mut comp) = (0.0_f64, 0.0_f64);
    for x in terms {
        let t = sum + x;
        comp += if sum.abs() >= x.abs() { (sum - t) + x } else { (x - t) + sum };
        sum = t;
    }
    sum + comp
}

/// Symmetry defect `|<u, N L v> - <N L u, v>|` of the discrete diffusion
/// operator `L = D d^2/dx^2` with weights `N`. Fields are `n x (nx + 2)`
/// with the boundary columns included.
pub fn check_green_discrete(
    u: &DMatrix<f64>,
    v: &DMatrix<f64>,
    grid: &Grid1D,
    diffusion: &DVector<f64>,
    weights: &DVector<f64>,
) -> Result<f64, OracleError> {
    let n = diffusion.len();
    let cols = grid.nx() + 2;
    if u.shape() != (n, cols) || v.shape() != (n, cols) || weights.len() != n {
        return Err(OracleError::Precondition(format!("fields must be {n}x{cols}")));
    }
    for f in [u, v] {
        if f.column(0).amax() != 0.0 || f.column(cols - 1).amax() != 0.0 {
            return Err(OracleError::Precondition("fields must vanish on the boundary".into()));
        }
    }
    let h = grid.h();
    let lap = |f: &DMatrix<f64>, i: usize, j: usize| (f[(i, j - 1)] - 2.0 * f[(i, j)] + f[(i, j + 1)]) / (h * h);
    let terms = (0..n).flat_map(|i| {
        (1..cols - 1).map(move |j| {
            let c = h * weights[i] * diffusion[i];
            c * (u[(i, j)] * lap(v, i, j) - lap(u, i, j) * v[(i, j)])
        })
    });
    Ok(neumaier(terms).abs())
}

/// Extremes over one lemma's randomized draws and equality witnesses.
#[derive(Debug, Clone, PartialEq)]
pub struct LemmaSummary {
    pub name: &'static str,
    pub draws: usize,
    pub min_slack: f64,
    /// Largest `|slack|` over the equality witnesses.
    pub witness_residual: f64,
}

impl LemmaSummary {
    pub fn passed(&self) -> bool {
        self.min_slack >= SLACK_FLOOR && self.witness_residual <= 1e-9
    }
}

fn random_spd(rng: &mut impl Rng, n: usize) -> DMatrix<f64> {
    let a = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
    &a * a.transpose() + DMatrix::identity(n, n) * 0.1
}

fn random_interval(rng: &mut impl Rng) -> (f64, f64) {
    let a = rng.gen_range(-2.0..1.0);
    (a, a + rng.gen_range(0.2..3.0))
}

/// Runs every oracle on `draws` seeded random instances plus the known
/// equality cases.
pub fn run_lemma_suite(seed: u64, draws: usize) -> Result<Vec<LemmaSummary>, OracleError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();

    let mut jensen = LemmaSummary { name: "jensen", draws, min_slack: f64::INFINITY, witness_residual: 0.0 };
    let mut based = LemmaSummary { name: "wirtinger_based", draws, min_slack: f64::INFINITY, witness_residual: 0.0 };
    let mut wirt = LemmaSummary { name: "wirtinger", draws, min_slack: f64::INFINITY, witness_residual: 0.0 };
    let mut rcc = LemmaSummary { name: "rcc", draws, min_slack: f64::INFINITY, witness_residual: 0.0 };
    let mut green = LemmaSummary { name: "green_discrete", draws, min_slack: f64::INFINITY, witness_residual: 0.0 };

    for k in 0..draws {
        let n = 1 + k % 3;
        let (a, b) = random_interval(&mut rng);
        let m = random_spd(&mut rng, n);
        let w = if k % 2 == 0 {
            TestFunction::random_polynomial(&mut rng, n, 3)
        } else {
            TestFunction::random_trig(&mut rng, n, 3, 3.0)
        };
        let s = check_jensen(&w, a, b, &m)?;
        jensen.min_slack = jensen.min_slack.min(s.single).min(s.double);
        based.min_slack = based.min_slack.min(check_wirtinger_based(&w, a, b, &m)?);

        let f = if k % 2 == 0 {
            TestFunction::random_bubble(&mut rng, n, 2, a, b)
        } else {
            TestFunction::random_sine_series(&mut rng, n, 4, a, b)
        };
        wirt.min_slack = wirt.min_slack.min(check_wirtinger(&f, a, b)?);

        let (f1, f2): (f64, f64) = (rng.gen_range(0.01..10.0), rng.gen_range(0.01..10.0));
        let g = rng.gen_range(-1.0..1.0) * (f1 * f2).sqrt();
        rcc.min_slack = rcc.min_slack.min(check_rcc(f1, f2, g)?.slack());

        let grid = Grid1D::new(rng.gen_range(0.5..2.0), 50).expect("valid grid");
        let field = |rng: &mut ChaCha8Rng| {
            let mut f = DMatrix::from_fn(n, 52, |_, _| rng.gen_range(-1.0..1.0));
            f.column_mut(0).fill(0.0);
            f.column_mut(51).fill(0.0);
            f
        };
        let (u, v) = (field(&mut rng), field(&mut rng));
        let d = DVector::from_fn(n, |_, _| rng.gen_range(0.01..1.0));
        let nw = DVector::from_fn(n, |_, _| rng.gen_range(0.1..2.0));
        green.min_slack = green.min_slack.min(-check_green_discrete(&u, &v, &grid, &d, &nw)?);
    }

    // Equality witnesses.
    let m = DMatrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 1.0]);
    let s = check_jensen(&TestFunction::constant(&[0.7, -1.2]), -0.5, 1.5, &m)?;
    jensen.witness_residual = s.single.abs().max(s.double.abs());
    let linear = TestFunction::Polynomial(vec![vec![0.3, 1.1], vec![-0.2, 0.4]]);
    based.witness_residual = check_wirtinger_based(&linear, -1.0, 2.0, &m)?.abs();
    let (a, b) = (-0.3, 1.7);
    let f = (b - a) / std::f64::consts::PI;
    let eigen = TestFunction::Trig { offset: vec![0.0], terms: vec![vec![(1.0, 1.0 / f, -a / f)]] };
    wirt.witness_residual = check_wirtinger(&eigen, a, b)?.abs();
    rcc.witness_residual = check_rcc(4.0, 1.0, 2.0)?.slack().abs();
    let grid = Grid1D::new(1.0, 50).expect("valid grid");
    let mut u = DMatrix::from_fn(1, 52, |_, j| ((j * 7919) % 13) as f64 - 6.0);
    u[(0, 0)] = 0.0;
    u[(0, 51)] = 0.0;
    let one = DVector::from_element(1, 1.0);
    green.witness_residual = check_green_discrete(&u, &u, &grid, &one, &one)?;

    out.extend([jensen, based, wirt, rcc, green]);
    Ok(out)
}
