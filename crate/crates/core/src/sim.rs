//! Method-of-lines simulation of the plant, the observer and the error
//! system on a one-dimensional Dirichlet domain.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::lmi::ObserverProblem;
use crate::model::hill;

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum SimError {
    #[error("time step {dt} exceeds the explicit stability bound {limit}")]
    StabilityBound { dt: f64, limit: f64 },
    #[error("delay {name}: {message}")]
    DelayOutOfRange { name: &'static str, message: String },
    #[error("history lookup at t = {t} is outside the stored range [{oldest}, {newest}]")]
    HistoryRange { t: f64, oldest: f64, newest: f64 },
    #[error("dimension error: {0}")]
    Dimension(String),
    #[error("invalid simulation config: {0}")]
    Config(String),
}

/// Uniform grid on `[-L, L]` with `nx` interior nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid1D {
    half_width: f64,
    nx: usize,
}

impl Grid1D {
    pub fn new(half_width: f64, nx: usize) -> Result<Self, SimError> {
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(SimError::Config(format!("half-width must be positive, got {half_width}")));
        }
        if nx == 0 {
            return Err(SimError::Config("need at least one interior node".into()));
        }
        Ok(Self { half_width, nx })
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    /// Interior node count.
    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn h(&self) -> f64 {
        2.0 * self.half_width / (self.nx + 1) as f64
    }

    /// All `nx + 2` node coordinates, boundary nodes included.
    pub fn nodes(&self) -> Vec<f64> {
        let h = self.h();
        (0..self.nx + 2).map(|j| -self.half_width + j as f64 * h).collect()
    }

    /// Interior node coordinates.
    pub fn interior(&self) -> Vec<f64> {
        let mut x = self.nodes();
        x.pop();
        x.remove(0);
        x
    }
}

/// A delay profile `tau(t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DelayFn {
    Constant { value: f64 },
    /// `offset + amplitude * sin(omega * t)`.
    Sinusoid { offset: f64, amplitude: f64, omega: f64 },
}

impl DelayFn {
    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            DelayFn::Constant { value } => value,
            DelayFn::Sinusoid { offset, amplitude, omega } => offset + amplitude * (omega * t).sin(),
        }
    }

    pub fn min_value(&self) -> f64 {
        match *self {
            DelayFn::Constant { value } => value,
            DelayFn::Sinusoid { offset, amplitude, .. } => offset - amplitude.abs(),
        }
    }

    pub fn max_value(&self) -> f64 {
        match *self {
            DelayFn::Constant { value } => value,
            DelayFn::Sinusoid { offset, amplitude, .. } => offset + amplitude.abs(),
        }
    }

    /// Supremum of the derivative.
    pub fn max_rate(&self) -> f64 {
        match *self {
            DelayFn::Constant { .. } => 0.0,
            DelayFn::Sinusoid { amplitude, omega, .. } => (amplitude * omega).abs(),
        }
    }

    fn check(&self, name: &'static str, bar: f64, mu: f64) -> Result<(), SimError> {
        let err = |message: String| Err(SimError::DelayOutOfRange { name, message });
        if !(self.min_value().is_finite() && self.max_value().is_finite() && self.max_rate().is_finite()) {
            return err("parameters must be finite".into());
        }
        if self.min_value() < 0.0 {
            return err(format!("takes negative values down to {}", self.min_value()));
        }
        if self.max_value() > bar {
            return err(format!("reaches {} above the bound {bar}", self.max_value()));
        }
        if self.max_rate() > mu {
            return err(format!("rate {} exceeds the bound {mu}", self.max_rate()));
        }
        Ok(())
    }
}

/// Spatial profile of one species, constant over the initial history.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Profile {
    Zero,
    /// `amplitude * cos(pi x / (2 L))` for every gene.
    Cosine { amplitude: f64 },
    /// Random combination of the first `modes` Dirichlet sine modes with
    /// coefficients decaying like `1/k^2`.
    RandomModes { seed: u64, modes: usize, amplitude: f64 },
}

impl Profile {
    /// `n x nx` interior samples.
    pub fn sample(&self, n: usize, grid: &Grid1D) -> DMatrix<f64> {
        let x = grid.interior();
        let l = grid.half_width();
        match *self {
            Profile::Zero => DMatrix::zeros(n, x.len()),
            Profile::Cosine { amplitude } => DMatrix::from_fn(n, x.len(), |_, j| {
                amplitude * (std::f64::consts::PI * x[j] / (2.0 * l)).cos()
            }),
            Profile::RandomModes { seed, modes, amplitude } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let mut out = DMatrix::zeros(n, x.len());
                for i in 0..n {
                    for k in 1..=modes {
                        let c: f64 = rng.gen_range(-1.0..1.0) * amplitude / (k * k) as f64;
                        let w = k as f64 * std::f64::consts::PI / (2.0 * l);
                        for (j, xj) in x.iter().enumerate() {
                            out[(i, j)] += c * (w * (xj + l)).sin();
                        }
                    }
                }
                out
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialCondition {
    pub mrna: Profile,
    pub protein: Profile,
}

impl InitialCondition {
    pub fn zero() -> Self {
        Self { mrna: Profile::Zero, protein: Profile::Zero }
    }

    pub fn cosine(alpha: f64, beta: f64) -> Self {
        Self {
            mrna: Profile::Cosine { amplitude: alpha },
            protein: Profile::Cosine { amplitude: beta },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimConfig {
    pub dt: f64,
    pub horizon: f64,
    /// Interior node count.
    pub nx: usize,
    pub tau: DelayFn,
    pub sigma: DelayFn,
    /// Equilibrium protein level `p*` used to shift the Hill function.
    pub operating_point: f64,
    pub plant: InitialCondition,
    pub observer: InitialCondition,
    /// Spacing of stored snapshots. Norms are kept for every step.
    pub record_interval: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            dt: 1e-4,
            horizon: 50.0,
            nx: 100,
            tau: DelayFn::Constant { value: 1.0 },
            sigma: DelayFn::Constant { value: 1.0 },
            operating_point: 1.0,
            plant: InitialCondition::cosine(1.0, 1.0),
            observer: InitialCondition::zero(),
            record_interval: 0.1,
        }
    }
}

impl SimConfig {
    /// Largest stable step `0.9 h^2 / (2 max D)`; infinite without diffusion.
    pub fn stability_limit(problem: &ObserverProblem, grid: &Grid1D) -> f64 {
        let model = &problem.model;
        let max_d = model
            .diffusion_mrna
            .iter()
            .chain(model.diffusion_protein.iter())
            .flat_map(|d| d.iter().copied())
            .fold(0.0_f64, f64::max);
        if max_d > 0.0 {
            0.9 * grid.h() * grid.h() / (2.0 * max_d)
        } else {
            f64::INFINITY
        }
    }

    fn check(&self, problem: &ObserverProblem, grid: &Grid1D) -> Result<(), SimError> {
        let bad = |m: &str| Err(SimError::Config(m.into()));
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return bad("dt must be positive");
        }
        if !(self.horizon.is_finite() && self.horizon >= 0.0) {
            return bad("horizon must be nonnegative");
        }
        if !(self.record_interval.is_finite() && self.record_interval >= self.dt) {
            return bad("record_interval must be at least dt");
        }
        if !(self.operating_point.is_finite() && self.operating_point >= 0.0) {
            return bad("operating_point must be nonnegative");
        }
        let limit = Self::stability_limit(problem, grid);
        if self.dt > limit {
            return Err(SimError::StabilityBound { dt: self.dt, limit });
        }
        let d = &problem.delays;
        self.tau.check("tau", d.tau_bar, d.mu1)?;
        self.sigma.check("sigma", d.sigma_bar, d.mu2)?;
        Ok(())
    }
}

/// Ring of past states sampled every `dt`, with linear interpolation.
#[derive(Debug, Clone)]
pub struct HistoryBuffer {
    dt: f64,
    size: usize,
    capacity: usize,
    data: Vec<f64>,
    /// Slot holding the oldest sample.
    head: usize,
    newest_step: i64,
}

impl HistoryBuffer {
    /// Covers `[t0 - length, t0]`, prefilled with `initial`.
    pub fn new(dt: f64, length: f64, initial: &[f64]) -> Self {
        let capacity = (length / dt - 1e-9).ceil().max(0.0) as usize + 1;
        let size = initial.len();
        let mut data = Vec::with_capacity(capacity * size);
        for _ in 0..capacity {
            data.extend_from_slice(initial);
        }
        Self { dt, size, capacity, data, head: 0, newest_step: 0 }
    }

    pub fn newest_time(&self) -> f64 {
        self.newest_step as f64 * self.dt
    }

    pub fn oldest_time(&self) -> f64 {
        (self.newest_step - self.capacity as i64 + 1) as f64 * self.dt
    }

    fn slot(&self, k: usize) -> &[f64] {
        let idx = (self.head + k) % self.capacity;
        &self.data[idx * self.size..(idx + 1) * self.size]
    }

    /// Appends the sample for the next step, dropping the oldest.
    pub fn push(&mut self, state: &[f64]) {
        let idx = self.head;
        self.data[idx * self.size..(idx + 1) * self.size].copy_from_slice(state);
        self.head = (self.head + 1) % self.capacity;
        self.newest_step += 1;
    }

    /// State at time `t`. Times after the newest sample read the newest
    /// sample; times before the oldest are an error.
    pub fn lookup(&self, t: f64, out: &mut [f64]) -> Result<(), SimError> {
        let oldest = self.oldest_time();
        let newest = self.newest_time();
        let tol = 1e-6 * self.dt;
        if t < oldest - tol || !t.is_finite() {
            return Err(SimError::HistoryRange { t, oldest, newest });
        }
        let pos = ((t.min(newest) - oldest) / self.dt).max(0.0);
        let k = (pos.floor() as usize).min(self.capacity - 1);
        let w = pos - k as f64;
        let a = self.slot(k);
        if k + 1 >= self.capacity || w <= 0.0 {
            out.copy_from_slice(a);
        } else {
            let b = self.slot(k + 1);
            for ((o, x), y) in out.iter_mut().zip(a).zip(b) {
                *o = x + w * (y - x);
            }
        }
        Ok(())
    }
}

/// Fields on the full grid, boundary columns included; each is `n x (nx + 2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    pub m_bar: DMatrix<f64>,
    pub p_bar: DMatrix<f64>,
    pub m_hat: DMatrix<f64>,
    pub p_hat: DMatrix<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormSample {
    pub t: f64,
    pub err_m: f64,
    pub err_p: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub grid: Grid1D,
    pub snapshots: Vec<Snapshot>,
    /// Spatial L2 error norms at every time step.
    pub norms: Vec<NormSample>,
}

impl Trajectory {
    /// Final-to-initial ratios of the mRNA and protein error norms.
    pub fn decay_ratios(&self) -> (f64, f64) {
        let (first, last) = (self.norms[0], self.norms[self.norms.len() - 1]);
        (last.err_m / first.err_m, last.err_p / first.err_p)
    }
}

/// Trapezoidal L2 norm over `[-L, L]` of a field sampled on all nodes,
/// summed over genes.
pub fn spatial_l2_norm(field: &DMatrix<f64>, grid: &Grid1D) -> f64 {
    let h = grid.h();
    let last = field.ncols() - 1;
    let mut acc = 0.0;
    for i in 0..field.nrows() {
        for j in 0..=last {
            let w = if j == 0 || j == last { 0.5 } else { 1.0 };
            acc += w * field[(i, j)] * field[(i, j)];
        }
    }
    (h * acc).sqrt()
}

/// Error norms recomputed from the stored snapshots.
pub fn error_norms(trajectory: &Trajectory) -> Vec<NormSample> {
    trajectory
        .snapshots
        .iter()
        .map(|s| NormSample {
            t: s.t,
            err_m: spatial_l2_norm(&(&s.m_bar - &s.m_hat), &trajectory.grid),
            err_p: spatial_l2_norm(&(&s.p_bar - &s.p_hat), &trajectory.grid),
        })
        .collect()
}

#[derive(Clone, Copy, PartialEq)]
enum Mode {
    /// Second pair of fields is the observer estimate.
    Observer,
    /// Second pair of fields is the estimation error.
    Error,
}

struct Dynamics {
    n: usize,
    nx: usize,
    inv_h2: f64,
    a: Vec<f64>,
    b: Vec<f64>,
    c: Vec<f64>,
    d_m: Vec<f64>,
    d_p: Vec<f64>,
    w: DMatrix<f64>,
    k1m: DMatrix<f64>,
    k2n: DMatrix<f64>,
    hill: u32,
    operating_point: f64,
    g_star: f64,
    mode: Mode,
    f_a: Vec<f64>,
    f_b: Vec<f64>,
}

impl Dynamics {
    fn f(&self, y: f64) -> f64 {
        hill((self.operating_point + y).max(0.0), self.hill) - self.g_star
    }

    fn laplacian(&self, u: &[f64], gene: usize, j: usize) -> f64 {
        let row = gene * self.nx;
        let left = if j == 0 { 0.0 } else { u[row + j - 1] };
        let right = if j + 1 == self.nx { 0.0 } else { u[row + j + 1] };
        (left - 2.0 * u[row + j] + right) * self.inv_h2
    }

    /// `out = F(state, delayed_tau, delayed_sigma)`.
    fn rhs(&mut self, s: &[f64], tau: &[f64], sigma: &[f64], out: &mut [f64]) {
        let (n, nx) = (self.n, self.nx);
        let len = n * nx;
        let (ma, pa, mb, pb) = (0, len, 2 * len, 3 * len);
        for idx in 0..len {
            let fa = self.f(sigma[pa + idx]);
            self.f_a[idx] = fa;
            self.f_b[idx] = match self.mode {
                Mode::Observer => self.f(sigma[pb + idx]),
                Mode::Error => fa - self.f(sigma[pa + idx] - sigma[pb + idx]),
            };
        }
        for (first, m, p) in [(true, ma, pa), (false, mb, pb)] {
            let (m_s, p_s) = (&s[m..m + len], &s[p..p + len]);
            let m_tau = &tau[m..m + len];
            let fv = if first { &self.f_a } else { &self.f_b };
            for i in 0..n {
                for j in 0..nx {
                    let idx = i * nx + j;
                    let mut dm = self.d_m[i] * self.laplacian(m_s, i, j) - self.a[i] * m_s[idx];
                    let mut dp = self.d_p[i] * self.laplacian(p_s, i, j) - self.c[i] * p_s[idx]
                        + self.b[i] * m_tau[idx];
                    for k in 0..n {
                        dm += self.w[(i, k)] * fv[k * nx + j];
                    }
                    if !first {
                        // Output injection acts on plant minus estimate.
                        for k in 0..n {
                            let at = k * nx + j;
                            let (em, ep) = match self.mode {
                                Mode::Observer => (s[ma + at] - m_s[at], s[pa + at] - p_s[at]),
                                Mode::Error => (-m_s[at], -p_s[at]),
                            };
                            dm += self.k1m[(i, k)] * em;
                            dp += self.k2n[(i, k)] * ep;
                        }
                    }
                    out[m + idx] = dm;
                    out[p + idx] = dp;
                }
            }
        }
    }
}

fn check_shapes(problem: &ObserverProblem, k1: &DMatrix<f64>, k2: &DMatrix<f64>) -> Result<(), SimError> {
    let model = &problem.model;
    let n = model.n();
    if model.l() != 1 || model.diffusion_mrna.len() != 1 || model.diffusion_protein.len() != 1 {
        return Err(SimError::Dimension(format!(
            "simulation needs one spatial axis, model has {}",
            model.l()
        )));
    }
    let lens = [
        model.translation.len(),
        model.degradation_protein.len(),
        model.diffusion_mrna[0].len(),
        model.diffusion_protein[0].len(),
    ];
    if lens.iter().any(|&l| l != n) || model.coupling.shape() != (n, n) {
        return Err(SimError::Dimension(format!("model data is inconsistent with n = {n}")));
    }
    let (r_m, r_p) = (problem.meas.r_m(), problem.meas.r_p());
    if problem.meas.mrna.ncols() != n || problem.meas.protein.ncols() != n {
        return Err(SimError::Dimension("measurement matrices need n columns".into()));
    }
    if k1.shape() != (n, r_m) || k2.shape() != (n, r_p) {
        return Err(SimError::Dimension(format!(
            "gains are {:?} and {:?}, expected {:?} and {:?}",
            k1.shape(),
            k2.shape(),
            (n, r_m),
            (n, r_p)
        )));
    }
    Ok(())
}

fn to_full(values: &[f64], n: usize, nx: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, nx + 2, |i, j| if j == 0 || j == nx + 1 { 0.0 } else { values[i * nx + j - 1] })
}

fn run(
    problem: &ObserverProblem,
    k1: &DMatrix<f64>,
    k2: &DMatrix<f64>,
    config: &SimConfig,
    mode: Mode,
) -> Result<Trajectory, SimError> {
    check_shapes(problem, k1, k2)?;
    let model = &problem.model;
    let grid = Grid1D::new(model.half_widths[0], config.nx)?;
    config.check(problem, &grid)?;
    let (n, nx) = (model.n(), grid.nx());
    let h = grid.h();
    let mut dyn_ = Dynamics {
        n,
        nx,
        inv_h2: 1.0 / (h * h),
        a: model.degradation_mrna.iter().copied().collect(),
        b: model.translation.iter().copied().collect(),
        c: model.degradation_protein.iter().copied().collect(),
        d_m: model.diffusion_mrna[0].iter().copied().collect(),
        d_p: model.diffusion_protein[0].iter().copied().collect(),
        w: model.coupling.clone(),
        k1m: k1 * &problem.meas.mrna,
        k2n: k2 * &problem.meas.protein,
        hill: model.hill,
        operating_point: config.operating_point,
        g_star: hill(config.operating_point, model.hill),
        mode,
        f_a: vec![0.0; n * nx],
        f_b: vec![0.0; n * nx],
    };

    let len = n * nx;
    let mut state = vec![0.0; 4 * len];
    let samples = [
        config.plant.mrna.sample(n, &grid),
        config.plant.protein.sample(n, &grid),
        config.observer.mrna.sample(n, &grid),
        config.observer.protein.sample(n, &grid),
    ];
    for (k, s) in samples.iter().enumerate() {
        for i in 0..n {
            for j in 0..nx {
                state[k * len + i * nx + j] = s[(i, j)];
            }
        }
    }
    if mode == Mode::Error {
        for idx in 0..2 * len {
            state[2 * len + idx] = state[idx] - state[2 * len + idx];
        }
    }

    let history_length = config.tau.max_value().max(config.sigma.max_value());
    let mut history = HistoryBuffer::new(config.dt, history_length, &state);

    let snapshot = |t: f64, s: &[f64]| {
        let f = |k: usize| to_full(&s[k * len..(k + 1) * len], n, nx);
        let (m_bar, p_bar) = (f(0), f(1));
        let (m_hat, p_hat) = match mode {
            Mode::Observer => (f(2), f(3)),
            Mode::Error => (&m_bar - f(2), &p_bar - f(3)),
        };
        Snapshot { t, m_bar, p_bar, m_hat, p_hat }
    };
    let norm_sample = |t: f64, s: &[f64]| {
        let err = |k: usize| -> f64 {
            let mut acc = 0.0;
            for idx in 0..len {
                let e = match mode {
                    Mode::Observer => s[k * len + idx] - s[(k + 2) * len + idx],
                    Mode::Error => s[(k + 2) * len + idx],
                };
                acc += e * e;
            }
            (h * acc).sqrt()
        };
        NormSample { t, err_m: err(0), err_p: err(1) }
    };

    let steps = (config.horizon / config.dt).round() as usize;
    let record_every = ((config.record_interval / config.dt).round() as usize).max(1);
    let mut snapshots = vec![snapshot(0.0, &state)];
    let mut norms = Vec::with_capacity(steps + 1);
    norms.push(norm_sample(0.0, &state));

    let dt = config.dt;
    let mut ks: [Vec<f64>; 4] = std::array::from_fn(|_| vec![0.0; 4 * len]);
    let mut stage = vec![0.0; 4 * len];
    let mut d_tau = vec![0.0; 4 * len];
    let mut d_sigma = vec![0.0; 4 * len];
    for step in 0..steps {
        let t = step as f64 * dt;
        for (q, (offset, weight)) in [(0.0, 0.0), (0.5, 0.5), (0.5, 0.5), (1.0, 1.0)].into_iter().enumerate() {
            let ts = t + offset * dt;
            if q == 0 {
                stage.copy_from_slice(&state);
            } else {
                let prev = &ks[q - 1];
                for ((s, x), k) in stage.iter_mut().zip(&state).zip(prev) {
                    *s = x + weight * dt * k;
                }
            }
            history.lookup(ts - config.tau.eval(ts), &mut d_tau)?;
            history.lookup(ts - config.sigma.eval(ts), &mut d_sigma)?;
            dyn_.rhs(&stage, &d_tau, &d_sigma, &mut ks[q]);
        }
        for idx in 0..state.len() {
            state[idx] += dt / 6.0 * (ks[0][idx] + 2.0 * ks[1][idx] + 2.0 * ks[2][idx] + ks[3][idx]);
        }
        history.push(&state);
        let t_next = (step + 1) as f64 * dt;
        norms.push(norm_sample(t_next, &state));
        if (step + 1) % record_every == 0 || step + 1 == steps {
            snapshots.push(snapshot(t_next, &state));
        }
    }
    Ok(Trajectory { grid, snapshots, norms })
}

/// Integrates the plant and the observer side by side.
pub fn simulate(
    problem: &ObserverProblem,
    k1: &DMatrix<f64>,
    k2: &DMatrix<f64>,
    config: &SimConfig,
) -> Result<Trajectory, SimError> {
    run(problem, k1, k2, config, Mode::Observer)
}

/// Integrates the error system directly. The plant is carried along since
/// the nonlinearity difference depends on it; estimates in the returned
/// trajectory are reconstructed as plant minus error.
pub fn simulate_error_system(
    problem: &ObserverProblem,
    k1: &DMatrix<f64>,
    k2: &DMatrix<f64>,
    config: &SimConfig,
) -> Result<Trajectory, SimError> {
    run(problem, k1, k2, config, Mode::Error)
}
