//! Plant data for a delayed reaction-diffusion genetic regulatory network.
//!
//! Everything here lives in the equilibrium-shifted coordinates, so the
//! basal transcription rates are carried for completeness only and never
//! enter the dynamics.

use std::fmt;

use nalgebra::{DMatrix, DVector};

/// Largest Hill coefficient accepted by [`compute_sector_bound`].
pub const MAX_HILL: u32 = 12;

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("Hill coefficient must be in 1..={max}, got {got}")]
    HillOutOfRange { got: u32, max: u32 },
}

/// mRNA/protein network data.
///
/// Rate matrices `A`, `B`, `C` and the diffusion matrices are diagonal and
/// stored as their diagonals. `diffusion_mrna[k]` holds `D_k`, one entry
/// per gene, for spatial axis `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct GrnModel {
    /// mRNA degradation rates (diagonal of `A`).
    pub degradation_mrna: DVector<f64>,
    /// Translation rates (diagonal of `B`).
    pub translation: DVector<f64>,
    /// Protein degradation rates (diagonal of `C`).
    pub degradation_protein: DVector<f64>,
    /// Signed coupling matrix `W`.
    pub coupling: DMatrix<f64>,
    pub diffusion_mrna: Vec<DVector<f64>>,
    pub diffusion_protein: Vec<DVector<f64>>,
    /// Domain half-widths `L_k`; the domain is `|x_k| <= L_k`.
    pub half_widths: Vec<f64>,
    pub hill: u32,
    /// Basal rates `q`. Informational.
    pub basal: DVector<f64>,
}

impl GrnModel {
    /// Gene count.
    pub fn n(&self) -> usize {
        self.degradation_mrna.len()
    }

    /// Spatial dimension.
    pub fn l(&self) -> usize {
        self.half_widths.len()
    }

    pub fn a(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&self.degradation_mrna)
    }

    pub fn b(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&self.translation)
    }

    pub fn c(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&self.degradation_protein)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DelayBounds {
    pub tau_bar: f64,
    pub sigma_bar: f64,
    pub mu1: f64,
    pub mu2: f64,
}

impl DelayBounds {
    /// History length `max(tau_bar, sigma_bar)`.
    pub fn history_length(&self) -> f64 {
        self.tau_bar.max(self.sigma_bar)
    }
}

/// Output maps `z_m = M m`, `z_p = N p`.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementModel {
    pub mrna: DMatrix<f64>,
    pub protein: DMatrix<f64>,
}

impl MeasurementModel {
    pub fn r_m(&self) -> usize {
        self.mrna.nrows()
    }

    pub fn r_p(&self) -> usize {
        self.protein.nrows()
    }
}

/// Diagonal sector matrix `K = diag(xi_1, ..., xi_n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SectorBound {
    pub slopes: DVector<f64>,
}

impl SectorBound {
    pub fn uniform(n: usize, slope: f64) -> Self {
        Self {
            slopes: DVector::from_element(n, slope),
        }
    }

    pub fn from_hill(n: usize, hill: u32) -> Result<Self, ModelError> {
        Ok(Self::uniform(n, compute_sector_bound(hill)?))
    }

    pub fn matrix(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&self.slopes)
    }
}

/// One failed check: the offending field and what is wrong with it.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub field: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_pass(&self) -> bool {
        self.violations.is_empty()
    }

    fn push(&mut self, field: impl Into<String>, message: impl Into<String>) {
        self.violations.push(Violation {
            field: field.into(),
            message: message.into(),
        });
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_pass() {
            return write!(f, "pass");
        }
        let parts: Vec<String> = self.violations.iter().map(|v| v.to_string()).collect();
        write!(f, "{}", parts.join("; "))
    }
}

fn check_len(report: &mut ValidationReport, field: &str, v: &DVector<f64>, n: usize) -> bool {
    if v.len() != n {
        report.push(
            field,
            format!("dimension mismatch: expected {n} entries, got {}", v.len()),
        );
        return false;
    }
    true
}

fn check_positive(report: &mut ValidationReport, field: &str, v: &DVector<f64>, what: &str) {
    if let Some(i) = v.iter().position(|x| !(x.is_finite() && *x > 0.0)) {
        report.push(
            format!("{field}[{i}]"),
            format!("{what} must be positive, got {}", v[i]),
        );
    }
}

/// Checks shapes and sign requirements of the plant, the output maps and
/// the delay bounds. Never fails; every problem found is listed.
pub fn validate_model(
    model: &GrnModel,
    meas: &MeasurementModel,
    delays: &DelayBounds,
) -> ValidationReport {
    let mut report = ValidationReport::default();
    let n = model.n();
    if n == 0 {
        report.push("degradation_mrna", "dimension mismatch: gene count must be at least 1");
    }

    check_positive(&mut report, "degradation_mrna", &model.degradation_mrna, "degradation rate");
    if check_len(&mut report, "translation", &model.translation, n) {
        check_positive(&mut report, "translation", &model.translation, "translation rate");
    }
    if check_len(&mut report, "degradation_protein", &model.degradation_protein, n) {
        check_positive(
            &mut report,
            "degradation_protein",
            &model.degradation_protein,
            "degradation rate",
        );
    }
    check_len(&mut report, "basal", &model.basal, n);

    if model.coupling.shape() != (n, n) {
        report.push(
            "coupling",
            format!(
                "dimension mismatch: expected {n}x{n}, got {}x{}",
                model.coupling.nrows(),
                model.coupling.ncols()
            ),
        );
    } else if model.coupling.iter().any(|x| !x.is_finite()) {
        report.push("coupling", "entries must be finite");
    }

    let l = model.l();
    if l == 0 {
        report.push("half_widths", "dimension mismatch: spatial dimension must be at least 1");
    }
    for (k, width) in model.half_widths.iter().enumerate() {
        if !(width.is_finite() && *width > 0.0) {
            report.push(format!("half_widths[{k}]"), format!("half-width must be positive, got {width}"));
        }
    }
    for (field, diffusion) in [
        ("diffusion_mrna", &model.diffusion_mrna),
        ("diffusion_protein", &model.diffusion_protein),
    ] {
        if diffusion.len() != l {
            report.push(
                field,
                format!("dimension mismatch: expected {l} spatial axes, got {}", diffusion.len()),
            );
            continue;
        }
        for (k, d) in diffusion.iter().enumerate() {
            let name = format!("{field}[{k}]");
            if check_len(&mut report, &name, d, n) {
                check_positive(&mut report, &name, d, "diffusion rate");
            }
        }
    }

    if model.hill == 0 || model.hill > MAX_HILL {
        report.push("hill", format!("Hill coefficient must be in 1..={MAX_HILL}, got {}", model.hill));
    }

    for (field, m) in [("measurement.mrna", &meas.mrna), ("measurement.protein", &meas.protein)] {
        if m.ncols() != n {
            report.push(
                field,
                format!("dimension mismatch: expected {n} columns, got {}", m.ncols()),
            );
        }
        if m.nrows() == 0 {
            report.push(field, "dimension mismatch: at least one output row required");
        }
        if m.iter().any(|x| !x.is_finite()) {
            report.push(field, "entries must be finite");
        }
    }

    for (field, value) in [
        ("delays.tau_bar", delays.tau_bar),
        ("delays.sigma_bar", delays.sigma_bar),
    ] {
        if !(value.is_finite() && value >= 0.0) {
            report.push(field, format!("delay bound must be non-negative, got {value}"));
        }
    }
    for (field, value) in [("delays.mu1", delays.mu1), ("delays.mu2", delays.mu2)] {
        if !value.is_finite() {
            report.push(field, "delay-rate bound must be finite");
        }
    }

    report
}

/// Diagonals of `D_L` and `D*_L`: `sum_k D_ik / L_k^2`.
pub fn compute_diffusion_bound(model: &GrnModel) -> (DVector<f64>, DVector<f64>) {
    let sum = |diffusion: &[DVector<f64>]| {
        diffusion
            .iter()
            .zip(&model.half_widths)
            .fold(DVector::zeros(model.n()), |acc, (d, width)| {
                acc + d / (width * width)
            })
    };
    (sum(&model.diffusion_mrna), sum(&model.diffusion_protein))
}

/// Hill activation `s^H / (1 + s^H)` on `s >= 0`.
pub fn hill(s: f64, h: u32) -> f64 {
    let sh = s.powi(h as i32);
    sh / (1.0 + sh)
}

pub fn hill_derivative(s: f64, h: u32) -> f64 {
    if s <= 0.0 {
        return if h == 1 { 1.0 } else { 0.0 };
    }
    let sh = s.powi(h as i32);
    h as f64 * s.powi(h as i32 - 1) / ((1.0 + sh) * (1.0 + sh))
}

const GOLDEN: f64 = 0.618_033_988_749_894_8;

fn golden_max(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let mut x1 = hi - GOLDEN * (hi - lo);
    let mut x2 = lo + GOLDEN * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while hi - lo > tol {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + GOLDEN * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - GOLDEN * (hi - lo);
            f1 = f(x1);
        }
    }
    0.5 * (lo + hi)
}

/// Global supremum of the Hill slope over `s >= 0`.
///
/// A coarse grid on `[0, 4]` brackets the maximiser (it always lies in
/// `[0, 1]`), then golden-section search refines it.
pub fn compute_sector_bound(h: u32) -> Result<f64, ModelError> {
    if h == 0 || h > MAX_HILL {
        return Err(ModelError::HillOutOfRange { got: h, max: MAX_HILL });
    }
    const GRID: usize = 400;
    const SPAN: f64 = 4.0;
    let step = SPAN / GRID as f64;
    let best = (0..=GRID)
        .map(|i| i as f64 * step)
        .map(|s| (s, hill_derivative(s, h)))
        .fold((0.0, f64::NEG_INFINITY), |acc, cur| if cur.1 > acc.1 { cur } else { acc });
    let lo = (best.0 - step).max(0.0);
    let hi = best.0 + step;
    let s = golden_max(|s| hill_derivative(s, h), lo, hi, 1e-12);
    Ok(hill_derivative(s, h).max(best.1))
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub(crate) fn example1() -> (GrnModel, MeasurementModel, DelayBounds) {
        let d = DVector::from_element(3, 0.1);
        let ds = DVector::from_element(3, 0.2);
        let model = GrnModel {
            degradation_mrna: DVector::from_vec(vec![0.2, 1.1, 1.2]),
            translation: DVector::from_vec(vec![1.0, 0.4, 0.7]),
            degradation_protein: DVector::from_vec(vec![0.3, 0.7, 1.3]),
            coupling: DMatrix::from_row_slice(3, 3, &[0.0, 0.0, -0.5, -0.5, 0.0, 0.0, 0.0, -0.5, 0.0]),
            diffusion_mrna: vec![d.clone(), d.clone(), d],
            diffusion_protein: vec![ds.clone(), ds.clone(), ds],
            half_widths: vec![1.0; 3],
            hill: 2,
            basal: DVector::zeros(3),
        };
        let meas = MeasurementModel {
            mrna: DMatrix::from_row_slice(2, 3, &[0.5, -0.6, 0.0, 0.3, 0.8, -0.2]),
            protein: DMatrix::from_row_slice(2, 3, &[0.7, -0.25, 0.3, 0.4, 0.2, -0.3]),
        };
        let delays = DelayBounds { tau_bar: 3.0, sigma_bar: 3.0, mu1: 2.0, mu2: 2.0 };
        (model, meas, delays)
    }

    #[test]
    fn example1_validates() {
        let (model, meas, delays) = example1();
        let report = validate_model(&model, &meas, &delays);
        assert!(report.is_pass(), "{report}");
        assert_eq!(report, validate_model(&model, &meas, &delays));
    }

    #[test]
    fn zero_degradation_is_flagged() {
        let (mut model, meas, delays) = example1();
        model.degradation_mrna[1] = 0.0;
        let report = validate_model(&model, &meas, &delays);
        assert!(!report.is_pass());
        assert!(report.to_string().contains("degradation rate must be positive"), "{report}");
    }

    #[test]
    fn measurement_column_mismatch_is_flagged() {
        let (model, mut meas, delays) = example1();
        meas.mrna = DMatrix::zeros(2, 4);
        let report = validate_model(&model, &meas, &delays);
        assert!(report.to_string().contains("dimension mismatch"), "{report}");
        assert_eq!(report.violations[0].field, "measurement.mrna");
    }

    #[test]
    fn negative_delay_bound_is_flagged() {
        let (model, meas, mut delays) = example1();
        delays.sigma_bar = -1.0;
        let report = validate_model(&model, &meas, &delays);
        assert_eq!(report.violations.len(), 1);
        assert_eq!(report.violations[0].field, "delays.sigma_bar");
    }

    #[test]
    fn diffusion_bound_example1() {
        let (model, _, _) = example1();
        let (dl, dls) = compute_diffusion_bound(&model);
        for i in 0..3 {
            assert!((dl[i] - 0.3).abs() < 1e-15);
            assert!((dls[i] - 0.6).abs() < 1e-15);
        }
    }

    #[test]
    fn diffusion_bound_single_axis_and_wide_domain() {
        let (mut model, _, _) = example1();
        model.diffusion_mrna.truncate(1);
        model.diffusion_protein.truncate(1);
        model.half_widths = vec![1.0];
        assert!((compute_diffusion_bound(&model).0[0] - 0.1).abs() < 1e-15);
        model.half_widths = vec![1e8];
        assert!(compute_diffusion_bound(&model).0[0] < 1e-16);
    }

    #[test]
    fn sector_bound_values() {
        let h2 = compute_sector_bound(2).unwrap();
        assert!((h2 - 9.0 / (8.0 * 3f64.sqrt())).abs() < 1e-12, "{h2}");
        assert!((h2 - 0.65).abs() < 1e-3);
        assert!((compute_sector_bound(1).unwrap() - 1.0).abs() < 1e-15);
        assert!(matches!(compute_sector_bound(0), Err(ModelError::HillOutOfRange { .. })));
        assert!(compute_sector_bound(13).is_err());
    }

    #[test]
    fn sector_bound_dominates_sampled_slopes() {
        for h in 1..=6 {
            let xi = compute_sector_bound(h).unwrap();
            for i in 0..10_000 {
                let s = 100.0 * i as f64 / 9_999.0;
                assert!(xi >= hill_derivative(s, h) - 1e-9, "h={h} s={s}");
            }
        }
    }

    proptest::proptest! {
        #[test]
        fn diffusion_bound_is_linear(scale in 0.01f64..10.0, gene in 0usize..3, axis in 0usize..3) {
            let (model, _, _) = example1();
            let mut scaled = model.clone();
            let base = compute_diffusion_bound(&model).0;
            scaled.diffusion_mrna[axis][gene] *= scale;
            let out = compute_diffusion_bound(&scaled).0;
            let expected = base[gene] + (scale - 1.0) * model.diffusion_mrna[axis][gene]
                / model.half_widths[axis].powi(2);
            proptest::prop_assert!((out[gene] - expected).abs() < 1e-12);
            proptest::prop_assert!(out.iter().all(|v| *v > 0.0));
        }
    }
}
