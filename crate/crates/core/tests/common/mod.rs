//! Shared fixtures for the integration tests: the shipped example problems,
//! seeded random decision values, and a dense scalar transcription of the
//! observer conditions used as an assembly oracle.

#![allow(dead_code)]

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::PathBuf;

use grnobs::config::{parse_config, RunConfig};
use grnobs::lmi::{Assignment, DecisionLayout, ObserverProblem, SlotId, SlotKind};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn config_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("examples/configs").join(name)
}

pub fn load_config(name: &str) -> RunConfig {
    let text = std::fs::read_to_string(config_path(name)).expect("shipped config is readable");
    parse_config(&text).expect("shipped config parses")
}

pub fn example1() -> ObserverProblem {
    load_config("example1.json").problem
}

pub fn example2() -> ObserverProblem {
    load_config("example2.json").problem
}

/// Uniform draws in `[-1, 1]` for every slot, symmetrized where the slot is
/// symmetric and zeroed off the diagonal where it is diagonal.
pub fn random_slots(layout: &DecisionLayout, rng: &mut ChaCha8Rng) -> BTreeMap<SlotId, DMatrix<f64>> {
    let mut out = BTreeMap::new();
    for spec in layout.slots() {
        let (r, c) = spec.kind.shape();
        let raw = DMatrix::from_fn(r, c, |_, _| rng.gen_range(-1.0..1.0));
        let m = match spec.kind {
            SlotKind::Symmetric(_) => (&raw + raw.transpose()) * 0.5,
            SlotKind::Diagonal(_) => DMatrix::from_diagonal(&raw.diagonal()),
            SlotKind::Full { .. } => raw,
        };
        out.insert(spec.id, m);
    }
    out
}

pub fn random_assignment(layout: &DecisionLayout, rng: &mut ChaCha8Rng) -> (BTreeMap<SlotId, DMatrix<f64>>, Assignment) {
    let slots = random_slots(layout, rng);
    let x = layout.pack_map(&slots).expect("slots match layout");
    (slots, x)
}

/// A random single-gene, single-axis problem with admissible data.
pub fn random_scalar_problem(rng: &mut ChaCha8Rng) -> ObserverProblem {
    use grnobs::model::{DelayBounds, GrnModel, MeasurementModel, SectorBound};
    let one = |v: f64| DVector::from_element(1, v);
    let model = GrnModel {
        degradation_mrna: one(rng.gen_range(0.1..2.0)),
        translation: one(rng.gen_range(0.1..2.0)),
        degradation_protein: one(rng.gen_range(0.1..2.0)),
        coupling: DMatrix::from_element(1, 1, rng.gen_range(-1.0..1.0)),
        diffusion_mrna: vec![one(rng.gen_range(0.01..1.0))],
        diffusion_protein: vec![one(rng.gen_range(0.01..1.0))],
        half_widths: vec![rng.gen_range(0.5..2.0)],
        hill: 2,
        basal: one(0.0),
    };
    let meas = MeasurementModel {
        mrna: DMatrix::from_element(1, 1, rng.gen_range(-1.0..1.0)),
        protein: DMatrix::from_element(1, 1, rng.gen_range(-1.0..1.0)),
    };
    let delays = DelayBounds {
        tau_bar: rng.gen_range(0.2..3.0),
        sigma_bar: rng.gen_range(0.2..3.0),
        mu1: rng.gen_range(0.0..2.5),
        mu2: rng.gen_range(0.0..2.5),
    };
    let sector = SectorBound::uniform(1, rng.gen_range(0.1..1.0));
    ObserverProblem::new(model, meas, delays, sector)
}

fn scalar(slots: &BTreeMap<SlotId, DMatrix<f64>>, id: SlotId) -> f64 {
    slots[&id][(0, 0)]
}

/// Column selector `e_i` of the 14-block vector, `e_0 = 0`.
fn e(i: usize) -> DMatrix<f64> {
    let mut v = DMatrix::zeros(14, 1);
    if i > 0 {
        v[(i - 1, 0)] = 1.0;
    }
    v
}

fn pair(a: DMatrix<f64>, b: DMatrix<f64>) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(14, 2);
    out.set_column(0, &a.column(0));
    out.set_column(1, &b.column(0));
    out
}

/// `u X v^T + v X^T u^T`.
fn sym(u: &DMatrix<f64>, x: &DMatrix<f64>, v: &DMatrix<f64>) -> DMatrix<f64> {
    u * x * v.transpose() + v * x.transpose() * u.transpose()
}

fn quad(u: &DMatrix<f64>, x: &DMatrix<f64>) -> DMatrix<f64> {
    u * x * u.transpose()
}

fn s(v: f64) -> DMatrix<f64> {
    DMatrix::from_element(1, 1, v)
}

/// Dense `Phi(tau, sigma)` for `n = 1`, written term by term from the
/// theorem with the gains eliminated through `W1`, `W2`.
pub fn dense_phi_scalar(
    problem: &ObserverProblem,
    slots: &BTreeMap<SlotId, DMatrix<f64>>,
    tau: f64,
    sigma: f64,
) -> DMatrix<f64> {
    use SlotId::*;
    assert_eq!(problem.model.n(), 1);
    let md = &problem.model;
    let (a, b, c) = (md.degradation_mrna[0], md.translation[0], md.degradation_protein[0]);
    let w = md.coupling[(0, 0)];
    let k = problem.sector.slopes[0];
    let (mm, nn) = (problem.meas.mrna[(0, 0)], problem.meas.protein[(0, 0)]);
    let (tb, sb) = (problem.delays.tau_bar, problem.delays.sigma_bar);
    let (mu1, mu2) = (problem.delays.mu1, problem.delays.mu2);
    let d_l: f64 = (0..md.l()).map(|j| md.diffusion_mrna[j][0] / md.half_widths[j].powi(2)).sum();
    let d_l_star: f64 = (0..md.l()).map(|j| md.diffusion_protein[j][0] / md.half_widths[j].powi(2)).sum();

    let v = |id| scalar(slots, id);
    let (p1, p2, l1, l2) = (v(P1), v(P2), v(Lambda1), v(Lambda2));
    let (w1, w2) = (v(W1), v(W2));
    let (q1, q3, q5) = (v(Q1), v(Q3), v(Q5));
    let (r1, r2, r3, r4) = (v(R1), v(R2), v(R3), v(R4));
    let (m1, m2) = (v(M1), v(M2));
    let q2 = slots[&Q2].clone();
    let q4 = slots[&Q4].clone();
    let x1 = p1 * a + w1 * mm;
    let x2 = p2 * c + w2 * nn;

    let d1 = pair(e(1), e(12) * tb);
    let d2 = pair(e(0), e(11) - e(12));
    let d3 = pair(e(2), e(12) * tb);
    let d4 = pair(e(12) * tb, e(12) * tb * tb);
    let d5 = pair(e(11) - e(12), (e(11) - e(12)) * tb);
    let d6 = pair(e(0), e(1) - e(2));
    let d7 = pair(e(3) - e(2), e(3) + e(2) - e(12) * 2.0);
    let d8 = pair(e(1) - e(3), e(1) + e(3) - e(11) * 2.0);
    let t1 = pair(e(4), e(14) * sb);
    let t2 = pair(e(0), e(13) - e(14));
    let t3 = pair(e(5), e(14) * sb);
    let t4 = pair(e(14) * sb, e(14) * sb * sb);
    let t5 = pair(e(13) - e(14), (e(13) - e(14)) * sb);
    let t6 = pair(e(0), e(4) - e(5));
    let t7 = pair(e(6) - e(5), e(6) + e(5) - e(14) * 2.0);
    let t8 = pair(e(4) - e(6), e(4) + e(6) - e(13) * 2.0);

    let phi0 = quad(&e(7), &s(l1)) * -2.0
        + sym(&e(4), &s(l1 * k), &e(7))
        + quad(&e(8), &s(l2)) * -2.0
        + sym(&e(6), &s(k * l2), &e(8))
        - sym(&e(9), &s(x1), &e(1))
        + sym(&e(9), &s(p1 * w), &e(8))
        + quad(&e(9), &s(p1)) * -2.0
        - sym(&e(10), &s(x2), &e(4))
        + sym(&e(10), &s(p2 * b), &e(3))
        + quad(&e(10), &s(p2)) * -2.0;

    let phi1 = quad(&e(1), &s(p1 * d_l)) * (-0.5 * PI * PI)
        + quad(&e(1), &s(x1)) * -2.0
        + sym(&e(1), &s(p1 * w), &e(8))
        + quad(&e(4), &s(p2 * d_l_star)) * (-0.5 * PI * PI)
        + quad(&e(4), &s(x2)) * -2.0
        + sym(&e(4), &s(p2 * b), &e(3));

    let phi2 = quad(&e(1), &s(q1)) - quad(&e(3), &s(q1)) * (1.0 - mu1) + quad(&e(4), &s(q3))
        - quad(&e(6), &s(q3)) * (1.0 - mu2)
        + quad(&d1, &q2)
        + sym(&d1, &q2, &d2) * tau
        - quad(&d3, &q2)
        - sym(&d3, &q2, &d2) * tau
        + sym(&d4, &q2, &d6)
        + sym(&d5, &q2, &d6) * tau
        + quad(&t1, &q4)
        + sym(&t1, &q4, &t2) * sigma
        - quad(&t3, &q4)
        - sym(&t3, &q4, &t2) * sigma
        + sym(&t4, &q4, &t6)
        + sym(&t5, &q4, &t6) * sigma;

    let phi3 = quad(&e(7), &s(q5)) - quad(&e(8), &s(q5)) * (1.0 - mu2);

    let r_hat = |r: f64, g: &DMatrix<f64>| {
        let mut out = DMatrix::zeros(4, 4);
        out[(0, 0)] = r;
        out[(1, 1)] = 3.0 * r;
        out[(2, 2)] = r;
        out[(3, 3)] = 3.0 * r;
        out.view_mut((0, 2), (2, 2)).copy_from(g);
        out.view_mut((2, 0), (2, 2)).copy_from(&g.transpose());
        out
    };
    let cat = |a: &DMatrix<f64>, b: &DMatrix<f64>| {
        let mut out = DMatrix::zeros(14, 4);
        out.view_mut((0, 0), (14, 2)).copy_from(a);
        out.view_mut((0, 2), (14, 2)).copy_from(b);
        out
    };
    let phi41 = quad(&e(9), &s(r1)) * (tb * tb)
        + quad(&e(10), &s(r2)) * (sb * sb)
        + quad(&e(1), &s(r3)) * (tb * tb)
        + quad(&e(4), &s(r4)) * (sb * sb);
    let phi42 = quad(&e(12), &s(r3)) * (tb * (tb - tau)) + quad(&e(11), &s(r3)) * (tb * tau);
    let phi43 = quad(&e(14), &s(r4)) * (sb * (sb - sigma)) + quad(&e(13), &s(r4)) * (sb * sigma);
    let phi4 = phi41 - phi42 - phi43 - quad(&cat(&d7, &d8), &r_hat(r1, &slots[&G1]))
        - quad(&cat(&t7, &t8), &r_hat(r2, &slots[&G2]));

    let m_tilde = |m: f64, bar: f64| DMatrix::from_diagonal(&DVector::from_vec(vec![m, 3.0 * m])) / bar;
    let phi51 = quad(&e(9), &s(m1)) * (tb * tb / 2.0) + quad(&e(10), &s(m2)) * (sb * sb / 2.0);
    let phi52 = quad(&(e(1) - e(11)), &s(m1)) + quad(&(e(3) - e(12)), &s(m1));
    let phi53 = quad(&(e(4) - e(13)), &s(m2)) + quad(&(e(6) - e(14)), &s(m2));
    let phi5 = phi51 - phi52 - phi53 - quad(&d8, &m_tilde(m1, tb)) * ((tb - tau) / tb)
        - quad(&t8, &m_tilde(m2, sb)) * ((sb - sigma) / sb);

    phi0 + phi1 + phi2 + phi3 + phi4 + phi5
}

/// Dense `R_hat_j` for `n = 1`.
pub fn dense_r_hat_scalar(slots: &BTreeMap<SlotId, DMatrix<f64>>, j: usize) -> DMatrix<f64> {
    let (r, g) = match j {
        1 => (scalar(slots, SlotId::R1), &slots[&SlotId::G1]),
        2 => (scalar(slots, SlotId::R2), &slots[&SlotId::G2]),
        _ => panic!("R_hat index must be 1 or 2"),
    };
    let mut out = DMatrix::from_diagonal(&DVector::from_vec(vec![r, 3.0 * r, r, 3.0 * r]));
    out.view_mut((0, 2), (2, 2)).copy_from(g);
    out.view_mut((2, 0), (2, 2)).copy_from(&g.transpose());
    out
}

pub fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
