mod common;

use common::{dense_phi_scalar, dense_r_hat_scalar, example1, example2, max_abs_diff, random_assignment, random_scalar_problem};
use grnobs::lmi::{
    assemble_lmi_system, assemble_lmi_system_with_gains, assemble_phi, assemble_phi_vertex, GainMode, SlotId,
    Vertex,
};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const TOL: f64 = 1e-12;

#[test]
fn vertices_match_dense_transcription_on_example2() {
    let problem = example2();
    let layout = problem.layout(true);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..20 {
        let (slots, x) = random_assignment(&layout, &mut rng);
        for v in Vertex::all(&problem.delays) {
            let got = assemble_phi_vertex(&problem, v).unwrap().evaluate(x.values());
            let want = dense_phi_scalar(&problem, &slots, v.tau, v.sigma);
            let diff = max_abs_diff(&got, &want);
            assert!(diff <= TOL, "vertex {v:?}: diff {diff:e}");
        }
    }
}

#[test]
fn vertices_match_dense_transcription_on_random_data() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..20 {
        let problem = random_scalar_problem(&mut rng);
        let layout = problem.layout(true);
        let (slots, x) = random_assignment(&layout, &mut rng);
        for v in Vertex::all(&problem.delays) {
            let got = assemble_phi_vertex(&problem, v).unwrap().evaluate(x.values());
            let want = dense_phi_scalar(&problem, &slots, v.tau, v.sigma);
            let diff = max_abs_diff(&got, &want);
            assert!(diff <= TOL, "vertex {v:?}: diff {diff:e}");
        }
    }
}

#[test]
fn interior_points_match_dense_transcription() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..20 {
        let problem = random_scalar_problem(&mut rng);
        let layout = problem.layout(true);
        let (slots, x) = random_assignment(&layout, &mut rng);
        let tau = rng.gen_range(0.0..=problem.delays.tau_bar);
        let sigma = rng.gen_range(0.0..=problem.delays.sigma_bar);
        let got = assemble_phi(&problem, &layout, GainMode::Free, tau, sigma).unwrap().evaluate(x.values());
        let want = dense_phi_scalar(&problem, &slots, tau, sigma);
        // The assembled expression is not symmetrized, the transcription is
        // symmetric by construction.
        let got = (&got + got.transpose()) * 0.5;
        assert!(max_abs_diff(&got, &want) <= TOL);
    }
}

#[test]
fn r_hat_matches_dense_transcription() {
    let problem = example2();
    let system = assemble_lmi_system(&problem).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for _ in 0..20 {
        let (slots, x) = random_assignment(&system.layout, &mut rng);
        for j in [1, 2] {
            let got = system.constraint(&format!("r_hat_{j}")).unwrap().evaluate(x.values());
            assert!(max_abs_diff(&got, &dense_r_hat_scalar(&slots, j)) <= TOL);
        }
    }
}

fn phi_at(problem: &grnobs::lmi::ObserverProblem, x: &nalgebra::DVector<f64>, tau: f64, sigma: f64) -> DMatrix<f64> {
    let layout = problem.layout(true);
    assemble_phi(problem, &layout, GainMode::Free, tau, sigma).unwrap().evaluate(x)
}

#[test]
fn phi_is_affine_in_each_delay() {
    for (seed, problem) in [(21, example1()), (22, example2())] {
        let layout = problem.layout(true);
        let d = problem.delays;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..50 {
            let (_, x) = random_assignment(&layout, &mut rng);
            let x = x.values();
            for sigma in [0.0, d.sigma_bar] {
                let mid = phi_at(&problem, x, d.tau_bar / 2.0, sigma);
                let avg = (phi_at(&problem, x, 0.0, sigma) + phi_at(&problem, x, d.tau_bar, sigma)) * 0.5;
                assert!(max_abs_diff(&mid, &avg) <= TOL);
            }
            for tau in [0.0, d.tau_bar] {
                let mid = phi_at(&problem, x, tau, d.sigma_bar / 2.0);
                let avg = (phi_at(&problem, x, tau, 0.0) + phi_at(&problem, x, tau, d.sigma_bar)) * 0.5;
                assert!(max_abs_diff(&mid, &avg) <= TOL);
            }
        }
    }
}

#[test]
fn eliminated_gains_reproduce_fixed_gain_assembly() {
    let problem = example1();
    let free = assemble_lmi_system(&problem).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for _ in 0..10 {
        let (mut slots, _) = random_assignment(&free.layout, &mut rng);
        for id in [SlotId::P1, SlotId::P2] {
            let p = slots.get_mut(&id).unwrap();
            for i in 0..p.nrows() {
                p[(i, i)] = p[(i, i)].abs() + 0.5;
            }
        }
        let k1 = DMatrix::from_fn(3, 2, |_, _| rng.gen_range(-1.0..1.0));
        let k2 = DMatrix::from_fn(3, 2, |_, _| rng.gen_range(-1.0..1.0));
        slots.insert(SlotId::W1, &slots[&SlotId::P1] * &k1);
        slots.insert(SlotId::W2, &slots[&SlotId::P2] * &k2);
        let fixed = assemble_lmi_system_with_gains(&problem, &k1, &k2).unwrap();
        let x_free = free.layout.pack_map(&slots).unwrap();
        let x_fixed = fixed.layout.pack(|id| slots.get(&id).cloned()).unwrap();
        for (a, b) in free.constraints.iter().zip(&fixed.constraints) {
            assert_eq!(a.name, b.name);
            let diff = max_abs_diff(&a.evaluate(x_free.values()), &b.evaluate(x_fixed.values()));
            assert!(diff <= TOL, "{}: {diff:e}", a.name);
        }
    }
}

#[test]
fn interval_blocks_have_rank_at_most_two_n() {
    use grnobs::lmi::{build_interval_blocks, build_selectors};
    for n in 1..=3 {
        let e = build_selectors(n);
        let blocks = build_interval_blocks(&e, 1.5, 0.7);
        for i in 1..=8 {
            for m in [blocks.delta(i), blocks.theta(i)] {
                assert_eq!(m.shape(), (14 * n, 2 * n));
                assert!(m.clone().svd(false, false).rank(1e-12) <= 2 * n);
            }
        }
    }
}
