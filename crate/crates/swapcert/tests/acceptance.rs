//! Acceptance suite: one test per acceptance criterion, each printing a
//! pass line (visible with `cargo test --test acceptance -- --nocapture`).
//! Tolerances are pinned in the assertions.

use std::f64::consts::{FRAC_PI_6, FRAC_PI_8};
use std::time::Instant;

use nalgebra::DMatrix;
use swapcert::certify::{
    self, bound_curve, bound_half_root, lemma2_min_margin, noise_threshold,
    qsep_achievability, qsep_refined_bound, robust_bound, suite, Verdict, BETA_MAX,
};
use swapcert::channels::{choi_tensor_apply, ChoiChannel};
use swapcert::network::{qubit_ancilla, run_star, run_swap, StarScenario, SwapScenario};
use swapcert::qlinalg::{
    eig_hermitian, hs_inner, kron, partial_trace, CMatrix, C64,
};
use swapcert::qobjects::{
    bell_state, measurement_basis, tilt_weight, tilted_bell_state, two_product_two_bell_basis,
    Scenario,
};
use swapcert::random::{random_density, random_state_vector, random_unitary};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 0x5e1f_7e57;

fn pass(criterion: usize, what: &str) {
    println!("criterion {criterion} ({what}): PASS");
}

#[test]
fn criterion_1_exact_bsm_self_test() {
    let start = Instant::now();

    // Bare ideal scenario: probabilities and conditional states.
    let ideal = SwapScenario::ideal_bsm();
    let outcomes = run_swap(&ideal).unwrap();
    for o in &outcomes {
        assert!((o.p - 0.25).abs() < 1e-10, "p_{} = {}", o.index, o.p);
        let state = o.state.as_ref().unwrap();
        let target = bell_state(o.index).unwrap();
        assert!(
            state.mat().frob_dist(target.mat()) < 1e-9,
            "conditional state misses Bell state {}",
            o.index
        );
    }

    // Channel identity, by the verifier (asserts at 1e-7 internally) ...
    let report = certify::theorem1_verify(&ideal).unwrap();
    assert_eq!(report.verdict, Verdict::EntangledCertified);

    // ... and by the independent tensor arithmetic: in the ideal case the
    // extracted sources equal the physical ones, so the mapped measurement
    // is 4 Tr_{B1 B2}[ B^b (phi+ (x) phi+) ].
    let phi = bell_state(0).unwrap();
    let sigma_pair = kron(phi.mat(), phi.mat()); // (A', B1, B2, C')
    for (b, elem) in measurement_basis(Scenario::Bsm)
        .unwrap()
        .elements()
        .iter()
        .enumerate()
    {
        let proj = kron(&kron(&CMatrix::identity(&[2]), elem), &CMatrix::identity(&[2]));
        let mapped = partial_trace(&proj.mul(&sigma_pair), &[0, 3])
            .unwrap()
            .scale(4.0);
        assert!(
            mapped.frob_dist(bell_state(b).unwrap().mat()) < 1e-7,
            "Step-2 arithmetic fails at b={b}"
        );
    }

    // Ancilla-embedded variant: one qubit on each source.
    let anc = qubit_ancilla(C64::new(1.0, 0.0), C64::new(0.0, 0.0)).unwrap();
    let embedded = ideal
        .with_alice_ancilla(&anc)
        .unwrap()
        .with_charlie_ancilla(&anc)
        .unwrap();
    let outcomes = run_swap(&embedded).unwrap();
    for o in &outcomes {
        assert!((o.p - 0.25).abs() < 1e-10);
    }
    let report = certify::theorem1_verify(&embedded).unwrap();
    assert_eq!(report.verdict, Verdict::EntangledCertified);

    let elapsed = start.elapsed().as_secs_f64();
    assert!(elapsed < 1.0, "criterion 1 took {elapsed:.3} s");
    pass(1, "exact BSM self-test");
}

#[test]
fn criterion_2_bound_curve_reproduction() {
    // Exact endpoint.
    let top = robust_bound(BETA_MAX).unwrap();
    assert!((top - 1.0).abs() < 1e-10, "bound(2 sqrt 2) = {top}");

    // Root of bound - 1/2.
    let root = bound_half_root().unwrap();
    assert!((root - 2.689).abs() < 0.01, "root at {root}");

    // Monotone nondecreasing on [2.69, 2 sqrt(2)], 200-point grid.
    let rows = bound_curve(2.69, BETA_MAX, 200).unwrap();
    assert_eq!(rows.len(), 200);
    for w in rows.windows(2) {
        assert!(
            w[1].bound >= w[0].bound - 1e-12,
            "bound decreases between {} and {}",
            w[0].beta_ave,
            w[1].beta_ave
        );
    }
    pass(2, "robust bound curve with 2.689 threshold");
}

#[test]
fn criterion_3_noise_tolerance_five_percent() {
    let start = Instant::now();
    let t = noise_threshold().unwrap();
    assert!(
        (0.045..=0.055).contains(&t.noise),
        "Werner threshold noise {} outside [0.045, 0.055]",
        t.noise
    );
    let elapsed = start.elapsed().as_secs_f64();
    assert!(elapsed < 5.0, "criterion 3 took {elapsed:.3} s");
    pass(3, "~5% Werner noise tolerance");
}

#[test]
fn criterion_4_separability_thresholds() {
    let bsm = measurement_basis(Scenario::Bsm).unwrap();
    let refined = qsep_refined_bound(&bsm).unwrap();
    assert!((refined - 0.5).abs() < 1e-12, "Q_sep(BSM) = {refined}");
    let (witness_value, _) = qsep_achievability(&bsm).unwrap();
    assert!((witness_value - 0.5).abs() < 1e-12);

    let mixed = two_product_two_bell_basis().unwrap();
    let refined = qsep_refined_bound(&mixed).unwrap();
    assert!((refined - 0.75).abs() < 1e-12, "refined(mixed) = {refined}");
    let (witness_value, _) = qsep_achievability(&mixed).unwrap();
    assert!((witness_value - 0.75).abs() < 1e-12);
    pass(4, "separability thresholds 1/2 and 3/4 with witnesses");
}

#[test]
fn criterion_5_marginal_tradeoff_certificates() {
    let mut grid: Vec<f64> = (0..10).map(|i| 0.5 + 0.05 * i as f64).collect();
    grid.push(0.99);
    for &c in &grid {
        let (l1, l2, obj) = certify::lemma_marginal_dual_check(c).unwrap();
        // Dual feasibility margin, recomputed here.
        let dual = CMatrix::identity(&[2, 2])
            .scale(l1)
            .sub(&bell_state(0).unwrap().mat().scale(l2))
            .sub(&kron(
                &swapcert::qobjects::pauli_z(),
                &CMatrix::identity(&[2]),
            ));
        let margin = swapcert::qlinalg::min_eig(&dual.hermitize()).unwrap();
        assert!(margin >= -1e-9, "c={c}: margin {margin:.3e}");
        assert!(
            (obj - 2.0 * (c * (1.0 - c)).sqrt()).abs() < 1e-10,
            "c={c}: objective {obj}"
        );
    }

    // Saturation by partially entangled pure states.
    for theta in [std::f64::consts::PI / 12.0, FRAC_PI_8, FRAC_PI_6] {
        let psi = tilted_bell_state(theta, 0).unwrap();
        let c = hs_inner(psi.mat(), bell_state(0).unwrap().mat()).unwrap();
        assert!((c - (1.0 + (2.0 * theta).sin()) / 2.0).abs() < 1e-12);
        let spectrum =
            eig_hermitian(&partial_trace(psi.mat(), &[0]).unwrap().hermitize()).unwrap();
        let eta = 2.0 * (c * (1.0 - c)).sqrt();
        assert!(
            (spectrum.eigenvalues[0] - (1.0 + eta) / 2.0).abs() < 1e-10
                && (spectrum.eigenvalues[1] - (1.0 - eta) / 2.0).abs() < 1e-10,
            "theta={theta}: spectrum {:?}",
            spectrum.eigenvalues
        );
    }
    pass(5, "dual certificate grid and saturating states");
}

#[test]
fn criterion_6_rescaling_operator_inequality() {
    let start = Instant::now();
    let min = lemma2_min_margin(SEED, 1000).unwrap();
    assert!(min >= -1e-9, "min margin {min:.3e}");
    let elapsed = start.elapsed().as_secs_f64();
    assert!(elapsed < 10.0, "criterion 6 took {elapsed:.3} s");
    pass(6, "operator inequality on 1000 random states");
}

#[test]
fn criterion_7_swap_gate_covariance() {
    let out = suite::swap_lemma_suite(SEED);
    assert!(out.passed, "{}", out.detail);
    pass(7, "swap-gate covariance identities incl. dimension 6");
}

#[test]
fn criterion_8_ghz_and_tilted_exact_self_tests() {
    // GHZ star: probabilities, Mermin values, identities.
    let star = StarScenario::ideal_ghz();
    let outcomes = run_star(&star).unwrap();
    assert_eq!(outcomes.len(), 8);
    for o in &outcomes {
        assert!((o.beta - 4.0).abs() < 1e-7, "Mermin value {}", o.beta);
    }
    let report = certify::ghz_verify(&star).unwrap();
    assert_eq!(report.verdict, Verdict::EntangledCertified);
    assert!(report.fidelities.iter().all(|&f| (f - 1.0).abs() < 1e-7));

    // Tilted scenario at two angles.
    for theta in [FRAC_PI_8, FRAC_PI_6] {
        let s = SwapScenario::tilted_ideal(theta).unwrap();
        let eta = tilt_weight(theta);
        let target = (8.0 + 2.0 * eta * eta).sqrt();
        let outcomes = run_swap(&s).unwrap();
        for o in &outcomes {
            assert!(
                (o.beta - target).abs() < 1e-9,
                "theta={theta}, b={}: {} vs {target}",
                o.index,
                o.beta
            );
        }
        let report = certify::tilted_verify(theta, &s).unwrap();
        assert_eq!(report.verdict, Verdict::EntangledCertified);
        // Identity targets are the tilted states themselves.
        for (b, &f) in report.fidelities.iter().enumerate() {
            assert!((f - 1.0).abs() < 1e-9, "theta={theta}, b={b}: fidelity {f}");
        }
        let _ = tilted_bell_state(theta, 0).unwrap();
    }
    pass(8, "GHZ and tilted exact self-tests");
}

#[test]
fn criterion_9_tensor_application_against_kraus_oracle() {
    // Random unital CP channels as mixtures of unitary conjugations; the
    // oracle applies the tensor-extended Kraus operators directly.
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let random_unital = |rng: &mut ChaCha8Rng, d: usize| -> ChoiChannel {
        let terms = 1 + (rng.random::<u32>() % 3) as usize;
        let mut weights: Vec<f64> = (0..terms).map(|_| rng.random::<f64>() + 0.1).collect();
        let total: f64 = weights.iter().sum();
        for w in &mut weights {
            *w /= total;
        }
        let mut choi = CMatrix::zeros(&[d, d]);
        for &w in &weights {
            let u = random_unitary(rng, d);
            let id = ChoiChannel::identity(d);
            let rotated = kron(&u, &CMatrix::identity(&[d]))
                .mul(id.choi())
                .mul(&kron(&u.adjoint(), &CMatrix::identity(&[d])));
            choi = choi.add(&rotated.scale(w));
        }
        ChoiChannel::new(choi.hermitize().with_dims(&[d, d]).unwrap()).unwrap()
    };

    for trial in 0..100 {
        let d1 = 2 + trial % 2;
        let d2 = 2 + (trial / 2) % 2;
        let ch1 = random_unital(&mut rng, d1);
        let ch2 = random_unital(&mut rng, d2);
        assert!(ch1.is_cp(1e-9) && ch1.is_unital(1e-9));
        assert!(ch2.is_cp(1e-9) && ch2.is_unital(1e-9));

        let omega = {
            let m = random_density(&mut rng, d1 * d2);
            m.with_dims(&[d1, d2]).unwrap()
        };
        let joint = choi_tensor_apply(&[&ch1, &ch2], &omega).unwrap();

        // Kraus oracle: sum_{k,l} (K_k (x) L_l) Omega (K_k (x) L_l)^dag.
        let k1 = ch1.kraus_operators().unwrap();
        let k2 = ch2.kraus_operators().unwrap();
        let mut oracle: DMatrix<C64> = DMatrix::zeros(d1 * d2, d1 * d2);
        for ka in &k1 {
            for kb in &k2 {
                let ext = ka.kronecker(kb);
                oracle += &ext * omega.as_dmatrix() * ext.adjoint();
            }
        }
        let oracle = CMatrix::new(oracle, &[d1, d2]).unwrap();
        let residual = joint.max_abs_diff(&oracle);
        assert!(residual < 1e-9, "trial {trial}: residual {residual:.3e}");
    }
    pass(9, "tensor Choi application matches the Kraus oracle");
}

#[test]
fn criterion_10_reports_are_lower_bounds_only() {
    // The robust pipeline never claims more than a certified lower bound:
    // every reported number stays inside [0, 1] and the exact value of Q is
    // never asserted for noisy inputs.
    for v2 in [0.93f64, 0.96, 0.99] {
        let s = SwapScenario::werner_bsm(v2.sqrt()).unwrap();
        let report = certify::theorem2_certify(&s).unwrap();
        assert!(report.bound >= 0.0 && report.bound <= 1.0 + 1e-9);
        let cq = report.constructive_q.unwrap();
        assert!((0.0..=1.0 + 1e-9).contains(&cq));
    }
    // A random state vector keeps the seeded RNG plumbing exercised here.
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let _ = random_state_vector(&mut rng, 4);
    pass(10, "desk-scale verification reports certified lower bounds only");
}
