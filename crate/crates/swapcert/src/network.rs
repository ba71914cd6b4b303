//! Simulation of the entanglement-swapping scenario and the three-source
//! star network: outcome probabilities, conditional states and conditional
//! Bell values, all as exact density-matrix traces.
//!
//! Factor bookkeeping is canonicalized once: the swap network lives on
//! A (x) B1 (x) B2 (x) C, the star network on the source order
//! (A,R_A) (x) (B,R_B) (x) (C,R_C) and is permuted to outer-parties-first
//! internally.

use std::f64::consts::SQRT_2;

use nalgebra::DVector;

use crate::qlinalg::{hs_inner, kron, partial_trace, permute_factors, CMatrix, C64};
use crate::qobjects::{
    chsh_operator, ghz_labels, ideal_observables, measurement_basis, mermin_operator,
    noisy_measurement, tilt_weight, tilted_chsh_operator, werner_source, DensityOperator,
    Measurement, Observable, Scenario,
};
use crate::{Error, Result};

/// Probability floor below which an outcome is flagged degenerate.
pub const DEGENERATE_P: f64 = 1e-12;

/// Which conditional Bell family the outer parties evaluate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BellFamily {
    Chsh,
    TiltedChsh { weight: f64 },
}

impl BellFamily {
    /// Quantum maximum of every member of the family.
    pub fn quantum_max(&self) -> f64 {
        match self {
            BellFamily::Chsh => 2.0 * SQRT_2,
            BellFamily::TiltedChsh { weight } => (8.0 + 2.0 * weight * weight).sqrt(),
        }
    }

    /// Bell operator conditioned on outcome b.
    pub fn operator(
        &self,
        b: usize,
        obs_a: &[Observable; 2],
        obs_c: &[Observable; 2],
    ) -> Result<CMatrix> {
        match self {
            BellFamily::Chsh => chsh_operator(b, obs_a, obs_c),
            BellFamily::TiltedChsh { weight } => tilted_chsh_operator(b, *weight, obs_a, obs_c),
        }
    }
}

/// The entanglement-swapping scenario: two independent sources, Bob's joint
/// measurement on the middle systems, two settings per outer party.
#[derive(Clone, Debug)]
pub struct SwapScenario {
    pub tau_ab1: DensityOperator,
    pub tau_b2c: DensityOperator,
    pub bob: Measurement,
    pub obs_a: [Observable; 2],
    pub obs_c: [Observable; 2],
    pub bell: BellFamily,
}

impl SwapScenario {
    /// Validate factor-dimension consistency across the pieces.
    pub fn new(
        tau_ab1: DensityOperator,
        tau_b2c: DensityOperator,
        bob: Measurement,
        obs_a: [Observable; 2],
        obs_c: [Observable; 2],
        bell: BellFamily,
    ) -> Result<Self> {
        if tau_ab1.dims().len() != 2 || tau_b2c.dims().len() != 2 {
            return Err(Error::InvalidFactors("sources must be bipartite".into()));
        }
        if bob.dims().len() != 2 {
            return Err(Error::InvalidFactors(
                "Bob's measurement needs dims [B1, B2]".into(),
            ));
        }
        let (da, db1) = (tau_ab1.dims()[0], tau_ab1.dims()[1]);
        let (db2, dc) = (tau_b2c.dims()[0], tau_b2c.dims()[1]);
        if bob.dims() != [db1, db2] {
            return Err(Error::DimMismatch(format!(
                "Bob on {:?}, sources deliver [{db1}, {db2}]",
                bob.dims()
            )));
        }
        if obs_a[0].dim() != da || obs_a[1].dim() != da {
            return Err(Error::DimMismatch("Alice's observables".into()));
        }
        if obs_c[0].dim() != dc || obs_c[1].dim() != dc {
            return Err(Error::DimMismatch("Charlie's observables".into()));
        }
        Ok(Self {
            tau_ab1,
            tau_b2c,
            bob,
            obs_a,
            obs_c,
            bell,
        })
    }

    /// Ideal scenario: two maximally entangled sources, Bob measures the
    /// Bell basis, outer parties use the ideal CHSH settings.
    pub fn ideal_bsm() -> Self {
        let phi = crate::qobjects::bell_state(0).expect("static");
        let obs = ideal_observables(Scenario::Bsm).expect("static");
        Self::new(
            phi.clone(),
            phi,
            measurement_basis(Scenario::Bsm).expect("static"),
            obs[0].clone(),
            obs[1].clone(),
            BellFamily::Chsh,
        )
        .expect("static scenario is consistent")
    }

    /// Ideal scenario with Werner sources of visibility v on both links.
    pub fn werner_bsm(v: f64) -> Result<Self> {
        let w = werner_source(v)?;
        let mut s = Self::ideal_bsm();
        s.tau_ab1 = w.clone();
        s.tau_b2c = w;
        Ok(s)
    }

    /// Ideal tilted scenario: maximally entangled sources, Bob measures the
    /// tilted Bell basis at angle theta, Charlie uses the mu(theta) settings.
    pub fn tilted_ideal(theta: f64) -> Result<Self> {
        let phi = crate::qobjects::bell_state(0)?;
        let obs = ideal_observables(Scenario::Tilted { theta })?;
        Self::new(
            phi.clone(),
            phi,
            measurement_basis(Scenario::Tilted { theta })?,
            obs[0].clone(),
            obs[1].clone(),
            BellFamily::TiltedChsh {
                weight: tilt_weight(theta),
            },
        )
    }

    /// Replace Bob's measurement by its white-noise mixture.
    pub fn with_noisy_bob(&self, p: f64) -> Result<Self> {
        let mut s = self.clone();
        s.bob = noisy_measurement(&self.bob, p)?;
        Ok(s)
    }

    /// Append an ancilla in state `anc` to Alice's share of the first
    /// source; her observables act trivially on it.
    pub fn with_alice_ancilla(&self, anc: &DensityOperator) -> Result<Self> {
        let danc = anc.dim();
        let (da, db1) = (self.tau_ab1.dims()[0], self.tau_ab1.dims()[1]);
        let anc_flat = anc.mat().with_dims(&[danc])?;
        let enlarged = kron(self.tau_ab1.mat(), &anc_flat);
        // (A, B1, anc) -> (A, anc, B1), then fuse (A, anc).
        let reordered = permute_factors(&enlarged, &[0, 2, 1])?;
        let fused = reordered.with_dims(&[da * danc, db1])?;
        let mut s = self.clone();
        s.tau_ab1 = DensityOperator::new(fused)?;
        s.obs_a = [
            self.obs_a[0].embed_with_ancilla(danc),
            self.obs_a[1].embed_with_ancilla(danc),
        ];
        Ok(s)
    }

    /// Append an ancilla to Charlie's share of the second source.
    pub fn with_charlie_ancilla(&self, anc: &DensityOperator) -> Result<Self> {
        let danc = anc.dim();
        let (db2, dc) = (self.tau_b2c.dims()[0], self.tau_b2c.dims()[1]);
        let anc_flat = anc.mat().with_dims(&[danc])?;
        let enlarged = kron(self.tau_b2c.mat(), &anc_flat);
        let fused = enlarged.with_dims(&[db2, dc * danc])?;
        let mut s = self.clone();
        s.tau_b2c = DensityOperator::new(fused)?;
        s.obs_c = [
            self.obs_c[0].embed_with_ancilla(danc),
            self.obs_c[1].embed_with_ancilla(danc),
        ];
        Ok(s)
    }
}

/// Rotate Charlie's observables by `angle` about sigma_y; sources and Bob
/// are untouched.
pub fn misaligned_scenario(base: &SwapScenario, angle: f64) -> SwapScenario {
    let half = angle / 2.0;
    let u = CMatrix::from_real_row_slice(&[2], &[half.cos(), -half.sin(), half.sin(), half.cos()])
        .expect("static");
    let rotate = |o: &Observable| {
        Observable::new(u.mul(o.mat()).mul(&u.adjoint()).hermitize()).expect("rotation of Hermitian")
    };
    let mut s = base.clone();
    s.obs_c = [rotate(&base.obs_c[0]), rotate(&base.obs_c[1])];
    s
}

/// One conditional outcome of the central measurement.
#[derive(Clone, Debug)]
pub struct ConditionalOutcome {
    pub index: usize,
    pub label: String,
    pub p: f64,
    /// Normalized conditional state of the outer parties; absent for
    /// degenerate outcomes (p below [`DEGENERATE_P`]).
    pub state: Option<DensityOperator>,
    /// Conditional Bell value; 0 for degenerate outcomes.
    pub beta: f64,
    pub degenerate: bool,
}

/// Run the swapping scenario: p_b = Tr[(1 (x) B^b (x) 1) tau], conditional
/// states by partial trace over B1 B2, conditional Bell value per outcome.
pub fn run_swap(s: &SwapScenario) -> Result<Vec<ConditionalOutcome>> {
    let (da, dc) = (s.tau_ab1.dims()[0], s.tau_b2c.dims()[1]);
    let global = kron(s.tau_ab1.mat(), s.tau_b2c.mat());
    let id_a = CMatrix::identity(&[da]);
    let id_c = CMatrix::identity(&[dc]);

    let mut outcomes = Vec::with_capacity(s.bob.len());
    let mut total_p = 0.0;
    for (b, elem) in s.bob.elements().iter().enumerate() {
        let proj = kron(&kron(&id_a, elem), &id_c);
        let weighted = proj.mul(&global);
        let p = weighted.trace_re();
        total_p += p;
        if p < DEGENERATE_P {
            outcomes.push(ConditionalOutcome {
                index: b,
                label: s.bob.label(b).to_string(),
                p: p.max(0.0),
                state: None,
                beta: 0.0,
                degenerate: true,
            });
            continue;
        }
        let reduced = partial_trace(&weighted, &[0, 3])?.scale(1.0 / p).hermitize();
        let state = DensityOperator::new(reduced)?;
        let w_b = s.bell.operator(b, &s.obs_a, &s.obs_c)?;
        let beta = hs_inner(state.mat(), &w_b)?;
        outcomes.push(ConditionalOutcome {
            index: b,
            label: s.bob.label(b).to_string(),
            p,
            state: Some(state),
            beta,
            degenerate: false,
        });
    }
    debug_assert!(
        (total_p - 1.0).abs() < 1e-9,
        "outcome probabilities sum to {total_p}"
    );
    Ok(outcomes)
}

/// p-weighted average Bell value. Degenerate outcomes contribute the
/// caller's `worst_case` value (their weight is below [`DEGENERATE_P`], so
/// this keeps the average a sound lower bound without moving it).
pub fn beta_ave(outcomes: &[ConditionalOutcome], worst_case: f64) -> f64 {
    outcomes
        .iter()
        .map(|o| o.p * if o.degenerate { worst_case } else { o.beta })
        .sum()
}

/// CHSH-family average with the worst case pinned at -2 sqrt(2).
pub fn beta_ave_chsh(outcomes: &[ConditionalOutcome]) -> f64 {
    beta_ave(outcomes, -2.0 * SQRT_2)
}

/// The three-source star network around a central eight-outcome measurement.
#[derive(Clone, Debug)]
pub struct StarScenario {
    /// Source states in the factor order (outer party, central share).
    pub sources: [DensityOperator; 3],
    pub rob: Measurement,
    pub obs: [[Observable; 2]; 3],
}

impl StarScenario {
    pub fn new(
        sources: [DensityOperator; 3],
        rob: Measurement,
        obs: [[Observable; 2]; 3],
    ) -> Result<Self> {
        if rob.dims().len() != 3 {
            return Err(Error::InvalidFactors(
                "central measurement needs dims [R_A, R_B, R_C]".into(),
            ));
        }
        for (i, src) in sources.iter().enumerate() {
            if src.dims().len() != 2 {
                return Err(Error::InvalidFactors("sources must be bipartite".into()));
            }
            if src.dims()[1] != rob.dims()[i] {
                return Err(Error::DimMismatch(format!(
                    "source {i} delivers dim {} to the centre, measurement expects {}",
                    src.dims()[1],
                    rob.dims()[i]
                )));
            }
            if obs[i][0].dim() != src.dims()[0] || obs[i][1].dim() != src.dims()[0] {
                return Err(Error::DimMismatch(format!("party {i} observables")));
            }
        }
        Ok(Self { sources, rob, obs })
    }

    /// Ideal star: maximally entangled sources, the GHZ basis at the
    /// centre, sigma_x / sigma_y settings at every outer party.
    pub fn ideal_ghz() -> Self {
        let phi = crate::qobjects::bell_state(0).expect("static");
        let obs = ideal_observables(Scenario::Ghz).expect("static");
        Self::new(
            [phi.clone(), phi.clone(), phi],
            measurement_basis(Scenario::Ghz).expect("static"),
            [obs[0].clone(), obs[1].clone(), obs[2].clone()],
        )
        .expect("static scenario is consistent")
    }

    /// Werner sources of visibility v on all three links.
    pub fn werner_ghz(v: f64) -> Result<Self> {
        let w = werner_source(v)?;
        let mut s = Self::ideal_ghz();
        s.sources = [w.clone(), w.clone(), w];
        Ok(s)
    }

    /// Append a qubit ancilla in state |0> to each outer party.
    pub fn with_ancillas(&self) -> Result<Self> {
        let ket0 = DensityOperator::pure(&crate::qobjects::basis_ket(0, 2), &[2])?;
        let mut sources = Vec::new();
        let mut obs = Vec::new();
        for i in 0..3 {
            let (dp, dr) = (self.sources[i].dims()[0], self.sources[i].dims()[1]);
            let ket0_flat = ket0.mat().with_dims(&[2])?;
            let enlarged = kron(self.sources[i].mat(), &ket0_flat);
            let reordered = permute_factors(&enlarged, &[0, 2, 1])?;
            sources.push(DensityOperator::new(reordered.with_dims(&[dp * 2, dr])?)?);
            obs.push([
                self.obs[i][0].embed_with_ancilla(2),
                self.obs[i][1].embed_with_ancilla(2),
            ]);
        }
        Self::new(
            [sources[0].clone(), sources[1].clone(), sources[2].clone()],
            self.rob.clone(),
            [obs[0].clone(), obs[1].clone(), obs[2].clone()],
        )
    }
}

/// Run the star scenario: eight outcomes with conditional states on the
/// outer parties and the Mermin value of the matching relabeling.
/// Outcome order follows the central measurement, which must use the
/// canonical GHZ outcome ordering.
pub fn run_star(s: &StarScenario) -> Result<Vec<ConditionalOutcome>> {
    let outer_dims: Vec<usize> = s.sources.iter().map(|src| src.dims()[0]).collect();
    let global = kron(
        &kron(s.sources[0].mat(), s.sources[1].mat()),
        s.sources[2].mat(),
    );
    // (A, R_A, B, R_B, C, R_C) -> (A, B, C, R_A, R_B, R_C)
    let grouped = permute_factors(&global, &[0, 2, 4, 1, 3, 5])?;
    let id_outer = CMatrix::identity(&outer_dims);
    let labels = ghz_labels();

    if s.rob.len() != 8 {
        return Err(Error::InvalidMeasurement(format!(
            "central measurement has {} outcomes, expected 8",
            s.rob.len()
        )));
    }

    let mut outcomes = Vec::with_capacity(8);
    let mut total_p = 0.0;
    for (r, elem) in s.rob.elements().iter().enumerate() {
        let proj = kron(&id_outer, elem);
        let weighted = proj.mul(&grouped);
        let p = weighted.trace_re();
        total_p += p;
        if p < DEGENERATE_P {
            outcomes.push(ConditionalOutcome {
                index: r,
                label: s.rob.label(r).to_string(),
                p: p.max(0.0),
                state: None,
                beta: 0.0,
                degenerate: true,
            });
            continue;
        }
        let reduced = partial_trace(&weighted, &[0, 1, 2])?
            .scale(1.0 / p)
            .hermitize();
        let state = DensityOperator::new(reduced)?;
        let mer = mermin_operator(labels[r], &s.obs);
        let beta = hs_inner(state.mat(), &mer)?;
        outcomes.push(ConditionalOutcome {
            index: r,
            label: s.rob.label(r).to_string(),
            p,
            state: Some(state),
            beta,
            degenerate: false,
        });
    }
    debug_assert!(
        (total_p - 1.0).abs() < 1e-9,
        "outcome probabilities sum to {total_p}"
    );
    Ok(outcomes)
}

/// Helper for tests and embeddings: a pure qubit ancilla state.
pub fn qubit_ancilla(amp0: C64, amp1: C64) -> Result<DensityOperator> {
    let v = DVector::from_column_slice(&[amp0, amp1]);
    DensityOperator::pure(&(v.clone() / C64::new(v.norm(), 0.0)), &[2])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qobjects::{bell_state, ghz_state, Measurement};
    use crate::random::{random_povm, random_separable_two_qubit, random_state_vector};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::FRAC_PI_8;

    #[test]
    fn ideal_swap_projects_onto_bell_states() {
        let outcomes = run_swap(&SwapScenario::ideal_bsm()).unwrap();
        assert_eq!(outcomes.len(), 4);
        for o in &outcomes {
            assert!((o.p - 0.25).abs() < 1e-12);
            let state = o.state.as_ref().unwrap();
            let target = bell_state(o.index).unwrap();
            assert!(state.mat().frob_dist(target.mat()) < 1e-12);
            assert!((o.beta - 2.0 * SQRT_2).abs() < 1e-12);
        }
        assert!((beta_ave_chsh(&outcomes) - 2.0 * SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn werner_sources_scale_chsh_quadratically() {
        for v in [0.9, 0.95, 0.975, 1.0] {
            let outcomes = run_swap(&SwapScenario::werner_bsm(v).unwrap()).unwrap();
            for o in &outcomes {
                assert!((o.p - 0.25).abs() < 1e-12);
                assert!(
                    (o.beta - 2.0 * SQRT_2 * v * v).abs() < 1e-10,
                    "v={v}: beta={}",
                    o.beta
                );
                // Conditional state is the Werner state at visibility v^2.
                let expect = bell_state(o.index)
                    .unwrap()
                    .mat()
                    .scale(v * v)
                    .add(&CMatrix::identity(&[2, 2]).scale(0.25 * (1.0 - v * v)));
                assert!(o.state.as_ref().unwrap().mat().frob_dist(&expect) < 1e-10);
            }
        }
        // Threshold landmark: v = 0.975 puts the average right at the
        // certification boundary.
        let outcomes = run_swap(&SwapScenario::werner_bsm(0.975).unwrap()).unwrap();
        let ave = beta_ave_chsh(&outcomes);
        assert!((ave - 2.0 * SQRT_2 * 0.975 * 0.975).abs() < 1e-10);
        assert!((ave - 2.6887).abs() < 1e-3);
    }

    #[test]
    fn tilted_swap_attains_family_maximum() {
        for theta in [FRAC_PI_8, std::f64::consts::FRAC_PI_6] {
            let s = SwapScenario::tilted_ideal(theta).unwrap();
            let bound = s.bell.quantum_max();
            let outcomes = run_swap(&s).unwrap();
            for o in &outcomes {
                assert!((o.p - 0.25).abs() < 1e-12);
                assert!((o.beta - bound).abs() < 1e-9, "theta={theta}: {}", o.beta);
            }
        }
    }

    #[test]
    fn ideal_star_projects_onto_ghz_states() {
        let outcomes = run_star(&StarScenario::ideal_ghz()).unwrap();
        assert_eq!(outcomes.len(), 8);
        let labels = ghz_labels();
        let mut psum = 0.0;
        for o in &outcomes {
            psum += o.p;
            assert!((o.p - 0.125).abs() < 1e-12);
            let target = ghz_state(labels[o.index]).unwrap();
            assert!(o.state.as_ref().unwrap().mat().frob_dist(target.mat()) < 1e-12);
            assert!((o.beta - 4.0).abs() < 1e-12);
        }
        assert!((psum - 1.0).abs() < 1e-12);
    }

    #[test]
    fn werner_star_scales_mermin_cubically() {
        for v in [0.9, 0.99] {
            let outcomes = run_star(&StarScenario::werner_ghz(v).unwrap()).unwrap();
            for o in &outcomes {
                assert!((o.p - 0.125).abs() < 1e-12);
                assert!((o.beta - 4.0 * v * v * v).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn misalignment_is_continuous_and_vanishes_at_zero() {
        let base = SwapScenario::ideal_bsm();
        let same = misaligned_scenario(&base, 0.0);
        let b0 = run_swap(&base).unwrap();
        let b1 = run_swap(&same).unwrap();
        for (x, y) in b0.iter().zip(b1.iter()) {
            assert!((x.beta - y.beta).abs() < 1e-12);
        }

        // beta_ave along a coarse sweep moves continuously (no jumps > 0.2
        // between steps of 0.01 rad).
        let mut prev = beta_ave_chsh(&b0);
        let mut angle = 0.01;
        while angle <= 1.0 {
            let outcomes = run_swap(&misaligned_scenario(&base, angle)).unwrap();
            let ave = beta_ave_chsh(&outcomes);
            assert!((ave - prev).abs() < 0.2, "jump at angle {angle}");
            prev = ave;
            angle += 0.01;
        }

        // Quarter-turn landmark value, checked against the analytic
        // conditional expectation cos(pi/2 - angle) scaling of the sigma_z
        // correlators: at angle = pi/2 the rotated settings exchange roles
        // and beta_0 drops to 0.
        let quarter = misaligned_scenario(&base, std::f64::consts::FRAC_PI_2);
        let outcomes = run_swap(&quarter).unwrap();
        assert!(outcomes[0].beta.abs() < 1e-10);
    }

    #[test]
    fn random_scenarios_conserve_probability_and_states() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..200 {
            let tau1 = DensityOperator::new(
                crate::random::random_density(&mut rng, 4)
                    .with_dims(&[2, 2])
                    .unwrap()
                    .hermitize(),
            )
            .unwrap();
            let tau2 = DensityOperator::new(
                crate::random::random_density(&mut rng, 4)
                    .with_dims(&[2, 2])
                    .unwrap()
                    .hermitize(),
            )
            .unwrap();
            let povm = random_povm(&mut rng, 4, 4);
            let elements: Vec<CMatrix> = povm
                .iter()
                .map(|e| e.with_dims(&[2, 2]).unwrap())
                .collect();
            let bob = Measurement::new(elements, (0..4).map(|b| format!("b={b}")).collect())
                .unwrap();
            let obs = ideal_observables(Scenario::Bsm).unwrap();
            let s = SwapScenario::new(
                tau1,
                tau2,
                bob,
                obs[0].clone(),
                obs[1].clone(),
                BellFamily::Chsh,
            )
            .unwrap();
            let outcomes = run_swap(&s).unwrap();
            let psum: f64 = outcomes.iter().map(|o| o.p).sum();
            assert!((psum - 1.0).abs() < 1e-10);

            // Sum_b p_b tau^b equals the marginal of the global state.
            let mut mix = CMatrix::zeros(&[2, 2]);
            for o in &outcomes {
                if let Some(state) = &o.state {
                    mix = mix.add(&state.mat().scale(o.p));
                }
            }
            let global = kron(s.tau_ab1.mat(), s.tau_b2c.mat());
            let marginal = partial_trace(&global, &[0, 3]).unwrap();
            assert!(mix.max_abs_diff(&marginal) < 1e-10);
        }
    }

    #[test]
    fn separable_inputs_stay_local() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let obs = ideal_observables(Scenario::Bsm).unwrap();
        for _ in 0..40 {
            let tau1 = DensityOperator::new(random_separable_two_qubit(&mut rng, 4)).unwrap();
            let tau2 = DensityOperator::new(random_separable_two_qubit(&mut rng, 4)).unwrap();
            // Product-projector measurement in random local bases.
            let u = crate::random::random_unitary(&mut rng, 2);
            let v = crate::random::random_unitary(&mut rng, 2);
            let mut elements = Vec::new();
            for i in 0..2 {
                for j in 0..2 {
                    let pu = CMatrix::outer(
                        &nalgebra::DVector::from_column_slice(
                            u.as_dmatrix().column(i).as_slice(),
                        ),
                        &[2],
                    )
                    .unwrap();
                    let pv = CMatrix::outer(
                        &nalgebra::DVector::from_column_slice(
                            v.as_dmatrix().column(j).as_slice(),
                        ),
                        &[2],
                    )
                    .unwrap();
                    elements.push(kron(&pu, &pv).hermitize());
                }
            }
            let bob =
                Measurement::new(elements, (0..4).map(|b| format!("b={b}")).collect()).unwrap();
            let s = SwapScenario::new(
                tau1,
                tau2,
                bob,
                obs[0].clone(),
                obs[1].clone(),
                BellFamily::Chsh,
            )
            .unwrap();
            let outcomes = run_swap(&s).unwrap();
            let ave = beta_ave_chsh(&outcomes);
            assert!(ave <= 2.0 + 1e-9, "separable inputs gave beta_ave {ave}");
            for o in &outcomes {
                assert!(o.beta.abs() <= 2.0 + 1e-9);
            }
        }
    }

    #[test]
    fn zero_probability_outcomes_are_flagged_degenerate() {
        // A valid measurement may contain zero elements; those outcomes
        // never fire and must be flagged rather than divided by.
        let mut s = SwapScenario::ideal_bsm();
        let zero = CMatrix::zeros(&[2, 2]);
        let elements = vec![
            CMatrix::identity(&[2, 2]),
            zero.clone(),
            zero.clone(),
            zero,
        ];
        s.bob = Measurement::new(elements, (0..4).map(|b| format!("b={b}")).collect()).unwrap();
        let outcomes = run_swap(&s).unwrap();
        assert!((outcomes[0].p - 1.0).abs() < 1e-12);
        for o in &outcomes[1..] {
            assert!(o.degenerate);
            assert!(o.state.is_none());
            assert_eq!(o.beta, 0.0);
        }
        // The degenerate outcomes contribute the worst case with weight 0.
        let ave = beta_ave_chsh(&outcomes);
        assert!((ave - outcomes[0].beta).abs() < 1e-12);
    }

    #[test]
    fn ancilla_embedding_preserves_statistics() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let anc_vec = random_state_vector(&mut rng, 2);
        let anc = DensityOperator::pure(&anc_vec, &[2]).unwrap();
        let base = SwapScenario::ideal_bsm();
        let embedded = base
            .with_alice_ancilla(&anc)
            .unwrap()
            .with_charlie_ancilla(&anc)
            .unwrap();
        let outcomes = run_swap(&embedded).unwrap();
        for o in &outcomes {
            assert!((o.p - 0.25).abs() < 1e-12);
            assert!((o.beta - 2.0 * SQRT_2).abs() < 1e-10);
        }
    }
}
