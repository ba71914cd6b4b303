//! Seeded random operator ensembles.
//!
//! Used by the runtime verification suites and the tests; every consumer
//! passes an explicit RNG, there is no global state.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::qlinalg::{kron, CMatrix};
use crate::qobjects::{pauli_x, pauli_y, pauli_z};

fn normal(rng: &mut impl Rng) -> f64 {
    rng.sample(StandardNormal)
}

/// Square matrix with i.i.d. standard complex Gaussian entries.
pub fn random_ginibre(rng: &mut impl Rng, n: usize) -> DMatrix<Complex64> {
    DMatrix::from_fn(n, n, |_, _| Complex64::new(normal(rng), normal(rng)))
}

/// Unnormalized positive semidefinite matrix G G^dag.
pub fn random_psd(rng: &mut impl Rng, n: usize) -> CMatrix {
    let g = random_ginibre(rng, n);
    CMatrix::new(&g * g.adjoint(), &[n]).expect("square by construction")
}

/// Unit-trace density matrix from the Ginibre ensemble.
pub fn random_density(rng: &mut impl Rng, n: usize) -> CMatrix {
    let p = random_psd(rng, n);
    let t = p.trace_re();
    p.scale(1.0 / t)
}

/// Random Hermitian matrix (G + G^dag)/2.
pub fn random_hermitian(rng: &mut impl Rng, n: usize) -> CMatrix {
    let g = random_ginibre(rng, n);
    CMatrix::new((&g + g.adjoint()) * Complex64::new(0.5, 0.0), &[n]).expect("square")
}

/// Haar-like random unitary from the QR decomposition of a Ginibre matrix.
pub fn random_unitary(rng: &mut impl Rng, n: usize) -> CMatrix {
    let g = random_ginibre(rng, n);
    let q = g.qr().q();
    CMatrix::new(q, &[n]).expect("square")
}

/// Random unit vector.
pub fn random_state_vector(rng: &mut impl Rng, n: usize) -> DVector<Complex64> {
    let v = DVector::from_fn(n, |_, _| Complex64::new(normal(rng), normal(rng)));
    let nrm = v.norm();
    v / Complex64::new(nrm, 0.0)
}

/// Traceless qubit observable n.sigma for a uniform Bloch direction.
pub fn random_bloch_observable(rng: &mut impl Rng) -> CMatrix {
    let (x, y, z) = loop {
        let x = normal(rng);
        let y = normal(rng);
        let z = normal(rng);
        let r = (x * x + y * y + z * z).sqrt();
        if r > 1e-6 {
            break (x / r, y / r, z / r);
        }
    };
    pauli_x()
        .scale(x)
        .add(&pauli_y().scale(y))
        .add(&pauli_z().scale(z))
}

/// Anticommuting unit-spectrum pair on dimension 2k: a random unitary
/// conjugation of (sigma_x (x) 1_k, sigma_z (x) 1_k).
pub fn random_anticommuting_pair(rng: &mut impl Rng, half_dim: usize) -> (CMatrix, CMatrix) {
    let u = random_unitary(rng, 2 * half_dim);
    let ik = CMatrix::identity(&[half_dim]);
    let base_x = kron(&pauli_x(), &ik).with_dims(&[2 * half_dim]).unwrap();
    let base_z = kron(&pauli_z(), &ik).with_dims(&[2 * half_dim]).unwrap();
    let x = u.mul(&base_x).mul(&u.adjoint());
    let z = u.mul(&base_z).mul(&u.adjoint());
    (x.hermitize(), z.hermitize())
}

/// Random POVM with `outcomes` elements on dimension n:
/// E_i = S^{-1/2} G_i S^{-1/2} for random PSD G_i and S their sum.
pub fn random_povm(rng: &mut impl Rng, n: usize, outcomes: usize) -> Vec<CMatrix> {
    let gs: Vec<CMatrix> = (0..outcomes).map(|_| random_psd(rng, n)).collect();
    let mut s = CMatrix::zeros(&[n]);
    for g in &gs {
        s = s.add(g);
    }
    let s_inv_sqrt = crate::qlinalg::inv_sqrt(&s.hermitize(), 1e-12).expect("sum is PD");
    gs.iter()
        .map(|g| s_inv_sqrt.mul(g).mul(&s_inv_sqrt).hermitize())
        .collect()
}

/// Separable two-qubit state: a random mixture of random product projectors.
pub fn random_separable_two_qubit(rng: &mut impl Rng, terms: usize) -> CMatrix {
    let mut acc = CMatrix::zeros(&[2, 2]);
    let mut weights: Vec<f64> = (0..terms).map(|_| rng.random::<f64>() + 1e-3).collect();
    let total: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= total;
    }
    for &w in &weights {
        let a = random_state_vector(rng, 2);
        let b = random_state_vector(rng, 2);
        let pa = CMatrix::outer(&a, &[2]).unwrap();
        let pb = CMatrix::outer(&b, &[2]).unwrap();
        acc = acc.add(&kron(&pa, &pb).scale(w));
    }
    acc.hermitize()
}
