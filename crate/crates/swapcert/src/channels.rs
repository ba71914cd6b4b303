//! Completely positive maps in Choi form, the swap gate and the extraction
//! channels built from observables.
//!
//! Pairing convention, fixed once for the whole crate: a channel
//! Lambda: L(H_in) -> L(H_out) is stored as its Choi operator C on
//! H_out (x) H_in (output factor first) and applied as
//!
//! ```text
//! Lambda(X) = Tr_in[ (1_out (x) X^T) C ].
//! ```
//!
//! Under this pairing Lambda is completely positive iff C is positive
//! semidefinite, unital iff Tr_in C = 1_out, and its dual is
//! trace-preserving iff Tr_out C = 1_in. A regression test against a
//! brute-force Kraus application pins the transpose placement.

use nalgebra::DMatrix;

use crate::qlinalg::{
    eig_hermitian, inv_sqrt, kron, kron_all, min_eig, partial_trace, permute_factors, CMatrix,
    C64, ZERO_TOL,
};
use crate::qobjects::{DensityOperator, Observable};
use crate::{Error, Result};

/// Residual tolerance for the CP / unital / trace-preserving predicates.
pub const CHANNEL_TOL: f64 = 1e-9;

/// A linear map between operator spaces represented by its Choi operator.
#[derive(Clone, Debug)]
pub struct ChoiChannel {
    choi: CMatrix,
}

impl ChoiChannel {
    /// Wrap a Choi operator; `choi` must carry exactly two factors,
    /// output first.
    pub fn new(choi: CMatrix) -> Result<Self> {
        if choi.dims().len() != 2 {
            return Err(Error::InvalidFactors(format!(
                "Choi operator needs dims [out, in], got {:?}",
                choi.dims()
            )));
        }
        Ok(Self { choi })
    }

    pub fn choi(&self) -> &CMatrix {
        &self.choi
    }

    pub fn out_dim(&self) -> usize {
        self.choi.dims()[0]
    }

    pub fn in_dim(&self) -> usize {
        self.choi.dims()[1]
    }

    /// The identity channel on dimension d (Choi = unnormalized maximally
    /// entangled projector).
    pub fn identity(d: usize) -> Self {
        let mut m = DMatrix::zeros(d * d, d * d);
        for a in 0..d {
            for b in 0..d {
                m[(a * d + a, b * d + b)] = C64::new(1.0, 0.0);
            }
        }
        Self {
            choi: CMatrix::new(m, &[d, d]).expect("square"),
        }
    }

    /// The map X -> Tr(X)/in_dim * 1_out.
    pub fn depolarizing(in_dim: usize, out_dim: usize) -> Self {
        Self {
            choi: CMatrix::identity(&[out_dim, in_dim]).scale(1.0 / in_dim as f64),
        }
    }

    /// Apply the channel to an operator on H_in.
    pub fn apply(&self, x: &CMatrix) -> Result<CMatrix> {
        if x.dim() != self.in_dim() {
            return Err(Error::DimMismatch(format!(
                "channel with in dimension {} applied to {}-dim operator",
                self.in_dim(),
                x.dim()
            )));
        }
        let flat = x.with_dims(&[x.dim()])?;
        choi_tensor_apply(&[self], &flat)
    }

    /// Negative part of the spectrum (0 when CP).
    pub fn cp_residual(&self) -> f64 {
        match min_eig(&self.choi.hermitize()) {
            Ok(lo) => (-lo).max(0.0),
            Err(_) => f64::INFINITY,
        }
    }

    pub fn is_cp(&self, tol: f64) -> bool {
        self.cp_residual() <= tol
    }

    /// Max-entry distance of Tr_in C from 1_out.
    pub fn unital_residual(&self) -> f64 {
        let marg = partial_trace(&self.choi, &[0]).expect("factor 0 exists");
        marg.max_abs_diff(&CMatrix::identity(&[self.out_dim()]))
    }

    pub fn is_unital(&self, tol: f64) -> bool {
        self.unital_residual() <= tol
    }

    /// Max-entry distance of Tr_out C from 1_in (dual trace preservation).
    pub fn tp_residual(&self) -> f64 {
        let marg = partial_trace(&self.choi, &[1]).expect("factor 1 exists");
        marg.max_abs_diff(&CMatrix::identity(&[self.in_dim()]))
    }

    pub fn is_trace_preserving(&self, tol: f64) -> bool {
        self.tp_residual() <= tol
    }

    /// Error unless the channel is CP and unital within [`CHANNEL_TOL`].
    pub fn require_cp_unital(&self) -> Result<()> {
        let cp = self.cp_residual();
        if cp > CHANNEL_TOL {
            return Err(Error::ChannelPredicate {
                predicate: "completely-positive",
                residual: cp,
            });
        }
        let un = self.unital_residual();
        if un > CHANNEL_TOL {
            return Err(Error::ChannelPredicate {
                predicate: "unital",
                residual: un,
            });
        }
        Ok(())
    }

    /// Kraus operators (out_dim x in_dim matrices) from the eigenvectors of
    /// the Choi operator. Eigenvalues below -1e-9 are an error; small
    /// negative noise is dropped.
    pub fn kraus_operators(&self) -> Result<Vec<DMatrix<C64>>> {
        let spectrum = eig_hermitian(&self.choi.hermitize())?;
        let (o, i) = (self.out_dim(), self.in_dim());
        let mut ops = Vec::new();
        for (k, &l) in spectrum.eigenvalues.iter().enumerate() {
            if l < -CHANNEL_TOL {
                return Err(Error::ChannelPredicate {
                    predicate: "completely-positive",
                    residual: -l,
                });
            }
            if l <= 1e-12 {
                continue;
            }
            let v = spectrum.eigenvector(k);
            let mut kmat = DMatrix::zeros(o, i);
            for a in 0..o {
                for b in 0..i {
                    kmat[(a, b)] = v[a * i + b] * C64::new(l.sqrt(), 0.0);
                }
            }
            ops.push(kmat);
        }
        Ok(ops)
    }
}

/// Sign regularization r(O) |r(O)|^{-1}: eigenvalues within `zero_tol` of
/// zero are replaced by +1, all others by their sign. The result squares to
/// the identity up to eigensolver residual.
pub fn regularize(o: &CMatrix, zero_tol: f64) -> Result<Observable> {
    let spectrum = eig_hermitian(o)?;
    let n = o.dim();
    let mut diag = DMatrix::zeros(n, n);
    for (i, &l) in spectrum.eigenvalues.iter().enumerate() {
        let y = if l.abs() < zero_tol { 1.0 } else { l.signum() };
        diag[(i, i)] = C64::new(y, 0.0);
    }
    let m = &spectrum.eigenvectors * diag * spectrum.eigenvectors.adjoint();
    Observable::new(CMatrix::new(m, o.dims())?.hermitize())
}

/// Regularized formal Pauli from a raw Hermitian combination, at the default
/// zero tolerance.
pub fn formal_pauli(raw: &CMatrix) -> Result<Observable> {
    regularize(raw, ZERO_TOL)
}

/// The swap gate S_{X,Z} on H' (x) H, H' a fresh qubit:
///
/// ```text
/// S(|0>|psi>) = [ (1+Z)|0>|psi> + X(1-Z)|1>|psi> ] / 2
/// S(|1>|psi>) = [ X(1+Z)|0>|psi> + (1-Z)|1>|psi> ] / 2
/// ```
///
/// For unit-spectrum anticommuting X, Z the gate is unitary; X = sigma_x,
/// Z = sigma_z on a qubit gives the ordinary SWAP.
pub fn swap_gate(x: &Observable, z: &Observable) -> Result<CMatrix> {
    if x.dim() != z.dim() {
        return Err(Error::DimMismatch(format!(
            "X on dim {}, Z on dim {}",
            x.dim(),
            z.dim()
        )));
    }
    let n = x.dim();
    let id = CMatrix::identity(&[n]);
    let plus = id.add(z.mat()).scale(0.5);
    let minus = id.sub(z.mat()).scale(0.5);
    let e = |i: usize, j: usize| -> CMatrix {
        let mut m = DMatrix::zeros(2, 2);
        m[(i, j)] = C64::new(1.0, 0.0);
        CMatrix::new(m, &[2]).expect("2x2")
    };
    let s = kron(&e(0, 0), &plus)
        .add(&kron(&e(1, 0), &x.mat().mul(&minus)))
        .add(&kron(&e(0, 1), &x.mat().mul(&plus)))
        .add(&kron(&e(1, 1), &minus));
    Ok(s)
}

/// Extraction channel rho -> Tr_H[ S (|0><0| (x) rho) S^dag ] onto a fresh
/// qubit, globally renormalized to trace preservation. Returns the channel
/// and the pre-normalization trace deficit |Tr C - in_dim| (zero whenever
/// X^2 = Z^2 = 1, regularized inputs included).
pub fn swap_channel(x: &Observable, z: &Observable) -> Result<(ChoiChannel, f64)> {
    let s = swap_gate(x, z)?;
    let n = x.dim();
    let sdag = s.adjoint();
    let ket0 = {
        let mut m = DMatrix::zeros(2, 2);
        m[(0, 0)] = C64::new(1.0, 0.0);
        CMatrix::new(m, &[2]).expect("2x2")
    };

    // Choi entries C[(a,i),(a',i')] = Lambda(|i><i'|)[a,a'].
    let mut choi = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        for ip in 0..n {
            let mut unit = DMatrix::zeros(n, n);
            unit[(i, ip)] = C64::new(1.0, 0.0);
            let unit = CMatrix::new(unit, &[n]).expect("square");
            let embedded = kron(&ket0, &unit);
            let rotated = s.mul(&embedded).mul(&sdag);
            let out = partial_trace(&rotated, &[0])?;
            for a in 0..2 {
                for ap in 0..2 {
                    choi[(a * n + i, ap * n + ip)] = out.at(a, ap);
                }
            }
        }
    }
    let choi = CMatrix::new(choi, &[2, n])?.hermitize();
    let tr = choi.trace_re();
    let deficit = (tr - n as f64).abs();
    if tr.abs() < 1e-12 {
        return Err(Error::ChannelPredicate {
            predicate: "trace-preserving",
            residual: deficit,
        });
    }
    let normalized = choi.scale(n as f64 / tr);
    Ok((ChoiChannel::new(normalized)?, deficit))
}

/// Apply a Choi channel to an operator (free-function form).
pub fn choi_apply(ch: &ChoiChannel, x: &CMatrix) -> Result<CMatrix> {
    ch.apply(x)
}

/// Apply a tensor product of channels to a joint operator whose k-th factor
/// is the in-space of `chs[k]`. Output factors follow the channel order.
pub fn choi_tensor_apply(chs: &[&ChoiChannel], omega: &CMatrix) -> Result<CMatrix> {
    if chs.is_empty() {
        return Err(Error::InvalidArgument("no channels".into()));
    }
    let k = chs.len();
    if omega.dims().len() != k {
        return Err(Error::DimMismatch(format!(
            "{}-factor operator for {} channels",
            omega.dims().len(),
            k
        )));
    }
    for (idx, ch) in chs.iter().enumerate() {
        if omega.dims()[idx] != ch.in_dim() {
            return Err(Error::DimMismatch(format!(
                "factor {} has dim {}, channel expects {}",
                idx,
                omega.dims()[idx],
                ch.in_dim()
            )));
        }
    }

    let chois: Vec<&CMatrix> = chs.iter().map(|c| c.choi()).collect();
    let big = kron_all(&chois); // dims [o1, i1, o2, i2, ...]
    let mut perm = Vec::with_capacity(2 * k);
    perm.extend((0..k).map(|p| 2 * p));
    perm.extend((0..k).map(|p| 2 * p + 1));
    let grouped = permute_factors(&big, &perm)?; // dims [outs..., ins...]

    let out_dims: Vec<usize> = chs.iter().map(|c| c.out_dim()).collect();
    let lhs = kron(&CMatrix::identity(&out_dims), &omega.transpose());
    let prod = lhs.mul(&grouped);
    let keep: Vec<usize> = (0..k).collect();
    partial_trace(&prod, &keep)
}

/// Choi channel `scale * sigma` from a bipartite state ordered
/// (output, input). Unital exactly when scale * sigma_out = 1_out.
pub fn choi_from_state(sigma: &DensityOperator, scale: f64) -> Result<ChoiChannel> {
    if sigma.dims().len() != 2 {
        return Err(Error::InvalidFactors(format!(
            "need a bipartite state, got dims {:?}",
            sigma.dims()
        )));
    }
    if scale <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "scale {scale} must be positive"
        )));
    }
    ChoiChannel::new(sigma.mat().scale(scale))
}

/// The robust Choi pair built from the extracted source states
/// sigma_{A'B1} (dims [2, dB1]) and sigma_{B2C'} (dims [dB2, 2]):
///
/// ```text
/// lambda_{A'B1}^T = (sigma_{A'}^{-1/2} (x) 1) sigma_{A'B1} (sigma_{A'}^{-1/2} (x) 1)
/// lambda_{B2C'}^T = 2/(1+eta_C') sigma_{B2C'}
///                 + sigma_{B2} (x) (1 - 2/(1+eta_C') sigma_{C'})
/// ```
///
/// with eta_C' read from the spectrum of sigma_{C'}. Both Choi operators are
/// validated CP and unital before returning. At eta = 0 (uniform marginals)
/// both reduce to `choi_from_state(sigma, 2)`.
pub fn robust_choi_pair(
    sigma_ab1: &DensityOperator,
    sigma_b2c: &DensityOperator,
) -> Result<(ChoiChannel, ChoiChannel)> {
    if sigma_ab1.dims().len() != 2 || sigma_b2c.dims().len() != 2 {
        return Err(Error::InvalidFactors(
            "robust pair needs bipartite inputs".into(),
        ));
    }
    if sigma_ab1.dims()[0] != 2 || sigma_b2c.dims()[1] != 2 {
        return Err(Error::InvalidFactors(
            "extracted factors must be qubits (A' first, C' second)".into(),
        ));
    }

    // First channel: rescale by the inverse square root of the A' marginal.
    let sigma_a = partial_trace(sigma_ab1.mat(), &[0])?.hermitize();
    let lo_a = min_eig(&sigma_a)?;
    if lo_a <= 1e-8 {
        return Err(Error::RankDeficientMarginal(lo_a));
    }
    let d_b1 = sigma_ab1.dims()[1];
    let rescale = kron(&inv_sqrt(&sigma_a, 1e-12)?, &CMatrix::identity(&[d_b1]));
    let lambda1_t = rescale.mul(sigma_ab1.mat()).mul(&rescale).hermitize();
    let choi1 = ChoiChannel::new(lambda1_t.transpose().with_dims(&[2, d_b1])?)?;

    // Second channel: convex completion against the B2 marginal.
    let sigma_c = partial_trace(sigma_b2c.mat(), &[1])?.hermitize();
    let spec_c = eig_hermitian(&sigma_c)?;
    let lo_c = *spec_c.eigenvalues.last().expect("qubit marginal");
    if lo_c <= 1e-8 {
        return Err(Error::RankDeficientMarginal(lo_c));
    }
    let eta_c = spec_c.eigenvalues[0] - lo_c;
    let sigma_b2 = partial_trace(sigma_b2c.mat(), &[0])?.hermitize();
    let coeff = 2.0 / (1.0 + eta_c);
    let lambda2_t = sigma_b2c
        .mat()
        .scale(coeff)
        .add(&kron(
            &sigma_b2,
            &CMatrix::identity(&[2]).sub(&sigma_c.scale(coeff)),
        ))
        .hermitize();
    let reordered = permute_factors(&lambda2_t, &[1, 0])?; // (C', B2)
    let choi2 = ChoiChannel::new(reordered.transpose())?;

    choi1.require_cp_unital()?;
    choi2.require_cp_unital()?;
    Ok((choi1, choi2))
}

/// Marginal bias eta of a qubit state: spec = {(1 +- eta)/2}.
pub fn marginal_bias(qubit_state: &CMatrix) -> Result<f64> {
    if qubit_state.dim() != 2 {
        return Err(Error::DimMismatch(format!(
            "bias of a {}-dim operator",
            qubit_state.dim()
        )));
    }
    let spectrum = eig_hermitian(qubit_state)?;
    Ok(spectrum.eigenvalues[0] - spectrum.eigenvalues[1])
}
