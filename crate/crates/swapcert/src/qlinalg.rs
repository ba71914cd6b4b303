//! Dense complex linear algebra over small tensor-product Hilbert spaces.
//!
//! All operators are square matrices of total dimension at most 64 carrying
//! an explicit list of tensor-factor dimensions, so Kronecker structure,
//! partial traces and factor permutations are first-class operations.
//! Eigendecomposition is delegated to nalgebra's Hermitian solver; matrix
//! functions are spectral. Values are immutable after construction and safe
//! to share across threads.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::{Error, Result};

/// Default cutoff below which an eigenvalue is treated as zero by the
/// singular-eigenvalue policies. Matches the noise floor of the double
/// precision eigensolver at dimension <= 64.
pub const ZERO_TOL: f64 = 1e-10;

/// Hermiticity assertion threshold used by the spectral routines.
pub const HERM_TOL: f64 = 1e-10;

pub type C64 = Complex64;

pub(crate) fn cr(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// Square complex matrix with an explicit tensor factorization.
///
/// `dims` always multiplies to the matrix dimension; a matrix constructed
/// without an explicit factorization carries the trivial single factor.
#[derive(Clone, Debug, PartialEq)]
pub struct CMatrix {
    data: DMatrix<C64>,
    dims: Vec<usize>,
}

impl CMatrix {
    /// Wrap a square nalgebra matrix, declaring its tensor factors.
    pub fn new(data: DMatrix<C64>, dims: &[usize]) -> Result<Self> {
        if data.nrows() != data.ncols() {
            return Err(Error::DimMismatch(format!(
                "expected square matrix, got {}x{}",
                data.nrows(),
                data.ncols()
            )));
        }
        check_dims(dims, data.nrows())?;
        Ok(Self {
            data,
            dims: dims.to_vec(),
        })
    }

    /// Matrix from a row-major slice of complex entries.
    pub fn from_row_slice(dims: &[usize], entries: &[C64]) -> Result<Self> {
        let n: usize = dims.iter().product();
        if entries.len() != n * n {
            return Err(Error::DimMismatch(format!(
                "expected {} entries, got {}",
                n * n,
                entries.len()
            )));
        }
        Self::new(DMatrix::from_row_slice(n, n, entries), dims)
    }

    /// Matrix from a row-major slice of real entries.
    pub fn from_real_row_slice(dims: &[usize], entries: &[f64]) -> Result<Self> {
        let complex: Vec<C64> = entries.iter().map(|&x| cr(x)).collect();
        Self::from_row_slice(dims, &complex)
    }

    pub fn zeros(dims: &[usize]) -> Self {
        let n: usize = dims.iter().product();
        Self {
            data: DMatrix::zeros(n, n),
            dims: dims.to_vec(),
        }
    }

    pub fn identity(dims: &[usize]) -> Self {
        let n: usize = dims.iter().product();
        Self {
            data: DMatrix::identity(n, n),
            dims: dims.to_vec(),
        }
    }

    /// Diagonal matrix from real values.
    pub fn from_real_diagonal(dims: &[usize], diag: &[f64]) -> Result<Self> {
        let n: usize = dims.iter().product();
        if diag.len() != n {
            return Err(Error::DimMismatch(format!(
                "diagonal of length {} for dimension {}",
                diag.len(),
                n
            )));
        }
        let mut m = DMatrix::zeros(n, n);
        for (i, &x) in diag.iter().enumerate() {
            m[(i, i)] = cr(x);
        }
        Self::new(m, dims)
    }

    /// Rank-1 operator |v><v| from a state vector.
    pub fn outer(v: &DVector<C64>, dims: &[usize]) -> Result<Self> {
        let n: usize = dims.iter().product();
        if v.len() != n {
            return Err(Error::DimMismatch(format!(
                "vector of length {} for dimension {}",
                v.len(),
                n
            )));
        }
        Self::new(v * v.adjoint(), dims)
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    /// Re-declare the tensor factorization without touching the entries.
    pub fn with_dims(&self, dims: &[usize]) -> Result<Self> {
        check_dims(dims, self.dim())?;
        Ok(Self {
            data: self.data.clone(),
            dims: dims.to_vec(),
        })
    }

    pub fn at(&self, i: usize, j: usize) -> C64 {
        self.data[(i, j)]
    }

    pub fn as_dmatrix(&self) -> &DMatrix<C64> {
        &self.data
    }

    pub fn trace(&self) -> C64 {
        self.data.trace()
    }

    pub fn trace_re(&self) -> f64 {
        self.trace().re
    }

    pub fn adjoint(&self) -> Self {
        Self {
            data: self.data.adjoint(),
            dims: self.dims.clone(),
        }
    }

    pub fn transpose(&self) -> Self {
        Self {
            data: self.data.transpose(),
            dims: self.dims.clone(),
        }
    }

    pub fn conjugate(&self) -> Self {
        Self {
            data: self.data.conjugate(),
            dims: self.dims.clone(),
        }
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            data: &self.data * cr(s),
            dims: self.dims.clone(),
        }
    }

    pub fn scale_c(&self, s: C64) -> Self {
        Self {
            data: &self.data * s,
            dims: self.dims.clone(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.dim(), other.dim(), "dimension mismatch in add");
        Self {
            data: &self.data + &other.data,
            dims: self.dims.clone(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!(self.dim(), other.dim(), "dimension mismatch in sub");
        Self {
            data: &self.data - &other.data,
            dims: self.dims.clone(),
        }
    }

    pub fn neg(&self) -> Self {
        self.scale(-1.0)
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.dim(), other.dim(), "dimension mismatch in mul");
        Self {
            data: &self.data * &other.data,
            dims: self.dims.clone(),
        }
    }

    /// Explicit symmetrization (M + M^dag)/2. Hermiticity is asserted by the
    /// spectral routines, never applied silently; callers decide when drift
    /// is legitimate and symmetrize through this helper.
    pub fn hermitize(&self) -> Self {
        Self {
            data: (&self.data + self.data.adjoint()) * cr(0.5),
            dims: self.dims.clone(),
        }
    }

    /// Max-entry distance from Hermiticity, max_ij |M - M^dag|.
    pub fn herm_residual(&self) -> f64 {
        let adj = self.data.adjoint();
        let mut r: f64 = 0.0;
        for i in 0..self.dim() {
            for j in 0..self.dim() {
                r = r.max((self.data[(i, j)] - adj[(i, j)]).norm());
            }
        }
        r
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.herm_residual() < tol
    }

    /// Largest entry magnitude of the difference.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.dim(), other.dim(), "dimension mismatch in diff");
        let mut r: f64 = 0.0;
        for i in 0..self.dim() {
            for j in 0..self.dim() {
                r = r.max((self.data[(i, j)] - other.data[(i, j)]).norm());
            }
        }
        r
    }

    /// Frobenius distance.
    pub fn frob_dist(&self, other: &Self) -> f64 {
        assert_eq!(self.dim(), other.dim(), "dimension mismatch in diff");
        (&self.data - &other.data).norm()
    }

    pub fn frob_norm(&self) -> f64 {
        self.data.norm()
    }
}

fn check_dims(dims: &[usize], n: usize) -> Result<()> {
    if dims.is_empty() || dims.contains(&0) {
        return Err(Error::InvalidFactors(
            "factor list must be non-empty with positive entries".into(),
        ));
    }
    let prod: usize = dims.iter().product();
    if prod != n {
        return Err(Error::InvalidFactors(format!(
            "factors {:?} multiply to {}, matrix dimension is {}",
            dims, prod, n
        )));
    }
    Ok(())
}

fn strides(dims: &[usize]) -> Vec<usize> {
    let mut s = vec![1usize; dims.len()];
    for i in (0..dims.len().saturating_sub(1)).rev() {
        s[i] = s[i + 1] * dims[i + 1];
    }
    s
}

fn decompose(mut flat: usize, dims: &[usize]) -> Vec<usize> {
    let s = strides(dims);
    let mut mi = vec![0usize; dims.len()];
    for i in 0..dims.len() {
        mi[i] = flat / s[i];
        flat %= s[i];
    }
    mi
}

/// Kronecker product; factor lists concatenate.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let mut dims = a.dims.clone();
    dims.extend_from_slice(&b.dims);
    CMatrix {
        data: a.data.kronecker(&b.data),
        dims,
    }
}

/// Kronecker product of a list, left to right.
pub fn kron_all(ms: &[&CMatrix]) -> CMatrix {
    assert!(!ms.is_empty(), "kron_all over an empty list");
    let mut acc = ms[0].clone();
    for m in &ms[1..] {
        acc = kron(&acc, m);
    }
    acc
}

/// Partial trace keeping the listed factors (0-based, strictly increasing
/// output order follows `keep`). The trace of the input is preserved.
pub fn partial_trace(m: &CMatrix, keep: &[usize]) -> Result<CMatrix> {
    let k = m.dims.len();
    if keep.iter().any(|&i| i >= k) {
        return Err(Error::InvalidFactors(format!(
            "keep set {:?} out of range for {} factors",
            keep, k
        )));
    }
    let mut seen = vec![false; k];
    for &i in keep {
        if seen[i] {
            return Err(Error::InvalidFactors(format!(
                "keep set {:?} repeats a factor",
                keep
            )));
        }
        seen[i] = true;
    }
    let traced: Vec<usize> = (0..k).filter(|i| !seen[*i]).collect();

    let out_dims: Vec<usize> = if keep.is_empty() {
        vec![1]
    } else {
        keep.iter().map(|&i| m.dims[i]).collect()
    };
    let out_n: usize = out_dims.iter().product();
    let tr_count: usize = traced.iter().map(|&i| m.dims[i]).product();

    let s = strides(&m.dims);
    let kept_dims: Vec<usize> = keep.iter().map(|&i| m.dims[i]).collect();
    let traced_dims: Vec<usize> = traced.iter().map(|&i| m.dims[i]).collect();

    // Flat offsets contributed by the kept part and by the traced part.
    let kept_offset = |flat_keep: usize| -> usize {
        if keep.is_empty() {
            return 0;
        }
        let mi = decompose(flat_keep, &kept_dims);
        keep.iter().zip(mi.iter()).map(|(&f, &x)| x * s[f]).sum()
    };
    let traced_offset = |flat_tr: usize| -> usize {
        if traced.is_empty() {
            return 0;
        }
        let mi = decompose(flat_tr, &traced_dims);
        traced.iter().zip(mi.iter()).map(|(&f, &x)| x * s[f]).sum()
    };

    let kept_offsets: Vec<usize> = (0..out_n).map(kept_offset).collect();
    let traced_offsets: Vec<usize> = (0..tr_count).map(traced_offset).collect();

    let mut out = DMatrix::zeros(out_n, out_n);
    for (r, &ro) in kept_offsets.iter().enumerate() {
        for (cix, &co) in kept_offsets.iter().enumerate() {
            let mut acc = C64::new(0.0, 0.0);
            for &to in &traced_offsets {
                acc += m.data[(ro + to, co + to)];
            }
            out[(r, cix)] = acc;
        }
    }
    CMatrix::new(out, &out_dims)
}

/// Reorder tensor factors: factor `p` of the result is factor `perm[p]` of
/// the input. The spectrum is unchanged.
pub fn permute_factors(m: &CMatrix, perm: &[usize]) -> Result<CMatrix> {
    let k = m.dims.len();
    if perm.len() != k {
        return Err(Error::InvalidFactors(format!(
            "permutation {:?} has wrong length for {} factors",
            perm, k
        )));
    }
    let mut seen = vec![false; k];
    for &p in perm {
        if p >= k || seen[p] {
            return Err(Error::InvalidFactors(format!(
                "{:?} is not a permutation of 0..{}",
                perm, k
            )));
        }
        seen[p] = true;
    }

    let new_dims: Vec<usize> = perm.iter().map(|&p| m.dims[p]).collect();
    let old_strides = strides(&m.dims);
    let n = m.dim();

    // map[new_flat] = old_flat
    let mut map = vec![0usize; n];
    for (new_flat, item) in map.iter_mut().enumerate() {
        let nm = decompose(new_flat, &new_dims);
        let mut old_flat = 0usize;
        for (p, &src) in perm.iter().enumerate() {
            old_flat += nm[p] * old_strides[src];
        }
        *item = old_flat;
    }

    let mut out = DMatrix::zeros(n, n);
    for r in 0..n {
        for cix in 0..n {
            out[(r, cix)] = m.data[(map[r], map[cix])];
        }
    }
    CMatrix::new(out, &new_dims)
}

/// Hermitian eigendecomposition, eigenvalues sorted descending.
#[derive(Clone, Debug)]
pub struct Spectrum {
    /// Real eigenvalues, descending.
    pub eigenvalues: Vec<f64>,
    /// Unitary matrix whose columns are the corresponding eigenvectors.
    pub eigenvectors: DMatrix<C64>,
}

impl Spectrum {
    /// V f(Lambda) V^dag for a function of the eigenvalues.
    pub fn synthesize(&self, f: impl Fn(f64) -> f64, dims: &[usize]) -> Result<CMatrix> {
        let n = self.eigenvalues.len();
        let mut diag = DMatrix::zeros(n, n);
        for (i, &l) in self.eigenvalues.iter().enumerate() {
            diag[(i, i)] = cr(f(l));
        }
        let m = &self.eigenvectors * diag * self.eigenvectors.adjoint();
        CMatrix::new(m, dims)
    }

    /// Column `i` as a state vector.
    pub fn eigenvector(&self, i: usize) -> DVector<C64> {
        DVector::from_column_slice(self.eigenvectors.column(i).as_slice())
    }
}

/// Eigendecomposition of a Hermitian matrix. The input must already be
/// Hermitian within [`HERM_TOL`]; drift is surfaced as an error rather than
/// symmetrized away.
pub fn eig_hermitian(m: &CMatrix) -> Result<Spectrum> {
    let residual = m.herm_residual();
    if residual > HERM_TOL {
        return Err(Error::NotHermitian { residual });
    }
    let se = nalgebra::SymmetricEigen::new(m.data.clone());
    let n = m.dim();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        se.eigenvalues[b]
            .partial_cmp(&se.eigenvalues[a])
            .expect("NaN eigenvalue")
    });
    let eigenvalues: Vec<f64> = order.iter().map(|&i| se.eigenvalues[i]).collect();
    let mut eigenvectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        eigenvectors.set_column(dst, &se.eigenvectors.column(src));
    }
    Ok(Spectrum {
        eigenvalues,
        eigenvectors,
    })
}

/// Policy for eigenvalues with |lambda| < zero_tol inside [`mat_func`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ZeroPolicy {
    /// Surface the eigenvalue as an error.
    Error,
    /// Pseudo-inverse style: map the eigenvalue to 0.
    MapToZero,
    /// Regularization style: map the eigenvalue to 1 before applying `f`.
    /// (`f` is applied to the replaced value.)
    MapToOne,
}

/// Spectral matrix function: f applied to the eigenvalues of a Hermitian
/// matrix. Eigenvalues below `zero_tol` in magnitude follow `policy`; a
/// non-finite f-value on a tolerated eigenvalue is an error.
pub fn mat_func(
    m: &CMatrix,
    f: impl Fn(f64) -> f64,
    zero_tol: f64,
    policy: ZeroPolicy,
) -> Result<CMatrix> {
    let spectrum = eig_hermitian(m)?;
    let mut mapped = Vec::with_capacity(spectrum.eigenvalues.len());
    for &l in &spectrum.eigenvalues {
        let y = if l.abs() < zero_tol {
            match policy {
                ZeroPolicy::Error => return Err(Error::UndefinedAtEigenvalue { eigenvalue: l }),
                ZeroPolicy::MapToZero => 0.0,
                ZeroPolicy::MapToOne => f(1.0),
            }
        } else {
            f(l)
        };
        if !y.is_finite() {
            return Err(Error::UndefinedAtEigenvalue { eigenvalue: l });
        }
        mapped.push(y);
    }
    let n = m.dim();
    let mut diag = DMatrix::zeros(n, n);
    for (i, &y) in mapped.iter().enumerate() {
        diag[(i, i)] = cr(y);
    }
    let out = &spectrum.eigenvectors * diag * spectrum.eigenvectors.adjoint();
    CMatrix::new(out, m.dims())
}

/// Inverse square root of a positive definite matrix (error on eigenvalues
/// below `zero_tol`).
pub fn inv_sqrt(m: &CMatrix, zero_tol: f64) -> Result<CMatrix> {
    mat_func(m, |x| 1.0 / x.sqrt(), zero_tol, ZeroPolicy::Error)
}

/// Hilbert-Schmidt pairing Tr(a b) of two Hermitian operators; the imaginary
/// residue (below 1e-10 for Hermitian inputs) is discarded.
pub fn hs_inner(a: &CMatrix, b: &CMatrix) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimMismatch(format!(
            "hs_inner of {}-dim and {}-dim operators",
            a.dim(),
            b.dim()
        )));
    }
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..a.dim() {
        for j in 0..a.dim() {
            acc += a.data[(i, j)] * b.data[(j, i)];
        }
    }
    debug_assert!(
        acc.im.abs() < 1e-10 * acc.re.abs().max(1.0),
        "imaginary residue {:.3e} in hs_inner",
        acc.im
    );
    Ok(acc.re)
}

/// Smallest eigenvalue of a Hermitian matrix.
pub fn min_eig(m: &CMatrix) -> Result<f64> {
    let s = eig_hermitian(m)?;
    Ok(*s.eigenvalues.last().expect("empty spectrum"))
}

/// Largest eigenvalue of a Hermitian matrix.
pub fn max_eig(m: &CMatrix) -> Result<f64> {
    let s = eig_hermitian(m)?;
    Ok(s.eigenvalues[0])
}

/// Rank-1 projector check: Hermitian, idempotent and unit trace within `tol`.
pub fn rank_one_projector_residual(p: &CMatrix) -> f64 {
    let idem = p.mul(p).max_abs_diff(p);
    let tr = (p.trace() - cr(1.0)).norm();
    idem.max(tr).max(p.herm_residual())
}

/// Fidelity of a state with a pure target: for rank-1 `proj` the Uhlmann
/// fidelity reduces to the overlap Tr(rho proj).
pub fn fidelity_with_pure(rho: &CMatrix, proj: &CMatrix) -> Result<f64> {
    let residual = rank_one_projector_residual(proj);
    if residual > 1e-8 {
        return Err(Error::NotRankOneProjector(residual));
    }
    let f = hs_inner(rho, proj)?;
    debug_assert!(
        (-1e-9..=1.0 + 1e-9).contains(&f),
        "fidelity {f} outside [0,1]"
    );
    Ok(f.clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qobjects::{bell_state, pauli_x, pauli_z, werner_source};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_hermitian(rng: &mut ChaCha8Rng, n: usize) -> CMatrix {
        let g = crate::random::random_ginibre(rng, n);
        CMatrix::new(&g + g.adjoint(), &[n]).unwrap()
    }

    #[test]
    fn kron_identities() {
        let i2 = CMatrix::identity(&[2]);
        let i4 = kron(&i2, &i2);
        assert_eq!(i4.dims(), &[2, 2]);
        assert!(i4.max_abs_diff(&CMatrix::identity(&[2, 2])) < 1e-15);

        let zz = kron(&pauli_z(), &pauli_z());
        let expected = CMatrix::from_real_diagonal(&[2, 2], &[1.0, -1.0, -1.0, 1.0]).unwrap();
        assert!(zz.max_abs_diff(&expected) < 1e-15);

        let p0 = CMatrix::from_real_diagonal(&[2], &[1.0, 0.0]).unwrap();
        let p1 = CMatrix::from_real_diagonal(&[2], &[0.0, 1.0]).unwrap();
        let expected = CMatrix::from_real_diagonal(&[2, 2], &[0.0, 1.0, 0.0, 0.0]).unwrap();
        assert!(kron(&p0, &p1).max_abs_diff(&expected) < 1e-15);
    }

    #[test]
    fn partial_trace_basics() {
        // Maximally entangled marginal.
        let phi0 = bell_state(0).unwrap();
        let marg = partial_trace(phi0.mat(), &[0]).unwrap();
        assert!(marg.max_abs_diff(&CMatrix::identity(&[2]).scale(0.5)) < 1e-12);

        // Product rule Tr_B(rho (x) sigma) = rho Tr(sigma).
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let rho = crate::random::random_density(&mut rng, 3);
        let sigma = crate::random::random_psd(&mut rng, 4);
        let prod = kron(&rho, &sigma);
        let back = partial_trace(&prod, &[0]).unwrap();
        assert!(back.max_abs_diff(&rho.scale(sigma.trace_re())) < 1e-12);

        // Trace over everything is the scalar trace.
        let all = partial_trace(&prod, &[]).unwrap();
        assert_eq!(all.dim(), 1);
        assert!((all.at(0, 0) - prod.trace()).norm() < 1e-12);
    }

    #[test]
    fn partial_trace_requires_valid_factors() {
        let m = CMatrix::identity(&[4]);
        assert!(partial_trace(&m, &[1]).is_err());
    }

    #[test]
    fn partial_trace_kron_recovers_factors() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let a = crate::random::random_psd(&mut rng, 2);
            let b = crate::random::random_psd(&mut rng, 3);
            let m = kron(&a, &b);
            let ra = partial_trace(&m, &[0]).unwrap();
            let rb = partial_trace(&m, &[1]).unwrap();
            assert!(ra.max_abs_diff(&a.scale(b.trace_re())) < 1e-10);
            assert!(rb.max_abs_diff(&b.scale(a.trace_re())) < 1e-10);
        }
    }

    #[test]
    fn permute_factor_basics() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = crate::random::random_psd(&mut rng, 2);
        let b = crate::random::random_psd(&mut rng, 3);
        let ab = kron(&a, &b);

        let same = permute_factors(&ab, &[0, 1]).unwrap();
        assert!(same.max_abs_diff(&ab) < 1e-15);

        let ba = permute_factors(&ab, &[1, 0]).unwrap();
        assert!(ba.max_abs_diff(&kron(&b, &a)) < 1e-12);

        let back = permute_factors(&ba, &[1, 0]).unwrap();
        assert!(back.max_abs_diff(&ab) < 1e-15);

        assert!(permute_factors(&ab, &[0, 0]).is_err());
    }

    #[test]
    fn permute_preserves_spectrum() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let m = random_hermitian(&mut rng, 12)
                .with_dims(&[2, 3, 2])
                .unwrap();
            let p = permute_factors(&m, &[2, 0, 1]).unwrap();
            let e1 = eig_hermitian(&m).unwrap().eigenvalues;
            let e2 = eig_hermitian(&p).unwrap().eigenvalues;
            for (x, y) in e1.iter().zip(e2.iter()) {
                assert!((x - y).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn eig_simple_cases() {
        let s = eig_hermitian(&pauli_z()).unwrap();
        assert!((s.eigenvalues[0] - 1.0).abs() < 1e-14);
        assert!((s.eigenvalues[1] + 1.0).abs() < 1e-14);

        let s = eig_hermitian(&CMatrix::identity(&[2, 2])).unwrap();
        assert!(s.eigenvalues.iter().all(|&l| (l - 1.0).abs() < 1e-14));

        let s = eig_hermitian(bell_state(0).unwrap().mat()).unwrap();
        assert!((s.eigenvalues[0] - 1.0).abs() < 1e-12);
        for &l in &s.eigenvalues[1..] {
            assert!(l.abs() < 1e-12);
        }
    }

    #[test]
    fn eig_rejects_non_hermitian() {
        let m = CMatrix::from_real_row_slice(&[2], &[0.0, 1.0, 0.0, 0.0]).unwrap();
        assert!(matches!(
            eig_hermitian(&m),
            Err(Error::NotHermitian { .. })
        ));
    }

    #[test]
    fn eig_reconstruction_residual() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for trial in 0..200 {
            let n = 2 + (trial % 15);
            let m = random_hermitian(&mut rng, n);
            let s = eig_hermitian(&m).unwrap();
            let rec = s.synthesize(|x| x, m.dims()).unwrap();
            assert!(
                rec.frob_dist(&m) < 1e-10 * m.frob_norm().max(1.0),
                "reconstruction residual too large at dim {n}"
            );
        }
    }

    #[test]
    fn mat_func_cases() {
        let d = CMatrix::from_real_diagonal(&[2], &[4.0, 9.0]).unwrap();
        let r = mat_func(&d, f64::sqrt, ZERO_TOL, ZeroPolicy::Error).unwrap();
        let expected = CMatrix::from_real_diagonal(&[2], &[2.0, 3.0]).unwrap();
        assert!(r.max_abs_diff(&expected) < 1e-12);

        let half = CMatrix::identity(&[2]).scale(0.5);
        let r = inv_sqrt(&half, ZERO_TOL).unwrap();
        assert!(r.max_abs_diff(&CMatrix::identity(&[2]).scale(2.0_f64.sqrt())) < 1e-12);

        // Identity function is the identity map.
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let m = random_hermitian(&mut rng, 6);
        let r = mat_func(&m, |x| x, ZERO_TOL, ZeroPolicy::MapToZero).unwrap();
        assert!(r.frob_dist(&m) < 1e-10 * m.frob_norm().max(1.0));

        // Singular policies.
        let sing = CMatrix::from_real_diagonal(&[2], &[0.5, 0.0]).unwrap();
        assert!(mat_func(&sing, |x| 1.0 / x, ZERO_TOL, ZeroPolicy::Error).is_err());
        let pinv = mat_func(&sing, |x| 1.0 / x, ZERO_TOL, ZeroPolicy::MapToZero).unwrap();
        let expected = CMatrix::from_real_diagonal(&[2], &[2.0, 0.0]).unwrap();
        assert!(pinv.max_abs_diff(&expected) < 1e-12);
    }

    #[test]
    fn inv_sqrt_matches_closed_form_coefficients() {
        // nu_A^{-1/2} = a(eta) 1 - b(eta) sigma_z for nu_A = diag((1+eta)/2, (1-eta)/2).
        let eta: f64 = 0.6;
        let nu = CMatrix::from_real_diagonal(&[2], &[(1.0 + eta) / 2.0, (1.0 - eta) / 2.0]).unwrap();
        let direct = inv_sqrt(&nu, ZERO_TOL).unwrap();

        let a = ((1.0 + eta).sqrt() + (1.0 - eta).sqrt()) / (2.0 * (1.0 - eta * eta)).sqrt();
        let b = ((1.0 + eta).sqrt() - (1.0 - eta).sqrt()) / (2.0 * (1.0 - eta * eta)).sqrt();
        let closed = CMatrix::identity(&[2]).scale(a).sub(&pauli_z().scale(b));
        assert!(direct.max_abs_diff(&closed) < 1e-12);

        // Both routes agree with the direct eigenvalue powers.
        assert!((direct.at(0, 0).re - (0.8f64).powf(-0.5)).abs() < 1e-12);
        assert!((direct.at(1, 1).re - (0.2f64).powf(-0.5)).abs() < 1e-12);
    }

    #[test]
    fn hs_inner_cases() {
        let i2 = CMatrix::identity(&[2]);
        assert!((hs_inner(&i2, &i2).unwrap() - 2.0).abs() < 1e-14);

        let phi0 = bell_state(0).unwrap();
        let phi1 = bell_state(1).unwrap();
        assert!((hs_inner(phi0.mat(), phi0.mat()).unwrap() - 1.0).abs() < 1e-12);
        assert!(hs_inner(phi0.mat(), phi1.mat()).unwrap().abs() < 1e-12);

        assert!(hs_inner(&i2, &CMatrix::identity(&[3])).is_err());
    }

    #[test]
    fn min_eig_cases() {
        assert!((min_eig(&CMatrix::identity(&[2])).unwrap() - 1.0).abs() < 1e-14);
        assert!((min_eig(&pauli_z()).unwrap() + 1.0).abs() < 1e-14);
        assert!(min_eig(bell_state(0).unwrap().mat()).unwrap().abs() < 1e-12);
    }

    #[test]
    fn fidelity_with_pure_cases() {
        let phi0 = bell_state(0).unwrap();
        assert!((fidelity_with_pure(phi0.mat(), phi0.mat()).unwrap() - 1.0).abs() < 1e-12);

        let mixed = CMatrix::identity(&[2, 2]).scale(0.25);
        assert!((fidelity_with_pure(&mixed, phi0.mat()).unwrap() - 0.25).abs() < 1e-12);

        let v = 0.83;
        let w = werner_source(v).unwrap();
        assert!(
            (fidelity_with_pure(w.mat(), phi0.mat()).unwrap() - (1.0 + 3.0 * v) / 4.0).abs()
                < 1e-12
        );

        // Not rank one.
        assert!(fidelity_with_pure(&mixed, &mixed).is_err());
        assert!(matches!(
            fidelity_with_pure(phi0.mat(), &CMatrix::identity(&[2, 2]).scale(0.5)),
            Err(Error::NotRankOneProjector(_))
        ));
        let _ = pauli_x();
    }
}
