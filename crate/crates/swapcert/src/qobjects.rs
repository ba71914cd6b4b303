//! Concrete states, observables, measurement bases, Bell operators and noise
//! models for the swap-network scenarios.
//!
//! Three scenario families are shipped: the Bell-state measurement with CHSH
//! statistics, its tilted variant with tilted-CHSH statistics, and the GHZ
//! measurement on a three-source star with Mermin statistics.

use std::f64::consts::{FRAC_PI_4, SQRT_2};
use std::fmt;

use nalgebra::DVector;

use crate::qlinalg::{
    self, eig_hermitian, kron, min_eig, partial_trace, CMatrix, C64, HERM_TOL,
};
use crate::{Error, Result};

pub fn pauli_x() -> CMatrix {
    CMatrix::from_real_row_slice(&[2], &[0.0, 1.0, 1.0, 0.0]).expect("static")
}

pub fn pauli_y() -> CMatrix {
    CMatrix::from_row_slice(
        &[2],
        &[
            C64::new(0.0, 0.0),
            C64::new(0.0, -1.0),
            C64::new(0.0, 1.0),
            C64::new(0.0, 0.0),
        ],
    )
    .expect("static")
}

pub fn pauli_z() -> CMatrix {
    CMatrix::from_real_row_slice(&[2], &[1.0, 0.0, 0.0, -1.0]).expect("static")
}

/// Computational basis ket |index> in dimension n.
pub fn basis_ket(index: usize, n: usize) -> DVector<C64> {
    let mut v = DVector::zeros(n);
    v[index] = C64::new(1.0, 0.0);
    v
}

/// Positive semidefinite unit-trace operator with explicit factorization.
#[derive(Clone, Debug)]
pub struct DensityOperator {
    mat: CMatrix,
}

impl DensityOperator {
    /// Validate Hermiticity, positivity (min eigenvalue >= -1e-10) and unit
    /// trace (within 1e-10).
    pub fn new(mat: CMatrix) -> Result<Self> {
        let res = mat.herm_residual();
        if res > HERM_TOL {
            return Err(Error::InvalidState(format!(
                "not Hermitian (residual {res:.3e})"
            )));
        }
        let lo = min_eig(&mat)?;
        if lo < -1e-10 {
            return Err(Error::InvalidState(format!(
                "not positive semidefinite (min eigenvalue {lo:.3e})"
            )));
        }
        let tr = mat.trace();
        if (tr - C64::new(1.0, 0.0)).norm() > 1e-10 {
            return Err(Error::InvalidState(format!("trace {tr} is not 1")));
        }
        Ok(Self { mat })
    }

    /// Projector onto a (normalized) state vector.
    pub fn pure(v: &DVector<C64>, dims: &[usize]) -> Result<Self> {
        let nrm = v.norm();
        if (nrm - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidState(format!("vector norm {nrm} is not 1")));
        }
        Self::new(CMatrix::outer(v, dims)?)
    }

    pub fn mat(&self) -> &CMatrix {
        &self.mat
    }

    pub fn dims(&self) -> &[usize] {
        self.mat.dims()
    }

    pub fn dim(&self) -> usize {
        self.mat.dim()
    }

    /// Reduced state on the kept factors.
    pub fn marginal(&self, keep: &[usize]) -> Result<DensityOperator> {
        DensityOperator::new(partial_trace(&self.mat, keep)?.hermitize())
    }

    pub fn fidelity_with_pure(&self, proj: &CMatrix) -> Result<f64> {
        qlinalg::fidelity_with_pure(&self.mat, proj)
    }
}

/// Hermitian operator used as a +-1-valued measurement setting. Unit
/// spectrum is not enforced at construction; the channel builders regularize
/// first and [`Observable::unit_spectrum_residual`] reports the drift.
#[derive(Clone, Debug)]
pub struct Observable {
    mat: CMatrix,
}

impl Observable {
    pub fn new(mat: CMatrix) -> Result<Self> {
        let res = mat.herm_residual();
        if res > HERM_TOL {
            return Err(Error::NotHermitian { residual: res });
        }
        Ok(Self { mat })
    }

    pub fn mat(&self) -> &CMatrix {
        &self.mat
    }

    pub fn dim(&self) -> usize {
        self.mat.dim()
    }

    /// Max-entry distance of O^2 from the identity.
    pub fn unit_spectrum_residual(&self) -> f64 {
        self.mat
            .mul(&self.mat)
            .max_abs_diff(&CMatrix::identity(self.mat.dims()))
    }

    /// The observable acting on an enlarged space, O (x) 1_anc.
    pub fn embed_with_ancilla(&self, anc_dim: usize) -> Observable {
        let total = self.dim() * anc_dim;
        Observable {
            mat: kron(&self.mat, &CMatrix::identity(&[anc_dim]))
                .with_dims(&[total])
                .expect("product dimension"),
        }
    }
}

/// Ordered list of positive operators summing to identity on a declared
/// factorization.
#[derive(Clone, Debug)]
pub struct Measurement {
    elements: Vec<CMatrix>,
    labels: Vec<String>,
}

impl Measurement {
    pub fn new(elements: Vec<CMatrix>, labels: Vec<String>) -> Result<Self> {
        if elements.is_empty() {
            return Err(Error::InvalidMeasurement("no elements".into()));
        }
        if labels.len() != elements.len() {
            return Err(Error::InvalidMeasurement(format!(
                "{} labels for {} elements",
                labels.len(),
                elements.len()
            )));
        }
        let dims = elements[0].dims().to_vec();
        let mut sum = CMatrix::zeros(&dims);
        for e in &elements {
            if e.dims() != dims.as_slice() {
                return Err(Error::InvalidMeasurement(
                    "elements live on different factorizations".into(),
                ));
            }
            let lo = min_eig(&e.hermitize())?;
            if lo < -1e-10 {
                return Err(Error::InvalidMeasurement(format!(
                    "element has negative eigenvalue {lo:.3e}"
                )));
            }
            sum = sum.add(e);
        }
        let completeness = sum.max_abs_diff(&CMatrix::identity(&dims));
        if completeness > 1e-9 {
            return Err(Error::InvalidMeasurement(format!(
                "completeness residual {completeness:.3e}"
            )));
        }
        Ok(Self { elements, labels })
    }

    pub fn elements(&self) -> &[CMatrix] {
        &self.elements
    }

    pub fn element(&self, i: usize) -> &CMatrix {
        &self.elements[i]
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn label(&self, i: usize) -> &str {
        &self.labels[i]
    }

    pub fn dims(&self) -> &[usize] {
        self.elements[0].dims()
    }

    pub fn dim(&self) -> usize {
        self.elements[0].dim()
    }

    /// Reorder the elements (keeps labels attached to their operators).
    pub fn permuted(&self, perm: &[usize]) -> Result<Measurement> {
        if perm.len() != self.len() {
            return Err(Error::InvalidArgument("permutation length".into()));
        }
        let elements = perm.iter().map(|&i| self.elements[i].clone()).collect();
        let labels = perm.iter().map(|&i| self.labels[i].clone()).collect();
        Measurement::new(elements, labels)
    }
}

/// Scenario selector for the shipped bases and ideal settings.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Scenario {
    Bsm,
    Tilted { theta: f64 },
    Ghz,
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scenario::Bsm => write!(f, "bsm"),
            Scenario::Tilted { theta } => write!(f, "tilted(theta={theta})"),
            Scenario::Ghz => write!(f, "ghz"),
        }
    }
}

fn bell_vector(b: usize) -> DVector<C64> {
    let s = 1.0 / SQRT_2;
    let mut v = DVector::zeros(4);
    match b {
        0 => {
            v[0] = C64::new(s, 0.0);
            v[3] = C64::new(s, 0.0);
        }
        1 => {
            v[0] = C64::new(s, 0.0);
            v[3] = C64::new(-s, 0.0);
        }
        2 => {
            v[1] = C64::new(s, 0.0);
            v[2] = C64::new(s, 0.0);
        }
        3 => {
            v[1] = C64::new(s, 0.0);
            v[2] = C64::new(-s, 0.0);
        }
        _ => unreachable!(),
    }
    v
}

/// The four Bell states Phi^0..Phi^3 as two-qubit projectors.
pub fn bell_state(b: usize) -> Result<DensityOperator> {
    if b > 3 {
        return Err(Error::InvalidArgument(format!("Bell index {b} > 3")));
    }
    DensityOperator::pure(&bell_vector(b), &[2, 2])
}

fn tilted_vector(theta: f64, b: usize) -> DVector<C64> {
    let (ct, st) = (theta.cos(), theta.sin());
    let mut v = DVector::zeros(4);
    let put = |v: &mut DVector<C64>, i: usize, x: f64| v[i] = C64::new(x, 0.0);
    match b {
        0 => {
            put(&mut v, 0, ct);
            put(&mut v, 3, st);
        }
        1 => {
            put(&mut v, 0, st);
            put(&mut v, 3, -ct);
        }
        2 => {
            put(&mut v, 1, ct);
            put(&mut v, 2, st);
        }
        3 => {
            put(&mut v, 1, st);
            put(&mut v, 2, -ct);
        }
        _ => unreachable!(),
    }
    v
}

/// Partially entangled Bell basis at angle theta, ordered as the Bell states.
/// theta = pi/4 recovers them exactly.
pub fn tilted_bell_state(theta: f64, b: usize) -> Result<DensityOperator> {
    if b > 3 {
        return Err(Error::InvalidArgument(format!("Bell index {b} > 3")));
    }
    if !(theta > 0.0 && theta <= FRAC_PI_4 + 1e-15) {
        return Err(Error::InvalidArgument(format!(
            "theta = {theta} outside (0, pi/4]"
        )));
    }
    DensityOperator::pure(&tilted_vector(theta, b), &[2, 2])
}

/// Which GHZ sector a central-node outcome belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GhzSector {
    Zero,
    A,
    B,
    C,
}

/// Outcome label (P, +-) of the GHZ measurement.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GhzLabel {
    pub sector: GhzSector,
    pub plus: bool,
}

impl fmt::Display for GhzLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let p = match self.sector {
            GhzSector::Zero => "0",
            GhzSector::A => "A",
            GhzSector::B => "B",
            GhzSector::C => "C",
        };
        write!(f, "({},{})", p, if self.plus { "+" } else { "-" })
    }
}

/// Canonical ordering of the eight GHZ outcomes.
pub fn ghz_labels() -> [GhzLabel; 8] {
    use GhzSector::*;
    let mut out = [GhzLabel {
        sector: Zero,
        plus: true,
    }; 8];
    let sectors = [Zero, A, B, C];
    for (i, &sector) in sectors.iter().enumerate() {
        out[2 * i] = GhzLabel { sector, plus: true };
        out[2 * i + 1] = GhzLabel {
            sector,
            plus: false,
        };
    }
    out
}

fn ghz_vector(label: GhzLabel) -> DVector<C64> {
    let s = 1.0 / SQRT_2;
    // Index pairs (|abc>, |a'b'c'>) per sector: superpositions of a bit
    // string and its complement.
    let (hi, lo) = match label.sector {
        GhzSector::Zero => (0b000, 0b111),
        GhzSector::A => (0b011, 0b100),
        GhzSector::B => (0b101, 0b010),
        GhzSector::C => (0b110, 0b001),
    };
    let mut v = DVector::zeros(8);
    v[hi] = C64::new(s, 0.0);
    v[lo] = C64::new(if label.plus { s } else { -s }, 0.0);
    v
}

/// The eight GHZ states as three-qubit projectors.
pub fn ghz_state(label: GhzLabel) -> Result<DensityOperator> {
    DensityOperator::pure(&ghz_vector(label), &[2, 2, 2])
}

/// mu with tan(mu) = sin(2 theta), the tilted-scenario measurement angle.
pub fn tilted_mu(theta: f64) -> f64 {
    (2.0 * theta).sin().atan()
}

/// Tilt weight eta = 2 / sqrt(1 + 2 tan^2(2 theta)); theta = pi/4 maps to 0
/// (the plain-CHSH limit, rejected by the tilted scenario builders).
pub fn tilt_weight(theta: f64) -> f64 {
    if (theta - FRAC_PI_4).abs() < 1e-12 {
        return 0.0;
    }
    let t = (2.0 * theta).tan();
    2.0 / (1.0 + 2.0 * t * t).sqrt()
}

/// Ideal settings per outer party: two observables each.
///
/// * `bsm`: Alice sigma_z, sigma_x; Charlie (sigma_z +- sigma_x)/sqrt(2).
/// * `tilted(theta)`: Alice as above; Charlie cos(mu) sigma_z +- sin(mu)
///   sigma_x with tan(mu) = sin(2 theta). The operators are unit-spectrum,
///   so they square to identity as Bell-operator settings must.
/// * `ghz`: every party sigma_x and sigma_y; conditioned on any outcome of
///   the central GHZ measurement these settings reach Mermin value 4.
pub fn ideal_observables(scenario: Scenario) -> Result<Vec<[Observable; 2]>> {
    let obs = |m: CMatrix| Observable::new(m).expect("ideal settings are Hermitian");
    match scenario {
        Scenario::Bsm => {
            let a = [obs(pauli_z()), obs(pauli_x())];
            let c = [
                obs(pauli_z().add(&pauli_x()).scale(1.0 / SQRT_2)),
                obs(pauli_z().sub(&pauli_x()).scale(1.0 / SQRT_2)),
            ];
            Ok(vec![a, c])
        }
        Scenario::Tilted { theta } => {
            if !(theta > 0.0 && theta < FRAC_PI_4 - 1e-12) {
                return Err(Error::InvalidArgument(format!(
                    "tilted scenario needs theta in (0, pi/4); got {theta} \
                     (use the bsm scenario at pi/4)"
                )));
            }
            let mu = tilted_mu(theta);
            let a = [obs(pauli_z()), obs(pauli_x())];
            let c = [
                obs(pauli_z().scale(mu.cos()).add(&pauli_x().scale(mu.sin()))),
                obs(pauli_z().scale(mu.cos()).sub(&pauli_x().scale(mu.sin()))),
            ];
            Ok(vec![a, c])
        }
        Scenario::Ghz => {
            let party = || [obs(pauli_x()), obs(pauli_y())];
            Ok(vec![party(), party(), party()])
        }
    }
}

fn correlator(a: &Observable, c: &Observable) -> CMatrix {
    kron(a.mat(), c.mat())
}

/// CHSH Bell operator W_b for conditional outcome b:
/// W_0 = A0C0 + A0C1 + A1C0 - A1C1, W_1 flips the A1 terms,
/// W_2 = -W_1, W_3 = -W_0.
pub fn chsh_operator(b: usize, obs_a: &[Observable; 2], obs_c: &[Observable; 2]) -> Result<CMatrix> {
    if b > 3 {
        return Err(Error::InvalidArgument(format!("CHSH index {b} > 3")));
    }
    let k0 = correlator(&obs_a[0], &obs_c[0])
        .add(&correlator(&obs_a[0], &obs_c[1]))
        .add(&correlator(&obs_a[1], &obs_c[0]))
        .sub(&correlator(&obs_a[1], &obs_c[1]));
    let k1 = correlator(&obs_a[0], &obs_c[0])
        .add(&correlator(&obs_a[0], &obs_c[1]))
        .sub(&correlator(&obs_a[1], &obs_c[0]))
        .add(&correlator(&obs_a[1], &obs_c[1]));
    Ok(match b {
        0 => k0,
        1 => k1,
        2 => k1.neg(),
        3 => k0.neg(),
        _ => unreachable!(),
    })
}

/// Tilted CHSH operator for conditional outcome b.
///
/// The b = 0 operator is the tilt w A0 (x) 1 plus the CHSH_0 correlator.
/// The relabeling generating outcome 1 conjugates Alice by sigma_x (it maps the first
/// tilted Bell state onto the second), which flips both the A1 terms and the
/// sign of the tilt: W''_1 = -w A0 + CHSH_1 correlator. W''_2 = -W''_1 and
/// W''_3 = -W''_0 as in the plain case. Each W''_b attains sqrt(8 + 2 w^2)
/// exactly on the b-th tilted Bell state.
pub fn tilted_chsh_operator(
    b: usize,
    tilt_weight: f64,
    obs_a: &[Observable; 2],
    obs_c: &[Observable; 2],
) -> Result<CMatrix> {
    if b > 3 {
        return Err(Error::InvalidArgument(format!("CHSH index {b} > 3")));
    }
    if !(tilt_weight > 0.0 && tilt_weight <= 2.0) {
        return Err(Error::InvalidArgument(format!(
            "tilt weight {tilt_weight} outside (0, 2]"
        )));
    }
    let dim_c = obs_c[0].dim();
    let tilt = kron(obs_a[0].mat(), &CMatrix::identity(&[dim_c])).scale(tilt_weight);
    let w0 = chsh_operator(0, obs_a, obs_c)?.add(&tilt);
    let w1 = chsh_operator(1, obs_a, obs_c)?.sub(&tilt);
    Ok(match b {
        0 => w0,
        1 => w1,
        2 => w1.neg(),
        3 => w0.neg(),
        _ => unreachable!(),
    })
}

/// Mermin operator for outcome r = (P, +-):
/// Mer^{0,+} = A0B0C0 - A0B1C1 - A1B0C1 - A1B1C0; Mer^{P,+} flips the sign
/// of the two terms using party P's second setting; Mer^{P,-} = -Mer^{P,+}.
pub fn mermin_operator(label: GhzLabel, obs: &[[Observable; 2]; 3]) -> CMatrix {
    // (x, y, z, sign) terms of Mer^{0,+}.
    let base: [(usize, usize, usize, f64); 4] = [
        (0, 0, 0, 1.0),
        (0, 1, 1, -1.0),
        (1, 0, 1, -1.0),
        (1, 1, 0, -1.0),
    ];
    let flip_party = match label.sector {
        GhzSector::Zero => None,
        GhzSector::A => Some(0usize),
        GhzSector::B => Some(1usize),
        GhzSector::C => Some(2usize),
    };
    let mut acc = CMatrix::zeros(&[
        obs[0][0].dim(),
        obs[1][0].dim(),
        obs[2][0].dim(),
    ]);
    for &(x, y, z, sign) in &base {
        let mut s = sign;
        if let Some(p) = flip_party {
            let setting = [x, y, z][p];
            if setting == 1 {
                s = -s;
            }
        }
        if !label.plus {
            s = -s;
        }
        let term = kron(&kron(obs[0][x].mat(), obs[1][y].mat()), obs[2][z].mat());
        acc = acc.add(&term.scale(s));
    }
    acc
}

/// The ideal measurement basis of a scenario as a projective Measurement.
pub fn measurement_basis(scenario: Scenario) -> Result<Measurement> {
    match scenario {
        Scenario::Bsm => {
            let elements: Vec<CMatrix> = (0..4)
                .map(|b| bell_state(b).map(|d| d.mat().clone()))
                .collect::<Result<_>>()?;
            let labels = (0..4).map(|b| format!("b={b}")).collect();
            Measurement::new(elements, labels)
        }
        Scenario::Tilted { theta } => {
            let elements: Vec<CMatrix> = (0..4)
                .map(|b| tilted_bell_state(theta, b).map(|d| d.mat().clone()))
                .collect::<Result<_>>()?;
            let labels = (0..4).map(|b| format!("b={b}")).collect();
            Measurement::new(elements, labels)
        }
        Scenario::Ghz => {
            let elements: Vec<CMatrix> = ghz_labels()
                .iter()
                .map(|&l| ghz_state(l).map(|d| d.mat().clone()))
                .collect::<Result<_>>()?;
            let labels = ghz_labels().iter().map(|l| format!("r={l}")).collect();
            Measurement::new(elements, labels)
        }
    }
}

/// The four-outcome basis (|00>, |11>, Psi^+, Psi^-): two product states
/// and two Bell states. Its refined separability ceiling is 3/4 and that
/// value is attained by a product basis, making it the worked example for
/// the threshold machinery.
pub fn two_product_two_bell_basis() -> Result<Measurement> {
    let elements = vec![
        CMatrix::outer(&basis_ket(0, 4), &[2, 2])?,
        CMatrix::outer(&basis_ket(3, 4), &[2, 2])?,
        bell_state(2)?.mat().clone(),
        bell_state(3)?.mat().clone(),
    ];
    let labels = vec!["|00>".into(), "|11>".into(), "psi+".into(), "psi-".into()];
    Measurement::new(elements, labels)
}

/// Two-qubit Werner source v Phi^0 + (1 - v) 1/4.
pub fn werner_source(v: f64) -> Result<DensityOperator> {
    if !(0.0..=1.0).contains(&v) {
        return Err(Error::InvalidArgument(format!(
            "visibility {v} outside [0, 1]"
        )));
    }
    let phi0 = bell_state(0)?;
    let mixed = CMatrix::identity(&[2, 2]).scale(0.25);
    DensityOperator::new(phi0.mat().scale(v).add(&mixed.scale(1.0 - v)))
}

/// Mix every element with white noise: (1-p) E_j + p Tr(E_j) 1/d.
/// Completeness is preserved exactly by linearity.
pub fn noisy_measurement(m: &Measurement, p: f64) -> Result<Measurement> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidArgument(format!(
            "noise weight {p} outside [0, 1]"
        )));
    }
    let d = m.dim() as f64;
    let id = CMatrix::identity(m.dims());
    let elements = m
        .elements()
        .iter()
        .map(|e| {
            e.scale(1.0 - p)
                .add(&id.scale(p * e.trace_re() / d))
        })
        .collect();
    let labels = (0..m.len()).map(|i| m.label(i).to_string()).collect();
    Measurement::new(elements, labels)
}

/// Schmidt coefficients of a bipartite unit vector, descending.
pub fn schmidt_coefficients(psi: &DVector<C64>, d1: usize, d2: usize) -> Result<Vec<f64>> {
    if psi.len() != d1 * d2 {
        return Err(Error::DimMismatch(format!(
            "vector of length {} for bipartition {}x{}",
            psi.len(),
            d1,
            d2
        )));
    }
    let nrm = psi.norm();
    if (nrm - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidState(format!("vector norm {nrm} is not 1")));
    }
    let m = nalgebra::DMatrix::from_fn(d1, d2, |a, b| psi[a * d2 + b]);
    let svd = m.svd(false, false);
    let mut sv: Vec<f64> = svd.singular_values.iter().copied().collect();
    sv.sort_by(|a, b| b.partial_cmp(a).expect("NaN singular value"));
    Ok(sv)
}

/// Top eigenvector of a rank-1 projector, for Schmidt analysis.
pub fn projector_vector(p: &CMatrix) -> Result<DVector<C64>> {
    let residual = qlinalg::rank_one_projector_residual(p);
    if residual > 1e-8 {
        return Err(Error::NotRankOneProjector(residual));
    }
    let spectrum = eig_hermitian(&p.hermitize())?;
    Ok(spectrum.eigenvector(0))
}
