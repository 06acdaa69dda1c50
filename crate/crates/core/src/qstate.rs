//! Exact single-qubit state algebra.
//!
//! Pure states live in C² as [`StateVector`]s, operators are 2×2 complex
//! matrices, and mixed states are [`DensityMatrix`] values. Everything is
//! double precision; identities are checked at [`TOLERANCE`].

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_8};
use std::fmt;
use std::ops::Neg;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Absolute tolerance for every algebraic identity in this module.
pub const TOLERANCE: f64 = 1e-12;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QstateError {
    #[error("state is not normalized (|a0|^2 + |a1|^2 = {0})")]
    NotNormalized(f64),
    #[error("cannot normalize the zero vector")]
    ZeroVector,
    #[error("operator is not unitary (max |U†U - I| entry = {0})")]
    NonUnitary(f64),
    #[error("basis states are not orthonormal (|<b0|b1>| = {0})")]
    NotOrthonormal(f64),
    #[error("ensemble probabilities must be nonnegative and sum to 1 (sum = {0})")]
    BadProbabilities(f64),
    #[error("matrix is not a valid density matrix: {0}")]
    InvalidDensity(&'static str),
}

/// The four states the protocol prepares.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StateLabel {
    Z0,
    Z1,
    X0,
    X1,
}

impl StateLabel {
    pub const ALL: [StateLabel; 4] = [StateLabel::Z0, StateLabel::Z1, StateLabel::X0, StateLabel::X1];

    pub fn from_parts(basis: BasisLabel, outcome: u8) -> Option<StateLabel> {
        match (basis, outcome) {
            (BasisLabel::Z, 0) => Some(StateLabel::Z0),
            (BasisLabel::Z, 1) => Some(StateLabel::Z1),
            (BasisLabel::X, 0) => Some(StateLabel::X0),
            (BasisLabel::X, 1) => Some(StateLabel::X1),
            _ => None,
        }
    }

    pub fn basis(self) -> BasisLabel {
        match self {
            StateLabel::Z0 | StateLabel::Z1 => BasisLabel::Z,
            StateLabel::X0 | StateLabel::X1 => BasisLabel::X,
        }
    }

    /// Index of this state inside its own basis.
    pub fn outcome(self) -> u8 {
        match self {
            StateLabel::Z0 | StateLabel::X0 => 0,
            StateLabel::Z1 | StateLabel::X1 => 1,
        }
    }

    /// The orthogonal state in the same basis.
    pub fn partner(self) -> StateLabel {
        match self {
            StateLabel::Z0 => StateLabel::Z1,
            StateLabel::Z1 => StateLabel::Z0,
            StateLabel::X0 => StateLabel::X1,
            StateLabel::X1 => StateLabel::X0,
        }
    }
}

impl fmt::Display for StateLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            StateLabel::Z0 => "z0",
            StateLabel::Z1 => "z1",
            StateLabel::X0 => "x0",
            StateLabel::X1 => "x1",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BasisLabel {
    Z,
    X,
    Custom,
}

/// Normalized pure state `a0|0> + a1|1>`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateVector {
    amplitudes: [Complex64; 2],
}

impl StateVector {
    /// Builds a state from amplitudes that must already be normalized.
    pub fn new(a0: Complex64, a1: Complex64) -> Result<Self, QstateError> {
        let norm = a0.norm_sqr() + a1.norm_sqr();
        if (norm - 1.0).abs() > TOLERANCE {
            return Err(QstateError::NotNormalized(norm));
        }
        Ok(StateVector { amplitudes: [a0, a1] })
    }

    /// Builds a state by rescaling arbitrary nonzero amplitudes.
    pub fn normalized(a0: Complex64, a1: Complex64) -> Result<Self, QstateError> {
        let norm = (a0.norm_sqr() + a1.norm_sqr()).sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(QstateError::ZeroVector);
        }
        Ok(StateVector { amplitudes: [a0 / norm, a1 / norm] })
    }

    pub(crate) const fn from_real(a0: f64, a1: f64) -> Self {
        StateVector { amplitudes: [Complex64::new(a0, 0.0), Complex64::new(a1, 0.0)] }
    }

    pub fn amplitudes(&self) -> [Complex64; 2] {
        self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes[0].norm_sqr() + self.amplitudes[1].norm_sqr()
    }

    /// Removes the global phase: the first nonzero amplitude becomes positive real.
    pub fn canonical(&self) -> Self {
        let pivot = if self.amplitudes[0].norm() > TOLERANCE {
            self.amplitudes[0]
        } else {
            self.amplitudes[1]
        };
        let phase = pivot.conj() / pivot.norm();
        StateVector { amplitudes: [self.amplitudes[0] * phase, self.amplitudes[1] * phase] }
    }

    pub fn approx_eq(&self, other: &StateVector, tol: f64) -> bool {
        (self.amplitudes[0] - other.amplitudes[0]).norm() <= tol
            && (self.amplitudes[1] - other.amplitudes[1]).norm() <= tol
    }

    /// Equality up to a global phase factor.
    pub fn same_ray(&self, other: &StateVector, tol: f64) -> bool {
        self.canonical().approx_eq(&other.canonical(), tol)
    }

    /// Bloch vector `(x, y, z)`.
    pub fn bloch(&self) -> [f64; 3] {
        DensityMatrix::pure(self).bloch()
    }
}

impl Neg for StateVector {
    type Output = StateVector;

    fn neg(self) -> StateVector {
        StateVector { amplitudes: [-self.amplitudes[0], -self.amplitudes[1]] }
    }
}

/// 2×2 complex matrix acting on a single qubit, row-major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Operator {
    entries: [[Complex64; 2]; 2],
}

impl Operator {
    pub const fn new(entries: [[Complex64; 2]; 2]) -> Self {
        Operator { entries }
    }

    /// `I = |0><0| + |1><1|`, Bob's encoding of bit 0.
    pub const fn identity() -> Self {
        Operator { entries: [[ONE, ZERO], [ZERO, ONE]] }
    }

    /// `iσ_y = |0><1| - |1><0|`, Bob's encoding of bit 1.
    pub const fn i_sigma_y() -> Self {
        Operator {
            entries: [[ZERO, ONE], [Complex64::new(-1.0, 0.0), ZERO]],
        }
    }

    pub fn entries(&self) -> [[Complex64; 2]; 2] {
        self.entries
    }

    pub fn adjoint(&self) -> Self {
        let e = &self.entries;
        Operator {
            entries: [[e[0][0].conj(), e[1][0].conj()], [e[0][1].conj(), e[1][1].conj()]],
        }
    }

    pub fn compose(&self, rhs: &Operator) -> Self {
        Operator { entries: mat_mul(&self.entries, &rhs.entries) }
    }

    /// Largest entry deviation of `U†U` from the identity.
    pub fn unitarity_defect(&self) -> f64 {
        let product = self.adjoint().compose(self).entries;
        let mut worst = 0.0f64;
        for (r, row) in product.iter().enumerate() {
            for (c, value) in row.iter().enumerate() {
                let target = if r == c { ONE } else { ZERO };
                worst = worst.max((value - target).norm());
            }
        }
        worst
    }

    pub fn is_unitary(&self) -> bool {
        self.unitarity_defect() <= TOLERANCE
    }

    fn act(&self, psi: &StateVector) -> [Complex64; 2] {
        let e = &self.entries;
        let a = &psi.amplitudes;
        [e[0][0] * a[0] + e[0][1] * a[1], e[1][0] * a[0] + e[1][1] * a[1]]
    }
}

/// An orthonormal measurement basis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BasisSpec {
    label: BasisLabel,
    states: [StateVector; 2],
}

impl BasisSpec {
    pub fn z() -> Self {
        BasisSpec { label: BasisLabel::Z, states: [prepare(StateLabel::Z0), prepare(StateLabel::Z1)] }
    }

    pub fn x() -> Self {
        BasisSpec { label: BasisLabel::X, states: [prepare(StateLabel::X0), prepare(StateLabel::X1)] }
    }

    pub fn custom(b0: StateVector, b1: StateVector) -> Result<Self, QstateError> {
        let overlap = inner_product(&b0, &b1).norm();
        if overlap > TOLERANCE {
            return Err(QstateError::NotOrthonormal(overlap));
        }
        Ok(BasisSpec { label: BasisLabel::Custom, states: [b0, b1] })
    }

    /// The Z or X basis; `None` for `Custom`, which has no canonical instance.
    pub fn standard(label: BasisLabel) -> Option<Self> {
        match label {
            BasisLabel::Z => Some(Self::z()),
            BasisLabel::X => Some(Self::x()),
            BasisLabel::Custom => None,
        }
    }

    pub fn label(&self) -> BasisLabel {
        self.label
    }

    pub fn states(&self) -> [StateVector; 2] {
        self.states
    }

    /// Basis state for outcome `bit` (0 or 1).
    pub fn state(&self, bit: u8) -> StateVector {
        self.states[usize::from(bit & 1)]
    }
}

/// 2×2 Hermitian, positive semidefinite, unit-trace matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityMatrix {
    entries: [[Complex64; 2]; 2],
}

impl DensityMatrix {
    pub fn new(entries: [[Complex64; 2]; 2]) -> Result<Self, QstateError> {
        let hermitian_defect = (entries[0][1] - entries[1][0].conj())
            .norm()
            .max(entries[0][0].im.abs())
            .max(entries[1][1].im.abs());
        if hermitian_defect > TOLERANCE {
            return Err(QstateError::InvalidDensity("not Hermitian"));
        }
        let rho = DensityMatrix { entries };
        if (rho.trace() - 1.0).abs() > TOLERANCE {
            return Err(QstateError::InvalidDensity("trace is not 1"));
        }
        if rho.eigenvalues()[0] < -TOLERANCE {
            return Err(QstateError::InvalidDensity("negative eigenvalue"));
        }
        Ok(rho)
    }

    /// `|psi><psi|`.
    pub fn pure(psi: &StateVector) -> Self {
        let a = psi.amplitudes;
        DensityMatrix {
            entries: [
                [a[0] * a[0].conj(), a[0] * a[1].conj()],
                [a[1] * a[0].conj(), a[1] * a[1].conj()],
            ],
        }
    }

    pub fn entries(&self) -> [[Complex64; 2]; 2] {
        self.entries
    }

    pub fn trace(&self) -> f64 {
        (self.entries[0][0] + self.entries[1][1]).re
    }

    /// Bloch vector `(x, y, z)` with `rho = (I + x σx + y σy + z σz) / 2`.
    pub fn bloch(&self) -> [f64; 3] {
        let off = self.entries[0][1];
        [
            2.0 * off.re,
            -2.0 * off.im,
            (self.entries[0][0] - self.entries[1][1]).re,
        ]
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> [f64; 2] {
        hermitian_eigenvalues(&self.entries)
    }

    /// `U rho U†`.
    pub fn conjugate_by(&self, op: &Operator) -> Self {
        let left = mat_mul(&op.entries, &self.entries);
        DensityMatrix { entries: mat_mul(&left, &op.adjoint().entries) }
    }

    pub fn approx_eq(&self, other: &DensityMatrix, tol: f64) -> bool {
        self.entries
            .iter()
            .flatten()
            .zip(other.entries.iter().flatten())
            .all(|(a, b)| (a - b).norm() <= tol)
    }
}

fn mat_mul(a: &[[Complex64; 2]; 2], b: &[[Complex64; 2]; 2]) -> [[Complex64; 2]; 2] {
    let mut out = [[ZERO; 2]; 2];
    for (r, row) in out.iter_mut().enumerate() {
        for (c, cell) in row.iter_mut().enumerate() {
            *cell = a[r][0] * b[0][c] + a[r][1] * b[1][c];
        }
    }
    out
}

// Closed form for a 2×2 Hermitian matrix; imaginary parts of the diagonal are ignored.
fn hermitian_eigenvalues(m: &[[Complex64; 2]; 2]) -> [f64; 2] {
    let mean = 0.5 * (m[0][0].re + m[1][1].re);
    let half_gap = 0.5 * (m[0][0].re - m[1][1].re);
    let radius = (half_gap * half_gap + m[0][1].norm_sqr()).sqrt();
    [mean - radius, mean + radius]
}

/// Canonical amplitudes for one of the four protocol states.
pub fn prepare(label: StateLabel) -> StateVector {
    match label {
        StateLabel::Z0 => StateVector::from_real(1.0, 0.0),
        StateLabel::Z1 => StateVector::from_real(0.0, 1.0),
        StateLabel::X0 => StateVector::from_real(FRAC_1_SQRT_2, FRAC_1_SQRT_2),
        StateLabel::X1 => StateVector::from_real(FRAC_1_SQRT_2, -FRAC_1_SQRT_2),
    }
}

/// `op · psi`, rejecting non-unitary operators.
pub fn apply(op: &Operator, psi: &StateVector) -> Result<StateVector, QstateError> {
    let defect = op.unitarity_defect();
    if defect > TOLERANCE {
        return Err(QstateError::NonUnitary(defect));
    }
    let [a0, a1] = op.act(psi);
    Ok(StateVector { amplitudes: [a0, a1] })
}

/// `<a|b>`.
pub fn inner_product(a: &StateVector, b: &StateVector) -> Complex64 {
    a.amplitudes[0].conj() * b.amplitudes[0] + a.amplitudes[1].conj() * b.amplitudes[1]
}

/// Born-rule probability of outcome `bit` when measuring `psi` in `basis`.
pub fn outcome_probability(psi: &StateVector, basis: &BasisSpec, bit: u8) -> f64 {
    inner_product(&basis.state(bit), psi).norm_sqr()
}

/// Projective measurement. Draws exactly one uniform variate from `rng`.
pub fn measure<R: Rng + ?Sized>(psi: &StateVector, basis: &BasisSpec, rng: &mut R) -> (u8, StateVector) {
    let u: f64 = rng.random();
    let outcome = if u < outcome_probability(psi, basis, 0) { 0 } else { 1 };
    (outcome, basis.state(outcome))
}

/// `Σ p_i |ψ_i><ψ_i|`.
pub fn ensemble_density(states: &[(f64, StateVector)]) -> Result<DensityMatrix, QstateError> {
    let sum: f64 = states.iter().map(|(p, _)| p).sum();
    if states.iter().any(|(p, _)| *p < 0.0 || !p.is_finite()) || (sum - 1.0).abs() > TOLERANCE {
        return Err(QstateError::BadProbabilities(sum));
    }
    let mut entries = [[ZERO; 2]; 2];
    for (p, psi) in states {
        let pure = DensityMatrix::pure(psi).entries;
        for (r, row) in entries.iter_mut().enumerate() {
            for (c, cell) in row.iter_mut().enumerate() {
                *cell += pure[r][c] * *p;
            }
        }
    }
    DensityMatrix::new(entries)
}

/// `½ Tr|r1 - r2|`.
pub fn trace_distance(r1: &DensityMatrix, r2: &DensityMatrix) -> f64 {
    let mut diff = [[ZERO; 2]; 2];
    for (r, row) in diff.iter_mut().enumerate() {
        for (c, cell) in row.iter_mut().enumerate() {
            *cell = r1.entries[r][c] - r2.entries[r][c];
        }
    }
    let [lo, hi] = hermitian_eigenvalues(&diff);
    (0.5 * (lo.abs() + hi.abs())).clamp(0.0, 1.0)
}

/// Eigenbasis of `(σx + σz)/√2`: the states midway between the Z and X bases
/// on the Bloch sphere.
pub fn breidbart_basis() -> BasisSpec {
    let (s, c) = FRAC_PI_8.sin_cos();
    BasisSpec {
        label: BasisLabel::Custom,
        states: [StateVector::from_real(c, s), StateVector::from_real(-s, c)],
    }
}

/// The state Alice's qubit appears to be in to anyone ignorant of her choice.
pub fn rho0() -> DensityMatrix {
    ensemble_density(&[(0.5, prepare(StateLabel::Z0)), (0.5, prepare(StateLabel::X0))])
        .expect("equal mixture is a valid density matrix")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const H: f64 = FRAC_1_SQRT_2;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn amps(psi: &StateVector) -> [Complex64; 2] {
        psi.amplitudes()
    }

    #[test]
    fn prepare_gives_canonical_amplitudes() {
        assert_eq!(amps(&prepare(StateLabel::Z0)), [c(1.0), c(0.0)]);
        assert_eq!(amps(&prepare(StateLabel::Z1)), [c(0.0), c(1.0)]);
        assert!(prepare(StateLabel::X0).approx_eq(&StateVector::from_real(H, H), TOLERANCE));
        assert!(prepare(StateLabel::X1).approx_eq(&StateVector::from_real(H, -H), TOLERANCE));
        for label in StateLabel::ALL {
            assert!((prepare(label).norm_sqr() - 1.0).abs() <= TOLERANCE);
        }
    }

    #[test]
    fn i_sigma_y_action_on_protocol_states() {
        let y = Operator::i_sigma_y();
        let z0 = prepare(StateLabel::Z0);
        let z1 = prepare(StateLabel::Z1);
        let x0 = prepare(StateLabel::X0);
        let x1 = prepare(StateLabel::X1);
        assert!(apply(&y, &z0).unwrap().approx_eq(&-z1, TOLERANCE));
        // operator definition wins over the printed "iσ_y|1> = 0"
        assert!(apply(&y, &z1).unwrap().approx_eq(&z0, TOLERANCE));
        assert!(apply(&y, &x0).unwrap().approx_eq(&x1, TOLERANCE));
        assert!(apply(&y, &x1).unwrap().approx_eq(&-x0, TOLERANCE));
        assert!(apply(&Operator::identity(), &x1).unwrap().approx_eq(&x1, TOLERANCE));
    }

    #[test]
    fn apply_rejects_non_unitary() {
        let projector = Operator::new([[c(1.0), c(0.0)], [c(0.0), c(0.0)]]);
        assert!(matches!(
            apply(&projector, &prepare(StateLabel::X0)),
            Err(QstateError::NonUnitary(_))
        ));
        assert!(Operator::i_sigma_y().is_unitary());
        assert!(Operator::identity().is_unitary());
    }

    #[test]
    fn state_constructor_checks_norm() {
        assert!(matches!(StateVector::new(c(1.0), c(1.0)), Err(QstateError::NotNormalized(_))));
        assert!(matches!(StateVector::normalized(c(0.0), c(0.0)), Err(QstateError::ZeroVector)));
        let psi = StateVector::normalized(c(3.0), Complex64::new(0.0, 4.0)).unwrap();
        assert!((psi.norm_sqr() - 1.0).abs() <= TOLERANCE);
    }

    #[test]
    fn inner_products() {
        let z0 = prepare(StateLabel::Z0);
        let z1 = prepare(StateLabel::Z1);
        let x0 = prepare(StateLabel::X0);
        assert!(inner_product(&z0, &z1).norm() <= TOLERANCE);
        assert!((inner_product(&z0, &x0) - c(H)).norm() <= TOLERANCE);
        assert!((inner_product(&x0, &x0) - c(1.0)).norm() <= TOLERANCE);
    }

    #[test]
    fn measurement_probabilities() {
        let x = BasisSpec::x();
        let z = BasisSpec::z();
        assert!((outcome_probability(&prepare(StateLabel::X0), &x, 0) - 1.0).abs() <= TOLERANCE);
        assert!((outcome_probability(&prepare(StateLabel::Z0), &x, 0) - 0.5).abs() <= TOLERANCE);
        assert!((outcome_probability(&prepare(StateLabel::Z0), &x, 1) - 0.5).abs() <= TOLERANCE);
        let flipped = apply(&Operator::i_sigma_y(), &prepare(StateLabel::Z0)).unwrap();
        assert!((outcome_probability(&flipped, &z, 1) - 1.0).abs() <= TOLERANCE);

        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let (bit, post) = measure(&flipped, &z, &mut rng);
            assert_eq!(bit, 1);
            assert!(post.approx_eq(&prepare(StateLabel::Z1), TOLERANCE));
        }
    }

    #[test]
    fn measure_draws_one_variate() {
        let mut a = ChaCha8Rng::seed_from_u64(11);
        let mut b = ChaCha8Rng::seed_from_u64(11);
        measure(&prepare(StateLabel::X1), &BasisSpec::z(), &mut a);
        let _: f64 = b.random();
        assert_eq!(a.random::<u64>(), b.random::<u64>());
    }

    #[test]
    fn born_rule_frequencies() {
        let n = 1_000_000u32;
        let psi = StateVector::normalized(c(0.3), Complex64::new(0.4, -0.5)).unwrap();
        for basis in [BasisSpec::z(), BasisSpec::x(), breidbart_basis()] {
            let p1 = outcome_probability(&psi, &basis, 1);
            let mut rng = ChaCha8Rng::seed_from_u64(0xB0_2E);
            let ones = (0..n).filter(|_| measure(&psi, &basis, &mut rng).0 == 1).count();
            let freq = ones as f64 / f64::from(n);
            let sigma = (p1 * (1.0 - p1) / f64::from(n)).sqrt();
            assert!((freq - p1).abs() <= 4.0 * sigma, "freq {freq} vs {p1}");
        }
    }

    #[test]
    fn ensemble_density_bloch_vectors() {
        let rho = rho0();
        let [x, y, z] = rho.bloch();
        assert!((x - 0.5).abs() <= TOLERANCE && y.abs() <= TOLERANCE && (z - 0.5).abs() <= TOLERANCE);

        let pure = ensemble_density(&[(1.0, prepare(StateLabel::Z0))]).unwrap();
        assert!(pure.approx_eq(&DensityMatrix::pure(&prepare(StateLabel::Z0)), TOLERANCE));

        let rho1 = ensemble_density(&[(0.5, prepare(StateLabel::Z1)), (0.5, prepare(StateLabel::X1))]).unwrap();
        let [x, y, z] = rho1.bloch();
        assert!((x + 0.5).abs() <= TOLERANCE && y.abs() <= TOLERANCE && (z + 0.5).abs() <= TOLERANCE);
        assert!(rho1.approx_eq(&rho.conjugate_by(&Operator::i_sigma_y()), TOLERANCE));
    }

    #[test]
    fn ensemble_density_rejects_bad_weights() {
        let z0 = prepare(StateLabel::Z0);
        assert!(matches!(ensemble_density(&[(0.6, z0), (0.6, z0)]), Err(QstateError::BadProbabilities(_))));
        assert!(ensemble_density(&[(1.5, z0), (-0.5, z0)]).is_err());
    }

    #[test]
    fn density_validation() {
        assert!(DensityMatrix::new([[c(1.0), c(0.0)], [c(0.0), c(1.0)]]).is_err());
        assert!(DensityMatrix::new([[c(0.5), c(0.8)], [c(0.8), c(0.5)]]).is_err());
        assert!(DensityMatrix::new([[c(0.5), c(0.1)], [c(0.2), c(0.5)]]).is_err());
        assert!(DensityMatrix::new([[c(0.5), c(0.5)], [c(0.5), c(0.5)]]).is_ok());
    }

    #[test]
    fn trace_distances() {
        let rho = rho0();
        assert!(trace_distance(&rho, &rho).abs() <= TOLERANCE);
        let p0 = DensityMatrix::pure(&prepare(StateLabel::Z0));
        let p1 = DensityMatrix::pure(&prepare(StateLabel::Z1));
        assert!((trace_distance(&p0, &p1) - 1.0).abs() <= TOLERANCE);
        let rho1 = rho.conjugate_by(&Operator::i_sigma_y());
        assert!((trace_distance(&rho, &rho1) - H).abs() <= TOLERANCE);
        assert!((trace_distance(&rho1, &rho) - trace_distance(&rho, &rho1)).abs() <= TOLERANCE);
    }

    #[test]
    fn breidbart_overlaps() {
        let basis = breidbart_basis();
        let cos2 = FRAC_PI_8.cos().powi(2);
        assert!((outcome_probability(&prepare(StateLabel::Z0), &basis, 0) - cos2).abs() <= TOLERANCE);
        assert!((outcome_probability(&prepare(StateLabel::X0), &basis, 0) - cos2).abs() <= TOLERANCE);
        assert!(inner_product(&basis.state(0), &basis.state(1)).norm() <= TOLERANCE);
        assert!(BasisSpec::custom(basis.state(0), basis.state(1)).is_ok());
        assert!(BasisSpec::custom(basis.state(0), prepare(StateLabel::Z0)).is_err());
    }

    #[test]
    fn i_sigma_y_flips_within_each_basis() {
        let y = Operator::i_sigma_y();
        for label in StateLabel::ALL {
            let basis = BasisSpec::standard(label.basis()).unwrap();
            let out = apply(&y, &prepare(label)).unwrap();
            let p = outcome_probability(&out, &basis, label.partner().outcome());
            assert!((p - 1.0).abs() <= TOLERANCE, "{label}");
        }
    }

    #[test]
    fn canonical_phase() {
        let psi = StateVector::normalized(Complex64::new(0.0, -1.0), c(1.0)).unwrap();
        let canon = psi.canonical();
        assert!(canon.amplitudes()[0].im.abs() <= TOLERANCE && canon.amplitudes()[0].re > 0.0);
        assert!(psi.same_ray(&-psi, TOLERANCE));
        assert!(!prepare(StateLabel::X0).same_ray(&prepare(StateLabel::X1), TOLERANCE));
    }

    fn arb_state() -> impl Strategy<Value = StateVector> {
        (0.0..std::f64::consts::PI, 0.0..std::f64::consts::TAU, 0.0..std::f64::consts::TAU).prop_map(
            |(theta, phi, global)| {
                let g = Complex64::from_polar(1.0, global);
                StateVector::new(
                    g * (theta / 2.0).cos(),
                    g * Complex64::from_polar((theta / 2.0).sin(), phi),
                )
                .unwrap()
            },
        )
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn unitaries_preserve_inner_products(a in arb_state(), b in arb_state()) {
            let before = inner_product(&a, &b);
            prop_assert!(before.norm() <= 1.0 + TOLERANCE);
            for op in [Operator::identity(), Operator::i_sigma_y()] {
                let ua = apply(&op, &a).unwrap();
                let ub = apply(&op, &b).unwrap();
                prop_assert!((inner_product(&ua, &ub) - before).norm() <= TOLERANCE);
                prop_assert!((ua.norm_sqr() - 1.0).abs() <= TOLERANCE);
            }
        }

        #[test]
        fn double_i_sigma_y_is_minus_identity(psi in arb_state()) {
            let y = Operator::i_sigma_y();
            let twice = apply(&y, &apply(&y, &psi).unwrap()).unwrap();
            prop_assert!(twice.approx_eq(&-psi, TOLERANCE));
        }

        #[test]
        fn measurement_collapses_to_basis_state(psi in arb_state(), seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for basis in [BasisSpec::z(), BasisSpec::x(), breidbart_basis()] {
                let (bit, post) = measure(&psi, &basis, &mut rng);
                prop_assert!(post.approx_eq(&basis.state(bit), 0.0));
                prop_assert!((post.norm_sqr() - 1.0).abs() <= TOLERANCE);
            }
        }
    }
}
