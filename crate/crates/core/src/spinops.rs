//! Spin-s operator algebra, tensor products and the states the protocol is
//! built from.
//!
//! Every subsystem basis is ordered m = s, s-1, ..., -s, and joint spaces are
//! ordered lexicographically with the mediator first, then centers 1, 2, 3.

use std::fmt;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

pub(crate) const ONE: C64 = C64::new(1.0, 0.0);
pub(crate) const I: C64 = C64::new(0.0, 1.0);

/// Largest spin accepted anywhere in the crate.
pub const MAX_TWICE_SPIN: u32 = 5;

/// A spin quantum number s, stored as the integer 2s.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Spin {
    twice: u32,
}

impl Spin {
    pub const HALF: Spin = Spin { twice: 1 };
    pub const ONE: Spin = Spin { twice: 2 };

    pub fn from_twice(twice: u32) -> Result<Self> {
        if twice == 0 || twice > MAX_TWICE_SPIN {
            return Err(Error::InvalidSpin(f64::from(twice) / 2.0));
        }
        Ok(Spin { twice })
    }

    /// Accepts 0.5, 1, 1.5, ... up to 5/2.
    pub fn from_f64(s: f64) -> Result<Self> {
        let twice = 2.0 * s;
        if !twice.is_finite() || twice <= 0.0 || (twice - twice.round()).abs() > 1e-9 {
            return Err(Error::InvalidSpin(s));
        }
        Self::from_twice(twice.round() as u32).map_err(|_| Error::InvalidSpin(s))
    }

    pub fn twice(self) -> u32 {
        self.twice
    }

    pub fn value(self) -> f64 {
        f64::from(self.twice) / 2.0
    }

    /// Local Hilbert-space dimension 2s+1.
    pub fn dim(self) -> usize {
        self.twice as usize + 1
    }

    pub fn is_half_integer(self) -> bool {
        self.twice % 2 == 1
    }

    /// Magnetic quantum number of basis index `i` (i = 0 is m = s).
    pub fn m_of(self, index: usize) -> f64 {
        self.value() - index as f64
    }

    /// Basis index of magnetic quantum number `m`.
    pub fn index_of(self, m: f64) -> Option<usize> {
        let idx = self.value() - m;
        if idx < -1e-9 || (idx - idx.round()).abs() > 1e-9 || idx.round() as usize >= self.dim() {
            None
        } else {
            Some(idx.round() as usize)
        }
    }
}

impl fmt::Display for Spin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.twice.is_multiple_of(2) {
            write!(f, "{}", self.twice / 2)
        } else {
            write!(f, "{}/2", self.twice)
        }
    }
}

/// Mediator-center spin coupling: Heisenberg for electrons, isotropic XY for photons.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CouplingKind {
    Heisenberg,
    Xy,
}

impl CouplingKind {
    pub fn name(self) -> &'static str {
        match self {
            CouplingKind::Heisenberg => "heisenberg",
            CouplingKind::Xy => "xy",
        }
    }
}

/// Which pair of centers a two-center operator acts on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CenterPair {
    P12,
    P23,
}

impl CenterPair {
    pub fn centers(self) -> (usize, usize) {
        match self {
            CenterPair::P12 => (0, 1),
            CenterPair::P23 => (1, 2),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpinOperators {
    pub x: CMatrix,
    pub y: CMatrix,
    pub z: CMatrix,
}

impl SpinOperators {
    /// Sx² + Sy² + Sz².
    pub fn casimir(&self) -> CMatrix {
        &self.x * &self.x + &self.y * &self.y + &self.z * &self.z
    }

    fn scaled(&self, factor: f64) -> Self {
        let f = C64::new(factor, 0.0);
        SpinOperators {
            x: &self.x * f,
            y: &self.y * f,
            z: &self.z * f,
        }
    }
}

/// Spin matrices in the Sz eigenbasis via ladder operators.
pub fn spin_operators(spin: Spin) -> SpinOperators {
    let d = spin.dim();
    let s = spin.value();
    let mut raise = CMatrix::zeros(d, d);
    let mut z = CMatrix::zeros(d, d);
    for i in 0..d {
        let m = spin.m_of(i);
        z[(i, i)] = C64::new(m, 0.0);
        if i > 0 {
            // S+ |m> = sqrt(s(s+1) - m(m+1)) |m+1>, and |m+1> has index i-1.
            raise[(i - 1, i)] = C64::new((s * (s + 1.0) - m * (m + 1.0)).sqrt(), 0.0);
        }
    }
    let lower = raise.adjoint();
    let x = (&raise + &lower) * C64::new(0.5, 0.0);
    let y = (&raise - &lower) * C64::new(0.0, -0.5);
    SpinOperators { x, y, z }
}

/// Pauli triple of the mediator (eigenvalues ±1).
pub fn pauli() -> SpinOperators {
    spin_operators(Spin::HALF).scaled(2.0)
}

pub fn identity(d: usize) -> CMatrix {
    CMatrix::identity(d, d)
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// Kronecker product of a list of factors, left to right.
pub fn kron_all<'a>(factors: impl IntoIterator<Item = &'a CMatrix>) -> CMatrix {
    factors
        .into_iter()
        .fold(CMatrix::identity(1, 1), |acc, f| acc.kronecker(f))
}

/// `op` acting on center `center` (0-based) of three spin-s centers, identity elsewhere.
pub fn embed_on_center(op: &CMatrix, spin: Spin, center: usize) -> CMatrix {
    let id = identity(spin.dim());
    let factors: Vec<&CMatrix> = (0..3).map(|c| if c == center { op } else { &id }).collect();
    kron_all(factors)
}

/// The dimensionless coupling operator multiplying J δ(x - x_i), acting on
/// mediator ⊗ one center.
pub fn interaction_operator(kind: CouplingKind, spin: Spin) -> CMatrix {
    let sigma = pauli();
    let s = spin_operators(spin);
    let mut op = kron(&sigma.x, &s.x) + kron(&sigma.y, &s.y);
    if kind == CouplingKind::Heisenberg {
        op += kron(&sigma.z, &s.z);
    }
    op
}

/// Coupling of the mediator to a single center, embedded in mediator ⊗ centers 1-3.
pub fn center_coupling(kind: CouplingKind, spin: Spin, center: usize) -> CMatrix {
    let sigma = pauli();
    let s = spin_operators(spin);
    let mut op = kron(&sigma.x, &embed_on_center(&s.x, spin, center))
        + kron(&sigma.y, &embed_on_center(&s.y, spin, center));
    if kind == CouplingKind::Heisenberg {
        op += kron(&sigma.z, &embed_on_center(&s.z, spin, center));
    }
    op
}

/// Spin part of the symmetric two-center interaction, O_j + O_l, on mediator ⊗ centers 1-3.
pub fn two_center_quench_operator(kind: CouplingKind, spin: Spin, pair: CenterPair) -> CMatrix {
    let (j, l) = pair.centers();
    center_coupling(kind, spin, j) + center_coupling(kind, spin, l)
}

/// Spin-s singlet of two centers, with the m = s amplitude real and positive.
pub fn singlet_state(spin: Spin) -> PureState {
    let d = spin.dim();
    let norm = (d as f64).sqrt().recip();
    let mut amps = CVector::zeros(d * d);
    for i in 0..d {
        let m = spin.m_of(i);
        let eta = if spin.is_half_integer() { m + 0.5 } else { m };
        let sign = if (eta.round() as i64).rem_euclid(2) == 0 { 1.0 } else { -1.0 };
        // |m, -m>: the partner has index d-1-i.
        amps[i * d + (d - 1 - i)] = C64::new(sign * norm, 0.0);
    }
    let phase = amps[d - 1] / amps[d - 1].norm();
    amps /= phase;
    PureState {
        amplitudes: amps,
        dims: vec![d, d],
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PureState {
    amplitudes: CVector,
    dims: Vec<usize>,
}

impl PureState {
    pub fn new(amplitudes: CVector, dims: Vec<usize>) -> Result<Self> {
        check_dims(amplitudes.len(), &dims)?;
        let norm = amplitudes.norm();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::NotPhysical(format!("state norm is {norm}, expected 1")));
        }
        Ok(PureState { amplitudes, dims })
    }

    /// Normalizes `amplitudes` before wrapping them.
    pub fn normalized(amplitudes: CVector, dims: Vec<usize>) -> Result<Self> {
        check_dims(amplitudes.len(), &dims)?;
        let norm = amplitudes.norm();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::NotPhysical("cannot normalize a zero vector".into()));
        }
        Ok(PureState {
            amplitudes: amplitudes / C64::new(norm, 0.0),
            dims,
        })
    }

    pub fn basis(dims: Vec<usize>, index: usize) -> Result<Self> {
        let total: usize = dims.iter().product();
        if index >= total {
            return Err(Error::Dimension(format!("basis index {index} out of range {total}")));
        }
        let mut v = CVector::zeros(total);
        v[index] = ONE;
        Self::new(v, dims)
    }

    /// Single-spin eigenstate |m>.
    pub fn spin_basis(spin: Spin, m: f64) -> Result<Self> {
        let idx = spin
            .index_of(m)
            .ok_or_else(|| Error::param("m", format!("{m} is not a magnetic number of s = {spin}")))?;
        Self::basis(vec![spin.dim()], idx)
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amplitudes
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn tensor(&self, other: &PureState) -> PureState {
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&other.dims);
        PureState {
            amplitudes: self.amplitudes.kronecker(&other.amplitudes),
            dims,
        }
    }

    /// <self|other>.
    pub fn inner(&self, other: &PureState) -> C64 {
        self.amplitudes.dotc(&other.amplitudes)
    }

    pub fn projector(&self) -> DensityOperator {
        DensityOperator {
            matrix: &self.amplitudes * self.amplitudes.adjoint(),
            dims: self.dims.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DensityOperator {
    matrix: CMatrix,
    dims: Vec<usize>,
}

impl DensityOperator {
    /// Validates hermiticity, unit trace and positivity.
    pub fn new(matrix: CMatrix, dims: Vec<usize>) -> Result<Self> {
        let rho = Self::from_matrix_unchecked(matrix, dims)?;
        rho.validate()?;
        Ok(rho)
    }

    /// Wraps a matrix after checking only its shape.
    pub fn from_matrix_unchecked(matrix: CMatrix, dims: Vec<usize>) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::Dimension("density matrix must be square".into()));
        }
        check_dims(matrix.nrows(), &dims)?;
        Ok(DensityOperator { matrix, dims })
    }

    pub fn maximally_mixed(dims: Vec<usize>) -> Self {
        let d: usize = dims.iter().product();
        DensityOperator {
            matrix: CMatrix::identity(d, d) / C64::new(d as f64, 0.0),
            dims,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let herm = hermiticity_defect(&self.matrix);
        if herm > 1e-12 {
            return Err(Error::NotPhysical(format!("not Hermitian (defect {herm:e})")));
        }
        let tr = self.matrix.trace();
        if (tr.re - 1.0).abs() > 1e-12 || tr.im.abs() > 1e-12 {
            return Err(Error::NotPhysical(format!("trace is {tr}, expected 1")));
        }
        let min = self.min_eigenvalue();
        if min < -1e-10 {
            return Err(Error::NotPhysical(format!("negative eigenvalue {min:e}")));
        }
        Ok(())
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        let herm = hermitian_part(&self.matrix);
        let mut ev: Vec<f64> = SymmetricEigen::new(herm).eigenvalues.iter().copied().collect();
        ev.sort_by(|a, b| a.total_cmp(b));
        ev
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues().first().copied().unwrap_or(0.0)
    }

    pub fn tensor(&self, other: &DensityOperator) -> DensityOperator {
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&other.dims);
        DensityOperator {
            matrix: self.matrix.kronecker(&other.matrix),
            dims,
        }
    }

    /// Reduced state on the subsystems listed in `keep` (ascending order).
    pub fn partial_trace(&self, keep: &[usize]) -> Result<DensityOperator> {
        let (matrix, dims) = partial_trace(&self.matrix, &self.dims, keep)?;
        Ok(DensityOperator { matrix, dims })
    }

    /// <psi|rho|psi>, which is the Uhlmann fidelity against a pure target.
    pub fn fidelity_with(&self, psi: &PureState) -> f64 {
        let v = psi.amplitudes();
        v.dotc(&(&self.matrix * v)).re
    }

    /// Half the trace norm of the difference.
    pub fn trace_distance(&self, other: &DensityOperator) -> f64 {
        let diff = hermitian_part(&(&self.matrix - &other.matrix));
        0.5 * SymmetricEigen::new(diff)
            .eigenvalues
            .iter()
            .map(|e| e.abs())
            .sum::<f64>()
    }
}

fn check_dims(total: usize, dims: &[usize]) -> Result<()> {
    let product: usize = dims.iter().product();
    if dims.is_empty() || dims.contains(&0) || product != total {
        return Err(Error::Dimension(format!(
            "subsystem dims {dims:?} do not multiply to {total}"
        )));
    }
    Ok(())
}

pub(crate) fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * C64::new(0.5, 0.0)
}

/// max |A - A†| elementwise.
pub fn hermiticity_defect(m: &CMatrix) -> f64 {
    max_abs(&(m - m.adjoint()))
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Partial trace over every subsystem not listed in `keep`.
pub fn partial_trace(m: &CMatrix, dims: &[usize], keep: &[usize]) -> Result<(CMatrix, Vec<usize>)> {
    check_dims(m.nrows(), dims)?;
    if keep.windows(2).any(|w| w[0] >= w[1]) || keep.iter().any(|&k| k >= dims.len()) {
        return Err(Error::Dimension(format!("bad subsystem selection {keep:?}")));
    }
    let traced: Vec<usize> = (0..dims.len()).filter(|i| !keep.contains(i)).collect();
    let kept_dims: Vec<usize> = keep.iter().map(|&k| dims[k]).collect();
    let dk: usize = kept_dims.iter().product();
    let dt: usize = traced.iter().map(|&t| dims[t]).product();

    // Row-major strides of the full index.
    let mut strides = vec![1usize; dims.len()];
    for i in (0..dims.len().saturating_sub(1)).rev() {
        strides[i] = strides[i + 1] * dims[i + 1];
    }
    let offset = |sel: &[usize], sel_dims: &[usize], mut idx: usize| -> usize {
        let mut off = 0;
        for (pos, &sub) in sel.iter().enumerate().rev() {
            off += (idx % sel_dims[pos]) * strides[sub];
            idx /= sel_dims[pos];
        }
        off
    };
    let traced_dims: Vec<usize> = traced.iter().map(|&t| dims[t]).collect();
    let kept_off: Vec<usize> = (0..dk).map(|i| offset(keep, &kept_dims, i)).collect();
    let traced_off: Vec<usize> = (0..dt).map(|i| offset(&traced, &traced_dims, i)).collect();

    let mut out = CMatrix::zeros(dk, dk);
    for (a, &ka) in kept_off.iter().enumerate() {
        for (b, &kb) in kept_off.iter().enumerate() {
            out[(a, b)] = traced_off.iter().map(|&t| m[(ka + t, kb + t)]).sum();
        }
    }
    Ok((out, kept_dims))
}
