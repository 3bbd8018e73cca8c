//! Stationary scattering of one spin-1/2 mediator off three delta-coupled
//! spin-s centers, and the transmission/reflection Kraus operators it induces
//! on the centers.
//!
//! Amplitudes are coefficients of the plane waves e^{±ikx} in global
//! coordinates, with center 1 at x = 0. The incident wave has unit amplitude,
//! so free propagation gives T = identity with no extra phase.

use std::f64::consts::PI;

use nalgebra::LU;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spinops::{
    center_coupling, embed_on_center, identity, interaction_operator, kron, max_abs, CMatrix,
    CouplingKind, Spin, C64, I, ONE,
};

/// Energy-wavevector relation of the mediator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dispersion {
    /// Electron, E = k²/2m*; the group velocity scales with k.
    Quadratic,
    /// Photon, E = v k; the group velocity is fixed.
    Linear,
}

impl Dispersion {
    pub fn name(self) -> &'static str {
        match self {
            Dispersion::Quadratic => "quadratic",
            Dispersion::Linear => "linear",
        }
    }
}

/// Everything that determines one scattering event.
#[derive(Clone, Debug, PartialEq)]
pub struct ScatterConfig {
    pub spin: Spin,
    pub kind: CouplingKind,
    pub dispersion: Dispersion,
    /// J1, J2, J3 in velocity units.
    pub couplings: [f64; 3],
    pub wavevector: f64,
    pub velocity: f64,
    pub d12: f64,
    pub d23: f64,
}

/// Result of checking k·d12 and k·d23 against integer multiples of π.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Resonance {
    pub ok: bool,
    /// Signed distance of k·d12 from the nearest multiple of π, in radians.
    pub offset12: f64,
    pub offset23: f64,
}

pub const RESONANCE_TOLERANCE: f64 = 1e-9;

impl ScatterConfig {
    /// Configuration in dimensionless units: k = v = 1, couplings given as
    /// J/v and distances as k·d/π.
    pub fn dimensionless(
        spin: Spin,
        kind: CouplingKind,
        dispersion: Dispersion,
        j_over_v: [f64; 3],
        kd12_over_pi: f64,
        kd23_over_pi: f64,
    ) -> Self {
        ScatterConfig {
            spin,
            kind,
            dispersion,
            couplings: j_over_v,
            wavevector: 1.0,
            velocity: 1.0,
            d12: kd12_over_pi * PI,
            d23: kd23_over_pi * PI,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.wavevector.is_finite() && self.wavevector > 0.0) {
            return Err(Error::param("wavevector", format!("must be > 0, got {}", self.wavevector)));
        }
        if !(self.velocity.is_finite() && self.velocity > 0.0) {
            return Err(Error::param("velocity", format!("must be > 0, got {}", self.velocity)));
        }
        for (field, d) in [("d12", self.d12), ("d23", self.d23)] {
            if !(d.is_finite() && d > 0.0) {
                return Err(Error::param(field, format!("must be > 0, got {d}")));
            }
        }
        for (field, j) in ["J1", "J2", "J3"].into_iter().zip(self.couplings) {
            if !(j.is_finite() && j >= 0.0) {
                return Err(Error::param(field, format!("must be >= 0, got {j}")));
            }
        }
        Ok(())
    }

    /// Dimensionless coupling J_i / v of center `i` (0-based).
    pub fn coupling_ratio(&self, i: usize) -> f64 {
        self.couplings[i] / self.velocity
    }

    /// Effective mass m* = k / v (meaningful for quadratic dispersion).
    pub fn effective_mass(&self) -> f64 {
        self.wavevector / self.velocity
    }

    pub fn positions(&self) -> [f64; 3] {
        [0.0, self.d12, self.d12 + self.d23]
    }

    /// Same structure probed by a mediator of wavevector `k`. Under quadratic
    /// dispersion the group velocity follows k at fixed effective mass.
    pub fn with_wavevector(&self, k: f64) -> Self {
        let mut cfg = self.clone();
        if self.dispersion == Dispersion::Quadratic {
            cfg.velocity = self.velocity * (k / self.wavevector);
        }
        cfg.wavevector = k;
        cfg
    }

    pub fn check_resonance(&self) -> Resonance {
        check_resonance(self)
    }
}

pub fn check_resonance(cfg: &ScatterConfig) -> Resonance {
    let offset = |x: f64| x - PI * (x / PI).round();
    let offset12 = offset(cfg.wavevector * cfg.d12);
    let offset23 = offset(cfg.wavevector * cfg.d23);
    Resonance {
        ok: offset12.abs() < RESONANCE_TOLERANCE && offset23.abs() < RESONANCE_TOLERANCE,
        offset12,
        offset23,
    }
}

/// Transmission and reflection of a single delta center on mediator ⊗ center.
#[derive(Clone, Debug)]
pub struct SingleCenterSMatrix {
    pub t: CMatrix,
    pub r: CMatrix,
}

/// t = (1 + i (J/v) O)^{-1}, r = t - 1.
pub fn single_center_smatrix(coupling: f64, velocity: f64, op: &CMatrix) -> Result<SingleCenterSMatrix> {
    if !(velocity.is_finite() && velocity > 0.0) {
        return Err(Error::param("velocity", format!("must be > 0, got {velocity}")));
    }
    let n = op.nrows();
    let g = coupling / velocity;
    let lhs = identity(n) + op * (I * g);
    let t = lhs
        .try_inverse()
        .ok_or_else(|| Error::Numerical("single-center matching matrix is singular".into()))?;
    let r = &t - identity(n);
    Ok(SingleCenterSMatrix { t, r })
}

/// Kraus operators on the centers' space, indexed `[incoming][outgoing]`
/// mediator spin (0 = up, 1 = down).
#[derive(Clone, Debug)]
pub struct KrausSet {
    spin: Spin,
    transmission: [[CMatrix; 2]; 2],
    reflection: [[CMatrix; 2]; 2],
}

impl KrausSet {
    pub fn new(spin: Spin, transmission: [[CMatrix; 2]; 2], reflection: [[CMatrix; 2]; 2]) -> Result<Self> {
        let d = centers_dim(spin);
        for m in transmission.iter().chain(reflection.iter()).flatten() {
            if m.nrows() != d || m.ncols() != d {
                return Err(Error::Dimension(format!(
                    "Kraus operator is {}x{}, expected {d}x{d}",
                    m.nrows(),
                    m.ncols()
                )));
            }
        }
        Ok(KrausSet {
            spin,
            transmission,
            reflection,
        })
    }

    /// Splits joint mediator ⊗ centers transmission/reflection matrices into
    /// per-spin blocks.
    pub fn from_joint(spin: Spin, t_joint: &CMatrix, r_joint: &CMatrix) -> Self {
        let d = centers_dim(spin);
        let block = |m: &CMatrix, m_in: usize, m_out: usize| m.view((m_out * d, m_in * d), (d, d)).into_owned();
        KrausSet {
            spin,
            transmission: [0, 1].map(|i| [0, 1].map(|o| block(t_joint, i, o))),
            reflection: [0, 1].map(|i| [0, 1].map(|o| block(r_joint, i, o))),
        }
    }

    pub fn spin(&self) -> Spin {
        self.spin
    }

    /// Dimension of the three centers' space.
    pub fn centers_dim(&self) -> usize {
        centers_dim(self.spin)
    }

    pub fn t(&self, m_in: usize, m_out: usize) -> &CMatrix {
        &self.transmission[m_in][m_out]
    }

    pub fn r(&self, m_in: usize, m_out: usize) -> &CMatrix {
        &self.reflection[m_in][m_out]
    }

    pub fn transmission_ops(&self) -> impl Iterator<Item = &CMatrix> {
        self.transmission.iter().flatten()
    }

    pub fn map_transmission(&self, f: impl Fn(&CMatrix) -> CMatrix) -> Self {
        KrausSet {
            spin: self.spin,
            transmission: [0, 1].map(|i| [0, 1].map(|o| f(&self.transmission[i][o]))),
            reflection: self.reflection.clone(),
        }
    }

    fn joint(blocks: &[[CMatrix; 2]; 2], d: usize) -> CMatrix {
        let mut m = CMatrix::zeros(2 * d, 2 * d);
        for (m_in, row) in blocks.iter().enumerate() {
            for (m_out, b) in row.iter().enumerate() {
                m.view_mut((m_out * d, m_in * d), (d, d)).copy_from(b);
            }
        }
        m
    }

    pub fn joint_transmission(&self) -> CMatrix {
        Self::joint(&self.transmission, self.centers_dim())
    }

    pub fn joint_reflection(&self) -> CMatrix {
        Self::joint(&self.reflection, self.centers_dim())
    }

    /// Full S-matrix for a mediator incident from the left or the right.
    /// Right incidence follows from left incidence by mirroring the
    /// structure, so only the left-incidence half is stored; the returned
    /// matrix stacks [R; T] and must be an isometry.
    pub fn left_incidence_isometry(&self) -> CMatrix {
        let t = self.joint_transmission();
        let r = self.joint_reflection();
        let n = t.nrows();
        let mut m = CMatrix::zeros(2 * n, n);
        m.view_mut((0, 0), (n, n)).copy_from(&r);
        m.view_mut((n, 0), (n, n)).copy_from(&t);
        m
    }
}

pub fn centers_dim(spin: Spin) -> usize {
    spin.dim().pow(3)
}

/// Max-norm deviation of Σ_out (R†R + T†T) from identity, over both incoming spins.
pub fn verify_closure(ks: &KrausSet) -> f64 {
    let d = ks.centers_dim();
    let mut worst: f64 = 0.0;
    for m_in in 0..2 {
        let mut sum = CMatrix::zeros(d, d);
        for m_out in 0..2 {
            let t = ks.t(m_in, m_out);
            let r = ks.r(m_in, m_out);
            sum += t.adjoint() * t + r.adjoint() * r;
        }
        worst = worst.max(max_abs(&(sum - identity(d))));
    }
    worst
}

/// Unitarity defect of the joint left-incidence scattering block: max |S†S - 1|.
pub fn unitarity_defect(ks: &KrausSet) -> f64 {
    let s = ks.left_incidence_isometry();
    let n = s.ncols();
    max_abs(&(s.adjoint() * &s - identity(n)))
}

/// Coupling operators of the three centers on mediator ⊗ centers, already
/// multiplied by J_i / v.
fn scaled_couplings(cfg: &ScatterConfig) -> [CMatrix; 3] {
    [0, 1, 2].map(|c| center_coupling(cfg.kind, cfg.spin, c) * C64::new(cfg.coupling_ratio(c), 0.0))
}

/// Solves the three-center stationary problem as one linear system in the
/// amplitudes of all four spatial regions.
pub fn solve_scattering(cfg: &ScatterConfig) -> Result<KrausSet> {
    cfg.validate()?;
    let n = 2 * centers_dim(cfg.spin);
    let x = cfg.positions();
    let k = cfg.wavevector;

    // Unknown blocks: B0, A1, B1, A2, B2, A3 (A = right-mover, B = left-mover
    // in region j; region 0 is left of center 1). A0 is the incident identity.
    let slot_a = |region: usize| if region == 0 { None } else { Some(2 * region - 1) };
    let slot_b = |region: usize| if region == 3 { None } else { Some(2 * region) };

    let mut system = CMatrix::zeros(6 * n, 6 * n);
    let mut rhs = CMatrix::zeros(6 * n, n);
    let id = identity(n);

    // Adds coeff * amplitude(slot) to equation row block `row`; a `None`
    // slot is the incident amplitude and moves to the right-hand side.
    let mut place = |row: usize, slot: Option<usize>, coeff: &CMatrix, incident: bool| match slot {
        Some(col) => {
            let mut view = system.view_mut((row * n, col * n), (n, n));
            view += coeff;
        }
        None if incident => {
            let mut view = rhs.view_mut((row * n, 0), (n, n));
            view -= coeff;
        }
        None => {}
    };

    match cfg.dispersion {
        Dispersion::Quadratic => {
            let couplings = scaled_couplings(cfg);
            for c in 0..3 {
                let e = C64::from_polar(1.0, k * x[c]);
                let eb = e.conj();
                let g = &couplings[c];
                let (left, right) = (c, c + 1);
                let (r0, r1) = (2 * c, 2 * c + 1);
                // Continuity: psi(x_c-) - psi(x_c+) = 0.
                place(r0, slot_a(left), &(&id * e), left == 0);
                place(r0, slot_b(left), &(&id * eb), false);
                place(r0, slot_a(right), &(&id * -e), false);
                place(r0, slot_b(right), &(&id * -eb), false);
                // Derivative jump: psi'(+) - psi'(-) = 2 k (J/v) O psi(x_c),
                // divided through by k.
                place(r1, slot_a(right), &((&id * I - g * C64::new(2.0, 0.0)) * e), false);
                place(r1, slot_b(right), &((&id * -I - g * C64::new(2.0, 0.0)) * eb), false);
                place(r1, slot_a(left), &(&id * (-I * e)), left == 0);
                place(r1, slot_b(left), &(&id * (I * eb)), false);
            }
        }
        Dispersion::Linear => {
            let sigma_dim = 2 * cfg.spin.dim();
            let local_op = interaction_operator(cfg.kind, cfg.spin);
            for c in 0..3 {
                let s = single_center_smatrix(cfg.couplings[c], cfg.velocity, &local_op)?;
                let t = lift_local(&s.t, cfg.spin, c, sigma_dim);
                let r = lift_local(&s.r, cfg.spin, c, sigma_dim);
                let e = C64::from_polar(1.0, k * x[c]);
                let eb = e.conj();
                let (left, right) = (c, c + 1);
                let (r0, r1) = (2 * c, 2 * c + 1);
                // Outgoing right-mover: a_out = t a_in + r b_in (local amplitudes).
                place(r0, slot_a(right), &(&id * e), false);
                place(r0, slot_a(left), &(&t * -e), left == 0);
                place(r0, slot_b(right), &(&r * -eb), false);
                // Outgoing left-mover: b_out = r a_in + t b_in.
                place(r1, slot_b(left), &(&id * eb), false);
                place(r1, slot_a(left), &(&r * -e), left == 0);
                place(r1, slot_b(right), &(&t * -eb), false);
            }
        }
    }

    let solution = LU::new(system)
        .solve(&rhs)
        .ok_or_else(|| Error::Numerical("scattering system is singular".into()))?;
    let r_joint = solution.view((0, 0), (n, n)).into_owned();
    let t_joint = solution.view((5 * n, 0), (n, n)).into_owned();
    Ok(KrausSet::from_joint(cfg.spin, &t_joint, &r_joint))
}

/// Lifts an operator on mediator ⊗ center `c` to mediator ⊗ centers 1-3.
fn lift_local(op: &CMatrix, spin: Spin, c: usize, local_dim: usize) -> CMatrix {
    let d = spin.dim();
    let mut out = CMatrix::zeros(2 * d * d * d, 2 * d * d * d);
    // Expand op = Σ_{ab} |a><b| ⊗ op_ab over the mediator index.
    for a in 0..2 {
        for b in 0..2 {
            let block = op.view((a * d, b * d), (d, d)).into_owned();
            let mut unit = CMatrix::zeros(2, 2);
            unit[(a, b)] = ONE;
            out += kron(&unit, &embed_on_center(&block, spin, c));
        }
    }
    debug_assert_eq!(local_dim, 2 * d);
    out
}

/// Composes per-center transfer matrices with free propagation. Independent
/// of [`solve_scattering`]; kept as a cross-check.
pub fn solve_scattering_transfer(cfg: &ScatterConfig) -> Result<KrausSet> {
    cfg.validate()?;
    let n = 2 * centers_dim(cfg.spin);
    let x = cfg.positions();
    let k = cfg.wavevector;
    let id = identity(n);

    let mut total = CMatrix::identity(2 * n, 2 * n);
    for (c, &xc) in x.iter().enumerate() {
        let g = center_coupling(cfg.kind, cfg.spin, c) * C64::new(cfg.coupling_ratio(c), 0.0);
        let ig = &g * I;
        // Local transfer matrix of a delta center, (a,b)_right = M (a,b)_left.
        let mut local = CMatrix::zeros(2 * n, 2 * n);
        local.view_mut((0, 0), (n, n)).copy_from(&(&id - &ig));
        local.view_mut((0, n), (n, n)).copy_from(&(-&ig));
        local.view_mut((n, 0), (n, n)).copy_from(&ig);
        local.view_mut((n, n), (n, n)).copy_from(&(&id + &ig));
        // Global amplitudes relate to local ones by the phases e^{±ik x_c}.
        let e = C64::from_polar(1.0, k * xc);
        let mut phase = CMatrix::zeros(2 * n, 2 * n);
        let mut phase_inv = CMatrix::zeros(2 * n, 2 * n);
        for i in 0..n {
            phase[(i, i)] = e;
            phase[(n + i, n + i)] = e.conj();
            phase_inv[(i, i)] = e.conj();
            phase_inv[(n + i, n + i)] = e;
        }
        total = &phase_inv * local * &phase * total;
    }
    let m11 = total.view((0, 0), (n, n)).into_owned();
    let m12 = total.view((0, n), (n, n)).into_owned();
    let m21 = total.view((n, 0), (n, n)).into_owned();
    let m22 = total.view((n, n), (n, n)).into_owned();
    let m22_lu = LU::new(m22);
    let r_joint = -m22_lu
        .solve(&m21)
        .ok_or_else(|| Error::Numerical("transfer matrix block is singular".into()))?;
    let t_joint = m11 + m12 * &r_joint;
    Ok(KrausSet::from_joint(cfg.spin, &t_joint, &r_joint))
}

/// Max elementwise difference between two Kraus sets.
pub fn kraus_distance(a: &KrausSet, b: &KrausSet) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..2 {
        for o in 0..2 {
            worst = worst.max(max_abs(&(a.t(i, o) - b.t(i, o))));
            worst = worst.max(max_abs(&(a.r(i, o) - b.r(i, o))));
        }
    }
    worst
}

/// Swap of centers 2 and 3 on the centers' space.
pub fn swap23(spin: Spin) -> CMatrix {
    let d = spin.dim();
    let n = d * d * d;
    let mut p = CMatrix::zeros(n, n);
    for a in 0..d {
        for b in 0..d {
            for c in 0..d {
                p[(a * d * d + c * d + b, a * d * d + b * d + c)] = ONE;
            }
        }
    }
    p
}

/// True if the Kraus set is the identity channel (no coupling at all).
pub fn is_identity_channel(ks: &KrausSet, tol: f64) -> bool {
    let d = ks.centers_dim();
    (0..2).all(|i| {
        (0..2).all(|o| {
            let expected = if i == o { identity(d) } else { CMatrix::zeros(d, d) };
            max_abs(&(ks.t(i, o) - expected)) < tol && max_abs(ks.r(i, o)) < tol
        })
    })
}
