//! Conditional quantum map for one transmitted (detected) mediator, its
//! iteration, and fixed-point diagnostics.

use nalgebra::{DMatrix, Schur};

use crate::error::{Error, Result};
use crate::scatter::KrausSet;
use crate::spinops::{hermitian_part, singlet_state, CMatrix, CenterPair, DensityOperator, C64};

/// Step probabilities below this are treated as "detection impossible".
pub const DETECTION_FLOOR: f64 = 1e-14;

#[derive(Clone, Debug)]
pub struct MapOutcome {
    pub state: DensityOperator,
    pub probability: f64,
}

/// (1/2) Σ_{in,out} T ρ T†: the mediator enters maximally mixed and is
/// detected whatever its outgoing spin.
pub fn unnormalized_map(ks: &KrausSet, rho: &CMatrix) -> CMatrix {
    let d = ks.centers_dim();
    let mut out = CMatrix::zeros(d, d);
    for t in ks.transmission_ops() {
        out += t * rho * t.adjoint();
    }
    out * C64::new(0.5, 0.0)
}

pub fn apply_map(ks: &KrausSet, rho: &DensityOperator) -> Result<MapOutcome> {
    apply_at_step(ks, rho, 1)
}

fn apply_at_step(ks: &KrausSet, rho: &DensityOperator, step: usize) -> Result<MapOutcome> {
    if rho.dim() != ks.centers_dim() {
        return Err(Error::Dimension(format!(
            "state has dimension {}, Kraus operators act on {}",
            rho.dim(),
            ks.centers_dim()
        )));
    }
    let numerator = unnormalized_map(ks, rho.matrix());
    let probability = numerator.trace().re;
    if !(probability >= DETECTION_FLOOR) {
        return Err(Error::DetectionImpossible { step, probability });
    }
    let state = hermitian_part(&(numerator / C64::new(probability, 0.0)));
    Ok(MapOutcome {
        state: DensityOperator::from_matrix_unchecked(state, rho.dims().to_vec())?,
        probability,
    })
}

#[derive(Clone, Debug)]
pub struct IterationTrace {
    /// ϱ^(0) .. ϱ^(n).
    pub states: Vec<DensityOperator>,
    pub step_probabilities: Vec<f64>,
    pub cumulative_probability: f64,
}

impl IterationTrace {
    pub fn final_state(&self) -> &DensityOperator {
        self.states.last().expect("trace always holds the initial state")
    }
}

pub fn iterate_map(ks: &KrausSet, rho0: &DensityOperator, n: usize) -> Result<IterationTrace> {
    let mut states = Vec::with_capacity(n + 1);
    let mut step_probabilities = Vec::with_capacity(n);
    states.push(rho0.clone());
    for step in 1..=n {
        let out = apply_at_step(ks, states.last().unwrap(), step)?;
        step_probabilities.push(out.probability);
        states.push(out.state);
    }
    let cumulative_probability = step_probabilities.iter().product();
    Ok(IterationTrace {
        states,
        step_probabilities,
        cumulative_probability,
    })
}

/// Applies the map once per Kraus set in `maps`, in order, returning the
/// final state and the product of step probabilities.
pub fn apply_sequence<'a>(
    maps: impl IntoIterator<Item = &'a KrausSet>,
    rho0: &DensityOperator,
) -> Result<(DensityOperator, f64)> {
    let mut rho = rho0.clone();
    let mut probability = 1.0;
    for (i, ks) in maps.into_iter().enumerate() {
        let out = apply_at_step(ks, &rho, i + 1)?;
        probability *= out.probability;
        rho = out.state;
    }
    Ok((rho, probability))
}

/// Uhlmann fidelity of the reduced state of `pair` with the spin-s singlet.
pub fn singlet_fidelity(rho: &DensityOperator, pair: CenterPair) -> Result<f64> {
    let (a, b) = pair.centers();
    let marginal = rho.partial_trace(&[a, b])?;
    let spin = crate::spinops::Spin::from_twice((marginal.dims()[0] - 1) as u32)?;
    Ok(marginal.fidelity_with(&singlet_state(spin)))
}

/// Orthonormal real coordinates on Hermitian d×d matrices: diagonal entries,
/// then √2·Re and √2·Im of each upper off-diagonal entry.
struct HermitianBasis {
    d: usize,
}

impl HermitianBasis {
    fn len(&self) -> usize {
        self.d * self.d
    }

    fn element(&self, k: usize) -> CMatrix {
        let d = self.d;
        let mut m = CMatrix::zeros(d, d);
        if k < d {
            m[(k, k)] = C64::new(1.0, 0.0);
            return m;
        }
        let (i, j, imag) = self.off_diagonal(k);
        let r = std::f64::consts::FRAC_1_SQRT_2;
        if imag {
            m[(i, j)] = C64::new(0.0, -r);
            m[(j, i)] = C64::new(0.0, r);
        } else {
            m[(i, j)] = C64::new(r, 0.0);
            m[(j, i)] = C64::new(r, 0.0);
        }
        m
    }

    fn off_diagonal(&self, k: usize) -> (usize, usize, bool) {
        let idx = (k - self.d) / 2;
        let imag = (k - self.d) % 2 == 1;
        let mut count = 0;
        for i in 0..self.d {
            for j in i + 1..self.d {
                if count == idx {
                    return (i, j, imag);
                }
                count += 1;
            }
        }
        unreachable!("coordinate index out of range")
    }

    fn coordinates(&self, m: &CMatrix) -> Vec<f64> {
        let d = self.d;
        let s = std::f64::consts::SQRT_2;
        let mut out = Vec::with_capacity(d * d);
        out.extend((0..d).map(|i| m[(i, i)].re));
        for i in 0..d {
            for j in i + 1..d {
                // element(k) for Im uses -i/√2 at (i,j), so the coordinate is -√2·Im.
                out.push(s * m[(i, j)].re);
                out.push(-s * m[(i, j)].im);
            }
        }
        out
    }

    fn assemble(&self, coords: &[f64]) -> CMatrix {
        let mut m = CMatrix::zeros(self.d, self.d);
        for (k, &c) in coords.iter().enumerate() {
            if c != 0.0 {
                m += self.element(k) * C64::new(c, 0.0);
            }
        }
        m
    }
}

/// The unnormalized map as a real matrix on Hermitian coordinates.
pub fn real_superoperator(ks: &KrausSet) -> DMatrix<f64> {
    let basis = HermitianBasis { d: ks.centers_dim() };
    let n = basis.len();
    let mut m = DMatrix::<f64>::zeros(n, n);
    for k in 0..n {
        let image = unnormalized_map(ks, &basis.element(k));
        for (row, v) in basis.coordinates(&image).into_iter().enumerate() {
            m[(row, k)] = v;
        }
    }
    m
}

#[derive(Clone, Debug)]
pub struct FixedPointReport {
    /// Density operators spanning the fixed-point space, each mapped to
    /// itself with unit probability.
    pub states: Vec<DensityOperator>,
    /// Dimension of the unit-eigenvalue eigenspace of the unnormalized map.
    pub fixed_dimension: usize,
    /// 1 minus the largest modulus among the remaining eigenvalues (0 if none).
    pub eigen_gap: f64,
    /// Moduli of all eigenvalues, descending.
    pub spectrum: Vec<f64>,
}

const NULL_TOLERANCE: f64 = 1e-8;

pub fn fixed_points(ks: &KrausSet) -> Result<FixedPointReport> {
    let d = ks.centers_dim();
    let basis = HermitianBasis { d };
    let sup = real_superoperator(ks);
    let n = sup.nrows();

    let eigenvalues = spectrum_of(&sup)?;
    let shifted = &sup - DMatrix::<f64>::identity(n, n);
    let svd = shifted.svd(false, true);
    let v_t = svd
        .v_t
        .as_ref()
        .ok_or_else(|| Error::Numerical("SVD did not return right singular vectors".into()))?;

    let null: Vec<Vec<f64>> = svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|(_, &sv)| sv < NULL_TOLERANCE)
        .map(|(i, _)| v_t.row(i).iter().copied().collect())
        .collect();
    let fixed_dimension = null.len();

    let mut by_distance: Vec<(f64, f64)> = eigenvalues.iter().map(|z| ((z - 1.0).norm(), z.norm())).collect();
    by_distance.sort_by(|a, b| a.0.total_cmp(&b.0));
    let eigen_gap = by_distance
        .iter()
        .skip(fixed_dimension)
        .map(|&(_, modulus)| modulus)
        .fold(None, |acc: Option<f64>, m| Some(acc.map_or(m, |a| a.max(m))))
        .map_or(0.0, |m| 1.0 - m);
    let mut spectrum: Vec<f64> = eigenvalues.iter().map(|z| z.norm()).collect();
    spectrum.sort_by(|a, b| b.total_cmp(a));

    // Positive and negative parts of Hermitian fixed points are fixed
    // themselves; collect a linearly independent set of them.
    let dims = vec![ks.spin().dim(); 3];
    let mut states: Vec<DensityOperator> = Vec::new();
    let mut span: Vec<Vec<f64>> = Vec::new();
    for coords in &null {
        let h = basis.assemble(coords);
        for part in positive_negative_parts(&h) {
            let tr = part.trace().re;
            if tr < 1e-9 {
                continue;
            }
            let rho = part / C64::new(tr, 0.0);
            let image = unnormalized_map(ks, &rho);
            if crate::spinops::max_abs(&(&image - &rho)) > 1e-7 {
                continue;
            }
            let mut v = basis.coordinates(&rho);
            for u in &span {
                let proj: f64 = v.iter().zip(u).map(|(a, b)| a * b).sum();
                v.iter_mut().zip(u).for_each(|(a, b)| *a -= proj * b);
            }
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 1e-6 {
                span.push(v.iter().map(|x| x / norm).collect());
                states.push(DensityOperator::from_matrix_unchecked(rho, dims.clone())?);
            }
            if states.len() == fixed_dimension {
                break;
            }
        }
    }

    Ok(FixedPointReport {
        states,
        fixed_dimension,
        eigen_gap,
        spectrum,
    })
}

/// Eigenvalues via Schur decomposition with a bounded iteration count; the
/// unbounded variant can stall on degenerate spectra.
fn spectrum_of(m: &DMatrix<f64>) -> Result<Vec<C64>> {
    const EPS: f64 = 1e-14;
    const MAX_ITER: usize = 10_000;
    if let Some(schur) = Schur::try_new(m.clone(), EPS, MAX_ITER) {
        return Ok(schur.complex_eigenvalues().iter().copied().collect());
    }
    Schur::try_new(m.map(|x| C64::new(x, 0.0)), EPS, MAX_ITER)
        .and_then(|s| s.eigenvalues())
        .map(|ev| ev.iter().copied().collect())
        .ok_or_else(|| Error::Numerical("Schur decomposition did not converge".into()))
}

fn positive_negative_parts(h: &CMatrix) -> [CMatrix; 2] {
    let eig = nalgebra::SymmetricEigen::new(hermitian_part(h));
    let n = h.nrows();
    let mut pos = CMatrix::zeros(n, n);
    let mut neg = CMatrix::zeros(n, n);
    for (i, &lambda) in eig.eigenvalues.iter().enumerate() {
        let v = eig.eigenvectors.column(i);
        let outer = v * v.adjoint();
        if lambda > 0.0 {
            pos += outer * C64::new(lambda, 0.0);
        } else if lambda < 0.0 {
            neg += outer * C64::new(-lambda, 0.0);
        }
    }
    [pos, neg]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scatter::{solve_scattering, Dispersion, ScatterConfig};
    use crate::spinops::{max_abs, CouplingKind, PureState, Spin};

    fn step_b(spin: Spin, j: f64) -> KrausSet {
        let cfg = ScatterConfig::dimensionless(
            spin,
            CouplingKind::Heisenberg,
            Dispersion::Quadratic,
            [0.0, j, j],
            1.0,
            1.0,
        );
        solve_scattering(&cfg).unwrap()
    }

    fn free(spin: Spin) -> KrausSet {
        let cfg = ScatterConfig::dimensionless(
            spin,
            CouplingKind::Heisenberg,
            Dispersion::Quadratic,
            [0.0; 3],
            1.0,
            1.0,
        );
        solve_scattering(&cfg).unwrap()
    }

    fn chi_a(spin: Spin, phi: &PureState) -> DensityOperator {
        let top = PureState::spin_basis(spin, spin.value()).unwrap();
        let bottom = PureState::spin_basis(spin, -spin.value()).unwrap();
        phi.tensor(&top).tensor(&bottom).projector()
    }

    #[test]
    fn hermitian_basis_roundtrip() {
        let basis = HermitianBasis { d: 3 };
        let mut h = CMatrix::zeros(3, 3);
        h[(0, 0)] = C64::new(0.2, 0.0);
        h[(0, 2)] = C64::new(0.1, -0.3);
        h[(2, 0)] = C64::new(0.1, 0.3);
        h[(1, 2)] = C64::new(-0.4, 0.7);
        h[(2, 1)] = C64::new(-0.4, -0.7);
        let back = basis.assemble(&basis.coordinates(&h));
        assert!(max_abs(&(back - &h)) < 1e-15);
        for k in 0..basis.len() {
            let e = basis.element(k);
            assert!((e.dotc(&e).re - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn free_map_is_identity() {
        let ks = free(Spin::HALF);
        let rho = chi_a(Spin::HALF, &PureState::spin_basis(Spin::HALF, -0.5).unwrap());
        let out = apply_map(&ks, &rho).unwrap();
        assert!((out.probability - 1.0).abs() < 1e-14);
        assert!(max_abs(&(out.state.matrix() - rho.matrix())) < 1e-14);
    }

    #[test]
    fn zero_steps() {
        let ks = step_b(Spin::HALF, 1.5);
        let rho = chi_a(Spin::HALF, &PureState::spin_basis(Spin::HALF, 0.5).unwrap());
        let trace = iterate_map(&ks, &rho, 0).unwrap();
        assert_eq!(trace.states.len(), 1);
        assert_eq!(trace.cumulative_probability, 1.0);
    }

    #[test]
    fn detection_impossible_is_reported() {
        let ks = step_b(Spin::HALF, 1.5).map_transmission(|t| t * C64::new(0.0, 0.0));
        let rho = chi_a(Spin::HALF, &PureState::spin_basis(Spin::HALF, 0.5).unwrap());
        assert!(matches!(
            apply_map(&ks, &rho),
            Err(Error::DetectionImpossible { step: 1, .. })
        ));
        assert!(matches!(
            iterate_map(&ks, &rho, 3),
            Err(Error::DetectionImpossible { step: 1, .. })
        ));
    }

    #[test]
    fn product_pair_projects_onto_singlet() {
        for (spin, n, expected) in [(Spin::HALF, 50, 0.5), (Spin::ONE, 60, 1.0 / 3.0)] {
            let ks = step_b(spin, 1.5);
            let phi = PureState::spin_basis(spin, spin.value()).unwrap();
            let trace = iterate_map(&ks, &chi_a(spin, &phi), n).unwrap();
            assert!((trace.cumulative_probability - expected).abs() < 1e-6, "s = {spin}");
            let f = singlet_fidelity(trace.final_state(), CenterPair::P23).unwrap();
            assert!(f > 1.0 - 1e-6);
            let product: f64 = trace.step_probabilities.iter().product();
            assert!((product - trace.cumulative_probability).abs() <= 1e-12 * product);
        }
    }

    #[test]
    fn step_b_probability_strictly_between_half_and_one() {
        let ks = step_b(Spin::HALF, 1.5);
        let phi = PureState::spin_basis(Spin::HALF, 0.5).unwrap();
        let up_down = PureState::spin_basis(Spin::HALF, 0.5)
            .unwrap()
            .tensor(&PureState::spin_basis(Spin::HALF, -0.5).unwrap());
        let rho = phi.tensor(&up_down).projector();
        let out = apply_map(&ks, &rho).unwrap();
        assert!(out.probability > 0.5 && out.probability < 1.0);
    }

    #[test]
    fn free_map_fixes_everything() {
        let report = fixed_points(&free(Spin::HALF)).unwrap();
        assert_eq!(report.fixed_dimension, 64);
        assert_eq!(report.eigen_gap, 0.0);
    }
}
