//! Property tests for the algebraic and channel invariants.

use proptest::prelude::*;

use scatter_teleport::channel::{apply_map, iterate_map, singlet_fidelity, unnormalized_map};
use scatter_teleport::protocol::{initial_state, ProtocolTemplate, Sampler, Teleporter};
use scatter_teleport::scatter::{solve_scattering, swap23, verify_closure, Dispersion, ScatterConfig};
use scatter_teleport::spinops::{
    center_coupling, hermiticity_defect, interaction_operator, max_abs, singlet_state, two_center_quench_operator,
    CMatrix, CVector, CenterPair, CouplingKind, DensityOperator, PureState, Spin, C64,
};

fn spin_strategy() -> impl Strategy<Value = Spin> {
    (1u32..=3).prop_map(|t| Spin::from_twice(t).unwrap())
}

fn kind_strategy() -> impl Strategy<Value = CouplingKind> {
    prop_oneof![Just(CouplingKind::Heisenberg), Just(CouplingKind::Xy)]
}

fn dispersion_strategy() -> impl Strategy<Value = Dispersion> {
    prop_oneof![Just(Dispersion::Quadratic), Just(Dispersion::Linear)]
}

fn complex_vec(len: usize) -> impl Strategy<Value = Vec<C64>> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0).prop_map(|(a, b)| C64::new(a, b)), len)
}

fn pure(amps: Vec<C64>, dims: Vec<usize>) -> Option<PureState> {
    let v = CVector::from_vec(amps);
    if v.norm() < 1e-3 {
        return None;
    }
    PureState::normalized(v, dims).ok()
}

/// Random density operator on three spin-s centers from a few weighted vectors.
fn density(spin: Spin, vecs: &[Vec<C64>], weights: &[f64]) -> DensityOperator {
    let d = spin.dim().pow(3);
    let mut m = CMatrix::zeros(d, d);
    for (v, &w) in vecs.iter().zip(weights) {
        let v = CVector::from_vec(v.clone());
        m += &v * v.adjoint() * C64::new(w, 0.0);
    }
    let tr = m.trace();
    DensityOperator::new(m / tr, vec![spin.dim(); 3]).unwrap()
}

fn small_config() -> impl Strategy<Value = ScatterConfig> {
    (
        prop_oneof![Just(Spin::HALF), Just(Spin::ONE)],
        kind_strategy(),
        dispersion_strategy(),
        prop::array::uniform3(0.0f64..6.0),
        0.2f64..3.0,
        0.2f64..3.0,
    )
        .prop_map(|(spin, kind, disp, j, p, q)| ScatterConfig::dimensionless(spin, kind, disp, j, p, q))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn interaction_operators_are_hermitian(spin in spin_strategy(), kind in kind_strategy(), center in 0usize..3) {
        prop_assert!(hermiticity_defect(&interaction_operator(kind, spin)) < 1e-12);
        prop_assert!(hermiticity_defect(&center_coupling(kind, spin, center)) < 1e-12);
    }

    #[test]
    fn singlet_is_annihilated(
        spin in spin_strategy(),
        kind in kind_strategy(),
        chi in complex_vec(2),
        other in complex_vec(6),
        pair23 in any::<bool>(),
    ) {
        let Some(chi) = pure(chi, vec![2]) else { return Ok(()) };
        let d = spin.dim();
        let Some(phi) = pure(other[..d].to_vec(), vec![d]) else { return Ok(()) };
        let singlet = singlet_state(spin);
        let (pair, psi) = if pair23 {
            (CenterPair::P23, chi.tensor(&phi).tensor(&singlet))
        } else {
            (CenterPair::P12, chi.tensor(&singlet).tensor(&phi))
        };
        let op = two_center_quench_operator(kind, spin, pair);
        prop_assert!((&op * psi.amplitudes()).norm() < 1e-12);
    }

    #[test]
    fn partial_trace_of_product_returns_factors(a in complex_vec(3), b in complex_vec(3)) {
        let (Some(a), Some(b)) = (pure(a, vec![3]), pure(b, vec![3])) else { return Ok(()) };
        let rho = a.tensor(&b).projector();
        let ra = rho.partial_trace(&[0]).unwrap();
        let rb = rho.partial_trace(&[1]).unwrap();
        prop_assert!(max_abs(&(ra.matrix() - a.projector().matrix())) < 1e-12);
        prop_assert!(max_abs(&(rb.matrix() - b.projector().matrix())) < 1e-12);
    }

    #[test]
    fn closure_holds(cfg in small_config()) {
        let ks = solve_scattering(&cfg).unwrap();
        prop_assert!(verify_closure(&ks) < 1e-10);
    }

    #[test]
    fn map_is_positive_and_trace_nonincreasing(
        cfg in small_config(),
        vecs in prop::collection::vec(complex_vec(27), 1..4),
        weights in prop::collection::vec(0.01f64..1.0, 3),
    ) {
        let spin = cfg.spin;
        let d = spin.dim().pow(3);
        let vecs: Vec<Vec<C64>> = vecs.into_iter().map(|v| v[..d].to_vec()).collect();
        let rho = density(spin, &vecs, &weights);
        let image = unnormalized_map(&solve_scattering(&cfg).unwrap(), rho.matrix());
        let p = image.trace().re;
        prop_assert!((0.0..=1.0 + 1e-12).contains(&p), "p = {}", p);
        let herm = (&image + image.adjoint()) * C64::new(0.5, 0.0);
        let dens = DensityOperator::from_matrix_unchecked(herm, vec![spin.dim(); 3]).unwrap();
        prop_assert!(dens.min_eigenvalue() >= -1e-10);
    }

    #[test]
    fn map_is_linear(
        cfg in small_config(),
        a in complex_vec(27),
        b in complex_vec(27),
        alpha in -2.0f64..2.0,
        beta in -2.0f64..2.0,
    ) {
        let d = cfg.spin.dim().pow(3);
        let ks = solve_scattering(&cfg).unwrap();
        let ra = density(cfg.spin, &[a[..d].to_vec()], &[1.0]);
        let rb = density(cfg.spin, &[b[..d].to_vec()], &[1.0]);
        let (ca, cb) = (C64::new(alpha, 0.0), C64::new(beta, 0.0));
        let lhs = unnormalized_map(&ks, &(ra.matrix() * ca + rb.matrix() * cb));
        let rhs = unnormalized_map(&ks, ra.matrix()) * ca + unnormalized_map(&ks, rb.matrix()) * cb;
        prop_assert!(max_abs(&(lhs - rhs)) < 1e-12);
    }

    #[test]
    fn singlet_family_is_stationary(
        spin in prop_oneof![Just(Spin::HALF), Just(Spin::ONE)],
        kind in kind_strategy(),
        disp in dispersion_strategy(),
        j in 0.1f64..6.0,
        p in 1u32..4,
        q in 1u32..4,
        amps in complex_vec(3),
    ) {
        let d = spin.dim();
        let Some(phi) = pure(amps[..d].to_vec(), vec![d]) else { return Ok(()) };
        let cfg = ScatterConfig::dimensionless(spin, kind, disp, [0.0, j, j], f64::from(p), f64::from(q));
        let ks = solve_scattering(&cfg).unwrap();
        let rho = phi.tensor(&singlet_state(spin)).projector();
        let out = apply_map(&ks, &rho).unwrap();
        prop_assert!((out.probability - 1.0).abs() < 1e-10);
        prop_assert!(out.state.trace_distance(&rho) < 1e-10);
    }

    #[test]
    fn pair_converges_monotonically_to_singlet(
        kind in kind_strategy(),
        j in 0.5f64..5.0,
        amps in complex_vec(2),
    ) {
        let Some(phi) = pure(amps, vec![2]) else { return Ok(()) };
        let cfg = ScatterConfig::dimensionless(Spin::HALF, kind, Dispersion::Quadratic, [0.0, j, j], 1.0, 1.0);
        let ks = solve_scattering(&cfg).unwrap();
        let trace = iterate_map(&ks, &initial_state(Spin::HALF, &phi).unwrap(), 30).unwrap();
        let distances: Vec<f64> = trace
            .states
            .iter()
            .map(|rho| 1.0 - singlet_fidelity(rho, CenterPair::P23).unwrap())
            .collect();
        for w in distances.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-10, "{:?}", distances);
        }
    }

    #[test]
    fn symmetric_step_b_commutes_with_swap(
        spin in prop_oneof![Just(Spin::HALF), Just(Spin::ONE)],
        kind in kind_strategy(),
        j in 0.1f64..5.0,
    ) {
        // With J1 = 0, J2 = J3 and d23 a multiple of π, centers 2 and 3 are
        // interchangeable up to the propagation phase, which is ±1 here.
        let cfg = ScatterConfig::dimensionless(spin, kind, Dispersion::Quadratic, [0.0, j, j], 1.0, 2.0);
        let ks = solve_scattering(&cfg).unwrap();
        let swap = swap23(spin);
        for i in 0..2 {
            for o in 0..2 {
                let t = ks.t(i, o);
                prop_assert!(max_abs(&(&swap * t * &swap - t)) < 1e-10);
            }
        }
    }

    #[test]
    fn fidelity_and_probability_are_bounded(
        kind in kind_strategy(),
        disp in dispersion_strategy(),
        jb in 0.0f64..6.0,
        jc in 0.0f64..6.0,
        n23 in 0usize..12,
        n12 in 0usize..12,
        amps in complex_vec(2),
    ) {
        let Some(phi) = pure(amps, vec![2]) else { return Ok(()) };
        let tpl = ProtocolTemplate::resonant(Spin::HALF, kind, disp, jb, jc, n23, n12, (1, 1)).unwrap();
        let tele = Teleporter::prepare(&tpl).unwrap();
        let r = tele.run(&phi).unwrap();
        prop_assert!((0.0..=1.0).contains(&r.fidelity));
        prop_assert!((0.0..=1.0 + 1e-12).contains(&r.success_probability));
        let product = r.stage_probabilities[0] * r.stage_probabilities[1];
        prop_assert!((r.success_probability - product).abs() <= 1e-12 * product.max(1e-300));
        let (f, p) = tele.response().unwrap().evaluate(&phi).unwrap().unwrap();
        prop_assert!((f - r.fidelity).abs() < 1e-9);
        prop_assert!((p - r.success_probability).abs() < 1e-12);
    }
}

#[test]
fn sampler_choice_is_checked_against_spin() {
    assert!(Sampler::BlochAngles.check(Spin::ONE).is_err());
    assert!(Sampler::QutritAngles.check(Spin::HALF).is_err());
    assert!(Sampler::HaarUniform.check(Spin::from_twice(5).unwrap()).is_ok());
}
