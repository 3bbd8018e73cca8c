//! Cross-method agreement and monotonic trends of the protocol and sweeps.

use scatter_teleport::channel::fixed_points;
use scatter_teleport::experiments::{disorder_point, sweep_disorder, sweep_n, DisorderBase, DisorderSpec, SweepSpec};
use scatter_teleport::protocol::{
    average_performance, ideal_projection_check, run_protocol, sample_state_at, ProtocolTemplate, Sampler, Teleporter,
};
use scatter_teleport::scatter::{
    check_resonance, kraus_distance, solve_scattering, solve_scattering_transfer, Dispersion, ScatterConfig,
};
use scatter_teleport::spinops::{CouplingKind, Spin};

const KINDS: [CouplingKind; 2] = [CouplingKind::Heisenberg, CouplingKind::Xy];

fn heisenberg(spin: Spin, j: f64, n: usize) -> ProtocolTemplate {
    ProtocolTemplate::resonant(spin, CouplingKind::Heisenberg, Dispersion::Quadratic, j, j, n, n, (1, 1)).unwrap()
}

#[test]
fn global_and_transfer_solvers_agree() {
    for spin in [Spin::HALF, Spin::ONE] {
        for kind in KINDS {
            for disp in [Dispersion::Quadratic, Dispersion::Linear] {
                for j in [0.3, 1.5, 5.0] {
                    for (p, q) in [(1.0, 1.0), (0.37, 1.21)] {
                        let cfg = ScatterConfig::dimensionless(spin, kind, disp, [j, 0.7 * j, 1.3 * j], p, q);
                        let a = solve_scattering(&cfg).unwrap();
                        let b = solve_scattering_transfer(&cfg).unwrap();
                        let dist = kraus_distance(&a, &b);
                        assert!(dist < 1e-9, "{cfg:?}: {dist:e}");
                    }
                }
            }
        }
    }
}

#[test]
fn resonance_check_reports_offsets() {
    let on = ScatterConfig::dimensionless(Spin::HALF, CouplingKind::Xy, Dispersion::Linear, [1.0; 3], 2.0, 3.0);
    assert!(check_resonance(&on).ok);
    let off = ScatterConfig::dimensionless(Spin::HALF, CouplingKind::Xy, Dispersion::Linear, [1.0; 3], 2.0, 3.2);
    let r = check_resonance(&off);
    assert!(!r.ok);
    assert!((r.offset23.abs() - 0.2 * std::f64::consts::PI).abs() < 1e-9, "{r:?}");
}

#[test]
fn converged_run_matches_ideal_projection() {
    for spin in [Spin::HALF, Spin::ONE] {
        let tele = Teleporter::prepare(&heisenberg(spin, 3.0, 0)).unwrap();
        for i in 0..3 {
            let phi = sample_state_at(spin, Sampler::HaarUniform, 21, i).unwrap();
            let ideal = ideal_projection_check(spin, &phi).unwrap();
            let run = tele.run_to_convergence(&phi).unwrap();
            let expected_p = ideal.probability / spin.dim() as f64;
            assert!((run.result.success_probability - expected_p).abs() < 1e-6, "{spin}: {run:?}");
            assert!((run.result.fidelity - 1.0).abs() < 1e-6);
            assert!((ideal.overlap - 1.0).abs() < 1e-12);
        }
    }
}

#[test]
fn run_protocol_equals_teleporter() {
    let tpl = heisenberg(Spin::HALF, 1.5, 5);
    let phi = sample_state_at(Spin::HALF, Sampler::BlochAngles, 4, 0).unwrap();
    let a = run_protocol(&tpl.with_phi(phi.clone()).unwrap()).unwrap();
    let b = Teleporter::prepare(&tpl).unwrap().run(&phi).unwrap();
    assert_eq!(a.fidelity, b.fidelity);
    assert_eq!(a.success_probability, b.success_probability);
}

#[test]
fn fidelity_grows_with_mediator_count() {
    let spec = SweepSpec {
        spin: Spin::HALF,
        kind: CouplingKind::Heisenberg,
        dispersion: Dispersion::Quadratic,
        j_over_v: vec![1.5],
        n_grid: (0..=12).map(|n| (n, n)).collect(),
        resonance: (1, 1),
        sampler: Sampler::HaarUniform,
        samples: 300,
        seed: 5,
    };
    let records = sweep_n(&spec).unwrap();
    for w in records.windows(2) {
        assert!(
            w[1].stats.mean_fidelity >= w[0].stats.mean_fidelity - 1e-9,
            "n={} F={} -> n={} F={}",
            w[0].n23,
            w[0].stats.mean_fidelity,
            w[1].n23,
            w[1].stats.mean_fidelity
        );
    }
}

#[test]
fn stronger_coupling_needs_fewer_mediators() {
    let minimal_n = |j: f64| {
        (0..=40)
            .find(|&n| {
                average_performance(&heisenberg(Spin::HALF, j, n), Sampler::HaarUniform, 300, 8)
                    .unwrap()
                    .mean_fidelity
                    >= 0.95
            })
            .expect("threshold reached")
    };
    let ns: Vec<usize> = [0.5, 1.5, 5.0].into_iter().map(minimal_n).collect();
    assert!(ns.windows(2).all(|w| w[1] <= w[0]), "{ns:?}");
}

#[test]
fn eigen_gap_widens_with_coupling() {
    let gap = |j: f64| {
        let cfg = ScatterConfig::dimensionless(
            Spin::HALF,
            CouplingKind::Heisenberg,
            Dispersion::Quadratic,
            [0.0, j, j],
            1.0,
            1.0,
        );
        fixed_points(&solve_scattering(&cfg).unwrap()).unwrap().eigen_gap
    };
    let gaps: Vec<f64> = [0.3, 0.8, 1.5].into_iter().map(gap).collect();
    assert!(gaps.windows(2).all(|w| w[1] > w[0]), "{gaps:?}");
    assert!(gaps.iter().all(|&g| g > 0.0 && g < 1.0));
}

#[test]
fn qutrit_samplers_agree_on_averages() {
    let tpl = heisenberg(Spin::ONE, 5.0, 4);
    let a = average_performance(&tpl, Sampler::QutritAngles, 2000, 3).unwrap();
    let b = average_performance(&tpl, Sampler::HaarUniform, 2000, 3).unwrap();
    let tol_f = 4.0 * (a.stderr_fidelity.hypot(b.stderr_fidelity)).max(1e-4);
    let tol_p = 4.0 * (a.stderr_probability.hypot(b.stderr_probability)).max(1e-5);
    assert!((a.mean_fidelity - b.mean_fidelity).abs() < tol_f, "{a:?} vs {b:?}");
    assert!((a.mean_probability - b.mean_probability).abs() < tol_p, "{a:?} vs {b:?}");
}

fn disorder_base() -> DisorderBase {
    DisorderBase {
        spin: Spin::HALF,
        kind: CouplingKind::Xy,
        dispersion: Dispersion::Linear,
        j2_over_v: 2.0,
        n23: 4,
        n12: 4,
        resonance: (1, 1),
        sampler: Sampler::HaarUniform,
    }
}

fn disorder_spec(samples: usize) -> DisorderSpec {
    DisorderSpec {
        k0: 1.0,
        f3b: 1.0,
        f1c: 1.0,
        samples,
        seed: 17,
    }
}

#[test]
fn disorder_baseline_matches_sweep() {
    let base = disorder_base();
    let dis = disorder_spec(200);
    let baseline = disorder_point(&base, &dis, 0.0).unwrap();
    let sweep = sweep_n(&SweepSpec {
        spin: base.spin,
        kind: base.kind,
        dispersion: base.dispersion,
        j_over_v: vec![base.j2_over_v],
        n_grid: vec![(base.n23, base.n12)],
        resonance: base.resonance,
        sampler: base.sampler,
        samples: dis.samples,
        seed: dis.seed,
    })
    .unwrap();
    let s = &sweep[0].stats;
    assert!((baseline.mean_fidelity - s.mean_fidelity).abs() < 1e-12);
    assert!((baseline.mean_probability - s.mean_probability).abs() < 1e-12);
}

#[test]
fn vanishing_spread_matches_linear_response_path() {
    // A tiny nonzero spread goes through per-trajectory re-solving; it must
    // agree with the precomputed-response path used at zero spread.
    let base = disorder_base();
    let dis = disorder_spec(100);
    let exact = disorder_point(&base, &dis, 0.0).unwrap();
    let tiny = disorder_point(&base, &dis, 1e-10).unwrap();
    assert!((exact.mean_fidelity - tiny.mean_fidelity).abs() < 1e-7, "{exact:?} vs {tiny:?}");
    assert!((exact.mean_probability - tiny.mean_probability).abs() < 1e-7);
}

#[test]
fn disorder_records_are_normalized_to_baseline() {
    let base = disorder_base();
    let dis = disorder_spec(100);
    let records = sweep_disorder(&base, &dis, &[0.0, 0.02]).unwrap();
    assert!((records[0].norm_f - 1.0).abs() < 1e-12);
    assert!((records[0].norm_p - 1.0).abs() < 1e-12);
    assert!(records[1].norm_p < 1.0);
    assert!(disorder_point(&base, &dis, 0.5).is_err());
    assert!(sweep_disorder(&base, &dis, &[]).is_err());
}
