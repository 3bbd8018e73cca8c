//! The three-step teleportation protocol: prepare |φ>|s,-s>, stream n23
//! mediators through centers 2-3, then n12 through centers 1-2.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Exp1, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{apply_map, apply_sequence, unnormalized_map, DETECTION_FLOOR};
use crate::error::{Error, Result};
use crate::montecarlo::{estimate, stream_rng, StreamPurpose};
use crate::scatter::{solve_scattering, Dispersion, KrausSet, ScatterConfig};
use crate::spinops::{partial_trace, singlet_state, CMatrix, CVector, CouplingKind, DensityOperator, PureState, Spin, C64};

/// Stopping rule for "enough mediators": per-step trace-distance change.
pub const CONVERGENCE_TOLERANCE: f64 = 1e-10;
pub const CONVERGENCE_MAX_STEPS: usize = 200;

/// Protocol parameters with the teleported state left free.
#[derive(Clone, Debug, PartialEq)]
pub struct ProtocolTemplate {
    pub spin: Spin,
    pub n23: usize,
    pub n12: usize,
    /// Step (b): J1 = 0.
    pub config_b: ScatterConfig,
    /// Step (c): J3 = 0.
    pub config_c: ScatterConfig,
}

impl ProtocolTemplate {
    pub fn new(config_b: ScatterConfig, config_c: ScatterConfig, n23: usize, n12: usize) -> Result<Self> {
        if config_b.couplings[0] != 0.0 {
            return Err(Error::param("config_b.J1", "must be exactly 0 during step (b)"));
        }
        if config_c.couplings[2] != 0.0 {
            return Err(Error::param("config_c.J3", "must be exactly 0 during step (c)"));
        }
        if config_b.spin != config_c.spin {
            return Err(Error::param("config_c.spin", "both stages must use the same centers"));
        }
        config_b.validate()?;
        config_c.validate()?;
        Ok(ProtocolTemplate {
            spin: config_b.spin,
            n23,
            n12,
            config_b,
            config_c,
        })
    }

    /// Symmetric couplings J2 = J3 = J_b in step (b) and J1 = J2 = J_c in
    /// step (c), with k·d12 = p π and k·d23 = q π.
    #[allow(clippy::too_many_arguments)]
    pub fn resonant(
        spin: Spin,
        kind: CouplingKind,
        dispersion: Dispersion,
        jb_over_v: f64,
        jc_over_v: f64,
        n23: usize,
        n12: usize,
        resonance: (u32, u32),
    ) -> Result<Self> {
        let (p, q) = (f64::from(resonance.0), f64::from(resonance.1));
        let b = ScatterConfig::dimensionless(spin, kind, dispersion, [0.0, jb_over_v, jb_over_v], p, q);
        let c = ScatterConfig::dimensionless(spin, kind, dispersion, [jc_over_v, jc_over_v, 0.0], p, q);
        Self::new(b, c, n23, n12)
    }

    pub fn with_phi(&self, phi: PureState) -> Result<ProtocolSpec> {
        check_phi(self.spin, &phi)?;
        Ok(ProtocolSpec {
            template: self.clone(),
            phi,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProtocolSpec {
    pub template: ProtocolTemplate,
    pub phi: PureState,
}

#[derive(Clone, Debug)]
pub struct ProtocolResult {
    pub fidelity: f64,
    pub success_probability: f64,
    /// Cumulative detection probabilities of step (b) and step (c).
    pub stage_probabilities: [f64; 2],
    pub final_state: DensityOperator,
    pub center1_marginal: DensityOperator,
    pub center3_marginal: DensityOperator,
}

fn check_phi(spin: Spin, phi: &PureState) -> Result<()> {
    if phi.dim() != spin.dim() {
        return Err(Error::Dimension(format!(
            "state to teleport has dimension {}, expected {}",
            phi.dim(),
            spin.dim()
        )));
    }
    Ok(())
}

/// |χ_a> = |φ>_1 |s,-s>_23.
pub fn initial_state(spin: Spin, phi: &PureState) -> Result<DensityOperator> {
    check_phi(spin, phi)?;
    let top = PureState::spin_basis(spin, spin.value())?;
    let bottom = PureState::spin_basis(spin, -spin.value())?;
    Ok(phi.tensor(&top).tensor(&bottom).projector())
}

/// Runs both stages with one Kraus set per detected mediator.
pub fn teleport_with_maps<'a>(
    spin: Spin,
    phi: &PureState,
    stage_b: impl IntoIterator<Item = &'a KrausSet>,
    stage_c: impl IntoIterator<Item = &'a KrausSet>,
) -> Result<ProtocolResult> {
    let rho0 = initial_state(spin, phi)?;
    let (rho_b, p23) = apply_sequence(stage_b, &rho0)?;
    let (rho_f, p12) = apply_sequence(stage_c, &rho_b)?;
    finish(phi, rho_f, [p23, p12])
}

fn finish(phi: &PureState, final_state: DensityOperator, stage_probabilities: [f64; 2]) -> Result<ProtocolResult> {
    let center1_marginal = final_state.partial_trace(&[0])?;
    let center3_marginal = final_state.partial_trace(&[2])?;
    let fidelity = center3_marginal.fidelity_with(phi).clamp(0.0, 1.0);
    Ok(ProtocolResult {
        fidelity,
        success_probability: stage_probabilities[0] * stage_probabilities[1],
        stage_probabilities,
        final_state,
        center1_marginal,
        center3_marginal,
    })
}

/// A template with both Kraus sets solved once, reusable across states.
#[derive(Clone, Debug)]
pub struct Teleporter {
    template: ProtocolTemplate,
    stage_b: KrausSet,
    stage_c: KrausSet,
}

impl Teleporter {
    pub fn prepare(template: &ProtocolTemplate) -> Result<Self> {
        Ok(Teleporter {
            template: template.clone(),
            stage_b: solve_scattering(&template.config_b)?,
            stage_c: solve_scattering(&template.config_c)?,
        })
    }

    pub fn template(&self) -> &ProtocolTemplate {
        &self.template
    }

    pub fn stage_b(&self) -> &KrausSet {
        &self.stage_b
    }

    pub fn stage_c(&self) -> &KrausSet {
        &self.stage_c
    }

    pub fn response(&self) -> Result<ProtocolResponse> {
        let spin = self.template.spin;
        let d = spin.dim();
        let bottom = PureState::spin_basis(spin, -spin.value())?;
        let top = PureState::spin_basis(spin, spin.value())?;
        let pair = top.tensor(&bottom).projector().into_matrix();
        let mut stage_b_trace = Vec::with_capacity(d * d);
        let mut total_trace = Vec::with_capacity(d * d);
        let mut center3 = Vec::with_capacity(d * d);
        for a in 0..d {
            for b in 0..d {
                let mut unit = CMatrix::zeros(d, d);
                unit[(a, b)] = C64::new(1.0, 0.0);
                let mut x = unit.kronecker(&pair);
                for _ in 0..self.template.n23 {
                    x = unnormalized_map(&self.stage_b, &x);
                }
                stage_b_trace.push(x.trace());
                for _ in 0..self.template.n12 {
                    x = unnormalized_map(&self.stage_c, &x);
                }
                total_trace.push(x.trace());
                center3.push(partial_trace(&x, &[d, d, d], &[2])?.0);
            }
        }
        Ok(ProtocolResponse {
            dim: d,
            stage_b_trace,
            total_trace,
            center3,
        })
    }

    pub fn run(&self, phi: &PureState) -> Result<ProtocolResult> {
        let t = &self.template;
        teleport_with_maps(
            t.spin,
            phi,
            std::iter::repeat_n(&self.stage_b, t.n23),
            std::iter::repeat_n(&self.stage_c, t.n12),
        )
    }

    /// Ignores n23/n12 and streams mediators in each stage until the state
    /// changes by less than [`CONVERGENCE_TOLERANCE`] in trace distance, or
    /// [`CONVERGENCE_MAX_STEPS`] is reached.
    pub fn run_to_convergence(&self, phi: &PureState) -> Result<ConvergedRun> {
        let rho0 = initial_state(self.template.spin, phi)?;
        let (rho_b, p23, n23) = converge(&self.stage_b, rho0)?;
        let (rho_f, p12, n12) = converge(&self.stage_c, rho_b)?;
        Ok(ConvergedRun {
            result: finish(phi, rho_f, [p23, p12])?,
            n23,
            n12,
        })
    }
}

/// The protocol's output as a linear function of the operator X that stands
/// in for |φ><φ| on center 1. Final unnormalized states are linear in the
/// initial state, so d² basis runs determine the outcome for every φ.
#[derive(Clone, Debug)]
pub struct ProtocolResponse {
    dim: usize,
    /// Trace after step (b) for X = |a><b|, indexed a*d + b.
    stage_b_trace: Vec<C64>,
    /// Trace after step (c).
    total_trace: Vec<C64>,
    /// Unnormalized center-3 marginal after step (c).
    center3: Vec<CMatrix>,
}

impl ProtocolResponse {
    /// Fidelity and success probability for `phi`, or None when a stage's
    /// detection probability is below [`DETECTION_FLOOR`].
    pub fn evaluate(&self, phi: &PureState) -> Result<SampleOutcome> {
        let d = self.dim;
        if phi.dim() != d {
            return Err(Error::Dimension(format!("state has dimension {}, expected {d}", phi.dim())));
        }
        let amps = phi.amplitudes();
        let mut p_b = C64::new(0.0, 0.0);
        let mut p_total = C64::new(0.0, 0.0);
        let mut rho3 = CMatrix::zeros(d, d);
        for a in 0..d {
            for b in 0..d {
                let w = amps[a] * amps[b].conj();
                let k = a * d + b;
                p_b += w * self.stage_b_trace[k];
                p_total += w * self.total_trace[k];
                rho3 += &self.center3[k] * w;
            }
        }
        let (p_b, p_total) = (p_b.re, p_total.re);
        if !(p_b >= DETECTION_FLOOR && p_total >= DETECTION_FLOOR * p_b) {
            return Ok(None);
        }
        let fidelity = (amps.dotc(&(&rho3 * amps)).re / p_total).clamp(0.0, 1.0);
        Ok(Some((fidelity, p_total)))
    }
}

#[derive(Clone, Debug)]
pub struct ConvergedRun {
    pub result: ProtocolResult,
    pub n23: usize,
    pub n12: usize,
}

fn converge(ks: &KrausSet, mut rho: DensityOperator) -> Result<(DensityOperator, f64, usize)> {
    let mut probability = 1.0;
    for step in 1..=CONVERGENCE_MAX_STEPS {
        let out = apply_map(ks, &rho)?;
        probability *= out.probability;
        let change = out.state.trace_distance(&rho);
        rho = out.state;
        if change < CONVERGENCE_TOLERANCE {
            return Ok((rho, probability, step));
        }
    }
    Ok((rho, probability, CONVERGENCE_MAX_STEPS))
}

pub fn run_protocol(spec: &ProtocolSpec) -> Result<ProtocolResult> {
    Teleporter::prepare(&spec.template)?.run(&spec.phi)
}

#[derive(Clone, Debug)]
pub struct IdealProjection {
    /// Unnormalized state of center 3 after projecting 1-2 onto the singlet.
    pub amplitude: CVector,
    /// Squared norm of `amplitude`.
    pub probability: f64,
    /// |<φ|residual>| with the residual normalized; 1 when φ is teleported.
    pub overlap: f64,
}

impl IdealProjection {
    pub fn residual_state(&self) -> Result<PureState> {
        PureState::normalized(self.amplitude.clone(), vec![self.amplitude.len()])
    }
}

/// Projects |φ>_1 |Ψ->_23 onto the singlet of centers 1-2.
pub fn ideal_projection_check(spin: Spin, phi: &PureState) -> Result<IdealProjection> {
    check_phi(spin, phi)?;
    let d = spin.dim();
    let singlet = singlet_state(spin);
    let chi_b = phi.tensor(&singlet);
    let psi = singlet.amplitudes();
    let chi = chi_b.amplitudes();
    let mut amplitude = CVector::zeros(d);
    for c in 0..d {
        let mut acc = C64::new(0.0, 0.0);
        for a in 0..d {
            for b in 0..d {
                acc += psi[a * d + b].conj() * chi[(a * d + b) * d + c];
            }
        }
        amplitude[c] = acc;
    }
    let probability = amplitude.norm_squared();
    let overlap = phi.amplitudes().dotc(&amplitude).norm() / probability.sqrt();
    Ok(IdealProjection {
        amplitude,
        probability,
        overlap,
    })
}

/// How states to teleport are drawn when averaging.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sampler {
    /// Uniform on the Bloch sphere (s = 1/2 only).
    BlochAngles,
    /// Four-angle qutrit parametrization with invariant measure (s = 1 only).
    QutritAngles,
    /// Normalized complex Gaussian vectors (any s).
    HaarUniform,
}

impl Sampler {
    pub fn name(self) -> &'static str {
        match self {
            Sampler::BlochAngles => "bloch_angles",
            Sampler::QutritAngles => "qutrit_angles",
            Sampler::HaarUniform => "haar_uniform",
        }
    }

    pub fn check(self, spin: Spin) -> Result<()> {
        let ok = match self {
            Sampler::BlochAngles => spin == Spin::HALF,
            Sampler::QutritAngles => spin == Spin::ONE,
            Sampler::HaarUniform => true,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::SamplerMismatch {
                sampler: self.name(),
                spin: spin.value(),
            })
        }
    }
}

/// cos(θ/2)|↑> + e^{iφ} sin(θ/2)|↓>.
pub fn bloch_state(theta: f64, azimuth: f64) -> PureState {
    let amps = CVector::from_vec(vec![
        C64::new((theta / 2.0).cos(), 0.0),
        C64::from_polar((theta / 2.0).sin(), azimuth),
    ]);
    PureState::normalized(amps, vec![2]).expect("Bloch vector is never zero")
}

/// cos θ |1> + e^{iχ1} sin θ cos ϕ |0> + e^{iχ2} sin θ sin ϕ |-1>, with
/// θ, ϕ in [0, π/2] and χ1, χ2 in [0, 2π).
pub fn qutrit_state(theta: f64, varphi: f64, chi1: f64, chi2: f64) -> PureState {
    let amps = CVector::from_vec(vec![
        C64::new(theta.cos(), 0.0),
        C64::from_polar(theta.sin() * varphi.cos(), chi1),
        C64::from_polar(theta.sin() * varphi.sin(), chi2),
    ]);
    PureState::normalized(amps, vec![3]).expect("qutrit vector is never zero")
}

pub fn sample_state(spin: Spin, sampler: Sampler, rng: &mut impl Rng) -> Result<PureState> {
    sampler.check(spin)?;
    Ok(match sampler {
        Sampler::BlochAngles => {
            let u: f64 = rng.random();
            let theta = (1.0 - 2.0 * u).clamp(-1.0, 1.0).acos();
            bloch_state(theta, 2.0 * PI * rng.random::<f64>())
        }
        Sampler::QutritAngles => {
            // Squared moduli uniform on the simplex is the invariant measure.
            let w: [f64; 3] = [rng.sample(Exp1), rng.sample(Exp1), rng.sample(Exp1)];
            let total: f64 = w.iter().sum();
            let theta = (w[0] / total).sqrt().clamp(0.0, 1.0).acos();
            let varphi = w[2].sqrt().atan2(w[1].sqrt());
            let chi1 = 2.0 * PI * rng.random::<f64>();
            let chi2 = 2.0 * PI * rng.random::<f64>();
            qutrit_state(theta, varphi, chi1, chi2)
        }
        Sampler::HaarUniform => loop {
            let amps = CVector::from_fn(spin.dim(), |_, _| {
                C64::new(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal))
            });
            if let Ok(state) = PureState::normalized(amps, vec![spin.dim()]) {
                break state;
            }
        },
    })
}

/// State number `index` of the sequence drawn from `seed`.
pub fn sample_state_at(spin: Spin, sampler: Sampler, seed: u64, index: u64) -> Result<PureState> {
    sample_state(spin, sampler, &mut stream_rng(seed, StreamPurpose::State, index))
}

pub fn sample_states(spin: Spin, sampler: Sampler, count: usize, seed: u64) -> Result<Vec<PureState>> {
    sampler.check(spin)?;
    (0..count as u64)
        .map(|i| sample_state_at(spin, sampler, seed, i))
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PerformanceStats {
    pub mean_fidelity: f64,
    pub mean_probability: f64,
    pub stderr_fidelity: f64,
    pub stderr_probability: f64,
    pub samples: usize,
    /// Samples where a detection probability underflowed; they contribute
    /// P = 0 and no fidelity.
    pub failures: usize,
}

/// Per-sample outcome: (fidelity, probability), or None when detection
/// became impossible.
pub type SampleOutcome = Option<(f64, f64)>;

pub fn summarize(outcomes: &[SampleOutcome]) -> PerformanceStats {
    let fid: Vec<f64> = outcomes.iter().flatten().map(|o| o.0).collect();
    let prob: Vec<f64> = outcomes.iter().map(|o| o.map_or(0.0, |v| v.1)).collect();
    let f = estimate(&fid);
    let p = estimate(&prob);
    PerformanceStats {
        mean_fidelity: f.mean,
        mean_probability: p.mean,
        stderr_fidelity: f.stderr,
        stderr_probability: p.stderr,
        samples: outcomes.len(),
        failures: outcomes.len() - fid.len(),
    }
}

pub(crate) fn outcome(result: Result<ProtocolResult>) -> Result<SampleOutcome> {
    match result {
        Ok(r) => Ok(Some((r.fidelity, r.success_probability))),
        Err(Error::DetectionImpossible { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Mean fidelity and success probability over `count` sampled states.
pub fn average_performance(
    template: &ProtocolTemplate,
    sampler: Sampler,
    count: usize,
    seed: u64,
) -> Result<PerformanceStats> {
    sampler.check(template.spin)?;
    if count == 0 {
        return Err(Error::param("samples", "must be at least 1"));
    }
    let response = Teleporter::prepare(template)?.response()?;
    let outcomes = (0..count as u64)
        .into_par_iter()
        .map(|i| response.evaluate(&sample_state_at(template.spin, sampler, seed, i)?))
        .collect::<Result<Vec<_>>>()?;
    Ok(summarize(&outcomes))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spinops::max_abs;

    fn heisenberg(spin: Spin, j: f64, n: usize) -> ProtocolTemplate {
        ProtocolTemplate::resonant(spin, CouplingKind::Heisenberg, Dispersion::Quadratic, j, j, n, n, (1, 1))
            .unwrap()
    }

    #[test]
    fn template_validation() {
        let good = heisenberg(Spin::HALF, 1.5, 2);
        let mut b = good.config_b.clone();
        b.couplings[0] = 0.1;
        assert!(matches!(
            ProtocolTemplate::new(b, good.config_c.clone(), 1, 1),
            Err(Error::InvalidParameter { field: "config_b.J1", .. })
        ));
        let mut c = good.config_c.clone();
        c.couplings[2] = 0.1;
        assert!(ProtocolTemplate::new(good.config_b.clone(), c, 1, 1).is_err());
        let qutrit = PureState::spin_basis(Spin::ONE, 0.0).unwrap();
        assert!(good.with_phi(qutrit).is_err());
    }

    #[test]
    fn no_mediators_leaves_minus_s_on_center_three() {
        let phi = bloch_state(1.1, 0.4);
        let spec = heisenberg(Spin::HALF, 1.5, 0).with_phi(phi.clone()).unwrap();
        let result = run_protocol(&spec).unwrap();
        let down = PureState::spin_basis(Spin::HALF, -0.5).unwrap();
        assert!((result.fidelity - phi.inner(&down).norm_sqr()).abs() < 1e-14);
        assert_eq!(result.success_probability, 1.0);
    }

    #[test]
    fn converged_run_teleports() {
        let phi = bloch_state(0.7, 2.0);
        let tele = Teleporter::prepare(&heisenberg(Spin::HALF, 1.5, 0)).unwrap();
        let run = tele.run_to_convergence(&phi).unwrap();
        assert!(run.result.fidelity > 1.0 - 1e-8);
        assert!((run.result.success_probability - 0.125).abs() < 1e-8);
        let mixed = DensityOperator::maximally_mixed(vec![2]);
        assert!(max_abs(&(run.result.center1_marginal.matrix() - mixed.matrix())) < 1e-8);
    }

    #[test]
    fn ideal_projection() {
        for (spin, p) in [(Spin::HALF, 0.25), (Spin::ONE, 1.0 / 9.0)] {
            let mut rng = stream_rng(1, StreamPurpose::State, 0);
            let phi = sample_state(spin, Sampler::HaarUniform, &mut rng).unwrap();
            let proj = ideal_projection_check(spin, &phi).unwrap();
            assert!((proj.probability - p).abs() < 1e-12);
            assert!((proj.overlap - 1.0).abs() < 1e-12);
        }
        let down = PureState::spin_basis(Spin::ONE, -1.0).unwrap();
        assert!((ideal_projection_check(Spin::ONE, &down).unwrap().overlap - 1.0).abs() < 1e-12);
    }

    #[test]
    fn response_matches_stepwise_run() {
        for (spin, kind, n23, n12) in [
            (Spin::HALF, CouplingKind::Heisenberg, 4, 3),
            (Spin::ONE, CouplingKind::Xy, 2, 5),
        ] {
            let tpl = ProtocolTemplate::resonant(spin, kind, Dispersion::Quadratic, 1.5, 0.8, n23, n12, (1, 2)).unwrap();
            let tele = Teleporter::prepare(&tpl).unwrap();
            let response = tele.response().unwrap();
            for phi in sample_states(spin, Sampler::HaarUniform, 5, 2).unwrap() {
                let direct = tele.run(&phi).unwrap();
                let (f, p) = response.evaluate(&phi).unwrap().unwrap();
                assert!((f - direct.fidelity).abs() < 1e-10);
                assert!((p - direct.success_probability).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn sampler_endpoints() {
        let up = bloch_state(0.0, 1.3);
        assert!((up.amplitudes()[0].re - 1.0).abs() < 1e-15);
        let top = qutrit_state(0.0, 0.3, 1.0, 2.0);
        assert!((top.amplitudes()[0].re - 1.0).abs() < 1e-15);
        assert!(top.amplitudes()[1].norm() < 1e-15 && top.amplitudes()[2].norm() < 1e-15);
    }

    #[test]
    fn sampler_mismatch() {
        assert!(matches!(
            sample_states(Spin::ONE, Sampler::BlochAngles, 1, 0),
            Err(Error::SamplerMismatch { .. })
        ));
        assert!(sample_states(Spin::HALF, Sampler::QutritAngles, 1, 0).is_err());
        assert!(sample_states(Spin::from_twice(3).unwrap(), Sampler::HaarUniform, 2, 0).is_ok());
    }

    #[test]
    fn samples_are_seed_deterministic() {
        let a = sample_states(Spin::ONE, Sampler::QutritAngles, 5, 9).unwrap();
        let b = sample_states(Spin::ONE, Sampler::QutritAngles, 5, 9).unwrap();
        assert_eq!(a, b);
        let c = sample_states(Spin::ONE, Sampler::QutritAngles, 5, 10).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn haar_first_component_moment() {
        for spin in [Spin::HALF, Spin::ONE, Spin::from_twice(3).unwrap()] {
            let states = sample_states(spin, Sampler::HaarUniform, 20_000, 5).unwrap();
            let values: Vec<f64> = states.iter().map(|s| s.amplitudes()[0].norm_sqr()).collect();
            let e = estimate(&values);
            let expected = 1.0 / spin.dim() as f64;
            assert!((e.mean - expected).abs() < 4.0 * e.stderr, "s = {spin}: {} vs {expected}", e.mean);
        }
    }

    #[test]
    fn angle_samplers_match_haar_moments() {
        // Second moments of |<m|ψ>|² under the unitarily invariant measure:
        // E|c|⁴ = 2/(d(d+1)).
        for (spin, sampler) in [(Spin::HALF, Sampler::BlochAngles), (Spin::ONE, Sampler::QutritAngles)] {
            let d = spin.dim() as f64;
            let states = sample_states(spin, sampler, 40_000, 11).unwrap();
            for comp in 0..spin.dim() {
                let v: Vec<f64> = states.iter().map(|s| s.amplitudes()[comp].norm_sqr()).collect();
                let e = estimate(&v);
                assert!((e.mean - 1.0 / d).abs() < 4.0 * e.stderr);
                let v4: Vec<f64> = v.iter().map(|x| x * x).collect();
                let e4 = estimate(&v4);
                assert!((e4.mean - 2.0 / (d * (d + 1.0))).abs() < 4.0 * e4.stderr);
            }
        }
    }

    #[test]
    fn averaging_constant_returns_constant() {
        // n = 0 with φ = |↑>: F = 0, P = 1 for every "sample".
        let outcomes = vec![Some((0.0, 1.0)); 7];
        let stats = summarize(&outcomes);
        assert_eq!(stats.mean_fidelity, 0.0);
        assert_eq!(stats.mean_probability, 1.0);
        assert_eq!(stats.stderr_probability, 0.0);
    }

    #[test]
    fn failures_count_as_zero_probability() {
        let stats = summarize(&[Some((1.0, 0.5)), None]);
        assert_eq!(stats.failures, 1);
        assert_eq!(stats.mean_fidelity, 1.0);
        assert_eq!(stats.mean_probability, 0.25);
    }
}
