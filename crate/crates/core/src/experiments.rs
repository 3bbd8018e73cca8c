//! Parameter sweeps over mediator counts and coupling strengths, and the
//! wavevector-disorder Monte Carlo.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::montecarlo::{stream_rng, StreamPurpose};
use crate::protocol::{
    average_performance, outcome, sample_state_at, summarize, teleport_with_maps, PerformanceStats,
    ProtocolTemplate, Sampler,
};
use crate::scatter::{solve_scattering, Dispersion, KrausSet, ScatterConfig};
use crate::spinops::{CouplingKind, Spin};

/// Largest Δk/k0 accepted by the disorder sweep.
pub const MAX_RELATIVE_SPREAD: f64 = 0.2;

/// One row of sweep output.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepRecord {
    pub spin: Spin,
    pub kind: CouplingKind,
    pub dispersion: Dispersion,
    /// J/v of the actively coupled centers (J_b = J_c, or J2 for disorder runs).
    pub j_over_v: f64,
    pub n23: usize,
    pub n12: usize,
    pub dk_over_k0: f64,
    pub f3b: f64,
    pub f1c: f64,
    pub stats: PerformanceStats,
    pub norm_f: f64,
    pub norm_p: f64,
    /// No trajectory survived to the end of the protocol.
    pub flagged: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepSpec {
    pub spin: Spin,
    pub kind: CouplingKind,
    pub dispersion: Dispersion,
    pub j_over_v: Vec<f64>,
    /// (n23, n12) pairs.
    pub n_grid: Vec<(usize, usize)>,
    pub resonance: (u32, u32),
    pub sampler: Sampler,
    pub samples: usize,
    pub seed: u64,
}

/// Mean performance on every (J/v, n23, n12) grid point. Normalized columns
/// are relative to the ideal asymptote F = 1, P = (2s+1)^-3.
pub fn sweep_n(spec: &SweepSpec) -> Result<Vec<SweepRecord>> {
    if spec.j_over_v.is_empty() || spec.n_grid.is_empty() {
        return Err(Error::param("sweep", "empty sweep"));
    }
    spec.sampler.check(spec.spin)?;
    let ideal_p = (spec.spin.dim() as f64).powi(-3);
    let mut records = Vec::with_capacity(spec.j_over_v.len() * spec.n_grid.len());
    for &j in &spec.j_over_v {
        for &(n23, n12) in &spec.n_grid {
            let template =
                ProtocolTemplate::resonant(spec.spin, spec.kind, spec.dispersion, j, j, n23, n12, spec.resonance)?;
            let stats = sample_mean(&template, spec.sampler, spec.samples, spec.seed)?;
            records.push(SweepRecord {
                spin: spec.spin,
                kind: spec.kind,
                dispersion: spec.dispersion,
                j_over_v: j,
                n23,
                n12,
                dk_over_k0: 0.0,
                f3b: 1.0,
                f1c: 1.0,
                norm_f: stats.mean_fidelity,
                norm_p: stats.mean_probability / ideal_p,
                flagged: stats.failures == stats.samples,
                stats,
            });
        }
    }
    Ok(records)
}

fn sample_mean(template: &ProtocolTemplate, sampler: Sampler, samples: usize, seed: u64) -> Result<PerformanceStats> {
    if samples == 0 {
        return Err(Error::param("samples", "must be at least 1"));
    }
    average_performance(template, sampler, samples, seed)
}

/// Protocol settings shared by every point of a disorder sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct DisorderBase {
    pub spin: Spin,
    pub kind: CouplingKind,
    pub dispersion: Dispersion,
    /// J2 / v at the carrier wavevector.
    pub j2_over_v: f64,
    pub n23: usize,
    pub n12: usize,
    /// k0·d12 = p π, k0·d23 = q π.
    pub resonance: (u32, u32),
    pub sampler: Sampler,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DisorderSpec {
    /// Carrier wavevector.
    pub k0: f64,
    /// J3 during step (b) is f3b·J2.
    pub f3b: f64,
    /// J1 during step (c) is f1c·J2.
    pub f1c: f64,
    pub samples: usize,
    pub seed: u64,
}

impl DisorderSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.k0.is_finite() && self.k0 > 0.0) {
            return Err(Error::param("k0", "must be > 0"));
        }
        for (field, f) in [("f3b", self.f3b), ("f1c", self.f1c)] {
            if !(f.is_finite() && f > 0.0) {
                return Err(Error::param(field, format!("must be > 0, got {f}")));
            }
        }
        if self.samples == 0 {
            return Err(Error::param("samples", "must be at least 1"));
        }
        Ok(())
    }
}

/// Step (b)/(c) configurations at the carrier wavevector.
pub fn carrier_template(base: &DisorderBase, dis: &DisorderSpec) -> Result<ProtocolTemplate> {
    let j2 = base.j2_over_v;
    let config = |couplings: [f64; 3]| ScatterConfig {
        spin: base.spin,
        kind: base.kind,
        dispersion: base.dispersion,
        couplings,
        wavevector: dis.k0,
        velocity: 1.0,
        d12: f64::from(base.resonance.0) * PI / dis.k0,
        d23: f64::from(base.resonance.1) * PI / dis.k0,
    };
    ProtocolTemplate::new(
        config([0.0, j2, dis.f3b * j2]),
        config([dis.f1c * j2, j2, 0.0]),
        base.n23,
        base.n12,
    )
}

/// Draws a mediator wavevector from Normal(k0, Δk), redrawing non-positive values.
pub fn draw_wavevector(k0: f64, delta_k: f64, rng: &mut impl Rng) -> f64 {
    loop {
        let z: f64 = rng.sample(StandardNormal);
        let k = k0 + delta_k * z;
        if k > 0.0 {
            return k;
        }
    }
}

/// Monte-Carlo performance at one Δk/k0 with every mediator drawing its own
/// wavevector.
pub fn disorder_point(base: &DisorderBase, dis: &DisorderSpec, dk_over_k0: f64) -> Result<PerformanceStats> {
    dis.validate()?;
    if !(dk_over_k0.is_finite() && (0.0..=MAX_RELATIVE_SPREAD).contains(&dk_over_k0)) {
        return Err(Error::param(
            "dk_over_k0",
            format!("must lie in [0, {MAX_RELATIVE_SPREAD}], got {dk_over_k0}"),
        ));
    }
    base.sampler.check(base.spin)?;
    let template = carrier_template(base, dis)?;
    if dk_over_k0 == 0.0 {
        return sample_mean(&template, base.sampler, dis.samples, dis.seed);
    }
    let delta_k = dk_over_k0 * dis.k0;
    let outcomes = (0..dis.samples as u64)
        .into_par_iter()
        .map(|i| {
            let phi = sample_state_at(base.spin, base.sampler, dis.seed, i)?;
            let mut rng = stream_rng(dis.seed, StreamPurpose::Wavevector, i);
            let mut solve_stage = |cfg: &ScatterConfig, n: usize| -> Result<Vec<KrausSet>> {
                (0..n)
                    .map(|_| solve_scattering(&cfg.with_wavevector(draw_wavevector(dis.k0, delta_k, &mut rng))))
                    .collect()
            };
            let stage_b = solve_stage(&template.config_b, base.n23)?;
            let stage_c = solve_stage(&template.config_c, base.n12)?;
            outcome(teleport_with_maps(base.spin, &phi, &stage_b, &stage_c))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(summarize(&outcomes))
}

/// One record per Δk/k0 in `dk_grid`, normalized to the symmetric,
/// disorder-free baseline with the same samples and seed.
pub fn sweep_disorder(base: &DisorderBase, dis: &DisorderSpec, dk_grid: &[f64]) -> Result<Vec<SweepRecord>> {
    if dk_grid.is_empty() {
        return Err(Error::param("dk_over_k0", "empty sweep"));
    }
    let symmetric = DisorderSpec {
        f3b: 1.0,
        f1c: 1.0,
        ..dis.clone()
    };
    let baseline = disorder_point(base, &symmetric, 0.0)?;
    dk_grid
        .iter()
        .map(|&dk| {
            let stats = disorder_point(base, dis, dk)?;
            Ok(SweepRecord {
                spin: base.spin,
                kind: base.kind,
                dispersion: base.dispersion,
                j_over_v: base.j2_over_v,
                n23: base.n23,
                n12: base.n12,
                dk_over_k0: dk,
                f3b: dis.f3b,
                f1c: dis.f1c,
                norm_f: stats.mean_fidelity / baseline.mean_fidelity,
                norm_p: stats.mean_probability / baseline.mean_probability,
                flagged: stats.failures == stats.samples,
                stats,
            })
        })
        .collect()
}
