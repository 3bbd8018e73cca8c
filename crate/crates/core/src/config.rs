//! Run configuration files and the manifests written next to every output.
//!
//! Physics parameters are dimensionless: J/v, k·d/π and Δk/k0. The spin,
//! coupling kind, dispersion and both distances have no defaults.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiments::{DisorderBase, DisorderSpec, SweepSpec};
use crate::protocol::{bloch_state, ProtocolTemplate, Sampler};
use crate::scatter::{Dispersion, ScatterConfig};
use crate::spinops::{CVector, CouplingKind, PureState, Spin, C64};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub physics: PhysicsConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solve: Option<SolveConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub protocol: Option<ProtocolConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub disorder: Option<DisorderConfig>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicsConfig {
    pub s: f64,
    pub kind: CouplingKind,
    pub dispersion: Dispersion,
    pub kd12_over_pi: f64,
    pub kd23_over_pi: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveConfig {
    /// [J1, J2, J3] / v.
    pub j_over_v: [f64; 3],
    /// Print every Kraus operator, not just the summary.
    #[serde(default)]
    pub dump: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolConfig {
    pub jb_over_v: f64,
    pub jc_over_v: f64,
    pub n23: usize,
    pub n12: usize,
    /// Ignore n23/n12 and stream mediators until the state stops changing.
    #[serde(default)]
    pub converge: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub state: Option<StateConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub average: Option<AverageConfig>,
}

/// The state to teleport.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum StateConfig {
    /// A basis state |s, m>.
    BasisM(f64),
    /// cos(θ/2)|↑> + e^{iφ} sin(θ/2)|↓>, s = 1/2 only.
    Bloch { theta: f64, azimuth: f64 },
    /// [re, im] pairs ordered m = s .. -s; normalized on load.
    Amplitudes(Vec<[f64; 2]>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AverageConfig {
    pub sampler: Sampler,
    pub samples: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub j_over_v: Vec<f64>,
    /// n23 = n12 = n for each entry. Alternative to `n23` + `n12`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<Vec<usize>>,
    /// With `n12`, every (n23, n12) combination is run.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n23: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n12: Option<Vec<usize>>,
    pub sampler: Sampler,
    pub samples: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DisorderConfig {
    pub j2_over_v: f64,
    pub n23: usize,
    pub n12: usize,
    /// Carrier wavevector; distances follow from physics.kd*_over_pi at k0.
    pub k0: f64,
    pub dk_over_k0: Vec<f64>,
    /// [f3b, f1c] coupling-factor pairs; each pair gets a full Δk sweep.
    pub factors: Vec<[f64; 2]>,
    pub sampler: Sampler,
    pub samples: usize,
    pub seed: u64,
}

/// TOML integers are signed 64-bit, so larger seeds cannot round-trip.
const MAX_SEED: u64 = i64::MAX as u64;

fn check_seed(field: &'static str, seed: u64) -> Result<()> {
    if seed > MAX_SEED {
        return Err(Error::param(field, format!("must be <= {MAX_SEED}")));
    }
    Ok(())
}

fn check_ratio(field: &'static str, x: f64) -> Result<()> {
    if !(x.is_finite() && x >= 0.0) {
        return Err(Error::param(field, format!("must be finite and >= 0, got {x}")));
    }
    Ok(())
}

fn check_samples(field: &'static str, n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::param(field, "must be at least 1"));
    }
    Ok(())
}

impl PhysicsConfig {
    pub fn spin(&self) -> Result<Spin> {
        Spin::from_f64(self.s).map_err(|_| {
            Error::param("physics.s", format!("must be one of 1/2, 1, ..., 5/2, got {}", self.s))
        })
    }

    pub fn scatter_config(&self, j_over_v: [f64; 3]) -> Result<ScatterConfig> {
        let cfg = ScatterConfig::dimensionless(
            self.spin()?,
            self.kind,
            self.dispersion,
            j_over_v,
            self.kd12_over_pi,
            self.kd23_over_pi,
        );
        for (field, x) in [("physics.kd12_over_pi", self.kd12_over_pi), ("physics.kd23_over_pi", self.kd23_over_pi)] {
            if !(x.is_finite() && x > 0.0) {
                return Err(Error::param(field, format!("must be > 0, got {x}")));
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// (p, q) with k·d12 = pπ and k·d23 = qπ; sweeps require exact resonance.
    pub fn resonance(&self) -> Result<(u32, u32)> {
        let as_int = |field: &'static str, x: f64| -> Result<u32> {
            if x.is_finite() && x >= 1.0 && x.fract() == 0.0 && x <= f64::from(u32::MAX) {
                Ok(x as u32)
            } else {
                Err(Error::param(field, format!("must be a positive integer for resonance, got {x}")))
            }
        };
        Ok((
            as_int("physics.kd12_over_pi", self.kd12_over_pi)?,
            as_int("physics.kd23_over_pi", self.kd23_over_pi)?,
        ))
    }
}

impl StateConfig {
    pub fn to_state(&self, spin: Spin) -> Result<PureState> {
        match self {
            StateConfig::BasisM(m) => PureState::spin_basis(spin, *m)
                .map_err(|_| Error::param("protocol.state.basis_m", format!("no m = {m} for s = {spin}"))),
            StateConfig::Bloch { theta, azimuth } => {
                if spin != Spin::HALF {
                    return Err(Error::param("protocol.state.bloch", "only defined for s = 1/2"));
                }
                if !(theta.is_finite() && azimuth.is_finite()) {
                    return Err(Error::param("protocol.state.bloch", "angles must be finite"));
                }
                Ok(bloch_state(*theta, *azimuth))
            }
            StateConfig::Amplitudes(pairs) => {
                if pairs.len() != spin.dim() {
                    return Err(Error::param(
                        "protocol.state.amplitudes",
                        format!("expected {} entries, got {}", spin.dim(), pairs.len()),
                    ));
                }
                let amps = CVector::from_iterator(pairs.len(), pairs.iter().map(|p| C64::new(p[0], p[1])));
                PureState::normalized(amps, vec![spin.dim()])
                    .map_err(|e| Error::param("protocol.state.amplitudes", e.to_string()))
            }
        }
    }
}

impl ProtocolConfig {
    pub fn template(&self, physics: &PhysicsConfig) -> Result<ProtocolTemplate> {
        check_ratio("protocol.jb_over_v", self.jb_over_v)?;
        check_ratio("protocol.jc_over_v", self.jc_over_v)?;
        if self.state.is_none() && self.average.is_none() {
            return Err(Error::param("protocol.state", "give a state, an [protocol.average] table, or both"));
        }
        if let Some(avg) = &self.average {
            check_samples("protocol.average.samples", avg.samples)?;
            check_seed("protocol.average.seed", avg.seed)?;
        }
        let b = physics.scatter_config([0.0, self.jb_over_v, self.jb_over_v])?;
        let c = physics.scatter_config([self.jc_over_v, self.jc_over_v, 0.0])?;
        ProtocolTemplate::new(b, c, self.n23, self.n12)
    }
}

impl SweepConfig {
    pub fn n_grid(&self) -> Result<Vec<(usize, usize)>> {
        match (&self.n, &self.n23, &self.n12) {
            (Some(n), None, None) => Ok(n.iter().map(|&n| (n, n)).collect()),
            (None, Some(a), Some(b)) => Ok(a.iter().flat_map(|&x| b.iter().map(move |&y| (x, y))).collect()),
            _ => Err(Error::param("sweep.n", "give either `n` or both `n23` and `n12`")),
        }
    }

    pub fn spec(&self, physics: &PhysicsConfig) -> Result<SweepSpec> {
        for &j in &self.j_over_v {
            check_ratio("sweep.j_over_v", j)?;
        }
        check_samples("sweep.samples", self.samples)?;
        check_seed("sweep.seed", self.seed)?;
        let n_grid = self.n_grid()?;
        if self.j_over_v.is_empty() || n_grid.is_empty() {
            return Err(Error::param("sweep", "empty sweep"));
        }
        Ok(SweepSpec {
            spin: physics.spin()?,
            kind: physics.kind,
            dispersion: physics.dispersion,
            j_over_v: self.j_over_v.clone(),
            n_grid,
            resonance: physics.resonance()?,
            sampler: self.sampler,
            samples: self.samples,
            seed: self.seed,
        })
    }
}

impl DisorderConfig {
    pub fn base(&self, physics: &PhysicsConfig) -> Result<DisorderBase> {
        check_ratio("disorder.j2_over_v", self.j2_over_v)?;
        check_samples("disorder.samples", self.samples)?;
        check_seed("disorder.seed", self.seed)?;
        if self.dk_over_k0.is_empty() || self.factors.is_empty() {
            return Err(Error::param("disorder", "empty sweep"));
        }
        Ok(DisorderBase {
            spin: physics.spin()?,
            kind: physics.kind,
            dispersion: physics.dispersion,
            j2_over_v: self.j2_over_v,
            n23: self.n23,
            n12: self.n12,
            resonance: physics.resonance()?,
            sampler: self.sampler,
        })
    }

    /// One spec per coupling-factor pair.
    pub fn specs(&self) -> Vec<DisorderSpec> {
        self.factors
            .iter()
            .map(|&[f3b, f1c]| DisorderSpec {
                k0: self.k0,
                f3b,
                f1c,
                samples: self.samples,
                seed: self.seed,
            })
            .collect()
    }
}

impl RunConfig {
    /// Parses a run config, or the `[config]` table of a manifest.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let table: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        if table.contains_key("manifest") {
            let m: RunManifest = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
            return Ok(m.config);
        }
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Replaces every seed in the config, as `--seed` does.
    pub fn override_seed(&mut self, seed: u64) {
        if let Some(avg) = self.protocol.as_mut().and_then(|p| p.average.as_mut()) {
            avg.seed = seed;
        }
        if let Some(s) = self.sweep.as_mut() {
            s.seed = seed;
        }
        if let Some(d) = self.disorder.as_mut() {
            d.seed = seed;
        }
    }

    /// Distinct seeds used by the config.
    pub fn seeds(&self) -> BTreeSet<u64> {
        let mut out = BTreeSet::new();
        out.extend(self.protocol.as_ref().and_then(|p| p.average.as_ref()).map(|a| a.seed));
        out.extend(self.sweep.as_ref().map(|s| s.seed));
        out.extend(self.disorder.as_ref().map(|d| d.seed));
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestHeader {
    pub command: String,
    pub version: String,
    pub timestamp_unix: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub outputs: Vec<String>,
}

/// Everything needed to regenerate an output: the header plus the fully
/// resolved config, with seed overrides applied.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub manifest: ManifestHeader,
    pub config: RunConfig,
}

impl RunManifest {
    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }
}
