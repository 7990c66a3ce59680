use std::f64::consts::PI;
use std::path::Path;

use anyhow::{bail, Context, Result};
use biyb_core::lax::SpectralValue;
use biyb_core::model::{InitialDataSpec, ModelParams, Stencil};
use biyb_core::spectral::{CascadeParams, SeedLax};
use biyb_core::verify::zeta_samples;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub schema_version: u32,
    /// Degree of SU(n).
    pub n: usize,
    pub r_operator: String,
    pub alpha: f64,
    pub beta: f64,
    pub worldsheet: WorldsheetConfig,
    pub initial: InitialDataSpec,
    pub zeta: ZetaPolicy,
    pub ladder: Vec<usize>,
    pub stencil: Stencil,
    pub algebra: AlgebraConfig,
    pub lax: LaxConfig,
    pub simulate: SimulateConfig,
    pub cascade: CascadeConfig,
    pub monodromy: MonodromyConfig,
    pub tolerances: Tolerances,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            n: 2,
            r_operator: "canonical".into(),
            alpha: 0.3,
            beta: 0.2,
            worldsheet: WorldsheetConfig::default(),
            initial: InitialDataSpec::default(),
            zeta: ZetaPolicy::default(),
            ladder: vec![64, 128, 256],
            stencil: Stencil::Fourth,
            algebra: AlgebraConfig::default(),
            lax: LaxConfig::default(),
            simulate: SimulateConfig::default(),
            cascade: CascadeConfig::default(),
            monodromy: MonodromyConfig::default(),
            tolerances: Tolerances::default(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WorldsheetConfig {
    pub n_sigma: usize,
    pub length: f64,
    /// `dt = courant * length / n_sigma`
    pub courant: f64,
    pub t_final: f64,
}

impl Default for WorldsheetConfig {
    fn default() -> Self {
        Self {
            n_sigma: 128,
            length: 2.0 * PI,
            courant: 1.0 / PI,
            t_final: 1.0,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ZetaPolicy {
    pub radii: Vec<f64>,
    pub points_per_circle: usize,
    pub exclusion: f64,
}

impl Default for ZetaPolicy {
    fn default() -> Self {
        Self {
            radii: vec![0.5, 2.0],
            points_per_circle: 20,
            exclusion: 0.05,
        }
    }
}

impl ZetaPolicy {
    pub fn samples(&self) -> Vec<SpectralValue> {
        zeta_samples(&self.radii, self.points_per_circle, self.exclusion)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AlgebraConfig {
    pub samples: usize,
    pub dressed_samples: usize,
    pub iwasawa_samples: usize,
    pub iwasawa: String,
}

impl Default for AlgebraConfig {
    fn default() -> Self {
        Self {
            samples: 100,
            dressed_samples: 10,
            iwasawa_samples: 1000,
            iwasawa: "cholesky".into(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LaxConfig {
    /// Registered pair used for the on-shell sweep.
    pub pair: String,
    pub offshell_trials: usize,
    /// Extra parameter pairs for the off-shell identity; `(a, a)` is included.
    pub offshell_params: Vec<(f64, f64)>,
    pub chain_points: usize,
}

impl Default for LaxConfig {
    fn default() -> Self {
        Self {
            pair: "bi-yang-baxter".into(),
            offshell_trials: 50,
            offshell_params: vec![(0.3, 0.2), (0.4, 0.4), (0.0, 0.7)],
            chain_points: 20,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateConfig {
    /// τ spacing of the residual time series.
    pub report_every: f64,
    pub binary_snapshots: bool,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        Self {
            report_every: 0.125,
            binary_snapshots: true,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CascadeConfig {
    pub epsilon: f64,
    pub eta: f64,
    /// τ extent of the patch the extended solutions are built on.
    pub patch_tau: f64,
    pub seed_lax: SeedLax,
    pub check_flatness: bool,
    pub iwasawa: String,
    /// Probe values for the Lax-level identities.
    pub probes: Vec<(f64, f64)>,
}

impl Default for CascadeConfig {
    fn default() -> Self {
        Self {
            epsilon: 0.3,
            eta: 0.2,
            patch_tau: 0.25,
            seed_lax: SeedLax::Undressed,
            check_flatness: true,
            iwasawa: "cholesky".into(),
            probes: vec![(0.5, 0.0), (0.0, 0.5), (-2.0, 0.3), (0.3, -1.4)],
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MonodromyConfig {
    pub pair: String,
    /// Spectral values are taken from the sampling policy with this many
    /// points per circle.
    pub points_per_circle: usize,
    /// Levels between trace evaluations.
    pub stride: usize,
    pub tolerance: f64,
    pub max_substeps: usize,
}

impl Default for MonodromyConfig {
    fn default() -> Self {
        Self {
            pair: "bi-yang-baxter".into(),
            points_per_circle: 5,
            stride: 8,
            tolerance: 1e-11,
            max_substeps: 64,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub algebra: f64,
    pub iwasawa: f64,
    pub offshell: f64,
    pub limits: f64,
    pub gauge: f64,
    pub curvature_onshell: f64,
    pub min_order: f64,
    pub constraint_drift: f64,
    pub identity_exact: f64,
    pub k_vs_inversion: f64,
    pub membership: f64,
    pub eom_ratio: f64,
    pub trace_drift: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            algebra: 1e-12,
            iwasawa: 1e-12,
            offshell: 1e-10,
            limits: 1e-12,
            gauge: 1e-10,
            curvature_onshell: 1e-5,
            min_order: 1.7,
            constraint_drift: 1e-6,
            identity_exact: 1e-10,
            k_vs_inversion: 1e-8,
            membership: 1e-8,
            eom_ratio: 5.0,
            trace_drift: 1e-6,
        }
    }
}

impl ScenarioConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let cfg: Self = serde_json::from_str(&text)
            .with_context(|| format!("parsing config {}", path.display()))?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            bail!(
                "config schema_version {} is not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            );
        }
        ModelParams::new(self.alpha, self.beta)?;
        CascadeParams::new(self.cascade.epsilon, self.cascade.eta)?;
        if self.ladder.is_empty() || self.ladder.windows(2).any(|w| w[0] >= w[1]) {
            bail!("ladder levels must be non-empty and strictly increasing");
        }
        let t = &self.tolerances;
        let all = [
            t.algebra,
            t.iwasawa,
            t.offshell,
            t.limits,
            t.gauge,
            t.curvature_onshell,
            t.min_order,
            t.constraint_drift,
            t.identity_exact,
            t.k_vs_inversion,
            t.membership,
            t.eom_ratio,
            t.trace_drift,
        ];
        if all.iter().any(|v| !(*v > 0.0)) {
            bail!("all tolerances must be positive");
        }
        if !(self.worldsheet.t_final > 0.0) || !(self.cascade.patch_tau > 0.0) {
            bail!("run lengths must be positive");
        }
        Ok(())
    }

    pub fn params(&self) -> ModelParams {
        ModelParams {
            alpha: self.alpha,
            beta: self.beta,
        }
    }

    /// SHA-256 of the canonical JSON form, after overrides.
    pub fn hash(&self) -> String {
        let text = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(text.as_bytes()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate_and_round_trip() {
        let c = ScenarioConfig::default();
        c.validate().unwrap();
        let back: ScenarioConfig = serde_json::from_str(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(back.hash(), c.hash());
        assert_eq!(c.zeta.samples().len(), 40);
    }

    #[test]
    fn partial_config_fills_defaults() {
        let c: ScenarioConfig = serde_json::from_str(r#"{"schema_version": 1, "n": 3}"#).unwrap();
        assert_eq!(c.n, 3);
        assert_eq!(c.ladder, vec![64, 128, 256]);
    }

    #[test]
    fn rejects_bad_cascade_and_ladder() {
        let mut c = ScenarioConfig::default();
        c.cascade.epsilon = 2.0;
        c.cascade.eta = 0.6;
        assert!(c.validate().is_err());
        let mut c = ScenarioConfig::default();
        c.ladder = vec![128, 64];
        assert!(c.validate().is_err());
        let mut c = ScenarioConfig::default();
        c.schema_version = 9;
        assert!(c.validate().is_err());
    }
}
