//! Run configuration read from a TOML file.

use std::path::{Path, PathBuf};

use looplab::biot_savart::BSConfig;
use looplab::circulation::QuadratureConfig;
use looplab::experiments::{self, EulerSpec, FieldSpec, GaussianRunSpec, KelvinSpec, LoopSpec, ParamsSpec, ScanSpec, Scenario};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Experiment ids, run in order.
    pub experiments: Vec<String>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub threads: Option<usize>,
    #[serde(default)]
    pub out: Option<PathBuf>,
    pub field: FieldSpec,
    #[serde(default, rename = "loop")]
    pub loop_spec: LoopSpec,
    #[serde(default)]
    pub params: ParamsSpec,
    #[serde(default)]
    pub quadrature: QuadratureConfig,
    #[serde(default)]
    pub biot_savart: BSConfig,
    #[serde(default)]
    pub scan: ScanSpec,
    #[serde(default)]
    pub euler: EulerSpec,
    #[serde(default)]
    pub gaussian: GaussianRunSpec,
    #[serde(default)]
    pub kelvin: KelvinSpec,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, String> {
        let cfg: Self = toml::from_str(text).map_err(|e| e.to_string())?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        Self::parse(&text).map_err(|e| format!("{}: {e}", path.display()))
    }

    fn validate(&self) -> Result<(), String> {
        if self.experiments.is_empty() {
            return Err("`experiments` must name at least one experiment".into());
        }
        for id in &self.experiments {
            experiments::find(id).map_err(|e| e.to_string())?;
        }
        if self.threads == Some(0) {
            return Err("`threads` must be at least 1".into());
        }
        self.quadrature.validate().map_err(|e| format!("[quadrature]: {e}"))?;
        self.biot_savart.validate().map_err(|e| format!("[biot_savart]: {e}"))?;
        self.scenario().validate().map_err(|e| e.to_string())
    }

    #[must_use]
    pub fn scenario(&self) -> Scenario {
        Scenario {
            field: self.field.clone(),
            loop_spec: self.loop_spec.clone(),
            params: self.params,
            quadrature: self.quadrature,
            biot_savart: self.biot_savart,
            scan: self.scan.clone(),
            euler: self.euler.clone(),
            gaussian: self.gaussian.clone(),
            kelvin: self.kelvin,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "experiments = [\"euler_ensemble\"]\n[field]\nkind = \"rotation\"\n";

    #[test]
    fn minimal_config_parses() {
        let c = RunConfig::parse(MINIMAL).unwrap();
        assert_eq!(c.params.n, 16);
        assert_eq!(c.scenario().field, FieldSpec::Rotation {});
    }

    #[test]
    fn errors_name_the_key() {
        let missing = RunConfig::parse("experiments = [\"euler_ensemble\"]\n").unwrap_err();
        assert!(missing.contains("field"), "{missing}");
        let unknown = RunConfig::parse(&format!("{MINIMAL}[params]\ngama = 1.0\n")).unwrap_err();
        assert!(unknown.contains("gama") && unknown.contains("line"), "{unknown}");
        let bad_id = RunConfig::parse("experiments = [\"nope\"]\n[field]\nkind = \"rotation\"\n").unwrap_err();
        assert!(bad_id.contains("nope"));
        let negative = RunConfig::parse(&format!("{MINIMAL}[params]\nnu = -1.0\n")).unwrap_err();
        assert!(negative.contains("positive"), "{negative}");
    }

    #[test]
    fn mode_superposition_parses() {
        let text = r#"
experiments = ["kelvin_check"]
[field]
kind = "modes"
[[field.modes]]
v0_re = [0.0, 1.0, 0.0]
v0_im = [0.0, 0.0, 1.0]
a = [1.0, 0.0, 0.0]
[field.time_law]
law = "beltrami_decay"
lambda = 1.0
nu = 1.0
"#;
        let c = RunConfig::parse(text).unwrap();
        assert!(!c.scenario().field.build().unwrap().time_law().is_static());
        let not_transverse = text.replace("a = [1.0, 0.0, 0.0]", "a = [0.0, 1.0, 0.0]");
        assert!(RunConfig::parse(&not_transverse).is_err());
    }
}
