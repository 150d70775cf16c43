//! Experiment configuration, read from flat TOML.
//!
//! ```toml
//! kind = "mean-sim"
//! d = 10
//! n = 2000
//! trials = 200
//! epsilon = 2.0
//! delta = [0.2, 0.2, 2, 2, 2, 2, 2, 2, 2, 2]
//! q_grid = [0.0, 0.25, 0.5, 0.75, 0.99]
//! zeta = "heuristic"   # or a number in (0, 1]
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::calibration::PrivacyDemand;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    MeanSim,
    OlsSim,
    Audit,
    Calibrate,
}

impl Kind {
    pub fn name(self) -> &'static str {
        match self {
            Kind::MeanSim => "mean-sim",
            Kind::OlsSim => "ols-sim",
            Kind::Audit => "audit",
            Kind::Calibrate => "calibrate",
        }
    }
}

/// How `zeta` is chosen for each `q` on the grid.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(try_from = "ZetaSetting", into = "ZetaSetting")]
pub enum ZetaPolicy {
    Fixed(f64),
    /// `zeta = (1 + q) / 2`.
    #[default]
    Heuristic,
}

impl ZetaPolicy {
    pub fn zeta(self, q: f64) -> f64 {
        match self {
            ZetaPolicy::Fixed(z) => z,
            ZetaPolicy::Heuristic => (1.0 + q) / 2.0,
        }
    }
}

impl std::str::FromStr for ZetaPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "heuristic" {
            return Ok(ZetaPolicy::Heuristic);
        }
        let z: f64 = s
            .parse()
            .map_err(|_| Error::Config(format!("zeta must be a number or `heuristic`, got `{s}`")))?;
        ZetaPolicy::try_from(ZetaSetting::Number(z))
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum ZetaSetting {
    Number(f64),
    Name(String),
}

impl TryFrom<ZetaSetting> for ZetaPolicy {
    type Error = Error;

    fn try_from(s: ZetaSetting) -> Result<Self> {
        match s {
            ZetaSetting::Number(z) if z > 0.0 && z <= 1.0 => Ok(ZetaPolicy::Fixed(z)),
            ZetaSetting::Number(z) => Err(Error::Config(format!("zeta must lie in (0, 1], got {z}"))),
            ZetaSetting::Name(n) if n == "heuristic" => Ok(ZetaPolicy::Heuristic),
            ZetaSetting::Name(n) => Err(Error::Config(format!("unknown zeta policy `{n}`"))),
        }
    }
}

impl From<ZetaPolicy> for ZetaSetting {
    fn from(p: ZetaPolicy) -> Self {
        match p {
            ZetaPolicy::Fixed(z) => ZetaSetting::Number(z),
            ZetaPolicy::Heuristic => ZetaSetting::Name("heuristic".into()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<Kind>,
    pub d: usize,
    /// Users per trial (mean-sim).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    /// Users per trial, one batch each (ols-sim).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_grid: Option<Vec<usize>>,
    pub trials: usize,
    pub epsilon: f64,
    pub delta: Vec<f64>,
    pub q_grid: Vec<f64>,
    #[serde(default)]
    pub zeta: ZetaPolicy,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    /// Draw data as independent signs instead of from the correlated prior.
    #[serde(default)]
    pub iid_data: bool,
    /// Redraw the data in every trial instead of once per batch.
    #[serde(default)]
    pub redraw_data: bool,
    /// True regression coefficients, `d - 1` entries (ols-sim).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta_star: Option<Vec<f64>>,
    /// Radius of the feasible ball; defaults to `sqrt(d - 1)` (ols-sim).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    /// Replace the private channel by the identity (ols-sim debugging).
    #[serde(default)]
    pub identity_channel: bool,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// The scaled mean-estimation setup: `d = 10`, two sensitive coordinates.
    pub fn mean_default() -> Self {
        let mut delta = vec![0.2, 0.2];
        delta.extend([2.0; 8]);
        ExperimentConfig {
            kind: Some(Kind::MeanSim),
            d: 10,
            n: Some(2000),
            n_grid: None,
            trials: 200,
            epsilon: 2.0,
            delta,
            q_grid: vec![0.0, 0.25, 0.5, 0.75, 0.99],
            zeta: ZetaPolicy::Heuristic,
            seed: None,
            output: None,
            iid_data: false,
            redraw_data: false,
            theta_star: None,
            radius: None,
            identity_channel: false,
        }
    }

    /// The regression scaling setup: `d = 5` with the label last.
    pub fn ols_default() -> Self {
        ExperimentConfig {
            kind: Some(Kind::OlsSim),
            d: 5,
            n: None,
            n_grid: Some(vec![500, 2000, 5000]),
            trials: 50,
            epsilon: 2.0,
            delta: vec![0.5, 0.5, 2.0, 2.0, 2.0],
            q_grid: vec![0.0],
            theta_star: Some(vec![0.25, -0.25, 0.25, 0.25]),
            ..Self::mean_default()
        }
    }

    pub fn seed(&self) -> Result<u64> {
        self.seed
            .ok_or_else(|| Error::Config("a seed is required for simulations".into()))
    }

    /// The privacy demand at correlation `q`, with `zeta` from the policy.
    pub fn demand(&self, q: f64) -> Result<PrivacyDemand> {
        PrivacyDemand::new(self.epsilon, self.delta.clone(), q, self.zeta.zeta(q))
    }

    fn validate_common(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.d == 0 {
            return bad("d must be positive".into());
        }
        if self.trials == 0 {
            return bad("trials must be positive".into());
        }
        if self.delta.len() != self.d {
            return bad(format!("delta has {} entries, expected d = {}", self.delta.len(), self.d));
        }
        if self.q_grid.is_empty() {
            return bad("q_grid is empty".into());
        }
        if let Some(q) = self.q_grid.iter().find(|q| !(0.0..=1.0).contains(*q)) {
            return bad(format!("q = {q} outside [0, 1]"));
        }
        for &q in &self.q_grid {
            self.demand(q).map_err(|e| Error::Config(e.to_string()))?;
        }
        Ok(())
    }

    pub fn validate_mean(&self) -> Result<()> {
        self.validate_common()?;
        match self.n {
            Some(n) if n > 0 => Ok(()),
            _ => Err(Error::Config("mean-sim needs a positive `n`".into())),
        }
    }

    pub fn validate_ols(&self) -> Result<()> {
        self.validate_common()?;
        if self.d < 2 {
            return Err(Error::Config("ols-sim needs d >= 2 (features plus label)".into()));
        }
        match &self.n_grid {
            Some(g) if !g.is_empty() && g.iter().all(|n| *n > 0) => {}
            _ => return Err(Error::Config("ols-sim needs a non-empty positive `n_grid`".into())),
        }
        match &self.theta_star {
            Some(t) if t.len() == self.d - 1 => {}
            Some(t) => {
                return Err(Error::Config(format!(
                    "theta_star has {} entries, expected d - 1 = {}",
                    t.len(),
                    self.d - 1
                )))
            }
            None => return Err(Error::Config("ols-sim needs `theta_star`".into())),
        }
        if let Some(r) = self.radius {
            if !(r > 0.0 && r.is_finite()) {
                return Err(Error::Config(format!("radius must be positive, got {r}")));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_a_mean_config() {
        let c = ExperimentConfig::from_toml(
            "kind = \"mean-sim\"\nd = 3\nn = 10\ntrials = 2\nepsilon = 1.0\ndelta = [0.5, 1, 1]\nq_grid = [0.0, 0.5]\nzeta = 0.5\n",
        )
        .unwrap();
        assert_eq!(c.kind, Some(Kind::MeanSim));
        assert_eq!(c.zeta, ZetaPolicy::Fixed(0.5));
        assert!(!c.iid_data);
        c.validate_mean().unwrap();
        assert!(c.validate_ols().is_err());
    }

    #[test]
    fn zeta_defaults_to_the_heuristic() {
        let c = ExperimentConfig::from_toml(
            "d = 1\nn = 1\ntrials = 1\nepsilon = 1.0\ndelta = [1.0]\nq_grid = [0.5]\n",
        )
        .unwrap();
        assert_eq!(c.zeta, ZetaPolicy::Heuristic);
        assert_eq!(c.zeta.zeta(0.5), 0.75);
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(ExperimentConfig::from_toml("d = 1\nbogus = 2\n").is_err());
        assert!(ExperimentConfig::from_toml(
            "d = 1\nn = 1\ntrials = 1\nepsilon = 1.0\ndelta = [1.0]\nq_grid = [0.5]\nzeta = 1.5\n"
        )
        .is_err());
        let mut c = ExperimentConfig::mean_default();
        c.q_grid = vec![1.2];
        assert!(c.validate_mean().is_err());
        let mut c = ExperimentConfig::mean_default();
        c.delta.pop();
        assert!(c.validate_mean().is_err());
        let mut c = ExperimentConfig::ols_default();
        c.theta_star = Some(vec![0.0; 2]);
        assert!(c.validate_ols().is_err());
        assert!("often".parse::<ZetaPolicy>().is_err());
        assert_eq!("heuristic".parse::<ZetaPolicy>().unwrap(), ZetaPolicy::Heuristic);
    }

    #[test]
    fn defaults_validate_and_round_trip() {
        for c in [ExperimentConfig::mean_default(), ExperimentConfig::ols_default()] {
            let back = ExperimentConfig::from_toml(&c.to_toml()).unwrap();
            assert_eq!(back, c);
        }
        ExperimentConfig::mean_default().validate_mean().unwrap();
        ExperimentConfig::ols_default().validate_ols().unwrap();
    }
}
