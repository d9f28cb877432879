//! Run configuration, stored as TOML.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::connection::{ConnectionFamily, MarkLaw};
use crate::error::{Error, Result};
use crate::estimation::{CriticalConfig, Model, ONE_ARM_2D};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub master_seed: u64,
    pub dim: usize,
    pub q: usize,
    /// Replicates per estimate.
    pub n: u64,
    pub betas: Vec<f64>,
    /// Radii `r`; `decay` fits over all of them.
    pub radii: Vec<f64>,
    /// Sphere radii `s` for the exploration; empty means `r / 2`.
    #[serde(default)]
    pub s: Vec<f64>,
    pub out: PathBuf,
    pub family: ConnectionFamily,
    #[serde(default)]
    pub marks: MarkLaw,
    #[serde(default)]
    pub betac: BetacSection,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BetacSection {
    pub r_small: f64,
    pub r_large: f64,
    pub bracket: [f64; 2],
    pub points: usize,
    pub tau: f64,
    pub eta: f64,
    pub resamples: usize,
}

impl Default for BetacSection {
    fn default() -> Self {
        Self {
            r_small: 4.0,
            r_large: 8.0,
            bracket: [2.0, 6.0],
            points: 21,
            tau: 0.05,
            eta: ONE_ARM_2D,
            resamples: 1000,
        }
    }
}

impl RunConfig {
    /// Small two-dimensional Vietoris–Rips run with edge threshold 0.6 and
    /// `D = 0.8`.
    pub fn example() -> Self {
        Self {
            master_seed: 1,
            dim: 2,
            q: 0,
            n: 100,
            betas: vec![4.0],
            radii: vec![10.0],
            s: Vec::new(),
            out: PathBuf::from("out"),
            family: ConnectionFamily::vietoris_rips(0.3, 2).with_cutoff(0.8),
            marks: MarkLaw::Unit,
            betac: BetacSection::default(),
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// SHA-256 of the canonical TOML form, in hex.
    pub fn hash(&self) -> Result<String> {
        let digest = Sha256::digest(self.to_toml()?.as_bytes());
        Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
    }

    pub fn model(&self) -> Model {
        Model::new(self.family.clone(), self.marks.clone(), self.dim)
    }

    /// Sphere radii for an exploration at radius `r`.
    pub fn spheres(&self, r: f64) -> Vec<f64> {
        if self.s.is_empty() {
            vec![r / 2.0]
        } else {
            self.s.clone()
        }
    }

    pub fn critical(&self) -> CriticalConfig {
        CriticalConfig {
            r_small: self.betac.r_small,
            r_large: self.betac.r_large,
            bracket: (self.betac.bracket[0], self.betac.bracket[1]),
            points: self.betac.points,
            n: self.n,
            tau: self.betac.tau,
            eta: self.betac.eta,
            resamples: self.betac.resamples,
        }
    }

    /// Checks the constraints between fields; failures are `Error::Config`.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if !(self.family.cutoff > 0.0 && self.family.cutoff.is_finite()) {
            return bad(format!("cutoff D must be positive and finite, got {}", self.family.cutoff));
        }
        if let Err(e) = self.family.validate().and_then(|_| self.family.check_marks(&self.marks)) {
            return bad(e.to_string());
        }
        if self.q >= self.family.alpha {
            return bad(format!("q = {} must be less than alpha = {}", self.q, self.family.alpha));
        }
        if self.dim == 0 {
            return bad("dim must be at least 1".into());
        }
        if self.n == 0 {
            return bad("n must be at least 1".into());
        }
        if self.betas.is_empty() || self.betas.iter().any(|b| !(b.is_finite() && *b >= 0.0)) {
            return bad("betas must be a non-empty list of non-negative numbers".into());
        }
        if self.radii.is_empty() || self.radii.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
            return bad("radii must be a non-empty list of positive numbers".into());
        }
        if self.s.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
            return bad("s values must be positive".into());
        }
        let r_min = self.radii.iter().copied().fold(f64::INFINITY, f64::min);
        if let Some(s) = self.s.iter().find(|&&s| s > r_min) {
            return bad(format!("s = {s} must not exceed r = {r_min}"));
        }
        Ok(())
    }
}

/// Parses a family from the body of a TOML inline table, such as
/// `kind = "cech", radius = 0.3, alpha = 2, cutoff = 0.6`.
pub fn family_from_inline(body: &str) -> Result<ConnectionFamily> {
    #[derive(Deserialize)]
    struct Wrapper {
        family: ConnectionFamily,
    }
    let w: Wrapper = toml::from_str(&format!("family = {{ {body} }}")).map_err(|e| Error::Config(e.to_string()))?;
    Ok(w.family)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::connection::Kernel;

    #[test]
    fn toml_round_trip() {
        let mut c = RunConfig::example();
        assert_eq!(RunConfig::from_toml(&c.to_toml().unwrap()).unwrap(), c);
        c.family = ConnectionFamily::boolean_balls(0.2, 0.4, 3);
        c.marks = MarkLaw::UniformRadius { min: 0.1, max: 0.4 };
        assert_eq!(RunConfig::from_toml(&c.to_toml().unwrap()).unwrap(), c);
        c.family = ConnectionFamily::diam_kernel(vec![Kernel::Step { value: 0.7, width: 0.5 }], 0.5);
        assert_eq!(RunConfig::from_toml(&c.to_toml().unwrap()).unwrap(), c);
    }

    #[test]
    fn hash_tracks_content() {
        let a = RunConfig::example();
        let mut b = a.clone();
        assert_eq!(a.hash().unwrap(), b.hash().unwrap());
        b.master_seed = 2;
        assert_ne!(a.hash().unwrap(), b.hash().unwrap());
    }

    #[test]
    fn validation_names_the_constraint() {
        let mut c = RunConfig::example();
        c.q = 2;
        let msg = c.validate().unwrap_err().to_string();
        assert!(msg.contains("alpha"), "{msg}");
        let mut c = RunConfig::example();
        c.s = vec![11.0];
        assert!(c.validate().is_err());
        assert!(RunConfig::example().validate().is_ok());
    }

    #[test]
    fn parses_minimal_file() {
        let text = r#"
master_seed = 7
dim = 2
q = 0
n = 10
betas = [1.0, 2.0]
radii = [3.0]
s = [2.0]
out = "results"

[family]
kind = "vietoris_rips"
radius = 0.3
alpha = 2
cutoff = 0.8
"#;
        let c = RunConfig::from_toml(text).unwrap();
        assert_eq!(c.family, ConnectionFamily::vietoris_rips(0.3, 2).with_cutoff(0.8));
        assert_eq!(c.marks, MarkLaw::Unit);
        assert!(RunConfig::from_toml("master_seed = 1\nbogus = 2").is_err());
        let f = family_from_inline(r#"kind = "cech", radius = 0.3, alpha = 2, cutoff = 0.6"#).unwrap();
        assert_eq!(f, ConnectionFamily::cech(0.3, 2));
    }
}
