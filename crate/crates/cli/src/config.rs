use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use multibranch::critpoints::SearchConfig;
use multibranch::pdeverify::{geometric_schedule, MorseSettings, NewtonSettings, VerifyConfig};
use multibranch::spectrum::{parse_rational, DomainSpec, GroupTarget};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const OUT_ENV: &str = "MULTIBRANCH_OUT";

/// Everything a run depends on. Every field has a default; a TOML file may set any subset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// `square`, `cube`, or comma-separated squared side lengths such as `pi^2,3*pi^2`.
    pub domain: String,
    /// 1-based eigenvalue index (first index of its group).
    pub j: Option<usize>,
    /// Exact eigenvalue in the domain's units, e.g. `5` or `28/3`; overrides `j`.
    pub eigenvalue: Option<String>,
    pub p: f64,
    /// Number of eigenvalue groups listed by `spectrum`.
    pub count: usize,
    pub search: SearchConfig,
    pub verify: VerifySection,
    pub out_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            domain: "square".into(),
            j: None,
            eigenvalue: None,
            p: 3.0,
            count: 10,
            search: SearchConfig::default(),
            verify: VerifySection::default(),
            out_dir: PathBuf::from("multibranch-out"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifySection {
    /// Intervals per axis; one value is repeated. Default 64 in 2D, 33 in 3D.
    pub grid: Vec<usize>,
    /// Explicit decreasing schedule; empty means `eps0·2^{−t}`.
    pub epsilons: Vec<f64>,
    /// Default `min(0.1, 0.1·gap)`.
    pub eps0: Option<f64>,
    pub steps: usize,
    pub morse: bool,
    pub a_tol: f64,
    pub min_order: f64,
    pub transfer_tol: f64,
    pub distinct_radius: f64,
    pub newton: NewtonSettings,
    pub eigen: MorseSettings,
}

impl Default for VerifySection {
    fn default() -> Self {
        let base = VerifyConfig::for_gap(1.0);
        Self {
            grid: Vec::new(),
            epsilons: Vec::new(),
            eps0: None,
            steps: 4,
            morse: true,
            a_tol: base.a_tol,
            min_order: base.min_order,
            transfer_tol: base.transfer_tol,
            distinct_radius: base.distinct_radius,
            newton: NewtonSettings::default(),
            eigen: MorseSettings::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("in config file {}", path.display()))
    }

    pub fn domain_spec(&self) -> Result<DomainSpec> {
        match self.domain.trim() {
            "" => bail!("empty domain"),
            "square" => Ok(DomainSpec::square_pi()),
            "cube" => Ok(DomainSpec::cube_pi()),
            other => {
                let sides: Vec<&str> = other.split(',').map(str::trim).collect();
                DomainSpec::parse(&sides).with_context(|| format!("domain `{other}`"))
            }
        }
    }

    pub fn target(&self) -> Result<GroupTarget> {
        match (&self.eigenvalue, self.j) {
            (Some(_), Some(_)) => bail!("give either j or eigenvalue, not both"),
            (Some(e), None) => parse_rational(e.trim())
                .map(GroupTarget::Exact)
                .map_err(|m| anyhow::anyhow!("eigenvalue `{e}`: {m}")),
            (None, j) => {
                let j = j.unwrap_or(2);
                if j == 0 {
                    bail!("j is 1-based");
                }
                Ok(GroupTarget::Index(j))
            }
        }
    }

    pub fn grid(&self, dimension: usize) -> Result<Vec<usize>> {
        match self.verify.grid.len() {
            0 => Ok(vec![if dimension == 2 { 64 } else { 33 }; dimension]),
            1 => Ok(vec![self.verify.grid[0]; dimension]),
            n if n == dimension => Ok(self.verify.grid.clone()),
            n => bail!("grid has {n} entries for a {dimension}-dimensional domain"),
        }
    }

    pub fn verify_config(&self, gap: f64) -> VerifyConfig {
        let v = &self.verify;
        let epsilons = if v.epsilons.is_empty() {
            geometric_schedule(v.eps0.unwrap_or(0.1f64.min(0.1 * gap)), v.steps)
        } else {
            v.epsilons.clone()
        };
        VerifyConfig {
            epsilons,
            newton: v.newton.clone(),
            morse: v.eigen.clone(),
            compute_morse: v.morse,
            a_tol: v.a_tol,
            min_order: v.min_order,
            transfer_tol: v.transfer_tol,
            distinct_radius: v.distinct_radius,
        }
    }

    /// SHA-256 of the canonical JSON of the effective config, output directory excluded.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.out_dir = PathBuf::new();
        let json = serde_json::to_string(&c).expect("config serializes");
        format!("{:x}", Sha256::digest(json.as_bytes()))
    }
}
