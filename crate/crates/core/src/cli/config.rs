use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimation::Functional;
use crate::functionals::RegimeParams;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Sample,
    Functional,
    Sprinkle,
    Estimate,
    Curve,
    Rate,
    Verify,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Sample => "sample",
            Command::Functional => "functional",
            Command::Sprinkle => "sprinkle",
            Command::Estimate => "estimate",
            Command::Curve => "curve",
            Command::Rate => "rate",
            Command::Verify => "verify",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Sparse,
    Critical,
    Dense,
}

impl Regime {
    /// Parameters every command in this regime reads.
    pub fn required(&self) -> &'static [&'static str] {
        match self {
            Regime::Sparse => &["d", "n", "r_n", "k0"],
            Regime::Critical => &["d", "n", "k", "alpha"],
            Regime::Dense => &["d", "n", "k", "a_n"],
        }
    }

    pub fn default_functional(&self, params: &RegimeParams) -> Functional {
        match self {
            Regime::Sparse => Functional::SparseClique { k0: params.k0.unwrap_or(2) },
            Regime::Critical => Functional::CriticalKnn,
            Regime::Dense => Functional::Dense,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// Verification suites run by `verify`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    BallCount,
    BadBoxSparse,
    BadBoxDense,
    Sprinkle,
    KnnSprinkle,
    KnnTail,
    Coupling,
    DenseSequential,
    Rates,
}

impl Suite {
    pub const ALL: [Suite; 9] = [
        Suite::BallCount,
        Suite::BadBoxSparse,
        Suite::BadBoxDense,
        Suite::Sprinkle,
        Suite::KnnSprinkle,
        Suite::KnnTail,
        Suite::Coupling,
        Suite::DenseSequential,
        Suite::Rates,
    ];
}

/// One experiment.  Read from a JSON file; command-line flags override it.
///
/// `threads` and `out_path` are not serialized into output metadata since
/// neither may change an output byte.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub command: Option<Command>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub regime: Option<Regime>,
    #[serde(default)]
    pub params: RegimeParams,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub functional: Option<Functional>,
    /// Lower-tail threshold.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    /// Overlays on `params`, one per point of a scaling curve.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub params_list: Vec<RegimeParams>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub replicates: Option<usize>,
    #[serde(default, skip_serializing)]
    pub threads: Option<usize>,
    #[serde(default, skip_serializing)]
    pub out_path: Option<PathBuf>,
    #[serde(default)]
    pub format: Format,
    /// Inner Monte Carlo budget: goodness redraws, clique-volume samples.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    /// Thresholds at which `rate` evaluates the rate function.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub rate_grid: Vec<f64>,
    /// Suites run by `verify`; empty means all.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub suites: Vec<Suite>,
}

fn present(p: &RegimeParams, name: &str) -> bool {
    match name {
        "d" => p.d.is_some(),
        "n" => p.n.is_some(),
        "r_n" => p.r_n.is_some(),
        "k0" => p.k0.is_some(),
        "k" => p.k.is_some(),
        "alpha" => p.alpha.is_some(),
        "a_n" => p.a_n.is_some(),
        "s0" => p.s0.is_some(),
        "M" => p.m.is_some(),
        "M_prime" => p.m_prime.is_some(),
        "M0" => p.m0.is_some(),
        "epsilon" => p.epsilon.is_some(),
        "w_n" => p.w_n.is_some(),
        _ => false,
    }
}

pub(crate) fn require(p: &RegimeParams, names: &[&'static str]) -> Result<()> {
    match names.iter().find(|n| !present(p, n)) {
        Some(n) => Err(Error::MissingParameter(n)),
        None => Ok(()),
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn command(&self) -> Result<Command> {
        self.command.ok_or(Error::Config("no command given".into()))
    }

    pub fn regime(&self) -> Result<Regime> {
        self.regime.ok_or(Error::Config("missing field `regime`".into()))
    }

    pub fn functional(&self) -> Result<Functional> {
        Ok(match self.functional {
            Some(f) => f,
            None => self.regime()?.default_functional(&self.params),
        })
    }

    pub fn threshold(&self) -> Result<f64> {
        self.a.ok_or(Error::Config("missing field `a`".into()))
    }

    /// Checks that every field the command needs is present.
    pub fn validate(&self) -> Result<()> {
        let command = self.command()?;
        if let Some(r) = self.regime {
            require(&self.params, r.required())?;
        }
        if self.replicates == Some(0) {
            return Err(Error::Config("`replicates` must be positive".into()));
        }
        if self.threads == Some(0) {
            return Err(Error::Config("`threads` must be positive".into()));
        }
        match command {
            Command::Verify => {}
            Command::Sample => require(&self.params, &["d", "n"])?,
            Command::Functional => {
                self.regime()?;
            }
            Command::Sprinkle => match self.regime()? {
                Regime::Sparse => {}
                Regime::Critical => require(&self.params, &["M"])?,
                Regime::Dense => require(&self.params, &["M", "M0"])?,
            },
            Command::Estimate => {
                self.regime()?;
                self.threshold()?;
            }
            Command::Curve => {
                let r = self.regime()?;
                self.threshold()?;
                if self.params_list.is_empty() {
                    return Err(Error::Config("missing field `params_list`".into()));
                }
                for p in &self.params_list {
                    require(&self.params.overlay(p), r.required())?;
                }
            }
            Command::Rate => {
                let r = self.regime()?;
                if r == Regime::Critical {
                    return Err(Error::Unsupported("no closed-form rate function in the critical regime".into()));
                }
                if self.rate_grid.is_empty() && self.a.is_none() {
                    return Err(Error::Config("missing field `rate_grid`".into()));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_fields_rejected() {
        let e = ExperimentConfig::from_json(r#"{"command":"sample","bogus":1}"#).unwrap_err();
        assert!(e.to_string().contains("bogus"));
        let e = ExperimentConfig::from_json(r#"{"command":"sample","params":{"rn":1}}"#).unwrap_err();
        assert!(e.to_string().contains("rn"));
    }

    #[test]
    fn missing_regime_field_is_named() {
        let c = ExperimentConfig::from_json(
            r#"{"command":"estimate","regime":"sparse","a":0.5,"params":{"d":1,"n":100,"k0":2}}"#,
        )
        .unwrap();
        let e = c.validate().unwrap_err();
        assert!(matches!(e, Error::MissingParameter("r_n")));
    }

    #[test]
    fn metadata_omits_threads_and_path() {
        let c = ExperimentConfig {
            command: Some(Command::Verify),
            threads: Some(4),
            out_path: Some("x.csv".into()),
            ..Default::default()
        };
        let s = serde_json::to_string(&c).unwrap();
        assert!(!s.contains("threads") && !s.contains("x.csv"));
    }
}
