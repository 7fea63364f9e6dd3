use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use chlax_core::reduction::case_ids;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("n must be at least 1")]
    ZeroN,
    #[error("at least one value of n is required")]
    EmptyN,
    #[error("oracle sample count must be at least 1")]
    ZeroSamples,
    #[error("unknown case `{0}`")]
    UnknownCase(String),
    #[error("unknown format `{0}` (expected text, latex or json)")]
    UnknownFormat(String),
    #[error("cannot read or write `{path}`: {msg}")]
    Io { path: String, msg: String },
    #[error("invalid case registry: {0}")]
    Registry(String),
}

/// Output document kind.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Text,
    Latex,
    Json,
}

impl FromStr for Format {
    type Err = ConfigError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "text" => Ok(Format::Text),
            "latex" => Ok(Format::Latex),
            "json" => Ok(Format::Json),
            other => Err(ConfigError::UnknownFormat(other.into())),
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Format::Text => "text",
            Format::Latex => "latex",
            Format::Json => "json",
        })
    }
}

/// Which reduction cases to run.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CaseFilter {
    All,
    Ids(Vec<String>),
}

impl CaseFilter {
    pub fn selects(&self, id: &str) -> bool {
        match self {
            CaseFilter::All => true,
            CaseFilter::Ids(v) => v.iter().any(|x| x == id),
        }
    }
}

impl FromStr for CaseFilter {
    type Err = ConfigError;
    /// `all`, or a comma-separated list of case ids.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.trim() == "all" {
            return Ok(CaseFilter::All);
        }
        let mut ids: Vec<String> = s
            .split(',')
            .map(|x| x.trim().to_string())
            .filter(|x| !x.is_empty())
            .collect();
        ids.sort();
        ids.dedup();
        Ok(CaseFilter::Ids(ids))
    }
}

/// Everything that determines a run. Two runs with equal configs produce
/// identical JSON reports.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunConfig {
    /// Hierarchy levels for the Lax-pair, stationary and oracle checks.
    pub n: BTreeSet<u32>,
    /// Hierarchy levels for symmetries, reductions and appendix checks.
    pub reduction_n: BTreeSet<u32>,
    pub cases: CaseFilter,
    pub oracle_samples: usize,
    pub seed: u64,
    pub formats: Vec<Format>,
    pub fail_fast: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            n: [1, 2, 3].into_iter().collect(),
            reduction_n: [1, 2].into_iter().collect(),
            cases: CaseFilter::All,
            oracle_samples: 100,
            seed: 0,
            formats: vec![Format::Text],
            fail_fast: false,
        }
    }
}

impl RunConfig {
    /// Checks ranges and, when `known` is given, that every selected id exists.
    pub fn validate(&self, known: Option<&[String]>) -> Result<(), ConfigError> {
        if self.n.is_empty() {
            return Err(ConfigError::EmptyN);
        }
        if self.n.contains(&0) || self.reduction_n.contains(&0) {
            return Err(ConfigError::ZeroN);
        }
        if self.oracle_samples == 0 {
            return Err(ConfigError::ZeroSamples);
        }
        if let CaseFilter::Ids(ids) = &self.cases {
            let builtin = case_ids();
            let known = known.unwrap_or(&builtin);
            if let Some(bad) = ids.iter().find(|id| !known.contains(id)) {
                return Err(ConfigError::UnknownCase(bad.clone()));
            }
        }
        Ok(())
    }
}

/// Parses `1,2,3`.
pub fn parse_n_list(s: &str) -> Result<BTreeSet<u32>, String> {
    s.split(',')
        .filter(|x| !x.trim().is_empty())
        .map(|x| x.trim().parse::<u32>().map_err(|e| format!("`{x}`: {e}")))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn filters_parse() {
        assert_eq!("all".parse::<CaseFilter>().unwrap(), CaseFilter::All);
        assert_eq!(
            "IV.2, I.1".parse::<CaseFilter>().unwrap(),
            CaseFilter::Ids(vec!["I.1".into(), "IV.2".into()])
        );
        assert!(CaseFilter::All.selects("VI"));
    }

    #[test]
    fn validation() {
        assert!(RunConfig::default().validate(None).is_ok());
        let mut c = RunConfig::default();
        c.cases = CaseFilter::Ids(vec!["III.1".into()]);
        assert_eq!(c.validate(None), Err(ConfigError::UnknownCase("III.1".into())));
        let mut c = RunConfig::default();
        c.oracle_samples = 0;
        assert_eq!(c.validate(None), Err(ConfigError::ZeroSamples));
        let mut c = RunConfig::default();
        c.n.insert(0);
        assert_eq!(c.validate(None), Err(ConfigError::ZeroN));
    }

    #[test]
    fn n_lists() {
        assert_eq!(parse_n_list("3,1").unwrap().into_iter().collect::<Vec<_>>(), vec![1, 3]);
        assert!(parse_n_list("x").is_err());
    }
}
