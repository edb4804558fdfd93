//! Experiment files.
//!
//! ```toml
//! master_seed = 7
//! lambda = 0.85
//! m_screen = 10000
//! m_cert = 100000
//! alpha_grid = 0.01
//! delta_target = 0.97
//!
//! [scenario]
//! n_nodes = 20
//! # ...
//!
//! [[strategy_space]]
//! id = "A"
//! be_min = 2
//! be_max = 4
//! n_retx = 2
//! cca_us = 128
//! duty_cycle = 0.08
//! ```
//!
//! `phi` and `psi` default to the built-in grid predicates for the scenario.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::automata::EnergyModel;
use crate::cbtl::{builtin_phi, builtin_psi, check_scope, parse, PredicateAst, Scope};
use crate::error::{Error, Result};
use crate::game::{Objective, StrategyEntry, StrategySpace};
use crate::workload::Scenario;

fn default_clause_threshold() -> f64 {
    0.9
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub master_seed: u64,
    /// Worker threads; 0 uses every available core.
    #[serde(default)]
    pub workers: usize,
    pub lambda: f64,
    pub m_screen: u64,
    pub m_cert: u64,
    pub alpha_grid: f64,
    pub delta_target: f64,
    /// Lower-bound threshold for every compliance clause except availability.
    #[serde(default = "default_clause_threshold")]
    pub clause_threshold: f64,
    #[serde(default)]
    pub phi: Option<String>,
    #[serde(default)]
    pub psi: Option<String>,
    pub scenario: Scenario,
    #[serde(default)]
    pub energy_model: EnergyModel,
    pub strategy_space: Vec<StrategyEntry>,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0 && self.lambda <= 1.0) {
            return Err(Error::config(
                "lambda",
                format!("must lie in (0, 1], got {}", self.lambda),
            ));
        }
        if self.m_screen == 0 {
            return Err(Error::config("m_screen", "must be >= 1"));
        }
        if self.m_cert == 0 {
            return Err(Error::config("m_cert", "must be >= 1"));
        }
        if !(self.alpha_grid > 0.0 && self.alpha_grid < 1.0) {
            return Err(Error::config(
                "alpha_grid",
                format!("must lie in (0, 1), got {}", self.alpha_grid),
            ));
        }
        if !(self.delta_target > 0.0 && self.delta_target.is_finite()) {
            return Err(Error::config(
                "delta_target",
                format!("must be > 0, got {}", self.delta_target),
            ));
        }
        if !(0.0..=1.0).contains(&self.clause_threshold) {
            return Err(Error::config("clause_threshold", "must lie in [0, 1]"));
        }
        self.scenario.validate()?;
        self.energy_model.validate("energy_model")?;
        self.space()?;
        self.objective()?;
        Ok(())
    }

    pub fn space(&self) -> Result<StrategySpace> {
        StrategySpace::new(self.strategy_space.clone())
    }

    /// Parsed `phi` and `psi`, falling back to the built-in predicates.
    pub fn objective(&self) -> Result<Objective> {
        let load = |key: &str,
                    text: &Option<String>,
                    fallback: PredicateAst,
                    scope: Scope|
         -> Result<PredicateAst> {
            let ast = match text {
                Some(t) => parse(t).map_err(|source| Error::Predicate {
                    key: key.to_string(),
                    source,
                })?,
                None => fallback,
            };
            check_scope(&ast, scope).map_err(|e| Error::config(key, e.to_string()))?;
            Ok(ast)
        };
        Ok(Objective {
            phi: load("phi", &self.phi, builtin_phi(&self.scenario), Scope::Node)?,
            psi: load(
                "psi",
                &self.psi,
                builtin_psi(&self.scenario),
                Scope::Network,
            )?,
        })
    }
}

/// Parses and validates an experiment file's contents.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let config: ExperimentConfig = toml::from_str(text).map_err(|e| {
        let reason = e.message().to_string();
        let key = match e.span() {
            Some(span) => format!("line {}", text[..span.start].lines().count().max(1)),
            None => "config".to_string(),
        };
        Error::config(key, reason)
    })?;
    config.validate()?;
    Ok(config)
}

pub fn load_config(path: impl AsRef<Path>) -> Result<ExperimentConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
master_seed = 1
lambda = 0.85
m_screen = 10
m_cert = 20
alpha_grid = 0.01
delta_target = 0.97

[scenario]
n_nodes = 3
t_rep = 45
t_alarm = 3
e_max = 150
rho_min = 0.9
horizon = 90

[[strategy_space]]
id = "A"
be_min = 2
be_max = 4
n_retx = 2
cca_us = 128
duty_cycle = 0.08
"#;

    #[test]
    fn minimal_config_loads_with_defaults() {
        let c = parse_config(MINIMAL).unwrap();
        assert_eq!(c.workers, 0);
        assert_eq!(c.clause_threshold, 0.9);
        assert_eq!(c.energy_model, EnergyModel::default());
        assert_eq!(c.strategy_space[0].config.cca_us, 128.0);
        assert_eq!(c.objective().unwrap().phi, builtin_phi(&c.scenario));
    }

    #[test]
    fn zero_duty_cycle_names_the_key() {
        let text = MINIMAL.replace("duty_cycle = 0.08", "duty_cycle = 0");
        match parse_config(&text) {
            Err(Error::Config { key, .. }) => assert_eq!(key, "strategy_space[0].duty_cycle"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn predicate_typo_carries_position() {
        let text = MINIMAL.replace(
            "delta_target = 0.97",
            "delta_target = 0.97\nphi = \"alarm_latncy <= 3 s\"",
        );
        match parse_config(&text) {
            Err(Error::Predicate { key, source }) => {
                assert_eq!(key, "phi");
                assert_eq!(source.position, 0);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn missing_key_is_reported() {
        let text = MINIMAL.replace("lambda = 0.85\n", "");
        let err = parse_config(&text).unwrap_err().to_string();
        assert!(err.contains("lambda"), "{err}");
    }

    #[test]
    fn scope_mismatch_rejected() {
        let text = MINIMAL.replace(
            "delta_target = 0.97",
            "delta_target = 0.97\npsi = \"success_count >= 1\"",
        );
        match parse_config(&text) {
            Err(Error::Config { key, .. }) => assert_eq!(key, "psi"),
            other => panic!("{other:?}"),
        }
    }
}
