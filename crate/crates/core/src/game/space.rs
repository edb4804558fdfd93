use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::automata::ProtocolConfig;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyEntry {
    pub id: String,
    #[serde(flatten)]
    pub config: ProtocolConfig,
    /// Inadmissible entries are kept for reporting but never played.
    #[serde(default = "admissible_default")]
    pub admissible: bool,
}

fn admissible_default() -> bool {
    true
}

/// Finite, ordered set of candidate configurations with stable ids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategySpace {
    entries: Vec<StrategyEntry>,
}

impl StrategySpace {
    pub fn new(entries: Vec<StrategyEntry>) -> Result<Self> {
        let mut seen = HashSet::new();
        for (i, e) in entries.iter().enumerate() {
            if e.id.is_empty() {
                return Err(Error::config(
                    format!("strategy_space[{i}].id"),
                    "must not be empty",
                ));
            }
            if !seen.insert(e.id.as_str()) {
                return Err(Error::config(
                    format!("strategy_space[{i}].id"),
                    format!("duplicate id `{}`", e.id),
                ));
            }
            e.config.validate(&format!("strategy_space[{i}]"))?;
        }
        let space = StrategySpace { entries };
        if space.is_empty() {
            return Err(Error::config(
                "strategy_space",
                "needs at least one admissible config",
            ));
        }
        Ok(space)
    }

    pub fn from_configs<I, S>(items: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, ProtocolConfig)>,
        S: Into<String>,
    {
        StrategySpace::new(
            items
                .into_iter()
                .map(|(id, config)| StrategyEntry {
                    id: id.into(),
                    config,
                    admissible: true,
                })
                .collect(),
        )
    }

    /// Every entry, admissible or not.
    pub fn all_entries(&self) -> &[StrategyEntry] {
        &self.entries
    }

    /// The admissible entries; indices elsewhere refer to this list.
    pub fn entries(&self) -> Vec<&StrategyEntry> {
        self.entries.iter().filter(|e| e.admissible).collect()
    }

    pub fn len(&self) -> usize {
        self.entries.iter().filter(|e| e.admissible).count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn ids(&self) -> Vec<&str> {
        self.entries().into_iter().map(|e| e.id.as_str()).collect()
    }

    pub fn get(&self, index: usize) -> &StrategyEntry {
        self.entries()[index]
    }

    pub fn index_of(&self, id: &str) -> Result<usize> {
        self.ids()
            .iter()
            .position(|i| *i == id)
            .ok_or_else(|| Error::UnknownProfile {
                id: id.to_string(),
                known: self.ids().join(", "),
            })
    }
}
