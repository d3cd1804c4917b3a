//! Exploration configuration: one JSON file describing the components, the
//! system graph, the backend and the sweep parameters.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use cosmos_core::backend::{SimulatedBackend, SynthesisBackend, TableBackend, TableRow};
use cosmos_core::characterize::CharacterizationConfig;
use cosmos_core::model::ComponentDescriptor;
use cosmos_core::tmg::{validate, Binding, TimedMarkedGraph};

use crate::CliError;

pub const DEFAULT_MAX_COMBINATIONS: u64 = 10_000_000;

/// Which synthesis backend a run uses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BackendConfig {
    /// Deterministic parametric model seeded by the run seed.
    Simulated,
    /// Replay of a measured result table (CSV), optionally interpolating
    /// between known unroll counts.
    Table {
        path: PathBuf,
        #[serde(default = "default_true")]
        interpolate: bool,
    },
}

fn default_true() -> bool {
    true
}

fn default_max_combinations() -> u64 {
    DEFAULT_MAX_COMBINATIONS
}

/// The full run configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplorationConfig {
    pub clock_ns: f64,
    /// Pareto-curve granularity δ for the throughput sweep.
    pub delta: f64,
    #[serde(default)]
    pub seed: u64,
    pub backend: BackendConfig,
    /// Refusal guard for the exhaustive composition step.
    #[serde(default = "default_max_combinations")]
    pub max_combinations: u64,
    #[serde(default)]
    pub max_ports: Option<u32>,
    #[serde(default)]
    pub max_unrolls: Option<u32>,
    #[serde(default)]
    pub neighborhood_radius: Option<u32>,
    pub components: Vec<ComponentDescriptor>,
    pub graph: TimedMarkedGraph,
}

impl ExplorationConfig {
    pub fn characterization(&self) -> CharacterizationConfig {
        CharacterizationConfig {
            clock_ns: self.clock_ns,
            max_ports: self.max_ports,
            max_unrolls: self.max_unrolls,
            neighborhood_radius: self.neighborhood_radius,
        }
    }

    pub fn component_map(&self) -> BTreeMap<String, ComponentDescriptor> {
        self.components.iter().map(|c| (c.name.clone(), c.clone())).collect()
    }

    /// Fixed delays contributed by fixed-latency components.
    pub fn fixed_components(&self) -> BTreeMap<String, f64> {
        self.components
            .iter()
            .filter_map(|c| c.fixed_latency_ms.map(|d| (c.name.clone(), d)))
            .collect()
    }

    pub fn synthesizable(&self) -> impl Iterator<Item = &ComponentDescriptor> {
        self.components.iter().filter(|c| c.is_synthesizable())
    }

    /// Instantiates the configured backend. Table paths are resolved
    /// relative to `base_dir` (the config file's directory).
    pub fn make_backend(
        &self,
        base_dir: &Path,
        seed: u64,
    ) -> Result<Box<dyn SynthesisBackend + Send + Sync>, CliError> {
        match &self.backend {
            BackendConfig::Simulated => Ok(Box::new(SimulatedBackend::new(seed))),
            BackendConfig::Table { path, interpolate } => {
                let resolved = if path.is_absolute() { path.clone() } else { base_dir.join(path) };
                let rows = load_table(&resolved)?;
                Ok(Box::new(TableBackend::new(rows, *interpolate)))
            }
        }
    }

    /// Full structural validation; error messages name the offending field.
    pub fn validate(&self) -> Result<(), CliError> {
        let mut errs: Vec<String> = Vec::new();
        if !(self.delta > 0.0) {
            errs.push("delta must be positive".into());
        }
        if !(self.clock_ns > 0.0) {
            errs.push("clock_ns must be positive".into());
        }
        let mut names = BTreeMap::new();
        for c in &self.components {
            if names.insert(c.name.clone(), ()).is_some() {
                errs.push(format!("duplicate component '{}'", c.name));
            }
            errs.extend(c.validate());
            if matches!(self.backend, BackendConfig::Simulated) {
                if let Some(p) = &c.synth {
                    if !(p.area.base_mm2 > 0.0) || !(p.plm.bank_mm2 > 0.0) {
                        errs.push(format!(
                            "component '{}': simulated backend requires positive area and plm coefficients",
                            c.name
                        ));
                    }
                }
            }
        }
        for v in validate(&self.graph) {
            errs.push(format!("graph: {v}"));
        }
        for t in &self.graph.transitions {
            if let Binding::Component(name) = &t.binding {
                if !names.contains_key(name) {
                    errs.push(format!(
                        "transition '{}' binds unknown component '{}'",
                        t.name, name
                    ));
                }
            }
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(CliError::Config(errs.join("; ")))
        }
    }
}

/// Loads and validates a configuration file.
pub fn load_config(path: &Path) -> Result<ExplorationConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| CliError::Io { path: path.to_path_buf(), source })?;
    let config: ExplorationConfig = serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    config.validate()?;
    Ok(config)
}

/// Reads a replay table CSV with the header
/// `component,unrolls,ports,clock_ns,latency_cycles,logic_area_mm2,plm_area_mm2`.
pub fn load_table(path: &Path) -> Result<Vec<TableRow>, CliError> {
    let mut reader = csv::Reader::from_path(path)
        .map_err(|e| CliError::Config(format!("table {}: {e}", path.display())))?;
    let mut rows = Vec::new();
    for record in reader.deserialize::<TableRow>() {
        rows.push(record.map_err(|e| CliError::Config(format!("table {}: {e}", path.display())))?);
    }
    if rows.is_empty() {
        return Err(CliError::Config(format!("table {} has no rows", path.display())));
    }
    Ok(rows)
}
