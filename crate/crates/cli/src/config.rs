//! Run configuration: built-in defaults, then experiment defaults, then the
//! config file, then `--set` overrides.

use std::path::Path;
use std::sync::Arc;

use mdiqkd_core::channel::{ChannelConfig, Topology};
use mdiqkd_core::optimizer::{Mode, OptBounds, Optimizer, StrategyRegistry};
use mdiqkd_core::states::{ResourceFamily, StateRegistry};
use serde::{Deserialize, Serialize};
use toml::{Table, Value};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    // Channel.
    pub topology: String,
    pub distance_km: f64,
    pub attenuation_db_per_km: f64,
    pub eps_a: f64,
    pub eps_b: f64,
    pub eta: f64,
    pub v_el: f64,
    pub reconciliation: f64,

    // Optimizer.
    pub optimizer: String,
    pub grid_v: usize,
    pub grid_d: usize,
    pub grid_ts: usize,
    pub refine_tol: f64,
    pub k_threshold: f64,
    pub v_range: [f64; 2],
    pub d_range: [f64; 2],
    pub ts_range: [f64; 2],

    // States and variance.
    pub states: Vec<String>,
    pub variance: f64,
    /// Optimize V as well as (d, T_S).
    pub optimize_variance: bool,

    // Distance sweeps.
    pub distance_min: f64,
    pub distance_max: f64,
    pub distance_step: f64,

    // Probability against variance.
    pub anchor_distance_km: f64,
    pub variance_min: f64,
    pub variance_max: f64,
    pub variance_step: f64,

    // Post-selection.
    pub channels: u32,
    /// `shared` or `per-channel`.
    pub post_selection: String,
    /// Sum negative channel rates as they are instead of flooring them.
    pub verbatim_sum: bool,

    // Detector efficiency.
    pub eta_min: f64,
    pub eta_max: f64,
    pub eta_step: f64,
    pub eta_floor: f64,

    // Oracle validation.
    pub oracle_variances: Vec<f64>,
    pub oracle_displacements: Vec<f64>,
    pub oracle_transmissivities: Vec<f64>,
    pub oracle_photons: Vec<u32>,
    pub oracle_tolerance: f64,
    pub oracle_tail: f64,
    /// Relative perturbation applied to the closed-form cross-covariance
    /// before comparison; a nonzero value must make validation fail.
    pub oracle_perturbation: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        let ch = ChannelConfig::default();
        let b = OptBounds::default();
        Self {
            topology: ch.topology.to_string(),
            distance_km: 10.0,
            attenuation_db_per_km: ch.attenuation,
            eps_a: ch.eps_a,
            eps_b: ch.eps_b,
            eta: ch.eta,
            v_el: ch.v_el,
            reconciliation: ch.reconciliation,
            optimizer: "grid-pattern".into(),
            grid_v: b.grid_v,
            grid_d: b.grid_d,
            grid_ts: b.grid_ts,
            refine_tol: b.refine_tol,
            k_threshold: 1e-5,
            v_range: [b.v_range.0, b.v_range.1],
            d_range: [b.d_range.0, b.d_range.1],
            ts_range: [b.ts_range.0, b.ts_range.1],
            states: vec!["tmsv".into(), "1-pstmsc".into(), "1-pstmsv".into()],
            variance: 15.0,
            optimize_variance: false,
            distance_min: 0.0,
            distance_max: 100.0,
            distance_step: 1.0,
            anchor_distance_km: 60.0,
            variance_min: 1.0,
            variance_max: 15.0,
            variance_step: 0.1,
            channels: 4,
            post_selection: "shared".into(),
            verbatim_sum: false,
            eta_min: 0.9,
            eta_max: 1.0,
            eta_step: 0.001,
            eta_floor: 0.5,
            oracle_variances: vec![1.5, 3.0, 5.0, 10.0],
            oracle_displacements: vec![0.0, 0.5, 1.0, 2.0],
            oracle_transmissivities: vec![0.5, 0.7, 0.9],
            oracle_photons: vec![0, 1, 2, 3, 4],
            oracle_tolerance: 1e-7,
            oracle_tail: 1e-14,
            oracle_perturbation: 0.0,
        }
    }
}

/// Parses one `key=value` override. The value is read as a TOML value and
/// falls back to a bare string.
pub fn parse_override(item: &str) -> Result<(String, Value), CliError> {
    let (key, raw) = item
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("--set expects key=value, got '{item}'")))?;
    let key = key.trim();
    if key.is_empty() {
        return Err(CliError::Config(format!(
            "--set has an empty key in '{item}'"
        )));
    }
    let raw = raw.trim();
    let value = match toml::from_str::<Table>(&format!("v = {raw}")) {
        Ok(mut t) => t.remove("v").expect("parsed key"),
        Err(_) => Value::String(raw.to_string()),
    };
    Ok((key.to_string(), value))
}

fn merge(base: &mut Table, over: Table) {
    for (k, v) in over {
        base.insert(k, v);
    }
}

/// Resolves the layered configuration.
pub fn resolve(
    experiment_defaults: Table,
    file: Option<&Path>,
    overrides: &[String],
) -> Result<RunConfig, CliError> {
    let mut table =
        Table::try_from(RunConfig::default()).map_err(|e| CliError::Config(e.to_string()))?;
    merge(&mut table, experiment_defaults);
    if let Some(path) = file {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let parsed: Table = toml::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        merge(&mut table, parsed);
    }
    for item in overrides {
        let (k, v) = parse_override(item)?;
        table.insert(k, v);
    }
    let cfg: RunConfig = table
        .try_into()
        .map_err(|e: toml::de::Error| CliError::Config(e.to_string()))?;
    cfg.check()?;
    Ok(cfg)
}

impl RunConfig {
    fn check(&self) -> Result<(), CliError> {
        self.channel()?;
        self.optimizer()?;
        self.families()?;
        if !(1..=4).contains(&self.channels) {
            return Err(CliError::Config(format!(
                "channels must be 1..=4, got {}",
                self.channels
            )));
        }
        self.post_selection_shared()?;
        if !(self.k_threshold >= 0.0) {
            return Err(CliError::Config("k_threshold must be >= 0".into()));
        }
        Ok(())
    }

    pub fn channel(&self) -> Result<ChannelConfig, CliError> {
        let topology: Topology = self
            .topology
            .parse()
            .map_err(|e| CliError::Config(format!("{e}")))?;
        let ch = ChannelConfig {
            topology,
            distance_km: self.distance_km,
            attenuation: self.attenuation_db_per_km,
            eps_a: self.eps_a,
            eps_b: self.eps_b,
            eta: self.eta,
            v_el: self.v_el,
            reconciliation: self.reconciliation,
        };
        ch.validate().map_err(|e| CliError::Config(e.to_string()))?;
        Ok(ch)
    }

    pub fn optimizer(&self) -> Result<Optimizer, CliError> {
        let bounds = OptBounds {
            v_range: (self.v_range[0], self.v_range[1]),
            d_range: (self.d_range[0], self.d_range[1]),
            ts_range: (self.ts_range[0], self.ts_range[1]),
            grid_v: self.grid_v,
            grid_d: self.grid_d,
            grid_ts: self.grid_ts,
            refine_tol: self.refine_tol,
            ..OptBounds::default()
        };
        let strategy = StrategyRegistry::default()
            .get(&self.optimizer)
            .map_err(|e| CliError::Config(e.to_string()))?;
        Optimizer::new(bounds, strategy).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn families(&self) -> Result<Vec<Arc<dyn ResourceFamily>>, CliError> {
        let reg = StateRegistry::default();
        if self.states.is_empty() {
            return Err(CliError::Config("states must not be empty".into()));
        }
        self.states
            .iter()
            .map(|s| reg.get(s).map_err(|e| CliError::Config(e.to_string())))
            .collect()
    }

    pub fn mode(&self) -> Mode {
        if self.optimize_variance {
            Mode::All
        } else {
            Mode::FixedVariance(self.variance)
        }
    }

    pub fn post_selection_shared(&self) -> Result<bool, CliError> {
        match self.post_selection.as_str() {
            "shared" => Ok(true),
            "per-channel" => Ok(false),
            other => Err(CliError::Config(format!(
                "post_selection must be 'shared' or 'per-channel', got '{other}'"
            ))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn overrides_parse_as_toml() {
        assert_eq!(parse_override("eta=0.99").unwrap().1, Value::Float(0.99));
        assert_eq!(parse_override("grid_d = 11").unwrap().1, Value::Integer(11));
        assert_eq!(
            parse_override("topology=symmetric").unwrap().1,
            Value::String("symmetric".into())
        );
        assert!(matches!(
            parse_override("states=[\"tmsv\"]").unwrap().1,
            Value::Array(_)
        ));
        assert!(parse_override("novalue").is_err());
    }

    #[test]
    fn layering_order() {
        let mut defaults = Table::new();
        defaults.insert("eta".into(), Value::Float(0.9));
        defaults.insert("v_el".into(), Value::Float(0.01));
        let mut file = tempfile::NamedTempFile::new().unwrap();
        writeln!(file, "eta = 0.95\ndistance_km = 20.0").unwrap();
        let cfg = resolve(defaults, Some(file.path()), &["distance_km=30".into()]).unwrap();
        assert_eq!(cfg.v_el, 0.01);
        assert_eq!(cfg.eta, 0.95);
        assert_eq!(cfg.distance_km, 30.0);
    }

    #[test]
    fn errors_are_config_errors() {
        let mut file = tempfile::NamedTempFile::new().unwrap();
        writeln!(file, "eta = 0.95\nbroken = = 1").unwrap();
        let err = resolve(Table::new(), Some(file.path()), &[]).unwrap_err();
        assert!(
            matches!(err, CliError::Config(ref m) if m.contains("line 2")),
            "{err}"
        );
        assert!(matches!(
            resolve(Table::new(), None, &["bogus_key=1".into()]),
            Err(CliError::Config(_))
        ));
        assert!(matches!(
            resolve(Table::new(), None, &["eta=1.5".into()]),
            Err(CliError::Config(_))
        ));
        assert!(matches!(
            resolve(Table::new(), None, &["states=[\"x\"]".into()]),
            Err(CliError::Config(_))
        ));
        assert!(matches!(
            resolve(Table::new(), None, &["optimizer=\"sgd\"".into()]),
            Err(CliError::Config(_))
        ));
    }
}
