//! The runnable experiments, registered by subcommand name.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use mdiqkd_core::experiments as exp;
use mdiqkd_core::fock::validate_grid;
use mdiqkd_core::pstmsc::pstmsc_moments;
use serde::Serialize;
use toml::{Table, Value};

use crate::config::RunConfig;
use crate::error::CliError;
use crate::plot::{Plot, Series};

/// One CSV artifact and its optional plot script.
pub struct Artifact {
    pub stem: String,
    pub csv: Vec<u8>,
    pub plots: Vec<Plot>,
}

pub enum Outcome {
    Ok,
    NoKey(String),
    ValidationFailed(String),
}

pub struct Report {
    pub artifacts: Vec<Artifact>,
    /// Human-readable summary for stdout.
    pub summary: String,
    pub outcome: Outcome,
}

pub trait Experiment: Send + Sync {
    fn name(&self) -> &'static str;
    fn about(&self) -> &'static str;

    /// Overrides of the built-in defaults, applied below the config file.
    fn defaults(&self) -> Table {
        Table::new()
    }

    fn run(&self, cfg: &RunConfig) -> Result<Report, CliError>;
}

pub struct ExperimentRegistry {
    entries: BTreeMap<&'static str, Box<dyn Experiment>>,
}

impl Default for ExperimentRegistry {
    fn default() -> Self {
        let mut reg = Self {
            entries: BTreeMap::new(),
        };
        reg.register(Box::new(SweepDistance));
        reg.register(Box::new(Table1));
        reg.register(Box::new(ProbVsVariance));
        reg.register(Box::new(PostSelection));
        reg.register(Box::new(EfficiencySweep));
        reg.register(Box::new(ValidateOracle));
        reg
    }
}

impl ExperimentRegistry {
    pub fn register(&mut self, e: Box<dyn Experiment>) {
        self.entries.insert(e.name(), e);
    }

    pub fn get(&self, name: &str) -> Option<&dyn Experiment> {
        self.entries.get(name).map(|b| b.as_ref())
    }

    pub fn iter(&self) -> impl Iterator<Item = &dyn Experiment> {
        self.entries.values().map(|b| b.as_ref())
    }
}

fn to_csv<T: Serialize>(rows: &[T]) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    w.into_inner().map_err(|e| CliError::Io(e.into_error()))
}

fn strings(items: &[&str]) -> Value {
    Value::Array(items.iter().map(|s| Value::String(s.to_string())).collect())
}

fn state_names(rows: impl Iterator<Item = String>) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for s in rows {
        if !out.contains(&s) {
            out.push(s);
        }
    }
    out
}

fn fmt_km(x: f64) -> String {
    if x.is_nan() {
        "no key".into()
    } else {
        format!("{x:.2}")
    }
}

pub struct SweepDistance;

impl Experiment for SweepDistance {
    fn name(&self) -> &'static str {
        "sweep-distance"
    }

    fn about(&self) -> &'static str {
        "Optimized secret key rate against Alice-Bob distance"
    }

    fn run(&self, cfg: &RunConfig) -> Result<Report, CliError> {
        let opt = cfg.optimizer()?;
        let families = cfg.families()?;
        let channel = cfg.channel()?;
        let distances = exp::linspace_step(cfg.distance_min, cfg.distance_max, cfg.distance_step)
            .map_err(|e| CliError::Config(e.to_string()))?;
        let rows = exp::sweep_distance(&opt, &families, cfg.mode(), &channel, &distances);

        let mut summary = String::new();
        for fam in &families {
            let last = rows
                .iter()
                .filter(|r| r.state == fam.name() && r.skr > cfg.k_threshold)
                .map(|r| r.distance_km)
                .fold(f64::NAN, f64::max);
            writeln!(
                summary,
                "{:<10} last sampled distance with key: {}",
                fam.name(),
                fmt_km(last)
            )
            .unwrap();
        }
        let outcome = if rows.iter().any(|r| r.skr > 0.0) {
            Outcome::Ok
        } else {
            Outcome::NoKey("no state has a positive key rate at any sampled distance".into())
        };
        let plot = Plot {
            name: "sweep_distance".into(),
            title: "Secret key rate".into(),
            xlabel: "distance (km)".into(),
            ylabel: "key rate (bits/use)".into(),
            log_y: true,
            series: Series::Grouped {
                x: "distance_km",
                y: "skr",
                by: "state",
                groups: state_names(rows.iter().map(|r| r.state.clone())),
            },
        };
        Ok(Report {
            artifacts: vec![Artifact {
                stem: "sweep_distance".into(),
                csv: to_csv(&rows)?,
                plots: vec![plot],
            }],
            summary,
            outcome,
        })
    }
}

pub struct Table1;

impl Experiment for Table1 {
    fn name(&self) -> &'static str {
        "table1"
    }

    fn about(&self) -> &'static str {
        "Maximum transmission distance of the photon-subtracted states"
    }

    fn defaults(&self) -> Table {
        let mut t = Table::new();
        let names: Vec<String> = exp::table1_families()
            .iter()
            .map(|f| f.name().to_ascii_lowercase())
            .collect();
        let refs: Vec<&str> = names.iter().map(String::as_str).collect();
        t.insert("states".into(), strings(&refs));
        t
    }

    fn run(&self, cfg: &RunConfig) -> Result<Report, CliError> {
        let opt = cfg.optimizer()?;
        let families = cfg.families()?;
        let channel = cfg.channel()?;
        let rows = exp::max_distances(&opt, &families, cfg.mode(), &channel, cfg.k_threshold)?;

        let mut summary = String::new();
        writeln!(summary, "{:<10} {:>3} {:>12}", "state", "k", "d_max (km)").unwrap();
        for r in &rows {
            writeln!(
                summary,
                "{:<10} {:>3} {:>12}",
                r.state,
                r.k,
                fmt_km(r.d_max_km)
            )
            .unwrap();
        }
        let outcome = if rows.iter().any(|r| r.d_max_km.is_finite()) {
            Outcome::Ok
        } else {
            Outcome::NoKey("no state has key at 0 km".into())
        };
        let plot = Plot {
            name: "table1".into(),
            title: "Maximum transmission distance".into(),
            xlabel: "subtracted photons".into(),
            ylabel: "distance (km)".into(),
            log_y: false,
            series: Series::Suffixed {
                x: "k",
                y: "d_max_km",
                by: "state",
                suffixes: vec!["PSTMSV".into(), "PSTMSC".into()],
            },
        };
        Ok(Report {
            artifacts: vec![Artifact {
                stem: "table1".into(),
                csv: to_csv(&rows)?,
                plots: vec![plot],
            }],
            summary,
            outcome,
        })
    }
}

pub struct ProbVsVariance;

impl Experiment for ProbVsVariance {
    fn name(&self) -> &'static str {
        "prob-vs-variance"
    }

    fn about(&self) -> &'static str {
        "Heralding probability against variance at the anchor-distance optimum"
    }

    fn defaults(&self) -> Table {
        let mut t = Table::new();
        t.insert(
            "states".into(),
            strings(&["1-pstmsc", "2-pstmsc", "1-pstmsv", "2-pstmsv"]),
        );
        t
    }

    fn run(&self, cfg: &RunConfig) -> Result<Report, CliError> {
        let opt = cfg.optimizer()?;
        let families = cfg.families()?;
        let anchor = cfg.channel()?.at_distance(cfg.anchor_distance_km);
        let variances = exp::linspace_step(cfg.variance_min, cfg.variance_max, cfg.variance_step)
            .map_err(|e| CliError::Config(e.to_string()))?;
        let rows = exp::prob_vs_variance(&opt, &families, &anchor, cfg.variance, &variances)?;

        let mut summary = String::new();
        for fam in &families {
            if let Some(r) = rows
                .iter()
                .filter(|r| r.state == fam.name())
                .min_by(|a, b| {
                    (a.variance - cfg.variance)
                        .abs()
                        .total_cmp(&(b.variance - cfg.variance).abs())
                })
            {
                writeln!(
                    summary,
                    "{:<10} P = {:.4} at V = {} (d = {:.4}, T_S = {:.4})",
                    r.state, r.herald_prob, r.variance, r.displacement, r.transmissivity
                )
                .unwrap();
            }
        }
        let plot = Plot {
            name: "prob_vs_variance".into(),
            title: "Heralding probability".into(),
            xlabel: "variance V".into(),
            ylabel: "probability".into(),
            log_y: false,
            series: Series::Grouped {
                x: "variance",
                y: "herald_prob",
                by: "state",
                groups: state_names(rows.iter().map(|r| r.state.clone())),
            },
        };
        Ok(Report {
            artifacts: vec![Artifact {
                stem: "prob_vs_variance".into(),
                csv: to_csv(&rows)?,
                plots: vec![plot],
            }],
            summary,
            outcome: Outcome::Ok,
        })
    }
}

pub struct PostSelection;

impl Experiment for PostSelection {
    fn name(&self) -> &'static str {
        "post-selection"
    }

    fn about(&self) -> &'static str {
        "Average key rate and total heralding probability over 1..N photon channels"
    }

    fn defaults(&self) -> Table {
        let mut t = Table::new();
        t.insert("distance_max".into(), Value::Float(80.0));
        t.insert("distance_step".into(), Value::Float(2.0));
        t
    }

    fn run(&self, cfg: &RunConfig) -> Result<Report, CliError> {
        let opt = cfg.optimizer()?;
        let channel = cfg.channel()?;
        let distances = exp::linspace_step(cfg.distance_min, cfg.distance_max, cfg.distance_step)
            .map_err(|e| CliError::Config(e.to_string()))?;
        let shared = cfg.post_selection_shared()?;
        let rows = exp::post_selection(
            &opt,
            &channel,
            cfg.variance,
            &distances,
            cfg.channels,
            shared,
            !cfg.verbatim_sum,
        )?;

        let mut summary = String::new();
        for n in 1..=cfg.channels {
            writeln!(
                summary,
                "N = {n}: max P_total with key = {:.4}",
                exp::max_total_probability(&rows, n)
            )
            .unwrap();
        }
        let outcome = if rows.iter().any(|r| r.k_avg > 0.0) {
            Outcome::Ok
        } else {
            Outcome::NoKey("K_avg is not positive at any sampled distance".into())
        };
        let groups: Vec<String> = (1..=cfg.channels).map(|n| n.to_string()).collect();
        let k_plot = Plot {
            name: "post_selection_k_avg".into(),
            title: "Average key rate".into(),
            xlabel: "distance (km)".into(),
            ylabel: "K_avg (bits/use)".into(),
            log_y: true,
            series: Series::Grouped {
                x: "distance_km",
                y: "k_avg",
                by: "channels",
                groups: groups.clone(),
            },
        };
        let p_plot = Plot {
            name: "post_selection_p_total".into(),
            title: "Total heralding probability".into(),
            xlabel: "distance (km)".into(),
            ylabel: "P_total".into(),
            log_y: false,
            series: Series::Grouped {
                x: "distance_km",
                y: "p_total",
                by: "channels",
                groups,
            },
        };
        Ok(Report {
            artifacts: vec![Artifact {
                stem: "post_selection".into(),
                csv: to_csv(&rows)?,
                plots: vec![k_plot, p_plot],
            }],
            summary,
            outcome,
        })
    }
}

pub struct EfficiencySweep;

impl Experiment for EfficiencySweep {
    fn name(&self) -> &'static str {
        "efficiency-sweep"
    }

    fn about(&self) -> &'static str {
        "Key rate against homodyne detector efficiency, with threshold efficiencies"
    }

    fn defaults(&self) -> Table {
        let mut t = Table::new();
        t.insert("v_el".into(), Value::Float(0.01));
        t.insert(
            "states".into(),
            strings(&["tmsv", "1-pstmsc", "1-pstmsv", "2-pstmsv"]),
        );
        t
    }

    fn run(&self, cfg: &RunConfig) -> Result<Report, CliError> {
        let opt = cfg.optimizer()?;
        let families = cfg.families()?;
        let channel = cfg.channel()?;
        let etas = exp::linspace_step(cfg.eta_min, cfg.eta_max, cfg.eta_step)
            .map_err(|e| CliError::Config(e.to_string()))?;
        if etas.iter().any(|&e| !(e > 0.0 && e <= 1.0 + 1e-12)) {
            return Err(CliError::Config("efficiencies must lie in (0, 1]".into()));
        }
        let etas: Vec<f64> = etas.into_iter().map(|e| e.min(1.0)).collect();
        let rows = exp::efficiency_sweep(&opt, &families, cfg.mode(), &channel, &etas);
        let thresholds = exp::eta_thresholds(
            &opt,
            &families,
            cfg.mode(),
            &channel,
            cfg.k_threshold,
            cfg.eta_floor,
        )?;

        let mut summary = String::new();
        for t in &thresholds {
            let shown = if t.eta_threshold.is_nan() {
                "no key".to_string()
            } else {
                format!("{:.5}", t.eta_threshold)
            };
            writeln!(summary, "{:<10} threshold efficiency: {shown}", t.state).unwrap();
        }
        let outcome = if rows.iter().any(|r| r.skr > 0.0) {
            Outcome::Ok
        } else {
            Outcome::NoKey("no state has a positive key rate at any sampled efficiency".into())
        };
        let plot = Plot {
            name: "efficiency_sweep".into(),
            title: format!("Key rate at {} km", cfg.distance_km),
            xlabel: "detector efficiency".into(),
            ylabel: "key rate (bits/use)".into(),
            log_y: true,
            series: Series::Grouped {
                x: "eta",
                y: "skr",
                by: "state",
                groups: state_names(rows.iter().map(|r| r.state.clone())),
            },
        };
        Ok(Report {
            artifacts: vec![
                Artifact {
                    stem: "efficiency_sweep".into(),
                    csv: to_csv(&rows)?,
                    plots: vec![plot],
                },
                Artifact {
                    stem: "eta_thresholds".into(),
                    csv: to_csv(&thresholds)?,
                    plots: Vec::new(),
                },
            ],
            summary,
            outcome,
        })
    }
}

pub struct ValidateOracle;

impl Experiment for ValidateOracle {
    fn name(&self) -> &'static str {
        "validate-oracle"
    }

    fn about(&self) -> &'static str {
        "Compare the closed-form moments with the truncated Fock-space simulation"
    }

    fn run(&self, cfg: &RunConfig) -> Result<Report, CliError> {
        let points = exp::oracle_grid(
            &cfg.oracle_variances,
            &cfg.oracle_displacements,
            &cfg.oracle_transmissivities,
            &cfg.oracle_photons,
        )
        .map_err(|e| CliError::Config(e.to_string()))?;
        if points.is_empty() {
            return Err(CliError::Config("oracle grid is empty".into()));
        }
        let scale = 1.0 + cfg.oracle_perturbation;
        let comparisons = validate_grid(&points, cfg.oracle_tail, |p| {
            pstmsc_moments(p).map(|mut cm| {
                cm.vq_c *= scale;
                cm
            })
        })?;
        let rows: Vec<exp::OracleRow> = comparisons
            .iter()
            .map(|c| exp::oracle_row(c, cfg.oracle_tolerance))
            .collect();

        let failed = rows.iter().filter(|r| !r.pass).count();
        let worst = rows
            .iter()
            .map(|r| r.prob_error.max(r.moment_error))
            .fold(0.0, f64::max);
        let max_cutoff = rows.iter().map(|r| r.cutoff).max().unwrap_or(0);
        let summary = format!(
            "{} points, {} failed, worst error {:.3e} (tolerance {:.1e}), largest cutoff {}\n",
            rows.len(),
            failed,
            worst,
            cfg.oracle_tolerance,
            max_cutoff
        );
        let outcome = if failed == 0 {
            Outcome::Ok
        } else {
            Outcome::ValidationFailed(format!(
                "{failed} of {} points exceed tolerance",
                rows.len()
            ))
        };
        let plot = Plot {
            name: "validate_oracle".into(),
            title: "Closed form against Fock simulation".into(),
            xlabel: "variance V".into(),
            ylabel: "moment error".into(),
            log_y: true,
            series: Series::Grouped {
                x: "variance",
                y: "moment_error",
                by: "k",
                groups: state_names(rows.iter().map(|r| r.k.to_string())),
            },
        };
        Ok(Report {
            artifacts: vec![Artifact {
                stem: "validate_oracle".into(),
                csv: to_csv(&rows)?,
                plots: vec![plot],
            }],
            summary,
            outcome,
        })
    }
}
