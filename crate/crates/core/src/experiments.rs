//! Row-producing drivers for the standard experiments. No I/O.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::channel::ChannelConfig;
use crate::error::{Error, Result};
use crate::fock::{validate_grid, OracleComparison};
use crate::optimizer::{Mode, Optimizer};
use crate::pstmsc::{herald_probability, pstmsc_moments, ResourceParams, StateKind};
use crate::states::{family_for, ResourceFamily};

/// `lo, lo+step, …` up to and including `hi` (within rounding).
pub fn linspace_step(lo: f64, hi: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !(hi >= lo) {
        return Err(Error::domain(format!("bad range {lo}..{hi} step {step}")));
    }
    let n = ((hi - lo) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|i| lo + step * i as f64).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub distance_km: f64,
    pub state: String,
    pub k: u32,
    pub optimal_d: f64,
    pub optimal_ts: f64,
    pub optimal_v: f64,
    pub herald_prob: f64,
    pub i_ab: f64,
    pub chi_be: f64,
    pub skr: f64,
    pub at_bound: bool,
}

impl SweepRow {
    fn missing(distance_km: f64, family: &dyn ResourceFamily) -> Self {
        Self {
            distance_km,
            state: family.name(),
            k: family.kind().photons(),
            optimal_d: f64::NAN,
            optimal_ts: f64::NAN,
            optimal_v: f64::NAN,
            herald_prob: f64::NAN,
            i_ab: f64::NAN,
            chi_be: f64::NAN,
            skr: f64::NAN,
            at_bound: false,
        }
    }
}

/// Optimized key rate per `(distance, state)`, distance-major.
pub fn sweep_distance(
    opt: &Optimizer,
    families: &[Arc<dyn ResourceFamily>],
    mode: Mode,
    config: &ChannelConfig,
    distances: &[f64],
) -> Vec<SweepRow> {
    let mut rows = Vec::with_capacity(distances.len() * families.len());
    for &l in distances {
        let cfg = config.at_distance(l);
        for fam in families {
            rows.push(match opt.optimize(fam.as_ref(), mode, &cfg) {
                Ok(r) => SweepRow {
                    distance_km: l,
                    state: fam.name(),
                    k: fam.kind().photons(),
                    optimal_d: r.params.displacement,
                    optimal_ts: r.params.transmissivity,
                    optimal_v: r.params.variance,
                    herald_prob: r.key.herald_prob,
                    i_ab: r.key.i_ab,
                    chi_be: r.key.chi_be,
                    skr: r.best_k,
                    at_bound: r.at_bound,
                },
                Err(_) => SweepRow::missing(l, fam.as_ref()),
            });
        }
    }
    rows
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaxDistanceRow {
    pub state: String,
    pub k: u32,
    /// `NaN` when there is no key even at 0 km.
    pub d_max_km: f64,
}

/// Maximum distance of each family.
pub fn max_distances(
    opt: &Optimizer,
    families: &[Arc<dyn ResourceFamily>],
    mode: Mode,
    config: &ChannelConfig,
    threshold: f64,
) -> Result<Vec<MaxDistanceRow>> {
    families
        .iter()
        .map(|fam| {
            let d_max_km = match opt.max_distance(fam.as_ref(), mode, config, threshold) {
                Ok(d) => d,
                Err(Error::NoKey(_)) => f64::NAN,
                Err(e) => return Err(e),
            };
            Ok(MaxDistanceRow {
                state: fam.name(),
                k: fam.kind().photons(),
                d_max_km,
            })
        })
        .collect()
}

/// The subtracted families for one to four photons, vacuum first.
pub fn table1_families() -> Vec<Arc<dyn ResourceFamily>> {
    let mut out: Vec<Arc<dyn ResourceFamily>> =
        (1..=4).map(|k| family_for(StateKind::Pstmsv(k))).collect();
    out.extend((1..=4).map(|k| family_for(StateKind::Pstmsc(k))));
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbabilityRow {
    pub state: String,
    pub k: u32,
    pub variance: f64,
    pub displacement: f64,
    pub transmissivity: f64,
    pub herald_prob: f64,
}

/// Heralding probability across `variances` at the `(d, T_S)` that
/// maximizes the key rate at `anchor_v` and `anchor` distance.
pub fn prob_vs_variance(
    opt: &Optimizer,
    families: &[Arc<dyn ResourceFamily>],
    anchor: &ChannelConfig,
    anchor_v: f64,
    variances: &[f64],
) -> Result<Vec<ProbabilityRow>> {
    let mut rows = Vec::new();
    for fam in families {
        let best = opt.optimize_d_ts(fam.as_ref(), anchor_v, anchor)?;
        for &v in variances {
            let p = fam.params(v, best.params.displacement, best.params.transmissivity)?;
            rows.push(ProbabilityRow {
                state: fam.name(),
                k: fam.kind().photons(),
                variance: v,
                displacement: p.displacement,
                transmissivity: p.transmissivity,
                herald_prob: herald_probability(&p),
            });
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PostSelectionRow {
    pub distance_km: f64,
    pub channels: u32,
    pub k_avg: f64,
    pub p_total: f64,
    /// Displacement and transmissivity of channel 1 (shared by all channels
    /// in shared mode).
    pub d: f64,
    pub ts: f64,
}

/// `K_avg` and total heralding probability for `N = 1..=n_max` per distance.
/// In shared mode each `N` is seeded with the `N − 1` optimum.
pub fn post_selection(
    opt: &Optimizer,
    config: &ChannelConfig,
    v: f64,
    distances: &[f64],
    n_max: u32,
    shared: bool,
    floor: bool,
) -> Result<Vec<PostSelectionRow>> {
    let mut rows = Vec::new();
    for &l in distances {
        let cfg = config.at_distance(l);
        let mut seed = None;
        for n in 1..=n_max {
            let ps = opt.post_selection(n, v, &cfg, shared, floor, seed)?;
            seed = Some(ps.shared_point());
            rows.push(PostSelectionRow {
                distance_km: l,
                channels: n,
                k_avg: ps.average.k_avg,
                p_total: ps.average.p_total,
                d: ps.params[0].displacement,
                ts: ps.params[0].transmissivity,
            });
        }
    }
    Ok(rows)
}

/// Largest `p_total` among rows of `channels` with positive `K_avg`.
pub fn max_total_probability(rows: &[PostSelectionRow], channels: u32) -> f64 {
    rows.iter()
        .filter(|r| r.channels == channels && r.k_avg > 0.0)
        .map(|r| r.p_total)
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EfficiencyRow {
    pub eta: f64,
    pub state: String,
    pub k: u32,
    pub optimal_v: f64,
    pub optimal_d: f64,
    pub optimal_ts: f64,
    pub skr: f64,
}

/// Optimized key rate against detector efficiency at a fixed distance.
pub fn efficiency_sweep(
    opt: &Optimizer,
    families: &[Arc<dyn ResourceFamily>],
    mode: Mode,
    config: &ChannelConfig,
    etas: &[f64],
) -> Vec<EfficiencyRow> {
    let mut rows = Vec::new();
    for &eta in etas {
        let cfg = ChannelConfig { eta, ..*config };
        for fam in families {
            let row = match opt.optimize(fam.as_ref(), mode, &cfg) {
                Ok(r) => EfficiencyRow {
                    eta,
                    state: fam.name(),
                    k: fam.kind().photons(),
                    optimal_v: r.params.variance,
                    optimal_d: r.params.displacement,
                    optimal_ts: r.params.transmissivity,
                    skr: r.best_k,
                },
                Err(_) => EfficiencyRow {
                    eta,
                    state: fam.name(),
                    k: fam.kind().photons(),
                    optimal_v: f64::NAN,
                    optimal_d: f64::NAN,
                    optimal_ts: f64::NAN,
                    skr: f64::NAN,
                },
            };
            rows.push(row);
        }
    }
    rows
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdRow {
    pub state: String,
    pub k: u32,
    /// `NaN` when even ideal detectors give no key.
    pub eta_threshold: f64,
}

pub fn eta_thresholds(
    opt: &Optimizer,
    families: &[Arc<dyn ResourceFamily>],
    mode: Mode,
    config: &ChannelConfig,
    threshold: f64,
    eta_floor: f64,
) -> Result<Vec<ThresholdRow>> {
    families
        .iter()
        .map(|fam| {
            let eta_threshold =
                match opt.eta_threshold(fam.as_ref(), mode, config, threshold, eta_floor) {
                    Ok(e) => e,
                    Err(Error::NoKey(_)) => f64::NAN,
                    Err(e) => return Err(e),
                };
            Ok(ThresholdRow {
                state: fam.name(),
                k: fam.kind().photons(),
                eta_threshold,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleRow {
    pub variance: f64,
    pub displacement: f64,
    pub transmissivity: f64,
    pub k: u32,
    pub cutoff: usize,
    pub prob_closed: f64,
    pub prob_oracle: f64,
    pub prob_error: f64,
    pub moment_error: f64,
    pub pass: bool,
}

/// The Cartesian grid `V × d × T_S × k`.
pub fn oracle_grid(
    variances: &[f64],
    displacements: &[f64],
    transmissivities: &[f64],
    photons: &[u32],
) -> Result<Vec<ResourceParams>> {
    let mut out = Vec::new();
    for &v in variances {
        for &d in displacements {
            for &t in transmissivities {
                for &k in photons {
                    out.push(ResourceParams::new(v, d, t, k)?);
                }
            }
        }
    }
    Ok(out)
}

/// Closed form against the Fock oracle over `points`.
pub fn validate_oracle(points: &[ResourceParams], tail: f64, tol: f64) -> Result<Vec<OracleRow>> {
    let comparisons = validate_grid(points, tail, pstmsc_moments)?;
    Ok(comparisons.iter().map(|c| oracle_row(c, tol)).collect())
}

pub fn oracle_row(c: &OracleComparison, tol: f64) -> OracleRow {
    OracleRow {
        variance: c.params.variance,
        displacement: c.params.displacement,
        transmissivity: c.params.transmissivity,
        k: c.params.photons,
        cutoff: c.cutoff,
        prob_closed: c
            .closed
            .as_ref()
            .map(|cm| cm.herald_prob)
            .unwrap_or(f64::NAN),
        prob_oracle: c.oracle.herald_prob,
        prob_error: c.prob_error,
        moment_error: c.moment_error,
        pass: c.passes(tol),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linspace_includes_endpoint() {
        let v = linspace_step(0.0, 100.0, 1.0).unwrap();
        assert_eq!(v.len(), 101);
        assert_eq!(v[100], 100.0);
        assert_eq!(linspace_step(0.0, 0.3, 0.1).unwrap().len(), 4);
        assert!(linspace_step(1.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn sweep_rows_are_distance_major() {
        let opt = Optimizer::default();
        let fams = vec![
            family_for(StateKind::Tmsv),
            family_for(StateKind::Pstmsv(1)),
        ];
        let rows = sweep_distance(
            &opt,
            &fams,
            Mode::FixedVariance(15.0),
            &ChannelConfig::default(),
            &[0.0, 10.0],
        );
        let labels: Vec<_> = rows
            .iter()
            .map(|r| (r.distance_km, r.state.as_str()))
            .collect();
        assert_eq!(
            labels,
            vec![
                (0.0, "TMSV"),
                (0.0, "1-PSTMSV"),
                (10.0, "TMSV"),
                (10.0, "1-PSTMSV")
            ]
        );
    }

    #[test]
    fn vacuum_probability_vanishes_without_squeezing() {
        let opt = Optimizer::default();
        let fams = vec![family_for(StateKind::Pstmsv(1))];
        let rows = prob_vs_variance(
            &opt,
            &fams,
            &ChannelConfig::default().at_distance(60.0),
            15.0,
            &[1.0, 1.5],
        )
        .unwrap();
        assert_eq!(rows[0].herald_prob, 0.0);
        assert!(rows[1].herald_prob > 0.0);
    }

    #[test]
    fn oracle_rows_flag_passes() {
        let pts = oracle_grid(&[3.0], &[0.5], &[0.7], &[0, 1]).unwrap();
        let rows = validate_oracle(&pts, 1e-14, 1e-7).unwrap();
        assert!(rows.iter().all(|r| r.pass));
    }
}
