//! Key-rate maximization over resource parameters, maximum transmission
//! distance and detector-efficiency thresholds.
//!
//! Every search is deterministic: grids are fixed, grid points are evaluated
//! in parallel but reduced by index, and refinement is sequential.

use std::collections::BTreeMap;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::ChannelConfig;
use crate::error::{Error, Result};
use crate::keyrate::{average_key_rate, AverageKeyRate, KeyRateResult};
use crate::pstmsc::{ResourceParams, StateKind};
use crate::states::{family_for, ResourceFamily};

/// One search coordinate: grid over `[lo, hi]`, refinement within
/// `[floor, ceil]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Axis {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
    pub floor: f64,
    pub ceil: f64,
}

impl Axis {
    pub fn fixed(value: f64) -> Self {
        Self {
            lo: value,
            hi: value,
            points: 1,
            floor: value,
            ceil: value,
        }
    }

    pub fn grid(lo: f64, hi: f64, points: usize) -> Self {
        Self {
            lo,
            hi,
            points,
            floor: lo,
            ceil: hi,
        }
    }

    fn is_fixed(&self) -> bool {
        self.floor == self.ceil
    }

    fn spacing(&self) -> f64 {
        if self.points > 1 {
            (self.hi - self.lo) / (self.points - 1) as f64
        } else {
            0.0
        }
    }

    fn value(&self, i: usize) -> f64 {
        if self.points > 1 {
            self.lo + self.spacing() * i as f64
        } else {
            self.lo
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchSpace {
    pub axes: Vec<Axis>,
    /// Refinement stops once every step is below this.
    pub tol: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchOutcome {
    pub point: Vec<f64>,
    pub value: f64,
    /// Best sample of the coarse stage (grid and seeds).
    pub grid_value: f64,
    pub evaluations: usize,
    /// Coarse-stage samples in grid order, if requested.
    pub trace: Option<Vec<(Vec<f64>, f64)>>,
}

pub type Objective<'a> = &'a (dyn Fn(&[f64]) -> f64 + Sync);

/// A maximization scheme over a box.
pub trait SearchStrategy: Send + Sync {
    fn name(&self) -> &'static str;

    /// Maximizes `f`; `seeds` are extra starting candidates. Non-finite
    /// objective values count as `−∞`.
    fn maximize(
        &self,
        f: Objective<'_>,
        space: &SearchSpace,
        seeds: &[Vec<f64>],
        trace: bool,
    ) -> SearchOutcome;
}

fn score(v: f64) -> f64 {
    if v.is_nan() {
        f64::NEG_INFINITY
    } else {
        v
    }
}

/// Coarse stage shared by the strategies: evaluates the full grid and the
/// seeds and returns the first maximal sample.
fn coarse(f: Objective<'_>, space: &SearchSpace, seeds: &[Vec<f64>], trace: bool) -> SearchOutcome {
    let total: usize = space.axes.iter().map(|a| a.points.max(1)).product();
    let point_of = |mut i: usize| -> Vec<f64> {
        let mut p = vec![0.0; space.axes.len()];
        for (slot, axis) in p.iter_mut().zip(&space.axes).rev() {
            let n = axis.points.max(1);
            *slot = axis.value(i % n);
            i /= n;
        }
        p
    };
    let values: Vec<f64> = (0..total)
        .into_par_iter()
        .map(|i| score(f(&point_of(i))))
        .collect();
    let mut best = (0usize, f64::NEG_INFINITY);
    for (i, &v) in values.iter().enumerate() {
        if v > best.1 {
            best = (i, v);
        }
    }
    let mut point = point_of(best.0);
    let mut value = best.1;
    for s in seeds {
        let v = score(f(s));
        if v > value {
            value = v;
            point = s.clone();
        }
    }
    let trace = trace.then(|| (0..total).map(|i| (point_of(i), values[i])).collect());
    SearchOutcome {
        point,
        value,
        grid_value: value,
        evaluations: total + seeds.len(),
        trace,
    }
}

/// Coarse grid only.
#[derive(Debug, Clone, Copy, Default)]
pub struct GridOnly;

impl SearchStrategy for GridOnly {
    fn name(&self) -> &'static str {
        "grid"
    }

    fn maximize(
        &self,
        f: Objective<'_>,
        space: &SearchSpace,
        seeds: &[Vec<f64>],
        trace: bool,
    ) -> SearchOutcome {
        coarse(f, space, seeds, trace)
    }
}

/// Coarse grid followed by compass search from the best sample. Steps start
/// at the grid spacing and halve whenever no axis direction improves.
#[derive(Debug, Clone, Copy)]
pub struct GridPattern {
    pub max_evaluations: usize,
}

impl Default for GridPattern {
    fn default() -> Self {
        Self {
            max_evaluations: 20_000,
        }
    }
}

impl SearchStrategy for GridPattern {
    fn name(&self) -> &'static str {
        "grid-pattern"
    }

    fn maximize(
        &self,
        f: Objective<'_>,
        space: &SearchSpace,
        seeds: &[Vec<f64>],
        trace: bool,
    ) -> SearchOutcome {
        let mut out = coarse(f, space, seeds, trace);
        if !out.value.is_finite() {
            return out;
        }
        let mut steps: Vec<f64> = space
            .axes
            .iter()
            .map(|a| {
                if a.is_fixed() {
                    0.0
                } else if a.points > 1 {
                    a.spacing()
                } else {
                    0.1 * (a.ceil - a.floor)
                }
            })
            .collect();
        let mut evals = 0usize;
        while steps.iter().any(|&s| s >= space.tol) && evals < self.max_evaluations {
            let mut moved = false;
            'poll: for (i, axis) in space.axes.iter().enumerate() {
                if steps[i] == 0.0 {
                    continue;
                }
                for dir in [1.0, -1.0] {
                    let mut cand = out.point.clone();
                    cand[i] = (cand[i] + dir * steps[i]).clamp(axis.floor, axis.ceil);
                    if cand[i] == out.point[i] {
                        continue;
                    }
                    evals += 1;
                    let v = score(f(&cand));
                    if v > out.value {
                        out.point = cand;
                        out.value = v;
                        moved = true;
                        break 'poll;
                    }
                }
            }
            if !moved {
                for s in &mut steps {
                    *s *= 0.5;
                }
            }
        }
        out.evaluations += evals;
        out
    }
}

/// Name → strategy lookup.
#[derive(Clone)]
pub struct StrategyRegistry {
    strategies: BTreeMap<&'static str, Arc<dyn SearchStrategy>>,
}

impl Default for StrategyRegistry {
    fn default() -> Self {
        let mut reg = Self {
            strategies: BTreeMap::new(),
        };
        reg.register(Arc::new(GridPattern::default()));
        reg.register(Arc::new(GridOnly));
        reg
    }
}

impl StrategyRegistry {
    pub fn register(&mut self, strategy: Arc<dyn SearchStrategy>) {
        self.strategies.insert(strategy.name(), strategy);
    }

    pub fn get(&self, name: &str) -> Result<Arc<dyn SearchStrategy>> {
        self.strategies.get(name.trim()).cloned().ok_or_else(|| {
            Error::validation(format!(
                "unknown optimizer '{name}' (known: {})",
                self.names().join(", ")
            ))
        })
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.strategies.keys().copied().collect()
    }
}

/// Parameter box and grid resolution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptBounds {
    pub v_range: (f64, f64),
    pub d_range: (f64, f64),
    /// Grid range of `T_S` for subtracted states.
    pub ts_range: (f64, f64),
    /// Refinement range of `T_S`; stays inside `(0, 1)`.
    pub ts_refine: (f64, f64),
    pub grid_v: usize,
    pub grid_d: usize,
    pub grid_ts: usize,
    pub refine_tol: f64,
}

impl Default for OptBounds {
    fn default() -> Self {
        Self {
            v_range: (1.0, 15.0),
            d_range: (0.0, 5.0),
            ts_range: (0.01, 0.999),
            ts_refine: (1e-4, 1.0 - 1e-6),
            grid_v: 29,
            grid_d: 51,
            grid_ts: 51,
            refine_tol: 1e-4,
        }
    }
}

impl OptBounds {
    pub fn validate(&self) -> Result<()> {
        let ok = self.v_range.0 >= 1.0
            && self.v_range.0 <= self.v_range.1
            && self.d_range.0 >= 0.0
            && self.d_range.0 <= self.d_range.1
            && self.ts_range.0 > 0.0
            && self.ts_range.1 < 1.0
            && self.ts_range.0 <= self.ts_range.1
            && self.ts_refine.0 > 0.0
            && self.ts_refine.1 < 1.0
            && self.ts_refine.0 <= self.ts_range.0
            && self.ts_refine.1 >= self.ts_range.1
            && self.grid_v >= 1
            && self.grid_d >= 1
            && self.grid_ts >= 1
            && self.refine_tol > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::domain(format!(
                "invalid optimization bounds {self:?}"
            )))
        }
    }
}

/// Which parameters are free.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Mode {
    /// `(d, T_S)` at fixed `V`.
    FixedVariance(f64),
    /// `(V, d, T_S)`.
    All,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptResult {
    pub params: ResourceParams,
    pub key: KeyRateResult,
    pub best_k: f64,
    pub grid_best: f64,
    pub evaluations: usize,
    /// The optimum sits on the `d` or `V` bound.
    pub at_bound: bool,
    pub no_key: bool,
    pub grid_trace: Option<Vec<(Vec<f64>, f64)>>,
}

/// Configured optimizer.
#[derive(Clone)]
pub struct Optimizer {
    pub bounds: OptBounds,
    pub strategy: Arc<dyn SearchStrategy>,
    pub trace: bool,
}

impl Default for Optimizer {
    fn default() -> Self {
        Self {
            bounds: OptBounds::default(),
            strategy: Arc::new(GridPattern::default()),
            trace: false,
        }
    }
}

impl std::fmt::Debug for Optimizer {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Optimizer")
            .field("bounds", &self.bounds)
            .field("strategy", &self.strategy.name())
            .finish()
    }
}

impl Optimizer {
    pub fn new(bounds: OptBounds, strategy: Arc<dyn SearchStrategy>) -> Result<Self> {
        bounds.validate()?;
        Ok(Self {
            bounds,
            strategy,
            trace: false,
        })
    }

    fn space(&self, family: &dyn ResourceFamily, mode: Mode) -> SearchSpace {
        let b = &self.bounds;
        let v_axis = match mode {
            Mode::FixedVariance(v) => Axis::fixed(v),
            Mode::All => Axis::grid(b.v_range.0, b.v_range.1, b.grid_v),
        };
        let d_axis = if family.varies_displacement() {
            Axis::grid(b.d_range.0, b.d_range.1, b.grid_d)
        } else {
            Axis::fixed(0.0)
        };
        let ts_axis = if family.varies_transmissivity() {
            Axis {
                floor: b.ts_refine.0,
                ceil: b.ts_refine.1,
                ..Axis::grid(b.ts_range.0, b.ts_range.1, b.grid_ts)
            }
        } else {
            Axis::fixed(1.0)
        };
        SearchSpace {
            axes: vec![v_axis, d_axis, ts_axis],
            tol: b.refine_tol,
        }
    }

    /// Maximizes the key rate of `family` at `config`.
    pub fn optimize(
        &self,
        family: &dyn ResourceFamily,
        mode: Mode,
        config: &ChannelConfig,
    ) -> Result<OptResult> {
        self.optimize_seeded(family, mode, config, &[])
    }

    pub fn optimize_seeded(
        &self,
        family: &dyn ResourceFamily,
        mode: Mode,
        config: &ChannelConfig,
        seeds: &[ResourceParams],
    ) -> Result<OptResult> {
        config.validate()?;
        let space = self.space(family, mode);
        let objective = |x: &[f64]| {
            family
                .params(x[0], x[1], x[2])
                .and_then(|p| family.key_rate(&p, config))
                .map(|r| r.k_rate)
                .unwrap_or(f64::NEG_INFINITY)
        };
        let seeds: Vec<Vec<f64>> = seeds
            .iter()
            .map(|p| vec![p.variance, p.displacement, p.transmissivity])
            .collect();
        let out = self
            .strategy
            .maximize(&objective, &space, &seeds, self.trace);
        if !out.value.is_finite() {
            return Err(Error::NoKey(format!(
                "{} has no valid parameter point at {} km",
                family.name(),
                config.distance_km
            )));
        }
        let params = family.params(out.point[0], out.point[1], out.point[2])?;
        let key = family.key_rate(&params, config)?;
        let tol = self.bounds.refine_tol;
        let on = |x: f64, lo: f64, hi: f64| (x - lo).abs() < tol || (hi - x).abs() < tol;
        let at_bound = (family.varies_displacement()
            && on(
                params.displacement,
                self.bounds.d_range.0,
                self.bounds.d_range.1,
            ))
            || (matches!(mode, Mode::All)
                && on(
                    params.variance,
                    self.bounds.v_range.0,
                    self.bounds.v_range.1,
                ));
        Ok(OptResult {
            params,
            key,
            best_k: out.value,
            grid_best: out.grid_value,
            evaluations: out.evaluations,
            at_bound,
            no_key: !(out.value > 0.0),
            grid_trace: out.trace,
        })
    }

    /// `(d, T_S)` at fixed `V`.
    pub fn optimize_d_ts(
        &self,
        family: &dyn ResourceFamily,
        v: f64,
        config: &ChannelConfig,
    ) -> Result<OptResult> {
        self.optimize(family, Mode::FixedVariance(v), config)
    }

    /// `(V, d, T_S)`.
    pub fn optimize_all(
        &self,
        family: &dyn ResourceFamily,
        config: &ChannelConfig,
    ) -> Result<OptResult> {
        self.optimize(family, Mode::All, config)
    }

    fn optimized_rate(
        &self,
        family: &dyn ResourceFamily,
        mode: Mode,
        config: &ChannelConfig,
    ) -> f64 {
        self.optimize(family, mode, config)
            .map(|r| r.best_k)
            .unwrap_or(f64::NEG_INFINITY)
    }

    /// Largest distance whose optimized key rate exceeds `threshold`: 1 km
    /// bracketing scan from 0, then bisection to 0.01 km.
    pub fn max_distance(
        &self,
        family: &dyn ResourceFamily,
        mode: Mode,
        config: &ChannelConfig,
        threshold: f64,
    ) -> Result<f64> {
        const SCAN_LIMIT_KM: f64 = 1000.0;
        let rate = |l: f64| self.optimized_rate(family, mode, &config.at_distance(l));
        if !(rate(0.0) > threshold) {
            return Err(Error::NoKey(format!(
                "{} has no key at 0 km",
                family.name()
            )));
        }
        let mut lo = 0.0;
        loop {
            let next = lo + 1.0;
            if next > SCAN_LIMIT_KM {
                return Err(Error::Numerical(format!(
                    "{} still has key beyond {SCAN_LIMIT_KM} km",
                    family.name()
                )));
            }
            if rate(next) > threshold {
                lo = next;
            } else {
                break;
            }
        }
        let mut hi = lo + 1.0;
        while hi - lo > 0.01 + 1e-12 {
            let mid = 0.5 * (lo + hi);
            if rate(mid) > threshold {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(lo)
    }

    /// Smallest detector efficiency in `[eta_floor, 1]` whose optimized key
    /// rate exceeds `threshold`, by bisection to `1e-5`.
    pub fn eta_threshold(
        &self,
        family: &dyn ResourceFamily,
        mode: Mode,
        config: &ChannelConfig,
        threshold: f64,
        eta_floor: f64,
    ) -> Result<f64> {
        let rate = |eta: f64| self.optimized_rate(family, mode, &ChannelConfig { eta, ..*config });
        if !(rate(1.0) > threshold) {
            return Err(Error::NoKey(format!(
                "{} has no key even with ideal detectors",
                family.name()
            )));
        }
        if rate(eta_floor) > threshold {
            return Ok(eta_floor);
        }
        let (mut lo, mut hi) = (eta_floor, 1.0);
        while hi - lo > 1e-5 {
            let mid = 0.5 * (lo + hi);
            if rate(mid) > threshold {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(hi)
    }

    /// Post-selection over photon numbers `1..=n` of the PSTMSC family at
    /// fixed `V`.
    ///
    /// With `shared`, one `(d, T_S)` serves every heralded channel and is
    /// chosen to maximize `K_avg`; `seed` (typically the optimum for `n − 1`)
    /// is offered to the search, so the floored `K_avg` cannot decrease with
    /// `n`. Otherwise each channel is optimized on its own.
    pub fn post_selection(
        &self,
        n: u32,
        v: f64,
        config: &ChannelConfig,
        shared: bool,
        floor: bool,
        seed: Option<(f64, f64)>,
    ) -> Result<PostSelection> {
        if !(1..=4).contains(&n) {
            return Err(Error::domain(format!(
                "post-selection needs 1 to 4 channels, got {n}"
            )));
        }
        let build = |d: f64, t: f64| -> Result<Vec<ResourceParams>> {
            (1..=n)
                .map(|k| StateKind::Pstmsc(k).params(v, d, t))
                .collect()
        };
        let params = if shared {
            let family = family_for(StateKind::Pstmsc(1));
            let mut space = self.space(family.as_ref(), Mode::FixedVariance(v));
            space.axes.remove(0);
            let objective = |x: &[f64]| {
                build(x[0], x[1])
                    .and_then(|ps| average_key_rate(&ps, config, floor))
                    .map(|a| a.k_avg)
                    .unwrap_or(f64::NEG_INFINITY)
            };
            let seeds: Vec<Vec<f64>> = seed.iter().map(|&(d, t)| vec![d, t]).collect();
            let out = self.strategy.maximize(&objective, &space, &seeds, false);
            if !out.value.is_finite() {
                return Err(Error::NoKey(format!(
                    "no valid post-selection point at {} km",
                    config.distance_km
                )));
            }
            build(out.point[0], out.point[1])?
        } else {
            (1..=n)
                .map(|k| {
                    self.optimize_d_ts(family_for(StateKind::Pstmsc(k)).as_ref(), v, config)
                        .map(|r| r.params)
                })
                .collect::<Result<Vec<_>>>()?
        };
        let average = average_key_rate(&params, config, floor)?;
        Ok(PostSelection { params, average })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PostSelection {
    pub params: Vec<ResourceParams>,
    pub average: AverageKeyRate,
}

impl PostSelection {
    /// Shared `(d, T_S)`, as a seed for the next photon number.
    pub fn shared_point(&self) -> (f64, f64) {
        let p = &self.params[0];
        (p.displacement, p.transmissivity)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quadratic(x: &[f64]) -> f64 {
        -(x[0] - 0.3).powi(2) - 2.0 * (x[1] + 0.7).powi(2)
    }

    #[test]
    fn pattern_search_finds_interior_optimum() {
        let space = SearchSpace {
            axes: vec![Axis::grid(-1.0, 1.0, 5), Axis::grid(-1.0, 1.0, 5)],
            tol: 1e-6,
        };
        let out = GridPattern::default().maximize(&quadratic, &space, &[], false);
        assert!((out.point[0] - 0.3).abs() < 1e-5 && (out.point[1] + 0.7).abs() < 1e-5);
        assert!(out.value >= out.grid_value);
        let grid = GridOnly.maximize(&quadratic, &space, &[], false);
        assert_eq!(grid.value, out.grid_value);
    }

    #[test]
    fn pattern_search_respects_refinement_box() {
        let space = SearchSpace {
            axes: vec![Axis::grid(0.0, 0.2, 3), Axis::fixed(-0.7)],
            tol: 1e-6,
        };
        let out = GridPattern::default().maximize(&quadratic, &space, &[], true);
        assert_eq!(out.point[0], 0.2);
        assert_eq!(out.trace.unwrap().len(), 3);
    }

    #[test]
    fn seeds_can_win() {
        let space = SearchSpace {
            axes: vec![Axis::grid(-1.0, -0.5, 2), Axis::grid(0.0, 1.0, 2)],
            tol: 1e-3,
        };
        let out = GridOnly.maximize(&quadratic, &space, &[vec![0.3, -0.7]], false);
        assert_eq!(out.value, 0.0);
    }

    #[test]
    fn nan_counts_as_minus_infinity() {
        let space = SearchSpace {
            axes: vec![Axis::grid(0.0, 1.0, 3)],
            tol: 1e-3,
        };
        let f = |x: &[f64]| if x[0] < 0.75 { f64::NAN } else { x[0] };
        let out = GridPattern::default().maximize(&f, &space, &[], false);
        assert_eq!(out.point[0], 1.0);
    }

    #[test]
    fn registry_lookup() {
        let reg = StrategyRegistry::default();
        assert_eq!(reg.get("grid-pattern").unwrap().name(), "grid-pattern");
        assert_eq!(reg.get("grid").unwrap().name(), "grid");
        assert!(reg.get("annealing").is_err());
    }

    #[test]
    fn gaussian_family_is_a_single_evaluation() {
        let opt = Optimizer::default();
        let tmsv = family_for(StateKind::Tmsv);
        let r = opt
            .optimize_d_ts(
                tmsv.as_ref(),
                15.0,
                &ChannelConfig::default().at_distance(10.0),
            )
            .unwrap();
        assert_eq!(r.evaluations, 1);
        assert!(!r.no_key && !r.at_bound);
    }

    #[test]
    fn subtracted_transmissivity_stays_open() {
        let opt = Optimizer::default();
        let fam = family_for(StateKind::Pstmsv(2));
        let r = opt
            .optimize_d_ts(
                fam.as_ref(),
                15.0,
                &ChannelConfig::default().at_distance(30.0),
            )
            .unwrap();
        assert!(r.params.transmissivity > 0.0 && r.params.transmissivity < 1.0);
        assert!(r.best_k >= r.grid_best);
    }

    #[test]
    fn bounds_validation() {
        assert!(OptBounds::default().validate().is_ok());
        let bad = OptBounds {
            ts_range: (0.0, 1.0),
            ..OptBounds::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn no_key_at_zero_distance() {
        let opt = Optimizer::default();
        let cfg = ChannelConfig {
            eta: 0.5,
            ..ChannelConfig::default()
        };
        let fam = family_for(StateKind::Tmsv);
        assert!(matches!(
            opt.max_distance(fam.as_ref(), Mode::FixedVariance(15.0), &cfg, 1e-5),
            Err(Error::NoKey(_))
        ));
    }
}
