//! Truncated Fock-space construction of the k-PSTMSC state.
//!
//! This is a brute-force reference for [`crate::pstmsc`]: it shares no
//! formulas with it. The squeezer and the beam splitter are applied as
//! exponentials of their ladder-operator generators by Taylor series on the
//! truncated space, and the moments come from ladder-operator matrix elements.
//! The key-rate path never calls it.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::phase_space::{CovMatrix, QuadVector};
use crate::pstmsc::{ResourceParams, TwoModeCM};

/// Default truncation floor.
pub const DEFAULT_CUTOFF: usize = 80;
/// Largest estimated truncation tail [`build_tmsc`] accepts.
pub const TAIL_BUDGET: f64 = 1e-10;
/// Taylor step size bound, in units of the generator norm.
const STEP_NORM: f64 = 4.0;

/// Two-mode pure state `ψ(n₁, n₂)`, `0 ≤ nᵢ ≤ n_max`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct FockState2 {
    n_max: usize,
    amps: Vec<Complex64>,
}

impl FockState2 {
    pub fn vacuum(n_max: usize) -> Self {
        let mut amps = vec![Complex64::new(0.0, 0.0); (n_max + 1) * (n_max + 1)];
        amps[0] = Complex64::new(1.0, 0.0);
        Self { n_max, amps }
    }

    /// Product of two coherent states `|α₁⟩ ⊗ |α₂⟩` with real amplitudes.
    pub fn coherent(alpha1: f64, alpha2: f64, n_max: usize) -> Self {
        let c1 = coherent_amplitudes(alpha1, n_max);
        let c2 = coherent_amplitudes(alpha2, n_max);
        let mut amps = Vec::with_capacity((n_max + 1) * (n_max + 1));
        for a in &c1 {
            for b in &c2 {
                amps.push(Complex64::new(a * b, 0.0));
            }
        }
        Self { n_max, amps }
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn amplitude(&self, n1: usize, n2: usize) -> Complex64 {
        self.amps[self.idx(n1, n2)]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    fn idx(&self, n1: usize, n2: usize) -> usize {
        n1 * (self.n_max + 1) + n2
    }

    fn dim(&self) -> usize {
        self.n_max + 1
    }
}

fn coherent_amplitudes(alpha: f64, n_max: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n_max + 1);
    let mut c = (-0.5 * alpha * alpha).exp();
    out.push(c);
    for n in 1..=n_max {
        c *= alpha / (n as f64).sqrt();
        out.push(c);
    }
    out
}

/// Photon-number tail `Σ_{n>N} P(n)` of one mode of the TMSC state.
///
/// Each mode is marginally a displaced thermal state of mean photon number
/// `sinh² r` and coherent amplitude `d·e^r/2`.
pub fn mode_tail(r: f64, d: f64, cutoff: usize) -> f64 {
    let nbar = r.sinh().powi(2);
    let amp2 = (0.5 * d * r.exp()).powi(2);
    // P(n) = e^{-|β|²/(1+n̄)}/(1+n̄) · zⁿ L_n(-w/z), z = n̄/(1+n̄), w = |β|²/(1+n̄)²,
    // iterated in scaled form so n̄ = 0 reduces to Poisson.
    let z = nbar / (1.0 + nbar);
    let w = amp2 / (1.0 + nbar).powi(2);
    let pref = (-amp2 / (1.0 + nbar)).exp() / (1.0 + nbar);
    let mean = nbar + amp2;

    let mut tail = 0.0;
    let (mut prev, mut cur) = (0.0, 1.0);
    let mut n = 0usize;
    loop {
        let p = pref * cur;
        if n > cutoff {
            tail += p;
            if (n as f64) > 2.0 * mean + 20.0 && p < 1e-18 * tail.max(1e-300) {
                break;
            }
            if p == 0.0 && (n as f64) > mean {
                break;
            }
        }
        let j = n as f64;
        let next = ((2.0 * j + 1.0) * z + w) * cur - j * z * z * prev;
        prev = cur;
        cur = next / (j + 1.0);
        n += 1;
        if n > 100_000 {
            break;
        }
    }
    tail
}

/// Upper bound on the probability lost by truncating both modes at `cutoff`.
pub fn truncation_tail(r: f64, d: f64, cutoff: usize) -> f64 {
    2.0 * mode_tail(r, d, cutoff)
}

/// Smallest cutoff (at least [`DEFAULT_CUTOFF`]) whose truncation tail is
/// below `tail`.
pub fn required_cutoff(r: f64, d: f64, tail: f64) -> usize {
    let mut n = DEFAULT_CUTOFF;
    while truncation_tail(r, d, n) > tail {
        n += 10;
    }
    n
}

/// `ψ ← exp(h·G)ψ` by Taylor series, where `apply(ψ, out)` writes `Gψ`.
fn taylor_propagate<F>(psi: &mut [Complex64], h_total: f64, g_norm: f64, mut apply: F)
where
    F: FnMut(&[Complex64], &mut [Complex64]),
{
    if h_total == 0.0 {
        return;
    }
    let steps = ((h_total.abs() * g_norm) / STEP_NORM).ceil().max(1.0) as usize;
    let h = h_total / steps as f64;
    let mut term = psi.to_vec();
    let mut next = vec![Complex64::new(0.0, 0.0); psi.len()];
    for _ in 0..steps {
        term.copy_from_slice(psi);
        for j in 1..200 {
            apply(&term, &mut next);
            let scale = h / j as f64;
            let mut term_norm = 0.0;
            for (t, nx) in term.iter_mut().zip(&next) {
                *t = nx * scale;
                term_norm += t.norm_sqr();
            }
            for (p, t) in psi.iter_mut().zip(&term) {
                *p += t;
            }
            if term_norm < 1e-36 {
                break;
            }
        }
    }
}

/// Two coherent inputs of quadrature mean `d` (amplitude `d/2`) evolved under
/// `exp[r(a₁†a₂† − a₁a₂)]`.
pub fn build_tmsc(r: f64, d: f64, n_max: usize) -> Result<FockState2> {
    if !r.is_finite() || !d.is_finite() || d < 0.0 {
        return Err(Error::domain(format!(
            "invalid squeezing {r} or displacement {d}"
        )));
    }
    let tail = truncation_tail(r, d, n_max);
    if tail > TAIL_BUDGET {
        return Err(Error::TruncationBudget {
            tail,
            budget: TAIL_BUDGET,
            suggested: required_cutoff(r, d, TAIL_BUDGET),
        });
    }
    let mut state = FockState2::coherent(0.5 * d, 0.5 * d, n_max);
    let dim = state.dim();
    let g_norm = 2.0 * dim as f64;
    taylor_propagate(&mut state.amps, r, g_norm, |psi, out| {
        for n1 in 0..dim {
            for n2 in 0..dim {
                let mut acc = Complex64::new(0.0, 0.0);
                if n1 > 0 && n2 > 0 {
                    acc += psi[(n1 - 1) * dim + n2 - 1] * ((n1 * n2) as f64).sqrt();
                }
                if n1 + 1 < dim && n2 + 1 < dim {
                    acc -= psi[(n1 + 1) * dim + n2 + 1] * (((n1 + 1) * (n2 + 1)) as f64).sqrt();
                }
                out[n1 * dim + n2] = acc;
            }
        }
    });
    Ok(state)
}

/// Beam splitter `exp[θ(a₂†a₃ − a₂a₃†)]`, `T_S = cos²θ`, acting on mode 2 and
/// a vacuum ancilla. Within the sector of `N` total photons the ancilla
/// outcome `k` has amplitude `c(N, k) = ⟨N−k, k|U|N, 0⟩`.
#[derive(Debug, Clone)]
pub struct Subtractor {
    t_s: f64,
    /// `sectors[N][k] = c(N, k)`.
    sectors: Vec<Vec<Complex64>>,
}

impl Subtractor {
    pub fn new(t_s: f64, n_max: usize) -> Result<Self> {
        if !(0.0..=1.0).contains(&t_s) {
            return Err(Error::domain(format!(
                "transmissivity {t_s} outside [0, 1]"
            )));
        }
        let theta = t_s.sqrt().acos();
        let sectors = (0..=n_max)
            .map(|n| {
                let mut v = vec![Complex64::new(0.0, 0.0); n + 1];
                v[0] = Complex64::new(1.0, 0.0);
                // Basis |N−k, k⟩ indexed by k. a₂†a₃ moves k → k−1 with
                // √((N−k+1)k); a₂a₃† moves k → k+1 with √((N−k)(k+1)).
                taylor_propagate(&mut v, theta, 2.0 * (n + 1) as f64, |psi, out| {
                    for k in 0..=n {
                        let mut acc = Complex64::new(0.0, 0.0);
                        if k < n {
                            acc += psi[k + 1] * (((n - k) * (k + 1)) as f64).sqrt();
                        }
                        if k > 0 {
                            acc -= psi[k - 1] * (((n - k + 1) * k) as f64).sqrt();
                        }
                        out[k] = acc;
                    }
                });
                v
            })
            .collect();
        Ok(Self { t_s, sectors })
    }

    pub fn transmissivity(&self) -> f64 {
        self.t_s
    }

    pub fn coefficient(&self, total: usize, k: usize) -> Complex64 {
        self.sectors[total][k]
    }

    /// Largest deviation of `Σ_k |c(N, k)|²` from 1 over all sectors.
    pub fn unitarity_defect(&self) -> f64 {
        self.sectors
            .iter()
            .map(|s| (s.iter().map(|c| c.norm_sqr()).sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// Unnormalized post-selected state for ancilla outcome `k`.
    fn project(&self, state: &FockState2, k: usize) -> FockState2 {
        let dim = state.dim();
        let mut out = FockState2 {
            n_max: state.n_max,
            amps: vec![Complex64::new(0.0, 0.0); dim * dim],
        };
        if k >= dim || self.sectors.len() < dim {
            return out;
        }
        for n1 in 0..dim {
            for total in k..dim {
                let m = total - k;
                out.amps[n1 * dim + m] = state.amps[n1 * dim + total] * self.sectors[total][k];
            }
        }
        out
    }

    /// Born probabilities of every ancilla outcome `0..=n_max`.
    pub fn outcome_probabilities(&self, state: &FockState2) -> Vec<f64> {
        (0..state.dim())
            .map(|k| self.project(state, k).norm_sqr())
            .collect()
    }

    /// Heralds `k` photons: returns the probability and the normalized state.
    pub fn apply(&self, state: &FockState2, k: usize) -> Result<(f64, FockState2)> {
        let mut out = self.project(state, k);
        let prob = out.norm_sqr();
        if !(prob > 1e-300) {
            return Err(Error::Underflow(format!(
                "heralding {k} photons at T_S = {} has probability {prob:.3e}",
                self.t_s
            )));
        }
        let scale = prob.sqrt().recip();
        for a in &mut out.amps {
            *a *= scale;
        }
        Ok((prob, out))
    }
}

/// Mixes mode 2 with a vacuum ancilla and keeps the `k`-photon outcome.
pub fn subtract_photons(state: &FockState2, t_s: f64, k: usize) -> Result<(f64, FockState2)> {
    if k >= 1 && t_s >= 1.0 {
        return Err(Error::ImpossibleHeralding(format!(
            "cannot herald {k} photons at T_S = 1"
        )));
    }
    Subtractor::new(t_s, state.n_max)?.apply(state, k)
}

/// Ladder-operator expectation values of a normalized two-mode state.
struct Ladder {
    a: [Complex64; 2],
    a_sq: [Complex64; 2],
    n: [f64; 2],
    a1a2: Complex64,
    a1d_a2: Complex64,
}

fn ladder_expectations(state: &FockState2) -> Ladder {
    let dim = state.dim();
    let psi = |n1: usize, n2: usize| state.amps[n1 * dim + n2];
    let zero = Complex64::new(0.0, 0.0);
    let mut l = Ladder {
        a: [zero; 2],
        a_sq: [zero; 2],
        n: [0.0; 2],
        a1a2: zero,
        a1d_a2: zero,
    };
    for n1 in 0..dim {
        for n2 in 0..dim {
            let c = psi(n1, n2).conj();
            let (f1, f2) = ((n1 + 1) as f64, (n2 + 1) as f64);
            let w = psi(n1, n2).norm_sqr();
            l.n[0] += n1 as f64 * w;
            l.n[1] += n2 as f64 * w;
            if n1 + 1 < dim {
                l.a[0] += c * psi(n1 + 1, n2) * f1.sqrt();
            }
            if n2 + 1 < dim {
                l.a[1] += c * psi(n1, n2 + 1) * f2.sqrt();
            }
            if n1 + 2 < dim {
                l.a_sq[0] += c * psi(n1 + 2, n2) * (f1 * (f1 + 1.0)).sqrt();
            }
            if n2 + 2 < dim {
                l.a_sq[1] += c * psi(n1, n2 + 2) * (f2 * (f2 + 1.0)).sqrt();
            }
            if n1 + 1 < dim && n2 + 1 < dim {
                l.a1a2 += c * psi(n1 + 1, n2 + 1) * (f1 * f2).sqrt();
            }
            // ⟨n₁+1, n₂−1| a₁†a₂ |n₁, n₂⟩ = √((n₁+1) n₂)
            if n1 + 1 < dim && n2 >= 1 {
                l.a1d_a2 += psi(n1 + 1, n2 - 1).conj() * psi(n1, n2) * (f1 * n2 as f64).sqrt();
            }
        }
    }
    l
}

/// Quadrature means and full symmetrized covariance matrix of a normalized
/// two-mode state, with `q = a + a†`, `p = −i(a − a†)`.
pub fn oracle_covariance(state: &FockState2) -> (QuadVector, CovMatrix) {
    let l = ladder_expectations(state);
    let mean = [
        2.0 * l.a[0].re,
        2.0 * l.a[0].im,
        2.0 * l.a[1].re,
        2.0 * l.a[1].im,
    ];
    let mut m = nalgebra::DMatrix::zeros(4, 4);
    for i in 0..2 {
        let (q, p) = (2 * i, 2 * i + 1);
        m[(q, q)] = 2.0 * l.a_sq[i].re + 2.0 * l.n[i] + 1.0;
        m[(p, p)] = -2.0 * l.a_sq[i].re + 2.0 * l.n[i] + 1.0;
        m[(q, p)] = 2.0 * l.a_sq[i].im;
        m[(p, q)] = m[(q, p)];
    }
    let q1q2 = 2.0 * l.a1a2.re + 2.0 * l.a1d_a2.re;
    let p1p2 = -2.0 * l.a1a2.re + 2.0 * l.a1d_a2.re;
    let q1p2 = 2.0 * l.a1a2.im + 2.0 * l.a1d_a2.im;
    let p1q2 = 2.0 * l.a1a2.im - 2.0 * l.a1d_a2.im;
    for (i, j, v) in [(0, 2, q1q2), (1, 3, p1p2), (0, 3, q1p2), (1, 2, p1q2)] {
        m[(i, j)] = v;
        m[(j, i)] = v;
    }
    for i in 0..4 {
        for j in 0..4 {
            m[(i, j)] -= mean[i] * mean[j];
        }
    }
    let cov = CovMatrix::new(m).expect("constructed symmetric");
    let mean = QuadVector::new(mean.to_vec()).expect("two modes");
    (mean, cov)
}

/// Diagonal-block moments of a normalized state. `herald_prob` is set to 1;
/// callers that post-selected fill in the probability.
pub fn oracle_moments(state: &FockState2) -> TwoModeCM {
    let (mean, cov) = oracle_covariance(state);
    let (m, v) = (mean.as_vector(), cov.as_matrix());
    TwoModeCM {
        vq_a: v[(0, 0)],
        vp_a: v[(1, 1)],
        vq_b: v[(2, 2)],
        vp_b: v[(3, 3)],
        vq_c: v[(0, 2)],
        vp_c: v[(1, 3)],
        mean_q1: m[0],
        mean_q2: m[2],
        herald_prob: 1.0,
    }
}

/// Cutoff used for a parameter point: the floor, raised until the tail is
/// below `tail`.
pub fn cutoff_for(params: &ResourceParams, tail: f64) -> usize {
    required_cutoff(params.squeezing(), params.displacement, tail)
}

/// Oracle moments and heralding probability of a k-PSTMSC state.
pub fn oracle_state(params: &ResourceParams, n_max: usize) -> Result<TwoModeCM> {
    let tmsc = build_tmsc(params.squeezing(), params.displacement, n_max)?;
    let (prob, out) = subtract_photons(&tmsc, params.transmissivity, params.photons as usize)?;
    Ok(TwoModeCM {
        herald_prob: prob,
        ..oracle_moments(&out)
    })
}

/// Comparison of a closed-form state against the oracle at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleComparison {
    pub params: ResourceParams,
    pub cutoff: usize,
    pub closed: std::result::Result<TwoModeCM, Error>,
    pub oracle: TwoModeCM,
    /// `|P − P_oracle| / P_oracle`.
    pub prob_error: f64,
    /// Largest `|m − m_oracle| / max(|m_oracle|, 1)` over the eight moments.
    pub moment_error: f64,
}

impl OracleComparison {
    pub fn max_error(&self) -> f64 {
        self.prob_error.max(self.moment_error)
    }

    pub fn passes(&self, tol: f64) -> bool {
        self.closed.is_ok() && self.max_error() <= tol
    }
}

fn compare(closed: &TwoModeCM, oracle: &TwoModeCM) -> (f64, f64) {
    let prob_error = (closed.herald_prob - oracle.herald_prob).abs() / oracle.herald_prob;
    let pairs = [
        (closed.vq_a, oracle.vq_a),
        (closed.vp_a, oracle.vp_a),
        (closed.vq_b, oracle.vq_b),
        (closed.vp_b, oracle.vp_b),
        (closed.vq_c, oracle.vq_c),
        (closed.vp_c, oracle.vp_c),
        (closed.mean_q1, oracle.mean_q1),
        (closed.mean_q2, oracle.mean_q2),
    ];
    let moment_error = pairs
        .iter()
        .map(|(a, b)| (a - b).abs() / b.abs().max(1.0))
        .fold(0.0, f64::max);
    (prob_error, moment_error)
}

/// Compares `closed` against the oracle over `points`.
///
/// Points sharing `(V, d)` reuse one squeezed state, and points sharing
/// `T_S` reuse one beam splitter. Each group's cutoff is raised from
/// [`DEFAULT_CUTOFF`] until the truncation tail is below `tail`. Output order
/// follows `points`.
pub fn validate_grid<F>(
    points: &[ResourceParams],
    tail: f64,
    closed: F,
) -> Result<Vec<OracleComparison>>
where
    F: Fn(&ResourceParams) -> Result<TwoModeCM> + Sync,
{
    let mut groups: Vec<(f64, f64, Vec<usize>)> = Vec::new();
    for (i, p) in points.iter().enumerate() {
        match groups
            .iter_mut()
            .find(|g| g.0 == p.variance && g.1 == p.displacement)
        {
            Some(g) => g.2.push(i),
            None => groups.push((p.variance, p.displacement, vec![i])),
        }
    }

    let per_group: Vec<Result<Vec<(usize, OracleComparison)>>> = groups
        .par_iter()
        .map(|(_, _, members)| {
            let first = &points[members[0]];
            let cutoff = cutoff_for(first, tail);
            let tmsc = build_tmsc(first.squeezing(), first.displacement, cutoff)?;
            let mut splitters: Vec<Subtractor> = Vec::new();
            let mut out = Vec::with_capacity(members.len());
            for &i in members {
                let p = &points[i];
                let pos = match splitters
                    .iter()
                    .position(|s| s.transmissivity() == p.transmissivity)
                {
                    Some(pos) => pos,
                    None => {
                        splitters.push(Subtractor::new(p.transmissivity, cutoff)?);
                        splitters.len() - 1
                    }
                };
                let (prob, state) = splitters[pos].apply(&tmsc, p.photons as usize)?;
                let oracle = TwoModeCM {
                    herald_prob: prob,
                    ..oracle_moments(&state)
                };
                let closed = closed(p);
                let (prob_error, moment_error) = match &closed {
                    Ok(c) => compare(c, &oracle),
                    Err(_) => (f64::INFINITY, f64::INFINITY),
                };
                out.push((
                    i,
                    OracleComparison {
                        params: *p,
                        cutoff,
                        closed,
                        oracle,
                        prob_error,
                        moment_error,
                    },
                ));
            }
            Ok(out)
        })
        .collect();

    let mut slots: Vec<Option<OracleComparison>> = vec![None; points.len()];
    for group in per_group {
        for (i, c) in group? {
            slots[i] = Some(c);
        }
    }
    Ok(slots
        .into_iter()
        .map(|c| c.expect("every point assigned"))
        .collect())
}
