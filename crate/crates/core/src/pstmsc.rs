//! Closed-form heralding probability and covariance matrix of the
//! k-photon-subtracted two-mode squeezed coherent (k-PSTMSC) state.
//!
//! Two coherent states of quadrature mean `(d, 0)` pass through a two-mode
//! squeezer of strength `r` (`V = cosh 2r`). Mode 2 is then mixed with a vacuum
//! ancilla on a beam splitter of transmissivity `T_S` and the ancilla is
//! projected onto `|k⟩`. The normalized state's characteristic function has
//! the form
//!
//! ```text
//! 2 z₁ z₂ᵏ exp[x₁(|Λ₁|²+|Λ₂|²) + x₂(σ₁σ₂ − τ₁τ₂) + x₃σ₁ + x₄σ₂ + x₅]
//!   × L_k[y₁|Λ₁|² + y₂|Λ₂|² + y₃(σ₁σ₂ − τ₁τ₂) + y₄σ₁ + y₅σ₂ + y₆]
//! ```
//!
//! from which the heralding probability (`Λ = 0`) and all first and second
//! moments follow by differentiation. The squeezer acts with `e^{+r}` on the
//! displacement: after squeezing, both q-means equal `d·e^{r}`.
//!
//! Everything is evaluated through `z₂ⁿ L_n^m(y₆)` in the regularized form of
//! [`scaled_laguerre`], since `y₄ ∝ 1/α` and `y₆ ∝ 1/α²` diverge as `r → 0`
//! while the moments stay finite.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::laguerre::scaled_laguerre;
use crate::phase_space::{CovMatrix, PHYSICAL_TOL};

/// Parameters of the (photon-subtracted) two-mode squeezed coherent resource.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResourceParams {
    /// `V = cosh 2r ≥ 1`.
    pub variance: f64,
    /// Quadrature displacement `d ≥ 0` of each coherent input, along q.
    pub displacement: f64,
    /// Subtraction beam-splitter transmissivity `T_S ∈ [0, 1]`.
    pub transmissivity: f64,
    /// Number of heralded photons `k`.
    pub photons: u32,
}

impl ResourceParams {
    pub fn new(
        variance: f64,
        displacement: f64,
        transmissivity: f64,
        photons: u32,
    ) -> Result<Self> {
        if !(variance >= 1.0) || !variance.is_finite() {
            return Err(Error::domain(format!(
                "variance {variance} must be finite and >= 1"
            )));
        }
        if !(displacement >= 0.0) || !displacement.is_finite() {
            return Err(Error::domain(format!(
                "displacement {displacement} must be finite and >= 0"
            )));
        }
        if !(0.0..=1.0).contains(&transmissivity) {
            return Err(Error::domain(format!(
                "transmissivity {transmissivity} outside [0, 1]"
            )));
        }
        Ok(Self {
            variance,
            displacement,
            transmissivity,
            photons,
        })
    }

    /// Squeezing parameter `r = arccosh(V)/2`.
    pub fn squeezing(&self) -> f64 {
        0.5 * self.variance.acosh()
    }
}

/// Coefficients of the characteristic function of the k-PSTMSC state.
///
/// `x₃, x₄, y₄, y₅` are purely imaginary; the fields hold their imaginary
/// parts. `y₄` and `y₆` are infinite when `r = 0` and `d > 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoeffBlock {
    pub x1: f64,
    pub x2: f64,
    pub x3: f64,
    pub x4: f64,
    pub x5: f64,
    pub y1: f64,
    pub y2: f64,
    pub y3: f64,
    pub y4: f64,
    pub y5: f64,
    pub y6: f64,
    pub z1: f64,
    pub z2: f64,
}

pub fn coeff_block(params: &ResourceParams) -> CoeffBlock {
    let r = params.squeezing();
    let (alpha, beta, er) = (r.sinh(), r.cosh(), r.exp());
    let t = params.transmissivity;
    let st = t.sqrt();
    let d = params.displacement;

    let z1 = 0.5 / (beta * beta - alpha * alpha * t);
    let z2 = 2.0 * z1 * alpha * alpha * (1.0 - t);

    let (y4, y6) = if d == 0.0 {
        (0.0, 0.0)
    } else if alpha == 0.0 {
        (f64::NEG_INFINITY, f64::NEG_INFINITY)
    } else {
        (
            -2.0 * z1 * d * beta * er / alpha,
            -z1 * d * d * er * er / (2.0 * alpha * alpha),
        )
    };

    CoeffBlock {
        x1: -z1 * (alpha * alpha * t + beta * beta),
        x2: -4.0 * z1 * st * alpha * beta,
        x3: 2.0 * z1 * d * (beta + alpha * t),
        x4: 2.0 * z1 * st * d * er,
        x5: 0.5 * z1 * (t - 1.0) * d * d * er * er,
        y1: 2.0 * z1 * beta * beta,
        y2: 2.0 * z1 * t * alpha * alpha,
        y3: 4.0 * z1 * st * alpha * beta,
        y4,
        y5: -2.0 * z1 * st * d * er,
        y6,
        z1,
        z2,
    }
}

/// The `y` coefficients multiplied by `z₂`, plus `w = −z₂·y₆`; all finite.
struct ScaledY {
    y1: f64,
    y2: f64,
    y3: f64,
    y4: f64,
    y5: f64,
    w: f64,
}

fn scaled_y(params: &ResourceParams, z1: f64) -> ScaledY {
    let r = params.squeezing();
    let (alpha, beta, er) = (r.sinh(), r.cosh(), r.exp());
    let t = params.transmissivity;
    let st = t.sqrt();
    let d = params.displacement;
    let c = z1 * z1 * (1.0 - t);
    ScaledY {
        y1: 4.0 * c * alpha * alpha * beta * beta,
        y2: 4.0 * c * t * alpha.powi(4),
        y3: 8.0 * c * st * alpha.powi(3) * beta,
        y4: -4.0 * c * d * beta * er * alpha,
        y5: -4.0 * c * st * d * er * alpha * alpha,
        w: c * d * d * er * er,
    }
}

/// Probability `P = 2 z₁ z₂ᵏ exp(x₅) L_k(y₆)` of heralding `k` photons.
pub fn herald_probability(params: &ResourceParams) -> f64 {
    let c = coeff_block(params);
    let s = scaled_y(params, c.z1);
    let p = 2.0 * c.z1 * c.x5.exp() * scaled_laguerre(params.photons.into(), 0, c.z2, s.w);
    p.clamp(0.0, 1.0)
}

/// Diagonal-block covariance matrix of a two-mode state with no q–p
/// correlations, plus its q-means and heralding probability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoModeCM {
    pub vq_a: f64,
    pub vp_a: f64,
    pub vq_b: f64,
    pub vp_b: f64,
    pub vq_c: f64,
    pub vp_c: f64,
    pub mean_q1: f64,
    pub mean_q2: f64,
    pub herald_prob: f64,
}

impl TwoModeCM {
    /// Two-mode squeezed vacuum of variance `v`.
    pub fn tmsv(v: f64) -> Self {
        let c = (v * v - 1.0).max(0.0).sqrt();
        Self {
            vq_a: v,
            vp_a: v,
            vq_b: v,
            vp_b: v,
            vq_c: c,
            vp_c: -c,
            mean_q1: 0.0,
            mean_q2: 0.0,
            herald_prob: 1.0,
        }
    }

    pub fn to_matrix(&self) -> DMatrix<f64> {
        #[rustfmt::skip]
        let m = DMatrix::from_row_slice(4, 4, &[
            self.vq_a, 0.0, self.vq_c, 0.0,
            0.0, self.vp_a, 0.0, self.vp_c,
            self.vq_c, 0.0, self.vq_b, 0.0,
            0.0, self.vp_c, 0.0, self.vp_b,
        ]);
        m
    }

    pub fn cov_matrix(&self) -> CovMatrix {
        CovMatrix::new(self.to_matrix()).expect("block form is symmetric by construction")
    }

    /// Both symplectic eigenvalues, larger first.
    pub fn symplectic_eigenvalues(&self) -> Result<(f64, f64)> {
        block_spectrum(
            (self.vq_a, self.vp_a),
            (self.vq_b, self.vp_b),
            (self.vq_c, self.vp_c),
        )
    }
}

/// Symplectic eigenvalues of
/// `[[δ₁,0,κ₁,0],[0,δ₂,0,κ₂],[κ₁,0,μ₁,0],[0,κ₂,0,μ₂]]`, larger first.
///
/// Their squares are the eigenvalues of `Vq·Vp` with `Vq = [[δ₁,κ₁],[κ₁,μ₁]]`
/// and `Vp = [[δ₂,κ₂],[κ₂,μ₂]]`. These are taken from the symmetric matrix
/// `Vp^½ Vq Vp^½`, whose discriminant is a sum of squares, so the result is
/// well conditioned at degenerate (pure) spectra.
pub fn block_spectrum(delta: (f64, f64), mu: (f64, f64), kappa: (f64, f64)) -> Result<(f64, f64)> {
    let (a, b, c) = (delta.1, kappa.1, mu.1);
    let det_p = a * c - b * b;
    let det_q = delta.0 * mu.0 - kappa.0 * kappa.0;
    let y = det_q * det_p;
    let (hi2, lo2) = if det_p > 0.0 && a + c > 0.0 {
        // Square root of a 2×2 positive-definite matrix.
        let sd = det_p.sqrt();
        let norm = (a + c + 2.0 * sd).sqrt();
        let (s11, s12, s22) = ((a + sd) / norm, b / norm, (c + sd) / norm);
        let (q11, q12, q22) = (delta.0, kappa.0, mu.0);
        let m11 = s11 * (q11 * s11 + q12 * s12) + s12 * (q12 * s11 + q22 * s12);
        let m12 = s11 * (q11 * s12 + q12 * s22) + s12 * (q12 * s12 + q22 * s22);
        let m22 = s12 * (q11 * s12 + q12 * s22) + s22 * (q12 * s12 + q22 * s22);
        let half_tr = 0.5 * (m11 + m22);
        let radius = (0.5 * (m11 - m22)).hypot(m12);
        let hi2 = half_tr + radius;
        let lo2 = if y > 0.0 && hi2 > 0.0 {
            y / hi2
        } else {
            half_tr - radius
        };
        (hi2, lo2)
    } else {
        let x = delta.0 * delta.1 + mu.0 * mu.1 + 2.0 * kappa.0 * kappa.1;
        let disc = x * x - 4.0 * y;
        if disc < -1e-9 * (x * x).max(1.0) {
            return Err(Error::Numerical(format!(
                "negative discriminant {disc:.3e} in symplectic spectrum"
            )));
        }
        let root = disc.max(0.0).sqrt();
        (0.5 * (x + root), 0.5 * (x - root))
    };
    let (hi, lo) = (hi2.max(0.0).sqrt(), lo2.max(0.0).sqrt());
    if !hi.is_finite() || !lo.is_finite() {
        return Err(Error::Numerical("non-finite symplectic eigenvalue".into()));
    }
    Ok((hi, lo))
}

/// First and second moments of the k-PSTMSC state assembled into its
/// covariance matrix.
pub fn pstmsc_moments(params: &ResourceParams) -> Result<TwoModeCM> {
    let c = coeff_block(params);
    let s = scaled_y(params, c.z1);
    let k = i64::from(params.photons);

    let s0 = scaled_laguerre(k, 0, c.z2, s.w);
    let prob = 2.0 * c.z1 * c.x5.exp() * s0;
    if !(s0 > 0.0) || !(prob > 0.0) {
        return Err(Error::ImpossibleHeralding(format!(
            "{k}-photon subtraction has zero probability at V={}, d={}, T_S={}",
            params.variance, params.displacement, params.transmissivity
        )));
    }
    // L_{k-1}^1 / L_k and L_{k-2}^2 / L_k, each carrying the z₂ powers that
    // make the scaled y's finite.
    let rho1 = scaled_laguerre(k - 1, 1, c.z2, s.w) / s0;
    let rho2 = scaled_laguerre(k - 2, 2, c.z2, s.w) / s0;

    let (a3, a4) = (c.x3, c.x4);
    let mean_q1 = a3 - s.y4 * rho1;
    let mean_q2 = a4 - s.y5 * rho1;
    let q1sq = a3 * a3 - 2.0 * c.x1 + 2.0 * (s.y1 - a3 * s.y4) * rho1 + s.y4 * s.y4 * rho2;
    let q2sq = a4 * a4 - 2.0 * c.x1 + 2.0 * (s.y2 - a4 * s.y5) * rho1 + s.y5 * s.y5 * rho2;
    let p1sq = -2.0 * c.x1 + 2.0 * s.y1 * rho1;
    let p2sq = -2.0 * c.x1 + 2.0 * s.y2 * rho1;
    let q1q2 = -c.x2 + a3 * a4 + (s.y3 - a4 * s.y4 - a3 * s.y5) * rho1 + s.y4 * s.y5 * rho2;
    let p1p2 = c.x2 - s.y3 * rho1;

    let cm = TwoModeCM {
        vq_a: q1sq - mean_q1 * mean_q1,
        vp_a: p1sq,
        vq_b: q2sq - mean_q2 * mean_q2,
        vp_b: p2sq,
        vq_c: q1q2 - mean_q1 * mean_q2,
        vp_c: p1p2,
        mean_q1,
        mean_q2,
        herald_prob: prob.min(1.0),
    };
    check_physical(&cm)?;
    Ok(cm)
}

fn check_physical(cm: &TwoModeCM) -> Result<()> {
    let (_, low) = cm.symplectic_eigenvalues()?;
    if low < 1.0 - PHYSICAL_TOL || !(cm.vp_a > 0.0) || !(cm.vp_b > 0.0) {
        return Err(Error::unphysical(format!(
            "closed-form covariance matrix has symplectic eigenvalue {low}"
        )));
    }
    Ok(())
}

/// Named members of the PSTMSC family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum StateKind {
    Tmsv,
    Tmsc,
    Pstmsv(u32),
    Pstmsc(u32),
}

impl StateKind {
    pub fn photons(&self) -> u32 {
        match *self {
            StateKind::Tmsv | StateKind::Tmsc => 0,
            StateKind::Pstmsv(k) | StateKind::Pstmsc(k) => k,
        }
    }

    pub fn uses_displacement(&self) -> bool {
        matches!(self, StateKind::Tmsc | StateKind::Pstmsc(_))
    }

    pub fn uses_transmissivity(&self) -> bool {
        matches!(self, StateKind::Pstmsv(_) | StateKind::Pstmsc(_))
    }

    /// Consistent parameters for this kind; arguments the kind does not use
    /// are overridden (`d = 0` for vacuum kinds, `T_S = 1` for Gaussian kinds).
    pub fn params(
        &self,
        variance: f64,
        displacement: f64,
        transmissivity: f64,
    ) -> Result<ResourceParams> {
        let d = if self.uses_displacement() {
            displacement
        } else {
            0.0
        };
        let t = if self.uses_transmissivity() {
            transmissivity
        } else {
            1.0
        };
        ResourceParams::new(variance, d, t, self.photons())
    }

    fn check(&self, p: &ResourceParams) -> Result<()> {
        let fail = |why: &str| Err(Error::validation(format!("{self}: {why}")));
        match *self {
            StateKind::Tmsv | StateKind::Tmsc => {
                if p.photons != 0 || p.transmissivity != 1.0 {
                    return fail("requires k = 0 and T_S = 1");
                }
                if *self == StateKind::Tmsv && p.displacement != 0.0 {
                    return fail("requires d = 0");
                }
            }
            StateKind::Pstmsv(k) | StateKind::Pstmsc(k) => {
                if k == 0 {
                    return fail("needs at least one subtracted photon");
                }
                if p.photons != k {
                    return fail("photon number does not match the kind");
                }
                if matches!(self, StateKind::Pstmsv(_)) && p.displacement != 0.0 {
                    return fail("requires d = 0");
                }
            }
        }
        Ok(())
    }
}

impl fmt::Display for StateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StateKind::Tmsv => write!(f, "TMSV"),
            StateKind::Tmsc => write!(f, "TMSC"),
            StateKind::Pstmsv(k) => write!(f, "{k}-PSTMSV"),
            StateKind::Pstmsc(k) => write!(f, "{k}-PSTMSC"),
        }
    }
}

impl FromStr for StateKind {
    type Err = Error;

    /// Accepts `TMSV`, `TMSC`, `k-PSTMSV`, `k-PSTMSC` (case-insensitive).
    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        match lower.as_str() {
            "tmsv" => return Ok(StateKind::Tmsv),
            "tmsc" => return Ok(StateKind::Tmsc),
            _ => {}
        }
        let bad = || Error::validation(format!("unknown state '{s}'"));
        let (k, family) = lower.split_once('-').ok_or_else(bad)?;
        let k: u32 = k.parse().map_err(|_| bad())?;
        if k == 0 {
            return Err(bad());
        }
        match family {
            "pstmsv" => Ok(StateKind::Pstmsv(k)),
            "pstmsc" => Ok(StateKind::Pstmsc(k)),
            _ => Err(bad()),
        }
    }
}

/// Covariance matrix of a named family member. Gaussian kinds take the exact
/// `T_S = 1`, `k = 0` form.
pub fn special_state(kind: StateKind, params: &ResourceParams) -> Result<TwoModeCM> {
    kind.check(params)?;
    match kind {
        StateKind::Tmsv | StateKind::Tmsc => {
            let mut cm = TwoModeCM::tmsv(params.variance);
            let shift = params.displacement * params.squeezing().exp();
            cm.mean_q1 = shift;
            cm.mean_q2 = shift;
            Ok(cm)
        }
        StateKind::Pstmsv(_) | StateKind::Pstmsc(_) => pstmsc_moments(params),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn p(v: f64, d: f64, t: f64, k: u32) -> ResourceParams {
        ResourceParams::new(v, d, t, k).unwrap()
    }

    #[test]
    fn params_validation() {
        assert!(ResourceParams::new(0.5, 0.0, 1.0, 0).is_err());
        assert!(ResourceParams::new(2.0, -1.0, 1.0, 0).is_err());
        assert!(ResourceParams::new(2.0, 0.0, 1.5, 0).is_err());
        assert!(ResourceParams::new(f64::NAN, 0.0, 0.5, 0).is_err());
        assert_eq!(p(1.0, 0.0, 1.0, 0).squeezing(), 0.0);
    }

    #[test]
    fn coefficients_without_squeezing() {
        let c = coeff_block(&p(1.0, 0.7, 0.6, 1));
        assert_relative_eq!(c.z1, 0.5);
        assert_eq!(c.z2, 0.0);
        assert_relative_eq!(c.x1, -0.5);
        assert_eq!(c.x2, 0.0);
        assert_relative_eq!(c.x3, 0.7);
        assert_relative_eq!(c.y1, 1.0);
        assert_eq!(c.y2, 0.0);
        assert_eq!(c.y3, 0.0);
        assert_eq!(c.y6, f64::NEG_INFINITY);
    }

    #[test]
    fn displacement_free_coefficients_vanish() {
        let c = coeff_block(&p(5.0, 0.0, 0.8, 2));
        for v in [c.x3, c.x4, c.x5, c.y4, c.y5, c.y6] {
            assert_eq!(v, 0.0);
        }
    }

    #[test]
    fn z_bounds() {
        for &v in &[1.0, 2.0, 15.0] {
            for &t in &[0.0, 0.3, 0.8, 1.0] {
                let c = coeff_block(&p(v, 1.0, t, 1));
                assert!(c.z1 > 0.0);
                assert!((0.0..1.0).contains(&c.z2));
            }
        }
    }

    #[test]
    fn gaussian_limit_probability_is_one() {
        for &d in &[0.0, 1.0, 4.0] {
            assert_relative_eq!(herald_probability(&p(7.0, d, 1.0, 0)), 1.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn vacuum_probability_closed_form() {
        for k in 0..5u32 {
            for &(v, t) in &[(3.0, 0.5), (10.0, 0.9), (1.5, 0.2)] {
                let r = 0.5 * f64::acosh(v);
                let (a2, b2) = (r.sinh().powi(2), r.cosh().powi(2));
                let expected = (a2 * (1.0 - t)).powi(k as i32) / (b2 - a2 * t).powi(k as i32 + 1);
                assert_relative_eq!(
                    herald_probability(&p(v, 0.0, t, k)),
                    expected,
                    max_relative = 1e-12
                );
            }
        }
    }

    #[test]
    fn coherent_input_subtraction_is_poissonian() {
        // No squeezing: the ancilla sees a coherent state of amplitude
        // √(1−T_S)·d/2, so P(k) is Poisson.
        let (d, t) = (1.6_f64, 0.7);
        let mean = (1.0 - t) * d * d / 4.0;
        let mut fact = 1.0;
        for k in 0..5u32 {
            if k > 0 {
                fact *= f64::from(k);
            }
            let expected = (-mean).exp() * mean.powi(k as i32) / fact;
            assert_relative_eq!(
                herald_probability(&p(1.0, d, t, k)),
                expected,
                max_relative = 1e-12
            );
        }
    }

    #[test]
    fn tmsv_limit_of_moments() {
        let cm = pstmsc_moments(&p(9.0, 0.0, 1.0, 0)).unwrap();
        let s = (81.0_f64 - 1.0).sqrt();
        assert_relative_eq!(cm.vq_a, 9.0, epsilon = 1e-12);
        assert_relative_eq!(cm.vp_b, 9.0, epsilon = 1e-12);
        assert_relative_eq!(cm.vq_c, s, epsilon = 1e-12);
        assert_relative_eq!(cm.vp_c, -s, epsilon = 1e-12);
        assert_relative_eq!(cm.herald_prob, 1.0, epsilon = 1e-14);
    }

    #[test]
    fn displaced_gaussian_limit_means() {
        let params = p(5.0, 2.0, 1.0, 0);
        let cm = pstmsc_moments(&params).unwrap();
        let shift = 2.0 * params.squeezing().exp();
        assert_relative_eq!(cm.mean_q1, shift, epsilon = 1e-12);
        assert_relative_eq!(cm.mean_q2, shift, epsilon = 1e-12);
        assert_relative_eq!(cm.vq_a, 5.0, epsilon = 1e-12);
    }

    #[test]
    fn zero_displacement_zero_means() {
        for k in 0..5 {
            let cm = pstmsc_moments(&p(6.0, 0.0, 0.75, k)).unwrap();
            assert_eq!(cm.mean_q1, 0.0);
            assert_eq!(cm.mean_q2, 0.0);
        }
    }

    #[test]
    fn impossible_heralding() {
        assert_eq!(herald_probability(&p(5.0, 1.0, 1.0, 2)), 0.0);
        assert!(matches!(
            pstmsc_moments(&p(5.0, 1.0, 1.0, 2)),
            Err(Error::ImpossibleHeralding(_))
        ));
        assert!(matches!(
            pstmsc_moments(&p(1.0, 0.0, 0.5, 1)),
            Err(Error::ImpossibleHeralding(_))
        ));
    }

    #[test]
    fn unsqueezed_coherent_subtraction_is_finite() {
        // Subtracting from a coherent state leaves it coherent.
        let cm = pstmsc_moments(&p(1.0, 2.0, 0.6, 3)).unwrap();
        for v in [cm.vq_a, cm.vp_a, cm.vq_b, cm.vp_b] {
            assert_relative_eq!(v, 1.0, epsilon = 1e-12);
        }
        assert_relative_eq!(cm.vq_c, 0.0, epsilon = 1e-12);
        assert_relative_eq!(cm.mean_q1, 2.0, epsilon = 1e-12);
        assert_relative_eq!(cm.mean_q2, 2.0 * 0.6_f64.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn special_state_kinds() {
        let tmsv = special_state(StateKind::Tmsv, &p(15.0, 0.0, 1.0, 0)).unwrap();
        assert_eq!(tmsv.herald_prob, 1.0);
        let tmsc = special_state(StateKind::Tmsc, &p(5.0, 3.0, 1.0, 0)).unwrap();
        let base = special_state(StateKind::Tmsv, &p(5.0, 0.0, 1.0, 0)).unwrap();
        assert_eq!(tmsc.vq_a, base.vq_a);
        assert_eq!(tmsc.vq_c, base.vq_c);
        let ps = special_state(StateKind::Pstmsv(1), &p(10.0, 0.0, 0.9, 1)).unwrap();
        assert_eq!(ps, pstmsc_moments(&p(10.0, 0.0, 0.9, 1)).unwrap());
    }

    #[test]
    fn special_state_rejects_inconsistent_params() {
        assert!(special_state(StateKind::Tmsv, &p(5.0, 1.0, 1.0, 0)).is_err());
        assert!(special_state(StateKind::Tmsv, &p(5.0, 0.0, 0.5, 0)).is_err());
        assert!(special_state(StateKind::Pstmsv(1), &p(5.0, 1.0, 0.5, 1)).is_err());
        assert!(special_state(StateKind::Pstmsc(2), &p(5.0, 1.0, 0.5, 1)).is_err());
    }

    #[test]
    fn kind_names_round_trip() {
        for kind in [
            StateKind::Tmsv,
            StateKind::Tmsc,
            StateKind::Pstmsv(3),
            StateKind::Pstmsc(1),
        ] {
            assert_eq!(kind.to_string().parse::<StateKind>().unwrap(), kind);
        }
        assert!("0-PSTMSC".parse::<StateKind>().is_err());
        assert!("squeezed".parse::<StateKind>().is_err());
    }

    #[test]
    fn kind_params_override_unused_axes() {
        let params = StateKind::Pstmsv(2).params(10.0, 3.0, 0.7).unwrap();
        assert_eq!(params.displacement, 0.0);
        assert_eq!(params.transmissivity, 0.7);
        let params = StateKind::Tmsv.params(10.0, 3.0, 0.7).unwrap();
        assert_eq!(params.transmissivity, 1.0);
    }

    #[test]
    fn vacuum_heralded_displaced_state_stays_pure() {
        for &(v, d, t) in &[(30.0, 1.0, 0.99), (15.0, 5.0, 0.99), (30.0, 5.0, 0.9)] {
            let cm = pstmsc_moments(&p(v, d, t, 0)).unwrap();
            let (hi, lo) = cm.symplectic_eigenvalues().unwrap();
            assert!(
                (hi - 1.0).abs() < 1e-11 && (lo - 1.0).abs() < 1e-11,
                "{hi} {lo}"
            );
        }
    }

    proptest::proptest! {
        #[test]
        fn block_spectrum_matches_general_spectrum(
            v in 1.0f64..40.0,
            d in 0.0f64..4.0,
            t in 0.05f64..0.99,
            k in 0u32..5,
        ) {
            let cm = pstmsc_moments(&p(v, d, t, k)).unwrap();
            let (hi, lo) = cm.symplectic_eigenvalues().unwrap();
            let mut general = cm.cov_matrix().symplectic_eigenvalues();
            general.sort_by(f64::total_cmp);
            proptest::prop_assert!((lo - general[0]).abs() <= 1e-8 * general[0]);
            proptest::prop_assert!((hi - general[1]).abs() <= 1e-8 * general[1]);
        }
    }
}
