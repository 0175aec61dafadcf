//! Post-swap covariance matrix, mutual information, Holevo bound and the
//! heralded secret key rate.

use serde::{Deserialize, Serialize};

use crate::channel::{total_noise, ChannelConfig, EffectiveChannel};
use crate::error::{Error, Result};
use crate::phase_space::{entropy_g, PHYSICAL_TOL};
use crate::pstmsc::{block_spectrum, pstmsc_moments, ResourceParams, TwoModeCM};

/// Alice–Bob covariance matrix after the swap and Bob's displacement,
/// `[[δ₁,0,κ₁,0],[0,δ₂,0,κ₂],[κ₁,0,μ₁,0],[0,κ₂,0,μ₂]]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SwapCM {
    pub delta1: f64,
    pub delta2: f64,
    pub kappa1: f64,
    pub kappa2: f64,
    pub mu1: f64,
    pub mu2: f64,
}

impl SwapCM {
    pub fn spectrum(&self) -> Result<(f64, f64)> {
        block_spectrum(
            (self.delta1, self.delta2),
            (self.mu1, self.mu2),
            (self.kappa1, self.kappa2),
        )
    }

    /// Alice's variances conditioned on Bob's heterodyne outcome.
    pub fn conditional(&self) -> (f64, f64) {
        (
            self.delta1 - self.kappa1 * self.kappa1 / (self.mu1 + 1.0),
            self.delta2 - self.kappa2 * self.kappa2 / (self.mu2 + 1.0),
        )
    }
}

/// `δ = V_A`, `κ = √T·V_C`, `μ = T(V_B + χ_total)`, per quadrature.
pub fn assemble_swap_cm(cm: &TwoModeCM, chan: &EffectiveChannel) -> Result<SwapCM> {
    let t = chan.t_eff;
    let swap = SwapCM {
        delta1: cm.vq_a,
        delta2: cm.vp_a,
        kappa1: t.sqrt() * cm.vq_c,
        kappa2: t.sqrt() * cm.vp_c,
        mu1: t * (cm.vq_b + chan.chi_total),
        mu2: t * (cm.vp_b + chan.chi_total),
    };
    let y = (swap.delta1 * swap.mu1 - swap.kappa1.powi(2))
        * (swap.delta2 * swap.mu2 - swap.kappa2.powi(2));
    let (_, low) = swap.spectrum()?;
    if low < 1.0 - PHYSICAL_TOL || y < 0.0 {
        return Err(Error::unphysical(format!(
            "swapped covariance matrix has symplectic eigenvalue {low}"
        )));
    }
    Ok(swap)
}

/// Mutual information for Bob's heterodyne detection, bits per use.
pub fn mutual_information(cm: &SwapCM) -> Result<f64> {
    let (c1, c2) = cm.conditional();
    let terms = [(cm.delta1 + 1.0, c1 + 1.0), (cm.delta2 + 1.0, c2 + 1.0)];
    let mut total = 0.0;
    for (num, den) in terms {
        if !(num > 0.0 && den > 0.0) {
            return Err(Error::unphysical(format!(
                "non-positive argument in mutual information ({num}, {den})"
            )));
        }
        total += 0.5 * (num / den).log2();
    }
    Ok(total)
}

/// Holevo bound `g(λ₁) + g(λ₂) − g(λ₃)` and the eigenvalues `(λ₁, λ₂, λ₃)`.
pub fn holevo_bound(cm: &SwapCM) -> Result<(f64, [f64; 3])> {
    let (l1, l2) = cm.spectrum()?;
    let (c1, c2) = cm.conditional();
    let prod = c1 * c2;
    if !(prod >= 0.0) {
        return Err(Error::unphysical(format!(
            "negative conditional determinant {prod}"
        )));
    }
    let l3 = prod.sqrt();
    let chi = entropy_g(l1)? + entropy_g(l2)? - entropy_g(l3)?;
    Ok((chi, [l1, l2, l3]))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KeyRateResult {
    pub i_ab: f64,
    pub chi_be: f64,
    pub lambdas: [f64; 3],
    pub herald_prob: f64,
    /// `P·(R·I_AB − χ_BE)`; reported even when negative.
    pub k_rate: f64,
}

impl KeyRateResult {
    pub fn no_key(&self) -> bool {
        !(self.k_rate > 0.0)
    }
}

/// Key rate of a state whose covariance matrix is already known.
/// `variance` is the Gaussian parent variance that sets the gain.
pub fn key_rate_from_cm(
    cm: &TwoModeCM,
    variance: f64,
    config: &ChannelConfig,
) -> Result<KeyRateResult> {
    let chan = total_noise(config, variance)?;
    let swap = assemble_swap_cm(cm, &chan)?;
    let i_ab = mutual_information(&swap)?;
    let (chi_be, lambdas) = holevo_bound(&swap)?;
    Ok(KeyRateResult {
        i_ab,
        chi_be,
        lambdas,
        herald_prob: cm.herald_prob,
        k_rate: cm.herald_prob * (config.reconciliation * i_ab - chi_be),
    })
}

/// Full pipeline: closed-form state, channel, swap, key rate. `k = 0` with
/// `T_S = 1` takes the exact Gaussian form.
pub fn secret_key_rate(params: &ResourceParams, config: &ChannelConfig) -> Result<KeyRateResult> {
    let cm = if params.photons == 0 && params.transmissivity == 1.0 {
        TwoModeCM::tmsv(params.variance)
    } else {
        pstmsc_moments(params)?
    };
    key_rate_from_cm(&cm, params.variance, config)
}

/// Per-channel results of a multi-outcome heralding scheme.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AverageKeyRate {
    /// One entry per heralded photon number `1..=N`.
    pub channels: Vec<KeyRateResult>,
    /// `Σ_k K_k`, each term floored at 0 unless verbatim summation is asked for.
    pub k_avg: f64,
    /// `Σ_k P_k`.
    pub p_total: f64,
}

/// Sums the key rates of the channels `params[0..N]` (photon numbers 1..N).
/// With `floor` a negative-rate channel contributes 0.
pub fn average_key_rate(
    params: &[ResourceParams],
    config: &ChannelConfig,
    floor: bool,
) -> Result<AverageKeyRate> {
    if params.is_empty() || params.len() > 4 {
        return Err(Error::domain(format!(
            "post-selection needs 1 to 4 channels, got {}",
            params.len()
        )));
    }
    let mut channels = Vec::with_capacity(params.len());
    let (mut k_avg, mut p_total) = (0.0, 0.0);
    for (i, p) in params.iter().enumerate() {
        if p.photons as usize != i + 1 {
            return Err(Error::validation(format!(
                "channel {} must herald {} photons, got {}",
                i,
                i + 1,
                p.photons
            )));
        }
        let r = secret_key_rate(p, config)?;
        k_avg += if floor { r.k_rate.max(0.0) } else { r.k_rate };
        p_total += r.herald_prob;
        channels.push(r);
    }
    Ok(AverageKeyRate {
        channels,
        k_avg,
        p_total,
    })
}
