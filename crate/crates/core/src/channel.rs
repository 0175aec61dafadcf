//! Loss and noise of the equivalent one-way channel.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relay placement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Topology {
    /// Relay midway: `L_AC = L_BC = L_AB/2`.
    Symmetric,
    /// Relay at Bob: `L_AC = L_AB`, `T_B = 1`.
    ExtremeAsymmetric,
}

impl fmt::Display for Topology {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Topology::Symmetric => "symmetric",
            Topology::ExtremeAsymmetric => "extreme_asymmetric",
        })
    }
}

impl FromStr for Topology {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "symmetric" => Ok(Topology::Symmetric),
            "extreme_asymmetric" | "asymmetric" => Ok(Topology::ExtremeAsymmetric),
            _ => Err(Error::validation(format!("unknown topology '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelConfig {
    pub topology: Topology,
    /// Alice–Bob distance in km.
    pub distance_km: f64,
    /// Fiber loss in dB/km.
    pub attenuation: f64,
    /// Thermal excess noise of Alice's link (shot-noise units).
    pub eps_a: f64,
    /// Thermal excess noise of Bob's link.
    pub eps_b: f64,
    /// Homodyne detector efficiency.
    pub eta: f64,
    /// Detector electronic noise (shot-noise units).
    pub v_el: f64,
    /// Reconciliation efficiency.
    pub reconciliation: f64,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        Self {
            topology: Topology::ExtremeAsymmetric,
            distance_km: 0.0,
            attenuation: 0.2,
            eps_a: 0.002,
            eps_b: 0.002,
            eta: 1.0,
            v_el: 0.0,
            reconciliation: 0.96,
        }
    }
}

impl ChannelConfig {
    pub fn at_distance(&self, distance_km: f64) -> Self {
        Self {
            distance_km,
            ..*self
        }
    }

    pub fn validate(&self) -> Result<()> {
        let check = |ok: bool, what: &str| {
            if ok {
                Ok(())
            } else {
                Err(Error::domain(what.to_string()))
            }
        };
        check(
            self.distance_km >= 0.0 && self.distance_km.is_finite(),
            "distance must be finite and >= 0",
        )?;
        check(
            self.attenuation >= 0.0 && self.attenuation.is_finite(),
            "attenuation must be >= 0",
        )?;
        check(
            self.eps_a >= 0.0 && self.eps_b >= 0.0,
            "excess noises must be >= 0",
        )?;
        check(
            self.eta > 0.0 && self.eta <= 1.0,
            "detector efficiency must lie in (0, 1]",
        )?;
        check(
            self.v_el >= 0.0 && self.v_el.is_finite(),
            "electronic noise must be >= 0",
        )?;
        check(
            self.reconciliation > 0.0 && self.reconciliation <= 1.0,
            "reconciliation efficiency must lie in (0, 1]",
        )
    }

    /// `(L_AC, L_BC)` in km.
    pub fn link_lengths(&self) -> (f64, f64) {
        match self.topology {
            Topology::Symmetric => (0.5 * self.distance_km, 0.5 * self.distance_km),
            Topology::ExtremeAsymmetric => (self.distance_km, 0.0),
        }
    }
}

/// `10^(−attenuation·L/10)`.
pub fn transmissivity_from_distance(l_km: f64, attenuation: f64) -> Result<f64> {
    if !(l_km >= 0.0) {
        return Err(Error::domain(format!("distance {l_km} km is negative")));
    }
    Ok(10f64.powf(-attenuation * l_km / 10.0))
}

/// Displacement gain `g = √(2(V−1)/(T_B(V+1)))` that minimizes the excess noise.
pub fn optimal_gain(v: f64, t_b: f64) -> Result<f64> {
    if !(v >= 1.0) {
        return Err(Error::domain(format!("variance {v} below 1")));
    }
    if !(t_b > 0.0 && t_b <= 1.0) {
        return Err(Error::domain(format!(
            "transmissivity {t_b} outside (0, 1]"
        )));
    }
    Ok((2.0 * (v - 1.0) / (t_b * (v + 1.0))).sqrt())
}

/// `ε_th = (T_B/T_A)(ε_B − 2) + ε_A + 2/T_A`.
pub fn thermal_excess(t_a: f64, t_b: f64, eps_a: f64, eps_b: f64) -> Result<f64> {
    if !(t_a > 0.0 && t_a <= 1.0) || !(t_b > 0.0 && t_b <= 1.0) {
        return Err(Error::domain(format!(
            "transmissivities ({t_a}, {t_b}) outside (0, 1]"
        )));
    }
    Ok((t_b / t_a) * (eps_b - 2.0) + eps_a + 2.0 / t_a)
}

/// Equivalent one-way channel seen by Bob's mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EffectiveChannel {
    pub t_a: f64,
    pub t_b: f64,
    pub gain: f64,
    /// `T = g² T_A / 2`.
    pub t_eff: f64,
    pub eps_th: f64,
    /// `(1 − T)/T + ε_th`.
    pub chi_channel: f64,
    /// `(v_el + 1 − η)/η`.
    pub chi_c: f64,
    /// `χ_channel + 2χ_C/T_A`.
    pub chi_total: f64,
}

pub fn total_noise(config: &ChannelConfig, v: f64) -> Result<EffectiveChannel> {
    config.validate()?;
    let (l_ac, l_bc) = config.link_lengths();
    let t_a = transmissivity_from_distance(l_ac, config.attenuation)?;
    let t_b = match config.topology {
        Topology::Symmetric => transmissivity_from_distance(l_bc, config.attenuation)?,
        Topology::ExtremeAsymmetric => 1.0,
    };
    let gain = optimal_gain(v, t_b)?;
    let t_eff = gain * gain * t_a / 2.0;
    if !(t_eff > 0.0) {
        return Err(Error::domain(format!(
            "effective transmissivity vanishes (V = {v}, T_A = {t_a})"
        )));
    }
    let eps_th = thermal_excess(t_a, t_b, config.eps_a, config.eps_b)?;
    let chi_channel = (1.0 - t_eff) / t_eff + eps_th;
    if chi_channel < 0.0 {
        return Err(Error::validation(format!(
            "negative channel noise {chi_channel}"
        )));
    }
    let chi_c = (config.v_el + 1.0 - config.eta) / config.eta;
    Ok(EffectiveChannel {
        t_a,
        t_b,
        gain,
        t_eff,
        eps_th,
        chi_channel,
        chi_c,
        chi_total: chi_channel + 2.0 * chi_c / t_a,
    })
}
