//! Resource-state families selectable by name.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::channel::ChannelConfig;
use crate::error::{Error, Result};
use crate::keyrate::{secret_key_rate, KeyRateResult};
use crate::pstmsc::{ResourceParams, StateKind};

/// A family of resource states parametrized by `(V, d, T_S)`.
pub trait ResourceFamily: Send + Sync {
    fn kind(&self) -> StateKind;

    /// Whether the optimizer may vary the displacement.
    fn varies_displacement(&self) -> bool {
        self.kind().uses_displacement()
    }

    /// Whether the optimizer may vary the subtraction transmissivity.
    fn varies_transmissivity(&self) -> bool {
        self.kind().uses_transmissivity()
    }

    fn params(
        &self,
        variance: f64,
        displacement: f64,
        transmissivity: f64,
    ) -> Result<ResourceParams> {
        self.kind().params(variance, displacement, transmissivity)
    }

    fn key_rate(&self, params: &ResourceParams, config: &ChannelConfig) -> Result<KeyRateResult> {
        secret_key_rate(params, config)
    }

    fn name(&self) -> String {
        self.kind().to_string()
    }
}

/// TMSV or TMSC.
#[derive(Debug, Clone, Copy)]
pub struct Gaussian {
    pub displaced: bool,
}

impl ResourceFamily for Gaussian {
    fn kind(&self) -> StateKind {
        if self.displaced {
            StateKind::Tmsc
        } else {
            StateKind::Tmsv
        }
    }
}

/// k-PSTMSV or k-PSTMSC.
#[derive(Debug, Clone, Copy)]
pub struct Subtracted {
    pub photons: u32,
    pub displaced: bool,
}

impl ResourceFamily for Subtracted {
    fn kind(&self) -> StateKind {
        if self.displaced {
            StateKind::Pstmsc(self.photons)
        } else {
            StateKind::Pstmsv(self.photons)
        }
    }
}

pub fn family_for(kind: StateKind) -> Arc<dyn ResourceFamily> {
    match kind {
        StateKind::Tmsv => Arc::new(Gaussian { displaced: false }),
        StateKind::Tmsc => Arc::new(Gaussian { displaced: true }),
        StateKind::Pstmsv(k) => Arc::new(Subtracted {
            photons: k,
            displaced: false,
        }),
        StateKind::Pstmsc(k) => Arc::new(Subtracted {
            photons: k,
            displaced: true,
        }),
    }
}

/// Name → family lookup. Names are case-insensitive (`tmsv`, `2-pstmsc`).
#[derive(Clone)]
pub struct StateRegistry {
    families: BTreeMap<String, Arc<dyn ResourceFamily>>,
}

impl Default for StateRegistry {
    /// TMSV, TMSC and the subtracted families for one to four photons.
    fn default() -> Self {
        let mut reg = Self {
            families: BTreeMap::new(),
        };
        reg.register(family_for(StateKind::Tmsv));
        reg.register(family_for(StateKind::Tmsc));
        for k in 1..=4 {
            reg.register(family_for(StateKind::Pstmsv(k)));
            reg.register(family_for(StateKind::Pstmsc(k)));
        }
        reg
    }
}

impl StateRegistry {
    pub fn register(&mut self, family: Arc<dyn ResourceFamily>) {
        self.families
            .insert(family.name().to_ascii_lowercase(), family);
    }

    pub fn get(&self, name: &str) -> Result<Arc<dyn ResourceFamily>> {
        self.families
            .get(&name.trim().to_ascii_lowercase())
            .cloned()
            .ok_or_else(|| {
                Error::validation(format!(
                    "unknown state '{name}' (known: {})",
                    self.names().join(", ")
                ))
            })
    }

    pub fn names(&self) -> Vec<String> {
        self.families.values().map(|f| f.name()).collect()
    }
}
