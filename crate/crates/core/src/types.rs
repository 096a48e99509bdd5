//! Shared units and small domain-wide types.

use serde::{Deserialize, Serialize};

/// Simulated time in integer milliseconds. All timing arithmetic in this
/// crate is integer-exact; there are no float tolerances anywhere.
pub type Millis = u64;

/// Hosting tier of a node or the tiers a component may be placed on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Tier {
    Cloud,
    Fog,
}

impl std::fmt::Display for Tier {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Tier::Cloud => write!(f, "cloud"),
            Tier::Fog => write!(f, "fog"),
        }
    }
}

/// A cpu/memory/disk triple, used for demands, capacities and usage.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Resources {
    pub cpu: u64,
    pub memory: u64,
    pub disk: u64,
}

impl Resources {
    pub fn new(cpu: u64, memory: u64, disk: u64) -> Self {
        Self { cpu, memory, disk }
    }

    pub fn checked_add(self, other: Resources) -> Resources {
        Resources {
            cpu: self.cpu.saturating_add(other.cpu),
            memory: self.memory.saturating_add(other.memory),
            disk: self.disk.saturating_add(other.disk),
        }
    }

    pub fn checked_sub(self, other: Resources) -> Resources {
        Resources {
            cpu: self.cpu.saturating_sub(other.cpu),
            memory: self.memory.saturating_sub(other.memory),
            disk: self.disk.saturating_sub(other.disk),
        }
    }

    /// True when every dimension of `self` fits within `cap`.
    pub fn fits_within(self, cap: Resources) -> bool {
        self.cpu <= cap.cpu && self.memory <= cap.memory && self.disk <= cap.disk
    }
}
