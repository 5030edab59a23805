use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Sub};

use crate::packet::NodeId;
use crate::time::SimTime;

/// Energy in integer nanojoules, so ledger sums are exact and order-free.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Energy(u64);

impl Energy {
    pub const ZERO: Energy = Energy(0);

    pub const fn from_nanojoules(nj: u64) -> Self {
        Energy(nj)
    }

    pub fn from_joules(j: f64) -> Self {
        Energy((j * 1e9).round().max(0.0) as u64)
    }

    pub const fn as_nanojoules(self) -> u64 {
        self.0
    }

    pub fn as_joules(self) -> f64 {
        self.0 as f64 / 1e9
    }

    pub fn saturating_sub(self, rhs: Energy) -> Energy {
        Energy(self.0.saturating_sub(rhs.0))
    }
}

impl Add for Energy {
    type Output = Energy;
    fn add(self, rhs: Energy) -> Energy {
        Energy(self.0 + rhs.0)
    }
}

impl AddAssign for Energy {
    fn add_assign(&mut self, rhs: Energy) {
        self.0 += rhs.0;
    }
}

impl Sub for Energy {
    type Output = Energy;
    fn sub(self, rhs: Energy) -> Energy {
        Energy(self.0 - rhs.0)
    }
}

impl Sum for Energy {
    fn sum<I: Iterator<Item = Energy>>(iter: I) -> Energy {
        iter.fold(Energy::ZERO, |a, b| a + b)
    }
}

impl fmt::Display for Energy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{:09}", self.0 / 1_000_000_000, self.0 % 1_000_000_000)
    }
}

/// Power in integer milliwatts; milliwatt times microsecond is one nanojoule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Power(u64);

impl Power {
    pub fn from_watts(w: f64) -> Self {
        Power((w * 1e3).round().max(0.0) as u64)
    }

    pub fn as_milliwatts(self) -> u64 {
        self.0
    }

    pub fn energy_for(self, duration: SimTime) -> Energy {
        Energy(self.0 * duration.as_micros())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EnergyRole {
    Tx,
    Rx,
}

impl EnergyRole {
    pub fn as_str(self) -> &'static str {
        match self {
            EnergyRole::Tx => "tx",
            EnergyRole::Rx => "rx",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChargeOutcome {
    /// Energy actually removed; less than requested when the battery ran out.
    pub charged: Energy,
    pub died: bool,
}

/// Per-node battery accounting. `residual = initial - consumed_tx - consumed_rx`
/// holds by construction; a node dies when its residual reaches zero.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyLedger {
    initial: Energy,
    consumed_tx: Vec<Energy>,
    consumed_rx: Vec<Energy>,
    dead: Vec<bool>,
}

impl EnergyLedger {
    pub fn new(nodes: usize, initial: Energy) -> Self {
        EnergyLedger {
            initial,
            consumed_tx: vec![Energy::ZERO; nodes],
            consumed_rx: vec![Energy::ZERO; nodes],
            dead: vec![false; nodes],
        }
    }

    pub fn node_count(&self) -> usize {
        self.dead.len()
    }

    pub fn initial(&self) -> Energy {
        self.initial
    }

    pub fn consumed(&self, node: NodeId) -> Energy {
        self.consumed_tx[node.index()] + self.consumed_rx[node.index()]
    }

    pub fn consumed_tx(&self, node: NodeId) -> Energy {
        self.consumed_tx[node.index()]
    }

    pub fn consumed_rx(&self, node: NodeId) -> Energy {
        self.consumed_rx[node.index()]
    }

    pub fn residual(&self, node: NodeId) -> Energy {
        self.initial - self.consumed(node)
    }

    pub fn is_alive(&self, node: NodeId) -> bool {
        !self.dead[node.index()]
    }

    pub fn alive_mask(&self) -> Vec<bool> {
        self.dead.iter().map(|d| !d).collect()
    }

    pub fn total_consumed(&self) -> Energy {
        (0..self.node_count())
            .map(|i| self.consumed(NodeId(i as u32)))
            .sum()
    }

    /// Charges `power * duration` to `node`, clamping at the remaining battery.
    pub fn charge(
        &mut self,
        node: NodeId,
        role: EnergyRole,
        power: Power,
        duration: SimTime,
    ) -> ChargeOutcome {
        let i = node.index();
        if self.dead[i] {
            return ChargeOutcome {
                charged: Energy::ZERO,
                died: false,
            };
        }
        let want = power.energy_for(duration);
        let residual = self.residual(node);
        let charged = want.min(residual);
        match role {
            EnergyRole::Tx => self.consumed_tx[i] += charged,
            EnergyRole::Rx => self.consumed_rx[i] += charged,
        }
        let died = self.residual(node) == Energy::ZERO;
        if died {
            self.dead[i] = true;
        }
        ChargeOutcome { charged, died }
    }
}
