//! Payment and fine settlement over a finished path ledger.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Money, NodeId, PacketStatus, PathLedger};

/// How a fine is distributed over the path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FineMode {
    /// Equal shares, remainder paid by the dropper.
    #[default]
    PathSplit,
    /// The dropper pays everything.
    DropperOnly,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SettlementResult {
    pub packet_id: u64,
    pub status: PacketStatus,
    /// Per-node deltas in path order. Payments are positive, fines negative.
    pub deltas: Vec<(NodeId, Money)>,
    /// Backbone's side: −first promise on delivery, +fine on drop.
    pub backbone_delta: Money,
    /// Amount the settlement is supposed to move: first promise or fine.
    pub expected_total: Money,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConservationError {
    #[error("packet {packet_id}: node deltas sum to {got}, expected {expected}")]
    Sum {
        packet_id: u64,
        got: Money,
        expected: Money,
    },
    #[error("packet {packet_id}: backbone delta {got} does not offset the nodes")]
    Backbone { packet_id: u64, got: Money },
}

impl SettlementResult {
    pub fn node_total(&self) -> Money {
        self.deltas.iter().map(|&(_, d)| d).sum()
    }

    /// Delivered: node earnings sum to the first promise, which the
    /// backbone pays. Dropped: fine shares sum to the fine, which the
    /// backbone receives.
    pub fn check_conservation(&self) -> Result<(), ConservationError> {
        let total = self.node_total();
        let magnitude = match self.status {
            PacketStatus::Dropped => -total,
            _ => total,
        };
        if magnitude != self.expected_total {
            return Err(ConservationError::Sum {
                packet_id: self.packet_id,
                got: magnitude,
                expected: self.expected_total,
            });
        }
        if total + self.backbone_delta != Money::ZERO {
            return Err(ConservationError::Backbone {
                packet_id: self.packet_id,
                got: self.backbone_delta,
            });
        }
        Ok(())
    }

    pub fn by_node(&self) -> BTreeMap<NodeId, Money> {
        let mut m = BTreeMap::new();
        for &(n, d) in &self.deltas {
            *m.entry(n).or_insert(Money::ZERO) += d;
        }
        m
    }
}

/// Telescoping payout: node i keeps promise[i] − promise[i+1], the last
/// node keeps its whole promise, the backbone pays promise[0].
pub fn settle_delivery(ledger: &PathLedger) -> SettlementResult {
    let hops = ledger.hops();
    let deltas: Vec<(NodeId, Money)> = hops
        .iter()
        .enumerate()
        .map(|(i, &(node, promise))| {
            let next = hops.get(i + 1).map_or(Money::ZERO, |&(_, p)| p);
            (node, promise - next)
        })
        .collect();
    let first = ledger.first_promise().unwrap_or(Money::ZERO);
    SettlementResult {
        packet_id: ledger.packet_id,
        status: PacketStatus::Delivered,
        deltas,
        backbone_delta: -first,
        expected_total: first,
    }
}

/// Fine shares for a dropped packet; the dropper is the last path node.
pub fn settle_drop(ledger: &PathLedger, fine: Money, mode: FineMode) -> SettlementResult {
    let hops = ledger.hops();
    let k = hops.len() as i64;
    let mut deltas = Vec::with_capacity(hops.len());
    if k > 0 {
        let (share, remainder) = match mode {
            FineMode::PathSplit => (fine.get() / k, fine.get() % k),
            FineMode::DropperOnly => (0, fine.get()),
        };
        for (i, &(node, _)) in hops.iter().enumerate() {
            let pay = if i + 1 == hops.len() {
                share + remainder
            } else {
                share
            };
            deltas.push((node, Money(-pay)));
        }
    }
    SettlementResult {
        packet_id: ledger.packet_id,
        status: PacketStatus::Dropped,
        deltas,
        backbone_delta: if k > 0 { fine } else { Money::ZERO },
        expected_total: if k > 0 { fine } else { Money::ZERO },
    }
}

/// What the holder would pay as dropper on a path of `path_len` nodes.
pub fn dropper_share(fine: Money, path_len: usize, mode: FineMode) -> Money {
    let k = path_len.max(1) as i64;
    match mode {
        FineMode::PathSplit => Money(fine.get() / k + fine.get() % k),
        FineMode::DropperOnly => fine,
    }
}
