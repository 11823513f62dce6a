//! Per-observer estimates of other nodes: richness, fairness deviation and
//! drop behaviour, built from the events an observer can see.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::model::{DropReason, EventId, EventKind, GameEvent, Money, NodeId};
use crate::topology::HopTable;

/// Which events a node can hear.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
#[derive(Default)]
pub enum ObservationMode {
    #[default]
    Global,
    Khop(u32),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ObservationScope {
    pub mode: ObservationMode,
    pub owner: NodeId,
}

impl ObservationScope {
    pub fn global(owner: NodeId) -> Self {
        ObservationScope {
            mode: ObservationMode::Global,
            owner,
        }
    }

    /// Visible iff the location is within k hops of the owner on the
    /// graph of the round the event happened in.
    pub fn sees(&self, location: NodeId, hops: &HopTable) -> bool {
        match self.mode {
            ObservationMode::Global => true,
            ObservationMode::Khop(k) => hops.get(self.owner, location).is_some_and(|d| d <= k),
        }
    }
}

/// Accumulated relative deviation, in millionths.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct FairnessDeviation(pub u64);

impl FairnessDeviation {
    pub const SCALE: u64 = 1_000_000;

    pub fn as_f64(self) -> f64 {
        self.0 as f64 / Self::SCALE as f64
    }
}

impl fmt::Display for FairnessDeviation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.6}", self.as_f64())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NodeProfile {
    pub subject: NodeId,
    pub estimated_profit: Money,
    pub fairness_deviation: FairnessDeviation,
    pub observed_drops: u32,
    pub observed_custodies: u32,
}

impl NodeProfile {
    pub fn new(subject: NodeId) -> Self {
        NodeProfile {
            subject,
            estimated_profit: Money::ZERO,
            fairness_deviation: FairnessDeviation::default(),
            observed_drops: 0,
            observed_custodies: 0,
        }
    }

    pub fn drop_rate(&self) -> f64 {
        self.observed_drops as f64 / self.observed_custodies.max(1) as f64
    }
}

/// Equal-split ceiling for a holder `d` hops from the destination.
pub fn fair_ceiling(incoming: Money, d: u32) -> Money {
    if d == 0 {
        return incoming;
    }
    Money(incoming.get() * (d as i64 - 1) / d as i64)
}

/// One observer's profiles, plus the events they were derived from.
#[derive(Debug, Clone, Default)]
pub struct ProfileStore {
    profiles: BTreeMap<NodeId, NodeProfile>,
    seen: HashSet<EventId>,
    /// Applied since the last pack merge.
    unshared: Vec<GameEvent>,
}

impl PartialEq for ProfileStore {
    fn eq(&self, other: &Self) -> bool {
        self.profiles == other.profiles && self.seen == other.seen
    }
}

impl Eq for ProfileStore {}

impl ProfileStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn profile(&self, subject: NodeId) -> Option<&NodeProfile> {
        self.profiles.get(&subject)
    }

    pub fn profiles(&self) -> impl Iterator<Item = &NodeProfile> {
        self.profiles.values()
    }

    pub fn estimated_profit(&self, subject: NodeId) -> Money {
        self.profiles
            .get(&subject)
            .map_or(Money::ZERO, |p| p.estimated_profit)
    }

    pub fn applied_count(&self) -> usize {
        self.seen.len()
    }

    fn entry(&mut self, subject: NodeId) -> &mut NodeProfile {
        self.profiles
            .entry(subject)
            .or_insert_with(|| NodeProfile::new(subject))
    }

    /// Applies a visible event once. Returns whether the store changed.
    pub fn ingest(&mut self, event: &GameEvent, scope: &ObservationScope, hops: &HopTable) -> bool {
        if !scope.sees(event.location(), hops) {
            return false;
        }
        self.apply(event)
    }

    fn apply(&mut self, event: &GameEvent) -> bool {
        if !affects_profiles(&event.kind) || !self.seen.insert(event.id()) {
            return false;
        }
        match event.kind {
            EventKind::AuctionAnnounced {
                holder,
                ceiling,
                incoming,
                hop_distance: Some(d),
                ..
            } if !holder.is_backbone() && d >= 2 => {
                self.fairness_update(holder, ceiling, incoming, d);
            }
            EventKind::BidWon { winner, .. } => self.entry(winner).observed_custodies += 1,
            EventKind::Dropped {
                dropper, reason, ..
            } if reason != DropReason::Cancelled && !dropper.is_backbone() => {
                self.entry(dropper).observed_drops += 1;
            }
            EventKind::FineAssessed { payer, share } => self.entry(payer).estimated_profit -= share,
            EventKind::Payment { payee, amount } => self.entry(payee).estimated_profit += amount,
            _ => {}
        }
        self.unshared.push(event.clone());
        true
    }

    /// Adds |announced − fair| / max(incoming, 1) to the holder's deviation.
    pub fn fairness_update(&mut self, holder: NodeId, announced: Money, incoming: Money, d: u32) {
        let fair = fair_ceiling(incoming, d);
        let gap = (announced.get() - fair.get()).unsigned_abs();
        let increment = gap * FairnessDeviation::SCALE / incoming.get().max(1) as u64;
        self.entry(holder).fairness_deviation.0 += increment;
    }

    /// `round,observer,subject,profit_est,fairness_dev,drop_rate` rows.
    pub fn diagnostics_rows(&self, round: u64, observer: NodeId, out: &mut String) {
        for p in self.profiles.values() {
            writeln!(
                out,
                "{},{},{},{},{},{:.6}",
                round,
                observer,
                p.subject,
                p.estimated_profit,
                p.fairness_deviation,
                p.drop_rate()
            )
            .unwrap();
        }
    }
}

pub const DIAGNOSTICS_HEADER: &str = "round,observer,subject,profit_est,fairness_dev,drop_rate";

fn affects_profiles(kind: &EventKind) -> bool {
    !matches!(
        kind,
        EventKind::BidPlaced { .. } | EventKind::Delivered { .. }
    )
}

/// Gives every pack member the union of what the members learned since
/// their previous merge, each event applied once.
pub fn merge_pack(stores: &mut [&mut ProfileStore]) {
    let mut union: BTreeMap<EventId, GameEvent> = BTreeMap::new();
    for s in stores.iter_mut() {
        for ev in s.unshared.drain(..) {
            union.entry(ev.id()).or_insert(ev);
        }
    }
    for s in stores.iter_mut() {
        for ev in union.values() {
            s.apply(ev);
        }
        s.unshared.clear();
    }
}
