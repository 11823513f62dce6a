//! Strategy interface and the strategy catalog.
//!
//! Every node runs exactly one [`Strategy`]. The engine calls it at the
//! decision points a contestant controls: bidding on a neighbour's
//! auction, announcing a ceiling and choosing a winner for a packet it
//! holds, and deciding whether to keep forwarding at all. Observation
//! ingestion lives in [`NodeContext`]; strategies read it but never touch
//! another node's context.

mod fair;
mod simple;
mod sniper;
mod wolfpack;

pub use fair::FairSplit;
pub use simple::{AlwaysOne, MaxBid, RandomBaseline};
pub use sniper::{LastHopSniper, SniperParams};
pub use wolfpack::{WolfPack, WolfPackParams};

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::FineMode;
use crate::model::{AuctionRequest, Bid, EventKind, GameEvent, Money, NodeId, Packet, PathLedger};
use crate::observation::{ObservationScope, ProfileStore};
use crate::predictor::{BidHistory, BidHistoryPoint, Normalization, PredictorConfig};
use crate::topology::{HopTable, NodeView};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HoldDecision {
    Forward,
    Drop,
}

/// What a holder knows about the packet in its custody.
#[derive(Debug, Clone, Copy)]
pub struct HoldContext<'a> {
    pub packet: &'a Packet,
    pub ledger: &'a PathLedger,
    /// Promise the holder won the packet with.
    pub incoming: Money,
    /// Holder's shortest-hop distance to the destination.
    pub own_distance: Option<u32>,
    pub fine_mode: FineMode,
}

pub trait Strategy: Send {
    fn name(&self) -> &'static str;

    /// `None` abstains.
    fn on_auction(&mut self, request: &AuctionRequest, ctx: &mut NodeContext) -> Option<Money>;

    /// Picks the next hop. `bids` is non-empty and already validated.
    fn choose_winner(
        &mut self,
        request: &AuctionRequest,
        bids: &[Bid],
        ctx: &mut NodeContext,
    ) -> Bid;

    /// Maximum bid for the next hop; the engine clamps it to `[0, incoming]`.
    fn announce_ceiling(&mut self, hold: &HoldContext<'_>, ctx: &mut NodeContext) -> Money;

    fn on_hold(&mut self, _hold: &HoldContext<'_>, _ctx: &mut NodeContext) -> HoldDecision {
        HoldDecision::Forward
    }

    fn on_event(&mut self, _event: &GameEvent, _ctx: &mut NodeContext) {}
}

/// Lowest amount wins, ties to the lowest id. The backbone uses this.
pub fn lowest_bid(bids: &[Bid]) -> Bid {
    *bids
        .iter()
        .min_by_key(|b| (b.amount, b.bidder))
        .expect("non-empty bid set")
}

/// Node-private state every strategy decides from.
#[derive(Debug, Clone)]
pub struct NodeContext {
    pub id: NodeId,
    pub view: NodeView,
    pub scope: ObservationScope,
    pub profiles: ProfileStore,
    pub history: BidHistory,
    pub predictor: PredictorConfig,
    pub norm: Normalization,
    pub pack: Option<u32>,
    pub pack_mates: Vec<NodeId>,
    pub round: u64,
    pub rng: ChaCha8Rng,
    /// Last auction heard: packet, ceiling, advertised hop distance.
    heard_auction: Option<(u64, Money, Option<u32>)>,
}

impl NodeContext {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        id: NodeId,
        view: NodeView,
        scope: ObservationScope,
        predictor: PredictorConfig,
        norm: Normalization,
        pack: Option<u32>,
        rng: ChaCha8Rng,
    ) -> Self {
        NodeContext {
            id,
            view,
            scope,
            profiles: ProfileStore::new(),
            history: BidHistory::new(),
            predictor,
            norm,
            pack,
            pack_mates: Vec::new(),
            round: 0,
            rng,
            heard_auction: None,
        }
    }

    /// Feeds one engine event through the observation scope. Returns
    /// whether it was visible.
    pub fn observe(&mut self, event: &GameEvent, hops: &HopTable) -> bool {
        if !self.scope.sees(event.location(), hops) {
            return false;
        }
        self.profiles
            .ingest(event, &ObservationScope::global(self.id), hops);
        match event.kind {
            EventKind::AuctionAnnounced {
                ceiling,
                hop_distance,
                ..
            } => {
                self.heard_auction = Some((event.packet_id, ceiling, hop_distance));
            }
            EventKind::BidPlaced { bidder, amount, .. } if bidder != self.id => {
                if let Some((pid, ceiling, Some(hop))) = self.heard_auction {
                    if pid == event.packet_id && amount <= ceiling {
                        let point = BidHistoryPoint {
                            max_allowed: ceiling,
                            hop_count: hop,
                            observed_bid: amount,
                            round: event.round,
                        };
                        self.history.record(point, &self.predictor);
                    }
                }
            }
            _ => {}
        }
        true
    }

    /// Distance from `from` to `dest` in this node's view, or the
    /// advertised fallback when the view does not reach.
    pub fn route_distance(
        &self,
        from: NodeId,
        dest: NodeId,
        advertised: Option<u32>,
    ) -> Option<u32> {
        self.view.distance(from, dest).or(advertised)
    }

    pub fn adjacent_to(&self, dest: NodeId) -> bool {
        self.view.distance(self.id, dest) == Some(1)
    }

    pub fn predict(&self, request: &AuctionRequest) -> Money {
        self.history.predict_bid(
            request.ceiling,
            request.hop_distance.unwrap_or(0),
            self.round,
            self.norm,
            &self.predictor,
        )
    }

    pub fn is_pack_mate(&self, node: NodeId) -> bool {
        self.pack_mates.contains(&node)
    }
}

/// Strategy registry entry: a name plus its parameter block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum StrategySpec {
    Fair,
    AlwaysOne,
    MaxBid,
    Sniper(SniperParams),
    Wolfpack(WolfPackParams),
    Random,
}

pub const STRATEGY_NAMES: [&str; 6] = [
    "fair",
    "always_one",
    "max_bid",
    "sniper",
    "wolfpack",
    "random",
];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StrategyError {
    #[error("unknown strategy name {0:?} (expected one of fair, always_one, max_bid, sniper, wolfpack, random)")]
    UnknownName(String),
    #[error("invalid parameters for strategy {name:?}: {reason}")]
    Params { name: String, reason: String },
}

impl StrategySpec {
    pub fn name(&self) -> &'static str {
        match self {
            StrategySpec::Fair => "fair",
            StrategySpec::AlwaysOne => "always_one",
            StrategySpec::MaxBid => "max_bid",
            StrategySpec::Sniper(_) => "sniper",
            StrategySpec::Wolfpack(_) => "wolfpack",
            StrategySpec::Random => "random",
        }
    }

    /// Resolves a registry name and a parameter table.
    pub fn from_name(name: &str, params: toml::Table) -> Result<Self, StrategyError> {
        let bad = |e: toml::de::Error| StrategyError::Params {
            name: name.to_string(),
            reason: e.message().to_string(),
        };
        let no_params = |p: &toml::Table| {
            if p.is_empty() {
                Ok(())
            } else {
                Err(StrategyError::Params {
                    name: name.to_string(),
                    reason: "takes no parameters".to_string(),
                })
            }
        };
        Ok(match name {
            "fair" => no_params(&params).map(|_| StrategySpec::Fair)?,
            "always_one" => no_params(&params).map(|_| StrategySpec::AlwaysOne)?,
            "max_bid" => no_params(&params).map(|_| StrategySpec::MaxBid)?,
            "random" => no_params(&params).map(|_| StrategySpec::Random)?,
            "sniper" => StrategySpec::Sniper(params.try_into().map_err(bad)?),
            "wolfpack" => {
                let p: WolfPackParams = params.try_into().map_err(bad)?;
                p.validate().map_err(|reason| StrategyError::Params {
                    name: name.to_string(),
                    reason,
                })?;
                StrategySpec::Wolfpack(p)
            }
            other => return Err(StrategyError::UnknownName(other.to_string())),
        })
    }

    pub fn build(&self) -> Box<dyn Strategy> {
        match self {
            StrategySpec::Fair => Box::new(FairSplit),
            StrategySpec::AlwaysOne => Box::new(AlwaysOne::default()),
            StrategySpec::MaxBid => Box::new(MaxBid),
            StrategySpec::Sniper(p) => Box::new(LastHopSniper::new(p.clone())),
            StrategySpec::Wolfpack(p) => Box::new(WolfPack::new(p.clone())),
            StrategySpec::Random => Box::new(RandomBaseline),
        }
    }
}
