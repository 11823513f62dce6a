//! Shared domain vocabulary: money, node identities, packets, auctions,
//! path ledgers and the game event log.

use std::fmt;
use std::ops::{Add, AddAssign, Neg, Sub, SubAssign};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Integer point currency. Payments, bids, budgets and fines are never
/// negative; only balances are.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct Money(pub i64);

impl Money {
    pub const ZERO: Money = Money(0);

    pub fn get(self) -> i64 {
        self.0
    }

    pub fn is_negative(self) -> bool {
        self.0 < 0
    }

    pub fn clamp_to(self, lo: Money, hi: Money) -> Money {
        Money(self.0.max(lo.0).min(hi.0))
    }
}

impl fmt::Display for Money {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl Add for Money {
    type Output = Money;
    fn add(self, rhs: Money) -> Money {
        Money(self.0 + rhs.0)
    }
}

impl Sub for Money {
    type Output = Money;
    fn sub(self, rhs: Money) -> Money {
        Money(self.0 - rhs.0)
    }
}

impl Neg for Money {
    type Output = Money;
    fn neg(self) -> Money {
        Money(-self.0)
    }
}

impl AddAssign for Money {
    fn add_assign(&mut self, rhs: Money) {
        self.0 += rhs.0;
    }
}

impl SubAssign for Money {
    fn sub_assign(&mut self, rhs: Money) {
        self.0 -= rhs.0;
    }
}

impl std::iter::Sum for Money {
    fn sum<I: Iterator<Item = Money>>(iter: I) -> Money {
        Money(iter.map(|m| m.0).sum())
    }
}

/// Node identity. `NodeId::BACKBONE` is the virtual wired infrastructure
/// and never bids or forwards.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u32);

impl NodeId {
    pub const BACKBONE: NodeId = NodeId(u32::MAX);

    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn is_backbone(self) -> bool {
        self == NodeId::BACKBONE
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_backbone() {
            f.write_str("backbone")
        } else {
            write!(f, "{}", self.0)
        }
    }
}

impl FromStr for NodeId {
    type Err = std::num::ParseIntError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "backbone" {
            Ok(NodeId::BACKBONE)
        } else {
            s.parse().map(NodeId)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("packet budget must be at least 1, got {0}")]
    Budget(Money),
    #[error("packet fine must be non-negative, got {0}")]
    Fine(Money),
    #[error("packet ttl must be at least 1")]
    Ttl,
}

/// A forwarding task injected by the backbone.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Packet {
    pub id: u64,
    pub destination: NodeId,
    pub budget: Money,
    pub fine: Money,
    pub ttl: u32,
}

impl Packet {
    pub fn new(
        id: u64,
        destination: NodeId,
        budget: Money,
        fine: Money,
        ttl: u32,
    ) -> Result<Self, ModelError> {
        if budget.0 < 1 {
            return Err(ModelError::Budget(budget));
        }
        if fine.is_negative() {
            return Err(ModelError::Fine(fine));
        }
        if ttl < 1 {
            return Err(ModelError::Ttl);
        }
        Ok(Packet {
            id,
            destination,
            budget,
            fine,
            ttl,
        })
    }
}

/// One hop's sealed-bid auction announcement, as seen by bidders.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AuctionRequest {
    pub packet_id: u64,
    pub destination: NodeId,
    /// Maximum allowed bid for this hop.
    pub ceiling: Money,
    pub fine: Money,
    pub ttl_remaining: u32,
    pub holder: NodeId,
    /// Promise the holder itself won the packet with (the budget for the backbone).
    pub incoming: Money,
    /// Holder's advertised shortest-hop distance to the destination, if known.
    pub hop_distance: Option<u32>,
    /// Number of the holder's neighbours that may legally bid.
    pub eligible_bidders: u32,
    /// Set when abstaining is not allowed.
    pub forced: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Bid {
    pub bidder: NodeId,
    pub amount: Money,
}

impl Bid {
    pub fn new(bidder: NodeId, amount: i64) -> Self {
        Bid {
            bidder,
            amount: Money(amount),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Error)]
pub enum BidRejection {
    #[error("bid exceeds the auction ceiling")]
    OverCeiling,
    #[error("bid amount is negative")]
    Negative,
    #[error("bidder is already on the packet's path")]
    OnPath,
    #[error("bidder is not a neighbour of the holder")]
    NotNeighbor,
}

/// Checks a bid against the open auction. `is_neighbor` answers whether
/// the bidder is adjacent to the holder (gateways for the backbone).
pub fn validate_bid(
    request: &AuctionRequest,
    bid: &Bid,
    path: &PathLedger,
    is_neighbor: impl Fn(NodeId, NodeId) -> bool,
) -> Result<(), BidRejection> {
    if bid.amount.is_negative() {
        return Err(BidRejection::Negative);
    }
    if bid.amount > request.ceiling {
        return Err(BidRejection::OverCeiling);
    }
    if path.contains(bid.bidder) || bid.bidder == request.holder {
        return Err(BidRejection::OnPath);
    }
    if bid.bidder.is_backbone() || !is_neighbor(request.holder, bid.bidder) {
        return Err(BidRejection::NotNeighbor);
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PacketStatus {
    InFlight,
    Delivered,
    Dropped,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LedgerError {
    #[error("node {0} is already on the path")]
    Duplicate(NodeId),
    #[error("promise {next} exceeds the previous promise {prev}")]
    Increasing { prev: Money, next: Money },
    #[error("first promise {0} exceeds the packet budget {1}")]
    OverBudget(Money, Money),
    #[error("ledger is already settled")]
    Settled,
}

/// Chain of (node, promise) pairs a packet has travelled through.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PathLedger {
    pub packet_id: u64,
    budget: Money,
    hops: Vec<(NodeId, Money)>,
    pub status: PacketStatus,
}

impl PathLedger {
    pub fn new(packet_id: u64, budget: Money) -> Self {
        PathLedger {
            packet_id,
            budget,
            hops: Vec::new(),
            status: PacketStatus::InFlight,
        }
    }

    /// Builds a ledger from explicit hops, checking every invariant.
    pub fn from_hops(
        packet_id: u64,
        budget: Money,
        hops: &[(NodeId, i64)],
    ) -> Result<Self, LedgerError> {
        let mut ledger = PathLedger::new(packet_id, budget);
        for &(node, promise) in hops {
            ledger.push(node, Money(promise))?;
        }
        Ok(ledger)
    }

    pub fn push(&mut self, node: NodeId, promise: Money) -> Result<(), LedgerError> {
        if self.status != PacketStatus::InFlight {
            return Err(LedgerError::Settled);
        }
        if self.contains(node) {
            return Err(LedgerError::Duplicate(node));
        }
        match self.hops.last() {
            Some(&(_, prev)) if promise > prev => {
                return Err(LedgerError::Increasing {
                    prev,
                    next: promise,
                });
            }
            None if promise > self.budget => {
                return Err(LedgerError::OverBudget(promise, self.budget))
            }
            _ => {}
        }
        self.hops.push((node, promise));
        Ok(())
    }

    pub fn hops(&self) -> &[(NodeId, Money)] {
        &self.hops
    }

    pub fn len(&self) -> usize {
        self.hops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.hops.is_empty()
    }

    pub fn contains(&self, node: NodeId) -> bool {
        self.hops.iter().any(|&(n, _)| n == node)
    }

    pub fn first_promise(&self) -> Option<Money> {
        self.hops.first().map(|&(_, p)| p)
    }

    /// Current custodian, i.e. the last node on the path.
    pub fn holder(&self) -> Option<NodeId> {
        self.hops.last().map(|&(n, _)| n)
    }

    pub fn budget(&self) -> Money {
        self.budget
    }
}

/// Why a packet left the game without reaching its destination.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DropReason {
    /// No hop allowance left.
    Ttl,
    /// Nobody bid for a packet already in custody.
    NoWinner,
    /// The holder chose to drop it.
    Deliberate,
    /// The first auction had no winner; nobody pays a fine.
    Cancelled,
    /// Destination unreachable from the holder.
    Unreachable,
}

impl DropReason {
    pub fn as_str(self) -> &'static str {
        match self {
            DropReason::Ttl => "ttl",
            DropReason::NoWinner => "no_winner",
            DropReason::Deliberate => "deliberate",
            DropReason::Cancelled => "cancelled",
            DropReason::Unreachable => "unreachable",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "ttl" => DropReason::Ttl,
            "no_winner" => DropReason::NoWinner,
            "deliberate" => DropReason::Deliberate,
            "cancelled" => DropReason::Cancelled,
            "unreachable" => DropReason::Unreachable,
            _ => return None,
        })
    }
}

/// Event payloads. Each variant knows where it physically happened.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum EventKind {
    AuctionAnnounced {
        holder: NodeId,
        ceiling: Money,
        incoming: Money,
        hop_distance: Option<u32>,
        ttl_remaining: u32,
    },
    BidPlaced {
        bidder: NodeId,
        holder: NodeId,
        amount: Money,
    },
    BidWon {
        winner: NodeId,
        holder: NodeId,
        amount: Money,
    },
    Delivered {
        holder: NodeId,
        destination: NodeId,
        first_promise: Money,
    },
    Dropped {
        dropper: NodeId,
        fine: Money,
        reason: DropReason,
    },
    FineAssessed {
        payer: NodeId,
        share: Money,
    },
    Payment {
        payee: NodeId,
        amount: Money,
    },
}

impl EventKind {
    pub fn tag(&self) -> &'static str {
        match self {
            EventKind::AuctionAnnounced { .. } => "auction",
            EventKind::BidPlaced { .. } => "bid",
            EventKind::BidWon { .. } => "won",
            EventKind::Delivered { .. } => "delivered",
            EventKind::Dropped { .. } => "dropped",
            EventKind::FineAssessed { .. } => "fine",
            EventKind::Payment { .. } => "payment",
        }
    }
}

/// Identity of an event in the log, used for deduplication.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EventId {
    pub round: u64,
    pub seq: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GameEvent {
    pub round: u64,
    /// Position within the round.
    pub seq: u32,
    pub packet_id: u64,
    pub kind: EventKind,
}

pub const EVENT_LOG_HEADER: &str = "round,kind,packet_id,node,amount,extra";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("malformed event line {line:?}: {reason}")]
pub struct EventParseError {
    pub line: String,
    pub reason: &'static str,
}

impl GameEvent {
    pub fn id(&self) -> EventId {
        EventId {
            round: self.round,
            seq: self.seq,
        }
    }

    /// Node at which the event physically occurred.
    pub fn location(&self) -> NodeId {
        match self.kind {
            EventKind::AuctionAnnounced { holder, .. } => holder,
            EventKind::BidPlaced { bidder, .. } => bidder,
            EventKind::BidWon { winner, .. } => winner,
            EventKind::Delivered { holder, .. } => holder,
            EventKind::Dropped { dropper, .. } => dropper,
            EventKind::FineAssessed { payer, .. } => payer,
            EventKind::Payment { payee, .. } => payee,
        }
    }

    /// Balance change this event applies to a node, if any.
    pub fn balance_delta(&self) -> Option<(NodeId, Money)> {
        match self.kind {
            EventKind::Payment { payee, amount } => Some((payee, amount)),
            EventKind::FineAssessed { payer, share } => Some((payer, -share)),
            _ => None,
        }
    }

    /// Renders the `round,kind,packet_id,node,amount,extra` record.
    pub fn to_line(&self) -> String {
        let (node, amount, extra) = match &self.kind {
            EventKind::AuctionAnnounced {
                holder,
                ceiling,
                incoming,
                hop_distance,
                ttl_remaining,
            } => {
                let hop = hop_distance.map_or_else(|| "?".to_string(), |h| h.to_string());
                (
                    *holder,
                    *ceiling,
                    format!("in={incoming};hop={hop};ttl={ttl_remaining}"),
                )
            }
            EventKind::BidPlaced {
                bidder,
                holder,
                amount,
            } => (*bidder, *amount, format!("holder={holder}")),
            EventKind::BidWon {
                winner,
                holder,
                amount,
            } => (*winner, *amount, format!("holder={holder}")),
            EventKind::Delivered {
                holder,
                destination,
                first_promise,
            } => (*holder, *first_promise, format!("dst={destination}")),
            EventKind::Dropped {
                dropper,
                fine,
                reason,
            } => (*dropper, *fine, reason.as_str().to_string()),
            EventKind::FineAssessed { payer, share } => (*payer, *share, String::new()),
            EventKind::Payment { payee, amount } => (*payee, *amount, String::new()),
        };
        format!(
            "{},{},{},{},{},{}",
            self.round,
            self.kind.tag(),
            self.packet_id,
            node,
            amount,
            extra
        )
    }

    /// Parses a record produced by [`GameEvent::to_line`]. The sequence
    /// number is not part of the record and must be supplied.
    pub fn parse_line(line: &str, seq: u32) -> Result<GameEvent, EventParseError> {
        let err = |reason| EventParseError {
            line: line.to_string(),
            reason,
        };
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 6 {
            return Err(err("expected 6 fields"));
        }
        let round = fields[0].parse().map_err(|_| err("bad round"))?;
        let packet_id = fields[2].parse().map_err(|_| err("bad packet id"))?;
        let node: NodeId = fields[3].parse().map_err(|_| err("bad node"))?;
        let amount = Money(fields[4].parse().map_err(|_| err("bad amount"))?);
        let extra = fields[5];
        let kv = |key: &str| -> Option<&str> {
            extra
                .split(';')
                .find_map(|p| p.strip_prefix(key).and_then(|r| r.strip_prefix('=')))
        };
        let holder = || -> Result<NodeId, EventParseError> {
            kv("holder")
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| err("missing holder"))
        };
        let kind = match fields[1] {
            "auction" => {
                let incoming = kv("in")
                    .and_then(|v| v.parse().ok())
                    .ok_or_else(|| err("missing in"))?;
                let hop = kv("hop").ok_or_else(|| err("missing hop"))?;
                let ttl = kv("ttl")
                    .and_then(|v| v.parse().ok())
                    .ok_or_else(|| err("missing ttl"))?;
                EventKind::AuctionAnnounced {
                    holder: node,
                    ceiling: amount,
                    incoming: Money(incoming),
                    hop_distance: if hop == "?" {
                        None
                    } else {
                        Some(hop.parse().map_err(|_| err("bad hop"))?)
                    },
                    ttl_remaining: ttl,
                }
            }
            "bid" => EventKind::BidPlaced {
                bidder: node,
                holder: holder()?,
                amount,
            },
            "won" => EventKind::BidWon {
                winner: node,
                holder: holder()?,
                amount,
            },
            "delivered" => EventKind::Delivered {
                holder: node,
                destination: kv("dst")
                    .and_then(|v| v.parse().ok())
                    .ok_or_else(|| err("missing dst"))?,
                first_promise: amount,
            },
            "dropped" => EventKind::Dropped {
                dropper: node,
                fine: amount,
                reason: DropReason::parse(extra).ok_or_else(|| err("bad drop reason"))?,
            },
            "fine" => EventKind::FineAssessed {
                payer: node,
                share: amount,
            },
            "payment" => EventKind::Payment {
                payee: node,
                amount,
            },
            _ => return Err(err("unknown kind")),
        };
        Ok(GameEvent {
            round,
            seq,
            packet_id,
            kind,
        })
    }
}

/// Parses a whole event log (header line optional), reconstructing
/// per-round sequence numbers from line order.
pub fn parse_event_log(text: &str) -> Result<Vec<GameEvent>, EventParseError> {
    let mut out = Vec::new();
    let mut current_round = None;
    let mut seq = 0u32;
    for line in text
        .lines()
        .filter(|l| !l.is_empty() && *l != EVENT_LOG_HEADER)
    {
        let mut ev = GameEvent::parse_line(line, 0)?;
        if current_round != Some(ev.round) {
            current_round = Some(ev.round);
            seq = 0;
        }
        ev.seq = seq;
        seq += 1;
        out.push(ev);
    }
    Ok(out)
}

/// Folds the balance deltas of an event log into per-node balances.
pub fn replay_balances(events: &[GameEvent], node_count: usize) -> Vec<Money> {
    let mut balances = vec![Money::ZERO; node_count];
    for (node, delta) in events.iter().filter_map(GameEvent::balance_delta) {
        if let Some(b) = balances.get_mut(node.index()) {
            *b += delta;
        }
    }
    balances
}
