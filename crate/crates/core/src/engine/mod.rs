//! Round-based game loop: packet injection, per-hop sealed-bid auctions,
//! direct delivery, TTL enforcement, settlement and the event log.

pub mod settlement;

pub use settlement::{
    dropper_share, settle_delivery, settle_drop, ConservationError, FineMode, SettlementResult,
};

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{
    validate_bid, AuctionRequest, Bid, DropReason, EventKind, GameEvent, Money, NodeId, Packet,
    PacketStatus, PathLedger, EVENT_LOG_HEADER,
};
use crate::observation::{merge_pack, ObservationMode, ObservationScope, ProfileStore};
use crate::predictor::{Normalization, PredictorConfig};
use crate::seed::derive_seed;
use crate::strategies::{
    lowest_bid, HoldContext, HoldDecision, NodeContext, Strategy, StrategySpec,
};
use crate::topology::{churn, view_of, HopTable, NodeView, TopologyGraph};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GameConfig {
    pub budget: Money,
    pub fine: Money,
    pub ttl: u32,
    pub packets_total: u64,
    /// Packets injected per round.
    pub injection_rate: u64,
    pub observation: ObservationMode,
    /// Topology view radius used when observation is restricted.
    pub view_radius: u32,
    pub forced_bid: bool,
    pub fine_mode: FineMode,
    /// Per-round edge toggle probability.
    pub churn: f64,
    pub seed: u64,
    pub predictor: PredictorConfig,
}

impl Default for GameConfig {
    fn default() -> Self {
        GameConfig {
            budget: Money(100),
            fine: Money(200),
            ttl: 8,
            packets_total: 100,
            injection_rate: 5,
            observation: ObservationMode::Global,
            view_radius: 2,
            forced_bid: false,
            fine_mode: FineMode::PathSplit,
            churn: 0.0,
            seed: 42,
            predictor: PredictorConfig::default(),
        }
    }
}

impl GameConfig {
    pub fn validate(&self) -> Result<(), EngineError> {
        let bad = |m: &str| Err(EngineError::Config(m.to_string()));
        if self.budget < Money(1) {
            return bad("budget must be at least 1");
        }
        if self.fine.is_negative() {
            return bad("fine must be non-negative");
        }
        if self.ttl < 1 {
            return bad("ttl must be at least 1");
        }
        if self.packets_total < 1 || self.injection_rate < 1 {
            return bad("packets_total and injection_rate must be at least 1");
        }
        if !(0.0..=1.0).contains(&self.churn) {
            return bad("churn must lie in [0, 1]");
        }
        if let ObservationMode::Khop(0) = self.observation {
            return bad("khop radius must be at least 1");
        }
        if self.view_radius < 1 {
            return bad("view_radius must be at least 1");
        }
        if self.predictor.epsilon < 0.0 || self.predictor.min_bid_floor < Money(1) {
            return bad("predictor epsilon must be >= 0 and min_bid_floor >= 1");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EngineError {
    #[error("node {0} has no strategy assigned")]
    Unassigned(NodeId),
    #[error("{0} strategy assignments for a graph of {1} nodes")]
    ExtraAssignment(usize, usize),
    #[error("every node is a gateway; no packet destination exists")]
    NoDestination,
    #[error("invalid game configuration: {0}")]
    Config(String),
}

/// Strategy and optional pack for one node.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeSetup {
    pub strategy: StrategySpec,
    pub pack: Option<u32>,
}

impl NodeSetup {
    pub fn new(strategy: StrategySpec) -> Self {
        NodeSetup {
            strategy,
            pack: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct NodeStats {
    /// Packets this node handed to their destination.
    pub delivered: u64,
    /// Packets dropped while this node held them.
    pub dropped: u64,
    pub fines_paid: Money,
    pub earnings: Money,
}

/// Final state of one packet.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PacketRecord {
    pub packet: Packet,
    pub ledger: PathLedger,
    pub drop_reason: Option<DropReason>,
}

struct NodeSlot {
    strategy: Box<dyn Strategy>,
    ctx: NodeContext,
    spec_name: &'static str,
}

pub struct Simulation {
    config: GameConfig,
    graph: TopologyGraph,
    hops: HopTable,
    nodes: Vec<NodeSlot>,
    balances: Vec<Money>,
    stats: Vec<NodeStats>,
    events: Vec<GameEvent>,
    settlements: Vec<SettlementResult>,
    records: Vec<PacketRecord>,
    packs: BTreeMap<u32, Vec<NodeId>>,
    destinations: Vec<NodeId>,
    round: u64,
    seq: u32,
    injected: u64,
}

/// Everything a finished run produced.
#[derive(Debug, Clone)]
pub struct SimulationOutcome {
    pub events: Vec<GameEvent>,
    pub balances: Vec<Money>,
    pub stats: Vec<NodeStats>,
    pub strategy_names: Vec<&'static str>,
    pub settlements: Vec<SettlementResult>,
    pub records: Vec<PacketRecord>,
    pub rounds: u64,
}

impl SimulationOutcome {
    pub fn delivered_total(&self) -> u64 {
        self.records
            .iter()
            .filter(|r| r.ledger.status == PacketStatus::Delivered)
            .count() as u64
    }

    pub fn dropped_total(&self) -> u64 {
        self.records
            .iter()
            .filter(|r| {
                r.ledger.status == PacketStatus::Dropped
                    && r.drop_reason != Some(DropReason::Cancelled)
            })
            .count() as u64
    }

    pub fn event_log(&self) -> String {
        let mut out = String::with_capacity(self.events.len() * 24);
        out.push_str(EVENT_LOG_HEADER);
        out.push('\n');
        for e in &self.events {
            out.push_str(&e.to_line());
            out.push('\n');
        }
        out
    }

    /// `node,strategy,balance,delivered,dropped,fines_paid`.
    pub fn balances_csv(&self) -> String {
        let mut out = String::from("node,strategy,balance,delivered,dropped,fines_paid\n");
        for (i, (b, s)) in self.balances.iter().zip(&self.stats).enumerate() {
            writeln!(
                out,
                "{},{},{},{},{},{}",
                i, self.strategy_names[i], b, s.delivered, s.dropped, s.fines_paid
            )
            .unwrap();
        }
        out
    }
}

impl Simulation {
    pub fn new(
        config: GameConfig,
        graph: TopologyGraph,
        assignment: Vec<NodeSetup>,
    ) -> Result<Self, EngineError> {
        config.validate()?;
        let n = graph.node_count();
        if assignment.len() < n {
            return Err(EngineError::Unassigned(NodeId(assignment.len() as u32)));
        }
        if assignment.len() > n {
            return Err(EngineError::ExtraAssignment(assignment.len(), n));
        }
        let destinations: Vec<NodeId> = graph.nodes().filter(|&v| !graph.is_gateway(v)).collect();
        if destinations.is_empty() {
            return Err(EngineError::NoDestination);
        }
        let mut packs: BTreeMap<u32, Vec<NodeId>> = BTreeMap::new();
        for (i, setup) in assignment.iter().enumerate() {
            if let Some(p) = setup.pack {
                packs.entry(p).or_default().push(NodeId(i as u32));
            }
        }
        let norm = Normalization {
            budget: config.budget,
            ttl: config.ttl,
        };
        let nodes = assignment
            .into_iter()
            .enumerate()
            .map(|(i, setup)| {
                let id = NodeId(i as u32);
                let view = make_view(&graph, id, &config);
                let scope = ObservationScope {
                    mode: config.observation,
                    owner: id,
                };
                let rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, "node", i as u64));
                let mut ctx = NodeContext::new(
                    id,
                    view,
                    scope,
                    config.predictor.clone(),
                    norm,
                    setup.pack,
                    rng,
                );
                if let Some(p) = setup.pack {
                    ctx.pack_mates = packs[&p].iter().copied().filter(|&m| m != id).collect();
                }
                NodeSlot {
                    strategy: setup.strategy.build(),
                    ctx,
                    spec_name: setup.strategy.name(),
                }
            })
            .collect();
        Ok(Simulation {
            hops: HopTable::new(&graph),
            graph,
            nodes,
            balances: vec![Money::ZERO; n],
            stats: vec![NodeStats::default(); n],
            events: Vec::new(),
            settlements: Vec::new(),
            records: Vec::new(),
            packs,
            destinations,
            round: 0,
            seq: 0,
            injected: 0,
            config,
        })
    }

    pub fn config(&self) -> &GameConfig {
        &self.config
    }

    pub fn graph(&self) -> &TopologyGraph {
        &self.graph
    }

    pub fn hops(&self) -> &HopTable {
        &self.hops
    }

    pub fn round(&self) -> u64 {
        self.round
    }

    pub fn balances(&self) -> &[Money] {
        &self.balances
    }

    pub fn events(&self) -> &[GameEvent] {
        &self.events
    }

    pub fn settlements(&self) -> &[SettlementResult] {
        &self.settlements
    }

    pub fn records(&self) -> &[PacketRecord] {
        &self.records
    }

    pub fn context(&self, node: NodeId) -> &NodeContext {
        &self.nodes[node.index()].ctx
    }

    pub fn profiles(&self, node: NodeId) -> &ProfileStore {
        &self.nodes[node.index()].ctx.profiles
    }

    pub fn is_finished(&self) -> bool {
        self.injected >= self.config.packets_total
    }

    /// Plays one round: injects and resolves this round's packets, merges
    /// pack ledgers, then applies churn for the next round. Returns false
    /// once every packet has been played.
    pub fn step_round(&mut self) -> bool {
        if self.is_finished() {
            return false;
        }
        self.seq = 0;
        for slot in &mut self.nodes {
            slot.ctx.round = self.round;
        }
        let batch = self
            .config
            .injection_rate
            .min(self.config.packets_total - self.injected);
        for _ in 0..batch {
            let packet = self.make_packet(self.injected);
            self.injected += 1;
            self.play_packet(packet);
        }
        self.merge_packs();
        self.round += 1;
        if self.config.churn > 0.0 && !self.is_finished() {
            self.graph = churn(
                &self.graph,
                self.config.churn,
                derive_seed(self.config.seed, "churn", self.round),
            );
            self.hops = HopTable::new(&self.graph);
            for slot in &mut self.nodes {
                slot.ctx.view = make_view(&self.graph, slot.ctx.id, &self.config);
            }
        }
        true
    }

    pub fn run(mut self) -> SimulationOutcome {
        while self.step_round() {}
        self.finish()
    }

    pub fn finish(self) -> SimulationOutcome {
        SimulationOutcome {
            strategy_names: self.nodes.iter().map(|s| s.spec_name).collect(),
            events: self.events,
            balances: self.balances,
            stats: self.stats,
            settlements: self.settlements,
            records: self.records,
            rounds: self.round,
        }
    }

    fn make_packet(&self, id: u64) -> Packet {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(self.config.seed, "packet", id));
        let dest = self.destinations[rng.gen_range(0..self.destinations.len())];
        Packet::new(
            id,
            dest,
            self.config.budget,
            self.config.fine,
            self.config.ttl,
        )
        .expect("validated config")
    }

    fn emit(&mut self, packet_id: u64, kind: EventKind) {
        let event = GameEvent {
            round: self.round,
            seq: self.seq,
            packet_id,
            kind,
        };
        self.seq += 1;
        for slot in &mut self.nodes {
            if slot.ctx.observe(&event, &self.hops) {
                slot.strategy.on_event(&event, &mut slot.ctx);
            }
        }
        self.events.push(event);
    }

    fn play_packet(&mut self, packet: Packet) {
        let dest = packet.destination;
        let mut ledger = PathLedger::new(packet.id, packet.budget);
        let mut holder = NodeId::BACKBONE;
        let mut incoming = packet.budget;
        let mut ttl = packet.ttl;
        loop {
            let hop_distance = self.hops.get(holder, dest);
            let ceiling = if holder.is_backbone() {
                packet.budget
            } else {
                let hold = HoldContext {
                    packet: &packet,
                    ledger: &ledger,
                    incoming,
                    own_distance: hop_distance,
                    fine_mode: self.config.fine_mode,
                };
                let slot = &mut self.nodes[holder.index()];
                if slot.strategy.on_hold(&hold, &mut slot.ctx) == HoldDecision::Drop {
                    return self.drop_packet(packet, ledger, DropReason::Deliberate);
                }
                if self.graph.has_edge(holder, dest) {
                    return self.deliver(packet, ledger);
                }
                if ttl == 0 {
                    return self.drop_packet(packet, ledger, DropReason::Ttl);
                }
                if hop_distance.is_none() {
                    return self.drop_packet(packet, ledger, DropReason::Unreachable);
                }
                slot.strategy
                    .announce_ceiling(&hold, &mut slot.ctx)
                    .clamp_to(Money::ZERO, incoming)
            };

            let eligible: Vec<NodeId> = self
                .graph
                .neighbors(holder)
                .into_iter()
                .filter(|&v| !ledger.contains(v) && v != dest)
                .collect();
            let request = AuctionRequest {
                packet_id: packet.id,
                destination: dest,
                ceiling,
                fine: packet.fine,
                ttl_remaining: ttl,
                holder,
                incoming,
                hop_distance,
                eligible_bidders: eligible.len() as u32,
                forced: self.config.forced_bid,
            };
            self.emit(
                packet.id,
                EventKind::AuctionAnnounced {
                    holder,
                    ceiling,
                    incoming,
                    hop_distance,
                    ttl_remaining: ttl,
                },
            );

            // sealed: every decision is taken before any bid is revealed
            let mut bids = Vec::new();
            for &bidder in &eligible {
                let slot = &mut self.nodes[bidder.index()];
                let decision = slot.strategy.on_auction(&request, &mut slot.ctx);
                let amount = match decision {
                    Some(a) => a,
                    None if request.forced => ceiling,
                    None => continue,
                };
                let bid = Bid { bidder, amount };
                if validate_bid(&request, &bid, &ledger, |a, b| self.graph.has_edge(a, b)).is_ok() {
                    bids.push(bid);
                }
            }
            for b in &bids {
                self.emit(
                    packet.id,
                    EventKind::BidPlaced {
                        bidder: b.bidder,
                        holder,
                        amount: b.amount,
                    },
                );
            }

            let winner = if bids.is_empty() {
                None
            } else if holder.is_backbone() {
                Some(lowest_bid(&bids))
            } else {
                let slot = &mut self.nodes[holder.index()];
                let choice = slot.strategy.choose_winner(&request, &bids, &mut slot.ctx);
                Some(if bids.contains(&choice) {
                    choice
                } else {
                    lowest_bid(&bids)
                })
            };
            let Some(winner) = winner else {
                let reason = if ledger.is_empty() {
                    DropReason::Cancelled
                } else {
                    DropReason::NoWinner
                };
                return self.drop_packet(packet, ledger, reason);
            };

            ledger
                .push(winner.bidder, winner.amount)
                .expect("validated bid keeps the ledger consistent");
            ttl -= 1;
            self.emit(
                packet.id,
                EventKind::BidWon {
                    winner: winner.bidder,
                    holder,
                    amount: winner.amount,
                },
            );
            holder = winner.bidder;
            incoming = winner.amount;
        }
    }

    fn deliver(&mut self, packet: Packet, mut ledger: PathLedger) {
        ledger.status = PacketStatus::Delivered;
        let holder = ledger.holder().expect("delivering holder is on the path");
        let result = settle_delivery(&ledger);
        self.emit(
            packet.id,
            EventKind::Delivered {
                holder,
                destination: packet.destination,
                first_promise: result.expected_total,
            },
        );
        self.stats[holder.index()].delivered += 1;
        for &(payee, amount) in &result.deltas {
            if amount != Money::ZERO {
                self.emit(packet.id, EventKind::Payment { payee, amount });
            }
            self.balances[payee.index()] += amount;
            self.stats[payee.index()].earnings += amount;
        }
        self.settlements.push(result);
        self.records.push(PacketRecord {
            packet,
            ledger,
            drop_reason: None,
        });
    }

    fn drop_packet(&mut self, packet: Packet, mut ledger: PathLedger, reason: DropReason) {
        ledger.status = PacketStatus::Dropped;
        let dropper = ledger.holder().unwrap_or(NodeId::BACKBONE);
        let fine = if ledger.is_empty() {
            Money::ZERO
        } else {
            packet.fine
        };
        self.emit(
            packet.id,
            EventKind::Dropped {
                dropper,
                fine,
                reason,
            },
        );
        if !dropper.is_backbone() {
            self.stats[dropper.index()].dropped += 1;
        }
        let result = settle_drop(&ledger, fine, self.config.fine_mode);
        for &(payer, delta) in &result.deltas {
            if delta != Money::ZERO {
                self.emit(
                    packet.id,
                    EventKind::FineAssessed {
                        payer,
                        share: -delta,
                    },
                );
            }
            self.balances[payer.index()] += delta;
            self.stats[payer.index()].fines_paid -= delta;
        }
        self.settlements.push(result);
        self.records.push(PacketRecord {
            packet,
            ledger,
            drop_reason: Some(reason),
        });
    }

    fn merge_packs(&mut self) {
        for members in self.packs.values() {
            if members.len() < 2 {
                continue;
            }
            let mut stores: Vec<ProfileStore> = members
                .iter()
                .map(|m| std::mem::take(&mut self.nodes[m.index()].ctx.profiles))
                .collect();
            {
                let mut refs: Vec<&mut ProfileStore> = stores.iter_mut().collect();
                merge_pack(&mut refs);
            }
            for (m, store) in members.iter().zip(stores) {
                self.nodes[m.index()].ctx.profiles = store;
            }
        }
    }
}

fn make_view(g: &TopologyGraph, id: NodeId, config: &GameConfig) -> NodeView {
    match config.observation {
        ObservationMode::Global => NodeView::full(g, id),
        ObservationMode::Khop(_) => view_of(g, id, config.view_radius),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::replay_balances;
    use crate::strategies::WolfPackParams;
    use crate::topology::{generate, TopologyKind};

    fn all(n: usize, spec: StrategySpec) -> Vec<NodeSetup> {
        vec![NodeSetup::new(spec); n]
    }

    fn line(n: usize) -> TopologyGraph {
        generate(&TopologyKind::Line { n }, &[0], 0).unwrap()
    }

    #[test]
    fn smallest_game_delivers() {
        let cfg = GameConfig {
            packets_total: 1,
            injection_rate: 1,
            ..Default::default()
        };
        let out = Simulation::new(cfg, line(2), all(2, StrategySpec::Fair))
            .unwrap()
            .run();
        assert_eq!(out.delivered_total(), 1);
        let kinds: Vec<&str> = out.events.iter().map(|e| e.kind.tag()).collect();
        assert_eq!(kinds, vec!["auction", "bid", "won", "delivered", "payment"]);
        assert_eq!(out.balances, vec![Money(100), Money(0)]);
    }

    #[test]
    fn ttl_exhaustion_drops_and_fines() {
        // gateway 0, destinations 1..3; only destination 1 is reachable with ttl 1
        let cfg = GameConfig {
            ttl: 1,
            packets_total: 30,
            ..Default::default()
        };
        let out = Simulation::new(cfg, line(4), all(4, StrategySpec::Fair))
            .unwrap()
            .run();
        for r in &out.records {
            if r.packet.destination == NodeId(1) {
                assert_eq!(r.ledger.status, PacketStatus::Delivered);
            } else {
                assert_eq!(r.drop_reason, Some(DropReason::Ttl));
                assert!(r.ledger.len() <= 1);
            }
        }
        assert!(out.dropped_total() > 0);
        assert!(out
            .events
            .iter()
            .any(|e| matches!(e.kind, EventKind::FineAssessed { .. })));
    }

    #[test]
    fn settlement_events_replay_to_balances() {
        let g = generate(
            &TopologyKind::Geometric {
                n: 12,
                radius: 0.45,
            },
            &[0, 1],
            5,
        )
        .unwrap();
        let mut assignment = Vec::new();
        for i in 0..12 {
            assignment.push(NodeSetup::new(match i % 4 {
                0 => StrategySpec::Wolfpack(WolfPackParams::default()),
                1 => StrategySpec::Random,
                2 => StrategySpec::AlwaysOne,
                _ => StrategySpec::Fair,
            }));
        }
        let cfg = GameConfig {
            packets_total: 80,
            forced_bid: true,
            ..Default::default()
        };
        let out = Simulation::new(cfg, g, assignment).unwrap().run();
        assert_eq!(replay_balances(&out.events, 12), out.balances);
        for s in &out.settlements {
            s.check_conservation().unwrap();
        }
        // the text log replays too
        let parsed = crate::model::parse_event_log(&out.event_log()).unwrap();
        assert_eq!(parsed, out.events);
    }

    #[test]
    fn always_abstaining_nodes_stay_at_zero() {
        // snipers never hold a packet unless next to the destination
        let g = generate(&TopologyKind::Grid { rows: 3, cols: 3 }, &[0], 0).unwrap();
        let mut assignment = all(9, StrategySpec::Fair);
        assignment[4] = NodeSetup::new(StrategySpec::Sniper(Default::default()));
        let cfg = GameConfig {
            packets_total: 60,
            ..Default::default()
        };
        let out = Simulation::new(cfg, g, assignment).unwrap().run();
        assert!(out.balances[4] >= Money::ZERO);
        assert_eq!(out.stats[4].fines_paid, Money::ZERO);
    }

    #[test]
    fn first_auction_without_bids_cancels() {
        // single gateway that never bids far from the destination
        let mut assignment = all(4, StrategySpec::Fair);
        assignment[0] = NodeSetup::new(StrategySpec::Sniper(Default::default()));
        let cfg = GameConfig {
            packets_total: 20,
            ..Default::default()
        };
        let out = Simulation::new(cfg, line(4), assignment).unwrap().run();
        for r in &out.records {
            if r.packet.destination != NodeId(1) {
                assert_eq!(r.drop_reason, Some(DropReason::Cancelled));
                assert!(r.ledger.is_empty());
            }
        }
        assert!(out.balances.iter().all(|b| *b >= Money::ZERO));
        assert!(!out
            .events
            .iter()
            .any(|e| matches!(e.kind, EventKind::FineAssessed { .. })));
    }

    #[test]
    fn configuration_errors() {
        let g = line(3);
        assert_eq!(
            Simulation::new(GameConfig::default(), g.clone(), all(2, StrategySpec::Fair)).err(),
            Some(EngineError::Unassigned(NodeId(2)))
        );
        let bad = GameConfig {
            injection_rate: 0,
            ..Default::default()
        };
        assert!(matches!(
            Simulation::new(bad, g.clone(), all(3, StrategySpec::Fair)),
            Err(EngineError::Config(_))
        ));
        let mut every_gw = g;
        every_gw.set_gateways(&[0, 1, 2]).unwrap();
        assert_eq!(
            Simulation::new(GameConfig::default(), every_gw, all(3, StrategySpec::Fair)).err(),
            Some(EngineError::NoDestination)
        );
    }

    #[test]
    fn same_seed_same_log() {
        let g = generate(&TopologyKind::Geometric { n: 15, radius: 0.4 }, &[0], 3).unwrap();
        let assignment: Vec<_> = (0..15)
            .map(|i| {
                NodeSetup::new(if i % 2 == 0 {
                    StrategySpec::Random
                } else {
                    StrategySpec::Wolfpack(WolfPackParams::default())
                })
            })
            .collect();
        let cfg = GameConfig {
            churn: 0.05,
            packets_total: 50,
            ..Default::default()
        };
        let a = Simulation::new(cfg.clone(), g.clone(), assignment.clone())
            .unwrap()
            .run();
        let b = Simulation::new(cfg, g, assignment).unwrap().run();
        assert_eq!(a.event_log(), b.event_log());
        assert_eq!(a.balances_csv(), b.balances_csv());
    }

    #[test]
    fn dropper_only_fines() {
        let cfg = GameConfig {
            ttl: 2,
            packets_total: 40,
            fine_mode: FineMode::DropperOnly,
            ..Default::default()
        };
        let out = Simulation::new(cfg, line(6), all(6, StrategySpec::Fair))
            .unwrap()
            .run();
        for (r, s) in out.records.iter().zip(&out.settlements) {
            if r.ledger.status == PacketStatus::Dropped && !r.ledger.is_empty() {
                let last = *s.deltas.last().unwrap();
                assert_eq!(last.1, Money(-200));
                assert!(s.deltas[..s.deltas.len() - 1]
                    .iter()
                    .all(|d| d.1 == Money::ZERO));
            }
        }
    }
}
