//! Wolf-pack: help poor and misbehaving nodes, starve and sabotage the
//! rich ones, and share observations with pack mates.
//!
//! Next-hop choice ranks the bidders on four lists (estimated profit,
//! route length through the bidder, bid amount, fairness deviation) and
//! combines the positions with per-list weights. Only orderings matter,
//! so any monotone rescaling of an estimate leaves the choice unchanged.

use serde::{Deserialize, Serialize};

use super::sniper::last_hop_bid;
use super::{HoldContext, HoldDecision, NodeContext, Strategy};
use crate::engine::settlement::dropper_share;
use crate::model::{AuctionRequest, Bid, Money, NodeId};
use crate::observation::{fair_ceiling, ProfileStore};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WolfPackParams {
    pub w_rich: f64,
    pub w_topo: f64,
    pub w_bid: f64,
    pub w_fair: f64,
    /// Rank high fairness deviation first (prefer bad nodes). Off inverts the list.
    pub prefer_unfair: bool,
    pub sabotage_enabled: bool,
    /// Fraction of known profiles, from the top, that count as rich.
    pub rich_threshold: f64,
    /// Largest own fine share a sabotage drop may cost.
    pub sabotage_budget: Money,
    /// Bidders dropping more often than this are skipped.
    pub drop_rate_cap: f64,
    /// Amount kept above the fair share when announcing.
    pub greed_margin: Money,
    pub small_cap: i64,
}

impl Default for WolfPackParams {
    fn default() -> Self {
        WolfPackParams {
            w_rich: 1.0,
            w_topo: 1.0,
            w_bid: 1.0,
            w_fair: 1.0,
            prefer_unfair: true,
            sabotage_enabled: true,
            rich_threshold: 0.2,
            sabotage_budget: Money(60),
            drop_rate_cap: 0.5,
            greed_margin: Money(1),
            small_cap: 5,
        }
    }
}

impl WolfPackParams {
    pub fn validate(&self) -> Result<(), String> {
        let w = [self.w_rich, self.w_topo, self.w_bid, self.w_fair];
        if w.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return Err("weights must be finite and non-negative".into());
        }
        if w.iter().all(|x| *x == 0.0) {
            return Err("at least one weight must be positive".into());
        }
        if !(self.rich_threshold > 0.0 && self.rich_threshold <= 1.0) {
            return Err("rich_threshold must lie in (0, 1]".into());
        }
        if !(0.0..=1.0).contains(&self.drop_rate_cap) {
            return Err("drop_rate_cap must lie in [0, 1]".into());
        }
        if self.greed_margin.is_negative() || self.sabotage_budget.is_negative() {
            return Err("greed_margin and sabotage_budget must be non-negative".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct WolfPack {
    params: WolfPackParams,
}

/// Competition rank: the number of entries strictly better than each one.
fn competition_ranks<K: Ord>(keys: &[K]) -> Vec<usize> {
    keys.iter()
        .map(|k| keys.iter().filter(|o| *o < k).count())
        .collect()
}

impl WolfPack {
    pub fn new(params: WolfPackParams) -> Self {
        WolfPack { params }
    }

    pub fn params(&self) -> &WolfPackParams {
        &self.params
    }

    /// Weighted rank-sum selection over the given profiles and route
    /// distances. Separated from the context so it can be exercised
    /// directly.
    pub fn select(
        &self,
        bids: &[Bid],
        profiles: &ProfileStore,
        distance: impl Fn(NodeId) -> Option<u32>,
    ) -> Bid {
        assert!(!bids.is_empty(), "non-empty bid set");
        let p = &self.params;
        let trusted: Vec<Bid> = bids
            .iter()
            .copied()
            .filter(|b| {
                profiles.profile(b.bidder).map_or(0.0, |pr| pr.drop_rate()) <= p.drop_rate_cap
            })
            .collect();
        let pool = if trusted.is_empty() {
            bids.to_vec()
        } else {
            trusted
        };

        let rich = competition_ranks(
            &pool
                .iter()
                .map(|b| profiles.estimated_profit(b.bidder))
                .collect::<Vec<_>>(),
        );
        let topo = competition_ranks(
            &pool
                .iter()
                .map(|b| distance(b.bidder).unwrap_or(u32::MAX))
                .collect::<Vec<_>>(),
        );
        let amount = competition_ranks(&pool.iter().map(|b| b.amount).collect::<Vec<_>>());
        let fairness: Vec<i128> = pool
            .iter()
            .map(|b| {
                let dev = profiles
                    .profile(b.bidder)
                    .map_or(0, |pr| pr.fairness_deviation.0) as i128;
                if p.prefer_unfair {
                    -dev
                } else {
                    dev
                }
            })
            .collect();
        let fair = competition_ranks(&fairness);

        let score = |i: usize| {
            p.w_rich * rich[i] as f64
                + p.w_topo * topo[i] as f64
                + p.w_bid * amount[i] as f64
                + p.w_fair * fair[i] as f64
        };
        let best = (0..pool.len())
            .min_by(|&a, &b| {
                score(a)
                    .total_cmp(&score(b))
                    .then(pool[a].amount.cmp(&pool[b].amount))
                    .then(pool[a].bidder.cmp(&pool[b].bidder))
            })
            .unwrap();
        pool[best]
    }

    /// True when `node`'s estimated profit is positive and within the top
    /// `rich_threshold` share of known, non-backbone profiles.
    fn is_rich(&self, node: NodeId, profiles: &ProfileStore) -> bool {
        let known: Vec<Money> = profiles
            .profiles()
            .filter(|p| !p.subject.is_backbone())
            .map(|p| p.estimated_profit)
            .collect();
        let mine = profiles.estimated_profit(node);
        if known.is_empty() || mine <= Money::ZERO {
            return false;
        }
        let slots = (self.params.rich_threshold * known.len() as f64).ceil() as usize;
        known.iter().filter(|&&x| x > mine).count() < slots.max(1)
    }
}

impl Strategy for WolfPack {
    fn name(&self) -> &'static str {
        "wolfpack"
    }

    fn on_auction(&mut self, request: &AuctionRequest, ctx: &mut NodeContext) -> Option<Money> {
        ctx.route_distance(ctx.id, request.destination, request.hop_distance)?;
        if ctx.adjacent_to(request.destination) {
            return Some(last_hop_bid(request, ctx, self.params.small_cap));
        }
        if request.eligible_bidders == 1 {
            // nobody else can take it
            return Some(request.ceiling);
        }
        Some(ctx.predict(request))
    }

    fn choose_winner(
        &mut self,
        request: &AuctionRequest,
        bids: &[Bid],
        ctx: &mut NodeContext,
    ) -> Bid {
        let ctx = &*ctx;
        self.select(bids, &ctx.profiles, |b| {
            ctx.route_distance(b, request.destination, request.hop_distance)
        })
    }

    fn announce_ceiling(&mut self, hold: &HoldContext<'_>, _ctx: &mut NodeContext) -> Money {
        match hold.own_distance {
            Some(d) => (fair_ceiling(hold.incoming, d) - self.params.greed_margin).max(Money::ZERO),
            None => hold.incoming,
        }
    }

    fn on_hold(&mut self, hold: &HoldContext<'_>, ctx: &mut NodeContext) -> HoldDecision {
        if !self.params.sabotage_enabled {
            return HoldDecision::Forward;
        }
        let share = dropper_share(hold.packet.fine, hold.ledger.len(), hold.fine_mode);
        if share > self.params.sabotage_budget {
            return HoldDecision::Forward;
        }
        let target = hold
            .ledger
            .hops()
            .iter()
            .map(|&(n, _)| n)
            .filter(|&n| n != ctx.id && !ctx.is_pack_mate(n))
            .any(|n| self.is_rich(n, &ctx.profiles));
        if target {
            HoldDecision::Drop
        } else {
            HoldDecision::Forward
        }
    }
}
