use rand::Rng;

use super::{lowest_bid, HoldContext, NodeContext, Strategy, WolfPack, WolfPackParams};
use crate::model::{AuctionRequest, Bid, Money};
use crate::observation::fair_ceiling;

/// Bids 1 on everything; keeps the Wolf-pack logic for picking who
/// receives packets it already holds.
#[derive(Debug, Clone)]
pub struct AlwaysOne {
    chooser: WolfPack,
}

impl Default for AlwaysOne {
    fn default() -> Self {
        AlwaysOne {
            chooser: WolfPack::new(WolfPackParams {
                sabotage_enabled: false,
                ..WolfPackParams::default()
            }),
        }
    }
}

impl Strategy for AlwaysOne {
    fn name(&self) -> &'static str {
        "always_one"
    }

    fn on_auction(&mut self, request: &AuctionRequest, _ctx: &mut NodeContext) -> Option<Money> {
        (request.ceiling >= Money(1)).then_some(Money(1))
    }

    fn choose_winner(
        &mut self,
        request: &AuctionRequest,
        bids: &[Bid],
        ctx: &mut NodeContext,
    ) -> Bid {
        self.chooser.choose_winner(request, bids, ctx)
    }

    fn announce_ceiling(&mut self, hold: &HoldContext<'_>, ctx: &mut NodeContext) -> Money {
        self.chooser.announce_ceiling(hold, ctx)
    }
}

/// Always asks for the ceiling, which loses any lowest-bid auction with a
/// cheaper competitor.
#[derive(Debug, Clone, Copy, Default)]
pub struct MaxBid;

impl Strategy for MaxBid {
    fn name(&self) -> &'static str {
        "max_bid"
    }

    fn on_auction(&mut self, request: &AuctionRequest, _ctx: &mut NodeContext) -> Option<Money> {
        Some(request.ceiling)
    }

    fn choose_winner(
        &mut self,
        _request: &AuctionRequest,
        bids: &[Bid],
        _ctx: &mut NodeContext,
    ) -> Bid {
        lowest_bid(bids)
    }

    fn announce_ceiling(&mut self, hold: &HoldContext<'_>, _ctx: &mut NodeContext) -> Money {
        hold.own_distance
            .map_or(hold.incoming, |d| fair_ceiling(hold.incoming, d))
    }
}

/// Uniform bids in `[0, ceiling]` and a uniformly random winner.
#[derive(Debug, Clone, Copy, Default)]
pub struct RandomBaseline;

impl Strategy for RandomBaseline {
    fn name(&self) -> &'static str {
        "random"
    }

    fn on_auction(&mut self, request: &AuctionRequest, ctx: &mut NodeContext) -> Option<Money> {
        Some(Money(ctx.rng.gen_range(0..=request.ceiling.get().max(0))))
    }

    fn choose_winner(
        &mut self,
        _request: &AuctionRequest,
        bids: &[Bid],
        ctx: &mut NodeContext,
    ) -> Bid {
        bids[ctx.rng.gen_range(0..bids.len())]
    }

    fn announce_ceiling(&mut self, hold: &HoldContext<'_>, _ctx: &mut NodeContext) -> Money {
        hold.own_distance
            .map_or(hold.incoming, |d| fair_ceiling(hold.incoming, d))
    }
}
