use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{HoldContext, NodeContext, Strategy, WolfPack, WolfPackParams};
use crate::model::{AuctionRequest, Bid, Money};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SniperParams {
    /// Upper end of the random small bid used before any history exists.
    pub small_cap: i64,
}

impl Default for SniperParams {
    fn default() -> Self {
        SniperParams { small_cap: 5 }
    }
}

/// Bids only when the destination is a direct neighbour, so every packet
/// it takes is delivered without a further auction. Elsewhere it lets the
/// auction time out, or asks for the ceiling when it is forced to bid.
/// Packets it does end up forwarding go through the Wolf-pack chooser.
#[derive(Debug, Clone)]
pub struct LastHopSniper {
    params: SniperParams,
    chooser: WolfPack,
}

impl LastHopSniper {
    pub fn new(params: SniperParams) -> Self {
        let chooser = WolfPack::new(WolfPackParams {
            sabotage_enabled: false,
            ..WolfPackParams::default()
        });
        LastHopSniper { params, chooser }
    }
}

/// Undercut bid for a packet one hop from its destination.
pub(super) fn last_hop_bid(
    request: &AuctionRequest,
    ctx: &mut NodeContext,
    small_cap: i64,
) -> Money {
    if ctx.history.is_empty() {
        let cap = small_cap.max(1);
        Money(ctx.rng.gen_range(1..=cap)).min(request.ceiling)
    } else {
        ctx.predict(request)
    }
}

impl Strategy for LastHopSniper {
    fn name(&self) -> &'static str {
        "sniper"
    }

    fn on_auction(&mut self, request: &AuctionRequest, ctx: &mut NodeContext) -> Option<Money> {
        if ctx.adjacent_to(request.destination) {
            Some(last_hop_bid(request, ctx, self.params.small_cap))
        } else if request.forced {
            Some(request.ceiling)
        } else {
            None
        }
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

#[cfg(test)]
mod tests {
    use super::*;
    use crate::predictor::BidHistoryPoint;
    use crate::strategies::testing::{ctx_on, request};
    use crate::topology::{generate, TopologyKind};

    #[test]
    fn adjacent_bid_follows_predictor() {
        let g = generate(&TopologyKind::Line { n: 6 }, &[0], 0).unwrap();
        let mut ctx = ctx_on(&g, 3);
        let cfg = ctx.predictor.clone();
        for bid in [40, 35] {
            ctx.history.record(
                BidHistoryPoint {
                    max_allowed: Money(80),
                    hop_count: 2,
                    observed_bid: Money(bid),
                    round: 0,
                },
                &cfg,
            );
        }
        assert_eq!(ctx.predict(&request(2, 4, 80, Some(2), 1)), Money(34));
        let mut s = LastHopSniper::new(SniperParams::default());
        assert_eq!(
            s.on_auction(&request(2, 4, 80, Some(2), 1), &mut ctx),
            Some(Money(34))
        );
    }

    #[test]
    fn adjacent_without_history_bids_small() {
        let g = generate(&TopologyKind::Line { n: 6 }, &[0], 0).unwrap();
        let mut ctx = ctx_on(&g, 3);
        let mut s = LastHopSniper::new(SniperParams { small_cap: 3 });
        for _ in 0..20 {
            let b = s
                .on_auction(&request(2, 4, 80, Some(2), 1), &mut ctx)
                .unwrap();
            assert!((1..=3).contains(&b.get()));
        }
    }

    #[test]
    fn far_destination_abstains_unless_forced() {
        let g = generate(&TopologyKind::Line { n: 8 }, &[0], 0).unwrap();
        let mut ctx = ctx_on(&g, 1);
        let mut s = LastHopSniper::new(SniperParams::default());
        let mut req = request(0, 4, 90, Some(4), 1);
        assert_eq!(s.on_auction(&req, &mut ctx), None);
        req.forced = true;
        assert_eq!(s.on_auction(&req, &mut ctx), Some(Money(90)));
    }
}
