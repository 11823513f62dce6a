use super::{HoldContext, NodeContext, Strategy};
use crate::model::{AuctionRequest, Bid, Money};
use crate::observation::fair_ceiling;

/// Equal-split baseline. Holders announce the equal-split ceiling, so a
/// fair bidder asks for exactly that ceiling; winners are chosen along the
/// shortest path.
#[derive(Debug, Clone, Copy, Default)]
pub struct FairSplit;

impl Strategy for FairSplit {
    fn name(&self) -> &'static str {
        "fair"
    }

    fn on_auction(&mut self, request: &AuctionRequest, ctx: &mut NodeContext) -> Option<Money> {
        ctx.route_distance(ctx.id, request.destination, request.hop_distance)?;
        Some(request.ceiling)
    }

    fn choose_winner(
        &mut self,
        request: &AuctionRequest,
        bids: &[Bid],
        ctx: &mut NodeContext,
    ) -> Bid {
        *bids
            .iter()
            .min_by_key(|b| {
                let d = ctx
                    .route_distance(b.bidder, request.destination, request.hop_distance)
                    .unwrap_or(u32::MAX);
                (d, b.amount, b.bidder)
            })
            .expect("non-empty bid set")
    }

    fn announce_ceiling(&mut self, hold: &HoldContext<'_>, _ctx: &mut NodeContext) -> Money {
        match hold.own_distance {
            Some(d) => fair_ceiling(hold.incoming, d),
            None => hold.incoming,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::FineMode;
    use crate::model::{NodeId, Packet, PathLedger};
    use crate::strategies::testing::{ctx_on, request};
    use crate::topology::{generate, TopologyGraph, TopologyKind};

    fn line(n: usize) -> TopologyGraph {
        generate(&TopologyKind::Line { n }, &[0], 0).unwrap()
    }

    #[test]
    fn bids_the_announced_ceiling() {
        let g = line(6);
        let mut ctx = ctx_on(&g, 1);
        // own distance 3 to node 4
        assert_eq!(
            FairSplit.on_auction(&request(0, 4, 90, Some(4), 1), &mut ctx),
            Some(Money(90))
        );
        // adjacent to the destination: the whole ceiling is the one-node split
        assert_eq!(
            FairSplit.on_auction(&request(0, 2, 40, Some(2), 1), &mut ctx),
            Some(Money(40))
        );
    }

    #[test]
    fn abstains_without_route() {
        let g = line(8);
        let mut ctx = ctx_on(&g, 1);
        assert_eq!(
            FairSplit.on_auction(&request(0, 7, 90, None, 1), &mut ctx),
            None
        );
    }

    #[test]
    fn announces_equal_split() {
        let g = line(6);
        let mut ctx = ctx_on(&g, 1);
        let packet = Packet::new(1, NodeId(4), Money(100), Money(200), 5).unwrap();
        let ledger = PathLedger::new(1, Money(100));
        let hold = HoldContext {
            packet: &packet,
            ledger: &ledger,
            incoming: Money(90),
            own_distance: Some(3),
            fine_mode: FineMode::PathSplit,
        };
        assert_eq!(FairSplit.announce_ceiling(&hold, &mut ctx), Money(60));
    }

    #[test]
    fn shortest_path_bidder_wins() {
        // 0 - 1 - 2 - 3 and 0 - 4 - 5 - 6 - 3: from 0, bidder 1 is 2 hops from 3, bidder 4 is 3
        let g = TopologyGraph::from_edges(
            7,
            &[(0, 1), (1, 2), (2, 3), (0, 4), (4, 5), (5, 6), (6, 3)],
            &[0],
        )
        .unwrap();
        let mut ctx = ctx_on(&g, 0);
        ctx.view = crate::topology::NodeView::full(&g, NodeId(0));
        let req = request(0, 3, 50, Some(3), 2);
        let bids = [Bid::new(NodeId(4), 30), Bid::new(NodeId(1), 30)];
        assert_eq!(
            FairSplit.choose_winner(&req, &bids, &mut ctx).bidder,
            NodeId(1)
        );
        // even a cheaper bid on the longer route loses
        let bids = [Bid::new(NodeId(4), 10), Bid::new(NodeId(1), 30)];
        assert_eq!(
            FairSplit.choose_winner(&req, &bids, &mut ctx).bidder,
            NodeId(1)
        );
    }
}
