//! Historical bid prediction over the (maximum allowed bid, hop count)
//! plane, and a binary-search prober for when competitors' bids are not
//! observable.

use std::collections::VecDeque;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::Money;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BidHistoryPoint {
    pub max_allowed: Money,
    pub hop_count: u32,
    pub observed_bid: Money,
    pub round: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PredictorConfig {
    /// Neighbourhood radius in the normalized plane.
    pub epsilon: f64,
    pub min_bid_floor: Money,
    pub max_history: usize,
    pub max_age_rounds: u64,
    /// Share of the ceiling bid when no neighbouring history exists.
    pub fallback_fraction: f64,
}

impl Default for PredictorConfig {
    fn default() -> Self {
        PredictorConfig {
            epsilon: 0.1,
            min_bid_floor: Money(1),
            max_history: 500,
            max_age_rounds: 1_000,
            fallback_fraction: 0.5,
        }
    }
}

/// Scale constants for the two axes: the run's budget and TTL.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Normalization {
    pub budget: Money,
    pub ttl: u32,
}

/// Bounded, age-limited history of observed bids, oldest first.
#[derive(Debug, Clone, Default)]
pub struct BidHistory {
    points: VecDeque<BidHistoryPoint>,
    /// Some point was recorded with a round older than its predecessor.
    unordered: bool,
}

impl PartialEq for BidHistory {
    fn eq(&self, other: &Self) -> bool {
        self.points == other.points
    }
}

impl BidHistory {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> impl Iterator<Item = &BidHistoryPoint> {
        self.points.iter()
    }

    /// Appends a point, then evicts down to `max_history` newest points and
    /// drops anything older than `max_age_rounds` relative to the new point.
    pub fn record(&mut self, point: BidHistoryPoint, cfg: &PredictorConfig) {
        if self.points.back().is_some_and(|b| b.round > point.round) {
            self.unordered = true;
        }
        self.points.push_back(point);
        while self.points.len() > cfg.max_history {
            self.points.pop_front();
        }
        self.prune(point.round, cfg);
    }

    pub fn prune(&mut self, now: u64, cfg: &PredictorConfig) {
        let stale = |p: &BidHistoryPoint| now.saturating_sub(p.round) > cfg.max_age_rounds;
        if self.unordered {
            self.points.retain(|p| !stale(p));
        } else {
            while self.points.front().is_some_and(stale) {
                self.points.pop_front();
            }
        }
    }

    /// Undercuts the cheapest similar past bid by one unit.
    pub fn predict_bid(
        &self,
        max_allowed: Money,
        hop_count: u32,
        now: u64,
        norm: Normalization,
        cfg: &PredictorConfig,
    ) -> Money {
        let budget = norm.budget.get().max(1) as f64;
        let ttl = norm.ttl.max(1) as f64;
        let neighbourhood_min = self
            .points
            .iter()
            .filter(|p| now.saturating_sub(p.round) <= cfg.max_age_rounds)
            .filter(|p| {
                let dx = (p.max_allowed.get() - max_allowed.get()) as f64 / budget;
                let dy = (p.hop_count as f64 - hop_count as f64) / ttl;
                (dx * dx + dy * dy).sqrt() <= cfg.epsilon
            })
            .map(|p| p.observed_bid)
            .min();
        let raw = match neighbourhood_min {
            Some(m) => m - Money(1),
            None => Money((max_allowed.get() as f64 * cfg.fallback_fraction).floor() as i64),
        };
        raw.max(cfg.min_bid_floor).min(max_allowed)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("round,max_allowed,hop_count,observed_bid\n");
        for p in &self.points {
            writeln!(
                out,
                "{},{},{},{}",
                p.round, p.max_allowed, p.hop_count, p.observed_bid
            )
            .unwrap();
        }
        out
    }

    /// Loads points from CSV (header optional), applying `record` in file order.
    pub fn from_csv(text: &str, cfg: &PredictorConfig) -> Result<Self, HistoryCsvError> {
        let mut h = BidHistory::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with("round") {
                continue;
            }
            let f: Vec<&str> = line.split(',').collect();
            let bad = || HistoryCsvError { line: i + 1 };
            if f.len() != 4 {
                return Err(bad());
            }
            let num = |s: &str| s.trim().parse::<i64>().map_err(|_| bad());
            let point = BidHistoryPoint {
                round: num(f[0])? as u64,
                max_allowed: Money(num(f[1])?),
                hop_count: num(f[2])? as u32,
                observed_bid: Money(num(f[3])?),
            };
            if point.observed_bid > point.max_allowed || point.observed_bid.is_negative() {
                return Err(bad());
            }
            h.record(point, cfg);
        }
        Ok(h)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid bid history record on line {line}")]
pub struct HistoryCsvError {
    pub line: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AuctionOutcome {
    Won,
    Lost,
}

/// Binary search over a competitor's bid, assuming the lowest bid wins.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ProberState {
    pub lo: Money,
    pub hi: Money,
    pub last_bid: Money,
}

impl ProberState {
    pub fn new(lo: Money, hi: Money) -> Self {
        let (lo, hi) = (lo.min(hi), lo.max(hi));
        ProberState {
            lo,
            hi,
            last_bid: Money((lo.get() + hi.get()).div_euclid(2)),
        }
    }

    pub fn width(&self) -> i64 {
        self.hi.get() - self.lo.get()
    }

    /// Winning means the competitor asked for more, so the bracket moves up.
    pub fn next(self, outcome: AuctionOutcome) -> (ProberState, Money) {
        let (lo, hi) = match outcome {
            AuctionOutcome::Won => (self.last_bid, self.hi),
            AuctionOutcome::Lost => (self.lo, self.last_bid),
        };
        let bid = Money((lo.get() + hi.get()).div_euclid(2));
        (
            ProberState {
                lo,
                hi,
                last_bid: bid,
            },
            bid,
        )
    }
}
