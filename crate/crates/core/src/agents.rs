//! Decision and scoring rules for the three trader kinds.
//!
//! Pair-pattern traders hold at most one share. They open on whichever
//! pattern of their best strategy shows up first and close on the other one.
//! MG-strategy traders and producers act on every step from a lookup table.

use std::fmt;

use rand::Rng;

use crate::market::{strategy_pair_at, strategy_space_size, MgScoreMode, PatternId};

/// Stable identity of a trader. Replacement traders get fresh ids.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TraderId(pub u32);

impl fmt::Display for TraderId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TraderKind {
    PairPattern,
    Mg,
    Producer,
}

impl TraderKind {
    pub const ALL: [TraderKind; 3] = [TraderKind::PairPattern, TraderKind::Mg, TraderKind::Producer];

    pub fn index(self) -> usize {
        match self {
            TraderKind::PairPattern => 0,
            TraderKind::Mg => 1,
            TraderKind::Producer => 2,
        }
    }
}

impl fmt::Display for TraderKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TraderKind::PairPattern => "pair",
            TraderKind::Mg => "mg",
            TraderKind::Producer => "producer",
        })
    }
}

/// Index of the highest score, ties broken uniformly at random.
///
/// Draws from `rng` only when more than one strategy shares the maximum.
pub fn select_best<R: Rng + ?Sized>(scores: impl Iterator<Item = f64> + Clone, rng: &mut R) -> usize {
    let mut best = f64::NEG_INFINITY;
    let mut best_idx = 0;
    let mut ties = 0usize;
    for (i, s) in scores.clone().enumerate() {
        if s > best {
            best = s;
            best_idx = i;
            ties = 1;
        } else if s == best {
            ties += 1;
        }
    }
    if ties <= 1 {
        return best_idx;
    }
    let pick = rng.random_range(0..ties);
    scores
        .enumerate()
        .filter(|&(_, s)| s == best)
        .nth(pick)
        .map(|(i, _)| i)
        .expect("tie index in range")
}

/// Which pattern of a pair occurred.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Leg {
    Buy,
    Sell,
}

impl Leg {
    /// Direction of the position a leg opens.
    pub fn direction(self) -> i8 {
        match self {
            Leg::Buy => 1,
            Leg::Sell => -1,
        }
    }
}

/// Unmatched pattern occurrence of a strategy: which leg and the mid-price
/// one step after it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pending {
    pub leg: Leg,
    pub price: f64,
}

/// Ordered pair of distinct patterns: buy on `buy`, sell on `sell`.
#[derive(Debug, Clone, PartialEq)]
pub struct PairStrategy {
    pub buy: PatternId,
    pub sell: PatternId,
    pub score: f64,
    pub pending: Option<Pending>,
}

impl PairStrategy {
    pub fn new(buy: PatternId, sell: PatternId) -> Self {
        assert_ne!(buy, sell, "pair strategy patterns must differ");
        PairStrategy {
            buy,
            sell,
            score: 0.0,
            pending: None,
        }
    }

    #[inline]
    pub fn leg_of(&self, u: PatternId) -> Option<Leg> {
        if u == self.buy {
            Some(Leg::Buy)
        } else if u == self.sell {
            Some(Leg::Sell)
        } else {
            None
        }
    }

    #[inline]
    pub fn pattern_of(&self, leg: Leg) -> PatternId {
        match leg {
            Leg::Buy => self.buy,
            Leg::Sell => self.sell,
        }
    }

    /// Virtual round-trip bookkeeping for the pattern `u` observed now, with
    /// `mid_price_next` the mid-price one step after it.
    ///
    /// A repeated occurrence of the pending leg moves the anchor forward. The
    /// opposite leg completes the round trip and credits
    /// `p(sell + 1) - p(buy + 1)`.
    #[inline]
    pub fn update(&mut self, u: PatternId, mid_price_next: f64) {
        let Some(leg) = self.leg_of(u) else {
            return;
        };
        match self.pending {
            Some(p) if p.leg != leg => {
                self.score += match p.leg {
                    Leg::Buy => mid_price_next - p.price,
                    Leg::Sell => p.price - mid_price_next,
                };
                self.pending = None;
            }
            _ => {
                self.pending = Some(Pending {
                    leg,
                    price: mid_price_next,
                });
            }
        }
    }
}

/// Draw `count` distinct pair strategies uniformly from the full space.
pub fn draw_pair_strategies<R: Rng + ?Sized>(memory: u32, count: usize, rng: &mut R) -> Vec<PairStrategy> {
    let space = strategy_space_size(memory);
    rand::seq::index::sample(rng, space, count)
        .into_iter()
        .map(|i| {
            let (buy, sell) = strategy_pair_at(memory, i);
            PairStrategy::new(buy, sell)
        })
        .collect()
}

/// An open position of a pair-pattern trader.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Holding {
    /// +1 long, -1 short.
    pub direction: i8,
    /// Strategy that opened the position; it alone can close it.
    pub strategy: usize,
    pub open_time: usize,
    /// Mid-price one step after the opening trade.
    pub open_price: f64,
}

/// What a pair-pattern trader does on the current step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    Idle,
    Open { strategy: usize, direction: i8 },
    Close,
}

/// A completed pair-pattern round trip, handed back by
/// [`PairTrader::settle`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosedTrade {
    pub direction: i8,
    pub open_time: usize,
    pub open_price: f64,
    pub close_time: usize,
    pub close_price: f64,
}

impl ClosedTrade {
    pub fn pnl(&self) -> f64 {
        f64::from(self.direction) * (self.close_price - self.open_price)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairTrader {
    pub id: TraderId,
    pub strategies: Vec<PairStrategy>,
    pub holding: Option<Holding>,
    pub wealth: f64,
    /// Wealth endowed at creation (nonzero only for replacement traders).
    pub initial_wealth: f64,
    pub age: u64,
    pub switch_count: u64,
    pub last_choice: Option<usize>,
}

impl PairTrader {
    pub fn new(id: TraderId, strategies: Vec<PairStrategy>, initial_wealth: f64) -> Self {
        assert!(!strategies.is_empty());
        PairTrader {
            id,
            strategies,
            holding: None,
            wealth: initial_wealth,
            initial_wealth,
            age: 0,
            switch_count: 0,
            last_choice: None,
        }
    }

    pub fn position(&self) -> i8 {
        self.holding.map_or(0, |h| h.direction)
    }

    /// Choose the action for history `u`.
    ///
    /// Flat traders reselect their best strategy; holders are locked to the
    /// strategy that opened the position and only react to its other leg.
    pub fn decide<R: Rng + ?Sized>(&mut self, u: PatternId, rng: &mut R) -> Decision {
        if let Some(h) = self.holding {
            let s = &self.strategies[h.strategy];
            let closing = if h.direction > 0 { s.sell } else { s.buy };
            return if u == closing { Decision::Close } else { Decision::Idle };
        }
        let best = match self.strategies.len() {
            1 => 0,
            _ => select_best(self.strategies.iter().map(|s| s.score), rng),
        };
        if self.last_choice.is_some_and(|prev| prev != best) {
            self.switch_count += 1;
        }
        self.last_choice = Some(best);
        match self.strategies[best].leg_of(u) {
            Some(leg) => Decision::Open {
                strategy: best,
                direction: leg.direction(),
            },
            None => Decision::Idle,
        }
    }

    /// Apply a decision once the step's mid-price `next_price = p(t + 1)` is
    /// known, then update all virtual scores. Returns the completed round trip
    /// if the decision closed one.
    pub fn settle(&mut self, decision: Decision, u: PatternId, t: usize, next_price: f64) -> Option<ClosedTrade> {
        let closed = match decision {
            Decision::Idle => None,
            Decision::Open { strategy, direction } => {
                debug_assert!(self.holding.is_none());
                self.holding = Some(Holding {
                    direction,
                    strategy,
                    open_time: t,
                    open_price: next_price,
                });
                None
            }
            Decision::Close => {
                let h = self.holding.take().expect("close without a position");
                let trade = ClosedTrade {
                    direction: h.direction,
                    open_time: h.open_time,
                    open_price: h.open_price,
                    close_time: t,
                    close_price: next_price,
                };
                self.wealth += trade.pnl();
                Some(trade)
            }
        };
        for s in &mut self.strategies {
            s.update(u, next_price);
        }
        self.age += 1;
        closed
    }
}

/// Full lookup table from history to action.
#[derive(Debug, Clone, PartialEq)]
pub struct MgStrategy {
    pub table: Vec<i8>,
    pub score: f64,
}

impl MgStrategy {
    pub fn new(table: Vec<i8>) -> Self {
        debug_assert!(table.iter().all(|&a| a == 1 || a == -1));
        MgStrategy { table, score: 0.0 }
    }

    pub fn random<R: Rng + ?Sized>(memory: u32, rng: &mut R) -> Self {
        let p = 1usize << memory;
        Self::new((0..p).map(|_| if rng.random::<bool>() { 1 } else { -1 }).collect())
    }

    #[inline]
    pub fn action(&self, u: PatternId) -> i8 {
        self.table[u.index()]
    }

    /// `score -= table[u] * price_change`
    #[inline]
    pub fn update(&mut self, u_prev: PatternId, price_change: f64) {
        self.score -= f64::from(self.action(u_prev)) * price_change;
    }
}

/// MG-strategy trader or producer. Trades on every step.
#[derive(Debug, Clone, PartialEq)]
pub struct MgTrader {
    pub id: TraderId,
    pub kind: TraderKind,
    pub strategies: Vec<MgStrategy>,
    pub wealth: f64,
    pub age: u64,
    pub switch_count: u64,
    pub last_choice: Option<usize>,
}

impl MgTrader {
    pub fn new(id: TraderId, kind: TraderKind, strategies: Vec<MgStrategy>) -> Self {
        assert!(matches!(kind, TraderKind::Mg | TraderKind::Producer));
        assert!(!strategies.is_empty());
        if kind == TraderKind::Producer {
            assert_eq!(strategies.len(), 1, "producers have exactly one strategy");
        }
        MgTrader {
            id,
            kind,
            strategies,
            wealth: 0.0,
            age: 0,
            switch_count: 0,
            last_choice: None,
        }
    }

    pub fn decide<R: Rng + ?Sized>(&mut self, u: PatternId, rng: &mut R) -> i8 {
        let best = match (self.kind, self.strategies.len()) {
            (TraderKind::Producer, _) | (_, 1) => 0,
            _ => select_best(self.strategies.iter().map(|s| s.score), rng),
        };
        if self.last_choice.is_some_and(|prev| prev != best) {
            self.switch_count += 1;
        }
        self.last_choice = Some(best);
        self.strategies[best].action(u)
    }

    /// Score every table against the realized return and book the trader's
    /// own payoff `-action * r`.
    pub fn settle(&mut self, u: PatternId, action: i8, price_change: f64, mode: MgScoreMode) {
        match mode {
            MgScoreMode::PerStrategy => {
                for s in &mut self.strategies {
                    s.update(u, price_change);
                }
            }
            MgScoreMode::Realized => {
                let delta = f64::from(action) * price_change;
                for s in &mut self.strategies {
                    s.score -= delta;
                }
            }
        }
        self.wealth -= f64::from(action) * price_change;
        self.age += 1;
    }
}
