//! The per-step simulation loop, trader replacement and the trade ledger.
//!
//! One run owns a single ChaCha8 stream seeded from [`SimConfig::seed`]. The
//! stream is consumed in a fixed order: strategy draws for traders in index
//! order (pair traders, MG traders, producers) and the initial history at
//! construction; then on every step tie-breaks for traders in index order,
//! the zero-signal history bit, and finally the elimination draws.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::agents::{
    draw_pair_strategies, ClosedTrade, Decision, MgStrategy, MgTrader, PairTrader, TraderId, TraderKind,
};
use crate::market::{signal_to_bit, ConfigError, HistoryRegister, HistorySource, PatternId, SimConfig};
use crate::price::PriceSeries;

/// SplitMix64 finalizer.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of run `run` at sweep point `point`:
/// `splitmix64(splitmix64(splitmix64(master) ^ point) ^ run)`.
pub fn derive_seed(master: u64, point: u64, run: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(master) ^ point) ^ run)
}

/// One completed round trip of a pair-pattern trader.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TradeRecord {
    pub trader_id: TraderId,
    pub open_time: usize,
    pub close_time: usize,
    /// +1 long, -1 short.
    pub direction: i8,
    /// p(open_time + 1)
    pub open_price: f64,
    /// p(close_time + 1)
    pub close_price: f64,
}

impl TradeRecord {
    fn from_closed(trader_id: TraderId, c: ClosedTrade) -> Self {
        TradeRecord {
            trader_id,
            open_time: c.open_time,
            close_time: c.close_time,
            direction: c.direction,
            open_price: c.open_price,
            close_price: c.close_price,
        }
    }

    pub fn pnl(&self) -> f64 {
        f64::from(self.direction) * (self.close_price - self.open_price)
    }
}

/// One application of the elimination rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EliminationRecord {
    pub time: usize,
    pub victim: TraderId,
    pub victim_wealth: f64,
    /// Whether the victim still held a position, which is annulled.
    pub victim_was_holding: bool,
    pub replacement: TraderId,
    pub endowment: f64,
}

/// Final state of a trader at the end of a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraderSummary {
    pub id: TraderId,
    pub kind: TraderKind,
    pub wealth: f64,
    pub initial_wealth: f64,
    pub age: u64,
    pub switch_count: u64,
    pub position: i8,
}

/// What happened on one step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    pub t: usize,
    pub history: PatternId,
    pub excess_demand: i64,
    pub ret: f64,
    /// p(t + 1)
    pub price: f64,
    pub active: [u32; 3],
}

/// Everything logged by a run, warmup included.
///
/// Per-step vectors are indexed by absolute time `t` in
/// `0..warmup + steps`; the `recorded_*` accessors return the data-collection
/// window only.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub config: SimConfig,
    pub warmup: usize,
    pub steps: usize,
    /// `p(t)` for `t` in `0..=warmup + steps`.
    pub price: Vec<f64>,
    pub returns: Vec<f64>,
    pub excess_demand: Vec<i64>,
    /// History state `u(t)` the step-`t` decisions were conditioned on.
    pub history: Vec<PatternId>,
    /// Nonzero actions per trader kind, indexed by [`TraderKind::index`].
    pub active: Vec<[u32; 3]>,
    /// Original pair-pattern traders still alive after each step.
    pub survivors: Vec<u32>,
    pub trades: Vec<TradeRecord>,
    pub eliminations: Vec<EliminationRecord>,
    pub traders: Vec<TraderSummary>,
    /// Number of positions ever opened.
    pub open_events: u64,
}

impl RunOutput {
    fn window(&self) -> std::ops::Range<usize> {
        self.warmup..self.warmup + self.steps
    }

    pub fn recorded_returns(&self) -> &[f64] {
        &self.returns[self.window()]
    }

    pub fn recorded_excess_demand(&self) -> &[i64] {
        &self.excess_demand[self.window()]
    }

    pub fn recorded_history(&self) -> &[PatternId] {
        &self.history[self.window()]
    }

    /// Prices `p(t)` for `t` in `warmup..=warmup + steps`; one longer than
    /// the other recorded series.
    pub fn recorded_price(&self) -> &[f64] {
        &self.price[self.warmup..=self.warmup + self.steps]
    }

    pub fn recorded_survivors(&self) -> &[u32] {
        &self.survivors[self.window()]
    }

    pub fn pattern_count(&self) -> usize {
        self.config.pattern_count()
    }

    pub fn traders_of(&self, kind: TraderKind) -> impl Iterator<Item = &TraderSummary> {
        self.traders.iter().filter(move |t| t.kind == kind)
    }

    pub fn open_positions(&self) -> usize {
        self.traders.iter().filter(|t| t.position != 0).count()
    }
}

/// Replace the poorest pair-pattern trader by a fresh one endowed with the
/// population's mean wealth (victim included). Ties are broken uniformly at
/// random; an open position of the victim is annulled.
pub fn evolve<R: Rng + ?Sized>(
    traders: &mut [PairTrader],
    time: usize,
    memory: u32,
    s_per_trader: usize,
    replacement: TraderId,
    rng: &mut R,
) -> EliminationRecord {
    assert!(!traders.is_empty(), "evolution needs a nonempty population");
    let mean = traders.iter().map(|t| t.wealth).sum::<f64>() / traders.len() as f64;
    let min = traders.iter().map(|t| t.wealth).fold(f64::INFINITY, f64::min);
    let ties = traders.iter().filter(|t| t.wealth == min).count();
    let pick = if ties > 1 { rng.random_range(0..ties) } else { 0 };
    let victim_idx = traders
        .iter()
        .enumerate()
        .filter(|(_, t)| t.wealth == min)
        .nth(pick)
        .map(|(i, _)| i)
        .expect("victim exists");
    let strategies = draw_pair_strategies(memory, s_per_trader, rng);
    let old = std::mem::replace(&mut traders[victim_idx], PairTrader::new(replacement, strategies, mean));
    EliminationRecord {
        time,
        victim: old.id,
        victim_wealth: old.wealth,
        victim_was_holding: old.holding.is_some(),
        replacement,
        endowment: mean,
    }
}

/// A run in progress.
#[derive(Debug, Clone)]
pub struct Simulation {
    config: SimConfig,
    rng: ChaCha8Rng,
    t: usize,
    register: HistoryRegister,
    series: PriceSeries,
    pair: Vec<PairTrader>,
    mg: Vec<MgTrader>,
    next_id: u32,
    original_alive: u32,
    original_cutoff: u32,
    decisions: Vec<Decision>,
    mg_actions: Vec<i8>,
    history: Vec<PatternId>,
    active: Vec<[u32; 3]>,
    survivors: Vec<u32>,
    trades: Vec<TradeRecord>,
    eliminations: Vec<EliminationRecord>,
    open_events: u64,
}

impl Simulation {
    /// Draw a fresh population and initial history from `config.seed`.
    pub fn new(config: SimConfig) -> Result<Self, ConfigError> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut id = 0u32;
        let mut next = || {
            id += 1;
            TraderId(id - 1)
        };
        let pair: Vec<PairTrader> = (0..config.n_pair)
            .map(|_| PairTrader::new(next(), draw_pair_strategies(config.memory, config.s_per_trader, &mut rng), 0.0))
            .collect();
        let mut mg: Vec<MgTrader> = (0..config.n_mg)
            .map(|_| {
                let strategies = (0..config.s_per_trader)
                    .map(|_| MgStrategy::random(config.memory, &mut rng))
                    .collect();
                MgTrader::new(next(), TraderKind::Mg, strategies)
            })
            .collect();
        mg.extend((0..config.n_prod).map(|_| {
            MgTrader::new(
                next(),
                TraderKind::Producer,
                vec![MgStrategy::random(config.memory, &mut rng)],
            )
        }));
        let register = HistoryRegister::random(config.memory, &mut rng);
        Ok(Self::from_parts(config, pair, mg, register, rng))
    }

    /// Start from an explicit population and history; `config` supplies
    /// everything else. The population sizes in `config` are overwritten.
    pub fn from_parts(
        mut config: SimConfig,
        pair: Vec<PairTrader>,
        mg: Vec<MgTrader>,
        register: HistoryRegister,
        rng: ChaCha8Rng,
    ) -> Self {
        assert_eq!(register.memory(), config.memory);
        config.n_pair = pair.len();
        config.n_mg = mg.iter().filter(|t| t.kind == TraderKind::Mg).count();
        config.n_prod = mg.len() - config.n_mg;
        let total = config.warmup + config.steps;
        let next_id = pair
            .iter()
            .map(|t| t.id.0)
            .chain(mg.iter().map(|t| t.id.0))
            .max()
            .map_or(0, |m| m + 1);
        let original_cutoff = pair.iter().map(|t| t.id.0 + 1).max().unwrap_or(0);
        Simulation {
            rng,
            t: 0,
            register,
            series: PriceSeries::with_capacity(0.0, total),
            original_alive: pair.len() as u32,
            original_cutoff,
            decisions: vec![Decision::Idle; pair.len()],
            mg_actions: vec![0; mg.len()],
            pair,
            mg,
            next_id,
            history: Vec::with_capacity(total),
            active: Vec::with_capacity(total),
            survivors: Vec::with_capacity(total),
            trades: Vec::new(),
            eliminations: Vec::new(),
            open_events: 0,
            config,
        }
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    pub fn time(&self) -> usize {
        self.t
    }

    pub fn history(&self) -> HistoryRegister {
        self.register
    }

    pub fn series(&self) -> &PriceSeries {
        &self.series
    }

    pub fn pair_traders(&self) -> &[PairTrader] {
        &self.pair
    }

    pub fn mg_traders(&self) -> &[MgTrader] {
        &self.mg
    }

    pub fn trades(&self) -> &[TradeRecord] {
        &self.trades
    }

    pub fn eliminations(&self) -> &[EliminationRecord] {
        &self.eliminations
    }

    /// Pair traders of the initial population still in the market.
    pub fn survivors(&self) -> u32 {
        self.original_alive
    }

    /// Advance one step: decide, aggregate, move the price, settle trades
    /// and scores, shift the history, then apply elimination if due.
    pub fn step(&mut self) -> StepRecord {
        let t = self.t;
        let u = self.register.pattern();
        let mut excess_demand = 0i64;
        let mut active = [0u32; 3];

        for (trader, decision) in self.pair.iter_mut().zip(self.decisions.iter_mut()) {
            let d = trader.decide(u, &mut self.rng);
            let a = match d {
                Decision::Idle => 0,
                Decision::Open { direction, .. } => direction,
                Decision::Close => -trader.position(),
            };
            if a != 0 {
                active[0] += 1;
                excess_demand += i64::from(a);
            }
            *decision = d;
        }
        for (trader, action) in self.mg.iter_mut().zip(self.mg_actions.iter_mut()) {
            let a = trader.decide(u, &mut self.rng);
            active[trader.kind.index()] += 1;
            excess_demand += i64::from(a);
            *action = a;
        }

        let ret = self.series.advance(excess_demand, self.config.impact_kind);
        let next_price = self.series.last_price();

        for (trader, &d) in self.pair.iter_mut().zip(self.decisions.iter()) {
            if matches!(d, Decision::Open { .. }) {
                self.open_events += 1;
            }
            if let Some(closed) = trader.settle(d, u, t, next_price) {
                self.trades.push(TradeRecord::from_closed(trader.id, closed));
            }
        }
        for (trader, &a) in self.mg.iter_mut().zip(self.mg_actions.iter()) {
            trader.settle(u, a, ret, self.config.mg_score_mode);
        }

        let signal = match self.config.history_source {
            HistorySource::ExcessDemandSign => excess_demand as f64,
            HistorySource::MidReturnSign => ret,
        };
        let bit = signal_to_bit(signal, &mut self.rng, self.config.zero_bit_rule, self.register.last_bit());
        self.register = self.register.push(bit);

        self.t += 1;
        let interval = self.config.evolution_interval;
        if interval > 0 && self.t.is_multiple_of(interval) {
            let replacement = TraderId(self.next_id);
            self.next_id += 1;
            let record = evolve(
                &mut self.pair,
                t,
                self.config.memory,
                self.config.s_per_trader,
                replacement,
                &mut self.rng,
            );
            if record.victim.0 < self.original_cutoff {
                self.original_alive -= 1;
            }
            self.eliminations.push(record);
        }

        self.history.push(u);
        self.active.push(active);
        self.survivors.push(self.original_alive);
        StepRecord {
            t,
            history: u,
            excess_demand,
            ret,
            price: next_price,
            active,
        }
    }

    pub fn into_output(self) -> RunOutput {
        let steps = self.t.saturating_sub(self.config.warmup);
        let warmup = self.t - steps;
        let mut traders: Vec<TraderSummary> = self
            .pair
            .iter()
            .map(|t| TraderSummary {
                id: t.id,
                kind: TraderKind::PairPattern,
                wealth: t.wealth,
                initial_wealth: t.initial_wealth,
                age: t.age,
                switch_count: t.switch_count,
                position: t.position(),
            })
            .chain(self.mg.iter().map(|t| TraderSummary {
                id: t.id,
                kind: t.kind,
                wealth: t.wealth,
                initial_wealth: 0.0,
                age: t.age,
                switch_count: t.switch_count,
                position: 0,
            }))
            .collect();
        traders.sort_by_key(|t| t.id);
        let PriceSeries {
            price,
            returns,
            excess_demand,
        } = self.series;
        RunOutput {
            config: self.config,
            warmup,
            steps,
            price,
            returns,
            excess_demand,
            history: self.history,
            active: self.active,
            survivors: self.survivors,
            trades: self.trades,
            eliminations: self.eliminations,
            traders,
            open_events: self.open_events,
        }
    }
}

/// Execute `config.warmup` unrecorded and `config.steps` recorded steps.
pub fn run(config: &SimConfig) -> Result<RunOutput, ConfigError> {
    let mut sim = Simulation::new(config.clone())?;
    for _ in 0..config.warmup + config.steps {
        sim.step();
    }
    Ok(sim.into_output())
}
