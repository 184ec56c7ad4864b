//! Domain types shared by the whole simulator: run configuration, history
//! patterns, the m-bit history register and the pair-pattern strategy space.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use thiserror::Error;

/// Largest supported history length. Keeps `2^m` lookup tables and the
/// `P(P-1)` strategy space comfortably in memory.
pub const MAX_MEMORY: u32 = 16;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("invalid `{field}`: {reason}")]
    Invalid { field: &'static str, reason: String },
}

impl ConfigError {
    pub fn invalid(field: &'static str, reason: impl Into<String>) -> Self {
        ConfigError::Invalid {
            field,
            reason: reason.into(),
        }
    }

    pub fn field(&self) -> &'static str {
        match self {
            ConfigError::Invalid { field, .. } => field,
        }
    }
}

/// Mid-price impact function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ImpactKind {
    Linear,
    SquareRoot,
}

/// Which signal is folded into the history register after each step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum HistorySource {
    /// Sign of the aggregate order. Tends to lock into a short cycle where
    /// demand alternates and the price stops moving.
    ExcessDemandSign,
    /// Sign of the mid-price return. The default.
    MidReturnSign,
}

/// How a zero-valued signal is turned into a history bit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ZeroBitRule {
    RandomBit,
    ReuseLast,
}

/// Which action drives the virtual score of MG-strategy tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MgScoreMode {
    /// Every table is scored with its own prescribed action.
    PerStrategy,
    /// Every table is scored with the trader's realized action.
    Realized,
}

macro_rules! keyword_enum {
    ($ty:ty, $what:literal, { $($name:literal => $variant:expr),+ $(,)? }) => {
        impl FromStr for $ty {
            type Err = String;
            fn from_str(s: &str) -> Result<Self, Self::Err> {
                match s.trim().to_ascii_lowercase().as_str() {
                    $($name => Ok($variant),)+
                    other => Err(format!(
                        concat!("unknown ", $what, " `{}` (expected one of: {})"),
                        other,
                        [$($name),+].join(", ")
                    )),
                }
            }
        }
    };
}

keyword_enum!(ImpactKind, "impact kind", {
    "linear" => ImpactKind::Linear,
    "sqrt" => ImpactKind::SquareRoot,
    "square-root" => ImpactKind::SquareRoot,
});
keyword_enum!(HistorySource, "history source", {
    "excess-demand" => HistorySource::ExcessDemandSign,
    "mid-return" => HistorySource::MidReturnSign,
});
keyword_enum!(ZeroBitRule, "zero-bit rule", {
    "random" => ZeroBitRule::RandomBit,
    "reuse-last" => ZeroBitRule::ReuseLast,
});
keyword_enum!(MgScoreMode, "MG score mode", {
    "per-strategy" => MgScoreMode::PerStrategy,
    "realized" => MgScoreMode::Realized,
});

impl fmt::Display for ImpactKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ImpactKind::Linear => "linear",
            ImpactKind::SquareRoot => "sqrt",
        })
    }
}

impl fmt::Display for HistorySource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            HistorySource::ExcessDemandSign => "excess-demand",
            HistorySource::MidReturnSign => "mid-return",
        })
    }
}

impl fmt::Display for ZeroBitRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ZeroBitRule::RandomBit => "random",
            ZeroBitRule::ReuseLast => "reuse-last",
        })
    }
}

impl fmt::Display for MgScoreMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MgScoreMode::PerStrategy => "per-strategy",
            MgScoreMode::Realized => "realized",
        })
    }
}

/// All parameters of a single simulation run.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    /// Pair-pattern traders.
    pub n_pair: usize,
    /// MG-strategy traders.
    pub n_mg: usize,
    /// Producers (one fixed MG table each).
    pub n_prod: usize,
    /// Strategies per pair-pattern or MG trader.
    pub s_per_trader: usize,
    /// History length m; there are `2^m` patterns.
    pub memory: u32,
    pub impact_kind: ImpactKind,
    /// Recorded steps.
    pub steps: usize,
    /// Steps simulated before recording starts.
    pub warmup: usize,
    /// Steps between eliminations; 0 disables evolution.
    pub evolution_interval: usize,
    pub seed: u64,
    pub history_source: HistorySource,
    pub zero_bit_rule: ZeroBitRule,
    pub mg_score_mode: MgScoreMode,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            n_pair: 100,
            n_mg: 0,
            n_prod: 0,
            s_per_trader: 2,
            memory: 3,
            impact_kind: ImpactKind::Linear,
            steps: 100_000,
            warmup: 500,
            evolution_interval: 0,
            seed: 0,
            history_source: HistorySource::MidReturnSign,
            zero_bit_rule: ZeroBitRule::RandomBit,
            mg_score_mode: MgScoreMode::PerStrategy,
        }
    }
}

impl SimConfig {
    pub fn pattern_count(&self) -> usize {
        1usize << self.memory
    }

    pub fn n_total(&self) -> usize {
        self.n_pair + self.n_mg + self.n_prod
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.memory < 1 || self.memory > MAX_MEMORY {
            return Err(ConfigError::invalid(
                "memory",
                format!("must be in 1..={MAX_MEMORY}, got {}", self.memory),
            ));
        }
        let space = strategy_space_size(self.memory);
        if self.s_per_trader < 1 || self.s_per_trader > space {
            return Err(ConfigError::invalid(
                "s_per_trader",
                format!(
                    "must be in 1..={space} for memory {}, got {}",
                    self.memory, self.s_per_trader
                ),
            ));
        }
        if self.n_total() == 0 {
            return Err(ConfigError::invalid(
                "n_pair",
                "population is empty (n_pair + n_mg + n_prod must be at least 1)",
            ));
        }
        if self.steps == 0 {
            return Err(ConfigError::invalid("steps", "must be at least 1"));
        }
        if self.evolution_interval > 0 && self.n_pair == 0 {
            return Err(ConfigError::invalid(
                "evolution_interval",
                "evolution needs at least one pair-pattern trader",
            ));
        }
        Ok(())
    }
}

/// A history state in `[0, 2^m)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PatternId(pub u16);

impl PatternId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for PatternId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// The m most recent outcome bits, newest in the least significant position.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HistoryRegister {
    bits: u16,
    memory: u32,
}

impl HistoryRegister {
    pub fn new(memory: u32, initial: u16) -> Self {
        assert!((1..=MAX_MEMORY).contains(&memory), "memory out of range");
        HistoryRegister {
            bits: initial & Self::mask(memory),
            memory,
        }
    }

    /// Uniformly random initial register.
    pub fn random<R: Rng + ?Sized>(memory: u32, rng: &mut R) -> Self {
        let p = 1u32 << memory;
        Self::new(memory, rng.random_range(0..p) as u16)
    }

    fn mask(memory: u32) -> u16 {
        ((1u32 << memory) - 1) as u16
    }

    #[inline]
    pub fn pattern(self) -> PatternId {
        PatternId(self.bits)
    }

    pub fn memory(self) -> u32 {
        self.memory
    }

    /// Most recently shifted-in bit.
    #[inline]
    pub fn last_bit(self) -> bool {
        self.bits & 1 == 1
    }

    /// Shift in one outcome bit, dropping the oldest.
    #[inline]
    #[must_use]
    pub fn push(self, bit: bool) -> Self {
        HistoryRegister {
            bits: ((self.bits << 1) | bit as u16) & Self::mask(self.memory),
            memory: self.memory,
        }
    }
}

/// Map a signed signal (return or excess demand) onto a history bit.
///
/// `last` is the previous bit, consulted only by [`ZeroBitRule::ReuseLast`].
/// [`ZeroBitRule::RandomBit`] draws from `rng` only when `signal == 0`.
#[inline]
pub fn signal_to_bit<R: Rng + ?Sized>(signal: f64, rng: &mut R, rule: ZeroBitRule, last: bool) -> bool {
    debug_assert!(signal.is_finite());
    if signal > 0.0 {
        true
    } else if signal < 0.0 {
        false
    } else {
        match rule {
            ZeroBitRule::RandomBit => rng.random::<bool>(),
            ZeroBitRule::ReuseLast => last,
        }
    }
}

/// Number of ordered pairs of distinct patterns, `2^m (2^m - 1)`.
pub fn strategy_space_size(memory: u32) -> usize {
    let p = 1usize << memory;
    p * (p - 1)
}

/// Decode a strategy-space index into its `(buy, sell)` pair.
///
/// Indices follow the order of [`enumerate_strategy_space`]: lexicographic in
/// `(buy, sell)`, skipping the diagonal.
pub fn strategy_pair_at(memory: u32, index: usize) -> (PatternId, PatternId) {
    let p = 1usize << memory;
    debug_assert!(index < p * (p - 1));
    let buy = index / (p - 1);
    let k = index % (p - 1);
    let sell = if k < buy { k } else { k + 1 };
    (PatternId(buy as u16), PatternId(sell as u16))
}

/// Every ordered pair `(buy, sell)` of distinct patterns.
pub fn enumerate_strategy_space(memory: u32) -> Vec<(PatternId, PatternId)> {
    let p = 1u16 << memory;
    (0..p)
        .flat_map(|buy| {
            (0..p)
                .filter(move |&sell| sell != buy)
                .map(move |sell| (PatternId(buy), PatternId(sell)))
        })
        .collect()
}
