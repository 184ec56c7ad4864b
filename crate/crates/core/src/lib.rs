//! Pair-pattern trading model with holding periods.
//!
//! Traders hold pairs of history patterns `(buy, sell)`. A position opens on
//! whichever pattern of the trader's best strategy appears first and closes
//! on the other. Trades clear at the mid-price, driven by either a linear or
//! a square-root impact of the excess demand.
//!
//! - [`market`]: configuration, history register, strategy space
//! - [`price`]: impact functions and the mid-price path
//! - [`agents`]: pair-pattern traders, MG-strategy traders and producers
//! - [`engine`]: the step loop, elimination and the trade ledger
//! - [`analytics`]: observables, power-law fits and wealth accounting

pub mod agents;
pub mod analytics;
pub mod engine;
pub mod market;
pub mod price;

pub use agents::{TraderId, TraderKind};
pub use engine::{derive_seed, run, RunOutput, Simulation, TradeRecord};
pub use market::{ConfigError, HistorySource, ImpactKind, MgScoreMode, PatternId, SimConfig, ZeroBitRule};
