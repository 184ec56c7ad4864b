//! Observables of a finished run: return variance, conditional impact,
//! pair predictability, conditional excess demand, wealth tables, the
//! linear-impact wealth accounting, power-law fits and diagnostics.
//!
//! Everything here is a pure function of a [`RunOutput`] (or of plain
//! slices) and only looks at the recorded window unless stated otherwise.

mod diagnostics;
mod fit;
mod observables;
mod wealth;

pub use diagnostics::{detect_periodic_lock, washout_time, PeriodicLock, Washout};
pub use fit::{fit_power_law, FitError, PowerLawFit};
pub use observables::{
    conditional_mean_return, conditional_probability, excess_demand_bias, impact_h, pair_drifts,
    predictability_k, return_histogram, tail_mass, variance_sigma2, ConditionalProbability, ExcessDemandBias,
    Histogram, SignProbabilities,
};
pub use wealth::{
    ledger_demand_sum, wealth_stats, wealth_sum_oracle_linear, LedgerSum, RankedWealth, RelativeWealth, WealthStats,
};

use crate::agents::TraderKind;
use crate::engine::RunOutput;

/// N-bands used for the default power-law fits: `[10, 100)` and `[100, 1000)`.
pub const DEFAULT_FIT_BANDS: [(f64, f64); 2] = [(10.0, 100.0), (100.0, 1000.0)];

#[derive(Debug, Clone, PartialEq)]
pub struct ObservableSummary {
    pub sigma2: f64,
    pub h_value: f64,
    pub k_value: f64,
    pub p_uj: ConditionalProbability,
    pub a_given_u: Vec<Option<f64>>,
    /// Mean wealth of the pair-pattern traders (all traders if there are none).
    pub mean_wealth: f64,
    pub abs_sum_a_bias: f64,
}

pub fn conditional_probability_of(run: &RunOutput) -> ConditionalProbability {
    conditional_probability(run.recorded_history(), run.recorded_returns(), run.pattern_count())
}

pub fn variance_sigma2_of(run: &RunOutput) -> f64 {
    variance_sigma2(run.recorded_returns(), run.pattern_count())
}

pub fn impact_h_of(run: &RunOutput) -> f64 {
    impact_h(run.recorded_history(), run.recorded_returns(), run.pattern_count())
}

pub fn predictability_k_of(run: &RunOutput) -> f64 {
    predictability_k(run.recorded_history(), run.recorded_price(), run.pattern_count())
}

pub fn excess_demand_bias_of(run: &RunOutput) -> ExcessDemandBias {
    excess_demand_bias(run.recorded_history(), run.recorded_excess_demand(), run.pattern_count())
}

/// Mean final wealth of one trader kind; `None` if the kind is absent.
pub fn mean_wealth_of(run: &RunOutput, kind: TraderKind) -> Option<f64> {
    let (sum, n) = run
        .traders_of(kind)
        .fold((0.0, 0usize), |(s, n), t| (s + t.wealth, n + 1));
    (n > 0).then(|| sum / n as f64)
}

pub fn summarize(run: &RunOutput) -> ObservableSummary {
    let bias = excess_demand_bias_of(run);
    let mean_wealth = mean_wealth_of(run, TraderKind::PairPattern).unwrap_or_else(|| {
        run.traders.iter().map(|t| t.wealth).sum::<f64>() / run.traders.len().max(1) as f64
    });
    ObservableSummary {
        sigma2: variance_sigma2_of(run),
        h_value: impact_h_of(run),
        k_value: predictability_k_of(run),
        p_uj: conditional_probability_of(run),
        a_given_u: bias.given_u,
        mean_wealth,
        abs_sum_a_bias: bias.abs_sum,
    }
}

/// Survival-time statistic of an evolution run, for an elimination fraction.
pub fn washout_of(run: &RunOutput, fraction: f64) -> Washout {
    washout_time(&run.survivors, 0, run.config.n_pair, fraction)
}
