use crate::engine::{RunOutput, TradeRecord, TraderSummary};

/// Relative wealth `(W_i - W̄) / W̄`, or absolute deviations `W_i - W̄` when
/// `W̄` is zero and the ratio is undefined.
#[derive(Debug, Clone, PartialEq)]
pub enum RelativeWealth {
    Relative(Vec<f64>),
    AbsoluteDeviation(Vec<f64>),
}

impl RelativeWealth {
    pub fn values(&self) -> &[f64] {
        match self {
            RelativeWealth::Relative(v) | RelativeWealth::AbsoluteDeviation(v) => v,
        }
    }

    pub fn is_degenerate(&self) -> bool {
        matches!(self, RelativeWealth::AbsoluteDeviation(_))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankedWealth {
    pub rank: usize,
    /// Ranking key: switch count or age.
    pub key: u64,
    pub wealth: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WealthStats {
    pub mean: f64,
    /// Ascending switch count (rank 0 switches least).
    pub by_switch_rank: Vec<RankedWealth>,
    /// Descending age (rank 0 is the oldest).
    pub by_age_rank: Vec<RankedWealth>,
    /// Ordered by descending wealth.
    pub relative: RelativeWealth,
}

/// Ranks ties by trader id so tables are stable.
pub fn wealth_stats(traders: &[TraderSummary]) -> WealthStats {
    assert!(!traders.is_empty());
    let mean = traders.iter().map(|t| t.wealth).sum::<f64>() / traders.len() as f64;

    let mut by_switch: Vec<&TraderSummary> = traders.iter().collect();
    by_switch.sort_by_key(|t| (t.switch_count, t.id));
    let mut by_age: Vec<&TraderSummary> = traders.iter().collect();
    by_age.sort_by_key(|t| (std::cmp::Reverse(t.age), t.id));
    let rank = |v: Vec<&TraderSummary>, key: fn(&TraderSummary) -> u64| {
        v.into_iter()
            .enumerate()
            .map(|(rank, t)| RankedWealth {
                rank,
                key: key(t),
                wealth: t.wealth,
            })
            .collect::<Vec<_>>()
    };

    let mut sorted: Vec<f64> = traders.iter().map(|t| t.wealth).collect();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let scale = sorted.iter().fold(0.0f64, |m, w| m.max(w.abs()));
    let relative = if mean.abs() <= 1e-12 * scale || mean == 0.0 {
        RelativeWealth::AbsoluteDeviation(sorted.iter().map(|w| w - mean).collect())
    } else {
        RelativeWealth::Relative(sorted.iter().map(|w| (w - mean) / mean).collect())
    };

    WealthStats {
        mean,
        by_switch_rank: rank(by_switch, |t| t.switch_count),
        by_age_rank: rank(by_age, |t| t.age),
        relative,
    }
}

/// Ledger-side total of the linear-impact wealth sum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LedgerSum {
    pub total: f64,
    pub trades: usize,
    /// Positions still open at evaluation; they are not part of `total`.
    pub excluded_open: usize,
}

/// Evaluate, for every completed round trip, the demand it was exposed to:
/// `direction * (A(t1)/2 + A(t2)/2 + sum_{t1 < tau < t2} A(tau))`.
///
/// `excess_demand` is the full series indexed by absolute time. Under linear
/// impact this equals the sum of realized round-trip profits.
pub fn ledger_demand_sum(trades: &[TradeRecord], excess_demand: &[i64]) -> f64 {
    let mut prefix = Vec::with_capacity(excess_demand.len() + 1);
    prefix.push(0i64);
    for &a in excess_demand {
        prefix.push(prefix.last().unwrap() + a);
    }
    // twice the bracket stays an exact integer
    let doubled: i128 = trades
        .iter()
        .map(|tr| {
            let (t1, t2) = (tr.open_time, tr.close_time);
            let inner = prefix[t2] - prefix[t1 + 1];
            let twice = excess_demand[t1] + excess_demand[t2] + 2 * inner;
            i128::from(tr.direction) * i128::from(twice)
        })
        .sum();
    doubled as f64 / 2.0
}

pub fn wealth_sum_oracle_linear(run: &RunOutput) -> LedgerSum {
    LedgerSum {
        total: ledger_demand_sum(&run.trades, &run.excess_demand),
        trades: run.trades.len(),
        excluded_open: run.open_positions(),
    }
}
