//! Brute-force oracles and whole-run invariant checks shared by the
//! property suite and the acceptance binary.

#![allow(dead_code)]

use std::collections::HashMap;

use pairsim_core::analytics::{
    conditional_probability_of, fit_power_law, impact_h_of, predictability_k_of, wealth_sum_oracle_linear,
};
use pairsim_core::{run, ImpactKind, PatternId, RunOutput, SimConfig, TraderKind};

pub type Check = Result<(), String>;

pub fn brute_h(history: &[PatternId], returns: &[f64], patterns: usize) -> f64 {
    let mut total = 0.0;
    for u in 0..patterns {
        let rs: Vec<f64> = history
            .iter()
            .zip(returns)
            .filter(|(h, _)| h.index() == u)
            .map(|(_, &r)| r)
            .collect();
        if !rs.is_empty() {
            let m = rs.iter().sum::<f64>() / rs.len() as f64;
            total += m * m;
        }
    }
    total / patterns as f64
}

/// One pair at a time: wait for `mu`, then for the next `nu`, record the
/// per-step price drift between the two following prices, and start over.
pub fn brute_k(history: &[PatternId], price: &[f64], patterns: usize) -> f64 {
    let mut total = 0.0;
    for mu in 0..patterns {
        for nu in (0..patterns).filter(|&nu| nu != mu) {
            let mut drifts = Vec::new();
            let mut start = None;
            for (t, u) in history.iter().enumerate() {
                match start {
                    None if u.index() == mu => start = Some(t),
                    Some(s) if u.index() == nu => {
                        drifts.push((price[t + 1] - price[s + 1]) / (t - s) as f64);
                        start = None;
                    }
                    _ => {}
                }
            }
            if !drifts.is_empty() {
                let m = drifts.iter().sum::<f64>() / drifts.len() as f64;
                total += m * m;
            }
        }
    }
    total / (patterns * (patterns - 1)) as f64
}

pub fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * (1.0 + a.abs().max(b.abs()))
}

pub fn small(seed: u64) -> SimConfig {
    SimConfig {
        n_pair: 20,
        steps: 500,
        warmup: 50,
        seed,
        ..SimConfig::default()
    }
}

pub fn check_deterministic(config: &SimConfig) -> Check {
    let a = format!("{:?}", run(config).map_err(|e| e.to_string())?);
    let b = format!("{:?}", run(config).map_err(|e| e.to_string())?);
    (a == b).then_some(()).ok_or_else(|| format!("rerun differs for seed {}", config.seed))
}

pub fn check_brute_force(out: &RunOutput) -> Check {
    let p = out.pattern_count();
    let h = brute_h(out.recorded_history(), out.recorded_returns(), p);
    let k = brute_k(out.recorded_history(), out.recorded_price(), p);
    if !close(impact_h_of(out), h) {
        return Err(format!("H {} vs brute force {h}", impact_h_of(out)));
    }
    if !close(predictability_k_of(out), k) {
        return Err(format!("K {} vs brute force {k}", predictability_k_of(out)));
    }
    Ok(())
}

/// Wealth is realized only, so it equals the endowment plus every closed
/// round trip of that trader.
pub fn check_ledger(out: &RunOutput) -> Check {
    let mut pnl: HashMap<u32, f64> = HashMap::new();
    for tr in &out.trades {
        *pnl.entry(tr.trader_id.0).or_default() += tr.pnl();
    }
    for t in out.traders_of(TraderKind::PairPattern) {
        let expected = t.initial_wealth + pnl.get(&t.id.0).copied().unwrap_or(0.0);
        if !close(t.wealth, expected) {
            return Err(format!("{t:?}: ledger gives {expected}"));
        }
    }
    Ok(())
}

pub fn check_alternation(out: &RunOutput) -> Check {
    let mut by_trader: HashMap<u32, Vec<_>> = HashMap::new();
    for tr in &out.trades {
        by_trader.entry(tr.trader_id.0).or_default().push(*tr);
    }
    for trades in by_trader.values() {
        for tr in trades {
            if tr.open_time >= tr.close_time || tr.direction.abs() != 1 {
                return Err(format!("malformed round trip {tr:?}"));
            }
        }
        for w in trades.windows(2) {
            if w[0].close_time >= w[1].open_time {
                return Err(format!("overlapping round trips {w:?}"));
            }
        }
    }
    let holding = out.traders_of(TraderKind::PairPattern).filter(|t| t.position != 0).count();
    if holding != out.open_positions() {
        return Err(format!("{holding} holders but {} open positions", out.open_positions()));
    }
    Ok(())
}

pub fn check_normalized(out: &RunOutput) -> Check {
    let p = conditional_probability_of(out);
    let mut visits = 0;
    for u in 0..out.pattern_count() {
        visits += p.visits(u);
        match p.row(u) {
            Some(row) if (row.total() - 1.0).abs() > 1e-12 => return Err(format!("row {u} sums to {}", row.total())),
            None if p.visits(u) != 0 => return Err(format!("row {u} visited but undefined")),
            _ => {}
        }
    }
    if visits as usize != out.steps {
        return Err(format!("{visits} visits over {} steps", out.steps));
    }
    Ok(())
}

pub fn check_accounting(out: &RunOutput) -> Check {
    let realized: f64 = out
        .traders_of(TraderKind::PairPattern)
        .map(|t| t.wealth - t.initial_wealth)
        .sum();
    let oracle = wealth_sum_oracle_linear(out);
    let scale = out.trades.iter().map(|t| t.pnl().abs()).sum::<f64>().max(1.0);
    if (realized - oracle.total).abs() > 1e-9 * scale {
        return Err(format!("realized {realized} vs oracle {}", oracle.total));
    }
    Ok(())
}

/// `y = 10^c x^a` on the given abscissas must come back exactly.
pub fn check_fit_exact(exponent: f64, log_c: f64, xs: &[f64]) -> Check {
    let points: Vec<(f64, f64)> = xs.iter().map(|&x| (x, 10f64.powf(log_c) * x.powf(exponent))).collect();
    let fit = fit_power_law(&points, None).map_err(|e| e.to_string())?;
    if (fit.exponent - exponent).abs() > 1e-9 || (fit.intercept - log_c).abs() > 1e-8 {
        return Err(format!("fit {fit:?} for exponent {exponent}, intercept {log_c}"));
    }
    Ok(())
}

/// Every whole-run invariant over a fixed grid of small configurations.
pub fn property_suite() -> Check {
    for seed in 0..6 {
        for impact in [ImpactKind::Linear, ImpactKind::SquareRoot] {
            let config = SimConfig {
                impact_kind: impact,
                n_mg: (seed % 3) as usize,
                n_prod: (seed % 2) as usize,
                ..small(seed)
            };
            check_deterministic(&config)?;
            let out = run(&config).map_err(|e| e.to_string())?;
            check_brute_force(&out)?;
            check_ledger(&out)?;
            check_alternation(&out)?;
            check_normalized(&out)?;
            if impact == ImpactKind::Linear {
                check_accounting(&out)?;
            }
        }
    }
    check_fit_exact(1.05, 0.3, &[50.0, 100.0, 200.0, 400.0])?;
    check_fit_exact(-0.5, -2.0, &[1.0, 7.0, 13.0])
}
