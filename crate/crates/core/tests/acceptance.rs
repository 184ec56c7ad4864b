//! Desk-scale acceptance run. Prints one PASS/FAIL line per criterion.
//!
//! By default the binary reports and exits successfully so the rest of the
//! workspace suite stays usable; set `ACCEPTANCE_STRICT=1` to turn any FAIL
//! into a non-zero exit.

mod common;

use std::time::Instant;

use pairsim_core::analytics::{
    fit_power_law, mean_wealth_of, summarize, washout_time, wealth_sum_oracle_linear, ObservableSummary, Washout,
};
use pairsim_core::{derive_seed, run, ImpactKind, RunOutput, SimConfig, Simulation, TraderKind};
use rayon::prelude::*;

const MASTER_SEED: u64 = 20_240_601;
const STEPS: usize = 100_000;
const WARMUP: usize = 500;
const SEEDS: usize = 20;

const SWEEP_N: [usize; 5] = [50, 100, 200, 400, 800];
/// Fit range for the sigma^2, H and K exponents.
const FIT_RANGE: (f64, f64) = (100.0, 801.0);

const ACCOUNTING_REL_TOL: f64 = 1e-6;
const ZERO_SUM_SE: f64 = 3.0;
const SQRT_WEALTH_EXPONENT: (f64, f64) = (0.47, 0.20);
const SIGMA2_EXPONENT: [(f64, f64); 2] = [(1.81, 0.35), (0.92, 0.25)];
const H_EXPONENT: [(f64, f64); 2] = [(1.64, 0.35), (0.95, 0.25)];
const K_EXPONENT: [(f64, f64); 2] = [(1.58, 0.35), (0.96, 0.25)];
/// Reference sqrt/linear bias ratios at N = 50 and N = 100.
const BIAS_RATIO_REFERENCE: [(usize, f64); 2] = [(50, 7.56), (100, 18.58)];
const BIAS_RATIO_FACTOR: f64 = 3.0;
const BIAS_TREND_N: [usize; 3] = [50, 100, 400];

const EVOLUTION_INTERVAL: usize = 100;
const WASHOUT_N: [usize; 4] = [50, 100, 200, 400];
const WASHOUT_SEEDS: usize = 8;
const WASHOUT_CAP: usize = 2_000_000;
const WASHOUT_FRACTIONS: [f64; 3] = [0.25, 0.5, 0.75];
const WASHOUT_EXPONENT: (f64, f64) = (1.05, 0.25);
const WASHOUT_SPREAD: f64 = 0.2;

const FLOOR_N: usize = 100;
const FLOOR_SEEDS: usize = 10;

const MIXED_N_PAIR: usize = 100;
const MIXED_N_MG: std::ops::RangeInclusive<usize> = 1..=25;
const MIXED_SEEDS: usize = 10;
const MIXED_PEAK: (usize, usize) = (5, 3);

const PRODUCERS: usize = 100;
const PRODUCER_SEEDS: usize = 10;

struct Report {
    lines: Vec<(bool, String)>,
}

impl Report {
    fn record(&mut self, name: &str, pass: bool, detail: String) {
        let line = format!("{} {name}: {detail}", if pass { "PASS" } else { "FAIL" });
        println!("{line}");
        self.lines.push((pass, line));
    }
}

fn within(x: f64, (target, tol): (f64, f64)) -> bool {
    (x - target).abs() <= tol
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn std_err(xs: &[f64]) -> f64 {
    let m = mean(xs);
    let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64;
    (var / xs.len() as f64).sqrt()
}

fn base(impact: ImpactKind, n_pair: usize) -> SimConfig {
    SimConfig {
        n_pair,
        impact_kind: impact,
        steps: STEPS,
        warmup: WARMUP,
        ..SimConfig::default()
    }
}

/// What is kept of one no-evolution run.
struct RunDigest {
    obs: ObservableSummary,
    /// Relative gap between realized pair wealth and the demand-sum oracle.
    accounting_gap: f64,
    kind_wealth: [Option<f64>; 3],
}

fn digest(out: &RunOutput) -> RunDigest {
    let realized: f64 = out
        .traders_of(TraderKind::PairPattern)
        .map(|t| t.wealth - t.initial_wealth)
        .sum();
    let oracle = wealth_sum_oracle_linear(out).total;
    let scale = out.trades.iter().map(|t| t.pnl().abs()).sum::<f64>().max(1.0);
    RunDigest {
        obs: summarize(out),
        accounting_gap: (realized - oracle).abs() / scale,
        kind_wealth: TraderKind::ALL.map(|k| mean_wealth_of(out, k)),
    }
}

/// `seeds` runs of `config` with seeds derived from `(point, run)`.
fn replicate(config: &SimConfig, point: u64, seeds: usize) -> Vec<RunDigest> {
    (0..seeds)
        .into_par_iter()
        .map(|r| {
            let c = SimConfig {
                seed: derive_seed(MASTER_SEED, point, r as u64),
                ..config.clone()
            };
            digest(&run(&c).expect("valid config"))
        })
        .collect()
}

struct Sweep {
    n: Vec<usize>,
    runs: Vec<Vec<RunDigest>>,
}

impl Sweep {
    fn column(&self, f: impl Fn(&RunDigest) -> f64) -> Vec<f64> {
        self.runs.iter().map(|rs| mean(&rs.iter().map(&f).collect::<Vec<_>>())).collect()
    }

    fn at(&self, n: usize) -> &[RunDigest] {
        &self.runs[self.n.iter().position(|&x| x == n).expect("swept N")]
    }

    fn exponent(&self, f: impl Fn(&RunDigest) -> f64, range: Option<(f64, f64)>) -> Result<f64, String> {
        let pts: Vec<(f64, f64)> = self.n.iter().map(|&n| n as f64).zip(self.column(f)).collect();
        fit_power_law(&pts, range).map(|f| f.exponent).map_err(|e| e.to_string())
    }
}

fn sweep(impact: ImpactKind, salt: u64) -> Sweep {
    let runs = SWEEP_N
        .iter()
        .map(|&n| replicate(&base(impact, n), salt + n as u64, SEEDS))
        .collect();
    Sweep {
        n: SWEEP_N.to_vec(),
        runs,
    }
}

fn fmt_fit(r: &Result<f64, String>) -> String {
    match r {
        Ok(x) => format!("{x:.3}"),
        Err(e) => format!("no fit ({e})"),
    }
}

fn exponent_check(report: &mut Report, name: &str, sweeps: [&Sweep; 2], f: fn(&RunDigest) -> f64, targets: [(f64, f64); 2]) {
    let fits = sweeps.map(|s| s.exponent(f, Some(FIT_RANGE)));
    let pass = fits
        .iter()
        .zip(targets)
        .all(|(fit, t)| fit.as_ref().is_ok_and(|&x| within(x, t)));
    report.record(
        name,
        pass,
        format!(
            "linear {} (target {}±{}), sqrt {} (target {}±{})",
            fmt_fit(&fits[0]),
            targets[0].0,
            targets[0].1,
            fmt_fit(&fits[1]),
            targets[1].0,
            targets[1].1
        ),
    );
}

/// Evolution run stopped once the largest washout fraction is reached.
fn washout_run(n: usize, seed: u64) -> [Washout; 3] {
    let config = SimConfig {
        n_pair: n,
        impact_kind: ImpactKind::SquareRoot,
        evolution_interval: EVOLUTION_INTERVAL,
        steps: WASHOUT_CAP,
        warmup: 0,
        seed,
        ..SimConfig::default()
    };
    let last = WASHOUT_FRACTIONS.iter().copied().fold(0.0, f64::max);
    let floor = ((1.0 - last) * n as f64).floor() as u32;
    let mut sim = Simulation::new(config).expect("valid config");
    let mut survivors = Vec::new();
    while sim.time() < WASHOUT_CAP {
        sim.step();
        survivors.push(sim.survivors());
        if sim.survivors() <= floor {
            break;
        }
    }
    WASHOUT_FRACTIONS.map(|f| washout_time(&survivors, 0, n, f))
}

fn main() {
    let started = Instant::now();
    let mut report = Report { lines: Vec::new() };

    let props = common::property_suite();
    report.record(
        "property suite",
        props.is_ok(),
        props.err().unwrap_or_else(|| "determinism, normalization, alternation, ledger, accounting, brute-force H/K, exact fits".into()),
    );

    let linear = sweep(ImpactKind::Linear, 0);
    let sqrt = sweep(ImpactKind::SquareRoot, 10_000);

    let worst_gap = linear
        .runs
        .iter()
        .flatten()
        .map(|d| d.accounting_gap)
        .fold(0.0, f64::max);
    report.record(
        "accounting identity (linear)",
        worst_gap <= ACCOUNTING_REL_TOL,
        format!("worst relative gap {worst_gap:.2e} over {} runs", linear.runs.iter().flatten().count()),
    );

    let w100: Vec<f64> = linear.at(100).iter().map(|d| d.obs.mean_wealth).collect();
    let (m, se) = (mean(&w100), std_err(&w100));
    report.record(
        "zero sum (linear, N=100)",
        m.abs() <= ZERO_SUM_SE * se,
        format!("mean wealth {m:.4} with standard error {se:.4} over {SEEDS} seeds"),
    );

    let sqrt_w = sqrt.column(|d| d.obs.mean_wealth);
    let w_fit = sqrt.exponent(|d| d.obs.mean_wealth, None);
    let positive = sqrt_w.iter().all(|&w| w > 0.0);
    report.record(
        "positive sum (sqrt)",
        positive && w_fit.as_ref().is_ok_and(|&x| within(x, SQRT_WEALTH_EXPONENT)),
        format!(
            "mean wealth by N {:?}, exponent {} (target {}±{})",
            sqrt_w.iter().map(|w| format!("{w:.1}")).collect::<Vec<_>>(),
            fmt_fit(&w_fit),
            SQRT_WEALTH_EXPONENT.0,
            SQRT_WEALTH_EXPONENT.1
        ),
    );

    exponent_check(&mut report, "sigma2 exponents", [&linear, &sqrt], |d| d.obs.sigma2, SIGMA2_EXPONENT);
    exponent_check(&mut report, "H exponents", [&linear, &sqrt], |d| d.obs.h_value, H_EXPONENT);
    exponent_check(&mut report, "K exponents", [&linear, &sqrt], |d| d.obs.k_value, K_EXPONENT);

    let ratio = |n: usize| {
        let b = |s: &Sweep| mean(&s.at(n).iter().map(|d| d.obs.abs_sum_a_bias).collect::<Vec<_>>());
        b(&sqrt) / b(&linear)
    };
    let trend: Vec<f64> = BIAS_TREND_N.iter().map(|&n| ratio(n)).collect();
    let increasing = trend.windows(2).all(|w| w[1] > w[0]);
    let magnitude = BIAS_RATIO_REFERENCE
        .iter()
        .all(|&(n, r)| (ratio(n) / r).max(r / ratio(n)) <= BIAS_RATIO_FACTOR);
    report.record(
        "excess demand asymmetry",
        trend[0] > 1.0 && increasing && magnitude,
        format!(
            "sqrt/linear ratio at N={BIAS_TREND_N:?}: {:?} (reference 7.56 at 50, 18.58 at 100)",
            trend.iter().map(|r| format!("{r:.2}")).collect::<Vec<_>>()
        ),
    );

    let washouts: Vec<Vec<[Washout; 3]>> = WASHOUT_N
        .iter()
        .map(|&n| {
            (0..WASHOUT_SEEDS)
                .into_par_iter()
                .map(|r| washout_run(n, derive_seed(MASTER_SEED, 20_000 + n as u64, r as u64)))
                .collect()
        })
        .collect();
    let censored = washouts.iter().flatten().flatten().filter(|w| w.is_censored()).count();
    let wash_fits: Vec<Result<f64, String>> = (0..WASHOUT_FRACTIONS.len())
        .map(|i| {
            let pts: Vec<(f64, f64)> = WASHOUT_N
                .iter()
                .zip(&washouts)
                .map(|(&n, ws)| (n as f64, mean(&ws.iter().map(|w| w[i].time() as f64).collect::<Vec<_>>())))
                .collect();
            fit_power_law(&pts, None).map(|f| f.exponent).map_err(|e| e.to_string())
        })
        .collect();
    let exps: Vec<f64> = wash_fits.iter().filter_map(|f| f.as_ref().ok().copied()).collect();
    let spread = exps.iter().copied().fold(f64::MIN, f64::max) - exps.iter().copied().fold(f64::MAX, f64::min);
    let half = wash_fits[1].as_ref().ok().copied();
    report.record(
        "evolution washout",
        exps.len() == 3 && half.is_some_and(|x| within(x, WASHOUT_EXPONENT)) && spread < WASHOUT_SPREAD,
        format!(
            "exponents at 25/50/75%: {:?} (target {}±{} at 50%, spread < {WASHOUT_SPREAD}), {censored} censored",
            wash_fits.iter().map(fmt_fit).collect::<Vec<_>>(),
            WASHOUT_EXPONENT.0,
            WASHOUT_EXPONENT.1
        ),
    );

    let floors: Vec<(f64, f64, f64)> = (0..FLOOR_SEEDS)
        .into_par_iter()
        .map(|r| {
            let config = SimConfig {
                evolution_interval: EVOLUTION_INTERVAL,
                seed: derive_seed(MASTER_SEED, 30_000, r as u64),
                ..base(ImpactKind::SquareRoot, FLOOR_N)
            };
            let out = run(&config).expect("valid config");
            let mut pair: Vec<_> = out.traders_of(TraderKind::PairPattern).copied().collect();
            let min = pair.iter().map(|t| t.wealth).fold(f64::MAX, f64::min);
            pair.sort_by_key(|t| std::cmp::Reverse(t.age));
            let decile = (pair.len() / 10).max(1);
            let oldest = mean(&pair[..decile].iter().map(|t| t.wealth).collect::<Vec<_>>());
            let youngest = mean(&pair[pair.len() - decile..].iter().map(|t| t.wealth).collect::<Vec<_>>());
            (min, oldest, youngest)
        })
        .collect();
    let min = floors.iter().map(|f| f.0).fold(f64::MAX, f64::min);
    let oldest = mean(&floors.iter().map(|f| f.1).collect::<Vec<_>>());
    let youngest = mean(&floors.iter().map(|f| f.2).collect::<Vec<_>>());
    report.record(
        "evolution wealth floor",
        min > 0.0 && oldest > youngest,
        format!("lowest survivor wealth {min:.2}, oldest decile {oldest:.2}, youngest decile {youngest:.2}"),
    );

    let mixed: Vec<(usize, f64, f64)> = MIXED_N_MG
        .map(|n_mg| {
            let config = SimConfig {
                n_mg,
                ..base(ImpactKind::SquareRoot, MIXED_N_PAIR)
            };
            let runs = replicate(&config, 40_000 + n_mg as u64, MIXED_SEEDS);
            let kind = |k: TraderKind| mean(&runs.iter().map(|d| d.kind_wealth[k.index()].unwrap()).collect::<Vec<_>>());
            (n_mg, kind(TraderKind::Mg), kind(TraderKind::PairPattern))
        })
        .collect();
    let argmax = |f: fn(&(usize, f64, f64)) -> f64| {
        mixed
            .iter()
            .max_by(|a, b| f(a).total_cmp(&f(b)))
            .map(|x| x.0)
            .unwrap()
    };
    let (first, last) = (mixed[0], mixed[mixed.len() - 1]);
    let peaks = [argmax(|x| x.1), argmax(|x| x.2)];
    let (lo, hi) = (*MIXED_N_MG.start(), *MIXED_N_MG.end());
    let near = |p: usize| p > lo && p < hi && p.abs_diff(MIXED_PEAK.0) <= MIXED_PEAK.1;
    report.record(
        "mixed population",
        first.1 > 0.0 && first.1 > first.2 && last.1 < 0.0 && last.1 < last.2 && peaks.iter().all(|&p| near(p)),
        format!(
            "N_m=1: mg {:.1} pair {:.1}; N_m=25: mg {:.1} pair {:.1}; peaks mg {} pair {} (target {}±{})",
            first.1, first.2, last.1, last.2, peaks[0], peaks[1], MIXED_PEAK.0, MIXED_PEAK.1
        ),
    );

    let pair_wealth = |n_prod: usize| {
        let config = SimConfig {
            n_prod,
            ..base(ImpactKind::SquareRoot, 100)
        };
        let runs = replicate(&config, 50_000, PRODUCER_SEEDS);
        mean(&runs.iter().map(|d| d.kind_wealth[TraderKind::PairPattern.index()].unwrap()).collect::<Vec<_>>())
    };
    let (without, with) = (pair_wealth(0), pair_wealth(PRODUCERS));
    report.record(
        "producers raise pair wealth",
        with > without,
        format!("pair mean wealth {without:.1} without producers, {with:.1} with {PRODUCERS}"),
    );

    let failed = report.lines.iter().filter(|(pass, _)| !pass).count();
    println!(
        "{} of {} criteria passed in {:.0?}",
        report.lines.len() - failed,
        report.lines.len(),
        started.elapsed()
    );
    if failed > 0 && std::env::var_os("ACCEPTANCE_STRICT").is_some_and(|v| v == "1") {
        std::process::exit(1);
    }
}
