//! Runs every (point, seed) pair of a plan on a worker pool, then reduces the
//! per-run observables into the CSV files of the output directory.
//!
//! Output files:
//! - `manifest.txt`: the resolved plan plus every derived seed
//! - `summary.csv`: one row per sweep point
//! - `exponents.csv`: power-law fits of the summary columns per band
//! - `kinds.csv`: mean wealth per trader kind and point
//! - `conditional.csv`: pooled `p(u, j)` and mean `<A|u>` per point
//! - `washout.csv`: elimination times (evolution runs only)
//! - `runs/`: per-run series, trades and wealth files with `dump-series`

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use pairsim_core::analytics::{
    fit_power_law, mean_wealth_of, summarize, washout_of, ConditionalProbability, ObservableSummary, Washout,
};
use pairsim_core::{run, RunOutput, SimConfig, TraderKind};
use rayon::prelude::*;
use thiserror::Error;

use crate::format::{fmt_num, fmt_opt, CsvWriter};
use crate::plan::ExperimentPlan;

pub const SERIES_HEADER: [&str; 5] = ["t", "price", "return", "excess_demand", "history"];
pub const SUMMARY_HEADER: [&str; 10] = [
    "sweep_value",
    "sigma2",
    "sigma2_se",
    "H",
    "H_se",
    "K",
    "K_se",
    "mean_wealth",
    "mean_wealth_se",
    "abs_sum_a_bias",
];
pub const TRADES_HEADER: [&str; 6] = ["trader_id", "open_t", "close_t", "direction", "open_price", "close_price"];
pub const WEALTH_HEADER: [&str; 5] = ["trader_id", "kind", "wealth", "age", "switch_count"];
pub const EXPONENTS_HEADER: [&str; 7] = ["observable", "band_lo", "band_hi", "exponent", "intercept", "r_squared", "points"];
pub const KINDS_HEADER: [&str; 5] = ["sweep_value", "kind", "traders", "mean_wealth", "mean_wealth_se"];
pub const CONDITIONAL_HEADER: [&str; 7] = ["sweep_value", "u", "visits", "p_down", "p_zero", "p_up", "a_given_u"];
pub const WASHOUT_HEADER: [&str; 5] = ["sweep_value", "run", "fraction", "t", "censored"];

/// Elimination fractions reported for evolution runs.
pub const WASHOUT_FRACTIONS: [f64; 3] = [0.25, 0.5, 0.75];

#[derive(Debug, Error)]
pub enum ExecError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("worker pool: {0}")]
    Pool(String),
}

fn io_at(path: &Path) -> impl FnOnce(io::Error) -> ExecError + '_ {
    move |source| ExecError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Observables of one run, small enough to keep for every job.
#[derive(Debug, Clone)]
struct RunResult {
    obs: ObservableSummary,
    kind_wealth: [Option<f64>; 3],
    kind_count: [usize; 3],
    washout: Option<[Washout; 3]>,
}

/// Mean and standard error; the error is `None` below two samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanSe {
    pub mean: f64,
    pub se: Option<f64>,
}

pub fn mean_se(xs: &[f64]) -> MeanSe {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let se = (xs.len() > 1).then(|| {
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (var / n).sqrt()
    });
    MeanSe { mean, se }
}

/// Aggregates of one sweep point.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSummary {
    pub value: u64,
    pub sigma2: MeanSe,
    pub h_value: MeanSe,
    pub k_value: MeanSe,
    pub mean_wealth: MeanSe,
    pub abs_sum_a_bias: f64,
    pub kind_wealth: [Option<MeanSe>; 3],
    pub kind_count: [usize; 3],
    pub conditional: ConditionalProbability,
    pub a_given_u: Vec<Option<f64>>,
    /// Mean elimination time per entry of [`WASHOUT_FRACTIONS`].
    pub washout_mean: Option<[f64; 3]>,
}

#[derive(Debug, Clone)]
pub struct ExecutionReport {
    pub points: Vec<Result<PointSummary, String>>,
    pub files: Vec<PathBuf>,
}

impl ExecutionReport {
    pub fn failures(&self) -> impl Iterator<Item = (usize, &String)> {
        self.points
            .iter()
            .enumerate()
            .filter_map(|(i, p)| p.as_ref().err().map(|e| (i, e)))
    }
}

fn run_job(plan: &ExperimentPlan, out_dir: &Path, point: usize, run_idx: usize, base: &SimConfig) -> Result<RunResult, String> {
    let config = SimConfig {
        seed: plan.run_seed(point, run_idx),
        ..base.clone()
    };
    let output = run(&config).map_err(|e| e.to_string())?;
    if plan.dump_series {
        dump_run(out_dir, point, run_idx, &output).map_err(|e| e.to_string())?;
    }
    let mut kind_wealth = [None; 3];
    let mut kind_count = [0; 3];
    for kind in TraderKind::ALL {
        kind_wealth[kind.index()] = mean_wealth_of(&output, kind);
        kind_count[kind.index()] = output.traders_of(kind).count();
    }
    let washout = (config.evolution_interval > 0).then(|| WASHOUT_FRACTIONS.map(|f| washout_of(&output, f)));
    Ok(RunResult {
        obs: summarize(&output),
        kind_wealth,
        kind_count,
        washout,
    })
}

fn run_file(dir: &Path, point: usize, run_idx: usize, what: &str) -> PathBuf {
    dir.join("runs").join(format!("p{point:03}_r{run_idx:03}_{what}.csv"))
}

/// Write the series, trades and wealth files of one run.
pub fn dump_run(out_dir: &Path, point: usize, run_idx: usize, output: &RunOutput) -> Result<(), ExecError> {
    let path = run_file(out_dir, point, run_idx, "series");
    let mut w = CsvWriter::create(&path, &SERIES_HEADER).map_err(io_at(&path))?;
    for t in output.warmup..output.warmup + output.steps {
        w.row([
            t.to_string(),
            fmt_num(output.price[t]),
            fmt_num(output.returns[t]),
            output.excess_demand[t].to_string(),
            output.history[t].to_string(),
        ])
        .map_err(io_at(&path))?;
    }
    w.finish().map_err(io_at(&path))?;

    let path = run_file(out_dir, point, run_idx, "trades");
    let mut w = CsvWriter::create(&path, &TRADES_HEADER).map_err(io_at(&path))?;
    for tr in &output.trades {
        w.row([
            tr.trader_id.to_string(),
            tr.open_time.to_string(),
            tr.close_time.to_string(),
            tr.direction.to_string(),
            fmt_num(tr.open_price),
            fmt_num(tr.close_price),
        ])
        .map_err(io_at(&path))?;
    }
    w.finish().map_err(io_at(&path))?;

    let path = run_file(out_dir, point, run_idx, "wealth");
    let mut w = CsvWriter::create(&path, &WEALTH_HEADER).map_err(io_at(&path))?;
    for t in &output.traders {
        w.row([
            t.id.to_string(),
            t.kind.to_string(),
            fmt_num(t.wealth),
            t.age.to_string(),
            t.switch_count.to_string(),
        ])
        .map_err(io_at(&path))?;
    }
    w.finish().map_err(io_at(&path))
}

fn aggregate(value: u64, runs: &[RunResult]) -> PointSummary {
    let col = |f: fn(&ObservableSummary) -> f64| mean_se(&runs.iter().map(|r| f(&r.obs)).collect::<Vec<_>>());
    let mut conditional = ConditionalProbability::default();
    for r in runs {
        conditional.merge(&r.obs.p_uj);
    }
    let patterns = conditional.pattern_count();
    let a_given_u = (0..patterns)
        .map(|u| {
            let vals: Vec<f64> = runs.iter().filter_map(|r| r.obs.a_given_u[u]).collect();
            (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
        })
        .collect();
    let kind_wealth = [0, 1, 2].map(|k| {
        let vals: Vec<f64> = runs.iter().filter_map(|r| r.kind_wealth[k]).collect();
        (!vals.is_empty()).then(|| mean_se(&vals))
    });
    let washout_mean = runs.first().and_then(|r| r.washout).map(|_| {
        [0, 1, 2].map(|i| {
            runs.iter().map(|r| r.washout.unwrap()[i].time() as f64).sum::<f64>() / runs.len() as f64
        })
    });
    PointSummary {
        value,
        sigma2: col(|o| o.sigma2),
        h_value: col(|o| o.h_value),
        k_value: col(|o| o.k_value),
        mean_wealth: col(|o| o.mean_wealth),
        abs_sum_a_bias: runs.iter().map(|r| r.obs.abs_sum_a_bias).sum::<f64>() / runs.len() as f64,
        kind_wealth,
        kind_count: runs[0].kind_count,
        conditional,
        a_given_u,
        washout_mean,
    }
}

/// Run the plan and write every output file. The manifest is written before
/// any simulation starts; points that fail are reported, not fatal.
pub fn execute_plan(plan: &ExperimentPlan) -> Result<ExecutionReport, ExecError> {
    let dir = plan.output_dir.as_path();
    fs::create_dir_all(dir).map_err(io_at(dir))?;
    if plan.dump_series {
        let runs_dir = dir.join("runs");
        fs::create_dir_all(&runs_dir).map_err(io_at(&runs_dir))?;
    }
    let mut files = Vec::new();
    let manifest = dir.join("manifest.txt");
    fs::write(&manifest, plan.manifest()).map_err(io_at(&manifest))?;
    files.push(manifest);

    let points = plan.points();
    let jobs: Vec<(usize, usize)> = (0..points.len())
        .flat_map(|p| (0..plan.runs_per_point).map(move |r| (p, r)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(plan.workers)
        .build()
        .map_err(|e| ExecError::Pool(e.to_string()))?;
    let results: Vec<Result<RunResult, String>> = pool.install(|| {
        jobs.par_iter()
            .map(|&(p, r)| run_job(plan, dir, p, r, &points[p].config))
            .collect()
    });

    let mut summaries = Vec::with_capacity(points.len());
    for (p, chunk) in results.chunks(plan.runs_per_point).enumerate() {
        let runs: Result<Vec<RunResult>, String> = chunk.iter().cloned().collect();
        summaries.push(match runs {
            Ok(runs) => Ok((aggregate(points[p].value, &runs), runs)),
            Err(e) => Err(format!("point {p} ({}={}): {e}", plan.sweep_variable().key(), points[p].value)),
        });
    }

    files.extend(write_summaries(plan, dir, &summaries)?);
    Ok(ExecutionReport {
        points: summaries
            .into_iter()
            .map(|s| s.map(|(summary, _)| summary))
            .collect(),
        files,
    })
}

type PointOutcome = Result<(PointSummary, Vec<RunResult>), String>;

fn write_summaries(plan: &ExperimentPlan, dir: &Path, points: &[PointOutcome]) -> Result<Vec<PathBuf>, ExecError> {
    let mut files = Vec::new();

    let path = dir.join("summary.csv");
    let mut w = CsvWriter::create(&path, &SUMMARY_HEADER).map_err(io_at(&path))?;
    for (i, p) in points.iter().enumerate() {
        let row = match p {
            Ok((s, _)) => vec![
                s.value.to_string(),
                fmt_num(s.sigma2.mean),
                fmt_opt(s.sigma2.se),
                fmt_num(s.h_value.mean),
                fmt_opt(s.h_value.se),
                fmt_num(s.k_value.mean),
                fmt_opt(s.k_value.se),
                fmt_num(s.mean_wealth.mean),
                fmt_opt(s.mean_wealth.se),
                fmt_num(s.abs_sum_a_bias),
            ],
            Err(_) => {
                let mut row = vec![String::new(); SUMMARY_HEADER.len()];
                row[0] = plan.points()[i].value.to_string();
                row
            }
        };
        w.row(row).map_err(io_at(&path))?;
    }
    w.finish().map_err(io_at(&path))?;
    files.push(path);

    let ok: Vec<&PointSummary> = points.iter().filter_map(|p| p.as_ref().ok().map(|(s, _)| s)).collect();

    let path = dir.join("exponents.csv");
    let mut w = CsvWriter::create(&path, &EXPONENTS_HEADER).map_err(io_at(&path))?;
    let mut series: Vec<(&str, Vec<(f64, f64)>)> = vec![
        ("sigma2", ok.iter().map(|s| (s.value as f64, s.sigma2.mean)).collect()),
        ("H", ok.iter().map(|s| (s.value as f64, s.h_value.mean)).collect()),
        ("K", ok.iter().map(|s| (s.value as f64, s.k_value.mean)).collect()),
        ("mean_wealth", ok.iter().map(|s| (s.value as f64, s.mean_wealth.mean)).collect()),
        ("abs_sum_a_bias", ok.iter().map(|s| (s.value as f64, s.abs_sum_a_bias)).collect()),
    ];
    if ok.iter().all(|s| s.washout_mean.is_some()) && !ok.is_empty() {
        for (i, name) in ["washout_25", "washout_50", "washout_75"].into_iter().enumerate() {
            series.push((name, ok.iter().map(|s| (s.value as f64, s.washout_mean.unwrap()[i])).collect()));
        }
    }
    for (name, pts) in &series {
        for &(lo, hi) in &plan.fit_bands {
            let fields = match fit_power_law(pts, Some((lo, hi))) {
                Ok(f) => vec![
                    fmt_num(f.exponent),
                    fmt_num(f.intercept),
                    fmt_num(f.r_squared),
                    f.points.to_string(),
                ],
                Err(_) => vec![String::new(), String::new(), String::new(), "0".into()],
            };
            let mut row = vec![name.to_string(), fmt_num(lo), fmt_num(hi)];
            row.extend(fields);
            w.row(row).map_err(io_at(&path))?;
        }
    }
    w.finish().map_err(io_at(&path))?;
    files.push(path);

    let path = dir.join("kinds.csv");
    let mut w = CsvWriter::create(&path, &KINDS_HEADER).map_err(io_at(&path))?;
    for s in &ok {
        for kind in TraderKind::ALL {
            if let Some(m) = s.kind_wealth[kind.index()] {
                w.row([
                    s.value.to_string(),
                    kind.to_string(),
                    s.kind_count[kind.index()].to_string(),
                    fmt_num(m.mean),
                    fmt_opt(m.se),
                ])
                .map_err(io_at(&path))?;
            }
        }
    }
    w.finish().map_err(io_at(&path))?;
    files.push(path);

    let path = dir.join("conditional.csv");
    let mut w = CsvWriter::create(&path, &CONDITIONAL_HEADER).map_err(io_at(&path))?;
    for s in &ok {
        for u in 0..s.conditional.pattern_count() {
            let row = s.conditional.row(u);
            w.row([
                s.value.to_string(),
                u.to_string(),
                s.conditional.visits(u).to_string(),
                fmt_opt(row.map(|r| r.down)),
                fmt_opt(row.map(|r| r.zero)),
                fmt_opt(row.map(|r| r.up)),
                fmt_opt(s.a_given_u[u]),
            ])
            .map_err(io_at(&path))?;
        }
    }
    w.finish().map_err(io_at(&path))?;
    files.push(path);

    if plan.base.evolution_interval > 0 {
        let path = dir.join("washout.csv");
        let mut w = CsvWriter::create(&path, &WASHOUT_HEADER).map_err(io_at(&path))?;
        for p in points.iter().filter_map(|p| p.as_ref().ok()) {
            let (s, runs) = p;
            for (run_idx, r) in runs.iter().enumerate() {
                let Some(times) = r.washout else { continue };
                for (f, t) in WASHOUT_FRACTIONS.iter().zip(times) {
                    w.row([
                        s.value.to_string(),
                        run_idx.to_string(),
                        fmt_num(*f),
                        t.time().to_string(),
                        u8::from(t.is_censored()).to_string(),
                    ])
                    .map_err(io_at(&path))?;
                }
            }
        }
        w.finish().map_err(io_at(&path))?;
        files.push(path);
    }

    Ok(files)
}
