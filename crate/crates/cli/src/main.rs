use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::Parser;
use pairsim_cli::{execute_plan, PlanBuilder};

/// Run pair-pattern market simulations and write CSV summaries.
///
/// Every flag overrides the same key of the config file.
#[derive(Debug, Parser)]
#[command(name = "pairsim", version)]
struct Args {
    /// `key = value` config file; keys match the long flag names.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Price impact: linear or sqrt.
    #[arg(long)]
    impact: Option<String>,
    #[arg(long)]
    n_pair: Option<String>,
    #[arg(long)]
    n_mg: Option<String>,
    #[arg(long)]
    n_prod: Option<String>,
    /// Strategies per trader.
    #[arg(long)]
    s: Option<String>,
    /// Memory length in bits.
    #[arg(long)]
    m: Option<String>,
    /// Recorded steps after warmup.
    #[arg(long)]
    steps: Option<String>,
    #[arg(long)]
    warmup: Option<String>,
    /// Master seed; per-run seeds are derived from it.
    #[arg(long)]
    seed: Option<String>,
    /// Seeds per sweep point.
    #[arg(long)]
    runs: Option<String>,
    /// Replace the poorest pair trader every this many steps (0 = off).
    #[arg(long)]
    evolution_interval: Option<String>,
    /// Output directory.
    #[arg(long)]
    out: Option<String>,
    /// Also write per-run series, trades and wealth files.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    dump_series: Option<String>,
    /// excess-demand or mid-return.
    #[arg(long)]
    history_source: Option<String>,
    /// random or reuse-last.
    #[arg(long)]
    zero_bit_rule: Option<String>,
    /// per-strategy or realized.
    #[arg(long)]
    mg_score_mode: Option<String>,
    /// `variable=v1,v2,...`, e.g. `n-pair=50,100,200`.
    #[arg(long)]
    sweep: Option<String>,
    /// Worker threads (0 = one per core).
    #[arg(long)]
    workers: Option<String>,
    /// Fit bands as `lo:hi,lo:hi`.
    #[arg(long)]
    bands: Option<String>,
}

impl Args {
    fn overrides(&self) -> Vec<(&'static str, &String)> {
        let pairs: [(&'static str, &Option<String>); 19] = [
            ("impact", &self.impact),
            ("n-pair", &self.n_pair),
            ("n-mg", &self.n_mg),
            ("n-prod", &self.n_prod),
            ("s", &self.s),
            ("m", &self.m),
            ("steps", &self.steps),
            ("warmup", &self.warmup),
            ("seed", &self.seed),
            ("runs", &self.runs),
            ("evolution-interval", &self.evolution_interval),
            ("out", &self.out),
            ("dump-series", &self.dump_series),
            ("history-source", &self.history_source),
            ("zero-bit-rule", &self.zero_bit_rule),
            ("mg-score-mode", &self.mg_score_mode),
            ("sweep", &self.sweep),
            ("workers", &self.workers),
            ("bands", &self.bands),
        ];
        pairs
            .into_iter()
            .filter_map(|(k, v)| v.as_ref().map(|v| (k, v)))
            .collect()
    }
}

fn main() -> Result<ExitCode> {
    let args = Args::parse();
    let mut builder = PlanBuilder::new();
    if let Some(path) = &args.config {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        builder
            .apply_document(&text)
            .with_context(|| format!("in {}", path.display()))?;
    }
    for (key, value) in args.overrides() {
        builder.apply(key, value).with_context(|| format!("--{key}"))?;
    }
    let plan = builder.build()?;
    let report = execute_plan(&plan)?;
    let mut failed = false;
    for (i, err) in report.failures() {
        failed = true;
        eprintln!("point {i} failed: {err}");
    }
    for f in &report.files {
        println!("{}", f.display());
    }
    Ok(if failed { ExitCode::FAILURE } else { ExitCode::SUCCESS })
}
