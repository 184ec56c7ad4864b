//! Experiment plans: a base configuration, an optional sweep and the number
//! of seeds per point, resolved from a flat `key = value` document and
//! command-line overrides. Both sources go through [`PlanBuilder::apply`].

use std::fmt::Write as _;
use std::path::PathBuf;

use pairsim_core::analytics::DEFAULT_FIT_BANDS;
use pairsim_core::{derive_seed, SimConfig};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PlanError {
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("invalid value for `{key}`: {reason}")]
    InvalidValue { key: String, reason: String },
    #[error("line {line}: expected `key = value`, got `{text}`")]
    Syntax { line: usize, text: String },
    #[error("out of range: {0}")]
    Range(#[from] pairsim_core::ConfigError),
    #[error("conflicting population counts: {0}")]
    Conflict(String),
}

fn invalid(key: &str, reason: impl Into<String>) -> PlanError {
    PlanError::InvalidValue {
        key: key.to_string(),
        reason: reason.into(),
    }
}

/// Parameters that can be swept.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepVariable {
    NPair,
    NMg,
    NProd,
    Memory,
    Strategies,
    Steps,
    EvolutionInterval,
}

impl SweepVariable {
    pub fn key(self) -> &'static str {
        match self {
            SweepVariable::NPair => "n-pair",
            SweepVariable::NMg => "n-mg",
            SweepVariable::NProd => "n-prod",
            SweepVariable::Memory => "m",
            SweepVariable::Strategies => "s",
            SweepVariable::Steps => "steps",
            SweepVariable::EvolutionInterval => "evolution-interval",
        }
    }

    fn parse(key: &str) -> Option<Self> {
        Some(match key {
            "n-pair" => SweepVariable::NPair,
            "n-mg" => SweepVariable::NMg,
            "n-prod" => SweepVariable::NProd,
            "m" | "memory" => SweepVariable::Memory,
            "s" => SweepVariable::Strategies,
            "steps" => SweepVariable::Steps,
            "evolution-interval" => SweepVariable::EvolutionInterval,
            _ => return None,
        })
    }

    pub fn apply(self, config: &mut SimConfig, value: u64) {
        match self {
            SweepVariable::NPair => config.n_pair = value as usize,
            SweepVariable::NMg => config.n_mg = value as usize,
            SweepVariable::NProd => config.n_prod = value as usize,
            SweepVariable::Memory => config.memory = value as u32,
            SweepVariable::Strategies => config.s_per_trader = value as usize,
            SweepVariable::Steps => config.steps = value as usize,
            SweepVariable::EvolutionInterval => config.evolution_interval = value as usize,
        }
    }

    pub fn read(self, config: &SimConfig) -> u64 {
        match self {
            SweepVariable::NPair => config.n_pair as u64,
            SweepVariable::NMg => config.n_mg as u64,
            SweepVariable::NProd => config.n_prod as u64,
            SweepVariable::Memory => u64::from(config.memory),
            SweepVariable::Strategies => config.s_per_trader as u64,
            SweepVariable::Steps => config.steps as u64,
            SweepVariable::EvolutionInterval => config.evolution_interval as u64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sweep {
    pub variable: SweepVariable,
    pub values: Vec<u64>,
}

/// Fully resolved experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentPlan {
    /// `seed` here is the master seed; per-run seeds are derived from it.
    pub base: SimConfig,
    pub sweep: Option<Sweep>,
    pub runs_per_point: usize,
    pub output_dir: PathBuf,
    pub dump_series: bool,
    /// Worker threads; 0 means machine parallelism.
    pub workers: usize,
    /// Half-open N-ranges `[lo, hi)` for the power-law fits.
    pub fit_bands: Vec<(f64, f64)>,
}

/// One sweep point expanded into its runs.
#[derive(Debug, Clone, PartialEq)]
pub struct Point {
    pub index: usize,
    pub value: u64,
    pub config: SimConfig,
}

impl ExperimentPlan {
    pub fn sweep_variable(&self) -> SweepVariable {
        self.sweep.as_ref().map_or(SweepVariable::NPair, |s| s.variable)
    }

    /// Points in sweep order; without a sweep, one point keyed by `n-pair`.
    pub fn points(&self) -> Vec<Point> {
        let variable = self.sweep_variable();
        let values = match &self.sweep {
            Some(s) => s.values.clone(),
            None => vec![variable.read(&self.base)],
        };
        values
            .into_iter()
            .enumerate()
            .map(|(index, value)| {
                let mut config = self.base.clone();
                variable.apply(&mut config, value);
                Point { index, value, config }
            })
            .collect()
    }

    pub fn run_seed(&self, point: usize, run: usize) -> u64 {
        derive_seed(self.base.seed, point as u64, run as u64)
    }

    /// Plain-text manifest. It parses back as a config document describing
    /// the same plan; derived seeds are listed as comments.
    pub fn manifest(&self) -> String {
        let c = &self.base;
        let mut s = String::new();
        let _ = writeln!(s, "# pairsim experiment manifest");
        let _ = writeln!(s, "# per-run seed = splitmix64(splitmix64(splitmix64(seed) ^ point) ^ run)");
        for (k, v) in [
            ("n-pair", c.n_pair.to_string()),
            ("n-mg", c.n_mg.to_string()),
            ("n-prod", c.n_prod.to_string()),
            ("s", c.s_per_trader.to_string()),
            ("m", c.memory.to_string()),
            ("impact", c.impact_kind.to_string()),
            ("steps", c.steps.to_string()),
            ("warmup", c.warmup.to_string()),
            ("evolution-interval", c.evolution_interval.to_string()),
            ("seed", c.seed.to_string()),
            ("history-source", c.history_source.to_string()),
            ("zero-bit-rule", c.zero_bit_rule.to_string()),
            ("mg-score-mode", c.mg_score_mode.to_string()),
            ("runs", self.runs_per_point.to_string()),
            ("dump-series", self.dump_series.to_string()),
            ("bands", format_bands(&self.fit_bands)),
        ] {
            let _ = writeln!(s, "{k} = {v}");
        }
        if let Some(sweep) = &self.sweep {
            let values: Vec<String> = sweep.values.iter().map(u64::to_string).collect();
            let _ = writeln!(s, "sweep = {}={}", sweep.variable.key(), values.join(","));
        }
        for p in self.points() {
            for run in 0..self.runs_per_point {
                let _ = writeln!(
                    s,
                    "# point {} {}={} run {} seed {}",
                    p.index,
                    self.sweep_variable().key(),
                    p.value,
                    run,
                    self.run_seed(p.index, run)
                );
            }
        }
        s
    }
}

fn format_bands(bands: &[(f64, f64)]) -> String {
    bands
        .iter()
        .map(|(lo, hi)| format!("{lo}:{hi}"))
        .collect::<Vec<_>>()
        .join(",")
}

fn parse_bands(key: &str, value: &str) -> Result<Vec<(f64, f64)>, PlanError> {
    if value.trim().is_empty() {
        return Ok(Vec::new());
    }
    value
        .split(',')
        .map(|band| {
            let (lo, hi) = band
                .split_once(':')
                .ok_or_else(|| invalid(key, format!("band `{band}` is not `lo:hi`")))?;
            let lo: f64 = lo.trim().parse().map_err(|_| invalid(key, format!("bad bound `{lo}`")))?;
            let hi: f64 = hi.trim().parse().map_err(|_| invalid(key, format!("bad bound `{hi}`")))?;
            let valid = lo > 0.0 && lo < hi;
            if !valid {
                return Err(invalid(key, format!("band `{band}` must satisfy 0 < lo < hi")));
            }
            Ok((lo, hi))
        })
        .collect()
}

/// Accumulates `key = value` settings; later settings win.
#[derive(Debug, Clone)]
pub struct PlanBuilder {
    plan: ExperimentPlan,
}

impl Default for PlanBuilder {
    fn default() -> Self {
        PlanBuilder {
            plan: ExperimentPlan {
                base: SimConfig::default(),
                sweep: None,
                runs_per_point: 1,
                output_dir: PathBuf::from("out"),
                dump_series: false,
                workers: 0,
                fit_bands: DEFAULT_FIT_BANDS.to_vec(),
            },
        }
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, PlanError> {
    value
        .trim()
        .parse()
        .map_err(|_| invalid(key, format!("`{value}` is not a non-negative integer")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool, PlanError> {
    match value.trim() {
        "true" | "1" | "yes" | "on" => Ok(true),
        "false" | "0" | "no" | "off" => Ok(false),
        other => Err(invalid(key, format!("`{other}` is not a boolean"))),
    }
}

impl PlanBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn apply(&mut self, key: &str, value: &str) -> Result<&mut Self, PlanError> {
        let key = key.trim();
        let c = &mut self.plan.base;
        match key {
            "n-pair" => c.n_pair = parse_num(key, value)?,
            "n-mg" => c.n_mg = parse_num(key, value)?,
            "n-prod" => c.n_prod = parse_num(key, value)?,
            "s" => c.s_per_trader = parse_num(key, value)?,
            "m" | "memory" => c.memory = parse_num(key, value)?,
            "impact" => c.impact_kind = value.parse().map_err(|e: String| invalid(key, e))?,
            "steps" => c.steps = parse_num(key, value)?,
            "warmup" => c.warmup = parse_num(key, value)?,
            "evolution-interval" => c.evolution_interval = parse_num(key, value)?,
            "seed" => c.seed = parse_num(key, value)?,
            "history-source" => c.history_source = value.parse().map_err(|e: String| invalid(key, e))?,
            "zero-bit-rule" => c.zero_bit_rule = value.parse().map_err(|e: String| invalid(key, e))?,
            "mg-score-mode" => c.mg_score_mode = value.parse().map_err(|e: String| invalid(key, e))?,
            "runs" => self.plan.runs_per_point = parse_num(key, value)?,
            "out" => self.plan.output_dir = PathBuf::from(value.trim()),
            "dump-series" => self.plan.dump_series = parse_bool(key, value)?,
            "workers" => self.plan.workers = parse_num(key, value)?,
            "bands" => self.plan.fit_bands = parse_bands(key, value)?,
            "sweep" => self.plan.sweep = Some(parse_sweep(key, value)?),
            other => return Err(PlanError::UnknownKey(other.to_string())),
        }
        Ok(self)
    }

    /// Apply every setting of a config document: `key = value` lines, with
    /// blank lines and `#` comments ignored.
    pub fn apply_document(&mut self, text: &str) -> Result<&mut Self, PlanError> {
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| PlanError::Syntax {
                line: i + 1,
                text: line.to_string(),
            })?;
            self.apply(k, v)?;
        }
        Ok(self)
    }

    pub fn build(&self) -> Result<ExperimentPlan, PlanError> {
        let plan = self.plan.clone();
        if plan.runs_per_point == 0 {
            return Err(invalid("runs", "must be at least 1"));
        }
        for point in plan.points() {
            let c = &point.config;
            if c.n_total() == 0 {
                return Err(PlanError::Conflict(format!(
                    "n-pair + n-mg + n-prod is 0 at {}={}",
                    plan.sweep_variable().key(),
                    point.value
                )));
            }
            if c.evolution_interval > 0 && c.n_pair == 0 {
                return Err(PlanError::Conflict(format!(
                    "evolution-interval {} needs n-pair > 0",
                    c.evolution_interval
                )));
            }
            c.validate()?;
        }
        Ok(plan)
    }
}

fn parse_sweep(key: &str, value: &str) -> Result<Sweep, PlanError> {
    let (name, list) = value
        .split_once('=')
        .ok_or_else(|| invalid(key, "expected `variable=v1,v2,...`"))?;
    let variable = SweepVariable::parse(name.trim())
        .ok_or_else(|| invalid(key, format!("`{}` cannot be swept", name.trim())))?;
    let values = list
        .split(',')
        .filter(|v| !v.trim().is_empty())
        .map(|v| parse_num::<u64>(key, v))
        .collect::<Result<Vec<_>, _>>()?;
    if values.is_empty() {
        return Err(invalid(key, "empty value list"));
    }
    Ok(Sweep { variable, values })
}
