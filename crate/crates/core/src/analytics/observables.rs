use crate::market::PatternId;

/// Sign of a return as an index: 0 for down, 1 for flat, 2 for up.
#[inline]
fn sign_slot(r: f64) -> usize {
    if r > 0.0 {
        2
    } else if r < 0.0 {
        0
    } else {
        1
    }
}

/// Probabilities of a down, flat or up move right after one history state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignProbabilities {
    pub down: f64,
    pub zero: f64,
    pub up: f64,
}

impl SignProbabilities {
    pub fn get(&self, j: i8) -> f64 {
        match j.signum() {
            -1 => self.down,
            0 => self.zero,
            _ => self.up,
        }
    }

    pub fn total(&self) -> f64 {
        self.down + self.zero + self.up
    }
}

/// Counts of return signs following each history state.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ConditionalProbability {
    /// `counts[u] = [down, zero, up]`
    pub counts: Vec<[u64; 3]>,
}

impl ConditionalProbability {
    pub fn pattern_count(&self) -> usize {
        self.counts.len()
    }

    pub fn visits(&self, u: usize) -> u64 {
        self.counts[u].iter().sum()
    }

    /// `None` for states that were never visited.
    pub fn row(&self, u: usize) -> Option<SignProbabilities> {
        let n = self.visits(u);
        if n == 0 {
            return None;
        }
        let [d, z, p] = self.counts[u];
        let n = n as f64;
        Some(SignProbabilities {
            down: d as f64 / n,
            zero: z as f64 / n,
            up: p as f64 / n,
        })
    }

    pub fn rows(&self) -> impl Iterator<Item = Option<SignProbabilities>> + '_ {
        (0..self.counts.len()).map(|u| self.row(u))
    }

    /// Largest `|p(u,+1) - p(u,-1)|` over visited states; 0 for an
    /// empty table.
    pub fn max_bias(&self) -> f64 {
        self.rows()
            .flatten()
            .map(|r| (r.up - r.down).abs())
            .fold(0.0, f64::max)
    }

    /// Pool the counts of several runs.
    pub fn merge(&mut self, other: &ConditionalProbability) {
        if self.counts.is_empty() {
            self.counts = vec![[0; 3]; other.counts.len()];
        }
        assert_eq!(self.counts.len(), other.counts.len());
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            for j in 0..3 {
                a[j] += b[j];
            }
        }
    }
}

/// `p(u, j)`: how often a return of sign `j` follows history `u`.
pub fn conditional_probability(history: &[PatternId], returns: &[f64], patterns: usize) -> ConditionalProbability {
    assert_eq!(history.len(), returns.len());
    let mut counts = vec![[0u64; 3]; patterns];
    for (u, &r) in history.iter().zip(returns) {
        counts[u.index()][sign_slot(r)] += 1;
    }
    ConditionalProbability { counts }
}

/// `sigma^2 = (<r^2> - <r>^2) / P`, with population moments.
pub fn variance_sigma2(returns: &[f64], patterns: usize) -> f64 {
    if returns.is_empty() {
        return 0.0;
    }
    let n = returns.len() as f64;
    let mean = returns.iter().sum::<f64>() / n;
    let var = returns.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>() / n;
    var / patterns as f64
}

/// Mean return following each history state; `None` when unvisited.
pub fn conditional_mean_return(history: &[PatternId], returns: &[f64], patterns: usize) -> Vec<Option<f64>> {
    assert_eq!(history.len(), returns.len());
    let mut sum = vec![0.0; patterns];
    let mut n = vec![0u64; patterns];
    for (u, &r) in history.iter().zip(returns) {
        sum[u.index()] += r;
        n[u.index()] += 1;
    }
    sum.into_iter()
        .zip(n)
        .map(|(s, c)| (c > 0).then(|| s / c as f64))
        .collect()
}

/// `H = sum_u <r|u>^2 / P`. Unvisited states add nothing.
pub fn impact_h(history: &[PatternId], returns: &[f64], patterns: usize) -> f64 {
    conditional_mean_return(history, returns, patterns)
        .into_iter()
        .flatten()
        .map(|m| m * m)
        .sum::<f64>()
        / patterns as f64
}

/// Mean per-step drift `<r|mu -> nu>` for every ordered pair, row-major
/// `mu * P + nu`; `None` on the diagonal and for pairs without a completed
/// episode.
///
/// An episode starts at an occurrence of `mu` at `t` and ends at the next
/// occurrence of `nu` at `t*`, contributing `(p(t*+1) - p(t+1)) / (t* - t)`.
/// Scanning for the next `mu` resumes after `t*`. `price` holds `p(t)` and is
/// one longer than `history`.
pub fn pair_drifts(history: &[PatternId], price: &[f64], patterns: usize) -> Vec<Option<f64>> {
    assert_eq!(price.len(), history.len() + 1);
    const NONE: usize = usize::MAX;
    let cells = patterns * patterns;
    let mut open = vec![NONE; cells];
    let mut sum = vec![0.0f64; cells];
    let mut count = vec![0u64; cells];
    for (t, u) in history.iter().enumerate() {
        let x = u.index();
        for mu in 0..patterns {
            let cell = mu * patterns + x;
            if mu != x && open[cell] != NONE {
                let start = open[cell];
                sum[cell] += (price[t + 1] - price[start + 1]) / (t - start) as f64;
                count[cell] += 1;
                open[cell] = NONE;
            }
        }
        let row = x * patterns;
        for nu in 0..patterns {
            if nu != x && open[row + nu] == NONE {
                open[row + nu] = t;
            }
        }
    }
    sum.into_iter()
        .zip(count)
        .map(|(s, c)| (c > 0).then(|| s / c as f64))
        .collect()
}

/// `K = sum_{mu != nu} <r|mu -> nu>^2 / (P (P - 1))`.
pub fn predictability_k(history: &[PatternId], price: &[f64], patterns: usize) -> f64 {
    pair_drifts(history, price, patterns)
        .into_iter()
        .flatten()
        .map(|d| d * d)
        .sum::<f64>()
        / (patterns * (patterns - 1)) as f64
}

/// `<A|u>` per state and `|sum_u <A|u>|` over visited states.
#[derive(Debug, Clone, PartialEq)]
pub struct ExcessDemandBias {
    pub given_u: Vec<Option<f64>>,
    pub abs_sum: f64,
}

pub fn excess_demand_bias(history: &[PatternId], excess_demand: &[i64], patterns: usize) -> ExcessDemandBias {
    assert_eq!(history.len(), excess_demand.len());
    let mut sum = vec![0i64; patterns];
    let mut n = vec![0u64; patterns];
    for (u, &a) in history.iter().zip(excess_demand) {
        sum[u.index()] += a;
        n[u.index()] += 1;
    }
    let given_u: Vec<Option<f64>> = sum
        .into_iter()
        .zip(n)
        .map(|(s, c)| (c > 0).then(|| s as f64 / c as f64))
        .collect();
    let abs_sum = given_u.iter().flatten().sum::<f64>().abs();
    ExcessDemandBias { given_u, abs_sum }
}

/// Normalized return histogram over bins symmetric about zero.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    /// `bins + 1` edges, from `-max|r|` to `max|r|`.
    pub edges: Vec<f64>,
    pub mass: Vec<f64>,
}

/// Degenerates to one bin of mass 1 when every return is zero.
pub fn return_histogram(returns: &[f64], bins: usize) -> Histogram {
    assert!(bins >= 1 && !returns.is_empty());
    let half = returns.iter().fold(0.0f64, |m, r| m.max(r.abs()));
    if half == 0.0 {
        return Histogram {
            edges: vec![0.0, 0.0],
            mass: vec![1.0],
        };
    }
    let width = 2.0 * half / bins as f64;
    let mut counts = vec![0u64; bins];
    for &r in returns {
        let b = (((r + half) / width) as usize).min(bins - 1);
        counts[b] += 1;
    }
    let n = returns.len() as f64;
    Histogram {
        edges: (0..=bins).map(|i| -half + i as f64 * width).collect(),
        mass: counts.into_iter().map(|c| c as f64 / n).collect(),
    }
}

/// Fraction of returns farther than `k` standard deviations from the mean.
pub fn tail_mass(returns: &[f64], k: f64) -> f64 {
    if returns.is_empty() {
        return 0.0;
    }
    let n = returns.len() as f64;
    let mean = returns.iter().sum::<f64>() / n;
    let sd = (returns.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>() / n).sqrt();
    if sd == 0.0 {
        return 0.0;
    }
    returns.iter().filter(|&&r| (r - mean).abs() > k * sd).count() as f64 / n
}
