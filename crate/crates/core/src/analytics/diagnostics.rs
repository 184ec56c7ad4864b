use crate::market::PatternId;

/// When a given fraction of the original traders had been eliminated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Washout {
    Reached(usize),
    /// Threshold not reached; carries the last observed time.
    Censored(usize),
}

impl Washout {
    pub fn time(self) -> usize {
        match self {
            Washout::Reached(t) | Washout::Censored(t) => t,
        }
    }

    pub fn is_censored(self) -> bool {
        matches!(self, Washout::Censored(_))
    }
}

/// First time at which at most `(1 - fraction) * original` of the original
/// traders survive. `survivors[i]` is the count at time `t0 + i`.
pub fn washout_time(survivors: &[u32], t0: usize, original: usize, fraction: f64) -> Washout {
    assert!((0.0..=1.0).contains(&fraction));
    let threshold = (1.0 - fraction) * original as f64 + 1e-9;
    match survivors.iter().position(|&c| f64::from(c) <= threshold) {
        Some(i) => Washout::Reached(t0 + i),
        None => Washout::Censored(t0 + survivors.len().saturating_sub(1)),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PeriodicLock {
    pub period: usize,
    /// First index of the maximal exactly-periodic tail.
    pub onset: usize,
}

/// Smallest period `<= window / 2` for which the trailing `window` states
/// repeat exactly.
pub fn detect_periodic_lock(history: &[PatternId], window: usize) -> Option<PeriodicLock> {
    assert!(window <= history.len());
    let n = history.len();
    let start = n - window;
    (1..=window / 2).find_map(|period| {
        let periodic = (start + period..n).all(|i| history[i] == history[i - period]);
        if !periodic {
            return None;
        }
        let mut first = start + period;
        while first > period && history[first - 1] == history[first - 1 - period] {
            first -= 1;
        }
        Some(PeriodicLock {
            period,
            onset: first - period,
        })
    })
}
