//! Mid-price dynamics. Trades are assumed to execute at the average of two
//! consecutive prices, so each return blends the current and the previous
//! excess demand.

use crate::market::ImpactKind;

/// `r(t) = (A(t) + A(t-1)) / 2`
#[inline]
pub fn return_linear(a_now: i64, a_prev: i64) -> f64 {
    (a_now + a_prev) as f64 / 2.0
}

#[inline]
fn signed_sqrt(a: i64) -> f64 {
    let root = (a.unsigned_abs() as f64).sqrt();
    if a < 0 {
        -root
    } else {
        root
    }
}

/// `r(t) = (sign(A(t)) sqrt|A(t)| + sign(A(t-1)) sqrt|A(t-1)|) / 2`
#[inline]
pub fn return_sqrt(a_now: i64, a_prev: i64) -> f64 {
    0.5 * (signed_sqrt(a_now) + signed_sqrt(a_prev))
}

#[inline]
pub fn mid_return(kind: ImpactKind, a_now: i64, a_prev: i64) -> f64 {
    match kind {
        ImpactKind::Linear => return_linear(a_now, a_prev),
        ImpactKind::SquareRoot => return_sqrt(a_now, a_prev),
    }
}

/// Mid-price path together with the returns and excess demands driving it.
///
/// `price` always holds one more entry than `returns`: `price[t + 1] =
/// price[t] + returns[t]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceSeries {
    pub price: Vec<f64>,
    pub returns: Vec<f64>,
    pub excess_demand: Vec<i64>,
}

impl Default for PriceSeries {
    fn default() -> Self {
        Self::new(0.0)
    }
}

impl PriceSeries {
    pub fn new(initial_price: f64) -> Self {
        PriceSeries {
            price: vec![initial_price],
            returns: Vec::new(),
            excess_demand: Vec::new(),
        }
    }

    pub fn with_capacity(initial_price: f64, steps: usize) -> Self {
        let mut price = Vec::with_capacity(steps + 1);
        price.push(initial_price);
        PriceSeries {
            price,
            returns: Vec::with_capacity(steps),
            excess_demand: Vec::with_capacity(steps),
        }
    }

    pub fn last_price(&self) -> f64 {
        *self.price.last().expect("price series is never empty")
    }

    /// Excess demand of the previous step; 0 before the first step.
    pub fn last_excess_demand(&self) -> i64 {
        self.excess_demand.last().copied().unwrap_or(0)
    }

    /// Append one step of excess demand and return the induced return.
    pub fn advance(&mut self, a_now: i64, kind: ImpactKind) -> f64 {
        let r = mid_return(kind, a_now, self.last_excess_demand());
        let p = self.last_price() + r;
        self.excess_demand.push(a_now);
        self.returns.push(r);
        self.price.push(p);
        r
    }

    pub fn len(&self) -> usize {
        self.returns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.returns.is_empty()
    }
}
