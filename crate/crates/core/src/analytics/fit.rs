use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FitError {
    #[error("need at least 3 points inside the fit range, got {0}")]
    TooFewPoints(usize),
    #[error("non-positive point ({x}, {y}) inside the fit range")]
    NonPositive { x: f64, y: f64 },
}

/// `y = 10^intercept * x^exponent`
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerLawFit {
    pub exponent: f64,
    /// log10 of the prefactor.
    pub intercept: f64,
    pub r_squared: f64,
    pub points: usize,
}

impl PowerLawFit {
    pub fn predict(&self, x: f64) -> f64 {
        10f64.powf(self.intercept) * x.powf(self.exponent)
    }
}

/// Ordinary least squares on `(log10 x, log10 y)`, restricted to points with
/// `lo <= x < hi` when `range` is given.
pub fn fit_power_law(points: &[(f64, f64)], range: Option<(f64, f64)>) -> Result<PowerLawFit, FitError> {
    let selected: Vec<(f64, f64)> = points
        .iter()
        .copied()
        .filter(|&(x, _)| range.is_none_or(|(lo, hi)| x >= lo && x < hi))
        .collect();
    if selected.len() < 3 {
        return Err(FitError::TooFewPoints(selected.len()));
    }
    if let Some(&(x, y)) = selected.iter().find(|&&(x, y)| !(x > 0.0 && y > 0.0)) {
        return Err(FitError::NonPositive { x, y });
    }
    let logs: Vec<(f64, f64)> = selected.iter().map(|&(x, y)| (x.log10(), y.log10())).collect();
    let n = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = logs.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(FitError::TooFewPoints(1));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = logs.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    let r_squared = if syy == 0.0 { 1.0 } else { 1.0 - ss_res / syy };
    Ok(PowerLawFit {
        exponent: slope,
        intercept,
        r_squared,
        points: logs.len(),
    })
}
