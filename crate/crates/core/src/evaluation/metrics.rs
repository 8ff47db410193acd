use crate::error::{Error, Result};

/// Actuals with magnitude below this are skipped when computing MAPE.
pub const MAPE_EPS: f64 = 1e-8;

/// Point-forecast accuracy scores.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointScores {
    /// Percent.
    pub mape: f64,
    pub mse: f64,
    pub mae: f64,
    pub rmse: f64,
    pub nmse: f64,
    /// Theil's U1 inequality coefficient.
    pub u1: f64,
    /// Willmott's index of agreement.
    pub ia: f64,
    pub r2: f64,
    /// Samples left out of MAPE because their actual was (near) zero.
    pub mape_excluded: usize,
}

impl PointScores {
    pub const COLUMNS: [&'static str; 8] = ["MAPE", "MSE", "MAE", "RMSE", "NMSE", "U1", "IA", "R2"];

    pub fn values(&self) -> [f64; 8] {
        [
            self.mape, self.mse, self.mae, self.rmse, self.nmse, self.u1, self.ia, self.r2,
        ]
    }
}

/// Prediction-interval scores.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntervalScores {
    pub picp: f64,
    pub pinaw: f64,
    /// Range-normalised mean Winkler score, lower is better.
    pub ais: f64,
}

fn check_lengths(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch(a.len(), b.len()));
    }
    if a.is_empty() {
        return Err(Error::TooShort { needed: 1, got: 0 });
    }
    Ok(())
}

/// Mean absolute percentage error over samples with non-zero actuals.
/// Returns the score and the number of skipped samples.
pub fn mape(actual: &[f64], predicted: &[f64]) -> Result<(f64, usize)> {
    check_lengths(actual, predicted)?;
    let mut sum = 0.0;
    let mut used = 0usize;
    for (a, p) in actual.iter().zip(predicted) {
        if a.abs() < MAPE_EPS {
            continue;
        }
        sum += ((a - p) / a).abs();
        used += 1;
    }
    if used == 0 {
        return Err(Error::ZeroActual);
    }
    Ok((100.0 * sum / used as f64, actual.len() - used))
}

pub fn mse(actual: &[f64], predicted: &[f64]) -> Result<f64> {
    check_lengths(actual, predicted)?;
    Ok(actual
        .iter()
        .zip(predicted)
        .map(|(a, p)| (a - p) * (a - p))
        .sum::<f64>()
        / actual.len() as f64)
}

pub fn point_scores(actual: &[f64], predicted: &[f64]) -> Result<PointScores> {
    check_lengths(actual, predicted)?;
    let n = actual.len() as f64;
    let (mape, mape_excluded) = mape(actual, predicted)?;
    let mean_a = actual.iter().sum::<f64>() / n;

    let sse: f64 = actual
        .iter()
        .zip(predicted)
        .map(|(a, p)| (a - p) * (a - p))
        .sum();
    let sst: f64 = actual.iter().map(|a| (a - mean_a) * (a - mean_a)).sum();
    if sst == 0.0 {
        return Err(Error::ZeroVariance);
    }
    let mse = sse / n;
    let mae = actual
        .iter()
        .zip(predicted)
        .map(|(a, p)| (a - p).abs())
        .sum::<f64>()
        / n;
    let rmse = mse.sqrt();
    let nmse = sse / sst;

    let rms_a = (actual.iter().map(|a| a * a).sum::<f64>() / n).sqrt();
    let rms_p = (predicted.iter().map(|p| p * p).sum::<f64>() / n).sqrt();
    let u1 = if rms_a + rms_p == 0.0 {
        0.0
    } else {
        (rmse / (rms_a + rms_p)).min(1.0)
    };

    let potential: f64 = actual
        .iter()
        .zip(predicted)
        .map(|(a, p)| {
            let s = (p - mean_a).abs() + (a - mean_a).abs();
            s * s
        })
        .sum();
    // exact bounds by the triangle inequality; clamp away rounding at equality
    let ia = (1.0 - sse / potential).clamp(0.0, 1.0);

    Ok(PointScores {
        mape,
        mse,
        mae,
        rmse,
        nmse,
        u1,
        ia,
        r2: 1.0 - nmse,
        mape_excluded,
    })
}

/// Interval scores normalised by the range of `actual`.
pub fn interval_scores(
    actual: &[f64],
    lower: &[f64],
    upper: &[f64],
    level: f64,
) -> Result<IntervalScores> {
    check_lengths(actual, lower)?;
    check_lengths(actual, upper)?;
    let max = actual.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = actual.iter().copied().fold(f64::INFINITY, f64::min);
    let range = max - min;
    if range <= 0.0 {
        return Err(Error::ZeroRange);
    }
    interval_scores_with_range(actual, lower, upper, level, range)
}

/// Interval scores with an explicit normaliser `range`.
pub fn interval_scores_with_range(
    actual: &[f64],
    lower: &[f64],
    upper: &[f64],
    level: f64,
    range: f64,
) -> Result<IntervalScores> {
    check_lengths(actual, lower)?;
    check_lengths(actual, upper)?;
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "confidence level must lie in (0,1), got {level}"
        )));
    }
    if range <= 0.0 {
        return Err(Error::ZeroRange);
    }
    if let Some(i) = lower.iter().zip(upper).position(|(l, u)| l > u) {
        return Err(Error::CrossedBounds(i));
    }
    let alpha = 1.0 - level;
    let n = actual.len() as f64;
    let mut hits = 0usize;
    let mut width = 0.0;
    let mut winkler = 0.0;
    for ((&a, &l), &u) in actual.iter().zip(lower).zip(upper) {
        let w = u - l;
        width += w;
        let mut score = w;
        if a < l {
            score += 2.0 / alpha * (l - a);
        } else if a > u {
            score += 2.0 / alpha * (a - u);
        } else {
            hits += 1;
        }
        winkler += score;
    }
    Ok(IntervalScores {
        picp: hits as f64 / n,
        pinaw: width / (n * range),
        ais: winkler / (n * range),
    })
}

/// Empirical quantile with linear interpolation between order statistics
/// (the "type 7" rule). `sorted` must be ascending and non-empty.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Relative MAPE gap between the system and a comparator, in percent.
pub fn iri(mape_system: f64, mape_other: f64) -> Result<f64> {
    if mape_system == 0.0 {
        return Err(Error::ZeroDenominator);
    }
    Ok(((mape_system - mape_other) / mape_system).abs() * 100.0)
}
