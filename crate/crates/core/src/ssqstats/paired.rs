use serde::{Deserialize, Serialize};

use super::student_t::{t_critical, two_tailed_p};
use super::{diff_scores, SsqError, SsqResponse, StatsError, Symptom};

/// Two-tailed significance level for the report's flag.
pub const SIGNIFICANCE_LEVEL: f64 = 0.05;

/// Confidence level of the reported interval.
pub const CONFIDENCE: f64 = 0.95;

/// Matched-samples t-test on a vector of paired differences.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairedTestResult {
    pub n: usize,
    pub mean: f64,
    /// Sample standard deviation (n - 1 denominator).
    pub sd: f64,
    pub se: f64,
    pub t: f64,
    pub df: usize,
    /// Two-tailed significance.
    pub p: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

/// Test from summary moments.
///
/// A zero standard deviation is degenerate: with a zero mean the result is
/// `t = 0, p = 1`; otherwise `t = ±inf, p = 0`.
pub fn paired_t_from_summary(mean: f64, sd: f64, n: usize) -> Result<PairedTestResult, StatsError> {
    if n < 2 {
        return Err(StatsError::InsufficientData(n));
    }
    if !mean.is_finite() {
        return Err(StatsError::Domain(format!(
            "mean must be finite, got {mean}"
        )));
    }
    if !(sd.is_finite() && sd >= 0.0) {
        return Err(StatsError::Domain(format!(
            "standard deviation must be non-negative, got {sd}"
        )));
    }
    let df = n - 1;
    let se = sd / (n as f64).sqrt();
    let (t, p) = if se > 0.0 {
        let t = mean / se;
        (t, two_tailed_p(t, df as f64)?)
    } else if mean == 0.0 {
        (0.0, 1.0)
    } else {
        (f64::INFINITY.copysign(mean), 0.0)
    };
    let margin = t_critical(0.5 + CONFIDENCE / 2.0, df as f64)? * se;
    Ok(PairedTestResult {
        n,
        mean,
        sd,
        se,
        t,
        df,
        p,
        ci_low: mean - margin,
        ci_high: mean + margin,
    })
}

/// Test from the raw differences.
pub fn paired_t_from_raw(diffs: &[f64]) -> Result<PairedTestResult, StatsError> {
    let n = diffs.len();
    if n < 2 {
        return Err(StatsError::InsufficientData(n));
    }
    if let Some(v) = diffs.iter().find(|v| !v.is_finite()) {
        return Err(StatsError::Domain(format!("non-finite difference {v}")));
    }
    let mean = diffs.iter().sum::<f64>() / n as f64;
    let ss: f64 = diffs.iter().map(|d| (d - mean).powi(2)).sum();
    let sd = (ss / (n - 1) as f64).sqrt();
    paired_t_from_summary(mean, sd, n)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymptomRow {
    pub symptom: Symptom,
    pub result: PairedTestResult,
    pub significant: bool,
}

/// One paired test per questionnaire item, experimental minus control.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymptomReport {
    pub rows: Vec<SymptomRow>,
}

impl SymptomReport {
    pub fn from_results(results: impl IntoIterator<Item = (Symptom, PairedTestResult)>) -> Self {
        let rows = results
            .into_iter()
            .map(|(symptom, result)| SymptomRow {
                symptom,
                result,
                significant: result.p < SIGNIFICANCE_LEVEL,
            })
            .collect();
        Self { rows }
    }

    pub fn row(&self, symptom: Symptom) -> Option<&SymptomRow> {
        self.rows.iter().find(|r| r.symptom == symptom)
    }

    pub fn significant(&self) -> Vec<Symptom> {
        self.rows
            .iter()
            .filter(|r| r.significant)
            .map(|r| r.symptom)
            .collect()
    }
}

pub fn build_symptom_report(
    experimental: &[SsqResponse],
    control: &[SsqResponse],
) -> Result<SymptomReport, SsqError> {
    let diffs = diff_scores(experimental, control)?;
    let results = Symptom::ALL
        .into_iter()
        .map(|s| paired_t_from_raw(diffs.get(s)).map(|r| (s, r)))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(SymptomReport::from_results(results))
}
