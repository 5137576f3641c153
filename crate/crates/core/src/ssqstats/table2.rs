//! Published matched-samples results for the 20-participant study.
//!
//! Only `mean` and `sd` feed the computation; the other printed columns are
//! kept solely as comparison targets for [`verify`].

use serde::{Deserialize, Serialize};

use super::{paired_t_from_summary, PairedTestResult, StatsError, Symptom};

/// Number of matched pairs in the study.
pub const PAIRS: usize = 20;

/// Agreement required between recomputed and printed values.
pub const TOLERANCE: f64 = 0.0005;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrintedRow {
    pub symptom: Symptom,
    pub mean: f64,
    pub sd: f64,
    pub se: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub t: f64,
    pub p: f64,
}

const fn row(
    symptom: Symptom,
    mean: f64,
    sd: f64,
    se: f64,
    ci_low: f64,
    ci_high: f64,
    t: f64,
    p: f64,
) -> PrintedRow {
    PrintedRow {
        symptom,
        mean,
        sd,
        se,
        ci_low,
        ci_high,
        t,
        p,
    }
}

#[rustfmt::skip]
pub const PRINTED: [PrintedRow; 14] = [
    row(Symptom::GeneralDiscomfort,       -0.65, 0.74516, 0.16662, -0.99875, -0.30125, -3.901, 0.001),
    row(Symptom::Fatigue,                 -0.05, 0.22361, 0.05,    -0.15465,  0.05465, -1.0,   0.33),
    row(Symptom::Headache,                 0.0,  0.32444, 0.07255, -0.15184,  0.15184,  0.0,   1.0),
    row(Symptom::EyeStrain,               -0.4,  0.59824, 0.13377, -0.67999, -0.12001, -2.99,  0.008),
    row(Symptom::DifficultFocusing,       -0.1,  0.30779, 0.06882, -0.24405,  0.04405, -1.453, 0.163),
    row(Symptom::Nausea,                  -0.55, 0.60481, 0.13524, -0.83306, -0.26694, -4.067, 0.001),
    row(Symptom::DifficultyConcentrating, -0.2,  0.41039, 0.09177, -0.39207, -0.00793, -2.179, 0.042),
    row(Symptom::StomachAwareness,        -0.3,  0.57124, 0.12773, -0.56735, -0.03265, -2.349, 0.03),
    row(Symptom::BlurredVision,           -0.15, 0.48936, 0.10942, -0.37903,  0.07903, -1.371, 0.186),
    row(Symptom::IncreasedSalivation,     -0.1,  0.30779, 0.06882, -0.24405,  0.04405, -1.453, 0.163),
    row(Symptom::DizzyEyesOpen,           -0.55, 0.68633, 0.15347, -0.87121, -0.22879, -3.584, 0.002),
    row(Symptom::DizzyEyesClosed,         -0.2,  0.52315, 0.11698, -0.44484,  0.04484, -1.71,  0.104),
    row(Symptom::Vertigo,                 -0.05, 0.22361, 0.05,    -0.15465,  0.05465, -1.0,   0.33),
    row(Symptom::FullnessOfHead,          -0.15, 0.36635, 0.08192, -0.32146,  0.02146, -1.831, 0.083),
];

/// Signed deviations (computed - printed) for one row.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Deviations {
    pub se: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub t: f64,
    pub p: f64,
}

impl Deviations {
    pub fn max_abs(&self) -> f64 {
        [self.se, self.ci_low, self.ci_high, self.t, self.p]
            .into_iter()
            .map(f64::abs)
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowCheck {
    pub printed: PrintedRow,
    pub computed: PairedTestResult,
    pub deviations: Deviations,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verification {
    pub tolerance: f64,
    pub rows: Vec<RowCheck>,
}

impl Verification {
    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &RowCheck> {
        self.rows.iter().filter(|r| !r.pass)
    }
}

/// Recomputes SE, CI, t and p from each row's mean and sd and compares them
/// with the printed columns.
pub fn verify(rows: &[PrintedRow], n: usize, tolerance: f64) -> Result<Verification, StatsError> {
    let rows = rows
        .iter()
        .map(|printed| {
            let computed = paired_t_from_summary(printed.mean, printed.sd, n)?;
            let deviations = Deviations {
                se: computed.se - printed.se,
                ci_low: computed.ci_low - printed.ci_low,
                ci_high: computed.ci_high - printed.ci_high,
                t: computed.t - printed.t,
                p: computed.p - printed.p,
            };
            Ok(RowCheck {
                printed: *printed,
                computed,
                pass: deviations.max_abs() <= tolerance,
                deviations,
            })
        })
        .collect::<Result<Vec<_>, StatsError>>()?;
    Ok(Verification { tolerance, rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rows_follow_questionnaire_order() {
        let order: Vec<_> = PRINTED.iter().map(|r| r.symptom).collect();
        assert_eq!(order, Symptom::ALL.to_vec());
    }

    #[test]
    fn published_rows_verify() {
        let v = verify(&PRINTED, PAIRS, TOLERANCE).unwrap();
        for r in &v.rows {
            assert!(r.pass, "{:?}: {:?}", r.printed.symptom, r.deviations);
        }
    }

    #[test]
    fn perturbed_sd_fails() {
        let mut rows = PRINTED;
        rows[3].sd += 0.01;
        let v = verify(&rows, PAIRS, TOLERANCE).unwrap();
        let failed: Vec<_> = v.failures().map(|r| r.printed.symptom).collect();
        assert_eq!(failed, vec![Symptom::EyeStrain]);
    }
}
