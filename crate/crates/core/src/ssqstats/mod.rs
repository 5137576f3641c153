//! Simulator Sickness Questionnaire responses and the matched-samples t-test
//! used to compare the blurred (experimental) and clear (control) sessions.

mod paired;
pub mod student_t;
pub mod table2;

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use paired::{
    build_symptom_report, paired_t_from_raw, paired_t_from_summary, PairedTestResult,
    SymptomReport, SymptomRow, SIGNIFICANCE_LEVEL,
};
pub use student_t::{student_t_cdf, t_critical, two_tailed_p};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("need at least 2 observations, got {0}")]
    InsufficientData(usize),
    #[error("domain error: {0}")]
    Domain(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SsqError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("missing column `{0}`")]
    MissingColumn(String),
    #[error("line {line}: {symptom} score {value} outside 0-3")]
    ScoreRange {
        line: usize,
        symptom: Symptom,
        value: String,
    },
    #[error("line {line}: duplicate response for participant `{participant}` ({condition})")]
    Duplicate {
        line: usize,
        participant: String,
        condition: Condition,
    },
    #[error("participant `{participant}` has no {missing} response")]
    Unpaired {
        participant: String,
        missing: Condition,
    },
    #[error("participant `{participant}`: expected a {expected} response")]
    WrongCondition {
        participant: String,
        expected: Condition,
    },
    #[error(transparent)]
    Stats(#[from] StatsError),
}

macro_rules! symptoms {
    ($($name:ident),+ $(,)?) => {
        /// The fourteen questionnaire items, in questionnaire order.
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        pub enum Symptom {
            $($name),+
        }

        impl Symptom {
            pub const ALL: [Symptom; 14] = [$(Symptom::$name),+];

            pub fn name(self) -> &'static str {
                match self {
                    $(Symptom::$name => stringify!($name)),+
                }
            }
        }
    };
}

symptoms!(
    GeneralDiscomfort,
    Fatigue,
    Headache,
    EyeStrain,
    DifficultFocusing,
    Nausea,
    DifficultyConcentrating,
    StomachAwareness,
    BlurredVision,
    IncreasedSalivation,
    DizzyEyesOpen,
    DizzyEyesClosed,
    Vertigo,
    FullnessOfHead,
);

impl Symptom {
    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Symptom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Symptom {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Symptom::ALL
            .into_iter()
            .find(|sym| sym.name() == s)
            .ok_or_else(|| format!("unknown symptom `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Condition {
    /// Shutter fitted: display blurred during head motion.
    Experimental,
    /// No shutter: display always clear.
    Control,
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Condition::Experimental => "experimental",
            Condition::Control => "control",
        })
    }
}

impl FromStr for Condition {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "experimental" => Ok(Condition::Experimental),
            "control" => Ok(Condition::Control),
            other => Err(format!("unknown condition `{other}`")),
        }
    }
}

/// Highest severity on the questionnaire scale.
pub const MAX_SCORE: u8 = 3;

/// One participant's questionnaire in one condition.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SsqResponse {
    pub participant_id: String,
    pub condition: Condition,
    scores: [u8; 14],
}

impl SsqResponse {
    pub fn new(
        participant_id: impl Into<String>,
        condition: Condition,
        scores: [u8; 14],
    ) -> Result<Self, SsqError> {
        if let Some((i, &v)) = scores.iter().enumerate().find(|(_, &v)| v > MAX_SCORE) {
            return Err(SsqError::ScoreRange {
                line: 0,
                symptom: Symptom::ALL[i],
                value: v.to_string(),
            });
        }
        Ok(Self {
            participant_id: participant_id.into(),
            condition,
            scores,
        })
    }

    pub fn score(&self, symptom: Symptom) -> u8 {
        self.scores[symptom.index()]
    }

    pub fn scores(&self) -> &[u8; 14] {
        &self.scores
    }
}

fn ssq_header() -> Vec<&'static str> {
    let mut h = vec!["participant_id", "condition"];
    h.extend(Symptom::ALL.iter().map(|s| s.name()));
    h
}

/// Parses SSQ responses. Columns are located by header name.
pub fn parse_ssq_csv(text: &str) -> Result<Vec<SsqResponse>, SsqError> {
    let mut reader = csv::ReaderBuilder::new()
        .flexible(true)
        .from_reader(text.as_bytes());
    let parse_err = |e: csv::Error| SsqError::Parse {
        line: e.position().map_or(0, |p| p.line() as usize),
        message: e.to_string(),
    };
    let headers = reader.headers().map_err(parse_err)?.clone();
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| SsqError::MissingColumn(name.to_string()))
    };
    let id_col = column("participant_id")?;
    let cond_col = column("condition")?;
    let symptom_cols = Symptom::ALL
        .iter()
        .map(|s| column(s.name()))
        .collect::<Result<Vec<_>, _>>()?;

    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for record in reader.records() {
        let record = record.map_err(parse_err)?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.len() != headers.len() {
            return Err(SsqError::Parse {
                line,
                message: format!("expected {} columns, found {}", headers.len(), record.len()),
            });
        }
        let participant = record[id_col].trim().to_string();
        if participant.is_empty() {
            return Err(SsqError::Parse {
                line,
                message: "empty participant_id".into(),
            });
        }
        let condition: Condition = record[cond_col]
            .trim()
            .parse()
            .map_err(|message| SsqError::Parse { line, message })?;
        let mut scores = [0u8; 14];
        for (slot, (&col, &symptom)) in scores
            .iter_mut()
            .zip(symptom_cols.iter().zip(Symptom::ALL.iter()))
        {
            let raw = record[col].trim();
            *slot = raw
                .parse::<u8>()
                .ok()
                .filter(|v| *v <= MAX_SCORE)
                .ok_or_else(|| SsqError::ScoreRange {
                    line,
                    symptom,
                    value: raw.to_string(),
                })?;
        }
        if !seen.insert((participant.clone(), condition)) {
            return Err(SsqError::Duplicate {
                line,
                participant,
                condition,
            });
        }
        out.push(SsqResponse {
            participant_id: participant,
            condition,
            scores,
        });
    }
    Ok(out)
}

/// Writes responses in the SSQ CSV format, header first.
pub fn serialize_ssq_csv(responses: &[SsqResponse]) -> String {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    // Writing to a Vec cannot fail.
    w.write_record(ssq_header()).expect("in-memory write");
    for r in responses {
        let mut row = vec![r.participant_id.clone(), r.condition.to_string()];
        row.extend(r.scores.iter().map(|s| s.to_string()));
        w.write_record(&row).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 csv")
}

/// Splits a mixed set of responses into (experimental, control).
pub fn split_by_condition(responses: &[SsqResponse]) -> (Vec<SsqResponse>, Vec<SsqResponse>) {
    responses
        .iter()
        .cloned()
        .partition(|r| r.condition == Condition::Experimental)
}

/// Per-symptom paired differences, experimental minus control.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymptomDiffs {
    /// Participants in the order used by every difference vector.
    pub participants: Vec<String>,
    diffs: Vec<Vec<f64>>,
}

impl SymptomDiffs {
    pub fn get(&self, symptom: Symptom) -> &[f64] {
        &self.diffs[symptom.index()]
    }

    pub fn len(&self) -> usize {
        self.participants.len()
    }

    pub fn is_empty(&self) -> bool {
        self.participants.is_empty()
    }
}

fn index_by_participant(
    responses: &[SsqResponse],
    expected: Condition,
) -> Result<BTreeMap<&str, &SsqResponse>, SsqError> {
    let mut map = BTreeMap::new();
    for (i, r) in responses.iter().enumerate() {
        if r.condition != expected {
            return Err(SsqError::WrongCondition {
                participant: r.participant_id.clone(),
                expected,
            });
        }
        if map.insert(r.participant_id.as_str(), r).is_some() {
            return Err(SsqError::Duplicate {
                line: i + 1,
                participant: r.participant_id.clone(),
                condition: expected,
            });
        }
    }
    Ok(map)
}

/// Pairs responses by participant (sorted by id) and subtracts control from
/// experimental for every symptom.
pub fn diff_scores(
    experimental: &[SsqResponse],
    control: &[SsqResponse],
) -> Result<SymptomDiffs, SsqError> {
    let exp = index_by_participant(experimental, Condition::Experimental)?;
    let ctl = index_by_participant(control, Condition::Control)?;
    if let Some(p) = ctl.keys().find(|p| !exp.contains_key(*p)) {
        return Err(SsqError::Unpaired {
            participant: p.to_string(),
            missing: Condition::Experimental,
        });
    }
    let mut participants = Vec::with_capacity(exp.len());
    let mut diffs = vec![Vec::with_capacity(exp.len()); 14];
    for (p, e) in &exp {
        let c = ctl.get(p).ok_or_else(|| SsqError::Unpaired {
            participant: p.to_string(),
            missing: Condition::Control,
        })?;
        participants.push(p.to_string());
        for s in Symptom::ALL {
            diffs[s.index()].push(f64::from(e.score(s)) - f64::from(c.score(s)));
        }
    }
    Ok(SymptomDiffs {
        participants,
        diffs,
    })
}
