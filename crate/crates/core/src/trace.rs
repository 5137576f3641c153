//! Head-motion traces: angular-velocity time series, their CSV form, and a
//! seeded generator for synthetic viewing sessions.
//!
//! A session alternates still fixations (small Gaussian noise on every axis)
//! with trapezoidal head turns about one randomly chosen axis.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Header line of the trace CSV format.
pub const TRACE_HEADER: &str = "t_us,wx_dps,wy_dps,wz_dps";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TraceError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: timestamp {t_us} does not increase past {prev_us}")]
    NonIncreasing {
        line: usize,
        prev_us: u64,
        t_us: u64,
    },
    #[error("invalid trace: {0}")]
    Invalid(String),
    #[error("invalid generator config: {0}")]
    Config(String),
}

/// One gyroscope reading: angular velocity per axis in degrees per second.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GyroSample {
    /// Microseconds since session start.
    pub t_us: u64,
    pub wx: f64,
    pub wy: f64,
    pub wz: f64,
}

impl GyroSample {
    pub fn new(t_us: u64, wx: f64, wy: f64, wz: f64) -> Result<Self, TraceError> {
        let s = Self { t_us, wx, wy, wz };
        if !s.is_finite() {
            return Err(TraceError::Invalid(format!(
                "sample at {t_us} us has a non-finite component"
            )));
        }
        Ok(s)
    }

    pub fn is_finite(&self) -> bool {
        self.wx.is_finite() && self.wy.is_finite() && self.wz.is_finite()
    }

    /// Largest absolute angular speed over the three axes.
    pub fn peak_abs(&self) -> f64 {
        self.wx.abs().max(self.wy.abs()).max(self.wz.abs())
    }

    pub fn axes(&self) -> [f64; 3] {
        [self.wx, self.wy, self.wz]
    }
}

/// An ordered, strictly time-increasing sequence of gyro samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MotionTrace {
    samples: Vec<GyroSample>,
    nominal_rate_hz: f64,
}

impl MotionTrace {
    pub fn new(samples: Vec<GyroSample>, nominal_rate_hz: f64) -> Result<Self, TraceError> {
        if !(nominal_rate_hz.is_finite() && nominal_rate_hz > 0.0) {
            return Err(TraceError::Invalid(format!(
                "nominal rate must be positive, got {nominal_rate_hz}"
            )));
        }
        for (i, s) in samples.iter().enumerate() {
            if !s.is_finite() {
                return Err(TraceError::Invalid(format!(
                    "sample {i} has a non-finite component"
                )));
            }
        }
        if let Some(w) = samples.windows(2).find(|w| w[1].t_us <= w[0].t_us) {
            return Err(TraceError::Invalid(format!(
                "timestamps not strictly increasing: {} then {}",
                w[0].t_us, w[1].t_us
            )));
        }
        Ok(Self {
            samples,
            nominal_rate_hz,
        })
    }

    pub fn samples(&self) -> &[GyroSample] {
        &self.samples
    }

    pub fn nominal_rate_hz(&self) -> f64 {
        self.nominal_rate_hz
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Nominal spacing between samples, rounded to whole microseconds.
    pub fn sample_interval_us(&self) -> u64 {
        (1e6 / self.nominal_rate_hz).round().max(1.0) as u64
    }

    /// End of the time span covered by the trace: the last sample holds for
    /// one nominal interval. Zero for an empty trace.
    pub fn end_us(&self) -> u64 {
        self.samples
            .last()
            .map_or(0, |s| s.t_us + self.sample_interval_us())
    }

    /// Most recent sample at or before `t_us` (zero-order hold).
    pub fn held_at(&self, t_us: u64) -> Option<&GyroSample> {
        let idx = self.samples.partition_point(|s| s.t_us <= t_us);
        idx.checked_sub(1).map(|i| &self.samples[i])
    }
}

/// Parses the trace CSV format.
///
/// The nominal rate is inferred from the median spacing of the timestamps;
/// traces with fewer than two samples default to 1 kHz.
pub fn parse_trace(text: &str) -> Result<MotionTrace, TraceError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(text.as_bytes());

    let mut samples: Vec<GyroSample> = Vec::new();
    let mut saw_header = false;
    for record in reader.records() {
        let record = record.map_err(|e| TraceError::Parse {
            line: e.position().map_or(0, |p| p.line() as usize),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if !saw_header {
            let header: Vec<&str> = record.iter().collect();
            if header.join(",") != TRACE_HEADER {
                return Err(TraceError::Parse {
                    line,
                    message: format!("expected header `{TRACE_HEADER}`"),
                });
            }
            saw_header = true;
            continue;
        }
        if record.len() != 4 {
            return Err(TraceError::Parse {
                line,
                message: format!("expected 4 columns, found {}", record.len()),
            });
        }
        let t_us: u64 = record[0].parse().map_err(|_| TraceError::Parse {
            line,
            message: format!("bad timestamp `{}`", &record[0]),
        })?;
        let mut w = [0.0; 3];
        for (k, slot) in w.iter_mut().enumerate() {
            let field = &record[k + 1];
            *slot = field
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| TraceError::Parse {
                    line,
                    message: format!("bad angular velocity `{field}`"),
                })?;
        }
        if let Some(prev) = samples.last() {
            if t_us <= prev.t_us {
                return Err(TraceError::NonIncreasing {
                    line,
                    prev_us: prev.t_us,
                    t_us,
                });
            }
        }
        samples.push(GyroSample {
            t_us,
            wx: w[0],
            wy: w[1],
            wz: w[2],
        });
    }
    if !saw_header {
        return Err(TraceError::Parse {
            line: 1,
            message: "missing header".into(),
        });
    }
    let rate = infer_rate_hz(&samples);
    MotionTrace::new(samples, rate)
}

fn infer_rate_hz(samples: &[GyroSample]) -> f64 {
    let mut gaps: Vec<u64> = samples.windows(2).map(|w| w[1].t_us - w[0].t_us).collect();
    if gaps.is_empty() {
        return 1000.0;
    }
    gaps.sort_unstable();
    1e6 / gaps[gaps.len() / 2] as f64
}

/// Writes a trace as CSV: integer microseconds, velocities at six decimals.
pub fn serialize_trace(trace: &MotionTrace) -> String {
    use std::fmt::Write;
    let mut out = String::with_capacity(TRACE_HEADER.len() + 1 + trace.len() * 40);
    out.push_str(TRACE_HEADER);
    out.push('\n');
    for s in trace.samples() {
        let _ = writeln!(out, "{},{:.6},{:.6},{:.6}", s.t_us, s.wx, s.wy, s.wz);
    }
    out
}

/// Parameters for synthetic viewing sessions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceGenConfig {
    pub session_s: f64,
    /// Upper bound on the quiet time between two head turns.
    pub max_fixation_s: f64,
    /// Standard deviation of per-axis noise while the head is still.
    pub fixation_noise_dps: f64,
    pub turn_peak_dps: f64,
    pub turn_duration_ms: f64,
    pub rate_hz: f64,
    pub seed: u64,
}

impl Default for TraceGenConfig {
    fn default() -> Self {
        Self {
            session_s: 1200.0,
            max_fixation_s: 20.0,
            fixation_noise_dps: 1.0,
            turn_peak_dps: 100.0,
            turn_duration_ms: 800.0,
            rate_hz: 1000.0,
            seed: 0,
        }
    }
}

impl TraceGenConfig {
    pub fn validate(&self) -> Result<(), TraceError> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(TraceError::Config(format!(
                    "{name} must be positive, got {v}"
                )))
            }
        };
        positive("session_s", self.session_s)?;
        positive("max_fixation_s", self.max_fixation_s)?;
        positive("turn_duration_ms", self.turn_duration_ms)?;
        positive("rate_hz", self.rate_hz)?;
        if !(self.fixation_noise_dps.is_finite() && self.fixation_noise_dps >= 0.0) {
            return Err(TraceError::Config(format!(
                "fixation_noise_dps must be non-negative, got {}",
                self.fixation_noise_dps
            )));
        }
        if !(self.turn_peak_dps.is_finite() && self.turn_peak_dps > self.fixation_noise_dps) {
            return Err(TraceError::Config(format!(
                "turn_peak_dps ({}) must exceed fixation_noise_dps ({})",
                self.turn_peak_dps, self.fixation_noise_dps
            )));
        }
        Ok(())
    }
}

/// A head turn about one axis, in sample-time microseconds.
#[derive(Debug, Clone, Copy)]
struct Turn {
    start_us: f64,
    duration_us: f64,
    axis: usize,
    signed_peak: f64,
}

impl Turn {
    /// Trapezoid: ramp over the first and last quarter, plateau between.
    fn velocity_at(&self, t_us: f64) -> Option<f64> {
        let x = (t_us - self.start_us) / self.duration_us;
        if !(0.0..1.0).contains(&x) {
            return None;
        }
        let shape = if x < 0.25 {
            x / 0.25
        } else if x > 0.75 {
            (1.0 - x) / 0.25
        } else {
            1.0
        };
        Some(shape * self.signed_peak)
    }
}

/// Synthesizes a seeded session trace.
///
/// Fixation lengths are drawn uniformly from `[q/4, q]` where
/// `q = max_fixation_s - turn duration`, so the quiet time between the
/// above-threshold parts of consecutive turns never exceeds
/// `max_fixation_s`.
pub fn generate_session_trace(cfg: &TraceGenConfig) -> Result<MotionTrace, TraceError> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let noise =
        Normal::new(0.0, cfg.fixation_noise_dps).map_err(|e| TraceError::Config(e.to_string()))?;

    let n = ((cfg.session_s * cfg.rate_hz).round() as u64).max(1);
    let dt_us = 1e6 / cfg.rate_hz;
    let session_us = n as f64 * dt_us;
    let turn_us = cfg.turn_duration_ms * 1e3;
    let fix_hi_us = (cfg.max_fixation_s * 1e6 - turn_us).max(0.0);
    let fix_lo_us = fix_hi_us / 4.0;

    // Plan the turns up front so the noise stream does not depend on them.
    let mut turns = Vec::new();
    let mut cursor = 0.0;
    loop {
        cursor += if fix_hi_us > fix_lo_us {
            rng.random_range(fix_lo_us..=fix_hi_us)
        } else {
            fix_hi_us
        };
        if cursor >= session_us {
            break;
        }
        let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        turns.push(Turn {
            start_us: cursor,
            duration_us: turn_us,
            axis: rng.random_range(0..3),
            signed_peak: sign * cfg.turn_peak_dps,
        });
        cursor += turn_us;
    }

    let mut samples = Vec::with_capacity(n as usize);
    let mut next_turn = 0;
    for i in 0..n {
        let t = i as f64 * dt_us;
        while next_turn < turns.len()
            && turns[next_turn].start_us + turns[next_turn].duration_us <= t
        {
            next_turn += 1;
        }
        let mut w = [
            noise.sample(&mut rng),
            noise.sample(&mut rng),
            noise.sample(&mut rng),
        ];
        if let Some(turn) = turns.get(next_turn) {
            if let Some(v) = turn.velocity_at(t) {
                w[turn.axis] += v;
            }
        }
        samples.push(GyroSample {
            t_us: t.round() as u64,
            wx: w[0],
            wy: w[1],
            wz: w[2],
        });
    }
    MotionTrace::new(samples, cfg.rate_hz)
}
