//! Liquid-crystal shutter optics.
//!
//! The sheet is transparent while the H-bridge drives it with the square wave
//! and diffusing when undriven. The drive frequency and amplitude are carried
//! as data only; the optics are binary with optional linear transitions.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::detector::GateCommand;

/// Transparency below which the display counts as blurred.
pub const BLUR_BOUND: f64 = 0.10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ShutterError {
    #[error("invalid shutter model: {0}")]
    Config(String),
    #[error("command at {issue_us} us precedes one at {prev_us} us")]
    Unordered { prev_us: u64, issue_us: u64 },
    #[error("command at {issue_us} us lies after session end {end_us} us")]
    PastEnd { issue_us: u64, end_us: u64 },
    #[error("time {t_us} us outside timeline [0, {end_us}]")]
    OutOfRange { t_us: u64, end_us: u64 },
}

/// H-bridge square-wave drive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriveSignal {
    pub frequency_hz: f64,
    pub vpp: f64,
}

impl Default for DriveSignal {
    fn default() -> Self {
        Self {
            frequency_hz: 1000.0,
            vpp: 80.0,
        }
    }
}

impl DriveSignal {
    pub fn validate(&self) -> Result<(), ShutterError> {
        if !(self.frequency_hz.is_finite() && self.frequency_hz > 0.0) {
            return Err(ShutterError::Config(
                "drive frequency must be positive".into(),
            ));
        }
        if !(self.vpp.is_finite() && self.vpp > 0.0) {
            return Err(ShutterError::Config(
                "drive amplitude must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShutterModel {
    /// Transmitted fraction while driven.
    pub transparency_clear: f64,
    /// Transmitted fraction while undriven, diffusing glass included.
    pub transparency_blur: f64,
    /// Blur-to-clear transition time.
    pub rise_us: u64,
    /// Clear-to-blur transition time.
    pub fall_us: u64,
}

impl Default for ShutterModel {
    fn default() -> Self {
        Self {
            transparency_clear: 0.70,
            transparency_blur: 0.08,
            rise_us: 0,
            fall_us: 0,
        }
    }
}

impl ShutterModel {
    pub fn validate(&self) -> Result<(), ShutterError> {
        let (clear, blur) = (self.transparency_clear, self.transparency_blur);
        if !(0.0..BLUR_BOUND).contains(&blur) {
            return Err(ShutterError::Config(format!(
                "blur transparency must lie in [0, {BLUR_BOUND}), got {blur}"
            )));
        }
        if !(BLUR_BOUND..=1.0).contains(&clear) {
            return Err(ShutterError::Config(format!(
                "clear transparency must lie in [{BLUR_BOUND}, 1], got {clear}"
            )));
        }
        Ok(())
    }

    pub fn level(&self, drive_on: bool) -> f64 {
        if drive_on {
            self.transparency_clear
        } else {
            self.transparency_blur
        }
    }
}

/// A stretch of time `[start_us, end_us)` over which transparency moves
/// linearly from `from` to `to`. Steady segments have `from == to`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub start_us: u64,
    pub end_us: u64,
    pub from: f64,
    pub to: f64,
}

impl Segment {
    pub fn duration_us(&self) -> u64 {
        self.end_us - self.start_us
    }

    pub fn is_steady(&self) -> bool {
        self.from == self.to
    }

    pub fn at(&self, t_us: u64) -> f64 {
        if self.is_steady() {
            return self.from;
        }
        let x = (t_us - self.start_us) as f64 / self.duration_us() as f64;
        self.from + (self.to - self.from) * x
    }

    /// Time within the segment during which transparency is below `bound`.
    pub fn time_below(&self, bound: f64) -> f64 {
        let d = self.duration_us() as f64;
        let (lo, hi) = if self.from <= self.to {
            (self.from, self.to)
        } else {
            (self.to, self.from)
        };
        if hi < bound {
            d
        } else if lo >= bound {
            0.0
        } else {
            d * (bound - lo) / (hi - lo)
        }
    }
}

/// Transparency over a session as contiguous segments covering `[0, end]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OpticalTimeline {
    segments: Vec<Segment>,
}

impl OpticalTimeline {
    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn end_us(&self) -> u64 {
        self.segments.last().map_or(0, |s| s.end_us)
    }

    /// Earliest time at or after `t_us` when transparency is below `bound`.
    pub fn first_below(&self, t_us: u64, bound: f64) -> Option<f64> {
        self.segments
            .iter()
            .filter(|s| s.end_us > t_us)
            .find_map(|s| {
                let start = s.start_us.max(t_us);
                let v0 = s.at(start);
                if v0 < bound {
                    return Some(start as f64);
                }
                if s.to < bound {
                    // linear descent through the bound
                    let x = (v0 - bound) / (v0 - s.to);
                    Some(start as f64 + x * (s.end_us - start) as f64)
                } else {
                    None
                }
            })
    }
}

struct TimelineBuilder {
    segments: Vec<Segment>,
    cursor: u64,
    level: f64,
}

impl TimelineBuilder {
    fn push(&mut self, end_us: u64, to: f64) {
        if end_us > self.cursor {
            self.segments.push(Segment {
                start_us: self.cursor,
                end_us,
                from: self.level,
                to,
            });
            self.cursor = end_us;
        }
        self.level = to;
    }
}

/// Builds the optical timeline produced by a command sequence.
///
/// Commands that repeat the current drive state have no effect. A transition
/// runs at constant slope `(clear - blur) / ramp`, so a command arriving
/// mid-ramp reverses from the level reached so far.
pub fn apply_commands(
    model: &ShutterModel,
    commands: &[GateCommand],
    session_end_us: u64,
    initial_drive_on: bool,
) -> Result<OpticalTimeline, ShutterError> {
    model.validate()?;
    if let Some(w) = commands.windows(2).find(|w| w[1].issue_us < w[0].issue_us) {
        return Err(ShutterError::Unordered {
            prev_us: w[0].issue_us,
            issue_us: w[1].issue_us,
        });
    }
    if let Some(c) = commands.iter().find(|c| c.issue_us > session_end_us) {
        return Err(ShutterError::PastEnd {
            issue_us: c.issue_us,
            end_us: session_end_us,
        });
    }

    let span = model.transparency_clear - model.transparency_blur;
    let mut b = TimelineBuilder {
        segments: Vec::with_capacity(commands.len() * 2 + 1),
        cursor: 0,
        level: model.level(initial_drive_on),
    };
    let mut drive_on = initial_drive_on;
    // Pending ramp: (end time, target level).
    let mut ramp: Option<(u64, f64)> = None;

    for cmd in commands.iter().filter(|c| c.issue_us <= session_end_us) {
        if cmd.drive_on == drive_on {
            continue;
        }
        let t = cmd.issue_us;
        match ramp.take() {
            Some((end, target)) if end > t => {
                let partial = Segment {
                    start_us: b.cursor,
                    end_us: end,
                    from: b.level,
                    to: target,
                };
                let reached = partial.at(t);
                b.push(t, reached);
            }
            Some((end, target)) => {
                b.push(end, target);
                b.push(t, target);
            }
            None => b.push(t, b.level),
        }
        drive_on = cmd.drive_on;
        let target = model.level(drive_on);
        let ramp_us = if drive_on {
            model.rise_us
        } else {
            model.fall_us
        };
        if ramp_us == 0 || span <= 0.0 {
            b.level = target;
        } else {
            let len = ((target - b.level).abs() / span * ramp_us as f64).round() as u64;
            if len == 0 {
                b.level = target;
            } else {
                ramp = Some((t + len, target));
            }
        }
    }

    match ramp {
        Some((end, target)) if end > session_end_us => {
            let partial = Segment {
                start_us: b.cursor,
                end_us: end,
                from: b.level,
                to: target,
            };
            let reached = partial.at(session_end_us);
            b.push(session_end_us, reached);
        }
        Some((end, target)) => {
            b.push(end, target);
            b.push(session_end_us, target);
        }
        None => b.push(session_end_us, b.level),
    }
    Ok(OpticalTimeline {
        segments: b.segments,
    })
}

/// Transparency at `t_us`; segments are half-open, and the timeline end maps
/// to the final level.
pub fn transparency_at(timeline: &OpticalTimeline, t_us: u64) -> Result<f64, ShutterError> {
    let end = timeline.end_us();
    let segs = timeline.segments();
    if segs.is_empty() || t_us > end {
        return Err(ShutterError::OutOfRange { t_us, end_us: end });
    }
    if t_us == end {
        return Ok(segs[segs.len() - 1].to);
    }
    let idx = segs.partition_point(|s| s.end_us <= t_us);
    Ok(segs[idx].at(t_us))
}
