//! Closed-loop simulation: trace → bus polling → motion gate → shutter, on a
//! simulated microsecond clock.
//!
//! Gate latency is measured from the motion onset in the underlying trace,
//! not from the sampled events, so it includes the wait for the next poll.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bus::{self, BusConfig, BusError};
use crate::detector::{self, DetectorConfig, DetectorError, GateCommand, GateState, MotionGate};
use crate::shutter::{self, DriveSignal, OpticalTimeline, ShutterError, ShutterModel, BLUR_BOUND};
use crate::trace::MotionTrace;

/// Latency the hardware loop must beat.
pub const LATENCY_BUDGET_US: u64 = 2000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error(transparent)]
    Bus(#[from] BusError),
    #[error(transparent)]
    Detector(#[from] DetectorError),
    #[error(transparent)]
    Shutter(#[from] ShutterError),
    #[error("commands inconsistent with trace: {0}")]
    Inconsistent(String),
    #[error("timeline has zero length")]
    EmptyTimeline,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub bus: BusConfig,
    pub detector: DetectorConfig,
    pub shutter: ShutterModel,
    pub drive: DriveSignal,
    pub period_us: u64,
    /// Count the optical fall time (down to the blur bound) in the latency.
    pub include_optical_latency: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            bus: BusConfig::default(),
            detector: DetectorConfig::default(),
            shutter: ShutterModel::default(),
            drive: DriveSignal::default(),
            period_us: 1000,
            include_optical_latency: false,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        self.detector.validate()?;
        self.shutter.validate()?;
        self.drive.validate()?;
        let duration = bus::transaction_duration_us(&self.bus)?;
        if self.period_us == 0 || duration >= self.period_us as f64 {
            return Err(BusError::Infeasible {
                transaction_us: duration,
                period_us: self.period_us,
            }
            .into());
        }
        Ok(())
    }

    /// Worst-case onset-to-command latency under this configuration:
    /// a full polling period, the bus read, and the processing delay.
    pub fn worst_case_latency_us(&self) -> Result<u64, SimError> {
        Ok(self.period_us
            + bus::transaction_ticks_us(&self.bus)?
            + self.detector.processing_delay_us)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatencyRecord {
    /// First above-threshold trace sample after a quiet interval.
    pub onset_us: u64,
    /// When the display was gated: the drive-off issue time, or the time the
    /// optics crossed the blur bound when optical latency is included.
    pub gated_us: f64,
    pub latency_us: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    pub commands: Vec<GateCommand>,
    pub timeline: OpticalTimeline,
    pub latencies: Vec<LatencyRecord>,
    /// Motion episodes that began and ended between two polls while the gate
    /// was clear, so no command could respond to them.
    pub missed_onsets: usize,
    pub blur_fraction: f64,
    pub session_end_us: u64,
}

impl SimResult {
    pub fn max_latency_us(&self) -> Option<f64> {
        self.latencies.iter().map(|r| r.latency_us).reduce(f64::max)
    }

    pub fn min_latency_us(&self) -> Option<f64> {
        self.latencies.iter().map(|r| r.latency_us).reduce(f64::min)
    }

    pub fn mean_latency_us(&self) -> Option<f64> {
        if self.latencies.is_empty() {
            return None;
        }
        Some(self.latencies.iter().map(|r| r.latency_us).sum::<f64>() / self.latencies.len() as f64)
    }

    pub fn within_budget(&self) -> bool {
        self.max_latency_us()
            .is_none_or(|l| l < LATENCY_BUDGET_US as f64)
    }
}

/// Runs the full loop. The session starts clear with the drive on.
pub fn run_simulation(trace: &MotionTrace, cfg: &SimConfig) -> Result<SimResult, SimError> {
    cfg.validate()?;
    let events = bus::sampling_schedule(trace, cfg.period_us, &cfg.bus)?;
    let mut gate = MotionGate::new(cfg.detector.clone(), GateState::clear())?;
    let commands = gate.run(&events)?;

    let last_issue = commands.last().map_or(0, |c| c.issue_us);
    let session_end_us = trace.end_us().max(last_issue);
    let timeline = shutter::apply_commands(&cfg.shutter, &commands, session_end_us, true)?;
    let (latencies, missed_onsets) = gate_latencies(trace, &commands, cfg, Some(&timeline))?;
    let blur_fraction = if session_end_us == 0 {
        0.0
    } else {
        blur_fraction(&timeline)?
    };
    Ok(SimResult {
        commands,
        timeline,
        latencies,
        missed_onsets,
        blur_fraction,
        session_end_us,
    })
}

/// Latency from every motion onset (while the gate is clear) to the drive-off
/// command that answers it.
pub fn measure_gate_latency(
    trace: &MotionTrace,
    commands: &[GateCommand],
    cfg: &SimConfig,
) -> Result<Vec<LatencyRecord>, SimError> {
    cfg.validate()?;
    let timeline = if cfg.include_optical_latency {
        let end = trace
            .end_us()
            .max(commands.last().map_or(0, |c| c.issue_us));
        Some(shutter::apply_commands(&cfg.shutter, commands, end, true)?)
    } else {
        None
    };
    gate_latencies(trace, commands, cfg, timeline.as_ref()).map(|(l, _)| l)
}

/// A maximal run of above-threshold trace samples: `[onset, end)`.
struct Episode {
    onset_us: u64,
    end_us: u64,
}

fn motion_episodes(trace: &MotionTrace, cfg: &DetectorConfig) -> Result<Vec<Episode>, SimError> {
    let mut out = Vec::new();
    let mut open: Option<u64> = None;
    for s in trace.samples() {
        let motion = detector::classify_sample(s, cfg)?;
        match (motion, open) {
            (true, None) => open = Some(s.t_us),
            (false, Some(onset)) => {
                out.push(Episode {
                    onset_us: onset,
                    end_us: s.t_us,
                });
                open = None;
            }
            _ => {}
        }
    }
    if let Some(onset) = open {
        out.push(Episode {
            onset_us: onset,
            end_us: trace.end_us(),
        });
    }
    Ok(out)
}

fn gate_latencies(
    trace: &MotionTrace,
    commands: &[GateCommand],
    cfg: &SimConfig,
    timeline: Option<&OpticalTimeline>,
) -> Result<(Vec<LatencyRecord>, usize), SimError> {
    let response_us = bus::transaction_ticks_us(&cfg.bus)? + cfg.detector.processing_delay_us;

    // Every drive-off must come from a poll that saw motion, and commands
    // must alternate starting from drive-on.
    let mut drive_on = true;
    for (i, c) in commands.iter().enumerate() {
        if i > 0 && c.issue_us < commands[i - 1].issue_us {
            return Err(SimError::Inconsistent(format!(
                "command {i} at {} us is out of order",
                c.issue_us
            )));
        }
        if c.drive_on == drive_on {
            return Err(SimError::Inconsistent(format!(
                "command {i} at {} us repeats the current drive state",
                c.issue_us
            )));
        }
        drive_on = c.drive_on;
        if !c.drive_on {
            let held = c
                .issue_us
                .checked_sub(response_us)
                .and_then(|request| trace.held_at(request));
            let saw_motion = match held {
                Some(s) => detector::classify_sample(s, &cfg.detector)?,
                None => false,
            };
            if !saw_motion {
                return Err(SimError::Inconsistent(format!(
                    "drive-off at {} us has no motion in the trace at its poll",
                    c.issue_us
                )));
            }
        }
    }

    let mut records = Vec::new();
    let mut missed = 0;
    for ep in motion_episodes(trace, &cfg.detector)? {
        // Gate state at onset: the latest command issued at or before it.
        let idx = commands.partition_point(|c| c.issue_us <= ep.onset_us);
        let blurred = idx > 0 && !commands[idx - 1].drive_on;
        if blurred {
            continue;
        }
        let answer = commands[idx..].iter().find(|c| !c.drive_on).filter(|c| {
            let request = c.issue_us - response_us;
            request >= ep.onset_us && request < ep.end_us
        });
        let Some(cmd) = answer else {
            missed += 1;
            continue;
        };
        let gated_us = match (cfg.include_optical_latency, timeline) {
            (true, Some(tl)) => tl
                .first_below(cmd.issue_us, BLUR_BOUND)
                .unwrap_or(tl.end_us() as f64),
            _ => cmd.issue_us as f64,
        };
        records.push(LatencyRecord {
            onset_us: ep.onset_us,
            gated_us,
            latency_us: gated_us - ep.onset_us as f64,
        });
    }
    Ok((records, missed))
}

/// Share of the timeline spent below the blur bound.
pub fn blur_fraction(timeline: &OpticalTimeline) -> Result<f64, SimError> {
    let total = timeline.end_us();
    if total == 0 {
        return Err(SimError::EmptyTimeline);
    }
    let below: f64 = timeline
        .segments()
        .iter()
        .map(|s| s.time_below(BLUR_BOUND))
        .sum();
    Ok(below / total as f64)
}
