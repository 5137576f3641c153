//! The motion gate: a two-state machine that blurs the shutter as soon as any
//! axis reaches the angular-speed threshold and clears it once every axis has
//! stayed below threshold for the configured dwell.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bus::SampleEvent;
use crate::trace::GyroSample;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DetectorError {
    #[error("invalid detector config: {0}")]
    Config(String),
    #[error("sample at {t_us} us has a non-finite component")]
    NonFinite { t_us: u64 },
    #[error("event ready at {ready_us} us arrived after one ready at {last_us} us")]
    OutOfOrder { last_us: u64, ready_us: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectorConfig {
    /// Per-axis threshold in degrees per second. Reaching it counts as motion.
    pub threshold_dps: f64,
    /// How long all axes must stay below threshold before clearing.
    pub clear_dwell_us: u64,
    /// Firmware compute time from data ready to command issue.
    pub processing_delay_us: u64,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            threshold_dps: 6.1,
            clear_dwell_us: 0,
            processing_delay_us: 50,
        }
    }
}

impl DetectorConfig {
    pub fn validate(&self) -> Result<(), DetectorError> {
        if !(self.threshold_dps.is_finite() && self.threshold_dps > 0.0) {
            return Err(DetectorError::Config(format!(
                "threshold_dps must be positive, got {}",
                self.threshold_dps
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum GateMode {
    Clear,
    Blurred,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GateState {
    pub mode: GateMode,
    /// When all axes last dropped below threshold; `None` while in motion.
    pub below_since_us: Option<u64>,
    last_ready_us: Option<u64>,
}

impl GateState {
    pub fn new(mode: GateMode) -> Self {
        Self {
            mode,
            below_since_us: None,
            last_ready_us: None,
        }
    }

    pub fn clear() -> Self {
        Self::new(GateMode::Clear)
    }

    pub fn blurred() -> Self {
        Self::new(GateMode::Blurred)
    }
}

impl Default for GateState {
    fn default() -> Self {
        Self::clear()
    }
}

/// A drive decision: `drive_on` emits the square wave (clear), otherwise the
/// wave stops (blur).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GateCommand {
    pub issue_us: u64,
    pub drive_on: bool,
}

/// True when the largest absolute per-axis speed is at or above threshold.
pub fn classify_sample(sample: &GyroSample, cfg: &DetectorConfig) -> Result<bool, DetectorError> {
    cfg.validate()?;
    if !sample.is_finite() {
        return Err(DetectorError::NonFinite { t_us: sample.t_us });
    }
    Ok(sample.peak_abs() >= cfg.threshold_dps)
}

/// Advances the gate by one polled sample.
pub fn step(
    state: GateState,
    event: &SampleEvent,
    cfg: &DetectorConfig,
) -> Result<(GateState, Option<GateCommand>), DetectorError> {
    if let Some(last) = state.last_ready_us {
        if event.ready_us <= last {
            return Err(DetectorError::OutOfOrder {
                last_us: last,
                ready_us: event.ready_us,
            });
        }
    }
    let motion = classify_sample(&event.sample, cfg)?;
    let issue_us = event.ready_us + cfg.processing_delay_us;
    let mut next = GateState {
        last_ready_us: Some(event.ready_us),
        ..state
    };

    let command = if motion {
        next.below_since_us = None;
        match state.mode {
            GateMode::Clear => {
                next.mode = GateMode::Blurred;
                Some(GateCommand {
                    issue_us,
                    drive_on: false,
                })
            }
            GateMode::Blurred => None,
        }
    } else {
        let since = *next.below_since_us.get_or_insert(event.ready_us);
        match state.mode {
            GateMode::Blurred if event.ready_us - since >= cfg.clear_dwell_us => {
                next.mode = GateMode::Clear;
                Some(GateCommand {
                    issue_us,
                    drive_on: true,
                })
            }
            _ => None,
        }
    };
    Ok((next, command))
}

/// Owns a gate state and feeds it events in order.
#[derive(Debug, Clone)]
pub struct MotionGate {
    cfg: DetectorConfig,
    state: GateState,
}

impl MotionGate {
    pub fn new(cfg: DetectorConfig, initial: GateState) -> Result<Self, DetectorError> {
        cfg.validate()?;
        Ok(Self {
            cfg,
            state: initial,
        })
    }

    pub fn state(&self) -> GateState {
        self.state
    }

    pub fn push(&mut self, event: &SampleEvent) -> Result<Option<GateCommand>, DetectorError> {
        let (next, cmd) = step(self.state, event, &self.cfg)?;
        self.state = next;
        Ok(cmd)
    }

    /// Runs every event through the gate and collects the emitted commands.
    pub fn run<'a>(
        &mut self,
        events: impl IntoIterator<Item = &'a SampleEvent>,
    ) -> Result<Vec<GateCommand>, DetectorError> {
        let mut out = Vec::new();
        for ev in events {
            out.extend(self.push(ev)?);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(wx: f64, wy: f64, wz: f64) -> GyroSample {
        GyroSample::new(0, wx, wy, wz).unwrap()
    }

    fn event(ready_us: u64, s: GyroSample) -> SampleEvent {
        SampleEvent {
            request_us: ready_us.saturating_sub(420),
            ready_us,
            sample: s,
        }
    }

    #[test]
    fn classification_examples() {
        let cfg = DetectorConfig::default();
        assert!(!classify_sample(&sample(5.0, -3.0, 2.0), &cfg).unwrap());
        assert!(classify_sample(&sample(0.0, 6.2, 0.0), &cfg).unwrap());
        assert!(!classify_sample(&sample(0.0, 0.0, 0.0), &cfg).unwrap());
        assert!(classify_sample(&sample(0.0, -7.0, 0.0), &cfg).unwrap());
    }

    #[test]
    fn threshold_equality_is_motion() {
        let cfg = DetectorConfig::default();
        assert!(classify_sample(&sample(0.0, 0.0, 6.1), &cfg).unwrap());
        assert!(classify_sample(&sample(-6.1, 0.0, 0.0), &cfg).unwrap());
        assert!(!classify_sample(&sample(6.099_999, 0.0, 0.0), &cfg).unwrap());
    }

    #[test]
    fn non_finite_rejected() {
        let bad = GyroSample {
            t_us: 3,
            wx: f64::NAN,
            wy: 0.0,
            wz: 0.0,
        };
        assert_eq!(
            classify_sample(&bad, &DetectorConfig::default()),
            Err(DetectorError::NonFinite { t_us: 3 })
        );
    }

    #[test]
    fn motion_blurs_with_delay() {
        let cfg = DetectorConfig::default();
        let (s, cmd) = step(
            GateState::clear(),
            &event(1420, sample(0.0, 6.2, 0.0)),
            &cfg,
        )
        .unwrap();
        assert_eq!(s.mode, GateMode::Blurred);
        assert_eq!(s.below_since_us, None);
        assert_eq!(
            cmd,
            Some(GateCommand {
                issue_us: 1470,
                drive_on: false
            })
        );
    }

    #[test]
    fn still_sample_keeps_clear_silently() {
        let cfg = DetectorConfig::default();
        let (s, cmd) = step(GateState::clear(), &event(420, sample(0.0, 0.0, 0.0)), &cfg).unwrap();
        assert_eq!(s.mode, GateMode::Clear);
        assert_eq!(s.below_since_us, Some(420));
        assert_eq!(cmd, None);
    }

    #[test]
    fn still_sample_clears_with_zero_dwell() {
        let cfg = DetectorConfig::default();
        let (s, cmd) = step(
            GateState::blurred(),
            &event(5000, sample(1.0, 1.0, 1.0)),
            &cfg,
        )
        .unwrap();
        assert_eq!(s.mode, GateMode::Clear);
        assert_eq!(
            cmd,
            Some(GateCommand {
                issue_us: 5050,
                drive_on: true
            })
        );
    }

    #[test]
    fn dwell_delays_clearing() {
        let cfg = DetectorConfig {
            clear_dwell_us: 2000,
            ..Default::default()
        };
        let mut gate = MotionGate::new(cfg, GateState::clear()).unwrap();
        let still = sample(0.5, 0.0, 0.0);
        let moving = sample(20.0, 0.0, 0.0);
        let seq = [
            (420, moving),
            (1420, still),
            (2420, still),
            (3420, moving),
            (4420, still),
            (5420, still),
            (6420, still),
        ];
        let cmds: Vec<_> = seq
            .iter()
            .map(|&(t, s)| gate.push(&event(t, s)).unwrap())
            .collect();
        assert_eq!(cmds[0].map(|c| c.drive_on), Some(false));
        assert!(cmds[1..6].iter().all(Option::is_none));
        assert_eq!(
            cmds[6],
            Some(GateCommand {
                issue_us: 6470,
                drive_on: true
            })
        );
    }

    #[test]
    fn out_of_order_rejected() {
        let cfg = DetectorConfig::default();
        let (s, _) = step(
            GateState::clear(),
            &event(1420, sample(0.0, 0.0, 0.0)),
            &cfg,
        )
        .unwrap();
        let err = step(s, &event(420, sample(0.0, 0.0, 0.0)), &cfg).unwrap_err();
        assert_eq!(
            err,
            DetectorError::OutOfOrder {
                last_us: 1420,
                ready_us: 420
            }
        );
        assert!(step(s, &event(1420, sample(0.0, 0.0, 0.0)), &cfg).is_err());
    }

    #[test]
    fn bad_threshold_rejected() {
        for th in [0.0, -6.1, f64::INFINITY] {
            let cfg = DetectorConfig {
                threshold_dps: th,
                ..Default::default()
            };
            assert!(MotionGate::new(cfg, GateState::clear()).is_err());
        }
    }
}
