//! IIC read timing and the fixed-period polling schedule.
//!
//! A gyro read is modeled as: address+write, register, repeated start,
//! address+read, then the payload bytes. Every byte costs nine clocks (eight
//! data bits and an acknowledge) and START/RESTART/STOP together cost
//! `framing_clocks`. The bus is deterministic: no clock stretching, no NACKs.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::trace::{GyroSample, MotionTrace};

/// Clocks per transferred byte: eight data bits plus ACK.
pub const CLOCKS_PER_BYTE: u64 = 9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BusError {
    #[error("invalid bus config: {0}")]
    Config(String),
    #[error("schedule infeasible: transaction takes {transaction_us} us but the period is {period_us} us")]
    Infeasible { transaction_us: f64, period_us: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BusConfig {
    pub clock_hz: u64,
    pub payload_bytes: u32,
    pub addressing_bytes: u32,
    pub framing_clocks: u32,
}

impl Default for BusConfig {
    fn default() -> Self {
        Self {
            clock_hz: 200_000,
            payload_bytes: 6,
            addressing_bytes: 3,
            framing_clocks: 3,
        }
    }
}

impl BusConfig {
    pub fn validate(&self) -> Result<(), BusError> {
        if self.clock_hz == 0 {
            return Err(BusError::Config("clock_hz must be positive".into()));
        }
        if self.payload_bytes == 0 {
            return Err(BusError::Config("payload_bytes must be at least 1".into()));
        }
        Ok(())
    }

    /// Total clocks for one read transaction.
    pub fn transaction_clocks(&self) -> u64 {
        CLOCKS_PER_BYTE * (u64::from(self.addressing_bytes) + u64::from(self.payload_bytes))
            + u64::from(self.framing_clocks)
    }
}

/// Duration of one read transaction in microseconds.
pub fn transaction_duration_us(cfg: &BusConfig) -> Result<f64, BusError> {
    cfg.validate()?;
    Ok(cfg.transaction_clocks() as f64 * 1e6 / cfg.clock_hz as f64)
}

/// Transaction time rounded up to whole microseconds, the granularity of the
/// simulated clock.
pub fn transaction_ticks_us(cfg: &BusConfig) -> Result<u64, BusError> {
    cfg.validate()?;
    let num = cfg.transaction_clocks() * 1_000_000;
    Ok(num.div_ceil(cfg.clock_hz))
}

/// One polled read: when it was requested, when its data became available,
/// and the trace sample held in the sensor at request time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleEvent {
    pub request_us: u64,
    pub ready_us: u64,
    pub sample: GyroSample,
}

/// Polls the trace every `period_us` starting at t = 0.
///
/// Requests are issued at `0, period, 2*period, ...` while the request time
/// does not pass the last trace sample. Requests before the first trace
/// sample have nothing to read and produce no event.
pub fn sampling_schedule(
    trace: &MotionTrace,
    period_us: u64,
    cfg: &BusConfig,
) -> Result<Vec<SampleEvent>, BusError> {
    let duration = transaction_duration_us(cfg)?;
    if period_us == 0 || duration >= period_us as f64 {
        return Err(BusError::Infeasible {
            transaction_us: duration,
            period_us,
        });
    }
    let ticks = transaction_ticks_us(cfg)?;
    let Some(last) = trace.samples().last() else {
        return Ok(Vec::new());
    };

    let samples = trace.samples();
    let mut events = Vec::with_capacity((last.t_us / period_us + 1) as usize);
    let mut idx = 0;
    let mut request = 0u64;
    while request <= last.t_us {
        while idx + 1 < samples.len() && samples[idx + 1].t_us <= request {
            idx += 1;
        }
        if samples[idx].t_us <= request {
            events.push(SampleEvent {
                request_us: request,
                ready_us: request + ticks,
                sample: samples[idx],
            });
        }
        request += period_us;
    }
    Ok(events)
}
