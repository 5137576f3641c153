//! Motion-gated display blur for head-mounted displays.
//!
//! A gyroscope is polled over IIC every millisecond; whenever any axis turns
//! at or above 6.1°/s the controller stops driving a liquid-crystal sheet in
//! front of the phone screen, which then diffuses the image. This crate
//! simulates that loop on a microsecond clock and checks its gate latency,
//! and it carries the questionnaire statistics used to evaluate the effect.
//!
//! The pipeline, module by module:
//!
//! * [`trace`]: angular-velocity traces, their CSV form, and a seeded
//!   session generator.
//! * [`bus`]: IIC transaction timing and the polling schedule.
//! * [`detector`]: the clear/blurred gate state machine.
//! * [`shutter`]: drive commands to optical transparency over time.
//! * [`harness`]: the closed loop, gate latency and blur duty.
//! * [`ssqstats`]: questionnaire data, paired differences and the
//!   matched-samples t-test.
//! * [`cli`]: the `blurgate` command-line front end.
//!
//! ```
//! use blurgate::harness::{run_simulation, SimConfig};
//! use blurgate::trace::{generate_session_trace, TraceGenConfig};
//!
//! let trace = generate_session_trace(&TraceGenConfig {
//!     session_s: 60.0,
//!     seed: 42,
//!     ..Default::default()
//! })
//! .unwrap();
//! let result = run_simulation(&trace, &SimConfig::default()).unwrap();
//! assert!(result.max_latency_us().unwrap() <= 1470.0);
//! ```
//!
//! The guide under `book/` walks through each stage; its code listings are
//! compiled and run as doctests of this crate.

pub mod bus;
pub mod cli;
pub mod detector;
pub mod harness;
pub mod shutter;
pub mod ssqstats;
pub mod trace;

pub use harness::{run_simulation, SimConfig, SimResult};
pub use trace::{GyroSample, MotionTrace};

// Book chapters are checked as doctests, one module per chapter.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/traces.md")]
    mod traces {}
    #[doc = include_str!("../../../book/src/bus-timing.md")]
    mod bus_timing {}
    #[doc = include_str!("../../../book/src/motion-gate.md")]
    mod motion_gate {}
    #[doc = include_str!("../../../book/src/shutter.md")]
    mod shutter {}
    #[doc = include_str!("../../../book/src/closed-loop.md")]
    mod closed_loop {}
    #[doc = include_str!("../../../book/src/student-t.md")]
    mod student_t {}
    #[doc = include_str!("../../../book/src/paired-t-test.md")]
    mod paired_t_test {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
