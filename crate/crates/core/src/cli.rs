//! The `blurgate` command line: trace generation, closed-loop simulation,
//! questionnaire analysis and the published-table check.
//!
//! Exit codes: 0 success, 1 validation error, 2 tolerance failure, 3 I/O
//! error.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::bus;
use crate::harness::{run_simulation, SimConfig, SimResult, LATENCY_BUDGET_US};
use crate::ssqstats::{self, table2, Symptom, SymptomReport};
use crate::trace::{self, MotionTrace, TraceGenConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitStatus {
    Success = 0,
    Validation = 1,
    Tolerance = 2,
    Io = 3,
}

impl ExitStatus {
    pub fn code(self) -> i32 {
        self as i32
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "blurgate",
    version,
    about = "Motion-gated display blur: simulation and SSQ analysis"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Generator seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Write the result here instead of stdout.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    /// Emit a JSON document instead of text.
    #[arg(long, global = true)]
    pub json: bool,
    #[command(flatten)]
    pub overrides: Overrides,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic head-motion trace as CSV.
    GenTrace,
    /// Run the closed loop over a trace CSV and report gate latency.
    Simulate {
        /// Trace CSV (t_us,wx_dps,wy_dps,wz_dps).
        trace: PathBuf,
    },
    /// Matched-samples t-test on experimental vs control SSQ responses.
    Analyze {
        experimental: PathBuf,
        control: PathBuf,
    },
    /// Recompute the published table from its mean and sd columns.
    VerifyTable2 {
        /// Add 0.01 to one symptom's sd before checking.
        #[arg(long, hide = true)]
        perturb_sd: Option<Symptom>,
    },
}

/// Configuration overrides shared by every subcommand.
#[derive(Debug, Clone, Default, Args, Serialize)]
pub struct Overrides {
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub threshold_dps: Option<f64>,
    #[arg(long, global = true)]
    pub period_us: Option<u64>,
    #[arg(long, global = true)]
    pub clock_hz: Option<u64>,
    #[arg(long, global = true)]
    pub payload_bytes: Option<u32>,
    #[arg(long, global = true)]
    pub processing_delay_us: Option<u64>,
    #[arg(long, global = true)]
    pub clear_dwell_us: Option<u64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub session_s: Option<f64>,
}

impl Overrides {
    pub fn sim_config(&self) -> SimConfig {
        let mut cfg = SimConfig::default();
        if let Some(v) = self.threshold_dps {
            cfg.detector.threshold_dps = v;
        }
        if let Some(v) = self.period_us {
            cfg.period_us = v;
        }
        if let Some(v) = self.clock_hz {
            cfg.bus.clock_hz = v;
        }
        if let Some(v) = self.payload_bytes {
            cfg.bus.payload_bytes = v;
        }
        if let Some(v) = self.processing_delay_us {
            cfg.detector.processing_delay_us = v;
        }
        if let Some(v) = self.clear_dwell_us {
            cfg.detector.clear_dwell_us = v;
        }
        cfg
    }

    pub fn trace_config(&self, seed: u64) -> TraceGenConfig {
        let mut cfg = TraceGenConfig {
            seed,
            ..Default::default()
        };
        if let Some(v) = self.session_s {
            cfg.session_s = v;
        }
        cfg
    }
}

/// What a run was asked to do; echoed into reports.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub subcommand: &'static str,
    pub inputs: Vec<PathBuf>,
    pub overrides: Overrides,
    pub seed: Option<u64>,
    pub output: Option<PathBuf>,
}

impl RunManifest {
    fn from_cli(cli: &Cli) -> Self {
        let (subcommand, inputs) = match &cli.command {
            Command::GenTrace => ("gen-trace", vec![]),
            Command::Simulate { trace } => ("simulate", vec![trace.clone()]),
            Command::Analyze {
                experimental,
                control,
            } => ("analyze", vec![experimental.clone(), control.clone()]),
            Command::VerifyTable2 { .. } => ("verify-table2", vec![]),
        };
        Self {
            subcommand,
            inputs,
            overrides: cli.overrides.clone(),
            seed: cli.seed,
            output: cli.output.clone(),
        }
    }

    /// Checks that inputs exist and overrides form valid configs.
    pub fn validate(&self) -> Result<(), Failure> {
        if let Some(missing) = self.inputs.iter().find(|p| !p.is_file()) {
            return Err(Failure::io(format!(
                "input file not found: {}",
                missing.display()
            )));
        }
        self.overrides
            .sim_config()
            .validate()
            .map_err(|e| Failure::validation(e.to_string()))?;
        self.overrides
            .trace_config(self.seed.unwrap_or(DEFAULT_SEED))
            .validate()
            .map_err(|e| Failure::validation(e.to_string()))?;
        Ok(())
    }
}

pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug)]
pub struct Failure {
    pub status: ExitStatus,
    pub message: String,
}

impl Failure {
    fn validation(message: impl Into<String>) -> Self {
        Self {
            status: ExitStatus::Validation,
            message: message.into(),
        }
    }

    fn io(message: impl Into<String>) -> Self {
        Self {
            status: ExitStatus::Io,
            message: message.into(),
        }
    }
}

/// Parses `args` (program name first) and runs the subcommand.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(stderr, "{e}");
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                    let _ = write!(stdout, "{e}");
                    ExitStatus::Success.code()
                }
                _ => ExitStatus::Validation.code(),
            };
        }
    };
    match execute(&cli, stdout, stderr) {
        Ok(status) => status.code(),
        Err(f) => {
            let _ = writeln!(stderr, "error: {}", f.message);
            f.status.code()
        }
    }
}

pub fn execute(
    cli: &Cli,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<ExitStatus, Failure> {
    let manifest = RunManifest::from_cli(cli);
    manifest.validate()?;
    match &cli.command {
        Command::GenTrace => cmd_gen_trace(cli, &manifest, stdout, stderr),
        Command::Simulate { trace } => cmd_simulate(cli, &manifest, trace, stdout),
        Command::Analyze {
            experimental,
            control,
        } => cmd_analyze(cli, experimental, control, stdout),
        Command::VerifyTable2 { perturb_sd } => cmd_verify_table2(cli, *perturb_sd, stdout),
    }
}

fn emit(cli: &Cli, body: &str, stdout: &mut dyn Write) -> Result<(), Failure> {
    match &cli.output {
        Some(path) => std::fs::write(path, body)
            .map_err(|e| Failure::io(format!("cannot write {}: {e}", path.display()))),
        None => stdout
            .write_all(body.as_bytes())
            .map_err(|e| Failure::io(format!("cannot write output: {e}"))),
    }
}

fn read_input(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path)
        .map_err(|e| Failure::io(format!("cannot read {}: {e}", path.display())))
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    s
}

fn cmd_gen_trace(
    cli: &Cli,
    manifest: &RunManifest,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<ExitStatus, Failure> {
    let cfg = cli
        .overrides
        .trace_config(manifest.seed.unwrap_or(DEFAULT_SEED));
    let trace =
        trace::generate_session_trace(&cfg).map_err(|e| Failure::validation(e.to_string()))?;
    emit(cli, &trace::serialize_trace(&trace), stdout)?;
    let _ = writeln!(
        stderr,
        "wrote {} samples spanning {:.3} s",
        trace.len(),
        trace.end_us() as f64 / 1e6
    );
    Ok(ExitStatus::Success)
}

#[derive(Serialize)]
struct SimulationReport<'a> {
    manifest: &'a RunManifest,
    config: &'a SimConfig,
    transaction_us: f64,
    worst_case_bound_us: u64,
    budget_us: u64,
    samples: usize,
    commands: &'a [crate::detector::GateCommand],
    latency: LatencySummary,
    latencies: &'a [crate::harness::LatencyRecord],
    missed_onsets: usize,
    blur_fraction: f64,
    pass: bool,
}

#[derive(Serialize)]
struct LatencySummary {
    count: usize,
    min_us: Option<f64>,
    mean_us: Option<f64>,
    max_us: Option<f64>,
}

fn cmd_simulate(
    cli: &Cli,
    manifest: &RunManifest,
    path: &Path,
    stdout: &mut dyn Write,
) -> Result<ExitStatus, Failure> {
    let trace = trace::parse_trace(&read_input(path)?)
        .map_err(|e| Failure::validation(format!("{}: {e}", path.display())))?;
    let cfg = cli.overrides.sim_config();
    let result = run_simulation(&trace, &cfg).map_err(|e| Failure::validation(e.to_string()))?;
    let transaction_us =
        bus::transaction_duration_us(&cfg.bus).map_err(|e| Failure::validation(e.to_string()))?;
    let worst = cfg
        .worst_case_latency_us()
        .map_err(|e| Failure::validation(e.to_string()))?;
    let pass = result.within_budget();

    let body = if cli.json {
        to_json(&SimulationReport {
            manifest,
            config: &cfg,
            transaction_us,
            worst_case_bound_us: worst,
            budget_us: LATENCY_BUDGET_US,
            samples: trace.len(),
            commands: &result.commands,
            latency: LatencySummary {
                count: result.latencies.len(),
                min_us: result.min_latency_us(),
                mean_us: result.mean_latency_us(),
                max_us: result.max_latency_us(),
            },
            latencies: &result.latencies,
            missed_onsets: result.missed_onsets,
            blur_fraction: result.blur_fraction,
            pass,
        })
    } else {
        simulation_text(path, &trace, &cfg, &result, transaction_us, worst, pass)
    };
    emit(cli, &body, stdout)?;
    Ok(if pass {
        ExitStatus::Success
    } else {
        ExitStatus::Tolerance
    })
}

fn simulation_text(
    path: &Path,
    trace: &MotionTrace,
    cfg: &SimConfig,
    r: &SimResult,
    transaction_us: f64,
    worst: u64,
    pass: bool,
) -> String {
    let mut s = String::new();
    let opt = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |v| format!("{v:.1}"));
    let _ = writeln!(s, "blurgate simulation report");
    let _ = writeln!(s, "trace                 {}", path.display());
    let _ = writeln!(s, "samples               {}", trace.len());
    let _ = writeln!(s, "session_us            {}", r.session_end_us);
    let _ = writeln!(s);
    let _ = writeln!(s, "[config]");
    let _ = writeln!(s, "clock_hz              {}", cfg.bus.clock_hz);
    let _ = writeln!(s, "payload_bytes         {}", cfg.bus.payload_bytes);
    let _ = writeln!(s, "addressing_bytes      {}", cfg.bus.addressing_bytes);
    let _ = writeln!(s, "framing_clocks        {}", cfg.bus.framing_clocks);
    let _ = writeln!(s, "period_us             {}", cfg.period_us);
    let _ = writeln!(s, "threshold_dps         {}", cfg.detector.threshold_dps);
    let _ = writeln!(s, "clear_dwell_us        {}", cfg.detector.clear_dwell_us);
    let _ = writeln!(
        s,
        "processing_delay_us   {}",
        cfg.detector.processing_delay_us
    );
    let _ = writeln!(
        s,
        "drive                 {} Hz, {} Vpp",
        cfg.drive.frequency_hz, cfg.drive.vpp
    );
    let _ = writeln!(
        s,
        "transparency          clear {}, blur {}",
        cfg.shutter.transparency_clear, cfg.shutter.transparency_blur
    );
    let _ = writeln!(s, "transaction_us        {transaction_us}");
    let _ = writeln!(s, "worst_case_bound_us   {worst}");
    let _ = writeln!(s);
    let _ = writeln!(s, "[commands] {}", r.commands.len());
    let _ = writeln!(s, "{:>14}  drive", "issue_us");
    for c in &r.commands {
        let _ = writeln!(
            s,
            "{:>14}  {}",
            c.issue_us,
            if c.drive_on { "on" } else { "off" }
        );
    }
    let _ = writeln!(s);
    let _ = writeln!(s, "[latency] {} onsets", r.latencies.len());
    let _ = writeln!(s, "min_us                {}", opt(r.min_latency_us()));
    let _ = writeln!(s, "mean_us               {}", opt(r.mean_latency_us()));
    let _ = writeln!(s, "max_us                {}", opt(r.max_latency_us()));
    let _ = writeln!(s, "missed_onsets         {}", r.missed_onsets);
    let _ = writeln!(s, "blur_fraction         {:.6}", r.blur_fraction);
    let _ = writeln!(
        s,
        "result                {} (max latency < {LATENCY_BUDGET_US} us)",
        if pass { "PASS" } else { "FAIL" }
    );
    s
}

fn cmd_analyze(
    cli: &Cli,
    experimental: &Path,
    control: &Path,
    stdout: &mut dyn Write,
) -> Result<ExitStatus, Failure> {
    let mut responses = Vec::new();
    for path in [experimental, control] {
        let parsed = ssqstats::parse_ssq_csv(&read_input(path)?)
            .map_err(|e| Failure::validation(format!("{}: {e}", path.display())))?;
        responses.extend(parsed);
    }
    let (exp, ctl) = ssqstats::split_by_condition(&responses);
    let report = ssqstats::build_symptom_report(&exp, &ctl)
        .map_err(|e| Failure::validation(e.to_string()))?;
    let body = if cli.json {
        to_json(&report)
    } else {
        report_text(&report)
    };
    emit(cli, &body, stdout)?;
    Ok(ExitStatus::Success)
}

const TABLE_HEADER: [&str; 10] = [
    "Symptom Pairs(blurred-clear)",
    "Mean",
    "Std. Deviation",
    "Std. Error Mean",
    "95% CI Lower",
    "95% CI Upper",
    "t",
    "df",
    "Sig. (2-tailed)",
    "",
];

fn table_text(rows: &[[String; 10]]) -> String {
    let mut widths = TABLE_HEADER.map(str::len);
    for r in rows {
        for (w, cell) in widths.iter_mut().zip(r) {
            *w = (*w).max(cell.len());
        }
    }
    let mut s = String::new();
    let mut line = |cells: &[&str]| {
        let mut out = format!("{:<w$}", cells[0], w = widths[0]);
        for (cell, w) in cells[1..].iter().zip(&widths[1..]) {
            let _ = write!(out, "  {cell:>w$}");
        }
        s.push_str(out.trim_end());
        s.push('\n');
    };
    line(&TABLE_HEADER);
    for r in rows {
        let cells: Vec<&str> = r.iter().map(String::as_str).collect();
        line(&cells);
    }
    s
}

fn result_cells(
    symptom: Symptom,
    r: &crate::ssqstats::PairedTestResult,
    marker: &str,
) -> [String; 10] {
    [
        symptom.name().to_string(),
        format!("{:.5}", r.mean),
        format!("{:.5}", r.sd),
        format!("{:.5}", r.se),
        format!("{:.5}", r.ci_low),
        format!("{:.5}", r.ci_high),
        format!("{:.3}", r.t),
        r.df.to_string(),
        format!("{:.3}", r.p),
        marker.to_string(),
    ]
}

/// Renders a report with the published table's column order.
pub fn report_text(report: &SymptomReport) -> String {
    let rows: Vec<_> = report
        .rows
        .iter()
        .map(|row| {
            result_cells(
                row.symptom,
                &row.result,
                if row.significant { "*" } else { "" },
            )
        })
        .collect();
    let mut s = table_text(&rows);
    let _ = writeln!(s, "* p < {}", ssqstats::SIGNIFICANCE_LEVEL);
    s
}

fn cmd_verify_table2(
    cli: &Cli,
    perturb_sd: Option<Symptom>,
    stdout: &mut dyn Write,
) -> Result<ExitStatus, Failure> {
    let mut rows = table2::PRINTED;
    if let Some(sym) = perturb_sd {
        if let Some(r) = rows.iter_mut().find(|r| r.symptom == sym) {
            r.sd += 0.01;
        }
    }
    let v = table2::verify(&rows, table2::PAIRS, table2::TOLERANCE)
        .map_err(|e| Failure::validation(e.to_string()))?;

    let body = if cli.json {
        #[derive(Serialize)]
        struct Doc<'a> {
            all_pass: bool,
            #[serde(flatten)]
            verification: &'a table2::Verification,
        }
        to_json(&Doc {
            all_pass: v.all_pass(),
            verification: &v,
        })
    } else {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{:<24}  {:>9}  {:>9}  {:>9}  {:>9}  {:>9}  {:>9}  result",
            "symptom", "d_se", "d_ci_low", "d_ci_high", "d_t", "d_p", "max|d|"
        );
        for r in &v.rows {
            let d = &r.deviations;
            let _ = writeln!(
                s,
                "{:<24}  {:>9.6}  {:>9.6}  {:>9.6}  {:>9.6}  {:>9.6}  {:>9.6}  {}",
                r.printed.symptom.name(),
                d.se,
                d.ci_low,
                d.ci_high,
                d.t,
                d.p,
                d.max_abs(),
                if r.pass { "PASS" } else { "FAIL" }
            );
        }
        let passed = v.rows.iter().filter(|r| r.pass).count();
        let _ = writeln!(
            s,
            "{passed}/{} rows within ±{} (n = {})",
            v.rows.len(),
            v.tolerance,
            table2::PAIRS
        );
        s
    };
    emit(cli, &body, stdout)?;
    Ok(if v.all_pass() {
        ExitStatus::Success
    } else {
        ExitStatus::Tolerance
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_capture(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run(
            std::iter::once("blurgate").chain(args.iter().copied()),
            &mut out,
            &mut err,
        );
        (
            code,
            String::from_utf8(out).unwrap(),
            String::from_utf8(err).unwrap(),
        )
    }

    #[test]
    fn verify_table2_passes() {
        let (code, out, _) = run_capture(&["verify-table2"]);
        assert_eq!(code, 0, "{out}");
        assert!(out.contains("14/14 rows"));
    }

    #[test]
    fn perturbed_row_fails() {
        let (code, out, _) = run_capture(&["verify-table2", "--perturb-sd", "Nausea"]);
        assert_eq!(code, 2);
        let failing: Vec<_> = out.lines().filter(|l| l.ends_with("FAIL")).collect();
        assert_eq!(failing.len(), 1);
        assert!(failing[0].starts_with("Nausea"));
    }

    #[test]
    fn verify_json_parses() {
        let (code, out, _) = run_capture(&["verify-table2", "--json"]);
        assert_eq!(code, 0);
        let v: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v["all_pass"], true);
        assert_eq!(v["rows"].as_array().unwrap().len(), 14);
    }

    #[test]
    fn negative_threshold_is_validation_error() {
        let (code, _, err) = run_capture(&["gen-trace", "--threshold-dps", "-1"]);
        assert_eq!(code, 1, "{err}");
    }

    #[test]
    fn unknown_flag_is_validation_error() {
        let (code, _, _) = run_capture(&["gen-trace", "--bogus"]);
        assert_eq!(code, 1);
    }

    #[test]
    fn missing_input_is_io_error() {
        let (code, _, err) = run_capture(&["simulate", "/nonexistent/trace.csv"]);
        assert_eq!(code, 3);
        assert!(err.contains("not found"));
    }

    #[test]
    fn short_trace_to_stdout() {
        let (code, out, err) = run_capture(&["gen-trace", "--session-s", "0.005", "--seed", "1"]);
        assert_eq!(code, 0);
        assert_eq!(out.lines().count(), 6);
        assert!(err.contains("wrote 5 samples"));
    }
}
