//! The `ghost` command: run a scenario script and print a report.

use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, ValueEnum};

use crate::runtime::Runtime;
use crate::script::eval::run_program;
use crate::swapper::store::SegmentStore;
use crate::trace::TraceMode;

pub const EXIT_OK: i32 = 0;
pub const EXIT_ASSERTION: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;
pub const EXIT_SYNTAX: i32 = 3;

#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum ReportFormat {
    #[default]
    Text,
    Json,
}

/// Run a scenario script against a fresh runtime.
#[derive(Clone, Debug, Parser)]
#[command(name = "ghost", version)]
pub struct RunConfig {
    /// Script to run.
    pub script: PathBuf,
    #[arg(long = "trace", value_enum, default_value_t = TraceMode::Off)]
    pub trace_mode: TraceMode,
    #[arg(long = "report", value_enum, default_value_t = ReportFormat::Text)]
    pub report_format: ReportFormat,
    /// Directory for swapped-out segments. In memory when absent.
    #[arg(long = "segments")]
    pub segment_dir: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

impl RunConfig {
    pub fn new(script: impl Into<PathBuf>) -> Self {
        RunConfig {
            script: script.into(),
            trace_mode: TraceMode::Off,
            report_format: ReportFormat::Text,
            segment_dir: None,
            seed: 0,
        }
    }
}

/// Path of the trace sidecar for `script`.
pub fn trace_path(script: &std::path::Path) -> PathBuf {
    let mut s = script.as_os_str().to_owned();
    s.push(".trace");
    PathBuf::from(s)
}

/// Run with output going to the given writers. Answers the exit code.
pub fn run_with(config: &RunConfig, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let text = match std::fs::read_to_string(&config.script) {
        Ok(t) => t,
        Err(e) => {
            let _ = writeln!(err, "cannot read {}: {e}", config.script.display());
            return EXIT_SYNTAX;
        }
    };
    let mut rt = Runtime::new();
    rt.set_seed(config.seed);
    rt.trace.mode = config.trace_mode;
    if let Some(dir) = &config.segment_dir {
        match SegmentStore::directory(dir) {
            Ok(store) => rt.set_segment_store(store),
            Err(e) => {
                let _ = writeln!(err, "{e}");
                return EXIT_RUNTIME;
            }
        }
    }
    let result = run_program(&mut rt, &text);
    if config.trace_mode != TraceMode::Off {
        if let Err(e) = std::fs::write(trace_path(&config.script), rt.trace.render()) {
            let _ = writeln!(err, "cannot write trace: {e}");
        }
    }
    let code = match result {
        Ok(r) if r.failures.is_empty() => EXIT_OK,
        Ok(r) => {
            for (pos, message) in &r.failures {
                let _ = writeln!(err, "{}:{pos}: {message}", config.script.display());
            }
            EXIT_ASSERTION
        }
        Err(e) => {
            match e.pos() {
                Some(pos) => {
                    let _ = writeln!(err, "{}:{pos}: {}", config.script.display(), e.kind());
                }
                None => {
                    let _ = writeln!(err, "{}: {e}", config.script.display());
                }
            }
            if e.is_syntax() {
                return EXIT_SYNTAX;
            }
            EXIT_RUNTIME
        }
    };
    let report = rt.report();
    let doc = match config.report_format {
        ReportFormat::Text => report.to_text(),
        ReportFormat::Json => report.to_json(),
    };
    let _ = writeln!(out, "{doc}");
    code
}

pub fn run(config: &RunConfig) -> i32 {
    run_with(config, &mut std::io::stdout().lock(), &mut std::io::stderr().lock())
}
