//! Command-line driver.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Parser, ValueEnum};
use rayon::prelude::*;

use crate::diagnostics::{render, Format, Severity};
use crate::engine::{prepare_registry, Registry, DEFAULT_STEP_BUDGET};
use crate::labeling::LabelingConfig;
use crate::typelang::{load_signatures, SignatureTable};
use crate::{analyze_source, AnalysisOptions, FileAnalysis};

pub const EXIT_CLEAN: i32 = 0;
pub const EXIT_ERRORS: i32 = 1;
pub const EXIT_WARNINGS: i32 = 2;
pub const EXIT_FRONT_END: i32 = 3;
pub const EXIT_USAGE: i32 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Text,
    Machine,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TraceFormat {
    Text,
    Json,
}

/// Static type analysis for Q programs.
#[derive(Debug, Parser)]
#[command(name = "qtype", version)]
pub struct Config {
    /// Q source files to analyze.
    #[arg(required = true)]
    pub files: Vec<PathBuf>,

    /// Built-in signature file. Defaults to ./builtins.sig when present,
    /// otherwise the bundled table.
    #[arg(long, env = "QTYPE_SIGNATURES")]
    pub signatures: Option<PathBuf>,

    #[arg(long, value_enum, default_value_t = OutputFormat::Text)]
    pub format: OutputFormat,

    /// List the inferred type of every expression.
    #[arg(long)]
    pub types: bool,

    /// Dump the propagation trace.
    #[arg(long)]
    pub trace: bool,

    #[arg(long, value_enum, default_value_t = TraceFormat::Text)]
    pub trace_format: TraceFormat,

    /// Search for consistent assignments when constraints remain (default).
    #[arg(long, overrides_with = "no_label")]
    pub label: bool,

    #[arg(long, overrides_with = "label")]
    pub no_label: bool,

    #[arg(long, default_value_t = LabelingConfig::default().max_splits)]
    pub max_splits: usize,

    #[arg(long, default_value_t = LabelingConfig::default().max_solutions)]
    pub max_solutions: usize,

    #[arg(long, default_value_t = DEFAULT_STEP_BUDGET)]
    pub step_budget: usize,

    /// Exit 0 instead of 2 when only warnings are reported.
    #[arg(long)]
    pub warnings_ok: bool,
}

/// Captured result of one invocation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunOutput {
    pub stdout: String,
    pub stderr: String,
    pub code: i32,
}

/// Order in which exit codes win when files disagree.
fn priority(code: i32) -> u8 {
    match code {
        EXIT_USAGE => 4,
        EXIT_FRONT_END => 3,
        EXIT_ERRORS => 2,
        EXIT_WARNINGS => 1,
        _ => 0,
    }
}

pub fn worst(a: i32, b: i32) -> i32 {
    if priority(b) > priority(a) {
        b
    } else {
        a
    }
}

/// Exit code for one analyzed file.
pub fn file_status(a: &FileAnalysis, warnings_ok: bool) -> i32 {
    if a.has_front_end_errors() {
        EXIT_FRONT_END
    } else if a.count(Severity::Error) > 0 {
        EXIT_ERRORS
    } else if a.count(Severity::Warning) > 0 && !warnings_ok {
        EXIT_WARNINGS
    } else {
        EXIT_CLEAN
    }
}

fn load_table(config: &Config) -> Result<SignatureTable, String> {
    let path = match &config.signatures {
        Some(p) => Some(p.clone()),
        None => Some(PathBuf::from("builtins.sig")).filter(|p| p.is_file()),
    };
    match path {
        Some(p) => load_signatures(&p).map_err(|e| e.to_string()),
        None => Ok(SignatureTable::builtin()),
    }
}

/// Run with already-parsed arguments.
pub fn run(config: &Config) -> RunOutput {
    let usage = |msg: String| RunOutput { stdout: String::new(), stderr: format!("qtype: {msg}\n"), code: EXIT_USAGE };
    let sigs = match load_table(config) {
        Ok(t) => t,
        Err(e) => return usage(e),
    };
    let registry = match prepare_registry(&sigs, &Registry::standard()) {
        Ok(r) => Arc::new(r),
        Err(e) => return usage(format!("invalid signature table: {e}")),
    };
    let opts = AnalysisOptions {
        label: !config.no_label,
        labeling: LabelingConfig { max_splits: config.max_splits, max_solutions: config.max_solutions.max(1) },
        step_budget: config.step_budget,
    };
    let format = match config.format {
        OutputFormat::Text => Format::Text,
        OutputFormat::Machine => Format::Machine,
    };

    let results: Vec<Result<(String, i32), String>> =
        config.files.par_iter().map(|path| analyze_file(path, &sigs, &registry, &opts, config, format)).collect();

    let mut out = RunOutput { stdout: String::new(), stderr: String::new(), code: EXIT_CLEAN };
    for r in results {
        match r {
            Ok((text, code)) => {
                out.stdout.push_str(&text);
                out.code = worst(out.code, code);
            }
            Err(msg) => {
                out.stderr.push_str(&format!("qtype: {msg}\n"));
                out.code = worst(out.code, EXIT_USAGE);
            }
        }
    }
    out
}

fn analyze_file(
    path: &Path,
    sigs: &SignatureTable,
    registry: &Arc<Registry>,
    opts: &AnalysisOptions,
    config: &Config,
    format: Format,
) -> Result<(String, i32), String> {
    let source = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    let name = path.display().to_string();
    let analysis = analyze_source(&source, &name, sigs, registry, opts);
    let report = analysis.report.as_ref().filter(|_| config.types);
    let mut text = render(&analysis.diagnostics, report, format);
    if config.trace {
        for e in &analysis.trace {
            match config.trace_format {
                TraceFormat::Text => text.push_str(&e.render(analysis.node_count)),
                TraceFormat::Json => text.push_str(&e.to_json(analysis.node_count).to_string()),
            }
            text.push('\n');
        }
    }
    Ok((text, file_status(&analysis, config.warnings_ok)))
}

/// Parse `args` (program name first) and run.
pub fn run_args<I, T>(args: I) -> RunOutput
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Config::try_parse_from(args) {
        Ok(config) => run(&config),
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_CLEAN };
            let text = e.render().to_string();
            if e.use_stderr() {
                RunOutput { stdout: String::new(), stderr: text, code }
            } else {
                RunOutput { stdout: text, stderr: String::new(), code }
            }
        }
    }
}
