//! Constraint-based static type analyzer for a subset of the Q language.

pub mod cli;
pub mod diagnostics;
pub mod engine;
pub mod labeling;
pub mod span;
pub mod syntax;
pub mod typelang;

use std::sync::Arc;

use diagnostics::{Diagnostic, DiagnosticKind, Severity, TypeReport};
use engine::{generate_constraints, GenerateError, Registry, TraceEvent, DEFAULT_STEP_BUDGET};
use labeling::LabelingConfig;
use typelang::SignatureTable;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AnalysisOptions {
    pub label: bool,
    pub labeling: LabelingConfig,
    pub step_budget: usize,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        AnalysisOptions { label: true, labeling: LabelingConfig::default(), step_budget: DEFAULT_STEP_BUDGET }
    }
}

#[derive(Debug, Clone, Default)]
pub struct FileAnalysis {
    pub diagnostics: Vec<Diagnostic>,
    /// Absent when the file never reached type checking.
    pub report: Option<TypeReport>,
    pub trace: Vec<TraceEvent>,
    pub node_count: u32,
}

impl FileAnalysis {
    pub fn has_front_end_errors(&self) -> bool {
        self.diagnostics.iter().any(|d| d.kind.is_front_end())
    }

    pub fn count(&self, severity: Severity) -> usize {
        self.diagnostics.iter().filter(|d| d.severity == severity).count()
    }
}

/// Analyze one source text. `registry` must come from
/// [`engine::prepare_registry`] for `sigs`.
pub fn analyze_source(
    source: &str,
    file: &str,
    sigs: &SignatureTable,
    registry: &Arc<Registry>,
    opts: &AnalysisOptions,
) -> FileAnalysis {
    let (root, annots) = match syntax::front_end(source, file) {
        Ok(parsed) => parsed,
        Err(errs) => {
            let mut diagnostics: Vec<Diagnostic> = errs.iter().map(Diagnostic::from_front).collect();
            diagnostics::sort_diagnostics(&mut diagnostics);
            return FileAnalysis { diagnostics, ..FileAnalysis::default() };
        }
    };
    let mut store = match generate_constraints(&root, &annots, sigs, registry.clone()) {
        Ok(s) => s,
        Err(GenerateError::UnknownBuiltin { name, span }) => {
            let d = Diagnostic::new(
                &span,
                Severity::Error,
                DiagnosticKind::UnknownBuiltin,
                format!("operator `{name}` has no signature"),
            );
            return FileAnalysis { diagnostics: vec![d], ..FileAnalysis::default() };
        }
        Err(e) => {
            let d = Diagnostic::new(&root.span, Severity::Error, DiagnosticKind::Internal, e.to_string());
            return FileAnalysis { diagnostics: vec![d], ..FileAnalysis::default() };
        }
    };
    store.set_step_budget(opts.step_budget);
    store.propagate();
    let (diagnostics, report) = diagnostics::finish(&store, &root, &annots, opts.label, &opts.labeling);
    FileAnalysis { diagnostics, report: Some(report), trace: store.trace().to_vec(), node_count: store.node_count() }
}
