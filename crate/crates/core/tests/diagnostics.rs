mod common;

use std::collections::BTreeMap;

use common::*;
use proptest::prelude::*;
use qtype::diagnostics::{
    localize_errors, render, sort_diagnostics, tally, Diagnostic, DiagnosticKind, Format, Severity,
};
use qtype::syntax::AnnotationKind;
use qtype::typelang::SignatureTable;
use qtype::{analyze_source, AnalysisOptions};
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use regex::Regex;

const DECLS: [&str; 5] = ["int", "int | float", "symbol", "list(int)", "long | boolean"];

fn declared_program(seed: u64) -> String {
    random_program(seed)
        .lines()
        .enumerate()
        .map(|(i, l)| {
            let name = l.split(':').next().unwrap();
            format!("{l}\n{name} //$: {}", DECLS[(seed as usize + i) % DECLS.len()])
        })
        .collect::<Vec<_>>()
        .join("\n")
}

fn corpus() -> Vec<String> {
    let mut out: Vec<String> = std::fs::read_dir(fixture_dir())
        .unwrap()
        .filter_map(|e| e.ok())
        .filter(|e| e.file_name().to_string_lossy().ends_with(".q"))
        .map(|e| std::fs::read_to_string(e.path()).unwrap())
        .collect();
    out.sort();
    out.extend((0..40).map(declared_program));
    out
}

#[test]
fn fixtures_report_the_expected_kinds() {
    let kinds = |f: &str| -> Vec<(Severity, DiagnosticKind)> {
        analyze(&fixture(f)).diagnostics.iter().map(|d| (d.severity, d.kind)).collect()
    };
    assert_eq!(kinds("ok.q"), []);
    assert_eq!(kinds("bad.q"), [(Severity::Error, DiagnosticKind::InferredConflict)]);
    assert_eq!(kinds("overlap.q"), [(Severity::Warning, DiagnosticKind::DeclarationOverlap)]);
    assert_eq!(kinds("disjoint.q"), [(Severity::Error, DiagnosticKind::DeclarationDisjoint)]);
    assert_eq!(kinds("parse_error.q"), [(Severity::Error, DiagnosticKind::ParseError)]);
}

#[test]
fn reported_nodes_are_the_narrowest_empty_ones() {
    for seed in 0..200 {
        let src = random_program(seed);
        let (root, store) = propagated(&src);
        for d in localize_errors(&store, &root) {
            let node = root.find(qtype::syntax::NodeId(d.node_id.unwrap())).unwrap();
            assert!(store.is_empty_key(node.id.var()), "{src:?}: reported id({}) is not empty", node.id.0);
            for below in node.preorder().into_iter().skip(1) {
                let typed = !matches!(below.form, qtype::syntax::AstForm::ArgList(_));
                assert!(
                    !(typed && store.is_empty_key(below.id.var())),
                    "{src:?}: id({}) reported above empty id({})",
                    node.id.0,
                    below.id.0
                );
            }
        }
    }
}

#[test]
fn conflicts_come_with_a_justification() {
    let mut seen = 0;
    for src in corpus() {
        for d in analyze(&src).diagnostics {
            if matches!(d.kind, DiagnosticKind::InferredConflict | DiagnosticKind::LabelingInconsistent) {
                seen += 1;
                assert!(!d.justification.is_empty(), "{src:?}: {d:?}");
            }
        }
    }
    assert!(seen > 0);
}

#[test]
fn each_question_gets_at_most_one_verdict() {
    for src in corpus() {
        let Ok((_, annots)) = qtype::syntax::front_end(&src, "t.q") else { continue };
        let a = analyze(&src);
        for ann in annots.iter().filter(|a| a.kind == AnnotationKind::Interrogative) {
            let verdicts: Vec<&Diagnostic> = a
                .diagnostics
                .iter()
                .filter(|d| {
                    matches!(d.kind, DiagnosticKind::DeclarationOverlap | DiagnosticKind::DeclarationDisjoint)
                        && (d.line, d.col) == (ann.span.start_line, ann.span.start_col)
                })
                .collect();
            assert!(verdicts.len() <= 1, "{src:?}: {verdicts:?}");
            for v in verdicts {
                let expected = match v.kind {
                    DiagnosticKind::DeclarationOverlap => Severity::Warning,
                    _ => Severity::Error,
                };
                assert_eq!(v.severity, expected);
            }
        }
    }
}

#[test]
fn machine_output_round_trips() {
    for src in corpus() {
        let a = analyze(&src);
        let text = render(&a.diagnostics, None, Format::Machine);
        let back: Vec<Diagnostic> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
        assert_eq!(back, a.diagnostics);
    }
}

#[test]
fn machine_keys_come_in_a_fixed_order() {
    let a = analyze(&fixture("bad.q"));
    let line = render(&a.diagnostics, None, Format::Machine);
    let keys: Vec<String> =
        Regex::new(r#""([a-z_]+)":"#).unwrap().captures_iter(&line).map(|c| c[1].to_string()).collect();
    assert_eq!(
        keys,
        ["file", "line", "col", "end_line", "end_col", "severity", "kind", "node_id", "message", "justification"]
    );
    assert!(line.contains(r#""kind":"inferred-conflict""#));
}

#[test]
fn text_lines_follow_the_location_prefix() {
    let shape = Regex::new(r"^[^:]+:\d+:\d+: (error|warning|info): [a-z-]+: .+$").unwrap();
    for src in corpus() {
        let a = analyze(&src);
        for line in render(&a.diagnostics, None, Format::Text).lines() {
            assert!(shape.is_match(line), "{line:?}");
        }
    }
}

#[test]
fn type_listing_follows_diagnostics() {
    let a = analyze(&fixture("ok.q"));
    let out = render(&a.diagnostics, a.report.as_ref(), Format::Text);
    assert!(out.lines().all(|l| l.contains(": type: id(")), "{out}");
    assert!(out.contains("int"));
}

#[test]
fn exhausted_budget_is_an_info_note() {
    let opts = AnalysisOptions { step_budget: 5, ..AnalysisOptions::default() };
    let a = analyze_source(&fixture("extension.q"), "t.q", &SignatureTable::builtin(), &registry(), &opts);
    assert!(a.diagnostics.iter().any(|d| d.severity == Severity::Info && d.kind == DiagnosticKind::Internal));
}

#[test]
fn tally_counts_by_severity() {
    let a = analyze(&format!("{}\n{}", fixture("bad.q"), fixture("overlap.q")));
    let t = tally(&a.diagnostics);
    assert_eq!(t, BTreeMap::from([(Severity::Error, 1), (Severity::Warning, 1)]));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sorting_ignores_input_order(seed in any::<u64>(), shuffle in any::<u64>()) {
        let a = analyze(&declared_program(seed));
        let mut shuffled = a.diagnostics.clone();
        shuffled.shuffle(&mut StdRng::seed_from_u64(shuffle));
        sort_diagnostics(&mut shuffled);
        prop_assert_eq!(&shuffled, &a.diagnostics);
        prop_assert_eq!(analyze(&declared_program(seed)).diagnostics, a.diagnostics);
    }
}
