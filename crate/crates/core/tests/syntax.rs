mod common;

use std::collections::{BTreeSet, HashMap};

use common::random_program;
use proptest::prelude::*;
use qtype::syntax::{front_end, tokenize, AstForm, AstNode, Resolution, TokenKind};

fn is_comment_gap(gap: &str) -> bool {
    gap.lines().all(|l| {
        let t = l.trim_start();
        t.is_empty() || t.starts_with('/')
    })
}

fn annotated_program(seed: u64) -> String {
    random_program(seed)
        .lines()
        .enumerate()
        .map(|(i, l)| match (seed + i as u64) % 3 {
            0 => format!("{l} //$: int | float"),
            1 => format!("{l} // plain comment"),
            _ => l.to_string(),
        })
        .collect::<Vec<_>>()
        .join("\n")
}

fn var_keys(root: &AstNode) -> Vec<(String, Resolution)> {
    root.preorder()
        .into_iter()
        .filter_map(|n| match &n.form {
            AstForm::Var { name, res } => Some((name.clone(), res.clone())),
            _ => None,
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn tokens_reconstruct_the_source(seed in any::<u64>()) {
        let src = annotated_program(seed);
        let tokens = tokenize(&src, "t.q").expect("generated programs lex");
        let mut pos = 0;
        for t in &tokens {
            prop_assert!(t.range.start >= pos, "tokens overlap or go backwards");
            prop_assert!(is_comment_gap(&src[pos..t.range.start]), "gap {:?}", &src[pos..t.range.start]);
            prop_assert_eq!(&src[t.range.clone()], t.text.as_str());
            prop_assert!((t.span.start_line, t.span.start_col) <= (t.span.end_line, t.span.end_col));
            pos = t.range.end;
        }
        prop_assert!(is_comment_gap(&src[pos..]));
    }

    #[test]
    fn node_ids_are_dense_and_unique(seed in any::<u64>()) {
        let src = random_program(seed);
        let (root, _) = front_end(&src, "t.q").expect("generated programs parse");
        let ids: Vec<u32> = root.preorder().iter().map(|n| n.id.0).collect();
        let expected: Vec<u32> = (0..ids.len() as u32).collect();
        prop_assert_eq!(ids, expected);
    }

    #[test]
    fn parsing_is_deterministic(seed in any::<u64>()) {
        let src = annotated_program(seed);
        let a = front_end(&src, "t.q").expect("parses");
        let b = front_end(&src, "t.q").expect("parses");
        prop_assert_eq!(a, b);
    }

    #[test]
    fn tree_has_one_parent_per_node(seed in any::<u64>()) {
        let src = random_program(seed);
        let (root, _) = front_end(&src, "t.q").expect("parses");
        let mut seen = BTreeSet::new();
        for n in root.preorder() {
            for c in n.children() {
                prop_assert!(seen.insert(c.id), "node {} has two parents", c.id.0);
            }
        }
        prop_assert!(!seen.contains(&root.id));
        for (name, res) in var_keys(&root) {
            prop_assert!(res != Resolution::Pending, "{} left unresolved", name);
        }
    }

    #[test]
    fn annotations_attach_to_the_preceding_expression(seed in any::<u64>()) {
        let src = annotated_program(seed);
        let tokens = tokenize(&src, "t.q").expect("lexes");
        let (root, annots) = front_end(&src, "t.q").expect("parses");
        for a in &annots {
            let at = tokens.iter().position(|t| t.span == a.span).expect("annotation token");
            let before = tokens[..at].iter().rev().find(|t| t.kind != TokenKind::Separator);
            let target = a.target.and_then(|id| root.find(id));
            match (before, target) {
                (Some(tok), Some(node)) => {
                    prop_assert_eq!((node.span.end_line, node.span.end_col), (tok.span.end_line, tok.span.end_col));
                }
                (None, None) => {}
                (tok, node) => prop_assert!(false, "token {:?} vs target {:?}", tok.map(|t| &t.text), node.map(|n| n.id)),
            }
        }
    }
}

#[test]
fn implicit_parameter_is_bound() {
    let (root, _) = front_end("{x+1}", "t.q").unwrap();
    let lambda = root.preorder().into_iter().find(|n| matches!(n.form, AstForm::Lambda { .. })).unwrap();
    let AstForm::Lambda { params, .. } = &lambda.form else { unreachable!() };
    assert_eq!(params.iter().map(|p| p.name.as_str()).collect::<Vec<_>>(), ["x"]);
    let x = var_keys(&root).into_iter().find(|(n, _)| n == "x").unwrap();
    assert!(matches!(x.1, Resolution::Local(_)));
}

#[test]
fn both_occurrences_share_a_key() {
    let (root, _) = front_end("c:c+1", "t.q").unwrap();
    let keys: HashMap<u32, Option<String>> = root
        .preorder()
        .into_iter()
        .filter_map(|n| match &n.form {
            AstForm::Var { res, .. } => Some((n.id.0, res.key().map(str::to_string))),
            _ => None,
        })
        .collect();
    assert_eq!(keys[&2], Some("c#0".to_string()));
    assert_eq!(keys[&6], keys[&2]);
}

#[test]
fn explicit_parameters_keep_their_binding() {
    let (root, _) = front_end("{[a] a}", "t.q").unwrap();
    let vars = var_keys(&root);
    assert_eq!(vars.len(), 1);
    assert!(matches!(&vars[0].1, Resolution::Local(k) if k.starts_with("a#")));
}

#[test]
fn z_without_y_is_a_scope_error() {
    let errs = front_end("{x+z}", "t.q").unwrap_err();
    assert_eq!(errs[0].kind(), "scope-error");
}

#[test]
fn columns_count_characters_not_bytes() {
    let tokens = tokenize("s: \"é\"; t: 1", "t.q").unwrap();
    let one = tokens.iter().find(|t| t.text == "1").unwrap();
    assert_eq!(one.span.start_col, 12);
    assert!(one.range.start > 11);
}
