mod common;

use nabla::session::{Options, Session};

fn run(s: &mut Session, steps: &[&str]) {
    for t in steps {
        if let Err(e) = s.exec_text(t) {
            panic!("`{t}` failed: {e}");
        }
    }
}

#[test]
fn corpus_files_check() {
    for (file, lemmas) in [("wn.thm", 26), ("regress.thm", 9)] {
        let mut s = Session::new(Options::default());
        s.load(&common::corpus().join(file))
            .unwrap_or_else(|e| panic!("{file}: {e}"));
        assert!(s.proof.is_none());
        assert_eq!(s.snapshot().lemmas.len(), lemmas, "{file}");
    }
}

#[test]
fn trust_report_lists_the_override() {
    let mut s = Session::new(Options::default());
    s.load(&common::corpus().join("wn.thm")).unwrap();
    assert_eq!(s.trust.overrides, vec!["reduce".to_string()]);
    let rules: Vec<_> = s.trust.uses.iter().map(|u| u.rule.as_str()).collect();
    assert!(
        rules.contains(&"inst") && rules.contains(&"cut"),
        "{rules:?}"
    );
    assert!(s.trust.uses.iter().any(|u| u.theorem == "subst_of"));
}

#[test]
fn unused_nominal_is_dropped_after_case() {
    let mut s = common::stlc();
    run(
        &mut s,
        &[
            "Define ctx2 : olist -> prop by ctx2 nil; nabla x, ctx2 (of x i :: L) := ctx2 L.",
            "Theorem t : forall L M, ctx2 L -> {value M} -> {value M}.",
            "intros. case H1.",
        ],
    );
    let snap = s.snapshot();
    assert_eq!(snap.subgoals.len(), 2);
    for g in &snap.subgoals {
        assert!(
            !g.goal.contains("n1"),
            "goal still mentions the nominal: {}",
            g.goal
        );
    }
    run(&mut s, &["search.", "search."]);
    assert!(s.proof.is_none());
}

#[test]
fn nominal_kept_when_it_occurs_outside_arguments() {
    let mut s = common::stlc();
    run(
        &mut s,
        &[
            "Define ctx2 : olist -> prop by ctx2 nil; nabla x, ctx2 (of x i :: L) := ctx2 L.",
            "Theorem t : forall L, ctx2 L -> ctx2 L.",
            "intros. case H1.",
        ],
    );
    let snap = s.snapshot();
    assert!(snap.subgoals.iter().any(|g| g.goal.contains("n1")));
}

#[test]
fn hypothesis_closes_goal_up_to_renaming() {
    let mut s = common::stlc();
    run(
        &mut s,
        &[
            "Theorem t : (nabla (x:tm), {of x i} -> {of x i}) -> nabla (y:tm), {of y i} -> {of y i}.",
            "intros. search.",
        ],
    );
    assert!(s.proof.is_none());
}

#[test]
fn nabla_does_not_commute_with_equality() {
    let mut s = common::stlc();
    run(
        &mut s,
        &[
            "Theorem t : nabla (x:tm) (y:tm), x = y -> false.",
            "intros. case H1.",
        ],
    );
    assert!(s.proof.is_none());
    let mut s = common::stlc();
    run(&mut s, &["Theorem t : nabla (x:tm), x = x.", "intros."]);
    assert!(s.exec_text("search.").is_ok());
}

#[test]
fn non_stratified_definition_needs_override() {
    let mut s = common::stlc();
    let bad = "Define bad : prop by bad := bad -> false.";
    assert!(s.exec_text(bad).is_err());
    assert!(s.trust.overrides.is_empty());
    run(
        &mut s,
        &["Define override bad : prop by bad := bad -> false."],
    );
    assert_eq!(s.trust.overrides, vec!["bad".to_string()]);
}

#[test]
fn dropping_a_clause_keeps_acceptance() {
    let clauses = [
        "ev M := {value M}",
        "ev (app M N) := od M",
        "od (app M N) := ev M",
        "od (abs A M) := ev (M (abs A M)) /\\ {value (abs A M)}",
    ];
    let head = "Define ev : tm -> prop, od : tm -> prop by ";
    for skip in 0..=clauses.len() {
        let kept: Vec<_> = (0..clauses.len())
            .filter(|&i| i != skip)
            .map(|i| clauses[i])
            .collect();
        let mut s = common::stlc();
        run(&mut s, &[&format!("{head}{}.", kept.join("; "))]);
    }
    let negative = format!("{head}{}; od M := ev M -> false.", clauses.join("; "));
    assert!(common::stlc().exec_text(&negative).is_err());
}

#[test]
fn search_animates_the_specification() {
    let mut s = common::stlc();
    run(
        &mut s,
        &[
            "Theorem t : {steps (app (abs i x\\ x) (abs i x\\ x)) (abs i x\\ x)}.",
            "search.",
            "Theorem u : exists A, {of (abs i x\\ x) A}.",
            "search.",
        ],
    );
    assert!(s.proof.is_none());
    run(
        &mut s,
        &["Theorem v : {of (app (abs i x\\ x) (abs i x\\ x)) i}."],
    );
    assert!(s.exec_text("search.").is_err());
}
