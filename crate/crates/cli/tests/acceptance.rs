//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails.

mod support;

use std::collections::BTreeSet;
use std::fs;
use std::panic::{self, AssertUnwindSafe};
use std::process::Command;
use std::time::{Duration, Instant};

use nabla::formula::Formula;
use nabla::kernel::{self, Ctx, Sequent};
use nabla::parse::{parse_formula, parse_script, Pos};
use nabla::session::{Options, Session};
use nabla::speclogic::{self, replay_in_kernel, seq_atom, spec_search};
use nabla::tactics;
use nabla::terms;
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};

use support::unify_oracle::{self, Tally};
use support::{bin, corpus, rename_nominals, stlc_session};

type Outcome = Result<String, String>;

const DEVELOPMENT: &[&str] = &[
    "step_det",
    "of_step",
    "halts_step_bwd",
    "halts_step_fwd",
    "reduce_step_fwd",
    "reduce_step_bwd",
    "reduce_steps_fwd",
    "reduce_steps_bwd",
    "isty_closed",
    "isty_ctx",
    "of_nominal",
    "member_nominal",
    "of_isty",
    "closed_subst",
    "subst_app",
    "subst_abs",
    "subst_of",
    "reduce_subst",
    "wn",
];

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn batch(file: &str, extra: &[&str]) -> Result<(String, Duration), String> {
    let start = Instant::now();
    let out = Command::new(bin())
        .arg("--batch")
        .args(extra)
        .arg(corpus().join(file))
        .output()
        .map_err(|e| e.to_string())?;
    let took = start.elapsed();
    let stdout = String::from_utf8_lossy(&out.stdout).to_string();
    if !out.status.success() {
        return Err(format!(
            "{file}: exit {:?}: {}",
            out.status.code(),
            String::from_utf8_lossy(&out.stderr)
        ));
    }
    Ok((stdout, took))
}

fn load(file: &str) -> Result<Session, String> {
    let mut s = Session::new(Options::default());
    s.load(&corpus().join(file)).map_err(|e| e.to_string())?;
    Ok(s)
}

fn corpus_replay() -> Outcome {
    let (out, took) = batch("wn.thm", &[])?;
    ensure(took < Duration::from_secs(60), format!("took {took:?}"))?;
    let s = load("wn.thm")?;
    for name in DEVELOPMENT {
        ensure(s.lemmas.contains(name), format!("missing theorem {name}"))?;
    }
    let first = out.lines().next().unwrap_or("").to_string();
    Ok(format!("{first} in {:.2}s", took.as_secs_f64()))
}

fn regression() -> Outcome {
    batch("regress.thm", &[])?;
    let s = load("regress.thm")?;
    for name in [
        "type_uniq",
        "type_subst",
        "of_weaken",
        "of_permute",
        "of_contract",
    ] {
        ensure(s.lemmas.contains(name), format!("missing theorem {name}"))?;
    }
    let rule_in = |rule: &str, thm: &str| {
        s.trust
            .uses
            .iter()
            .any(|u| u.rule == rule && u.theorem == thm)
    };
    ensure(
        rule_in("inst", "type_subst") && rule_in("cut", "type_subst"),
        "type_subst must use inst and cut",
    )?;
    for thm in ["of_weaken", "of_permute", "of_contract"] {
        ensure(rule_in("monotone", thm), format!("{thm} must use monotone"))?;
    }
    Ok("type uniqueness, type substitution, weakening/permutation/contraction".into())
}

fn spec_animation() -> Outcome {
    let s = stlc_session();
    let env = s.env();
    let queries = [
        ("of (abs i x\\ x) (arr i i)", true),
        (
            "steps (app (abs i x\\ x) (abs i x\\ x)) (abs i x\\ x)",
            true,
        ),
        ("of (abs i x\\ x) i", false),
    ];
    for (q, derivable) in queries {
        let g = s.spec_goal(q).map_err(|e| e.to_string())?;
        let l = speclogic::nil();
        let found = spec_search(&s.sig, &s.spec, &l, &g, 10);
        ensure(found.is_some() == derivable, format!("animator on {q}"))?;
        if let Some(f) = &found {
            replay_in_kernel(env.ctx(), &l, &g, f).map_err(|e| format!("replay of {q}: {e}"))?;
        }
        let kernel = tactics::search(&env, &Sequent::new(seq_atom(l.clone(), g.clone())), 10);
        ensure(
            kernel.is_some_and(|rest| rest.is_empty()) == derivable,
            format!("kernel unfolding disagrees on {q}"),
        )?;
    }
    Ok("2 derivations replayed in the kernel, 1 refutation, oracle agrees".into())
}

fn unifier_oracle() -> Outcome {
    let mut rng = StdRng::seed_from_u64(0x5eed);
    let mut tally = Tally::default();
    while tally.problems < 1000 {
        let p = unify_oracle::gen_problem(&mut rng);
        unify_oracle::check(&p, &mut tally)?;
    }
    ensure(
        tally.unsolvable > 0 && tally.solvable > 0,
        format!("degenerate sample {tally:?}"),
    )?;
    Ok(format!(
        "{} problems ({} with a unifier, {} without), {} ground solutions checked",
        tally.problems, tally.solvable, tally.unsolvable, tally.ground_solutions
    ))
}

/// Replays a script with fresh nominal constants drawn in `order`; returns
/// the theorems whose proof states mention nominal constants.
fn replay_permuted(file: &str, order: &[u32]) -> Result<BTreeSet<String>, String> {
    let src = fs::read_to_string(corpus().join(file)).map_err(|e| e.to_string())?;
    let map = |k: u32| order.get(k as usize - 1).copied().unwrap_or(k);
    let text = rename_nominals(&src, &map);
    terms::with_nominal_order(order, || {
        let mut s = Session::new(Options::default());
        s.set_base(&corpus());
        let stmts = parse_script(&text).map_err(|e| e.to_string())?;
        let mut touched = BTreeSet::new();
        for st in &stmts {
            s.exec(st)
                .map_err(|e| format!("{file} under {order:?}: {e}"))?;
            if let Some(p) = &s.proof {
                if p.goals.iter().any(|g| !g.support().is_empty()) {
                    touched.insert(p.name.clone());
                }
            }
        }
        ensure(s.proof.is_none(), format!("{file}: proof left open"))?;
        Ok(touched)
    })
}

fn equivariance() -> Outcome {
    let mut rng = StdRng::seed_from_u64(7);
    let mut touched = BTreeSet::new();
    let mut runs = 0;
    for _ in 0..3 {
        let mut order: Vec<u32> = (1..=6).collect();
        while order.iter().enumerate().all(|(i, &k)| k as usize == i + 1) {
            order.shuffle(&mut rng);
        }
        for file in ["wn.thm", "regress.thm"] {
            touched.extend(replay_permuted(file, &order)?);
            runs += 1;
        }
    }
    ensure(!touched.is_empty(), "no theorem mentions nominal constants")?;
    Ok(format!(
        "{} theorems with nominal constants, {runs} permuted replays",
        touched.len()
    ))
}

// ---------------------------------------------------------------------------
// ∇ structural checks

fn gen_tm(rng: &mut StdRng, d: usize, names: &[String]) -> String {
    if d == 0 || rng.gen_bool(0.5) {
        return names[rng.gen_range(0..names.len())].clone();
    }
    format!(
        "(app {} {})",
        gen_tm(rng, d - 1, names),
        gen_tm(rng, d - 1, names)
    )
}

fn gen_formula(rng: &mut StdRng, d: usize, names: &mut Vec<String>) -> String {
    if d == 0 || rng.gen_bool(0.3) {
        return match rng.gen_range(0..3) {
            0 => format!(
                "{{step {} {}}}",
                gen_tm(rng, 2, names),
                gen_tm(rng, 2, names)
            ),
            1 => format!("{{value {}}}", gen_tm(rng, 2, names)),
            _ => format!("{} = {}", gen_tm(rng, 2, names), gen_tm(rng, 2, names)),
        };
    }
    match rng.gen_range(0..5) {
        k @ 0..=2 => {
            let op = ["/\\", "\\/", "->"][k];
            let a = gen_formula(rng, d - 1, names);
            let b = gen_formula(rng, d - 1, names);
            format!("({a}) {op} ({b})")
        }
        k => {
            let q = if k == 3 { "forall" } else { "exists" };
            let v = format!("C{}", names.len());
            names.push(v.clone());
            let body = gen_formula(rng, d - 1, names);
            names.pop();
            format!("{q} ({v}:tm), {body}")
        }
    }
}

/// Proves `∀Σ. H ⊃ G` by opening ∇ on both sides and closing with the
/// identity rule up to a permutation of nominal constants.
fn nabla_proof(ctx: Ctx, f: Formula) -> Result<(), String> {
    let e = |e: kernel::KernelError| e.to_string();
    let one = |v: Vec<Sequent>| {
        v.into_iter()
            .next()
            .ok_or("rule closed the goal early".to_string())
    };
    let mut s = Sequent::new(f);
    while matches!(s.goal, Formula::Forall(..)) {
        s = one(kernel::forall_r(ctx, &s).map_err(e)?)?;
    }
    s = one(kernel::imp_r(&s).map_err(e)?)?;
    let last = |s: &Sequent| s.hyps.last().map(|h| h.name.clone()).unwrap_or_default();
    while matches!(
        s.hyp(&last(&s)).map(|h| &h.formula),
        Some(Formula::Nabla(..))
    ) {
        s = one(kernel::nabla_l(&s, &last(&s)).map_err(e)?)?;
    }
    while matches!(s.goal, Formula::Nabla(..)) {
        s = one(kernel::nabla_r(&s).map_err(e)?)?;
    }
    let rest = kernel::id(&s, &last(&s)).map_err(e)?;
    ensure(rest.is_empty(), "identity left premises")
}

fn nabla_checks() -> Outcome {
    let sess = stlc_session();
    let ctx = sess.env().ctx();
    let elab = |src: &str| -> Result<Formula, String> {
        let pf = parse_formula(src).map_err(|e| format!("{src}: {e}"))?;
        tactics::elab_statement(&sess.sig, &sess.defs, &pf, Pos::default())
            .map_err(|e| format!("{src}: {e}"))
    };
    let mut rng = StdRng::seed_from_u64(2024);
    let outer = "forall (A:tm) (B:tm),";
    for _ in 0..20 {
        let mut names = vec!["A".to_string(), "B".to_string()];
        let f = gen_formula(&mut rng, 3, &mut names);
        for src in [
            format!("{outer} (nabla (x:tm), {f}) -> {f}"),
            format!("{outer} ({f}) -> nabla (x:tm), {f}"),
        ] {
            nabla_proof(ctx, elab(&src)?).map_err(|m| format!("{src}: {m}"))?;
        }
        let mut names = vec!["A".into(), "B".into(), "x".into(), "y".into()];
        let g = gen_formula(&mut rng, 3, &mut names);
        for src in [
            format!("{outer} (nabla (x:tm), nabla (y:tm), {g}) -> nabla (y:tm), nabla (x:tm), {g}"),
            format!("{outer} (nabla (y:tm), nabla (x:tm), {g}) -> nabla (x:tm), nabla (y:tm), {g}"),
        ] {
            nabla_proof(ctx, elab(&src)?).map_err(|m| format!("{src}: {m}"))?;
        }
    }
    // Distinct ∇-bound names must stay distinct.
    let bad = elab("(nabla (x:tm), nabla (y:tm), {step x y}) -> nabla (x:tm), {step x x}")?;
    ensure(
        nabla_proof(ctx, bad).is_err(),
        "∇x∇y.F(x,y) ⊃ ∇x.F(x,x) was derived",
    )?;
    Ok("20 formulas: vacuous ∇ both ways, ∇ exchange both ways".into())
}

fn stratification() -> Outcome {
    let mut s = stlc_session();
    let halts = "Define halts : tm -> prop by halts M := exists V, {steps M V} /\\ {value V}.";
    s.exec_text(halts).map_err(|e| e.to_string())?;
    let body = "reduce : tm -> ty -> prop by
        reduce M i := {of M i} /\\ halts M;
        reduce M (arr A B) := {of M (arr A B)} /\\ halts M /\\
          (forall N, reduce N A -> reduce (app M N) B).";
    ensure(
        s.exec_text(&format!("Define {body}")).is_err(),
        "reduce accepted without override",
    )?;
    s.exec_text(&format!("Define override {body}"))
        .map_err(|e| e.to_string())?;
    ensure(s.trust.overrides == ["reduce"], "override not recorded")?;
    let (out, _) = batch("wn.thm", &["--trust-json"])?;
    let line = out.lines().last().unwrap_or("");
    let v: serde_json::Value = serde_json::from_str(line).map_err(|e| e.to_string())?;
    let n = v["overrides"].as_array().map_or(0, |a| a.len());
    ensure(n == 1, format!("trust report lists {n} overrides"))?;
    Ok("reduce rejected without override; one override in the development".into())
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: &[Criterion] = &[
        ("corpus replay", corpus_replay),
        ("specification-logic regression", regression),
        ("specification animation", spec_animation),
        ("unifier oracle", unifier_oracle),
        ("equivariance", equivariance),
        ("nabla structural checks", nabla_checks),
        ("stratification", stratification),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let r = panic::catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            Err(msg)
        });
        match r {
            Ok(m) => println!("PASS  {name}: {m}"),
            Err(m) => {
                failed += 1;
                println!("FAIL  {name}: {m}");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
