//! Proof states and the tactics that drive them.
//!
//! Every tactic ends in kernel rule applications. The bounded `search`
//! works on sequents with flexible witness variables and then replays the
//! derivation it found through the kernel; a derivation the kernel rejects
//! is discarded and the search moves on.

use std::cell::Cell;
use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;
use thiserror::Error;

use crate::definitions::DefStore;
use crate::elab::{self, ElabError};
use crate::formula::{Ann, Atom, Binder, Formula, SEQ};
use crate::kernel::{self, ann_covers, Ctx, KernelError, Sequent};
use crate::parse::{ApplyArg, Pos, Tactic, PF, PT};
use crate::print::formula_to_string;
use crate::sig::{self, Signature};
use crate::speclogic::{self, seq_clause, ProgClause, MEMBER, PROG};
use crate::terms::{
    self, fresh_name, fresh_nominal, Head, Node, Nominal, Permutation, Term, Ty, Var,
};
use crate::unify::{FlexInfo, UnifState, UnifyError};

pub const DEFAULT_SEARCH_DEPTH: usize = 5;

/// Upper bound on search steps for one `search` call.
const SEARCH_BUDGET: usize = 200_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TacticError {
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Elab(#[from] ElabError),
    #[error("{0}")]
    Msg(String),
}

fn msg<T>(m: impl Into<String>) -> Result<T, TacticError> {
    Err(TacticError::Msg(m.into()))
}

type TResult<T> = Result<T, TacticError>;

/// Proved theorems, in the order they were proved.
#[derive(Clone, Debug, Default)]
pub struct LemmaStore {
    order: Vec<String>,
    map: BTreeMap<String, Formula>,
}

impl LemmaStore {
    pub fn new() -> LemmaStore {
        LemmaStore::default()
    }

    pub fn get(&self, name: &str) -> Option<&Formula> {
        self.map.get(name)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.map.contains_key(name)
    }

    pub fn insert(&mut self, name: &str, f: Formula) -> TResult<()> {
        if self.map.contains_key(name) {
            return msg(format!("a theorem named {name} already exists"));
        }
        self.order.push(name.to_string());
        self.map.insert(name.to_string(), f);
        Ok(())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Formula)> {
        self.order.iter().map(|n| (n.as_str(), &self.map[n]))
    }
}

/// Everything a tactic may consult.
#[derive(Clone, Copy)]
pub struct Env<'a> {
    pub sig: &'a Signature,
    pub defs: &'a DefStore,
    pub spec: &'a [ProgClause],
    pub lemmas: &'a LemmaStore,
    pub search_depth: usize,
    pub verify_meta: bool,
}

impl<'a> Env<'a> {
    pub fn ctx(&self) -> Ctx<'a> {
        Ctx {
            sig: self.sig,
            defs: self.defs,
        }
    }
}

/// One use of a trusted specification-logic property.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TrustUse {
    pub rule: String,
    pub theorem: String,
    pub instance: String,
    /// Outcome of the independent re-derivation, when requested and the
    /// instance is closed.
    pub verified: Option<bool>,
}

#[derive(Clone, Debug)]
struct Saved {
    goals: Vec<Sequent>,
    trust: usize,
    script: usize,
}

#[derive(Clone, Debug)]
pub struct ProofState {
    pub name: String,
    pub statement: Formula,
    /// Open subgoals; the first one has the focus.
    pub goals: Vec<Sequent>,
    pub trust: Vec<TrustUse>,
    /// Text of the tactics applied so far (undone ones removed).
    pub script: Vec<String>,
    history: Vec<Saved>,
}

impl ProofState {
    pub fn new(name: &str, statement: Formula) -> ProofState {
        ProofState {
            name: name.to_string(),
            goals: vec![Sequent::new(statement.clone())],
            statement,
            trust: Vec::new(),
            script: Vec::new(),
            history: Vec::new(),
        }
    }

    pub fn is_complete(&self) -> bool {
        self.goals.is_empty()
    }

    pub fn focused(&self) -> Option<&Sequent> {
        self.goals.first()
    }

    pub fn can_undo(&self) -> bool {
        !self.history.is_empty()
    }

    /// Applies a tactic to the focused subgoal. On error the state is
    /// unchanged. `undo` restores the state before the previous step;
    /// `abort` is the caller's business.
    pub fn step(&mut self, env: &Env, tac: &Tactic, text: &str) -> TResult<()> {
        match tac {
            Tactic::Undo => {
                let saved = self
                    .history
                    .pop()
                    .ok_or_else(|| TacticError::Msg("nothing to undo".into()))?;
                self.goals = saved.goals;
                self.trust.truncate(saved.trust);
                self.script.truncate(saved.script);
                return Ok(());
            }
            Tactic::Abort => return msg("abort is handled by the session"),
            _ => {}
        }
        let s = match self.goals.first() {
            Some(s) => s.clone(),
            None => return msg("no subgoals remain"),
        };
        let mut uses = Vec::new();
        let premises = apply_tactic(env, &s, tac, &self.name, &mut uses)?;
        self.history.push(Saved {
            goals: self.goals.clone(),
            trust: self.trust.len(),
            script: self.script.len(),
        });
        self.goals.splice(0..1, premises);
        self.trust.extend(uses);
        self.script.push(text.to_string());
        Ok(())
    }
}

fn preds_of(defs: &DefStore) -> impl Fn(&str) -> Option<Vec<Ty>> + '_ {
    move |p: &str| defs.get(p).map(|d| d.arg_tys.clone())
}

/// Elaborates a closed theorem statement.
pub fn elab_statement(sig: &Signature, defs: &DefStore, pf: &PF, pos: Pos) -> TResult<Formula> {
    let preds = preds_of(defs);
    Ok(elab::formula(sig, &preds, &[], pf, pos, false)?)
}

fn elab_term(env: &Env, s: &Sequent, pt: &PT, ty: &Ty) -> TResult<Term> {
    Ok(elab::term(env.sig, &s.vars, pt, Some(ty), true)?)
}

/// Runs one tactic on one sequent and returns the premises.
pub fn apply_tactic(
    env: &Env,
    s: &Sequent,
    tac: &Tactic,
    theorem: &str,
    uses: &mut Vec<TrustUse>,
) -> TResult<Vec<Sequent>> {
    let ctx = env.ctx();
    match tac {
        Tactic::Intros(names) => intros(env, s, names),
        Tactic::Case { hyp, keep } => case(env, s, hyp, *keep),
        Tactic::Apply { lemma, args, with } => apply(env, s, lemma, args, with),
        Tactic::Induction(k) => Ok(kernel::induction(ctx, s, *k)?),
        Tactic::Exists(pt) => match &s.goal {
            Formula::Exists(b, _) => {
                let t = elab_term(env, s, pt, &b.ty)?;
                Ok(kernel::exists_r(s, &t)?)
            }
            g => msg(format!(
                "the goal {} is not existential",
                formula_to_string(g)
            )),
        },
        Tactic::Split => Ok(kernel::and_r(s)?),
        Tactic::Left => Ok(kernel::or_r(s, true)?),
        Tactic::Right => Ok(kernel::or_r(s, false)?),
        Tactic::Unfold(clause) => {
            if *clause == Some(0) {
                return msg("clauses are numbered from 1");
            }
            Ok(kernel::def_right(ctx, s, clause.map(|c| c - 1))?)
        }
        Tactic::Assert(pf) => {
            let preds = preds_of(env.defs);
            let f = elab::formula(env.sig, &preds, &s.vars, pf, Pos::default(), true)?;
            Ok(kernel::cut(s, f))
        }
        Tactic::Search(depth) => {
            let d = depth.unwrap_or(env.search_depth);
            match search(env, s, d) {
                Some(ps) => Ok(ps),
                None => msg("search failed"),
            }
        }
        Tactic::Inst { hyp, with } => inst(env, s, hyp, with, theorem, uses),
        Tactic::Cut { h1, h2 } => cut(env, s, h1, h2, theorem, uses),
        Tactic::Monotone { hyp, with } => monotone(env, s, hyp, with, theorem, uses),
        Tactic::Clear(names) => {
            let mut p = s.clone();
            for n in names {
                if p.remove_hyp(n).is_none() {
                    return Err(KernelError::NoSuchHyp(n.clone()).into());
                }
            }
            Ok(vec![p])
        }
        Tactic::Undo | Tactic::Abort => msg("not a proof step"),
    }
}

// ---------------------------------------------------------------------------
// intros

fn intros(env: &Env, s: &Sequent, names: &[String]) -> TResult<Vec<Sequent>> {
    let mut cur = s.clone();
    let mut introduced = Vec::new();
    loop {
        let next = match &cur.goal {
            Formula::Forall(..) => kernel::forall_r(env.ctx(), &cur)?,
            Formula::Nabla(..) => kernel::nabla_r(&cur)?,
            Formula::Imp(..) => {
                let p = kernel::imp_r(&cur)?;
                introduced.push(p[0].hyps.last().expect("new hypothesis").name.clone());
                p
            }
            _ => break,
        };
        cur = next.into_iter().next().expect("one premise");
    }
    if cur == *s {
        return msg("nothing to introduce");
    }
    if names.len() > introduced.len() {
        return msg(format!(
            "{} names given but only {} hypotheses introduced",
            names.len(),
            introduced.len()
        ));
    }
    for (old, new) in introduced.iter().zip(names) {
        if old != new && cur.hyp(new).is_some() {
            return msg(format!("hypothesis name {new} is already in use"));
        }
        if let Some(h) = cur.hyps.iter_mut().find(|h| &h.name == old) {
            h.name = new.clone();
        }
    }
    Ok(vec![cur])
}

// ---------------------------------------------------------------------------
// case

fn case(env: &Env, s: &Sequent, h: &str, keep: bool) -> TResult<Vec<Sequent>> {
    let ctx = env.ctx();
    let f = s
        .hyp(h)
        .ok_or_else(|| KernelError::NoSuchHyp(h.to_string()))?
        .formula
        .clone();
    let mut base = s.clone();
    if !keep {
        base.remove_hyp(h);
    }
    match &f {
        Formula::Atom(a) if &*a.pred == SEQ => {
            let before: BTreeSet<String> = s.hyps.iter().map(|h| h.name.clone()).collect();
            let mut out = Vec::new();
            for (ci, p, body) in kernel::def_left_cases_indexed(ctx, &base, a)? {
                for p in kernel::intro_hyps(ctx, &p, vec![body]) {
                    for (pi, q) in normalize_spec_hyps(ctx, p, &before, None)? {
                        // Backchaining through a rule and matching a fact
                        // are listed together, in program order.
                        let key = match ci {
                            seq_clause::MEMBER => (0, 0),
                            seq_clause::BACKCHAIN | seq_clause::FACT => (1, pi.unwrap_or(0)),
                            k => (k, 0),
                        };
                        out.push((key, renumber(q, &before, s.next_hyp)));
                    }
                }
            }
            out.sort_by_key(|(k, _)| *k);
            Ok(out.into_iter().map(|(_, q)| q).collect())
        }
        Formula::Atom(a) => unfold_left(ctx, &base, a),
        Formula::Eq(..) => Ok(kernel::eq_left(ctx, s, h)?),
        Formula::And(..)
        | Formula::Or(..)
        | Formula::Exists(..)
        | Formula::Nabla(..)
        | Formula::True
        | Formula::False => Ok(kernel::intro_hyps(ctx, &base, vec![f])),
        g => msg(format!(
            "cannot do case analysis on {}",
            formula_to_string(g)
        )),
    }
}

/// `defL` on `a` followed by decomposition of each body.
fn unfold_left(ctx: Ctx, base: &Sequent, a: &Atom) -> TResult<Vec<Sequent>> {
    let mut out = Vec::new();
    for (p, body) in kernel::def_left_cases(ctx, base, a)? {
        out.extend(kernel::intro_hyps(ctx, &p, vec![body]));
    }
    Ok(out)
}

/// Unfolds the bookkeeping atoms produced by a case on a specification
/// judgment: `prog` atoms, judgments whose goal is a conjunction,
/// implication, `pi` or `true`, and membership in `nil`.
fn normalize_spec_hyps(
    ctx: Ctx,
    s: Sequent,
    before: &BTreeSet<String>,
    first_prog: Option<usize>,
) -> TResult<Vec<(Option<usize>, Sequent)>> {
    let pick = s.hyps.iter().find(|h| {
        if before.contains(&h.name) {
            return false;
        }
        match &h.formula {
            Formula::Atom(a) if &*a.pred == PROG => true,
            Formula::Atom(a) if &*a.pred == SEQ => matches!(
                a.args[1].head_const_name(),
                Some(
                    speclogic::names::AND
                        | speclogic::names::IMP
                        | speclogic::names::PI
                        | speclogic::names::TT
                )
            ),
            Formula::Atom(a) if &*a.pred == MEMBER => a.args[1].head_const_name() == Some("nil"),
            _ => false,
        }
    });
    let Some(h) = pick else {
        return Ok(vec![(first_prog, s)]);
    };
    let (name, a) = match &h.formula {
        Formula::Atom(a) => (h.name.clone(), a.clone()),
        _ => unreachable!(),
    };
    let is_prog = &*a.pred == PROG;
    let mut base = s.clone();
    base.remove_hyp(&name);
    let mut out = Vec::new();
    for (ci, p, body) in kernel::def_left_cases_indexed(ctx, &base, &a)? {
        let tag = match first_prog {
            None if is_prog => Some(ci),
            t => t,
        };
        for q in kernel::intro_hyps(ctx, &p, vec![body]) {
            out.extend(normalize_spec_hyps(ctx, q, before, tag)?);
        }
    }
    Ok(out)
}

/// Renames the hypotheses not in `before` to consecutive `H<k>` names
/// starting at `start`.
fn renumber(mut s: Sequent, before: &BTreeSet<String>, start: u32) -> Sequent {
    let mut k = start;
    let fresh: Vec<usize> = (0..s.hyps.len())
        .filter(|&i| !before.contains(&s.hyps[i].name))
        .collect();
    let mut taken: BTreeSet<String> = s
        .hyps
        .iter()
        .filter(|h| before.contains(&h.name))
        .map(|h| h.name.clone())
        .collect();
    for i in fresh {
        let name = loop {
            let n = format!("H{k}");
            k += 1;
            if !taken.contains(&n) {
                break n;
            }
        };
        taken.insert(name.clone());
        s.hyps[i].name = name;
    }
    s.next_hyp = k;
    s
}

// ---------------------------------------------------------------------------
// apply

enum Quant {
    All(Binder),
    Nab(Binder),
}

fn apply(
    env: &Env,
    s: &Sequent,
    lemma: &str,
    args: &[ApplyArg],
    with: &[(String, PT)],
) -> TResult<Vec<Sequent>> {
    let f =
        match s.hyp(lemma) {
            Some(h) => h.formula.clone(),
            None => env.lemmas.get(lemma).cloned().ok_or_else(|| {
                TacticError::Msg(format!("unknown theorem or hypothesis {lemma}"))
            })?,
        };
    let mut prefix = Vec::new();
    let mut body = &f;
    loop {
        match body {
            Formula::Forall(b, x) => {
                prefix.push(Quant::All(b.clone()));
                body = x;
            }
            Formula::Nabla(b, x) => {
                prefix.push(Quant::Nab(b.clone()));
                body = x;
            }
            _ => break,
        }
    }
    for (n, _) in with {
        if !prefix
            .iter()
            .any(|q| matches!(q, Quant::All(b) if *b.name == **n))
        {
            return msg(format!("{lemma} has no universally quantified {n}"));
        }
    }
    let seq_sup = occurrence_order(s, args);
    let f_sup = f.support();
    let nab_tys: Vec<Ty> = prefix
        .iter()
        .filter_map(|q| match q {
            Quant::Nab(b) => Some(b.ty.clone()),
            _ => None,
        })
        .collect();
    let mut assignments = Vec::new();
    nominal_assignments(
        &nab_tys,
        &seq_sup,
        &f_sup,
        &mut Vec::new(),
        &mut assignments,
    );
    let mut last_err: Option<TacticError> = None;
    for noms in assignments {
        match apply_with(env, s, &prefix, body, &noms, lemma, args, with) {
            Ok(ps) => return Ok(ps),
            Err(e) => last_err = Some(e),
        }
    }
    Err(last_err.unwrap_or_else(|| TacticError::Msg(format!("cannot apply {lemma}"))))
}

/// Nominal constants of the sequent in order of first occurrence: the
/// argument hypotheses first, then the others, then the goal. The order is
/// invariant under renaming nominal constants.
fn occurrence_order(s: &Sequent, args: &[ApplyArg]) -> Vec<Nominal> {
    let mut out: Vec<Nominal> = Vec::new();
    let mut visit = |t: &Term| {
        for n in nominals_in_order(t) {
            if !out.contains(&n) {
                out.push(n);
            }
        }
    };
    for a in args {
        if let ApplyArg::Hyp(h) = a {
            if let Some(h) = s.hyp(h) {
                h.formula.for_each_term(&mut visit);
            }
        }
    }
    for h in &s.hyps {
        h.formula.for_each_term(&mut visit);
    }
    s.goal.for_each_term(&mut visit);
    out
}

fn nominals_in_order(t: &Term) -> Vec<Nominal> {
    fn go(t: &Term, out: &mut Vec<Nominal>) {
        match t.node() {
            Node::Atom(Head::Nominal(n)) => out.push(n.clone()),
            Node::Atom(_) => {}
            Node::App(h, args) => {
                if let Head::Nominal(n) = h {
                    out.push(n.clone());
                }
                args.iter().for_each(|a| go(a, out));
            }
            Node::Lam(_, b) => go(b, out),
        }
    }
    let mut out = Vec::new();
    go(t, &mut out);
    out
}

fn nominal_assignments(
    tys: &[Ty],
    seq_sup: &[Nominal],
    f_sup: &BTreeSet<Nominal>,
    chosen: &mut Vec<Nominal>,
    out: &mut Vec<Vec<Nominal>>,
) {
    if chosen.len() == tys.len() {
        out.push(chosen.clone());
        return;
    }
    let ty = &tys[chosen.len()];
    let mut cands: Vec<Nominal> = seq_sup
        .iter()
        .filter(|n| &n.ty == ty && !f_sup.contains(n) && !chosen.contains(n))
        .cloned()
        .collect();
    let mut avoid: BTreeSet<Nominal> = seq_sup.iter().chain(f_sup).cloned().collect();
    avoid.extend(chosen.iter().cloned());
    cands.push(fresh_nominal(ty, &avoid));
    for c in cands {
        chosen.push(c);
        nominal_assignments(tys, seq_sup, f_sup, chosen, out);
        chosen.pop();
    }
}

fn flex_name(base: &str, st: &UnifState) -> String {
    fresh_name(&format!("?{base}"), &|n| st.is_used(n))
}

#[allow(clippy::too_many_arguments)]
fn apply_with(
    env: &Env,
    s: &Sequent,
    prefix: &[Quant],
    body: &Formula,
    noms: &[Nominal],
    lemma: &str,
    args: &[ApplyArg],
    with: &[(String, PT)],
) -> TResult<Vec<Sequent>> {
    let seq_sup = s.support();
    let mut st = UnifState::new(
        s.vars
            .iter()
            .map(|v| v.name.clone())
            .chain(env.sig.consts().map(|(n, _)| n.clone())),
    );
    let mut insts: Vec<Term> = Vec::new();
    let mut nab_i = 0;
    let mut flex: Vec<(Var, String)> = Vec::new();
    for q in prefix {
        match q {
            Quant::Nab(_) => {
                insts.push(Term::nominal(noms[nab_i].clone()));
                nab_i += 1;
            }
            Quant::All(b) => {
                let mut allowed = seq_sup.clone();
                allowed.extend(noms[..nab_i].iter().cloned());
                for later in &noms[nab_i..] {
                    allowed.remove(later);
                }
                if let Some((_, pt)) = with.iter().find(|(n, _)| **n == *b.name) {
                    let t = elab_term(env, s, pt, &b.ty)?;
                    if terms::support(&t).iter().any(|c| noms[nab_i..].contains(c)) {
                        return msg(format!(
                            "the instance of {} may not mention nominals bound later",
                            b.name
                        ));
                    }
                    insts.push(t);
                } else {
                    let v = Var::new(&flex_name(&b.name, &st), b.ty.clone());
                    st.add_flex(v.clone(), FlexInfo::with_support(allowed));
                    flex.push((v.clone(), b.name.to_string()));
                    insts.push(Term::var(v));
                }
            }
        }
    }
    let inst = instantiate_prefix(body, &insts);
    let mut premises = Vec::new();
    let mut concl = inst;
    while premises.len() < args.len() {
        match concl {
            Formula::Imp(a, b) => {
                premises.push(*a);
                concl = *b;
            }
            _ => return msg(format!("{lemma} has fewer than {} premises", args.len())),
        }
    }
    for (p, a) in premises.iter().zip(args) {
        if let ApplyArg::Hyp(h) = a {
            let hf = s
                .hyp(h)
                .ok_or_else(|| KernelError::NoSuchHyp(h.clone()))?
                .formula
                .clone();
            if let (Formula::Atom(pa), hf_atom) = (p, &hf) {
                if pa.ann != Ann::None {
                    let ok = matches!(hf_atom, Formula::Atom(ha) if ann_covers(ha.ann, pa.ann));
                    if !ok {
                        return msg(format!(
                            "hypothesis {h} does not carry the annotation required by {}",
                            formula_to_string(p)
                        ));
                    }
                }
            }
            match st.unify_formulas(p, &hf) {
                Ok(()) => {}
                Err(UnifyError::NoSolution) => {
                    return msg(format!(
                        "hypothesis {h} does not match {}",
                        formula_to_string(&st.apply_formula(p))
                    ))
                }
                Err(e) => return Err(KernelError::from(e).into()),
            }
        }
    }
    // Remaining flexible variables become new eigenvariables.
    let mut p = s.clone();
    let mut open = BTreeSet::new();
    for f in premises.iter().chain(std::iter::once(&concl)) {
        open.extend(
            st.apply_formula(f)
                .free_vars()
                .into_iter()
                .filter(|v| st.is_flex(&v.name)),
        );
    }
    for v in open {
        let hint = flex
            .iter()
            .find(|(w, _)| w.name == v.name)
            .map(|(_, n)| n.clone())
            .unwrap_or_else(|| "X".to_string());
        let sup: Vec<Nominal> = st
            .flex_info(&v.name)
            .map(|i| i.support.iter().cloned().collect())
            .unwrap_or_default();
        let name = fresh_name(&eigen_hint(&hint), &|n| {
            p.name_taken(env.sig, n) || st.is_used(n)
        });
        let h = Var::new(
            &name,
            Ty::arrows(sup.iter().map(|c| c.ty.clone()), v.ty.clone()),
        );
        st.mark_used(h.name.clone());
        let t = Term::app(
            Term::var(h.clone()),
            sup.iter().map(|c| Term::nominal(c.clone())).collect(),
        );
        st.unify(&Term::var(v.clone()), &t)
            .map_err(KernelError::from)?;
        p.vars.push(h);
    }
    let mut out = Vec::new();
    for (pr, a) in premises.iter().zip(args) {
        if matches!(a, ApplyArg::Hole) {
            let mut q = p.clone();
            q.goal = st.apply_formula(pr);
            out.push(q);
        }
    }
    p.add_hyp(st.apply_formula(&concl));
    out.push(p);
    Ok(out)
}

/// Instantiates a quantifier prefix: `insts[i]` replaces the variable of
/// the `i`-th binder, outermost first.
fn instantiate_prefix(body: &Formula, insts: &[Term]) -> Formula {
    let mut f = body.clone();
    for t in insts.iter().rev() {
        f = Formula::instantiate(&f, t);
    }
    f
}

// ---------------------------------------------------------------------------
// Trusted specification-logic properties.

fn judgment<'s>(s: &'s Sequent, h: &str) -> TResult<&'s Formula> {
    let f = &s
        .hyp(h)
        .ok_or_else(|| KernelError::NoSuchHyp(h.to_string()))?
        .formula;
    match f {
        Formula::Atom(a) if &*a.pred == SEQ => Ok(f),
        _ => msg(format!("{h} is not a specification judgment")),
    }
}

fn record(env: &Env, rule: &str, theorem: &str, f: &Formula, uses: &mut Vec<TrustUse>) {
    let verified = if env.verify_meta && f.free_vars().is_empty() {
        match f {
            Formula::Atom(a) => Some(
                speclogic::spec_search(
                    env.sig,
                    env.spec,
                    &a.args[0],
                    &a.args[1],
                    env.search_depth.max(3) * 2,
                )
                .is_some(),
            ),
            _ => None,
        }
    } else {
        None
    };
    uses.push(TrustUse {
        rule: rule.to_string(),
        theorem: theorem.to_string(),
        instance: formula_to_string(f),
        verified,
    });
}

fn check_verified(uses: &[TrustUse]) -> TResult<()> {
    if let Some(u) = uses.iter().find(|u| u.verified == Some(false)) {
        return msg(format!(
            "{} instance {} could not be re-derived",
            u.rule, u.instance
        ));
    }
    Ok(())
}

fn inst(
    env: &Env,
    s: &Sequent,
    h: &str,
    with: &[(String, PT)],
    theorem: &str,
    uses: &mut Vec<TrustUse>,
) -> TResult<Vec<Sequent>> {
    let mut f = judgment(s, h)?.clone();
    for (n, pt) in with {
        let k = elab::nominal_index(n)
            .ok_or_else(|| TacticError::Msg(format!("{n} is not a nominal constant")))?;
        let cands: Vec<Nominal> = f.support().into_iter().filter(|c| c.index == k).collect();
        let c = match cands.as_slice() {
            [c] => c.clone(),
            [] => return msg(format!("{n} does not occur in {h}")),
            _ => return msg(format!("{n} is ambiguous in {h}")),
        };
        let t = elab_term(env, s, pt, &c.ty)?;
        f = speclogic::meta_inst(&f, &c, &t)?;
    }
    let mut local = Vec::new();
    record(env, "inst", theorem, &f, &mut local);
    check_verified(&local)?;
    uses.extend(local);
    let mut p = s.clone();
    if let Some(hyp) = p.hyps.iter_mut().find(|x| x.name == h) {
        hyp.formula = f;
    }
    p.collect_new_vars();
    Ok(vec![p])
}

fn cut(
    env: &Env,
    s: &Sequent,
    h1: &str,
    h2: &str,
    theorem: &str,
    uses: &mut Vec<TrustUse>,
) -> TResult<Vec<Sequent>> {
    let f1 = judgment(s, h1)?;
    let f2 = judgment(s, h2)?;
    let f = match speclogic::meta_cut(f1, f2) {
        Ok(f) => f,
        Err(e) => speclogic::meta_cut(f2, f1).map_err(|_| e)?,
    };
    let mut local = Vec::new();
    record(env, "cut", theorem, &f, &mut local);
    check_verified(&local)?;
    uses.extend(local);
    let mut p = s.clone();
    p.add_hyp(f);
    Ok(vec![p])
}

fn monotone(
    env: &Env,
    s: &Sequent,
    h: &str,
    with: &PT,
    theorem: &str,
    uses: &mut Vec<TrustUse>,
) -> TResult<Vec<Sequent>> {
    let f = judgment(s, h)?.clone();
    let l1 = match &f {
        Formula::Atom(a) => a.args[0].clone(),
        _ => unreachable!(),
    };
    let l2 = elab_term(env, s, with, &sig::olist())?;
    let g = speclogic::meta_monotone(&f, &l2)?;
    let mut local = Vec::new();
    record(env, "monotone", theorem, &g, &mut local);
    check_verified(&local)?;
    let mut main = s.clone();
    main.add_hyp(g);
    let mut ob = s.clone();
    ob.goal = speclogic::monotone_obligation(&l1, &l2);
    let mut out = Vec::new();
    if search(env, &ob, env.search_depth).is_none() {
        out.push(ob);
    }
    uses.extend(local);
    out.push(main);
    Ok(out)
}

// ---------------------------------------------------------------------------
// search

/// A derivation found by the search, replayed through the kernel.
#[derive(Clone, Debug)]
enum SP {
    True,
    Eq,
    Id(String),
    FalseL(String),
    And(Box<SP>, Box<SP>),
    Or(bool, Box<SP>),
    Exists(Var, Box<SP>),
    Forall(String, Vec<Nominal>, Box<SP>),
    Nabla(Nominal, Box<SP>),
    Imp(Box<SP>),
    Def {
        clause: usize,
        args: Vec<Term>,
        cs: Vec<Nominal>,
        perm: Permutation,
        sub: Box<SP>,
    },
}

struct Searcher<'a> {
    env: &'a Env<'a>,
    root: &'a Sequent,
    counter: Cell<usize>,
    budget: Cell<usize>,
}

type K<'k> = &'k mut dyn FnMut(UnifState, SP) -> Option<()>;

/// Bounded proof search: right rules, unfolding of goal atoms, matching
/// hypotheses and reflexivity. Returns the remaining premises (always
/// none) if a kernel-checked derivation is found.
pub fn search(env: &Env, s: &Sequent, depth: usize) -> Option<Vec<Sequent>> {
    let me = Searcher {
        env,
        root: s,
        counter: Cell::new(0),
        budget: Cell::new(SEARCH_BUDGET),
    };
    let mut st = UnifState::new(
        s.vars
            .iter()
            .map(|v| v.name.clone())
            .chain(env.sig.consts().map(|(n, _)| n.clone())),
    );
    for v in s.free_vars() {
        st.mark_used(v.name.clone());
    }
    let mut found = false;
    me.solve(s, depth, st, &mut |st, sp| {
        if me.check(&st, &sp) {
            found = true;
            Some(())
        } else {
            None
        }
    });
    found.then(Vec::new)
}

fn with_goal(s: &Sequent, g: Formula) -> Sequent {
    let mut p = s.clone();
    p.goal = g;
    p
}

impl Searcher<'_> {
    fn tick(&self) -> bool {
        let b = self.budget.get();
        if b == 0 {
            return false;
        }
        self.budget.set(b - 1);
        true
    }

    fn flex_support(&self, st: &UnifState, f: &Formula) -> BTreeSet<Nominal> {
        let mut out = BTreeSet::new();
        for v in st.apply_formula(f).free_vars() {
            if st.is_flex(&v.name) {
                if let Some(info) = st.flex_info(&v.name) {
                    out.extend(info.support.iter().cloned());
                }
            }
        }
        out
    }

    fn all_flex_support(&self, st: &UnifState) -> BTreeSet<Nominal> {
        let mut out = BTreeSet::new();
        for (_, info) in st.open_vars() {
            out.extend(info.support.iter().cloned());
        }
        out
    }

    fn solve(&self, s: &Sequent, depth: usize, st: UnifState, k: K) -> Option<()> {
        if !self.tick() {
            return None;
        }
        let ctx = self.env.ctx();
        let goal = st.apply_formula(&s.goal);
        if let Some(h) = s.hyps.iter().find(|h| h.formula == Formula::False) {
            if k(st.clone(), SP::FalseL(h.name.clone())).is_some() {
                return Some(());
            }
        }
        if !matches!(goal, Formula::Atom(_) | Formula::True) {
            for h in &s.hyps {
                let hf = st.apply_formula(&h.formula);
                if std::mem::discriminant(&hf) != std::mem::discriminant(&goal) {
                    continue;
                }
                let mut st2 = st.clone();
                if st2.unify_formulas(&hf, &goal).is_ok()
                    && k(st2, SP::Id(h.name.clone())).is_some()
                {
                    return Some(());
                }
            }
        }
        match &goal {
            Formula::True => k(st, SP::True),
            Formula::False => None,
            Formula::Eq(l, r) => {
                let mut st2 = st.clone();
                match st2.unify(l, r) {
                    Ok(()) => k(st2, SP::Eq),
                    Err(_) => None,
                }
            }
            Formula::And(a, b) => {
                let sa = with_goal(s, (**a).clone());
                let sb = with_goal(s, (**b).clone());
                self.solve(&sa, depth, st, &mut |st1, pa| {
                    self.solve(&sb, depth, st1, &mut |st2, pb| {
                        k(st2, SP::And(Box::new(pa.clone()), Box::new(pb)))
                    })
                })
            }
            Formula::Or(a, b) => {
                let sa = with_goal(s, (**a).clone());
                if self
                    .solve(&sa, depth, st.clone(), &mut |st1, p| {
                        k(st1, SP::Or(true, Box::new(p)))
                    })
                    .is_some()
                {
                    return Some(());
                }
                let sb = with_goal(s, (**b).clone());
                self.solve(&sb, depth, st, &mut |st1, p| {
                    k(st1, SP::Or(false, Box::new(p)))
                })
            }
            Formula::Exists(b, body) => {
                let mut st2 = st.clone();
                let mut sup = s.support();
                sup.extend(self.all_flex_support(&st2));
                let i = self.counter.get();
                self.counter.set(i + 1);
                let v = Var::new(&flex_name(&format!("{}{i}", b.name), &st2), b.ty.clone());
                st2.add_flex(v.clone(), FlexInfo::with_support(sup));
                let p = with_goal(s, Formula::instantiate(body, &Term::var(v.clone())));
                self.solve(&p, depth, st2, &mut |st1, sp| {
                    k(st1, SP::Exists(v.clone(), Box::new(sp)))
                })
            }
            Formula::Forall(..) => {
                let mut st2 = st.clone();
                let hint = match &goal {
                    Formula::Forall(b, _) => b.name.clone(),
                    _ => unreachable!(),
                };
                let name = fresh_name(&eigen_hint(&hint), &|n| {
                    s.name_taken(ctx.sig, n) || st2.is_used(n)
                });
                let mut over = goal.support();
                over.extend(self.flex_support(&st2, &goal));
                let over: Vec<Nominal> = over.into_iter().collect();
                let sg = with_goal(s, goal.clone());
                let p = kernel::forall_r_with(ctx, &sg, &name, &over).ok()?.pop()?;
                st2.mark_used(name.clone().into());
                st2.forbid_for_all(&name.clone().into());
                self.solve(&p, depth, st2, &mut |st1, sp| {
                    k(st1, SP::Forall(name.clone(), over.clone(), Box::new(sp)))
                })
            }
            Formula::Nabla(b, _) => {
                let mut avoid = goal.support();
                avoid.extend(self.all_flex_support(&st));
                let a = fresh_nominal(&b.ty, &avoid);
                let sg = with_goal(s, goal.clone());
                let p = kernel::nabla_r_with(&sg, &a).ok()?.pop()?;
                self.solve(&p, depth, st, &mut |st1, sp| {
                    k(st1, SP::Nabla(a.clone(), Box::new(sp)))
                })
            }
            Formula::Imp(..) => {
                let sg = with_goal(s, goal.clone());
                let p = kernel::imp_r(&sg).ok()?.pop()?;
                self.solve(&p, depth, st, &mut |st1, sp| k(st1, SP::Imp(Box::new(sp))))
            }
            Formula::Atom(a) => self.solve_atom(s, a, depth, st, k),
        }
    }

    fn solve_atom(&self, s: &Sequent, a: &Atom, depth: usize, st: UnifState, k: K) -> Option<()> {
        let ctx = self.env.ctx();
        for h in &s.hyps {
            let hf = st.apply_formula(&h.formula);
            let Formula::Atom(ha) = &hf else { continue };
            if ha.pred != a.pred || !ann_covers(ha.ann, a.ann) {
                continue;
            }
            let mut st2 = st.clone();
            if st2.unify_formulas(&hf, &Formula::Atom(a.clone())).is_ok()
                && k(st2, SP::Id(h.name.clone())).is_some()
            {
                return Some(());
            }
        }
        if matches!(a.ann, Ann::Lt(_)) {
            return None;
        }
        let goal = Formula::Atom(a.clone());
        let mut avoid = s.support();
        avoid.extend(goal.support());
        avoid.extend(self.all_flex_support(&st));
        let extra = self.flex_support(&st, &goal);
        let alts = kernel::def_right_alts(ctx, &st, a, &avoid, &extra, true).ok()?;
        for alt in alts {
            let cost = self.cost(&st, a, alt.clause);
            if cost > depth {
                continue;
            }
            let p = with_goal(s, alt.body.clone());
            let clause = alt.clause;
            let args = alt.args.clone();
            let cs = alt.cs.clone();
            let perm = alt.perm.clone();
            let r = self.solve(&p, depth - cost, alt.state, &mut |st1, sp| {
                k(
                    st1,
                    SP::Def {
                        clause,
                        args: args.clone(),
                        cs: cs.clone(),
                        perm: perm.clone(),
                        sub: Box::new(sp),
                    },
                )
            });
            if r.is_some() {
                return Some(());
            }
        }
        None
    }

    /// Unfolds that only follow the structure of the goal are free; the
    /// rest consume one unit of depth.
    fn cost(&self, st: &UnifState, a: &Atom, clause: usize) -> usize {
        let flex_head =
            |t: &Term| matches!(t.spine(), Some((Head::Var(v), _)) if st.is_flex(&v.name));
        match &*a.pred {
            SEQ => {
                if flex_head(&a.args[1])
                    || clause == seq_clause::BACKCHAIN
                    || clause == seq_clause::FACT
                {
                    1
                } else {
                    0
                }
            }
            PROG => 0,
            MEMBER if a.args[1].head_const_name() == Some("::") => 0,
            _ => 1,
        }
    }

    /// Fixes leftover flexible variables and replays the derivation in the
    /// kernel.
    fn check(&self, st: &UnifState, sp: &SP) -> bool {
        let mut defaults: BTreeMap<terms::Name, Term> = BTreeMap::new();
        let open: Vec<(terms::Name, FlexInfo)> = st
            .open_vars()
            .map(|(n, i)| (n.clone(), i.clone()))
            .collect();
        let mut tys: BTreeMap<terms::Name, Ty> = BTreeMap::new();
        collect_flex_types(sp, st, &mut tys);
        for (n, info) in open {
            let Some(ty) = tys.get(&n) else { continue };
            match inhabitant(ty, self.env.sig, &self.root.vars, &info.support, &[], 2) {
                Some(t) => {
                    defaults.insert(n, t);
                }
                None => return false,
            }
        }
        let fin = |t: &Term| {
            let t = st.apply(t);
            terms::replace_vars(&t, &|v| defaults.get(&v.name).cloned())
        };
        replay(self.env.ctx(), self.root, sp, &fin).is_ok()
    }
}

fn eigen_hint(hint: &str) -> String {
    let h: String = hint
        .chars()
        .filter(|c| c.is_alphanumeric() || *c == '_')
        .collect();
    match h.chars().next() {
        None => "X".into(),
        Some(c) if c.is_ascii_digit() => format!("X{h}"),
        Some(c) => {
            let mut s = c.to_uppercase().collect::<String>();
            s.push_str(&h[c.len_utf8()..]);
            s
        }
    }
}

fn collect_flex_types(sp: &SP, st: &UnifState, out: &mut BTreeMap<terms::Name, Ty>) {
    let mut add = |t: &Term| {
        for v in terms::free_vars(&st.apply(t)) {
            if st.is_flex(&v.name) {
                out.insert(v.name.clone(), v.ty.clone());
            }
        }
    };
    match sp {
        SP::True | SP::Eq | SP::Id(_) | SP::FalseL(_) => {}
        SP::And(a, b) => {
            collect_flex_types(a, st, out);
            collect_flex_types(b, st, out);
        }
        SP::Or(_, p) | SP::Forall(_, _, p) | SP::Nabla(_, p) | SP::Imp(p) => {
            collect_flex_types(p, st, out)
        }
        SP::Exists(v, p) => {
            add(&Term::var(v.clone()));
            collect_flex_types(p, st, out);
        }
        SP::Def { args, sub, .. } => {
            for a in args {
                add(a);
            }
            collect_flex_types(sub, st, out);
        }
    }
}

/// Some closed-enough term of type `ty`: a bound variable, a variable of
/// the root sequent, a permitted nominal or a constant application.
fn inhabitant(
    ty: &Ty,
    sig: &Signature,
    vars: &[Var],
    noms: &BTreeSet<Nominal>,
    bound: &[Ty],
    fuel: usize,
) -> Option<Term> {
    let (args, target) = ty.uncurry();
    if !args.is_empty() {
        let mut b2 = bound.to_vec();
        b2.extend(args.iter().cloned());
        let body = inhabitant(&target, sig, vars, noms, &b2, fuel)?;
        return Some(Term::lams(&args, body));
    }
    if let Some(j) = bound.iter().rposition(|t| *t == target) {
        return Some(Term::bound((bound.len() - 1 - j) as u32));
    }
    if let Some(v) = vars.iter().find(|v| v.ty == target) {
        return Some(Term::var(v.clone()));
    }
    if let Some(n) = noms.iter().find(|n| n.ty == target) {
        return Some(Term::nominal(n.clone()));
    }
    let consts: Vec<(&terms::Name, &Ty)> =
        sig.consts().filter(|(n, _)| !n.starts_with('@')).collect();
    if let Some((n, t)) = consts.iter().find(|(_, t)| **t == target) {
        return Some(Term::cnst(n, (*t).clone()));
    }
    if fuel == 0 {
        return None;
    }
    for (n, t) in consts {
        let (cargs, ctgt) = t.uncurry();
        if ctgt != target || cargs.is_empty() {
            continue;
        }
        let mut sub = Vec::new();
        for a in &cargs {
            sub.push(inhabitant(a, sig, vars, noms, bound, fuel - 1)?);
        }
        return Some(Term::app(Term::cnst(n, t.clone()), sub));
    }
    None
}

fn single(ps: Vec<Sequent>) -> Result<Sequent, KernelError> {
    let mut it = ps.into_iter();
    match (it.next(), it.next()) {
        (Some(p), None) => Ok(p),
        _ => Err(KernelError::NotApplicable(
            "unexpected premise count".into(),
        )),
    }
}

fn closed(ps: Vec<Sequent>) -> Result<(), KernelError> {
    if ps.is_empty() {
        Ok(())
    } else {
        Err(KernelError::NotApplicable("goal not closed".into()))
    }
}

fn replay(ctx: Ctx, s: &Sequent, sp: &SP, fin: &dyn Fn(&Term) -> Term) -> Result<(), KernelError> {
    match sp {
        SP::True => closed(kernel::true_r(s)?),
        SP::Eq => closed(kernel::eq_right(ctx, s)?),
        SP::Id(h) => closed(kernel::id(s, h)?),
        SP::FalseL(h) => closed(kernel::false_l(s, h)?),
        SP::And(a, b) => {
            let ps = kernel::and_r(s)?;
            replay(ctx, &ps[0], a, fin)?;
            replay(ctx, &ps[1], b, fin)
        }
        SP::Or(left, p) => replay(ctx, &single(kernel::or_r(s, *left)?)?, p, fin),
        SP::Exists(v, p) => {
            let w = fin(&Term::var(v.clone()));
            replay(ctx, &single(kernel::exists_r(s, &w)?)?, p, fin)
        }
        SP::Forall(name, over, p) => replay(
            ctx,
            &single(kernel::forall_r_with(ctx, s, name, over)?)?,
            p,
            fin,
        ),
        SP::Nabla(a, p) => replay(ctx, &single(kernel::nabla_r_with(s, a)?)?, p, fin),
        SP::Imp(p) => replay(ctx, &single(kernel::imp_r(s)?)?, p, fin),
        SP::Def {
            clause,
            args,
            cs,
            perm,
            sub,
        } => {
            let args: Vec<Term> = args.iter().map(fin).collect();
            let p = single(kernel::def_right_inst(ctx, s, *clause, &args, cs, perm)?)?;
            replay(ctx, &p, sub, fin)
        }
    }
}
