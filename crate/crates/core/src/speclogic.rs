//! The specification logic: second-order hereditary Harrop programs, their
//! compilation to `prog` clauses, the built-in `seq`/`member` definitions,
//! a depth-bounded animator, and the three meta-properties used as
//! trusted rules.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::definitions::{Clause, ClauseDecl, DefError, DefStore, PredDecl};
use crate::elab::{ty_of, Elab, ElabError, Implicit};
use crate::formula::{Atom, Binder, Formula, SEQ};
use crate::kernel::{self, Ctx, KernelError, Sequent};
use crate::parse::{parse_spec, ParseError, Pos, SpecItem, PT};
use crate::print::term_to_string;
use crate::sig::{self, Signature};
use crate::terms::{self, fresh_nominal, Head, Node, Nominal, Term, Ty, Var};
use crate::unify::{FlexInfo, Substitution, UnifState};

pub mod names {
    pub const ATM: &str = "@atm";
    pub const AND: &str = "@and";
    pub const IMP: &str = "@imp";
    pub const PI: &str = "@pi";
    pub const TT: &str = "@tt";
}

use names as sp;

pub const MEMBER: &str = "member";
pub const PROG: &str = "prog";
pub const NATP: &str = "nat";

/// Clause positions inside the `seq` definition.
pub mod seq_clause {
    pub const MEMBER: usize = 0;
    pub const BACKCHAIN: usize = 1;
    pub const FACT: usize = 2;
    pub const AND: usize = 3;
    pub const IMP: usize = 4;
    /// Clauses for `pi` start here, one per quantified type.
    pub const PI: usize = 5;
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SpecError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Elab(#[from] ElabError),
    #[error("{0}")]
    Def(#[from] DefError),
    #[error("{pos}: {msg}")]
    Other { pos: Pos, msg: String },
}

fn other<T>(pos: Pos, msg: impl Into<String>) -> Result<T, SpecError> {
    Err(SpecError::Other {
        pos,
        msg: msg.into(),
    })
}

/// `∀x̄. A :- G` with `G` the conjunction of the premises (or `true`).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProgClause {
    pub vars: Vec<Var>,
    pub head: Term,
    pub body: Term,
}

impl ProgClause {
    /// The clause in specification-file syntax.
    pub fn to_source(&self) -> String {
        if is_tt(&self.body) {
            format!("{}.", term_to_string(&self.head))
        } else {
            format!(
                "{} :- {}.",
                term_to_string(&self.head),
                term_to_string(&self.body)
            )
        }
    }

    fn as_def_clause(&self) -> Clause {
        Clause {
            univ: self.vars.clone(),
            nabla: vec![],
            head: vec![self.head.clone(), self.body.clone()],
            body: Formula::True,
        }
    }
}

pub fn is_tt(t: &Term) -> bool {
    t.head_const_name() == Some(sp::TT)
}

pub fn tt() -> Term {
    Term::cnst(sp::TT, sig::goal())
}

pub fn atm(a: Term) -> Term {
    Term::app1(Term::cnst(sp::ATM, Ty::arrow(sig::o(), sig::goal())), a)
}

pub fn and_goal(a: Term, b: Term) -> Term {
    Term::app(
        Term::cnst(sp::AND, Ty::arrows([sig::goal(), sig::goal()], sig::goal())),
        vec![a, b],
    )
}

pub fn pi_const(ty: &Ty) -> Term {
    Term::cnst(
        sp::PI,
        Ty::arrow(Ty::arrow(ty.clone(), sig::goal()), sig::goal()),
    )
}

pub fn nil() -> Term {
    Term::cnst("nil", sig::olist())
}

pub fn cons(a: Term, l: Term) -> Term {
    Term::app(
        Term::cnst("::", Ty::arrows([sig::o(), sig::olist()], sig::olist())),
        vec![a, l],
    )
}

/// Splits a context into its explicit elements and its tail (`nil` or a
/// variable).
pub fn list_elems(l: &Term) -> (Vec<Term>, Term) {
    let mut out = Vec::new();
    let mut cur = l.clone();
    loop {
        let next = match cur.spine() {
            Some((Head::Const(c), [a, rest])) if &*c.name == "::" => {
                out.push(a.clone());
                rest.clone()
            }
            _ => return (out, cur),
        };
        cur = next;
    }
}

pub fn build_list(elems: &[Term], tail: Term) -> Term {
    elems.iter().rev().fold(tail, |acc, a| cons(a.clone(), acc))
}

pub fn seq_atom(l: Term, g: Term) -> Formula {
    Formula::atom(SEQ, vec![l, g])
}

/// Types quantified by `pi` anywhere in `t`.
pub fn pi_types(t: &Term, out: &mut BTreeSet<Ty>) {
    match t.node() {
        Node::Atom(Head::Const(c)) if &*c.name == sp::PI => {
            if let Some(a) = pi_arg_ty(&c.ty) {
                out.insert(a);
            }
        }
        Node::Atom(_) => {}
        Node::App(h, args) => {
            if let Head::Const(c) = h {
                if &*c.name == sp::PI {
                    if let Some(a) = pi_arg_ty(&c.ty) {
                        out.insert(a);
                    }
                }
            }
            for a in args {
                pi_types(a, out);
            }
        }
        Node::Lam(_, b) => pi_types(b, out),
    }
}

fn pi_arg_ty(t: &Ty) -> Option<Ty> {
    match t {
        Ty::Arrow(a, _) => match &**a {
            Ty::Arrow(x, _) => Some((**x).clone()),
            _ => None,
        },
        _ => None,
    }
}

// ---------------------------------------------------------------------------
// Built-in definitions.

/// Registers `member`, `prog` (initially without clauses), `seq` and `nat`.
pub fn install_seq(sig: &Signature, defs: &mut DefStore) -> Result<(), SpecError> {
    if defs.contains(SEQ) {
        return other(
            Pos::default(),
            "the specification logic is already installed",
        );
    }
    let _ = sig;
    let o = sig::o();
    let ol = sig::olist();
    let g = sig::goal();
    let b = Var::new("B", o.clone());
    let c = Var::new("C", o.clone());
    let l = Var::new("L", ol.clone());
    let tv = |v: &Var| Term::var(v.clone());
    defs.add_definition(
        vec![PredDecl {
            name: MEMBER.into(),
            arg_tys: vec![o.clone(), ol.clone()],
        }],
        vec![
            ClauseDecl {
                pred: MEMBER.into(),
                clause: Clause {
                    univ: vec![b.clone(), l.clone()],
                    nabla: vec![],
                    head: vec![tv(&b), cons(tv(&b), tv(&l))],
                    body: Formula::True,
                },
            },
            ClauseDecl {
                pred: MEMBER.into(),
                clause: Clause {
                    univ: vec![b.clone(), c.clone(), l.clone()],
                    nabla: vec![],
                    head: vec![tv(&b), cons(tv(&c), tv(&l))],
                    body: Formula::atom(MEMBER, vec![tv(&b), tv(&l)]),
                },
            },
        ],
        false,
    )?;
    defs.add_definition(
        vec![PredDecl {
            name: PROG.into(),
            arg_tys: vec![o.clone(), g.clone()],
        }],
        vec![],
        false,
    )?;
    let a = Var::new("A", o.clone());
    let gv = Var::new("G", g.clone());
    let g1 = Var::new("G1", g.clone());
    let g2 = Var::new("G2", g.clone());
    let seq_cl = |univ: Vec<Var>, goal: Term, body: Formula| ClauseDecl {
        pred: SEQ.into(),
        clause: Clause {
            univ: std::iter::once(l.clone()).chain(univ).collect(),
            nabla: vec![],
            head: vec![tv(&l), goal],
            body,
        },
    };
    let clauses = vec![
        seq_cl(
            vec![a.clone()],
            atm(tv(&a)),
            Formula::atom(MEMBER, vec![tv(&a), tv(&l)]),
        ),
        seq_cl(
            vec![a.clone()],
            atm(tv(&a)),
            Formula::Exists(
                Binder::new("G", g.clone()),
                Box::new(Formula::and(
                    Formula::atom(PROG, vec![tv(&a), Term::bound(0)]),
                    seq_atom(tv(&l), Term::bound(0)),
                )),
            ),
        ),
        seq_cl(
            vec![a.clone()],
            atm(tv(&a)),
            Formula::atom(PROG, vec![tv(&a), tt()]),
        ),
        seq_cl(
            vec![g1.clone(), g2.clone()],
            and_goal(tv(&g1), tv(&g2)),
            Formula::and(seq_atom(tv(&l), tv(&g1)), seq_atom(tv(&l), tv(&g2))),
        ),
        seq_cl(
            vec![a.clone(), gv.clone()],
            Term::app(
                Term::cnst(sp::IMP, Ty::arrows([o.clone(), g.clone()], g.clone())),
                vec![tv(&a), tv(&gv)],
            ),
            seq_atom(cons(tv(&a), tv(&l)), tv(&gv)),
        ),
    ];
    defs.add_definition(
        vec![PredDecl {
            name: SEQ.into(),
            arg_tys: vec![ol, g],
        }],
        clauses,
        false,
    )?;
    let n = Var::new("N", sig::nat());
    defs.add_definition(
        vec![PredDecl {
            name: NATP.into(),
            arg_tys: vec![sig::nat()],
        }],
        vec![
            ClauseDecl {
                pred: NATP.into(),
                clause: Clause {
                    univ: vec![],
                    nabla: vec![],
                    head: vec![Term::cnst("z", sig::nat())],
                    body: Formula::True,
                },
            },
            ClauseDecl {
                pred: NATP.into(),
                clause: Clause {
                    univ: vec![n.clone()],
                    nabla: vec![],
                    head: vec![Term::app1(
                        Term::cnst("s", Ty::arrow(sig::nat(), sig::nat())),
                        Term::var(n.clone()),
                    )],
                    body: Formula::atom(NATP, vec![Term::var(n)]),
                },
            },
        ],
        false,
    )?;
    Ok(())
}

/// Adds the `seq L (pi B) := nabla x, seq L (B x)` clause for `ty` unless
/// present.
pub fn ensure_pi_clause(defs: &mut DefStore, ty: &Ty) -> Result<(), SpecError> {
    let have = defs
        .get(SEQ)
        .map(|d| {
            d.clauses.iter().any(|c| {
                c.head.len() == 2
                    && matches!(c.head[1].spine(), Some((Head::Const(k), _)) if &*k.name == sp::PI && pi_arg_ty(&k.ty).as_ref() == Some(ty))
            })
        })
        .ok_or_else(|| SpecError::Other {
            pos: Pos::default(),
            msg: "the specification logic is not installed".into(),
        })?;
    if have {
        return Ok(());
    }
    let l = Var::new("L", sig::olist());
    let b = Var::new("B", Ty::arrow(ty.clone(), sig::goal()));
    let clause = Clause {
        univ: vec![l.clone(), b.clone()],
        nabla: vec![],
        head: vec![
            Term::var(l.clone()),
            Term::app1(pi_const(ty), Term::var(b.clone())),
        ],
        body: Formula::Nabla(
            Binder::new("x", ty.clone()),
            Box::new(seq_atom(
                Term::var(l),
                Term::app1(Term::var(b), Term::bound(0)),
            )),
        ),
    };
    defs.extend_clauses(SEQ, vec![clause])?;
    Ok(())
}

// ---------------------------------------------------------------------------
// Compilation.

fn check_clause_var_ty(v: &Var, pos: Pos) -> Result<(), SpecError> {
    let bad = |t: &Ty| {
        fn mentions(t: &Ty) -> bool {
            match t {
                Ty::Base(b) => &**b == sig::O || &**b == sig::GOAL || &**b == sig::OLIST,
                Ty::Prop => true,
                Ty::Arrow(a, b) => mentions(a) || mentions(b),
            }
        }
        t.order() > 1 || mentions(t)
    };
    if bad(&v.ty) {
        return other(
            pos,
            format!(
                "variable {} has type {}; quantified specification types must have order at most 1 and not mention o",
                v.name, v.ty
            ),
        );
    }
    Ok(())
}

/// Loads a specification file: declarations go into `sig`, clauses are
/// compiled and appended to `prog`.
pub fn load_spec(
    src: &str,
    sig: &mut Signature,
    defs: &mut DefStore,
) -> Result<Vec<ProgClause>, SpecError> {
    let items = parse_spec(src)?;
    let mut out = Vec::new();
    for it in items {
        match it.item {
            SpecItem::Kind(names) => {
                for k in names {
                    if !sig.add_kind(&k) {
                        return other(it.pos, format!("type {k} declared twice"));
                    }
                }
            }
            SpecItem::Type(names, t) => {
                let ty = ty_of(sig, &t, it.pos)?;
                if ty.contains_prop() {
                    return other(it.pos, "specification constants may not mention prop");
                }
                for c in names {
                    if c.starts_with(|ch: char| ch.is_uppercase()) {
                        return other(it.pos, format!("constant {c} must not be capitalised"));
                    }
                    if !sig.add_const(&c, ty.clone()) {
                        return other(it.pos, format!("constant {c} declared twice"));
                    }
                }
            }
            SpecItem::Clause(pt) => {
                let c = compile_clause(sig, &pt, it.pos)?;
                out.push(c);
            }
        }
    }
    let mut tys = BTreeSet::new();
    for c in &out {
        pi_types(&c.body, &mut tys);
    }
    for ty in tys {
        ensure_pi_clause(defs, &ty)?;
    }
    defs.extend_clauses(PROG, out.iter().map(|c| c.as_def_clause()).collect())?;
    Ok(out)
}

/// Compiles one clause `D ::= A | G => D | pi x\ D` (with `A :- G`
/// already turned into `G => A`).
pub fn compile_clause(sig: &Signature, pt: &PT, pos: Pos) -> Result<ProgClause, SpecError> {
    let none = |_: &str| None;
    let mut el = Elab::new(sig, &none).implicit(Implicit::Capitalized);
    let mut premises = Vec::new();
    let mut cur = pt;
    let mut pis: Vec<String> = Vec::new();
    let head = loop {
        match cur {
            PT::Imp(g, d) => {
                premises.push(el.goal(g)?);
                cur = d;
            }
            PT::App(h, args)
                if matches!(&**h, PT::Id(x, _) if x == "pi")
                    && args.len() == 1
                    && matches!(args[0], PT::Lam(..)) =>
            {
                if let PT::Lam(x, ann, body) = &args[0] {
                    if pis.contains(x) {
                        return other(pos, format!("{x} bound twice"));
                    }
                    el.declare(&(x.clone(), ann.clone()), pos)?;
                    pis.push(x.clone());
                    cur = body;
                }
            }
            _ => break el.term(cur, Some(&sig::o()))?,
        }
    };
    el.solve()?;
    let head = el.finish_term(&head)?;
    let mut goals = premises
        .iter()
        .map(|g| el.finish_term(g))
        .collect::<Result<Vec<_>, _>>()?;
    let vars = el.free_vars(pos)?;
    for v in &vars {
        check_clause_var_ty(v, pos)?;
    }
    match head.spine() {
        Some((Head::Const(_), _)) => {}
        _ => {
            return other(
                pos,
                format!(
                    "clause head {} must start with a constant",
                    term_to_string(&head)
                ),
            )
        }
    }
    let body = match goals.pop() {
        None => tt(),
        Some(last) => goals
            .into_iter()
            .rev()
            .fold(last, |acc, g| and_goal(g, acc)),
    };
    Ok(ProgClause { vars, head, body })
}

// ---------------------------------------------------------------------------
// Animation.

/// One recorded choice of the animator.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Step {
    /// `pi` introduced this nominal constant.
    Pi(Nominal),
    /// Atom closed by the i-th context element.
    Member(usize),
    /// Atom closed by backchaining on the clause, with the (instantiated)
    /// clause body.
    Rule(usize, Term),
    /// Atom closed by a fact.
    Fact(usize),
}

#[derive(Clone, Debug)]
pub struct Found {
    /// Answer substitution for the query's variables.
    pub answer: Substitution,
    pub steps: Vec<Step>,
}

struct Goal {
    ctx: Vec<Term>,
    g: Term,
    depth: usize,
}

struct Animator<'a> {
    clauses: &'a [ProgClause],
    steps: Vec<Step>,
}

/// Depth-bounded uniform-proof search for `L ⊩ G`. Free variables of the
/// query are answer variables. The bound limits the number of atoms on any
/// branch.
pub fn spec_search(
    sig: &Signature,
    clauses: &[ProgClause],
    ctx: &Term,
    goal: &Term,
    depth: usize,
) -> Option<Found> {
    let mut vars = BTreeSet::new();
    terms::collect_vars(ctx, &mut vars);
    terms::collect_vars(goal, &mut vars);
    let mut st = UnifState::new(sig.consts().map(|(n, _)| n.clone()));
    let mut sup = terms::support(ctx);
    sup.extend(terms::support(goal));
    for v in &vars {
        st.add_flex(v.clone(), FlexInfo::with_support(sup.clone()));
    }
    let (elems, _) = list_elems(ctx);
    let mut an = Animator {
        clauses,
        steps: Vec::new(),
    };
    let goals = vec![Goal {
        ctx: elems,
        g: goal.clone(),
        depth,
    }];
    let st = an.solve(goals, st)?;
    let mut answer = Substitution::new();
    for v in &vars {
        let t = st.apply(&Term::var(v.clone()));
        if t != Term::var(v.clone()) {
            answer = answer_with(answer, v, t);
        }
    }
    let steps = an
        .steps
        .into_iter()
        .map(|s| match s {
            Step::Rule(j, b) => Step::Rule(j, st.apply(&b)),
            other => other,
        })
        .collect();
    Some(Found { answer, steps })
}

fn answer_with(s: Substitution, v: &Var, t: Term) -> Substitution {
    let mut st = UnifState::new([]);
    for (x, u) in s.iter() {
        st.add_flex(x.clone(), FlexInfo::default());
        let _ = st.unify(&Term::var(x.clone()), u);
    }
    st.add_flex(v.clone(), FlexInfo::with_support(terms::support(&t)));
    let _ = st.unify(&Term::var(v.clone()), &t);
    st.into_subst()
}

impl Animator<'_> {
    fn solve(&mut self, mut goals: Vec<Goal>, st: UnifState) -> Option<UnifState> {
        let Some(goal) = goals.pop() else {
            return Some(st);
        };
        let g = st.apply(&goal.g);
        let (h, args) = match g.spine() {
            Some((Head::Const(c), args)) => (c.name.to_string(), args.to_vec()),
            _ => return None,
        };
        match (h.as_str(), args.as_slice()) {
            (sp::TT, []) => self.solve(goals, st),
            (sp::AND, [a, b]) => {
                goals.push(Goal {
                    ctx: goal.ctx.clone(),
                    g: b.clone(),
                    depth: goal.depth,
                });
                goals.push(Goal {
                    ctx: goal.ctx,
                    g: a.clone(),
                    depth: goal.depth,
                });
                self.solve(goals, st)
            }
            (sp::IMP, [a, b]) => {
                let mut ctx = vec![a.clone()];
                ctx.extend(goal.ctx);
                goals.push(Goal {
                    ctx,
                    g: b.clone(),
                    depth: goal.depth,
                });
                self.solve(goals, st)
            }
            (sp::PI, [b]) => {
                let ty = match g.spine() {
                    Some((Head::Const(c), _)) => pi_arg_ty(&c.ty)?,
                    _ => return None,
                };
                let mut avoid = terms::support(&g);
                for c in &goal.ctx {
                    avoid.extend(terms::support(&st.apply(c)));
                }
                let mut fv = BTreeSet::new();
                terms::collect_vars(&g, &mut fv);
                for c in &goal.ctx {
                    terms::collect_vars(&st.apply(c), &mut fv);
                }
                for v in fv {
                    if let Some(info) = st.flex_info(&v.name) {
                        avoid.extend(info.support.iter().cloned());
                    }
                }
                let c = fresh_nominal(&ty, &avoid);
                self.steps.push(Step::Pi(c.clone()));
                goals.push(Goal {
                    ctx: goal.ctx,
                    g: Term::app1(b.clone(), Term::nominal(c)),
                    depth: goal.depth,
                });
                if let Some(r) = self.solve(goals, st) {
                    return Some(r);
                }
                self.steps.pop();
                None
            }
            (sp::ATM, [a]) => {
                if goal.depth == 0 {
                    return None;
                }
                for (i, c) in goal.ctx.iter().enumerate() {
                    let mut st2 = st.clone();
                    if st2.unify(a, c).is_err() {
                        continue;
                    }
                    let mark = self.steps.len();
                    self.steps.push(Step::Member(i));
                    let rest = clone_goals(&goals);
                    if let Some(r) = self.solve(rest, st2) {
                        return Some(r);
                    }
                    self.steps.truncate(mark);
                }
                let mut scope = terms::support(&g);
                for c in &goal.ctx {
                    scope.extend(terms::support(&st.apply(c)));
                }
                for (j, cl) in self.clauses.iter().enumerate() {
                    let mut st2 = st.clone();
                    let mut map: BTreeMap<terms::Name, Term> = BTreeMap::new();
                    for v in &cl.vars {
                        let w = st2.fresh_var(
                            &v.name,
                            v.ty.clone(),
                            FlexInfo::with_support(scope.clone()),
                        );
                        map.insert(v.name.clone(), Term::var(w));
                    }
                    let f = |v: &Var| map.get(&v.name).cloned();
                    let head = terms::replace_vars(&cl.head, &f);
                    if st2.unify(a, &head).is_err() {
                        continue;
                    }
                    let body = terms::replace_vars(&cl.body, &f);
                    let mark = self.steps.len();
                    let mut rest = clone_goals(&goals);
                    if is_tt(&body) {
                        self.steps.push(Step::Fact(j));
                    } else {
                        self.steps.push(Step::Rule(j, body.clone()));
                        rest.push(Goal {
                            ctx: goal.ctx.clone(),
                            g: body,
                            depth: goal.depth - 1,
                        });
                    }
                    if let Some(r) = self.solve(rest, st2) {
                        return Some(r);
                    }
                    self.steps.truncate(mark);
                }
                None
            }
            _ => None,
        }
    }
}

fn clone_goals(gs: &[Goal]) -> Vec<Goal> {
    gs.iter()
        .map(|g| Goal {
            ctx: g.ctx.clone(),
            g: g.g.clone(),
            depth: g.depth,
        })
        .collect()
}

/// Replays an animator derivation as a kernel proof of `{L |- G}` built
/// only from `defR`, `∃R`, `∧R`, `∇R` and `⊤R`. Succeeds iff every step is
/// accepted by the kernel.
pub fn replay_in_kernel(ctx: Ctx, l: &Term, g: &Term, found: &Found) -> Result<(), KernelError> {
    let l = found.answer.apply(l);
    let g = found.answer.apply(g);
    let mut s = Sequent::new(seq_atom(l, g));
    s.collect_new_vars();
    let mut steps = found.steps.iter();
    let mut renaming: BTreeMap<Nominal, Nominal> = BTreeMap::new();
    replay(ctx, s, &mut steps, &mut renaming)?;
    if steps.next().is_some() {
        return Err(KernelError::NotApplicable("unused derivation steps".into()));
    }
    Ok(())
}

fn one(mut v: Vec<Sequent>) -> Result<Sequent, KernelError> {
    if v.len() != 1 {
        return Err(KernelError::NotApplicable("expected one premise".into()));
    }
    Ok(v.pop().unwrap())
}

fn replay(
    ctx: Ctx,
    s: Sequent,
    steps: &mut std::slice::Iter<Step>,
    ren: &mut BTreeMap<Nominal, Nominal>,
) -> Result<(), KernelError> {
    let bad = |m: &str| KernelError::NotApplicable(format!("replay: {m}"));
    let (l, g) = match &s.goal {
        Formula::Atom(a) if &*a.pred == SEQ => (a.args[0].clone(), a.args[1].clone()),
        _ => return Err(bad("expected a seq goal")),
    };
    let name = g.head_const_name().map(str::to_string).unwrap_or_default();
    match name.as_str() {
        sp::TT => Err(bad("bare true goal")),
        sp::AND => {
            let p = one(kernel::def_right(ctx, &s, Some(seq_clause::AND))?)?;
            let ps = kernel::and_r(&p)?;
            for q in ps {
                replay(ctx, q, steps, ren)?;
            }
            Ok(())
        }
        sp::IMP => {
            let p = one(kernel::def_right(ctx, &s, Some(seq_clause::IMP))?)?;
            replay(ctx, p, steps, ren)
        }
        sp::PI => {
            let Some(Step::Pi(c)) = steps.next() else {
                return Err(bad("expected a pi step"));
            };
            let p = one(kernel::def_right(ctx, &s, None)?)?;
            let before = p.goal.clone();
            let q = one(kernel::nabla_r(&p)?)?;
            if let Formula::Nabla(b, body) = &before {
                let k = fresh_nominal(&b.ty, &body.support());
                ren.insert(c.clone(), k);
            }
            replay(ctx, q, steps, ren)
        }
        sp::ATM => match steps.next() {
            Some(Step::Member(i)) => {
                let mut p = one(kernel::def_right(ctx, &s, Some(seq_clause::MEMBER))?)?;
                for _ in 0..*i {
                    p = one(kernel::def_right(ctx, &p, Some(1))?)?;
                }
                let p = one(kernel::def_right(ctx, &p, Some(0))?)?;
                kernel::true_r(&p).map(|_| ())
            }
            Some(Step::Fact(j)) => {
                let p = one(kernel::def_right(ctx, &s, Some(seq_clause::FACT))?)?;
                let p = one(kernel::def_right(ctx, &p, Some(*j))?)?;
                kernel::true_r(&p).map(|_| ())
            }
            Some(Step::Rule(j, body)) => {
                let p = one(kernel::def_right(ctx, &s, Some(seq_clause::BACKCHAIN))?)?;
                let w = terms::replace_nominals(body, &|n| {
                    ren.get(n).map(|m| Term::nominal(m.clone()))
                });
                let p = one(kernel::exists_r(&p, &w)?)?;
                let mut ps = kernel::and_r(&p)?.into_iter();
                let prog = ps.next().expect("two premises");
                let rest = ps.next().expect("two premises");
                let q = one(kernel::def_right(ctx, &prog, Some(*j))?)?;
                kernel::true_r(&q)?;
                let _ = l;
                replay(ctx, rest, steps, ren)
            }
            _ => Err(bad("expected an atom step")),
        },
        _ => Err(bad("goal is not built from goal constructors")),
    }
}

// ---------------------------------------------------------------------------
// Meta-properties (trusted).

fn seq_parts(f: &Formula) -> Option<(&Term, &Term)> {
    match f {
        Formula::Atom(Atom { pred, args, .. }) if &**pred == SEQ && args.len() == 2 => {
            Some((&args[0], &args[1]))
        }
        _ => None,
    }
}

/// Instantiation: replaces nominal `n` in the judgment `h` by `t`.
pub fn meta_inst(h: &Formula, n: &Nominal, t: &Term) -> Result<Formula, KernelError> {
    if seq_parts(h).is_none() {
        return Err(KernelError::NotApplicable(
            "inst applies to specification judgments".into(),
        ));
    }
    let ty = terms::type_of(t, &[]).map_err(|e| KernelError::IllTyped(e.to_string()))?;
    if ty != n.ty {
        return Err(KernelError::IllTyped(format!(
            "{} has type {ty}, but {n} has type {}",
            term_to_string(t),
            n.ty
        )));
    }
    Ok(h.replace_nominals(&|m| (m == n).then(|| t.clone()))
        .clear_anns())
}

/// Cut: from `L1 ⊩ a` and a judgment whose context contains `a`, the
/// latter with `a` replaced by the elements of `L1`.
pub fn meta_cut(h1: &Formula, h2: &Formula) -> Result<Formula, KernelError> {
    let fail = |m: &str| Err(KernelError::NotApplicable(m.to_string()));
    let (l1, g1) = match seq_parts(h1) {
        Some(p) => p,
        None => return fail("cut needs two specification judgments"),
    };
    let (l2, g2) = match seq_parts(h2) {
        Some(p) => p,
        None => return fail("cut needs two specification judgments"),
    };
    let a = match g1.spine() {
        Some((Head::Const(c), [a])) if &*c.name == sp::ATM => a.clone(),
        _ => return fail("the first judgment must prove an atom"),
    };
    let (mut elems2, tail2) = list_elems(l2);
    let Some(pos) = elems2.iter().position(|e| *e == a) else {
        return fail("the cut atom does not occur in the second judgment's context");
    };
    elems2.remove(pos);
    let (elems1, tail1) = list_elems(l1);
    let nil_tail = |t: &Term| t.head_const_name() == Some("nil");
    let tail = if nil_tail(&tail1) {
        tail2
    } else if nil_tail(&tail2) || tail1 == tail2 {
        tail1
    } else {
        return fail("cannot combine two contexts with different open tails");
    };
    let mut elems = elems1;
    for e in elems2 {
        if !elems.contains(&e) {
            elems.push(e);
        }
    }
    Ok(seq_atom(build_list(&elems, tail), g2.clone()))
}

/// Monotonicity: the judgment `h` with its context replaced by `l2`. The
/// caller is responsible for the subset obligation, see
/// [`monotone_obligation`].
pub fn meta_monotone(h: &Formula, l2: &Term) -> Result<Formula, KernelError> {
    let (_, g) = seq_parts(h).ok_or_else(|| {
        KernelError::NotApplicable("monotone applies to specification judgments".into())
    })?;
    Ok(seq_atom(l2.clone(), g.clone()))
}

/// `forall E, member E L1 -> member E L2`.
pub fn monotone_obligation(l1: &Term, l2: &Term) -> Formula {
    let shift = |t: &Term| terms::shift(t, 1, 0);
    Formula::Forall(
        Binder::new("E", sig::o()),
        Box::new(Formula::imp(
            Formula::atom(MEMBER, vec![Term::bound(0), shift(l1)]),
            Formula::atom(MEMBER, vec![Term::bound(0), shift(l2)]),
        )),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::parse_term;

    const STLC: &str = r#"
        kind tm, ty type.
        type app tm -> tm -> tm.
        type abs ty -> (tm -> tm) -> tm.
        type i ty.
        type arr ty -> ty -> ty.
        type of tm -> ty -> o.
        type value tm -> o.
        type step tm -> tm -> o.
        type steps tm -> tm -> o.
        of (app M N) B :- of M (arr A B), of N A.
        of (abs A R) (arr A B) :- pi x\ (of x A => of (R x) B).
        value (abs A R).
        step (app M N) (app M' N) :- step M M'.
        step (app V N) (app V N') :- value V, step N N'.
        step (app (abs A R) M) (R M) :- value M.
        steps M M.
        steps M N :- step M P, steps P N.
    "#;

    fn setup() -> (Signature, DefStore, Vec<ProgClause>) {
        let mut sig = Signature::new();
        let mut defs = DefStore::new();
        install_seq(&sig, &mut defs).unwrap();
        let cls = load_spec(STLC, &mut sig, &mut defs).unwrap();
        (sig, defs, cls)
    }

    fn goal(sig: &Signature, s: &str) -> Term {
        let none = |_: &str| None;
        let mut el = Elab::new(sig, &none).implicit(Implicit::Capitalized);
        let g = el.goal(&parse_term(s).unwrap()).unwrap();
        el.solve().unwrap();
        el.finish_term(&g).unwrap()
    }

    #[test]
    fn compiles_application_rule() {
        let (_, _, cls) = setup();
        assert_eq!(cls.len(), 8);
        assert_eq!(
            cls[0].to_source(),
            "of (app M N) B :- of M (arr A B), of N A."
        );
        assert_eq!(cls[6].to_source(), "steps M M.");
        assert_eq!(cls[2].to_source(), "value (abs A R).");
    }

    #[test]
    fn round_trip_through_source() {
        let (sig, _, cls) = setup();
        for c in &cls {
            let items = parse_spec(&c.to_source()).unwrap();
            let SpecItem::Clause(pt) = &items[0].item else {
                panic!()
            };
            let c2 = compile_clause(&sig, pt, Pos::default()).unwrap();
            assert_eq!(&c2, c);
        }
    }

    #[test]
    fn animates_typing_and_evaluation() {
        let (sig, defs, cls) = setup();
        let ctx = Ctx {
            sig: &sig,
            defs: &defs,
        };
        let l = nil();
        let g = goal(&sig, "of (abs i x\\ x) (arr i i)");
        let f = spec_search(&sig, &cls, &l, &g, 10).expect("derivable");
        replay_in_kernel(ctx, &l, &g, &f).unwrap();
        let g = goal(&sig, "step (app (abs i x\\ x) (abs i x\\ x)) R");
        let f = spec_search(&sig, &cls, &l, &g, 10).expect("derivable");
        let r = f.answer.get("R").expect("answer");
        assert_eq!(term_to_string(r), "abs i (x\\ x)");
        replay_in_kernel(ctx, &l, &g, &f).unwrap();
        let g = goal(&sig, "of (abs i x\\ x) i");
        assert!(spec_search(&sig, &cls, &l, &g, 10).is_none());
    }

    #[test]
    fn meta_cut_and_inst() {
        let (sig, _, _) = setup();
        let a = goal(&sig, "of P B");
        let Some((_, [inner])) = a.spine() else {
            panic!()
        };
        let h1 = seq_atom(nil(), a.clone());
        let h2 = seq_atom(cons(inner.clone(), nil()), goal(&sig, "of (app P P) A"));
        let r = meta_cut(&h1, &h2).unwrap();
        assert_eq!(r.to_string(), "{of (app P P) A}");
        let n1 = Nominal::new(1, Ty::base("tm"));
        let h = seq_atom(
            nil(),
            atm(Term::app(
                Term::cnst("of", Ty::arrows([Ty::base("tm"), Ty::base("ty")], sig::o())),
                vec![Term::nominal(n1.clone()), Term::cnst("i", Ty::base("ty"))],
            )),
        );
        let p = Term::var(Var::new("P", Ty::base("tm")));
        assert_eq!(meta_inst(&h, &n1, &p).unwrap().to_string(), "{of P i}");
    }
}
