//! Sequents and the inference rules of the reasoning logic.
//!
//! Every rule takes a sequent and returns the list of premises; an empty
//! list closes the goal. Rules never search: choices (witnesses, clauses,
//! permutations) are supplied by the caller or enumerated exhaustively
//! where the rule itself demands it (defL).

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::definitions::{raise_clause, DefStore, DefinedPred};
use crate::formula::{Ann, Atom, Binder, Formula};
use crate::print::formula_to_string;
use crate::sig::Signature;
use crate::terms::{
    self, fresh_name, fresh_nominal, type_of, Head, Node, Nominal, Permutation, Term, Ty, Var,
};
use crate::unify::{FlexInfo, Substitution, UnifState, UnifyError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum KernelError {
    #[error("no hypothesis named {0}")]
    NoSuchHyp(String),
    #[error("{0}")]
    NotApplicable(String),
    #[error("not a higher-order pattern: {0}")]
    NonPattern(String),
    #[error("{0}")]
    IllTyped(String),
    #[error("{0} is not a defined predicate")]
    NotDefined(String),
    #[error("cannot induct on {0}: it is not an inductive definition")]
    NotInductive(String),
}

type KResult<T> = Result<T, KernelError>;

impl From<UnifyError> for KernelError {
    fn from(e: UnifyError) -> Self {
        match e {
            UnifyError::NonPattern(m) => KernelError::NonPattern(m),
            UnifyError::NoSolution => KernelError::NotApplicable("unification failed".into()),
            UnifyError::Malformed(m) => KernelError::IllTyped(m),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Hyp {
    pub name: String,
    pub formula: Formula,
}

/// `Σ : Γ ⊢ C`. Nominal constants in scope are implicit (the support).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Sequent {
    pub vars: Vec<Var>,
    pub hyps: Vec<Hyp>,
    pub goal: Formula,
    /// Counter behind the `H1, H2, ...` naming scheme.
    pub next_hyp: u32,
}

/// Declarations the rules consult.
#[derive(Clone, Copy)]
pub struct Ctx<'a> {
    pub sig: &'a Signature,
    pub defs: &'a DefStore,
}

impl Sequent {
    pub fn new(goal: Formula) -> Sequent {
        Sequent {
            vars: Vec::new(),
            hyps: Vec::new(),
            goal,
            next_hyp: 1,
        }
    }

    pub fn hyp(&self, name: &str) -> Option<&Hyp> {
        self.hyps.iter().find(|h| h.name == name)
    }

    fn hyp_formula(&self, name: &str) -> KResult<&Formula> {
        self.hyp(name)
            .map(|h| &h.formula)
            .ok_or_else(|| KernelError::NoSuchHyp(name.to_string()))
    }

    /// Adds a hypothesis under the next `H<k>` name.
    pub fn add_hyp(&mut self, f: Formula) -> String {
        loop {
            let name = format!("H{}", self.next_hyp);
            self.next_hyp += 1;
            if self.hyp(&name).is_none() {
                self.hyps.push(Hyp {
                    name: name.clone(),
                    formula: f,
                });
                return name;
            }
        }
    }

    /// Adds a hypothesis named `base`, `base1`, ...
    pub fn add_named_hyp(&mut self, base: &str, f: Formula) -> String {
        let name = fresh_name(base, &|n| self.hyp(n).is_some());
        self.hyps.push(Hyp {
            name: name.clone(),
            formula: f,
        });
        name
    }

    pub fn remove_hyp(&mut self, name: &str) -> Option<Formula> {
        let i = self.hyps.iter().position(|h| h.name == name)?;
        Some(self.hyps.remove(i).formula)
    }

    pub fn support(&self) -> BTreeSet<Nominal> {
        let mut out = self.goal.support();
        for h in &self.hyps {
            out.extend(h.formula.support());
        }
        out
    }

    pub fn free_vars(&self) -> BTreeSet<Var> {
        let mut out = self.goal.free_vars();
        for h in &self.hyps {
            out.extend(h.formula.free_vars());
        }
        out
    }

    pub fn has_var(&self, name: &str) -> bool {
        self.vars.iter().any(|v| &*v.name == name)
    }

    /// Name check for fresh eigenvariables: sequent variables, declared
    /// constants and anything that reads like a nominal constant.
    pub fn name_taken(&self, sig: &Signature, n: &str) -> bool {
        self.has_var(n) || sig.const_ty(n).is_some() || is_nominal_name(n)
    }

    /// Largest induction generation in use.
    pub fn max_gen(&self) -> u8 {
        let mut g = max_gen(&self.goal);
        for h in &self.hyps {
            g = g.max(max_gen(&h.formula));
        }
        g
    }

    /// Applies a substitution to every formula and recomputes `Σ`: the
    /// variables not in the domain, followed by any new variable that now
    /// occurs.
    pub fn apply_subst(&self, theta: &Substitution) -> Sequent {
        let mut out = Sequent {
            vars: Vec::new(),
            hyps: self
                .hyps
                .iter()
                .map(|h| Hyp {
                    name: h.name.clone(),
                    formula: theta.apply_formula(&h.formula),
                })
                .collect(),
            goal: theta.apply_formula(&self.goal),
            next_hyp: self.next_hyp,
        };
        out.vars = self
            .vars
            .iter()
            .filter(|v| theta.get(&v.name).is_none())
            .cloned()
            .collect();
        out.collect_new_vars();
        out
    }

    /// Adds to `Σ` every free variable that is not yet listed.
    pub fn collect_new_vars(&mut self) {
        let mut fv: Vec<Var> = Vec::new();
        let mut seen: BTreeSet<Var> = BTreeSet::new();
        let mut push_from = |f: &Formula, fv: &mut Vec<Var>| {
            f.for_each_term(&mut |t| {
                let mut vs = Vec::new();
                ordered_vars(t, &mut vs);
                for v in vs {
                    if seen.insert(v.clone()) {
                        fv.push(v);
                    }
                }
            })
        };
        for h in &self.hyps {
            push_from(&h.formula, &mut fv);
        }
        push_from(&self.goal, &mut fv);
        for v in fv {
            if !self.has_var(&v.name) {
                self.vars.push(v);
            }
        }
    }

    pub fn permute(&self, pi: &Permutation) -> Sequent {
        Sequent {
            vars: self.vars.clone(),
            hyps: self
                .hyps
                .iter()
                .map(|h| Hyp {
                    name: h.name.clone(),
                    formula: h.formula.permute(pi),
                })
                .collect(),
            goal: self.goal.permute(pi),
            next_hyp: self.next_hyp,
        }
    }
}

impl fmt::Display for Sequent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if !self.vars.is_empty() {
            let names: Vec<&str> = self.vars.iter().map(|v| &*v.name).collect();
            writeln!(f, "Variables: {}", names.join(" "))?;
        }
        let sup = self.support();
        if !sup.is_empty() {
            let names: Vec<String> = sup.iter().map(|n| n.to_string()).collect();
            writeln!(f, "Nominals: {}", names.join(" "))?;
        }
        for h in &self.hyps {
            writeln!(f, "{} : {}", h.name, formula_to_string(&h.formula))?;
        }
        writeln!(f, "============================")?;
        write!(f, " {}", formula_to_string(&self.goal))
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

pub fn is_nominal_name(n: &str) -> bool {
    n.len() > 1 && n.starts_with('n') && n[1..].chars().all(|c| c.is_ascii_digit())
}

fn ordered_vars(t: &Term, out: &mut Vec<Var>) {
    match t.node() {
        Node::Atom(Head::Var(v)) => out.push(v.clone()),
        Node::Atom(_) => {}
        Node::App(h, args) => {
            if let Head::Var(v) = h {
                out.push(v.clone());
            }
            for a in args {
                ordered_vars(a, out);
            }
        }
        Node::Lam(_, b) => ordered_vars(b, out),
    }
}

fn max_gen(f: &Formula) -> u8 {
    match f {
        Formula::Atom(a) => match a.ann {
            Ann::None => 0,
            Ann::Eq(g) | Ann::Lt(g) => g,
        },
        Formula::True | Formula::False | Formula::Eq(..) => 0,
        Formula::And(a, b) | Formula::Or(a, b) | Formula::Imp(a, b) => max_gen(a).max(max_gen(b)),
        Formula::Forall(_, b) | Formula::Exists(_, b) | Formula::Nabla(_, b) => max_gen(b),
    }
}

// ---------------------------------------------------------------------------
// Quantifier helpers shared with search.

/// `B[h c̄ / x]` for a fresh `h` raised over `over`.
pub fn open_raised(
    b: &Binder,
    body: &Formula,
    over: &[Nominal],
    taken: &dyn Fn(&str) -> bool,
) -> (Var, Formula) {
    let name = fresh_name(&eigen_hint(&b.name), taken);
    let h = Var::new(
        &name,
        Ty::arrows(over.iter().map(|c| c.ty.clone()), b.ty.clone()),
    );
    let t = Term::app(
        Term::var(h.clone()),
        over.iter().map(|c| Term::nominal(c.clone())).collect(),
    );
    (h, Formula::instantiate(body, &t))
}

/// `B[a / x]` for the lowest nominal `a` of the binder's type outside
/// `supp(B)`.
pub fn open_nabla(b: &Binder, body: &Formula) -> (Nominal, Formula) {
    let a = fresh_nominal(&b.ty, &body.support());
    let f = Formula::instantiate(body, &Term::nominal(a.clone()));
    (a, f)
}

fn sorted_support(f: &Formula) -> Vec<Nominal> {
    f.support().into_iter().collect()
}

// ---------------------------------------------------------------------------
// Right rules.

fn not_app(what: &str, f: &Formula) -> KernelError {
    KernelError::NotApplicable(format!("{what} does not apply to {}", formula_to_string(f)))
}

pub fn true_r(s: &Sequent) -> KResult<Vec<Sequent>> {
    match s.goal {
        Formula::True => Ok(vec![]),
        _ => Err(not_app("true-right", &s.goal)),
    }
}

pub fn and_r(s: &Sequent) -> KResult<Vec<Sequent>> {
    match &s.goal {
        Formula::And(a, b) => {
            let mut l = s.clone();
            l.goal = (**a).clone();
            let mut r = s.clone();
            r.goal = (**b).clone();
            Ok(vec![l, r])
        }
        g => Err(not_app("split", g)),
    }
}

pub fn or_r(s: &Sequent, left: bool) -> KResult<Vec<Sequent>> {
    match &s.goal {
        Formula::Or(a, b) => {
            let mut p = s.clone();
            p.goal = if left { (**a).clone() } else { (**b).clone() };
            Ok(vec![p])
        }
        g => Err(not_app(if left { "left" } else { "right" }, g)),
    }
}

pub fn imp_r(s: &Sequent) -> KResult<Vec<Sequent>> {
    match &s.goal {
        Formula::Imp(a, b) => {
            let mut p = s.clone();
            p.add_hyp((**a).clone());
            p.goal = (**b).clone();
            Ok(vec![p])
        }
        g => Err(not_app("implication-right", g)),
    }
}

pub fn forall_r(ctx: Ctx, s: &Sequent) -> KResult<Vec<Sequent>> {
    match &s.goal {
        Formula::Forall(b, body) => {
            let over = sorted_support(&s.goal);
            let (h, f) = open_raised(b, body, &over, &|n| s.name_taken(ctx.sig, n));
            let mut p = s.clone();
            p.vars.push(h);
            p.goal = f;
            Ok(vec![p])
        }
        g => Err(not_app("forall-right", g)),
    }
}

pub fn nabla_r(s: &Sequent) -> KResult<Vec<Sequent>> {
    match &s.goal {
        Formula::Nabla(b, body) => {
            let (_, f) = open_nabla(b, body);
            let mut p = s.clone();
            p.goal = f;
            Ok(vec![p])
        }
        g => Err(not_app("nabla-right", g)),
    }
}

/// `∀R` with a caller-chosen eigenvariable raised over `over`, which must
/// cover the support of the goal.
pub fn forall_r_with(ctx: Ctx, s: &Sequent, name: &str, over: &[Nominal]) -> KResult<Vec<Sequent>> {
    match &s.goal {
        Formula::Forall(b, body) => {
            if s.name_taken(ctx.sig, name) {
                return Err(KernelError::NotApplicable(format!("{name} is not fresh")));
            }
            let set: BTreeSet<&Nominal> = over.iter().collect();
            if set.len() != over.len() || s.goal.support().iter().any(|c| !set.contains(c)) {
                return Err(KernelError::NotApplicable(
                    "raising must cover the support of the goal".into(),
                ));
            }
            let h = Var::new(
                name,
                Ty::arrows(over.iter().map(|c| c.ty.clone()), b.ty.clone()),
            );
            let t = Term::app(
                Term::var(h.clone()),
                over.iter().map(|c| Term::nominal(c.clone())).collect(),
            );
            let mut p = s.clone();
            p.vars.push(h);
            p.goal = Formula::instantiate(body, &t);
            Ok(vec![p])
        }
        g => Err(not_app("forall-right", g)),
    }
}

/// `∇R` with a caller-chosen nominal constant, fresh for the goal.
pub fn nabla_r_with(s: &Sequent, a: &Nominal) -> KResult<Vec<Sequent>> {
    match &s.goal {
        Formula::Nabla(b, body) => {
            if a.ty != b.ty || s.goal.support().contains(a) {
                return Err(KernelError::NotApplicable(format!(
                    "{a} cannot instantiate the nabla-bound variable"
                )));
            }
            let mut p = s.clone();
            p.goal = Formula::instantiate(body, &Term::nominal(a.clone()));
            Ok(vec![p])
        }
        g => Err(not_app("nabla-right", g)),
    }
}

/// Checks a witness against the sequent: well typed at `ty` and built only
/// from `Σ`, constants and nominals.
pub fn check_witness(s: &Sequent, t: &Term, ty: &Ty) -> KResult<()> {
    let found = type_of(t, &[]).map_err(|e| KernelError::IllTyped(e.to_string()))?;
    if &found != ty {
        return Err(KernelError::IllTyped(format!(
            "{} has type {found}, expected {ty}",
            crate::print::term_to_string(t)
        )));
    }
    for v in terms::free_vars(t) {
        if !s.vars.contains(&v) {
            return Err(KernelError::IllTyped(format!(
                "unknown variable {}",
                v.name
            )));
        }
    }
    Ok(())
}

pub fn exists_r(s: &Sequent, t: &Term) -> KResult<Vec<Sequent>> {
    match &s.goal {
        Formula::Exists(b, body) => {
            check_witness(s, t, &b.ty)?;
            let mut p = s.clone();
            p.goal = Formula::instantiate(body, t);
            Ok(vec![p])
        }
        g => Err(not_app("exists", g)),
    }
}

// ---------------------------------------------------------------------------
// Left rules.

pub fn false_l(s: &Sequent, h: &str) -> KResult<Vec<Sequent>> {
    match s.hyp_formula(h)? {
        Formula::False => Ok(vec![]),
        f => Err(not_app("false-left", f)),
    }
}

pub fn true_l(s: &Sequent, h: &str) -> KResult<Vec<Sequent>> {
    match s.hyp_formula(h)? {
        Formula::True => {
            let mut p = s.clone();
            p.remove_hyp(h);
            Ok(vec![p])
        }
        f => Err(not_app("true-left", f)),
    }
}

pub fn and_l(s: &Sequent, h: &str) -> KResult<Vec<Sequent>> {
    match s.hyp_formula(h)?.clone() {
        Formula::And(a, b) => {
            let mut p = s.clone();
            p.remove_hyp(h);
            p.add_hyp(*a);
            p.add_hyp(*b);
            Ok(vec![p])
        }
        f => Err(not_app("and-left", &f)),
    }
}

pub fn or_l(s: &Sequent, h: &str) -> KResult<Vec<Sequent>> {
    match s.hyp_formula(h)?.clone() {
        Formula::Or(a, b) => {
            let mut l = s.clone();
            l.remove_hyp(h);
            let mut r = l.clone();
            l.add_hyp(*a);
            r.add_hyp(*b);
            Ok(vec![l, r])
        }
        f => Err(not_app("or-left", &f)),
    }
}

/// `Γ, A ⊃ B ⊢ C` from `Γ ⊢ A` and `Γ, B ⊢ C`.
pub fn imp_l(s: &Sequent, h: &str) -> KResult<Vec<Sequent>> {
    match s.hyp_formula(h)?.clone() {
        Formula::Imp(a, b) => {
            let mut l = s.clone();
            l.goal = *a;
            let mut r = s.clone();
            r.add_hyp(*b);
            Ok(vec![l, r])
        }
        f => Err(not_app("implication-left", &f)),
    }
}

pub fn forall_l(s: &Sequent, h: &str, t: &Term) -> KResult<Vec<Sequent>> {
    match s.hyp_formula(h)?.clone() {
        Formula::Forall(b, body) => {
            check_witness(s, t, &b.ty)?;
            let mut p = s.clone();
            p.add_hyp(Formula::instantiate(&body, t));
            Ok(vec![p])
        }
        f => Err(not_app("forall-left", &f)),
    }
}

pub fn exists_l(ctx: Ctx, s: &Sequent, h: &str) -> KResult<Vec<Sequent>> {
    let f = s.hyp_formula(h)?.clone();
    match &f {
        Formula::Exists(b, body) => {
            let over = sorted_support(&f);
            let (v, g) = open_raised(b, body, &over, &|n| s.name_taken(ctx.sig, n));
            let mut p = s.clone();
            p.remove_hyp(h);
            p.vars.push(v);
            p.add_hyp(g);
            Ok(vec![p])
        }
        _ => Err(not_app("exists-left", &f)),
    }
}

pub fn nabla_l(s: &Sequent, h: &str) -> KResult<Vec<Sequent>> {
    match s.hyp_formula(h)?.clone() {
        Formula::Nabla(b, body) => {
            let (_, g) = open_nabla(&b, &body);
            let mut p = s.clone();
            p.remove_hyp(h);
            p.add_hyp(g);
            Ok(vec![p])
        }
        f => Err(not_app("nabla-left", &f)),
    }
}

/// Adds formulas as hypotheses, first decomposing `∧`, `∃`, `∇`, `∨`, `⊤`
/// and `⊥` on the left. Returns the resulting premises (`⊥` closes one,
/// `∨` splits).
pub fn intro_hyps(ctx: Ctx, s: &Sequent, fs: Vec<Formula>) -> Vec<Sequent> {
    let mut out = Vec::new();
    decompose(ctx, s.clone(), fs, &mut out);
    out
}

fn decompose(ctx: Ctx, mut s: Sequent, mut pending: Vec<Formula>, out: &mut Vec<Sequent>) {
    pending.reverse();
    while let Some(f) = pending.pop() {
        match f {
            Formula::True => {}
            Formula::False => return,
            Formula::And(a, b) => {
                pending.push(*b);
                pending.push(*a);
            }
            Formula::Exists(ref b, ref body) => {
                let over = sorted_support(&f);
                let (v, g) = open_raised(b, body, &over, &|n| s.name_taken(ctx.sig, n));
                s.vars.push(v);
                pending.push(g);
            }
            Formula::Nabla(ref b, ref body) => {
                let (_, g) = open_nabla(b, body);
                pending.push(g);
            }
            Formula::Or(a, b) => {
                let rest: Vec<Formula> = pending.into_iter().rev().collect();
                let mut l = vec![*a];
                l.extend(rest.iter().cloned());
                let mut r = vec![*b];
                r.extend(rest);
                decompose(ctx, s.clone(), l, out);
                decompose(ctx, s, r, out);
                return;
            }
            other => {
                s.add_hyp(other);
            }
        }
    }
    out.push(s);
}

// ---------------------------------------------------------------------------
// Identity and cut.

/// Whether `a` and `b` are equal up to a permutation of nominal constants
/// (annotations ignored).
pub fn perm_equal(a: &Formula, b: &Formula) -> bool {
    let mut m = NomBijection::default();
    m.formula(&a.eta_normal(), &b.eta_normal(), None)
}

/// Like [`perm_equal`], but the annotations of `h` must be at least as
/// strong as those of `g` in positive positions (and the reverse in
/// negative ones), so `h` entails `g`.
pub fn perm_covers(h: &Formula, g: &Formula) -> bool {
    let mut m = NomBijection::default();
    m.formula(&h.eta_normal(), &g.eta_normal(), Some(true))
}

/// Whether an atom annotated `strong` may stand in for one annotated `weak`.
pub fn ann_covers(strong: Ann, weak: Ann) -> bool {
    match (strong, weak) {
        (_, Ann::None) => true,
        (Ann::Eq(a) | Ann::Lt(a), Ann::Eq(b)) => a == b,
        (Ann::Lt(a), Ann::Lt(b)) => a == b,
        _ => false,
    }
}

#[derive(Default)]
struct NomBijection {
    fwd: BTreeMap<Nominal, Nominal>,
    bwd: BTreeMap<Nominal, Nominal>,
}

impl NomBijection {
    fn nominal(&mut self, x: &Nominal, y: &Nominal) -> bool {
        if x.ty != y.ty {
            return false;
        }
        match (self.fwd.get(x), self.bwd.get(y)) {
            (Some(y2), Some(x2)) => y2 == y && x2 == x,
            (None, None) => {
                self.fwd.insert(x.clone(), y.clone());
                self.bwd.insert(y.clone(), x.clone());
                true
            }
            _ => false,
        }
    }

    fn head(&mut self, x: &Head, y: &Head) -> bool {
        match (x, y) {
            (Head::Nominal(a), Head::Nominal(b)) => self.nominal(a, b),
            _ => x == y,
        }
    }

    fn term(&mut self, s: &Term, t: &Term) -> bool {
        match (s.node(), t.node()) {
            (Node::Atom(h1), Node::Atom(h2)) => self.head(h1, h2),
            (Node::App(h1, a1), Node::App(h2, a2)) => {
                a1.len() == a2.len()
                    && self.head(h1, h2)
                    && a1.iter().zip(a2).all(|(x, y)| self.term(x, y))
            }
            (Node::Lam(t1, b1), Node::Lam(t2, b2)) => t1 == t2 && self.term(b1, b2),
            _ => false,
        }
    }

    /// `pol` is `None` to ignore annotations, otherwise the polarity of
    /// the current position.
    fn formula(&mut self, a: &Formula, b: &Formula, pol: Option<bool>) -> bool {
        use Formula as F;
        match (a, b) {
            (F::True, F::True) | (F::False, F::False) => true,
            (F::And(a1, a2), F::And(b1, b2)) | (F::Or(a1, a2), F::Or(b1, b2)) => {
                self.formula(a1, b1, pol) && self.formula(a2, b2, pol)
            }
            (F::Imp(a1, a2), F::Imp(b1, b2)) => {
                self.formula(a1, b1, pol.map(|p| !p)) && self.formula(a2, b2, pol)
            }
            (F::Forall(x, a1), F::Forall(y, b1))
            | (F::Exists(x, a1), F::Exists(y, b1))
            | (F::Nabla(x, a1), F::Nabla(y, b1)) => x == y && self.formula(a1, b1, pol),
            (F::Eq(s1, t1), F::Eq(s2, t2)) => self.term(s1, s2) && self.term(t1, t2),
            (F::Atom(x), F::Atom(y)) => {
                let anns = match pol {
                    None => true,
                    Some(true) => ann_covers(x.ann, y.ann),
                    Some(false) => ann_covers(y.ann, x.ann),
                };
                anns && x.pred == y.pred
                    && x.args.len() == y.args.len()
                    && x.args.iter().zip(&y.args).all(|(s, t)| self.term(s, t))
            }
            _ => false,
        }
    }
}

/// `id_π`: closes the goal if hypothesis `h` is a permutation of it.
pub fn id(s: &Sequent, h: &str) -> KResult<Vec<Sequent>> {
    let f = s.hyp_formula(h)?;
    if perm_covers(f, &s.goal) {
        Ok(vec![])
    } else {
        Err(KernelError::NotApplicable(format!(
            "hypothesis {h} does not match the goal"
        )))
    }
}

/// `Γ ⊢ C` from `Γ ⊢ F` and `Γ, F ⊢ C`.
pub fn cut(s: &Sequent, f: Formula) -> Vec<Sequent> {
    let mut l = s.clone();
    l.goal = f.clone();
    let mut r = s.clone();
    r.add_hyp(f);
    vec![l, r]
}

// ---------------------------------------------------------------------------
// Definitions.

/// One representative permutation of `ā ∪ c̄` for each placement of the
/// fresh constants `c̄`; permutations that only move `ā` among itself just
/// rename raised variables and are skipped.
pub fn placements(a: &[Nominal], cs: &[Nominal]) -> Vec<Permutation> {
    if cs.is_empty() {
        return vec![Permutation::identity()];
    }
    let all: Vec<Nominal> = cs.iter().chain(a).cloned().collect();
    let mut out = Vec::new();
    let mut chosen: Vec<Nominal> = Vec::new();
    place(a, cs, &all, &mut chosen, &mut out);
    out
}

fn place(
    a: &[Nominal],
    cs: &[Nominal],
    all: &[Nominal],
    chosen: &mut Vec<Nominal>,
    out: &mut Vec<Permutation>,
) {
    if chosen.len() == cs.len() {
        let mut pairs: Vec<(Nominal, Nominal)> =
            cs.iter().cloned().zip(chosen.iter().cloned()).collect();
        let mut rest: Vec<&Nominal> = all.iter().filter(|n| !chosen.contains(n)).collect();
        for x in a {
            let i = rest
                .iter()
                .position(|n| n.ty == x.ty)
                .expect("type counts agree");
            pairs.push((x.clone(), rest.remove(i).clone()));
        }
        if let Some(p) = Permutation::from_pairs(pairs) {
            out.push(p);
        }
        return;
    }
    let c = &cs[chosen.len()];
    for d in all {
        if d.ty == c.ty && !chosen.contains(d) {
            chosen.push(d.clone());
            place(a, cs, all, chosen, out);
            chosen.pop();
        }
    }
}

/// Marks same-predicate atoms in positive positions of an unfolded body.
pub fn annotate_body(f: &Formula, pred: &str, ann: Ann) -> Formula {
    match f {
        Formula::Atom(a) if &*a.pred == pred => f.with_ann(ann),
        Formula::Atom(_) | Formula::True | Formula::False | Formula::Eq(..) => f.clone(),
        Formula::And(a, b) => {
            Formula::and(annotate_body(a, pred, ann), annotate_body(b, pred, ann))
        }
        Formula::Or(a, b) => Formula::or(annotate_body(a, pred, ann), annotate_body(b, pred, ann)),
        Formula::Imp(a, b) => Formula::imp((**a).clone(), annotate_body(b, pred, ann)),
        Formula::Forall(x, b) => Formula::Forall(x.clone(), Box::new(annotate_body(b, pred, ann))),
        Formula::Exists(x, b) => Formula::Exists(x.clone(), Box::new(annotate_body(b, pred, ann))),
        Formula::Nabla(x, b) => Formula::Nabla(x.clone(), Box::new(annotate_body(b, pred, ann))),
    }
}

fn lookup<'a>(ctx: Ctx<'a>, pred: &str) -> KResult<&'a DefinedPred> {
    ctx.defs
        .get(pred)
        .ok_or_else(|| KernelError::NotDefined(pred.to_string()))
}

fn body_ann(def: &DefinedPred, a: &Atom) -> Option<Ann> {
    match a.ann {
        Ann::Eq(g) | Ann::Lt(g) if def.inductive() => Some(Ann::Lt(g)),
        _ => None,
    }
}

/// Raises the eigenvariables occurring in `s` or `a` over `cs`.
/// Drops a nominal `c` that occurs only as one fixed argument of some
/// eigenvariables: `∀h. ∇c. F (h c)` and `∀x. F x` are equivalent when `c`
/// occurs nowhere else, so the dependency carries no information.
fn strengthen(mut s: Sequent, cs: &[Nominal]) -> Sequent {
    for c in cs {
        let mut pos: BTreeMap<Var, BTreeSet<Option<usize>>> = BTreeMap::new();
        let mut ok = true;
        let mut visit = |t: &Term| scan_nominal_args(t, c, &mut pos, &mut ok);
        for h in &s.hyps {
            h.formula.for_each_term(&mut visit);
        }
        s.goal.for_each_term(&mut visit);
        if !ok {
            continue;
        }
        let mut map: BTreeMap<terms::Name, Term> = BTreeMap::new();
        let mut retyped: BTreeMap<terms::Name, Var> = BTreeMap::new();
        let mut consistent = true;
        for (v, ps) in &pos {
            let ks: Vec<usize> = ps.iter().flatten().copied().collect();
            match (ks.as_slice(), ps.len()) {
                ([], _) => {}
                ([k], 1) => {
                    let (tys, tgt) = v.ty.uncurry();
                    let n = tys.len();
                    let kept: Vec<Ty> = tys
                        .iter()
                        .enumerate()
                        .filter(|(j, _)| j != k)
                        .map(|(_, t)| t.clone())
                        .collect();
                    let h = Var::new(&v.name, Ty::arrows(kept, tgt));
                    let body = Term::app(
                        Term::var(h.clone()),
                        (0..n)
                            .filter(|j| j != k)
                            .map(|j| Term::bound((n - 1 - j) as u32))
                            .collect(),
                    );
                    map.insert(v.name.clone(), Term::lams(&tys, body));
                    retyped.insert(v.name.clone(), h);
                }
                _ => consistent = false,
            }
        }
        if !consistent || map.is_empty() {
            continue;
        }
        let f = |v: &Var| map.get(&v.name).cloned();
        for h in &mut s.hyps {
            h.formula = h.formula.replace_vars(&f);
        }
        s.goal = s.goal.replace_vars(&f);
        for v in &mut s.vars {
            if let Some(h) = retyped.get(&v.name) {
                *v = h.clone();
            }
        }
    }
    s
}

fn scan_nominal_args(
    t: &Term,
    c: &Nominal,
    pos: &mut BTreeMap<Var, BTreeSet<Option<usize>>>,
    ok: &mut bool,
) {
    match t.node() {
        Node::Atom(Head::Nominal(n)) if n == c => *ok = false,
        Node::Atom(Head::Var(v)) => {
            pos.entry(v.clone()).or_default().insert(None);
        }
        Node::Atom(_) => {}
        Node::App(Head::Var(v), args) => {
            let ks: Vec<usize> = args
                .iter()
                .enumerate()
                .filter(|(_, a)| matches!(terms::eta_normal(a).node(), Node::Atom(Head::Nominal(n)) if n == c))
                .map(|(k, _)| k)
                .collect();
            if ks.len() > 1 {
                *ok = false;
            }
            pos.entry(v.clone())
                .or_default()
                .insert(ks.first().copied());
            for (k, a) in args.iter().enumerate() {
                if !ks.contains(&k) {
                    scan_nominal_args(a, c, pos, ok);
                }
            }
        }
        Node::App(h, args) => {
            if matches!(h, Head::Nominal(n) if n == c) {
                *ok = false;
            }
            for a in args {
                scan_nominal_args(a, c, pos, ok);
            }
        }
        Node::Lam(_, b) => scan_nominal_args(b, c, pos, ok),
    }
}

fn raise_sequent(ctx: Ctx, s: &Sequent, a: &Atom, cs: &[Nominal]) -> (Sequent, Atom) {
    let mut occurring = s.free_vars();
    for t in &a.args {
        terms::collect_vars(t, &mut occurring);
    }
    let mut map: BTreeMap<terms::Name, Term> = BTreeMap::new();
    let mut new_vars = Vec::new();
    let mut chosen: Vec<String> = Vec::new();
    for v in &s.vars {
        if !occurring.contains(v) {
            continue;
        }
        let name = fresh_name(&v.name, &|n| {
            s.name_taken(ctx.sig, n) || chosen.iter().any(|c| c == n)
        });
        chosen.push(name.clone());
        let h = Var::new(
            &name,
            Ty::arrows(cs.iter().map(|c| c.ty.clone()), v.ty.clone()),
        );
        map.insert(
            v.name.clone(),
            Term::app(
                Term::var(h.clone()),
                cs.iter().map(|c| Term::nominal(c.clone())).collect(),
            ),
        );
        new_vars.push(h);
    }
    let f = |v: &Var| map.get(&v.name).cloned();
    let s2 = Sequent {
        vars: new_vars,
        hyps: s
            .hyps
            .iter()
            .map(|h| Hyp {
                name: h.name.clone(),
                formula: h.formula.replace_vars(&f),
            })
            .collect(),
        goal: s.goal.replace_vars(&f),
        next_hyp: s.next_hyp,
    };
    let a2 = Atom {
        pred: a.pred.clone(),
        args: a.args.iter().map(|t| terms::replace_vars(t, &f)).collect(),
        ann: a.ann,
    };
    (s2, a2)
}

fn used_names(ctx: Ctx, s: &Sequent) -> Vec<terms::Name> {
    let mut out: Vec<terms::Name> = s.vars.iter().map(|v| v.name.clone()).collect();
    out.extend(ctx.sig.consts().map(|(n, _)| n.clone()));
    out
}

/// Unfolding an annotated goal: `@` makes recursive occurrences `*`; a `*`
/// goal cannot be unfolded.
fn right_ann(def: &DefinedPred, a: &Atom) -> KResult<Option<Ann>> {
    match a.ann {
        Ann::None => Ok(None),
        _ if !def.inductive() => Ok(None),
        Ann::Eq(g) => Ok(Some(Ann::Lt(g))),
        Ann::Lt(_) => Err(KernelError::NotApplicable(format!(
            "cannot unfold {}: its measure is only known to be smaller",
            a.pred
        ))),
    }
}

/// The cases of `defL` on atom `a`, with `a` already removed from `s`.
/// Each case is a premise sequent together with the unfolded body, which
/// the caller adds as a hypothesis.
pub fn def_left_cases(ctx: Ctx, s: &Sequent, a: &Atom) -> KResult<Vec<(Sequent, Formula)>> {
    Ok(def_left_cases_indexed(ctx, s, a)?
        .into_iter()
        .map(|(_, p, b)| (p, b))
        .collect())
}

/// `def_left_cases` with the index of the clause behind each case.
pub fn def_left_cases_indexed(
    ctx: Ctx,
    s: &Sequent,
    a: &Atom,
) -> KResult<Vec<(usize, Sequent, Formula)>> {
    let def = lookup(ctx, &a.pred)?;
    let ann = body_ann(def, a);
    let mut a_sup = BTreeSet::new();
    for t in &a.args {
        terms::collect_support(t, &mut a_sup);
    }
    let a_sup: Vec<Nominal> = a_sup.into_iter().collect();
    let mut seq_sup = s.support();
    seq_sup.extend(a_sup.iter().cloned());

    let mut out: Vec<(usize, Sequent, Formula)> = Vec::new();
    for (ci, clause) in def.clauses.iter().enumerate() {
        let mut avoid = seq_sup.clone();
        let mut cs = Vec::new();
        for z in &clause.nabla {
            let c = fresh_nominal(&z.ty, &avoid);
            avoid.insert(c.clone());
            cs.push(c);
        }
        let (s1, a1) = if cs.is_empty() {
            (s.clone(), a.clone())
        } else {
            raise_sequent(ctx, s, a, &cs)
        };
        let rc = raise_clause(clause, &a_sup, &|n| s1.name_taken(ctx.sig, n));
        let (head, body) = rc.with_nominals(&cs);
        for pi in placements(&a_sup, &cs) {
            let mut st = UnifState::new(used_names(ctx, &s1));
            for v in s1.vars.iter().chain(&rc.vars) {
                st.add_flex(v.clone(), FlexInfo::default());
            }
            let eqs: Vec<(Term, Term)> = head
                .iter()
                .map(|t| pi.apply(t))
                .zip(a1.args.iter().cloned())
                .collect();
            match st.unify_all(&eqs) {
                Ok(()) => {}
                Err(UnifyError::NoSolution) => continue,
                Err(e) => return Err(e.into()),
            }
            let theta = st.into_subst();
            let mut b = body.permute(&pi);
            if let Some(ann) = ann {
                b = annotate_body(&b, &a.pred, ann);
            }
            let b = theta.apply_formula(&b);
            let mut base = s1.clone();
            base.vars.extend(rc.vars.iter().cloned());
            let mut prem = base.apply_subst(&theta);
            // keep only raised clause variables that survive in the body
            let body_vars = b.free_vars();
            let seq_vars = prem.free_vars();
            prem.vars
                .retain(|v| !rc.vars.contains(v) || body_vars.contains(v) || seq_vars.contains(v));
            for v in body_vars {
                if !prem.has_var(&v.name) {
                    prem.vars.push(v);
                }
            }
            // The body joins the sequent for the strengthening check.
            let mut joined = prem.clone();
            joined.hyps.push(Hyp {
                name: String::new(),
                formula: b.clone(),
            });
            let mut joined = strengthen(joined, &cs);
            let b = joined.hyps.pop().expect("body").formula;
            let prem = joined;
            if !out.iter().any(|(_, p, f)| p == &prem && f == &b) {
                out.push((ci, prem, b));
            }
        }
    }
    Ok(out)
}

/// `defL` on hypothesis `h`: one premise per case, with the body added as
/// a fresh hypothesis.
pub fn def_left(ctx: Ctx, s: &Sequent, h: &str) -> KResult<Vec<Sequent>> {
    let a = match s.hyp_formula(h)? {
        Formula::Atom(a) => a.clone(),
        f => return Err(not_app("unfolding", f)),
    };
    let mut rest = s.clone();
    rest.remove_hyp(h);
    Ok(def_left_cases(ctx, &rest, &a)?
        .into_iter()
        .map(|(mut p, b)| {
            p.add_hyp(b);
            p
        })
        .collect())
}

/// One way of unfolding a goal atom with `defR`.
#[derive(Clone, Debug)]
pub struct DefRightAlt {
    pub clause: usize,
    pub perm: Permutation,
    pub state: UnifState,
    /// Body instance, with the solved substitution applied.
    pub body: Formula,
    /// Raised clause variables still open in the body.
    pub open: Vec<Var>,
    /// Instance of each universal clause variable, before the substitution
    /// in `state` is applied.
    pub args: Vec<Term>,
    /// Instances of the clause's `∇` variables.
    pub cs: Vec<Nominal>,
}

/// Every `(clause, π, θ)` making the goal atom an instance of a clause
/// head. `st` carries the flexible variables of the goal (none for a plain
/// sequent); `avoid` are nominals the fresh `c̄` must not clash with;
/// `extra_sup` are nominals open logic variables may still introduce.
/// Alternatives hitting a non-pattern problem are dropped when `lenient`
/// and reported otherwise.
pub fn def_right_alts(
    ctx: Ctx,
    st: &UnifState,
    a: &Atom,
    avoid: &BTreeSet<Nominal>,
    extra_sup: &BTreeSet<Nominal>,
    lenient: bool,
) -> KResult<Vec<DefRightAlt>> {
    let def = lookup(ctx, &a.pred)?;
    let ann = right_ann(def, a)?;
    let mut sup = extra_sup.clone();
    for t in &a.args {
        terms::collect_support(t, &mut sup);
    }
    let a_sup: Vec<Nominal> = sup.iter().cloned().collect();
    let mut out = Vec::new();
    for (ci, clause) in def.clauses.iter().enumerate() {
        let mut av: BTreeSet<Nominal> = avoid.union(&sup).cloned().collect();
        let mut cs = Vec::new();
        for z in &clause.nabla {
            let c = fresh_nominal(&z.ty, &av);
            av.insert(c.clone());
            cs.push(c);
        }
        let rc = raise_clause(clause, &a_sup, &|n| {
            st.is_used(n) || ctx.sig.const_ty(n).is_some() || is_nominal_name(n)
        });
        let (head, body) = rc.with_nominals(&cs);
        for pi in placements(&a_sup, &cs) {
            let mut st2 = st.clone();
            for v in &rc.vars {
                st2.add_flex(v.clone(), FlexInfo::default());
            }
            let eqs: Vec<(Term, Term)> = head
                .iter()
                .map(|t| pi.apply(t))
                .zip(a.args.iter().cloned())
                .collect();
            match st2.unify_all(&eqs) {
                Ok(()) => {}
                Err(UnifyError::NoSolution) => continue,
                Err(UnifyError::NonPattern(_)) if lenient => continue,
                Err(e) => return Err(e.into()),
            }
            let mut b = body.permute(&pi);
            if let Some(ann) = ann {
                b = annotate_body(&b, &a.pred, ann);
            }
            let b = st2.apply_formula(&b);
            let fv = b.free_vars();
            let open: Vec<Var> = fv
                .into_iter()
                .filter(|v| st2.is_flex(&v.name) && !st.is_flex(&v.name))
                .collect();
            let args = rc
                .vars
                .iter()
                .map(|h| {
                    Term::app(
                        Term::var(h.clone()),
                        a_sup.iter().map(|c| Term::nominal(c.clone())).collect(),
                    )
                })
                .collect();
            out.push(DefRightAlt {
                clause: ci,
                perm: pi,
                state: st2,
                body: b,
                open,
                args,
                cs: cs.clone(),
            });
        }
    }
    Ok(out)
}

/// `defR` for a plain sequent: the first clause (or the given one) whose
/// head matches the goal.
pub fn def_right(ctx: Ctx, s: &Sequent, clause: Option<usize>) -> KResult<Vec<Sequent>> {
    let a = match &s.goal {
        Formula::Atom(a) => a.clone(),
        g => return Err(not_app("unfold", g)),
    };
    let st = UnifState::new(used_names(ctx, s));
    let alts = def_right_alts(ctx, &st, &a, &s.support(), &BTreeSet::new(), false)?;
    let alt = alts
        .into_iter()
        .filter(|alt| clause.is_none_or(|c| c == alt.clause))
        .find(|alt| alt.open.is_empty())
        .ok_or_else(|| {
            KernelError::NotApplicable(format!(
                "no clause of {} matches {}",
                a.pred,
                formula_to_string(&s.goal)
            ))
        })?;
    let mut p = s.clone();
    p.goal = alt.body;
    Ok(vec![p])
}

/// `defR` with every choice explicit: clause `clause` of the goal's
/// predicate, its universal variables instantiated by `args`, its `∇`
/// variables by the distinct constants `cs` (which `args` may not
/// mention), and `perm` applied to the instance.
pub fn def_right_inst(
    ctx: Ctx,
    s: &Sequent,
    clause: usize,
    args: &[Term],
    cs: &[Nominal],
    perm: &Permutation,
) -> KResult<Vec<Sequent>> {
    let a = match &s.goal {
        Formula::Atom(a) => a.clone(),
        g => return Err(not_app("unfold", g)),
    };
    let def = lookup(ctx, &a.pred)?;
    let ann = right_ann(def, &a)?;
    let c = def.clauses.get(clause).ok_or_else(|| {
        KernelError::NotApplicable(format!("{} has no clause {}", a.pred, clause + 1))
    })?;
    let bad = |m: String| Err(KernelError::NotApplicable(m));
    if args.len() != c.univ.len() || cs.len() != c.nabla.len() {
        return bad("wrong number of clause instances".into());
    }
    let cset: BTreeSet<&Nominal> = cs.iter().collect();
    if cset.len() != cs.len() {
        return bad("nabla instances must be distinct".into());
    }
    let mut map: BTreeMap<terms::Name, Term> = BTreeMap::new();
    for (v, t) in c.univ.iter().zip(args) {
        check_witness(s, t, &v.ty)?;
        if terms::support(t).iter().any(|n| cset.contains(n)) {
            return bad(format!(
                "{} may not depend on the head's nabla variables",
                v.name
            ));
        }
        map.insert(v.name.clone(), t.clone());
    }
    for (z, n) in c.nabla.iter().zip(cs) {
        if z.ty != n.ty {
            return bad(format!("{n} has the wrong type"));
        }
        map.insert(z.name.clone(), Term::nominal(n.clone()));
    }
    let f = |v: &Var| map.get(&v.name).cloned();
    let head: Vec<Term> = c
        .head
        .iter()
        .map(|t| terms::eta_normal(&perm.apply(&terms::replace_vars(t, &f))))
        .collect();
    if head != a.args.iter().map(terms::eta_normal).collect::<Vec<_>>() {
        return bad(format!(
            "clause {} of {} does not match {}",
            clause + 1,
            a.pred,
            formula_to_string(&s.goal)
        ));
    }
    let mut body = c.body.replace_vars(&f).permute(perm);
    if let Some(ann) = ann {
        body = annotate_body(&body, &a.pred, ann);
    }
    let mut p = s.clone();
    p.goal = body;
    Ok(vec![p])
}

// ---------------------------------------------------------------------------
// Equality.

pub fn eq_left(ctx: Ctx, s: &Sequent, h: &str) -> KResult<Vec<Sequent>> {
    let (l, r) = match s.hyp_formula(h)? {
        Formula::Eq(l, r) => (l.clone(), r.clone()),
        f => return Err(not_app("equality-left", f)),
    };
    let mut rest = s.clone();
    rest.remove_hyp(h);
    let mut st = UnifState::new(used_names(ctx, &rest));
    for v in &rest.vars {
        st.add_flex(v.clone(), FlexInfo::default());
    }
    match st.unify(&l, &r) {
        Ok(()) => Ok(vec![rest.apply_subst(&st.into_subst())]),
        Err(UnifyError::NoSolution) => Ok(vec![]),
        Err(e) => Err(e.into()),
    }
}

pub fn eq_right(ctx: Ctx, s: &Sequent) -> KResult<Vec<Sequent>> {
    match &s.goal {
        Formula::Eq(l, r) => {
            let mut st = UnifState::new(used_names(ctx, s));
            match st.unify(l, r) {
                Ok(()) => Ok(vec![]),
                Err(_) => Err(KernelError::NotApplicable(format!(
                    "{} is not an instance of reflexivity",
                    formula_to_string(&s.goal)
                ))),
            }
        }
        g => Err(not_app("equality-right", g)),
    }
}

// ---------------------------------------------------------------------------
// Induction.

/// Induction on the `k`-th premise (1-based) of the goal `Q x̄. P1 -> ... ->
/// C` where Q is a prefix of ∀ and ∇. Adds the hypothesis `IH` (premise
/// marked `*`) and marks the goal's premise `@`.
pub fn induction(ctx: Ctx, s: &Sequent, k: usize) -> KResult<Vec<Sequent>> {
    let g = s.max_gen() + 1;
    let mut target: Option<Atom> = None;
    let ih = mark_premise(&s.goal, k, Ann::Lt(g), &mut target)?;
    let goal = mark_premise(&s.goal, k, Ann::Eq(g), &mut None)?;
    let a = target.expect("premise located");
    let def = lookup(ctx, &a.pred).map_err(|_| KernelError::NotInductive(a.pred.to_string()))?;
    if !def.inductive() {
        return Err(KernelError::NotInductive(a.pred.to_string()));
    }
    let mut p = s.clone();
    p.add_named_hyp("IH", ih);
    p.goal = goal;
    Ok(vec![p])
}

fn mark_premise(f: &Formula, k: usize, ann: Ann, found: &mut Option<Atom>) -> KResult<Formula> {
    match f {
        Formula::Forall(b, body) => Ok(Formula::Forall(
            b.clone(),
            Box::new(mark_premise(body, k, ann, found)?),
        )),
        Formula::Nabla(b, body) => Ok(Formula::Nabla(
            b.clone(),
            Box::new(mark_premise(body, k, ann, found)?),
        )),
        Formula::Imp(a, rest) if k == 1 => match &**a {
            Formula::Atom(at) => {
                *found = Some(at.clone());
                Ok(Formula::imp(a.with_ann(ann), (**rest).clone()))
            }
            other => Err(KernelError::NotApplicable(format!(
                "induction target {} is not an atom",
                formula_to_string(other)
            ))),
        },
        Formula::Imp(a, rest) if k > 1 => Ok(Formula::imp(
            (**a).clone(),
            mark_premise(rest, k - 1, ann, found)?,
        )),
        _ => Err(KernelError::NotApplicable(format!(
            "the goal has no premise {}",
            k
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::definitions::{Clause, ClauseDecl, PredDecl};

    fn i() -> Ty {
        Ty::base("i")
    }

    fn n(k: u32) -> Nominal {
        Nominal::new(k, i())
    }

    fn store() -> (Signature, DefStore) {
        let mut sig = Signature::new();
        sig.add_kind("i");
        sig.add_const("app", Ty::arrows([i(), i()], i()));
        let mut defs = DefStore::new();
        let x = Var::new("x", i());
        let e = Var::new("E", i());
        defs.add_definition(
            vec![PredDecl {
                name: "name".into(),
                arg_tys: vec![i()],
            }],
            vec![ClauseDecl {
                pred: "name".into(),
                clause: Clause {
                    univ: vec![],
                    nabla: vec![x.clone()],
                    head: vec![Term::var(x.clone())],
                    body: Formula::True,
                },
            }],
            false,
        )
        .unwrap();
        defs.add_definition(
            vec![PredDecl {
                name: "fresh".into(),
                arg_tys: vec![i(), i()],
            }],
            vec![ClauseDecl {
                pred: "fresh".into(),
                clause: Clause {
                    univ: vec![e.clone()],
                    nabla: vec![x.clone()],
                    head: vec![Term::var(x), Term::var(e)],
                    body: Formula::True,
                },
            }],
            false,
        )
        .unwrap();
        (sig, defs)
    }

    fn seq_with(vars: Vec<Var>, hyp: Formula, goal: Formula) -> Sequent {
        let mut s = Sequent::new(goal);
        s.vars = vars;
        s.add_hyp(hyp);
        s
    }

    #[test]
    fn case_name_of_eigenvariable_gives_nominal() {
        let (sig, defs) = store();
        let ctx = Ctx {
            sig: &sig,
            defs: &defs,
        };
        let x = Var::new("X", i());
        let s = seq_with(
            vec![x.clone()],
            Formula::atom("name", vec![Term::var(x)]),
            Formula::False,
        );
        let ps = def_left(ctx, &s, "H1").unwrap();
        assert_eq!(ps.len(), 1);
        assert!(ps[0].goal == Formula::False);
        assert_eq!(ps[0].support().len(), 0); // goal and hyps carry no nominal: body is ⊤
        assert!(ps[0].vars.is_empty());
    }

    #[test]
    fn case_name_of_application_closes() {
        let (sig, defs) = store();
        let ctx = Ctx {
            sig: &sig,
            defs: &defs,
        };
        let t = Term::app(
            Term::cnst("app", Ty::arrows([i(), i()], i())),
            vec![Term::nominal(n(1)), Term::nominal(n(2))],
        );
        let s = seq_with(vec![], Formula::atom("name", vec![t]), Formula::False);
        assert!(def_left(ctx, &s, "H1").unwrap().is_empty());
    }

    #[test]
    fn raising_whole_sequent_keeps_dependency() {
        // name X |- fresh X Y must stay unprovable: after case, Y may be n1
        let (sig, defs) = store();
        let ctx = Ctx {
            sig: &sig,
            defs: &defs,
        };
        let x = Var::new("X", i());
        let y = Var::new("Y", i());
        let s = seq_with(
            vec![x.clone(), y.clone()],
            Formula::atom("name", vec![Term::var(x.clone())]),
            Formula::atom("fresh", vec![Term::var(x), Term::var(y)]),
        );
        let ps = def_left(ctx, &s, "H1").unwrap();
        assert_eq!(ps.len(), 1);
        // goal is fresh n1 (Y1 n1): unfold must fail
        assert!(def_right(ctx, &ps[0], None).is_err());
    }

    #[test]
    fn fresh_goal_cases() {
        let (sig, defs) = store();
        let ctx = Ctx {
            sig: &sig,
            defs: &defs,
        };
        let e = Var::new("E", i());
        let mut s = Sequent::new(Formula::atom(
            "fresh",
            vec![Term::nominal(n(1)), Term::var(e.clone())],
        ));
        s.vars.push(e);
        assert!(def_right(ctx, &s, None).unwrap()[0].goal == Formula::True);
        let bad = Sequent::new(Formula::atom(
            "fresh",
            vec![Term::nominal(n(1)), Term::nominal(n(1))],
        ));
        assert!(def_right(ctx, &bad, None).is_err());
        let good = Sequent::new(Formula::atom("name", vec![Term::nominal(n(1))]));
        assert!(def_right(ctx, &good, None).is_ok());
    }

    #[test]
    fn fresh_hyp_removes_dependency() {
        let (sig, defs) = store();
        let ctx = Ctx {
            sig: &sig,
            defs: &defs,
        };
        // E : i -> i raised over n1, hyp fresh n1 (E n1)
        let e = Var::new("E", Ty::arrow(i(), i()));
        let en1 = Term::app1(Term::var(e.clone()), Term::nominal(n(1)));
        let s = seq_with(
            vec![e],
            Formula::atom("fresh", vec![Term::nominal(n(1)), en1.clone()]),
            Formula::Eq(en1.clone(), en1),
        );
        let ps = def_left(ctx, &s, "H1").unwrap();
        assert_eq!(ps.len(), 1);
        // the goal no longer mentions n1
        assert!(!ps[0].goal.support().contains(&n(1)));
    }

    #[test]
    fn identity_up_to_permutation() {
        let p = |a: u32, b: u32| Formula::atom("p", vec![Term::nominal(n(a)), Term::nominal(n(b))]);
        assert!(perm_equal(&p(1, 2), &p(2, 1)));
        assert!(perm_equal(&p(1, 2), &p(3, 4)));
        assert!(!perm_equal(&p(1, 1), &p(1, 2)));
    }

    #[test]
    fn equality_rules() {
        let (sig, defs) = store();
        let ctx = Ctx {
            sig: &sig,
            defs: &defs,
        };
        let app = |a, b| Term::app(Term::cnst("app", Ty::arrows([i(), i()], i())), vec![a, b]);
        let x = Var::new("X", i());
        let s = seq_with(
            vec![x.clone()],
            Formula::Eq(
                Term::var(x.clone()),
                app(Term::nominal(n(1)), Term::nominal(n(1))),
            ),
            Formula::True,
        );
        // X cannot contain n1
        assert!(eq_left(ctx, &s, "H1").unwrap().is_empty());
        let t = Term::cnst("c", i());
        let s = seq_with(
            vec![x.clone()],
            Formula::Eq(Term::var(x.clone()), t.clone()),
            Formula::Eq(Term::var(x), t.clone()),
        );
        let ps = eq_left(ctx, &s, "H1").unwrap();
        assert_eq!(ps.len(), 1);
        assert!(eq_right(ctx, &ps[0]).unwrap().is_empty());
        let g = Sequent::new(Formula::Eq(Term::nominal(n(1)), Term::nominal(n(1))));
        assert!(eq_right(ctx, &g).unwrap().is_empty());
    }

    #[test]
    fn placement_counts() {
        assert_eq!(placements(&[n(1)], &[n(2)]).len(), 2);
        assert_eq!(placements(&[n(1), n(2)], &[n(3)]).len(), 3);
        assert_eq!(placements(&[], &[n(1), n(2)]).len(), 2);
        assert_eq!(placements(&[n(1)], &[]).len(), 1);
    }
}
