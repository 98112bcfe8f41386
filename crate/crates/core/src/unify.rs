//! Higher-order pattern unification with nominal constants.
//!
//! A variable is *flexible* when it has an entry in the unification state;
//! every other variable, constant and nominal constant is rigid. Each
//! flexible variable carries the set of nominal constants its
//! instantiation may mention (its raising support) and the rigid variables
//! it may not mention (those introduced after it).
//!
//! Problems outside the pattern fragment are postponed; if they are still
//! outside the fragment once everything else is solved the result is
//! [`UnifyError::NonPattern`], never a guess.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::formula::{Atom, Formula};
use crate::terms::{
    self, fresh_name, occurs_var, replace_vars, shift, type_of, Head, Name, Node, Nominal, Term,
    Ty, Var,
};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum UnifyError {
    #[error("no unifier")]
    NoSolution,
    #[error("not a higher-order pattern: {0}")]
    NonPattern(String),
    #[error("malformed unification problem: {0}")]
    Malformed(String),
}

type UResult<T> = Result<T, UnifyError>;

/// Constraints on what a flexible variable may be instantiated with.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct FlexInfo {
    /// Nominal constants the instantiation may contain.
    pub support: BTreeSet<Nominal>,
    /// Rigid variables the instantiation may not contain.
    pub forbidden: BTreeSet<Name>,
}

impl FlexInfo {
    pub fn with_support(support: BTreeSet<Nominal>) -> FlexInfo {
        FlexInfo {
            support,
            forbidden: BTreeSet::new(),
        }
    }
}

/// Map from eigenvariable to its permitted support.
pub type SupportEnv = BTreeMap<Var, BTreeSet<Nominal>>;

/// Idempotent, type-preserving map from variables to terms.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Substitution {
    map: BTreeMap<Name, (Var, Term)>,
}

impl Substitution {
    pub fn new() -> Substitution {
        Substitution::default()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn get(&self, name: &str) -> Option<&Term> {
        self.map.get(name).map(|(_, t)| t)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Var, &Term)> {
        self.map.values().map(|(v, t)| (v, t))
    }

    pub fn domain(&self) -> impl Iterator<Item = &Var> {
        self.map.values().map(|(v, _)| v)
    }

    pub fn apply(&self, t: &Term) -> Term {
        if self.map.is_empty() {
            return t.clone();
        }
        replace_vars(t, &|v| self.map.get(&v.name).map(|(_, t)| t.clone()))
    }

    pub fn apply_formula(&self, f: &Formula) -> Formula {
        if self.map.is_empty() {
            return f.clone();
        }
        f.replace_vars(&|v| self.map.get(&v.name).map(|(_, t)| t.clone()))
    }

    /// Adds `v := t` (with `t` already normalized against `self`) and keeps
    /// the substitution idempotent.
    fn bind(&mut self, v: Var, t: Term) {
        let single = |u: &Var| (u.name == v.name).then(|| t.clone());
        for (_, rhs) in self.map.values_mut() {
            if occurs_var(rhs, &v.name) {
                *rhs = replace_vars(rhs, &single);
            }
        }
        self.map.insert(v.name.clone(), (v, t));
    }
}

/// A unification problem in the sense of the public [`unify_pattern`]
/// entry point.
#[derive(Clone, Debug, Default)]
pub struct UnifProblem {
    pub equations: Vec<(Term, Term)>,
    /// Flexible variables and their permitted support.
    pub support: SupportEnv,
    /// Names already in use (the ambient signature); fresh variables avoid
    /// them.
    pub signature: BTreeSet<Name>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum UnifOutcome {
    Mgu(Substitution),
    NoSolution,
    NonPattern(String),
}

/// Solves a standalone pattern problem.
pub fn unify_pattern(p: &UnifProblem) -> Result<UnifOutcome, UnifyError> {
    for (s, t) in &p.equations {
        let ts = type_of(s, &[]).map_err(|e| UnifyError::Malformed(e.to_string()))?;
        let tt = type_of(t, &[]).map_err(|e| UnifyError::Malformed(e.to_string()))?;
        if ts != tt {
            return Err(UnifyError::Malformed(format!(
                "equation {s} = {t} relates types {ts} and {tt}"
            )));
        }
    }
    let mut st = UnifState::new(p.signature.iter().cloned());
    for (v, sup) in &p.support {
        st.add_flex(v.clone(), FlexInfo::with_support(sup.clone()));
    }
    Ok(match st.unify_all(&p.equations) {
        Ok(()) => UnifOutcome::Mgu(st.subst),
        Err(UnifyError::NoSolution) => UnifOutcome::NoSolution,
        Err(UnifyError::NonPattern(m)) => UnifOutcome::NonPattern(m),
        Err(e) => return Err(e),
    })
}

/// Result of raising a variable over nominal constants.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Raised {
    pub var: Var,
    pub term: Term,
}

/// Replaces `v` by `h c1 ... cn` for a fresh `h` of the arrowed type.
/// Raising over nothing returns `v` itself.
pub fn raise_over(v: &Var, cs: &[Nominal], taken: &dyn Fn(&str) -> bool) -> Raised {
    if cs.is_empty() {
        return Raised {
            var: v.clone(),
            term: Term::var(v.clone()),
        };
    }
    let name = fresh_name(&v.name, taken);
    let ty = Ty::arrows(cs.iter().map(|c| c.ty.clone()), v.ty.clone());
    let h = Var::new(&name, ty);
    let term = Term::app(
        Term::var(h.clone()),
        cs.iter().map(|c| Term::nominal(c.clone())).collect(),
    );
    Raised { var: h, term }
}

/// Mutable unification state: flexible variables, the accumulated
/// substitution and the names in use.
#[derive(Clone, Debug, Default)]
pub struct UnifState {
    flex: BTreeMap<Name, FlexInfo>,
    subst: Substitution,
    used: BTreeSet<Name>,
}

/// An argument of a flexible head in the pattern fragment.
#[derive(Clone, Debug, PartialEq, Eq)]
enum PatArg {
    /// Loose bound index relative to the equation's context.
    Bound(u32),
    Nominal(Nominal),
}

impl UnifState {
    pub fn new(used: impl IntoIterator<Item = Name>) -> UnifState {
        UnifState {
            flex: BTreeMap::new(),
            subst: Substitution::new(),
            used: used.into_iter().collect(),
        }
    }

    pub fn add_flex(&mut self, v: Var, info: FlexInfo) {
        self.used.insert(v.name.clone());
        self.flex.insert(v.name.clone(), info);
    }

    pub fn mark_used(&mut self, name: Name) {
        self.used.insert(name);
    }

    pub fn is_used(&self, name: &str) -> bool {
        self.used.contains(name)
    }

    pub fn is_flex(&self, name: &str) -> bool {
        self.flex.contains_key(name) && self.subst.get(name).is_none()
    }

    pub fn flex_info(&self, name: &str) -> Option<&FlexInfo> {
        self.flex.get(name)
    }

    /// Forbids every still-open flexible variable from mentioning `rigid`.
    pub fn forbid_for_all(&mut self, rigid: &Name) {
        for info in self.flex.values_mut() {
            info.forbidden.insert(rigid.clone());
        }
    }

    pub fn subst(&self) -> &Substitution {
        &self.subst
    }

    pub fn into_subst(self) -> Substitution {
        self.subst
    }

    pub fn apply(&self, t: &Term) -> Term {
        self.subst.apply(t)
    }

    pub fn apply_formula(&self, f: &Formula) -> Formula {
        self.subst.apply_formula(f)
    }

    /// Flexible variables that are still unbound.
    pub fn open_vars(&self) -> impl Iterator<Item = (&Name, &FlexInfo)> {
        self.flex
            .iter()
            .filter(|(n, _)| self.subst.get(n).is_none())
    }

    pub fn fresh_var(&mut self, hint: &str, ty: Ty, info: FlexInfo) -> Var {
        let base = if hint.is_empty() || hint.starts_with(|c: char| !c.is_alphabetic()) {
            "U"
        } else {
            hint
        };
        let name = fresh_name(base, &|n| self.used.contains(n));
        let v = Var::new(&name, ty);
        self.add_flex(v.clone(), info);
        v
    }

    /// Solves all equations, postponing those outside the pattern fragment
    /// until no further progress is possible.
    pub fn unify_all(&mut self, eqs: &[(Term, Term)]) -> UResult<()> {
        let mut pending: Vec<(Term, Term)> = eqs.to_vec();
        loop {
            let mut deferred = Vec::new();
            let mut last_msg = None;
            let before = pending.len();
            for (s, t) in pending {
                let mut snapshot = self.clone();
                match snapshot.unify(&s, &t) {
                    Ok(()) => *self = snapshot,
                    Err(UnifyError::NonPattern(m)) => {
                        last_msg = Some(m);
                        deferred.push((s, t));
                    }
                    Err(e) => return Err(e),
                }
            }
            if deferred.is_empty() {
                return Ok(());
            }
            if deferred.len() == before {
                return Err(UnifyError::NonPattern(last_msg.unwrap_or_default()));
            }
            pending = deferred;
        }
    }

    pub fn unify(&mut self, s: &Term, t: &Term) -> UResult<()> {
        self.unify_in(s, t, &mut Vec::new())
    }

    /// Structural unification of two formulas (binders must line up).
    pub fn unify_formulas(&mut self, a: &Formula, b: &Formula) -> UResult<()> {
        self.unify_formulas_in(a, b, &mut Vec::new())
    }

    fn unify_formulas_in(&mut self, a: &Formula, b: &Formula, ctx: &mut Vec<Ty>) -> UResult<()> {
        use Formula as F;
        match (a, b) {
            (F::True, F::True) | (F::False, F::False) => Ok(()),
            (F::And(a1, a2), F::And(b1, b2))
            | (F::Or(a1, a2), F::Or(b1, b2))
            | (F::Imp(a1, a2), F::Imp(b1, b2)) => {
                self.unify_formulas_in(a1, b1, ctx)?;
                self.unify_formulas_in(a2, b2, ctx)
            }
            (F::Forall(x, a1), F::Forall(y, b1))
            | (F::Exists(x, a1), F::Exists(y, b1))
            | (F::Nabla(x, a1), F::Nabla(y, b1)) => {
                if x.ty != y.ty {
                    return Err(UnifyError::NoSolution);
                }
                ctx.push(x.ty.clone());
                let r = self.unify_formulas_in(a1, b1, ctx);
                ctx.pop();
                r
            }
            (F::Eq(s1, t1), F::Eq(s2, t2)) => {
                self.unify_in(s1, s2, ctx)?;
                self.unify_in(t1, t2, ctx)
            }
            (
                F::Atom(Atom {
                    pred: p, args: xs, ..
                }),
                F::Atom(Atom {
                    pred: q, args: ys, ..
                }),
            ) => {
                if p != q || xs.len() != ys.len() {
                    return Err(UnifyError::NoSolution);
                }
                for (x, y) in xs.iter().zip(ys) {
                    self.unify_in(x, y, ctx)?;
                }
                Ok(())
            }
            _ => Err(UnifyError::NoSolution),
        }
    }

    fn unify_in(&mut self, s: &Term, t: &Term, ctx: &mut Vec<Ty>) -> UResult<()> {
        let s = self.apply(s);
        let t = self.apply(t);
        if s == t {
            return Ok(());
        }
        match (s.node(), t.node()) {
            (Node::Lam(ty, b1), Node::Lam(_, b2)) => {
                ctx.push(ty.clone());
                let r = self.unify_in(b1, b2, ctx);
                ctx.pop();
                r
            }
            (Node::Lam(ty, b1), _) => {
                let expanded = Term::app1(shift(&t, 1, 0), Term::bound(0));
                ctx.push(ty.clone());
                let r = self.unify_in(b1, &expanded, ctx);
                ctx.pop();
                r
            }
            (_, Node::Lam(ty, b2)) => {
                let expanded = Term::app1(shift(&s, 1, 0), Term::bound(0));
                ctx.push(ty.clone());
                let r = self.unify_in(&expanded, b2, ctx);
                ctx.pop();
                r
            }
            _ => {
                let (h1, a1) = s.spine().unwrap();
                let (h2, a2) = t.spine().unwrap();
                let f1 = self.flex_head(h1);
                let f2 = self.flex_head(h2);
                match (f1, f2) {
                    (None, None) => {
                        if h1 != h2 || a1.len() != a2.len() {
                            return Err(UnifyError::NoSolution);
                        }
                        for (x, y) in a1.iter().zip(a2) {
                            self.unify_in(x, y, ctx)?;
                        }
                        Ok(())
                    }
                    (Some(v), None) => self.flex_rigid(&v, a1, &t, ctx),
                    (None, Some(v)) => self.flex_rigid(&v, a2, &s, ctx),
                    (Some(v), Some(w)) if v.name == w.name => self.flex_same(&v, a1, a2, ctx),
                    (Some(v), Some(w)) => self.flex_flex(&v, a1, &w, a2, ctx),
                }
            }
        }
    }

    fn flex_head(&self, h: &Head) -> Option<Var> {
        match h {
            Head::Var(v) if self.is_flex(&v.name) => Some(v.clone()),
            _ => None,
        }
    }

    fn info(&self, v: &Var) -> FlexInfo {
        self.flex.get(&v.name).cloned().unwrap_or_default()
    }

    /// Checks the pattern condition for the arguments of `v`.
    fn pattern_args(&self, v: &Var, args: &[Term]) -> Option<Vec<PatArg>> {
        let info = self.info(v);
        let mut out: Vec<PatArg> = Vec::with_capacity(args.len());
        for a in args {
            let a = eta_contract(a);
            let p = match a.node() {
                Node::Atom(Head::Bound(i)) => PatArg::Bound(*i),
                Node::Atom(Head::Nominal(n)) if !info.support.contains(n) => {
                    PatArg::Nominal(n.clone())
                }
                _ => return None,
            };
            if out.contains(&p) {
                return None;
            }
            out.push(p);
        }
        Some(out)
    }

    fn arg_types(&self, args: &[Term], ctx: &[Ty]) -> UResult<Vec<Ty>> {
        args.iter()
            .map(|a| type_of(a, ctx).map_err(|e| UnifyError::Malformed(e.to_string())))
            .collect()
    }

    fn bind(&mut self, v: &Var, t: Term) {
        debug_assert!(
            self.respects_support(v, &t),
            "binding {} := {t} escapes its support",
            v.name
        );
        self.subst.bind(v.clone(), terms::eta_normal(&t));
    }

    fn respects_support(&self, v: &Var, t: &Term) -> bool {
        let info = self.info(v);
        terms::support(t).is_subset(&info.support)
    }

    fn flex_rigid(&mut self, v: &Var, args: &[Term], t: &Term, ctx: &mut Vec<Ty>) -> UResult<()> {
        let Some(pargs) = self.pattern_args(v, args) else {
            return Err(UnifyError::NonPattern(format!(
                "{} = {}",
                Term::app(Term::var(v.clone()), args.to_vec()),
                t
            )));
        };
        if occurs_var(t, &v.name) {
            return if self.occurs_rigidly(t, &v.name) {
                Err(UnifyError::NoSolution)
            } else {
                Err(UnifyError::NonPattern(format!(
                    "{} occurs under a flexible head in {t}",
                    v.name
                )))
            };
        }
        let tys = self.arg_types(args, ctx)?;
        let info = self.info(v);
        let body = self.invert(t, 0, &pargs, &info, ctx)?;
        let sol = Term::lams(&tys, body);
        self.bind(v, sol);
        Ok(())
    }

    fn occurs_rigidly(&self, t: &Term, name: &str) -> bool {
        match t.node() {
            Node::Atom(Head::Var(v)) => &*v.name == name,
            Node::Atom(_) => false,
            Node::Lam(_, b) => self.occurs_rigidly(b, name),
            Node::App(h, args) => match h {
                Head::Var(v) if &*v.name == name => true,
                Head::Var(v) if self.is_flex(&v.name) => false,
                _ => args.iter().any(|a| self.occurs_rigidly(a, name)),
            },
        }
    }

    /// Rewrites `t` (seen under `depth` local binders) as the body of the
    /// solution for a flexible head applied to `pargs`.
    fn invert(
        &mut self,
        t: &Term,
        depth: u32,
        pargs: &[PatArg],
        info: &FlexInfo,
        ctx: &mut Vec<Ty>,
    ) -> UResult<Term> {
        let n = pargs.len() as u32;
        match t.node() {
            Node::Lam(ty, b) => {
                ctx.push(ty.clone());
                let r = self.invert(b, depth + 1, pargs, info, ctx);
                ctx.pop();
                Ok(Term::lam(ty.clone(), r?))
            }
            _ => {
                let (h, args) = t.spine().unwrap();
                if let Head::Var(w) = h {
                    if self.is_flex(&w.name) || self.subst.get(&w.name).is_some() {
                        return self.invert_flex(w, args, depth, pargs, info, ctx);
                    }
                }
                let head = self.invert_head(h, depth, pargs, info)?;
                let mut new_args = Vec::with_capacity(args.len());
                for a in args {
                    new_args.push(self.invert(a, depth, pargs, info, ctx)?);
                }
                let _ = n;
                Ok(Term::app(head, new_args))
            }
        }
    }

    fn invert_head(
        &self,
        h: &Head,
        depth: u32,
        pargs: &[PatArg],
        info: &FlexInfo,
    ) -> UResult<Term> {
        let n = pargs.len() as u32;
        let position = |p: &PatArg| pargs.iter().position(|q| q == p).map(|k| k as u32);
        Ok(match h {
            Head::Bound(i) if *i < depth => Term::bound(*i),
            Head::Bound(i) => match position(&PatArg::Bound(i - depth)) {
                Some(k) => Term::bound(depth + n - 1 - k),
                None => return Err(UnifyError::NoSolution),
            },
            Head::Nominal(c) => match position(&PatArg::Nominal(c.clone())) {
                Some(k) => Term::bound(depth + n - 1 - k),
                None if info.support.contains(c) => Term::nominal(c.clone()),
                None => return Err(UnifyError::NoSolution),
            },
            Head::Var(w) => {
                if info.forbidden.contains(&w.name) {
                    return Err(UnifyError::NoSolution);
                }
                Term::var(w.clone())
            }
            Head::Const(c) => Term::from_const(c.clone()),
        })
    }

    /// A flexible subterm `w b̄` inside the right-hand side: prune the
    /// arguments and support `w` may not use.
    fn invert_flex(
        &mut self,
        w: &Var,
        args: &[Term],
        depth: u32,
        pargs: &[PatArg],
        info: &FlexInfo,
        ctx: &mut Vec<Ty>,
    ) -> UResult<Term> {
        if let Some(val) = self.subst.get(&w.name).cloned() {
            let t = terms::normalize(&Term::app(val, args.to_vec()));
            return self.invert(&t, depth, pargs, info, ctx);
        }
        let winfo = self.info(w);
        // Nominals `w` may use that the outer solution abstracts: raise `w`
        // over them instead of cutting them from its support.
        let raise: Vec<Nominal> = winfo
            .support
            .iter()
            .filter(|c| {
                !info.support.contains(*c) && pargs.contains(&PatArg::Nominal((*c).clone()))
            })
            .cloned()
            .collect();
        if !raise.is_empty() {
            let ty = Ty::arrows(raise.iter().map(|c| c.ty.clone()), w.ty.clone());
            let new_info = FlexInfo {
                support: winfo
                    .support
                    .iter()
                    .filter(|c| !raise.contains(c))
                    .cloned()
                    .collect(),
                forbidden: winfo.forbidden.clone(),
            };
            let w2 = self.fresh_var(&w.name, ty, new_info);
            let cs: Vec<Term> = raise.iter().map(|c| Term::nominal(c.clone())).collect();
            self.bind(w, Term::app(Term::var(w2.clone()), cs.clone()));
            let mut new_args = cs;
            new_args.extend(args.iter().cloned());
            return self.invert(&Term::app(Term::var(w2), new_args), depth, pargs, info, ctx);
        }
        let allowed = |a: &Term| -> bool {
            match eta_contract(a).node() {
                Node::Atom(Head::Bound(i)) if *i < depth => true,
                Node::Atom(Head::Bound(i)) => pargs.contains(&PatArg::Bound(i - depth)),
                Node::Atom(Head::Nominal(c)) => {
                    pargs.contains(&PatArg::Nominal(c.clone())) || info.support.contains(c)
                }
                _ => false,
            }
        };
        let all_allowed = args.iter().all(allowed);
        let needs_support_cut = !winfo.support.is_subset(&info.support);
        let needs_forbid = !info.forbidden.is_subset(&winfo.forbidden);
        if all_allowed && !needs_support_cut && !needs_forbid {
            let mut new_args = Vec::with_capacity(args.len());
            for a in args {
                new_args.push(self.invert(a, depth, pargs, info, ctx)?);
            }
            return Ok(Term::app(Term::var(w.clone()), new_args));
        }
        // Non-pattern arguments are fine when they can be copied without
        // constraining anything.
        if !needs_support_cut && !needs_forbid {
            let mut trial = self.clone();
            let before = trial.subst.map.len();
            let copied: UResult<Vec<Term>> = args
                .iter()
                .map(|a| trial.invert(a, depth, pargs, info, ctx))
                .collect();
            if let Ok(new_args) = copied {
                if trial.subst.map.len() == before {
                    *self = trial;
                    return Ok(Term::app(Term::var(w.clone()), new_args));
                }
            }
        }
        // Pruning needs the local arguments in pattern form.
        let Some(_) = self.pattern_args(w, args) else {
            return Err(UnifyError::NonPattern(format!(
                "cannot prune non-pattern subterm {}",
                Term::app(Term::var(w.clone()), args.to_vec())
            )));
        };
        let full_ctx: Vec<Ty> = ctx.clone();
        let tys = self.arg_types(args, &full_ctx)?;
        let keep: Vec<usize> = (0..args.len()).filter(|&k| allowed(&args[k])).collect();
        let (_, result_ty) = w.ty.uncurry();
        let result_ty = {
            // `w` may be partially applied; its result type after `args`.
            let mut ty = w.ty.clone();
            for _ in args {
                if let Ty::Arrow(_, b) = ty {
                    ty = (*b).clone();
                }
            }
            let _ = result_ty;
            ty
        };
        let new_ty = Ty::arrows(keep.iter().map(|&k| tys[k].clone()), result_ty);
        let new_info = FlexInfo {
            support: winfo.support.intersection(&info.support).cloned().collect(),
            forbidden: winfo.forbidden.union(&info.forbidden).cloned().collect(),
        };
        let w2 = self.fresh_var(&w.name, new_ty, new_info);
        let m = args.len() as u32;
        let body = Term::app(
            Term::var(w2.clone()),
            keep.iter()
                .map(|&k| Term::bound(m - 1 - k as u32))
                .collect(),
        );
        // `w` may take more arguments than the spine shows; only the shown
        // ones are abstracted.
        self.bind(w, Term::lams(&tys, body));
        let pruned = Term::app(
            Term::var(w2),
            keep.iter().map(|&k| args[k].clone()).collect(),
        );
        self.invert(&pruned, depth, pargs, info, ctx)
    }

    fn flex_same(&mut self, v: &Var, a1: &[Term], a2: &[Term], ctx: &mut [Ty]) -> UResult<()> {
        let (Some(p1), Some(p2)) = (self.pattern_args(v, a1), self.pattern_args(v, a2)) else {
            return Err(UnifyError::NonPattern(format!(
                "{} = {}",
                Term::app(Term::var(v.clone()), a1.to_vec()),
                Term::app(Term::var(v.clone()), a2.to_vec())
            )));
        };
        if p1.len() != p2.len() {
            return Err(UnifyError::Malformed("arity mismatch".into()));
        }
        let tys = self.arg_types(a1, ctx)?;
        let keep: Vec<usize> = (0..p1.len()).filter(|&k| p1[k] == p2[k]).collect();
        if keep.len() == p1.len() {
            return Ok(());
        }
        let mut res = v.ty.clone();
        for _ in a1 {
            if let Ty::Arrow(_, b) = res {
                res = (*b).clone();
            }
        }
        let new_ty = Ty::arrows(keep.iter().map(|&k| tys[k].clone()), res);
        let info = self.info(v);
        let h = self.fresh_var(&v.name, new_ty, info);
        let n = p1.len() as u32;
        let body = Term::app(
            Term::var(h),
            keep.iter()
                .map(|&k| Term::bound(n - 1 - k as u32))
                .collect(),
        );
        self.bind(v, Term::lams(&tys, body));
        Ok(())
    }

    fn flex_flex(
        &mut self,
        v: &Var,
        a1: &[Term],
        w: &Var,
        a2: &[Term],
        ctx: &mut Vec<Ty>,
    ) -> UResult<()> {
        let (Some(p1), Some(p2)) = (self.pattern_args(v, a1), self.pattern_args(w, a2)) else {
            // One side may still be solvable as flex-rigid style if the
            // other is a pattern.
            if self.pattern_args(v, a1).is_some()
                && !occurs_var(&Term::app(Term::var(w.clone()), a2.to_vec()), &v.name)
            {
                let rhs = Term::app(Term::var(w.clone()), a2.to_vec());
                return self.flex_rigid(v, a1, &rhs, ctx);
            }
            if self.pattern_args(w, a2).is_some() {
                let rhs = Term::app(Term::var(v.clone()), a1.to_vec());
                return self.flex_rigid(w, a2, &rhs, ctx);
            }
            return Err(UnifyError::NonPattern(format!(
                "{} = {}",
                Term::app(Term::var(v.clone()), a1.to_vec()),
                Term::app(Term::var(w.clone()), a2.to_vec())
            )));
        };
        let iv = self.info(v);
        let iw = self.info(w);
        let t1 = self.arg_types(a1, ctx)?;
        let t2 = self.arg_types(a2, ctx)?;
        // Each entry: how the v side and the w side express a shared atom.
        #[derive(Clone)]
        enum Side {
            Arg(usize),
            Direct(Nominal),
        }
        let mut shared: Vec<(Side, Side, Ty)> = Vec::new();
        for (k, p) in p1.iter().enumerate() {
            if let Some(l) = p2.iter().position(|q| q == p) {
                shared.push((Side::Arg(k), Side::Arg(l), t1[k].clone()));
            } else if let PatArg::Nominal(c) = p {
                if iw.support.contains(c) {
                    shared.push((Side::Arg(k), Side::Direct(c.clone()), t1[k].clone()));
                }
            }
        }
        for (l, q) in p2.iter().enumerate() {
            if p1.contains(q) {
                continue;
            }
            if let PatArg::Nominal(c) = q {
                if iv.support.contains(c) {
                    shared.push((Side::Direct(c.clone()), Side::Arg(l), t2[l].clone()));
                }
            }
        }
        let mut res = v.ty.clone();
        for _ in a1 {
            if let Ty::Arrow(_, b) = res {
                res = (*b).clone();
            }
        }
        let new_ty = Ty::arrows(shared.iter().map(|(_, _, t)| t.clone()), res);
        let new_info = FlexInfo {
            support: iv.support.intersection(&iw.support).cloned().collect(),
            forbidden: iv.forbidden.union(&iw.forbidden).cloned().collect(),
        };
        let h = self.fresh_var(&v.name, new_ty, new_info);
        let build = |side: fn(&(Side, Side, Ty)) -> &Side, n: usize| {
            let n = n as u32;
            Term::app(
                Term::var(h.clone()),
                shared
                    .iter()
                    .map(|e| match side(e) {
                        Side::Arg(k) => Term::bound(n - 1 - *k as u32),
                        Side::Direct(c) => Term::nominal(c.clone()),
                    })
                    .collect(),
            )
        };
        let vbody = build(|e| &e.0, p1.len());
        let wbody = build(|e| &e.1, p2.len());
        self.bind(v, Term::lams(&t1, vbody));
        let wsol = self.apply(&Term::lams(&t2, wbody));
        self.bind(w, wsol);
        Ok(())
    }
}

/// η-contracts `λx. h a1 ... an x` to `h a1 ... an` when `x` is not free
/// elsewhere, recursively.
pub fn eta_contract(t: &Term) -> Term {
    match t.node() {
        Node::Lam(_, body) => {
            let body = eta_contract(body);
            if let Node::App(h, args) = body.node() {
                let last = args.last().unwrap();
                if matches!(last.node(), Node::Atom(Head::Bound(0))) {
                    let rest = &args[..args.len() - 1];
                    let head_ok = !matches!(h, Head::Bound(0));
                    if head_ok && rest.iter().all(|a| !mentions_bound(a, 0)) {
                        let head = Term::head_term(h.clone());
                        let contracted = Term::app(head, rest.to_vec());
                        return shift(&contracted, -1, 0);
                    }
                }
            }
            Term::lam(
                match t.node() {
                    Node::Lam(ty, _) => ty.clone(),
                    _ => unreachable!(),
                },
                body,
            )
        }
        _ => t.clone(),
    }
}

fn mentions_bound(t: &Term, i: u32) -> bool {
    match t.node() {
        Node::Atom(Head::Bound(j)) => *j == i,
        Node::Atom(_) => false,
        Node::App(h, args) => {
            matches!(h, Head::Bound(j) if *j == i) || args.iter().any(|a| mentions_bound(a, i))
        }
        Node::Lam(_, b) => mentions_bound(b, i + 1),
    }
}
