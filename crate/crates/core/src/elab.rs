//! Type inference and elaboration of parsed syntax into terms and
//! formulas.
//!
//! Binders may be left untyped; their types are inferred by first-order
//! unification over type metavariables. Specification goals are built with
//! the goal constructors, and a term of type `o` in goal position is
//! wrapped as an atomic goal.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::formula::{Ann, Atom, Binder, Formula, SEQ};
use crate::parse::{PAnn, PBinder, PTy, Pos, PF, PT};
use crate::sig::{self, Signature};
use crate::speclogic::names as sp;
use crate::terms::{Const, Name, Nominal, Term, Ty, Var};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("{pos}: {msg}")]
pub struct ElabError {
    pub pos: Pos,
    pub msg: String,
}

type EResult<T> = Result<T, ElabError>;

fn err<T>(pos: Pos, msg: impl Into<String>) -> EResult<T> {
    Err(ElabError {
        pos,
        msg: msg.into(),
    })
}

/// Converts declared syntax to a type, checking base types exist.
pub fn ty_of(sig: &Signature, t: &PTy, pos: Pos) -> EResult<Ty> {
    match t {
        PTy::Base(b) if b == "prop" => Ok(Ty::Prop),
        PTy::Base(b) => {
            if sig.has_kind(b) {
                Ok(Ty::base(b))
            } else {
                err(pos, format!("unknown type {b}"))
            }
        }
        PTy::Arrow(a, b) => Ok(Ty::arrow(ty_of(sig, a, pos)?, ty_of(sig, b, pos)?)),
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum IT {
    Meta(usize),
    Base(Name),
    Prop,
    Arrow(Box<IT>, Box<IT>),
}

impl IT {
    fn from_ty(t: &Ty) -> IT {
        match t {
            Ty::Base(b) => IT::Base(b.clone()),
            Ty::Prop => IT::Prop,
            Ty::Arrow(a, b) => IT::Arrow(Box::new(IT::from_ty(a)), Box::new(IT::from_ty(b))),
        }
    }
}

#[derive(Clone, Debug)]
enum E {
    Bound(u32),
    Free(Name),
    Const(Name, IT),
    Nom(u32, IT),
    App(Box<E>, Vec<E>),
    Lam(IT, Box<E>),
    /// A term in goal position, of type `o` (wrapped) or `goal`.
    Coerce(Box<E>, IT),
}

#[derive(Clone, Debug)]
enum EF {
    True,
    False,
    And(Box<EF>, Box<EF>),
    Or(Box<EF>, Box<EF>),
    Imp(Box<EF>, Box<EF>),
    Quant(crate::formula::Quant, Name, IT, Box<EF>),
    Eq(E, E),
    Atom(Name, Vec<E>, Ann),
}

/// Where free identifiers may come from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Implicit {
    /// Unknown identifiers are errors.
    None,
    /// Unknown capitalised identifiers become new variables.
    Capitalized,
}

/// Elaboration session. All terms elaborated in one session share type
/// metavariables and implicit variables.
pub struct Elab<'a> {
    sig: &'a Signature,
    preds: &'a dyn Fn(&str) -> Option<Vec<Ty>>,
    metas: Vec<Option<IT>>,
    fixed: BTreeMap<Name, Ty>,
    free: Vec<(Name, IT)>,
    implicit: Implicit,
    nominals: bool,
    bound: Vec<(Name, IT)>,
    coercions: Vec<(IT, Pos)>,
    /// Types of ∇-quantified spec binders to check (order ≤ 1, no `o`).
    pi_types: Vec<(IT, Pos)>,
}

/// A finished elaboration handle.
pub struct ETerm(E, Pos);
pub struct EFormula(EF, Pos);

impl<'a> Elab<'a> {
    pub fn new(sig: &'a Signature, preds: &'a dyn Fn(&str) -> Option<Vec<Ty>>) -> Elab<'a> {
        Elab {
            sig,
            preds,
            metas: Vec::new(),
            fixed: BTreeMap::new(),
            free: Vec::new(),
            implicit: Implicit::None,
            nominals: false,
            bound: Vec::new(),
            coercions: Vec::new(),
            pi_types: Vec::new(),
        }
    }

    /// Variables already in scope (eigenvariables of a sequent).
    pub fn with_vars<'v>(mut self, vars: impl IntoIterator<Item = &'v Var>) -> Self {
        for v in vars {
            self.fixed.insert(v.name.clone(), v.ty.clone());
        }
        self
    }

    pub fn implicit(mut self, mode: Implicit) -> Self {
        self.implicit = mode;
        self
    }

    pub fn nominals(mut self, allowed: bool) -> Self {
        self.nominals = allowed;
        self
    }

    fn meta(&mut self) -> IT {
        self.metas.push(None);
        IT::Meta(self.metas.len() - 1)
    }

    fn resolve(&self, t: &IT) -> IT {
        match t {
            IT::Meta(m) => match &self.metas[*m] {
                Some(u) => self.resolve(u),
                None => t.clone(),
            },
            IT::Arrow(a, b) => IT::Arrow(Box::new(self.resolve(a)), Box::new(self.resolve(b))),
            other => other.clone(),
        }
    }

    fn occurs(&self, m: usize, t: &IT) -> bool {
        match self.resolve(t) {
            IT::Meta(k) => k == m,
            IT::Arrow(a, b) => self.occurs(m, &a) || self.occurs(m, &b),
            _ => false,
        }
    }

    fn unify_ty(&mut self, a: &IT, b: &IT, pos: Pos) -> EResult<()> {
        let a = self.resolve(a);
        let b = self.resolve(b);
        match (&a, &b) {
            (IT::Meta(x), IT::Meta(y)) if x == y => Ok(()),
            (IT::Meta(x), t) | (t, IT::Meta(x)) => {
                if self.occurs(*x, t) {
                    return err(pos, "cyclic type");
                }
                self.metas[*x] = Some(t.clone());
                Ok(())
            }
            (IT::Base(x), IT::Base(y)) if x == y => Ok(()),
            (IT::Prop, IT::Prop) => Ok(()),
            (IT::Arrow(a1, b1), IT::Arrow(a2, b2)) => {
                self.unify_ty(a1, a2, pos)?;
                self.unify_ty(b1, b2, pos)
            }
            _ => err(
                pos,
                format!("type mismatch: {} against {}", self.show(&a), self.show(&b)),
            ),
        }
    }

    fn show(&self, t: &IT) -> String {
        match self.resolve(t) {
            IT::Meta(_) => "?".into(),
            IT::Base(b) => b.to_string(),
            IT::Prop => "prop".into(),
            IT::Arrow(a, b) => {
                let l = self.show(&a);
                let l = if matches!(self.resolve(&a), IT::Arrow(..)) {
                    format!("({l})")
                } else {
                    l
                };
                format!("{l} -> {}", self.show(&b))
            }
        }
    }

    fn binder_ty(&mut self, t: &Option<PTy>, pos: Pos) -> EResult<IT> {
        match t {
            Some(t) => Ok(IT::from_ty(&ty_of(self.sig, t, pos)?)),
            None => Ok(self.meta()),
        }
    }

    /// Declares a named free variable (e.g. a ∇ head variable of a clause)
    /// ahead of elaboration.
    pub fn declare(&mut self, b: &PBinder, pos: Pos) -> EResult<()> {
        let t = self.binder_ty(&b.1, pos)?;
        if self.free.iter().any(|(n, _)| **n == *b.0) {
            return err(pos, format!("{} declared twice", b.0));
        }
        self.free.push((b.0.as_str().into(), t));
        Ok(())
    }

    fn ident(&mut self, x: &str, pos: Pos) -> EResult<(E, IT)> {
        if let Some(i) = self.bound.iter().rposition(|(n, _)| &**n == x) {
            let idx = (self.bound.len() - 1 - i) as u32;
            return Ok((E::Bound(idx), self.bound[i].1.clone()));
        }
        if let Some((n, t)) = self.free.iter().find(|(n, _)| &**n == x) {
            return Ok((E::Free(n.clone()), t.clone()));
        }
        if let Some(t) = self.fixed.get(x) {
            return Ok((E::Free(x.into()), IT::from_ty(t)));
        }
        if x == "pi" {
            let a = self.meta();
            self.pi_types.push((a.clone(), pos));
            let goal = IT::Base(sig::GOAL.into());
            let t = IT::Arrow(
                Box::new(IT::Arrow(Box::new(a), Box::new(goal.clone()))),
                Box::new(goal),
            );
            return Ok((E::Const(sp::PI.into(), t.clone()), t));
        }
        if x == "true" {
            let t = IT::Base(sig::GOAL.into());
            return Ok((E::Const(sp::TT.into(), t.clone()), t));
        }
        if let Some(t) = self.sig.const_ty(x) {
            if x.starts_with('@') {
                return err(pos, format!("unknown identifier {x}"));
            }
            let t = IT::from_ty(t);
            return Ok((E::Const(x.into(), t.clone()), t));
        }
        if self.nominals {
            if let Some(k) = nominal_index(x) {
                let t = self.meta();
                return Ok((E::Nom(k, t.clone()), t));
            }
        }
        let cap = x.starts_with(|c: char| c.is_uppercase()) || (x.starts_with('_') && x.len() > 1);
        if self.implicit == Implicit::Capitalized && cap {
            let t = self.meta();
            self.free.push((x.into(), t.clone()));
            return Ok((E::Free(x.into()), t));
        }
        err(pos, format!("unknown identifier {x}"))
    }

    fn infer(&mut self, pt: &PT) -> EResult<(E, IT)> {
        match pt {
            PT::Id(x, pos) => self.ident(x, *pos),
            PT::App(h, args) => {
                let (mut e, mut t) = self.infer(h)?;
                let mut es = Vec::new();
                for a in args {
                    let (ea, ta) = self.infer(a)?;
                    let r = self.meta();
                    self.unify_ty(&t, &IT::Arrow(Box::new(ta), Box::new(r.clone())), a.pos())?;
                    es.push(ea);
                    t = r;
                }
                e = E::App(Box::new(e), es);
                Ok((e, t))
            }
            PT::Lam(x, ann, body) => {
                let a = self.binder_ty(ann, body.pos())?;
                self.bound.push((x.as_str().into(), a.clone()));
                let r = self.infer(body);
                self.bound.pop();
                let (eb, tb) = r?;
                Ok((
                    E::Lam(a.clone(), Box::new(eb)),
                    IT::Arrow(Box::new(a), Box::new(tb)),
                ))
            }
            PT::Cons(a, b) => {
                let ea = self.check(a, &IT::from_ty(&sig::o()))?;
                let eb = self.check(b, &IT::from_ty(&sig::olist()))?;
                let t = IT::from_ty(self.sig.const_ty("::").expect("builtin"));
                Ok((
                    E::App(Box::new(E::Const("::".into(), t)), vec![ea, eb]),
                    IT::from_ty(&sig::olist()),
                ))
            }
            PT::And(..) | PT::Imp(..) => {
                let e = self.goal_e(pt)?;
                Ok((e, IT::from_ty(&sig::goal())))
            }
        }
    }

    fn check(&mut self, pt: &PT, t: &IT) -> EResult<E> {
        let (e, u) = self.infer(pt)?;
        self.unify_ty(&u, t, pt.pos())?;
        Ok(e)
    }

    fn goal_e(&mut self, pt: &PT) -> EResult<E> {
        let goal = IT::from_ty(&sig::goal());
        match pt {
            PT::And(a, b) => {
                let t = IT::from_ty(self.sig.const_ty(sp::AND).expect("builtin"));
                Ok(E::App(
                    Box::new(E::Const(sp::AND.into(), t)),
                    vec![self.goal_e(a)?, self.goal_e(b)?],
                ))
            }
            PT::Imp(a, b) => {
                let t = IT::from_ty(self.sig.const_ty(sp::IMP).expect("builtin"));
                let ea = self.check(a, &IT::from_ty(&sig::o()))?;
                Ok(E::App(
                    Box::new(E::Const(sp::IMP.into(), t)),
                    vec![ea, self.goal_e(b)?],
                ))
            }
            PT::App(h, args) if matches!(&**h, PT::Id(x, _) if x == "pi") && args.len() == 1 => {
                match &args[0] {
                    PT::Lam(x, ann, body) => {
                        let a = self.binder_ty(ann, body.pos())?;
                        self.pi_types.push((a.clone(), body.pos()));
                        self.bound.push((x.as_str().into(), a.clone()));
                        let r = self.goal_e(body);
                        self.bound.pop();
                        let t = IT::Arrow(
                            Box::new(IT::Arrow(Box::new(a.clone()), Box::new(goal.clone()))),
                            Box::new(goal),
                        );
                        Ok(E::App(
                            Box::new(E::Const(sp::PI.into(), t)),
                            vec![E::Lam(a, Box::new(r?))],
                        ))
                    }
                    other => {
                        let (e, t) = self.infer(pt)?;
                        let _ = other;
                        self.unify_ty(&t, &goal, pt.pos())?;
                        Ok(e)
                    }
                }
            }
            PT::Id(x, _) if x == "true" => Ok(E::Const(sp::TT.into(), goal)),
            _ => {
                let (e, t) = self.infer(pt)?;
                match self.resolve(&t) {
                    IT::Base(b) if &*b == sig::O => Ok(wrap_atm(e)),
                    IT::Base(b) if &*b == sig::GOAL => Ok(e),
                    IT::Meta(_) => {
                        self.coercions.push((t.clone(), pt.pos()));
                        Ok(E::Coerce(Box::new(e), t))
                    }
                    other => err(
                        pt.pos(),
                        format!(
                            "expected a goal, found a term of type {}",
                            self.show(&other)
                        ),
                    ),
                }
            }
        }
    }

    fn formula_e(&mut self, pf: &PF, pos: Pos) -> EResult<EF> {
        Ok(match pf {
            PF::True => EF::True,
            PF::False => EF::False,
            PF::And(a, b) => EF::And(
                Box::new(self.formula_e(a, pos)?),
                Box::new(self.formula_e(b, pos)?),
            ),
            PF::Or(a, b) => EF::Or(
                Box::new(self.formula_e(a, pos)?),
                Box::new(self.formula_e(b, pos)?),
            ),
            PF::Imp(a, b) => EF::Imp(
                Box::new(self.formula_e(a, pos)?),
                Box::new(self.formula_e(b, pos)?),
            ),
            PF::Quant(q, bs, body) => {
                let mut tys = Vec::new();
                for (x, t) in bs {
                    let it = self.binder_ty(t, pos)?;
                    tys.push(it.clone());
                    self.bound.push((x.as_str().into(), it));
                }
                let r = self.formula_e(body, pos);
                for _ in bs {
                    self.bound.pop();
                }
                let mut f = r?;
                for ((x, _), t) in bs.iter().zip(tys).rev() {
                    f = EF::Quant(*q, x.as_str().into(), t, Box::new(f));
                }
                f
            }
            PF::Eq(a, b) => {
                let (ea, ta) = self.infer(a)?;
                let (eb, tb) = self.infer(b)?;
                self.unify_ty(&ta, &tb, b.pos())?;
                EF::Eq(ea, eb)
            }
            PF::Seq(ctx, g, ann) => {
                let l = match ctx {
                    Some(c) => self.check(c, &IT::from_ty(&sig::olist()))?,
                    None => E::Const("nil".into(), IT::from_ty(&sig::olist())),
                };
                let eg = self.goal_e(g)?;
                EF::Atom(SEQ.into(), vec![l, eg], ann_of(*ann))
            }
            PF::Atom(t, ann) => {
                let (p, ppos, args) = match t.spine() {
                    Some(s) => s,
                    None => return err(t.pos(), "expected an atomic formula"),
                };
                let tys = match (self.preds)(p) {
                    Some(tys) => tys,
                    None => return err(ppos, format!("unknown predicate {p}")),
                };
                if tys.len() != args.len() {
                    return err(
                        ppos,
                        format!("{p} expects {} arguments, given {}", tys.len(), args.len()),
                    );
                }
                let mut es = Vec::new();
                for (a, ty) in args.iter().zip(&tys) {
                    let e = if *ty == sig::goal() {
                        self.goal_e(a)?
                    } else {
                        self.check(a, &IT::from_ty(ty))?
                    };
                    es.push(e);
                }
                EF::Atom(p.into(), es, ann_of(*ann))
            }
        })
    }

    /// Elaborates a term, optionally at an expected type.
    pub fn term(&mut self, pt: &PT, expected: Option<&Ty>) -> EResult<ETerm> {
        let e = match expected {
            Some(t) if *t == sig::goal() => self.goal_e(pt)?,
            Some(t) => self.check(pt, &IT::from_ty(t))?,
            None => self.infer(pt)?.0,
        };
        Ok(ETerm(e, pt.pos()))
    }

    /// Elaborates a specification goal.
    pub fn goal(&mut self, pt: &PT) -> EResult<ETerm> {
        Ok(ETerm(self.goal_e(pt)?, pt.pos()))
    }

    pub fn formula(&mut self, pf: &PF, pos: Pos) -> EResult<EFormula> {
        Ok(EFormula(self.formula_e(pf, pos)?, pos))
    }

    /// Resolves pending goal coercions (unknown types default to `o`) and
    /// checks quantified spec types.
    pub fn solve(&mut self) -> EResult<()> {
        for (t, pos) in std::mem::take(&mut self.coercions) {
            if let IT::Meta(_) = self.resolve(&t) {
                self.unify_ty(&t, &IT::from_ty(&sig::o()), pos)?;
            }
            self.coercions.push((t, pos));
        }
        for (t, pos) in self.pi_types.clone() {
            let ty = self.zonk_ty(&t, pos)?;
            if ty.order() > 1
                || mentions(&ty, sig::O)
                || mentions(&ty, sig::GOAL)
                || ty.contains_prop()
            {
                return err(
                    pos,
                    format!("quantified specification type {ty} must have order at most 1 and not mention o"),
                );
            }
        }
        Ok(())
    }

    fn zonk_ty(&self, t: &IT, pos: Pos) -> EResult<Ty> {
        match self.resolve(t) {
            IT::Meta(_) => err(pos, "cannot infer a type here; add a type annotation"),
            IT::Base(b) => Ok(Ty::Base(b)),
            IT::Prop => Ok(Ty::Prop),
            IT::Arrow(a, b) => Ok(Ty::arrow(self.zonk_ty(&a, pos)?, self.zonk_ty(&b, pos)?)),
        }
    }

    fn zonk(&self, e: &E, pos: Pos) -> EResult<Term> {
        Ok(match e {
            E::Bound(i) => Term::bound(*i),
            E::Free(n) => {
                let ty = match self.free.iter().find(|(m, _)| m == n) {
                    Some((_, t)) => self.zonk_ty(t, pos)?,
                    None => self.fixed[n].clone(),
                };
                Term::var(Var {
                    name: n.clone(),
                    ty,
                })
            }
            E::Const(n, t) => Term::from_const(Const {
                name: n.clone(),
                ty: self.zonk_ty(t, pos)?,
            }),
            E::Nom(k, t) => Term::nominal(Nominal::new(*k, self.zonk_ty(t, pos)?)),
            E::App(h, args) => {
                let h = self.zonk(h, pos)?;
                let args = args
                    .iter()
                    .map(|a| self.zonk(a, pos))
                    .collect::<EResult<Vec<_>>>()?;
                Term::app(h, args)
            }
            E::Lam(t, b) => Term::lam(self.zonk_ty(t, pos)?, self.zonk(b, pos)?),
            E::Coerce(inner, t) => {
                let z = self.zonk(inner, pos)?;
                match self.resolve(t) {
                    IT::Base(b) if &*b == sig::O => Term::app1(atm(), z),
                    IT::Base(b) if &*b == sig::GOAL => z,
                    other => {
                        return err(pos, format!("expected a goal, found {}", self.show(&other)))
                    }
                }
            }
        })
    }

    fn zonk_f(&self, f: &EF, pos: Pos) -> EResult<Formula> {
        Ok(match f {
            EF::True => Formula::True,
            EF::False => Formula::False,
            EF::And(a, b) => Formula::and(self.zonk_f(a, pos)?, self.zonk_f(b, pos)?),
            EF::Or(a, b) => Formula::or(self.zonk_f(a, pos)?, self.zonk_f(b, pos)?),
            EF::Imp(a, b) => Formula::imp(self.zonk_f(a, pos)?, self.zonk_f(b, pos)?),
            EF::Quant(q, x, t, body) => Formula::quant(
                *q,
                Binder::new(x, self.zonk_ty(t, pos)?),
                self.zonk_f(body, pos)?,
            ),
            EF::Eq(a, b) => Formula::Eq(self.zonk(a, pos)?, self.zonk(b, pos)?),
            EF::Atom(p, args, ann) => Formula::Atom(Atom {
                pred: p.clone(),
                args: args
                    .iter()
                    .map(|a| self.zonk(a, pos))
                    .collect::<EResult<Vec<_>>>()?,
                ann: *ann,
            }),
        })
    }

    pub fn finish_term(&self, t: &ETerm) -> EResult<Term> {
        Ok(crate::terms::eta_normal(&self.zonk(&t.0, t.1)?))
    }

    pub fn finish_formula(&self, f: &EFormula) -> EResult<Formula> {
        Ok(self.zonk_f(&f.0, f.1)?.eta_normal())
    }

    /// Variables introduced implicitly or by `declare`, in order.
    pub fn free_vars(&self, pos: Pos) -> EResult<Vec<Var>> {
        self.free
            .iter()
            .map(|(n, t)| {
                Ok(Var {
                    name: n.clone(),
                    ty: self.zonk_ty(t, pos)?,
                })
            })
            .collect()
    }
}

fn mentions(t: &Ty, base: &str) -> bool {
    match t {
        Ty::Base(b) => &**b == base,
        Ty::Prop => false,
        Ty::Arrow(a, b) => mentions(a, base) || mentions(b, base),
    }
}

fn ann_of(a: Option<PAnn>) -> Ann {
    match a {
        None => Ann::None,
        Some(PAnn::Eq(g)) => Ann::Eq(g),
        Some(PAnn::Lt(g)) => Ann::Lt(g),
    }
}

pub fn nominal_index(x: &str) -> Option<u32> {
    let rest = x.strip_prefix('n')?;
    if rest.is_empty() || !rest.chars().all(|c| c.is_ascii_digit()) {
        return None;
    }
    rest.parse().ok()
}

fn atm() -> Term {
    Term::cnst(sp::ATM, Ty::arrow(sig::o(), sig::goal()))
}

fn wrap_atm(e: E) -> E {
    E::App(
        Box::new(E::Const(
            sp::ATM.into(),
            IT::Arrow(
                Box::new(IT::from_ty(&sig::o())),
                Box::new(IT::from_ty(&sig::goal())),
            ),
        )),
        vec![e],
    )
}

/// Convenience: elaborate a closed formula.
pub fn formula(
    sig: &Signature,
    preds: &dyn Fn(&str) -> Option<Vec<Ty>>,
    vars: &[Var],
    pf: &PF,
    pos: Pos,
    nominals: bool,
) -> EResult<Formula> {
    let mut el = Elab::new(sig, preds).with_vars(vars).nominals(nominals);
    let f = el.formula(pf, pos)?;
    el.solve()?;
    el.finish_formula(&f)
}

/// Convenience: elaborate a term over the given variables.
pub fn term(
    sig: &Signature,
    vars: &[Var],
    pt: &PT,
    expected: Option<&Ty>,
    nominals: bool,
) -> EResult<Term> {
    let none = |_: &str| None;
    let mut el = Elab::new(sig, &none).with_vars(vars).nominals(nominals);
    let t = el.term(pt, expected)?;
    el.solve()?;
    el.finish_term(&t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::{parse_formula, parse_term};
    use crate::print::{formula_to_string, term_to_string};

    fn sig() -> Signature {
        let mut s = Signature::new();
        s.add_kind("tm");
        s.add_kind("ty");
        s.add_const(
            "app",
            Ty::arrows([Ty::base("tm"), Ty::base("tm")], Ty::base("tm")),
        );
        s.add_const(
            "abs",
            Ty::arrows(
                [Ty::base("ty"), Ty::arrow(Ty::base("tm"), Ty::base("tm"))],
                Ty::base("tm"),
            ),
        );
        s.add_const("i", Ty::base("ty"));
        s.add_const(
            "arr",
            Ty::arrows([Ty::base("ty"), Ty::base("ty")], Ty::base("ty")),
        );
        s.add_const("of", Ty::arrows([Ty::base("tm"), Ty::base("ty")], sig::o()));
        s
    }

    fn preds(p: &str) -> Option<Vec<Ty>> {
        match p {
            "halts" => Some(vec![Ty::base("tm")]),
            "seq" => Some(vec![sig::olist(), sig::goal()]),
            _ => None,
        }
    }

    #[test]
    fn infers_binder_types() {
        let s = sig();
        let pf = parse_formula("forall M A, {of M A} -> halts M").unwrap();
        let f = formula(&s, &preds, &[], &pf, Pos::default(), false).unwrap();
        assert_eq!(formula_to_string(&f), "forall M A, {of M A} -> halts M");
        match f {
            Formula::Forall(b, _) => assert_eq!(b.ty, Ty::base("tm")),
            _ => panic!(),
        }
    }

    #[test]
    fn goals_with_pi_and_hyps() {
        let s = sig();
        let pt = parse_term("pi x\\ of x A => of (R x) B").unwrap();
        let mut el = Elab::new(&s, &preds).implicit(Implicit::Capitalized);
        let g = el.goal(&pt).unwrap();
        el.solve().unwrap();
        let t = el.finish_term(&g).unwrap();
        assert_eq!(term_to_string(&t), "pi x\\ of x A => of (R x) B");
        let vars = el.free_vars(Pos::default()).unwrap();
        assert_eq!(vars.len(), 3);
        assert_eq!(vars[1].ty, Ty::arrow(Ty::base("tm"), Ty::base("tm")));
    }

    #[test]
    fn variable_goal_defaults_to_atom() {
        let s = sig();
        let pf = parse_formula("forall L G, {L |- G} -> {L |- G}").unwrap();
        let f = formula(&s, &preds, &[], &pf, Pos::default(), false).unwrap();
        match &f {
            Formula::Forall(_, b) => match &**b {
                Formula::Forall(g, _) => assert_eq!(g.ty, sig::o()),
                _ => panic!(),
            },
            _ => panic!(),
        }
        let pf = parse_formula("forall L (G:goal), {L |- G}").unwrap();
        assert!(formula(&s, &preds, &[], &pf, Pos::default(), false).is_ok());
    }

    #[test]
    fn rejects_bad_terms() {
        let s = sig();
        let pf = parse_formula("forall M, halts (app M)").unwrap();
        assert!(formula(&s, &preds, &[], &pf, Pos::default(), false).is_err());
        let pf = parse_formula("forall X, X = X").unwrap();
        assert!(formula(&s, &preds, &[], &pf, Pos::default(), false).is_err());
        let pf = parse_formula("halts n1").unwrap();
        assert!(formula(&s, &preds, &[], &pf, Pos::default(), false).is_err());
        assert!(formula(&s, &preds, &[], &pf, Pos::default(), true).is_ok());
    }

    #[test]
    fn higher_order_pi_rejected() {
        let s = sig();
        let pt = parse_term("pi f\\ of (f (app M M)) A").unwrap();
        let mut el = Elab::new(&s, &preds).implicit(Implicit::Capitalized);
        el.goal(&pt).unwrap();
        assert!(el.solve().is_ok());
        let pt = parse_term("pi f\\ of (abs i (x\\ f (y\\ y) x)) A").unwrap();
        let mut el = Elab::new(&s, &preds).implicit(Implicit::Capitalized);
        el.goal(&pt).unwrap();
        assert!(el.solve().is_err());
    }
}
