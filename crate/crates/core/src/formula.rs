//! Formulas of the reasoning logic.
//!
//! Quantifier binders share the de Bruijn numbering of the terms they
//! scope over: inside `∀x. p x` the argument of `p` is `Bound(0)`.

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;
use std::hash::{Hash, Hasher};

use crate::terms::{
    self, collect_support, collect_vars, replace_nominals, replace_vars, Name, Nominal,
    Permutation, Term, Ty, Var,
};

/// Name of the predicate encoding specification-logic provability.
pub const SEQ: &str = "seq";

/// A quantifier binder. The name is only a printing hint and does not take
/// part in equality.
#[derive(Clone, Debug)]
pub struct Binder {
    pub name: Name,
    pub ty: Ty,
}

impl Binder {
    pub fn new(name: &str, ty: Ty) -> Binder {
        Binder {
            name: name.into(),
            ty,
        }
    }
}

impl PartialEq for Binder {
    fn eq(&self, other: &Self) -> bool {
        self.ty == other.ty
    }
}
impl Eq for Binder {}
impl Hash for Binder {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.ty.hash(state)
    }
}
impl PartialOrd for Binder {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Binder {
    fn cmp(&self, other: &Self) -> Ordering {
        self.ty.cmp(&other.ty)
    }
}

/// Induction annotation on a defined atom. The number is the induction
/// generation, so nested inductions do not interfere.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Default)]
pub enum Ann {
    #[default]
    None,
    /// `@`: the measure equals the one being inducted on.
    Eq(u8),
    /// `*`: the measure is strictly smaller.
    Lt(u8),
}

impl fmt::Display for Ann {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Ann::None => Ok(()),
            Ann::Eq(g) => write!(f, "{}", "@".repeat(g as usize)),
            Ann::Lt(g) => write!(f, "{}", "*".repeat(g as usize)),
        }
    }
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct Atom {
    pub pred: Name,
    pub args: Vec<Term>,
    pub ann: Ann,
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Formula {
    True,
    False,
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Imp(Box<Formula>, Box<Formula>),
    Forall(Binder, Box<Formula>),
    Exists(Binder, Box<Formula>),
    Nabla(Binder, Box<Formula>),
    Eq(Term, Term),
    Atom(Atom),
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Quant {
    Forall,
    Exists,
    Nabla,
}

impl fmt::Debug for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", crate::print::formula_to_string(self))
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", crate::print::formula_to_string(self))
    }
}

impl Formula {
    pub fn atom(pred: &str, args: Vec<Term>) -> Formula {
        Formula::Atom(Atom {
            pred: pred.into(),
            args,
            ann: Ann::None,
        })
    }

    pub fn and(a: Formula, b: Formula) -> Formula {
        Formula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Formula, b: Formula) -> Formula {
        Formula::Or(Box::new(a), Box::new(b))
    }

    pub fn imp(a: Formula, b: Formula) -> Formula {
        Formula::Imp(Box::new(a), Box::new(b))
    }

    pub fn quant(q: Quant, b: Binder, body: Formula) -> Formula {
        match q {
            Quant::Forall => Formula::Forall(b, Box::new(body)),
            Quant::Exists => Formula::Exists(b, Box::new(body)),
            Quant::Nabla => Formula::Nabla(b, Box::new(body)),
        }
    }

    pub fn as_quant(&self) -> Option<(Quant, &Binder, &Formula)> {
        match self {
            Formula::Forall(b, f) => Some((Quant::Forall, b, f)),
            Formula::Exists(b, f) => Some((Quant::Exists, b, f)),
            Formula::Nabla(b, f) => Some((Quant::Nabla, b, f)),
            _ => None,
        }
    }

    /// `a1 -> a2 -> ... -> c` split into premises and conclusion.
    pub fn premises(&self) -> (Vec<&Formula>, &Formula) {
        let mut prems = Vec::new();
        let mut cur = self;
        while let Formula::Imp(a, b) = cur {
            prems.push(&**a);
            cur = b;
        }
        (prems, cur)
    }

    /// Applies `f` to every term, passing the number of enclosing
    /// formula binders.
    /// Deep η-contraction of every term.
    pub fn eta_normal(&self) -> Formula {
        self.map_terms(&mut |t, _| terms::eta_normal(t))
    }

    pub fn map_terms(&self, f: &mut dyn FnMut(&Term, u32) -> Term) -> Formula {
        self.map_terms_at(0, f)
    }

    fn map_terms_at(&self, depth: u32, f: &mut dyn FnMut(&Term, u32) -> Term) -> Formula {
        match self {
            Formula::True | Formula::False => self.clone(),
            Formula::And(a, b) => Formula::and(a.map_terms_at(depth, f), b.map_terms_at(depth, f)),
            Formula::Or(a, b) => Formula::or(a.map_terms_at(depth, f), b.map_terms_at(depth, f)),
            Formula::Imp(a, b) => Formula::imp(a.map_terms_at(depth, f), b.map_terms_at(depth, f)),
            Formula::Forall(bd, body) => {
                Formula::Forall(bd.clone(), Box::new(body.map_terms_at(depth + 1, f)))
            }
            Formula::Exists(bd, body) => {
                Formula::Exists(bd.clone(), Box::new(body.map_terms_at(depth + 1, f)))
            }
            Formula::Nabla(bd, body) => {
                Formula::Nabla(bd.clone(), Box::new(body.map_terms_at(depth + 1, f)))
            }
            Formula::Eq(s, t) => Formula::Eq(f(s, depth), f(t, depth)),
            Formula::Atom(a) => Formula::Atom(Atom {
                pred: a.pred.clone(),
                args: a.args.iter().map(|t| f(t, depth)).collect(),
                ann: a.ann,
            }),
        }
    }

    pub fn for_each_term(&self, f: &mut dyn FnMut(&Term)) {
        match self {
            Formula::True | Formula::False => {}
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Imp(a, b) => {
                a.for_each_term(f);
                b.for_each_term(f);
            }
            Formula::Forall(_, body) | Formula::Exists(_, body) | Formula::Nabla(_, body) => {
                body.for_each_term(f)
            }
            Formula::Eq(s, t) => {
                f(s);
                f(t);
            }
            Formula::Atom(a) => a.args.iter().for_each(f),
        }
    }

    /// Instantiates the body of a quantifier (the formula directly under
    /// the binder) with `arg`.
    pub fn instantiate(body: &Formula, arg: &Term) -> Formula {
        body.map_terms(&mut |t, d| terms::subst_bound(t, d, arg))
    }

    /// Turns the free variable `v` into a new outermost binder: the result
    /// is the body of a quantifier over `v`.
    pub fn abstract_var(&self, v: &Var) -> Formula {
        let h = terms::Head::Var(v.clone());
        self.map_terms(&mut |t, d| terms::abstract_head_at(t, &h, d))
    }

    pub fn replace_vars(&self, f: &dyn Fn(&Var) -> Option<Term>) -> Formula {
        self.map_terms(&mut |t, _| replace_vars(t, f))
    }

    pub fn replace_nominals(&self, f: &dyn Fn(&Nominal) -> Option<Term>) -> Formula {
        self.map_terms(&mut |t, _| replace_nominals(t, f))
    }

    pub fn permute(&self, pi: &Permutation) -> Formula {
        if pi.is_identity() {
            return self.clone();
        }
        self.map_terms(&mut |t, _| pi.apply(t))
    }

    pub fn support(&self) -> BTreeSet<Nominal> {
        let mut out = BTreeSet::new();
        self.for_each_term(&mut |t| collect_support(t, &mut out));
        out
    }

    pub fn free_vars(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        self.for_each_term(&mut |t| collect_vars(t, &mut out));
        out
    }

    /// Shifts loose bound indices (used when moving a formula under a new
    /// binder).
    pub fn shift(&self, amount: i64) -> Formula {
        self.map_terms(&mut |t, d| terms::shift(t, amount, d))
    }

    pub fn with_ann(&self, ann: Ann) -> Formula {
        match self {
            Formula::Atom(a) => Formula::Atom(Atom { ann, ..a.clone() }),
            other => other.clone(),
        }
    }

    pub fn clear_anns(&self) -> Formula {
        match self {
            Formula::Atom(a) => Formula::Atom(Atom {
                ann: Ann::None,
                ..a.clone()
            }),
            Formula::True | Formula::False | Formula::Eq(..) => self.clone(),
            Formula::And(a, b) => Formula::and(a.clear_anns(), b.clear_anns()),
            Formula::Or(a, b) => Formula::or(a.clear_anns(), b.clear_anns()),
            Formula::Imp(a, b) => Formula::imp(a.clear_anns(), b.clear_anns()),
            Formula::Forall(bd, f) => Formula::Forall(bd.clone(), Box::new(f.clear_anns())),
            Formula::Exists(bd, f) => Formula::Exists(bd.clone(), Box::new(f.clear_anns())),
            Formula::Nabla(bd, f) => Formula::Nabla(bd.clone(), Box::new(f.clear_anns())),
        }
    }

    pub fn is_atomic(&self) -> bool {
        matches!(self, Formula::Atom(_) | Formula::Eq(..))
    }

    /// Predicate names used anywhere in the formula, with polarity
    /// (`true` = positive).
    pub fn predicate_occurrences(&self, positive: bool, out: &mut Vec<(Name, bool)>) {
        match self {
            Formula::True | Formula::False | Formula::Eq(..) => {}
            Formula::Atom(a) => out.push((a.pred.clone(), positive)),
            Formula::And(a, b) | Formula::Or(a, b) => {
                a.predicate_occurrences(positive, out);
                b.predicate_occurrences(positive, out);
            }
            Formula::Imp(a, b) => {
                a.predicate_occurrences(!positive, out);
                b.predicate_occurrences(positive, out);
            }
            Formula::Forall(_, f) | Formula::Exists(_, f) | Formula::Nabla(_, f) => {
                f.predicate_occurrences(positive, out)
            }
        }
    }
}
