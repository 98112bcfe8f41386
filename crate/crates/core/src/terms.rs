//! Simply typed λ-terms with ordinary constants, nominal constants and
//! variables.
//!
//! Binders use de Bruijn indices, so structural equality is α-equivalence.
//! Every `Term` that leaves this module is β-normal: the smart constructors
//! [`Term::app`] and [`Term::lam`] reduce redexes as they are built, and all
//! substitution functions are hereditary.

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

pub type Name = Arc<str>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TermError {
    #[error("type error: {0}")]
    Type(String),
}

/// Simple types. `Prop` is the type of G formulas and only appears as the
/// target of predicate signatures.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Ty {
    Base(Name),
    Prop,
    Arrow(Arc<Ty>, Arc<Ty>),
}

impl Ty {
    pub fn base(name: &str) -> Ty {
        Ty::Base(name.into())
    }

    pub fn arrow(from: Ty, to: Ty) -> Ty {
        Ty::Arrow(Arc::new(from), Arc::new(to))
    }

    /// `a1 -> ... -> an -> target`
    pub fn arrows(args: impl IntoIterator<Item = Ty>, target: Ty) -> Ty {
        let args: Vec<Ty> = args.into_iter().collect();
        args.into_iter()
            .rev()
            .fold(target, |acc, a| Ty::arrow(a, acc))
    }

    /// Splits `a1 -> ... -> an -> b` into `([a1..an], b)` with `b` not an arrow.
    pub fn uncurry(&self) -> (Vec<Ty>, Ty) {
        let mut args = Vec::new();
        let mut cur = self.clone();
        while let Ty::Arrow(a, b) = cur {
            args.push((*a).clone());
            cur = (*b).clone();
        }
        (args, cur)
    }

    pub fn contains_prop(&self) -> bool {
        match self {
            Ty::Prop => true,
            Ty::Base(_) => false,
            Ty::Arrow(a, b) => a.contains_prop() || b.contains_prop(),
        }
    }

    pub fn order(&self) -> usize {
        match self {
            Ty::Base(_) | Ty::Prop => 0,
            Ty::Arrow(a, b) => (a.order() + 1).max(b.order()),
        }
    }
}

impl fmt::Debug for Ty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for Ty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ty::Base(n) => write!(f, "{n}"),
            Ty::Prop => write!(f, "prop"),
            Ty::Arrow(a, b) => {
                if matches!(**a, Ty::Arrow(..)) {
                    write!(f, "({a}) -> {b}")
                } else {
                    write!(f, "{a} -> {b}")
                }
            }
        }
    }
}

/// A free variable: an eigenvariable of a sequent or an instantiatable
/// logic variable. Which of the two it is depends on the unification
/// problem it takes part in, not on the variable itself.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct Var {
    pub name: Name,
    pub ty: Ty,
}

impl Var {
    pub fn new(name: &str, ty: Ty) -> Var {
        Var {
            name: name.into(),
            ty,
        }
    }
}

/// An ordinary (non-nominal) constant.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct Const {
    pub name: Name,
    pub ty: Ty,
}

/// A nominal constant `n<index>` of a given type. Each type has its own
/// namespace, so `n1 : i` and `n1 : i -> i` are different constants.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct Nominal {
    pub index: u32,
    pub ty: Ty,
}

impl Nominal {
    pub fn new(index: u32, ty: Ty) -> Nominal {
        Nominal { index, ty }
    }
}

impl fmt::Display for Nominal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n{}", self.index)
    }
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum Head {
    Bound(u32),
    Var(Var),
    Const(Const),
    Nominal(Nominal),
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum Node {
    Atom(Head),
    /// Head applied to a non-empty spine. Never a redex.
    App(Head, Vec<Term>),
    /// Abstraction; the type is that of the bound variable.
    Lam(Ty, Term),
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Term(Arc<Node>);

impl fmt::Debug for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", crate::print::term_to_string(self))
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", crate::print::term_to_string(self))
    }
}

impl Term {
    pub fn node(&self) -> &Node {
        &self.0
    }

    fn mk(node: Node) -> Term {
        Term(Arc::new(node))
    }

    pub fn bound(i: u32) -> Term {
        Term::mk(Node::Atom(Head::Bound(i)))
    }

    pub fn var(v: Var) -> Term {
        Term::mk(Node::Atom(Head::Var(v)))
    }

    pub fn cnst(name: &str, ty: Ty) -> Term {
        Term::mk(Node::Atom(Head::Const(Const {
            name: name.into(),
            ty,
        })))
    }

    pub fn from_const(c: Const) -> Term {
        Term::mk(Node::Atom(Head::Const(c)))
    }

    pub fn nominal(n: Nominal) -> Term {
        Term::mk(Node::Atom(Head::Nominal(n)))
    }

    pub fn head_term(h: Head) -> Term {
        Term::mk(Node::Atom(h))
    }

    /// Abstraction over a variable of type `ty`; `body` already uses
    /// `Bound(0)` for the new binder.
    pub fn lam(ty: Ty, body: Term) -> Term {
        Term::mk(Node::Lam(ty, body))
    }

    pub fn lams(tys: &[Ty], body: Term) -> Term {
        tys.iter()
            .rev()
            .fold(body, |acc, ty| Term::lam(ty.clone(), acc))
    }

    /// Application with β-reduction of any redex created.
    pub fn app(head: Term, args: Vec<Term>) -> Term {
        if args.is_empty() {
            return head;
        }
        match head.node() {
            Node::Atom(h) => Term::mk(Node::App(h.clone(), args)),
            Node::App(h, spine) => {
                let mut all = spine.clone();
                all.extend(args);
                Term::mk(Node::App(h.clone(), all))
            }
            Node::Lam(_, body) => {
                let mut args = args.into_iter();
                let first = args.next().unwrap();
                let reduced = instantiate(body, &first);
                Term::app(reduced, args.collect())
            }
        }
    }

    pub fn app1(head: Term, arg: Term) -> Term {
        Term::app(head, vec![arg])
    }

    /// Head and spine; `None` for abstractions.
    pub fn spine(&self) -> Option<(&Head, &[Term])> {
        match self.node() {
            Node::Atom(h) => Some((h, &[])),
            Node::App(h, args) => Some((h, args.as_slice())),
            Node::Lam(..) => None,
        }
    }

    pub fn as_var(&self) -> Option<&Var> {
        match self.node() {
            Node::Atom(Head::Var(v)) => Some(v),
            _ => None,
        }
    }

    pub fn as_nominal(&self) -> Option<&Nominal> {
        match self.node() {
            Node::Atom(Head::Nominal(n)) => Some(n),
            _ => None,
        }
    }

    pub fn head_const_name(&self) -> Option<&str> {
        match self.spine()? {
            (Head::Const(c), _) => Some(&c.name),
            _ => None,
        }
    }

    pub fn is_closed(&self) -> bool {
        self.max_loose() == 0
    }

    /// One more than the largest loose de Bruijn index (0 if none).
    fn max_loose(&self) -> u32 {
        fn go(t: &Term, depth: u32) -> u32 {
            match t.node() {
                Node::Atom(h) => head_loose(h, depth),
                Node::App(h, args) => args
                    .iter()
                    .map(|a| go(a, depth))
                    .fold(head_loose(h, depth), u32::max),
                Node::Lam(_, b) => go(b, depth + 1),
            }
        }
        fn head_loose(h: &Head, depth: u32) -> u32 {
            match h {
                Head::Bound(i) if *i >= depth => i - depth + 1,
                _ => 0,
            }
        }
        go(self, 0)
    }
}

/// Shifts loose indices `>= cutoff` by `amount`.
pub fn shift(t: &Term, amount: i64, cutoff: u32) -> Term {
    if amount == 0 || t.max_loose_from(cutoff) == 0 {
        return t.clone();
    }
    match t.node() {
        Node::Atom(h) => Term::head_term(shift_head(h, amount, cutoff)),
        Node::App(h, args) => Term::mk(Node::App(
            shift_head(h, amount, cutoff),
            args.iter().map(|a| shift(a, amount, cutoff)).collect(),
        )),
        Node::Lam(ty, b) => Term::lam(ty.clone(), shift(b, amount, cutoff + 1)),
    }
}

fn shift_head(h: &Head, amount: i64, cutoff: u32) -> Head {
    match h {
        Head::Bound(i) if *i >= cutoff => {
            let j = *i as i64 + amount;
            assert!(j >= 0, "negative de Bruijn index");
            Head::Bound(j as u32)
        }
        other => other.clone(),
    }
}

impl Term {
    fn max_loose_from(&self, cutoff: u32) -> u32 {
        fn go(t: &Term, depth: u32) -> u32 {
            match t.node() {
                Node::Atom(h) => hl(h, depth),
                Node::App(h, args) => args
                    .iter()
                    .map(|a| go(a, depth))
                    .fold(hl(h, depth), u32::max),
                Node::Lam(_, b) => go(b, depth + 1),
            }
        }
        fn hl(h: &Head, depth: u32) -> u32 {
            match h {
                Head::Bound(i) if *i >= depth => 1,
                _ => 0,
            }
        }
        go(self, cutoff)
    }
}

/// Substitutes `arg` for index 0 in `body` (which sits under one binder),
/// lowering the remaining loose indices. The result is β-normal.
pub fn instantiate(body: &Term, arg: &Term) -> Term {
    subst_bound(body, 0, arg)
}

/// Substitutes `arg` for the loose index `depth`, lowering larger ones.
pub fn subst_bound(t: &Term, depth: u32, arg: &Term) -> Term {
    if t.max_loose_from(depth) == 0 {
        return t.clone();
    }
    match t.node() {
        Node::Atom(h) => subst_head(h, depth, arg),
        Node::App(h, args) => {
            let args: Vec<Term> = args.iter().map(|a| subst_bound(a, depth, arg)).collect();
            Term::app(subst_head(h, depth, arg), args)
        }
        Node::Lam(ty, b) => Term::lam(ty.clone(), subst_bound(b, depth + 1, arg)),
    }
}

fn subst_head(h: &Head, depth: u32, arg: &Term) -> Term {
    match h {
        Head::Bound(i) if *i == depth => shift(arg, depth as i64, 0),
        Head::Bound(i) if *i > depth => Term::bound(i - 1),
        other => Term::head_term(other.clone()),
    }
}

/// Hereditary β-normalization of an arbitrary term built without the
/// smart constructors (for example by a parser or a test).
pub fn normalize(t: &Term) -> Term {
    match t.node() {
        Node::Atom(_) => t.clone(),
        Node::App(h, args) => Term::app(
            Term::head_term(h.clone()),
            args.iter().map(normalize).collect(),
        ),
        Node::Lam(ty, b) => Term::lam(ty.clone(), normalize(b)),
    }
}

/// Deep η-contraction: `λx. h a1 ... an x` becomes `h a1 ... an` whenever
/// `x` occurs nowhere else. Together with β-normal terms this gives the
/// canonical form used for syntactic comparisons.
pub fn eta_normal(t: &Term) -> Term {
    match t.node() {
        Node::Atom(_) => t.clone(),
        Node::App(h, args) => Term::mk(Node::App(h.clone(), args.iter().map(eta_normal).collect())),
        Node::Lam(ty, b) => {
            let b = eta_normal(b);
            if let Node::App(h, args) = b.node() {
                let (last, rest) = args.split_last().expect("non-empty spine");
                let h_ok = !matches!(h, Head::Bound(0));
                if matches!(last.node(), Node::Atom(Head::Bound(0)))
                    && h_ok
                    && rest.iter().all(|a| !has_loose(a, 0))
                {
                    let inner = if rest.is_empty() {
                        Term::head_term(h.clone())
                    } else {
                        Term::mk(Node::App(h.clone(), rest.to_vec()))
                    };
                    return shift(&inner, -1, 0);
                }
            }
            Term::lam(ty.clone(), b)
        }
    }
}

fn has_loose(t: &Term, i: u32) -> bool {
    match t.node() {
        Node::Atom(Head::Bound(j)) => *j == i,
        Node::Atom(_) => false,
        Node::App(h, args) => {
            matches!(h, Head::Bound(j) if *j == i) || args.iter().any(|a| has_loose(a, i))
        }
        Node::Lam(_, b) => has_loose(b, i + 1),
    }
}

/// Builds a raw (possibly non-normal) application without reducing; only
/// meant for tests and oracles that want to observe `normalize`.
pub fn raw_app(head: Term, arg: Term) -> Term {
    match head.node() {
        Node::Atom(h) => Term::mk(Node::App(h.clone(), vec![arg])),
        Node::App(h, spine) => {
            let mut all = spine.clone();
            all.push(arg);
            Term::mk(Node::App(h.clone(), all))
        }
        // A redex cannot be represented in spine form; keep it reduced.
        Node::Lam(..) => Term::app1(head, arg),
    }
}

/// Replaces free variables according to `f`. Replacement terms must not
/// contain loose bound indices.
pub fn replace_vars(t: &Term, f: &dyn Fn(&Var) -> Option<Term>) -> Term {
    match t.node() {
        Node::Atom(Head::Var(v)) => f(v).unwrap_or_else(|| t.clone()),
        Node::Atom(_) => t.clone(),
        Node::App(h, args) => {
            let args: Vec<Term> = args.iter().map(|a| replace_vars(a, f)).collect();
            let head = match h {
                Head::Var(v) => f(v).unwrap_or_else(|| Term::head_term(h.clone())),
                _ => Term::head_term(h.clone()),
            };
            Term::app(head, args)
        }
        Node::Lam(ty, b) => Term::lam(ty.clone(), replace_vars(b, f)),
    }
}

/// Replaces nominal constants according to `f` (used for permutations and
/// for instantiating a nominal by a term).
pub fn replace_nominals(t: &Term, f: &dyn Fn(&Nominal) -> Option<Term>) -> Term {
    match t.node() {
        Node::Atom(Head::Nominal(n)) => f(n).unwrap_or_else(|| t.clone()),
        Node::Atom(_) => t.clone(),
        Node::App(h, args) => {
            let args: Vec<Term> = args.iter().map(|a| replace_nominals(a, f)).collect();
            let head = match h {
                Head::Nominal(n) => f(n).unwrap_or_else(|| Term::head_term(h.clone())),
                _ => Term::head_term(h.clone()),
            };
            Term::app(head, args)
        }
        Node::Lam(ty, b) => Term::lam(ty.clone(), replace_nominals(b, f)),
    }
}

/// Turns occurrences of the atom `target` into a new outermost binder:
/// the result is the body of `λx. t[x/target]`.
pub fn abstract_head(t: &Term, target: &Head) -> Term {
    abstract_head_at(t, target, 0)
}

/// Like `abstract_head` for a term sitting under `depth` enclosing binders
/// that are not to be shifted: `target` becomes index `depth` and only
/// indices `>= depth` move up.
pub fn abstract_head_at(t: &Term, target: &Head, depth: u32) -> Term {
    fn go(t: &Term, depth: u32, target: &Head) -> Term {
        match t.node() {
            Node::Atom(h) => Term::head_term(ab(h, depth, target)),
            Node::App(h, args) => Term::mk(Node::App(
                ab(h, depth, target),
                args.iter().map(|a| go(a, depth, target)).collect(),
            )),
            Node::Lam(ty, b) => Term::lam(ty.clone(), go(b, depth + 1, target)),
        }
    }
    fn ab(h: &Head, depth: u32, target: &Head) -> Head {
        match h {
            Head::Bound(i) if *i >= depth => Head::Bound(i + 1),
            _ if h == target => Head::Bound(depth),
            other => other.clone(),
        }
    }
    // Loose bound indices in `target` itself are not supported.
    go(t, depth, target)
}

/// The nominal constants occurring in `t`.
pub fn support(t: &Term) -> BTreeSet<Nominal> {
    let mut out = BTreeSet::new();
    collect_support(t, &mut out);
    out
}

pub fn collect_support(t: &Term, out: &mut BTreeSet<Nominal>) {
    match t.node() {
        Node::Atom(Head::Nominal(n)) => {
            out.insert(n.clone());
        }
        Node::Atom(_) => {}
        Node::App(h, args) => {
            if let Head::Nominal(n) = h {
                out.insert(n.clone());
            }
            for a in args {
                collect_support(a, out);
            }
        }
        Node::Lam(_, b) => collect_support(b, out),
    }
}

pub fn free_vars(t: &Term) -> BTreeSet<Var> {
    let mut out = BTreeSet::new();
    collect_vars(t, &mut out);
    out
}

pub fn collect_vars(t: &Term, out: &mut BTreeSet<Var>) {
    match t.node() {
        Node::Atom(Head::Var(v)) => {
            out.insert(v.clone());
        }
        Node::Atom(_) => {}
        Node::App(h, args) => {
            if let Head::Var(v) = h {
                out.insert(v.clone());
            }
            for a in args {
                collect_vars(a, out);
            }
        }
        Node::Lam(_, b) => collect_vars(b, out),
    }
}

pub fn occurs_var(t: &Term, name: &str) -> bool {
    match t.node() {
        Node::Atom(Head::Var(v)) => &*v.name == name,
        Node::Atom(_) => false,
        Node::App(h, args) => {
            matches!(h, Head::Var(v) if &*v.name == name)
                || args.iter().any(|a| occurs_var(a, name))
        }
        Node::Lam(_, b) => occurs_var(b, name),
    }
}

/// Type inference against a context of bound-variable types (innermost
/// last).
pub fn type_of(t: &Term, ctx: &[Ty]) -> Result<Ty, TermError> {
    match t.node() {
        Node::Atom(h) => head_type(h, ctx),
        Node::App(h, args) => {
            let mut ty = head_type(h, ctx)?;
            for a in args {
                let aty = type_of(a, ctx)?;
                match ty {
                    Ty::Arrow(from, to) if *from == aty => ty = (*to).clone(),
                    Ty::Arrow(from, _) => {
                        return Err(TermError::Type(format!(
                            "argument {a} has type {aty}, expected {from}"
                        )))
                    }
                    other => {
                        return Err(TermError::Type(format!(
                            "{t} applies a head of non-function type {other}"
                        )))
                    }
                }
            }
            Ok(ty)
        }
        Node::Lam(ty, b) => {
            let mut inner = ctx.to_vec();
            inner.push(ty.clone());
            Ok(Ty::arrow(ty.clone(), type_of(b, &inner)?))
        }
    }
}

fn head_type(h: &Head, ctx: &[Ty]) -> Result<Ty, TermError> {
    match h {
        Head::Bound(i) => {
            let i = *i as usize;
            if i < ctx.len() {
                Ok(ctx[ctx.len() - 1 - i].clone())
            } else {
                Err(TermError::Type(format!("unbound index {i}")))
            }
        }
        Head::Var(v) => Ok(v.ty.clone()),
        Head::Const(c) => Ok(c.ty.clone()),
        Head::Nominal(n) => Ok(n.ty.clone()),
    }
}

/// A finite, type-preserving permutation of nominal constants.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct Permutation {
    map: BTreeMap<Nominal, Nominal>,
}

impl Permutation {
    pub fn identity() -> Permutation {
        Permutation::default()
    }

    /// Builds a permutation from explicit pairs; fails unless the pairs
    /// form a type-preserving bijection on their domain.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (Nominal, Nominal)>) -> Option<Permutation> {
        let mut map = BTreeMap::new();
        for (a, b) in pairs {
            if a.ty != b.ty {
                return None;
            }
            if map.insert(a, b).is_some() {
                return None;
            }
        }
        let dom: BTreeSet<&Nominal> = map.keys().collect();
        let rng: BTreeSet<&Nominal> = map.values().collect();
        if dom != rng {
            return None;
        }
        map.retain(|a, b| a != b);
        Some(Permutation { map })
    }

    pub fn swap(a: Nominal, b: Nominal) -> Permutation {
        Permutation::from_pairs([(a.clone(), b.clone()), (b, a)]).expect("swap of distinct types")
    }

    pub fn get(&self, n: &Nominal) -> Nominal {
        self.map.get(n).cloned().unwrap_or_else(|| n.clone())
    }

    pub fn is_identity(&self) -> bool {
        self.map.is_empty()
    }

    pub fn inverse(&self) -> Permutation {
        Permutation {
            map: self
                .map
                .iter()
                .map(|(a, b)| (b.clone(), a.clone()))
                .collect(),
        }
    }

    pub fn pairs(&self) -> impl Iterator<Item = (&Nominal, &Nominal)> {
        self.map.iter()
    }

    pub fn apply(&self, t: &Term) -> Term {
        apply_perm(self, t)
    }
}

pub fn apply_perm(pi: &Permutation, t: &Term) -> Term {
    if pi.is_identity() {
        return t.clone();
    }
    replace_nominals(t, &|n| pi.map.get(n).map(|m| Term::nominal(m.clone())))
}

/// All type-preserving permutations of `a ∪ c` (identity elsewhere), each
/// exactly once, identity first.
pub fn candidate_perms(a: &BTreeSet<Nominal>, c: &BTreeSet<Nominal>) -> Vec<Permutation> {
    let all: BTreeSet<Nominal> = a.union(c).cloned().collect();
    let mut by_ty: BTreeMap<Ty, Vec<Nominal>> = BTreeMap::new();
    for n in all {
        by_ty.entry(n.ty.clone()).or_default().push(n);
    }
    let mut out = vec![Permutation::identity()];
    for group in by_ty.values() {
        let perms = permutations(group.len());
        let mut next = Vec::with_capacity(out.len() * perms.len());
        for base in &out {
            for p in &perms {
                let mut map = base.map.clone();
                for (i, &j) in p.iter().enumerate() {
                    if i != j {
                        map.insert(group[i].clone(), group[j].clone());
                    }
                }
                next.push(Permutation { map });
            }
        }
        out = next;
    }
    out
}

/// Permutations of `0..n` in lexicographic order (identity first).
fn permutations(n: usize) -> Vec<Vec<usize>> {
    fn go(prefix: &mut Vec<usize>, used: &mut Vec<bool>, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == used.len() {
            out.push(prefix.clone());
            return;
        }
        for i in 0..used.len() {
            if !used[i] {
                used[i] = true;
                prefix.push(i);
                go(prefix, used, out);
                prefix.pop();
                used[i] = false;
            }
        }
    }
    let mut out = Vec::new();
    go(&mut Vec::new(), &mut vec![false; n], &mut out);
    out
}

thread_local! {
    static NOMINAL_ORDER: RefCell<Option<Vec<u32>>> = const { RefCell::new(None) };
}

/// Runs `f` with fresh nominal constants drawn in the order `order`
/// (a permutation of `1..=order.len()`, indices past its end are used as
/// is). Replaying a proof under a permuted order exercises equivariance.
pub fn with_nominal_order<R>(order: &[u32], f: impl FnOnce() -> R) -> R {
    let prev = NOMINAL_ORDER.with(|o| o.replace(Some(order.to_vec())));
    let out = f();
    NOMINAL_ORDER.with(|o| *o.borrow_mut() = prev);
    out
}

/// First nominal constant of type `ty` outside `avoid`, lowest index first
/// unless an order is installed by [`with_nominal_order`].
pub fn fresh_nominal(ty: &Ty, avoid: &BTreeSet<Nominal>) -> Nominal {
    NOMINAL_ORDER.with(|o| {
        let o = o.borrow();
        let mut i = 1u32;
        loop {
            let k = o
                .as_ref()
                .and_then(|v| v.get(i as usize - 1).copied())
                .unwrap_or(i);
            let n = Nominal::new(k, ty.clone());
            if !avoid.contains(&n) {
                return n;
            }
            i += 1;
        }
    })
}

/// First of `base`, `base1`, `base2`, ... that `taken` accepts as free.
pub fn fresh_name(base: &str, taken: &dyn Fn(&str) -> bool) -> String {
    let stem = base.trim_end_matches(|c: char| c.is_ascii_digit());
    let stem = if stem.is_empty() { base } else { stem };
    if !taken(base) {
        return base.to_string();
    }
    let mut i = 1;
    loop {
        let cand = format!("{stem}{i}");
        if !taken(&cand) {
            return cand;
        }
        i += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn i() -> Ty {
        Ty::base("i")
    }

    fn c(name: &str) -> Term {
        Term::cnst(name, i())
    }

    fn n(k: u32) -> Term {
        Term::nominal(Nominal::new(k, i()))
    }

    #[test]
    fn identity_redex() {
        let id = Term::lam(i(), Term::bound(0));
        assert_eq!(Term::app1(id, c("c")), c("c"));
    }

    #[test]
    fn constant_function_redex() {
        let k = Term::lam(i(), c("d"));
        assert_eq!(Term::app1(k, c("c")), c("d"));
    }

    #[test]
    fn higher_order_redex() {
        // (λf. λx. f x) g c  →  g c
        let ii = Ty::arrow(i(), i());
        let apply = Term::lam(
            ii.clone(),
            Term::lam(i(), Term::app1(Term::bound(1), Term::bound(0))),
        );
        let g = Term::cnst("g", ii);
        let got = Term::app(apply, vec![g.clone(), c("c")]);
        assert_eq!(got, Term::app1(g, c("c")));
    }

    #[test]
    fn alpha_equivalence_is_structural() {
        assert_eq!(
            Term::lam(i(), Term::bound(0)),
            Term::lam(i(), Term::bound(0))
        );
    }

    #[test]
    fn support_examples() {
        assert!(support(&c("c")).is_empty());
        let ii = Ty::arrow(i(), i());
        let n1 = Nominal::new(1, Ty::arrow(ii.clone(), i()));
        let t = Term::app1(Term::nominal(n1.clone()), Term::lam(i(), Term::bound(0)));
        assert_eq!(support(&t), BTreeSet::from([n1]));
        let t = Term::app1(Term::lam(i(), Term::bound(0)), n(1));
        assert_eq!(support(&t), BTreeSet::from([Nominal::new(1, i())]));
    }

    #[test]
    fn perm_examples() {
        let f = Term::cnst("f", Ty::arrows([i(), i()], i()));
        let pi = Permutation::swap(Nominal::new(1, i()), Nominal::new(2, i()));
        let t = Term::app(f.clone(), vec![n(1), n(2)]);
        assert_eq!(apply_perm(&pi, &t), Term::app(f, vec![n(2), n(1)]));
        assert_eq!(apply_perm(&Permutation::identity(), &t), t);
        let lam = Term::lam(i(), n(1));
        assert_eq!(apply_perm(&pi, &lam), Term::lam(i(), n(2)));
    }

    #[test]
    fn fresh_nominal_examples() {
        assert_eq!(fresh_nominal(&i(), &BTreeSet::new()), Nominal::new(1, i()));
        let avoid = BTreeSet::from([Nominal::new(1, i())]);
        assert_eq!(fresh_nominal(&i(), &avoid), Nominal::new(2, i()));
        // per-type namespaces
        let ii = Ty::arrow(i(), i());
        assert_eq!(fresh_nominal(&ii, &avoid), Nominal::new(1, ii));
    }

    #[test]
    fn candidate_perm_counts() {
        let s = |ks: &[u32]| {
            ks.iter()
                .map(|&k| Nominal::new(k, i()))
                .collect::<BTreeSet<_>>()
        };
        assert_eq!(
            candidate_perms(&s(&[]), &s(&[])),
            vec![Permutation::identity()]
        );
        let two = candidate_perms(&s(&[1]), &s(&[2]));
        assert_eq!(two.len(), 2);
        assert!(two[0].is_identity());
        assert_eq!(candidate_perms(&s(&[1, 2]), &s(&[3])).len(), 6);
        // mixed types do not mix
        let mut mixed = s(&[1, 2]);
        mixed.insert(Nominal::new(1, Ty::base("j")));
        assert_eq!(candidate_perms(&mixed, &s(&[])).len(), 2);
    }

    #[test]
    fn type_errors_are_reported() {
        let f = Term::cnst("f", Ty::arrow(i(), i()));
        let bad = raw_app(f, Term::cnst("k", Ty::base("j")));
        assert!(type_of(&bad, &[]).is_err());
    }

    #[test]
    fn abstract_then_instantiate_roundtrip() {
        let f = Term::cnst("f", Ty::arrows([i(), i()], i()));
        let t = Term::app(
            f,
            vec![
                n(1),
                Term::lam(
                    i(),
                    Term::app(
                        Term::cnst("g", Ty::arrows([i(), i()], i())),
                        vec![n(1), Term::bound(0)],
                    ),
                ),
            ],
        );
        let body = abstract_head(&t, &Head::Nominal(Nominal::new(1, i())));
        assert!(!support(&body).contains(&Nominal::new(1, i())));
        assert_eq!(instantiate(&body, &n(1)), t);
    }
}
