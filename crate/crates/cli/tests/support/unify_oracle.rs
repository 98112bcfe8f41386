//! Brute-force oracle for pattern unification over a tiny universe: one
//! base type `i`, the constants `a : i` and `f : i -> i -> i`, and the
//! nominal constants `n1`, `n2`. Ground terms are represented without the
//! library's term code so the check does not share its bugs.

use std::collections::{BTreeMap, BTreeSet};

use nabla::terms::{self, Head, Node, Nominal, Term, Ty, Var};
use nabla::unify::{unify_pattern, Substitution, UnifOutcome, UnifProblem};
use rand::rngs::StdRng;
use rand::Rng;

/// Ground term; `Hole` is the argument of a unary variable's value, `Slot`
/// an argument of a matched fresh variable.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum G {
    A,
    N(u32),
    Hole,
    Slot(usize),
    F(Box<G>, Box<G>),
}

impl G {
    fn has(&self, p: &dyn Fn(&G) -> bool) -> bool {
        p(self)
            || match self {
                G::F(x, y) => x.has(p) || y.has(p),
                _ => false,
            }
    }

    fn fill(&self, arg: &G) -> G {
        match self {
            G::Hole => arg.clone(),
            G::F(x, y) => G::F(Box::new(x.fill(arg)), Box::new(y.fill(arg))),
            g => g.clone(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct OVar {
    pub name: String,
    pub unary: bool,
    pub support: Vec<u32>,
}

/// Problem syntax: `V(i)` is variable `i`, `App(i, k)` applies unary
/// variable `i` to `n<k>`.
#[derive(Clone, Debug)]
pub enum P {
    A,
    N(u32),
    V(usize),
    App(usize, u32),
    F(Box<P>, Box<P>),
}

impl P {
    fn depth(&self) -> usize {
        match self {
            P::F(x, y) => 1 + x.depth().max(y.depth()),
            _ => 0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Problem {
    pub vars: Vec<OVar>,
    pub eqs: Vec<(P, P)>,
}

fn i() -> Ty {
    Ty::base("i")
}

fn nom(k: u32) -> Nominal {
    Nominal::new(k, i())
}

fn var_of(v: &OVar) -> Var {
    let ty = if v.unary { Ty::arrow(i(), i()) } else { i() };
    Var::new(&v.name, ty)
}

fn to_term(p: &P, vars: &[OVar]) -> Term {
    match p {
        P::A => Term::cnst("a", i()),
        P::N(k) => Term::nominal(nom(*k)),
        P::V(x) => Term::var(var_of(&vars[*x])),
        P::App(x, k) => Term::app(Term::var(var_of(&vars[*x])), vec![Term::nominal(nom(*k))]),
        P::F(x, y) => Term::app(
            Term::cnst("f", Ty::arrows([i(), i()], i())),
            vec![to_term(x, vars), to_term(y, vars)],
        ),
    }
}

impl Problem {
    pub fn to_unif(&self) -> UnifProblem {
        UnifProblem {
            equations: self
                .eqs
                .iter()
                .map(|(s, t)| (to_term(s, &self.vars), to_term(t, &self.vars)))
                .collect(),
            support: self
                .vars
                .iter()
                .map(|v| (var_of(v), v.support.iter().map(|&k| nom(k)).collect()))
                .collect(),
            signature: BTreeSet::from(["a".into(), "f".into()]),
        }
    }
}

// ---------------------------------------------------------------------------
// generation

fn gen_var_leaf(rng: &mut StdRng, vars: &[OVar]) -> P {
    let x = rng.gen_range(0..vars.len());
    if vars[x].unary {
        let args: Vec<u32> = [1, 2]
            .into_iter()
            .filter(|k| !vars[x].support.contains(k))
            .collect();
        P::App(x, args[rng.gen_range(0..args.len())])
    } else {
        P::V(x)
    }
}

fn gen_term(rng: &mut StdRng, d: usize, vars: &[OVar], var_weight: f64) -> P {
    if d == 0 || rng.gen_bool(0.35) {
        if rng.gen_bool(var_weight) {
            return gen_var_leaf(rng, vars);
        }
        return match rng.gen_range(0..3) {
            0 => P::A,
            k => P::N(k),
        };
    }
    P::F(
        Box::new(gen_term(rng, d - 1, vars, var_weight)),
        Box::new(gen_term(rng, d - 1, vars, var_weight)),
    )
}

/// Replaces random subterms with variable leaves.
fn perturb(rng: &mut StdRng, p: &P, vars: &[OVar]) -> P {
    if rng.gen_bool(0.25) {
        return gen_var_leaf(rng, vars);
    }
    match p {
        P::F(x, y) => P::F(
            Box::new(perturb(rng, x, vars)),
            Box::new(perturb(rng, y, vars)),
        ),
        p => p.clone(),
    }
}

pub fn gen_problem(rng: &mut StdRng) -> Problem {
    let nvars = rng.gen_range(1..=2);
    let names = ["X", "Y"];
    let vars: Vec<OVar> = (0..nvars)
        .map(|j| {
            let unary = rng.gen_bool(0.5);
            let mut support: Vec<u32> = [1, 2].into_iter().filter(|_| rng.gen_bool(0.5)).collect();
            if unary && support.len() == 2 {
                support.remove(rng.gen_range(0..2));
            }
            OVar {
                name: names[j].to_string(),
                unary,
                support,
            }
        })
        .collect();
    let neqs = rng.gen_range(1..=2);
    let eqs = (0..neqs)
        .map(|_| {
            if rng.gen_bool(0.5) {
                let t = gen_term(rng, 3, &vars, 0.2);
                let s = perturb(rng, &t, &vars);
                (s, t)
            } else {
                (gen_term(rng, 3, &vars, 0.3), gen_term(rng, 3, &vars, 0.3))
            }
        })
        .collect();
    Problem { vars, eqs }
}

// ---------------------------------------------------------------------------
// enumeration

fn ground_terms(atoms: &[G], depth: usize) -> Vec<G> {
    let mut level = atoms.to_vec();
    for _ in 0..depth {
        let mut next = atoms.to_vec();
        for x in &level {
            for y in &level {
                next.push(G::F(Box::new(x.clone()), Box::new(y.clone())));
            }
        }
        level = next;
    }
    level
}

/// Candidate values of a variable: ground terms of depth at most
/// `VALUE_DEPTH` over `a`, its permitted nominals and, for a unary
/// variable, its argument.
pub const VALUE_DEPTH: usize = 2;

fn candidates(v: &OVar) -> Vec<G> {
    let mut atoms = vec![G::A];
    atoms.extend(v.support.iter().map(|&k| G::N(k)));
    if v.unary {
        atoms.push(G::Hole);
    }
    ground_terms(&atoms, VALUE_DEPTH)
}

/// Evaluates under a partial assignment; `None` marks an unknown subterm.
fn eval(p: &P, asg: &[Option<G>]) -> Option<G> {
    match p {
        P::A => Some(G::A),
        P::N(k) => Some(G::N(*k)),
        P::V(x) => asg[*x].clone(),
        P::App(x, k) => asg[*x].as_ref().map(|g| g.fill(&G::N(*k))),
        P::F(x, y) => Some(G::F(Box::new(eval(x, asg)?), Box::new(eval(y, asg)?))),
    }
}

/// Whether the two sides can still be equal: unknown parts match anything.
fn compatible(s: &P, t: &P, asg: &[Option<G>]) -> bool {
    match (s, t) {
        (P::F(a, b), P::F(c, d)) => compatible(a, c, asg) && compatible(b, d, asg),
        (P::F(..), _) => eval(t, asg).is_none_or(|g| compatible_g(s, &g, asg)),
        (_, P::F(..)) => eval(s, asg).is_none_or(|g| compatible_g(t, &g, asg)),
        _ => match (eval(s, asg), eval(t, asg)) {
            (Some(x), Some(y)) => x == y,
            _ => true,
        },
    }
}

fn compatible_g(p: &P, g: &G, asg: &[Option<G>]) -> bool {
    match (p, g) {
        (P::F(a, b), G::F(c, d)) => compatible_g(a, c, asg) && compatible_g(b, d, asg),
        (P::F(..), _) => false,
        _ => eval(p, asg).is_none_or(|x| &x == g),
    }
}

/// Every assignment from the candidate sets that solves the problem.
pub fn solutions(p: &Problem) -> Vec<Vec<G>> {
    let cands: Vec<Vec<G>> = p.vars.iter().map(candidates).collect();
    let mut out = Vec::new();
    let mut asg: Vec<Option<G>> = vec![None; p.vars.len()];
    search(p, &cands, 0, &mut asg, &mut out);
    out
}

fn search(
    p: &Problem,
    cands: &[Vec<G>],
    k: usize,
    asg: &mut Vec<Option<G>>,
    out: &mut Vec<Vec<G>>,
) {
    if k == cands.len() {
        out.push(asg.iter().map(|g| g.clone().expect("assigned")).collect());
        return;
    }
    for c in &cands[k] {
        asg[k] = Some(c.clone());
        if p.eqs.iter().all(|(s, t)| compatible(s, t, asg)) {
            search(p, cands, k + 1, asg, out);
        }
    }
    asg[k] = None;
}

// ---------------------------------------------------------------------------
// checking an answer

/// Matches a library term (the value the unifier gave a variable) against a
/// ground value, binding the unifier's own variables.
fn matches(p: &Term, g: &G, binds: &mut BTreeMap<String, G>) -> bool {
    match p.node() {
        Node::Atom(Head::Const(c)) if &*c.name == "a" => *g == G::A,
        Node::Atom(Head::Nominal(n)) => *g == G::N(n.index),
        Node::Atom(Head::Bound(0)) => *g == G::Hole,
        Node::Atom(Head::Var(v)) => {
            if v.ty.uncurry().0.is_empty() {
                if g.has(&|x| *x == G::Hole) {
                    return false;
                }
                bind(binds, &v.name, g.clone())
            } else {
                // An η-contracted unary variable: `v` stands for `x\ v x`.
                bind(binds, &v.name, abstract_args(g, &[G::Hole]))
            }
        }
        Node::App(Head::Const(c), args) if &*c.name == "f" && args.len() == 2 => match g {
            G::F(x, y) => matches(&args[0], x, binds) && matches(&args[1], y, binds),
            _ => false,
        },
        Node::App(Head::Var(v), args) => {
            let atoms: Option<Vec<G>> = args
                .iter()
                .map(|a| match terms::eta_normal(a).node() {
                    Node::Atom(Head::Nominal(n)) => Some(G::N(n.index)),
                    Node::Atom(Head::Bound(0)) => Some(G::Hole),
                    _ => None,
                })
                .collect();
            let Some(atoms) = atoms else { return false };
            let t = abstract_args(g, &atoms);
            if t.has(&|x| *x == G::Hole) {
                return false;
            }
            bind(binds, &v.name, t)
        }
        _ => false,
    }
}

fn abstract_args(g: &G, atoms: &[G]) -> G {
    if let Some(i) = atoms.iter().position(|a| a == g) {
        return G::Slot(i);
    }
    match g {
        G::F(x, y) => G::F(
            Box::new(abstract_args(x, atoms)),
            Box::new(abstract_args(y, atoms)),
        ),
        g => g.clone(),
    }
}

fn bind(binds: &mut BTreeMap<String, G>, name: &str, t: G) -> bool {
    match binds.get(name) {
        Some(old) => *old == t,
        None => {
            binds.insert(name.to_string(), t);
            true
        }
    }
}

/// Whether the ground solution `sol` is an instance of `mgu`.
pub fn factors(p: &Problem, mgu: &Substitution, sol: &[G]) -> bool {
    let mut binds = BTreeMap::new();
    p.vars.iter().zip(sol).all(|(v, g)| {
        let x = var_of(v);
        let value = mgu
            .get(&v.name)
            .cloned()
            .unwrap_or_else(|| Term::var(x.clone()));
        if v.unary {
            let body = match value.node() {
                Node::Lam(_, b) => b.clone(),
                _ => Term::app(value.clone(), vec![Term::bound(0)]),
            };
            matches(&body, g, &mut binds)
        } else {
            matches(&value, g, &mut binds)
        }
    })
}

/// Whether `mgu` equates both sides of every equation.
pub fn unifies(u: &UnifProblem, mgu: &Substitution) -> bool {
    u.equations.iter().all(|(s, t)| {
        terms::eta_normal(&terms::normalize(&mgu.apply(s)))
            == terms::eta_normal(&terms::normalize(&mgu.apply(t)))
    })
}

#[derive(Debug, Default)]
pub struct Tally {
    pub problems: usize,
    pub solvable: usize,
    pub unsolvable: usize,
    pub ground_solutions: usize,
}

/// Runs one problem against the oracle; `Err` describes a disagreement.
pub fn check(p: &Problem, tally: &mut Tally) -> Result<(), String> {
    debug_assert!(p.eqs.iter().all(|(s, t)| s.depth() <= 3 && t.depth() <= 3));
    let u = p.to_unif();
    let sols = solutions(p);
    tally.problems += 1;
    tally.ground_solutions += sols.len();
    match unify_pattern(&u).map_err(|e| format!("{p:?}: {e}"))? {
        UnifOutcome::NoSolution => {
            tally.unsolvable += 1;
            if let Some(s) = sols.first() {
                return Err(format!("{p:?}: reported no unifier, but {s:?} solves it"));
            }
        }
        UnifOutcome::Mgu(m) => {
            tally.solvable += 1;
            if !unifies(&u, &m) {
                return Err(format!("{p:?}: returned substitution is not a unifier"));
            }
            if let Some(s) = sols.iter().find(|s| !factors(p, &m, s)) {
                return Err(format!(
                    "{p:?}: solution {s:?} does not factor through {m:?}"
                ));
            }
        }
        UnifOutcome::NonPattern(m) => return Err(format!("{p:?}: pattern problem rejected: {m}")),
    }
    Ok(())
}
