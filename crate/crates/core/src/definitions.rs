//! Definitional clauses `∀x̄. (∇z̄. H) ≜ B`, the definition store and the
//! stratification check.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::formula::Formula;
use crate::terms::{self, fresh_name, Name, Nominal, Term, Ty, Var};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DefError {
    #[error("predicate {0} is already defined")]
    Duplicate(String),
    #[error("clause head names {found}, which is not declared in this block")]
    HeadMismatch { found: String },
    #[error("clause for {pred} has {found} arguments, expected {expected}")]
    Arity {
        pred: String,
        expected: usize,
        found: usize,
    },
    #[error("nominal constant {0} may not appear in a clause")]
    NominalInClause(String),
    #[error("variable {var} in the body of a clause for {pred} does not occur in its head")]
    UnboundBodyVar { pred: String, var: String },
    #[error("{pred} occurs negatively in its own definition block (stratification); use `Define override` to accept it as a trusted obligation")]
    Stratification { pred: String },
    #[error("unknown predicate {0}")]
    Unknown(String),
}

/// One definitional clause. `univ` are the universally quantified
/// variables, `nabla` the ∇-bound head variables; both occur as ordinary
/// free variables in `head` and `body`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Clause {
    pub univ: Vec<Var>,
    pub nabla: Vec<Var>,
    pub head: Vec<Term>,
    pub body: Formula,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DefinedPred {
    pub name: Name,
    pub arg_tys: Vec<Ty>,
    pub clauses: Vec<Clause>,
    pub level: u32,
    /// Accepted despite failing the stratification check.
    pub overridden: bool,
}

impl DefinedPred {
    /// Induction on the implicit measure is only offered for definitions
    /// whose consistency does not rest on a trusted override.
    pub fn inductive(&self) -> bool {
        !self.overridden
    }
}

/// Declared predicate: name and argument types.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PredDecl {
    pub name: Name,
    pub arg_tys: Vec<Ty>,
}

/// A clause waiting to be checked, tagged with the predicate it defines.
#[derive(Clone, Debug)]
pub struct ClauseDecl {
    pub pred: Name,
    pub clause: Clause,
}

#[derive(Clone, Debug, Default)]
pub struct DefStore {
    preds: BTreeMap<Name, DefinedPred>,
    order: Vec<Name>,
}

/// What `add_definition` reports back.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Accepted {
    pub names: Vec<Name>,
    pub level: u32,
    /// Set when the block failed stratification and was accepted on the
    /// override flag.
    pub overridden: bool,
}

impl DefStore {
    pub fn new() -> DefStore {
        DefStore::default()
    }

    pub fn get(&self, name: &str) -> Option<&DefinedPred> {
        self.preds.get(name)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.preds.contains_key(name)
    }

    pub fn iter(&self) -> impl Iterator<Item = &DefinedPred> {
        self.order.iter().map(|n| &self.preds[n])
    }

    /// Checks and installs a block of (possibly mutually recursive)
    /// definitions.
    pub fn add_definition(
        &mut self,
        decls: Vec<PredDecl>,
        clauses: Vec<ClauseDecl>,
        allow_override: bool,
    ) -> Result<Accepted, DefError> {
        let block: BTreeSet<Name> = decls.iter().map(|d| d.name.clone()).collect();
        for d in &decls {
            if self.preds.contains_key(&d.name) {
                return Err(DefError::Duplicate(d.name.to_string()));
            }
        }
        for cd in &clauses {
            let decl =
                decls
                    .iter()
                    .find(|d| d.name == cd.pred)
                    .ok_or_else(|| DefError::HeadMismatch {
                        found: cd.pred.to_string(),
                    })?;
            check_clause(decl, &cd.clause)?;
        }

        let mut level = 0;
        let mut violation = None;
        for cd in &clauses {
            let mut occ = Vec::new();
            cd.clause.body.predicate_occurrences(true, &mut occ);
            for (q, positive) in occ {
                if block.contains(&q) {
                    if !positive && violation.is_none() {
                        violation = Some(cd.pred.clone());
                    }
                    continue;
                }
                let lq = self.preds.get(&q).map(|p| p.level).unwrap_or(0);
                level = level.max(if positive { lq } else { lq + 1 });
            }
        }
        let overridden = match violation {
            Some(pred) if !allow_override => {
                return Err(DefError::Stratification {
                    pred: pred.to_string(),
                })
            }
            Some(_) => true,
            None => false,
        };
        let mut by_pred: BTreeMap<Name, Vec<Clause>> = BTreeMap::new();
        for cd in clauses {
            by_pred.entry(cd.pred).or_default().push(cd.clause);
        }
        let names: Vec<Name> = decls.iter().map(|d| d.name.clone()).collect();
        for d in decls {
            let clauses = by_pred.remove(&d.name).unwrap_or_default();
            self.order.push(d.name.clone());
            self.preds.insert(
                d.name.clone(),
                DefinedPred {
                    name: d.name,
                    arg_tys: d.arg_tys,
                    clauses,
                    level,
                    overridden,
                },
            );
        }
        Ok(Accepted {
            names,
            level,
            overridden,
        })
    }

    /// Appends clauses to an existing predicate (used for the `prog`
    /// clauses compiled from a specification).
    pub fn extend_clauses(&mut self, pred: &str, clauses: Vec<Clause>) -> Result<(), DefError> {
        let p = self
            .preds
            .get_mut(pred)
            .ok_or_else(|| DefError::Unknown(pred.to_string()))?;
        let decl = PredDecl {
            name: p.name.clone(),
            arg_tys: p.arg_tys.clone(),
        };
        for c in &clauses {
            check_clause(&decl, c)?;
        }
        p.clauses.extend(clauses);
        Ok(())
    }
}

fn check_clause(decl: &PredDecl, c: &Clause) -> Result<(), DefError> {
    if c.head.len() != decl.arg_tys.len() {
        return Err(DefError::Arity {
            pred: decl.name.to_string(),
            expected: decl.arg_tys.len(),
            found: c.head.len(),
        });
    }
    let mut sup = BTreeSet::new();
    for t in &c.head {
        terms::collect_support(t, &mut sup);
    }
    sup.extend(c.body.support());
    if let Some(n) = sup.into_iter().next() {
        return Err(DefError::NominalInClause(n.to_string()));
    }
    let bound: BTreeSet<&Name> = c.univ.iter().chain(&c.nabla).map(|v| &v.name).collect();
    let mut head_vars = BTreeSet::new();
    for t in &c.head {
        terms::collect_vars(t, &mut head_vars);
    }
    for v in c.body.free_vars() {
        if !head_vars.iter().any(|h| h.name == v.name) || !bound.contains(&v.name) {
            return Err(DefError::UnboundBodyVar {
                pred: decl.name.to_string(),
                var: v.name.to_string(),
            });
        }
    }
    Ok(())
}

/// A clause raised over nominal constants `ā` and away from a signature:
/// every universal variable `x` becomes `h ā` for a fresh `h`.
#[derive(Clone, Debug)]
pub struct RaisedClause {
    /// The fresh raised variables `h̄`.
    pub vars: Vec<Var>,
    pub nabla: Vec<Var>,
    pub head: Vec<Term>,
    pub body: Formula,
}

pub fn raise_clause(c: &Clause, over: &[Nominal], taken: &dyn Fn(&str) -> bool) -> RaisedClause {
    let mut vars = Vec::with_capacity(c.univ.len());
    let mut map: BTreeMap<Name, Term> = BTreeMap::new();
    let mut chosen: Vec<String> = Vec::new();
    for x in &c.univ {
        let name = fresh_name(&x.name, &|n| taken(n) || chosen.iter().any(|c| c == n));
        chosen.push(name.clone());
        let h = Var::new(
            &name,
            Ty::arrows(over.iter().map(|a| a.ty.clone()), x.ty.clone()),
        );
        let t = Term::app(
            Term::var(h.clone()),
            over.iter().map(|a| Term::nominal(a.clone())).collect(),
        );
        vars.push(h);
        map.insert(x.name.clone(), t);
    }
    let f = |v: &Var| map.get(&v.name).cloned();
    RaisedClause {
        vars,
        nabla: c.nabla.clone(),
        head: c.head.iter().map(|t| terms::replace_vars(t, &f)).collect(),
        body: c.body.replace_vars(&f),
    }
}

impl RaisedClause {
    /// Replaces the ∇-bound head variables by the given nominal constants.
    pub fn with_nominals(&self, cs: &[Nominal]) -> (Vec<Term>, Formula) {
        let map: BTreeMap<Name, Term> = self
            .nabla
            .iter()
            .zip(cs)
            .map(|(z, c)| (z.name.clone(), Term::nominal(c.clone())))
            .collect();
        let f = |v: &Var| map.get(&v.name).cloned();
        (
            self.head
                .iter()
                .map(|t| terms::replace_vars(t, &f))
                .collect(),
            self.body.replace_vars(&f),
        )
    }

    pub fn as_clause(&self) -> Clause {
        Clause {
            univ: self.vars.clone(),
            nabla: self.nabla.clone(),
            head: self.head.clone(),
            body: self.body.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn i() -> Ty {
        Ty::base("i")
    }

    fn name_def() -> (Vec<PredDecl>, Vec<ClauseDecl>) {
        let x = Var::new("x", i());
        (
            vec![PredDecl {
                name: "name".into(),
                arg_tys: vec![i()],
            }],
            vec![ClauseDecl {
                pred: "name".into(),
                clause: Clause {
                    univ: vec![],
                    nabla: vec![x.clone()],
                    head: vec![Term::var(x)],
                    body: Formula::True,
                },
            }],
        )
    }

    fn fresh_def() -> (Vec<PredDecl>, Vec<ClauseDecl>) {
        let x = Var::new("x", i());
        let e = Var::new("E", i());
        (
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
        )
    }

    fn self_negative(pred: &str) -> (Vec<PredDecl>, Vec<ClauseDecl>) {
        let x = Var::new("X", i());
        let atom = Formula::atom(pred, vec![Term::var(x.clone())]);
        (
            vec![PredDecl {
                name: pred.into(),
                arg_tys: vec![i()],
            }],
            vec![ClauseDecl {
                pred: pred.into(),
                clause: Clause {
                    univ: vec![x.clone()],
                    nabla: vec![],
                    head: vec![Term::var(x)],
                    body: Formula::imp(atom, Formula::False),
                },
            }],
        )
    }

    #[test]
    fn name_and_fresh_accepted_at_level_zero() {
        let mut s = DefStore::new();
        let (d, c) = name_def();
        assert_eq!(s.add_definition(d, c, false).unwrap().level, 0);
        let (d, c) = fresh_def();
        let acc = s.add_definition(d, c, false).unwrap();
        assert_eq!(acc.level, 0);
        assert!(!acc.overridden);
    }

    #[test]
    fn negative_self_loop_needs_override() {
        let mut s = DefStore::new();
        let (d, c) = self_negative("p");
        assert!(matches!(
            s.add_definition(d.clone(), c.clone(), false),
            Err(DefError::Stratification { .. })
        ));
        let acc = s.add_definition(d, c, true).unwrap();
        assert!(acc.overridden);
        assert!(!s.get("p").unwrap().inductive());
    }

    #[test]
    fn negative_use_of_lower_level_raises_level() {
        let mut s = DefStore::new();
        let (d, c) = name_def();
        s.add_definition(d, c, false).unwrap();
        let x = Var::new("X", i());
        let body = Formula::imp(
            Formula::atom("name", vec![Term::var(x.clone())]),
            Formula::False,
        );
        let acc = s
            .add_definition(
                vec![PredDecl {
                    name: "notname".into(),
                    arg_tys: vec![i()],
                }],
                vec![ClauseDecl {
                    pred: "notname".into(),
                    clause: Clause {
                        univ: vec![x.clone()],
                        nabla: vec![],
                        head: vec![Term::var(x)],
                        body,
                    },
                }],
                false,
            )
            .unwrap();
        assert_eq!(acc.level, 1);
    }

    #[test]
    fn duplicates_and_nominals_rejected() {
        let mut s = DefStore::new();
        let (d, c) = name_def();
        s.add_definition(d.clone(), c.clone(), false).unwrap();
        assert!(matches!(
            s.add_definition(d, c, false),
            Err(DefError::Duplicate(_))
        ));
        let (mut d, mut c) = fresh_def();
        d[0].name = "fresh2".into();
        c[0].pred = "fresh2".into();
        c[0].clause.head[1] = Term::nominal(Nominal::new(1, i()));
        assert!(matches!(
            s.add_definition(d, c, false),
            Err(DefError::NominalInClause(_))
        ));
    }

    #[test]
    fn raise_fresh_clause() {
        let (_, c) = fresh_def();
        let n1 = Nominal::new(1, i());
        let r = raise_clause(&c[0].clause, std::slice::from_ref(&n1), &|_| false);
        assert_eq!(r.vars.len(), 1);
        assert_eq!(r.vars[0].ty, Ty::arrow(i(), i()));
        assert_eq!(
            r.head[1],
            Term::app1(Term::var(r.vars[0].clone()), Term::nominal(n1))
        );
        // raising over nothing only renames
        let r0 = raise_clause(&c[0].clause, &[], &|n| n == "E");
        assert_eq!(r0.vars[0].ty, i());
        assert_ne!(&*r0.vars[0].name, "E");
    }

    #[test]
    fn removing_a_clause_keeps_acceptance() {
        // monotonicity on a small block: p X := q X, p X := p X -> false
        let (d, c) = self_negative("p");
        let mut s = DefStore::new();
        assert!(s.add_definition(d.clone(), c.clone(), false).is_err());
        let mut s2 = DefStore::new();
        assert!(s2.add_definition(d, vec![], false).is_ok());
    }
}
