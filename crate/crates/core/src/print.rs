//! Concrete syntax for terms and formulas.
//!
//! The default style is the one users type into scripts. The `full_parens`
//! style wraps every application and abstraction so the wire protocol is
//! free of precedence questions; both are accepted by the parser.

use std::collections::BTreeSet;

use crate::formula::{Ann, Atom, Formula, Quant, SEQ};
use crate::speclogic::names as sp;
use crate::terms::{Head, Node, Term};

#[derive(Clone, Copy, Debug, Default)]
pub struct Style {
    pub full_parens: bool,
}

pub fn term_to_string(t: &Term) -> String {
    Printer::new(Style::default(), used_in_term(t)).term(t, &mut Vec::new(), 0)
}

pub fn formula_to_string(f: &Formula) -> String {
    Printer::new(Style::default(), used_in_formula(f)).formula(f, &mut Vec::new(), 0)
}

pub fn term_to_string_with(t: &Term, style: Style) -> String {
    Printer::new(style, used_in_term(t)).term(t, &mut Vec::new(), 0)
}

pub fn formula_to_string_with(f: &Formula, style: Style) -> String {
    Printer::new(style, used_in_formula(f)).formula(f, &mut Vec::new(), 0)
}

fn used_in_term(t: &Term) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    collect_names(t, &mut out);
    out
}

fn used_in_formula(f: &Formula) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    f.for_each_term(&mut |t| collect_names(t, &mut out));
    out
}

fn collect_names(t: &Term, out: &mut BTreeSet<String>) {
    let mut head = |h: &Head| match h {
        Head::Var(v) => {
            out.insert(v.name.to_string());
        }
        Head::Const(c) => {
            out.insert(c.name.to_string());
        }
        _ => {}
    };
    match t.node() {
        Node::Atom(h) => head(h),
        Node::App(h, args) => {
            head(h);
            for a in args {
                collect_names(a, out);
            }
        }
        Node::Lam(_, b) => collect_names(b, out),
    }
}

struct Printer {
    style: Style,
    used: BTreeSet<String>,
}

// Term precedences: 0 anywhere, 1 left of `::`, 2 application argument.
const P_TOP: u8 = 0;
const P_CONS_LEFT: u8 = 1;
const P_ARG: u8 = 2;

impl Printer {
    fn new(style: Style, used: BTreeSet<String>) -> Printer {
        Printer { style, used }
    }

    fn binder_name(&self, hint: &str, scope: &[String]) -> String {
        let base = if hint.is_empty() { "x" } else { hint };
        crate::terms::fresh_name(base, &|n| {
            self.used.contains(n) || scope.iter().any(|s| s == n) || is_nominal_name(n)
        })
    }

    fn paren(&self, s: String, needed: bool) -> String {
        if needed || (self.style.full_parens && s.contains(' ')) {
            format!("({s})")
        } else {
            s
        }
    }

    fn head(&self, h: &Head, scope: &[String]) -> String {
        match h {
            Head::Bound(i) => {
                let i = *i as usize;
                if i < scope.len() {
                    scope[scope.len() - 1 - i].clone()
                } else {
                    format!("#{i}")
                }
            }
            Head::Var(v) => v.name.to_string(),
            Head::Const(c) => match &*c.name {
                sp::TT => "true".into(),
                other => other.to_string(),
            },
            Head::Nominal(n) => n.to_string(),
        }
    }

    fn term(&self, t: &Term, scope: &mut Vec<String>, prec: u8) -> String {
        match t.node() {
            Node::Atom(h) => self.head(h, scope),
            Node::Lam(_, body) => {
                let name = self.binder_name("x", scope);
                scope.push(name.clone());
                let b = self.term(body, scope, P_TOP);
                scope.pop();
                self.paren(format!("{name}\\ {b}"), prec > P_TOP)
            }
            Node::App(h, args) => {
                if let Head::Const(c) = h {
                    if let Some(s) = self.spec_goal(&c.name, args, scope) {
                        return self.paren(s, prec > P_TOP);
                    }
                    if &*c.name == "::" && args.len() == 2 {
                        let l = self.term(&args[0], scope, P_CONS_LEFT);
                        let r = self.term(&args[1], scope, P_TOP);
                        return self.paren(format!("{l} :: {r}"), prec > P_TOP);
                    }
                }
                let mut s = self.head(h, scope);
                for a in args {
                    s.push(' ');
                    s.push_str(&self.term(a, scope, P_ARG));
                }
                self.paren(s, prec >= P_CONS_LEFT)
            }
        }
    }

    /// Specification goal constructors print in the λProlog-like syntax of
    /// spec files.
    fn spec_goal(&self, name: &str, args: &[Term], scope: &mut Vec<String>) -> Option<String> {
        match (name, args) {
            (sp::ATM, [a]) => Some(self.term(a, scope, P_TOP)),
            (sp::AND, [a, b]) => Some(format!(
                "{}, {}",
                self.goal_operand(a, scope, true),
                self.goal_operand(b, scope, false)
            )),
            (sp::IMP, [a, b]) => Some(format!(
                "{} => {}",
                self.term(a, scope, P_TOP),
                self.goal_operand(b, scope, false)
            )),
            (sp::PI, [body]) => match body.node() {
                Node::Lam(_, inner) => {
                    let name = self.binder_name("x", scope);
                    scope.push(name.clone());
                    let b = self.term(inner, scope, P_TOP);
                    scope.pop();
                    Some(format!("pi {name}\\ {b}"))
                }
                _ => Some(format!("pi {}", self.term(body, scope, P_ARG))),
            },
            _ => None,
        }
    }

    fn goal_operand(&self, g: &Term, scope: &mut Vec<String>, left: bool) -> String {
        let s = self.term(g, scope, P_TOP);
        let is_and = g.head_const_name() == Some(sp::AND);
        let is_binderish = matches!(g.head_const_name(), Some(sp::PI) | Some(sp::IMP));
        if (left && (is_and || is_binderish)) || (self.style.full_parens && s.contains(' ')) {
            format!("({s})")
        } else {
            s
        }
    }

    fn spec_judgment(&self, a: &Atom, scope: &mut Vec<String>) -> String {
        let ctx = &a.args[0];
        let goal = &a.args[1];
        let g = self.term(goal, scope, P_TOP);
        let g = g
            .strip_prefix('(')
            .and_then(|s| s.strip_suffix(')'))
            .filter(|_| {
                goal.head_const_name().is_some_and(|n| n != sp::ATM) && !self.style.full_parens
            })
            .map(str::to_string)
            .unwrap_or(g);
        if ctx.head_const_name() == Some("nil") && ctx.spine().is_some_and(|(_, a)| a.is_empty()) {
            format!("{{{g}}}")
        } else {
            format!("{{{} |- {g}}}", self.term(ctx, scope, P_TOP))
        }
    }

    fn ann(&self, ann: Ann) -> String {
        match ann {
            Ann::None => String::new(),
            other => format!(" {other}"),
        }
    }

    // Formula precedences: 0 quantifiers and `->`, 1 `\/`, 2 `/\`, 3 atoms.
    fn formula(&self, f: &Formula, scope: &mut Vec<String>, prec: u8) -> String {
        let wrap = |s: String, needed: bool| if needed { format!("({s})") } else { s };
        match f {
            Formula::True => "true".into(),
            Formula::False => "false".into(),
            Formula::Eq(s, t) => {
                let s = format!(
                    "{} = {}",
                    self.term(s, scope, P_TOP),
                    self.term(t, scope, P_TOP)
                );
                wrap(s, prec > 2 || self.style.full_parens && prec > 0)
            }
            Formula::Atom(a) if &*a.pred == SEQ && a.args.len() == 2 => {
                format!("{}{}", self.spec_judgment(a, scope), self.ann(a.ann))
            }
            Formula::Atom(a) => {
                let mut s = a.pred.to_string();
                for t in &a.args {
                    s.push(' ');
                    s.push_str(&self.term(t, scope, P_ARG));
                }
                s.push_str(&self.ann(a.ann));
                wrap(s, self.style.full_parens && prec > 0 && !a.args.is_empty())
            }
            Formula::And(a, b) => {
                let s = format!(
                    "{} /\\ {}",
                    self.formula(a, scope, 3),
                    self.formula(b, scope, 2)
                );
                wrap(s, prec > 2)
            }
            Formula::Or(a, b) => {
                let s = format!(
                    "{} \\/ {}",
                    self.formula(a, scope, 2),
                    self.formula(b, scope, 1)
                );
                wrap(s, prec > 1)
            }
            Formula::Imp(a, b) => {
                let s = format!(
                    "{} -> {}",
                    self.formula(a, scope, 1),
                    self.formula(b, scope, 0)
                );
                wrap(s, prec > 0)
            }
            Formula::Forall(..) | Formula::Exists(..) | Formula::Nabla(..) => {
                let (q, _, _) = f.as_quant().unwrap();
                let kw = match q {
                    Quant::Forall => "forall",
                    Quant::Exists => "exists",
                    Quant::Nabla => "nabla",
                };
                let mut names = Vec::new();
                let mut cur = f;
                let pushed = scope.len();
                while let Some((q2, b, body)) = cur.as_quant() {
                    if q2 != q {
                        break;
                    }
                    let name = self.binder_name(&b.name, scope);
                    scope.push(name.clone());
                    names.push(name);
                    cur = body;
                }
                let body = self.formula(cur, scope, 0);
                scope.truncate(pushed);
                wrap(format!("{kw} {}, {body}", names.join(" ")), prec > 0)
            }
        }
    }
}

fn is_nominal_name(n: &str) -> bool {
    n.len() > 1 && n.starts_with('n') && n[1..].chars().all(|c| c.is_ascii_digit())
}
