//! Lexer and parser for `.thm` scripts, specification files, formulas and
//! tactics. Produces untyped syntax; `elab` turns it into terms.

use std::fmt;

use thiserror::Error;

use crate::formula::Quant;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct Pos {
    pub line: u32,
    pub col: u32,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("{pos}: {msg}")]
pub struct ParseError {
    pub pos: Pos,
    pub msg: String,
}

fn err<T>(pos: Pos, msg: impl Into<String>) -> Result<T, ParseError> {
    Err(ParseError {
        pos,
        msg: msg.into(),
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Num(u32),
    Str(String),
    Sym(&'static str),
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Num(n) => write!(f, "`{n}`"),
            Tok::Str(s) => write!(f, "\"{s}\""),
            Tok::Sym(s) => write!(f, "`{s}`"),
            Tok::Eof => write!(f, "end of input"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Token {
    pub tok: Tok,
    pub pos: Pos,
    pub offset: usize,
}

// Longest first.
const SYMBOLS: &[&str] = &[
    ":=", ":-", "::", "\\/", "/\\", "->", "=>", "|-", "(", ")", "{", "}", "[", "]", ",", ".", ":",
    ";", "\\", "=", "*", "@", "_",
];

fn is_ident_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '\''
}

pub fn lex(src: &str) -> Result<Vec<Token>, ParseError> {
    let mut out = Vec::new();
    let chars: Vec<(usize, char)> = src.char_indices().collect();
    let mut i = 0;
    let (mut line, mut col) = (1u32, 1u32);
    let advance = |i: &mut usize, line: &mut u32, col: &mut u32, n: usize| {
        for _ in 0..n {
            if chars[*i].1 == '\n' {
                *line += 1;
                *col = 1;
            } else {
                *col += 1;
            }
            *i += 1;
        }
    };
    while i < chars.len() {
        let (off, c) = chars[i];
        let pos = Pos { line, col };
        if c.is_whitespace() {
            advance(&mut i, &mut line, &mut col, 1);
            continue;
        }
        if c == '%' {
            while i < chars.len() && chars[i].1 != '\n' {
                advance(&mut i, &mut line, &mut col, 1);
            }
            continue;
        }
        if c == '/' && chars.get(i + 1).map(|p| p.1) == Some('*') {
            advance(&mut i, &mut line, &mut col, 2);
            while i < chars.len()
                && !(chars[i].1 == '*' && chars.get(i + 1).map(|p| p.1) == Some('/'))
            {
                advance(&mut i, &mut line, &mut col, 1);
            }
            if i >= chars.len() {
                return err(pos, "unterminated comment");
            }
            advance(&mut i, &mut line, &mut col, 2);
            continue;
        }
        if c == '"' {
            advance(&mut i, &mut line, &mut col, 1);
            let mut s = String::new();
            while i < chars.len() && chars[i].1 != '"' {
                s.push(chars[i].1);
                advance(&mut i, &mut line, &mut col, 1);
            }
            if i >= chars.len() {
                return err(pos, "unterminated string");
            }
            advance(&mut i, &mut line, &mut col, 1);
            out.push(Token {
                tok: Tok::Str(s),
                pos,
                offset: off,
            });
            continue;
        }
        if c.is_ascii_digit() {
            let mut s = String::new();
            while i < chars.len() && chars[i].1.is_ascii_digit() {
                s.push(chars[i].1);
                advance(&mut i, &mut line, &mut col, 1);
            }
            let n = s.parse().map_err(|_| ParseError {
                pos,
                msg: "number too large".into(),
            })?;
            out.push(Token {
                tok: Tok::Num(n),
                pos,
                offset: off,
            });
            continue;
        }
        if is_ident_char(c) && c != '_'
            || (c == '_' && chars.get(i + 1).is_some_and(|p| is_ident_char(p.1)))
        {
            let mut s = String::new();
            while i < chars.len() && is_ident_char(chars[i].1) {
                s.push(chars[i].1);
                advance(&mut i, &mut line, &mut col, 1);
            }
            out.push(Token {
                tok: Tok::Ident(s),
                pos,
                offset: off,
            });
            continue;
        }
        let rest = &src[off..];
        match SYMBOLS.iter().find(|s| rest.starts_with(**s)) {
            Some(s) => {
                advance(&mut i, &mut line, &mut col, s.chars().count());
                out.push(Token {
                    tok: Tok::Sym(s),
                    pos,
                    offset: off,
                });
            }
            None => return err(pos, format!("unexpected character `{c}`")),
        }
    }
    out.push(Token {
        tok: Tok::Eof,
        pos: Pos { line, col },
        offset: src.len(),
    });
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PTy {
    Base(String),
    Arrow(Box<PTy>, Box<PTy>),
}

/// Untyped term / specification goal syntax.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PT {
    Id(String, Pos),
    App(Box<PT>, Vec<PT>),
    Lam(String, Option<PTy>, Box<PT>),
    Cons(Box<PT>, Box<PT>),
    /// `g1, g2`
    And(Box<PT>, Box<PT>),
    /// `a => g`
    Imp(Box<PT>, Box<PT>),
}

impl PT {
    pub fn pos(&self) -> Pos {
        match self {
            PT::Id(_, p) => *p,
            PT::App(h, _) => h.pos(),
            PT::Lam(_, _, b) => b.pos(),
            PT::Cons(a, _) | PT::And(a, _) | PT::Imp(a, _) => a.pos(),
        }
    }

    /// Head identifier and arguments of an application.
    pub fn spine(&self) -> Option<(&str, Pos, Vec<&PT>)> {
        match self {
            PT::Id(s, p) => Some((s, *p, vec![])),
            PT::App(h, args) => {
                let (s, p, mut a) = h.spine()?;
                a.extend(args.iter());
                Some((s, p, a))
            }
            _ => None,
        }
    }
}

pub type PBinder = (String, Option<PTy>);

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PF {
    True,
    False,
    And(Box<PF>, Box<PF>),
    Or(Box<PF>, Box<PF>),
    Imp(Box<PF>, Box<PF>),
    Quant(Quant, Vec<PBinder>, Box<PF>),
    Eq(PT, PT),
    Atom(PT, Option<PAnn>),
    /// `{L |- G}`; the context is absent for `{G}`.
    Seq(Option<PT>, PT, Option<PAnn>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PAnn {
    Eq(u8),
    Lt(u8),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PDefClause {
    pub pos: Pos,
    pub nabla: Vec<PBinder>,
    pub head: PT,
    pub body: Option<PF>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ApplyArg {
    Hyp(String),
    Hole,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Tactic {
    Intros(Vec<String>),
    Case {
        hyp: String,
        keep: bool,
    },
    Apply {
        lemma: String,
        args: Vec<ApplyArg>,
        with: Vec<(String, PT)>,
    },
    Induction(usize),
    Exists(PT),
    Split,
    Left,
    Right,
    Unfold(Option<usize>),
    Assert(PF),
    Search(Option<usize>),
    Inst {
        hyp: String,
        with: Vec<(String, PT)>,
    },
    Cut {
        h1: String,
        h2: String,
    },
    Monotone {
        hyp: String,
        with: PT,
    },
    Clear(Vec<String>),
    Undo,
    Abort,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Command {
    Specification(String),
    Kind(Vec<String>),
    Type(Vec<String>, PTy),
    Define {
        override_: bool,
        preds: Vec<(String, PTy)>,
        clauses: Vec<PDefClause>,
    },
    Theorem {
        name: String,
        formula: PF,
    },
    Query(PF),
    Tactic(Tactic),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Stmt {
    pub pos: Pos,
    pub text: String,
    pub cmd: Command,
}

/// One declaration or clause of a specification file.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SpecItem {
    Kind(Vec<String>),
    Type(Vec<String>, PTy),
    Clause(PT),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpecStmt {
    pub pos: Pos,
    pub item: SpecItem,
}

pub struct Parser<'a> {
    src: &'a str,
    toks: Vec<Token>,
    i: usize,
}

const KEYWORDS: &[&str] = &[
    "forall", "exists", "nabla", "true", "false", "pi", "by", "override", "with", "to", "on",
];

impl<'a> Parser<'a> {
    pub fn new(src: &'a str) -> Result<Parser<'a>, ParseError> {
        Ok(Parser {
            src,
            toks: lex(src)?,
            i: 0,
        })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.i].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.i + k).min(self.toks.len() - 1)].tok
    }

    fn pos(&self) -> Pos {
        self.toks[self.i].pos
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.i].tok.clone();
        if self.i + 1 < self.toks.len() {
            self.i += 1;
        }
        t
    }

    fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Sym(x) if *x == s)
    }

    fn is_kw(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Ident(x) if x == s)
    }

    fn eat_sym(&mut self, s: &str) -> bool {
        if self.is_sym(s) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn eat_kw(&mut self, s: &str) -> bool {
        if self.is_kw(s) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_sym(&mut self, s: &str) -> Result<(), ParseError> {
        if self.eat_sym(s) {
            Ok(())
        } else {
            err(self.pos(), format!("expected `{s}`, found {}", self.peek()))
        }
    }

    fn expect_kw(&mut self, s: &str) -> Result<(), ParseError> {
        if self.eat_kw(s) {
            Ok(())
        } else {
            err(self.pos(), format!("expected `{s}`, found {}", self.peek()))
        }
    }

    fn ident(&mut self) -> Result<String, ParseError> {
        match self.peek().clone() {
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => {
                self.bump();
                Ok(s)
            }
            t => err(self.pos(), format!("expected an identifier, found {t}")),
        }
    }

    fn num(&mut self) -> Result<u32, ParseError> {
        match self.peek().clone() {
            Tok::Num(n) => {
                self.bump();
                Ok(n)
            }
            t => err(self.pos(), format!("expected a number, found {t}")),
        }
    }

    pub fn at_eof(&self) -> bool {
        matches!(self.peek(), Tok::Eof)
    }

    // -- types ------------------------------------------------------------

    pub fn ty(&mut self) -> Result<PTy, ParseError> {
        let a = if self.eat_sym("(") {
            let t = self.ty()?;
            self.expect_sym(")")?;
            t
        } else {
            PTy::Base(self.ident()?)
        };
        if self.eat_sym("->") {
            Ok(PTy::Arrow(Box::new(a), Box::new(self.ty()?)))
        } else {
            Ok(a)
        }
    }

    // -- terms ------------------------------------------------------------

    fn lambda_start(&self) -> bool {
        matches!(self.peek(), Tok::Ident(_)) && matches!(self.peek_at(1), Tok::Sym("\\"))
    }

    fn lambda(&mut self, comma: bool) -> Result<PT, ParseError> {
        let x = self.ident()?;
        self.expect_sym("\\")?;
        let body = self.term_level(comma)?;
        Ok(PT::Lam(x, None, Box::new(body)))
    }

    /// Full goal syntax: `,` and `=>` allowed.
    pub fn goal(&mut self) -> Result<PT, ParseError> {
        self.term_level(true)
    }

    /// Term without top-level `,` (used inside formulas).
    pub fn term(&mut self) -> Result<PT, ParseError> {
        self.term_level(false)
    }

    fn term_level(&mut self, comma: bool) -> Result<PT, ParseError> {
        if self.lambda_start() {
            return self.lambda(comma);
        }
        let a = self.imp_level(comma)?;
        if comma && self.eat_sym(",") {
            let b = self.term_level(comma)?;
            return Ok(PT::And(Box::new(a), Box::new(b)));
        }
        Ok(a)
    }

    fn imp_level(&mut self, comma: bool) -> Result<PT, ParseError> {
        if self.lambda_start() {
            return self.lambda(comma);
        }
        let a = self.cons_level(comma)?;
        if self.eat_sym("=>") {
            let b = self.imp_level(comma)?;
            return Ok(PT::Imp(Box::new(a), Box::new(b)));
        }
        Ok(a)
    }

    fn cons_level(&mut self, comma: bool) -> Result<PT, ParseError> {
        if self.lambda_start() {
            return self.lambda(comma);
        }
        let a = self.app_level(comma)?;
        if self.eat_sym("::") {
            let b = self.cons_level(comma)?;
            return Ok(PT::Cons(Box::new(a), Box::new(b)));
        }
        Ok(a)
    }

    fn app_level(&mut self, comma: bool) -> Result<PT, ParseError> {
        let head = self.simple()?;
        let mut args = Vec::new();
        loop {
            if self.lambda_start() {
                args.push(self.lambda(comma)?);
                break;
            }
            if self.starts_simple() {
                args.push(self.simple()?);
            } else {
                break;
            }
        }
        Ok(if args.is_empty() {
            head
        } else {
            PT::App(Box::new(head), args)
        })
    }

    fn starts_simple(&self) -> bool {
        match self.peek() {
            Tok::Ident(s) => !matches!(s.as_str(), "by" | "with" | "to" | "on"),
            Tok::Sym("(") | Tok::Sym("_") => true,
            _ => false,
        }
    }

    fn simple(&mut self) -> Result<PT, ParseError> {
        let pos = self.pos();
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok(PT::Id(s, pos))
            }
            Tok::Sym("_") => {
                self.bump();
                Ok(PT::Id("_".into(), pos))
            }
            Tok::Sym("(") => {
                self.bump();
                // typed lambda `(x : ty\ t)` is not supported; `(x:ty)\ t` neither
                let t = self.goal()?;
                self.expect_sym(")")?;
                Ok(t)
            }
            t => err(pos, format!("expected a term, found {t}")),
        }
    }

    // -- formulas -----------------------------------------------------------

    pub fn formula(&mut self) -> Result<PF, ParseError> {
        let q = match self.peek() {
            Tok::Ident(s) if s == "forall" => Some(Quant::Forall),
            Tok::Ident(s) if s == "exists" => Some(Quant::Exists),
            Tok::Ident(s) if s == "nabla" => Some(Quant::Nabla),
            _ => None,
        };
        if let Some(q) = q {
            self.bump();
            let bs = self.binders()?;
            self.expect_sym(",")?;
            let body = self.formula()?;
            return Ok(PF::Quant(q, bs, Box::new(body)));
        }
        let a = self.or_formula()?;
        if self.eat_sym("->") {
            let b = self.formula()?;
            return Ok(PF::Imp(Box::new(a), Box::new(b)));
        }
        Ok(a)
    }

    fn binders(&mut self) -> Result<Vec<PBinder>, ParseError> {
        let mut out = Vec::new();
        loop {
            if self.eat_sym("(") {
                let x = self.ident()?;
                self.expect_sym(":")?;
                let t = self.ty()?;
                self.expect_sym(")")?;
                out.push((x, Some(t)));
            } else if matches!(self.peek(), Tok::Ident(_)) {
                out.push((self.ident()?, None));
            } else {
                break;
            }
        }
        if out.is_empty() {
            return err(self.pos(), "expected binder names");
        }
        Ok(out)
    }

    fn or_formula(&mut self) -> Result<PF, ParseError> {
        let a = self.and_formula()?;
        if self.eat_sym("\\/") {
            let b = self.or_formula()?;
            return Ok(PF::Or(Box::new(a), Box::new(b)));
        }
        Ok(a)
    }

    fn and_formula(&mut self) -> Result<PF, ParseError> {
        let a = self.atomic_formula()?;
        if self.eat_sym("/\\") {
            let b = self.and_formula()?;
            return Ok(PF::And(Box::new(a), Box::new(b)));
        }
        Ok(a)
    }

    fn ann(&mut self) -> Option<PAnn> {
        let mut n = 0u8;
        if self.is_sym("*") {
            while self.eat_sym("*") {
                n += 1;
            }
            return Some(PAnn::Lt(n));
        }
        if self.is_sym("@") {
            while self.eat_sym("@") {
                n += 1;
            }
            return Some(PAnn::Eq(n));
        }
        None
    }

    fn atomic_formula(&mut self) -> Result<PF, ParseError> {
        if self.eat_kw("true") {
            return Ok(PF::True);
        }
        if self.eat_kw("false") {
            return Ok(PF::False);
        }
        if matches!(self.peek(), Tok::Ident(s) if matches!(s.as_str(), "forall" | "exists" | "nabla"))
        {
            return self.formula();
        }
        if self.eat_sym("{") {
            let first = self.goal()?;
            let (ctx, g) = if self.eat_sym("|-") {
                (Some(first), self.goal()?)
            } else {
                (None, first)
            };
            self.expect_sym("}")?;
            let ann = self.ann();
            return Ok(PF::Seq(ctx, g, ann));
        }
        if self.is_sym("(") {
            let save = self.i;
            self.bump();
            if let Ok(f) = self.formula() {
                if self.eat_sym(")")
                    && !self.is_sym("=")
                    && !self.starts_simple()
                    && !self.is_sym("::")
                {
                    return Ok(f);
                }
            }
            self.i = save;
        }
        let t = self.term()?;
        if self.eat_sym("=") {
            let u = self.term()?;
            return Ok(PF::Eq(t, u));
        }
        let ann = self.ann();
        Ok(PF::Atom(t, ann))
    }

    // -- statements ---------------------------------------------------------

    fn end(&mut self) -> Result<(), ParseError> {
        self.expect_sym(".")
    }

    fn names_until_dot(&mut self) -> Result<Vec<String>, ParseError> {
        let mut out = Vec::new();
        while let Tok::Ident(_) = self.peek() {
            out.push(self.ident()?);
        }
        Ok(out)
    }

    fn with_bindings(&mut self) -> Result<Vec<(String, PT)>, ParseError> {
        let mut out = Vec::new();
        if self.eat_kw("with") {
            loop {
                let x = self.ident()?;
                self.expect_sym("=")?;
                let t = self.term()?;
                out.push((x, t));
                if !self.eat_sym(",") {
                    break;
                }
            }
        }
        Ok(out)
    }

    pub fn tactic(&mut self) -> Result<Tactic, ParseError> {
        let pos = self.pos();
        let word = match self.peek().clone() {
            Tok::Ident(s) => s,
            t => return err(pos, format!("expected a tactic, found {t}")),
        };
        self.bump();
        let t = match word.as_str() {
            "intros" => Tactic::Intros(self.names_until_dot()?),
            "case" => {
                let hyp = self.ident()?;
                let keep = if self.eat_sym("(") {
                    self.expect_kw("keep")?;
                    self.expect_sym(")")?;
                    true
                } else {
                    false
                };
                Tactic::Case { hyp, keep }
            }
            "apply" => {
                let lemma = self.ident()?;
                let mut args = Vec::new();
                if self.eat_kw("to") {
                    loop {
                        if self.eat_sym("_") {
                            args.push(ApplyArg::Hole);
                        } else if let Tok::Ident(s) = self.peek().clone() {
                            if s == "with" {
                                break;
                            }
                            self.bump();
                            args.push(ApplyArg::Hyp(s));
                        } else {
                            break;
                        }
                    }
                }
                let with = self.with_bindings()?;
                Tactic::Apply { lemma, args, with }
            }
            "induction" => {
                self.expect_kw("on")?;
                Tactic::Induction(self.num()? as usize)
            }
            "exists" | "witness" => Tactic::Exists(self.term()?),
            "split" => Tactic::Split,
            "left" => Tactic::Left,
            "right" => Tactic::Right,
            "unfold" => Tactic::Unfold(match self.peek() {
                Tok::Num(_) => Some(self.num()? as usize),
                _ => None,
            }),
            "assert" => Tactic::Assert(self.formula()?),
            "search" => Tactic::Search(match self.peek() {
                Tok::Num(_) => Some(self.num()? as usize),
                _ => None,
            }),
            "inst" => {
                let hyp = self.ident()?;
                let with = self.with_bindings()?;
                if with.is_empty() {
                    return err(self.pos(), "inst needs `with n = t`");
                }
                Tactic::Inst { hyp, with }
            }
            "cut" => {
                let h1 = self.ident()?;
                self.expect_kw("with")?;
                let h2 = self.ident()?;
                Tactic::Cut { h1, h2 }
            }
            "monotone" => {
                let hyp = self.ident()?;
                self.expect_kw("with")?;
                Tactic::Monotone {
                    hyp,
                    with: self.term()?,
                }
            }
            "clear" => Tactic::Clear(self.names_until_dot()?),
            "undo" => Tactic::Undo,
            "abort" => Tactic::Abort,
            other => return err(pos, format!("unknown tactic `{other}`")),
        };
        Ok(t)
    }

    fn define(&mut self) -> Result<Command, ParseError> {
        let override_ = self.eat_kw("override");
        let mut preds = Vec::new();
        loop {
            let p = self.ident()?;
            self.expect_sym(":")?;
            let t = self.ty()?;
            preds.push((p, t));
            if !self.eat_sym(",") {
                break;
            }
        }
        let mut clauses = Vec::new();
        if self.eat_kw("by") {
            loop {
                clauses.push(self.def_clause()?);
                if !self.eat_sym(";") {
                    break;
                }
            }
        }
        Ok(Command::Define {
            override_,
            preds,
            clauses,
        })
    }

    fn def_clause(&mut self) -> Result<PDefClause, ParseError> {
        let pos = self.pos();
        let mut nabla = Vec::new();
        if self.eat_kw("nabla") {
            nabla = self.binders()?;
            self.expect_sym(",")?;
        }
        let head = self.term()?;
        let body = if self.eat_sym(":=") {
            Some(self.formula()?)
        } else {
            None
        };
        Ok(PDefClause {
            pos,
            nabla,
            head,
            body,
        })
    }

    /// One `.`-terminated statement of a `.thm` script.
    pub fn statement(&mut self) -> Result<Stmt, ParseError> {
        let pos = self.pos();
        let start = self.toks[self.i].offset;
        let cmd = match self.peek().clone() {
            Tok::Ident(w) if w == "Specification" => {
                self.bump();
                match self.bump() {
                    Tok::Str(s) => Command::Specification(s),
                    t => return err(pos, format!("expected a file name, found {t}")),
                }
            }
            Tok::Ident(w) if w == "Kind" => {
                self.bump();
                let mut names = vec![self.ident()?];
                while self.eat_sym(",") {
                    names.push(self.ident()?);
                }
                self.expect_kw("type")?;
                Command::Kind(names)
            }
            Tok::Ident(w) if w == "Type" => {
                self.bump();
                let mut names = vec![self.ident()?];
                while self.eat_sym(",") {
                    names.push(self.ident()?);
                }
                Command::Type(names, self.ty()?)
            }
            Tok::Ident(w) if w == "Define" => {
                self.bump();
                self.define()?
            }
            Tok::Ident(w) if w == "Theorem" || w == "Lemma" => {
                self.bump();
                let name = self.ident()?;
                self.expect_sym(":")?;
                Command::Theorem {
                    name,
                    formula: self.formula()?,
                }
            }
            Tok::Ident(w) if w == "Query" => {
                self.bump();
                Command::Query(self.formula()?)
            }
            _ => Command::Tactic(self.tactic()?),
        };
        self.end()?;
        let stop = self.toks[self.i].offset;
        let text = self.src[start..stop].trim().to_string();
        let text = collapse_ws(&text);
        Ok(Stmt { pos, text, cmd })
    }

    // -- specification files ------------------------------------------------

    pub fn spec_statement(&mut self) -> Result<Option<SpecStmt>, ParseError> {
        let pos = self.pos();
        let item = match self.peek().clone() {
            Tok::Ident(w) if w == "sig" || w == "module" => {
                self.bump();
                self.ident()?;
                self.end()?;
                return Ok(None);
            }
            Tok::Ident(w) if w == "kind" => {
                self.bump();
                let mut names = vec![self.ident()?];
                while self.eat_sym(",") {
                    names.push(self.ident()?);
                }
                self.expect_kw("type")?;
                SpecItem::Kind(names)
            }
            Tok::Ident(w) if w == "type" => {
                self.bump();
                let mut names = vec![self.ident()?];
                while self.eat_sym(",") {
                    names.push(self.ident()?);
                }
                SpecItem::Type(names, self.ty()?)
            }
            _ => {
                let head = self.goal()?;
                if self.eat_sym(":-") {
                    let body = self.goal()?;
                    SpecItem::Clause(PT::Imp(Box::new(body), Box::new(head)))
                } else {
                    SpecItem::Clause(head)
                }
            }
        };
        self.end()?;
        Ok(Some(SpecStmt { pos, item }))
    }
}

fn collapse_ws(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

pub fn parse_script(src: &str) -> Result<Vec<Stmt>, ParseError> {
    let mut p = Parser::new(src)?;
    let mut out = Vec::new();
    while !p.at_eof() {
        out.push(p.statement()?);
    }
    Ok(out)
}

pub fn parse_spec(src: &str) -> Result<Vec<SpecStmt>, ParseError> {
    let mut p = Parser::new(src)?;
    let mut out = Vec::new();
    while !p.at_eof() {
        if let Some(s) = p.spec_statement()? {
            out.push(s);
        }
    }
    Ok(out)
}

pub fn parse_formula(src: &str) -> Result<PF, ParseError> {
    let mut p = Parser::new(src)?;
    let f = p.formula()?;
    if !p.at_eof() {
        return err(p.pos(), format!("unexpected {}", p.peek()));
    }
    Ok(f)
}

pub fn parse_term(src: &str) -> Result<PT, ParseError> {
    let mut p = Parser::new(src)?;
    let t = p.goal()?;
    if !p.at_eof() {
        return err(p.pos(), format!("unexpected {}", p.peek()));
    }
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lexes_symbols() {
        let toks: Vec<Tok> = lex("x\\ a :: L /\\ b \\/ c -> d := e :- f => g |- h % comment\n.")
            .unwrap()
            .into_iter()
            .map(|t| t.tok)
            .collect();
        assert!(toks.contains(&Tok::Sym("\\")));
        assert!(toks.contains(&Tok::Sym("/\\")));
        assert!(toks.contains(&Tok::Sym("\\/")));
        assert!(toks.contains(&Tok::Sym("|-")));
        assert!(toks.contains(&Tok::Sym(":-")));
        assert_eq!(toks.last(), Some(&Tok::Eof));
    }

    #[test]
    fn parses_statements() {
        let src = r#"
            Specification "stlc.sig".
            Define name : tm -> prop by nabla x, name x.
            Define fresh : tm -> tm -> prop by nabla x, fresh x E.
            Theorem t : forall M A, {of M A} -> exists B, {L |- of M B} /\ M = M.
            intros. case H1 (keep). apply IH to H2 _ with A = arr B C.
            induction on 1. search 10. inst H3 with n1 = P. cut H4 with H5.
        "#;
        let stmts = parse_script(src).unwrap();
        assert_eq!(stmts.len(), 11);
        assert!(matches!(stmts[0].cmd, Command::Specification(_)));
        assert!(matches!(
            stmts[6].cmd,
            Command::Tactic(Tactic::Apply { .. })
        ));
        assert_eq!(stmts[5].text, "case H1 (keep).");
    }

    #[test]
    fn parses_spec_clauses() {
        let src = r#"
            kind tm, ty type.
            type app tm -> tm -> tm.
            type of tm -> ty -> o.
            of (abs A R) (arr A B) :- pi x\ of x A => of (R x) B.
            of (app M N) B :- of M (arr A B), of N A.
        "#;
        let items = parse_spec(src).unwrap();
        assert_eq!(items.len(), 5);
        match &items[3].item {
            SpecItem::Clause(PT::Imp(body, _)) => {
                assert!(matches!(**body, PT::App(..)));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn parenthesised_formula_vs_term() {
        let f = parse_formula("(p X) /\\ (app M N) = X").unwrap();
        assert!(matches!(f, PF::And(..)));
        let f = parse_formula("forall X, (X = X -> false) \\/ true").unwrap();
        assert!(matches!(f, PF::Quant(..)));
    }
}
