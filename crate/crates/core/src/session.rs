//! Sessions: script loading, the transcript, the trust report and the
//! line-delimited JSON protocol.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::definitions::{Accepted, Clause, ClauseDecl, DefStore, PredDecl};
use crate::elab::{ty_of, Elab, Implicit};
use crate::formula::{Binder, Formula};
use crate::kernel::Sequent;
use crate::parse::{
    parse_script, parse_term, Command, PDefClause, PTy, ParseError, Pos, Stmt, Tactic, PF,
};
use crate::print::{formula_to_string_with, Style};
use crate::sig::Signature;
use crate::speclogic::{self, ProgClause};
use crate::tactics::{self, Env, LemmaStore, ProofState, TrustUse, DEFAULT_SEARCH_DEPTH};
use crate::terms::{Term, Ty, Var};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug)]
pub struct Options {
    pub search_depth: usize,
    pub verify_meta: bool,
}

impl Default for Options {
    fn default() -> Options {
        Options {
            search_depth: DEFAULT_SEARCH_DEPTH,
            verify_meta: false,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SessionError {
    #[error("{0}")]
    Parse(ParseError),
    #[error("{pos}: {msg}")]
    Failed { pos: Pos, msg: String },
    #[error("{0}")]
    Io(String),
}

impl SessionError {
    fn at(pos: Pos, msg: impl ToString) -> SessionError {
        SessionError::Failed {
            pos,
            msg: msg.to_string(),
        }
    }

    pub fn line(&self) -> Option<u32> {
        match self {
            SessionError::Parse(e) => Some(e.pos.line),
            SessionError::Failed { pos, .. } => Some(pos.line),
            SessionError::Io(_) => None,
        }
    }

    /// Process exit code for batch mode: 2 for syntax errors, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            SessionError::Parse(_) => 2,
            _ => 1,
        }
    }
}

/// An error while loading a file, located by file and line.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("{file}:{line}: {error}")]
pub struct LoadError {
    pub file: String,
    pub line: u32,
    pub error: SessionError,
    /// The focused subgoal when a proof step failed.
    pub state: Option<String>,
}

impl LoadError {
    pub fn exit_code(&self) -> i32 {
        self.error.exit_code()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct TrustReport {
    /// Definitions accepted without a stratification check.
    pub overrides: Vec<String>,
    /// Uses of trusted specification-logic properties in finished proofs.
    pub uses: Vec<TrustUse>,
}

pub struct Session {
    pub sig: Signature,
    pub defs: DefStore,
    pub spec: Vec<ProgClause>,
    pub lemmas: LemmaStore,
    pub proof: Option<ProofState>,
    /// Every statement that took effect, in order.
    pub transcript: Vec<String>,
    pub trust: TrustReport,
    pub opts: Options,
    base: PathBuf,
}

impl Session {
    pub fn new(opts: Options) -> Session {
        let sig = Signature::new();
        let mut defs = DefStore::new();
        speclogic::install_seq(&sig, &mut defs).expect("fresh definition store");
        Session {
            sig,
            defs,
            spec: Vec::new(),
            lemmas: LemmaStore::new(),
            proof: None,
            transcript: Vec::new(),
            trust: TrustReport::default(),
            opts,
            base: PathBuf::from("."),
        }
    }

    pub fn env(&self) -> Env<'_> {
        Env {
            sig: &self.sig,
            defs: &self.defs,
            spec: &self.spec,
            lemmas: &self.lemmas,
            search_depth: self.opts.search_depth,
            verify_meta: self.opts.verify_meta,
        }
    }

    /// Directory that relative `Specification` paths resolve against.
    pub fn set_base(&mut self, dir: &Path) {
        self.base = dir.to_path_buf();
    }

    /// Elaborates a specification goal; capitalized names are free
    /// variables.
    pub fn spec_goal(&self, src: &str) -> Result<Term, SessionError> {
        let pt = parse_term(src).map_err(SessionError::Parse)?;
        let pos = pt.pos();
        let none = |_: &str| None;
        let mut el = Elab::new(&self.sig, &none).implicit(Implicit::Capitalized);
        let g = el.goal(&pt).map_err(|e| SessionError::at(pos, e))?;
        el.solve().map_err(|e| SessionError::at(pos, e))?;
        el.finish_term(&g).map_err(|e| SessionError::at(pos, e))
    }

    pub fn focused(&self) -> Option<&Sequent> {
        self.proof.as_ref().and_then(|p| p.focused())
    }

    /// Loads a `.thm` script, or a specification file otherwise.
    pub fn load(&mut self, path: &Path) -> Result<(), LoadError> {
        let file = path.display().to_string();
        let src = fs::read_to_string(path).map_err(|e| LoadError {
            file: file.clone(),
            line: 0,
            error: SessionError::Io(e.to_string()),
            state: None,
        })?;
        if path.extension().is_some_and(|e| e == "thm") {
            let saved = std::mem::replace(
                &mut self.base,
                path.parent().map(Path::to_path_buf).unwrap_or_default(),
            );
            let r = self.run_script(&src, &file);
            self.base = saved;
            r
        } else {
            let stmt = format!("Specification \"{}\".", absolute(path).display());
            self.exec_text(&stmt)
                .map(|_| ())
                .map_err(|error| LoadError {
                    file,
                    line: error.line().unwrap_or(0),
                    error,
                    state: None,
                })
        }
    }

    /// Runs every statement of a script. A proof left open at the end of the
    /// file is an error.
    pub fn run_script(&mut self, src: &str, file: &str) -> Result<(), LoadError> {
        let stmts = parse_script(src).map_err(|e| LoadError {
            file: file.to_string(),
            line: e.pos.line,
            error: SessionError::Parse(e),
            state: None,
        })?;
        let mut last = 0;
        for st in &stmts {
            last = st.pos.line;
            self.exec(st).map_err(|error| LoadError {
                file: file.to_string(),
                line: st.pos.line,
                error,
                state: self.focused().map(|s| s.to_string()),
            })?;
        }
        if let Some(p) = &self.proof {
            return Err(LoadError {
                file: file.to_string(),
                line: last,
                error: SessionError::at(
                    Pos { line: last, col: 0 },
                    format!(
                        "proof of {} is incomplete ({} subgoals remain)",
                        p.name,
                        p.goals.len()
                    ),
                ),
                state: self.focused().map(|s| s.to_string()),
            });
        }
        Ok(())
    }

    /// Parses and runs statements given as text; returns the message of the
    /// last one.
    pub fn exec_text(&mut self, src: &str) -> Result<String, SessionError> {
        let stmts = parse_script(src).map_err(SessionError::Parse)?;
        let mut out = String::new();
        for st in &stmts {
            out = self.exec(st)?;
        }
        Ok(out)
    }

    /// Runs one statement. On error the session is unchanged.
    pub fn exec(&mut self, st: &Stmt) -> Result<String, SessionError> {
        let pos = st.pos;
        let (msg, text) = match &st.cmd {
            Command::Specification(file) => {
                self.no_proof(pos)?;
                let path = {
                    let p = Path::new(file);
                    if p.is_absolute() {
                        p.to_path_buf()
                    } else {
                        self.base.join(p)
                    }
                };
                let src = fs::read_to_string(&path).map_err(|e| {
                    SessionError::at(pos, format!("cannot read {}: {e}", path.display()))
                })?;
                let mut sig = self.sig.clone();
                let mut defs = self.defs.clone();
                let clauses = speclogic::load_spec(&src, &mut sig, &mut defs)
                    .map_err(|e| SessionError::at(pos, format!("{}: {e}", path.display())))?;
                self.sig = sig;
                self.defs = defs;
                let n = clauses.len();
                self.spec.extend(clauses);
                (
                    format!("loaded {n} specification clauses"),
                    format!("Specification \"{}\".", absolute(&path).display()),
                )
            }
            Command::Kind(names) => {
                self.no_proof(pos)?;
                let mut sig = self.sig.clone();
                for k in names {
                    if !sig.add_kind(k) {
                        return Err(SessionError::at(pos, format!("type {k} declared twice")));
                    }
                }
                self.sig = sig;
                (String::new(), st.text.clone())
            }
            Command::Type(names, pty) => {
                self.no_proof(pos)?;
                let ty = ty_of(&self.sig, pty, pos).map_err(|e| SessionError::at(pos, e))?;
                let mut sig = self.sig.clone();
                for c in names {
                    if !sig.add_const(c, ty.clone()) {
                        return Err(SessionError::at(
                            pos,
                            format!("constant {c} declared twice"),
                        ));
                    }
                }
                self.sig = sig;
                (String::new(), st.text.clone())
            }
            Command::Define {
                override_,
                preds,
                clauses,
            } => {
                self.no_proof(pos)?;
                let acc = self.define(preds, clauses, *override_, pos)?;
                if acc.overridden {
                    self.trust
                        .overrides
                        .extend(acc.names.iter().map(|n| n.to_string()));
                }
                let names: Vec<&str> = acc.names.iter().map(|n| &**n).collect();
                (format!("defined {}", names.join(", ")), st.text.clone())
            }
            Command::Theorem { name, formula } => {
                self.no_proof(pos)?;
                if self.lemmas.contains(name) {
                    return Err(SessionError::at(
                        pos,
                        format!("a theorem named {name} already exists"),
                    ));
                }
                let f = tactics::elab_statement(&self.sig, &self.defs, formula, pos)
                    .map_err(|e| SessionError::at(pos, e))?;
                self.proof = Some(ProofState::new(name, f));
                (String::new(), st.text.clone())
            }
            Command::Query(pf) => {
                let f = self.query_formula(pf, pos)?;
                let ok = tactics::search(&self.env(), &Sequent::new(f), self.opts.search_depth)
                    .is_some();
                (if ok { "yes".into() } else { "no".into() }, st.text.clone())
            }
            Command::Tactic(Tactic::Abort) => {
                let p = self
                    .proof
                    .take()
                    .ok_or_else(|| SessionError::at(pos, "no proof in progress"))?;
                (format!("proof of {} aborted", p.name), st.text.clone())
            }
            Command::Tactic(tac) => {
                let env = Env {
                    sig: &self.sig,
                    defs: &self.defs,
                    spec: &self.spec,
                    lemmas: &self.lemmas,
                    search_depth: self.opts.search_depth,
                    verify_meta: self.opts.verify_meta,
                };
                let p = self
                    .proof
                    .as_mut()
                    .ok_or_else(|| SessionError::at(pos, "no proof in progress"))?;
                p.step(&env, tac, &st.text)
                    .map_err(|e| SessionError::at(pos, e))?;
                if p.is_complete() {
                    let p = self.proof.take().expect("proof in progress");
                    self.lemmas
                        .insert(&p.name, p.statement.clone())
                        .map_err(|e| SessionError::at(pos, e))?;
                    self.trust.uses.extend(p.trust);
                    (format!("proof of {} completed", p.name), st.text.clone())
                } else {
                    (String::new(), st.text.clone())
                }
            }
        };
        self.transcript.push(text);
        Ok(msg)
    }

    fn no_proof(&self, pos: Pos) -> Result<(), SessionError> {
        match &self.proof {
            Some(p) => Err(SessionError::at(
                pos,
                format!("finish or abort the proof of {} first", p.name),
            )),
            None => Ok(()),
        }
    }

    fn query_formula(&self, pf: &PF, pos: Pos) -> Result<Formula, SessionError> {
        let e = |e: crate::elab::ElabError| SessionError::at(pos, e);
        let preds = |p: &str| self.defs.get(p).map(|d| d.arg_tys.clone());
        let mut el = Elab::new(&self.sig, &preds).implicit(Implicit::Capitalized);
        let f = el.formula(pf, pos).map_err(e)?;
        el.solve().map_err(e)?;
        let mut f = el.finish_formula(&f).map_err(e)?;
        for v in el.free_vars(pos).map_err(e)?.iter().rev() {
            f = Formula::Exists(
                Binder::new(&v.name, v.ty.clone()),
                Box::new(f.abstract_var(v)),
            );
        }
        Ok(f)
    }

    fn define(
        &mut self,
        preds: &[(String, PTy)],
        clauses: &[PDefClause],
        allow_override: bool,
        pos: Pos,
    ) -> Result<Accepted, SessionError> {
        let mut decls = Vec::new();
        for (name, pty) in preds {
            let ty = ty_of(&self.sig, pty, pos).map_err(|e| SessionError::at(pos, e))?;
            let (args, target) = ty.uncurry();
            if target != Ty::Prop {
                return Err(SessionError::at(
                    pos,
                    format!("{name} must have a type ending in prop"),
                ));
            }
            decls.push(PredDecl {
                name: name.as_str().into(),
                arg_tys: args,
            });
        }
        let block: BTreeMap<String, Vec<Ty>> = decls
            .iter()
            .map(|d| (d.name.to_string(), d.arg_tys.clone()))
            .collect();
        let lookup = |p: &str| {
            block
                .get(p)
                .cloned()
                .or_else(|| self.defs.get(p).map(|d| d.arg_tys.clone()))
        };
        let mut out = Vec::new();
        for c in clauses {
            out.push(self.def_clause(&lookup, &block, c)?);
        }
        self.defs
            .add_definition(decls, out, allow_override)
            .map_err(|e| SessionError::at(pos, e))
    }

    fn def_clause(
        &self,
        lookup: &dyn Fn(&str) -> Option<Vec<Ty>>,
        block: &BTreeMap<String, Vec<Ty>>,
        c: &PDefClause,
    ) -> Result<ClauseDecl, SessionError> {
        let pos = c.pos;
        let e = |e: crate::elab::ElabError| SessionError::at(e.pos, e.msg);
        let (pred, hpos, args) = c.head.spine().ok_or_else(|| {
            SessionError::at(
                pos,
                "a clause head must be a predicate applied to arguments",
            )
        })?;
        let tys = block.get(pred).ok_or_else(|| {
            SessionError::at(
                hpos,
                format!("clause head names {pred}, which is not declared in this block"),
            )
        })?;
        if tys.len() != args.len() {
            return Err(SessionError::at(
                hpos,
                format!(
                    "clause for {pred} has {} arguments, expected {}",
                    args.len(),
                    tys.len()
                ),
            ));
        }
        let mut el = Elab::new(&self.sig, lookup).implicit(Implicit::Capitalized);
        for b in &c.nabla {
            el.declare(b, pos).map_err(e)?;
        }
        let mut hs = Vec::new();
        for (a, t) in args.iter().zip(tys) {
            hs.push(el.term(a, Some(t)).map_err(e)?);
        }
        let body = match &c.body {
            Some(pf) => Some(el.formula(pf, pos).map_err(e)?),
            None => None,
        };
        el.solve().map_err(e)?;
        let head = hs
            .iter()
            .map(|h| el.finish_term(h))
            .collect::<Result<Vec<_>, _>>()
            .map_err(e)?;
        let mut body = match &body {
            Some(b) => el.finish_formula(b).map_err(e)?,
            None => Formula::True,
        };
        let free = el.free_vars(pos).map_err(e)?;
        let nabla: Vec<Var> = free[..c.nabla.len()].to_vec();
        let mut in_head = std::collections::BTreeSet::new();
        for h in &head {
            in_head.extend(crate::terms::free_vars(h));
        }
        let mut univ = Vec::new();
        for v in &free[c.nabla.len()..] {
            if in_head.contains(v) {
                univ.push(v.clone());
            } else if body.free_vars().contains(v) {
                body = Formula::Exists(
                    Binder::new(&v.name, v.ty.clone()),
                    Box::new(body.abstract_var(v)),
                );
            }
        }
        Ok(ClauseDecl {
            pred: pred.into(),
            clause: Clause {
                univ,
                nabla,
                head,
                body,
            },
        })
    }

    /// The transcript as a replayable script.
    pub fn transcript_text(&self) -> String {
        let mut s = String::new();
        for t in &self.transcript {
            s.push_str(t);
            s.push('\n');
        }
        s
    }

    /// Runs a transcript in a fresh session.
    pub fn replay(opts: Options, transcript: &[String]) -> Result<Session, SessionError> {
        let mut s = Session::new(opts);
        for t in transcript {
            s.exec_text(t)?;
        }
        Ok(s)
    }

    pub fn snapshot(&self) -> Snapshot {
        let style = Style { full_parens: true };
        let f = |x: &Formula| formula_to_string_with(x, style);
        Snapshot {
            schema: SCHEMA_VERSION,
            theorem: self.proof.as_ref().map(|p| p.name.clone()),
            statement: self.proof.as_ref().map(|p| f(&p.statement)),
            subgoals: self
                .proof
                .as_ref()
                .map(|p| {
                    p.goals
                        .iter()
                        .map(|s| SequentView {
                            vars: s
                                .vars
                                .iter()
                                .map(|v| VarView {
                                    name: v.name.to_string(),
                                    ty: v.ty.to_string(),
                                })
                                .collect(),
                            nominals: s.support().iter().map(|n| n.to_string()).collect(),
                            hyps: s
                                .hyps
                                .iter()
                                .map(|h| HypView {
                                    name: h.name.clone(),
                                    formula: f(&h.formula),
                                })
                                .collect(),
                            goal: f(&s.goal),
                        })
                        .collect()
                })
                .unwrap_or_default(),
            lemmas: self
                .lemmas
                .iter()
                .map(|(n, x)| HypView {
                    name: n.to_string(),
                    formula: f(x),
                })
                .collect(),
            trust: self.trust.clone(),
        }
    }
}

fn absolute(p: &Path) -> PathBuf {
    fs::canonicalize(p).unwrap_or_else(|_| p.to_path_buf())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct VarView {
    pub name: String,
    pub ty: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct HypView {
    pub name: String,
    pub formula: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SequentView {
    pub vars: Vec<VarView>,
    pub nominals: Vec<String>,
    pub hyps: Vec<HypView>,
    pub goal: String,
}

/// Serialized view of a session; the first subgoal has the focus.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Snapshot {
    pub schema: u32,
    pub theorem: Option<String>,
    pub statement: Option<String>,
    pub subgoals: Vec<SequentView>,
    pub lemmas: Vec<HypView>,
    pub trust: TrustReport,
}

impl Snapshot {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("snapshot serializes")
    }
}

// ---------------------------------------------------------------------------
// Protocol

#[derive(Debug, Deserialize)]
#[serde(tag = "cmd", rename_all = "lowercase")]
enum Request {
    Open { session: String },
    Exec { text: String },
    Undo,
    State,
    Transcript,
    Close,
}

#[derive(Debug, Deserialize)]
struct Envelope {
    schema: u32,
    #[serde(default)]
    id: Option<Value>,
    #[serde(flatten)]
    req: Value,
}

struct Slot {
    session: Arc<Mutex<Session>>,
    owner: Option<u64>,
}

/// Named sessions shared by all connections. A session has at most one
/// writer at a time: the connection that opened it.
pub struct Server {
    opts: Options,
    sessions: Mutex<BTreeMap<String, Slot>>,
}

/// Per-connection protocol state.
pub struct Connection<'a> {
    server: &'a Server,
    id: u64,
    current: Option<(String, Arc<Mutex<Session>>)>,
}

impl Server {
    pub fn new(opts: Options) -> Server {
        Server {
            opts,
            sessions: Mutex::new(BTreeMap::new()),
        }
    }

    pub fn connect(&self, id: u64) -> Connection<'_> {
        Connection {
            server: self,
            id,
            current: None,
        }
    }

    /// Accepts clients on `addr`, one thread per connection.
    pub fn serve(self: Arc<Self>, addr: &str) -> std::io::Result<()> {
        use std::io::{BufRead, BufReader, Write};
        let listener = std::net::TcpListener::bind(addr)?;
        for (n, stream) in listener.incoming().enumerate() {
            let stream = stream?;
            let id = n as u64 + 1;
            let server = Arc::clone(&self);
            std::thread::spawn(move || {
                let mut conn = server.connect(id);
                let Ok(read) = stream.try_clone() else { return };
                let mut w = stream;
                for line in BufReader::new(read).lines() {
                    let Ok(line) = line else { break };
                    if line.trim().is_empty() {
                        continue;
                    }
                    let reply = conn.handle(&line);
                    if writeln!(w, "{reply}").is_err() {
                        break;
                    }
                }
                conn.close();
            });
        }
        Ok(())
    }
}

impl Connection<'_> {
    /// Handles one request line and returns one reply line.
    pub fn handle(&mut self, line: &str) -> String {
        let env: Envelope = match serde_json::from_str(line) {
            Ok(e) => e,
            Err(e) => return error_reply(None, &format!("malformed message: {e}"), None),
        };
        if env.schema != SCHEMA_VERSION {
            return error_reply(
                env.id,
                &format!(
                    "unsupported schema version {} (expected {SCHEMA_VERSION})",
                    env.schema
                ),
                None,
            );
        }
        let req: Request = match serde_json::from_value(env.req) {
            Ok(r) => r,
            Err(e) => return error_reply(env.id, &format!("malformed message: {e}"), None),
        };
        let id = env.id;
        match req {
            Request::Open { session } => self.open(id, &session),
            Request::Close => {
                self.close();
                ok_reply(id, "closed", None)
            }
            Request::Exec { text } => self.with_session(id, |s| s.exec_text(&text)),
            Request::Undo => self.with_session(id, |s| s.exec_text("undo.")),
            Request::State => self.with_session(id, |_| Ok(String::new())),
            Request::Transcript => match &self.current {
                None => error_reply(id, "no session is open", None),
                Some((_, s)) => {
                    let s = s.lock().expect("session lock");
                    let mut v = base_reply(id, true);
                    v["transcript"] = json!(s.transcript_text());
                    v.to_string()
                }
            },
        }
    }

    fn open(&mut self, id: Option<Value>, name: &str) -> String {
        self.close();
        let mut map = self.server.sessions.lock().expect("server lock");
        let slot = map.entry(name.to_string()).or_insert_with(|| Slot {
            session: Arc::new(Mutex::new(Session::new(self.server.opts))),
            owner: None,
        });
        if let Some(o) = slot.owner {
            if o != self.id {
                return error_reply(id, &format!("session {name} already has a writer"), None);
            }
        }
        slot.owner = Some(self.id);
        let s = Arc::clone(&slot.session);
        drop(map);
        let snap = s.lock().expect("session lock").snapshot();
        self.current = Some((name.to_string(), s));
        ok_reply(id, "opened", Some(&snap))
    }

    /// Releases the open session, if any.
    pub fn close(&mut self) {
        if let Some((name, _)) = self.current.take() {
            let mut map = self.server.sessions.lock().expect("server lock");
            if let Some(slot) = map.get_mut(&name) {
                if slot.owner == Some(self.id) {
                    slot.owner = None;
                }
            }
        }
    }

    fn with_session(
        &mut self,
        id: Option<Value>,
        f: impl FnOnce(&mut Session) -> Result<String, SessionError>,
    ) -> String {
        let Some((_, s)) = &self.current else {
            return error_reply(id, "no session is open", None);
        };
        let mut s = s.lock().expect("session lock");
        match f(&mut s) {
            Ok(m) => ok_reply(id, &m, Some(&s.snapshot())),
            Err(e) => error_reply(id, &e.to_string(), Some(&s.snapshot())),
        }
    }
}

fn base_reply(id: Option<Value>, ok: bool) -> Value {
    json!({ "schema": SCHEMA_VERSION, "id": id, "ok": ok })
}

fn ok_reply(id: Option<Value>, msg: &str, snap: Option<&Snapshot>) -> String {
    let mut v = base_reply(id, true);
    v["message"] = json!(msg);
    if let Some(s) = snap {
        v["state"] = serde_json::to_value(s).expect("snapshot serializes");
    }
    v.to_string()
}

fn error_reply(id: Option<Value>, msg: &str, snap: Option<&Snapshot>) -> String {
    let mut v = base_reply(id, false);
    v["error"] = json!(msg);
    if let Some(s) = snap {
        v["state"] = serde_json::to_value(s).expect("snapshot serializes");
    }
    v.to_string()
}
