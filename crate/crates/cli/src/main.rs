use std::io::{self, BufRead, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use clap::Parser;
use nabla::session::{Options, Server, Session, SessionError};
use nabla::tactics::DEFAULT_SEARCH_DEPTH;

/// Interactive prover for the logic G with a two-level specification layer.
#[derive(Parser, Debug)]
#[command(name = "nabla", version)]
struct Args {
    /// Specification files and `.thm` scripts, loaded in order.
    files: Vec<PathBuf>,
    /// Replay the files without interaction; exit 0 on success, 1 on a
    /// failed proof step, 2 on a syntax error.
    #[arg(long)]
    batch: bool,
    /// Default depth bound for `search`.
    #[arg(long, default_value_t = DEFAULT_SEARCH_DEPTH)]
    search_depth: usize,
    /// Re-derive closed instances of trusted rules with the animator.
    #[arg(long)]
    verify_meta: bool,
    /// Serve the JSON-lines protocol on this port.
    #[arg(long, value_name = "PORT")]
    serve: Option<u16>,
    /// Print the trust report as JSON after loading.
    #[arg(long)]
    trust_json: bool,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let opts = Options {
        search_depth: args.search_depth,
        verify_meta: args.verify_meta,
    };
    if let Some(port) = args.serve {
        let server = Arc::new(Server::new(opts));
        eprintln!("listening on 127.0.0.1:{port}");
        return match server.serve(&format!("127.0.0.1:{port}")) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(1)
            }
        };
    }
    let mut session = Session::new(opts);
    for f in &args.files {
        if let Err(e) = session.load(f) {
            eprintln!("{e}");
            if let Some(st) = &e.state {
                eprintln!("{st}");
            }
            if args.batch {
                return ExitCode::from(e.exit_code() as u8);
            }
        }
    }
    if args.batch {
        let n = session.lemmas.iter().count();
        println!("{n} theorems proved");
        print_trust(&session, args.trust_json);
        return ExitCode::SUCCESS;
    }
    repl(&mut session);
    ExitCode::SUCCESS
}

fn print_trust(session: &Session, json: bool) {
    if json {
        println!(
            "{}",
            serde_json::to_string(&session.trust).expect("trust report serializes")
        );
        return;
    }
    let t = &session.trust;
    if t.overrides.is_empty() && t.uses.is_empty() {
        return;
    }
    println!("trust report:");
    for o in &t.overrides {
        println!("  override: {o}");
    }
    for u in &t.uses {
        let v = match u.verified {
            Some(true) => " (re-derived)",
            Some(false) => " (NOT re-derived)",
            None => "",
        };
        println!("  {} in {}: {}{v}", u.rule, u.theorem, u.instance);
    }
}

fn prompt(session: &Session) {
    match &session.proof {
        Some(p) => {
            if let Some(s) = p.focused() {
                println!("\n{s}");
                if p.goals.len() > 1 {
                    println!("({} other subgoals)", p.goals.len() - 1);
                }
            }
            print!("{} < ", p.name);
        }
        None => print!("nabla < "),
    }
    io::stdout().flush().ok();
}

/// Reads statements (each ending in `.`) from standard input.
fn repl(session: &mut Session) {
    let stdin = io::stdin();
    let mut buf = String::new();
    prompt(session);
    for line in stdin.lock().lines() {
        let Ok(line) = line else { break };
        buf.push_str(&line);
        buf.push('\n');
        let code = line.split('%').next().unwrap_or("").trim_end();
        if !code.ends_with('.') {
            continue;
        }
        let text = std::mem::take(&mut buf);
        match session.exec_text(&text) {
            Ok(m) if !m.is_empty() => println!("{m}"),
            Ok(_) => {}
            Err(SessionError::Parse(e)) => println!("syntax error: {e}"),
            Err(e) => println!("error: {e}"),
        }
        prompt(session);
    }
    println!();
    print_trust(session, false);
}
