//! Helpers shared by the integration tests of the command-line crate.

#![allow(dead_code)]

pub mod unify_oracle;

use std::path::{Path, PathBuf};

use nabla::session::{Options, Session};

pub fn corpus() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

pub fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_nabla")
}

/// A session with the simply typed λ-calculus specification loaded.
pub fn stlc_session() -> Session {
    let mut s = Session::new(Options::default());
    s.load(&corpus().join("stlc.spec"))
        .expect("stlc.spec loads");
    s
}

/// Rewrites every nominal constant name `n<k>` in a script through `map`.
pub fn rename_nominals(src: &str, map: &dyn Fn(u32) -> u32) -> String {
    let chars: Vec<char> = src.chars().collect();
    let ident = |c: char| c.is_alphanumeric() || c == '_' || c == '\'';
    let mut out = String::with_capacity(src.len());
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let boundary = i == 0 || !ident(chars[i - 1]);
        if c == 'n' && boundary {
            let mut j = i + 1;
            while j < chars.len() && chars[j].is_ascii_digit() {
                j += 1;
            }
            if j > i + 1 && (j == chars.len() || !ident(chars[j])) {
                let k: u32 = chars[i + 1..j]
                    .iter()
                    .collect::<String>()
                    .parse()
                    .expect("digits");
                out.push_str(&format!("n{}", map(k)));
                i = j;
                continue;
            }
        }
        out.push(c);
        i += 1;
    }
    out
}
