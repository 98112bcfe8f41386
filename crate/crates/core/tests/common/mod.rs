#![allow(dead_code)]

use std::path::{Path, PathBuf};

use nabla::session::{Options, Session};

pub fn corpus() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

pub fn spec_stmt() -> String {
    format!(
        "Specification \"{}\".",
        corpus().join("stlc.spec").display()
    )
}

pub fn stlc() -> Session {
    let mut s = Session::new(Options::default());
    s.exec_text(&spec_stmt()).expect("stlc.spec loads");
    s
}
