#![allow(dead_code)]

use std::path::Path;
use std::process::{Command, Output};

pub fn fplfix(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fplfix"))
        .current_dir(dir)
        .env_remove("FPLFIX_THREADS")
        .args(args)
        .output()
        .expect("binary runs")
}

/// Run and require success, returning stdout.
pub fn ok(dir: &Path, args: &[&str]) -> String {
    let out = fplfix(dir, args);
    assert!(
        out.status.success(),
        "fplfix {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

pub const SIX_SCORES: &str = "probe_key,gallery_key,mated,score
0-0-0,0-0-1,1,0.7
0-0-0,0-0-2,1,0.8
0-0-1,0-0-2,1,0.9
0-0-0,1-0-0,0,0.5
0-0-0,1-0-1,0,0.6
0-0-1,1-0-0,0,0.75
";
