#![allow(dead_code)]

use std::path::PathBuf;

use diffspace_cli::{parse_program, run, FloatFormat, Report};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn manifest_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

/// The shipped example scripts as `(stem, source)`, sorted by name.
pub fn scripts() -> Vec<(String, String)> {
    let mut out: Vec<(String, String)> = std::fs::read_dir(manifest_dir().join("scripts"))
        .expect("scripts directory")
        .map(|e| e.expect("directory entry").path())
        .filter(|p| p.extension().is_some_and(|x| x == "ds"))
        .map(|p| {
            let stem = p.file_stem().unwrap().to_string_lossy().into_owned();
            (stem, std::fs::read_to_string(&p).expect("script reads"))
        })
        .collect();
    out.sort();
    out
}

pub fn golden_path(stem: &str) -> PathBuf {
    manifest_dir().join("tests").join("golden").join(format!("{stem}.jsonl"))
}

/// Runs a script under seed 0 and prints the report the way the binary does.
pub fn render(src: &str) -> String {
    let program = parse_program(src).expect("shipped scripts parse");
    run(&program, 0).to_json_lines(FloatFormat::Decimal)
}

/// Golden mismatches as `stem: reason`; empty when every script matches byte for byte.
pub fn golden_mismatches() -> Vec<String> {
    let mut bad = Vec::new();
    for (stem, src) in scripts() {
        let got = render(&src);
        match std::fs::read_to_string(golden_path(&stem)) {
            Ok(want) if want == got => {}
            Ok(want) => {
                let line = want.lines().zip(got.lines()).position(|(a, b)| a != b).unwrap_or(want.lines().count().min(got.lines().count()));
                bad.push(format!("{stem}: differs at record {}", line + 1));
            }
            Err(e) => bad.push(format!("{stem}: {e}")),
        }
    }
    bad
}

const VOCAB: &[&str] = &[
    "space", "gen", "fn", "assign", "samples", "use", "eval", "at", "under", "classify", "xi", "atlas", "probe",
    "toward", "along", "spec", "density", "tol", "family", "budget", "split", "export", "in", "minus", "where",
    "box", "sphere", "R^2", "R^N", "circle", "interval", "set", "union", "restrict", "tilde", "pi", "rho", "hat",
    "theta", "exp", "sin", "cos", "cutoff", "bump", "dist2", "xi_atlas", "cutoffsum", "pair", "z", "seq", "left",
    "right", "all", "and", "inf", "x", "y", "w", "f", "M", "L.x", "R.t", "unit_L", "0", "1", "2", "-1", "0.5",
    "1e-3", "1e308", "99999999999", "(", ")", "{", "}", "[", "]", ";", ",", ":", "=", "!=", ">", "=>", "+", "-", "*",
    "/", "^", "|", "#", "\n", " ",
];

/// Random bytes, lossily decoded as the CLI would never see them but the parser must survive.
pub fn random_bytes(r: &mut impl Rng) -> String {
    let n = r.random_range(0..200);
    let bytes: Vec<u8> = (0..n).map(|_| r.random()).collect();
    String::from_utf8_lossy(&bytes).into_owned()
}

/// A sequence of DSL tokens in random order.
pub fn token_soup(r: &mut impl Rng) -> String {
    let n = r.random_range(0..60);
    let mut s = String::new();
    for _ in 0..n {
        s.push_str(VOCAB.choose(r).unwrap());
        if r.random_bool(0.6) {
            s.push(' ');
        }
    }
    s
}

/// `src` with a few characters deleted, duplicated or replaced.
pub fn mutate(r: &mut impl Rng, src: &str) -> String {
    let mut chars: Vec<char> = src.chars().collect();
    for _ in 0..r.random_range(1..=4) {
        if chars.is_empty() {
            break;
        }
        let i = r.random_range(0..chars.len());
        match r.random_range(0..4) {
            0 => {
                chars.remove(i);
            }
            1 => chars.insert(i, chars[i]),
            2 => chars[i] = *b"0123456789(){};:,=-+*/^.x".choose(r).unwrap() as char,
            _ => {
                let tok: Vec<char> = VOCAB.choose(r).unwrap().chars().collect();
                chars.splice(i..i, tok);
            }
        }
    }
    chars.into_iter().collect()
}

/// Outcome of a fuzz campaign.
#[derive(Debug, Default)]
pub struct FuzzStats {
    pub inputs: usize,
    pub parsed: usize,
    pub executed: usize,
    pub panics: Vec<String>,
}

/// Parses `n` generated inputs and runs up to `run_limit` of the mutants that parse.
pub fn fuzz(seed: u64, n: usize, run_limit: usize) -> FuzzStats {
    let mut r = rng(seed);
    let scripts = scripts();
    let mut stats = FuzzStats::default();
    let quiet = std::panic::take_hook();
    std::panic::set_hook(Box::new(|_| {}));
    for i in 0..n {
        let (src, is_mutant) = match i % 4 {
            0 => (random_bytes(&mut r), false),
            1 => (token_soup(&mut r), false),
            _ => {
                let pick = r.random_range(0..scripts.len());
                (mutate(&mut r, &scripts[pick].1), true)
            }
        };
        stats.inputs += 1;
        let parsed = std::panic::catch_unwind(|| parse_program(&src));
        let program = match parsed {
            Ok(Ok(p)) => p,
            Ok(Err(d)) => {
                if d.line == 0 || d.col == 0 {
                    stats.panics.push(format!("diagnostic without a span for {src:?}"));
                }
                continue;
            }
            Err(_) => {
                stats.panics.push(format!("parse panicked on {src:?}"));
                continue;
            }
        };
        stats.parsed += 1;
        if is_mutant && stats.executed < run_limit && (run_limit > 1000 || !src.contains("xi_atlas")) {
            stats.executed += 1;
            let ran = std::panic::catch_unwind(|| run(&program, seed).to_json_lines(FloatFormat::Hex));
            match ran {
                Ok(text) => {
                    if Report::from_json_lines(&text, FloatFormat::Hex).is_err() {
                        stats.panics.push(format!("unreadable report for {src:?}"));
                    }
                }
                Err(_) => stats.panics.push(format!("run panicked on {src:?}")),
            }
        }
    }
    std::panic::set_hook(quiet);
    stats
}
