#![allow(dead_code)]

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const CATEGORIES: [&str; 16] = [
    "airplane", "bear", "bicycle", "bird", "boat", "bottle", "car", "cat", "chair", "clock", "dog", "elephant",
    "keyboard", "knife", "oven", "truck",
];

pub fn errcons(args: &[&str], threads: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_errcons"));
    cmd.args(args);
    match threads {
        Some(t) => cmd.env("ERRCONS_THREADS", t),
        None => cmd.env_remove("ERRCONS_THREADS"),
    };
    cmd.output().expect("binary runs")
}

/// Writes a categorical response file for `observers` on `n` trials. Each
/// observer answers correctly with its own accuracy, otherwise picks a wrong
/// category at random.
pub fn write_synthetic(dir: &Path, observers: &[(&str, f64)], n: usize, seed: u64) -> PathBuf {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut text = String::from("observer_id,trial_id,expected,response\n");
    for &(obs, acc) in observers {
        for t in 0..n {
            let expected = CATEGORIES[t % CATEGORIES.len()];
            let response = if rng.random_bool(acc) {
                expected
            } else {
                let k = (t % CATEGORIES.len() + rng.random_range(1..CATEGORIES.len())) % CATEGORIES.len();
                CATEGORIES[k]
            };
            writeln!(text, "{obs},img{t:04},{expected},{response}").unwrap();
        }
    }
    let path = dir.join("responses.csv");
    std::fs::write(&path, text).unwrap();
    path
}

pub fn write_groups(dir: &Path, groups: &[(&str, &str)]) -> PathBuf {
    let map: std::collections::BTreeMap<_, _> = groups.iter().copied().collect();
    let path = dir.join("groups.json");
    std::fs::write(&path, serde_json::to_string(&map).unwrap()).unwrap();
    path
}

pub const SYNTHETIC: [(&str, f64); 6] = [
    ("subject-01", 0.7),
    ("subject-02", 0.65),
    ("subject-03", 0.8),
    ("alexnet", 0.55),
    ("resnet50", 0.75),
    ("vgg16", 0.6),
];

pub fn synthetic_groups() -> Vec<(&'static str, &'static str)> {
    SYNTHETIC
        .iter()
        .map(|&(o, _)| (o, if o.starts_with("subject") { "human" } else { "model" }))
        .collect()
}
