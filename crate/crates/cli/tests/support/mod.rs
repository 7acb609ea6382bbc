#![allow(dead_code)]

use std::path::{Path, PathBuf};

pub fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(name)
}

pub struct Run {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

/// Runs `pdeclass <args> --out <out>` in process.
pub fn run(args: &[&str], out: &Path) -> Run {
    let mut argv: Vec<String> = vec!["pdeclass".to_string()];
    argv.extend(args.iter().map(|s| s.to_string()));
    argv.push("--out".to_string());
    argv.push(out.display().to_string());
    let (mut o, mut e) = (Vec::new(), Vec::new());
    let code = pdeclass_cli::run(argv, &mut o, &mut e);
    Run {
        code,
        stdout: String::from_utf8(o).unwrap(),
        stderr: String::from_utf8(e).unwrap(),
    }
}

pub fn run_config(sub: &str, cfg: &str, extra: &[&str], out: &Path) -> Run {
    let path = config(cfg).display().to_string();
    let mut args = vec![sub, "--config", path.as_str()];
    args.extend_from_slice(extra);
    run(&args, out)
}

/// A paper table from `tests/golden`, rows `N`, columns `t`.
pub fn golden(name: &str) -> Vec<Vec<String>> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name);
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
        .map(|l| l.split_whitespace().map(str::to_string).collect())
        .collect()
}

/// The markdown tables of `qtable.md`, keyed by their `Q_*` heading.
pub fn markdown_tables(text: &str) -> Vec<(String, Vec<Vec<String>>)> {
    let mut out: Vec<(String, Vec<Vec<String>>)> = Vec::new();
    for line in text.lines() {
        if let Some(name) = line.strip_prefix("Q_") {
            out.push((name.trim().to_string(), Vec::new()));
        } else if line.starts_with('|') && !line.starts_with("| N") && !line.starts_with("|--") {
            let cells: Vec<String> = line.trim_matches('|').split('|').map(|c| c.trim().to_string()).collect();
            out.last_mut().expect("heading first").1.push(cells[1..].to_vec());
        }
    }
    out
}

/// `(statistic, N, t) -> Q` from `qtable.csv`.
pub fn csv_values(text: &str) -> Vec<(String, usize, usize, f64)> {
    text.lines()
        .skip(1)
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[0].to_string(), f[1].parse().unwrap(), f[2].parse().unwrap(), f[3].parse().unwrap())
        })
        .collect()
}
