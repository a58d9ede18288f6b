//! Shared plumbing: potential-argument parsing, output directories,
//! summaries, and the build identifier stamped into reports.

use aggsteady_core::potentials::{PotentialSpec, StepParams};
use aggsteady_core::Pot;
use anyhow::{bail, Context, Result};
use serde::Serialize;
use std::path::{Path, PathBuf};

/// Accepts either a path to a potential JSON file or a shorthand like
/// `quadratic`, `riesz:k=2`, `step:a=0.5`.
pub fn parse_potential(arg: &str) -> Result<(Pot, PotentialSpec)> {
    let spec = parse_potential_spec(arg)?;
    let pot = spec.build::<f64>()?;
    Ok((pot, spec))
}

pub fn parse_potential_spec(arg: &str) -> Result<PotentialSpec> {
    if arg == "quadratic" {
        return Ok(PotentialSpec::Quadratic);
    }
    if let Some(rest) = arg.strip_prefix("riesz:k=") {
        let k: f64 = rest.parse().context("riesz exponent")?;
        return Ok(PotentialSpec::Riesz { k });
    }
    if let Some(rest) = arg.strip_prefix("step:a=") {
        let a: f64 = rest.parse().context("step width")?;
        return Ok(PotentialSpec::Step { params: StepParams { a } });
    }
    let path = Path::new(arg);
    if path.exists() {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading potential file {arg}"))?;
        let spec: PotentialSpec =
            serde_json::from_str(&text).with_context(|| format!("parsing {arg}"))?;
        return Ok(spec);
    }
    bail!("unrecognized potential {arg:?}: expected quadratic, riesz:k=K, step:a=A, or a JSON file path")
}

/// `--out` default: ./out/<scenario-name>.
pub fn out_dir(flag: &Option<PathBuf>, name: &str) -> Result<PathBuf> {
    let dir = match flag {
        Some(p) => p.clone(),
        None => PathBuf::from("out").join(name),
    };
    std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    Ok(dir)
}

/// git-describe-style build identifier, falling back to the crate version.
pub fn build_id() -> String {
    std::process::Command::new("git")
        .args(["describe", "--always", "--dirty", "--tags"])
        .output()
        .ok()
        .filter(|o| o.status.success())
        .and_then(|o| String::from_utf8(o.stdout).ok())
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .unwrap_or_else(|| format!("v{}", env!("CARGO_PKG_VERSION")))
}

#[derive(Debug, Serialize)]
pub struct Summary<T: Serialize> {
    pub scenario: String,
    pub status: String,
    pub build: String,
    pub details: T,
}

/// Every command leaves a summary.json behind; `report` indexes them.
pub fn write_summary<T: Serialize>(dir: &Path, name: &str, pass: Option<bool>, details: T) -> Result<()> {
    let status = match pass {
        Some(true) => "PASS",
        Some(false) => "FAIL",
        None => "DONE",
    };
    let s = Summary {
        scenario: name.to_string(),
        status: status.to_string(),
        build: build_id(),
        details,
    };
    std::fs::write(dir.join("summary.json"), serde_json::to_string_pretty(&s)?)?;
    println!("{name}: {status}");
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    std::fs::write(path, serde_json::to_string_pretty(value)?)?;
    Ok(())
}

pub fn parse_times(arg: &str) -> Result<Vec<f64>> {
    arg.split(',')
        .map(|p| p.trim().parse::<f64>().with_context(|| format!("bad time {p:?}")))
        .collect()
}
