//! Experiment configs: JSON files with per-subcommand fields, plus the
//! system and labeling specs they share.

use std::path::{Path, PathBuf};

use fingen::system::FiniteSystem;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::CliError;

pub fn load<T: DeserializeOwned + Default>(path: Option<&Path>) -> Result<(T, Option<PathBuf>), CliError> {
    let Some(path) = path else {
        return Ok((T::default(), None));
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
    let cfg =
        serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("bad config {}: {e}", path.display())))?;
    Ok((cfg, path.parent().map(Path::to_path_buf)))
}

/// Where a system comes from.
#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SystemSpec {
    Cyclic(usize),
    Dihedral(usize),
    Torus([usize; 2]),
    File(PathBuf),
    /// Inline system JSON: `{"points": N, "weights": [...], "generators": {...}}`.
    Inline(Value),
}

impl SystemSpec {
    pub fn build(&self, base: Option<&Path>, max_points: usize) -> Result<FiniteSystem, CliError> {
        let points = match self {
            SystemSpec::Cyclic(n) | SystemSpec::Dihedral(n) => Some(*n),
            SystemSpec::Torus([a, b]) => Some(a * b),
            _ => None,
        };
        if let Some(n) = points {
            check_points(n, max_points)?;
        }
        let sys = match self {
            SystemSpec::Cyclic(n) => FiniteSystem::cyclic(*n)?,
            SystemSpec::Dihedral(n) => FiniteSystem::dihedral(*n)?,
            SystemSpec::Torus([a, b]) => FiniteSystem::torus(*a, *b)?,
            SystemSpec::File(p) => {
                let p = resolve(base, p);
                let text = std::fs::read_to_string(&p)
                    .map_err(|e| CliError::Usage(format!("cannot read system {}: {e}", p.display())))?;
                FiniteSystem::from_json(&text)?
            }
            SystemSpec::Inline(v) => FiniteSystem::from_value(v)?,
        };
        check_points(sys.n(), max_points)?;
        Ok(sys)
    }
}

fn check_points(n: usize, max_points: usize) -> Result<(), CliError> {
    if n > max_points {
        return Err(CliError::Usage(format!("system has {n} points, above --max-points {max_points}")));
    }
    Ok(())
}

fn resolve(base: Option<&Path>, p: &Path) -> PathBuf {
    match base {
        Some(b) if p.is_relative() => b.join(p),
        _ => p.to_path_buf(),
    }
}

/// A labeling of the system's points.
#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(untagged)]
pub enum LabelSpec {
    Explicit(Vec<usize>),
    Rule(LabelRule),
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum LabelRule {
    /// `x mod d`.
    Mod(usize),
    /// Label 1 where `x mod period` is listed, 0 elsewhere.
    Marks {
        period: usize,
        marks: Vec<usize>,
    },
    /// Repeat a pattern along the points.
    Pattern(Vec<usize>),
    /// Uniform labels in `0..cells` from the instance stream.
    Random(usize),
    File(PathBuf),
}

impl LabelSpec {
    pub fn build(&self, n: usize, base: Option<&Path>, rng: &mut ChaCha8Rng) -> Result<Vec<usize>, CliError> {
        let labels = match self {
            LabelSpec::Explicit(v) => v.clone(),
            LabelSpec::Rule(LabelRule::Mod(d)) if *d > 0 => (0..n).map(|x| x % d).collect(),
            LabelSpec::Rule(LabelRule::Marks { period, marks }) if *period > 0 => {
                (0..n).map(|x| usize::from(marks.contains(&(x % period)))).collect()
            }
            LabelSpec::Rule(LabelRule::Pattern(p)) if !p.is_empty() => (0..n).map(|x| p[x % p.len()]).collect(),
            LabelSpec::Rule(LabelRule::Random(k)) if *k > 0 => (0..n).map(|_| rng.gen_range(0..*k)).collect(),
            LabelSpec::Rule(LabelRule::File(p)) => {
                let p = resolve(base, p);
                let text = std::fs::read_to_string(&p)
                    .map_err(|e| CliError::Usage(format!("cannot read labeling {}: {e}", p.display())))?;
                serde_json::from_str(&text)
                    .map_err(|e| CliError::Usage(format!("bad labeling {}: {e}", p.display())))?
            }
            _ => return Err(CliError::Usage(format!("labeling rule needs a positive size: {self:?}"))),
        };
        if labels.len() != n {
            return Err(CliError::Usage(format!("labeling has {} entries, system has {n} points", labels.len())));
        }
        Ok(labels)
    }
}
