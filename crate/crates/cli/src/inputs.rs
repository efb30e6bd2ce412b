//! Turning the three input paths into evaluation cases.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};

use ace_core::io::read_array;
use ace_core::{EvalCase, ScalarField2D};

use crate::Invalid;

/// One array file per role, sharing a case-id stem.
#[derive(Debug, PartialEq)]
pub struct Triple {
    pub stem: String,
    pub obs: PathBuf,
    pub truth: PathBuf,
    pub pred: PathBuf,
}

fn array_names(dir: &Path) -> Result<BTreeSet<String>> {
    let mut names = BTreeSet::new();
    let listing = fs::read_dir(dir).with_context(|| format!("cannot list {}", dir.display()))?;
    for entry in listing {
        let entry = entry.with_context(|| format!("cannot list {}", dir.display()))?;
        let path = entry.path();
        if path.is_file() && path.extension().is_some_and(|e| e == "npy") {
            names.insert(entry.file_name().to_string_lossy().into_owned());
        }
    }
    Ok(names)
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "case".into())
}

/// Pairs files, or directories by identical file name.
pub fn pair(obs: &Path, truth: &Path, pred: &Path) -> Result<Vec<Triple>> {
    let dirs = [obs.is_dir(), truth.is_dir(), pred.is_dir()];
    if dirs.iter().all(|&d| !d) {
        return Ok(vec![Triple {
            stem: stem(pred),
            obs: obs.to_path_buf(),
            truth: truth.to_path_buf(),
            pred: pred.to_path_buf(),
        }]);
    }
    if !dirs.iter().all(|&d| d) {
        return Err(Invalid(format!(
            "--obs {}, --truth {} and --pred {} must all be files or all be directories",
            obs.display(),
            truth.display(),
            pred.display()
        ))
        .into());
    }

    let roles = [("obs", obs), ("truth", truth), ("pred", pred)];
    let names = roles
        .iter()
        .map(|(_, dir)| array_names(dir))
        .collect::<Result<Vec<_>>>()?;
    let all: BTreeSet<&String> = names.iter().flatten().collect();
    let mut problems = Vec::new();
    for name in &all {
        let missing: Vec<String> = roles
            .iter()
            .zip(&names)
            .filter(|(_, set)| !set.contains(*name))
            .map(|((_, dir), _)| dir.display().to_string())
            .collect();
        if !missing.is_empty() {
            problems.push(format!("{name} is missing from {}", missing.join(", ")));
        }
    }
    if !problems.is_empty() {
        return Err(Invalid(format!("unmatched input files: {}", problems.join("; "))).into());
    }
    if all.is_empty() {
        return Err(Invalid(format!("no .npy files in {}", obs.display())).into());
    }
    Ok(all
        .into_iter()
        .map(|name| Triple {
            stem: stem(Path::new(name)),
            obs: obs.join(name),
            truth: truth.join(name),
            pred: pred.join(name),
        })
        .collect())
}

fn frames(path: &Path) -> Result<Vec<ScalarField2D>> {
    Ok(read_array(path)?.into_frames())
}

/// Case id for frame `t` of `count`; single frames keep the bare stem.
pub fn case_id(stem: &str, t: usize, count: usize) -> String {
    if count == 1 {
        return stem.to_string();
    }
    let width = (count - 1).to_string().len().max(4);
    format!("{stem}_t{t:0width$}")
}

/// Reads a triple and pairs frame t of each role.
pub fn load_cases(triple: &Triple) -> Result<Vec<EvalCase>> {
    let obs = frames(&triple.obs)?;
    let truth = frames(&triple.truth)?;
    let pred = frames(&triple.pred)?;
    let named = [
        (&triple.obs, &obs),
        (&triple.truth, &truth),
        (&triple.pred, &pred),
    ];
    if let Some((path, _)) = named.iter().find(|(_, f)| f.is_empty()) {
        return Err(Invalid(format!("{} holds no frames", path.display())).into());
    }

    for (a, b) in [(1, 2), (0, 1)] {
        let ((pa, fa), (pb, fb)) = (named[a], named[b]);
        if fa.len() != fb.len() {
            return Err(Invalid(format!(
                "{} has {} frames but {} has {}",
                pa.display(),
                fa.len(),
                pb.display(),
                fb.len()
            ))
            .into());
        }
        let (sa, sb) = (fa[0].shape(), fb[0].shape());
        if sa != sb {
            return Err(Invalid(format!(
                "{} has {}x{} frames but {} has {}x{}",
                pa.display(),
                sa.0,
                sa.1,
                pb.display(),
                sb.0,
                sb.1
            ))
            .into());
        }
    }

    let count = obs.len();
    obs.into_iter()
        .zip(truth)
        .zip(pred)
        .enumerate()
        .map(|(t, ((o, tr), p))| {
            EvalCase::new(case_id(&triple.stem, t, count), o, tr, p)
                .with_context(|| format!("pairing {}", triple.pred.display()))
        })
        .collect()
}
