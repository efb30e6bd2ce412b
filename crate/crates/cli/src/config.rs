//! Effective settings: defaults, then the config file, then flags.

use std::fs;
use std::path::Path;

use anyhow::Result;
use clap::Args;

use ace_core::io::kv;
use ace_core::{AceConfig, AceError};

/// Per-parameter overrides; any flag given wins over the config file.
#[derive(Args, Clone, Debug, Default)]
pub struct SolverArgs {
    #[arg(long)]
    pub tau: Option<f64>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub theta: Option<f64>,
    #[arg(long)]
    pub nscales: Option<usize>,
    #[arg(long)]
    pub warps: Option<usize>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub inner_iterations: Option<usize>,
    #[arg(long)]
    pub outer_iterations: Option<usize>,
    #[arg(long)]
    pub scale_step: Option<f64>,
    #[arg(long)]
    pub median_filter_size: Option<usize>,
    #[arg(long)]
    pub intensity_scale: Option<f64>,
    #[arg(long)]
    pub ace_epsilon: Option<f64>,
}

impl SolverArgs {
    fn apply(&self, cfg: &mut AceConfig) {
        let t = &mut cfg.tvl1;
        macro_rules! take {
            ($($field:ident => $target:expr),* $(,)?) => {
                $(if let Some(v) = self.$field { $target = v; })*
            };
        }
        take!(
            tau => t.tau,
            lambda => t.lambda,
            theta => t.theta,
            nscales => t.nscales,
            warps => t.warps,
            epsilon => t.epsilon,
            inner_iterations => t.inner_iterations,
            outer_iterations => t.outer_iterations,
            scale_step => t.scale_step,
            median_filter_size => t.median_filter_size,
            intensity_scale => t.intensity_scale,
        );
        if let Some(v) = self.ace_epsilon {
            cfg.ace_epsilon = v;
        }
    }
}

fn apply_file(cfg: &mut AceConfig, path: &Path) -> Result<(), AceError> {
    let text = fs::read_to_string(path).map_err(|e| AceError::from(e).in_file(path))?;
    let entries = kv::parse(&text).map_err(|line| {
        AceError::InvalidConfig(format!("line {line}: expected `key = value`")).in_file(path)
    })?;
    for e in entries {
        cfg.set(&e.key, &e.value).map_err(|err| {
            AceError::InvalidConfig(format!("line {}: {err}", e.line)).in_file(path)
        })?;
    }
    Ok(())
}

pub fn resolve(file: Option<&Path>, flags: &SolverArgs) -> Result<AceConfig> {
    let mut cfg = AceConfig::default();
    if let Some(path) = file {
        apply_file(&mut cfg, path)?;
    }
    flags.apply(&mut cfg);
    cfg.validate()?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn flag_beats_file_beats_default() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "lambda = 0.3\nwarps = 2 # fewer").unwrap();
        let flags = SolverArgs {
            warps: Some(4),
            ..Default::default()
        };
        let cfg = resolve(Some(f.path()), &flags).unwrap();
        assert_eq!(cfg.tvl1.lambda, 0.3);
        assert_eq!(cfg.tvl1.warps, 4);
        assert_eq!(cfg.tvl1.tau, 0.25);
    }

    #[test]
    fn bad_file_line_is_named() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "tau = 0.2\nwarps: 3").unwrap();
        let err = resolve(Some(f.path()), &SolverArgs::default()).unwrap_err();
        assert!(format!("{err:#}").contains("line 2"), "{err:#}");

        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "gamma = 1").unwrap();
        let err = resolve(Some(f.path()), &SolverArgs::default()).unwrap_err();
        assert!(format!("{err:#}").contains("gamma"), "{err:#}");
    }

    #[test]
    fn invalid_values_rejected_after_merge() {
        let flags = SolverArgs {
            median_filter_size: Some(4),
            ..Default::default()
        };
        assert!(resolve(None, &flags).is_err());
    }
}
