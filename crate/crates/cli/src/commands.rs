use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use rayon::prelude::*;

use ace_core::io::{read_array, write_array, write_graymap, ArrayData, ReportDocument};
use ace_core::metrics::MapPaths;
use ace_core::{evaluate_case, extract_flow, generate, Grid, ScalarField2D, SynthSpec};

use crate::config::{resolve, SolverArgs};
use crate::inputs::{load_cases, pair};
use crate::Invalid;

pub struct EvalArgs {
    pub obs: PathBuf,
    pub truth: PathBuf,
    pub pred: PathBuf,
    pub out: PathBuf,
    pub maps: Option<PathBuf>,
    pub config: Option<PathBuf>,
    pub jobs: Option<usize>,
    pub solver: SolverArgs,
}

fn graymap_range(grid: &Grid) -> (f64, f64) {
    let hi = grid.max();
    (0.0, if hi > 0.0 { hi } else { 1.0 })
}

pub fn eval(args: EvalArgs) -> Result<()> {
    if args.out.extension().is_some_and(|e| e == "csv") {
        return Err(Invalid(format!(
            "--out {} would collide with the CSV written beside it",
            args.out.display()
        ))
        .into());
    }
    let mut cfg = resolve(args.config.as_deref(), &args.solver)?;
    cfg.emit_maps = args.maps.is_some();

    let pool = match args.jobs {
        Some(0) => return Err(Invalid("--jobs must be at least 1".into()).into()),
        Some(n) => rayon::ThreadPoolBuilder::new().num_threads(n),
        None => rayon::ThreadPoolBuilder::new(),
    }
    .build()
    .context("cannot start worker threads")?;

    let mut cases = Vec::new();
    for triple in pair(&args.obs, &args.truth, &args.pred)? {
        cases.extend(load_cases(&triple)?);
    }
    eprintln!(
        "evaluating {} case(s) on {} thread(s)",
        cases.len(),
        pool.current_num_threads()
    );

    let mut reports = pool.install(|| {
        cases
            .par_iter()
            .map(|case| evaluate_case(case, &cfg))
            .collect::<Result<Vec<_>, _>>()
    })?;

    if let Some(dir) = &args.maps {
        fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
        for report in &mut reports {
            let Some(maps) = report.maps.take() else {
                continue;
            };
            let ae_path = dir.join(format!("{}_ae.pgm", report.case_id));
            let ce_path = dir.join(format!("{}_ce.pgm", report.case_id));
            let (lo, hi) = graymap_range(maps.ae.grid());
            write_graymap(maps.ae.grid(), &ae_path, lo, hi)?;
            let (lo, hi) = graymap_range(maps.ce.grid());
            write_graymap(maps.ce.grid(), &ce_path, lo, hi)?;
            report.map_paths = Some(MapPaths {
                ae: ae_path.display().to_string(),
                ce: ce_path.display().to_string(),
            });
        }
    }

    let doc = ReportDocument::new(&cfg, reports);
    if let Some(parent) = args.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)
            .with_context(|| format!("cannot create {}", parent.display()))?;
    }
    doc.write_json(&args.out)?;
    let csv_path = args.out.with_extension("csv");
    doc.write_csv(&csv_path)?;
    eprintln!("wrote {} and {}", args.out.display(), csv_path.display());
    Ok(())
}

fn single_frame(path: &Path) -> Result<ScalarField2D> {
    let mut frames = read_array(path)?.into_frames();
    if frames.len() != 1 {
        return Err(Invalid(format!(
            "{} holds {} frames; flow needs a single 2-D field",
            path.display(),
            frames.len()
        ))
        .into());
    }
    Ok(frames.remove(0))
}

pub fn flow(
    from: &Path,
    to: &Path,
    out_vx: &Path,
    out_vy: &Path,
    config: Option<&Path>,
    solver: &SolverArgs,
) -> Result<()> {
    let cfg = resolve(config, solver)?;
    let a = single_frame(from)?;
    let b = single_frame(to)?;
    if a.shape() != b.shape() {
        return Err(Invalid(format!(
            "{} is {}x{} but {} is {}x{}",
            from.display(),
            a.height(),
            a.width(),
            to.display(),
            b.height(),
            b.width()
        ))
        .into());
    }
    let v = extract_flow(&a, &b, &cfg.tvl1)?;
    write_array(
        &ArrayData::Single(ScalarField2D::from_grid(v.vx().clone())?),
        out_vx,
    )?;
    write_array(
        &ArrayData::Single(ScalarField2D::from_grid(v.vy().clone())?),
        out_vy,
    )?;
    eprintln!("wrote {} and {}", out_vx.display(), out_vy.display());
    Ok(())
}

pub fn synth(spec_path: &Path, out: &Path) -> Result<()> {
    let text = fs::read_to_string(spec_path)
        .with_context(|| format!("cannot read {}", spec_path.display()))?;
    let spec = SynthSpec::from_kv_text(&text).map_err(|e| e.in_file(spec_path))?;
    if spec.steps < 2 {
        return Err(Invalid(format!(
            "{}: steps = {} but obs and truth need at least 2 frames",
            spec_path.display(),
            spec.steps
        ))
        .into());
    }
    let frames = generate(&spec)?;
    fs::create_dir_all(out).with_context(|| format!("cannot create {}", out.display()))?;
    write_array(&ArrayData::Single(frames[0].clone()), out.join("obs.npy"))?;
    write_array(&ArrayData::Single(frames[1].clone()), out.join("truth.npy"))?;
    write_array(&ArrayData::Stack(frames), out.join("sequence.npy"))?;
    let (dx, dy) = spec.advection;
    let oracle = format!(
        "# true motion and intensity change per step\ndx = {dx}\ndy = {dy}\nconvection_rate = {}\nsteps = {}\nseed = {}\n",
        spec.convection_rate, spec.steps, spec.seed
    );
    let oracle_path = out.join("oracle.txt");
    fs::write(&oracle_path, oracle)
        .with_context(|| format!("cannot write {}", oracle_path.display()))?;
    eprintln!("wrote {} frame(s) to {}", spec.steps, out.display());
    Ok(())
}
