use crate::error::Result;
use crate::field::{Grid, ScalarField2D, MIN_FIELD_SIZE};
use crate::filter::gaussian_blur;

use super::TvL1Config;

/// Coarse-to-fine image pyramid, finest level first.
#[derive(Clone, Debug)]
pub struct Pyramid {
    levels: Vec<ScalarField2D>,
}

impl Pyramid {
    pub fn levels(&self) -> &[ScalarField2D] {
        &self.levels
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    pub fn level(&self, k: usize) -> &ScalarField2D {
        &self.levels[k]
    }

    pub fn coarsest(&self) -> &ScalarField2D {
        self.levels
            .last()
            .expect("pyramid always holds the input level")
    }
}

/// Level shapes for a `height x width` input: each level is the previous one
/// scaled by `scale_step` and rounded, stopping at `nscales` levels or before
/// a dimension would drop below the minimum size.
pub fn level_shapes(
    height: usize,
    width: usize,
    nscales: usize,
    scale_step: f64,
) -> Vec<(usize, usize)> {
    let mut shapes = vec![(height, width)];
    while shapes.len() < nscales {
        let (h, w) = *shapes.last().unwrap();
        let next = (
            (h as f64 * scale_step).round() as usize,
            (w as f64 * scale_step).round() as usize,
        );
        if next.0 < MIN_FIELD_SIZE || next.1 < MIN_FIELD_SIZE || next == (h, w) {
            break;
        }
        shapes.push(next);
    }
    shapes
}

/// Anti-aliasing width used before each downscale.
pub fn smoothing_sigma(scale_step: f64) -> f64 {
    0.8 * (1.0 / (scale_step * scale_step) - 1.0).sqrt()
}

/// Resamples `grid` to `height x width` with pixel-centre alignment.
pub fn resample_bilinear(grid: &Grid, height: usize, width: usize) -> Grid {
    let sy = grid.height() as f64 / height as f64;
    let sx = grid.width() as f64 / width as f64;
    Grid::from_fn(height, width, |r, c| {
        let y = (r as f64 + 0.5) * sy - 0.5;
        let x = (c as f64 + 0.5) * sx - 0.5;
        grid.sample_bilinear(x, y)
    })
}

pub fn build_pyramid(field: &ScalarField2D, config: &TvL1Config) -> Result<Pyramid> {
    config.validate()?;
    field.require_min_size()?;
    let shapes = level_shapes(
        field.height(),
        field.width(),
        config.nscales,
        config.scale_step,
    );
    let sigma = smoothing_sigma(config.scale_step);

    let mut levels = Vec::with_capacity(shapes.len());
    levels.push(field.clone());
    for &(h, w) in &shapes[1..] {
        let prev = levels.last().unwrap();
        let smoothed = gaussian_blur(prev.grid(), sigma);
        levels.push(ScalarField2D::from_grid(resample_bilinear(
            &smoothed, h, w,
        ))?);
    }
    Ok(Pyramid { levels })
}
