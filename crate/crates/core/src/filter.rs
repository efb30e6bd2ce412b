//! Separable Gaussian smoothing with edge replication.

use crate::field::Grid;

/// Normalized Gaussian taps with radius `ceil(3 sigma)`.
pub fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let radius = (3.0 * sigma).ceil().max(0.0) as usize;
    let denom = 2.0 * sigma * sigma;
    let mut taps: Vec<f64> = (0..=2 * radius)
        .map(|i| {
            let d = i as f64 - radius as f64;
            (-d * d / denom).exp()
        })
        .collect();
    let sum: f64 = taps.iter().sum();
    for t in &mut taps {
        *t /= sum;
    }
    taps
}

/// Blurs `grid` with a truncated Gaussian of standard deviation `sigma`.
///
/// Border cells see replicated edge values. `sigma <= 0` returns a copy.
pub fn gaussian_blur(grid: &Grid, sigma: f64) -> Grid {
    if sigma <= 0.0 {
        return grid.clone();
    }
    let taps = gaussian_kernel(sigma);
    let radius = (taps.len() / 2) as isize;
    let (h, w) = grid.shape();

    let horizontal = Grid::from_fn(h, w, |r, c| {
        taps.iter()
            .enumerate()
            .map(|(k, t)| t * grid.get_clamped(r as isize, c as isize + k as isize - radius))
            .sum()
    });
    Grid::from_fn(h, w, |r, c| {
        taps.iter()
            .enumerate()
            .map(|(k, t)| t * horizontal.get_clamped(r as isize + k as isize - radius, c as isize))
            .sum()
    })
}
