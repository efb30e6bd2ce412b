use crate::error::{AceError, Result};
use crate::field::Grid;

/// Median of each `kernel x kernel` neighbourhood, with edge replication.
pub fn median_filter(grid: &Grid, kernel: usize) -> Result<Grid> {
    if kernel.is_multiple_of(2) {
        return Err(AceError::EvenKernel(kernel));
    }
    if kernel == 1 {
        return Ok(grid.clone());
    }
    let radius = (kernel / 2) as isize;
    let mid = kernel * kernel / 2;
    let mut window = Vec::with_capacity(kernel * kernel);
    let (h, w) = grid.shape();
    Ok(Grid::from_fn(h, w, |r, c| {
        window.clear();
        for dr in -radius..=radius {
            for dc in -radius..=radius {
                window.push(grid.get_clamped(r as isize + dr, c as isize + dc));
            }
        }
        *window.select_nth_unstable_by(mid, f64::total_cmp).1
    }))
}
