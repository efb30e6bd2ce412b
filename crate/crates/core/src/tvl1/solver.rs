//! Duality-based TV-L1 optical flow.
//!
//! Energy: `sum |grad u| + lambda * |rho(u)|` with `rho` the linearized
//! brightness-constancy residual. The L1 and TV terms are decoupled through
//! an auxiliary flow `v` with quadratic coupling `1/(2 theta) |u - v|^2`:
//! `v` has a closed-form pointwise solution (thresholding) and `u` is a
//! TV-denoised copy of `v` found by projected ascent on the dual variable.

use crate::error::Result;
use crate::field::{FlowField2D, Grid, ScalarField2D};
use crate::warp::remap;

use super::median::median_filter;
use super::pyramid::{build_pyramid, resample_bilinear};
use super::TvL1Config;

const GRAD_FLOOR: f64 = 1e-12;

/// Estimates the flow `v` with `to(x + v(x)) ~ from(x)`.
///
/// Sampling `to` along the returned flow (see [`remap`]) reconstructs
/// `from`. For a pattern that moves by `(dx, dy)` between `from` and `to` the
/// flow is approximately `(dx, dy)` on the pattern's support.
pub fn extract_flow(
    from: &ScalarField2D,
    to: &ScalarField2D,
    config: &TvL1Config,
) -> Result<FlowField2D> {
    config.validate()?;
    to.check_shape(from.shape())?;
    let scale = config.intensity_scale;
    let from_pyr = build_pyramid(&from.with_grid(from.map(|v| v * scale))?, config)?;
    let to_pyr = build_pyramid(&to.with_grid(to.map(|v| v * scale))?, config)?;

    let coarsest = from_pyr.coarsest();
    let mut flow = FlowState::zeros(coarsest.height(), coarsest.width());

    for level in (0..from_pyr.len()).rev() {
        let i0 = from_pyr.level(level).grid();
        let i1 = to_pyr.level(level).grid();
        if flow.shape() != i0.shape() {
            flow = flow.upsample(i0.height(), i0.width());
        }
        solve_level(i0, i1, &mut flow, config)?;
        flow.u1 = median_filter(&flow.u1, config.median_filter_size)?;
        flow.u2 = median_filter(&flow.u2, config.median_filter_size)?;
    }

    Ok(FlowField2D::from_parts_unchecked(flow.u1, flow.u2))
}

struct FlowState {
    u1: Grid,
    u2: Grid,
}

impl FlowState {
    fn zeros(h: usize, w: usize) -> Self {
        FlowState {
            u1: Grid::zeros(h, w),
            u2: Grid::zeros(h, w),
        }
    }

    fn shape(&self) -> (usize, usize) {
        self.u1.shape()
    }

    /// Moves the flow to a finer grid; magnitudes scale with the size ratio
    /// since they are measured in pixels of the level they live on.
    fn upsample(&self, h: usize, w: usize) -> Self {
        let (ch, cw) = self.shape();
        let fx = w as f64 / cw as f64;
        let fy = h as f64 / ch as f64;
        FlowState {
            u1: resample_bilinear(&self.u1, h, w).map(|v| v * fx),
            u2: resample_bilinear(&self.u2, h, w).map(|v| v * fy),
        }
    }
}

/// Central differences with edge replication.
fn centered_gradient(g: &Grid) -> (Grid, Grid) {
    let (h, w) = g.shape();
    let gx = Grid::from_fn(h, w, |r, c| {
        let r = r as isize;
        let c = c as isize;
        0.5 * (g.get_clamped(r, c + 1) - g.get_clamped(r, c - 1))
    });
    let gy = Grid::from_fn(h, w, |r, c| {
        let r = r as isize;
        let c = c as isize;
        0.5 * (g.get_clamped(r + 1, c) - g.get_clamped(r - 1, c))
    });
    (gx, gy)
}

/// Forward differences, zero on the last column / row.
fn forward_gradient(u: &[f64], h: usize, w: usize, ux: &mut [f64], uy: &mut [f64]) {
    for r in 0..h {
        for c in 0..w {
            let i = r * w + c;
            ux[i] = if c + 1 < w { u[i + 1] - u[i] } else { 0.0 };
            uy[i] = if r + 1 < h { u[i + w] - u[i] } else { 0.0 };
        }
    }
}

/// Negative adjoint of [`forward_gradient`].
fn divergence(px: &[f64], py: &[f64], h: usize, w: usize, div: &mut [f64]) {
    for r in 0..h {
        for c in 0..w {
            let i = r * w + c;
            let dx = if c == 0 {
                px[i]
            } else if c + 1 == w {
                -px[i - 1]
            } else {
                px[i] - px[i - 1]
            };
            let dy = if r == 0 {
                py[i]
            } else if r + 1 == h {
                -py[i - w]
            } else {
                py[i] - py[i - w]
            };
            div[i] = dx + dy;
        }
    }
}

/// Dual variables of the TV term for one flow component.
struct Dual {
    px: Vec<f64>,
    py: Vec<f64>,
}

impl Dual {
    fn zeros(n: usize) -> Self {
        Dual {
            px: vec![0.0; n],
            py: vec![0.0; n],
        }
    }

    /// Gradient ascent step followed by projection onto the unit ball.
    fn ascend(&mut self, ux: &[f64], uy: &[f64], step: f64) {
        for i in 0..self.px.len() {
            let qx = self.px[i] + step * ux[i];
            let qy = self.py[i] + step * uy[i];
            let norm = qx.hypot(qy).max(1.0);
            self.px[i] = qx / norm;
            self.py[i] = qy / norm;
        }
    }
}

struct Scratch {
    div: Vec<f64>,
    gx: Vec<f64>,
    gy: Vec<f64>,
}

impl Scratch {
    fn new(n: usize) -> Self {
        Scratch {
            div: vec![0.0; n],
            gx: vec![0.0; n],
            gy: vec![0.0; n],
        }
    }
}

/// TV denoising of one component: `u = v + theta * div p` at the fixed point.
fn denoise_component(
    v: &[f64],
    u: &mut [f64],
    dual: &mut Dual,
    scratch: &mut Scratch,
    shape: (usize, usize),
    config: &TvL1Config,
) {
    let (h, w) = shape;
    let step = config.tau / config.theta;
    for _ in 0..config.inner_iterations {
        divergence(&dual.px, &dual.py, h, w, &mut scratch.div);
        for i in 0..u.len() {
            u[i] = v[i] + config.theta * scratch.div[i];
        }
        forward_gradient(u, h, w, &mut scratch.gx, &mut scratch.gy);
        dual.ascend(&scratch.gx, &scratch.gy, step);
    }
    divergence(&dual.px, &dual.py, h, w, &mut scratch.div);
    for i in 0..u.len() {
        u[i] = v[i] + config.theta * scratch.div[i];
    }
}

fn solve_level(i0: &Grid, i1: &Grid, flow: &mut FlowState, config: &TvL1Config) -> Result<()> {
    let shape = i0.shape();
    let n = i0.len();
    let threshold = config.lambda * config.theta;

    let mut dual1 = Dual::zeros(n);
    let mut dual2 = Dual::zeros(n);
    let mut scratch = Scratch::new(n);
    let mut v1 = vec![0.0; n];
    let mut v2 = vec![0.0; n];
    let mut rho_c = vec![0.0; n];
    let mut grad_sq = vec![0.0; n];

    for _ in 0..config.warps {
        let anchor = FlowField2D::from_parts_unchecked(flow.u1.clone(), flow.u2.clone());
        let warped = remap(i1, &anchor)?;
        let (wx, wy) = centered_gradient(&warped);
        let (wx, wy) = (wx.values(), wy.values());

        // rho(u) = rho_c + grad . u
        for i in 0..n {
            grad_sq[i] = wx[i] * wx[i] + wy[i] * wy[i];
            rho_c[i] = warped.values()[i]
                - wx[i] * flow.u1.values()[i]
                - wy[i] * flow.u2.values()[i]
                - i0.values()[i];
        }

        for _ in 0..config.outer_iterations {
            let u1 = flow.u1.values();
            let u2 = flow.u2.values();
            for i in 0..n {
                let rho = rho_c[i] + wx[i] * u1[i] + wy[i] * u2[i];
                let bound = threshold * grad_sq[i];
                let (d1, d2) = if rho < -bound {
                    (threshold * wx[i], threshold * wy[i])
                } else if rho > bound {
                    (-threshold * wx[i], -threshold * wy[i])
                } else if grad_sq[i] > GRAD_FLOOR {
                    let k = -rho / grad_sq[i];
                    (k * wx[i], k * wy[i])
                } else {
                    (0.0, 0.0)
                };
                v1[i] = u1[i] + d1;
                v2[i] = u2[i] + d2;
            }

            let prev1 = flow.u1.values().to_vec();
            let prev2 = flow.u2.values().to_vec();
            denoise_component(
                &v1,
                flow.u1.values_mut(),
                &mut dual1,
                &mut scratch,
                shape,
                config,
            );
            denoise_component(
                &v2,
                flow.u2.values_mut(),
                &mut dual2,
                &mut scratch,
                shape,
                config,
            );

            // largest per-component update; a grid mean would be swamped by
            // flat background cells that barely move
            let change = prev1
                .iter()
                .zip(flow.u1.values())
                .chain(prev2.iter().zip(flow.u2.values()))
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            if change < config.epsilon {
                break;
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn divergence_is_negative_adjoint_of_gradient() {
        let (h, w) = (5, 7);
        let u: Vec<f64> = (0..h * w).map(|i| ((i * 37) % 11) as f64 - 5.0).collect();
        let px: Vec<f64> = (0..h * w)
            .map(|i| ((i * 13) % 7) as f64 * 0.3 - 1.0)
            .collect();
        let py: Vec<f64> = (0..h * w)
            .map(|i| ((i * 29) % 5) as f64 * 0.2 - 0.4)
            .collect();
        let mut ux = vec![0.0; h * w];
        let mut uy = vec![0.0; h * w];
        let mut div = vec![0.0; h * w];
        forward_gradient(&u, h, w, &mut ux, &mut uy);
        divergence(&px, &py, h, w, &mut div);
        let lhs: f64 = (0..h * w).map(|i| ux[i] * px[i] + uy[i] * py[i]).sum();
        let rhs: f64 = -(0..h * w).map(|i| u[i] * div[i]).sum::<f64>();
        assert!((lhs - rhs).abs() < 1e-10, "{lhs} vs {rhs}");
    }

    #[test]
    fn centered_gradient_of_ramp() {
        let g = Grid::from_fn(6, 6, |r, c| 2.0 * c as f64 + 3.0 * r as f64);
        let (gx, gy) = centered_gradient(&g);
        assert_eq!(gx.get(2, 3), 2.0);
        assert_eq!(gy.get(2, 3), 3.0);
        // one-sided half difference at the replicated border
        assert_eq!(gx.get(2, 0), 1.0);
    }

    #[test]
    fn upsample_scales_magnitude_by_size_ratio() {
        let s = FlowState {
            u1: Grid::filled(8, 10, 1.0),
            u2: Grid::filled(8, 10, -2.0),
        };
        let up = s.upsample(10, 20);
        assert!(up.u1.values().iter().all(|&v| (v - 2.0).abs() < 1e-12));
        assert!(up.u2.values().iter().all(|&v| (v + 2.5).abs() < 1e-12));
    }
}
