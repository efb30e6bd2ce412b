use serde::{Deserialize, Serialize};

use crate::error::{AceError, Result};
use crate::field::Grid;

/// PSNR reported for (near-)identical fields.
pub const PSNR_CAP_DB: f64 = 100.0;
pub const SSIM_WINDOW: usize = 7;
const SSIM_K1: f64 = 0.01;
const SSIM_K2: f64 = 0.03;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Baselines {
    pub mae: f64,
    pub mse: f64,
    pub rmse: f64,
    pub psnr: f64,
    pub ssim: f64,
}

pub fn psnr_from_mse(mse: f64, data_range: f64) -> f64 {
    let peak = data_range * data_range;
    if mse < peak * 1e-10 {
        return PSNR_CAP_DB;
    }
    10.0 * (peak / mse).log10()
}

/// Mean SSIM over every fully-contained 7x7 window (the whole grid when it is
/// smaller than the window).
pub fn ssim(truth: &Grid, prediction: &Grid, data_range: f64) -> Result<f64> {
    prediction.check_shape(truth.shape())?;
    let (h, w) = truth.shape();
    let wh = SSIM_WINDOW.min(h);
    let ww = SSIM_WINDOW.min(w);
    let c1 = (SSIM_K1 * data_range).powi(2);
    let c2 = (SSIM_K2 * data_range).powi(2);
    let n = (wh * ww) as f64;

    let (x, y) = (truth.values(), prediction.values());
    let mut total = 0.0;
    let mut windows = 0usize;
    for r0 in 0..=h - wh {
        for c0 in 0..=w - ww {
            let (mut sx, mut sy, mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
            for r in r0..r0 + wh {
                for c in c0..c0 + ww {
                    let (a, b) = (x[r * w + c], y[r * w + c]);
                    sx += a;
                    sy += b;
                    sxx += a * a;
                    syy += b * b;
                    sxy += a * b;
                }
            }
            let (mx, my) = (sx / n, sy / n);
            let vx = sxx / n - mx * mx;
            let vy = syy / n - my * my;
            let cov = sxy / n - mx * my;
            let num = (2.0 * mx * my + c1) * (2.0 * cov + c2);
            let den = (mx * mx + my * my + c1) * (vx + vy + c2);
            total += num / den;
            windows += 1;
        }
    }
    Ok(total / windows as f64)
}

pub fn baseline_metrics(truth: &Grid, prediction: &Grid, data_range: f64) -> Result<Baselines> {
    prediction.check_shape(truth.shape())?;
    if !(data_range > 0.0 && data_range.is_finite()) {
        return Err(AceError::InvalidParameter {
            name: "data_range",
            reason: format!("must be positive, got {data_range}"),
        });
    }
    let n = truth.len() as f64;
    let (mut abs, mut sq) = (0.0, 0.0);
    for (a, b) in truth.values().iter().zip(prediction.values()) {
        let d = b - a;
        abs += d.abs();
        sq += d * d;
    }
    let mse = sq / n;
    Ok(Baselines {
        mae: abs / n,
        mse,
        rmse: mse.sqrt(),
        psnr: psnr_from_mse(mse, data_range),
        ssim: ssim(truth, prediction, data_range)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn identical_fields() {
        let g = Grid::from_fn(12, 10, |r, c| ((r * 3 + c) as f64 * 0.37).sin());
        let b = baseline_metrics(&g, &g, 1.0).unwrap();
        assert_eq!((b.mae, b.mse, b.rmse), (0.0, 0.0, 0.0));
        assert_eq!(b.psnr, PSNR_CAP_DB);
        assert_eq!(b.ssim, 1.0);
    }

    #[test]
    fn constant_offset_half() {
        let t = Grid::zeros(8, 8);
        let p = Grid::filled(8, 8, 0.5);
        let b = baseline_metrics(&t, &p, 1.0).unwrap();
        assert_eq!(b.mse, 0.25);
        // 10 log10(4) = 20 log10(2)
        assert!((b.psnr - 6.020599913279624).abs() < 1e-12);
    }

    #[test]
    fn constant_offset_tenth() {
        let t = Grid::zeros(8, 8);
        let p = Grid::filled(8, 8, 0.1);
        let b = baseline_metrics(&t, &p, 1.0).unwrap();
        assert!((b.mae - 0.1).abs() < 1e-15);
        assert!((b.rmse - 0.1).abs() < 1e-15);
    }

    #[test]
    fn shape_mismatch() {
        assert!(matches!(
            baseline_metrics(&Grid::zeros(8, 8), &Grid::zeros(8, 9), 1.0),
            Err(AceError::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn psnr_cap_is_continuous_at_threshold() {
        assert_eq!(psnr_from_mse(0.0, 1.0), PSNR_CAP_DB);
        assert!((psnr_from_mse(1e-10, 1.0) - 100.0).abs() < 1e-9);
    }

    #[test]
    fn ssim_drops_for_unrelated_fields() {
        let a = Grid::from_fn(16, 16, |r, c| ((r + c) % 2) as f64);
        let b = Grid::from_fn(16, 16, |r, c| ((r + c + 1) % 2) as f64);
        assert!(ssim(&a, &b, 1.0).unwrap() < 0.0);
    }

    proptest! {
        #[test]
        fn rmse_squared_is_mse(
            t in proptest::collection::vec(-1.0f64..2.0, 64),
            p in proptest::collection::vec(-1.0f64..2.0, 64),
        ) {
            let b = baseline_metrics(&Grid::new(8, 8, t).unwrap(), &Grid::new(8, 8, p).unwrap(), 1.0).unwrap();
            prop_assert!((b.rmse * b.rmse - b.mse).abs() <= 1e-12 * b.mse.max(f64::MIN_POSITIVE));
            prop_assert!(b.ssim <= 1.0 + 1e-12 && b.ssim >= -1.0 - 1e-12);
        }

        #[test]
        fn psnr_decreases_with_mse(a in 1e-9f64..10.0, b in 1e-9f64..10.0) {
            prop_assume!(b > a * (1.0 + 1e-9));
            prop_assert!(psnr_from_mse(a, 1.0) > psnr_from_mse(b, 1.0));
        }
    }
}
