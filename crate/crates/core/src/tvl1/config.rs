use serde::{Deserialize, Serialize};

use crate::error::{AceError, Result};

/// Hyperparameters of the TV-L1 flow solver.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TvL1Config {
    /// Step size of the dual ascent on the total-variation term.
    pub tau: f64,
    /// Weight of the L1 data-fidelity term against the regularizer.
    pub lambda: f64,
    /// Coupling between the flow and its thresholded auxiliary copy.
    pub theta: f64,
    /// Requested number of pyramid levels, clamped by the field size.
    pub nscales: usize,
    /// Warps (re-linearizations of the data term) per pyramid level.
    pub warps: usize,
    /// Outer loop stops once no flow component moves by more than this.
    pub epsilon: f64,
    pub inner_iterations: usize,
    pub outer_iterations: usize,
    /// Downscale factor between neighbouring pyramid levels.
    pub scale_step: f64,
    /// Odd width of the median filter applied to the flow after each level.
    pub median_filter_size: usize,
    /// Factor applied to intensities before solving. `lambda` is calibrated
    /// for 8-bit gray levels, so unit-range fields are stretched to 0..255.
    pub intensity_scale: f64,
}

impl Default for TvL1Config {
    fn default() -> Self {
        TvL1Config {
            tau: 0.25,
            lambda: 0.15,
            theta: 0.3,
            nscales: 5,
            warps: 5,
            epsilon: 0.01,
            inner_iterations: 30,
            outer_iterations: 10,
            scale_step: 0.8,
            median_filter_size: 5,
            intensity_scale: 255.0,
        }
    }
}

impl TvL1Config {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(AceError::InvalidConfig(msg));
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return bad(format!("tau must be positive, got {}", self.tau));
        }
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return bad(format!("lambda must be positive, got {}", self.lambda));
        }
        if !(self.theta > 0.0 && self.theta.is_finite()) {
            return bad(format!("theta must be positive, got {}", self.theta));
        }
        if !(self.scale_step > 0.0 && self.scale_step < 1.0) {
            return bad(format!(
                "scale_step must lie in (0, 1), got {}",
                self.scale_step
            ));
        }
        if self.nscales == 0 {
            return bad("nscales must be at least 1".into());
        }
        if self.warps == 0 {
            return bad("warps must be at least 1".into());
        }
        if self.outer_iterations == 0 || self.inner_iterations == 0 {
            return bad("inner_iterations and outer_iterations must be at least 1".into());
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return bad(format!("epsilon must be positive, got {}", self.epsilon));
        }
        if !(self.intensity_scale > 0.0 && self.intensity_scale.is_finite()) {
            return bad(format!(
                "intensity_scale must be positive, got {}",
                self.intensity_scale
            ));
        }
        if self.median_filter_size.is_multiple_of(2) {
            return Err(AceError::EvenKernel(self.median_filter_size));
        }
        Ok(())
    }

    /// Sets one parameter from its textual key and value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn real(key: &str, value: &str) -> Result<f64> {
            value.parse().map_err(|_| {
                AceError::InvalidConfig(format!("`{key}` expects a number, got `{value}`"))
            })
        }
        fn count(key: &str, value: &str) -> Result<usize> {
            value.parse().map_err(|_| {
                AceError::InvalidConfig(format!(
                    "`{key}` expects a non-negative integer, got `{value}`"
                ))
            })
        }
        match key {
            "tau" => self.tau = real(key, value)?,
            "lambda" => self.lambda = real(key, value)?,
            "theta" => self.theta = real(key, value)?,
            "nscales" => self.nscales = count(key, value)?,
            "warps" => self.warps = count(key, value)?,
            "epsilon" => self.epsilon = real(key, value)?,
            "inner_iterations" => self.inner_iterations = count(key, value)?,
            "outer_iterations" => self.outer_iterations = count(key, value)?,
            "scale_step" => self.scale_step = real(key, value)?,
            "median_filter_size" => self.median_filter_size = count(key, value)?,
            "intensity_scale" => self.intensity_scale = real(key, value)?,
            _ => {
                return Err(AceError::InvalidConfig(format!(
                    "unknown solver key `{key}`"
                )))
            }
        }
        Ok(())
    }

    pub const KEYS: [&'static str; 11] = [
        "tau",
        "lambda",
        "theta",
        "nscales",
        "warps",
        "epsilon",
        "inner_iterations",
        "outer_iterations",
        "scale_step",
        "median_filter_size",
        "intensity_scale",
    ];
}
