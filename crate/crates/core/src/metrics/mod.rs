//! Advection error, convection error, their ACE combination, and the usual
//! pixel-wise baselines.

mod baseline;

use serde::{Deserialize, Serialize};

use crate::error::{AceError, Result};
use crate::field::{
    normalize_case, EvalCase, FlowField2D, Grid, NormalizationTransform, ScalarField2D,
};
use crate::tvl1::{extract_flow, TvL1Config};
use crate::warp::remap;

pub use baseline::{baseline_metrics, psnr_from_mse, ssim, Baselines, PSNR_CAP_DB, SSIM_WINDOW};

/// Name of the per-pixel flow difference reduction used for AE.
pub const AE_REDUCTION: &str = "mean(|dvx| + |dvy|)";
/// Name of the per-pixel reduction used for CE.
pub const CE_REDUCTION: &str = "mean(||obs - remap(pred)| - |obs - remap(truth)||)";
pub const SSIM_WINDOW_NAME: &str = "uniform 7x7, valid windows, k1 = 0.01, k2 = 0.03";

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AceConfig {
    pub tvl1: TvL1Config,
    /// Lower bound on the AE denominator of the ACE combination.
    pub ace_epsilon: f64,
    pub emit_maps: bool,
}

impl Default for AceConfig {
    fn default() -> Self {
        AceConfig {
            tvl1: TvL1Config::default(),
            ace_epsilon: 1e-6,
            emit_maps: false,
        }
    }
}

impl AceConfig {
    pub fn validate(&self) -> Result<()> {
        self.tvl1.validate()?;
        if !(self.ace_epsilon > 0.0 && self.ace_epsilon.is_finite()) {
            return Err(AceError::InvalidConfig(format!(
                "ace_epsilon must be positive, got {}",
                self.ace_epsilon
            )));
        }
        Ok(())
    }

    /// Sets a solver or metric parameter by key.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "ace_epsilon" => {
                self.ace_epsilon = value.parse().map_err(|_| {
                    AceError::InvalidConfig(format!(
                        "`ace_epsilon` expects a number, got `{value}`"
                    ))
                })?
            }
            "emit_maps" => {
                self.emit_maps = value.parse().map_err(|_| {
                    AceError::InvalidConfig(format!(
                        "`emit_maps` expects true or false, got `{value}`"
                    ))
                })?
            }
            _ => self.tvl1.set(key, value)?,
        }
        Ok(())
    }
}

/// Per-pixel AE and CE for one case.
#[derive(Clone, Debug, PartialEq)]
pub struct ErrorMaps {
    pub ae: ScalarField2D,
    pub ce: ScalarField2D,
}

/// Where a case's error maps were written.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MapPaths {
    pub ae: String,
    pub ce: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub case_id: String,
    pub ae: f64,
    pub ce: f64,
    pub ace: f64,
    pub mae: f64,
    pub mse: f64,
    pub rmse: f64,
    pub psnr: f64,
    pub ssim: f64,
    pub normalization: NormalizationTransform,
    #[serde(skip)]
    pub maps: Option<ErrorMaps>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub map_paths: Option<MapPaths>,
}

/// Output of [`advection_error`].
#[derive(Clone, Debug)]
pub struct Advection {
    pub ae: f64,
    pub flow_truth: FlowField2D,
    pub flow_pred: FlowField2D,
    pub ae_map: Grid,
}

/// Mean over pixels of `|dvx| + |dvy|` between two flows, plus the map.
pub fn flow_difference(flow_truth: &FlowField2D, flow_pred: &FlowField2D) -> Result<(f64, Grid)> {
    flow_pred.vx().check_shape(flow_truth.shape())?;
    let dx = flow_truth
        .vx()
        .zip_map(flow_pred.vx(), |a, b| (a - b).abs())?;
    let map = dx.zip_map(
        &flow_pred
            .vy()
            .zip_map(flow_truth.vy(), |a, b| (a - b).abs())?,
        |a, b| a + b,
    )?;
    Ok((map.mean(), map))
}

pub fn advection_error(
    observation: &ScalarField2D,
    truth: &ScalarField2D,
    prediction: &ScalarField2D,
    config: &AceConfig,
) -> Result<Advection> {
    truth.check_shape(observation.shape())?;
    prediction.check_shape(observation.shape())?;
    let flow_truth = extract_flow(observation, truth, &config.tvl1)?;
    let flow_pred = extract_flow(observation, prediction, &config.tvl1)?;
    let (ae, ae_map) = flow_difference(&flow_truth, &flow_pred)?;
    Ok(Advection {
        ae,
        flow_truth,
        flow_pred,
        ae_map,
    })
}

/// Compares how far the de-advected prediction and the de-advected truth each
/// sit from the observation, cell by cell.
pub fn convection_error(
    observation: &Grid,
    truth: &Grid,
    prediction: &Grid,
    flow_truth: &FlowField2D,
    flow_pred: &FlowField2D,
) -> Result<(f64, Grid)> {
    truth.check_shape(observation.shape())?;
    prediction.check_shape(observation.shape())?;
    let restored_truth = remap(truth, flow_truth)?;
    let restored_pred = remap(prediction, flow_pred)?;
    let residual_truth = observation.zip_map(&restored_truth, |o, t| (o - t).abs())?;
    let residual_pred = observation.zip_map(&restored_pred, |o, p| (o - p).abs())?;
    let map = residual_pred.zip_map(&residual_truth, |p, t| (p - t).abs())?;
    Ok((map.mean(), map))
}

/// `ae + ce / max(ae, epsilon)`.
pub fn combine_ace(ae: f64, ce: f64, ace_epsilon: f64) -> Result<f64> {
    if ae.is_nan() || ae < 0.0 {
        return Err(AceError::NegativeInput {
            what: "ae",
            value: ae,
        });
    }
    if ce.is_nan() || ce < 0.0 {
        return Err(AceError::NegativeInput {
            what: "ce",
            value: ce,
        });
    }
    Ok(ae + ce / ae.max(ace_epsilon))
}

/// Normalizes the case, then scores it. Errors carry the case id.
pub fn evaluate_case(case: &EvalCase, config: &AceConfig) -> Result<MetricReport> {
    evaluate_inner(case, config).map_err(|e| e.in_case(case.case_id.clone()))
}

fn evaluate_inner(case: &EvalCase, config: &AceConfig) -> Result<MetricReport> {
    config.validate()?;
    let (norm, transform) = normalize_case(case)?;
    let adv = advection_error(&norm.observation, &norm.truth, &norm.prediction, config)?;
    let (ce, ce_map) = convection_error(
        &norm.observation,
        &norm.truth,
        &norm.prediction,
        &adv.flow_truth,
        &adv.flow_pred,
    )?;
    let ace = combine_ace(adv.ae, ce, config.ace_epsilon)?;
    let base = baseline_metrics(&norm.truth, &norm.prediction, 1.0)?;

    let maps = if config.emit_maps {
        Some(ErrorMaps {
            ae: ScalarField2D::from_grid(adv.ae_map)?.with_variable_name("ae"),
            ce: ScalarField2D::from_grid(ce_map)?.with_variable_name("ce"),
        })
    } else {
        None
    };

    Ok(MetricReport {
        case_id: case.case_id.clone(),
        ae: adv.ae,
        ce,
        ace,
        mae: base.mae,
        mse: base.mse,
        rmse: base.rmse,
        psnr: base.psnr,
        ssim: base.ssim,
        normalization: transform,
        maps,
        map_paths: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn table_anchors() {
        let eps = AceConfig::default().ace_epsilon;
        // ConvLSTM, PredRNN++ and MIM/SimVP rows
        assert!((combine_ace(1.97, 0.23, eps).unwrap() - 2.086751).abs() < 1e-6);
        assert!((combine_ace(0.26, 0.16, eps).unwrap() - 0.875385).abs() < 1e-6);
        assert!((combine_ace(0.33, 0.13, eps).unwrap() - 0.723939).abs() < 1e-6);
    }

    #[test]
    fn perfect_score_is_zero() {
        assert_eq!(combine_ace(0.0, 0.0, 1e-6).unwrap(), 0.0);
    }

    #[test]
    fn negative_inputs_rejected() {
        assert!(matches!(
            combine_ace(-0.1, 0.2, 1e-6),
            Err(AceError::NegativeInput { what: "ae", .. })
        ));
        assert!(matches!(
            combine_ace(0.1, -0.2, 1e-6),
            Err(AceError::NegativeInput { what: "ce", .. })
        ));
    }

    #[test]
    fn uniform_flow_difference() {
        let (ae, map) = flow_difference(
            &FlowField2D::uniform(8, 8, 1.0, 0.0),
            &FlowField2D::zeros(8, 8),
        )
        .unwrap();
        assert_eq!(ae, 1.0);
        assert!(map.values().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn convection_with_zero_flows() {
        let obs = Grid::from_fn(8, 8, |r, c| (r * 8 + c) as f64 / 64.0);
        let truth = obs.map(|v| v + 0.3);
        let pred = obs.map(|v| v + 0.2);
        let zero = FlowField2D::zeros(8, 8);
        let (ce, map) = convection_error(&obs, &truth, &pred, &zero, &zero).unwrap();
        assert!((ce - 0.1).abs() < 1e-12);
        assert!(map.values().iter().all(|v| (v - 0.1).abs() < 1e-12));
    }

    #[test]
    fn convection_identical_is_exactly_zero() {
        let obs = Grid::from_fn(9, 9, |r, c| ((r * c) as f64).cos());
        let truth = obs.map(|v| v * 0.5 + 0.1);
        let flow = FlowField2D::uniform(9, 9, 0.4, -1.3);
        let (ce, _) = convection_error(&obs, &truth, &truth, &flow, &flow).unwrap();
        assert_eq!(ce, 0.0);
    }

    #[test]
    fn config_keys() {
        let mut c = AceConfig::default();
        c.set("ace_epsilon", "1e-3").unwrap();
        c.set("emit_maps", "true").unwrap();
        c.set("tau", "0.2").unwrap();
        assert_eq!(c.ace_epsilon, 1e-3);
        assert!(c.emit_maps);
        assert_eq!(c.tvl1.tau, 0.2);
        assert!(c.set("emit_maps", "yes").is_err());
    }

    proptest! {
        #[test]
        fn ace_monotone_in_ce(ae in 1e-3f64..5.0, c1 in 0.0f64..5.0, c2 in 0.0f64..5.0) {
            let (lo, hi) = if c1 <= c2 { (c1, c2) } else { (c2, c1) };
            prop_assert!(combine_ace(ae, lo, 1e-6).unwrap() <= combine_ace(ae, hi, 1e-6).unwrap());
        }

        #[test]
        fn ae_zero_iff_flows_equal(
            a in proptest::collection::vec(-3.0f64..3.0, 128),
            b in proptest::collection::vec(-3.0f64..3.0, 128),
        ) {
            let fa = FlowField2D::new(Grid::new(8, 8, a[..64].to_vec()).unwrap(), Grid::new(8, 8, a[64..].to_vec()).unwrap()).unwrap();
            let fb = FlowField2D::new(Grid::new(8, 8, b[..64].to_vec()).unwrap(), Grid::new(8, 8, b[64..].to_vec()).unwrap()).unwrap();
            let (self_ae, _) = flow_difference(&fa, &fa).unwrap();
            prop_assert_eq!(self_ae, 0.0);
            let (ab, _) = flow_difference(&fa, &fb).unwrap();
            let (ba, _) = flow_difference(&fb, &fa).unwrap();
            prop_assert_eq!(ab, ba);
            prop_assert_eq!(ab == 0.0, fa == fb);
        }
    }
}
