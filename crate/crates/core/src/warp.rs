//! Backward warping of fields along a flow.

use crate::error::Result;
use crate::field::{EvalCase, FlowField2D, Grid, ScalarField2D};

/// Samples `field` at `(x + vx, y + vy)` for every cell.
///
/// Sample positions outside the grid are clamped to the border, so the output
/// stays within `[min(field), max(field)]`.
pub fn remap(field: &Grid, flow: &FlowField2D) -> Result<Grid> {
    flow.vx().check_shape(field.shape())?;
    let (vx, vy) = (flow.vx(), flow.vy());
    Ok(Grid::from_fn(field.height(), field.width(), |r, c| {
        let i = r * field.width() + c;
        field.sample_bilinear(c as f64 + vx.values()[i], r as f64 + vy.values()[i])
    }))
}

pub fn remap_field(field: &ScalarField2D, flow: &FlowField2D) -> Result<ScalarField2D> {
    field.with_grid(remap(field, flow)?)
}

/// Removes advection from truth and prediction: returns
/// `(remap(truth, flow_truth), remap(prediction, flow_pred))`.
pub fn de_advect(
    case: &EvalCase,
    flow_truth: &FlowField2D,
    flow_pred: &FlowField2D,
) -> Result<(ScalarField2D, ScalarField2D)> {
    Ok((
        remap_field(&case.truth, flow_truth)?,
        remap_field(&case.prediction, flow_pred)?,
    ))
}
