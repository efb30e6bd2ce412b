//! Advection and convection error (ACE) for gridded spatiotemporal forecasts.
//!
//! The advection between an observation and a later field is extracted as a
//! dense TV-L1 optical flow ([`tvl1`]). Comparing the flow towards the truth
//! with the flow towards a prediction gives the advection error (AE). Warping
//! both fields back along their flows ([`warp`]) leaves only the intensity
//! change, whose disagreement is the convection error (CE). The two combine
//! as `ACE = AE + CE / AE` ([`metrics`]).
//!
//! [`synth`] generates sequences with analytically known motion and
//! intensity change, and [`io`] handles array files and reports.

pub mod error;
pub mod field;
pub mod filter;
pub mod io;
pub mod metrics;
pub mod synth;
pub mod tvl1;
pub mod warp;

pub use error::{AceError, Result};
pub use field::{
    denormalize_case, normalize_case, EvalCase, FlowField2D, Grid, NormalizationTransform,
    ScalarField2D, MIN_FIELD_SIZE,
};
pub use metrics::{
    advection_error, baseline_metrics, combine_ace, convection_error, evaluate_case, AceConfig,
    Baselines, MetricReport,
};
pub use synth::{generate, perturb, Perturbation, SynthSpec};
pub use tvl1::{build_pyramid, extract_flow, median_filter, Pyramid, TvL1Config};
pub use warp::{de_advect, remap};
