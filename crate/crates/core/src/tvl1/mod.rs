//! Coarse-to-fine TV-L1 flow extraction.

mod config;
mod median;
mod pyramid;
mod solver;

pub use config::TvL1Config;
pub use median::median_filter;
pub use pyramid::{build_pyramid, level_shapes, resample_bilinear, smoothing_sigma, Pyramid};
pub use solver::extract_flow;
