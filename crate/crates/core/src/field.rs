//! Gridded value types shared by every stage of the pipeline.
//!
//! All grids are row-major with the origin at the top-left cell. Column index
//! `x` grows to the right and row index `y` grows downward; flow components
//! follow the same axes, so a positive `vx` points toward larger columns and a
//! positive `vy` toward larger rows.

use std::ops::Deref;

use serde::{Deserialize, Serialize};

use crate::error::{AceError, Result};

/// Smallest height or width the flow pyramid can work with.
pub const MIN_FIELD_SIZE: usize = 8;

/// Plain row-major grid of reals with no constraint beyond its shape.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    height: usize,
    width: usize,
    values: Vec<f64>,
}

impl Grid {
    pub fn new(height: usize, width: usize, values: Vec<f64>) -> Result<Self> {
        if height == 0 || width == 0 || values.len() != height * width {
            return Err(AceError::LengthMismatch {
                height,
                width,
                len: values.len(),
            });
        }
        Ok(Grid {
            height,
            width,
            values,
        })
    }

    pub fn filled(height: usize, width: usize, value: f64) -> Self {
        assert!(height > 0 && width > 0, "grid dimensions must be positive");
        Grid {
            height,
            width,
            values: vec![value; height * width],
        }
    }

    pub fn zeros(height: usize, width: usize) -> Self {
        Self::filled(height, width, 0.0)
    }

    /// Builds a grid by evaluating `f(row, col)` for every cell.
    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        assert!(height > 0 && width > 0, "grid dimensions must be positive");
        let mut values = Vec::with_capacity(height * width);
        for row in 0..height {
            for col in 0..width {
                values.push(f(row, col));
            }
        }
        Grid {
            height,
            width,
            values,
        }
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    /// `(height, width)`.
    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.values.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.width + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        self.values[row * self.width + col] = value;
    }

    /// Value at `(row, col)` with out-of-range indices clamped to the border.
    #[inline]
    pub fn get_clamped(&self, row: isize, col: isize) -> f64 {
        let r = row.clamp(0, self.height as isize - 1) as usize;
        let c = col.clamp(0, self.width as isize - 1) as usize;
        self.values[r * self.width + c]
    }

    /// Bilinear sample at continuous coordinates `(x, y)` = (column, row).
    ///
    /// Coordinates outside the grid are clamped to the border first. Each
    /// interpolation step is a convex combination clamped to its two inputs,
    /// so the result never leaves the range of the four neighbours.
    pub fn sample_bilinear(&self, x: f64, y: f64) -> f64 {
        let x = x.clamp(0.0, (self.width - 1) as f64);
        let y = y.clamp(0.0, (self.height - 1) as f64);
        let x0 = x.floor() as usize;
        let y0 = y.floor() as usize;
        let x1 = (x0 + 1).min(self.width - 1);
        let y1 = (y0 + 1).min(self.height - 1);
        let fx = x - x0 as f64;
        let fy = y - y0 as f64;

        let top = lerp(self.get(y0, x0), self.get(y0, x1), fx);
        let bottom = lerp(self.get(y1, x0), self.get(y1, x1), fx);
        lerp(top, bottom, fy)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Grid {
        Grid {
            height: self.height,
            width: self.width,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Cell-wise combination of two grids of the same shape.
    pub fn zip_map(&self, other: &Grid, f: impl Fn(f64, f64) -> f64) -> Result<Grid> {
        self.check_shape(other.shape())?;
        Ok(Grid {
            height: self.height,
            width: self.width,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn check_shape(&self, expected: (usize, usize)) -> Result<()> {
        if self.shape() != expected {
            return Err(AceError::ShapeMismatch {
                expected,
                found: self.shape(),
            });
        }
        Ok(())
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn first_non_finite(&self) -> Option<usize> {
        self.values.iter().position(|v| !v.is_finite())
    }
}

#[inline]
fn lerp(a: f64, b: f64, t: f64) -> f64 {
    if t == 0.0 {
        return a;
    }
    let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
    (a + t * (b - a)).clamp(lo, hi)
}

/// One gridded scalar variable at one time.
///
/// Values are always finite. Code that builds a pyramid additionally requires
/// both dimensions to be at least [`MIN_FIELD_SIZE`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalarField2D {
    grid: Grid,
    pub variable_name: Option<String>,
    pub valid_time: Option<String>,
}

impl ScalarField2D {
    pub fn new(height: usize, width: usize, values: Vec<f64>) -> Result<Self> {
        Self::from_grid(Grid::new(height, width, values)?)
    }

    pub fn from_grid(grid: Grid) -> Result<Self> {
        if let Some(index) = grid.first_non_finite() {
            return Err(AceError::NonFiniteInput { index });
        }
        Ok(ScalarField2D {
            grid,
            variable_name: None,
            valid_time: None,
        })
    }

    pub fn from_fn(
        height: usize,
        width: usize,
        f: impl FnMut(usize, usize) -> f64,
    ) -> Result<Self> {
        Self::from_grid(Grid::from_fn(height, width, f))
    }

    pub fn with_variable_name(mut self, name: impl Into<String>) -> Self {
        self.variable_name = Some(name.into());
        self
    }

    pub fn with_valid_time(mut self, time: impl Into<String>) -> Self {
        self.valid_time = Some(time.into());
        self
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn into_grid(self) -> Grid {
        self.grid
    }

    /// Replaces the values while keeping the metadata.
    pub fn with_grid(&self, grid: Grid) -> Result<Self> {
        let mut out = Self::from_grid(grid)?;
        out.variable_name = self.variable_name.clone();
        out.valid_time = self.valid_time.clone();
        Ok(out)
    }

    pub fn require_min_size(&self) -> Result<()> {
        if self.height() < MIN_FIELD_SIZE || self.width() < MIN_FIELD_SIZE {
            return Err(AceError::FieldTooSmall {
                height: self.height(),
                width: self.width(),
                min: MIN_FIELD_SIZE,
            });
        }
        Ok(())
    }
}

impl Deref for ScalarField2D {
    type Target = Grid;

    fn deref(&self) -> &Grid {
        &self.grid
    }
}

/// Per-pixel velocity in pixels per frame interval.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowField2D {
    vx: Grid,
    vy: Grid,
}

impl FlowField2D {
    pub fn new(vx: Grid, vy: Grid) -> Result<Self> {
        vy.check_shape(vx.shape())?;
        if let Some(index) = vx.first_non_finite().or_else(|| vy.first_non_finite()) {
            return Err(AceError::NonFiniteInput { index });
        }
        Ok(FlowField2D { vx, vy })
    }

    pub fn zeros(height: usize, width: usize) -> Self {
        Self::uniform(height, width, 0.0, 0.0)
    }

    pub fn uniform(height: usize, width: usize, vx: f64, vy: f64) -> Self {
        FlowField2D {
            vx: Grid::filled(height, width, vx),
            vy: Grid::filled(height, width, vy),
        }
    }

    pub(crate) fn from_parts_unchecked(vx: Grid, vy: Grid) -> Self {
        debug_assert_eq!(vx.shape(), vy.shape());
        FlowField2D { vx, vy }
    }

    pub fn vx(&self) -> &Grid {
        &self.vx
    }

    pub fn vy(&self) -> &Grid {
        &self.vy
    }

    pub fn into_parts(self) -> (Grid, Grid) {
        (self.vx, self.vy)
    }

    pub fn shape(&self) -> (usize, usize) {
        self.vx.shape()
    }

    pub fn height(&self) -> usize {
        self.vx.height()
    }

    pub fn width(&self) -> usize {
        self.vx.width()
    }

    /// Mean flow vector over the cells where `mask` is true.
    pub fn mean_over(&self, mask: &[bool]) -> (f64, f64) {
        let mut n = 0usize;
        let (mut sx, mut sy) = (0.0, 0.0);
        for ((&m, &x), &y) in mask.iter().zip(self.vx.values()).zip(self.vy.values()) {
            if m {
                n += 1;
                sx += x;
                sy += y;
            }
        }
        if n == 0 {
            return (0.0, 0.0);
        }
        (sx / n as f64, sy / n as f64)
    }

    /// Mean Euclidean distance to the constant vector `(dx, dy)` over `mask`.
    pub fn mean_endpoint_error(&self, dx: f64, dy: f64, mask: &[bool]) -> f64 {
        let mut n = 0usize;
        let mut sum = 0.0;
        for ((&m, &x), &y) in mask.iter().zip(self.vx.values()).zip(self.vy.values()) {
            if m {
                n += 1;
                sum += (x - dx).hypot(y - dy);
            }
        }
        if n == 0 {
            return 0.0;
        }
        sum / n as f64
    }

    pub fn max_magnitude(&self) -> f64 {
        self.vx
            .values()
            .iter()
            .zip(self.vy.values())
            .map(|(x, y)| x.hypot(*y))
            .fold(0.0, f64::max)
    }
}

/// Observation, truth and prediction for one evaluated slice.
#[derive(Clone, Debug, PartialEq)]
pub struct EvalCase {
    pub case_id: String,
    pub observation: ScalarField2D,
    pub truth: ScalarField2D,
    pub prediction: ScalarField2D,
}

impl EvalCase {
    pub fn new(
        case_id: impl Into<String>,
        observation: ScalarField2D,
        truth: ScalarField2D,
        prediction: ScalarField2D,
    ) -> Result<Self> {
        let case_id = case_id.into();
        let check = || -> Result<()> {
            truth.check_shape(observation.shape())?;
            prediction.check_shape(observation.shape())?;
            observation.require_min_size()
        };
        check().map_err(|e| e.in_case(case_id.clone()))?;
        Ok(EvalCase {
            case_id,
            observation,
            truth,
            prediction,
        })
    }

    pub fn shape(&self) -> (usize, usize) {
        self.observation.shape()
    }
}

/// Affine map `normalized = (raw - offset) * scale`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormalizationTransform {
    pub offset: f64,
    pub scale: f64,
}

impl NormalizationTransform {
    pub const IDENTITY: NormalizationTransform = NormalizationTransform {
        offset: 0.0,
        scale: 1.0,
    };

    #[inline]
    pub fn apply(&self, raw: f64) -> f64 {
        (raw - self.offset) * self.scale
    }

    #[inline]
    pub fn invert(&self, normalized: f64) -> f64 {
        normalized / self.scale + self.offset
    }

    pub fn apply_field(&self, field: &ScalarField2D) -> Result<ScalarField2D> {
        field.with_grid(field.map(|v| self.apply(v)))
    }

    pub fn invert_field(&self, field: &ScalarField2D) -> Result<ScalarField2D> {
        field.with_grid(field.map(|v| self.invert(v)))
    }
}

/// Rescales a case so observation and truth jointly span `[0, 1]`.
///
/// The prediction goes through the same transform and is not clamped; it is
/// never used to choose the transform.
pub fn normalize_case(case: &EvalCase) -> Result<(EvalCase, NormalizationTransform)> {
    let lo = case.observation.min().min(case.truth.min());
    let hi = case.observation.max().max(case.truth.max());
    if hi <= lo {
        return Err(AceError::DegenerateRange { value: lo });
    }
    let transform = NormalizationTransform {
        offset: lo,
        scale: 1.0 / (hi - lo),
    };
    let normalized = EvalCase {
        case_id: case.case_id.clone(),
        observation: transform.apply_field(&case.observation)?,
        truth: transform.apply_field(&case.truth)?,
        prediction: transform.apply_field(&case.prediction)?,
    };
    Ok((normalized, transform))
}

/// Undoes [`normalize_case`] on all three fields.
pub fn denormalize_case(case: &EvalCase, transform: &NormalizationTransform) -> Result<EvalCase> {
    Ok(EvalCase {
        case_id: case.case_id.clone(),
        observation: transform.invert_field(&case.observation)?,
        truth: transform.invert_field(&case.truth)?,
        prediction: transform.invert_field(&case.prediction)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn field(h: usize, w: usize, f: impl FnMut(usize, usize) -> f64) -> ScalarField2D {
        ScalarField2D::from_fn(h, w, f).unwrap()
    }

    #[test]
    fn rejects_nan() {
        let mut values = vec![0.0; 64];
        values[17] = f64::NAN;
        assert!(matches!(
            ScalarField2D::new(8, 8, values),
            Err(AceError::NonFiniteInput { index: 17 })
        ));
    }

    #[test]
    fn rejects_wrong_length() {
        assert!(matches!(
            Grid::new(3, 3, vec![0.0; 8]),
            Err(AceError::LengthMismatch { .. })
        ));
    }

    #[test]
    fn eval_case_requires_matching_shapes_and_minimum_size() {
        let a = field(8, 8, |_, _| 0.0);
        let b = field(8, 9, |_, _| 0.0);
        let err = EvalCase::new("x", a.clone(), b, a.clone()).unwrap_err();
        assert!(matches!(err.root(), AceError::ShapeMismatch { .. }));

        let small = field(4, 8, |_, _| 0.0);
        let err = EvalCase::new("y", small.clone(), small.clone(), small).unwrap_err();
        assert!(matches!(err.root(), AceError::FieldTooSmall { .. }));
    }

    #[test]
    fn normalize_binary_case_is_identity() {
        let f = field(8, 8, |r, c| ((r + c) % 2) as f64);
        let case = EvalCase::new("id", f.clone(), f.clone(), f.clone()).unwrap();
        let (norm, t) = normalize_case(&case).unwrap();
        assert_eq!(t, NormalizationTransform::IDENTITY);
        assert_eq!(norm, case);
    }

    #[test]
    fn normalize_kelvin_like_range() {
        let obs = field(8, 8, |r, c| 250.0 + (r * 8 + c) as f64 * 60.0 / 63.0);
        let truth = field(8, 8, |r, c| 252.0 + (r * 8 + c) as f64 * 56.0 / 63.0);
        let pred = field(8, 8, |r, _| if r == 0 { 320.0 } else { 280.0 });
        let case = EvalCase::new("k", obs, truth, pred).unwrap();
        let (norm, t) = normalize_case(&case).unwrap();
        assert_eq!(t.offset, 250.0);
        assert_eq!(t.scale, 1.0 / 60.0);
        assert!((t.apply(280.0) - 0.5).abs() < 1e-15);
        // prediction is not clamped
        assert!((norm.prediction.get(0, 0) - 7.0 / 6.0).abs() < 1e-12);
        assert_eq!(norm.observation.min(), 0.0);
        assert!((norm.observation.max() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn constant_case_is_degenerate() {
        let f = field(8, 8, |_, _| 3.0);
        let pred = field(8, 8, |r, _| r as f64);
        let case = EvalCase::new("c", f.clone(), f, pred).unwrap();
        assert!(matches!(
            normalize_case(&case),
            Err(AceError::DegenerateRange { .. })
        ));
    }

    #[test]
    fn bilinear_sample_clamps_outside() {
        let g = Grid::new(2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(g.sample_bilinear(-5.0, -5.0), 1.0);
        assert_eq!(g.sample_bilinear(9.0, 9.0), 4.0);
        assert_eq!(g.sample_bilinear(0.5, 0.5), 2.5);
    }

    fn arb_case() -> impl Strategy<Value = EvalCase> {
        (8usize..14, 8usize..14, -1e3f64..1e3, 1e-3f64..1e3).prop_flat_map(|(h, w, base, span)| {
            let n = h * w;
            (
                proptest::collection::vec(0.0f64..1.0, n),
                proptest::collection::vec(0.0f64..1.0, n),
                proptest::collection::vec(-0.5f64..1.5, n),
            )
                .prop_map(move |(o, t, p)| {
                    let lift = |v: Vec<f64>| {
                        ScalarField2D::new(h, w, v.into_iter().map(|x| base + span * x).collect())
                            .unwrap()
                    };
                    let mut o = o;
                    o[0] = 0.0;
                    o[1] = 1.0;
                    EvalCase::new("p", lift(o), lift(t), lift(p)).unwrap()
                })
        })
    }

    proptest! {
        #[test]
        fn normalize_is_idempotent(case in arb_case()) {
            let (once, _) = normalize_case(&case).unwrap();
            let (_, second) = normalize_case(&once).unwrap();
            prop_assert!(second.offset.abs() < 1e-12);
            prop_assert!((second.scale - 1.0).abs() < 1e-12);
        }

        #[test]
        fn normalize_then_invert_round_trips(case in arb_case()) {
            let (norm, t) = normalize_case(&case).unwrap();
            let back = denormalize_case(&norm, &t).unwrap();
            for (orig, rt) in [
                (&case.observation, &back.observation),
                (&case.truth, &back.truth),
                (&case.prediction, &back.prediction),
            ] {
                for (a, b) in orig.values().iter().zip(rt.values()) {
                    let scale = a.abs().max(1.0);
                    prop_assert!((a - b).abs() <= 1e-12 * scale, "{a} vs {b}");
                }
            }
        }
    }
}
