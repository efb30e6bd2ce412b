//! Synthetic sequences with known advection and convection.
//!
//! Frame `t` evaluates the pattern analytically at coordinates translated by
//! `t * (dx, dy)` and adds `t * convection_rate` wherever the translated
//! pattern exceeds [`SUPPORT_FRACTION`] of its peak. No frame is produced by
//! resampling another, so the true motion carries no interpolation error.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{AceError, Result};
use crate::field::FlowField2D;
use crate::field::{Grid, ScalarField2D, MIN_FIELD_SIZE};
use crate::filter::gaussian_blur;
use crate::io::kv;
use crate::warp::remap;

/// Fraction of the pattern peak above which convection is applied.
pub const SUPPORT_FRACTION: f64 = 0.05;

const MIN_SIGMA: f64 = 2.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Blob {
    pub cx: f64,
    pub cy: f64,
    pub sigma: f64,
    pub amplitude: f64,
}

impl Blob {
    fn eval(&self, x: f64, y: f64) -> f64 {
        let (dx, dy) = (x - self.cx, y - self.cy);
        self.amplitude * (-(dx * dx + dy * dy) / (2.0 * self.sigma * self.sigma)).exp()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Pattern {
    GaussianBlob(Blob),
    BlobMixture {
        blobs: Vec<Blob>,
    },
    /// `count` blobs placed from the spec's seed.
    RandomBlobs {
        count: usize,
    },
    /// Sinusoidal stripes; `orientation_deg` is the direction of variation.
    Band {
        orientation_deg: f64,
        wavelength: f64,
        amplitude: f64,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub height: usize,
    pub width: usize,
    pub pattern: Pattern,
    /// Pixels per step, `(dx, dy)`.
    pub advection: (f64, f64),
    /// Additive intensity change per step inside the support.
    pub convection_rate: f64,
    pub steps: usize,
    pub seed: u64,
}

fn invalid(field: &str, reason: impl Into<String>) -> AceError {
    AceError::InvalidSpec {
        line: None,
        field: field.to_string(),
        reason: reason.into(),
    }
}

/// Pattern with any seeded placement already resolved to concrete blobs.
enum Resolved {
    Blobs(Vec<Blob>),
    Band { kx: f64, ky: f64, amplitude: f64 },
}

impl Resolved {
    fn eval(&self, x: f64, y: f64) -> f64 {
        match self {
            Resolved::Blobs(blobs) => blobs.iter().map(|b| b.eval(x, y)).sum(),
            Resolved::Band { kx, ky, amplitude } => {
                amplitude * (0.5 + 0.5 * (kx * x + ky * y).sin())
            }
        }
    }

    fn peak(&self) -> f64 {
        match self {
            Resolved::Blobs(blobs) => blobs.iter().map(|b| b.amplitude).fold(0.0, f64::max),
            Resolved::Band { amplitude, .. } => *amplitude,
        }
    }
}

impl SynthSpec {
    /// A single blob of unit amplitude.
    pub fn single_blob(size: usize, center: (f64, f64), sigma: f64, advection: (f64, f64)) -> Self {
        SynthSpec {
            height: size,
            width: size,
            pattern: Pattern::GaussianBlob(Blob {
                cx: center.0,
                cy: center.1,
                sigma,
                amplitude: 1.0,
            }),
            advection,
            convection_rate: 0.0,
            steps: 2,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.height < MIN_FIELD_SIZE || self.width < MIN_FIELD_SIZE {
            return Err(invalid(
                "height",
                format!(
                    "grid {}x{} is below {MIN_FIELD_SIZE}x{MIN_FIELD_SIZE}",
                    self.height, self.width
                ),
            ));
        }
        if self.steps == 0 {
            return Err(invalid("steps", "need at least one frame"));
        }
        let bound = self.height.min(self.width) as f64 / 8.0;
        let (dx, dy) = self.advection;
        if !(dx.is_finite() && dy.is_finite()) || dx.abs() > bound || dy.abs() > bound {
            return Err(invalid(
                "advection",
                format!("({dx}, {dy}) exceeds the motion bound of {bound} px per step"),
            ));
        }
        if !self.convection_rate.is_finite() {
            return Err(invalid("convection_rate", "must be finite"));
        }
        let check_blob = |b: &Blob| -> Result<()> {
            if !(b.sigma >= MIN_SIGMA && b.sigma.is_finite()) {
                return Err(invalid(
                    "blob",
                    format!("sigma {} is below {MIN_SIGMA} px", b.sigma),
                ));
            }
            if !(b.cx.is_finite() && b.cy.is_finite() && b.amplitude.is_finite()) {
                return Err(invalid("blob", "centre and amplitude must be finite"));
            }
            if b.amplitude <= 0.0 {
                return Err(invalid("blob", "amplitude must be positive"));
            }
            Ok(())
        };
        match &self.pattern {
            Pattern::GaussianBlob(b) => check_blob(b)?,
            Pattern::BlobMixture { blobs } => {
                if blobs.is_empty() {
                    return Err(invalid("blob", "mixture needs at least one blob"));
                }
                blobs.iter().try_for_each(check_blob)?;
            }
            Pattern::RandomBlobs { count } => {
                if *count == 0 {
                    return Err(invalid("count", "need at least one blob"));
                }
            }
            Pattern::Band {
                orientation_deg,
                wavelength,
                amplitude,
            } => {
                if !(*wavelength >= 2.0 * MIN_SIGMA && wavelength.is_finite()) {
                    return Err(invalid(
                        "wavelength",
                        format!("{wavelength} px is not resolvable"),
                    ));
                }
                if !orientation_deg.is_finite() || !(*amplitude > 0.0 && amplitude.is_finite()) {
                    return Err(invalid(
                        "band",
                        "orientation and amplitude must be finite, amplitude positive",
                    ));
                }
            }
        }
        Ok(())
    }

    fn resolve(&self) -> Resolved {
        match &self.pattern {
            Pattern::GaussianBlob(b) => Resolved::Blobs(vec![*b]),
            Pattern::BlobMixture { blobs } => Resolved::Blobs(blobs.clone()),
            Pattern::RandomBlobs { count } => {
                let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
                let (h, w) = (self.height as f64, self.width as f64);
                let blobs = (0..*count)
                    .map(|_| Blob {
                        cx: rng.gen_range(0.25 * w..0.75 * w),
                        cy: rng.gen_range(0.25 * h..0.75 * h),
                        sigma: rng.gen_range(3.0..6.0),
                        amplitude: rng.gen_range(0.5..1.0),
                    })
                    .collect();
                Resolved::Blobs(blobs)
            }
            Pattern::Band {
                orientation_deg,
                wavelength,
                amplitude,
            } => {
                let k = std::f64::consts::TAU / wavelength;
                let a = orientation_deg.to_radians();
                Resolved::Band {
                    kx: k * a.cos(),
                    ky: k * a.sin(),
                    amplitude: *amplitude,
                }
            }
        }
    }

    /// Renders the pattern at (possibly fractional) time `t`, translated by an
    /// extra `offset` on top of the advection.
    pub fn render(&self, t: f64, offset: (f64, f64)) -> Result<ScalarField2D> {
        self.validate()?;
        let pattern = self.resolve();
        Ok(self.render_resolved(&pattern, t, offset))
    }

    fn render_resolved(&self, pattern: &Resolved, t: f64, offset: (f64, f64)) -> ScalarField2D {
        let shift_x = t * self.advection.0 + offset.0;
        let shift_y = t * self.advection.1 + offset.1;
        let cutoff = SUPPORT_FRACTION * pattern.peak();
        let convection = t * self.convection_rate;
        let grid = Grid::from_fn(self.height, self.width, |r, c| {
            let p = pattern.eval(c as f64 - shift_x, r as f64 - shift_y);
            if p > cutoff {
                p + convection
            } else {
                p
            }
        });
        ScalarField2D::from_grid(grid).expect("validated spec renders finite values")
    }

    /// Cells where frame `t` carries convection.
    pub fn support_mask(&self, t: f64) -> Result<Vec<bool>> {
        self.validate()?;
        let pattern = self.resolve();
        let cutoff = SUPPORT_FRACTION * pattern.peak();
        let shift_x = t * self.advection.0;
        let shift_y = t * self.advection.1;
        let mut mask = Vec::with_capacity(self.height * self.width);
        for r in 0..self.height {
            for c in 0..self.width {
                mask.push(pattern.eval(c as f64 - shift_x, r as f64 - shift_y) > cutoff);
            }
        }
        Ok(mask)
    }

    /// Parses the flat `key = value` spec format.
    ///
    /// ```text
    /// height = 128
    /// width = 128
    /// pattern = gaussian_blob        # or blob_mixture, random_blobs, band
    /// blob = 64, 64, 6, 1.0          # cx, cy, sigma, amplitude; repeat for mixtures
    /// dx = 3
    /// dy = -2
    /// convection_rate = 0.05
    /// steps = 2
    /// seed = 7
    /// ```
    ///
    /// `random_blobs` reads `count`; `band` reads `orientation` (degrees),
    /// `wavelength` and `amplitude`.
    pub fn from_kv_text(text: &str) -> Result<SynthSpec> {
        let entries = kv::parse(text).map_err(|line| AceError::InvalidSpec {
            line: Some(line),
            field: "<line>".into(),
            reason: "expected `key = value`".into(),
        })?;

        let at = |e: &kv::Entry, reason: String| AceError::InvalidSpec {
            line: Some(e.line),
            field: e.key.clone(),
            reason,
        };
        let num = |e: &kv::Entry| -> Result<f64> {
            e.value
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| at(e, format!("expected a number, got `{}`", e.value)))
        };
        let int = |e: &kv::Entry| -> Result<u64> {
            e.value.parse::<u64>().map_err(|_| {
                at(
                    e,
                    format!("expected a non-negative integer, got `{}`", e.value),
                )
            })
        };

        let mut height = None;
        let mut width = None;
        let mut pattern_kind: Option<(usize, String)> = None;
        let mut blobs = Vec::new();
        let mut count = None;
        let mut orientation = 0.0;
        let mut wavelength = None;
        let mut amplitude = 1.0;
        let (mut dx, mut dy) = (0.0, 0.0);
        let mut rate = 0.0;
        let mut steps = 2;
        let mut seed = 0;

        for e in &entries {
            match e.key.as_str() {
                "height" => height = Some(int(e)? as usize),
                "width" => width = Some(int(e)? as usize),
                "pattern" => pattern_kind = Some((e.line, e.value.clone())),
                "blob" => {
                    let parts: Vec<f64> = e
                        .value
                        .split(',')
                        .map(|p| p.trim().parse::<f64>())
                        .collect::<std::result::Result<_, _>>()
                        .map_err(|_| at(e, "expected `cx, cy, sigma[, amplitude]`".into()))?;
                    let blob = match parts.as_slice() {
                        [cx, cy, sigma] => Blob {
                            cx: *cx,
                            cy: *cy,
                            sigma: *sigma,
                            amplitude: 1.0,
                        },
                        [cx, cy, sigma, a] => Blob {
                            cx: *cx,
                            cy: *cy,
                            sigma: *sigma,
                            amplitude: *a,
                        },
                        _ => return Err(at(e, "expected `cx, cy, sigma[, amplitude]`".into())),
                    };
                    blobs.push((e.line, blob));
                }
                "count" => count = Some(int(e)? as usize),
                "orientation" => orientation = num(e)?,
                "wavelength" => wavelength = Some(num(e)?),
                "amplitude" => amplitude = num(e)?,
                "dx" => dx = num(e)?,
                "dy" => dy = num(e)?,
                "convection_rate" => rate = num(e)?,
                "steps" => steps = int(e)? as usize,
                "seed" => seed = int(e)?,
                other => return Err(at(e, format!("unknown key `{other}`"))),
            }
        }

        let missing = |field: &str| invalid(field, "required key is missing");
        let height = height.ok_or_else(|| missing("height"))?;
        let width = width.ok_or_else(|| missing("width"))?;
        let (pattern_line, kind) = pattern_kind.ok_or_else(|| missing("pattern"))?;
        let pattern_err = |reason: &str| AceError::InvalidSpec {
            line: Some(pattern_line),
            field: "pattern".into(),
            reason: reason.into(),
        };
        let pattern = match kind.as_str() {
            "gaussian_blob" => match blobs.as_slice() {
                [(_, b)] => Pattern::GaussianBlob(*b),
                _ => return Err(pattern_err("gaussian_blob needs exactly one `blob` line")),
            },
            "blob_mixture" => {
                if blobs.is_empty() {
                    return Err(pattern_err("blob_mixture needs at least one `blob` line"));
                }
                Pattern::BlobMixture {
                    blobs: blobs.iter().map(|(_, b)| *b).collect(),
                }
            }
            "random_blobs" => Pattern::RandomBlobs {
                count: count.ok_or_else(|| pattern_err("random_blobs needs `count`"))?,
            },
            "band" => Pattern::Band {
                orientation_deg: orientation,
                wavelength: wavelength.ok_or_else(|| pattern_err("band needs `wavelength`"))?,
                amplitude,
            },
            other => return Err(pattern_err(&format!("unknown pattern `{other}`"))),
        };

        let spec = SynthSpec {
            height,
            width,
            pattern,
            advection: (dx, dy),
            convection_rate: rate,
            steps,
            seed,
        };
        // attach the offending line where the key is known
        spec.validate().map_err(|err| match err {
            AceError::InvalidSpec {
                line: None,
                field,
                reason,
            } => {
                let line = entries
                    .iter()
                    .find(|e| match field.as_str() {
                        "advection" => e.key == "dx" || e.key == "dy",
                        f => e.key == f,
                    })
                    .map(|e| e.line);
                AceError::InvalidSpec {
                    line,
                    field,
                    reason,
                }
            }
            other => other,
        })?;
        Ok(spec)
    }
}

/// Frames `0..steps` of the spec.
pub fn generate(spec: &SynthSpec) -> Result<Vec<ScalarField2D>> {
    spec.validate()?;
    let pattern = spec.resolve();
    Ok((0..spec.steps)
        .map(|t| spec.render_resolved(&pattern, t as f64, (0.0, 0.0)))
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Perturbation {
    Blur {
        sigma: f64,
    },
    /// Moves content by `(dx, dy)` pixels.
    Shift {
        dx: f64,
        dy: f64,
    },
    /// Scales deviations from the frame mean.
    ScaleAmplitude {
        factor: f64,
    },
}

pub fn perturb(frame: &ScalarField2D, kind: Perturbation) -> Result<ScalarField2D> {
    let bad = |name, reason: &str| AceError::InvalidParameter {
        name,
        reason: reason.to_string(),
    };
    let grid = match kind {
        Perturbation::Blur { sigma } => {
            if !(sigma > 0.0 && sigma.is_finite()) {
                return Err(bad("sigma", "must be positive and finite"));
            }
            gaussian_blur(frame, sigma)
        }
        Perturbation::Shift { dx, dy } => {
            if !(dx.is_finite() && dy.is_finite()) {
                return Err(bad("shift", "offsets must be finite"));
            }
            let (h, w) = frame.shape();
            remap(frame, &FlowField2D::uniform(h, w, -dx, -dy))?
        }
        Perturbation::ScaleAmplitude { factor } => {
            if !(factor > 0.0 && factor.is_finite()) {
                return Err(bad("factor", "must be positive and finite"));
            }
            if factor == 1.0 {
                return Ok(frame.clone());
            }
            let mean = frame.mean();
            frame.map(|v| mean + factor * (v - mean))
        }
    };
    frame.with_grid(grid)
}
