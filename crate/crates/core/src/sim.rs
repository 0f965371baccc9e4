//! Synthetic reference fields.
//!
//! Two stochastic models cover the two kinds of structure seen in real
//! nonwovens. The segment dilution model drops Poisson-distributed fiber
//! segments (random position, orientation, exponential length) dilated to
//! the fiber width and counts coverage per pixel: short-range texture.
//! The Bessel random field superposes plane waves with a single spatial
//! wavelength and random directions and phases, giving an isotropic
//! Gaussian-like field whose spectrum concentrates on a ring: long-range
//! clouds. Weighted superpositions blend the two at a chosen energy
//! ratio.
//!
//! Everything is seeded and deterministic: the same parameters and seed
//! give bit-identical fields, and the draw order per germ or wave is part
//! of the contract.

use rand::SeedableRng;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Poisson};
use thiserror::Error;

use crate::field::{FieldError, FieldKind, ScalarField};

const TAU: f64 = 2.0 * std::f64::consts::PI;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("{name} must be positive and finite, got {value}")]
    BadParam { name: &'static str, value: f64 },
    #[error("wavelength must be nonnegative and finite, got {0}")]
    BadWavelength(f64),
    #[error("n_waves must be at least 16, got {0}")]
    TooFewWaves(usize),
    #[error("fields disagree: {detail}")]
    Mismatch { detail: String },
    #[error("superposition weights must be nonnegative and finite with a positive sum, got ({fiber}, {grf})")]
    BadWeights { fiber: f64, grf: f64 },
    #[error("superposition has no fluctuating component (constant inputs or zero weights)")]
    DegenerateInputs,
    #[error(
        "absorption {absorption} over value span {span} drives the minimum gray value \
         {min_gray} below 1; reduce absorption or raise g0"
    )]
    GrayUnderflow {
        absorption: f64,
        span: f64,
        min_gray: f64,
    },
    #[error(transparent)]
    Field(#[from] FieldError),
}

fn check_positive(name: &'static str, value: f64) -> Result<(), SimError> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(SimError::BadParam { name, value })
    }
}

/// Parameters of the Poisson segment dilution model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentModelParams {
    /// Fiber diameter in um; segments are dilated by half of it.
    pub fiber_diameter: f64,
    /// Mean of the exponential segment length distribution, um.
    pub mean_length: f64,
    /// Germ intensity: expected segments per um^2.
    pub intensity: f64,
    pub seed: u64,
}

impl SegmentModelParams {
    /// Picks the intensity so the expected covering count per point is
    /// `mean_coverage`: a point is covered by each capsule containing it,
    /// and the mean capsule area is `mean_length * d + pi * d^2 / 4`.
    pub fn with_mean_coverage(
        fiber_diameter: f64,
        mean_length: f64,
        mean_coverage: f64,
        seed: u64,
    ) -> Self {
        let capsule_area = mean_length * fiber_diameter
            + std::f64::consts::PI * fiber_diameter * fiber_diameter / 4.0;
        SegmentModelParams {
            fiber_diameter,
            mean_length,
            intensity: mean_coverage / capsule_area,
            seed,
        }
    }

    /// Expected number of germs in the extended sampling window for a
    /// given image geometry. Fewer than about 10 gives a field dominated
    /// by a handful of segments; callers may want to warn.
    pub fn expected_segment_count(&self, width: usize, height: usize, pixel_size: f64) -> f64 {
        let margin = self.mean_length + self.fiber_diameter;
        let wp = width as f64 * pixel_size + 2.0 * margin;
        let hp = height as f64 * pixel_size + 2.0 * margin;
        self.intensity * wp * hp
    }
}

/// Adds one to every pixel whose center lies within `radius` of the
/// segment `(ax, ay)-(bx, by)`. Coordinates in um, pixel centers at
/// `(i + 0.5) * pixel`.
fn stamp_capsule(
    values: &mut [f64],
    width: usize,
    height: usize,
    pixel: f64,
    ax: f64,
    ay: f64,
    bx: f64,
    by: f64,
    radius: f64,
) {
    let clamp_lo = |v: f64| ((v / pixel - 0.5).floor() as i64).max(0);
    let clamp_hi = |v: f64, n: usize| ((v / pixel - 0.5).ceil() as i64).min(n as i64 - 1);
    let i0 = clamp_lo(ax.min(bx) - radius);
    let i1 = clamp_hi(ax.max(bx) + radius, width);
    let j0 = clamp_lo(ay.min(by) - radius);
    let j1 = clamp_hi(ay.max(by) + radius, height);
    if i0 > i1 || j0 > j1 {
        return;
    }
    let dx = bx - ax;
    let dy = by - ay;
    let len2 = dx * dx + dy * dy;
    let r2 = radius * radius;
    for j in j0..=j1 {
        let cy = (j as f64 + 0.5) * pixel;
        let row = &mut values[j as usize * width..(j as usize + 1) * width];
        for i in i0..=i1 {
            let cx = (i as f64 + 0.5) * pixel;
            let t = if len2 > 0.0 {
                (((cx - ax) * dx + (cy - ay) * dy) / len2).clamp(0.0, 1.0)
            } else {
                0.0
            };
            let px = ax + t * dx;
            let py = ay + t * dy;
            let d2 = (cx - px) * (cx - px) + (cy - py) * (cy - py);
            if d2 <= r2 {
                row[i as usize] += 1.0;
            }
        }
    }
}

/// Simulates the covering-count field of the segment dilution model.
///
/// Germs fall on a window extended by `mean_length + fiber_diameter` on
/// every side (minus-sampling), so statistics inside the image are free
/// of border depletion. The germ is the segment start; orientation is
/// uniform on `[0, pi)`, length exponential with the configured mean.
/// Per germ the draws are position x, position y, orientation, length,
/// in that order. Values are nonnegative integer covering counts.
pub fn simulate_segment_field(
    params: &SegmentModelParams,
    width: usize,
    height: usize,
    pixel_size: f64,
) -> Result<ScalarField, SimError> {
    check_positive("fiber_diameter", params.fiber_diameter)?;
    check_positive("mean_length", params.mean_length)?;
    check_positive("intensity", params.intensity)?;
    check_positive("pixel_size", pixel_size)?;
    let wp = width as f64 * pixel_size;
    let hp = height as f64 * pixel_size;
    let margin = params.mean_length + params.fiber_diameter;
    let expected = params.intensity * (wp + 2.0 * margin) * (hp + 2.0 * margin);
    if !expected.is_finite() {
        return Err(SimError::BadParam {
            name: "intensity",
            value: params.intensity,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let n = Poisson::new(expected)
        .map_err(|_| SimError::BadParam {
            name: "intensity",
            value: params.intensity,
        })?
        .sample(&mut rng) as usize;
    let length_dist = Exp::new(1.0 / params.mean_length).expect("positive rate");
    let mut values = vec![0.0f64; width * height];
    let radius = params.fiber_diameter / 2.0;
    for _ in 0..n {
        let gx = rng.random_range(-margin..wp + margin);
        let gy = rng.random_range(-margin..hp + margin);
        let theta = rng.random_range(0.0..std::f64::consts::PI);
        let length: f64 = length_dist.sample(&mut rng);
        let ex = gx + length * theta.cos();
        let ey = gy + length * theta.sin();
        stamp_capsule(
            &mut values,
            width,
            height,
            pixel_size,
            gx,
            gy,
            ex,
            ey,
            radius,
        );
    }
    Ok(ScalarField::new(
        width,
        height,
        pixel_size,
        FieldKind::Simulated,
        values,
    )?)
}

/// Parameters of the single-wavelength random-waves field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BesselGrfParams {
    /// Spatial wavelength of every wave, um. Zero means no field at all:
    /// the output is identically zero.
    pub wavelength: f64,
    /// Number of superposed plane waves; at least 16. More waves make
    /// the marginals more Gaussian but do not change the spectrum.
    pub n_waves: usize,
    pub seed: u64,
}

/// Simulates an isotropic random field with all spectral energy at the
/// single radial angular frequency `2*pi/wavelength`.
///
/// The field is `sqrt(2/n) * sum_i cos(k_i . x + phi_i)` with wave
/// vectors of fixed magnitude and uniform random direction, so its
/// autocorrelation at distance r is the Bessel function `J0(2*pi*r /
/// wavelength)` and its variance tends to 1. Per wave the draws are
/// direction then phase.
pub fn simulate_bessel_grf(
    params: &BesselGrfParams,
    width: usize,
    height: usize,
    pixel_size: f64,
) -> Result<ScalarField, SimError> {
    check_positive("pixel_size", pixel_size)?;
    if !(params.wavelength.is_finite() && params.wavelength >= 0.0) {
        return Err(SimError::BadWavelength(params.wavelength));
    }
    if params.n_waves < 16 {
        return Err(SimError::TooFewWaves(params.n_waves));
    }
    let mut values = vec![0.0f64; width * height];
    if params.wavelength == 0.0 {
        return Ok(ScalarField::new(
            width,
            height,
            pixel_size,
            FieldKind::Simulated,
            values,
        )?);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let k = TAU / params.wavelength;
    for _ in 0..params.n_waves {
        let alpha = rng.random_range(0.0..TAU);
        let phi = rng.random_range(0.0..TAU);
        let kx = k * alpha.cos();
        let ky = k * alpha.sin();
        // step one pixel along x by rotating (cos, sin) incrementally:
        // four multiplies per pixel instead of a sin_cos call
        let (sin_d, cos_d) = (kx * pixel_size).sin_cos();
        for j in 0..height {
            let start = kx * 0.5 * pixel_size + ky * (j as f64 + 0.5) * pixel_size + phi;
            let (mut s, mut c) = start.sin_cos();
            for v in &mut values[j * width..(j + 1) * width] {
                *v += c;
                let nc = c * cos_d - s * sin_d;
                s = s * cos_d + c * sin_d;
                c = nc;
            }
        }
    }
    let amp = (2.0 / params.n_waves as f64).sqrt();
    for v in &mut values {
        *v *= amp;
    }
    Ok(ScalarField::new(
        width,
        height,
        pixel_size,
        FieldKind::Simulated,
        values,
    )?)
}

/// Amplitude weights for mixing the two models. An energy (variance)
/// ratio `v_f : v_g` corresponds to amplitudes `sqrt(v_f) : sqrt(v_g)`
/// because each input is standardized to unit variance before mixing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuperpositionSpec {
    pub fiber_weight: f64,
    pub grf_weight: f64,
}

/// Standardizes both inputs to zero mean and unit variance, then mixes
/// them as `(a * fiber + b * grf) / (a + b)`.
///
/// A constant input (for example the zero field from `wavelength = 0`)
/// contributes nothing; it is replaced by zeros rather than rejected, so
/// a fiber-only blend is just `grf_weight = 0` or a zero GRF. If no
/// fluctuating component remains at positive weight the superposition
/// would be constant, which is an error.
pub fn superpose(
    fiber: &ScalarField,
    grf: &ScalarField,
    spec: &SuperpositionSpec,
) -> Result<ScalarField, SimError> {
    if fiber.width() != grf.width()
        || fiber.height() != grf.height()
        || fiber.pixel_size() != grf.pixel_size()
    {
        return Err(SimError::Mismatch {
            detail: format!(
                "fiber {}x{} @ {} um vs grf {}x{} @ {} um",
                fiber.width(),
                fiber.height(),
                fiber.pixel_size(),
                grf.width(),
                grf.height(),
                grf.pixel_size()
            ),
        });
    }
    let a = spec.fiber_weight;
    let b = spec.grf_weight;
    if !(a.is_finite() && b.is_finite() && a >= 0.0 && b >= 0.0 && a + b > 0.0) {
        return Err(SimError::BadWeights { fiber: a, grf: b });
    }
    let standardized = |f: &ScalarField| -> Option<Vec<f64>> {
        let (mean, sd) = f.moments();
        if sd > 0.0 {
            Some(f.values().iter().map(|&v| (v - mean) / sd).collect())
        } else {
            None
        }
    };
    let fs = standardized(fiber);
    let gs = standardized(grf);
    let f_live = fs.is_some() && a > 0.0;
    let g_live = gs.is_some() && b > 0.0;
    if !f_live && !g_live {
        return Err(SimError::DegenerateInputs);
    }
    let n = fiber.len();
    let zeros = || vec![0.0f64; n];
    let fv = fs.unwrap_or_else(zeros);
    let gv = gs.unwrap_or_else(zeros);
    let inv = 1.0 / (a + b);
    let values: Vec<f64> = fv
        .iter()
        .zip(&gv)
        .map(|(&f, &g)| (a * f + b * g) * inv)
        .collect();
    Ok(ScalarField::new(
        fiber.width(),
        fiber.height(),
        fiber.pixel_size(),
        FieldKind::Simulated,
        values,
    )?)
}

/// Renders a field as a transmission gray image: `g = g0 * exp(-c * (v -
/// min))`, so the lightest pixel is exactly `g0` and heavier regions are
/// darker. `absorption` must leave the darkest pixel at gray value 1 or
/// above, keeping the image usable by the logarithmic transform without
/// clamping.
///
/// Feeding the result through the logarithmic transform (automatic `g0`)
/// and normalization recovers the standardized input field exactly, up
/// to floating-point rounding.
pub fn to_transmission_image(
    field: &ScalarField,
    g0: f64,
    absorption: f64,
) -> Result<ScalarField, SimError> {
    check_positive("g0", g0)?;
    check_positive("absorption", absorption)?;
    let (min, max) = field.min_max();
    let span = max - min;
    let min_gray = g0 * (-absorption * span).exp();
    if min_gray < 1.0 {
        return Err(SimError::GrayUnderflow {
            absorption,
            span,
            min_gray,
        });
    }
    Ok(field.map(FieldKind::GrayImage, |v| {
        g0 * (-absorption * (v - min)).exp()
    })?)
}

/// Reference scenes used across tests, benchmarks, and the command-line
/// `simulate` subcommand: a fixed 1024x1024 geometry at 7 um per pixel
/// with 42 um fibers of 896 um mean length at mean coverage 3, blended
/// with a Bessel field of preset wavelength and energy ratio.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SimPreset {
    /// Fibers only, no added clouds.
    Sim1,
    /// Fiber energy : 875 um cloud energy = 2 : 1.
    Sim2,
    /// Fiber energy : 1750 um cloud energy = 2 : 1.
    Sim3,
    /// Fiber energy : 1750 um cloud energy = 3 : 1.
    Sim4,
}

impl SimPreset {
    pub const WIDTH: usize = 1024;
    pub const HEIGHT: usize = 1024;
    pub const PIXEL_SIZE: f64 = 7.0;
    pub const FIBER_DIAMETER: f64 = 42.0;
    pub const MEAN_FIBER_LENGTH: f64 = 896.0;
    pub const MEAN_COVERAGE: f64 = 3.0;
    pub const N_WAVES: usize = 256;
    /// Decorrelates the wave draws from the germ draws when both models
    /// share one user-facing seed.
    pub const GRF_SEED_SALT: u64 = 0x9E37_79B9_7F4A_7C15;

    pub fn all() -> [SimPreset; 4] {
        [
            SimPreset::Sim1,
            SimPreset::Sim2,
            SimPreset::Sim3,
            SimPreset::Sim4,
        ]
    }

    pub fn name(self) -> &'static str {
        match self {
            SimPreset::Sim1 => "sim1",
            SimPreset::Sim2 => "sim2",
            SimPreset::Sim3 => "sim3",
            SimPreset::Sim4 => "sim4",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "sim1" => Some(SimPreset::Sim1),
            "sim2" => Some(SimPreset::Sim2),
            "sim3" => Some(SimPreset::Sim3),
            "sim4" => Some(SimPreset::Sim4),
            _ => None,
        }
    }

    /// Cloud wavelength in um; zero for the fiber-only scene.
    pub fn grf_wavelength(self) -> f64 {
        match self {
            SimPreset::Sim1 => 0.0,
            SimPreset::Sim2 => 875.0,
            SimPreset::Sim3 | SimPreset::Sim4 => 1750.0,
        }
    }

    /// Amplitude weights realizing the preset's fiber-to-cloud energy
    /// ratio (2:1 for sim2 and sim3, 3:1 for sim4).
    pub fn weights(self) -> SuperpositionSpec {
        match self {
            SimPreset::Sim1 => SuperpositionSpec {
                fiber_weight: 1.0,
                grf_weight: 0.0,
            },
            SimPreset::Sim2 | SimPreset::Sim3 => SuperpositionSpec {
                fiber_weight: std::f64::consts::SQRT_2,
                grf_weight: 1.0,
            },
            SimPreset::Sim4 => SuperpositionSpec {
                fiber_weight: 3.0f64.sqrt(),
                grf_weight: 1.0,
            },
        }
    }

    pub fn segment_params(self, seed: u64) -> SegmentModelParams {
        SegmentModelParams::with_mean_coverage(
            Self::FIBER_DIAMETER,
            Self::MEAN_FIBER_LENGTH,
            Self::MEAN_COVERAGE,
            seed,
        )
    }

    pub fn grf_params(self, seed: u64) -> BesselGrfParams {
        BesselGrfParams {
            wavelength: self.grf_wavelength(),
            n_waves: Self::N_WAVES,
            seed: seed ^ Self::GRF_SEED_SALT,
        }
    }
}

/// Generates one preset scene: segment field plus Bessel field, mixed at
/// the preset energy ratio. The result is the standardized mixture (zero
/// mean, variance near one), not yet rendered to gray values.
pub fn simulate_preset(preset: SimPreset, seed: u64) -> Result<ScalarField, SimError> {
    let fiber = simulate_segment_field(
        &preset.segment_params(seed),
        SimPreset::WIDTH,
        SimPreset::HEIGHT,
        SimPreset::PIXEL_SIZE,
    )?;
    let grf = simulate_bessel_grf(
        &preset.grf_params(seed),
        SimPreset::WIDTH,
        SimPreset::HEIGHT,
        SimPreset::PIXEL_SIZE,
    )?;
    superpose(&fiber, &grf, &preset.weights())
}
