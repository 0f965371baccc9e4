//! Power spectra, radial averaging, and the cloudiness index.
//!
//! Frequencies are radial angular frequencies `rho = 2*pi*f` in 1/um, so
//! a structure wavelength `gamma` in um corresponds to `rho = 2*pi/gamma`.
//! Spectra are normalized so that the non-DC energy sums to one; the
//! cloudiness index of a band is then simply the in-band energy fraction.

use std::io::{self, BufRead, Write};

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use thiserror::Error;

use crate::field::{FieldKind, ScalarField};
use crate::numeric::{kahan_sum, sinc};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WindowKind {
    /// No taper. Fine for periodic synthetic fields, leaks on real images.
    None,
    /// Separable Hann taper, `0.5 * (1 - cos(2*pi*i/(n-1)))` per axis.
    Hann,
}

impl WindowKind {
    pub fn as_str(self) -> &'static str {
        match self {
            WindowKind::None => "none",
            WindowKind::Hann => "hann",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WindowSpec {
    pub kind: WindowKind,
    /// Divide by the RMS of the window so the windowed field keeps the
    /// energy scale of the original. Leave on unless you are comparing
    /// against raw tapered spectra.
    pub energy_compensation: bool,
}

impl Default for WindowSpec {
    fn default() -> Self {
        WindowSpec {
            kind: WindowKind::Hann,
            energy_compensation: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BandStatus {
    Valid,
    /// `rho_lo` is not positive or does not lie below `rho_hi`.
    Inverted,
    /// The band asks for wavelengths beyond half the field diagonal.
    BelowLowFrequencyLimit,
    /// The band reaches past the two-pixel Nyquist wavelength.
    AboveNyquist,
}

/// Half-open band of radial angular frequencies `[rho_lo, rho_hi)` in 1/um.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrequencyBand {
    pub rho_lo: f64,
    pub rho_hi: f64,
}

impl FrequencyBand {
    pub fn new(rho_lo: f64, rho_hi: f64) -> Self {
        FrequencyBand { rho_lo, rho_hi }
    }

    /// Band covering structure wavelengths `[gamma_lo, gamma_hi]` in um.
    pub fn from_wavelengths(gamma_lo: f64, gamma_hi: f64) -> Self {
        FrequencyBand {
            rho_lo: 2.0 * std::f64::consts::PI / gamma_hi,
            rho_hi: 2.0 * std::f64::consts::PI / gamma_lo,
        }
    }

    /// Wavelength range `(gamma_lo, gamma_hi)` in um equivalent to the band.
    pub fn wavelengths(&self) -> (f64, f64) {
        (
            2.0 * std::f64::consts::PI / self.rho_hi,
            2.0 * std::f64::consts::PI / self.rho_lo,
        )
    }

    pub fn contains(&self, rho: f64) -> bool {
        self.rho_lo <= rho && rho < self.rho_hi
    }
}

/// Result of checking a band against a concrete image geometry.
#[derive(Debug, Clone)]
pub struct BandValidation {
    pub band: FrequencyBand,
    pub status: BandStatus,
    /// Smallest wavelength in the band, `2*pi/rho_hi`.
    pub wavelength_lo: f64,
    /// Largest wavelength in the band, `2*pi/rho_lo`.
    pub wavelength_hi: f64,
    /// Two-pixel Nyquist wavelength in um.
    pub gamma_min: f64,
    /// Half the field diagonal in um.
    pub gamma_max: f64,
    /// Soft warnings; empty unless `status == Valid`.
    pub warnings: Vec<String>,
}

impl BandValidation {
    pub fn is_valid(&self) -> bool {
        self.status == BandStatus::Valid
    }

    /// Human-readable reason when the band is unusable.
    pub fn status_message(&self) -> Option<String> {
        match self.status {
            BandStatus::Valid => None,
            BandStatus::Inverted => Some(format!(
                "band is empty or inverted: need 0 < rho_lo < rho_hi, got [{}, {})",
                self.band.rho_lo, self.band.rho_hi
            )),
            BandStatus::BelowLowFrequencyLimit => Some(format!(
                "band wavelength {} um exceeds the half-diagonal limit {} um; \
                 rho_lo must be at least {} per um",
                self.wavelength_hi,
                self.gamma_max,
                2.0 * std::f64::consts::PI / self.gamma_max
            )),
            BandStatus::AboveNyquist => Some(format!(
                "band rho_hi {} per um exceeds the Nyquist limit {} per um \
                 (two-pixel wavelength {} um)",
                self.band.rho_hi,
                2.0 * std::f64::consts::PI / self.gamma_min,
                self.gamma_min
            )),
        }
    }
}

/// Checks a band against an image geometry.
///
/// Hard limits: the largest requested wavelength must not exceed half the
/// field diagonal, and the smallest must not drop below two pixels. Bands
/// inside the limits but within a factor four of either end get soft
/// warnings, since few annuli (or few pixels per period) support them.
pub fn valid_band(
    band: &FrequencyBand,
    width: usize,
    height: usize,
    pixel_size: f64,
) -> BandValidation {
    let wp = width as f64 * pixel_size;
    let hp = height as f64 * pixel_size;
    let gamma_max = wp.hypot(hp) / 2.0;
    let gamma_min = 2.0 * pixel_size;
    let inverted = !(band.rho_lo.is_finite() && band.rho_hi.is_finite())
        || band.rho_lo <= 0.0
        || band.rho_hi <= band.rho_lo;
    let (wavelength_lo, wavelength_hi) = if inverted {
        (f64::NAN, f64::NAN)
    } else {
        band.wavelengths()
    };
    let status = if inverted {
        BandStatus::Inverted
    } else if wavelength_hi > gamma_max {
        BandStatus::BelowLowFrequencyLimit
    } else if wavelength_lo < gamma_min {
        BandStatus::AboveNyquist
    } else {
        BandStatus::Valid
    };
    let mut warnings = Vec::new();
    if status == BandStatus::Valid {
        if wavelength_hi > gamma_max / 4.0 {
            warnings.push(format!(
                "band wavelength {wavelength_hi} um is above a quarter of the \
                 half-diagonal limit {gamma_max} um; few annuli support it"
            ));
        }
        if wavelength_lo < 4.0 * pixel_size {
            warnings.push(format!(
                "band wavelength {wavelength_lo} um is within a factor two of the \
                 two-pixel Nyquist wavelength {gamma_min} um"
            ));
        }
    }
    BandValidation {
        band: *band,
        status,
        wavelength_lo,
        wavelength_hi,
        gamma_min,
        gamma_max,
        warnings,
    }
}

#[derive(Debug, Error)]
pub enum SpectrumError {
    #[error("field has no fluctuation energy (constant after windowing)")]
    ZeroFluctuation,
    #[error("invalid frequency band: {detail}")]
    InvalidBand { status: BandStatus, detail: String },
    #[error("averaging window side must be positive and finite, got {0}")]
    BadWindowSide(f64),
    #[error("averaging window side {side} um exceeds the smaller field extent {limit} um")]
    WindowTooLarge { side: f64, limit: f64 },
    #[error("radial csv, line {line}: {detail}")]
    CsvParse { line: usize, detail: String },
    #[error("radial csv i/o: {0}")]
    CsvIo(#[from] io::Error),
}

/// Applies the taper in `spec` to a field.
///
/// With energy compensation the tapered values are divided by the RMS of
/// the 2D window, which keeps the field's total fluctuation energy on the
/// original scale. A degenerate axis of two pixels makes a Hann window
/// identically zero; the compensation is skipped in that case and the
/// downstream spectrum reports zero fluctuation instead.
///
/// The kind is preserved, except `normalized_weight` becomes
/// `weight_field`: tapering destroys the unit-variance property.
pub fn apply_window(field: &ScalarField, spec: &WindowSpec) -> ScalarField {
    let out_kind = if field.kind() == FieldKind::NormalizedWeight {
        FieldKind::WeightField
    } else {
        field.kind()
    };
    match spec.kind {
        WindowKind::None => field
            .clone()
            .with_kind(out_kind)
            .expect("kind relaxation cannot fail"),
        WindowKind::Hann => {
            let hann = |n: usize| -> Vec<f64> {
                (0..n)
                    .map(|i| {
                        let t = 2.0 * std::f64::consts::PI * i as f64 / (n - 1) as f64;
                        0.5 * (1.0 - t.cos())
                    })
                    .collect()
            };
            let hx = hann(field.width());
            let hy = hann(field.height());
            let rms_of = |h: &[f64]| {
                (kahan_sum(h.iter().map(|v| v * v)) / h.len() as f64).sqrt()
            };
            let rms = rms_of(&hx) * rms_of(&hy);
            let scale = if spec.energy_compensation && rms > 0.0 {
                1.0 / rms
            } else {
                1.0
            };
            let mut values = Vec::with_capacity(field.len());
            for (y, row) in field.values().chunks_exact(field.width()).enumerate() {
                let wy = hy[y] * scale;
                values.extend(row.iter().zip(&hx).map(|(&v, &wx)| v * wx * wy));
            }
            ScalarField::new(
                field.width(),
                field.height(),
                field.pixel_size(),
                out_kind,
                values,
            )
            .expect("windowed values stay finite")
        }
    }
}

/// Discrete 2D power spectrum of a field, normalized over the non-DC bins.
///
/// Bin `(i, j)` sits at ordinary frequencies `(fx, fy)` given by the
/// signed FFT index times the grid spacing `df = 1/(n * pixel)` per axis;
/// its energy before normalization is `|F[i,j]|^2 / N^2` with `N` the
/// pixel count, so the non-DC energies sum to the population variance of
/// the (windowed) field and the DC bin holds the squared mean.
#[derive(Debug, Clone)]
pub struct PowerSpectrum2D {
    width: usize,
    height: usize,
    pixel_size: f64,
    df_x: f64,
    df_y: f64,
    energies: Vec<f64>,
    dc_energy: f64,
    total_fluctuation_energy: f64,
    normalized: bool,
}

fn signed_index(i: usize, n: usize) -> i64 {
    let half = ((n - 1) / 2) as i64;
    if (i as i64) <= half {
        i as i64
    } else {
        i as i64 - n as i64
    }
}

impl PowerSpectrum2D {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixel_size(&self) -> f64 {
        self.pixel_size
    }

    /// Frequency grid spacing along x, in 1/um (ordinary frequency).
    pub fn df_x(&self) -> f64 {
        self.df_x
    }

    pub fn df_y(&self) -> f64 {
        self.df_y
    }

    /// Normalized energies in row-major FFT layout; the DC slot is zero.
    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    /// Energy of the DC bin before normalization: the squared mean of the
    /// windowed field. Kept out of the fluctuation bookkeeping.
    pub fn dc_energy(&self) -> f64 {
        self.dc_energy
    }

    /// Non-DC energy sum before normalization: the population variance of
    /// the windowed field.
    pub fn total_fluctuation_energy(&self) -> f64 {
        self.total_fluctuation_energy
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    /// Signed ordinary frequency of column index `i`, in 1/um.
    pub fn freq_x(&self, i: usize) -> f64 {
        signed_index(i, self.width) as f64 * self.df_x
    }

    pub fn freq_y(&self, j: usize) -> f64 {
        signed_index(j, self.height) as f64 * self.df_y
    }

    /// Radial angular frequency of bin `(i, j)`, in 1/um.
    pub fn rho(&self, i: usize, j: usize) -> f64 {
        2.0 * std::f64::consts::PI * self.freq_x(i).hypot(self.freq_y(j))
    }

    /// Visits every non-DC bin in deterministic row-major order with
    /// `(fx, fy, rho, energy)`.
    pub fn for_each_bin(&self, mut visit: impl FnMut(f64, f64, f64, f64)) {
        for j in 0..self.height {
            let fy = self.freq_y(j);
            for i in 0..self.width {
                if i == 0 && j == 0 {
                    continue;
                }
                let fx = self.freq_x(i);
                let rho = 2.0 * std::f64::consts::PI * fx.hypot(fy);
                visit(fx, fy, rho, self.energies[j * self.width + i]);
            }
        }
    }
}

fn transpose(width: usize, height: usize, src: &[Complex<f64>], dst: &mut [Complex<f64>]) {
    for y in 0..height {
        for x in 0..width {
            dst[x * height + y] = src[y * width + x];
        }
    }
}

fn fft_2d(width: usize, height: usize, data: &mut [Complex<f64>]) {
    let mut planner = FftPlanner::new();
    let row_fft = planner.plan_fft_forward(width);
    let mut scratch = vec![Complex::default(); row_fft.get_inplace_scratch_len()];
    for row in data.chunks_exact_mut(width) {
        row_fft.process_with_scratch(row, &mut scratch);
    }
    let mut t = vec![Complex::default(); data.len()];
    transpose(width, height, data, &mut t);
    let col_fft = planner.plan_fft_forward(height);
    scratch.resize(col_fft.get_inplace_scratch_len(), Complex::default());
    for col in t.chunks_exact_mut(height) {
        col_fft.process_with_scratch(col, &mut scratch);
    }
    transpose(height, width, &t, data);
}

/// Estimates the normalized 2D power spectrum of a field.
///
/// The window in `spec` is applied first. Energies are `|F|^2 / N^2`, the
/// DC bin is set aside, and the remaining bins are scaled to sum to one.
/// A field that is constant after windowing has no fluctuation energy to
/// normalize and is rejected.
pub fn power_spectrum_2d(
    field: &ScalarField,
    spec: &WindowSpec,
) -> Result<PowerSpectrum2D, SpectrumError> {
    let windowed = apply_window(field, spec);
    let width = windowed.width();
    let height = windowed.height();
    let mut data: Vec<Complex<f64>> = windowed
        .values()
        .iter()
        .map(|&v| Complex::new(v, 0.0))
        .collect();
    fft_2d(width, height, &mut data);
    let n = (width * height) as f64;
    let inv_n2 = 1.0 / (n * n);
    let mut energies: Vec<f64> = data.iter().map(|c| c.norm_sqr() * inv_n2).collect();
    let dc_energy = energies[0];
    energies[0] = 0.0;
    let total = kahan_sum(energies.iter().copied());
    if !(total.is_finite() && total > 0.0) {
        return Err(SpectrumError::ZeroFluctuation);
    }
    for e in &mut energies {
        *e /= total;
    }
    Ok(PowerSpectrum2D {
        width,
        height,
        pixel_size: field.pixel_size(),
        df_x: 1.0 / (width as f64 * field.pixel_size()),
        df_y: 1.0 / (height as f64 * field.pixel_size()),
        energies,
        dc_energy,
        total_fluctuation_energy: total,
        normalized: true,
    })
}

/// One annulus of the radially averaged spectrum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialBin {
    /// Annulus midpoint in 1/um.
    pub rho_center: f64,
    /// Mean normalized energy density over the annulus, in um^2:
    /// energy sum divided by `count * df_x * df_y`.
    pub mean_energy_density: f64,
    /// Number of spectrum bins in the annulus.
    pub count: usize,
    /// Border-erosion weight at the annulus wavelength; see [`error_weight`].
    pub error_weight: f64,
}

/// Radially averaged spectrum: annuli of width `delta_rho`, empty annuli
/// omitted.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialSpectrum {
    pub delta_rho: f64,
    pub bins: Vec<RadialBin>,
}

/// Averages a 2D spectrum over annuli of width `2*pi*max(df_x, df_y)`.
///
/// The density convention makes values comparable across image sizes:
/// multiplying each bin's density by `count * df_x * df_y` and summing
/// recovers the total normalized energy (one).
pub fn radial_mean(ps: &PowerSpectrum2D) -> RadialSpectrum {
    let delta_rho = 2.0 * std::f64::consts::PI * ps.df_x().max(ps.df_y());
    let mut sums: Vec<f64> = Vec::new();
    let mut counts: Vec<usize> = Vec::new();
    ps.for_each_bin(|_, _, rho, energy| {
        let a = (rho / delta_rho) as usize;
        if a >= sums.len() {
            sums.resize(a + 1, 0.0);
            counts.resize(a + 1, 0);
        }
        sums[a] += energy;
        counts[a] += 1;
    });
    let cell = ps.df_x() * ps.df_y();
    let bins = sums
        .iter()
        .zip(&counts)
        .enumerate()
        .filter(|&(_, (_, &count))| count > 0)
        .map(|(a, (&sum, &count))| {
            let rho_center = (a as f64 + 0.5) * delta_rho;
            RadialBin {
                rho_center,
                mean_energy_density: sum / (count as f64 * cell),
                count,
                error_weight: error_weight(ps.width(), ps.height(), ps.pixel_size(), rho_center),
            }
        })
        .collect();
    RadialSpectrum { delta_rho, bins }
}

/// Cloudiness index: the fraction of normalized fluctuation energy whose
/// radial angular frequency falls in `[rho_lo, rho_hi)`.
///
/// Only inverted or empty bands are rejected here; a band covering the
/// whole grid sums to one. Whether a band is physically meaningful for
/// the image geometry is a separate question answered by [`valid_band`],
/// which the analysis pipeline enforces before computing indices.
/// Always in `[0, 1]`, and additive over disjoint bands.
pub fn cloudiness_index(
    ps: &PowerSpectrum2D,
    band: &FrequencyBand,
) -> Result<f64, SpectrumError> {
    if !(band.rho_lo.is_finite() && band.rho_hi.is_finite())
        || band.rho_lo <= 0.0
        || band.rho_hi <= band.rho_lo
    {
        return Err(SpectrumError::InvalidBand {
            status: BandStatus::Inverted,
            detail: format!(
                "band is empty or inverted: need 0 < rho_lo < rho_hi, got [{}, {})",
                band.rho_lo, band.rho_hi
            ),
        });
    }
    let mut in_band = Vec::new();
    ps.for_each_bin(|_, _, rho, energy| {
        if band.contains(rho) {
            in_band.push(energy);
        }
    });
    Ok(kahan_sum(in_band.into_iter()))
}

/// Fraction of the field's fluctuation variance that survives averaging
/// over a square window of side `side` um: each bin is attenuated by the
/// squared separable sinc transfer of the box mean.
///
/// Limits: `side -> 0` keeps everything (1), a window as large as the
/// field suppresses nearly everything.
pub fn window_integral_variance(ps: &PowerSpectrum2D, side: f64) -> Result<f64, SpectrumError> {
    if !(side.is_finite() && side > 0.0) {
        return Err(SpectrumError::BadWindowSide(side));
    }
    let limit = (ps.width().min(ps.height())) as f64 * ps.pixel_size();
    if side > limit {
        return Err(SpectrumError::WindowTooLarge { side, limit });
    }
    let mut terms = Vec::with_capacity(ps.energies().len() - 1);
    ps.for_each_bin(|fx, fy, _, energy| {
        let tx = sinc(std::f64::consts::PI * fx * side);
        let ty = sinc(std::f64::consts::PI * fy * side);
        terms.push(energy * tx * tx * ty * ty);
    });
    Ok(kahan_sum(terms.into_iter()))
}

/// Relative annulus support after border erosion, `A(gamma)/A(0)`.
///
/// A wave of wavelength `gamma` and orientation `theta` is only fully
/// sampled by pixels at least one period from the border along its
/// direction; the usable area is `max(0, W - gamma*|cos|) * max(0, H -
/// gamma*|sin|)`. This averages that area over orientation (256 midpoint
/// samples over `[0, pi)`) and divides by the full area. Equals 1 at
/// `gamma = 0`, decreases monotonically, reaches 0 at the diagonal.
pub fn erosion_weight(width: usize, height: usize, pixel_size: f64, gamma: f64) -> f64 {
    if gamma <= 0.0 {
        return 1.0;
    }
    let wp = width as f64 * pixel_size;
    let hp = height as f64 * pixel_size;
    const K: usize = 256;
    let mut acc = 0.0;
    for k in 0..K {
        let theta = (k as f64 + 0.5) * std::f64::consts::PI / K as f64;
        let a = (wp - gamma * theta.cos().abs()).max(0.0);
        let b = (hp - gamma * theta.sin().abs()).max(0.0);
        acc += a * b;
    }
    acc / (K as f64 * wp * hp)
}

/// [`erosion_weight`] at the wavelength `2*pi/rho`. Long waves (small
/// `rho`) barely fit in the field and get weights near zero; `rho <= 0`
/// maps to the infinite-wavelength limit 0.
pub fn error_weight(width: usize, height: usize, pixel_size: f64, rho: f64) -> f64 {
    if rho <= 0.0 {
        return 0.0;
    }
    erosion_weight(width, height, pixel_size, 2.0 * std::f64::consts::PI / rho)
}

const RADIAL_CSV_HEADER: &str = "rho_per_um,k1_um2,count,error_weight";

/// Plain decimal with at least ten significant digits, no exponent.
fn format_decimal(v: f64) -> String {
    if v == 0.0 {
        return "0.0".to_string();
    }
    let magnitude = v.abs().log10().floor() as i32;
    let decimals = (9 - magnitude).max(0) as usize;
    format!("{v:.decimals$}")
}

/// Writes a radial spectrum as CSV: one annulus per row, columns
/// `rho_per_um,k1_um2,count,error_weight`, decimal notation with at least
/// ten significant digits.
pub fn write_radial_csv(rs: &RadialSpectrum, out: &mut dyn Write) -> Result<(), SpectrumError> {
    writeln!(out, "{RADIAL_CSV_HEADER}")?;
    for bin in &rs.bins {
        writeln!(
            out,
            "{},{},{},{}",
            format_decimal(bin.rho_center),
            format_decimal(bin.mean_energy_density),
            bin.count,
            format_decimal(bin.error_weight),
        )?;
    }
    Ok(())
}

/// Parses CSV written by [`write_radial_csv`]. The annulus width is not
/// stored in the file; it is recovered from the spacing of consecutive
/// centers (or twice the first center for a single-row file).
pub fn parse_radial_csv(reader: impl BufRead) -> Result<RadialSpectrum, SpectrumError> {
    let mut lines = reader.lines().enumerate();
    let (_, header) = lines.next().ok_or(SpectrumError::CsvParse {
        line: 1,
        detail: "empty file".to_string(),
    })?;
    let header = header?;
    if header.trim() != RADIAL_CSV_HEADER {
        return Err(SpectrumError::CsvParse {
            line: 1,
            detail: format!("expected header {RADIAL_CSV_HEADER:?}, got {header:?}"),
        });
    }
    let mut bins = Vec::new();
    for (index, line) in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let parse = |field: &str, name: &str| -> Result<f64, SpectrumError> {
            field.trim().parse::<f64>().map_err(|_| SpectrumError::CsvParse {
                line: index + 1,
                detail: format!("bad {name}: {field:?}"),
            })
        };
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 4 {
            return Err(SpectrumError::CsvParse {
                line: index + 1,
                detail: format!("expected 4 columns, got {}", cols.len()),
            });
        }
        bins.push(RadialBin {
            rho_center: parse(cols[0], "rho_per_um")?,
            mean_energy_density: parse(cols[1], "k1_um2")?,
            count: cols[2].trim().parse::<usize>().map_err(|_| {
                SpectrumError::CsvParse {
                    line: index + 1,
                    detail: format!("bad count: {:?}", cols[2]),
                }
            })?,
            error_weight: parse(cols[3], "error_weight")?,
        });
    }
    let delta_rho = match bins.len() {
        0 => 0.0,
        1 => 2.0 * bins[0].rho_center,
        _ => bins
            .windows(2)
            .map(|w| w[1].rho_center - w[0].rho_center)
            .fold(f64::INFINITY, f64::min),
    };
    Ok(RadialSpectrum { delta_rho, bins })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{FieldKind, ScalarField};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const TAU: f64 = 2.0 * std::f64::consts::PI;

    fn cosine_field(width: usize, height: usize, pixel: f64, waves: &[(usize, usize, f64)]) -> ScalarField {
        ScalarField::from_fn(width, height, pixel, FieldKind::WeightField, |x, y| {
            waves
                .iter()
                .map(|&(kx, ky, amp)| {
                    amp * (TAU * (kx as f64 * x as f64 / width as f64
                        + ky as f64 * y as f64 / height as f64))
                        .cos()
                })
                .sum()
        })
        .unwrap()
    }

    fn noise_field(width: usize, height: usize, pixel: f64, seed: u64) -> ScalarField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        ScalarField::new(
            width,
            height,
            pixel,
            FieldKind::WeightField,
            (0..width * height).map(|_| rng.random_range(-1.0..1.0)).collect(),
        )
        .unwrap()
    }

    fn no_window() -> WindowSpec {
        WindowSpec {
            kind: WindowKind::None,
            energy_compensation: false,
        }
    }

    #[test]
    fn hann_window_shape_and_compensation() {
        let flat = ScalarField::new(8, 8, 1.0, FieldKind::WeightField, vec![1.0; 64]).unwrap();
        let raw = apply_window(
            &flat,
            &WindowSpec {
                kind: WindowKind::Hann,
                energy_compensation: false,
            },
        );
        assert_eq!(raw.get(0, 0), 0.0);
        assert_eq!(raw.get(7, 7), 0.0);
        let mid = 0.5 * (1.0 - (TAU * 3.0 / 7.0).cos());
        assert!((raw.get(3, 3) - mid * mid).abs() < 1e-15);

        let comp = apply_window(&flat, &WindowSpec::default());
        let ms = comp.values().iter().map(|v| v * v).sum::<f64>() / 64.0;
        assert!((ms - 1.0).abs() < 1e-12, "windowed mean square {ms}");
    }

    #[test]
    fn none_window_is_identity_and_retags_normalized() {
        let f = noise_field(6, 6, 1.0, 5);
        let (n, _, _) = crate::weight::normalize_relative_weight(&f).unwrap();
        let out = apply_window(&n, &no_window());
        assert_eq!(out.kind(), FieldKind::WeightField);
        assert_eq!(out.values(), n.values());
    }

    #[test]
    fn two_pixel_hann_axis_degenerates_to_zero_fluctuation() {
        let f = noise_field(2, 8, 1.0, 9);
        let err = power_spectrum_2d(&f, &WindowSpec::default());
        assert!(matches!(err, Err(SpectrumError::ZeroFluctuation)));
    }

    #[test]
    fn single_cosine_lands_in_two_conjugate_bins() {
        let f = cosine_field(32, 32, 1.0, &[(4, 0, 2.0)]);
        let ps = power_spectrum_2d(&f, &no_window()).unwrap();
        // amplitude 2 cosine: variance 2, split evenly between (4,0) and (-4,0)
        assert!((ps.total_fluctuation_energy() - 2.0).abs() < 1e-12);
        assert!((ps.energies()[4] - 0.5).abs() < 1e-12);
        assert!((ps.energies()[32 - 4] - 0.5).abs() < 1e-12);
        assert!(ps.dc_energy().abs() < 1e-20);
        let sum: f64 = ps.energies().iter().sum();
        assert!((sum - 1.0).abs() < 1e-12);
    }

    #[test]
    fn dc_bin_holds_squared_mean() {
        let f = cosine_field(16, 16, 1.0, &[(3, 1, 1.0)])
            .map(FieldKind::WeightField, |v| v + 2.5)
            .unwrap();
        let ps = power_spectrum_2d(&f, &no_window()).unwrap();
        assert!((ps.dc_energy() - 6.25).abs() < 1e-10);
        assert!((ps.total_fluctuation_energy() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn parseval_non_dc_sum_matches_variance() {
        let f = noise_field(24, 40, 2.0, 31);
        let ps = power_spectrum_2d(&f, &no_window()).unwrap();
        let (_, sd) = f.moments();
        let rel = (ps.total_fluctuation_energy() - sd * sd).abs() / (sd * sd);
        assert!(rel < 1e-12, "relative parseval error {rel}");
    }

    #[test]
    fn spectrum_is_hermitian_for_real_input() {
        let f = noise_field(12, 10, 1.5, 77);
        let ps = power_spectrum_2d(&f, &no_window()).unwrap();
        for j in 0..10 {
            for i in 0..12 {
                let mirror = ps.energies()[((10 - j) % 10) * 12 + ((12 - i) % 12)];
                let here = ps.energies()[j * 12 + i];
                assert!((here - mirror).abs() <= 1e-12 * here.max(1e-300));
            }
        }
    }

    #[test]
    fn frequency_axes_are_signed_and_scaled() {
        let f = noise_field(8, 6, 2.0, 1);
        let ps = power_spectrum_2d(&f, &no_window()).unwrap();
        assert_eq!(ps.df_x(), 1.0 / 16.0);
        assert_eq!(ps.df_y(), 1.0 / 12.0);
        assert_eq!(ps.freq_x(1), 1.0 / 16.0);
        assert_eq!(ps.freq_x(7), -1.0 / 16.0);
        assert_eq!(ps.freq_x(4), -4.0 / 16.0);
        assert_eq!(ps.freq_y(3), -3.0 / 12.0);
        assert!((ps.rho(1, 0) - TAU / 16.0).abs() < 1e-15);
    }

    #[test]
    fn cloudiness_band_edges_are_half_open() {
        let f = cosine_field(32, 32, 1.0, &[(4, 0, 1.0), (8, 0, 1.0)]);
        let ps = power_spectrum_2d(&f, &no_window()).unwrap();
        let rho4 = TAU * 4.0 / 32.0;
        let rho8 = TAU * 8.0 / 32.0;
        let lower = cloudiness_index(&ps, &FrequencyBand::new(rho4, rho8)).unwrap();
        assert!((lower - 0.5).abs() < 1e-12, "lo edge in, hi edge out: {lower}");
        let both = cloudiness_index(&ps, &FrequencyBand::new(rho4, rho8 * 1.0001)).unwrap();
        assert!((both - 1.0).abs() < 1e-12);
        let neither =
            cloudiness_index(&ps, &FrequencyBand::new(rho8 * 1.0001, rho8 * 1.5)).unwrap();
        assert!(neither < 1e-12, "only FFT roundoff may leak: {neither}");
    }

    #[test]
    fn cloudiness_is_additive_over_adjacent_bands() {
        let f = noise_field(48, 48, 1.0, 123);
        let ps = power_spectrum_2d(&f, &WindowSpec::default()).unwrap();
        let (a, b, c) = (0.5, 1.2, 2.4);
        let left = cloudiness_index(&ps, &FrequencyBand::new(a, b)).unwrap();
        let right = cloudiness_index(&ps, &FrequencyBand::new(b, c)).unwrap();
        let whole = cloudiness_index(&ps, &FrequencyBand::new(a, c)).unwrap();
        assert!((left + right - whole).abs() < 1e-12);
        assert!((0.0..=1.0).contains(&whole));
    }

    #[test]
    fn energy_ratio_of_two_cosines_is_exact() {
        let f = cosine_field(64, 64, 1.0, &[(3, 0, 3.0), (0, 13, 1.0)]);
        let ps = power_spectrum_2d(&f, &no_window()).unwrap();
        let rho3 = TAU * 3.0 / 64.0;
        let band = FrequencyBand::new(rho3 * 0.9, rho3 * 1.1);
        let cli = cloudiness_index(&ps, &band).unwrap();
        assert!((cli - 0.9).abs() < 1e-12, "9:1 energy split, got {cli}");
    }

    #[test]
    fn band_validation_statuses_and_messages() {
        // 1024 px at 7 um: half diagonal 5068.6 um, nyquist wavelength 14 um
        let inverted = valid_band(&FrequencyBand::new(0.1, 0.1), 1024, 1024, 7.0);
        assert_eq!(inverted.status, BandStatus::Inverted);
        assert!(inverted.status_message().unwrap().contains("inverted"));

        let too_low = valid_band(&FrequencyBand::new(TAU / 6000.0, 0.1), 1024, 1024, 7.0);
        assert_eq!(too_low.status, BandStatus::BelowLowFrequencyLimit);
        assert!(too_low
            .status_message()
            .unwrap()
            .contains("half-diagonal"));

        let beyond = valid_band(&FrequencyBand::new(0.02, 0.5), 1024, 1024, 7.2);
        assert_eq!(beyond.status, BandStatus::AboveNyquist);
        let msg = beyond.status_message().unwrap();
        assert!(msg.contains("0.43633"), "nyquist limit spelled out: {msg}");

        let ok = valid_band(&FrequencyBand::new(0.02, 0.1), 1024, 1024, 7.0);
        assert_eq!(ok.status, BandStatus::Valid);
        assert!(ok.warnings.is_empty());
        assert!((ok.wavelength_lo - 62.83185307179586).abs() < 1e-12);
        assert!((ok.wavelength_hi - 314.1592653589793).abs() < 1e-12);
    }

    #[test]
    fn band_validation_soft_warnings() {
        let long = valid_band(&FrequencyBand::new(TAU / 2000.0, 0.1), 1024, 1024, 7.0);
        assert_eq!(long.status, BandStatus::Valid);
        assert_eq!(long.warnings.len(), 1);
        assert!(long.warnings[0].contains("few annuli"));

        let short = valid_band(&FrequencyBand::new(0.02, TAU / 20.0), 1024, 1024, 7.0);
        assert_eq!(short.status, BandStatus::Valid);
        assert_eq!(short.warnings.len(), 1);
        assert!(short.warnings[0].contains("Nyquist"));
    }

    #[test]
    fn cloudiness_rejects_only_inverted_bands() {
        let f = noise_field(32, 32, 7.2, 2);
        let ps = power_spectrum_2d(&f, &WindowSpec::default()).unwrap();
        for (lo, hi) in [(0.1, 0.1), (0.2, 0.1), (0.0, 0.1), (-0.1, 0.1), (f64::NAN, 0.1)] {
            let err = cloudiness_index(&ps, &FrequencyBand::new(lo, hi)).unwrap_err();
            assert!(matches!(
                err,
                SpectrumError::InvalidBand {
                    status: BandStatus::Inverted,
                    ..
                }
            ));
        }
        // geometric limits are advisory here: the full grid band sums to 1
        let full = FrequencyBand::new(1e-6, 10.0);
        let cli = cloudiness_index(&ps, &full).unwrap();
        assert!((cli - 1.0).abs() < 1e-12, "full band sums to {cli}");
    }

    #[test]
    fn radial_mean_reconstructs_total_energy() {
        let f = noise_field(36, 28, 1.0, 404);
        let ps = power_spectrum_2d(&f, &WindowSpec::default()).unwrap();
        let rs = radial_mean(&ps);
        assert!(rs.delta_rho > 0.0);
        let cell = ps.df_x() * ps.df_y();
        let total: f64 = rs
            .bins
            .iter()
            .map(|b| b.mean_energy_density * b.count as f64 * cell)
            .sum();
        assert!((total - 1.0).abs() < 1e-10, "reconstructed {total}");
        let n_bins: usize = rs.bins.iter().map(|b| b.count).sum();
        assert_eq!(n_bins, 36 * 28 - 1);
        for pair in rs.bins.windows(2) {
            assert!(pair[0].rho_center < pair[1].rho_center);
            assert!(pair[0].error_weight <= pair[1].error_weight + 1e-12);
        }
    }

    #[test]
    fn radial_mean_isolates_a_single_ring() {
        let f = cosine_field(64, 64, 1.0, &[(8, 0, 1.0)]);
        let ps = power_spectrum_2d(&f, &no_window()).unwrap();
        let rs = radial_mean(&ps);
        let rho8 = TAU * 8.0 / 64.0;
        let hot: Vec<&RadialBin> = rs
            .bins
            .iter()
            .filter(|b| b.mean_energy_density > 1e-12)
            .collect();
        assert_eq!(hot.len(), 1);
        let bin = hot[0];
        // the ring sits exactly on a bin boundary, so allow the half
        // width with a whisker of roundoff
        assert!((bin.rho_center - rho8).abs() <= rs.delta_rho * 0.500_000_1);
        let cell = ps.df_x() * ps.df_y();
        assert!((bin.mean_energy_density * bin.count as f64 * cell - 1.0).abs() < 1e-12);
    }

    #[test]
    fn erosion_weight_limits_and_square_closed_form() {
        assert_eq!(erosion_weight(100, 50, 1.0, 0.0), 1.0);
        let diag = (100.0f64 * 100.0 + 50.0 * 50.0).sqrt();
        assert_eq!(erosion_weight(100, 50, 1.0, diag), 0.0);
        assert_eq!(erosion_weight(100, 50, 1.0, diag * 2.0), 0.0);
        // square field, gamma equal to the side: mean over theta of
        // (1-|cos|)(1-|sin|) = 1 - 3/pi
        let expected = 1.0 - 3.0 / std::f64::consts::PI;
        let got = erosion_weight(128, 128, 1.0, 128.0);
        assert!((got - expected).abs() < 1e-4, "got {got}, want {expected}");
        let mut prev = 1.0;
        for step in 1..=20 {
            let w = erosion_weight(100, 50, 1.0, diag * step as f64 / 20.0);
            assert!(w <= prev + 1e-12);
            prev = w;
        }
    }

    #[test]
    fn error_weight_is_erosion_at_the_band_wavelength() {
        let by_rho = error_weight(256, 256, 7.0, 0.05);
        let by_gamma = erosion_weight(256, 256, 7.0, TAU / 0.05);
        assert_eq!(by_rho, by_gamma);
        assert_eq!(error_weight(256, 256, 7.0, 0.0), 0.0);
        assert_eq!(error_weight(256, 256, 7.0, -1.0), 0.0);
    }

    #[test]
    fn window_integral_variance_limits_and_cosine_transfer() {
        let f = cosine_field(64, 64, 2.0, &[(4, 0, 1.0)]);
        let ps = power_spectrum_2d(&f, &no_window()).unwrap();
        let tiny = window_integral_variance(&ps, 1e-9).unwrap();
        assert!((tiny - 1.0).abs() < 1e-12);
        let side = 24.0;
        let fx = 4.0 / 128.0;
        let expected = sinc(std::f64::consts::PI * fx * side).powi(2);
        let got = window_integral_variance(&ps, side).unwrap();
        assert!((got - expected).abs() < 1e-12);
        let full = window_integral_variance(&ps, 128.0).unwrap();
        assert!(full < 0.01, "field-size window keeps {full}");
    }

    #[test]
    fn window_integral_variance_validates_side() {
        let f = noise_field(16, 16, 2.0, 8);
        let ps = power_spectrum_2d(&f, &WindowSpec::default()).unwrap();
        assert!(matches!(
            window_integral_variance(&ps, 0.0),
            Err(SpectrumError::BadWindowSide(_))
        ));
        assert!(matches!(
            window_integral_variance(&ps, 33.0),
            Err(SpectrumError::WindowTooLarge { .. })
        ));
        let mut prev = 2.0;
        for side in [0.5, 2.0, 8.0, 16.0, 32.0] {
            let v = window_integral_variance(&ps, side).unwrap();
            assert!(v <= prev, "monotone in side: {v} after {prev}");
            prev = v;
        }
    }

    #[test]
    fn radial_csv_roundtrip_and_format() {
        let f = noise_field(40, 40, 7.0, 55);
        let ps = power_spectrum_2d(&f, &WindowSpec::default()).unwrap();
        let rs = radial_mean(&ps);
        let mut buf = Vec::new();
        write_radial_csv(&rs, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("rho_per_um,k1_um2,count,error_weight\n"));
        assert!(!text.contains('e') || !text.contains('E'), "no exponents");
        let parsed = parse_radial_csv(io::BufReader::new(&buf[..])).unwrap();
        assert_eq!(parsed.bins.len(), rs.bins.len());
        for (a, b) in rs.bins.iter().zip(&parsed.bins) {
            assert!((a.rho_center - b.rho_center).abs() <= 1e-9 * a.rho_center.abs());
            assert!(
                (a.mean_energy_density - b.mean_energy_density).abs()
                    <= 1e-8 * a.mean_energy_density.abs().max(1e-12)
            );
            assert_eq!(a.count, b.count);
            assert!((a.error_weight - b.error_weight).abs() <= 1e-8);
        }
        assert!((parsed.delta_rho - rs.delta_rho).abs() <= 1e-8 * rs.delta_rho);
    }

    #[test]
    fn radial_csv_rejects_garbage() {
        let bad_header = "rho,k1\n0.1,2.0\n";
        assert!(matches!(
            parse_radial_csv(io::BufReader::new(bad_header.as_bytes())),
            Err(SpectrumError::CsvParse { line: 1, .. })
        ));
        let bad_row = "rho_per_um,k1_um2,count,error_weight\n0.1,x,3,0.5\n";
        assert!(matches!(
            parse_radial_csv(io::BufReader::new(bad_row.as_bytes())),
            Err(SpectrumError::CsvParse { line: 2, .. })
        ));
        let short_row = "rho_per_um,k1_um2,count,error_weight\n0.1,2.0\n";
        assert!(matches!(
            parse_radial_csv(io::BufReader::new(short_row.as_bytes())),
            Err(SpectrumError::CsvParse { line: 2, .. })
        ));
    }

    #[test]
    fn decimal_formatter_keeps_ten_significant_digits() {
        assert_eq!(format_decimal(0.0), "0.0");
        assert_eq!(format_decimal(0.123456789123), "0.1234567891");
        assert_eq!(format_decimal(123.456789123), "123.4567891");
        assert_eq!(format_decimal(0.0001234567891), "0.0001234567891");
        let big = format_decimal(1.23456789e10);
        assert_eq!(big, "12345678900");
        for v in [0.4363323129985824, 62.83185307179586, 1e-7] {
            let parsed: f64 = format_decimal(v).parse().unwrap();
            assert!((parsed - v).abs() <= 1e-9 * v.abs());
        }
    }
}
