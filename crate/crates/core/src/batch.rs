//! Multi-image analysis and the JSON report.
//!
//! A set of same-geometry images runs through transform, normalization,
//! spectrum, and index per image, and optionally once more as a
//! pixel-wise aggregate. The report serializes with a fixed key order so
//! repeated runs produce byte-identical JSON.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::field::ScalarField;
use crate::spectrum::{
    cloudiness_index, power_spectrum_2d, valid_band, FrequencyBand, SpectrumError, WindowSpec,
};
use crate::weight::{
    log_attenuation, normalize_relative_weight, pixelwise_mean, TransformMode, TransformOptions,
    WeightError,
};

/// Which indices a run reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AnalysisMode {
    /// One index per image.
    PerImage,
    /// One index for the pixel-wise mean of the set.
    PixelwiseMean,
    /// Both of the above.
    Both,
}

/// Where the pixel-wise average happens relative to the log transform.
/// Averaging transmission images first treats the stack like one longer
/// exposure; averaging weight fields first averages the physical masses.
/// The two disagree when the attenuation nonlinearity matters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AverageStage {
    BeforeLog,
    AfterLog,
}

#[derive(Debug, Clone)]
pub struct AnalyzeConfig {
    pub transform: TransformOptions,
    pub window: WindowSpec,
    pub band: FrequencyBand,
    pub mode: AnalysisMode,
    pub average_stage: AverageStage,
}

impl Default for AnalyzeConfig {
    fn default() -> Self {
        AnalyzeConfig {
            transform: TransformOptions::default(),
            window: WindowSpec::default(),
            band: FrequencyBand::new(0.02, 0.10),
            mode: AnalysisMode::Both,
            average_stage: AverageStage::BeforeLog,
        }
    }
}

#[derive(Debug, Error)]
pub enum BatchError {
    #[error("need at least one image")]
    Empty,
    #[error("image {id}: geometry {got} does not match {expected}")]
    GeometryMismatch {
        id: String,
        got: String,
        expected: String,
    },
    #[error("invalid frequency band: {detail}")]
    InvalidBand { detail: String },
    #[error("image {id}: {source}")]
    Weight {
        id: String,
        #[source]
        source: WeightError,
    },
    #[error("image {id}: {source}")]
    Spectrum {
        id: String,
        #[source]
        source: SpectrumError,
    },
    #[error("summary statistics need at least one value")]
    NoValues,
}

/// Window settings echoed in the report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowSummary {
    pub kind: String,
    pub energy_compensation: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum G0Setting {
    Auto(String),
    Fixed(f64),
}

/// Transform settings echoed in the report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransformSummary {
    pub mode: String,
    pub g0: G0Setting,
    pub zero_policy: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageCli {
    pub id: String,
    pub cli: f64,
}

/// Five-number summary plus moments of the per-image indices. `stddev`
/// is the sample standard deviation (n - 1); quartiles use the inclusive
/// median-of-halves rule and need at least three values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryStats {
    pub mean: f64,
    pub stddev: f64,
    pub min: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q1: Option<f64>,
    pub median: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q3: Option<f64>,
    pub max: f64,
}

/// Full result of an analysis run. Field order here is the JSON key
/// order; serialization is deterministic byte for byte given the same
/// inputs and configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CliReport {
    pub n_images: usize,
    pub band_rho_per_um: [f64; 2],
    pub window: WindowSummary,
    pub transform: TransformSummary,
    pub per_image: Vec<ImageCli>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub aggregate_cli: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stats: Option<SummaryStats>,
    pub warnings: Vec<String>,
}

impl CliReport {
    /// Pretty JSON with a trailing newline.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

fn pipeline_cli(
    id: &str,
    image: &ScalarField,
    config: &AnalyzeConfig,
) -> Result<(f64, Vec<String>), BatchError> {
    let wrap_w = |source| BatchError::Weight {
        id: id.to_string(),
        source,
    };
    let wrap_s = |source| BatchError::Spectrum {
        id: id.to_string(),
        source,
    };
    let (weight, warnings) = log_attenuation(image, &config.transform).map_err(wrap_w)?;
    let (normalized, _, _) = normalize_relative_weight(&weight).map_err(wrap_w)?;
    let ps = power_spectrum_2d(&normalized, &config.window).map_err(wrap_s)?;
    let cli = cloudiness_index(&ps, &config.band).map_err(wrap_s)?;
    Ok((cli, warnings))
}

fn aggregate_cli_at(
    items: &[(String, ScalarField)],
    config: &AnalyzeConfig,
    stage: AverageStage,
) -> Result<(f64, Vec<String>), BatchError> {
    const AGG_ID: &str = "<pixelwise mean>";
    match stage {
        AverageStage::BeforeLog => {
            let fields: Vec<ScalarField> = items.iter().map(|(_, f)| f.clone()).collect();
            let mean = pixelwise_mean(&fields).map_err(|source| BatchError::Weight {
                id: AGG_ID.to_string(),
                source,
            })?;
            pipeline_cli(AGG_ID, &mean, config)
        }
        AverageStage::AfterLog => {
            let mut weights = Vec::with_capacity(items.len());
            let mut warnings = Vec::new();
            for (id, image) in items {
                let (w, mut warns) =
                    log_attenuation(image, &config.transform).map_err(|source| {
                        BatchError::Weight {
                            id: id.clone(),
                            source,
                        }
                    })?;
                warnings.append(&mut warns);
                weights.push(w);
            }
            let wrap = |source| BatchError::Weight {
                id: AGG_ID.to_string(),
                source,
            };
            let mean = pixelwise_mean(&weights).map_err(wrap)?;
            let (normalized, _, _) = normalize_relative_weight(&mean).map_err(wrap)?;
            let ps = power_spectrum_2d(&normalized, &config.window).map_err(|source| {
                BatchError::Spectrum {
                    id: AGG_ID.to_string(),
                    source,
                }
            })?;
            let cli = cloudiness_index(&ps, &config.band).map_err(|source| {
                BatchError::Spectrum {
                    id: AGG_ID.to_string(),
                    source,
                }
            })?;
            Ok((cli, warnings))
        }
    }
}

/// Analyzes a set of identically sized images and assembles the report.
///
/// The band is validated against the common geometry up front; hard
/// violations (wavelengths beyond half the diagonal or under two pixels)
/// are errors, soft ones become report warnings. Per-image pipelines run
/// in parallel but the report content is independent of scheduling.
///
/// When an aggregate is requested and the transform is logarithmic, the
/// index is computed for both averaging stages; if they differ by more
/// than one percentage point a warning records both values, and the
/// configured stage's value is reported.
pub fn analyze_set(
    items: &[(String, ScalarField)],
    config: &AnalyzeConfig,
) -> Result<CliReport, BatchError> {
    let first = &items.first().ok_or(BatchError::Empty)?.1;
    let geometry =
        |f: &ScalarField| format!("{}x{} @ {} um", f.width(), f.height(), f.pixel_size());
    for (id, f) in items {
        if f.width() != first.width()
            || f.height() != first.height()
            || f.pixel_size() != first.pixel_size()
        {
            return Err(BatchError::GeometryMismatch {
                id: id.clone(),
                got: geometry(f),
                expected: geometry(first),
            });
        }
    }
    let validation = valid_band(&config.band, first.width(), first.height(), first.pixel_size());
    if let Some(detail) = validation.status_message() {
        return Err(BatchError::InvalidBand { detail });
    }
    let mut warnings = validation.warnings.clone();

    let mut per_image = Vec::new();
    if config.mode != AnalysisMode::PixelwiseMean {
        let results: Vec<Result<(f64, Vec<String>), BatchError>> = items
            .par_iter()
            .map(|(id, image)| pipeline_cli(id, image, config))
            .collect();
        for ((id, _), result) in items.iter().zip(results) {
            let (cli, image_warnings) = result?;
            warnings.extend(image_warnings.into_iter().map(|w| format!("{id}: {w}")));
            per_image.push(ImageCli {
                id: id.clone(),
                cli,
            });
        }
    }

    let aggregate_cli = if config.mode != AnalysisMode::PerImage {
        let (value, agg_warnings) = aggregate_cli_at(items, config, config.average_stage)?;
        warnings.extend(
            agg_warnings
                .into_iter()
                .map(|w| format!("pixelwise mean: {w}")),
        );
        if config.transform.mode == TransformMode::BeerLambert && items.len() > 1 {
            let other_stage = match config.average_stage {
                AverageStage::BeforeLog => AverageStage::AfterLog,
                AverageStage::AfterLog => AverageStage::BeforeLog,
            };
            let (other, _) = aggregate_cli_at(items, config, other_stage)?;
            if (value - other).abs() > 0.01 {
                let (before, after) = match config.average_stage {
                    AverageStage::BeforeLog => (value, other),
                    AverageStage::AfterLog => (other, value),
                };
                warnings.push(format!(
                    "aggregate index depends on averaging stage: {before:.4} when averaging \
                     transmission images, {after:.4} when averaging weight fields; the \
                     attenuation nonlinearity matters at this contrast"
                ));
            }
        }
        Some(value)
    } else {
        None
    };

    let stats = if per_image.is_empty() {
        None
    } else {
        let values: Vec<f64> = per_image.iter().map(|r| r.cli).collect();
        Some(summary_stats(&values)?)
    };

    Ok(CliReport {
        n_images: items.len(),
        band_rho_per_um: [config.band.rho_lo, config.band.rho_hi],
        window: WindowSummary {
            kind: config.window.kind.as_str().to_string(),
            energy_compensation: config.window.energy_compensation,
        },
        transform: TransformSummary {
            mode: config.transform.mode.as_str().to_string(),
            g0: match config.transform.incident_intensity {
                None => G0Setting::Auto("auto".to_string()),
                Some(v) => G0Setting::Fixed(v),
            },
            zero_policy: config.transform.zero_policy.as_str().to_string(),
        },
        per_image,
        aggregate_cli,
        stats,
        warnings,
    })
}

fn median_of(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    }
}

/// Five-number summary of a non-empty value list. Quartiles follow the
/// inclusive median-of-halves rule (each half contains the median when
/// the count is odd) and are reported from three values up.
pub fn summary_stats(values: &[f64]) -> Result<SummaryStats, BatchError> {
    if values.is_empty() {
        return Err(BatchError::NoValues);
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let mean = crate::numeric::kahan_sum(sorted.iter().copied()) / n as f64;
    let stddev = if n > 1 {
        let ss = crate::numeric::kahan_sum(sorted.iter().map(|v| (v - mean) * (v - mean)));
        (ss / (n - 1) as f64).sqrt()
    } else {
        0.0
    };
    let (q1, q3) = if n >= 3 {
        let lower = &sorted[..n.div_ceil(2)];
        let upper = &sorted[n / 2..];
        (Some(median_of(lower)), Some(median_of(upper)))
    } else {
        (None, None)
    };
    Ok(SummaryStats {
        mean,
        stddev,
        min: sorted[0],
        q1,
        median: median_of(&sorted),
        q3,
        max: sorted[n - 1],
    })
}

/// Writes per-image indices as a two-column CSV (`id,cli`).
pub fn write_per_image_csv(
    report: &CliReport,
    out: &mut dyn std::io::Write,
) -> std::io::Result<()> {
    writeln!(out, "id,cli")?;
    for row in &report.per_image {
        writeln!(out, "{},{}", row.id, row.cli)?;
    }
    Ok(())
}
