//! From gray images to relative local areal weight.
//!
//! Transmission through a thin fibrous layer follows Beer-Lambert, so the
//! local areal weight is proportional to `-ln(g / g0)` with `g0` the
//! incident intensity. Cloudiness only looks at relative fluctuations;
//! the absolute mass calibration cancels when the weight field is
//! normalized to zero mean and unit variance.

use thiserror::Error;

use crate::field::{FieldError, FieldKind, ScalarField};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransformMode {
    /// `w = -ln(g / g0)`.
    BeerLambert,
    /// `w = g`, for fields that are already weights.
    Linear,
}

impl TransformMode {
    pub fn as_str(self) -> &'static str {
        match self {
            TransformMode::BeerLambert => "beer_lambert",
            TransformMode::Linear => "linear",
        }
    }
}

/// What to do with zero gray values before taking the logarithm.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ZeroPolicy {
    /// Zeros are an error.
    Error,
    /// Zeros are replaced by the smallest positive gray value, with a
    /// warning. Suits sensors that clip occasional dark pixels.
    ClampToMinPositive,
}

impl ZeroPolicy {
    pub fn as_str(self) -> &'static str {
        match self {
            ZeroPolicy::Error => "error",
            ZeroPolicy::ClampToMinPositive => "clamp_to_min_positive",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransformOptions {
    pub mode: TransformMode,
    /// Incident intensity `g0`; `None` uses the maximum gray value of the
    /// image, which makes the minimum weight exactly zero.
    pub incident_intensity: Option<f64>,
    pub zero_policy: ZeroPolicy,
}

impl Default for TransformOptions {
    fn default() -> Self {
        TransformOptions {
            mode: TransformMode::BeerLambert,
            incident_intensity: None,
            zero_policy: ZeroPolicy::Error,
        }
    }
}

#[derive(Debug, Error)]
pub enum WeightError {
    #[error("expected a {expected} field, got {got}")]
    WrongKind {
        expected: &'static str,
        got: &'static str,
    },
    #[error("{count} zero gray pixels and zero policy is `error`; Beer-Lambert needs positive intensities")]
    ZeroPixels { count: usize },
    #[error("every pixel is zero; nothing to clamp to")]
    AllZero,
    #[error("incident intensity must be positive and finite, got {0}")]
    BadIncidentIntensity(f64),
    #[error("zero variance: cloudiness undefined")]
    ZeroVariance,
    #[error("need at least one field")]
    Empty,
    #[error("field {index}: geometry {got} does not match {expected}")]
    GeometryMismatch {
        index: usize,
        got: String,
        expected: String,
    },
    #[error("field {index}: kind {got} does not match {expected}")]
    KindMismatch {
        index: usize,
        got: &'static str,
        expected: &'static str,
    },
    #[error(transparent)]
    Field(#[from] FieldError),
}

/// Turns a gray image into a local areal weight field.
///
/// In Beer-Lambert mode every pixel must be positive after the zero
/// policy is applied. When `g0` is left automatic it is the maximum gray
/// value; an explicit `g0` below the maximum is allowed but produces
/// negative weights and a warning. Linear mode passes values through
/// unchanged and only retags the kind, so simulated weight fields can
/// enter the same pipeline.
///
/// Returns the weight field plus human-readable warnings.
pub fn log_attenuation(
    image: &ScalarField,
    opts: &TransformOptions,
) -> Result<(ScalarField, Vec<String>), WeightError> {
    match opts.mode {
        TransformMode::Linear => {
            let field = image.clone().with_kind(FieldKind::WeightField)?;
            Ok((field, Vec::new()))
        }
        TransformMode::BeerLambert => {
            if image.kind() != FieldKind::GrayImage {
                return Err(WeightError::WrongKind {
                    expected: FieldKind::GrayImage.as_str(),
                    got: image.kind().as_str(),
                });
            }
            if let Some(g0) = opts.incident_intensity {
                if !(g0.is_finite() && g0 > 0.0) {
                    return Err(WeightError::BadIncidentIntensity(g0));
                }
            }
            let mut warnings = Vec::new();
            let mut values = image.values().to_vec();
            let zeros = values.iter().filter(|&&v| v == 0.0).count();
            if zeros > 0 {
                match opts.zero_policy {
                    ZeroPolicy::Error => return Err(WeightError::ZeroPixels { count: zeros }),
                    ZeroPolicy::ClampToMinPositive => {
                        let min_pos = values
                            .iter()
                            .copied()
                            .filter(|&v| v > 0.0)
                            .fold(f64::INFINITY, f64::min);
                        if !min_pos.is_finite() {
                            return Err(WeightError::AllZero);
                        }
                        for v in &mut values {
                            if *v == 0.0 {
                                *v = min_pos;
                            }
                        }
                        warnings.push(format!(
                            "{zeros} zero gray pixels clamped to minimum positive value {min_pos}"
                        ));
                    }
                }
            }
            let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let g0 = opts.incident_intensity.unwrap_or(max);
            if g0 < max {
                warnings.push(format!(
                    "incident intensity {g0} is below the maximum gray value {max}; \
                     negative weights result"
                ));
            }
            for v in &mut values {
                *v = -(*v / g0).ln();
            }
            let field = ScalarField::new(
                image.width(),
                image.height(),
                image.pixel_size(),
                FieldKind::WeightField,
                values,
            )?;
            Ok((field, warnings))
        }
    }
}

/// Centers and scales a weight field to zero mean and unit variance
/// (population convention, divide by N). Returns the normalized field
/// together with the mean and standard deviation that were removed.
///
/// A constant field has no relative fluctuation to normalize and is
/// rejected with [`WeightError::ZeroVariance`].
pub fn normalize_relative_weight(
    field: &ScalarField,
) -> Result<(ScalarField, f64, f64), WeightError> {
    if field.kind() == FieldKind::GrayImage {
        return Err(WeightError::WrongKind {
            expected: "weight-like (apply log_attenuation first)",
            got: field.kind().as_str(),
        });
    }
    let (mean, sd) = field.moments();
    if sd <= 0.0 {
        return Err(WeightError::ZeroVariance);
    }
    let normalized = field.map(FieldKind::NormalizedWeight, |v| (v - mean) / sd)?;
    debug_assert!(normalized.moments().0.abs() < 1e-9);
    debug_assert!((normalized.moments().1 - 1.0).abs() < 1e-6);
    Ok((normalized, mean, sd))
}

/// Pixel-wise average of same-shaped fields. Width, height, pixel size
/// and kind must all match; summation runs in slice order so the result
/// is deterministic, and a single input comes back bit-identical.
///
/// The kind is preserved, except that averaging two or more normalized
/// fields yields a plain `weight_field`: the mean of unit-variance
/// fields is not itself unit-variance.
pub fn pixelwise_mean(fields: &[ScalarField]) -> Result<ScalarField, WeightError> {
    let first = fields.first().ok_or(WeightError::Empty)?;
    let geometry =
        |f: &ScalarField| format!("{}x{} @ {} um", f.width(), f.height(), f.pixel_size());
    for (index, f) in fields.iter().enumerate().skip(1) {
        if f.width() != first.width()
            || f.height() != first.height()
            || f.pixel_size() != first.pixel_size()
        {
            return Err(WeightError::GeometryMismatch {
                index,
                got: geometry(f),
                expected: geometry(first),
            });
        }
        if f.kind() != first.kind() {
            return Err(WeightError::KindMismatch {
                index,
                got: f.kind().as_str(),
                expected: first.kind().as_str(),
            });
        }
    }
    let n = fields.len() as f64;
    let mut acc = vec![0.0f64; first.len()];
    for f in fields {
        for (a, &v) in acc.iter_mut().zip(f.values()) {
            *a += v;
        }
    }
    for a in &mut acc {
        *a /= n;
    }
    let kind = if first.kind() == FieldKind::NormalizedWeight && fields.len() > 1 {
        FieldKind::WeightField
    } else {
        first.kind()
    };
    Ok(ScalarField::new(
        first.width(),
        first.height(),
        first.pixel_size(),
        kind,
        acc,
    )?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gray(values: Vec<f64>) -> ScalarField {
        let side = (values.len() as f64).sqrt() as usize;
        ScalarField::new(side, side, 7.0, FieldKind::GrayImage, values).unwrap()
    }

    #[test]
    fn beer_lambert_with_explicit_g0() {
        let img = gray(vec![100.0, 50.0, 100.0, 50.0]);
        let opts = TransformOptions {
            incident_intensity: Some(100.0),
            ..Default::default()
        };
        let (w, warnings) = log_attenuation(&img, &opts).unwrap();
        assert!(warnings.is_empty());
        assert_eq!(w.kind(), FieldKind::WeightField);
        assert_eq!(w.values()[0], 0.0);
        assert!((w.values()[1] - std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn auto_g0_uses_maximum_so_min_weight_is_zero() {
        let img = gray(vec![10.0, 40.0, 20.0, 80.0]);
        let (w, warnings) = log_attenuation(&img, &TransformOptions::default()).unwrap();
        assert!(warnings.is_empty());
        let (min, _) = w.min_max();
        assert_eq!(min, 0.0);
    }

    #[test]
    fn low_g0_warns_and_yields_negative_weights() {
        let img = gray(vec![10.0, 40.0, 20.0, 80.0]);
        let opts = TransformOptions {
            incident_intensity: Some(40.0),
            ..Default::default()
        };
        let (w, warnings) = log_attenuation(&img, &opts).unwrap();
        assert_eq!(warnings.len(), 1);
        assert!(warnings[0].contains("below the maximum"));
        assert!(w.values().iter().any(|&v| v < 0.0));
    }

    #[test]
    fn zero_pixels_follow_policy() {
        let img = gray(vec![0.0, 4.0, 8.0, 0.0]);
        let err = log_attenuation(&img, &TransformOptions::default());
        assert!(matches!(err, Err(WeightError::ZeroPixels { count: 2 })));

        let opts = TransformOptions {
            zero_policy: ZeroPolicy::ClampToMinPositive,
            ..Default::default()
        };
        let (w, warnings) = log_attenuation(&img, &opts).unwrap();
        assert_eq!(warnings.len(), 1);
        assert!(warnings[0].contains("2 zero gray pixels clamped"));
        assert_eq!(w.values()[0], w.values()[1]);

        let all_zero = gray(vec![0.0; 4]);
        assert!(matches!(
            log_attenuation(&all_zero, &opts),
            Err(WeightError::AllZero)
        ));
    }

    #[test]
    fn linear_mode_passes_values_through() {
        let sim = ScalarField::new(2, 2, 1.0, FieldKind::Simulated, vec![1.0, -2.0, 0.5, 3.0])
            .unwrap();
        let opts = TransformOptions {
            mode: TransformMode::Linear,
            ..Default::default()
        };
        let (w, warnings) = log_attenuation(&sim, &opts).unwrap();
        assert!(warnings.is_empty());
        assert_eq!(w.kind(), FieldKind::WeightField);
        assert_eq!(w.values(), sim.values());
    }

    #[test]
    fn beer_lambert_rejects_non_gray_input() {
        let w = ScalarField::new(2, 2, 1.0, FieldKind::WeightField, vec![1.0; 4]).unwrap();
        assert!(matches!(
            log_attenuation(&w, &TransformOptions::default()),
            Err(WeightError::WrongKind { .. })
        ));
    }

    #[test]
    fn normalize_two_value_field() {
        let f = ScalarField::new(2, 2, 1.0, FieldKind::WeightField, vec![1.0, 2.0, 1.0, 2.0])
            .unwrap();
        let (n, mean, sd) = normalize_relative_weight(&f).unwrap();
        assert_eq!(mean, 1.5);
        assert_eq!(sd, 0.5);
        assert_eq!(n.kind(), FieldKind::NormalizedWeight);
        assert_eq!(n.values(), &[-1.0, 1.0, -1.0, 1.0]);
    }

    #[test]
    fn normalize_is_scale_and_offset_invariant() {
        let f = ScalarField::new(2, 3, 1.0, FieldKind::WeightField, vec![
            0.1, 0.9, 0.4, 0.3, 0.7, 0.2,
        ])
        .unwrap();
        let g = f.map(FieldKind::WeightField, |v| 3.5 * v - 11.0).unwrap();
        let (nf, _, _) = normalize_relative_weight(&f).unwrap();
        let (ng, _, _) = normalize_relative_weight(&g).unwrap();
        for (a, b) in nf.values().iter().zip(ng.values()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn normalize_rejects_constant_and_gray() {
        let c = ScalarField::new(2, 2, 1.0, FieldKind::WeightField, vec![4.0; 4]).unwrap();
        let err = normalize_relative_weight(&c).unwrap_err();
        assert_eq!(err.to_string(), "zero variance: cloudiness undefined");
        let g = gray(vec![1.0; 4]);
        assert!(matches!(
            normalize_relative_weight(&g),
            Err(WeightError::WrongKind { .. })
        ));
    }

    #[test]
    fn mean_of_field_and_its_negation_is_zero() {
        let f = ScalarField::new(2, 2, 1.0, FieldKind::WeightField, vec![1.0, -2.0, 3.0, 4.0])
            .unwrap();
        let neg = f.map(FieldKind::WeightField, |v| -v).unwrap();
        let m = pixelwise_mean(&[f, neg]).unwrap();
        assert!(m.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn mean_of_single_field_is_bit_identical() {
        let f = ScalarField::new(2, 2, 1.0, FieldKind::GrayImage, vec![0.1, 0.2, 0.3, 0.4])
            .unwrap();
        let m = pixelwise_mean(std::slice::from_ref(&f)).unwrap();
        assert_eq!(m, f);
    }

    #[test]
    fn mean_checks_geometry_and_kind() {
        let a = ScalarField::new(2, 2, 1.0, FieldKind::WeightField, vec![0.0; 4]).unwrap();
        let b = ScalarField::new(2, 3, 1.0, FieldKind::WeightField, vec![0.0; 6]).unwrap();
        let c = ScalarField::new(2, 2, 2.0, FieldKind::WeightField, vec![0.0; 4]).unwrap();
        let d = ScalarField::new(2, 2, 1.0, FieldKind::Simulated, vec![0.0; 4]).unwrap();
        assert!(matches!(
            pixelwise_mean(&[a.clone(), b]),
            Err(WeightError::GeometryMismatch { index: 1, .. })
        ));
        assert!(matches!(
            pixelwise_mean(&[a.clone(), c]),
            Err(WeightError::GeometryMismatch { index: 1, .. })
        ));
        assert!(matches!(
            pixelwise_mean(&[a, d]),
            Err(WeightError::KindMismatch { index: 1, .. })
        ));
        assert!(matches!(pixelwise_mean(&[]), Err(WeightError::Empty)));
    }

    #[test]
    fn mean_of_normalized_fields_drops_the_normalized_tag() {
        let f = ScalarField::new(2, 2, 1.0, FieldKind::WeightField, vec![1.0, 2.0, 3.0, 4.0])
            .unwrap();
        let g = ScalarField::new(2, 2, 1.0, FieldKind::WeightField, vec![4.0, 3.0, 2.0, 1.0])
            .unwrap();
        let (nf, _, _) = normalize_relative_weight(&f).unwrap();
        let (ng, _, _) = normalize_relative_weight(&g).unwrap();
        let m = pixelwise_mean(&[nf, ng]).unwrap();
        assert_eq!(m.kind(), FieldKind::WeightField);
    }
}
