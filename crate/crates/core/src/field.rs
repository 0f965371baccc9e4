//! 2D scalar fields on a square-pixel grid with a physical pixel size.

use thiserror::Error;

use crate::numeric::mean_and_population_stddev;

/// What the values of a [`ScalarField`] represent.
///
/// The kind gates which transforms apply: the Beer-Lambert transform
/// only accepts gray images, normalization only accepts weight-like
/// fields, and so on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FieldKind {
    /// Nonnegative gray values from a transmission image.
    GrayImage,
    /// Local areal weight, known up to offset and scale.
    WeightField,
    /// Relative local areal weight: zero mean, unit variance at the
    /// time of construction by [`crate::weight::normalize_relative_weight`].
    NormalizedWeight,
    /// Output of one of the simulation models.
    Simulated,
}

impl FieldKind {
    pub fn as_str(self) -> &'static str {
        match self {
            FieldKind::GrayImage => "gray_image",
            FieldKind::WeightField => "weight_field",
            FieldKind::NormalizedWeight => "normalized_weight",
            FieldKind::Simulated => "simulated",
        }
    }
}

#[derive(Debug, Error)]
pub enum FieldError {
    #[error("field must be at least 2x2 pixels, got {width}x{height}")]
    TooSmall { width: usize, height: usize },
    #[error("pixel size must be a positive finite length, got {0}")]
    BadPixelSize(f64),
    #[error("value buffer has length {got}, expected {width}x{height} = {expected}")]
    LengthMismatch {
        got: usize,
        width: usize,
        height: usize,
        expected: usize,
    },
    #[error("non-finite value {value} at index {index}")]
    NonFinite { index: usize, value: f64 },
    #[error("gray image has negative value {value} at index {index}")]
    NegativeGray { index: usize, value: f64 },
}

/// A row-major grid of f64 samples. `pixel_size` is the edge length of
/// one square pixel in micrometers; it fixes the frequency axes of every
/// spectrum derived from the field.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    width: usize,
    height: usize,
    pixel_size: f64,
    kind: FieldKind,
    values: Vec<f64>,
}

impl ScalarField {
    /// Builds a field from row-major values, checking the type invariants:
    /// at least 2x2 pixels, positive pixel size, finite values, and no
    /// negative values when `kind` is [`FieldKind::GrayImage`].
    pub fn new(
        width: usize,
        height: usize,
        pixel_size: f64,
        kind: FieldKind,
        values: Vec<f64>,
    ) -> Result<Self, FieldError> {
        if width < 2 || height < 2 {
            return Err(FieldError::TooSmall { width, height });
        }
        if !(pixel_size.is_finite() && pixel_size > 0.0) {
            return Err(FieldError::BadPixelSize(pixel_size));
        }
        let expected = width * height;
        if values.len() != expected {
            return Err(FieldError::LengthMismatch {
                got: values.len(),
                width,
                height,
                expected,
            });
        }
        for (index, &value) in values.iter().enumerate() {
            if !value.is_finite() {
                return Err(FieldError::NonFinite { index, value });
            }
            if kind == FieldKind::GrayImage && value < 0.0 {
                return Err(FieldError::NegativeGray { index, value });
            }
        }
        Ok(ScalarField {
            width,
            height,
            pixel_size,
            kind,
            values,
        })
    }

    /// Builds a field by evaluating `f(x, y)` at every pixel, row by row.
    pub fn from_fn(
        width: usize,
        height: usize,
        pixel_size: f64,
        kind: FieldKind,
        mut f: impl FnMut(usize, usize) -> f64,
    ) -> Result<Self, FieldError> {
        let mut values = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                values.push(f(x, y));
            }
        }
        ScalarField::new(width, height, pixel_size, kind, values)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// Number of pixels.
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Pixel edge length in micrometers.
    pub fn pixel_size(&self) -> f64 {
        self.pixel_size
    }

    pub fn kind(&self) -> FieldKind {
        self.kind
    }

    /// Row-major samples, `values[y * width + x]`.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.values[y * self.width + x]
    }

    /// Physical extent (width, height) in micrometers.
    pub fn extent(&self) -> (f64, f64) {
        (
            self.width as f64 * self.pixel_size,
            self.height as f64 * self.pixel_size,
        )
    }

    pub fn min_max(&self) -> (f64, f64) {
        let mut min = f64::INFINITY;
        let mut max = f64::NEG_INFINITY;
        for &v in &self.values {
            min = min.min(v);
            max = max.max(v);
        }
        (min, max)
    }

    pub fn mean(&self) -> f64 {
        self.moments().0
    }

    /// Mean and population standard deviation (divide by N, not N-1).
    pub fn moments(&self) -> (f64, f64) {
        mean_and_population_stddev(&self.values)
    }

    /// Same grid and values, different kind tag. The caller asserts that
    /// the target kind's constraints hold; gray images are re-checked.
    pub fn with_kind(self, kind: FieldKind) -> Result<Self, FieldError> {
        ScalarField::new(self.width, self.height, self.pixel_size, kind, self.values)
    }

    /// Applies `f` to every value, keeping grid and kind. Used by the
    /// transforms in this crate; validates the result like `new`.
    pub(crate) fn map(
        &self,
        kind: FieldKind,
        f: impl Fn(f64) -> f64,
    ) -> Result<Self, FieldError> {
        let values = self.values.iter().map(|&v| f(v)).collect();
        ScalarField::new(self.width, self.height, self.pixel_size, kind, values)
    }
}
