//! Quantifies the cloudiness of nonwoven and filter-media images.
//!
//! The pipeline turns a transmission image into a relative local areal
//! weight field, estimates its 2D power spectrum, and integrates the
//! normalized fluctuation energy over a band of radial angular
//! frequencies. The resulting cloudiness index is a dimensionless number
//! in [0, 1]: the fraction of basis-weight fluctuation energy carried by
//! structures in the chosen wavelength range.
//!
//! Synthetic reference images come from a Boolean fiber model (Poisson
//! segment germs dilated to fiber width) and an isotropic single-scale
//! Gaussian random field, plus weighted superpositions of the two.

pub mod batch;
pub mod field;
pub mod io;
mod numeric;
pub mod sim;
pub mod spectrum;
pub mod weight;

pub use batch::{
    analyze_set, summary_stats, write_per_image_csv, AnalysisMode, AnalyzeConfig, AverageStage,
    BatchError, CliReport, G0Setting, ImageCli, SummaryStats, TransformSummary, WindowSummary,
};
pub use field::{FieldError, FieldKind, ScalarField};
pub use io::{load_image, restore_saved_field, save_image, sidecar_path, BitDepth, IoError, SaveInfo};
pub use sim::{
    simulate_bessel_grf, simulate_preset, simulate_segment_field, superpose,
    to_transmission_image, BesselGrfParams, SegmentModelParams, SimError, SimPreset,
    SuperpositionSpec,
};
pub use spectrum::{
    apply_window, cloudiness_index, erosion_weight, error_weight, parse_radial_csv,
    power_spectrum_2d, radial_mean, valid_band, window_integral_variance, write_radial_csv,
    BandStatus, BandValidation, FrequencyBand, PowerSpectrum2D, RadialBin, RadialSpectrum,
    SpectrumError, WindowKind, WindowSpec,
};
pub use weight::{
    log_attenuation, normalize_relative_weight, pixelwise_mean, TransformMode, TransformOptions,
    WeightError, ZeroPolicy,
};
