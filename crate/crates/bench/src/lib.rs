//! Shared fixtures for the pipeline benchmarks. Nothing here is part of
//! the public toolkit; the crate exists so the benches have a home in
//! the workspace.

use cloudscope_core::{FieldKind, ScalarField};

/// Deterministic value noise, cheap enough to build large fields without
/// pulling an RNG into the measured section.
pub fn noise_field(width: usize, height: usize, pixel_size: f64) -> ScalarField {
    ScalarField::from_fn(width, height, pixel_size, FieldKind::WeightField, |x, y| {
        let mut h = (x as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
            ^ (y as u64).wrapping_mul(0xC2B2_AE3D_27D4_EB4F);
        h ^= h >> 33;
        h = h.wrapping_mul(0xFF51_AFD7_ED55_8CCD);
        h ^= h >> 33;
        (h >> 11) as f64 / (1u64 << 53) as f64
    })
    .unwrap()
}
