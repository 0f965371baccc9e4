//! Image input and output.
//!
//! Gray images load from binary PGM (P5, 8- or 16-bit) or grayscale PNG.
//! Fields save back to either format through a linear rescale to the
//! integer range; the rescale parameters go to a JSON sidecar next to the
//! image (`<name>.json`) so the field can be restored up to quantization.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::field::{FieldError, FieldKind, ScalarField};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BitDepth {
    Eight,
    Sixteen,
}

impl BitDepth {
    /// Largest representable sample value.
    pub fn levels(self) -> u32 {
        match self {
            BitDepth::Eight => 255,
            BitDepth::Sixteen => 65535,
        }
    }

    pub fn bits(self) -> u8 {
        match self {
            BitDepth::Eight => 8,
            BitDepth::Sixteen => 16,
        }
    }

    fn from_bits(bits: u8) -> Option<Self> {
        match bits {
            8 => Some(BitDepth::Eight),
            16 => Some(BitDepth::Sixteen),
            _ => None,
        }
    }
}

/// Rescale parameters recorded when a field is saved.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SaveInfo {
    pub min: f64,
    pub max: f64,
    pub depth: BitDepth,
}

#[derive(Debug, Serialize, Deserialize)]
struct Sidecar {
    min: f64,
    max: f64,
    depth: u8,
}

#[derive(Debug, Error)]
pub enum IoError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("unsupported image format: {0} (expected .png, .pgm, or .pnm)")]
    UnsupportedFormat(PathBuf),
    #[error("{path}: {detail}")]
    Malformed { path: PathBuf, detail: String },
    #[error("{path}: not a single-channel grayscale image ({got})")]
    NotGrayscale { path: PathBuf, got: String },
    #[error("png error on {path}: {source}")]
    Png {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },
    #[error("sidecar {path}: {detail}")]
    Sidecar { path: PathBuf, detail: String },
    #[error(transparent)]
    Field(#[from] FieldError),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> IoError + '_ {
    move |source| IoError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn extension_of(path: &Path) -> String {
    path.extension()
        .map(|e| e.to_string_lossy().to_ascii_lowercase())
        .unwrap_or_default()
}

/// Path of the JSON sidecar belonging to an image path.
pub fn sidecar_path(image: &Path) -> PathBuf {
    let mut name = image.as_os_str().to_owned();
    name.push(".json");
    PathBuf::from(name)
}

/// Loads a gray image. Raw integer samples become f64 values unchanged;
/// no rescaling happens here. `pixel_size` is the physical pixel edge in
/// micrometers and must come from the caller, the formats do not carry it.
pub fn load_image(path: &Path, pixel_size: f64) -> Result<ScalarField, IoError> {
    let (width, height, values) = match extension_of(path).as_str() {
        "pgm" | "pnm" => {
            let bytes = fs::read(path).map_err(io_err(path))?;
            parse_pgm(path, &bytes)?
        }
        "png" => load_png(path)?,
        _ => return Err(IoError::UnsupportedFormat(path.to_path_buf())),
    };
    Ok(ScalarField::new(
        width,
        height,
        pixel_size,
        FieldKind::GrayImage,
        values,
    )?)
}

fn load_png(path: &Path) -> Result<(usize, usize, Vec<f64>), IoError> {
    let img = image::open(path).map_err(|source| IoError::Png {
        path: path.to_path_buf(),
        source,
    })?;
    match img {
        image::DynamicImage::ImageLuma8(buf) => {
            let (w, h) = buf.dimensions();
            let values = buf.into_raw().into_iter().map(|v| v as f64).collect();
            Ok((w as usize, h as usize, values))
        }
        image::DynamicImage::ImageLuma16(buf) => {
            let (w, h) = buf.dimensions();
            let values = buf.into_raw().into_iter().map(|v| v as f64).collect();
            Ok((w as usize, h as usize, values))
        }
        other => Err(IoError::NotGrayscale {
            path: path.to_path_buf(),
            got: format!("{:?}", other.color()),
        }),
    }
}

/// Saves a field as an 8- or 16-bit gray image plus a JSON sidecar.
///
/// Values map linearly, min to 0 and max to the top level; a constant
/// field maps to mid-gray. The sidecar records `{min, max, depth}` so
/// [`restore_saved_field`] can invert the mapping.
pub fn save_image(field: &ScalarField, path: &Path, depth: BitDepth) -> Result<SaveInfo, IoError> {
    let (min, max) = field.min_max();
    let levels = depth.levels();
    let span = max - min;
    let quantize = |v: f64| -> u32 {
        if span > 0.0 {
            let raw = ((v - min) / span * levels as f64).round();
            raw.clamp(0.0, levels as f64) as u32
        } else {
            (levels + 1) / 2
        }
    };
    match extension_of(path).as_str() {
        "pgm" | "pnm" => write_pgm(field, path, depth, &quantize)?,
        "png" => write_png(field, path, depth, &quantize)?,
        _ => return Err(IoError::UnsupportedFormat(path.to_path_buf())),
    }
    let sidecar = Sidecar {
        min,
        max,
        depth: depth.bits(),
    };
    let json = serde_json::to_string(&sidecar).expect("sidecar serializes");
    let sc_path = sidecar_path(path);
    fs::write(&sc_path, json + "\n").map_err(io_err(&sc_path))?;
    Ok(SaveInfo { min, max, depth })
}

/// Loads an image saved by [`save_image`] and undoes the linear rescale
/// using its sidecar. The result is exact up to quantization: absolute
/// error at most `(max - min) / levels`. Restored fields carry kind
/// `weight_field` since the original kind is not recorded.
pub fn restore_saved_field(path: &Path, pixel_size: f64) -> Result<ScalarField, IoError> {
    let sc_path = sidecar_path(path);
    let text = fs::read_to_string(&sc_path).map_err(io_err(&sc_path))?;
    let sidecar: Sidecar = serde_json::from_str(&text).map_err(|e| IoError::Sidecar {
        path: sc_path.clone(),
        detail: e.to_string(),
    })?;
    let depth = BitDepth::from_bits(sidecar.depth).ok_or_else(|| IoError::Sidecar {
        path: sc_path.clone(),
        detail: format!("depth must be 8 or 16, got {}", sidecar.depth),
    })?;
    if !(sidecar.min.is_finite() && sidecar.max.is_finite() && sidecar.min <= sidecar.max) {
        return Err(IoError::Sidecar {
            path: sc_path,
            detail: format!("invalid range [{}, {}]", sidecar.min, sidecar.max),
        });
    }
    let raw = load_image(path, pixel_size)?;
    let span = sidecar.max - sidecar.min;
    let scale = span / depth.levels() as f64;
    let restored = raw
        .map(FieldKind::WeightField, |v| sidecar.min + v * scale)
        .expect("restored values are finite");
    Ok(restored)
}

fn write_pgm(
    field: &ScalarField,
    path: &Path,
    depth: BitDepth,
    quantize: &dyn Fn(f64) -> u32,
) -> Result<(), IoError> {
    let mut out = format!(
        "P5\n{} {}\n{}\n",
        field.width(),
        field.height(),
        depth.levels()
    )
    .into_bytes();
    match depth {
        BitDepth::Eight => {
            out.extend(field.values().iter().map(|&v| quantize(v) as u8));
        }
        BitDepth::Sixteen => {
            for &v in field.values() {
                let q = quantize(v) as u16;
                out.extend_from_slice(&q.to_be_bytes());
            }
        }
    }
    fs::write(path, out).map_err(io_err(path))
}

fn write_png(
    field: &ScalarField,
    path: &Path,
    depth: BitDepth,
    quantize: &dyn Fn(f64) -> u32,
) -> Result<(), IoError> {
    let w = field.width() as u32;
    let h = field.height() as u32;
    let png_err = |source| IoError::Png {
        path: path.to_path_buf(),
        source,
    };
    match depth {
        BitDepth::Eight => {
            let data: Vec<u8> = field.values().iter().map(|&v| quantize(v) as u8).collect();
            let buf = image::GrayImage::from_raw(w, h, data).expect("buffer sized to field");
            buf.save(path).map_err(png_err)
        }
        BitDepth::Sixteen => {
            let data: Vec<u16> = field.values().iter().map(|&v| quantize(v) as u16).collect();
            let buf = image::ImageBuffer::<image::Luma<u16>, Vec<u16>>::from_raw(w, h, data)
                .expect("buffer sized to field");
            buf.save(path).map_err(png_err)
        }
    }
}

/// Binary PGM parser. Header tokens may be separated by any whitespace
/// and `#` comments; exactly one whitespace byte separates the maxval
/// from the sample data. Trailing bytes after the samples are ignored.
fn parse_pgm(path: &Path, bytes: &[u8]) -> Result<(usize, usize, Vec<f64>), IoError> {
    let malformed = |detail: &str| IoError::Malformed {
        path: path.to_path_buf(),
        detail: detail.to_string(),
    };
    let mut pos = 0usize;
    let token = |pos: &mut usize| -> Option<String> {
        loop {
            while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
                *pos += 1;
            }
            if *pos < bytes.len() && bytes[*pos] == b'#' {
                while *pos < bytes.len() && bytes[*pos] != b'\n' {
                    *pos += 1;
                }
                continue;
            }
            break;
        }
        let start = *pos;
        while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if *pos > start {
            Some(String::from_utf8_lossy(&bytes[start..*pos]).into_owned())
        } else {
            None
        }
    };

    let magic = token(&mut pos).ok_or_else(|| malformed("empty file"))?;
    if magic != "P5" {
        return Err(malformed(&format!(
            "expected binary PGM magic P5, got {magic:?}"
        )));
    }
    let mut header_num = |name: &str| -> Result<usize, IoError> {
        token(&mut pos)
            .ok_or_else(|| malformed(&format!("missing {name}")))?
            .parse::<usize>()
            .map_err(|_| malformed(&format!("invalid {name}")))
    };
    let width = header_num("width")?;
    let height = header_num("height")?;
    let maxval = header_num("maxval")?;
    if !(1..=65535).contains(&maxval) {
        return Err(malformed(&format!("maxval {maxval} outside 1..=65535")));
    }
    if pos >= bytes.len() || !bytes[pos].is_ascii_whitespace() {
        return Err(malformed("missing whitespace after maxval"));
    }
    pos += 1;
    let data = &bytes[pos..];
    let n = width
        .checked_mul(height)
        .ok_or_else(|| malformed("dimensions overflow"))?;
    let values = if maxval <= 255 {
        if data.len() < n {
            return Err(malformed("truncated 8-bit pixel data"));
        }
        data[..n].iter().map(|&b| b as f64).collect()
    } else {
        if data.len() < 2 * n {
            return Err(malformed("truncated 16-bit pixel data"));
        }
        data[..2 * n]
            .chunks_exact(2)
            .map(|c| u16::from_be_bytes([c[0], c[1]]) as f64)
            .collect()
    };
    Ok((width, height, values))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use tempfile::tempdir;

    fn noise_field(width: usize, height: usize, seed: u64) -> ScalarField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let values = (0..width * height)
            .map(|_| rng.random_range(-3.0..5.0))
            .collect();
        ScalarField::new(width, height, 7.0, FieldKind::WeightField, values).unwrap()
    }

    fn roundtrip(ext: &str, depth: BitDepth) {
        let dir = tempdir().unwrap();
        let path = dir.path().join(format!("f.{ext}"));
        let field = noise_field(23, 17, 11);
        let info = save_image(&field, &path, depth).unwrap();
        let restored = restore_saved_field(&path, 7.0).unwrap();
        assert_eq!(restored.width(), 23);
        assert_eq!(restored.height(), 17);
        assert_eq!(restored.kind(), FieldKind::WeightField);
        let tol = (info.max - info.min) / depth.levels() as f64;
        for (a, b) in field.values().iter().zip(restored.values()) {
            assert!((a - b).abs() <= tol, "error {} above {}", (a - b).abs(), tol);
        }
    }

    #[test]
    fn pgm_roundtrips_both_depths() {
        roundtrip("pgm", BitDepth::Eight);
        roundtrip("pgm", BitDepth::Sixteen);
    }

    #[test]
    fn png_roundtrips_both_depths() {
        roundtrip("png", BitDepth::Eight);
        roundtrip("png", BitDepth::Sixteen);
    }

    #[test]
    fn constant_field_maps_to_mid_gray_and_restores_exactly() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("c.pgm");
        let field =
            ScalarField::new(4, 4, 1.0, FieldKind::WeightField, vec![2.5; 16]).unwrap();
        save_image(&field, &path, BitDepth::Eight).unwrap();
        let raw = load_image(&path, 1.0).unwrap();
        assert!(raw.values().iter().all(|&v| v == 128.0));
        let restored = restore_saved_field(&path, 1.0).unwrap();
        assert!(restored.values().iter().all(|&v| v == 2.5));
    }

    #[test]
    fn sidecar_has_stable_key_order() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("f.pgm");
        let field = noise_field(4, 4, 3);
        save_image(&field, &path, BitDepth::Sixteen).unwrap();
        let text = fs::read_to_string(sidecar_path(&path)).unwrap();
        let keys: Vec<usize> = ["\"min\"", "\"max\"", "\"depth\""]
            .iter()
            .map(|k| text.find(k).expect("key present"))
            .collect();
        assert!(keys[0] < keys[1] && keys[1] < keys[2]);
        assert!(text.contains("\"depth\":16"));
    }

    #[test]
    fn rejects_color_png() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("rgb.png");
        let img = image::RgbImage::from_fn(8, 8, |x, y| image::Rgb([x as u8, y as u8, 7]));
        img.save(&path).unwrap();
        assert!(matches!(
            load_image(&path, 1.0),
            Err(IoError::NotGrayscale { .. })
        ));
    }

    #[test]
    fn rejects_unknown_extension_and_tiny_images() {
        let dir = tempdir().unwrap();
        assert!(matches!(
            load_image(&dir.path().join("x.tif"), 1.0),
            Err(IoError::UnsupportedFormat(_))
        ));
        let path = dir.path().join("tiny.pgm");
        fs::write(&path, b"P5\n1 1\n255\n\x42").unwrap();
        assert!(matches!(
            load_image(&path, 1.0),
            Err(IoError::Field(FieldError::TooSmall { .. }))
        ));
    }

    #[test]
    fn pgm_parser_flags_corruption() {
        let dir = tempdir().unwrap();
        let cases: [(&str, &[u8]); 4] = [
            ("magic.pgm", b"P2\n2 2\n255\n...."),
            ("trunc.pgm", b"P5\n4 4\n255\nshort"),
            ("maxval.pgm", b"P5\n2 2\n70000\n\0\0\0\0\0\0\0\0"),
            ("missing.pgm", b"P5\n2 2\n"),
        ];
        for (name, bytes) in cases {
            let path = dir.path().join(name);
            fs::write(&path, bytes).unwrap();
            assert!(
                matches!(load_image(&path, 1.0), Err(IoError::Malformed { .. })),
                "{name} should be malformed"
            );
        }
    }

    #[test]
    fn pgm_header_comments_are_skipped() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("c.pgm");
        let mut bytes = b"P5 # magic\n# a comment line\n2 2 # dims\n255\n".to_vec();
        bytes.extend_from_slice(&[0, 85, 170, 255]);
        fs::write(&path, bytes).unwrap();
        let f = load_image(&path, 2.0).unwrap();
        assert_eq!(f.values(), &[0.0, 85.0, 170.0, 255.0]);
    }

    #[test]
    fn pgm_16_bit_is_big_endian() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("be.pgm");
        let mut bytes = b"P5\n2 2\n65535\n".to_vec();
        bytes.extend_from_slice(&[0x01, 0x00, 0x00, 0x02, 0xff, 0xff, 0x00, 0x00]);
        fs::write(&path, bytes).unwrap();
        let f = load_image(&path, 1.0).unwrap();
        assert_eq!(f.values(), &[256.0, 2.0, 65535.0, 0.0]);
    }
}
