//! Lossless image files.
//!
//! Real images are stored as integer codes: samples are rounded to the nearest
//! code and clamped to the bit depth, and loading returns the codes as `f64`.
//! Quantize first (see [`crate::grid::QuantizationSpec`]) when samples are not
//! already codes.
//!
//! Complex images use a raw planar format: one JSON header line
//! `{"width":W,"height":H,"layout":"planar","dtype":"f32le"}` terminated by
//! `\n`, then `W*H` little-endian `f32` real parts followed by `W*H`
//! imaginary parts.

use std::fs;
use std::io::{BufReader, Cursor, Write};
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{ComplexImage, Mask, RealImage};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BitDepth {
    #[serde(rename = "8")]
    Eight,
    #[serde(rename = "16")]
    Sixteen,
}

impl BitDepth {
    pub fn bits(self) -> u32 {
        match self {
            BitDepth::Eight => 8,
            BitDepth::Sixteen => 16,
        }
    }

    pub fn max_code(self) -> u32 {
        (1 << self.bits()) - 1
    }

    pub fn from_bits(bits: u32) -> Result<Self> {
        match bits {
            8 => Ok(BitDepth::Eight),
            16 => Ok(BitDepth::Sixteen),
            other => Err(Error::config(format!(
                "unsupported bit depth {other}, expected 8 or 16"
            ))),
        }
    }
}

/// An image loaded from disk together with its stored bit depth.
#[derive(Debug, Clone, PartialEq)]
pub struct StoredImage {
    pub image: RealImage,
    pub depth: BitDepth,
}

impl StoredImage {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        match extension(path).as_deref() {
            Some("pgm") => {
                let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
                decode_pgm(&bytes).map_err(|m| Error::format(path, m))
            }
            Some("png") => {
                let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
                decode_png(&bytes).map_err(|m| Error::format(path, m))
            }
            _ => Err(unsupported(path)),
        }
    }
}

pub fn load_image(path: impl AsRef<Path>) -> Result<RealImage> {
    StoredImage::load(path).map(|s| s.image)
}

/// Writes `img` as grayscale PGM or PNG, chosen by the file extension.
pub fn save_image(img: &RealImage, path: impl AsRef<Path>, depth: BitDepth) -> Result<()> {
    let path = path.as_ref();
    let bytes = match extension(path).as_deref() {
        Some("pgm") => encode_pgm(img, depth),
        Some("png") => encode_png(img, depth).map_err(|m| Error::format(path, m))?,
        _ => return Err(unsupported(path)),
    };
    write_atomic(path, &bytes)
}

/// Writes a spectral or spatial mask as an 8-bit PGM with values 0 and 255.
pub fn save_mask_pgm(mask: &Mask, path: impl AsRef<Path>) -> Result<()> {
    let img = RealImage {
        width: mask.width(),
        height: mask.height(),
        data: mask
            .bits()
            .iter()
            .map(|&b| if b { 255.0 } else { 0.0 })
            .collect(),
        mask: None,
    };
    save_image(&img, path, BitDepth::Eight)
}

/// Writes a wrapped phase map with the affine map (-π, π] → [0, 255].
pub fn save_phase_pgm(phase: &RealImage, path: impl AsRef<Path>) -> Result<()> {
    use std::f64::consts::PI;
    let scaled = phase.map(|p| (p + PI) / (2.0 * PI) * 255.0)?;
    save_image(&scaled, path, BitDepth::Eight)
}

#[derive(Serialize, Deserialize)]
struct RawHeader {
    width: usize,
    height: usize,
    layout: String,
    dtype: String,
}

pub fn save_complex(img: &ComplexImage, path: impl AsRef<Path>) -> Result<()> {
    let header = RawHeader {
        width: img.width(),
        height: img.height(),
        layout: "planar".into(),
        dtype: "f32le".into(),
    };
    let mut bytes = serde_json::to_vec(&header).expect("header serializes");
    bytes.push(b'\n');
    bytes.reserve(img.len() * 8);
    for c in img.data() {
        bytes.extend_from_slice(&(c.re as f32).to_le_bytes());
    }
    for c in img.data() {
        bytes.extend_from_slice(&(c.im as f32).to_le_bytes());
    }
    write_atomic(path.as_ref(), &bytes)
}

pub fn load_complex(path: impl AsRef<Path>) -> Result<ComplexImage> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_complex(&bytes).map_err(|m| Error::format(path, m))
}

fn decode_complex(bytes: &[u8]) -> Result<ComplexImage, String> {
    let nl = bytes
        .iter()
        .position(|&b| b == b'\n')
        .ok_or("missing header line")?;
    let header: RawHeader =
        serde_json::from_slice(&bytes[..nl]).map_err(|e| format!("bad header: {e}"))?;
    if header.layout != "planar" || header.dtype != "f32le" {
        return Err(format!(
            "unsupported: layout {} dtype {}",
            header.layout, header.dtype
        ));
    }
    let n = header
        .width
        .checked_mul(header.height)
        .ok_or("dimensions overflow")?;
    let body = &bytes[nl + 1..];
    if body.len() != n * 8 {
        return Err(format!(
            "truncated or oversized body: {} bytes, expected {}",
            body.len(),
            n * 8
        ));
    }
    let read = |i: usize| f32::from_le_bytes(body[4 * i..4 * i + 4].try_into().unwrap()) as f64;
    let data = (0..n)
        .map(|i| Complex64::new(read(i), read(n + i)))
        .collect();
    ComplexImage::new(header.width, header.height, data).map_err(|e| e.to_string())
}

/// Writes via a temporary file in the destination directory, then renames.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(path, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

fn extension(path: &Path) -> Option<String> {
    path.extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase)
}

fn unsupported(path: &Path) -> Error {
    Error::format(path, "unsupported format, expected .pgm or .png")
}

fn codes(img: &RealImage, depth: BitDepth) -> impl Iterator<Item = u16> + '_ {
    let max = depth.max_code() as f64;
    img.data()
        .iter()
        .map(move |&v| v.round().clamp(0.0, max) as u16)
}

fn encode_pgm(img: &RealImage, depth: BitDepth) -> Vec<u8> {
    let mut out = format!(
        "P5\n{} {}\n{}\n",
        img.width(),
        img.height(),
        depth.max_code()
    )
    .into_bytes();
    match depth {
        BitDepth::Eight => out.extend(codes(img, depth).map(|c| c as u8)),
        BitDepth::Sixteen => {
            for c in codes(img, depth) {
                out.extend_from_slice(&c.to_be_bytes());
            }
        }
    }
    out
}

fn decode_pgm(bytes: &[u8]) -> Result<StoredImage, String> {
    if bytes.len() < 2 || &bytes[..2] != b"P5" {
        return Err(if bytes.starts_with(b"P6") || bytes.starts_with(b"P3") {
            "unsupported: expected grayscale".into()
        } else {
            "not a binary PGM (P5) file".into()
        });
    }
    let mut pos = 2;
    let mut fields = [0usize; 3];
    for field in &mut fields {
        // whitespace and comments before each header field
        loop {
            match bytes.get(pos) {
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(b'#') => {
                    while bytes.get(pos).is_some_and(|&b| b != b'\n') {
                        pos += 1;
                    }
                }
                Some(_) => break,
                None => return Err("truncated header".into()),
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(u8::is_ascii_digit) {
            pos += 1;
        }
        let text = std::str::from_utf8(&bytes[start..pos]).unwrap();
        *field = text.parse().map_err(|_| "malformed header")?;
    }
    // exactly one whitespace byte separates maxval from the raster
    if !bytes.get(pos).is_some_and(u8::is_ascii_whitespace) {
        return Err("truncated header".into());
    }
    pos += 1;
    let [width, height, maxval] = fields;
    if maxval == 0 || maxval > 65535 {
        return Err(format!("invalid maxval {maxval}"));
    }
    let n = width * height;
    let raster = &bytes[pos..];
    let (depth, data): (BitDepth, Vec<f64>) = if maxval < 256 {
        if raster.len() < n {
            return Err(format!("truncated raster: {} of {} bytes", raster.len(), n));
        }
        (
            BitDepth::Eight,
            raster[..n].iter().map(|&b| b as f64).collect(),
        )
    } else {
        if raster.len() < 2 * n {
            return Err(format!(
                "truncated raster: {} of {} bytes",
                raster.len(),
                2 * n
            ));
        }
        let data = raster[..2 * n]
            .chunks_exact(2)
            .map(|c| u16::from_be_bytes([c[0], c[1]]) as f64)
            .collect();
        (BitDepth::Sixteen, data)
    };
    let image = RealImage::new(width, height, data).map_err(|e| e.to_string())?;
    Ok(StoredImage { image, depth })
}

fn encode_png(img: &RealImage, depth: BitDepth) -> Result<Vec<u8>, String> {
    let mut out = Vec::new();
    {
        let mut encoder = png::Encoder::new(&mut out, img.width() as u32, img.height() as u32);
        encoder.set_color(png::ColorType::Grayscale);
        let raster: Vec<u8> = match depth {
            BitDepth::Eight => {
                encoder.set_depth(png::BitDepth::Eight);
                codes(img, depth).map(|c| c as u8).collect()
            }
            BitDepth::Sixteen => {
                encoder.set_depth(png::BitDepth::Sixteen);
                codes(img, depth).flat_map(u16::to_be_bytes).collect()
            }
        };
        let mut writer = encoder.write_header().map_err(|e| e.to_string())?;
        writer
            .write_image_data(&raster)
            .map_err(|e| e.to_string())?;
        writer.finish().map_err(|e| e.to_string())?;
    }
    Ok(out)
}

/// Lossless PNG bytes of `img`; used to compare compressed sizes.
pub fn png_bytes(img: &RealImage, depth: BitDepth) -> Result<Vec<u8>> {
    encode_png(img, depth).map_err(|m| Error::format("<memory>", m))
}

fn decode_png(bytes: &[u8]) -> Result<StoredImage, String> {
    let decoder = png::Decoder::new(BufReader::new(Cursor::new(bytes)));
    let mut reader = decoder.read_info().map_err(|e| e.to_string())?;
    let info = reader.info();
    if info.color_type != png::ColorType::Grayscale {
        return Err("unsupported: expected grayscale".into());
    }
    let depth = match info.bit_depth {
        png::BitDepth::Eight => BitDepth::Eight,
        png::BitDepth::Sixteen => BitDepth::Sixteen,
        other => return Err(format!("unsupported: grayscale bit depth {other:?}")),
    };
    let (width, height) = (info.width as usize, info.height as usize);
    let size = reader.output_buffer_size().ok_or("image too large")?;
    let mut buf = vec![0u8; size];
    let frame = reader.next_frame(&mut buf).map_err(|e| e.to_string())?;
    let buf = &buf[..frame.buffer_size()];
    let data = match depth {
        BitDepth::Eight => buf.iter().map(|&b| b as f64).collect(),
        BitDepth::Sixteen => buf
            .chunks_exact(2)
            .map(|c| u16::from_be_bytes([c[0], c[1]]) as f64)
            .collect(),
    };
    let image = RealImage::new(width, height, data).map_err(|e| e.to_string())?;
    Ok(StoredImage { image, depth })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp(width: usize, height: usize, max: u32) -> RealImage {
        RealImage::from_fn(width, height, |x, y| {
            ((x * 131 + y * 17) as u32 % (max + 1)) as f64
        })
        .unwrap()
    }

    #[test]
    fn pgm_round_trips_both_depths() {
        let dir = tempfile::tempdir().unwrap();
        for depth in [BitDepth::Eight, BitDepth::Sixteen] {
            let img = ramp(37, 11, depth.max_code());
            let path = dir.path().join(format!("r{}.pgm", depth.bits()));
            save_image(&img, &path, depth).unwrap();
            let back = StoredImage::load(&path).unwrap();
            assert_eq!(back.depth, depth);
            assert_eq!(back.image, img);
        }
    }

    #[test]
    fn png_round_trips_both_depths() {
        let dir = tempfile::tempdir().unwrap();
        for depth in [BitDepth::Eight, BitDepth::Sixteen] {
            let img = ramp(23, 19, depth.max_code());
            let path = dir.path().join(format!("r{}.png", depth.bits()));
            save_image(&img, &path, depth).unwrap();
            let back = StoredImage::load(&path).unwrap();
            assert_eq!(back.depth, depth);
            assert_eq!(back.image, img);
        }
    }

    #[test]
    fn pgm_header_comments_are_skipped() {
        let mut bytes = b"P5\n# made by hand\n2 1\n# max\n255\n".to_vec();
        bytes.extend_from_slice(&[7, 9]);
        let s = decode_pgm(&bytes).unwrap();
        assert_eq!(s.image.data(), &[7.0, 9.0]);
    }

    #[test]
    fn truncated_pgm_reports_path() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("short.pgm");
        fs::write(&path, b"P5\n4 4\n255\n\x01\x02").unwrap();
        let err = load_image(&path).unwrap_err();
        assert!(matches!(err, Error::Format { .. }));
        assert!(err.to_string().contains("short.pgm"), "{err}");
    }

    #[test]
    fn color_png_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rgb.png");
        let mut out = Vec::new();
        {
            let mut enc = png::Encoder::new(&mut out, 2, 2);
            enc.set_color(png::ColorType::Rgb);
            enc.set_depth(png::BitDepth::Eight);
            let mut w = enc.write_header().unwrap();
            w.write_image_data(&[0u8; 12]).unwrap();
        }
        fs::write(&path, out).unwrap();
        let err = load_image(&path).unwrap_err();
        assert!(
            err.to_string().contains("unsupported: expected grayscale"),
            "{err}"
        );
    }

    #[test]
    fn unknown_extension_rejected() {
        let img = RealImage::constant(2, 2, 1.0).unwrap();
        assert!(save_image(&img, "x.tiff", BitDepth::Eight).is_err());
        assert!(load_image("/nonexistent/file.pgm").is_err());
    }

    #[test]
    fn complex_raw_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("z.raw");
        let img = ComplexImage::from_fn(5, 3, |x, y| {
            Complex64::new((x as f32 * 0.1 - 0.33) as f64, (y as f32 / 7.0) as f64)
        })
        .unwrap();
        save_complex(&img, &path).unwrap();
        let bytes = fs::read(&path).unwrap();
        let header_end = bytes.iter().position(|&b| b == b'\n').unwrap();
        assert_eq!(
            &bytes[..header_end],
            br#"{"width":5,"height":3,"layout":"planar","dtype":"f32le"}"#
        );
        assert_eq!(bytes.len(), header_end + 1 + 5 * 3 * 8);
        let back = load_complex(&path).unwrap();
        assert_eq!(back, img);
    }

    #[test]
    fn complex_raw_truncation_detected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.raw");
        fs::write(
            &path,
            b"{\"width\":2,\"height\":2,\"layout\":\"planar\",\"dtype\":\"f32le\"}\n\0\0\0\0",
        )
        .unwrap();
        assert!(matches!(load_complex(&path), Err(Error::Format { .. })));
    }
}
