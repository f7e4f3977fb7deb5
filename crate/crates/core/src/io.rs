//! Image file formats.
//!
//! * PNG: 8-bit display images, read and written as `round(255 * v)`.
//! * EXR: 32-bit float RGB or RGBA, ZIP16 scanlines, written single-threaded
//!   so files are byte-reproducible.
//! * PFM: little-endian colour (`PF`) float maps, bottom row first.

use std::fs;
use std::path::Path;

use exr::prelude as exrs;
use exrs::WritableImage as _;

use crate::error::{Error, Result};
use crate::image::{Encoding, Image, LinearImage, SrgbImage};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ImageFormat {
    Png,
    Exr,
    Pfm,
}

impl ImageFormat {
    pub fn from_path(path: &Path) -> Result<Self> {
        let ext = path
            .extension()
            .and_then(|e| e.to_str())
            .map(|e| e.to_ascii_lowercase());
        match ext.as_deref() {
            Some("png") => Ok(ImageFormat::Png),
            Some("exr") => Ok(ImageFormat::Exr),
            Some("pfm") => Ok(ImageFormat::Pfm),
            _ => Err(Error::format(path, "unsupported image extension (expected .png, .exr or .pfm)")),
        }
    }

    pub fn is_float(self) -> bool {
        self != ImageFormat::Png
    }
}

fn ensure_parent(path: &Path) -> Result<()> {
    match path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() => fs::create_dir_all(dir).map_err(|e| Error::io(dir, e)),
        _ => Ok(()),
    }
}

pub fn read_png(path: &Path) -> Result<SrgbImage> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let decoded = image::load_from_memory_with_format(&bytes, image::ImageFormat::Png)
        .map_err(|e| Error::format(path, e))?;
    let (w, h) = (decoded.width() as usize, decoded.height() as usize);
    let (channels, data): (usize, Vec<f32>) = if decoded.color().has_alpha() {
        let buf = decoded.into_rgba16();
        (4, buf.into_raw().into_iter().map(|v| v as f32 / 65535.0).collect())
    } else {
        let buf = decoded.into_rgb16();
        (3, buf.into_raw().into_iter().map(|v| v as f32 / 65535.0).collect())
    };
    // 8-bit files widen exactly to multiples of 257/65535 = 1/255
    Image::new(w, h, channels, data).map_err(|e| Error::format(path, e))
}

/// Writes any image as 8-bit PNG, clamping samples to `[0, 1]`.
pub fn write_png<E: Encoding>(path: &Path, img: &Image<E>) -> Result<()> {
    ensure_parent(path)?;
    let bytes: Vec<u8> = img
        .data()
        .iter()
        .map(|&v| (v.clamp(0.0, 1.0) * 255.0).round() as u8)
        .collect();
    let (w, h) = (img.width() as u32, img.height() as u32);
    let color = if img.has_alpha() {
        image::ExtendedColorType::Rgba8
    } else {
        image::ExtendedColorType::Rgb8
    };
    image::save_buffer_with_format(path, &bytes, w, h, color, image::ImageFormat::Png)
        .map_err(|e| Error::format(path, e))
}

pub fn read_exr(path: &Path) -> Result<LinearImage> {
    if !path.exists() {
        return Err(Error::io(path, std::io::Error::from(std::io::ErrorKind::NotFound)));
    }
    let img = exrs::read_first_flat_layer_from_file(path).map_err(|e| Error::format(path, e))?;
    let layer = &img.layer_data;
    let (w, h) = (layer.size.width(), layer.size.height());
    let find = |name: &str| {
        layer.channel_data.list.iter().find(|c| {
            let n = c.name.to_string();
            let short = n.rsplit('.').next().unwrap_or(&n).to_string();
            short.eq_ignore_ascii_case(name)
        })
    };
    let rgb: Vec<_> = ["R", "G", "B"].iter().map(|n| find(n)).collect();
    let rgb: Vec<_> = if rgb.iter().all(Option::is_some) {
        rgb.into_iter().flatten().collect()
    } else if let Some(y) = find("Y") {
        vec![y, y, y]
    } else {
        return Err(Error::format(path, "EXR has no R, G, B (or Y) channels"));
    };
    let alpha = find("A");
    let channels = if alpha.is_some() { 4 } else { 3 };
    let planes: Vec<Vec<f32>> = rgb
        .iter()
        .chain(alpha.iter())
        .map(|c| c.sample_data.values_as_f32().collect())
        .collect();
    let mut data = Vec::with_capacity(w * h * channels);
    for i in 0..w * h {
        for plane in &planes {
            data.push(plane[i]);
        }
    }
    Image::new(w, h, channels, data).map_err(|e| Error::format(path, e))
}

/// Writes an RGB or RGBA 32-bit float EXR.
pub fn write_exr<E: Encoding>(path: &Path, img: &Image<E>) -> Result<()> {
    ensure_parent(path)?;
    let (w, h) = img.dimensions();
    let encoding = exrs::Encoding {
        compression: exrs::Compression::ZIP16,
        blocks: exrs::Blocks::ScanLines,
        line_order: exrs::LineOrder::Increasing,
    };
    let px = |p: exrs::Vec2<usize>| img.pixel(p.x(), p.y());
    let result = if img.has_alpha() {
        let channels = exrs::SpecificChannels::rgba(|p: exrs::Vec2<usize>| {
            let s = px(p);
            (s[0], s[1], s[2], s[3])
        });
        let layer = exrs::Layer::new((w, h), exrs::LayerAttributes::default(), encoding, channels);
        exrs::Image::from_layer(layer).write().non_parallel().to_file(path)
    } else {
        let channels = exrs::SpecificChannels::rgb(|p: exrs::Vec2<usize>| {
            let s = px(p);
            (s[0], s[1], s[2])
        });
        let layer = exrs::Layer::new((w, h), exrs::LayerAttributes::default(), encoding, channels);
        exrs::Image::from_layer(layer).write().non_parallel().to_file(path)
    };
    result.map_err(|e| Error::format(path, e))
}

pub fn read_pfm(path: &Path) -> Result<LinearImage> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_pfm(&bytes).map_err(|m| Error::format(path, m))
}

fn parse_pfm(bytes: &[u8]) -> std::result::Result<LinearImage, String> {
    // header: three whitespace-separated tokens, then one whitespace byte
    let mut tokens = Vec::new();
    let mut pos = 0;
    while tokens.len() < 4 {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err("truncated PFM header".into());
        }
        tokens.push(std::str::from_utf8(&bytes[start..pos]).map_err(|_| "non-ASCII PFM header")?);
    }
    pos += 1;
    let channels = match tokens[0] {
        "PF" => 3,
        "Pf" => 1,
        other => return Err(format!("not a PFM file (magic {other:?})")),
    };
    let w: usize = tokens[1].parse().map_err(|_| "bad PFM width")?;
    let h: usize = tokens[2].parse().map_err(|_| "bad PFM height")?;
    let scale: f64 = tokens[3].parse().map_err(|_| "bad PFM scale")?;
    if scale == 0.0 || !scale.is_finite() {
        return Err("PFM scale must be nonzero".into());
    }
    let little = scale < 0.0;
    let n = w * h * channels;
    let body = bytes.get(pos..pos + 4 * n).ok_or("truncated PFM body")?;
    let mut data = vec![0.0f32; w * h * 3];
    for row in 0..h {
        // stored bottom row first
        let dst_row = h - 1 - row;
        for x in 0..w {
            for c in 0..channels {
                let k = ((row * w + x) * channels + c) * 4;
                let raw: [u8; 4] = body[k..k + 4].try_into().expect("4 bytes");
                let v = if little { f32::from_le_bytes(raw) } else { f32::from_be_bytes(raw) };
                let base = (dst_row * w + x) * 3;
                if channels == 1 {
                    data[base..base + 3].fill(v);
                } else {
                    data[base + c] = v;
                }
            }
        }
    }
    Image::new(w, h, 3, data).map_err(|e| e.to_string())
}

/// Writes the colour channels as a little-endian PFM. Alpha cannot be
/// stored and is rejected.
pub fn write_pfm<E: Encoding>(path: &Path, img: &Image<E>) -> Result<()> {
    if img.has_alpha() {
        return Err(Error::format(path, "PFM cannot store an alpha channel; use EXR"));
    }
    ensure_parent(path)?;
    let (w, h) = img.dimensions();
    let mut out = format!("PF\n{w} {h}\n-1.0\n").into_bytes();
    out.reserve(w * h * 12);
    for y in (0..h).rev() {
        for x in 0..w {
            for v in img.rgb(x, y) {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Reads linear radiance from EXR or PFM.
pub fn read_linear(path: &Path) -> Result<LinearImage> {
    match ImageFormat::from_path(path)? {
        ImageFormat::Exr => read_exr(path),
        ImageFormat::Pfm => read_pfm(path),
        ImageFormat::Png => Err(Error::format(path, "PNG holds display values, not linear radiance")),
    }
}

/// Writes an image in the format named by the extension.
pub fn write_image<E: Encoding>(path: &Path, img: &Image<E>) -> Result<()> {
    match ImageFormat::from_path(path)? {
        ImageFormat::Png => write_png(path, img),
        ImageFormat::Exr => write_exr(path, img),
        ImageFormat::Pfm => write_pfm(path, img),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp(channels: usize) -> LinearImage {
        LinearImage::from_fn(7, 5, channels, |x, y, c| (x * 3 + y * 11 + c) as f32 * 0.37).unwrap()
    }

    #[test]
    fn exr_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        for ch in [3, 4] {
            let p = dir.path().join(format!("a{ch}.exr"));
            let img = ramp(ch);
            write_exr(&p, &img).unwrap();
            assert_eq!(read_exr(&p).unwrap(), img);
        }
    }

    #[test]
    fn exr_writes_are_reproducible() {
        let dir = tempfile::tempdir().unwrap();
        let (a, b) = (dir.path().join("a.exr"), dir.path().join("b.exr"));
        write_exr(&a, &ramp(4)).unwrap();
        write_exr(&b, &ramp(4)).unwrap();
        assert_eq!(fs::read(a).unwrap(), fs::read(b).unwrap());
    }

    #[test]
    fn pfm_round_trip_and_orientation() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.pfm");
        let img = ramp(3);
        write_pfm(&p, &img).unwrap();
        assert_eq!(read_pfm(&p).unwrap(), img);
        // first stored pixel is the bottom-left one
        let bytes = fs::read(&p).unwrap();
        let header = b"PF\n7 5\n-1.0\n".len();
        let first = f32::from_le_bytes(bytes[header..header + 4].try_into().unwrap());
        assert_eq!(first, img.pixel(0, 4)[0]);
        assert!(write_pfm(&p, &ramp(4)).is_err());
    }

    #[test]
    fn big_endian_and_grey_pfm() {
        let mut bytes = b"Pf\n2 1\n1.0\n".to_vec();
        for v in [0.5f32, 2.0] {
            bytes.extend_from_slice(&v.to_be_bytes());
        }
        let img = parse_pfm(&bytes).unwrap();
        assert_eq!(img.data(), &[0.5, 0.5, 0.5, 2.0, 2.0, 2.0]);
        assert!(parse_pfm(b"P6\n1 1\n255\n").is_err());
        assert!(parse_pfm(b"PF\n4 4\n-1.0\n\0\0").is_err());
    }

    #[test]
    fn png_round_trip_quantises() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.png");
        let img = SrgbImage::from_fn(4, 3, 3, |x, y, c| (x + y + c) as f32 / 9.0).unwrap();
        write_png(&p, &img).unwrap();
        let back = read_png(&p).unwrap();
        for (a, b) in back.data().iter().zip(img.data()) {
            assert!((a - b).abs() <= 0.5 / 255.0 + 1e-6);
            assert!(((a * 255.0).round() - a * 255.0).abs() < 1e-3);
        }
    }

    #[test]
    fn dispatch_by_extension() {
        assert_eq!(ImageFormat::from_path(Path::new("x.EXR")).unwrap(), ImageFormat::Exr);
        assert!(ImageFormat::from_path(Path::new("x.jpg")).is_err());
        assert!(read_linear(Path::new("x.png")).is_err());
        let err = read_linear(Path::new("/nonexistent/x.exr")).unwrap_err();
        assert_eq!(err.exit_code(), 4);
    }
}
