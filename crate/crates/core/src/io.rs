//! Image, saliency and float-plane file formats.
//!
//! * Images: 8-bit grayscale or RGB PNG and binary PGM/PPM on input; PNG on
//!   output.
//! * Saliency maps: 8-bit grayscale PNG with `round(255 s)`, or a raw float
//!   plane: magic `SALF`, `u32` width, `u32` height, `u32` reserved (0), then
//!   `width * height` little-endian `f32` values row-major.

use std::fs;
use std::io::Cursor;
use std::path::Path;

use image::{ColorType, DynamicImage, GrayImage, ImageFormat, ImageReader, RgbImage};

use crate::error::{Error, Result};
use crate::raster::{ImageBuffer, Plane, SaliencyMap};

pub const SALF_MAGIC: &[u8; 4] = b"SALF";
const SALF_HEADER_LEN: usize = 16;

fn to_byte(v: f64) -> u8 {
    (255.0 * v.clamp(0.0, 1.0)).round() as u8
}

fn decode(path: &Path) -> Result<DynamicImage> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    ImageReader::new(Cursor::new(bytes))
        .with_guessed_format()
        .map_err(|e| Error::io(path, e))?
        .decode()
        .map_err(|source| Error::Decode {
            path: path.to_path_buf(),
            source,
        })
}

/// Reads a PNG/PGM/PPM file; grayscale stays single-channel, anything with
/// color becomes RGB. Alpha is dropped.
pub fn read_image(path: impl AsRef<Path>) -> Result<ImageBuffer> {
    let path = path.as_ref();
    let img = decode(path)?;
    let is_gray = matches!(
        img.color(),
        ColorType::L8 | ColorType::L16 | ColorType::La8 | ColorType::La16
    );
    if is_gray {
        let g = img.to_luma8();
        let data = g.as_raw().iter().map(|&v| v as f64 / 255.0).collect();
        ImageBuffer::new(g.width() as usize, g.height() as usize, 1, data)
    } else {
        let rgb = img.to_rgb8();
        let data = rgb.as_raw().iter().map(|&v| v as f64 / 255.0).collect();
        ImageBuffer::new(rgb.width() as usize, rgb.height() as usize, 3, data)
    }
}

/// Encodes an image as 8-bit PNG bytes (grayscale or RGB by channel count).
pub fn encode_png(img: &ImageBuffer) -> Result<Vec<u8>> {
    let (w, h) = (img.width() as u32, img.height() as u32);
    let bytes: Vec<u8> = img.data().iter().map(|&v| to_byte(v)).collect();
    let dynamic = if img.channels() == 1 {
        DynamicImage::ImageLuma8(GrayImage::from_raw(w, h, bytes).expect("buffer length matches"))
    } else {
        DynamicImage::ImageRgb8(RgbImage::from_raw(w, h, bytes).expect("buffer length matches"))
    };
    let mut out = Cursor::new(Vec::new());
    dynamic
        .write_to(&mut out, ImageFormat::Png)
        .map_err(|e| Error::InvalidImage(format!("png encoding failed: {e}")))?;
    Ok(out.into_inner())
}

pub fn write_png(img: &ImageBuffer, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode_png(img)?;
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn write_saliency_png(map: &SaliencyMap, path: impl AsRef<Path>) -> Result<()> {
    let img = ImageBuffer::from_gray(map.plane())?;
    write_png(&img, path)
}

pub fn encode_salf(map: &SaliencyMap) -> Vec<u8> {
    let mut out = Vec::with_capacity(SALF_HEADER_LEN + 4 * map.data().len());
    out.extend_from_slice(SALF_MAGIC);
    out.extend_from_slice(&(map.width() as u32).to_le_bytes());
    out.extend_from_slice(&(map.height() as u32).to_le_bytes());
    out.extend_from_slice(&0u32.to_le_bytes());
    for &v in map.data() {
        out.extend_from_slice(&(v as f32).to_le_bytes());
    }
    out
}

pub fn decode_salf(bytes: &[u8]) -> Result<Plane> {
    if bytes.len() < SALF_HEADER_LEN || &bytes[..4] != SALF_MAGIC {
        return Err(Error::BadFloatPlane("missing SALF header".into()));
    }
    let word = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().expect("4 bytes"));
    let (w, h, reserved) = (word(4) as usize, word(8) as usize, word(12));
    if reserved != 0 {
        return Err(Error::BadFloatPlane(format!("reserved field is {reserved}, expected 0")));
    }
    let body = &bytes[SALF_HEADER_LEN..];
    if body.len() != 4 * w * h {
        return Err(Error::BadFloatPlane(format!(
            "{w}x{h} plane needs {} payload bytes, found {}",
            4 * w * h,
            body.len()
        )));
    }
    let data = body
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")) as f64)
        .collect();
    Plane::new(w, h, data)
}

pub fn write_salf(map: &SaliencyMap, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_salf(map)).map_err(|e| Error::io(path, e))
}

/// Loads a saliency map from a `.salf` float plane or any readable image
/// (converted to gray, scaled to `[0, 1]`).
pub fn read_saliency(path: impl AsRef<Path>) -> Result<SaliencyMap> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.starts_with(SALF_MAGIC) {
        let plane = decode_salf(&bytes)?;
        return SaliencyMap::new(plane.map(|v| v.clamp(0.0, 1.0)));
    }
    let img = read_image(path)?;
    SaliencyMap::new(img.to_gray())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn salf_header_layout() {
        let map = SaliencyMap::new(Plane::new(2, 1, vec![0.0, 1.0]).unwrap()).unwrap();
        let bytes = encode_salf(&map);
        assert_eq!(&bytes[..4], b"SALF");
        assert_eq!(&bytes[4..8], &2u32.to_le_bytes());
        assert_eq!(&bytes[8..12], &1u32.to_le_bytes());
        assert_eq!(&bytes[12..16], &[0, 0, 0, 0]);
        assert_eq!(&bytes[20..24], &1.0f32.to_le_bytes());
        assert_eq!(decode_salf(&bytes).unwrap(), *map.plane());
    }

    #[test]
    fn salf_rejects_truncation() {
        let map = SaliencyMap::zeros(3, 3);
        let bytes = encode_salf(&map);
        assert!(decode_salf(&bytes[..bytes.len() - 1]).is_err());
        assert!(decode_salf(b"NOPE").is_err());
    }

    #[test]
    fn png_and_pnm_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let data: Vec<f64> = (0..12).map(|i| (i * 20) as f64 / 255.0).collect();
        let rgb = ImageBuffer::new(2, 2, 3, data.clone()).unwrap();
        let p = dir.path().join("a.png");
        write_png(&rgb, &p).unwrap();
        assert_eq!(read_image(&p).unwrap(), rgb);

        let gray = ImageBuffer::new(3, 4, 1, data).unwrap();
        let p = dir.path().join("g.png");
        write_png(&gray, &p).unwrap();
        assert_eq!(read_image(&p).unwrap(), gray);

        // binary PGM, 2x1: values 0 and 255
        let p = dir.path().join("x.pgm");
        std::fs::write(&p, b"P5\n2 1\n255\n\x00\xff").unwrap();
        let img = read_image(&p).unwrap();
        assert_eq!((img.width(), img.height(), img.channels()), (2, 1, 1));
        assert_eq!(img.data(), &[0.0, 1.0]);
    }

    #[test]
    fn saliency_png_quantizes() {
        let dir = tempfile::tempdir().unwrap();
        let map = SaliencyMap::new(Plane::new(2, 1, vec![0.5, 1.0]).unwrap()).unwrap();
        let p = dir.path().join("s.png");
        write_saliency_png(&map, &p).unwrap();
        let back = read_saliency(&p).unwrap();
        assert_eq!(back.data(), &[128.0 / 255.0, 1.0]);
    }
}
