//! Binary 16-bit grayscale PGM (`P5`, maxval 65535).

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::image::Image;

pub const MAXVAL: u16 = u16::MAX;

/// Quantizes a `[0, 1]` intensity to 16 bits; out-of-range values clamp.
pub fn quantize(v: f64) -> u16 {
    (v.clamp(0.0, 1.0) * MAXVAL as f64).round() as u16
}

pub fn dequantize(q: u16) -> f64 {
    q as f64 / MAXVAL as f64
}

pub fn encode(img: &Image) -> Vec<u8> {
    let header = format!("P5\n{} {}\n{}\n", img.width(), img.height(), MAXVAL);
    let mut out = Vec::with_capacity(header.len() + 2 * img.len());
    out.extend_from_slice(header.as_bytes());
    for &v in img.as_slice() {
        out.extend_from_slice(&quantize(v).to_be_bytes());
    }
    out
}

/// Decodes a binary PGM; 8-bit files and other maxvals are rescaled to
/// `[0, 1]` as well.
pub fn decode(bytes: &[u8]) -> std::result::Result<Image, String> {
    let mut pos = 0;
    let magic = next_token(bytes, &mut pos).ok_or("missing magic number")?;
    if magic != b"P5" {
        return Err(format!(
            "unsupported magic {:?}, expected P5",
            String::from_utf8_lossy(magic)
        ));
    }
    let mut field = |name: &str| -> std::result::Result<usize, String> {
        let tok = next_token(bytes, &mut pos).ok_or_else(|| format!("missing {name}"))?;
        std::str::from_utf8(tok)
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| format!("invalid {name}"))
    };
    let width = field("width")?;
    let height = field("height")?;
    let maxval = field("maxval")?;
    if maxval == 0 || maxval > 65535 {
        return Err(format!("maxval {maxval} out of range"));
    }
    // exactly one whitespace byte separates the header from the raster
    pos += 1;
    let bytes_per_sample = if maxval > 255 { 2 } else { 1 };
    let n = width
        .checked_mul(height)
        .ok_or("image dimensions overflow")?;
    let expected = n * bytes_per_sample;
    let raster = bytes.get(pos..).unwrap_or(&[]);
    if raster.len() < expected {
        return Err(format!(
            "truncated raster: {} bytes, expected {expected}",
            raster.len()
        ));
    }
    let scale = maxval as f64;
    let data = if bytes_per_sample == 2 {
        raster[..expected]
            .chunks_exact(2)
            .map(|b| (u16::from_be_bytes([b[0], b[1]]) as f64 / scale).min(1.0))
            .collect()
    } else {
        raster[..expected]
            .iter()
            .map(|&b| (b as f64 / scale).min(1.0))
            .collect()
    };
    Image::new(width, height, data).map_err(|e| e.to_string())
}

fn next_token<'a>(bytes: &'a [u8], pos: &mut usize) -> Option<&'a [u8]> {
    loop {
        while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if *pos < bytes.len() && bytes[*pos] == b'#' {
            while *pos < bytes.len() && bytes[*pos] != b'\n' {
                *pos += 1;
            }
        } else {
            break;
        }
    }
    let start = *pos;
    while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() {
        *pos += 1;
    }
    (start < *pos).then(|| &bytes[start..*pos])
}

pub fn read(path: &Path) -> Result<Image> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes).map_err(|message| Error::Decode {
        path: path.to_path_buf(),
        message,
    })
}

pub fn write(path: &Path, img: &Image) -> Result<()> {
    fs::write(path, encode(img)).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn header_layout() {
        let img = Image::new(2, 1, vec![0.0, 1.0]).unwrap();
        assert_eq!(encode(&img), b"P5\n2 1\n65535\n\x00\x00\xff\xff".to_vec());
    }

    #[test]
    fn decodes_comments_and_8bit() {
        let bytes = b"P5\n# made by hand\n3 1\n255\n\x00\x80\xff";
        let img = decode(bytes).unwrap();
        assert_eq!(img.dims(), (3, 1));
        assert_eq!(img.as_slice(), &[0.0, 128.0 / 255.0, 1.0]);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(decode(b"P2\n1 1\n255\n0").is_err());
        assert!(decode(b"P5\n4 4\n65535\n\x00\x01").is_err());
        assert!(decode(b"P5\n4").is_err());
        assert!(decode(b"P5\n1 1\n70000\n\x00\x00").is_err());
    }

    proptest! {
        #[test]
        fn round_trip_within_one_quantum(
            w in 1usize..9,
            h in 1usize..9,
            seed in proptest::collection::vec(0.0f64..=1.0, 64),
        ) {
            let img = Image::from_fn(w, h, |r, c| seed[(r * 8 + c) % 64]).unwrap();
            let back = decode(&encode(&img)).unwrap();
            prop_assert_eq!(back.dims(), img.dims());
            for (a, b) in img.as_slice().iter().zip(back.as_slice()) {
                prop_assert!((a - b).abs() <= 0.5 / 65535.0 + 1e-15);
            }
            // quantized data survives a second trip bit-exactly
            prop_assert_eq!(decode(&encode(&back)).unwrap(), back);
        }
    }
}
