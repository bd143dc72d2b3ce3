//! Binary PPM (`P6`, maxval 255) reading and writing.

use std::path::Path;

use super::Image;
use crate::error::{Error, Result};

/// Largest image the decoder will allocate.
const MAX_DECODE_PIXELS: usize = 1 << 26;

/// Linear tone map to bytes: every channel is scaled by the brightest
/// channel value in the image, then clamped and rounded.
pub fn tone_map(img: &Image) -> Vec<u8> {
    let max = img.pixels().iter().flatten().fold(0.0f64, |m, &c| m.max(c));
    img.pixels()
        .iter()
        .flatten()
        .map(|&c| {
            if max > 0.0 {
                (c / max * 255.0).clamp(0.0, 255.0).round() as u8
            } else {
                0
            }
        })
        .collect()
}

pub fn encode_ppm(img: &Image) -> Vec<u8> {
    let mut out = format!("P6\n{} {}\n255\n", img.width(), img.height()).into_bytes();
    out.extend(tone_map(img));
    out
}

pub fn write_ppm(img: &Image, path: &Path) -> Result<()> {
    std::fs::write(path, encode_ppm(img))?;
    Ok(())
}

struct Header<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Header<'_> {
    fn skip_space_and_comments(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b == b'#' {
                while let Some(&c) = self.bytes.get(self.pos) {
                    self.pos += 1;
                    if c == b'\n' || c == b'\r' {
                        break;
                    }
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn number(&mut self, what: &str) -> Result<usize> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.bytes.get(self.pos).is_some_and(u8::is_ascii_digit) {
            self.pos += 1;
        }
        let digits = &self.bytes[start..self.pos];
        if digits.is_empty() || digits.len() > 9 {
            return Err(Error::Image(format!("bad {what}")));
        }
        Ok(std::str::from_utf8(digits)
            .expect("ASCII digits")
            .parse()
            .expect("at most 9 digits"))
    }
}

/// Parses a `P6` file with maxval 255. Pixel values come back as the raw
/// byte values `0..=255`.
pub fn decode_ppm(bytes: &[u8]) -> Result<Image> {
    if !bytes.starts_with(b"P6") {
        return Err(Error::Image("missing P6 magic".into()));
    }
    let mut h = Header { bytes, pos: 2 };
    let width = h.number("width")?;
    let height = h.number("height")?;
    let maxval = h.number("maxval")?;
    if maxval != 255 {
        return Err(Error::Image(format!("unsupported maxval {maxval}")));
    }
    if !bytes.get(h.pos).is_some_and(u8::is_ascii_whitespace) {
        return Err(Error::Image("missing separator after header".into()));
    }
    h.pos += 1;
    let count = width
        .checked_mul(height)
        .filter(|&n| n > 0 && n <= MAX_DECODE_PIXELS)
        .ok_or_else(|| Error::Image(format!("unsupported size {width}×{height}")))?;
    let data = &bytes[h.pos..];
    if data.len() != count * 3 {
        return Err(Error::Image(format!(
            "expected {} pixel bytes, found {}",
            count * 3,
            data.len()
        )));
    }
    let pixels = data
        .chunks_exact(3)
        .map(|c| [f64::from(c[0]), f64::from(c[1]), f64::from(c[2])])
        .collect();
    Image::new(width, height, pixels)
}

pub fn read_ppm(path: &Path) -> Result<Image> {
    decode_ppm(&std::fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn black_pixel_file() {
        let img = Image::filled(1, 1, [0.0; 3]).unwrap();
        let bytes = encode_ppm(&img);
        assert_eq!(bytes, b"P6\n1 1\n255\n\0\0\0");
        assert_eq!(bytes.len(), 14);
    }

    #[test]
    fn round_trip_reproduces_tone_mapped_bytes() {
        let pixels = (0..12).map(|i| [i as f64 * 0.1, 0.5, 2.0 - i as f64 * 0.1]).collect();
        let img = Image::new(4, 3, pixels).unwrap();
        let back = decode_ppm(&encode_ppm(&img)).unwrap();
        let bytes: Vec<u8> = back.pixels().iter().flatten().map(|&c| c as u8).collect();
        assert_eq!(bytes, tone_map(&img));
        assert_eq!(back.width(), 4);
    }

    #[test]
    fn header_comments() {
        let img = decode_ppm(b"P6 # made by hand\n2 1\n255\n\x01\x02\x03\x04\x05\x06").unwrap();
        assert_eq!(img.pixel(1, 0), [4.0, 5.0, 6.0]);
    }

    #[test]
    fn malformed_files() {
        for bad in [
            &b"P5\n1 1\n255\n\0"[..],
            b"P6\n1 1\n255\n\0\0",
            b"P6\n1 1\n65535\n\0\0\0",
            b"P6\n0 1\n255\n",
            b"P6\n99999 99999\n255\n",
            b"P6\n1\n",
            b"P6",
        ] {
            assert!(matches!(decode_ppm(bad), Err(Error::Image(_))), "{bad:?}");
        }
    }
}
