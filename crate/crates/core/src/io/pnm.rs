//! Binary PPM (P6) and PGM (P5) with 8-bit samples.

use std::path::Path;

use crate::error::{Error, Result};
use crate::raster::{Grid, RasterRgb};

struct Header {
    width: usize,
    height: usize,
    data_offset: usize,
}

fn parse_header(bytes: &[u8], magic: &[u8; 2], path: &Path) -> Result<Header> {
    if bytes.len() < 2 || &bytes[..2] != magic {
        return Err(Error::malformed(
            path,
            0,
            format!("expected magic {}", String::from_utf8_lossy(magic)),
        ));
    }
    let mut pos = 2;
    let mut fields = [0usize; 3];
    for (i, field) in fields.iter_mut().enumerate() {
        // whitespace and comments
        loop {
            match bytes.get(pos) {
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(b'#') => {
                    while let Some(&b) = bytes.get(pos) {
                        pos += 1;
                        if b == b'\n' {
                            break;
                        }
                    }
                }
                _ => break,
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(|b| b.is_ascii_digit()) {
            pos += 1;
        }
        if start == pos {
            return Err(Error::malformed(path, pos, format!("expected header field {}", i + 1)));
        }
        let text = std::str::from_utf8(&bytes[start..pos]).unwrap_or("");
        *field = text
            .parse()
            .map_err(|_| Error::malformed(path, start, "header value out of range"))?;
    }
    if !bytes.get(pos).is_some_and(|b| b.is_ascii_whitespace()) {
        return Err(Error::malformed(path, pos, "expected whitespace after maxval"));
    }
    let [width, height, maxval] = fields;
    if width == 0 || height == 0 {
        return Err(Error::malformed(path, 2, "zero image dimension"));
    }
    if maxval != 255 {
        return Err(Error::malformed(path, pos, format!("maxval {maxval}, only 255 is supported")));
    }
    Ok(Header {
        width,
        height,
        data_offset: pos + 1,
    })
}

pub fn decode_ppm(bytes: &[u8], path: &Path) -> Result<RasterRgb> {
    let h = parse_header(bytes, b"P6", path)?;
    let need = h.width * h.height * 3;
    let data = &bytes[h.data_offset..];
    if data.len() < need {
        return Err(Error::malformed(
            path,
            bytes.len(),
            format!("truncated pixel data: {} of {need} bytes", data.len()),
        ));
    }
    Ok(RasterRgb::new(h.width, h.height, data[..need].to_vec()))
}

pub fn decode_pgm(bytes: &[u8], path: &Path) -> Result<Grid<u8>> {
    let h = parse_header(bytes, b"P5", path)?;
    let need = h.width * h.height;
    let data = &bytes[h.data_offset..];
    if data.len() < need {
        return Err(Error::malformed(
            path,
            bytes.len(),
            format!("truncated pixel data: {} of {need} bytes", data.len()),
        ));
    }
    Ok(Grid::from_vec(h.width, h.height, data[..need].to_vec()))
}

pub fn encode_ppm(img: &RasterRgb) -> Vec<u8> {
    let mut out = format!("P6\n{} {}\n255\n", img.width(), img.height()).into_bytes();
    out.extend_from_slice(img.samples());
    out
}

pub fn encode_pgm(img: &Grid<u8>) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", img.width(), img.height()).into_bytes();
    out.extend_from_slice(img.as_slice());
    out
}

pub fn read_ppm(path: &Path) -> Result<RasterRgb> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_ppm(&bytes, path)
}

pub fn read_pgm(path: &Path) -> Result<Grid<u8>> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_pgm(&bytes, path)
}
