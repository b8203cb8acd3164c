//! ESRI ASCII grid.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::raster::{RasterF32, DEFAULT_NODATA};

/// Whitespace tokenizer that remembers byte offsets for error reports.
struct Tokens<'a> {
    text: &'a str,
    pos: usize,
}

impl<'a> Tokens<'a> {
    fn next(&mut self) -> Option<(usize, &'a str)> {
        let bytes = self.text.as_bytes();
        while self.pos < bytes.len() && bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        if self.pos >= bytes.len() {
            return None;
        }
        let start = self.pos;
        while self.pos < bytes.len() && !bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        Some((start, &self.text[start..self.pos]))
    }

    fn peek_is_keyword(&self) -> bool {
        let rest = self.text[self.pos..].trim_start();
        rest.chars().next().is_some_and(|c| c.is_ascii_alphabetic())
    }
}

pub fn decode_asc(text: &str, path: &Path) -> Result<RasterF32> {
    let mut tok = Tokens { text, pos: 0 };
    let mut ncols = None;
    let mut nrows = None;
    let mut xll = 0.0;
    let mut yll = 0.0;
    let mut cellsize = None;
    let mut nodata = DEFAULT_NODATA;
    let (mut x_centered, mut y_centered) = (false, false);

    while tok.peek_is_keyword() {
        let (koff, key) = tok.next().unwrap();
        let (voff, value) = tok
            .next()
            .ok_or_else(|| Error::malformed(path, text.len(), format!("missing value for {key}")))?;
        let num = |what: &str| -> Result<f64> {
            value
                .parse::<f64>()
                .map_err(|_| Error::malformed(path, voff, format!("invalid {what} '{value}'")))
        };
        let int = |what: &str| -> Result<usize> {
            value
                .parse::<usize>()
                .map_err(|_| Error::malformed(path, voff, format!("invalid {what} '{value}'")))
        };
        match key.to_ascii_lowercase().as_str() {
            "ncols" => ncols = Some(int("ncols")?),
            "nrows" => nrows = Some(int("nrows")?),
            "xllcorner" => xll = num("xllcorner")?,
            "yllcorner" => yll = num("yllcorner")?,
            "cellsize" => cellsize = Some(num("cellsize")?),
            "nodata_value" => nodata = num("NODATA_value")? as f32,
            "xllcenter" => {
                xll = num("xllcenter")?;
                x_centered = true;
            }
            "yllcenter" => {
                yll = num("yllcenter")?;
                y_centered = true;
            }
            _ => return Err(Error::malformed(path, koff, format!("unknown header keyword '{key}'"))),
        }
    }

    let ncols = ncols.ok_or_else(|| Error::malformed(path, tok.pos, "missing ncols"))?;
    let nrows = nrows.ok_or_else(|| Error::malformed(path, tok.pos, "missing nrows"))?;
    let cellsize = cellsize.ok_or_else(|| Error::malformed(path, tok.pos, "missing cellsize"))?;
    if ncols == 0 || nrows == 0 {
        return Err(Error::malformed(path, 0, "zero grid dimension"));
    }
    if !(cellsize > 0.0) {
        return Err(Error::malformed(path, 0, "cellsize must be positive"));
    }
    // center registration -> corner registration
    if x_centered {
        xll -= 0.5 * cellsize;
    }
    if y_centered {
        yll -= 0.5 * cellsize;
    }

    let mut samples = Vec::with_capacity(ncols * nrows);
    for _ in 0..ncols * nrows {
        let (off, t) = tok.next().ok_or_else(|| {
            Error::malformed(
                path,
                text.len(),
                format!("expected {} values, found {}", ncols * nrows, samples.len()),
            )
        })?;
        let v: f32 = t
            .parse()
            .map_err(|_| Error::malformed(path, off, format!("invalid cell value '{t}'")))?;
        if !v.is_finite() {
            return Err(Error::malformed(path, off, "non-finite cell value"));
        }
        samples.push(v);
    }
    if let Some((off, _)) = tok.next() {
        return Err(Error::malformed(path, off, "trailing data after grid"));
    }
    Ok(RasterF32::new(ncols, nrows, samples, nodata).with_header(cellsize, xll, yll))
}

pub fn encode_asc(r: &RasterF32) -> String {
    let mut s = String::with_capacity(r.width() * r.height() * 8 + 128);
    let _ = writeln!(s, "ncols {}", r.width());
    let _ = writeln!(s, "nrows {}", r.height());
    let _ = writeln!(s, "xllcorner {}", r.xllcorner);
    let _ = writeln!(s, "yllcorner {}", r.yllcorner);
    let _ = writeln!(s, "cellsize {}", r.cellsize);
    let _ = writeln!(s, "NODATA_value {}", r.nodata);
    for row in r.samples().chunks(r.width()) {
        for (i, v) in row.iter().enumerate() {
            if i > 0 {
                s.push(' ');
            }
            let _ = write!(s, "{v}");
        }
        s.push('\n');
    }
    s
}

pub fn read_asc(path: &Path) -> Result<RasterF32> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let text = std::str::from_utf8(&bytes)
        .map_err(|e| Error::malformed(path, e.valid_up_to(), "not valid UTF-8 text"))?;
    decode_asc(text, path)
}
