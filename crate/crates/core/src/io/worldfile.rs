use std::path::Path;

use crate::error::{Error, Result};
use crate::geo::GeoTransform;

/// Six-line world file: A, D, B, E, C, F.
pub fn decode_world_file(text: &str, path: &Path) -> Result<GeoTransform> {
    let mut values = [0.0; 6];
    let mut count = 0;
    let mut offset = 0;
    for line in text.split_inclusive('\n') {
        let trimmed = line.trim();
        if !trimmed.is_empty() {
            if count == 6 {
                return Err(Error::malformed(path, offset, "more than six values"));
            }
            values[count] = trimmed
                .parse()
                .map_err(|_| Error::malformed(path, offset, format!("invalid number '{trimmed}'")))?;
            count += 1;
        }
        offset += line.len();
    }
    if count != 6 {
        return Err(Error::malformed(path, text.len(), format!("expected 6 values, found {count}")));
    }
    let geo = GeoTransform::from_world_file(values);
    geo.validate()?;
    Ok(geo)
}

pub fn encode_world_file(geo: &GeoTransform) -> String {
    geo.to_world_file().iter().map(|v| format!("{v}\n")).collect()
}

pub fn read_world_file(path: &Path) -> Result<GeoTransform> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    decode_world_file(&text, path)
}
