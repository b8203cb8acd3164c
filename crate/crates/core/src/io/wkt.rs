//! Road vectors as one WKT `LINESTRING` per line.

use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::Point;

/// Polylines in world coordinates.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RoadNetwork {
    pub polylines: Vec<Vec<Point>>,
}

fn parse_linestring(line: &str, base: usize, path: &Path) -> Result<Vec<Point>> {
    let upper = line.to_ascii_uppercase();
    let body_start = upper
        .strip_prefix("LINESTRING")
        .map(|_| "LINESTRING".len())
        .ok_or_else(|| Error::malformed(path, base, "expected LINESTRING"))?;
    let rest = &line[body_start..];
    let open = rest
        .find('(')
        .ok_or_else(|| Error::malformed(path, base + body_start, "expected '('"))?;
    if !rest[..open].trim().is_empty() {
        return Err(Error::malformed(path, base + body_start, "unexpected text before '('"));
    }
    let close = rest
        .rfind(')')
        .ok_or_else(|| Error::malformed(path, base + line.len(), "expected ')'"))?;
    if !rest[close + 1..].trim().is_empty() {
        return Err(Error::malformed(path, base + body_start + close + 1, "trailing text"));
    }
    let inner_off = base + body_start + open + 1;
    let inner = &rest[open + 1..close];

    let mut pts: Vec<Point> = Vec::new();
    let mut off = inner_off;
    for pair in inner.split(',') {
        let mut nums = pair.split_whitespace();
        let mut coord = || -> Result<f64> {
            let t = nums
                .next()
                .ok_or_else(|| Error::malformed(path, off, "expected 'x y' coordinate pair"))?;
            t.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::malformed(path, off, format!("invalid coordinate '{t}'")))
        };
        let p = Point::new(coord()?, coord()?);
        if nums.next().is_some() {
            return Err(Error::malformed(path, off, "only 2-D coordinates are supported"));
        }
        // consecutive duplicates carry no direction
        if pts.last() != Some(&p) {
            pts.push(p);
        }
        off += pair.len() + 1;
    }
    if pts.len() < 2 {
        return Err(Error::malformed(path, base, "linestring needs two distinct vertices"));
    }
    Ok(pts)
}

pub fn decode_roads(text: &str, path: &Path) -> Result<RoadNetwork> {
    let mut polylines = Vec::new();
    let mut offset = 0;
    for raw in text.split_inclusive('\n') {
        let line = raw.trim_end_matches(['\n', '\r']);
        let lead = line.len() - line.trim_start().len();
        let trimmed = line.trim();
        if !trimmed.is_empty() && !trimmed.starts_with('#') {
            polylines.push(parse_linestring(trimmed, offset + lead, path)?);
        }
        offset += raw.len();
    }
    Ok(RoadNetwork { polylines })
}

pub fn read_roads(path: &Path) -> Result<RoadNetwork> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    decode_roads(&text, path)
}

pub fn encode_roads(roads: &RoadNetwork) -> String {
    let mut s = String::new();
    for line in &roads.polylines {
        let coords: Vec<String> = line.iter().map(|p| format!("{} {}", p.x, p.y)).collect();
        s.push_str(&format!("LINESTRING ({})\n", coords.join(", ")));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_lines_and_skips_comments() {
        let text = "# roads\nLINESTRING (0 0, 10 0, 10 5)\n\nlinestring(1.5 2,3 4)\n";
        let r = decode_roads(text, Path::new("r.wkt")).unwrap();
        assert_eq!(r.polylines.len(), 2);
        assert_eq!(r.polylines[0][2], Point::new(10.0, 5.0));
        assert_eq!(r.polylines[1][0], Point::new(1.5, 2.0));
        assert_eq!(decode_roads(&encode_roads(&r), Path::new("r.wkt")).unwrap(), r);
    }

    #[test]
    fn duplicate_vertices_are_collapsed() {
        let r = decode_roads("LINESTRING (0 0, 0 0, 1 1)", Path::new("r")).unwrap();
        assert_eq!(r.polylines[0].len(), 2);
        assert!(decode_roads("LINESTRING (0 0, 0 0)", Path::new("r")).is_err());
    }

    #[test]
    fn malformed_offsets() {
        let text = "LINESTRING (0 0, 1 1)\nPOINT (1 1)\n";
        match decode_roads(text, Path::new("r")) {
            Err(Error::MalformedFile { offset, .. }) => assert_eq!(offset, 22),
            other => panic!("unexpected {other:?}"),
        }
    }
}
