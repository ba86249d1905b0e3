//! Plain-text offset tables.
//!
//! ```text
//! # hullopt-offsets v1 stations=3 waterlines=2
//! x\z -1 0
//! 0 0 0
//! 0.5 0.8 1
//! 1 0 0
//! ```
//!
//! The header carries the format tag and grid dimensions. The first data row
//! holds the waterline `z*` values, the first column the station `x*` values.
//! Numbers are written in shortest round-trip form, so write/read/write is
//! byte-stable.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::{HullForm, OffsetGrid};

pub const OFFSETS_FORMAT: &str = "hullopt-offsets";
pub const OFFSETS_VERSION: &str = "v1";

pub fn to_string(grid: &OffsetGrid) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "# {OFFSETS_FORMAT} {OFFSETS_VERSION} stations={} waterlines={}",
        grid.n_stations(),
        grid.n_waterlines()
    );
    out.push_str("x\\z");
    for z in grid.waterlines() {
        let _ = write!(out, " {z}");
    }
    out.push('\n');
    for (i, x) in grid.stations().iter().enumerate() {
        let _ = write!(out, "{x}");
        for y in grid.station_row(i) {
            let _ = write!(out, " {y}");
        }
        out.push('\n');
    }
    out
}

fn parse_num(path: &Path, line: usize, tok: &str) -> Result<f64> {
    tok.parse::<f64>()
        .map_err(|_| Error::format(path, format!("line {line}: bad number {tok:?}")))
}

fn header_field(path: &Path, tok: Option<&str>, key: &str) -> Result<usize> {
    tok.and_then(|t| t.strip_prefix(key))
        .and_then(|v| v.strip_prefix('='))
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| Error::format(path, format!("header missing {key}=<count>")))
}

/// Parse an offset table. `path` is used for error messages only.
pub fn parse(text: &str, path: &Path) -> Result<OffsetGrid> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::format(path, "empty offset table"))?;
    let mut tokens = header.split_whitespace();
    if tokens.next() != Some("#") || tokens.next() != Some(OFFSETS_FORMAT) {
        return Err(Error::format(path, "missing offset-table header"));
    }
    match tokens.next() {
        Some(OFFSETS_VERSION) => {}
        other => {
            return Err(Error::Version {
                found: other.unwrap_or("").to_string(),
                expected: OFFSETS_VERSION.to_string(),
            })
        }
    }
    let ns = header_field(path, tokens.next(), "stations")?;
    let nw = header_field(path, tokens.next(), "waterlines")?;

    let (zline, zrow) = lines
        .next()
        .ok_or_else(|| Error::format(path, "missing waterline row"))?;
    let mut ztok = zrow.split_whitespace();
    ztok.next();
    let waterlines = ztok
        .map(|t| parse_num(path, zline + 1, t))
        .collect::<Result<Vec<_>>>()?;
    if waterlines.len() != nw {
        return Err(Error::format(
            path,
            format!("header says {nw} waterlines, row has {}", waterlines.len()),
        ));
    }

    let mut stations = Vec::with_capacity(ns);
    let mut offsets = Vec::with_capacity(ns * nw);
    for (ln, line) in lines {
        let vals = line
            .split_whitespace()
            .map(|t| parse_num(path, ln + 1, t))
            .collect::<Result<Vec<_>>>()?;
        if vals.len() != nw + 1 {
            return Err(Error::format(
                path,
                format!("line {}: expected {} columns, got {}", ln + 1, nw + 1, vals.len()),
            ));
        }
        stations.push(vals[0]);
        offsets.extend_from_slice(&vals[1..]);
    }
    if stations.len() != ns {
        return Err(Error::format(
            path,
            format!("header says {ns} stations, table has {}", stations.len()),
        ));
    }
    OffsetGrid::new(stations, waterlines, offsets)
}

pub fn write(grid: &OffsetGrid, path: &Path) -> Result<()> {
    std::fs::write(path, to_string(grid)).map_err(|e| Error::io(path, e))
}

pub fn read(path: &Path) -> Result<OffsetGrid> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse(&text, path)
}

/// Wavefront OBJ mesh of both sides of the wetted hull, in meters.
/// Each grid cell becomes two triangles; the port side mirrors starboard.
pub fn to_obj(hull: &HullForm) -> String {
    let s = hull.dimensional();
    let (ns, nw) = (s.x.len(), s.z.len());
    let mut out = String::from("# hullopt hull mesh, x aft to fore, y to starboard, z up (m)\n");
    for side in [1.0, -1.0] {
        for i in 0..ns {
            for j in 0..nw {
                let [x, y, z] = s.node(i, j);
                let _ = writeln!(out, "v {x} {} {z}", side * y);
            }
        }
    }
    // OBJ indices are 1-based
    let id = |side: usize, i: usize, j: usize| side * ns * nw + i * nw + j + 1;
    for side in 0..2 {
        for i in 0..ns - 1 {
            for j in 0..nw - 1 {
                let (a, b, c, d) = (id(side, i, j), id(side, i + 1, j), id(side, i + 1, j + 1), id(side, i, j + 1));
                if side == 0 {
                    let _ = writeln!(out, "f {a} {b} {c}\nf {a} {c} {d}");
                } else {
                    let _ = writeln!(out, "f {a} {c} {b}\nf {a} {d} {c}");
                }
            }
        }
    }
    out
}

pub fn write_obj(hull: &HullForm, path: &Path) -> Result<()> {
    std::fs::write(path, to_obj(hull)).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::wigley_grid;
    use proptest::prelude::*;

    #[test]
    fn wigley_round_trip_is_byte_stable() {
        let grid = wigley_grid(40, 20).unwrap();
        let text = to_string(&grid);
        let back = parse(&text, Path::new("mem")).unwrap();
        assert_eq!(back, grid);
        assert_eq!(to_string(&back), text);
        assert!(text.starts_with("# hullopt-offsets v1 stations=40 waterlines=20\n"));
    }

    #[test]
    fn rejects_wrong_version_and_shape() {
        let grid = wigley_grid(3, 2).unwrap();
        let text = to_string(&grid);
        let bad = text.replace(" v1 ", " v9 ");
        assert!(matches!(parse(&bad, Path::new("m")), Err(Error::Version { .. })));
        let bad = text.replace("stations=3", "stations=4");
        assert!(matches!(parse(&bad, Path::new("m")), Err(Error::Format { .. })));
        let bad = text.replace("x\\z -1 0", "x\\z -1");
        assert!(parse(&bad, Path::new("m")).is_err());
    }

    proptest! {
        #[test]
        fn arbitrary_offsets_round_trip(vals in proptest::collection::vec(-2.0f64..2.0, 12)) {
            let grid = OffsetGrid::from_fn(4, 3, |_, _| 0.0).unwrap().with_offsets(vals).unwrap();
            let text = to_string(&grid);
            let back = parse(&text, Path::new("mem")).unwrap();
            prop_assert_eq!(&back, &grid);
            prop_assert_eq!(to_string(&back), text);
        }
    }

    #[test]
    fn obj_mesh_counts() {
        let hull = HullForm::new(crate::geometry::wigley_grid(5, 4).unwrap(), 100.0, 10.0, 2.5).unwrap();
        let obj = to_obj(&hull);
        assert_eq!(obj.lines().filter(|l| l.starts_with("v ")).count(), 2 * 20);
        assert_eq!(obj.lines().filter(|l| l.starts_with("f ")).count(), 2 * 2 * 4 * 3);
        assert!(obj.lines().filter(|l| l.starts_with("f ")).all(|l| l
            .split_whitespace()
            .skip(1)
            .all(|k| (1..=40).contains(&k.parse::<usize>().unwrap()))));
    }
}
