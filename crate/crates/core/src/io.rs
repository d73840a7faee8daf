//! Plain-text point files: one point per line, coordinates separated by
//! whitespace and/or commas, `#` starts a comment line.

use std::io::Write;
use std::path::Path;

use crate::cloud::PointCloud;
use crate::error::{Error, Result};

pub fn parse_points(text: &str) -> Result<PointCloud> {
    let mut dim = None;
    let mut coords = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut row = Vec::with_capacity(3);
        for tok in line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|t| !t.is_empty())
        {
            let v: f64 = tok.parse().map_err(|_| Error::Parse {
                line: line_no,
                message: format!("'{tok}' is not a number"),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("'{tok}' is not finite"),
                });
            }
            row.push(v);
        }
        match dim {
            None => {
                if row.len() != 2 && row.len() != 3 {
                    return Err(Error::Parse {
                        line: line_no,
                        message: format!("expected 2 or 3 coordinates, found {}", row.len()),
                    });
                }
                dim = Some(row.len());
            }
            Some(d) if d != row.len() => {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("expected {d} coordinates, found {}", row.len()),
                });
            }
            _ => {}
        }
        coords.extend(row);
    }
    let dim = dim.ok_or(Error::Parse {
        line: 0,
        message: "no points found".into(),
    })?;
    PointCloud::new(dim, coords)
}

pub fn read_points(path: impl AsRef<Path>) -> Result<PointCloud> {
    parse_points(&std::fs::read_to_string(path)?)
}

/// Writes one point per line using the shortest decimal form that
/// round-trips to the same `f64`.
pub fn write_points<W: Write>(cloud: &PointCloud, mut out: W) -> Result<()> {
    for p in cloud.points() {
        let line: Vec<String> = p.iter().map(|v| format!("{v:?}")).collect();
        writeln!(out, "{}", line.join(" "))?;
    }
    Ok(())
}

pub fn save_points(cloud: &PointCloud, path: impl AsRef<Path>) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut w = std::io::BufWriter::new(file);
    write_points(cloud, &mut w)?;
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_mixed_separators_and_comments() {
        let text = "# header\n1, 2, 3\n\n  4 5\t6\n# trailing\n7,8 9\n";
        let c = parse_points(text).unwrap();
        assert_eq!(c.dim(), 3);
        assert_eq!(c.len(), 3);
        assert_eq!(c.point(2), &[7.0, 8.0, 9.0]);
    }

    #[test]
    fn reports_line_numbers() {
        match parse_points("0 0\n1 x\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
        match parse_points("0 0 0\n1 1\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(parse_points("1 2 3 4\n"), Err(Error::Parse { line: 1, .. })));
        assert!(parse_points("# nothing\n").is_err());
    }

    proptest! {
        #[test]
        fn write_then_parse_is_lossless(
            pts in prop::collection::vec(prop::array::uniform3(-1e6f64..1e6), 1..20)
        ) {
            let c = PointCloud::from_points(&pts).unwrap();
            let mut buf = Vec::new();
            write_points(&c, &mut buf).unwrap();
            let back = parse_points(std::str::from_utf8(&buf).unwrap()).unwrap();
            prop_assert_eq!(back, c);
        }
    }
}
