//! Matrix Market reader/writer (coordinate and array, real, general/symmetric).
//!
//! Parse errors carry 1-based line numbers. A `symmetric` header means only one
//! triangle is stored; off-diagonal entries are mirrored on load and the result
//! carries the symmetry flag. Duplicate coordinate entries are summed.

use super::SparseMatrix;
use crate::{Error, Result};
use std::path::Path;

#[derive(PartialEq, Clone, Copy)]
enum Layout {
    Coordinate,
    Array,
}

#[derive(PartialEq, Clone, Copy)]
enum Shape {
    General,
    Symmetric,
}

fn err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

/// Parse Matrix Market text.
pub fn parse_matrix_market(text: &str) -> Result<SparseMatrix> {
    let mut lines = text.lines().enumerate();

    let (header_no, header) = lines
        .next()
        .ok_or_else(|| err(1, "empty file"))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() < 4 || !fields[0].eq_ignore_ascii_case("%%MatrixMarket") {
        return Err(err(header_no + 1, "expected '%%MatrixMarket matrix <layout> <type> <shape>'"));
    }
    if !fields[1].eq_ignore_ascii_case("matrix") {
        return Err(err(header_no + 1, format!("unsupported object '{}'", fields[1])));
    }
    let layout = match fields[2].to_ascii_lowercase().as_str() {
        "coordinate" => Layout::Coordinate,
        "array" => Layout::Array,
        other => return Err(err(header_no + 1, format!("unsupported layout '{other}'"))),
    };
    match fields[3].to_ascii_lowercase().as_str() {
        "real" | "integer" => {}
        other => return Err(err(header_no + 1, format!("unsupported value type '{other}'"))),
    }
    let shape = match fields.get(4).map(|s| s.to_ascii_lowercase()) {
        None => Shape::General,
        Some(s) if s == "general" => Shape::General,
        Some(s) if s == "symmetric" => Shape::Symmetric,
        Some(other) => return Err(err(header_no + 1, format!("unsupported shape '{other}'"))),
    };

    // Skip comments and blank lines up to the size line.
    let mut size_line = None;
    for (no, line) in lines.by_ref() {
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('%') {
            continue;
        }
        size_line = Some((no, trimmed.to_string()));
        break;
    }
    let (size_no, size_text) = size_line.ok_or_else(|| err(0, "missing size line"))?;
    let dims: Vec<&str> = size_text.split_whitespace().collect();

    let parse_count = |s: &str, what: &str| -> Result<usize> {
        s.parse::<usize>().map_err(|_| err(size_no + 1, format!("bad {what} '{s}'")))
    };

    match layout {
        Layout::Coordinate => {
            if dims.len() != 3 {
                return Err(err(size_no + 1, "coordinate size line must be 'nrows ncols nnz'"));
            }
            let nrows = parse_count(dims[0], "row count")?;
            let ncols = parse_count(dims[1], "column count")?;
            let nnz = parse_count(dims[2], "entry count")?;
            if shape == Shape::Symmetric && nrows != ncols {
                return Err(err(size_no + 1, "symmetric matrix must be square"));
            }
            let mut triplets = Vec::with_capacity(nnz);
            let mut seen = 0usize;
            for (no, line) in lines {
                let trimmed = line.trim();
                if trimmed.is_empty() || trimmed.starts_with('%') {
                    continue;
                }
                let parts: Vec<&str> = trimmed.split_whitespace().collect();
                if parts.len() != 3 {
                    return Err(err(no + 1, "entry must be 'row col value'"));
                }
                let i: usize = parts[0]
                    .parse()
                    .map_err(|_| err(no + 1, format!("bad row index '{}'", parts[0])))?;
                let j: usize = parts[1]
                    .parse()
                    .map_err(|_| err(no + 1, format!("bad column index '{}'", parts[1])))?;
                let v: f64 = parts[2]
                    .parse()
                    .map_err(|_| err(no + 1, format!("bad value '{}'", parts[2])))?;
                if i < 1 || i > nrows || j < 1 || j > ncols {
                    return Err(err(
                        no + 1,
                        format!("index ({i}, {j}) outside declared {nrows}x{ncols}"),
                    ));
                }
                triplets.push((i - 1, j - 1, v));
                if shape == Shape::Symmetric && i != j {
                    triplets.push((j - 1, i - 1, v));
                }
                seen += 1;
            }
            if seen != nnz {
                return Err(err(0, format!("declared {nnz} entries, found {seen}")));
            }
            let mut m = SparseMatrix::from_triplets(nrows, ncols, triplets)?;
            if shape == Shape::Symmetric {
                m = m.mark_symmetric(0.0)?;
            }
            Ok(m)
        }
        Layout::Array => {
            if dims.len() != 2 {
                return Err(err(size_no + 1, "array size line must be 'nrows ncols'"));
            }
            let nrows = parse_count(dims[0], "row count")?;
            let ncols = parse_count(dims[1], "column count")?;
            if shape == Shape::Symmetric && nrows != ncols {
                return Err(err(size_no + 1, "symmetric matrix must be square"));
            }
            let expected = match shape {
                Shape::General => nrows * ncols,
                Shape::Symmetric => ncols * (ncols + 1) / 2,
            };
            let mut values = Vec::with_capacity(expected);
            for (no, line) in lines {
                let trimmed = line.trim();
                if trimmed.is_empty() || trimmed.starts_with('%') {
                    continue;
                }
                for tok in trimmed.split_whitespace() {
                    let v: f64 =
                        tok.parse().map_err(|_| err(no + 1, format!("bad value '{tok}'")))?;
                    values.push(v);
                }
            }
            if values.len() != expected {
                return Err(err(0, format!("declared {expected} values, found {}", values.len())));
            }
            // Column-major order; symmetric stores the lower triangle per column.
            let mut triplets = Vec::new();
            let mut k = 0;
            for j in 0..ncols {
                let start = if shape == Shape::Symmetric { j } else { 0 };
                for i in start..nrows {
                    let v = values[k];
                    k += 1;
                    if v != 0.0 {
                        triplets.push((i, j, v));
                        if shape == Shape::Symmetric && i != j {
                            triplets.push((j, i, v));
                        }
                    }
                }
            }
            let mut m = SparseMatrix::from_triplets(nrows, ncols, triplets)?;
            if shape == Shape::Symmetric {
                m = m.mark_symmetric(0.0)?;
            }
            Ok(m)
        }
    }
}

/// Read a Matrix Market file from disk.
pub fn load_matrix_market(path: impl AsRef<Path>) -> Result<SparseMatrix> {
    let text = std::fs::read_to_string(path.as_ref())?;
    parse_matrix_market(&text)
}

/// Write coordinate/real/general Matrix Market text. Values use Rust's
/// shortest round-trip float formatting, so load(write(m)) == m exactly.
pub fn write_matrix_market(m: &SparseMatrix) -> String {
    let mut out = String::from("%%MatrixMarket matrix coordinate real general\n");
    out.push_str(&format!("{} {} {}\n", m.nrows(), m.ncols(), m.nnz()));
    for &(i, j, v) in m.entries() {
        out.push_str(&format!("{} {} {}\n", i + 1, j + 1, v));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_coordinate() {
        let text = "%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1.0\n2 2 1.0\n";
        let m = parse_matrix_market(text).unwrap();
        assert_eq!(m.entries(), &[(0, 0, 1.0), (1, 1, 1.0)]);
    }

    #[test]
    fn symmetric_entry_expands() {
        let text = "%%MatrixMarket matrix coordinate real symmetric\n2 2 1\n2 1 3.0\n";
        let m = parse_matrix_market(text).unwrap();
        assert_eq!(m.entries(), &[(0, 1, 3.0), (1, 0, 3.0)]);
        assert!(m.is_symmetric_flagged());
    }

    #[test]
    fn out_of_range_index_is_an_error() {
        let text = "%%MatrixMarket matrix coordinate real general\n2 2 1\n3 1 1.0\n";
        let e = parse_matrix_market(text).unwrap_err();
        assert!(e.to_string().contains("line 3"), "{e}");
    }

    #[test]
    fn bad_value_reports_line() {
        let text = "%%MatrixMarket matrix coordinate real general\n2 2 1\n1 1 abc\n";
        let e = parse_matrix_market(text).unwrap_err();
        assert!(e.to_string().contains("line 3"), "{e}");
    }

    #[test]
    fn duplicate_entries_are_summed() {
        let text = "%%MatrixMarket matrix coordinate real general\n1 1 2\n1 1 1.5\n1 1 2.5\n";
        let m = parse_matrix_market(text).unwrap();
        assert_eq!(m.entries(), &[(0, 0, 4.0)]);
    }

    #[test]
    fn array_general_is_column_major() {
        let text = "%%MatrixMarket matrix array real general\n2 2\n1\n2\n3\n4\n";
        let m = parse_matrix_market(text).unwrap();
        assert_eq!(m.get(0, 0), 1.0);
        assert_eq!(m.get(1, 0), 2.0);
        assert_eq!(m.get(0, 1), 3.0);
        assert_eq!(m.get(1, 1), 4.0);
    }

    #[test]
    fn array_symmetric_lower_triangle() {
        let text = "%%MatrixMarket matrix array real symmetric\n2 2\n1\n5\n2\n";
        let m = parse_matrix_market(text).unwrap();
        assert_eq!(m.get(0, 1), 5.0);
        assert_eq!(m.get(1, 0), 5.0);
        assert_eq!(m.get(1, 1), 2.0);
    }

    #[test]
    fn comments_and_blank_lines_skipped() {
        let text = "%%MatrixMarket matrix coordinate real general\n% a comment\n\n1 1 1\n1 1 7\n";
        let m = parse_matrix_market(text).unwrap();
        assert_eq!(m.get(0, 0), 7.0);
    }

    #[test]
    fn entry_count_mismatch_is_an_error() {
        let text = "%%MatrixMarket matrix coordinate real general\n2 2 3\n1 1 1.0\n";
        assert!(parse_matrix_market(text).is_err());
    }

    #[test]
    fn roundtrip_is_exact() {
        let m = SparseMatrix::from_triplets(
            3,
            2,
            vec![(0, 0, 0.1), (2, 1, -1.0 / 3.0), (1, 1, 1e-300)],
        )
        .unwrap();
        let again = parse_matrix_market(&write_matrix_market(&m)).unwrap();
        assert_eq!(m.entries(), again.entries());
    }
}
