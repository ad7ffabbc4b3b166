//! Matrix Market coordinate files for real sparse matrices.

use std::io::{BufRead, Write};

use ddseq_core::linalg::{SparseMatrix, TripletBuilder};

#[derive(Debug, thiserror::Error)]
pub enum MmError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

fn parse_err(line: usize, msg: &str) -> MmError {
    MmError::Parse {
        line,
        msg: msg.to_string(),
    }
}

/// Writes `a` with 1-based indices; symmetric matrices store only their
/// lower triangle.
pub fn write_matrix_market<W: Write>(mut w: W, a: &SparseMatrix) -> Result<(), MmError> {
    let symmetric = a.n_rows() == a.n_cols() && a.is_symmetric(0.0);
    let keep = |i: usize, j: usize| !symmetric || j <= i;
    let count = (0..a.n_rows())
        .map(|i| a.row(i).0.iter().filter(|&&j| keep(i, j)).count())
        .sum::<usize>();
    let kind = if symmetric { "symmetric" } else { "general" };
    writeln!(w, "%%MatrixMarket matrix coordinate real {kind}")?;
    writeln!(w, "{} {} {}", a.n_rows(), a.n_cols(), count)?;
    for i in 0..a.n_rows() {
        let (cols, vals) = a.row(i);
        for (&j, v) in cols.iter().zip(vals) {
            if keep(i, j) {
                writeln!(w, "{} {} {:.17e}", i + 1, j + 1, v)?;
            }
        }
    }
    Ok(())
}

/// Reads a `coordinate real` matrix, `general` or `symmetric`.
pub fn read_matrix_market<R: BufRead>(r: R) -> Result<SparseMatrix, MmError> {
    let mut lines = r.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| parse_err(1, "empty file"))?;
    let header = header?.to_ascii_lowercase();
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() < 5 || fields[0] != "%%matrixmarket" || fields[1] != "matrix" {
        return Err(parse_err(1, "not a Matrix Market matrix header"));
    }
    if fields[2] != "coordinate" || !matches!(fields[3], "real" | "integer") {
        return Err(parse_err(1, "only coordinate real matrices are supported"));
    }
    let symmetric = match fields[4] {
        "general" => false,
        "symmetric" => true,
        _ => return Err(parse_err(1, "unsupported symmetry")),
    };
    let mut builder: Option<(TripletBuilder, usize, usize)> = None;
    let mut expected = 0;
    let mut seen = 0;
    for (no, line) in lines {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('%') {
            continue;
        }
        let parts: Vec<&str> = t.split_whitespace().collect();
        match builder.as_mut() {
            None => {
                let nums: Vec<usize> = parts
                    .iter()
                    .map(|p| p.parse())
                    .collect::<Result<_, _>>()
                    .map_err(|_| parse_err(no + 1, "bad size line"))?;
                if nums.len() != 3 {
                    return Err(parse_err(no + 1, "size line needs rows, cols, entries"));
                }
                builder = Some((TripletBuilder::new(nums[0], nums[1]), nums[0], nums[1]));
                expected = nums[2];
            }
            Some((b, rows, cols)) => {
                if parts.len() != 3 {
                    return Err(parse_err(no + 1, "entry needs row, col, value"));
                }
                let i: usize = parts[0].parse().map_err(|_| parse_err(no + 1, "bad row"))?;
                let j: usize = parts[1]
                    .parse()
                    .map_err(|_| parse_err(no + 1, "bad column"))?;
                let v: f64 = parts[2]
                    .parse()
                    .map_err(|_| parse_err(no + 1, "bad value"))?;
                if i == 0 || j == 0 || i > *rows || j > *cols {
                    return Err(parse_err(no + 1, "index out of range"));
                }
                b.push(i - 1, j - 1, v);
                if symmetric && i != j {
                    b.push(j - 1, i - 1, v);
                }
                seen += 1;
            }
        }
    }
    let b = builder.ok_or_else(|| parse_err(0, "missing size line"))?;
    if seen != expected {
        return Err(parse_err(0, "entry count does not match the size line"));
    }
    Ok(b.0.build())
}
