//! Binary dump of every cell's `dq_out` tensor.
//!
//! All integers and floats are little-endian:
//!
//! ```text
//! "BBDQ"  u32 version (1)  u64 cells  u32 components  u32 rows  u32 cols
//! cells x components matrices, each rows*cols f64 in column-major order
//! ```

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use super::config::TensorId;
use super::state::ProxyState;
use crate::error::{Error, Result};

pub const DUMP_MAGIC: &[u8; 4] = b"BBDQ";
pub const DUMP_VERSION: u32 = 1;
const HEADER_LEN: usize = 4 + 4 + 8 + 4 + 4 + 4;

/// Decoded dump contents.
#[derive(Debug, Clone, PartialEq)]
pub struct Dump {
    pub cells: u64,
    pub components: u32,
    pub rows: u32,
    pub cols: u32,
    /// Column-major matrices, cell-major then component.
    pub data: Vec<f64>,
}

impl Dump {
    pub fn from_state(state: &ProxyState) -> Result<Self> {
        let cells = state.tensor(TensorId::DqOut);
        let (rows, cols) = cells.first().map_or_else(
            || {
                let d = state
                    .plan()
                    .tensor_dims(TensorId::DqOut)
                    .expect("dq_out is always planned");
                (d.rows, d.cols)
            },
            |t| (t.rows(), t.cols()),
        );
        let mut data = Vec::with_capacity(cells.len() * state.components() * rows * cols);
        for t in cells {
            for comp in 0..t.component_count() {
                for col in 0..cols {
                    for row in 0..rows {
                        data.push(t.get(comp, row, col));
                    }
                }
            }
        }
        let narrow = |v: usize, what: &str| {
            u32::try_from(v).map_err(|_| Error::DumpFormat(format!("{what} {v} does not fit in u32")))
        };
        Ok(Dump {
            cells: cells.len() as u64,
            components: narrow(state.components(), "component count")?,
            rows: narrow(rows, "row count")?,
            cols: narrow(cols, "column count")?,
            data,
        })
    }

    pub fn shape(&self) -> (u64, u32, u32, u32) {
        (self.cells, self.components, self.rows, self.cols)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN + 8 * self.data.len());
        out.extend_from_slice(DUMP_MAGIC);
        out.extend_from_slice(&DUMP_VERSION.to_le_bytes());
        out.extend_from_slice(&self.cells.to_le_bytes());
        out.extend_from_slice(&self.components.to_le_bytes());
        out.extend_from_slice(&self.rows.to_le_bytes());
        out.extend_from_slice(&self.cols.to_le_bytes());
        for x in &self.data {
            out.extend_from_slice(&x.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < HEADER_LEN {
            return Err(Error::DumpFormat(format!(
                "{} bytes is shorter than the header",
                bytes.len()
            )));
        }
        if &bytes[..4] != DUMP_MAGIC {
            return Err(Error::DumpFormat("bad magic, expected BBDQ".into()));
        }
        let u32_at = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().unwrap());
        let version = u32_at(4);
        if version != DUMP_VERSION {
            return Err(Error::DumpFormat(format!("unsupported version {version}")));
        }
        let cells = u64::from_le_bytes(bytes[8..16].try_into().unwrap());
        let (components, rows, cols) = (u32_at(16), u32_at(20), u32_at(24));
        let count = [components as u64, rows as u64, cols as u64]
            .iter()
            .try_fold(cells, |acc, &x| acc.checked_mul(x))
            .and_then(|n| usize::try_from(n).ok())
            .ok_or_else(|| Error::DumpFormat("matrix count overflows".into()))?;
        let body = &bytes[HEADER_LEN..];
        if Some(body.len()) != count.checked_mul(8) {
            return Err(Error::DumpFormat(format!(
                "header announces {count} values, body holds {} bytes",
                body.len()
            )));
        }
        let data = body
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Ok(Dump {
            cells,
            components,
            rows,
            cols,
            data,
        })
    }
}

pub fn write_dump(state: &ProxyState, path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    w.write_all(&Dump::from_state(state)?.to_bytes())?;
    w.flush()?;
    Ok(())
}

pub fn read_dump(path: impl AsRef<Path>) -> Result<Dump> {
    Dump::from_bytes(&fs::read(path)?)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DumpComparison {
    pub max_abs_diff: f64,
    pub pass: bool,
}

/// Largest element-wise difference. A NaN on either side makes the
/// difference NaN and the comparison fail.
pub fn compare(a: &Dump, b: &Dump, tol: f64) -> Result<DumpComparison> {
    if a.shape() != b.shape() {
        return Err(Error::ShapeMismatch(format!(
            "dump shapes differ: {:?} vs {:?} (cells, components, rows, cols)",
            a.shape(),
            b.shape()
        )));
    }
    let mut max = 0.0f64;
    for (x, y) in a.data.iter().zip(&b.data) {
        let d = (x - y).abs();
        if d.is_nan() {
            max = f64::NAN;
            break;
        }
        max = max.max(d);
    }
    Ok(DumpComparison {
        max_abs_diff: max,
        pass: max <= tol,
    })
}

pub fn compare_dumps(path_a: impl AsRef<Path>, path_b: impl AsRef<Path>, tol: f64) -> Result<DumpComparison> {
    compare(&read_dump(path_a)?, &read_dump(path_b)?, tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::proxy::config::{parse_chain, ProxyConfig};

    fn state(cells: usize) -> ProxyState {
        ProxyState::new(&ProxyConfig {
            cells,
            ..ProxyConfig::default()
        })
        .unwrap()
    }

    #[test]
    fn header_layout() {
        let bytes = Dump::from_state(&state(2)).unwrap().to_bytes();
        assert_eq!(&bytes[..4], b"BBDQ");
        assert_eq!(bytes[4..8], [1, 0, 0, 0]);
        assert_eq!(bytes[8..16], [2, 0, 0, 0, 0, 0, 0, 0]);
        assert_eq!(bytes[16..20], [4, 0, 0, 0]);
        assert_eq!(bytes[20..24], [10, 0, 0, 0]);
        assert_eq!(bytes[24..28], [9, 0, 0, 0]);
        assert_eq!(bytes.len(), 28 + 2 * 4 * 90 * 8);
    }

    #[test]
    fn file_round_trip_and_self_compare() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.bbdq");
        let s = state(3);
        write_dump(&s, &path).unwrap();
        let back = read_dump(&path).unwrap();
        assert_eq!(back.to_bytes(), Dump::from_state(&s).unwrap().to_bytes());
        let cmp = compare_dumps(&path, &path, 0.0).unwrap();
        assert_eq!(cmp.max_abs_diff, 0.0);
        assert!(cmp.pass);
    }

    #[test]
    fn different_cell_counts_mismatch() {
        let a = Dump::from_state(&state(2)).unwrap();
        let b = Dump::from_state(&state(3)).unwrap();
        assert!(matches!(compare(&a, &b, 1.0), Err(Error::ShapeMismatch(_))));
    }

    #[test]
    fn nan_fails() {
        let a = Dump::from_state(&state(1)).unwrap();
        let mut b = a.clone();
        b.data[5] = f64::NAN;
        let cmp = compare(&a, &b, f64::INFINITY).unwrap();
        assert!(!cmp.pass);
    }

    #[test]
    fn row_major_is_dumped_column_major() {
        let cfg = ProxyConfig {
            cells: 1,
            components: 1,
            chain: parse_chain("RowMajor 2 3 1 cii g dq dq_out 1 1\n").unwrap(),
            ..ProxyConfig::default()
        };
        let s = ProxyState::new(&cfg).unwrap();
        let t = &s.tensor(TensorId::DqOut)[0];
        let d = Dump::from_state(&s).unwrap();
        assert_eq!((d.rows, d.cols), (2, 3));
        assert_eq!(d.data[1], t.get(0, 1, 0));
        assert_eq!(d.data[2], t.get(0, 0, 1));
    }

    #[test]
    fn truncated_and_bad_magic() {
        let mut bytes = Dump::from_state(&state(1)).unwrap().to_bytes();
        assert!(Dump::from_bytes(&bytes[..bytes.len() - 1]).is_err());
        bytes[0] = b'X';
        assert!(Dump::from_bytes(&bytes).is_err());
    }
}
