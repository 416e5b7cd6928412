//! Vector files.
//!
//! Binary "FJLV": an 18-byte little-endian header (`b"FJLV"`, version `u16`,
//! `d` as `u32`, count as `u64`) followed by `count * d` IEEE doubles,
//! row-major. Text: CSV with one vector per line and an optional leading
//! `# fjlv d=<d>` comment that pins the dimension.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"FJLV";
pub const VERSION: u16 = 1;
pub const HEADER_LEN: usize = 18;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VectorFormat {
    Binary,
    Csv,
}

impl VectorFormat {
    /// `.csv` and `.txt` are text, anything else is binary.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") || ext.eq_ignore_ascii_case("txt") => {
                VectorFormat::Csv
            }
            _ => VectorFormat::Binary,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VectorDataset {
    pub d: usize,
    pub vectors: Vec<Vec<f64>>,
    pub source: String,
}

impl VectorDataset {
    pub fn new(d: usize, vectors: Vec<Vec<f64>>, source: impl Into<String>) -> Result<Self> {
        if let Some((i, v)) = vectors.iter().enumerate().find(|(_, v)| v.len() != d) {
            return Err(Error::dim(format!(
                "vector {i} has length {}, dataset dimension is {d}",
                v.len()
            )));
        }
        Ok(VectorDataset {
            d,
            vectors,
            source: source.into(),
        })
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }
}

pub fn read_vectors(path: impl AsRef<Path>) -> Result<VectorDataset> {
    let path = path.as_ref();
    let mut file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut head = Vec::with_capacity(4);
    (&mut file)
        .take(4)
        .read_to_end(&mut head)
        .map_err(|e| Error::io(path, e))?;
    if head.is_empty() {
        return Err(Error::Parse {
            path: path.into(),
            row: 0,
            reason: "empty file".into(),
        });
    }
    let mut bytes = head;
    file.read_to_end(&mut bytes)
        .map_err(|e| Error::io(path, e))?;
    if bytes.starts_with(MAGIC) {
        read_binary(path, &bytes)
    } else {
        read_csv(path, &bytes)
    }
}

fn malformed(path: &Path, reason: impl Into<String>) -> Error {
    Error::MalformedHeader {
        path: path.into(),
        reason: reason.into(),
    }
}

fn read_binary(path: &Path, bytes: &[u8]) -> Result<VectorDataset> {
    if bytes.len() < HEADER_LEN {
        return Err(malformed(
            path,
            format!("header needs {HEADER_LEN} bytes, file has {}", bytes.len()),
        ));
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != VERSION {
        return Err(malformed(path, format!("unsupported version {version}")));
    }
    let d = u32::from_le_bytes(bytes[6..10].try_into().unwrap()) as usize;
    let count = u64::from_le_bytes(bytes[10..18].try_into().unwrap());
    if d == 0 {
        return Err(malformed(path, "dimension is zero"));
    }
    let body = &bytes[HEADER_LEN..];
    let row_bytes = d * 8;
    let expected = (count as u128) * (row_bytes as u128);
    if body.len() as u128 != expected {
        let complete = body.len() / row_bytes;
        return Err(Error::Parse {
            path: path.into(),
            row: complete,
            reason: format!(
                "header declares {count} vectors of d={d} ({expected} bytes), body has {} bytes",
                body.len()
            ),
        });
    }
    let vectors = body
        .chunks_exact(row_bytes)
        .map(|row| {
            row.chunks_exact(8)
                .map(|b| f64::from_le_bytes(b.try_into().unwrap()))
                .collect()
        })
        .collect();
    VectorDataset::new(d, vectors, path.display().to_string())
}

fn parse_header_dim(path: &Path, line: &str) -> Result<Option<usize>> {
    let body = line.trim_start_matches('#').trim();
    let mut d = None;
    for field in body.split_whitespace() {
        if let Some(v) = field.strip_prefix("d=") {
            d = Some(
                v.parse::<usize>()
                    .ok()
                    .filter(|&d| d > 0)
                    .ok_or_else(|| malformed(path, format!("bad dimension `{v}`")))?,
            );
        }
    }
    Ok(d)
}

fn read_csv(path: &Path, bytes: &[u8]) -> Result<VectorDataset> {
    let mut d: Option<usize> = None;
    let mut vectors = Vec::new();
    let mut saw_header = false;
    for (i, line) in BufReader::new(bytes).lines().enumerate() {
        let row = i + 1;
        let line = line.map_err(|e| Error::Parse {
            path: path.into(),
            row,
            reason: e.to_string(),
        })?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if line.starts_with('#') {
            if row == 1 {
                d = parse_header_dim(path, line)?;
                saw_header = true;
            }
            continue;
        }
        let values = line
            .split(',')
            .map(|f| f.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<f64>, _>>()
            .map_err(|e| Error::Parse {
                path: path.into(),
                row,
                reason: format!("not a number: {e}"),
            })?;
        match d {
            None => d = Some(values.len()),
            Some(d) if d != values.len() => {
                return Err(Error::Parse {
                    path: path.into(),
                    row,
                    reason: format!("expected {d} values, found {}", values.len()),
                })
            }
            _ => {}
        }
        vectors.push(values);
    }
    match d {
        Some(d) => VectorDataset::new(d, vectors, path.display().to_string()),
        None if saw_header => Err(malformed(path, "header does not declare d")),
        None => Err(Error::Parse {
            path: path.into(),
            row: 0,
            reason: "no vectors".into(),
        }),
    }
}

/// Writes `dataset`, picking the format from the file extension.
pub fn write_vectors(path: impl AsRef<Path>, dataset: &VectorDataset) -> Result<()> {
    let path = path.as_ref();
    write_vectors_as(path, dataset, VectorFormat::from_path(path))
}

pub fn write_vectors_as(
    path: impl AsRef<Path>,
    dataset: &VectorDataset,
    format: VectorFormat,
) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let res = match format {
        VectorFormat::Binary => write_binary(&mut w, dataset),
        VectorFormat::Csv => write_csv(&mut w, dataset),
    };
    res.and_then(|_| w.flush()).map_err(|e| Error::io(path, e))
}

fn write_binary(w: &mut impl Write, ds: &VectorDataset) -> std::io::Result<()> {
    let d = u32::try_from(ds.d)
        .map_err(|_| std::io::Error::new(std::io::ErrorKind::InvalidInput, "d exceeds u32"))?;
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&d.to_le_bytes())?;
    w.write_all(&(ds.vectors.len() as u64).to_le_bytes())?;
    for v in &ds.vectors {
        for x in v {
            w.write_all(&x.to_le_bytes())?;
        }
    }
    Ok(())
}

/// Shortest representation that parses back to the same bits.
fn format_value(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || (1e-5..1e16).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

fn write_csv(w: &mut impl Write, ds: &VectorDataset) -> std::io::Result<()> {
    writeln!(w, "# fjlv d={} count={}", ds.d, ds.vectors.len())?;
    for v in &ds.vectors {
        let line: Vec<String> = v.iter().map(|&x| format_value(x)).collect();
        writeln!(w, "{}", line.join(","))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> VectorDataset {
        let vectors = (0..3)
            .map(|i| (0..4).map(|j| (i * 4 + j) as f64 / 7.0 - 0.3).collect())
            .collect();
        VectorDataset::new(4, vectors, "test").unwrap()
    }

    #[test]
    fn binary_and_csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let ds = sample();
        for name in ["v.fjlv", "v.csv"] {
            let path = dir.path().join(name);
            write_vectors(&path, &ds).unwrap();
            let back = read_vectors(&path).unwrap();
            assert_eq!(back.d, 4);
            assert_eq!(back.vectors, ds.vectors, "{name}");
        }
        let bytes = std::fs::read(dir.path().join("v.fjlv")).unwrap();
        assert_eq!(bytes.len(), HEADER_LEN + 3 * 4 * 8);
        assert_eq!(&bytes[..4], b"FJLV");
    }

    #[test]
    fn short_row_is_named() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        std::fs::write(&path, "# fjlv d=4\n1,2,3,4\n1,2,3\n").unwrap();
        match read_vectors(&path) {
            Err(Error::Parse { row, .. }) => assert_eq!(row, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn empty_file_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.csv");
        std::fs::write(&path, "").unwrap();
        assert!(matches!(read_vectors(&path), Err(Error::Parse { .. })));
    }

    #[test]
    fn distinct_errors() {
        let dir = tempfile::tempdir().unwrap();
        let missing = dir.path().join("missing.fjlv");
        assert!(matches!(read_vectors(&missing), Err(Error::Io { .. })));

        let trunc = dir.path().join("trunc.fjlv");
        std::fs::write(&trunc, b"FJLV\x01\x00").unwrap();
        assert!(matches!(
            read_vectors(&trunc),
            Err(Error::MalformedHeader { .. })
        ));

        let header = dir.path().join("h.csv");
        std::fs::write(&header, "# fjlv d=zero\n").unwrap();
        assert!(matches!(
            read_vectors(&header),
            Err(Error::MalformedHeader { .. })
        ));
    }

    #[test]
    fn awkward_values_survive_text() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.csv");
        let v = vec![1e-300, -2.5e20, 0.1 + 0.2, -0.0, 123456.789];
        let ds = VectorDataset::new(5, vec![v.clone()], "t").unwrap();
        write_vectors(&path, &ds).unwrap();
        let back = read_vectors(&path).unwrap().vectors.remove(0);
        for (a, b) in v.iter().zip(&back) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }
}
