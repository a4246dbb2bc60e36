//! RDK array files: one ASCII header line `RDK1 <image|sinogram> <rows> <cols>`
//! followed by `rows * cols` little-endian `f64` values in row-major order.

use std::fs;
use std::path::Path;

use thiserror::Error;

const MAGIC: &str = "RDK1";
/// Longest header accepted before the newline.
const MAX_HEADER: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RdkKind {
    Image,
    Sinogram,
}

impl RdkKind {
    pub fn name(self) -> &'static str {
        match self {
            RdkKind::Image => "image",
            RdkKind::Sinogram => "sinogram",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RdkArray {
    pub kind: RdkKind,
    pub rows: usize,
    pub cols: usize,
    pub values: Vec<f64>,
}

#[derive(Debug, Error)]
pub enum RdkError {
    #[error("line 1: {0}")]
    Header(String),
    #[error("expected {expected} bytes of data after the header, found {actual}")]
    Length { expected: usize, actual: usize },
    #[error("value {index} is not finite")]
    NonFinite { index: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl RdkArray {
    pub fn header(&self) -> String {
        format!("{MAGIC} {} {} {}\n", self.kind.name(), self.rows, self.cols)
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = self.header().into_bytes();
        out.reserve(8 * self.values.len());
        for v in &self.values {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<RdkArray, RdkError> {
        let newline = bytes
            .iter()
            .take(MAX_HEADER)
            .position(|&b| b == b'\n')
            .ok_or_else(|| RdkError::Header("missing header line".into()))?;
        let header = std::str::from_utf8(&bytes[..newline])
            .map_err(|_| RdkError::Header("header is not ASCII".into()))?;
        let fields: Vec<&str> = header.split(' ').collect();
        let [magic, kind, rows, cols] = fields[..] else {
            return Err(RdkError::Header(format!("expected 4 fields, found {}", fields.len())));
        };
        if magic != MAGIC {
            return Err(RdkError::Header(format!("bad magic '{magic}'")));
        }
        let kind = match kind {
            "image" => RdkKind::Image,
            "sinogram" => RdkKind::Sinogram,
            other => return Err(RdkError::Header(format!("unknown array kind '{other}'"))),
        };
        let dim = |s: &str, what: &str| -> Result<usize, RdkError> {
            match s.parse::<usize>() {
                Ok(n) if n > 0 => Ok(n),
                _ => Err(RdkError::Header(format!("bad {what} count '{s}'"))),
            }
        };
        let (rows, cols) = (dim(rows, "row")?, dim(cols, "column")?);
        if kind == RdkKind::Image && rows != cols {
            return Err(RdkError::Header(format!("image must be square, found {rows}x{cols}")));
        }
        let data = &bytes[newline + 1..];
        let expected = rows
            .checked_mul(cols)
            .and_then(|n| n.checked_mul(8))
            .ok_or_else(|| RdkError::Header("dimensions overflow".into()))?;
        if data.len() != expected {
            return Err(RdkError::Length {
                expected,
                actual: data.len(),
            });
        }
        let values: Vec<f64> = data
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
            .collect();
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(RdkError::NonFinite { index });
        }
        Ok(RdkArray {
            kind,
            rows,
            cols,
            values,
        })
    }

    pub fn read(path: &Path) -> Result<RdkArray, RdkError> {
        RdkArray::decode(&fs::read(path)?)
    }

    pub fn write(&self, path: &Path) -> Result<(), RdkError> {
        fs::write(path, self.encode())?;
        Ok(())
    }
}
