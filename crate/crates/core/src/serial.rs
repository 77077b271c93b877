//! Tensor encoding shared by model and language-model files, and atomic
//! file writes.

use std::io::Write;
use std::path::Path;

use base64::engine::general_purpose::STANDARD;
use base64::Engine as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, FormatError, Result};
use crate::nn::{Matrix, Parameter};

/// A named matrix whose values are little-endian `f64` bytes in base64.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TensorRecord {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
    pub data: String,
}

impl TensorRecord {
    pub fn from_matrix(name: impl Into<String>, m: &Matrix) -> Self {
        let mut bytes = Vec::with_capacity(m.data().len() * 8);
        for v in m.data() {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        Self {
            name: name.into(),
            rows: m.rows(),
            cols: m.cols(),
            data: STANDARD.encode(bytes),
        }
    }

    pub fn from_parameter(p: &Parameter) -> Self {
        Self::from_matrix(p.name.clone(), &p.value)
    }

    pub fn to_matrix(&self) -> Result<Matrix, FormatError> {
        let err = |detail: String| FormatError::Tensor {
            name: self.name.clone(),
            detail,
        };
        let bytes = STANDARD
            .decode(&self.data)
            .map_err(|e| err(format!("bad base64: {e}")))?;
        let expected = self.rows * self.cols * 8;
        if bytes.len() != expected {
            return Err(FormatError::Truncated(format!(
                "tensor {} holds {} bytes, expected {expected}",
                self.name,
                bytes.len()
            )));
        }
        let data = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
            .collect();
        Matrix::from_vec(self.rows, self.cols, data).map_err(|e| err(e.to_string()))
    }

    pub fn to_parameter(&self) -> Result<Parameter, FormatError> {
        Ok(Parameter::new(self.name.clone(), self.to_matrix()?))
    }
}

/// Pops tensors off a list in the order they were written, checking names
/// and shapes as it goes.
pub struct TensorReader {
    tensors: std::vec::IntoIter<TensorRecord>,
}

impl TensorReader {
    pub fn new(tensors: Vec<TensorRecord>) -> Self {
        Self {
            tensors: tensors.into_iter(),
        }
    }

    pub fn next(&mut self, name: &str, shape: Option<(usize, usize)>) -> Result<Parameter, FormatError> {
        let rec = self
            .tensors
            .next()
            .ok_or_else(|| FormatError::Truncated(format!("missing tensor {name}")))?;
        if rec.name != name {
            return Err(FormatError::Tensor {
                name: rec.name,
                detail: format!("expected tensor {name} at this position"),
            });
        }
        if let Some((r, c)) = shape {
            if (rec.rows, rec.cols) != (r, c) {
                return Err(FormatError::WidthChain(format!(
                    "tensor {name} is {}x{}, expected {r}x{c}",
                    rec.rows, rec.cols
                )));
            }
        }
        rec.to_parameter()
    }

    pub fn finish(mut self) -> Result<(), FormatError> {
        match self.tensors.next() {
            None => Ok(()),
            Some(rec) => Err(FormatError::Other(format!("unexpected extra tensor {}", rec.name))),
        }
    }
}

/// Writes via a temporary file in the target directory and renames it into
/// place, so readers never see a partial file.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}
