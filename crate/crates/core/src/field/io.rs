//! Field files: a self-describing JSON document, or a packed little-endian
//! binary variant for large grids.
//!
//! JSON keys: `n` (fiber dimension), `dims` (cells per axis), `extent`
//! (`[[-1, 1], ...]`), `gref` (`"identity"` or one packed tensor per cell),
//! `data` (one packed upper-triangular tensor per cell, row-major cell
//! order) and the optional boolean `mask` marking deflated cells.
//!
//! Binary layout: magic `RMF1`, then `u32` n, `u32` axis count, one `u32`
//! per axis, `u8` gref kind (0 identity, 1 per cell), `u8` mask flag, the
//! per-cell gref entries if present, the data entries as `f64`, and one byte
//! per cell for the mask if present.

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{CellMask, GrefSpec, GridDomain, SemimetricField};
use crate::error::{Error, Result};
use crate::fiber::{packed_len, SymTensor};
use crate::scalar::Real;

pub const BINARY_MAGIC: &[u8; 4] = b"RMF1";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FileFormat {
    Text,
    Binary,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GrefEntry {
    Named(String),
    PerCell(Vec<Vec<f64>>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldFile {
    pub n: usize,
    pub dims: Vec<usize>,
    pub extent: Vec<[f64; 2]>,
    pub gref: GrefEntry,
    pub data: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mask: Option<Vec<bool>>,
}

fn to_f64s<T: Real>(t: &SymTensor<T>) -> Vec<f64> {
    t.entries().iter().map(|v| v.to_f64().unwrap_or(f64::NAN)).collect()
}

fn tensor_from<T: Real>(n: usize, v: &[f64]) -> Result<SymTensor<T>> {
    let conv: Vec<T> = v
        .iter()
        .map(|&x| T::from_f64(x).ok_or(Error::NonFinite))
        .collect::<Result<_>>()?;
    SymTensor::from_packed(n, &conv)
}

impl FieldFile {
    pub fn from_field<T: Real>(f: &SemimetricField<T>) -> Self {
        let d = f.domain();
        let gref = match d.gref() {
            GrefSpec::Identity => GrefEntry::Named("identity".into()),
            _ => GrefEntry::PerCell((0..d.len()).map(|i| to_f64s(&d.gref_at(i))).collect()),
        };
        let mask = if f.deflated_mask().none() {
            None
        } else {
            Some(f.deflated_mask().bits().to_vec())
        };
        FieldFile {
            n: d.dim(),
            dims: d.dims().to_vec(),
            extent: vec![[-1.0, 1.0]; d.dim()],
            gref,
            data: f.cells().iter().map(to_f64s).collect(),
            mask,
        }
    }

    fn validate(&self) -> Result<usize> {
        let cells: usize = self.dims.iter().product();
        if self.n != self.dims.len() {
            return Err(Error::Format(format!(
                "fiber dimension {} does not match {} grid axes",
                self.n,
                self.dims.len()
            )));
        }
        if self.extent.len() != self.dims.len() || self.extent.iter().any(|e| *e != [-1.0, 1.0]) {
            return Err(Error::Format("extent must be [-1, 1] on every axis".into()));
        }
        if self.data.len() != cells {
            return Err(Error::ShapeMismatch {
                expected: cells,
                got: self.data.len(),
            });
        }
        let p = packed_len(self.n);
        if let Some(bad) = self.data.iter().find(|t| t.len() != p) {
            return Err(Error::ShapeMismatch {
                expected: p,
                got: bad.len(),
            });
        }
        if let Some(m) = &self.mask {
            if m.len() != cells {
                return Err(Error::ShapeMismatch {
                    expected: cells,
                    got: m.len(),
                });
            }
        }
        Ok(cells)
    }

    pub fn domain<T: Real>(&self) -> Result<GridDomain<T>> {
        self.validate()?;
        let gref = match &self.gref {
            GrefEntry::Named(s) if s == "identity" => GrefSpec::Identity,
            GrefEntry::Named(s) => return Err(Error::Format(format!("unknown gref {s:?}"))),
            GrefEntry::PerCell(v) => {
                let ts = v.iter().map(|e| tensor_from(self.n, e)).collect::<Result<Vec<_>>>()?;
                match ts.first() {
                    Some(first) if ts.iter().all(|t| t == first) => GrefSpec::Constant(*first),
                    _ => GrefSpec::PerCell(ts),
                }
            }
        };
        GridDomain::new(self.dims.clone(), gref)
    }

    pub fn to_field<T: Real>(&self) -> Result<SemimetricField<T>> {
        let domain = Arc::new(self.domain()?);
        self.to_field_on(domain)
    }

    /// Reads the cells onto an existing domain, which must match the file's.
    pub fn to_field_on<T: Real>(&self, domain: Arc<GridDomain<T>>) -> Result<SemimetricField<T>> {
        if !domain.same_as(&self.domain()?) {
            return Err(Error::DomainMismatch);
        }
        let cells = self
            .data
            .iter()
            .map(|e| tensor_from(self.n, e))
            .collect::<Result<Vec<_>>>()?;
        match &self.mask {
            Some(m) => SemimetricField::with_mask(domain, cells, &CellMask::new(m.clone())),
            None => SemimetricField::new(domain, cells),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string(self).map_err(|e| Error::Format(e.to_string()))
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let f: FieldFile = serde_json::from_str(s).map_err(|e| Error::Format(e.to_string()))?;
        f.validate()?;
        Ok(f)
    }

    pub fn to_binary(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(BINARY_MAGIC);
        let put_u32 = |out: &mut Vec<u8>, v: usize| out.extend_from_slice(&(v as u32).to_le_bytes());
        put_u32(&mut out, self.n);
        put_u32(&mut out, self.dims.len());
        for &d in &self.dims {
            put_u32(&mut out, d);
        }
        let per_cell = match &self.gref {
            GrefEntry::PerCell(v) => Some(v),
            GrefEntry::Named(_) => None,
        };
        out.push(per_cell.is_some() as u8);
        out.push(self.mask.is_some() as u8);
        for t in per_cell.into_iter().flatten().chain(self.data.iter()) {
            for x in t {
                out.extend_from_slice(&x.to_le_bytes());
            }
        }
        if let Some(m) = &self.mask {
            out.extend(m.iter().map(|&b| b as u8));
        }
        out
    }

    pub fn from_binary(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(4)? != BINARY_MAGIC {
            return Err(Error::Format("bad magic".into()));
        }
        let n = r.u32()?;
        let axes = r.u32()?;
        if axes > 3 {
            return Err(Error::Format(format!("{axes} axes")));
        }
        let dims = (0..axes).map(|_| r.u32()).collect::<Result<Vec<_>>>()?;
        let cells: usize = dims.iter().product();
        let has_gref = r.u8()? != 0;
        let has_mask = r.u8()? != 0;
        if !(2..=3).contains(&n) {
            return Err(Error::UnsupportedDimension(n));
        }
        let p = packed_len(n);
        let mut tensors = |count: usize| -> Result<Vec<Vec<f64>>> {
            (0..count).map(|_| (0..p).map(|_| r.f64()).collect()).collect()
        };
        let gref = if has_gref {
            GrefEntry::PerCell(tensors(cells)?)
        } else {
            GrefEntry::Named("identity".into())
        };
        let data = tensors(cells)?;
        let mask = if has_mask {
            Some(r.take(cells)?.iter().map(|&b| b != 0).collect())
        } else {
            None
        };
        if r.pos != bytes.len() {
            return Err(Error::Format("trailing bytes".into()));
        }
        let f = FieldFile {
            n,
            extent: vec![[-1.0, 1.0]; dims.len()],
            dims,
            gref,
            data,
            mask,
        };
        f.validate()?;
        Ok(f)
    }

    pub fn write(&self, path: &Path, format: FileFormat) -> Result<()> {
        match format {
            FileFormat::Text => std::fs::write(path, self.to_json()?)?,
            FileFormat::Binary => std::fs::write(path, self.to_binary())?,
        }
        Ok(())
    }

    /// Reads either format, detected by the binary magic.
    pub fn read(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path)?;
        if bytes.starts_with(BINARY_MAGIC) {
            Self::from_binary(&bytes)
        } else {
            let s = std::str::from_utf8(&bytes).map_err(|e| Error::Format(e.to_string()))?;
            Self::from_json(s)
        }
    }
}

pub fn read_field<T: Real>(path: &Path) -> Result<SemimetricField<T>> {
    FieldFile::read(path)?.to_field()
}

pub fn write_field<T: Real>(f: &SemimetricField<T>, path: &Path, format: FileFormat) -> Result<()> {
    FieldFile::from_field(f).write(path, format)
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, k: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(k).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| Error::Format("unexpected end of file".into()))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<usize> {
        let b = self.take(4)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]) as usize)
    }

    fn f64(&mut self) -> Result<f64> {
        let b = self.take(8)?;
        let mut a = [0u8; 8];
        a.copy_from_slice(b);
        Ok(f64::from_le_bytes(a))
    }
}
