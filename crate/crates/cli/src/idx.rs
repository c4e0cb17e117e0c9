//! IDX containers (big-endian), as used by the MNIST distribution.

use std::fs::File;
use std::io::Read;
use std::path::Path;

use thiserror::Error;

pub const IMAGES_MAGIC: u32 = 0x0000_0803;
pub const LABELS_MAGIC: u32 = 0x0000_0801;

#[derive(Debug, Error)]
pub enum IdxError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("byte {offset}: {msg}")]
    Format { offset: u64, msg: String },
}

fn format_err(offset: usize, msg: impl Into<String>) -> IdxError {
    IdxError::Format { offset: offset as u64, msg: msg.into() }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IdxDataset {
    pub magic: u32,
    pub dims: Vec<u32>,
    pub payload: Vec<u8>,
}

impl IdxDataset {
    /// Validates the header against the bytes that are actually present
    /// before touching the payload.
    pub fn parse(bytes: &[u8]) -> Result<Self, IdxError> {
        if bytes.len() < 4 {
            return Err(format_err(bytes.len(), "truncated magic number"));
        }
        let magic = u32::from_be_bytes([bytes[0], bytes[1], bytes[2], bytes[3]]);
        if magic != IMAGES_MAGIC && magic != LABELS_MAGIC {
            return Err(format_err(
                0,
                format!("bad magic: expected 0x{IMAGES_MAGIC:08x} or 0x{LABELS_MAGIC:08x}, found 0x{magic:08x}"),
            ));
        }
        let ndims = (magic & 0xff) as usize;
        let header = 4 + 4 * ndims;
        if bytes.len() < header {
            return Err(format_err(bytes.len(), format!("truncated header: {ndims} dimensions need {header} bytes")));
        }
        let dims: Vec<u32> =
            bytes[4..header].chunks_exact(4).map(|c| u32::from_be_bytes([c[0], c[1], c[2], c[3]])).collect();
        let expected = dims
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d as usize))
            .ok_or_else(|| format_err(4, format!("dimensions {dims:?} overflow")))?;
        let found = bytes.len() - header;
        if found < expected {
            return Err(format_err(bytes.len(), format!("truncated payload: dimensions {dims:?} need {expected} bytes, found {found}")));
        }
        if found > expected {
            return Err(format_err(header + expected, format!("{} trailing bytes after payload of {expected}", found - expected)));
        }
        Ok(Self { magic, dims, payload: bytes[header..].to_vec() })
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(4 + 4 * self.dims.len() + self.payload.len());
        out.extend_from_slice(&self.magic.to_be_bytes());
        for d in &self.dims {
            out.extend_from_slice(&d.to_be_bytes());
        }
        out.extend_from_slice(&self.payload);
        out
    }

    /// Number of items along the first dimension.
    pub fn len(&self) -> usize {
        self.dims.first().copied().unwrap_or(0) as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn item_size(&self) -> usize {
        self.dims.iter().skip(1).map(|&d| d as usize).product()
    }

    /// Row-major bytes of item `i`.
    pub fn item(&self, i: usize) -> Option<&[u8]> {
        let n = self.item_size();
        (i < self.len()).then(|| &self.payload[i * n..(i + 1) * n])
    }

    /// Gray level of image `i` at row `r`, column `c`.
    pub fn pixel(&self, i: usize, r: usize, c: usize) -> Option<u8> {
        if self.magic != IMAGES_MAGIC {
            return None;
        }
        let (h, w) = (self.dims[1] as usize, self.dims[2] as usize);
        if r >= h || c >= w {
            return None;
        }
        self.item(i).map(|img| img[r * w + c])
    }

    pub fn label(&self, i: usize) -> Option<u8> {
        if self.magic != LABELS_MAGIC {
            return None;
        }
        self.payload.get(i).copied()
    }
}

/// Reads the whole file (never more than its size) and parses it.
pub fn load_idx(path: &Path) -> Result<IdxDataset, IdxError> {
    let io = |source| IdxError::Io { path: path.display().to_string(), source };
    let mut f = File::open(path).map_err(io)?;
    let size = f.metadata().map_err(io)?.len() as usize;
    let mut bytes = Vec::with_capacity(size);
    f.read_to_end(&mut bytes).map_err(io)?;
    IdxDataset::parse(&bytes)
}

/// Images of `digit` from an image/label pair, in file order.
pub fn images_of_digit(images: &IdxDataset, labels: &IdxDataset, digit: u8) -> Result<Vec<Vec<u8>>, IdxError> {
    if images.magic != IMAGES_MAGIC || labels.magic != LABELS_MAGIC {
        return Err(format_err(0, "expected an image file and a label file"));
    }
    if images.len() != labels.len() {
        return Err(format_err(4, format!("{} images but {} labels", images.len(), labels.len())));
    }
    Ok((0..images.len()).filter(|&i| labels.label(i) == Some(digit)).map(|i| images.item(i).unwrap().to_vec()).collect())
}
