//! Versioned binary layout of a search index.
//!
//! Little endian throughout: magic `CGIX`, format version u32, the
//! 32-byte fingerprint of the checkpoint the vectors came from, dim u32,
//! entry count u64, then entries sorted by snippet id. Each entry is two
//! length-prefixed strings (snippet id, function id), a granularity tag
//! byte, four u64 span fields, and `dim` f64 vector components.
//! Round-trips are bit-exact.

use crate::IndexError;
use codegrain_core::{Fingerprint, Granularity};
use std::fs;
use std::path::Path;

const MAGIC: &[u8; 4] = b"CGIX";
const FORMAT_VERSION: u32 = 1;
/// Cap on id lengths; a corrupt length prefix fails fast instead of
/// attempting a huge allocation.
const MAX_ID_BYTES: usize = 4096;

/// One searchable snippet: identity, display geometry, and its vector.
#[derive(Debug, Clone, PartialEq)]
pub struct IndexEntry {
    pub snippet_id: String,
    pub function_id: String,
    pub granularity: Granularity,
    /// Byte offsets into the function source, for display.
    pub byte_start: usize,
    pub byte_end: usize,
    /// 1-based inclusive line numbers, for display.
    pub start_line: usize,
    pub end_line: usize,
    pub vector: Vec<f64>,
}

/// An immutable vector index over snippets.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchIndex {
    dim: usize,
    fingerprint: Fingerprint,
    entries: Vec<IndexEntry>,
}

impl SearchIndex {
    /// Validates and adopts `entries`: ids must be unique and sorted,
    /// vectors must match `dim` and be finite.
    pub fn new(
        dim: usize,
        fingerprint: Fingerprint,
        entries: Vec<IndexEntry>,
    ) -> Result<SearchIndex, IndexError> {
        if dim == 0 {
            return Err(IndexError::Format("zero dimension".into()));
        }
        for pair in entries.windows(2) {
            if pair[0].snippet_id >= pair[1].snippet_id {
                return Err(IndexError::Format(format!(
                    "entries not sorted by snippet id at {}",
                    pair[1].snippet_id
                )));
            }
        }
        for e in &entries {
            if e.vector.len() != dim {
                return Err(IndexError::Format(format!(
                    "entry {} has {} components, index dimension is {dim}",
                    e.snippet_id,
                    e.vector.len()
                )));
            }
            if e.vector.iter().any(|v| !v.is_finite()) {
                return Err(IndexError::Format(format!(
                    "entry {} has a non-finite component",
                    e.snippet_id
                )));
            }
        }
        Ok(SearchIndex { dim, fingerprint, entries })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn fingerprint(&self) -> &Fingerprint {
        &self.fingerprint
    }

    pub fn entries(&self) -> &[IndexEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Entry by snippet id, via binary search over the sorted entries.
    pub fn get(&self, snippet_id: &str) -> Option<&IndexEntry> {
        self.entries
            .binary_search_by(|e| e.snippet_id.as_str().cmp(snippet_id))
            .ok()
            .map(|i| &self.entries[i])
    }
}

fn put_str(out: &mut Vec<u8>, s: &str) {
    out.extend_from_slice(&(s.len() as u32).to_le_bytes());
    out.extend_from_slice(s.as_bytes());
}

/// Serializes the index to its byte layout.
pub fn index_to_bytes(index: &SearchIndex) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&index.fingerprint);
    out.extend_from_slice(&(index.dim as u32).to_le_bytes());
    out.extend_from_slice(&(index.entries.len() as u64).to_le_bytes());
    for e in &index.entries {
        put_str(&mut out, &e.snippet_id);
        put_str(&mut out, &e.function_id);
        out.push(e.granularity.code());
        for v in [e.byte_start, e.byte_end, e.start_line, e.end_line] {
            out.extend_from_slice(&(v as u64).to_le_bytes());
        }
        for v in &e.vector {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], IndexError> {
        if self.pos + n > self.buf.len() {
            return Err(IndexError::Format("truncated index".into()));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32, IndexError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, IndexError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn string(&mut self) -> Result<String, IndexError> {
        let len = self.u32()? as usize;
        if len > MAX_ID_BYTES {
            return Err(IndexError::Format(format!("id length {len} out of range")));
        }
        let bytes = self.take(len)?;
        String::from_utf8(bytes.to_vec())
            .map_err(|_| IndexError::Format("id is not utf-8".into()))
    }
}

/// Parses an index byte stream, revalidating every invariant.
pub fn index_from_bytes(buf: &[u8]) -> Result<SearchIndex, IndexError> {
    let mut r = Reader { buf, pos: 0 };
    if r.take(4)? != MAGIC {
        return Err(IndexError::Format("not an index (bad magic)".into()));
    }
    let version = r.u32()?;
    if version != FORMAT_VERSION {
        return Err(IndexError::UnsupportedVersion(version));
    }
    let mut fingerprint: Fingerprint = [0; 32];
    fingerprint.copy_from_slice(r.take(32)?);
    let dim = r.u32()? as usize;
    let n_entries = r.u64()? as usize;
    let mut entries = Vec::with_capacity(n_entries.min(1 << 20));
    for _ in 0..n_entries {
        let snippet_id = r.string()?;
        let function_id = r.string()?;
        let tag = r.take(1)?[0];
        let granularity = Granularity::from_code(tag)
            .ok_or_else(|| IndexError::Format(format!("bad granularity tag {tag}")))?;
        let byte_start = r.u64()? as usize;
        let byte_end = r.u64()? as usize;
        let start_line = r.u64()? as usize;
        let end_line = r.u64()? as usize;
        let vector = r
            .take(dim * 8)?
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        entries.push(IndexEntry {
            snippet_id,
            function_id,
            granularity,
            byte_start,
            byte_end,
            start_line,
            end_line,
            vector,
        });
    }
    if r.pos != buf.len() {
        return Err(IndexError::Format("trailing bytes".into()));
    }
    SearchIndex::new(dim, fingerprint, entries)
}

/// Writes an index file.
pub fn save_index(path: &Path, index: &SearchIndex) -> Result<(), IndexError> {
    fs::write(path, index_to_bytes(index))?;
    Ok(())
}

/// Reads and validates an index file.
pub fn load_index(path: &Path) -> Result<SearchIndex, IndexError> {
    index_from_bytes(&fs::read(path)?)
}
