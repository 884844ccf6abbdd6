//! Versioned binary checkpoint format for [`EncoderParams`].
//!
//! Layout (little endian): magic `CGPM`, format version u32, dim u32,
//! vocab_size u32, tokenizer_seed u64, then the f64 arrays in order:
//! embedding `[vocab_size * dim]`, agg_w `[dim * dim]`, ln_gain `[dim]`,
//! ln_bias `[dim]`. Round-trips are bit-exact.

use crate::params::EncoderParams;
use crate::CoreError;
use sha2::{Digest, Sha256};
use std::fs;
use std::path::Path;

const MAGIC: &[u8; 4] = b"CGPM";
const FORMAT_VERSION: u32 = 1;

/// SHA-256 digest of a serialized checkpoint; indexes embed it so a search
/// can refuse a checkpoint it was not built from.
pub type Fingerprint = [u8; 32];

/// Serializes parameters to the checkpoint byte layout.
pub fn params_to_bytes(params: &EncoderParams) -> Vec<u8> {
    let n_floats = params.embedding.len() + params.agg_w.len() + params.ln_gain.len() + params.ln_bias.len();
    let mut out = Vec::with_capacity(4 + 4 + 4 + 4 + 8 + n_floats * 8);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(params.dim as u32).to_le_bytes());
    out.extend_from_slice(&(params.vocab_size as u32).to_le_bytes());
    out.extend_from_slice(&params.tokenizer_seed.to_le_bytes());
    for arr in [&params.embedding, &params.agg_w, &params.ln_gain, &params.ln_bias] {
        for v in arr.iter() {
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
    fn take(&mut self, n: usize) -> Result<&'a [u8], CoreError> {
        if self.pos + n > self.buf.len() {
            return Err(CoreError::Format("truncated".into()));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32, CoreError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, CoreError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64_vec(&mut self, len: usize) -> Result<Vec<f64>, CoreError> {
        let bytes = self.take(len * 8)?;
        Ok(bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }
}

/// Parses a checkpoint byte stream.
pub fn params_from_bytes(buf: &[u8]) -> Result<EncoderParams, CoreError> {
    let mut r = Reader { buf, pos: 0 };
    if r.take(4)? != MAGIC {
        return Err(CoreError::Format("not a checkpoint (bad magic)".into()));
    }
    let version = r.u32()?;
    if version != FORMAT_VERSION {
        return Err(CoreError::UnsupportedVersion(version));
    }
    let dim = r.u32()? as usize;
    let vocab_size = r.u32()? as usize;
    if dim == 0 || vocab_size == 0 {
        return Err(CoreError::Format("zero dimension".into()));
    }
    let tokenizer_seed = r.u64()?;
    let params = EncoderParams {
        dim,
        vocab_size,
        tokenizer_seed,
        embedding: r.f64_vec(vocab_size * dim)?,
        agg_w: r.f64_vec(dim * dim)?,
        ln_gain: r.f64_vec(dim)?,
        ln_bias: r.f64_vec(dim)?,
    };
    if r.pos != buf.len() {
        return Err(CoreError::Format("trailing bytes".into()));
    }
    if !params.all_finite() {
        return Err(CoreError::Format("non-finite parameter".into()));
    }
    Ok(params)
}

/// Writes a checkpoint file.
pub fn save_params(path: &Path, params: &EncoderParams) -> Result<(), CoreError> {
    fs::write(path, params_to_bytes(params))?;
    Ok(())
}

/// Reads and validates a checkpoint file.
pub fn load_params(path: &Path) -> Result<EncoderParams, CoreError> {
    params_from_bytes(&fs::read(path)?)
}

/// Digest of the serialized parameters.
pub fn fingerprint(params: &EncoderParams) -> Fingerprint {
    let mut hasher = Sha256::new();
    hasher.update(params_to_bytes(params));
    hasher.finalize().into()
}

/// Lowercase hex rendering of a fingerprint.
pub fn fingerprint_hex(fp: &Fingerprint) -> String {
    fp.iter().map(|b| format!("{b:02x}")).collect()
}
