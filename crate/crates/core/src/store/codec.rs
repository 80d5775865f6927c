//! Binary container for matrices and tensors.
//!
//! ```text
//! magic        4 bytes   "TFKM" (matrix) | "TFKT" (tensor)
//! version      u16 LE
//! weighting    u8        0 raw, 1 ppmi, 2 plmi
//! reserved     u8        0
//! payload_len  u64 LE
//! payload      payload_len bytes
//! crc32        u32 LE    over every preceding byte
//! ```
//!
//! Payload integers are LEB128 varints; values are f64 bit patterns, LE.
//! Vocabularies are length-prefixed UTF-8 strings in ascending order. Cells
//! are written as runs: one run per non-empty matrix row (tensor
//! `(verb, relation)` slice), with the run key and the column ids delta
//! encoded.

use std::fs;
use std::io;
use std::path::Path;

use thiserror::Error;

use super::{CoocMatrix, RoleTensor, TensorEntry, Weighting};
use crate::vocab::Vocab;

const MATRIX_MAGIC: [u8; 4] = *b"TFKM";
const TENSOR_MAGIC: [u8; 4] = *b"TFKT";
pub const FORMAT_VERSION: u16 = 1;
const HEADER_LEN: usize = 16;
const TRAILER_LEN: usize = 4;

#[derive(Debug, Error)]
pub enum LoadError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("not a {expected} store (magic bytes {found:?})")]
    BadMagic { expected: &'static str, found: [u8; 4] },
    #[error("unsupported store format version {found} (this build reads version {FORMAT_VERSION})")]
    UnsupportedVersion { found: u16 },
    #[error("store is truncated: header declares {expected} bytes, file has {actual}")]
    Truncated { expected: u64, actual: u64 },
    #[error("store checksum mismatch (stored {stored:#010x}, computed {computed:#010x})")]
    ChecksumMismatch { stored: u32, computed: u32 },
    #[error("corrupt store: {0}")]
    Corrupt(String),
}

fn corrupt(msg: impl Into<String>) -> LoadError {
    LoadError::Corrupt(msg.into())
}

struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    fn varint(&mut self, mut v: u64) {
        while v >= 0x80 {
            self.buf.push((v as u8) | 0x80);
            v >>= 7;
        }
        self.buf.push(v as u8);
    }

    fn f64(&mut self, v: f64) {
        self.buf.extend_from_slice(&v.to_bits().to_le_bytes());
    }

    fn vocab(&mut self, vocab: &Vocab) {
        self.varint(vocab.len() as u64);
        for s in vocab.iter() {
            self.varint(s.len() as u64);
            self.buf.extend_from_slice(s.as_bytes());
        }
    }

    fn counts(&mut self, counts: &[u64]) {
        for &c in counts {
            self.varint(c);
        }
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn remaining(&self) -> usize {
        self.buf.len() - self.pos
    }

    fn bytes(&mut self, n: usize) -> Result<&'a [u8], LoadError> {
        if n > self.remaining() {
            return Err(corrupt("payload ends inside a field"));
        }
        let out = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    fn varint(&mut self) -> Result<u64, LoadError> {
        let mut out = 0u64;
        for shift in (0..64).step_by(7) {
            let b = self.bytes(1)?[0];
            let part = u64::from(b & 0x7f);
            if shift == 63 && part > 1 {
                return Err(corrupt("varint overflows 64 bits"));
            }
            out |= part << shift;
            if b & 0x80 == 0 {
                return Ok(out);
            }
        }
        Err(corrupt("varint overflows 64 bits"))
    }

    /// A count that bounds a later loop; each item takes at least
    /// `min_item_bytes`, which caps allocations on hostile input.
    fn len(&mut self, min_item_bytes: usize) -> Result<usize, LoadError> {
        let n = self.varint()?;
        if n.saturating_mul(min_item_bytes as u64) > self.remaining() as u64 {
            return Err(corrupt(format!("declared length {n} exceeds payload")));
        }
        Ok(n as usize)
    }

    fn u32_id(&mut self, bound: usize, what: &str) -> Result<u32, LoadError> {
        let v = self.varint()?;
        if v >= bound as u64 {
            return Err(corrupt(format!("{what} id {v} out of range (size {bound})")));
        }
        Ok(v as u32)
    }

    fn f64(&mut self) -> Result<f64, LoadError> {
        let b = self.bytes(8)?;
        Ok(f64::from_bits(u64::from_le_bytes(b.try_into().unwrap())))
    }

    fn value(&mut self, weighting: Weighting) -> Result<f64, LoadError> {
        let v = self.f64()?;
        if !v.is_finite() || v <= 0.0 {
            return Err(corrupt(format!("cell value {v} is not a positive finite number")));
        }
        if weighting == Weighting::Raw && v.fract() != 0.0 {
            return Err(corrupt(format!("raw cell value {v} is not an integer")));
        }
        Ok(v)
    }

    fn vocab(&mut self, what: &str) -> Result<Vocab, LoadError> {
        let n = self.len(1)?;
        let mut items = Vec::with_capacity(n);
        for _ in 0..n {
            let len = self.len(1)?;
            let s = std::str::from_utf8(self.bytes(len)?)
                .map_err(|_| corrupt(format!("{what} vocabulary entry is not UTF-8")))?;
            items.push(s.to_string());
        }
        Vocab::from_sorted(items).ok_or_else(|| corrupt(format!("{what} vocabulary is not strictly ascending")))
    }

    fn counts(&mut self, n: usize) -> Result<Vec<u64>, LoadError> {
        if n > self.remaining() {
            return Err(corrupt("marginals exceed payload"));
        }
        (0..n).map(|_| self.varint()).collect()
    }

    fn finish(&self) -> Result<(), LoadError> {
        if self.remaining() != 0 {
            return Err(corrupt(format!("{} trailing payload bytes", self.remaining())));
        }
        Ok(())
    }
}

fn frame(magic: [u8; 4], weighting: Weighting, payload: Vec<u8>) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + payload.len() + TRAILER_LEN);
    out.extend_from_slice(&magic);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.push(weighting.code());
    out.push(0);
    out.extend_from_slice(&(payload.len() as u64).to_le_bytes());
    out.extend_from_slice(&payload);
    let crc = crc32fast::hash(&out);
    out.extend_from_slice(&crc.to_le_bytes());
    out
}

fn unframe<'a>(bytes: &'a [u8], magic: [u8; 4], kind: &'static str) -> Result<(Weighting, &'a [u8]), LoadError> {
    if bytes.len() < HEADER_LEN {
        if bytes.len() >= 4 && bytes[..4] != magic {
            return Err(LoadError::BadMagic { expected: kind, found: bytes[..4].try_into().unwrap() });
        }
        return Err(LoadError::Truncated { expected: (HEADER_LEN + TRAILER_LEN) as u64, actual: bytes.len() as u64 });
    }
    let found: [u8; 4] = bytes[..4].try_into().unwrap();
    if found != magic {
        return Err(LoadError::BadMagic { expected: kind, found });
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != FORMAT_VERSION {
        return Err(LoadError::UnsupportedVersion { found: version });
    }
    let payload_len = u64::from_le_bytes(bytes[8..16].try_into().unwrap());
    let expected = payload_len.saturating_add((HEADER_LEN + TRAILER_LEN) as u64);
    if (bytes.len() as u64) < expected {
        return Err(LoadError::Truncated { expected, actual: bytes.len() as u64 });
    }
    if (bytes.len() as u64) > expected {
        return Err(corrupt(format!("{} bytes after the checksum", bytes.len() as u64 - expected)));
    }
    let body_end = HEADER_LEN + payload_len as usize;
    let stored = u32::from_le_bytes(bytes[body_end..].try_into().unwrap());
    let computed = crc32fast::hash(&bytes[..body_end]);
    if stored != computed {
        return Err(LoadError::ChecksumMismatch { stored, computed });
    }
    let weighting = Weighting::from_code(bytes[6]).ok_or_else(|| corrupt(format!("unknown weighting code {}", bytes[6])))?;
    if bytes[7] != 0 {
        return Err(corrupt("reserved header byte is not zero"));
    }
    Ok((weighting, &bytes[HEADER_LEN..body_end]))
}

impl CoocMatrix {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer { buf: Vec::new() };
        w.vocab(&self.targets);
        w.vocab(&self.contexts);
        w.counts(&self.target_marginals);
        w.counts(&self.context_marginals);
        w.varint(self.total);

        let rows: Vec<u32> = (0..self.targets.len() as u32).filter(|&t| !self.row_by_id(t).is_empty()).collect();
        w.varint(rows.len() as u64);
        let mut prev_row = 0u32;
        for &t in &rows {
            w.varint(u64::from(t - prev_row));
            prev_row = t;
            let row = self.row_by_id(t);
            w.varint(row.len() as u64);
            let mut prev_col = 0u32;
            for &c in row.indices {
                w.varint(u64::from(c - prev_col));
                prev_col = c;
            }
            for &v in row.values {
                w.f64(v);
            }
        }
        frame(MATRIX_MAGIC, self.weighting, w.buf)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, LoadError> {
        let (weighting, payload) = unframe(bytes, MATRIX_MAGIC, "matrix")?;
        let mut r = Reader { buf: payload, pos: 0 };
        let targets = r.vocab("target")?;
        let contexts = r.vocab("context")?;
        let target_marginals = r.counts(targets.len())?;
        let context_marginals = r.counts(contexts.len())?;
        let total = r.varint()?;

        let n_rows = r.len(2)?;
        let mut row_ptr = vec![0usize; targets.len() + 1];
        let mut cols = Vec::new();
        let mut values = Vec::new();
        let mut next_row = 0u64;
        for i in 0..n_rows {
            let delta = r.varint()?;
            if i > 0 && delta == 0 {
                return Err(corrupt("row ids are not strictly increasing"));
            }
            let row = next_row.checked_add(delta).filter(|&t| t < targets.len() as u64).ok_or_else(|| corrupt("row id out of range"))?;
            next_row = row;
            let nnz = r.len(9)?;
            if nnz == 0 {
                return Err(corrupt("empty row run"));
            }
            let mut col = 0u64;
            for j in 0..nnz {
                let d = r.varint()?;
                if j > 0 && d == 0 {
                    return Err(corrupt("column ids are not strictly increasing"));
                }
                col = col.checked_add(d).filter(|&c| c < contexts.len() as u64).ok_or_else(|| corrupt("column id out of range"))?;
                cols.push(col as u32);
            }
            for _ in 0..nnz {
                values.push(r.value(weighting)?);
            }
            row_ptr[row as usize + 1] = nnz;
        }
        r.finish()?;
        for i in 1..row_ptr.len() {
            row_ptr[i] += row_ptr[i - 1];
        }
        Ok(CoocMatrix { targets, contexts, row_ptr, cols, values, target_marginals, context_marginals, total, weighting })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> io::Result<()> {
        fs::write(path, self.to_bytes())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, LoadError> {
        Self::from_bytes(&fs::read(path)?)
    }
}

impl RoleTensor {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer { buf: Vec::new() };
        w.vocab(&self.verbs);
        w.vocab(&self.relations);
        w.vocab(&self.fillers);
        w.counts(&self.verb_marginals);
        w.counts(&self.relation_marginals);
        w.counts(&self.filler_marginals);
        w.varint(self.total);

        let runs: Vec<&[TensorEntry]> = self.entries.chunk_by(|a, b| (a.verb, a.relation) == (b.verb, b.relation)).collect();
        w.varint(runs.len() as u64);
        let mut prev_verb = 0u32;
        for run in runs {
            let (verb, relation) = (run[0].verb, run[0].relation);
            w.varint(u64::from(verb - prev_verb));
            prev_verb = verb;
            w.varint(u64::from(relation));
            w.varint(run.len() as u64);
            let mut prev = 0u32;
            for e in run {
                w.varint(u64::from(e.filler - prev));
                prev = e.filler;
            }
            for e in run {
                w.f64(e.value);
            }
        }
        frame(TENSOR_MAGIC, self.weighting, w.buf)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, LoadError> {
        let (weighting, payload) = unframe(bytes, TENSOR_MAGIC, "tensor")?;
        if weighting == Weighting::Ppmi {
            return Err(corrupt("tensors are never PPMI-weighted"));
        }
        let mut r = Reader { buf: payload, pos: 0 };
        let verbs = r.vocab("verb")?;
        let relations = r.vocab("relation")?;
        let fillers = r.vocab("filler")?;
        let verb_marginals = r.counts(verbs.len())?;
        let relation_marginals = r.counts(relations.len())?;
        let filler_marginals = r.counts(fillers.len())?;
        let total = r.varint()?;

        let n_runs = r.len(3)?;
        let mut entries = Vec::new();
        let mut verb = 0u64;
        let mut last_key: Option<(u32, u32)> = None;
        for _ in 0..n_runs {
            verb = verb.checked_add(r.varint()?).filter(|&v| v < verbs.len() as u64).ok_or_else(|| corrupt("verb id out of range"))?;
            let relation = r.u32_id(relations.len(), "relation")?;
            let key = (verb as u32, relation);
            if last_key.is_some_and(|k| k >= key) {
                return Err(corrupt("tensor runs are not strictly increasing"));
            }
            last_key = Some(key);
            let nnz = r.len(9)?;
            if nnz == 0 {
                return Err(corrupt("empty tensor run"));
            }
            let start = entries.len();
            let mut filler = 0u64;
            for j in 0..nnz {
                let d = r.varint()?;
                if j > 0 && d == 0 {
                    return Err(corrupt("filler ids are not strictly increasing"));
                }
                filler = filler.checked_add(d).filter(|&f| f < fillers.len() as u64).ok_or_else(|| corrupt("filler id out of range"))?;
                entries.push(TensorEntry { verb: key.0, relation, filler: filler as u32, value: 0.0 });
            }
            for e in &mut entries[start..] {
                e.value = r.value(weighting)?;
            }
        }
        r.finish()?;
        Ok(RoleTensor {
            verbs,
            relations,
            fillers,
            entries,
            verb_marginals,
            relation_marginals,
            filler_marginals,
            total,
            weighting,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> io::Result<()> {
        fs::write(path, self.to_bytes())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, LoadError> {
        Self::from_bytes(&fs::read(path)?)
    }
}
