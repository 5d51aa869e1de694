//! Binary index file.
//!
//! ```text
//! magic        8 bytes  "TQBM25IX"
//! version      u8       FORMAT_VERSION
//! k1, b        f64 LE
//! n_docs       u32 LE, then per doc: doc_id, title, text (u32 len + UTF-8), length u32
//! n_terms      u32 LE, then per term (sorted): term, n_postings u32, (doc u32, tf u32)*
//! ```

use std::collections::HashMap;
use std::path::Path;

use super::{Bm25Index, Bm25Params, Passage};
use crate::error::{Error, Result};
use crate::io::atomic_write;
use crate::scalar::Scalar;

pub const MAGIC: &[u8; 8] = b"TQBM25IX";
pub const FORMAT_VERSION: u8 = 1;

fn put_u32(out: &mut Vec<u8>, v: u32) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn put_str(out: &mut Vec<u8>, s: &str) {
    put_u32(out, s.len() as u32);
    out.extend_from_slice(s.as_bytes());
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len());
        let end = end.ok_or_else(|| Error::Format(format!("truncated at byte {}", self.pos)))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn string(&mut self) -> Result<String> {
        let n = self.u32()? as usize;
        let at = self.pos;
        String::from_utf8(self.take(n)?.to_vec())
            .map_err(|_| Error::Format(format!("invalid UTF-8 at byte {at}")))
    }
}

impl<F: Scalar> Bm25Index<F> {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.push(FORMAT_VERSION);
        out.extend_from_slice(&self.params.k1.to_f64_lossy().to_le_bytes());
        out.extend_from_slice(&self.params.b.to_f64_lossy().to_le_bytes());
        put_u32(&mut out, self.passages.len() as u32);
        for (p, &len) in self.passages.iter().zip(&self.doc_lengths) {
            put_str(&mut out, &p.doc_id);
            put_str(&mut out, &p.title);
            put_str(&mut out, &p.text);
            put_u32(&mut out, len);
        }
        let mut terms: Vec<&String> = self.postings.keys().collect();
        terms.sort();
        put_u32(&mut out, terms.len() as u32);
        for term in terms {
            put_str(&mut out, term);
            let list = &self.postings[term];
            put_u32(&mut out, list.len() as u32);
            for &(doc, tf) in list {
                put_u32(&mut out, doc);
                put_u32(&mut out, tf);
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { buf: bytes, pos: 0 };
        if r.take(MAGIC.len()).ok() != Some(&MAGIC[..]) {
            return Err(Error::Format("not an index file (bad magic)".into()));
        }
        let version = r.take(1)?[0];
        if version != FORMAT_VERSION {
            return Err(Error::Format(format!(
                "unsupported index version {version} (expected {FORMAT_VERSION})"
            )));
        }
        let params = Bm25Params {
            k1: F::lit(r.f64()?),
            b: F::lit(r.f64()?),
        };
        let n_docs = r.u32()? as usize;
        let mut passages = Vec::with_capacity(n_docs.min(1 << 20));
        let mut lengths = Vec::with_capacity(n_docs.min(1 << 20));
        for _ in 0..n_docs {
            passages.push(Passage {
                doc_id: r.string()?,
                title: r.string()?,
                text: r.string()?,
            });
            lengths.push(r.u32()?);
        }
        let n_terms = r.u32()? as usize;
        let mut postings = HashMap::with_capacity(n_terms.min(1 << 20));
        for _ in 0..n_terms {
            let term = r.string()?;
            let n = r.u32()? as usize;
            let mut list = Vec::with_capacity(n.min(1 << 20));
            for _ in 0..n {
                let doc = r.u32()?;
                if doc as usize >= n_docs {
                    return Err(Error::Format(format!(
                        "posting for '{term}' references doc {doc}"
                    )));
                }
                list.push((doc, r.u32()?));
            }
            postings.insert(term, list);
        }
        if r.pos != bytes.len() {
            return Err(Error::Format(format!(
                "{} trailing bytes",
                bytes.len() - r.pos
            )));
        }
        Self::from_parts(params, passages, postings, lengths)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        atomic_write(path, &self.to_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes).map_err(|e| match e {
            Error::Format(m) => Error::Format(format!("{}: {m}", path.display())),
            other => other,
        })
    }
}
