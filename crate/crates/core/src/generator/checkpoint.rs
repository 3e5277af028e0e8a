//! Binary checkpoint container.
//!
//! ```text
//! magic      8 bytes  "HWSTYGEN"
//! version    u32 LE
//! header_len u64 LE
//! header     JSON (config, bias kind and dim, quantizer, seeds, step count, dtype, tensor list)
//! tensors    for each listed tensor in order: value, adam_m, adam_v as f64 LE
//! ```

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::codec::QuantizerSpec;
use crate::error::{Error, Result};
use crate::generator::{GeneratorConfig, GeneratorModel};
use crate::numerics::{ParamStore, Scalar, Tensor};
use crate::styles::BiasKind;

const MAGIC: &[u8; 8] = b"HWSTYGEN";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct TensorEntry {
    name: String,
    shape: Vec<usize>,
}

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    config: GeneratorConfig,
    bias_kind: BiasKind,
    bias_dim: usize,
    quantizer: QuantizerSpec,
    corpus_seed: u64,
    step_count: u64,
    dtype: String,
    tensors: Vec<TensorEntry>,
}

struct Reader<'a> {
    buf: &'a [u8],
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.buf.len() < n {
            return Err(Error::Format("truncated checkpoint".into()));
        }
        let (a, b) = self.buf.split_at(n);
        self.buf = b;
        Ok(a)
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        let bytes = self.take(n.checked_mul(8).ok_or_else(|| Error::Format("tensor too large".into()))?)?;
        Ok(bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect())
    }
}

impl<T: Scalar> GeneratorModel<T> {
    pub fn to_bytes(&self) -> Vec<u8> {
        let header = Header {
            config: self.config.clone(),
            bias_kind: self.bias_kind,
            bias_dim: self.bias_dim,
            quantizer: self.quantizer.clone(),
            corpus_seed: self.corpus_seed,
            step_count: self.params.step_count(),
            dtype: T::DTYPE.to_string(),
            tensors: self
                .params
                .iter()
                .map(|(name, p)| TensorEntry {
                    name: name.to_string(),
                    shape: p.value.shape().to_vec(),
                })
                .collect(),
        };
        let json = serde_json::to_vec(&header).expect("header serializes");
        let mut out = Vec::with_capacity(json.len() + 24 + self.params.size() * 24);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
        out.extend_from_slice(&(json.len() as u64).to_le_bytes());
        out.extend_from_slice(&json);
        for (_, p) in self.params.iter() {
            for t in [&p.value, &p.adam_m, &p.adam_v] {
                for v in t.data() {
                    out.extend_from_slice(&v.as_f64().to_le_bytes());
                }
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { buf: bytes };
        if r.take(8)? != MAGIC {
            return Err(Error::Format("not a generator checkpoint".into()));
        }
        let version = u32::from_le_bytes(r.take(4)?.try_into().expect("4 bytes"));
        if version != CHECKPOINT_VERSION {
            return Err(Error::Format(format!("unsupported checkpoint version {version}")));
        }
        let len = u64::from_le_bytes(r.take(8)?.try_into().expect("8 bytes")) as usize;
        let header: Header = serde_json::from_slice(r.take(len)?).map_err(|e| Error::Format(format!("checkpoint header: {e}")))?;
        if header.dtype != T::DTYPE {
            return Err(Error::Format(format!("checkpoint holds {} parameters, expected {}", header.dtype, T::DTYPE)));
        }
        header.config.validate()?;
        let mut params = ParamStore::new();
        for entry in &header.tensors {
            let n: usize = entry.shape.iter().product();
            let mut parts = Vec::with_capacity(3);
            for _ in 0..3 {
                let data = r.f64s(n)?.into_iter().map(T::lit).collect();
                parts.push(Tensor::new(entry.shape.clone(), data)?);
            }
            let v = parts.remove(2);
            let m = parts.remove(1);
            params.insert_with_state(&entry.name, parts.remove(0), m, v)?;
        }
        if !r.buf.is_empty() {
            return Err(Error::Format("trailing bytes after checkpoint tensors".into()));
        }
        params.set_step_count(header.step_count);
        let reference = GeneratorModel::<T>::new(header.config.clone(), header.bias_kind, header.bias_dim, header.quantizer.clone())?;
        for (name, p) in reference.params.iter() {
            let got = params.param(name)?;
            if got.value.shape() != p.value.shape() {
                return Err(Error::shape("checkpoint tensor", got.value.shape(), p.value.shape()));
            }
        }
        if params.len() != reference.params.len() {
            return Err(Error::Format("checkpoint has unexpected tensors".into()));
        }
        Ok(Self {
            config: header.config,
            bias_kind: header.bias_kind,
            bias_dim: header.bias_dim,
            quantizer: header.quantizer,
            corpus_seed: header.corpus_seed,
            params,
        })
    }

    /// Writes via a temporary file so a crash never leaves a partial checkpoint.
    pub fn save_checkpoint(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let tmp = path.with_extension("partial");
        fs::write(&tmp, self.to_bytes()).map_err(|e| Error::io(&tmp, e))?;
        fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
    }

    pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::from_bytes(&fs::read(path).map_err(|e| Error::io(path, e))?)
    }
}
