//! Versioned binary container: magic, format version, a JSON header describing
//! named little-endian tensors, then the raw payload.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::tensor::ParamSet;
use crate::{Error, Result};

pub const MAGIC: &[u8; 8] = b"SPKINSRT";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub enum TensorData {
    F64(Vec<f64>),
    I32(Vec<i32>),
    I64(Vec<i64>),
}

impl TensorData {
    fn len(&self) -> usize {
        match self {
            TensorData::F64(v) => v.len(),
            TensorData::I32(v) => v.len(),
            TensorData::I64(v) => v.len(),
        }
    }

    fn dtype(&self) -> &'static str {
        match self {
            TensorData::F64(_) => "f64",
            TensorData::I32(_) => "i32",
            TensorData::I64(_) => "i64",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: TensorData,
}

#[derive(Debug, Serialize, Deserialize)]
struct TensorEntry {
    name: String,
    dtype: String,
    shape: Vec<usize>,
    len: usize,
}

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    kind: String,
    meta: serde_json::Value,
    tensors: Vec<TensorEntry>,
}

/// In-memory archive.
#[derive(Debug, Clone, PartialEq)]
pub struct Archive {
    pub kind: String,
    pub meta: serde_json::Value,
    pub tensors: Vec<Tensor>,
}

impl Archive {
    pub fn new(kind: &str, meta: serde_json::Value) -> Self {
        Self { kind: kind.to_string(), meta, tensors: Vec::new() }
    }

    pub fn push(&mut self, name: impl Into<String>, shape: Vec<usize>, data: TensorData) -> Result<()> {
        let name = name.into();
        if shape.iter().product::<usize>() != data.len() {
            return Err(Error::Shape(format!("tensor {name}: shape {shape:?} holds {} values", data.len())));
        }
        if self.tensors.iter().any(|t| t.name == name) {
            return Err(Error::Format(format!("duplicate tensor {name}")));
        }
        self.tensors.push(Tensor { name, shape, data });
        Ok(())
    }

    /// Appends every tensor of `params` under `prefix/`.
    pub fn push_params<P: ParamSet>(&mut self, prefix: &str, params: &P) -> Result<()> {
        for t in params.tensors() {
            self.push(format!("{prefix}/{}", t.name), t.shape.clone(), TensorData::F64(t.data.to_vec()))?;
        }
        Ok(())
    }

    /// Fills `params` (already shaped) from the tensors stored under `prefix/`.
    pub fn fill_params<P: ParamSet>(&self, prefix: &str, params: &mut P) -> Result<()> {
        let names: Vec<(String, Vec<usize>)> = params.tensors().iter().map(|t| (t.name.clone(), t.shape.clone())).collect();
        for ((name, shape), dst) in names.into_iter().zip(params.tensors_mut()) {
            let src = self.f64(&format!("{prefix}/{name}"), &shape)?;
            dst.copy_from_slice(src);
        }
        Ok(())
    }

    pub fn get(&self, name: &str) -> Result<&Tensor> {
        self.tensors.iter().find(|t| t.name == name).ok_or_else(|| Error::Format(format!("missing tensor {name}")))
    }

    fn checked(&self, name: &str, shape: &[usize]) -> Result<&Tensor> {
        let t = self.get(name)?;
        if t.shape != shape {
            return Err(Error::Shape(format!("tensor {name}: expected {shape:?}, found {:?}", t.shape)));
        }
        Ok(t)
    }

    pub fn f64(&self, name: &str, shape: &[usize]) -> Result<&[f64]> {
        match &self.checked(name, shape)?.data {
            TensorData::F64(v) => Ok(v),
            other => Err(Error::Format(format!("tensor {name} is {}, expected f64", other.dtype()))),
        }
    }

    pub fn i32(&self, name: &str, shape: &[usize]) -> Result<&[i32]> {
        match &self.checked(name, shape)?.data {
            TensorData::I32(v) => Ok(v),
            other => Err(Error::Format(format!("tensor {name} is {}, expected i32", other.dtype()))),
        }
    }

    pub fn i64(&self, name: &str, shape: &[usize]) -> Result<&[i64]> {
        match &self.checked(name, shape)?.data {
            TensorData::I64(v) => Ok(v),
            other => Err(Error::Format(format!("tensor {name} is {}, expected i64", other.dtype()))),
        }
    }

    pub fn expect_kind(&self, kind: &str) -> Result<()> {
        if self.kind != kind {
            return Err(Error::Format(format!("expected a {kind} file, found {}", self.kind)));
        }
        Ok(())
    }

    pub fn meta<T: serde::de::DeserializeOwned>(&self) -> Result<T> {
        Ok(serde_json::from_value(self.meta.clone())?)
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        let header = Header {
            kind: self.kind.clone(),
            meta: self.meta.clone(),
            tensors: self
                .tensors
                .iter()
                .map(|t| TensorEntry { name: t.name.clone(), dtype: t.data.dtype().into(), shape: t.shape.clone(), len: t.data.len() })
                .collect(),
        };
        let json = serde_json::to_vec(&header)?;
        w.write_all(MAGIC)?;
        w.write_all(&FORMAT_VERSION.to_le_bytes())?;
        w.write_all(&(json.len() as u64).to_le_bytes())?;
        w.write_all(&json)?;
        for t in &self.tensors {
            match &t.data {
                TensorData::F64(v) => v.iter().try_for_each(|x| w.write_all(&x.to_le_bytes()))?,
                TensorData::I32(v) => v.iter().try_for_each(|x| w.write_all(&x.to_le_bytes()))?,
                TensorData::I64(v) => v.iter().try_for_each(|x| w.write_all(&x.to_le_bytes()))?,
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 8];
        read_exact(&mut r, &mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Format("not a model archive (bad magic)".into()));
        }
        let mut word = [0u8; 4];
        read_exact(&mut r, &mut word)?;
        let version = u32::from_le_bytes(word);
        if version != FORMAT_VERSION {
            return Err(Error::Format(format!("unsupported archive version {version}, expected {FORMAT_VERSION}")));
        }
        let mut len = [0u8; 8];
        read_exact(&mut r, &mut len)?;
        let len = u64::from_le_bytes(len);
        if len > (1 << 30) {
            return Err(Error::Format(format!("implausible header length {len}")));
        }
        let mut json = vec![0u8; len as usize];
        read_exact(&mut r, &mut json)?;
        let header: Header = serde_json::from_slice(&json)?;
        let mut tensors = Vec::with_capacity(header.tensors.len());
        for e in header.tensors {
            if e.shape.iter().product::<usize>() != e.len {
                return Err(Error::Format(format!("tensor {}: shape and length disagree", e.name)));
            }
            let data = match e.dtype.as_str() {
                "f64" => TensorData::F64(read_values::<8, _, _>(&mut r, e.len, f64::from_le_bytes)?),
                "i32" => TensorData::I32(read_values::<4, _, _>(&mut r, e.len, i32::from_le_bytes)?),
                "i64" => TensorData::I64(read_values::<8, _, _>(&mut r, e.len, i64::from_le_bytes)?),
                other => return Err(Error::Format(format!("unknown dtype {other}"))),
            };
            tensors.push(Tensor { name: e.name, shape: e.shape, data });
        }
        let mut rest = [0u8; 1];
        if r.read(&mut rest)? != 0 {
            return Err(Error::Format("trailing bytes after payload".into()));
        }
        Ok(Self { kind: header.kind, meta: header.meta, tensors })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        self.write_to(BufWriter::new(File::create(path)?))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::read_from(BufReader::new(File::open(path)?))
    }
}

fn read_exact<R: Read>(r: &mut R, buf: &mut [u8]) -> Result<()> {
    r.read_exact(buf).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => Error::Format("truncated archive".into()),
        _ => Error::Io(e),
    })
}

fn read_values<const N: usize, T, R: Read>(r: &mut R, n: usize, conv: fn([u8; N]) -> T) -> Result<Vec<T>> {
    let mut out = Vec::with_capacity(n);
    let mut buf = [0u8; N];
    for _ in 0..n {
        read_exact(r, &mut buf)?;
        out.push(conv(buf));
    }
    Ok(out)
}
