//! Binary artifact formats.
//!
//! Checkpoint: magic "QCCN", u32 version=1, u32 tensor count; per tensor a
//! u16 name length, the name, u8 dtype (0 = f64, 1 = complex-f64
//! interleaved, 2 = raw bytes), u8 rank, u64 dims, little-endian payload;
//! trailing CRC32 over everything before it.
//!
//! States file: magic "QCST", u32 version=1, u64 n, u64 m, n·m complex-f64
//! little-endian interleaved (re, im), trailing CRC32.

use crate::error::{Error, Result};
use crate::linalg::{C64, CVector};
use std::path::Path;

const CKPT_MAGIC: &[u8; 4] = b"QCCN";
const STATES_MAGIC: &[u8; 4] = b"QCST";
const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub enum TensorData {
    F64(Vec<f64>),
    C64(Vec<C64>),
    Bytes(Vec<u8>),
}

impl TensorData {
    fn dtype(&self) -> u8 {
        match self {
            TensorData::F64(_) => 0,
            TensorData::C64(_) => 1,
            TensorData::Bytes(_) => 2,
        }
    }

    fn len(&self) -> usize {
        match self {
            TensorData::F64(v) => v.len(),
            TensorData::C64(v) => v.len(),
            TensorData::Bytes(v) => v.len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    pub name: String,
    pub dims: Vec<u64>,
    pub data: TensorData,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Checkpoint {
    pub tensors: Vec<Tensor>,
}

impl Checkpoint {
    pub fn insert(&mut self, name: &str, dims: Vec<u64>, data: TensorData) -> Result<()> {
        if self.tensors.iter().any(|t| t.name == name) {
            return Err(Error::Format(format!("duplicate tensor name {name:?}")));
        }
        let expect: u64 = dims.iter().product();
        if expect != data.len() as u64 {
            return Err(Error::Shape(format!(
                "tensor {name:?}: dims {:?} need {expect} elements, got {}",
                dims,
                data.len()
            )));
        }
        self.tensors.push(Tensor { name: name.to_string(), dims, data });
        Ok(())
    }

    pub fn get(&self, name: &str) -> Result<&Tensor> {
        self.tensors
            .iter()
            .find(|t| t.name == name)
            .ok_or_else(|| Error::Format(format!("checkpoint is missing tensor {name:?}")))
    }

    pub fn get_f64(&self, name: &str) -> Result<&[f64]> {
        match &self.get(name)?.data {
            TensorData::F64(v) => Ok(v),
            _ => Err(Error::Format(format!("tensor {name:?} is not f64"))),
        }
    }

    pub fn get_c64(&self, name: &str) -> Result<&[C64]> {
        match &self.get(name)?.data {
            TensorData::C64(v) => Ok(v),
            _ => Err(Error::Format(format!("tensor {name:?} is not complex"))),
        }
    }

    pub fn get_bytes(&self, name: &str) -> Result<&[u8]> {
        match &self.get(name)?.data {
            TensorData::Bytes(v) => Ok(v),
            _ => Err(Error::Format(format!("tensor {name:?} is not raw bytes"))),
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(CKPT_MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&(self.tensors.len() as u32).to_le_bytes());
        for t in &self.tensors {
            let name = t.name.as_bytes();
            out.extend_from_slice(&(name.len() as u16).to_le_bytes());
            out.extend_from_slice(name);
            out.push(t.data.dtype());
            out.push(t.dims.len() as u8);
            for &d in &t.dims {
                out.extend_from_slice(&d.to_le_bytes());
            }
            match &t.data {
                TensorData::F64(v) => {
                    for x in v {
                        out.extend_from_slice(&x.to_le_bytes());
                    }
                }
                TensorData::C64(v) => {
                    for z in v {
                        out.extend_from_slice(&z.re.to_le_bytes());
                        out.extend_from_slice(&z.im.to_le_bytes());
                    }
                }
                TensorData::Bytes(v) => out.extend_from_slice(v),
            }
        }
        let crc = crc32fast::hash(&out);
        out.extend_from_slice(&crc.to_le_bytes());
        out
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Checkpoint> {
        let body = verify_crc(bytes, "checkpoint")?;
        let mut r = Cursor { buf: body, pos: 0 };
        if r.take(4)? != CKPT_MAGIC {
            return Err(Error::Format("bad checkpoint magic".into()));
        }
        let version = r.u32()?;
        if version != VERSION {
            return Err(Error::Format(format!("unsupported checkpoint version {version}")));
        }
        let count = r.u32()? as usize;
        let mut ckpt = Checkpoint::default();
        for _ in 0..count {
            let name_len = r.u16()? as usize;
            let name = String::from_utf8(r.take(name_len)?.to_vec())
                .map_err(|e| Error::Format(format!("bad tensor name: {e}")))?;
            let dtype = r.u8()?;
            let rank = r.u8()? as usize;
            let mut dims = Vec::with_capacity(rank);
            for _ in 0..rank {
                dims.push(r.u64()?);
            }
            let n: u64 = dims.iter().product();
            let n = usize::try_from(n).map_err(|_| Error::Format("tensor too large".into()))?;
            let data = match dtype {
                0 => TensorData::F64((0..n).map(|_| r.f64()).collect::<Result<_>>()?),
                1 => TensorData::C64(
                    (0..n)
                        .map(|_| Ok(C64::new(r.f64()?, r.f64()?)))
                        .collect::<Result<_>>()?,
                ),
                2 => TensorData::Bytes(r.take(n)?.to_vec()),
                other => return Err(Error::Format(format!("unknown dtype {other}"))),
            };
            ckpt.insert(&name, dims, data)?;
        }
        if r.pos != body.len() {
            return Err(Error::Format("trailing bytes after last tensor".into()));
        }
        Ok(ckpt)
    }

    pub fn load(path: &Path) -> Result<Checkpoint> {
        Checkpoint::from_bytes(&std::fs::read(path)?)
    }
}

fn verify_crc<'a>(bytes: &'a [u8], what: &str) -> Result<&'a [u8]> {
    if bytes.len() < 4 {
        return Err(Error::Format(format!("{what} file truncated")));
    }
    let (body, tail) = bytes.split_at(bytes.len() - 4);
    let stored = u32::from_le_bytes(tail.try_into().unwrap());
    let actual = crc32fast::hash(body);
    if stored != actual {
        return Err(Error::Format(format!(
            "{what} CRC mismatch: stored {stored:08x}, computed {actual:08x}"
        )));
    }
    Ok(body)
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.buf.len() {
            return Err(Error::Format("truncated file".into()));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

// ---------------------------------------------------------------------------
// states file
// ---------------------------------------------------------------------------

pub fn write_states(path: &Path, states: &[CVector]) -> Result<()> {
    if states.is_empty() {
        return Err(Error::Shape("no states to write".into()));
    }
    let m = states[0].dim();
    if states.iter().any(|s| s.dim() != m) {
        return Err(Error::Shape("states of mixed dimension".into()));
    }
    let mut out = Vec::with_capacity(24 + states.len() * m * 16 + 4);
    out.extend_from_slice(STATES_MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(states.len() as u64).to_le_bytes());
    out.extend_from_slice(&(m as u64).to_le_bytes());
    for s in states {
        for k in 0..m {
            out.extend_from_slice(&s[k].re.to_le_bytes());
            out.extend_from_slice(&s[k].im.to_le_bytes());
        }
    }
    let crc = crc32fast::hash(&out);
    out.extend_from_slice(&crc.to_le_bytes());
    std::fs::write(path, out)?;
    Ok(())
}

pub fn read_states(path: &Path) -> Result<Vec<CVector>> {
    let bytes = std::fs::read(path)?;
    let body = verify_crc(&bytes, "states")?;
    let mut r = Cursor { buf: body, pos: 0 };
    if r.take(4)? != STATES_MAGIC {
        return Err(Error::Format("bad states magic".into()));
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(Error::Format(format!("unsupported states version {version}")));
    }
    let n = r.u64()? as usize;
    let m = r.u64()? as usize;
    let mut states = Vec::with_capacity(n);
    for _ in 0..n {
        let mut v = CVector::zeros(m);
        for k in 0..m {
            v[k] = C64::new(r.f64()?, r.f64()?);
        }
        states.push(v);
    }
    if r.pos != body.len() {
        return Err(Error::Format("trailing bytes after last state".into()));
    }
    Ok(states)
}
