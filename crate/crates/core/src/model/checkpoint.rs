//! Binary checkpoint layout (all integers little-endian):
//!
//! ```text
//! "YZM5" | u32 version | u32 n | n bytes JSON {network, feature, preprocess}
//! u32 tensor count | per tensor: u16 name length, name, u8 rank, u32 dims..., f32 data
//! ```
//!
//! Tensors are the parameters in layer order followed by the batch-norm
//! running statistics.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::eval::{Classifier, Preprocess};
use super::network::{Network, NetworkConfig, Tensor};
use crate::features::FeatureKind;
use crate::{Error, Result};

pub const MAGIC: &[u8; 4] = b"YZM5";
pub const VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Meta {
    network: NetworkConfig,
    feature: FeatureKind,
    preprocess: Preprocess,
    n_params: usize,
}

pub fn encode_checkpoint(clf: &Classifier) -> Vec<u8> {
    let net = &clf.network;
    let meta = Meta {
        network: net.config().clone(),
        feature: clf.kind,
        preprocess: clf.preprocess.clone(),
        n_params: net.params().len(),
    };
    let json = serde_json::to_vec(&meta).expect("serializable metadata");
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(json.len() as u32).to_le_bytes());
    out.extend_from_slice(&json);
    let tensors: Vec<&Tensor<f32>> = net.params().iter().chain(net.buffers()).collect();
    out.extend_from_slice(&(tensors.len() as u32).to_le_bytes());
    for t in tensors {
        out.extend_from_slice(&(t.name.len() as u16).to_le_bytes());
        out.extend_from_slice(t.name.as_bytes());
        out.push(t.shape.len() as u8);
        for &d in &t.shape {
            out.extend_from_slice(&(d as u32).to_le_bytes());
        }
        for &v in &t.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.buf.len() {
            return Err(Error::Checkpoint(format!("truncated at byte {}", self.pos)));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
}

pub fn decode_checkpoint(buf: &[u8]) -> Result<Classifier> {
    let mut c = Cursor { buf, pos: 0 };
    if c.take(4)? != MAGIC {
        return Err(Error::Checkpoint("bad magic bytes".into()));
    }
    let version = c.u32()?;
    if version != VERSION {
        return Err(Error::Checkpoint(format!("unsupported version {version}")));
    }
    let n = c.u32()? as usize;
    let meta: Meta = serde_json::from_slice(c.take(n)?).map_err(|e| Error::Checkpoint(format!("metadata: {e}")))?;
    let count = c.u32()? as usize;
    let mut tensors = Vec::with_capacity(count);
    for _ in 0..count {
        let len = u16::from_le_bytes(c.take(2)?.try_into().unwrap()) as usize;
        let name = String::from_utf8(c.take(len)?.to_vec()).map_err(|_| Error::Checkpoint("tensor name is not UTF-8".into()))?;
        let rank = c.take(1)?[0] as usize;
        let shape = (0..rank).map(|_| c.u32().map(|d| d as usize)).collect::<Result<Vec<_>>>()?;
        let size: usize = shape.iter().product();
        let data = c
            .take(4 * size)?
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes(b.try_into().unwrap()))
            .collect();
        tensors.push(Tensor { name, shape, data });
    }
    if c.pos != buf.len() {
        return Err(Error::Checkpoint(format!("{} trailing bytes", buf.len() - c.pos)));
    }
    if meta.n_params > tensors.len() {
        return Err(Error::Checkpoint("fewer tensors than parameters".into()));
    }
    let buffers = tensors.split_off(meta.n_params);
    let network = Network::from_tensors(&meta.network, tensors, buffers)?;
    Ok(Classifier {
        kind: meta.feature,
        preprocess: meta.preprocess,
        network,
    })
}

pub fn save_checkpoint(path: impl AsRef<Path>, clf: &Classifier) -> Result<()> {
    let path = path.as_ref();
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&encode_checkpoint(clf)).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<Classifier> {
    let path = path.as_ref();
    let mut buf = Vec::new();
    std::fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut buf))
        .map_err(|e| Error::io(path, e))?;
    decode_checkpoint(&buf)
}
