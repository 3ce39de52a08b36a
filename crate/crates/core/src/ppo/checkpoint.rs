//! Binary checkpoint format.
//!
//! Little-endian throughout: magic `EMBR`, `u32` version, `u32` input size,
//! `u32` fleet size, `u32` layer count, `(u32 in, u32 out)` per layer, every
//! parameter as `f64` in layout order, then `u32` count and the observation
//! normalization constants as `f64`.

use std::path::Path;

use thiserror::Error;

use super::network::{layer_layout, PolicyParams};
use crate::env::ObsNormalization;

pub const MAGIC: &[u8; 4] = b"EMBR";
pub const VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("checkpoint i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("not a checkpoint (bad magic)")]
    BadMagic,
    #[error("unsupported checkpoint version {0}")]
    UnsupportedVersion(u32),
    #[error("checkpoint truncated")]
    Truncated,
    #[error("malformed checkpoint: {0}")]
    Malformed(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub params: PolicyParams,
    pub norm: ObsNormalization,
}

struct Reader<'a> {
    buf: &'a [u8],
}

impl Reader<'_> {
    fn take<const N: usize>(&mut self) -> Result<[u8; N], CheckpointError> {
        if self.buf.len() < N {
            return Err(CheckpointError::Truncated);
        }
        let (head, rest) = self.buf.split_at(N);
        self.buf = rest;
        Ok(head.try_into().expect("length checked"))
    }
    fn u32(&mut self) -> Result<u32, CheckpointError> {
        Ok(u32::from_le_bytes(self.take()?))
    }
    fn f64(&mut self) -> Result<f64, CheckpointError> {
        Ok(f64::from_le_bytes(self.take()?))
    }
}

impl Checkpoint {
    pub fn to_bytes(&self) -> Vec<u8> {
        let p = &self.params;
        let layers = p.layers();
        let norm = self.norm.to_vec();
        let mut out = Vec::with_capacity(24 + layers.len() * 8 + (p.len() + norm.len()) * 8);
        out.extend_from_slice(MAGIC);
        for v in [
            VERSION,
            p.input_dim as u32,
            p.fleet_size as u32,
            layers.len() as u32,
        ] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        for l in &layers {
            out.extend_from_slice(&(l.inputs as u32).to_le_bytes());
            out.extend_from_slice(&(l.outputs as u32).to_le_bytes());
        }
        for w in &p.theta {
            out.extend_from_slice(&w.to_le_bytes());
        }
        out.extend_from_slice(&(norm.len() as u32).to_le_bytes());
        for v in norm {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(buf: &[u8]) -> Result<Self, CheckpointError> {
        let mut r = Reader { buf };
        if &r.take::<4>()? != MAGIC {
            return Err(CheckpointError::BadMagic);
        }
        let version = r.u32()?;
        if version != VERSION {
            return Err(CheckpointError::UnsupportedVersion(version));
        }
        let input_dim = r.u32()? as usize;
        let fleet_size = r.u32()? as usize;
        let n_layers = r.u32()? as usize;
        if n_layers != fleet_size + 3 {
            return Err(CheckpointError::Malformed(format!(
                "{n_layers} layers for a fleet of {fleet_size}"
            )));
        }
        let mut dims = Vec::with_capacity(n_layers);
        for _ in 0..n_layers {
            dims.push((r.u32()? as usize, r.u32()? as usize));
        }
        let hidden = dims[0].1;
        let expected = layer_layout(input_dim, hidden, fleet_size);
        if expected
            .iter()
            .map(|l| (l.inputs, l.outputs))
            .ne(dims.iter().copied())
        {
            return Err(CheckpointError::Malformed("layer shapes".into()));
        }
        let mut params = PolicyParams::zeros(input_dim, hidden, fleet_size);
        for w in params.theta.iter_mut() {
            *w = r.f64()?;
        }
        let n_norm = r.u32()? as usize;
        let mut norm = Vec::with_capacity(n_norm);
        for _ in 0..n_norm {
            norm.push(r.f64()?);
        }
        let norm = ObsNormalization::from_slice(&norm)
            .ok_or_else(|| CheckpointError::Malformed("normalization block".into()))?;
        if !r.buf.is_empty() {
            return Err(CheckpointError::Malformed("trailing bytes".into()));
        }
        Ok(Checkpoint { params, norm })
    }

    pub fn save(&self, path: &Path) -> Result<(), CheckpointError> {
        std::fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, CheckpointError> {
        Self::from_bytes(&std::fs::read(path)?)
    }
}
