//! Binary model container.
//!
//! Layout (all integers little-endian, all parameter blocks row-major f64):
//!
//! ```text
//! magic   b"GSMC"
//! u32     format version (1)
//! u32     d_in, d_h, d_out, depth
//! u8      residual mode        0 none | 1 ssm | 2 plain_residual
//! u8      readout kind         0 node | 1 graph_mean
//! u8      readout has bias
//! u8      ssm config present; if 1:
//!           f64 state_radius, f64 input_radius, u8 identity_input,
//!           u64 seed, u8 shared, u8 trainable
//! u8      ssm storage          0 absent | 1 shared | 2 per-layer
//! per layer:
//!   u8    coupling kind        0 gcn | 1 gat | 2 khop
//!   u32   hop (0 unless khop)
//!   u8    nonlinearity         0 relu | 1 tanh | 2 identity
//!   u8    has attention
//! blocks, in order: encoder; per layer: weight [, a_src, a_dst];
//!   state pairs (Λ then B; one pair if shared, depth pairs if per-layer);
//!   readout weight [, readout bias]
//! ```
//!
//! Round-trips are bit-exact for `f64` models (and for `f32` models, whose
//! values embed exactly into f64).

use super::{
    Attention, CouplingKind, Layer, LayerParams, Model, Nonlinearity, Readout, ResidualMode,
    SsmConfig, SsmPair, SsmStorage,
};
use crate::error::{Error, Result};
use crate::scalar::{ColVec, Mat, Real};
use std::io::{Read, Write};
use std::path::Path;

const MAGIC: &[u8; 4] = b"GSMC";
const VERSION: u32 = 1;

struct Writer<W: Write> {
    out: W,
}

impl<W: Write> Writer<W> {
    fn u8(&mut self, v: u8) -> Result<()> {
        self.out.write_all(&[v])?;
        Ok(())
    }
    fn u32(&mut self, v: u32) -> Result<()> {
        self.out.write_all(&v.to_le_bytes())?;
        Ok(())
    }
    fn u64(&mut self, v: u64) -> Result<()> {
        self.out.write_all(&v.to_le_bytes())?;
        Ok(())
    }
    fn f64(&mut self, v: f64) -> Result<()> {
        self.out.write_all(&v.to_le_bytes())?;
        Ok(())
    }
    fn matrix<T: Real>(&mut self, m: &Mat<T>) -> Result<()> {
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                self.f64(m[(i, j)].as_f64())?;
            }
        }
        Ok(())
    }
    fn vector<T: Real>(&mut self, v: &ColVec<T>) -> Result<()> {
        for i in 0..v.len() {
            self.f64(v[i].as_f64())?;
        }
        Ok(())
    }
}

struct Reader<R: Read> {
    inp: R,
}

impl<R: Read> Reader<R> {
    fn u8(&mut self) -> Result<u8> {
        let mut b = [0u8; 1];
        self.inp.read_exact(&mut b)?;
        Ok(b[0])
    }
    fn u32(&mut self) -> Result<u32> {
        let mut b = [0u8; 4];
        self.inp.read_exact(&mut b)?;
        Ok(u32::from_le_bytes(b))
    }
    fn u64(&mut self) -> Result<u64> {
        let mut b = [0u8; 8];
        self.inp.read_exact(&mut b)?;
        Ok(u64::from_le_bytes(b))
    }
    fn f64(&mut self) -> Result<f64> {
        let mut b = [0u8; 8];
        self.inp.read_exact(&mut b)?;
        Ok(f64::from_le_bytes(b))
    }
    fn matrix<T: Real>(&mut self, nrows: usize, ncols: usize) -> Result<Mat<T>> {
        let mut m = Mat::zeros(nrows, ncols);
        for i in 0..nrows {
            for j in 0..ncols {
                m[(i, j)] = T::of(self.f64()?);
            }
        }
        Ok(m)
    }
    fn vector<T: Real>(&mut self, len: usize) -> Result<ColVec<T>> {
        let mut v = ColVec::zeros(len);
        for i in 0..len {
            v[i] = T::of(self.f64()?);
        }
        Ok(v)
    }
}

fn sigma_code(s: Nonlinearity) -> u8 {
    match s {
        Nonlinearity::Relu => 0,
        Nonlinearity::Tanh => 1,
        Nonlinearity::Identity => 2,
    }
}

fn sigma_from(code: u8) -> Result<Nonlinearity> {
    match code {
        0 => Ok(Nonlinearity::Relu),
        1 => Ok(Nonlinearity::Tanh),
        2 => Ok(Nonlinearity::Identity),
        other => Err(Error::Parse {
            line: 0,
            message: format!("unknown nonlinearity code {other}"),
        }),
    }
}

/// Serializes a model into the binary container.
pub fn model_to_bytes<T: Real>(model: &Model<T>) -> Result<Vec<u8>> {
    model.validate().map_err(|e| Error::Config(format!("refusing to save invalid model: {e}")))?;
    let mut w = Writer { out: Vec::new() };
    w.out.write_all(MAGIC)?;
    w.u32(VERSION)?;
    w.u32(model.d_in() as u32)?;
    w.u32(model.d_h() as u32)?;
    w.u32(model.d_out() as u32)?;
    w.u32(model.depth() as u32)?;
    w.u8(match model.residual {
        ResidualMode::None => 0,
        ResidualMode::Ssm => 1,
        ResidualMode::PlainResidual => 2,
    })?;
    let (readout_kind, bias) = match &model.readout {
        Readout::Node { bias, .. } => (0u8, bias),
        Readout::GraphMean { bias, .. } => (1u8, bias),
    };
    w.u8(readout_kind)?;
    w.u8(bias.is_some() as u8)?;
    match &model.ssm_config {
        Some(cfg) => {
            w.u8(1)?;
            w.f64(cfg.state_radius)?;
            w.f64(cfg.input_radius)?;
            w.u8(cfg.identity_input as u8)?;
            w.u64(cfg.seed)?;
            w.u8(cfg.shared as u8)?;
            w.u8(cfg.trainable as u8)?;
        }
        None => w.u8(0)?,
    }
    w.u8(match &model.ssm {
        SsmStorage::Absent => 0,
        SsmStorage::Shared(_) => 1,
        SsmStorage::PerLayer(_) => 2,
    })?;
    for layer in &model.layers {
        let (kind, hop) = match layer.kind {
            CouplingKind::Gcn => (0u8, 0u32),
            CouplingKind::Gat => (1, 0),
            CouplingKind::KHop(h) => (2, h as u32),
        };
        w.u8(kind)?;
        w.u32(hop)?;
        w.u8(sigma_code(layer.params.sigma))?;
        w.u8(layer.params.attention.is_some() as u8)?;
    }
    w.matrix(&model.encoder)?;
    for layer in &model.layers {
        w.matrix(&layer.params.weight)?;
        if let Some(att) = &layer.params.attention {
            w.vector(&att.a_src)?;
            w.vector(&att.a_dst)?;
        }
    }
    match &model.ssm {
        SsmStorage::Absent => {}
        SsmStorage::Shared(p) => {
            w.matrix(&p.state)?;
            w.matrix(&p.input)?;
        }
        SsmStorage::PerLayer(ps) => {
            for p in ps {
                w.matrix(&p.state)?;
                w.matrix(&p.input)?;
            }
        }
    }
    w.matrix(model.readout.weight())?;
    if let Some(b) = bias {
        w.vector(b)?;
    }
    Ok(w.out)
}

/// Deserializes a model from the binary container.
pub fn model_from_bytes<T: Real>(bytes: &[u8]) -> Result<Model<T>> {
    let mut r = Reader { inp: bytes };
    let mut magic = [0u8; 4];
    r.inp.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Parse {
            line: 0,
            message: "not a model container (bad magic)".into(),
        });
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(Error::Parse {
            line: 0,
            message: format!("unsupported container version {version}"),
        });
    }
    let d_in = r.u32()? as usize;
    let d_h = r.u32()? as usize;
    let d_out = r.u32()? as usize;
    let depth = r.u32()? as usize;
    let residual = match r.u8()? {
        0 => ResidualMode::None,
        1 => ResidualMode::Ssm,
        2 => ResidualMode::PlainResidual,
        other => {
            return Err(Error::Parse {
                line: 0,
                message: format!("unknown residual mode code {other}"),
            })
        }
    };
    let readout_kind = r.u8()?;
    let has_bias = r.u8()? == 1;
    let ssm_config = if r.u8()? == 1 {
        Some(SsmConfig {
            state_radius: r.f64()?,
            input_radius: r.f64()?,
            identity_input: r.u8()? == 1,
            seed: r.u64()?,
            shared: r.u8()? == 1,
            trainable: r.u8()? == 1,
        })
    } else {
        None
    };
    let storage_code = r.u8()?;
    struct LayerHeader {
        kind: CouplingKind,
        sigma: Nonlinearity,
        has_attention: bool,
    }
    let mut headers = Vec::with_capacity(depth);
    for _ in 0..depth {
        let kind_code = r.u8()?;
        let hop = r.u32()? as usize;
        let sigma = sigma_from(r.u8()?)?;
        let has_attention = r.u8()? == 1;
        let kind = match kind_code {
            0 => CouplingKind::Gcn,
            1 => CouplingKind::Gat,
            2 => CouplingKind::KHop(hop),
            other => {
                return Err(Error::Parse {
                    line: 0,
                    message: format!("unknown coupling code {other}"),
                })
            }
        };
        headers.push(LayerHeader {
            kind,
            sigma,
            has_attention,
        });
    }
    let encoder = r.matrix::<T>(d_in, d_h)?;
    let mut layers = Vec::with_capacity(depth);
    for h in &headers {
        let weight = r.matrix::<T>(d_h, d_h)?;
        let attention = if h.has_attention {
            Some(Attention {
                a_src: r.vector::<T>(d_h)?,
                a_dst: r.vector::<T>(d_h)?,
            })
        } else {
            None
        };
        layers.push(Layer {
            kind: h.kind,
            params: LayerParams {
                weight,
                attention,
                sigma: h.sigma,
            },
        });
    }
    let ssm = match storage_code {
        0 => SsmStorage::Absent,
        1 => SsmStorage::Shared(SsmPair {
            state: r.matrix::<T>(d_h, d_h)?,
            input: r.matrix::<T>(d_h, d_h)?,
        }),
        2 => {
            let mut pairs = Vec::with_capacity(depth);
            for _ in 0..depth {
                pairs.push(SsmPair {
                    state: r.matrix::<T>(d_h, d_h)?,
                    input: r.matrix::<T>(d_h, d_h)?,
                });
            }
            SsmStorage::PerLayer(pairs)
        }
        other => {
            return Err(Error::Parse {
                line: 0,
                message: format!("unknown state storage code {other}"),
            })
        }
    };
    let weight = r.matrix::<T>(d_h, d_out)?;
    let bias = if has_bias {
        Some(r.vector::<T>(d_out)?)
    } else {
        None
    };
    let readout = match readout_kind {
        0 => Readout::Node { weight, bias },
        1 => Readout::GraphMean { weight, bias },
        other => {
            return Err(Error::Parse {
                line: 0,
                message: format!("unknown readout code {other}"),
            })
        }
    };
    let model = Model {
        encoder,
        layers,
        ssm,
        residual,
        readout,
        ssm_config,
    };
    model.validate()?;
    Ok(model)
}

pub fn save_model<T: Real>(model: &Model<T>, path: &Path) -> Result<()> {
    std::fs::write(path, model_to_bytes(model)?)?;
    Ok(())
}

pub fn load_model<T: Real>(path: &Path) -> Result<Model<T>> {
    model_from_bytes(&std::fs::read(path)?)
}
