//! Binary checkpoint of an [`EnsembleAgent`].
//!
//! Layout, little-endian throughout:
//!
//! ```text
//! magic "ORSCHED1" | u32 version | str config_hash | str model_hash
//! | u64 state_dim, action_dim, hidden_width, hidden_layers, ensemble
//! | tensors: actors, actor targets, critic, critic target (u64 count, f64 values)
//! | sha256 of everything above
//! ```
//! Strings are a `u32` byte length followed by UTF-8.

use std::path::Path;

use sha2::{Digest, Sha256};

use crate::netmodel::SimConfig;
use crate::rng;
use crate::{Error, Result};

use super::agent::{AgentShape, EnsembleAgent, Hyper};
use super::mlp::{Activation, Mlp};

pub const MAGIC: &[u8; 8] = b"ORSCHED1";
pub const VERSION: u32 = 1;

/// Header fields of a checkpoint.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CheckpointHeader {
    pub version: u32,
    pub config_hash: String,
    pub model_hash: String,
    pub shape: AgentShape,
}

fn put_str(out: &mut Vec<u8>, s: &str) {
    out.extend_from_slice(&(s.len() as u32).to_le_bytes());
    out.extend_from_slice(s.as_bytes());
}

fn put_net(out: &mut Vec<u8>, net: &Mlp) {
    for t in net.param_slices() {
        out.extend_from_slice(&(t.len() as u64).to_le_bytes());
        for x in t {
            out.extend_from_slice(&x.to_le_bytes());
        }
    }
}

pub fn encode(agent: &EnsembleAgent, cfg: &SimConfig) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    put_str(&mut out, &cfg.hash());
    put_str(&mut out, &cfg.model_hash());
    let s = agent.shape;
    for v in [s.state_dim, s.action_dim, s.hidden_width, s.hidden_layers, s.ensemble] {
        out.extend_from_slice(&(v as u64).to_le_bytes());
    }
    for net in agent.actors.iter().chain(&agent.actor_targets).chain([&agent.critic, &agent.critic_target]) {
        put_net(&mut out, net);
    }
    let digest = Sha256::digest(&out);
    out.extend_from_slice(&digest);
    out
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.buf.len() {
            return Err(Error::CheckpointFormat("truncated".into()));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn str(&mut self) -> Result<String> {
        let n = self.u32()? as usize;
        String::from_utf8(self.take(n)?.to_vec()).map_err(|_| Error::CheckpointFormat("non-UTF-8 string".into()))
    }

    fn net_into(&mut self, net: &mut Mlp) -> Result<()> {
        for t in net.param_slices_mut() {
            let n = self.u64()? as usize;
            if n != t.len() {
                return Err(Error::CheckpointFormat(format!("tensor of {n} values where {} expected", t.len())));
            }
            for x in t.iter_mut() {
                *x = f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes"));
            }
        }
        Ok(())
    }
}

/// Verifies the trailer and returns the body.
fn verified_body(bytes: &[u8]) -> Result<&[u8]> {
    if bytes.len() < MAGIC.len() + 32 {
        return Err(Error::CheckpointFormat("file too short".into()));
    }
    let (body, trailer) = bytes.split_at(bytes.len() - 32);
    if Sha256::digest(body).as_slice() != trailer {
        return Err(Error::Checksum);
    }
    if &body[..MAGIC.len()] != MAGIC {
        return Err(Error::CheckpointFormat("bad magic".into()));
    }
    Ok(body)
}

fn read_header(r: &mut Reader<'_>) -> Result<CheckpointHeader> {
    r.take(MAGIC.len())?;
    let version = r.u32()?;
    if version != VERSION {
        return Err(Error::CheckpointFormat(format!("unsupported version {version}")));
    }
    let config_hash = r.str()?;
    let model_hash = r.str()?;
    let mut dims = [0usize; 5];
    for d in &mut dims {
        *d = r.u64()? as usize;
    }
    let [state_dim, action_dim, hidden_width, hidden_layers, ensemble] = dims;
    if state_dim == 0 || action_dim == 0 || hidden_width == 0 || ensemble == 0 {
        return Err(Error::CheckpointFormat("zero dimension in architecture".into()));
    }
    Ok(CheckpointHeader {
        version,
        config_hash,
        model_hash,
        shape: AgentShape { state_dim, action_dim, hidden_width, hidden_layers, ensemble },
    })
}

pub fn peek_header(bytes: &[u8]) -> Result<CheckpointHeader> {
    let body = verified_body(bytes)?;
    read_header(&mut Reader { buf: body, pos: 0 })
}

/// Rebuilds an agent. Refuses checkpoints whose model hash differs from `cfg`'s
/// unless `force` is set, in which case the stored architecture wins.
pub fn decode(bytes: &[u8], cfg: &SimConfig, force: bool) -> Result<EnsembleAgent> {
    let body = verified_body(bytes)?;
    let mut r = Reader { buf: body, pos: 0 };
    let header = read_header(&mut r)?;
    let expected = cfg.model_hash();
    if header.model_hash != expected && !force {
        return Err(Error::ConfigHashMismatch { expected, found: header.model_hash });
    }
    let shape = header.shape;
    let mut scratch = rng::stream(0, rng::tag::AGENT_INIT);
    let mut actor = || Mlp::new(&shape.actor_sizes(), Activation::Relu, Activation::Tanh, 1.0, &mut scratch);
    let mut actors: Vec<Mlp> = (0..shape.ensemble).map(|_| actor()).collect();
    let mut targets: Vec<Mlp> = (0..shape.ensemble).map(|_| actor()).collect();
    let mut critic = Mlp::new(&shape.critic_sizes(), Activation::Relu, Activation::Identity, 1.0, &mut scratch);
    let mut critic_target = critic.clone();
    for net in actors.iter_mut().chain(targets.iter_mut()).chain([&mut critic, &mut critic_target]) {
        r.net_into(net)?;
    }
    if r.pos != body.len() {
        return Err(Error::CheckpointFormat(format!("{} trailing bytes", body.len() - r.pos)));
    }
    Ok(EnsembleAgent::from_networks(shape, Hyper::from_config(cfg), actors, targets, critic, critic_target))
}

pub fn save(path: impl AsRef<Path>, agent: &EnsembleAgent, cfg: &SimConfig) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, encode(agent, cfg)).map_err(|e| Error::io(path, e))
}

pub fn load(path: impl AsRef<Path>, cfg: &SimConfig, force: bool) -> Result<EnsembleAgent> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes, cfg, force)
}
