//! Fixed-width little-endian state checkpoints.
//!
//! Layout (byte offsets):
//!
//! | offset | type     | field                                           |
//! |--------|----------|-------------------------------------------------|
//! | 0      | [u8; 8]  | magic `HRODCKP1`                                |
//! | 8      | u32      | model id (0 barrier, 1 influx, 2 jump-reset)    |
//! | 12     | u32      | flags: bit 0 `c`, bit 1 `n`, bit 2 `b` present  |
//! | 16     | f64      | t                                               |
//! | 24     | f64      | a                                               |
//! | 32     | f64      | sigma2                                          |
//! | 40     | f64      | epsilon                                         |
//! | 48     | f64      | c (0 when absent)                               |
//! | 56     | f64      | b (0 when absent)                               |
//! | 64     | u64      | n (0 when absent)                               |
//! | 72     | u64      | killed                                          |
//! | 80     | u64      | injected                                        |
//! | 88     | u64      | queued                                          |
//! | 96     | u64      | len(z)                                          |
//! | 104    | u64      | len(x)                                          |
//! | 112    | f64 * .. | z values, then x values                         |

use std::io::{Read, Write};

use super::{ModelKind, SystemState};
use crate::analytics::DiffusionParams;
use crate::error::{Error, Result};

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"HRODCKP1";

const HEADER_LEN: usize = 112;
/// Upper bound on array lengths accepted from a checkpoint.
const MAX_LEN: u64 = 1 << 32;

pub fn write_checkpoint<W: Write>(state: &SystemState, mut w: W) -> Result<()> {
    let p = &state.params;
    let flags = p.c.is_some() as u32 | (p.n.is_some() as u32) << 1 | (p.b.is_some() as u32) << 2;
    let mut buf = Vec::with_capacity(HEADER_LEN + 8 * (state.z.len() + state.x.len()));
    buf.extend_from_slice(CHECKPOINT_MAGIC);
    buf.extend_from_slice(&state.model.id().to_le_bytes());
    buf.extend_from_slice(&flags.to_le_bytes());
    for v in [
        state.t,
        p.a,
        p.sigma2,
        p.epsilon,
        p.c.unwrap_or(0.0),
        p.b.unwrap_or(0.0),
    ] {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    for v in [
        p.n.unwrap_or(0) as u64,
        state.killed,
        state.injected,
        state.queued,
        state.z.len() as u64,
        state.x.len() as u64,
    ] {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    for v in state.z.iter().chain(&state.x) {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

fn f64_at(buf: &[u8], off: usize) -> f64 {
    f64::from_le_bytes(buf[off..off + 8].try_into().unwrap())
}

fn u64_at(buf: &[u8], off: usize) -> u64 {
    u64::from_le_bytes(buf[off..off + 8].try_into().unwrap())
}

pub fn read_checkpoint<R: Read>(mut r: R) -> Result<SystemState> {
    let mut head = [0u8; HEADER_LEN];
    r.read_exact(&mut head)?;
    if &head[..8] != CHECKPOINT_MAGIC {
        return Err(Error::Checkpoint("bad magic".into()));
    }
    let model_id = u32::from_le_bytes(head[8..12].try_into().unwrap());
    let model = ModelKind::from_id(model_id)
        .ok_or_else(|| Error::Checkpoint(format!("unknown model id {model_id}")))?;
    let flags = u32::from_le_bytes(head[12..16].try_into().unwrap());
    let params = DiffusionParams {
        a: f64_at(&head, 24),
        sigma2: f64_at(&head, 32),
        epsilon: f64_at(&head, 40),
        c: (flags & 1 != 0).then(|| f64_at(&head, 48)),
        b: (flags & 4 != 0).then(|| f64_at(&head, 56)),
        n: (flags & 2 != 0).then(|| u64_at(&head, 64) as usize),
    };
    let (len_z, len_x) = (u64_at(&head, 96), u64_at(&head, 104));
    if len_z > MAX_LEN || len_x > MAX_LEN {
        return Err(Error::Checkpoint("implausible array length".into()));
    }
    let mut payload = vec![0u8; 8 * (len_z + len_x) as usize];
    r.read_exact(&mut payload)?;
    let values: Vec<f64> = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let (z, x) = values.split_at(len_z as usize);
    Ok(SystemState {
        t: f64_at(&head, 16),
        model,
        z: z.to_vec(),
        x: x.to_vec(),
        killed: u64_at(&head, 72),
        injected: u64_at(&head, 80),
        queued: u64_at(&head, 88),
        params,
    })
}
