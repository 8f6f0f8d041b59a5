//! Binary trajectory container.
//!
//! Layout (all integers and floats little-endian):
//! `b"FPTRAJ\0\0"`, `u32` version, `u64` header length, header JSON,
//! `u64` checkpoint count, `u64` parameter count, then per checkpoint
//! `u64` step, `f64` t, `f64` loss, `theta`, `dtheta`, `grad`.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::{Checkpoint, FlowConfig, TrajectoryRecord};
use crate::error::{Error, Result};
use crate::grad::LossKind;
use crate::nnet::NetworkSpec;

pub const FORMAT_VERSION: u32 = 1;
const MAGIC: &[u8; 8] = b"FPTRAJ\0\0";
const MAX_HEADER: u64 = 1 << 24;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryHeader {
    pub format_version: u32,
    pub spec: NetworkSpec,
    pub loss: LossKind,
    pub flow: FlowConfig,
    pub seed: u64,
    #[serde(default)]
    pub trivial: bool,
    #[serde(default)]
    pub loss_increases: usize,
    #[serde(default)]
    pub extra: serde_json::Value,
}

impl TrajectoryHeader {
    pub fn new(spec: NetworkSpec, loss: LossKind, record: &TrajectoryRecord) -> Self {
        TrajectoryHeader {
            format_version: FORMAT_VERSION,
            spec,
            loss,
            flow: record.config,
            seed: record.config.seed,
            trivial: record.trivial,
            loss_increases: record.loss_increases,
            extra: serde_json::Value::Null,
        }
    }
}

fn put_f64s<W: Write>(w: &mut W, xs: &[f64]) -> std::io::Result<()> {
    for x in xs {
        w.write_all(&x.to_le_bytes())?;
    }
    Ok(())
}

pub fn write_trajectory<W: Write>(mut w: W, header: &TrajectoryHeader, record: &TrajectoryRecord) -> Result<()> {
    let n = record.checkpoints.first().map_or(0, |c| c.theta.len());
    for cp in &record.checkpoints {
        for v in [&cp.theta, &cp.dtheta, &cp.grad] {
            if v.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    actual: v.len(),
                });
            }
        }
    }
    let json = serde_json::to_vec(header).map_err(|e| Error::Format(e.to_string()))?;
    w.write_all(MAGIC)?;
    w.write_all(&FORMAT_VERSION.to_le_bytes())?;
    w.write_all(&(json.len() as u64).to_le_bytes())?;
    w.write_all(&json)?;
    w.write_all(&(record.checkpoints.len() as u64).to_le_bytes())?;
    w.write_all(&(n as u64).to_le_bytes())?;
    for cp in &record.checkpoints {
        w.write_all(&(cp.step as u64).to_le_bytes())?;
        w.write_all(&cp.t.to_le_bytes())?;
        w.write_all(&cp.loss.to_le_bytes())?;
        put_f64s(&mut w, &cp.theta)?;
        put_f64s(&mut w, &cp.dtheta)?;
        put_f64s(&mut w, &cp.grad)?;
    }
    w.flush()?;
    Ok(())
}

fn get_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b).map_err(truncated)?;
    Ok(u64::from_le_bytes(b))
}

fn get_f64s<R: Read>(r: &mut R, n: usize) -> Result<Vec<f64>> {
    let mut bytes = vec![0u8; n * 8];
    r.read_exact(&mut bytes).map_err(truncated)?;
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect())
}

fn truncated(e: std::io::Error) -> Error {
    if e.kind() == std::io::ErrorKind::UnexpectedEof {
        Error::Format("truncated trajectory file".into())
    } else {
        Error::Io(e)
    }
}

pub fn read_trajectory<R: Read>(mut r: R) -> Result<(TrajectoryHeader, TrajectoryRecord)> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic).map_err(truncated)?;
    if &magic != MAGIC {
        return Err(Error::Format("not a trajectory file".into()));
    }
    let mut v = [0u8; 4];
    r.read_exact(&mut v).map_err(truncated)?;
    let version = u32::from_le_bytes(v);
    if version != FORMAT_VERSION {
        return Err(Error::Format(format!("unsupported trajectory version {version}")));
    }
    let header_len = get_u64(&mut r)?;
    if header_len > MAX_HEADER {
        return Err(Error::Format(format!("header length {header_len} too large")));
    }
    let mut json = vec![0u8; header_len as usize];
    r.read_exact(&mut json).map_err(truncated)?;
    let header: TrajectoryHeader = serde_json::from_slice(&json).map_err(|e| Error::Format(e.to_string()))?;
    let count = get_u64(&mut r)? as usize;
    let n = get_u64(&mut r)? as usize;
    let mut checkpoints = Vec::with_capacity(count.min(1 << 16));
    for _ in 0..count {
        let step = get_u64(&mut r)? as usize;
        let t = f64::from_bits(get_u64(&mut r)?);
        let loss = f64::from_bits(get_u64(&mut r)?);
        let theta = get_f64s(&mut r, n)?;
        let dtheta = get_f64s(&mut r, n)?;
        let grad = get_f64s(&mut r, n)?;
        checkpoints.push(Checkpoint {
            step,
            t,
            loss,
            theta,
            grad,
            dtheta,
        });
    }
    let record = TrajectoryRecord {
        config: header.flow,
        checkpoints,
        trivial: header.trivial,
        loss_increases: header.loss_increases,
    };
    Ok((header, record))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::Integrator;
    use crate::nnet::Activation;
    use proptest::prelude::*;

    fn record(n: usize, count: usize, fill: impl Fn(usize, usize) -> f64) -> TrajectoryRecord {
        TrajectoryRecord {
            config: FlowConfig {
                integrator: Integrator::Adam,
                step: 1e-3,
                steps: count * 3,
                stride: 3,
                seed: 7,
                bound: Some(50.0),
            },
            checkpoints: (0..count)
                .map(|c| Checkpoint {
                    step: 3 * c,
                    t: 3e-3 * c as f64,
                    loss: fill(c, n + 7),
                    theta: (0..n).map(|i| fill(c, i)).collect(),
                    grad: (0..n).map(|i| fill(c, i + n)).collect(),
                    dtheta: (0..n).map(|i| -fill(c, i + 2 * n)).collect(),
                })
                .collect(),
            trivial: false,
            loss_increases: 2,
        }
    }

    fn header(rec: &TrajectoryRecord) -> TrajectoryHeader {
        let spec = NetworkSpec::new(vec![1, 2, 1], Activation::Tanh).unwrap();
        let mut h = TrajectoryHeader::new(spec, LossKind::Power { p: 4.0 }, rec);
        h.extra = serde_json::json!({"note": "x"});
        h
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let rec = record(7, 4, |c, i| ((c * 31 + i) as f64).sin() / 3.0);
        let h = header(&rec);
        let mut buf = Vec::new();
        write_trajectory(&mut buf, &h, &rec).unwrap();
        let (h2, rec2) = read_trajectory(buf.as_slice()).unwrap();
        assert_eq!(h, h2);
        assert_eq!(rec, rec2);
        assert_eq!(&buf[..8], MAGIC);
    }

    #[test]
    fn rejects_corruption() {
        let rec = record(3, 2, |c, i| (c + i) as f64);
        let mut buf = Vec::new();
        write_trajectory(&mut buf, &header(&rec), &rec).unwrap();
        assert!(read_trajectory(&buf[..buf.len() - 1]).is_err());
        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(read_trajectory(bad.as_slice()).is_err());
        let mut bad = buf;
        bad[8] = 9;
        assert!(read_trajectory(bad.as_slice()).is_err());
    }

    proptest! {
        #[test]
        fn any_bits_round_trip(bits in prop::collection::vec(any::<u64>(), 1..40), n in 1usize..5) {
            let rec = record(n, 3, |c, i| f64::from_bits(bits[(c * 13 + i) % bits.len()]));
            let mut buf = Vec::new();
            write_trajectory(&mut buf, &header(&rec), &rec).unwrap();
            let (_, back) = read_trajectory(buf.as_slice()).unwrap();
            for (a, b) in rec.checkpoints.iter().zip(&back.checkpoints) {
                prop_assert_eq!(a.loss.to_bits(), b.loss.to_bits());
                for (x, y) in a.theta.iter().chain(&a.grad).chain(&a.dtheta).zip(b.theta.iter().chain(&b.grad).chain(&b.dtheta)) {
                    prop_assert_eq!(x.to_bits(), y.to_bits());
                }
            }
        }
    }
}
