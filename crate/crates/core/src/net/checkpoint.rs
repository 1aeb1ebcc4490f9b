//! Binary checkpoint format for network parameters.
//!
//! Byte layout, all integers and floats little-endian:
//!
//! ```text
//! offset  size  field
//! 0       8     magic + version: ASCII "A3CCKPT1"
//! 8       4     u32 input_dim
//! 12      4     u32 action_count
//! 16      4     u32 activation (0 = relu, 1 = tanh)
//! 20      4     u32 hidden layer count H
//! 24      4*H   u32 hidden dims
//! ..      8     u64 parameter count P (must equal the layout total)
//! ..      8*P   f64 parameter values, flat layout order
//! ```
//!
//! The layout order is fixed by the architecture fields: trunk layers in
//! order, then policy, value, and confidence heads, each as row-major
//! weights followed by biases.

use super::params::{Activation, NetworkSpec, ParamLayout, ParamVector};
use super::NetError;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

const MAGIC: &[u8; 8] = b"A3CCKPT1";

pub fn save_checkpoint(path: &Path, params: &ParamVector) -> Result<(), NetError> {
    let spec = &params.layout().spec;
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(MAGIC)?;
    w.write_all(&(spec.input_dim as u32).to_le_bytes())?;
    w.write_all(&(spec.action_count as u32).to_le_bytes())?;
    let act: u32 = match spec.activation {
        Activation::Relu => 0,
        Activation::Tanh => 1,
    };
    w.write_all(&act.to_le_bytes())?;
    w.write_all(&(spec.hidden_dims.len() as u32).to_le_bytes())?;
    for &h in &spec.hidden_dims {
        w.write_all(&(h as u32).to_le_bytes())?;
    }
    w.write_all(&(params.len() as u64).to_le_bytes())?;
    for &v in params.as_slice() {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<ParamVector, NetError> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(NetError::BadCheckpoint(format!(
            "bad magic {:?} (expected {:?})",
            magic, MAGIC
        )));
    }
    let mut u32buf = [0u8; 4];
    let mut read_u32 = |r: &mut BufReader<File>| -> Result<u32, NetError> {
        r.read_exact(&mut u32buf)?;
        Ok(u32::from_le_bytes(u32buf))
    };
    let input_dim = read_u32(&mut r)? as usize;
    let action_count = read_u32(&mut r)? as usize;
    let activation = match read_u32(&mut r)? {
        0 => Activation::Relu,
        1 => Activation::Tanh,
        other => {
            return Err(NetError::BadCheckpoint(format!(
                "unknown activation tag {other}"
            )))
        }
    };
    let hidden_count = read_u32(&mut r)? as usize;
    if hidden_count > 1024 {
        return Err(NetError::BadCheckpoint(format!(
            "implausible hidden layer count {hidden_count}"
        )));
    }
    let mut hidden_dims = Vec::with_capacity(hidden_count);
    for _ in 0..hidden_count {
        hidden_dims.push(read_u32(&mut r)? as usize);
    }
    let spec = NetworkSpec {
        input_dim,
        hidden_dims,
        action_count,
        activation,
    };
    let layout = ParamLayout::new(spec)?;

    let mut u64buf = [0u8; 8];
    r.read_exact(&mut u64buf)?;
    let count = u64::from_le_bytes(u64buf) as usize;
    if count != layout.total {
        return Err(NetError::BadCheckpoint(format!(
            "parameter count {count} does not match layout total {}",
            layout.total
        )));
    }
    let mut values = Vec::with_capacity(count);
    let mut f64buf = [0u8; 8];
    for _ in 0..count {
        r.read_exact(&mut f64buf)?;
        values.push(f64::from_le_bytes(f64buf));
    }
    // Reject trailing garbage.
    let mut probe = [0u8; 1];
    if r.read(&mut probe)? != 0 {
        return Err(NetError::BadCheckpoint("trailing bytes".into()));
    }
    ParamVector::from_values(layout, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::params::init_params;

    #[test]
    fn round_trip_preserves_bits() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ckpt_0.bin");
        let spec = NetworkSpec::new(11, 3).with_hidden(vec![9, 4]);
        let params = init_params(&spec, 77).unwrap();
        save_checkpoint(&path, &params).unwrap();
        let loaded = load_checkpoint(&path).unwrap();
        assert_eq!(loaded.layout().spec, spec);
        assert_eq!(loaded.as_slice().len(), params.as_slice().len());
        for (a, b) in loaded.as_slice().iter().zip(params.as_slice()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn rejects_corrupt_files() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.bin");
        std::fs::write(&path, b"NOTACKPT").unwrap();
        assert!(matches!(
            load_checkpoint(&path),
            Err(NetError::BadCheckpoint(_)) | Err(NetError::Io(_))
        ));
        let spec = NetworkSpec::new(3, 2).with_hidden(vec![2]);
        let params = init_params(&spec, 0).unwrap();
        let good = dir.path().join("good.bin");
        save_checkpoint(&good, &params).unwrap();
        let mut bytes = std::fs::read(&good).unwrap();
        bytes.truncate(bytes.len() - 3);
        std::fs::write(&good, &bytes).unwrap();
        assert!(load_checkpoint(&good).is_err());
    }
}
