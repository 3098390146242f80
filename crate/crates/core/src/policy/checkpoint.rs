//! Checkpoint container: `DFPOLNET` magic, u32 LE format version, u32 LE
//! header length, header JSON (role and shapes), then every parameter as
//! little-endian f64 in canonical order. Round-trips are bit-exact.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::layer::DenseLayer;
use super::net::{PolicyNet, PolicyRole};
use super::PolicyError;

const MAGIC: &[u8; 8] = b"DFPOLNET";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(deny_unknown_fields)]
struct CheckpointHeader {
    role: PolicyRole,
    input_width: usize,
    hidden_sizes: Vec<usize>,
    head_spec: Vec<usize>,
    param_count: usize,
}

pub fn save_checkpoint(net: &PolicyNet, path: &Path) -> Result<(), PolicyError> {
    let params = net.params();
    if params.iter().any(|p| !p.is_finite()) {
        return Err(PolicyError::NonFinite("refusing to checkpoint non-finite parameters".into()));
    }
    let header = CheckpointHeader {
        role: net.role,
        input_width: net.input_width,
        hidden_sizes: net.hidden_sizes(),
        head_spec: net.head_spec.clone(),
        param_count: params.len(),
    };
    let header_json =
        serde_json::to_vec(&header).map_err(|e| PolicyError::Checkpoint(e.to_string()))?;

    let mut out = BufWriter::new(File::create(path)?);
    out.write_all(MAGIC)?;
    out.write_all(&CHECKPOINT_VERSION.to_le_bytes())?;
    out.write_all(&u32::try_from(header_json.len()).unwrap().to_le_bytes())?;
    out.write_all(&header_json)?;
    for p in &params {
        out.write_all(&p.to_le_bytes())?;
    }
    out.flush()?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<PolicyNet, PolicyError> {
    let mut input = BufReader::new(File::open(path)?);
    let corrupt = |what: &str| PolicyError::Checkpoint(format!("{what} in {}", path.display()));

    let mut magic = [0u8; 8];
    input.read_exact(&mut magic).map_err(|_| corrupt("truncated magic"))?;
    if &magic != MAGIC {
        return Err(corrupt("bad magic"));
    }
    let mut word = [0u8; 4];
    input.read_exact(&mut word).map_err(|_| corrupt("truncated version"))?;
    let version = u32::from_le_bytes(word);
    if version != CHECKPOINT_VERSION {
        return Err(PolicyError::Checkpoint(format!(
            "unsupported checkpoint version {version} in {}",
            path.display()
        )));
    }
    input.read_exact(&mut word).map_err(|_| corrupt("truncated header length"))?;
    let header_len = u32::from_le_bytes(word) as usize;
    let mut header_json = vec![0u8; header_len];
    input.read_exact(&mut header_json).map_err(|_| corrupt("truncated header"))?;
    let header: CheckpointHeader = serde_json::from_slice(&header_json)
        .map_err(|e| PolicyError::Checkpoint(format!("bad header: {e}")))?;

    let mut params = vec![0.0f64; header.param_count];
    let mut buf = [0u8; 8];
    for p in params.iter_mut() {
        input.read_exact(&mut buf).map_err(|_| corrupt("truncated parameter blob"))?;
        *p = f64::from_le_bytes(buf);
    }
    let mut trailing = [0u8; 1];
    if input.read(&mut trailing)? != 0 {
        return Err(corrupt("trailing bytes"));
    }
    if params.iter().any(|p| !p.is_finite()) {
        return Err(corrupt("non-finite parameters"));
    }

    let mut hidden = Vec::with_capacity(header.hidden_sizes.len());
    let mut cur = header.input_width;
    for &n in &header.hidden_sizes {
        hidden.push(DenseLayer::zeros(n, cur));
        cur = n;
    }
    let heads = header.head_spec.iter().map(|&k| DenseLayer::zeros(k, cur)).collect();
    let mut net = PolicyNet {
        role: header.role,
        input_width: header.input_width,
        head_spec: header.head_spec,
        hidden,
        heads,
        value: DenseLayer::zeros(1, cur),
    };
    if net.param_count() != header.param_count {
        return Err(corrupt("parameter count disagrees with shapes"));
    }
    net.set_params(&params)?;
    Ok(net)
}

/// Loads a checkpoint and insists on its role.
pub fn load_checkpoint_as(path: &Path, role: PolicyRole) -> Result<PolicyNet, PolicyError> {
    let net = load_checkpoint(path)?;
    if net.role != role {
        return Err(PolicyError::Checkpoint(format!(
            "{} holds a {} policy, expected {role}",
            path.display(),
            net.role
        )));
    }
    Ok(net)
}
