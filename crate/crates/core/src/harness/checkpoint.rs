//! Checkpoint file format.
//!
//! Layout: magic `PPGL`, format version (u32 LE), config digest (32 bytes,
//! SHA-256 of the resolved config dump), array count (u32 LE); then per
//! array: name length (u16 LE), UTF-8 name, rank (u8), dims (u32 LE each),
//! payload of f64 LE values. Loading reproduces every array bit-exactly.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use thiserror::Error;

pub const MAGIC: [u8; 4] = *b"PPGL";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("corrupt checkpoint header: {0}")]
    CorruptHeader(String),
    #[error("checkpoint format version {found} unsupported (expected {FORMAT_VERSION})")]
    VersionMismatch { found: u32 },
    #[error("truncated checkpoint payload: {0}")]
    Truncated(String),
    #[error("checkpoint was written by a different configuration")]
    ConfigMismatch,
    #[error("missing array '{0}'")]
    MissingArray(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub config_digest: [u8; 32],
    pub arrays: Vec<(String, Vec<usize>, Vec<f64>)>,
}

impl Checkpoint {
    pub fn array(&self, name: &str) -> Result<&(String, Vec<usize>, Vec<f64>), CheckpointError> {
        self.arrays
            .iter()
            .find(|(n, _, _)| n == name)
            .ok_or_else(|| CheckpointError::MissingArray(name.to_string()))
    }

    pub fn values(&self, name: &str) -> Result<&[f64], CheckpointError> {
        Ok(&self.array(name)?.2)
    }

    pub fn scalar(&self, name: &str) -> Result<f64, CheckpointError> {
        let vals = self.values(name)?;
        if vals.len() != 1 {
            return Err(CheckpointError::CorruptHeader(format!(
                "array '{name}' is not a scalar"
            )));
        }
        Ok(vals[0])
    }
}

pub fn save(path: &Path, checkpoint: &Checkpoint) -> Result<(), CheckpointError> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(&MAGIC)?;
    w.write_all(&FORMAT_VERSION.to_le_bytes())?;
    w.write_all(&checkpoint.config_digest)?;
    w.write_all(&(checkpoint.arrays.len() as u32).to_le_bytes())?;
    for (name, shape, data) in &checkpoint.arrays {
        let numel: usize = shape.iter().product();
        assert_eq!(numel, data.len(), "array '{name}' shape/data mismatch");
        w.write_all(&(name.len() as u16).to_le_bytes())?;
        w.write_all(name.as_bytes())?;
        w.write_all(&[shape.len() as u8])?;
        for &d in shape {
            w.write_all(&(d as u32).to_le_bytes())?;
        }
        for &v in data {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn load(path: &Path) -> Result<Checkpoint, CheckpointError> {
    let mut r = BufReader::new(File::open(path)?);

    let mut magic = [0u8; 4];
    read_header(&mut r, &mut magic, "magic")?;
    if magic != MAGIC {
        return Err(CheckpointError::CorruptHeader(format!(
            "bad magic {magic:?}"
        )));
    }
    let mut word = [0u8; 4];
    read_header(&mut r, &mut word, "version")?;
    let version = u32::from_le_bytes(word);
    if version != FORMAT_VERSION {
        return Err(CheckpointError::VersionMismatch { found: version });
    }
    let mut config_digest = [0u8; 32];
    read_header(&mut r, &mut config_digest, "config digest")?;
    read_header(&mut r, &mut word, "array count")?;
    let count = u32::from_le_bytes(word) as usize;

    let mut arrays = Vec::with_capacity(count);
    for idx in 0..count {
        let mut len2 = [0u8; 2];
        read_payload(&mut r, &mut len2, || format!("array {idx} name length"))?;
        let name_len = u16::from_le_bytes(len2) as usize;
        let mut name_bytes = vec![0u8; name_len];
        read_payload(&mut r, &mut name_bytes, || format!("array {idx} name"))?;
        let name = String::from_utf8(name_bytes)
            .map_err(|_| CheckpointError::CorruptHeader(format!("array {idx} name not UTF-8")))?;

        let mut rank = [0u8; 1];
        read_payload(&mut r, &mut rank, || format!("'{name}' rank"))?;
        let mut shape = Vec::with_capacity(rank[0] as usize);
        for _ in 0..rank[0] {
            read_payload(&mut r, &mut word, || format!("'{name}' dims"))?;
            shape.push(u32::from_le_bytes(word) as usize);
        }
        let numel: usize = shape.iter().product();
        let mut payload = vec![0u8; numel * 8];
        read_payload(&mut r, &mut payload, || format!("'{name}' payload"))?;
        let data: Vec<f64> = payload
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
            .collect();
        arrays.push((name, shape, data));
    }

    // trailing garbage means the writer and reader disagree
    let mut probe = [0u8; 1];
    if r.read(&mut probe)? != 0 {
        return Err(CheckpointError::Truncated(
            "unexpected trailing bytes".into(),
        ));
    }
    Ok(Checkpoint {
        config_digest,
        arrays,
    })
}

fn read_header(r: &mut impl Read, buf: &mut [u8], what: &str) -> Result<(), CheckpointError> {
    r.read_exact(buf)
        .map_err(|_| CheckpointError::CorruptHeader(format!("missing {what}")))
}

fn read_payload(
    r: &mut impl Read,
    buf: &mut [u8],
    what: impl Fn() -> String,
) -> Result<(), CheckpointError> {
    r.read_exact(buf)
        .map_err(|_| CheckpointError::Truncated(what()))
}
