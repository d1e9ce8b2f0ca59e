//! On-disk cache for fine reference solutions.
//!
//! Layout (little endian):
//! `b"LODLLREF"` | u32 version | 32-byte config hash | u64 n_sub | u64 nodes |
//! 3 × nodes f64 | 32-byte SHA-256 of everything before it.

use std::fs;
use std::path::{Path, PathBuf};

use lodll_core::studies::{run_fine, LlProblem};
use lodll_core::{build_uniform_trimesh, MagnetizationField};
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

const MAGIC: &[u8; 8] = b"LODLLREF";
const VERSION: u32 = 1;
const HEADER_LEN: usize = 8 + 4 + 32 + 8 + 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CacheOutcome {
    Hit,
    Computed,
}

/// Canonical description of everything that determines the reference run.
pub fn reference_key(problem: &LlProblem) -> String {
    format!(
        "reference v{VERSION}\nfamily={}\nepsilon={:e}\nscale={:e}\nalpha={:e}\ntau={:e}\nfinal_time={:e}\nscheme={}\ninitial={}\nforcing={}\nfine_n={}\n",
        problem.kappa.family,
        problem.kappa.epsilon,
        problem.kappa.scale,
        problem.alpha,
        problem.tau,
        problem.final_time,
        problem.scheme,
        problem.initial,
        problem.forcing,
        problem.fine_n,
    )
}

pub fn config_hash(problem: &LlProblem) -> [u8; 32] {
    Sha256::digest(reference_key(problem).as_bytes()).into()
}

pub fn encode(hash: &[u8; 32], field: &MagnetizationField) -> Vec<u8> {
    let nodes = field.num_nodes();
    let mut out = Vec::with_capacity(HEADER_LEN + 24 * nodes + 32);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(hash);
    out.extend_from_slice(&(field.n_sub() as u64).to_le_bytes());
    out.extend_from_slice(&(nodes as u64).to_le_bytes());
    for comp in &field.comps {
        for v in comp {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    let digest: [u8; 32] = Sha256::digest(&out).into();
    out.extend_from_slice(&digest);
    out
}

pub fn decode(bytes: &[u8], expected_hash: &[u8; 32]) -> std::result::Result<MagnetizationField, String> {
    if bytes.len() < HEADER_LEN + 32 {
        return Err("file too short".into());
    }
    let (body, stored) = bytes.split_at(bytes.len() - 32);
    if Sha256::digest(body).as_slice() != stored {
        return Err("checksum mismatch (file is corrupted)".into());
    }
    if &body[..8] != MAGIC {
        return Err("bad magic".into());
    }
    let u64_at = |o: usize| u64::from_le_bytes(body[o..o + 8].try_into().unwrap());
    let version = u32::from_le_bytes(body[8..12].try_into().unwrap());
    if version != VERSION {
        return Err(format!("unsupported version {version}"));
    }
    if &body[12..44] != expected_hash {
        return Err("config hash does not match the requested reference".into());
    }
    let n_sub = u64_at(44) as usize;
    let nodes = u64_at(52) as usize;
    if nodes != (n_sub + 1) * (n_sub + 1) || body.len() != HEADER_LEN + 24 * nodes {
        return Err("inconsistent payload size".into());
    }
    let mut values = body[HEADER_LEN..].chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap()));
    let comps: [Vec<f64>; 3] = std::array::from_fn(|_| values.by_ref().take(nodes).collect());
    let mesh = build_uniform_trimesh(n_sub).map_err(|e| e.to_string())?;
    MagnetizationField::new(&mesh, comps).map_err(|e| e.to_string())
}

#[derive(Debug, Clone)]
pub struct ReferenceCache {
    dir: PathBuf,
}

impl ReferenceCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    pub fn path_for(&self, problem: &LlProblem) -> PathBuf {
        let hash = config_hash(problem);
        self.dir.join(format!("ref-{}.bin", hex::encode(&hash[..8])))
    }

    /// Loads the fine reference for `problem`, running it on a miss. A
    /// corrupted or mismatched file is an error, never silently replaced.
    pub fn reference(&self, problem: &LlProblem) -> Result<(MagnetizationField, CacheOutcome)> {
        self.load_or_compute(problem, || {
            run_fine(problem, &mut [])
                .map(|out| out.state.field)
                .map_err(CliError::numerical("fine reference run"))
        })
    }

    pub fn load_or_compute(
        &self,
        problem: &LlProblem,
        compute: impl FnOnce() -> Result<MagnetizationField>,
    ) -> Result<(MagnetizationField, CacheOutcome)> {
        let hash = config_hash(problem);
        let path = self.path_for(problem);
        if path.exists() {
            let bytes = fs::read(&path).map_err(CliError::io(format!("reading {}", path.display())))?;
            let field = decode(&bytes, &hash).map_err(|reason| CliError::Cache {
                path: path.clone(),
                reason,
            })?;
            return Ok((field, CacheOutcome::Hit));
        }
        let field = compute()?;
        fs::create_dir_all(&self.dir).map_err(CliError::io(format!("creating {}", self.dir.display())))?;
        write_atomic(&path, &encode(&hash, &field))?;
        Ok((field, CacheOutcome::Computed))
    }
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("bin.tmp");
    fs::write(&tmp, bytes).map_err(CliError::io(format!("writing {}", tmp.display())))?;
    fs::rename(&tmp, path).map_err(CliError::io(format!("renaming {}", tmp.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn encode_decode_round_trip() {
        let mesh = build_uniform_trimesh(3).unwrap();
        let f = MagnetizationField::from_fn(&mesh, |x, y| [x, y, x * y - 0.1]);
        let h = [7u8; 32];
        let bytes = encode(&h, &f);
        assert_eq!(decode(&bytes, &h).unwrap(), f);
        assert!(decode(&bytes, &[0u8; 32]).unwrap_err().contains("config hash"));
        let mut bad = bytes.clone();
        bad[HEADER_LEN + 3] ^= 1;
        assert!(decode(&bad, &h).unwrap_err().contains("checksum"));
        assert!(decode(&bytes[..10], &h).is_err());
    }
}
