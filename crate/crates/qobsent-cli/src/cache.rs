//! On-disk cache of spectral decompositions, keyed by a content hash of the
//! model parameters plus a format version tag.
//!
//! File layout (all integers and floats little-endian):
//! magic `QOBSENTC` (8 bytes), format version u32, key (32 bytes), dim u64,
//! eigenvalues (dim f64), eigenvectors column-major (dim*dim f64, real).

use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use sha2::{Digest, Sha256};

use qobsent::model::{build_hamiltonian, ModelParams};
use qobsent::scenarios::SpectralSource;
use qobsent::spectral::{diagonalize, Orthobasis, SpectralDecomposition};

use crate::CliError;

const MAGIC: &[u8; 8] = b"QOBSENTC";
const FORMAT_VERSION: u32 = 1;
/// Bumped whenever the Hamiltonian conventions or the eigensolver pipeline
/// change, so stale spectra are never served.
const CODE_TAG: &str = "qobsent-spectra-v1";

pub fn cache_key(params: &ModelParams) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(CODE_TAG.as_bytes());
    h.update((params.lattice.sites as u64).to_le_bytes());
    h.update((params.lattice.particles as u64).to_le_bytes());
    for x in [params.t, params.tp, params.v, params.vp] {
        h.update(x.to_le_bytes());
    }
    h.update([params.density_shift as u8]);
    h.finalize().into()
}

pub struct SpectraCache {
    dir: PathBuf,
}

impl SpectraCache {
    pub fn new(dir: PathBuf) -> Result<Self, CliError> {
        fs::create_dir_all(&dir)?;
        Ok(Self { dir })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn path_for(&self, key: &[u8; 32]) -> PathBuf {
        self.dir.join(format!("{}.spec", hex::encode(key)))
    }

    pub fn load(&self, key: &[u8; 32]) -> Option<SpectralDecomposition> {
        let path = self.path_for(key);
        let mut file = fs::File::open(&path).ok()?;
        let mut header = [0u8; 8 + 4 + 32 + 8];
        file.read_exact(&mut header).ok()?;
        if &header[..8] != MAGIC {
            return None;
        }
        let version = u32::from_le_bytes(header[8..12].try_into().unwrap());
        if version != FORMAT_VERSION || &header[12..44] != key {
            return None;
        }
        let dim = u64::from_le_bytes(header[44..52].try_into().unwrap()) as usize;
        let mut payload = vec![0u8; dim * 8 + dim * dim * 8];
        file.read_exact(&mut payload).ok()?;
        let mut rest = [0u8; 1];
        if file.read(&mut rest).ok()? != 0 {
            return None;
        }
        let floats = |bytes: &[u8]| -> Vec<f64> {
            bytes
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                .collect()
        };
        let eigenvalues = floats(&payload[..dim * 8]);
        let vectors = floats(&payload[dim * 8..]);
        let basis = nalgebra::DMatrix::from_column_slice(dim, dim, &vectors);
        SpectralDecomposition::from_parts(eigenvalues, Orthobasis::Real(basis)).ok()
    }

    pub fn store(&self, key: &[u8; 32], sd: &SpectralDecomposition) -> Result<(), CliError> {
        let basis = match sd.basis().as_ref() {
            Orthobasis::Real(b) => b,
            Orthobasis::Complex(_) => {
                return Err(CliError::Cache(
                    "only real spectral decompositions are cached".into(),
                ))
            }
        };
        let dim = sd.dim();
        let mut bytes =
            Vec::with_capacity(8 + 4 + 32 + 8 + dim * 8 + dim * dim * 8);
        bytes.extend_from_slice(MAGIC);
        bytes.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        bytes.extend_from_slice(key);
        bytes.extend_from_slice(&(dim as u64).to_le_bytes());
        for &e in sd.eigenvalues() {
            bytes.extend_from_slice(&e.to_le_bytes());
        }
        for &x in basis.as_slice() {
            bytes.extend_from_slice(&x.to_le_bytes());
        }
        // atomic: write a sibling temp file, then rename over the target
        let target = self.path_for(key);
        let tmp = target.with_extension("tmp");
        {
            let mut f = fs::File::create(&tmp)?;
            f.write_all(&bytes)?;
            f.sync_all()?;
        }
        fs::rename(&tmp, &target)?;
        Ok(())
    }

    /// (key hex, dimension, file size) for every cache entry.
    pub fn entries(&self) -> Result<Vec<(String, usize, u64)>, CliError> {
        let mut out = Vec::new();
        for entry in fs::read_dir(&self.dir)? {
            let entry = entry?;
            let path = entry.path();
            if path.extension().and_then(|e| e.to_str()) != Some("spec") {
                continue;
            }
            let mut file = fs::File::open(&path)?;
            let mut header = [0u8; 8 + 4 + 32 + 8];
            if file.read_exact(&mut header).is_err() || &header[..8] != MAGIC {
                continue;
            }
            let dim = u64::from_le_bytes(header[44..52].try_into().unwrap()) as usize;
            let key = hex::encode(&header[12..44]);
            out.push((key, dim, entry.metadata()?.len()));
        }
        out.sort();
        Ok(out)
    }
}

impl SpectralSource for SpectraCache {
    fn decomposition(
        &self,
        params: &ModelParams,
    ) -> qobsent::Result<Arc<SpectralDecomposition>> {
        let key = cache_key(params);
        if let Some(sd) = self.load(&key) {
            return Ok(Arc::new(sd));
        }
        let sd = diagonalize(&build_hamiltonian(params)?)?;
        // a failed store falls back to the freshly computed decomposition
        let _ = self.store(&key, &sd);
        Ok(Arc::new(sd))
    }
}
