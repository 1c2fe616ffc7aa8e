//! Per-iteration, per-agent iterates of one solver run, with CSV and
//! compact binary export.

use std::io::{self, Read, Write};

use ndarray::{Array1, ArrayView1};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

const BINARY_MAGIC: &[u8; 8] = b"PXNTRJ01";

pub(crate) fn hex_string(bytes: &[u8]) -> String {
    let mut out = String::with_capacity(2 * bytes.len());
    for byte in bytes {
        out.push_str(&format!("{byte:02x}"));
    }
    out
}

/// Iterates of one run. Index 0 holds the initialization; entry `i`
/// holds the estimates after iteration `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    estimates: Vec<Vec<Array1<f64>>>,
    intermediates: Option<Vec<Vec<Array1<f64>>>>,
    seed: u64,
    run: u64,
    config_digest: String,
}

impl Trajectory {
    pub(crate) fn new(
        init: Vec<Array1<f64>>,
        capacity: usize,
        store_intermediates: bool,
        seed: u64,
        run: u64,
        config_digest: String,
    ) -> Self {
        let mut estimates = Vec::with_capacity(capacity + 1);
        estimates.push(init);
        Self {
            estimates,
            intermediates: store_intermediates.then(|| Vec::with_capacity(capacity)),
            seed,
            run,
            config_digest,
        }
    }

    pub(crate) fn push(&mut self, iterates: Vec<Array1<f64>>) {
        self.estimates.push(iterates);
    }

    pub(crate) fn push_intermediate(&mut self, psis: Vec<Array1<f64>>) {
        if let Some(store) = self.intermediates.as_mut() {
            store.push(psis);
        }
    }

    /// Number of stored per-iteration entries, initialization included.
    pub fn num_entries(&self) -> usize {
        self.estimates.len()
    }

    pub fn num_agents(&self) -> usize {
        self.estimates[0].len()
    }

    pub fn dimension(&self) -> usize {
        self.estimates[0][0].len()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn run(&self) -> u64 {
        self.run
    }

    pub fn config_digest(&self) -> &str {
        &self.config_digest
    }

    pub fn estimate(&self, iteration: usize, agent: usize) -> ArrayView1<'_, f64> {
        self.estimates[iteration][agent].view()
    }

    pub fn estimates_at(&self, iteration: usize) -> &[Array1<f64>] {
        &self.estimates[iteration]
    }

    /// Intermediate estimates of iteration `i` (1-based), when stored.
    pub fn intermediates_at(&self, iteration: usize) -> Option<&[Array1<f64>]> {
        self.intermediates
            .as_ref()
            .map(|store| store[iteration - 1].as_slice())
    }

    /// Average of the last `window` stored iterates per agent.
    pub fn average_last_iterates(&self, window: usize) -> Vec<Array1<f64>> {
        let n = self.num_entries();
        let window = window.min(n).max(1);
        let m = self.dimension();
        let mut sums = vec![Array1::<f64>::zeros(m); self.num_agents()];
        for entry in &self.estimates[n - window..] {
            for (sum, w) in sums.iter_mut().zip(entry.iter()) {
                *sum += w;
            }
        }
        let scale = 1.0 / window as f64;
        sums.into_iter().map(|s| s * scale).collect()
    }

    /// SHA-256 over the little-endian bytes of all stored estimates.
    pub fn digest(&self) -> String {
        let mut hasher = Sha256::new();
        for entry in &self.estimates {
            for agent in entry {
                for value in agent.iter() {
                    hasher.update(value.to_le_bytes());
                }
            }
        }
        hex_string(&hasher.finalize())
    }

    /// Writes `iteration,agent,coordinate,value` rows.
    pub fn export_csv(&self, mut out: impl Write) -> io::Result<()> {
        writeln!(out, "iteration,agent,coordinate,value")?;
        for (i, entry) in self.estimates.iter().enumerate() {
            for (k, w) in entry.iter().enumerate() {
                for (m, value) in w.iter().enumerate() {
                    writeln!(out, "{i},{k},{m},{value}")?;
                }
            }
        }
        Ok(())
    }

    /// Compact binary dump for large runs.
    pub fn export_binary(&self, mut out: impl Write) -> io::Result<()> {
        out.write_all(BINARY_MAGIC)?;
        let header = [
            self.num_entries() as u64,
            self.num_agents() as u64,
            self.dimension() as u64,
            self.seed,
            self.run,
        ];
        for v in header {
            out.write_all(&v.to_le_bytes())?;
        }
        let digest = self.config_digest.as_bytes();
        out.write_all(&(digest.len() as u64).to_le_bytes())?;
        out.write_all(digest)?;
        for entry in &self.estimates {
            for agent in entry {
                for value in agent.iter() {
                    out.write_all(&value.to_le_bytes())?;
                }
            }
        }
        Ok(())
    }

    pub fn import_binary(mut input: impl Read) -> Result<Self> {
        let mut magic = [0u8; 8];
        input.read_exact(&mut magic)?;
        if &magic != BINARY_MAGIC {
            return Err(Error::TrajectoryFormat {
                reason: "bad magic".into(),
            });
        }
        let read_u64 = |input: &mut dyn Read| -> Result<u64> {
            let mut buf = [0u8; 8];
            input.read_exact(&mut buf)?;
            Ok(u64::from_le_bytes(buf))
        };
        let entries = read_u64(&mut input)? as usize;
        let agents = read_u64(&mut input)? as usize;
        let dim = read_u64(&mut input)? as usize;
        let seed = read_u64(&mut input)?;
        let run = read_u64(&mut input)?;
        let digest_len = read_u64(&mut input)? as usize;
        if entries == 0 || agents == 0 || dim == 0 || digest_len > 1 << 16 {
            return Err(Error::TrajectoryFormat {
                reason: format!("implausible header: {entries} x {agents} x {dim}"),
            });
        }
        let mut digest = vec![0u8; digest_len];
        input.read_exact(&mut digest)?;
        let config_digest = String::from_utf8(digest).map_err(|_| Error::TrajectoryFormat {
            reason: "digest is not utf-8".into(),
        })?;
        let mut estimates = Vec::with_capacity(entries);
        let mut buf = [0u8; 8];
        for _ in 0..entries {
            let mut entry = Vec::with_capacity(agents);
            for _ in 0..agents {
                let mut w = Array1::<f64>::zeros(dim);
                for value in w.iter_mut() {
                    input.read_exact(&mut buf)?;
                    *value = f64::from_le_bytes(buf);
                }
                entry.push(w);
            }
            estimates.push(entry);
        }
        Ok(Self {
            estimates,
            intermediates: None,
            seed,
            run,
            config_digest,
        })
    }
}
