//! Output artifacts. Every file starts with a `# config_digest = <hex>`
//! comment line so results can always be traced back to the exact
//! configuration that produced them. Writers are deterministic: the same
//! config and seed reproduce byte-identical files.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::error::Result;

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    Ok(BufWriter::new(File::create(path)?))
}

/// Lowercase hex encoding of a digest.
pub fn hex_string(bytes: &[u8]) -> String {
    let mut out = String::with_capacity(2 * bytes.len());
    for byte in bytes {
        out.push_str(&format!("{byte:02x}"));
    }
    out
}

/// One row of a sweep table.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub mu: f64,
    pub eta: f64,
    pub regularizer: String,
    /// `msd_loc_db` for MSD sweeps, `prediction_error` for weather runs.
    pub value: f64,
    pub n_runs: usize,
}

/// Curve CSV: `iteration,msd,msd_db`.
pub fn write_curve_csv(path: &Path, digest: &str, values: &[f64]) -> Result<()> {
    let mut out = create(path)?;
    writeln!(out, "# config_digest = {digest}")?;
    writeln!(out, "iteration,msd,msd_db")?;
    for (iteration, &msd) in values.iter().enumerate() {
        let db = 10.0 * msd.log10();
        writeln!(out, "{iteration},{msd},{db}")?;
    }
    Ok(())
}

/// Sweep CSV: `eta,regularizer,<value>,n_runs,mu`.
pub fn write_sweep_csv(
    path: &Path,
    digest: &str,
    value_name: &str,
    rows: &[SweepRow],
) -> Result<()> {
    let mut out = create(path)?;
    writeln!(out, "# config_digest = {digest}")?;
    writeln!(out, "eta,regularizer,{value_name},n_runs,mu")?;
    for row in rows {
        writeln!(
            out,
            "{},{},{},{},{}",
            row.eta, row.regularizer, row.value, row.n_runs, row.mu
        )?;
    }
    Ok(())
}

/// Summary in a flat `key = value` format, keys sorted.
pub fn write_summary(path: &Path, digest: &str, entries: &[(String, String)]) -> Result<()> {
    let mut sorted: Vec<&(String, String)> = entries.iter().collect();
    sorted.sort_by(|a, b| a.0.cmp(&b.0));
    let mut out = create(path)?;
    writeln!(out, "# config_digest = {digest}")?;
    for (key, value) in sorted {
        writeln!(out, "{key} = {value}")?;
    }
    Ok(())
}

/// Provenance: digest, seed, code version and the effective config.
pub fn write_provenance(path: &Path, digest: &str, seed: u64, config_toml: &str) -> Result<()> {
    let mut out = create(path)?;
    writeln!(out, "# config_digest = {digest}")?;
    writeln!(out, "seed = {seed}")?;
    writeln!(out, "version = {}", env!("CARGO_PKG_VERSION"))?;
    writeln!(out)?;
    writeln!(out, "# effective configuration")?;
    for line in config_toml.lines() {
        writeln!(out, "# {line}")?;
    }
    Ok(())
}

/// Reference solution cache: `agent,coordinate,value` rows keyed by a
/// problem digest.
pub fn reference_cache_path(out_dir: &Path, problem_digest: &str) -> PathBuf {
    out_dir
        .join("reference_cache")
        .join(format!("{problem_digest}.csv"))
}

pub fn write_reference(
    path: &Path,
    problem_digest: &str,
    per_agent: &[ndarray::Array1<f64>],
) -> Result<()> {
    let mut out = create(path)?;
    writeln!(out, "# reference_digest = {problem_digest}")?;
    writeln!(out, "agent,coordinate,value")?;
    for (agent, w) in per_agent.iter().enumerate() {
        for (coordinate, value) in w.iter().enumerate() {
            writeln!(out, "{agent},{coordinate},{value}")?;
        }
    }
    Ok(())
}

pub fn read_reference(
    path: &Path,
    num_agents: usize,
    dimension: usize,
) -> Option<Vec<ndarray::Array1<f64>>> {
    let text = fs::read_to_string(path).ok()?;
    let mut per_agent = vec![ndarray::Array1::<f64>::zeros(dimension); num_agents];
    let mut seen = 0usize;
    for line in text.lines().skip(2) {
        let mut fields = line.split(',');
        let agent: usize = fields.next()?.parse().ok()?;
        let coordinate: usize = fields.next()?.parse().ok()?;
        let value: f64 = fields.next()?.parse().ok()?;
        if agent >= num_agents || coordinate >= dimension {
            return None;
        }
        per_agent[agent][coordinate] = value;
        seen += 1;
    }
    (seen == num_agents * dimension).then_some(per_agent)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn reference_cache_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let path = reference_cache_path(dir.path(), "abc123");
        let reference = vec![array![1.5, -2.25], array![0.0, 3.5]];
        write_reference(&path, "abc123", &reference).unwrap();
        let back = read_reference(&path, 2, 2).unwrap();
        assert_eq!(reference, back);
        // wrong shape is rejected
        assert!(read_reference(&path, 3, 2).is_none());
    }

    #[test]
    fn summary_is_sorted_and_digested() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("summary.txt");
        write_summary(
            &path,
            "d1",
            &[("b".into(), "2".into()), ("a".into(), "1".into())],
        )
        .unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert_eq!(text, "# config_digest = d1\na = 1\nb = 2\n");
    }
}
