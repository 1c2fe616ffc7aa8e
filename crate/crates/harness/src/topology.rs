//! Topology files: structured TOML with one record per agent.
//!
//! Two layouts are accepted. With a global `k_nearest` directive every
//! agent needs coordinates and the graph is the symmetrized k-NN graph:
//!
//! ```toml
//! k_nearest = 4
//! [[agents]]
//! id = 1
//! x = 0.25
//! y = 1.5
//! ```
//!
//! Without the directive every agent lists its neighbors explicitly (by
//! id, mutually — an edge declared by only one endpoint is an error),
//! with optional per-link weights aligned with the neighbor list:
//!
//! ```toml
//! [[agents]]
//! id = 1
//! neighbors = [2, 3]
//! rho = [0.5, 0.5]
//! ```
//!
//! Agents are indexed in file order. Missing `rho` entries default to
//! `1 / card(N_k)`.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use ndarray::Array2;
use proxnet::graph::{build_network, knn_network};
use proxnet::Network;
use serde::Deserialize;

use crate::error::{HarnessError, Result};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TopologyFile {
    #[serde(default)]
    k_nearest: Option<usize>,
    agents: Vec<AgentRecord>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct AgentRecord {
    id: u64,
    #[serde(default)]
    x: Option<f64>,
    #[serde(default)]
    y: Option<f64>,
    #[serde(default)]
    neighbors: Option<Vec<u64>>,
    #[serde(default)]
    rho: Option<Vec<f64>>,
}

pub fn load_topology(path: &Path) -> Result<Network> {
    let text = fs::read_to_string(path).map_err(|source| HarnessError::ReadFile {
        path: path.to_path_buf(),
        source,
    })?;
    let file: TopologyFile = toml::from_str(&text).map_err(|e| HarnessError::TopologyFile {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let fail = |message: String| HarnessError::TopologyFile {
        path: path.to_path_buf(),
        message,
    };

    if file.agents.is_empty() {
        return Err(fail("no agents declared".into()));
    }
    let mut index_of = HashMap::new();
    for (index, agent) in file.agents.iter().enumerate() {
        if index_of.insert(agent.id, index).is_some() {
            return Err(fail(format!("duplicate agent id {}", agent.id)));
        }
    }

    if let Some(k_nearest) = file.k_nearest {
        let mut coordinates = Vec::with_capacity(file.agents.len());
        for agent in &file.agents {
            match (agent.x, agent.y) {
                (Some(x), Some(y)) => coordinates.push((x, y)),
                _ => {
                    return Err(fail(format!(
                        "agent {} needs x and y under the k_nearest directive",
                        agent.id
                    )))
                }
            }
        }
        return Ok(knn_network(&coordinates, k_nearest)?);
    }

    let n = file.agents.len();
    let mut adjacency = Array2::from_elem((n, n), false);
    let mut rho = Array2::<f64>::zeros((n, n));
    for (index, agent) in file.agents.iter().enumerate() {
        let Some(neighbors) = &agent.neighbors else {
            return Err(fail(format!(
                "agent {} needs a neighbor list (or use the k_nearest directive)",
                agent.id
            )));
        };
        if let Some(weights) = &agent.rho {
            if weights.len() != neighbors.len() {
                return Err(fail(format!(
                    "agent {}: {} rho entries for {} neighbors",
                    agent.id,
                    weights.len(),
                    neighbors.len()
                )));
            }
        }
        for (slot, neighbor_id) in neighbors.iter().enumerate() {
            let Some(&neighbor_index) = index_of.get(neighbor_id) else {
                return Err(fail(format!(
                    "agent {} lists unknown neighbor id {}",
                    agent.id, neighbor_id
                )));
            };
            adjacency[(index, neighbor_index)] = true;
            rho[(index, neighbor_index)] = agent
                .rho
                .as_ref()
                .map(|weights| weights[slot])
                .unwrap_or(1.0 / neighbors.len() as f64);
        }
    }
    // mutual declarations only
    for (index, agent) in file.agents.iter().enumerate() {
        for other in 0..n {
            if adjacency[(index, other)] && !adjacency[(other, index)] {
                return Err(fail(format!(
                    "agent {} lists {} but not vice versa; links must be declared by both ends",
                    agent.id, file.agents[other].id
                )));
            }
        }
    }
    Ok(build_network(&adjacency, &rho)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_temp(content: &str) -> tempfile::NamedTempFile {
        let mut file = tempfile::NamedTempFile::new().unwrap();
        file.write_all(content.as_bytes()).unwrap();
        file
    }

    #[test]
    fn explicit_neighbor_lists_load() {
        let file = write_temp(
            r#"
[[agents]]
id = 10
neighbors = [20, 30]
rho = [0.5, 0.5]

[[agents]]
id = 20
neighbors = [10]

[[agents]]
id = 30
neighbors = [10]
"#,
        );
        let network = load_topology(file.path()).unwrap();
        assert_eq!(network.num_agents(), 3);
        assert_eq!(network.neighbors(0), &[1, 2]);
        // p_01 = (0.5 + 1/1) / 2
        assert!((network.p_weight(0, 1).unwrap() - 0.75).abs() < 1e-12);
    }

    #[test]
    fn knn_directive_loads() {
        let file = write_temp(
            r#"
k_nearest = 1
[[agents]]
id = 1
x = 0.0
y = 0.0
[[agents]]
id = 2
x = 1.0
y = 0.0
[[agents]]
id = 3
x = 2.0
y = 0.0
"#,
        );
        let network = load_topology(file.path()).unwrap();
        assert_eq!(network.neighbors(1), &[0, 2]);
    }

    #[test]
    fn one_sided_links_are_rejected() {
        let file = write_temp(
            r#"
[[agents]]
id = 1
neighbors = [2]
[[agents]]
id = 2
neighbors = []
"#,
        );
        match load_topology(file.path()) {
            Err(HarnessError::TopologyFile { message, .. }) => {
                assert!(message.contains("both ends"), "{message}");
            }
            other => panic!("expected topology error, got {other:?}"),
        }
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let file = write_temp("wat = 1\n[[agents]]\nid = 1\nneighbors = []\n");
        assert!(matches!(
            load_topology(file.path()),
            Err(HarnessError::TopologyFile { .. })
        ));
    }
}
