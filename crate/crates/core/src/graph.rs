//! Agent network topology: symmetric neighbor sets, per-link
//! co-regularization weights and their symmetrized form
//! `p_kl = (rho_kl + rho_lk) / 2`.

use ndarray::Array2;

use crate::error::{Error, Result};

/// Undirected, connected network of agents.
///
/// Immutable after construction, so it can be read freely from
/// concurrent workers.
#[derive(Debug, Clone)]
pub struct Network {
    num_agents: usize,
    /// Sorted neighbor indices per agent, self excluded.
    neighbors: Vec<Vec<usize>>,
    /// Directed link weights rho[k][i] for the link k -> neighbors[k][i].
    rho: Vec<Vec<f64>>,
    /// Symmetrized weights p[k][i] aligned with `neighbors`.
    p: Vec<Vec<f64>>,
}

impl Network {
    pub fn num_agents(&self) -> usize {
        self.num_agents
    }

    pub fn neighbors(&self, agent: usize) -> &[usize] {
        &self.neighbors[agent]
    }

    pub fn degree(&self, agent: usize) -> usize {
        self.neighbors[agent].len()
    }

    /// Symmetrized weights aligned with `neighbors(agent)`.
    pub fn p_weights(&self, agent: usize) -> &[f64] {
        &self.p[agent]
    }

    pub fn p_weight(&self, from: usize, to: usize) -> Option<f64> {
        let i = self.neighbors[from].binary_search(&to).ok()?;
        Some(self.p[from][i])
    }

    pub fn rho_weight(&self, from: usize, to: usize) -> Option<f64> {
        let i = self.neighbors[from].binary_search(&to).ok()?;
        Some(self.rho[from][i])
    }

    /// Iterates each undirected link once as `(k, l, p_kl)` with `k < l`.
    pub fn links(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.num_agents).flat_map(move |k| {
            self.neighbors[k]
                .iter()
                .zip(self.p[k].iter())
                .filter(move |(&l, _)| k < l)
                .map(move |(&l, &p)| (k, l, p))
        })
    }

    pub fn num_links(&self) -> usize {
        self.links().count()
    }

    pub fn adjacency(&self) -> Array2<bool> {
        let mut a = Array2::from_elem((self.num_agents, self.num_agents), false);
        for (k, l, _) in self.links() {
            a[(k, l)] = true;
            a[(l, k)] = true;
        }
        a
    }

    /// Unweighted graph Laplacian `D - A`.
    pub fn laplacian(&self) -> Array2<f64> {
        let mut l = Array2::<f64>::zeros((self.num_agents, self.num_agents));
        for (k, j, _) in self.links() {
            l[(k, k)] += 1.0;
            l[(j, j)] += 1.0;
            l[(k, j)] -= 1.0;
            l[(j, k)] -= 1.0;
        }
        l
    }

    /// Laplacian with the symmetrized weights `p_kl` as edge weights.
    pub fn weighted_laplacian(&self) -> Array2<f64> {
        let mut l = Array2::<f64>::zeros((self.num_agents, self.num_agents));
        for (k, j, p) in self.links() {
            l[(k, k)] += p;
            l[(j, j)] += p;
            l[(k, j)] -= p;
            l[(j, k)] -= p;
        }
        l
    }
}

fn component_sizes(neighbors: &[Vec<usize>]) -> Vec<usize> {
    let n = neighbors.len();
    let mut seen = vec![false; n];
    let mut sizes = Vec::new();
    for start in 0..n {
        if seen[start] {
            continue;
        }
        let mut stack = vec![start];
        seen[start] = true;
        let mut size = 0;
        while let Some(v) = stack.pop() {
            size += 1;
            for &w in &neighbors[v] {
                if !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        sizes.push(size);
    }
    sizes
}

fn finish_network(neighbors: Vec<Vec<usize>>, rho: Vec<Vec<f64>>) -> Result<Network> {
    let num_agents = neighbors.len();
    let sizes = component_sizes(&neighbors);
    if sizes.len() != 1 {
        return Err(Error::Disconnected {
            component_sizes: sizes,
        });
    }
    // p_kl = (rho_kl + rho_lk) / 2
    let mut p = vec![Vec::new(); num_agents];
    for k in 0..num_agents {
        p[k] = neighbors[k]
            .iter()
            .zip(rho[k].iter())
            .map(|(&l, &rho_kl)| {
                let i = neighbors[l].binary_search(&k).expect("symmetric neighbors");
                (rho_kl + rho[l][i]) / 2.0
            })
            .collect();
    }
    Ok(Network {
        num_agents,
        neighbors,
        rho,
        p,
    })
}

/// Builds a network from a symmetric boolean adjacency matrix and
/// per-directed-link weights `rho`. Entries of `rho` outside links are
/// ignored.
pub fn build_network(adjacency: &Array2<bool>, rho: &Array2<f64>) -> Result<Network> {
    let n = adjacency.nrows();
    if adjacency.ncols() != n || rho.nrows() != n || rho.ncols() != n {
        return Err(Error::DimensionMismatch {
            context: format!(
                "adjacency {}x{}, rho {}x{}",
                adjacency.nrows(),
                adjacency.ncols(),
                rho.nrows(),
                rho.ncols()
            ),
        });
    }
    for k in 0..n {
        if adjacency[(k, k)] {
            return Err(Error::SelfLoop { agent: k });
        }
        for l in (k + 1)..n {
            if adjacency[(k, l)] != adjacency[(l, k)] {
                return Err(Error::AsymmetricAdjacency { row: k, col: l });
            }
        }
    }
    let mut neighbors = vec![Vec::new(); n];
    let mut weights = vec![Vec::new(); n];
    for k in 0..n {
        for l in 0..n {
            if adjacency[(k, l)] {
                let w = rho[(k, l)];
                if !(w > 0.0) {
                    return Err(Error::NonpositiveLinkWeight {
                        from: k,
                        to: l,
                        value: w,
                    });
                }
                neighbors[k].push(l);
                weights[k].push(w);
            }
        }
    }
    finish_network(neighbors, weights)
}

/// Builds a network with the degree-normalized default
/// `rho_kl = 1 / card(N_k)`.
pub fn build_network_uniform(adjacency: &Array2<bool>) -> Result<Network> {
    let n = adjacency.nrows();
    let degrees: Vec<usize> = (0..n)
        .map(|k| (0..n).filter(|&l| adjacency[(k, l)]).count())
        .collect();
    let mut rho = Array2::<f64>::zeros((n, n));
    for k in 0..n {
        if degrees[k] == 0 {
            // leave zeros; build_network reports disconnection or the
            // nonpositive weight, whichever fires first
            continue;
        }
        for l in 0..n {
            if adjacency[(k, l)] {
                rho[(k, l)] = 1.0 / degrees[k] as f64;
            }
        }
    }
    build_network(adjacency, &rho)
}

/// Adjacency of the k-nearest-neighbor graph over points in the plane.
///
/// Each point selects its `k_neighbors` nearest peers by Euclidean
/// distance (ties broken by lower index) and the directed selections are
/// symmetrized by union: a link exists if either endpoint selected the
/// other.
pub fn knn_adjacency(coordinates: &[(f64, f64)], k_neighbors: usize) -> Result<Array2<bool>> {
    let n = coordinates.len();
    if k_neighbors == 0 || n <= k_neighbors {
        return Err(Error::TooFewAgents {
            agents: n,
            k_neighbors,
        });
    }
    for a in 0..n {
        for b in (a + 1)..n {
            if coordinates[a] == coordinates[b] {
                return Err(Error::DuplicateCoordinates { a, b });
            }
        }
    }
    let mut adjacency = Array2::from_elem((n, n), false);
    for k in 0..n {
        let mut by_distance: Vec<(f64, usize)> = (0..n)
            .filter(|&l| l != k)
            .map(|l| {
                let dx = coordinates[k].0 - coordinates[l].0;
                let dy = coordinates[k].1 - coordinates[l].1;
                (dx * dx + dy * dy, l)
            })
            .collect();
        by_distance.sort_by(|a, b| a.partial_cmp(b).expect("finite distances"));
        for &(_, l) in by_distance.iter().take(k_neighbors) {
            adjacency[(k, l)] = true;
            adjacency[(l, k)] = true;
        }
    }
    Ok(adjacency)
}

/// k-nearest-neighbor network with the default `rho_kl = 1 / card(N_k)`.
///
/// Degrees are taken after symmetrization, so an agent selected by many
/// peers spreads its weight over all of them.
pub fn knn_network(coordinates: &[(f64, f64)], k_neighbors: usize) -> Result<Network> {
    let adjacency = knn_adjacency(coordinates, k_neighbors)?;
    build_network_uniform(&adjacency)
}

/// Ring of `num_agents` agents with `rho_kl = 1/2` on every link.
pub fn ring_network(num_agents: usize) -> Result<Network> {
    let mut adjacency = Array2::from_elem((num_agents, num_agents), false);
    for k in 0..num_agents {
        let next = (k + 1) % num_agents;
        if next != k {
            adjacency[(k, next)] = true;
            adjacency[(next, k)] = true;
        }
    }
    build_network_uniform(&adjacency)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn line2(rho12: f64, rho21: f64) -> Network {
        let mut adjacency = Array2::from_elem((2, 2), false);
        adjacency[(0, 1)] = true;
        adjacency[(1, 0)] = true;
        let mut rho = Array2::zeros((2, 2));
        rho[(0, 1)] = rho12;
        rho[(1, 0)] = rho21;
        build_network(&adjacency, &rho).unwrap()
    }

    #[test]
    fn two_agent_symmetric_weights() {
        let net = line2(1.0, 1.0);
        assert_eq!(net.p_weight(0, 1), Some(1.0));
        assert_eq!(net.p_weight(1, 0), Some(1.0));
    }

    #[test]
    fn two_agent_asymmetric_rho_averages() {
        let net = line2(0.2, 0.6);
        assert_abs_diff_eq!(net.p_weight(0, 1).unwrap(), 0.4);
        assert_abs_diff_eq!(net.p_weight(1, 0).unwrap(), 0.4);
    }

    #[test]
    fn ring_of_twenty_has_half_weights() {
        let net = ring_network(20).unwrap();
        assert_eq!(net.num_links(), 20);
        for (_, _, p) in net.links() {
            assert_abs_diff_eq!(p, 0.5);
        }
        for k in 0..20 {
            assert_eq!(net.degree(k), 2);
        }
    }

    #[test]
    fn p_is_symmetric_on_every_link() {
        let coords: Vec<(f64, f64)> = (0..12)
            .map(|i| {
                let t = i as f64;
                ((t * 0.731).sin() * 3.0 + t * 0.1, (t * 1.137).cos() * 2.0)
            })
            .collect();
        let net = knn_network(&coords, 3).unwrap();
        for (k, l, _) in net.links() {
            assert_eq!(net.p_weight(k, l), net.p_weight(l, k));
        }
    }

    #[test]
    fn adjacency_round_trips() {
        let mut adjacency = Array2::from_elem((4, 4), false);
        for &(a, b) in &[(0, 1), (1, 2), (2, 3), (3, 0), (0, 2)] {
            adjacency[(a, b)] = true;
            adjacency[(b, a)] = true;
        }
        let net = build_network_uniform(&adjacency).unwrap();
        assert_eq!(net.adjacency(), adjacency);
    }

    #[test]
    fn rejects_asymmetric_adjacency() {
        let mut adjacency = Array2::from_elem((3, 3), false);
        adjacency[(0, 1)] = true; // missing (1, 0)
        adjacency[(1, 2)] = true;
        adjacency[(2, 1)] = true;
        let rho = Array2::from_elem((3, 3), 1.0);
        assert!(matches!(
            build_network(&adjacency, &rho),
            Err(Error::AsymmetricAdjacency { row: 0, col: 1 })
        ));
    }

    #[test]
    fn rejects_disconnected_graph_with_report() {
        let mut adjacency = Array2::from_elem((5, 5), false);
        for &(a, b) in &[(0, 1), (2, 3), (3, 4)] {
            adjacency[(a, b)] = true;
            adjacency[(b, a)] = true;
        }
        match build_network_uniform(&adjacency) {
            Err(Error::Disconnected { component_sizes }) => {
                assert_eq!(component_sizes, vec![2, 3]);
            }
            other => panic!("expected disconnection report, got {other:?}"),
        }
    }

    #[test]
    fn rejects_nonpositive_rho() {
        let mut adjacency = Array2::from_elem((2, 2), false);
        adjacency[(0, 1)] = true;
        adjacency[(1, 0)] = true;
        let mut rho = Array2::zeros((2, 2));
        rho[(0, 1)] = 0.0;
        rho[(1, 0)] = 1.0;
        assert!(matches!(
            build_network(&adjacency, &rho),
            Err(Error::NonpositiveLinkWeight { from: 0, to: 1, .. })
        ));
    }

    #[test]
    fn knn_collinear_points_form_path() {
        let coords = [(0.0, 0.0), (1.0, 0.0), (2.0, 0.0)];
        let net = knn_network(&coords, 1).unwrap();
        assert_eq!(net.neighbors(0), &[1]);
        assert_eq!(net.neighbors(1), &[0, 2]);
        assert_eq!(net.neighbors(2), &[1]);
    }

    #[test]
    fn knn_unit_square_is_four_cycle() {
        let coords = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)];
        let net = knn_network(&coords, 2).unwrap();
        for k in 0..4 {
            assert_eq!(net.degree(k), 2);
            // the diagonal peer is excluded
            assert!(!net.neighbors(k).contains(&((k + 2) % 4)));
        }
    }

    #[test]
    fn knn_rejects_duplicate_coordinates() {
        let coords = [(0.0, 0.0), (1.0, 0.0), (0.0, 0.0)];
        assert!(matches!(
            knn_network(&coords, 1),
            Err(Error::DuplicateCoordinates { a: 0, b: 2 })
        ));
    }

    #[test]
    fn knn_reports_disconnection() {
        // two far-apart pairs; k = 1 links within pairs only
        let coords = [(0.0, 0.0), (0.1, 0.0), (100.0, 0.0), (100.1, 0.0)];
        assert!(matches!(
            knn_network(&coords, 1),
            Err(Error::Disconnected { .. })
        ));
    }

    #[test]
    fn knn_139_stations_connect_at_four_neighbors() {
        // station-count setting: 139 scattered points, k = 4
        let coords: Vec<(f64, f64)> = (0..139)
            .map(|i| {
                let t = i as f64;
                (
                    (t * 0.6180339887).fract() * 60.0 - 30.0,
                    (t * 0.7548776662).fract() * 25.0 + 25.0,
                )
            })
            .collect();
        let net = knn_network(&coords, 4).unwrap();
        assert_eq!(net.num_agents(), 139);
        for k in 0..139 {
            assert!(net.degree(k) >= 4);
        }
    }

    #[test]
    fn knn_invariant_under_point_permutation() {
        let coords: Vec<(f64, f64)> = (0..10)
            .map(|i| {
                let t = i as f64;
                ((t * 1.313).sin() * 5.0, (t * 0.719).cos() * 5.0 + t * 0.01)
            })
            .collect();
        let net = knn_network(&coords, 2).unwrap();
        // reverse point order and relabel
        let reversed: Vec<(f64, f64)> = coords.iter().rev().copied().collect();
        let net_rev = knn_network(&reversed, 2).unwrap();
        let n = coords.len();
        let mut edges: Vec<(usize, usize)> = net.links().map(|(k, l, _)| (k, l)).collect();
        let mut edges_rev: Vec<(usize, usize)> = net_rev
            .links()
            .map(|(k, l, _)| {
                let (a, b) = (n - 1 - k, n - 1 - l);
                (a.min(b), a.max(b))
            })
            .collect();
        edges.sort_unstable();
        edges_rev.sort_unstable();
        assert_eq!(edges, edges_rev);
    }
}
