use serde::{Deserialize, Serialize};

/// Reachability, the fog graph, its two-hop conflict graph and a proper
/// coloring of the conflict graph. All neighbor lists are sorted ascending.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Topology {
    /// `coverage[n]`: sensors within radius of fog node `n`.
    pub coverage: Vec<Vec<usize>>,
    /// `reachable[m]`: fog nodes that sensor `m` can reach.
    pub reachable: Vec<Vec<usize>>,
    /// Fog graph adjacency (no self loops).
    pub fog_adjacency: Vec<Vec<usize>>,
    /// One-hop neighborhood, including the node itself.
    pub neighborhood: Vec<Vec<usize>>,
    /// Markov blanket: fog nodes at distance 1 or 2 on the fog graph.
    pub blanket: Vec<Vec<usize>>,
    /// Sensors covered by any node of the one-hop neighborhood.
    pub local_sensors: Vec<Vec<usize>>,
    pub coloring: Vec<usize>,
    pub num_colors: usize,
    /// Fog nodes grouped by color, each group ascending.
    pub colorsets: Vec<Vec<usize>>,
}

impl Topology {
    /// Builds everything from the fog-node/sensor distance relation.
    #[allow(clippy::needless_range_loop)]
    pub fn build(
        fog_count: usize,
        sensor_count: usize,
        within_reach: impl Fn(usize, usize) -> bool,
    ) -> Topology {
        let mut coverage = vec![Vec::new(); fog_count];
        let mut reachable = vec![Vec::new(); sensor_count];
        for m in 0..sensor_count {
            for n in 0..fog_count {
                if within_reach(n, m) {
                    coverage[n].push(m);
                    reachable[m].push(n);
                }
            }
        }

        let mut adj = vec![vec![false; fog_count]; fog_count];
        for nodes in &reachable {
            for (x, &i) in nodes.iter().enumerate() {
                for &j in &nodes[x + 1..] {
                    adj[i][j] = true;
                    adj[j][i] = true;
                }
            }
        }
        let fog_adjacency: Vec<Vec<usize>> = adj
            .iter()
            .map(|row| (0..fog_count).filter(|&j| row[j]).collect())
            .collect();
        let neighborhood: Vec<Vec<usize>> = (0..fog_count)
            .map(|i| {
                let mut v = fog_adjacency[i].clone();
                v.push(i);
                v.sort_unstable();
                v
            })
            .collect();

        let blanket: Vec<Vec<usize>> = (0..fog_count)
            .map(|i| {
                let mut mark = vec![false; fog_count];
                for &j in &fog_adjacency[i] {
                    mark[j] = true;
                    for &k in &fog_adjacency[j] {
                        mark[k] = true;
                    }
                }
                mark[i] = false;
                (0..fog_count).filter(|&j| mark[j]).collect()
            })
            .collect();

        let local_sensors = neighborhood
            .iter()
            .map(|hood| {
                let mut mark = vec![false; sensor_count];
                for &k in hood {
                    for &m in &coverage[k] {
                        mark[m] = true;
                    }
                }
                (0..sensor_count).filter(|&m| mark[m]).collect()
            })
            .collect();

        let (coloring, num_colors) = greedy_coloring(&blanket);
        let mut colorsets = vec![Vec::new(); num_colors];
        for (n, &c) in coloring.iter().enumerate() {
            colorsets[c].push(n);
        }

        Topology {
            coverage,
            reachable,
            fog_adjacency,
            neighborhood,
            blanket,
            local_sensors,
            coloring,
            num_colors,
            colorsets,
        }
    }

    pub fn fog_count(&self) -> usize {
        self.coverage.len()
    }

    pub fn sensor_count(&self) -> usize {
        self.reachable.len()
    }

    pub fn fog_edge_count(&self) -> usize {
        self.fog_adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn conflict_edge_count(&self) -> usize {
        self.blanket.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// Returns the first conflict edge whose endpoints share a color.
    pub fn coloring_violation(&self) -> Option<(usize, usize)> {
        self.blanket.iter().enumerate().find_map(|(i, nbrs)| {
            nbrs.iter()
                .find(|&&j| self.coloring[i] == self.coloring[j])
                .map(|&j| (i, j))
        })
    }
}

/// Greedy coloring: vertices in descending degree order, ties by lower id,
/// each taking the smallest color unused by its colored neighbors.
pub fn greedy_coloring(adjacency: &[Vec<usize>]) -> (Vec<usize>, usize) {
    let n = adjacency.len();
    if n == 0 {
        return (Vec::new(), 0);
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| adjacency[b].len().cmp(&adjacency[a].len()).then(a.cmp(&b)));

    const UNCOLORED: usize = usize::MAX;
    let mut colors = vec![UNCOLORED; n];
    let mut used = vec![false; n + 1];
    let mut num_colors = 0;
    for v in order {
        for &u in &adjacency[v] {
            if colors[u] != UNCOLORED {
                used[colors[u]] = true;
            }
        }
        let c = used.iter().position(|&taken| !taken).unwrap();
        colors[v] = c;
        num_colors = num_colors.max(c + 1);
        for &u in &adjacency[v] {
            if colors[u] != UNCOLORED {
                used[colors[u]] = false;
            }
        }
    }
    (colors, num_colors)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bfs_distances(adj: &[Vec<usize>], src: usize) -> Vec<usize> {
        let mut dist = vec![usize::MAX; adj.len()];
        dist[src] = 0;
        let mut queue = std::collections::VecDeque::from([src]);
        while let Some(u) = queue.pop_front() {
            for &v in &adj[u] {
                if dist[v] == usize::MAX {
                    dist[v] = dist[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        dist
    }

    #[test]
    fn path_of_three_has_complete_conflict_graph() {
        // sensor 0 reaches A,B; sensor 1 reaches B,C
        let links = [(0, 0), (1, 0), (1, 1), (2, 1)];
        let topo = Topology::build(3, 2, |n, m| links.contains(&(n, m)));
        assert_eq!(topo.fog_adjacency, vec![vec![1], vec![0, 2], vec![1]]);
        assert_eq!(topo.blanket, vec![vec![1, 2], vec![0, 2], vec![0, 1]]);
        assert_eq!(topo.num_colors, 3);
        assert!(topo.coloring_violation().is_none());
    }

    #[test]
    fn single_node_uses_one_color() {
        let topo = Topology::build(1, 1, |_, _| true);
        assert_eq!(topo.fog_edge_count(), 0);
        assert_eq!(topo.num_colors, 1);
        assert_eq!(topo.neighborhood, vec![vec![0]]);
    }

    #[test]
    fn blanket_is_exactly_two_hop_ball() {
        // path 0-1-2-3-4
        let topo = Topology::build(5, 4, |n, m| n == m || n == m + 1);
        for i in 0..5 {
            let dist = bfs_distances(&topo.fog_adjacency, i);
            let expected: Vec<usize> = (0..5).filter(|&j| j != i && dist[j] <= 2).collect();
            assert_eq!(topo.blanket[i], expected);
        }
        assert!(topo.num_colors < 5);
        assert!(topo.coloring_violation().is_none());
    }

    #[test]
    fn greedy_prefers_high_degree_first() {
        // star centered at 2
        let adj = vec![vec![2], vec![2], vec![0, 1, 3], vec![2]];
        let (colors, k) = greedy_coloring(&adj);
        assert_eq!(k, 2);
        assert_eq!(colors[2], 0);
        assert_eq!(&colors[..2], &[1, 1]);
    }
}
