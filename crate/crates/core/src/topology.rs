//! Network graphs: tandem lines, grids and arbitrary edge lists.
//!
//! Nodes are numbered from 1. Grid node (i, j) (1-based row, column) has id
//! `(i - 1) * s + j`, so a 2x3 grid reads
//!
//! ```text
//! 1 - 2 - 3
//! |   |   |
//! 4 - 5 - 6
//! ```

use std::collections::{BTreeSet, VecDeque};
use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};

/// A use of an undirected edge in one direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct DirectedLink {
    pub from: usize,
    pub to: usize,
}

impl DirectedLink {
    pub fn new(from: usize, to: usize) -> Self {
        DirectedLink { from, to }
    }
}

impl fmt::Display for DirectedLink {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}->{}", self.from, self.to)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Shape {
    Tandem { n: usize },
    Grid { rows: usize, cols: usize },
    Custom { n: usize },
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Shape::Tandem { n } => write!(f, "tandem {n}"),
            Shape::Grid { rows, cols } => write!(f, "grid {rows}x{cols}"),
            Shape::Custom { n } => write!(f, "custom {n}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Topology {
    n: usize,
    edges: Vec<(usize, usize)>,
    adj: Vec<Vec<usize>>,
    shape: Shape,
}

impl Topology {
    /// Arbitrary connected simple graph on nodes 1..=n.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        Self::build(n, edges, Shape::Custom { n })
    }

    fn build(n: usize, edges: &[(usize, usize)], shape: Shape) -> Result<Self> {
        if n == 0 {
            return Err(Error::Topology("empty graph".into()));
        }
        let mut set = BTreeSet::new();
        for &(u, v) in edges {
            if u == 0 || v == 0 || u > n || v > n {
                return Err(Error::Topology(format!("edge {u}-{v} outside nodes 1..={n}")));
            }
            if u == v {
                return Err(Error::Topology(format!("self-loop at {u}")));
            }
            if !set.insert((u.min(v), u.max(v))) {
                return Err(Error::Topology(format!("duplicate edge {u}-{v}")));
            }
        }
        let mut adj = vec![Vec::new(); n + 1];
        for &(u, v) in &set {
            adj[u].push(v);
            adj[v].push(u);
        }
        for a in &mut adj {
            a.sort_unstable();
        }
        let t = Topology { n, edges: set.into_iter().collect(), adj, shape };
        if t.distances(1).iter().skip(1).any(|d| d.is_none()) {
            return Err(Error::Topology("graph is not connected".into()));
        }
        Ok(t)
    }

    pub fn tandem(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::Topology(format!("tandem needs n >= 2, got {n}")));
        }
        let edges: Vec<_> = (1..n).map(|i| (i, i + 1)).collect();
        Self::build(n, &edges, Shape::Tandem { n })
    }

    pub fn grid(r: usize, s: usize) -> Result<Self> {
        if r == 0 || s == 0 || r * s < 2 {
            return Err(Error::Topology(format!("degenerate grid {r}x{s}")));
        }
        let id = |i: usize, j: usize| (i - 1) * s + j;
        let mut edges = Vec::new();
        for i in 1..=r {
            for j in 1..=s {
                if j < s {
                    edges.push((id(i, j), id(i, j + 1)));
                }
                if i < r {
                    edges.push((id(i, j), id(i + 1, j)));
                }
            }
        }
        Self::build(r * s, &edges, Shape::Grid { rows: r, cols: s })
    }

    /// Parse `u v` pairs, one per line; `#` starts a comment.
    pub fn parse_edge_list(text: &str) -> Result<Self> {
        let mut edges = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let nums: Vec<&str> = line.split_whitespace().collect();
            let parse = |s: &str| {
                s.parse::<usize>()
                    .map_err(|_| Error::Topology(format!("line {}: bad node id {s:?}", lineno + 1)))
            };
            if nums.len() != 2 {
                return Err(Error::Topology(format!("line {}: expected `u v`", lineno + 1)));
            }
            edges.push((parse(nums[0])?, parse(nums[1])?));
        }
        let n = edges.iter().map(|&(u, v)| u.max(v)).max().unwrap_or(0);
        Self::from_edges(n, &edges)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn nodes(&self) -> impl Iterator<Item = usize> {
        1..=self.n
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn neighbors(&self, u: usize) -> &[usize] {
        &self.adj[u]
    }

    pub fn contains(&self, u: usize) -> bool {
        (1..=self.n).contains(&u)
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.contains(u) && self.adj[u].binary_search(&v).is_ok()
    }

    /// Both directions of every edge, sorted.
    pub fn directed_links(&self) -> Vec<DirectedLink> {
        let mut out: Vec<_> = self
            .edges
            .iter()
            .flat_map(|&(u, v)| [DirectedLink::new(u, v), DirectedLink::new(v, u)])
            .collect();
        out.sort();
        out
    }

    /// Grid coordinates (row, col) of a node, for grid topologies.
    pub fn coords(&self, u: usize) -> Option<(usize, usize)> {
        match self.shape {
            Shape::Grid { cols, .. } if self.contains(u) => Some(((u - 1) / cols + 1, (u - 1) % cols + 1)),
            _ => None,
        }
    }

    pub fn node_at(&self, i: usize, j: usize) -> Option<usize> {
        match self.shape {
            Shape::Grid { rows, cols } if (1..=rows).contains(&i) && (1..=cols).contains(&j) => {
                Some((i - 1) * cols + j)
            }
            _ => None,
        }
    }

    /// BFS distances from `src`, indexed by node id (index 0 unused).
    pub fn distances(&self, src: usize) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.n + 1];
        if !self.contains(src) {
            return dist;
        }
        dist[src] = Some(0);
        let mut queue = VecDeque::from([src]);
        while let Some(u) = queue.pop_front() {
            let du = dist[u].unwrap();
            for &v in &self.adj[u] {
                if dist[v].is_none() {
                    dist[v] = Some(du + 1);
                    queue.push_back(v);
                }
            }
        }
        dist
    }

    pub fn hop_distance(&self, a: usize, b: usize) -> Result<usize> {
        for x in [a, b] {
            if !self.contains(x) {
                return Err(Error::NoSuchNode(x));
            }
        }
        self.distances(a)[b].ok_or_else(|| Error::Topology(format!("{b} unreachable from {a}")))
    }

    /// Shortest path from `a` to `b`, always stepping to the lowest-numbered
    /// neighbour that is one hop closer to `b`.
    pub fn shortest_path(&self, a: usize, b: usize) -> Result<Vec<usize>> {
        let d = self.distances(b);
        let mut path = vec![a];
        let mut cur = a;
        let mut left = d[a].ok_or(Error::NoSuchNode(a))?;
        while left > 0 {
            cur = *self.adj[cur]
                .iter()
                .find(|&&v| d[v] == Some(left - 1))
                .expect("BFS layers are consistent");
            path.push(cur);
            left -= 1;
        }
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn tandem_shapes() {
        assert_eq!(Topology::tandem(3).unwrap().edges(), &[(1, 2), (2, 3)]);
        assert_eq!(Topology::tandem(2).unwrap().edges(), &[(1, 2)]);
        let t = Topology::tandem(6).unwrap();
        assert_eq!(t.edges().len(), 5);
        let deg: Vec<usize> = t.nodes().map(|u| t.neighbors(u).len()).collect();
        assert_eq!(deg, vec![1, 2, 2, 2, 2, 1]);
        assert!(Topology::tandem(1).is_err());
        assert_eq!(t.hop_distance(1, 6).unwrap(), 5);
        assert_eq!(Topology::tandem(5).unwrap().hop_distance(1, 5).unwrap(), 4);
    }

    #[test]
    fn grid_2x3_layout() {
        let g = Topology::grid(2, 3).unwrap();
        assert_eq!(g.edges(), &[(1, 2), (1, 4), (2, 3), (2, 5), (3, 6), (4, 5), (5, 6)]);
        assert_eq!(g.coords(5), Some((2, 2)));
        assert_eq!(g.node_at(1, 3), Some(3));
        assert_eq!(g.hop_distance(1, 6).unwrap(), 3);
    }

    #[test]
    fn grid_edge_counts() {
        for (r, s) in [(4, 4), (2, 2), (3, 4), (5, 4), (1, 7)] {
            assert_eq!(Topology::grid(r, s).unwrap().edges().len(), 2 * r * s - r - s);
        }
        assert!(Topology::grid(1, 1).is_err());
        assert!(Topology::grid(0, 3).is_err());
    }

    #[test]
    fn one_row_grid_is_tandem() {
        for n in 2..10 {
            assert_eq!(Topology::grid(1, n).unwrap().edges(), Topology::tandem(n).unwrap().edges());
        }
    }

    #[test]
    fn edge_list_parsing() {
        let t = Topology::parse_edge_list("# triangle\n1 2\n2 3\n\n3 1\n").unwrap();
        assert_eq!(t.n(), 3);
        assert_eq!(t.edges().len(), 3);
        assert!(Topology::parse_edge_list("1 2\n3 4\n").is_err()); // disconnected
        assert!(Topology::parse_edge_list("1 1\n").is_err());
        assert!(Topology::parse_edge_list("1 2\n2 1\n").is_err());
        assert!(Topology::parse_edge_list("1 x\n").is_err());
    }

    #[test]
    fn shortest_path_prefers_low_ids() {
        let g = Topology::grid(3, 3).unwrap();
        assert_eq!(g.shortest_path(9, 1).unwrap(), vec![9, 6, 3, 2, 1]);
        assert_eq!(g.shortest_path(5, 5).unwrap(), vec![5]);
    }

    fn connected_graph() -> impl Strategy<Value = Topology> {
        (2usize..12)
            .prop_flat_map(|n| {
                let tree = prop::collection::vec(any::<prop::sample::Index>(), n - 1);
                let extra = prop::collection::vec((1..=n, 1..=n), 0..n);
                (Just(n), tree, extra)
            })
            .prop_map(|(n, tree, extra)| {
                let mut edges = BTreeSet::new();
                for (i, ix) in tree.iter().enumerate() {
                    let v = i + 2;
                    edges.insert((ix.index(v - 1) + 1, v));
                }
                for (u, v) in extra {
                    if u != v {
                        edges.insert((u.min(v), u.max(v)));
                    }
                }
                let edges: Vec<_> = edges.into_iter().collect();
                Topology::from_edges(n, &edges).unwrap()
            })
    }

    proptest! {
        #[test]
        fn hop_distance_is_a_metric(t in connected_graph()) {
            let n = t.n();
            let d: Vec<Vec<usize>> = (0..=n)
                .map(|a| if a == 0 { vec![] } else { t.distances(a).iter().map(|x| x.unwrap_or(0)).collect() })
                .collect();
            for a in 1..=n {
                for b in 1..=n {
                    prop_assert_eq!(d[a][b], d[b][a]);
                    prop_assert_eq!(d[a][b] == 0, a == b);
                    for c in 1..=n {
                        prop_assert!(d[a][c] <= d[a][b] + d[b][c]);
                    }
                }
            }
        }
    }
}
