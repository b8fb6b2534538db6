//! Communication topologies for the consensus protocol.
//!
//! Nodes are labelled `0..n`. Every undirected edge `(i, j)` is stored once
//! with `i < j`, and each node carries a sorted neighbor list. Directed edges
//! `(i|j)` ("node `i`'s view of neighbor `j`") are laid out in CSR order, i.e.
//! sorted lexicographically, which is the canonical order used for every
//! per-directed-edge array in the crate.
//!
//! The oriented incidence convention is `A_ij = +1` for `i < j` and
//! `A_ji = -A_ij`.

use std::collections::VecDeque;
use std::fmt::Write as _;

use rand::Rng;

use crate::error::{Error, Result};

/// Undirected simple graph with precomputed directed-edge layout.
#[derive(Debug, Clone)]
pub struct Graph {
    n: usize,
    edges: Vec<(usize, usize)>,
    neighbors: Vec<Vec<usize>>,
    offsets: Vec<usize>,
    reverse: Vec<usize>,
    /// Sampled point positions for geometric graphs. Not part of equality.
    coords: Option<Vec<(f64, f64)>>,
}

impl PartialEq for Graph {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.edges == other.edges
    }
}

impl Eq for Graph {}

impl Graph {
    /// Builds a graph from an arbitrary list of undirected pairs.
    ///
    /// Pairs may be given in either orientation. Self-loops, duplicates and
    /// out-of-range ids are rejected. Connectivity is not required here; see
    /// [`is_connected`].
    pub fn from_edges(n: usize, pairs: &[(usize, usize)]) -> Result<Self> {
        if n < 2 {
            return Err(Error::invalid("n", format!("need at least 2 nodes, got {n}")));
        }
        let mut edges = Vec::with_capacity(pairs.len());
        for &(a, b) in pairs {
            if a >= n || b >= n {
                return Err(Error::invalid(
                    "edges",
                    format!("edge ({a}, {b}) out of range for {n} nodes"),
                ));
            }
            if a == b {
                return Err(Error::invalid("edges", format!("self-loop at node {a}")));
            }
            edges.push((a.min(b), a.max(b)));
        }
        edges.sort_unstable();
        if let Some(w) = edges.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::invalid(
                "edges",
                format!("duplicate edge ({}, {})", w[0].0, w[0].1),
            ));
        }

        let mut neighbors = vec![Vec::new(); n];
        for &(i, j) in &edges {
            neighbors[i].push(j);
            neighbors[j].push(i);
        }
        for list in &mut neighbors {
            list.sort_unstable();
        }

        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0);
        for list in &neighbors {
            offsets.push(offsets.last().unwrap() + list.len());
        }

        let mut graph = Graph {
            n,
            edges,
            neighbors,
            offsets,
            reverse: Vec::new(),
            coords: None,
        };
        graph.reverse = (0..graph.num_directed_edges())
            .map(|e| {
                let (i, j) = graph.directed_edge(e);
                graph.edge_index(j, i).expect("neighbor lists are symmetric")
            })
            .collect();
        Ok(graph)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Undirected edges, sorted, each with `i < j`.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.neighbors[i].len()
    }

    pub fn degrees(&self) -> Vec<usize> {
        self.neighbors.iter().map(Vec::len).collect()
    }

    /// Point positions, present only for random geometric graphs.
    pub fn coords(&self) -> Option<&[(f64, f64)]> {
        self.coords.as_deref()
    }

    /// Number of directed edges, `2|E|`.
    pub fn num_directed_edges(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    /// Index range of the directed edges `(i|j)` owned by node `i`, aligned
    /// with `neighbors(i)`.
    pub fn out_edges(&self, i: usize) -> std::ops::Range<usize> {
        self.offsets[i]..self.offsets[i + 1]
    }

    /// Index of directed edge `(i|j)`, if `j` is a neighbor of `i`.
    pub fn edge_index(&self, i: usize, j: usize) -> Option<usize> {
        self.neighbors
            .get(i)?
            .binary_search(&j)
            .ok()
            .map(|k| self.offsets[i] + k)
    }

    /// `(owner, neighbor)` of directed edge `e`.
    pub fn directed_edge(&self, e: usize) -> (usize, usize) {
        let i = self.offsets.partition_point(|&o| o <= e) - 1;
        (i, self.neighbors[i][e - self.offsets[i]])
    }

    /// Iterates directed edges `(e, i, j)` in canonical order.
    pub fn directed_edges(&self) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        (0..self.n).flat_map(move |i| {
            self.out_edges(i)
                .zip(&self.neighbors[i])
                .map(move |(e, &j)| (e, i, j))
        })
    }

    /// Index of the opposite direction `(j|i)` for directed edge `(i|j)`.
    pub fn reverse(&self, e: usize) -> usize {
        self.reverse[e]
    }

    /// Plain-text edge list: `n <count>` followed by one sorted `i j` per line.
    pub fn to_edge_list(&self) -> String {
        let mut out = format!("n {}\n", self.n);
        for (i, j) in &self.edges {
            let _ = writeln!(out, "{i} {j}");
        }
        out
    }

    pub fn parse_edge_list(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'));
        let header = lines
            .next()
            .ok_or_else(|| Error::parse("edge list", "empty input"))?;
        let n = match header.split_whitespace().collect::<Vec<_>>().as_slice() {
            ["n", count] => count
                .parse::<usize>()
                .map_err(|e| Error::parse("edge list header", e.to_string()))?,
            _ => {
                return Err(Error::parse(
                    "edge list header",
                    format!("expected `n <count>`, got `{header}`"),
                ))
            }
        };
        let mut pairs = Vec::new();
        for line in lines {
            let mut parts = line.split_whitespace();
            let mut next = || -> Result<usize> {
                parts
                    .next()
                    .ok_or_else(|| Error::parse("edge list", format!("short line `{line}`")))?
                    .parse()
                    .map_err(|_| Error::parse("edge list", format!("bad node id in `{line}`")))
            };
            let (a, b) = (next()?, next()?);
            if parts.next().is_some() {
                return Err(Error::parse("edge list", format!("trailing data in `{line}`")));
            }
            pairs.push((a, b));
        }
        Graph::from_edges(n, &pairs)
    }
}

/// Oriented incidence sign: `+1` if `i < j`, `-1` if `i > j`.
pub fn incidence_sign(i: usize, j: usize) -> Result<f64> {
    if i == j {
        return Err(Error::invalid("j", format!("incidence sign undefined for self-edge ({i}, {i})")));
    }
    Ok(sign(i, j))
}

#[inline]
pub(crate) fn sign(i: usize, j: usize) -> f64 {
    if i < j {
        1.0
    } else {
        -1.0
    }
}

/// Cycle `0 - 1 - ... - (n-1) - 0`.
pub fn ring(n: usize) -> Result<Graph> {
    if n < 3 {
        return Err(Error::invalid("n", format!("ring needs n >= 3, got {n}")));
    }
    let pairs: Vec<_> = (0..n).map(|i| (i, (i + 1) % n)).collect();
    Graph::from_edges(n, &pairs)
}

pub fn complete(n: usize) -> Result<Graph> {
    if n < 2 {
        return Err(Error::invalid("n", format!("complete graph needs n >= 2, got {n}")));
    }
    let pairs: Vec<_> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .collect();
    Graph::from_edges(n, &pairs)
}

/// True iff every node is reachable from node 0.
pub fn is_connected(g: &Graph) -> bool {
    let mut seen = vec![false; g.n];
    let mut queue = VecDeque::from([0]);
    seen[0] = true;
    let mut reached = 1;
    while let Some(i) = queue.pop_front() {
        for &j in g.neighbors(i) {
            if !seen[j] {
                seen[j] = true;
                reached += 1;
                queue.push_back(j);
            }
        }
    }
    reached == g.n
}

#[derive(Debug, Clone, PartialEq)]
pub struct RggParams {
    pub n: usize,
    /// Connection distance in the unit square.
    pub radius: f64,
    /// Whole-point-set resampling attempts before giving up.
    pub max_retries: usize,
}

impl RggParams {
    /// `sqrt(2 ln n / n)`, a little above the connectivity threshold.
    pub fn default_radius(n: usize) -> f64 {
        let n = n as f64;
        (2.0 * n.ln() / n).sqrt().min(std::f64::consts::SQRT_2)
    }

    pub fn new(n: usize) -> Self {
        RggParams {
            n,
            radius: Self::default_radius(n),
            max_retries: 100,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::invalid("n", format!("rgg needs n >= 2, got {}", self.n)));
        }
        if !(self.radius > 0.0 && self.radius <= std::f64::consts::SQRT_2) {
            return Err(Error::invalid(
                "radius",
                format!("must lie in (0, sqrt 2], got {}", self.radius),
            ));
        }
        if self.max_retries == 0 {
            return Err(Error::invalid("max_retries", "must be positive"));
        }
        Ok(())
    }
}

/// Random geometric graph in the unit square, resampled until connected.
pub fn rgg<R: Rng + ?Sized>(params: &RggParams, rng: &mut R) -> Result<Graph> {
    params.validate()?;
    for _ in 0..params.max_retries {
        let points: Vec<(f64, f64)> = (0..params.n)
            .map(|_| (rng.random::<f64>(), rng.random::<f64>()))
            .collect();
        let mut pairs = Vec::new();
        for i in 0..params.n {
            for j in i + 1..params.n {
                let (dx, dy) = (points[i].0 - points[j].0, points[i].1 - points[j].1);
                if (dx * dx + dy * dy).sqrt() <= params.radius {
                    pairs.push((i, j));
                }
            }
        }
        let mut g = Graph::from_edges(params.n, &pairs)?;
        if is_connected(&g) {
            g.coords = Some(points);
            return Ok(g);
        }
    }
    Err(Error::GenerationFailure {
        attempts: params.max_retries,
    })
}
