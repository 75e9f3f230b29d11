//! Directed multigraphs, arborescence counting and Eulerian walks.
//!
//! Arborescences are oriented toward the root: every non-root vertex keeps
//! exactly one outgoing tree edge. Their number is the determinant of the
//! out-degree Laplacian `L = D_out - M` with the root row and column removed,
//! evaluated exactly with fraction-free (Bareiss) elimination. Loops cancel in
//! `L`, so they never change the count.

use alloc::vec;
use alloc::vec::Vec;

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::relations::TypeDescriptor;

/// Default cap on the number of edges for the brute-force trajectory counter.
pub const DEFAULT_TRAJECTORY_EDGE_CAP: u64 = 16;

/// `mult[i][j]` parallel edges `i -> j`; loops allowed.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DirectedMultigraph {
    mult: Vec<Vec<u64>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DegreeProfile {
    pub outdeg: Vec<u64>,
    pub indeg: Vec<u64>,
}

impl DirectedMultigraph {
    pub fn empty(m: usize) -> DirectedMultigraph {
        DirectedMultigraph { mult: vec![vec![0; m]; m] }
    }

    pub fn from_matrix(mult: Vec<Vec<u64>>) -> Result<DirectedMultigraph> {
        let m = mult.len();
        if mult.iter().any(|row| row.len() != m) {
            return Err(Error::DimensionMismatch("multiplicity matrix is not square".into()));
        }
        Ok(DirectedMultigraph { mult })
    }

    pub fn m(&self) -> usize {
        self.mult.len()
    }

    pub fn matrix(&self) -> &[Vec<u64>] {
        &self.mult
    }

    pub fn multiplicity(&self, i: usize, j: usize) -> u64 {
        self.mult[i][j]
    }

    pub fn add_edges(&mut self, i: usize, j: usize, count: u64) {
        self.mult[i][j] += count;
    }

    pub fn edge_count(&self) -> u64 {
        self.mult.iter().flatten().sum()
    }

    pub fn degree_profile(&self) -> DegreeProfile {
        let m = self.m();
        let mut outdeg = vec![0; m];
        let mut indeg = vec![0; m];
        for (i, row) in self.mult.iter().enumerate() {
            for (j, &k) in row.iter().enumerate() {
                outdeg[i] += k;
                indeg[j] += k;
            }
        }
        DegreeProfile { outdeg, indeg }
    }

    /// Vertices incident to at least one edge.
    pub fn support(&self) -> Vec<usize> {
        let deg = self.degree_profile();
        (0..self.m()).filter(|&i| deg.outdeg[i] + deg.indeg[i] > 0).collect()
    }

    /// Weak connectivity of the edge support; isolated vertices are ignored.
    pub fn support_connected(&self) -> bool {
        let support = self.support();
        let Some(&first) = support.first() else {
            return true;
        };
        let m = self.m();
        let mut seen = vec![false; m];
        let mut stack = vec![first];
        seen[first] = true;
        while let Some(u) = stack.pop() {
            for v in 0..m {
                if !seen[v] && (self.mult[u][v] > 0 || self.mult[v][u] > 0) {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        support.iter().all(|&v| seen[v])
    }

    /// Induced subgraph on `vertices`, relabelled `0..vertices.len()`.
    pub fn induced(&self, vertices: &[usize]) -> DirectedMultigraph {
        let mult = vertices
            .iter()
            .map(|&i| vertices.iter().map(|&j| self.mult[i][j]).collect())
            .collect();
        DirectedMultigraph { mult }
    }
}

pub fn is_eulerian(g: &DirectedMultigraph) -> bool {
    let deg = g.degree_profile();
    deg.outdeg == deg.indeg && g.support_connected()
}

/// Number of spanning arborescences oriented toward `root`.
pub fn arborescence_count(g: &DirectedMultigraph, root: usize) -> BigUint {
    let m = g.m();
    assert!(root < m, "root {root} outside a graph on {m} vertices");
    let deg = g.degree_profile();
    let keep: Vec<usize> = (0..m).filter(|&i| i != root).collect();
    let minor: Vec<Vec<BigInt>> = keep
        .iter()
        .map(|&i| {
            keep.iter()
                .map(|&j| {
                    let mut entry = -BigInt::from(g.mult[i][j]);
                    if i == j {
                        entry += BigInt::from(deg.outdeg[i]);
                    }
                    entry
                })
                .collect()
        })
        .collect();
    let det = bareiss_determinant(minor);
    debug_assert!(!det.is_negative());
    det.to_biguint().unwrap_or_default()
}

/// Exact integer determinant by fraction-free Gaussian elimination.
pub fn bareiss_determinant(mut a: Vec<Vec<BigInt>>) -> BigInt {
    let n = a.len();
    if n == 0 {
        return BigInt::one();
    }
    let mut negate = false;
    let mut prev = BigInt::one();
    for k in 0..n - 1 {
        if a[k][k].is_zero() {
            match (k + 1..n).find(|&r| !a[r][k].is_zero()) {
                Some(r) => {
                    a.swap(k, r);
                    negate = !negate;
                }
                None => return BigInt::zero(),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let v = (&a[i][j] * &a[k][k] - &a[i][k] * &a[k][j]) / &prev;
                a[i][j] = v;
            }
        }
        prev = a[k][k].clone();
    }
    let det = a[n - 1][n - 1].clone();
    if negate {
        -det
    } else {
        det
    }
}

/// Counts distinct vertex sequences that start at `start` and use every edge
/// exactly once (parallel edges are indistinguishable).
pub fn eulerian_trajectory_count_bruteforce(
    g: &DirectedMultigraph,
    start: usize,
    edge_cap: u64,
) -> Result<BigUint> {
    let edges = g.edge_count();
    if edges > edge_cap {
        return Err(Error::CapExceeded { what: "trajectory search edges", cap: edge_cap });
    }
    let mut remaining = g.mult.clone();
    Ok(BigUint::from(count_walks(&mut remaining, start, edges)))
}

fn count_walks(remaining: &mut [Vec<u64>], at: usize, left: u64) -> u64 {
    if left == 0 {
        return 1;
    }
    let mut total = 0;
    for next in 0..remaining.len() {
        if remaining[at][next] > 0 {
            remaining[at][next] -= 1;
            total += count_walks(remaining, next, left - 1);
            remaining[at][next] += 1;
        }
    }
    total
}

/// One walk from `start` using every edge once, by Hierholzer's algorithm.
/// Takes the lowest-numbered available edge first, so the walk is canonical.
pub fn eulerian_walk(g: &DirectedMultigraph, start: usize) -> Option<Vec<usize>> {
    let mut remaining = g.mult.clone();
    let mut next_col = vec![0usize; g.m()];
    let mut stack = vec![start];
    let mut walk = Vec::with_capacity(g.edge_count() as usize + 1);
    while let Some(&u) = stack.last() {
        while next_col[u] < g.m() && remaining[u][next_col[u]] == 0 {
            next_col[u] += 1;
        }
        if next_col[u] < g.m() {
            let v = next_col[u];
            remaining[u][v] -= 1;
            stack.push(v);
        } else {
            walk.push(u);
            stack.pop();
        }
    }
    walk.reverse();
    let mut used = vec![vec![0u64; g.m()]; g.m()];
    for pair in walk.windows(2) {
        used[pair[0]][pair[1]] += 1;
    }
    (walk.len() as u64 == g.edge_count() + 1 && used == g.mult).then_some(walk)
}

/// The class multigraph of a Markov or `l`-Markov type.
///
/// For `l`-Markov types the vertices are the `d^l` words of length `l` in
/// mixed radix (first letter most significant).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransitionGraph {
    pub graph: DirectedMultigraph,
    pub start: usize,
    /// The vertex every realizing walk ends at.
    pub end: usize,
    /// `graph` plus one extra edge `end -> start`.
    pub augmented: DirectedMultigraph,
}

pub fn transition_graph(descriptor: &TypeDescriptor, n: usize) -> Result<TransitionGraph> {
    descriptor.check_consistent(n)?;
    let (graph, start) = match descriptor {
        TypeDescriptor::Markov { start, transitions } => {
            (DirectedMultigraph::from_matrix(transitions.clone())?, *start)
        }
        TypeDescriptor::LMarkov { ell, d, initial, counts } => {
            let nodes = d.pow(*ell as u32);
            let mut g = DirectedMultigraph::empty(nodes);
            for (gram, &c) in counts.iter().enumerate() {
                if c > 0 {
                    g.add_edges(gram / d, gram % nodes, c);
                }
            }
            let start = initial.iter().fold(0, |acc, &l| acc * d + l);
            (g, start)
        }
        _ => {
            return Err(Error::InconsistentDescriptor(
                "transition graphs exist only for Markov and l-Markov types".into(),
            ))
        }
    };
    let deg = graph.degree_profile();
    let mut surplus = Vec::new();
    let mut deficit = Vec::new();
    for i in 0..graph.m() {
        match deg.outdeg[i] as i128 - deg.indeg[i] as i128 {
            0 => {}
            1 => surplus.push(i),
            -1 => deficit.push(i),
            _ => return Err(Error::NoValidEnd),
        }
    }
    let end = match (surplus.as_slice(), deficit.as_slice()) {
        ([], []) => start,
        ([s], [w]) if *s == start => *w,
        _ => return Err(Error::NoValidEnd),
    };
    let mut augmented = graph.clone();
    augmented.add_edges(end, start, 1);
    Ok(TransitionGraph { graph, start, end, augmented })
}
