//! Weighted directed communication graphs.
//!
//! Edge convention: `weight(i, j) > 0` means agent `i` receives information
//! from agent `j` (edge `j → i`). Indices are 0-based in the API and 1-based
//! in the on-disk format.

use std::collections::VecDeque;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix};

#[derive(Debug, Clone, PartialEq)]
pub struct CommGraph {
    weights: Matrix,
    roots: Vec<bool>,
}

/// Laplacian `L` and expanded Laplacian `L̄ = L + diag(ι)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LaplacianPair {
    pub laplacian: Matrix,
    pub expanded: Matrix,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GraphKind {
    Path,
    Star,
    Random,
}

impl CommGraph {
    /// Edgeless graph on `n` nodes with no roots.
    pub fn new(n: usize) -> Self {
        CommGraph {
            weights: Matrix::zeros(n, n),
            roots: vec![false; n],
        }
    }

    /// Builds a graph from a dense adjacency matrix and root flags, checking
    /// the no-self-loop and nonnegativity invariants.
    pub fn from_parts(weights: Matrix, roots: Vec<bool>) -> Result<Self> {
        let g = CommGraph { weights, roots };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        let n = linalg::ensure_square(&self.weights)?;
        if self.roots.len() != n {
            return Err(Error::Graph(format!(
                "{} root flags for {n} nodes",
                self.roots.len()
            )));
        }
        for i in 0..n {
            if self.weights[(i, i)] != 0.0 {
                return Err(Error::Graph(format!("self-loop at node {}", i + 1)));
            }
            for j in 0..n {
                let w = self.weights[(i, j)];
                if !w.is_finite() || w < 0.0 {
                    return Err(Error::Graph(format!(
                        "invalid weight {w} on edge {} -> {}",
                        j + 1,
                        i + 1
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.roots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.roots.is_empty()
    }

    pub fn weights(&self) -> &Matrix {
        &self.weights
    }

    pub fn weight(&self, to: usize, from: usize) -> f64 {
        self.weights[(to, from)]
    }

    pub fn roots(&self) -> &[bool] {
        &self.roots
    }

    pub fn is_root(&self, i: usize) -> bool {
        self.roots[i]
    }

    pub fn root_indices(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.roots[i]).collect()
    }

    /// Adds (or overwrites) the edge `from → to`.
    pub fn set_edge(&mut self, from: usize, to: usize, weight: f64) -> Result<()> {
        let n = self.len();
        if from >= n || to >= n {
            return Err(Error::Graph(format!(
                "edge {} -> {} out of range for {n} nodes",
                from + 1,
                to + 1
            )));
        }
        if from == to {
            return Err(Error::Graph(format!("self-loop at node {}", from + 1)));
        }
        if !weight.is_finite() || weight < 0.0 {
            return Err(Error::Graph(format!("invalid weight {weight}")));
        }
        self.weights[(to, from)] = weight;
        Ok(())
    }

    pub fn set_root(&mut self, i: usize, is_root: bool) {
        self.roots[i] = is_root;
    }

    /// Edges as `(from, to, weight)`, ordered by `to` then `from`.
    pub fn edges(&self) -> Vec<(usize, usize, f64)> {
        let n = self.len();
        let mut out = Vec::new();
        for to in 0..n {
            for from in 0..n {
                let w = self.weights[(to, from)];
                if w > 0.0 {
                    out.push((from, to, w));
                }
            }
        }
        out
    }

    /// Incoming neighbours of every node as `(from, weight)` lists.
    pub fn in_neighbors(&self) -> Vec<Vec<(usize, f64)>> {
        let n = self.len();
        (0..n)
            .map(|i| {
                (0..n)
                    .filter(|&j| self.weights[(i, j)] > 0.0)
                    .map(|j| (j, self.weights[(i, j)]))
                    .collect()
            })
            .collect()
    }

    pub fn laplacian(&self) -> Result<LaplacianPair> {
        self.validate()?;
        let n = self.len();
        let mut l = -self.weights.clone();
        for i in 0..n {
            l[(i, i)] = self.weights.row(i).iter().sum();
        }
        let mut expanded = l.clone();
        for i in 0..n {
            if self.roots[i] {
                expanded[(i, i)] += 1.0;
            }
        }
        Ok(LaplacianPair {
            laplacian: l,
            expanded,
        })
    }

    /// Every node reachable along edges from some root node.
    pub fn check_rootset(&self) -> bool {
        let n = self.len();
        let mut seen = self.roots.clone();
        let mut queue: VecDeque<usize> = self.root_indices().into();
        while let Some(j) = queue.pop_front() {
            for i in 0..n {
                if !seen[i] && self.weights[(i, j)] > 0.0 {
                    seen[i] = true;
                    queue.push_back(i);
                }
            }
        }
        n > 0 && seen.into_iter().all(|s| s)
    }

    /// True iff every eigenvalue of `L̄` has real part above `tol`.
    pub fn expanded_spectrum_check(&self, tol: f64) -> bool {
        self.laplacian()
            .and_then(|lp| linalg::eigenvalues(&lp.expanded))
            .map(|s| s.min_real() > tol)
            .unwrap_or(false)
    }

    /// Directed path `1 → 2 → … → n` with unit weights.
    pub fn path(n: usize, roots: &[usize]) -> Result<Self> {
        let mut g = Self::with_roots(n, roots)?;
        for i in 1..n {
            g.set_edge(i - 1, i, 1.0)?;
        }
        g.require_rootset()
    }

    /// Star with centre node 1: edges `1 → i` for `i = 2..n`.
    pub fn star(n: usize, roots: &[usize]) -> Result<Self> {
        let mut g = Self::with_roots(n, roots)?;
        for i in 1..n {
            g.set_edge(0, i, 1.0)?;
        }
        g.require_rootset()
    }

    /// Seeded random graph containing a directed forest rooted in `roots`
    /// plus sparse extra edges (cycles allowed). Weights are dyadic
    /// rationals in `[0.5, 2]`, so Laplacian row sums are exact.
    pub fn random(n: usize, roots: &[usize], seed: u64) -> Result<Self> {
        let mut g = Self::with_roots(n, roots)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let weight = |rng: &mut ChaCha8Rng| rng.gen_range(128..=512) as f64 / 256.0;

        let mut order: Vec<usize> = g.root_indices();
        let mut rest: Vec<usize> = (0..n).filter(|&i| !g.roots[i]).collect();
        rest.shuffle(&mut rng);
        order.extend(rest);
        for (pos, &node) in order.iter().enumerate() {
            if g.roots[node] {
                continue;
            }
            let parent = order[rng.gen_range(0..pos)];
            let w = weight(&mut rng);
            g.set_edge(parent, node, w)?;
        }

        let p_extra = if n > 1 { (1.5 / n as f64).min(0.5) } else { 0.0 };
        for to in 0..n {
            for from in 0..n {
                if to != from && g.weights[(to, from)] == 0.0 && rng.gen_bool(p_extra) {
                    let w = weight(&mut rng);
                    g.set_edge(from, to, w)?;
                }
            }
        }
        g.require_rootset()
    }

    pub fn generate(kind: GraphKind, n: usize, roots: &[usize], seed: u64) -> Result<Self> {
        match kind {
            GraphKind::Path => Self::path(n, roots),
            GraphKind::Star => Self::star(n, roots),
            GraphKind::Random => Self::random(n, roots, seed),
        }
    }

    /// Three-node directed path rooted at node 1.
    pub fn example_a() -> Self {
        Self::path(3, &[0]).expect("static graph")
    }

    /// Ten-node tree: path 1→…→7 plus 3→8, 8→9, 5→10, rooted at node 1.
    pub fn example_b() -> Self {
        let mut g = Self::with_roots(10, &[0]).expect("static graph");
        for i in 1..7 {
            g.set_edge(i - 1, i, 1.0).expect("static graph");
        }
        for (from, to) in [(2, 7), (7, 8), (4, 9)] {
            g.set_edge(from, to, 1.0).expect("static graph");
        }
        g
    }

    fn with_roots(n: usize, roots: &[usize]) -> Result<Self> {
        if n == 0 {
            return Err(Error::Graph("graph needs at least one node".into()));
        }
        if roots.is_empty() {
            return Err(Error::Graph("root set must be nonempty".into()));
        }
        let mut g = Self::new(n);
        for &r in roots {
            if r >= n {
                return Err(Error::Graph(format!(
                    "root {} out of range for {n} nodes",
                    r + 1
                )));
            }
            g.roots[r] = true;
        }
        Ok(g)
    }

    fn require_rootset(self) -> Result<Self> {
        if self.check_rootset() {
            Ok(self)
        } else {
            Err(Error::Graph(
                "some node is not reachable from the root set".into(),
            ))
        }
    }

    pub fn to_file(&self) -> GraphFile {
        GraphFile {
            n: self.len(),
            roots: self.root_indices().into_iter().map(|r| r + 1).collect(),
            edges: self
                .edges()
                .into_iter()
                .map(|(from, to, weight)| EdgeEntry {
                    from: from + 1,
                    to: to + 1,
                    weight,
                })
                .collect(),
        }
    }

    /// Canonical TOML text of the graph file.
    pub fn serialize(&self) -> String {
        toml::to_string(&self.to_file()).expect("graph file is always serializable")
    }

    pub fn parse(text: &str) -> Result<Self> {
        let file: GraphFile = toml::from_str(text).map_err(|e| {
            let line = e
                .span()
                .map(|s| text[..s.start.min(text.len())].matches('\n').count() + 1)
                .unwrap_or(0);
            Error::GraphParse {
                line,
                msg: e.message().to_string(),
            }
        })?;
        Self::try_from(file)
    }
}

/// On-disk graph schema. Node indices are 1-based.
///
/// ```toml
/// n = 3
/// roots = [1]
///
/// [[edges]]
/// from = 1
/// to = 2
/// weight = 1.0
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphFile {
    pub n: usize,
    pub roots: Vec<usize>,
    #[serde(default)]
    pub edges: Vec<EdgeEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeEntry {
    pub from: usize,
    pub to: usize,
    #[serde(default = "unit_weight")]
    pub weight: f64,
}

fn unit_weight() -> f64 {
    1.0
}

impl TryFrom<GraphFile> for CommGraph {
    type Error = Error;

    fn try_from(file: GraphFile) -> Result<Self> {
        let n = file.n;
        let field = |msg: String| Error::GraphParse { line: 0, msg };
        let mut g = CommGraph::new(n);
        for (k, &r) in file.roots.iter().enumerate() {
            if r == 0 || r > n {
                return Err(field(format!("roots[{k}] = {r} outside 1..={n}")));
            }
            g.roots[r - 1] = true;
        }
        for (k, e) in file.edges.iter().enumerate() {
            if e.from == 0 || e.from > n || e.to == 0 || e.to > n {
                return Err(field(format!(
                    "edges[{k}]: {} -> {} outside 1..={n}",
                    e.from, e.to
                )));
            }
            if e.from == e.to {
                return Err(field(format!("edges[{k}]: self-loop at node {}", e.from)));
            }
            if !e.weight.is_finite() || e.weight < 0.0 {
                return Err(field(format!("edges[{k}]: invalid weight {}", e.weight)));
            }
            g.weights[(e.to - 1, e.from - 1)] = e.weight;
        }
        Ok(g)
    }
}
