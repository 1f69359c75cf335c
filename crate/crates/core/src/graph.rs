//! Undirected graph storage and the symmetric GCN normalization
//! `D^{-1/2} (A + I) D^{-1/2}`.

use crate::numerics::{DenseMatrix, ShapeError};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GraphError {
    #[error("edge ({u}, {v}) references a node outside 0..{num_nodes}")]
    NodeOutOfRange { u: usize, v: usize, num_nodes: usize },
    #[error("self-loop on node {0} in raw edge list")]
    SelfLoop(usize),
    #[error(transparent)]
    Shape(#[from] ShapeError),
}

/// Undirected edges in canonical form: each pair stored once with `u < v`,
/// sorted, without duplicates.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct EdgeList {
    edges: Vec<(usize, usize)>,
}

impl EdgeList {
    /// Canonicalizes arbitrary pairs: orders each pair, sorts, and collapses
    /// duplicates. Self-loops are rejected.
    pub fn from_pairs<I>(pairs: I) -> Result<Self, GraphError>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut edges = Vec::new();
        for (u, v) in pairs {
            if u == v {
                return Err(GraphError::SelfLoop(u));
            }
            edges.push((u.min(v), u.max(v)));
        }
        edges.sort_unstable();
        edges.dedup();
        Ok(Self { edges })
    }

    /// Wraps pairs that are already canonical (sorted, `u < v`, unique).
    pub(crate) fn from_canonical(edges: Vec<(usize, usize)>) -> Self {
        debug_assert!(edges.windows(2).all(|w| w[0] < w[1]));
        debug_assert!(edges.iter().all(|&(u, v)| u < v));
        Self { edges }
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn as_slice(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn contains(&self, u: usize, v: usize) -> bool {
        self.edges.binary_search(&(u.min(v), u.max(v))).is_ok()
    }

    pub fn check_range(&self, num_nodes: usize) -> Result<(), GraphError> {
        match self.edges.iter().find(|&&(_, v)| v >= num_nodes) {
            Some(&(u, v)) => Err(GraphError::NodeOutOfRange { u, v, num_nodes }),
            None => Ok(()),
        }
    }
}

/// Symmetric adjacency in compressed-row form.
///
/// Columns are sorted within each row. A raw graph stores 1.0 per edge and
/// no diagonal; a normalized graph additionally carries a self-loop on every
/// node and the coefficients `1 / sqrt(d_u d_v)` with `d` the degree of `A + I`.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseGraph {
    num_nodes: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    edge_values: Vec<f64>,
    normalized: bool,
}

/// Builds the raw symmetric adjacency of `edges`.
pub fn build_graph(num_nodes: usize, edges: &EdgeList) -> Result<SparseGraph, GraphError> {
    edges.check_range(num_nodes)?;
    let mut degree = vec![0usize; num_nodes];
    for (u, v) in edges.iter() {
        degree[u] += 1;
        degree[v] += 1;
    }
    let mut row_offsets = Vec::with_capacity(num_nodes + 1);
    row_offsets.push(0);
    for d in &degree {
        row_offsets.push(row_offsets.last().unwrap() + d);
    }
    let mut cursor = row_offsets[..num_nodes].to_vec();
    let mut col_indices = vec![0; 2 * edges.len()];
    // Canonical order (u < v, sorted) fills every row in ascending column order:
    // row w receives its smaller neighbours (as v) before its larger ones (as u),
    // each group already ascending.
    let mut lower: Vec<Vec<usize>> = vec![Vec::new(); num_nodes];
    for (u, v) in edges.iter() {
        lower[v].push(u);
    }
    for w in 0..num_nodes {
        for &u in &lower[w] {
            col_indices[cursor[w]] = u;
            cursor[w] += 1;
        }
    }
    for (u, v) in edges.iter() {
        col_indices[cursor[u]] = v;
        cursor[u] += 1;
    }
    Ok(SparseGraph {
        num_nodes,
        row_offsets,
        edge_values: vec![1.0; col_indices.len()],
        col_indices,
        normalized: false,
    })
}

impl SparseGraph {
    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    /// Number of stored (directed) entries, including self-loops.
    pub fn nnz(&self) -> usize {
        self.col_indices.len()
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn row_offsets(&self) -> &[usize] {
        &self.row_offsets
    }

    pub fn neighbors(&self, u: usize) -> &[usize] {
        &self.col_indices[self.row_offsets[u]..self.row_offsets[u + 1]]
    }

    pub fn row_values(&self, u: usize) -> &[f64] {
        &self.edge_values[self.row_offsets[u]..self.row_offsets[u + 1]]
    }

    pub fn value(&self, u: usize, v: usize) -> Option<f64> {
        let cols = self.neighbors(u);
        cols.binary_search(&v).ok().map(|i| self.row_values(u)[i])
    }

    /// Returns `D^{-1/2}(A + I)D^{-1/2}` of a raw graph. Already normalized
    /// graphs are returned unchanged.
    pub fn normalize(&self) -> SparseGraph {
        if self.normalized {
            return self.clone();
        }
        let n = self.num_nodes;
        let degree: Vec<usize> = (0..n).map(|u| self.neighbors(u).len() + 1).collect();
        let coeff = |u: usize, v: usize| 1.0 / ((degree[u] * degree[v]) as f64).sqrt();
        let mut row_offsets = Vec::with_capacity(n + 1);
        let mut col_indices = Vec::with_capacity(self.nnz() + n);
        let mut edge_values = Vec::with_capacity(self.nnz() + n);
        row_offsets.push(0);
        for u in 0..n {
            let mut self_done = false;
            for &v in self.neighbors(u) {
                if !self_done && v > u {
                    col_indices.push(u);
                    edge_values.push(coeff(u, u));
                    self_done = true;
                }
                col_indices.push(v);
                edge_values.push(coeff(u, v));
            }
            if !self_done {
                col_indices.push(u);
                edge_values.push(coeff(u, u));
            }
            row_offsets.push(col_indices.len());
        }
        SparseGraph {
            num_nodes: n,
            row_offsets,
            col_indices,
            edge_values,
            normalized: true,
        }
    }

    /// Sparse-dense product: row `u` of the result is `Σ_v value(u,v) · x_v`.
    pub fn spmm(&self, x: &DenseMatrix) -> Result<DenseMatrix, GraphError> {
        if x.rows() != self.num_nodes {
            return Err(ShapeError::new("spmm", (self.num_nodes, self.num_nodes), x.shape()).into());
        }
        let mut out = DenseMatrix::zeros(self.num_nodes, x.cols());
        for u in 0..self.num_nodes {
            let out_row = out.row_mut(u);
            for (&v, &a) in self.neighbors(u).iter().zip(self.row_values(u)) {
                for (o, &b) in out_row.iter_mut().zip(x.row(v)) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(self.num_nodes, self.num_nodes);
        for u in 0..self.num_nodes {
            for (&v, &a) in self.neighbors(u).iter().zip(self.row_values(u)) {
                out.set(u, v, a);
            }
        }
        out
    }

    /// Undirected edges of a raw graph (self-loops excluded).
    pub fn edge_list(&self) -> EdgeList {
        let mut edges = Vec::new();
        for u in 0..self.num_nodes {
            for &v in self.neighbors(u) {
                if u < v {
                    edges.push((u, v));
                }
            }
        }
        EdgeList::from_canonical(edges)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;
    use proptest::prelude::*;

    fn random_edges(n: usize, m: usize, rng: &mut Rng) -> EdgeList {
        let pairs: Vec<(usize, usize)> = (0..m)
            .map(|_| (rng.below(n), rng.below(n)))
            .filter(|(u, v)| u != v)
            .collect();
        EdgeList::from_pairs(pairs).unwrap()
    }

    fn dense_adjacency(n: usize, edges: &EdgeList) -> DenseMatrix {
        let mut a = DenseMatrix::zeros(n, n);
        for (u, v) in edges.iter() {
            a.set(u, v, 1.0);
            a.set(v, u, 1.0);
        }
        a
    }

    /// D^{-1/2}(A+I)D^{-1/2} computed densely.
    fn dense_normalized(n: usize, edges: &EdgeList) -> DenseMatrix {
        let mut a = dense_adjacency(n, edges);
        for i in 0..n {
            a.set(i, i, 1.0);
        }
        let deg: Vec<f64> = (0..n).map(|i| a.row(i).iter().sum()).collect();
        DenseMatrix::from_fn(n, n, |i, j| a.get(i, j) / (deg[i] * deg[j]).sqrt())
    }

    #[test]
    fn single_edge_is_mirrored() {
        let g = build_graph(2, &EdgeList::from_pairs([(0, 1)]).unwrap()).unwrap();
        assert_eq!(g.neighbors(0), &[1]);
        assert_eq!(g.neighbors(1), &[0]);
        assert_eq!(g.row_values(0), &[1.0]);
        assert!(!g.is_normalized());
    }

    #[test]
    fn empty_graph() {
        let g = build_graph(3, &EdgeList::default()).unwrap();
        assert_eq!(g.nnz(), 0);
        assert!((0..3).all(|u| g.neighbors(u).is_empty()));
    }

    #[test]
    fn rejects_bad_edges() {
        assert_eq!(EdgeList::from_pairs([(2, 2)]), Err(GraphError::SelfLoop(2)));
        let edges = EdgeList::from_pairs([(0, 3)]).unwrap();
        assert!(matches!(build_graph(3, &edges), Err(GraphError::NodeOutOfRange { .. })));
    }

    #[test]
    fn duplicates_collapse() {
        let edges = EdgeList::from_pairs([(1, 0), (0, 1), (2, 1)]).unwrap();
        assert_eq!(edges.as_slice(), &[(0, 1), (1, 2)]);
    }

    #[test]
    fn csr_matches_dense_oracle() {
        let mut rng = Rng::seed_from(5);
        let edges = random_edges(5, 7, &mut rng);
        let g = build_graph(5, &edges).unwrap();
        assert_eq!(g.to_dense(), dense_adjacency(5, &edges));
        assert_eq!(g.edge_list(), edges);
    }

    #[test]
    fn normalization_small_cases() {
        let g = build_graph(1, &EdgeList::default()).unwrap().normalize();
        assert_eq!(g.to_dense(), DenseMatrix::identity(1));
        let g = build_graph(2, &EdgeList::from_pairs([(0, 1)]).unwrap())
            .unwrap()
            .normalize();
        assert_eq!(g.to_dense(), DenseMatrix::filled(2, 2, 0.5));
        assert!(g.is_normalized());
    }

    #[test]
    fn normalization_matches_dense_oracle() {
        let mut rng = Rng::seed_from(6);
        let edges = random_edges(6, 9, &mut rng);
        let raw = build_graph(6, &edges).unwrap();
        let before = raw.clone();
        let norm = raw.normalize();
        assert_eq!(raw, before);
        assert!(norm.to_dense().max_abs_diff(&dense_normalized(6, &edges)) <= 1e-12);
    }

    #[test]
    fn spmm_basic_cases() {
        let mut rng = Rng::seed_from(2);
        let x = DenseMatrix::from_fn(4, 3, |_, _| rng.uniform());
        let isolated = build_graph(4, &EdgeList::default()).unwrap().normalize();
        assert_eq!(isolated.spmm(&x).unwrap(), x);
        let g = build_graph(4, &EdgeList::from_pairs([(0, 1), (2, 3)]).unwrap())
            .unwrap()
            .normalize();
        assert_eq!(g.spmm(&DenseMatrix::zeros(4, 3)).unwrap(), DenseMatrix::zeros(4, 3));
        assert!(g.spmm(&DenseMatrix::zeros(3, 3)).is_err());
    }

    #[test]
    fn spmm_matches_dense_product() {
        let mut rng = Rng::seed_from(8);
        let edges = random_edges(8, 14, &mut rng);
        let g = build_graph(8, &edges).unwrap().normalize();
        let x = DenseMatrix::from_fn(8, 3, |_, _| rng.uniform_in(-1.0, 1.0));
        let sparse = g.spmm(&x).unwrap();
        let dense = dense_normalized(8, &edges).matmul(&x).unwrap();
        for (a, b) in sparse.data().iter().zip(dense.data()) {
            assert!((a - b).abs() <= 1e-6 * b.abs().max(1e-12));
        }
    }

    proptest! {
        #[test]
        fn normalized_graph_invariants(
            n in 1usize..12,
            raw in proptest::collection::vec((0usize..12, 0usize..12), 0..30),
        ) {
            let pairs: Vec<_> = raw.into_iter().map(|(u, v)| (u % n, v % n)).filter(|(u, v)| u != v).collect();
            let edges = EdgeList::from_pairs(pairs).unwrap();
            let raw = build_graph(n, &edges).unwrap();
            let g = raw.normalize();
            // Symmetric values, sorted rows, self-loop everywhere.
            for u in 0..n {
                prop_assert!(g.neighbors(u).windows(2).all(|w| w[0] < w[1]));
                prop_assert!(g.value(u, u).is_some());
                for &v in g.neighbors(u) {
                    prop_assert_eq!(g.value(u, v), g.value(v, u));
                    let expected = 1.0 / (((raw.neighbors(u).len() + 1) * (raw.neighbors(v).len() + 1)) as f64).sqrt();
                    prop_assert_eq!(g.value(u, v).unwrap(), expected);
                }
            }
            // spmm against the identity reconstructs a symmetric dense matrix.
            let dense = g.spmm(&DenseMatrix::identity(n)).unwrap();
            prop_assert_eq!(&dense, &dense.transpose());
            prop_assert_eq!(dense, g.to_dense());
        }

        #[test]
        fn spmm_rows_are_local(seed in 0u64..1000) {
            let mut rng = Rng::seed_from(seed);
            let n = 9;
            let edges = random_edges(n, 10, &mut rng);
            let g = build_graph(n, &edges).unwrap().normalize();
            let x = DenseMatrix::from_fn(n, 2, |_, _| rng.uniform_in(-1.0, 1.0));
            let u = rng.below(n);
            let mut masked = x.clone();
            for w in 0..n {
                if w != u && !g.neighbors(u).contains(&w) {
                    masked.row_mut(w).fill(0.0);
                }
            }
            let (full, local) = (g.spmm(&x).unwrap(), g.spmm(&masked).unwrap());
            prop_assert_eq!(full.row(u), local.row(u));
        }
    }
}
