//! Directed configuration-model multigraphs.

use std::collections::BTreeMap;
use std::io::{self, BufRead, Write};

use rand::seq::SliceRandom;

use crate::degree_model::{DegreeClass, DegreeSequence};
use crate::error::{Error, Result};
use crate::rng::rng_from_seed;

/// Immutable directed multigraph in compressed sparse row form.
///
/// Self-loops and parallel edges are kept. Each node carries the
/// `(in-degree, out-degree)` label it was built from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DirectedGraph {
    offsets: Vec<usize>,
    targets: Vec<u32>,
    class_of: Vec<DegreeClass>,
}

impl DirectedGraph {
    /// Builds a graph from an explicit edge list. Node labels are the
    /// realized degrees.
    pub fn from_edges(n: usize, edges: &[(u32, u32)]) -> Result<Self> {
        let mut in_deg = vec![0u32; n];
        let mut out_deg = vec![0u32; n];
        for &(s, t) in edges {
            if s as usize >= n || t as usize >= n {
                return Err(Error::InvalidSequence(format!("edge ({s},{t}) out of range for {n} nodes")));
            }
            out_deg[s as usize] += 1;
            in_deg[t as usize] += 1;
        }
        let class_of = in_deg.iter().zip(&out_deg).map(|(&k, &l)| DegreeClass::new(k, l)).collect();
        Ok(Self::assemble(class_of, edges))
    }

    fn assemble(class_of: Vec<DegreeClass>, edges: &[(u32, u32)]) -> Self {
        let n = class_of.len();
        let mut offsets = vec![0usize; n + 1];
        for &(s, _) in edges {
            offsets[s as usize + 1] += 1;
        }
        for u in 0..n {
            offsets[u + 1] += offsets[u];
        }
        let mut cursor = offsets.clone();
        let mut targets = vec![0u32; edges.len()];
        for &(s, t) in edges {
            targets[cursor[s as usize]] = t;
            cursor[s as usize] += 1;
        }
        Self { offsets, targets, class_of }
    }

    pub fn node_count(&self) -> usize {
        self.class_of.len()
    }

    pub fn edge_count(&self) -> usize {
        self.targets.len()
    }

    pub fn out_neighbors(&self, u: usize) -> &[u32] {
        &self.targets[self.offsets[u]..self.offsets[u + 1]]
    }

    pub fn class_of(&self, u: usize) -> DegreeClass {
        self.class_of[u]
    }

    pub fn classes(&self) -> &[DegreeClass] {
        &self.class_of
    }

    pub fn edges(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        (0..self.node_count()).flat_map(move |u| self.out_neighbors(u).iter().map(move |&v| (u as u32, v)))
    }

    /// In-degrees recounted from the adjacency lists.
    pub fn realized_in_degrees(&self) -> Vec<u32> {
        let mut deg = vec![0u32; self.node_count()];
        for &v in &self.targets {
            deg[v as usize] += 1;
        }
        deg
    }

    pub fn self_loop_count(&self) -> usize {
        self.edges().filter(|(u, v)| u == v).count()
    }

    /// Number of edges that duplicate an earlier edge with the same endpoints.
    pub fn multi_edge_count(&self) -> usize {
        let mut extra = 0;
        let mut buf = Vec::new();
        for u in 0..self.node_count() {
            buf.clear();
            buf.extend_from_slice(self.out_neighbors(u));
            buf.sort_unstable();
            extra += buf.windows(2).filter(|w| w[0] == w[1]).count();
        }
        extra
    }

    /// Writes `N M` followed by one `src dst` line per edge.
    pub fn write_edge_list<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "{} {}", self.node_count(), self.edge_count())?;
        for (u, v) in self.edges() {
            writeln!(w, "{u} {v}")?;
        }
        Ok(())
    }

    /// Parses the format written by [`DirectedGraph::write_edge_list`].
    pub fn read_edge_list<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines().enumerate();
        let parse_pair = |line: usize, text: &str| -> Result<(u64, u64)> {
            let mut it = text.split_whitespace().map(str::parse::<u64>);
            match (it.next(), it.next(), it.next()) {
                (Some(Ok(a)), Some(Ok(b)), None) => Ok((a, b)),
                _ => Err(Error::Csv { line: line + 1, msg: format!("expected two integers, got {text:?}") }),
            }
        };
        let (line, header) = lines.next().ok_or(Error::Csv { line: 1, msg: "missing header".into() })?;
        let (n, m) = parse_pair(line, &header?)?;
        let mut edges = Vec::with_capacity(m as usize);
        for (line, text) in lines {
            let text = text?;
            if text.trim().is_empty() {
                continue;
            }
            let (s, t) = parse_pair(line, &text)?;
            edges.push((s as u32, t as u32));
        }
        if edges.len() as u64 != m {
            return Err(Error::Csv { line: 1, msg: format!("header promises {m} edges, found {}", edges.len()) });
        }
        Self::from_edges(n as usize, &edges)
    }
}

/// Pairs in-stubs with out-stubs uniformly at random.
///
/// In-stubs are laid out in node order; the out-stub array is shuffled with
/// the seeded RNG and the two arrays are zipped. The graph is therefore a
/// pure function of `(seq, seed)`.
pub fn build_configuration_graph(seq: &DegreeSequence, seed: u64) -> Result<DirectedGraph> {
    let (ins, outs) = (seq.in_stubs(), seq.out_stubs());
    if ins != outs {
        return Err(Error::Unbalanced { in_stubs: ins, out_stubs: outs });
    }
    let expand = |deg: &[u32]| -> Vec<u32> {
        deg.iter().enumerate().flat_map(|(u, &d)| std::iter::repeat_n(u as u32, d as usize)).collect()
    };
    let in_stubs = expand(seq.in_deg());
    let mut out_stubs = expand(seq.out_deg());
    let mut rng = rng_from_seed(seed);
    out_stubs.shuffle(&mut rng);
    let edges: Vec<(u32, u32)> = out_stubs.into_iter().zip(in_stubs).collect();
    let class_of = (0..seq.len()).map(|u| seq.class_of(u)).collect();
    Ok(DirectedGraph::assemble(class_of, &edges))
}

/// Number of nodes per `(k, l)` label.
pub fn degree_census(g: &DirectedGraph) -> BTreeMap<DegreeClass, usize> {
    let mut counts = BTreeMap::new();
    for &c in g.classes() {
        *counts.entry(c).or_insert(0) += 1;
    }
    counts
}
