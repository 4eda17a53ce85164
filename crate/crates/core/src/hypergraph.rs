//! Generating classes of hierarchical log-linear models, viewed as hypergraphs.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::table::{check_k, default_labels, VarSet};

/// Vertices `0..k` with an antichain of nonempty hyperedges.
///
/// Hyperedges are kept in canonical [`VarSet`] order, which is also the
/// order IPF sweeps through them.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Hypergraph {
    labels: Vec<String>,
    edges: Vec<VarSet>,
}

/// Order `h` (hyperedge size `h + 1`) and length of a chain hypergraph.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct ChainDescriptor {
    pub order: usize,
    pub length: usize,
}

impl Hypergraph {
    /// Validates an antichain of nonempty hyperedges over `k` vertices.
    /// An empty edge list is allowed and stands for the uniform model.
    pub fn new(k: usize, edges: Vec<VarSet>) -> Result<Self> {
        check_k(k)?;
        let full = VarSet::full(k);
        for (i, &e) in edges.iter().enumerate() {
            if e.is_empty() {
                return Err(Error::Hypergraph("empty hyperedge".into()));
            }
            if !e.is_subset(full) {
                return Err(Error::Hypergraph(format!("hyperedge {e} has vertices outside 0..{k}")));
            }
            for &f in &edges[i + 1..] {
                if e.is_subset(f) || f.is_subset(e) {
                    return Err(Error::Hypergraph(format!("hyperedges {e} and {f} are comparable")));
                }
            }
        }
        let mut edges = edges;
        edges.sort();
        Ok(Hypergraph { labels: default_labels(k), edges })
    }

    pub fn saturated(k: usize) -> Result<Self> {
        Self::new(k, vec![VarSet::full(k)])
    }

    pub fn singletons(k: usize) -> Result<Self> {
        Self::new(k, (0..k).map(VarSet::singleton).collect())
    }

    pub fn empty(k: usize) -> Result<Self> {
        Self::new(k, Vec::new())
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.k() {
            return Err(Error::Hypergraph(format!(
                "{} labels for {} vertices",
                labels.len(),
                self.k()
            )));
        }
        self.labels = labels;
        Ok(self)
    }

    pub fn k(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn edges(&self) -> &[VarSet] {
        &self.edges
    }

    pub fn is_saturated(&self) -> bool {
        self.edges == [VarSet::full(self.k())]
    }

    /// Interaction orders `h_t = |M_t| - 1`.
    pub fn orders(&self) -> Vec<usize> {
        self.edges.iter().map(|e| e.len() - 1).collect()
    }

    pub fn covered(&self) -> VarSet {
        self.edges.iter().fold(VarSet::EMPTY, |u, &e| u.union(e))
    }

    /// True when `s` is a subset of some hyperedge (`∅` always is).
    pub fn in_descending_class(&self, s: VarSet) -> bool {
        s.is_empty() || self.edges.iter().any(|&e| s.is_subset(e))
    }

    /// Edges as label strings, e.g. `["AB", "BC"]`.
    pub fn edge_labels(&self) -> Vec<String> {
        self.edges.iter().map(|e| e.label(&self.labels)).collect()
    }

    /// Parses a comma-separated list of hyperedges such as `"ABC,ABD"`.
    /// Single-character labels are read letter by letter; otherwise vertices
    /// inside a hyperedge are separated by `:`.
    pub fn parse(spec: &str, labels: &[String]) -> Result<Self> {
        let k = labels.len();
        let single = labels.iter().all(|l| l.chars().count() == 1);
        let mut sets = Vec::new();
        for part in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let names: Vec<String> = if single {
                part.chars().map(|c| c.to_string()).collect()
            } else {
                part.split(':').map(|s| s.trim().to_string()).collect()
            };
            let mut vars = Vec::new();
            for n in names {
                let v = labels
                    .iter()
                    .position(|l| *l == n)
                    .ok_or_else(|| Error::Hypergraph(format!("unknown vertex {n:?}")))?;
                vars.push(v);
            }
            sets.push(VarSet::new(&vars, k)?);
        }
        if sets.is_empty() {
            return Hypergraph::empty(k)?.with_labels(labels.to_vec());
        }
        normalize_generating_class(k, &sets)?.with_labels(labels.to_vec())
    }

    pub fn to_json(&self) -> HypergraphJson {
        HypergraphJson {
            vertices: self.labels.clone(),
            hyperedges: self
                .edges
                .iter()
                .map(|e| e.iter().map(|v| self.labels[v].clone()).collect())
                .collect(),
        }
    }

    pub fn from_json(json: &HypergraphJson) -> Result<Self> {
        let k = json.vertices.len();
        let mut edges = Vec::with_capacity(json.hyperedges.len());
        for edge in &json.hyperedges {
            let vars = edge
                .iter()
                .map(|n| {
                    json.vertices
                        .iter()
                        .position(|l| l == n)
                        .ok_or_else(|| Error::Hypergraph(format!("unknown vertex {n:?}")))
                })
                .collect::<Result<Vec<_>>>()?;
            edges.push(VarSet::new(&vars, k)?);
        }
        Hypergraph::new(k, edges)?.with_labels(json.vertices.clone())
    }
}

/// Wire format: `{"vertices": ["A", ...], "hyperedges": [["A","B","C"], ...]}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HypergraphJson {
    pub vertices: Vec<String>,
    pub hyperedges: Vec<Vec<String>>,
}

/// Drops every set contained in another (and duplicates), leaving an antichain.
pub fn normalize_generating_class(k: usize, sets: &[VarSet]) -> Result<Hypergraph> {
    if sets.is_empty() {
        return Err(Error::Hypergraph("empty generating class".into()));
    }
    if sets.iter().any(|s| s.is_empty()) {
        return Err(Error::Hypergraph("empty hyperedge".into()));
    }
    let mut kept: Vec<VarSet> = Vec::new();
    for (i, &s) in sets.iter().enumerate() {
        let dominated = sets
            .iter()
            .enumerate()
            .any(|(j, &t)| s.is_proper_subset(t) || (s == t && j < i));
        if !dominated {
            kept.push(s);
        }
    }
    Hypergraph::new(k, kept)
}

/// All subsets of some hyperedge, including `∅`, in canonical order.
pub fn descending_class(h: &Hypergraph) -> Vec<VarSet> {
    crate::table::all_subsets(h.k())
        .into_iter()
        .filter(|&s| h.in_descending_class(s))
        .collect()
}

/// Complement of the descending class within the power set.
pub fn ascending_class(h: &Hypergraph) -> Vec<VarSet> {
    crate::table::all_subsets(h.k())
        .into_iter()
        .filter(|&s| !h.in_descending_class(s))
        .collect()
}

/// Graham (GYO) reduction.
///
/// Returns a running-intersection ordering of the hyperedges when the
/// hypergraph is decomposable, `None` otherwise. The ordering is the reverse
/// of the order in which the reduction removes hyperedges.
pub fn is_decomposable(h: &Hypergraph) -> Option<Vec<VarSet>> {
    let mut live: Vec<(usize, u32)> = h.edges.iter().map(|e| e.mask()).enumerate().collect();
    let mut removed = Vec::with_capacity(live.len());
    loop {
        let mut changed = false;

        // vertices that belong to exactly one live hyperedge
        let mut once = 0u32;
        let mut twice = 0u32;
        for &(_, m) in &live {
            twice |= once & m;
            once |= m;
        }
        let lonely = once & !twice;
        if lonely != 0 {
            for (_, m) in live.iter_mut() {
                *m &= !lonely;
            }
            changed = true;
        }

        if let Some(pos) = (0..live.len()).find(|&i| {
            let (_, m) = live[i];
            live.iter()
                .enumerate()
                .any(|(j, &(_, o))| j != i && m & !o == 0)
                || m == 0
        }) {
            removed.push(live.remove(pos).0);
            changed = true;
        }

        if live.is_empty() {
            removed.reverse();
            return Some(removed.into_iter().map(|i| h.edges[i]).collect());
        }
        if !changed {
            return None;
        }
    }
}

/// Each hyperedge's intersection with the union of its predecessors lies in one predecessor.
pub fn has_running_intersection(order: &[VarSet]) -> bool {
    let mut union = VarSet::EMPTY;
    for (j, &e) in order.iter().enumerate() {
        if j > 0 {
            let sep = e.intersection(union);
            if !order[..j].iter().any(|&p| sep.is_subset(p)) {
                return false;
            }
        }
        union = union.union(e);
    }
    true
}

/// `(h, L)` when all hyperedges have size `h + 1 >= 2`, cover every vertex,
/// and form a decomposable class.
pub fn chain_descriptor(h: &Hypergraph) -> Option<ChainDescriptor> {
    let first = h.edges.first()?;
    let size = first.len();
    if size < 2 || h.edges.iter().any(|e| e.len() != size) {
        return None;
    }
    if h.covered() != VarSet::full(h.k()) {
        return None;
    }
    is_decomposable(h)?;
    Some(ChainDescriptor { order: size - 1, length: h.edges.len() })
}
