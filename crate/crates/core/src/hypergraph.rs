//! Typed hypergraph storage with incidence and neighbor indexes.
//!
//! Node labels are interned to dense [`NodeId`]s so that every hot path is
//! array-indexed. A [`Hypergraph`] is immutable once built.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

/// Dense node identifier, `0 <= index < node_count`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(pub u32);

impl NodeId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl From<usize> for NodeId {
    fn from(i: usize) -> Self {
        NodeId(i as u32)
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Dense node type identifier, `0 <= index < type_count`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeTypeId(pub u16);

impl NodeTypeId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// A hyperedge in canonical form: at least two distinct nodes, strictly
/// increasing.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Hyperedge(Box<[NodeId]>);

impl Hyperedge {
    /// Canonicalizes `nodes`. Returns `None` if fewer than two nodes are given
    /// or a node is repeated.
    pub fn new(nodes: impl IntoIterator<Item = NodeId>) -> Option<Self> {
        let mut v: Vec<NodeId> = nodes.into_iter().collect();
        v.sort_unstable();
        let before = v.len();
        v.dedup();
        if v.len() != before || v.len() < 2 {
            return None;
        }
        Some(Hyperedge(v.into_boxed_slice()))
    }

    #[inline]
    pub fn nodes(&self) -> &[NodeId] {
        &self.0
    }

    #[inline]
    #[allow(clippy::len_without_is_empty)]
    pub fn len(&self) -> usize {
        self.0.len()
    }

    #[inline]
    pub fn contains(&self, v: NodeId) -> bool {
        self.0.binary_search(&v).is_ok()
    }

    /// True if every node of `subset` is in this edge.
    pub fn contains_all(&self, subset: &[NodeId]) -> bool {
        subset.iter().all(|&v| self.contains(v))
    }
}

/// Result of [`Hypergraph::uniformity`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Uniformity {
    Uniform(usize),
    NonUniform,
}

/// Sorted multiset of node types, the "type signature" of a tuple.
pub type Signature = Vec<NodeTypeId>;

#[derive(Clone, Debug)]
pub struct Hypergraph {
    labels: Vec<String>,
    label_index: HashMap<String, NodeId>,
    type_names: Vec<String>,
    node_types: Vec<NodeTypeId>,
    nodes_by_type: Vec<Vec<NodeId>>,
    edges: Vec<Hyperedge>,
    edge_index: HashMap<Hyperedge, usize>,
    incidence: Vec<Vec<u32>>,
    neighbors: Vec<Vec<NodeId>>,
    // distinct signatures with the number of edges carrying each
    signatures: Vec<(Signature, usize)>,
    signature_set: HashSet<Signature>,
    max_edge_size: usize,
    duplicate_edges: usize,
}

impl Hypergraph {
    /// Builds a hypergraph from already-interned parts. Duplicate edges are
    /// collapsed and counted.
    pub fn from_parts(
        labels: Vec<String>,
        type_names: Vec<String>,
        node_types: Vec<NodeTypeId>,
        edges: Vec<Hyperedge>,
    ) -> Result<Self> {
        if labels.len() != node_types.len() {
            return Err(Error::Config(format!(
                "{} labels but {} node types",
                labels.len(),
                node_types.len()
            )));
        }
        if edges.is_empty() {
            return Err(Error::EmptyHypergraph);
        }
        let n = labels.len();
        for t in &node_types {
            if t.index() >= type_names.len() {
                return Err(Error::InvalidNodeType(t.index()));
            }
        }

        let mut label_index = HashMap::with_capacity(n);
        for (i, l) in labels.iter().enumerate() {
            if label_index.insert(l.clone(), NodeId::from(i)).is_some() {
                return Err(Error::Config(format!("duplicate label `{l}`")));
            }
        }

        let mut nodes_by_type = vec![Vec::new(); type_names.len()];
        for (i, t) in node_types.iter().enumerate() {
            nodes_by_type[t.index()].push(NodeId::from(i));
        }

        let mut unique = Vec::with_capacity(edges.len());
        let mut edge_index = HashMap::with_capacity(edges.len());
        let mut duplicate_edges = 0;
        for e in edges {
            if let Some(&bad) = e.nodes().iter().find(|v| v.index() >= n) {
                return Err(Error::InvalidNode(bad.index()));
            }
            if edge_index.contains_key(&e) {
                duplicate_edges += 1;
                continue;
            }
            edge_index.insert(e.clone(), unique.len());
            unique.push(e);
        }
        let edges = unique;

        let mut incidence = vec![Vec::new(); n];
        for (i, e) in edges.iter().enumerate() {
            for v in e.nodes() {
                incidence[v.index()].push(i as u32);
            }
        }

        let neighbors = (0..n)
            .map(|v| {
                let mut nb: Vec<NodeId> = incidence[v]
                    .iter()
                    .flat_map(|&ei| edges[ei as usize].nodes().iter().copied())
                    .filter(|u| u.index() != v)
                    .collect();
                nb.sort_unstable();
                nb.dedup();
                nb
            })
            .collect();

        let mut counts: HashMap<Signature, usize> = HashMap::new();
        for e in &edges {
            let sig = signature_of(&node_types, e.nodes());
            *counts.entry(sig).or_insert(0) += 1;
        }
        let mut signatures: Vec<(Signature, usize)> = counts.into_iter().collect();
        signatures.sort();
        let signature_set = signatures.iter().map(|(s, _)| s.clone()).collect();
        let max_edge_size = edges.iter().map(Hyperedge::len).max().unwrap_or(0);

        Ok(Hypergraph {
            labels,
            label_index,
            type_names,
            node_types,
            nodes_by_type,
            edges,
            edge_index,
            incidence,
            neighbors,
            signatures,
            signature_set,
            max_edge_size,
            duplicate_edges,
        })
    }

    /// Parses an edge list and a type list.
    ///
    /// Edge lines hold whitespace-separated labels, one hyperedge per line;
    /// lines starting with `#` and blank lines are skipped. Type lines hold
    /// `label type`. Labels are interned in order of first appearance in the
    /// edge list; nodes that only appear in the type list follow, in type list
    /// order.
    pub fn parse(edge_source: &str, type_source: &str) -> Result<Self> {
        let mut type_names: Vec<String> = Vec::new();
        let mut type_ids: HashMap<String, NodeTypeId> = HashMap::new();
        let mut declared: HashMap<String, NodeTypeId> = HashMap::new();
        let mut declared_order: Vec<String> = Vec::new();
        for (lineno, line) in type_source.lines().enumerate() {
            let line_no = lineno + 1;
            if skip_line(line) {
                continue;
            }
            let mut tok = line.split_whitespace();
            let (Some(label), Some(ty), None) = (tok.next(), tok.next(), tok.next()) else {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("expected `label<TAB>type`, got `{line}`"),
                });
            };
            let next_id = NodeTypeId(type_names.len() as u16);
            let tid = *type_ids.entry(ty.to_string()).or_insert_with(|| {
                type_names.push(ty.to_string());
                next_id
            });
            match declared.get(label) {
                Some(&prev) if prev != tid => {
                    return Err(Error::Parse {
                        line: line_no,
                        message: format!("conflicting types for `{label}`"),
                    })
                }
                Some(_) => {}
                None => {
                    declared.insert(label.to_string(), tid);
                    declared_order.push(label.to_string());
                }
            }
        }

        let mut labels: Vec<String> = Vec::new();
        let mut node_types: Vec<NodeTypeId> = Vec::new();
        let mut interned: HashMap<&str, NodeId> = HashMap::new();
        let mut edges = Vec::new();
        for (lineno, line) in edge_source.lines().enumerate() {
            let line_no = lineno + 1;
            if skip_line(line) {
                continue;
            }
            let mut nodes = Vec::new();
            for label in line.split_whitespace() {
                let id = match interned.get(label) {
                    Some(&id) => id,
                    None => {
                        let Some(&t) = declared.get(label) else {
                            return Err(Error::UnknownNode {
                                label: label.to_string(),
                                line: line_no,
                            });
                        };
                        let id = NodeId::from(labels.len());
                        labels.push(label.to_string());
                        node_types.push(t);
                        interned.insert(label, id);
                        id
                    }
                };
                nodes.push(id);
            }
            let count = nodes.len();
            let edge = Hyperedge::new(nodes).ok_or_else(|| Error::DegenerateEdge {
                line: line_no,
                reason: if count < 2 {
                    format!("{count} label(s), at least 2 required")
                } else {
                    "repeated node label".to_string()
                },
            })?;
            edges.push(edge);
        }
        if edges.is_empty() {
            return Err(Error::EmptyHypergraph);
        }
        for label in &declared_order {
            if !interned.contains_key(label.as_str()) {
                labels.push(label.clone());
                node_types.push(declared[label]);
            }
        }
        Hypergraph::from_parts(labels, type_names, node_types, edges)
    }

    pub fn load(edge_path: impl AsRef<Path>, type_path: impl AsRef<Path>) -> Result<Self> {
        let edges = fs::read_to_string(edge_path)?;
        let types = fs::read_to_string(type_path)?;
        Hypergraph::parse(&edges, &types)
    }

    /// Same node universe and types, different edge set.
    pub fn with_edges(&self, edges: Vec<Hyperedge>) -> Result<Self> {
        Hypergraph::from_parts(
            self.labels.clone(),
            self.type_names.clone(),
            self.node_types.clone(),
            edges,
        )
    }

    pub fn node_count(&self) -> usize {
        self.labels.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn type_count(&self) -> usize {
        self.type_names.len()
    }

    /// Number of input edges dropped because they repeated an earlier edge.
    pub fn duplicate_edges(&self) -> usize {
        self.duplicate_edges
    }

    pub fn label(&self, v: NodeId) -> &str {
        &self.labels[v.index()]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn node_by_label(&self, label: &str) -> Option<NodeId> {
        self.label_index.get(label).copied()
    }

    #[inline]
    pub fn node_type(&self, v: NodeId) -> NodeTypeId {
        self.node_types[v.index()]
    }

    pub fn node_types(&self) -> &[NodeTypeId] {
        &self.node_types
    }

    pub fn type_name(&self, t: NodeTypeId) -> &str {
        &self.type_names[t.index()]
    }

    pub fn type_names(&self) -> &[String] {
        &self.type_names
    }

    pub fn type_by_name(&self, name: &str) -> Option<NodeTypeId> {
        self.type_names
            .iter()
            .position(|n| n == name)
            .map(|i| NodeTypeId(i as u16))
    }

    pub fn nodes_of_type(&self, t: NodeTypeId) -> &[NodeId] {
        &self.nodes_by_type[t.index()]
    }

    pub fn edges(&self) -> &[Hyperedge] {
        &self.edges
    }

    pub fn edge(&self, i: usize) -> &Hyperedge {
        &self.edges[i]
    }

    /// Index of `e` in the edge list, if present.
    pub fn edge_position(&self, e: &Hyperedge) -> Option<usize> {
        self.edge_index.get(e).copied()
    }

    pub fn contains_edge(&self, e: &Hyperedge) -> bool {
        self.edge_index.contains_key(e)
    }

    #[inline]
    pub fn check_node(&self, v: NodeId) -> Result<()> {
        if v.index() < self.node_count() {
            Ok(())
        } else {
            Err(Error::InvalidNode(v.index()))
        }
    }

    /// Sorted indices of the edges containing `v`.
    #[inline]
    pub fn incidence(&self, v: NodeId) -> &[u32] {
        &self.incidence[v.index()]
    }

    /// Nodes sharing at least one edge with `v`, excluding `v` itself.
    pub fn neighbors(&self, v: NodeId) -> Result<&[NodeId]> {
        self.check_node(v)?;
        Ok(&self.neighbors[v.index()])
    }

    /// Unchecked variant for hot loops.
    #[inline]
    pub(crate) fn neighbors_of(&self, v: NodeId) -> &[NodeId] {
        &self.neighbors[v.index()]
    }

    pub fn degree(&self, v: NodeId) -> usize {
        self.incidence[v.index()].len()
    }

    /// Indices of every edge that contains all of `nodes`, in ascending order.
    pub fn edges_containing_all(&self, nodes: &[NodeId]) -> Result<Vec<usize>> {
        if nodes.is_empty() {
            return Err(Error::EmptySubsetQuery);
        }
        for &v in nodes {
            self.check_node(v)?;
        }
        let mut lists: Vec<&[u32]> = nodes.iter().map(|&v| self.incidence(v)).collect();
        lists.sort_by_key(|l| l.len());
        let mut acc: Vec<u32> = lists[0].to_vec();
        for other in &lists[1..] {
            if acc.is_empty() {
                break;
            }
            acc = intersect_sorted(&acc, other);
        }
        Ok(acc.into_iter().map(|i| i as usize).collect())
    }

    pub fn uniformity(&self) -> Uniformity {
        let k = self.edges[0].len();
        if self.edges.iter().all(|e| e.len() == k) {
            Uniformity::Uniform(k)
        } else {
            Uniformity::NonUniform
        }
    }

    pub fn max_edge_size(&self) -> usize {
        self.max_edge_size
    }

    /// Distinct type signatures observed among edges, with edge counts, in
    /// ascending signature order.
    pub fn type_signatures(&self) -> &[(Signature, usize)] {
        &self.signatures
    }

    pub fn has_signature(&self, sig: &[NodeTypeId]) -> bool {
        self.signature_set.contains(sig)
    }

    /// Sorted type multiset of `nodes`.
    pub fn signature_of(&self, nodes: &[NodeId]) -> Signature {
        signature_of(&self.node_types, nodes)
    }

    /// Writes the edge list, one canonical edge per line, labels separated
    /// by single spaces.
    pub fn write_edges<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for e in &self.edges {
            let line: Vec<&str> = e.nodes().iter().map(|&v| self.label(v)).collect();
            writeln!(w, "{}", line.join(" "))?;
        }
        Ok(())
    }

    /// Writes `label<TAB>type` for every node in id order.
    pub fn write_types<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for (i, l) in self.labels.iter().enumerate() {
            writeln!(w, "{}\t{}", l, self.type_names[self.node_types[i].index()])?;
        }
        Ok(())
    }

    /// Labels of an edge, for messages and exports.
    pub fn edge_labels(&self, nodes: &[NodeId]) -> Vec<&str> {
        nodes.iter().map(|&v| self.label(v)).collect()
    }
}

fn skip_line(line: &str) -> bool {
    let t = line.trim();
    t.is_empty() || t.starts_with('#')
}

fn signature_of(types: &[NodeTypeId], nodes: &[NodeId]) -> Signature {
    let mut sig: Vec<NodeTypeId> = nodes.iter().map(|v| types[v.index()]).collect();
    sig.sort_unstable();
    sig
}

fn intersect_sorted(a: &[u32], b: &[u32]) -> Vec<u32> {
    let mut out = Vec::with_capacity(a.len().min(b.len()));
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                out.push(a[i]);
                i += 1;
                j += 1;
            }
        }
    }
    out
}


#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn loads_three_edges_fixture() {
        let g = three_edges();
        assert_eq!(g.node_count(), 6);
        assert_eq!(g.edge_count(), 3);
        assert_eq!(g.type_count(), 3);
        assert_eq!(g.uniformity(), Uniformity::Uniform(3));
        assert_eq!(g.duplicate_edges(), 0);
        // first-appearance interning
        assert_eq!(g.label(NodeId(0)), "a1");
        assert_eq!(g.label(NodeId(3)), "a2");
    }

    #[test]
    fn repeated_label_in_line_is_rejected() {
        let err = Hypergraph::parse("a1 a1 b1\n", THREE_EDGES_TYPES).unwrap_err();
        assert!(matches!(err, Error::DegenerateEdge { line: 1, .. }), "{err}");
    }

    #[test]
    fn single_label_line_is_degenerate() {
        let err = Hypergraph::parse("a1 b1\nc1\n", THREE_EDGES_TYPES).unwrap_err();
        assert!(matches!(err, Error::DegenerateEdge { line: 2, .. }), "{err}");
    }

    #[test]
    fn duplicate_edges_collapse() {
        let g = Hypergraph::parse("a1 b1 c1\nc1 a1 b1\n", THREE_EDGES_TYPES).unwrap();
        assert_eq!(g.edge_count(), 1);
        assert_eq!(g.duplicate_edges(), 1);
    }

    #[test]
    fn unknown_and_empty() {
        let err = Hypergraph::parse("a1 zz\n", THREE_EDGES_TYPES).unwrap_err();
        assert!(matches!(err, Error::UnknownNode { ref label, .. } if label == "zz"));
        let err = Hypergraph::parse("# only a comment\n\n", THREE_EDGES_TYPES).unwrap_err();
        assert!(matches!(err, Error::EmptyHypergraph));
    }

    #[test]
    fn tabs_and_comments() {
        let g = Hypergraph::parse("# header\na1\tb1\tc1\n", THREE_EDGES_TYPES).unwrap();
        assert_eq!(g.edge_count(), 1);
        // type-only nodes are kept as isolated nodes
        assert_eq!(g.node_count(), 6);
    }

    #[test]
    fn conflicting_types_rejected() {
        let err = Hypergraph::parse("a1 b1\n", "a1 a\na1 b\nb1 b\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
    }

    #[test]
    fn three_edges_neighbors() {
        let g = three_edges();
        let c1 = g.node_by_label("c1").unwrap();
        let mut want = ids(&g, &["a1", "a2", "a3", "b1", "b2"]);
        want.sort();
        assert_eq!(g.neighbors(c1).unwrap(), want.as_slice());
        let a1 = g.node_by_label("a1").unwrap();
        let mut want = ids(&g, &["b1", "c1"]);
        want.sort();
        assert_eq!(g.neighbors(a1).unwrap(), want.as_slice());
        assert!(matches!(g.neighbors(NodeId(99)), Err(Error::InvalidNode(99))));
    }

    #[test]
    fn isolated_node_has_no_neighbors() {
        let g = Hypergraph::parse("a1 b1 c1\n", THREE_EDGES_TYPES).unwrap();
        let a3 = g.node_by_label("a3").unwrap();
        assert!(g.neighbors(a3).unwrap().is_empty());
    }

    #[test]
    fn three_edges_subset_queries() {
        let g = three_edges();
        assert_eq!(g.edges_containing_all(&ids(&g, &["b1", "c1"])).unwrap(), vec![0, 1]);
        assert!(g.edges_containing_all(&ids(&g, &["a1", "b2"])).unwrap().is_empty());
        assert_eq!(g.edges_containing_all(&ids(&g, &["c1"])).unwrap(), vec![0, 1, 2]);
        assert!(matches!(g.edges_containing_all(&[]), Err(Error::EmptySubsetQuery)));
    }

    #[test]
    fn signatures() {
        let g = three_edges();
        assert_eq!(g.type_signatures().len(), 1);
        assert_eq!(g.type_signatures()[0].1, 3);
        let sig = g.signature_of(&ids(&g, &["c1", "a3", "b1"]));
        assert!(g.has_signature(&sig));
    }

    fn arb_graph() -> impl Strategy<Value = Hypergraph> {
        (3usize..12, 1usize..4).prop_flat_map(|(n, types)| {
            let edges = prop::collection::vec(prop::collection::btree_set(0..n as u32, 2..5), 1..50);
            let tys = prop::collection::vec(0..types as u16, n);
            (Just(n), Just(types), tys, edges)
        })
        .prop_map(|(n, types, tys, edges)| {
            let labels = (0..n).map(|i| format!("n{i}")).collect();
            let names = (0..types).map(|t| format!("t{t}")).collect();
            let tys = tys.into_iter().map(NodeTypeId).collect();
            let edges = edges
                .into_iter()
                .map(|s| Hyperedge::new(s.into_iter().map(NodeId)).unwrap())
                .collect();
            Hypergraph::from_parts(labels, names, tys, edges).unwrap()
        })
    }

    proptest! {
        #[test]
        fn neighbors_match_brute_force(g in arb_graph()) {
            for v in 0..g.node_count() {
                let v = NodeId::from(v);
                let mut brute: Vec<NodeId> = g.edges().iter()
                    .filter(|e| e.contains(v))
                    .flat_map(|e| e.nodes().iter().copied())
                    .filter(|&u| u != v)
                    .collect();
                brute.sort();
                brute.dedup();
                prop_assert_eq!(g.neighbors(v).unwrap(), brute.as_slice());
            }
        }

        #[test]
        fn subset_queries_match_brute_force(g in arb_graph()) {
            for e in g.edges() {
                let nodes = e.nodes();
                // every non-empty subset of the edge
                for mask in 1u32..(1 << nodes.len()) {
                    let subset: Vec<NodeId> = (0..nodes.len())
                        .filter(|i| mask & (1 << i) != 0)
                        .map(|i| nodes[i])
                        .collect();
                    let brute: Vec<usize> = g.edges().iter().enumerate()
                        .filter(|(_, f)| f.contains_all(&subset))
                        .map(|(i, _)| i)
                        .collect();
                    prop_assert_eq!(g.edges_containing_all(&subset).unwrap(), brute);
                }
            }
        }

        #[test]
        fn serialize_roundtrip_is_idempotent(g in arb_graph()) {
            let mut edges = Vec::new();
            let mut types = Vec::new();
            g.write_edges(&mut edges).unwrap();
            g.write_types(&mut types).unwrap();
            let h = Hypergraph::parse(
                std::str::from_utf8(&edges).unwrap(),
                std::str::from_utf8(&types).unwrap(),
            ).unwrap();
            let label_edges = |x: &Hypergraph| {
                let mut s: Vec<Vec<String>> = x.edges().iter().map(|e| {
                    let mut l: Vec<String> = x.edge_labels(e.nodes()).into_iter().map(String::from).collect();
                    l.sort();
                    l
                }).collect();
                s.sort();
                s
            };
            let type_map = |x: &Hypergraph| {
                let mut m: Vec<(String, String)> = (0..x.node_count())
                    .map(|i| (x.label(NodeId::from(i)).to_string(), x.type_name(x.node_type(NodeId::from(i))).to_string()))
                    .collect();
                m.sort();
                m
            };
            prop_assert_eq!(label_edges(&g), label_edges(&h));
            prop_assert_eq!(type_map(&g), type_map(&h));
            // once ids follow file order, further round trips are byte-identical
            let (mut e1, mut t1) = (Vec::new(), Vec::new());
            h.write_edges(&mut e1).unwrap();
            h.write_types(&mut t1).unwrap();
            let h2 = Hypergraph::parse(
                std::str::from_utf8(&e1).unwrap(),
                std::str::from_utf8(&t1).unwrap(),
            ).unwrap();
            let (mut e2, mut t2) = (Vec::new(), Vec::new());
            h2.write_edges(&mut e2).unwrap();
            h2.write_types(&mut t2).unwrap();
            prop_assert_eq!(e1, e2);
            prop_assert_eq!(t1, t2);
        }
    }
}
