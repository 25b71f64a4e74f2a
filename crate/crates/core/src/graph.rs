//! Multigraph reduction calculus and the incidence map `ℓ_Γ`.
//!
//! Rules: (1) remove an edge; (2) remove a looped vertex with all its edges;
//! (3) at a looped vertex `v`, replace an edge `v–w` (`w ≠ v`) by a loop at `w`.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::FieldSpec;
use crate::matrix::Matrix;

/// Unordered vertex pair, stored with `a ≤ b`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Edge {
    a: String,
    b: String,
}

impl Edge {
    pub fn new(x: impl Into<String>, y: impl Into<String>) -> Self {
        let (x, y) = (x.into(), y.into());
        if x <= y {
            Edge { a: x, b: y }
        } else {
            Edge { a: y, b: x }
        }
    }

    pub fn is_loop(&self) -> bool {
        self.a == self.b
    }

    pub fn endpoints(&self) -> (&str, &str) {
        (&self.a, &self.b)
    }

    pub fn touches(&self, v: &str) -> bool {
        self.a == v || self.b == v
    }

    fn other(&self, v: &str) -> &str {
        if self.a == v {
            &self.b
        } else {
            &self.a
        }
    }
}

impl Serialize for Edge {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        (&self.a, &self.b).serialize(s)
    }
}

impl<'de> Deserialize<'de> for Edge {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let (x, y) = <(String, String)>::deserialize(d)?;
        Ok(Edge::new(x, y))
    }
}

impl fmt::Display for Edge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}–{}", self.a, self.b)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Multigraph {
    vertices: BTreeSet<String>,
    /// Edge multiplicities.
    edges: BTreeMap<Edge, usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct GraphWire {
    vertices: Vec<String>,
    edges: Vec<(String, String)>,
}

impl Multigraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_vertex(&mut self, v: impl Into<String>) {
        self.vertices.insert(v.into());
    }

    pub fn add_edge(&mut self, x: impl Into<String>, y: impl Into<String>) -> Result<()> {
        let e = Edge::new(x, y);
        for v in [&e.a, &e.b] {
            if !self.vertices.contains(v) {
                return Err(Error::Precondition(format!("edge endpoint {v} is not a vertex")));
            }
        }
        *self.edges.entry(e).or_default() += 1;
        Ok(())
    }

    pub fn vertices(&self) -> impl Iterator<Item = &str> {
        self.vertices.iter().map(String::as_str)
    }

    /// Edges with repetition, in sorted order.
    pub fn edges(&self) -> impl Iterator<Item = &Edge> {
        self.edges.iter().flat_map(|(e, &c)| std::iter::repeat_n(e, c))
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.values().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty() && self.edges.is_empty()
    }

    pub fn has_loop(&self, v: &str) -> bool {
        self.edges.contains_key(&Edge::new(v, v))
    }

    fn take_edge(&mut self, e: &Edge) -> bool {
        match self.edges.get_mut(e) {
            Some(c) => {
                *c -= 1;
                if *c == 0 {
                    self.edges.remove(e);
                }
                true
            }
            None => false,
        }
    }

    /// Connected components as sorted vertex sets.
    pub fn components(&self) -> Vec<BTreeSet<String>> {
        let adj = self.adjacency();
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for v in &self.vertices {
            if seen.contains(v.as_str()) {
                continue;
            }
            let mut comp = BTreeSet::new();
            let mut stack = vec![v.as_str()];
            while let Some(x) = stack.pop() {
                if !seen.insert(x) {
                    continue;
                }
                comp.insert(x.to_string());
                stack.extend(adj[x].iter().copied());
            }
            out.push(comp);
        }
        out
    }

    fn adjacency(&self) -> BTreeMap<&str, BTreeSet<&str>> {
        let mut adj: BTreeMap<&str, BTreeSet<&str>> = self.vertices.iter().map(|v| (v.as_str(), BTreeSet::new())).collect();
        for e in self.edges.keys() {
            adj.get_mut(e.a.as_str()).unwrap().insert(&e.b);
            adj.get_mut(e.b.as_str()).unwrap().insert(&e.a);
        }
        adj
    }

    /// Applies `step` if its precondition holds.
    pub fn apply(&self, step: &ReductionStep) -> Option<Multigraph> {
        let mut g = self.clone();
        match step {
            ReductionStep::RemoveEdge { edge: e } => g.take_edge(e).then_some(g),
            ReductionStep::RemoveLoopedVertex { vertex: v } => {
                if !self.has_loop(v) {
                    return None;
                }
                g.vertices.remove(v);
                g.edges.retain(|e, _| !e.touches(v));
                Some(g)
            }
            ReductionStep::MigrateEdge { looped, to } => {
                if looped == to || !self.has_loop(looped) || !g.take_edge(&Edge::new(looped.as_str(), to.as_str())) {
                    return None;
                }
                *g.edges.entry(Edge::new(to.as_str(), to.as_str())).or_default() += 1;
                Some(g)
            }
        }
    }

    /// Every rule application available in this state.
    pub fn applicable_steps(&self) -> Vec<ReductionStep> {
        let mut out: Vec<ReductionStep> = self.edges.keys().map(|e| ReductionStep::RemoveEdge { edge: e.clone() }).collect();
        for v in self.vertices.iter().filter(|v| self.has_loop(v)) {
            out.push(ReductionStep::RemoveLoopedVertex { vertex: v.clone() });
            for e in self.edges.keys().filter(|e| e.touches(v) && !e.is_loop()) {
                out.push(ReductionStep::MigrateEdge { looped: v.clone(), to: e.other(v).to_string() });
            }
        }
        out
    }

    pub fn to_json(&self) -> serde_json::Value {
        let wire = GraphWire {
            vertices: self.vertices.iter().cloned().collect(),
            edges: self.edges().map(|e| (e.a.clone(), e.b.clone())).collect(),
        };
        serde_json::to_value(wire).expect("graph serializes")
    }

    pub fn from_json(v: &serde_json::Value) -> Result<Self> {
        let wire: GraphWire = serde_json::from_value(v.clone()).map_err(|e| Error::Parse(e.to_string()))?;
        let mut g = Multigraph::new();
        for v in wire.vertices {
            g.add_vertex(v);
        }
        for (x, y) in wire.edges {
            g.add_edge(x, y).map_err(|e| Error::Parse(e.to_string()))?;
        }
        Ok(g)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum ReductionStep {
    RemoveEdge { edge: Edge },
    RemoveLoopedVertex { vertex: String },
    MigrateEdge { looped: String, to: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ReductionCertificate(pub Vec<ReductionStep>);

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Reduction {
    Certificate(ReductionCertificate),
    /// A connected component without loops; no rule ever creates a loop in it.
    Obstruction(BTreeSet<String>),
}

/// Reduces each component from its looped vertices outward: in BFS order,
/// every vertex migrates its tree edges to its children and is then removed.
pub fn reduce(g: &Multigraph) -> Reduction {
    let comps = g.components();
    if let Some(bad) = comps.iter().find(|c| !c.iter().any(|v| g.has_loop(v))) {
        return Reduction::Obstruction(bad.clone());
    }
    let adj = g.adjacency();
    let mut steps = Vec::new();
    let mut seen: BTreeSet<&str> = g.vertices.iter().map(String::as_str).filter(|v| g.has_loop(v)).collect();
    let mut queue: VecDeque<&str> = seen.iter().copied().collect();
    while let Some(v) = queue.pop_front() {
        for &w in &adj[v] {
            if seen.insert(w) {
                steps.push(ReductionStep::MigrateEdge { looped: v.to_string(), to: w.to_string() });
                queue.push_back(w);
            }
        }
        steps.push(ReductionStep::RemoveLoopedVertex { vertex: v.to_string() });
    }
    Reduction::Certificate(ReductionCertificate(steps))
}

/// Whether `cert` applies step by step and ends in the empty graph.
pub fn replay(g: &Multigraph, cert: &ReductionCertificate) -> bool {
    let mut state = g.clone();
    for step in &cert.0 {
        match state.apply(step) {
            Some(next) => state = next,
            None => return false,
        }
    }
    state.is_empty()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct IncidenceRank {
    pub surjective: bool,
    pub rank: usize,
}

/// The `|V| × |E|` matrix of `ℓ_Γ`; a loop contributes once to its vertex.
pub fn incidence_matrix(g: &Multigraph, field: FieldSpec) -> Matrix {
    let index: BTreeMap<&str, usize> = g.vertices().enumerate().map(|(i, v)| (v, i)).collect();
    let mut m = Matrix::zeros(field, g.vertex_count(), g.edge_count());
    for (j, e) in g.edges().enumerate() {
        m.set(index[e.a.as_str()], j, field.one());
        m.set(index[e.b.as_str()], j, field.one());
    }
    m
}

pub fn incidence_rank_check(g: &Multigraph, field: FieldSpec) -> IncidenceRank {
    let rank = incidence_matrix(g, field).rank();
    IncidenceRank { surjective: rank == g.vertex_count(), rank }
}

pub fn char2_vertex(i: usize, j: usize) -> String {
    format!("E[{i},{j}]")
}

/// The multigraph of the derivative of `(P, Q) ↦ PS + PᵀSᵀ + RQ + RᵀQᵀ`
/// modulo `E_{n,n}` at the nilpotent Jordan block `R` and anti-identity `S`.
pub fn char2_gamma(n: usize) -> Result<Multigraph> {
    if n < 2 {
        return Err(Error::Precondition(format!("n = {n} is below 2")));
    }
    let mut g = Multigraph::new();
    for i in 1..=n {
        for j in 1..=n {
            if (i, j) != (n, n) {
                g.add_vertex(char2_vertex(i, j));
            }
        }
    }
    let mut join = |ends: &[(usize, usize)]| -> Result<()> {
        let kept: Vec<String> = ends.iter().filter(|&&e| e != (n, n)).map(|&(i, j)| char2_vertex(i, j)).collect();
        match kept.as_slice() {
            [a] => g.add_edge(a.clone(), a.clone()),
            [a, b] => g.add_edge(a.clone(), b.clone()),
            _ => Ok(()),
        }
    };
    for i in 1..=n {
        for j in 1..=n {
            if i != j {
                join(&[(i, n + 1 - j), (j, n + 1 - i)])?;
            }
        }
    }
    for k in 1..=n {
        for l in 1..=n {
            if (k, l) == (1, n) {
                continue;
            }
            let mut ends = Vec::new();
            if k > 1 {
                ends.push((k - 1, l));
            }
            if l < n {
                ends.push((l + 1, k));
            }
            join(&ends)?;
        }
    }
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn graph(vs: &[&str], es: &[(&str, &str)]) -> Multigraph {
        let mut g = Multigraph::new();
        for v in vs {
            g.add_vertex(*v);
        }
        for (a, b) in es {
            g.add_edge(*a, *b).unwrap();
        }
        g
    }

    fn certificate(g: &Multigraph) -> ReductionCertificate {
        match reduce(g) {
            Reduction::Certificate(c) => c,
            Reduction::Obstruction(c) => panic!("obstruction {c:?}"),
        }
    }

    #[test]
    fn single_vertex() {
        let g = graph(&["v"], &[("v", "v")]);
        assert_eq!(certificate(&g).0, vec![ReductionStep::RemoveLoopedVertex { vertex: "v".into() }]);
        let bare = graph(&["v"], &[]);
        assert_eq!(reduce(&bare), Reduction::Obstruction(["v".to_string()].into()));
    }

    #[test]
    fn path_with_looped_ends() {
        let g = graph(&["a", "b", "c", "d"], &[("a", "a"), ("a", "b"), ("b", "c"), ("c", "d"), ("d", "d")]);
        let cert = certificate(&g);
        assert!(replay(&g, &cert));
        let mut short = cert.clone();
        short.0.pop();
        assert!(!replay(&g, &short));
        assert!(!replay(&graph(&["x"], &[("x", "x")]), &cert));
    }

    #[test]
    fn incidence_examples() {
        let g = graph(&["v"], &[("v", "v")]);
        assert_eq!(incidence_rank_check(&g, FieldSpec::Finite(2)), IncidenceRank { surjective: true, rank: 1 });
        let e = graph(&["v", "w"], &[("v", "w")]);
        assert_eq!(incidence_rank_check(&e, FieldSpec::Finite(2)), IncidenceRank { surjective: false, rank: 1 });
    }

    #[test]
    fn json_round_trip() {
        let json = serde_json::json!({"vertices": ["a", "b"], "edges": [["a", "a"], ["b", "a"]]});
        let g = Multigraph::from_json(&json).unwrap();
        assert_eq!(g.to_json(), serde_json::json!({"vertices": ["a", "b"], "edges": [["a", "a"], ["a", "b"]]}));
        assert!(Multigraph::from_json(&serde_json::json!({"vertices": ["a"], "edges": [["a", "z"]]})).is_err());
        let cert = certificate(&g);
        let text = serde_json::to_string(&cert).unwrap();
        assert_eq!(serde_json::from_str::<ReductionCertificate>(&text).unwrap(), cert);
        let step = serde_json::to_value(ReductionStep::RemoveEdge { edge: Edge::new("b", "a") }).unwrap();
        assert_eq!(step, serde_json::json!({"rule": "remove_edge", "edge": ["a", "b"]}));
    }

    #[test]
    fn char2_loops() {
        for n in 2..=6 {
            let g = char2_gamma(n).unwrap();
            assert_eq!(g.vertex_count(), n * n - 1);
            for k in 2..=n {
                assert!(g.has_loop(&char2_vertex(k, 1)), "n={n} k={k}");
            }
            for l in 1..n {
                assert!(g.has_loop(&char2_vertex(l, n)), "n={n} l={l}");
            }
            let e11 = Edge::new(char2_vertex(1, 1), char2_vertex(1, 1));
            let loops_at_e11 = g.edges().filter(|e| **e == e11).count();
            assert_eq!(loops_at_e11, if n == 2 { 3 } else { 2 });
            assert!(replay(&g, &certificate(&g)));
            assert!(incidence_rank_check(&g, FieldSpec::Finite(2)).surjective);
        }
        assert!(char2_gamma(1).is_err());
    }
}
