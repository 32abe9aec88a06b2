//! Directed graphs, the JSON graph format and the entrance predicates.

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type VertexId = usize;
pub type EdgeId = usize;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Edge {
    pub name: String,
    pub src: VertexId,
    pub dst: VertexId,
}

#[derive(Clone, Debug)]
pub struct DirectedGraph {
    vertices: Vec<String>,
    edges: Vec<Edge>,
    allow_boundary_sinks: bool,
    truncated: bool,
    vertex_index: HashMap<String, VertexId>,
    edge_index: HashMap<String, EdgeId>,
}

impl PartialEq for DirectedGraph {
    fn eq(&self, other: &Self) -> bool {
        self.vertices == other.vertices
            && self.edges == other.edges
            && self.allow_boundary_sinks == other.allow_boundary_sinks
    }
}

impl Eq for DirectedGraph {}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphDoc {
    pub vertices: Vec<String>,
    pub edges: Vec<EdgeDoc>,
    #[serde(default)]
    pub allow_boundary_sinks: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeDoc {
    pub name: String,
    pub src: String,
    pub dst: String,
}

impl DirectedGraph {
    /// Builds and validates a graph from vertex names and `(name, src, dst)` triples.
    pub fn new<V, E, S>(vertices: V, edges: E, allow_boundary_sinks: bool) -> Result<Self>
    where
        V: IntoIterator<Item = S>,
        S: Into<String>,
        E: IntoIterator<Item = (S, S, S)>,
    {
        let vertices: Vec<String> = vertices.into_iter().map(Into::into).collect();
        let mut vertex_index = HashMap::new();
        for (i, v) in vertices.iter().enumerate() {
            if vertex_index.insert(v.clone(), i).is_some() {
                return Err(Error::DuplicateVertex(v.clone()));
            }
        }
        let mut built = Vec::new();
        let mut edge_index = HashMap::new();
        for (name, src, dst) in edges {
            let (name, src, dst): (String, String, String) = (name.into(), src.into(), dst.into());
            let lookup = |v: &String| {
                vertex_index.get(v).copied().ok_or_else(|| Error::DanglingVertex {
                    edge: name.clone(),
                    vertex: v.clone(),
                })
            };
            let (s, d) = (lookup(&src)?, lookup(&dst)?);
            if edge_index.insert(name.clone(), built.len()).is_some() {
                return Err(Error::DuplicateEdge(name));
            }
            built.push(Edge { name, src: s, dst: d });
        }
        let g = DirectedGraph {
            vertices,
            edges: built,
            allow_boundary_sinks,
            truncated: false,
            vertex_index,
            edge_index,
        };
        if !allow_boundary_sinks {
            if let Some(v) = g.sinks().first() {
                return Err(Error::Sink(g.vertices[*v].clone()));
            }
        }
        Ok(g)
    }

    pub fn from_doc(doc: &GraphDoc) -> Result<Self> {
        Self::new(
            doc.vertices.iter().cloned(),
            doc.edges.iter().map(|e| (e.name.clone(), e.src.clone(), e.dst.clone())),
            doc.allow_boundary_sinks,
        )
    }

    pub fn to_doc(&self) -> GraphDoc {
        GraphDoc {
            vertices: self.vertices.clone(),
            edges: self
                .edges
                .iter()
                .map(|e| EdgeDoc {
                    name: e.name.clone(),
                    src: self.vertices[e.src].clone(),
                    dst: self.vertices[e.dst].clone(),
                })
                .collect(),
            allow_boundary_sinks: self.allow_boundary_sinks,
        }
    }

    /// Parses the JSON graph document.
    pub fn parse(text: &str) -> Result<Self> {
        let doc: GraphDoc = serde_json::from_str(text).map_err(|e| Error::Malformed(e.to_string()))?;
        Self::from_doc(&doc)
    }

    /// Built-in families: `cycle:n`, `free:n`, `cinf:n`.
    pub fn template(spec: &str) -> Result<Self> {
        let unknown = || Error::UnknownTemplate(spec.to_string());
        let (kind, n) = spec.split_once(':').ok_or_else(unknown)?;
        let n: usize = n.trim().parse().map_err(|_| unknown())?;
        if n == 0 {
            return Err(unknown());
        }
        match kind.trim() {
            "cycle" => {
                let names: Vec<String> = (1..=n).map(|i| i.to_string()).collect();
                let edges: Vec<(String, String, String)> = (0..n)
                    .map(|i| (letter_name(i, n), names[i].clone(), names[(i + 1) % n].clone()))
                    .collect();
                Self::new(names, edges, false)
            }
            "free" => Self::new(
                vec!["v".to_string()],
                (1..=n).map(|i| (i.to_string(), "v".to_string(), "v".to_string())),
                false,
            ),
            "cinf" => {
                let names: Vec<String> = (1..=n).map(|i| i.to_string()).collect();
                let edges: Vec<(String, String, String)> = (1..n)
                    .map(|i| (format!("e{i}"), names[i - 1].clone(), names[i].clone()))
                    .collect();
                let mut g = Self::new(names, edges, true)?;
                g.truncated = true;
                Ok(g)
            }
            _ => Err(unknown()),
        }
    }

    pub fn vertices(&self) -> &[String] {
        &self.vertices
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn allow_boundary_sinks(&self) -> bool {
        self.allow_boundary_sinks
    }

    /// True for depth-truncated templates of infinite graphs.
    pub fn is_truncated_template(&self) -> bool {
        self.truncated
    }

    pub fn vertex_name(&self, v: VertexId) -> &str {
        &self.vertices[v]
    }

    /// 1-based rank, the weight index of the vacuum sum.
    pub fn vertex_rank(&self, v: VertexId) -> usize {
        v + 1
    }

    pub fn vertex_id(&self, name: &str) -> Result<VertexId> {
        self.vertex_index
            .get(name)
            .copied()
            .ok_or_else(|| Error::UnknownVertex(name.to_string()))
    }

    pub fn edge_id(&self, name: &str) -> Result<EdgeId> {
        self.edge_index
            .get(name)
            .copied()
            .ok_or_else(|| Error::UnknownEdge(name.to_string()))
    }

    pub fn edge(&self, e: EdgeId) -> &Edge {
        &self.edges[e]
    }

    pub fn out_edges(&self, v: VertexId) -> impl Iterator<Item = EdgeId> + '_ {
        self.edges
            .iter()
            .enumerate()
            .filter(move |(_, e)| e.src == v)
            .map(|(i, _)| i)
    }

    pub fn in_edges(&self, v: VertexId) -> impl Iterator<Item = EdgeId> + '_ {
        self.edges
            .iter()
            .enumerate()
            .filter(move |(_, e)| e.dst == v)
            .map(|(i, _)| i)
    }

    pub fn sinks(&self) -> Vec<VertexId> {
        (0..self.num_vertices())
            .filter(|&v| self.out_edges(v).next().is_none())
            .collect()
    }

    /// Reverses every edge; vertex order and edge names are preserved.
    pub fn transpose(&self) -> DirectedGraph {
        let mut t = self.clone();
        for e in &mut t.edges {
            std::mem::swap(&mut e.src, &mut e.dst);
        }
        t.allow_boundary_sinks = self.allow_boundary_sinks || !t.sinks().is_empty();
        t
    }

    /// Same vertex and edge structure after renaming (`perm[v]` is the new index of `v`).
    pub fn relabel(&self, perm: &[VertexId]) -> Result<DirectedGraph> {
        let n = self.num_vertices();
        if perm.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: perm.len(),
            });
        }
        let mut names = vec![String::new(); n];
        for v in 0..n {
            names[perm[v]] = self.vertices[v].clone();
        }
        let edges = self.edges.iter().map(|e| {
            (
                e.name.clone(),
                self.vertices[e.src].clone(),
                self.vertices[e.dst].clone(),
            )
        });
        DirectedGraph::new(names, edges, self.allow_boundary_sinks)
    }

    /// Multiplicity matrix `m[src][dst]`.
    pub fn adjacency_counts(&self) -> Vec<Vec<usize>> {
        let n = self.num_vertices();
        let mut m = vec![vec![0; n]; n];
        for e in &self.edges {
            m[e.src][e.dst] += 1;
        }
        m
    }

    fn reach(&self, sources: &[VertexId], forward: bool) -> Vec<bool> {
        let mut seen = vec![false; self.num_vertices()];
        let mut queue: VecDeque<VertexId> = VecDeque::new();
        for &s in sources {
            if !seen[s] {
                seen[s] = true;
                queue.push_back(s);
            }
        }
        while let Some(v) = queue.pop_front() {
            for e in &self.edges {
                let (from, to) = if forward { (e.src, e.dst) } else { (e.dst, e.src) };
                if from == v && !seen[to] {
                    seen[to] = true;
                    queue.push_back(to);
                }
            }
        }
        seen
    }

    /// Vertices reachable from `sources` by directed paths (including the sources).
    pub fn forward_reachable(&self, sources: &[VertexId]) -> Vec<bool> {
        self.reach(sources, true)
    }

    /// Vertices lying on at least one closed path.
    pub fn cycle_vertices(&self) -> Vec<VertexId> {
        (0..self.num_vertices())
            .filter(|&v| {
                let succ: Vec<VertexId> = self.out_edges(v).map(|e| self.edges[e].dst).collect();
                self.forward_reachable(&succ)[v]
            })
            .collect()
    }

    /// `{k}` together with every vertex that starts a path ending at `k`.
    pub fn attractor_vertices(&self, k: &str) -> Result<BTreeSet<String>> {
        let id = self.vertex_id(k)?;
        Ok(self
            .reach(&[id], false)
            .iter()
            .enumerate()
            .filter(|(_, &r)| r)
            .map(|(v, _)| self.vertices[v].clone())
            .collect())
    }

    fn double_cycle_strict(&self, k: VertexId) -> bool {
        // BFS distances from k, then count closed walks of the minimal length.
        let n = self.num_vertices();
        let mut dist = vec![usize::MAX; n];
        dist[k] = 0;
        let mut queue = VecDeque::from([k]);
        while let Some(v) = queue.pop_front() {
            for e in self.out_edges(v) {
                let d = self.edges[e].dst;
                if dist[d] == usize::MAX {
                    dist[d] = dist[v] + 1;
                    queue.push_back(d);
                }
            }
        }
        let min_len = self
            .in_edges(k)
            .filter(|&e| dist[self.edges[e].src] != usize::MAX)
            .map(|e| dist[self.edges[e].src] + 1)
            .min();
        let Some(len) = min_len else { return false };
        let mut count = vec![0u8; n];
        count[k] = 1;
        for _ in 0..len {
            let mut next = vec![0u8; n];
            for e in &self.edges {
                next[e.dst] = next[e.dst].saturating_add(count[e.src]).min(2);
            }
            count = next;
        }
        count[k] >= 2
    }

    fn double_cycle_relaxed(&self, k: VertexId) -> bool {
        // First-return walks at k; two distinct ones, if any exist, have length at most 2n.
        let n = self.num_vertices();
        let mut count = vec![0u8; n];
        count[k] = 1;
        let mut returns = 0u8;
        for step in 0..(3 * n + 1) {
            let mut next = vec![0u8; n];
            for e in &self.edges {
                if e.src == k && step > 0 {
                    continue;
                }
                next[e.dst] = next[e.dst].saturating_add(count[e.src]).min(2);
            }
            returns = returns.saturating_add(next[k]).min(2);
            if returns >= 2 {
                return true;
            }
            count = next;
            count[k] = 0;
        }
        false
    }

    pub fn classify(&self, mode: DoubleCycleMode) -> Result<GraphClassification> {
        if self.truncated {
            return Err(Error::UnsupportedPredicate(
                "entrance predicates are only decided for finite graphs; this is a truncated infinite template".into(),
            ));
        }
        let n = self.num_vertices();
        let sinks = self.sinks();
        let cycles = self.cycle_vertices();
        let infinite_entrance = self.forward_reachable(&cycles).iter().all(|&r| r);
        let doubles: Vec<VertexId> = (0..n)
            .filter(|&k| match mode {
                DoubleCycleMode::StrictMinimalLength => self.double_cycle_strict(k),
                DoubleCycleMode::AnyTwoCycles => self.double_cycle_relaxed(k),
            })
            .collect();
        let aperiodic_entrance = n > 0 && self.forward_reachable(&doubles).iter().all(|&r| r);
        let verdict = if aperiodic_entrance {
            PartlyFreeVerdict::PartlyFree
        } else if infinite_entrance || sinks.is_empty() {
            PartlyFreeVerdict::NotPartlyFree
        } else {
            PartlyFreeVerdict::Inconclusive
        };
        Ok(GraphClassification {
            mode,
            has_sinks: !sinks.is_empty(),
            cycle_vertices: cycles.iter().map(|&v| self.vertices[v].clone()).collect(),
            uniform_infinite_path_entrance: infinite_entrance,
            double_cycle_vertices: doubles.iter().map(|&v| self.vertices[v].clone()).collect(),
            uniform_aperiodic_path_entrance: aperiodic_entrance,
            partly_free_verdict: verdict,
        })
    }
}

impl fmt::Display for DirectedGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{}", self.vertices.join(","))?;
        let edges: Vec<String> = self
            .edges
            .iter()
            .map(|e| format!("{}:{}→{}", e.name, self.vertices[e.src], self.vertices[e.dst]))
            .collect();
        if !edges.is_empty() {
            write!(f, "; {}", edges.join(", "))?;
        }
        write!(f, "}}")
    }
}

fn letter_name(i: usize, n: usize) -> String {
    if n <= 26 {
        ((b'a' + i as u8) as char).to_string()
    } else {
        format!("e{}", i + 1)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum DoubleCycleMode {
    #[default]
    StrictMinimalLength,
    AnyTwoCycles,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PartlyFreeVerdict {
    PartlyFree,
    NotPartlyFree,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphClassification {
    pub mode: DoubleCycleMode,
    pub has_sinks: bool,
    pub cycle_vertices: BTreeSet<String>,
    pub uniform_infinite_path_entrance: bool,
    pub double_cycle_vertices: BTreeSet<String>,
    pub uniform_aperiodic_path_entrance: bool,
    pub partly_free_verdict: PartlyFreeVerdict,
}

/// Brute-force isomorphism test on edge-multiplicity matrices.
pub fn isomorphic(g: &DirectedGraph, h: &DirectedGraph) -> bool {
    let n = g.num_vertices();
    if n != h.num_vertices() || g.num_edges() != h.num_edges() {
        return false;
    }
    let a = g.adjacency_counts();
    let b = h.adjacency_counts();
    let signature = |m: &Vec<Vec<usize>>, v: usize| {
        let out: usize = m[v].iter().sum();
        let inn: usize = m.iter().map(|r| r[v]).sum();
        (out, inn, m[v][v])
    };
    let mut map = vec![usize::MAX; n];
    let mut used = vec![false; n];
    fn extend(
        v: usize,
        a: &[Vec<usize>],
        b: &[Vec<usize>],
        map: &mut Vec<usize>,
        used: &mut Vec<bool>,
        sig_ok: &dyn Fn(usize, usize) -> bool,
    ) -> bool {
        let n = a.len();
        if v == n {
            return true;
        }
        for w in 0..n {
            if used[w] || !sig_ok(v, w) {
                continue;
            }
            let consistent = (0..v).all(|u| a[u][v] == b[map[u]][w] && a[v][u] == b[w][map[u]]);
            if !consistent {
                continue;
            }
            map[v] = w;
            used[w] = true;
            if extend(v + 1, a, b, map, used, sig_ok) {
                return true;
            }
            used[w] = false;
        }
        map[v] = usize::MAX;
        false
    }
    let sig_ok = |v: usize, w: usize| signature(&a, v) == signature(&b, w);
    extend(0, &a, &b, &mut map, &mut used, &sig_ok)
}
