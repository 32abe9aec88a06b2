//! Paths of the free semigroupoid of a graph.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashSet};

use crate::error::{Error, Result};
use crate::graph::{DirectedGraph, EdgeId, VertexId};

/// A path `w = e_m ... e_1` stored in written (operator) order: `edges[0]` is applied last.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Path {
    edges: Vec<EdgeId>,
    src: VertexId,
    dst: VertexId,
}

impl Path {
    pub fn vertex(v: VertexId) -> Path {
        Path {
            edges: Vec::new(),
            src: v,
            dst: v,
        }
    }

    pub fn edge(g: &DirectedGraph, e: EdgeId) -> Path {
        let edge = g.edge(e);
        Path {
            edges: vec![e],
            src: edge.src,
            dst: edge.dst,
        }
    }

    /// Path from edge ids in written order; checks composability.
    pub fn from_edges(g: &DirectedGraph, edges: Vec<EdgeId>) -> Result<Path> {
        let Some(&last) = edges.last() else {
            return Err(Error::InvalidPath("empty edge list; use a vertex path".into()));
        };
        if let Some(bad) = edges.iter().find(|&&e| e >= g.num_edges()) {
            return Err(Error::InvalidPath(format!("edge index {bad} out of range")));
        }
        for pair in edges.windows(2) {
            let (outer, inner) = (g.edge(pair[0]), g.edge(pair[1]));
            if outer.src != inner.dst {
                return Err(Error::InvalidPath(format!(
                    "`{}` cannot follow `{}`",
                    outer.name, inner.name
                )));
            }
        }
        Ok(Path {
            src: g.edge(last).src,
            dst: g.edge(edges[0]).dst,
            edges,
        })
    }

    /// Path from edge names in written order.
    pub fn from_names<S: AsRef<str>>(g: &DirectedGraph, names: &[S]) -> Result<Path> {
        let ids = names
            .iter()
            .map(|n| g.edge_id(n.as_ref()))
            .collect::<Result<Vec<_>>>()?;
        Path::from_edges(g, ids)
    }

    pub fn vertex_named(g: &DirectedGraph, name: &str) -> Result<Path> {
        Ok(Path::vertex(g.vertex_id(name)?))
    }

    pub fn edges(&self) -> &[EdgeId] {
        &self.edges
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_vertex(&self) -> bool {
        self.edges.is_empty()
    }

    /// Initial vertex `k1` in `w = k2 w k1`.
    pub fn src(&self) -> VertexId {
        self.src
    }

    /// Final vertex `k2` in `w = k2 w k1`.
    pub fn dst(&self) -> VertexId {
        self.dst
    }

    pub fn edge_names<'g>(&self, g: &'g DirectedGraph) -> Vec<&'g str> {
        self.edges.iter().map(|&e| g.edge(e).name.as_str()).collect()
    }

    /// Edge names concatenated, or the vertex name for a vertex path.
    pub fn display(&self, g: &DirectedGraph) -> String {
        if self.is_vertex() {
            g.vertex_name(self.src).to_string()
        } else {
            let names = self.edge_names(g);
            if names.iter().all(|n| n.chars().count() == 1) {
                names.concat()
            } else {
                names.join("·")
            }
        }
    }

    /// Canonical order: length first, then lexicographic on edge names in written order;
    /// vertices compare by rank.
    pub fn canonical_cmp(&self, other: &Path, g: &DirectedGraph) -> Ordering {
        self.len().cmp(&other.len()).then_with(|| {
            if self.is_vertex() {
                self.src.cmp(&other.src)
            } else {
                self.edge_names(g).cmp(&other.edge_names(g))
            }
        })
    }

    /// Prefixes `u` with `w = u v`, shortest first (the final vertex of `w` comes first).
    pub fn left_factors(&self, g: &DirectedGraph) -> Vec<Path> {
        (0..=self.len())
            .map(|i| {
                if i == 0 {
                    Path::vertex(self.dst)
                } else {
                    Path {
                        edges: self.edges[..i].to_vec(),
                        src: g.edge(self.edges[i - 1]).src,
                        dst: self.dst,
                    }
                }
            })
            .collect()
    }

    /// Suffixes `v` with `w = u v`, shortest first (the initial vertex of `w` comes first).
    pub fn right_factors(&self, g: &DirectedGraph) -> Vec<Path> {
        let n = self.len();
        (0..=n)
            .map(|i| {
                if i == 0 {
                    Path::vertex(self.src)
                } else {
                    Path {
                        edges: self.edges[n - i..].to_vec(),
                        src: self.src,
                        dst: g.edge(self.edges[n - i]).dst,
                    }
                }
            })
            .collect()
    }
}

/// `uv` when `src(u) = dst(v)`, otherwise `None`.
pub fn compose(u: &Path, v: &Path) -> Option<Path> {
    if u.src != v.dst {
        return None;
    }
    let mut edges = u.edges.clone();
    edges.extend_from_slice(&v.edges);
    Some(Path {
        edges,
        src: v.src,
        dst: u.dst,
    })
}

/// True iff `v = u1 w u2` for some paths `u1`, `u2`.
pub fn contains_factor(g: &DirectedGraph, v: &Path, w: &Path) -> bool {
    if w.is_vertex() {
        return v.src == w.src
            || v.edges
                .iter()
                .any(|&e| g.edge(e).dst == w.src || g.edge(e).src == w.src);
    }
    if w.len() > v.len() {
        return false;
    }
    v.edges.windows(w.len()).any(|win| win == w.edges.as_slice())
}

pub fn sort_canonical(g: &DirectedGraph, paths: &mut [Path]) {
    paths.sort_by(|a, b| a.canonical_cmp(b, g));
}

/// All paths of length at most `depth` in canonical order.
pub fn enumerate_paths(g: &DirectedGraph, depth: usize) -> Vec<Path> {
    enumerate_paths_capped(g, depth, usize::MAX).expect("uncapped enumeration")
}

/// As [`enumerate_paths`], failing once more than `cap` paths would be produced.
pub fn enumerate_paths_capped(g: &DirectedGraph, depth: usize, cap: usize) -> Result<Vec<Path>> {
    let mut all: Vec<Path> = (0..g.num_vertices()).map(Path::vertex).collect();
    let mut level = all.clone();
    let mut sorted_edges: Vec<EdgeId> = (0..g.num_edges()).collect();
    sorted_edges.sort_by(|&a, &b| g.edge(a).name.cmp(&g.edge(b).name));
    for _ in 0..depth {
        // Extending each sorted level path on the left by edges in name order keeps lex order.
        let mut next = Vec::new();
        for &e in &sorted_edges {
            let ep = Path::edge(g, e);
            for p in &level {
                if let Some(q) = compose(&ep, p) {
                    next.push(q);
                }
            }
        }
        if all.len() + next.len() > cap {
            return Err(Error::DimensionCap {
                dim: all.len() + next.len(),
                cap,
            });
        }
        all.extend(next.iter().cloned());
        level = next;
        if level.is_empty() {
            break;
        }
    }
    Ok(all)
}

/// A finite set of paths closed under left factors, kept in canonical order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LowerSet {
    paths: Vec<Path>,
    members: HashSet<Path>,
}

impl LowerSet {
    pub fn paths(&self) -> &[Path] {
        &self.paths
    }

    pub fn contains(&self, p: &Path) -> bool {
        self.members.contains(p)
    }

    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }

    pub fn max_len(&self) -> usize {
        self.paths.iter().map(Path::len).max().unwrap_or(0)
    }

    /// Members of length at most `k`.
    pub fn truncate(&self, k: usize) -> LowerSet {
        let paths: Vec<Path> = self.paths.iter().filter(|p| p.len() <= k).cloned().collect();
        LowerSet {
            members: paths.iter().cloned().collect(),
            paths,
        }
    }

    /// All paths of length at most `k`.
    pub fn full(g: &DirectedGraph, k: usize) -> LowerSet {
        let paths = enumerate_paths(g, k);
        LowerSet {
            members: paths.iter().cloned().collect(),
            paths,
        }
    }
}

/// Pairs `(w, u)` with `w = uv` in the set but `u` missing.
pub fn lower_set_violations(g: &DirectedGraph, paths: &[Path]) -> Vec<(Path, Path)> {
    let set: HashSet<&Path> = paths.iter().collect();
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for w in paths {
        for u in w.left_factors(g) {
            if !set.contains(&u) && seen.insert((w.clone(), u.clone())) {
                out.push((w.clone(), u));
            }
        }
    }
    out
}

pub fn validate_lower_set(g: &DirectedGraph, paths: &[Path]) -> Result<LowerSet> {
    let violations = lower_set_violations(g, paths);
    if !violations.is_empty() {
        return Err(Error::NotLowerSet(
            violations.iter().map(|(w, u)| (w.display(g), u.display(g))).collect(),
        ));
    }
    let mut sorted: Vec<Path> = paths.to_vec();
    sort_canonical(g, &mut sorted);
    sorted.dedup();
    Ok(LowerSet {
        members: sorted.iter().cloned().collect(),
        paths: sorted,
    })
}

/// Allowable paths using exactly the letters of `w`, in canonical order.
pub fn permutation_orbit(g: &DirectedGraph, w: &Path) -> Vec<Path> {
    if w.is_vertex() {
        return vec![w.clone()];
    }
    let mut counts: BTreeMap<EdgeId, usize> = BTreeMap::new();
    for &e in &w.edges {
        *counts.entry(e).or_default() += 1;
    }
    let mut out = Vec::new();
    let mut current = Vec::with_capacity(w.len());
    fn extend(
        g: &DirectedGraph,
        counts: &mut BTreeMap<EdgeId, usize>,
        current: &mut Vec<EdgeId>,
        total: usize,
        out: &mut Vec<Path>,
    ) {
        if current.len() == total {
            out.push(Path::from_edges(g, current.clone()).expect("composable by construction"));
            return;
        }
        let letters: Vec<EdgeId> = counts.iter().filter(|(_, &c)| c > 0).map(|(&e, _)| e).collect();
        for e in letters {
            if let Some(&prev) = current.last() {
                if g.edge(prev).src != g.edge(e).dst {
                    continue;
                }
            }
            *counts.get_mut(&e).unwrap() -= 1;
            current.push(e);
            extend(g, counts, current, total, out);
            current.pop();
            *counts.get_mut(&e).unwrap() += 1;
        }
    }
    extend(g, &mut counts, &mut current, w.len(), &mut out);
    sort_canonical(g, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn names(g: &DirectedGraph, ps: &[Path]) -> Vec<String> {
        ps.iter().map(|p| p.display(g)).collect()
    }

    fn g1loop() -> DirectedGraph {
        DirectedGraph::new(["v"], [("e", "v", "v")], false).unwrap()
    }

    #[test]
    fn enumeration_examples() {
        let g = g1loop();
        assert_eq!(names(&g, &enumerate_paths(&g, 3)), ["v", "e", "ee", "eee"]);
        let f = DirectedGraph::template("free:2").unwrap();
        assert_eq!(
            names(&f, &enumerate_paths(&f, 2)),
            ["v", "1", "2", "11", "12", "21", "22"]
        );
        let c2 = DirectedGraph::template("cycle:2").unwrap();
        let ps = enumerate_paths(&c2, 2);
        assert_eq!(names(&c2, &ps), ["1", "2", "a", "b", "ab", "ba"]);
        // Brute force: every composable pair of edges appears once.
        let pairs = (0..2)
            .flat_map(|x| (0..2).map(move |y| (x, y)))
            .filter(|&(x, y)| c2.edge(x).src == c2.edge(y).dst)
            .count();
        assert_eq!(ps.iter().filter(|p| p.len() == 2).count(), pairs);
    }

    #[test]
    fn path_endpoints() {
        let c2 = DirectedGraph::template("cycle:2").unwrap();
        let ba = Path::from_names(&c2, &["b", "a"]).unwrap();
        assert_eq!(c2.vertex_name(ba.src()), "1");
        assert_eq!(c2.vertex_name(ba.dst()), "1");
        assert!(Path::from_names(&c2, &["a", "a"]).is_err());
        assert!(Path::from_names(&c2, &["z"]).is_err());
    }

    #[test]
    fn compose_examples() {
        let g = g1loop();
        let e = Path::edge(&g, 0);
        assert_eq!(compose(&e, &e).unwrap().display(&g), "ee");
        let c2 = DirectedGraph::template("cycle:2").unwrap();
        let a = Path::from_names(&c2, &["a"]).unwrap();
        assert!(compose(&a, &a).is_none());
        let k = Path::vertex(a.dst());
        assert_eq!(compose(&k, &a).unwrap(), a);
        assert_eq!(compose(&a, &Path::vertex(a.src())).unwrap(), a);
    }

    #[test]
    fn factor_examples() {
        let g = g1loop();
        let e = Path::edge(&g, 0);
        let ee = compose(&e, &e).unwrap();
        assert!(contains_factor(&g, &ee, &e));
        let f = DirectedGraph::template("free:2").unwrap();
        let w12 = Path::from_names(&f, &["1", "2"]).unwrap();
        let w21 = Path::from_names(&f, &["2", "1"]).unwrap();
        assert!(!contains_factor(&f, &w12, &w21));
        let c2 = DirectedGraph::template("cycle:2").unwrap();
        let ba = Path::from_names(&c2, &["b", "a"]).unwrap();
        let a = Path::from_names(&c2, &["a"]).unwrap();
        assert!(contains_factor(&c2, &ba, &a));
        // Factorization ba = b . a . (vertex 1).
        let b = Path::from_names(&c2, &["b"]).unwrap();
        assert_eq!(compose(&compose(&b, &a).unwrap(), &Path::vertex(a.src())).unwrap(), ba);
        assert!(contains_factor(&c2, &ba, &Path::vertex(1)));
    }

    #[test]
    fn lower_set_examples() {
        let g = g1loop();
        assert!(validate_lower_set(&g, &enumerate_paths(&g, 4)).is_ok());
        let ee = Path::from_names(&g, &["e", "e"]).unwrap();
        let v = lower_set_violations(&g, &[ee.clone()]);
        let missing: Vec<String> = v.iter().map(|(_, u)| u.display(&g)).collect();
        assert_eq!(missing, ["v", "e"]);
        assert!(matches!(validate_lower_set(&g, &[ee]), Err(Error::NotLowerSet(_))));
        let ok = validate_lower_set(&g, &[Path::vertex(0), Path::edge(&g, 0)]).unwrap();
        assert_eq!(ok.len(), 2);
    }

    #[test]
    fn orbit_examples() {
        let f = DirectedGraph::template("free:2").unwrap();
        let w = Path::from_names(&f, &["1", "2"]).unwrap();
        assert_eq!(names(&f, &permutation_orbit(&f, &w)), ["12", "21"]);
        let c2 = DirectedGraph::template("cycle:2").unwrap();
        let ba = Path::from_names(&c2, &["b", "a"]).unwrap();
        assert_eq!(names(&c2, &permutation_orbit(&c2, &ba)), ["ab", "ba"]);
        let g = g1loop();
        let ee = Path::from_names(&g, &["e", "e"]).unwrap();
        assert_eq!(permutation_orbit(&g, &ee), vec![ee]);
    }

    #[test]
    fn left_and_right_factors() {
        let f = DirectedGraph::template("free:2").unwrap();
        let w = Path::from_names(&f, &["1", "2", "2"]).unwrap();
        assert_eq!(names(&f, &w.left_factors(&f)), ["v", "1", "12", "122"]);
        assert_eq!(names(&f, &w.right_factors(&f)), ["v", "2", "22", "122"]);
    }

    #[test]
    fn free_counts() {
        for n in 2..4usize {
            let g = DirectedGraph::template(&format!("free:{n}")).unwrap();
            for k in 0..5u32 {
                let expect = (n.pow(k + 1) - 1) / (n - 1);
                assert_eq!(enumerate_paths(&g, k as usize).len(), expect);
            }
        }
    }

    #[test]
    fn cap_is_enforced() {
        let g = DirectedGraph::template("free:3").unwrap();
        assert!(matches!(
            enumerate_paths_capped(&g, 6, 100),
            Err(Error::DimensionCap { .. })
        ));
    }

    fn graphs() -> Vec<DirectedGraph> {
        vec![
            DirectedGraph::template("free:2").unwrap(),
            DirectedGraph::template("cycle:3").unwrap(),
            DirectedGraph::new(["u", "v"], [("e", "u", "v"), ("f", "v", "v"), ("g", "v", "u")], false).unwrap(),
        ]
    }

    proptest! {
        #[test]
        fn compose_is_associative(gi in 0usize..3, a in 0usize..40, b in 0usize..40, c in 0usize..40) {
            let g = &graphs()[gi];
            let ps = enumerate_paths(g, 3);
            let (x, y, z) = (&ps[a % ps.len()], &ps[b % ps.len()], &ps[c % ps.len()]);
            let left = compose(x, y).and_then(|xy| compose(&xy, z));
            let right = compose(y, z).and_then(|yz| compose(x, &yz));
            prop_assert_eq!(left, right);
        }

        #[test]
        fn factor_laws(gi in 0usize..3, a in 0usize..40, b in 0usize..40) {
            let g = &graphs()[gi];
            let ps = enumerate_paths(g, 3);
            let (v, w) = (&ps[a % ps.len()], &ps[b % ps.len()]);
            prop_assert!(contains_factor(g, w, w));
            if contains_factor(g, v, w) {
                prop_assert!(v.len() >= w.len());
            }
        }

        #[test]
        fn counts_monotone_and_lower(gi in 0usize..3, k in 0usize..5) {
            let g = &graphs()[gi];
            let a = enumerate_paths(g, k);
            let b = enumerate_paths(g, k + 1);
            prop_assert!(a.len() <= b.len());
            prop_assert!(validate_lower_set(g, &b).is_ok());
            let mut sorted = b.clone();
            sort_canonical(g, &mut sorted);
            prop_assert_eq!(sorted, b);
        }
    }
}
