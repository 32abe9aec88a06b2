//! JSON documents for graphs, paths, operators, tuples, functionals, ideals, block
//! operators and interpolation problems.

use std::path::{Path as FsPath, PathBuf};
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::caratheodory::InterpolationProblem;
use crate::error::{Error, Result};
use crate::fock::{FockSpace, Operator, SymbolicOperator};
use crate::graph::{DirectedGraph, GraphDoc};
use crate::linalg::{CMat, CVec, Subspace};
use crate::semigroupoid::Path;
use crate::wold::PartialIsometryTuple;

pub type ComplexDoc = [f64; 2];

fn complex(z: &ComplexDoc) -> Complex64 {
    Complex64::new(z[0], z[1])
}

pub fn complex_doc(z: Complex64) -> ComplexDoc {
    [z.re, z.im]
}

/// A template name (`free:2`), a file name relative to the referring document, or an inline graph.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GraphRef {
    Name(String),
    Inline(GraphDoc),
}

/// Resolves graph references and nested file names against one directory.
#[derive(Clone, Debug, Default)]
pub struct Loader {
    base: PathBuf,
}

impl Loader {
    pub fn new(base: impl Into<PathBuf>) -> Self {
        Loader { base: base.into() }
    }

    pub fn for_file(file: &FsPath) -> Self {
        Loader::new(file.parent().map(FsPath::to_path_buf).unwrap_or_default())
    }

    pub fn read(&self, name: &str) -> Result<String> {
        let p = self.base.join(name);
        std::fs::read_to_string(&p).map_err(|e| Error::Malformed(format!("{}: {e}", p.display())))
    }

    pub fn graph(&self, r: &GraphRef) -> Result<Arc<DirectedGraph>> {
        let g = match r {
            GraphRef::Inline(doc) => DirectedGraph::from_doc(doc)?,
            GraphRef::Name(name) => match DirectedGraph::template(name) {
                Ok(g) => g,
                Err(Error::UnknownTemplate(_)) if !looks_like_template(name) => {
                    DirectedGraph::parse(&self.read(name)?)?
                }
                Err(e) => return Err(e),
            },
        };
        Ok(Arc::new(g))
    }

    /// A graph argument: template name or graph file.
    pub fn graph_arg(arg: &str) -> Result<Arc<DirectedGraph>> {
        Loader::default().graph(&GraphRef::Name(arg.to_string()))
    }
}

fn looks_like_template(name: &str) -> bool {
    name.split_once(':')
        .is_some_and(|(k, n)| matches!(k, "cycle" | "free" | "cinf") && n.chars().all(|c| c.is_ascii_digit()))
}

/// `{"vertex": "v"}` or the list of edge names with `edges[0]` applied last.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PathDoc {
    Vertex { vertex: String },
    Edges(Vec<String>),
}

impl PathDoc {
    pub fn resolve(&self, g: &DirectedGraph) -> Result<Path> {
        match self {
            PathDoc::Vertex { vertex } => Path::vertex_named(g, vertex),
            PathDoc::Edges(names) if names.is_empty() => Err(Error::InvalidPath("empty edge list".into())),
            PathDoc::Edges(names) => Path::from_names(g, names),
        }
    }

    pub fn of(g: &DirectedGraph, p: &Path) -> PathDoc {
        if p.is_vertex() {
            PathDoc::Vertex {
                vertex: g.vertex_name(p.dst()).to_string(),
            }
        } else {
            PathDoc::Edges(p.edge_names(g).into_iter().map(str::to_string).collect())
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermDoc {
    pub path: PathDoc,
    pub coeff: ComplexDoc,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub graph: Option<GraphRef>,
    pub terms: Vec<TermDoc>,
}

impl OperatorDoc {
    /// The operator's own graph, or `fallback` when the document has none.
    pub fn load(&self, loader: &Loader, fallback: Option<&Arc<DirectedGraph>>) -> Result<SymbolicOperator> {
        let g = match (&self.graph, fallback) {
            (Some(r), _) => loader.graph(r)?,
            (None, Some(g)) => g.clone(),
            (None, None) => return Err(Error::Malformed("operator document names no graph".into())),
        };
        if let Some(f) = fallback {
            if **f != *g {
                return Err(Error::SpaceMismatch);
            }
        }
        let terms = self
            .terms
            .iter()
            .map(|t| Ok((t.path.resolve(&g)?, complex(&t.coeff))))
            .collect::<Result<Vec<_>>>()?;
        Ok(SymbolicOperator::new(&g, terms))
    }

    pub fn of(op: &SymbolicOperator) -> OperatorDoc {
        let g = op.graph();
        OperatorDoc {
            graph: Some(GraphRef::Inline(g.to_doc())),
            terms: op
                .terms()
                .iter()
                .map(|(p, a)| TermDoc {
                    path: PathDoc::of(g, p),
                    coeff: complex_doc(*a),
                })
                .collect(),
        }
    }
}

/// `{"dim": n, "entries": [[i, j, re, im], …]}`; `cols` defaults to `dim`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixDoc {
    pub dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cols: Option<usize>,
    pub entries: Vec<(usize, usize, f64, f64)>,
}

impl MatrixDoc {
    pub fn to_matrix(&self) -> Result<CMat> {
        let cols = self.cols.unwrap_or(self.dim);
        let mut m = CMat::zeros(self.dim, cols);
        for &(i, j, re, im) in &self.entries {
            if i >= self.dim || j >= cols {
                return Err(Error::Malformed(format!(
                    "entry ({i}, {j}) outside a {}×{cols} matrix",
                    self.dim
                )));
            }
            m[(i, j)] += Complex64::new(re, im);
        }
        Ok(m)
    }

    pub fn of(m: &CMat) -> MatrixDoc {
        let mut entries = Vec::new();
        for j in 0..m.ncols() {
            for i in 0..m.nrows() {
                let z = m[(i, j)];
                if z.norm() > 0.0 {
                    entries.push((i, j, z.re, z.im));
                }
            }
        }
        entries.sort_by_key(|e| (e.0, e.1));
        MatrixDoc {
            dim: m.nrows(),
            cols: (m.ncols() != m.nrows()).then_some(m.ncols()),
            entries,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TupleDoc {
    pub dim: usize,
    pub ops: Vec<MatrixDoc>,
    #[serde(default = "default_tuple_tol")]
    pub tol: f64,
    /// Coordinates spanning the subspace on which the relations are checked.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interior: Option<Vec<usize>>,
}

fn default_tuple_tol() -> f64 {
    1e-8
}

impl TupleDoc {
    pub fn matrices(&self) -> Result<Vec<CMat>> {
        self.ops
            .iter()
            .map(|m| {
                let a = m.to_matrix()?;
                if a.shape() != (self.dim, self.dim) {
                    return Err(Error::DimensionMismatch {
                        expected: self.dim,
                        found: a.nrows().max(a.ncols()),
                    });
                }
                Ok(a)
            })
            .collect()
    }

    pub fn tuple(&self) -> Result<PartialIsometryTuple> {
        let t = PartialIsometryTuple::new(self.matrices()?, self.tol)?;
        match &self.interior {
            None => Ok(t),
            Some(idx) => {
                if let Some(&bad) = idx.iter().find(|&&i| i >= self.dim) {
                    return Err(Error::Malformed(format!(
                        "interior coordinate {bad} outside dimension {}",
                        self.dim
                    )));
                }
                t.with_interior(Subspace::coordinate(self.dim, idx))
            }
        }
    }

    /// The creation operators of `space` with interior `H_{K−1}`.
    pub fn generators(space: &FockSpace, tol: f64) -> Result<TupleDoc> {
        let ops = (0..space.graph().num_edges())
            .map(|e| {
                let d = space.dim();
                let entries = (0..d)
                    .filter_map(|i| {
                        let p = space.path(i);
                        let q = crate::semigroupoid::compose(&Path::edge(space.graph(), e), p)?;
                        space.index_of(&q).map(|j| (j, i, 1.0, 0.0))
                    })
                    .collect();
                MatrixDoc {
                    dim: d,
                    cols: None,
                    entries,
                }
            })
            .collect();
        Ok(TupleDoc {
            dim: space.dim(),
            ops,
            tol,
            interior: Some(space.interior(1)?),
        })
    }
}

pub fn vector(v: &[ComplexDoc]) -> CVec {
    CVec::from_iterator(v.len(), v.iter().map(complex))
}

pub fn vector_doc(v: &CVec) -> Vec<ComplexDoc> {
    v.iter().map(|z| complex_doc(*z)).collect()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctionalDoc {
    pub rank: usize,
    pub x: Vec<Vec<ComplexDoc>>,
    pub y: Vec<Vec<ComplexDoc>>,
}

impl FunctionalDoc {
    pub fn vectors(&self) -> Result<(Vec<CVec>, Vec<CVec>)> {
        if self.x.len() != self.rank || self.y.len() != self.rank {
            return Err(Error::Malformed(format!(
                "rank {} with {} left and {} right vectors",
                self.rank,
                self.x.len(),
                self.y.len()
            )));
        }
        Ok((
            self.x.iter().map(|v| vector(v)).collect(),
            self.y.iter().map(|v| vector(v)).collect(),
        ))
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IdealDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub graph: Option<GraphRef>,
    pub two_sided: bool,
    pub generators: Vec<OperatorDoc>,
}

impl IdealDoc {
    pub fn load(&self, loader: &Loader) -> Result<(Arc<DirectedGraph>, Vec<SymbolicOperator>)> {
        let g = shared_graph(loader, self.graph.as_ref(), self.generators.iter())?;
        let gens = self
            .generators
            .iter()
            .map(|d| d.load(loader, Some(&g)))
            .collect::<Result<Vec<_>>>()?;
        Ok((g, gens))
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlockDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub graph: Option<GraphRef>,
    pub n: usize,
    pub blocks: Vec<Vec<OperatorDoc>>,
}

impl BlockDoc {
    pub fn load(&self, loader: &Loader) -> Result<(Arc<DirectedGraph>, Vec<Vec<SymbolicOperator>>)> {
        if self.blocks.len() != self.n || self.blocks.iter().any(|r| r.len() != self.n) {
            return Err(Error::Malformed(format!("blocks must form an {0}×{0} array", self.n)));
        }
        let g = shared_graph(loader, self.graph.as_ref(), self.blocks.iter().flatten())?;
        let blocks = self
            .blocks
            .iter()
            .map(|row| row.iter().map(|d| d.load(loader, Some(&g))).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        Ok((g, blocks))
    }
}

/// An operator document, or a block operator document.
#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum AnyOperatorDoc {
    Block(BlockDoc),
    Single(OperatorDoc),
}

impl AnyOperatorDoc {
    pub fn load(&self, loader: &Loader) -> Result<(Arc<DirectedGraph>, Vec<Vec<SymbolicOperator>>)> {
        match self {
            AnyOperatorDoc::Block(b) => b.load(loader),
            AnyOperatorDoc::Single(o) => {
                let op = o.load(loader, None)?;
                Ok((op.graph().clone(), vec![vec![op]]))
            }
        }
    }
}

fn shared_graph<'a>(
    loader: &Loader,
    top: Option<&GraphRef>,
    ops: impl Iterator<Item = &'a OperatorDoc>,
) -> Result<Arc<DirectedGraph>> {
    let mut found: Option<Arc<DirectedGraph>> = top.map(|r| loader.graph(r)).transpose()?;
    for op in ops {
        if let Some(r) = &op.graph {
            let g = loader.graph(r)?;
            match &found {
                Some(f) if **f != *g => return Err(Error::SpaceMismatch),
                Some(_) => {}
                None => found = Some(g),
            }
        }
    }
    found.ok_or_else(|| Error::Malformed("no graph given".into()))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataDoc {
    pub path: PathDoc,
    #[serde(rename = "C")]
    pub c: Vec<Vec<ComplexDoc>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemDoc {
    pub graph: GraphRef,
    pub block_size: usize,
    pub data: Vec<DataDoc>,
}

impl ProblemDoc {
    pub fn load(&self, loader: &Loader) -> Result<InterpolationProblem> {
        let g = loader.graph(&self.graph)?;
        let k = self.block_size;
        let data = self
            .data
            .iter()
            .map(|d| {
                let p = d.path.resolve(&g)?;
                if d.c.len() != k || d.c.iter().any(|r| r.len() != k) {
                    return Err(Error::DataMismatch(format!(
                        "coefficient of `{}` is not {k}×{k}",
                        p.display(&g)
                    )));
                }
                let m = CMat::from_fn(k, k, |i, j| complex(&d.c[i][j]));
                Ok((p, m))
            })
            .collect::<Result<Vec<_>>>()?;
        InterpolationProblem::new(g, k, data)
    }
}

/// Evaluates symbolic operators on a space, rejecting a graph mismatch.
pub fn at_space(space: &Arc<FockSpace>, ops: &[SymbolicOperator]) -> Result<Vec<Operator>> {
    ops.iter().map(|o| o.at(space)).collect()
}
