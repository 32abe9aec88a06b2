//! Generalized Toeplitz matrices over a left lower set and the Carathéodory feasibility test.
//!
//! Only finite lower sets are supported. Assembly is combinatorial and never touches a
//! truncated Fock space.

use std::collections::HashMap;
use std::sync::Arc;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::DirectedGraph;
use crate::linalg::{singular_values, spectral_norm, CMat};
use crate::semigroupoid::{compose, sort_canonical, LowerSet, Path};

pub const FEASIBILITY_TOL: f64 = 1e-9;
pub const AMPLIATION_TOL: f64 = 1e-9;

#[derive(Clone, Debug)]
pub struct InterpolationProblem {
    graph: Arc<DirectedGraph>,
    lower_set: LowerSet,
    block_size: usize,
    data: HashMap<Path, CMat>,
}

impl InterpolationProblem {
    /// The keys of `data` are the lower set.
    pub fn new(graph: Arc<DirectedGraph>, block_size: usize, data: Vec<(Path, CMat)>) -> Result<Self> {
        if block_size == 0 {
            return Err(Error::DataMismatch("block size must be at least 1".into()));
        }
        let mut map = HashMap::with_capacity(data.len());
        for (p, c) in data {
            if c.nrows() != block_size || c.ncols() != block_size {
                return Err(Error::DataMismatch(format!(
                    "coefficient of `{}` is {}×{}, expected {block_size}×{block_size}",
                    p.display(&graph),
                    c.nrows(),
                    c.ncols()
                )));
            }
            if c.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                return Err(Error::DataMismatch(format!(
                    "coefficient of `{}` is not finite",
                    p.display(&graph)
                )));
            }
            if map.insert(p.clone(), c).is_some() {
                return Err(Error::DataMismatch(format!(
                    "duplicate coefficient for `{}`",
                    p.display(&graph)
                )));
            }
        }
        let keys: Vec<Path> = map.keys().cloned().collect();
        let lower_set = crate::semigroupoid::validate_lower_set(&graph, &keys)?;
        Ok(InterpolationProblem {
            graph,
            lower_set,
            block_size,
            data: map,
        })
    }

    /// Scalar data (`k = 1`).
    pub fn scalar(graph: Arc<DirectedGraph>, data: Vec<(Path, Complex64)>) -> Result<Self> {
        Self::new(
            graph,
            1,
            data.into_iter()
                .map(|(p, c)| (p, CMat::from_element(1, 1, c)))
                .collect(),
        )
    }

    pub fn graph(&self) -> &Arc<DirectedGraph> {
        &self.graph
    }

    pub fn lower_set(&self) -> &LowerSet {
        &self.lower_set
    }

    pub fn block_size(&self) -> usize {
        self.block_size
    }

    pub fn coefficient(&self, w: &Path) -> Option<&CMat> {
        self.data.get(w)
    }

    /// The same data on `Λ' ⊆ Λ`.
    pub fn restrict(&self, sub: &LowerSet) -> Result<Self> {
        let data =
            sub.paths()
                .iter()
                .map(|p| {
                    self.data.get(p).map(|c| (p.clone(), c.clone())).ok_or_else(|| {
                        Error::DataMismatch(format!("`{}` is not in the lower set", p.display(&self.graph)))
                    })
                })
                .collect::<Result<Vec<_>>>()?;
        Self::new(self.graph.clone(), self.block_size, data)
    }

    pub fn scaled(&self, t: f64) -> Self {
        let mut out = self.clone();
        for c in out.data.values_mut() {
            *c *= Complex64::new(t, 0.0);
        }
        out
    }
}

/// Block pattern of a generalized Toeplitz matrix: block `(i, j)` carries `C_w` with
/// `rows[i] = w · cols[j]`.
#[derive(Clone, Debug)]
pub struct ToeplitzPattern {
    pub rows: Vec<Path>,
    pub cols: Vec<Path>,
    pub entries: Vec<(usize, usize, Path)>,
}

/// `w` with `w' = w · u`, if `u` is a right factor of `w'`.
fn left_complement(g: &DirectedGraph, wp: &Path, u: &Path) -> Result<Option<Path>> {
    if u.len() > wp.len() || u.src() != wp.src() || wp.edges()[wp.len() - u.len()..] != *u.edges() {
        return Ok(None);
    }
    let head = &wp.edges()[..wp.len() - u.len()];
    let w = if head.is_empty() {
        Path::vertex(u.dst())
    } else {
        Path::from_edges(g, head.to_vec())?
    };
    if compose(&w, u).as_ref() != Some(wp) {
        return Err(Error::InvariantViolation(format!(
            "factorization of `{}` through `{}` is not unique",
            wp.display(g),
            u.display(g)
        )));
    }
    Ok(Some(w))
}

impl ToeplitzPattern {
    pub fn assemble(g: &DirectedGraph, rows: Vec<Path>, cols: Vec<Path>, lambda: &LowerSet) -> Result<Self> {
        let mut entries = Vec::new();
        for (i, wp) in rows.iter().enumerate() {
            for (j, u) in cols.iter().enumerate() {
                if let Some(w) = left_complement(g, wp, u)? {
                    if lambda.contains(&w) {
                        entries.push((i, j, w));
                    }
                }
            }
        }
        Ok(ToeplitzPattern { rows, cols, entries })
    }

    /// Rows `Λ`, columns the right factors of members of `Λ`.
    pub fn compressed(g: &DirectedGraph, lambda: &LowerSet) -> Result<Self> {
        let mut cols: Vec<Path> = lambda.paths().iter().flat_map(|w| w.right_factors(g)).collect();
        sort_canonical(g, &mut cols);
        cols.dedup();
        Self::assemble(g, lambda.paths().to_vec(), cols, lambda)
    }

    pub fn numeric(&self, p: &InterpolationProblem) -> Result<CMat> {
        let k = p.block_size;
        let mut m = CMat::zeros(self.rows.len() * k, self.cols.len() * k);
        for (i, j, w) in &self.entries {
            let c = p
                .coefficient(w)
                .ok_or_else(|| Error::DataMismatch(format!("no coefficient for `{}`", w.display(&p.graph))))?;
            m.view_mut((i * k, j * k), (k, k)).copy_from(c);
        }
        Ok(m)
    }

    /// Opaque labels `a_w`, one line per row, zeros printed as `0`.
    pub fn render_symbolic(&self, g: &DirectedGraph) -> String {
        let mut grid = vec![vec!["0".to_string(); self.cols.len()]; self.rows.len()];
        for (i, j, w) in &self.entries {
            grid[*i][*j] = format!("a_{}", word_label(g, w));
        }
        let width = grid.iter().flatten().map(|s| s.chars().count()).max().unwrap_or(1);
        grid.iter()
            .map(|row| {
                row.iter()
                    .map(|s| format!("{s:<width$}"))
                    .collect::<Vec<_>>()
                    .join(" ")
                    .trim_end()
                    .to_string()
            })
            .collect::<Vec<_>>()
            .join("\n")
    }

    pub fn nonzero_blocks(&self) -> usize {
        self.entries.len()
    }
}

/// Edge names concatenated; a vertex is `φ` on one-vertex graphs and its name otherwise.
pub fn word_label(g: &DirectedGraph, w: &Path) -> String {
    if w.is_vertex() {
        return if g.num_vertices() == 1 {
            "φ".to_string()
        } else {
            g.vertex_name(w.dst()).to_string()
        };
    }
    let names = w.edge_names(g);
    if names.iter().all(|n| n.chars().count() == 1) {
        names.concat()
    } else {
        names.join(".")
    }
}

pub fn build_compressed_matrix(p: &InterpolationProblem) -> Result<(ToeplitzPattern, CMat)> {
    let pattern = ToeplitzPattern::compressed(&p.graph, &p.lower_set)?;
    let m = pattern.numeric(p)?;
    Ok((pattern, m))
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct Feasibility {
    pub feasible: bool,
    pub norm: f64,
    pub tol: f64,
}

pub fn feasibility(p: &InterpolationProblem, tol: f64) -> Result<Feasibility> {
    let (_, m) = build_compressed_matrix(p)?;
    let norm = spectral_norm(&m)?;
    Ok(Feasibility {
        feasible: norm <= 1.0 + tol,
        norm,
        tol,
    })
}

#[derive(Clone, Debug)]
pub struct LevelMatrices {
    pub level: usize,
    pub a_pattern: ToeplitzPattern,
    pub b_pattern: ToeplitzPattern,
    pub a: CMat,
    pub b: CMat,
    pub norm_a: f64,
    pub norm_b: f64,
    /// Largest gap between the singular values of `B_j` and those of `A_j ⊗ I_n`, computed
    /// when the graph is a single vertex with `n` loops and `Λ` holds every word up to `j + 1`.
    pub ampliation_defect: Option<f64>,
}

fn is_full_free(g: &DirectedGraph, lambda: &LowerSet, level: usize) -> bool {
    let n = g.num_edges();
    g.num_vertices() == 1 && {
        let expected: usize = (0..=level as u32).map(|i| n.pow(i)).sum();
        lambda.truncate(level).len() == expected
    }
}

/// `A_j = E_j X E_j` and `B_j = E_{j+1} X (E_{j+1} − E_0)` assembled from the data.
pub fn toeplitz_level_matrices(p: &InterpolationProblem, j: usize) -> Result<LevelMatrices> {
    let g = &p.graph;
    let lambda = &p.lower_set;
    if lambda.max_len() < j + 1 {
        return Err(Error::InsufficientDepth {
            needed: j + 1,
            available: lambda.max_len(),
        });
    }
    let level = |k: usize| -> Vec<Path> { lambda.paths().iter().filter(|w| w.len() <= k).cloned().collect() };
    let rows_a = level(j);
    let a_pattern = ToeplitzPattern::assemble(g, rows_a.clone(), rows_a, lambda)?;
    let rows_b = level(j + 1);
    let cols_b: Vec<Path> = rows_b.iter().filter(|w| !w.is_vertex()).cloned().collect();
    let b_pattern = ToeplitzPattern::assemble(g, rows_b, cols_b, lambda)?;
    let a = a_pattern.numeric(p)?;
    let b = b_pattern.numeric(p)?;
    let ampliation_defect = if is_full_free(g, lambda, j + 1) {
        let n = g.num_edges();
        let mut expected: Vec<f64> = singular_values(&a)
            .into_iter()
            .flat_map(|s| std::iter::repeat_n(s, n))
            .collect();
        let mut found = singular_values(&b);
        expected.sort_by(|x, y| y.total_cmp(x));
        found.sort_by(|x, y| y.total_cmp(x));
        if expected.len() != found.len() {
            return Err(Error::InvariantViolation(format!(
                "B_{j} has {} singular values, A_{j} ⊗ I_{n} has {}",
                found.len(),
                expected.len()
            )));
        }
        let gap = expected
            .iter()
            .zip(&found)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max);
        if gap > AMPLIATION_TOL {
            return Err(Error::InvariantViolation(format!(
                "singular values of B_{j} differ from those of A_{j} ⊗ I_{n} by {gap:e}"
            )));
        }
        Some(gap)
    } else {
        None
    };
    Ok(LevelMatrices {
        level: j,
        norm_a: spectral_norm(&a)?,
        norm_b: spectral_norm(&b)?,
        a_pattern,
        b_pattern,
        a,
        b,
        ampliation_defect,
    })
}
