//! Truncated Fock space `H_K` and the left/right creation operators on it.

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::graph::{DirectedGraph, EdgeId, VertexId};
use crate::linalg::{c64, spectral_norm, CMat, CVec, SparseMatrix, DROP_TOL};
use crate::semigroupoid::{compose, enumerate_paths_capped, sort_canonical, Path};

pub const DEFAULT_DIM_CAP: usize = 200_000;
/// Tolerance for asserted identities.
pub const ASSERT_TOL: f64 = 1e-10;
/// Fourier coefficients below this magnitude are dropped.
pub const FOURIER_TOL: f64 = 1e-12;

#[derive(Debug)]
pub struct FockSpace {
    graph: Arc<DirectedGraph>,
    depth: usize,
    basis: Vec<Path>,
    index: HashMap<Path, usize>,
    level_start: Vec<usize>,
    by_src: Vec<Vec<usize>>,
    by_dst: Vec<Vec<usize>>,
}

impl FockSpace {
    pub fn build(graph: Arc<DirectedGraph>, depth: usize) -> Result<Arc<FockSpace>> {
        Self::build_with_cap(graph, depth, DEFAULT_DIM_CAP)
    }

    pub fn build_with_cap(graph: Arc<DirectedGraph>, depth: usize, cap: usize) -> Result<Arc<FockSpace>> {
        if depth == 0 {
            return Err(Error::InvalidDepth(depth));
        }
        let basis = enumerate_paths_capped(&graph, depth, cap)?;
        let index = basis.iter().enumerate().map(|(i, p)| (p.clone(), i)).collect();
        let mut level_start = vec![0; depth + 2];
        for p in &basis {
            level_start[p.len() + 1] += 1;
        }
        for l in 1..level_start.len() {
            level_start[l] += level_start[l - 1];
        }
        let n = graph.num_vertices();
        let mut by_src = vec![Vec::new(); n];
        let mut by_dst = vec![Vec::new(); n];
        for (i, p) in basis.iter().enumerate() {
            by_src[p.src()].push(i);
            by_dst[p.dst()].push(i);
        }
        Ok(Arc::new(FockSpace {
            graph,
            depth,
            basis,
            index,
            level_start,
            by_src,
            by_dst,
        }))
    }

    pub fn graph(&self) -> &Arc<DirectedGraph> {
        &self.graph
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[Path] {
        &self.basis
    }

    pub fn path(&self, i: usize) -> &Path {
        &self.basis[i]
    }

    pub fn index_of(&self, p: &Path) -> Option<usize> {
        self.index.get(p).copied()
    }

    /// Basis index of the vertex path `k` (vertices come first).
    pub fn vertex_index(&self, k: VertexId) -> usize {
        k
    }

    /// Number of basis vectors of length at most `level`.
    pub fn interior_len(&self, level: usize) -> usize {
        self.level_start[(level + 1).min(self.depth + 1)]
    }

    /// Basis indices of `H_{K − margin}`.
    pub fn interior(&self, margin: usize) -> Result<Vec<usize>> {
        if margin > self.depth {
            return Err(Error::MarginExceedsDepth {
                margin,
                depth: self.depth,
            });
        }
        Ok((0..self.interior_len(self.depth - margin)).collect())
    }

    pub fn level_mask(&self, level: usize) -> Vec<bool> {
        let n = self.interior_len(level);
        (0..self.dim()).map(|i| i < n).collect()
    }

    /// Indices of paths with initial vertex `k`.
    pub fn with_src(&self, k: VertexId) -> &[usize] {
        &self.by_src[k]
    }

    /// Indices of paths with final vertex `k`.
    pub fn with_dst(&self, k: VertexId) -> &[usize] {
        &self.by_dst[k]
    }

    pub fn basis_vector(&self, i: usize) -> CVec {
        let mut v = CVec::zeros(self.dim());
        v[i] = c64(1.0, 0.0);
        v
    }

    pub fn path_vector(&self, p: &Path) -> Result<CVec> {
        let i = self
            .index_of(p)
            .ok_or_else(|| Error::InvalidPath(format!("`{}` is not in the truncation", p.display(&self.graph))))?;
        Ok(self.basis_vector(i))
    }

    /// `ξ_φ = Σ_k (1/k) ξ_k` with `k` the vertex rank; not normalized.
    pub fn vacuum_vector(&self) -> CVec {
        let mut v = CVec::zeros(self.dim());
        for k in 0..self.graph.num_vertices() {
            v[k] = c64(1.0 / self.graph.vertex_rank(k) as f64, 0.0);
        }
        v
    }

    /// Highest level carrying an entry above the storage threshold.
    pub fn support_degree(&self, v: &CVec) -> Option<usize> {
        (0..v.len())
            .rev()
            .find(|&i| v[i].norm() > DROP_TOL)
            .map(|i| self.basis[i].len())
    }

    /// `L_w v`, truncated.
    pub fn left_translate(&self, w: &Path, v: &CVec) -> CVec {
        let mut out = CVec::zeros(self.dim());
        for &i in &self.by_dst[w.src()] {
            if v[i].norm() == 0.0 {
                continue;
            }
            if let Some(j) = compose(w, &self.basis[i]).and_then(|p| self.index_of(&p)) {
                out[j] += v[i];
            }
        }
        out
    }

    /// `R_{w'} v`: every `ξ_u` goes to `ξ_{uw}`, truncated.
    pub fn right_translate(&self, w: &Path, v: &CVec) -> CVec {
        let mut out = CVec::zeros(self.dim());
        for &i in &self.by_src[w.dst()] {
            if v[i].norm() == 0.0 {
                continue;
            }
            if let Some(j) = compose(&self.basis[i], w).and_then(|p| self.index_of(&p)) {
                out[j] += v[i];
            }
        }
        out
    }

    /// Complex Gaussian vector supported on levels at most `max_level`.
    pub fn random_vector<R: Rng + ?Sized>(&self, max_level: usize, rng: &mut R) -> CVec {
        let n = self.interior_len(max_level);
        let mut v = CVec::zeros(self.dim());
        for i in 0..n {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            v[i] = c64(re, im);
        }
        v
    }
}

fn same_space(a: &Arc<FockSpace>, b: &Arc<FockSpace>) -> bool {
    Arc::ptr_eq(a, b) || (a.depth == b.depth && a.graph == b.graph)
}

/// A bounded operator on `H_K`, with its Fourier series when it was built symbolically.
#[derive(Clone, Debug)]
pub struct Operator {
    space: Arc<FockSpace>,
    matrix: SparseMatrix,
    fourier: Option<BTreeMap<usize, Complex64>>,
}

impl Operator {
    pub fn from_matrix(space: &Arc<FockSpace>, matrix: SparseMatrix) -> Result<Operator> {
        if matrix.nrows() != space.dim() || matrix.ncols() != space.dim() {
            return Err(Error::DimensionMismatch {
                expected: space.dim(),
                found: matrix.nrows().max(matrix.ncols()),
            });
        }
        Ok(Operator {
            space: space.clone(),
            matrix,
            fourier: None,
        })
    }

    pub fn from_dense(space: &Arc<FockSpace>, m: &CMat) -> Result<Operator> {
        Self::from_matrix(space, SparseMatrix::from_dense(m))
    }

    /// `Σ a_w L_w` truncated to `H_K`; terms longer than `K` vanish.
    pub fn from_fourier<I>(space: &Arc<FockSpace>, terms: I) -> Result<Operator>
    where
        I: IntoIterator<Item = (Path, Complex64)>,
    {
        let g = space.graph();
        let mut coeffs: BTreeMap<usize, Complex64> = BTreeMap::new();
        for (w, a) in terms {
            if w.src() >= g.num_vertices() || w.dst() >= g.num_vertices() {
                return Err(Error::InvalidPath("path does not belong to this graph".into()));
            }
            if let Some(i) = space.index_of(&w) {
                *coeffs.entry(i).or_default() += a;
            }
        }
        coeffs.retain(|_, a| a.norm() >= DROP_TOL);
        let mut triplets = Vec::new();
        for (&i, &a) in &coeffs {
            let w = space.path(i);
            for &u in space.with_dst(w.src()) {
                if w.len() + space.path(u).len() > space.depth() {
                    continue;
                }
                let wu = compose(w, space.path(u)).expect("composable by construction");
                triplets.push((space.index_of(&wu).expect("within depth"), u, a));
            }
        }
        Ok(Operator {
            space: space.clone(),
            matrix: SparseMatrix::from_triplets(space.dim(), space.dim(), triplets),
            fourier: Some(coeffs),
        })
    }

    pub fn identity(space: &Arc<FockSpace>) -> Operator {
        let terms = (0..space.graph().num_vertices()).map(|k| (Path::vertex(k), c64(1.0, 0.0)));
        Self::from_fourier(space, terms).expect("vertex paths are valid")
    }

    pub fn zero(space: &Arc<FockSpace>) -> Operator {
        Operator {
            space: space.clone(),
            matrix: SparseMatrix::zeros(space.dim(), space.dim()),
            fourier: Some(BTreeMap::new()),
        }
    }

    pub fn space(&self) -> &Arc<FockSpace> {
        &self.space
    }

    pub fn matrix(&self) -> &SparseMatrix {
        &self.matrix
    }

    pub fn to_dense(&self) -> CMat {
        self.matrix.to_dense()
    }

    /// Stored Fourier series keyed by basis index.
    pub fn fourier(&self) -> Option<&BTreeMap<usize, Complex64>> {
        self.fourier.as_ref()
    }

    /// Largest path length in the stored Fourier support.
    pub fn degree(&self) -> Option<usize> {
        self.fourier
            .as_ref()
            .map(|f| f.keys().map(|&i| self.space.path(i).len()).max().unwrap_or(0))
    }

    pub fn apply(&self, v: &CVec) -> CVec {
        self.matrix.mul_vec(v)
    }

    fn check(&self, other: &Operator) -> Result<()> {
        if same_space(&self.space, &other.space) {
            Ok(())
        } else {
            Err(Error::SpaceMismatch)
        }
    }

    pub fn mul(&self, other: &Operator) -> Result<Operator> {
        self.check(other)?;
        let fourier = match (&self.fourier, &other.fourier) {
            (Some(a), Some(b)) => {
                let mut out: BTreeMap<usize, Complex64> = BTreeMap::new();
                for (&i, &x) in a {
                    for (&j, &y) in b {
                        let p = compose(self.space.path(i), self.space.path(j));
                        if let Some(k) = p.and_then(|p| self.space.index_of(&p)) {
                            *out.entry(k).or_default() += x * y;
                        }
                    }
                }
                out.retain(|_, a| a.norm() >= DROP_TOL);
                Some(out)
            }
            _ => None,
        };
        Ok(Operator {
            space: self.space.clone(),
            matrix: self.matrix.mul(&other.matrix)?,
            fourier,
        })
    }

    fn combine(&self, other: &Operator, sign: f64) -> Result<Operator> {
        self.check(other)?;
        let fourier = match (&self.fourier, &other.fourier) {
            (Some(a), Some(b)) => {
                let mut out = a.clone();
                for (&k, &y) in b {
                    *out.entry(k).or_default() += y * sign;
                }
                out.retain(|_, a| a.norm() >= DROP_TOL);
                Some(out)
            }
            _ => None,
        };
        let matrix = if sign > 0.0 {
            self.matrix.add(&other.matrix)?
        } else {
            self.matrix.sub(&other.matrix)?
        };
        Ok(Operator {
            space: self.space.clone(),
            matrix,
            fourier,
        })
    }

    pub fn add(&self, other: &Operator) -> Result<Operator> {
        self.combine(other, 1.0)
    }

    pub fn sub(&self, other: &Operator) -> Result<Operator> {
        self.combine(other, -1.0)
    }

    pub fn scale(&self, c: Complex64) -> Operator {
        Operator {
            space: self.space.clone(),
            matrix: self.matrix.scale(c),
            fourier: self.fourier.as_ref().map(|f| {
                f.iter()
                    .map(|(&k, &a)| (k, a * c))
                    .filter(|(_, a)| a.norm() >= DROP_TOL)
                    .collect()
            }),
        }
    }

    pub fn adjoint(&self) -> Operator {
        Operator {
            space: self.space.clone(),
            matrix: self.matrix.adjoint(),
            fourier: None,
        }
    }

    /// `AB − BA`.
    pub fn commutator(&self, other: &Operator) -> Result<Operator> {
        self.mul(other)?.sub(&other.mul(self)?)
    }

    /// Replaces the stored series by the one read off the matrix.
    pub fn with_computed_fourier(&self) -> Operator {
        let mut out = self.clone();
        out.fourier = Some(
            fourier_coeffs(self)
                .into_iter()
                .map(|(p, a)| (self.space.index_of(&p).expect("basis path"), a))
                .collect(),
        );
        out
    }

    /// Norm of the compression to the listed basis columns (all rows kept).
    pub fn norm_on_columns(&self, cols: &[usize]) -> Result<f64> {
        spectral_norm(&self.matrix.select_columns(cols))
    }

    pub fn norm(&self) -> Result<f64> {
        spectral_norm(&self.matrix)
    }
}

pub fn left_op(space: &Arc<FockSpace>, e: EdgeId) -> Result<Operator> {
    if e >= space.graph().num_edges() {
        return Err(Error::UnknownEdge(format!("#{e}")));
    }
    lambda_word(space, &Path::edge(space.graph(), e))
}

/// `P_k`: keeps `ξ_w` exactly when the final vertex of `w` is `k`.
pub fn vertex_proj(space: &Arc<FockSpace>, k: VertexId) -> Result<Operator> {
    if k >= space.graph().num_vertices() {
        return Err(Error::UnknownVertex(format!("#{k}")));
    }
    lambda_word(space, &Path::vertex(k))
}

pub fn right_op(space: &Arc<FockSpace>, e: EdgeId) -> Result<Operator> {
    if e >= space.graph().num_edges() {
        return Err(Error::UnknownEdge(format!("#{e}")));
    }
    rho_word(space, &Path::edge(space.graph(), e))
}

/// `Q_k`: keeps `ξ_w` exactly when the initial vertex of `w` is `k`.
pub fn right_vertex_proj(space: &Arc<FockSpace>, k: VertexId) -> Result<Operator> {
    if k >= space.graph().num_vertices() {
        return Err(Error::UnknownVertex(format!("#{k}")));
    }
    rho_word(space, &Path::vertex(k))
}

pub fn lambda_word(space: &Arc<FockSpace>, w: &Path) -> Result<Operator> {
    Operator::from_fourier(space, [(w.clone(), c64(1.0, 0.0))])
}

/// `R_{w'}`: `ξ_v ↦ ξ_{vw}`.
pub fn rho_word(space: &Arc<FockSpace>, w: &Path) -> Result<Operator> {
    let mut t = Vec::new();
    for &v in space.with_src(w.dst()) {
        if let Some(j) = compose(space.path(v), w).and_then(|p| space.index_of(&p)) {
            t.push((j, v, c64(1.0, 0.0)));
        }
    }
    Operator::from_matrix(space, SparseMatrix::from_triplets(space.dim(), space.dim(), t))
}

/// `a_w = ⟨A ξ_{src w}, ξ_w⟩` for every basis path, dropping tiny values.
pub fn fourier_coeffs(a: &Operator) -> Vec<(Path, Complex64)> {
    let s = a.space();
    (0..s.dim())
        .filter_map(|i| {
            let p = s.path(i);
            let v = a.matrix().get(i, s.vertex_index(p.src()));
            (v.norm() > FOURIER_TOL).then(|| (p.clone(), v))
        })
        .collect()
}

/// `Σ_{|w|<k} (1 − |w|/k) a_w L_w`.
pub fn cesaro(a: &Operator, k: usize) -> Result<Operator> {
    if k == 0 {
        return Err(Error::Malformed("Cesàro index must be positive".into()));
    }
    let s = a.space();
    let coeffs: Vec<(Path, Complex64)> = match a.fourier() {
        Some(f) => f.iter().map(|(&i, &c)| (s.path(i).clone(), c)).collect(),
        None => fourier_coeffs(a),
    };
    let terms = coeffs.into_iter().filter(|(p, _)| p.len() < k).map(|(p, c)| {
        let weight = 1.0 - p.len() as f64 / k as f64;
        (p, c * weight)
    });
    Operator::from_fourier(s, terms)
}

fn defect_against(a: &Operator, ops: &[Operator], margin: usize) -> Result<f64> {
    let cols = a.space().interior(margin)?;
    let mut worst: f64 = 0.0;
    for r in ops {
        let d = a.commutator(r)?;
        worst = worst.max(d.norm_on_columns(&cols)?);
    }
    Ok(worst)
}

/// `max_e ‖[A, R_e]‖` on `H_{K−m}`; zero exactly for members of the left algebra.
pub fn commutation_defect(a: &Operator, margin: usize) -> Result<f64> {
    let s = a.space();
    let rights = (0..s.graph().num_edges())
        .map(|e| right_op(s, e))
        .collect::<Result<Vec<_>>>()?;
    defect_against(a, &rights, margin)
}

/// `max_e ‖[A, L_e]‖` on `H_{K−m}`; zero for members of the right algebra.
pub fn left_commutation_defect(a: &Operator, margin: usize) -> Result<f64> {
    let s = a.space();
    let lefts = (0..s.graph().num_edges())
        .map(|e| left_op(s, e))
        .collect::<Result<Vec<_>>>()?;
    defect_against(a, &lefts, margin)
}

/// Checks `L_e = P_{dst e} L_e P_{src e}` for every edge and `Σ P_k = I`.
pub fn convention_self_test(space: &Arc<FockSpace>) -> Result<f64> {
    let g = space.graph();
    let mut worst: f64 = 0.0;
    for (e, edge) in g.edges().iter().enumerate() {
        let l = left_op(space, e)?;
        let sandwiched = vertex_proj(space, edge.dst)?
            .mul(&l)?
            .mul(&vertex_proj(space, edge.src)?)?;
        worst = worst.max(l.sub(&sandwiched)?.matrix().max_abs());
    }
    let mut sum = Operator::zero(space);
    for k in 0..g.num_vertices() {
        sum = sum.add(&vertex_proj(space, k)?)?;
    }
    worst = worst.max(sum.sub(&Operator::identity(space))?.matrix().max_abs());
    Ok(worst)
}

#[derive(Clone, Debug)]
pub struct BeurlingSymbol {
    pub operator: Operator,
    pub vertex: VertexId,
    /// Support degree of the symbol vector; identities hold on `H_{K−degree}`.
    pub degree: usize,
    pub isometry_defect: f64,
}

fn check_unit(v: &CVec, dim: usize) -> Result<()> {
    if v.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: v.len(),
        });
    }
    let n = v.norm();
    if (n - 1.0).abs() > ASSERT_TOL {
        return Err(Error::NotNormalized(n));
    }
    Ok(())
}

fn supported_vertex(space: &FockSpace, zeta: &CVec, by_final: bool) -> Result<VertexId> {
    let n = space.graph().num_vertices();
    (0..n)
        .find(|&k| {
            let off: f64 = (0..space.dim())
                .filter(|&i| {
                    let p = space.path(i);
                    (if by_final { p.dst() } else { p.src() }) != k
                })
                .map(|i| zeta[i].norm_sqr())
                .sum();
            off.sqrt() <= ASSERT_TOL
        })
        .ok_or(Error::NotVertexSupported)
}

fn wandering_check(space: &FockSpace, words: &[usize], images: &[CVec]) -> Result<f64> {
    let m = CMat::from_columns(images);
    let gram = m.ad_mul(&m);
    for i in 0..words.len() {
        for j in 0..i {
            let overlap = gram[(i, j)].norm();
            if overlap > ASSERT_TOL {
                let g = space.graph();
                return Err(Error::NotWandering {
                    first: space.path(words[j]).display(g),
                    second: space.path(words[i]).display(g),
                    overlap,
                });
            }
        }
    }
    spectral_norm(&(gram - CMat::identity(words.len(), words.len())))
}

/// `R_ζ ξ_w = L_w ζ` for a unit wandering vector `ζ = P_k ζ`.
pub fn beurling_right_symbol(space: &Arc<FockSpace>, zeta: &CVec) -> Result<BeurlingSymbol> {
    check_unit(zeta, space.dim())?;
    let k = supported_vertex(space, zeta, true)?;
    let degree = space.support_degree(zeta).unwrap_or(0);
    let words: Vec<usize> = space.with_src(k).to_vec();
    let images: Vec<CVec> = words
        .iter()
        .map(|&w| space.left_translate(space.path(w), zeta))
        .collect();
    let interior: Vec<usize> = (0..words.len())
        .filter(|&i| space.path(words[i]).len() + degree <= space.depth())
        .collect();
    let defect = wandering_check(
        space,
        &interior.iter().map(|&i| words[i]).collect::<Vec<_>>(),
        &interior.iter().map(|&i| images[i].clone()).collect::<Vec<_>>(),
    )?;
    let mut t = Vec::new();
    for (c, &w) in words.iter().enumerate() {
        for i in 0..space.dim() {
            if images[c][i].norm() >= DROP_TOL {
                t.push((i, w, images[c][i]));
            }
        }
    }
    let operator = Operator::from_matrix(space, SparseMatrix::from_triplets(space.dim(), space.dim(), t))?;
    Ok(BeurlingSymbol {
        operator,
        vertex: k,
        degree,
        isometry_defect: defect,
    })
}

/// `L_ζ = Σ c_u L_u` for a unit right-wandering vector `ζ = Q_k ζ`.
pub fn beurling_left_symbol(space: &Arc<FockSpace>, zeta: &CVec) -> Result<BeurlingSymbol> {
    check_unit(zeta, space.dim())?;
    let k = supported_vertex(space, zeta, false)?;
    let degree = space.support_degree(zeta).unwrap_or(0);
    let words: Vec<usize> = space
        .with_dst(k)
        .iter()
        .copied()
        .filter(|&w| space.path(w).len() + degree <= space.depth())
        .collect();
    let images: Vec<CVec> = words
        .iter()
        .map(|&w| space.right_translate(space.path(w), zeta))
        .collect();
    let defect = wandering_check(space, &words, &images)?;
    let terms = (0..space.dim())
        .filter(|&i| zeta[i].norm() >= DROP_TOL)
        .map(|i| (space.path(i).clone(), zeta[i]));
    let operator = Operator::from_fourier(space, terms)?;
    Ok(BeurlingSymbol {
        operator,
        vertex: k,
        degree,
        isometry_defect: defect,
    })
}

/// A finite Fourier series `Σ a_w L_w` independent of any truncation depth.
#[derive(Clone, Debug)]
pub struct SymbolicOperator {
    graph: Arc<DirectedGraph>,
    terms: Vec<(Path, Complex64)>,
}

impl SymbolicOperator {
    /// Merges repeated paths and drops zero coefficients; terms are kept in canonical order.
    pub fn new<I>(graph: &Arc<DirectedGraph>, terms: I) -> SymbolicOperator
    where
        I: IntoIterator<Item = (Path, Complex64)>,
    {
        let mut merged: HashMap<Path, Complex64> = HashMap::new();
        for (p, a) in terms {
            *merged.entry(p).or_default() += a;
        }
        let mut paths: Vec<Path> = merged
            .iter()
            .filter(|(_, a)| a.norm() >= DROP_TOL)
            .map(|(p, _)| p.clone())
            .collect();
        sort_canonical(graph, &mut paths);
        let terms = paths.into_iter().map(|p| {
            let a = merged[&p];
            (p, a)
        });
        SymbolicOperator {
            graph: graph.clone(),
            terms: terms.collect(),
        }
    }

    pub fn identity(graph: &Arc<DirectedGraph>) -> SymbolicOperator {
        Self::new(
            graph,
            (0..graph.num_vertices()).map(|k| (Path::vertex(k), c64(1.0, 0.0))),
        )
    }

    pub fn word(graph: &Arc<DirectedGraph>, w: Path) -> SymbolicOperator {
        Self::new(graph, [(w, c64(1.0, 0.0))])
    }

    pub fn graph(&self) -> &Arc<DirectedGraph> {
        &self.graph
    }

    pub fn terms(&self) -> &[(Path, Complex64)] {
        &self.terms
    }

    pub fn degree(&self) -> usize {
        self.terms.iter().map(|(p, _)| p.len()).max().unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn at(&self, space: &Arc<FockSpace>) -> Result<Operator> {
        if **space.graph() != *self.graph {
            return Err(Error::SpaceMismatch);
        }
        Operator::from_fourier(space, self.terms.iter().cloned())
    }

    pub fn add(&self, other: &SymbolicOperator) -> SymbolicOperator {
        Self::new(&self.graph, self.terms.iter().chain(other.terms.iter()).cloned())
    }

    pub fn sub(&self, other: &SymbolicOperator) -> SymbolicOperator {
        self.add(&other.scale(c64(-1.0, 0.0)))
    }

    pub fn scale(&self, c: Complex64) -> SymbolicOperator {
        Self::new(&self.graph, self.terms.iter().map(|(p, a)| (p.clone(), a * c)))
    }

    pub fn mul(&self, other: &SymbolicOperator) -> SymbolicOperator {
        let mut out = Vec::new();
        for (u, a) in &self.terms {
            for (v, b) in &other.terms {
                if let Some(uv) = compose(u, v) {
                    out.push((uv, a * b));
                }
            }
        }
        Self::new(&self.graph, out)
    }

    /// `AB − BA`.
    pub fn commutator(&self, other: &SymbolicOperator) -> SymbolicOperator {
        self.mul(other).sub(&other.mul(self))
    }

    /// Gaussian coefficients on every path of length in `levels`.
    pub fn random<R: Rng + ?Sized>(
        graph: &Arc<DirectedGraph>,
        levels: std::ops::RangeInclusive<usize>,
        rng: &mut R,
    ) -> SymbolicOperator {
        let paths = crate::semigroupoid::enumerate_paths(graph, *levels.end());
        Self::new(
            graph,
            paths.into_iter().filter(|p| levels.contains(&p.len())).map(|p| {
                let re: f64 = StandardNormal.sample(rng);
                let im: f64 = StandardNormal.sample(rng);
                (p, c64(re, im))
            }),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::SparseMatrix;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn space(t: &str, k: usize) -> Arc<FockSpace> {
        FockSpace::build(Arc::new(DirectedGraph::template(t).unwrap()), k).unwrap()
    }

    fn g1loop(k: usize) -> Arc<FockSpace> {
        space("cycle:1", k)
    }

    fn path(s: &FockSpace, names: &[&str]) -> Path {
        Path::from_names(s.graph(), names).unwrap()
    }

    #[test]
    fn dimensions() {
        assert_eq!(g1loop(5).dim(), 6);
        assert_eq!(space("free:2", 2).dim(), 7);
        assert_eq!(space("cycle:2", 2).dim(), 6);
        assert!(matches!(
            FockSpace::build(Arc::new(DirectedGraph::template("free:2").unwrap()), 0),
            Err(Error::InvalidDepth(0))
        ));
        assert!(matches!(
            FockSpace::build_with_cap(Arc::new(DirectedGraph::template("free:3").unwrap()), 8, 1000),
            Err(Error::DimensionCap { .. })
        ));
    }

    #[test]
    fn single_loop_gives_the_shift() {
        let s = g1loop(4);
        let l = left_op(&s, 0).unwrap().to_dense();
        let mut shift = CMat::zeros(5, 5);
        for i in 0..4 {
            shift[(i + 1, i)] = c64(1.0, 0.0);
        }
        assert_eq!(l, shift);
    }

    #[test]
    fn projections_and_words() {
        let s = space("cycle:2", 3);
        let mut sum = Operator::zero(&s);
        for k in 0..2 {
            sum = sum.add(&vertex_proj(&s, k).unwrap()).unwrap();
        }
        assert_eq!(sum.to_dense(), CMat::identity(s.dim(), s.dim()));
        let a = left_op(&s, 0).unwrap();
        assert_eq!(a.mul(&a).unwrap().matrix().nnz(), 0);
        assert_eq!(convention_self_test(&s).unwrap(), 0.0);
        let ba = lambda_word(&s, &path(&s, &["b", "a"])).unwrap();
        let image = ba.apply(&s.basis_vector(0));
        assert_eq!(image, s.path_vector(&path(&s, &["b", "a"])).unwrap());
        let b = left_op(&s, 1).unwrap();
        assert_eq!(b.mul(&a).unwrap().to_dense(), ba.to_dense());
        assert_eq!(
            lambda_word(&s, &Path::vertex(1)).unwrap().to_dense(),
            vertex_proj(&s, 1).unwrap().to_dense()
        );
        assert!(left_op(&s, 9).is_err());
        assert!(vertex_proj(&s, 9).is_err());
    }

    #[test]
    fn vertex_projection_follows_final_vertex() {
        let g = Arc::new(DirectedGraph::new(["u", "v"], [("e", "u", "v"), ("f", "v", "v")], false).unwrap());
        let s = FockSpace::build(g, 3).unwrap();
        let e = path(&s, &["e"]);
        let pv = vertex_proj(&s, 1).unwrap();
        let xe = s.path_vector(&e).unwrap();
        assert_eq!(pv.apply(&xe), xe);
        let qu = right_vertex_proj(&s, 0).unwrap();
        assert_eq!(qu.apply(&xe), xe);
        assert_eq!(convention_self_test(&s).unwrap(), 0.0);
    }

    #[test]
    fn vacuum_weights() {
        assert_eq!(g1loop(2).vacuum_vector(), g1loop(2).basis_vector(0));
        let s = space("cycle:2", 2);
        let v = s.vacuum_vector();
        assert_eq!((v[0], v[1]), (c64(1.0, 0.0), c64(0.5, 0.0)));
        for i in 0..s.dim() {
            let w = s.path(i).clone();
            let k = s.graph().vertex_rank(w.src()) as f64;
            let lw = lambda_word(&s, &w).unwrap();
            let expect = s.basis_vector(i) * c64(1.0 / k, 0.0);
            assert!((lw.apply(&v) - expect).norm() < 1e-15);
        }
    }

    #[test]
    fn fourier_round_trip() {
        let s = space("free:2", 2);
        let l = left_op(&s, 0).unwrap();
        let f = fourier_coeffs(&l);
        assert_eq!(f.len(), 1);
        assert_eq!(f[0].0.display(s.graph()), "1");
        let i = fourier_coeffs(&Operator::identity(&s));
        assert_eq!(i.len(), 1);
        assert!(i[0].0.is_vertex());
        let terms: Vec<(Path, Complex64)> = s
            .basis()
            .iter()
            .enumerate()
            .map(|(n, p)| (p.clone(), c64(n as f64 + 1.0, -(n as f64))))
            .collect();
        let a = Operator::from_fourier(&s, terms.clone()).unwrap();
        let back = fourier_coeffs(&Operator::from_matrix(&s, a.matrix().clone()).unwrap());
        assert_eq!(back, terms);
    }

    #[test]
    fn cesaro_examples() {
        let s = g1loop(6);
        let l = left_op(&s, 0).unwrap();
        let c = cesaro(&l, 2).unwrap();
        assert!((c.to_dense() - l.to_dense() * c64(0.5, 0.0)).norm() < 1e-15);
        let i = Operator::identity(&s);
        assert_eq!(cesaro(&i, 3).unwrap().to_dense(), i.to_dense());
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = SymbolicOperator::random(s.graph(), 0..=2, &mut rng).at(&s).unwrap();
        let x = s.random_vector(4, &mut rng);
        let mut prev = f64::INFINITY;
        for k in 1..=7 {
            let d = (cesaro(&a, k).unwrap().apply(&x) - a.apply(&x)).norm();
            assert!(d <= prev + 1e-12);
            prev = d;
        }
        let far = cesaro(&a, 10_000).unwrap().sub(&a).unwrap().norm().unwrap();
        assert!(far < 1e-3 * a.norm().unwrap());
    }

    #[test]
    fn commutation_examples() {
        let s = space("free:2", 4);
        let w = path(&s, &["1", "2"]);
        assert_eq!(commutation_defect(&lambda_word(&s, &w).unwrap(), 2).unwrap(), 0.0);
        let adj = left_op(&s, 0).unwrap().adjoint();
        assert!(commutation_defect(&adj, 1).unwrap() >= 1.0 - 1e-12);
        assert_eq!(commutation_defect(&vertex_proj(&s, 0).unwrap(), 0).unwrap(), 0.0);
        assert!(matches!(
            commutation_defect(&adj, 5),
            Err(Error::MarginExceedsDepth { .. })
        ));
    }

    #[test]
    fn right_symbols() {
        let s = space("free:2", 4);
        let q = beurling_right_symbol(&s, &s.basis_vector(0)).unwrap();
        assert_eq!(q.operator.to_dense(), right_vertex_proj(&s, 0).unwrap().to_dense());
        let x1 = s.path_vector(&path(&s, &["1"])).unwrap();
        let r = beurling_right_symbol(&s, &x1).unwrap();
        assert_eq!(r.operator.to_dense(), right_op(&s, 0).unwrap().to_dense());
        assert_eq!(left_commutation_defect(&r.operator, 1).unwrap(), 0.0);
        let mix = (s.basis_vector(0) + x1.clone()) * c64(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        assert!(matches!(
            beurling_right_symbol(&s, &mix),
            Err(Error::NotWandering { .. })
        ));
        assert!(matches!(
            beurling_right_symbol(&s, &(x1 * c64(2.0, 0.0))),
            Err(Error::NotNormalized(_))
        ));
    }

    #[test]
    fn right_symbol_of_inner_sum() {
        // (ξ_1 + ξ_22)/√2 is wandering: its left translates have disjoint supports.
        let s = space("free:2", 5);
        let z = (s.path_vector(&path(&s, &["1"])).unwrap() + s.path_vector(&path(&s, &["2", "2"])).unwrap())
            * c64(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        let r = beurling_right_symbol(&s, &z).unwrap();
        assert!(r.isometry_defect < 1e-12);
        assert!(left_commutation_defect(&r.operator, 2).unwrap() < 1e-12);
    }

    #[test]
    fn left_symbols() {
        let g = Arc::new(DirectedGraph::new(["u", "v"], [("e", "u", "v"), ("f", "v", "v")], false).unwrap());
        let s = FockSpace::build(g, 4).unwrap();
        let p = beurling_left_symbol(&s, &s.basis_vector(0)).unwrap();
        assert_eq!(p.operator.to_dense(), vertex_proj(&s, 0).unwrap().to_dense());
        let e = path(&s, &["e"]);
        let l = beurling_left_symbol(&s, &s.path_vector(&e).unwrap()).unwrap();
        assert_eq!(l.operator.to_dense(), left_op(&s, 0).unwrap().to_dense());
        assert_eq!(commutation_defect(&l.operator, 1).unwrap(), 0.0);
        let zeta = s.path_vector(&e).unwrap();
        let k = s.graph().vertex_rank(l.vertex) as f64;
        assert!((l.operator.apply(&s.vacuum_vector()) - zeta * c64(1.0 / k, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn interior_partial_isometry_laws() {
        for t in ["free:2", "cycle:3"] {
            let s = space(t, 4);
            let interior = s.interior(1).unwrap();
            let mut sum = SparseMatrix::zeros(s.dim(), s.dim());
            for e in 0..s.graph().num_edges() {
                let l = left_op(&s, e).unwrap();
                let ll = l.adjoint().mul(&l).unwrap();
                let lsq = ll.mul(&ll).unwrap().sub(&ll).unwrap();
                assert_eq!(lsq.matrix().max_abs(), 0.0);
                for f in 0..s.graph().num_edges() {
                    if f != e {
                        let cross = l.adjoint().mul(&left_op(&s, f).unwrap()).unwrap();
                        assert_eq!(cross.matrix().nnz(), 0);
                    }
                }
                sum = sum.add(l.mul(&l.adjoint()).unwrap().matrix()).unwrap();
            }
            let wandering = SparseMatrix::identity(s.dim()).sub(&sum).unwrap();
            for &i in &interior {
                let expect = if s.path(i).is_vertex() { 1.0 } else { 0.0 };
                assert_eq!(wandering.get(i, i), c64(expect, 0.0));
            }
        }
    }

    #[test]
    fn left_and_right_words_commute() {
        let s = space("cycle:2", 5);
        let words: Vec<Path> = s.basis().iter().filter(|p| p.len() <= 2).cloned().collect();
        for v in &words {
            for w in &words {
                let cols = s.interior(v.len() + w.len()).unwrap();
                let lw = lambda_word(&s, w).unwrap();
                let rv = rho_word(&s, v).unwrap();
                let c = lw.commutator(&rv).unwrap();
                assert_eq!(c.norm_on_columns(&cols).unwrap(), 0.0);
            }
        }
    }

    #[test]
    fn symbolic_products_match_matrices() {
        let g = Arc::new(DirectedGraph::template("cycle:2").unwrap());
        let s = FockSpace::build(g.clone(), 5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let a = SymbolicOperator::random(&g, 0..=2, &mut rng);
        let b = SymbolicOperator::random(&g, 1..=2, &mut rng);
        let ab = a.mul(&b).at(&s).unwrap();
        let direct = a.at(&s).unwrap().mul(&b.at(&s).unwrap()).unwrap();
        assert!((ab.to_dense() - direct.to_dense()).norm() < 1e-12);
        assert_eq!(a.degree(), 2);
    }
}
