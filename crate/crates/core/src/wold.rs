//! Row-contractive partial-isometry tuples: the (†) relations, wandering data,
//! recovered graph, pure/coisometric splitting and the intertwining unitary.

use std::sync::Arc;

use nalgebra::SymmetricEigen;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fock::{left_op, FockSpace};
use crate::graph::{DirectedGraph, EdgeId, VertexId};
use crate::linalg::{
    c64, column_space, column_space_scaled, hermitian_min_eigenvalue, null_space, rank, rounded_projections,
    spectral_norm, CMat, CVec, OrthoBuilder, SparseMatrix, Subspace,
};
use crate::semigroupoid::{compose, Path};

pub const DEFAULT_TOL: f64 = 1e-8;
const ZERO_TOL: f64 = 1e-8;

/// `n` square matrices on a common space, with an optional interior subspace on which
/// the relations are checked.
#[derive(Clone, Debug)]
pub struct PartialIsometryTuple {
    ops: Vec<CMat>,
    tol: f64,
    interior: Option<Subspace>,
}

impl PartialIsometryTuple {
    pub fn new(ops: Vec<CMat>, tol: f64) -> Result<Self> {
        let Some(first) = ops.first() else {
            return Err(Error::Malformed("a tuple needs at least one operator".into()));
        };
        let d = first.nrows();
        for op in &ops {
            if op.nrows() != d || op.ncols() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: if op.nrows() != d { op.nrows() } else { op.ncols() },
                });
            }
        }
        Ok(PartialIsometryTuple {
            ops,
            tol,
            interior: None,
        })
    }

    pub fn with_interior(mut self, interior: Subspace) -> Result<Self> {
        if interior.ambient() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: interior.ambient(),
            });
        }
        self.interior = Some(interior);
        Ok(self)
    }

    pub fn ops(&self) -> &[CMat] {
        &self.ops
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.ops[0].nrows()
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn interior(&self) -> Option<&Subspace> {
        self.interior.as_ref()
    }

    fn compress(&self, x: &CMat) -> CMat {
        match &self.interior {
            Some(d) => d.frame().ad_mul(&(x * d.frame())),
            None => x.clone(),
        }
    }

    fn compressed_norm(&self, x: &CMat) -> Result<f64> {
        spectral_norm(&self.compress(x))
    }

    /// Compression `Fᴴ S F` to a subspace; the interior becomes its intersection with the subspace.
    pub fn restrict(&self, m: &Subspace) -> Result<PartialIsometryTuple> {
        if m.ambient() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: m.ambient(),
            });
        }
        let f = m.frame();
        let ops = self.ops.iter().map(|s| f.ad_mul(&(s * f))).collect();
        let interior = self.interior.as_ref().map(|d| {
            let outside = d.residual(f);
            null_space(&outside)
        });
        Ok(PartialIsometryTuple {
            ops,
            tol: self.tol,
            interior,
        })
    }

    /// `U S U*` for a unitary `U`.
    pub fn conjugate(&self, u: &CMat) -> Result<PartialIsometryTuple> {
        if u.nrows() != self.dim() || u.ncols() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: u.nrows(),
            });
        }
        let ops = self.ops.iter().map(|s| u * s * u.adjoint()).collect();
        let interior = self
            .interior
            .as_ref()
            .map(|d| Subspace::from_orthonormal(u * d.frame()))
            .transpose()?;
        Ok(PartialIsometryTuple {
            ops,
            tol: self.tol,
            interior,
        })
    }

    /// Block-diagonal sum of two tuples of equal length.
    pub fn direct_sum(&self, other: &PartialIsometryTuple) -> Result<PartialIsometryTuple> {
        if self.len() != other.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                found: other.len(),
            });
        }
        let (a, b) = (self.dim(), other.dim());
        let ops = self
            .ops
            .iter()
            .zip(&other.ops)
            .map(|(x, y)| {
                let mut m = CMat::zeros(a + b, a + b);
                m.view_mut((0, 0), (a, a)).copy_from(x);
                m.view_mut((a, a), (b, b)).copy_from(y);
                m
            })
            .collect();
        let frame_of = |t: &PartialIsometryTuple| {
            t.interior
                .as_ref()
                .map(|d| d.frame().clone())
                .unwrap_or_else(|| CMat::identity(t.dim(), t.dim()))
        };
        let interior = if self.interior.is_some() || other.interior.is_some() {
            let (fa, fb) = (frame_of(self), frame_of(other));
            let mut f = CMat::zeros(a + b, fa.ncols() + fb.ncols());
            f.view_mut((0, 0), (a, fa.ncols())).copy_from(&fa);
            f.view_mut((a, fa.ncols()), (b, fb.ncols())).copy_from(&fb);
            Some(Subspace::from_orthonormal(f)?)
        } else {
            None
        };
        Ok(PartialIsometryTuple {
            ops,
            tol: self.tol.max(other.tol),
            interior,
        })
    }

    /// Smallest subspace containing the seeds and invariant under every word of length ≤ `max_len`.
    pub fn invariant_span(&self, seeds: &[CVec], max_len: usize) -> Subspace {
        let mut b = OrthoBuilder::new(self.dim());
        let mut frontier: Vec<CVec> = seeds.iter().filter(|v| b.push(v)).cloned().collect();
        for _ in 0..max_len {
            let mut next = Vec::new();
            for v in &frontier {
                for s in &self.ops {
                    let w = s * v;
                    if b.push(&w) {
                        next.push(w);
                    }
                }
            }
            if next.is_empty() {
                break;
            }
            frontier = next;
        }
        b.finish()
    }
}

/// The creation operators of `G` on `H_K`, in edge order, with interior `H_{K−1}`.
pub fn generator_tuple(space: &Arc<FockSpace>, tol: f64) -> Result<PartialIsometryTuple> {
    let ops = (0..space.graph().num_edges())
        .map(|e| left_op(space, e).map(|l| l.to_dense()))
        .collect::<Result<Vec<_>>>()?;
    let interior = Subspace::coordinate(space.dim(), &space.interior(1)?);
    PartialIsometryTuple::new(ops, tol)?.with_interior(interior)
}

/// `r` orthogonal copies of the generators; copy `j` occupies coordinates `j·d .. (j+1)·d`.
pub fn amplified_generator_tuple(space: &Arc<FockSpace>, r: usize, tol: f64) -> Result<PartialIsometryTuple> {
    let ops = (0..space.graph().num_edges())
        .map(|e| left_op(space, e).map(|l| l.matrix().ampliate(r).to_dense()))
        .collect::<Result<Vec<_>>>()?;
    let inner = space.interior(1)?;
    let idx: Vec<usize> = (0..r)
        .flat_map(|j| inner.iter().map(move |&i| j * space.dim() + i))
        .collect();
    PartialIsometryTuple::new(ops, tol)?.with_interior(Subspace::coordinate(space.dim() * r, &idx))
}

#[derive(Clone, Debug, Serialize)]
pub struct ConditionReport {
    pub passed: bool,
    pub defect: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct DaggerReport {
    /// Conditions (1)–(5) in order.
    pub conditions: [ConditionReport; 5],
    /// Operator indices grouped by equal initial projection.
    pub initial_projection_classes: Vec<Vec<usize>>,
    /// Class whose projection dominates each final projection.
    pub final_class: Vec<Option<usize>>,
    pub passed: bool,
}

impl DaggerReport {
    pub fn class_of(&self, op: usize) -> usize {
        self.initial_projection_classes
            .iter()
            .position(|c| c.contains(&op))
            .expect("every operator is classified")
    }

    fn summary(&self) -> String {
        let failed: Vec<String> = self
            .conditions
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.passed)
            .map(|(i, c)| format!("({}) defect {:e}", i + 1, c.defect))
            .collect();
        failed.join(", ")
    }
}

pub fn check_dagger(t: &PartialIsometryTuple) -> Result<DaggerReport> {
    let d = t.dim();
    let n = t.len();
    let tol = t.tol;
    let identity = CMat::identity(d, d);
    let inits: Vec<CMat> = t.ops.iter().map(|s| s.ad_mul(s)).collect();
    let finals: Vec<CMat> = t.ops.iter().map(|s| s * s.adjoint()).collect();

    let mut row = identity.clone();
    for f in &finals {
        row -= f;
    }
    let c1 = (-hermitian_min_eigenvalue(&t.compress(&row))).max(0.0);

    let mut c2: f64 = 0.0;
    for p in &inits {
        c2 = c2.max(t.compressed_norm(&(p * p - p))?);
    }

    // Union-find over equality of initial projections.
    let mut parent: Vec<usize> = (0..n).collect();
    fn root(p: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while p[r] != r {
            r = p[r];
        }
        p[i] = r;
        r
    }
    let mut c3: f64 = 0.0;
    for i in 0..n {
        for j in 0..i {
            let eq = t.compressed_norm(&(&inits[i] - &inits[j]))?;
            let orth = t.compressed_norm(&(&inits[i] * &inits[j]))?;
            c3 = c3.max(eq.min(orth));
            if eq <= tol {
                let (ri, rj) = (root(&mut parent, i), root(&mut parent, j));
                if ri != rj {
                    parent[ri.max(rj)] = ri.min(rj);
                }
            }
        }
    }
    let mut classes: Vec<Vec<usize>> = Vec::new();
    let mut rep_class = vec![usize::MAX; n];
    for i in 0..n {
        let r = root(&mut parent, i);
        if rep_class[r] == usize::MAX {
            rep_class[r] = classes.len();
            classes.push(Vec::new());
        }
        classes[rep_class[r]].push(i);
    }

    let nonzero: Vec<bool> = classes
        .iter()
        .map(|m| spectral_norm(&inits[m[0]]).map(|x| x > tol))
        .collect::<Result<_>>()?;
    let mut c4: f64 = 0.0;
    let mut final_class = Vec::with_capacity(n);
    for f in &finals {
        let defects = classes
            .iter()
            .map(|m| t.compressed_norm(&(f - &inits[m[0]] * f)))
            .collect::<Result<Vec<_>>>()?;
        let best = defects.iter().copied().fold(f64::INFINITY, f64::min);
        c4 = c4.max(best);
        let pick = (0..classes.len())
            .find(|&c| nonzero[c] && defects[c] <= tol)
            .or_else(|| (0..classes.len()).find(|&c| defects[c] <= tol));
        final_class.push(pick);
    }

    let mut sum = CMat::zeros(d, d);
    for members in &classes {
        sum += &inits[members[0]];
    }
    let c5 = t.compressed_norm(&(sum - identity))?;

    let mk = |defect: f64| ConditionReport {
        passed: defect <= tol,
        defect,
    };
    let conditions = [mk(c1), mk(c2), mk(c3), mk(c4), mk(c5)];
    let passed = conditions.iter().all(|c| c.passed);
    Ok(DaggerReport {
        conditions,
        initial_projection_classes: classes,
        final_class,
        passed,
    })
}

#[derive(Clone, Debug)]
pub struct WoldClass {
    pub ops: Vec<usize>,
    pub projection: CMat,
    pub is_zero: bool,
    /// Orthonormal basis `η_k^{(j)}` of `P_k 𝓦`.
    pub eta: Subspace,
}

impl WoldClass {
    pub fn multiplicity(&self) -> usize {
        self.eta.rank()
    }
}

/// `w(S) η_k^{(j)}`; `ops` lists operator indices in written order (the last is applied first).
#[derive(Clone, Debug)]
pub struct WordVector {
    pub class: usize,
    pub copy: usize,
    pub ops: Vec<usize>,
    pub vector: CVec,
    pub exact: bool,
}

#[derive(Clone, Debug)]
pub struct WoldResult {
    pub dagger: DaggerReport,
    pub wandering: Subspace,
    pub classes: Vec<WoldClass>,
    pub recovered_graph: DirectedGraph,
    /// Recovered-graph vertex of each class (zero classes have none).
    pub class_vertex: Vec<Option<VertexId>>,
    /// Recovered-graph edge of each operator (zero operators have none).
    pub op_edge: Vec<Option<EdgeId>>,
    pub word_vectors: Vec<WordVector>,
    pub pure: Subspace,
    pub coisometric: Subspace,
    pub stabilized: bool,
    pub levels_used: usize,
    /// `|Σ_k α_k − dim 𝓦|`.
    pub wandering_split_defect: usize,
    /// Largest overlap between distinct exact word vectors.
    pub word_orthogonality_defect: f64,
    /// Principal-angle deviation between `H_c` and `range(X_J)`.
    pub x_deviation: f64,
    pub x_iterations: usize,
    /// `‖Σ V_i V_iᴴ − I‖` on `H_c`.
    pub coisometric_defect: f64,
    /// `max_i ‖(I − P_c) S_i P_c‖`.
    pub coisometric_invariance_defect: f64,
}

impl WoldResult {
    pub fn multiplicities(&self) -> Vec<usize> {
        self.classes.iter().map(WoldClass::multiplicity).collect()
    }

    pub fn is_approximate(&self) -> bool {
        !self.stabilized
    }
}

fn path_label(ops: &[usize]) -> String {
    if ops.is_empty() {
        "∅".into()
    } else {
        ops.iter().map(|i| format!("S{}", i + 1)).collect::<Vec<_>>().join("")
    }
}

/// Wold decomposition; the word expansion runs to `word_budget` levels (default: the dimension).
pub fn decompose(t: &PartialIsometryTuple, word_budget: Option<usize>) -> Result<WoldResult> {
    let report = check_dagger(t)?;
    if !report.passed {
        return Err(Error::DaggerFailure(report.summary()));
    }
    let d = t.dim();
    let n = t.len();
    let budget = word_budget.unwrap_or(d);

    let mut ranges = CMat::zeros(d, d * n);
    for (i, s) in t.ops.iter().enumerate() {
        ranges.columns_mut(i * d, d).copy_from(s);
    }
    let wandering = column_space(&ranges).complement();

    let mut classes = Vec::new();
    for members in &report.initial_projection_classes {
        let s = &t.ops[members[0]];
        let is_zero = spectral_norm(s)? <= t.tol;
        let projection = if is_zero {
            CMat::zeros(d, d)
        } else {
            rounded_projections(s).0
        };
        let eta = column_space_scaled(&(&projection * wandering.frame()), 1.0);
        classes.push(WoldClass {
            ops: members.clone(),
            projection,
            is_zero,
            eta,
        });
    }
    let alpha_sum: usize = classes.iter().map(|c| c.multiplicity()).sum();
    let wandering_split_defect = alpha_sum.abs_diff(wandering.rank());

    let mut class_vertex = vec![None; classes.len()];
    let mut names = Vec::new();
    for (c, class) in classes.iter().enumerate() {
        if !class.is_zero {
            class_vertex[c] = Some(names.len());
            names.push(format!("k{}", c + 1));
        }
    }
    let mut op_edge = vec![None; n];
    let mut edges = Vec::new();
    for i in 0..n {
        let c = report.class_of(i);
        if classes[c].is_zero {
            continue;
        }
        let Some(target) = report.final_class[i].and_then(|l| class_vertex[l]) else {
            return Err(Error::DaggerFailure(format!(
                "final projection of S{} has no dominating class",
                i + 1
            )));
        };
        op_edge[i] = Some(edges.len());
        edges.push((
            format!("s{}", i + 1),
            names[class_vertex[c].unwrap()].clone(),
            names[target].clone(),
        ));
    }
    let recovered_graph = DirectedGraph::new(names.clone(), edges, true)?;

    let mut level: Vec<WordVector> = Vec::new();
    for (c, class) in classes.iter().enumerate() {
        for (j, col) in class.eta.frame().column_iter().enumerate() {
            level.push(WordVector {
                class: c,
                copy: j,
                ops: Vec::new(),
                vector: col.into_owned(),
                exact: true,
            });
        }
    }
    let mut pure_builder = OrthoBuilder::new(d);
    for w in &level {
        pure_builder.push(&w.vector);
    }
    let mut word_vectors = level.clone();
    let mut stabilized = level.is_empty();
    let mut levels_used = 0;
    let node_cap = 8 * d + 64;
    while !stabilized && levels_used < budget {
        let mut next = Vec::new();
        for w in &level {
            for (i, s) in t.ops.iter().enumerate() {
                let v = s * &w.vector;
                let norm = v.norm();
                if norm <= ZERO_TOL {
                    continue;
                }
                let mut ops = vec![i];
                ops.extend_from_slice(&w.ops);
                next.push(WordVector {
                    class: w.class,
                    copy: w.copy,
                    ops,
                    exact: w.exact && (norm - 1.0).abs() <= t.tol,
                    vector: v,
                });
            }
        }
        levels_used += 1;
        let before = pure_builder.rank();
        for w in &next {
            pure_builder.push(&w.vector);
        }
        let grew = pure_builder.rank() > before;
        word_vectors.extend(next.iter().cloned());
        if next.is_empty() || !grew {
            stabilized = true;
        }
        if word_vectors.len() > node_cap {
            break;
        }
        level = next;
    }
    let pure = pure_builder.finish();
    let coisometric = pure.complement();

    let exact: Vec<&WordVector> = word_vectors.iter().filter(|w| w.exact).collect();
    let mut word_orthogonality_defect: f64 = 0.0;
    for a in 0..exact.len() {
        for b in 0..a {
            word_orthogonality_defect = word_orthogonality_defect.max(exact[a].vector.dotc(&exact[b].vector).norm());
        }
    }

    let mut x = CMat::identity(d, d);
    let mut x_iterations = 0;
    for _ in 0..budget.clamp(1, 256) {
        let mut next = CMat::zeros(d, d);
        for s in &t.ops {
            next += s * &x * s.adjoint();
        }
        x_iterations += 1;
        let change = (&next - &x).norm();
        x = next;
        if change <= t.tol {
            break;
        }
    }
    let x_range = if d == 0 {
        Subspace::zero(0)
    } else {
        let eig = SymmetricEigen::new((&x + x.adjoint()) * c64(0.5, 0.0));
        let cols: Vec<CVec> = eig
            .eigenvalues
            .iter()
            .enumerate()
            .filter(|(_, &l)| l > 0.5)
            .map(|(i, _)| eig.eigenvectors.column(i).into_owned())
            .collect();
        crate::linalg::orthonormalize(d, cols.iter())
    };
    let x_deviation = x_range.max_principal_sine(&coisometric)?;

    let (coisometric_defect, coisometric_invariance_defect) = if coisometric.rank() == 0 {
        (0.0, 0.0)
    } else {
        let f = coisometric.frame();
        let r = coisometric.rank();
        let mut sum = CMat::zeros(r, r);
        let mut leak: f64 = 0.0;
        for s in &t.ops {
            let v = f.ad_mul(&(s * f));
            sum += &v * v.adjoint();
            leak = leak.max(spectral_norm(&coisometric.residual(&(s * f)))?);
        }
        (spectral_norm(&(sum - CMat::identity(r, r)))?, leak)
    };

    Ok(WoldResult {
        dagger: report,
        wandering,
        classes,
        recovered_graph,
        class_vertex,
        op_edge,
        word_vectors,
        pure,
        coisometric,
        stabilized,
        levels_used,
        wandering_split_defect,
        word_orthogonality_defect,
        x_deviation,
        x_iterations,
        coisometric_defect,
        coisometric_invariance_defect,
    })
}

/// Label `(class, copy, model basis index)` of a model vector.
pub type ModelLabel = (usize, usize, usize);

#[derive(Clone, Debug)]
pub struct Intertwiner {
    pub model_space: Arc<FockSpace>,
    pub labels: Vec<ModelLabel>,
    /// `U`: rows are model labels, columns ambient coordinates.
    pub unitary: CMat,
    /// Model generators on the label basis, in operator order.
    pub model_generators: Vec<SparseMatrix>,
    pub orthonormality_defect: f64,
    pub intertwining_defect: f64,
    /// True when the mapped word vectors span the whole pure part.
    pub covers_pure_part: bool,
}

impl Intertwiner {
    pub fn depth(&self) -> usize {
        self.model_space.depth()
    }

    pub fn label_index(&self, label: &ModelLabel) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }
}

/// Maps the exact word vectors `w(S)η_k^{(j)}` onto `⊕_k (Q_k H_G)^{(α_k)}` for the recovered graph.
pub fn build_intertwiner(r: &WoldResult, t: &PartialIsometryTuple) -> Result<Intertwiner> {
    let g = Arc::new(r.recovered_graph.clone());
    let path_of = |w: &WordVector| -> Result<Path> {
        let vertex =
            r.class_vertex[w.class].ok_or_else(|| Error::BasisMismatch("word vector on a zero class".into()))?;
        if w.ops.is_empty() {
            return Ok(Path::vertex(vertex));
        }
        let edges = w
            .ops
            .iter()
            .map(|&i| r.op_edge[i].ok_or_else(|| Error::BasisMismatch(format!("S{} is zero", i + 1))))
            .collect::<Result<Vec<_>>>()?;
        let p = Path::from_edges(&g, edges).map_err(|e| Error::BasisMismatch(e.to_string()))?;
        if p.src() != vertex {
            return Err(Error::BasisMismatch(format!(
                "word {} leaves its class",
                path_label(&w.ops)
            )));
        }
        Ok(p)
    };
    let exact: Vec<(&WordVector, Path)> = r
        .word_vectors
        .iter()
        .filter(|w| w.exact && !r.classes[w.class].is_zero)
        .map(|w| path_of(w).map(|p| (w, p)))
        .collect::<Result<Vec<_>>>()?;
    if exact.is_empty() {
        return Err(Error::BasisMismatch("the pure part is zero".into()));
    }
    let max_level = exact.iter().map(|(_, p)| p.len()).max().unwrap_or(0);
    let model_space = FockSpace::build(g.clone(), max_level.max(1))?;

    // Deepest level D such that every model label of length ≤ D has an exact word vector.
    let have = |c: usize, j: usize, p: &Path| exact.iter().any(|(w, q)| w.class == c && w.copy == j && q == p);
    let mut depth = max_level;
    'levels: for level in 0..=max_level {
        for (c, class) in r.classes.iter().enumerate() {
            let Some(v) = r.class_vertex[c] else { continue };
            for j in 0..class.multiplicity() {
                for &u in model_space.with_src(v) {
                    let p = model_space.path(u);
                    if p.len() == level && !have(c, j, p) {
                        if level == 0 {
                            return Err(Error::BasisMismatch("missing wandering vector".into()));
                        }
                        depth = level - 1;
                        break 'levels;
                    }
                }
            }
        }
    }

    let mut labels: Vec<ModelLabel> = Vec::new();
    let mut columns: Vec<CVec> = Vec::new();
    for (c, class) in r.classes.iter().enumerate() {
        let Some(v) = r.class_vertex[c] else { continue };
        for j in 0..class.multiplicity() {
            for &u in model_space.with_src(v) {
                let p = model_space.path(u);
                if p.len() > depth {
                    continue;
                }
                let (w, _) = exact
                    .iter()
                    .find(|(w, q)| w.class == c && w.copy == j && q == p)
                    .expect("checked above");
                labels.push((c, j, u));
                columns.push(w.vector.clone());
            }
        }
    }
    let v = CMat::from_columns(&columns);
    let m = labels.len();
    let orthonormality_defect = spectral_norm(&(v.ad_mul(&v) - CMat::identity(m, m)))?;
    if orthonormality_defect > t.tol.max(1e-8) {
        return Err(Error::BasisMismatch(format!(
            "word vectors are not orthonormal (defect {orthonormality_defect:e})"
        )));
    }
    let unitary = v.adjoint();

    let mut model_generators = Vec::with_capacity(t.len());
    for i in 0..t.len() {
        let mut trip = Vec::new();
        if let Some(e) = r.op_edge[i] {
            let ep = Path::edge(&g, e);
            for (col, &(c, j, u)) in labels.iter().enumerate() {
                let Some(eu) = compose(&ep, model_space.path(u)) else {
                    continue;
                };
                if eu.len() > depth {
                    continue;
                }
                let target = model_space.index_of(&eu).expect("within model depth");
                let row = labels.iter().position(|&l| l == (c, j, target)).expect("label present");
                trip.push((row, col, c64(1.0, 0.0)));
            }
        }
        model_generators.push(SparseMatrix::from_triplets(m, m, trip));
    }

    let inner: Vec<usize> = (0..m)
        .filter(|&col| model_space.path(labels[col].2).len() < depth)
        .collect();
    let vin = v.select_columns(inner.iter());
    let mut intertwining_defect: f64 = 0.0;
    for (i, s) in t.ops.iter().enumerate() {
        let lhs = &unitary * s * &vin;
        let rhs = model_generators[i].mul_dense(&(&unitary * &vin));
        intertwining_defect = intertwining_defect.max(spectral_norm(&(lhs - rhs))?);
    }
    let covers_pure_part = rank(&v) == r.pure.rank();
    Ok(Intertwiner {
        model_space,
        labels,
        unitary,
        model_generators,
        orthonormality_defect,
        intertwining_defect,
        covers_pure_part,
    })
}
