//! Right and two-sided ideals through their ranges `μ(J) = closure(J ξ_φ)`.

use std::sync::{Arc, OnceLock};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{
    beurling_left_symbol, commutation_defect, fourier_coeffs, left_op, right_op, vertex_proj, FockSpace, Operator,
    SymbolicOperator, ASSERT_TOL,
};
use crate::graph::DirectedGraph;
use crate::linalg::{c64, spectral_norm, CMat, CVec, OrthoBuilder, SparseMatrix, Subspace};
use crate::semigroupoid::{contains_factor, permutation_orbit, Path};

pub const IDEAL_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IdealSide {
    Right,
    TwoSided,
    Left,
}

impl IdealSide {
    pub fn from_two_sided(two_sided: bool) -> IdealSide {
        if two_sided {
            IdealSide::TwoSided
        } else {
            IdealSide::Right
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct IdealRange {
    #[serde(skip)]
    pub subspace: Subspace,
    pub rank: usize,
    pub iterations: usize,
    pub stabilized: bool,
    /// `max_e ‖(I − P_M) R_e P‖` with `P` the part of `M` inside the interior.
    pub right_invariance_defect: f64,
    pub left_invariance_defect: Option<f64>,
}

fn section(space: &FockSpace, m: &Subspace, margin: usize) -> Subspace {
    let level = space.depth().saturating_sub(margin.max(1));
    m.restrict_to_coordinates(&space.level_mask(level))
}

fn invariance_defect(m: &Subspace, inner: &Subspace, ops: &[SparseMatrix]) -> Result<f64> {
    let mut worst: f64 = 0.0;
    if inner.rank() == 0 {
        return Ok(0.0);
    }
    for op in ops {
        let image = op.mul_dense(inner.frame());
        worst = worst.max(spectral_norm(&m.residual(&image))?);
    }
    Ok(worst)
}

/// Smallest subspace containing `seeds` and invariant under `ops` wherever nothing is lost
/// to truncation: the operators are only applied to the part of the span inside `H_{K−1}`.
fn truncated_closure(space: &FockSpace, seeds: &[CVec], ops: &[SparseMatrix]) -> (Subspace, usize, bool) {
    let mut b = OrthoBuilder::new(space.dim());
    for s in seeds {
        b.push(s);
    }
    let mut m = b.finish();
    let keep = space.level_mask(space.depth().saturating_sub(1));
    let max_iter = space.depth() + 2;
    for it in 1..=max_iter {
        let inner = m.restrict_to_coordinates(&keep);
        let mut b = OrthoBuilder::from_subspace(&m);
        let mut grown = false;
        for op in ops {
            let image = op.mul_dense(inner.frame());
            for c in image.column_iter() {
                grown |= b.push(&c.into_owned());
            }
        }
        m = b.finish();
        if !grown {
            return (m, it, true);
        }
    }
    (m, max_iter, false)
}

fn right_ops(space: &Arc<FockSpace>) -> Result<Vec<SparseMatrix>> {
    (0..space.graph().num_edges())
        .map(|e| right_op(space, e).map(|o| o.matrix().clone()))
        .collect()
}

fn left_ops(space: &Arc<FockSpace>) -> Result<Vec<SparseMatrix>> {
    (0..space.graph().num_edges())
        .map(|e| left_op(space, e).map(|o| o.matrix().clone()))
        .collect()
}

/// `μ(J)` for the ideal generated by `gens`: the span of `A ξ_u` (and `L_w A ξ_u` when
/// two-sided) over the vectors that fit in `H_K` without truncation.
pub fn mu_from_generators(
    gens: &[Operator],
    side: IdealSide,
    space: &Arc<FockSpace>,
    margin: usize,
) -> Result<IdealRange> {
    if side == IdealSide::Left {
        return Err(Error::LeftIdeal);
    }
    space.interior(margin)?;
    let g = space.graph();
    let mut seeds = Vec::new();
    for a in gens {
        if !Arc::ptr_eq(a.space(), space) && a.space().dim() != space.dim() {
            return Err(Error::SpaceMismatch);
        }
        let defect = commutation_defect(a, margin)?;
        if defect > IDEAL_TOL {
            return Err(Error::NotInAlgebra(defect));
        }
        for k in 0..g.num_vertices() {
            let col = a.apply(&space.basis_vector(space.vertex_index(k)));
            if side == IdealSide::TwoSided {
                for j in 0..g.num_vertices() {
                    let mut v = col.clone();
                    for i in 0..space.dim() {
                        if space.path(i).dst() != j {
                            v[i] = c64(0.0, 0.0);
                        }
                    }
                    seeds.push(v);
                }
            } else {
                seeds.push(col);
            }
        }
    }
    let rights = right_ops(space)?;
    let lefts = left_ops(space)?;
    let ops: Vec<SparseMatrix> = match side {
        IdealSide::TwoSided => rights.iter().chain(&lefts).cloned().collect(),
        _ => rights.clone(),
    };
    let (m, iterations, stabilized) = truncated_closure(space, &seeds, &ops);
    let inner = section(space, &m, margin);
    let right_invariance_defect = invariance_defect(&m, &inner, &rights)?;
    let left_invariance_defect = if side == IdealSide::TwoSided {
        Some(invariance_defect(&m, &inner, &lefts)?)
    } else {
        None
    };
    Ok(IdealRange {
        rank: m.rank(),
        subspace: m,
        iterations,
        stabilized,
        right_invariance_defect,
        left_invariance_defect,
    })
}

/// An ideal given by generators, with its range computed once on demand.
#[derive(Debug)]
pub struct IdealHandle {
    space: Arc<FockSpace>,
    generators: Vec<Operator>,
    side: IdealSide,
    margin: usize,
    range: OnceLock<IdealRange>,
}

impl IdealHandle {
    pub fn new(space: &Arc<FockSpace>, generators: Vec<Operator>, side: IdealSide, margin: usize) -> Result<Self> {
        if side == IdealSide::Left {
            return Err(Error::LeftIdeal);
        }
        space.interior(margin)?;
        Ok(IdealHandle {
            space: space.clone(),
            generators,
            side,
            margin,
            range: OnceLock::new(),
        })
    }

    pub fn from_symbolic(
        space: &Arc<FockSpace>,
        generators: &[SymbolicOperator],
        side: IdealSide,
        margin: usize,
    ) -> Result<Self> {
        let ops = generators.iter().map(|g| g.at(space)).collect::<Result<Vec<_>>>()?;
        Self::new(space, ops, side, margin)
    }

    pub fn space(&self) -> &Arc<FockSpace> {
        &self.space
    }

    pub fn generators(&self) -> &[Operator] {
        &self.generators
    }

    pub fn side(&self) -> IdealSide {
        self.side
    }

    pub fn margin(&self) -> usize {
        self.margin
    }

    pub fn range(&self) -> Result<&IdealRange> {
        if let Some(r) = self.range.get() {
            return Ok(r);
        }
        let r = mu_from_generators(&self.generators, self.side, &self.space, self.margin)?;
        Ok(self.range.get_or_init(|| r))
    }

    pub fn membership(&self, a: &Operator) -> Result<Membership> {
        Ok(iota_membership(a, &self.range()?.subspace, self.margin))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Membership {
    pub member: bool,
    pub defect: f64,
}

/// `A ∈ ι(M)` iff `A ξ_φ ∈ M`; the defect is measured on the interior coordinates.
pub fn iota_membership(a: &Operator, m: &Subspace, margin: usize) -> Membership {
    let s = a.space();
    let v = a.apply(&s.vacuum_vector());
    let r = &v - m.project(&v);
    let n = s.interior_len(s.depth().saturating_sub(margin));
    let defect = r.rows(0, n).norm();
    Membership {
        member: defect <= IDEAL_TOL,
        defect,
    }
}

fn support(a: &Operator) -> Vec<(Path, Complex64)> {
    match a.fourier() {
        Some(f) => f.iter().map(|(&i, &c)| (a.space().path(i).clone(), c)).collect(),
        None => fourier_coeffs(a),
    }
}

/// Membership in the two-sided ideal generated by `L_w`: every Fourier path contains `w`.
pub fn word_ideal_membership(a: &Operator, w: &Path) -> bool {
    let g = a.space().graph();
    support(a).iter().all(|(p, _)| contains_factor(g, p, w))
}

#[derive(Clone, Debug)]
pub struct SymmetricFock {
    pub symmetric: Subspace,
    pub complement: Subspace,
}

/// The symmetric part of `H_K`: vertex vectors and symmetrized words of loop edges.
///
/// A path through a non-loop edge `e` satisfies `L_e = ±[L_e, P_k]`, so it lies in the
/// commutator range and contributes no symmetric vector.
pub fn symmetric_fock(space: &Arc<FockSpace>) -> SymmetricFock {
    let g = space.graph();
    let mut b = OrthoBuilder::new(space.dim());
    for p in space.basis() {
        if p.is_vertex() {
            b.push(&space.path_vector(p).expect("basis path"));
            continue;
        }
        if p.edges().iter().any(|&e| g.edge(e).src != g.edge(e).dst) {
            continue;
        }
        let orbit = permutation_orbit(g, p);
        if orbit[0] != *p {
            continue;
        }
        let mut v = CVec::zeros(space.dim());
        for q in &orbit {
            v[space.index_of(q).expect("same length")] += c64(1.0, 0.0);
        }
        b.push(&v);
    }
    let symmetric = b.finish();
    let complement = symmetric.complement();
    SymmetricFock { symmetric, complement }
}

/// Elementary commutators `[L_e, L_f]` (e ≠ f) and `[L_e, P_k]`, dropping the zero ones.
pub fn commutator_generators(graph: &Arc<DirectedGraph>) -> Vec<SymbolicOperator> {
    let mut out = Vec::new();
    let ne = graph.num_edges();
    let edge = |e| SymbolicOperator::word(graph, Path::edge(graph, e));
    for e in 0..ne {
        for f in e + 1..ne {
            out.push(edge(e).commutator(&edge(f)));
        }
        for k in 0..graph.num_vertices() {
            out.push(edge(e).commutator(&SymbolicOperator::word(graph, Path::vertex(k))));
        }
    }
    out.retain(|c| !c.is_zero());
    out
}

#[derive(Clone, Debug, Serialize)]
pub struct CommutatorRange {
    pub range: IdealRange,
    /// Largest principal sine against the complement of the symmetric Fock space.
    pub symmetric_mismatch: f64,
    pub matches: bool,
}

pub fn commutator_ideal_range(space: &Arc<FockSpace>, margin: usize) -> Result<CommutatorRange> {
    let gens = commutator_generators(space.graph())
        .iter()
        .map(|c| c.at(space))
        .collect::<Result<Vec<_>>>()?;
    let range = mu_from_generators(&gens, IdealSide::TwoSided, space, margin)?;
    let sym = symmetric_fock(space);
    let symmetric_mismatch = range.subspace.max_principal_sine(&sym.complement)?;
    Ok(CommutatorRange {
        matches: symmetric_mismatch <= IDEAL_TOL,
        range,
        symmetric_mismatch,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct WanderingSpace {
    #[serde(skip)]
    pub frame: Subspace,
    /// `dim Q_k 𝓦` per vertex name.
    pub per_vertex: Vec<(String, usize)>,
    pub total: usize,
}

/// `𝓦 = M ⊖ Σ_e R_e M`, where `R_e` is applied to the part of `M` inside `H_{K−1}`.
pub fn wandering_of_range(space: &Arc<FockSpace>, m: &Subspace) -> Result<WanderingSpace> {
    let inner = m.restrict_to_coordinates(&space.level_mask(space.depth().saturating_sub(1)));
    let mut b = OrthoBuilder::new(space.dim());
    for r in right_ops(space)? {
        let image = r.mul_dense(inner.frame());
        for c in image.column_iter() {
            b.push(&c.into_owned());
        }
    }
    let shifted = b.finish();
    let mut w = OrthoBuilder::new(space.dim());
    for c in m.frame().column_iter() {
        let c = c.into_owned();
        w.push(&(&c - shifted.project(&c)));
    }
    let frame = w.finish();
    let g = space.graph();
    let per_vertex: Vec<(String, usize)> = (0..g.num_vertices())
        .map(|k| {
            let mut q = frame.frame().clone();
            for i in 0..space.dim() {
                if space.path(i).src() != k {
                    q.row_mut(i).fill(c64(0.0, 0.0));
                }
            }
            (g.vertex_name(k).to_string(), crate::linalg::rank(&q))
        })
        .collect();
    let total = per_vertex.iter().map(|(_, d)| d).sum();
    Ok(WanderingSpace {
        frame,
        per_vertex,
        total,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct FiniteGenerationDiagnostic {
    pub depth: usize,
    pub s_at_depth: usize,
    pub s_at_next_depth: usize,
    /// Growth of `s` between the two depths suggests the ideal is not finitely generated.
    pub grows: bool,
}

pub fn finite_generation_diagnostic(
    graph: &Arc<DirectedGraph>,
    generators: &[SymbolicOperator],
    side: IdealSide,
    depth: usize,
) -> Result<FiniteGenerationDiagnostic> {
    let mut s = [0usize; 2];
    for (slot, k) in [depth, depth + 1].into_iter().enumerate() {
        let space = FockSpace::build(graph.clone(), k)?;
        let gens = generators.iter().map(|g| g.at(&space)).collect::<Result<Vec<_>>>()?;
        let m = mu_from_generators(&gens, side, &space, 0)?;
        s[slot] = wandering_of_range(&space, &m.subspace)?.total;
    }
    Ok(FiniteGenerationDiagnostic {
        depth,
        s_at_depth: s[0],
        s_at_next_depth: s[1],
        grows: s[1] > s[0],
    })
}

#[derive(Clone, Debug)]
pub struct Factorization {
    /// `A_j = L_{ζ_j}ᴴ A`.
    pub factors: Vec<Operator>,
    pub reconstruction_defect: f64,
    pub commutation_defects: Vec<f64>,
    /// `max_j ‖L_{ζ_j}ᴴ L_{ζ_j} A_j − A_j‖` on the interior.
    pub normalization_defect: f64,
    pub membership: Membership,
}

fn right_span(space: &FockSpace, zetas: &[CVec]) -> Subspace {
    let mut b = OrthoBuilder::new(space.dim());
    for z in zetas {
        let degree = space.support_degree(z).unwrap_or(0);
        for p in space.basis() {
            if p.len() + degree <= space.depth() {
                b.push(&space.right_translate(p, z));
            }
        }
    }
    b.finish()
}

/// `A = Σ_j L_{ζ_j} A_j` for `A` in the right ideal whose range is generated by the
/// right-wandering vectors `ζ_j`. All checks use `H_{K−margin}`, so the margin should be at
/// least `deg A + 1` for the commutation checks on `A_j` to be free of truncation effects.
pub fn factor_through_wandering(a: &Operator, zetas: &[CVec], margin: usize) -> Result<Factorization> {
    let s = a.space();
    let cols = s.interior(margin)?;
    let symbols = zetas
        .iter()
        .map(|z| beurling_left_symbol(s, z))
        .collect::<Result<Vec<_>>>()?;
    // Ranges of distinct symbols must be orthogonal.
    for i in 0..symbols.len() {
        for j in 0..i {
            let cross = symbols[i]
                .operator
                .matrix()
                .select_columns(&cols)
                .adjoint()
                .mul(&symbols[j].operator.matrix().select_columns(&cols))?;
            let overlap = cross.max_abs();
            if overlap > ASSERT_TOL {
                return Err(Error::NotWandering {
                    first: format!("ζ{}", j + 1),
                    second: format!("ζ{}", i + 1),
                    overlap,
                });
            }
        }
    }
    let membership = iota_membership(a, &right_span(s, zetas), margin);
    if !membership.member {
        return Err(Error::NotMember(membership.defect));
    }
    let mut factors = Vec::with_capacity(symbols.len());
    let mut commutation_defects = Vec::with_capacity(symbols.len());
    let mut normalization_defect: f64 = 0.0;
    let mut sum = Operator::zero(s);
    for sym in &symbols {
        let l = &sym.operator;
        let aj = l.adjoint().mul(a)?;
        commutation_defects.push(commutation_defect(&aj, margin)?);
        let back = l.adjoint().mul(&l.mul(&aj)?)?;
        normalization_defect = normalization_defect.max(back.sub(&aj)?.norm_on_columns(&cols)?);
        sum = sum.add(&l.mul(&aj)?)?;
        factors.push(aj);
    }
    let reconstruction_defect = a.sub(&sum)?.norm_on_columns(&cols)?;
    Ok(Factorization {
        factors,
        reconstruction_defect,
        commutation_defects,
        normalization_defect,
        membership,
    })
}

#[derive(Clone, Debug)]
pub struct DegreeDecomposition {
    /// `Σ_{|w|<s} a_w L_w`.
    pub head: Operator,
    /// `(w, L_wᴴ (A − head))` for every path of length `s`.
    pub tails: Vec<(Path, Operator)>,
    pub reconstruction_defect: f64,
}

/// `A = Σ_{|w|<s} a_w L_w + Σ_{|w|=s} L_w A_w` with `A_w = L_wᴴ (A − head)`.
///
/// Subtracting the head first matters: `L_wᴴ L_v ≠ 0` when `v` is a proper prefix of `w`.
pub fn degree_decomposition(a: &Operator, s: usize, margin: usize) -> Result<DegreeDecomposition> {
    let space = a.space();
    let cols = space.interior(margin)?;
    let head = Operator::from_fourier(space, support(a).into_iter().filter(|(p, _)| p.len() < s))?;
    let rest = a.sub(&head)?;
    let mut sum = head.clone();
    let mut tails = Vec::new();
    for p in space.basis().iter().filter(|p| p.len() == s) {
        let l = crate::fock::lambda_word(space, p)?;
        let aw = l.adjoint().mul(&rest)?;
        sum = sum.add(&l.mul(&aw)?)?;
        tails.push((p.clone(), aw));
    }
    let reconstruction_defect = a.sub(&sum)?.norm_on_columns(&cols)?;
    Ok(DegreeDecomposition {
        head,
        tails,
        reconstruction_defect,
    })
}

/// `μ(J₁ ∨ J₂) = μ(J₁) + μ(J₂)` and `μ(J₁ ∧ J₂) = μ(J₁) ∩ μ(J₂)`.
pub fn lattice_join(a: &Subspace, b: &Subspace) -> Result<Subspace> {
    a.sum(b)
}

pub fn lattice_meet(a: &Subspace, b: &Subspace) -> Result<Subspace> {
    a.intersection(b, IDEAL_TOL)
}

/// Projection-style basis operators of `ι(M)` for an `ℜ_G`-invariant `M` spanned by
/// interior basis vectors: `L_w` for every `w` with `ξ_w ∈ M`.
pub fn iota_basis_ops(space: &Arc<FockSpace>, m: &Subspace, margin: usize) -> Result<Vec<Operator>> {
    let mut out = Vec::new();
    for i in space.interior(margin)? {
        let v = space.basis_vector(i);
        if m.contains(&v, IDEAL_TOL) {
            out.push(crate::fock::lambda_word(space, space.path(i))?);
        }
    }
    Ok(out)
}

/// `P_k` for every vertex, as the diagonal part of a quotient.
pub fn vertex_projections(space: &Arc<FockSpace>) -> Result<Vec<Operator>> {
    (0..space.graph().num_vertices())
        .map(|k| vertex_proj(space, k))
        .collect()
}

/// Gram defect of the columns of `m` against the identity, for orthonormality checks.
pub fn gram_defect(m: &CMat) -> Result<f64> {
    let n = m.ncols();
    spectral_norm(&(m.ad_mul(m) - CMat::identity(n, n)))
}
