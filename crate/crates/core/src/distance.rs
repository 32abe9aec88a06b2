//! Distances to ideals, their sampled lower bounds, quotient compressions and the
//! level-window estimates `‖B_k‖ ≤ ‖A_k‖ ≤ ‖X‖`.

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fock::{commutation_defect, left_op, FockSpace, Operator, SymbolicOperator};
use crate::graph::DirectedGraph;
use crate::ideals::{mu_from_generators, IdealHandle, IdealSide, IDEAL_TOL};
use crate::linalg::{spectral_norm, CMat, CVec, OrthoBuilder, SparseMatrix, Subspace};
use crate::semigroupoid::LowerSet;

pub const CHAIN_TOL: f64 = 1e-9;

/// An `n × n` matrix over the truncated algebra.
#[derive(Clone, Debug)]
pub struct BlockOperator {
    n: usize,
    blocks: Vec<Vec<Operator>>,
}

impl BlockOperator {
    /// Rows of blocks; every block must lie in the algebra on `H_{K−margin}`.
    pub fn new(blocks: Vec<Vec<Operator>>, margin: usize) -> Result<Self> {
        let n = blocks.len();
        if n == 0 || blocks.iter().any(|row| row.len() != n) {
            return Err(Error::Malformed(
                "block operator must be a non-empty square array".into(),
            ));
        }
        let space = blocks[0][0].space().clone();
        for b in blocks.iter().flatten() {
            if b.space().dim() != space.dim() || **b.space().graph() != **space.graph() {
                return Err(Error::SpaceMismatch);
            }
            let defect = commutation_defect(b, margin)?;
            if defect > IDEAL_TOL {
                return Err(Error::NotInAlgebra(defect));
            }
        }
        Ok(BlockOperator { n, blocks })
    }

    pub fn single(a: Operator) -> Self {
        BlockOperator {
            n: 1,
            blocks: vec![vec![a]],
        }
    }

    pub fn from_symbolic(space: &Arc<FockSpace>, blocks: &[Vec<SymbolicOperator>], margin: usize) -> Result<Self> {
        let ops = blocks
            .iter()
            .map(|row| row.iter().map(|b| b.at(space)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        Self::new(ops, margin)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn space(&self) -> &Arc<FockSpace> {
        self.blocks[0][0].space()
    }

    pub fn block(&self, i: usize, j: usize) -> &Operator {
        &self.blocks[i][j]
    }

    /// Largest stored Fourier degree over the blocks, if every block has a series.
    pub fn degree(&self) -> Option<usize> {
        self.blocks
            .iter()
            .flatten()
            .map(|b| b.degree())
            .try_fold(0, |acc, d| d.map(|d| acc.max(d)))
    }

    /// The `nd × nd` matrix with block `(i, j)` at rows `i·d..`, columns `j·d..`.
    pub fn matrix(&self) -> SparseMatrix {
        let d = self.space().dim();
        let mut t = Vec::new();
        for (i, row) in self.blocks.iter().enumerate() {
            for (j, b) in row.iter().enumerate() {
                t.extend(b.matrix().iter().map(|(r, c, v)| (i * d + r, j * d + c, v)));
            }
        }
        SparseMatrix::from_triplets(self.n * d, self.n * d, t)
    }
}

fn block_interior_columns(n: usize, d: usize, interior: &[usize]) -> Vec<usize> {
    (0..n).flat_map(|j| interior.iter().map(move |&u| j * d + u)).collect()
}

/// `‖(P_M^⊥ ⊗ I_n) A‖` with the columns restricted to `H_{K−margin}`.
pub fn dist_to_ideal(a: &BlockOperator, m: &Subspace, margin: usize) -> Result<f64> {
    let s = a.space();
    let d = s.dim();
    if m.ambient() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: m.ambient(),
        });
    }
    let cols = block_interior_columns(a.n, d, &s.interior(margin)?);
    let mut stacked = a.matrix().select_columns(&cols).to_dense();
    for i in 0..a.n {
        let rows = stacked.rows(i * d, d).into_owned();
        stacked.rows_mut(i * d, d).copy_from(&m.residual(&rows));
    }
    spectral_norm(&stacked)
}

#[derive(Clone, Debug, Serialize)]
pub struct DistTrend {
    pub depth: usize,
    pub margin: usize,
    pub previous: f64,
    pub current: f64,
    pub non_decreasing: bool,
}

/// `dist` at depths `K − 1` and `K` for symbolic data.
pub fn dist_trend(
    graph: &Arc<DirectedGraph>,
    blocks: &[Vec<SymbolicOperator>],
    generators: &[SymbolicOperator],
    side: IdealSide,
    depth: usize,
    margin: usize,
) -> Result<DistTrend> {
    if depth < 2 {
        return Err(Error::InvalidDepth(depth));
    }
    let mut values = [0.0; 2];
    for (slot, k) in [depth - 1, depth].into_iter().enumerate() {
        let space = FockSpace::build(graph.clone(), k)?;
        let m = margin.min(k);
        let a = BlockOperator::from_symbolic(&space, blocks, m)?;
        let gens = generators.iter().map(|g| g.at(&space)).collect::<Result<Vec<_>>>()?;
        let range = mu_from_generators(&gens, side, &space, m)?;
        values[slot] = dist_to_ideal(&a, &range.subspace, m)?;
    }
    Ok(DistTrend {
        depth,
        margin,
        previous: values[0],
        current: values[1],
        non_decreasing: values[1] >= values[0] - CHAIN_TOL,
    })
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct EstimateConfig {
    /// Number of vectors `z_i` in the factorization `Z = Σ z_i z_iᴴ`.
    pub r: usize,
    pub samples: usize,
    pub seed: u64,
    /// Highest level of the random vectors `z_i`.
    pub z_level: usize,
    /// Words applied to `z̃` are limited to `|w| ≤ K − margin − z_level`; `None` uses the
    /// block degree (or 1 without Fourier data).
    pub margin: Option<usize>,
}

impl Default for EstimateConfig {
    fn default() -> Self {
        EstimateConfig {
            r: 4,
            samples: 16,
            seed: 0,
            z_level: 1,
            margin: None,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct EstimateReport {
    pub estimate: f64,
    pub samples: Vec<f64>,
    pub running_max: Vec<f64>,
    pub r: usize,
    pub seed: u64,
    pub word_length: usize,
}

/// Layout of `(H^{(n)})^{(r)}`: copy `c`, block `i`, basis index `p` at `(c·n + i)·d + p`.
struct Ampliation {
    r: usize,
    n: usize,
    d: usize,
}

impl Ampliation {
    fn dim(&self) -> usize {
        self.r * self.n * self.d
    }

    fn slot(&self, c: usize, i: usize) -> usize {
        (c * self.n + i) * self.d
    }

    /// `(I_r ⊗ E_ij ⊗ T)` applied to `v`.
    fn unit_apply(&self, i: usize, j: usize, v: &CVec, t: impl Fn(&CVec) -> CVec) -> CVec {
        let mut out = CVec::zeros(self.dim());
        for c in 0..self.r {
            let x = v.rows(self.slot(c, j), self.d).into_owned();
            out.rows_mut(self.slot(c, i), self.d).copy_from(&t(&x));
        }
        out
    }
}

/// `max_Z ‖P_{N(Z)}^⊥ A^{(r)} P_{M(Z)}‖` over seeded random `Z` of rank `r`, a lower bound
/// for the distance from `A` to `M_n(J)`.
///
/// `M(Z)` is spanned by `(E_ij ⊗ L_w)^{(r)} z̃` for the words that keep `A^{(r)} M(Z)` inside
/// `H_K`. `N(Z)` is generated by the ideal generators applied to the span of all words
/// on `z̃`, closed under left multiplication for two-sided ideals.
pub fn techlemma_estimate(a: &BlockOperator, j: &IdealHandle, cfg: &EstimateConfig) -> Result<EstimateReport> {
    if cfg.r == 0 || cfg.samples == 0 {
        return Err(Error::Malformed("estimate needs r ≥ 1 and at least one sample".into()));
    }
    let s = a.space().clone();
    if s.dim() != j.space().dim() {
        return Err(Error::SpaceMismatch);
    }
    let (n, d, k) = (a.n, s.dim(), s.depth());
    let amp = Ampliation { r: cfg.r, n, d };
    let margin = cfg.margin.unwrap_or_else(|| a.degree().unwrap_or(1));
    let word_length = k.saturating_sub(margin + cfg.z_level);
    let ar = a.matrix().ampliate(cfg.r);
    let lefts = (0..s.graph().num_edges())
        .map(|e| left_op(&s, e))
        .collect::<Result<Vec<_>>>()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let mut samples = Vec::with_capacity(cfg.samples);
    let mut running_max = Vec::with_capacity(cfg.samples);
    let mut best: f64 = 0.0;
    for _ in 0..cfg.samples {
        let mut z = CVec::zeros(amp.dim());
        for c in 0..cfg.r {
            for i in 0..n {
                z.rows_mut(amp.slot(c, i), d)
                    .copy_from(&s.random_vector(cfg.z_level, &mut rng));
            }
        }
        let mut full = OrthoBuilder::new(amp.dim());
        let mut short = OrthoBuilder::new(amp.dim());
        for w in s.basis() {
            for (bi, bj) in (0..n).flat_map(|i| (0..n).map(move |j| (i, j))) {
                let v = amp.unit_apply(bi, bj, &z, |x| s.left_translate(w, x));
                full.push(&v);
                if w.len() <= word_length {
                    short.push(&v);
                }
            }
        }
        let (full, short) = (full.finish(), short.finish());

        let mut nb = OrthoBuilder::new(amp.dim());
        for g in j.generators() {
            for col in full.frame().column_iter() {
                let col = col.into_owned();
                for (bi, bj) in (0..n).flat_map(|i| (0..n).map(move |j| (i, j))) {
                    nb.push(&amp.unit_apply(bi, bj, &col, |x| g.apply(x)));
                }
            }
        }
        let mut nz = nb.finish();
        if j.side() == IdealSide::TwoSided {
            for _ in 0..=k {
                let mut b = OrthoBuilder::from_subspace(&nz);
                let mut grown = false;
                for l in &lefts {
                    for col in nz.frame().column_iter() {
                        let col = col.into_owned();
                        for i in 0..n {
                            grown |= b.push(&amp.unit_apply(i, i, &col, |x| l.apply(x)));
                        }
                    }
                }
                nz = b.finish();
                if !grown {
                    break;
                }
            }
        }
        let value = if short.rank() == 0 {
            0.0
        } else {
            let image = ar.mul_dense(short.frame());
            spectral_norm(&nz.residual(&image))?
        };
        best = best.max(value);
        samples.push(value);
        running_max.push(best);
    }
    Ok(EstimateReport {
        estimate: best,
        samples,
        running_max,
        r: cfg.r,
        seed: cfg.seed,
        word_length,
    })
}

#[derive(Clone, Debug)]
pub struct QuotientCompression {
    pub operator: Operator,
    /// Diagonal `⟨A ξ_k, ξ_k⟩` per vertex.
    pub vertex_part: Vec<num_complex::Complex64>,
    /// `max |(P^⊥ A − P^⊥ Σ_k a_k P_k)_{ij}|`: zero when the compression lies in `span{P^⊥ P_k}`.
    pub off_diagonal_mass: f64,
}

fn check_bi_invariant(space: &Arc<FockSpace>, m: &Subspace, margin: usize) -> Result<()> {
    let keep = space.level_mask(space.depth().saturating_sub(margin.max(1)));
    let inner = m.restrict_to_coordinates(&keep);
    if inner.rank() == 0 {
        return Ok(());
    }
    for e in 0..space.graph().num_edges() {
        for op in [left_op(space, e)?, crate::fock::right_op(space, e)?] {
            let defect = spectral_norm(&m.residual(&op.matrix().mul_dense(inner.frame())))?;
            if defect > IDEAL_TOL {
                return Err(Error::NotInvariant(format!(
                    "edge `{}` moves the subspace by {defect:e}",
                    space.graph().edge(e).name
                )));
            }
        }
    }
    Ok(())
}

/// `P_M^⊥ A` for the range `M` of a two-sided ideal.
pub fn quotient_compress(a: &Operator, m: &Subspace, margin: usize) -> Result<QuotientCompression> {
    let s = a.space();
    check_bi_invariant(s, m, margin)?;
    let dense = m.residual(&a.to_dense());
    let operator = Operator::from_dense(s, &dense)?;
    let g = s.graph();
    let vertex_part: Vec<_> = (0..g.num_vertices())
        .map(|k| {
            let i = s.vertex_index(k);
            a.matrix().get(i, i)
        })
        .collect();
    let mut diag = CMat::zeros(s.dim(), s.dim());
    for i in 0..s.dim() {
        diag[(i, i)] = vertex_part[s.path(i).dst()];
    }
    let off = &dense - m.residual(&diag);
    let off_diagonal_mass = off.iter().map(|v| v.norm()).fold(0.0, f64::max);
    Ok(QuotientCompression {
        operator,
        vertex_part,
        off_diagonal_mass,
    })
}

/// `‖P^⊥(AB) − (P^⊥A)(P^⊥B)‖` on `H_{K−margin}`.
pub fn multiplicativity_defect(a: &Operator, b: &Operator, m: &Subspace, margin: usize) -> Result<f64> {
    let s = a.space();
    let cols = s.interior(margin)?;
    let ab = m.residual(&a.mul(b)?.to_dense());
    let pa = m.residual(&a.to_dense());
    let pb = m.residual(&b.to_dense());
    let diff = ab - pa * pb;
    spectral_norm(&diff.select_columns(cols.iter()))
}

#[derive(Clone, Debug, Serialize)]
pub struct ParrotReport {
    pub level: usize,
    pub norm_x: f64,
    pub norm_a: f64,
    pub norm_b: f64,
}

fn window(space: &FockSpace, lambda: &LowerSet, level: usize) -> Result<Vec<usize>> {
    lambda
        .paths()
        .iter()
        .filter(|p| p.len() <= level)
        .map(|p| {
            space.index_of(p).ok_or(Error::TruncationBoundary {
                level: p.len(),
                depth: space.depth(),
            })
        })
        .collect()
}

/// `A_k = E_k X E_k`, `B_k = E_{k+1} X (E_{k+1} − E_0)` and the chain `‖B_k‖ ≤ ‖A_k‖ ≤ ‖X‖`.
pub fn parrot_estimates(x: &Operator, lambda: &LowerSet, k: usize) -> Result<ParrotReport> {
    let s = x.space();
    if k + 1 > s.depth() {
        return Err(Error::TruncationBoundary {
            level: k + 1,
            depth: s.depth(),
        });
    }
    let defect = commutation_defect(x, 1)?;
    if defect > IDEAL_TOL {
        return Err(Error::NotInAlgebra(defect));
    }
    let ek = window(s, lambda, k)?;
    let ek1 = window(s, lambda, k + 1)?;
    let e0 = window(s, lambda, 0)?;
    let tail: Vec<usize> = ek1.iter().copied().filter(|i| !e0.contains(i)).collect();
    let m = x.matrix();
    let a_k = m.select_rows(&ek).select_columns(&ek);
    let b_k = m.select_rows(&ek1).select_columns(&tail);
    let report = ParrotReport {
        level: k,
        norm_x: x.norm()?,
        norm_a: spectral_norm(&a_k)?,
        norm_b: spectral_norm(&b_k)?,
    };
    if report.norm_b > report.norm_a + CHAIN_TOL || report.norm_a > report.norm_x + CHAIN_TOL {
        return Err(Error::ChainViolated(format!(
            "‖B‖ = {}, ‖A‖ = {}, ‖X‖ = {}",
            report.norm_b, report.norm_a, report.norm_x
        )));
    }
    Ok(report)
}
