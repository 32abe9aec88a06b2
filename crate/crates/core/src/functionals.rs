//! Realizing finite-rank functionals `φ(A) = Σ ⟨A x_i, y_i⟩` as vector functionals.

use std::sync::Arc;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fock::{lambda_word, FockSpace, Operator};
use crate::linalg::{c64, spectral_norm, CMat, CVec, SparseMatrix};
use crate::semigroupoid::Path;
use crate::wold::{amplified_generator_tuple, decompose, DEFAULT_TOL};

#[derive(Clone, Debug)]
pub struct FiniteRankFunctional {
    x: Vec<CVec>,
    y: Vec<CVec>,
}

impl FiniteRankFunctional {
    pub fn new(x: Vec<CVec>, y: Vec<CVec>) -> Result<Self> {
        if x.is_empty() || x.len() != y.len() {
            return Err(Error::Malformed(format!(
                "a rank-r functional needs r ≥ 1 left and right vectors (got {} and {})",
                x.len(),
                y.len()
            )));
        }
        let d = x[0].len();
        if let Some(bad) = x.iter().chain(&y).find(|v| v.len() != d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: bad.len(),
            });
        }
        Ok(FiniteRankFunctional { x, y })
    }

    pub fn rank(&self) -> usize {
        self.x.len()
    }

    pub fn dim(&self) -> usize {
        self.x[0].len()
    }

    pub fn left_vectors(&self) -> &[CVec] {
        &self.x
    }

    pub fn right_vectors(&self) -> &[CVec] {
        &self.y
    }

    pub fn scale(&self, a: Complex64) -> FiniteRankFunctional {
        FiniteRankFunctional {
            x: self.x.iter().map(|v| v * a).collect(),
            y: self.y.clone(),
        }
    }

    pub fn evaluate_matrix(&self, a: &SparseMatrix) -> Complex64 {
        self.x.iter().zip(&self.y).map(|(x, y)| y.dotc(&a.mul_vec(x))).sum()
    }

    pub fn evaluate(&self, a: &Operator) -> Complex64 {
        self.evaluate_matrix(a.matrix())
    }
}

/// `⟨A^{(n)} ξ, η⟩` for vectors in the `n`-fold ampliation.
pub fn vector_functional(a: &SparseMatrix, xi: &CVec, eta: &CVec) -> Complex64 {
    let d = a.ncols();
    let n = xi.len() / d;
    (0..n)
        .map(|j| {
            let x = xi.rows(j * d, d).into_owned();
            let y = eta.rows(j * d, d);
            y.dotc(&a.mul_vec(&x))
        })
        .sum()
}

/// Upper bound on `r · dim` for the working space used by the Wold model.
pub const WORK_DIM_CAP: usize = 1200;

#[derive(Clone, Debug, Serialize)]
pub struct VectorRealization {
    /// Ampliation order the vectors live in; 1 means `ξ, η ∈ H_K`.
    pub order: usize,
    #[serde(skip)]
    pub xi: CVec,
    #[serde(skip)]
    pub eta: CVec,
    pub defect: f64,
    /// `α_k` per vertex name of the modelled graph.
    pub multiplicities: Vec<(String, usize)>,
    pub sample_size: usize,
    pub margin: usize,
    /// Depth of the Fock space the cyclic subspace and its Wold model were computed in.
    pub work_depth: usize,
    /// `‖VᴴV − I‖` for the word vectors `S_u ω` with `|u| ≤ K`.
    pub isometry_defect: f64,
    pub x_residual: f64,
    pub y_residual: f64,
}

/// Sample words: the given list, or every path of length ≤ K − margin.
fn samples(space: &Arc<FockSpace>, sample_words: Option<&[Path]>, margin: usize) -> Result<Vec<Path>> {
    Ok(match sample_words {
        Some(w) => w.to_vec(),
        None => space
            .interior(margin)?
            .into_iter()
            .map(|i| space.path(i).clone())
            .collect(),
    })
}

/// Defect `max_w |φ(L_w) − ⟨L_w ξ, η⟩|` over the sample words.
pub fn realization_defect(
    phi: &FiniteRankFunctional,
    space: &Arc<FockSpace>,
    xi: &CVec,
    eta: &CVec,
    words: &[Path],
) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for w in words {
        let l = lambda_word(space, w)?;
        let diff = phi.evaluate(&l) - vector_functional(l.matrix(), xi, eta);
        worst = worst.max(diff.norm());
    }
    Ok(worst)
}

struct Embedding {
    alpha: Vec<usize>,
    xi: CVec,
    eta: CVec,
    isometry_defect: f64,
    x_residual: f64,
    y_residual: f64,
}

/// Cyclic subspace of `x̃` in the `r`-fold ampliation of `work`, its Wold model, and the
/// images of `x̃, ỹ` cut back to the first `d` basis vectors.
fn embed(work: &Arc<FockSpace>, xt: &CVec, yt: &CVec, r: usize, d: usize, depth: usize) -> Result<Embedding> {
    let g = work.graph();
    let dw = work.dim();
    let lift = |v: &CVec| {
        let mut out = CVec::zeros(r * dw);
        for j in 0..r {
            out.rows_mut(j * dw, d).copy_from(&v.rows(j * d, d));
        }
        out
    };
    let (xw, yw) = (lift(xt), lift(yt));
    let tuple = amplified_generator_tuple(work, r, DEFAULT_TOL)?;
    // The seeds P_k x̃ account for the vertex projections in the algebra.
    let seeds: Vec<CVec> = (0..g.num_vertices())
        .map(|k| {
            let mut v = CVec::zeros(r * dw);
            for j in 0..r {
                for &i in work.with_dst(k) {
                    v[j * dw + i] = xw[j * dw + i];
                }
            }
            v
        })
        .collect();
    let m = tuple.invariant_span(&seeds, work.depth());
    let sub = tuple.restrict(&m)?;
    let wold = decompose(&sub, Some(0))?;

    let mut alpha = vec![0usize; g.num_vertices()];
    let (xm, ym) = (m.frame().ad_mul(&xw), m.frame().ad_mul(&yw));
    let mut columns: Vec<(usize, usize, usize, CVec)> = Vec::new();
    for class in wold.classes.iter().filter(|c| !c.is_zero && c.multiplicity() > 0) {
        let k = g.edge(class.ops[0]).src;
        for omega in class.eta.frame().column_iter() {
            let copy = alpha[k];
            alpha[k] += 1;
            let mut vecs: Vec<Option<CVec>> = vec![None; dw];
            for &u in work.with_src(k) {
                let p = work.path(u);
                let v = if p.is_vertex() {
                    omega.into_owned()
                } else {
                    let tail = Path::from_edges(g, p.edges()[1..].to_vec()).unwrap_or_else(|_| Path::vertex(k));
                    let t = work.index_of(&tail).expect("tail is shorter");
                    let prev = vecs[t].as_ref().expect("canonical order visits tails first");
                    &sub.ops()[p.edges()[0]] * prev
                };
                columns.push((k, copy, u, v.clone()));
                vecs[u] = Some(v);
            }
        }
    }
    let order = alpha.iter().copied().max().unwrap_or(0).max(1);

    let mut xi = CVec::zeros(order * d);
    let mut eta = CVec::zeros(order * d);
    let mut fx = CVec::zeros(xm.len());
    let mut fy = CVec::zeros(ym.len());
    let mut low = Vec::new();
    for (_, copy, u, v) in &columns {
        let (cx, cy) = (v.dotc(&xm), v.dotc(&ym));
        fx += v * cx;
        fy += v * cy;
        if *u < d {
            xi[copy * d + u] += cx;
            eta[copy * d + u] += cy;
        }
        if work.path(*u).len() <= depth {
            low.push(v.clone());
        }
    }
    let isometry_defect = if low.is_empty() {
        0.0
    } else {
        let v = CMat::from_columns(&low);
        spectral_norm(&(v.ad_mul(&v) - CMat::identity(low.len(), low.len())))?
    };
    Ok(Embedding {
        alpha,
        xi,
        eta,
        isometry_defect,
        x_residual: (&xm - fx).norm(),
        y_residual: (&ym - fy).norm(),
    })
}

/// Builds `ξ, η` with `φ(A) = ⟨A ξ, η⟩` on the sampled words, via the cyclic subspace
/// generated by `x̃` in the `r`-fold ampliation and its Wold model.
///
/// Wandering vectors of a cyclic subspace usually have infinite support, so the model is
/// computed in a deeper working space and the resulting vectors are cut back to `H_K`.
/// Working depths `2K, 4K, 8K, …` are tried while `r · dim` stays within [`WORK_DIM_CAP`].
pub fn realize_vector_functional(
    phi: &FiniteRankFunctional,
    space: &Arc<FockSpace>,
    sample_words: Option<&[Path]>,
    margin: usize,
) -> Result<VectorRealization> {
    let d = space.dim();
    if phi.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: phi.dim(),
        });
    }
    let words = samples(space, sample_words, margin)?;
    let r = phi.rank();
    let stack = |vs: &[CVec]| {
        let mut out = CVec::zeros(r * d);
        for (j, v) in vs.iter().enumerate() {
            out.rows_mut(j * d, d).copy_from(v);
        }
        out
    };
    let (xt, yt) = (stack(phi.left_vectors()), stack(phi.right_vectors()));
    let g = space.graph();
    let k = space.depth();
    if xt.norm() == 0.0 {
        let (xi, eta) = (CVec::zeros(d), CVec::zeros(d));
        let defect = realization_defect(phi, space, &xi, &eta, &words)?;
        return Ok(VectorRealization {
            order: 1,
            xi,
            eta,
            defect,
            multiplicities: g.vertices().iter().map(|v| (v.clone(), 0)).collect(),
            sample_size: words.len(),
            margin,
            work_depth: k,
            isometry_defect: 0.0,
            x_residual: 0.0,
            y_residual: 0.0,
        });
    }

    let mut best: Option<VectorRealization> = None;
    for factor in [1usize, 2, 4, 8, 16, 32] {
        let depth = if factor == 1 { k } else { k * factor };
        let work = if factor == 1 {
            space.clone()
        } else {
            match FockSpace::build_with_cap(space.graph().clone(), depth, WORK_DIM_CAP / r) {
                Ok(w) => w,
                Err(Error::DimensionCap { .. }) => break,
                Err(e) => return Err(e),
            }
        };
        let e = embed(&work, &xt, &yt, r, d, k)?;
        let order = e.alpha.iter().copied().max().unwrap_or(0).max(1);
        let defect = realization_defect(phi, space, &e.xi, &e.eta, &words)?;
        let done = defect <= 1e-10;
        let candidate = VectorRealization {
            order,
            xi: e.xi,
            eta: e.eta,
            defect,
            multiplicities: g.vertices().iter().cloned().zip(e.alpha).collect(),
            sample_size: words.len(),
            margin,
            work_depth: depth,
            isometry_defect: e.isometry_defect,
            x_residual: e.x_residual,
            y_residual: e.y_residual,
        };
        if best.as_ref().is_none_or(|b| candidate.defect < b.defect) {
            best = Some(candidate);
        }
        if done {
            break;
        }
    }
    Ok(best.expect("the given depth is always tried"))
}

/// As [`realize_vector_functional`], but insists on vectors in `H_K` itself.
pub fn realize_single_vector(
    phi: &FiniteRankFunctional,
    space: &Arc<FockSpace>,
    sample_words: Option<&[Path]>,
    margin: usize,
) -> Result<VectorRealization> {
    let r = realize_vector_functional(phi, space, sample_words, margin)?;
    if r.order > 1 {
        return Err(Error::AmpliationRequired(r.order));
    }
    Ok(r)
}

/// Scalar multiples of a realization, for linearity checks: `αφ ↔ (αξ, η)`.
pub fn scale_realization(r: &VectorRealization, a: Complex64) -> VectorRealization {
    let mut out = r.clone();
    out.xi = &r.xi * a;
    out.eta = r.eta.clone();
    out
}

pub fn unit(re: f64) -> Complex64 {
    c64(re, 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::DirectedGraph;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn space(t: &str, k: usize) -> Arc<FockSpace> {
        FockSpace::build(Arc::new(DirectedGraph::template(t).unwrap()), k).unwrap()
    }

    #[test]
    fn vacuum_functional() {
        let s = space("cycle:2", 4);
        let v = s.vacuum_vector();
        let phi = FiniteRankFunctional::new(vec![v.clone()], vec![v]).unwrap();
        let r = realize_single_vector(&phi, &s, None, 1).unwrap();
        assert!(r.defect <= 1e-8);
        assert_eq!(r.order, 1);
        assert_eq!(r.multiplicities, vec![("1".to_string(), 1), ("2".to_string(), 1)]);
    }

    #[test]
    fn rank_two_on_single_loop() {
        let s = space("cycle:1", 6);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let x = vec![s.random_vector(1, &mut rng), s.random_vector(1, &mut rng)];
        let y = vec![s.random_vector(6, &mut rng), s.random_vector(6, &mut rng)];
        let phi = FiniteRankFunctional::new(x, y).unwrap();
        let r = realize_single_vector(&phi, &s, None, 2).unwrap();
        assert!(
            r.defect <= 1e-6,
            "defect {} {:?}",
            r.defect,
            (
                r.order,
                &r.multiplicities,
                r.work_depth,
                r.isometry_defect,
                r.x_residual,
                r.y_residual
            )
        );
        let a = c64(0.3, -1.2);
        let scaled = scale_realization(&r, a);
        let words: Vec<Path> = s.interior(2).unwrap().iter().map(|&i| s.path(i).clone()).collect();
        let d = realization_defect(&phi.scale(a), &s, &scaled.xi, &scaled.eta, &words).unwrap();
        assert!(d <= 1e-6);
    }

    #[test]
    fn zero_functional() {
        let s = space("free:2", 2);
        let z = CVec::zeros(s.dim());
        let phi = FiniteRankFunctional::new(vec![z.clone()], vec![z]).unwrap();
        let r = realize_vector_functional(&phi, &s, None, 0).unwrap();
        assert_eq!(r.xi.norm(), 0.0);
        assert_eq!(r.eta.norm(), 0.0);
        assert_eq!(r.defect, 0.0);
    }

    #[test]
    fn bad_shapes() {
        assert!(FiniteRankFunctional::new(vec![], vec![]).is_err());
        assert!(FiniteRankFunctional::new(vec![CVec::zeros(2)], vec![CVec::zeros(3)]).is_err());
    }
}
