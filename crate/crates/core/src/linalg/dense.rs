use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::sparse::SparseMatrix;
use crate::error::{Error, Result};

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;

/// Below this size norms use a dense SVD.
pub const DENSE_LIMIT: usize = 512;
/// Relative singular-value threshold for rank decisions.
pub const RANK_TOL: f64 = 1e-8;
/// Default relative tolerance of [`spectral_norm`].
pub const NORM_TOL: f64 = 1e-10;
pub const POWER_SEED: u64 = 0xF0CC5;
const POWER_MAX_ITER: usize = 50_000;

pub fn c64(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Anything that can be applied to vectors and densified.
pub trait LinearMap {
    fn nrows(&self) -> usize;
    fn ncols(&self) -> usize;
    fn apply(&self, x: &CVec) -> CVec;
    fn apply_adjoint(&self, y: &CVec) -> CVec;
    fn dense(&self) -> CMat;
}

impl LinearMap for CMat {
    fn nrows(&self) -> usize {
        self.shape().0
    }
    fn ncols(&self) -> usize {
        self.shape().1
    }
    fn apply(&self, x: &CVec) -> CVec {
        self * x
    }
    fn apply_adjoint(&self, y: &CVec) -> CVec {
        self.ad_mul(y)
    }
    fn dense(&self) -> CMat {
        self.clone()
    }
}

impl LinearMap for SparseMatrix {
    fn nrows(&self) -> usize {
        SparseMatrix::nrows(self)
    }
    fn ncols(&self) -> usize {
        SparseMatrix::ncols(self)
    }
    fn apply(&self, x: &CVec) -> CVec {
        self.mul_vec(x)
    }
    fn apply_adjoint(&self, y: &CVec) -> CVec {
        self.adjoint_mul_vec(y)
    }
    fn dense(&self) -> CMat {
        self.to_dense()
    }
}

pub fn singular_values(m: &CMat) -> Vec<f64> {
    if m.is_empty() {
        return Vec::new();
    }
    let mut s: Vec<f64> = m.clone().singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.partial_cmp(a).unwrap());
    s
}

/// Largest singular value, relative accuracy [`NORM_TOL`].
pub fn spectral_norm<M: LinearMap + ?Sized>(m: &M) -> Result<f64> {
    spectral_norm_tol(m, NORM_TOL)
}

pub fn spectral_norm_tol<M: LinearMap + ?Sized>(m: &M, tol: f64) -> Result<f64> {
    let (r, c) = (m.nrows(), m.ncols());
    if r == 0 || c == 0 {
        return Ok(0.0);
    }
    if r.min(c) < DENSE_LIMIT && r.saturating_mul(c) <= 4_000_000 {
        return Ok(singular_values(&m.dense()).first().copied().unwrap_or(0.0));
    }
    power_norm(m, tol)
}

/// Power iteration on `MᴴM` from a fixed-seed Gaussian start.
pub fn power_norm<M: LinearMap + ?Sized>(m: &M, tol: f64) -> Result<f64> {
    let n = m.ncols();
    let mut rng = ChaCha8Rng::seed_from_u64(POWER_SEED);
    let mut v = CVec::from_iterator(
        n,
        (0..n).map(|_| {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            c64(re, im)
        }),
    );
    v /= c64(v.norm(), 0.0);
    let mut lambda = 0.0;
    let mut residual = f64::INFINITY;
    for _ in 0..POWER_MAX_ITER {
        let w = m.apply_adjoint(&m.apply(&v));
        let next = v.dotc(&w).re;
        let wn = w.norm();
        if wn == 0.0 {
            return Ok(0.0);
        }
        residual = (&w - &v * c64(next, 0.0)).norm() / wn;
        let converged = (next - lambda).abs() <= tol * next.abs() && residual <= tol.sqrt();
        lambda = next;
        v = w / c64(wn, 0.0);
        if converged {
            return Ok(lambda.max(0.0).sqrt());
        }
    }
    Err(Error::NonConvergence {
        iterations: POWER_MAX_ITER,
        residual,
    })
}

pub fn rank(m: &CMat) -> usize {
    let s = singular_values(m);
    let Some(&top) = s.first() else { return 0 };
    s.iter().filter(|&&x| x > RANK_TOL * top.max(f64::MIN_POSITIVE)).count()
}

/// Smallest eigenvalue of the Hermitian part.
pub fn hermitian_min_eigenvalue(h: &CMat) -> f64 {
    if h.is_empty() {
        return 0.0;
    }
    let sym = (h + h.adjoint()) * c64(0.5, 0.0);
    SymmetricEigen::new(sym)
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// Incremental modified Gram-Schmidt with one re-orthogonalization pass.
#[derive(Clone, Debug)]
pub struct OrthoBuilder {
    ambient: usize,
    basis: Vec<CVec>,
    scale: f64,
}

impl OrthoBuilder {
    pub fn new(ambient: usize) -> Self {
        OrthoBuilder {
            ambient,
            basis: Vec::new(),
            scale: 0.0,
        }
    }

    /// Residuals are compared against `RANK_TOL · scale` even before any vector is pushed.
    pub fn with_scale(ambient: usize, scale: f64) -> Self {
        OrthoBuilder {
            ambient,
            basis: Vec::new(),
            scale,
        }
    }

    pub fn from_subspace(s: &Subspace) -> Self {
        OrthoBuilder {
            ambient: s.ambient,
            basis: s.frame.column_iter().map(|c| c.into_owned()).collect(),
            scale: 1.0,
        }
    }

    pub fn rank(&self) -> usize {
        self.basis.len()
    }

    /// Adds `v` when its residual exceeds the relative threshold; returns whether it was added.
    pub fn push(&mut self, v: &CVec) -> bool {
        assert_eq!(v.len(), self.ambient, "vector dimension");
        let n0 = v.norm();
        if !n0.is_finite() || n0 == 0.0 {
            return false;
        }
        self.scale = self.scale.max(n0);
        if self.basis.len() >= self.ambient {
            return false;
        }
        let mut w = v.clone();
        for _ in 0..2 {
            for b in &self.basis {
                let c = b.dotc(&w);
                w.axpy(-c, b, c64(1.0, 0.0));
            }
        }
        let r = w.norm();
        if r <= RANK_TOL * self.scale {
            return false;
        }
        self.basis.push(w / c64(r, 0.0));
        true
    }

    pub fn finish(self) -> Subspace {
        let frame = if self.basis.is_empty() {
            CMat::zeros(self.ambient, 0)
        } else {
            CMat::from_columns(&self.basis)
        };
        Subspace {
            ambient: self.ambient,
            frame,
        }
    }
}

/// A subspace given by an orthonormal frame.
#[derive(Clone, Debug)]
pub struct Subspace {
    ambient: usize,
    frame: CMat,
}

impl Subspace {
    pub fn zero(ambient: usize) -> Self {
        Subspace {
            ambient,
            frame: CMat::zeros(ambient, 0),
        }
    }

    pub fn full(ambient: usize) -> Self {
        Subspace {
            ambient,
            frame: CMat::identity(ambient, ambient),
        }
    }

    /// Span of the listed standard basis vectors.
    pub fn coordinate(ambient: usize, indices: &[usize]) -> Self {
        let mut frame = CMat::zeros(ambient, indices.len());
        for (c, &i) in indices.iter().enumerate() {
            frame[(i, c)] = c64(1.0, 0.0);
        }
        Subspace { ambient, frame }
    }

    /// Accepts a frame whose columns are orthonormal within 1e-10.
    pub fn from_orthonormal(frame: CMat) -> Result<Self> {
        let r = frame.ncols();
        let defect = (frame.ad_mul(&frame) - CMat::identity(r, r)).norm();
        if defect > 1e-10 {
            return Err(Error::InvariantViolation(format!(
                "frame is not orthonormal (defect {defect:e})"
            )));
        }
        Ok(Subspace {
            ambient: frame.nrows(),
            frame,
        })
    }

    pub fn ambient(&self) -> usize {
        self.ambient
    }

    pub fn rank(&self) -> usize {
        self.frame.ncols()
    }

    pub fn frame(&self) -> &CMat {
        &self.frame
    }

    pub fn projector(&self) -> CMat {
        &self.frame * self.frame.adjoint()
    }

    pub fn project(&self, v: &CVec) -> CVec {
        &self.frame * self.frame.ad_mul(v)
    }

    /// `(I − P) M` for a matrix with `ambient` rows.
    pub fn residual(&self, m: &CMat) -> CMat {
        m - &self.frame * self.frame.ad_mul(m)
    }

    pub fn contains(&self, v: &CVec, tol: f64) -> bool {
        (v - self.project(v)).norm() <= tol * v.norm().max(1.0)
    }

    pub fn complement(&self) -> Subspace {
        let mut b = OrthoBuilder::from_subspace(self);
        let start = b.rank();
        for i in 0..self.ambient {
            if b.rank() == self.ambient {
                break;
            }
            let mut e = CVec::zeros(self.ambient);
            e[i] = c64(1.0, 0.0);
            b.push(&e);
        }
        let all = b.finish();
        Subspace {
            ambient: self.ambient,
            frame: all.frame.columns(start, all.rank() - start).into_owned(),
        }
    }

    pub fn sum(&self, other: &Subspace) -> Result<Subspace> {
        check_ambient(self, other)?;
        let mut b = OrthoBuilder::from_subspace(self);
        for c in other.frame.column_iter() {
            b.push(&c.into_owned());
        }
        Ok(b.finish())
    }

    /// Directions with principal cosine above `1 − tol`.
    pub fn intersection(&self, other: &Subspace, tol: f64) -> Result<Subspace> {
        check_ambient(self, other)?;
        if self.rank() == 0 || other.rank() == 0 {
            return Ok(Subspace::zero(self.ambient));
        }
        let cross = self.frame.ad_mul(&other.frame);
        let svd = cross.svd(true, false);
        let u = svd.u.expect("left singular vectors");
        let mut b = OrthoBuilder::new(self.ambient);
        for (i, &s) in svd.singular_values.iter().enumerate() {
            if s > 1.0 - tol {
                b.push(&(&self.frame * u.column(i)));
            }
        }
        Ok(b.finish())
    }

    /// Vectors of the subspace supported on the coordinates flagged in `keep`.
    pub fn restrict_to_coordinates(&self, keep: &[bool]) -> Subspace {
        assert_eq!(keep.len(), self.ambient);
        let drop: Vec<usize> = (0..self.ambient).filter(|&i| !keep[i]).collect();
        if drop.is_empty() {
            return self.clone();
        }
        let rows = self.frame.select_rows(drop.iter());
        let null = null_space(&rows);
        let mut frame = &self.frame * null.frame();
        for &i in &drop {
            frame.row_mut(i).fill(c64(0.0, 0.0));
        }
        Subspace {
            ambient: self.ambient,
            frame,
        }
    }

    /// Sine of the largest principal angle; 1 when the ranks differ.
    pub fn max_principal_sine(&self, other: &Subspace) -> Result<f64> {
        check_ambient(self, other)?;
        if self.rank() != other.rank() {
            return Ok(1.0);
        }
        if self.rank() == 0 {
            return Ok(0.0);
        }
        spectral_norm(&other.residual(&self.frame))
    }

    /// `sup ‖(I − P_other) x‖` over unit `x` here: zero iff this subspace lies in `other`.
    pub fn excess_over(&self, other: &Subspace) -> Result<f64> {
        check_ambient(self, other)?;
        if self.rank() == 0 {
            return Ok(0.0);
        }
        spectral_norm(&other.residual(&self.frame))
    }
}

fn check_ambient(a: &Subspace, b: &Subspace) -> Result<()> {
    if a.ambient != b.ambient {
        return Err(Error::DimensionMismatch {
            expected: a.ambient,
            found: b.ambient,
        });
    }
    Ok(())
}

/// Orthonormal basis for the span of the given vectors.
pub fn orthonormalize<'a, I>(ambient: usize, vectors: I) -> Subspace
where
    I: IntoIterator<Item = &'a CVec>,
{
    let mut b = OrthoBuilder::new(ambient);
    for v in vectors {
        b.push(v);
    }
    b.finish()
}

/// Orthonormal basis for the column space, relative to the largest column norm.
pub fn column_space(m: &CMat) -> Subspace {
    let scale = m.column_iter().map(|c| c.norm()).fold(0.0, f64::max);
    column_space_scaled(m, scale)
}

/// Orthonormal basis for the column space, dropping residuals below `RANK_TOL · scale`.
pub fn column_space_scaled(m: &CMat, scale: f64) -> Subspace {
    let mut b = OrthoBuilder::with_scale(m.nrows(), scale);
    for c in m.column_iter() {
        b.push(&c.into_owned());
    }
    b.finish()
}

/// Kernel of `m` as a subspace of the domain.
pub fn null_space(m: &CMat) -> Subspace {
    column_space(&m.adjoint()).complement()
}

#[derive(Clone, Debug)]
pub struct PartialIsometryCertificate {
    pub is_partial_isometry: bool,
    pub defect: f64,
    pub initial_projection: Option<CMat>,
    pub final_projection: Option<CMat>,
}

/// Certifies `‖(MᴴM)² − MᴴM‖ ≤ tol`; projections are rounded from the SVD.
pub fn certify_partial_isometry(m: &CMat, tol: f64) -> Result<PartialIsometryCertificate> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch {
            expected: m.nrows(),
            found: m.ncols(),
        });
    }
    let g = m.ad_mul(m);
    let defect = spectral_norm(&(&g * &g - &g))?;
    let ok = defect <= tol;
    let (initial, fin) = if ok {
        let (i, f) = rounded_projections(m);
        (Some(i), Some(f))
    } else {
        (None, None)
    };
    Ok(PartialIsometryCertificate {
        is_partial_isometry: ok,
        defect,
        initial_projection: initial,
        final_projection: fin,
    })
}

/// Projections onto the right/left singular directions with singular value above ½.
pub fn rounded_projections(m: &CMat) -> (CMat, CMat) {
    let n = m.nrows();
    if m.is_empty() {
        return (CMat::zeros(m.ncols(), m.ncols()), CMat::zeros(n, n));
    }
    let svd = m.clone().svd(true, true);
    let u = svd.u.as_ref().expect("u");
    let vt = svd.v_t.as_ref().expect("v_t");
    let mut init = CMat::zeros(m.ncols(), m.ncols());
    let mut fin = CMat::zeros(n, n);
    for (i, &s) in svd.singular_values.iter().enumerate() {
        if s > 0.5 {
            let v = vt.row(i).adjoint();
            init += &v * v.adjoint();
            let w = u.column(i);
            fin += w * w.adjoint();
        }
    }
    (init, fin)
}
