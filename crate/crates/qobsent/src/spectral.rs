//! Dense Hermitian eigendecomposition, degeneracy grouping, and exact
//! spectral time evolution.
//!
//! Model Hamiltonians are real symmetric, so operators and eigenbases carry
//! a real/complex tag; the real path stays in `f64` matrices where the gemm
//! kernels are fastest, and states remain complex throughout.

use std::ops::Range;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use crate::state::{hermiticity_deviation, QuantumState};
use crate::{Error, Result};

/// Default absolute tolerance for treating neighboring eigenvalues as
/// degenerate: far above eigensolver noise, far below typical many-body
/// level spacing at the sizes this crate targets.
pub const DEFAULT_DEGENERACY_TOL: f64 = 1e-8;

/// Dense Hermitian operator, kept real when it is real symmetric.
#[derive(Debug, Clone)]
pub enum HermitianOperator {
    Real(DMatrix<f64>),
    Complex(DMatrix<C64>),
}

impl HermitianOperator {
    pub fn from_real(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch("operator not square".into()));
        }
        let mut dev: f64 = 0.0;
        for i in 0..m.nrows() {
            for j in i + 1..m.ncols() {
                dev = dev.max((m[(i, j)] - m[(j, i)]).abs());
            }
        }
        if dev > 1e-12 {
            return Err(Error::NotHermitian(dev));
        }
        Ok(Self::Real(m))
    }

    pub fn from_complex(m: DMatrix<C64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch("operator not square".into()));
        }
        let dev = hermiticity_deviation(&m);
        if dev > 1e-12 {
            return Err(Error::NotHermitian(dev));
        }
        Ok(Self::Complex(m))
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Real(m) => m.nrows(),
            Self::Complex(m) => m.nrows(),
        }
    }

    pub fn entry(&self, i: usize, j: usize) -> C64 {
        match self {
            Self::Real(m) => C64::new(m[(i, j)], 0.0),
            Self::Complex(m) => m[(i, j)],
        }
    }

    pub fn as_real(&self) -> Option<&DMatrix<f64>> {
        match self {
            Self::Real(m) => Some(m),
            Self::Complex(_) => None,
        }
    }

    pub fn to_complex(&self) -> DMatrix<C64> {
        match self {
            Self::Real(m) => m.map(|x| C64::new(x, 0.0)),
            Self::Complex(m) => m.clone(),
        }
    }

    /// `self + factor * other`; stays real when both sides are real.
    pub fn add_scaled(&self, other: &Self, factor: f64) -> Result<Self> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch(format!(
                "operator dims {} vs {}",
                self.dim(),
                other.dim()
            )));
        }
        Ok(match (self, other) {
            (Self::Real(a), Self::Real(b)) => Self::Real(a + b * factor),
            _ => Self::Complex(self.to_complex() + other.to_complex() * C64::new(factor, 0.0)),
        })
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        match self {
            Self::Real(m) => m.iter().fold(0.0f64, |a, &x| a.max(x.abs())),
            Self::Complex(m) => m.iter().fold(0.0f64, |a, x| a.max(x.norm())),
        }
    }

    /// `<psi|H|psi>` for a pure state (real by Hermiticity).
    pub fn expectation(&self, psi: &DVector<C64>) -> f64 {
        match self {
            Self::Real(m) => {
                let (re, im) = split_vec(psi);
                (re.dot(&(m * &re)) + im.dot(&(m * &im))) as f64
            }
            Self::Complex(m) => psi.dotc(&(m * psi)).re,
        }
    }
}

/// Square matrix whose columns form an orthonormal basis.
#[derive(Debug, Clone)]
pub enum Orthobasis {
    Real(DMatrix<f64>),
    Complex(DMatrix<C64>),
}

pub(crate) fn split_vec(x: &DVector<C64>) -> (DVector<f64>, DVector<f64>) {
    (x.map(|z| z.re), x.map(|z| z.im))
}

pub(crate) fn split_mat(x: &DMatrix<C64>) -> (DMatrix<f64>, DMatrix<f64>) {
    (x.map(|z| z.re), x.map(|z| z.im))
}

pub(crate) fn join_mat(re: DMatrix<f64>, im: DMatrix<f64>) -> DMatrix<C64> {
    DMatrix::from_fn(re.nrows(), re.ncols(), |i, j| C64::new(re[(i, j)], im[(i, j)]))
}

impl Orthobasis {
    pub fn dim(&self) -> usize {
        match self {
            Self::Real(m) => m.nrows(),
            Self::Complex(m) => m.nrows(),
        }
    }

    pub fn entry(&self, i: usize, j: usize) -> C64 {
        match self {
            Self::Real(m) => C64::new(m[(i, j)], 0.0),
            Self::Complex(m) => m[(i, j)],
        }
    }

    /// `B^H X` for a complex column block.
    pub fn adjoint_mul(&self, x: &DMatrix<C64>) -> DMatrix<C64> {
        match self {
            Self::Real(b) => {
                let (re, im) = split_mat(x);
                join_mat(b.tr_mul(&re), b.tr_mul(&im))
            }
            Self::Complex(b) => b.ad_mul(x),
        }
    }

    /// `B X`.
    pub fn mul(&self, x: &DMatrix<C64>) -> DMatrix<C64> {
        match self {
            Self::Real(b) => {
                let (re, im) = split_mat(x);
                join_mat(b * &re, b * &im)
            }
            Self::Complex(b) => b * x,
        }
    }

    /// `B[:, cols] X` for a contiguous column range.
    pub fn cols_mul(&self, cols: Range<usize>, x: &DMatrix<C64>) -> DMatrix<C64> {
        match self {
            Self::Real(b) => {
                let view = b.columns(cols.start, cols.len());
                let (re, im) = split_mat(x);
                join_mat(&view * re, &view * im)
            }
            Self::Complex(b) => {
                let view = b.columns(cols.start, cols.len());
                view * x
            }
        }
    }

    /// `sum_i mask[i] * |B[i, col]|^2`.
    pub fn masked_column_weight(&self, col: usize, mask: &[f64]) -> f64 {
        match self {
            Self::Real(b) => {
                let c = b.column(col);
                mask.iter()
                    .enumerate()
                    .map(|(i, &m)| m * c[i] * c[i])
                    .sum()
            }
            Self::Complex(b) => {
                let c = b.column(col);
                mask.iter()
                    .enumerate()
                    .map(|(i, &m)| m * c[i].norm_sqr())
                    .sum()
            }
        }
    }

    /// Max deviation of `B^H B` from the identity.
    pub fn orthonormality_deviation(&self) -> f64 {
        match self {
            Self::Real(b) => {
                let g = b.tr_mul(b);
                let mut dev: f64 = 0.0;
                for i in 0..g.nrows() {
                    for j in 0..g.ncols() {
                        let want = if i == j { 1.0 } else { 0.0 };
                        dev = dev.max((g[(i, j)] - want).abs());
                    }
                }
                dev
            }
            Self::Complex(b) => {
                let g = b.ad_mul(b);
                let mut dev: f64 = 0.0;
                for i in 0..g.nrows() {
                    for j in 0..g.ncols() {
                        let want = if i == j {
                            C64::new(1.0, 0.0)
                        } else {
                            C64::new(0.0, 0.0)
                        };
                        dev = dev.max((g[(i, j)] - want).norm());
                    }
                }
                dev
            }
        }
    }
}

/// Eigenvalues in ascending order with aligned orthonormal eigenvectors.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    eigenvalues: Vec<f64>,
    basis: Arc<Orthobasis>,
}

/// Exact dense eigendecomposition of a Hermitian operator.
///
/// Eigenvalues come back sorted ascending; each eigenvector's phase is fixed
/// by making its largest-magnitude component real positive, so repeated runs
/// produce identical decompositions.
pub fn diagonalize(h: &HermitianOperator) -> Result<SpectralDecomposition> {
    match h {
        HermitianOperator::Real(m) => {
            let se = m.clone().symmetric_eigen();
            let (vals, basis) = sort_and_fix_real(se.eigenvalues.as_slice(), se.eigenvectors);
            Ok(SpectralDecomposition {
                eigenvalues: vals,
                basis: Arc::new(Orthobasis::Real(basis)),
            })
        }
        HermitianOperator::Complex(m) => {
            let se = m.clone().symmetric_eigen();
            let (vals, basis) = sort_and_fix_complex(se.eigenvalues.as_slice(), se.eigenvectors);
            Ok(SpectralDecomposition {
                eigenvalues: vals,
                basis: Arc::new(Orthobasis::Complex(basis)),
            })
        }
    }
}

fn sort_order(vals: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..vals.len()).collect();
    idx.sort_by(|&a, &b| vals[a].partial_cmp(&vals[b]).unwrap().then(a.cmp(&b)));
    idx
}

fn sort_and_fix_real(vals: &[f64], vecs: DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let order = sort_order(vals);
    let d = vals.len();
    let mut out = DMatrix::zeros(d, d);
    let mut sorted = Vec::with_capacity(d);
    for (dst, &src) in order.iter().enumerate() {
        sorted.push(vals[src]);
        let col = vecs.column(src);
        let mut pivot = 0;
        for i in 1..d {
            if col[i].abs() > col[pivot].abs() {
                pivot = i;
            }
        }
        let s = if col[pivot] < 0.0 { -1.0 } else { 1.0 };
        for i in 0..d {
            out[(i, dst)] = s * col[i];
        }
    }
    (sorted, out)
}

fn sort_and_fix_complex(vals: &[f64], vecs: DMatrix<C64>) -> (Vec<f64>, DMatrix<C64>) {
    let order = sort_order(vals);
    let d = vals.len();
    let mut out = DMatrix::from_element(d, d, C64::new(0.0, 0.0));
    let mut sorted = Vec::with_capacity(d);
    for (dst, &src) in order.iter().enumerate() {
        sorted.push(vals[src]);
        let col = vecs.column(src);
        let mut pivot = 0;
        for i in 1..d {
            if col[i].norm_sqr() > col[pivot].norm_sqr() {
                pivot = i;
            }
        }
        let z = col[pivot];
        let phase = if z.norm() > 0.0 {
            z.conj() / z.norm()
        } else {
            C64::new(1.0, 0.0)
        };
        for i in 0..d {
            out[(i, dst)] = col[i] * phase;
        }
    }
    (sorted, out)
}

impl SpectralDecomposition {
    /// Reassemble from stored parts (e.g. a spectral cache). The caller is
    /// responsible for the orthonormality of `basis` and the ordering of
    /// `eigenvalues`.
    pub fn from_parts(eigenvalues: Vec<f64>, basis: Orthobasis) -> Result<Self> {
        if eigenvalues.len() != basis.dim() {
            return Err(Error::DimensionMismatch(format!(
                "{} eigenvalues vs basis dim {}",
                eigenvalues.len(),
                basis.dim()
            )));
        }
        if eigenvalues.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::InvalidArgument(
                "eigenvalues must be ascending".into(),
            ));
        }
        Ok(Self {
            eigenvalues,
            basis: Arc::new(basis),
        })
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn basis(&self) -> &Arc<Orthobasis> {
        &self.basis
    }

    /// Coefficients of `psi` in the eigenbasis.
    pub fn to_eigenbasis(&self, psi: &DVector<C64>) -> DVector<C64> {
        let m = DMatrix::from_columns(&[psi.clone()]);
        DVector::from_column_slice(self.basis.adjoint_mul(&m).as_slice())
    }

    pub fn from_eigenbasis(&self, coeffs: &DVector<C64>) -> DVector<C64> {
        let m = DMatrix::from_columns(&[coeffs.clone()]);
        DVector::from_column_slice(self.basis.mul(&m).as_slice())
    }

    /// `<psi|H|psi>` computed from the eigenbasis coefficients.
    pub fn mean_energy(&self, psi: &DVector<C64>) -> f64 {
        let c = self.to_eigenbasis(psi);
        c.iter()
            .zip(&self.eigenvalues)
            .map(|(z, &e)| z.norm_sqr() * e)
            .sum()
    }

    /// Propagate a pure state: `U exp(-i Lambda t) U^H psi` (hbar = 1).
    pub fn evolve(&self, state: &QuantumState, time: f64) -> Result<QuantumState> {
        let psi = state.pure().ok_or_else(|| {
            Error::UnsupportedState("spectral evolution expects a pure state".into())
        })?;
        if psi.len() != self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "state dim {} vs decomposition dim {}",
                psi.len(),
                self.dim()
            )));
        }
        let mut c = self.to_eigenbasis(psi);
        for (k, z) in c.iter_mut().enumerate() {
            let ph = C64::from_polar(1.0, -self.eigenvalues[k] * time);
            *z *= ph;
        }
        Ok(QuantumState::Pure(self.from_eigenbasis(&c)))
    }
}

/// Partition of eigenindices into maximal runs of nearly-equal eigenvalues.
#[derive(Debug, Clone)]
pub struct DegeneracyGrouping {
    groups: Vec<Range<usize>>,
    tol: f64,
}

impl DegeneracyGrouping {
    pub fn groups(&self) -> &[Range<usize>] {
        &self.groups
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }
}

/// Group eigenindices whose consecutive gaps are at most `tol`; `tol = 0`
/// groups only exactly equal values.
pub fn group_degenerate(sd: &SpectralDecomposition, tol: f64) -> Result<DegeneracyGrouping> {
    if !(tol >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "degeneracy tolerance must be nonnegative, got {tol}"
        )));
    }
    Ok(DegeneracyGrouping {
        groups: group_values(sd.eigenvalues(), tol),
        tol,
    })
}

/// Gap-based grouping over an ascending value list.
pub(crate) fn group_values(values: &[f64], tol: f64) -> Vec<Range<usize>> {
    let mut groups = Vec::new();
    let mut start = 0;
    for i in 1..values.len() {
        if values[i] - values[i - 1] > tol {
            groups.push(start..i);
            start = i;
        }
    }
    if !values.is_empty() {
        groups.push(start..values.len());
    }
    groups
}
