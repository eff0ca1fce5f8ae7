//! Quantum states: pure amplitude vectors, dense density matrices, and
//! density matrices kept in spectral form.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::{Error, Result};

/// A density matrix stored as a statistical mixture of orthonormal pure
/// states, `rho = sum_j w_j |v_j><v_j|`. This is the spectral form of a
/// low-rank mixed state; entropy evaluations distribute over the components
/// exactly, which keeps large microcanonical mixtures tractable.
#[derive(Debug, Clone)]
pub struct SpectralMixture {
    components: Vec<(f64, DVector<C64>)>,
}

impl SpectralMixture {
    /// Build from weights and vectors, checking normalization of the weights
    /// and pairwise orthonormality of the vectors (within 1e-10).
    pub fn new(components: Vec<(f64, DVector<C64>)>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidArgument("empty mixture".into()));
        }
        let wsum: f64 = components.iter().map(|(w, _)| *w).sum();
        if components.iter().any(|(w, _)| *w < -1e-12) || (wsum - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidArgument(format!(
                "mixture weights must be nonnegative and sum to 1, got sum {wsum}"
            )));
        }
        for (i, (_, vi)) in components.iter().enumerate() {
            for (j, (_, vj)) in components.iter().enumerate() {
                let dot = vi.dotc(vj).norm();
                let want = if i == j { 1.0 } else { 0.0 };
                if (dot - want).abs() > 1e-10 {
                    return Err(Error::InvalidArgument(format!(
                        "mixture components are not orthonormal: |<v{i}|v{j}>| = {dot}"
                    )));
                }
            }
        }
        Ok(Self { components })
    }

    pub(crate) fn new_unchecked(components: Vec<(f64, DVector<C64>)>) -> Self {
        Self { components }
    }

    pub fn components(&self) -> &[(f64, DVector<C64>)] {
        &self.components
    }

    pub fn dim(&self) -> usize {
        self.components[0].1.len()
    }

    pub fn weights(&self) -> impl Iterator<Item = f64> + '_ {
        self.components.iter().map(|(w, _)| *w)
    }

    pub fn density_matrix(&self) -> DMatrix<C64> {
        let d = self.dim();
        let mut rho = DMatrix::from_element(d, d, C64::new(0.0, 0.0));
        for (w, v) in &self.components {
            rho += v * v.adjoint() * C64::new(*w, 0.0);
        }
        rho
    }
}

/// A state of the system: pure vector, dense density matrix, or a density
/// matrix in spectral (mixture) form.
#[derive(Debug, Clone)]
pub enum QuantumState {
    Pure(DVector<C64>),
    Mixed(DMatrix<C64>),
    Mixture(SpectralMixture),
}

impl QuantumState {
    pub fn dim(&self) -> usize {
        match self {
            QuantumState::Pure(v) => v.len(),
            QuantumState::Mixed(m) => m.nrows(),
            QuantumState::Mixture(m) => m.dim(),
        }
    }

    pub fn is_pure(&self) -> bool {
        matches!(self, QuantumState::Pure(_))
    }

    pub fn pure(&self) -> Option<&DVector<C64>> {
        match self {
            QuantumState::Pure(v) => Some(v),
            _ => None,
        }
    }

    /// Norm for pure states, trace for density matrices.
    pub fn norm_or_trace(&self) -> f64 {
        match self {
            QuantumState::Pure(v) => v.norm(),
            QuantumState::Mixed(m) => m.diagonal().iter().sum::<C64>().re,
            QuantumState::Mixture(m) => m.weights().sum(),
        }
    }

    /// Materialize as a dense density matrix.
    pub fn density_matrix(&self) -> DMatrix<C64> {
        match self {
            QuantumState::Pure(v) => v * v.adjoint(),
            QuantumState::Mixed(m) => m.clone(),
            QuantumState::Mixture(m) => m.density_matrix(),
        }
    }

    /// Check the basic state contract: unit norm / unit trace (1e-10) and,
    /// for dense density matrices, Hermiticity (1e-12 elementwise).
    pub fn validate(&self) -> Result<()> {
        let t = self.norm_or_trace();
        if (t - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidArgument(format!(
                "state norm/trace is {t}, expected 1"
            )));
        }
        if let QuantumState::Mixed(m) = self {
            if m.nrows() != m.ncols() {
                return Err(Error::DimensionMismatch("density matrix not square".into()));
            }
            let dev = hermiticity_deviation(m);
            if dev > 1e-12 {
                return Err(Error::NotHermitian(dev));
            }
        }
        Ok(())
    }

    /// Normalized Haar-ish random pure state, deterministic in `seed`.
    pub fn random_pure(dim: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut v = DVector::from_fn(dim, |_, _| {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            C64::new(re, im)
        });
        let n = v.norm();
        v /= C64::new(n, 0.0);
        QuantumState::Pure(v)
    }

    /// Random full-rank density matrix (normalized Wishart), deterministic
    /// in `seed`.
    pub fn random_mixed(dim: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = DMatrix::from_fn(dim, dim, |_, _| {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            C64::new(re, im)
        });
        let mut rho = &g * g.adjoint();
        let tr: C64 = rho.diagonal().iter().sum();
        rho /= tr;
        // symmetrize away the last eps of roundoff
        let rho = (&rho + rho.adjoint()) * C64::new(0.5, 0.0);
        QuantumState::Mixed(rho)
    }

    /// Kronecker product of two states (abstract tensor product, no
    /// fermionic reordering).
    pub fn kron(&self, other: &QuantumState) -> QuantumState {
        match (self, other) {
            (QuantumState::Pure(a), QuantumState::Pure(b)) => {
                QuantumState::Pure(a.kronecker(b))
            }
            _ => QuantumState::Mixed(self.density_matrix().kronecker(&other.density_matrix())),
        }
    }
}

pub(crate) fn hermiticity_deviation(m: &DMatrix<C64>) -> f64 {
    let mut dev: f64 = 0.0;
    for i in 0..m.nrows() {
        for j in i..m.ncols() {
            dev = dev.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    dev
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_states_are_valid() {
        for seed in 0..5 {
            QuantumState::random_pure(7, seed).validate().unwrap();
            QuantumState::random_mixed(7, seed).validate().unwrap();
        }
    }

    #[test]
    fn mixture_requires_orthonormal_components() {
        let v1 = DVector::from_vec(vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0)]);
        let v2 = DVector::from_vec(vec![C64::new(0.0, 0.0), C64::new(1.0, 0.0)]);
        assert!(SpectralMixture::new(vec![(0.5, v1.clone()), (0.5, v2)]).is_ok());
        assert!(SpectralMixture::new(vec![(0.5, v1.clone()), (0.5, v1)]).is_err());
    }

    #[test]
    fn mixture_density_matrix_matches() {
        let v1 = DVector::from_vec(vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0)]);
        let v2 = DVector::from_vec(vec![C64::new(0.0, 0.0), C64::new(1.0, 0.0)]);
        let m = SpectralMixture::new(vec![(0.25, v1), (0.75, v2)]).unwrap();
        let rho = m.density_matrix();
        assert!((rho[(0, 0)].re - 0.25).abs() < 1e-15);
        assert!((rho[(1, 1)].re - 0.75).abs() < 1e-15);
    }

    #[test]
    fn determinism_by_seed() {
        let a = QuantumState::random_pure(12, 42);
        let b = QuantumState::random_pure(12, 42);
        assert_eq!(a.pure().unwrap(), b.pure().unwrap());
    }
}
