//! Occupation-number bases for spinless fermions on a chain.
//!
//! A basis state is a `u64` bit pattern: bit `s` set means site `s` is
//! occupied. A pattern denotes the creation-operator string applied in
//! ascending site order to the vacuum; every fermionic sign in the crate
//! (hopping, embedding, partial trace) derives from that single convention.

use std::collections::HashMap;
use std::ops::Range;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::state::QuantumState;
use crate::{Error, Result};

/// Chain geometry: `sites` lattice sites holding `particles` fermions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct LatticeSpec {
    pub sites: usize,
    pub particles: usize,
}

impl LatticeSpec {
    pub fn new(sites: usize, particles: usize) -> Result<Self> {
        if sites == 0 || sites > 64 {
            return Err(Error::InvalidSpec(format!(
                "site count must be in 1..=64, got {sites}"
            )));
        }
        if particles > sites {
            return Err(Error::InvalidSpec(format!(
                "particle count {particles} exceeds site count {sites}"
            )));
        }
        Ok(Self { sites, particles })
    }

    /// Hilbert-space dimension, `C(sites, particles)`.
    pub fn dimension(&self) -> usize {
        binomial(self.sites, self.particles)
    }
}

pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc as usize
}

fn low_mask(bits: usize) -> u64 {
    if bits >= 64 {
        u64::MAX
    } else {
        (1u64 << bits) - 1
    }
}

/// Ordered fixed-particle-number occupation basis with a reverse index.
#[derive(Debug, Clone)]
pub struct FockBasis {
    spec: LatticeSpec,
    states: Vec<u64>,
}

impl FockBasis {
    /// Enumerate all `C(L, N)` patterns in ascending bit-pattern order.
    pub fn new(spec: LatticeSpec) -> Self {
        let n = spec.particles;
        let dim = spec.dimension();
        let mut states = Vec::with_capacity(dim);
        if n == 0 {
            states.push(0);
        } else {
            // Gosper's hack walks same-popcount patterns in ascending order.
            let mut x = low_mask(n);
            let limit = low_mask(spec.sites);
            loop {
                states.push(x);
                if states.len() == dim {
                    break;
                }
                let u = x & x.wrapping_neg();
                let v = x + u;
                x = v | (((x ^ v) >> 2) / u);
                debug_assert!(x <= limit);
            }
        }
        Self { spec, states }
    }

    pub fn enumerate(spec: LatticeSpec) -> Result<Self> {
        Ok(Self::new(spec))
    }

    pub fn spec(&self) -> LatticeSpec {
        self.spec
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> &[u64] {
        &self.states
    }

    pub fn state(&self, i: usize) -> u64 {
        self.states[i]
    }

    /// Ordinal of a bit pattern, or `None` if it is not a basis state.
    pub fn position(&self, pattern: u64) -> Option<usize> {
        self.states.binary_search(&pattern).ok()
    }
}

/// Contiguous, disjoint site ranges covering the whole chain.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinPartition {
    bins: Vec<Range<usize>>,
}

impl BinPartition {
    pub fn new(bins: Vec<Range<usize>>, sites: usize) -> Result<Self> {
        if bins.is_empty() {
            return Err(Error::InvalidPartition("no bins given".into()));
        }
        let mut cursor = 0;
        for b in &bins {
            if b.start != cursor || b.end <= b.start {
                return Err(Error::InvalidPartition(format!(
                    "bins must be contiguous and non-empty; found {}..{} at cursor {}",
                    b.start, b.end, cursor
                )));
            }
            cursor = b.end;
        }
        if cursor != sites {
            return Err(Error::InvalidPartition(format!(
                "bins cover {cursor} sites, lattice has {sites}"
            )));
        }
        Ok(Self { bins })
    }

    /// `count` bins of equal width; `count` must divide the site count.
    pub fn equal_bins(sites: usize, count: usize) -> Result<Self> {
        if count == 0 || sites % count != 0 {
            return Err(Error::InvalidPartition(format!(
                "{count} bins do not evenly divide {sites} sites"
            )));
        }
        let w = sites / count;
        Ok(Self {
            bins: (0..count).map(|i| i * w..(i + 1) * w).collect(),
        })
    }

    pub fn bins(&self) -> &[Range<usize>] {
        &self.bins
    }

    pub fn count(&self) -> usize {
        self.bins.len()
    }

    pub fn sites(&self) -> usize {
        self.bins.last().map(|b| b.end).unwrap_or(0)
    }
}

/// Per-bin particle counts of one basis state.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct OccupationSignature(pub Vec<u8>);

impl std::fmt::Display for OccupationSignature {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

/// Count particles in each bin of `bins` for the given pattern.
pub fn occupation_signature(pattern: u64, bins: &BinPartition) -> OccupationSignature {
    OccupationSignature(
        bins.bins()
            .iter()
            .map(|b| {
                let mask = low_mask(b.end) & !low_mask(b.start);
                (pattern & mask).count_ones() as u8
            })
            .collect(),
    )
}

/// Copy a state onto a larger lattice, placing the original sites at
/// `offset` and leaving every other site empty. Amplitudes are copied
/// verbatim, so norms and inner products are preserved exactly.
pub fn embed_state(
    state: &QuantumState,
    src: &FockBasis,
    dst: &FockBasis,
    offset: usize,
) -> Result<QuantumState> {
    if src.spec().particles != dst.spec().particles {
        return Err(Error::DimensionMismatch(format!(
            "particle counts differ: {} vs {}",
            src.spec().particles,
            dst.spec().particles
        )));
    }
    if src.spec().sites + offset > dst.spec().sites {
        return Err(Error::DimensionMismatch(format!(
            "window of {} sites at offset {} overflows a lattice of {} sites",
            src.spec().sites,
            offset,
            dst.spec().sites
        )));
    }
    if state.dim() != src.dim() {
        return Err(Error::DimensionMismatch(format!(
            "state dimension {} does not match source basis {}",
            state.dim(),
            src.dim()
        )));
    }
    let map: Vec<usize> = src
        .states()
        .iter()
        .map(|&s| {
            dst.position(s << offset)
                .expect("shifted pattern is a valid target basis state")
        })
        .collect();
    Ok(match state {
        QuantumState::Pure(psi) => {
            let mut out = nalgebra::DVector::from_element(dst.dim(), C64::new(0.0, 0.0));
            for (i, &j) in map.iter().enumerate() {
                out[j] = psi[i];
            }
            QuantumState::Pure(out)
        }
        QuantumState::Mixed(rho) => {
            let mut out = DMatrix::from_element(dst.dim(), dst.dim(), C64::new(0.0, 0.0));
            for (a, &ia) in map.iter().enumerate() {
                for (b, &ib) in map.iter().enumerate() {
                    out[(ia, ib)] = rho[(a, b)];
                }
            }
            QuantumState::Mixed(out)
        }
        QuantumState::Mixture(m) => {
            let comps = m
                .components()
                .iter()
                .map(|(w, v)| {
                    let mut out =
                        nalgebra::DVector::from_element(dst.dim(), C64::new(0.0, 0.0));
                    for (i, &j) in map.iter().enumerate() {
                        out[j] = v[i];
                    }
                    (*w, out)
                })
                .collect();
            QuantumState::Mixture(crate::state::SpectralMixture::new_unchecked(comps))
        }
    })
}

/// A reduced density matrix together with the subsystem occupation patterns
/// labelling its rows and columns (ascending bit-pattern order, all particle
/// numbers compatible with the full chain's filling).
#[derive(Debug, Clone)]
pub struct SubsystemDensityMatrix {
    pub patterns: Vec<u64>,
    pub matrix: DMatrix<C64>,
}

/// Trace out everything outside the contiguous site range `keep`.
///
/// Reordering the ascending creation string into (kept)(discarded) blocks
/// contributes `(-1)^(n_left * n_keep)`; at fixed total particle number the
/// factor cancels inside every matrix element, but it is applied per
/// amplitude so the convention stays explicit.
pub fn reduced_density_matrix(
    state: &QuantumState,
    basis: &FockBasis,
    keep: Range<usize>,
) -> Result<SubsystemDensityMatrix> {
    let l = basis.spec().sites;
    let n = basis.spec().particles;
    if keep.start >= keep.end || keep.end > l {
        return Err(Error::UnsupportedPartition(format!(
            "keep range {}..{} is not a non-empty contiguous subrange of 0..{}",
            keep.start, keep.end, l
        )));
    }
    if state.dim() != basis.dim() {
        return Err(Error::DimensionMismatch(format!(
            "state dimension {} does not match basis {}",
            state.dim(),
            basis.dim()
        )));
    }
    let klen = keep.end - keep.start;
    let elen = l - klen;
    let n_min = n.saturating_sub(elen);
    let n_max = n.min(klen);

    let mut patterns: Vec<u64> = Vec::new();
    for nk in n_min..=n_max {
        let sub = FockBasis::new(LatticeSpec::new(klen, nk)?);
        patterns.extend_from_slice(sub.states());
    }
    patterns.sort_unstable();
    let row_of: HashMap<u64, usize> =
        patterns.iter().enumerate().map(|(i, &p)| (p, i)).collect();

    // Split each full pattern into (keep bits, environment bits, sign).
    let keep_mask = low_mask(keep.end) & !low_mask(keep.start);
    let split = |pattern: u64| -> (u64, u64, f64) {
        let kept = (pattern & keep_mask) >> keep.start;
        let left = pattern & low_mask(keep.start);
        let right = pattern >> keep.end;
        let env = left | (right << keep.start);
        let sign = if (left.count_ones() * kept.count_ones()) % 2 == 1 {
            -1.0
        } else {
            1.0
        };
        (kept, env, sign)
    };

    let dim_a = patterns.len();
    let mut rho_a = DMatrix::from_element(dim_a, dim_a, C64::new(0.0, 0.0));

    match state {
        QuantumState::Pure(psi) => {
            accumulate_pure(&mut rho_a, psi.as_slice(), basis, &row_of, &split);
        }
        QuantumState::Mixture(m) => {
            for (w, v) in m.components() {
                let mut part = DMatrix::from_element(dim_a, dim_a, C64::new(0.0, 0.0));
                accumulate_pure(&mut part, v.as_slice(), basis, &row_of, &split);
                rho_a += part * C64::new(*w, 0.0);
            }
        }
        QuantumState::Mixed(rho) => {
            // Group basis indices by environment pattern; only same-environment
            // pairs survive the trace.
            let mut groups: HashMap<u64, Vec<(usize, usize, f64)>> = HashMap::new();
            for (i, &p) in basis.states().iter().enumerate() {
                let (kept, env, sign) = split(p);
                groups.entry(env).or_default().push((row_of[&kept], i, sign));
            }
            for members in groups.values() {
                for &(ra, ia, sa) in members {
                    for &(rb, ib, sb) in members {
                        rho_a[(ra, rb)] += rho[(ia, ib)] * (sa * sb);
                    }
                }
            }
        }
    }

    Ok(SubsystemDensityMatrix {
        patterns,
        matrix: rho_a,
    })
}

fn accumulate_pure(
    rho_a: &mut DMatrix<C64>,
    psi: &[C64],
    basis: &FockBasis,
    row_of: &HashMap<u64, usize>,
    split: &dyn Fn(u64) -> (u64, u64, f64),
) {
    // amplitude matrix rows: kept pattern, cols: environment pattern
    let mut cols: HashMap<u64, usize> = HashMap::new();
    let mut entries: Vec<(usize, usize, C64)> = Vec::with_capacity(psi.len());
    for (i, &p) in basis.states().iter().enumerate() {
        let (kept, env, sign) = split(p);
        let next = cols.len();
        let c = *cols.entry(env).or_insert(next);
        entries.push((row_of[&kept], c, psi[i] * sign));
    }
    let mut m = DMatrix::from_element(rho_a.nrows(), cols.len(), C64::new(0.0, 0.0));
    for (r, c, a) in entries {
        m[(r, c)] = a;
    }
    let gram = &m * m.adjoint();
    *rho_a += gram;
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DVector;

    #[test]
    fn basis_sizes() {
        let b = FockBasis::new(LatticeSpec::new(2, 1).unwrap());
        assert_eq!(b.states(), &[0b01, 0b10]);
        let b = FockBasis::new(LatticeSpec::new(4, 2).unwrap());
        assert_eq!(b.dim(), 6);
        let b = FockBasis::new(LatticeSpec::new(16, 4).unwrap());
        assert_eq!(b.dim(), 1820);
    }

    #[test]
    fn invalid_spec_rejected() {
        assert!(LatticeSpec::new(2, 3).is_err());
        assert!(LatticeSpec::new(0, 0).is_err());
    }

    #[test]
    fn reverse_index_is_bijective() {
        for (l, n) in [(6, 3), (8, 4), (10, 2), (5, 0), (5, 5)] {
            let b = FockBasis::new(LatticeSpec::new(l, n).unwrap());
            assert_eq!(b.dim(), binomial(l, n));
            for (i, &s) in b.states().iter().enumerate() {
                assert_eq!(s.count_ones() as usize, n);
                assert_eq!(b.position(s), Some(i));
            }
            let mut sorted = b.states().to_vec();
            sorted.sort_unstable();
            assert_eq!(sorted, b.states());
        }
    }

    #[test]
    fn signatures() {
        let bins = BinPartition::equal_bins(4, 2).unwrap();
        assert_eq!(occupation_signature(0b1100, &bins).0, vec![0, 2]);
        assert_eq!(occupation_signature(0b1010, &bins).0, vec![1, 1]);
        let whole = BinPartition::equal_bins(4, 1).unwrap();
        assert_eq!(occupation_signature(0b1010, &whole).0, vec![2]);
    }

    #[test]
    fn bins_must_cover_lattice() {
        assert!(BinPartition::equal_bins(16, 3).is_err());
        assert!(BinPartition::new(vec![0..2, 3..4], 4).is_err());
        assert!(BinPartition::new(vec![0..2, 2..3], 4).is_err());
    }

    #[test]
    fn embed_shifts_patterns() {
        // 1111 on (L=4,N=4) into (L=6,N=4) at offset 1 -> pattern 011110
        let src = FockBasis::new(LatticeSpec::new(4, 4).unwrap());
        let dst = FockBasis::new(LatticeSpec::new(6, 4).unwrap());
        let psi = QuantumState::Pure(DVector::from_element(1, C64::new(1.0, 0.0)));
        let out = embed_state(&psi, &src, &dst, 1).unwrap();
        let v = out.pure().unwrap();
        let idx = dst.position(0b011110).unwrap();
        assert_eq!(v[idx], C64::new(1.0, 0.0));
        assert!((out.norm_or_trace() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn embed_identity_and_overflow() {
        let src = FockBasis::new(LatticeSpec::new(4, 2).unwrap());
        let psi = QuantumState::random_pure(src.dim(), 5);
        let out = embed_state(&psi, &src, &src, 0).unwrap();
        let a = psi.pure().unwrap();
        let b = out.pure().unwrap();
        assert_eq!(a, b);
        assert!(embed_state(&psi, &src, &src, 1).is_err());
    }

    #[test]
    fn embed_copies_amplitudes_exactly() {
        let src = FockBasis::new(LatticeSpec::new(5, 2).unwrap());
        let dst = FockBasis::new(LatticeSpec::new(9, 2).unwrap());
        let a = QuantumState::random_pure(src.dim(), 1);
        let b = QuantumState::random_pure(src.dim(), 2);
        let ea = embed_state(&a, &src, &dst, 3).unwrap();
        let eb = embed_state(&b, &src, &dst, 3).unwrap();
        // each amplitude lands bit-exactly on the shifted pattern
        for (i, &s) in src.states().iter().enumerate() {
            let j = dst.position(s << 3).unwrap();
            assert_eq!(a.pure().unwrap()[i], ea.pure().unwrap()[j]);
        }
        // inner products agree up to resummation roundoff
        let before = a.pure().unwrap().dotc(b.pure().unwrap());
        let after = ea.pure().unwrap().dotc(eb.pure().unwrap());
        assert!((before - after).norm() < 1e-15);
    }

    #[test]
    fn partial_trace_bell_pair() {
        // (|10> + |01>)/sqrt(2) on 2 sites, keep site 0 -> diag(1/2, 1/2)
        let basis = FockBasis::new(LatticeSpec::new(2, 1).unwrap());
        let amp = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        let psi = QuantumState::Pure(DVector::from_vec(vec![amp, amp]));
        let red = reduced_density_matrix(&psi, &basis, 0..1).unwrap();
        assert_eq!(red.patterns, vec![0b0, 0b1]);
        assert!((red.matrix[(0, 0)].re - 0.5).abs() < 1e-12);
        assert!((red.matrix[(1, 1)].re - 0.5).abs() < 1e-12);
        assert!(red.matrix[(0, 1)].norm() < 1e-12);
    }

    #[test]
    fn partial_trace_unit_trace_and_purity() {
        let basis = FockBasis::new(LatticeSpec::new(6, 3).unwrap());
        let psi = QuantumState::random_pure(basis.dim(), 11);
        let red = reduced_density_matrix(&psi, &basis, 0..3).unwrap();
        let tr: C64 = red.matrix.diagonal().iter().sum();
        assert!((tr.re - 1.0).abs() < 1e-12);
        assert!(tr.im.abs() < 1e-14);
        // product state across the cut stays pure after the trace
        let left = FockBasis::new(LatticeSpec::new(3, 2).unwrap());
        let right = FockBasis::new(LatticeSpec::new(3, 1).unwrap());
        let a = QuantumState::random_pure(left.dim(), 3);
        let b = QuantumState::random_pure(right.dim(), 4);
        let full = FockBasis::new(LatticeSpec::new(6, 3).unwrap());
        let mut v = DVector::from_element(full.dim(), C64::new(0.0, 0.0));
        for (i, &sa) in left.states().iter().enumerate() {
            for (j, &sb) in right.states().iter().enumerate() {
                let p = sa | (sb << 3);
                v[full.position(p).unwrap()] =
                    a.pure().unwrap()[i] * b.pure().unwrap()[j];
            }
        }
        let prod = QuantumState::Pure(v);
        let red = reduced_density_matrix(&prod, &full, 0..3).unwrap();
        let purity = (&red.matrix * &red.matrix)
            .diagonal()
            .iter()
            .sum::<C64>()
            .re;
        assert!((purity - 1.0).abs() < 1e-12, "purity {purity}");
    }

    #[test]
    fn partial_trace_rejects_bad_ranges() {
        let basis = FockBasis::new(LatticeSpec::new(4, 2).unwrap());
        let psi = QuantumState::random_pure(basis.dim(), 0);
        assert!(reduced_density_matrix(&psi, &basis, 2..2).is_err());
        assert!(reduced_density_matrix(&psi, &basis, 1..9).is_err());
    }
}
