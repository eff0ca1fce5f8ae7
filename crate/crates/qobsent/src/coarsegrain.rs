//! Complete orthogonal projector families ("coarse-grainings") in implicit
//! representations.
//!
//! Three representations cover everything the experiments need without ever
//! materializing a `dim x dim` projector per macrostate: a partition of the
//! Fock-basis indices (positional measurements), a grouped orthonormal
//! vector family spanning the space (energy and local-energy measurements),
//! and the trivial identity.

use std::collections::BTreeMap;
use std::ops::Range;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::fock::{occupation_signature, BinPartition, FockBasis, OccupationSignature};
use crate::model::BlockDecomposition;
use crate::spectral::{
    diagonalize, group_values, DegeneracyGrouping, HermitianOperator, Orthobasis,
    SpectralDecomposition,
};
use crate::state::QuantumState;
use crate::{Error, Result};

/// Outcome identifier of one macrostate.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MacroLabel {
    /// Per-bin particle counts (positional coarse-graining).
    Signature(OccupationSignature),
    /// Index of a degeneracy group of total-energy eigenvalues.
    EnergyGroup(usize),
    /// Index of a finite-width energy window.
    EnergyWindow(usize),
    /// Per-block local-energy group indices (factorized coarse-graining).
    LocalEnergies(Vec<usize>),
    /// Index of an eigenvalue group of a state-induced coarse-graining.
    EigenvalueGroup(usize),
    /// Generic cell index (tensor products, ad-hoc partitions).
    Cell(usize),
    /// The single macrostate of the identity coarse-graining.
    Whole,
}

impl std::fmt::Display for MacroLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            MacroLabel::Signature(s) => write!(f, "{s}"),
            MacroLabel::EnergyGroup(k) => write!(f, "E{k}"),
            MacroLabel::EnergyWindow(k) => write!(f, "W{k}"),
            MacroLabel::LocalEnergies(v) => {
                write!(f, "[")?;
                for (i, g) in v.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{g}")?;
                }
                write!(f, "]")
            }
            MacroLabel::EigenvalueGroup(k) => write!(f, "v{k}"),
            MacroLabel::Cell(k) => write!(f, "c{k}"),
            MacroLabel::Whole => write!(f, "*"),
        }
    }
}

/// Internal representation of a projector family.
#[derive(Debug, Clone)]
pub enum CgRepr {
    /// Each basis index belongs to one cell; projectors are diagonal 0/1.
    DiagonalPartition { cell_of: Vec<u32> },
    /// Orthonormal columns spanning the space; each contiguous column range
    /// is one macrostate's projector.
    VectorGrouping {
        basis: Arc<Orthobasis>,
        groups: Vec<Range<usize>>,
    },
    /// The single projector `1`.
    Identity,
}

/// A complete family of mutually orthogonal projectors with macrostate
/// labels and volumes `V_i = tr[P_i]`.
#[derive(Debug, Clone)]
pub struct CoarseGraining {
    dim: usize,
    repr: CgRepr,
    labels: Vec<MacroLabel>,
    volumes: Vec<f64>,
}

impl CoarseGraining {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn macrostate_count(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[MacroLabel] {
        &self.labels
    }

    pub fn volumes(&self) -> &[f64] {
        &self.volumes
    }

    pub fn repr(&self) -> &CgRepr {
        &self.repr
    }

    pub fn is_identity(&self) -> bool {
        matches!(self.repr, CgRepr::Identity)
    }

    /// Completeness/orthogonality/idempotency residual plus volume checks.
    /// Constructors call this; it is public so callers can revalidate.
    pub fn validate(&self) -> Result<()> {
        if self.labels.len() != self.volumes.len() || self.labels.is_empty() {
            return Err(Error::InvalidCoarseGraining(
                "labels and volumes must align and be non-empty".into(),
            ));
        }
        {
            let mut seen = std::collections::HashSet::new();
            for l in &self.labels {
                if !seen.insert(l) {
                    return Err(Error::InvalidCoarseGraining(format!(
                        "duplicate macrostate label {l}"
                    )));
                }
            }
        }
        let vsum: f64 = self.volumes.iter().sum();
        match &self.repr {
            CgRepr::DiagonalPartition { cell_of } => {
                if cell_of.len() != self.dim {
                    return Err(Error::InvalidCoarseGraining(
                        "cell map does not cover the space".into(),
                    ));
                }
                let cells = self.labels.len();
                let mut counts = vec![0usize; cells];
                for &c in cell_of {
                    let c = c as usize;
                    if c >= cells {
                        return Err(Error::InvalidCoarseGraining(
                            "cell index out of range".into(),
                        ));
                    }
                    counts[c] += 1;
                }
                for (c, (&cnt, &v)) in counts.iter().zip(&self.volumes).enumerate() {
                    if cnt == 0 {
                        return Err(Error::InvalidCoarseGraining(format!("empty cell {c}")));
                    }
                    if (cnt as f64 - v).abs() > 0.0 {
                        return Err(Error::InvalidCoarseGraining(format!(
                            "cell {c} volume {v} != count {cnt}"
                        )));
                    }
                }
                if vsum != self.dim as f64 {
                    return Err(Error::InvalidCoarseGraining(format!(
                        "volumes sum to {vsum}, dim is {}",
                        self.dim
                    )));
                }
            }
            CgRepr::VectorGrouping { basis, groups } => {
                if basis.dim() != self.dim {
                    return Err(Error::InvalidCoarseGraining(
                        "basis dimension mismatch".into(),
                    ));
                }
                let mut cursor = 0;
                for g in groups {
                    if g.start != cursor || g.end <= g.start {
                        return Err(Error::InvalidCoarseGraining(
                            "groups must be contiguous and non-empty".into(),
                        ));
                    }
                    cursor = g.end;
                }
                if cursor != self.dim {
                    return Err(Error::InvalidCoarseGraining(format!(
                        "groups cover {cursor} of {} vectors",
                        self.dim
                    )));
                }
                if groups.len() != self.labels.len() {
                    return Err(Error::InvalidCoarseGraining(
                        "one label per group required".into(),
                    ));
                }
                for (g, &v) in groups.iter().zip(&self.volumes) {
                    if (g.len() as f64 - v).abs() > 0.0 {
                        return Err(Error::InvalidCoarseGraining(format!(
                            "group volume {v} != rank {}",
                            g.len()
                        )));
                    }
                }
                // completeness + mutual orthogonality + idempotency of the
                // family, all at once
                let dev = basis.orthonormality_deviation();
                if dev > 1e-10 {
                    return Err(Error::InvalidCoarseGraining(format!(
                        "projector family residual {dev:.3e} exceeds 1e-10"
                    )));
                }
            }
            CgRepr::Identity => {
                if self.labels.len() != 1 || self.volumes[0] != self.dim as f64 {
                    return Err(Error::InvalidCoarseGraining(
                        "identity coarse-graining must have one macrostate of full volume"
                            .into(),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Rewrite as a vector grouping (standard basis for diagonal cells).
    /// Intended for small spaces: comparisons, oracles, tensor products.
    pub fn to_vector_grouping(&self) -> CoarseGraining {
        match &self.repr {
            CgRepr::VectorGrouping { .. } => self.clone(),
            CgRepr::Identity => CoarseGraining {
                dim: self.dim,
                repr: CgRepr::VectorGrouping {
                    basis: Arc::new(Orthobasis::Real(DMatrix::identity(self.dim, self.dim))),
                    groups: vec![0..self.dim],
                },
                labels: self.labels.clone(),
                volumes: self.volumes.clone(),
            },
            CgRepr::DiagonalPartition { cell_of } => {
                let cells = self.labels.len();
                let mut order: Vec<usize> = (0..self.dim).collect();
                order.sort_by_key(|&i| (cell_of[i], i));
                let mut basis = DMatrix::<f64>::zeros(self.dim, self.dim);
                for (col, &i) in order.iter().enumerate() {
                    basis[(i, col)] = 1.0;
                }
                let mut groups = Vec::with_capacity(cells);
                let mut start = 0;
                for c in 0..cells {
                    let len = cell_of.iter().filter(|&&x| x as usize == c).count();
                    groups.push(start..start + len);
                    start += len;
                }
                CoarseGraining {
                    dim: self.dim,
                    repr: CgRepr::VectorGrouping {
                        basis: Arc::new(Orthobasis::Real(basis)),
                        groups,
                    },
                    labels: self.labels.clone(),
                    volumes: self.volumes.clone(),
                }
            }
        }
    }
}

/// The trivial coarse-graining: one projector, the identity.
pub fn identity_coarse_graining(dim: usize) -> CoarseGraining {
    CoarseGraining {
        dim,
        repr: CgRepr::Identity,
        labels: vec![MacroLabel::Whole],
        volumes: vec![dim as f64],
    }
}

/// Partition the basis by occupation signature: one macrostate per
/// realized per-bin particle-count tuple.
pub fn positional_coarse_graining(
    basis: &FockBasis,
    bins: &BinPartition,
) -> Result<CoarseGraining> {
    if bins.sites() != basis.spec().sites {
        return Err(Error::InvalidPartition(format!(
            "bins cover {} sites, basis has {}",
            bins.sites(),
            basis.spec().sites
        )));
    }
    let mut by_sig: BTreeMap<OccupationSignature, Vec<usize>> = BTreeMap::new();
    for (i, &s) in basis.states().iter().enumerate() {
        by_sig.entry(occupation_signature(s, bins)).or_default().push(i);
    }
    let mut cell_of = vec![0u32; basis.dim()];
    let mut labels = Vec::with_capacity(by_sig.len());
    let mut volumes = Vec::with_capacity(by_sig.len());
    for (cell, (sig, members)) in by_sig.into_iter().enumerate() {
        for i in &members {
            cell_of[*i] = cell as u32;
        }
        labels.push(MacroLabel::Signature(sig));
        volumes.push(members.len() as f64);
    }
    let cg = CoarseGraining {
        dim: basis.dim(),
        repr: CgRepr::DiagonalPartition { cell_of },
        labels,
        volumes,
    };
    cg.validate()?;
    Ok(cg)
}

/// Group eigenvectors by degeneracy group, or by consecutive energy windows
/// of width `bin_width` when given.
pub fn energy_coarse_graining(
    sd: &SpectralDecomposition,
    grouping: &DegeneracyGrouping,
    bin_width: Option<f64>,
) -> Result<CoarseGraining> {
    let covered: usize = grouping.groups().iter().map(|g| g.len()).sum();
    if covered != sd.dim() {
        return Err(Error::InvalidArgument(
            "degeneracy grouping does not cover the spectrum".into(),
        ));
    }
    let (groups, labels) = match bin_width {
        None => {
            let groups: Vec<Range<usize>> = grouping.groups().to_vec();
            let labels = (0..groups.len()).map(MacroLabel::EnergyGroup).collect();
            (groups, labels)
        }
        Some(w) => {
            if !(w > 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "energy bin width must be positive, got {w}"
                )));
            }
            let evals = sd.eigenvalues();
            let e0 = evals[0];
            let span = evals[evals.len() - 1] - e0;
            let nwin = (span / w).ceil().max(1.0) as usize;
            let window = |e: f64| -> usize {
                let k = ((e - e0) / w).floor() as usize;
                k.min(nwin - 1)
            };
            let mut groups = Vec::new();
            let mut labels = Vec::new();
            let mut start = 0;
            while start < evals.len() {
                let k = window(evals[start]);
                let mut end = start + 1;
                while end < evals.len() && window(evals[end]) == k {
                    end += 1;
                }
                groups.push(start..end);
                labels.push(MacroLabel::EnergyWindow(k));
                start = end;
            }
            (groups, labels)
        }
    };
    let volumes = groups.iter().map(|g| g.len() as f64).collect();
    let cg = CoarseGraining {
        dim: sd.dim(),
        repr: CgRepr::VectorGrouping {
            basis: Arc::clone(sd.basis()),
            groups,
        },
        labels,
        volumes,
    };
    cg.validate()?;
    Ok(cg)
}

/// Simultaneous local-energy measurement: one projector family whose
/// vectors are products of per-block local eigenvectors over all local
/// filling tuples, labelled by per-block energy groups.
///
/// Ordered contiguous blocks make the product embedding sign-free under the
/// ascending creation-string convention, so a product column's amplitude on
/// a full basis state is just the product of the local amplitudes.
pub fn local_energy_product_coarse_graining(
    bd: &BlockDecomposition,
    basis: &FockBasis,
    tol: f64,
) -> Result<CoarseGraining> {
    if bd.params().lattice != basis.spec() {
        return Err(Error::InvalidPartition(
            "block decomposition and basis describe different lattices".into(),
        ));
    }
    if !(tol >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "local-energy tolerance must be nonnegative, got {tol}"
        )));
    }
    let n_total = basis.spec().particles;
    let m = bd.blocks.len();

    // Local eigendecompositions per (block, sector), plus a per-block
    // grouping of all local energies across fillings.
    struct SectorEig {
        particles: usize,
        patterns: Vec<u64>,
        vectors: DMatrix<f64>,
        group_of: Vec<usize>, // per local eigenindex, group within the block
    }
    let mut block_sectors: Vec<Vec<SectorEig>> = Vec::with_capacity(m);
    for blk in &bd.local {
        // gather (energy, sector, index) over all fillings of this block
        let mut eigs: Vec<(usize, Vec<u64>, DMatrix<f64>, Vec<f64>)> = Vec::new();
        for sec in &blk.sectors {
            let sd = diagonalize(&HermitianOperator::from_real(sec.matrix.clone())?)?;
            let vectors = match sd.basis().as_ref() {
                Orthobasis::Real(v) => v.clone(),
                Orthobasis::Complex(_) => unreachable!("local sector is real"),
            };
            eigs.push((
                sec.particles,
                sec.basis.states().to_vec(),
                vectors,
                sd.eigenvalues().to_vec(),
            ));
        }
        let mut all: Vec<(f64, usize, usize)> = Vec::new();
        for (si, (_, _, _, evals)) in eigs.iter().enumerate() {
            for (k, &e) in evals.iter().enumerate() {
                all.push((e, si, k));
            }
        }
        all.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
        let values: Vec<f64> = all.iter().map(|x| x.0).collect();
        let groups = group_values(&values, tol);
        let mut group_lookup = vec![vec![0usize; 0]; eigs.len()];
        for (si, (_, _, _, evals)) in eigs.iter().enumerate() {
            group_lookup[si] = vec![0; evals.len()];
        }
        for (gid, g) in groups.iter().enumerate() {
            for idx in g.clone() {
                let (_, si, k) = all[idx];
                group_lookup[si][k] = gid;
            }
        }
        block_sectors.push(
            eigs.into_iter()
                .enumerate()
                .map(|(si, (particles, patterns, vectors, _))| SectorEig {
                    particles,
                    patterns,
                    vectors,
                    group_of: group_lookup[si].clone(),
                })
                .collect(),
        );
    }

    // Enumerate filling tuples with the right total.
    let mut tuples: Vec<Vec<usize>> = Vec::new();
    let caps: Vec<usize> = bd.blocks.iter().map(|b| b.len()).collect();
    let mut current = vec![0usize; m];
    fn rec(
        b: usize,
        remaining: usize,
        caps: &[usize],
        current: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
    ) {
        if b == caps.len() {
            if remaining == 0 {
                out.push(current.clone());
            }
            return;
        }
        for n in 0..=caps[b].min(remaining) {
            current[b] = n;
            rec(b + 1, remaining - n, caps, current, out);
        }
    }
    rec(0, n_total, &caps, &mut current, &mut tuples);

    // Build all product columns, then order them so equal labels are
    // contiguous.
    struct Column {
        label: Vec<usize>,
        sort_key: (Vec<usize>, Vec<usize>),
        entries: Vec<(usize, f64)>,
    }
    let mut columns: Vec<Column> = Vec::new();
    for filling in &tuples {
        let secs: Vec<&SectorEig> = filling
            .iter()
            .enumerate()
            .map(|(b, &n)| {
                block_sectors[b]
                    .iter()
                    .find(|s| s.particles == n)
                    .expect("sector exists for every filling")
            })
            .collect();
        let dims: Vec<usize> = secs.iter().map(|s| s.patterns.len()).collect();
        // odometer over per-block eigenindices
        let mut k = vec![0usize; m];
        loop {
            let label: Vec<usize> = (0..m).map(|b| secs[b].group_of[k[b]]).collect();
            // odometer over per-block local basis states builds the column
            let mut entries = Vec::new();
            let mut x = vec![0usize; m];
            loop {
                let mut amp = 1.0;
                let mut pattern = 0u64;
                for b in 0..m {
                    amp *= secs[b].vectors[(x[b], k[b])];
                    pattern |= secs[b].patterns[x[b]] << bd.blocks[b].start;
                }
                if amp != 0.0 {
                    let row = basis
                        .position(pattern)
                        .expect("concatenated block patterns form a basis state");
                    entries.push((row, amp));
                }
                let mut b = 0;
                loop {
                    if b == m {
                        break;
                    }
                    x[b] += 1;
                    if x[b] < dims[b] {
                        break;
                    }
                    x[b] = 0;
                    b += 1;
                }
                if b == m {
                    break;
                }
            }
            columns.push(Column {
                label,
                sort_key: (filling.clone(), k.clone()),
                entries,
            });
            let mut b = 0;
            loop {
                if b == m {
                    break;
                }
                k[b] += 1;
                if k[b] < dims[b] {
                    break;
                }
                k[b] = 0;
                b += 1;
            }
            if b == m {
                break;
            }
        }
    }
    if columns.len() != basis.dim() {
        return Err(Error::NumericalConsistency(format!(
            "product family has {} vectors, space has {}",
            columns.len(),
            basis.dim()
        )));
    }
    columns.sort_by(|a, b| a.label.cmp(&b.label).then(a.sort_key.cmp(&b.sort_key)));

    let d = basis.dim();
    let mut mat = DMatrix::<f64>::zeros(d, d);
    let mut groups: Vec<Range<usize>> = Vec::new();
    let mut labels: Vec<MacroLabel> = Vec::new();
    let mut start = 0;
    for (col, c) in columns.iter().enumerate() {
        for &(row, amp) in &c.entries {
            mat[(row, col)] = amp;
        }
        let is_last = col + 1 == columns.len();
        let next_differs = !is_last && columns[col + 1].label != c.label;
        if is_last || next_differs {
            groups.push(start..col + 1);
            labels.push(MacroLabel::LocalEnergies(c.label.clone()));
            start = col + 1;
        }
    }
    let volumes = groups.iter().map(|g| g.len() as f64).collect();
    let cg = CoarseGraining {
        dim: d,
        repr: CgRepr::VectorGrouping {
            basis: Arc::new(Orthobasis::Real(mat)),
            groups,
        },
        labels,
        volumes,
    };
    cg.validate()?;
    Ok(cg)
}

/// Coarse-graining given by a state: eigenprojectors of the density matrix,
/// grouped by eigenvalue within `tol`.
pub fn state_induced_coarse_graining(rho: &QuantumState, tol: f64) -> Result<CoarseGraining> {
    if !(tol >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "eigenvalue tolerance must be nonnegative, got {tol}"
        )));
    }
    rho.validate()?;
    let dense = rho.density_matrix();
    let h = HermitianOperator::from_complex((&dense + dense.adjoint()) * C64::new(0.5, 0.0))?;
    let sd = diagonalize(&h)?;
    let lo = sd.eigenvalues()[0];
    if lo < -1e-12 {
        return Err(Error::NotPositiveSemidefinite(lo));
    }
    let groups = group_values(sd.eigenvalues(), tol);
    let labels = (0..groups.len()).map(MacroLabel::EigenvalueGroup).collect();
    let volumes = groups.iter().map(|g| g.len() as f64).collect();
    let cg = CoarseGraining {
        dim: sd.dim(),
        repr: CgRepr::VectorGrouping {
            basis: Arc::clone(sd.basis()),
            groups,
        },
        labels,
        volumes,
    };
    cg.validate()?;
    Ok(cg)
}

/// Tensor product of two coarse-grainings on abstract factor spaces (row
/// index = i_a * dim_b + i_b; no fermionic reordering).
pub fn tensor_product(a: &CoarseGraining, b: &CoarseGraining) -> Result<CoarseGraining> {
    let dim = a.dim() * b.dim();
    match (&a.repr, &b.repr) {
        (CgRepr::DiagonalPartition { cell_of: ca }, CgRepr::DiagonalPartition { cell_of: cb }) => {
            let nb = b.macrostate_count() as u32;
            let mut cell_of = Vec::with_capacity(dim);
            for &x in ca {
                for &y in cb {
                    cell_of.push(x * nb + y);
                }
            }
            let mut labels = Vec::new();
            let mut volumes = Vec::new();
            for (la, &va) in a.labels().iter().zip(a.volumes()) {
                for (lb, &vb) in b.labels().iter().zip(b.volumes()) {
                    labels.push(MacroLabel::Cell(labels.len()));
                    volumes.push(va * vb);
                    let _ = (la, lb);
                }
            }
            let cg = CoarseGraining {
                dim,
                repr: CgRepr::DiagonalPartition { cell_of },
                labels,
                volumes,
            };
            cg.validate()?;
            Ok(cg)
        }
        _ => {
            let av = a.to_vector_grouping();
            let bv = b.to_vector_grouping();
            let (abasis, agroups) = match &av.repr {
                CgRepr::VectorGrouping { basis, groups } => (basis.clone(), groups.clone()),
                _ => unreachable!(),
            };
            let (bbasis, bgroups) = match &bv.repr {
                CgRepr::VectorGrouping { basis, groups } => (basis.clone(), groups.clone()),
                _ => unreachable!(),
            };
            // kron, then permute columns so each (ga, gb) pair is contiguous
            let da = a.dim();
            let db = b.dim();
            let mut mat = DMatrix::from_element(dim, dim, C64::new(0.0, 0.0));
            let mut col = 0;
            let mut groups = Vec::new();
            let mut labels = Vec::new();
            let mut volumes = Vec::new();
            for ga in &agroups {
                for gb in &bgroups {
                    let start = col;
                    for ka in ga.clone() {
                        for kb in gb.clone() {
                            for i in 0..da {
                                let za = abasis.entry(i, ka);
                                if za.norm_sqr() == 0.0 {
                                    continue;
                                }
                                for j in 0..db {
                                    mat[(i * db + j, col)] = za * bbasis.entry(j, kb);
                                }
                            }
                            col += 1;
                        }
                    }
                    groups.push(start..col);
                    labels.push(MacroLabel::Cell(labels.len()));
                    volumes.push((ga.len() * gb.len()) as f64);
                }
            }
            let cg = CoarseGraining {
                dim,
                repr: CgRepr::VectorGrouping {
                    basis: Arc::new(Orthobasis::Complex(mat)),
                    groups,
                },
                labels,
                volumes,
            };
            cg.validate()?;
            Ok(cg)
        }
    }
}

/// Random partition of the basis indices into `cells` nonempty cells.
/// Deterministic in `seed`; intended for property tests.
pub fn random_partition_cg(dim: usize, cells: usize, seed: u64) -> CoarseGraining {
    use rand::{Rng, SeedableRng};
    assert!(cells >= 1 && cells <= dim);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut cell_of: Vec<u32> = (0..dim)
        .map(|i| {
            if i < cells {
                i as u32
            } else {
                rng.random_range(0..cells as u32)
            }
        })
        .collect();
    // shuffle so the forced coverage is not positional
    for i in (1..dim).rev() {
        let j = rng.random_range(0..=i);
        cell_of.swap(i, j);
    }
    let mut volumes = vec![0.0; cells];
    for &c in &cell_of {
        volumes[c as usize] += 1.0;
    }
    let labels = (0..cells).map(MacroLabel::Cell).collect();
    let cg = CoarseGraining {
        dim,
        repr: CgRepr::DiagonalPartition { cell_of },
        labels,
        volumes,
    };
    cg.validate().expect("random partition is valid");
    cg
}

/// Random complete orthonormal vector family (QR of a Gaussian matrix)
/// split into `groups` contiguous groups. Deterministic in `seed`.
pub fn random_vector_cg(dim: usize, groups: usize, seed: u64) -> CoarseGraining {
    use rand::{Rng, SeedableRng};
    use rand_distr::{Distribution, StandardNormal};
    assert!(groups >= 1 && groups <= dim);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let g = DMatrix::from_fn(dim, dim, |_, _| {
        let re: f64 = StandardNormal.sample(&mut rng);
        let im: f64 = StandardNormal.sample(&mut rng);
        C64::new(re, im)
    });
    let q = g.qr().q();
    // random contiguous split: choose groups-1 interior cut points
    let mut cuts: Vec<usize> = Vec::new();
    while cuts.len() < groups - 1 {
        let c = rng.random_range(1..dim);
        if !cuts.contains(&c) {
            cuts.push(c);
        }
    }
    cuts.sort_unstable();
    cuts.insert(0, 0);
    cuts.push(dim);
    let ranges: Vec<Range<usize>> = cuts.windows(2).map(|w| w[0]..w[1]).collect();
    let volumes = ranges.iter().map(|r| r.len() as f64).collect();
    let labels = (0..ranges.len()).map(MacroLabel::Cell).collect();
    let cg = CoarseGraining {
        dim,
        repr: CgRepr::VectorGrouping {
            basis: Arc::new(Orthobasis::Complex(q)),
            groups: ranges,
        },
        labels,
        volumes,
    };
    cg.validate().expect("random vector family is valid");
    cg
}

/// Does every projector of `coarse` equal a sum of projectors of `fine`?
///
/// Exact for pairs of diagonal partitions; for vector representations the
/// overlap fractions `tr[P_fine Q_coarse] / V_fine` must all sit within
/// 1e-10 of 0 or 1. Fractions in the numerically ambiguous band up to 1e-6
/// raise [`Error::UnsupportedComparison`] rather than answering `false`.
pub fn refines(fine: &CoarseGraining, coarse: &CoarseGraining) -> Result<bool> {
    if fine.dim() != coarse.dim() {
        return Err(Error::DimensionMismatch(format!(
            "coarse-grainings on dims {} vs {}",
            fine.dim(),
            coarse.dim()
        )));
    }
    if coarse.is_identity() {
        return Ok(true);
    }
    if fine.is_identity() {
        return Ok(coarse.macrostate_count() == 1);
    }
    if let (CgRepr::DiagonalPartition { cell_of: cf }, CgRepr::DiagonalPartition { cell_of: cc }) =
        (&fine.repr, &coarse.repr)
    {
        let mut image = vec![None; fine.macrostate_count()];
        for i in 0..fine.dim() {
            let f = cf[i] as usize;
            match image[f] {
                None => image[f] = Some(cc[i]),
                Some(c) => {
                    if c != cc[i] {
                        return Ok(false);
                    }
                }
            }
        }
        return Ok(true);
    }

    // overlap fractions via the vector forms
    let fv = fine.to_vector_grouping();
    let cv = coarse.to_vector_grouping();
    let (fb, fgroups) = match &fv.repr {
        CgRepr::VectorGrouping { basis, groups } => (basis.clone(), groups.clone()),
        _ => unreachable!(),
    };
    let (cb, cgroups) = match &cv.repr {
        CgRepr::VectorGrouping { basis, groups } => (basis.clone(), groups.clone()),
        _ => unreachable!(),
    };
    let d = fine.dim();
    let overlap = {
        // |F^H C|^2 summed per (fine group, coarse group) block
        let cmat = match cb.as_ref() {
            Orthobasis::Real(m) => m.map(|x| C64::new(x, 0.0)),
            Orthobasis::Complex(m) => m.clone(),
        };
        let inner = fb.adjoint_mul(&cmat);
        let mut block = vec![vec![0.0f64; cgroups.len()]; fgroups.len()];
        for (fi, fg) in fgroups.iter().enumerate() {
            for (ci, cg) in cgroups.iter().enumerate() {
                let mut s = 0.0;
                for r in fg.clone() {
                    for c in cg.clone() {
                        s += inner[(r, c)].norm_sqr();
                    }
                }
                block[fi][ci] = s;
            }
        }
        let _ = d;
        block
    };
    const EXACT: f64 = 1e-10;
    const AMBIGUOUS: f64 = 1e-6;
    for (fi, fg) in fgroups.iter().enumerate() {
        let vol = fg.len() as f64;
        let mut owner = None;
        for (ci, &s) in overlap[fi].iter().enumerate() {
            let x = s / vol;
            if x <= EXACT {
                continue;
            }
            if x >= 1.0 - EXACT {
                owner = Some(ci);
                continue;
            }
            if x < AMBIGUOUS || x > 1.0 - AMBIGUOUS {
                return Err(Error::UnsupportedComparison(format!(
                    "overlap fraction {x:.3e} is inside the roundoff band"
                )));
            }
            return Ok(false);
        }
        if owner.is_none() {
            return Err(Error::UnsupportedComparison(
                "fine projector lost between coarse macrostates".into(),
            ));
        }
    }
    Ok(true)
}
