//! Observational entropy of ordered coarse-graining sequences, plus the
//! reference entropies the experiments compare against.
//!
//! For a sequence `(C_1, ..., C_n)` and state `rho`, the engine computes
//! `S = -sum p ln(p / V)` over outcome tuples, where
//! `p = tr[P_n ... P_1 rho P_1 ... P_n]` and `V = tr[P_n ... P_1 ... P_n]`.
//! Pure states propagate as vectors through the projector chain; dense
//! density matrices are conjugated; mixtures distribute over their
//! orthonormal components (`p` is linear in `rho`). Volumes are the same
//! chain applied to the identity and are cached per sequence, since they do
//! not depend on the state.

use std::collections::HashMap;
use std::ops::Range;
use std::sync::{Arc, OnceLock};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use crate::coarsegrain::{CgRepr, CoarseGraining, MacroLabel};
use crate::fock::FockBasis;
use crate::model::BlockDecomposition;
use crate::spectral::{
    diagonalize, group_degenerate, Orthobasis, SpectralDecomposition, DEFAULT_DEGENERACY_TOL,
};
use crate::state::QuantumState;
use crate::{Error, Result};

/// Default cutoff on intermediate branch weight; branches below it are
/// dropped and their weight reported as pruned mass.
pub const DEFAULT_PRUNE_CUTOFF: f64 = 1e-14;

/// Probabilities in `[-NEGATIVE_CLAMP, 0)` are rounded to zero; anything
/// more negative is a numerical-consistency error.
const NEGATIVE_CLAMP: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EntropyKind {
    Observational,
    VonNeumann,
    Diagonal,
    Entanglement,
    DensityOfStates,
    Canonical,
    PositionEnergy,
    FactorizedLocalEnergy,
}

impl EntropyKind {
    pub fn tag(&self) -> &'static str {
        match self {
            EntropyKind::Observational => "S_O",
            EntropyKind::VonNeumann => "S_VN",
            EntropyKind::Diagonal => "S_diag",
            EntropyKind::Entanglement => "S_ent",
            EntropyKind::DensityOfStates => "S_DOS",
            EntropyKind::Canonical => "S_can",
            EntropyKind::PositionEnergy => "S_xE",
            EntropyKind::FactorizedLocalEnergy => "S_FOE",
        }
    }
}

/// An entropy in nats, tagged with what it measures.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntropyValue {
    pub value: f64,
    pub kind: EntropyKind,
}

/// One visited outcome tuple.
#[derive(Debug, Clone)]
pub struct DistEntry {
    pub labels: Vec<MacroLabel>,
    pub probability: f64,
    pub volume: f64,
}

/// The labelled (probability, volume) table an entropy was computed from.
#[derive(Debug, Clone)]
pub struct MacrostateDistribution {
    pub dim: usize,
    pub entries: Vec<DistEntry>,
    pub pruned_mass: f64,
}

impl MacrostateDistribution {
    pub fn total_probability(&self) -> f64 {
        self.entries.iter().map(|e| e.probability).sum()
    }
}

/// An ordered coarse-graining sequence with a lazily computed, shareable
/// volume table.
pub struct CgSequence {
    cgs: Vec<Arc<CoarseGraining>>,
    volumes: OnceLock<HashMap<Vec<u32>, f64>>,
}

impl CgSequence {
    pub fn new(cgs: Vec<Arc<CoarseGraining>>) -> Result<Self> {
        if cgs.is_empty() {
            return Err(Error::InvalidArgument(
                "coarse-graining sequence is empty".into(),
            ));
        }
        let dim = cgs[0].dim();
        if cgs.iter().any(|c| c.dim() != dim) {
            return Err(Error::DimensionMismatch(
                "coarse-grainings in one sequence must share a space".into(),
            ));
        }
        Ok(Self {
            cgs,
            volumes: OnceLock::new(),
        })
    }

    pub fn single(cg: CoarseGraining) -> Self {
        Self {
            cgs: vec![Arc::new(cg)],
            volumes: OnceLock::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.cgs[0].dim()
    }

    pub fn coarse_grainings(&self) -> &[Arc<CoarseGraining>] {
        &self.cgs
    }

    /// Volumes of every tuple reachable with nonzero volume, computed by
    /// running the projector chain on the identity. State-independent.
    pub fn volumes(&self) -> &HashMap<Vec<u32>, f64> {
        self.volumes.get_or_init(|| {
            let init = ConjState::Diag(vec![1.0; self.dim()]);
            let (entries, _) = conj_chain(init, &self.cgs, ChainMode::Volume)
                .expect("volume chain cannot produce negative traces beyond clamp");
            entries.into_iter().collect()
        })
    }

    fn labels_for(&self, tuple: &[u32]) -> Vec<MacroLabel> {
        tuple
            .iter()
            .zip(&self.cgs)
            .map(|(&i, cg)| cg.labels()[i as usize].clone())
            .collect()
    }
}

/// Observational entropy of `state` under the ordered sequence `seq`.
///
/// `cutoff` bounds the intermediate branch weight below which projector
/// branches are dropped; it must lie in `[0, 1e-10]`.
pub fn observational_entropy(
    state: &QuantumState,
    seq: &CgSequence,
    cutoff: f64,
) -> Result<(EntropyValue, MacrostateDistribution)> {
    if !(0.0..=1e-10).contains(&cutoff) {
        return Err(Error::InvalidArgument(format!(
            "cutoff must lie in [0, 1e-10], got {cutoff}"
        )));
    }
    if state.dim() != seq.dim() {
        return Err(Error::DimensionMismatch(format!(
            "state dim {} vs coarse-graining dim {}",
            state.dim(),
            seq.dim()
        )));
    }
    state.validate()?;

    let (mut probs, pruned_mass) = match state {
        QuantumState::Pure(psi) => pure_chain(psi, &seq.cgs, cutoff),
        QuantumState::Mixed(rho) => {
            conj_chain(ConjState::Dense(rho.clone()), &seq.cgs, ChainMode::Probability {
                cutoff,
            })?
        }
        QuantumState::Mixture(m) => {
            let mut acc: HashMap<Vec<u32>, f64> = HashMap::new();
            let mut pruned = 0.0;
            for (w, v) in m.components() {
                let (part, pm) = pure_chain(v, &seq.cgs, cutoff);
                pruned += w * pm;
                for (tuple, p) in part {
                    *acc.entry(tuple).or_insert(0.0) += w * p;
                }
            }
            let mut merged: Vec<(Vec<u32>, f64)> = acc.into_iter().collect();
            merged.sort_by(|a, b| a.0.cmp(&b.0));
            (merged, pruned)
        }
    };
    probs.sort_by(|a, b| a.0.cmp(&b.0));

    let volumes = seq.volumes();
    let mut entropy = 0.0;
    let mut entries = Vec::with_capacity(probs.len());
    let mut pruned_mass = pruned_mass;
    for (tuple, p) in probs {
        if p <= cutoff {
            pruned_mass += p;
            continue;
        }
        let volume = match volumes.get(&tuple) {
            Some(&v) => v,
            None if p <= 1e-10 => {
                pruned_mass += p;
                continue;
            }
            None => {
                return Err(Error::NumericalConsistency(format!(
                    "tuple with probability {p:.3e} has vanishing volume"
                )));
            }
        };
        entropy -= p * (p / volume).ln();
        entries.push(DistEntry {
            labels: seq.labels_for(&tuple),
            probability: p,
            volume,
        });
    }

    Ok((
        EntropyValue {
            value: entropy,
            kind: EntropyKind::Observational,
        },
        MacrostateDistribution {
            dim: seq.dim(),
            entries,
            pruned_mass,
        },
    ))
}

// ---------------------------------------------------------------------------
// pure-state chain

fn pure_chain(
    psi: &DVector<C64>,
    cgs: &[Arc<CoarseGraining>],
    cutoff: f64,
) -> (Vec<(Vec<u32>, f64)>, f64) {
    struct Branch {
        tuple: Vec<u32>,
        vec: DVector<C64>,
    }
    let mut branches = vec![Branch {
        tuple: Vec::new(),
        vec: psi.clone(),
    }];
    let mut finals: Vec<(Vec<u32>, f64)> = Vec::new();
    let mut pruned = 0.0;

    for (level, cg) in cgs.iter().enumerate() {
        let is_last = level + 1 == cgs.len();
        let mut next: Vec<Branch> = Vec::new();
        match cg.repr() {
            CgRepr::Identity => {
                for mut b in branches {
                    b.tuple.push(0);
                    if is_last {
                        finals.push((b.tuple, b.vec.norm_squared()));
                    } else {
                        next.push(b);
                    }
                }
            }
            CgRepr::DiagonalPartition { cell_of } => {
                let cells = cg.macrostate_count();
                for b in branches {
                    let mut weights = vec![0.0f64; cells];
                    for (i, z) in b.vec.iter().enumerate() {
                        weights[cell_of[i] as usize] += z.norm_sqr();
                    }
                    for (c, &w) in weights.iter().enumerate() {
                        if w == 0.0 {
                            continue;
                        }
                        if w <= cutoff {
                            pruned += w;
                            continue;
                        }
                        let mut tuple = b.tuple.clone();
                        tuple.push(c as u32);
                        if is_last {
                            finals.push((tuple, w));
                        } else {
                            let mut child =
                                DVector::from_element(b.vec.len(), C64::new(0.0, 0.0));
                            for (i, z) in b.vec.iter().enumerate() {
                                if cell_of[i] as usize == c {
                                    child[i] = *z;
                                }
                            }
                            next.push(Branch { tuple, vec: child });
                        }
                    }
                }
            }
            CgRepr::VectorGrouping { basis, groups } => {
                // one batched multiply for all sibling branches
                let nb = branches.len();
                let d = basis.dim();
                let mut block = DMatrix::from_element(d, nb, C64::new(0.0, 0.0));
                for (j, b) in branches.iter().enumerate() {
                    block.set_column(j, &b.vec);
                }
                let coeffs = basis.adjoint_mul(&block);
                for (g, group) in groups.iter().enumerate() {
                    let rows = coeffs.rows(group.start, group.len()).into_owned();
                    let mut materialized: Option<DMatrix<C64>> = None;
                    for (j, b) in branches.iter().enumerate() {
                        let w: f64 = rows.column(j).iter().map(|z| z.norm_sqr()).sum();
                        if w == 0.0 {
                            continue;
                        }
                        if w <= cutoff {
                            pruned += w;
                            continue;
                        }
                        let mut tuple = b.tuple.clone();
                        tuple.push(g as u32);
                        if is_last {
                            finals.push((tuple, w));
                        } else {
                            let all = materialized
                                .get_or_insert_with(|| basis.cols_mul(group.clone(), &rows));
                            next.push(Branch {
                                tuple,
                                vec: all.column(j).into_owned(),
                            });
                        }
                    }
                }
            }
        }
        branches = next;
        if branches.is_empty() && !is_last {
            break;
        }
    }
    finals.sort_by(|a, b| a.0.cmp(&b.0));
    (finals, pruned)
}

// ---------------------------------------------------------------------------
// conjugation chain (dense density matrices and volume tables)

enum ConjState {
    /// Diagonal nonnegative matrix (valid while only diagonal projectors
    /// have been applied).
    Diag(Vec<f64>),
    Dense(DMatrix<C64>),
}

#[derive(Clone, Copy)]
enum ChainMode {
    Probability { cutoff: f64 },
    Volume,
}

impl ChainMode {
    fn threshold(&self) -> f64 {
        match self {
            ChainMode::Probability { cutoff } => *cutoff,
            ChainMode::Volume => 0.0,
        }
    }
}

impl ConjState {
    fn trace(&self) -> f64 {
        match self {
            ConjState::Diag(v) => v.iter().sum(),
            ConjState::Dense(m) => m.diagonal().iter().map(|z| z.re).sum(),
        }
    }

    fn mask_cell(&self, cell_of: &[u32], cell: u32) -> ConjState {
        match self {
            ConjState::Diag(v) => ConjState::Diag(
                v.iter()
                    .enumerate()
                    .map(|(i, &x)| if cell_of[i] == cell { x } else { 0.0 })
                    .collect(),
            ),
            ConjState::Dense(m) => {
                let mut out = m.clone();
                for i in 0..out.nrows() {
                    if cell_of[i] != cell {
                        out.row_mut(i).fill(C64::new(0.0, 0.0));
                        out.column_mut(i).fill(C64::new(0.0, 0.0));
                    }
                }
                ConjState::Dense(out)
            }
        }
    }

    fn cell_traces(&self, cell_of: &[u32], cells: usize) -> Vec<f64> {
        let mut out = vec![0.0; cells];
        match self {
            ConjState::Diag(v) => {
                for (i, &x) in v.iter().enumerate() {
                    out[cell_of[i] as usize] += x;
                }
            }
            ConjState::Dense(m) => {
                for i in 0..m.nrows() {
                    out[cell_of[i] as usize] += m[(i, i)].re;
                }
            }
        }
        out
    }

    /// Per-column weights `<b_c| A |b_c>` for every basis column.
    fn column_weights(&self, basis: &Orthobasis) -> Vec<f64> {
        match self {
            ConjState::Diag(v) => (0..basis.dim())
                .map(|c| basis.masked_column_weight(c, v))
                .collect(),
            ConjState::Dense(m) => {
                let t = basis_right_mul(m, basis);
                (0..basis.dim())
                    .map(|c| {
                        (0..m.nrows())
                            .map(|i| (basis.entry(i, c).conj() * t[(i, c)]).re)
                            .sum()
                    })
                    .collect()
            }
        }
    }

    /// `P_g A P_g` materialized densely for the given column group.
    fn conjugate_group(&self, basis: &Orthobasis, group: Range<usize>) -> ConjState {
        let bg = basis_columns_complex(basis, group.clone());
        let core = match self {
            ConjState::Diag(v) => {
                let mut scaled = bg.clone();
                for i in 0..scaled.nrows() {
                    let f = C64::new(v[i], 0.0);
                    for j in 0..scaled.ncols() {
                        scaled[(i, j)] *= f;
                    }
                }
                bg.ad_mul(&scaled)
            }
            ConjState::Dense(m) => bg.ad_mul(&(m * &bg)),
        };
        ConjState::Dense(&bg * core * bg.adjoint())
    }
}

fn basis_right_mul(m: &DMatrix<C64>, basis: &Orthobasis) -> DMatrix<C64> {
    match basis {
        Orthobasis::Real(b) => {
            let re = m.map(|z| z.re) * b;
            let im = m.map(|z| z.im) * b;
            DMatrix::from_fn(re.nrows(), re.ncols(), |i, j| C64::new(re[(i, j)], im[(i, j)]))
        }
        Orthobasis::Complex(b) => m * b,
    }
}

fn basis_columns_complex(basis: &Orthobasis, group: Range<usize>) -> DMatrix<C64> {
    match basis {
        Orthobasis::Real(b) => b
            .columns(group.start, group.len())
            .map(|x| C64::new(x, 0.0)),
        Orthobasis::Complex(b) => b.columns(group.start, group.len()).into_owned(),
    }
}

fn conj_chain(
    init: ConjState,
    cgs: &[Arc<CoarseGraining>],
    mode: ChainMode,
) -> Result<(Vec<(Vec<u32>, f64)>, f64)> {
    let mut finals = Vec::new();
    let mut pruned = 0.0;
    let mut tuple = Vec::with_capacity(cgs.len());
    conj_rec(init, cgs, mode, &mut tuple, &mut finals, &mut pruned)?;
    finals.sort_by(|a, b| a.0.cmp(&b.0));
    Ok((finals, pruned))
}

fn conj_rec(
    state: ConjState,
    rest: &[Arc<CoarseGraining>],
    mode: ChainMode,
    tuple: &mut Vec<u32>,
    finals: &mut Vec<(Vec<u32>, f64)>,
    pruned: &mut f64,
) -> Result<()> {
    let cg = &rest[0];
    let is_last = rest.len() == 1;
    let threshold = mode.threshold();

    let visit = |id: u32,
                     weight: f64,
                     make_child: &mut dyn FnMut() -> ConjState,
                     tuple: &mut Vec<u32>,
                     finals: &mut Vec<(Vec<u32>, f64)>,
                     pruned: &mut f64|
     -> Result<()> {
        let weight = clamp_weight(weight)?;
        if weight == 0.0 {
            return Ok(());
        }
        if weight <= threshold {
            *pruned += weight;
            return Ok(());
        }
        tuple.push(id);
        if is_last {
            finals.push((tuple.clone(), weight));
        } else {
            let child = make_child();
            conj_rec(child, &rest[1..], mode, tuple, finals, pruned)?;
        }
        tuple.pop();
        Ok(())
    };

    match cg.repr() {
        CgRepr::Identity => {
            let w = state.trace();
            let mut mk = || state_clone(&state);
            visit(0, w, &mut mk, tuple, finals, pruned)?;
        }
        CgRepr::DiagonalPartition { cell_of } => {
            let traces = state.cell_traces(cell_of, cg.macrostate_count());
            for (c, &w) in traces.iter().enumerate() {
                let mut mk = || state.mask_cell(cell_of, c as u32);
                visit(c as u32, w, &mut mk, tuple, finals, pruned)?;
            }
        }
        CgRepr::VectorGrouping { basis, groups } => {
            let weights = state.column_weights(basis);
            for (g, group) in groups.iter().enumerate() {
                let w: f64 = weights[group.clone()].iter().sum();
                let mut mk = || state.conjugate_group(basis, group.clone());
                visit(g as u32, w, &mut mk, tuple, finals, pruned)?;
            }
        }
    }
    Ok(())
}

fn state_clone(s: &ConjState) -> ConjState {
    match s {
        ConjState::Diag(v) => ConjState::Diag(v.clone()),
        ConjState::Dense(m) => ConjState::Dense(m.clone()),
    }
}

fn clamp_weight(w: f64) -> Result<f64> {
    if w >= 0.0 {
        Ok(w)
    } else if w >= -NEGATIVE_CLAMP {
        Ok(0.0)
    } else {
        Err(Error::NumericalConsistency(format!(
            "projector-chain weight {w:.3e} is negative beyond roundoff"
        )))
    }
}

// ---------------------------------------------------------------------------
// reference entropies

/// `-sum lambda ln lambda` over the spectrum of the state.
pub fn von_neumann_entropy(state: &QuantumState) -> Result<EntropyValue> {
    state.validate()?;
    let value = match state {
        QuantumState::Pure(_) => 0.0,
        QuantumState::Mixture(m) => shannon(m.weights()),
        QuantumState::Mixed(rho) => {
            let h = crate::spectral::HermitianOperator::from_complex(
                (rho + rho.adjoint()) * C64::new(0.5, 0.0),
            )?;
            let sd = diagonalize(&h)?;
            let lo = sd.eigenvalues()[0];
            if lo < -1e-12 {
                return Err(Error::NotPositiveSemidefinite(lo));
            }
            shannon(sd.eigenvalues().iter().copied())
        }
    };
    Ok(EntropyValue {
        value,
        kind: EntropyKind::VonNeumann,
    })
}

fn shannon(weights: impl Iterator<Item = f64>) -> f64 {
    weights
        .filter(|&w| w > 1e-14)
        .map(|w| -w * w.ln())
        .sum()
}

/// Von Neumann entropy of the reduced state on the contiguous site range
/// `keep`. Pure input states only.
pub fn entanglement_entropy(
    state: &QuantumState,
    basis: &FockBasis,
    keep: Range<usize>,
) -> Result<EntropyValue> {
    if !state.is_pure() {
        return Err(Error::UnsupportedState(
            "entanglement entropy is defined here for pure states".into(),
        ));
    }
    let red = crate::fock::reduced_density_matrix(state, basis, keep)?;
    let vn = von_neumann_entropy(&QuantumState::Mixed(red.matrix))?;
    Ok(EntropyValue {
        value: vn.value,
        kind: EntropyKind::Entanglement,
    })
}

/// Density-of-states entropy `ln(rho(E) dE)`: the log of the number of
/// eigenvalues within a window `dE = sigma(spectrum)/sqrt(particles)`
/// centered on `energy`.
pub fn dos_entropy(
    sd: &SpectralDecomposition,
    energy: f64,
    particles: usize,
) -> Result<EntropyValue> {
    if particles == 0 {
        return Err(Error::InvalidArgument(
            "density-of-states window needs at least one particle".into(),
        ));
    }
    let evals = sd.eigenvalues();
    let (lo, hi) = (evals[0], evals[evals.len() - 1]);
    // mean energies of edge states can round an ulp past the spectrum
    let slack = (hi - lo).abs() * 1e-12 + 1e-12;
    if energy < lo - slack || energy > hi + slack {
        return Err(Error::OutOfSupport(energy));
    }
    let mean = evals.iter().sum::<f64>() / evals.len() as f64;
    let var = evals.iter().map(|e| (e - mean) * (e - mean)).sum::<f64>() / evals.len() as f64;
    let width = var.sqrt() / (particles as f64).sqrt();
    let count = evals
        .iter()
        .filter(|&&e| e >= energy - width / 2.0 && e <= energy + width / 2.0)
        .count();
    if count == 0 {
        return Err(Error::OutOfSupport(energy));
    }
    Ok(EntropyValue {
        value: (count as f64).ln(),
        kind: EntropyKind::DensityOfStates,
    })
}

/// Canonical entropy `beta <E> + ln Z` at inverse temperature `beta`,
/// computed with a max-shift so large `|beta|` stays finite.
pub fn canonical_entropy(sd: &SpectralDecomposition, beta: f64) -> EntropyValue {
    let (mean, ln_z) = canonical_mean_and_lnz(sd.eigenvalues(), beta);
    EntropyValue {
        value: beta * mean + ln_z,
        kind: EntropyKind::Canonical,
    }
}

fn canonical_mean_and_lnz(evals: &[f64], beta: f64) -> (f64, f64) {
    let shift = evals
        .iter()
        .map(|&e| -beta * e)
        .fold(f64::NEG_INFINITY, f64::max);
    let mut z = 0.0;
    let mut ez = 0.0;
    for &e in evals {
        let w = (-beta * e - shift).exp();
        z += w;
        ez += e * w;
    }
    (ez / z, shift + z.ln())
}

/// Inverse temperature whose canonical mean energy equals `target`, by
/// bisection to `1e-9` of the spectral span. The mean is monotone
/// decreasing in beta, achieving `(E_min, E_max)` only in the limits.
pub fn match_beta(sd: &SpectralDecomposition, target: f64) -> Result<f64> {
    let evals = sd.eigenvalues();
    let (lo, hi) = (evals[0], evals[evals.len() - 1]);
    let span = hi - lo;
    if span <= 0.0 || target <= lo || target >= hi {
        return Err(Error::TargetOutOfRange(target));
    }
    let mean = |beta: f64| canonical_mean_and_lnz(evals, beta).0;
    let mut blo = -1.0;
    let mut bhi = 1.0;
    // expand until the bracket straddles the target (mean decreases in beta)
    for _ in 0..200 {
        if mean(bhi) <= target {
            break;
        }
        bhi *= 2.0;
    }
    for _ in 0..200 {
        if mean(blo) >= target {
            break;
        }
        blo *= 2.0;
    }
    if mean(bhi) > target || mean(blo) < target {
        return Err(Error::TargetOutOfRange(target));
    }
    let tol = 1e-9 * span;
    for _ in 0..400 {
        let mid = 0.5 * (blo + bhi);
        let m = mean(mid);
        if (m - target).abs() <= tol {
            return Ok(mid);
        }
        if m > target {
            blo = mid;
        } else {
            bhi = mid;
        }
    }
    Ok(0.5 * (blo + bhi))
}

/// Residual of the Kullback-Leibler identity
/// `S_O = ln dim - D_KL(P(rho) || P(rho_id))`, where the reference tuple
/// distribution of the maximally mixed state is `V / dim`.
pub fn kl_identity_residual(state: &QuantumState, seq: &CgSequence, cutoff: f64) -> Result<f64> {
    let (s, dist) = observational_entropy(state, seq, cutoff)?;
    let ln_dim = (seq.dim() as f64).ln();
    let d_kl: f64 = dist
        .entries
        .iter()
        .map(|e| e.probability * (e.probability * seq.dim() as f64 / e.volume).ln())
        .sum();
    Ok((s.value - (ln_dim - d_kl)).abs())
}

// ---------------------------------------------------------------------------
// convenience presets

/// `S_xE`: coarse position (particle number per bin), then total energy.
pub fn s_xe(
    state: &QuantumState,
    basis: &FockBasis,
    bins: &crate::fock::BinPartition,
    sd: &SpectralDecomposition,
) -> Result<EntropyValue> {
    let pos = crate::coarsegrain::positional_coarse_graining(basis, bins)?;
    let grouping = group_degenerate(sd, DEFAULT_DEGENERACY_TOL)?;
    let energy = crate::coarsegrain::energy_coarse_graining(sd, &grouping, None)?;
    let seq = CgSequence::new(vec![Arc::new(pos), Arc::new(energy)])?;
    let (v, _) = observational_entropy(state, &seq, DEFAULT_PRUNE_CUTOFF)?;
    Ok(EntropyValue {
        value: v.value,
        kind: EntropyKind::PositionEnergy,
    })
}

/// Factorized observational entropy: simultaneous local-energy measurement
/// on the blocks of `bd`.
pub fn s_foe(
    state: &QuantumState,
    bd: &BlockDecomposition,
    basis: &FockBasis,
) -> Result<EntropyValue> {
    let cg = crate::coarsegrain::local_energy_product_coarse_graining(
        bd,
        basis,
        DEFAULT_DEGENERACY_TOL,
    )?;
    let seq = CgSequence::single(cg);
    let (v, _) = observational_entropy(state, &seq, DEFAULT_PRUNE_CUTOFF)?;
    Ok(EntropyValue {
        value: v.value,
        kind: EntropyKind::FactorizedLocalEnergy,
    })
}

/// Diagonal entropy: observational entropy in the Hamiltonian eigenbasis.
pub fn s_diag(state: &QuantumState, sd: &SpectralDecomposition) -> Result<EntropyValue> {
    let grouping = group_degenerate(sd, DEFAULT_DEGENERACY_TOL)?;
    let energy = crate::coarsegrain::energy_coarse_graining(sd, &grouping, None)?;
    let seq = CgSequence::single(energy);
    let (v, _) = observational_entropy(state, &seq, DEFAULT_PRUNE_CUTOFF)?;
    Ok(EntropyValue {
        value: v.value,
        kind: EntropyKind::Diagonal,
    })
}
