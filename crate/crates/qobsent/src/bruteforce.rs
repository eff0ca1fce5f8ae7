//! Reference implementation of observational entropy that materializes
//! every projector as a dense matrix and walks the full tuple grid.
//!
//! Deliberately independent of the engine in [`crate::entropy`]: no implicit
//! representations, no batching, no branch reuse. Quadratic-to-cubic in the
//! dimension per tuple, so use it only on small spaces.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::coarsegrain::{CgRepr, CoarseGraining};
use crate::spectral::Orthobasis;
use crate::state::QuantumState;
use crate::{Error, Result};

/// Materialize each macrostate projector of `cg` as a dense matrix.
pub fn projectors(cg: &CoarseGraining) -> Vec<DMatrix<C64>> {
    let d = cg.dim();
    match cg.repr() {
        CgRepr::Identity => vec![DMatrix::identity(d, d)],
        CgRepr::DiagonalPartition { cell_of } => (0..cg.macrostate_count())
            .map(|c| {
                DMatrix::from_fn(d, d, |i, j| {
                    if i == j && cell_of[i] as usize == c {
                        C64::new(1.0, 0.0)
                    } else {
                        C64::new(0.0, 0.0)
                    }
                })
            })
            .collect(),
        CgRepr::VectorGrouping { basis, groups } => {
            let full = match basis.as_ref() {
                Orthobasis::Real(b) => b.map(|x| C64::new(x, 0.0)),
                Orthobasis::Complex(b) => b.clone(),
            };
            groups
                .iter()
                .map(|g| {
                    let cols = full.columns(g.start, g.len());
                    &cols * cols.adjoint()
                })
                .collect()
        }
    }
}

/// Observational entropy by explicit projector products:
/// `p = tr[P_n ... P_1 rho P_1 ... P_n]`, `V = tr[P_n ... P_1 ... P_n]`,
/// `S = -sum p ln(p/V)` over tuples with `p > cutoff`.
pub fn observational_entropy_dense(
    state: &QuantumState,
    cgs: &[&CoarseGraining],
    cutoff: f64,
) -> Result<(f64, Vec<(Vec<u32>, f64, f64)>)> {
    if cgs.is_empty() {
        return Err(Error::InvalidArgument("empty sequence".into()));
    }
    let d = state.dim();
    let families: Vec<Vec<DMatrix<C64>>> = cgs.iter().map(|cg| projectors(cg)).collect();
    let rho = state.density_matrix();
    let ident = DMatrix::<C64>::identity(d, d);

    let mut out: Vec<(Vec<u32>, f64, f64)> = Vec::new();
    let mut tuple: Vec<u32> = Vec::new();
    walk(&families, 0, &rho, &ident, cutoff, &mut tuple, &mut out)?;
    out.sort_by(|a, b| a.0.cmp(&b.0));

    let mut s = 0.0;
    for (_, p, v) in &out {
        s -= p * (p / v).ln();
    }
    Ok((s, out))
}

fn walk(
    families: &[Vec<DMatrix<C64>>],
    level: usize,
    rho: &DMatrix<C64>,
    vol: &DMatrix<C64>,
    cutoff: f64,
    tuple: &mut Vec<u32>,
    out: &mut Vec<(Vec<u32>, f64, f64)>,
) -> Result<()> {
    if level == families.len() {
        let p = real_trace(rho)?;
        let v = real_trace(vol)?;
        if p > cutoff {
            if v <= 0.0 {
                return Err(Error::NumericalConsistency(format!(
                    "probability {p:.3e} on a zero-volume tuple"
                )));
            }
            out.push((tuple.clone(), p, v));
        }
        return Ok(());
    }
    for (i, proj) in families[level].iter().enumerate() {
        let rho_next = proj * rho * proj;
        let vol_next = proj * vol * proj;
        tuple.push(i as u32);
        walk(families, level + 1, &rho_next, &vol_next, cutoff, tuple, out)?;
        tuple.pop();
    }
    Ok(())
}

fn real_trace(m: &DMatrix<C64>) -> Result<f64> {
    let t = m.diagonal().iter().map(|z| z.re).sum::<f64>();
    if t < -1e-12 {
        return Err(Error::NumericalConsistency(format!(
            "trace {t:.3e} negative beyond roundoff"
        )));
    }
    Ok(t.max(0.0))
}
