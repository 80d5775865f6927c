//! Association weights: PPMI and PLMI for the matrix, PLMI for the tensor.
//!
//! All logarithms are base 2 unless a [`LogBase`] is passed explicitly. Cells
//! whose weight is not strictly positive are removed, so the weighted support
//! is always a subset of the raw support.

use thiserror::Error;

use crate::store::{CoocMatrix, RoleTensor, Weighting};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum WeightingError {
    #[error("store is already {0}-weighted")]
    AlreadyWeighted(Weighting),
    #[error("store has no counts (grand total is 0)")]
    NoCounts,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LogBase {
    Two,
    E,
}

impl LogBase {
    fn log(self, x: f64) -> f64 {
        match self {
            LogBase::Two => x.log2(),
            LogBase::E => x.ln(),
        }
    }
}

fn check_raw_matrix(m: &CoocMatrix) -> Result<(), WeightingError> {
    if m.weighting() != Weighting::Raw {
        return Err(WeightingError::AlreadyWeighted(m.weighting()));
    }
    if m.total() == 0 {
        return Err(WeightingError::NoCounts);
    }
    Ok(())
}

/// `log(|w,c| * D / (|w| * |c|))` for one cell; `None` when a marginal is 0.
fn pmi(count: f64, target_marginal: u64, context_marginal: u64, total: u64, base: LogBase) -> Option<f64> {
    let expected = target_marginal as f64 * context_marginal as f64;
    if expected == 0.0 {
        return None;
    }
    Some(base.log(count * total as f64 / expected))
}

fn weigh_matrix(m: CoocMatrix, base: LogBase, weighting: Weighting) -> Result<CoocMatrix, WeightingError> {
    check_raw_matrix(&m)?;
    let mut zero_expected = 0u64;
    let out = m.map_cells(weighting, |t, c, count| {
        let Some(pmi) = pmi(count, m.target_marginals()[t as usize], m.context_marginals()[c as usize], m.total(), base) else {
            zero_expected += 1;
            return 0.0;
        };
        let ppmi = pmi.max(0.0);
        match weighting {
            Weighting::Plmi => ppmi * count,
            _ => ppmi,
        }
    });
    if zero_expected > 0 {
        log::warn!("dropped {zero_expected} cells with a zero marginal while weighting");
    }
    Ok(out)
}

/// `PPMI(w,c) = max(log2(|w,c| * D / (|w| * |c|)), 0)`.
pub fn ppmi(matrix: CoocMatrix) -> Result<CoocMatrix, WeightingError> {
    ppmi_with_base(matrix, LogBase::Two)
}

pub fn ppmi_with_base(matrix: CoocMatrix, base: LogBase) -> Result<CoocMatrix, WeightingError> {
    weigh_matrix(matrix, base, Weighting::Ppmi)
}

/// PPMI multiplied by the raw word-context count.
pub fn plmi_matrix(matrix: CoocMatrix) -> Result<CoocMatrix, WeightingError> {
    weigh_matrix(matrix, LogBase::Two, Weighting::Plmi)
}

/// `max(log2(O / E) * O, 0)` with `E = |v| * |r| * |f| / T^2`.
pub fn plmi_tensor(tensor: RoleTensor) -> Result<RoleTensor, WeightingError> {
    if tensor.weighting() != Weighting::Raw {
        return Err(WeightingError::AlreadyWeighted(tensor.weighting()));
    }
    if tensor.total() == 0 {
        return Err(WeightingError::NoCounts);
    }
    let total = tensor.total() as f64;
    let mut zero_expected = 0u64;
    let out = tensor.map_entries(Weighting::Plmi, |e| {
        let expected = tensor.verb_marginals()[e.verb as usize] as f64
            * tensor.relation_marginals()[e.relation as usize] as f64
            * tensor.filler_marginals()[e.filler as usize] as f64
            / (total * total);
        if expected == 0.0 {
            zero_expected += 1;
            return 0.0;
        }
        ((e.value / expected).log2() * e.value).max(0.0)
    });
    if zero_expected > 0 {
        log::warn!("dropped {zero_expected} tensor entries with a zero marginal while weighting");
    }
    Ok(out)
}
