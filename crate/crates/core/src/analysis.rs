//! Support-recovery certificates for the partial Lasso.
//!
//! With `S` the stacked attack support and `Sbar` its complement, the Lasso
//! recovers `S` for all small enough `lambda` exactly when
//! `||O_Sbar^{+T} O_S^T sign(a_S)||_inf < 1`, where
//! `O_Sbar^{+T} = O_Sbar (O_Sbar^T O_Sbar)^{-1}`. Dropping the sign vector gives
//! the sign-independent sufficient quantity `rho`.

use itertools::Itertools;
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::linalg::{self, binomial, inf_norm};
use crate::model::{AttackScenario, StackedModel, SUBSET_CAP};
use crate::{Result, SseError};

#[derive(Debug, Clone, PartialEq)]
pub struct IrrepReport {
    /// `||O_Sbar^{+T} O_S^T||_inf` (max absolute row sum).
    pub rho: f64,
    /// `||O_Sbar^{+T} O_S^T sign||_inf`.
    pub strict_value: f64,
    pub sufficient_holds: bool,
    pub strict_holds: bool,
    /// `(O I_S)` has full column rank `n + |S|`.
    pub full_rank_ok: bool,
    pub support: Vec<usize>,
}

/// Rows of `O` inside and outside `support` (stacked indices), each in
/// their original order.
pub fn split_rows(model: &StackedModel, support: &[usize]) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let support = normalize_support(model, support)?;
    let outside = linalg::complement(&support, model.rows());
    Ok((linalg::select_rows(model.omega(), &support), linalg::select_rows(model.omega(), &outside)))
}

fn normalize_support(model: &StackedModel, support: &[usize]) -> Result<Vec<usize>> {
    if let Some(&bad) = support.iter().find(|&&i| i >= model.rows()) {
        return Err(SseError::DimensionMismatch(format!("support row {bad} outside 0..{}", model.rows())));
    }
    let sorted = support.iter().copied().sorted_unstable().dedup().collect_vec();
    if sorted.len() != support.len() {
        return Err(SseError::InvalidConfig("support has repeated rows".into()));
    }
    Ok(sorted)
}

/// `O_Sbar^{+T}` from the thin SVD `O_Sbar = U S V^T`, i.e. `U S^{-1} V^T`,
/// without forming the normal matrix.
fn transposed_pseudo_inverse(o_sbar: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = o_sbar.ncols();
    if o_sbar.nrows() < n {
        return Err(SseError::RankDeficient(format!("only {} safe rows for {n} states", o_sbar.nrows())));
    }
    let svd = o_sbar.clone().svd(true, true);
    let sigma_max = svd.singular_values.max();
    let cutoff = linalg::rank_cutoff(o_sbar.nrows(), n, sigma_max);
    if sigma_max == 0.0 || svd.singular_values.iter().any(|&s| s <= cutoff) {
        return Err(SseError::RankDeficient("O restricted to the safe rows is not full column rank".into()));
    }
    let u = svd.u.expect("requested U");
    let v_t = svd.v_t.expect("requested V^T");
    let inv = DMatrix::from_diagonal(&svd.singular_values.map(|s| 1.0 / s));
    Ok(u * inv * v_t)
}

/// Irrepresentable quantities for the stacked attack support `support` with
/// signs `sign_pattern` (one `+-1` per support row, in increasing row order).
pub fn irrepresentable_report(model: &StackedModel, support: &[usize], sign_pattern: &[f64]) -> Result<IrrepReport> {
    let support = normalize_support(model, support)?;
    if sign_pattern.len() != support.len() {
        return Err(SseError::DimensionMismatch(format!("{} signs for {} support rows", sign_pattern.len(), support.len())));
    }
    let (n, h) = (model.n(), support.len());

    let mut o_i_s = DMatrix::zeros(model.rows(), n + h);
    o_i_s.columns_mut(0, n).copy_from(model.omega());
    for (col, &row) in support.iter().enumerate() {
        o_i_s[(row, n + col)] = 1.0;
    }
    let full_rank_ok = linalg::numerical_rank(&o_i_s) == n + h;
    if !full_rank_ok {
        return Err(SseError::RankDeficient("(O I_S) is not full column rank".into()));
    }

    let (o_s, o_sbar) = split_rows(model, &support)?;
    let pinv_t = transposed_pseudo_inverse(&o_sbar)?;
    let gain = pinv_t * o_s.transpose();

    let rho = gain.row_iter().map(|r| r.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max);
    let strict_value = inf_norm(&(&gain * DVector::from_column_slice(sign_pattern)));
    Ok(IrrepReport { rho, strict_value, sufficient_holds: rho < 1.0, strict_holds: strict_value < 1.0, full_rank_ok, support })
}

/// Report for a known stacked attack vector: support and signs are read off
/// its nonzero entries.
pub fn report_for_attack(model: &StackedModel, stacked_attack: &DVector<f64>) -> Result<IrrepReport> {
    model.check_measurements(stacked_attack)?;
    let support = (0..stacked_attack.len()).filter(|&i| stacked_attack[i] != 0.0).collect_vec();
    let signs = support.iter().map(|&i| stacked_attack[i].signum()).collect_vec();
    irrepresentable_report(model, &support, &signs)
}

/// Whether the Lasso is certified to recover the support of the scenario's
/// first window for small `lambda`.
pub fn predict_lasso_success(model: &StackedModel, scenario: &AttackScenario) -> Result<bool> {
    if scenario.p() != model.p() || scenario.horizon() < model.tau() {
        return Err(SseError::DimensionMismatch("scenario does not cover the model window".into()));
    }
    if scenario.noise_bound > 0.0 {
        log::warn!("the recovery certificate assumes noise-free measurements");
    }
    Ok(report_for_attack(model, &scenario.stacked_attack(0, model.tau()))?.strict_holds)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenDiagnostics {
    /// Largest eigenvalue of `(O I)^T (O I)`.
    pub q: f64,
    /// Smallest eigenvalue of `(O I_J)^T (O I_J)` over sensor subsets `J`.
    pub r: f64,
    pub ratio: f64,
    /// Subset attaining `r`.
    pub argmin: Vec<usize>,
}

/// Restricted eigenvalue diagnostics used to check the convergence condition
/// of block-hard projected gradient. `I_J` keeps the identity columns of every
/// stacked row of the sensors in `J`; all rows of `O` are kept.
pub fn etpg_eigen_diagnostics(model: &StackedModel, subset_size: usize) -> Result<EigenDiagnostics> {
    let p = model.p();
    if subset_size > p {
        return Err(SseError::InvalidConfig(format!("subset size {subset_size} exceeds p = {p}")));
    }
    let subsets = binomial(p, subset_size);
    if subsets > SUBSET_CAP {
        return Err(SseError::CombinatorialCap { subsets, cap: SUBSET_CAP });
    }
    let sigma = model.omega().singular_values().max();
    let q = sigma * sigma + 1.0;

    let n = model.n();
    let gram_min = |sensors: &Vec<usize>| -> f64 {
        let rows = model.sensor_rows(sensors);
        let mut m = DMatrix::zeros(model.rows(), n + rows.len());
        m.columns_mut(0, n).copy_from(model.omega());
        for (col, &row) in rows.iter().enumerate() {
            m[(row, n + col)] = 1.0;
        }
        m.tr_mul(&m).symmetric_eigenvalues().min().max(0.0)
    };
    let (argmin, r) = (0..p)
        .combinations(subset_size)
        .collect_vec()
        .into_par_iter()
        .map(|j| {
            let r = gram_min(&j);
            (j, r)
        })
        .reduce_with(|a, b| if b.1 < a.1 || (b.1 == a.1 && b.0 < a.0) { b } else { a })
        .expect("at least one subset");
    Ok(EigenDiagnostics { q, r, ratio: r / q, argmin })
}
