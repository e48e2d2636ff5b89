//! Small dense linear-algebra helpers shared by the solvers and analysis code.

use nalgebra::{DMatrix, DVector};

use crate::{Result, SseError};

/// Numerical rank with the usual `max(rows, cols) * eps * sigma_max` cutoff.
pub fn numerical_rank(m: &DMatrix<f64>) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    let sv = m.singular_values();
    let sigma_max = sv.max();
    if sigma_max == 0.0 {
        return 0;
    }
    let cutoff = rank_cutoff(m.nrows(), m.ncols(), sigma_max);
    sv.iter().filter(|&&s| s > cutoff).count()
}

pub(crate) fn rank_cutoff(rows: usize, cols: usize, sigma_max: f64) -> f64 {
    rows.max(cols) as f64 * f64::EPSILON * sigma_max
}

/// Rows of `m` whose indices appear in `rows`, in the given order.
pub fn select_rows(m: &DMatrix<f64>, rows: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), m.ncols(), |i, j| m[(rows[i], j)])
}

pub fn select_entries(v: &DVector<f64>, idx: &[usize]) -> DVector<f64> {
    DVector::from_iterator(idx.len(), idx.iter().map(|&i| v[i]))
}

/// Full-column-rank least squares via SVD. Fails when `m` has rank below its
/// column count.
pub fn least_squares(m: &DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    if m.nrows() != b.len() {
        return Err(SseError::DimensionMismatch(format!("least squares: {} rows but rhs has {} entries", m.nrows(), b.len())));
    }
    if m.nrows() < m.ncols() {
        return Err(SseError::RankDeficient(format!("{}x{} system is underdetermined", m.nrows(), m.ncols())));
    }
    let svd = m.clone().svd(true, true);
    let sigma_max = svd.singular_values.max();
    let cutoff = rank_cutoff(m.nrows(), m.ncols(), sigma_max);
    let rank = svd.singular_values.iter().filter(|&&s| s > cutoff).count();
    if sigma_max == 0.0 || rank < m.ncols() {
        return Err(SseError::RankDeficient(format!("rank {rank} < {} columns", m.ncols())));
    }
    svd.solve(b, cutoff).map_err(|e| SseError::RankDeficient(e.to_string()))
}

/// Largest eigenvalue modulus of a square matrix.
pub fn spectral_radius(m: &DMatrix<f64>) -> f64 {
    m.complex_eigenvalues().iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn inf_norm(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0, |acc, x| acc.max(x.abs()))
}

/// Binomial coefficient, saturating at `u128::MAX`.
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = match acc.checked_mul((n - i) as u128) {
            Some(v) => v / (i as u128 + 1),
            None => return u128::MAX,
        };
    }
    acc
}

/// Stacked-row indices belonging to the given sensors, for a window of `tau`
/// steps with `p` sensors per step. Row `t * p + j` is sensor `j` at step `t`.
pub fn sensor_rows(sensors: &[usize], p: usize, tau: usize) -> Vec<usize> {
    let mut rows: Vec<usize> = (0..tau).flat_map(|t| sensors.iter().map(move |&j| t * p + j)).collect();
    rows.sort_unstable();
    rows
}

/// Sorted complement of `idx` within `0..len`.
pub fn complement(idx: &[usize], len: usize) -> Vec<usize> {
    let mut mask = vec![false; len];
    for &i in idx {
        mask[i] = true;
    }
    (0..len).filter(|&i| !mask[i]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binomial_small_values() {
        assert_eq!(binomial(6, 2), 15);
        assert_eq!(binomial(30, 0), 1);
        assert_eq!(binomial(3, 4), 0);
        assert_eq!(binomial(52, 5), 2_598_960);
    }

    #[test]
    fn rank_of_rank_one_matrix() {
        let m = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 2.0, 4.0, -1.0, -2.0]);
        assert_eq!(numerical_rank(&m), 1);
        assert_eq!(numerical_rank(&DMatrix::zeros(3, 2)), 0);
    }

    #[test]
    fn sensor_rows_cover_each_step() {
        assert_eq!(sensor_rows(&[0, 2], 3, 2), vec![0, 2, 3, 5]);
        assert_eq!(complement(&[0, 2], 4), vec![1, 3]);
    }

    #[test]
    fn least_squares_rejects_rank_deficiency() {
        let m = DMatrix::from_row_slice(3, 2, &[1.0, 1.0, 2.0, 2.0, 3.0, 3.0]);
        let b = DVector::from_vec(vec![1.0, 2.0, 3.0]);
        assert!(matches!(least_squares(&m, &b), Err(SseError::RankDeficient(_))));
    }

    #[test]
    fn spectral_radius_of_rotation() {
        let m = DMatrix::from_row_slice(2, 2, &[0.0, -2.0, 2.0, 0.0]);
        assert!((spectral_radius(&m) - 2.0).abs() < 1e-12);
    }
}
