//! Exhaustive minimal-support decoder for small instances.
//!
//! Candidate attacked-sensor sets are tried by increasing size and then
//! lexicographically; a set is consistent when the remaining sensors explain
//! their measurements by least squares.

use itertools::Itertools;
use nalgebra::DVector;
use rayon::prelude::*;

use crate::linalg::{self, binomial};
use crate::model::{StackedModel, SUBSET_CAP};
use crate::{Result, SseError};

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    /// Attacked sensors (0-based), sorted.
    pub support: Vec<usize>,
    /// Stacked row indices of `support`.
    pub support_rows: Vec<usize>,
    pub x_exact: DVector<f64>,
    /// Safe-row least-squares residual norm.
    pub residual: f64,
    /// No other consistent set of the same size gives a different state.
    pub unique: bool,
}

/// Relative feasibility tolerance: `1e-8` for noise-free data; otherwise the
/// absolute residual budget `10 * noise_bound * sqrt(p tau)` divided by `||y||_2`.
pub fn default_tolerance(model: &StackedModel, y: &DVector<f64>, noise_bound: f64) -> f64 {
    if noise_bound > 0.0 && y.norm() > 0.0 {
        10.0 * noise_bound * (model.rows() as f64).sqrt() / y.norm()
    } else {
        1e-8
    }
}

struct Candidate {
    sensors: Vec<usize>,
    x: DVector<f64>,
    residual: f64,
}

fn try_candidate(model: &StackedModel, y: &DVector<f64>, sensors: Vec<usize>, budget: f64) -> Option<Candidate> {
    let attacked = model.sensor_rows(&sensors);
    let safe = linalg::complement(&attacked, model.rows());
    let o_safe = linalg::select_rows(model.omega(), &safe);
    let y_safe = linalg::select_entries(y, &safe);
    let x = linalg::least_squares(&o_safe, &y_safe).ok()?;
    let residual = (&o_safe * &x - y_safe).norm();
    (residual <= budget).then_some(Candidate { sensors, x, residual })
}

pub fn exact_decode(model: &StackedModel, y: &DVector<f64>, s_max: usize, tol: f64) -> Result<OracleResult> {
    model.check_measurements(y)?;
    let p = model.p();
    if s_max >= p {
        return Err(SseError::InvalidConfig(format!("s_max = {s_max} must be below p = {p}")));
    }
    if !(tol > 0.0) {
        return Err(SseError::InvalidConfig("tolerance must be positive".into()));
    }
    let subsets = (0..=s_max).map(|k| binomial(p, k)).fold(0u128, u128::saturating_add);
    if subsets > SUBSET_CAP {
        return Err(SseError::CombinatorialCap { subsets, cap: SUBSET_CAP });
    }
    let budget = tol * y.norm();

    for size in 0..=s_max {
        // collect() keeps lexicographic order whatever the evaluation order
        let consistent: Vec<Candidate> = (0..p)
            .combinations(size)
            .collect_vec()
            .into_par_iter()
            .filter_map(|sensors| try_candidate(model, y, sensors, budget))
            .collect();
        let mut iter = consistent.into_iter();
        if let Some(best) = iter.next() {
            let scale = 1.0 + best.x.norm();
            let unique = iter.all(|other| (&other.x - &best.x).norm() <= tol * scale);
            return Ok(OracleResult {
                support_rows: model.sensor_rows(&best.sensors),
                support: best.sensors,
                x_exact: best.x,
                residual: best.residual,
                unique,
            });
        }
    }
    Err(SseError::NoConsistentSupport { s_max })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_stacked_model, generate_random_instance, InstanceConfig, LtiSystem};
    use approx::assert_relative_eq;
    use nalgebra::DMatrix;

    #[test]
    fn example_one_flags_the_odd_sensor() {
        let alpha = 1.7;
        let sys = LtiSystem::new(DMatrix::identity(1, 1), DMatrix::from_element(3, 1, alpha)).unwrap();
        let model = build_stacked_model(&sys, 1).unwrap();
        let x = 2.5;
        let y = DVector::from_vec(vec![alpha * x, alpha * x, alpha * x + 5.0]);
        let res = exact_decode(&model, &y, 1, 1e-8).unwrap();
        assert_eq!(res.support, vec![2]);
        assert_relative_eq!(res.x_exact[0], x, max_relative = 1e-12);
        assert!(res.unique);
    }

    #[test]
    fn attack_free_data_returns_empty_support() {
        let inst = generate_random_instance(3, 6, 0, 2, &InstanceConfig::default(), 3).unwrap();
        let (model, y, _) = inst.first_window().unwrap();
        let res = exact_decode(&model, &y, 2, 1e-8).unwrap();
        assert!(res.support.is_empty());
        assert!((&res.x_exact - &inst.x0).norm() < 1e-10 * inst.x0.norm());
    }

    #[test]
    fn recovers_generated_attack() {
        let inst = generate_random_instance(3, 7, 2, 3, &InstanceConfig::default(), 17).unwrap();
        let (model, y, _) = inst.first_window().unwrap();
        let res = exact_decode(&model, &y, 2, 1e-8).unwrap();
        assert_eq!(res.support, inst.scenario.support);
        assert!((&res.x_exact - &inst.x0).norm() < 1e-8 * inst.x0.norm());
        // larger s_max does not change a minimal answer
        assert_eq!(exact_decode(&model, &y, 3, 1e-8).unwrap(), res);
    }

    #[test]
    fn too_small_s_max_is_an_error() {
        let inst = generate_random_instance(3, 7, 2, 3, &InstanceConfig::default(), 17).unwrap();
        let (model, y, _) = inst.first_window().unwrap();
        assert!(matches!(exact_decode(&model, &y, 1, 1e-8), Err(SseError::NoConsistentSupport { s_max: 1 })));
    }
}
