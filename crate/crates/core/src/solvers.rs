//! Partial-Lasso decoding: `min 1/2 ||y - O x - a||^2 + lambda ||a||_1`.
//!
//! The gradient of the smooth part with respect to `(x, a)` is
//! `(O I)^T (O x + a - y)`; the identity block is never formed, so the attack
//! gradient is just the residual.

use std::io::Write;
use std::time::Instant;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::linalg::{self, inf_norm};
use crate::model::StackedModel;
use crate::{Result, SseError};

/// `w - theta * sign(w)` when `|w| >= theta`, otherwise zero.
#[inline]
pub fn soft_threshold(w: f64, theta: f64) -> f64 {
    debug_assert!(theta >= 0.0);
    if w.abs() >= theta {
        w - theta * w.signum()
    } else {
        0.0
    }
}

pub fn soft_threshold_vec(v: &mut DVector<f64>, theta: f64) {
    v.iter_mut().for_each(|w| *w = soft_threshold(*w, theta));
}

/// `O x + a - y`.
pub fn residual(model: &StackedModel, y: &DVector<f64>, x: &DVector<f64>, a: &DVector<f64>) -> DVector<f64> {
    let mut r = model.omega() * x;
    r += a;
    r -= y;
    r
}

pub fn lasso_objective(model: &StackedModel, y: &DVector<f64>, x: &DVector<f64>, a: &DVector<f64>, lambda: f64) -> f64 {
    let r = residual(model, y, x, a);
    0.5 * r.norm_squared() + lambda * a.lp_norm(1)
}

/// Largest eigenvalue of `(O I)^T (O I)` by power iteration, i.e. the
/// Lipschitz constant of the smooth part's gradient.
pub fn lipschitz_constant(model: &StackedModel) -> f64 {
    const TOL: f64 = 1e-9;
    const MAX_ITERS: usize = 10_000;

    let (n, m) = (model.n(), model.rows());
    // deterministic start with no special alignment
    let mut x = DVector::from_fn(n, |i, _| 1.0 + 0.1 * ((i * 7 + 3) % 11) as f64);
    let mut a = DVector::from_fn(m, |i, _| 1.0 + 0.1 * ((i * 5 + 1) % 13) as f64);
    let norm = (x.norm_squared() + a.norm_squared()).sqrt();
    x /= norm;
    a /= norm;
    let mut estimate = 0.0;
    for _ in 0..MAX_ITERS {
        let u = model.omega() * &x + &a;
        let gx = model.omega().tr_mul(&u);
        let ga = u;
        let norm = (gx.norm_squared() + ga.norm_squared()).sqrt();
        if norm == 0.0 {
            return 1.0;
        }
        x = gx / norm;
        a = ga / norm;
        let converged = (norm - estimate).abs() <= TOL * norm;
        estimate = norm;
        if converged {
            break;
        }
    }
    estimate
}

/// One proximal-gradient step with step size `nu`: gradient step on both
/// blocks, soft thresholding with `nu * lambda` on the attack block only.
pub fn ista_step(
    model: &StackedModel,
    y: &DVector<f64>,
    x: &DVector<f64>,
    a: &DVector<f64>,
    nu: f64,
    lambda: f64,
) -> (DVector<f64>, DVector<f64>) {
    let r = residual(model, y, x, a);
    let x_next = x - model.omega().tr_mul(&r) * nu;
    let mut a_next = a - &r * nu;
    soft_threshold_vec(&mut a_next, nu * lambda);
    (x_next, a_next)
}

/// `scale * ||(O I)^T y||_inf`, a data-scaled reference level for the
/// penalty. It overestimates the level at which the attack estimate vanishes
/// (`||(I - O O^+) y||_inf`) when `||O^T y||_inf` dominates, so large windows
/// need small scales.
pub fn default_lambda(model: &StackedModel, y: &DVector<f64>, scale: f64) -> Result<f64> {
    model.check_measurements(y)?;
    if !(scale > 0.0 && scale < 1.0) {
        return Err(SseError::InvalidConfig(format!("lambda scale {scale} must lie in (0, 1)")));
    }
    let critical = inf_norm(&model.omega().tr_mul(y)).max(inf_norm(y));
    Ok(scale * critical)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub lambda: f64,
    /// Gradient step; `None` resolves to `1 / L`.
    pub step_size: Option<f64>,
    pub max_iters: usize,
    /// Stop when `||delta||_2 <= tolerance * (1 + ||iterate||_2)`. For FISTA,
    /// `delta` is the larger of the iterate change and the proximal step from
    /// the extrapolated point.
    pub tolerance: f64,
    /// Magnitude above which an attack entry counts as nonzero; `None` resolves
    /// to `max(10 * lambda * nu, 1e-8 * ||y||_inf)`.
    pub support_threshold: Option<f64>,
    /// FISTA momentum instead of plain ISTA.
    pub acceleration: bool,
    pub record_trace: bool,
}

impl SolverConfig {
    pub fn new(lambda: f64) -> Self {
        Self {
            lambda,
            step_size: None,
            max_iters: 100_000,
            tolerance: 1e-10,
            support_threshold: None,
            acceleration: true,
            record_trace: false,
        }
    }

    pub fn ista(mut self) -> Self {
        self.acceleration = false;
        self
    }

    pub fn with_trace(mut self) -> Self {
        self.record_trace = true;
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(SseError::InvalidConfig(format!("lambda must be nonnegative, got {}", self.lambda)));
        }
        if let Some(nu) = self.step_size {
            if !(nu > 0.0 && nu.is_finite()) {
                return Err(SseError::InvalidConfig(format!("step size must be positive, got {nu}")));
            }
        }
        if self.max_iters == 0 || !(self.tolerance > 0.0) {
            return Err(SseError::InvalidConfig("need max_iters >= 1 and tolerance > 0".into()));
        }
        Ok(())
    }

    pub fn resolve_step(&self, model: &StackedModel) -> f64 {
        self.step_size.unwrap_or_else(|| 1.0 / lipschitz_constant(model))
    }
}

/// One row of the optional solver trace.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRow {
    pub iter: usize,
    pub objective: f64,
    pub delta: f64,
    pub support_size: usize,
}

/// Result of a batch decode.
#[derive(Debug, Clone, PartialEq)]
pub struct SseEstimate {
    pub x_hat: DVector<f64>,
    pub a_hat: DVector<f64>,
    /// Stacked row indices with `|a_hat| > support_threshold`.
    pub support_hat: Vec<usize>,
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    pub step_size: f64,
    pub support_threshold: f64,
    pub solve_time_seconds: f64,
    pub trace: Vec<TraceRow>,
}

impl SseEstimate {
    /// Sensors owning at least one detected attack entry.
    pub fn attacked_sensors(&self, model: &StackedModel) -> Vec<usize> {
        model.sensors_of_rows(&self.support_hat)
    }
}

pub fn support_of(a: &DVector<f64>, threshold: f64) -> Vec<usize> {
    a.iter().enumerate().filter(|(_, v)| v.abs() > threshold).map(|(i, _)| i).collect()
}

fn joint_norm(x: &DVector<f64>, a: &DVector<f64>) -> f64 {
    (x.norm_squared() + a.norm_squared()).sqrt()
}

/// ISTA (or FISTA) from `(0, 0)`.
pub fn solve_lasso(model: &StackedModel, y: &DVector<f64>, config: &SolverConfig) -> Result<SseEstimate> {
    model.check_measurements(y)?;
    config.validate()?;
    if !crate::model::is_observable(model) {
        log::warn!("stacked model is not observable; the state estimate is not unique");
    }
    let start = Instant::now();
    let nu = config.resolve_step(model);
    let lambda = config.lambda;
    let threshold = config.support_threshold.unwrap_or_else(|| (10.0 * lambda * nu).max(1e-8 * inf_norm(y)));

    let (n, m) = (model.n(), model.rows());
    let mut x = DVector::zeros(n);
    let mut a = DVector::zeros(m);
    // extrapolated point (FISTA); equals (x, a) for ISTA
    let mut xe = x.clone();
    let mut ae = a.clone();
    let mut t = 1.0_f64;
    let mut trace = Vec::new();
    let mut converged = false;
    let mut iterations = 0;

    for iter in 1..=config.max_iters {
        iterations = iter;
        let (x_next, a_next) = ista_step(model, y, &xe, &ae, nu, lambda);
        let dx = &x_next - &x;
        let da = &a_next - &a;
        // With momentum the iterate change can stall before the prox step
        // from the extrapolated point does; require both to be small.
        let delta = joint_norm(&dx, &da).max(joint_norm(&(&x_next - &xe), &(&a_next - &ae)));
        if !delta.is_finite() {
            return Err(SseError::Divergence { iteration: iter });
        }
        if config.acceleration {
            let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
            let beta = (t - 1.0) / t_next;
            xe = &x_next + dx * beta;
            ae = &a_next + da * beta;
            t = t_next;
        } else {
            xe.copy_from(&x_next);
            ae.copy_from(&a_next);
        }
        x = x_next;
        a = a_next;
        if config.record_trace {
            trace.push(TraceRow {
                iter,
                objective: lasso_objective(model, y, &x, &a, lambda),
                delta,
                support_size: a.iter().filter(|v| v.abs() > threshold).count(),
            });
        }
        if delta <= config.tolerance * (1.0 + joint_norm(&x, &a)) {
            converged = true;
            break;
        }
    }

    let solve_time_seconds = start.elapsed().as_secs_f64();
    Ok(SseEstimate {
        objective: lasso_objective(model, y, &x, &a, lambda),
        support_hat: support_of(&a, threshold),
        x_hat: x,
        a_hat: a,
        iterations,
        converged,
        step_size: nu,
        support_threshold: threshold,
        solve_time_seconds,
        trace,
    })
}

/// Least-squares state from the rows outside `support_hat` (stacked indices).
pub fn refine_state(model: &StackedModel, y: &DVector<f64>, support_hat: &[usize]) -> Result<DVector<f64>> {
    model.check_measurements(y)?;
    if support_hat.iter().any(|&i| i >= model.rows()) {
        return Err(SseError::DimensionMismatch("support index outside the stacked measurement".into()));
    }
    let safe = linalg::complement(support_hat, model.rows());
    let o_safe = linalg::select_rows(model.omega(), &safe);
    linalg::least_squares(&o_safe, &linalg::select_entries(y, &safe))
        .map_err(|e| SseError::RankDeficient(format!("safe rows cannot recover the state: {e}")))
}

/// Keeps the `s` sensor blocks of `a` (each sensor's entries across the
/// window) with the largest Euclidean norm and zeroes the rest. Ties go to
/// the lower sensor index.
pub fn block_hard_project(a: &mut DVector<f64>, p: usize, tau: usize, s: usize) {
    if s >= p {
        return;
    }
    let block_norm = |j: usize| (0..tau).map(|t| a[t * p + j].powi(2)).sum::<f64>();
    let mut order: Vec<(usize, f64)> = (0..p).map(|j| (j, block_norm(j))).collect();
    order.sort_by(|(i, x), (j, y)| y.total_cmp(x).then(i.cmp(j)));
    for &(j, _) in &order[s..] {
        for t in 0..tau {
            a[t * p + j] = 0.0;
        }
    }
}

/// How the block-hard baselines update the attack estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockUpdate {
    /// Joint gradient step on `(x, a)` with step `1 / L`, then project `a`.
    #[default]
    Gradient,
    /// Gradient step on `x` alone with step `1 / sigma_max(O)^2`, then
    /// `a = P_s(y - O x)`: the attack is re-fitted to the residual.
    Residual,
}

/// `x` step of [`BlockUpdate::Residual`]: `1 / sigma_max(O)^2`, read off `L = sigma_max(O)^2 + 1`.
pub fn residual_step(model: &StackedModel) -> f64 {
    1.0 / (lipschitz_constant(model) - 1.0).max(f64::EPSILON)
}

/// Block-hard-thresholding projected gradient onto `R^n x S_s` (no event
/// triggering), run to convergence. This is the batch comparison baseline;
/// it needs the attack cardinality `s`. `config.lambda` is ignored.
pub fn solve_block_hard(model: &StackedModel, y: &DVector<f64>, s: usize, config: &SolverConfig) -> Result<SseEstimate> {
    solve_block_hard_with(model, y, s, config, BlockUpdate::Gradient)
}

pub fn solve_block_hard_with(
    model: &StackedModel,
    y: &DVector<f64>,
    s: usize,
    config: &SolverConfig,
    update: BlockUpdate,
) -> Result<SseEstimate> {
    model.check_measurements(y)?;
    config.validate()?;
    let start = Instant::now();
    let nu = match (config.step_size, update) {
        (Some(nu), _) => nu,
        (None, BlockUpdate::Gradient) => lipschitz_constant(model).recip(),
        (None, BlockUpdate::Residual) => residual_step(model),
    };
    let (p, tau) = (model.p(), model.tau());
    let threshold = config.support_threshold.unwrap_or(0.0);

    let mut x = DVector::zeros(model.n());
    let mut a = DVector::zeros(model.rows());
    let mut trace = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    for iter in 1..=config.max_iters {
        iterations = iter;
        let r = residual(model, y, &x, &a);
        let x_next = &x - model.omega().tr_mul(&r) * nu;
        let mut a_next = match update {
            BlockUpdate::Gradient => &a - &r * nu,
            BlockUpdate::Residual => y - model.omega() * &x_next,
        };
        block_hard_project(&mut a_next, p, tau, s);
        let delta = joint_norm(&(&x_next - &x), &(&a_next - &a));
        if !delta.is_finite() {
            return Err(SseError::Divergence { iteration: iter });
        }
        x = x_next;
        a = a_next;
        if config.record_trace {
            trace.push(TraceRow {
                iter,
                objective: lasso_objective(model, y, &x, &a, 0.0),
                delta,
                support_size: a.iter().filter(|v| v.abs() > threshold).count(),
            });
        }
        if delta <= config.tolerance * (1.0 + joint_norm(&x, &a)) {
            converged = true;
            break;
        }
    }
    Ok(SseEstimate {
        objective: lasso_objective(model, y, &x, &a, 0.0),
        support_hat: support_of(&a, threshold),
        x_hat: x,
        a_hat: a,
        iterations,
        converged,
        step_size: nu,
        support_threshold: threshold,
        solve_time_seconds: start.elapsed().as_secs_f64(),
        trace,
    })
}

/// Writes a solver trace as CSV with columns `iter,objective,delta,support_size`.
pub fn write_trace_csv<W: Write>(trace: &[TraceRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in trace {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}
