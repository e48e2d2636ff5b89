//! Recursive estimation over a sliding window of `tau` measurements.
//!
//! Each time step runs a few proximal-gradient iterations of the window
//! problem and then propagates the state estimate through `A`, in the spirit
//! of a Luenberger observer. The soft variant thresholds the attack estimate
//! with `nu * lambda`; the block-hard variant keeps the `s` sensor blocks of
//! largest norm instead. The latter approximates the event-triggered
//! projected Luenberger baseline without its trigger rule: it projects at
//! every inner step.

use std::collections::VecDeque;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::model::{StackedModel, Trajectory};
use crate::solvers::{self, block_hard_project, default_lambda, lipschitz_constant, residual_step, soft_threshold_vec};
use crate::{Result, SseError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObserverVariant {
    Soft,
    BlockHard {
        s_assumed: usize,
    },
    /// Block-hard with the attack re-fitted to the residual at every inner
    /// step, `a = P_s(y - O x)`; `nu` then steps `x` alone.
    BlockResidual {
        s_assumed: usize,
    },
}

impl ObserverVariant {
    fn s_assumed(self) -> Option<usize> {
        match self {
            ObserverVariant::Soft => None,
            ObserverVariant::BlockHard { s_assumed } | ObserverVariant::BlockResidual { s_assumed } => Some(s_assumed),
        }
    }
}

/// What happens to the attack estimate when the window slides.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowShift {
    /// Keep the attack estimate as is: block `t` keeps estimating the attack
    /// at window position `t`. Suited to attacks that hold their value.
    #[default]
    Keep,
    /// Drop the oldest attack block and append a zero block for the new step.
    ShiftAndZero,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObserverConfig {
    pub tau: usize,
    pub lambda: f64,
    pub nu: f64,
    /// Proximal-gradient repetitions per time step.
    pub inner_steps: usize,
    pub variant: ObserverVariant,
    pub window_shift: WindowShift,
}

/// Scale passed to [`default_lambda`] by [`ObserverConfig::calibrated`].
pub const OBSERVER_LAMBDA_SCALE: f64 = 1e-4;

impl ObserverConfig {
    /// `nu = 1 / L` for the window model (`1 / sigma_max(O)^2` for
    /// [`ObserverVariant::BlockResidual`]) and `lambda` from the first full
    /// window of measurements, frozen afterwards. `inner_steps = 5 tau`.
    pub fn calibrated(model: &StackedModel, first_window: &DVector<f64>, variant: ObserverVariant) -> Result<Self> {
        let lambda = default_lambda(model, first_window, OBSERVER_LAMBDA_SCALE)?;
        Ok(Self {
            tau: model.tau(),
            lambda,
            nu: match variant {
                ObserverVariant::BlockResidual { .. } => residual_step(model),
                _ => 1.0 / lipschitz_constant(model),
            },
            inner_steps: 5 * model.tau(),
            variant,
            window_shift: WindowShift::default(),
        })
    }

    fn validate(&self, model: &StackedModel) -> Result<()> {
        if self.tau != model.tau() {
            return Err(SseError::InvalidConfig(format!("observer tau = {} but the model window is {}", self.tau, model.tau())));
        }
        if self.inner_steps == 0 || !(self.nu > 0.0) || !(self.lambda >= 0.0) {
            return Err(SseError::InvalidConfig("need inner_steps >= 1, nu > 0, lambda >= 0".into()));
        }
        if let Some(s_assumed) = self.variant.s_assumed() {
            if s_assumed > model.p() {
                return Err(SseError::InvalidConfig(format!("s_assumed = {s_assumed} exceeds p")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObserverState {
    /// Estimate of the first state of the next window.
    pub x_hat: DVector<f64>,
    /// Estimate of the stacked attack over the window, oldest step first.
    pub a_hat: DVector<f64>,
    /// Estimate of the first state of the current window, before
    /// propagation through `A`.
    pub x_window: DVector<f64>,
    pub window: VecDeque<DVector<f64>>,
    /// Index of the most recent measurement; `-1` before any.
    pub k: i64,
}

impl ObserverState {
    pub fn init(model: &StackedModel) -> Self {
        Self {
            x_hat: DVector::zeros(model.n()),
            a_hat: DVector::zeros(model.rows()),
            x_window: DVector::zeros(model.n()),
            window: VecDeque::with_capacity(model.tau()),
            k: -1,
        }
    }

    pub fn window_full(&self, tau: usize) -> bool {
        self.window.len() == tau
    }

    /// `(y(k - tau + 1); ...; y(k))` from the stored window.
    pub fn stacked_window(&self) -> DVector<f64> {
        let len = self.window.iter().map(|b| b.len()).sum();
        DVector::from_iterator(len, self.window.iter().flat_map(|b| b.iter().copied()))
    }
}

pub fn observer_init(model: &StackedModel, config: &ObserverConfig) -> Result<ObserverState> {
    config.validate(model)?;
    Ok(ObserverState::init(model))
}

/// Advances the observer by one measurement.
///
/// The window drops its oldest measurement block when full; the attack
/// estimate is carried over or shifted according to `config.window_shift`.
/// Once the window is full, runs `inner_steps` gradient-plus-thresholding
/// iterations and sets `x_hat = A x_window`.
pub fn observer_step(
    model: &StackedModel,
    mut state: ObserverState,
    y_new: &DVector<f64>,
    config: &ObserverConfig,
) -> Result<ObserverState> {
    let (p, tau) = (model.p(), model.tau());
    if y_new.len() != p {
        return Err(SseError::DimensionMismatch(format!("measurement has {} entries, p = {p}", y_new.len())));
    }
    if y_new.iter().any(|v| !v.is_finite()) {
        return Err(SseError::InvalidConfig("non-finite measurement".into()));
    }
    if state.window_full(tau) {
        state.window.pop_front();
        if config.window_shift == WindowShift::ShiftAndZero {
            let m = state.a_hat.len();
            state.a_hat.as_mut_slice().copy_within(p.., 0);
            state.a_hat.rows_mut(m - p, p).fill(0.0);
        }
    }
    state.window.push_back(y_new.clone());
    state.k += 1;
    if !state.window_full(tau) {
        return Ok(state);
    }

    let y = state.stacked_window();
    let nu = config.nu;
    let mut x = state.x_hat.clone();
    let mut a = std::mem::replace(&mut state.a_hat, DVector::zeros(0));
    for _ in 0..config.inner_steps {
        let r = solvers::residual(model, &y, &x, &a);
        x -= model.omega().tr_mul(&r) * nu;
        match config.variant {
            ObserverVariant::Soft => {
                a -= r * nu;
                soft_threshold_vec(&mut a, nu * config.lambda);
            }
            ObserverVariant::BlockHard { s_assumed } => {
                a -= r * nu;
                block_hard_project(&mut a, p, tau, s_assumed);
            }
            ObserverVariant::BlockResidual { s_assumed } => {
                a = &y - model.omega() * &x;
                block_hard_project(&mut a, p, tau, s_assumed);
            }
        }
    }
    if x.iter().chain(a.iter()).any(|v| !v.is_finite()) {
        return Err(SseError::Divergence { iteration: state.k.max(0) as usize });
    }
    state.x_hat = model.system().a() * &x;
    state.x_window = x;
    state.a_hat = a;
    Ok(state)
}

/// Owning wrapper around a model, configuration and running state.
#[derive(Debug, Clone)]
pub struct Observer {
    model: StackedModel,
    config: ObserverConfig,
    state: ObserverState,
}

/// Per-step output of [`Observer::run`].
#[derive(Debug, Clone, PartialEq)]
pub struct ObserverRecord {
    pub k: usize,
    /// Estimate of `x(k - tau + 1)`.
    pub x_hat: DVector<f64>,
    pub a_hat: DVector<f64>,
    /// `||x_hat - x(k - tau + 1)||_2 / ||x(k - tau + 1)||_2`.
    pub state_error: f64,
    pub support_error: usize,
    pub step_time_seconds: f64,
}

impl Observer {
    pub fn new(model: StackedModel, config: ObserverConfig) -> Result<Self> {
        let state = observer_init(&model, &config)?;
        Ok(Self { model, config, state })
    }

    /// Starts from a given estimate of the first window state.
    pub fn with_initial_state(mut self, x0: DVector<f64>) -> Result<Self> {
        if x0.len() != self.model.n() {
            return Err(SseError::DimensionMismatch("initial state has the wrong length".into()));
        }
        self.state.x_hat = x0;
        Ok(self)
    }

    pub fn state(&self) -> &ObserverState {
        &self.state
    }

    pub fn config(&self) -> &ObserverConfig {
        &self.config
    }

    pub fn model(&self) -> &StackedModel {
        &self.model
    }

    pub fn step(&mut self, y_new: &DVector<f64>) -> Result<()> {
        let state = std::mem::replace(&mut self.state, ObserverState::init(&self.model));
        self.state = observer_step(&self.model, state, y_new, &self.config)?;
        Ok(())
    }

    /// Feeds a whole trajectory, returning one record per step with a full
    /// window (`k >= tau - 1`).
    pub fn run(&mut self, trajectory: &Trajectory) -> Result<Vec<ObserverRecord>> {
        let tau = self.model.tau();
        if trajectory.horizon() < tau {
            return Err(SseError::InvalidConfig(format!("horizon {} shorter than tau = {tau}", trajectory.horizon())));
        }
        let mut records = Vec::with_capacity(trajectory.horizon() + 1 - tau);
        for (k, y) in trajectory.measurements.iter().enumerate() {
            let start = Instant::now();
            self.step(y)?;
            let step_time_seconds = start.elapsed().as_secs_f64();
            if k + 1 < tau {
                continue;
            }
            let first = k + 1 - tau;
            let x_true = &trajectory.states[first];
            let a_true = trajectory.stacked_attacks(first, tau);
            records.push(ObserverRecord {
                k,
                x_hat: self.state.x_window.clone(),
                a_hat: self.state.a_hat.clone(),
                state_error: relative_error(&self.state.x_window, x_true),
                support_error: support_error(&self.state.a_hat, &a_true),
                step_time_seconds,
            });
        }
        Ok(records)
    }
}

/// Runs a fresh observer (zero initialization) over `trajectory`.
pub fn run_observer(model: &StackedModel, trajectory: &Trajectory, config: &ObserverConfig) -> Result<Vec<ObserverRecord>> {
    Observer::new(model.clone(), config.clone())?.run(trajectory)
}

/// `||est - truth||_2 / ||truth||_2`; absolute error when `truth` is zero.
pub fn relative_error(est: &DVector<f64>, truth: &DVector<f64>) -> f64 {
    let err = (est - truth).norm();
    let scale = truth.norm();
    if scale > 0.0 {
        err / scale
    } else {
        err
    }
}

/// Number of entries whose zero/nonzero status differs.
pub fn support_error(a_hat: &DVector<f64>, a_true: &DVector<f64>) -> usize {
    a_hat.iter().zip(a_true.iter()).filter(|(e, t)| (**e != 0.0) != (**t != 0.0)).count()
}

/// Dense reference for one step of the observer on a full window; used to
/// cross-check [`observer_step`].
#[doc(hidden)]
pub fn dense_step_reference(
    omega: &DMatrix<f64>,
    a_matrix: &DMatrix<f64>,
    y: &DVector<f64>,
    x: &DVector<f64>,
    a: &DVector<f64>,
    nu: f64,
    lambda: f64,
) -> (DVector<f64>, DVector<f64>) {
    let (m, n) = omega.shape();
    let mut big = DMatrix::zeros(m, n + m);
    big.columns_mut(0, n).copy_from(omega);
    big.columns_mut(n, m).fill_with_identity();
    let mut z = DVector::zeros(n + m);
    z.rows_mut(0, n).copy_from(x);
    z.rows_mut(n, m).copy_from(a);
    let y_hat = &big * &z;
    let z_plus = &z - big.transpose() * (y_hat - y) * nu;
    let x_plus = z_plus.rows(0, n).into_owned();
    let a_next = z_plus.rows(n, m).map(|w| if w.abs() >= nu * lambda { w - nu * lambda * w.signum() } else { 0.0 });
    (a_matrix * x_plus, a_next)
}
