//! Plant model, stacked measurement model, simulation and random instances.

use std::fs;
use std::path::Path;

use itertools::Itertools;
use nalgebra::{DMatrix, DVector};
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::linalg::{self, binomial};
use crate::{Result, SseError};

/// Largest number of sensor subsets any exhaustive routine will enumerate.
pub const SUBSET_CAP: u128 = 1_000_000;

/// Discrete-time zero-input plant `x(k+1) = A x(k)`, `y(k) = C x(k) + a(k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LtiSystem {
    a: DMatrix<f64>,
    c: DMatrix<f64>,
}

impl LtiSystem {
    pub fn new(a: DMatrix<f64>, c: DMatrix<f64>) -> Result<Self> {
        if a.nrows() == 0 || c.nrows() == 0 {
            return Err(SseError::InvalidSystem("need n >= 1 and p >= 1".into()));
        }
        if !a.is_square() {
            return Err(SseError::InvalidSystem(format!("A is {}x{}, not square", a.nrows(), a.ncols())));
        }
        if c.ncols() != a.nrows() {
            return Err(SseError::InvalidSystem(format!("C has {} columns but A is {}x{}", c.ncols(), a.nrows(), a.ncols())));
        }
        Ok(Self { a, c })
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn c(&self) -> &DMatrix<f64> {
        &self.c
    }

    /// State dimension.
    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    /// Sensor count.
    pub fn p(&self) -> usize {
        self.c.nrows()
    }

    /// Same plant with the sensors in `sensors` removed.
    pub fn without_sensors(&self, sensors: &[usize]) -> Result<Self> {
        let keep = linalg::complement(sensors, self.p());
        if keep.is_empty() {
            return Err(SseError::InvalidSystem("removing every sensor".into()));
        }
        Self::new(self.a.clone(), linalg::select_rows(&self.c, &keep))
    }
}

/// The stacked map `O = (C; CA; ...; CA^(tau-1))` of a window of `tau` steps.
///
/// Row `t * p + j` belongs to sensor `j` at window step `t`. The identity block
/// that maps the stacked attack into the measurements is implicit.
#[derive(Debug, Clone, PartialEq)]
pub struct StackedModel {
    omega: DMatrix<f64>,
    tau: usize,
    system: LtiSystem,
}

impl StackedModel {
    pub fn omega(&self) -> &DMatrix<f64> {
        &self.omega
    }

    pub fn tau(&self) -> usize {
        self.tau
    }

    pub fn system(&self) -> &LtiSystem {
        &self.system
    }

    pub fn n(&self) -> usize {
        self.omega.ncols()
    }

    pub fn p(&self) -> usize {
        self.system.p()
    }

    /// Number of stacked measurements, `p * tau`.
    pub fn rows(&self) -> usize {
        self.omega.nrows()
    }

    /// Stacked row indices of the given sensors.
    pub fn sensor_rows(&self, sensors: &[usize]) -> Vec<usize> {
        linalg::sensor_rows(sensors, self.p(), self.tau)
    }

    /// Sensors (0-based) that own at least one of `rows`.
    pub fn sensors_of_rows(&self, rows: &[usize]) -> Vec<usize> {
        rows.iter().map(|r| r % self.p()).sorted_unstable().dedup().collect()
    }

    pub(crate) fn check_measurements(&self, y: &DVector<f64>) -> Result<()> {
        if y.len() != self.rows() {
            return Err(SseError::DimensionMismatch(format!(
                "stacked measurement has {} entries, model expects {}",
                y.len(),
                self.rows()
            )));
        }
        Ok(())
    }
}

pub fn build_stacked_model(sys: &LtiSystem, tau: usize) -> Result<StackedModel> {
    if tau == 0 {
        return Err(SseError::InvalidConfig("window length tau must be >= 1".into()));
    }
    let (n, p) = (sys.n(), sys.p());
    let mut omega = DMatrix::zeros(p * tau, n);
    let mut block = sys.c.clone();
    for t in 0..tau {
        omega.view_mut((t * p, 0), (p, n)).copy_from(&block);
        if t + 1 < tau {
            block = &block * &sys.a;
        }
    }
    Ok(StackedModel { omega, tau, system: sys.clone() })
}

/// `rank(O) == n` at the numerical-rank tolerance of [`linalg::numerical_rank`].
pub fn is_observable(model: &StackedModel) -> bool {
    linalg::numerical_rank(&model.omega) == model.n()
}

/// Whether the plant stays observable over a `tau` window after removing any
/// `q` sensors. Exhaustive over all subsets, refusing more than [`SUBSET_CAP`].
pub fn is_sparse_observable(sys: &LtiSystem, tau: usize, q: usize) -> Result<bool> {
    let p = sys.p();
    if q >= p {
        return Err(SseError::InvalidConfig(format!("q = {q} must be below p = {p}")));
    }
    let subsets = binomial(p, q);
    if subsets > SUBSET_CAP {
        return Err(SseError::CombinatorialCap { subsets, cap: SUBSET_CAP });
    }
    let full = build_stacked_model(sys, tau)?;
    for removed in (0..p).combinations(q) {
        let keep = full.sensor_rows(&linalg::complement(&removed, p));
        if linalg::numerical_rank(&linalg::select_rows(&full.omega, &keep)) < sys.n() {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Attack and noise description over a finite horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct AttackScenario {
    /// Attacked sensors at step 0, sorted. This is the whole-horizon support
    /// unless `time_varying` is set.
    pub support: Vec<usize>,
    /// `p x horizon` signed attack values, column `k` is `a(k)`. Entries of
    /// unattacked sensors are exactly zero.
    pub magnitudes: DMatrix<f64>,
    pub time_varying: bool,
    /// Infinity-norm bound on the measurement noise `eta(k)`.
    pub noise_bound: f64,
}

impl AttackScenario {
    /// No attack, no noise.
    pub fn attack_free(p: usize, horizon: usize) -> Self {
        Self { support: Vec::new(), magnitudes: DMatrix::zeros(p, horizon), time_varying: false, noise_bound: 0.0 }
    }

    /// Constant attack `value` on every sensor of `support` at every step.
    pub fn constant(p: usize, horizon: usize, support: &[usize], value: f64) -> Self {
        let mut magnitudes = DMatrix::zeros(p, horizon);
        for &j in support {
            magnitudes.row_mut(j).fill(value);
        }
        let support = support.iter().copied().sorted_unstable().dedup().collect();
        Self { support, magnitudes, time_varying: false, noise_bound: 0.0 }
    }

    pub fn with_noise(mut self, noise_bound: f64) -> Self {
        self.noise_bound = noise_bound;
        self
    }

    pub fn p(&self) -> usize {
        self.magnitudes.nrows()
    }

    pub fn horizon(&self) -> usize {
        self.magnitudes.ncols()
    }

    /// `a(k)`.
    pub fn attack(&self, k: usize) -> DVector<f64> {
        self.magnitudes.column(k).into_owned()
    }

    pub fn support_at(&self, k: usize) -> Vec<usize> {
        (0..self.p()).filter(|&j| self.magnitudes[(j, k)] != 0.0).collect()
    }

    /// `(a(start); ...; a(start + tau - 1))`.
    pub fn stacked_attack(&self, start: usize, tau: usize) -> DVector<f64> {
        let p = self.p();
        DVector::from_fn(p * tau, |r, _| self.magnitudes[(r % p, start + r / p)])
    }
}

/// Noise-free state trajectory together with the attacked, noisy measurements.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub states: Vec<DVector<f64>>,
    pub measurements: Vec<DVector<f64>>,
    pub attacks: Vec<DVector<f64>>,
}

impl Trajectory {
    pub fn horizon(&self) -> usize {
        self.states.len()
    }

    /// `(y(start); ...; y(start + tau - 1))`.
    pub fn stacked_measurements(&self, start: usize, tau: usize) -> DVector<f64> {
        stack(&self.measurements[start..start + tau])
    }

    pub fn stacked_attacks(&self, start: usize, tau: usize) -> DVector<f64> {
        stack(&self.attacks[start..start + tau])
    }
}

pub(crate) fn stack(blocks: &[DVector<f64>]) -> DVector<f64> {
    DVector::from_iterator(blocks.iter().map(|b| b.len()).sum(), blocks.iter().flat_map(|b| b.iter().copied()))
}

/// Simulates `horizon` steps from `x0`. The seed drives the measurement noise
/// only, so a scenario with zero noise bound ignores it.
pub fn simulate(sys: &LtiSystem, x0: &DVector<f64>, scenario: &AttackScenario, horizon: usize, seed: u64) -> Result<Trajectory> {
    if x0.len() != sys.n() {
        return Err(SseError::DimensionMismatch(format!("x0 has {} entries, n = {}", x0.len(), sys.n())));
    }
    if scenario.p() != sys.p() {
        return Err(SseError::DimensionMismatch(format!("scenario has {} sensors, p = {}", scenario.p(), sys.p())));
    }
    if horizon == 0 || horizon > scenario.horizon() {
        return Err(SseError::InvalidConfig(format!("horizon {horizon} must be in 1..={}", scenario.horizon())));
    }
    if !(scenario.noise_bound >= 0.0) {
        return Err(SseError::InvalidConfig("noise bound must be nonnegative".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(NOISE_STREAM);
    let bound = scenario.noise_bound;

    let mut states = Vec::with_capacity(horizon);
    let mut measurements = Vec::with_capacity(horizon);
    let mut attacks = Vec::with_capacity(horizon);
    let mut x = x0.clone();
    for k in 0..horizon {
        let a = scenario.attack(k);
        let mut y = &sys.c * &x + &a;
        if bound > 0.0 {
            for v in y.iter_mut() {
                *v += rng.random_range(-bound..=bound);
            }
        }
        let next = &sys.a * &x;
        states.push(std::mem::replace(&mut x, next));
        measurements.push(y);
        attacks.push(a);
    }
    Ok(Trajectory { states, measurements, attacks })
}

const INSTANCE_STREAM: u64 = 0;
const NOISE_STREAM: u64 = 1;

/// Knobs of the random instance generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct InstanceConfig {
    /// Steps of attack data to draw; defaults to `tau`.
    pub horizon: Option<usize>,
    /// Magnitude range of the initial state components.
    pub state_range: (f64, f64),
    /// Magnitude range of the attack values.
    pub attack_range: (f64, f64),
    pub noise_bound: f64,
    /// Redraw the attacked sensor set at every step.
    pub time_varying: bool,
    /// Draw a fresh attack value for every step instead of one per sensor.
    pub redraw_values: bool,
}

impl Default for InstanceConfig {
    fn default() -> Self {
        Self {
            horizon: None,
            state_range: (2.0, 3.0),
            attack_range: (4.0, 5.0),
            noise_bound: 0.0,
            time_varying: false,
            redraw_values: false,
        }
    }
}

/// A generated problem: plant, initial state, attack scenario and the seeds
/// that reproduce it.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub system: LtiSystem,
    pub x0: DVector<f64>,
    pub scenario: AttackScenario,
    pub tau: usize,
    pub seed: u64,
}

fn signed_uniform(rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)) -> f64 {
    let m = if lo == hi { lo } else { rng.random_range(lo..=hi) };
    if rng.random::<bool>() {
        m
    } else {
        -m
    }
}

/// Random plant with i.i.d. standard normal `A` and `C`, `A` rescaled to unit
/// spectral radius, random-sign initial state and attack values.
pub fn generate_random_instance(
    n: usize,
    p: usize,
    s: usize,
    tau: usize,
    config: &InstanceConfig,
    seed: u64,
) -> Result<Instance> {
    if n == 0 || p == 0 {
        return Err(SseError::InvalidConfig("need n >= 1 and p >= 1".into()));
    }
    if s > p {
        return Err(SseError::InvalidConfig(format!("s = {s} exceeds p = {p}")));
    }
    if tau == 0 || tau > n {
        return Err(SseError::InvalidConfig(format!("tau = {tau} must be in 1..={n}")));
    }
    let horizon = config.horizon.unwrap_or(tau);
    if horizon < tau {
        return Err(SseError::InvalidConfig(format!("horizon {horizon} shorter than tau = {tau}")));
    }
    for (name, (lo, hi)) in [("state_range", config.state_range), ("attack_range", config.attack_range)] {
        if !(0.0 <= lo && lo <= hi && hi.is_finite()) {
            return Err(SseError::InvalidConfig(format!("{name} ({lo}, {hi}) is not a valid magnitude range")));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(INSTANCE_STREAM);

    let mut a = DMatrix::from_fn(n, n, |_, _| 0.0);
    let mut c = DMatrix::from_fn(p, n, |_, _| 0.0);
    for v in a.iter_mut().chain(c.iter_mut()) {
        *v = rng.sample(StandardNormal);
    }
    let radius = linalg::spectral_radius(&a);
    if radius == 0.0 {
        return Err(SseError::InvalidSystem("generated A is nilpotent".into()));
    }
    a /= radius;
    let system = LtiSystem::new(a, c)?;

    let x0 = DVector::from_fn(n, |_, _| signed_uniform(&mut rng, config.state_range));

    let draw_support = |rng: &mut ChaCha8Rng| -> Vec<usize> { index::sample(rng, p, s).into_iter().sorted_unstable().collect() };
    let support = draw_support(&mut rng);
    let per_sensor: Vec<f64> = (0..p).map(|_| signed_uniform(&mut rng, config.attack_range)).collect();

    let mut magnitudes = DMatrix::zeros(p, horizon);
    for k in 0..horizon {
        let step_support = if config.time_varying && k > 0 { draw_support(&mut rng) } else { support.clone() };
        for j in step_support {
            magnitudes[(j, k)] = if config.redraw_values { signed_uniform(&mut rng, config.attack_range) } else { per_sensor[j] };
        }
    }

    let scenario = AttackScenario { support, magnitudes, time_varying: config.time_varying, noise_bound: config.noise_bound };
    Ok(Instance { system, x0, scenario, tau, seed })
}

impl Instance {
    pub fn n(&self) -> usize {
        self.system.n()
    }

    pub fn p(&self) -> usize {
        self.system.p()
    }

    pub fn horizon(&self) -> usize {
        self.scenario.horizon()
    }

    pub fn stacked_model(&self) -> Result<StackedModel> {
        build_stacked_model(&self.system, self.tau)
    }

    /// Simulates the full scenario horizon with the instance seed.
    pub fn trajectory(&self) -> Result<Trajectory> {
        simulate(&self.system, &self.x0, &self.scenario, self.horizon(), self.seed)
    }

    /// First window: stacked model, stacked measurements, true `x(0)` and the
    /// true stacked attack.
    pub fn first_window(&self) -> Result<(StackedModel, DVector<f64>, DVector<f64>)> {
        let model = self.stacked_model()?;
        let traj = simulate(&self.system, &self.x0, &self.scenario, self.tau, self.seed)?;
        Ok((model, traj.stacked_measurements(0, self.tau), traj.stacked_attacks(0, self.tau)))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&InstanceDocument::from(self))?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str::<InstanceDocument>(text)?.try_into()
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }
}

pub const INSTANCE_FORMAT: &str = "lasso-sse-instance";
pub const INSTANCE_VERSION: u32 = 1;

/// On-disk layout of an [`Instance`]; see `schemas/instance.schema.json`.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceDocument {
    format: String,
    version: u32,
    n: usize,
    p: usize,
    tau: usize,
    horizon: usize,
    /// Row-major `n x n`.
    a: Vec<f64>,
    /// Row-major `p x n`.
    c: Vec<f64>,
    x0: Vec<f64>,
    support: Vec<usize>,
    /// Row-major `horizon x p`: row `k` is `a(k)`.
    magnitudes: Vec<f64>,
    time_varying: bool,
    noise_bound: f64,
    seed: u64,
}

fn row_major(m: &DMatrix<f64>) -> Vec<f64> {
    m.transpose().as_slice().to_vec()
}

impl From<&Instance> for InstanceDocument {
    fn from(inst: &Instance) -> Self {
        Self {
            format: INSTANCE_FORMAT.into(),
            version: INSTANCE_VERSION,
            n: inst.n(),
            p: inst.p(),
            tau: inst.tau,
            horizon: inst.horizon(),
            a: row_major(inst.system.a()),
            c: row_major(inst.system.c()),
            x0: inst.x0.as_slice().to_vec(),
            support: inst.scenario.support.clone(),
            magnitudes: inst.scenario.magnitudes.as_slice().to_vec(),
            time_varying: inst.scenario.time_varying,
            noise_bound: inst.scenario.noise_bound,
            seed: inst.seed,
        }
    }
}

impl TryFrom<InstanceDocument> for Instance {
    type Error = SseError;

    fn try_from(doc: InstanceDocument) -> Result<Self> {
        if doc.format != INSTANCE_FORMAT || doc.version != INSTANCE_VERSION {
            return Err(SseError::InvalidConfig(format!("unsupported instance format {} v{}", doc.format, doc.version)));
        }
        let check = |name: &str, got: usize, want: usize| {
            if got == want {
                Ok(())
            } else {
                Err(SseError::DimensionMismatch(format!("{name} has {got} entries, expected {want}")))
            }
        };
        check("a", doc.a.len(), doc.n * doc.n)?;
        check("c", doc.c.len(), doc.p * doc.n)?;
        check("x0", doc.x0.len(), doc.n)?;
        check("magnitudes", doc.magnitudes.len(), doc.p * doc.horizon)?;
        if doc.support.iter().any(|&j| j >= doc.p) {
            return Err(SseError::InvalidConfig("support index out of range".into()));
        }
        let system =
            LtiSystem::new(DMatrix::from_row_slice(doc.n, doc.n, &doc.a), DMatrix::from_row_slice(doc.p, doc.n, &doc.c))?;
        let scenario = AttackScenario {
            support: doc.support,
            magnitudes: DMatrix::from_vec(doc.p, doc.horizon, doc.magnitudes),
            time_varying: doc.time_varying,
            noise_bound: doc.noise_bound,
        };
        Ok(Instance { system, x0: DVector::from_vec(doc.x0), scenario, tau: doc.tau, seed: doc.seed })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn sys(a: &[f64], c: &[f64], n: usize, p: usize) -> LtiSystem {
        LtiSystem::new(DMatrix::from_row_slice(n, n, a), DMatrix::from_row_slice(p, n, c)).unwrap()
    }

    #[test]
    fn rejects_bad_dimensions() {
        assert!(LtiSystem::new(DMatrix::zeros(2, 3), DMatrix::zeros(1, 3)).is_err());
        assert!(LtiSystem::new(DMatrix::zeros(2, 2), DMatrix::zeros(1, 3)).is_err());
        assert!(LtiSystem::new(DMatrix::zeros(0, 0), DMatrix::zeros(1, 0)).is_err());
    }

    #[test]
    fn stacked_model_identity_plant() {
        let s = sys(&[1.0, 0.0, 0.0, 1.0], &[1.0, 0.0, 0.0, 1.0], 2, 2);
        let m = build_stacked_model(&s, 2).unwrap();
        let expected = DMatrix::from_row_slice(4, 2, &[1.0, 0.0, 0.0, 1.0, 1.0, 0.0, 0.0, 1.0]);
        assert_eq!(m.omega(), &expected);
        assert!(build_stacked_model(&s, 0).is_err());
    }

    #[test]
    fn stacked_model_swap_plant() {
        let s = sys(&[0.0, 1.0, 1.0, 0.0], &[1.0, 0.0, 0.0, 1.0], 2, 2);
        let m = build_stacked_model(&s, 2).unwrap();
        let expected = DMatrix::from_row_slice(4, 2, &[1.0, 0.0, 0.0, 1.0, 0.0, 1.0, 1.0, 0.0]);
        assert_eq!(m.omega(), &expected);
    }

    #[test]
    fn observability_examples() {
        let any_a = [0.3, -1.2, 2.0, 0.7];
        let full = sys(&any_a, &[1.0, 0.0, 0.0, 1.0], 2, 2);
        assert!(is_observable(&build_stacked_model(&full, 1).unwrap()));
        let blind = sys(&any_a, &[0.0, 0.0], 2, 1);
        assert!(!is_observable(&build_stacked_model(&blind, 2).unwrap()));
        // rows (1,0) and (1,0): rank 1
        let static_plant = sys(&[1.0, 0.0, 0.0, 1.0], &[1.0, 0.0], 2, 1);
        assert!(!is_observable(&build_stacked_model(&static_plant, 2).unwrap()));
    }

    #[test]
    fn three_equivalent_sensors_survive_two_removals() {
        let s = sys(&[1.0], &[1.0, 1.0, 1.0], 1, 3);
        assert!(is_sparse_observable(&s, 1, 2).unwrap());
        assert!(is_sparse_observable(&s, 1, 3).is_err());
    }

    #[test]
    fn sparse_observability_cap() {
        let s = LtiSystem::new(DMatrix::identity(1, 1), DMatrix::from_element(60, 1, 1.0)).unwrap();
        assert!(matches!(is_sparse_observable(&s, 1, 10), Err(SseError::CombinatorialCap { .. })));
    }

    #[test]
    fn attack_free_simulation_matches_powers() {
        let s = sys(&[0.9, 0.2, -0.1, 0.8], &[1.0, 0.5], 2, 1);
        let x0 = DVector::from_vec(vec![1.0, -2.0]);
        let traj = simulate(&s, &x0, &AttackScenario::attack_free(1, 6), 6, 3).unwrap();
        let mut ak = DMatrix::identity(2, 2);
        for k in 0..6 {
            let want = s.c() * &ak * &x0;
            assert_relative_eq!(traj.measurements[k][0], want[0], epsilon = 1e-12);
            ak = &ak * s.a();
        }
    }

    #[test]
    fn constant_attack_offsets_sensor() {
        let s = sys(&[0.5, 1.0, 0.0, 0.5], &[1.0, 0.0, 0.0, 1.0], 2, 2);
        let x0 = DVector::from_vec(vec![1.0, 1.0]);
        let traj = simulate(&s, &x0, &AttackScenario::constant(2, 4, &[0], 5.0), 4, 0).unwrap();
        for k in 0..4 {
            assert_eq!(traj.measurements[k][0] - traj.states[k][0], 5.0);
            assert_eq!(traj.measurements[k][1], traj.states[k][1]);
            assert_eq!(traj.attacks[k][1], 0.0);
        }
    }

    #[test]
    fn noise_respects_bound_and_seed() {
        let inst = generate_random_instance(
            3,
            5,
            1,
            2,
            &InstanceConfig { noise_bound: 1e-3, horizon: Some(20), ..Default::default() },
            7,
        )
        .unwrap();
        let t1 = inst.trajectory().unwrap();
        let t2 = inst.trajectory().unwrap();
        assert_eq!(t1, t2);
        for k in 0..20 {
            let clean = inst.system.c() * &t1.states[k] + &t1.attacks[k];
            assert!(linalg::inf_norm(&(&t1.measurements[k] - clean)) <= 1e-3);
        }
    }

    #[test]
    fn generated_instance_contract() {
        let cfg = InstanceConfig { horizon: Some(8), ..Default::default() };
        let inst = generate_random_instance(6, 9, 3, 4, &cfg, 11).unwrap();
        assert!((linalg::spectral_radius(inst.system.a()) - 1.0).abs() < 1e-9);
        assert!(inst.x0.iter().all(|v| (2.0..=3.0).contains(&v.abs())));
        assert_eq!(inst.scenario.support.len(), 3);
        for k in 0..8 {
            assert_eq!(inst.scenario.support_at(k), inst.scenario.support);
            for j in 0..9 {
                let v = inst.scenario.magnitudes[(j, k)];
                if inst.scenario.support.contains(&j) {
                    assert!((4.0..=5.0).contains(&v.abs()));
                } else {
                    assert_eq!(v, 0.0);
                }
            }
        }
        assert_eq!(inst, generate_random_instance(6, 9, 3, 4, &cfg, 11).unwrap());
        assert_ne!(inst, generate_random_instance(6, 9, 3, 4, &cfg, 12).unwrap());
    }

    #[test]
    fn time_varying_support_keeps_cardinality() {
        let cfg = InstanceConfig { horizon: Some(30), time_varying: true, redraw_values: true, ..Default::default() };
        let inst = generate_random_instance(4, 8, 2, 2, &cfg, 5).unwrap();
        let distinct: std::collections::BTreeSet<_> = (0..30).map(|k| inst.scenario.support_at(k)).collect();
        assert!(distinct.len() > 1);
        assert!((0..30).all(|k| inst.scenario.support_at(k).len() == 2));
    }

    #[test]
    fn generator_rejects_bad_arguments() {
        let cfg = InstanceConfig::default();
        assert!(generate_random_instance(3, 2, 3, 1, &cfg, 0).is_err());
        assert!(generate_random_instance(3, 4, 1, 4, &cfg, 0).is_err());
        assert!(generate_random_instance(3, 4, 1, 0, &cfg, 0).is_err());
    }

    #[test]
    fn stacked_attack_is_time_major() {
        let mut sc = AttackScenario::attack_free(2, 3);
        sc.magnitudes[(1, 0)] = 1.0;
        sc.magnitudes[(0, 2)] = 2.0;
        assert_eq!(sc.stacked_attack(0, 3).as_slice(), &[0.0, 1.0, 0.0, 0.0, 2.0, 0.0]);
        assert_eq!(sc.stacked_attack(1, 2).as_slice(), &[0.0, 0.0, 2.0, 0.0]);
    }

    #[test]
    fn json_rejects_wrong_shapes() {
        let inst = generate_random_instance(2, 3, 1, 1, &InstanceConfig::default(), 1).unwrap();
        let mut v: serde_json::Value = serde_json::from_str(&inst.to_json().unwrap()).unwrap();
        v["x0"] = serde_json::json!([1.0]);
        assert!(Instance::from_json(&v.to_string()).is_err());
    }
}
