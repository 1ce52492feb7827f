//! Signals, disturbance generators, closed-loop simulation and the
//! inverted-pendulum MPC harness.

use std::collections::HashMap;
use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

use crate::control::{
    h2_synthesize, hinf_synthesize, pathlength_synthesize, CausalPolicy, ControlError, ControlPlant, Mode,
};
use crate::filter::{CausalEstimator, FilterPlant};
use crate::numerics::{solve, symmetrize, Mat, Vector};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("numerical blow-up at step {step}")]
    NumericalBlowup { step: usize },
    #[error(transparent)]
    Control(#[from] ControlError),
}

/// Time series of equal-dimension vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct Signal {
    dim: usize,
    samples: Vec<Vector>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PathlengthMode {
    /// The first increment is taken from an implicit zero predecessor.
    ZeroPredecessor,
    /// Only increments between consecutive samples are counted.
    Interior,
}

impl Signal {
    pub fn zeros(dim: usize, horizon: usize) -> Self {
        Signal { dim, samples: vec![Vector::zeros(dim); horizon] }
    }

    pub fn from_samples(dim: usize, samples: Vec<Vector>) -> Self {
        assert!(samples.iter().all(|s| s.len() == dim), "samples must share dimension {dim}");
        Signal { dim, samples }
    }

    pub fn from_scalars(values: &[f64]) -> Self {
        Signal { dim: 1, samples: values.iter().map(|&v| Vector::from_element(1, v)).collect() }
    }

    pub fn from_fn(dim: usize, horizon: usize, mut f: impl FnMut(usize) -> Vector) -> Self {
        Self::from_samples(dim, (0..horizon).map(&mut f).collect())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn get(&self, t: usize) -> &Vector {
        &self.samples[t]
    }

    pub fn samples(&self) -> &[Vector] {
        &self.samples
    }

    pub fn iter(&self) -> impl Iterator<Item = &Vector> {
        self.samples.iter()
    }

    /// Σ‖w_t‖².
    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|s| s.norm_squared()).sum()
    }

    /// Σ‖w_t − w_{t−1}‖².
    pub fn pathlength(&self, mode: PathlengthMode) -> f64 {
        let interior: f64 = self.samples.windows(2).map(|w| (&w[1] - &w[0]).norm_squared()).sum();
        match (mode, self.samples.first()) {
            (PathlengthMode::ZeroPredecessor, Some(first)) => interior + first.norm_squared(),
            _ => interior,
        }
    }

    /// Sets the final `fraction` of the samples to zero.
    pub fn zero_tail(&mut self, fraction: f64) {
        let keep = ((1.0 - fraction) * self.len() as f64).round() as usize;
        for s in self.samples.iter_mut().skip(keep) {
            s.fill(0.0);
        }
    }

    pub fn scaled(&self, k: f64) -> Signal {
        Signal { dim: self.dim, samples: self.samples.iter().map(|s| s * k).collect() }
    }
}

/// Disturbance families used by the experiments. Every channel receives the
/// same deterministic waveform; random kinds draw an independent stream per
/// channel.
#[derive(Debug, Clone, PartialEq)]
pub enum DisturbanceSpec {
    Constant { amplitude: f64 },
    /// +amplitude for `half_period` steps, then −amplitude, repeating.
    Step { amplitude: f64, half_period: usize },
    /// amplitude·sin(2πt·dt/period).
    Sinusoid { amplitude: f64, period: f64, dt: f64 },
    GaussianIid { std: f64, seed: u64 },
    /// Cumulative sum of i.i.d. Gaussian increments.
    RandomWalk { step_std: f64, seed: u64 },
    Custom(Signal),
}

/// Random stream for `channel` derived from one 64-bit seed.
pub fn channel_rng(seed: u64, channel: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(channel);
    rng
}

fn gaussian_columns(seed: u64, dim: usize, horizon: usize) -> Vec<Vec<f64>> {
    (0..dim)
        .map(|ch| {
            let mut rng = channel_rng(seed, ch as u64);
            (0..horizon).map(|_| StandardNormal.sample(&mut rng)).collect()
        })
        .collect()
}

pub fn generate(spec: &DisturbanceSpec, dim: usize, horizon: usize) -> Signal {
    let uniform = |f: &dyn Fn(usize) -> f64| Signal::from_fn(dim, horizon, |t| Vector::from_element(dim, f(t)));
    match spec {
        DisturbanceSpec::Constant { amplitude } => uniform(&|_| *amplitude),
        DisturbanceSpec::Step { amplitude, half_period } => {
            let h = (*half_period).max(1);
            uniform(&|t| if (t / h) % 2 == 0 { *amplitude } else { -*amplitude })
        }
        DisturbanceSpec::Sinusoid { amplitude, period, dt } => {
            uniform(&|t| amplitude * (2.0 * PI * t as f64 * dt / period).sin())
        }
        DisturbanceSpec::GaussianIid { std, seed } => {
            let cols = gaussian_columns(*seed, dim, horizon);
            Signal::from_fn(dim, horizon, |t| Vector::from_fn(dim, |i, _| std * cols[i][t]))
        }
        DisturbanceSpec::RandomWalk { step_std, seed } => {
            let cols = gaussian_columns(*seed, dim, horizon);
            let mut acc = Vector::zeros(dim);
            Signal::from_fn(dim, horizon, |t| {
                for i in 0..dim {
                    acc[i] += step_std * cols[i][t];
                }
                acc.clone()
            })
        }
        DisturbanceSpec::Custom(signal) => signal.clone(),
    }
}

/// x_{t+1} = Ax_t + B_u u_t + B_w w_t.
pub fn lti_step(plant: &ControlPlant, x: &Vector, u: &Vector, w: &Vector) -> Vector {
    &plant.a * x + &plant.b_u * u + &plant.b_w * w
}

fn stage_cost(plant: &ControlPlant, x: &Vector, u: &Vector) -> f64 {
    x.dot(&(&plant.q * x)) + u.dot(&(&plant.r * u))
}

#[derive(Debug, Clone)]
pub struct ControlRun {
    /// x_0, ..., x_T.
    pub states: Signal,
    pub controls: Signal,
    /// Running cost through each step.
    pub cumulative: Vec<f64>,
    pub cost: f64,
}

pub fn simulate_control(plant: &ControlPlant, policy: &mut CausalPolicy, w: &Signal) -> Result<ControlRun, SimError> {
    if w.dim() != plant.p() {
        return Err(SimError::DimensionMismatch(format!("w has dimension {}, plant expects {}", w.dim(), plant.p())));
    }
    let mut x = Vector::zeros(plant.n());
    let mut states = Vec::with_capacity(w.len() + 1);
    let mut controls = Vec::with_capacity(w.len());
    let mut cumulative = Vec::with_capacity(w.len());
    let mut cost = 0.0;
    for wt in w.iter() {
        let u = policy.step(&x, wt);
        cost += stage_cost(plant, &x, &u);
        cumulative.push(cost);
        let next = lti_step(plant, &x, &u, wt);
        states.push(x);
        controls.push(u);
        x = next;
    }
    states.push(x);
    Ok(ControlRun {
        states: Signal::from_samples(plant.n(), states),
        controls: Signal::from_samples(plant.m(), controls),
        cumulative,
        cost,
    })
}

#[derive(Debug, Clone)]
pub struct FilterRun {
    pub estimates: Signal,
    /// s_t = Lx_t.
    pub truth: Signal,
    pub measurements: Signal,
    pub cumulative: Vec<f64>,
    pub error: f64,
}

/// Generates x_{t+1} = Ax_t + Bw_t, y_t = Cx_t + v_t from x_0 = 0.
pub fn plant_response(plant: &FilterPlant, w: &Signal, v: &Signal) -> Result<(Signal, Signal), SimError> {
    if w.len() != v.len() || w.dim() != plant.b.ncols() || v.dim() != plant.c.nrows() {
        return Err(SimError::DimensionMismatch("w and v must match the plant and each other".into()));
    }
    let mut x = Vector::zeros(plant.a.nrows());
    let mut truth = Vec::with_capacity(w.len());
    let mut ys = Vec::with_capacity(w.len());
    for (wt, vt) in w.iter().zip(v.iter()) {
        truth.push(&plant.l * &x);
        ys.push(&plant.c * &x + vt);
        x = &plant.a * &x + &plant.b * wt;
    }
    Ok((Signal::from_samples(plant.l.nrows(), truth), Signal::from_samples(plant.c.nrows(), ys)))
}

pub fn simulate_filter(
    plant: &FilterPlant,
    estimator: &mut dyn CausalEstimator,
    w: &Signal,
    v: &Signal,
) -> Result<FilterRun, SimError> {
    let (truth, measurements) = plant_response(plant, w, v)?;
    let mut estimates = Vec::with_capacity(w.len());
    let mut cumulative = Vec::with_capacity(w.len());
    let mut error = 0.0;
    for (y, s) in measurements.iter().zip(truth.iter()) {
        let s_hat = estimator.estimate(y);
        error += (&s_hat - s).norm_squared();
        cumulative.push(error);
        estimates.push(s_hat);
    }
    Ok(FilterRun {
        estimates: Signal::from_samples(plant.l.nrows(), estimates),
        truth,
        measurements,
        cumulative,
        error,
    })
}

/// Pendulum constants; the dynamics are
/// θ̈ = (mgℓ/J)·sin θ + (ℓ/J)·(u + w)·cos θ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PendulumParams {
    pub m: f64,
    pub l: f64,
    pub g: f64,
    pub j: f64,
    pub dt: f64,
}

impl Default for PendulumParams {
    fn default() -> Self {
        PendulumParams { m: 1.0, l: 1.0, g: 1.0, j: 1.0, dt: 0.001 }
    }
}

impl PendulumParams {
    /// Forward-Euler step of the nonlinear dynamics.
    pub fn step(&self, x: &Vector, u: f64, w: f64) -> Vector {
        let (th, om) = (x[0], x[1]);
        let acc = self.m * self.g * self.l / self.j * th.sin() + self.l / self.j * (u + w) * th.cos();
        Vector::from_vec(vec![th + self.dt * om, om + self.dt * acc])
    }

    /// Euler discretization of the linearization at angle θ with zero
    /// input; fails where cos θ ≈ 0 leaves the input without authority.
    pub fn linearize(&self, theta: f64) -> Result<ControlPlant, ControlError> {
        let dt = self.dt;
        let a = Mat::from_row_slice(2, 2, &[1.0, dt, dt * self.m * self.g * self.l / self.j * theta.cos(), 1.0]);
        let b = Mat::from_row_slice(2, 1, &[0.0, dt * self.l / self.j * theta.cos()]);
        ControlPlant::new(a, b.clone(), b, Mat::identity(2, 2), Mat::identity(1, 1))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ControllerFamily {
    H2,
    Hinf { gamma: f64 },
    Pathlength { gamma: f64 },
    /// Clairvoyant: LQR feedback on the current linearization plus the
    /// feedforward of all future disturbances through the origin model.
    Offline,
}

impl ControllerFamily {
    pub fn name(&self) -> &'static str {
        match self {
            ControllerFamily::H2 => "h2",
            ControllerFamily::Hinf { .. } => "hinf",
            ControllerFamily::Pathlength { .. } => "pathlength",
            ControllerFamily::Offline => "offline",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PendulumDynamics {
    Nonlinear,
    /// The origin linearization is used as the true plant.
    Linearized,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MpcOptions {
    pub dynamics: PendulumDynamics,
    /// Re-linearize at every step (gains cached on an angle grid).
    pub relinearize: bool,
    /// Angle quantum of the gain cache, in radians.
    pub grid: f64,
}

impl Default for MpcOptions {
    fn default() -> Self {
        MpcOptions { dynamics: PendulumDynamics::Nonlinear, relinearize: true, grid: 1e-3 }
    }
}

#[derive(Debug, Clone)]
pub struct PendulumRun {
    pub states: Signal,
    pub controls: Signal,
    pub cumulative: Vec<f64>,
    pub cost: f64,
    /// Re-linearizations at which synthesis failed and the previous gains
    /// were kept.
    pub fallbacks: usize,
    pub syntheses: usize,
}

/// u_t = −Kx_t − S⁻¹B_uᵀρ_t with ρ_t = PB_w w_t + A_clᵀρ_{t+1}, ρ_T = 0.
#[derive(Debug, Clone)]
struct OfflineLaw {
    gain: Mat,
    s: Mat,
    b_u: Mat,
}

fn offline_law(plant: &ControlPlant) -> Result<(OfflineLaw, Mat, Mat), ControlError> {
    let sol = crate::numerics::solve_dare(&plant.a, &plant.b_u, &plant.q, &plant.r)?;
    let s = symmetrize(&(&plant.r + plant.b_u.transpose() * &sol.p * &plant.b_u));
    let a_cl_t = (&plant.a - &plant.b_u * &sol.gain).transpose();
    let pb_w = &sol.p * &plant.b_w;
    Ok((OfflineLaw { gain: sol.gain, s, b_u: plant.b_u.clone() }, a_cl_t, pb_w))
}

fn offline_feedforward(plant: &ControlPlant, w: &Signal) -> Result<Vec<Vector>, ControlError> {
    let (law, a_cl_t, pb_w) = offline_law(plant)?;
    let mut rho = Vector::zeros(plant.n());
    let mut out = vec![Vector::zeros(plant.m()); w.len()];
    for t in (0..w.len()).rev() {
        rho = &pb_w * w.get(t) + &a_cl_t * &rho;
        let rhs = law.b_u.transpose() * &rho;
        let ff = solve(&law.s, &Mat::from_column_slice(rhs.len(), 1, rhs.as_slice()), "R + BᵀPB")?;
        out[t] = Vector::from_column_slice(ff.as_slice());
    }
    Ok(out)
}

enum Law {
    Policy(CausalPolicy),
    Offline(OfflineLaw),
}

fn synthesize_law(family: &ControllerFamily, plant: &ControlPlant) -> Result<Option<Law>, ControlError> {
    Ok(match family {
        ControllerFamily::H2 => Some(Law::Policy(h2_synthesize(plant, Mode::Causal)?)),
        ControllerFamily::Hinf { gamma } => hinf_synthesize(plant, *gamma, Mode::Causal)?.policy().map(Law::Policy),
        ControllerFamily::Pathlength { gamma } => {
            pathlength_synthesize(plant, *gamma, Mode::Causal)?.policy().map(Law::Policy)
        }
        ControllerFamily::Offline => Some(Law::Offline(offline_law(plant)?.0)),
    })
}

/// Runs a controller family on the pendulum from rest. On the nonlinear
/// plant the controller is re-synthesized on the Euler linearization at the
/// current angle; pathlength policies keep their internal state across
/// re-syntheses.
pub fn simulate_pendulum_mpc(
    params: &PendulumParams,
    family: &ControllerFamily,
    w: &Signal,
    options: &MpcOptions,
) -> Result<PendulumRun, SimError> {
    if w.dim() != 1 {
        return Err(SimError::DimensionMismatch("pendulum disturbance is scalar".into()));
    }
    let origin = params.linearize(0.0)?;
    let Some(mut active) = synthesize_law(family, &origin)? else {
        return Err(SimError::Control(ControlError::InvalidPlant(format!(
            "{} synthesis infeasible at the origin",
            family.name()
        ))));
    };
    let feedforward = match family {
        ControllerFamily::Offline => offline_feedforward(&origin, w)?,
        _ => Vec::new(),
    };
    let mut cache: HashMap<i64, Option<Law>> = HashMap::new();
    let mut syntheses = 1;
    let mut fallbacks = 0;
    let mut active_key = 0i64;

    let mut x = Vector::zeros(2);
    let mut states = Vec::with_capacity(w.len() + 1);
    let mut controls = Vec::with_capacity(w.len());
    let mut cumulative = Vec::with_capacity(w.len());
    let mut cost = 0.0;
    let relinearize = options.relinearize && options.dynamics == PendulumDynamics::Nonlinear;
    for (t, wt) in w.iter().enumerate() {
        if relinearize {
            let key = (x[0] / options.grid).round() as i64;
            if key != active_key {
                let entry = cache.entry(key).or_insert_with(|| {
                    syntheses += 1;
                    params
                        .linearize(key as f64 * options.grid)
                        .ok()
                        .and_then(|plant| synthesize_law(family, &plant).ok().flatten())
                });
                match (entry, &mut active) {
                    (Some(Law::Policy(next)), Law::Policy(current)) => current.adopt_gains(next),
                    (Some(Law::Offline(next)), Law::Offline(current)) => *current = next.clone(),
                    _ => fallbacks += 1,
                }
                active_key = key;
            }
        }
        let u = match &mut active {
            Law::Policy(p) => p.step(&x, wt),
            Law::Offline(o) => -(&o.gain * &x) - &feedforward[t],
        };
        cost += stage_cost(&origin, &x, &u);
        cumulative.push(cost);
        let next = match options.dynamics {
            PendulumDynamics::Nonlinear => params.step(&x, u[0], wt[0]),
            PendulumDynamics::Linearized => lti_step(&origin, &x, &u, wt),
        };
        states.push(x);
        controls.push(u);
        if !next.iter().all(|v| v.is_finite()) || next[1].abs() > 1e6 {
            return Err(SimError::NumericalBlowup { step: t });
        }
        x = next;
    }
    states.push(x);
    Ok(PendulumRun {
        states: Signal::from_samples(2, states),
        controls: Signal::from_samples(1, controls),
        cumulative,
        cost,
        fallbacks,
        syntheses,
    })
}
