//! Estimator synthesis: steady-state Kalman filter, the smoothed oracle,
//! the Nehari solver and the pathlength-optimal filter.

use num_complex::Complex64;
use thiserror::Error;

use crate::control::{bisect_gamma, Bisection, ControlError, BISECT_HI, BISECT_LO, BISECT_TOL};
use crate::factor::{
    decompose_q, factor_center, factor_io, CenterFactorization, FactorError, IoFactorization, QDecomposition,
};
use crate::numerics::{
    check_finite, inv_sqrtm_pd, inverse, is_detectable, is_stabilizable, max_singular_value, solve,
    solve_stein, solve_stein_transposed, spectral_radius, Mat, NumericsError, Vector,
};
use crate::sim::{simulate_filter, PathlengthMode, SimError, Signal};
use crate::sweep::Tracking;
use crate::xfer::{StateSpace, XferError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FilterError {
    #[error("invalid plant: {0}")]
    InvalidPlant(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("gamma {gamma} is below the Nehari bound {gamma_star}")]
    GammaTooSmall { gamma: f64, gamma_star: f64 },
    #[error("singular pivot I − FᵀZFΠ")]
    SingularPivot,
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error(transparent)]
    Factor(#[from] FactorError),
    #[error(transparent)]
    Xfer(#[from] XferError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Control(#[from] ControlError),
}

/// x_{t+1} = Ax_t + Bw_t, y_t = Cx_t + v_t, target s_t = Lx_t.
#[derive(Debug, Clone)]
pub struct FilterPlant {
    pub a: Mat,
    pub b: Mat,
    pub c: Mat,
    pub l: Mat,
}

impl FilterPlant {
    pub fn new(a: Mat, b: Mat, c: Mat, l: Mat) -> Result<Self, FilterError> {
        let n = a.nrows();
        if !a.is_square() || b.nrows() != n || c.ncols() != n || l.ncols() != n {
            return Err(FilterError::DimensionMismatch(format!(
                "A {:?}, B {:?}, C {:?}, L {:?}",
                a.shape(),
                b.shape(),
                c.shape(),
                l.shape()
            )));
        }
        for m in [&a, &b, &c, &l] {
            check_finite(m)?;
        }
        if !is_stabilizable(&a, &b) {
            return Err(FilterError::InvalidPlant("(A, B) is not stabilizable".into()));
        }
        if !is_detectable(&a, &c) {
            return Err(FilterError::InvalidPlant("(A, C) is not detectable".into()));
        }
        Ok(FilterPlant { a, b, c, l })
    }

    /// Position tracking from noisy position readings: state [position;
    /// velocity], acceleration as the driving disturbance.
    pub fn tracking(dt: f64) -> Result<Self, FilterError> {
        FilterPlant::new(
            Mat::from_row_slice(2, 2, &[1.0, dt, 0.0, 1.0]),
            Mat::from_row_slice(2, 1, &[0.0, dt]),
            Mat::from_row_slice(1, 2, &[1.0, 0.0]),
            Mat::from_row_slice(1, 2, &[1.0, 0.0]),
        )
    }

    /// J(z) = L(zI − A)⁻¹B.
    pub fn j(&self) -> StateSpace {
        let (r, m) = (self.l.nrows(), self.b.ncols());
        StateSpace { a: self.a.clone(), b: self.b.clone(), c: self.l.clone(), d: Mat::zeros(r, m) }
    }

    /// H(z) = C(zI − A)⁻¹B.
    pub fn h(&self) -> StateSpace {
        let (p, m) = (self.c.nrows(), self.b.ncols());
        StateSpace { a: self.a.clone(), b: self.b.clone(), c: self.c.clone(), d: Mat::zeros(p, m) }
    }
}

/// A recursion mapping y_t to ŝ_t using y_0, ..., y_t only.
pub trait CausalEstimator {
    fn estimate(&mut self, y: &Vector) -> Vector;
    fn reset(&mut self);
}

/// Steady-state Kalman filter in filtered form:
/// ŝ_t = L(x̂_t + P₂CᵀΣ₂⁻¹(y_t − Cx̂_t)), x̂_{t+1} = Ax̂_t + K₂(y_t − Cx̂_t).
#[derive(Debug, Clone)]
pub struct KalmanFilter {
    pub a: Mat,
    pub c: Mat,
    pub l: Mat,
    pub k2: Mat,
    pub update: Mat,
    pub p2: Mat,
    x_hat: Vector,
}

impl KalmanFilter {
    /// The predictor A − K₂C.
    pub fn predictor(&self) -> Mat {
        &self.a - &self.k2 * &self.c
    }
}

impl CausalEstimator for KalmanFilter {
    fn estimate(&mut self, y: &Vector) -> Vector {
        let innovation = y - &self.c * &self.x_hat;
        let s_hat = &self.l * (&self.x_hat + &self.update * &innovation);
        self.x_hat = &self.a * &self.x_hat + &self.k2 * innovation;
        s_hat
    }

    fn reset(&mut self) {
        self.x_hat.fill(0.0);
    }
}

pub fn kalman_synthesize(plant: &FilterPlant) -> Result<KalmanFilter, FilterError> {
    let p = plant.c.nrows();
    let sol = crate::numerics::solve_dare(
        &plant.a.transpose(),
        &plant.c.transpose(),
        &(&plant.b * plant.b.transpose()),
        &Mat::identity(p, p),
    )?;
    let sigma2 = &sol.innovation;
    let update = solve(sigma2, &(&plant.c * &sol.p), "Σ₂")?.transpose();
    Ok(KalmanFilter {
        a: plant.a.clone(),
        c: plant.c.clone(),
        l: plant.l.clone(),
        k2: sol.gain.transpose(),
        update,
        p2: sol.p,
        x_hat: Vector::zeros(plant.a.nrows()),
    })
}

/// Noncausal optimum: ŝ_t = Lx_t where (w, x) minimizes
/// Σ‖w_t‖² + ‖y_t − Cx_t‖² subject to the dynamics from x_0 = 0.
pub fn smoothed_oracle(plant: &FilterPlant, y: &Signal) -> Result<Signal, FilterError> {
    if y.dim() != plant.c.nrows() {
        return Err(FilterError::DimensionMismatch(format!(
            "y has dimension {}, plant has {} outputs",
            y.dim(),
            plant.c.nrows()
        )));
    }
    let m = plant.b.ncols();
    let q = plant.c.transpose() * &plant.c;
    let r = Mat::identity(m, m);
    let sweep = Tracking { a: &plant.a, b: &plant.b, q: &q, r: &r, horizon: y.len() };
    let ct = plant.c.transpose();
    let traj = sweep.solve(|t| Some(-(&ct * y.get(t))), |_| None)?;
    let estimates = traj.states[..y.len()].iter().map(|x| &plant.l * x).collect();
    Ok(Signal::from_samples(plant.l.nrows(), estimates))
}

/// Solution data of the Nehari problem for T(z) = H(z⁻¹I − F)⁻¹G.
#[derive(Debug, Clone)]
pub struct NehariData {
    pub f: Mat,
    pub g: Mat,
    pub h: Mat,
    /// Z = FᵀZF + HᵀH.
    pub z: Mat,
    /// Π = FΠFᵀ + GGᵀ.
    pub pi: Mat,
    /// Z scaled to the requested level γ: Z/γ².
    pub z_gamma: Mat,
    /// σ̄(ZΠ).
    pub gamma_star: f64,
    /// √ρ(ZΠ), the Hankel norm of T.
    pub hankel_norm: f64,
    pub f_gamma: Mat,
    pub k_gamma: Mat,
    pub k_hat: StateSpace,
    pub gamma: f64,
}

impl NehariData {
    /// T(z) evaluated at z.
    pub fn t_evaluate(&self, z: Complex64) -> Result<crate::numerics::CMat, XferError> {
        let (r, p) = (self.h.nrows(), self.g.ncols());
        let t = StateSpace { a: self.f.clone(), b: self.g.clone(), c: self.h.clone(), d: Mat::zeros(r, p) };
        t.evaluate(Complex64::new(1.0, 0.0) / z)
    }
}

/// Gramians of T and the resulting bounds.
pub fn nehari_gramians(f: &Mat, g: &Mat, h: &Mat) -> Result<(Mat, Mat, f64, f64), FilterError> {
    let z = solve_stein(f, &(h.transpose() * h))?;
    let pi = solve_stein_transposed(f, &(g * g.transpose()))?;
    let zp = &z * &pi;
    let gamma_star = max_singular_value(&zp);
    let hankel_norm = spectral_radius(&zp).sqrt();
    Ok((z, pi, gamma_star, hankel_norm))
}

pub fn nehari_solve(f: &Mat, g: &Mat, h: &Mat, gamma: f64) -> Result<NehariData, FilterError> {
    let n = f.nrows();
    if !f.is_square() || g.nrows() != n || h.ncols() != n {
        return Err(FilterError::DimensionMismatch(format!(
            "F {:?}, G {:?}, H {:?}",
            f.shape(),
            g.shape(),
            h.shape()
        )));
    }
    let (z, pi, gamma_star, hankel_norm) = nehari_gramians(f, g, h)?;
    // Below the Hankel norm no causal approximant exists, even where
    // σ̄(ZΠ) is smaller.
    let floor = gamma_star.max(hankel_norm);
    if gamma < floor * (1.0 - 1e-12) {
        return Err(FilterError::GammaTooSmall { gamma, gamma_star: floor });
    }
    let z_gamma = &z / (gamma * gamma);
    let ft = f.transpose();
    let pivot = Mat::identity(n, n) - &ft * &z_gamma * f * &pi;
    let k_gamma = solve(&pivot, &(&ft * &z_gamma * g), "pivot").map_err(|_| FilterError::SingularPivot)?;
    let f_gamma = &ft - &k_gamma * g.transpose();
    let h_pi = h * &pi;
    let k_hat = StateSpace::new(f_gamma.clone(), k_gamma.clone(), &h_pi * &f_gamma, &h_pi * &k_gamma)?;
    Ok(NehariData {
        f: f.clone(),
        g: g.clone(),
        h: h.clone(),
        z,
        pi,
        z_gamma,
        gamma_star,
        hankel_norm,
        f_gamma,
        k_gamma,
        k_hat,
        gamma,
    })
}

/// The γ-dependent data of the pathlength filter construction.
#[derive(Debug, Clone)]
pub struct FilterPipeline {
    pub gamma: f64,
    pub io: IoFactorization,
    pub center: CenterFactorization,
    pub q: QDecomposition,
    /// Nehari data at level 1: F = A₂ᵀ, G = CᵀΣ₂^{-1/2},
    /// H = L̂W₂A₂ᵀ(I − A₂ᵀ)⁻¹.
    pub f: Mat,
    pub g: Mat,
    pub h: Mat,
    pub z: Mat,
    pub pi: Mat,
    /// σ̄(ZΠ); the filter exists when this is at most 1.
    pub sigma_bar: f64,
    pub hankel_norm: f64,
}

pub fn filter_pipeline(plant: &FilterPlant, gamma: f64) -> Result<FilterPipeline, FilterError> {
    let io = factor_io(&plant.a, &plant.b, &plant.c)?;
    let center = factor_center(&io, &plant.b, &plant.l, gamma)?;
    let q = decompose_q(&io, &center, &plant.a, &plant.b, &plant.c, &plant.l)?;
    let n = plant.a.nrows();
    let f = io.a2.transpose();
    let g = q.g.clone();
    let resolvent_at_1 = inverse(&(Mat::identity(n, n) - &f), "I − A₂ᵀ")?;
    let h = &q.l_hat * &q.w2 * &f * resolvent_at_1;
    let (z, pi, sigma_bar, hankel_norm) = nehari_gramians(&f, &g, &h)?;
    Ok(FilterPipeline { gamma, io, center, q, f, g, h, z, pi, sigma_bar, hankel_norm })
}

/// σ̄(ZΠ) at level γ; errors in the pipeline are reported as +∞.
pub fn filter_sigma_bar(plant: &FilterPlant, gamma: f64) -> f64 {
    filter_pipeline(plant, gamma).map(|p| p.sigma_bar).unwrap_or(f64::INFINITY)
}

/// Pathlength-optimal filter. With z_t = Σ₂^{-1/2}(y_t − Ce_t):
///
/// - e_{t+1} = A₂e_t + K₂y_t
/// - ξ_{t+1} = F_γξ_t + K_γz_t,  α_t = HΠξ_{t+1}
/// - c_t = (L̂W₂G + HG)z_t + L̂χ_t,  χ_{t+1} = Âχ_t + ÂW₂Gz_t
/// - β_t = c_t + α_t − α_{t−1}
/// - ŝ_t = γΣ₃^{-1/2}β_t − K₃π_t,  π_{t+1} = (A₁ − B₃K₃)π_t + γB₃Σ₃^{-1/2}β_t
#[derive(Debug, Clone)]
pub struct PathlengthFilter {
    pub gamma: f64,
    pub sigma_bar: f64,
    pub hankel_norm: f64,
    /// Δ₃(1)Q(1) when finite.
    pub delta3q_at_1: Option<Mat>,
    c: Mat,
    a2: Mat,
    k2: Mat,
    sigma2_inv_half: Mat,
    f_gamma: Mat,
    k_gamma: Mat,
    h_pi: Mat,
    a_hat: Mat,
    b_chi: Mat,
    l_hat: Mat,
    d_n: Mat,
    a_pi: Mat,
    b_pi: Mat,
    k3: Mat,
    d_pi: Mat,
    e: Vector,
    xi: Vector,
    chi: Vector,
    pi: Vector,
    alpha_prev: Vector,
}

impl CausalEstimator for PathlengthFilter {
    fn estimate(&mut self, y: &Vector) -> Vector {
        let z = &self.sigma2_inv_half * (y - &self.c * &self.e);
        self.e = &self.a2 * &self.e + &self.k2 * y;
        self.xi = &self.f_gamma * &self.xi + &self.k_gamma * &z;
        let alpha = &self.h_pi * &self.xi;
        let c = &self.d_n * &z + &self.l_hat * &self.chi;
        self.chi = &self.a_hat * &self.chi + &self.b_chi * &z;
        let beta = c + &alpha - &self.alpha_prev;
        self.alpha_prev = alpha;
        let s_hat = &self.d_pi * &beta - &self.k3 * &self.pi;
        self.pi = &self.a_pi * &self.pi + &self.b_pi * &beta;
        s_hat
    }

    fn reset(&mut self) {
        for v in [&mut self.e, &mut self.xi, &mut self.chi, &mut self.pi, &mut self.alpha_prev] {
            v.fill(0.0);
        }
    }
}

impl PathlengthFilter {
    /// The filter as one realization: Δ₃⁻¹(N + (1 − z⁻¹)K̂)Δ₂⁻¹ with
    /// N(z) = L̂W₂G + HG + L̂(zI − Â)⁻¹ÂW₂G.
    pub fn realization(&self) -> Result<StateSpace, XferError> {
        let r = self.l_hat.nrows();
        let delta2_inv = StateSpace {
            a: self.a2.clone(),
            b: self.k2.clone(),
            c: -(&self.sigma2_inv_half * &self.c),
            d: self.sigma2_inv_half.clone(),
        };
        let k_hat = StateSpace {
            a: self.f_gamma.clone(),
            b: self.k_gamma.clone(),
            c: &self.h_pi * &self.f_gamma,
            d: &self.h_pi * &self.k_gamma,
        };
        let n_part = StateSpace { a: self.a_hat.clone(), b: self.b_chi.clone(), c: self.l_hat.clone(), d: self.d_n.clone() };
        let delta3_inv = StateSpace { a: self.a_pi.clone(), b: self.b_pi.clone(), c: -&self.k3, d: self.d_pi.clone() };
        let middle = n_part.add(&StateSpace::difference(r).compose(&k_hat)?)?;
        delta3_inv.compose(&middle)?.compose(&delta2_inv)
    }
}

#[derive(Debug, Clone)]
pub struct FilterFeasibility {
    pub gamma: f64,
    pub sigma_bar: f64,
    pub hankel_norm: f64,
}

pub enum FilterSynthesis {
    Feasible(Box<PathlengthFilter>),
    Infeasible(FilterFeasibility),
}

impl FilterSynthesis {
    pub fn filter(self) -> Option<PathlengthFilter> {
        match self {
            FilterSynthesis::Feasible(f) => Some(*f),
            FilterSynthesis::Infeasible(_) => None,
        }
    }
}

pub fn pathlength_filter_synthesize(plant: &FilterPlant, gamma: f64) -> Result<FilterSynthesis, FilterError> {
    let pipe = filter_pipeline(plant, gamma)?;
    if pipe.sigma_bar > 1.0 {
        return Ok(FilterSynthesis::Infeasible(FilterFeasibility {
            gamma,
            sigma_bar: pipe.sigma_bar,
            hankel_norm: pipe.hankel_norm,
        }));
    }
    let nehari = nehari_solve(&pipe.f, &pipe.g, &pipe.h, 1.0)?;
    let q = &pipe.q;
    let center = &pipe.center;
    let s3_inv_half = inv_sqrtm_pd(&center.sigma3)?;
    let d_pi = &s3_inv_half * gamma;
    let b_pi = &center.b3 * &d_pi;
    let a_pi = &pipe.io.a1 - &center.b3 * &center.k3;
    let n = plant.a.nrows();
    let r = plant.l.nrows();
    Ok(FilterSynthesis::Feasible(Box::new(PathlengthFilter {
        gamma,
        sigma_bar: pipe.sigma_bar,
        hankel_norm: pipe.hankel_norm,
        delta3q_at_1: q.delta3q_at_1.clone(),
        c: plant.c.clone(),
        a2: pipe.io.a2.clone(),
        k2: pipe.io.k2.clone(),
        sigma2_inv_half: inv_sqrtm_pd(&pipe.io.sigma2)?,
        h_pi: &pipe.h * &nehari.pi,
        f_gamma: nehari.f_gamma,
        k_gamma: nehari.k_gamma,
        b_chi: &q.a_hat * &q.w2 * &q.g,
        d_n: &q.constant_term + &pipe.h * &q.g,
        a_hat: q.a_hat.clone(),
        l_hat: q.l_hat.clone(),
        a_pi,
        b_pi,
        k3: center.k3.clone(),
        d_pi,
        e: Vector::zeros(n),
        xi: Vector::zeros(n),
        chi: Vector::zeros(2 * n),
        pi: Vector::zeros(n),
        alpha_prev: Vector::zeros(r),
    })))
}

/// Smallest γ with σ̄(ZΠ) ≤ 1.
pub fn pathlength_filter_gamma_star(plant: &FilterPlant) -> Result<Bisection, FilterError> {
    Ok(bisect_gamma(|g| filter_sigma_bar(plant, g) <= 1.0, BISECT_LO, BISECT_HI, BISECT_TOL)?)
}

#[derive(Debug, Clone, Copy)]
pub struct RegretCheck {
    pub regret: f64,
    pub bound: f64,
    pub filter_error: f64,
    pub smoother_error: f64,
}

/// Runs the estimator and the smoothed oracle on the same measurements.
/// The bound is γ²(energy(w) + pathlength(v)) with a zero predecessor.
pub fn filter_regret_check(
    plant: &FilterPlant,
    estimator: &mut dyn CausalEstimator,
    gamma: f64,
    w: &Signal,
    v: &Signal,
) -> Result<RegretCheck, FilterError> {
    estimator.reset();
    let run = simulate_filter(plant, estimator, w, v)?;
    let smoothed = smoothed_oracle(plant, &run.measurements)?;
    let smoother_error: f64 = smoothed.iter().zip(run.truth.iter()).map(|(a, b)| (a - b).norm_squared()).sum();
    Ok(RegretCheck {
        regret: run.error - smoother_error,
        bound: gamma * gamma * (w.energy() + v.pathlength(PathlengthMode::ZeroPredecessor)),
        filter_error: run.error,
        smoother_error,
    })
}
