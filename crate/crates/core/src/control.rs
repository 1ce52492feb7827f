//! Controller synthesis: H∞, pathlength-optimal, H2, the clairvoyant
//! offline optimum and bisection over γ.

use thiserror::Error;

use crate::factor::{factor_control, ControlFactorization, FactorError};
use crate::numerics::{
    inv_sqrtm_pd, is_detectable, is_stabilizable, min_eigenvalue, solve, solve_dare,
    solve_indefinite_dare, spectral_radius, sqrtm_psd, symmetrize, IndefiniteDare, Mat,
    NumericsError, Vector,
};
use crate::sim::Signal;
use crate::sweep::Tracking;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ControlError {
    #[error("invalid plant: {0}")]
    InvalidPlant(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error(transparent)]
    Factor(#[from] FactorError),
    #[error("no feasible point below {0}")]
    NoFeasiblePoint(f64),
}

/// x_{t+1} = Ax_t + B_u u_t + B_w w_t with stage cost xᵀQx + uᵀRu.
#[derive(Debug, Clone)]
pub struct ControlPlant {
    pub a: Mat,
    pub b_u: Mat,
    pub b_w: Mat,
    pub q: Mat,
    pub r: Mat,
    /// Symmetric square root of Q.
    pub l: Mat,
    pub r_half: Mat,
    pub r_inv_half: Mat,
}

impl ControlPlant {
    pub fn new(a: Mat, b_u: Mat, b_w: Mat, q: Mat, r: Mat) -> Result<Self, ControlError> {
        let n = a.nrows();
        let m = b_u.ncols();
        if !a.is_square() || b_u.nrows() != n || b_w.nrows() != n || q.shape() != (n, n) || r.shape() != (m, m)
        {
            return Err(ControlError::DimensionMismatch(format!(
                "A {:?}, B_u {:?}, B_w {:?}, Q {:?}, R {:?}",
                a.shape(),
                b_u.shape(),
                b_w.shape(),
                q.shape(),
                r.shape()
            )));
        }
        for x in [&a, &b_u, &b_w, &q, &r] {
            crate::numerics::check_finite(x)?;
        }
        if (&q - q.transpose()).amax() > 1e-12 * (1.0 + q.amax()) || min_eigenvalue(&q) < -1e-12 * (1.0 + q.amax()) {
            return Err(ControlError::InvalidPlant("Q must be symmetric positive semidefinite".into()));
        }
        if (&r - r.transpose()).amax() > 1e-12 * (1.0 + r.amax()) {
            return Err(ControlError::InvalidPlant("R must be symmetric".into()));
        }
        let r_inv_half =
            inv_sqrtm_pd(&r).map_err(|_| ControlError::InvalidPlant("R must be positive definite".into()))?;
        if !is_stabilizable(&a, &b_u) {
            return Err(ControlError::InvalidPlant("(A, B_u) is not stabilizable".into()));
        }
        let l = sqrtm_psd(&q);
        if !is_detectable(&a, &l) {
            return Err(ControlError::InvalidPlant("(A, Q^1/2) is not detectable".into()));
        }
        let r_half = sqrtm_psd(&r);
        Ok(ControlPlant { a, b_u, b_w, q, r, l, r_half, r_inv_half })
    }

    /// Double integrator with force input and force disturbance, Q = I, R = 1.
    pub fn double_integrator(dt: f64) -> Result<Self, ControlError> {
        let b = Mat::from_row_slice(2, 1, &[0.5 * dt * dt, dt]);
        ControlPlant::new(
            Mat::from_row_slice(2, 2, &[1.0, dt, 0.0, 1.0]),
            b.clone(),
            b,
            Mat::identity(2, 2),
            Mat::identity(1, 1),
        )
    }

    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    pub fn m(&self) -> usize {
        self.b_u.ncols()
    }

    pub fn p(&self) -> usize {
        self.b_w.ncols()
    }

    /// B_uR^{-1/2}.
    pub fn b_u_normalized(&self) -> Mat {
        &self.b_u * &self.r_inv_half
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// u_t may depend on w_t.
    Causal,
    /// u_t depends on x_t and past disturbances only.
    StrictlyCausal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolicyKind {
    H2,
    Hinf,
    Pathlength,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Condition {
    /// The Riccati iteration broke down or did not converge.
    Solver,
    /// The control-side factorization failed or Δ⁻¹ is not stable.
    Factorization,
    Stability,
    Inertia,
    Psd,
    /// B_wᵀPB_w ≺ γ²I (the disturbance player's concavity).
    StrictConcavity,
    /// I + B_uᵀP̄B_u ≻ 0 (the controller's convexity).
    StrictConvexity,
}

#[derive(Debug, Clone, Default)]
pub struct Diagnostics {
    pub residual_norm: Option<f64>,
    /// Spectral radius of the game closed loop A − B̃H̃⁻¹B̃ᵀPA.
    pub game_radius: Option<f64>,
    /// Spectral radius of A − B_uK_x under the synthesized law.
    pub controller_radius: Option<f64>,
    pub min_eigenvalue_p: Option<f64>,
    /// Pole radius of Δ⁻¹ (pathlength synthesis).
    pub factor_inverse_radius: Option<f64>,
    /// Strictly causal conditions with the roles of B_u and B_w as printed
    /// in the original statement (B_uᵀPB_u ≺ γ²I, ...).
    pub strict_literal: Option<bool>,
    /// Strictly causal conditions of the synthetic problem evaluated with
    /// the caller's γ instead of level 1.
    pub strict_with_call_gamma: Option<bool>,
    pub message: Option<String>,
}

#[derive(Debug, Clone)]
pub struct FeasibilityReport {
    pub gamma: f64,
    pub feasible: bool,
    pub failed: Vec<Condition>,
    pub diagnostics: Diagnostics,
}

impl FeasibilityReport {
    fn new(gamma: f64) -> Self {
        FeasibilityReport { gamma, feasible: true, failed: Vec::new(), diagnostics: Diagnostics::default() }
    }

    fn fail(&mut self, c: Condition) {
        self.feasible = false;
        if !self.failed.contains(&c) {
            self.failed.push(c);
        }
    }
}

/// Linear causal control law with an internal disturbance-driven state:
///
/// u_t = −K_x x_t − K_ν ν_t − K_w w_t,  ν_{t+1} = A_ν ν_t + B_ν w_t.
///
/// Strictly causal policies have K_w = 0.
#[derive(Debug, Clone)]
pub struct CausalPolicy {
    pub kind: PolicyKind,
    pub mode: Mode,
    pub gamma: Option<f64>,
    pub kx: Mat,
    pub knu: Mat,
    pub kw: Mat,
    pub a_nu: Mat,
    pub b_nu: Mat,
    nu: Vector,
    pub report: FeasibilityReport,
}

impl CausalPolicy {
    pub fn step(&mut self, x: &Vector, w: &Vector) -> Vector {
        let mut u = -(&self.kx * x);
        if self.nu.len() > 0 {
            u -= &self.knu * &self.nu;
            self.nu = &self.a_nu * &self.nu + &self.b_nu * w;
        }
        if self.mode == Mode::Causal {
            u -= &self.kw * w;
        }
        u
    }

    pub fn reset(&mut self) {
        self.nu.fill(0.0);
    }

    pub fn internal_state(&self) -> &Vector {
        &self.nu
    }

    /// Takes the gains of `other` while keeping the internal state, as
    /// needed when re-synthesizing on a new linearization.
    pub fn adopt_gains(&mut self, other: &CausalPolicy) {
        let nu = std::mem::take(&mut self.nu);
        *self = other.clone();
        if nu.len() == self.nu.len() {
            self.nu = nu;
        }
    }
}

pub enum Synthesis {
    Feasible(CausalPolicy),
    Infeasible(FeasibilityReport),
}

impl Synthesis {
    pub fn is_feasible(&self) -> bool {
        matches!(self, Synthesis::Feasible(_))
    }

    pub fn policy(self) -> Option<CausalPolicy> {
        match self {
            Synthesis::Feasible(p) => Some(p),
            Synthesis::Infeasible(_) => None,
        }
    }

    pub fn report(&self) -> &FeasibilityReport {
        match self {
            Synthesis::Feasible(p) => &p.report,
            Synthesis::Infeasible(r) => r,
        }
    }
}

fn positive_definite(m: &Mat) -> bool {
    m.nrows() == 0 || min_eigenvalue(m) > 1e-12 * (1.0 + m.amax())
}

/// P̄ = P + PB_w(γ²I − B_wᵀPB_w)⁻¹B_wᵀP, the value after the disturbance
/// player's best response.
fn worst_case_value(p: &Mat, b_w: &Mat, gamma: f64) -> Result<Mat, NumericsError> {
    let k = b_w.ncols();
    let inner = Mat::identity(k, k) * (gamma * gamma) - b_w.transpose() * p * b_w;
    let x = solve(&inner, &(b_w.transpose() * p), "γ²I − B_wᵀPB_w")?;
    Ok(symmetrize(&(p + p * b_w * x)))
}

/// Strictly causal saddle conditions: (concavity, convexity).
fn strict_conditions(p: &Mat, b_u: &Mat, b_w: &Mat, gamma: f64) -> (bool, bool) {
    let k = b_w.ncols();
    let concave = positive_definite(&(Mat::identity(k, k) * (gamma * gamma) - b_w.transpose() * p * b_w));
    let convex = match worst_case_value(p, b_w, gamma) {
        Ok(pbar) => positive_definite(&(Mat::identity(b_u.ncols(), b_u.ncols()) + b_u.transpose() * pbar * b_u)),
        Err(_) => false,
    };
    (concave, convex)
}

/// Feedback gains (on state, on disturbance) of the normalized control v for
/// the game value P at level γ.
fn game_gains(a: &Mat, b_u: &Mat, b_w: &Mat, p: &Mat, gamma: f64, mode: Mode) -> Result<(Mat, Mat), NumericsError> {
    let m = b_u.ncols();
    match mode {
        Mode::Causal => {
            let h = symmetrize(&(Mat::identity(m, m) + b_u.transpose() * p * b_u));
            let kv = solve(&h, &(b_u.transpose() * p), "I + B_uᵀPB_u")?;
            Ok((&kv * a, &kv * b_w))
        }
        Mode::StrictlyCausal => {
            let pbar = worst_case_value(p, b_w, gamma)?;
            let h = symmetrize(&(Mat::identity(m, m) + b_u.transpose() * &pbar * b_u));
            let kx = solve(&h, &(b_u.transpose() * &pbar * a), "I + B_uᵀP̄B_u")?;
            Ok((kx, Mat::zeros(m, b_w.ncols())))
        }
    }
}

fn solve_game(
    a: &Mat,
    b_u: &Mat,
    b_w: &Mat,
    q: &Mat,
    gamma: f64,
    report: &mut FeasibilityReport,
) -> Result<Option<IndefiniteDare>, ControlError> {
    match solve_indefinite_dare(a, b_u, b_w, q, gamma) {
        Ok(g) => {
            report.diagnostics.residual_norm = Some(g.solution.residual_norm);
            report.diagnostics.game_radius = Some(g.closed_loop_radius());
            report.diagnostics.min_eigenvalue_p = Some(g.min_eigenvalue_p);
            Ok(Some(g))
        }
        Err(NumericsError::NoSolution(msg)) | Err(NumericsError::Singular(msg)) => {
            report.diagnostics.message = Some(msg);
            report.fail(Condition::Solver);
            Ok(None)
        }
        Err(e) => Err(e.into()),
    }
}

/// Relative tolerance on P ⪰ 0.
const PSD_TOL: f64 = 1e-8;

/// H∞ state-feedback synthesis at level γ.
pub fn hinf_synthesize(plant: &ControlPlant, gamma: f64, mode: Mode) -> Result<Synthesis, ControlError> {
    let mut report = FeasibilityReport::new(gamma);
    if !(gamma > 0.0) {
        report.fail(Condition::Solver);
        report.diagnostics.message = Some("gamma must be positive".into());
        return Ok(Synthesis::Infeasible(report));
    }
    let b_u = plant.b_u_normalized();
    let Some(game) = solve_game(&plant.a, &b_u, &plant.b_w, &plant.q, gamma, &mut report)? else {
        return Ok(Synthesis::Infeasible(report));
    };
    if !game.stable {
        report.fail(Condition::Stability);
    }
    if !game.inertia_match() {
        report.fail(Condition::Inertia);
    }
    if !game.psd(PSD_TOL) {
        report.fail(Condition::Psd);
    }
    let p = &game.solution.p;
    if mode == Mode::StrictlyCausal {
        let (concave, convex) = strict_conditions(p, &b_u, &plant.b_w, gamma);
        if !concave {
            report.fail(Condition::StrictConcavity);
        }
        if !convex {
            report.fail(Condition::StrictConvexity);
        }
        let (lit_a, lit_b) = strict_conditions(p, &plant.b_w, &b_u, gamma);
        report.diagnostics.strict_literal = Some(lit_a && lit_b);
    }
    if !report.feasible {
        return Ok(Synthesis::Infeasible(report));
    }
    let (kx, kw) = game_gains(&plant.a, &b_u, &plant.b_w, p, gamma, mode)?;
    Ok(Synthesis::Feasible(state_feedback(plant, PolicyKind::Hinf, mode, Some(gamma), kx, kw, report)))
}

fn state_feedback(
    plant: &ControlPlant,
    kind: PolicyKind,
    mode: Mode,
    gamma: Option<f64>,
    kx_v: Mat,
    kw_v: Mat,
    mut report: FeasibilityReport,
) -> CausalPolicy {
    let kx = &plant.r_inv_half * kx_v;
    let kw = &plant.r_inv_half * kw_v;
    report.diagnostics.controller_radius = Some(spectral_radius(&(&plant.a - &plant.b_u * &kx)));
    CausalPolicy {
        kind,
        mode,
        gamma,
        knu: Mat::zeros(plant.m(), 0),
        a_nu: Mat::zeros(0, 0),
        b_nu: Mat::zeros(0, plant.p()),
        nu: Vector::zeros(0),
        kx,
        kw,
        report,
    }
}

/// LQR: u = −(R + B_uᵀPB_u)⁻¹B_uᵀP(Ax + B_w w); the strictly causal variant
/// drops the w term.
pub fn h2_synthesize(plant: &ControlPlant, mode: Mode) -> Result<CausalPolicy, ControlError> {
    let b_u = plant.b_u_normalized();
    let m = plant.m();
    let sol = solve_dare(&plant.a, &b_u, &plant.q, &Mat::identity(m, m))?;
    let h = symmetrize(&(Mat::identity(m, m) + b_u.transpose() * &sol.p * &b_u));
    let kv = solve(&h, &(b_u.transpose() * &sol.p), "I + B_uᵀPB_u")?;
    let kw = match mode {
        Mode::Causal => &kv * &plant.b_w,
        Mode::StrictlyCausal => Mat::zeros(m, plant.p()),
    };
    let mut report = FeasibilityReport::new(f64::INFINITY);
    report.diagnostics.residual_norm = Some(sol.residual_norm);
    report.diagnostics.min_eigenvalue_p = Some(min_eigenvalue(&sol.p));
    Ok(state_feedback(plant, PolicyKind::H2, mode, None, &kv * &plant.a, kw, report))
}

/// The synthetic plant on which pathlength synthesis reduces to H∞ control
/// at level 1. State ξ = [x; η], where η tracks the w′ generator state.
#[derive(Debug, Clone)]
pub struct SyntheticPlant {
    pub a_hat: Mat,
    pub b_hat_u: Mat,
    pub b_hat_w: Mat,
    pub l_hat: Mat,
    pub sigma2_half: Mat,
}

pub fn synthetic_plant(plant: &ControlPlant, fac: &ControlFactorization) -> Result<SyntheticPlant, ControlError> {
    let (n, m, p) = (plant.n(), plant.m(), plant.p());
    let k = n + p;
    let s2_half = sqrtm_psd(&fac.sigma2c);
    let s2_inv_half = inv_sqrtm_pd(&fac.sigma2c)?;
    let inner = &fac.a_tilde - &fac.b_tilde_w * &fac.k2c;
    let mut a_hat = Mat::zeros(n + k, n + k);
    a_hat.view_mut((0, 0), (n, n)).copy_from(&plant.a);
    a_hat.view_mut((0, n), (n, k)).copy_from(&(-(&plant.b_w * &fac.k2c)));
    a_hat.view_mut((n, n), (k, k)).copy_from(&inner);
    let mut b_hat_w = Mat::zeros(n + k, p);
    b_hat_w.view_mut((0, 0), (n, p)).copy_from(&(&plant.b_w * &s2_inv_half));
    b_hat_w.view_mut((n, 0), (k, p)).copy_from(&(&fac.b_tilde_w * &s2_inv_half));
    let mut b_hat_u = Mat::zeros(n + k, m);
    b_hat_u.view_mut((0, 0), (n, m)).copy_from(&plant.b_u_normalized());
    let mut l_hat = Mat::zeros(n, n + k);
    l_hat.view_mut((0, 0), (n, n)).copy_from(&plant.l);
    Ok(SyntheticPlant { a_hat, b_hat_u, b_hat_w, l_hat, sigma2_half: s2_half })
}

/// Tolerance on game closed-loop eigenvalue moduli. The synthetic game is
/// marginal at z = 1 by construction, so |λ| ≤ 1 + tol is required rather
/// than strict stability.
const MARGINAL_TOL: f64 = 1e-6;

/// Pathlength-optimal synthesis at level γ.
pub fn pathlength_synthesize(plant: &ControlPlant, gamma: f64, mode: Mode) -> Result<Synthesis, ControlError> {
    let mut report = FeasibilityReport::new(gamma);
    let fac = match factor_control(plant, gamma) {
        Ok(f) => f,
        Err(FactorError::Infeasible(msg)) => {
            report.diagnostics.message = Some(msg);
            report.fail(Condition::Factorization);
            return Ok(Synthesis::Infeasible(report));
        }
        Err(e) => return Err(e.into()),
    };
    report.diagnostics.factor_inverse_radius = Some(fac.inverse_radius);
    if !fac.inverse_stable() {
        report.fail(Condition::Factorization);
        return Ok(Synthesis::Infeasible(report));
    }
    let syn = synthetic_plant(plant, &fac)?;
    let q_hat = syn.l_hat.transpose() * &syn.l_hat;
    let Some(game) = solve_game(&syn.a_hat, &syn.b_hat_u, &syn.b_hat_w, &q_hat, 1.0, &mut report)? else {
        return Ok(Synthesis::Infeasible(report));
    };
    if game.closed_loop_radius() > 1.0 + MARGINAL_TOL {
        report.fail(Condition::Stability);
    }
    if !game.inertia_match() {
        report.fail(Condition::Inertia);
    }
    if !game.psd(PSD_TOL) {
        report.fail(Condition::Psd);
    }
    let p_hat = &game.solution.p;
    if mode == Mode::StrictlyCausal {
        let (concave, convex) = strict_conditions(p_hat, &syn.b_hat_u, &syn.b_hat_w, 1.0);
        if !concave {
            report.fail(Condition::StrictConcavity);
        }
        if !convex {
            report.fail(Condition::StrictConvexity);
        }
        let (alt_a, alt_b) = strict_conditions(p_hat, &syn.b_hat_u, &syn.b_hat_w, gamma);
        report.diagnostics.strict_with_call_gamma = Some(alt_a && alt_b);
        let (lit_a, lit_b) = strict_conditions(p_hat, &syn.b_hat_w, &syn.b_hat_u, 1.0);
        report.diagnostics.strict_literal = Some(lit_a && lit_b);
    }
    if !report.feasible {
        return Ok(Synthesis::Infeasible(report));
    }

    let n = plant.n();
    let k = n + plant.p();
    let (k_xi, k_wp) = game_gains(&syn.a_hat, &syn.b_hat_u, &syn.b_hat_w, p_hat, 1.0, mode)?;
    // v = −K_ξ[x; ν] − K_w′w′ with w′ = Σ₂^{1/2}(K₂ν + w).
    let kw_v = &k_wp * &syn.sigma2_half;
    let kx_v = k_xi.columns(0, n).into_owned();
    let knu_v = k_xi.columns(n, k).into_owned() + &kw_v * &fac.k2c;
    let kx = &plant.r_inv_half * kx_v;
    report.diagnostics.controller_radius = Some(spectral_radius(&(&plant.a - &plant.b_u * &kx)));
    Ok(Synthesis::Feasible(CausalPolicy {
        kind: PolicyKind::Pathlength,
        mode,
        gamma: Some(gamma),
        kx,
        knu: &plant.r_inv_half * knu_v,
        kw: &plant.r_inv_half * kw_v,
        a_nu: fac.a_tilde.clone(),
        b_nu: fac.b_tilde_w.clone(),
        nu: Vector::zeros(k),
        report,
    }))
}

/// Clairvoyant finite-horizon optimum given all of w.
#[derive(Debug, Clone)]
pub struct OfflineSolution {
    pub controls: Signal,
    /// x_0, ..., x_T.
    pub states: Signal,
    pub cost: f64,
}

/// Exact minimizer of Σ_{t<T}(x_tᵀQx_t + u_tᵀRu_t) with x_0 = 0 and the
/// whole of w known in advance.
pub fn offline_optimal(plant: &ControlPlant, w: &Signal) -> Result<OfflineSolution, ControlError> {
    if w.dim() != plant.p() {
        return Err(ControlError::DimensionMismatch(format!(
            "disturbance has dimension {}, plant expects {}",
            w.dim(),
            plant.p()
        )));
    }
    let sweep = Tracking { a: &plant.a, b: &plant.b_u, q: &plant.q, r: &plant.r, horizon: w.len() };
    let traj = sweep.solve(|_| None, |t| Some(&plant.b_w * w.get(t)))?;
    let cost = traj
        .controls
        .iter()
        .zip(&traj.states)
        .map(|(u, x)| x.dot(&(&plant.q * x)) + u.dot(&(&plant.r * u)))
        .sum();
    Ok(OfflineSolution {
        controls: Signal::from_samples(plant.m(), traj.controls),
        states: Signal::from_samples(plant.n(), traj.states),
        cost,
    })
}

#[derive(Debug, Clone)]
pub struct Bisection {
    pub gamma: f64,
    /// Largest infeasible level seen.
    pub lower: f64,
    pub evaluations: usize,
    /// Set when a level above the returned γ was found infeasible.
    pub non_monotone: bool,
}

/// Smallest feasible γ of a monotone predicate, to relative tolerance
/// `rel_tol`. The bracket is widened by factors of 10 when needed.
pub fn bisect_gamma(
    mut feasible: impl FnMut(f64) -> bool,
    lo: f64,
    hi: f64,
    rel_tol: f64,
) -> Result<Bisection, ControlError> {
    const CAP: f64 = 1e8;
    const FLOOR: f64 = 1e-12;
    let mut evaluations = 0;
    let mut eval = |g: f64, n: &mut usize| {
        *n += 1;
        feasible(g)
    };
    let (mut lo, mut hi) = (lo, hi);
    while !eval(hi, &mut evaluations) {
        lo = hi;
        hi *= 10.0;
        if hi > CAP {
            return Err(ControlError::NoFeasiblePoint(CAP));
        }
    }
    let top = hi;
    while eval(lo, &mut evaluations) {
        hi = lo;
        lo /= 10.0;
        if lo < FLOOR {
            return Ok(Bisection { gamma: hi, lower: 0.0, evaluations, non_monotone: false });
        }
    }
    while hi - lo > rel_tol * hi {
        let mid = 0.5 * (lo + hi);
        if eval(mid, &mut evaluations) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let non_monotone = (1..=4)
        .map(|k| hi * (top / hi).powf(k as f64 / 4.0))
        .any(|g| !eval(g, &mut evaluations));
    Ok(Bisection { gamma: hi, lower: lo, evaluations, non_monotone })
}

/// Default bracket and tolerance for γ searches.
pub const BISECT_LO: f64 = 1e-3;
pub const BISECT_HI: f64 = 1e3;
pub const BISECT_TOL: f64 = 1e-3;

pub fn hinf_gamma_star(plant: &ControlPlant, mode: Mode) -> Result<Bisection, ControlError> {
    bisect_gamma(
        |g| hinf_synthesize(plant, g, mode).map(|s| s.is_feasible()).unwrap_or(false),
        BISECT_LO,
        BISECT_HI,
        BISECT_TOL,
    )
}

pub fn pathlength_gamma_star(plant: &ControlPlant, mode: Mode) -> Result<Bisection, ControlError> {
    bisect_gamma(
        |g| pathlength_synthesize(plant, g, mode).map(|s| s.is_feasible()).unwrap_or(false),
        BISECT_LO,
        BISECT_HI,
        BISECT_TOL,
    )
}
