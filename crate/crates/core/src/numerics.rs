//! Matrix-equation solvers: stabilizing Riccati equations (definite and
//! indefinite), Stein and Stein–Sylvester equations, and spectral utilities.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use thiserror::Error;

pub type Mat = DMatrix<f64>;
pub type Vector = DVector<f64>;
pub type CMat = DMatrix<Complex64>;

/// Relative change on the doubling iterate below which the iteration stops.
pub const DOUBLING_TOL: f64 = 1e-12;
/// Iteration cap for the doubling algorithm.
pub const DOUBLING_MAX_ITER: usize = 200;
/// Residual acceptance: ‖residual‖_F < RESIDUAL_TOL·(1 + ‖P‖_F).
pub const RESIDUAL_TOL: f64 = 1e-9;
/// Margin used when declaring a closed loop stable.
pub const STABILITY_MARGIN: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NumericsError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("no stabilizing solution: {0}")]
    NoStabilizingSolution(String),
    #[error("riccati iteration failed: {0}")]
    NoSolution(String),
    #[error("spectral radius {0} is not below 1")]
    UnstableF(f64),
    #[error("singular linear equation")]
    SingularEquation,
    #[error("matrix is not hermitian (asymmetry {0:e})")]
    NotHermitian(f64),
    #[error("matrix has non-finite entries")]
    NonFinite,
    #[error("singular matrix: {0}")]
    Singular(String),
}

/// Solution of a Riccati equation together with the derived gain data.
#[derive(Debug, Clone)]
pub struct RiccatiSolution {
    pub p: Mat,
    pub gain: Mat,
    pub innovation: Mat,
    pub closed_loop: Mat,
    pub residual_norm: f64,
    pub iterations: usize,
}

impl RiccatiSolution {
    pub fn closed_loop_radius(&self) -> f64 {
        spectral_radius(&self.closed_loop)
    }
}

/// Eigenvalue sign counts of a Hermitian matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Inertia {
    pub n_pos: usize,
    pub n_neg: usize,
    pub n_zero: usize,
}

impl Inertia {
    pub fn dim(&self) -> usize {
        self.n_pos + self.n_neg + self.n_zero
    }
}

/// Result of an indefinite (game) Riccati solve with the data needed to
/// judge feasibility. The caller decides which conditions to enforce.
#[derive(Debug, Clone)]
pub struct IndefiniteDare {
    pub solution: RiccatiSolution,
    pub r_inertia: Inertia,
    pub h_inertia: Inertia,
    pub closed_loop_eigenvalues: Vec<Complex64>,
    pub stable: bool,
    pub min_eigenvalue_p: f64,
}

impl IndefiniteDare {
    pub fn inertia_match(&self) -> bool {
        self.r_inertia == self.h_inertia
    }

    pub fn closed_loop_radius(&self) -> f64 {
        self.closed_loop_eigenvalues
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    /// P ⪰ 0 up to a relative tolerance.
    pub fn psd(&self, rel_tol: f64) -> bool {
        self.min_eigenvalue_p >= -rel_tol * (1.0 + self.solution.p.norm())
    }
}

pub fn check_finite(m: &Mat) -> Result<(), NumericsError> {
    if m.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(NumericsError::NonFinite)
    }
}

pub fn symmetrize(m: &Mat) -> Mat {
    (m + m.transpose()) * 0.5
}

pub fn to_complex(m: &Mat) -> CMat {
    m.map(|x| Complex64::new(x, 0.0))
}

pub fn eigenvalues(m: &Mat) -> Vec<Complex64> {
    if m.nrows() == 0 {
        return Vec::new();
    }
    m.complex_eigenvalues().iter().copied().collect()
}

pub fn spectral_radius(m: &Mat) -> f64 {
    eigenvalues(m).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn max_singular_value(m: &Mat) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.singular_values().max()
}

fn asymmetry(m: &Mat) -> f64 {
    (m - m.transpose()).amax()
}

/// Eigenvalues of a symmetric matrix in ascending order.
pub fn symmetric_eigenvalues(m: &Mat) -> Vec<f64> {
    if m.nrows() == 0 {
        return Vec::new();
    }
    let mut ev: Vec<f64> = symmetrize(m).symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    ev
}

pub fn min_eigenvalue(m: &Mat) -> f64 {
    symmetric_eigenvalues(m).first().copied().unwrap_or(0.0)
}

pub fn inertia(m: &Mat) -> Result<Inertia, NumericsError> {
    if !m.is_square() {
        return Err(NumericsError::DimensionMismatch(format!(
            "inertia of a {}x{} matrix",
            m.nrows(),
            m.ncols()
        )));
    }
    let asym = asymmetry(m);
    if asym > 1e-8 * (1.0 + m.amax()) {
        return Err(NumericsError::NotHermitian(asym));
    }
    let ev = symmetric_eigenvalues(m);
    let scale = ev.iter().fold(1.0f64, |acc, x| acc.max(x.abs()));
    let tol = 1e-10 * scale;
    let mut out = Inertia { n_pos: 0, n_neg: 0, n_zero: 0 };
    for x in ev {
        if x > tol {
            out.n_pos += 1;
        } else if x < -tol {
            out.n_neg += 1;
        } else {
            out.n_zero += 1;
        }
    }
    Ok(out)
}

/// Symmetric square root of a PSD matrix. Tiny negative eigenvalues from
/// roundoff are clamped to zero.
pub fn sqrtm_psd(m: &Mat) -> Mat {
    if m.nrows() == 0 {
        return m.clone();
    }
    let eig = symmetrize(m).symmetric_eigen();
    let d = eig.eigenvalues.map(|x| x.max(0.0).sqrt());
    &eig.eigenvectors * Mat::from_diagonal(&d) * eig.eigenvectors.transpose()
}

/// Inverse of the symmetric square root of a PD matrix.
pub fn inv_sqrtm_pd(m: &Mat) -> Result<Mat, NumericsError> {
    if m.nrows() == 0 {
        return Ok(m.clone());
    }
    let eig = symmetrize(m).symmetric_eigen();
    let scale = eig.eigenvalues.amax().max(f64::MIN_POSITIVE);
    if eig.eigenvalues.iter().any(|&x| x <= 1e-14 * scale) {
        return Err(NumericsError::Singular("matrix is not positive definite".into()));
    }
    let d = eig.eigenvalues.map(|x| 1.0 / x.sqrt());
    Ok(&eig.eigenvectors * Mat::from_diagonal(&d) * eig.eigenvectors.transpose())
}

pub fn inverse(m: &Mat, what: &str) -> Result<Mat, NumericsError> {
    if m.nrows() == 0 {
        return Ok(m.clone());
    }
    let inv = m
        .clone()
        .try_inverse()
        .ok_or_else(|| NumericsError::Singular(what.to_string()))?;
    check_finite(&inv).map_err(|_| NumericsError::Singular(what.to_string()))?;
    Ok(inv)
}

/// Solves M·X = B via LU.
pub fn solve(m: &Mat, b: &Mat, what: &str) -> Result<Mat, NumericsError> {
    if m.nrows() == 0 {
        return Ok(Mat::zeros(0, b.ncols()));
    }
    let x = m
        .clone()
        .lu()
        .solve(b)
        .ok_or_else(|| NumericsError::Singular(what.to_string()))?;
    check_finite(&x).map_err(|_| NumericsError::Singular(what.to_string()))?;
    Ok(x)
}

fn dims(cond: bool, msg: impl FnOnce() -> String) -> Result<(), NumericsError> {
    if cond {
        Ok(())
    } else {
        Err(NumericsError::DimensionMismatch(msg()))
    }
}

/// Structured doubling on (A, G, H). Returns the last H_k, the iteration
/// count, and whether the change tolerance was met before the cap.
fn doubling(a: Mat, g: Mat, h: Mat) -> Result<(Mat, usize, bool), NumericsError> {
    let n = a.nrows();
    let eye = Mat::identity(n, n);
    let (mut ak, mut gk, mut hk) = (a, g, h);
    for it in 1..=DOUBLING_MAX_ITER {
        let w = &eye + &gk * &hk;
        let lu = w.lu();
        let w_a = lu
            .solve(&ak)
            .ok_or_else(|| NumericsError::NoSolution(format!("singular pivot at step {it}")))?;
        let w_g = lu
            .solve(&gk)
            .ok_or_else(|| NumericsError::NoSolution(format!("singular pivot at step {it}")))?;
        let a_next = &ak * &w_a;
        let g_next = symmetrize(&(&gk + &ak * &w_g * ak.transpose()));
        let h_next = symmetrize(&(&hk + ak.transpose() * &hk * &w_a));
        if !(a_next.iter().chain(g_next.iter()).chain(h_next.iter())).all(|x| x.is_finite()) {
            return Err(NumericsError::NoSolution(format!("iterates diverged at step {it}")));
        }
        let change = (&h_next - &hk).norm() / (1.0 + h_next.norm());
        ak = a_next;
        gk = g_next;
        hk = h_next;
        if change < DOUBLING_TOL {
            return Ok((hk, it, true));
        }
    }
    Ok((hk, DOUBLING_MAX_ITER, false))
}

/// Solves P = Q + AᵀPA − (AᵀPB + S)(R + BᵀPB)⁻¹(BᵀPA + Sᵀ) without
/// requiring the closed loop to be stable. R may be indefinite.
///
/// The solution is accepted when the residual is below tolerance, even if
/// the doubling iteration hit its cap (marginal problems converge linearly).
pub fn solve_dare_general(
    a: &Mat,
    b: &Mat,
    q: &Mat,
    r: &Mat,
    s: Option<&Mat>,
) -> Result<RiccatiSolution, NumericsError> {
    let n = a.nrows();
    let m = b.ncols();
    dims(a.is_square(), || format!("A is {}x{}", a.nrows(), a.ncols()))?;
    dims(b.nrows() == n, || format!("B has {} rows, expected {n}", b.nrows()))?;
    dims(q.shape() == (n, n), || format!("Q is {:?}, expected ({n}, {n})", q.shape()))?;
    dims(r.shape() == (m, m), || format!("R is {:?}, expected ({m}, {m})", r.shape()))?;
    if let Some(s) = s {
        dims(s.shape() == (n, m), || format!("S is {:?}, expected ({n}, {m})", s.shape()))?;
    }
    for x in [a, b, q, r] {
        check_finite(x)?;
    }
    let zero_s = Mat::zeros(n, m);
    let s = s.unwrap_or(&zero_s);

    let r_inv = inverse(r, "R")?;
    let a0 = a - b * &r_inv * s.transpose();
    let h0 = symmetrize(&(q - s * &r_inv * s.transpose()));
    let g0 = symmetrize(&(b * &r_inv * b.transpose()));
    let (p, iterations, _converged) = doubling(a0, g0, h0)?;

    let innovation = symmetrize(&(r + b.transpose() * &p * b));
    let cross = b.transpose() * &p * a + s.transpose();
    let gain = solve(&innovation, &cross, "innovation matrix R + BᵀPB")
        .map_err(|e| NumericsError::NoSolution(e.to_string()))?;
    let closed_loop = a - b * &gain;
    let residual = q + a.transpose() * &p * a - (a.transpose() * &p * b + s) * &gain - &p;
    let residual_norm = residual.norm();
    if !(residual_norm < RESIDUAL_TOL * (1.0 + p.norm())) {
        return Err(NumericsError::NoSolution(format!(
            "residual {residual_norm:e} after {iterations} steps"
        )));
    }
    Ok(RiccatiSolution { p, gain, innovation, closed_loop, residual_norm, iterations })
}

fn require_stabilizing(sol: RiccatiSolution) -> Result<RiccatiSolution, NumericsError> {
    let rho = sol.closed_loop_radius();
    if rho < 1.0 - STABILITY_MARGIN {
        Ok(sol)
    } else {
        Err(NumericsError::NoStabilizingSolution(format!(
            "closed-loop spectral radius {rho}"
        )))
    }
}

/// Stabilizing solution of P = Q + AᵀPA − AᵀPB(R + BᵀPB)⁻¹BᵀPA.
pub fn solve_dare(a: &Mat, b: &Mat, q: &Mat, r: &Mat) -> Result<RiccatiSolution, NumericsError> {
    let sol = solve_dare_general(a, b, q, r, None).map_err(as_no_stabilizing)?;
    require_stabilizing(sol)
}

/// Stabilizing solution of the Riccati equation with cross term S.
pub fn solve_dare_cross(
    a: &Mat,
    b: &Mat,
    q: &Mat,
    r: &Mat,
    s: &Mat,
) -> Result<RiccatiSolution, NumericsError> {
    let sol = solve_dare_general(a, b, q, r, Some(s)).map_err(as_no_stabilizing)?;
    require_stabilizing(sol)
}

fn as_no_stabilizing(e: NumericsError) -> NumericsError {
    match e {
        NumericsError::NoSolution(msg) => NumericsError::NoStabilizingSolution(msg),
        other => other,
    }
}

/// Game Riccati equation with B̃ = [B_u, B_w] and R̃ = diag(I, −γ²I).
pub fn solve_indefinite_dare(
    a: &Mat,
    b_u: &Mat,
    b_w: &Mat,
    q: &Mat,
    gamma: f64,
) -> Result<IndefiniteDare, NumericsError> {
    let n = a.nrows();
    dims(b_u.nrows() == n && b_w.nrows() == n, || {
        format!("B_u has {} rows, B_w has {} rows, expected {n}", b_u.nrows(), b_w.nrows())
    })?;
    let (m, p) = (b_u.ncols(), b_w.ncols());
    let mut b = Mat::zeros(n, m + p);
    b.view_mut((0, 0), (n, m)).copy_from(b_u);
    b.view_mut((0, m), (n, p)).copy_from(b_w);
    let mut r = Mat::zeros(m + p, m + p);
    for i in 0..m {
        r[(i, i)] = 1.0;
    }
    for i in m..m + p {
        r[(i, i)] = -gamma * gamma;
    }
    let solution = solve_dare_general(a, &b, q, &r, None)?;
    let r_inertia = inertia(&r)?;
    let h_inertia = inertia(&solution.innovation)?;
    let closed_loop_eigenvalues = eigenvalues(&solution.closed_loop);
    let rho = closed_loop_eigenvalues.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let min_eigenvalue_p = min_eigenvalue(&solution.p);
    Ok(IndefiniteDare {
        solution,
        r_inertia,
        h_inertia,
        closed_loop_eigenvalues,
        stable: rho < 1.0 - STABILITY_MARGIN,
        min_eigenvalue_p,
    })
}

/// Dimension above which Stein equations switch from the Kronecker solve to
/// the doubling series.
const KRONECKER_LIMIT: usize = 50;

/// Unique X with X = FᵀXF + W, for ρ(F) < 1.
pub fn solve_stein(f: &Mat, w: &Mat) -> Result<Mat, NumericsError> {
    let n = f.nrows();
    dims(f.is_square() && w.shape() == (n, n), || {
        format!("F is {:?}, W is {:?}", f.shape(), w.shape())
    })?;
    let rho = spectral_radius(f);
    if rho >= 1.0 {
        return Err(NumericsError::UnstableF(rho));
    }
    let x = if n <= KRONECKER_LIMIT {
        let ft = f.transpose();
        solve_stein_sylvester(&ft, &ft, w)?
    } else {
        stein_doubling(f, w)
    };
    Ok(if asymmetry(w) <= 1e-14 * (1.0 + w.amax()) { symmetrize(&x) } else { x })
}

/// Unique X with X = FXFᵀ + W, for ρ(F) < 1.
pub fn solve_stein_transposed(f: &Mat, w: &Mat) -> Result<Mat, NumericsError> {
    solve_stein(&f.transpose(), w)
}

fn stein_doubling(f: &Mat, w: &Mat) -> Mat {
    let mut x = w.clone();
    let mut ak = f.clone();
    for _ in 0..DOUBLING_MAX_ITER {
        let next = &x + ak.transpose() * &x * &ak;
        let change = (&next - &x).norm() / (1.0 + next.norm());
        x = next;
        ak = &ak * &ak;
        if change < 1e-16 {
            break;
        }
    }
    x
}

/// X with X = A1·X·A2ᵀ + C, via vec(A1 X A2ᵀ) = (A2 ⊗ A1) vec X.
pub fn solve_stein_sylvester(a1: &Mat, a2: &Mat, c: &Mat) -> Result<Mat, NumericsError> {
    let (n1, n2) = (a1.nrows(), a2.nrows());
    dims(a1.is_square() && a2.is_square() && c.shape() == (n1, n2), || {
        format!("A1 {:?}, A2 {:?}, C {:?}", a1.shape(), a2.shape(), c.shape())
    })?;
    if n1 == 0 || n2 == 0 {
        return Ok(c.clone());
    }
    let nn = n1 * n2;
    let lhs = Mat::identity(nn, nn) - a2.kronecker(a1);
    let rhs = Mat::from_column_slice(nn, 1, c.as_slice());
    let x = lhs.lu().solve(&rhs).ok_or(NumericsError::SingularEquation)?;
    check_finite(&x).map_err(|_| NumericsError::SingularEquation)?;
    Ok(Mat::from_column_slice(n1, n2, x.as_slice()))
}

/// PBH test: no eigenvalue λ of A with |λ| ≥ 1 leaves [A − λI, B] rank
/// deficient. Rank tolerance is 1e-8·max(‖A‖₂, 1).
pub fn is_stabilizable(a: &Mat, b: &Mat) -> bool {
    let n = a.nrows();
    if n == 0 {
        return true;
    }
    let tol = 1e-8 * max_singular_value(a).max(1.0);
    let ac = to_complex(a);
    let bc = to_complex(b);
    eigenvalues(a).into_iter().filter(|l| l.norm() >= 1.0 - STABILITY_MARGIN).all(|l| {
        let mut m = CMat::zeros(n, n + b.ncols());
        m.view_mut((0, 0), (n, n)).copy_from(&(&ac - CMat::identity(n, n) * l));
        m.view_mut((0, n), (n, b.ncols())).copy_from(&bc);
        m.singular_values().min() > tol
    })
}

/// PBH detectability of (A, C), the dual of [`is_stabilizable`].
pub fn is_detectable(a: &Mat, c: &Mat) -> bool {
    is_stabilizable(&a.transpose(), &c.transpose())
}
