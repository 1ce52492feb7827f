//! Canonical spectral factorizations used by the filter and controller
//! constructions.

use num_complex::Complex64;
use thiserror::Error;

use crate::control::ControlPlant;
use crate::numerics::{
    inv_sqrtm_pd, solve_dare, solve_dare_cross, solve_dare_general, solve_stein_sylvester,
    solve_stein_transposed, spectral_radius, sqrtm_psd, symmetrize, Mat, NumericsError,
};
use crate::xfer::{StateSpace, XferError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FactorError {
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error(transparent)]
    Xfer(#[from] XferError),
    #[error("infeasible: {0}")]
    Infeasible(String),
}

/// Factorizations of I + H*H and I + HH* for H(z) = C(zI − A)⁻¹B.
#[derive(Debug, Clone)]
pub struct IoFactorization {
    /// Δ₁ with Δ₁*Δ₁ = I + H*H.
    pub delta1: StateSpace,
    /// Δ₂ with Δ₂Δ₂* = I + HH*.
    pub delta2: StateSpace,
    pub k1: Mat,
    pub k2: Mat,
    pub sigma1: Mat,
    pub sigma2: Mat,
    pub p1: Mat,
    pub p2: Mat,
    /// A − BK₁.
    pub a1: Mat,
    /// A − K₂C.
    pub a2: Mat,
}

pub fn factor_io(a: &Mat, b: &Mat, c: &Mat) -> Result<IoFactorization, FactorError> {
    let (m, p) = (b.ncols(), c.nrows());
    let first = solve_dare(a, b, &(c.transpose() * c), &Mat::identity(m, m))?;
    let sigma1 = first.innovation.clone();
    let k1 = first.gain.clone();
    let s1_half = sqrtm_psd(&sigma1);
    let delta1 = StateSpace::new(a.clone(), b.clone(), &s1_half * &k1, s1_half)?;

    let second = solve_dare(&a.transpose(), &c.transpose(), &(b * b.transpose()), &Mat::identity(p, p))?;
    let sigma2 = second.innovation.clone();
    let k2 = second.gain.transpose();
    let s2_half = sqrtm_psd(&sigma2);
    let delta2 = StateSpace::new(a.clone(), &k2 * &s2_half, c.clone(), s2_half)?;

    Ok(IoFactorization {
        delta1,
        delta2,
        a1: first.closed_loop,
        a2: second.closed_loop.transpose(),
        k1,
        k2,
        sigma1,
        sigma2,
        p1: first.p,
        p2: second.p,
    })
}

/// Factorization Δ₃*Δ₃ = γ⁻²I + γ⁻⁴RR* with R = JΔ₁⁻¹, J = L(zI − A)⁻¹B.
#[derive(Debug, Clone)]
pub struct CenterFactorization {
    pub delta3: StateSpace,
    pub k3: Mat,
    pub sigma3: Mat,
    pub p3: Mat,
    pub w1: Mat,
    pub sigma0: Mat,
    /// A₁W₁Lᵀ, the input matrix of Δ₃.
    pub b3: Mat,
    pub gamma: f64,
}

pub fn factor_center(
    io: &IoFactorization,
    b: &Mat,
    l: &Mat,
    gamma: f64,
) -> Result<CenterFactorization, FactorError> {
    if !(gamma > 0.0) {
        return Err(FactorError::Infeasible(format!("gamma must be positive, got {gamma}")));
    }
    let r = l.nrows();
    let a1 = &io.a1;
    let sigma1_inv = crate::numerics::inverse(&io.sigma1, "Σ₁")?;
    let forcing = symmetrize(&(b * sigma1_inv * b.transpose() / (gamma * gamma)));
    let w1 = solve_stein_transposed(a1, &forcing)?;
    let sigma0 = symmetrize(&(Mat::identity(r, r) + l * &w1 * l.transpose()));
    let b3 = a1 * &w1 * l.transpose();
    let n = a1.nrows();
    let sol = solve_dare_cross(a1, &b3, &Mat::zeros(n, n), &sigma0, &l.transpose())?;
    let sigma3 = sol.innovation.clone();
    let s3_half = sqrtm_psd(&sigma3) / gamma;
    let delta3 = StateSpace::new(a1.clone(), b3.clone(), &s3_half * &sol.gain, s3_half)?;
    Ok(CenterFactorization {
        delta3,
        k3: sol.gain,
        sigma3,
        p3: sol.p,
        w1,
        sigma0,
        b3,
        gamma,
    })
}

/// Splitting of Δ₃(z)Q(z), Q = JH*Δ₂⁻*, into a constant, a causal part
/// and a strictly anticausal part.
#[derive(Debug, Clone)]
pub struct QDecomposition {
    pub a_hat: Mat,
    pub b_hat: Mat,
    pub l_hat: Mat,
    pub w2: Mat,
    /// CᵀΣ₂^{-1/2}.
    pub g: Mat,
    /// L̂W₂G.
    pub constant_term: Mat,
    /// L̂(zI − Â)⁻¹ÂW₂G.
    pub causal_part: StateSpace,
    /// L̂W₂A₂ᵀ(z⁻¹I − A₂ᵀ)⁻¹G, stored as a realization in the variable z⁻¹.
    pub anticausal_part: StateSpace,
    /// Δ₃(1)Q(1); `None` when z = 1 is a pole of the causal part.
    pub delta3q_at_1: Option<Mat>,
}

impl QDecomposition {
    /// Sum of the three parts at z.
    pub fn evaluate(&self, z: Complex64) -> Result<crate::numerics::CMat, XferError> {
        let k = crate::numerics::to_complex(&self.constant_term);
        let anti = self.anticausal_part.evaluate(Complex64::new(1.0, 0.0) / z)?;
        Ok(k + self.causal_part.evaluate(z)? + anti)
    }
}

pub fn decompose_q(
    io: &IoFactorization,
    center: &CenterFactorization,
    a: &Mat,
    b: &Mat,
    c: &Mat,
    l: &Mat,
) -> Result<QDecomposition, FactorError> {
    let n = a.nrows();
    let r = l.nrows();
    let gamma = center.gamma;
    let s3_half = sqrtm_psd(&center.sigma3) / gamma;

    let mut a_hat = Mat::zeros(2 * n, 2 * n);
    a_hat.view_mut((0, 0), (n, n)).copy_from(&io.a1);
    a_hat.view_mut((0, n), (n, n)).copy_from(&(&center.b3 * l));
    a_hat.view_mut((n, n), (n, n)).copy_from(a);
    let mut b_hat = Mat::zeros(2 * n, b.ncols());
    b_hat.view_mut((n, 0), (n, b.ncols())).copy_from(b);
    let mut l_hat = Mat::zeros(r, 2 * n);
    l_hat.view_mut((0, 0), (r, n)).copy_from(&(&s3_half * &center.k3));
    l_hat.view_mut((0, n), (r, n)).copy_from(&(&s3_half * l));

    let w2 = solve_stein_sylvester(&a_hat, &io.a2, &(&b_hat * b.transpose()))?;
    let g = c.transpose() * inv_sqrtm_pd(&io.sigma2)?;
    let p = c.nrows();

    let constant_term = &l_hat * &w2 * &g;
    let causal_part =
        StateSpace::new(a_hat.clone(), &a_hat * &w2 * &g, l_hat.clone(), Mat::zeros(r, p))?;
    let a2t = io.a2.transpose();
    let anticausal_part =
        StateSpace::new(a2t.clone(), g.clone(), &l_hat * &w2 * &a2t, Mat::zeros(r, p))?;

    let one = Complex64::new(1.0, 0.0);
    let delta3q_at_1 = match (causal_part.evaluate(one), anticausal_part.evaluate(one)) {
        (Ok(cz), Ok(az)) => Some(&constant_term + (cz + az).map(|x| x.re)),
        _ => None,
    };
    Ok(QDecomposition {
        a_hat,
        b_hat,
        l_hat,
        w2,
        g,
        constant_term,
        causal_part,
        anticausal_part,
        delta3q_at_1,
    })
}

/// Factorization Δ*Δ = γ²M*M + G*(I + FF*)⁻¹G with M = (1 − z⁻¹)I,
/// F = L(zI − A)⁻¹B_uR^{-1/2}, G = L(zI − A)⁻¹B_w.
#[derive(Debug, Clone)]
pub struct ControlFactorization {
    pub a_tilde: Mat,
    pub b_tilde_w: Mat,
    pub l_tilde: Mat,
    pub s_tilde: Mat,
    pub k1: Mat,
    pub sigma1: Mat,
    pub k2c: Mat,
    pub sigma2c: Mat,
    pub p2c: Mat,
    pub delta: StateSpace,
    pub delta_inverse: StateSpace,
    /// ρ(Ã − B̃_wK₂), the pole radius of Δ⁻¹.
    pub inverse_radius: f64,
    pub residual_norm: f64,
    pub gamma: f64,
}

impl ControlFactorization {
    pub fn inverse_stable(&self) -> bool {
        self.inverse_radius < 1.0
    }
}

pub fn factor_control(plant: &ControlPlant, gamma: f64) -> Result<ControlFactorization, FactorError> {
    if !(gamma > 0.0) {
        return Err(FactorError::Infeasible(format!("gamma must be positive, got {gamma}")));
    }
    let a = &plant.a;
    let n = plant.n();
    let p = plant.p();
    let l = &plant.l;
    let b_bar = plant.b_u_normalized();

    // Output-side factor of I + FF*: (I + L(zI−A)⁻¹K₁)Σ₁^{1/2}.
    let out = solve_dare(&a.transpose(), &l.transpose(), &(&b_bar * b_bar.transpose()), &Mat::identity(n, n))?;
    let sigma1 = out.innovation.clone();
    let k1 = out.gain.transpose();
    let a_k = a - &k1 * l;
    let s1_inv_half = inv_sqrtm_pd(&sigma1)?;

    let g2 = gamma * gamma;
    let mut a_tilde = Mat::zeros(n + p, n + p);
    a_tilde.view_mut((0, 0), (n, n)).copy_from(&a_k);
    let mut b_tilde_w = Mat::zeros(n + p, p);
    b_tilde_w.view_mut((0, 0), (n, p)).copy_from(&plant.b_w);
    b_tilde_w.view_mut((n, 0), (p, p)).copy_from(&(-Mat::identity(p, p)));
    let mut l_tilde = Mat::zeros(n + p, n + p);
    l_tilde.view_mut((0, 0), (n, n)).copy_from(&(&s1_inv_half * l));
    l_tilde.view_mut((n, n), (p, p)).copy_from(&(Mat::identity(p, p) * gamma));
    let mut s_tilde = Mat::zeros(n + p, p);
    s_tilde.view_mut((n, 0), (p, p)).copy_from(&(Mat::identity(p, p) * g2));

    let sol = solve_dare_general(
        &a_tilde,
        &b_tilde_w,
        &(l_tilde.transpose() * &l_tilde),
        &(Mat::identity(p, p) * g2),
        Some(&s_tilde),
    )
    .map_err(|e| FactorError::Infeasible(e.to_string()))?;
    let sigma2c = sol.innovation.clone();
    let s2_half = sqrtm_psd(&sigma2c);
    if inv_sqrtm_pd(&sigma2c).is_err() {
        return Err(FactorError::Infeasible("Σ₂ is not positive definite".into()));
    }
    let delta = StateSpace::new(a_tilde.clone(), b_tilde_w.clone(), &s2_half * &sol.gain, s2_half)?;
    let delta_inverse = delta.invert()?;
    let inverse_radius = spectral_radius(&sol.closed_loop);
    Ok(ControlFactorization {
        a_tilde,
        b_tilde_w,
        l_tilde,
        s_tilde,
        k1,
        sigma1,
        k2c: sol.gain,
        sigma2c,
        p2c: sol.p,
        delta,
        delta_inverse,
        inverse_radius,
        residual_norm: sol.residual_norm,
        gamma,
    })
}
