//! Transfer matrices in state-space form, D + C(zI − A)⁻¹B.

use std::f64::consts::PI;

use num_complex::Complex64;
use thiserror::Error;

use crate::numerics::{check_finite, inverse, to_complex, CMat, Mat, NumericsError, Vector};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum XferError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("z = {0} is a pole of the realization")]
    PoleHit(Complex64),
    #[error("feedthrough matrix D is singular")]
    SingularD,
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

/// Realization of G(z) = D + C(zI − A)⁻¹B.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSpace {
    pub a: Mat,
    pub b: Mat,
    pub c: Mat,
    pub d: Mat,
}

impl StateSpace {
    pub fn new(a: Mat, b: Mat, c: Mat, d: Mat) -> Result<Self, XferError> {
        let n = a.nrows();
        if !a.is_square() || b.nrows() != n || c.ncols() != n || d.shape() != (c.nrows(), b.ncols())
        {
            return Err(XferError::DimensionMismatch(format!(
                "A {:?}, B {:?}, C {:?}, D {:?}",
                a.shape(),
                b.shape(),
                c.shape(),
                d.shape()
            )));
        }
        for m in [&a, &b, &c, &d] {
            check_finite(m)?;
        }
        Ok(StateSpace { a, b, c, d })
    }

    /// Static gain with no states.
    pub fn gain(d: Mat) -> Self {
        let (p, m) = d.shape();
        StateSpace { a: Mat::zeros(0, 0), b: Mat::zeros(0, m), c: Mat::zeros(p, 0), d }
    }

    pub fn identity(m: usize) -> Self {
        Self::gain(Mat::identity(m, m))
    }

    /// The scalar-per-channel difference 1 − z⁻¹ acting on m channels.
    pub fn difference(m: usize) -> Self {
        let eye = Mat::identity(m, m);
        StateSpace { a: Mat::zeros(m, m), b: eye.clone(), c: -&eye, d: eye }
    }

    pub fn states(&self) -> usize {
        self.a.nrows()
    }

    pub fn inputs(&self) -> usize {
        self.b.ncols()
    }

    pub fn outputs(&self) -> usize {
        self.c.nrows()
    }

    pub fn is_causal_stable(&self) -> bool {
        crate::numerics::spectral_radius(&self.a) < 1.0
    }

    pub fn poles(&self) -> Vec<Complex64> {
        crate::numerics::eigenvalues(&self.a)
    }

    /// D + C(zI − A)⁻¹B.
    pub fn evaluate(&self, z: Complex64) -> Result<CMat, XferError> {
        let n = self.states();
        let d = to_complex(&self.d);
        if n == 0 {
            return Ok(d);
        }
        let resolvent = CMat::identity(n, n) * z - to_complex(&self.a);
        let scale = 1.0 + z.norm() + self.a.amax();
        let sv = resolvent.clone().singular_values();
        if sv.min() < 1e-12 * scale {
            return Err(XferError::PoleHit(z));
        }
        let x = resolvent
            .lu()
            .solve(&to_complex(&self.b))
            .ok_or(XferError::PoleHit(z))?;
        Ok(d + to_complex(&self.c) * x)
    }

    /// G*(z⁻*): the conjugate transpose of G evaluated at 1/z̄.
    pub fn adjoint_evaluate(&self, z: Complex64) -> Result<CMat, XferError> {
        let w = Complex64::new(1.0, 0.0) / z.conj();
        Ok(self.evaluate(w)?.adjoint())
    }

    /// Realization of G⁻¹ for square invertible D.
    pub fn invert(&self) -> Result<StateSpace, XferError> {
        if !self.d.is_square() {
            return Err(XferError::SingularD);
        }
        let d_inv = inverse(&self.d, "D").map_err(|_| XferError::SingularD)?;
        let bd = &self.b * &d_inv;
        Ok(StateSpace {
            a: &self.a - &bd * &self.c,
            c: -&d_inv * &self.c,
            b: bd,
            d: d_inv,
        })
    }

    /// Realization of the product `self(z)·other(z)`: the input enters
    /// `other` first.
    pub fn compose(&self, other: &StateSpace) -> Result<StateSpace, XferError> {
        if self.inputs() != other.outputs() {
            return Err(XferError::DimensionMismatch(format!(
                "left factor takes {} inputs, right factor produces {} outputs",
                self.inputs(),
                other.outputs()
            )));
        }
        let (n1, n2) = (self.states(), other.states());
        let mut a = Mat::zeros(n1 + n2, n1 + n2);
        a.view_mut((0, 0), (n1, n1)).copy_from(&self.a);
        a.view_mut((0, n1), (n1, n2)).copy_from(&(&self.b * &other.c));
        a.view_mut((n1, n1), (n2, n2)).copy_from(&other.a);
        let mut b = Mat::zeros(n1 + n2, other.inputs());
        b.view_mut((0, 0), (n1, other.inputs())).copy_from(&(&self.b * &other.d));
        b.view_mut((n1, 0), (n2, other.inputs())).copy_from(&other.b);
        let mut c = Mat::zeros(self.outputs(), n1 + n2);
        c.view_mut((0, 0), (self.outputs(), n1)).copy_from(&self.c);
        c.view_mut((0, n1), (self.outputs(), n2)).copy_from(&(&self.d * &other.c));
        Ok(StateSpace { a, b, c, d: &self.d * &other.d })
    }

    /// Realization of `self(z) + other(z)`.
    pub fn add(&self, other: &StateSpace) -> Result<StateSpace, XferError> {
        if self.inputs() != other.inputs() || self.outputs() != other.outputs() {
            return Err(XferError::DimensionMismatch(format!(
                "{}x{} plus {}x{}",
                self.outputs(),
                self.inputs(),
                other.outputs(),
                other.inputs()
            )));
        }
        let (n1, n2) = (self.states(), other.states());
        let mut a = Mat::zeros(n1 + n2, n1 + n2);
        a.view_mut((0, 0), (n1, n1)).copy_from(&self.a);
        a.view_mut((n1, n1), (n2, n2)).copy_from(&other.a);
        let mut b = Mat::zeros(n1 + n2, self.inputs());
        b.view_mut((0, 0), (n1, self.inputs())).copy_from(&self.b);
        b.view_mut((n1, 0), (n2, self.inputs())).copy_from(&other.b);
        let mut c = Mat::zeros(self.outputs(), n1 + n2);
        c.view_mut((0, 0), (self.outputs(), n1)).copy_from(&self.c);
        c.view_mut((0, n1), (self.outputs(), n2)).copy_from(&other.c);
        Ok(StateSpace { a, b, c, d: &self.d + &other.d })
    }

    pub fn scale(&self, k: f64) -> StateSpace {
        StateSpace { a: self.a.clone(), b: self.b.clone(), c: &self.c * k, d: &self.d * k }
    }

    /// Markov parameters D, CB, CAB, ... (`taps` entries).
    pub fn impulse_response(&self, taps: usize) -> Vec<Mat> {
        let mut out = Vec::with_capacity(taps);
        if taps == 0 {
            return out;
        }
        out.push(self.d.clone());
        let mut x = self.b.clone();
        for _ in 1..taps {
            out.push(&self.c * &x);
            x = &self.a * x;
        }
        out
    }
}

/// Stateful runner of a realization: x⁺ = Ax + Bu, y = Cx + Du.
#[derive(Debug, Clone)]
pub struct Recursion {
    pub system: StateSpace,
    state: Vector,
}

impl Recursion {
    pub fn new(system: StateSpace) -> Self {
        let n = system.states();
        Recursion { system, state: Vector::zeros(n) }
    }

    pub fn step(&mut self, u: &Vector) -> Vector {
        let y = &self.system.c * &self.state + &self.system.d * u;
        self.state = &self.system.a * &self.state + &self.system.b * u;
        y
    }

    pub fn reset(&mut self) {
        self.state.fill(0.0);
    }

    pub fn state(&self) -> &Vector {
        &self.state
    }
}

/// A value sampled at one point of the complex plane.
#[derive(Debug, Clone)]
pub struct FrequencySample {
    pub z: Complex64,
    pub value: CMat,
}

pub fn sample(g: &StateSpace, zs: &[Complex64]) -> Result<Vec<FrequencySample>, XferError> {
    zs.iter().map(|&z| Ok(FrequencySample { z, value: g.evaluate(z)? })).collect()
}

/// `n` equispaced points e^{2πik/n} on the unit circle.
pub fn unit_circle(n: usize) -> Vec<Complex64> {
    (0..n).map(|k| Complex64::from_polar(1.0, 2.0 * PI * k as f64 / n as f64)).collect()
}

/// Unit-circle grid with points within `1e-6` of any pole of the given
/// systems removed.
pub fn unit_circle_avoiding(n: usize, systems: &[&StateSpace]) -> Vec<Complex64> {
    let poles: Vec<Complex64> = systems.iter().flat_map(|s| s.poles()).collect();
    unit_circle(n)
        .into_iter()
        .filter(|z| poles.iter().all(|p| (z - p).norm() > 1e-6))
        .collect()
}

fn resolvent_times(z: Complex64, f: &Mat, rhs: &CMat) -> Result<CMat, XferError> {
    let n = f.nrows();
    let m = CMat::identity(n, n) * z - to_complex(f);
    if m.clone().singular_values().min() < 1e-12 * (1.0 + z.norm() + f.amax()) {
        return Err(XferError::PoleHit(z));
    }
    m.lu().solve(rhs).ok_or(XferError::PoleHit(z))
}

/// Max absolute entry over the samples of
/// [H₁(zI−F₁)⁻¹  I] Ω(W) [(z⁻¹I−F₂ᵀ)⁻¹H₂ᵀ; I], where
/// Ω(W) = [[−W + F₁WF₂ᵀ, F₁WH₂ᵀ], [H₁WF₂ᵀ, H₁WH₂ᵀ]].
/// The expression vanishes identically for every W.
pub fn check_omega_identity(
    h1: &Mat,
    f1: &Mat,
    h2: &Mat,
    f2: &Mat,
    w: &Mat,
    zs: &[Complex64],
) -> Result<f64, XferError> {
    let (n1, n2) = (f1.nrows(), f2.nrows());
    if h1.ncols() != n1 || h2.ncols() != n2 || w.shape() != (n1, n2) || h1.nrows() != h2.nrows()
    {
        return Err(XferError::DimensionMismatch("omega identity operands".into()));
    }
    let omega11 = to_complex(&(-w + f1 * w * f2.transpose()));
    let omega12 = to_complex(&(f1 * w * h2.transpose()));
    let omega21 = to_complex(&(h1 * w * f2.transpose()));
    let omega22 = to_complex(&(h1 * w * h2.transpose()));
    let (h1c, h2t) = (to_complex(h1), to_complex(&h2.transpose()));
    let mut worst: f64 = 0.0;
    for &z in zs {
        // H₁(zI − F₁)⁻¹ computed as ((zI − F₁)ᵀ)⁻¹ applied to H₁ᵀ, transposed.
        let left = resolvent_times(z, &f1.transpose(), &h1c.transpose())?.transpose();
        let right = resolvent_times(Complex64::new(1.0, 0.0) / z, &f2.transpose(), &h2t)?;
        let value = &left * (&omega11 * &right + &omega12) + &omega21 * &right + &omega22;
        worst = worst.max(value.iter().map(|x| x.norm()).fold(0.0, f64::max));
    }
    Ok(worst)
}

/// Same-system specialization H₁ = H₂ = H, F₁ = F₂ = F with Hermitian P.
pub fn check_omega_identity_hermitian(
    h: &Mat,
    f: &Mat,
    p: &Mat,
    zs: &[Complex64],
) -> Result<f64, XferError> {
    check_omega_identity(h, f, h, f, p, zs)
}

/// Transposed pattern: [Hᵀ(z⁻¹I − Fᵀ)⁻¹  I] Ω(P) [(zI − F)⁻¹H; I] with
/// Ω(P) = [[−P + FᵀPF, FᵀPH], [HᵀPF, HᵀPH]].
pub fn check_omega_identity_transposed(
    h: &Mat,
    f: &Mat,
    p: &Mat,
    zs: &[Complex64],
) -> Result<f64, XferError> {
    // With H₁ = Hᵀ, F₁ = Fᵀ and z ↦ z⁻¹ this is the general identity.
    let inv: Vec<Complex64> = zs.iter().map(|z| Complex64::new(1.0, 0.0) / z).collect();
    check_omega_identity(&h.transpose(), &f.transpose(), &h.transpose(), &f.transpose(), p, &inv)
}
