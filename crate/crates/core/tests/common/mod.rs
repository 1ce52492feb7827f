//! Independent oracles shared by the integration tests. Transfer functions
//! are evaluated straight from plant matrices with dense complex solves,
//! never through the library's realizations.
#![allow(dead_code)]

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use pathopt::control::ControlPlant;
use pathopt::filter::FilterPlant;
use pathopt::{Mat, Vector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::FftPlanner;

pub type CMat = DMatrix<Complex64>;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn s(x: f64) -> Mat {
    Mat::from_element(1, 1, x)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn cx(m: &Mat) -> CMat {
    m.map(|x| c(x, 0.0))
}

pub fn cinv(m: &CMat) -> CMat {
    m.clone().try_inverse().expect("singular complex matrix")
}

/// D + C(zI − A)⁻¹B by a dense complex solve.
pub fn tf(a: &Mat, b: &Mat, cm: &Mat, d: &Mat, z: Complex64) -> CMat {
    let n = a.nrows();
    let resolvent = CMat::identity(n, n) * z - cx(a);
    let x = resolvent.lu().solve(&cx(b)).expect("pole hit");
    cx(d) + cx(cm) * x
}

/// X*(z) = X(1/z̄)ᴴ for an X given as a closure.
pub fn para(f: impl Fn(Complex64) -> CMat, z: Complex64) -> CMat {
    f(c(1.0, 0.0) / z.conj()).adjoint()
}

pub fn max_abs(m: &CMat) -> f64 {
    m.iter().map(|x| x.norm()).fold(0.0, f64::max)
}

/// Max entrywise error relative to 1 + the largest entry of the reference.
pub fn rel_err(lhs: &CMat, rhs: &CMat) -> f64 {
    max_abs(&(lhs - rhs)) / (1.0 + max_abs(rhs))
}

/// Equispaced unit-circle points, minus any within 10⁻⁶ of an eigenvalue of
/// the given matrices.
pub fn grid(n: usize, avoid: &[&Mat]) -> Vec<Complex64> {
    let poles: Vec<Complex64> = avoid
        .iter()
        .flat_map(|m| m.map(|x| c(x, 0.0)).eigenvalues().map(|v| v.iter().copied().collect::<Vec<_>>()))
        .flatten()
        .collect();
    (0..n)
        .map(|k| Complex64::from_polar(1.0, 2.0 * PI * k as f64 / n as f64))
        .filter(|z| poles.iter().all(|p| (z - p).norm() > 1e-6))
        .collect()
}

/// Real-valued Schur-stable matrix with spectral radius at most `radius`.
pub fn random_stable(r: &mut ChaCha8Rng, n: usize, radius: f64) -> Mat {
    let m = Mat::from_fn(n, n, |_, _| r.random_range(-1.0..1.0));
    let rho = pathopt::numerics::spectral_radius(&m).max(1e-3);
    m * (radius * r.random_range(0.3..1.0) / rho)
}

pub fn random_mat(r: &mut ChaCha8Rng, rows: usize, cols: usize) -> Mat {
    Mat::from_fn(rows, cols, |_, _| r.random_range(-1.0..1.0))
}

pub fn random_filter_plant(r: &mut ChaCha8Rng) -> FilterPlant {
    let n = r.random_range(1..=4);
    let (m, p, q) = (r.random_range(1..=2), r.random_range(1..=2), r.random_range(1..=2));
    let a = random_stable(r, n, 0.95);
    FilterPlant::new(a, random_mat(r, n, m), random_mat(r, p, n), random_mat(r, q, n)).unwrap()
}

/// Disturbance dimension is kept at most the state dimension: otherwise
/// L(I − A)⁻¹B_w loses column rank, the factor Δ is singular at z = 1 and no
/// finite pathlength level exists.
pub fn random_control_plant(r: &mut ChaCha8Rng) -> ControlPlant {
    let n = r.random_range(1..=4);
    let (m, p) = (r.random_range(1..=2), r.random_range(1..=n.min(2)));
    let a = random_stable(r, n, 0.95);
    let lq = random_mat(r, n, n);
    let q = lq.transpose() * &lq + Mat::identity(n, n) * 0.1;
    let lr = random_mat(r, m, m);
    let rr = lr.transpose() * &lr + Mat::identity(m, m) * 0.5;
    ControlPlant::new(a, random_mat(r, n, m), random_mat(r, n, p), q, rr).unwrap()
}

pub fn scalar_filter_plant() -> FilterPlant {
    FilterPlant::new(s(0.5), s(1.0), s(1.0), s(1.0)).unwrap()
}

pub fn tracking_filter_plant() -> FilterPlant {
    FilterPlant::new(
        Mat::from_row_slice(2, 2, &[1.0, 0.01, 0.0, 1.0]),
        Mat::from_row_slice(2, 1, &[0.0, 0.01]),
        Mat::from_row_slice(1, 2, &[1.0, 0.0]),
        Mat::from_row_slice(1, 2, &[1.0, 0.0]),
    )
    .unwrap()
}

pub fn scalar_control_plant() -> ControlPlant {
    ControlPlant::new(s(0.5), s(1.0), s(1.0), s(1.0), s(1.0)).unwrap()
}

pub fn tracking_control_plant() -> ControlPlant {
    let b = Mat::from_row_slice(2, 1, &[0.005, 0.1]);
    ControlPlant::new(Mat::from_row_slice(2, 2, &[1.0, 0.1, 0.0, 1.0]), b.clone(), b, Mat::identity(2, 2), s(1.0))
        .unwrap()
}

/// Larger root of P² − 0.25P − 1 = 0.
pub fn scalar_dare_root() -> f64 {
    (0.25 + (0.0625f64 + 4.0).sqrt()) / 2.0
}

/// Symmetric positive square root through eigendecomposition.
pub fn sqrt_psd(m: &Mat) -> Mat {
    let e = m.clone().symmetric_eigen();
    let d = Mat::from_diagonal(&e.eigenvalues.map(|x| x.max(0.0).sqrt()));
    &e.eigenvectors * d * e.eigenvectors.transpose()
}

/// Half-bin shifted DFT grid: z_k = exp(iπ(2k + 1)/N). Avoids z = 1.
pub fn shifted_grid(n: usize) -> Vec<Complex64> {
    (0..n).map(|k| Complex64::from_polar(1.0, PI * (2 * k + 1) as f64 / n as f64)).collect()
}

/// Applies a multi-channel frequency response to a signal by circular
/// convolution on the half-bin shifted grid. `response(k)` is the value at
/// z_k = exp(iπ(2k + 1)/N); N is the signal length.
pub fn apply_response(signal: &[Vector], out_dim: usize, response: impl Fn(usize) -> CMat) -> Vec<Vector> {
    let n = signal.len();
    let dim = signal[0].len();
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);
    let demod = |t: usize, sign: f64| Complex64::from_polar(1.0, sign * PI * t as f64 / n as f64);
    let mut spectra: Vec<Vec<Complex64>> = (0..dim)
        .map(|j| (0..n).map(|t| signal[t][j] * demod(t, -1.0)).collect())
        .collect();
    for ch in spectra.iter_mut() {
        fwd.process(ch);
    }
    let mut out: Vec<Vec<Complex64>> = vec![vec![c(0.0, 0.0); n]; out_dim];
    for k in 0..n {
        let h = response(k);
        for i in 0..out_dim {
            out[i][k] = (0..dim).map(|j| h[(i, j)] * spectra[j][k]).sum();
        }
    }
    for ch in out.iter_mut() {
        inv.process(ch);
    }
    (0..n)
        .map(|t| Vector::from_fn(out_dim, |i, _| (out[i][t] * demod(t, 1.0)).re / n as f64))
        .collect()
}

/// Impulse-response taps of a response sampled on the half-bin grid.
pub fn taps_from_response(n: usize, rows: usize, cols: usize, response: impl Fn(usize) -> CMat) -> Vec<Mat> {
    let values: Vec<CMat> = (0..n).map(&response).collect();
    let mut planner = FftPlanner::<f64>::new();
    let inv = planner.plan_fft_inverse(n);
    let mut taps = vec![Mat::zeros(rows, cols); n];
    for i in 0..rows {
        for j in 0..cols {
            let mut buf: Vec<Complex64> = values.iter().map(|v| v[(i, j)]).collect();
            inv.process(&mut buf);
            for (t, x) in buf.iter().enumerate() {
                taps[t][(i, j)] = (x * Complex64::from_polar(1.0, PI * t as f64 / n as f64)).re / n as f64;
            }
        }
    }
    taps
}

/// Frequency-domain quadrature of Σ_k ŵ_kᴴ M(z_k) ŵ_k / N on the half-bin grid.
pub fn quadratic_form(signal: &[Vector], kernel: impl Fn(Complex64) -> CMat) -> f64 {
    let n = signal.len();
    let dim = signal[0].len();
    let zs = shifted_grid(n);
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(n);
    let mut spectra: Vec<Vec<Complex64>> = (0..dim)
        .map(|j| {
            (0..n)
                .map(|t| signal[t][j] * Complex64::from_polar(1.0, -PI * t as f64 / n as f64))
                .collect()
        })
        .collect();
    for ch in spectra.iter_mut() {
        fwd.process(ch);
    }
    let mut total = 0.0;
    for (k, z) in zs.iter().enumerate() {
        // The forward DFT uses e^{−iθt}, so the spectrum at z_k pairs with
        // the response at z_k for signals read as Σ w_t z^{−t}.
        let w_hat = nalgebra::DVector::from_fn(dim, |j, _| spectra[j][k]);
        total += (w_hat.adjoint() * kernel(*z) * &w_hat)[(0, 0)].re;
    }
    total / n as f64
}

// ----- Factorization identity oracles -----

/// Max relative residuals of Δ₁*Δ₁ = I + H*H and Δ₂Δ₂* = I + HH*.
pub fn io_factor_residual(plant: &FilterPlant, zs: &[Complex64]) -> f64 {
    let io = pathopt::factor::factor_io(&plant.a, &plant.b, &plant.c).unwrap();
    let (m, p) = (plant.b.ncols(), plant.c.nrows());
    let h = |z: Complex64| tf(&plant.a, &plant.b, &plant.c, &Mat::zeros(p, m), z);
    let s1 = sqrt_psd(&io.sigma1);
    let s2 = sqrt_psd(&io.sigma2);
    let d1 = |z: Complex64| tf(&plant.a, &plant.b, &(&s1 * &io.k1), &s1, z);
    let d2 = |z: Complex64| tf(&plant.a, &(&io.k2 * &s2), &plant.c, &s2, z);
    let mut worst: f64 = 0.0;
    for &z in zs {
        let lhs1 = para(d1, z) * d1(z);
        let rhs1 = CMat::identity(m, m) + para(h, z) * h(z);
        let lhs2 = d2(z) * para(d2, z);
        let rhs2 = CMat::identity(p, p) + h(z) * para(h, z);
        worst = worst.max(rel_err(&lhs1, &rhs1)).max(rel_err(&lhs2, &rhs2));
    }
    worst
}

/// Max relative residual of Δ₃*Δ₃ = γ⁻²I + γ⁻⁴RR* with R = JΔ₁⁻¹.
pub fn center_factor_residual(plant: &FilterPlant, gamma: f64, zs: &[Complex64]) -> f64 {
    let io = pathopt::factor::factor_io(&plant.a, &plant.b, &plant.c).unwrap();
    let center = pathopt::factor::factor_center(&io, &plant.b, &plant.l, gamma).unwrap();
    let (m, r) = (plant.b.ncols(), plant.l.nrows());
    let j = |z: Complex64| tf(&plant.a, &plant.b, &plant.l, &Mat::zeros(r, m), z);
    let s1 = sqrt_psd(&io.sigma1);
    let d1 = |z: Complex64| tf(&plant.a, &plant.b, &(&s1 * &io.k1), &s1, z);
    let rr = |z: Complex64| j(z) * cinv(&d1(z));
    let s3 = sqrt_psd(&center.sigma3) / gamma;
    let b3 = &io.a1 * &center.w1 * plant.l.transpose();
    let d3 = |z: Complex64| tf(&io.a1, &b3, &(&s3 * &center.k3), &s3, z);
    let (g2, g4) = (gamma.powi(-2), gamma.powi(-4));
    zs.iter()
        .map(|&z| {
            let lhs = para(d3, z) * d3(z);
            let rhs = CMat::identity(r, r) * c(g2, 0.0) + rr(z) * para(rr, z) * c(g4, 0.0);
            rel_err(&lhs, &rhs)
        })
        .fold(0.0, f64::max)
}

/// Δ₃(z)Q(z) with Q = JH*Δ₂⁻*, straight from the plant and the factors.
pub fn delta3_q(plant: &FilterPlant, gamma: f64, z: Complex64) -> CMat {
    let io = pathopt::factor::factor_io(&plant.a, &plant.b, &plant.c).unwrap();
    let center = pathopt::factor::factor_center(&io, &plant.b, &plant.l, gamma).unwrap();
    let (m, p, r) = (plant.b.ncols(), plant.c.nrows(), plant.l.nrows());
    let j = |z: Complex64| tf(&plant.a, &plant.b, &plant.l, &Mat::zeros(r, m), z);
    let h = |z: Complex64| tf(&plant.a, &plant.b, &plant.c, &Mat::zeros(p, m), z);
    let s2 = sqrt_psd(&io.sigma2);
    let d2 = |z: Complex64| tf(&plant.a, &(&io.k2 * &s2), &plant.c, &s2, z);
    let s3 = sqrt_psd(&center.sigma3) / gamma;
    let b3 = &io.a1 * &center.w1 * plant.l.transpose();
    let d3 = |z: Complex64| tf(&io.a1, &b3, &(&s3 * &center.k3), &s3, z);
    d3(z) * j(z) * para(h, z) * cinv(&para(d2, z))
}

/// Max relative residual of the three-part decomposition of Δ₃Q.
pub fn q_split_residual(plant: &FilterPlant, gamma: f64, zs: &[Complex64]) -> f64 {
    let io = pathopt::factor::factor_io(&plant.a, &plant.b, &plant.c).unwrap();
    let center = pathopt::factor::factor_center(&io, &plant.b, &plant.l, gamma).unwrap();
    let q = pathopt::factor::decompose_q(&io, &center, &plant.a, &plant.b, &plant.c, &plant.l).unwrap();
    zs.iter()
        .map(|&z| rel_err(&q.evaluate(z).unwrap(), &delta3_q(plant, gamma, z)))
        .fold(0.0, f64::max)
}

/// Max relative residual of Δ*Δ = γ²M*M + G*(I + FF*)⁻¹G, M = (1 − z⁻¹)I.
pub fn control_factor_residual(plant: &ControlPlant, gamma: f64, zs: &[Complex64]) -> f64 {
    let fac = pathopt::factor::factor_control(plant, gamma).unwrap();
    let (n, m, p) = (plant.n(), plant.m(), plant.p());
    let r_inv_half = sqrt_psd(&plant.r).try_inverse().unwrap();
    let l = sqrt_psd(&plant.q);
    let f = |z: Complex64| tf(&plant.a, &(&plant.b_u * &r_inv_half), &l, &Mat::zeros(n, m), z);
    let g = |z: Complex64| tf(&plant.a, &plant.b_w, &l, &Mat::zeros(n, p), z);
    let s2 = sqrt_psd(&fac.sigma2c);
    let delta = |z: Complex64| tf(&fac.a_tilde, &fac.b_tilde_w, &(&s2 * &fac.k2c), &s2, z);
    zs.iter()
        .map(|&z| {
            let mm = 1.0 - 1.0 / z;
            let lhs = para(delta, z) * delta(z);
            let inner = cinv(&(CMat::identity(n, n) + f(z) * para(f, z)));
            let rhs = CMat::identity(p, p) * c(gamma * gamma * mm.norm_sqr(), 0.0) + para(g, z) * inner * g(z);
            rel_err(&lhs, &rhs)
        })
        .fold(0.0, f64::max)
}

// ----- Frequency-domain references -----

/// OPT(w) = Σ ŵ*G*(I + FF*)⁻¹Gŵ / N on the half-bin grid.
pub fn offline_cost_fft(plant: &ControlPlant, w: &[Vector]) -> f64 {
    let (n, m, p) = (plant.n(), plant.m(), plant.p());
    let r_inv_half = sqrt_psd(&plant.r).try_inverse().unwrap();
    let l = sqrt_psd(&plant.q);
    let f = |z: Complex64| tf(&plant.a, &(&plant.b_u * &r_inv_half), &l, &Mat::zeros(n, m), z);
    let g = |z: Complex64| tf(&plant.a, &plant.b_w, &l, &Mat::zeros(n, p), z);
    quadratic_form(w, |z| {
        let gz = g(z);
        gz.adjoint() * cinv(&(CMat::identity(n, n) + f(z) * f(z).adjoint())) * gz
    })
}

/// ŝ = JH*(I + HH*)⁻¹y applied by circular convolution.
pub fn smoother_fft(plant: &FilterPlant, y: &[Vector]) -> Vec<Vector> {
    let (m, p, r) = (plant.b.ncols(), plant.c.nrows(), plant.l.nrows());
    let zs = shifted_grid(y.len());
    apply_response(y, r, |k| {
        let z = zs[k];
        let h = tf(&plant.a, &plant.b, &plant.c, &Mat::zeros(p, m), z);
        let j = tf(&plant.a, &plant.b, &plant.l, &Mat::zeros(r, m), z);
        j * h.adjoint() * cinv(&(CMat::identity(p, p) + &h * h.adjoint()))
    })
}

pub fn bump(n: usize, start: usize, len: usize) -> Vec<Vector> {
    let noise = pathopt::sim::generate(&pathopt::sim::DisturbanceSpec::GaussianIid { std: 1.0, seed: 9 }, 1, n);
    (0..n)
        .map(|t| {
            if t >= start && t < start + len {
                let win = (std::f64::consts::PI * (t - start) as f64 / len as f64).sin();
                noise.get(t) * win + Vector::from_element(1, win)
            } else {
                Vector::zeros(1)
            }
        })
        .collect()
}

pub fn nehari_gap(d: &pathopt::filter::NehariData, n: usize) -> f64 {
    pathopt::xfer::unit_circle(n)
        .into_iter()
        .map(|z| {
            let diff: CMat = d.t_evaluate(z).unwrap() - d.k_hat.evaluate(z).unwrap();
            diff.singular_values().max()
        })
        .fold(0.0, f64::max)
}

/// K(z) = Δ₃⁻¹[Δ₃Q − A(z) + A(1) + (1 − z⁻¹)K̂]Δ₂⁻¹, where A is the strictly
/// anticausal part of Δ₃Q. Δ₂, Δ₃ and Δ₃Q are evaluated from the plant.
pub fn filter_response(plant: &FilterPlant, gamma: f64, z: Complex64, pipe: &pathopt::filter::FilterPipeline, k_hat: &pathopt::xfer::StateSpace) -> CMat {
    let (io, center) = (&pipe.io, &pipe.center);
    let (m, p, r) = (plant.b.ncols(), plant.c.nrows(), plant.l.nrows());
    let s2 = sqrt_psd(&io.sigma2);
    let s3 = sqrt_psd(&center.sigma3) / gamma;
    let b3 = &io.a1 * &center.w1 * plant.l.transpose();
    let d2 = tf(&plant.a, &(&io.k2 * &s2), &plant.c, &s2, z);
    let d3 = |z: Complex64| tf(&io.a1, &b3, &(&s3 * &center.k3), &s3, z);
    let j = tf(&plant.a, &plant.b, &plant.l, &Mat::zeros(r, m), z);
    let h = |z: Complex64| tf(&plant.a, &plant.b, &plant.c, &Mat::zeros(p, m), z);
    let d2f = |z: Complex64| tf(&plant.a, &(&io.k2 * &s2), &plant.c, &s2, z);
    let d3q = d3(z) * j * para(h, z) * cinv(&para(d2f, z));
    let a2t = io.a2.transpose();
    let anti_c = &pipe.q.l_hat * &pipe.q.w2 * &a2t;
    let anti = |w: Complex64| tf(&a2t, &pipe.q.g, &anti_c, &Mat::zeros(r, p), w);
    let one = c(1.0, 0.0);
    let middle = d3q - anti(one / z) + anti(one) + k_hat.evaluate(z).unwrap() * (one - one / z);
    cinv(&d3(z)) * middle * cinv(&d2)
}

pub fn compact_disturbance(dim: usize, horizon: usize, seed: u64) -> pathopt::sim::Signal {
    let g = pathopt::sim::generate(&pathopt::sim::DisturbanceSpec::GaussianIid { std: 1.0, seed }, dim, horizon);
    pathopt::sim::Signal::from_fn(dim, horizon, |t| if (1500..2500).contains(&t) { g.get(t).clone() } else { Vector::zeros(dim) })
}
