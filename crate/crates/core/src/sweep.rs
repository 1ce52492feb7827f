//! Finite-horizon linear-quadratic problems solved by a backward Riccati
//! sweep, which is block elimination of the banded KKT system.

use crate::numerics::{solve, symmetrize, Mat, NumericsError, Vector};

/// Data of min Σ_{t<T} (xᵀQx + 2q_tᵀx + uᵀRu) subject to
/// x_{t+1} = Ax_t + Bu_t + d_t, x_0 = 0.
pub(crate) struct Tracking<'a> {
    pub a: &'a Mat,
    pub b: &'a Mat,
    pub q: &'a Mat,
    pub r: &'a Mat,
    pub horizon: usize,
}

pub(crate) struct Trajectory {
    /// x_0, ..., x_T.
    pub states: Vec<Vector>,
    /// u_0, ..., u_{T−1}.
    pub controls: Vec<Vector>,
}

struct Stage {
    gain: Mat,
    s_lu: nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    bt_p: Mat,
}

fn stage(a: &Mat, b: &Mat, r: &Mat, p: &Mat) -> Result<Stage, NumericsError> {
    let bt_p = b.transpose() * p;
    let s = symmetrize(&(r + &bt_p * b));
    let gain = solve(&s, &(&bt_p * a), "R + BᵀPB")?;
    Ok(Stage { gain, s_lu: s.lu(), bt_p })
}

fn as_column(v: &Vector) -> Mat {
    Mat::from_column_slice(v.len(), 1, v.as_slice())
}

impl Tracking<'_> {
    /// `linear(t)` returns q_t and `drift(t)` returns d_t; `None` means zero.
    pub fn solve(
        &self,
        linear: impl Fn(usize) -> Option<Vector>,
        drift: impl Fn(usize) -> Option<Vector>,
    ) -> Result<Trajectory, NumericsError> {
        let (a, b) = (self.a, self.b);
        let n = a.nrows();
        let t_max = self.horizon;
        let mut gains: Vec<Mat> = Vec::with_capacity(t_max);
        let mut feedforward: Vec<Vector> = Vec::with_capacity(t_max);
        let mut p = Mat::zeros(n, n);
        let mut r_vec = Vector::zeros(n);
        let mut settled = false;
        let mut current = stage(a, b, self.r, &p)?;
        for t in (0..t_max).rev() {
            // current holds the stage data built from P_{t+1}.
            let mut pd_r = r_vec.clone();
            if let Some(d) = drift(t) {
                pd_r += &p * d;
            }
            let rhs = as_column(&(b.transpose() * &pd_r));
            let kff = current
                .s_lu
                .solve(&rhs)
                .ok_or_else(|| NumericsError::Singular("R + BᵀPB".into()))?;
            let a_cl = a - b * &current.gain;
            r_vec = a_cl.transpose() * &pd_r;
            if let Some(q) = linear(t) {
                r_vec += q;
            }
            gains.push(current.gain.clone());
            feedforward.push(Vector::from_column_slice(kff.as_slice()));
            if !settled {
                let p_next = symmetrize(
                    &(self.q + a.transpose() * &p * a
                        - a.transpose() * current.bt_p.transpose() * &current.gain),
                );
                let change = (&p_next - &p).amax() / (1.0 + p_next.amax());
                p = p_next;
                current = stage(a, b, self.r, &p)?;
                settled = change < 1e-15;
            }
        }
        gains.reverse();
        feedforward.reverse();

        let mut states = Vec::with_capacity(t_max + 1);
        let mut controls = Vec::with_capacity(t_max);
        let mut x = Vector::zeros(n);
        for t in 0..t_max {
            let u = -(&gains[t] * &x) - &feedforward[t];
            let mut next = a * &x + b * &u;
            if let Some(d) = drift(t) {
                next += d;
            }
            states.push(x);
            controls.push(u);
            x = next;
        }
        states.push(x);
        Ok(Trajectory { states, controls })
    }
}
