//! Normal-inverse-gamma conjugate statistics for the scalar-output Gaussian
//! regression `y = ψᵀθ + ε`, `ε ~ N(0, σ²)`.
//!
//! Two equivalent representations are kept:
//!
//! * [`NigVForm`]: the extended information matrix `V` (size `n + 1`,
//!   accumulating `[y; ψ][y; ψ]ᵀ`) and the degrees of freedom `ν`.
//! * [`NigCForm`]: `C = V_ψ⁻¹`, the point estimate `θ̂`, the residual scalar
//!   `Λ` and `ν`. Updates in this form are the recursive least-squares
//!   recursion and never invert a matrix.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{dot, Matrix};

/// Largest accepted one-norm condition number of `V_ψ`.
pub const MAX_CONDITION: f64 = 1e12;

/// Threshold on `|1 + vᵀA⁻¹u|` below which a rank-one inverse update is
/// refused.
pub const MIN_DENOMINATOR: f64 = 1e-14;

/// One node's datum at one time step.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub y: f64,
    pub psi: Vec<f64>,
}

impl Observation {
    pub fn new(y: f64, psi: Vec<f64>) -> Self {
        Observation { y, psi }
    }

    /// `[y; ψ]`.
    pub fn extended(&self) -> Vec<f64> {
        let mut z = Vec::with_capacity(self.psi.len() + 1);
        z.push(self.y);
        z.extend_from_slice(&self.psi);
        z
    }
}

/// Information-matrix form `(V, ν)`.
#[derive(Debug, Clone, PartialEq)]
pub struct NigVForm {
    v: Matrix,
    nu: f64,
}

impl NigVForm {
    /// Regularized flat prior `V = eps·I`, `ν = nu0`.
    pub fn init(order: usize, eps: f64, nu0: f64) -> Result<Self> {
        if order == 0 {
            return Err(Error::param("order", "model order must be at least 1"));
        }
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::param("eps", format!("{eps} must be positive")));
        }
        if !(nu0 > 0.0 && nu0.is_finite()) {
            return Err(Error::param("nu0", format!("{nu0} must be positive")));
        }
        Ok(NigVForm {
            v: Matrix::scaled_identity(order + 1, eps),
            nu: nu0,
        })
    }

    /// Wraps an explicit `V`. It must be square, at least 2×2 and symmetric.
    pub fn from_parts(v: Matrix, nu: f64) -> Result<Self> {
        if !v.is_square() || v.rows() < 2 {
            return Err(Error::InvalidStatistics(format!(
                "V must be square of size >= 2, got {}x{}",
                v.rows(),
                v.cols()
            )));
        }
        let tol = 1e-12 * v.max_abs().max(1.0);
        if !v.is_symmetric(tol) {
            return Err(Error::InvalidStatistics("V is not symmetric".into()));
        }
        if !nu.is_finite() {
            return Err(Error::InvalidStatistics(format!("nu = {nu}")));
        }
        Ok(NigVForm { v, nu })
    }

    pub fn v(&self) -> &Matrix {
        &self.v
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    /// Model order `n` (regressor dimension).
    pub fn order(&self) -> usize {
        self.v.rows() - 1
    }

    /// `V_y`, the upper-left scalar.
    pub fn v_y(&self) -> f64 {
        self.v[(0, 0)]
    }

    /// `V_yψ`, the first column below the diagonal.
    pub fn v_ypsi(&self) -> Vec<f64> {
        (1..self.v.rows()).map(|i| self.v[(i, 0)]).collect()
    }

    /// `V_ψ`, the lower-right block.
    pub fn v_psi(&self) -> Matrix {
        self.v.sub_square(1, self.order())
    }

    fn check(&self, obs: &Observation) -> Result<()> {
        if obs.psi.len() != self.order() {
            return Err(Error::InvalidObservation {
                expected: self.order(),
                found: obs.psi.len(),
            });
        }
        Ok(())
    }

    /// One unit-weight Bayes update: `V += [y; ψ][y; ψ]ᵀ`, `ν += 1`.
    pub fn bayes_update(&self, obs: &Observation) -> Result<Self> {
        let mut next = self.clone();
        next.absorb(obs, 1.0)?;
        next.nu += 1.0;
        Ok(next)
    }

    /// `V += c [y; ψ][y; ψ]ᵀ` without touching `ν`. The caller accounts
    /// for degrees of freedom (one per completed step).
    pub fn absorb(&mut self, obs: &Observation, c: f64) -> Result<()> {
        self.check(obs)?;
        check_weight(c)?;
        let z = obs.extended();
        self.v.add_scaled_outer(c, &z, &z);
        self.v.symmetrize();
        Ok(())
    }

    /// Weighted update that also adds `c` to `ν`.
    pub fn weighted_update(&self, obs: &Observation, c: f64) -> Result<Self> {
        let mut next = self.clone();
        next.absorb(obs, c)?;
        next.nu += c;
        Ok(next)
    }

    pub(crate) fn set_nu(&mut self, nu: f64) {
        self.nu = nu;
    }

    fn guarded_v_psi(&self) -> Result<Matrix> {
        let v_psi = self.v_psi();
        let condition = v_psi.condition_one();
        if !(condition <= MAX_CONDITION) {
            return Err(Error::SingularStatistics { condition });
        }
        Ok(v_psi)
    }

    /// `θ̂ = V_ψ⁻¹ V_yψ`, solved without forming the inverse.
    pub fn point_estimate_theta(&self) -> Result<Vec<f64>> {
        let v_psi = self.guarded_v_psi()?;
        v_psi
            .solve(&self.v_ypsi())
            .ok_or(Error::SingularStatistics {
                condition: f64::INFINITY,
            })
    }

    /// `Λ = V_y − V_yψᵀ V_ψ⁻¹ V_yψ`, clamped at zero against round-off.
    pub fn lambda(&self) -> Result<f64> {
        let theta = self.point_estimate_theta()?;
        Ok((self.v_y() - dot(&self.v_ypsi(), &theta)).max(0.0))
    }

    /// Noise-variance point estimate `Λ / ν`.
    pub fn estimate_noise_variance(&self) -> Result<f64> {
        if !(self.nu > 0.0) {
            return Err(Error::InvalidStatistics(format!("nu = {} must be positive", self.nu)));
        }
        Ok(self.lambda()? / self.nu)
    }

    /// Converts to `(C, θ̂, Λ, ν)`.
    pub fn reparameterize(&self) -> Result<NigCForm> {
        let v_psi = self.guarded_v_psi()?;
        let mut c = v_psi.inverse().ok_or(Error::SingularStatistics {
            condition: f64::INFINITY,
        })?;
        c.symmetrize();
        let v_ypsi = self.v_ypsi();
        let theta_hat = c.mul_vec(&v_ypsi);
        let lambda = (self.v_y() - dot(&v_ypsi, &theta_hat)).max(0.0);
        Ok(NigCForm {
            c,
            theta_hat,
            lambda,
            nu: self.nu,
        })
    }
}

/// Reparameterized form `(C, θ̂, Λ, ν)` with `C = V_ψ⁻¹`.
#[derive(Debug, Clone, PartialEq)]
pub struct NigCForm {
    c: Matrix,
    theta_hat: Vec<f64>,
    lambda: f64,
    nu: f64,
}

impl NigCForm {
    /// Checks `C` is symmetric positive definite and `Λ ≥ 0`.
    pub fn new(c: Matrix, theta_hat: Vec<f64>, lambda: f64, nu: f64) -> Result<Self> {
        if !c.is_square() || c.rows() != theta_hat.len() || c.rows() == 0 {
            return Err(Error::InvalidStatistics(format!(
                "C is {}x{} but theta has {} entries",
                c.rows(),
                c.cols(),
                theta_hat.len()
            )));
        }
        if !c.is_symmetric(1e-12 * c.max_abs().max(1.0)) || !c.is_positive_definite() {
            return Err(Error::InvalidStatistics("C is not symmetric positive definite".into()));
        }
        if !(lambda >= 0.0) {
            return Err(Error::InvalidStatistics(format!("lambda = {lambda} is negative")));
        }
        Ok(NigCForm {
            c,
            theta_hat,
            lambda,
            nu,
        })
    }

    pub fn c(&self) -> &Matrix {
        &self.c
    }

    pub fn theta_hat(&self) -> &[f64] {
        &self.theta_hat
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn order(&self) -> usize {
        self.theta_hat.len()
    }

    pub(crate) fn set_nu(&mut self, nu: f64) {
        self.nu = nu;
    }

    pub fn estimate_noise_variance(&self) -> Result<f64> {
        if !(self.nu > 0.0) {
            return Err(Error::InvalidStatistics(format!("nu = {} must be positive", self.nu)));
        }
        Ok(self.lambda / self.nu)
    }

    /// Back to `(V, ν)`: `V_ψ = C⁻¹`, `V_yψ = C⁻¹θ̂`, `V_y = Λ + θ̂ᵀC⁻¹θ̂`.
    pub fn compose(&self) -> Result<NigVForm> {
        if !self.c.is_positive_definite() {
            return Err(Error::InvalidStatistics("C is not positive definite".into()));
        }
        let mut v_psi = self.c.inverse().ok_or_else(|| Error::InvalidStatistics("C is singular".into()))?;
        v_psi.symmetrize();
        let v_ypsi = v_psi.mul_vec(&self.theta_hat);
        let n = self.order();
        let mut v = Matrix::zeros(n + 1, n + 1);
        v[(0, 0)] = self.lambda + dot(&self.theta_hat, &v_ypsi);
        for i in 0..n {
            v[(i + 1, 0)] = v_ypsi[i];
            v[(0, i + 1)] = v_ypsi[i];
            for j in 0..n {
                v[(i + 1, j + 1)] = v_psi[(i, j)];
            }
        }
        Ok(NigVForm { v, nu: self.nu })
    }

    /// Absorbs one observation weighted by `c` (recursive least squares):
    ///
    /// ```text
    /// g = Cψ,  d = 1 + c ψᵀg,  e = y − ψᵀθ̂
    /// C ← C − c g gᵀ / d
    /// θ̂ ← θ̂ + c g e / d
    /// Λ ← Λ + c e² / d
    /// ν ← ν + c
    /// ```
    ///
    /// `e`, `g` and `d` use the statistics from before the update.
    pub fn rank_one_update(&self, obs: &Observation, c: f64) -> Result<Self> {
        let mut next = self.clone();
        next.absorb(obs, c)?;
        next.nu += c;
        Ok(next)
    }

    /// Rank-one update of `C`, `θ̂`, `Λ`; leaves `ν` alone.
    pub fn absorb(&mut self, obs: &Observation, c: f64) -> Result<()> {
        if obs.psi.len() != self.order() {
            return Err(Error::InvalidObservation {
                expected: self.order(),
                found: obs.psi.len(),
            });
        }
        check_weight(c)?;
        let g = self.c.mul_vec(&obs.psi);
        let denominator = 1.0 + c * dot(&obs.psi, &g);
        if !(denominator.abs() > MIN_DENOMINATOR) {
            return Err(Error::DegenerateUpdate { denominator });
        }
        let e = obs.y - dot(&obs.psi, &self.theta_hat);
        self.c.add_scaled_outer(-c / denominator, &g, &g);
        self.c.symmetrize();
        let gain = c * e / denominator;
        for (t, gi) in self.theta_hat.iter_mut().zip(&g) {
            *t += gain * gi;
        }
        self.lambda += c * e * e / denominator;
        Ok(())
    }
}

fn check_weight(c: f64) -> Result<()> {
    if !(c >= 0.0 && c.is_finite()) {
        return Err(Error::param("c", format!("data weight {c} must be finite and non-negative")));
    }
    Ok(())
}

/// `(A + u vᵀ)⁻¹ = A⁻¹ − A⁻¹u vᵀA⁻¹ / (1 + vᵀA⁻¹u)`, given `A⁻¹`.
pub fn sherman_morrison(a_inv: &Matrix, u: &[f64], v: &[f64]) -> Result<Matrix> {
    let n = a_inv.rows();
    if !a_inv.is_square() || u.len() != n || v.len() != n {
        return Err(Error::param("sherman_morrison", "dimension mismatch"));
    }
    let a_inv_u = a_inv.mul_vec(u);
    let vt_a_inv = a_inv.transpose().mul_vec(v);
    let denominator = 1.0 + dot(v, &a_inv_u);
    if !(denominator.abs() > MIN_DENOMINATOR) {
        return Err(Error::DegenerateUpdate { denominator });
    }
    let mut out = a_inv.clone();
    out.add_scaled_outer(-1.0 / denominator, &a_inv_u, &vt_a_inv);
    Ok(out)
}
