//! Huber penalty family, the averaged Huber loss, a first-order minimizer and
//! the curvature/gradient diagnostics built around the minimizer's error bound.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::model::RegressionInstance;
use crate::rng::RandomSource;
use crate::serde_vec;

/// Parameters of `Phi(t) = scale * (t^2 / (2h))` for `|t| <= h`, `scale * (|t| - h/2)` otherwise.
///
/// The defaults `h = 2`, `scale = 2` give `t^2/2` inside `[-2, 2]` and `2|t| - 2` outside.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HuberParams {
    pub h: f64,
    pub scale: f64,
    pub grad_tol: f64,
    pub max_iters: usize,
}

impl Default for HuberParams {
    fn default() -> Self {
        Self {
            h: 2.0,
            scale: 2.0,
            grad_tol: 1e-8,
            max_iters: 1_000_000,
        }
    }
}

impl HuberParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.h > 0.0 && self.h.is_finite()) {
            return Err(Error::invalid(format!(
                "huber transition h must be positive, got {}",
                self.h
            )));
        }
        if !(self.scale > 0.0 && self.scale.is_finite()) {
            return Err(Error::invalid(format!(
                "huber scale must be positive, got {}",
                self.scale
            )));
        }
        if !(self.grad_tol > 0.0) {
            return Err(Error::invalid(format!(
                "grad_tol must be positive, got {}",
                self.grad_tol
            )));
        }
        Ok(())
    }

    pub fn penalty(&self, t: f64) -> f64 {
        let a = t.abs();
        if a <= self.h {
            self.scale * t * t / (2.0 * self.h)
        } else {
            self.scale * (a - 0.5 * self.h)
        }
    }

    pub fn deriv(&self, t: f64) -> f64 {
        if t.abs() <= self.h {
            self.scale * t / self.h
        } else {
            self.scale * t.signum()
        }
    }

    /// Second derivative inside the quadratic zone.
    pub fn curvature(&self) -> f64 {
        self.scale / self.h
    }

    /// `Phi(r + a) - Phi(r)` without cancellation when both points share a piece.
    pub fn increment(&self, r: f64, a: f64) -> f64 {
        let s = r + a;
        if r.abs() <= self.h && s.abs() <= self.h {
            self.curvature() * a * (r + 0.5 * a)
        } else if r > self.h && s > self.h {
            self.scale * a
        } else if r < -self.h && s < -self.h {
            -self.scale * a
        } else {
            self.penalty(s) - self.penalty(r)
        }
    }

    /// `Phi(r + a) - Phi(r) - Phi'(r) a`, exact on shared pieces.
    pub fn bregman(&self, r: f64, a: f64) -> f64 {
        let s = r + a;
        if r.abs() <= self.h && s.abs() <= self.h {
            0.5 * self.curvature() * a * a
        } else if (r > self.h && s > self.h) || (r < -self.h && s < -self.h) {
            0.0
        } else {
            (self.penalty(s) - self.penalty(r) - self.deriv(r) * a).max(0.0)
        }
    }
}

pub fn huber_penalty(t: f64, p: &HuberParams) -> f64 {
    p.penalty(t)
}

pub fn huber_penalty_deriv(t: f64, p: &HuberParams) -> f64 {
    p.deriv(t)
}

fn residuals(inst: &RegressionInstance, beta: &DVector<f64>) -> Result<DVector<f64>> {
    if beta.len() != inst.d() {
        return Err(Error::shape(format!(
            "beta has length {}, design has {} columns",
            beta.len(),
            inst.d()
        )));
    }
    Ok(inst.x() * beta - inst.y())
}

/// `(1/n) sum_i Phi((X beta - y)_i)`
pub fn huber_loss(inst: &RegressionInstance, beta: &DVector<f64>, p: &HuberParams) -> Result<f64> {
    let r = residuals(inst, beta)?;
    Ok(r.iter().map(|&t| p.penalty(t)).sum::<f64>() / inst.n() as f64)
}

/// `(1/n) sum_i Phi'((X beta - y)_i) x_i`
pub fn huber_gradient(inst: &RegressionInstance, beta: &DVector<f64>, p: &HuberParams) -> Result<DVector<f64>> {
    let r = residuals(inst, beta)?;
    Ok(gradient_from_residuals(inst.x(), &r, p))
}

fn gradient_from_residuals(x: &DMatrix<f64>, r: &DVector<f64>, p: &HuberParams) -> DVector<f64> {
    let psi = r.map(|t| p.deriv(t));
    x.tr_mul(&psi) / x.nrows() as f64
}

/// Outcome of a Huber fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorResult {
    #[serde(with = "serde_vec")]
    pub beta_hat: DVector<f64>,
    pub iterations: usize,
    pub final_grad_norm: f64,
    pub final_loss: f64,
    pub converged: bool,
}

const POWER_ITERS: usize = 200;
const POWER_TOL: f64 = 1e-10;

/// Smoothness constant of the averaged loss: `(scale/h) * lambda_max(X^T X) / n`.
pub fn lipschitz_constant(x: &DMatrix<f64>, p: &HuberParams) -> f64 {
    let gram = x.tr_mul(x) / x.nrows() as f64;
    p.curvature() * linalg::power_iteration_max_eig(&gram, POWER_ITERS, POWER_TOL)
}

/// Gradient descent with step `1/L` from `beta0` (zero when `None`).
///
/// A step that would raise the loss is halved until it does not; the loss
/// sequence is therefore non-increasing. Running out of iterations or step
/// size is reported through `converged = false`, not as an error.
pub fn minimize_huber(
    inst: &RegressionInstance,
    p: &HuberParams,
    beta0: Option<&DVector<f64>>,
) -> Result<EstimatorResult> {
    p.validate()?;
    let d = inst.d();
    let mut beta = match beta0 {
        Some(b) if b.len() != d => {
            return Err(Error::shape(format!(
                "start point has length {}, expected {d}",
                b.len()
            )))
        }
        Some(b) => b.clone(),
        None => DVector::zeros(d),
    };
    let lipschitz = lipschitz_constant(inst.x(), p);
    if !(lipschitz > 0.0) {
        return Err(Error::invalid("design has lambda_max(X^T X) = 0"));
    }
    let n = inst.n() as f64;
    let mut r = residuals(inst, &beta)?;
    let mut grad = gradient_from_residuals(inst.x(), &r, p);
    let mut grad_norm = grad.norm();
    let mut iterations = 0;
    let mut converged = grad_norm <= p.grad_tol;
    let min_step = 1e-30 / lipschitz;

    while !converged && iterations < p.max_iters {
        let mut step = 1.0 / lipschitz;
        let accepted = loop {
            let delta = &grad * (-step);
            let dr = inst.x() * &delta;
            let change: f64 = r
                .iter()
                .zip(dr.iter())
                .map(|(&ri, &ai)| p.increment(ri, ai))
                .sum::<f64>()
                / n;
            if change <= 0.0 {
                beta += delta;
                r += dr;
                break true;
            }
            step *= 0.5;
            if step < min_step {
                break false;
            }
        };
        if !accepted {
            break;
        }
        iterations += 1;
        grad = gradient_from_residuals(inst.x(), &r, p);
        grad_norm = grad.norm();
        converged = grad_norm <= p.grad_tol;
    }

    // Fresh residuals so the reported loss carries no accumulated drift.
    let final_loss = huber_loss(inst, &beta, p)?;
    let final_grad_norm = huber_gradient(inst, &beta, p)?.norm();
    Ok(EstimatorResult {
        beta_hat: beta,
        iterations,
        final_grad_norm,
        final_loss,
        converged: final_grad_norm <= p.grad_tol,
    })
}

/// `||grad f(beta_star)||`; the associated bound assumes `X^T X = n I`.
pub fn gradient_norm_at_truth(inst: &RegressionInstance, p: &HuberParams) -> Result<f64> {
    let truth = inst.require_truth()?;
    let r = -&truth.eta;
    Ok(gradient_from_residuals(inst.x(), &r, p).norm())
}

/// `lambda_min` of `(1/n) sum_i [|<x_i,u>| <= 1] [|eta_i| <= 1] x_i x_i^T`.
pub fn hessian_lower_bound_eig(inst: &RegressionInstance, u: &DVector<f64>) -> Result<f64> {
    let truth = inst.require_truth()?;
    if u.len() != inst.d() {
        return Err(Error::shape(format!("u has length {}, expected {}", u.len(), inst.d())));
    }
    let xu = inst.x() * u;
    let keep: Vec<usize> = (0..inst.n())
        .filter(|&i| xu[i].abs() <= 1.0 && truth.eta[i].abs() <= 1.0)
        .collect();
    let d = inst.d();
    if keep.is_empty() {
        return Ok(0.0);
    }
    let sub = inst.x().select_rows(&keep);
    let m: DMatrix<f64> = sub.tr_mul(&sub) / inst.n() as f64;
    Ok(if d == 1 {
        m[(0, 0)]
    } else {
        linalg::min_eigenvalue_sym(&m)
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvexityProbe {
    /// Smallest observed `2 [f(b*+u) - f(b*) - <grad f(b*), u>] / ||u||^2`.
    pub min_ratio: f64,
    #[serde(with = "serde_vec")]
    pub worst_u: DVector<f64>,
}

/// Empirical local strong-convexity constant around `beta_star`.
///
/// Each sample is a uniform direction scaled to a radius drawn uniformly from the
/// ball of the given radius.
pub fn local_convexity_probe(
    inst: &RegressionInstance,
    p: &HuberParams,
    radius: f64,
    samples: usize,
    rng: &RandomSource,
) -> Result<ConvexityProbe> {
    let truth = inst.require_truth()?;
    p.validate()?;
    if !(radius > 0.0) {
        return Err(Error::invalid(format!("radius must be positive, got {radius}")));
    }
    if samples == 0 {
        return Err(Error::invalid("at least one sample is required"));
    }
    let d = inst.d();
    let n = inst.n() as f64;
    let mut s = rng.stream();
    let mut best = ConvexityProbe {
        min_ratio: f64::INFINITY,
        worst_u: DVector::zeros(d),
    };
    for _ in 0..samples {
        let dir = s.unit_vector(d);
        let mut rad = radius * s.uniform().powf(1.0 / d as f64);
        if rad == 0.0 {
            rad = radius;
        }
        let u = DVector::from_vec(dir) * rad;
        let a = inst.x() * &u;
        let div: f64 = truth
            .eta
            .iter()
            .zip(a.iter())
            .map(|(&e, &ai)| p.bregman(-e, ai))
            .sum::<f64>()
            / n;
        let ratio = 2.0 * div / u.norm_squared();
        if ratio < best.min_ratio {
            best = ConvexityProbe {
                min_ratio: ratio,
                worst_u: u,
            };
        }
    }
    Ok(best)
}

/// `2 ||grad|| / kappa` when `||grad|| < radius * kappa / 2`, otherwise `None`.
pub fn error_certificate(grad_norm: f64, kappa: f64, radius: f64) -> Option<f64> {
    if !(kappa > 0.0 && radius > 0.0 && grad_norm >= 0.0) {
        return None;
    }
    (grad_norm < 0.5 * radius * kappa).then(|| 2.0 * grad_norm / kappa)
}

/// `xo = x * t` with `xo^T xo = n I`.
#[derive(Debug, Clone, PartialEq)]
pub struct Orthogonalized {
    pub xo: DMatrix<f64>,
    pub t: DMatrix<f64>,
}

impl Orthogonalized {
    /// Maps coefficients fitted against `xo` back to the original columns.
    pub fn map_back(&self, beta_o: &DVector<f64>) -> DVector<f64> {
        &self.t * beta_o
    }

    /// Coefficients against `xo` equivalent to `beta` against the original columns.
    pub fn map_forward(&self, beta: &DVector<f64>) -> Result<DVector<f64>> {
        let lu = self.t.clone().lu();
        lu.solve(beta)
            .ok_or_else(|| Error::SingularMatrix("orthogonalizing transform is singular".into()))
    }
}

/// Thin QR with a positive diagonal: `xo = sqrt(n) Q`, `t = sqrt(n) R^{-1}`.
pub fn orthogonalize_columns(x: &DMatrix<f64>) -> Result<Orthogonalized> {
    let (n, d) = x.shape();
    if n < d || d == 0 {
        return Err(Error::SingularMatrix(format!(
            "{n}x{d} design cannot have full column rank"
        )));
    }
    let qr = x.clone().qr();
    let mut q = qr.q();
    let mut r = qr.r();
    let max_diag = r.diagonal().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for j in 0..d {
        let rjj = r[(j, j)];
        if !(rjj.abs() > 1e-12 * max_diag) {
            return Err(Error::SingularMatrix(format!(
                "column {j} is linearly dependent on earlier columns"
            )));
        }
        if rjj < 0.0 {
            let mut col = q.column_mut(j);
            col *= -1.0;
            let mut row = r.row_mut(j);
            row *= -1.0;
        }
    }
    let sqrt_n = (n as f64).sqrt();
    let r_inv = r
        .solve_upper_triangular(&DMatrix::identity(d, d))
        .ok_or_else(|| Error::SingularMatrix("triangular factor is singular".into()))?;
    Ok(Orthogonalized {
        xo: q * sqrt_n,
        t: r_inv * sqrt_n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_instance, gaussian_design, make_noise, NoiseSpec, OutlierPattern};
    use nalgebra::{dmatrix, dvector};

    fn p() -> HuberParams {
        HuberParams::default()
    }

    #[test]
    fn penalty_values() {
        assert_eq!(huber_penalty(0.0, &p()), 0.0);
        assert_eq!(huber_penalty(2.0, &p()), 2.0);
        assert_eq!(huber_penalty(3.0, &p()), 4.0);
        assert_eq!(huber_penalty(-3.0, &p()), huber_penalty(3.0, &p()));
    }

    #[test]
    fn derivative_values() {
        assert_eq!(huber_penalty_deriv(0.0, &p()), 0.0);
        assert_eq!(huber_penalty_deriv(5.0, &p()), 2.0);
        assert_eq!(huber_penalty_deriv(-1.0, &p()), -1.0);
    }

    #[test]
    fn unit_scale_variant() {
        // h = 1, scale = 1 is t^2/2 inside and |t| - 1/2 outside.
        let q = HuberParams {
            h: 1.0,
            scale: 1.0,
            ..p()
        };
        assert_eq!(q.penalty(0.5), 0.125);
        assert_eq!(q.penalty(3.0), 2.5);
        assert_eq!(q.deriv(3.0), 1.0);
    }

    #[test]
    fn penalty_is_c1_at_kinks() {
        for q in [
            p(),
            HuberParams {
                h: 0.3,
                scale: 1.7,
                ..p()
            },
        ] {
            for &t in &[q.h, -q.h] {
                let eps = 1e-9;
                assert!((q.penalty(t + eps) - q.penalty(t - eps)).abs() < 1e-8);
                assert!((q.deriv(t + eps) - q.deriv(t - eps)).abs() < 1e-7);
            }
        }
    }

    #[test]
    fn loss_examples() {
        let inst = RegressionInstance::new(dmatrix![1.0], dvector![0.0]).unwrap();
        assert_eq!(huber_loss(&inst, &dvector![0.0], &p()).unwrap(), 0.0);
        assert_eq!(huber_loss(&inst, &dvector![1.0], &p()).unwrap(), 0.5);
        assert_eq!(huber_loss(&inst, &dvector![10.0], &p()).unwrap(), 18.0);
        assert_eq!(huber_gradient(&inst, &dvector![10.0], &p()).unwrap(), dvector![2.0]);
        assert!(matches!(
            huber_loss(&inst, &dvector![1.0, 2.0], &p()),
            Err(Error::ShapeMismatch(_))
        ));
        assert!(huber_gradient(&inst, &dvector![1.0, 2.0], &p()).is_err());
    }

    #[test]
    fn gradient_vanishes_at_exact_fit() {
        let x = dmatrix![1.0, 2.0; 3.0, -1.0; 0.5, 0.5];
        let beta = dvector![0.7, -0.2];
        let inst = RegressionInstance::new(x.clone(), &x * &beta).unwrap();
        assert!(huber_gradient(&inst, &beta, &p()).unwrap().norm() < 1e-15);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let x = gaussian_design(40, 3, &RandomSource::new(3, 0)).unwrap();
        let y = DVector::from_fn(40, |i, _| (i as f64 * 0.37).sin() * 4.0);
        let inst = RegressionInstance::new(x, y).unwrap();
        let mut s = RandomSource::new(3, 1).stream();
        for _ in 0..20 {
            let beta = DVector::from_fn(3, |_, _| s.normal());
            let g = huber_gradient(&inst, &beta, &p()).unwrap();
            let h = 1e-6;
            for j in 0..3 {
                let mut up = beta.clone();
                let mut dn = beta.clone();
                up[j] += h;
                dn[j] -= h;
                let fd = (huber_loss(&inst, &up, &p()).unwrap() - huber_loss(&inst, &dn, &p()).unwrap()) / (2.0 * h);
                assert!((fd - g[j]).abs() <= 1e-6 * (1.0 + g.norm()), "fd {fd} vs {}", g[j]);
            }
        }
    }

    #[test]
    fn increment_and_bregman_agree_with_direct_formula() {
        let q = p();
        let pts = [-5.0, -2.5, -2.0, -1.0, 0.0, 0.3, 1.9, 2.0, 2.1, 7.0];
        for &r in &pts {
            for &a in &pts {
                let direct = q.penalty(r + a) - q.penalty(r);
                assert!((q.increment(r, a) - direct).abs() < 1e-12);
                let breg = direct - q.deriv(r) * a;
                assert!((q.bregman(r, a) - breg).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn identity_design_fits_exactly() {
        let y = dvector![0.5, -0.25, 1.0, 0.0];
        let inst = RegressionInstance::new(DMatrix::identity(4, 4), y.clone()).unwrap();
        let res = minimize_huber(&inst, &p(), None).unwrap();
        assert!(res.converged);
        assert!((res.beta_hat - y).norm() < 1e-8);
        assert!(res.final_loss < 1e-16);
    }

    #[test]
    fn noiseless_recovers_truth() {
        let x = gaussian_design(200, 4, &RandomSource::new(8, 0)).unwrap();
        let beta = dvector![3.0, -1.0, 0.5, 10.0];
        let inst = build_instance(beta.clone(), x, DVector::zeros(200)).unwrap();
        let res = minimize_huber(&inst, &p(), None).unwrap();
        assert!(res.converged);
        assert!((res.beta_hat - beta).norm() < 1e-6);
    }

    #[test]
    fn zero_design_rejected() {
        let inst = RegressionInstance::new(DMatrix::zeros(3, 2), dvector![1.0, 2.0, 3.0]).unwrap();
        assert!(matches!(
            minimize_huber(&inst, &p(), None),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn non_convergence_is_reported() {
        let x = gaussian_design(100, 3, &RandomSource::new(1, 0)).unwrap();
        let eta = make_noise(
            100,
            &NoiseSpec::new(0.5, OutlierPattern::ConstantSpike(100.0)),
            &RandomSource::new(1, 1),
        )
        .unwrap();
        let inst = build_instance(dvector![5.0, 5.0, 5.0], x, eta.values).unwrap();
        let q = HuberParams { max_iters: 2, ..p() };
        let res = minimize_huber(&inst, &q, None).unwrap();
        assert!(!res.converged);
        assert_eq!(res.iterations, 2);
    }

    #[test]
    fn loss_sequence_is_monotone() {
        let x = gaussian_design(300, 3, &RandomSource::new(2, 0)).unwrap();
        let eta = make_noise(
            300,
            &NoiseSpec::new(0.4, OutlierPattern::HeavyTail(1.2)),
            &RandomSource::new(2, 1),
        )
        .unwrap();
        let inst = build_instance(dvector![1.0, -4.0, 2.0], x, eta.values).unwrap();
        let mut prev = f64::INFINITY;
        let mut beta = DVector::zeros(3);
        for _ in 0..50 {
            let q = HuberParams { max_iters: 1, ..p() };
            let res = minimize_huber(&inst, &q, Some(&beta)).unwrap();
            assert!(res.final_loss <= prev * (1.0 + 1e-14), "{} > {}", res.final_loss, prev);
            prev = res.final_loss;
            beta = res.beta_hat;
        }
    }

    #[test]
    fn argmin_is_scale_invariant() {
        let x = gaussian_design(500, 3, &RandomSource::new(4, 0)).unwrap();
        let eta = make_noise(
            500,
            &NoiseSpec::new(0.5, OutlierPattern::ConstantSpike(50.0)),
            &RandomSource::new(4, 1),
        )
        .unwrap();
        let inst = build_instance(dvector![1.0, 2.0, 3.0], x, eta.values).unwrap();
        let a = minimize_huber(&inst, &p(), None).unwrap();
        let b = minimize_huber(&inst, &HuberParams { scale: 7.0, ..p() }, None).unwrap();
        assert!(a.converged && b.converged);
        assert!((a.beta_hat - b.beta_hat).norm() < 1e-6);
    }

    #[test]
    fn gradient_at_truth_examples() {
        let x = gaussian_design(10, 2, &RandomSource::new(1, 0)).unwrap();
        let inst = build_instance(dvector![1.0, 1.0], x, DVector::zeros(10)).unwrap();
        assert_eq!(gradient_norm_at_truth(&inst, &p()).unwrap(), 0.0);
        let inst = build_instance(dvector![0.0], dmatrix![1.0], dvector![3.0]).unwrap();
        assert_eq!(gradient_norm_at_truth(&inst, &p()).unwrap(), 2.0);
        let bare = RegressionInstance::new(dmatrix![1.0], dvector![3.0]).unwrap();
        assert!(matches!(gradient_norm_at_truth(&bare, &p()), Err(Error::MissingTruth)));
    }

    #[test]
    fn hessian_bound_examples() {
        let x = gaussian_design(50, 3, &RandomSource::new(6, 0)).unwrap();
        let inst = build_instance(dvector![1.0, 2.0, 3.0], x.clone(), DVector::zeros(50)).unwrap();
        let full = linalg::min_eigenvalue_sym(&(x.tr_mul(&x) / 50.0));
        let got = hessian_lower_bound_eig(&inst, &DVector::zeros(3)).unwrap();
        assert!((got - full).abs() < 1e-12);
        let outliers = build_instance(dvector![1.0, 2.0, 3.0], x, DVector::from_element(50, 5.0)).unwrap();
        assert_eq!(hessian_lower_bound_eig(&outliers, &DVector::zeros(3)).unwrap(), 0.0);
    }

    #[test]
    fn probe_in_quadratic_regime_is_exact() {
        // X = c I with eta = 0 and small u: every direction gives the same curvature c^2/n.
        let n = 4;
        let x = DMatrix::identity(n, n) * 1.5;
        let inst = build_instance(DVector::from_element(n, 1.0), x.clone(), DVector::zeros(n)).unwrap();
        let lmin = linalg::min_eigenvalue_sym(&(x.tr_mul(&x) / n as f64));
        let probe = local_convexity_probe(&inst, &p(), 0.5, 50, &RandomSource::new(1, 0)).unwrap();
        assert!((probe.min_ratio - lmin).abs() < 1e-6);
        let inst = build_instance(dvector![2.0], dmatrix![1.0; -2.0; 0.5], DVector::zeros(3)).unwrap();
        let probe = local_convexity_probe(&inst, &p(), 0.1, 20, &RandomSource::new(2, 0)).unwrap();
        assert!((probe.min_ratio - (1.0 + 4.0 + 0.25) / 3.0).abs() < 1e-9);
    }

    #[test]
    fn probe_identity_design() {
        let n = 6;
        let inst = build_instance(DVector::zeros(n), DMatrix::identity(n, n), DVector::zeros(n)).unwrap();
        let probe = local_convexity_probe(&inst, &p(), 0.2, 30, &RandomSource::new(3, 0)).unwrap();
        assert!((probe.min_ratio - 1.0 / n as f64).abs() < 1e-9);
    }

    #[test]
    fn certificate_examples() {
        assert_eq!(error_certificate(0.0, 1.0, 1.0), Some(0.0));
        assert!((error_certificate(0.1, 1.0, 1.0).unwrap() - 0.2).abs() < 1e-15);
        assert_eq!(error_certificate(0.6, 1.0, 1.0), None);
        assert_eq!(error_certificate(0.5, 1.0, 1.0), None);
        assert_eq!(error_certificate(0.1, 0.0, 1.0), None);
    }

    #[test]
    fn certificate_bounds_quadratic_minimizer() {
        // With no outliers and all residuals in the quadratic zone, f is a quadratic with
        // curvature lambda_min(X^T X / n), so the certificate must cover the true error.
        let x = gaussian_design(400, 3, &RandomSource::new(12, 0)).unwrap();
        let eta = DVector::from_fn(400, |i, _| ((i * 7919) % 13) as f64 / 13.0 - 0.5);
        let beta = dvector![0.2, 0.1, -0.3];
        let inst = build_instance(beta.clone(), x.clone(), eta).unwrap();
        let kappa = linalg::min_eigenvalue_sym(&(x.tr_mul(&x) / 400.0));
        let g = gradient_norm_at_truth(&inst, &p()).unwrap();
        let res = minimize_huber(&inst, &p(), None).unwrap();
        let bound = error_certificate(g, kappa, 1.0).expect("certificate applies");
        assert!((res.beta_hat - beta).norm() <= bound + 1e-8);
    }

    #[test]
    fn orthogonalize_random() {
        let x = gaussian_design(30, 4, &RandomSource::new(5, 0)).unwrap();
        let o = orthogonalize_columns(&x).unwrap();
        let gram = o.xo.tr_mul(&o.xo) / 30.0;
        assert!((gram - DMatrix::identity(4, 4)).abs().max() < 1e-10);
        assert!((&x * &o.t - &o.xo).abs().max() < 1e-10);
    }

    #[test]
    fn orthogonalize_already_orthogonal() {
        let x = dmatrix![1.0, 1.0; 1.0, -1.0; 1.0, 1.0; 1.0, -1.0];
        let o = orthogonalize_columns(&x).unwrap();
        assert!((&o.xo - &x).abs().max() < 1e-12);
        assert!((&o.t - DMatrix::identity(2, 2)).abs().max() < 1e-12);
    }

    #[test]
    fn orthogonalize_single_column() {
        let o = orthogonalize_columns(&dmatrix![2.0; 0.0]).unwrap();
        assert!((o.xo.norm_squared() - 2.0).abs() < 1e-12);
        assert!((o.xo[(0, 0)] - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn orthogonalize_rank_deficient() {
        let x = dmatrix![1.0, 2.0; 2.0, 4.0; 3.0, 6.0];
        assert!(matches!(orthogonalize_columns(&x), Err(Error::SingularMatrix(_))));
    }

    #[test]
    fn result_serializes_as_flat_json() {
        let r = EstimatorResult {
            beta_hat: dvector![1.0, 2.5],
            iterations: 3,
            final_grad_norm: 0.0,
            final_loss: 1.5,
            converged: true,
        };
        let s = serde_json::to_string(&r).unwrap();
        assert_eq!(
            s,
            r#"{"beta_hat":[1.0,2.5],"iterations":3,"final_grad_norm":0.0,"final_loss":1.5,"converged":true}"#
        );
    }
}
