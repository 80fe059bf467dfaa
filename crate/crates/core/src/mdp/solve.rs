//! Exact policy evaluation, value iteration to `q_*`, resolvents and
//! occupancy measures.

use crate::error::{Error, Result};
use crate::linalg::{DenseMatrix, LuFactors};
use crate::scalar::Scalar;

use super::ops::{bellman_opt, kernel_apply, sup_norm};
use super::types::{DeterministicPolicy, DistributionSA, FiniteMdp, QTable};

/// Residual tolerance `sup |T_pi q - q| <= tol * (1 + sup |q|)` for solves.
pub const SOLVE_RESIDUAL_TOL: f64 = 1e-10;
pub const DEFAULT_OPTIMAL_TOL: f64 = 1e-10;
pub const OPTIMAL_Q_ITERATION_CAP: usize = 1_000_000;

/// `(I - gamma P_pi)^{-1}` as a factored dense `|S||A|` system.
#[derive(Debug, Clone)]
pub struct Resolvent<T> {
    shape: (usize, usize),
    lu: LuFactors<T>,
}

impl<T: Scalar> Resolvent<T> {
    pub fn new(mdp: &FiniteMdp<T>, policy: &DeterministicPolicy) -> Result<Self> {
        mdp.check_policy("resolvent", policy)?;
        let (ns, na) = mdp.shape();
        let mut m = DenseMatrix::identity(ns * na);
        for s in 0..ns {
            for a in 0..na {
                let row = s * na + a;
                for &next in mdp.support(s, a) {
                    let col = next * na + policy.action(next);
                    m.add_to(row, col, -mdp.gamma() * mdp.p(s, a, next));
                }
            }
        }
        Ok(Self {
            shape: (ns, na),
            lu: m.lu()?,
        })
    }

    /// `(I - gamma P_pi)^{-1} x`.
    pub fn apply(&self, x: &QTable<T>) -> Result<QTable<T>> {
        x.check_shape("Resolvent::apply", self.shape)?;
        QTable::from_vec(self.shape.0, self.shape.1, self.lu.solve(x.as_slice()))
    }

    /// Row-vector product `x (I - gamma P_pi)^{-1}`.
    pub fn apply_left(&self, x: &QTable<T>) -> Result<QTable<T>> {
        x.check_shape("Resolvent::apply_left", self.shape)?;
        QTable::from_vec(
            self.shape.0,
            self.shape.1,
            self.lu.solve_transpose(x.as_slice()),
        )
    }
}

pub fn resolvent<T: Scalar>(mdp: &FiniteMdp<T>, policy: &DeterministicPolicy) -> Result<Resolvent<T>> {
    Resolvent::new(mdp, policy)
}

/// `q_pi`, the solution of `(I - gamma P_pi) q = r`.
pub fn exact_q_of_policy<T: Scalar>(mdp: &FiniteMdp<T>, policy: &DeterministicPolicy) -> Result<QTable<T>> {
    let q = Resolvent::new(mdp, policy)?.apply(mdp.reward())?;
    let mut back = kernel_apply(mdp, policy, &q);
    for (b, &r) in back.as_mut_slice().iter_mut().zip(mdp.reward().as_slice()) {
        *b = r + mdp.gamma() * *b;
    }
    let residual = back.max_abs_diff(&q).to_f64_lossy();
    let tolerance = SOLVE_RESIDUAL_TOL * (1.0 + sup_norm(&q).to_f64_lossy());
    if !(residual <= tolerance) {
        return Err(Error::SolveResidual { residual, tolerance });
    }
    Ok(q)
}

/// Value iteration from zero until `sup |T_* q - q| <= tol (1 - gamma) / (2 gamma)`.
///
/// The returned iterate is the last `T_* q`, which is then within `tol / 2`
/// of `q_*` in sup norm.
pub fn optimal_q<T: Scalar>(mdp: &FiniteMdp<T>, tol: T) -> Result<QTable<T>> {
    optimal_q_with_cap(mdp, tol, OPTIMAL_Q_ITERATION_CAP)
}

pub fn optimal_q_with_cap<T: Scalar>(mdp: &FiniteMdp<T>, tol: T, cap: usize) -> Result<QTable<T>> {
    if !(tol > T::zero()) {
        return Err(Error::Domain(format!("tolerance {tol} must be positive")));
    }
    let gamma = mdp.gamma();
    let mut q = QTable::zeros(mdp.n_states(), mdp.n_actions());
    if gamma == T::zero() {
        return bellman_opt(mdp, &q);
    }
    let threshold = tol * (T::one() - gamma) / (T::lit(2.0) * gamma);
    let mut residual = T::zero();
    for _ in 0..cap {
        let next = bellman_opt(mdp, &q)?;
        residual = next.max_abs_diff(&q);
        q = next;
        if residual <= threshold {
            return Ok(q);
        }
    }
    Err(Error::IterationCap {
        iterations: cap,
        residual: residual.to_f64_lossy(),
    })
}

/// Discounted occupancy `d_{pi,mu} = (1 - gamma) mu (I - gamma P_pi)^{-1}`.
pub fn occupancy<T: Scalar>(
    mdp: &FiniteMdp<T>,
    policy: &DeterministicPolicy,
    mu: &DistributionSA<T>,
) -> Result<DistributionSA<T>> {
    mu.mass().check_shape("occupancy", mdp.shape())?;
    let resolvent = Resolvent::new(mdp, policy)?;
    occupancy_with(&resolvent, mdp.gamma(), mu)
}

pub(crate) fn occupancy_with<T: Scalar>(
    resolvent: &Resolvent<T>,
    gamma: T,
    mu: &DistributionSA<T>,
) -> Result<DistributionSA<T>> {
    let scaled = mu.mass().scale(T::one() - gamma);
    let mut d = resolvent.apply_left(&scaled)?;
    // Round-off can leave entries a hair below zero.
    for v in d.as_mut_slice() {
        if *v < T::zero() && v.to_f64_lossy() > -1e-12 {
            *v = T::zero();
        }
    }
    DistributionSA::with_tolerance(d, SOLVE_RESIDUAL_TOL)
}
