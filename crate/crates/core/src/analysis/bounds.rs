use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mdp::{
    exact_q_of_policy, greedy, kernel_apply, optimal_q, sup_norm, weighted_l1_norm,
    DeterministicPolicy, DistributionSA, FiniteMdp, QTable, Resolvent,
};
use crate::scalar::Scalar;

use super::concentrability::Concentrability;
use super::ledger::ErrorLedger;

/// Slack absorbed by every inequality check.
pub const BOUND_SLACK: f64 = 1e-8;

/// `x - gamma P_pi x`
fn one_minus_gamma_p<T: Scalar>(mdp: &FiniteMdp<T>, pi: &DeterministicPolicy, x: &QTable<T>) -> QTable<T> {
    let px = kernel_apply(mdp, pi, x);
    x.zip_map(&px, |a, b| a - mdp.gamma() * b)
}

fn need<T: Scalar>(ledger: &ErrorLedger<T>, n: usize) -> Result<()> {
    if n > ledger.len() {
        return Err(Error::LedgerIndex {
            index: n,
            len: ledger.len(),
        });
    }
    Ok(())
}

fn check_ledger<T: Scalar>(ledger: &ErrorLedger<T>, mdp: &FiniteMdp<T>) -> Result<()> {
    mdp.check_table("ledger", ledger.q0())
}

/// `E_k = -sum_{j=1}^k eps_j`.
pub fn cumulative_error<T: Scalar>(ledger: &ErrorLedger<T>, k: usize) -> Result<QTable<T>> {
    need(ledger, k)?;
    let (ns, na) = ledger.q0().shape();
    let mut out = QTable::zeros(ns, na);
    for eps in &ledger.epsilons()[..k] {
        out.sub_assign(eps);
    }
    Ok(out)
}

/// `E'_{k,j} = -sum_{i=1}^{k-j} P_{i+j:i+1} (I - gamma P_{pi_i}) eps_i`.
pub fn weighted_cumulative_error<T: Scalar>(
    ledger: &ErrorLedger<T>,
    mdp: &FiniteMdp<T>,
    k: usize,
    j: usize,
) -> Result<QTable<T>> {
    need(ledger, k)?;
    check_ledger(ledger, mdp)?;
    if j > k {
        return Err(Error::LedgerIndex { index: j, len: k });
    }
    let eps = ledger.epsilons();
    let pis = ledger.policies();
    let mut out = QTable::zeros(mdp.n_states(), mdp.n_actions());
    for i in 1..=k - j {
        let mut v = one_minus_gamma_p(mdp, &pis[i - 1], &eps[i - 1]);
        for m in i + 1..=i + j {
            v = kernel_apply(mdp, &pis[m - 1], &v);
        }
        out.sub_assign(&v);
    }
    Ok(out)
}

/// `E'_{k,j}` for every `j in 0..k` with `O(k^2)` kernel applications.
pub fn weighted_cumulative_errors<T: Scalar>(
    ledger: &ErrorLedger<T>,
    mdp: &FiniteMdp<T>,
    k: usize,
) -> Result<Vec<QTable<T>>> {
    need(ledger, k)?;
    check_ledger(ledger, mdp)?;
    let eps = ledger.epsilons();
    let pis = ledger.policies();
    let mut out = vec![QTable::zeros(mdp.n_states(), mdp.n_actions()); k];
    for i in 1..=k {
        // v walks through P_{i+j:i+1} (I - gamma P_{pi_i}) eps_i for j = 0, 1, ...
        let mut v = one_minus_gamma_p(mdp, &pis[i - 1], &eps[i - 1]);
        for j in 0..=k - i {
            out[j].sub_assign(&v);
            if j < k - i {
                v = kernel_apply(mdp, &pis[i + j], &v);
            }
        }
    }
    Ok(out)
}

/// Error quantities shared by the MoVI bounds at index `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorTerms<T> {
    pub k: usize,
    /// `E_{k+1}`
    pub cumulative: QTable<T>,
    /// `E'_{k,j}` for `j in 0..k`
    pub weighted: Vec<QTable<T>>,
}

impl<T: Scalar> ErrorTerms<T> {
    /// `sum_j gamma^j E'_{k,j}`
    pub fn discounted_weighted_sum(&self, gamma: T) -> QTable<T> {
        let (ns, na) = self.cumulative.shape();
        let mut acc = QTable::zeros(ns, na);
        let mut g = T::one();
        for e in &self.weighted {
            acc.axpy(g, e);
            g *= gamma;
        }
        acc
    }

    /// `sum_j gamma^j norm(E'_{k,j})`
    pub fn discounted_norm_sum(&self, gamma: T, norm: impl Fn(&QTable<T>) -> T) -> T {
        let mut acc = T::zero();
        let mut g = T::one();
        for e in &self.weighted {
            acc += g * norm(e);
            g *= gamma;
        }
        acc
    }
}

/// Computes `E_{k+1}` and all `E'_{k,j}`; the ledger needs `k + 1` entries.
pub fn error_terms<T: Scalar>(ledger: &ErrorLedger<T>, mdp: &FiniteMdp<T>, k: usize) -> Result<ErrorTerms<T>> {
    need(ledger, k + 1)?;
    Ok(ErrorTerms {
        k,
        cumulative: cumulative_error(ledger, k + 1)?,
        weighted: weighted_cumulative_errors(ledger, mdp, k)?,
    })
}

fn theorem1_with<T: Scalar>(
    ledger: &ErrorLedger<T>,
    mdp: &FiniteMdp<T>,
    star: &Resolvent<T>,
    terms: &ErrorTerms<T>,
) -> Result<QTable<T>> {
    let k = terms.k;
    let gamma = mdp.gamma();
    let pis = ledger.policies();
    let q0 = ledger.q0();

    let q_next = ledger.q_iterate(mdp, k + 1)?;
    let upper = star.apply(&terms.cumulative.add(&q_next).sub(q0))?;

    // sum_{j=0}^k gamma^j P_{j:1} (T_{pi_1} q0 - q0)
    let mut v = kernel_apply(mdp, &pis[0], q0);
    for ((x, &r), &q) in v.as_mut_slice().iter_mut().zip(mdp.reward().as_slice()).zip(q0.as_slice()) {
        *x = r + gamma * *x - q;
    }
    let mut transient = v.clone();
    let mut g = T::one();
    for pi in &pis[..k] {
        v = kernel_apply(mdp, pi, &v);
        g *= gamma;
        transient.axpy(g, &v);
    }

    let mut inner = terms.discounted_weighted_sum(gamma);
    inner.add_assign(&transient);
    let lower = Resolvent::new(mdp, &pis[k])?.apply(&inner)?;
    let scale = T::one() / T::of_usize(k + 1);
    Ok(upper.sub(&lower).scale(scale))
}

/// Componentwise bound on `q_* - q_{pi_{k+1}}` after `k + 1` MoVI iterations.
pub fn theorem1_rhs<T: Scalar>(
    ledger: &ErrorLedger<T>,
    mdp: &FiniteMdp<T>,
    pi_star: &DeterministicPolicy,
    k: usize,
) -> Result<QTable<T>> {
    let terms = error_terms(ledger, mdp, k)?;
    theorem1_with(ledger, mdp, &Resolvent::new(mdp, pi_star)?, &terms)
}

fn require_zero_start<T: Scalar>(ledger: &ErrorLedger<T>) -> Result<()> {
    if ledger.q0().iter().any(|v| !v.is_zero()) {
        return Err(Error::Domain("the norm bounds assume q_0 = 0".into()));
    }
    Ok(())
}

fn norm_bound<T: Scalar>(mdp: &FiniteMdp<T>, terms: &ErrorTerms<T>, norm: impl Fn(&QTable<T>) -> T) -> T {
    let gamma = mdp.gamma();
    let total = norm(&terms.cumulative)
        + terms.discounted_norm_sum(gamma, &norm)
        + T::lit(2.0) * mdp.q_max();
    total / (T::of_usize(terms.k + 1) * (T::one() - gamma))
}

/// `C / ((k+1)(1-gamma)) (|E_{k+1}|_{1,nu} + sum_j gamma^j |E'_{k,j}|_{1,nu} + 2 q_max)`.
pub fn corollary1_rhs<T: Scalar>(
    ledger: &ErrorLedger<T>,
    mdp: &FiniteMdp<T>,
    nu: &DistributionSA<T>,
    k: usize,
    c: T,
) -> Result<T> {
    require_zero_start(ledger)?;
    nu.mass().check_shape("corollary1_rhs", mdp.shape())?;
    if !(c > T::zero()) {
        return Err(Error::Domain(format!("concentrability {c} must be positive")));
    }
    let terms = error_terms(ledger, mdp, k)?;
    Ok(c * norm_bound(mdp, &terms, |q| weighted_l1_norm(q, nu)))
}

/// Sup-norm bound `(|E_{k+1}| + sum_j gamma^j |E'_{k,j}| + 2 q_max) / ((k+1)(1-gamma))`.
pub fn sup_norm_rhs<T: Scalar>(ledger: &ErrorLedger<T>, mdp: &FiniteMdp<T>, k: usize) -> Result<T> {
    require_zero_start(ledger)?;
    let terms = error_terms(ledger, mdp, k)?;
    Ok(norm_bound(mdp, &terms, sup_norm))
}

/// High-probability bound on the sup-norm loss after `k` iterations.
pub fn prop1_rhs(k: usize, delta: f64, r_max: f64, gamma: f64, n_states: usize, n_actions: usize) -> Result<f64> {
    if k == 0 {
        return Err(Error::Domain("k must be at least 1".into()));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Domain(format!("delta {delta} must lie in (0, 1)")));
    }
    if !(0.0..1.0).contains(&gamma) || !(r_max >= 0.0) || n_states == 0 || n_actions == 0 {
        return Err(Error::Domain("invalid MDP constants".into()));
    }
    let k = k as f64;
    let log_term = (4.0 * (n_states * n_actions) as f64 / delta).ln();
    let scale = 2.0 * r_max / ((1.0 - gamma) * (1.0 - gamma));
    Ok(scale * (1.0 / k + 3.0 / (1.0 - gamma) * (2.0 * log_term / k).sqrt()))
}

/// Sup-norm bound for SQL and DPP after `k` iterations:
/// `2 gamma / (k (1-gamma)) (sum_{j=1}^k gamma^{k-j} |E_j| + 8 gamma q_max / (1-gamma))`.
pub fn sqldpp_rhs<T: Scalar>(ledger: &ErrorLedger<T>, mdp: &FiniteMdp<T>, k: usize) -> Result<T> {
    if k == 0 {
        return Err(Error::Domain("k must be at least 1".into()));
    }
    need(ledger, k)?;
    let gamma = mdp.gamma();
    let one = T::one();
    let (ns, na) = ledger.q0().shape();
    let mut e = QTable::zeros(ns, na);
    let mut acc = T::zero();
    for eps in &ledger.epsilons()[..k] {
        e.sub_assign(eps);
        acc = gamma * acc + sup_norm(&e);
    }
    let tail = T::lit(8.0) * gamma * mdp.q_max() / (one - gamma);
    Ok(T::lit(2.0) * gamma / (T::of_usize(k) * (one - gamma)) * (acc + tail))
}

/// `q_* - q_pi`.
pub fn loss<T: Scalar>(mdp: &FiniteMdp<T>, q_star: &QTable<T>, policy: &DeterministicPolicy) -> Result<QTable<T>> {
    mdp.check_table("loss", q_star)?;
    Ok(q_star.sub(&exact_q_of_policy(mdp, policy)?))
}

/// Everything about the MDP the MoVI bound checks need, computed once.
#[derive(Debug, Clone)]
pub struct BoundContext<'a, T> {
    pub mdp: &'a FiniteMdp<T>,
    pub q_star: QTable<T>,
    pub pi_star: DeterministicPolicy,
    pub mu: DistributionSA<T>,
    pub nu: DistributionSA<T>,
    pub concentrability: Option<Concentrability<T>>,
    pub delta: f64,
    star: Resolvent<T>,
}

impl<'a, T: Scalar> BoundContext<'a, T> {
    /// Solves for `q_*` to `tol` and takes `pi_* = G(q_*)`.
    pub fn new(
        mdp: &'a FiniteMdp<T>,
        tol: T,
        mu: DistributionSA<T>,
        nu: DistributionSA<T>,
        concentrability: Option<Concentrability<T>>,
        delta: f64,
    ) -> Result<Self> {
        mu.mass().check_shape("BoundContext::mu", mdp.shape())?;
        nu.mass().check_shape("BoundContext::nu", mdp.shape())?;
        let q_star = optimal_q(mdp, tol)?;
        let pi_star = greedy(&q_star);
        let star = Resolvent::new(mdp, &pi_star)?;
        Ok(Self {
            mdp,
            q_star,
            pi_star,
            mu,
            nu,
            concentrability,
            delta,
            star,
        })
    }
}

/// Bound checks for the policy `pi_{k+1}` of a MoVI run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport<T> {
    pub iteration: usize,
    /// `q_* - q_{pi_{k+1}}`
    pub loss: QTable<T>,
    pub rhs_componentwise: QTable<T>,
    pub loss_l1mu: T,
    /// Absent when no concentrability coefficient is available.
    pub rhs_l1mu: Option<T>,
    /// Whether `rhs_l1mu` rests on an exact coefficient.
    pub concentrability_exact: bool,
    pub loss_sup: T,
    pub rhs_sup: T,
    pub rhs_prop1: f64,
    pub holds_componentwise: bool,
    /// `min_{s,a} (rhs - loss)`
    pub slack_min: f64,
}

impl<T: Scalar> BoundReport<T> {
    pub fn slack_sup(&self) -> f64 {
        (self.rhs_sup - self.loss_sup).to_f64_lossy()
    }

    pub fn slack_l1mu(&self) -> Option<f64> {
        self.rhs_l1mu.map(|r| (r - self.loss_l1mu).to_f64_lossy())
    }

    pub fn slack_prop1(&self) -> f64 {
        self.rhs_prop1 - self.loss_sup.to_f64_lossy()
    }

    pub fn holds_sup(&self) -> bool {
        self.slack_sup() >= -BOUND_SLACK
    }

    pub fn holds_l1mu(&self) -> Option<bool> {
        self.slack_l1mu().map(|s| s >= -BOUND_SLACK)
    }

    pub fn holds_prop1(&self) -> bool {
        self.slack_prop1() >= -BOUND_SLACK
    }
}

/// Evaluates every MoVI bound at index `k` (loss of `pi_{k+1}`).
pub fn movi_bound_report<T: Scalar>(
    ledger: &ErrorLedger<T>,
    ctx: &BoundContext<'_, T>,
    k: usize,
) -> Result<BoundReport<T>> {
    let mdp = ctx.mdp;
    require_zero_start(ledger)?;
    let terms = error_terms(ledger, mdp, k)?;
    let rhs = theorem1_with(ledger, mdp, &ctx.star, &terms)?;
    let policy = ledger.policy(k + 1)?;
    let loss = loss(mdp, &ctx.q_star, policy)?;

    let slack_min = rhs
        .iter()
        .zip(loss.iter())
        .map(|(&r, &l)| (r - l).to_f64_lossy())
        .fold(f64::INFINITY, f64::min);
    let rhs_l1mu = ctx
        .concentrability
        .as_ref()
        .map(|c| c.value * norm_bound(mdp, &terms, |q| weighted_l1_norm(q, &ctx.nu)));
    Ok(BoundReport {
        iteration: k,
        loss_l1mu: weighted_l1_norm(&loss, &ctx.mu),
        rhs_l1mu,
        concentrability_exact: ctx.concentrability.as_ref().is_some_and(|c| c.exact),
        loss_sup: sup_norm(&loss),
        rhs_sup: norm_bound(mdp, &terms, sup_norm),
        rhs_prop1: prop1_rhs(
            k + 1,
            ctx.delta,
            mdp.r_max().to_f64_lossy(),
            mdp.gamma().to_f64_lossy(),
            mdp.n_states(),
            mdp.n_actions(),
        )?,
        holds_componentwise: slack_min >= -BOUND_SLACK,
        slack_min,
        loss,
        rhs_componentwise: rhs,
    })
}
