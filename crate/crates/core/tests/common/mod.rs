#![allow(dead_code)]

use movi_core::rng::{rng_from_seed, uniform01, uniform_range};
use movi_core::{DeterministicPolicy, DistributionSA, FiniteMdp, QTable, Rational};

/// Dense random MDP: every successor has positive probability.
pub fn dense_mdp(n_states: usize, n_actions: usize, gamma: f64, seed: u64) -> FiniteMdp<f64> {
    let mut rng = rng_from_seed(seed);
    let mut transition = Vec::with_capacity(n_states * n_actions * n_states);
    for _ in 0..n_states * n_actions {
        let row: Vec<f64> = (0..n_states).map(|_| 0.05 + uniform01(&mut rng)).collect();
        let total: f64 = row.iter().sum();
        transition.extend(row.iter().map(|p| p / total));
    }
    let reward = QTable::from_fn(n_states, n_actions, |_, _| uniform_range(&mut rng, -1.0, 1.0));
    FiniteMdp::new(n_states, n_actions, transition, reward, gamma).unwrap()
}

pub fn random_table(n_states: usize, n_actions: usize, scale: f64, seed: u64) -> QTable<f64> {
    let mut rng = rng_from_seed(seed);
    QTable::from_fn(n_states, n_actions, |_, _| uniform_range(&mut rng, -scale, scale))
}

pub fn random_distribution(n_states: usize, n_actions: usize, seed: u64) -> DistributionSA<f64> {
    let mut rng = rng_from_seed(seed);
    let raw = QTable::from_fn(n_states, n_actions, |_, _| uniform01(&mut rng));
    let total: f64 = raw.iter().sum();
    DistributionSA::new(raw.map(|v| v / total)).unwrap()
}

pub fn random_policy(n_states: usize, n_actions: usize, seed: u64) -> DeterministicPolicy {
    let mut rng = rng_from_seed(seed);
    let actions = (0..n_states)
        .map(|_| ((uniform01(&mut rng) * n_actions as f64) as usize).min(n_actions - 1))
        .collect();
    DeterministicPolicy::new(actions, n_actions).unwrap()
}

/// `(P_pi q)(s, a)` by explicit summation over every successor.
pub fn kernel_oracle(mdp: &FiniteMdp<f64>, pi: &DeterministicPolicy, q: &QTable<f64>) -> QTable<f64> {
    let (ns, na) = mdp.shape();
    let mut out = QTable::zeros(ns, na);
    for s in 0..ns {
        for a in 0..na {
            let mut acc = 0.0;
            for next in 0..ns {
                acc += mdp.p(s, a, next) * q[(next, pi.action(next))];
            }
            out[(s, a)] = acc;
        }
    }
    out
}

/// Row vector `x P_pi`, i.e. `(x P_pi)(s', a') = [a' = pi(s')] sum_{s,a} x(s,a) P(s'|s,a)`.
pub fn left_kernel_oracle(mdp: &FiniteMdp<f64>, pi: &DeterministicPolicy, x: &QTable<f64>) -> QTable<f64> {
    let (ns, na) = mdp.shape();
    let mut out = QTable::zeros(ns, na);
    for s in 0..ns {
        for a in 0..na {
            for next in 0..ns {
                out[(next, pi.action(next))] += x[(s, a)] * mdp.p(s, a, next);
            }
        }
    }
    out
}

/// Dense `|S||A| x |S||A|` matrix of `P_pi`.
pub fn kernel_matrix(mdp: &FiniteMdp<f64>, pi: &DeterministicPolicy) -> Vec<Vec<f64>> {
    let (ns, na) = mdp.shape();
    let n = ns * na;
    let mut m = vec![vec![0.0; n]; n];
    for s in 0..ns {
        for a in 0..na {
            for next in 0..ns {
                m[s * na + a][next * na + pi.action(next)] += mdp.p(s, a, next);
            }
        }
    }
    m
}

pub fn mat_vec(m: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
    m.iter().map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum()).collect()
}

pub fn mat_mul(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    let mut out = vec![vec![0.0; n]; n];
    for i in 0..n {
        for k in 0..n {
            for j in 0..n {
                out[i][j] += a[i][k] * b[k][j];
            }
        }
    }
    out
}

pub fn identity(n: usize) -> Vec<Vec<f64>> {
    (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect()
}

/// `(I - gamma P_pi)^{-1} x` by the Neumann series truncated at `terms`.
pub fn neumann_oracle(mdp: &FiniteMdp<f64>, pi: &DeterministicPolicy, x: &QTable<f64>, terms: usize) -> QTable<f64> {
    let mut acc = x.clone();
    let mut v = x.clone();
    for _ in 0..terms {
        v = kernel_oracle(mdp, pi, &v).scale(mdp.gamma());
        acc.add_assign(&v);
    }
    acc
}

pub fn rat(n: i64, d: i64) -> Rational {
    Rational::new(n, d)
}

/// One state, one action, reward 1, gamma 1/2.
pub fn unit_mdp() -> FiniteMdp<Rational> {
    FiniteMdp::new(1, 1, vec![rat(1, 1)], QTable::constant(1, 1, rat(1, 1)), rat(1, 2)).unwrap()
}

/// One state, two actions, rewards [1, 2], gamma 1/2.
pub fn two_action_mdp<T: movi_core::Scalar>() -> FiniteMdp<T> {
    let reward = QTable::from_vec(1, 2, vec![T::one(), T::lit(2.0)]).unwrap();
    FiniteMdp::new(1, 2, vec![T::one(), T::one()], reward, T::lit(0.5)).unwrap()
}

pub fn assert_close(a: &QTable<f64>, b: &QTable<f64>, tol: f64, what: &str) {
    let diff = a.max_abs_diff(b);
    assert!(diff <= tol, "{what}: max deviation {diff:e} exceeds {tol:e}");
}
