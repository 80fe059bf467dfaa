use crate::error::Result;
use crate::scalar::Scalar;

use super::types::{DeterministicPolicy, DistributionSA, FiniteMdp, QTable};

/// `(P_pi q)(s, a) = sum_{s'} P(s'|s, a) q(s', pi(s'))` without shape checks.
pub(crate) fn kernel_apply<T: Scalar>(
    mdp: &FiniteMdp<T>,
    policy: &DeterministicPolicy,
    q: &QTable<T>,
) -> QTable<T> {
    QTable::from_fn(mdp.n_states(), mdp.n_actions(), |s, a| {
        mdp.support(s, a)
            .iter()
            .fold(T::zero(), |acc, &next| acc + mdp.p(s, a, next) * q[(next, policy.action(next))])
    })
}

/// `sum_{s'} P(s'|s, a) max_{a'} q(s', a')` without shape checks.
pub(crate) fn kernel_apply_greedy_max<T: Scalar>(mdp: &FiniteMdp<T>, q: &QTable<T>) -> QTable<T> {
    let row_max: Vec<T> = (0..mdp.n_states()).map(|s| row_max(q.row(s))).collect();
    QTable::from_fn(mdp.n_states(), mdp.n_actions(), |s, a| {
        mdp.support(s, a)
            .iter()
            .fold(T::zero(), |acc, &next| acc + mdp.p(s, a, next) * row_max[next])
    })
}

fn row_max<T: Scalar>(row: &[T]) -> T {
    row.iter()
        .skip(1)
        .fold(row[0], |m, &v| if v > m { v } else { m })
}

pub fn apply_policy_kernel<T: Scalar>(
    mdp: &FiniteMdp<T>,
    policy: &DeterministicPolicy,
    q: &QTable<T>,
) -> Result<QTable<T>> {
    mdp.check_policy("apply_policy_kernel", policy)?;
    mdp.check_table("apply_policy_kernel", q)?;
    Ok(kernel_apply(mdp, policy, q))
}

/// `T_pi q = r + gamma P_pi q`.
pub fn bellman_eval<T: Scalar>(
    mdp: &FiniteMdp<T>,
    policy: &DeterministicPolicy,
    q: &QTable<T>,
) -> Result<QTable<T>> {
    let mut out = apply_policy_kernel(mdp, policy, q)?;
    for (o, &r) in out.as_mut_slice().iter_mut().zip(mdp.reward().as_slice()) {
        *o = r + mdp.gamma() * *o;
    }
    Ok(out)
}

/// `T_* q = r + gamma P max q`.
pub fn bellman_opt<T: Scalar>(mdp: &FiniteMdp<T>, q: &QTable<T>) -> Result<QTable<T>> {
    mdp.check_table("bellman_opt", q)?;
    let mut out = kernel_apply_greedy_max(mdp, q);
    for (o, &r) in out.as_mut_slice().iter_mut().zip(mdp.reward().as_slice()) {
        *o = r + mdp.gamma() * *o;
    }
    Ok(out)
}

/// Greedy policy with ties broken toward the lowest action index.
pub fn greedy<T: Scalar>(q: &QTable<T>) -> DeterministicPolicy {
    let actions = (0..q.n_states())
        .map(|s| {
            let row = q.row(s);
            let mut best = 0;
            for (a, v) in row.iter().enumerate().skip(1) {
                if *v > row[best] {
                    best = a;
                }
            }
            best
        })
        .collect();
    DeterministicPolicy::new(actions, q.n_actions()).expect("argmax is a valid action")
}

pub fn sup_norm<T: Scalar>(q: &QTable<T>) -> T {
    q.iter().fold(T::zero(), |m, v| m.max_of(v.abs()))
}

/// `sum mu(s, a) |q(s, a)|`; exact for any scalar.
pub fn weighted_l1_norm<T: Scalar>(q: &QTable<T>, mu: &DistributionSA<T>) -> T {
    assert_eq!(q.shape(), mu.shape(), "weighted norm shape mismatch");
    q.iter()
        .zip(mu.mass().iter())
        .fold(T::zero(), |acc, (&v, &w)| acc + w * v.abs())
}

/// `(sum mu(s, a) |q(s, a)|^p)^(1/p)` for `p >= 1`.
pub fn weighted_lp_norm<T: Scalar + num_traits::Float>(
    q: &QTable<T>,
    mu: &DistributionSA<T>,
    p: T,
) -> Result<T> {
    if !(p >= T::one()) {
        return Err(crate::Error::Domain(format!("norm exponent {p} < 1")));
    }
    mu.mass().check_shape("weighted_lp_norm", q.shape())?;
    if p == T::one() {
        return Ok(weighted_l1_norm(q, mu));
    }
    let total = q
        .iter()
        .zip(mu.mass().iter())
        .fold(T::zero(), |acc, (&v, &w)| acc + w * num_traits::Float::powf(v.abs(), p));
    Ok(num_traits::Float::powf(total, T::one() / p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Rational;

    fn one_state_two_actions() -> FiniteMdp<f64> {
        let r = QTable::from_vec(1, 2, vec![1.0, 2.0]).unwrap();
        FiniteMdp::new(1, 2, vec![1.0, 1.0], r, 0.5).unwrap()
    }

    #[test]
    fn single_state_kernel_reads_policy_action() {
        let mdp = one_state_two_actions();
        let q = QTable::from_vec(1, 2, vec![3.0, 4.0]).unwrap();
        for a in 0..2 {
            let pi = DeterministicPolicy::constant(1, 2, a).unwrap();
            let out = apply_policy_kernel(&mdp, &pi, &q).unwrap();
            assert_eq!(out.as_slice(), &[q[(0, a)], q[(0, a)]]);
        }
    }

    #[test]
    fn deterministic_chain() {
        // s0 -> s1, s1 -> s1
        let mdp = FiniteMdp::from_fn(
            2,
            1,
            |_, _, next| if next == 1 { 1.0 } else { 0.0 },
            |_, _| 0.0,
            0.9,
        )
        .unwrap();
        let q = QTable::from_vec(2, 1, vec![0.0, 3.0]).unwrap();
        let pi = DeterministicPolicy::constant(2, 1, 0).unwrap();
        let out = apply_policy_kernel(&mdp, &pi, &q).unwrap();
        assert_eq!(out[(0, 0)], 3.0);
    }

    #[test]
    fn zero_discount_returns_reward() {
        let r = QTable::from_vec(1, 2, vec![1.0, -2.0]).unwrap();
        let mdp = FiniteMdp::new(1, 2, vec![1.0, 1.0], r.clone(), 0.0).unwrap();
        let q = QTable::from_vec(1, 2, vec![7.0, 9.0]).unwrap();
        let pi = DeterministicPolicy::constant(1, 2, 1).unwrap();
        assert_eq!(bellman_eval(&mdp, &pi, &q).unwrap(), r);
        assert_eq!(bellman_opt(&mdp, &q).unwrap(), r);
    }

    #[test]
    fn geometric_fixed_point_is_preserved() {
        let mdp = FiniteMdp::new(1, 1, vec![1.0], QTable::constant(1, 1, 1.0), 0.5).unwrap();
        let pi = DeterministicPolicy::constant(1, 1, 0).unwrap();
        let q = QTable::constant(1, 1, 2.0);
        assert_eq!(bellman_eval(&mdp, &pi, &q).unwrap(), q);
    }

    #[test]
    fn bellman_opt_hand_value_exact() {
        let h = Rational::new(1, 2);
        let r = QTable::from_vec(1, 2, vec![Rational::from_integer(1), Rational::from_integer(2)]).unwrap();
        let one = Rational::from_integer(1);
        let mdp = FiniteMdp::new(1, 2, vec![one, one], r, h).unwrap();
        let q = QTable::from_vec(1, 2, vec![Rational::from_integer(3), Rational::from_integer(4)]).unwrap();
        let out = bellman_opt(&mdp, &q).unwrap();
        assert_eq!(out.as_slice(), &[Rational::from_integer(3), Rational::from_integer(4)]);
    }

    #[test]
    fn greedy_ties_and_argmax() {
        let q = QTable::from_vec(3, 2, vec![1.0, 2.0, 0.5, 0.5, -1.0, -2.0]).unwrap();
        assert_eq!(greedy(&q).actions(), &[1, 0, 0]);
    }

    #[test]
    fn norms_on_small_tables() {
        assert_eq!(sup_norm(&QTable::<f64>::zeros(2, 2)), 0.0);
        let q = QTable::from_vec(1, 2, vec![-3.0, 2.0]).unwrap();
        assert_eq!(sup_norm(&q), 3.0);
        let mu = DistributionSA::uniform(1, 2);
        assert_eq!(weighted_lp_norm(&q, &mu, 1.0).unwrap(), 2.5);
        let c = QTable::constant(2, 3, -1.5);
        let w = DistributionSA::new(QTable::from_vec(2, 3, vec![0.1, 0.2, 0.3, 0.0, 0.25, 0.15]).unwrap()).unwrap();
        for p in [1.0, 2.0, 3.5] {
            assert!((weighted_lp_norm(&c, &w, p).unwrap() - 1.5_f64).abs() < 1e-14);
        }
        assert!(weighted_lp_norm(&c, &w, 0.5).is_err());
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let mdp = one_state_two_actions();
        let q = QTable::zeros(2, 2);
        let pi = DeterministicPolicy::constant(1, 2, 0).unwrap();
        assert!(apply_policy_kernel(&mdp, &pi, &q).is_err());
        assert!(bellman_opt(&mdp, &q).is_err());
        let pi3 = DeterministicPolicy::constant(3, 2, 0).unwrap();
        assert!(bellman_eval(&mdp, &pi3, &QTable::zeros(1, 2)).is_err());
    }
}
