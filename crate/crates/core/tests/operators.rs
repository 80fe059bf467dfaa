mod common;

use common::*;
use movi_core::mdp::{optimal_q_with_cap, weighted_lp_norm};
use movi_core::*;
use proptest::prelude::*;

#[test]
fn kernel_matches_triple_loop() {
    for seed in 0..5 {
        let mdp = dense_mdp(5, 3, 0.9, seed);
        let q = random_table(5, 3, 4.0, 100 + seed);
        let pi = random_policy(5, 3, 200 + seed);
        let fast = apply_policy_kernel(&mdp, &pi, &q).unwrap();
        assert_close(&fast, &kernel_oracle(&mdp, &pi, &q), 1e-12, "P_pi q");
    }
}

#[test]
fn kernel_on_single_state() {
    let one = FiniteMdp::new(1, 1, vec![1.0], QTable::constant(1, 1, 0.0), 0.9).unwrap();
    let q = QTable::constant(1, 1, -2.5);
    let pi = DeterministicPolicy::constant(1, 1, 0).unwrap();
    assert_eq!(apply_policy_kernel(&one, &pi, &q).unwrap(), q);

    // With several actions the successor's action is the policy's.
    let mdp = two_action_mdp::<f64>();
    let q = QTable::from_vec(1, 2, vec![3.0, 7.0]).unwrap();
    let pi = DeterministicPolicy::constant(1, 2, 1).unwrap();
    let out = apply_policy_kernel(&mdp, &pi, &q).unwrap();
    assert_eq!(out.as_slice(), &[7.0, 7.0]);
}

#[test]
fn kernel_on_deterministic_chain() {
    // s0 -> s1, s1 -> s1
    let mdp = FiniteMdp::from_fn(2, 1, |_, _, next| if next == 1 { 1.0 } else { 0.0 }, |_, _| 0.0, 0.9).unwrap();
    let mut q = QTable::zeros(2, 1);
    q[(1, 0)] = 3.0;
    let pi = DeterministicPolicy::constant(2, 1, 0).unwrap();
    assert_eq!(apply_policy_kernel(&mdp, &pi, &q).unwrap()[(0, 0)], 3.0);
}

#[test]
fn zero_discount_backups_return_reward() {
    let mdp = dense_mdp(4, 2, 0.0, 3);
    let q = random_table(4, 2, 10.0, 4);
    let pi = random_policy(4, 2, 5);
    assert_eq!(&bellman_eval(&mdp, &pi, &q).unwrap(), mdp.reward());
    assert_eq!(&bellman_opt(&mdp, &q).unwrap(), mdp.reward());
    assert_eq!(&exact_q_of_policy(&mdp, &pi).unwrap(), mdp.reward());
}

#[test]
fn exact_backups_on_hand_examples() {
    let unit = unit_mdp();
    let pi = DeterministicPolicy::constant(1, 1, 0).unwrap();
    let two = QTable::constant(1, 1, rat(2, 1));
    assert_eq!(bellman_eval(&unit, &pi, &two).unwrap(), two);
    assert_eq!(exact_q_of_policy(&unit, &pi).unwrap(), two);

    let mdp = two_action_mdp::<Rational>();
    let q = QTable::from_vec(1, 2, vec![rat(3, 1), rat(4, 1)]).unwrap();
    assert_eq!(bellman_opt(&mdp, &q).unwrap(), q);
}

#[test]
fn greedy_matches_scan() {
    for seed in 0..20 {
        let q = random_table(7, 5, 1.0, seed);
        let pi = greedy(&q);
        for s in 0..7 {
            let mut best = 0;
            for a in 1..5 {
                if q[(s, a)] > q[(s, best)] {
                    best = a;
                }
            }
            assert_eq!(pi.action(s), best);
        }
    }
    let tied = QTable::from_vec(1, 2, vec![0.5, 0.5]).unwrap();
    assert_eq!(greedy(&tied).action(0), 0);
    let plain = QTable::from_vec(1, 2, vec![1.0, 2.0]).unwrap();
    assert_eq!(greedy(&plain).action(0), 1);
}

#[test]
fn exact_q_matches_fixed_point_iteration() {
    for seed in 0..3 {
        let mdp = generate(&GarnetSpec::new(20, 3, 4, seed), 0.9).unwrap();
        let pi = random_policy(20, 3, seed + 50);
        let mut q = QTable::zeros(20, 3);
        for _ in 0..10_000 {
            q = bellman_eval(&mdp, &pi, &q).unwrap();
        }
        let solved = exact_q_of_policy(&mdp, &pi).unwrap();
        assert_close(&solved, &q, 1e-8, "q_pi");
        assert!(sup_norm(&solved) <= mdp.q_max());
    }
}

#[test]
fn optimal_q_matches_policy_enumeration() {
    let mdp = dense_mdp(4, 3, 0.8, 11);
    let q_star = optimal_q(&mdp, 1e-12).unwrap();
    let mut best = QTable::constant(4, 3, f64::NEG_INFINITY);
    for index in 0..81 {
        let q = exact_q_of_policy(&mdp, &DeterministicPolicy::from_index(index, 4, 3)).unwrap();
        best = best.zip_map(&q, f64::max);
    }
    assert_close(&q_star, &best, 1e-10, "q_*");

    let hand = optimal_q(&two_action_mdp::<f64>(), 1e-12).unwrap();
    assert_close(&hand, &QTable::from_vec(1, 2, vec![3.0, 4.0]).unwrap(), 1e-11, "q_* hand");
}

#[test]
fn optimal_q_reports_cap() {
    let mdp = generate(&GarnetSpec::new(10, 2, 2, 0), 0.99).unwrap();
    assert!(matches!(optimal_q_with_cap(&mdp, 1e-12, 5), Err(Error::IterationCap { .. })));
}

#[test]
fn exact_value_iteration_rate() {
    for seed in 0..20 {
        let mdp = generate(&GarnetSpec::new(10, 2, 2, seed), 0.9).unwrap();
        let q_star = optimal_q(&mdp, 1e-12).unwrap();
        let mut q = QTable::zeros(10, 2);
        let mut envelope = 2.0 * mdp.q_max();
        for _ in 0..200 {
            q = bellman_opt(&mdp, &q).unwrap();
            envelope *= mdp.gamma();
            assert!(q.max_abs_diff(&q_star) <= envelope + 1e-12);
            assert!(sup_norm(&q) <= mdp.q_max());
        }
    }
}

#[test]
fn occupancy_matches_power_series() {
    for seed in 0..3 {
        let mdp = dense_mdp(6, 2, 0.9, seed);
        let pi = random_policy(6, 2, seed + 9);
        let mu = random_distribution(6, 2, seed + 19);
        let d = occupancy(&mdp, &pi, &mu).unwrap();
        let mut term = mu.mass().clone();
        let mut acc = term.clone();
        for _ in 0..2000 {
            term = left_kernel_oracle(&mdp, &pi, &term).scale(mdp.gamma());
            acc.add_assign(&term);
        }
        assert_close(d.mass(), &acc.scale(1.0 - mdp.gamma()), 1e-6, "occupancy");
    }
}

#[test]
fn occupancy_of_single_state_is_mu() {
    let mdp = FiniteMdp::new(1, 1, vec![1.0], QTable::constant(1, 1, 0.3), 0.95).unwrap();
    let pi = DeterministicPolicy::constant(1, 1, 0).unwrap();
    let mu = DistributionSA::uniform(1, 1);
    let d = occupancy(&mdp, &pi, &mu).unwrap();
    assert!((d.get(0, 0) - 1.0_f64).abs() < 1e-12);
}

#[test]
fn norms_match_summation() {
    for seed in 0..10 {
        let q = random_table(5, 4, 3.0, seed);
        let mu = random_distribution(5, 4, seed + 1);
        let mut two = 0.0;
        let mut sup: f64 = 0.0;
        for s in 0..5 {
            for a in 0..4 {
                two += mu.get(s, a) * q[(s, a)] * q[(s, a)];
                sup = sup.max(q[(s, a)].abs());
            }
        }
        assert!((weighted_lp_norm(&q, &mu, 2.0).unwrap() - two.sqrt()).abs() < 1e-12);
        assert_eq!(sup_norm(&q), sup);
        let uniform = DistributionSA::uniform(5, 4);
        let mean = q.iter().map(|v| v.abs()).sum::<f64>() / 20.0;
        assert!((weighted_l1_norm(&q, &uniform) - mean).abs() < 1e-12);
    }
}

#[test]
fn generic_over_f32() {
    let mdp64 = generate(&GarnetSpec::new(8, 2, 3, 4), 0.9).unwrap();
    let mdp32: Mdp32 = mdp64.cast().unwrap();
    let q64 = optimal_q(&mdp64, 1e-10).unwrap();
    let q32 = optimal_q(&mdp32, 1e-4).unwrap();
    assert!(q64.cast::<f32>().max_abs_diff(&q32) < 1e-3);
    assert_eq!(greedy(&q64), greedy(&q32));
}

#[test]
fn dimension_mismatch_is_an_error() {
    let mdp = dense_mdp(3, 2, 0.9, 0);
    let pi = DeterministicPolicy::constant(3, 2, 0).unwrap();
    let wrong = QTable::zeros(2, 2);
    assert!(matches!(apply_policy_kernel(&mdp, &pi, &wrong), Err(Error::DimensionMismatch { .. })));
    assert!(bellman_opt(&mdp, &wrong).is_err());
}

fn small_mdp() -> impl Strategy<Value = (FiniteMdp<f64>, u64)> {
    (1usize..6, 1usize..4, 0.0f64..0.99, any::<u64>())
        .prop_map(|(ns, na, gamma, seed)| (dense_mdp(ns, na, gamma, seed), seed))
}

proptest! {
    #[test]
    fn operators_contract((mdp, seed) in small_mdp()) {
        let (ns, na) = mdp.shape();
        let q = random_table(ns, na, 5.0, seed ^ 1);
        let r = random_table(ns, na, 5.0, seed ^ 2);
        let pi = random_policy(ns, na, seed ^ 3);
        let gap = q.max_abs_diff(&r);
        let eval = bellman_eval(&mdp, &pi, &q).unwrap().max_abs_diff(&bellman_eval(&mdp, &pi, &r).unwrap());
        let opt = bellman_opt(&mdp, &q).unwrap().max_abs_diff(&bellman_opt(&mdp, &r).unwrap());
        prop_assert!(eval <= mdp.gamma() * gap + 1e-12);
        prop_assert!(opt <= mdp.gamma() * gap + 1e-12);
    }

    #[test]
    fn operators_are_monotone((mdp, seed) in small_mdp(), bump in 0.0f64..3.0) {
        let (ns, na) = mdp.shape();
        let q = random_table(ns, na, 5.0, seed ^ 4);
        let lift = random_table(ns, na, bump.max(1e-3), seed ^ 5).map(f64::abs);
        let upper = q.add(&lift);
        let pi = random_policy(ns, na, seed ^ 6);
        let (lo, hi) = (bellman_eval(&mdp, &pi, &q).unwrap(), bellman_eval(&mdp, &pi, &upper).unwrap());
        prop_assert!(lo.iter().zip(hi.iter()).all(|(a, b)| a <= b));
        let (lo, hi) = (bellman_opt(&mdp, &q).unwrap(), bellman_opt(&mdp, &upper).unwrap());
        prop_assert!(lo.iter().zip(hi.iter()).all(|(a, b)| a <= b));
    }

    #[test]
    fn greedy_identity((mdp, seed) in small_mdp()) {
        let (ns, na) = mdp.shape();
        let q = random_table(ns, na, 5.0, seed ^ 7);
        let via_greedy = bellman_eval(&mdp, &greedy(&q), &q).unwrap();
        prop_assert!(via_greedy.max_abs_diff(&bellman_opt(&mdp, &q).unwrap()) <= 1e-12);
    }

    #[test]
    fn occupancy_is_distribution((mdp, seed) in small_mdp()) {
        let (ns, na) = mdp.shape();
        let pi = random_policy(ns, na, seed ^ 8);
        let mu = random_distribution(ns, na, seed ^ 9);
        let d = occupancy(&mdp, &pi, &mu).unwrap();
        prop_assert!(d.mass().iter().all(|&v| v >= 0.0));
        prop_assert!((d.mass().iter().sum::<f64>() - 1.0).abs() <= 1e-10);
    }

    #[test]
    fn exact_q_is_a_fixed_point((mdp, seed) in small_mdp()) {
        let (ns, na) = mdp.shape();
        let pi = random_policy(ns, na, seed ^ 10);
        let q = exact_q_of_policy(&mdp, &pi).unwrap();
        let residual = bellman_eval(&mdp, &pi, &q).unwrap().max_abs_diff(&q);
        prop_assert!(residual <= 1e-10 * (1.0 + sup_norm(&q)));
        prop_assert!(sup_norm(&q) <= mdp.q_max() * (1.0 + 1e-12));
    }
}
