use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mdp::{occupancy_with, DeterministicPolicy, DistributionSA, FiniteMdp, Resolvent};
use crate::rng::{below, rng_from_seed};
use crate::scalar::Scalar;

/// Largest policy count exact enumeration will visit.
pub const ENUMERATION_LIMIT: u64 = 1_000_000;

/// Occupancy mass treated as attainable when `nu` vanishes.
const ZERO_MASS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConcentrabilityMode {
    /// Maximum over every deterministic policy.
    Exact,
    /// Maximum over `n_policies` uniformly random deterministic policies.
    Sampled { n_policies: usize, seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Concentrability<T> {
    pub value: T,
    /// False for sampled estimates, which are lower bounds.
    pub exact: bool,
    pub policies_evaluated: u64,
}

/// `C = max_pi |d_{pi,mu} / nu|_inf`.
pub fn concentrability<T: Scalar>(
    mdp: &FiniteMdp<T>,
    mu: &DistributionSA<T>,
    nu: &DistributionSA<T>,
    mode: ConcentrabilityMode,
) -> Result<Concentrability<T>> {
    mu.mass().check_shape("concentrability", mdp.shape())?;
    nu.mass().check_shape("concentrability", mdp.shape())?;
    let (ns, na) = mdp.shape();
    let ratio = |pi: &DeterministicPolicy| -> Result<T> {
        let d = occupancy_with(&Resolvent::new(mdp, pi)?, mdp.gamma(), mu)?;
        let mut worst = T::zero();
        for s in 0..ns {
            for a in 0..na {
                let (dv, nv) = (d.get(s, a), nu.get(s, a));
                if nv.is_zero() {
                    if dv.to_f64_lossy() > ZERO_MASS {
                        return Err(Error::InfiniteConcentrability { state: s, action: a });
                    }
                } else {
                    worst = worst.max_of(dv / nv);
                }
            }
        }
        Ok(worst)
    };

    match mode {
        ConcentrabilityMode::Exact => {
            let count = (na as f64).powi(ns as i32);
            if count > ENUMERATION_LIMIT as f64 {
                return Err(Error::EnumerationTooLarge {
                    count,
                    limit: ENUMERATION_LIMIT,
                });
            }
            let count = count as u64;
            let mut value = T::zero();
            for index in 0..count {
                value = value.max_of(ratio(&DeterministicPolicy::from_index(index, ns, na))?);
            }
            Ok(Concentrability {
                value,
                exact: true,
                policies_evaluated: count,
            })
        }
        ConcentrabilityMode::Sampled { n_policies, seed } => {
            if n_policies == 0 {
                return Err(Error::Domain("sampled concentrability needs at least one policy".into()));
            }
            let mut rng = rng_from_seed(seed);
            let mut value = T::zero();
            for _ in 0..n_policies {
                let actions = (0..ns).map(|_| below(&mut rng, na)).collect();
                value = value.max_of(ratio(&DeterministicPolicy::new(actions, na)?)?);
            }
            Ok(Concentrability {
                value,
                exact: false,
                policies_evaluated: n_policies as u64,
            })
        }
    }
}
