use std::ops::{Index, IndexMut};

use serde::{Deserialize, Serialize};

use crate::error::{dims, Error, Result};
use crate::scalar::Scalar;

/// Tolerance on transition-row and distribution sums.
pub const ROW_SUM_TOL: f64 = 1e-12;

/// A real table over state-action pairs, row-major in the state.
///
/// Holds q-functions, running averages, DPP/ψ iterates and error tables alike.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QTable<T> {
    n_states: usize,
    n_actions: usize,
    values: Vec<T>,
}

impl<T: Scalar> QTable<T> {
    pub fn zeros(n_states: usize, n_actions: usize) -> Self {
        Self::constant(n_states, n_actions, T::zero())
    }

    pub fn constant(n_states: usize, n_actions: usize, c: T) -> Self {
        Self {
            n_states,
            n_actions,
            values: vec![c; n_states * n_actions],
        }
    }

    pub fn from_vec(n_states: usize, n_actions: usize, values: Vec<T>) -> Result<Self> {
        if values.len() != n_states * n_actions {
            return Err(Error::DimensionMismatch {
                what: "QTable::from_vec",
                expected: format!("{} values", n_states * n_actions),
                found: format!("{} values", values.len()),
            });
        }
        Ok(Self {
            n_states,
            n_actions,
            values,
        })
    }

    pub fn from_fn(n_states: usize, n_actions: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut values = Vec::with_capacity(n_states * n_actions);
        for s in 0..n_states {
            for a in 0..n_actions {
                values.push(f(s, a));
            }
        }
        Self {
            n_states,
            n_actions,
            values,
        }
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.n_states, self.n_actions)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn as_slice(&self) -> &[T] {
        &self.values
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.values
    }

    pub fn into_vec(self) -> Vec<T> {
        self.values
    }

    pub fn row(&self, s: usize) -> &[T] {
        &self.values[s * self.n_actions..(s + 1) * self.n_actions]
    }

    pub fn iter(&self) -> impl Iterator<Item = &T> {
        self.values.iter()
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self {
            n_states: self.n_states,
            n_actions: self.n_actions,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(T, T) -> T) -> Self {
        assert_eq!(self.shape(), other.shape(), "QTable shape mismatch");
        Self {
            n_states: self.n_states,
            n_actions: self.n_actions,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip_map(other, |a, b| a - b)
    }

    pub fn scale(&self, c: T) -> Self {
        self.map(|v| v * c)
    }

    /// `self += alpha * x`
    pub fn axpy(&mut self, alpha: T, x: &Self) {
        assert_eq!(self.shape(), x.shape(), "QTable shape mismatch");
        for (y, &xv) in self.values.iter_mut().zip(&x.values) {
            *y += alpha * xv;
        }
    }

    pub fn add_assign(&mut self, x: &Self) {
        self.axpy(T::one(), x);
    }

    pub fn sub_assign(&mut self, x: &Self) {
        self.axpy(-T::one(), x);
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite_value())
    }

    /// Largest componentwise gap `max |self - other|`.
    pub fn max_abs_diff(&self, other: &Self) -> T {
        assert_eq!(self.shape(), other.shape(), "QTable shape mismatch");
        self.values
            .iter()
            .zip(&other.values)
            .fold(T::zero(), |m, (&a, &b)| m.max_of((a - b).abs()))
    }

    pub fn cast<U: Scalar>(&self) -> QTable<U> {
        QTable {
            n_states: self.n_states,
            n_actions: self.n_actions,
            values: self
                .values
                .iter()
                .map(|v| U::lit(v.to_f64_lossy()))
                .collect(),
        }
    }

    pub(crate) fn check_shape(&self, what: &'static str, shape: (usize, usize)) -> Result<()> {
        if self.shape() != shape {
            return Err(dims(what, shape, self.shape()));
        }
        Ok(())
    }
}

impl<T> Index<(usize, usize)> for QTable<T> {
    type Output = T;

    fn index(&self, (s, a): (usize, usize)) -> &T {
        debug_assert!(s < self.n_states && a < self.n_actions);
        &self.values[s * self.n_actions + a]
    }
}

impl<T> IndexMut<(usize, usize)> for QTable<T> {
    fn index_mut(&mut self, (s, a): (usize, usize)) -> &mut T {
        debug_assert!(s < self.n_states && a < self.n_actions);
        &mut self.values[s * self.n_actions + a]
    }
}

/// One action per state.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DeterministicPolicy {
    n_actions: usize,
    actions: Vec<usize>,
}

impl DeterministicPolicy {
    pub fn new(actions: Vec<usize>, n_actions: usize) -> Result<Self> {
        if let Some((state, &action)) = actions.iter().enumerate().find(|(_, &a)| a >= n_actions) {
            return Err(Error::InvalidPolicy {
                state,
                action,
                n_actions,
            });
        }
        Ok(Self { n_actions, actions })
    }

    pub fn constant(n_states: usize, n_actions: usize, action: usize) -> Result<Self> {
        Self::new(vec![action; n_states], n_actions)
    }

    /// The `index`-th policy in lexicographic enumeration (state 0 is the
    /// least significant digit).
    pub fn from_index(mut index: u64, n_states: usize, n_actions: usize) -> Self {
        let mut actions = Vec::with_capacity(n_states);
        for _ in 0..n_states {
            actions.push((index % n_actions as u64) as usize);
            index /= n_actions as u64;
        }
        Self { n_actions, actions }
    }

    pub fn n_states(&self) -> usize {
        self.actions.len()
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn action(&self, s: usize) -> usize {
        self.actions[s]
    }

    pub fn actions(&self) -> &[usize] {
        &self.actions
    }
}

/// A probability distribution over state-action pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionSA<T> {
    mass: QTable<T>,
}

impl<T: Scalar> DistributionSA<T> {
    pub fn new(mass: QTable<T>) -> Result<Self> {
        Self::with_tolerance(mass, ROW_SUM_TOL)
    }

    pub(crate) fn with_tolerance(mass: QTable<T>, tol: f64) -> Result<Self> {
        if let Some(v) = mass.iter().find(|v| **v < T::zero() || !v.is_finite_value()) {
            return Err(Error::InvalidDistribution(format!(
                "entry {v} is negative or not finite"
            )));
        }
        let total = mass.iter().fold(T::zero(), |acc, &v| acc + v).to_f64_lossy();
        if (total - 1.0).abs() > tol {
            return Err(Error::InvalidDistribution(format!(
                "mass sums to {total}, not 1"
            )));
        }
        Ok(Self { mass })
    }

    pub fn uniform(n_states: usize, n_actions: usize) -> Self {
        let w = T::one() / T::of_usize(n_states * n_actions);
        Self {
            mass: QTable::constant(n_states, n_actions, w),
        }
    }

    pub fn point(n_states: usize, n_actions: usize, s: usize, a: usize) -> Self {
        let mut mass = QTable::zeros(n_states, n_actions);
        mass[(s, a)] = T::one();
        Self { mass }
    }

    pub fn mass(&self) -> &QTable<T> {
        &self.mass
    }

    pub fn shape(&self) -> (usize, usize) {
        self.mass.shape()
    }

    pub fn get(&self, s: usize, a: usize) -> T {
        self.mass[(s, a)]
    }
}

/// A finite discounted MDP `{S, A, P, r, gamma}` with reward bound `r_max`.
///
/// Transitions are stored densely as `[s][a][s']`; the nonzero successors of
/// each `(s, a)` are cached so kernel applications cost `O(|support|)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteMdp<T> {
    n_states: usize,
    n_actions: usize,
    transition: Vec<T>,
    reward: QTable<T>,
    gamma: T,
    r_max: T,
    support: Vec<Vec<usize>>,
}

impl<T: Scalar> FiniteMdp<T> {
    /// Builds an MDP; `r_max` is set to `max |r(s, a)|`.
    ///
    /// `gamma` must lie in `[0, 1)`; zero is accepted so that the no-lookahead
    /// corner case can be expressed.
    pub fn new(
        n_states: usize,
        n_actions: usize,
        transition: Vec<T>,
        reward: QTable<T>,
        gamma: T,
    ) -> Result<Self> {
        if n_states == 0 || n_actions == 0 {
            return Err(Error::InvalidMdp("state and action sets must be nonempty".into()));
        }
        if transition.len() != n_states * n_actions * n_states {
            return Err(Error::InvalidMdp(format!(
                "transition tensor has {} entries, expected {}",
                transition.len(),
                n_states * n_actions * n_states
            )));
        }
        reward.check_shape("FiniteMdp reward", (n_states, n_actions))?;
        if !(gamma >= T::zero() && gamma < T::one()) {
            return Err(Error::InvalidMdp(format!("discount {gamma} outside [0, 1)")));
        }
        if !reward.is_finite() {
            return Err(Error::InvalidMdp("reward has non-finite entries".into()));
        }
        let mut support = Vec::with_capacity(n_states * n_actions);
        for sa in 0..n_states * n_actions {
            let row = &transition[sa * n_states..(sa + 1) * n_states];
            if row.iter().any(|&p| p < T::zero() || !p.is_finite_value()) {
                return Err(Error::InvalidMdp(format!(
                    "row ({}, {}) has a negative or non-finite probability",
                    sa / n_actions,
                    sa % n_actions
                )));
            }
            let total = row.iter().fold(T::zero(), |acc, &p| acc + p).to_f64_lossy();
            if (total - 1.0).abs() > ROW_SUM_TOL {
                return Err(Error::InvalidMdp(format!(
                    "row ({}, {}) sums to {total}",
                    sa / n_actions,
                    sa % n_actions
                )));
            }
            support.push(
                row.iter()
                    .enumerate()
                    .filter(|(_, &p)| p != T::zero())
                    .map(|(s, _)| s)
                    .collect(),
            );
        }
        let r_max = reward.iter().fold(T::zero(), |m, &r| m.max_of(r.abs()));
        Ok(Self {
            n_states,
            n_actions,
            transition,
            reward,
            gamma,
            r_max,
            support,
        })
    }

    /// Declares a reward bound looser than the observed `max |r|`.
    pub fn with_r_max(mut self, r_max: T) -> Result<Self> {
        if r_max < self.r_max {
            return Err(Error::InvalidMdp(format!(
                "declared r_max {r_max} is below max |r| = {}",
                self.r_max
            )));
        }
        self.r_max = r_max;
        Ok(self)
    }

    /// Builds the MDP from a closure over `(s, a, s')`.
    pub fn from_fn(
        n_states: usize,
        n_actions: usize,
        p: impl Fn(usize, usize, usize) -> T,
        r: impl Fn(usize, usize) -> T,
        gamma: T,
    ) -> Result<Self> {
        let mut transition = Vec::with_capacity(n_states * n_actions * n_states);
        for s in 0..n_states {
            for a in 0..n_actions {
                for s2 in 0..n_states {
                    transition.push(p(s, a, s2));
                }
            }
        }
        Self::new(n_states, n_actions, transition, QTable::from_fn(n_states, n_actions, r), gamma)
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.n_states, self.n_actions)
    }

    pub fn gamma(&self) -> T {
        self.gamma
    }

    pub fn r_max(&self) -> T {
        self.r_max
    }

    /// `q_max = r_max / (1 - gamma)`.
    pub fn q_max(&self) -> T {
        self.r_max / (T::one() - self.gamma)
    }

    pub fn reward(&self) -> &QTable<T> {
        &self.reward
    }

    pub fn p(&self, s: usize, a: usize, next: usize) -> T {
        self.transition[(s * self.n_actions + a) * self.n_states + next]
    }

    pub fn transition_row(&self, s: usize, a: usize) -> &[T] {
        let sa = s * self.n_actions + a;
        &self.transition[sa * self.n_states..(sa + 1) * self.n_states]
    }

    /// Successors with nonzero probability, ascending.
    pub fn support(&self, s: usize, a: usize) -> &[usize] {
        &self.support[s * self.n_actions + a]
    }

    pub fn cast<U: Scalar>(&self) -> Result<FiniteMdp<U>> {
        let transition: Vec<U> = self.transition.iter().map(|v| U::lit(v.to_f64_lossy())).collect();
        FiniteMdp::new(
            self.n_states,
            self.n_actions,
            transition,
            self.reward.cast(),
            U::lit(self.gamma.to_f64_lossy()),
        )?
        .with_r_max(U::lit(self.r_max.to_f64_lossy()))
    }

    pub(crate) fn check_table(&self, what: &'static str, q: &QTable<T>) -> Result<()> {
        q.check_shape(what, self.shape())
    }

    pub(crate) fn check_policy(&self, what: &'static str, policy: &DeterministicPolicy) -> Result<()> {
        if policy.n_states() != self.n_states || policy.n_actions() != self.n_actions {
            return Err(dims(
                what,
                self.shape(),
                (policy.n_states(), policy.n_actions()),
            ));
        }
        Ok(())
    }
}
