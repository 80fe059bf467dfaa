use crate::error::Result;
use crate::mdp::{bellman_eval, greedy, DeterministicPolicy, FiniteMdp, QTable};
use crate::rng::{rng_from_seed, uniform01, Rng};
use crate::scalar::Scalar;

/// One sampled successor per state-action pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampleTable {
    n_actions: usize,
    next: Vec<usize>,
}

impl SampleTable {
    pub fn new(n_states: usize, n_actions: usize, next: Vec<usize>) -> Self {
        assert_eq!(next.len(), n_states * n_actions);
        assert!(next.iter().all(|&s| s < n_states), "successor out of range");
        Self { n_actions, next }
    }

    pub fn next_state(&self, s: usize, a: usize) -> usize {
        self.next[s * self.n_actions + a]
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.next
    }
}

/// How a scheme applies its Bellman operator in one iteration.
#[derive(Debug, Clone, Copy)]
pub enum Backup<'a, T> {
    /// Exact operator, zero error.
    Exact,
    /// One generative-model sample per `(s, a)`, shared by every operator
    /// application within the iteration.
    Sampled(&'a SampleTable),
    /// Exact operator plus the given error table.
    Injected(&'a QTable<T>),
}

/// Generative model: draws `s' ~ P(.|s, a)` without exposing `P` to callers.
#[derive(Debug, Clone)]
pub struct GenerativeModel<'a, T> {
    mdp: &'a FiniteMdp<T>,
    cdf: Vec<Vec<(usize, f64)>>,
    rng: Rng,
}

impl<'a, T: Scalar> GenerativeModel<'a, T> {
    pub fn new(mdp: &'a FiniteMdp<T>, seed: u64) -> Self {
        let (ns, na) = mdp.shape();
        let mut cdf = Vec::with_capacity(ns * na);
        for s in 0..ns {
            for a in 0..na {
                let support = mdp.support(s, a);
                let mut acc = 0.0;
                let mut row: Vec<(usize, f64)> = support
                    .iter()
                    .map(|&next| {
                        acc += mdp.p(s, a, next).to_f64_lossy();
                        (next, acc)
                    })
                    .collect();
                if let Some(last) = row.last_mut() {
                    last.1 = f64::INFINITY;
                }
                cdf.push(row);
            }
        }
        Self {
            mdp,
            cdf,
            rng: rng_from_seed(seed),
        }
    }

    pub fn mdp(&self) -> &'a FiniteMdp<T> {
        self.mdp
    }

    pub fn sample(&mut self, s: usize, a: usize) -> usize {
        let u = uniform01(&mut self.rng);
        let row = &self.cdf[s * self.mdp.n_actions() + a];
        row.iter()
            .find(|(_, c)| u < *c)
            .map(|&(next, _)| next)
            .expect("last cdf entry is infinite")
    }

    /// Draws a fresh successor for every `(s, a)` in state-major order.
    pub fn draw(&mut self) -> SampleTable {
        let (ns, na) = self.mdp.shape();
        let mut next = Vec::with_capacity(ns * na);
        for s in 0..ns {
            for a in 0..na {
                next.push(self.sample(s, a));
            }
        }
        SampleTable { n_actions: na, next }
    }
}

/// `P-hat_pi q (s, a) = q(s', pi(s'))` for the sampled `s'`.
pub fn sampled_kernel_with<T: Scalar>(
    mdp: &FiniteMdp<T>,
    samples: &SampleTable,
    policy: &DeterministicPolicy,
    q: &QTable<T>,
) -> QTable<T> {
    QTable::from_fn(mdp.n_states(), mdp.n_actions(), |s, a| {
        let next = samples.next_state(s, a);
        q[(next, policy.action(next))]
    })
}

/// `T-hat_pi q (s, a) = r(s, a) + gamma q(s', pi(s'))` for the sampled `s'`.
pub fn sampled_eval_with<T: Scalar>(
    mdp: &FiniteMdp<T>,
    samples: &SampleTable,
    policy: &DeterministicPolicy,
    q: &QTable<T>,
) -> QTable<T> {
    let mut out = sampled_kernel_with(mdp, samples, policy, q);
    for (o, &r) in out.as_mut_slice().iter_mut().zip(mdp.reward().as_slice()) {
        *o = r + mdp.gamma() * *o;
    }
    out
}

/// Draws one sample table and returns `(T-hat_pi q, T-hat_pi q - T_pi q)`.
pub fn sampled_bellman_eval<T: Scalar>(
    gen: &mut GenerativeModel<'_, T>,
    policy: &DeterministicPolicy,
    q: &QTable<T>,
) -> Result<(QTable<T>, QTable<T>)> {
    let mdp = gen.mdp();
    let exact = bellman_eval(mdp, policy, q)?;
    let samples = gen.draw();
    let sampled = sampled_eval_with(mdp, &samples, policy, q);
    let eps = sampled.sub(&exact);
    Ok((sampled, eps))
}

/// Sampled optimality backup: the sampled evaluation backup of `greedy(q)`.
pub fn sampled_bellman_opt<T: Scalar>(
    gen: &mut GenerativeModel<'_, T>,
    q: &QTable<T>,
) -> Result<(QTable<T>, QTable<T>)> {
    gen.mdp().check_table("sampled_bellman_opt", q)?;
    let policy = greedy(q);
    sampled_bellman_eval(gen, &policy, q)
}

/// Applies `T_pi q` under `backup`, returning the applied table and its error.
pub(crate) fn backup_eval<T: Scalar>(
    mdp: &FiniteMdp<T>,
    policy: &DeterministicPolicy,
    q: &QTable<T>,
    backup: Backup<'_, T>,
) -> Result<(QTable<T>, QTable<T>)> {
    let exact = bellman_eval(mdp, policy, q)?;
    Ok(match backup {
        Backup::Exact => {
            let zero = QTable::zeros(mdp.n_states(), mdp.n_actions());
            (exact, zero)
        }
        Backup::Sampled(samples) => {
            let sampled = sampled_eval_with(mdp, samples, policy, q);
            let eps = sampled.sub(&exact);
            (sampled, eps)
        }
        Backup::Injected(noise) => {
            mdp.check_table("injected noise", noise)?;
            (exact.add(noise), noise.clone())
        }
    })
}
