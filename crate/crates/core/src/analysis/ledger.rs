use crate::error::{Error, Result};
use crate::mdp::{kernel_apply, DeterministicPolicy, FiniteMdp, QTable};
use crate::scalar::Scalar;

/// Per-iteration errors `eps_1..eps_k` and policies `pi_1..pi_k` of a run.
///
/// Kernels `P_{pi_j}` are not stored; they are rebuilt from the policies
/// whenever an error term needs them.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorLedger<T> {
    q0: QTable<T>,
    epsilons: Vec<QTable<T>>,
    policies: Vec<DeterministicPolicy>,
    q_latest: QTable<T>,
}

impl<T: Scalar> ErrorLedger<T> {
    pub fn new(q0: QTable<T>) -> Self {
        Self {
            q_latest: q0.clone(),
            q0,
            epsilons: Vec::new(),
            policies: Vec::new(),
        }
    }

    /// Builds a ledger from explicit sequences (`epsilons[0]` is `eps_1`).
    pub fn from_parts(
        q0: QTable<T>,
        epsilons: Vec<QTable<T>>,
        policies: Vec<DeterministicPolicy>,
        q_latest: QTable<T>,
    ) -> Result<Self> {
        if epsilons.len() != policies.len() {
            return Err(Error::Domain(format!(
                "{} errors but {} policies",
                epsilons.len(),
                policies.len()
            )));
        }
        let mut ledger = Self::new(q0);
        for (e, p) in epsilons.into_iter().zip(policies) {
            ledger.push(e, p, &q_latest)?;
        }
        Ok(ledger)
    }

    pub fn push(&mut self, epsilon: QTable<T>, policy: DeterministicPolicy, q_latest: &QTable<T>) -> Result<()> {
        let shape = self.q0.shape();
        epsilon.check_shape("ErrorLedger::push", shape)?;
        q_latest.check_shape("ErrorLedger::push", shape)?;
        if (policy.n_states(), policy.n_actions()) != shape {
            return Err(crate::error::dims(
                "ErrorLedger::push",
                shape,
                (policy.n_states(), policy.n_actions()),
            ));
        }
        self.epsilons.push(epsilon);
        self.policies.push(policy);
        self.q_latest = q_latest.clone();
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.epsilons.len()
    }

    pub fn is_empty(&self) -> bool {
        self.epsilons.is_empty()
    }

    pub fn q0(&self) -> &QTable<T> {
        &self.q0
    }

    pub fn q_latest(&self) -> &QTable<T> {
        &self.q_latest
    }

    pub fn epsilons(&self) -> &[QTable<T>] {
        &self.epsilons
    }

    pub fn policies(&self) -> &[DeterministicPolicy] {
        &self.policies
    }

    /// `eps_j`, 1-based.
    pub fn epsilon(&self, j: usize) -> Result<&QTable<T>> {
        self.check_index(j)?;
        Ok(&self.epsilons[j - 1])
    }

    /// `pi_j`, 1-based.
    pub fn policy(&self, j: usize) -> Result<&DeterministicPolicy> {
        self.check_index(j)?;
        Ok(&self.policies[j - 1])
    }

    pub(crate) fn check_index(&self, j: usize) -> Result<()> {
        if j == 0 || j > self.len() {
            return Err(Error::LedgerIndex {
                index: j,
                len: self.len(),
            });
        }
        Ok(())
    }

    /// Rebuilds `q_j = T_{pi_j} q_{j-1} + eps_j` from `q_0` (AVI/MoVI ledgers).
    pub fn q_iterate(&self, mdp: &FiniteMdp<T>, j: usize) -> Result<QTable<T>> {
        if j > self.len() {
            return Err(Error::LedgerIndex {
                index: j,
                len: self.len(),
            });
        }
        mdp.check_table("ErrorLedger::q_iterate", &self.q0)?;
        let mut q = self.q0.clone();
        for (eps, pi) in self.epsilons.iter().zip(&self.policies).take(j) {
            let mut next = kernel_apply(mdp, pi, &q);
            for ((n, &r), &e) in next
                .as_mut_slice()
                .iter_mut()
                .zip(mdp.reward().as_slice())
                .zip(eps.as_slice())
            {
                *n = r + mdp.gamma() * *n + e;
            }
            q = next;
        }
        Ok(q)
    }
}
