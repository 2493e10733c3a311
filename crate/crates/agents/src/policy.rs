//! Actor-critic models: a tanh-squashed Gaussian mean network with fixed
//! per-dimension log standard deviations, and a value network of the same shape.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use armsuite_core::observations::{OBS_LEN, STATE_LEN};
use armsuite_core::ACTION_DIM;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{AgentError, Result};
use crate::nn::{Activation, CompositionalNet, Mlp, MlpSpec, Net};

/// Joint dimensions explore with unit standard deviation, the gripper with `e^-0.5`.
pub const LOG_STD: [f64; ACTION_DIM] = [0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, -0.5];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgentKind {
    SingleTask,
    MultiTask,
    Compositional,
}

impl AgentKind {
    pub const ALL: [AgentKind; 3] = [AgentKind::SingleTask, AgentKind::MultiTask, AgentKind::Compositional];

    pub fn name(self) -> &'static str {
        match self {
            AgentKind::SingleTask => "single_task",
            AgentKind::MultiTask => "multi_task",
            AgentKind::Compositional => "compositional",
        }
    }

    /// Whether the observation includes the task descriptor.
    pub fn uses_descriptor(self) -> bool {
        self != AgentKind::SingleTask
    }

    pub fn obs_dim(self) -> usize {
        if self.uses_descriptor() {
            OBS_LEN
        } else {
            STATE_LEN
        }
    }
}

impl fmt::Display for AgentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AgentKind {
    type Err = AgentError;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.to_ascii_lowercase().replace(['-', ' '], "_");
        AgentKind::ALL
            .into_iter()
            .find(|k| k.name() == key || k.name().replace('_', "") == key)
            .ok_or_else(|| AgentError::InvalidConfig(format!("unknown agent `{s}`; expected single_task, multi_task or compositional")))
    }
}

/// Diagonal Gaussian log-density.
pub fn gaussian_log_prob(mean: &[f64], log_std: &[f64], action: &[f64]) -> f64 {
    mean.iter()
        .zip(log_std)
        .zip(action)
        .map(|((&m, &ls), &a)| {
            let z = (a - m) / ls.exp();
            -0.5 * z * z - ls - 0.5 * (2.0 * PI).ln()
        })
        .sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActorCritic {
    pub kind: AgentKind,
    pub pi: Net,
    pub v: Net,
    pub pi_params: Vec<f64>,
    pub v_params: Vec<f64>,
    pub log_std: [f64; ACTION_DIM],
}

/// Output of one stochastic policy query.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub action: Vec<f64>,
    pub log_prob: f64,
    pub value: f64,
}

impl ActorCritic {
    /// `hidden` is the width of both hidden layers for the MLP agents; the
    /// compositional agent has fixed module sizes and ignores it.
    pub fn new(kind: AgentKind, hidden: usize, rng: &mut impl Rng) -> Result<Self> {
        let (pi, v) = match kind {
            AgentKind::SingleTask | AgentKind::MultiTask => {
                let d = kind.obs_dim();
                (
                    Net::Mlp(Mlp::new(&MlpSpec::new(d, hidden, 2, ACTION_DIM, Activation::Tanh))?),
                    Net::Mlp(Mlp::new(&MlpSpec::new(d, hidden, 2, 1, Activation::Linear))?),
                )
            }
            AgentKind::Compositional => (
                Net::Compositional(CompositionalNet::new(ACTION_DIM, Activation::Tanh)),
                Net::Compositional(CompositionalNet::new(1, Activation::Linear)),
            ),
        };
        let pi_params = pi.init_params(rng);
        let v_params = v.init_params(rng);
        Ok(Self { kind, pi, v, pi_params, v_params, log_std: LOG_STD })
    }

    pub fn obs_dim(&self) -> usize {
        self.kind.obs_dim()
    }

    pub fn num_params(&self) -> usize {
        self.pi_params.len()
    }

    /// Deterministic action: the policy mean.
    pub fn mean(&self, obs: &[f64]) -> Result<Vec<f64>> {
        Ok(self.pi.forward_one(&self.pi_params, obs)?.to_vec())
    }

    pub fn value(&self, obs: &[f64]) -> Result<f64> {
        Ok(self.v.forward_one(&self.v_params, obs)?[0])
    }

    pub fn sample(&self, obs: &[f64], rng: &mut impl Rng) -> Result<Sample> {
        let mean = self.mean(obs)?;
        let action: Vec<f64> = mean
            .iter()
            .zip(&self.log_std)
            .map(|(&m, &ls)| m + ls.exp() * rng.sample::<f64, _>(StandardNormal))
            .collect();
        let log_prob = gaussian_log_prob(&mean, &self.log_std, &action);
        Ok(Sample { action, log_prob, value: self.value(obs)? })
    }

    /// SHA-256 over every parameter, including the fixed log standard deviations.
    pub fn param_hash(&self) -> String {
        let mut h = Sha256::new();
        for v in self.pi_params.iter().chain(&self.v_params).chain(&self.log_std) {
            h.update(v.to_le_bytes());
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }
}
