//! Experience collection for one task.

use armsuite_core::observations::observe;
use armsuite_core::sim::{reset, step_with_mode, Action};
use armsuite_core::{Arena, RewardMode, TaskDescriptor};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::gae::compute_gae;
use crate::policy::ActorCritic;
use crate::ppo::PpoConfig;

/// SplitMix64 finalizer folded over `parts`; used to derive independent seeds.
pub fn derive_seed(parts: &[u64]) -> u64 {
    let mut h: u64 = 0x9E37_79B9_7F4A_7C15;
    for &p in parts {
        let mut z = h ^ p.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        h = z ^ (z >> 31);
    }
    h
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpisodeStats {
    pub ret: f64,
    pub success: bool,
    pub len: usize,
}

/// Flattened experience from one task, with advantages and returns already computed.
#[derive(Debug, Clone)]
pub struct TaskRollout {
    pub task: TaskDescriptor,
    pub obs: Vec<f64>,
    pub act: Vec<f64>,
    pub logp: Vec<f64>,
    pub adv: Vec<f64>,
    pub ret: Vec<f64>,
    /// Episodes that finished inside the buffer.
    pub episodes: Vec<EpisodeStats>,
}

impl TaskRollout {
    pub fn len(&self) -> usize {
        self.logp.len()
    }

    pub fn is_empty(&self) -> bool {
        self.logp.is_empty()
    }
}

/// Runs the stochastic policy for exactly `steps` environment steps.
pub fn collect(model: &ActorCritic, arena: &Arena, steps: usize, cfg: &PpoConfig, seed: u64) -> Result<TaskRollout> {
    let include = model.kind.uses_descriptor();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = TaskRollout {
        task: arena.task,
        obs: Vec::with_capacity(steps * model.obs_dim()),
        act: Vec::with_capacity(steps * 8),
        logp: Vec::with_capacity(steps),
        adv: Vec::with_capacity(steps),
        ret: Vec::with_capacity(steps),
        episodes: Vec::new(),
    };
    let mut episode = 0u64;
    let mut state = reset(arena, derive_seed(&[seed, episode]));
    let (mut rews, mut vals) = (Vec::new(), Vec::new());
    let mut success = false;
    for t in 0..steps {
        let obs = observe(arena, &state, include);
        let s = model.sample(&obs, &mut rng)?;
        let r = step_with_mode(arena, &state, &Action::from_normalized(arena, &s.action)?, RewardMode::Dense)?;
        out.obs.extend_from_slice(&obs);
        out.act.extend_from_slice(&s.action);
        out.logp.push(s.log_prob);
        rews.push(r.report.reward);
        vals.push(s.value);
        success |= r.report.success;
        let (done, terminated) = (r.done(), r.terminated);
        state = r.state;

        if done || t + 1 == steps {
            let last = if terminated { 0.0 } else { model.value(&observe(arena, &state, include))? };
            let (adv, ret) = compute_gae(&rews, &vals, last, cfg.gamma, cfg.gae_lambda)?;
            out.adv.extend(adv);
            out.ret.extend(ret);
            if done {
                out.episodes.push(EpisodeStats { ret: rews.iter().sum(), success, len: rews.len() });
                episode += 1;
                state = reset(arena, derive_seed(&[seed, episode]));
            }
            rews.clear();
            vals.clear();
            success = false;
        }
    }
    Ok(out)
}
