//! Monte Carlo estimates of plan success under photon loss.
//!
//! Trial `t` of a run draws from a ChaCha8 generator seeded with the master
//! seed, on stream `substream`, positioned at word `t << 32`. A trial thus
//! depends only on `(seed, substream, t)`, so results do not change with
//! thread count or scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::emitter::{execute, FailureCause, GenerationPlan, PlanHeader};
use crate::error::{Error, Result};
use crate::fusion::{FusionRecord, RngSampler};
use crate::redundant::RedundantGraph;

/// Normal quantile of the two-sided 95% interval.
pub const Z_95: f64 = 1.959_963_984_540_054;

pub const DEFAULT_TRIALS: u64 = 100_000;

/// Words reserved per trial in the generator's stream.
const TRIAL_SHIFT: u32 = 32;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossModel {
    /// Per-photon detection probability.
    pub eta: f64,
    pub seed: u64,
    pub substream: u64,
}

impl LossModel {
    pub fn new(eta: f64, seed: u64, substream: u64) -> Result<Self> {
        if !(0.0..=1.0).contains(&eta) {
            return Err(Error::InvalidParameter(format!(
                "eta must lie in [0, 1], got {eta}"
            )));
        }
        Ok(LossModel {
            eta,
            seed,
            substream,
        })
    }

    pub fn rng(&self, trial: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.substream);
        rng.set_word_pos(u128::from(trial) << TRIAL_SHIFT);
        rng
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialResult {
    pub success: bool,
    pub cause: Option<FailureCause>,
    pub photons_emitted: usize,
    pub fusions: Vec<FusionRecord>,
}

/// Runs trial number `trial` of `plan`.
pub fn run_trial(plan: &GenerationPlan, loss: &LossModel, trial: u64) -> Result<TrialResult> {
    let mut rg = RedundantGraph::new();
    let mut sampler = RngSampler::new(loss.rng(trial), loss.eta);
    let ex = execute(plan, &mut rg, &mut sampler)?;
    Ok(TrialResult {
        success: ex.failure.is_none(),
        cause: ex.failure,
        photons_emitted: ex.photons_emitted,
        fusions: ex.fusions,
    })
}

/// First trial of the substream.
pub fn run_plan(plan: &GenerationPlan, loss: &LossModel) -> Result<TrialResult> {
    plan.validate()?;
    run_trial(plan, loss, 0)
}

/// Wilson score interval for `successes` out of `trials` at quantile `z`.
pub fn wilson_interval(successes: u64, trials: u64, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = z / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub plan_meta: PlanHeader,
    pub eta: f64,
    pub trials: u64,
    pub successes: u64,
    pub p_hat: f64,
    /// 95% Wilson interval.
    pub ci_low: f64,
    pub ci_high: f64,
    pub seed: u64,
}

impl Estimate {
    pub fn interval(&self, z: f64) -> (f64, f64) {
        wilson_interval(self.successes, self.trials, z)
    }

    /// Whether `p` lies in the Wilson interval at quantile `z`.
    pub fn covers(&self, p: f64, z: f64) -> bool {
        let (lo, hi) = self.interval(z);
        (lo..=hi).contains(&p)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("estimates serialize")
    }
}

/// Success rate of `plan` over trials `0..trials` of the loss model's
/// substream.
pub fn estimate(plan: &GenerationPlan, loss: &LossModel, trials: u64) -> Result<Estimate> {
    if trials == 0 {
        return Err(Error::InvalidParameter("need at least one trial".into()));
    }
    plan.validate()?;
    let successes = (0..trials)
        .into_par_iter()
        .map(|t| run_trial(plan, loss, t).map(|r| u64::from(r.success)))
        .try_reduce(|| 0, |a, b| Ok(a + b))?;
    let (ci_low, ci_high) = wilson_interval(successes, trials, Z_95);
    Ok(Estimate {
        plan_meta: plan.header(),
        eta: loss.eta,
        trials,
        successes,
        p_hat: successes as f64 / trials as f64,
        ci_low,
        ci_high,
        seed: loss.seed,
    })
}

/// All trial results, in trial order.
pub fn trials(plan: &GenerationPlan, loss: &LossModel, trials: u64) -> Result<Vec<TrialResult>> {
    plan.validate()?;
    (0..trials)
        .into_par_iter()
        .map(|t| run_trial(plan, loss, t))
        .collect()
}

fn param_usize(plan: &GenerationPlan, key: &str) -> Result<usize> {
    plan.params
        .get(key)
        .and_then(|v| v.as_u64())
        .map(|v| v as usize)
        .ok_or_else(|| {
            Error::MalformedPlan(format!(
                "{} plan without integer parameter {key}",
                plan.family
            ))
        })
}

/// Closed-form success probability of a compiled plan family under loss
/// `eta`, read from the plan's parameters. `None` for families without one.
pub fn expected_success(plan: &GenerationPlan, eta: f64) -> Result<Option<f64>> {
    use crate::analytics::{p_boosted, p_cluster_ddim, p_ring_encoded};
    let m = || param_usize(plan, "m").map(|m| m as u32);
    Ok(Some(match plan.family.as_str() {
        "linear" | "ghz" => 1.0,
        "boosted_pair" | "ring" => p_boosted(m()?, eta)?,
        "cluster2d" => {
            let dims = [
                param_usize(plan, "n1")? as u64,
                param_usize(plan, "n2")? as u64,
            ];
            p_cluster_ddim(&dims, m()?, eta)?
        }
        "cluster_nd" => {
            let dims: Vec<u64> = plan
                .params
                .get("dims")
                .and_then(|v| v.as_array())
                .and_then(|a| a.iter().map(|d| d.as_u64()).collect())
                .ok_or_else(|| Error::MalformedPlan("cluster_nd plan without dims".into()))?;
            p_cluster_ddim(&dims, m()?, eta)?
        }
        "encoded_ring" => p_ring_encoded(
            param_usize(plan, "k")? as u64,
            param_usize(plan, "n1")? as u64,
            eta,
            m()?,
        )?,
        _ => return Ok(None),
    }))
}
