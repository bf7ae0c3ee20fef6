//! Policy enumeration, the softmax policy posterior and action selection.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::efe::{EfeBreakdown, EfeEvaluator, EfeForm, Policy};
use crate::error::{Error, Result};
use crate::inference::History;
use crate::math::{ln_floor, sample_index};
use crate::model::GenerativeModel;

pub use crate::math::softmax;

pub const DEFAULT_POLICY_CAP: usize = 1_000_000;

/// Name of the generator used for seeded sampling, recorded in run logs.
pub const RNG_ALGORITHM: &str = "ChaCha8Rng";

/// Habit weights `E(pi)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HabitPrior {
    /// One non-negative weight per enumerated policy.
    PerPolicy(Vec<f64>),
    /// One weight per first action, shared by every policy starting with it.
    PerFirstAction(Vec<f64>),
}

impl HabitPrior {
    /// `ln E(pi)` for each policy, shifted so the largest entry is zero.
    fn log_weights(&self, policies: &[Policy]) -> Result<Vec<f64>> {
        let raw: Vec<f64> = match self {
            HabitPrior::PerPolicy(w) => {
                if w.len() != policies.len() {
                    return Err(Error::Shape {
                        what: "habit prior".into(),
                        expected: policies.len(),
                        found: w.len(),
                    });
                }
                w.clone()
            }
            HabitPrior::PerFirstAction(w) => policies
                .iter()
                .map(|p| match p.first_action() {
                    Some(a) => w.get(a).copied().ok_or(Error::IndexOutOfRange {
                        what: "habit action",
                        index: a,
                        size: w.len(),
                    }),
                    None => Ok(1.0),
                })
                .collect::<Result<_>>()?,
        };
        if let Some((i, &w)) = raw.iter().enumerate().find(|(_, w)| !(**w >= 0.0) || !w.is_finite()) {
            return Err(Error::NonPositive {
                what: "habit weight",
                index: i,
                value: w,
            });
        }
        if !raw.iter().any(|&w| w > 0.0) {
            return Err(Error::NonPositive {
                what: "habit weight",
                index: 0,
                value: 0.0,
            });
        }
        let logs: Vec<f64> = raw.iter().map(|&w| ln_floor(w)).collect();
        let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Ok(logs.into_iter().map(|l| l - max).collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PolicyOptions {
    pub form: EfeForm,
    pub max_policies: usize,
}

impl Default for PolicyOptions {
    fn default() -> Self {
        Self {
            form: EfeForm::Epistemic,
            max_policies: DEFAULT_POLICY_CAP,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyPosterior {
    pub policies: Vec<Policy>,
    pub probabilities: Vec<f64>,
    /// `G(pi)` per policy.
    pub g: Vec<f64>,
    pub breakdowns: Vec<EfeBreakdown>,
    /// `ln E(pi)` when a habit prior was supplied.
    pub log_habit: Option<Vec<f64>>,
}

impl PolicyPosterior {
    /// Marginal probability of each first action.
    pub fn first_action_marginal(&self, num_actions: usize) -> Vec<f64> {
        let mut out = vec![0.0; num_actions];
        for (p, &w) in self.policies.iter().zip(&self.probabilities) {
            if let Some(a) = p.first_action() {
                out[a] += w;
            }
        }
        out
    }

    /// Index of the most probable policy, lowest index on ties.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &p) in self.probabilities.iter().enumerate() {
            if p > self.probabilities[best] {
                best = i;
            }
        }
        best
    }
}

/// All `num_actions^(T - t)` policies from time `t`, lexicographic with the
/// first slot varying slowest.
pub fn enumerate_policies(num_actions: usize, t: usize, horizon: usize, cap: usize) -> Result<Vec<Policy>> {
    if t == 0 || t > horizon {
        return Err(Error::History(format!("time {t} outside 1..={horizon}")));
    }
    let len = horizon - t;
    let count = (num_actions as u128).checked_pow(len as u32).unwrap_or(u128::MAX);
    if count > cap as u128 {
        return Err(Error::CombinatorialLimit { count, cap });
    }
    let count = count as usize;
    let mut out = Vec::with_capacity(count);
    for mut idx in 0..count {
        let mut actions = vec![0; len];
        for slot in actions.iter_mut().rev() {
            *slot = idx % num_actions;
            idx /= num_actions;
        }
        out.push(Policy::new(t, actions));
    }
    Ok(out)
}

/// `q(pi) = softmax(ln E(pi) - G(pi))` over every policy from the current
/// time; `E` is uniform when `habit` is `None`.
pub fn policy_posterior(
    model: &GenerativeModel,
    belief_now: &[f64],
    history: &History,
    habit: Option<&HabitPrior>,
    options: PolicyOptions,
) -> Result<PolicyPosterior> {
    history.validate(model)?;
    let policies = enumerate_policies(model.num_actions(), history.t(), model.horizon, options.max_policies)?;
    let evaluator = EfeEvaluator::new(model);
    let breakdowns: Vec<EfeBreakdown> = policies
        .iter()
        .map(|p| evaluator.evaluate(belief_now, p, options.form))
        .collect::<Result<_>>()?;
    let g: Vec<f64> = breakdowns.iter().map(|b| b.total).collect();
    let log_habit = habit.map(|h| h.log_weights(&policies)).transpose()?;
    let scores: Vec<f64> = match &log_habit {
        Some(lh) => lh.iter().zip(&g).map(|(e, g)| e - g).collect(),
        None => g.iter().map(|g| -g).collect(),
    };
    let probabilities = softmax(&scores)?;
    Ok(PolicyPosterior {
        policies,
        probabilities,
        g,
        breakdowns,
        log_habit,
    })
}

pub fn sample_policy_with<'a, R: Rng + ?Sized>(posterior: &'a PolicyPosterior, rng: &mut R) -> &'a Policy {
    let u: f64 = rng.gen();
    &posterior.policies[sample_index(&posterior.probabilities, u)]
}

/// Draws a policy with a `ChaCha8Rng` seeded from `seed`.
pub fn sample_policy(posterior: &PolicyPosterior, seed: u64) -> &Policy {
    sample_policy_with(posterior, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// First action of a sampled policy; `None` for the empty policy at `t = T`.
pub fn select_action(posterior: &PolicyPosterior, seed: u64) -> Option<usize> {
    sample_policy(posterior, seed).first_action()
}

pub fn greedy_action(posterior: &PolicyPosterior) -> Option<usize> {
    posterior.policies[posterior.argmax()].first_action()
}
