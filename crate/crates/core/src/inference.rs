//! Exact Bayesian state inference over the joint hidden state.
//!
//! Beliefs are plain probability vectors over joint state indices. The
//! functions here cover the current-state update, rolling beliefs forward
//! under a policy, conditioning on a hypothetical future observation, the
//! predictive distribution over observations and full-sequence smoothing.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::{max_abs_diff, normalize};
use crate::model::GenerativeModel;

/// Joint sizes above this use the factorised filter by default.
pub const EXACT_JOINT_LIMIT: usize = 4096;

/// Pairwise smoothed marginals are only materialised up to this joint size.
pub const PAIRWISE_JOINT_LIMIT: usize = 1024;

pub const FIXED_POINT_TOL: f64 = 1e-8;
pub const FIXED_POINT_MAX_SWEEPS: usize = 50;

/// What the agent has seen and done up to the current time `t`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct History {
    pub observations: Vec<usize>,
    pub actions: Vec<usize>,
}

impl History {
    pub fn new(first_observation: usize) -> Self {
        Self {
            observations: vec![first_observation],
            actions: Vec::new(),
        }
    }

    pub fn push(&mut self, action: usize, observation: usize) {
        self.actions.push(action);
        self.observations.push(observation);
    }

    /// Current time step, 1-based.
    pub fn t(&self) -> usize {
        self.observations.len()
    }

    pub fn validate(&self, model: &GenerativeModel) -> Result<()> {
        let t = self.t();
        if t == 0 || t > model.horizon {
            return Err(Error::History(format!(
                "time {t} outside 1..={}",
                model.horizon
            )));
        }
        if self.actions.len() + 1 != t {
            return Err(Error::History(format!(
                "{} observations need {} actions, found {}",
                t,
                t - 1,
                self.actions.len()
            )));
        }
        for &o in &self.observations {
            model.check_observation(o)?;
        }
        for &a in &self.actions {
            model.check_action(a)?;
        }
        Ok(())
    }
}

fn check_belief(model: &GenerativeModel, belief: &[f64]) -> Result<()> {
    if belief.len() != model.num_states() {
        return Err(Error::Shape {
            what: "belief".into(),
            expected: model.num_states(),
            found: belief.len(),
        });
    }
    Ok(())
}

/// Multiplies `prior` by `likelihood` and renormalises.
fn bayes(prior: &[f64], likelihood: &[f64], context: impl FnOnce() -> String) -> Result<Vec<f64>> {
    let mut post: Vec<f64> = prior.iter().zip(likelihood).map(|(p, l)| p * l).collect();
    let z = normalize(&mut post);
    if !(z > 0.0) {
        return Err(Error::AllZeroPosterior(context()));
    }
    Ok(post)
}

/// One filtering step: `q(s_t) ∝ p(o_t | s_t) sum_{s_{t-1}} p(s_t | s_{t-1}, a_{t-1}) q(s_{t-1})`.
///
/// With `action == None` the prior is used as-is (the `t = 1` case, where
/// the prior is `D`).
pub fn filter_step(
    model: &GenerativeModel,
    prior_belief: &[f64],
    action: Option<usize>,
    observation: usize,
) -> Result<Vec<f64>> {
    check_belief(model, prior_belief)?;
    let predicted = match action {
        Some(a) => {
            model.check_action(a)?;
            model.propagate(prior_belief, a)
        }
        None => prior_belief.to_vec(),
    };
    condition_on_observation(model, &predicted, observation)
}

/// Filters a whole history, returning `q(s_tau | o_{1:tau}, a_{1:tau-1})` for
/// every `tau <= t`.
pub fn filter_history(model: &GenerativeModel, history: &History) -> Result<Vec<Vec<f64>>> {
    history.validate(model)?;
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(history.t());
    let mut belief = filter_step(model, &model.initial_belief(), None, history.observations[0])?;
    out.push(belief.clone());
    for (a, &o) in history.actions.iter().zip(&history.observations[1..]) {
        belief = filter_step(model, &belief, Some(*a), o)?;
        out.push(belief.clone());
    }
    Ok(out)
}

/// Rolls `belief` forward through `B` without observations. Element `k` of
/// the result is the belief after `actions[..=k]`.
pub fn predict_state(
    model: &GenerativeModel,
    belief: &[f64],
    actions: &[usize],
) -> Result<Vec<Vec<f64>>> {
    check_belief(model, belief)?;
    let mut out = Vec::with_capacity(actions.len());
    let mut cur = belief.to_vec();
    for &a in actions {
        model.check_action(a)?;
        cur = model.propagate(&cur, a);
        out.push(cur.clone());
    }
    Ok(out)
}

/// `q(s | o) ∝ p(o | s) q(s)`.
pub fn condition_on_observation(
    model: &GenerativeModel,
    predicted: &[f64],
    observation: usize,
) -> Result<Vec<f64>> {
    check_belief(model, predicted)?;
    let lik = model.likelihood_vector(observation)?;
    bayes(predicted, &lik, || {
        format!("observation {observation} has zero probability under the predicted belief")
    })
}

/// `q(s | o)` using a precomputed `[s][o]` likelihood table.
pub(crate) fn condition_with_table(
    table: &[Vec<f64>],
    predicted: &[f64],
    observation: usize,
) -> Result<Vec<f64>> {
    let lik: Vec<f64> = table.iter().map(|row| row[observation]).collect();
    bayes(predicted, &lik, || {
        format!("observation {observation} has zero probability under the predicted belief")
    })
}

/// `q(o) = sum_s p(o | s) q(s)` over joint observations.
pub fn predict_observation(model: &GenerativeModel, belief: &[f64]) -> Result<Vec<f64>> {
    check_belief(model, belief)?;
    let mut out = vec![0.0; model.num_observations()];
    for (s, &p) in belief.iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        for (o, q) in model.observation_distribution(s).into_iter().enumerate() {
            out[o] += p * q;
        }
    }
    Ok(out)
}

pub(crate) fn predict_observation_with_table(table: &[Vec<f64>], belief: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; table.first().map_or(0, Vec::len)];
    for (row, &p) in table.iter().zip(belief) {
        if p == 0.0 {
            continue;
        }
        for (acc, &q) in out.iter_mut().zip(row) {
            *acc += p * q;
        }
    }
    out
}

/// Posterior over a whole episode given the observations so far and a full
/// action sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmoothedPosterior {
    /// `q(s_tau)` for `tau = 1..=T` (index `tau - 1`).
    pub marginals: Vec<Vec<f64>>,
    /// `q(s_{tau-1}, s_tau)` as `[prev][next]`, for `tau = 2..=T` (index
    /// `tau - 2`). `None` when the joint state is too large to materialise.
    pub pairwise: Option<Vec<Vec<Vec<f64>>>>,
    /// The action sequence `a_{1:T-1}` used.
    pub actions: Vec<usize>,
    /// Time up to which observations were conditioned on.
    pub t: usize,
}

impl SmoothedPosterior {
    pub fn horizon(&self) -> usize {
        self.marginals.len()
    }
}

/// Forward-backward smoothing over the joint state for
/// `q(s_{1:T}) ∝ prod_{tau<=t} p(o_tau | s_tau) p(s_1) prod_{tau>=2} p(s_tau | s_{tau-1}, a_{tau-1})`.
///
/// `future_actions` supplies `a_t .. a_{T-1}` and must have length `T - t`.
pub fn smooth(
    model: &GenerativeModel,
    history: &History,
    future_actions: &[usize],
) -> Result<SmoothedPosterior> {
    history.validate(model)?;
    let t = history.t();
    let horizon = model.horizon;
    if future_actions.len() != horizon - t {
        return Err(Error::Shape {
            what: "future actions".into(),
            expected: horizon - t,
            found: future_actions.len(),
        });
    }
    for &a in future_actions {
        model.check_action(a)?;
    }
    let actions: Vec<usize> = history
        .actions
        .iter()
        .chain(future_actions)
        .copied()
        .collect();

    let likelihoods: Vec<Option<Vec<f64>>> = (0..horizon)
        .map(|k| {
            history
                .observations
                .get(k)
                .map(|&o| model.likelihood_vector(o))
                .transpose()
        })
        .collect::<Result<_>>()?;

    let zero = |tau: usize| {
        move || format!("observation history has zero probability (at time {tau})")
    };

    // Forward pass: normalised filtered / predicted beliefs.
    let mut forward: Vec<Vec<f64>> = Vec::with_capacity(horizon);
    let prior = model.initial_belief();
    forward.push(match &likelihoods[0] {
        Some(l) => bayes(&prior, l, zero(1))?,
        None => prior,
    });
    for k in 1..horizon {
        let pred = model.propagate(&forward[k - 1], actions[k - 1]);
        forward.push(match &likelihoods[k] {
            Some(l) => bayes(&pred, l, zero(k + 1))?,
            None => pred,
        });
    }

    // Backward pass: beta_k(s) ∝ p(o_{k+1:t} | s_k), rescaled to sum 1.
    let n = model.num_states();
    let mut backward = vec![vec![1.0; n]; horizon];
    for k in (0..horizon - 1).rev() {
        let weighted: Vec<f64> = match &likelihoods[k + 1] {
            Some(l) => backward[k + 1].iter().zip(l).map(|(b, l)| b * l).collect(),
            None => backward[k + 1].clone(),
        };
        let mut beta = model.pullback(&weighted, actions[k]);
        normalize(&mut beta);
        backward[k] = beta;
    }

    let marginals: Vec<Vec<f64>> = forward
        .iter()
        .zip(&backward)
        .enumerate()
        .map(|(k, (f, b))| bayes(f, b, zero(k + 1)))
        .collect::<Result<_>>()?;

    let pairwise = if n <= PAIRWISE_JOINT_LIMIT {
        let mut all = Vec::with_capacity(horizon - 1);
        for k in 1..horizon {
            let evidence: Vec<f64> = match &likelihoods[k] {
                Some(l) => backward[k].iter().zip(l).map(|(b, l)| b * l).collect(),
                None => backward[k].clone(),
            };
            let mut xi = vec![vec![0.0; n]; n];
            let mut total = 0.0;
            for (prev, row) in xi.iter_mut().enumerate() {
                let w = forward[k - 1][prev];
                if w == 0.0 {
                    continue;
                }
                let mut unit = vec![0.0; n];
                unit[prev] = 1.0;
                let trans = model.propagate(&unit, actions[k - 1]);
                for (next, cell) in row.iter_mut().enumerate() {
                    *cell = w * trans[next] * evidence[next];
                    total += *cell;
                }
            }
            if !(total > 0.0) {
                return Err(Error::AllZeroPosterior(zero(k + 1)()));
            }
            xi.iter_mut().flatten().for_each(|x| *x /= total);
            all.push(xi);
        }
        Some(all)
    } else {
        None
    };

    Ok(SmoothedPosterior {
        marginals,
        pairwise,
        actions,
        t,
    })
}

/// Result of the per-factor fixed-point filter.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorizedPosterior {
    pub factors: Vec<Vec<f64>>,
    pub sweeps: usize,
    pub residual: f64,
}

/// Per-factor filtering step by fixed-point iteration:
///
/// `q^{i+1}(s^f) ∝ sum_{s^{\f}} q^i(s^{\f}) p(o | s) sum_{s^f_-} p(s^f | s^f_-, a) q(s^f_-)`.
///
/// Factors are swept in ascending order, each update using the newest
/// values of the others. Stops when a full sweep changes no entry by more
/// than [`FIXED_POINT_TOL`]; otherwise fails with
/// [`Error::NonConvergence`] after `max_sweeps`.
pub fn filter_step_factorized(
    model: &GenerativeModel,
    prior_factors: &[Vec<f64>],
    action: Option<usize>,
    observation: usize,
    max_sweeps: usize,
) -> Result<FactorizedPosterior> {
    let sizes = &model.states.factor_sizes;
    if prior_factors.len() != sizes.len() {
        return Err(Error::Shape {
            what: "factor beliefs".into(),
            expected: sizes.len(),
            found: prior_factors.len(),
        });
    }
    for (f, q) in prior_factors.iter().enumerate() {
        if q.len() != sizes[f] {
            return Err(Error::Shape {
                what: format!("belief over factor {f}"),
                expected: sizes[f],
                found: q.len(),
            });
        }
    }
    let predicted: Vec<Vec<f64>> = match action {
        Some(a) => {
            model.check_action(a)?;
            prior_factors
                .iter()
                .enumerate()
                .map(|(f, q)| {
                    let bfa = &model.b.0[f][a];
                    (0..sizes[f])
                        .map(|next| q.iter().zip(bfa).map(|(p, col)| p * col[next]).sum())
                        .collect()
                })
                .collect()
        }
        None => prior_factors.to_vec(),
    };
    let lik = model.likelihood_vector(observation)?;
    let strides = model.states.strides();

    let mut q = predicted.clone();
    let mut residual = f64::INFINITY;
    for sweep in 1..=max_sweeps.max(1) {
        let before = q.clone();
        for f in 0..sizes.len() {
            let mut msg = vec![0.0; sizes[f]];
            for (j, &l) in lik.iter().enumerate() {
                if l == 0.0 {
                    continue;
                }
                let mut w = l;
                for g in 0..sizes.len() {
                    if g != f {
                        w *= q[g][(j / strides[g]) % sizes[g]];
                    }
                }
                msg[(j / strides[f]) % sizes[f]] += w;
            }
            q[f] = bayes(&predicted[f], &msg, || {
                format!("observation {observation} is impossible for factor {f}")
            })?;
        }
        residual = before
            .iter()
            .zip(&q)
            .map(|(a, b)| max_abs_diff(a, b))
            .fold(0.0, f64::max);
        if residual < FIXED_POINT_TOL {
            return Ok(FactorizedPosterior {
                factors: q,
                sweeps: sweep,
                residual,
            });
        }
    }
    Err(Error::NonConvergence {
        last: q,
        residual,
        sweeps: max_sweeps.max(1),
    })
}
