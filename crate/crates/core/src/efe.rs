//! Expected free energy of a policy under the mean-field approximation
//! over future time steps.
//!
//! For each future step `tau`:
//!
//! ```text
//! G_tau = -( E_{q(o)}[ KL(q(s|o) || q(s)) ] + E_{q(o)}[ ln p_C(o) ] )   epistemic form
//!       =    E_{q(s)}[ H[p(o|s)] ] + KL(q(o) || p_C)                     ambiguity form
//! ```
//!
//! All quantities are in nats. Risk is measured against the normalised
//! preference distribution, so with unnormalised `C` the two forms differ by
//! `sum_tau ln Z_C(tau)`, which is the same for every policy.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inference::{condition_with_table, predict_observation_with_table};
use crate::math::SUPPORT_EPS;
use crate::model::GenerativeModel;

pub use crate::math::{entropy, kl_divergence};

/// Actions `a_t .. a_{T-1}` starting at time `start = t`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Policy {
    pub actions: Vec<usize>,
    pub start: usize,
}

impl Policy {
    pub fn new(start: usize, actions: Vec<usize>) -> Self {
        Self { actions, start }
    }

    pub fn first_action(&self) -> Option<usize> {
        self.actions.first().copied()
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EfeForm {
    /// Negative information gain minus utility.
    #[default]
    Epistemic,
    /// Ambiguity plus risk.
    Ambiguity,
}

/// Terms for one future time step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepTerms {
    pub tau: usize,
    pub epistemic_value: f64,
    pub utility: f64,
    pub ambiguity: f64,
    pub risk: f64,
    /// `G_tau` under the form that produced the breakdown.
    pub g: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EfeBreakdown {
    pub form: EfeForm,
    pub steps: Vec<StepTerms>,
    pub total: f64,
}

/// Per-model tables reused across policies.
#[derive(Debug, Clone)]
pub struct EfeEvaluator<'a> {
    model: &'a GenerativeModel,
    /// `p(o | s)` as `[s][o]`.
    table: Vec<Vec<f64>>,
    /// `H[p(o | s)]` per joint state.
    obs_entropy: Vec<f64>,
}

impl<'a> EfeEvaluator<'a> {
    pub fn new(model: &'a GenerativeModel) -> Self {
        let table = model.likelihood_matrix();
        let obs_entropy = table.iter().map(|row| entropy(row)).collect();
        Self {
            model,
            table,
            obs_entropy,
        }
    }

    pub fn model(&self) -> &GenerativeModel {
        self.model
    }

    /// Terms of `G_tau` given the predicted state belief `q(s_tau | pi)`.
    pub fn step_terms(&self, tau: usize, qs: &[f64], form: EfeForm) -> Result<StepTerms> {
        let qo = predict_observation_with_table(&self.table, qs);
        let ln_c = self.model.log_preference_joint(tau, false);
        let ln_c_norm = self.model.log_preference_joint(tau, true);

        let mut epistemic_value = 0.0;
        let mut utility = 0.0;
        let mut risk = 0.0;
        for (o, &p) in qo.iter().enumerate() {
            if p <= SUPPORT_EPS {
                continue;
            }
            let post = condition_with_table(&self.table, qs, o)?;
            epistemic_value += p * kl_divergence(&post, qs)?;
            utility += p * ln_c[o];
            risk += p * (p.ln() - ln_c_norm[o]);
        }
        let ambiguity: f64 = qs
            .iter()
            .zip(&self.obs_entropy)
            .map(|(q, h)| q * h)
            .sum();

        let g = match form {
            EfeForm::Epistemic => -(epistemic_value + utility),
            EfeForm::Ambiguity => ambiguity + risk,
        };
        Ok(StepTerms {
            tau,
            epistemic_value,
            utility,
            ambiguity,
            risk,
            g,
        })
    }

    /// `G(pi)` starting from the current belief `q_t(s_t)`.
    pub fn evaluate(&self, belief_now: &[f64], policy: &Policy, form: EfeForm) -> Result<EfeBreakdown> {
        let model = self.model;
        if belief_now.len() != model.num_states() {
            return Err(Error::Shape {
                what: "belief".into(),
                expected: model.num_states(),
                found: belief_now.len(),
            });
        }
        if policy.start == 0 || policy.start + policy.len() != model.horizon {
            return Err(Error::Shape {
                what: format!("policy starting at t = {}", policy.start),
                expected: model.horizon.saturating_sub(policy.start),
                found: policy.len(),
            });
        }
        let mut qs = belief_now.to_vec();
        let mut steps = Vec::with_capacity(policy.len());
        for (k, &a) in policy.actions.iter().enumerate() {
            model.check_action(a)?;
            qs = model.propagate(&qs, a);
            steps.push(self.step_terms(policy.start + k + 1, &qs, form)?);
        }
        let total = steps.iter().map(|s| s.g).sum();
        Ok(EfeBreakdown { form, steps, total })
    }
}

pub fn expected_free_energy(
    model: &GenerativeModel,
    belief_now: &[f64],
    policy: &Policy,
    form: EfeForm,
) -> Result<EfeBreakdown> {
    EfeEvaluator::new(model).evaluate(belief_now, policy, form)
}

/// `G` as negative epistemic value minus utility.
pub fn efe_epistemic_form(
    model: &GenerativeModel,
    belief_now: &[f64],
    policy: &Policy,
) -> Result<EfeBreakdown> {
    expected_free_energy(model, belief_now, policy, EfeForm::Epistemic)
}

/// `G` as ambiguity plus risk.
pub fn efe_ambiguity_form(
    model: &GenerativeModel,
    belief_now: &[f64],
    policy: &Policy,
) -> Result<EfeBreakdown> {
    expected_free_energy(model, belief_now, policy, EfeForm::Ambiguity)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::tmaze::*;
    use crate::model::Preferences;

    #[test]
    fn no_information_after_cue() {
        let m = build_tmaze_model(TMazeOptions::default()).model;
        let mut q2 = vec![0.0; 8];
        q2[state_index(CUE_LOCATION, RewardSide::Right)] = 1.0;
        let b = efe_epistemic_form(&m, &q2, &Policy::new(2, vec![LEFT_ARM])).unwrap();
        assert_eq!(b.steps.len(), 1);
        assert_eq!(b.steps[0].tau, 3);
        assert!(b.steps[0].epistemic_value.abs() < 1e-15);
    }

    #[test]
    fn uninformative_model_scores_all_policies_equally() {
        let m = GenerativeModel::new(
            vec![2],
            vec![3],
            2,
            vec![vec![vec![1.0 / 3.0; 3]; 2]],
            vec![
                vec![vec![vec![1.0, 0.0], vec![0.0, 1.0]], vec![vec![0.0, 1.0], vec![1.0, 0.0]]],
            ],
            Preferences::uniform(&[3]),
            vec![vec![0.5, 0.5]],
            3,
        )
        .unwrap();
        let b = vec![0.3, 0.7];
        let expect = 2.0 * 3f64.ln();
        for p in [[0, 0], [0, 1], [1, 0], [1, 1]] {
            let e = efe_epistemic_form(&m, &b, &Policy::new(1, p.to_vec())).unwrap();
            // utility = ln(1/3) per step, no information gain
            assert!((e.total - expect).abs() < 1e-12, "{}", e.total);
            let a = efe_ambiguity_form(&m, &b, &Policy::new(1, p.to_vec())).unwrap();
            assert!((a.total - e.total).abs() < 1e-12);
        }
    }

    #[test]
    fn deterministic_likelihood_has_no_ambiguity() {
        let m = build_tmaze_model(TMazeOptions::default()).model;
        let mut a = m.clone();
        // make every modality deterministic
        for am in &mut a.a.0 {
            for col in am.iter_mut() {
                let best = col
                    .iter()
                    .enumerate()
                    .max_by(|x, y| x.1.partial_cmp(y.1).unwrap())
                    .unwrap()
                    .0;
                col.iter_mut().enumerate().for_each(|(i, x)| *x = if i == best { 1.0 } else { 0.0 });
            }
        }
        let q = a.initial_belief();
        for p in [[0, 1], [3, 2], [1, 1]] {
            let b = efe_ambiguity_form(&a, &q, &Policy::new(1, p.to_vec())).unwrap();
            assert!(b.steps.iter().all(|s| s.ambiguity == 0.0));
        }
    }

    #[test]
    fn risk_vanishes_when_prediction_matches_preferences() {
        let m = GenerativeModel::new(
            vec![2],
            vec![2],
            1,
            vec![vec![vec![0.9, 0.1], vec![0.1, 0.9]]],
            vec![vec![vec![vec![1.0, 0.0], vec![0.0, 1.0]]]],
            Preferences::new(crate::model::PreferenceScale::Weights, true, vec![vec![0.66, 0.34]]),
            vec![vec![0.7, 0.3]],
            2,
        )
        .unwrap();
        // q(o) = (0.7*0.9 + 0.3*0.1, ...) = (0.66, 0.34)
        let b = efe_ambiguity_form(&m, &[0.7, 0.3], &Policy::new(1, vec![0])).unwrap();
        assert!(b.steps[0].risk.abs() < 1e-12);
    }

    #[test]
    fn empty_policy_at_horizon() {
        let m = build_tmaze_model(TMazeOptions::default()).model;
        let b = efe_epistemic_form(&m, &m.initial_belief(), &Policy::new(3, vec![])).unwrap();
        assert_eq!(b.total, 0.0);
        assert!(b.steps.is_empty());
    }

    #[test]
    fn wrong_policy_length_is_rejected() {
        let m = build_tmaze_model(TMazeOptions::default()).model;
        assert!(efe_epistemic_form(&m, &m.initial_belief(), &Policy::new(1, vec![0])).is_err());
    }
}
