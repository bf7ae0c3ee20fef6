use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::Environment;
use crate::error::{Error, Result};
use crate::math::sample_index;
use crate::model::{GenerativeModel, ObservationSpace};

/// Plays any valid generative model as the generative process: `s_1 ~ D`,
/// `o ~ A`, `s' ~ B`, factor by factor and modality by modality.
#[derive(Debug, Clone)]
pub struct ModelEnv {
    model: GenerativeModel,
    rng: ChaCha8Rng,
    state: Option<Vec<usize>>,
    t: usize,
}

impl ModelEnv {
    pub fn new(model: GenerativeModel) -> Self {
        Self {
            model,
            rng: ChaCha8Rng::seed_from_u64(0),
            state: None,
            t: 0,
        }
    }

    fn emit(&mut self) -> usize {
        let s = self
            .model
            .states
            .flatten(self.state.as_ref().expect("state set"))
            .expect("state in range");
        let parts: Vec<usize> = (0..self.model.observations.num_modalities())
            .map(|m| {
                let u: f64 = self.rng.gen();
                sample_index(&self.model.a.0[m][s], u)
            })
            .collect();
        self.model.observations.flatten(&parts).expect("observation in range")
    }
}

impl Environment for ModelEnv {
    fn observation_space(&self) -> &ObservationSpace {
        &self.model.observations
    }

    fn horizon(&self) -> usize {
        self.model.horizon
    }

    fn reset(&mut self, seed: u64) -> Result<usize> {
        self.rng = ChaCha8Rng::seed_from_u64(seed);
        let s: Vec<usize> = self
            .model
            .d
            .0
            .iter()
            .map(|df| {
                let u: f64 = self.rng.gen();
                sample_index(df, u)
            })
            .collect();
        self.state = Some(s);
        self.t = 1;
        Ok(self.emit())
    }

    fn step(&mut self, action: usize) -> Result<usize> {
        let Some(state) = self.state.as_ref() else {
            return Err(Error::NotReset);
        };
        if self.done() {
            return Err(Error::StepAfterDone);
        }
        self.model.check_action(action)?;
        let next: Vec<usize> = state
            .iter()
            .enumerate()
            .map(|(f, &sf)| {
                let u: f64 = self.rng.gen();
                sample_index(&self.model.b.0[f][action][sf], u)
            })
            .collect();
        self.state = Some(next);
        self.t += 1;
        Ok(self.emit())
    }

    fn time(&self) -> usize {
        self.t
    }

    fn true_state(&self) -> Option<usize> {
        self.state
            .as_ref()
            .and_then(|s| self.model.states.flatten(s).ok())
    }
}
