//! The T-maze: a mouse starts in the centre, a reward sits in one of two
//! arms and a cue at the bottom of the maze tells which arm.
//!
//! State factors: location {center, right arm, left arm, cue location} and
//! reward condition {reward on right, reward on left}. Observation
//! modalities: location (same four values), reward {no reward, reward,
//! loss} and cue {cue right, cue left}. Action `k` moves to location `k`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::Environment;
use crate::error::{Error, Result};
use crate::learning::DirichletParams;
use crate::model::{
    ActionSpace, GenerativeModel, InitialPrior, Labels, LikelihoodKernel, ObservationSpace,
    PreferenceScale, Preferences, StateSpace, TransitionKernel,
};

pub const CENTER: usize = 0;
pub const RIGHT_ARM: usize = 1;
pub const LEFT_ARM: usize = 2;
pub const CUE_LOCATION: usize = 3;

pub const NO_REWARD: usize = 0;
pub const REWARD: usize = 1;
pub const LOSS: usize = 2;

pub const CUE_RIGHT: usize = 0;
pub const CUE_LEFT: usize = 1;

pub const HORIZON: usize = 3;

/// Probability of the outcome that matches the reward condition in an arm.
pub const REWARD_PROBABILITY: f64 = 0.98;

/// Preference values on the reward modality: no reward, reward, loss.
pub const REWARD_PREFERENCES: [f64; 3] = [2.0, 3.0, 1.0];

/// Dirichlet prior is `concentration * theta + pseudo_count` elementwise.
pub const DEFAULT_CONCENTRATION: f64 = 10.0;
pub const DEFAULT_PSEUDO_COUNT: f64 = 0.01;

const LOCATIONS: [&str; 4] = ["center", "right arm", "left arm", "cue location"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RewardSide {
    Right,
    Left,
}

impl RewardSide {
    /// Index in the reward-condition factor.
    pub fn index(self) -> usize {
        match self {
            RewardSide::Right => 0,
            RewardSide::Left => 1,
        }
    }

    pub fn from_index(i: usize) -> Self {
        if i == 0 {
            RewardSide::Right
        } else {
            RewardSide::Left
        }
    }

    fn arm(self) -> usize {
        match self {
            RewardSide::Right => RIGHT_ARM,
            RewardSide::Left => LEFT_ARM,
        }
    }
}

impl std::str::FromStr for RewardSide {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "right" => Ok(RewardSide::Right),
            "left" => Ok(RewardSide::Left),
            other => Err(Error::Config(format!("unknown reward side {other:?}"))),
        }
    }
}

/// Variant knobs for the maze.
///
/// The default (controllable location, log-scale preferences) reproduces the
/// published policy tables. [`TMazeOptions::literal`] keeps the arms
/// absorbing and reads `2, 3, 1` as raw preference weights.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TMazeOptions {
    /// Once in an arm the agent stays there regardless of the action.
    pub absorbing_arms: bool,
    pub preference_scale: PreferenceScale,
    pub normalize_preferences: bool,
    pub concentration: f64,
    pub pseudo_count: f64,
}

impl Default for TMazeOptions {
    fn default() -> Self {
        Self {
            absorbing_arms: false,
            preference_scale: PreferenceScale::Log,
            normalize_preferences: true,
            concentration: DEFAULT_CONCENTRATION,
            pseudo_count: DEFAULT_PSEUDO_COUNT,
        }
    }
}

impl TMazeOptions {
    pub fn literal() -> Self {
        Self {
            absorbing_arms: true,
            preference_scale: PreferenceScale::Weights,
            ..Self::default()
        }
    }

    fn next_location(&self, location: usize, action: usize) -> usize {
        if self.absorbing_arms && (location == RIGHT_ARM || location == LEFT_ARM) {
            location
        } else {
            action
        }
    }
}

/// The maze's generative model together with its preferences and the
/// Dirichlet prior used when learning is enabled.
#[derive(Debug, Clone)]
pub struct TMaze {
    pub model: GenerativeModel,
    pub preferences: Preferences,
    pub alpha: DirichletParams,
}

/// `p(o^R | location, reward side)`.
fn reward_column(location: usize, side: usize) -> Vec<f64> {
    match location {
        CENTER | CUE_LOCATION => vec![1.0, 0.0, 0.0],
        arm => {
            let hit = RewardSide::from_index(side).arm() == arm;
            let (r, l) = if hit {
                (REWARD_PROBABILITY, 1.0 - REWARD_PROBABILITY)
            } else {
                (1.0 - REWARD_PROBABILITY, REWARD_PROBABILITY)
            };
            vec![0.0, r, l]
        }
    }
}

fn cue_column(location: usize, side: usize) -> Vec<f64> {
    if location == CUE_LOCATION {
        let mut v = vec![0.0, 0.0];
        v[side] = 1.0;
        v
    } else {
        vec![0.5, 0.5]
    }
}

pub fn build_tmaze_model(options: TMazeOptions) -> TMaze {
    let states = StateSpace::new(vec![4, 2]);
    let observations = ObservationSpace::new(vec![4, 3, 2]);

    let mut a_loc = Vec::with_capacity(8);
    let mut a_rew = Vec::with_capacity(8);
    let mut a_cue = Vec::with_capacity(8);
    for s in 0..states.joint_size() {
        let parts = states.unflatten(s);
        let (loc, side) = (parts[0], parts[1]);
        let mut col = vec![0.0; 4];
        col[loc] = 1.0;
        a_loc.push(col);
        a_rew.push(reward_column(loc, side));
        a_cue.push(cue_column(loc, side));
    }

    let b_loc: Vec<Vec<Vec<f64>>> = (0..4)
        .map(|action| {
            (0..4)
                .map(|prev| {
                    let mut col = vec![0.0; 4];
                    col[options.next_location(prev, action)] = 1.0;
                    col
                })
                .collect()
        })
        .collect();
    let identity = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
    let b_side = vec![identity; 4];

    let (neutral, reward) = match options.preference_scale {
        PreferenceScale::Weights => (1.0, REWARD_PREFERENCES.to_vec()),
        PreferenceScale::Log => (0.0, REWARD_PREFERENCES.to_vec()),
    };
    let preferences = Preferences::new(
        options.preference_scale,
        options.normalize_preferences,
        vec![vec![neutral; 4], reward, vec![neutral; 2]],
    );

    let model = GenerativeModel {
        states,
        observations,
        actions: ActionSpace {
            size: 4,
            labels: Some(LOCATIONS.iter().map(|l| format!("move to {l}")).collect()),
        },
        a: LikelihoodKernel(vec![a_loc, a_rew, a_cue]),
        b: TransitionKernel(vec![b_loc, b_side]),
        c: preferences.clone(),
        d: InitialPrior(vec![vec![0.25; 4], vec![0.5; 2]]),
        horizon: HORIZON,
        labels: Labels {
            state_factors: Some(vec![
                LOCATIONS.iter().map(|s| s.to_string()).collect(),
                vec!["reward on right".into(), "reward on left".into()],
            ]),
            modalities: Some(vec![
                LOCATIONS.iter().map(|s| s.to_string()).collect(),
                vec!["no reward".into(), "reward".into(), "loss".into()],
                vec!["cue right".into(), "cue left".into()],
            ]),
        },
    };
    let alpha = DirichletParams::from_model(&model, options.concentration, options.pseudo_count);
    TMaze {
        model,
        preferences,
        alpha,
    }
}

/// Joint state index for `(location, side)`.
pub fn state_index(location: usize, side: RewardSide) -> usize {
    location * 2 + side.index()
}

/// Joint observation index for `(location, reward outcome, cue)`.
pub fn observation_index(location: usize, reward: usize, cue: usize) -> usize {
    (location * 3 + reward) * 2 + cue
}

/// The maze as a generative process.
#[derive(Debug, Clone)]
pub struct TMazeEnv {
    options: TMazeOptions,
    observations: ObservationSpace,
    force_side: Option<RewardSide>,
    side: RewardSide,
    location: usize,
    t: usize,
    rng: ChaCha8Rng,
}

impl TMazeEnv {
    pub fn new(options: TMazeOptions, force_side: Option<RewardSide>) -> Self {
        Self {
            options,
            observations: ObservationSpace::new(vec![4, 3, 2]),
            force_side,
            side: RewardSide::Right,
            location: CENTER,
            t: 0,
            rng: ChaCha8Rng::seed_from_u64(0),
        }
    }

    pub fn reward_side(&self) -> RewardSide {
        self.side
    }

    pub fn location(&self) -> usize {
        self.location
    }

    fn emit(&mut self) -> usize {
        let reward = match self.location {
            CENTER | CUE_LOCATION => NO_REWARD,
            arm => {
                let u: f64 = self.rng.gen();
                let hit = arm == self.side.arm();
                match (hit, u < REWARD_PROBABILITY) {
                    (true, true) | (false, false) => REWARD,
                    _ => LOSS,
                }
            }
        };
        let cue = if self.location == CUE_LOCATION {
            self.side.index()
        } else if self.rng.gen::<f64>() < 0.5 {
            CUE_RIGHT
        } else {
            CUE_LEFT
        };
        observation_index(self.location, reward, cue)
    }
}

impl Environment for TMazeEnv {
    fn observation_space(&self) -> &ObservationSpace {
        &self.observations
    }

    fn horizon(&self) -> usize {
        HORIZON
    }

    fn reset(&mut self, seed: u64) -> Result<usize> {
        self.rng = ChaCha8Rng::seed_from_u64(seed);
        let drawn = if self.rng.gen::<f64>() < 0.5 {
            RewardSide::Right
        } else {
            RewardSide::Left
        };
        self.side = self.force_side.unwrap_or(drawn);
        self.location = CENTER;
        self.t = 1;
        Ok(self.emit())
    }

    fn step(&mut self, action: usize) -> Result<usize> {
        if self.t == 0 {
            return Err(Error::NotReset);
        }
        if self.done() {
            return Err(Error::StepAfterDone);
        }
        if action >= 4 {
            return Err(Error::IndexOutOfRange {
                what: "action",
                index: action,
                size: 4,
            });
        }
        self.location = self.options.next_location(self.location, action);
        self.t += 1;
        Ok(self.emit())
    }

    fn time(&self) -> usize {
        self.t
    }

    fn true_state(&self) -> Option<usize> {
        (self.t > 0).then(|| state_index(self.location, self.side))
    }
}
