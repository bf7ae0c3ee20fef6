//! Agent-environment simulation: the perception, planning and action loop,
//! optional learning between episodes, trajectory logs and policy tables.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::efe::StepTerms;
use crate::env::tmaze::{DEFAULT_CONCENTRATION, DEFAULT_PSEUDO_COUNT};
use crate::env::{build_tmaze_model, Environment, ModelEnv, RewardSide, TMazeEnv, TMazeOptions};
use crate::error::{Error, Result};
use crate::inference::{filter_step, filter_step_factorized, smooth, History, EXACT_JOINT_LIMIT, FIXED_POINT_MAX_SWEEPS};
use crate::learning::{learn_episode, model_from_alpha, save_alpha, DirichletParams, LearnOptions};
use crate::model::{load_model, GenerativeModel};
use crate::policy::{greedy_action, policy_posterior, sample_policy_with, PolicyOptions, PolicyPosterior, RNG_ALGORITHM};

pub const TRAJECTORY_FILE: &str = "trajectory.jsonl";
pub const SUMMARY_FILE: &str = "summary.json";
pub const TABLES_FILE: &str = "tables.txt";
pub const ALPHA_FILE: &str = "alpha.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Sample a policy from the posterior, the agent's natural behaviour.
    Sample,
    /// Take the first action of the most probable policy.
    Greedy,
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sample" => Ok(Mode::Sample),
            "greedy" => Ok(Mode::Greedy),
            other => Err(Error::Config(format!("unknown mode {other:?}, expected sample or greedy"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind", content = "path")]
pub enum ModelSource {
    /// Built-in maze that reproduces the published tables.
    Tmaze,
    /// Built-in maze with absorbing arms and raw preference weights.
    TmazeAbsorbing,
    File(PathBuf),
}

impl FromStr for ModelSource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "tmaze" => ModelSource::Tmaze,
            "tmaze-absorbing" => ModelSource::TmazeAbsorbing,
            "" => return Err(Error::Config("empty model name".into())),
            path => ModelSource::File(PathBuf::from(path)),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub model: ModelSource,
    pub episodes: usize,
    pub seed: Option<u64>,
    pub mode: Mode,
    pub learn: bool,
    pub out: Option<PathBuf>,
    pub c_normalize: Option<bool>,
    pub force_reward_side: Option<RewardSide>,
    pub emit_tables: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            model: ModelSource::Tmaze,
            episodes: 1,
            seed: None,
            mode: Mode::Greedy,
            learn: false,
            out: None,
            c_normalize: None,
            force_reward_side: None,
            emit_tables: false,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.episodes == 0 {
            return Err(Error::Config("episodes must be at least 1".into()));
        }
        if self.mode == Mode::Sample && self.seed.is_none() {
            return Err(Error::Config("sample mode needs --seed".into()));
        }
        if self.force_reward_side.is_some() && matches!(self.model, ModelSource::File(_)) {
            return Err(Error::Config("--force-reward-side only applies to the built-in T-maze".into()));
        }
        Ok(())
    }

    /// Seed actually used: greedy runs default to 0.
    pub fn effective_seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }
}

/// One policy's row in a step record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyRow {
    pub actions: Vec<usize>,
    pub probability: f64,
    pub g: f64,
    pub terms: Vec<StepTerms>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub episode: usize,
    pub t: usize,
    pub observation: usize,
    pub observation_labels: Vec<String>,
    /// `q_t(s_t)` over joint states.
    pub belief: Vec<f64>,
    pub belief_factors: Vec<Vec<f64>>,
    pub policies: Vec<PolicyRow>,
    pub action: Option<usize>,
    pub action_label: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub episode: usize,
    pub env_seed: u64,
    pub observations: Vec<usize>,
    pub actions: Vec<usize>,
    /// `sum_tau ln p_C(o_tau)` with normalised preferences.
    pub realized_utility: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reward_side: Option<RewardSide>,
    /// `alpha` after the episode minus `alpha` before it.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha_delta: Option<DirichletParams>,
}

/// One line of the trajectory log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum TrajectoryRecord {
    Step(StepRecord),
    Episode(EpisodeRecord),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeSummary {
    pub episode: usize,
    pub env_seed: u64,
    pub realized_utility: f64,
    pub actions: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub config: RunConfig,
    pub seed: u64,
    pub rng: String,
    pub episodes: Vec<EpisodeSummary>,
    pub mean_realized_utility: f64,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub records: Vec<TrajectoryRecord>,
    pub summary: Summary,
    pub final_alpha: Option<DirichletParams>,
}

impl RunOutput {
    pub fn steps(&self) -> impl Iterator<Item = &StepRecord> {
        self.records.iter().filter_map(|r| match r {
            TrajectoryRecord::Step(s) => Some(s),
            TrajectoryRecord::Episode(_) => None,
        })
    }

    /// The trajectory as line-delimited JSON.
    pub fn trajectory_jsonl(&self) -> Result<String> {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&serde_json::to_string(r)?);
            out.push('\n');
        }
        Ok(out)
    }

    /// Policy tables for every step, in log order.
    pub fn tables(&self) -> String {
        let mut out = String::new();
        for s in self.steps() {
            let _ = writeln!(out, "episode {} t = {}", s.episode, s.t);
            out.push_str(&emit_table(s));
            out.push('\n');
        }
        out
    }

    pub fn write_to(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join(TRAJECTORY_FILE), self.trajectory_jsonl()?)?;
        let mut summary = serde_json::to_string_pretty(&self.summary)?;
        summary.push('\n');
        fs::write(dir.join(SUMMARY_FILE), summary)?;
        if self.summary.config.emit_tables {
            fs::write(dir.join(TABLES_FILE), self.tables())?;
        }
        if let Some(alpha) = &self.final_alpha {
            save_alpha(alpha, dir.join(ALPHA_FILE))?;
        }
        Ok(())
    }
}

/// Policy posterior as text: rows are the first action, columns the second,
/// further actions summed out. One remaining action gives a single row and
/// none gives `1.000`.
pub fn emit_table(record: &StepRecord) -> String {
    let len = record.policies.first().map_or(0, |p| p.actions.len());
    if len == 0 {
        let total: f64 = record.policies.iter().map(|p| p.probability).sum();
        return format!("{total:.3}\n");
    }
    let num_actions = record
        .policies
        .iter()
        .flat_map(|p| p.actions.iter())
        .max()
        .map_or(0, |a| a + 1);
    let rows = if len == 1 { 1 } else { num_actions };
    let mut grid = vec![vec![0.0; num_actions]; rows];
    for p in &record.policies {
        let (r, c) = if len == 1 { (0, p.actions[0]) } else { (p.actions[0], p.actions[1]) };
        grid[r][c] += p.probability;
    }
    let mut out = String::new();
    out.push_str(if len == 1 { "     " } else { "a1\\a2" });
    for c in 0..num_actions {
        let _ = write!(out, " {c:>6}");
    }
    out.push('\n');
    for (r, row) in grid.iter().enumerate() {
        if len == 1 {
            out.push_str("     ");
        } else {
            let _ = write!(out, "{r:>5}");
        }
        for v in row {
            let _ = write!(out, " {v:>6.3}");
        }
        out.push('\n');
    }
    out
}

struct Setup {
    model: GenerativeModel,
    env: Box<dyn Environment>,
    tmaze: bool,
}

fn setup(config: &RunConfig) -> Result<Setup> {
    let tmaze_options = match &config.model {
        ModelSource::Tmaze => Some(TMazeOptions::default()),
        ModelSource::TmazeAbsorbing => Some(TMazeOptions::literal()),
        ModelSource::File(_) => None,
    };
    let mut setup = match (&config.model, tmaze_options) {
        (_, Some(mut options)) => {
            if let Some(n) = config.c_normalize {
                options.normalize_preferences = n;
            }
            Setup {
                model: build_tmaze_model(options).model,
                env: Box::new(TMazeEnv::new(options, config.force_reward_side)),
                tmaze: true,
            }
        }
        (ModelSource::File(path), None) => {
            let model = load_model(path)?;
            Setup {
                env: Box::new(ModelEnv::new(model.clone())),
                model,
                tmaze: false,
            }
        }
        _ => unreachable!("builtins always carry options"),
    };
    if let Some(n) = config.c_normalize {
        setup.model.c.normalize = n;
    }
    Ok(setup)
}

fn update_belief(model: &GenerativeModel, prior: &[f64], action: Option<usize>, obs: usize) -> Result<Vec<f64>> {
    if model.num_states() <= EXACT_JOINT_LIMIT {
        return filter_step(model, prior, action, obs);
    }
    let factors = model.factor_marginals(prior);
    let post = filter_step_factorized(model, &factors, action, obs, FIXED_POINT_MAX_SWEEPS)?;
    Ok(model.joint_from_factors(&post.factors))
}

fn policy_rows(post: &PolicyPosterior) -> Vec<PolicyRow> {
    post.policies
        .iter()
        .zip(&post.probabilities)
        .zip(&post.breakdowns)
        .map(|((p, &probability), b)| PolicyRow {
            actions: p.actions.clone(),
            probability,
            g: b.total,
            terms: b.steps.clone(),
        })
        .collect()
}

/// Setup errors (bad configuration, unreadable model) are reported as
/// [`Error::Config`]; everything else comes from running the episodes.
pub fn run(config: &RunConfig) -> Result<RunOutput> {
    config.validate()?;
    let Setup { model, mut env, tmaze } = match setup(config) {
        Ok(s) => s,
        Err(Error::Config(m)) => return Err(Error::Config(m)),
        Err(e) => return Err(Error::Config(e.to_string())),
    };
    let seed = config.effective_seed();
    let mut master = ChaCha8Rng::seed_from_u64(seed);

    let template = model;
    let mut alpha = config
        .learn
        .then(|| DirichletParams::from_model(&template, DEFAULT_CONCENTRATION, DEFAULT_PSEUDO_COUNT));
    let mut agent_model = template.clone();

    let mut records = Vec::new();
    let mut episodes = Vec::with_capacity(config.episodes);
    for episode in 1..=config.episodes {
        let env_seed = master.next_u64();
        let mut agent_rng = ChaCha8Rng::seed_from_u64(master.next_u64());

        let mut obs = env.reset(env_seed)?;
        let mut history = History::new(obs);
        let mut belief = update_belief(&agent_model, &agent_model.initial_belief(), None, obs)?;
        loop {
            let t = history.t();
            let post = policy_posterior(&agent_model, &belief, &history, None, PolicyOptions::default())?;
            let action = match config.mode {
                Mode::Greedy => greedy_action(&post),
                Mode::Sample => sample_policy_with(&post, &mut agent_rng).first_action(),
            };
            records.push(TrajectoryRecord::Step(StepRecord {
                episode,
                t,
                observation: obs,
                observation_labels: agent_model.observation_labels(obs),
                belief_factors: agent_model.factor_marginals(&belief),
                belief: belief.clone(),
                policies: policy_rows(&post),
                action,
                action_label: action.map(|a| agent_model.actions.label(a)),
            }));
            let Some(a) = action else { break };
            if env.done() {
                break;
            }
            obs = env.step(a)?;
            history.push(a, obs);
            belief = update_belief(&agent_model, &belief, Some(a), obs)?;
        }

        let realized_utility: f64 = history
            .observations
            .iter()
            .enumerate()
            .map(|(k, &o)| template.log_preference_joint(k + 1, true)[o])
            .sum();

        let mut alpha_delta = None;
        if let Some(prev) = &alpha {
            let smoothed = smooth(&agent_model, &history, &[])?;
            let next = learn_episode(prev, &smoothed, &history, LearnOptions::default())?;
            alpha_delta = Some(next.difference(prev));
            agent_model = model_from_alpha(&next, &template)?;
            alpha = Some(next);
        }

        let reward_side = if tmaze {
            env.true_state().map(|s| RewardSide::from_index(s % 2))
        } else {
            None
        };
        episodes.push(EpisodeSummary {
            episode,
            env_seed,
            realized_utility,
            actions: history.actions.clone(),
        });
        records.push(TrajectoryRecord::Episode(EpisodeRecord {
            episode,
            env_seed,
            observations: history.observations,
            actions: history.actions,
            realized_utility,
            reward_side,
            alpha_delta,
        }));
    }

    let mean_realized_utility = episodes.iter().map(|e| e.realized_utility).sum::<f64>() / episodes.len() as f64;
    Ok(RunOutput {
        records,
        summary: Summary {
            config: config.clone(),
            seed,
            rng: RNG_ALGORITHM.to_string(),
            episodes,
            mean_realized_utility,
        },
        final_alpha: alpha,
    })
}
