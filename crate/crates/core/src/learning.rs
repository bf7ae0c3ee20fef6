//! Dirichlet hyperparameter learning at the end of an episode.
//!
//! Hyperparameters mirror the kernel layouts of [`GenerativeModel`]:
//! `alpha_A[m][s][o]` over joint states, `alpha_B[f][a][prev][next]` and
//! `alpha_D[f][s]`.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inference::{History, SmoothedPosterior};
use crate::model::{
    parse_error, GenerativeModel, InitialPrior, LikelihoodKernel, ObservationSpace, StateSpace, TransitionKernel,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirichletParams {
    #[serde(rename = "alpha_A")]
    pub a: Vec<Vec<Vec<f64>>>,
    #[serde(rename = "alpha_B")]
    pub b: Vec<Vec<Vec<Vec<f64>>>>,
    #[serde(rename = "alpha_D")]
    pub d: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LearnOptions {
    /// Multiplier applied to every increment.
    pub learning_rate: f64,
    /// Use pairwise smoothed marginals for `alpha_B` instead of the product
    /// of singleton marginals.
    pub use_pairwise: bool,
}

impl Default for LearnOptions {
    fn default() -> Self {
        Self {
            learning_rate: 1.0,
            use_pairwise: false,
        }
    }
}

fn zeros_like3(v: &[Vec<Vec<f64>>]) -> Vec<Vec<Vec<f64>>> {
    v.iter().map(|x| x.iter().map(|y| vec![0.0; y.len()]).collect()).collect()
}

impl DirichletParams {
    /// `alpha = concentration * theta + pseudo_count` for every kernel entry.
    pub fn from_model(model: &GenerativeModel, concentration: f64, pseudo_count: f64) -> Self {
        let f = |x: &f64| concentration * x + pseudo_count;
        Self {
            a: model.a.0.iter().map(|m| m.iter().map(|c| c.iter().map(f).collect()).collect()).collect(),
            b: model
                .b
                .0
                .iter()
                .map(|bf| bf.iter().map(|ba| ba.iter().map(|c| c.iter().map(f).collect()).collect()).collect())
                .collect(),
            d: model.d.0.iter().map(|c| c.iter().map(f).collect()).collect(),
        }
    }

    /// All-ones hyperparameters with the model's shapes.
    pub fn uniform_like(model: &GenerativeModel) -> Self {
        Self::from_model(model, 0.0, 1.0)
    }

    /// Same shapes, every entry zero. Used to hold increments.
    pub fn zeros_like(&self) -> Self {
        Self {
            a: zeros_like3(&self.a),
            b: self.b.iter().map(|bf| zeros_like3(bf)).collect(),
            d: self.d.iter().map(|c| vec![0.0; c.len()]).collect(),
        }
    }

    pub fn factor_sizes(&self) -> Vec<usize> {
        self.d.iter().map(Vec::len).collect()
    }

    pub fn modality_sizes(&self) -> Vec<usize> {
        self.a.iter().map(|m| m.first().map_or(0, Vec::len)).collect()
    }

    pub fn num_actions(&self) -> usize {
        self.b.first().map_or(0, Vec::len)
    }

    fn entries(&self) -> impl Iterator<Item = f64> + '_ {
        let a = self.a.iter().flatten().flatten();
        let b = self.b.iter().flatten().flatten().flatten();
        let d = self.d.iter().flatten();
        a.chain(b).chain(d).copied()
    }

    /// Checks that every entry is positive and finite.
    pub fn validate(&self) -> Result<()> {
        match self.entries().enumerate().find(|(_, x)| !(*x > 0.0 && x.is_finite())) {
            Some((index, value)) => Err(Error::NonPositive {
                what: "dirichlet hyperparameter",
                index,
                value,
            }),
            None => Ok(()),
        }
    }

    /// Checks that the layout matches `model`'s kernels.
    pub fn check_shape(&self, model: &GenerativeModel) -> Result<()> {
        let shape_err = |what: &str, expected: usize, found: usize| Error::Shape {
            what: what.into(),
            expected,
            found,
        };
        if self.d.len() != model.d.0.len() {
            return Err(shape_err("alpha_D factors", model.d.0.len(), self.d.len()));
        }
        for (x, y) in self.d.iter().zip(&model.d.0) {
            if x.len() != y.len() {
                return Err(shape_err("alpha_D column", y.len(), x.len()));
            }
        }
        if self.a.len() != model.a.0.len() {
            return Err(shape_err("alpha_A modalities", model.a.0.len(), self.a.len()));
        }
        for (xm, ym) in self.a.iter().zip(&model.a.0) {
            if xm.len() != ym.len() {
                return Err(shape_err("alpha_A states", ym.len(), xm.len()));
            }
            for (x, y) in xm.iter().zip(ym) {
                if x.len() != y.len() {
                    return Err(shape_err("alpha_A column", y.len(), x.len()));
                }
            }
        }
        if self.b.len() != model.b.0.len() {
            return Err(shape_err("alpha_B factors", model.b.0.len(), self.b.len()));
        }
        for (xf, yf) in self.b.iter().zip(&model.b.0) {
            if xf.len() != yf.len() {
                return Err(shape_err("alpha_B actions", yf.len(), xf.len()));
            }
            for (xa, ya) in xf.iter().zip(yf) {
                if xa.len() != ya.len() {
                    return Err(shape_err("alpha_B states", ya.len(), xa.len()));
                }
                for (x, y) in xa.iter().zip(ya) {
                    if x.len() != y.len() {
                        return Err(shape_err("alpha_B column", y.len(), x.len()));
                    }
                }
            }
        }
        Ok(())
    }

    /// Entry-wise `self + rate * other`. Shapes must agree.
    pub fn add_scaled(&self, other: &Self, rate: f64) -> Self {
        let add1 = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(a, b)| a + rate * b).collect::<Vec<_>>();
        let add2 = |x: &[Vec<f64>], y: &[Vec<f64>]| x.iter().zip(y).map(|(a, b)| add1(a, b)).collect::<Vec<_>>();
        let add3 =
            |x: &[Vec<Vec<f64>>], y: &[Vec<Vec<f64>>]| x.iter().zip(y).map(|(a, b)| add2(a, b)).collect::<Vec<_>>();
        Self {
            a: add3(&self.a, &other.a),
            b: self.b.iter().zip(&other.b).map(|(x, y)| add3(x, y)).collect(),
            d: add2(&self.d, &other.d),
        }
    }

    /// Entry-wise `self - other`.
    pub fn difference(&self, other: &Self) -> Self {
        self.add_scaled(other, -1.0)
    }

    /// Largest absolute entry-wise difference.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.difference(other).entries().map(f64::abs).fold(0.0, f64::max)
    }
}

/// Sums a joint distribution down to one factor.
fn factor_marginal(joint: &[f64], sizes: &[usize], f: usize) -> Vec<f64> {
    let stride: usize = sizes[f + 1..].iter().product();
    let mut out = vec![0.0; sizes[f]];
    for (j, &p) in joint.iter().enumerate() {
        out[(j / stride) % sizes[f]] += p;
    }
    out
}

/// `q(s^f_{tau-1}, s^f_tau)` from a joint pairwise table `[prev][next]`.
fn factor_pairwise(pair: &[Vec<f64>], sizes: &[usize], f: usize) -> Vec<Vec<f64>> {
    let stride: usize = sizes[f + 1..].iter().product();
    let n = sizes[f];
    let mut out = vec![vec![0.0; n]; n];
    for (i, row) in pair.iter().enumerate() {
        let k = (i / stride) % n;
        for (j, &p) in row.iter().enumerate() {
            out[k][(j / stride) % n] += p;
        }
    }
    out
}

fn check_episode(alpha: &DirichletParams, smoothed: &SmoothedPosterior, history: &History) -> Result<()> {
    let states = StateSpace::new(alpha.factor_sizes());
    let observations = ObservationSpace::new(alpha.modality_sizes());
    let horizon = history.t();
    if smoothed.marginals.len() != horizon {
        return Err(Error::Shape {
            what: "smoothed marginals".into(),
            expected: horizon,
            found: smoothed.marginals.len(),
        });
    }
    if smoothed.t != horizon {
        return Err(Error::History(format!(
            "smoothed posterior conditioned up to t = {}, episode has T = {horizon}",
            smoothed.t
        )));
    }
    if history.actions.len() + 1 != horizon || smoothed.actions != history.actions {
        return Err(Error::History("smoothed actions differ from the episode's actions".into()));
    }
    for q in &smoothed.marginals {
        if q.len() != states.joint_size() {
            return Err(Error::Shape {
                what: "smoothed marginal".into(),
                expected: states.joint_size(),
                found: q.len(),
            });
        }
    }
    for (m, am) in alpha.a.iter().enumerate() {
        if am.len() != states.joint_size() {
            return Err(Error::Shape {
                what: format!("alpha_A[{m}] states"),
                expected: states.joint_size(),
                found: am.len(),
            });
        }
    }
    for &a in &history.actions {
        if a >= alpha.num_actions() {
            return Err(Error::IndexOutOfRange {
                what: "action",
                index: a,
                size: alpha.num_actions(),
            });
        }
    }

    for &o in &history.observations {
        if o >= observations.joint_size() {
            return Err(Error::IndexOutOfRange {
                what: "observation",
                index: o,
                size: observations.joint_size(),
            });
        }
    }
    Ok(())
}

/// Adds the contribution of step `tau` (1-based) to `inc`: the initial-state
/// counts at `tau = 1`, the likelihood counts at every step and the
/// transition counts into `tau` for `tau >= 2`.
fn accumulate_step(
    inc: &mut DirichletParams,
    smoothed: &SmoothedPosterior,
    history: &History,
    tau: usize,
    pairwise: Option<&Vec<Vec<Vec<f64>>>>,
) {
    let factor_sizes = inc.factor_sizes();
    let observations = ObservationSpace::new(inc.modality_sizes());
    let q = &smoothed.marginals[tau - 1];
    if tau == 1 {
        for (f, df) in inc.d.iter_mut().enumerate() {
            *df = factor_marginal(q, &factor_sizes, f);
        }
    }
    let parts = observations.unflatten(history.observations[tau - 1]);
    for (m, am) in inc.a.iter_mut().enumerate() {
        for (s, &p) in q.iter().enumerate() {
            am[s][parts[m]] += p;
        }
    }
    if tau == 1 {
        return;
    }
    let action = history.actions[tau - 2];
    for (f, bf) in inc.b.iter_mut().enumerate() {
        let cell = &mut bf[action];
        match pairwise {
            Some(p) => {
                let pf = factor_pairwise(&p[tau - 2], &factor_sizes, f);
                for (k, row) in pf.iter().enumerate() {
                    for (j, &x) in row.iter().enumerate() {
                        cell[k][j] += x;
                    }
                }
            }
            None => {
                let prev = factor_marginal(&smoothed.marginals[tau - 2], &factor_sizes, f);
                let next = factor_marginal(q, &factor_sizes, f);
                for (k, &pk) in prev.iter().enumerate() {
                    for (j, &nj) in next.iter().enumerate() {
                        cell[k][j] += pk * nj;
                    }
                }
            }
        }
    }
}

fn pairwise_tables(smoothed: &SmoothedPosterior, use_pairwise: bool) -> Result<Option<&Vec<Vec<Vec<f64>>>>> {
    match (use_pairwise, &smoothed.pairwise) {
        (false, _) => Ok(None),
        (true, Some(p)) => Ok(Some(p)),
        (true, None) => Err(Error::Config(
            "pairwise learning requested but pairwise marginals were not computed".into(),
        )),
    }
}

/// Raw increments for one complete episode, before the learning rate.
pub fn episode_increments(
    alpha: &DirichletParams,
    smoothed: &SmoothedPosterior,
    history: &History,
    use_pairwise: bool,
) -> Result<DirichletParams> {
    check_episode(alpha, smoothed, history)?;
    let pairwise = pairwise_tables(smoothed, use_pairwise)?;
    let mut inc = alpha.zeros_like();
    for tau in 1..=history.t() {
        accumulate_step(&mut inc, smoothed, history, tau, pairwise);
    }
    Ok(inc)
}

/// The part of [`episode_increments`] contributed by step `tau` (1-based).
/// Summing these over `tau = 1..=T` gives the episode increments.
pub fn step_increments(
    alpha: &DirichletParams,
    smoothed: &SmoothedPosterior,
    history: &History,
    tau: usize,
    use_pairwise: bool,
) -> Result<DirichletParams> {
    check_episode(alpha, smoothed, history)?;
    if tau == 0 || tau > history.t() {
        return Err(Error::IndexOutOfRange {
            what: "step",
            index: tau,
            size: history.t() + 1,
        });
    }
    let pairwise = pairwise_tables(smoothed, use_pairwise)?;
    let mut inc = alpha.zeros_like();
    accumulate_step(&mut inc, smoothed, history, tau, pairwise);
    Ok(inc)
}

/// Adds one episode's evidence to `alpha`. The smoothed posterior must have
/// been computed with the model in use before this update and conditioned on
/// every observation of the episode.
pub fn learn_episode(
    alpha: &DirichletParams,
    smoothed: &SmoothedPosterior,
    history: &History,
    options: LearnOptions,
) -> Result<DirichletParams> {
    if !(options.learning_rate > 0.0 && options.learning_rate.is_finite()) {
        return Err(Error::NonPositive {
            what: "learning rate",
            index: 0,
            value: options.learning_rate,
        });
    }
    let inc = episode_increments(alpha, smoothed, history, options.use_pairwise)?;
    Ok(alpha.add_scaled(&inc, options.learning_rate))
}

/// `theta_i = alpha_i / sum_j alpha_j`.
pub fn dirichlet_mean(alpha: &[f64]) -> Result<Vec<f64>> {
    if alpha.is_empty() {
        return Err(Error::EmptyInput);
    }
    if let Some((index, &value)) = alpha.iter().enumerate().find(|(_, x)| !(**x > 0.0 && x.is_finite())) {
        return Err(Error::NonPositive {
            what: "dirichlet hyperparameter",
            index,
            value,
        });
    }
    let total: f64 = alpha.iter().sum();
    Ok(alpha.iter().map(|a| a / total).collect())
}

/// Point-estimate model: every column of `A`, `B` and `D` replaced by the
/// Dirichlet mean of the matching `alpha` column. Preferences, spaces,
/// horizon and labels come from `template`.
pub fn model_from_alpha(alpha: &DirichletParams, template: &GenerativeModel) -> Result<GenerativeModel> {
    alpha.check_shape(template)?;
    let mean2 = |x: &[Vec<f64>]| x.iter().map(|c| dirichlet_mean(c)).collect::<Result<Vec<_>>>();
    let a = alpha.a.iter().map(|m| mean2(m)).collect::<Result<Vec<_>>>()?;
    let b = alpha
        .b
        .iter()
        .map(|bf| bf.iter().map(|ba| mean2(ba)).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    let d = mean2(&alpha.d)?;
    GenerativeModel {
        a: LikelihoodKernel(a),
        b: TransitionKernel(b),
        d: InitialPrior(d),
        ..template.clone()
    }
    .validated()
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AlphaFile {
    state_factors: Vec<usize>,
    obs_modalities: Vec<usize>,
    num_actions: usize,
    #[serde(rename = "alpha_A")]
    a: Vec<Vec<Vec<f64>>>,
    #[serde(rename = "alpha_B")]
    b: Vec<Vec<Vec<Vec<f64>>>>,
    #[serde(rename = "alpha_D")]
    d: Vec<Vec<f64>>,
}

pub fn alpha_to_json(alpha: &DirichletParams) -> Result<String> {
    let file = AlphaFile {
        state_factors: alpha.factor_sizes(),
        obs_modalities: alpha.modality_sizes(),
        num_actions: alpha.num_actions(),
        a: alpha.a.clone(),
        b: alpha.b.clone(),
        d: alpha.d.clone(),
    };
    Ok(serde_json::to_string_pretty(&file)?)
}

/// Parses a checkpoint and checks its shapes against the declared spaces.
pub fn alpha_from_json(text: &str) -> Result<DirichletParams> {
    let file: AlphaFile = serde_json::from_str(text).map_err(parse_error)?;
    let alpha = DirichletParams {
        a: file.a,
        b: file.b,
        d: file.d,
    };
    let joint: usize = file.state_factors.iter().product();
    let template = GenerativeModel {
        states: StateSpace::new(file.state_factors.clone()),
        observations: ObservationSpace::new(file.obs_modalities.clone()),
        actions: crate::model::ActionSpace {
            size: file.num_actions,
            labels: None,
        },
        a: LikelihoodKernel(file.obs_modalities.iter().map(|&n| vec![vec![0.0; n]; joint]).collect()),
        b: TransitionKernel(
            file.state_factors
                .iter()
                .map(|&n| vec![vec![vec![0.0; n]; n]; file.num_actions])
                .collect(),
        ),
        c: crate::model::Preferences::uniform(&file.obs_modalities),
        d: InitialPrior(file.state_factors.iter().map(|&n| vec![0.0; n]).collect()),
        horizon: 1,
        labels: Default::default(),
    };
    alpha.check_shape(&template)?;
    alpha.validate()?;
    Ok(alpha)
}

pub fn save_alpha(alpha: &DirichletParams, path: impl AsRef<Path>) -> Result<()> {
    let mut text = alpha_to_json(alpha)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

pub fn load_alpha(path: impl AsRef<Path>) -> Result<DirichletParams> {
    alpha_from_json(&fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::tmaze::*;
    use crate::inference::smooth;

    fn episode() -> (TMaze, History) {
        let tm = build_tmaze_model(TMazeOptions::default());
        let mut h = History::new(observation_index(CENTER, NO_REWARD, CUE_LEFT));
        h.push(CUE_LOCATION, observation_index(CUE_LOCATION, NO_REWARD, CUE_RIGHT));
        h.push(RIGHT_ARM, observation_index(RIGHT_ARM, REWARD, CUE_LEFT));
        (tm, h)
    }

    #[test]
    fn dirichlet_means() {
        assert_eq!(dirichlet_mean(&[1.0, 1.0]).unwrap(), vec![0.5, 0.5]);
        assert_eq!(dirichlet_mean(&[3.0, 1.0]).unwrap(), vec![0.75, 0.25]);
        assert!(matches!(dirichlet_mean(&[1.0, 0.0]), Err(Error::NonPositive { index: 1, .. })));
        assert!(dirichlet_mean(&[]).is_err());
    }

    #[test]
    fn half_half_initial_belief() {
        let (tm, h) = episode();
        let sm = smooth(&tm.model, &h, &[]).unwrap();
        let ones = DirichletParams::uniform_like(&tm.model);
        let inc = episode_increments(&ones, &sm, &h, false).unwrap();
        // the cue at t = 2 pins the side, so the side marginal is one-hot
        assert!((inc.d[1][RewardSide::Right.index()] - 1.0).abs() < 1e-12);

        let mut h1 = History::new(observation_index(CENTER, NO_REWARD, CUE_LEFT));
        h1.push(CENTER, observation_index(CENTER, NO_REWARD, CUE_RIGHT));
        h1.push(CENTER, observation_index(CENTER, NO_REWARD, CUE_LEFT));
        let sm = smooth(&tm.model, &h1, &[]).unwrap();
        let post = learn_episode(&ones, &sm, &h1, LearnOptions::default()).unwrap();
        assert!((post.d[1][0] - 1.5).abs() < 1e-12 && (post.d[1][1] - 1.5).abs() < 1e-12);
        assert_eq!(dirichlet_mean(&post.d[1]).unwrap(), vec![0.5, 0.5]);
    }

    #[test]
    fn conservation() {
        let (tm, h) = episode();
        let sm = smooth(&tm.model, &h, &[]).unwrap();
        for pairwise in [false, true] {
            let inc = episode_increments(&tm.alpha, &sm, &h, pairwise).unwrap();
            for df in &inc.d {
                assert!((df.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            }
            for am in &inc.a {
                let total: f64 = am.iter().flatten().sum();
                assert!((total - 3.0).abs() < 1e-12);
            }
            for bf in &inc.b {
                let total: f64 = bf.iter().flatten().flatten().sum();
                assert!((total - 2.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn inputs_are_unmodified_and_learning_rate_scales() {
        let (tm, h) = episode();
        let sm = smooth(&tm.model, &h, &[]).unwrap();
        let before = tm.alpha.clone();
        let one = learn_episode(&tm.alpha, &sm, &h, LearnOptions::default()).unwrap();
        let half = learn_episode(
            &tm.alpha,
            &sm,
            &h,
            LearnOptions {
                learning_rate: 0.5,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(tm.alpha, before);
        let d1 = one.difference(&before);
        let d2 = half.difference(&before);
        assert!(d1.add_scaled(&d2, -2.0).entries().all(|x| x.abs() < 1e-12));
    }

    #[test]
    fn commutes_across_episodes() {
        let (tm, h) = episode();
        let sm1 = smooth(&tm.model, &h, &[]).unwrap();
        let mut h2 = History::new(observation_index(CENTER, NO_REWARD, CUE_RIGHT));
        h2.push(LEFT_ARM, observation_index(LEFT_ARM, LOSS, CUE_RIGHT));
        h2.push(LEFT_ARM, observation_index(LEFT_ARM, LOSS, CUE_LEFT));
        let sm2 = smooth(&tm.model, &h2, &[]).unwrap();
        let o = LearnOptions::default();
        let ab = learn_episode(&learn_episode(&tm.alpha, &sm1, &h, o).unwrap(), &sm2, &h2, o).unwrap();
        let ba = learn_episode(&learn_episode(&tm.alpha, &sm2, &h2, o).unwrap(), &sm1, &h, o).unwrap();
        assert!(ab.max_abs_diff(&ba) < 1e-12);
    }

    #[test]
    fn model_from_alpha_recovers_template() {
        let tm = build_tmaze_model(TMazeOptions::default());
        let scaled = DirichletParams::from_model(&tm.model, 10.0, 0.0);
        // zero entries are not valid hyperparameters
        assert!(model_from_alpha(&scaled, &tm.model).is_err());
        let ones = DirichletParams::uniform_like(&tm.model);
        let flat = model_from_alpha(&ones, &tm.model).unwrap();
        assert!(flat.d.0[0].iter().all(|&x| (x - 0.25).abs() < 1e-15));
        let learned = model_from_alpha(&tm.alpha, &tm.model).unwrap();
        assert_eq!(learned.c, tm.model.c);
    }

    #[test]
    fn shape_mismatch_is_reported() {
        let (tm, h) = episode();
        let sm = smooth(&tm.model, &h, &[]).unwrap();
        let mut bad = tm.alpha.clone();
        bad.a[0].pop();
        assert!(matches!(episode_increments(&bad, &sm, &h, false), Err(Error::Shape { .. })));
        let mut partial = h.clone();
        partial.observations.pop();
        partial.actions.pop();
        assert!(episode_increments(&tm.alpha, &sm, &partial, false).is_err());
    }

    #[test]
    fn checkpoint_round_trip() {
        let tm = build_tmaze_model(TMazeOptions::default());
        let text = alpha_to_json(&tm.alpha).unwrap();
        assert!(text.contains("\"alpha_A\""));
        assert_eq!(alpha_from_json(&text).unwrap(), tm.alpha);
        let broken = text.replacen("\"num_actions\": 4", "\"num_actions\": 3", 1);
        assert!(alpha_from_json(&broken).is_err());
    }
}
