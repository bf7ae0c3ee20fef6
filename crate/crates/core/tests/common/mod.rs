//! Random model generation and brute-force oracles shared by the
//! integration tests. The oracles work directly on the raw kernel arrays
//! and enumerate every state path, so they share no code with the library's
//! filtering, smoothing or planning routines.

#![allow(dead_code, clippy::needless_range_loop)]

use actinf::model::{GenerativeModel, PreferenceScale, Preferences};
use actinf::inference::History;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Dirichlet, Distribution};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A random probability vector, with some entries knocked out when `sparse`.
pub fn random_simplex<R: Rng>(rng: &mut R, n: usize, sparse: bool) -> Vec<f64> {
    if n == 1 {
        return vec![1.0];
    }
    let mut v = Dirichlet::new(&vec![1.0; n]).unwrap().sample(rng);
    if sparse {
        for x in v.iter_mut() {
            if rng.gen::<f64>() < 0.25 {
                *x = 0.0;
            }
        }
        let total: f64 = v.iter().sum();
        if total == 0.0 {
            v[rng.gen_range(0..n)] = 1.0;
        } else {
            v.iter_mut().for_each(|x| *x /= total);
        }
    }
    v
}

pub struct Shape {
    pub max_joint: usize,
    pub max_horizon: usize,
    pub max_actions: usize,
    pub sparse: bool,
}

fn random_sizes<R: Rng>(rng: &mut R, max_joint: usize) -> Vec<usize> {
    loop {
        let n = rng.gen_range(1..=2);
        let sizes: Vec<usize> = (0..n).map(|_| rng.gen_range(1..=3)).collect();
        let joint: usize = sizes.iter().product();
        if joint >= 2 && joint <= max_joint {
            return sizes;
        }
    }
}

/// A random valid model. Preferences are weights on every modality.
pub fn random_model<R: Rng>(rng: &mut R, shape: &Shape, normalize_c: bool) -> GenerativeModel {
    let factors = random_sizes(rng, shape.max_joint);
    let joint: usize = factors.iter().product();
    let modalities: Vec<usize> = (0..rng.gen_range(1..=2)).map(|_| rng.gen_range(2..=3)).collect();
    let num_actions = rng.gen_range(1..=shape.max_actions);
    let horizon = rng.gen_range(2..=shape.max_horizon);
    let a = modalities
        .iter()
        .map(|&n| (0..joint).map(|_| random_simplex(rng, n, shape.sparse)).collect())
        .collect();
    let b = factors
        .iter()
        .map(|&n| {
            (0..num_actions)
                .map(|_| (0..n).map(|_| random_simplex(rng, n, shape.sparse)).collect())
                .collect()
        })
        .collect();
    let c = modalities
        .iter()
        .map(|&n| (0..n).map(|_| rng.gen_range(0.1..5.0)).collect())
        .collect();
    let d = factors.iter().map(|&n| random_simplex(rng, n, false)).collect();
    GenerativeModel::new(
        factors,
        modalities,
        num_actions,
        a,
        b,
        Preferences::new(PreferenceScale::Weights, normalize_c, c),
        d,
        horizon,
    )
    .expect("generated model is valid")
}

/// Row-major decomposition, first position slowest.
pub fn digits(mut index: usize, sizes: &[usize]) -> Vec<usize> {
    let mut out = vec![0; sizes.len()];
    for k in (0..sizes.len()).rev() {
        out[k] = index % sizes[k];
        index /= sizes[k];
    }
    out
}

pub fn joint_size(sizes: &[usize]) -> usize {
    sizes.iter().product()
}

/// `p(o | s)` from the raw likelihood arrays.
pub fn lik(model: &GenerativeModel, o: usize, s: usize) -> f64 {
    let parts = digits(o, &model.observations.modality_sizes);
    model.a.0.iter().zip(&parts).map(|(am, &om)| am[s][om]).product()
}

/// `p(s' | s, a)` from the raw transition arrays.
pub fn trans(model: &GenerativeModel, next: usize, prev: usize, a: usize) -> f64 {
    let sizes = &model.states.factor_sizes;
    let n = digits(next, sizes);
    let p = digits(prev, sizes);
    (0..sizes.len()).map(|f| model.b.0[f][a][p[f]][n[f]]).product()
}

pub fn prior(model: &GenerativeModel, s: usize) -> f64 {
    let parts = digits(s, &model.states.factor_sizes);
    model.d.0.iter().zip(&parts).map(|(d, &k)| d[k]).product()
}

/// Samples states and observations for a whole episode with random actions.
pub fn sample_episode<R: Rng>(rng: &mut R, model: &GenerativeModel) -> (History, Vec<usize>) {
    let ns = model.num_states();
    let no = model.num_observations();
    let draw = |rng: &mut R, w: &dyn Fn(usize) -> f64, n: usize| {
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        let mut last = 0;
        for i in 0..n {
            let p = w(i);
            if p > 0.0 {
                last = i;
                acc += p;
                if u < acc {
                    return i;
                }
            }
        }
        last
    };
    let mut s = draw(rng, &|i| prior(model, i), ns);
    let mut states = vec![s];
    let mut history = History::new(draw(rng, &|o| lik(model, o, s), no));
    for _ in 1..model.horizon {
        let a = rng.gen_range(0..model.num_actions());
        let prev = s;
        s = draw(rng, &|i| trans(model, i, prev, a), ns);
        states.push(s);
        let o = draw(rng, &|o| lik(model, o, s), no);
        history.push(a, o);
    }
    (history, states)
}

/// Visits every joint state path of length `len`.
pub fn for_each_path(num_states: usize, len: usize, mut f: impl FnMut(&[usize])) {
    let mut path = vec![0usize; len];
    let total = num_states.pow(len as u32);
    for idx in 0..total {
        let mut r = idx;
        for slot in path.iter_mut().rev() {
            *slot = r % num_states;
            r /= num_states;
        }
        f(&path);
    }
}

/// Unnormalised weight of a path given the first `observed` observations.
pub fn path_weight(model: &GenerativeModel, path: &[usize], obs: &[usize], actions: &[usize]) -> f64 {
    let mut w = prior(model, path[0]);
    for tau in 0..path.len() {
        if tau > 0 {
            w *= trans(model, path[tau], path[tau - 1], actions[tau - 1]);
        }
        if tau < obs.len() {
            w *= lik(model, obs[tau], path[tau]);
        }
    }
    w
}

/// `q(s_t | o_{1:t})` by enumerating paths of length `t`.
pub fn brute_filter(model: &GenerativeModel, history: &History) -> Vec<f64> {
    let ns = model.num_states();
    let t = history.t();
    let mut out = vec![0.0; ns];
    for_each_path(ns, t, |p| {
        out[p[t - 1]] += path_weight(model, p, &history.observations, &history.actions);
    });
    let z: f64 = out.iter().sum();
    out.iter_mut().for_each(|x| *x /= z);
    out
}

/// Smoothed singleton and pairwise marginals over the full horizon.
pub fn brute_smooth(
    model: &GenerativeModel,
    history: &History,
    future: &[usize],
) -> (Vec<Vec<f64>>, Vec<Vec<Vec<f64>>>) {
    let ns = model.num_states();
    let horizon = model.horizon;
    let actions: Vec<usize> = history.actions.iter().chain(future).copied().collect();
    let mut marg = vec![vec![0.0; ns]; horizon];
    let mut pair = vec![vec![vec![0.0; ns]; ns]; horizon - 1];
    let mut z = 0.0;
    for_each_path(ns, horizon, |p| {
        let w = path_weight(model, p, &history.observations, &actions);
        z += w;
        for tau in 0..horizon {
            marg[tau][p[tau]] += w;
            if tau > 0 {
                pair[tau - 1][p[tau - 1]][p[tau]] += w;
            }
        }
    });
    marg.iter_mut().flatten().for_each(|x| *x /= z);
    pair.iter_mut().flatten().flatten().for_each(|x| *x /= z);
    (marg, pair)
}

/// Per-step EFE terms by direct summation over the joint (state, outcome)
/// table: (mutual information, utility, ambiguity, risk).
pub fn brute_efe_terms(model: &GenerativeModel, qs: &[f64], tau: usize) -> (f64, f64, f64, f64) {
    let ns = model.num_states();
    let no = model.num_observations();
    let mods = &model.observations.modality_sizes;
    let scale_log = |v: f64| match model.c.scale {
        PreferenceScale::Weights => v.max(1e-16).ln(),
        PreferenceScale::Log => v,
    };
    let values = model.c.values_at(tau);
    // ln p_C per modality, raw and normalised
    let mut ln_raw = Vec::new();
    let mut ln_norm = Vec::new();
    for (m, vm) in values.iter().enumerate() {
        let raw: Vec<f64> = vm.iter().map(|&v| scale_log(v)).collect();
        let lse = raw.iter().fold(f64::NEG_INFINITY, |a: f64, &b| a.max(b));
        let z = lse + raw.iter().map(|x| (x - lse).exp()).sum::<f64>().ln();
        ln_norm.push(raw.iter().map(|x| x - z).collect::<Vec<_>>());
        ln_raw.push(if model.c.normalize { ln_norm[m].clone() } else { raw });
    }
    let qo: Vec<f64> = (0..no).map(|o| (0..ns).map(|s| qs[s] * lik(model, o, s)).sum()).collect();
    let mut mi = 0.0;
    let mut amb = 0.0;
    for s in 0..ns {
        for o in 0..no {
            let l = lik(model, o, s);
            let joint = qs[s] * l;
            if joint > 0.0 {
                mi += joint * (l / qo[o]).ln();
                amb -= joint * l.ln();
            }
        }
    }
    let mut util = 0.0;
    let mut risk = 0.0;
    for o in 0..no {
        if qo[o] > 0.0 {
            let parts = digits(o, mods);
            let lr: f64 = parts.iter().enumerate().map(|(m, &k)| ln_raw[m][k]).sum();
            let ln: f64 = parts.iter().enumerate().map(|(m, &k)| ln_norm[m][k]).sum();
            util += qo[o] * lr;
            risk += qo[o] * (qo[o].ln() - ln);
        }
    }
    (mi, util, amb, risk)
}

/// Dense one-step prediction.
pub fn brute_propagate(model: &GenerativeModel, q: &[f64], a: usize) -> Vec<f64> {
    let ns = model.num_states();
    (0..ns)
        .map(|next| (0..ns).map(|prev| trans(model, next, prev, a) * q[prev]).sum())
        .collect()
}

/// `(G_epistemic, G_ambiguity)` of an action sequence by direct summation.
pub fn brute_efe(model: &GenerativeModel, belief: &[f64], start: usize, actions: &[usize]) -> (f64, f64) {
    let mut q = belief.to_vec();
    let mut ge = 0.0;
    let mut ga = 0.0;
    for (k, &a) in actions.iter().enumerate() {
        q = brute_propagate(model, &q, a);
        let (mi, util, amb, risk) = brute_efe_terms(model, &q, start + k + 1);
        ge += -(mi + util);
        ga += amb + risk;
    }
    (ge, ga)
}

pub fn max_abs(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
