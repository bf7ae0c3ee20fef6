//! The factorised categorical generative model.
//!
//! Hidden states are split into factors `s = (s^1, ..., s^F)` and
//! observations into modalities `o = (o^1, ..., o^M)`. Joint indices are
//! row-major with factor (modality) 0 varying slowest.
//!
//! * `A[m][s][o_m]` is `p(o^m | s)` over the *joint* state, because the
//!   likelihood of a modality may depend on several factors.
//! * `B[f][a][s_f][s_f']` is `p(s_f' | s_f, a)`; factors evolve independently.
//! * `C[m][o_m]` are preferences over each modality's outcomes.
//! * `D[f][s_f]` is the initial prior of each factor.

use std::fmt;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::{ln_floor, log_sum_exp};

/// Tolerance on the sum of every categorical column.
pub const NORMALIZATION_TOL: f64 = 1e-12;

/// Mixed-radix index arithmetic shared by state and observation spaces.
fn joint_size(sizes: &[usize]) -> usize {
    sizes.iter().product()
}

fn flatten(sizes: &[usize], idx: &[usize]) -> Result<usize> {
    if idx.len() != sizes.len() {
        return Err(Error::Shape {
            what: "multi-index".into(),
            expected: sizes.len(),
            found: idx.len(),
        });
    }
    let mut j = 0;
    for (&n, &i) in sizes.iter().zip(idx) {
        if i >= n {
            return Err(Error::IndexOutOfRange {
                what: "component",
                index: i,
                size: n,
            });
        }
        j = j * n + i;
    }
    Ok(j)
}

fn unflatten(sizes: &[usize], mut j: usize) -> Vec<usize> {
    let mut out = vec![0; sizes.len()];
    for (slot, &n) in out.iter_mut().zip(sizes).rev() {
        *slot = j % n;
        j /= n;
    }
    out
}

fn strides(sizes: &[usize]) -> Vec<usize> {
    let mut s = vec![1; sizes.len()];
    for f in (0..sizes.len().saturating_sub(1)).rev() {
        s[f] = s[f + 1] * sizes[f + 1];
    }
    s
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateSpace {
    pub factor_sizes: Vec<usize>,
}

impl StateSpace {
    pub fn new(factor_sizes: Vec<usize>) -> Self {
        Self { factor_sizes }
    }

    pub fn num_factors(&self) -> usize {
        self.factor_sizes.len()
    }

    pub fn joint_size(&self) -> usize {
        joint_size(&self.factor_sizes)
    }

    pub fn flatten(&self, idx: &[usize]) -> Result<usize> {
        flatten(&self.factor_sizes, idx)
    }

    pub fn unflatten(&self, j: usize) -> Vec<usize> {
        unflatten(&self.factor_sizes, j)
    }

    pub fn strides(&self) -> Vec<usize> {
        strides(&self.factor_sizes)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObservationSpace {
    pub modality_sizes: Vec<usize>,
}

impl ObservationSpace {
    pub fn new(modality_sizes: Vec<usize>) -> Self {
        Self { modality_sizes }
    }

    pub fn num_modalities(&self) -> usize {
        self.modality_sizes.len()
    }

    pub fn joint_size(&self) -> usize {
        joint_size(&self.modality_sizes)
    }

    pub fn flatten(&self, idx: &[usize]) -> Result<usize> {
        flatten(&self.modality_sizes, idx)
    }

    pub fn unflatten(&self, j: usize) -> Vec<usize> {
        unflatten(&self.modality_sizes, j)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionSpace {
    pub size: usize,
    pub labels: Option<Vec<String>>,
}

impl ActionSpace {
    pub fn label(&self, a: usize) -> String {
        self.labels
            .as_ref()
            .and_then(|l| l.get(a).cloned())
            .unwrap_or_else(|| a.to_string())
    }
}

/// `A[m][joint_state][outcome]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LikelihoodKernel(pub Vec<Vec<Vec<f64>>>);

/// `B[factor][action][prev][next]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TransitionKernel(pub Vec<Vec<Vec<Vec<f64>>>>);

/// `D[factor][state]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct InitialPrior(pub Vec<Vec<f64>>);

/// How preference values are to be read.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PreferenceScale {
    /// Non-negative (possibly unnormalised) weights; `ln p_C = ln c`.
    #[default]
    Weights,
    /// Log-preferences; `ln p_C = c`.
    Log,
}

/// Preference distribution `p_C` over each observation modality.
///
/// Modalities are treated as independent, so the log-preference of a joint
/// observation is the sum over modalities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Preferences {
    pub scale: PreferenceScale,
    /// Normalise each modality before taking logs.
    pub normalize: bool,
    /// `C[m][o_m]`, used at every time step unless `schedule` is set.
    pub values: Vec<Vec<f64>>,
    /// Optional `C[tau - 1][m][o_m]` for absolute time steps `1..=T`.
    pub schedule: Option<Vec<Vec<Vec<f64>>>>,
}

impl Preferences {
    pub fn new(scale: PreferenceScale, normalize: bool, values: Vec<Vec<f64>>) -> Self {
        Self {
            scale,
            normalize,
            values,
            schedule: None,
        }
    }

    /// Uniform preferences over the given modalities.
    pub fn uniform(modality_sizes: &[usize]) -> Self {
        Self::new(
            PreferenceScale::Weights,
            true,
            modality_sizes.iter().map(|&n| vec![1.0; n]).collect(),
        )
    }

    /// Raw values in force at absolute time `tau` (1-based).
    pub fn values_at(&self, tau: usize) -> &[Vec<f64>] {
        match &self.schedule {
            Some(s) if tau >= 1 && tau <= s.len() => &s[tau - 1],
            _ => &self.values,
        }
    }

    fn log_values(&self, row: &[f64], normalized: bool) -> Vec<f64> {
        match (self.scale, normalized) {
            (PreferenceScale::Weights, false) => row.iter().map(|&w| ln_floor(w)).collect(),
            (PreferenceScale::Weights, true) => {
                let z: f64 = row.iter().sum();
                row.iter().map(|&w| ln_floor(w / z)).collect()
            }
            (PreferenceScale::Log, false) => row.to_vec(),
            (PreferenceScale::Log, true) => {
                let lse = log_sum_exp(row);
                row.iter().map(|&c| c - lse).collect()
            }
        }
    }

    /// `ln p_C(o^m)` per modality at time `tau`, honouring the `normalize` flag.
    pub fn log_preferences(&self, tau: usize) -> Vec<Vec<f64>> {
        self.values_at(tau)
            .iter()
            .map(|row| self.log_values(row, self.normalize))
            .collect()
    }

    /// `ln p_C(o^m)` per modality at time `tau`, always normalised.
    pub fn normalized_log_preferences(&self, tau: usize) -> Vec<Vec<f64>> {
        self.values_at(tau)
            .iter()
            .map(|row| self.log_values(row, true))
            .collect()
    }
}

/// Human-readable names for states and observations, used in logs.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Labels {
    pub state_factors: Option<Vec<Vec<String>>>,
    pub modalities: Option<Vec<Vec<String>>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenerativeModel {
    pub states: StateSpace,
    pub observations: ObservationSpace,
    pub actions: ActionSpace,
    pub a: LikelihoodKernel,
    pub b: TransitionKernel,
    pub c: Preferences,
    pub d: InitialPrior,
    pub horizon: usize,
    pub labels: Labels,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    Shape,
    Range,
    Normalization,
    Space,
}

/// One failed model invariant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    /// Kernel or field, e.g. `"B[1]"` or `"horizon"`.
    pub kernel: String,
    /// Position inside the kernel.
    pub index: Vec<usize>,
    pub kind: ViolationKind,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{:?}: {}", self.kernel, self.index, self.message)
    }
}

struct Validator {
    out: Vec<Violation>,
}

impl Validator {
    fn push(&mut self, kernel: String, index: Vec<usize>, kind: ViolationKind, message: String) {
        self.out.push(Violation {
            kernel,
            index,
            kind,
            message,
        });
    }

    fn len(&mut self, kernel: &str, index: &[usize], expected: usize, found: usize) -> bool {
        if expected != found {
            self.push(
                kernel.to_string(),
                index.to_vec(),
                ViolationKind::Shape,
                format!("expected length {expected}, found {found}"),
            );
            false
        } else {
            true
        }
    }

    /// Checks a categorical column: entries in [0, 1] and sum 1.
    fn column(&mut self, kernel: &str, index: &[usize], col: &[f64]) {
        for (i, &p) in col.iter().enumerate() {
            if !p.is_finite() || !(0.0..=1.0).contains(&p) {
                let mut idx = index.to_vec();
                idx.push(i);
                self.push(
                    kernel.to_string(),
                    idx,
                    ViolationKind::Range,
                    format!("entry {p} outside [0, 1]"),
                );
            }
        }
        let s: f64 = col.iter().sum();
        if !((s - 1.0).abs() <= NORMALIZATION_TOL) {
            self.push(
                kernel.to_string(),
                index.to_vec(),
                ViolationKind::Normalization,
                format!("column sums to {s}"),
            );
        }
    }
}

/// Checks every structural and numeric invariant of the model. Returns an
/// empty list when the model is valid.
pub fn validate_model(model: &GenerativeModel) -> Vec<Violation> {
    let mut v = Validator { out: Vec::new() };
    let fs = &model.states.factor_sizes;
    let ms = &model.observations.modality_sizes;

    if fs.is_empty() {
        v.push("state_factors".into(), vec![], ViolationKind::Space, "no state factors".into());
    }
    for (f, &n) in fs.iter().enumerate() {
        if n == 0 {
            v.push("state_factors".into(), vec![f], ViolationKind::Space, "factor size 0".into());
        }
    }
    if ms.is_empty() {
        v.push("obs_modalities".into(), vec![], ViolationKind::Space, "no modalities".into());
    }
    for (m, &n) in ms.iter().enumerate() {
        if n == 0 {
            v.push("obs_modalities".into(), vec![m], ViolationKind::Space, "modality size 0".into());
        }
    }
    if model.actions.size == 0 {
        v.push("num_actions".into(), vec![], ViolationKind::Space, "no actions".into());
    }
    if let Some(labels) = &model.actions.labels {
        v.len("action_labels", &[], model.actions.size, labels.len());
    }
    if model.horizon < 2 {
        v.push(
            "horizon".into(),
            vec![],
            ViolationKind::Space,
            format!("horizon {} < 2", model.horizon),
        );
    }
    if !v.out.is_empty() {
        return v.out;
    }

    let joint = model.states.joint_size();

    // A
    if v.len("A", &[], ms.len(), model.a.0.len()) {
        for (m, am) in model.a.0.iter().enumerate() {
            let name = format!("A[{m}]");
            if !v.len(&name, &[], joint, am.len()) {
                continue;
            }
            for (s, col) in am.iter().enumerate() {
                if v.len(&name, &[s], ms[m], col.len()) {
                    v.column(&name, &[s], col);
                }
            }
        }
    }

    // B
    if v.len("B", &[], fs.len(), model.b.0.len()) {
        for (f, bf) in model.b.0.iter().enumerate() {
            let name = format!("B[{f}]");
            if !v.len(&name, &[], model.actions.size, bf.len()) {
                continue;
            }
            for (a, ba) in bf.iter().enumerate() {
                if !v.len(&name, &[a], fs[f], ba.len()) {
                    continue;
                }
                for (prev, col) in ba.iter().enumerate() {
                    if v.len(&name, &[a, prev], fs[f], col.len()) {
                        v.column(&name, &[a, prev], col);
                    }
                }
            }
        }
    }

    // C
    let check_c = |v: &mut Validator, name: &str, table: &[Vec<f64>]| {
        if !v.len(name, &[], ms.len(), table.len()) {
            return;
        }
        for (m, row) in table.iter().enumerate() {
            if !v.len(name, &[m], ms[m], row.len()) {
                continue;
            }
            match model.c.scale {
                PreferenceScale::Weights => {
                    for (o, &w) in row.iter().enumerate() {
                        if !w.is_finite() || w < 0.0 {
                            v.push(
                                name.into(),
                                vec![m, o],
                                ViolationKind::Range,
                                format!("preference weight {w} is negative or not finite"),
                            );
                        }
                    }
                    if !row.iter().any(|&w| w > 0.0) {
                        v.push(
                            name.into(),
                            vec![m],
                            ViolationKind::Range,
                            "no positive preference weight".into(),
                        );
                    }
                }
                PreferenceScale::Log => {
                    for (o, &c) in row.iter().enumerate() {
                        if !c.is_finite() {
                            v.push(
                                name.into(),
                                vec![m, o],
                                ViolationKind::Range,
                                format!("log-preference {c} is not finite"),
                            );
                        }
                    }
                }
            }
        }
    };
    check_c(&mut v, "C", &model.c.values);
    if let Some(schedule) = &model.c.schedule {
        if v.len("C_schedule", &[], model.horizon, schedule.len()) {
            for (tau, table) in schedule.iter().enumerate() {
                check_c(&mut v, &format!("C_schedule[{tau}]"), table);
            }
        }
    }

    // D
    if v.len("D", &[], fs.len(), model.d.0.len()) {
        for (f, col) in model.d.0.iter().enumerate() {
            let name = format!("D[{f}]");
            if v.len(&name, &[], fs[f], col.len()) {
                v.column(&name, &[], col);
            }
        }
    }

    // Labels
    if let Some(sl) = &model.labels.state_factors {
        if v.len("state_labels", &[], fs.len(), sl.len()) {
            for (f, l) in sl.iter().enumerate() {
                v.len("state_labels", &[f], fs[f], l.len());
            }
        }
    }
    if let Some(ol) = &model.labels.modalities {
        if v.len("obs_labels", &[], ms.len(), ol.len()) {
            for (m, l) in ol.iter().enumerate() {
                v.len("obs_labels", &[m], ms[m], l.len());
            }
        }
    }

    v.out
}

impl GenerativeModel {
    /// Builds a model, rejecting it when [`validate_model`] reports anything.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        factor_sizes: Vec<usize>,
        modality_sizes: Vec<usize>,
        num_actions: usize,
        a: Vec<Vec<Vec<f64>>>,
        b: Vec<Vec<Vec<Vec<f64>>>>,
        c: Preferences,
        d: Vec<Vec<f64>>,
        horizon: usize,
    ) -> Result<Self> {
        let model = Self {
            states: StateSpace::new(factor_sizes),
            observations: ObservationSpace::new(modality_sizes),
            actions: ActionSpace {
                size: num_actions,
                labels: None,
            },
            a: LikelihoodKernel(a),
            b: TransitionKernel(b),
            c,
            d: InitialPrior(d),
            horizon,
            labels: Labels::default(),
        };
        model.validated()
    }

    /// Returns `self` if valid, otherwise all violations.
    pub fn validated(self) -> Result<Self> {
        let violations = validate_model(&self);
        if violations.is_empty() {
            Ok(self)
        } else {
            Err(Error::InvalidModel(violations))
        }
    }

    pub fn num_states(&self) -> usize {
        self.states.joint_size()
    }

    pub fn num_observations(&self) -> usize {
        self.observations.joint_size()
    }

    pub fn num_actions(&self) -> usize {
        self.actions.size
    }

    pub fn check_state(&self, s: usize) -> Result<()> {
        check_index("state", s, self.num_states())
    }

    pub fn check_observation(&self, o: usize) -> Result<()> {
        check_index("observation", o, self.num_observations())
    }

    pub fn check_action(&self, a: usize) -> Result<()> {
        check_index("action", a, self.num_actions())
    }

    /// `p(o | s) = prod_m A^m[o^m | s]` for joint indices.
    pub fn joint_likelihood(&self, o: usize, s: usize) -> Result<f64> {
        self.check_observation(o)?;
        self.check_state(s)?;
        Ok(self.likelihood_unchecked(&self.observations.unflatten(o), s))
    }

    fn likelihood_unchecked(&self, o_parts: &[usize], s: usize) -> f64 {
        o_parts
            .iter()
            .zip(&self.a.0)
            .map(|(&om, am)| am[s][om])
            .product()
    }

    /// `p(o | s)` as a function of the joint state.
    pub fn likelihood_vector(&self, o: usize) -> Result<Vec<f64>> {
        self.check_observation(o)?;
        let parts = self.observations.unflatten(o);
        Ok((0..self.num_states())
            .map(|s| self.likelihood_unchecked(&parts, s))
            .collect())
    }

    /// `p(o | s)` over joint observations for one joint state.
    pub fn observation_distribution(&self, s: usize) -> Vec<f64> {
        let mut out = vec![1.0];
        for am in &self.a.0 {
            let col = &am[s];
            let mut next = Vec::with_capacity(out.len() * col.len());
            for &p in &out {
                next.extend(col.iter().map(|&q| p * q));
            }
            out = next;
        }
        out
    }

    /// Full `[s][o]` likelihood table over joint indices.
    pub fn likelihood_matrix(&self) -> Vec<Vec<f64>> {
        (0..self.num_states())
            .map(|s| self.observation_distribution(s))
            .collect()
    }

    /// `p(s_1) = prod_f D^f[s^f]` over the joint state.
    pub fn initial_belief(&self) -> Vec<f64> {
        let mut out = vec![1.0];
        for df in &self.d.0 {
            let mut next = Vec::with_capacity(out.len() * df.len());
            for &p in &out {
                next.extend(df.iter().map(|&q| p * q));
            }
            out = next;
        }
        out
    }

    /// `p(s' | s, a) = prod_f B^f[s'^f | s^f, a]` for joint indices.
    pub fn transition_probability(&self, next: usize, prev: usize, action: usize) -> f64 {
        let pn = self.states.unflatten(next);
        let pp = self.states.unflatten(prev);
        self.b
            .0
            .iter()
            .enumerate()
            .map(|(f, bf)| bf[action][pp[f]][pn[f]])
            .product()
    }

    /// Pushes a joint distribution one step through `B` under `action`:
    /// `out(s') = sum_s p(s' | s, a) v(s)`. Applied factor by factor.
    pub fn propagate(&self, v: &[f64], action: usize) -> Vec<f64> {
        self.apply_factorwise(v, action, false)
    }

    /// Adjoint of [`propagate`](Self::propagate):
    /// `out(s) = sum_{s'} p(s' | s, a) v(s')`.
    pub fn pullback(&self, v: &[f64], action: usize) -> Vec<f64> {
        self.apply_factorwise(v, action, true)
    }

    fn apply_factorwise(&self, v: &[f64], action: usize, transpose: bool) -> Vec<f64> {
        let sizes = &self.states.factor_sizes;
        let strides = self.states.strides();
        let mut cur = v.to_vec();
        for (f, bf) in self.b.0.iter().enumerate() {
            let n = sizes[f];
            let stride = strides[f];
            let bfa = &bf[action];
            let mut next = vec![0.0; cur.len()];
            for (j, &x) in cur.iter().enumerate() {
                if x == 0.0 {
                    continue;
                }
                let sf = (j / stride) % n;
                let base = j - sf * stride;
                for k in 0..n {
                    // forward: mass at s_f moves to k; adjoint: value at k is pulled back to s_f
                    if transpose {
                        next[base + k * stride] += bfa[k][sf] * x;
                    } else {
                        next[base + k * stride] += bfa[sf][k] * x;
                    }
                }
            }
            cur = next;
        }
        cur
    }

    /// Sums a joint distribution down to the marginal of each factor.
    pub fn factor_marginals(&self, joint: &[f64]) -> Vec<Vec<f64>> {
        let sizes = &self.states.factor_sizes;
        let strides = self.states.strides();
        let mut out: Vec<Vec<f64>> = sizes.iter().map(|&n| vec![0.0; n]).collect();
        for (j, &p) in joint.iter().enumerate() {
            for f in 0..sizes.len() {
                out[f][(j / strides[f]) % sizes[f]] += p;
            }
        }
        out
    }

    /// Outer product of per-factor distributions over the joint state.
    pub fn joint_from_factors(&self, factors: &[Vec<f64>]) -> Vec<f64> {
        let mut out = vec![1.0];
        for df in factors {
            let mut next = Vec::with_capacity(out.len() * df.len());
            for &p in &out {
                next.extend(df.iter().map(|&q| p * q));
            }
            out = next;
        }
        out
    }

    /// `ln p_C(o)` over joint observations at absolute time `tau`.
    ///
    /// Unless `force_normalized` is set the model's own `normalize` flag decides.
    pub fn log_preference_joint(&self, tau: usize, force_normalized: bool) -> Vec<f64> {
        let per_mod = if force_normalized {
            self.c.normalized_log_preferences(tau)
        } else {
            self.c.log_preferences(tau)
        };
        let mut out = vec![0.0];
        for lm in &per_mod {
            let mut next = Vec::with_capacity(out.len() * lm.len());
            for &p in &out {
                next.extend(lm.iter().map(|&q| p + q));
            }
            out = next;
        }
        out
    }

    /// Label for one component of a joint observation, falling back to the index.
    pub fn observation_labels(&self, o: usize) -> Vec<String> {
        let parts = self.observations.unflatten(o);
        parts
            .iter()
            .enumerate()
            .map(|(m, &om)| {
                self.labels
                    .modalities
                    .as_ref()
                    .and_then(|l| l.get(m))
                    .and_then(|l| l.get(om))
                    .cloned()
                    .unwrap_or_else(|| om.to_string())
            })
            .collect()
    }

    pub fn state_labels(&self, s: usize) -> Vec<String> {
        let parts = self.states.unflatten(s);
        parts
            .iter()
            .enumerate()
            .map(|(f, &sf)| {
                self.labels
                    .state_factors
                    .as_ref()
                    .and_then(|l| l.get(f))
                    .and_then(|l| l.get(sf))
                    .cloned()
                    .unwrap_or_else(|| sf.to_string())
            })
            .collect()
    }
}

fn check_index(what: &'static str, index: usize, size: usize) -> Result<()> {
    if index < size {
        Ok(())
    } else {
        Err(Error::IndexOutOfRange { what, index, size })
    }
}

fn default_true() -> bool {
    true
}

fn is_weights(s: &PreferenceScale) -> bool {
    *s == PreferenceScale::Weights
}

/// On-disk JSON layout.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    state_factors: Vec<usize>,
    obs_modalities: Vec<usize>,
    num_actions: usize,
    horizon: usize,
    #[serde(rename = "A")]
    a: Vec<Vec<Vec<f64>>>,
    #[serde(rename = "B")]
    b: Vec<Vec<Vec<Vec<f64>>>>,
    #[serde(rename = "C")]
    c: Vec<Vec<f64>>,
    #[serde(rename = "D")]
    d: Vec<Vec<f64>>,
    #[serde(default = "default_true")]
    c_normalize: bool,
    #[serde(default, skip_serializing_if = "is_weights")]
    c_scale: PreferenceScale,
    #[serde(rename = "C_schedule", default, skip_serializing_if = "Option::is_none")]
    c_schedule: Option<Vec<Vec<Vec<f64>>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    action_labels: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    state_labels: Option<Vec<Vec<String>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    obs_labels: Option<Vec<Vec<String>>>,
}

impl From<&GenerativeModel> for ModelFile {
    fn from(m: &GenerativeModel) -> Self {
        Self {
            state_factors: m.states.factor_sizes.clone(),
            obs_modalities: m.observations.modality_sizes.clone(),
            num_actions: m.actions.size,
            horizon: m.horizon,
            a: m.a.0.clone(),
            b: m.b.0.clone(),
            c: m.c.values.clone(),
            d: m.d.0.clone(),
            c_normalize: m.c.normalize,
            c_scale: m.c.scale,
            c_schedule: m.c.schedule.clone(),
            action_labels: m.actions.labels.clone(),
            state_labels: m.labels.state_factors.clone(),
            obs_labels: m.labels.modalities.clone(),
        }
    }
}

impl From<ModelFile> for GenerativeModel {
    fn from(f: ModelFile) -> Self {
        Self {
            states: StateSpace::new(f.state_factors),
            observations: ObservationSpace::new(f.obs_modalities),
            actions: ActionSpace {
                size: f.num_actions,
                labels: f.action_labels,
            },
            a: LikelihoodKernel(f.a),
            b: TransitionKernel(f.b),
            c: Preferences {
                scale: f.c_scale,
                normalize: f.c_normalize,
                values: f.c,
                schedule: f.c_schedule,
            },
            d: InitialPrior(f.d),
            horizon: f.horizon,
            labels: Labels {
                state_factors: f.state_labels,
                modalities: f.obs_labels,
            },
        }
    }
}

pub(crate) fn parse_error(e: serde_json::Error) -> Error {
    Error::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    }
}

/// Parses and validates a model document.
pub fn model_from_json(text: &str) -> Result<GenerativeModel> {
    let file: ModelFile = serde_json::from_str(text).map_err(parse_error)?;
    GenerativeModel::from(file).validated()
}

pub fn model_to_json(model: &GenerativeModel) -> Result<String> {
    Ok(serde_json::to_string_pretty(&ModelFile::from(model))?)
}

pub fn load_model(path: impl AsRef<Path>) -> Result<GenerativeModel> {
    model_from_json(&fs::read_to_string(path)?)
}

pub fn save_model(model: &GenerativeModel, path: impl AsRef<Path>) -> Result<()> {
    let mut text = model_to_json(model)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}
