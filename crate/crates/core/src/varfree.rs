//! Variational free energy for categorical latent-variable models, CAVI with
//! Dirichlet parameter posteriors, and an exact posterior oracle.
//!
//! The latent model is `z ~ Cat(theta_D)`, `x | z ~ Cat(theta_A[z])` with a
//! single observation `x`. Tables are indexed `[latent][outcome]`, the same
//! orientation as the POMDP likelihood kernel.

use statrs::function::gamma::{digamma, ln_gamma};

use crate::error::{Error, Result};
use crate::inference::History;
use crate::learning::DirichletParams;
use crate::math::{ln_floor, log_sum_exp, softmax};
use crate::model::{GenerativeModel, InitialPrior, LikelihoodKernel, TransitionKernel};

/// Latent and outcome counts above this are refused by the exact oracle.
pub const EXACT_ORACLE_CAP: usize = 6;

/// Paths above this are refused by the POMDP enumeration sweep.
pub const PATH_ENUMERATION_CAP: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct CategoricalLatentModel {
    /// `p(z = j)`, length `m`.
    pub theta_d: Vec<f64>,
    /// `p(x = i | z = j)` as `[j][i]`.
    pub theta_a: Vec<Vec<f64>>,
    pub alpha_d: Vec<f64>,
    pub alpha_a: Vec<Vec<f64>>,
}

impl CategoricalLatentModel {
    /// Parameters set to the Dirichlet means of the hyperparameters.
    pub fn from_alpha(alpha_d: Vec<f64>, alpha_a: Vec<Vec<f64>>) -> Result<Self> {
        let theta_d = crate::learning::dirichlet_mean(&alpha_d)?;
        let theta_a = alpha_a
            .iter()
            .map(|c| crate::learning::dirichlet_mean(c))
            .collect::<Result<_>>()?;
        let m = Self {
            theta_d,
            theta_a,
            alpha_d,
            alpha_a,
        };
        m.check()?;
        Ok(m)
    }

    pub fn num_latent(&self) -> usize {
        self.theta_d.len()
    }

    pub fn num_outcomes(&self) -> usize {
        self.theta_a.first().map_or(0, Vec::len)
    }

    pub fn check(&self) -> Result<()> {
        let m = self.num_latent();
        let n = self.num_outcomes();
        if m == 0 || n == 0 {
            return Err(Error::EmptyInput);
        }
        for (what, len) in [("theta_A", self.theta_a.len()), ("alpha_D", self.alpha_d.len()), ("alpha_A", self.alpha_a.len())] {
            if len != m {
                return Err(Error::Shape {
                    what: what.into(),
                    expected: m,
                    found: len,
                });
            }
        }
        for (j, (t, a)) in self.theta_a.iter().zip(&self.alpha_a).enumerate() {
            if t.len() != n || a.len() != n {
                return Err(Error::Shape {
                    what: format!("column {j}"),
                    expected: n,
                    found: t.len().min(a.len()),
                });
            }
        }
        let alphas = self.alpha_d.iter().chain(self.alpha_a.iter().flatten());
        if let Some((index, &value)) = alphas.enumerate().find(|(_, x)| !(**x > 0.0 && x.is_finite())) {
            return Err(Error::NonPositive {
                what: "dirichlet hyperparameter",
                index,
                value,
            });
        }
        Ok(())
    }

    fn check_outcome(&self, x: usize) -> Result<()> {
        if x < self.num_outcomes() {
            Ok(())
        } else {
            Err(Error::IndexOutOfRange {
                what: "outcome",
                index: x,
                size: self.num_outcomes(),
            })
        }
    }

    /// `p(x, z = j)` for every `j`.
    pub fn joint(&self, x: usize) -> Vec<f64> {
        self.theta_d
            .iter()
            .zip(&self.theta_a)
            .map(|(d, a)| d * a[x])
            .collect()
    }

    /// `ln p(x, z = j)` for every `j`, floored.
    pub fn log_joint(&self, x: usize) -> Vec<f64> {
        self.joint(x).into_iter().map(ln_floor).collect()
    }

    pub fn evidence(&self, x: usize) -> f64 {
        self.joint(x).iter().sum()
    }

    pub fn posterior(&self, x: usize) -> Result<Vec<f64>> {
        let joint = self.joint(x);
        let total: f64 = joint.iter().sum();
        if total <= 0.0 {
            return Err(Error::AllZeroPosterior(format!("outcome {x} has zero evidence")));
        }
        Ok(joint.into_iter().map(|p| p / total).collect())
    }
}

/// `F = KL(q || p(z|x)) - ln p(x)`, in nats.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VfeValue {
    pub f: f64,
    pub kl: f64,
    pub neg_log_evidence: f64,
}

/// `F(q | x) = sum_z q(z) (ln q(z) - ln p(x, z))`.
pub fn vfe(q: &[f64], model: &CategoricalLatentModel, x: usize) -> Result<VfeValue> {
    model.check_outcome(x)?;
    if q.len() != model.num_latent() {
        return Err(Error::Shape {
            what: "q(z)".into(),
            expected: model.num_latent(),
            found: q.len(),
        });
    }
    let log_joint = model.log_joint(x);
    let neg_log_evidence = -log_sum_exp(&log_joint);
    let mut f = 0.0;
    let mut kl = 0.0;
    for (&qz, &lj) in q.iter().zip(&log_joint) {
        if qz > 0.0 {
            f += qz * (qz.ln() - lj);
            kl += qz * (qz.ln() - (lj + neg_log_evidence));
        }
    }
    Ok(VfeValue {
        f,
        kl: kl.max(0.0),
        neg_log_evidence,
    })
}

/// Minimiser of `sum_z q(z) (ln q(z) - f(z))`, i.e. `softmax(f)`.
pub fn exact_minimizer(f_values: &[f64]) -> Result<Vec<f64>> {
    softmax(f_values)
}

/// `E[ln theta_i]` under `Dir(alpha)`.
pub fn expected_log(alpha: &[f64]) -> Vec<f64> {
    let total = digamma(alpha.iter().sum());
    alpha.iter().map(|&a| digamma(a) - total).collect()
}

/// `KL(Dir(a) || Dir(b))`.
pub fn dirichlet_kl(a: &[f64], b: &[f64]) -> f64 {
    let a0: f64 = a.iter().sum();
    let b0: f64 = b.iter().sum();
    let da0 = digamma(a0);
    let mut kl = ln_gamma(a0) - ln_gamma(b0);
    for (&ai, &bi) in a.iter().zip(b) {
        kl += ln_gamma(bi) - ln_gamma(ai) + (ai - bi) * (digamma(ai) - da0);
    }
    kl
}

#[derive(Debug, Clone, PartialEq)]
pub struct CaviResult {
    pub q_z: Vec<f64>,
    pub alpha_d: Vec<f64>,
    pub alpha_a: Vec<Vec<f64>>,
    /// Free energy after every half-sweep, `2 * sweeps` entries.
    pub trace: Vec<f64>,
}

impl CaviResult {
    /// Posterior means of `theta_D` and each `theta_A` column.
    pub fn means(&self) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
        let d = crate::learning::dirichlet_mean(&self.alpha_d)?;
        let a = self
            .alpha_a
            .iter()
            .map(|c| crate::learning::dirichlet_mean(c))
            .collect::<Result<_>>()?;
        Ok((d, a))
    }
}

/// Free energy of the mean-field posterior `q(z) q(theta_D) prod_j q(theta_A_j)`.
fn cavi_free_energy(model: &CategoricalLatentModel, x: usize, q_z: &[f64], alpha_d: &[f64], alpha_a: &[Vec<f64>]) -> f64 {
    let eln_d = expected_log(alpha_d);
    let mut f = dirichlet_kl(alpha_d, &model.alpha_d);
    for (j, qz) in q_z.iter().enumerate() {
        let eln_a = expected_log(&alpha_a[j]);
        f += dirichlet_kl(&alpha_a[j], &model.alpha_a[j]);
        if *qz > 0.0 {
            f += qz * (qz.ln() - eln_d[j] - eln_a[x]);
        }
    }
    f
}

/// Coordinate ascent starting from `q(theta)` equal to the prior. Each sweep
/// updates `q(z)` then `q(theta)`.
pub fn cavi(model: &CategoricalLatentModel, x: usize, sweeps: usize) -> Result<CaviResult> {
    model.check()?;
    model.check_outcome(x)?;
    if sweeps == 0 {
        return Err(Error::Config("CAVI needs at least one sweep".into()));
    }
    let mut alpha_d = model.alpha_d.clone();
    let mut alpha_a = model.alpha_a.clone();
    let mut q_z = Vec::new();
    let mut trace = Vec::with_capacity(2 * sweeps);
    for _ in 0..sweeps {
        let eln_d = expected_log(&alpha_d);
        let scores: Vec<f64> = alpha_a
            .iter()
            .zip(&eln_d)
            .map(|(col, d)| d + expected_log(col)[x])
            .collect();
        q_z = softmax(&scores)?;
        trace.push(cavi_free_energy(model, x, &q_z, &alpha_d, &alpha_a));

        alpha_d = model.alpha_d.iter().zip(&q_z).map(|(a, q)| a + q).collect();
        alpha_a = model
            .alpha_a
            .iter()
            .zip(&q_z)
            .map(|(col, q)| {
                let mut c = col.clone();
                c[x] += q;
                c
            })
            .collect();
        trace.push(cavi_free_energy(model, x, &q_z, &alpha_d, &alpha_a));
    }
    Ok(CaviResult {
        q_z,
        alpha_d,
        alpha_a,
        trace,
    })
}

/// Exact posterior means of `theta_D` and `theta_A` given one outcome.
///
/// The posterior is a mixture over `j` of Dirichlets with a unit increment
/// at `alpha_D[j]` and `alpha_A[j][x]`, weighted by the prior expectation of
/// `theta_D[j] theta_A[j][x]`.
pub fn exact_theta_posterior_moments(
    model: &CategoricalLatentModel,
    x: usize,
) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    model.check()?;
    model.check_outcome(x)?;
    let m = model.num_latent();
    let n = model.num_outcomes();
    if m > EXACT_ORACLE_CAP || n > EXACT_ORACLE_CAP {
        return Err(Error::ScaleCap(format!(
            "{m} latent values and {n} outcomes exceed the oracle limit of {EXACT_ORACLE_CAP}"
        )));
    }
    let sd: f64 = model.alpha_d.iter().sum();
    let mut w: Vec<f64> = (0..m)
        .map(|j| {
            let sa: f64 = model.alpha_a[j].iter().sum();
            (model.alpha_d[j] / sd) * (model.alpha_a[j][x] / sa)
        })
        .collect();
    let total: f64 = w.iter().sum();
    w.iter_mut().for_each(|v| *v /= total);

    let mut mean_d = vec![0.0; m];
    for (j, &wj) in w.iter().enumerate() {
        for (k, md) in mean_d.iter_mut().enumerate() {
            let bump = if k == j { 1.0 } else { 0.0 };
            *md += wj * (model.alpha_d[k] + bump) / (sd + 1.0);
        }
    }
    let mean_a = (0..m)
        .map(|k| {
            let col = &model.alpha_a[k];
            let sa: f64 = col.iter().sum();
            (0..n)
                .map(|i| {
                    let hit = if i == x { 1.0 } else { 0.0 };
                    // component k moves this column, the others leave it at the prior mean
                    w[k] * (col[i] + hit) / (sa + 1.0) + (1.0 - w[k]) * col[i] / sa
                })
                .collect()
        })
        .collect();
    Ok((mean_d, mean_a))
}

/// Kernels `exp(E[ln theta])` under `alpha`, used by a full CAVI state
/// update. Columns are sub-normalised, so the result is not a valid model.
pub fn expected_log_kernels(alpha: &DirichletParams, template: &GenerativeModel) -> Result<GenerativeModel> {
    alpha.check_shape(template)?;
    alpha.validate()?;
    let geo = |c: &Vec<f64>| expected_log(c).into_iter().map(f64::exp).collect::<Vec<_>>();
    Ok(GenerativeModel {
        a: LikelihoodKernel(alpha.a.iter().map(|m| m.iter().map(geo).collect()).collect()),
        b: TransitionKernel(
            alpha
                .b
                .iter()
                .map(|bf| bf.iter().map(|ba| ba.iter().map(geo).collect()).collect())
                .collect(),
        ),
        d: InitialPrior(alpha.d.iter().map(geo).collect()),
        ..template.clone()
    })
}

/// One CAVI sweep on the POMDP: the state posterior of the whole episode is
/// computed by enumerating every joint state path under `kernels`, then the
/// hyperparameters get the parameter update.
///
/// With `pairwise` unset the transition update uses the product of the
/// per-factor singleton marginals, otherwise the per-factor pairwise
/// marginals of the enumerated posterior.
pub fn pomdp_cavi_sweep(
    alpha: &DirichletParams,
    kernels: &GenerativeModel,
    history: &History,
    pairwise: bool,
) -> Result<DirichletParams> {
    alpha.check_shape(kernels)?;
    let horizon = kernels.horizon;
    if history.t() != horizon || history.actions.len() + 1 != horizon {
        return Err(Error::History(format!(
            "episode needs {horizon} observations, found {}",
            history.t()
        )));
    }
    let ns = kernels.num_states();
    let paths = (ns as u128).checked_pow(horizon as u32).unwrap_or(u128::MAX);
    if paths > PATH_ENUMERATION_CAP as u128 {
        return Err(Error::CombinatorialLimit {
            count: paths,
            cap: PATH_ENUMERATION_CAP,
        });
    }
    let paths = paths as usize;
    let p0 = kernels.initial_belief();

    let mut marg = vec![vec![0.0; ns]; horizon];
    let mut pair = vec![vec![vec![0.0; ns]; ns]; horizon.saturating_sub(1)];
    let mut path = vec![0usize; horizon];
    let mut total = 0.0;
    for mut idx in 0..paths {
        for slot in path.iter_mut().rev() {
            *slot = idx % ns;
            idx /= ns;
        }
        let mut w = p0[path[0]];
        for tau in 0..horizon {
            if w == 0.0 {
                break;
            }
            w *= kernels.joint_likelihood(history.observations[tau], path[tau])?;
            if tau > 0 {
                w *= kernels.transition_probability(path[tau], path[tau - 1], history.actions[tau - 1]);
            }
        }
        if w == 0.0 {
            continue;
        }
        total += w;
        for tau in 0..horizon {
            marg[tau][path[tau]] += w;
            if tau > 0 {
                pair[tau - 1][path[tau - 1]][path[tau]] += w;
            }
        }
    }
    if total <= 0.0 {
        return Err(Error::AllZeroPosterior("episode has zero probability under the kernels".into()));
    }
    marg.iter_mut().flatten().for_each(|p| *p /= total);
    pair.iter_mut().flatten().flatten().for_each(|p| *p /= total);

    let mut out = alpha.clone();
    for (f, df) in out.d.iter_mut().enumerate() {
        let fm = kernels.factor_marginals(&marg[0]);
        df.iter_mut().zip(&fm[f]).for_each(|(a, q)| *a += q);
    }
    for (tau, q) in marg.iter().enumerate() {
        let parts = kernels.observations.unflatten(history.observations[tau]);
        for (m, am) in out.a.iter_mut().enumerate() {
            for (s, &p) in q.iter().enumerate() {
                am[s][parts[m]] += p;
            }
        }
    }
    for tau in 1..horizon {
        let action = history.actions[tau - 1];
        let prev = kernels.factor_marginals(&marg[tau - 1]);
        let next = kernels.factor_marginals(&marg[tau]);
        for (f, bf) in out.b.iter_mut().enumerate() {
            let n = kernels.states.factor_sizes[f];
            let mut cell = vec![vec![0.0; n]; n];
            if pairwise {
                for (i, row) in pair[tau - 1].iter().enumerate() {
                    let k = kernels.states.unflatten(i)[f];
                    for (j, &p) in row.iter().enumerate() {
                        cell[k][kernels.states.unflatten(j)[f]] += p;
                    }
                }
            } else {
                for k in 0..n {
                    for j in 0..n {
                        cell[k][j] = prev[f][k] * next[f][j];
                    }
                }
            }
            for (k, row) in cell.iter().enumerate() {
                for (j, &p) in row.iter().enumerate() {
                    bf[action][k][j] += p;
                }
            }
        }
    }
    Ok(out)
}
