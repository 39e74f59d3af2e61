//! Stability selection: repeated half-subsampling, fixed-count fits and
//! empirical selection probabilities, plus the exclusive-variable classifier.

use std::collections::HashMap;
use std::fmt;

use rand::seq::index::sample;
use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimation::{fit, FitConfig, RegularizationSpec};
use crate::model::{FactorModel, MultiViewDataset};
use crate::rng::stream_rng;

/// Stream id reserved for subsample draws.
const SUBSAMPLE_STREAM: u64 = 0x5AB5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityConfig {
    pub d0: usize,
    pub r0: usize,
    /// Nonzero loadings kept per column.
    pub k: usize,
    pub n_runs: usize,
    pub seed: u64,
    /// Draw the same row indices in every view (views share subjects).
    pub paired_sampling: bool,
    /// At most one row per group label in each subsample.
    pub group_exclusive: bool,
    pub max_retries: usize,
    pub max_outer_iters: usize,
    pub rel_tol: f64,
}

impl StabilityConfig {
    pub fn new(d0: usize, r0: usize, k: usize) -> Self {
        StabilityConfig {
            d0,
            r0,
            k,
            n_runs: 1000,
            seed: 0,
            paired_sampling: false,
            group_exclusive: false,
            max_retries: 3,
            max_outer_iters: 500,
            rel_tol: 1e-6,
        }
    }

    pub fn fit_config(&self, n_views: usize) -> FitConfig {
        FitConfig {
            max_outer_iters: self.max_outer_iters,
            rel_tol: self.rel_tol,
            seed: self.seed,
            ..FitConfig::new(
                self.d0,
                self.r0,
                RegularizationSpec::fixed_count(self.k, self.d0, self.r0, n_views),
            )
        }
    }

    fn validate(&self, dataset: &MultiViewDataset) -> Result<()> {
        if self.n_runs == 0 {
            return Err(Error::InvalidInput("n_runs must be at least 1".into()));
        }
        let p = dataset.n_vars();
        if self.k == 0 || self.k > p {
            return Err(Error::CountOutOfRange { count: self.k, p });
        }
        if self.d0 + self.r0 == 0 {
            return Err(Error::InvalidRank("d0 + r0 must be at least 1".into()));
        }
        for m in 0..dataset.n_views() {
            let n = dataset.n_samples(m);
            if n < 2 {
                return Err(Error::InvalidInput(format!(
                    "view {m} needs at least 2 samples for half-subsampling"
                )));
            }
            if self.d0 + self.r0 > (n / 2).min(p) {
                return Err(Error::InvalidRank(format!(
                    "d0 + r0 = {} exceeds the half-sample rank limit {} in view {m}",
                    self.d0 + self.r0,
                    (n / 2).min(p)
                )));
            }
        }
        Ok(())
    }
}

/// Empirical selection probabilities for the shared component and each view.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionProfile {
    pub variable_names: Vec<String>,
    pub view_labels: Vec<String>,
    pub shared_prob: Vec<f64>,
    pub view_prob: Vec<Vec<f64>>,
    /// 0 when the profile was read back from a file without run metadata.
    pub n_runs: usize,
    /// Subsample draws that failed to fit and were redrawn.
    pub failed_attempts: usize,
    pub config: Option<StabilityConfig>,
}

impl SelectionProfile {
    pub fn n_vars(&self) -> usize {
        self.shared_prob.len()
    }

    pub fn n_views(&self) -> usize {
        self.view_prob.len()
    }
}

pub fn default_view_labels(n_views: usize) -> Vec<String> {
    (1..=n_views).map(|m| format!("view{m}")).collect()
}

fn half_sample(
    rng: &mut impl Rng,
    n: usize,
    groups: Option<&[String]>,
) -> Result<Vec<usize>> {
    let size = n / 2;
    let mut rows = match groups {
        None => sample(rng, n, size).into_vec(),
        Some(labels) => {
            let mut order: Vec<&str> = Vec::new();
            let mut members: HashMap<&str, Vec<usize>> = HashMap::new();
            for (i, g) in labels.iter().enumerate() {
                let entry = members.entry(g.as_str()).or_default();
                if entry.is_empty() {
                    order.push(g.as_str());
                }
                entry.push(i);
            }
            if order.len() < size {
                return Err(Error::InfeasibleSampling(format!(
                    "{} groups cannot supply {size} rows with one row per group",
                    order.len()
                )));
            }
            order.shuffle(rng);
            order[..size]
                .iter()
                .map(|g| {
                    let m = &members[g];
                    m[rng.random_range(0..m.len())]
                })
                .collect()
        }
    };
    rows.sort_unstable();
    Ok(rows)
}

fn subsample_attempt(
    dataset: &MultiViewDataset,
    config: &StabilityConfig,
    run_index: usize,
    attempt: usize,
) -> Result<MultiViewDataset> {
    let mut rng = stream_rng(
        config.seed,
        SUBSAMPLE_STREAM,
        ((run_index as u64) << 8) | attempt as u64,
    );
    let n_views = dataset.n_views();
    let groups = |m: usize| -> Result<Option<&[String]>> {
        if !config.group_exclusive {
            return Ok(None);
        }
        dataset.group_labels(m).map(Some).ok_or_else(|| {
            Error::InvalidInput("group-exclusive sampling needs group labels".into())
        })
    };
    let rows: Vec<Vec<usize>> = if config.paired_sampling {
        let n = dataset.n_samples(0);
        if (1..n_views).any(|m| dataset.n_samples(m) != n) {
            return Err(Error::InfeasibleSampling(
                "paired sampling needs the same number of samples in every view".into(),
            ));
        }
        let shared = half_sample(&mut rng, n, groups(0)?)?;
        vec![shared; n_views]
    } else {
        (0..n_views)
            .map(|m| half_sample(&mut rng, dataset.n_samples(m), groups(m)?))
            .collect::<Result<_>>()?
    };
    dataset.select_rows(&rows)
}

/// Half-subsample for one run: `floor(n_m / 2)` rows per view without
/// replacement, columns re-centered.
pub fn subsample(
    dataset: &MultiViewDataset,
    config: &StabilityConfig,
    run_index: usize,
) -> Result<MultiViewDataset> {
    for m in 0..dataset.n_views() {
        if dataset.n_samples(m) < 2 {
            return Err(Error::InvalidInput(format!(
                "view {m} needs at least 2 samples for half-subsampling"
            )));
        }
    }
    subsample_attempt(dataset, config, run_index, 0)
}

/// Variables with a nonzero entry in any column of `v`.
fn union_support(v: &nalgebra::DMatrix<f64>) -> Vec<bool> {
    v.row_iter().map(|row| row.iter().any(|x| *x != 0.0)).collect()
}

struct RunSelection {
    shared: Vec<bool>,
    views: Vec<Vec<bool>>,
    failures: usize,
}

fn selection_of(model: &FactorModel) -> (Vec<bool>, Vec<Vec<bool>>) {
    let shared = union_support(model.v_star());
    let views = model.v_views().iter().map(union_support).collect();
    (shared, views)
}

fn single_run(
    dataset: &MultiViewDataset,
    config: &StabilityConfig,
    fit_config: &FitConfig,
    run_index: usize,
) -> Result<RunSelection> {
    let mut last_err = None;
    for attempt in 0..=config.max_retries {
        let outcome = subsample_attempt(dataset, config, run_index, attempt)
            .and_then(|sub| fit(&sub, fit_config));
        match outcome {
            Ok(res) => {
                let (shared, views) = selection_of(&res.model);
                return Ok(RunSelection {
                    shared,
                    views,
                    failures: attempt,
                });
            }
            // an infeasible design fails identically on every draw
            Err(e @ Error::InfeasibleSampling(_)) | Err(e @ Error::InvalidInput(_)) => {
                return Err(e)
            }
            Err(e) => last_err = Some(e),
        }
    }
    Err(last_err.expect("at least one attempt"))
}

/// Runs `n_runs` independent subsample fits (in parallel on the current rayon
/// pool) and aggregates selection frequencies. Results do not depend on
/// scheduling.
pub fn run_stability(
    dataset: &MultiViewDataset,
    config: &StabilityConfig,
) -> Result<SelectionProfile> {
    config.validate(dataset)?;
    let fit_config = config.fit_config(dataset.n_views());
    let runs: Vec<RunSelection> = (0..config.n_runs)
        .into_par_iter()
        .map(|i| single_run(dataset, config, &fit_config, i))
        .collect::<Result<_>>()?;

    let p = dataset.n_vars();
    let n_views = dataset.n_views();
    let mut shared = vec![0usize; p];
    let mut views = vec![vec![0usize; p]; n_views];
    let mut failed_attempts = 0;
    for run in &runs {
        failed_attempts += run.failures;
        for (c, &s) in shared.iter_mut().zip(&run.shared) {
            *c += s as usize;
        }
        for (counts, sel) in views.iter_mut().zip(&run.views) {
            for (c, &s) in counts.iter_mut().zip(sel) {
                *c += s as usize;
            }
        }
    }
    let n = config.n_runs as f64;
    let freq = |c: &[usize]| c.iter().map(|&x| x as f64 / n).collect::<Vec<_>>();
    Ok(SelectionProfile {
        variable_names: dataset.variable_names().to_vec(),
        view_labels: default_view_labels(n_views),
        shared_prob: freq(&shared),
        view_prob: views.iter().map(|c| freq(c)).collect(),
        n_runs: config.n_runs,
        failed_attempts,
        config: Some(config.clone()),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ExclusiveLabel {
    Shared,
    View(usize),
    Mixed,
    None,
}

impl ExclusiveLabel {
    /// Text form using the profile's view labels, e.g. `liver-exclusive`.
    pub fn describe(&self, view_labels: &[String]) -> String {
        match self {
            ExclusiveLabel::Shared => "shared-exclusive".into(),
            ExclusiveLabel::View(m) => match view_labels.get(*m) {
                Some(l) => format!("{l}-exclusive"),
                None => format!("view{}-exclusive", m + 1),
            },
            ExclusiveLabel::Mixed => "mixed".into(),
            ExclusiveLabel::None => "none".into(),
        }
    }
}

impl fmt::Display for ExclusiveLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.describe(&[]))
    }
}

/// Labels each variable: exclusive to one list when its probability exceeds
/// `hi` there and stays below `lo` everywhere else, `mixed` when it exceeds
/// `hi` in two or more lists, `none` otherwise.
pub fn classify_exclusive(
    profile: &SelectionProfile,
    hi: f64,
    lo: f64,
) -> Result<Vec<ExclusiveLabel>> {
    if !(0.0 <= lo && lo < hi && hi <= 1.0) {
        return Err(Error::InvalidInput(format!(
            "thresholds must satisfy 0 <= lo < hi <= 1, got lo={lo}, hi={hi}"
        )));
    }
    let p = profile.n_vars();
    if profile.view_prob.iter().any(|v| v.len() != p) {
        return Err(Error::ShapeMismatch("profile lists differ in length".into()));
    }
    Ok((0..p)
        .map(|j| {
            let probs: Vec<f64> = std::iter::once(profile.shared_prob[j])
                .chain(profile.view_prob.iter().map(|v| v[j]))
                .collect();
            let high: Vec<usize> = (0..probs.len()).filter(|&i| probs[i] > hi).collect();
            match high.as_slice() {
                [only] => {
                    let rest_low = probs
                        .iter()
                        .enumerate()
                        .all(|(i, &q)| i == *only || q < lo);
                    if !rest_low {
                        ExclusiveLabel::None
                    } else if *only == 0 {
                        ExclusiveLabel::Shared
                    } else {
                        ExclusiveLabel::View(only - 1)
                    }
                }
                [] => ExclusiveLabel::None,
                _ => ExclusiveLabel::Mixed,
            }
        })
        .collect())
}
