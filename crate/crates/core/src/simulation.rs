//! Three-view simulation with a block-structured shared part and a mosaic of
//! view-specific variance, plus the experiment runner that turns repeated
//! draws into selection-probability heatmaps for each method.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{levene_screen, pca_top_loadings, stacked_pca};
use crate::error::{Error, Result};
use crate::estimation::{fit, FitConfig, RegularizationSpec};
use crate::model::MultiViewDataset;
use crate::rng::stream_rng;

/// Standard deviations of the three shared latent factors.
pub const SHARED_SD: [f64; 3] = [5.0, 3.5, 2.0];
/// Standard deviations of the view-specific latent factors.
pub const SPECIFIC_SD: [f64; 3] = [2.8, 3.2, 3.0];
pub const ALPHA: [f64; 10] = [0.3, 0.5, 0.6, 0.8, 1.0, 1.0, 0.8, 0.6, 0.5, 0.3];
pub const BETA: [f64; 10] = [0.6, 0.7, 0.8, 0.9, 1.0, 1.0, 0.9, 0.8, 0.7, 0.6];
pub const GAMMA_PATTERNS: [[f64; 6]; 3] = [
    [1.0, 1.0 / 3.0, 2.0 / 3.0, 1.0, 2.0 / 3.0, 1.0 / 3.0],
    [2.0 / 3.0, 1.0, 1.0 / 3.0, 1.0 / 3.0, 1.0, 2.0 / 3.0],
    [1.0 / 3.0, 2.0 / 3.0, 1.0, 2.0 / 3.0, 1.0 / 3.0, 1.0],
];
/// Number of signal-carrying variables (the leading columns).
pub const N_SIGNAL: usize = 30;
pub const BLOCK_SIZE: usize = 10;

/// Loading of view `m`'s specific factor on signal variable `j` (< 30).
pub fn gamma(m: usize, j: usize) -> f64 {
    GAMMA_PATTERNS[m][j % 6]
}

/// Loading of the shared factor on signal variable `j` (< 30).
pub fn shared_coefficient(j: usize) -> f64 {
    match j / BLOCK_SIZE {
        0 | 1 => ALPHA[j % BLOCK_SIZE],
        _ => BETA[j % BLOCK_SIZE],
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationSpec {
    pub n: usize,
    pub p: usize,
    pub n_views: usize,
    pub noise_sd: f64,
    pub n_experiments: usize,
    pub seed: u64,
}

impl SimulationSpec {
    /// Setting I: unit noise variance.
    pub fn setting_one() -> Self {
        SimulationSpec {
            n: 100,
            p: 500,
            n_views: 3,
            noise_sd: 1.0,
            n_experiments: 100,
            seed: 0,
        }
    }

    /// Setting II: noise variance 4.
    pub fn setting_two() -> Self {
        SimulationSpec {
            noise_sd: 2.0,
            ..Self::setting_one()
        }
    }

    pub fn setting(which: u8) -> Result<Self> {
        match which {
            1 => Ok(Self::setting_one()),
            2 => Ok(Self::setting_two()),
            other => Err(Error::InvalidInput(format!("unknown setting {other}; use 1 or 2"))),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_views != 3 {
            return Err(Error::InvalidInput(format!(
                "the generator defines exactly 3 views, got {}",
                self.n_views
            )));
        }
        if self.p < N_SIGNAL {
            return Err(Error::InvalidInput(format!(
                "p must be at least {N_SIGNAL}, got {}",
                self.p
            )));
        }
        if self.n < 2 {
            return Err(Error::InvalidInput("n must be at least 2".into()));
        }
        if !(self.noise_sd >= 0.0 && self.noise_sd.is_finite()) {
            return Err(Error::InvalidInput("noise_sd must be finite and non-negative".into()));
        }
        Ok(())
    }
}

/// Analytic per-variable variances of the noiseless signal.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroundTruth {
    pub shared_variance: Vec<f64>,
    /// One list of p values per view.
    pub specific_variance: Vec<Vec<f64>>,
}

impl GroundTruth {
    pub fn new(p: usize) -> Self {
        let mut shared_variance = vec![0.0; p];
        let mut specific_variance = vec![vec![0.0; p]; 3];
        for j in 0..N_SIGNAL.min(p) {
            shared_variance[j] = (shared_coefficient(j) * SHARED_SD[j / BLOCK_SIZE]).powi(2);
            for (m, spec) in specific_variance.iter_mut().enumerate() {
                spec[j] = (gamma(m, j) * SPECIFIC_SD[m]).powi(2);
            }
        }
        GroundTruth {
            shared_variance,
            specific_variance,
        }
    }

    /// Variables whose specific loading in view `m` is 1 (ten per view,
    /// disjoint across views).
    pub fn top_specific(&self, m: usize) -> Vec<usize> {
        (0..N_SIGNAL).filter(|&j| gamma(m, j) == 1.0).collect()
    }

    /// Indices of shared block `b` (0, 1 or 2).
    pub fn block(b: usize) -> std::ops::Range<usize> {
        b * BLOCK_SIZE..(b + 1) * BLOCK_SIZE
    }
}

#[derive(Debug, Clone)]
pub struct SimulatedData {
    pub dataset: MultiViewDataset,
    pub truth: GroundTruth,
}

/// Draws one experiment. Row `i` of every view shares the same shared-factor
/// draw; each row has its own random stream so the result depends only on
/// `(seed, experiment_index)`.
pub fn generate(spec: &SimulationSpec, experiment_index: usize) -> Result<SimulatedData> {
    spec.validate()?;
    let (n, p) = (spec.n, spec.p);
    let mut views = vec![DMatrix::zeros(n, p); 3];
    for i in 0..n {
        let mut rng = stream_rng(spec.seed, experiment_index as u64, i as u64);
        let mut z = || -> f64 { StandardNormal.sample(&mut rng) };
        let shared: Vec<f64> = SHARED_SD.iter().map(|sd| sd * z()).collect();
        for (m, x) in views.iter_mut().enumerate() {
            let specific = SPECIFIC_SD[m] * z();
            for j in 0..p {
                let mut v = spec.noise_sd * z();
                if j < N_SIGNAL {
                    v += shared_coefficient(j) * shared[j / BLOCK_SIZE] + gamma(m, j) * specific;
                }
                x[(i, j)] = v;
            }
        }
    }
    Ok(SimulatedData {
        dataset: MultiViewDataset::from_views(views)?,
        truth: GroundTruth::new(p),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    Smvmf,
    Levene,
    Pca,
    StackedPca,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Smvmf => "smvmf",
            Method::Levene => "levene",
            Method::Pca => "pca",
            Method::StackedPca => "stacked-pca",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('_', "-").as_str() {
            "smvmf" => Ok(Method::Smvmf),
            "levene" => Ok(Method::Levene),
            "pca" => Ok(Method::Pca),
            "stacked-pca" | "stackedpca" => Ok(Method::StackedPca),
            other => Err(Error::InvalidInput(format!("unknown method '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodConfig {
    pub d: usize,
    pub r: usize,
    /// Nonzero loadings per column for the sMVMF fits.
    pub count: usize,
    pub levene_alpha: f64,
    pub pca_top_k: usize,
    pub stacked_top_k: Vec<usize>,
    pub max_outer_iters: usize,
    pub rel_tol: f64,
}

impl Default for MethodConfig {
    fn default() -> Self {
        MethodConfig {
            d: 3,
            r: 1,
            count: 10,
            levene_alpha: 0.05,
            pca_top_k: 10,
            stacked_top_k: vec![10, 20, 30],
            max_outer_iters: 500,
            rel_tol: 1e-6,
        }
    }
}

/// Selection probabilities: one row per view, latent factor or cut-off, one
/// column per variable.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Heatmap {
    pub row_labels: Vec<String>,
    pub values: Vec<Vec<f64>>,
}

impl Heatmap {
    fn from_counts(row_labels: Vec<String>, counts: Vec<Vec<usize>>, total: usize) -> Self {
        let denom = total.max(1) as f64;
        Heatmap {
            row_labels,
            values: counts
                .into_iter()
                .map(|row| row.into_iter().map(|c| c as f64 / denom).collect())
                .collect(),
        }
    }

    pub fn row(&self, label: &str) -> Option<&[f64]> {
        self.row_labels
            .iter()
            .position(|l| l == label)
            .map(|i| self.values[i].as_slice())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentResults {
    pub spec: SimulationSpec,
    pub config: MethodConfig,
    pub n_completed: usize,
    /// Experiments excluded from the averages, with the error message.
    pub failures: Vec<(usize, String)>,
    /// Shared-factor rows, each aligned to the true block it overlaps most.
    pub smvmf_shared: Option<Heatmap>,
    pub smvmf_specific: Option<Heatmap>,
    pub levene: Option<Heatmap>,
    pub pca: Option<Heatmap>,
    pub stacked_pca: Option<Heatmap>,
}

fn view_labels() -> Vec<String> {
    (1..=3).map(|m| format!("view{m}")).collect()
}

/// Column order that maximizes total overlap between the selected sets and
/// the true blocks; `assignment[b]` is the column matched to block b.
/// Earlier permutations win ties.
fn match_columns_to_blocks(supports: &[Vec<bool>]) -> Vec<usize> {
    let d = supports.len();
    let blocks = d.min(3);
    let overlap = |c: usize, b: usize| -> usize {
        GroundTruth::block(b).filter(|&j| supports[c][j]).count()
    };
    let mut best: Vec<usize> = (0..d).collect();
    let mut best_score = None;
    let mut perm: Vec<usize> = (0..d).collect();
    loop {
        let score: usize = (0..blocks).map(|b| overlap(perm[b], b)).sum();
        if best_score.is_none_or(|s| score > s) {
            best_score = Some(score);
            best = perm.clone();
        }
        if !next_permutation(&mut perm) {
            break;
        }
    }
    best
}

fn next_permutation(v: &mut [usize]) -> bool {
    let n = v.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && v[i - 1] >= v[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while v[j] <= v[i - 1] {
        j -= 1;
    }
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}

fn column_supports(v: &DMatrix<f64>) -> Vec<Vec<bool>> {
    v.column_iter()
        .map(|c| c.iter().map(|x| *x != 0.0).collect())
        .collect()
}

#[derive(Default)]
struct Indicators {
    smvmf_shared: Vec<Vec<bool>>,
    smvmf_specific: Vec<Vec<bool>>,
    levene: Vec<Vec<bool>>,
    pca: Vec<Vec<bool>>,
    stacked: Vec<Vec<bool>>,
}

fn indices_to_mask(idx: &[usize], p: usize) -> Vec<bool> {
    let mut mask = vec![false; p];
    for &j in idx {
        mask[j] = true;
    }
    mask
}

fn one_experiment(
    spec: &SimulationSpec,
    methods: &[Method],
    config: &MethodConfig,
    e: usize,
) -> Result<Indicators> {
    let data = generate(spec, e)?;
    let ds = &data.dataset;
    let p = spec.p;
    let mut out = Indicators::default();
    for method in methods {
        match method {
            Method::Smvmf => {
                let cfg = FitConfig {
                    max_outer_iters: config.max_outer_iters,
                    rel_tol: config.rel_tol,
                    seed: spec.seed,
                    ..FitConfig::new(
                        config.d,
                        config.r,
                        RegularizationSpec::fixed_count(config.count, config.d, config.r, 3),
                    )
                };
                let model = fit(ds, &cfg)?.model;
                let cols = column_supports(model.v_star());
                let order = match_columns_to_blocks(&cols);
                out.smvmf_shared = order.iter().map(|&c| cols[c].clone()).collect();
                out.smvmf_specific = model
                    .v_views()
                    .iter()
                    .map(|v| {
                        (0..p)
                            .map(|j| v.row(j).iter().any(|x| *x != 0.0))
                            .collect()
                    })
                    .collect();
            }
            Method::Levene => {
                let sel = levene_screen(ds, config.levene_alpha)?;
                out.levene = (0..3)
                    .map(|m| sel.iter().map(|s| s.attributed_view == Some(m)).collect())
                    .collect();
            }
            Method::Pca => {
                out.pca = ds
                    .views()
                    .iter()
                    .map(|x| Ok(indices_to_mask(&pca_top_loadings(x, 0, config.pca_top_k)?, p)))
                    .collect::<Result<_>>()?;
            }
            Method::StackedPca => {
                let max_k = config.stacked_top_k.iter().copied().max().unwrap_or(0);
                let ranked = stacked_pca(ds, max_k)?;
                out.stacked = config
                    .stacked_top_k
                    .iter()
                    .map(|&k| indices_to_mask(&ranked[..k], p))
                    .collect();
            }
        }
    }
    Ok(out)
}

fn accumulate(counts: &mut Vec<Vec<usize>>, rows: &[Vec<bool>]) {
    if counts.is_empty() {
        *counts = rows.iter().map(|r| vec![0; r.len()]).collect();
    }
    for (c, r) in counts.iter_mut().zip(rows) {
        for (x, &b) in c.iter_mut().zip(r) {
            *x += b as usize;
        }
    }
}

/// Runs `spec.n_experiments` independent experiments (in parallel on the
/// current rayon pool) and averages each method's selections.
pub fn run_experiments(
    spec: &SimulationSpec,
    methods: &[Method],
    config: &MethodConfig,
) -> Result<ExperimentResults> {
    spec.validate()?;
    if methods.is_empty() {
        return Err(Error::InvalidInput("at least one method is required".into()));
    }
    if config.pca_top_k > spec.p || config.stacked_top_k.iter().any(|&k| k > spec.p) {
        return Err(Error::CountOutOfRange {
            count: config.pca_top_k.max(config.stacked_top_k.iter().copied().max().unwrap_or(0)),
            p: spec.p,
        });
    }
    let mut methods = methods.to_vec();
    methods.sort_by_key(|m| *m as u8);
    methods.dedup();

    let outcomes: Vec<Result<Indicators>> = (0..spec.n_experiments)
        .into_par_iter()
        .map(|e| one_experiment(spec, &methods, config, e))
        .collect();

    let mut failures = Vec::new();
    let mut n_completed = 0;
    let mut shared = Vec::new();
    let mut specific = Vec::new();
    let mut levene = Vec::new();
    let mut pca = Vec::new();
    let mut stacked = Vec::new();
    for (e, outcome) in outcomes.into_iter().enumerate() {
        match outcome {
            Ok(ind) => {
                n_completed += 1;
                accumulate(&mut shared, &ind.smvmf_shared);
                accumulate(&mut specific, &ind.smvmf_specific);
                accumulate(&mut levene, &ind.levene);
                accumulate(&mut pca, &ind.pca);
                accumulate(&mut stacked, &ind.stacked);
            }
            Err(err) => failures.push((e, err.to_string())),
        }
    }
    let has = |m: Method| methods.contains(&m);
    let build = |labels: Vec<String>, counts: Vec<Vec<usize>>| {
        let counts = if counts.is_empty() {
            vec![vec![0; spec.p]; labels.len()]
        } else {
            counts
        };
        Heatmap::from_counts(labels, counts, n_completed)
    };
    Ok(ExperimentResults {
        spec: spec.clone(),
        config: config.clone(),
        n_completed,
        failures,
        smvmf_shared: has(Method::Smvmf)
            .then(|| build((1..=config.d).map(|b| format!("LF{b}")).collect(), shared)),
        smvmf_specific: has(Method::Smvmf).then(|| build(view_labels(), specific)),
        levene: has(Method::Levene).then(|| build(view_labels(), levene)),
        pca: has(Method::Pca).then(|| build(view_labels(), pca)),
        stacked_pca: has(Method::StackedPca).then(|| {
            build(
                config.stacked_top_k.iter().map(|k| format!("top{k}")).collect(),
                stacked,
            )
        }),
    })
}
