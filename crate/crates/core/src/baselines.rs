//! Comparator methods: Levene's variance-homogeneity test and screen,
//! per-view and stacked PCA selection, hypergeometric enrichment and a
//! simple linear association screen with a random-draw null.

use std::collections::HashSet;
use std::hash::Hash;

use nalgebra::DMatrix;
use rand::seq::index::sample;
use rayon::prelude::*;
use serde::Serialize;
use statrs::function::beta::beta_reg;
use statrs::function::factorial::ln_binomial;

use crate::error::{Error, Result};
use crate::linalg::{stack_rows, top_k_by_magnitude, Svd};
use crate::model::MultiViewDataset;
use crate::rng::stream_rng;

const NULL_DRAW_STREAM: u64 = 0x4E55;

/// Upper tail `P(F > f)` of the F(d1, d2) distribution.
pub fn f_upper_tail(f: f64, d1: f64, d2: f64) -> f64 {
    if f <= 0.0 {
        return 1.0;
    }
    if f.is_infinite() {
        return 0.0;
    }
    beta_reg(d2 / 2.0, d1 / 2.0, d2 / (d2 + d1 * f)).clamp(0.0, 1.0)
}

/// Two-sided tail `P(|T| > |t|)` of Student's t with `df` degrees of freedom.
pub fn t_two_sided(t: f64, df: f64) -> f64 {
    if t.is_infinite() {
        return 0.0;
    }
    beta_reg(df / 2.0, 0.5, df / (df + t * t)).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LeveneResult {
    pub statistic: f64,
    pub p_value: f64,
    pub group_variances: Vec<f64>,
    pub argmax_group: usize,
}

fn sample_variance(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
}

fn argmax_first(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Classic (mean-centered) Levene test across groups.
pub fn levene_test<G: AsRef<[f64]>>(groups: &[G]) -> Result<LeveneResult> {
    let k = groups.len();
    if k < 2 {
        return Err(Error::InvalidInput("Levene's test needs at least two groups".into()));
    }
    let mut z: Vec<Vec<f64>> = Vec::with_capacity(k);
    let mut group_variances = Vec::with_capacity(k);
    for (g, values) in groups.iter().enumerate() {
        let y = values.as_ref();
        if y.len() < 2 {
            return Err(Error::InvalidInput(format!("group {g} has fewer than 2 values")));
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("group {g} has non-finite values")));
        }
        if y.iter().all(|&v| v == y[0]) {
            return Err(Error::Degenerate(format!("group {g} is constant")));
        }
        let mean = y.iter().sum::<f64>() / y.len() as f64;
        z.push(y.iter().map(|v| (v - mean).abs()).collect());
        group_variances.push(sample_variance(y));
    }
    let n_total: usize = z.iter().map(Vec::len).sum();
    let z_means: Vec<f64> = z
        .iter()
        .map(|g| g.iter().sum::<f64>() / g.len() as f64)
        .collect();
    let grand = z.iter().flatten().sum::<f64>() / n_total as f64;
    let between: f64 = z
        .iter()
        .zip(&z_means)
        .map(|(g, m)| g.len() as f64 * (m - grand).powi(2))
        .sum();
    let within: f64 = z
        .iter()
        .zip(&z_means)
        .map(|(g, m)| g.iter().map(|v| (v - m).powi(2)).sum::<f64>())
        .sum();
    let d1 = (k - 1) as f64;
    let d2 = (n_total - k) as f64;
    let (statistic, p_value) = if within == 0.0 {
        if between == 0.0 {
            (0.0, 1.0)
        } else {
            (f64::INFINITY, 0.0)
        }
    } else {
        let w = (d2 / d1) * between / within;
        (w, f_upper_tail(w, d1, d2))
    };
    Ok(LeveneResult {
        statistic,
        p_value,
        argmax_group: argmax_first(&group_variances),
        group_variances,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LeveneSelection {
    pub p_value: f64,
    pub selected: bool,
    /// View with the largest sample variance, for selected variables.
    pub attributed_view: Option<usize>,
}

/// Per-variable Levene test across views with a Bonferroni threshold
/// `alpha / p`; rejected variables are attributed to their highest-variance
/// view.
pub fn levene_screen(dataset: &MultiViewDataset, alpha: f64) -> Result<Vec<LeveneSelection>> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidInput(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    let p = dataset.n_vars();
    let threshold = alpha / p as f64;
    (0..p)
        .map(|j| {
            let groups: Vec<Vec<f64>> = dataset
                .views()
                .iter()
                .map(|x| x.column(j).iter().copied().collect())
                .collect();
            let res = levene_test(&groups)?;
            let selected = res.p_value < threshold;
            Ok(LeveneSelection {
                p_value: res.p_value,
                selected,
                attributed_view: selected.then_some(res.argmax_group),
            })
        })
        .collect()
}

/// The `top_k` variables by |loading| on principal component
/// `component_index` (0-based) of a centered matrix, in rank order.
pub fn pca_top_loadings(
    matrix: &DMatrix<f64>,
    component_index: usize,
    top_k: usize,
) -> Result<Vec<usize>> {
    let p = matrix.ncols();
    if top_k > p {
        return Err(Error::CountOutOfRange { count: top_k, p });
    }
    let svd = Svd::new(matrix)?;
    if component_index >= svd.numerical_rank() {
        return Err(Error::InvalidRank(format!(
            "component {component_index} requested but the matrix has rank {}",
            svd.numerical_rank()
        )));
    }
    let loadings: Vec<f64> = svd.v.column(component_index).iter().copied().collect();
    Ok(top_k_by_magnitude(&loadings, top_k))
}

/// PC1 of the row-stacked scaled views.
pub fn stacked_pca(dataset: &MultiViewDataset, top_k: usize) -> Result<Vec<usize>> {
    pca_top_loadings(&stack_rows(&dataset.scaled_views()), 0, top_k)
}

/// `P(X >= overlap)` for X hypergeometric: `selected` draws from a universe
/// of `universe` items of which `reference` are marked.
pub fn hypergeometric_upper_tail(
    universe: u64,
    reference: u64,
    selected: u64,
    overlap: u64,
) -> Result<f64> {
    if reference > universe || selected > universe {
        return Err(Error::InvalidInput(format!(
            "set sizes {reference} and {selected} exceed universe {universe}"
        )));
    }
    let lo = (selected + reference).saturating_sub(universe);
    let hi = selected.min(reference);
    if overlap <= lo {
        return Ok(1.0);
    }
    if overlap > hi {
        return Ok(0.0);
    }
    let denom = ln_binomial(universe, selected);
    let terms: Vec<f64> = (overlap..=hi)
        .map(|x| ln_binomial(reference, x) + ln_binomial(universe - reference, selected - x) - denom)
        .collect();
    let max = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = terms.iter().map(|t| (t - max).exp()).sum();
    Ok((max + sum.ln()).exp().clamp(0.0, 1.0))
}

/// One-sided Fisher exact (hypergeometric) enrichment of `reference` items
/// within `selected`.
pub fn fisher_enrichment<T: Eq + Hash>(
    selected: &HashSet<T>,
    reference: &HashSet<T>,
    universe_size: usize,
) -> Result<f64> {
    let union = selected.union(reference).count();
    if universe_size < union {
        return Err(Error::InvalidInput(format!(
            "universe of {universe_size} cannot hold {union} distinct items"
        )));
    }
    let overlap = selected.intersection(reference).count();
    hypergeometric_upper_tail(
        universe_size as u64,
        reference.len() as u64,
        selected.len() as u64,
        overlap as u64,
    )
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssociationResult {
    pub slope: f64,
    pub p_value: f64,
    pub significant: bool,
}

fn simple_regression(y: &[f64], x: &[f64]) -> Result<(f64, f64)> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Degenerate("predictor has zero variance".into()));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    let slope = sxy / sxx;
    let sse = (syy - slope * sxy).max(0.0);
    let df = n - 2.0;
    let p = if sse == 0.0 {
        if slope == 0.0 {
            1.0
        } else {
            0.0
        }
    } else {
        let se = (sse / df / sxx).sqrt();
        t_two_sided(slope / se, df)
    };
    Ok((slope, p))
}

/// Least-squares fit of each response column on the matching predictor
/// column with a two-sided t-test on the slope; significance uses a
/// Bonferroni threshold `alpha / q`. A pair fails on its own when the
/// predictor is constant.
pub fn association_screen(
    responses: &DMatrix<f64>,
    predictors: &DMatrix<f64>,
    alpha: f64,
) -> Result<Vec<Result<AssociationResult>>> {
    if responses.shape() != predictors.shape() {
        return Err(Error::ShapeMismatch(format!(
            "responses are {:?}, predictors are {:?}",
            responses.shape(),
            predictors.shape()
        )));
    }
    if responses.nrows() < 3 {
        return Err(Error::InvalidInput("association screen needs n >= 3".into()));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidInput(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    let q = responses.ncols();
    let threshold = alpha / q as f64;
    Ok((0..q)
        .map(|j| {
            let (slope, p_value) =
                simple_regression(responses.column(j).as_slice(), predictors.column(j).as_slice())?;
            Ok(AssociationResult {
                slope,
                p_value,
                significant: p_value < threshold,
            })
        })
        .collect())
}

/// Fraction of Bonferroni-significant pairs among results; failed pairs count
/// as not significant.
pub fn significant_fraction(results: &[Result<AssociationResult>]) -> f64 {
    if results.is_empty() {
        return 0.0;
    }
    let hits = results
        .iter()
        .filter(|r| matches!(r, Ok(a) if a.significant))
        .count();
    hits as f64 / results.len() as f64
}

/// Empirical null for the significant fraction: `n_draws` random column
/// subsets of size `draw_size`, each screened as a batch.
pub fn random_draw_null(
    all_responses: &DMatrix<f64>,
    all_predictors: &DMatrix<f64>,
    draw_size: usize,
    n_draws: usize,
    alpha: f64,
    seed: u64,
) -> Result<Vec<f64>> {
    let q = all_responses.ncols();
    if draw_size == 0 || draw_size > q {
        return Err(Error::CountOutOfRange { count: draw_size, p: q });
    }
    if all_predictors.shape() != all_responses.shape() {
        return Err(Error::ShapeMismatch(
            "responses and predictors must have the same shape".into(),
        ));
    }
    (0..n_draws)
        .into_par_iter()
        .map(|draw| {
            let mut rng = stream_rng(seed, NULL_DRAW_STREAM, draw as u64);
            let mut cols = sample(&mut rng, q, draw_size).into_vec();
            cols.sort_unstable();
            let res = association_screen(
                &all_responses.select_columns(&cols),
                &all_predictors.select_columns(&cols),
                alpha,
            )?;
            Ok(significant_fraction(&res))
        })
        .collect()
}
