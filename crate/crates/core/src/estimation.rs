//! Penalized estimation of the factor model by block-coordinate descent.
//!
//! The objective is
//!
//! ```text
//! sum_m ||X_m/sqrt(n_m) - U_m V*^T - W_m V_m^T||_F^2
//!     + 2 M sum_k lambda*_k ||V*_k||_1 + 2 sum_m sum_j lambda_mj ||V_mj||_1
//! ```
//!
//! and each outer iteration cycles `(U_m, W_m) -> V_m -> V*`: a reduced-rank
//! Procrustes rotation for the stacked `[U_m | W_m]`, then closed-form
//! soft-threshold updates for the loadings. Under the orthogonality
//! constraints the loading columns decouple, so one coordinate pass is exact.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{orthonormal_complement, stack_columns, stack_rows, top_k_by_magnitude, Svd};
use crate::model::{FactorModel, MultiViewDataset};

/// Diagonal penalty matrices, or per-column nonzero targets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum RegularizationSpec {
    FixedLambda {
        lambda_star: Vec<f64>,
        lambda_view: Vec<Vec<f64>>,
    },
    FixedCount {
        count_star: Vec<usize>,
        count_view: Vec<Vec<usize>>,
    },
}

impl RegularizationSpec {
    /// No shrinkage at all.
    pub fn none(d: usize, r: usize, n_views: usize) -> Self {
        Self::parsimonious(0.0, 0.0, d, r, n_views)
    }

    /// `Lambda* = lambda_shared I_d` and `Lambda_m = lambda_view I_r` for every view.
    pub fn parsimonious(
        lambda_shared: f64,
        lambda_view: f64,
        d: usize,
        r: usize,
        n_views: usize,
    ) -> Self {
        RegularizationSpec::FixedLambda {
            lambda_star: vec![lambda_shared; d],
            lambda_view: vec![vec![lambda_view; r]; n_views],
        }
    }

    /// Exactly `count` nonzero loadings in every column of `V*` and each `V_m`.
    pub fn fixed_count(count: usize, d: usize, r: usize, n_views: usize) -> Self {
        RegularizationSpec::FixedCount {
            count_star: vec![count; d],
            count_view: vec![vec![count; r]; n_views],
        }
    }

    pub fn mode_name(&self) -> &'static str {
        match self {
            RegularizationSpec::FixedLambda { .. } => "fixed-lambda",
            RegularizationSpec::FixedCount { .. } => "fixed-count",
        }
    }

    pub fn validate(&self, d: usize, r: usize, n_views: usize, p: usize) -> Result<()> {
        fn lens<T>(star: &[T], view: &[Vec<T>], d: usize, r: usize, m: usize) -> Result<()> {
            if star.len() != d {
                return Err(Error::ShapeMismatch(format!(
                    "{} shared penalty entries for d={d}",
                    star.len()
                )));
            }
            if view.len() != m || view.iter().any(|v| v.len() != r) {
                return Err(Error::ShapeMismatch(format!(
                    "view penalties must be {m} lists of length r={r}"
                )));
            }
            Ok(())
        }
        match self {
            RegularizationSpec::FixedLambda {
                lambda_star,
                lambda_view,
            } => {
                lens(lambda_star, lambda_view, d, r, n_views)?;
                for &l in lambda_star.iter().chain(lambda_view.iter().flatten()) {
                    if !(l >= 0.0 && l.is_finite()) {
                        return Err(Error::NegativeLambda(l));
                    }
                }
            }
            RegularizationSpec::FixedCount {
                count_star,
                count_view,
            } => {
                lens(count_star, count_view, d, r, n_views)?;
                for &k in count_star.iter().chain(count_view.iter().flatten()) {
                    if k == 0 || k > p {
                        return Err(Error::CountOutOfRange { count: k, p });
                    }
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub d: usize,
    pub r: usize,
    pub reg: RegularizationSpec,
    pub max_outer_iters: usize,
    pub rel_tol: f64,
    pub inner_passes: usize,
    pub seed: u64,
}

impl FitConfig {
    pub fn new(d: usize, r: usize, reg: RegularizationSpec) -> Self {
        FitConfig {
            d,
            r,
            reg,
            max_outer_iters: 500,
            rel_tol: 1e-6,
            inner_passes: 1,
            seed: 0,
        }
    }

    fn validate(&self, dataset: &MultiViewDataset) -> Result<()> {
        if self.max_outer_iters == 0 {
            return Err(Error::InvalidInput("max_outer_iters must be at least 1".into()));
        }
        if !(self.rel_tol > 0.0) {
            return Err(Error::InvalidInput("rel_tol must be positive".into()));
        }
        if self.inner_passes == 0 {
            return Err(Error::InvalidInput("inner_passes must be at least 1".into()));
        }
        check_ranks(dataset, self.d, self.r)?;
        self.reg
            .validate(self.d, self.r, dataset.n_views(), dataset.n_vars())
    }
}

#[derive(Debug, Clone)]
pub struct FitResult {
    pub model: FactorModel,
    /// Objective after each outer iteration. In fixed-count mode, where no
    /// single penalized objective exists, this holds the loss instead.
    pub objective_trace: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
}

fn check_ranks(dataset: &MultiViewDataset, d: usize, r: usize) -> Result<()> {
    if d + r == 0 {
        return Err(Error::InvalidRank("d + r must be at least 1".into()));
    }
    let p = dataset.n_vars();
    for m in 0..dataset.n_views() {
        let limit = dataset.n_samples(m).min(p);
        if d + r > limit {
            return Err(Error::InvalidRank(format!(
                "d + r = {} exceeds min(n, p) = {limit} in view {m}",
                d + r
            )));
        }
    }
    Ok(())
}

fn check_nonzero_variance(dataset: &MultiViewDataset) -> Result<()> {
    for (m, x) in dataset.views().iter().enumerate() {
        if x.iter().all(|&v| v == 0.0) {
            return Err(Error::Degenerate(format!("view {m} has zero variance")));
        }
    }
    Ok(())
}

#[inline]
fn soft(y: f64, lambda: f64) -> f64 {
    if y > lambda {
        y - lambda
    } else if y < -lambda {
        y + lambda
    } else {
        0.0
    }
}

/// Componentwise `sign(y) * max(|y| - lambda, 0)`.
pub fn soft_threshold(y: &[f64], lambda: f64) -> Result<Vec<f64>> {
    if !(lambda >= 0.0) {
        return Err(Error::NegativeLambda(lambda));
    }
    Ok(y.iter().map(|&v| soft(v, lambda)).collect())
}

/// Result of choosing a threshold that keeps a prescribed number of entries.
#[derive(Debug, Clone, PartialEq)]
pub struct TunedThreshold {
    pub lambda: f64,
    pub values: Vec<f64>,
    /// Kept indices, ascending.
    pub support: Vec<usize>,
}

/// Picks `lambda` as the (k+1)-th largest `|y|` (0 when k = p) and keeps the
/// `k` largest-magnitude entries, lower index first on ties. When the k-th
/// and (k+1)-th magnitudes tie, `lambda` drops to the next strictly smaller
/// magnitude so every kept entry stays nonzero.
pub fn tune_lambda_for_count(projection: &[f64], k: usize) -> Result<TunedThreshold> {
    let p = projection.len();
    if k == 0 || k > p {
        return Err(Error::CountOutOfRange { count: k, p });
    }
    let order = top_k_by_magnitude(projection, p);
    let kth = projection[order[k - 1]].abs();
    let lambda = order[k..]
        .iter()
        .map(|&i| projection[i].abs())
        .find(|&a| a < kth)
        .unwrap_or(0.0);
    let mut support = order[..k].to_vec();
    support.sort_unstable();
    let mut values = vec![0.0; p];
    for &i in &support {
        values[i] = soft(projection[i], lambda);
    }
    Ok(TunedThreshold {
        lambda,
        values,
        support,
    })
}

enum ColumnRule<'a> {
    Lambda(&'a [f64]),
    Count(&'a [usize]),
}

fn threshold_columns(mut proj: DMatrix<f64>, rule: ColumnRule<'_>) -> Result<DMatrix<f64>> {
    for (j, mut col) in proj.column_iter_mut().enumerate() {
        match rule {
            ColumnRule::Lambda(l) => col.apply(|v| *v = soft(*v, l[j])),
            ColumnRule::Count(c) => {
                let tuned = tune_lambda_for_count(col.as_slice(), c[j])?;
                col.copy_from_slice(&tuned.values);
            }
        }
    }
    Ok(proj)
}

fn loss_parts(
    xs: &[DMatrix<f64>],
    u: &[DMatrix<f64>],
    w: &[DMatrix<f64>],
    v_star: &DMatrix<f64>,
    v: &[DMatrix<f64>],
) -> f64 {
    xs.iter()
        .enumerate()
        .map(|(m, x)| {
            let mut resid = x.clone();
            resid.gemm(-1.0, &u[m], &v_star.transpose(), 1.0);
            resid.gemm(-1.0, &w[m], &v[m].transpose(), 1.0);
            resid.norm_squared()
        })
        .sum()
}

fn weighted_l1(a: &DMatrix<f64>, lambda: &[f64]) -> f64 {
    a.column_iter()
        .zip(lambda)
        .map(|(c, l)| l * c.iter().map(|x| x.abs()).sum::<f64>())
        .sum()
}

fn penalty_parts(
    v_star: &DMatrix<f64>,
    v: &[DMatrix<f64>],
    lambda_star: &[f64],
    lambda_view: &[Vec<f64>],
) -> f64 {
    let m = v.len() as f64;
    let shared = 2.0 * m * weighted_l1(v_star, lambda_star);
    let specific: f64 = v
        .iter()
        .zip(lambda_view)
        .map(|(vm, l)| 2.0 * weighted_l1(vm, l))
        .sum();
    shared + specific
}

/// Squared Frobenius reconstruction error summed over views.
pub fn loss(model: &FactorModel, dataset: &MultiViewDataset) -> Result<f64> {
    model.check_shapes(dataset)?;
    let xs = dataset.scaled_views();
    let m = model.n_views();
    let u: Vec<_> = (0..m).map(|k| model.u(k).clone()).collect();
    let w: Vec<_> = (0..m).map(|k| model.w(k).clone()).collect();
    Ok(loss_parts(&xs, &u, &w, model.v_star(), model.v_views()))
}

/// Loss plus the weighted l1 penalties. Only defined for fixed penalties.
pub fn objective(
    model: &FactorModel,
    dataset: &MultiViewDataset,
    reg: &RegularizationSpec,
) -> Result<f64> {
    let RegularizationSpec::FixedLambda {
        lambda_star,
        lambda_view,
    } = reg
    else {
        return Err(Error::UnsupportedMode("fixed-count"));
    };
    reg.validate(model.d(), model.r(), model.n_views(), model.n_vars())?;
    Ok(loss(model, dataset)?
        + penalty_parts(model.v_star(), model.v_views(), lambda_star, lambda_view))
}

/// Starting point: a rank-d SVD of the row-stacked scaled views gives
/// `V* = B D / M` and the `U_m` blocks; a rank-r SVD of each view's residual
/// gives `W_m` and `V_m`. The `U_m` blocks are only jointly orthonormal; the
/// first Procrustes step restores the per-view constraints.
pub fn initialize(dataset: &MultiViewDataset, d: usize, r: usize) -> Result<FactorModel> {
    check_ranks(dataset, d, r)?;
    check_nonzero_variance(dataset)?;
    let xs = dataset.scaled_views();
    let n_views = xs.len();
    let p = dataset.n_vars();

    let (v_star, u) = if d > 0 {
        let stacked = stack_rows(&xs);
        let svd = Svd::new(&stacked)?;
        if svd.numerical_rank() < d {
            return Err(Error::Degenerate(format!(
                "stacked data has rank {} < d = {d}",
                svd.numerical_rank()
            )));
        }
        let top = svd.truncate(d);
        let v_star = &top.v * DMatrix::from_diagonal(&top.s) / n_views as f64;
        let mut row = 0;
        let mut u = Vec::with_capacity(n_views);
        for x in &xs {
            u.push(top.u.rows(row, x.nrows()).into_owned());
            row += x.nrows();
        }
        (v_star, u)
    } else {
        (
            DMatrix::zeros(p, 0),
            xs.iter().map(|x| DMatrix::zeros(x.nrows(), 0)).collect(),
        )
    };

    let mut w = Vec::with_capacity(n_views);
    let mut v = Vec::with_capacity(n_views);
    for (m, x) in xs.iter().enumerate() {
        if r == 0 {
            w.push(DMatrix::zeros(x.nrows(), 0));
            v.push(DMatrix::zeros(p, 0));
            continue;
        }
        let mut resid = x.clone();
        resid.gemm(-1.0, &u[m], &v_star.transpose(), 1.0);
        let top = Svd::new(&resid)?.truncate(r);
        v.push(&top.v * DMatrix::from_diagonal(&top.s));
        w.push(top.u);
    }
    Ok(FactorModel::from_parts_unchecked(u, w, v_star, v))
}

fn procrustes(xs: &DMatrix<f64>, v_tilde: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = xs.nrows();
    let k = v_tilde.ncols();
    if k > n {
        return Err(Error::InvalidRank(format!(
            "d + r = {k} exceeds the {n} samples of the view"
        )));
    }
    if v_tilde.nrows() != xs.ncols() {
        return Err(Error::ShapeMismatch(format!(
            "loadings have {} rows, view has {} columns",
            v_tilde.nrows(),
            xs.ncols()
        )));
    }
    if k == 0 {
        return Ok(DMatrix::zeros(n, 0));
    }
    let svd = Svd::new(&(xs * v_tilde))?;
    let rank = svd.numerical_rank();
    if rank == k {
        return Ok(&svd.u * svd.v.transpose());
    }
    // Rank-deficient target: the optimum is only pinned down on the range;
    // the remaining directions come from a fixed orthonormal completion on
    // both sides.
    let p_good = svd.u.columns(0, rank).into_owned();
    let r_good = svd.v.columns(0, rank).into_owned();
    let p_fill = orthonormal_complement(&p_good, k - rank)?;
    let r_fill = orthonormal_complement(&r_good, k - rank)?;
    Ok(p_good * r_good.transpose() + p_fill * r_fill.transpose())
}

/// Orthonormal `[U_m | W_m]` minimizing `||X_m/sqrt(n_m) - U~ V~^T||_F` for
/// fixed `V~ = [V* | V_m]`: the polar factor `P R^T` of the SVD
/// `X_m V~ / sqrt(n_m) = P Q R^T`.
pub fn procrustes_update(
    dataset: &MultiViewDataset,
    m: usize,
    v_tilde: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    procrustes(&dataset.scaled_view(m)?, v_tilde)
}

fn check_basis(dataset: &MultiViewDataset, m: usize, basis: &DMatrix<f64>, what: &str) -> Result<()> {
    if basis.nrows() != dataset.n_samples(m) {
        return Err(Error::ShapeMismatch(format!(
            "{what} for view {m} has {} rows, view has {} samples",
            basis.nrows(),
            dataset.n_samples(m)
        )));
    }
    Ok(())
}

/// `V_m` column j = soft-threshold of `X_m^T W_j / sqrt(n_m)` at `lambda_view[j]`.
pub fn update_v_view(
    dataset: &MultiViewDataset,
    m: usize,
    w: &DMatrix<f64>,
    lambda_view: &[f64],
) -> Result<DMatrix<f64>> {
    let xs = dataset.scaled_view(m)?;
    check_basis(dataset, m, w, "W")?;
    if lambda_view.len() != w.ncols() {
        return Err(Error::ShapeMismatch(format!(
            "{} penalties for r = {}",
            lambda_view.len(),
            w.ncols()
        )));
    }
    if let Some(&bad) = lambda_view.iter().find(|l| !(**l >= 0.0)) {
        return Err(Error::NegativeLambda(bad));
    }
    threshold_columns(xs.transpose() * w, ColumnRule::Lambda(lambda_view))
}

/// Fixed-count variant of [`update_v_view`].
pub fn update_v_view_count(
    dataset: &MultiViewDataset,
    m: usize,
    w: &DMatrix<f64>,
    counts: &[usize],
) -> Result<DMatrix<f64>> {
    let xs = dataset.scaled_view(m)?;
    check_basis(dataset, m, w, "W")?;
    if counts.len() != w.ncols() {
        return Err(Error::ShapeMismatch(format!(
            "{} counts for r = {}",
            counts.len(),
            w.ncols()
        )));
    }
    threshold_columns(xs.transpose() * w, ColumnRule::Count(counts))
}

fn shared_projection(xs: &[DMatrix<f64>], u: &[DMatrix<f64>], d: usize, p: usize) -> DMatrix<f64> {
    let mut acc = DMatrix::zeros(p, d);
    for (x, um) in xs.iter().zip(u) {
        acc.gemm(1.0, &x.transpose(), um, 1.0);
    }
    acc / xs.len() as f64
}

fn check_u(dataset: &MultiViewDataset, u: &[DMatrix<f64>], d: usize) -> Result<()> {
    if u.len() != dataset.n_views() {
        return Err(Error::ShapeMismatch(format!(
            "{} U blocks for {} views",
            u.len(),
            dataset.n_views()
        )));
    }
    for (m, um) in u.iter().enumerate() {
        check_basis(dataset, m, um, "U")?;
        if um.ncols() != d {
            return Err(Error::ShapeMismatch(format!(
                "U for view {m} has {} columns, expected {d}",
                um.ncols()
            )));
        }
    }
    Ok(())
}

/// `V*` column i = soft-threshold of `(1/M) sum_m X_m^T U_m,i / sqrt(n_m)`
/// at `lambda_star[i]`.
pub fn update_v_star(
    dataset: &MultiViewDataset,
    u: &[DMatrix<f64>],
    lambda_star: &[f64],
) -> Result<DMatrix<f64>> {
    let d = lambda_star.len();
    check_u(dataset, u, d)?;
    if let Some(&bad) = lambda_star.iter().find(|l| !(**l >= 0.0)) {
        return Err(Error::NegativeLambda(bad));
    }
    let proj = shared_projection(&dataset.scaled_views(), u, d, dataset.n_vars());
    threshold_columns(proj, ColumnRule::Lambda(lambda_star))
}

/// Fixed-count variant of [`update_v_star`].
pub fn update_v_star_count(
    dataset: &MultiViewDataset,
    u: &[DMatrix<f64>],
    counts: &[usize],
) -> Result<DMatrix<f64>> {
    let d = counts.len();
    check_u(dataset, u, d)?;
    let proj = shared_projection(&dataset.scaled_views(), u, d, dataset.n_vars());
    threshold_columns(proj, ColumnRule::Count(counts))
}

/// Runs the estimation algorithm from the default SVD initialization.
pub fn fit(dataset: &MultiViewDataset, config: &FitConfig) -> Result<FitResult> {
    config.validate(dataset)?;
    let init = initialize(dataset, config.d, config.r)?;
    fit_from(dataset, config, init)
}

/// Runs the estimation algorithm from a caller-supplied starting model; only
/// its loadings matter since the first step re-estimates `U_m` and `W_m`.
pub fn fit_from(
    dataset: &MultiViewDataset,
    config: &FitConfig,
    start: FactorModel,
) -> Result<FitResult> {
    config.validate(dataset)?;
    check_nonzero_variance(dataset)?;
    start.check_shapes(dataset)?;
    if start.d() != config.d || start.r() != config.r {
        return Err(Error::ShapeMismatch(format!(
            "starting model has (d, r) = ({}, {}), config asks for ({}, {})",
            start.d(),
            start.r(),
            config.d,
            config.r
        )));
    }
    let (d, r) = (config.d, config.r);
    let p = dataset.n_vars();
    let xs = dataset.scaled_views();
    let (mut u, mut w, mut v_star, mut v) = start.into_parts();

    let mut trace: Vec<f64> = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    for it in 1..=config.max_outer_iters {
        iterations = it;
        for (m, x) in xs.iter().enumerate() {
            let ut = procrustes(x, &stack_columns(&v_star, &v[m]))?;
            u[m] = ut.columns(0, d).into_owned();
            w[m] = ut.columns(d, r).into_owned();
        }
        for _ in 0..config.inner_passes {
            for (m, x) in xs.iter().enumerate() {
                let proj = x.transpose() * &w[m];
                v[m] = match &config.reg {
                    RegularizationSpec::FixedLambda { lambda_view, .. } => {
                        threshold_columns(proj, ColumnRule::Lambda(&lambda_view[m]))?
                    }
                    RegularizationSpec::FixedCount { count_view, .. } => {
                        threshold_columns(proj, ColumnRule::Count(&count_view[m]))?
                    }
                };
            }
            let proj = shared_projection(&xs, &u, d, p);
            v_star = match &config.reg {
                RegularizationSpec::FixedLambda { lambda_star, .. } => {
                    threshold_columns(proj, ColumnRule::Lambda(lambda_star))?
                }
                RegularizationSpec::FixedCount { count_star, .. } => {
                    threshold_columns(proj, ColumnRule::Count(count_star))?
                }
            };
        }
        let mut value = loss_parts(&xs, &u, &w, &v_star, &v);
        if let RegularizationSpec::FixedLambda {
            lambda_star,
            lambda_view,
        } = &config.reg
        {
            value += penalty_parts(&v_star, &v, lambda_star, lambda_view);
        }
        if !value.is_finite() {
            return Err(Error::Numerical(format!(
                "objective became non-finite at iteration {it}"
            )));
        }
        if let Some(&prev) = trace.last() {
            let change = (value - prev).abs() / f64::max(prev, 1e-12);
            trace.push(value);
            if change < config.rel_tol {
                converged = true;
                break;
            }
        } else {
            trace.push(value);
        }
    }
    Ok(FitResult {
        model: FactorModel::from_parts_unchecked(u, w, v_star, v),
        objective_trace: trace,
        converged,
        iterations,
    })
}

/// One row of the (d, r) grid scan; percentages per view.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridRow {
    pub d: usize,
    pub r: usize,
    pub pct_shared: Vec<f64>,
    pub pct_specific: Vec<f64>,
    pub pct_total: Vec<f64>,
}

/// Fits the non-sparse model at every (d, r) pair and reports the variance
/// explained per view. Rows are sorted by (d, r).
pub fn variance_grid(
    dataset: &MultiViewDataset,
    d_values: &[usize],
    r_values: &[usize],
    config: &FitConfig,
) -> Result<Vec<GridRow>> {
    let mut pairs: Vec<(usize, usize)> = d_values
        .iter()
        .flat_map(|&d| r_values.iter().map(move |&r| (d, r)))
        .collect();
    pairs.sort_unstable();
    pairs.dedup();
    let m = dataset.n_views();
    pairs
        .into_iter()
        .map(|(d, r)| {
            let cfg = FitConfig {
                d,
                r,
                reg: RegularizationSpec::none(d, r, m),
                ..config.clone()
            };
            let fitted = fit(dataset, &cfg)?;
            let rep = fitted.model.variance_report(dataset)?;
            let pct_total = (0..m).map(|k| rep.pct_total(k)).collect();
            Ok(GridRow {
                d,
                r,
                pct_shared: rep.pct_shared,
                pct_specific: rep.pct_specific,
                pct_total,
            })
        })
        .collect()
}
