//! Multi-view data container, the shared/specific factor model and its
//! variance accounting.
//!
//! Each view `X_m` (n_m x p, column-centered) is approximated after scaling
//! by `1/sqrt(n_m)` as
//!
//! ```text
//! X_m / sqrt(n_m) ~ U_m V*^T + W_m V_m^T
//! ```
//!
//! with `U_m^T U_m = I_d`, `W_m^T W_m = I_r` and `U_m^T W_m = 0`. Under those
//! constraints the variance explained in view m splits exactly into
//! `tr(V* V*^T) + tr(V_m V_m^T)`.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::{gram_identity_residual, max_abs};

/// Default tolerance on column means for a view to count as centered.
pub const CENTERING_TOL: f64 = 1e-10;
/// Default entrywise tolerance for the orthogonality constraints.
pub const CONSTRAINT_TOL: f64 = 1e-8;
/// Constraint tolerance required before a variance decomposition is reported.
pub const REPORT_CONSTRAINT_TOL: f64 = 1e-6;

/// Subtracts each column's mean.
pub fn center_columns(x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if x.nrows() == 0 || x.ncols() == 0 {
        return Err(Error::InvalidInput("cannot center an empty matrix".into()));
    }
    let mut out = x.clone();
    for mut col in out.column_iter_mut() {
        let mean = col.mean();
        col.add_scalar_mut(-mean);
    }
    Ok(out)
}

fn is_centered(x: &DMatrix<f64>, tol: f64) -> bool {
    x.column_iter().all(|col| {
        let scale = col.iter().fold(1.0f64, |a, v| a.max(v.abs()));
        col.mean().abs() <= tol * scale
    })
}

/// M column-centered views over a common, ordered set of p variables.
#[derive(Debug, Clone)]
pub struct MultiViewDataset {
    views: Vec<DMatrix<f64>>,
    variable_names: Vec<String>,
    sample_ids: Vec<Vec<String>>,
    group_labels: Option<Vec<Vec<String>>>,
}

impl MultiViewDataset {
    /// Builds a dataset from views that are already centered (checked at
    /// `CENTERING_TOL`, relative to each column's magnitude when it exceeds 1).
    pub fn new(
        views: Vec<DMatrix<f64>>,
        variable_names: Vec<String>,
        sample_ids: Vec<Vec<String>>,
        group_labels: Option<Vec<Vec<String>>>,
    ) -> Result<Self> {
        if views.is_empty() {
            return Err(Error::InvalidInput("at least one view is required".into()));
        }
        let p = variable_names.len();
        if p == 0 {
            return Err(Error::InvalidInput("at least one variable is required".into()));
        }
        if sample_ids.len() != views.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} sample-id lists for {} views",
                sample_ids.len(),
                views.len()
            )));
        }
        for (m, x) in views.iter().enumerate() {
            if x.nrows() == 0 {
                return Err(Error::InvalidInput(format!("view {m} has no samples")));
            }
            if x.ncols() != p {
                return Err(Error::ShapeMismatch(format!(
                    "view {m} has {} columns, expected {p}",
                    x.ncols()
                )));
            }
            if sample_ids[m].len() != x.nrows() {
                return Err(Error::ShapeMismatch(format!(
                    "view {m} has {} rows but {} sample ids",
                    x.nrows(),
                    sample_ids[m].len()
                )));
            }
            if x.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidInput(format!("view {m} has non-finite entries")));
            }
            if !is_centered(x, CENTERING_TOL) {
                return Err(Error::InvalidInput(format!("view {m} is not column-centered")));
            }
        }
        if let Some(groups) = &group_labels {
            if groups.len() != views.len()
                || groups.iter().zip(&views).any(|(g, x)| g.len() != x.nrows())
            {
                return Err(Error::ShapeMismatch(
                    "group labels must give one tag per sample in every view".into(),
                ));
            }
        }
        Ok(MultiViewDataset {
            views,
            variable_names,
            sample_ids,
            group_labels,
        })
    }

    /// Centers every view, then builds the dataset.
    pub fn from_uncentered(
        views: Vec<DMatrix<f64>>,
        variable_names: Vec<String>,
        sample_ids: Vec<Vec<String>>,
        group_labels: Option<Vec<Vec<String>>>,
    ) -> Result<Self> {
        let views = views
            .iter()
            .map(center_columns)
            .collect::<Result<Vec<_>>>()?;
        Self::new(views, variable_names, sample_ids, group_labels)
    }

    /// Centers the views and generates names `V1..Vp` and sample ids `S1..Sn`.
    pub fn from_views(views: Vec<DMatrix<f64>>) -> Result<Self> {
        let p = views.first().map_or(0, |v| v.ncols());
        let names = (1..=p).map(|j| format!("V{j}")).collect();
        let ids = views
            .iter()
            .map(|x| (1..=x.nrows()).map(|i| format!("S{i}")).collect())
            .collect();
        Self::from_uncentered(views, names, ids, None)
    }

    pub fn n_views(&self) -> usize {
        self.views.len()
    }

    pub fn n_vars(&self) -> usize {
        self.variable_names.len()
    }

    pub fn n_samples(&self, m: usize) -> usize {
        self.views[m].nrows()
    }

    pub fn views(&self) -> &[DMatrix<f64>] {
        &self.views
    }

    pub fn view(&self, m: usize) -> Result<&DMatrix<f64>> {
        self.views.get(m).ok_or(Error::IndexOutOfRange {
            index: m,
            len: self.views.len(),
        })
    }

    pub fn variable_names(&self) -> &[String] {
        &self.variable_names
    }

    pub fn sample_ids(&self, m: usize) -> &[String] {
        &self.sample_ids[m]
    }

    pub fn group_labels(&self, m: usize) -> Option<&[String]> {
        self.group_labels.as_ref().map(|g| g[m].as_slice())
    }

    /// `X_m / sqrt(n_m)`.
    pub fn scaled_view(&self, m: usize) -> Result<DMatrix<f64>> {
        let x = self.view(m)?;
        Ok(x / (x.nrows() as f64).sqrt())
    }

    pub fn scaled_views(&self) -> Vec<DMatrix<f64>> {
        self.views
            .iter()
            .map(|x| x / (x.nrows() as f64).sqrt())
            .collect()
    }

    /// Total sample variance of view m: `tr(X_m^T X_m) / n_m`.
    pub fn total_variance(&self, m: usize) -> Result<f64> {
        let x = self.view(m)?;
        Ok(x.norm_squared() / x.nrows() as f64)
    }

    /// Extracts the given rows of every view and re-centers the columns.
    pub fn select_rows(&self, rows: &[Vec<usize>]) -> Result<Self> {
        if rows.len() != self.n_views() {
            return Err(Error::ShapeMismatch(format!(
                "{} row selections for {} views",
                rows.len(),
                self.n_views()
            )));
        }
        let mut views = Vec::with_capacity(rows.len());
        let mut ids = Vec::with_capacity(rows.len());
        let mut groups = self.group_labels.as_ref().map(|_| Vec::new());
        for (m, sel) in rows.iter().enumerate() {
            let x = &self.views[m];
            if let Some(&bad) = sel.iter().find(|&&i| i >= x.nrows()) {
                return Err(Error::InvalidInput(format!(
                    "row {bad} out of range for view {m}"
                )));
            }
            views.push(x.select_rows(sel));
            ids.push(sel.iter().map(|&i| self.sample_ids[m][i].clone()).collect());
            if let (Some(out), Some(src)) = (groups.as_mut(), self.group_labels.as_ref()) {
                out.push(sel.iter().map(|&i| src[m][i].clone()).collect());
            }
        }
        Self::from_uncentered(views, self.variable_names.clone(), ids, groups)
    }
}

/// The fitted factors: per-view `U_m` (n_m x d), `W_m` (n_m x r), `V_m`
/// (p x r) and the shared `V*` (p x d).
#[derive(Debug, Clone, PartialEq)]
pub struct FactorModel {
    d: usize,
    r: usize,
    u: Vec<DMatrix<f64>>,
    w: Vec<DMatrix<f64>>,
    v_star: DMatrix<f64>,
    v: Vec<DMatrix<f64>>,
}

impl FactorModel {
    pub fn new(
        u: Vec<DMatrix<f64>>,
        w: Vec<DMatrix<f64>>,
        v_star: DMatrix<f64>,
        v: Vec<DMatrix<f64>>,
    ) -> Result<Self> {
        let (p, d) = v_star.shape();
        let m = u.len();
        if m == 0 || w.len() != m || v.len() != m {
            return Err(Error::ShapeMismatch(format!(
                "need one U, W and V per view, got {}, {}, {}",
                u.len(),
                w.len(),
                v.len()
            )));
        }
        let r = v[0].ncols();
        for k in 0..m {
            if u[k].ncols() != d || w[k].ncols() != r || v[k].ncols() != r {
                return Err(Error::ShapeMismatch(format!(
                    "view {k}: ranks of U ({}), W ({}), V ({}) disagree with d={d}, r={r}",
                    u[k].ncols(),
                    w[k].ncols(),
                    v[k].ncols()
                )));
            }
            if u[k].nrows() != w[k].nrows() {
                return Err(Error::ShapeMismatch(format!(
                    "view {k}: U has {} rows, W has {}",
                    u[k].nrows(),
                    w[k].nrows()
                )));
            }
            if v[k].nrows() != p {
                return Err(Error::ShapeMismatch(format!(
                    "view {k}: V has {} rows, V* has {p}",
                    v[k].nrows()
                )));
            }
        }
        Ok(FactorModel {
            d,
            r,
            u,
            w,
            v_star,
            v,
        })
    }

    pub(crate) fn from_parts_unchecked(
        u: Vec<DMatrix<f64>>,
        w: Vec<DMatrix<f64>>,
        v_star: DMatrix<f64>,
        v: Vec<DMatrix<f64>>,
    ) -> Self {
        FactorModel {
            d: v_star.ncols(),
            r: v.first().map_or(0, |x| x.ncols()),
            u,
            w,
            v_star,
            v,
        }
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn n_views(&self) -> usize {
        self.u.len()
    }

    pub fn n_vars(&self) -> usize {
        self.v_star.nrows()
    }

    pub fn u(&self, m: usize) -> &DMatrix<f64> {
        &self.u[m]
    }

    pub fn w(&self, m: usize) -> &DMatrix<f64> {
        &self.w[m]
    }

    pub fn v_star(&self) -> &DMatrix<f64> {
        &self.v_star
    }

    pub fn v(&self, m: usize) -> &DMatrix<f64> {
        &self.v[m]
    }

    pub fn v_views(&self) -> &[DMatrix<f64>] {
        &self.v
    }

    pub(crate) fn into_parts(
        self,
    ) -> (
        Vec<DMatrix<f64>>,
        Vec<DMatrix<f64>>,
        DMatrix<f64>,
        Vec<DMatrix<f64>>,
    ) {
        (self.u, self.w, self.v_star, self.v)
    }

    fn check_view(&self, m: usize) -> Result<()> {
        if m >= self.n_views() {
            return Err(Error::IndexOutOfRange {
                index: m,
                len: self.n_views(),
            });
        }
        Ok(())
    }

    /// Checks the model's dimensions against a dataset.
    pub fn check_shapes(&self, dataset: &MultiViewDataset) -> Result<()> {
        if dataset.n_views() != self.n_views() {
            return Err(Error::ShapeMismatch(format!(
                "model has {} views, dataset has {}",
                self.n_views(),
                dataset.n_views()
            )));
        }
        if dataset.n_vars() != self.n_vars() {
            return Err(Error::ShapeMismatch(format!(
                "model has {} variables, dataset has {}",
                self.n_vars(),
                dataset.n_vars()
            )));
        }
        for m in 0..self.n_views() {
            if self.u[m].nrows() != dataset.n_samples(m) {
                return Err(Error::ShapeMismatch(format!(
                    "view {m}: model has {} samples, dataset has {}",
                    self.u[m].nrows(),
                    dataset.n_samples(m)
                )));
            }
        }
        Ok(())
    }

    /// Shared component `S_m = U_m V*^T`.
    pub fn shared_component(&self, m: usize) -> Result<DMatrix<f64>> {
        self.check_view(m)?;
        Ok(&self.u[m] * self.v_star.transpose())
    }

    /// View-specific component `T_m = W_m V_m^T`.
    pub fn specific_component(&self, m: usize) -> Result<DMatrix<f64>> {
        self.check_view(m)?;
        Ok(&self.w[m] * self.v[m].transpose())
    }

    /// `S_m + T_m`.
    pub fn reconstruction(&self, m: usize) -> Result<DMatrix<f64>> {
        Ok(self.shared_component(m)? + self.specific_component(m)?)
    }

    pub fn check_constraints(&self, tol: f64) -> ConstraintReport {
        let views: Vec<ViewResiduals> = (0..self.n_views())
            .map(|m| ViewResiduals {
                utu: gram_identity_residual(&self.u[m]),
                wtw: gram_identity_residual(&self.w[m]),
                utw: max_abs(&(self.u[m].transpose() * &self.w[m])),
            })
            .collect();
        let passed = views.iter().all(|v| v.max() <= tol);
        ConstraintReport { views, tol, passed }
    }

    /// Per-variable shared variance: squared row norms of `V*`. Identical in
    /// every view by construction.
    pub fn shared_variance_by_variable(&self) -> Vec<f64> {
        self.v_star.row_iter().map(|r| r.norm_squared()).collect()
    }

    /// Per-variable specific variance in view m: squared row norms of `V_m`.
    pub fn specific_variance_by_variable(&self, m: usize) -> Vec<f64> {
        self.v[m].row_iter().map(|r| r.norm_squared()).collect()
    }

    /// Variance decomposition; refuses when the constraints fail at
    /// `REPORT_CONSTRAINT_TOL`, since the split is only additive under them.
    pub fn variance_report(&self, dataset: &MultiViewDataset) -> Result<VarianceReport> {
        self.variance_report_with_tol(dataset, REPORT_CONSTRAINT_TOL)
    }

    pub fn variance_report_with_tol(
        &self,
        dataset: &MultiViewDataset,
        tol: f64,
    ) -> Result<VarianceReport> {
        self.check_shapes(dataset)?;
        let report = self.check_constraints(tol);
        if !report.passed {
            return Err(Error::ConstraintViolated {
                residual: report.max_residual(),
                tol,
            });
        }
        let sigma_star = self.v_star.norm_squared();
        let sigma_m: Vec<f64> = self.v.iter().map(|v| v.norm_squared()).collect();
        let total_per_view: Vec<f64> = sigma_m.iter().map(|s| sigma_star + s).collect();
        let sample_variance_per_view = (0..dataset.n_views())
            .map(|m| dataset.total_variance(m))
            .collect::<Result<Vec<_>>>()?;
        if let Some(m) = sample_variance_per_view.iter().position(|&v| v <= 0.0) {
            return Err(Error::Degenerate(format!("view {m} has zero variance")));
        }
        let pct_shared = sample_variance_per_view
            .iter()
            .map(|v| 100.0 * sigma_star / v)
            .collect();
        let pct_specific = sigma_m
            .iter()
            .zip(&sample_variance_per_view)
            .map(|(s, v)| 100.0 * s / v)
            .collect();
        Ok(VarianceReport {
            sigma_star,
            sigma_m,
            total_per_view,
            sample_variance_per_view,
            pct_shared,
            pct_specific,
        })
    }
}

/// Largest absolute residuals of the three orthogonality constraints in one view.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ViewResiduals {
    pub utu: f64,
    pub wtw: f64,
    pub utw: f64,
}

impl ViewResiduals {
    pub fn max(&self) -> f64 {
        self.utu.max(self.wtw).max(self.utw)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintReport {
    pub views: Vec<ViewResiduals>,
    pub tol: f64,
    pub passed: bool,
}

impl ConstraintReport {
    pub fn max_residual(&self) -> f64 {
        self.views.iter().map(ViewResiduals::max).fold(0.0, f64::max)
    }
}

/// Shared and specific variance explained, absolute and as a percentage of
/// each view's total sample variance.
#[derive(Debug, Clone, PartialEq)]
pub struct VarianceReport {
    pub sigma_star: f64,
    pub sigma_m: Vec<f64>,
    pub total_per_view: Vec<f64>,
    pub sample_variance_per_view: Vec<f64>,
    pub pct_shared: Vec<f64>,
    pub pct_specific: Vec<f64>,
}

impl VarianceReport {
    pub fn pct_total(&self, m: usize) -> f64 {
        self.pct_shared[m] + self.pct_specific[m]
    }

    /// Percentage left unexplained in view m.
    pub fn pct_residual(&self, m: usize) -> f64 {
        100.0 - self.pct_total(m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Svd;
    use approx::assert_abs_diff_eq;
    use nalgebra::dmatrix;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(rng: &mut ChaCha8Rng, n: usize, p: usize) -> DMatrix<f64> {
        DMatrix::from_fn(n, p, |_, _| rng.random_range(-1.0..1.0))
    }

    /// U, W with orthonormal, mutually orthogonal columns from the QR of a
    /// random n x (d+r) block.
    fn orthonormal_pair(
        rng: &mut ChaCha8Rng,
        n: usize,
        d: usize,
        r: usize,
    ) -> (DMatrix<f64>, DMatrix<f64>) {
        let q = random_matrix(rng, n, d + r).qr().q();
        (q.columns(0, d).into_owned(), q.columns(d, r).into_owned())
    }

    fn random_model(seed: u64, ns: &[usize], p: usize, d: usize, r: usize) -> FactorModel {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut u = vec![];
        let mut w = vec![];
        let mut v = vec![];
        for &n in ns {
            let (a, b) = orthonormal_pair(&mut rng, n, d, r);
            u.push(a);
            w.push(b);
            v.push(random_matrix(&mut rng, p, r) * 3.0);
        }
        let v_star = random_matrix(&mut rng, p, d) * 2.0;
        FactorModel::new(u, w, v_star, v).unwrap()
    }

    #[test]
    fn center_columns_examples() {
        let x = dmatrix![1.0, 2.0; 3.0, 4.0];
        assert_eq!(center_columns(&x).unwrap(), dmatrix![-1.0, -1.0; 1.0, 1.0]);
        let c = dmatrix![-1.0, 2.0; 1.0, -2.0];
        assert_eq!(center_columns(&c).unwrap(), c);
        assert_eq!(center_columns(&dmatrix![5.0, 7.0]).unwrap(), dmatrix![0.0, 0.0]);
        assert!(center_columns(&DMatrix::zeros(0, 3)).is_err());
    }

    #[test]
    fn dataset_rejects_uncentered_and_mismatched() {
        let x = dmatrix![1.0, 2.0; 3.0, 4.0];
        let names = vec!["a".to_string(), "b".to_string()];
        let ids = vec![vec!["s1".to_string(), "s2".to_string()]];
        assert!(MultiViewDataset::new(vec![x.clone()], names.clone(), ids.clone(), None).is_err());
        assert!(MultiViewDataset::from_uncentered(vec![x.clone()], names, ids, None).is_ok());
        let y = DMatrix::from_element(2, 3, 0.0);
        assert!(MultiViewDataset::from_views(vec![x, y]).is_err());
        assert!(MultiViewDataset::from_views(vec![]).is_err());
    }

    #[test]
    fn scaled_view_examples() {
        let x = dmatrix![2.0, -2.0; -2.0, 2.0; 2.0, -2.0; -2.0, 2.0];
        let ds = MultiViewDataset::from_views(vec![x]).unwrap();
        let s = ds.scaled_view(0).unwrap();
        assert_eq!(s[(0, 0)], 1.0);
        assert!(ds.scaled_view(1).is_err());

        let one = MultiViewDataset::from_views(vec![dmatrix![0.0, 0.0]]).unwrap();
        assert_eq!(one.scaled_view(0).unwrap(), dmatrix![0.0, 0.0]);
    }

    #[test]
    fn scaled_gram_trace_equals_column_variances() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let ds = MultiViewDataset::from_views(vec![random_matrix(&mut rng, 10, 3)]).unwrap();
        let s = ds.scaled_view(0).unwrap();
        let trace = (s.transpose() * &s).trace();
        // population variance (divisor n) of each centered column
        let x = ds.view(0).unwrap();
        let direct: f64 = x
            .column_iter()
            .map(|c| {
                let mean = c.iter().sum::<f64>() / 10.0;
                c.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 10.0
            })
            .sum();
        assert_abs_diff_eq!(trace, direct, epsilon = 1e-12);
        assert_abs_diff_eq!(ds.total_variance(0).unwrap(), direct, epsilon = 1e-12);
    }

    #[test]
    fn reconstruction_examples() {
        let empty = FactorModel::new(
            vec![DMatrix::zeros(3, 0)],
            vec![DMatrix::zeros(3, 0)],
            DMatrix::zeros(2, 0),
            vec![DMatrix::zeros(2, 0)],
        )
        .unwrap();
        assert_eq!(empty.reconstruction(0).unwrap(), DMatrix::zeros(3, 2));

        let model = random_model(1, &[5], 4, 1, 2);
        let zeroed = FactorModel::new(
            vec![model.u(0).clone()],
            vec![model.w(0).clone()],
            DMatrix::zeros(4, 1),
            vec![DMatrix::zeros(4, 2)],
        )
        .unwrap();
        assert_eq!(zeroed.reconstruction(0).unwrap(), DMatrix::zeros(5, 4));

        // independent oracle: explicit triple loops
        let rec = model.reconstruction(0).unwrap();
        for i in 0..5 {
            for j in 0..4 {
                let mut acc = 0.0;
                for k in 0..1 {
                    acc += model.u(0)[(i, k)] * model.v_star()[(j, k)];
                }
                for k in 0..2 {
                    acc += model.w(0)[(i, k)] * model.v(0)[(j, k)];
                }
                assert_abs_diff_eq!(rec[(i, j)], acc, epsilon = 1e-13);
            }
        }
        assert!(model.reconstruction(3).is_err());
    }

    #[test]
    fn constraint_check_examples() {
        let id = DMatrix::<f64>::identity(5, 5);
        let model = FactorModel::new(
            vec![id.columns(0, 2).into_owned()],
            vec![id.columns(2, 2).into_owned()],
            DMatrix::zeros(3, 2),
            vec![DMatrix::zeros(3, 2)],
        )
        .unwrap();
        let rep = model.check_constraints(CONSTRAINT_TOL);
        assert!(rep.passed);
        assert_eq!(rep.max_residual(), 0.0);

        let mut dup = id.columns(0, 2).into_owned();
        dup.set_column(1, &id.column(0));
        let bad = FactorModel::new(
            vec![dup],
            vec![id.columns(2, 2).into_owned()],
            DMatrix::zeros(3, 2),
            vec![DMatrix::zeros(3, 2)],
        )
        .unwrap();
        let rep = bad.check_constraints(CONSTRAINT_TOL);
        assert!(!rep.passed);
        assert_eq!(rep.views[0].utu, 1.0);
    }

    #[test]
    fn variance_report_examples() {
        let id = DMatrix::<f64>::identity(4, 4);
        let mut v_star = DMatrix::zeros(3, 1);
        v_star[(0, 0)] = 2.0;
        let model = FactorModel::new(
            vec![id.columns(0, 1).into_owned()],
            vec![id.columns(1, 1).into_owned()],
            v_star,
            vec![DMatrix::zeros(3, 1)],
        )
        .unwrap();
        let x = dmatrix![1.0, 0.0, 2.0; -1.0, 1.0, 0.0; 1.0, -1.0, 0.0; -1.0, 0.0, -2.0];
        let ds = MultiViewDataset::from_views(vec![x]).unwrap();
        let rep = model.variance_report(&ds).unwrap();
        assert_eq!(rep.sigma_star, 4.0);
        assert_eq!(rep.sigma_m, vec![0.0]);
        assert_eq!(rep.total_per_view[0], rep.sigma_star + rep.sigma_m[0]);
        // total variance = (4 + 2 + 8) / 4
        assert_abs_diff_eq!(rep.sample_variance_per_view[0], 3.5, epsilon = 1e-14);
        assert_abs_diff_eq!(rep.pct_shared[0], 400.0 / 3.5, epsilon = 1e-10);
    }

    #[test]
    fn variance_report_refuses_broken_constraints() {
        let model = FactorModel::new(
            vec![DMatrix::from_element(4, 1, 1.0)],
            vec![DMatrix::zeros(4, 0)],
            DMatrix::zeros(2, 1),
            vec![DMatrix::zeros(2, 0)],
        )
        .unwrap();
        let ds = MultiViewDataset::from_views(vec![dmatrix![1.0, 0.0; -1.0, 1.0; 0.0, -1.0; 0.0, 0.0]])
            .unwrap();
        assert!(matches!(
            model.variance_report(&ds),
            Err(Error::ConstraintViolated { .. })
        ));
    }

    #[test]
    fn shape_validation() {
        let r = FactorModel::new(
            vec![DMatrix::zeros(3, 1)],
            vec![DMatrix::zeros(4, 1)],
            DMatrix::zeros(2, 1),
            vec![DMatrix::zeros(2, 1)],
        );
        assert!(matches!(r, Err(Error::ShapeMismatch(_))));
    }

    #[test]
    fn shared_variance_per_variable_is_view_invariant() {
        let model = random_model(3, &[6, 9, 7], 5, 2, 1);
        let per_var = model.shared_variance_by_variable();
        for m in 0..3 {
            // diag(S_m^T S_m) = diag(V* U_m^T U_m V*^T) = row norms of V*
            let s = model.shared_component(m).unwrap();
            let diag = (s.transpose() * s).diagonal();
            for j in 0..5 {
                assert_abs_diff_eq!(diag[j], per_var[j], epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn svd_based_orthonormal_factors_pass() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let svd = Svd::new(&random_matrix(&mut rng, 8, 5)).unwrap();
        let model = FactorModel::new(
            vec![svd.u.columns(0, 2).into_owned()],
            vec![svd.u.columns(2, 3).into_owned()],
            DMatrix::zeros(5, 2),
            vec![DMatrix::zeros(5, 3)],
        )
        .unwrap();
        assert!(model.check_constraints(CONSTRAINT_TOL).passed);
    }

    proptest! {
        #[test]
        fn centering_is_idempotent(vals in prop::collection::vec(-100.0f64..100.0, 12)) {
            let x = DMatrix::from_vec(4, 3, vals);
            let once = center_columns(&x).unwrap();
            let twice = center_columns(&once).unwrap();
            prop_assert!((once - twice).amax() < 1e-12);
        }

        #[test]
        fn variance_is_additive_under_constraints(seed in 0u64..10_000, d in 0usize..3, r in 0usize..3) {
            let ns = [7usize, 9];
            let model = random_model(seed, &ns, 6, d, r);
            prop_assert!(model.check_constraints(CONSTRAINT_TOL).passed);
            let sigma_star = model.v_star().norm_squared();
            for m in 0..2 {
                let s = model.shared_component(m).unwrap();
                let t = model.specific_component(m).unwrap();
                let total = s.norm_squared() + t.norm_squared() + 2.0 * (s.transpose() * &t).trace();
                let sigma_m = model.v(m).norm_squared();
                prop_assert!((total - (sigma_star + sigma_m)).abs() < 1e-6);
            }
        }

        #[test]
        fn reconstruction_is_linear_in_v(seed in 0u64..10_000, c in -3.0f64..3.0) {
            let model = random_model(seed, &[6], 4, 1, 2);
            let scaled = FactorModel::new(
                vec![model.u(0).clone()],
                vec![model.w(0).clone()],
                model.v_star().clone(),
                vec![model.v(0) * c],
            ).unwrap();
            let t = model.specific_component(0).unwrap();
            let t_scaled = scaled.specific_component(0).unwrap();
            prop_assert!((t * c - t_scaled).amax() < 1e-12);
        }
    }
}
