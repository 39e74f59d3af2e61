//! Delimited-text input and CSV output.
//!
//! Matrices are read with variable names in the first row and sample ids in
//! the first column. Numbers are written with Rust's shortest round-trip
//! formatting, so reading a written file reproduces every value bit for bit.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;

use crate::linalg::Svd;
use crate::model::{MultiViewDataset, VarianceReport};
use crate::simulation::Heatmap;
use crate::stability::SelectionProfile;
use crate::{Error, Result};

/// Options for [`load_matrix`].
#[derive(Debug, Clone, Default)]
pub struct LoadOptions {
    /// Field delimiter. When `None`, `.tsv`/`.tab`/`.txt` files use a tab
    /// and everything else a comma.
    pub delimiter: Option<u8>,
    /// Header name of a column holding group labels instead of values.
    pub group_column: Option<String>,
}

/// A numeric matrix with sample ids, variable names and optional group tags.
#[derive(Debug, Clone, PartialEq)]
pub struct NamedMatrix {
    pub sample_ids: Vec<String>,
    pub variable_names: Vec<String>,
    pub values: DMatrix<f64>,
    pub groups: Option<Vec<String>>,
}

impl NamedMatrix {
    /// Returns a copy with columns permuted to follow `order`.
    pub fn reorder_columns(&self, order: &[String]) -> Result<NamedMatrix> {
        let index: HashMap<&str, usize> = self
            .variable_names
            .iter()
            .enumerate()
            .map(|(j, n)| (n.as_str(), j))
            .collect();
        let cols = order
            .iter()
            .map(|n| {
                index.get(n.as_str()).copied().ok_or_else(|| {
                    Error::InvalidInput(format!("variable {n:?} not present"))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(NamedMatrix {
            sample_ids: self.sample_ids.clone(),
            variable_names: order.to_vec(),
            values: self.values.select_columns(&cols),
            groups: self.groups.clone(),
        })
    }
}

fn delimiter_for(path: &Path, explicit: Option<u8>) -> u8 {
    if let Some(d) = explicit {
        return d;
    }
    match path.extension().and_then(|e| e.to_str()) {
        Some(ext) if ["tsv", "tab", "txt"].contains(&ext.to_ascii_lowercase().as_str()) => b'\t',
        _ => b',',
    }
}

fn parse_error(path: &Path, line: usize, column: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        column,
        message: message.into(),
    }
}

/// Reads a delimited matrix file.
pub fn load_matrix(path: impl AsRef<Path>, options: &LoadOptions) -> Result<NamedMatrix> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter_for(path, options.delimiter))
        .has_headers(false)
        .flexible(true)
        .from_path(path)?;
    let mut records = reader.records();
    let header = match records.next() {
        Some(r) => r?,
        None => return Err(parse_error(path, 1, 1, "file is empty")),
    };
    if header.len() < 2 {
        return Err(parse_error(path, 1, 1, "header needs an id column and at least one variable"));
    }
    let group_col = match &options.group_column {
        Some(name) => {
            let pos = header.iter().skip(1).position(|h| h == name).ok_or_else(|| {
                parse_error(path, 1, 1, format!("group column {name:?} not found in header"))
            })?;
            Some(pos + 1)
        }
        None => None,
    };
    let mut value_cols = Vec::new();
    let mut names = Vec::new();
    let mut seen = HashSet::new();
    for (c, h) in header.iter().enumerate().skip(1) {
        if Some(c) == group_col {
            continue;
        }
        let h = h.trim();
        if h.is_empty() {
            return Err(parse_error(path, 1, c + 1, "empty variable name"));
        }
        if !seen.insert(h.to_string()) {
            return Err(parse_error(path, 1, c + 1, format!("duplicated variable name {h:?}")));
        }
        names.push(h.to_string());
        value_cols.push(c);
    }
    if names.is_empty() {
        return Err(parse_error(path, 1, 1, "no variable columns"));
    }

    let width = header.len();
    let mut ids = Vec::new();
    let mut groups = group_col.map(|_| Vec::new());
    let mut data = Vec::new();
    let mut seen_ids = HashSet::new();
    for record in records {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.len() == 1 && record.get(0).is_some_and(|s| s.trim().is_empty()) {
            continue;
        }
        if record.len() != width {
            return Err(parse_error(
                path,
                line,
                record.len().min(width) + 1,
                format!("expected {width} fields, found {}", record.len()),
            ));
        }
        let id = record[0].trim().to_string();
        if !seen_ids.insert(id.clone()) {
            return Err(parse_error(path, line, 1, format!("duplicated sample id {id:?}")));
        }
        ids.push(id);
        if let (Some(g), Some(c)) = (groups.as_mut(), group_col) {
            g.push(record[c].trim().to_string());
        }
        for &c in &value_cols {
            let cell = record[c].trim();
            if cell.is_empty() {
                return Err(parse_error(path, line, c + 1, "missing value"));
            }
            let v: f64 = cell
                .parse()
                .map_err(|_| parse_error(path, line, c + 1, format!("non-numeric value {cell:?}")))?;
            if !v.is_finite() {
                return Err(parse_error(path, line, c + 1, format!("non-finite value {cell:?}")));
            }
            data.push(v);
        }
    }
    if ids.is_empty() {
        return Err(parse_error(path, 2, 1, "no data rows"));
    }
    let values = DMatrix::from_row_slice(ids.len(), names.len(), &data);
    Ok(NamedMatrix {
        sample_ids: ids,
        variable_names: names,
        values,
        groups,
    })
}

/// Writes a matrix in the format read by [`load_matrix`].
pub fn write_matrix(path: impl AsRef<Path>, matrix: &NamedMatrix) -> Result<()> {
    let mut header = vec!["sample".to_string()];
    if matrix.groups.is_some() {
        header.push("group".to_string());
    }
    header.extend(matrix.variable_names.iter().cloned());
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(&header)?;
    for (i, id) in matrix.sample_ids.iter().enumerate() {
        let mut row = vec![id.clone()];
        if let Some(g) = &matrix.groups {
            row.push(g[i].clone());
        }
        row.extend(matrix.values.row(i).iter().map(|v| v.to_string()));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Combines per-view matrices into a centered dataset.
///
/// Every view must carry the same variable set; views listing them in a
/// different order are reordered to match the first view. Group labels are
/// kept only when every view has them.
pub fn assemble_dataset(views: Vec<NamedMatrix>) -> Result<MultiViewDataset> {
    let first = views
        .first()
        .ok_or_else(|| Error::InvalidInput("at least one view is required".into()))?;
    let order = first.variable_names.clone();
    let reference: BTreeSet<&String> = order.iter().collect();
    for (m, v) in views.iter().enumerate().skip(1) {
        let other: BTreeSet<&String> = v.variable_names.iter().collect();
        if other != reference {
            return Err(Error::VariableMismatch {
                view: m,
                only_in_first: reference.difference(&other).map(|s| s.to_string()).collect(),
                only_in_other: other.difference(&reference).map(|s| s.to_string()).collect(),
            });
        }
    }
    let all_grouped = views.iter().all(|v| v.groups.is_some());
    let mut mats = Vec::with_capacity(views.len());
    let mut ids = Vec::with_capacity(views.len());
    let mut groups = Vec::with_capacity(views.len());
    for v in views {
        let v = if v.variable_names == order { v } else { v.reorder_columns(&order)? };
        mats.push(v.values);
        ids.push(v.sample_ids);
        if let Some(g) = v.groups {
            groups.push(g);
        }
    }
    MultiViewDataset::from_uncentered(mats, order, ids, all_grouped.then_some(groups))
}

/// Loads one file per view and assembles them into a dataset.
pub fn load_dataset<P: AsRef<Path>>(paths: &[P], options: &LoadOptions) -> Result<MultiViewDataset> {
    let views = paths
        .iter()
        .map(|p| load_matrix(p, options))
        .collect::<Result<Vec<_>>>()?;
    assemble_dataset(views)
}

/// Least-squares residuals of every column of `x` after regression on an
/// intercept plus the columns of `covariates`.
pub fn residualize(x: &DMatrix<f64>, covariates: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = x.nrows();
    if covariates.nrows() != n {
        return Err(Error::ShapeMismatch(format!(
            "covariates have {} rows, data has {n}",
            covariates.nrows()
        )));
    }
    let k = covariates.ncols() + 1;
    if k > n {
        return Err(Error::InvalidInput(format!(
            "{k} regressors for {n} samples: design is rank-deficient"
        )));
    }
    let mut design = DMatrix::from_element(n, k, 1.0);
    design.columns_mut(1, k - 1).copy_from(covariates);
    let svd = Svd::new(&design)?;
    let rank = svd.numerical_rank();
    if rank < k {
        return Err(Error::InvalidInput(format!(
            "covariate design (intercept plus {} columns) has rank {rank} < {k}",
            k - 1
        )));
    }
    let q = &svd.u;
    let fitted = q * (q.transpose() * x);
    Ok(x - fitted)
}

/// Residualizes `matrix` on covariates matched by sample id.
pub fn residualize_named(matrix: &NamedMatrix, covariates: &NamedMatrix) -> Result<NamedMatrix> {
    let index: HashMap<&str, usize> = covariates
        .sample_ids
        .iter()
        .enumerate()
        .map(|(i, id)| (id.as_str(), i))
        .collect();
    let rows = matrix
        .sample_ids
        .iter()
        .map(|id| {
            index.get(id.as_str()).copied().ok_or_else(|| {
                Error::InvalidInput(format!("sample {id:?} has no covariate row"))
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let cov = covariates.values.select_rows(&rows);
    Ok(NamedMatrix {
        values: residualize(&matrix.values, &cov)?,
        ..matrix.clone()
    })
}

fn fmt(v: f64) -> String {
    v.to_string()
}

fn write_rows(path: &Path, header: &[String], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes a selection profile as `variable,shared,<view labels...>`.
pub fn write_profile(path: impl AsRef<Path>, profile: &SelectionProfile) -> Result<()> {
    let mut header = vec!["variable".to_string(), "shared".to_string()];
    header.extend(profile.view_labels.iter().cloned());
    let rows = profile.variable_names.iter().enumerate().map(|(j, name)| {
        let mut r = vec![name.clone(), fmt(profile.shared_prob[j])];
        r.extend(profile.view_prob.iter().map(|v| fmt(v[j])));
        r
    });
    write_rows(path.as_ref(), &header, rows)
}

/// Reads a profile written by [`write_profile`]. Run counts and the
/// configuration are not stored in the table, so `n_runs` is 0 and
/// `config` is `None`.
pub fn read_profile(path: impl AsRef<Path>) -> Result<SelectionProfile> {
    let path = path.as_ref();
    let m = load_matrix(path, &LoadOptions { delimiter: Some(b','), group_column: None })?;
    if m.variable_names.first().map(String::as_str) != Some("shared") || m.variable_names.len() < 2 {
        return Err(parse_error(path, 1, 2, "expected columns variable,shared,<views...>"));
    }
    for (i, v) in m.values.iter().enumerate() {
        if !(0.0..=1.0).contains(v) {
            let (row, col) = (i % m.values.nrows(), i / m.values.nrows());
            return Err(parse_error(path, row + 2, col + 2, format!("probability {v} outside [0, 1]")));
        }
    }
    Ok(SelectionProfile {
        variable_names: m.sample_ids,
        view_labels: m.variable_names[1..].to_vec(),
        shared_prob: m.values.column(0).iter().copied().collect(),
        view_prob: (1..m.values.ncols())
            .map(|c| m.values.column(c).iter().copied().collect())
            .collect(),
        n_runs: 0,
        failed_attempts: 0,
        config: None,
    })
}

/// Writes a heatmap with one row per method row and one column per variable.
pub fn write_heatmap(path: impl AsRef<Path>, heatmap: &Heatmap, variable_names: &[String]) -> Result<()> {
    let mut header = vec!["row".to_string()];
    header.extend(variable_names.iter().cloned());
    let rows = heatmap.row_labels.iter().zip(&heatmap.values).map(|(label, vals)| {
        let mut r = vec![label.clone()];
        r.extend(vals.iter().map(|&v| fmt(v)));
        r
    });
    write_rows(path.as_ref(), &header, rows)
}

/// Writes several heatmaps into one table, prefixing each row label with
/// the heatmap's name (`name:row`).
pub fn write_heatmaps(
    path: impl AsRef<Path>,
    heatmaps: &[(&str, &Heatmap)],
    variable_names: &[String],
) -> Result<()> {
    let mut header = vec!["row".to_string()];
    header.extend(variable_names.iter().cloned());
    let rows = heatmaps.iter().flat_map(|(name, h)| {
        h.row_labels.iter().zip(&h.values).map(move |(label, vals)| {
            let mut r = vec![format!("{name}:{label}")];
            r.extend(vals.iter().map(|&v| fmt(v)));
            r
        })
    });
    write_rows(path.as_ref(), &header, rows)
}

/// Writes a per-view variance report.
pub fn write_variance_report(
    path: impl AsRef<Path>,
    report: &VarianceReport,
    view_labels: &[String],
) -> Result<()> {
    let header: Vec<String> = [
        "view",
        "total_variance",
        "sample_variance",
        "sigma_shared",
        "sigma_specific",
        "pct_shared",
        "pct_specific",
        "pct_total",
        "pct_residual",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    let rows = (0..report.pct_shared.len()).map(|m| {
        vec![
            view_labels[m].clone(),
            fmt(report.total_per_view[m]),
            fmt(report.sample_variance_per_view[m]),
            fmt(report.sigma_star),
            fmt(report.sigma_m[m]),
            fmt(report.pct_shared[m]),
            fmt(report.pct_specific[m]),
            fmt(report.pct_total(m)),
            fmt(report.pct_residual(m)),
        ]
    });
    write_rows(path.as_ref(), &header, rows)
}

/// Writes a loading matrix (variables by columns) with the given column labels.
pub fn write_loadings(
    path: impl AsRef<Path>,
    loadings: &DMatrix<f64>,
    variable_names: &[String],
    column_prefix: &str,
) -> Result<()> {
    let mut header = vec!["variable".to_string()];
    header.extend((1..=loadings.ncols()).map(|k| format!("{column_prefix}{k}")));
    let rows = variable_names.iter().enumerate().map(|(j, name)| {
        let mut r = vec![name.clone()];
        r.extend(loadings.row(j).iter().map(|&v| fmt(v)));
        r
    });
    write_rows(path.as_ref(), &header, rows)
}

/// Writes a two-or-more column string table.
pub fn write_table(path: impl AsRef<Path>, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let header: Vec<String> = header.iter().map(|s| s.to_string()).collect();
    write_rows(path.as_ref(), &header, rows.iter().cloned())
}

/// Reads a list of identifiers, one per line (blank lines and `#` comments
/// are skipped). Only the first delimited field of each line is used.
pub fn read_id_list(path: impl AsRef<Path>) -> Result<Vec<String>> {
    let text = std::fs::read_to_string(path.as_ref())?;
    Ok(text
        .lines()
        .map(|l| l.split([',', '\t']).next().unwrap_or("").trim())
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_string)
        .collect())
}

/// Writes `contents` to `path`, creating parent directories.
pub fn write_text(path: impl AsRef<Path>, contents: &str) -> Result<()> {
    let path = path.as_ref();
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    let mut f = File::create(path)?;
    f.write_all(contents.as_bytes())?;
    Ok(())
}

/// Creates the output directory if needed and returns it.
pub fn ensure_dir(path: impl AsRef<Path>) -> Result<PathBuf> {
    std::fs::create_dir_all(path.as_ref())?;
    Ok(path.as_ref().to_path_buf())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
        let p = dir.join(name);
        std::fs::write(&p, body).unwrap();
        p
    }

    #[test]
    fn loads_csv_and_tsv() {
        let dir = tempfile::tempdir().unwrap();
        let a = write(dir.path(), "a.csv", "id,g1,g2\ns1,1,2\ns2,3,4.5\n");
        let b = write(dir.path(), "b.tsv", "id\tg1\tg2\ns1\t1\t2\ns2\t3\t4.5\n");
        let ma = load_matrix(&a, &LoadOptions::default()).unwrap();
        let mb = load_matrix(&b, &LoadOptions::default()).unwrap();
        assert_eq!(ma, mb);
        assert_eq!(ma.variable_names, vec!["g1", "g2"]);
        assert_eq!(ma.sample_ids, vec!["s1", "s2"]);
        assert_eq!(ma.values[(1, 1)], 4.5);
    }

    #[test]
    fn missing_cell_reports_line_and_column() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "x.csv", "id,a,b,c\ns1,1,2,3\ns2,4,,6\n");
        match load_matrix(&p, &LoadOptions::default()) {
            Err(Error::Parse { line, column, .. }) => assert_eq!((line, column), (3, 3)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_non_numeric_ragged_and_duplicates() {
        let dir = tempfile::tempdir().unwrap();
        let cases = [
            ("n.csv", "id,a,b\ns1,1,x\n", (2, 3)),
            ("r.csv", "id,a,b\ns1,1\n", (2, 3)),
            ("d.csv", "id,a,a\ns1,1,2\n", (1, 3)),
            ("s.csv", "id,a\ns1,1\ns1,2\n", (3, 1)),
        ];
        for (name, body, want) in cases {
            let p = write(dir.path(), name, body);
            match load_matrix(&p, &LoadOptions::default()) {
                Err(Error::Parse { line, column, .. }) => assert_eq!((line, column), want, "{name}"),
                other => panic!("{name}: unexpected {other:?}"),
            }
        }
    }

    #[test]
    fn group_column_is_extracted() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "g.csv", "id,a,family,b\ns1,1,f1,2\ns2,3,f1,4\n");
        let opts = LoadOptions { delimiter: None, group_column: Some("family".into()) };
        let m = load_matrix(&p, &opts).unwrap();
        assert_eq!(m.variable_names, vec!["a", "b"]);
        assert_eq!(m.groups, Some(vec!["f1".to_string(), "f1".to_string()]));
        assert_eq!(m.values, DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]));
    }

    #[test]
    fn mismatched_views_list_symmetric_difference() {
        let dir = tempfile::tempdir().unwrap();
        let a = write(dir.path(), "a.csv", "id,x,y,z\ns1,1,2,3\ns2,2,3,5\n");
        let b = write(dir.path(), "b.csv", "id,x,y,w\ns1,1,2,3\ns2,2,3,5\n");
        match load_dataset(&[a, b], &LoadOptions::default()) {
            Err(Error::VariableMismatch { view, only_in_first, only_in_other }) => {
                assert_eq!(view, 1);
                assert_eq!(only_in_first, vec!["z"]);
                assert_eq!(only_in_other, vec!["w"]);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn same_variables_in_other_order_are_aligned() {
        let dir = tempfile::tempdir().unwrap();
        let a = write(dir.path(), "a.csv", "id,x,y\ns1,1,10\ns2,3,30\n");
        let b = write(dir.path(), "b.csv", "id,y,x\nt1,10,1\nt2,30,3\nt3,20,2\n");
        let ds = load_dataset(&[a, b], &LoadOptions::default()).unwrap();
        assert_eq!(ds.n_vars(), 2);
        assert_eq!(ds.variable_names(), &["x".to_string(), "y".to_string()]);
        let v1 = ds.view(1).unwrap();
        assert_abs_diff_eq!(v1[(0, 0)], -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(v1[(0, 1)], -10.0, epsilon = 1e-12);
    }

    #[test]
    fn write_then_load_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let values = DMatrix::from_fn(7, 5, |_, _| {
            let e: i32 = rng.random_range(-300..300);
            rng.random::<f64>() * 10f64.powi(e) * if rng.random::<bool>() { -1.0 } else { 1.0 }
        });
        let m = NamedMatrix {
            sample_ids: (0..7).map(|i| format!("s{i}")).collect(),
            variable_names: (0..5).map(|j| format!("v{j}")).collect(),
            values,
            groups: Some((0..7).map(|i| format!("g{}", i / 2)).collect()),
        };
        let p = dir.path().join("m.csv");
        write_matrix(&p, &m).unwrap();
        let opts = LoadOptions { delimiter: None, group_column: Some("group".into()) };
        let back = load_matrix(&p, &opts).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn residualize_constant_only_centers() {
        let x = DMatrix::from_row_slice(3, 2, &[1.0, 5.0, 2.0, 7.0, 6.0, 0.0]);
        let r = residualize(&x, &DMatrix::zeros(3, 0)).unwrap();
        let centered = crate::model::center_columns(&x).unwrap();
        assert_abs_diff_eq!(r, centered, epsilon = 1e-12);
    }

    #[test]
    fn residualize_removes_exact_linear_column() {
        let c = DMatrix::from_column_slice(5, 1, &[0.5, 1.0, -2.0, 3.0, 4.0]);
        let x = DMatrix::from_fn(5, 1, |i, _| 2.0 - 3.0 * c[(i, 0)]);
        let r = residualize(&x, &c).unwrap();
        assert!(r.amax() < 1e-12);
    }

    #[test]
    fn residualize_rejects_rank_deficient_covariates() {
        let c = DMatrix::from_row_slice(4, 2, &[1.0, 2.0, 2.0, 4.0, 3.0, 6.0, 4.0, 8.0]);
        let x = DMatrix::from_element(4, 1, 1.0);
        assert!(residualize(&x, &c).is_err());
        let constant = DMatrix::from_element(4, 1, 3.0);
        assert!(residualize(&x, &constant).is_err());
    }

    #[test]
    fn residuals_are_orthogonal_to_covariates() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let n = 40;
        let c = DMatrix::from_fn(n, 3, |_, _| rng.random::<f64>() * 4.0 - 2.0);
        let x = DMatrix::from_fn(n, 6, |_, _| rng.random::<f64>() * 10.0);
        let r = residualize(&x, &c).unwrap();
        let ones = DMatrix::from_element(n, 1, 1.0);
        assert!((ones.transpose() * &r).amax() < 1e-10);
        assert!((c.transpose() * &r).amax() < 1e-10);
        // Independent normal-equations oracle.
        let mut design = DMatrix::from_element(n, 4, 1.0);
        design.columns_mut(1, 3).copy_from(&c);
        let beta = (design.transpose() * &design)
            .lu()
            .solve(&(design.transpose() * &x))
            .unwrap();
        assert_abs_diff_eq!(r, &x - &design * beta, epsilon = 1e-9);
    }

    #[test]
    fn residualize_named_matches_by_id() {
        let m = NamedMatrix {
            sample_ids: vec!["a".into(), "b".into(), "c".into()],
            variable_names: vec!["v".into()],
            values: DMatrix::from_column_slice(3, 1, &[1.0, 2.0, 3.0]),
            groups: None,
        };
        let cov = NamedMatrix {
            sample_ids: vec!["c".into(), "a".into(), "b".into()],
            variable_names: vec!["age".into()],
            values: DMatrix::from_column_slice(3, 1, &[3.0, 1.0, 2.0]),
            groups: None,
        };
        let r = residualize_named(&m, &cov).unwrap();
        assert!(r.values.amax() < 1e-12);
        let mut bad = cov.clone();
        bad.sample_ids[0] = "z".into();
        assert!(residualize_named(&m, &bad).is_err());
    }

    #[test]
    fn profile_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let profile = SelectionProfile {
            variable_names: vec!["g1".into(), "g2".into()],
            view_labels: vec!["liver".into(), "brain".into()],
            shared_prob: vec![0.25, 1.0],
            view_prob: vec![vec![0.0, 0.5], vec![0.75, 0.1]],
            n_runs: 4,
            failed_attempts: 0,
            config: None,
        };
        let p = dir.path().join("profile.csv");
        write_profile(&p, &profile).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert!(text.starts_with("variable,shared,liver,brain\n"));
        let back = read_profile(&p).unwrap();
        assert_eq!(back.shared_prob, profile.shared_prob);
        assert_eq!(back.view_prob, profile.view_prob);
        assert_eq!(back.view_labels, profile.view_labels);
        assert_eq!(back.n_runs, 0);
    }

    #[test]
    fn heatmap_csv_layout() {
        let dir = tempfile::tempdir().unwrap();
        let h = Heatmap {
            row_labels: vec!["view1".into(), "view2".into()],
            values: vec![vec![0.5, 1.0], vec![0.0, 0.25]],
        };
        let p = dir.path().join("h.csv");
        write_heatmap(&p, &h, &["a".into(), "b".into()]).unwrap();
        assert_eq!(
            std::fs::read_to_string(&p).unwrap(),
            "row,a,b\nview1,0.5,1\nview2,0,0.25\n"
        );
    }
}
