use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use smvmf::estimation::{fit, FitConfig, RegularizationSpec};
use smvmf::io::{self, LoadOptions, NamedMatrix};
use smvmf::manifest::RunManifest;

const BIN: &str = env!("CARGO_BIN_EXE_smvmf");

fn smvmf(out: &Path, args: &[&str]) -> Output {
    Command::new(BIN)
        .arg("--out-dir")
        .arg(out)
        .args(args)
        .output()
        .unwrap()
}

fn toy_views(dir: &Path) -> Vec<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    (1..=3)
        .map(|m| {
            let n = 10 + 2 * m;
            let values = DMatrix::from_fn(n, 8, |_, _| StandardNormal.sample(&mut rng));
            let mat = NamedMatrix {
                sample_ids: (0..n).map(|i| format!("v{m}s{i}")).collect(),
                variable_names: (0..8).map(|j| format!("g{j}")).collect(),
                values,
                groups: None,
            };
            let path = dir.join(format!("tissue{m}.csv"));
            io::write_matrix(&path, &mat).unwrap();
            path.display().to_string()
        })
        .collect()
}

fn read_rows(path: &Path) -> Vec<Vec<String>> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn csv_bytes(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "csv"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect()
}

fn with(args: &[&str], views: &[String]) -> Vec<String> {
    let mut v: Vec<String> = args.iter().map(|s| s.to_string()).collect();
    v.extend(views.iter().cloned());
    v
}

fn strs(v: &[String]) -> Vec<&str> {
    v.iter().map(String::as_str).collect()
}

#[test]
fn fit_variance_report_matches_library() {
    let tmp = tempfile::tempdir().unwrap();
    let views = toy_views(tmp.path());
    let out = tmp.path().join("fit");
    let mut args = with(&["fit"], &views);
    args.extend(["--d", "3", "--r", "3", "--lambda", "0"].map(String::from));
    let o = smvmf(&out, &strs(&args));
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));

    let ds = io::load_dataset(&views, &LoadOptions::default()).unwrap();
    let cfg = FitConfig::new(3, 3, RegularizationSpec::none(3, 3, 3));
    let res = fit(&ds, &cfg).unwrap();
    let report = res.model.variance_report(&ds).unwrap();

    let rows = read_rows(&out.join("variance.csv"));
    assert_eq!(rows[0][0], "view");
    assert_eq!(rows.len(), 4);
    for m in 0..3 {
        let row = &rows[m + 1];
        assert_eq!(row[0], format!("tissue{}", m + 1));
        let pct_shared: f64 = row[5].parse().unwrap();
        let pct_specific: f64 = row[6].parse().unwrap();
        assert_eq!(pct_shared, report.pct_shared[m]);
        assert_eq!(pct_specific, report.pct_specific[m]);
    }
    for f in ["loadings_shared.csv", "loadings_tissue1.csv", "trace.csv", "manifest.json"] {
        assert!(out.join(f).exists(), "{f}");
    }
}

#[test]
fn stability_probabilities_are_multiples_of_a_quarter() {
    let tmp = tempfile::tempdir().unwrap();
    let views = toy_views(tmp.path());
    let out = tmp.path().join("stab");
    let mut args = with(&["--seed", "5", "stability"], &views);
    args.extend(["--d", "1", "--r", "1", "--count", "2", "--runs", "4"].map(String::from));
    let o = smvmf(&out, &strs(&args));
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = read_rows(&out.join("profile.csv"));
    assert_eq!(rows[0], vec!["variable", "shared", "tissue1", "tissue2", "tissue3"]);
    assert_eq!(rows.len(), 9);
    let allowed = [0.0, 0.25, 0.5, 0.75, 1.0];
    for row in &rows[1..] {
        for cell in &row[1..] {
            let v: f64 = cell.parse().unwrap();
            assert!(allowed.contains(&v), "{v}");
        }
    }
    let classes = read_rows(&out.join("classification.csv"));
    assert_eq!(classes[0], vec!["variable", "label"]);
    assert_eq!(classes.len(), 9);
}

#[test]
fn simulate_writes_heatmaps_and_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("sim");
    let o = smvmf(
        &out,
        &["simulate", "--setting", "1", "--experiments", "2", "--methods", "smvmf,levene,pca"],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let files = csv_bytes(&out);
    let names: Vec<&str> = files.keys().map(String::as_str).collect();
    assert_eq!(names, vec!["heatmap_levene.csv", "heatmap_pca.csv", "heatmap_smvmf.csv"]);
    let rows = read_rows(&out.join("heatmap_smvmf.csv"));
    assert_eq!(rows[0].len(), 501);
    let labels: Vec<&str> = rows[1..].iter().map(|r| r[0].as_str()).collect();
    assert_eq!(
        labels,
        vec!["shared:LF1", "shared:LF2", "shared:LF3", "specific:view1", "specific:view2", "specific:view3"]
    );
    let manifest = RunManifest::read(out.join("manifest.json")).unwrap();
    assert_eq!(manifest.command, "simulate");
    assert!(manifest.outputs.contains(&"heatmap_pca.csv".to_string()));
}

#[test]
fn manifest_arguments_reproduce_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let views = toy_views(tmp.path());
    let out = tmp.path().join("a");
    let mut args = with(&["--seed", "9", "stability"], &views);
    args.extend(["--d", "1", "--r", "1", "--count", "3", "--runs", "6"].map(String::from));
    assert!(smvmf(&out, &strs(&args)).status.success());
    let manifest = RunManifest::read(out.join("manifest.json")).unwrap();
    assert_eq!(manifest.seed, 9);
    assert_eq!(manifest.inputs.len(), 3);
    assert_eq!(manifest.inputs[0].sha256, smvmf::manifest::sha256_file(&views[0]).unwrap());
    assert_eq!(manifest.config["stability"]["n_runs"], 6);

    // Replay the recorded command line into a different directory.
    let replay = tmp.path().join("b");
    let mut recorded = manifest.arguments.clone();
    let pos = recorded.iter().position(|a| a == "--out-dir").unwrap();
    recorded[pos + 1] = replay.display().to_string();
    let o = Command::new(BIN).args(&recorded).output().unwrap();
    assert!(o.status.success());
    assert_eq!(csv_bytes(&out), csv_bytes(&replay));
}

#[test]
fn conflicting_modes_are_usage_errors() {
    let tmp = tempfile::tempdir().unwrap();
    let views = toy_views(tmp.path());
    let out = tmp.path().join("x");
    let mut args = with(&["fit"], &views);
    args.extend(["--d", "1", "--r", "1", "--lambda", "0.1", "--count", "3"].map(String::from));
    let o = smvmf(&out, &strs(&args));
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));

    let o = smvmf(&out, &["fit", "--no-such-flag"]);
    assert_eq!(o.status.code(), Some(2));
    let o = smvmf(&out, &["simulate", "--setting", "3"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn data_errors_exit_with_three() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = tmp.path().join("bad.csv");
    std::fs::write(&bad, "id,a,b\ns1,1,\ns2,3,4\n").unwrap();
    let good = tmp.path().join("good.csv");
    std::fs::write(&good, "id,a,c\ns1,1,2\ns2,3,5\n").unwrap();
    let out = tmp.path().join("o");
    let o = smvmf(&out, &["fit", bad.to_str().unwrap(), "--d", "1", "--r", "0"]);
    assert_eq!(o.status.code(), Some(3));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("line 2, column 3"), "{err}");

    let other = tmp.path().join("other.csv");
    std::fs::write(&other, "id,a,b\ns1,1,2\ns2,3,5\n").unwrap();
    let o = smvmf(
        &out,
        &["fit", other.to_str().unwrap(), good.to_str().unwrap(), "--d", "1", "--r", "0"],
    );
    assert_eq!(o.status.code(), Some(3));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("\"b\"") && err.contains("\"c\""), "{err}");
}

#[test]
fn degenerate_data_exits_with_four() {
    let tmp = tempfile::tempdir().unwrap();
    let flat = tmp.path().join("flat.csv");
    std::fs::write(&flat, "id,a,b\ns1,1,1\ns2,1,1\ns3,1,1\n").unwrap();
    let o = smvmf(&tmp.path().join("o"), &["fit", flat.to_str().unwrap(), "--d", "1", "--r", "0"]);
    assert_eq!(o.status.code(), Some(4), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn classify_and_spow_from_profile() {
    let tmp = tempfile::tempdir().unwrap();
    let profile = tmp.path().join("profile.csv");
    std::fs::write(
        &profile,
        "variable,shared,liver,brain\ng1,0.9,0,0\ng2,0,0.8,0.8\ng3,0.1,0.7,0\ng4,0,0,0\n",
    )
    .unwrap();
    let out = tmp.path().join("c");
    assert!(smvmf(&out, &["classify", profile.to_str().unwrap()]).status.success());
    let rows = read_rows(&out.join("classification.csv"));
    let labels: Vec<&str> = rows[1..].iter().map(|r| r[1].as_str()).collect();
    assert_eq!(labels, vec!["shared-exclusive", "mixed", "none", "none"]);

    let out = tmp.path().join("s");
    assert!(smvmf(&out, &["spow", profile.to_str().unwrap(), "--top-n", "3"]).status.success());
    let rows = read_rows(&out.join("spow.csv"));
    assert_eq!(rows[0], vec!["variable", "shared", "liver", "brain"]);
    let order: Vec<&str> = rows[1..].iter().map(|r| r[0].as_str()).collect();
    assert_eq!(order, vec!["g1", "g3", "g2"]);
    let svg = std::fs::read_to_string(out.join("spow.svg")).unwrap();
    assert_eq!(svg.matches(r#"class="slice""#).count(), 9);
    assert!(out.join("manifest.json").exists());
}

#[test]
fn baseline_methods_write_tables() {
    let tmp = tempfile::tempdir().unwrap();
    let views = toy_views(tmp.path());
    for (method, file, extra) in [
        ("levene", "levene.csv", vec![]),
        ("pca", "pca.csv", vec!["--top-k", "3"]),
        ("stacked-pca", "stacked_pca.csv", vec!["--top-k", "4"]),
    ] {
        let out = tmp.path().join(method);
        let mut args = with(&["baseline", "--method", method], &views);
        args.extend(extra.iter().map(|s| s.to_string()));
        let o = smvmf(&out, &strs(&args));
        assert!(o.status.success(), "{method}: {}", String::from_utf8_lossy(&o.stderr));
        assert!(out.join(file).exists(), "{method}");
    }
    assert_eq!(read_rows(&tmp.path().join("pca/pca.csv")).len(), 1 + 3 * 3);

    let sel = tmp.path().join("sel.txt");
    let refs = tmp.path().join("ref.txt");
    std::fs::write(&sel, "a\nb\nc\n").unwrap();
    std::fs::write(&refs, "# reference\nb\nc\nd\n").unwrap();
    let out = tmp.path().join("enrich");
    let o = smvmf(
        &out,
        &[
            "baseline", "--method", "enrich", "--selected", sel.to_str().unwrap(),
            "--reference", refs.to_str().unwrap(), "--universe", "10",
        ],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = read_rows(&out.join("enrichment.csv"));
    assert_eq!(rows[1][..4], ["3", "3", "2", "10"].map(String::from));
    // P(X >= 2) for X ~ Hypergeometric(10, 3, 3) = (21 + 1) / 120.
    let p: f64 = rows[1][4].parse().unwrap();
    assert!((p - 22.0 / 120.0).abs() < 1e-12);

    let out = tmp.path().join("enrich-missing");
    let o = smvmf(&out, &["baseline", "--method", "enrich"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn association_with_null_draws() {
    let tmp = tempfile::tempdir().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let n = 40;
    let q = 20;
    let x = DMatrix::from_fn(n, q, |_, _| StandardNormal.sample(&mut rng));
    let noise: DMatrix<f64> = DMatrix::from_fn(n, q, |_, _| StandardNormal.sample(&mut rng));
    let y = DMatrix::from_fn(n, q, |i, j| if j < 10 { 3.0 * x[(i, j)] + noise[(i, j)] } else { noise[(i, j)] });
    let ids: Vec<String> = (0..n).map(|i| format!("s{i}")).collect();
    let write = |name: &str, v: DMatrix<f64>, prefix: &str| -> PathBuf {
        let p = tmp.path().join(name);
        io::write_matrix(
            &p,
            &NamedMatrix {
                sample_ids: ids.clone(),
                variable_names: (0..q).map(|j| format!("{prefix}{j}")).collect(),
                values: v,
                groups: None,
            },
        )
        .unwrap();
        p
    };
    let yp = write("y.csv", y, "gene");
    let xp = write("x.csv", x, "cpg");
    let out = tmp.path().join("assoc");
    let o = smvmf(
        &out,
        &[
            "--seed", "2", "baseline", "--method", "assoc", "--responses", yp.to_str().unwrap(),
            "--predictors", xp.to_str().unwrap(), "--null-draws", "5", "--draw-size", "8",
        ],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = read_rows(&out.join("association.csv"));
    assert_eq!(rows.len(), 1 + q);
    let sig: Vec<bool> = rows[1..].iter().map(|r| r[4] == "true").collect();
    assert!(sig[..10].iter().all(|&s| s));
    assert_eq!(read_rows(&out.join("association_null.csv")).len(), 6);
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("association_summary.json")).unwrap()).unwrap();
    assert!(summary["significant_fraction"].as_f64().unwrap() >= 0.5);
}

#[test]
fn grid_reports_every_pair() {
    let tmp = tempfile::tempdir().unwrap();
    let views = toy_views(tmp.path());
    let out = tmp.path().join("g");
    let mut args = with(&["grid"], &views);
    args.extend(["--d-values", "1,2", "--r-values", "1,2"].map(String::from));
    let o = smvmf(&out, &strs(&args));
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = read_rows(&out.join("grid.csv"));
    assert_eq!(rows[0], vec!["d", "r", "view", "pct_shared", "pct_specific", "pct_total"]);
    assert_eq!(rows.len(), 1 + 4 * 3);
}
