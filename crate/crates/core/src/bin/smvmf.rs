use std::collections::HashSet;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use smvmf::baselines::{
    association_screen, fisher_enrichment, levene_screen, pca_top_loadings, random_draw_null,
    significant_fraction, stacked_pca,
};
use smvmf::estimation::{fit, variance_grid, FitConfig, RegularizationSpec};
use smvmf::io::{self, LoadOptions, NamedMatrix};
use smvmf::manifest::RunManifest;
use smvmf::model::MultiViewDataset;
use smvmf::simulation::{run_experiments, Method, MethodConfig, SimulationSpec};
use smvmf::spow::export_spow;
use smvmf::stability::{classify_exclusive, run_stability, SelectionProfile, StabilityConfig};
use smvmf::{Error, Result};

#[derive(Parser, Debug)]
#[command(name = "smvmf", version, about = "Sparse multi-view matrix factorization")]
struct Cli {
    /// Seed for every random stream.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Directory receiving all outputs and the manifest.
    #[arg(long, global = true, default_value = "smvmf-out")]
    out_dir: PathBuf,
    /// Worker threads (defaults to all cores). Results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug, Serialize)]
enum Command {
    /// Fit the model once and report variance explained.
    Fit(FitArgs),
    /// Variance explained over a grid of (d, r) without sparsity.
    Grid(GridArgs),
    /// Stability selection over random half-samples.
    Stability(StabilityArgs),
    /// Label variables from a selection-profile CSV.
    Classify(ClassifyArgs),
    /// Run the simulation study and write selection heatmaps.
    Simulate(SimulateArgs),
    /// Comparator methods and enrichment/association tests.
    Baseline(BaselineArgs),
    /// Export a selection-probability wheel (CSV and SVG).
    Spow(SpowArgs),
}

#[derive(Args, Debug, Serialize)]
struct DataArgs {
    /// One delimited file per view (first row variable names, first column sample ids).
    #[arg(required = true)]
    views: Vec<PathBuf>,
    /// Comma-separated view labels; defaults to the file stems.
    #[arg(long, value_delimiter = ',')]
    labels: Option<Vec<String>>,
    /// Field delimiter: "tab", "comma" or a single character. Inferred from the extension by default.
    #[arg(long)]
    delimiter: Option<String>,
    /// Covariate file (same format); every view is residualized on it, matched by sample id.
    #[arg(long)]
    covariates: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct FitArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long)]
    d: usize,
    #[arg(long)]
    r: usize,
    /// Penalty for every shared and view-specific column.
    #[arg(long, conflicts_with = "count")]
    lambda: Option<f64>,
    /// Separate penalty for the view-specific columns (defaults to --lambda).
    #[arg(long, requires = "lambda")]
    lambda_view: Option<f64>,
    /// Exact number of nonzero loadings per column.
    #[arg(long)]
    count: Option<usize>,
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    #[arg(long, default_value_t = 500)]
    max_iters: usize,
}

#[derive(Args, Debug, Serialize)]
struct GridArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, value_delimiter = ',', default_value = "1,2,3,4,5")]
    d_values: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "1,2,3,4,5")]
    r_values: Vec<usize>,
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    #[arg(long, default_value_t = 500)]
    max_iters: usize,
}

#[derive(Args, Debug, Serialize)]
struct StabilityArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long)]
    d: usize,
    #[arg(long)]
    r: usize,
    /// Nonzero loadings per column in every run.
    #[arg(long)]
    count: usize,
    #[arg(long, default_value_t = 1000)]
    runs: usize,
    /// Draw the same rows in every view.
    #[arg(long)]
    paired: bool,
    /// Column holding group labels; subsamples keep at most one member per group.
    #[arg(long)]
    group_col: Option<String>,
    #[arg(long, default_value_t = 0.5)]
    hi: f64,
    #[arg(long, default_value_t = 0.005)]
    lo: f64,
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    #[arg(long, default_value_t = 500)]
    max_iters: usize,
}

#[derive(Args, Debug, Serialize)]
struct ClassifyArgs {
    /// Selection-profile CSV written by `stability`.
    profile: PathBuf,
    #[arg(long, default_value_t = 0.5)]
    hi: f64,
    #[arg(long, default_value_t = 0.005)]
    lo: f64,
}

#[derive(Args, Debug, Serialize)]
struct SimulateArgs {
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2))]
    setting: u8,
    #[arg(long, default_value_t = 100)]
    experiments: usize,
    /// Comma-separated subset of smvmf, levene, pca, stacked-pca.
    #[arg(long, value_delimiter = ',', default_value = "smvmf,levene,pca,stacked-pca")]
    methods: Vec<String>,
    #[arg(long, default_value_t = 10)]
    count: usize,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    #[arg(long, default_value_t = 500)]
    max_iters: usize,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum BaselineMethod {
    Levene,
    Pca,
    StackedPca,
    Enrich,
    Assoc,
}

#[derive(Args, Debug, Serialize)]
struct BaselineArgs {
    #[arg(long, value_enum)]
    method: BaselineMethod,
    /// View files (levene, pca, stacked-pca).
    views: Vec<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    labels: Option<Vec<String>>,
    #[arg(long)]
    delimiter: Option<String>,
    #[arg(long)]
    covariates: Option<PathBuf>,
    /// Family-wise level for Levene and association screens.
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Variables reported per view (pca, stacked-pca).
    #[arg(long, default_value_t = 10)]
    top_k: usize,
    /// 1-based principal component (pca).
    #[arg(long, default_value_t = 1)]
    component: usize,
    /// Identifier list of selected items (enrich).
    #[arg(long)]
    selected: Option<PathBuf>,
    /// Identifier list of reference items (enrich).
    #[arg(long)]
    reference: Option<PathBuf>,
    /// Universe size (enrich).
    #[arg(long)]
    universe: Option<usize>,
    /// Response matrix (assoc).
    #[arg(long)]
    responses: Option<PathBuf>,
    /// Predictor matrix with columns matched to the responses by position (assoc).
    #[arg(long)]
    predictors: Option<PathBuf>,
    /// Number of random draws for the empirical null (assoc, 0 disables).
    #[arg(long, default_value_t = 0)]
    null_draws: usize,
    /// Columns per random draw (assoc; defaults to all columns).
    #[arg(long)]
    draw_size: Option<usize>,
}

#[derive(Args, Debug, Serialize)]
struct SpowArgs {
    /// Selection-profile CSV written by `stability`.
    profile: PathBuf,
    /// Keep only the first N variables of the ordering.
    #[arg(long)]
    top_n: Option<usize>,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Fit(_) => "fit",
            Command::Grid(_) => "grid",
            Command::Stability(_) => "stability",
            Command::Classify(_) => "classify",
            Command::Simulate(_) => "simulate",
            Command::Baseline(_) => "baseline",
            Command::Spow(_) => "spow",
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(cli: &Cli) -> Result<()> {
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(Error::InvalidInput("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| Error::InvalidInput(format!("thread pool: {e}")))?;
    }
    let start = Instant::now();
    io::ensure_dir(&cli.out_dir)?;
    let mut manifest = RunManifest::new(
        cli.command.name(),
        std::env::args().skip(1).collect(),
        serde_json::to_value(&cli.command)?,
        cli.seed,
    );
    manifest.threads = cli.threads;
    let out = Output { dir: &cli.out_dir, files: Vec::new() };
    let mut out = out;
    match &cli.command {
        Command::Fit(a) => cmd_fit(cli, a, &mut manifest, &mut out)?,
        Command::Grid(a) => cmd_grid(cli, a, &mut manifest, &mut out)?,
        Command::Stability(a) => cmd_stability(cli, a, &mut manifest, &mut out)?,
        Command::Classify(a) => cmd_classify(a, &mut manifest, &mut out)?,
        Command::Simulate(a) => cmd_simulate(cli, a, &mut out)?,
        Command::Baseline(a) => cmd_baseline(cli, a, &mut manifest, &mut out)?,
        Command::Spow(a) => cmd_spow(a, &mut manifest, &mut out)?,
    }
    manifest.outputs = out.files;
    manifest.duration_seconds = start.elapsed().as_secs_f64();
    manifest.write(&cli.out_dir)?;
    Ok(())
}

struct Output<'a> {
    dir: &'a Path,
    files: Vec<String>,
}

impl Output<'_> {
    fn path(&mut self, name: &str) -> PathBuf {
        self.files.push(name.to_string());
        self.dir.join(name)
    }
}

fn parse_delimiter(s: &Option<String>) -> Result<Option<u8>> {
    match s.as_deref() {
        None => Ok(None),
        Some("tab") | Some("\\t") => Ok(Some(b'\t')),
        Some("comma") => Ok(Some(b',')),
        Some(x) if x.len() == 1 => Ok(Some(x.as_bytes()[0])),
        Some(x) => Err(Error::InvalidInput(format!("unsupported delimiter {x:?}"))),
    }
}

fn view_labels(paths: &[PathBuf], labels: &Option<Vec<String>>) -> Result<Vec<String>> {
    if let Some(l) = labels {
        if l.len() != paths.len() {
            return Err(Error::InvalidInput(format!(
                "{} labels for {} views",
                l.len(),
                paths.len()
            )));
        }
        return Ok(l.clone());
    }
    let stems: Vec<String> = paths
        .iter()
        .map(|p| p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default())
        .collect();
    let unique: HashSet<&String> = stems.iter().collect();
    if unique.len() == stems.len() && stems.iter().all(|s| !s.is_empty()) {
        Ok(stems)
    } else {
        Ok(smvmf::stability::default_view_labels(paths.len()))
    }
}

struct Loaded {
    dataset: MultiViewDataset,
    labels: Vec<String>,
}

fn load_views(
    paths: &[PathBuf],
    labels: &Option<Vec<String>>,
    delimiter: &Option<String>,
    covariates: &Option<PathBuf>,
    group_col: Option<&str>,
    manifest: &mut RunManifest,
) -> Result<Loaded> {
    if paths.is_empty() {
        return Err(Error::InvalidInput("at least one view file is required".into()));
    }
    let opts = LoadOptions {
        delimiter: parse_delimiter(delimiter)?,
        group_column: group_col.map(str::to_string),
    };
    let mut views = Vec::with_capacity(paths.len());
    for p in paths {
        manifest.add_input(p)?;
        views.push(io::load_matrix(p, &opts)?);
    }
    if let Some(c) = covariates {
        manifest.add_input(c)?;
        let cov_opts = LoadOptions { delimiter: opts.delimiter, group_column: None };
        let cov = io::load_matrix(c, &cov_opts)?;
        views = views
            .iter()
            .map(|v| io::residualize_named(v, &cov))
            .collect::<Result<Vec<NamedMatrix>>>()?;
    }
    Ok(Loaded {
        dataset: io::assemble_dataset(views)?,
        labels: view_labels(paths, labels)?,
    })
}

fn cmd_fit(cli: &Cli, a: &FitArgs, manifest: &mut RunManifest, out: &mut Output) -> Result<()> {
    let data = &a.data;
    let l = load_views(&data.views, &data.labels, &data.delimiter, &data.covariates, None, manifest)?;
    let m = l.dataset.n_views();
    let reg = match (a.lambda, a.count) {
        (_, Some(k)) => RegularizationSpec::fixed_count(k, a.d, a.r, m),
        (Some(ls), None) => {
            RegularizationSpec::parsimonious(ls, a.lambda_view.unwrap_or(ls), a.d, a.r, m)
        }
        (None, None) => RegularizationSpec::none(a.d, a.r, m),
    };
    let cfg = FitConfig {
        max_outer_iters: a.max_iters,
        rel_tol: a.tol,
        seed: cli.seed,
        ..FitConfig::new(a.d, a.r, reg)
    };
    manifest.config = serde_json::json!({ "args": manifest.config, "fit": cfg });
    let res = fit(&l.dataset, &cfg)?;
    let report = res.model.variance_report(&l.dataset)?;
    let names = l.dataset.variable_names();
    io::write_variance_report(out.path("variance.csv"), &report, &l.labels)?;
    io::write_loadings(out.path("loadings_shared.csv"), res.model.v_star(), names, "LF")?;
    for (mi, label) in l.labels.iter().enumerate() {
        io::write_loadings(
            out.path(&format!("loadings_{label}.csv")),
            res.model.v(mi),
            names,
            "LF",
        )?;
    }
    let trace: Vec<Vec<String>> = res
        .objective_trace
        .iter()
        .enumerate()
        .map(|(i, v)| vec![i.to_string(), v.to_string()])
        .collect();
    io::write_table(out.path("trace.csv"), &["iteration", "value"], &trace)?;
    if !res.converged {
        eprintln!("warning: no convergence after {} iterations", res.iterations);
    }
    Ok(())
}

fn cmd_grid(cli: &Cli, a: &GridArgs, manifest: &mut RunManifest, out: &mut Output) -> Result<()> {
    let data = &a.data;
    let l = load_views(&data.views, &data.labels, &data.delimiter, &data.covariates, None, manifest)?;
    let m = l.dataset.n_views();
    let cfg = FitConfig {
        max_outer_iters: a.max_iters,
        rel_tol: a.tol,
        seed: cli.seed,
        ..FitConfig::new(1, 1, RegularizationSpec::none(1, 1, m))
    };
    let rows = variance_grid(&l.dataset, &a.d_values, &a.r_values, &cfg)?;
    let table: Vec<Vec<String>> = rows
        .iter()
        .flat_map(|row| {
            l.labels.iter().enumerate().map(move |(mi, label)| {
                vec![
                    row.d.to_string(),
                    row.r.to_string(),
                    label.clone(),
                    row.pct_shared[mi].to_string(),
                    row.pct_specific[mi].to_string(),
                    row.pct_total[mi].to_string(),
                ]
            })
        })
        .collect();
    io::write_table(
        out.path("grid.csv"),
        &["d", "r", "view", "pct_shared", "pct_specific", "pct_total"],
        &table,
    )
}

fn write_classification(
    path: PathBuf,
    profile: &SelectionProfile,
    hi: f64,
    lo: f64,
) -> Result<()> {
    let labels = classify_exclusive(profile, hi, lo)?;
    let rows: Vec<Vec<String>> = profile
        .variable_names
        .iter()
        .zip(&labels)
        .map(|(n, l)| vec![n.clone(), l.describe(&profile.view_labels)])
        .collect();
    io::write_table(path, &["variable", "label"], &rows)
}

fn cmd_stability(
    cli: &Cli,
    a: &StabilityArgs,
    manifest: &mut RunManifest,
    out: &mut Output,
) -> Result<()> {
    let data = &a.data;
    let l = load_views(
        &data.views,
        &data.labels,
        &data.delimiter,
        &data.covariates,
        a.group_col.as_deref(),
        manifest,
    )?;
    let cfg = StabilityConfig {
        n_runs: a.runs,
        seed: cli.seed,
        paired_sampling: a.paired,
        group_exclusive: a.group_col.is_some(),
        max_outer_iters: a.max_iters,
        rel_tol: a.tol,
        ..StabilityConfig::new(a.d, a.r, a.count)
    };
    manifest.config = serde_json::json!({ "args": manifest.config, "stability": cfg });
    let mut profile = run_stability(&l.dataset, &cfg)?;
    profile.view_labels = l.labels.clone();
    io::write_profile(out.path("profile.csv"), &profile)?;
    write_classification(out.path("classification.csv"), &profile, a.hi, a.lo)?;
    if profile.failed_attempts > 0 {
        eprintln!("note: {} fit attempts failed and were redrawn", profile.failed_attempts);
    }
    Ok(())
}

fn cmd_classify(a: &ClassifyArgs, manifest: &mut RunManifest, out: &mut Output) -> Result<()> {
    manifest.add_input(&a.profile)?;
    let profile = io::read_profile(&a.profile)?;
    write_classification(out.path("classification.csv"), &profile, a.hi, a.lo)
}

fn cmd_simulate(cli: &Cli, a: &SimulateArgs, out: &mut Output) -> Result<()> {
    let methods = a
        .methods
        .iter()
        .map(|s| s.parse::<Method>())
        .collect::<Result<Vec<_>>>()?;
    let spec = SimulationSpec {
        n_experiments: a.experiments,
        seed: cli.seed,
        ..SimulationSpec::setting(a.setting)?
    };
    let cfg = MethodConfig {
        count: a.count,
        levene_alpha: a.alpha,
        max_outer_iters: a.max_iters,
        rel_tol: a.tol,
        ..MethodConfig::default()
    };
    let res = run_experiments(&spec, &methods, &cfg)?;
    let names: Vec<String> = (1..=spec.p).map(|j| format!("V{j}")).collect();
    if let (Some(sh), Some(sp)) = (&res.smvmf_shared, &res.smvmf_specific) {
        io::write_heatmaps(
            out.path("heatmap_smvmf.csv"),
            &[("shared", sh), ("specific", sp)],
            &names,
        )?;
    }
    for (name, h) in [
        ("levene", &res.levene),
        ("pca", &res.pca),
        ("stacked-pca", &res.stacked_pca),
    ] {
        if let Some(h) = h {
            io::write_heatmap(out.path(&format!("heatmap_{name}.csv")), h, &names)?;
        }
    }
    let summary = serde_json::json!({
        "spec": res.spec,
        "config": res.config,
        "n_completed": res.n_completed,
        "failures": res.failures,
    });
    io::write_text(
        out.path("summary.json"),
        &(serde_json::to_string_pretty(&summary)? + "\n"),
    )
}

fn required<'a, T>(v: &'a Option<T>, flag: &str, method: &str) -> Result<&'a T> {
    v.as_ref()
        .ok_or_else(|| Error::InvalidInput(format!("--method {method} requires {flag}")))
}

fn cmd_baseline(
    cli: &Cli,
    a: &BaselineArgs,
    manifest: &mut RunManifest,
    out: &mut Output,
) -> Result<()> {
    let load = |manifest: &mut RunManifest| {
        load_views(&a.views, &a.labels, &a.delimiter, &a.covariates, None, manifest)
    };
    match a.method {
        BaselineMethod::Levene => {
            let l = load(manifest)?;
            let sel = levene_screen(&l.dataset, a.alpha)?;
            let rows: Vec<Vec<String>> = l
                .dataset
                .variable_names()
                .iter()
                .zip(&sel)
                .map(|(n, s)| {
                    vec![
                        n.clone(),
                        s.p_value.to_string(),
                        s.selected.to_string(),
                        s.attributed_view.map(|m| l.labels[m].clone()).unwrap_or_default(),
                    ]
                })
                .collect();
            io::write_table(
                out.path("levene.csv"),
                &["variable", "p_value", "selected", "view"],
                &rows,
            )
        }
        BaselineMethod::Pca => {
            if a.component == 0 {
                return Err(Error::InvalidInput("--component is 1-based".into()));
            }
            let l = load(manifest)?;
            let names = l.dataset.variable_names();
            let mut rows = Vec::new();
            for (mi, label) in l.labels.iter().enumerate() {
                let top = pca_top_loadings(&l.dataset.scaled_view(mi)?, a.component - 1, a.top_k)?;
                for (rank, j) in top.into_iter().enumerate() {
                    rows.push(vec![label.clone(), (rank + 1).to_string(), names[j].clone()]);
                }
            }
            io::write_table(out.path("pca.csv"), &["view", "rank", "variable"], &rows)
        }
        BaselineMethod::StackedPca => {
            let l = load(manifest)?;
            let names = l.dataset.variable_names();
            let rows: Vec<Vec<String>> = stacked_pca(&l.dataset, a.top_k)?
                .into_iter()
                .enumerate()
                .map(|(rank, j)| vec![(rank + 1).to_string(), names[j].clone()])
                .collect();
            io::write_table(out.path("stacked_pca.csv"), &["rank", "variable"], &rows)
        }
        BaselineMethod::Enrich => {
            let sel_path = required(&a.selected, "--selected", "enrich")?;
            let ref_path = required(&a.reference, "--reference", "enrich")?;
            let universe = *required(&a.universe, "--universe", "enrich")?;
            manifest.add_input(sel_path)?;
            manifest.add_input(ref_path)?;
            let selected: HashSet<String> = io::read_id_list(sel_path)?.into_iter().collect();
            let reference: HashSet<String> = io::read_id_list(ref_path)?.into_iter().collect();
            let p = fisher_enrichment(&selected, &reference, universe)?;
            let overlap = selected.intersection(&reference).count();
            io::write_table(
                out.path("enrichment.csv"),
                &["selected", "reference", "overlap", "universe", "p_value"],
                &[vec![
                    selected.len().to_string(),
                    reference.len().to_string(),
                    overlap.to_string(),
                    universe.to_string(),
                    p.to_string(),
                ]],
            )
        }
        BaselineMethod::Assoc => {
            let resp_path = required(&a.responses, "--responses", "assoc")?;
            let pred_path = required(&a.predictors, "--predictors", "assoc")?;
            manifest.add_input(resp_path)?;
            manifest.add_input(pred_path)?;
            let opts = LoadOptions { delimiter: parse_delimiter(&a.delimiter)?, group_column: None };
            let resp = io::load_matrix(resp_path, &opts)?;
            let pred = io::load_matrix(pred_path, &opts)?;
            if resp.sample_ids != pred.sample_ids {
                return Err(Error::InvalidInput(
                    "responses and predictors must list the same samples in the same order".into(),
                ));
            }
            let res = association_screen(&resp.values, &pred.values, a.alpha)?;
            let rows: Vec<Vec<String>> = resp
                .variable_names
                .iter()
                .zip(&pred.variable_names)
                .zip(&res)
                .map(|((rn, pn), r)| match r {
                    Ok(x) => vec![
                        rn.clone(),
                        pn.clone(),
                        x.slope.to_string(),
                        x.p_value.to_string(),
                        x.significant.to_string(),
                    ],
                    Err(e) => vec![rn.clone(), pn.clone(), String::new(), String::new(), format!("error: {e}")],
                })
                .collect();
            io::write_table(
                out.path("association.csv"),
                &["response", "predictor", "slope", "p_value", "significant"],
                &rows,
            )?;
            let observed = significant_fraction(&res);
            let mut summary = serde_json::json!({ "significant_fraction": observed });
            if a.null_draws > 0 {
                let size = a.draw_size.unwrap_or(resp.values.ncols());
                let null = random_draw_null(
                    &resp.values,
                    &pred.values,
                    size,
                    a.null_draws,
                    a.alpha,
                    cli.seed,
                )?;
                let exceed = null.iter().filter(|&&f| f >= observed).count();
                summary["null_exceedance"] = serde_json::json!(exceed as f64 / null.len() as f64);
                let rows: Vec<Vec<String>> = null
                    .iter()
                    .enumerate()
                    .map(|(i, f)| vec![i.to_string(), f.to_string()])
                    .collect();
                io::write_table(out.path("association_null.csv"), &["draw", "significant_fraction"], &rows)?;
            }
            io::write_text(
                out.path("association_summary.json"),
                &(serde_json::to_string_pretty(&summary)? + "\n"),
            )
        }
    }
}

fn cmd_spow(a: &SpowArgs, manifest: &mut RunManifest, out: &mut Output) -> Result<()> {
    manifest.add_input(&a.profile)?;
    let profile = io::read_profile(&a.profile)?;
    out.files.push("spow.csv".into());
    out.files.push("spow.svg".into());
    export_spow(&profile, out.dir, "spow", a.top_n)?;
    Ok(())
}
