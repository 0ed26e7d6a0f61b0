use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use log::{info, warn};
use sha2::{Digest, Sha256};

use psbart::cart::{CartParams, TreeInputs};
use psbart::config::{apply_dgp, KvFile, RunConfig};
use psbart::data::{impute_baseline_covariates, load_dataset};
use psbart::diagnostics::{effective_sample_size, split_rhat};
use psbart::dgp::{self, DgpConfig};
use psbart::estimands::{CsaceDraws, EstimandSummary};
use psbart::gibbs::{run_sampler, PosteriorStore};
use psbart::Error;

/// Environment variable that, when set, replaces the `--config` path.
const CONFIG_ENV: &str = "PSBART_CONFIG";

#[derive(Parser)]
#[command(name = "psbart", version, about = "Principal-stratification BART for cluster-randomized trials with truncation by death")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a trial with known strata and potential outcomes.
    Generate(GenerateArgs),
    /// Run the sampler and write posterior summaries.
    Fit(FitArgs),
    /// Fit-the-fit regression tree over likely always-survivors.
    Tree(TreeArgs),
    /// Convergence diagnostics from the traces of a fit.
    Diagnose(DiagnoseArgs),
}

#[derive(Args)]
struct ConfigArg {
    /// Key-value config file.
    #[arg(long)]
    config: Option<PathBuf>,
}

impl ConfigArg {
    fn path(&self) -> Option<PathBuf> {
        std::env::var_os(CONFIG_ENV)
            .filter(|v| !v.is_empty())
            .map(PathBuf::from)
            .or_else(|| self.config.clone())
    }

    fn load(&self) -> Result<RunConfig, Error> {
        self.path().map_or_else(|| Ok(RunConfig::default()), |p| RunConfig::read(&p))
    }
}

#[derive(Args)]
struct GenerateArgs {
    #[command(flatten)]
    config: ConfigArg,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// Start from a named preset; config keys override it.
    #[arg(long, value_parser = ["wsd"])]
    preset: Option<String>,
}

#[derive(Args)]
struct FitArgs {
    #[command(flatten)]
    config: ConfigArg,
    /// Input CSV.
    #[arg(long)]
    data: PathBuf,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    chains: Option<usize>,
    /// Worker threads; results do not depend on this.
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    iters: Option<usize>,
    #[arg(long = "burn-in")]
    burn_in: Option<usize>,
    #[arg(long)]
    thin: Option<usize>,
}

#[derive(Args)]
struct TreeArgs {
    #[command(flatten)]
    config: ConfigArg,
    /// Directory written by `fit`.
    #[arg(long)]
    fit: PathBuf,
    /// Output directory; defaults to the fit directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Path of the graph-description file.
    #[arg(long)]
    dot: Option<PathBuf>,
}

#[derive(Args)]
struct DiagnoseArgs {
    /// Directory written by `fit`.
    #[arg(long)]
    fit: PathBuf,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) => 2,
        Error::Io { .. }
        | Error::Csv(_)
        | Error::Schema(_)
        | Error::Consistency { .. }
        | Error::Randomization { .. }
        | Error::Positivity { .. }
        | Error::EmptyCovariate(_)
        | Error::CovariateGaps
        | Error::Initialization(_) => 3,
        _ => 4,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Generate(a) => cmd_generate(a),
        Command::Fit(a) => cmd_fit(a),
        Command::Tree(a) => cmd_tree(a),
        Command::Diagnose(a) => cmd_diagnose(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn write(path: &Path, text: &str) -> Result<(), Error> {
    fs::write(path, text).map_err(io_err(path))
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn unix_now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

fn cmd_generate(a: &GenerateArgs) -> Result<(), Error> {
    let mut cfg = match a.preset.as_deref() {
        Some("wsd") => DgpConfig::wsd(),
        _ => DgpConfig::default(),
    };
    if let Some(p) = a.config.path() {
        // Keys in the file override the starting point.
        apply_dgp(&KvFile::read(&p)?, &mut cfg)?;
    }
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    cfg.validate()?;
    let (ds, truth) = dgp::generate(&cfg)?;
    dgp::write_outputs(&cfg, &ds, &truth, &a.out)?;
    info!(
        "wrote {} individuals in {} clusters to {}",
        ds.n_individuals(),
        ds.n_clusters(),
        a.out.display()
    );
    Ok(())
}

fn cmd_fit(a: &FitArgs) -> Result<(), Error> {
    let started = unix_now();
    let mut cfg = a.config.load()?;
    let s = &mut cfg.sampler;
    if let Some(v) = a.seed {
        s.seed = v;
    }
    if let Some(v) = a.chains {
        s.n_chains = v;
    }
    if let Some(v) = a.thin {
        s.thin = v;
    }
    if let Some(v) = a.iters {
        s.n_iter = v;
        if a.burn_in.is_none() && s.burn_in >= v {
            s.burn_in = v / 2;
            warn!("burn-in reduced to {} to fit within {v} iterations", s.burn_in);
        }
    }
    if let Some(v) = a.burn_in {
        s.burn_in = v;
    }
    cfg.validate_fit()?;
    if a.threads == Some(0) {
        return Err(Error::Config("--threads must be at least 1".into()));
    }

    let raw = fs::read(&a.data).map_err(io_err(&a.data))?;
    let mut ds = load_dataset(&a.data, &cfg.schema)?;
    if ds.has_covariate_gaps() {
        ds = impute_baseline_covariates(ds)?;
        for r in &ds.imputation {
            warn!("imputed {} missing values of '{}' with {}", r.n_imputed, r.source, r.fill);
        }
    }

    let defaults = psbart::gibbs::SamplerConfig::default();
    let s = &cfg.sampler;
    if s.n_iter < defaults.n_iter || s.n_chains < 2 || ds.n_clusters() < 10 {
        warn!(
            "desk-scale settings ({} iterations, {} chains, {} clusters); treat results as a smoke run",
            s.n_iter,
            s.n_chains,
            ds.n_clusters()
        );
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(a.threads.unwrap_or(0))
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let threads = pool.current_num_threads();
    let store = pool.install(|| run_sampler(&ds, &cfg.sampler))?;

    let z: Vec<u8> = (0..ds.n_individuals()).map(|i| ds.z_of(i)).collect();
    let s_obs: Vec<Option<bool>> = ds.individuals.iter().map(|r| r.s_obs).collect();
    let summary = EstimandSummary::from_store(&store, &z, &s_obs, cfg.likely_threshold)?;
    let inputs = TreeInputs::from_fit(&summary, &store, &ds);

    // All files are written together once the run has succeeded.
    fs::create_dir_all(&a.out).map_err(io_err(&a.out))?;
    let out = |name: &str| a.out.join(name);
    summary.write_summary(&out("summary.txt"))?;
    let table = summary.table();
    write(&out("table.txt"), &table)?;
    summary.write_csace_csv(&out("csace.csv"))?;
    write_tree_inputs(&inputs, &out("tree_inputs.csv"))?;
    write_csace_draws(&inputs.draws, &out("csace_draws.csv"))?;
    write_sace_trace(&store, &out("sace_trace.csv"))?;
    write_loglik_trace(&store, &out("loglik_trace.csv"))?;
    let config_text = cfg.echo_fit();
    write(&out("config_used.txt"), &config_text)?;

    let events = store.events();
    let mut manifest = String::new();
    let _ = writeln!(manifest, "tool = psbart {}", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(manifest, "config_sha256 = {}", sha256_hex(config_text.as_bytes()));
    let _ = writeln!(manifest, "dataset_sha256 = {}", sha256_hex(&raw));
    let _ = writeln!(manifest, "seed = {}", cfg.sampler.seed);
    let _ = writeln!(manifest, "chains = {}", cfg.sampler.n_chains);
    let _ = writeln!(manifest, "threads = {threads}");
    let _ = writeln!(manifest, "individuals = {}", ds.n_individuals());
    let _ = writeln!(manifest, "clusters = {}", ds.n_clusters());
    let _ = writeln!(manifest, "retained_draws = {}", store.n_draws());
    let _ = writeln!(manifest, "label_fallbacks = {}", events.label_fallbacks);
    let _ = writeln!(
        manifest,
        "empty_subset_skips = {}",
        events.empty_subset_skips.map(|v| v.to_string()).join(",")
    );
    let _ = writeln!(
        manifest,
        "frozen_structure_updates = {}",
        events.frozen_structure.map(|v| v.to_string()).join(",")
    );
    let _ = writeln!(manifest, "started_unix = {started}");
    let _ = writeln!(manifest, "finished_unix = {}", unix_now());
    write(&out("manifest.txt"), &manifest)?;

    print!("{table}");
    Ok(())
}

fn fmt_opt(v: f64) -> String {
    if v.is_finite() {
        format!("{v}")
    } else {
        String::new()
    }
}

fn write_tree_inputs(inputs: &TreeInputs, path: &Path) -> Result<(), Error> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["individual".to_string(), "csace_mean".to_string()];
    header.extend(inputs.names.iter().cloned());
    w.write_record(&header)?;
    for (k, &i) in inputs.draws.individuals.iter().enumerate() {
        let mut rec = vec![i.to_string(), format!("{}", inputs.responses[k])];
        rec.extend(inputs.covariates[k].iter().map(|v| format!("{v}")));
        w.write_record(&rec)?;
    }
    w.flush().map_err(io_err(path))
}

fn write_csace_draws(draws: &CsaceDraws, path: &Path) -> Result<(), Error> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["draw".to_string()];
    header.extend(draws.individuals.iter().map(|i| i.to_string()));
    w.write_record(&header)?;
    for d in 0..draws.n_draws {
        let mut rec = vec![d.to_string()];
        rec.extend((0..draws.individuals.len()).map(|c| fmt_opt(draws.get(d, c))));
        w.write_record(&rec)?;
    }
    w.flush().map_err(io_err(path))
}

fn write_sace_trace(store: &PosteriorStore, path: &Path) -> Result<(), Error> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["chain", "draw", "sace", "n_always_survivors"])?;
    let mut draw_in_chain = 0;
    let mut last_chain = usize::MAX;
    for (chain, d) in store.draws() {
        if chain.chain != last_chain {
            last_chain = chain.chain;
            draw_in_chain = 0;
        }
        let (mut sum, mut cnt) = (0.0, 0usize);
        for i in 0..store.n_individuals {
            if let Some((y1, y0)) = chain.pair(d, i) {
                sum += y1 - y0;
                cnt += 1;
            }
        }
        let sace = if cnt > 0 { sum / cnt as f64 } else { f64::NAN };
        w.write_record([
            chain.chain.to_string(),
            draw_in_chain.to_string(),
            fmt_opt(sace),
            cnt.to_string(),
        ])?;
        draw_in_chain += 1;
    }
    w.flush().map_err(io_err(path))
}

fn write_loglik_trace(store: &PosteriorStore, path: &Path) -> Result<(), Error> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["chain", "iteration", "loglik"])?;
    for c in &store.chains {
        for (t, ll) in c.loglik_trace.iter().enumerate() {
            w.write_record([c.chain.to_string(), (t + 1).to_string(), fmt_opt(*ll)])?;
        }
    }
    w.flush().map_err(io_err(path))
}

fn read_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<String>>), Error> {
    if !path.exists() {
        return Err(Error::Io {
            path: path.to_path_buf(),
            source: std::io::Error::new(std::io::ErrorKind::NotFound, "fit output missing; run `psbart fit` first"),
        });
    }
    let mut r = csv::Reader::from_path(path)?;
    let header = r.headers()?.iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        rows.push(rec?.iter().map(str::to_string).collect());
    }
    Ok((header, rows))
}

fn parse_num(v: &str, path: &Path) -> Result<f64, Error> {
    if v.is_empty() {
        return Ok(f64::NAN);
    }
    v.parse()
        .map_err(|_| Error::Schema(format!("{}: invalid number '{v}'", path.display())))
}

fn cmd_tree(a: &TreeArgs) -> Result<(), Error> {
    let cfg = a.config.load()?;
    let params: CartParams = cfg.cart;
    let inputs_path = a.fit.join("tree_inputs.csv");
    let draws_path = a.fit.join("csace_draws.csv");
    let (header, rows) = read_csv(&inputs_path)?;
    if header.len() < 3 {
        return Err(Error::Schema(format!("{}: no covariate columns", inputs_path.display())));
    }
    let names = header[2..].to_vec();
    let mut individuals = Vec::with_capacity(rows.len());
    let mut responses = Vec::with_capacity(rows.len());
    let mut covariates = Vec::with_capacity(rows.len());
    for row in &rows {
        individuals.push(
            row[0]
                .parse::<usize>()
                .map_err(|_| Error::Schema(format!("{}: bad individual '{}'", inputs_path.display(), row[0])))?,
        );
        responses.push(parse_num(&row[1], &inputs_path)?);
        covariates.push(row[2..].iter().map(|v| parse_num(v, &inputs_path)).collect::<Result<Vec<_>, _>>()?);
    }
    let (dheader, drows) = read_csv(&draws_path)?;
    let cols: Vec<String> = individuals.iter().map(|i| i.to_string()).collect();
    if dheader[1..] != cols[..] {
        return Err(Error::Schema(format!(
            "{} and {} list different individuals",
            inputs_path.display(),
            draws_path.display()
        )));
    }
    let mut values = Vec::with_capacity(drows.len() * cols.len());
    for row in &drows {
        for v in &row[1..] {
            values.push(parse_num(v, &draws_path)?);
        }
    }
    let draws = CsaceDraws {
        n_draws: drows.len(),
        individuals,
        values,
    };
    let tree = TreeInputs {
        responses,
        covariates,
        draws,
        names,
    }
    .fit(params)?;

    let out_dir = a.out.clone().unwrap_or_else(|| a.fit.clone());
    fs::create_dir_all(&out_dir).map_err(io_err(&out_dir))?;
    let text = tree.render_text();
    write(&out_dir.join("tree.txt"), &text)?;
    let dot = a.dot.clone().unwrap_or_else(|| out_dir.join("tree.dot"));
    write(&dot, &tree.render_dot())?;
    print!("{text}");
    Ok(())
}

fn cmd_diagnose(a: &DiagnoseArgs) -> Result<(), Error> {
    let mut report = String::new();
    for (file, value_col, label) in [
        ("sace_trace.csv", 2, "sace"),
        ("loglik_trace.csv", 2, "loglik"),
    ] {
        let path = a.fit.join(file);
        let (_, rows) = read_csv(&path)?;
        let mut chains: Vec<Vec<f64>> = Vec::new();
        for row in &rows {
            let c: usize = row[0]
                .parse()
                .map_err(|_| Error::Schema(format!("{}: bad chain '{}'", path.display(), row[0])))?;
            let v = parse_num(&row[value_col], &path)?;
            if chains.len() <= c {
                chains.resize(c + 1, Vec::new());
            }
            if v.is_finite() {
                chains[c].push(v);
            }
        }
        if label == "loglik" {
            // Drop the first half of each trace as burn-in.
            for c in &mut chains {
                let h = c.len() / 2;
                c.drain(..h);
            }
        }
        for (k, c) in chains.iter().enumerate() {
            let mean = c.iter().sum::<f64>() / c.len().max(1) as f64;
            let _ = writeln!(report, "{label}_chain{k}_mean = {mean:.6}");
            let _ = writeln!(report, "{label}_chain{k}_ess = {:.1}", effective_sample_size(c));
        }
        let _ = writeln!(report, "{label}_split_rhat = {:.4}", split_rhat(&chains));
    }
    write(&a.fit.join("diagnostics.txt"), &report)?;
    print!("{report}");
    Ok(())
}
