//! Subcommand implementations.

use clap::Args;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::fmt;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use cparls::index::to_linear;
use cparls::io::{read_model, write_model, write_trace_csv};
use cparls::kernels::{krp_samp, solve_lsq, FactorMatrix, KruskalModel};
use cparls::sampler::{skrp_lev, ModeDistribution};
use cparls::solver::{
    build_fit_estimator, cp_als, cp_arls_lev, exact_fit, exact_mode_solve, initial_factors,
    residual_rel_diff, FitKind, InitMethod, SolverConfig,
};
use cparls::synth::{factor_match_score, gen_synthetic, SynthSpec};
use cparls::tensor::SparseTensor;

use crate::manifest::RunManifest;

pub enum CliError {
    Usage(String),
    Lib(cparls::Error),
    Io(std::io::Error),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "{}", m),
            CliError::Lib(e) => write!(f, "{}", e),
            CliError::Io(e) => write!(f, "{}", e),
        }
    }
}

impl From<cparls::Error> for CliError {
    fn from(e: cparls::Error) -> Self {
        CliError::Lib(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

impl CliError {
    /// 1 usage error, 2 data error, 3 numerical failure.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Io(_) => 2,
            CliError::Lib(e) => match e {
                cparls::Error::InvalidConfig(_) => 1,
                cparls::Error::NonFinite(_)
                | cparls::Error::DegenerateTau(_)
                | cparls::Error::RejectionStalled { .. }
                | cparls::Error::CandidateCapExceeded { .. }
                | cparls::Error::ZeroNorm
                | cparls::Error::IndexOverflow => 3,
                _ => 2,
            },
        }
    }
}

type CliResult<T> = Result<T, CliError>;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

// ---- config file merge: flags win over file keys ----

fn load_config(path: &Option<PathBuf>) -> CliResult<toml::Table> {
    match path {
        None => Ok(toml::Table::new()),
        Some(p) => {
            let text = std::fs::read_to_string(p)?;
            text.parse::<toml::Table>()
                .map_err(|e| usage(format!("bad config file {}: {}", p.display(), e)))
        }
    }
}

fn cfg_usize(t: &toml::Table, key: &str) -> CliResult<Option<usize>> {
    match t.get(key) {
        None => Ok(None),
        Some(toml::Value::Integer(i)) if *i >= 0 => Ok(Some(*i as usize)),
        Some(v) => Err(usage(format!("config key {} has bad value {}", key, v))),
    }
}

fn cfg_u64(t: &toml::Table, key: &str) -> CliResult<Option<u64>> {
    match t.get(key) {
        None => Ok(None),
        Some(toml::Value::Integer(i)) if *i >= 0 => Ok(Some(*i as u64)),
        Some(v) => Err(usage(format!("config key {} has bad value {}", key, v))),
    }
}

fn cfg_f64(t: &toml::Table, key: &str) -> CliResult<Option<f64>> {
    match t.get(key) {
        None => Ok(None),
        Some(toml::Value::Float(x)) => Ok(Some(*x)),
        Some(toml::Value::Integer(i)) => Ok(Some(*i as f64)),
        Some(v) => Err(usage(format!("config key {} has bad value {}", key, v))),
    }
}

fn cfg_string(t: &toml::Table, key: &str) -> CliResult<Option<String>> {
    match t.get(key) {
        None => Ok(None),
        Some(toml::Value::String(s)) => Ok(Some(s.clone())),
        Some(v) => Err(usage(format!("config key {} has bad value {}", key, v))),
    }
}

fn parse_shape(s: &str) -> Result<Vec<usize>, String> {
    s.split(',')
        .map(|t| t.trim().parse::<usize>().map_err(|e| e.to_string()))
        .collect()
}

fn parse_grid(s: &str) -> CliResult<Vec<usize>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<usize>()
                .map_err(|e| usage(format!("bad sample grid entry {}: {}", t, e)))
        })
        .collect()
}

/// `--tau` value: `1/s` resolves against `--samples` once both are known.
fn resolve_tau(raw: &str, samples: usize) -> CliResult<f64> {
    let trimmed = raw.trim();
    if trimmed == "1/s" {
        return Ok(1.0 / samples as f64);
    }
    trimmed
        .parse::<f64>()
        .map_err(|_| usage(format!("bad tau value {}", raw)))
}

fn load_tensor(path: &Path) -> CliResult<SparseTensor> {
    let file = File::open(path)?;
    let (mut t, dropped) = SparseTensor::parse_frostt(BufReader::new(file), None)?;
    if dropped > 0 {
        eprintln!("note: dropped {} explicit zeros from {}", dropped, path.display());
    }
    t.precompute_mode_linearization()?;
    Ok(t)
}

fn load_model_file(path: &Path) -> CliResult<KruskalModel> {
    let file = File::open(path)?;
    Ok(read_model(BufReader::new(file))?)
}

/// Removes files created so far; used when a run fails mid-way.
fn cleanup(paths: &[PathBuf]) {
    for p in paths {
        let _ = std::fs::remove_file(p);
    }
}

// ---- decompose ----

#[derive(Args)]
pub struct DecomposeArgs {
    /// FROSTT .tns tensor file
    pub tensor: PathBuf,
    /// TOML config file; command-line flags win over file keys
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub rank: Option<usize>,
    #[arg(long)]
    pub samples: Option<usize>,
    /// Sampling threshold: `1` (pure random), `1/s`, or a literal in (0,1]
    #[arg(long)]
    pub tau: Option<String>,
    /// arls-lev | als
    #[arg(long)]
    pub method: Option<String>,
    #[arg(long = "epoch-size")]
    pub epoch_size: Option<usize>,
    #[arg(long = "fail-epochs")]
    pub fail_epochs: Option<usize>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long = "max-epochs")]
    pub max_epochs: Option<usize>,
    /// exact | estimated
    #[arg(long)]
    pub fit: Option<String>,
    #[arg(long = "fit-samples")]
    pub fit_samples: Option<usize>,
    #[arg(long = "fit-alpha")]
    pub fit_alpha: Option<f64>,
    /// gaussian | rrf
    #[arg(long)]
    pub init: Option<String>,
    #[arg(long = "init-samples")]
    pub init_samples: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Number of runs; run j uses seed (base seed + j)
    #[arg(long)]
    pub runs: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Keep repeated sampled rows separate instead of combining them
    #[arg(long = "no-combine")]
    pub no_combine: bool,
}

pub fn cmd_decompose(args: &DecomposeArgs) -> CliResult<()> {
    let file_cfg = load_config(&args.config)?;
    let rank = args
        .rank
        .or(cfg_usize(&file_cfg, "rank")?)
        .ok_or_else(|| usage("--rank is required (flag or config file)"))?;
    let method = args
        .method
        .clone()
        .or(cfg_string(&file_cfg, "method")?)
        .unwrap_or_else(|| "arls-lev".to_string());
    let is_als = match method.as_str() {
        "arls-lev" => false,
        "als" => true,
        other => return Err(usage(format!("unknown method {}", other))),
    };
    let samples = args.samples.or(cfg_usize(&file_cfg, "samples")?);
    let tau_raw = args
        .tau
        .clone()
        .or(cfg_string(&file_cfg, "tau")?)
        .unwrap_or_else(|| "1".to_string());
    let epoch_size = args
        .epoch_size
        .or(cfg_usize(&file_cfg, "epoch_size")?)
        .unwrap_or(5);
    let fail_epochs = args
        .fail_epochs
        .or(cfg_usize(&file_cfg, "fail_epochs")?)
        .unwrap_or(3);
    let tol = args.tol.or(cfg_f64(&file_cfg, "tol")?).unwrap_or(1e-4);
    let max_epochs = args
        .max_epochs
        .or(cfg_usize(&file_cfg, "max_epochs")?)
        .unwrap_or(if is_als { 250 } else { 50 });
    let fit_mode = match args
        .fit
        .clone()
        .or(cfg_string(&file_cfg, "fit")?)
        .unwrap_or_else(|| "exact".to_string())
        .as_str()
    {
        "exact" => FitKind::Exact,
        "estimated" => FitKind::Estimated,
        other => return Err(usage(format!("unknown fit mode {}", other))),
    };
    let fit_samples = args
        .fit_samples
        .or(cfg_usize(&file_cfg, "fit_samples")?)
        .unwrap_or(4096);
    let fit_alpha = args
        .fit_alpha
        .or(cfg_f64(&file_cfg, "fit_alpha")?)
        .unwrap_or(0.5);
    let init = match args
        .init
        .clone()
        .or(cfg_string(&file_cfg, "init")?)
        .unwrap_or_else(|| "gaussian".to_string())
        .as_str()
    {
        "gaussian" => InitMethod::Gaussian,
        "rrf" => InitMethod::Rrf,
        other => return Err(usage(format!("unknown init method {}", other))),
    };
    let init_samples = args
        .init_samples
        .or(cfg_usize(&file_cfg, "init_samples")?)
        .unwrap_or(128);
    let base_seed = args.seed.or(cfg_u64(&file_cfg, "seed")?).unwrap_or(0);
    let runs = args.runs.or(cfg_usize(&file_cfg, "runs")?).unwrap_or(1);
    let out_dir = args
        .out
        .clone()
        .or(cfg_string(&file_cfg, "out")?.map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));

    let samples = if is_als {
        samples.unwrap_or(1)
    } else {
        samples.ok_or_else(|| usage("--samples is required for method arls-lev"))?
    };
    let tau = resolve_tau(&tau_raw, samples)?;

    let t = load_tensor(&args.tensor)?;
    std::fs::create_dir_all(&out_dir)?;

    for j in 0..runs {
        let seed = base_seed + j as u64;
        let mut cfg = SolverConfig::new(rank, samples);
        cfg.tau = tau;
        cfg.epoch_size = epoch_size;
        cfg.fail_epochs = fail_epochs;
        cfg.tol = tol;
        cfg.max_epochs = max_epochs;
        cfg.fit_mode = fit_mode;
        cfg.fit_samples = fit_samples;
        cfg.fit_alpha = fit_alpha;
        cfg.init = init;
        cfg.init_samples = init_samples;
        cfg.seed = seed;
        cfg.combine = !args.no_combine;

        let model_path = out_dir.join(format!("run{}.model.txt", j));
        let trace_path = out_dir.join(format!("run{}.trace.csv", j));
        let manifest_path = out_dir.join(format!("run{}.manifest.toml", j));
        let created = vec![model_path.clone(), trace_path.clone(), manifest_path.clone()];

        let result = (|| -> CliResult<()> {
            // a dedicated init stream lets both methods share initializations
            let mut init_rng = ChaCha8Rng::seed_from_u64(seed);
            let init_model = KruskalModel::from_factors(initial_factors(&t, &cfg, &mut init_rng)?)?;
            let (model, traces) = if is_als {
                let (m, tr, used_pinv) = cp_als(&t, rank, tol, max_epochs, &init_model)?;
                if used_pinv {
                    eprintln!("note: run {} used a pseudo-inverse fallback", j);
                }
                (m, tr)
            } else {
                cp_arls_lev(&t, &cfg, &init_model)?
            };
            let mut w = BufWriter::new(File::create(&model_path)?);
            write_model(&model, &mut w)?;
            w.flush()?;
            let mut w = BufWriter::new(File::create(&trace_path)?);
            write_trace_csv(&traces, &mut w)?;
            w.flush()?;

            let mut manifest =
                RunManifest::new("decompose", seed).with_input(&args.tensor)?;
            manifest.set("rank", rank as i64);
            manifest.set("samples", samples as i64);
            manifest.set("tau", tau);
            manifest.set("method", method.clone());
            manifest.set("epoch_size", epoch_size as i64);
            manifest.set("fail_epochs", fail_epochs as i64);
            manifest.set("tol", tol);
            manifest.set("max_epochs", max_epochs as i64);
            manifest.set("fit", fit_mode.as_str());
            manifest.set("fit_samples", fit_samples as i64);
            manifest.set("fit_alpha", fit_alpha);
            manifest.set(
                "init",
                match init {
                    InitMethod::Gaussian => "gaussian",
                    InitMethod::Rrf => "rrf",
                },
            );
            manifest.set("init_samples", init_samples as i64);
            manifest.set("combine", !args.no_combine);
            manifest.set("run_index", j as i64);
            manifest.add_output(&model_path);
            manifest.add_output(&trace_path);
            manifest.write(&manifest_path)?;

            let last = traces.last();
            println!(
                "run {}: fit {} ({}) after {} {}",
                j,
                last.map(|r| r.fit).unwrap_or(f64::NAN),
                fit_mode.as_str(),
                traces.len(),
                if is_als { "iterations" } else { "epochs" }
            );
            Ok(())
        })();
        if let Err(e) = result {
            cleanup(&created);
            return Err(e);
        }
    }
    Ok(())
}

// ---- sample-bench ----

#[derive(Args)]
pub struct SampleBenchArgs {
    /// FROSTT .tns tensor file
    pub tensor: PathBuf,
    /// Frozen factor model file
    pub model: PathBuf,
    /// TOML config file; command-line flags win over file keys
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// 1-based mode whose subproblem is benchmarked
    #[arg(long)]
    pub mode: Option<usize>,
    /// Comma-separated sample counts
    #[arg(long)]
    pub samples: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Also solve the subproblem exactly and report the relative residual difference
    #[arg(long)]
    pub exact: bool,
    /// Output CSV path (stdout when omitted)
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn cmd_sample_bench(args: &SampleBenchArgs) -> CliResult<()> {
    let file_cfg = load_config(&args.config)?;
    let mode1 = args.mode.or(cfg_usize(&file_cfg, "mode")?).unwrap_or(1);
    let grid_raw = args
        .samples
        .clone()
        .or(cfg_string(&file_cfg, "samples")?)
        .unwrap_or_else(|| "128,512,2048,8192".to_string());
    let grid = parse_grid(&grid_raw)?;
    let seed = args.seed.or(cfg_u64(&file_cfg, "seed")?).unwrap_or(0);

    let t = load_tensor(&args.tensor)?;
    let model = load_model_file(&args.model)?;
    if model.shape() != t.shape() {
        return Err(CliError::Lib(cparls::Error::DimMismatch(format!(
            "model shape {:?} vs tensor shape {:?}",
            model.shape(),
            t.shape()
        ))));
    }
    if mode1 < 1 || mode1 > t.order() {
        return Err(usage(format!("mode {} out of range", mode1)));
    }
    let mode = mode1 - 1;
    let others: Vec<&FactorMatrix> = (0..t.order())
        .filter(|&j| j != mode)
        .map(|j| &model.factors[j])
        .collect();
    let dist = ModeDistribution::from_factors(&others)?;
    let excl = t.excluded_shape(mode);
    let b_exact = if args.exact {
        Some(exact_mode_solve(&t, &model.factors, mode)?)
    } else {
        None
    };

    let mut lines = vec![
        "s,tau,combine,s_bar,s_det,p_det,rhs_nnz,plan_s,krp_s,gather_s,solve_s,rel_resid_diff"
            .to_string(),
    ];
    let mut combo = 0u64;
    for &combine in &[true, false] {
        for tau_kind in &["1", "1/s"] {
            for &s in &grid {
                let tau = resolve_tau(tau_kind, s)?;
                let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(combo));
                combo += 1;
                let t0 = Instant::now();
                let plan = skrp_lev(&dist, s, tau, combine, &mut rng)?;
                let plan_s = t0.elapsed().as_secs_f64();
                let t0 = Instant::now();
                let zs = krp_samp(&others, &plan.idx, &plan.wgt)?;
                let krp_s = t0.elapsed().as_secs_f64();
                let t0 = Instant::now();
                let lins: Vec<u128> = plan
                    .idx
                    .iter()
                    .map(|m| to_linear(m, &excl))
                    .collect::<cparls::Result<_>>()?;
                let xs = t.tnsr_samp(mode, &lins, &plan.wgt)?;
                let gather_s = t0.elapsed().as_secs_f64();
                let rhs_nnz = xs.entries.len();
                let t0 = Instant::now();
                let (b, _) = solve_lsq(&zs, &xs)?;
                let solve_s = t0.elapsed().as_secs_f64();
                let rel = match &b_exact {
                    Some(bx) => residual_rel_diff(&t, &model.factors, mode, &b, bx)?.to_string(),
                    None => String::new(),
                };
                lines.push(format!(
                    "{},{},{},{},{},{},{},{},{},{},{},{}",
                    s,
                    tau_kind,
                    combine,
                    plan.len(),
                    plan.s_det,
                    plan.p_det,
                    rhs_nnz,
                    plan_s,
                    krp_s,
                    gather_s,
                    solve_s,
                    rel
                ));
            }
        }
    }
    let text = lines.join("\n") + "\n";
    match &args.out {
        Some(p) => std::fs::write(p, text)?,
        None => print!("{}", text),
    }
    Ok(())
}

// ---- synth ----

#[derive(Args)]
pub struct SynthArgs {
    /// TOML config file; command-line flags win over file keys
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Comma-separated mode sizes, e.g. 50,50,50
    #[arg(long)]
    pub shape: Option<String>,
    #[arg(long)]
    pub rank: Option<usize>,
    #[arg(long)]
    pub concentrated: Option<usize>,
    #[arg(long)]
    pub spread: Option<usize>,
    #[arg(long)]
    pub magnitude: Option<f64>,
    /// Uniform jitter amplitude on concentrated entries
    #[arg(long = "seed-noise")]
    pub seed_noise: Option<f64>,
    /// Relative Gaussian noise level on the formed tensor
    #[arg(long)]
    pub noise: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long = "out-tensor")]
    pub out_tensor: Option<PathBuf>,
    #[arg(long = "out-model")]
    pub out_model: Option<PathBuf>,
}

pub fn cmd_synth(args: &SynthArgs) -> CliResult<()> {
    let file_cfg = load_config(&args.config)?;
    let shape = match args.shape.clone().or(cfg_string(&file_cfg, "shape")?) {
        Some(s) => parse_shape(&s).map_err(usage)?,
        None => vec![50, 50, 50],
    };
    let rank = args.rank.or(cfg_usize(&file_cfg, "rank")?).unwrap_or(25);
    let mut spec = SynthSpec::new(shape, rank);
    if let Some(c) = args.concentrated.or(cfg_usize(&file_cfg, "concentrated")?) {
        spec.n_concentrated = c;
    }
    if let Some(s) = args.spread.or(cfg_usize(&file_cfg, "spread")?) {
        spec.spread = s;
    }
    if let Some(m) = args.magnitude.or(cfg_f64(&file_cfg, "magnitude")?) {
        spec.magnitude = m;
    }
    if let Some(a) = args.seed_noise.or(cfg_f64(&file_cfg, "seed_noise")?) {
        spec.seed_noise = a;
    }
    if let Some(n) = args.noise.or(cfg_f64(&file_cfg, "noise")?) {
        spec.rel_noise = n;
    }
    spec.seed = args.seed.or(cfg_u64(&file_cfg, "seed")?).unwrap_or(0);
    let out_tensor = args
        .out_tensor
        .clone()
        .or(cfg_string(&file_cfg, "out_tensor")?.map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("synthetic.tns"));
    let out_model = args
        .out_model
        .clone()
        .or(cfg_string(&file_cfg, "out_model")?.map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("synthetic.model.txt"));

    let (t, truth) = gen_synthetic(&spec)?;
    let created = vec![out_tensor.clone(), out_model.clone()];
    let result = (|| -> CliResult<()> {
        let mut w = BufWriter::new(File::create(&out_tensor)?);
        t.write_tns(&mut w)?;
        w.flush()?;
        let mut w = BufWriter::new(File::create(&out_model)?);
        write_model(&truth, &mut w)?;
        w.flush()?;
        let mut manifest = RunManifest::new("synth", spec.seed);
        manifest.set(
            "shape",
            toml::Value::Array(
                spec.shape
                    .iter()
                    .map(|&n| toml::Value::Integer(n as i64))
                    .collect(),
            ),
        );
        manifest.set("rank", spec.rank as i64);
        manifest.set("concentrated", spec.n_concentrated as i64);
        manifest.set("spread", spec.spread as i64);
        manifest.set("magnitude", spec.magnitude);
        manifest.set("seed_noise", spec.seed_noise);
        manifest.set("noise", spec.rel_noise);
        manifest.add_output(&out_tensor);
        manifest.add_output(&out_model);
        let manifest_path = out_tensor.with_extension("manifest.toml");
        manifest.write(&manifest_path)?;
        println!(
            "wrote {} ({} nonzeros) and {}",
            out_tensor.display(),
            t.nnz(),
            out_model.display()
        );
        Ok(())
    })();
    if let Err(e) = result {
        cleanup(&created);
        return Err(e);
    }
    Ok(())
}

// ---- score ----

#[derive(Args)]
pub struct ScoreArgs {
    /// FROSTT .tns tensor file
    pub tensor: PathBuf,
    /// Model file to evaluate
    pub model: PathBuf,
    /// Ground-truth model file for factor match scoring
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// Also print a stratified estimated fit
    #[arg(long)]
    pub estimated: bool,
    #[arg(long = "fit-samples")]
    pub fit_samples: Option<usize>,
    #[arg(long = "fit-alpha")]
    pub fit_alpha: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
}

pub fn cmd_score(args: &ScoreArgs) -> CliResult<()> {
    let t = load_tensor(&args.tensor)?;
    let model = load_model_file(&args.model)?;
    println!("exact_fit {}", exact_fit(&t, &model)?);
    if args.estimated {
        let mut rng = ChaCha8Rng::seed_from_u64(args.seed.unwrap_or(0));
        let est = build_fit_estimator(
            &t,
            args.fit_samples.unwrap_or(4096),
            args.fit_alpha.unwrap_or(0.5),
            &mut rng,
        )?;
        println!("estimated_fit {}", est.estimated_fit(&model));
    }
    if let Some(truth_path) = &args.truth {
        let truth = load_model_file(truth_path)?;
        println!("fms {}", factor_match_score(&model, &truth)?);
    }
    Ok(())
}
