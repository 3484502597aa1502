use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use cptforge_core::bn::{serialize_native, validate_network, RawNetwork};
use cptforge_core::classify::{hill_climb_structure, naive_bayes_structure};
use cptforge_core::dataset::{count_dataset, Dataset};
use cptforge_core::estimation::{parameterize, EdpConfig, Prior};
use cptforge_core::metrics::{bn_kl, cpt_kl, KlConfig};
use cptforge_core::prior::{PriorTable, Scheme};
use cptforge_core::Network;
use cptforge_elicit::ContextSet;
use cptforge_experiments::classification::{run_classification, write_classification_report};
use cptforge_experiments::config::DatasetSpec;
use cptforge_experiments::kl_eval::{method_prior, run_kl_eval, write_kl_report};
use cptforge_experiments::setup::{contexts_for, make_provider, open_cache, Elicitor};
use cptforge_experiments::sweep::{draw_counts, run_edp_sweep, write_sweep_report};
use cptforge_experiments::{AlphaPolicy, ExperimentConfig, Method, SamplingMode};

/// Discrete Bayesian networks with elicited priors.
#[derive(Parser)]
#[command(name = "cptforge", version)]
struct Cli {
    /// Experiment configuration (TOML); defaults apply when absent.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the configured seed list with this single seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output file, or output directory for report commands.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Checks a network file and lists every violation.
    Validate { network: PathBuf },
    /// Elicits a prior table for a network's structure.
    Elicit(ElicitArgs),
    /// Fits CPTs from a prior and/or CSV data.
    Fuse(FuseArgs),
    /// Draws data from a network.
    Sample(SampleArgs),
    /// KL between two networks, or the configured scheme comparison.
    Kl(KlArgs),
    /// EDP sample-size sweep.
    Sweep(SweepArgs),
    /// Classification with elicited priors.
    Classify(ClassifyArgs),
    /// Hill-climbing structure search on CSV data, with MLE parameters.
    LearnStructure(LearnArgs),
}

#[derive(Args)]
struct ElicitArgs {
    /// Network whose structure is elicited; also the mock provider's truth.
    network: PathBuf,
    /// One of sep-state, full-dist, token-prob, uniform, random, scrambled,
    /// no-context. Defaults to the configured prior scheme.
    #[arg(long, value_parser = parse_method)]
    method: Option<Method>,
    /// Node contexts (JSON); otherwise looked up in the contexts directory.
    #[arg(long)]
    contexts: Option<PathBuf>,
}

#[derive(Args)]
struct FuseArgs {
    /// Network supplying the structure; its parameters are ignored.
    network: PathBuf,
    /// Prior table (JSON) written by `elicit`.
    #[arg(long)]
    prior: Option<PathBuf>,
    /// CSV with one column per variable.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Pseudocount mass; defaults to the configured policy at the data size.
    #[arg(long)]
    alpha: Option<f64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Forward,
    PerRow,
    PerRowScaled,
}

#[derive(Args)]
struct SampleArgs {
    network: PathBuf,
    /// Rows (forward) or draws per CPT row (per-row modes).
    #[arg(short, long)]
    n: usize,
    /// Forward sampling writes CSV rows; per-row modes write a count table.
    #[arg(long, value_enum, default_value = "forward")]
    mode: Mode,
}

#[derive(Args)]
struct KlArgs {
    /// Reference network; with `estimate`, prints both divergences.
    truth: Option<PathBuf>,
    estimate: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    /// Fixed alpha for every size instead of the configured policy.
    #[arg(long)]
    alpha: Option<f64>,
}

#[derive(Args)]
struct ClassifyArgs {
    /// Extra CSV dataset to evaluate.
    #[arg(long, requires = "target")]
    data: Option<PathBuf>,
    /// Class column of `--data`.
    #[arg(long)]
    target: Option<String>,
}

#[derive(Args)]
struct LearnArgs {
    data: PathBuf,
    #[arg(long)]
    max_parents: Option<usize>,
    /// Naive Bayes structure around this class column instead of a search.
    #[arg(long)]
    naive_bayes: Option<String>,
}

fn parse_method(s: &str) -> Result<Method, String> {
    Method::ALL
        .into_iter()
        .find(|m| m.as_str() == s)
        .ok_or_else(|| format!("unknown method `{s}`"))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::load(p).with_context(|| format!("loading {}", p.display()))?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seeds = vec![seed];
    }
    if let Some(out) = &cli.out {
        cfg.out_dir = out.clone();
    }
    Ok(cfg)
}

/// Writes to `--out` when given, otherwise to stdout.
fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir)?;
            }
            std::fs::write(p, text).with_context(|| format!("writing {}", p.display()))
        }
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn load_network(path: &Path) -> Result<Network> {
    Network::load(path).with_context(|| format!("loading {}", path.display()))
}

fn run(cli: Cli) -> Result<ExitCode> {
    let cfg = load_config(&cli)?;
    let out = cli.out.as_deref();
    let seed = cfg.seeds[0];
    match &cli.command {
        Command::Validate { network } => return validate(network),
        Command::Elicit(a) => {
            let truth = load_network(&a.network)?;
            let contexts = match &a.contexts {
                Some(p) => ContextSet::load(p)?,
                None => contexts_for(&cfg, truth.name(), truth.structure())?,
            };
            let method = a.method.unwrap_or(match cfg.prior_scheme {
                Scheme::FullDist => Method::FullDist,
                Scheme::TokenProb => Method::TokenProb,
                _ => Method::SepState,
            });
            let provider = make_provider(&cfg, Some(&truth), seed)?;
            let cache = open_cache(&cfg)?;
            let elicitor = Elicitor {
                cfg: &cfg,
                provider: provider.as_ref(),
                cache: &cache,
            };
            let table = method_prior(&cfg, &elicitor, &truth, &contexts, method, 0, seed)?;
            if table.fallback_rows() > 0 {
                log::warn!(
                    "{} of {} rows fell back to uniform",
                    table.fallback_rows(),
                    table.row_total()
                );
            }
            emit(out, &table.to_json())?;
        }
        Command::Fuse(a) => {
            let base = load_network(&a.network)?;
            let s = base.structure();
            let prior = a
                .prior
                .as_ref()
                .map(|p| -> Result<PriorTable<f64>> { Ok(PriorTable::from_json(&std::fs::read_to_string(p)?)?) })
                .transpose()?;
            let counts = match &a.data {
                Some(p) => {
                    let ds = Dataset::read_csv(File::open(p)?, s.variables())?;
                    Some((ds.len(), count_dataset(s, &ds)?))
                }
                None => None,
            };
            if prior.is_none() && counts.is_none() {
                bail!("fuse needs --prior, --data or both");
            }
            let alpha = match (a.alpha, &counts) {
                (Some(v), _) => v,
                (None, Some((n, _))) if prior.is_some() && *n > 0 => cfg.alpha.alpha(*n),
                _ => 0.0,
            };
            let net = parameterize(
                base.name(),
                s,
                prior.as_ref().map_or(Prior::None, Prior::Table),
                counts.as_ref().map(|(_, c)| c),
                &EdpConfig::new(alpha)?,
            )?;
            emit(out, &serialize_native(&net))?;
        }
        Command::Sample(a) => {
            let net = load_network(&a.network)?;
            match a.mode {
                Mode::Forward => {
                    let ds = cptforge_core::sampling::forward_sample(&net, a.n, seed);
                    let mut buf = Vec::new();
                    ds.write_csv(&mut buf)?;
                    emit(out, std::str::from_utf8(&buf)?)?;
                }
                Mode::PerRow | Mode::PerRowScaled => {
                    let mode = if matches!(a.mode, Mode::PerRow) {
                        SamplingMode::PerRow
                    } else {
                        SamplingMode::PerRowScaled
                    };
                    let counts = draw_counts(&net, mode, a.n, seed);
                    emit(out, &(serde_json::to_string_pretty(&counts)? + "\n"))?;
                }
            }
        }
        Command::Kl(a) => match (&a.truth, &a.estimate) {
            (Some(t), Some(e)) => {
                let (t, e) = (load_network(t)?, load_network(e)?);
                let kl = KlConfig::new(cfg.epsilon)?;
                let v = serde_json::json!({ "bn_kl": bn_kl(&t, &e, &kl)?, "cpt_kl": cpt_kl(&t, &e, &kl)? });
                emit(out, &(serde_json::to_string_pretty(&v)? + "\n"))?;
            }
            (None, None) => {
                let rows = run_kl_eval(&cfg)?;
                write_kl_report(&cfg.out_dir, &rows)?;
                write_config(&cfg)?;
            }
            _ => bail!("kl takes either two networks or none"),
        },
        Command::Sweep(a) => {
            let mut cfg = cfg;
            if let Some(v) = a.alpha {
                cfg.alpha = AlphaPolicy::Fixed { value: v };
            }
            let rows = run_edp_sweep(&cfg)?;
            write_sweep_report(&cfg.out_dir, &rows)?;
            write_config(&cfg)?;
        }
        Command::Classify(a) => {
            let mut cfg = cfg;
            if let (Some(path), Some(target)) = (&a.data, &a.target) {
                cfg.classification.datasets.push(DatasetSpec {
                    name: path
                        .file_stem()
                        .map_or("data".into(), |s| s.to_string_lossy().into_owned()),
                    path: path.clone(),
                    target: target.clone(),
                    truth: None,
                    contexts: None,
                });
            }
            let rows = run_classification(&cfg)?;
            write_classification_report(&cfg.out_dir, &rows)?;
            write_config(&cfg)?;
        }
        Command::LearnStructure(a) => {
            let ds = Dataset::read_csv_infer(File::open(&a.data)?)?;
            let structure = match &a.naive_bayes {
                Some(target) => naive_bayes_structure(&ds.variables(), target)?,
                None => hill_climb_structure(&ds, a.max_parents.unwrap_or(cfg.classification.max_parents))?,
            };
            let counts = count_dataset(&structure, &ds)?;
            let name = a
                .data
                .file_stem()
                .map_or("learned".into(), |s| s.to_string_lossy().into_owned());
            let net: Network = parameterize(&name, &structure, Prior::None, Some(&counts), &EdpConfig::new(0.0)?)?;
            emit(out, &serialize_native(&net))?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

/// Records the configuration a report was produced with next to it.
fn write_config(cfg: &ExperimentConfig) -> Result<()> {
    std::fs::create_dir_all(&cfg.out_dir)?;
    std::fs::write(cfg.out_dir.join("config.toml"), cfg.to_toml())?;
    Ok(())
}

fn validate(path: &Path) -> Result<ExitCode> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let is_bif = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("bif"));
    if is_bif {
        return Ok(match cptforge_core::bn::parse_bif::<f64>(&text) {
            Ok(_) => {
                println!("ok");
                ExitCode::SUCCESS
            }
            Err(e) => {
                println!("{e}");
                ExitCode::FAILURE
            }
        });
    }
    let raw: RawNetwork<f64> = serde_json::from_str(&text).context("not a network file")?;
    let report = validate_network(&raw);
    if report.is_empty() {
        println!("ok");
        return Ok(ExitCode::SUCCESS);
    }
    for v in &report.violations {
        println!("{v}");
    }
    Ok(ExitCode::FAILURE)
}
