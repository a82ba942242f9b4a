use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::parser::ValueSource;
use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use gcr::config::{GcrConfig, Variant};
use gcr::error::{Error, Result};
use gcr::eval::{evaluate, rank, write_ranked_lists};
use gcr::features::{l2_normalize, load_features, save_features};
use gcr::pca::{project, write_projection};
use gcr::pipeline::{self, check_out_dir, Baseline, Input, PipelineConfig};
use gcr::pvg::{pvg, PvgConfig, PvgMethod};
use gcr::synth::{generate, SynthConfig};

#[derive(Parser, Debug)]
#[command(name = "gcr", version, about = "Graph-convolution re-ranking for re-ID features")]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true, env = "GCR_THREADS")]
    threads: Option<usize>,

    #[arg(long, global = true, value_enum, default_value_t = ReportFormat::Json)]
    report: ReportFormat,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum ReportFormat {
    Json,
    Table,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a synthetic feature set.
    Gen {
        #[command(flatten)]
        synth: SynthArgs,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Condense tracklets into profile vectors.
    Pvg {
        #[command(flatten)]
        input: FileArgs,
        #[command(flatten)]
        pvg: PvgArgs,
        #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
        pre_normalize: bool,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Propagate features over the similarity graphs.
    Rerank {
        #[command(flatten)]
        input: FileArgs,
        #[command(flatten)]
        gcr: GcrArgs,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
        /// Also write the iteration-0 graphs as CSV.
        #[arg(long)]
        dump_graph: bool,
    },
    /// Evaluate a feature set.
    Eval {
        #[command(flatten)]
        input: FileArgs,
        /// Write the top-N ranked lists per query.
        #[arg(long, value_name = "N")]
        ranked_list: Option<usize>,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Profiles, propagation and before/after evaluation in one run.
    Pipeline {
        #[command(flatten)]
        input: OptFileArgs,
        #[command(flatten)]
        synth: SynthArgs,
        #[command(flatten)]
        gcr: GcrArgs,
        #[command(flatten)]
        pvg: PvgArgs,
        /// `mean` also reports mean-profile metrics.
        #[arg(long, value_enum, default_value_t = BaselineArg::Same)]
        baseline: BaselineArg,
        #[arg(long)]
        out_dir: Option<PathBuf>,
        #[arg(long, requires = "out_dir")]
        dump_graph: bool,
        #[arg(long, value_name = "N", requires = "out_dir")]
        ranked_list: Option<usize>,
    },
    /// Two-component PCA of a feature set.
    Project {
        #[command(flatten)]
        input: FileArgs,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
}

#[derive(Args, Debug)]
struct FileArgs {
    #[arg(long)]
    features: PathBuf,
    #[arg(long)]
    meta: PathBuf,
}

#[derive(Args, Debug)]
struct OptFileArgs {
    /// Feature file; synthetic data is generated when absent.
    #[arg(long, requires = "meta")]
    features: Option<PathBuf>,
    #[arg(long, requires = "features")]
    meta: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SynthArgs {
    #[arg(long, default_value_t = 200)]
    ids: usize,
    #[arg(long, default_value_t = 4)]
    cameras: usize,
    #[arg(long, default_value_t = 2)]
    images: usize,
    #[arg(long, default_value_t = 64)]
    dim: usize,
    #[arg(long, default_value_t = 1.0)]
    id_spread: f64,
    #[arg(long, default_value_t = 0.16)]
    noise: f64,
    #[arg(long, default_value_t = 0.3)]
    camera_bias: f64,
    #[arg(long, default_value_t = 0.0)]
    distractors: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl SynthArgs {
    fn config(&self) -> SynthConfig {
        SynthConfig {
            num_ids: self.ids,
            cameras: self.cameras,
            images_per_id_per_camera: self.images,
            dim: self.dim,
            id_spread: self.id_spread,
            noise: self.noise,
            camera_bias: self.camera_bias,
            distractor_fraction: self.distractors,
            seed: self.seed,
        }
    }
}

#[derive(Args, Debug)]
struct GcrArgs {
    #[arg(long, default_value_t = 15)]
    k_g: usize,
    #[arg(long, default_value_t = 3)]
    k_c: usize,
    #[arg(long, default_value_t = 0.2)]
    gamma: f64,
    #[arg(long, default_value_t = 0.7)]
    alpha: f64,
    #[arg(long, default_value_t = 3)]
    iterations: usize,
    #[arg(long, default_value = "nonsym")]
    variant: Variant,
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
    renormalize: bool,
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
    pre_normalize: bool,
}

impl GcrArgs {
    fn config(&self) -> GcrConfig {
        GcrConfig {
            k_g: self.k_g,
            k_c: self.k_c,
            gamma: self.gamma,
            alpha: self.alpha,
            iterations: self.iterations,
            variant: self.variant,
            renormalize: self.renormalize,
            pre_normalize: self.pre_normalize,
        }
    }
}

#[derive(Args, Debug)]
struct PvgArgs {
    #[arg(long, default_value_t = 10.0)]
    lambda_p: f64,
    #[arg(long, default_value = "ridge")]
    pvg_method: PvgMethod,
}

impl PvgArgs {
    fn config(&self) -> PvgConfig {
        PvgConfig {
            lambda_p: self.lambda_p,
            method: self.pvg_method,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum BaselineArg {
    Same,
    Mean,
}

#[derive(Serialize)]
struct Resolved<'a, T: Serialize> {
    command: &'a str,
    threads: usize,
    report: ReportFormat,
    config: T,
}

fn log_config<T: Serialize>(command: &str, threads: usize, report: ReportFormat, config: T) {
    let resolved = Resolved {
        command,
        threads,
        report,
        config,
    };
    match serde_json::to_string(&resolved) {
        Ok(line) => log::info!("config {line}"),
        Err(e) => log::warn!("could not serialize config: {e}"),
    }
}

fn init_threads(requested: Option<usize>) -> Result<usize> {
    let n = match requested {
        Some(0) => return Err(Error::Config("--threads must be positive".into())),
        Some(n) => n,
        None => std::thread::available_parallelism().map_or(1, |n| n.get()),
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    faer::set_global_parallelism(if n == 1 {
        faer::Par::Seq
    } else {
        faer::Par::rayon(n)
    });
    Ok(n)
}

fn print_json<T: Serialize>(value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::Numeric(format!("cannot serialize report: {e}")))?;
    println!("{text}");
    Ok(())
}

fn prepared_out_dir(dir: &Path) -> Result<&Path> {
    check_out_dir(dir)?;
    Ok(dir)
}

const SYNTH_FLAGS: [&str; 9] = [
    "ids",
    "cameras",
    "images",
    "dim",
    "id_spread",
    "noise",
    "camera_bias",
    "distractors",
    "seed",
];

fn run(cli: Cli, synth_flags_given: bool) -> Result<()> {
    let threads = init_threads(cli.threads)?;
    let report = cli.report;
    match cli.command {
        Command::Gen { synth, out_dir } => {
            let cfg = synth.config();
            log_config("gen", threads, report, &cfg);
            let dir = prepared_out_dir(&out_dir)?;
            let fs = generate(&cfg)?;
            save_features(&fs, dir.join("features.gcrf"), dir.join("meta.csv"))?;
            log::info!("wrote {} rows to {}", fs.len(), dir.display());
        }
        Command::Pvg {
            input,
            pvg: args,
            pre_normalize,
            out_dir,
        } => {
            let cfg = args.config();
            log_config(
                "pvg",
                threads,
                report,
                serde_json::json!({ "pvg": cfg, "pre_normalize": pre_normalize }),
            );
            cfg.validate()?;
            let dir = prepared_out_dir(&out_dir)?;
            let mut fs = load_features(&input.features, &input.meta)?;
            if pre_normalize {
                fs = l2_normalize(&fs)?;
            }
            let profiles = pvg(&fs, &cfg)?;
            for w in &profiles.warnings {
                log::warn!("{w}");
            }
            profiles.save(
                dir.join("profiles.gcrf"),
                dir.join("profiles.csv"),
                dir.join("provenance.json"),
            )?;
        }
        Command::Rerank {
            input,
            gcr: args,
            out_dir,
            dump_graph,
        } => {
            let cfg = args.config();
            log_config("rerank", threads, report, &cfg);
            cfg.validate()?;
            let dir = prepared_out_dir(&out_dir)?;
            let fs = load_features(&input.features, &input.meta)?;
            if dump_graph {
                pipeline::dump_graphs(&fs, &cfg, dir)?;
            }
            let out = gcr::gcr(&fs, &cfg)?;
            save_features(&out, dir.join("reranked.gcrf"), dir.join("reranked.csv"))?;
        }
        Command::Eval {
            input,
            ranked_list,
            out_dir,
        } => {
            log_config(
                "eval",
                threads,
                report,
                serde_json::json!({ "features": input.features, "meta": input.meta, "ranked_list": ranked_list }),
            );
            if ranked_list.is_some() {
                check_out_dir(&out_dir)?;
            }
            let fs = load_features(&input.features, &input.meta)?;
            let r = evaluate(&fs)?;
            if let Some(top) = ranked_list {
                write_ranked_lists(&fs, &rank(&fs)?, Some(top), out_dir.join("ranked.csv"))?;
            }
            match report {
                ReportFormat::Json => print_json(&r)?,
                ReportFormat::Table => print!("{}", r.to_table()),
            }
        }
        Command::Pipeline {
            input,
            synth,
            gcr: gcr_args,
            pvg: pvg_args,
            baseline,
            out_dir,
            dump_graph,
            ranked_list,
        } => {
            let input = match (input.features, input.meta) {
                (Some(_), Some(_)) if synth_flags_given => {
                    return Err(Error::Config(
                        "give either --features/--meta or synthetic data flags, not both".into(),
                    ))
                }
                (Some(features), Some(meta)) => Input::Files { features, meta },
                _ => Input::Synth(synth.config()),
            };
            let cfg = PipelineConfig {
                input,
                gcr: gcr_args.config(),
                pvg: pvg_args.config(),
                baseline: match baseline {
                    BaselineArg::Same => Baseline::Same,
                    BaselineArg::Mean => Baseline::Mean,
                },
                out_dir,
                dump_graph,
                ranked_list,
            };
            log_config("pipeline", threads, report, &cfg);
            let r = pipeline::run(&cfg)?;
            match report {
                ReportFormat::Json => print_json(&r)?,
                ReportFormat::Table => print!("{}", r.to_table()),
            }
        }
        Command::Project { input, out_dir } => {
            log_config(
                "project",
                threads,
                report,
                serde_json::json!({ "features": input.features, "meta": input.meta }),
            );
            let dir = prepared_out_dir(&out_dir)?;
            let fs = load_features(&input.features, &input.meta)?;
            let p = project(&fs)?;
            write_projection(&fs, &p, &dir.join("projection.csv"))?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let parsed = Cli::command()
        .try_get_matches()
        .and_then(|m| Cli::from_arg_matches(&m).map(|cli| (cli, m)));
    let (cli, matches) = match parsed {
        Ok(v) => v,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let synth_flags_given = matches.subcommand_matches("pipeline").is_some_and(|m| {
        SYNTH_FLAGS
            .iter()
            .any(|id| m.value_source(id) == Some(ValueSource::CommandLine))
    });
    match run(cli, synth_flags_given) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
