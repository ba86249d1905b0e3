use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use hullopt::dataset::{Dataset, DATASET_FORMAT};
use hullopt::geometry::linspace;
use hullopt::manifest::{PipelineManifest, Stage};
use hullopt::optimize::{check_provenance, SearchConfig, SearchSpace};
use hullopt::parents::bundled_parents;
use hullopt::pca::{PcaModel, PCA_FORMAT};
use hullopt::pipeline::{self, Scale};
use hullopt::surrogate::{MlpModel, MLP_FORMAT};
use hullopt::{Error, Result};

#[derive(Parser)]
#[command(name = "hullopt", version, about = "Hull-form compression, resistance surrogate and design search")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Root seed for every random stream of the stage.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Output file or directory of the stage.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Pipeline manifest to read upstream artifacts from and update.
    #[arg(long, global = true, default_value = "manifest.json")]
    manifest: PathBuf,
    /// Full-scale sizes: 1131 hulls, 8000 epochs, batches of 2000.
    #[arg(long, global = true)]
    paper_scale: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Write the bundled parent hulls and their summary table.
    Parents,
    /// Fit the principal-component model on a directory of offset tables.
    FitPca {
        #[arg(long)]
        parents: Option<PathBuf>,
        /// Number of retained axes (default: parents - 1).
        #[arg(long)]
        axes: Option<usize>,
    },
    /// Sample hulls and evaluate them over the Froude grid.
    GenDataset {
        #[arg(long)]
        pca: Option<PathBuf>,
        #[arg(long)]
        hulls: Option<usize>,
    },
    /// Train the surrogate network.
    Train {
        #[arg(long)]
        dataset: Option<PathBuf>,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        batch_size: Option<usize>,
    },
    /// Search the design space for the lowest operational merit.
    Optimize {
        #[arg(long)]
        pca: Option<PathBuf>,
        #[arg(long)]
        model: Option<PathBuf>,
        /// Preset operating case: 1 (L = 300 m, Fn 0.20-0.24) or 2 (L = 170 m, Fn 0.26-0.30).
        #[arg(long, default_value_t = 1)]
        case: u8,
        #[arg(long)]
        length: Option<f64>,
        #[arg(long)]
        fn_lower: Option<f64>,
        #[arg(long)]
        fn_upper: Option<f64>,
        #[arg(long)]
        n_u: Option<usize>,
        #[arg(long)]
        n1: Option<usize>,
        #[arg(long)]
        n2: Option<usize>,
        #[arg(long)]
        rounds: Option<usize>,
    },
    /// Write a resistance curve as CSV.
    ExportCurves {
        /// A bundled parent by name.
        #[arg(long, conflicts_with = "params")]
        parent: Option<String>,
        /// Design vector: scaled scores, L/B, B/T (comma separated).
        #[arg(long, value_delimiter = ',')]
        params: Option<Vec<f64>>,
        #[arg(long)]
        pca: Option<PathBuf>,
        /// Adds surrogate predictions when given with --params.
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long, default_value_t = 170.0)]
        length: f64,
        #[arg(long, default_value_t = 0.15)]
        fn_lower: f64,
        #[arg(long, default_value_t = 0.35)]
        fn_upper: f64,
        #[arg(long, default_value_t = 21)]
        n: usize,
    },
}

fn upstream(given: Option<PathBuf>, manifest: &PipelineManifest, stage: Stage, fallback: &str) -> Result<PathBuf> {
    let path = given
        .or_else(|| manifest.path_of(stage).map(Path::to_path_buf))
        .unwrap_or_else(|| PathBuf::from(fallback));
    manifest.verify(stage, &path)?;
    Ok(path)
}

fn run(cli: Cli) -> Result<()> {
    let c = cli.common;
    let scale = if c.paper_scale { Scale::Paper } else { Scale::Desk };
    let mut manifest = PipelineManifest::open(&c.manifest)?;
    match cli.command {
        Command::Parents => {
            let dir = c.out.unwrap_or_else(|| PathBuf::from("parents"));
            let paths = pipeline::write_parents(&dir)?;
            let summary = paths.last().expect("summary written");
            print!("{}", std::fs::read_to_string(summary).map_err(|e| Error::Io {
                path: summary.clone(),
                source: e,
            })?);
            manifest.record(Stage::Parents, summary, "csv", None)?;
        }
        Command::FitPca { parents, axes } => {
            let dir = parents
                .or_else(|| manifest.path_of(Stage::Parents).and_then(Path::parent).map(Path::to_path_buf))
                .unwrap_or_else(|| PathBuf::from("parents"));
            let out = c.out.unwrap_or_else(|| PathBuf::from("pca.json"));
            let model = pipeline::fit_pca(&dir, axes, &out)?;
            println!("axes {} explained variance {:?}", model.n_axes, model.explained_variance);
            println!("parents digest {}", model.parents_digest);
            manifest.record(Stage::Pca, &out, PCA_FORMAT, None)?;
        }
        Command::GenDataset { pca, hulls } => {
            let pca_path = upstream(pca, &manifest, Stage::Pca, "pca.json")?;
            let model = PcaModel::load(&pca_path)?;
            let out = c.out.unwrap_or_else(|| PathBuf::from("dataset.csv"));
            let n = hulls.unwrap_or(scale.n_hulls());
            let ds = pipeline::gen_dataset(&model, n, c.seed, &out)?;
            println!(
                "{} rows ({} hulls x {} speeds), {} test hulls",
                ds.samples.len(),
                n,
                ds.header.froude.len(),
                ds.header.n_test_hulls
            );
            manifest.record(Stage::Dataset, &out, DATASET_FORMAT, Some(c.seed))?;
        }
        Command::Train {
            dataset,
            epochs,
            batch_size,
        } => {
            let path = upstream(dataset, &manifest, Stage::Dataset, "dataset.csv")?;
            let ds = Dataset::load(&path)?;
            if let Some(a) = manifest.artifacts.get(&Stage::Pca) {
                let pca = PcaModel::load(&a.path)?;
                if pca.parents_digest != ds.header.pca_digest {
                    return Err(Error::Provenance(format!(
                        "dataset was generated from PCA model {}, manifest PCA model is {}",
                        ds.header.pca_digest, pca.parents_digest
                    )));
                }
            }
            let mut config = scale.training(c.seed);
            if let Some(e) = epochs {
                config.epochs = e;
            }
            if let Some(b) = batch_size {
                config.batch_size = b;
            }
            let out = c.out.unwrap_or_else(|| PathBuf::from("model.json"));
            let (_, history) = pipeline::train_surrogate(&ds, &config, &out, |epoch, train, test| {
                if epoch % 100 == 0 || epoch == 1 {
                    eprintln!("epoch {epoch}: train {train:.3}% test {test:.3}%");
                }
            })?;
            println!(
                "best test MAPE {:.4}% at epoch {}",
                history.best_test_mape, history.best_epoch
            );
            manifest.record(Stage::Surrogate, &out, MLP_FORMAT, Some(c.seed))?;
        }
        Command::Optimize {
            pca,
            model,
            case,
            length,
            fn_lower,
            fn_upper,
            n_u,
            n1,
            n2,
            rounds,
        } => {
            let pca_path = upstream(pca, &manifest, Stage::Pca, "pca.json")?;
            let model_path = upstream(model, &manifest, Stage::Surrogate, "model.json")?;
            let pca = PcaModel::load(&pca_path)?;
            let model = MlpModel::load(&model_path)?;
            check_provenance(&model, &pca)?;
            if let Some(a) = manifest.artifacts.get(&Stage::Dataset) {
                if a.sha256 != model.provenance.dataset_digest {
                    return Err(Error::Provenance(format!(
                        "surrogate was trained on dataset {}, manifest dataset is {}",
                        model.provenance.dataset_digest, a.sha256
                    )));
                }
            }
            let mut space = match case {
                1 => SearchSpace::case1(pca.n_axes),
                2 => SearchSpace::case2(pca.n_axes),
                _ => return Err(Error::InvalidConfig(format!("unknown case {case}"))),
            };
            if let Some(l) = length {
                space.length = l;
            }
            space.speed = pipeline::speed_range(
                fn_lower.unwrap_or(space.speed.fn_lower),
                fn_upper.unwrap_or(space.speed.fn_upper),
                n_u.unwrap_or(space.speed.n_points),
            )?;
            let mut config = SearchConfig {
                seed: c.seed,
                ..SearchConfig::default()
            };
            config.n1 = n1.unwrap_or(config.n1);
            config.n2 = n2.unwrap_or(config.n2);
            config.k = rounds.unwrap_or(config.k);
            let out = c.out.unwrap_or_else(|| PathBuf::from("search"));
            let res = pipeline::run_search(&model, &pca, &bundled_parents(), &space, &config, &out)?;
            print!("{}", res.report.comparison_table());
            println!(
                "audit delta {:.4} (surrogate test MAPE {:.3}%), {} evaluations, {} warnings, search {:.1} s",
                res.report.audit_delta,
                res.report.surrogate_test_mape,
                res.report.evaluations,
                res.report.warnings,
                res.elapsed_search
            );
            manifest.record(Stage::SearchReport, &out.join(pipeline::REPORT_FILE), pipeline::SEARCH_FORMAT, Some(c.seed))?;
        }
        Command::ExportCurves {
            parent,
            params,
            pca,
            model,
            length,
            fn_lower,
            fn_upper,
            n,
        } => {
            let froude = linspace(fn_lower, fn_upper, n);
            let out = c.out.unwrap_or_else(|| PathBuf::from("curves.csv"));
            let text = match (parent, params) {
                (Some(name), None) => {
                    let p = bundled_parents()
                        .into_iter()
                        .find(|p| p.name == name)
                        .ok_or_else(|| Error::InvalidConfig(format!("unknown parent {name}")))?;
                    pipeline::export_curves(&p.hull(length)?, &froude, None, &out)?
                }
                (None, Some(params)) => {
                    let pca_path = upstream(pca, &manifest, Stage::Pca, "pca.json")?;
                    let pca = PcaModel::load(&pca_path)?;
                    let hull = pipeline::hull_from_design(&pca, &params, length)?;
                    let model = model.map(|m| MlpModel::load(&m)).transpose()?;
                    if let Some(m) = &model {
                        check_provenance(m, &pca)?;
                    }
                    pipeline::export_curves(&hull, &froude, model.as_ref().map(|m| (m, params.as_slice())), &out)?
                }
                _ => return Err(Error::InvalidConfig("give exactly one of --parent or --params".into())),
            };
            print!("{text}");
            // curves are a leaf output, not tracked by the manifest
            return Ok(());
        }
    }
    manifest.save(&c.manifest)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
