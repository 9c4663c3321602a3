mod infer;

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use nalgebra::DVector;
use solvforge::chemio::{load_dataset, preprocess_filter, write_rejections, write_smiles, FilterOutcome, Rejection};
use solvforge::descriptors::{build_feature_matrix, featurize_molecule, read_feature_csv, write_feature_csv, FeatureMatrix};
use solvforge::learn::{r2, read_model, run_strategy, write_model, write_report_csv, AnnConfig, ModelFile, Strategy, StrategyConfig};
use solvforge::select::{default_lambda_grid, fsp_select, lasso_select, Evaluator};

#[derive(Parser)]
#[command(name = "solvforge", version, about = "Solubility models on two-layered graph descriptors, and MILP-based inverse design")]
struct Cli {
    /// Seed for every random choice (CV partitions, network initialization).
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Cap on worker threads.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Drop unusable records; writes the survivors and the reasons for the rest.
    Preprocess {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        sdf: Option<PathBuf>,
        /// Survivors as `id,smiles,value`.
        #[arg(long)]
        out: PathBuf,
        /// Defaults to `<out>` with extension `rejections.csv`.
        #[arg(long)]
        rejections: Option<PathBuf>,
    },
    /// Descriptor CSV for every record that survives preprocessing.
    Featurize {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        sdf: Option<PathBuf>,
        #[arg(long, default_value_t = 2)]
        rho: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Descriptor selection only.
    Select {
        #[arg(long)]
        features: PathBuf,
        /// CSV with `id` and `value` columns (the dataset file works).
        #[arg(long)]
        targets: PathBuf,
        #[arg(long, value_enum, default_value_t = Method::Fsp)]
        method: Method,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long, value_enum, default_value_t = Score::Cv)]
        evaluator: Score,
        /// 5-fold CV repetitions inside the evaluator.
        #[arg(long, default_value_t = 1)]
        repeats: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Select, evaluate and fit a final model.
    Train {
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        targets: PathBuf,
        #[arg(long, default_value = "FSP-MLR")]
        strategy: String,
        /// Descriptor count for FSP; scanned when omitted.
        #[arg(long)]
        k: Option<usize>,
        #[arg(long, default_value_t = 10)]
        repeats: usize,
        /// ρ the features were computed with; stored in the model.
        #[arg(long, default_value_t = 2)]
        rho: usize,
        /// Hidden layer widths, comma separated.
        #[arg(long, default_value = "10")]
        hidden: String,
        #[arg(long, default_value_t = 2000)]
        epochs: usize,
        #[arg(long)]
        out: PathBuf,
        /// Defaults to `<out>` with extension `report.csv`.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Predictions of a saved model on a feature CSV.
    Eval {
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        targets: Option<PathBuf>,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Writes the inverse problem as CPLEX LP text (and a `.meta` file for decoding).
    InferBuild(infer::BuildArgs),
    /// Reads a solver solution and writes the inferred structure.
    InferDecode(infer::DecodeArgs),
    /// Checks a structure against a specification and a model.
    Validate(infer::ValidateArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Fsp,
    Lasso,
}

#[derive(Clone, Copy, ValueEnum)]
enum Score {
    Train,
    Cv,
    Loov,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

fn filtered(input: &Path, sdf: Option<&Path>) -> Result<(FilterOutcome, Vec<Rejection>)> {
    let d = load_dataset(input, sdf)?;
    let parse_failures = d.rejected;
    Ok((preprocess_filter(d.records), parse_failures))
}

fn read_targets(path: &Path) -> Result<HashMap<String, f64>> {
    let mut r = csv::Reader::from_path(path).with_context(|| format!("cannot read {}", path.display()))?;
    let h = r.headers()?.clone();
    let col = |name: &str| h.iter().position(|c| c == name).with_context(|| format!("{} has no `{name}` column", path.display()));
    let (id, value) = (col("id")?, col("value")?);
    let mut out = HashMap::new();
    for rec in r.records() {
        let rec = rec?;
        let v: f64 = rec[value].trim().parse().with_context(|| format!("bad value for `{}`", &rec[id]))?;
        out.insert(rec[id].to_string(), v);
    }
    Ok(out)
}

fn aligned(fm: &FeatureMatrix, targets: &HashMap<String, f64>) -> Result<DVector<f64>> {
    let mut y = Vec::with_capacity(fm.rows());
    for id in &fm.ids {
        y.push(*targets.get(id).with_context(|| format!("no target value for `{id}`"))?);
    }
    Ok(DVector::from_vec(y))
}

fn load_xy(features: &Path, targets: &Path) -> Result<(FeatureMatrix, DVector<f64>)> {
    let fm = read_feature_csv(&read(features)?)?;
    let y = aligned(&fm, &read_targets(targets)?)?;
    Ok((fm, y))
}

fn run(cli: Cli) -> Result<()> {
    let seed = cli.seed;
    match cli.cmd {
        Cmd::Preprocess { input, sdf, out, rejections } => {
            let (kept, mut rejected) = filtered(&input, sdf.as_deref())?;
            rejected.extend(kept.rejected);
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["id", "smiles", "value"])?;
            for r in &kept.kept {
                w.write_record([r.id.clone(), write_smiles(&r.molecule), r.value.to_string()])?;
            }
            write(&out, &String::from_utf8(w.into_inner()?)?)?;
            let rej = rejections.unwrap_or_else(|| out.with_extension("rejections.csv"));
            write(&rej, &write_rejections(&rejected))?;
            eprintln!("kept {}, rejected {}", kept.kept.len(), rejected.len());
        }
        Cmd::Featurize { input, sdf, rho, out } => {
            let (kept, parse_failures) = filtered(&input, sdf.as_deref())?;
            let vecs = kept
                .kept
                .iter()
                .map(|r| featurize_molecule(&r.molecule, rho).with_context(|| format!("featurizing `{}`", r.id)))
                .collect::<Result<Vec<_>>>()?;
            let fm = build_feature_matrix(kept.kept.iter().map(|r| r.id.clone()).collect(), &vecs)?;
            write(&out, &write_feature_csv(&fm))?;
            eprintln!("{} rows, {} descriptors, {} records dropped", fm.rows(), fm.names.len(), kept.rejected.len() + parse_failures.len());
        }
        Cmd::Select {
            features,
            targets,
            method,
            k,
            evaluator,
            repeats,
            out,
        } => {
            let (fm, y) = load_xy(&features, &targets)?;
            let mut text = String::from("method,seed,round,descriptor,score\n");
            match method {
                Method::Fsp => {
                    let k = k.context("--k is required for FSP selection")?;
                    let ev = match evaluator {
                        Score::Train => Evaluator::TrainingR2,
                        Score::Cv => Evaluator::Cv { repeats, seed },
                        Score::Loov => Evaluator::Loov,
                    };
                    let trace = fsp_select(&fm.data, &y, &fm.names, k, ev)?;
                    for (i, (n, s)) in trace.rounds.iter().enumerate() {
                        text += &format!("fsp,{seed},{},{n},{s:.10}\n", i + 1);
                    }
                }
                Method::Lasso => {
                    let base = StrategyConfig::default().lasso;
                    let (kept, lambda) = lasso_select(&fm.data, &y, &fm.names, &default_lambda_grid(), &base, seed)?;
                    for (i, n) in kept.iter().enumerate() {
                        text += &format!("lasso,{seed},{},{n},{lambda:.10e}\n", i + 1);
                    }
                }
            }
            write(&out, &text)?;
        }
        Cmd::Train {
            features,
            targets,
            strategy,
            k,
            repeats,
            rho,
            hidden,
            epochs,
            out,
            report,
        } => {
            let strategy: Strategy = strategy.parse()?;
            let hidden = hidden
                .split(',')
                .map(|w| w.trim().parse::<usize>())
                .collect::<Result<Vec<_>, _>>()
                .context("--hidden takes comma separated layer widths")?;
            let (fm, y) = load_xy(&features, &targets)?;
            let cfg = StrategyConfig {
                k,
                repeats,
                seed,
                ann: AnnConfig {
                    hidden,
                    epochs,
                    ..AnnConfig::default()
                },
                ..StrategyConfig::default()
            };
            let outcome = run_strategy(&fm, &y, strategy, &cfg)?;
            let model = write_model(&ModelFile {
                rho,
                predictor: outcome.model,
            });
            let (head, rest) = model.split_once('\n').expect("model text has a header");
            write(&out, &format!("{head}\n# strategy {strategy}\n# seed {seed}\n{rest}"))?;
            let report_path = report.unwrap_or_else(|| out.with_extension("report.csv"));
            write(&report_path, &write_report_csv(&outcome.report))?;
            eprintln!("{strategy}: score {:.4} with {} descriptors", outcome.report.score(), outcome.report.selected.len());
        }
        Cmd::Eval { features, targets, model, out } => {
            let m = read_model(&read(&model)?)?;
            let fm = read_feature_csv(&read(&features)?)?;
            // Columns absent from this feature file were zero for every row.
            let x = nalgebra::DMatrix::from_fn(fm.rows(), m.predictor.names().len(), |i, j| {
                fm.column_index(&m.predictor.names()[j]).map_or(0.0, |c| fm.data[(i, c)])
            });
            let pred = m.predictor.predict(&x);
            let y = targets.map(|t| read_targets(&t).and_then(|t| aligned(&fm, &t))).transpose()?;
            let mut text = String::from("id,observed,predicted\n");
            for (i, id) in fm.ids.iter().enumerate() {
                let obs = y.as_ref().map_or(String::new(), |y| y[i].to_string());
                text += &format!("{id},{obs},{:.10}\n", pred[i]);
            }
            write(&out, &text)?;
            if let Some(y) = y {
                println!("r2 {:.6}", r2(&pred, &y)?);
            }
        }
        Cmd::InferBuild(a) => infer::build(a, seed)?,
        Cmd::InferDecode(a) => infer::decode(a)?,
        Cmd::Validate(a) => infer::validate(a)?,
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match std::panic::catch_unwind(|| run(cli)) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(_) => ExitCode::from(2),
    }
}
