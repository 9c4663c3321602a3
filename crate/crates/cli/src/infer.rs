use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use solvforge::chemgraph::suppress_hydrogens;
use solvforge::chemio::{parse_sdf, parse_smiles, write_sdf, write_smiles};
use solvforge::inverse::{
    build_milp, decode_graph, emit_lp, ingest_solution, parse_spec, validate_graph, BuildOptions, InverseModel,
    ObjectiveSense, TopologicalSpec,
};
use solvforge::learn::{read_model, ModelFile};

use crate::{read, write};

#[derive(Clone, Copy, ValueEnum)]
pub enum Objective {
    Feasibility,
    Maximize,
    Minimize,
}

impl Objective {
    fn sense(self) -> ObjectiveSense {
        match self {
            Objective::Feasibility => ObjectiveSense::Feasibility,
            Objective::Maximize => ObjectiveSense::Maximize,
            Objective::Minimize => ObjectiveSense::Minimize,
        }
    }

    fn name(self) -> &'static str {
        match self {
            Objective::Feasibility => "feasibility",
            Objective::Maximize => "maximize",
            Objective::Minimize => "minimize",
        }
    }
}

#[derive(Args)]
pub struct BuildArgs {
    #[arg(long)]
    spec: PathBuf,
    /// Overrides the `model` line of the spec.
    #[arg(long)]
    model: Option<PathBuf>,
    /// Fixed heavy atom count.
    #[arg(long)]
    n: Option<usize>,
    /// Fixed hydrogen count.
    #[arg(long)]
    nh: Option<usize>,
    #[arg(long, value_enum, default_value_t = Objective::Feasibility)]
    objective: Objective,
    /// LP file; with a size grid, one file per (n, nH) pair named `<stem>.n<N>.h<H>.lp`.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
pub struct DecodeArgs {
    /// `name value` lines from the solver.
    #[arg(long)]
    sol: PathBuf,
    /// Build record written next to the LP file. Found automatically when it is
    /// the only `*.lp.meta` beside the solution and no spec is given.
    #[arg(long)]
    meta: Option<PathBuf>,
    #[arg(long, conflicts_with = "meta")]
    spec: Option<PathBuf>,
    #[arg(long, conflicts_with = "meta")]
    model: Option<PathBuf>,
    #[arg(long, conflicts_with = "meta")]
    n: Option<usize>,
    #[arg(long, conflicts_with = "meta")]
    nh: Option<usize>,
    #[arg(long, value_enum, conflicts_with = "meta", default_value_t = Objective::Feasibility)]
    objective: Objective,
    /// Output prefix for `.sdf`, `.smi` and `.report.txt`; defaults to the solution path without extension.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
pub struct ValidateArgs {
    #[arg(long)]
    spec: PathBuf,
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long, conflicts_with = "mol", required_unless_present = "mol")]
    smiles: Option<String>,
    /// SDF file; its first record is checked.
    #[arg(long)]
    mol: Option<PathBuf>,
}

fn load_spec(spec_path: &Path, model: Option<&Path>) -> Result<(TopologicalSpec, ModelFile, PathBuf)> {
    let spec = parse_spec(&read(spec_path)?).with_context(|| format!("in {}", spec_path.display()))?;
    let model_path = match (model, &spec.model) {
        (Some(m), _) => m.to_path_buf(),
        (None, Some(m)) => spec_path.parent().unwrap_or(Path::new("")).join(m),
        (None, None) => bail!("{} names no model; pass --model", spec_path.display()),
    };
    let mf = read_model(&read(&model_path)?).with_context(|| format!("in {}", model_path.display()))?;
    Ok((spec, mf, model_path))
}

fn compile(spec: &TopologicalSpec, mf: &ModelFile, n: Option<usize>, nh: Option<usize>, objective: Objective) -> Result<InverseModel> {
    let opts = BuildOptions {
        n,
        nh,
        objective: objective.sense(),
    };
    Ok(build_milp(spec, &mf.predictor, mf.rho, &opts)?)
}

/// Sizes to build for. Only a model using `ms_avg` needs both counts fixed,
/// since the average mass is linear only then.
fn size_grid(spec: &TopologicalSpec, mf: &ModelFile, n: Option<usize>, nh: Option<usize>) -> Result<Vec<(Option<usize>, Option<usize>)>> {
    let needs_fixed = mf.predictor.names().iter().any(|s| s == "ms_avg");
    if !needs_fixed || (n.is_some() && nh.is_some()) {
        return Ok(vec![(n, nh)]);
    }
    let ns = match (n, spec.bounds.n) {
        (Some(n), _) => n..=n,
        (None, Some((lo, hi))) => lo..=hi,
        (None, None) => bail!("the model uses ms_avg; give --n or bound n in the spec"),
    };
    let rank = spec.rank();
    let mut out = Vec::new();
    for n in ns {
        // A connected graph on n heavy atoms with this rank has n - 1 + rank
        // edges, which caps the hydrogens at 2n + 2 - 2 rank.
        let hs = match (nh, spec.bounds.nh) {
            (Some(h), _) => h..=h,
            (None, Some((lo, hi))) => lo..=hi,
            (None, None) => 0..=(2 * n + 2).saturating_sub(2 * rank),
        };
        out.extend(hs.map(|h| (Some(n), Some(h))));
    }
    Ok(out)
}

fn opt(v: Option<usize>) -> String {
    v.map_or_else(|| "-".into(), |v| v.to_string())
}

fn meta_text(spec: &Path, model: &Path, rho: usize, n: Option<usize>, nh: Option<usize>, objective: Objective, seed: u64) -> String {
    let abs = |p: &Path| std::fs::canonicalize(p).unwrap_or_else(|_| p.to_path_buf());
    format!(
        "spec {}\nmodel {}\nrho {rho}\nn {}\nnh {}\nobjective {}\nseed {seed}\n",
        abs(spec).display(),
        abs(model).display(),
        opt(n),
        opt(nh),
        objective.name()
    )
}

pub fn build(a: BuildArgs, seed: u64) -> Result<()> {
    let (spec, mf, model_path) = load_spec(&a.spec, a.model.as_deref())?;
    let grid = size_grid(&spec, &mf, a.n, a.nh)?;
    let single = grid.len() == 1;
    for (n, nh) in grid {
        let out = if single {
            a.out.clone()
        } else {
            let stem = a.out.file_stem().and_then(|s| s.to_str()).unwrap_or("model");
            a.out.with_file_name(format!("{stem}.n{}.h{}.lp", opt(n), opt(nh)))
        };
        let m = compile(&spec, &mf, n, nh, a.objective)?;
        write(&out, &emit_lp(&m.milp))?;
        let meta = PathBuf::from(format!("{}.meta", out.display()));
        write(&meta, &meta_text(&a.spec, &model_path, mf.rho, n, nh, a.objective, seed))?;
        println!("{} vars {} constraints {}", out.display(), m.milp.vars.len(), m.milp.constraints.len());
    }
    Ok(())
}

struct Meta {
    spec: PathBuf,
    model: PathBuf,
    n: Option<usize>,
    nh: Option<usize>,
    objective: Objective,
}

fn parse_meta(path: &Path) -> Result<Meta> {
    let text = read(path)?;
    let get = |key: &str| {
        text.lines()
            .find_map(|l| l.strip_prefix(key).and_then(|r| r.strip_prefix(' ')))
            .map(str::trim)
            .with_context(|| format!("{} has no `{key}` line", path.display()))
    };
    let size = |key: &str| -> Result<Option<usize>> {
        match get(key)? {
            "-" => Ok(None),
            v => Ok(Some(v.parse().with_context(|| format!("bad `{key}` in {}", path.display()))?)),
        }
    };
    let objective = Objective::from_str(get("objective")?, false).map_err(anyhow::Error::msg)?;
    Ok(Meta {
        spec: get("spec")?.into(),
        model: get("model")?.into(),
        n: size("n")?,
        nh: size("nh")?,
        objective,
    })
}

fn find_meta(sol: &Path) -> Result<PathBuf> {
    let dir = match sol.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut found: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.to_str().is_some_and(|s| s.ends_with(".lp.meta")))
        .collect();
    found.sort();
    match found.len() {
        1 => Ok(found.pop().unwrap()),
        0 => bail!("no *.lp.meta next to {}; pass --meta or --spec", sol.display()),
        _ => bail!("several *.lp.meta files next to {}; pass --meta", sol.display()),
    }
}

pub fn decode(a: DecodeArgs) -> Result<()> {
    let meta = match (&a.meta, &a.spec) {
        (Some(m), _) => parse_meta(m)?,
        (None, Some(s)) => {
            let (_, _, model) = load_spec(s, a.model.as_deref())?;
            Meta {
                spec: s.clone(),
                model,
                n: a.n,
                nh: a.nh,
                objective: a.objective,
            }
        }
        (None, None) => parse_meta(&find_meta(&a.sol)?)?,
    };
    let (spec, mf, _) = load_spec(&meta.spec, Some(&meta.model))?;
    let model = compile(&spec, &mf, meta.n, meta.nh, meta.objective)?;
    let assignment = ingest_solution(&model, &read(&a.sol)?)?;
    let inferred = decode_graph(&model, &assignment)?;
    let report = validate_graph(&inferred.graph, &spec, &mf.predictor, mf.rho);

    let prefix = a.out.unwrap_or_else(|| a.sol.with_extension(""));
    let with = |ext: &str| PathBuf::from(format!("{}.{ext}", prefix.display()));
    let name = prefix.file_name().and_then(|s| s.to_str()).unwrap_or("inferred").to_string();
    let mol = inferred.graph.to_molecule(name.clone());
    let smiles = write_smiles(&mol);
    write(&with("sdf"), &write_sdf(&mol, &[("SMILES", smiles.clone()), ("PREDICTED", format!("{:.10}", inferred.predicted))]))?;
    write(&with("smi"), &format!("{smiles} {name}\n"))?;
    write(&with("report.txt"), &report.to_string())?;
    println!("{smiles} predicted {:.6}", inferred.predicted);
    if !report.passed() {
        let names: Vec<&str> = report.failures().iter().map(|c| c.name.as_str()).collect();
        bail!("validation failed: {}", names.join(", "));
    }
    Ok(())
}

pub fn validate(a: ValidateArgs) -> Result<()> {
    let (spec, mf, _) = load_spec(&a.spec, a.model.as_deref())?;
    let mol = match (&a.smiles, &a.mol) {
        (Some(s), _) => parse_smiles(s).with_context(|| format!("cannot parse `{s}`"))?,
        (None, Some(p)) => {
            let mut recs = parse_sdf(&read(p)?).with_context(|| format!("in {}", p.display()))?;
            if recs.is_empty() {
                bail!("{} holds no records", p.display());
            }
            recs.swap_remove(0).molecule
        }
        (None, None) => unreachable!("clap requires one of --smiles and --mol"),
    };
    let graph = suppress_hydrogens(&mol)?;
    let report = validate_graph(&graph, &spec, &mf.predictor, mf.rho);
    print!("{report}");
    if !report.passed() {
        bail!("validation failed");
    }
    Ok(())
}
