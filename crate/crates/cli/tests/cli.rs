use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use solvforge::chemgraph::suppress_hydrogens;
use solvforge::chemio::parse_smiles;
use solvforge::descriptors::{featurize_molecule, Bounds};
use solvforge::inverse::{build_milp, emit_lp, encode_assignment, parse_lp, parse_spec, write_assignment, BuildOptions, Choice};
use solvforge::learn::{write_model, LinearModel, ModelFile, Predictor};

const FIG_SMILES: &str = "CCC1CCC(CCC(=O)O)C1";

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_solvforge")).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn linear(names: &[&str], weights: &[f64], max: f64) -> Predictor {
    Predictor::Linear(LinearModel {
        names: names.iter().map(|s| s.to_string()).collect(),
        weights: weights.to_vec(),
        bias: 0.0,
        bounds: Bounds {
            min: vec![0.0; names.len()],
            max: vec![max; names.len()],
        },
        regularized: false,
    })
}

/// Fig spec with its range centred on the figure molecule's prediction,
/// and the model saved beside it under the name the spec refers to.
fn fig_workspace(dir: &Path, p: Predictor, bounds: Option<&str>) -> (PathBuf, f64) {
    let fig = featurize_molecule(&parse_smiles(FIG_SMILES).unwrap(), 2).unwrap();
    let eta = p.predict_features(&fig);
    let mut text: String = fs::read_to_string(data("fig_spec.txt"))
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with("range"))
        .map(|l| format!("{l}\n"))
        .collect();
    text += &format!("range {} {}\n", eta - 0.01, eta + 0.01);
    if let Some(b) = bounds {
        text = text.replace("n 8 14\nnH 10 24\n", b);
    }
    let spec = dir.join("spec.txt");
    fs::write(&spec, text).unwrap();
    fs::write(dir.join("fig.model"), write_model(&ModelFile { rho: 2, predictor: p })).unwrap();
    (spec, eta)
}

fn fig_choice() -> Choice {
    let mut mult = vec![None; 10];
    for s in [0, 1, 2, 3, 4, 5, 8] {
        mult[s] = Some(1);
    }
    Choice {
        path_len: vec![2],
        fringe: vec![Some(0), Some(1), Some(2), Some(1), Some(1), Some(3), Some(1), None],
        mult,
    }
}

const SMALL: &str = "id,smiles,value
a,CCCCO,-0.4
b,CCCCCO,-1.0
c,CCCCCCO,-1.2
d,CC(C)CCO,-0.7
e,OCCCCO,0.9
f,CCCC(=O)O,0.3
g,CCCCC(=O)O,-0.3
h,CCCC,-2.6
i,CCCCC,-3.2
j,c1ccccc1,-1.6
k,C1CCCCC1,-3.1
l,CCCCCCCC,-5.2
m,CCCCN,0.2
n,CCO,0.5
o,[Na+].[Cl-],0.0
";

#[test]
fn learning_pipeline_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let p = |n: &str| dir.path().join(n);
    fs::write(p("d.csv"), SMALL).unwrap();
    ok(&["preprocess", "--in", s(&p("d.csv")), "--out", s(&p("kept.csv"))]);
    let kept = fs::read_to_string(p("kept.csv")).unwrap();
    assert_eq!(kept.lines().count(), 14);
    let rej = fs::read_to_string(p("kept.rejections.csv")).unwrap();
    assert_eq!(rej.lines().skip(1).map(|l| &l[..2]).collect::<Vec<_>>(), ["o,", "n,"], "{rej}");

    ok(&["featurize", "--in", s(&p("d.csv")), "--out", s(&p("f.csv"))]);
    let feats = fs::read_to_string(p("f.csv")).unwrap();
    assert_eq!(feats.lines().count(), 14);

    ok(&["select", "--features", s(&p("f.csv")), "--targets", s(&p("d.csv")), "--k", "2", "--evaluator", "loov", "--out", s(&p("s.csv"))]);
    let sel = fs::read_to_string(p("s.csv")).unwrap();
    assert_eq!(sel.lines().count(), 3);
    assert!(sel.lines().nth(1).unwrap().starts_with("fsp,0,1,"));

    for (seed, out) in [("3", "m1.txt"), ("3", "m2.txt"), ("4", "m3.txt")] {
        ok(&[
            "--seed", seed, "train", "--features", s(&p("f.csv")), "--targets", s(&p("d.csv")), "--k", "2", "--repeats", "2", "--out",
            s(&p(out)),
        ]);
    }
    let m1 = fs::read_to_string(p("m1.txt")).unwrap();
    assert_eq!(m1, fs::read_to_string(p("m2.txt")).unwrap());
    assert!(m1.contains("# seed 3\n"));
    assert_eq!(fs::read(p("m1.report.csv")).unwrap(), fs::read(p("m2.report.csv")).unwrap());
    assert_ne!(fs::read(p("m1.report.csv")).unwrap(), fs::read(p("m3.report.csv")).unwrap());

    let stdout = ok(&["eval", "--features", s(&p("f.csv")), "--targets", s(&p("d.csv")), "--model", s(&p("m1.txt")), "--out", s(&p("pred.csv"))]);
    let r2: f64 = stdout.trim().strip_prefix("r2 ").unwrap().parse().unwrap();
    assert!(r2 > 0.5 && r2 <= 1.0, "{r2}");
    assert_eq!(fs::read_to_string(p("pred.csv")).unwrap().lines().count(), 14);
}

#[test]
fn build_solve_decode_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let p = linear(&["n", "na_ex_O", "dg_3"], &[-0.3, 0.4, -0.2], 20.0);
    let (spec_path, eta) = fig_workspace(dir.path(), p.clone(), None);
    let lp_path = dir.path().join("fig.lp");
    ok(&["infer-build", "--spec", s(&spec_path), "--out", s(&lp_path)]);

    // The file matches the library build and parses back.
    let spec = parse_spec(&fs::read_to_string(&spec_path).unwrap()).unwrap();
    let model = build_milp(&spec, &p, 2, &BuildOptions::default()).unwrap();
    let lp = fs::read_to_string(&lp_path).unwrap();
    assert_eq!(lp, emit_lp(&model.milp));
    assert_eq!(parse_lp(&lp).unwrap().constraints.len(), model.milp.constraints.len());
    let meta = fs::read_to_string(dir.path().join("fig.lp.meta")).unwrap();
    assert!(meta.contains("\nn -\n") && meta.contains("objective feasibility"), "{meta}");

    // A feasible point stands in for the solver's answer.
    let a = encode_assignment(&model, &fig_choice()).unwrap();
    let sol = dir.path().join("fig.sol");
    fs::write(&sol, write_assignment(&model, &a)).unwrap();
    let stdout = ok(&["infer-decode", "--sol", s(&sol)]);
    let predicted: f64 = stdout.split_whitespace().nth(2).unwrap().parse().unwrap();
    assert!((predicted - eta).abs() < 1e-9);

    let smi = fs::read_to_string(dir.path().join("fig.smi")).unwrap();
    let got = suppress_hydrogens(&parse_smiles(smi.split_whitespace().next().unwrap()).unwrap()).unwrap();
    let want = suppress_hydrogens(&parse_smiles(FIG_SMILES).unwrap()).unwrap();
    assert!(got.is_isomorphic(&want));
    let sdf = fs::read_to_string(dir.path().join("fig.sdf")).unwrap();
    assert!(sdf.contains(">  <PREDICTED>") && sdf.trim_end().ends_with("$$$$"));
    let report = fs::read_to_string(dir.path().join("fig.report.txt")).unwrap();
    assert!(!report.contains("FAIL"), "{report}");

    // Same result with the spec given directly and an explicit prefix.
    ok(&["infer-decode", "--sol", s(&sol), "--spec", s(&spec_path), "--out", s(&dir.path().join("again"))]);
    assert_eq!(fs::read_to_string(dir.path().join("again.smi")).unwrap().split_whitespace().next(), smi.split_whitespace().next());

    // A solution missing a structural variable is refused.
    let short: String = fs::read_to_string(&sol).unwrap().lines().filter(|l| !l.starts_with("f_0_")).map(|l| format!("{l}\n")).collect();
    fs::write(&sol, short).unwrap();
    assert_eq!(run(&["infer-decode", "--sol", s(&sol)]).status.code(), Some(1));
}

#[test]
fn average_mass_builds_one_file_per_size() {
    let dir = tempfile::tempdir().unwrap();
    let p = linear(&["ms_avg", "n"], &[0.01, -0.3], 200.0);
    let (spec_path, _) = fig_workspace(dir.path(), p, Some("n 12 13\nnH 17 19\n"));
    let out = dir.path().join("grid.lp");
    let stdout = ok(&["infer-build", "--spec", s(&spec_path), "--out", s(&out)]);
    assert_eq!(stdout.lines().count(), 6);
    for (n, h) in [(12, 17), (12, 19), (13, 18)] {
        let f = dir.path().join(format!("grid.n{n}.h{h}.lp"));
        assert!(f.exists(), "{}", f.display());
        let meta = fs::read_to_string(format!("{}.meta", f.display())).unwrap();
        assert!(meta.contains(&format!("\nn {n}\nnh {h}\n")));
    }
    assert!(!out.exists());

    ok(&["infer-build", "--spec", s(&spec_path), "--n", "12", "--nh", "18", "--out", s(&out)]);
    assert!(out.exists());
    // No n bound and no --n: nothing to build from.
    let (bare, _) = fig_workspace(dir.path(), linear(&["ms_avg"], &[1.0], 200.0), Some(""));
    assert_eq!(run(&["infer-build", "--spec", s(&bare), "--out", s(&out)]).status.code(), Some(1));
}

#[test]
fn validate_reports_and_sets_the_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let (spec_path, _) = fig_workspace(dir.path(), linear(&["n"], &[-0.3], 20.0), None);
    let good = ok(&["validate", "--spec", s(&spec_path), "--smiles", FIG_SMILES]);
    assert!(good.lines().all(|l| !l.starts_with("FAIL")), "{good}");

    let bad = run(&["validate", "--spec", s(&spec_path), "--smiles", "CCC1CCC(CCCC(=O)O)C1"]);
    assert_eq!(bad.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&bad.stdout).contains("FAIL"));

    let sdf = dir.path().join("m.sdf");
    let mol = parse_smiles(FIG_SMILES).unwrap();
    fs::write(&sdf, solvforge::chemio::write_sdf(&mol, &[])).unwrap();
    ok(&["validate", "--spec", s(&spec_path), "--mol", s(&sdf)]);
}

#[test]
fn exit_codes() {
    assert_eq!(run(&["--help"]).status.code(), Some(0));
    assert_eq!(run(&["--version"]).status.code(), Some(0));
    assert_eq!(run(&[]).status.code(), Some(1));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(run(&["featurize", "--in", "/nonexistent.csv", "--out", "/tmp/x.csv"]).status.code(), Some(1));
    assert_eq!(run(&["select", "--features", "a", "--targets", "b", "--method", "nope", "--out", "c"]).status.code(), Some(1));
}
