mod common;

use common::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use solvforge::chemgraph::{decompose_two_layered, suppress_hydrogens};
use solvforge::chemio::parse_smiles;
use solvforge::descriptors::{build_feature_matrix, featurize, Bounds};
use solvforge::inverse::*;
use solvforge::learn::{Network, NeuralModel, Predictor};

fn fig(lo: f64, hi: f64) -> TopologicalSpec {
    parse_spec(&with_range(&fig_spec_text(), lo, hi)).unwrap()
}

/// Predictor on the number of heavy atoms alone, raw value passed through.
fn size_predictor() -> Predictor {
    linear(&["n".into()], &[100.0], 0.0, &[0.0], &[100.0])
}

/// `CCC1CCC(CCC(=O)O)C1`: side chain of length 2, ethyl on r3, acid on g.
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

#[test]
fn figure_choice_realizes_the_molecule() {
    let spec = fig(-1e9, 1e9);
    let g = realize(&spec, &spec.layout(), &fig_choice()).unwrap();
    let want = suppress_hydrogens(&parse_smiles(FIG_SMILES).unwrap()).unwrap();
    assert!(g.is_isomorphic(&want));

    let model = build_milp(&spec, &size_predictor(), 2, &BuildOptions::default()).unwrap();
    let a = encode_assignment(&model, &fig_choice()).unwrap();
    assert_eq!(model.milp.violations(&a.values, 1e-9), Vec::<String>::new());
    let back = decode_graph(&model, &a).unwrap();
    assert!(back.graph.is_isomorphic(&want));
    assert_eq!(back.choice, fig_choice());
    assert!((back.predicted - 12.0).abs() < 1e-9);
    assert!(validate_inferred(&back, &spec, &model.predictor, 2).passed());
}

#[test]
fn shortest_path_keeps_the_seed_topology() {
    let spec = fig(-1e9, 1e9);
    let mut mult = vec![None; 10];
    for s in [0, 1, 2, 3, 4, 7] {
        mult[s] = Some(1);
    }
    let choice = Choice {
        path_len: vec![1],
        fringe: vec![Some(0), Some(1), Some(1), Some(1), Some(1), Some(2), None, None],
        mult,
    };
    let g = realize(&spec, &spec.layout(), &choice).unwrap();
    let d = decompose_two_layered(&g, 2).unwrap();
    assert_eq!(d.interior_count(), 6);
    assert_eq!(d.interior_edges(&g).len(), 6);
    assert_eq!(g.rank().unwrap(), 1);
}

const BUTANE: &str = "\
[SEED]
v a
v b
e a b fixed
[FRINGE]
t1 C 2 C 0 C 1 H 2 H 2 H 2 H 1 H 1
[TARGET]
range -1e9 1e9
";

#[test]
fn single_realization() {
    let spec = parse_spec(BUTANE).unwrap();
    let p = size_predictor();
    let found = brute_force_enumerate(&spec, &p, 1, &EnumerateOptions::default()).unwrap();
    assert_eq!(found.len(), 1);
    let butane = suppress_hydrogens(&parse_smiles("CCCC").unwrap()).unwrap();
    assert!(found[0].graph.is_isomorphic(&butane));

    let model = build_milp(&spec, &p, 1, &BuildOptions::default()).unwrap();
    let values = solve(&model.milp).expect("feasible");
    let a = ingest_solution(&model, &solution_text(&model.milp, &values)).unwrap();
    assert!(decode_graph(&model, &a).unwrap().graph.is_isomorphic(&butane));
}

/// End trees: A = CH2-CH3 (one free bond), D = C-CH3 (three).
/// Middle trees: B = CH2 and O (two each), plus A and D.
const CHAIN: &str = "\
[SEED]
v a
v b
e a b typical 1 3
[FRINGE]
A C 2 C 0 C 1 H 2 H 2 H 2 H 1 H 1
B C 2 C 0 H 1 H 1
O O 0 O 0
D C 0 C 0 C 1 H 2 H 2 H 2
[TARGET]
range -1e9 1e9
";

#[test]
fn chain_realizations_counted_by_hand() {
    // One bond: A-A single, D#D triple. Two bonds: A-x-A with x in {B, O}.
    // Three bonds: A-x-y-A with x, y in {B, O} (4), or A-D=D-A (1).
    let spec = parse_spec(CHAIN).unwrap();
    let found = brute_force_enumerate(&spec, &size_predictor(), 1, &EnumerateOptions::default()).unwrap();
    let mut per_len = [0; 4];
    for g in &found {
        per_len[g.choice.path_len[0]] += 1;
    }
    assert_eq!(per_len, [0, 2, 2, 5]);

    let only_n = EnumerateOptions {
        n: Some(6),
        ..EnumerateOptions::default()
    };
    // A holds two heavy atoms, so only A-x-y-A with x, y in {B, O} has six.
    assert_eq!(brute_force_enumerate(&spec, &size_predictor(), 1, &only_n).unwrap().len(), 4);
}

#[test]
fn target_range_filters_and_matches_the_solver() {
    let spec_text = |lo: f64, hi: f64| with_range(CHAIN, lo, hi);
    // n is 4 (both of length 1), 5 (length 2), 6 or 8 (length 3).
    for (lo, hi, count) in [(3.5, 4.5, 2), (4.5, 6.5, 6), (6.5, 7.5, 0), (7.5, 8.5, 1), (9.0, 20.0, 0)] {
        let spec = parse_spec(&spec_text(lo, hi)).unwrap();
        let p = size_predictor();
        let found = brute_force_enumerate(&spec, &p, 1, &EnumerateOptions::default()).unwrap();
        assert_eq!(found.len(), count, "[{lo}, {hi}]");
        let model = build_milp(&spec, &p, 1, &BuildOptions::default()).unwrap();
        match solve(&model.milp) {
            Some(v) => {
                assert!(count > 0);
                let a = ingest_solution(&model, &solution_text(&model.milp, &v)).unwrap();
                let g = decode_graph(&model, &a).unwrap();
                assert!(validate_inferred(&g, &spec, &p, 1).passed());
            }
            None => assert_eq!(count, 0),
        }
    }
}

fn union_predictor(found: &[InferredGraph], rng: &mut ChaCha8Rng) -> Predictor {
    let fm = build_feature_matrix((0..found.len()).map(|i| i.to_string()).collect(), &found.iter().map(|g| g.features.clone()).collect::<Vec<_>>()).unwrap();
    let b = Bounds::fit(&fm.data, None);
    let w: Vec<f64> = (0..fm.names.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    linear(&fm.names, &w, 0.3, &b.min, &b.max)
}

#[test]
fn descriptor_expressions_equal_recomputed_values() {
    let text = fig_spec_text().replace("typical 1 3", "typical 1 2");
    let spec = parse_spec(&with_range(&text, -1e9, 1e9)).unwrap();
    let opts = EnumerateOptions {
        n: Some(12),
        nh: Some(18),
        ..EnumerateOptions::default()
    };
    let found = brute_force_enumerate(&spec, &size_predictor(), 2, &opts).unwrap();
    assert!(found.len() > 50, "{}", found.len());
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let p = union_predictor(&found, &mut rng);
    assert!(p.names().iter().any(|n| n.starts_with("ec_in_")) && p.names().iter().any(|n| n == "ms_avg"));
    let model = build_milp(&spec, &p, 2, &BuildOptions { n: Some(12), nh: Some(18), ..BuildOptions::default() }).unwrap();
    for g in &found {
        let a = encode_assignment(&model, &g.choice).unwrap();
        assert_eq!(model.milp.violations(&a.values, 1e-7), Vec::<String>::new());
        for (name, e) in &model.descriptors {
            assert!((e.eval(&a.values) - g.features.get(name)).abs() < 1e-9, "{name}");
        }
        let eta = p.predict_features(&g.features);
        assert!((model.output.eval(&a.values) - eta).abs() < 1e-9);
    }
}

#[test]
fn average_mass_needs_fixed_sizes() {
    let spec = fig(-1e9, 1e9);
    let p = linear(&["ms_avg".into()], &[1.0], 0.0, &[0.0], &[100.0]);
    let err = build_milp(&spec, &p, 2, &BuildOptions::default()).unwrap_err();
    assert!(matches!(err, InverseError::NotExpressible { ref name, .. } if name == "ms_avg"));
    for name in ["zz", "bd_in_1", "dg_5", "dg_in_0"] {
        let p = linear(&[name.into()], &[1.0], 0.0, &[0.0], &[1.0]);
        assert!(matches!(build_milp(&spec, &p, 2, &BuildOptions::default()), Err(InverseError::NotExpressible { .. })), "{name}");
    }
}

#[test]
fn tall_trees_are_rejected() {
    let spec = fig(-1e9, 1e9);
    assert!(matches!(build_milp(&spec, &size_predictor(), 1, &BuildOptions::default()), Err(InverseError::TallTree { .. })));
    assert!(matches!(brute_force_enumerate(&spec, &size_predictor(), 1, &EnumerateOptions::default()), Err(InverseError::TallTree { .. })));
}

#[test]
fn search_space_guard() {
    let spec = fig(-1e9, 1e9);
    let opts = EnumerateOptions {
        limit: 100.0,
        ..EnumerateOptions::default()
    };
    assert!(matches!(brute_force_enumerate(&spec, &size_predictor(), 2, &opts), Err(InverseError::SearchSpace { .. })));
}

#[test]
fn model_grows_with_path_bound_and_catalog() {
    let text = fig_spec_text();
    let p = linear(&["n".into(), "ec_in_C2_C2_1".into(), "bd_in_2".into()], &[1.0, 1.0, 1.0], 0.0, &[0.0; 3], &[1.0; 3]);
    let size = |ub: usize, trees: usize| {
        let mut t = text.replace("typical 1 3", &format!("typical 1 {ub}"));
        for k in trees + 1..=9 {
            let line = t.lines().find(|l| l.starts_with(&format!("t{k} "))).unwrap().to_string();
            t = t.replace(&format!("{line}\n"), "");
        }
        let spec = parse_spec(&with_range(&t, -1e9, 1e9)).unwrap();
        let m = build_milp(&spec, &p, 2, &BuildOptions::default()).unwrap().milp;
        (m.vars.len(), m.constraints.len())
    };
    let mut last = (0, 0);
    for ub in 1..=5 {
        let s = size(ub, 9);
        assert!(s.0 > last.0 && s.1 > last.1, "ub {ub}");
        last = s;
    }
    let mut last = (0, 0);
    for trees in 3..=9 {
        let s = size(3, trees);
        assert!(s.0 >= last.0 && s.1 >= last.1, "|F| {trees}");
        last = s;
    }
}

#[test]
fn lp_text_round_trips_a_built_model() {
    let spec = fig(-3.0, 1.0);
    let p = linear(&["n".into(), "ec_in_C2_C3_1".into(), "na_ex_O".into()], &[1.0, -0.5, 0.25], -0.1, &[4.0, 0.0, 0.0], &[20.0, 6.0, 3.0]);
    let model = build_milp(&spec, &p, 2, &BuildOptions::default()).unwrap();
    let text = emit_lp(&model.milp);
    assert_eq!(parse_lp(&text).unwrap(), LpProblem::from_model(&model.milp));
    assert!(text.contains("\nBinary\n"));
}

#[test]
fn solution_ingest_is_strict() {
    let spec = fig(-1e9, 1e9);
    let model = build_milp(&spec, &size_predictor(), 2, &BuildOptions::default()).unwrap();
    let a = encode_assignment(&model, &fig_choice()).unwrap();
    let text = write_assignment(&model, &a);
    assert_eq!(ingest_solution(&model, &text).unwrap(), a);

    let dropped: String = text.lines().filter(|l| !l.starts_with("f_3_")).map(|l| format!("{l}\n")).collect();
    match ingest_solution(&model, &dropped) {
        Err(InverseError::MissingVariable(name)) => assert!(name.starts_with("f_3_")),
        other => panic!("{other:?}"),
    }

    let nudged = text.replace("a_0_1 1\n", "a_0_1 0.9999997\n");
    assert_ne!(nudged, text);
    assert_eq!(ingest_solution(&model, &nudged).unwrap(), a);
    let off = text.replace("a_0_1 1\n", "a_0_1 0.9\n");
    assert!(matches!(ingest_solution(&model, &off), Err(InverseError::BadValue { .. })));
    assert!(matches!(ingest_solution(&model, &format!("{text}zz 1\n")), Err(InverseError::Solution { .. })));
    assert!(matches!(ingest_solution(&model, &format!("{text}a_0_1 1\n")), Err(InverseError::Solution { .. })));
}

#[test]
fn validation_catches_tampering() {
    let spec = fig(-1e9, 1e9);
    let model = build_milp(&spec, &size_predictor(), 2, &BuildOptions::default()).unwrap();
    let good = decode_graph(&model, &encode_assignment(&model, &fig_choice()).unwrap()).unwrap();

    let mut bumped = good.clone();
    let e = bumped.graph.edges().iter().position(|e| e.order == 1).unwrap();
    bumped.graph.set_order(e, 2);
    let r = validate_inferred(&bumped, &spec, &model.predictor, 2);
    assert!(r.failures().iter().any(|c| c.name == "valence"), "{r}");

    let narrow = fig(13.0, 14.0);
    let r = validate_inferred(&good, &narrow, &model.predictor, 2);
    assert_eq!(r.failures().iter().map(|c| c.name.as_str()).collect::<Vec<_>>(), ["target"]);
    assert!(r.to_string().contains("FAIL target"));

    let mut tight = fig(-1e9, 1e9);
    tight.bounds.nh = Some((0, 10));
    assert!(!validate_inferred(&good, &tight, &model.predictor, 2).passed());
}

fn random_net(sizes: &[usize], rng: &mut ChaCha8Rng) -> Network {
    let mut net = Network::init(sizes, rng);
    for b in &mut net.biases {
        for x in b.iter_mut() {
            *x = rng.gen_range(-0.5..0.5);
        }
    }
    net
}

#[test]
fn relu_units_track_the_network_on_every_realization() {
    let spec = parse_spec(CHAIN).unwrap();
    let found = brute_force_enumerate(&spec, &size_predictor(), 1, &EnumerateOptions::default()).unwrap();
    let names: Vec<String> = ["n", "na_ex_C", "dg_2", "bd_in_2", "na_in_O"].map(String::from).to_vec();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..10 {
        let p = Predictor::Neural(NeuralModel {
            names: names.clone(),
            bounds: Bounds {
                min: vec![0.0; 5],
                max: vec![8.0, 4.0, 4.0, 2.0, 2.0],
            },
            net: random_net(&[5, 4, 3, 1], &mut rng),
            loss_trace: Vec::new(),
        });
        let model = build_milp(&spec, &p, 1, &BuildOptions::default()).unwrap();
        for g in &found {
            let a = encode_assignment(&model, &g.choice).unwrap();
            assert_eq!(model.milp.violations(&a.values, 1e-7), Vec::<String>::new());
            let (got, want) = (model.output.eval(&a.values), p.predict_features(&g.features));
            assert!((got - want).abs() < 1e-9, "{got} vs {want}");
        }
    }
}

#[test]
fn featurize_agrees_with_enumerated_features() {
    let spec = parse_spec(CHAIN).unwrap();
    for g in brute_force_enumerate(&spec, &size_predictor(), 1, &EnumerateOptions::default()).unwrap() {
        assert_eq!(featurize(&g.graph, 1).unwrap(), g.features);
    }
}
