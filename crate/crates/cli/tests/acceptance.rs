//! Acceptance suite: one test per criterion, run end to end against the
//! library and the `ndnf` binary. Each test prints a single summary line
//! on success; a failed assertion is the fail line.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use neural_dnf::data::{
    gen_synthetic_multiclass, gen_synthetic_multilabel, load_dataset_csv, mutual_information,
    preprocess_cub, save_dataset_csv, split, AttributeAnnotation, CubRawAnnotations, Dataset,
    Sample, Target, TaskKind,
};
use neural_dnf::math::{cross_entropy, finite_diff_gradient, softmax, RealMatrix};
use neural_dnf::models::{init_eo, init_mlp, init_vanilla, interpret_bipolar, Checkpoint, ModelKind};
use neural_dnf::post_training::{extract_rules, run_pipeline, PostTrainConfig};
use neural_dnf::rules::{parse_asp_with_targets, Literal, Rule, RuleSet};
use neural_dnf::semi_symbolic::{LayerKind, SemiSymbolicLayer};
use neural_dnf::training::{eval_dnf, train_eo, train_vanilla, EvalMetric, LossKind, TrainConfig};

// ------------------------------------------------------------------------
// 1. Worked-example fidelity: softmax / cross-entropy / tanh / interpret.
#[test]
fn criterion_01_worked_example() {
    let logits = [-2.0, 1.5, 3.0];
    let p = softmax(&logits).unwrap();
    // exact p[0] = 0.005479; the printed 0.006 is rounded, so +-1e-3
    assert!((p[0] - 0.006).abs() < 1e-3, "softmax[0] = {}", p[0]);
    assert!((p[1] - 0.181).abs() < 5e-4, "softmax[1] = {}", p[1]);
    assert!((p[2] - 0.813).abs() < 5e-4, "softmax[2] = {}", p[2]);

    let ce = cross_entropy(&logits, 2).unwrap();
    assert!((ce - 0.207).abs() < 5e-4, "cross-entropy = {ce}");

    let y: Vec<f64> = logits.iter().map(|v| v.tanh()).collect();
    for (got, want) in y.iter().zip([-0.964, 0.905, 0.995]) {
        assert!((got - want).abs() < 5e-4, "tanh {got} vs {want}");
    }
    assert_eq!(interpret_bipolar(&y, 0.0), vec![1, 2]);
    println!("criterion 01 worked example: PASS");
}

// ------------------------------------------------------------------------
// 2. Synthetic 3-class, EO model: Jaccard >= 0.98 trained, >= 0.93 after
//    threshold, >= 0.92 for the extracted rules. Under 5 minutes.
#[test]
fn criterion_02_multiclass_3_eo_pipeline() {
    let started = Instant::now();
    let (full, _) = gen_synthetic_multiclass(3, 20, 10_000, 73).unwrap();
    let (train, val, test) = split(&full, 6400, 1600, 2000, 73).unwrap();
    let mut model = init_eo(22, 9, 3, 73).unwrap();
    let cfg = TrainConfig::new(LossKind::CrossEntropy, 100, 32, 73);
    train_eo(&mut model, &train, &val, &cfg).unwrap();

    let mut kind = ModelKind::Eo(model);
    let (_, _, report) =
        run_pipeline(&mut kind, &train, &val, &test, &PostTrainConfig::default()).unwrap();
    assert!(report.after_train >= 0.98, "after_train = {}", report.after_train);
    assert!(
        report.after_threshold >= 0.93,
        "after_threshold = {}",
        report.after_threshold
    );
    assert!(report.rules_metric >= 0.92, "rules = {}", report.rules_metric);
    let secs = started.elapsed().as_secs_f64();
    assert!(secs < 300.0, "took {secs:.0}s");
    println!(
        "criterion 02 3-class EO: train {:.3} thresh {:.3} rules {:.3} in {secs:.0}s PASS",
        report.after_train, report.after_threshold, report.rules_metric
    );
}

// ------------------------------------------------------------------------
// 3. Synthetic 3-label, vanilla model: macro F1 >= 0.98 trained, >= 0.96
//    for the extracted rules. Under 5 minutes.
#[test]
fn criterion_03_multilabel_3_vanilla_pipeline() {
    let started = Instant::now();
    let (full, _) = gen_synthetic_multilabel(3, 10, 10_000, 73).unwrap();
    let (train, val, test) = split(&full, 6400, 1600, 2000, 73).unwrap();
    let mut model = init_vanilla(10, 12, 3, 73).unwrap();
    let cfg = TrainConfig::new(LossKind::BinaryCrossEntropy, 100, 32, 73);
    train_vanilla(&mut model, &train, &val, &cfg).unwrap();

    let mut kind = ModelKind::Vanilla(model);
    let pt = PostTrainConfig {
        metric: EvalMetric::MacroF1,
        finetune_loss: LossKind::BinaryCrossEntropy,
        ..PostTrainConfig::default()
    };
    let (_, _, report) = run_pipeline(&mut kind, &train, &val, &test, &pt).unwrap();
    assert!(report.after_train >= 0.98, "after_train = {}", report.after_train);
    assert!(report.rules_metric >= 0.96, "rules = {}", report.rules_metric);
    let secs = started.elapsed().as_secs_f64();
    assert!(secs < 300.0, "took {secs:.0}s");
    println!(
        "criterion 03 3-label vanilla: train {:.3} rules {:.3} in {secs:.0}s PASS",
        report.after_train, report.rules_metric
    );
}

// ------------------------------------------------------------------------
// 4. Synthetic 25-class, EO model: Jaccard >= 0.97 trained, and the
//    qualitative thresholding collapse (drop of at least 0.3 from the
//    after-prune score). Under 20 minutes.
#[test]
fn criterion_04_multiclass_25_collapse() {
    let started = Instant::now();
    let (full, _) = gen_synthetic_multiclass(25, 20, 10_000, 73).unwrap();
    let (train, val, test) = split(&full, 6400, 1600, 2000, 73).unwrap();
    let mut model = init_eo(25, 75, 25, 73).unwrap();
    let cfg = TrainConfig::new(LossKind::CrossEntropy, 100, 32, 73);
    train_eo(&mut model, &train, &val, &cfg).unwrap();

    let mut kind = ModelKind::Eo(model);
    let (_, _, report) =
        run_pipeline(&mut kind, &train, &val, &test, &PostTrainConfig::default()).unwrap();
    assert!(report.after_train >= 0.97, "after_train = {}", report.after_train);
    let drop = report.after_prune - report.after_threshold;
    assert!(
        drop >= 0.3,
        "thresholding collapse {drop:.3} (prune {:.3} -> threshold {:.3})",
        report.after_prune,
        report.after_threshold
    );
    let secs = started.elapsed().as_secs_f64();
    assert!(secs < 1200.0, "took {secs:.0}s");
    println!(
        "criterion 04 25-class EO: train {:.3} collapse {:.3} in {secs:.0}s PASS",
        report.after_train, drop
    );
}

// ------------------------------------------------------------------------
// 5. Vanilla-on-multiclass ablation: high argmax accuracy but poor
//    0-threshold Jaccard, motivating the EO constraint.
#[test]
fn criterion_05_vanilla_multiclass_ablation() {
    let (full, _) = gen_synthetic_multiclass(3, 20, 10_000, 73).unwrap();
    let (train, val, test) = split(&full, 6400, 1600, 2000, 73).unwrap();
    let mut model = init_vanilla(22, 9, 3, 73).unwrap();
    let cfg = TrainConfig::new(LossKind::CrossEntropy, 50, 32, 73);
    train_vanilla(&mut model, &train, &val, &cfg).unwrap();

    let accuracy = eval_dnf(&model, &test, EvalMetric::Accuracy).unwrap();
    let jaccard = eval_dnf(&model, &test, EvalMetric::Jaccard).unwrap();
    assert!(accuracy >= 0.98, "accuracy = {accuracy}");
    assert!(jaccard <= 0.6, "jaccard = {jaccard}");
    println!("criterion 05 ablation: accuracy {accuracy:.3} jaccard {jaccard:.3} PASS");
}

// ------------------------------------------------------------------------
// 6. Gradient correctness against central finite differences, for random
//    semi-symbolic layers and for the MLP baseline.

fn grads_close(analytic: &RealMatrix, numeric: &RealMatrix, what: &str) {
    for (a, f) in analytic.entries().iter().zip(numeric.entries()) {
        let tol = 1e-4 * f.abs().max(1.0);
        assert!((a - f).abs() <= tol, "{what}: analytic {a} vs numeric {f}");
    }
}

/// Reject layers with a near-zero weight (sign kink) or a near-tie in the
/// per-row max |w| (argmax switch) that finite differences would cross.
fn well_separated(w: &RealMatrix) -> bool {
    if w.entries().iter().any(|v| v.abs() < 1e-4) {
        return false;
    }
    for r in 0..w.rows() {
        let mut mags: Vec<f64> = w.row(r).iter().map(|v| v.abs()).collect();
        mags.sort_by(|a, b| b.partial_cmp(a).unwrap());
        if mags.len() > 1 && mags[0] - mags[1] < 1e-4 {
            return false;
        }
    }
    true
}

#[test]
fn criterion_06_gradient_checks() {
    let mut rng = ChaCha8Rng::seed_from_u64(6001);
    let mut done = 0;
    let mut layer_seed = 0u64;
    while done < 100 {
        layer_seed += 1;
        let out_dim = rng.gen_range(1..=8);
        let in_dim = rng.gen_range(1..=12);
        let kind = if done % 2 == 0 {
            LayerKind::Conjunctive
        } else {
            LayerKind::Disjunctive
        };
        let magnitude = 0.1 * rng.gen_range(1..=10) as f64;
        let mut init_rng = ChaCha8Rng::seed_from_u64(layer_seed);
        let layer = SemiSymbolicLayer::init(out_dim, in_dim, kind, magnitude, &mut init_rng).unwrap();
        if !well_separated(&layer.weights) {
            continue;
        }
        let x: Vec<f64> = (0..in_dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let coefs: Vec<f64> = (0..out_dim).map(|_| rng.gen_range(-1.0..1.0)).collect();

        let y = layer.forward(&x).unwrap();
        let (dw, _) = layer.backward(&x, &y, &coefs).unwrap();
        let numeric = finite_diff_gradient(
            |w| {
                let mut probe = layer.clone();
                probe.weights = w.clone();
                probe
                    .forward(&x)
                    .unwrap()
                    .iter()
                    .zip(&coefs)
                    .map(|(yj, c)| yj * c)
                    .sum()
            },
            &layer.weights,
            1e-6,
        )
        .unwrap();
        grads_close(&dw, &numeric, &format!("layer {done} ({kind:?} {out_dim}x{in_dim})"));
        done += 1;
    }

    // Same check for the MLP baseline, with softmax cross-entropy on top.
    for trial in 0..100u64 {
        let n_in = rng.gen_range(1..=12);
        let n_hidden = rng.gen_range(1..=8);
        let n_out = rng.gen_range(2..=4);
        let mlp = init_mlp(n_in, n_hidden, n_out, 7000 + trial).unwrap();
        let x: Vec<f64> = (0..n_in).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let target = rng.gen_range(0..n_out);

        let trace = mlp.forward_trace(&x).unwrap();
        let mut upstream = softmax(&trace.logits).unwrap();
        upstream[target] -= 1.0;
        let grads = mlp.backward(&x, &trace, &upstream).unwrap();

        let loss_w1 = |w: &RealMatrix| {
            let mut probe = mlp.clone();
            probe.w1 = w.clone();
            cross_entropy(&probe.forward(&x).unwrap(), target).unwrap()
        };
        let loss_w2 = |w: &RealMatrix| {
            let mut probe = mlp.clone();
            probe.w2 = w.clone();
            cross_entropy(&probe.forward(&x).unwrap(), target).unwrap()
        };
        grads_close(&grads.dw1, &finite_diff_gradient(loss_w1, &mlp.w1, 1e-6).unwrap(), "mlp w1");
        grads_close(&grads.dw2, &finite_diff_gradient(loss_w2, &mlp.w2, 1e-6).unwrap(), "mlp w2");
    }
    println!("criterion 06 gradients: 100 layers + 100 MLPs PASS");
}

// ------------------------------------------------------------------------
// 7. EO constraint property, exhaustive over sign patterns: constraint
//    output j is positive exactly when every *other* class is false (so a
//    one-hot input keeps only its own class positive).
#[test]
fn criterion_07_eo_constraint_exhaustive() {
    for n in 2..=10usize {
        let constraint = init_eo(2, 2, n, 0).unwrap().constraint;
        for bits in 0..1u32 << n {
            let x: Vec<f64> = (0..n)
                .map(|i| if bits >> i & 1 == 1 { 0.999 } else { -0.999 })
                .collect();
            let y = constraint.forward(&x).unwrap();
            for j in 0..n {
                let others_false = (0..n).all(|i| i == j || bits >> i & 1 == 0);
                assert_eq!(
                    y[j] > 0.0,
                    others_false,
                    "n={n} bits={bits:b} j={j} y={}",
                    y[j]
                );
            }
        }
    }
    println!("criterion 07 EO constraint: exhaustive n=2..10 PASS");
}

// ------------------------------------------------------------------------
// 8. Network-rules agreement on 50 random discretized models over every
//    input assignment.
#[test]
fn criterion_08_network_rules_agreement() {
    let mut rng = ChaCha8Rng::seed_from_u64(8001);
    for trial in 0..50u64 {
        let n_in = rng.gen_range(2..=10);
        let n_conj = rng.gen_range(1..=8);
        let n_out = rng.gen_range(1..=4);
        let mut model = init_vanilla(n_in, n_conj, n_out, trial).unwrap();
        model.set_delta_magnitude(1.0);

        let mut conj = RealMatrix::zeros(n_conj, n_in);
        for r in 0..n_conj {
            for c in 0..n_in {
                let v = match rng.gen_range(0..4) {
                    0 => 6.0,
                    1 => -6.0,
                    _ => 0.0,
                };
                conj.set(r, c, v);
            }
            if conj.row(r).iter().all(|v| *v == 0.0) {
                let c = rng.gen_range(0..n_in);
                conj.set(r, c, if rng.gen_bool(0.5) { 6.0 } else { -6.0 });
            }
        }
        let mut disj = RealMatrix::zeros(n_out, n_conj);
        for r in 0..n_out {
            for c in 0..n_conj {
                let v = match rng.gen_range(0..5) {
                    0 => 6.0,
                    1 => -6.0,
                    _ => 0.0,
                };
                disj.set(r, c, v);
            }
        }
        model.conjunctive.weights = conj;
        model.disjunctive.weights = disj;

        let attrs: Vec<String> = (0..n_in).map(|i| format!("x{i}")).collect();
        let targets: Vec<String> = (0..n_out).map(|j| format!("t{j}")).collect();
        let rules = extract_rules(&model, &attrs, &targets).unwrap();

        for bits in 0..1u32 << n_in {
            let x: Vec<f64> = (0..n_in)
                .map(|i| if bits >> i & 1 == 1 { 1.0 } else { -1.0 })
                .collect();
            let y = model.forward(&x).unwrap();
            let assignment: BTreeMap<String, bool> = attrs
                .iter()
                .enumerate()
                .map(|(i, a)| (a.clone(), bits >> i & 1 == 1))
                .collect();
            let truth = rules.evaluate(&assignment).unwrap();
            for (j, t) in targets.iter().enumerate() {
                assert_eq!(
                    y[j] > 0.0,
                    truth.contains(t),
                    "trial {trial} bits {bits:b} target {t}"
                );
            }
        }
    }
    println!("criterion 08 network-rules agreement: 50 models PASS");
}

// ------------------------------------------------------------------------
// 9. Preprocessing oracles: class-median preprocessing against a
//    brute-force reference, and MI against a joint-histogram oracle.

/// Independent brute-force reference for the class-median preprocessing.
fn cub_oracle(
    raw: &CubRawAnnotations,
    n: usize,
    train_ids: &BTreeSet<u32>,
) -> Option<(Dataset, Vec<bool>)> {
    let n_classes = raw.class_names.len();
    let n_attrs = raw.attribute_names.len();
    let mut majority = vec![vec![false; n_attrs]; n_classes];
    for class in 0..n_classes {
        for attr in 0..n_attrs {
            let mut present = 0i64;
            let mut absent = 0i64;
            for (id, anns) in &raw.annotations {
                if !train_ids.contains(id) || raw.image_class[id] != class {
                    continue;
                }
                match anns[attr] {
                    Some(a) if a.present => present += 1,
                    // absent-because-invisible votes are discarded
                    Some(a) if a.certainty != 1 => absent += 1,
                    _ => {}
                }
            }
            majority[class][attr] = present >= absent;
        }
    }
    let kept: Vec<bool> = (0..n_attrs)
        .map(|a| (0..n_classes).filter(|&c| majority[c][a]).count() >= n)
        .collect();
    if kept.iter().all(|k| !k) {
        return None;
    }
    let samples = raw
        .image_class
        .values()
        .map(|&class| Sample {
            attributes: (0..n_attrs)
                .filter(|&a| kept[a])
                .map(|a| majority[class][a])
                .collect(),
            target: Target::Class(class),
        })
        .collect();
    let dataset = Dataset {
        attribute_names: raw
            .attribute_names
            .iter()
            .zip(&kept)
            .filter(|(_, &k)| k)
            .map(|(s, _)| s.clone())
            .collect(),
        task: TaskKind::MultiClass { n_classes },
        output_names: raw.class_names.clone(),
        samples,
    };
    Some((dataset, kept))
}

fn random_cub_fixture(rng: &mut ChaCha8Rng) -> CubRawAnnotations {
    let n_classes = rng.gen_range(2..=4);
    let n_attrs = rng.gen_range(3..=6);
    let n_images = rng.gen_range(8..=20);
    let mut image_class = BTreeMap::new();
    let mut annotations = BTreeMap::new();
    let mut train_ids = BTreeSet::new();
    for id in 1..=n_images as u32 {
        image_class.insert(id, rng.gen_range(0..n_classes));
        let anns: Vec<Option<AttributeAnnotation>> = (0..n_attrs)
            .map(|_| {
                rng.gen_bool(0.9).then(|| AttributeAnnotation {
                    present: rng.gen_bool(0.5),
                    certainty: rng.gen_range(1..=4),
                })
            })
            .collect();
        annotations.insert(id, anns);
        if rng.gen_bool(0.7) {
            train_ids.insert(id);
        }
    }
    train_ids.insert(1);
    CubRawAnnotations {
        attribute_names: (0..n_attrs).map(|a| format!("attr{a}")).collect(),
        class_names: (0..n_classes).map(|c| format!("class{c}")).collect(),
        image_class,
        annotations,
        train_ids,
    }
}

/// Independent joint-histogram oracle: sum p(x,y) ln(p(x,y)/(p(x) p(y))).
fn joint_histogram_mi(x: &[bool], y: &[usize]) -> f64 {
    let n = x.len() as f64;
    let mut joint: BTreeMap<(bool, usize), f64> = BTreeMap::new();
    let mut px: BTreeMap<bool, f64> = BTreeMap::new();
    let mut py: BTreeMap<usize, f64> = BTreeMap::new();
    for (&xi, &yi) in x.iter().zip(y) {
        *joint.entry((xi, yi)).or_default() += 1.0 / n;
        *px.entry(xi).or_default() += 1.0 / n;
        *py.entry(yi).or_default() += 1.0 / n;
    }
    joint
        .iter()
        .map(|(&(xi, yi), &pxy)| pxy * (pxy / (px[&xi] * py[&yi])).ln())
        .sum::<f64>()
        .max(0.0)
}

#[test]
fn criterion_09_preprocessing_oracles() {
    let mut rng = ChaCha8Rng::seed_from_u64(9001);
    for trial in 0..20 {
        let raw = random_cub_fixture(&mut rng);
        let n = rng.gen_range(1..=raw.class_names.len());
        let train_ids = raw.train_ids.clone();
        match cub_oracle(&raw, n, &train_ids) {
            Some((expect_data, expect_kept)) => {
                let (data, kept) = preprocess_cub(&raw, n, &train_ids).unwrap();
                assert_eq!(kept, expect_kept, "trial {trial}");
                assert_eq!(data, expect_data, "trial {trial}");
            }
            None => assert!(preprocess_cub(&raw, n, &train_ids).is_err(), "trial {trial}"),
        }
    }

    for _ in 0..20 {
        let n = rng.gen_range(20..=300);
        let k = rng.gen_range(2..=6);
        let y: Vec<usize> = (0..n).map(|_| rng.gen_range(0..k)).collect();
        let x: Vec<bool> = y
            .iter()
            .map(|&yi| rng.gen_bool(if yi % 2 == 0 { 0.75 } else { 0.25 }))
            .collect();
        let mi = mutual_information(&x, &y).unwrap();
        assert!(mi >= 0.0);
        assert!((mi - joint_histogram_mi(&x, &y)).abs() <= 1e-12, "mi = {mi}");
    }
    println!("criterion 09 preprocessing oracles: 20 fixtures each PASS");
}

// ------------------------------------------------------------------------
// 10. Round-trips: CSV datasets, ASP rule text, JSON checkpoints.

fn random_dataset(rng: &mut ChaCha8Rng, multilabel: bool) -> Dataset {
    let n_attrs = rng.gen_range(1..=8);
    let arity = rng.gen_range(2..=4);
    let n_samples = rng.gen_range(1..=30);
    let samples = (0..n_samples)
        .map(|_| Sample {
            attributes: (0..n_attrs).map(|_| rng.gen_bool(0.5)).collect(),
            target: if multilabel {
                Target::Labels((0..arity).map(|_| rng.gen_bool(0.5)).collect())
            } else {
                Target::Class(rng.gen_range(0..arity))
            },
        })
        .collect();
    Dataset {
        attribute_names: (0..n_attrs).map(|a| format!("attr_{a}")).collect(),
        task: if multilabel {
            TaskKind::MultiLabel { n_labels: arity }
        } else {
            TaskKind::MultiClass { n_classes: arity }
        },
        output_names: (0..arity).map(|c| format!("out_{c}")).collect(),
        samples,
    }
}

fn random_ruleset(rng: &mut ChaCha8Rng) -> RuleSet {
    let n_in = rng.gen_range(2..=6);
    let inputs: Vec<String> = (0..n_in).map(|i| format!("a{i}")).collect();
    let n_aux = rng.gen_range(0..=2);
    let targets: Vec<String> = (0..rng.gen_range(1..=3)).map(|t| format!("t{t}")).collect();
    let body = |rng: &mut ChaCha8Rng, allow_aux: usize| -> Vec<Literal> {
        let mut lits = Vec::new();
        for (i, a) in inputs.iter().enumerate() {
            if rng.gen_bool(0.4) {
                let lit = if rng.gen_bool(0.5) {
                    Literal::pos(a.clone())
                } else {
                    Literal::neg(a.clone())
                };
                lits.push(lit);
            }
            if lits.is_empty() && i + 1 == inputs.len() {
                lits.push(Literal::pos(a.clone()));
            }
        }
        for j in 0..allow_aux {
            if rng.gen_bool(0.5) {
                lits.push(Literal::neg(format!("aux{j}")));
            }
        }
        lits
    };
    let mut rules = Vec::new();
    for j in 0..n_aux {
        rules.push(Rule::new(format!("aux{j}"), body(rng, 0)).unwrap());
    }
    for t in &targets {
        for _ in 0..rng.gen_range(1..=2) {
            rules.push(Rule::new(t.clone(), body(rng, n_aux)).unwrap());
        }
    }
    RuleSet::new(rules, &targets).unwrap()
}

#[test]
fn criterion_10_round_trips() {
    let mut rng = ChaCha8Rng::seed_from_u64(10_001);
    let dir = tempfile::tempdir().unwrap();

    for trial in 0..20 {
        let data = random_dataset(&mut rng, trial % 2 == 0);
        let path = dir.path().join(format!("rt{trial}.csv"));
        save_dataset_csv(&data, &path).unwrap();
        let back = load_dataset_csv(&path).unwrap();
        assert_eq!(data, back, "csv trial {trial}");
    }

    for trial in 0..20 {
        let rs = random_ruleset(&mut rng);
        let text = rs.emit_asp();
        let targets: Vec<String> = rs.target_atoms.iter().cloned().collect();
        let back = parse_asp_with_targets(&text, &targets).unwrap();
        // emit_asp orders rules canonically, so compare sorted rule lists
        let sort_key = |r: &Rule| (r.head.clone(), r.body.clone());
        let mut orig = rs.rules.clone();
        let mut parsed = back.rules.clone();
        orig.sort_by_key(sort_key);
        parsed.sort_by_key(sort_key);
        assert_eq!(orig, parsed, "asp trial {trial}");
        assert_eq!(rs.input_atoms, back.input_atoms, "asp trial {trial}");
        assert_eq!(rs.auxiliary_atoms, back.auxiliary_atoms, "asp trial {trial}");
        assert_eq!(rs.target_atoms, back.target_atoms, "asp trial {trial}");
        assert_eq!(text, back.emit_asp(), "asp text trial {trial}");
    }

    for trial in 0..20u64 {
        let mut model = init_eo(
            rng.gen_range(2..=10),
            rng.gen_range(1..=8),
            rng.gen_range(2..=4),
            trial,
        )
        .unwrap();
        for w in model.base.conjunctive.weights.entries_mut() {
            *w = rng.gen_range(-10.0..10.0) / 3.0;
        }
        let ckpt = Checkpoint {
            seed: trial,
            config: serde_json::json!({ "trial": trial }),
            model: ModelKind::Eo(model),
        };
        let text = ckpt.to_json().unwrap();
        let back = Checkpoint::from_json(&text).unwrap();
        assert_eq!(text, back.to_json().unwrap(), "checkpoint trial {trial}");
    }
    println!("criterion 10 round-trips: csv + asp + checkpoint PASS");
}

// ------------------------------------------------------------------------
// 11. Determinism: the CLI rerun with identical config and seed produces
//     byte-identical artifacts across gen-synth, train, posttrain, eval.

fn run_ndnf(args: &[&str]) {
    let status = Command::new(env!("CARGO_BIN_EXE_ndnf"))
        .args(args)
        .status()
        .expect("failed to launch ndnf");
    assert!(status.success(), "ndnf {args:?} failed");
}

fn run_chain(root: &Path) {
    let data = root.join("data");
    let train = root.join("train");
    let post = root.join("post");
    let d = data.to_str().unwrap();
    let t = train.to_str().unwrap();
    let p = post.to_str().unwrap();
    run_ndnf(&[
        "gen-synth", "--kind", "multiclass", "--outputs", "3", "--noise-attrs", "5",
        "--samples", "2000", "--seed", "73", "--out", d,
    ]);
    run_ndnf(&[
        "train", "--data", d, "--model", "eo", "--epochs", "20", "--seed", "73", "--out", t,
    ]);
    run_ndnf(&[
        "posttrain", "--checkpoint", &format!("{t}/checkpoint.json"), "--data", d,
        "--finetune-epochs", "10", "--seed", "73", "--out", p,
    ]);
    run_ndnf(&[
        "eval", "--checkpoint", &format!("{p}/thresholded.json"),
        "--data", &format!("{d}/test.csv"),
        "--out", root.join("eval.json").to_str().unwrap(),
    ]);
}

fn collect_files(root: &Path, rel: &Path, out: &mut Vec<std::path::PathBuf>) {
    for entry in std::fs::read_dir(root.join(rel)).unwrap() {
        let entry = entry.unwrap();
        let sub = rel.join(entry.file_name());
        if entry.file_type().unwrap().is_dir() {
            collect_files(root, &sub, out);
        } else {
            out.push(sub);
        }
    }
}

#[test]
fn criterion_11_cli_determinism() {
    let dir_a = tempfile::tempdir().unwrap();
    let dir_b = tempfile::tempdir().unwrap();
    run_chain(dir_a.path());
    run_chain(dir_b.path());

    let mut files_a = Vec::new();
    let mut files_b = Vec::new();
    collect_files(dir_a.path(), Path::new(""), &mut files_a);
    collect_files(dir_b.path(), Path::new(""), &mut files_b);
    files_a.sort();
    files_b.sort();
    assert_eq!(files_a, files_b, "artifact sets differ");
    assert!(!files_a.is_empty());
    for rel in &files_a {
        let a = std::fs::read(dir_a.path().join(rel)).unwrap();
        let b = std::fs::read(dir_b.path().join(rel)).unwrap();
        assert_eq!(a, b, "artifact {} differs between reruns", rel.display());
    }
    println!(
        "criterion 11 CLI determinism: {} artifacts byte-identical PASS",
        files_a.len()
    );
}
