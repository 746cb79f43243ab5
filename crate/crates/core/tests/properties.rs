//! Property-based invariant checks for the core building blocks.

use std::collections::BTreeMap;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use neural_dnf::data::{
    load_dataset_csv, mutual_information, save_dataset_csv, Dataset, Sample, Target, TaskKind,
};
use neural_dnf::math::{softmax, RealMatrix};
use neural_dnf::models::{init_vanilla, interpret_bipolar};
use neural_dnf::post_training::apply_threshold;
use neural_dnf::rules::{parse_asp, sanitize_atom, Literal, Rule, RuleSet};
use neural_dnf::semi_symbolic::{logical_bias, DeltaSchedule, LayerKind, SemiSymbolicLayer};

fn finite_row() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-10.0..10.0f64, 1..12)
}

proptest! {
    // The logical bias has the sign of delta flipped: for a conjunction
    // (delta > 0) it is <= 0, for a disjunction (delta < 0) it is >= 0,
    // and it is exactly 0 for a single-literal row.
    #[test]
    fn bias_sign_follows_delta(row in finite_row(), mag in 0.1..1.0f64) {
        let conj = logical_bias(&row, mag).unwrap();
        let disj = logical_bias(&row, -mag).unwrap();
        prop_assert!(conj <= 1e-12);
        prop_assert!(disj >= -1e-12);
        prop_assert!((conj + disj).abs() < 1e-12);
        let single = logical_bias(&row[..1], mag).unwrap();
        prop_assert!(single.abs() < 1e-12);
    }

    // tanh keeps every layer output strictly inside (-1, 1), and the
    // interpretation at threshold 0 returns sorted, in-range indices.
    #[test]
    fn layer_outputs_bounded(seed in 0u64..500, bits in 0u32..4096) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layer = SemiSymbolicLayer::init(4, 12, LayerKind::Disjunctive, 1.0, &mut rng).unwrap();
        let x: Vec<f64> = (0..12)
            .map(|i| if bits >> i & 1 == 1 { 1.0 } else { -1.0 })
            .collect();
        let y = layer.forward(&x).unwrap();
        prop_assert!(y.iter().all(|v| v.abs() < 1.0));
        let picked = interpret_bipolar(&y, 0.0);
        prop_assert!(picked.windows(2).all(|w| w[0] < w[1]));
        prop_assert!(picked.iter().all(|&i| i < y.len()));
    }

    // Softmax is a probability distribution for any finite logits.
    #[test]
    fn softmax_is_distribution(logits in prop::collection::vec(-50.0..50.0f64, 1..10)) {
        let p = softmax(&logits).unwrap();
        prop_assert!(p.iter().all(|v| *v >= 0.0 && *v <= 1.0));
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    // The delta staircase starts at 0.1, never decreases, stays in
    // [0.1, 1.0] and reaches 1.0 by the final epoch (runs shorter than
    // 10 epochs cannot fit all ten steps of the ramp).
    #[test]
    fn delta_schedule_monotone(total in 10usize..400) {
        let sched = DeltaSchedule::for_epochs(total);
        let mut prev = 0.0;
        for epoch in 0..total {
            let d = sched.delta_at_epoch(epoch);
            prop_assert!((0.1..=1.0 + 1e-12).contains(&d));
            prop_assert!(d >= prev);
            prev = d;
        }
        prop_assert_eq!(sched.delta_at_epoch(0), 0.1);
        prop_assert!((sched.delta_at_epoch(total - 1) - 1.0).abs() < 1e-12);
    }

    // Thresholding maps every weight to {0, +6, -6}, preserving signs.
    #[test]
    fn threshold_codomain(seed in 0u64..500, t in 0.0..2.0f64) {
        let model = init_vanilla(8, 5, 3, seed).unwrap();
        let snapped = apply_threshold(&model, t).unwrap();
        for (layer, orig) in [
            (&snapped.conjunctive, &model.conjunctive),
            (&snapped.disjunctive, &model.disjunctive),
        ] {
            for (w, o) in layer.weights.entries().iter().zip(orig.weights.entries()) {
                prop_assert!([0.0, 6.0, -6.0].contains(w));
                if *w != 0.0 {
                    prop_assert_eq!(w.signum(), o.signum());
                    prop_assert!(o.abs() > t);
                } else {
                    prop_assert!(o.abs() <= t);
                }
            }
        }
    }

    // Mutual information is nonnegative and at most ln 2 for binary X.
    #[test]
    fn mi_bounds(pairs in prop::collection::vec((any::<bool>(), 0usize..4), 1..200)) {
        let x: Vec<bool> = pairs.iter().map(|p| p.0).collect();
        let y: Vec<usize> = pairs.iter().map(|p| p.1).collect();
        let mi = mutual_information(&x, &y).unwrap();
        prop_assert!(mi >= 0.0);
        prop_assert!(mi <= 2.0f64.ln() + 1e-12);
    }

    // sanitize_atom always yields an atom the parser accepts.
    #[test]
    fn sanitized_atoms_parse(raw in "\\PC{1,20}") {
        let atom = sanitize_atom(&raw);
        let text = format!("{atom} :- {atom}_in.\n");
        let rs = parse_asp(&text).unwrap();
        prop_assert_eq!(rs.rules.len(), 1);
        prop_assert_eq!(&rs.rules[0].head, &atom);
    }

    // A single-rule program round-trips through text.
    #[test]
    fn rule_text_roundtrip(mask in 1u8..63, neg in 0u8..63) {
        let body: Vec<Literal> = (0..6)
            .filter(|i| mask >> i & 1 == 1)
            .map(|i| {
                if neg >> i & 1 == 1 {
                    Literal::neg(format!("a{i}"))
                } else {
                    Literal::pos(format!("a{i}"))
                }
            })
            .collect();
        let rs = RuleSet::new(
            vec![Rule::new("head", body).unwrap()],
            &["head".to_string()],
        )
        .unwrap();
        let parsed = parse_asp(&rs.emit_asp()).unwrap();
        prop_assert_eq!(rs, parsed);
    }

    // Datasets survive the CSV round-trip exactly.
    #[test]
    fn csv_roundtrip(
        rows in prop::collection::vec((prop::collection::vec(any::<bool>(), 5), 0usize..3), 1..20),
        multilabel: bool,
    ) {
        let samples: Vec<Sample> = rows
            .iter()
            .map(|(attrs, class)| Sample {
                attributes: attrs.clone(),
                target: if multilabel {
                    Target::Labels(vec![*class == 0, *class == 1, *class == 2])
                } else {
                    Target::Class(*class)
                },
            })
            .collect();
        let data = Dataset {
            attribute_names: (0..5).map(|a| format!("attr_{a}")).collect(),
            task: if multilabel {
                TaskKind::MultiLabel { n_labels: 3 }
            } else {
                TaskKind::MultiClass { n_classes: 3 }
            },
            output_names: (0..3).map(|c| format!("out_{c}")).collect(),
            samples,
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.csv");
        save_dataset_csv(&data, &path).unwrap();
        prop_assert_eq!(load_dataset_csv(&path).unwrap(), data);
    }

    // Rule evaluation is monotone in the rules: adding a rule can only
    // grow the derived target set (stratified, negation only on inputs
    // and lower strata that the extra target rule cannot change).
    #[test]
    fn evaluation_monotone_in_target_rules(bits in 0u8..16, extra_mask in 1u8..15) {
        let base = vec![
            Rule::new("t", vec![Literal::pos("a0"), Literal::neg("a1")]).unwrap(),
            Rule::new("u", vec![Literal::pos("a2")]).unwrap(),
        ];
        let extra_body: Vec<Literal> = (0..4)
            .filter(|i| extra_mask >> i & 1 == 1)
            .map(|i| Literal::pos(format!("a{i}")))
            .collect();
        let targets = ["t".to_string(), "u".to_string()];
        let small = RuleSet::new(base.clone(), &targets).unwrap();
        let mut bigger_rules = base;
        bigger_rules.push(Rule::new("t", extra_body).unwrap());
        let big = RuleSet::new(bigger_rules, &targets).unwrap();

        let assignment: BTreeMap<String, bool> = (0..4)
            .map(|i| (format!("a{i}"), bits >> i & 1 == 1))
            .collect();
        let before = small.evaluate(&assignment).unwrap();
        let after = big.evaluate(&assignment).unwrap();
        prop_assert!(before.is_subset(&after));
    }
}

// Pruning a weight pins it at zero through the mask.
#[test]
fn pruned_weight_stays_masked() {
    let mut model = init_vanilla(6, 4, 2, 11).unwrap();
    model.conjunctive.prune_weight(1, 3);
    assert_eq!(model.conjunctive.weights.get(1, 3), 0.0);
    assert_eq!(model.conjunctive.prune_mask.get(1, 3), 0.0);
    // a masked entry receives zero gradient
    let x = vec![1.0, -1.0, 1.0, -1.0, 1.0, -1.0];
    let y = model.conjunctive.forward(&x).unwrap();
    let (dw, _) = model
        .conjunctive
        .backward(&x, &y, &vec![1.0; 4])
        .unwrap();
    assert_eq!(dw.get(1, 3), 0.0);
}

// RealMatrix shape bookkeeping.
#[test]
fn matrix_shape_checks() {
    assert!(RealMatrix::from_vec(2, 3, vec![0.0; 5]).is_err());
    let m = RealMatrix::from_vec(2, 3, vec![1.0; 6]).unwrap();
    assert!(m.same_shape(&RealMatrix::zeros(2, 3)));
    assert!(!m.same_shape(&RealMatrix::zeros(3, 2)));
    assert_eq!(m.count_nonzero(), 6);
}
