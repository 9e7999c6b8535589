use proptest::prelude::*;
use tedge_core::evalkit::{
    accuracy, alpha_sweep, confusion, evaluate_pipeline, f1_score, metrics, split, EvalPlan, LabeledDataset, LinearSvm,
    SplitSpec, SvmConfig,
};
use tedge_core::synth::{planted_temporal_graph, PlantedConfig};
use tedge_core::{ConfusionCounts, SamplingStrategy, StrategyKind, TrainConfig, WalkConfig};

proptest! {
    #[test]
    fn metric_values_stay_in_unit_interval(tp in 0u64..1000, tn in 0u64..1000, fp in 0u64..1000, fn_ in 0u64..1000) {
        let c = ConfusionCounts { tp, tn, fp, fn_ };
        for v in metrics(&c).values() {
            prop_assert!((0.0..=1.0).contains(&v));
        }
    }

    #[test]
    fn f1_is_symmetric(p in 0.0f64..=1.0, r in 0.0f64..=1.0) {
        prop_assert_eq!(f1_score(p, r), f1_score(r, p));
        prop_assert!((f1_score(p, p) - p).abs() < 1e-15);
    }

    #[test]
    fn confusion_accounts_for_every_sample(pairs in prop::collection::vec((any::<bool>(), any::<bool>()), 0..50)) {
        let (t, p): (Vec<bool>, Vec<bool>) = pairs.into_iter().unzip();
        let c = confusion(&t, &p).unwrap();
        prop_assert_eq!(c.total() as usize, t.len());
        prop_assert_eq!((c.tp + c.fn_) as usize, t.iter().filter(|&&x| x).count());
        prop_assert_eq!((c.tp + c.fp) as usize, p.iter().filter(|&&x| x).count());
    }

    #[test]
    fn splits_are_stratified(pos in 2usize..40, neg in 2usize..40, ratio in 0.05f64..0.95, seed in any::<u64>()) {
        let n = pos + neg;
        let labels: Vec<bool> = (0..n).map(|i| i < pos).collect();
        let data = LabeledDataset::new(
            (0..n).map(|i| format!("n{i}")).collect(),
            (0..n).map(|i| vec![i as f64]).collect(),
            labels,
        ).unwrap();
        let (train, test) = split(&data, &SplitSpec::new(ratio, seed)).unwrap();
        prop_assert_eq!(train.len() + test.len(), n);
        let (tp, tn) = train.class_counts();
        prop_assert!((tp as f64 - ratio * pos as f64).abs() <= 1.0);
        prop_assert!((tn as f64 - ratio * neg as f64).abs() <= 1.0);
        let mut all: Vec<&String> = train.ids.iter().chain(&test.ids).collect();
        all.sort();
        all.dedup();
        prop_assert_eq!(all.len(), n);
        let again = split(&data, &SplitSpec::new(ratio, seed)).unwrap();
        prop_assert_eq!(again.0.ids, train.ids);
    }
}

#[test]
fn hand_computed_metric_tables() {
    let c = confusion(&[true, true, false, false], &[true, false, true, false]).unwrap();
    assert_eq!(c, ConfusionCounts { tp: 1, tn: 1, fp: 1, fn_: 1 });

    let m = metrics(&ConfusionCounts { tp: 4, tn: 0, fp: 1, fn_: 1 });
    assert!((m.precision - 0.8).abs() < 1e-15);
    assert!((m.recall - 0.8).abs() < 1e-15);
    assert!((m.f1 - 0.8).abs() < 1e-15);

    let all_pos = confusion(&[true; 5].iter().chain(&[false; 5]).copied().collect::<Vec<_>>(), &[true; 10]).unwrap();
    assert_eq!(all_pos, ConfusionCounts { tp: 5, tn: 0, fp: 5, fn_: 0 });
    let m = metrics(&all_pos);
    assert_eq!(m.precision, 0.5);
    assert_eq!(m.recall, 1.0);
    // negative class F1 is 0, positive 2/3
    assert!((m.macro_f1 - 1.0 / 3.0).abs() < 1e-15);
    assert_eq!(m.micro_f1, accuracy(&all_pos));
}

#[test]
fn svm_separates_blobs() {
    let mut ids = Vec::new();
    let mut x = Vec::new();
    let mut y = Vec::new();
    for i in 0..40 {
        let offset = (i % 7) as f64 * 0.1;
        let pos = i % 2 == 0;
        // the line x0 + x1 = 0 separates the blobs with margin 2
        let c = if pos { 2.0 } else { -2.0 };
        ids.push(format!("n{i}"));
        x.push(vec![c + offset, c - offset]);
        y.push(pos);
    }
    let data = LabeledDataset::new(ids, x, y).unwrap();
    let model = LinearSvm::fit(&data, &SvmConfig::default()).unwrap();
    assert_eq!(model.predict_all(&data), data.labels);
}

fn small_planted() -> (tedge_core::TemporalGraph, Vec<(String, bool)>) {
    let cfg = PlantedConfig {
        per_class: 20,
        bridges: 15,
        community: 40,
        ..PlantedConfig::default()
    };
    planted_temporal_graph(&cfg, 3)
}

fn small_plan() -> EvalPlan {
    EvalPlan {
        walk: WalkConfig { walk_length: 6, walks_per_node: 2, seed: 0 },
        train: TrainConfig { dimension: 8, epochs: 1, ..TrainConfig::default() },
        svm: SvmConfig { iterations: 60, ..SvmConfig::default() },
        ratios: vec![0.5, 0.8],
        seeds: vec![1, 2],
        ..EvalPlan::default()
    }
}

#[test]
fn pipeline_shape_and_determinism() {
    let (g, labels) = small_planted();
    let plan = EvalPlan {
        strategies: vec![SamplingStrategy::new(StrategyKind::StaticUniform), SamplingStrategy::new(StrategyKind::Tbs)],
        ..small_plan()
    };
    let a = evaluate_pipeline(&g, &labels, &plan).unwrap();
    let b = evaluate_pipeline(&g, &labels, &plan).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.rows.len(), 2 * 2 * 2);
    assert_eq!(a.summary().len(), 4);
    let mut ta = Vec::new();
    a.write_tsv(&mut ta).unwrap();
    let text = String::from_utf8(ta).unwrap();
    assert_eq!(
        text.lines().next().unwrap(),
        "strategy\talpha\tratio\tseed\tprecision\trecall\tf1\tmicro_f1\tmacro_f1"
    );
    assert_eq!(text.lines().count(), 9);
}

#[test]
fn alpha_extremes_reproduce_single_laws_end_to_end() {
    let (g, labels) = small_planted();
    let plan = EvalPlan {
        strategies: vec![SamplingStrategy::new(StrategyKind::Tbs), SamplingStrategy::new(StrategyKind::Wbs)],
        ..small_plan()
    };
    let base = evaluate_pipeline(&g, &labels, &plan).unwrap();
    let sweep = alpha_sweep(&g, &labels, &[0.0, 0.5, 1.0], &plan).unwrap();
    let metrics_of = |rows: Vec<&tedge_core::ResultRow>| rows.iter().map(|r| (r.ratio, r.seed, r.metrics.values().map(f64::to_bits))).collect::<Vec<_>>();
    assert_eq!(
        metrics_of(sweep.rows_for(StrategyKind::TbsWbs, Some(1.0))),
        metrics_of(base.rows_for(StrategyKind::Tbs, None))
    );
    assert_eq!(
        metrics_of(sweep.rows_for(StrategyKind::TbsWbs, Some(0.0))),
        metrics_of(base.rows_for(StrategyKind::Wbs, None))
    );
    assert!(alpha_sweep(&g, &labels, &[1.5], &plan).is_err());
}
