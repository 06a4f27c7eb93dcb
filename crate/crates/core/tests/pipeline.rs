use std::collections::BTreeMap;

use digger_core::corpus::{
    ingest_documents, list_text_files, CorpusManifest, PassagePlan, Sample, SplitPlan, Tokenizer, TokenizerKind,
};
use digger_core::oracle::{
    load_snapshot, save_snapshot, BuiltinOracle, ExternalOracle, LossOracle, LossTable, Stage, TinyLmConfig,
};
use digger_core::pipeline::{
    audit, build_baseline, build_reference, characteristic_study, compute_gaps, simulate, AuditConfig, AuditInputs,
    GapTransform, ModelVariant, StudyConfig, StudyInputs,
};
use digger_core::stats::roc_auc;
use digger_core::synth::{documents, planted_audit, write_corpus, Membership, SynthConfig};
use digger_core::Error;

const SPLITS: SplitPlan = SplitPlan {
    baseline_docs: 12,
    unlearned1_docs: 12,
    target_docs: 8,
    unlearned2_docs: 8,
};
const PASSAGES: PassagePlan = PassagePlan {
    passage_len_tokens: 128,
    passages_per_doc: 8,
    rng_seed: 1,
};

fn controlled(membership: Membership) -> AuditInputs {
    let docs = documents(&SynthConfig::default(), &Tokenizer::Bytes).unwrap();
    planted_audit(&docs, &PASSAGES, &SPLITS, 1, membership).unwrap()
}

fn small_model() -> TinyLmConfig {
    TinyLmConfig {
        context_len: 4,
        hidden_dim: 32,
        pretrain_passes: 1,
        ..TinyLmConfig::default()
    }
}

/// 20 short documents, split 4/4/4/4 with 4 spare, 2 passages of 64 tokens each.
fn small_inputs() -> AuditInputs {
    let syn = SynthConfig {
        documents: 20,
        min_bytes: 400,
        ..SynthConfig::default()
    };
    let docs = documents(&syn, &Tokenizer::Bytes).unwrap();
    let plan = PassagePlan {
        passage_len_tokens: 64,
        passages_per_doc: 2,
        rng_seed: 3,
    };
    let splits = SplitPlan {
        baseline_docs: 4,
        unlearned1_docs: 4,
        target_docs: 4,
        unlearned2_docs: 4,
    };
    planted_audit(&docs, &plan, &splits, 9, Membership::Mixed).unwrap()
}

fn mean(oracle: &dyn LossOracle, m: &digger_core::ModelSnapshot, samples: &[Sample]) -> f64 {
    let l = oracle.sample_losses(m, samples).unwrap();
    l.iter().sum::<f64>() / l.len() as f64
}

#[test]
fn baseline_learns_its_split_deterministically() {
    let inputs = small_inputs();
    let oracle = BuiltinOracle::new(small_model()).unwrap();
    let vanilla = oracle.vanilla(&inputs.background).unwrap();
    let baseline = build_baseline(&oracle, &vanilla, &inputs.baseline).unwrap();
    assert_eq!(baseline.stage, Stage::Baseline);
    assert!(mean(&oracle, &baseline, &inputs.baseline) < mean(&oracle, &vanilla, &inputs.baseline));
    let again = build_baseline(&oracle, &vanilla, &inputs.baseline).unwrap();
    assert_eq!(again.model_id, baseline.model_id);
    assert!(matches!(
        build_baseline(&oracle, &vanilla, &[]),
        Err(Error::Precondition(_))
    ));
}

#[test]
fn reference_rejects_overlap() {
    let inputs = small_inputs();
    let oracle = BuiltinOracle::new(small_model()).unwrap();
    let vanilla = oracle.vanilla(&inputs.background).unwrap();
    let baseline = build_baseline(&oracle, &vanilla, &inputs.baseline).unwrap();
    match build_reference(&oracle, &baseline, &inputs.baseline, &inputs.baseline[..2]) {
        Err(Error::OverlappingSplits { doc_ids }) => assert!(!doc_ids.is_empty()),
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn reference_gaps_separate_second_exposure() {
    let inputs = controlled(Membership::AllUnseen);
    let oracle = BuiltinOracle::new(TinyLmConfig::default()).unwrap();
    let vanilla = oracle.vanilla(&inputs.background).unwrap();
    let baseline = build_baseline(&oracle, &vanilla, &inputs.baseline).unwrap();
    let reference = build_reference(&oracle, &baseline, &inputs.baseline, &inputs.unlearned1).unwrap();
    assert!(reference.extends(&baseline));
    let seen = compute_gaps(
        &oracle,
        &baseline,
        &reference,
        &inputs.baseline,
        None,
        GapTransform::Raw,
    )
    .unwrap();
    let unseen = compute_gaps(
        &oracle,
        &baseline,
        &reference,
        &inputs.unlearned1,
        None,
        GapTransform::Raw,
    )
    .unwrap();
    let g = |r: &[digger_core::GapRecord]| r.iter().map(|x| x.gap).collect::<Vec<_>>();
    let (s, u) = (g(&seen), g(&unseen));
    assert!(u.iter().sum::<f64>() / u.len() as f64 > s.iter().sum::<f64>() / s.len() as f64);
    let neg: Vec<f64> = u.iter().map(|v| -v).collect();
    let pos: Vec<f64> = s.iter().map(|v| -v).collect();
    assert!(roc_auc(&pos, &neg).unwrap().auc > 0.5);
}

fn vanilla_pair_auc(membership: Membership) -> (f64, f64, f64) {
    let inputs = controlled(membership);
    let oracle = BuiltinOracle::new(TinyLmConfig::default()).unwrap();
    let vanilla = oracle.vanilla(&inputs.background).unwrap();
    let baseline = build_baseline(&oracle, &vanilla, &inputs.baseline).unwrap();
    let reference = build_reference(&oracle, &baseline, &inputs.baseline, &inputs.unlearned1).unwrap();
    let sim = simulate(
        &oracle,
        &vanilla,
        &reference,
        &inputs.target,
        &inputs.unlearned2,
        None,
        GapTransform::Raw,
    )
    .unwrap();
    assert!(sim.warnings.is_empty());
    assert!(sim.vanilla_tuned.extends(&vanilla) && sim.reference_tuned.extends(&reference));
    let neg: Vec<f64> = sim.vanilla_tuned_unseen.iter().map(|g| -g.gap).collect();
    let pos: Vec<f64> = sim.vanilla_tuned_target.iter().map(|g| -g.gap).collect();
    let mean = |v: &[f64]| -v.iter().sum::<f64>() / v.len() as f64;
    (mean(&pos), mean(&neg), roc_auc(&pos, &neg).unwrap().auc)
}

#[test]
fn planted_target_has_smaller_vanilla_gaps() {
    let (target, unseen, _) = vanilla_pair_auc(Membership::AllSeen);
    assert!(target < unseen, "{target} vs {unseen}");
}

#[test]
fn unplanted_target_overlaps_unlearned2() {
    let (_, _, auc) = vanilla_pair_auc(Membership::AllUnseen);
    assert!((0.35..=0.65).contains(&auc), "auc {auc}");
}

#[test]
fn simulate_rejects_target_equal_to_unlearned2() {
    let inputs = small_inputs();
    let oracle = BuiltinOracle::new(small_model()).unwrap();
    let vanilla = oracle.vanilla(&inputs.background).unwrap();
    let baseline = build_baseline(&oracle, &vanilla, &inputs.baseline).unwrap();
    let reference = build_reference(&oracle, &baseline, &inputs.baseline, &inputs.unlearned1).unwrap();
    let r = simulate(
        &oracle,
        &vanilla,
        &reference,
        &inputs.unlearned2,
        &inputs.unlearned2,
        None,
        GapTransform::Raw,
    );
    assert!(matches!(r, Err(Error::OverlappingSplits { .. })));
}

#[test]
fn simulate_warns_on_unequal_document_counts() {
    let inputs = small_inputs();
    let oracle = BuiltinOracle::new(small_model()).unwrap();
    let vanilla = oracle.vanilla(&inputs.background).unwrap();
    let baseline = build_baseline(&oracle, &vanilla, &inputs.baseline).unwrap();
    let reference = build_reference(&oracle, &baseline, &inputs.baseline, &inputs.unlearned1).unwrap();
    let sim = simulate(
        &oracle,
        &vanilla,
        &reference,
        &inputs.target[..2],
        &inputs.unlearned2,
        None,
        GapTransform::Raw,
    )
    .unwrap();
    assert_eq!(sim.warnings.len(), 1);
}

#[test]
fn exported_losses_reproduce_the_builtin_audit() {
    let inputs = small_inputs();
    let cfg = AuditConfig::default();
    let oracle = BuiltinOracle::new(small_model()).unwrap();
    let builtin = audit(&oracle, &inputs, &cfg).unwrap();

    let vanilla = oracle.vanilla(&inputs.background).unwrap();
    let baseline = build_baseline(&oracle, &vanilla, &inputs.baseline).unwrap();
    let reference = build_reference(&oracle, &baseline, &inputs.baseline, &inputs.unlearned1).unwrap();
    let sim = simulate(
        &oracle,
        &vanilla,
        &reference,
        &inputs.target,
        &inputs.unlearned2,
        None,
        GapTransform::Raw,
    )
    .unwrap();
    let models = [vanilla, baseline, reference, sim.reference_tuned, sim.vanilla_tuned];

    let all: Vec<&Sample> = [&inputs.baseline, &inputs.unlearned1, &inputs.target, &inputs.unlearned2]
        .into_iter()
        .flatten()
        .collect();
    let mut table = LossTable::default();
    for m in &models {
        for s in &all {
            table.insert(oracle.loss_record(m, s).unwrap()).unwrap();
        }
    }
    let text = table.to_lines().unwrap();
    let table = LossTable::parse(text.as_bytes()).unwrap();
    let ids: BTreeMap<Stage, String> = models.iter().map(|m| (m.stage, m.model_id.clone())).collect();
    for m in &builtin.models {
        assert_eq!(ids[&m.stage], m.model_id);
    }
    let external = audit(&ExternalOracle::new(table, ids).unwrap(), &inputs, &cfg).unwrap();
    assert_eq!(external.targets, builtin.targets);
    assert_eq!(external.unlearned2, builtin.unlearned2);
    assert_eq!(external.calibration, builtin.calibration);
    assert_eq!(external.classifications, builtin.classifications);
    assert_ne!(external.oracle_fingerprint, builtin.oracle_fingerprint);
}

#[test]
fn missing_export_names_sample_and_model() {
    let inputs = small_inputs();
    let models = Stage::ALL.into_iter().map(|s| (s, format!("m-{s}"))).collect();
    let oracle = ExternalOracle::new(LossTable::default(), models).unwrap();
    let err = audit(&oracle, &inputs, &AuditConfig::default()).unwrap_err();
    assert!(err.to_string().contains("m-"), "{err}");
    assert_eq!(err.kind(), "missing_loss");
}

#[test]
fn manifest_survives_disk_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let docs_dir = dir.path().join("docs");
    let syn = SynthConfig {
        documents: 10,
        min_bytes: 500,
        ..SynthConfig::default()
    };
    write_corpus(&syn, &docs_dir).unwrap();
    let (docs, tok) = ingest_documents(&list_text_files(&docs_dir).unwrap(), TokenizerKind::Bytes).unwrap();
    let plan = PassagePlan {
        passage_len_tokens: 64,
        passages_per_doc: 3,
        rng_seed: 4,
    };
    let splits = SplitPlan {
        baseline_docs: 3,
        unlearned1_docs: 3,
        target_docs: 2,
        unlearned2_docs: 2,
    };
    let (mut manifest, samples) = CorpusManifest::build(&docs, tok, plan, splits, 11).unwrap();
    manifest.relativize_sources(dir.path());
    let path = dir.path().join("manifest.json");
    manifest.save(&path).unwrap();
    let loaded = CorpusManifest::load(&path).unwrap();
    assert_eq!(loaded, manifest);
    let by_id = |mut v: Vec<Sample>| {
        v.sort_by(|a, b| a.sample_id.cmp(&b.sample_id));
        v
    };
    assert!(by_id(loaded.materialize(dir.path()).unwrap()) == by_id(samples));

    std::fs::write(docs_dir.join("doc000.txt"), "edited").unwrap();
    assert!(loaded.materialize(dir.path()).is_err());
}

#[test]
fn snapshot_file_round_trip() {
    let inputs = small_inputs();
    let oracle = BuiltinOracle::new(small_model()).unwrap();
    let vanilla = oracle.vanilla(&inputs.background).unwrap();
    let baseline = build_baseline(&oracle, &vanilla, &inputs.baseline).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("baseline.snap");
    save_snapshot(&baseline, &path).unwrap();
    let back = load_snapshot(&path).unwrap();
    assert_eq!(back, baseline);
    assert_eq!(
        oracle.sample_losses(&back, &inputs.target).unwrap(),
        oracle.sample_losses(&baseline, &inputs.target).unwrap()
    );
}

#[test]
fn audit_is_deterministic_and_lineage_is_consistent() {
    let inputs = small_inputs();
    let oracle = BuiltinOracle::new(small_model()).unwrap();
    let a = audit(&oracle, &inputs, &AuditConfig::default()).unwrap();
    let b = audit(&oracle, &inputs, &AuditConfig::default()).unwrap();
    assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
    a.verify_lineage().unwrap();
    assert_eq!(a.models.len(), 5);
    assert_eq!(
        a.confidence_bins.iter().map(|b| b.count).sum::<u64>(),
        a.targets.len() as u64
    );
}

#[test]
fn study_rejects_overlapping_learned_and_unlearned() {
    let inputs = small_inputs();
    let study = StudyInputs {
        background: inputs.background.clone(),
        learned: inputs.baseline.clone(),
        unlearned: inputs.baseline[..1].to_vec(),
    };
    let cfg = StudyConfig::with_variants(vec![ModelVariant {
        name: "small".into(),
        model: small_model(),
    }]);
    assert_eq!(
        characteristic_study(&cfg, &study).unwrap_err().kind(),
        "overlapping_splits"
    );
}

#[test]
fn study_curve_starts_at_vanilla() {
    let inputs = small_inputs();
    let study = StudyInputs {
        background: inputs.background.clone(),
        learned: inputs.baseline.clone(),
        unlearned: inputs.unlearned1.clone(),
    };
    let cfg = StudyConfig {
        eval_lengths: vec![32, 64],
        ..StudyConfig::with_variants(vec![ModelVariant {
            name: "small".into(),
            model: small_model(),
        }])
    };
    let report = characteristic_study(&cfg, &study).unwrap();
    let v = &report.variants[0];
    assert_eq!(
        v.loss_curve.iter().map(|p| p.repeats).collect::<Vec<_>>(),
        vec![0, 1, 2, 3]
    );
    assert!(v.loss_curve[0].loss_change.is_none());
    assert_eq!(v.auc_grid.len(), 6);
    assert!(v.auc_grid.iter().all(|c| (0.0..=1.0).contains(&c.auc)));
    assert_eq!(report, characteristic_study(&cfg, &study).unwrap());
}
