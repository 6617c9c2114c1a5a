//! Cross-module invariants that need the full metric stack.

use dismet::baselines::{
    betavae_score, dci_disentanglement, downstream_logistic, factorvae_score, mig, sap,
    DciEstimator, ProtocolParams,
};
use dismet::data::{FactorTable, RepresentationMatrix};
use dismet::med::{med_score, topk_med};
use dismet::mi::EntropyBase;
use dismet::synthgen::{encode, factor_grid, EncoderSpec, GridMode, Nonlinearity};
use dismet::io::DatasetSpec;

fn grid(cards: &[u32]) -> FactorTable {
    let spec = DatasetSpec::new(
        "test",
        cards.iter().enumerate().map(|(i, _)| format!("f{i}")).collect(),
        cards.to_vec(),
    )
    .unwrap();
    factor_grid(&spec, GridMode::Full).unwrap()
}

fn replicate(factors: &FactorTable, times: usize) -> FactorTable {
    let mut values = Vec::new();
    for _ in 0..times {
        for r in 0..factors.n_rows() {
            values.extend_from_slice(factors.row(r));
        }
    }
    FactorTable::new(
        factors.names().to_vec(),
        factors.cardinalities().to_vec(),
        values,
    )
    .unwrap()
}

fn with_constant_dims(reps: &RepresentationMatrix, count: usize) -> RepresentationMatrix {
    let mut values = Vec::new();
    for row in 0..reps.n_rows() {
        values.extend_from_slice(reps.row(row));
        values.extend(std::iter::repeat(0.0).take(count));
    }
    RepresentationMatrix::new(reps.n_dims() + count, values).unwrap()
}

// Identity encoding of any full independent grid scores MED 1 to fp
// accuracy (exactly 1.0 here thanks to the 1 - weighted-entropy form).
#[test]
fn identity_on_full_grids_scores_one() {
    for cards in [vec![2u32, 2], vec![3, 4], vec![2, 3, 4]] {
        let factors = grid(&cards);
        let reps = encode(&factors, &EncoderSpec::identity()).unwrap();
        let med = med_score(&reps, &factors, 20, EntropyBase::Natural).unwrap();
        assert_eq!(med, 1.0, "cards {cards:?}");
    }
}

// Appending constant dimensions must not move any metric. The MI-side
// metrics and the classifier metrics are bit-identical (dead features are
// zeroed by standardization, constant dims are pruned by FactorVAE); SAP is
// checked on duplicated-code data where its top-two scores (both 1.0) are
// untouched by a chance-level constant-dimension stump.
#[test]
fn append_constant_leaves_metrics_unchanged() {
    let factors = replicate(&grid(&[2, 2]), 16);
    let reps = encode(&factors, &EncoderSpec::duplicate(2)).unwrap();
    let extended = with_constant_dims(&reps, 3);
    let mut params = ProtocolParams::new(7);
    params.num_train = 1000;
    params.num_eval = 500;

    let med_a = med_score(&reps, &factors, 20, EntropyBase::Natural).unwrap();
    let med_b = med_score(&extended, &factors, 20, EntropyBase::Natural).unwrap();
    assert_eq!(med_a.to_bits(), med_b.to_bits());

    let topk_a = topk_med(&reps, &factors, 2, 20, EntropyBase::Natural).unwrap();
    let topk_b = topk_med(&extended, &factors, 2, 20, EntropyBase::Natural).unwrap();
    assert_eq!(topk_a.to_bits(), topk_b.to_bits());

    let mig_a = mig(&reps, &factors, 20, EntropyBase::Natural).unwrap();
    let mig_b = mig(&extended, &factors, 20, EntropyBase::Natural).unwrap();
    assert_eq!(mig_a.to_bits(), mig_b.to_bits());

    let dci_a =
        dci_disentanglement(&reps, &factors, &DciEstimator::lasso_default(), EntropyBase::Natural)
            .unwrap();
    let dci_b = dci_disentanglement(
        &extended,
        &factors,
        &DciEstimator::lasso_default(),
        EntropyBase::Natural,
    )
    .unwrap();
    assert_eq!(dci_a.to_bits(), dci_b.to_bits());

    let beta_a = betavae_score(&reps, &factors, &params).unwrap();
    let beta_b = betavae_score(&extended, &factors, &params).unwrap();
    assert_eq!(beta_a.to_bits(), beta_b.to_bits());

    let fv_a = factorvae_score(&reps, &factors, &params).unwrap();
    let fv_b = factorvae_score(&extended, &factors, &params).unwrap();
    assert_eq!(fv_a.to_bits(), fv_b.to_bits());

    let down_a = downstream_logistic(&reps, &factors, &params).unwrap();
    let down_b = downstream_logistic(&extended, &factors, &params).unwrap();
    assert_eq!(down_a.to_bits(), down_b.to_bits());

    let sap_a = sap(&reps, &factors, &params).unwrap();
    let sap_b = sap(&extended, &factors, &params).unwrap();
    assert_eq!(sap_a.to_bits(), sap_b.to_bits());
}

// Different projection seeds give different matrices but statistically
// indistinguishable MED score distributions: two disjoint seed groups of
// five agree within 3 standard errors.
#[test]
fn random_projection_seed_distributions_agree() {
    let factors = grid(&[4, 4]);
    let scores = |seeds: std::ops::Range<u64>| -> Vec<f64> {
        seeds
            .map(|s| {
                let reps = encode(
                    &factors,
                    &EncoderSpec::random_projection(32, s, Nonlinearity::None),
                )
                .unwrap();
                med_score(&reps, &factors, 20, EntropyBase::Natural).unwrap()
            })
            .collect()
    };
    let a = scores(0..5);
    let b = scores(5..10);
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let var = |v: &[f64], m: f64| v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / v.len() as f64;
    let (ma, mb) = (mean(&a), mean(&b));
    let (va, vb) = (var(&a, ma), var(&b, mb));
    let se = ((va + vb) / 5.0).sqrt();
    assert!(
        (ma - mb).abs() <= 3.0 * se.max(1e-12),
        "group means {ma} vs {mb}, se {se}"
    );
    // And the matrices themselves differ.
    let r0 = encode(&factors, &EncoderSpec::random_projection(32, 0, Nonlinearity::None)).unwrap();
    let r1 = encode(&factors, &EncoderSpec::random_projection(32, 1, Nonlinearity::None)).unwrap();
    assert_ne!(r0, r1);
}

// MI-based metrics are invariant to replicating the whole table: counts
// scale uniformly, probabilities do not change.
#[test]
fn replication_does_not_move_mi_metrics() {
    let factors = grid(&[3, 3]);
    let reps = encode(&factors, &EncoderSpec::duplicate(2)).unwrap();
    let factors_rep = replicate(&factors, 5);
    let reps_rep = {
        let mut values = Vec::new();
        for _ in 0..5 {
            values.extend_from_slice(reps.as_mat().data());
        }
        RepresentationMatrix::new(reps.n_dims(), values).unwrap()
    };
    let a = med_score(&reps, &factors, 20, EntropyBase::Natural).unwrap();
    let b = med_score(&reps_rep, &factors_rep, 20, EntropyBase::Natural).unwrap();
    assert!((a - b).abs() < 1e-12);
}
