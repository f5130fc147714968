//! Transformer checks against independent references: a naive per-head
//! attention implementation in plain f64 loops, hand-assembled layer
//! composition, finite differences through the full classifier, and
//! training competence on separable data.

use tidgan_core::data::{
    generate_oracle_dataset, ClassSpec, Normalizer, NormalizerMode, OracleSpec, SampleTable,
};
use tidgan_core::metrics::roc_and_auc;
use tidgan_core::rng::rng_from_seed;
use tidgan_core::tensor::{ComputationRecord, Tensor};
use tidgan_core::transformer::{
    attention_weights, bce_loss, classify_recorded, embed, encoder_forward, multi_head_attention,
    train_classifier, Classifier, ClassifierHyper, TransformerConfig, TransformerModel,
};

use rand::Rng;

// ---- naive reference implementation (plain loops, no tensor code) -------

fn mat(t: &Tensor) -> Vec<Vec<f64>> {
    let (r, c) = t.dims();
    let v = t.values();
    (0..r).map(|i| v[i * c..(i + 1) * c].to_vec()).collect()
}

fn mm(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let (m, k, n) = (a.len(), b.len(), b[0].len());
    let mut c = vec![vec![0.0; n]; m];
    for i in 0..m {
        for p in 0..k {
            for j in 0..n {
                c[i][j] += a[i][p] * b[p][j];
            }
        }
    }
    c
}

fn naive_softmax_row(row: &[f64]) -> Vec<f64> {
    let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = row.iter().map(|v| (v - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.iter().map(|e| e / sum).collect()
}

/// Multi-head attention computed head by head with explicit loops.
fn naive_mha(
    x: &[Vec<f64>],
    wq: &[Vec<f64>],
    wk: &[Vec<f64>],
    wv: &[Vec<f64>],
    wo: &[Vec<f64>],
    h: usize,
) -> Vec<Vec<f64>> {
    let l = x.len();
    let d_model = wq[0].len();
    let d_k = d_model / h;
    let q = mm(x, wq);
    let k = mm(x, wk);
    let v = mm(x, wv);

    let mut concat = vec![vec![0.0; d_model]; l];
    for head in 0..h {
        let cols = head * d_k..(head + 1) * d_k;
        for i in 0..l {
            // scores of token i against every token, this head only
            let mut scores = vec![0.0; l];
            for j in 0..l {
                let mut s = 0.0;
                for c in cols.clone() {
                    s += q[i][c] * k[j][c];
                }
                scores[j] = s / (d_k as f64).sqrt();
            }
            let weights = naive_softmax_row(&scores);
            for c in cols.clone() {
                let mut out = 0.0;
                for j in 0..l {
                    out += weights[j] * v[j][c];
                }
                concat[i][c] = out;
            }
        }
    }
    mm(&concat, wo)
}

fn small_config(n_features: usize, d_model: usize, h: usize, n_layers: usize) -> TransformerConfig {
    TransformerConfig {
        n_features,
        d_model,
        h,
        n_layers,
        d_ff: d_model * 2,
        pe_base: 100.0,
        dropout_rate: 0.0,
    }
}

// ---- attention ----------------------------------------------------------

#[test]
fn single_token_attends_to_itself() {
    let mut rec = ComputationRecord::new();
    let q = Tensor::from_rows(&[vec![0.3, -0.7, 1.1, 0.2]]).unwrap();
    let k = Tensor::from_rows(&[vec![1.5, 0.4, -0.2, 0.9]]).unwrap();
    let w = attention_weights(&mut rec, &q, &k).unwrap();
    assert_eq!(w.shape(), vec![1, 1]);
    assert_eq!(w.values(), vec![1.0]);
}

#[test]
fn zero_scores_give_uniform_attention() {
    let mut rec = ComputationRecord::new();
    let q = Tensor::zeros(vec![3, 4]);
    let k = Tensor::from_rows(&[
        vec![1.0, 2.0, 3.0, 4.0],
        vec![-1.0, 0.5, 0.25, 2.0],
        vec![0.0, 1.0, -2.0, 0.5],
    ])
    .unwrap();
    let w = attention_weights(&mut rec, &q, &k).unwrap();
    for v in w.values() {
        assert!((v - 1.0 / 3.0).abs() < 1e-15);
    }
}

#[test]
fn attention_row_from_hand_computed_softmax() {
    // d_k = 4, K built so scaled scores of the first query row are [0, ln 3]
    let mut rec = ComputationRecord::new();
    let q = Tensor::from_rows(&[vec![1.0, 0.0, 0.0, 0.0], vec![0.0, 0.0, 0.0, 0.0]]).unwrap();
    let k = Tensor::from_rows(&[
        vec![0.0, 0.0, 0.0, 0.0],
        vec![2.0 * 3f64.ln(), 0.0, 0.0, 0.0],
    ])
    .unwrap();
    let w = attention_weights(&mut rec, &q, &k).unwrap();
    let row = &w.values()[0..2];
    assert!((row[0] - 0.25).abs() < 1e-12);
    assert!((row[1] - 0.75).abs() < 1e-12);
}

#[test]
fn attention_dims_must_agree() {
    let mut rec = ComputationRecord::new();
    let q = Tensor::zeros(vec![2, 4]);
    let k = Tensor::zeros(vec![2, 8]);
    assert!(attention_weights(&mut rec, &q, &k).is_err());
}

#[test]
fn uniform_attention_when_projections_vanish() {
    // h=1, W_Q = W_K = 0, W_V = W_O = I: every output row is the column mean
    let cfg = small_config(3, 4, 1, 1);
    let mut model = TransformerModel::new(cfg.clone(), 0).unwrap();
    let d = cfg.d_model;
    let layer = &mut model.layers[0];
    layer.w_q = Tensor::param(vec![d, d], vec![0.0; d * d]).unwrap();
    layer.w_k = Tensor::param(vec![d, d], vec![0.0; d * d]).unwrap();
    let mut eye = vec![0.0; d * d];
    for i in 0..d {
        eye[i * d + i] = 1.0;
    }
    layer.w_v = Tensor::param(vec![d, d], eye.clone()).unwrap();
    layer.w_o = Tensor::param(vec![d, d], eye).unwrap();

    let x = Tensor::from_rows(&[
        vec![1.0, 2.0, 3.0, 4.0],
        vec![5.0, 6.0, 7.0, 8.0],
        vec![9.0, 10.0, 11.0, 12.0],
    ])
    .unwrap();
    let mut rec = ComputationRecord::new();
    let out = multi_head_attention(&mut rec, &x, &model.layers[0], &cfg).unwrap();
    let values = out.values();
    let expected = [5.0, 6.0, 7.0, 8.0]; // column means
    for row in 0..3 {
        for col in 0..4 {
            assert!((values[row * 4 + col] - expected[col]).abs() < 1e-12);
        }
    }
}

#[test]
fn mha_output_shape_is_l_by_d_model() {
    let cfg = small_config(5, 8, 2, 1);
    let model = TransformerModel::new(cfg.clone(), 3).unwrap();
    let x = Tensor::full(vec![5, 8], 0.25).unwrap();
    let mut rec = ComputationRecord::new();
    let out = multi_head_attention(&mut rec, &x, &model.layers[0], &cfg).unwrap();
    assert_eq!(out.shape(), vec![5, 8]);
}

#[test]
fn mha_matches_naive_reference_across_random_configs() {
    let mut rng = rng_from_seed(2024);
    for trial in 0..25 {
        let h = [1usize, 2, 4][trial % 3];
        let d_k = rng.random_range(1..=4usize);
        let d_model = (h * d_k).max(1);
        let l = rng.random_range(1..=8usize);
        let cfg = small_config(l, d_model, h, 1);
        let model = TransformerModel::new(cfg.clone(), 5000 + trial as u64).unwrap();
        let rows: Vec<Vec<f64>> = (0..l)
            .map(|_| (0..d_model).map(|_| rng.random_range(-1.5..1.5)).collect())
            .collect();
        let x = Tensor::from_rows(&rows).unwrap();
        let mut rec = ComputationRecord::new();
        let out = multi_head_attention(&mut rec, &x, &model.layers[0], &cfg).unwrap();

        let layer = &model.layers[0];
        let expected = naive_mha(
            &rows,
            &mat(&layer.w_q),
            &mat(&layer.w_k),
            &mat(&layer.w_v),
            &mat(&layer.w_o),
            h,
        );
        let got = out.values();
        for i in 0..l {
            for j in 0..d_model {
                assert!(
                    (got[i * d_model + j] - expected[i][j]).abs() <= 1e-12,
                    "trial {trial}: ({i},{j}) {} vs {}",
                    got[i * d_model + j],
                    expected[i][j]
                );
            }
        }
    }
}

// ---- embedding -----------------------------------------------------------

#[test]
fn zero_features_embed_to_positional_rows() {
    let cfg = small_config(4, 8, 2, 1);
    let model = TransformerModel::new(cfg, 1).unwrap();
    let mut rec = ComputationRecord::new();
    let seq = embed(&mut rec, &model, &[0.0; 4]).unwrap();
    assert_eq!(seq.values(), model.pe.values());
}

#[test]
fn doubling_features_doubles_embedding_contribution_only() {
    let cfg = small_config(3, 4, 1, 1);
    let model = TransformerModel::new(cfg, 2).unwrap();
    let features = [0.7, -1.2, 0.4];
    let doubled: Vec<f64> = features.iter().map(|f| 2.0 * f).collect();
    let mut rec = ComputationRecord::new();
    let a = embed(&mut rec, &model, &features).unwrap().values();
    let b = embed(&mut rec, &model, &doubled).unwrap().values();
    let pe = model.pe.values();
    for i in 0..a.len() {
        assert!((b[i] - pe[i] - 2.0 * (a[i] - pe[i])).abs() < 1e-12);
    }
}

#[test]
fn embed_shape_contract_and_feature_count_check() {
    let cfg = small_config(6, 8, 4, 2);
    let model = TransformerModel::new(cfg, 3).unwrap();
    let mut rec = ComputationRecord::new();
    let seq = embed(&mut rec, &model, &[0.5; 6]).unwrap();
    assert_eq!(seq.shape(), vec![6, 8]);
    assert!(embed(&mut rec, &model, &[0.5; 5]).is_err());
}

// ---- encoder --------------------------------------------------------------

#[test]
fn zero_layers_is_identity() {
    let cfg = small_config(4, 8, 2, 0);
    let model = TransformerModel::new(cfg, 4).unwrap();
    let x = Tensor::from_rows(&[vec![0.3; 8], vec![-0.9; 8], vec![1.4; 8], vec![0.0; 8]]).unwrap();
    let mut rec = ComputationRecord::new();
    let out = encoder_forward(&mut rec, &x, &model).unwrap();
    assert_eq!(out.values(), x.values());
}

#[test]
fn one_layer_forward_matches_hand_composition() {
    let cfg = small_config(5, 8, 2, 1);
    let model = TransformerModel::new(cfg.clone(), 9).unwrap();
    let rows: Vec<Vec<f64>> = (0..5)
        .map(|i| (0..8).map(|j| ((i * 8 + j) as f64) * 0.11 - 2.0).collect())
        .collect();
    let x = Tensor::from_rows(&rows).unwrap();

    let mut rec = ComputationRecord::new();
    let got = encoder_forward(&mut rec, &x, &model).unwrap().values();

    // same layer assembled step by step
    let layer = &model.layers[0];
    let mut rec = ComputationRecord::new();
    let attn = multi_head_attention(&mut rec, &x, layer, &cfg).unwrap();
    let sum = rec.add(&x, &attn).unwrap();
    let normed = rec
        .layer_norm_rows(&sum, &layer.ln1_gamma, &layer.ln1_beta)
        .unwrap();
    let hidden = rec.matmul(&normed, &layer.ff_w1).unwrap();
    let hidden = rec.add(&hidden, &layer.ff_b1).unwrap();
    let hidden = rec.relu(&hidden).unwrap();
    let ff = rec.matmul(&hidden, &layer.ff_w2).unwrap();
    let ff = rec.add(&ff, &layer.ff_b2).unwrap();
    let sum2 = rec.add(&normed, &ff).unwrap();
    let expected = rec
        .layer_norm_rows(&sum2, &layer.ln2_gamma, &layer.ln2_beta)
        .unwrap()
        .values();

    for (g, e) in got.iter().zip(&expected) {
        assert!((g - e).abs() <= 1e-12);
    }
}

// ---- classify --------------------------------------------------------------

#[test]
fn classify_outputs_probabilities() {
    let cfg = small_config(4, 8, 2, 2);
    let model = TransformerModel::new(cfg, 11).unwrap();
    let rows: Vec<Vec<f64>> = (0..6)
        .map(|i| (0..4).map(|j| (i as f64 - j as f64) * 0.6).collect())
        .collect();
    let probs = model.classify(&rows).unwrap();
    assert_eq!(probs.shape(), vec![6]);
    assert!(probs.values().iter().all(|p| *p > 0.0 && *p < 1.0));
}

#[test]
fn classify_is_equivariant_under_batch_permutation() {
    let cfg = small_config(3, 8, 2, 1);
    let model = TransformerModel::new(cfg, 12).unwrap();
    let rows: Vec<Vec<f64>> = (0..5)
        .map(|i| vec![i as f64 * 0.4, -(i as f64) * 0.2, 1.0])
        .collect();
    let forward = model.classify(&rows).unwrap().values();
    let permuted: Vec<Vec<f64>> = (0..5).rev().map(|i| rows[i].clone()).collect();
    let reversed = model.classify(&permuted).unwrap().values();
    for i in 0..5 {
        assert_eq!(forward[i], reversed[4 - i]);
    }
}

#[test]
fn zeroed_head_scores_half_everywhere() {
    let cfg = small_config(3, 4, 1, 1);
    let mut model = TransformerModel::new(cfg, 13).unwrap();
    model.head_w = Tensor::param(vec![4, 1], vec![0.0; 4]).unwrap();
    model.head_b = Tensor::param(vec![1, 1], vec![0.0]).unwrap();
    let probs = model.classify(&[vec![1.0, 2.0, 3.0], vec![-4.0, 0.0, 9.0]]).unwrap();
    assert_eq!(probs.values(), vec![0.5, 0.5]);
}

#[test]
fn parameter_count_is_a_function_of_config() {
    for (n, d, h, layers, dff) in [(7, 32, 4, 2, 64), (3, 8, 2, 1, 16), (5, 12, 3, 4, 20)] {
        let cfg = TransformerConfig {
            n_features: n,
            d_model: d,
            h,
            n_layers: layers,
            d_ff: dff,
            pe_base: 100.0,
            dropout_rate: 0.0,
        };
        let model = TransformerModel::new(cfg.clone(), 21).unwrap();
        let total: usize = model.parameters().iter().map(|p| p.numel()).sum();
        assert_eq!(total, cfg.param_count());
    }
}

#[test]
fn config_validation_rejects_bad_values() {
    let mut cfg = small_config(4, 8, 3, 1); // 8 % 3 != 0
    assert!(cfg.validate().is_err());
    cfg = small_config(4, 8, 2, 1);
    cfg.pe_base = 1.0;
    assert!(cfg.validate().is_err());
    cfg = small_config(4, 8, 2, 1);
    cfg.dropout_rate = 1.0;
    assert!(cfg.validate().is_err());
}

// ---- end-to-end gradient ----------------------------------------------------

#[test]
fn bce_gradient_matches_finite_differences_through_the_whole_model() {
    let cfg = small_config(3, 8, 2, 1);
    let model = TransformerModel::new(cfg, 31).unwrap();
    let rows: Vec<Vec<f64>> = vec![
        vec![0.5, -0.8, 1.2],
        vec![-1.1, 0.3, 0.7],
        vec![0.9, 0.1, -0.4],
        vec![-0.2, 1.3, 0.6],
    ];
    let targets = [1.0, 0.0, 1.0, 0.0];

    let forward = |model: &TransformerModel| -> f64 {
        let refs: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
        let mut rec = ComputationRecord::new();
        let probs = classify_recorded(&mut rec, model, &refs, None).unwrap();
        bce_loss(&mut rec, &probs, &targets).unwrap().item()
    };

    let params = model.parameters();
    for p in &params {
        p.zero_grad();
    }
    let refs: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
    let mut rec = ComputationRecord::new();
    let probs = classify_recorded(&mut rec, &model, &refs, None).unwrap();
    let loss = bce_loss(&mut rec, &probs, &targets).unwrap();
    rec.backward(&loss).unwrap();

    // random sample of 10 parameter slots across the model
    let mut rng = rng_from_seed(77);
    for _ in 0..10 {
        let pi = rng.random_range(0..params.len());
        let param = &params[pi];
        let slot = rng.random_range(0..param.numel());
        let analytic = param.grad().map(|g| g[slot]).unwrap_or(0.0);

        let step = 1e-6;
        let original = param.value_at(slot);
        param.set_value_at(slot, original + step);
        let plus = forward(&model);
        param.set_value_at(slot, original - step);
        let minus = forward(&model);
        param.set_value_at(slot, original);
        let numeric = (plus - minus) / (2.0 * step);

        let rel = if analytic.abs() > 1e-4 { 1e-4 } else { 1e-3 };
        let tol = 1e-7f64.max(rel * analytic.abs().max(numeric.abs()));
        assert!(
            (analytic - numeric).abs() <= tol,
            "param {pi} slot {slot}: analytic {analytic} vs fd {numeric}"
        );
    }
}

// ---- training -----------------------------------------------------------------

fn separable_two_feature_table(seed: u64) -> SampleTable {
    let spec = OracleSpec {
        feature_names: vec!["f0".into(), "f1".into()],
        incident: ClassSpec {
            means: vec![1.0, 1.0],
            sds: vec![0.3, 0.3],
        },
        non_incident: ClassSpec {
            means: vec![-1.0, -1.0],
            sds: vec![0.3, 0.3],
        },
    };
    let (table, _) = generate_oracle_dataset(&spec, 100, 100, seed).unwrap();
    table
}

fn normalized(table: &SampleTable) -> SampleTable {
    let norm = Normalizer::fit(&table.features, NormalizerMode::ZScore).unwrap();
    let mut out = table.clone();
    out.features = norm.apply_matrix(&table.features);
    out.normalizer = Some(norm);
    out
}

#[test]
fn training_separates_the_separable() {
    let table = normalized(&separable_two_feature_table(5));
    let cfg = small_config(2, 8, 2, 1);
    let hyper = ClassifierHyper {
        epochs: 40,
        batch_size: 16,
        lr: 3e-3,
        seed: 7,
    };
    let (model, history) = train_classifier(&table, &cfg, &hyper).unwrap();
    assert_eq!(history.len(), 40);

    let scores = model.classify(&table.features).unwrap().values();
    let (_, auc) = roc_and_auc(&scores, &table.labels).unwrap();
    assert!(auc >= 0.99, "training AUC {auc}");

    // loss smoothed over 5-epoch windows is non-increasing
    let window: Vec<f64> = history
        .windows(5)
        .map(|w| w.iter().sum::<f64>() / 5.0)
        .collect();
    for pair in window.windows(2) {
        assert!(
            pair[1] <= pair[0] + 1e-9,
            "smoothed loss rose: {} -> {}",
            pair[0],
            pair[1]
        );
    }
}

#[test]
fn training_is_bitwise_deterministic() {
    let table = normalized(&separable_two_feature_table(6));
    let cfg = small_config(2, 8, 2, 1);
    let hyper = ClassifierHyper {
        epochs: 5,
        batch_size: 16,
        lr: 1e-3,
        seed: 42,
    };
    let (m1, h1) = train_classifier(&table, &cfg, &hyper).unwrap();
    let (m2, h2) = train_classifier(&table, &cfg, &hyper).unwrap();
    assert_eq!(h1, h2);
    for (a, b) in m1.parameters().iter().zip(m2.parameters().iter()) {
        let ab: Vec<u64> = a.values().iter().map(|v| v.to_bits()).collect();
        let bb: Vec<u64> = b.values().iter().map(|v| v.to_bits()).collect();
        assert_eq!(ab, bb);
    }
}

#[test]
fn single_class_training_set_is_a_config_error() {
    let mut table = separable_two_feature_table(8);
    table.labels = vec![1; table.n_rows()];
    let cfg = small_config(2, 8, 2, 1);
    assert!(train_classifier(&table, &cfg, &ClassifierHyper::default()).is_err());
}

// ---- checkpoint -----------------------------------------------------------------

#[test]
fn checkpoint_round_trips_bit_exactly() {
    let cfg = small_config(4, 8, 2, 2);
    let model = TransformerModel::new(cfg, 99).unwrap();
    let json = serde_json::to_string_pretty(&model).unwrap();
    let back: TransformerModel = serde_json::from_str(&json).unwrap();
    assert_eq!(back.config, model.config);
    assert_eq!(back.seed, model.seed);
    for (a, b) in model.parameters().iter().zip(back.parameters().iter()) {
        assert_eq!(
            a.values().iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
            b.values().iter().map(|v| v.to_bits()).collect::<Vec<_>>()
        );
        assert!(b.requires_grad());
    }
    assert_eq!(model.pe.values(), back.pe.values());

    // a second serialization is byte-identical
    let json2 = serde_json::to_string_pretty(&back).unwrap();
    assert_eq!(json, json2);
}

#[test]
fn classifier_scorer_applies_normalizer() {
    let table = separable_two_feature_table(10);
    let norm = Normalizer::fit(&table.features, NormalizerMode::ZScore).unwrap();
    let cfg = small_config(2, 8, 2, 1);
    let model = TransformerModel::new(cfg, 55).unwrap();
    let clf = Classifier {
        model: model.clone(),
        normalizer: Some(norm.clone()),
    };
    use tidgan_core::metrics::Scorer;
    let row = &table.features[0];
    let direct = model.classify(&[norm.apply_row(row)]).unwrap().values()[0];
    assert_eq!(clf.score(row), direct);
}
