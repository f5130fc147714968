//! Exploratory: classifier competence + DR-vs-balance-ratio trend timing.

use tidgan_core::data::{
    generate_oracle_dataset, split, Normalizer, NormalizerMode, OracleSpec, SampleTable, SplitSpec,
};
use tidgan_core::gan::{augment_to_ratio, train_gan, BalanceRatio, GanConfig, LossMode};
use tidgan_core::metrics::evaluate;
use tidgan_core::rng::rng_from_seed;
use tidgan_core::transformer::{train_classifier, Classifier, ClassifierHyper, TransformerConfig};

fn train_and_eval(
    table: &SampleTable,
    seed: u64,
    epochs: usize,
) -> (Option<f64>, Option<f64>) {
    let spec = SplitSpec {
        train_fraction: 0.6,
        stratified: true,
        seed,
    };
    let (train, test) = split(table, &spec).unwrap();
    let normalizer = Normalizer::fit(&train.features, NormalizerMode::ZScore).unwrap();
    let mut train_norm = train.clone();
    train_norm.features = normalizer.apply_matrix(&train.features);
    let cfg = TransformerConfig::with_defaults(table.n_features());
    let hyper = ClassifierHyper {
        epochs,
        batch_size: 32,
        lr: 1e-3,
        seed,
    };
    let (model, _) = train_classifier(&train_norm, &cfg, &hyper).unwrap();
    let clf = Classifier {
        model,
        normalizer: Some(normalizer),
    };
    let report = evaluate(&clf, &test, 0.5).unwrap();
    (report.dr, report.auc)
}

#[test]
#[ignore]
fn explore_classifier_competence() {
    let start = std::time::Instant::now();
    let (table, _) = generate_oracle_dataset(&OracleSpec::default_profile(), 1600, 7240, 7).unwrap();
    let (dr, auc) = train_and_eval(&table, 7, 30);
    println!(
        "competence: dr={:?} auc={:?} in {:.1}s",
        dr,
        auc,
        start.elapsed().as_secs_f64()
    );
}

#[test]
#[ignore]
fn explore_balance_trend() {
    let start = std::time::Instant::now();
    let ratios: [Option<BalanceRatio>; 4] = [
        None,
        Some("1:4".parse().unwrap()),
        Some("2:3".parse().unwrap()),
        Some("1:1".parse().unwrap()),
    ];
    let mut sums = [0.0f64; 4];
    for seed in 1..=3u64 {
        let (table, truth) =
            generate_oracle_dataset(&OracleSpec::overlap_profile(), 400, 3600, seed).unwrap();
        let gan_cfg = GanConfig {
            epochs: 700,
            d_steps_per_g_step: 2,
            lr: 3e-4,
            adam_beta1: 0.5,
            loss_mode: LossMode::Paper,
            seed,
            ..GanConfig::default()
        };
        let gan = train_gan(&table.incident_features(), gan_cfg).unwrap();
        // GAN fidelity per seed: KS of generated vs a fresh incident draw
        {
            use tidgan_core::data::sample_gaussian_matrix;
            use tidgan_core::diagnostics::ks_statistic;
            use tidgan_core::gan::generate;
            let fresh = sample_gaussian_matrix(
                &truth.spec.incident.means,
                &truth.spec.incident.sds,
                1000,
                &mut rng_from_seed(seed + 900),
            );
            let fake = generate(&gan, 1000, &mut rng_from_seed(seed + 901)).unwrap();
            let ks: Vec<f64> = (0..7)
                .map(|j| {
                    let a: Vec<f64> = fresh.iter().map(|r| r[j]).collect();
                    let b: Vec<f64> = fake.iter().map(|r| r[j]).collect();
                    ks_statistic(&a, &b).unwrap()
                })
                .collect();
            println!(
                "seed {seed} GAN max-KS {:.3} [{:.0}s]",
                ks.iter().cloned().fold(0.0f64, f64::max),
                start.elapsed().as_secs_f64()
            );
        }
        for (i, ratio) in ratios.iter().enumerate() {
            let augmented = match ratio {
                None => table.clone(),
                Some(r) => {
                    augment_to_ratio(&table, &gan, *r, &mut rng_from_seed(seed * 100 + i as u64))
                        .unwrap()
                        .0
                }
            };
            let (dr, auc) = train_and_eval(&augmented, seed, 25);
            println!(
                "seed {seed} ratio {:?}: dr={:.4} auc={:.4} [{:.0}s]",
                ratio.map(|r| r.to_string()),
                dr.unwrap(),
                auc.unwrap(),
                start.elapsed().as_secs_f64()
            );
            sums[i] += dr.unwrap();
        }
    }
    let means: Vec<f64> = sums.iter().map(|s| s / 3.0).collect();
    println!("mean DR by ratio {{none, 1:4, 2:3, 1:1}}: {means:?}");
    println!("total {:.0}s", start.elapsed().as_secs_f64());
}
