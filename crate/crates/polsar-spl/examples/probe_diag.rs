use polsar_spl::dataset::Split;
use polsar_spl::experiment::{dataset_for_seed, DatasetSource};
use polsar_spl::features::{extract_grid, FeatureStats};
use polsar_spl::metrics::{confusion_matrix, oa_aa, EvalScope};
use polsar_spl::scene::Layout;
use polsar_spl::spl::Regularizer;
use polsar_spl::trainer::{
    predict_features, train_multiclass_features, train_plain_svm_features, TrainerConfig,
};
use polsar_spl::baselines::{wishart_centers, wishart_classify_map};

fn main() {
    let source = DatasetSource::Synthetic {
        width: 64, height: 64, classes: 5, layout: Layout::Stripes,
        looks: 4, similarity: 0.6, train_fraction: 0.02, block_size: 3,
    };
    let seed = 1;
    let ds = dataset_for_seed(&source, seed).unwrap();
    let grid = extract_grid(&ds).unwrap();
    let truth = ds.truth_map();
    let splits = ds.splits();
    let eval = |map: &polsar_spl::dataset::LabelMap| {
        let cm = confusion_matrix(map, &truth, &splits, EvalScope::Test).unwrap();
        oa_aa(&cm).unwrap().oa
    };

    // Wishart reference
    let centers = wishart_centers(&ds).unwrap();
    println!("wishart OA: {:.4}", eval(&wishart_classify_map(&ds, &centers)));

    // typical pairwise distance among z-scored training features
    let train: Vec<_> = grid.samples.iter().filter(|s| s.split == Split::Train).collect();
    let feats: Vec<_> = train.iter().map(|s| s.features).collect();
    let stats = FeatureStats::fit(&feats).unwrap();
    let zs: Vec<Vec<f64>> = train.iter().map(|s| stats.apply(&s.features).0.to_vec()).collect();
    let mut d2s: Vec<f64> = Vec::new();
    for i in 0..zs.len() {
        for j in (i + 1)..zs.len() {
            let d2: f64 = zs[i].iter().zip(&zs[j]).map(|(a, b)| (a - b) * (a - b)).sum();
            d2s.push(d2);
        }
    }
    d2s.sort_by(|a, b| a.partial_cmp(b).unwrap());
    println!("pairwise d^2 quartiles: {:.3} {:.3} {:.3}", d2s[d2s.len()/4], d2s[d2s.len()/2], d2s[3*d2s.len()/4]);

    for gamma in [1.0, 0.2, 0.1, 0.05] {
        let cfg = TrainerConfig { seed, gamma, ..TrainerConfig::default() };
        let (m, _) = train_plain_svm_features(&grid, &cfg).unwrap();
        let map = predict_features(&m, &grid).unwrap();
        let mut tr_ok = 0; let mut tr_n = 0;
        for (i, px) in ds.pixels.iter().enumerate() {
            if px.split == Split::Train { tr_n += 1; if map.labels[i] == px.label { tr_ok += 1; } }
        }
        let cfg_nc = TrainerConfig { regularizer: Regularizer::Neighborhood, ..cfg.clone() };
        let (mnc, trs) = train_multiclass_features(&grid, &cfg_nc).unwrap();
        let oanc = eval(&predict_features(&mnc, &grid).unwrap());
        let t0 = &trs[0];
        println!(
            "gamma {gamma}: svm test OA {:.4} (train {:.3}); splnc OA {:.4}, class1 iters {}, first-iter mean_v {:.3}, last mean_v {:.3}, lambda0->{:.2e}",
            eval(&map), tr_ok as f64 / tr_n as f64, oanc,
            t0.records.len(), t0.records[0].mean_weight,
            t0.records.last().unwrap().mean_weight, t0.records.last().unwrap().lambda
        );
    }
}
