use std::time::Instant;

use polsar_spl::dataset::Split;
use polsar_spl::experiment::{dataset_for_seed, DatasetSource};
use polsar_spl::features::extract_grid;
use polsar_spl::metrics::{confusion_matrix, oa_aa, EvalScope};
use polsar_spl::scene::Layout;
use polsar_spl::spl::Regularizer;
use polsar_spl::trainer::{
    predict_features, train_multiclass_features, train_plain_svm_features, TrainerConfig,
};

fn main() {
    let source = DatasetSource::Synthetic {
        width: 64,
        height: 64,
        classes: 5,
        layout: Layout::Stripes,
        looks: 4,
        similarity: 0.6,
        train_fraction: 0.02,
        block_size: 3,
    };
    let t0 = Instant::now();
    let mut wins_svm = 0;
    let mut wins_spl = 0;
    let mut sums = [0.0f64; 3];
    for seed in 1..=10u64 {
        let ds = dataset_for_seed(&source, seed).unwrap();
        let grid = extract_grid(&ds).unwrap();
        let cfg = TrainerConfig { seed, ..TrainerConfig::default() };
        let splits = ds.splits();
        let truth = ds.truth_map();
        let eval = |map: &polsar_spl::dataset::LabelMap| {
            let cm = confusion_matrix(map, &truth, &splits, EvalScope::Test).unwrap();
            oa_aa(&cm).unwrap().oa
        };
        let (m_svm, _) = train_plain_svm_features(&grid, &cfg).unwrap();
        let oa_svm = eval(&predict_features(&m_svm, &grid).unwrap());
        let cfg_spl = TrainerConfig { regularizer: Regularizer::Linear, ..cfg.clone() };
        let (m_spl, tr) = train_multiclass_features(&grid, &cfg_spl).unwrap();
        let oa_spl = eval(&predict_features(&m_spl, &grid).unwrap());
        let iters: usize = tr.iter().map(|t| t.records.len()).max().unwrap();
        let cfg_nc = TrainerConfig { regularizer: Regularizer::Neighborhood, ..cfg.clone() };
        let (m_nc, trnc) = train_multiclass_features(&grid, &cfg_nc).unwrap();
        let oa_nc = eval(&predict_features(&m_nc, &grid).unwrap());
        let iters_nc: usize = trnc.iter().map(|t| t.records.len()).max().unwrap();
        let conv = trnc.iter().all(|t| t.outer_converged);
        println!(
            "seed {seed}: svm {oa_svm:.4}  spl {oa_spl:.4} ({iters} it)  splnc {oa_nc:.4} ({iters_nc} it, conv {conv})"
        );
        if oa_nc >= oa_svm { wins_svm += 1; }
        if oa_nc >= oa_spl { wins_spl += 1; }
        sums[0] += oa_svm; sums[1] += oa_spl; sums[2] += oa_nc;
        let n = ds.pixels.iter().filter(|p| p.split == Split::Train).count();
        if seed == 1 { println!("  train pixels: {n}"); }
    }
    println!(
        "means: svm {:.4} spl {:.4} splnc {:.4}; splnc>=svm in {wins_svm}/10, splnc>=spl in {wins_spl}/10; elapsed {:.1}s",
        sums[0] / 10.0, sums[1] / 10.0, sums[2] / 10.0, t0.elapsed().as_secs_f64()
    );
}
