//! Gradient-boosted trees on a small four-class problem.
//!
//! Each class lives in one quadrant of the unit square, with some points
//! pushed across the border as label noise.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use triage::gbt::{predict_proba, train, FeatureMatrix, TrainConfig};
use triage::textprep::SparseVector;
use triage::SeverityLabel;

fn main() -> triage::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut rows = Vec::new();
    let mut y = Vec::new();
    for i in 0..400 {
        let c = i % 4;
        let (bx, by) = ((c % 2) as f64, (c / 2) as f64);
        let noise = if rng.gen_bool(0.1) { 0.6 } else { 0.0 };
        rows.push(vec![bx + rng.gen_range(0.0..1.0) - noise, by + rng.gen_range(0.0..1.0)]);
        y.push(SeverityLabel::from_index(c).unwrap());
    }
    let x = FeatureMatrix::from_dense(&rows)?;
    let cfg = TrainConfig {
        rounds: 40,
        max_depth: 3,
        ..TrainConfig::default()
    };
    let forest = train(&x, &y, &cfg)?;

    println!("round  train loss");
    for r in [0, 1, 2, 5, 10, 20, 40] {
        println!("{r:>5}  {:.4}", forest.loss_after(&x, &y, r));
    }

    let tree = &forest.trees[0][0];
    println!("\nfirst GREEN tree: depth {}, {} leaves, root split {:?}", tree.depth(), tree.n_leaves(), tree.root_split());

    for point in [[0.2, 0.3], [1.7, 0.4], [0.5, 1.5], [1.9, 1.9]] {
        let v = SparseVector {
            dim: 2,
            entries: point.iter().copied().enumerate().collect(),
        };
        let p = predict_proba(&forest, &v)?;
        let shown: Vec<String> = p.iter().map(|q| format!("{q:.2}")).collect();
        println!("{point:?} -> [{}]", shown.join(", "));
    }
    Ok(())
}
