//! Synthetic operator-recovery dataset: Gaussian inputs pushed through a
//! ground-truth random HSS operator.

use crate::dataset::{Dataset, DatasetMeta, GridMeta, GENERATOR_VERSION};
use crate::error::Result;
use hsspde_core::{seed, ClusterTree, Hss};
use hsspde_neural::Tensor;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use std::collections::BTreeMap;

/// Draws the ground truth `A` from the documented random initialization,
/// samples `n_train + n_test` i.i.d. standard-Gaussian inputs `b_i`, and sets
/// the targets to `u_i = A b_i` (bitwise the structured matvec). Returns the
/// dataset together with the generating operator.
pub fn gen_hss_recovery(
    d: usize,
    levels: usize,
    rank: usize,
    n_train: usize,
    n_test: usize,
    master_seed: u64,
) -> Result<(Dataset, Hss)> {
    let tree = ClusterTree::balanced(d, levels)?;
    let truth = Hss::random(tree, rank, seed::derive(master_seed, 0), 1.0)?;
    let n = n_train + n_test;
    let mut inputs = Tensor::zeros(&[n, d]);
    let mut targets = Tensor::zeros(&[n, d]);
    for b in 0..n {
        let mut rng = ChaCha8Rng::seed_from_u64(seed::derive(master_seed, 1 + b as u64));
        let x: Vec<f64> = (0..d)
            .map(|_| StandardNormal.sample(&mut rng))
            .collect();
        let y = truth.matvec(&x)?;
        inputs.chunk_mut(n, b).copy_from_slice(&x);
        targets.chunk_mut(n, b).copy_from_slice(&y);
    }
    let ds = Dataset {
        inputs,
        targets,
        meta: DatasetMeta {
            equation: "hss_recovery".to_string(),
            n_train,
            n_test,
            seed: master_seed,
            generator_version: GENERATOR_VERSION.to_string(),
            grid: GridMeta {
                gen_extent: vec![d],
                out_extent: vec![d],
                domain: vec![(0.0, 1.0)],
                spacing: vec![1.0 / d as f64],
            },
            constants: BTreeMap::from([
                ("levels".to_string(), levels as f64),
                ("rank".to_string(), rank as f64),
            ]),
            notes: BTreeMap::new(),
        },
    };
    Ok((ds, truth))
}
