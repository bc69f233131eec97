use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ml::{self, Dataset, TrainConfig};
use crate::rng::seeded;

/// Shuffled `(train, test)` row indices. The train side gets
/// `round(train_fraction · n)` rows, kept within `1..n`.
pub fn split_indices(n: usize, train_fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::invalid(format!("train fraction {train_fraction} outside (0, 1)")));
    }
    if n < 2 {
        return Err(Error::invalid(format!("cannot split {n} rows")));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut seeded(seed));
    let n_train = ((train_fraction * n as f64).round() as usize).clamp(1, n - 1);
    let test = idx.split_off(n_train);
    Ok((idx, test))
}

pub fn train_test_split(ds: &Dataset, train_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    let (tr, te) = split_indices(ds.n_rows(), train_fraction, seed)?;
    Ok((ds.select_rows(&tr), ds.select_rows(&te)))
}

/// Test-fold indices after one seeded shuffle. The first `n % k` folds
/// take one extra row.
pub fn kfold_indices(n: usize, k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if k < 2 || k > n {
        return Err(Error::invalid(format!("need 2 <= k <= n, got k={k}, n={n}")));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut seeded(seed));
    let (base, extra) = (n / k, n % k);
    let mut folds = Vec::with_capacity(k);
    let mut start = 0;
    for f in 0..k {
        let len = base + usize::from(f < extra);
        folds.push(idx[start..start + len].to_vec());
        start += len;
    }
    Ok(folds)
}

/// `(train, test)` datasets for each fold.
pub fn kfold(ds: &Dataset, k: usize, seed: u64) -> Result<Vec<(Dataset, Dataset)>> {
    let folds = kfold_indices(ds.n_rows(), k, seed)?;
    Ok(folds
        .iter()
        .map(|test| {
            let mut in_test = vec![false; ds.n_rows()];
            test.iter().for_each(|&i| in_test[i] = true);
            let train: Vec<usize> = (0..ds.n_rows()).filter(|&i| !in_test[i]).collect();
            (ds.select_rows(&train), ds.select_rows(test))
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvResult {
    pub fold_accuracies: Vec<f64>,
    pub mean_accuracy: f64,
}

/// Class accuracy per fold. Regressors are fitted on the class index and
/// their rounded output is scored, so every algorithm shares one metric.
/// Folds train in parallel; each uses `config` unchanged.
pub fn cross_validate(config: &TrainConfig, ds: &Dataset, k: usize, seed: u64) -> Result<CvResult> {
    let ds = ds
        .class_only()
        .ok_or_else(|| Error::invalid("cross-validation needs class labels"))?;
    let folds = kfold(&ds, k, seed)?;
    let fold_accuracies = folds
        .par_iter()
        .map(|(train, test)| {
            let model = ml::train(config, train)?;
            let pred = model
                .predict_dataset(test)?
                .into_iter()
                .map(|p| p.class().expect("class-target model"))
                .collect::<Vec<_>>();
            Ok(ml::accuracy(&pred, test.y_class().expect("class labels")))
        })
        .collect::<Result<Vec<f64>>>()?;
    let mean_accuracy = fold_accuracies.iter().sum::<f64>() / fold_accuracies.len() as f64;
    Ok(CvResult {
        fold_accuracies,
        mean_accuracy,
    })
}
