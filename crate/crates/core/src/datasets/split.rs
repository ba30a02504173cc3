use std::collections::HashMap;

use rand::seq::SliceRandom;

use super::{DatasetError, LabeledDataset, Result};
use crate::seed::rng_for;

#[derive(Debug, Clone)]
pub struct SplitResult {
    pub train: LabeledDataset,
    pub holdout: LabeledDataset,
    /// Original row ids of `train` and `holdout`, ascending.
    pub train_rows: Vec<usize>,
    pub holdout_rows: Vec<usize>,
    pub seed: u64,
}

/// Stratified holdout split. Each class contributes
/// `round(fraction * count)` rows to the holdout. When the dataset carries
/// query ids, whole queries move together and are stratified on their
/// majority label (ties go to the lower label).
pub fn stratified_split(d: &LabeledDataset, fraction: f64, seed: u64) -> Result<SplitResult> {
    if !(0.0..1.0).contains(&fraction) {
        return Err(DatasetError::FractionOutOfRange(fraction));
    }
    let classes = d.task().num_classes();

    // Units are single rows, or the row groups of each query.
    let (units, unit_label): (Vec<Vec<usize>>, Vec<u32>) = match d.query_ids() {
        None => ((0..d.n_rows()).map(|r| vec![r]).collect(), d.labels().to_vec()),
        Some(qids) => {
            let mut order: Vec<u64> = Vec::new();
            let mut groups: HashMap<u64, Vec<usize>> = HashMap::new();
            for (r, &q) in qids.iter().enumerate() {
                groups
                    .entry(q)
                    .or_insert_with(|| {
                        order.push(q);
                        Vec::new()
                    })
                    .push(r);
            }
            let units: Vec<Vec<usize>> = order.iter().map(|q| groups.remove(q).unwrap()).collect();
            let labels = units
                .iter()
                .map(|rows| {
                    let mut counts = vec![0usize; classes];
                    for &r in rows {
                        counts[d.labels()[r] as usize] += 1;
                    }
                    // max_by_key keeps the last maximum; scan reversed to favour low labels
                    (0..classes).rev().max_by_key(|&c| counts[c]).unwrap() as u32
                })
                .collect();
            (units, labels)
        }
    };

    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); classes];
    for (u, &l) in unit_label.iter().enumerate() {
        by_class[l as usize].push(u);
    }

    let mut held = vec![false; d.n_rows()];
    for (c, members) in by_class.iter_mut().enumerate() {
        let take = (fraction * members.len() as f64).round() as usize;
        members.shuffle(&mut rng_for(seed, &[c as u64]));
        for &u in &members[..take] {
            for &r in &units[u] {
                held[r] = true;
            }
        }
    }

    let (holdout_rows, train_rows): (Vec<usize>, Vec<usize>) = (0..d.n_rows()).partition(|&r| held[r]);
    Ok(SplitResult {
        train: d.subset(&train_rows),
        holdout: d.subset(&holdout_rows),
        train_rows,
        holdout_rows,
        seed,
    })
}
