use rayon::prelude::*;

use super::bins::BinnedMatrix;
use super::ensemble::{margins_to_proba, Ensemble};
use super::goss::{goss_sample, RowSample};
use super::objective::compute_gradients;
use super::tree::{grow_tree, Tree};
use super::{Boosting, GbdtError, HyperParams, Objective};
use crate::datasets::{class_frequencies, LabeledDataset};
use crate::metrics::{evaluate, Metric};
use crate::seed::rng_for;

const STREAM_TREE: u64 = 1;
const STREAM_GOSS: u64 = 2;

fn logit(p: f64) -> f64 {
    let p = p.clamp(1e-15, 1.0 - 1e-15);
    (p / (1.0 - p)).ln()
}

/// Starting margins: prior log-odds for logistic objectives, 0 for softmax.
fn base_margin(d: &LabeledDataset, objective: Objective) -> Result<Vec<f64>, GbdtError> {
    let freq = class_frequencies(d)?;
    Ok(match objective {
        Objective::BinaryLogistic => vec![logit(freq[1])],
        Objective::OneVsAll(_) => freq.iter().map(|&p| logit(p)).collect(),
        Objective::MulticlassSoftmax(c) => vec![0.0; c],
    })
}

/// Trains an ensemble. With `eval`, the metric on that dataset is recorded
/// after every iteration.
pub fn train(
    d: &LabeledDataset,
    hp: &HyperParams,
    eval: Option<(&LabeledDataset, Metric)>,
) -> Result<(Ensemble, Vec<f64>), GbdtError> {
    hp.validate()?;
    if d.n_rows() == 0 {
        return Err(GbdtError::EmptyDataset);
    }
    if hp.objective.num_classes() != d.task().num_classes() {
        return Err(GbdtError::ObjectiveMismatch { objective: hp.objective, task: d.task() });
    }
    let objective = hp.objective;
    let k = objective.num_outputs();
    let n = d.n_rows();
    let binned = BinnedMatrix::build(d, hp.num_bins);
    let base = base_margin(d, objective)?;

    let mut margins: Vec<f64> = (0..n).flat_map(|_| base.iter().copied()).collect();
    let mut trees: Vec<Vec<Tree>> = vec![Vec::with_capacity(hp.iterations); k];

    let eval_state = eval.map(|(ed, metric)| {
        let m = ed.n_features();
        let dense = ed.to_dense_row_major();
        let rows: Vec<Vec<f64>> = (0..ed.n_rows()).map(|r| dense[r * m..(r + 1) * m].to_vec()).collect();
        let margins: Vec<f64> = (0..ed.n_rows()).flat_map(|_| base.iter().copied()).collect();
        (ed, metric, rows, margins)
    });
    let mut eval_state = eval_state;
    let mut eval_log = Vec::new();

    for iter in 0..hp.iterations {
        let grads = compute_gradients(&margins, d.labels(), objective)?;
        let sample = match hp.boosting {
            Boosting::Gbdt => RowSample::all(n),
            Boosting::Goss { top_rate, other_rate } => {
                let abs: Vec<f64> = (0..n).map(|r| grads[r * k..(r + 1) * k].iter().map(|p| p.g.abs()).sum()).collect();
                goss_sample(&abs, top_rate, other_rate, &mut rng_for(hp.seed, &[STREAM_GOSS, iter as u64]))?
            }
        };

        let new_trees: Vec<Tree> = (0..k)
            .into_par_iter()
            .map(|c| {
                let class_grads: Vec<_> = (0..n).map(|r| grads[r * k + c]).collect();
                let mut rng = rng_for(hp.seed, &[STREAM_TREE, iter as u64, c as u64]);
                grow_tree(&binned, &class_grads, &sample, hp, &mut rng)
            })
            .collect();

        for (c, tree) in new_trees.into_iter().enumerate() {
            for r in 0..n {
                margins[r * k + c] += tree.predict_binned(&binned, r);
            }
            if let Some((_, _, rows, em)) = eval_state.as_mut() {
                for (r, row) in rows.iter().enumerate() {
                    em[r * k + c] += tree.predict_raw(row);
                }
            }
            trees[c].push(tree);
        }

        if let Some((ed, metric, _, em)) = eval_state.as_ref() {
            let probs = margins_matrix_to_proba(objective, em);
            eval_log.push(evaluate(*metric, ed, &probs)?);
        }
    }

    let ensemble = Ensemble {
        objective,
        num_features: d.n_features(),
        base_margin: base,
        boundaries: binned.all_boundaries().to_vec(),
        trees,
    };
    Ok((ensemble, eval_log))
}

pub(crate) fn margins_matrix_to_proba(objective: Objective, margins: &[f64]) -> Vec<Vec<f64>> {
    let k = objective.num_outputs();
    margins
        .chunks(k)
        .map(|m| {
            let mut p = vec![0.0; objective.num_classes()];
            margins_to_proba(objective, m, &mut p);
            p
        })
        .collect()
}
