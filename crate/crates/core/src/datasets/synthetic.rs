use rand::seq::SliceRandom;
use rand_distr::{Distribution, StandardNormal};

use super::{DatasetError, LabeledDataset, Result, SparseColumn, Task};
use crate::seed::rng_for;

/// Rows per query for synthetic multiclass data.
pub const SYNTHETIC_QUERY_SIZE: u64 = 10;

/// Class-conditional Gaussian data. Each class `c` gets a random unit
/// direction `u_c`; its rows are `separation * u_c + N(0, I)`. Labels are
/// balanced (a shuffled cycle over the classes). Multiclass data also gets
/// query ids grouping consecutive rows ten at a time.
pub fn make_synthetic(n: usize, m: usize, task: Task, separation: f64, seed: u64) -> Result<LabeledDataset> {
    if n < 2 || m < 1 {
        return Err(DatasetError::BadShape { n, m });
    }
    let classes = task.num_classes();
    let mut rng = rng_for(seed, &[0]);

    let directions: Vec<Vec<f64>> = (0..classes)
        .map(|_| {
            let v: Vec<f64> = (0..m).map(|_| StandardNormal.sample(&mut rng)).collect();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
            v.into_iter().map(|x| x / norm).collect()
        })
        .collect();

    let mut labels: Vec<u32> = (0..n).map(|i| (i % classes) as u32).collect();
    labels.shuffle(&mut rng);

    let mut columns = vec![SparseColumn::default(); m];
    for (r, &label) in labels.iter().enumerate() {
        let dir = &directions[label as usize];
        for (f, col) in columns.iter_mut().enumerate() {
            let noise: f64 = StandardNormal.sample(&mut rng);
            let v = separation * dir[f] + noise;
            if v != 0.0 {
                col.rows.push(r as u32);
                col.values.push(v);
            }
        }
    }

    let query_ids = match task {
        Task::Binary => None,
        Task::Multiclass(_) => Some((0..n as u64).map(|i| i / SYNTHETIC_QUERY_SIZE).collect()),
    };
    LabeledDataset::from_columns(n, columns, labels, query_ids, task)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bad_shapes() {
        assert!(matches!(make_synthetic(0, 3, Task::Binary, 1.0, 0), Err(DatasetError::BadShape { .. })));
        assert!(matches!(make_synthetic(10, 0, Task::Binary, 1.0, 0), Err(DatasetError::BadShape { .. })));
    }

    #[test]
    fn deterministic() {
        let a = make_synthetic(300, 6, Task::Multiclass(5), 2.0, 42).unwrap();
        let b = make_synthetic(300, 6, Task::Multiclass(5), 2.0, 42).unwrap();
        assert_eq!(a, b);
        let mut ta = Vec::new();
        let mut tb = Vec::new();
        crate::datasets::write_svmlight(&a, &mut ta).unwrap();
        crate::datasets::write_svmlight(&b, &mut tb).unwrap();
        assert_eq!(ta, tb);
        assert_eq!(a.query_ids().unwrap()[..11], [0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 1]);
    }

    #[test]
    fn balanced_labels() {
        let d = make_synthetic(1001, 2, Task::Binary, 0.0, 1).unwrap();
        let ones = d.labels().iter().filter(|&&l| l == 1).count();
        assert_eq!(ones, 500);
        assert!(d.query_ids().is_none());
    }
}
