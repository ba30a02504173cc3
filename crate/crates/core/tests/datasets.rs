use boosthpo::datasets::{class_frequencies, load_svmlight, make_synthetic, stratified_split, write_svmlight_file, LoadOptions, Task};
use boosthpo::gbdt::{train, HyperParams, Objective};

#[test]
fn gzip_round_trip_preserves_training() {
    let d = make_synthetic(300, 6, Task::Multiclass(3), 1.0, 4).unwrap();
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("train.svm.gz");
    write_svmlight_file(&d, &path).unwrap();
    let back = load_svmlight(&path, LoadOptions { num_features: Some(6), task: Some(d.task()) }).unwrap();
    assert_eq!(back.labels(), d.labels());
    assert_eq!(back.query_ids(), d.query_ids());
    assert_eq!(back.sparse_rows(), d.sparse_rows());

    let hp = HyperParams { iterations: 5, objective: Objective::MulticlassSoftmax(3), ..HyperParams::default() };
    assert_eq!(train(&d, &hp, None).unwrap().0.to_json(), train(&back, &hp, None).unwrap().0.to_json());
}

#[test]
fn split_keeps_queries_and_proportions() {
    let d = make_synthetic(1000, 4, Task::Multiclass(5), 1.0, 9).unwrap();
    let s = stratified_split(&d, 0.25, 1).unwrap();
    let q = d.query_ids().unwrap();
    let held: std::collections::HashSet<u64> = s.holdout_rows.iter().map(|&r| q[r]).collect();
    assert!(s.train_rows.iter().all(|&r| !held.contains(&q[r])));
    assert_eq!(s.train.n_rows() + s.holdout.n_rows(), 1000);

    let b = make_synthetic(999, 4, Task::Binary, 1.0, 9).unwrap();
    let s = stratified_split(&b, 0.25, 2).unwrap();
    let total = class_frequencies(&b).unwrap();
    for c in 0..2u32 {
        let count = b.labels().iter().filter(|&&y| y == c).count() as f64;
        let held = s.holdout.labels().iter().filter(|&&y| y == c).count() as f64;
        assert!((held / count - 0.25).abs() <= 1.0 / count);
    }
    assert!((total.iter().sum::<f64>() - 1.0).abs() < 1e-12);
}
