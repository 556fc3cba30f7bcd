mod common;

use std::io::Write;

use prindt_core::ctree::{grow, TreeParams};
use prindt_core::data::{load_csv, read_dataset, Class, Dataset, Frame};
use prindt_core::evaluate::{
    balanced_accuracy, histogram, overall_accuracy, predict_all, prindt_accuracy, Prediction,
};
use proptest::prelude::*;

fn round_trip(ds: &Dataset) -> Dataset {
    let mut buf = Vec::new();
    ds.write_csv(&mut buf).unwrap();
    read_dataset(buf.as_slice(), &ds.reload_options()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn csv_round_trip(seed in any::<u64>(), n in 60usize..300) {
        let ds = common::random_dataset(seed, n, 0.3, 0.5);
        prop_assert_eq!(round_trip(&ds), ds);
    }

    #[test]
    fn duplicating_large_rows_keeps_balanced_accuracy(seed in any::<u64>(), n in 60usize..200) {
        let ds = common::random_dataset(seed, n, 0.3, 0.7);
        let rows: Vec<usize> = (0..n).collect();
        let tree = grow(&ds, &rows, &TreeParams { alpha: 0.05, ..TreeParams::default() }).unwrap();
        let preds = predict_all(&tree, &ds);
        let doubled = double_large(&ds);
        let doubled_preds = predict_all(&tree, &doubled);
        let ba = balanced_accuracy(&preds, &ds).unwrap();
        let ba2 = balanced_accuracy(&doubled_preds, &doubled).unwrap();
        prop_assert!((ba - ba2).abs() <= 1e-12);
        // overall accuracy moves toward the large-class accuracy unless both class accuracies agree
        let acc = |d: &Dataset, p: &[Prediction], c: Class| {
            let mine: Vec<_> = p.iter().filter(|x| d.class_of(x.row_index) == c).collect();
            mine.iter().filter(|x| x.predicted == c).count() as f64 / mine.len() as f64
        };
        let (s, l) = (acc(&ds, &preds, Class::Small), acc(&ds, &preds, Class::Large));
        let o1 = overall_accuracy(&preds, &ds).unwrap();
        let o2 = overall_accuracy(&doubled_preds, &doubled).unwrap();
        if (s - l).abs() > 1e-12 {
            prop_assert!((o1 - o2).abs() > 1e-12);
            prop_assert!((o2 - l).abs() < (o1 - l).abs());
        }
    }

    #[test]
    fn balanced_equals_overall_for_equal_classes(flags in prop::collection::vec(any::<bool>(), 40)) {
        let ds = common::noise_dataset(5, 20, 20);
        let preds: Vec<Prediction> = flags
            .iter()
            .enumerate()
            .map(|(row_index, &f)| Prediction {
                row_index,
                predicted: if f { Class::Small } else { Class::Large },
            })
            .collect();
        let o = overall_accuracy(&preds, &ds).unwrap();
        let b = balanced_accuracy(&preds, &ds).unwrap();
        prop_assert!((o - b).abs() <= 1e-12);
    }

    #[test]
    fn histogram_counts_sum_to_n(values in prop::collection::vec(0.0f64..1.0, 1..500), bins in 1usize..40) {
        let h = histogram(&values, bins).unwrap();
        prop_assert_eq!(h.bins.len(), bins);
        prop_assert_eq!(h.bins.iter().map(|b| b.count).sum::<usize>(), values.len());
        prop_assert!(h.min <= h.median && h.median <= h.max);
    }
}

/// Same rows with every large-class row appended a second time.
fn double_large(ds: &Dataset) -> Dataset {
    let mut order: Vec<usize> = (0..ds.n_rows()).collect();
    order.extend(ds.rows_of(Class::Large));
    let columns = ds
        .frame()
        .columns()
        .iter()
        .map(|c| match c {
            prindt_core::data::Column::Categorical(v) => {
                prindt_core::data::Column::Categorical(order.iter().map(|&r| v[r]).collect())
            }
            prindt_core::data::Column::Numeric(v) => {
                prindt_core::data::Column::Numeric(order.iter().map(|&r| v[r]).collect())
            }
        })
        .collect();
    let frame = Frame::new(ds.schema().to_vec(), columns).unwrap();
    let classes = order.iter().map(|&r| ds.class_of(r)).collect();
    Dataset::new(frame, ds.class_spec().clone(), classes).unwrap()
}

#[test]
fn prindt_accuracy_is_balanced_accuracy_over_all_rows() {
    let ds = common::random_dataset(11, 400, 0.2, 0.8);
    let tree = grow(&ds, &(0..200).collect::<Vec<_>>(), &TreeParams::default()).unwrap();
    let all = predict_all(&tree, &ds);
    assert_eq!(all.len(), 400);
    assert_eq!(prindt_accuracy(&tree, &ds).unwrap(), balanced_accuracy(&all, &ds).unwrap());
}

#[test]
fn loading_is_deterministic() {
    let ds = common::random_dataset(3, 150, 0.3, 0.5);
    let mut file = tempfile::NamedTempFile::new().unwrap();
    ds.write_csv(&mut file).unwrap();
    file.flush().unwrap();
    let opts = ds.reload_options();
    let a = load_csv(file.path(), &opts).unwrap();
    let b = load_csv(file.path(), &opts).unwrap();
    assert_eq!(a, b);
    assert_eq!(a, ds);
}
