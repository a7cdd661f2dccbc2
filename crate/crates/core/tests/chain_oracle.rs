use learnability::dataset::{chain_form, gram_upper, moment_estimate, ImplicitGram, LabelKind, LabeledDataset};
use learnability::oracles::chain_sum_bruteforce;
use nalgebra::DMatrix;
use proptest::prelude::*;

fn dataset(n: usize, d: usize, values: &[f64], labels: &[f64]) -> LabeledDataset {
    LabeledDataset::new(values[..n * d].to_vec(), d, labels[..n].to_vec(), LabelKind::Real).unwrap()
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-10 * a.abs().max(b.abs()).max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn chain_matches_tuple_enumeration(
        n in 1usize..=12,
        d in 1usize..=8,
        k in 1usize..=4,
        values in prop::collection::vec(-2.0f64..2.0, 96),
        labels in prop::collection::vec(-2.0f64..2.0, 12),
    ) {
        let data = dataset(n, d, &values, &labels);
        let oracle = chain_sum_bruteforce(&data, k).unwrap().value;
        let dense = chain_form(&gram_upper(&data), data.labels(), k).unwrap();
        let implicit = chain_form(&ImplicitGram::new(&data), data.labels(), k).unwrap();
        prop_assert!(close(dense, oracle), "dense {dense} vs {oracle}");
        prop_assert!(close(implicit, oracle), "implicit {implicit} vs {oracle}");
    }

    #[test]
    fn chains_vanish_past_n(
        n in 1usize..=12,
        d in 1usize..=8,
        extra in 0usize..4,
        values in prop::collection::vec(-5.0f64..5.0, 96),
        labels in prop::collection::vec(-5.0f64..5.0, 12),
    ) {
        let data = dataset(n, d, &values, &labels);
        prop_assert_eq!(chain_form(&gram_upper(&data), data.labels(), n + extra).unwrap(), 0.0);
        prop_assert_eq!(chain_form(&ImplicitGram::new(&data), data.labels(), n + extra).unwrap(), 0.0);
    }
}

#[test]
fn gram_is_upper_part_of_dense_product() {
    let values: Vec<f64> = (0..50).map(|i| ((i * 37 % 23) as f64 - 11.0) / 7.0).collect();
    let data = LabeledDataset::new(values.clone(), 5, vec![1.0; 10], LabelKind::Real).unwrap();
    let x = DMatrix::from_row_slice(10, 5, &values);
    let full = &x * x.transpose();
    let g = gram_upper(&data);
    for i in 0..10 {
        for j in 0..10 {
            let expected = if i < j { full[(i, j)] } else { 0.0 };
            assert!((g.get(i, j) - expected).abs() < 1e-12);
        }
    }
}

#[test]
fn small_gram_examples() {
    let single = LabeledDataset::from_rows(&[vec![3.0, 4.0]], vec![1.0], LabelKind::Real).unwrap();
    assert_eq!(gram_upper(&single).as_slice(), &[0.0]);
    let pair = LabeledDataset::from_rows(&[vec![1.0, 0.0], vec![1.0, 1.0]], vec![1.0, 2.0], LabelKind::Real).unwrap();
    assert_eq!(gram_upper(&pair).as_slice(), &[0.0, 1.0, 0.0, 0.0]);
    assert_eq!(chain_form(&gram_upper(&pair), pair.labels(), 1).unwrap(), 2.0);
}

#[test]
fn third_moment_divides_tuple_sum() {
    let rows = vec![
        vec![1.0, 0.5, -1.0],
        vec![0.0, 2.0, 1.0],
        vec![-1.5, 1.0, 0.5],
        vec![2.0, -0.5, 0.0],
        vec![0.5, 0.5, 0.5],
        vec![-1.0, 0.0, 2.0],
    ];
    let labels = vec![1.0, -2.0, 0.5, 1.5, -1.0, 2.0];
    let data = LabeledDataset::from_rows(&rows, labels.clone(), LabelKind::Real).unwrap();
    let mut tuple_sum = 0.0;
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    for i in 0..6 {
        for j in i + 1..6 {
            for l in j + 1..6 {
                tuple_sum += labels[i] * dot(&rows[i], &rows[j]) * dot(&rows[j], &rows[l]) * labels[l];
            }
        }
    }
    let estimate = moment_estimate(&data, 3).unwrap();
    assert!((estimate.value - tuple_sum / 20.0).abs() < 1e-12);
    let zero = data.with_labels(vec![0.0; 6], LabelKind::Real).unwrap();
    for k in 2..=6 {
        assert_eq!(moment_estimate(&zero, k).unwrap().value, 0.0);
    }
}
