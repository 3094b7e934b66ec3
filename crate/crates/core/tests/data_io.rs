use evt_kmeans::data::{add_uninformative, gen_synthetic_with_centers, load_csv, load_libsvm, save_csv, save_libsvm, standardize};
use evt_kmeans::{Dataset, Error, Matrix, SynthConfig};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Relabels to first-appearance order so partitions compare equal.
fn canonical(y: &[usize]) -> Vec<usize> {
    let mut seen = Vec::new();
    y.iter()
        .map(|l| match seen.iter().position(|s| s == l) {
            Some(i) => i,
            None => {
                seen.push(*l);
                seen.len() - 1
            }
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn libsvm_round_trip(
        rows in prop::collection::vec(prop::collection::vec(prop_oneof![Just(0.0f64), -1e3f64..1e3], 3), 1..30),
        labels in prop::collection::vec(0usize..4, 30),
    ) {
        let n = rows.len();
        let y = labels[..n].to_vec();
        let ds = Dataset::new(Matrix::from_rows(&rows).unwrap(), Some(y.clone()), "rt").unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rt.libsvm");
        save_libsvm(&ds, &path).unwrap();
        let back: Dataset<f64> = load_libsvm(&path).unwrap();
        prop_assert_eq!(&back.x, &ds.x);
        prop_assert_eq!(back.y.unwrap(), canonical(&y));
    }

    #[test]
    fn csv_round_trip(
        rows in prop::collection::vec(prop::collection::vec(-1e6f64..1e6, 4), 1..30),
        delim in prop_oneof![Just(b','), Just(b';'), Just(b'\t')],
    ) {
        let y: Vec<usize> = (0..rows.len()).map(|i| i % 3).collect();
        let ds = Dataset::new(Matrix::from_rows(&rows).unwrap(), Some(y.clone()), "rt").unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rt.csv");
        save_csv(&ds, &path, delim).unwrap();
        let back: Dataset<f64> = load_csv(&path, true, delim).unwrap();
        prop_assert_eq!(&back.x, &ds.x);
        prop_assert_eq!(back.y.unwrap(), canonical(&y));
    }
}

#[test]
fn malformed_files_report_location() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.libsvm");
    std::fs::write(&p, "1 1:0.5\n2 3:1 3:2\n").unwrap();
    match load_libsvm::<f64>(&p) {
        Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
        other => panic!("{other:?}"),
    }
    let p = dir.path().join("bad.csv");
    std::fs::write(&p, "1,2,0\n3,4,1\n5,1\n").unwrap();
    match load_csv::<f64>(&p, true, b',') {
        Err(Error::Parse { line, msg, .. }) => {
            assert_eq!(line, 3);
            assert!(msg.contains("row 3"));
        }
        other => panic!("{other:?}"),
    }
    assert!(matches!(load_csv::<f64>(&dir.path().join("missing.csv"), true, b','), Err(Error::Io { .. })));
}

#[test]
fn synthetic_generator_shapes_and_spread() {
    let cfg = SynthConfig { n: 4001, k: 4, d: 3, sigma: 0.2, seed: 9 };
    let (ds, centres) = gen_synthetic_with_centers::<f64>(&cfg).unwrap();
    assert_eq!((ds.n(), ds.d(), centres.rows()), (4001, 3, 4));
    let y = ds.y.as_ref().unwrap();
    let mut counts = [0usize; 4];
    y.iter().for_each(|&l| counts[l] += 1);
    assert!(counts.iter().all(|&c| c == 1000 || c == 1001));
    assert!(centres.as_slice().iter().all(|v| (-1.0..=1.0).contains(v)));
    // pooled within-cluster deviation close to sigma
    let mut ss = 0.0;
    for i in 0..ds.n() {
        for (a, b) in ds.x.row(i).iter().zip(centres.row(y[i])) {
            ss += (a - b) * (a - b);
        }
    }
    let sd = (ss / (ds.n() * ds.d()) as f64).sqrt();
    assert!((sd - 0.2).abs() < 0.01, "{sd}");
    let (again, _) = gen_synthetic_with_centers::<f64>(&cfg).unwrap();
    assert_eq!(again, ds);
}

#[test]
fn uninformative_columns_and_standardisation() {
    let cfg = SynthConfig { n: 500, k: 3, d: 2, sigma: 0.3, seed: 1 };
    let (ds, _) = gen_synthetic_with_centers::<f64>(&cfg).unwrap();
    let wide = add_uninformative(&ds, 5, &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
    assert_eq!(wide.d(), 7);
    for i in 0..ds.n() {
        assert_eq!(&wide.x.row(i)[..2], ds.x.row(i));
    }
    let z = standardize(&wide, true);
    for c in 0..z.d() {
        let col: Vec<f64> = (0..z.n()).map(|i| z.x.get(i, c)).collect();
        let m = col.iter().sum::<f64>() / col.len() as f64;
        let v = col.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (col.len() - 1) as f64;
        assert!(m.abs() < 1e-12 && (v - 1.0).abs() < 1e-12);
    }
}
