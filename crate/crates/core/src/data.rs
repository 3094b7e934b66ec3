//! Datasets: synthetic Gaussian blobs, uninformative-feature augmentation,
//! LIBSVM and delimited-text I/O, and per-feature scaling.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<T> {
    pub x: Matrix<T>,
    /// Ground-truth class per sample, remapped to `0..classes`.
    pub y: Option<Vec<usize>>,
    pub name: String,
}

impl<T: Scalar> Dataset<T> {
    pub fn new(x: Matrix<T>, y: Option<Vec<usize>>, name: impl Into<String>) -> Result<Self> {
        if x.rows() == 0 || x.cols() == 0 {
            return Err(Error::InvalidInput(format!("dataset must be non-empty, got {}x{}", x.rows(), x.cols())));
        }
        if !x.is_finite() {
            return Err(Error::InvalidInput("dataset contains non-finite values".into()));
        }
        if let Some(y) = &y {
            if y.len() != x.rows() {
                return Err(Error::DimensionMismatch { expected: x.rows(), got: y.len() });
            }
        }
        Ok(Self { x, y, name: name.into() })
    }

    pub fn n(&self) -> usize {
        self.x.rows()
    }

    pub fn d(&self) -> usize {
        self.x.cols()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub n: usize,
    pub k: usize,
    pub d: usize,
    /// Per-coordinate standard deviation of every blob.
    pub sigma: f64,
    pub seed: u64,
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k < 1 || self.n < self.k {
            return Err(Error::InvalidInput(format!("need n >= k >= 1, got n={} k={}", self.n, self.k)));
        }
        if self.d < 1 {
            return Err(Error::InvalidInput("d must be at least 1".into()));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::InvalidInput(format!("sigma must be positive, got {}", self.sigma)));
        }
        Ok(())
    }
}

/// Gaussian blobs around `k` centres drawn uniformly from `[-1, 1]^d`.
pub fn gen_synthetic<T: Scalar>(cfg: &SynthConfig) -> Result<Dataset<T>> {
    gen_synthetic_with_centers(cfg).map(|(ds, _)| ds)
}

/// Like [`gen_synthetic`], also returning the generating centres.
///
/// Cluster `j` receives `n / k` samples, plus one when `j < n % k`. Samples are
/// stored cluster by cluster. The centres and the unit normal draws depend only on
/// the seed, so changing `sigma` rescales the same blobs.
pub fn gen_synthetic_with_centers<T: Scalar>(cfg: &SynthConfig) -> Result<(Dataset<T>, Matrix<T>)> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut centers = Matrix::zeros(cfg.k, cfg.d);
    for j in 0..cfg.k {
        for c in centers.row_mut(j) {
            *c = T::of(rng.random_range(-1.0..=1.0));
        }
    }
    let base = cfg.n / cfg.k;
    let extra = cfg.n % cfg.k;
    let mut x = Vec::with_capacity(cfg.n * cfg.d);
    let mut y = Vec::with_capacity(cfg.n);
    for j in 0..cfg.k {
        let count = base + usize::from(j < extra);
        for _ in 0..count {
            for &c in centers.row(j) {
                let z: f64 = rng.sample(StandardNormal);
                x.push(c + T::of(cfg.sigma * z));
            }
            y.push(j);
        }
    }
    let name = format!("synth_n{}_k{}_d{}_s{}", cfg.n, cfg.k, cfg.d, cfg.sigma);
    let ds = Dataset::new(Matrix::from_vec(cfg.n, cfg.d, x)?, Some(y), name)?;
    Ok((ds, centers))
}

/// Appends `extra_d` independent standard-normal columns.
pub fn add_uninformative<T: Scalar, R: Rng + ?Sized>(ds: &Dataset<T>, extra_d: usize, rng: &mut R) -> Result<Dataset<T>> {
    if extra_d == 0 {
        return Ok(ds.clone());
    }
    let mut noise = Matrix::zeros(ds.n(), extra_d);
    for i in 0..ds.n() {
        for v in noise.row_mut(i) {
            let z: f64 = rng.sample(StandardNormal);
            *v = T::of(z);
        }
    }
    Dataset::new(ds.x.hstack(&noise)?, ds.y.clone(), format!("{}+{}u", ds.name, extra_d))
}

/// Divides every column by its sample standard deviation; constant columns pass through.
/// With `center` the column mean is subtracted first.
pub fn standardize<T: Scalar>(ds: &Dataset<T>, center: bool) -> Dataset<T> {
    let (n, d) = (ds.n(), ds.d());
    let mut x = ds.x.clone();
    if n < 2 {
        return ds.clone();
    }
    for c in 0..d {
        let mean = (0..n).map(|i| x.get(i, c)).sum::<T>() / T::count(n);
        let var = (0..n).map(|i| (x.get(i, c) - mean).powi(2)).sum::<T>() / T::count(n - 1);
        let std = var.sqrt();
        let shift = if center { mean } else { T::zero() };
        let scale = if std > T::zero() { std } else { T::one() };
        for i in 0..n {
            x.set(i, c, (x.get(i, c) - shift) / scale);
        }
    }
    Dataset { x, y: ds.y.clone(), name: ds.name.clone() }
}

/// Maps raw label tokens to `0..classes` in order of first appearance.
#[derive(Default)]
struct LabelMap(HashMap<String, usize>);

impl LabelMap {
    fn id(&mut self, token: &str) -> usize {
        // numerically equal labels ("+1", "1", "1.0") share a class
        let key = match token.parse::<f64>() {
            Ok(v) => format!("{}", v + 0.0),
            Err(_) => token.to_string(),
        };
        let next = self.0.len();
        *self.0.entry(key).or_insert(next)
    }
}

fn stem(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io { path: path.to_path_buf(), source }
}

/// Reads the sparse `<label> <index>:<value> ...` format with 1-based indices.
pub fn load_libsvm<T: Scalar>(path: &Path) -> Result<Dataset<T>> {
    let file = File::open(path).map_err(io_err(path))?;
    let parse_err = |line: usize, msg: String| Error::Parse { path: path.to_path_buf(), line, msg };

    let mut labels = LabelMap::default();
    let mut rows: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut y = Vec::new();
    let mut dim = 0usize;
    for (lineno, line) in BufReader::new(file).lines().enumerate() {
        let lineno = lineno + 1;
        let line = line.map_err(io_err(path))?;
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut tokens = line.split_whitespace();
        let label = tokens.next().expect("non-empty line has a token");
        if label.contains(':') {
            return Err(parse_err(lineno, format!("missing label before `{label}`")));
        }
        let mut row = Vec::new();
        for tok in tokens {
            let (idx, val) = tok
                .split_once(':')
                .ok_or_else(|| parse_err(lineno, format!("expected index:value, got `{tok}`")))?;
            let idx: usize = idx.parse().map_err(|_| parse_err(lineno, format!("bad feature index `{idx}`")))?;
            if idx == 0 {
                return Err(parse_err(lineno, "feature indices are 1-based".into()));
            }
            let val: f64 = val.parse().map_err(|_| parse_err(lineno, format!("bad feature value `{val}`")))?;
            if !val.is_finite() {
                return Err(parse_err(lineno, format!("non-finite feature value `{val}`")));
            }
            row.push((idx - 1, val));
        }
        row.sort_by_key(|&(i, _)| i);
        if row.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(parse_err(lineno, "duplicate feature index".into()));
        }
        if let Some(&(last, _)) = row.last() {
            dim = dim.max(last + 1);
        }
        y.push(labels.id(label));
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::InvalidInput(format!("{} contains no samples", path.display())));
    }
    let mut x = Matrix::zeros(rows.len(), dim.max(1));
    for (i, row) in rows.iter().enumerate() {
        for &(j, v) in row {
            x.set(i, j, T::of(v));
        }
    }
    Dataset::new(x, Some(y), stem(path))
}

/// Writes LIBSVM format. Zero entries are omitted except in the last column,
/// which is always written so the dimension survives a round trip.
pub fn save_libsvm<T: Scalar>(ds: &Dataset<T>, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    let d = ds.d();
    for i in 0..ds.n() {
        let label = ds.y.as_ref().map_or(0, |y| y[i]);
        write!(w, "{label}").map_err(io_err(path))?;
        for (j, &v) in ds.x.row(i).iter().enumerate() {
            if v != T::zero() || j + 1 == d {
                write!(w, " {}:{}", j + 1, v).map_err(io_err(path))?;
            }
        }
        writeln!(w).map_err(io_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

/// Reads a delimited table; with `has_labels` the last column is the class label.
pub fn load_csv<T: Scalar>(path: &Path, has_labels: bool, delimiter: u8) -> Result<Dataset<T>> {
    let file = File::open(path).map_err(io_err(path))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .delimiter(delimiter)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(file);
    let parse_err = |line: usize, msg: String| Error::Parse { path: path.to_path_buf(), line, msg };

    let mut labels = LabelMap::default();
    let mut x: Vec<T> = Vec::new();
    let mut y = Vec::new();
    let mut width: Option<usize> = None;
    let mut rows = 0usize;
    for (r, record) in reader.records().enumerate() {
        let row_no = r + 1;
        let record = record.map_err(|e| parse_err(row_no, e.to_string()))?;
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        match width {
            None => width = Some(record.len()),
            Some(w) if w != record.len() => {
                return Err(parse_err(row_no, format!("row {row_no} has {} fields, expected {w}", record.len())));
            }
            _ => {}
        }
        let n_feat = if has_labels { record.len() - 1 } else { record.len() };
        if n_feat == 0 {
            return Err(parse_err(row_no, "no feature columns".into()));
        }
        for field in record.iter().take(n_feat) {
            let v: f64 = field.parse().map_err(|_| parse_err(row_no, format!("bad number `{field}`")))?;
            x.push(T::of(v));
        }
        if has_labels {
            y.push(labels.id(&record[n_feat]));
        }
        rows += 1;
    }
    let Some(width) = width else {
        return Err(Error::InvalidInput(format!("{} contains no samples", path.display())));
    };
    let d = if has_labels { width - 1 } else { width };
    let x = Matrix::from_vec(rows, d, x)?;
    Dataset::new(x, has_labels.then_some(y), stem(path))
}

/// Writes one row per sample, with the label as trailing column when present.
pub fn save_csv<T: Scalar>(ds: &Dataset<T>, path: &Path, delimiter: u8) -> Result<()> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = csv::WriterBuilder::new().delimiter(delimiter).from_writer(BufWriter::new(file));
    let to_io = |e: csv::Error| Error::Io { path: path.to_path_buf(), source: e.into() };
    for i in 0..ds.n() {
        let mut fields: Vec<String> = ds.x.row(i).iter().map(|v| v.to_string()).collect();
        if let Some(y) = &ds.y {
            fields.push(y[i].to_string());
        }
        w.write_record(&fields).map_err(to_io)?;
    }
    w.flush().map_err(io_err(path))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_tmp(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    fn col_std(ds: &Dataset<f64>, c: usize) -> f64 {
        let n = ds.n() as f64;
        let m = (0..ds.n()).map(|i| ds.x.get(i, c)).sum::<f64>() / n;
        ((0..ds.n()).map(|i| (ds.x.get(i, c) - m).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    }

    #[test]
    fn synthetic_counts_follow_remainder_policy() {
        let cfg = SynthConfig { n: 1000, k: 3, d: 2, sigma: 0.2, seed: 1 };
        let ds: Dataset<f64> = gen_synthetic(&cfg).unwrap();
        let mut counts = [0usize; 3];
        ds.y.as_ref().unwrap().iter().for_each(|&l| counts[l] += 1);
        assert_eq!(counts, [334, 333, 333]);
        assert_eq!(ds.n(), 1000);
        assert_eq!(ds, gen_synthetic(&cfg).unwrap());
    }

    #[test]
    fn synthetic_centers_in_cube_and_tiny_sigma() {
        let cfg = SynthConfig { n: 90, k: 4, d: 3, sigma: 1e-12, seed: 3 };
        let (ds, centers) = gen_synthetic_with_centers::<f64>(&cfg).unwrap();
        assert!(centers.as_slice().iter().all(|c| (-1.0..=1.0).contains(c)));
        let y = ds.y.as_ref().unwrap();
        for i in 0..ds.n() {
            for (a, b) in ds.x.row(i).iter().zip(centers.row(y[i])) {
                assert!((a - b).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn synth_rejects_bad_config() {
        assert!(gen_synthetic::<f64>(&SynthConfig { n: 2, k: 3, d: 2, sigma: 0.1, seed: 0 }).is_err());
        assert!(gen_synthetic::<f64>(&SynthConfig { n: 9, k: 3, d: 2, sigma: 0.0, seed: 0 }).is_err());
    }

    #[test]
    fn uninformative_columns() {
        let ds: Dataset<f64> = gen_synthetic(&SynthConfig { n: 4000, k: 5, d: 50, sigma: 0.1, seed: 2 }).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        assert_eq!(add_uninformative(&ds, 0, &mut rng).unwrap(), ds);
        let aug = add_uninformative(&ds, 10, &mut rng).unwrap();
        assert_eq!(aug.d(), 60);
        assert_eq!(aug.y, ds.y);
        for i in [0, 1234, 3999] {
            assert_eq!(&aug.x.row(i)[..50], ds.x.row(i));
        }
        let m = (0..aug.n()).map(|i| aug.x.get(i, 55)).sum::<f64>() / aug.n() as f64;
        assert!(m.abs() < 0.05);
    }

    #[test]
    fn standardize_scales_without_centering() {
        let x = Matrix::from_rows(&[[1.0, 5.0], [3.0, 5.0], [5.0, 5.0], [7.0, 5.0]]).unwrap();
        let ds = Dataset::new(x, None, "t").unwrap();
        let s = standardize(&ds, false);
        assert!((col_std(&s, 0) - 1.0).abs() < 1e-12);
        assert_eq!(s.x.get(0, 1), 5.0);
        assert!(s.x.get(0, 0) > 0.0);
        let ss = standardize(&s, false);
        for (a, b) in s.x.as_slice().iter().zip(ss.x.as_slice()) {
            assert!((a - b).abs() < 1e-12);
        }
        let c = standardize(&ds, true);
        assert!(c.x.get(0, 0) < 0.0);
    }

    #[test]
    fn libsvm_parsing() {
        let f = write_tmp("1 1:0.5 3:-2\n-1 2:1 1:1\n+1 2:4\n");
        let ds: Dataset<f64> = load_libsvm(f.path()).unwrap();
        assert_eq!(ds.x.row(0), &[0.5, 0.0, -2.0]);
        assert_eq!(ds.x.row(1), &[1.0, 1.0, 0.0]);
        assert_eq!(ds.y.as_ref().unwrap(), &[0, 1, 0]);
    }

    #[test]
    fn libsvm_errors_carry_line_numbers() {
        let f = write_tmp("1 1:0.5\n1 x:2\n");
        match load_libsvm::<f64>(f.path()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        let f = write_tmp("1 0:3\n");
        assert!(matches!(load_libsvm::<f64>(f.path()), Err(Error::Parse { line: 1, .. })));
        let f = write_tmp("");
        assert!(matches!(load_libsvm::<f64>(f.path()), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn csv_parsing() {
        let f = write_tmp("0,1,2\n3,4,5\n");
        let ds: Dataset<f64> = load_csv(f.path(), false, b',').unwrap();
        assert_eq!((ds.n(), ds.d()), (2, 3));
        assert!(ds.y.is_none());
        let ds: Dataset<f64> = load_csv(f.path(), true, b',').unwrap();
        assert_eq!((ds.n(), ds.d()), (2, 2));
        assert_eq!(ds.y.unwrap(), vec![0, 1]);

        let f = write_tmp("0;1\r\n2;3\r\n");
        let ds: Dataset<f64> = load_csv(f.path(), false, b';').unwrap();
        assert_eq!(ds.x.row(1), &[2.0, 3.0]);
    }

    #[test]
    fn csv_ragged_row_names_row() {
        let f = write_tmp("0,1,2\n3,4\n");
        match load_csv::<f64>(f.path(), false, b',') {
            Err(e @ Error::Parse { line: 2, .. }) => assert!(e.to_string().contains("row 2")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn missing_file_is_io_error() {
        assert!(matches!(load_csv::<f64>(Path::new("/nonexistent/x.csv"), false, b','), Err(Error::Io { .. })));
    }
}
