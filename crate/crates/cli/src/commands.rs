use std::path::Path;

use evt_kmeans::data::{add_uninformative, gen_synthetic, load_csv, load_libsvm, save_csv, save_libsvm, standardize};
use evt_kmeans::metrics::qq_for_tail;
use evt_kmeans::{Dataset64, Error, SynthConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::bench::{bench_once, bench_repeats, write_json, write_table, BenchResult, HEADER};
use crate::error::{CliError, Result};
use crate::options::{
    delimiter_byte, required, Algorithm, ClusterArgs, DataOpts, FitdiagArgs, Format, RobustArgs, SweepArgs,
    SweepParam, SynthArgs,
};

fn format_for(path: &Path, explicit: Option<Format>) -> Format {
    explicit.unwrap_or_else(|| match path.extension().and_then(|e| e.to_str()) {
        Some("libsvm" | "svm") => Format::Libsvm,
        _ => Format::Csv,
    })
}

/// Loads `--input`, standardizing when asked.
pub fn load_dataset(opts: &DataOpts) -> Result<Dataset64> {
    let path = required(opts.input.as_deref(), "input")?;
    let loaded = match format_for(path, opts.format) {
        Format::Csv => load_csv(path, !opts.unlabeled, opts.delimiter_byte()?),
        Format::Libsvm => load_libsvm(path),
    };
    let ds = match loaded {
        Err(Error::InvalidInput(msg)) => return Err(CliError::Input(msg)),
        other => other?,
    };
    if opts.standardize {
        eprintln!("standardizing {} columns of {} (centered: {})", ds.d(), ds.name, opts.center);
        return Ok(standardize(&ds, opts.center));
    }
    Ok(ds)
}

pub fn synth(args: &SynthArgs) -> Result<()> {
    let cfg = SynthConfig {
        n: required(args.n, "n")?,
        k: required(args.k, "k")?,
        d: required(args.d, "d")?,
        sigma: required(args.sigma, "sigma")?,
        seed: args.seed.unwrap_or(0),
    };
    let out = required(args.output.as_deref(), "output")?;
    let ds: Dataset64 = gen_synthetic(&cfg)?;
    match format_for(out, args.format) {
        Format::Csv => save_csv(&ds, out, delimiter_byte(args.delimiter)?)?,
        Format::Libsvm => save_libsvm(&ds, out)?,
    }
    Ok(())
}

#[derive(Serialize)]
struct ClusterSummary<'a> {
    algorithm: &'a str,
    dataset: &'a str,
    repeats: usize,
    mean: &'a BenchResult,
    runs: &'a [BenchResult],
}

pub fn cluster(args: &ClusterArgs) -> Result<()> {
    let data = load_dataset(&args.data)?;
    let algorithm = args.run.algorithm()?;
    let cfg = args.run.run_config()?;
    cfg.validate(data.n())?;
    let repeats = args.run.repeats()?;

    let rows = bench_repeats(&data, algorithm, &cfg, repeats)?;
    let mean = BenchResult::mean(&rows);
    let mut table: Vec<Vec<String>> = rows.iter().map(BenchResult::fields).collect();
    table.push(mean.fields());
    write_table(args.out.output.as_deref(), &HEADER, &table, args.data.delimiter_byte()?)?;
    if let Some(path) = &args.out.summary {
        let summary = ClusterSummary { algorithm: algorithm.name(), dataset: &data.name, repeats, mean: &mean, runs: &rows };
        write_json(path, &summary)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct SweepSummary<'a> {
    algorithm: &'a str,
    dataset: &'a str,
    param: &'a str,
    points: Vec<SweepPoint<'a>>,
}

#[derive(Serialize)]
struct SweepPoint<'a> {
    value: f64,
    mean: &'a BenchResult,
}

pub fn sweep(args: &SweepArgs) -> Result<()> {
    let data = load_dataset(&args.data)?;
    let algorithm = args.run.algorithm()?;
    let base = args.run.run_config()?;
    let repeats = args.run.repeats()?;
    let param = required(args.param, "param")?;
    let mut values = required(args.values.clone(), "values")?;
    if values.is_empty() {
        return Err(CliError::Usage("--values needs at least one value".into()));
    }
    values.sort_by(f64::total_cmp);

    let mut means = Vec::with_capacity(values.len());
    for &v in &values {
        let mut cfg = base.clone();
        match param {
            SweepParam::BlockSize => {
                if v < 1.0 || v.fract() != 0.0 {
                    return Err(CliError::Usage(format!("block size must be a positive integer, got {v}")));
                }
                cfg.bmm.block_size = v as usize;
            }
            SweepParam::Alpha => cfg.pot.alpha = v,
        }
        cfg.validate(data.n())?;
        means.push(BenchResult::mean(&bench_repeats(&data, algorithm, &cfg, repeats)?));
    }

    let mut header = vec!["param", "value"];
    header.extend(HEADER);
    let table: Vec<Vec<String>> = values
        .iter()
        .zip(&means)
        .map(|(v, m)| {
            let mut row = vec![param.name().to_string(), v.to_string()];
            row.extend(m.fields());
            row
        })
        .collect();
    write_table(args.out.output.as_deref(), &header, &table, args.data.delimiter_byte()?)?;
    if let Some(path) = &args.out.summary {
        let points = values.iter().zip(&means).map(|(&value, mean)| SweepPoint { value, mean }).collect();
        write_json(path, &SweepSummary { algorithm: algorithm.name(), dataset: &data.name, param: param.name(), points })?;
    }
    Ok(())
}

#[derive(Serialize)]
struct RobustRow<'a> {
    extra_dims: usize,
    mean: &'a BenchResult,
}

pub fn robust(args: &RobustArgs) -> Result<()> {
    let base_cfg = args.run.run_config()?;
    let seed = base_cfg.seed;
    let synth = SynthConfig {
        n: required(args.n, "n")?,
        k: base_cfg.k,
        d: required(args.d, "d")?,
        sigma: required(args.sigma, "sigma")?,
        seed: args.data_seed.unwrap_or(seed),
    };
    let extra = required(args.extra_dims.clone(), "extra-dims")?;
    let algorithms = args.algorithms.clone().unwrap_or_else(|| vec![Algorithm::Kmeans, Algorithm::Gev, Algorithm::Gpd]);
    if extra.is_empty() || algorithms.is_empty() {
        return Err(CliError::Usage("--extra-dims and --algorithms need at least one entry".into()));
    }
    let repeats = args.run.repeats()?;
    let base: Dataset64 = gen_synthetic(&synth)?;

    let mut header = vec!["extra_dims"];
    header.extend(HEADER);
    let mut table = Vec::new();
    let mut rows = Vec::new();
    for &e in &extra {
        let mut rng = ChaCha8Rng::seed_from_u64(synth.seed);
        rng.set_stream(1);
        let mut ds = add_uninformative(&base, e, &mut rng)?;
        if args.standardize {
            ds = standardize(&ds, false);
        }
        base_cfg.validate(ds.n())?;
        for &a in &algorithms {
            let mean = BenchResult::mean(&bench_repeats(&ds, a, &base_cfg, repeats)?);
            let mut row = vec![e.to_string()];
            row.extend(mean.fields());
            table.push(row);
            rows.push((e, mean));
        }
    }
    write_table(args.out.output.as_deref(), &header, &table, b',')?;
    if let Some(path) = &args.out.summary {
        let summary: Vec<RobustRow> = rows.iter().map(|(e, m)| RobustRow { extra_dims: *e, mean: m }).collect();
        write_json(path, &summary)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct FitdiagSummary<'a> {
    algorithm: &'a str,
    dataset: &'a str,
    cluster: usize,
    points: usize,
    correlation: f64,
}

/// Writes the Q-Q points and returns their correlation.
pub fn fitdiag(args: &FitdiagArgs) -> Result<f64> {
    let data = load_dataset(&args.data)?;
    let algorithm = args.run.algorithm()?;
    if algorithm == Algorithm::Kmeans {
        return Err(CliError::Usage("fitdiag needs a tail model; use --algorithm gev or gpd".into()));
    }
    let cfg = args.run.run_config()?;
    cfg.validate(data.n())?;
    let index = required(args.cluster, "cluster")?;
    if index >= cfg.k {
        return Err(CliError::Usage(format!("cluster index {index} out of range for k={}", cfg.k)));
    }
    let (_, out) = bench_once(&data, algorithm, &cfg)?;
    let qq = qq_for_tail(&out.model.tails[index]).map_err(|e| match e {
        Error::InvalidInput(msg) => Error::Numerical(format!("cluster {index}: {msg}")),
        other => other,
    })?;

    let table: Vec<Vec<String>> = qq.points.iter().map(|(e, t)| vec![e.to_string(), t.to_string()]).collect();
    write_table(args.out.output.as_deref(), &["empirical", "theoretical"], &table, args.data.delimiter_byte()?)?;
    if let Some(path) = &args.out.summary {
        let summary = FitdiagSummary {
            algorithm: algorithm.name(),
            dataset: &data.name,
            cluster: index,
            points: qq.points.len(),
            correlation: qq.correlation,
        };
        write_json(path, &summary)?;
    }
    Ok(qq.correlation)
}
