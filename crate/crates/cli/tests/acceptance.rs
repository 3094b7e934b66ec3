//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails. Criteria run one after another so wall-clock
//! bounds and timing ratios are not disturbed by other tests.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use evt_kmeans::data::{add_uninformative, gen_synthetic, gen_synthetic_with_centers, standardize};
use evt_kmeans::dist::XI_EPS;
use evt_kmeans::metrics::{acc, ari, nmi, qq_for_tail, silhouette};
use evt_kmeans::tail::nearest;
use evt_kmeans::{
    fit_gev, fit_gpd, lloyd_kmeans, run, Dataset64, FitOptions, GevParams, GpdParams, Init, Kind, RunConfig,
    SynthConfig, TailDistribution,
};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEEDS: u64 = 10;

type Criterion = (&'static str, fn() -> Verdict);

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict { pass, detail: detail.into() }
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len().is_multiple_of(2) { 0.5 * (v[m - 1] + v[m]) } else { v[m] }
}

fn synth(n: usize, k: usize, d: usize, sigma: f64, seed: u64) -> Dataset64 {
    gen_synthetic(&SynthConfig { n, k, d, sigma, seed }).unwrap()
}

fn truth(ds: &Dataset64) -> &[usize] {
    ds.y.as_deref().unwrap()
}

fn mle_recovery_gpd() -> Verdict {
    let start = Instant::now();
    let truth = GpdParams::new(0.0, 1.0, 0.2).unwrap();
    let (mut sig, mut xi) = (Vec::new(), Vec::new());
    for seed in 0..SEEDS {
        let y = truth.sample(20_000, &mut ChaCha8Rng::seed_from_u64(seed));
        let p = fit_gpd(&y, &FitOptions::default()).unwrap().params;
        sig.push(p.sigma());
        xi.push(p.xi());
    }
    let elapsed = start.elapsed();
    let (s, x) = (median(sig), median(xi));
    verdict(
        (s - 1.0).abs() <= 0.05 && (x - 0.2).abs() <= 0.05 && elapsed < Duration::from_secs(5),
        format!("median sigma={s:.4} xi={x:.4} in {:.2}s (tol 0.05, < 5s)", elapsed.as_secs_f64()),
    )
}

fn mle_recovery_gev() -> Verdict {
    let truth = GevParams::new(0.0, 1.0, 0.2).unwrap();
    let (mut mu, mut sig, mut xi) = (Vec::new(), Vec::new(), Vec::new());
    for seed in 0..SEEDS {
        let m = truth.sample(20_000, &mut ChaCha8Rng::seed_from_u64(seed));
        let p = fit_gev(&m, &FitOptions::default()).unwrap().params;
        mu.push(p.mu());
        sig.push(p.sigma());
        xi.push(p.xi());
    }
    let (m, s, x) = (median(mu), median(sig), median(xi));
    verdict(
        m.abs() <= 0.05 && (s - 1.0).abs() <= 0.05 && (x - 0.2).abs() <= 0.05,
        format!("median mu={m:.4} sigma={s:.4} xi={x:.4} (tol 0.05)"),
    )
}

fn distribution_identities() -> Verdict {
    let mut worst_cont = 0.0f64;
    for xi in [XI_EPS / 10.0, -XI_EPS / 10.0, 1e-7, -1e-7] {
        let (gpd, gev) = (GpdParams::new(0.0, 1.0, xi).unwrap(), GevParams::new(0.0, 1.0, xi).unwrap());
        for i in 0..=400 {
            let x = -4.0 + 0.025 * i as f64;
            let exp = if x < 0.0 { 0.0 } else { 1.0 - (-x).exp() };
            worst_cont = worst_cont.max((gpd.cdf(x) - exp).abs());
            worst_cont = worst_cont.max((gev.cdf(x) - (-(-x).exp()).exp()).abs());
        }
    }
    let mut worst_rt = 0.0f64;
    let mut exact = true;
    for &(mu, sigma, xi) in &[(0.0, 1.0, 0.2), (1.0, 2.0, -0.5), (-2.0, 0.3, 0.0), (0.5, 1.5, 0.9), (3.0, 0.7, -0.9)] {
        let (gpd, gev) = (GpdParams::new(mu, sigma, xi).unwrap(), GevParams::new(mu, sigma, xi).unwrap());
        for i in 1..100 {
            let q = i as f64 / 100.0;
            worst_rt = worst_rt.max((gpd.cdf(gpd.quantile(q).unwrap()) - q).abs());
            worst_rt = worst_rt.max((gev.cdf(gev.quantile(q).unwrap()) - q).abs());
        }
        exact &= gev.cdf(mu) == (-1.0f64).exp() && gpd.cdf(mu) == 0.0;
    }
    verdict(
        worst_cont <= 1e-6 && worst_rt <= 1e-10 && exact,
        format!("continuity err {worst_cont:.2e} (<= 1e-6), round trip err {worst_rt:.2e} (<= 1e-10), location identities exact: {exact}"),
    )
}

fn ideal_ari(cfg: &SynthConfig) -> f64 {
    let (ds, centres) = gen_synthetic_with_centers::<f64>(cfg).unwrap();
    let ideal: Vec<usize> = ds.x.iter_rows().map(|x| nearest(x, &centres)).collect();
    ari(truth(&ds), &ideal).unwrap()
}

fn clustering_parity() -> Verdict {
    let start = Instant::now();
    // one dataset, ten algorithm seeds; the dataset is the first generator seed
    // whose nearest-true-centre labelling is essentially perfect
    let data_seed = (0..)
        .find(|&s| ideal_ari(&SynthConfig { n: 1000, k: 3, d: 2, sigma: 0.2, seed: s }) >= 0.99)
        .unwrap();
    let ds = synth(1000, 3, 2, 0.2, data_seed);
    let mut parts = Vec::new();
    let mut pass = true;
    for kind in [Kind::Plain, Kind::Gev, Kind::Gpd] {
        let aris: Vec<f64> = (0..SEEDS)
            .map(|s| {
                let out = run(&ds, &RunConfig { seed: s, ..RunConfig::new(3) }, kind).unwrap();
                ari(truth(&ds), &out.labels).unwrap()
            })
            .collect();
        let m = median(aris);
        pass &= m >= 0.95;
        parts.push(format!("{kind:?}={m:.3}"));
    }
    let elapsed = start.elapsed();
    pass &= elapsed < Duration::from_secs(30);
    verdict(pass, format!("data seed {data_seed}, median ARI {} (>= 0.95) in {:.1}s (< 30s)", parts.join(" "), elapsed.as_secs_f64()))
}

fn degradation_trend() -> Verdict {
    let sigmas = [0.1, 0.2, 0.3, 0.4];
    let mut pass = true;
    let mut parts = Vec::new();
    for kind in [Kind::Plain, Kind::Gev, Kind::Gpd] {
        let medians: Vec<f64> = sigmas
            .iter()
            .map(|&sigma| {
                median(
                    (0..SEEDS)
                        .map(|s| {
                            let ds = synth(1000, 4, 2, sigma, s);
                            let out = run(&ds, &RunConfig { seed: s, ..RunConfig::new(4) }, kind).unwrap();
                            ari(truth(&ds), &out.labels).unwrap()
                        })
                        .collect(),
                )
            })
            .collect();
        pass &= medians.windows(2).all(|w| w[1] <= w[0] + 0.02);
        parts.push(format!("{kind:?}={:.3?}", medians));
    }
    verdict(pass, format!("median ARI over sigma {sigmas:?}: {} (slack 0.02)", parts.join(" ")))
}

fn uninformative_robustness() -> Verdict {
    let start = Instant::now();
    let sigma = 0.2;
    let mean_acc = |extra: usize| {
        (0..SEEDS)
            .map(|s| {
                let base = synth(1000, 10, 10, sigma, s);
                let mut rng = ChaCha8Rng::seed_from_u64(s);
                rng.set_stream(1);
                // every feature scaled to unit variance, as for any dataset before clustering
                let ds = standardize(&add_uninformative(&base, extra, &mut rng).unwrap(), false);
                let out = run(&ds, &RunConfig { seed: s, ..RunConfig::new(10) }, Kind::Gpd).unwrap();
                acc(truth(&ds), &out.labels).unwrap()
            })
            .sum::<f64>()
            / SEEDS as f64
    };
    let (base, wide) = (mean_acc(0), mean_acc(100));
    let elapsed = start.elapsed();
    verdict(
        wide >= base - 0.05 && elapsed < Duration::from_secs(300),
        format!("GPD mean ACC +0 dims {base:.3}, +100 dims {wide:.3} (need >= {:.3}) in {:.0}s", base - 0.05, elapsed.as_secs_f64()),
    )
}

fn qq_quality() -> Verdict {
    let ds = synth(1000, 4, 2, 0.3, 0);
    let mut parts = Vec::new();
    let mut pass = true;
    for kind in [Kind::Gev, Kind::Gpd] {
        let out = run(&ds, &RunConfig { seed: 0, ..RunConfig::new(4) }, kind).unwrap();
        let r = qq_for_tail(&out.model.tails[0]).map(|q| q.correlation).unwrap_or(f64::NAN);
        pass &= r >= 0.98;
        parts.push(format!("{kind:?} r={r:.4}"));
    }
    verdict(pass, format!("cluster 0: {} (>= 0.98)", parts.join(", ")))
}

fn lloyd_monotone() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut violations = 0;
    for t in 0..100u64 {
        let k = rng.random_range(2..=6);
        let ds = synth(rng.random_range(50..400), k, rng.random_range(1..=5), rng.random_range(0.05..0.5), t);
        let init = if t % 2 == 0 { Init::Random } else { Init::KMeansPlusPlus };
        let out = lloyd_kmeans(&ds, &RunConfig { seed: t, init, ..RunConfig::new(k) }).unwrap();
        violations += out.objective_trace.windows(2).filter(|w| w[1] > w[0]).count();
    }
    verdict(violations == 0, format!("{violations} increases over 100 instances"))
}

fn brute_acc(t: &[usize], p: &[usize]) -> f64 {
    const PERMS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    PERMS.iter().map(|m| t.iter().zip(p).filter(|&(&a, &b)| m[b] == a).count()).max().unwrap() as f64 / t.len() as f64
}

fn brute_ari(t: &[usize], p: &[usize]) -> f64 {
    let n = t.len();
    let (mut both, mut st, mut sp, mut pairs) = (0.0, 0.0, 0.0, 0.0);
    for i in 0..n {
        for j in i + 1..n {
            pairs += 1.0;
            let (a, b) = (t[i] == t[j], p[i] == p[j]);
            st += f64::from(u8::from(a));
            sp += f64::from(u8::from(b));
            both += f64::from(u8::from(a && b));
        }
    }
    if pairs == 0.0 {
        return 1.0;
    }
    let expected = st * sp / pairs;
    let max = 0.5 * (st + sp);
    if max == expected { 1.0 } else { (both - expected) / (max - expected) }
}

fn brute_nmi(t: &[usize], p: &[usize]) -> f64 {
    let n = t.len() as f64;
    let mut joint = [[0usize; 3]; 3];
    t.iter().zip(p).for_each(|(&a, &b)| joint[a][b] += 1);
    let h = |c: &mut dyn Iterator<Item = usize>| -> f64 {
        c.filter(|&v| v > 0).map(|v| v as f64 / n).map(|q| -q * q.ln()).sum()
    };
    let ht = h(&mut (0..3).map(|a| joint[a].iter().sum()));
    let hp = h(&mut (0..3).map(|b| (0..3).map(|a| joint[a][b]).sum()));
    let hj = h(&mut joint.iter().flatten().copied());
    let norm = 0.5 * (ht + hp);
    if norm <= 0.0 { 1.0 } else { ((ht + hp - hj) / norm).clamp(0.0, 1.0) }
}

fn labeling(mut code: usize, n: usize) -> Vec<usize> {
    (0..n)
        .map(|_| {
            let l = code % 3;
            code /= 3;
            l
        })
        .collect()
}

fn metric_oracles() -> Verdict {
    let mut worst = 0.0f64;
    let mut check = |t: &[usize], p: &[usize]| {
        worst = worst
            .max((acc(t, p).unwrap() - brute_acc(t, p)).abs())
            .max((ari(t, p).unwrap() - brute_ari(t, p)).abs())
            .max((nmi(t, p).unwrap() - brute_nmi(t, p)).abs());
    };
    let mut pairs = 0usize;
    // every pair of labelings up to n = 6, every truth labeling with a seeded partner beyond
    for n in 1..=6 {
        let total = 3usize.pow(n as u32);
        for a in 0..total {
            for b in 0..total {
                check(&labeling(a, n), &labeling(b, n));
                pairs += 1;
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for n in 7..=12 {
        for a in 0..3usize.pow(n as u32) {
            let p: Vec<usize> = (0..n).map(|_| rng.random_range(0..3)).collect();
            check(&labeling(a, n), &p);
            pairs += 1;
        }
    }

    let ds = synth(120, 4, 3, 0.3, 1);
    let pred: Vec<usize> = (0..120).map(|_| rng.random_range(0..4)).collect();
    let t = truth(&ds);
    let base = [acc(t, &pred).unwrap(), ari(t, &pred).unwrap(), nmi(t, &pred).unwrap(), silhouette(&ds, &pred).unwrap()];
    let mut invariant = true;
    for _ in 0..100 {
        let mut perm: Vec<usize> = (0..4).collect();
        perm.shuffle(&mut rng);
        let q: Vec<usize> = pred.iter().map(|&l| perm[l]).collect();
        let now = [acc(t, &q).unwrap(), ari(t, &q).unwrap(), nmi(t, &q).unwrap(), silhouette(&ds, &q).unwrap()];
        invariant &= base.iter().zip(&now).all(|(a, b)| (a - b).abs() <= 1e-12);
    }
    verdict(
        worst <= 1e-12 && invariant,
        format!("{pairs} labeling pairs, max |diff| {worst:.1e} (<= 1e-12); relabeling invariant: {invariant}"),
    )
}

fn evtkm(args: &[&str]) -> bool {
    Command::new(env!("CARGO_BIN_EXE_evtkm")).args(args).output().map(|o| o.status.success()).unwrap_or(false)
}

fn strip_timing(path: &Path, timing_cols: usize) -> String {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            f[..f.len() - timing_cols].join(",")
        })
        .collect::<Vec<_>>()
        .join("\n")
}

fn cli_determinism() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let p = |name: &str| dir.path().join(name).to_str().unwrap().to_string();
    let data = p("data.csv");
    let mut ok = evtkm(&["synth", "--n", "400", "--k", "3", "--d", "2", "--sigma", "0.25", "--seed", "3", "--output", &data]);
    let again = p("data2.csv");
    ok &= evtkm(&["synth", "--n", "400", "--k", "3", "--d", "2", "--sigma", "0.25", "--seed", "3", "--output", &again]);
    let mut same = ok && std::fs::read(&data).unwrap() == std::fs::read(&again).unwrap();

    let runs: Vec<(Vec<&str>, usize)> = vec![
        (vec!["cluster", "--algorithm", "kmeans", "--k", "3", "--repeats", "3"], 5),
        (vec!["cluster", "--algorithm", "gev", "--k", "3", "--repeats", "3"], 5),
        (vec!["cluster", "--algorithm", "gpd", "--k", "3", "--repeats", "3", "--init", "random"], 5),
        (vec!["sweep", "--algorithm", "gpd", "--k", "3", "--repeats", "2", "--param", "alpha", "--values", "0.1,0.3"], 5),
        (vec!["fitdiag", "--algorithm", "gev", "--k", "3", "--cluster", "1"], 0),
    ];
    let mut checked = 1;
    for (i, (args, timing)) in runs.iter().enumerate() {
        let outs = [p(&format!("r{i}a.csv")), p(&format!("r{i}b.csv"))];
        for o in &outs {
            let mut full = args.clone();
            full.extend(["--input", &data, "--output", o]);
            ok &= evtkm(&full);
        }
        same &= ok && strip_timing(Path::new(&outs[0]), *timing) == strip_timing(Path::new(&outs[1]), *timing);
        checked += 1;
    }
    let robust = [p("ra.csv"), p("rb.csv")];
    for o in &robust {
        ok &= evtkm(&["robust", "--n", "200", "--k", "3", "--d", "2", "--sigma", "0.2", "--extra-dims", "0,3",
            "--algorithms", "kmeans,gev", "--repeats", "2", "--output", o]);
    }
    same &= ok && strip_timing(Path::new(&robust[0]), 5) == strip_timing(Path::new(&robust[1]), 5);
    checked += 1;
    verdict(ok && same, format!("{checked} commands run twice, all exit 0: {ok}, non-timing output identical: {same}"))
}

fn timing_scaling() -> Verdict {
    let cfg = RunConfig { seed: 1, max_iter: 5, tol: 0.0, ..RunConfig::new(8) };
    let per_iter = |n: usize| {
        let ds = synth(n, 8, 20, 0.5, 1);
        let mut times = Vec::new();
        for _ in 0..3 {
            let out = run(&ds, &cfg, Kind::Gpd).unwrap();
            times.extend(out.timings.per_iteration.iter().map(|t| t.cluster.as_secs_f64()));
        }
        median(times)
    };
    let (small, large) = (per_iter(10_000), per_iter(20_000));
    let ratio = large / small;
    verdict(
        (1.5..=3.0).contains(&ratio),
        format!("median cluster time/iteration {:.2}ms -> {:.2}ms, ratio {ratio:.2} (in [1.5, 3])", small * 1e3, large * 1e3),
    )
}

fn main() {
    let criteria: [Criterion; 11] = [
        ("GPD maximum-likelihood recovery", mle_recovery_gpd),
        ("GEV maximum-likelihood recovery", mle_recovery_gev),
        ("distribution identities", distribution_identities),
        ("synthetic clustering parity", clustering_parity),
        ("degradation with cluster spread", degradation_trend),
        ("uninformative-feature robustness", uninformative_robustness),
        ("Q-Q fit quality", qq_quality),
        ("Lloyd objective monotone", lloyd_monotone),
        ("metric oracles", metric_oracles),
        ("CLI determinism", cli_determinism),
        ("timing decomposition scaling", timing_scaling),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = Vec::new();
    for (i, (name, check)) in criteria.iter().enumerate() {
        let id = i + 1;
        if !filter.is_empty() && !filter.iter().any(|f| f == &id.to_string()) {
            continue;
        }
        let start = Instant::now();
        let v = check();
        let status = if v.pass { "PASS" } else { "FAIL" };
        println!("criterion {id:>2} {status} {name}: {} [{:.1}s]", v.detail, start.elapsed().as_secs_f64());
        if !v.pass {
            failed.push(id);
        }
    }
    if !failed.is_empty() {
        println!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
