//! Batch front end: a flat `key = value` config, `--key value` overrides,
//! and one CSV/plot-data pair per run.

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::Parser;
use rug::ops::Pow;
use rug::{Integer, Rational};

use crate::arith::{primes_in_window, sieve};
use crate::corput::{carry_exception_count, vdc_weighted, ComplexSeq};
use crate::diophantine::bad_pair_census;
use crate::equidist::{
    discrepancy_1d, discrepancy_2d, etk_bound, grid_discrepancy_2d, mean_square_discrepancy_estimate, PointSet,
    MAX_EXACT_2D_POINTS,
};
use crate::error::LabError;
use crate::experiments::{
    ddkbsz_harness, mobius_orthogonality, normality_stats, pattern_frequencies, prop2_rhs, subword_complexity,
    ExperimentConfig, ResultRecord, Value, WordSource,
};
use crate::gowers::{
    gowers_brute, gowers_recursion, gowers_u2_fourier, integral_gowers_mc, GowersResult, MAX_WORK_BITS,
};
use crate::reduction::{avg_linear_expsum, exponent_feasibility, s0_sample};

pub const EXPERIMENTS: [&str; 16] = [
    "orthogonality",
    "ddkbsz",
    "patterns",
    "prop2",
    "gowers",
    "gowers-integral",
    "discrepancy",
    "meansq",
    "badpairs",
    "s0",
    "expsum-avg",
    "complexity",
    "normality",
    "params",
    "carry",
    "vdc",
];

pub const CSV_HEADER: [&str; 5] = ["name", "param_json", "value", "normalized", "runtime_ms"];

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error(transparent)]
    Lab(#[from] LabError),
    #[error("i/o: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            _ => 1,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Parser, Debug)]
#[command(
    name = "tmlab",
    version,
    about = "Run a named experiment and write <experiment>.csv, .dat and .meta",
    after_help = "Experiment keys may be given in the config file or as trailing `--key value` pairs."
)]
struct Args {
    /// One of: orthogonality, ddkbsz, patterns, prop2, gowers, gowers-integral, discrepancy,
    /// meansq, badpairs, s0, expsum-avg, complexity, normality, params, carry, vdc
    experiment: String,
    /// Flat `key = value` file; `#` starts a comment.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; 0 picks the machine default.
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(trailing_var_arg = true, allow_hyphen_values = true, hide = true)]
    overrides: Vec<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunManifest {
    pub experiment: String,
    pub params: BTreeMap<String, String>,
    pub output_dir: PathBuf,
    pub seed: u64,
    pub workers: usize,
}

fn normalize_key(k: &str) -> String {
    k.trim().replace('_', "-")
}

/// Parses `key = value` lines.
pub fn parse_config(text: &str) -> CliResult<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("config line {}: expected key = value", i + 1)))?;
        let key = normalize_key(k);
        if key.is_empty() {
            return Err(CliError::Usage(format!("config line {}: empty key", i + 1)));
        }
        map.insert(key, v.trim().to_string());
    }
    Ok(map)
}

fn parse_overrides(args: &[String]) -> CliResult<Vec<(String, String)>> {
    let mut out = Vec::new();
    let mut it = args.iter();
    while let Some(a) = it.next() {
        let body = a
            .strip_prefix("--")
            .ok_or_else(|| CliError::Usage(format!("unexpected argument `{a}`")))?;
        let (k, v) = match body.split_once('=') {
            Some((k, v)) => (k.to_string(), v.to_string()),
            None => {
                let v = it
                    .next()
                    .ok_or_else(|| CliError::Usage(format!("flag --{body} needs a value")))?;
                (body.to_string(), v.clone())
            }
        };
        out.push((normalize_key(&k), v));
    }
    Ok(out)
}

fn parse_number<T: std::str::FromStr>(key: &str, v: &str) -> CliResult<T> {
    v.parse::<T>()
        .map_err(|_| CliError::Usage(format!("--{key}: cannot parse `{v}`")))
}

/// Integer that may be written as `1e6`.
fn parse_count(key: &str, v: &str) -> CliResult<u64> {
    if let Ok(x) = v.parse::<u64>() {
        return Ok(x);
    }
    let x: f64 = parse_number(key, v)?;
    if x >= 0.0 && x.fract() == 0.0 && x < 1.8e19 {
        Ok(x as u64)
    } else {
        Err(CliError::Usage(format!("--{key}: `{v}` is not a nonnegative integer")))
    }
}

/// Exact rational from `a/b` or a decimal such as `0.05` or `4e7`.
pub fn parse_rational(v: &str) -> Option<Rational> {
    let v = v.trim();
    if v.contains('/') {
        return Rational::parse(v).ok().map(Rational::from);
    }
    let (mant, exp) = match v.find(['e', 'E']) {
        Some(i) => (&v[..i], v[i + 1..].parse::<i32>().ok()?),
        None => (v, 0),
    };
    let (neg, mant) = match mant.strip_prefix('-') {
        Some(m) => (true, m),
        None => (false, mant.strip_prefix('+').unwrap_or(mant)),
    };
    let (int, frac) = mant.split_once('.').unwrap_or((mant, ""));
    if int.is_empty() && frac.is_empty() || !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let digits: Integer = format!("0{int}{frac}").parse().ok()?;
    let shift = exp - frac.len() as i32;
    let ten = Integer::from(10).pow(shift.unsigned_abs());
    let mut q = if shift >= 0 {
        Rational::from(digits * ten)
    } else {
        Rational::from((digits, ten))
    };
    if neg {
        q = -q;
    }
    Some(q)
}

/// Experiment parameters with tracking of which keys were read.
struct Params {
    map: BTreeMap<String, String>,
    used: RefCell<BTreeSet<String>>,
}

impl Params {
    fn raw(&self, key: &str) -> Option<&str> {
        self.used.borrow_mut().insert(key.to_string());
        self.map.get(key).map(String::as_str)
    }

    fn f64(&self, key: &str, default: f64) -> CliResult<f64> {
        match self.raw(key) {
            Some(v) => {
                let x: f64 = parse_number(key, v)?;
                if x.is_finite() {
                    Ok(x)
                } else {
                    Err(CliError::Usage(format!("--{key} must be finite")))
                }
            }
            None => Ok(default),
        }
    }

    fn u64(&self, key: &str, default: u64) -> CliResult<u64> {
        self.raw(key).map_or(Ok(default), |v| parse_count(key, v))
    }

    fn u32(&self, key: &str, default: u32) -> CliResult<u32> {
        let v = self.u64(key, default as u64)?;
        u32::try_from(v).map_err(|_| CliError::Usage(format!("--{key} is too large")))
    }

    fn i64(&self, key: &str, default: i64) -> CliResult<i64> {
        self.raw(key).map_or(Ok(default), |v| parse_number(key, v))
    }

    fn rational(&self, key: &str, default: &str) -> CliResult<Rational> {
        let v = self.raw(key).unwrap_or(default);
        parse_rational(v).ok_or_else(|| CliError::Usage(format!("--{key}: `{v}` is not a rational")))
    }

    fn string(&self, key: &str, default: &str) -> String {
        self.raw(key).unwrap_or(default).to_string()
    }

    fn reject_unused(&self) -> CliResult<()> {
        let used = self.used.borrow();
        let extra: Vec<&str> = self
            .map
            .keys()
            .filter(|k| !used.contains(*k))
            .map(String::as_str)
            .collect();
        if extra.is_empty() {
            Ok(())
        } else {
            Err(CliError::Usage(format!("unknown keys: {}", extra.join(", "))))
        }
    }
}

/// Rows for the CSV and `x y` pairs for the plot file.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunOutput {
    pub records: Vec<ResultRecord>,
    pub dat_columns: (String, String),
    pub dat: Vec<(f64, f64)>,
}

impl RunOutput {
    fn new(x: &str, y: &str) -> Self {
        Self {
            records: Vec::new(),
            dat_columns: (x.into(), y.into()),
            dat: Vec::new(),
        }
    }

    fn push(&mut self, record: ResultRecord, x: f64, y: f64) {
        self.records.push(record);
        self.dat.push((x, y));
    }

    /// RFC-4180 CSV text.
    pub fn csv(&self) -> CliResult<String> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::CRLF)
            .from_writer(Vec::new());
        w.write_record(CSV_HEADER)?;
        for r in &self.records {
            w.write_record([
                r.name.clone(),
                r.param_json(),
                r.value.to_string(),
                format!("{:?}", r.normalized),
                r.runtime_ms.to_string(),
            ])?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| CliError::Io(e.to_string()))
    }

    pub fn dat_text(&self) -> String {
        let mut s = format!("# {} {}\n", self.dat_columns.0, self.dat_columns.1);
        for (x, y) in &self.dat {
            let _ = writeln!(s, "{x:?} {y:?}");
        }
        s
    }
}

fn base_config(p: &Params, seed: u64) -> CliResult<ExperimentConfig> {
    let d = ExperimentConfig::default();
    Ok(ExperimentConfig {
        c: p.f64("c", d.c)?,
        n: p.u64("N", d.n)?,
        theta: p.f64("theta", d.theta)?,
        theta1: d.theta1,
        k: p.u64("K", d.k)?,
        h: d.h,
        seed,
    })
}

fn gowers_value(m: u32, rho: u32) -> crate::Result<GowersResult> {
    if m == 2 {
        gowers_u2_fourier(rho)
    } else if (m - 2) * rho <= MAX_WORK_BITS {
        gowers_recursion(m, rho)
    } else {
        gowers_brute(m, rho)
    }
}

fn finite(x: f64) -> f64 {
    if x.is_finite() {
        x
    } else {
        0.0
    }
}

fn run_experiment(name: &str, p: &Params, seed: u64) -> CliResult<RunOutput> {
    let out = match name {
        "orthogonality" => {
            let c = p.f64("c", 1.5)?;
            let n = p.u64("N", 1_000_000)?;
            let r = mobius_orthogonality(c, n)?;
            let mut out = RunOutput::new("N", "sum_pm/N");
            for cp in &r.checkpoints {
                let norm = cp.sum_pm as f64 / cp.n as f64;
                let rec = ResultRecord::new("sum_pm", Value::Int(cp.sum_pm), norm)
                    .param("c", c)
                    .param("N", cp.n)
                    .param("sum_01", cp.sum_01)
                    .param("mertens", cp.mertens);
                out.push(rec, cp.n as f64, norm);
            }
            out
        }
        "ddkbsz" => {
            let cfg = base_config(p, seed)?;
            let rows = ddkbsz_harness(&cfg)?;
            let mut out = RunOutput::new("k", "aggregate/budget");
            for r in rows {
                let rec = ResultRecord::new("ddkbsz", Value::Real(r.aggregate), finite(r.ratio()))
                    .param("c", cfg.c)
                    .param("N", cfg.n)
                    .param("theta", cfg.theta)
                    .param("k", r.k)
                    .param("primes", r.primes.len())
                    .param("budget", r.budget)
                    .param("diagonal", r.diagonal);
                out.push(rec, r.k as f64, finite(r.ratio()));
            }
            out
        }
        "patterns" => {
            let (pp, q) = (p.u64("p", 11)?, p.u64("q", 13)?);
            let c = p.f64("c", 1.3)?;
            let n = p.u64("N", 1_000_000)?;
            let f = pattern_frequencies(pp, q, c, n)?;
            let mut out = RunOutput::new("pattern", "deviation");
            for i in 0..4u8 {
                let (a1, a2) = (i / 2, i % 2);
                let rec = ResultRecord::new("pattern", Value::Int(f.counts[i as usize] as i64), f.deviation(a1, a2))
                    .param("p", pp)
                    .param("q", q)
                    .param("c", c)
                    .param("N", n)
                    .param("a1", a1)
                    .param("a2", a2)
                    .param("diagonal", f.diagonal);
                out.push(rec, i as f64, f.deviation(a1, a2));
            }
            out
        }
        "prop2" => {
            let (pp, q) = (p.u64("p", 11)?, p.u64("q", 13)?);
            let mut cfg = base_config(p, seed)?;
            cfg.c = p.f64("c", 1.3)?;
            let k = p.u32("k", 63 - pp.min(q).max(1).leading_zeros())?;
            let draws = p.u64("draws", 200)?;
            let r = prop2_rhs(pp, q, &cfg, k, draws)?;
            let rhs = r.rhs();
            let mut out = RunOutput::new("term", "value");
            let terms = [
                ("lhs", r.lhs),
                ("term1", r.term1),
                ("term2", r.term2),
                ("j_hat", r.j_hat),
                ("j_stderr", r.j_stderr),
            ];
            for (i, (label, v)) in terms.into_iter().enumerate() {
                let rec = ResultRecord::new(label, Value::Real(v), finite(v / rhs))
                    .param("p", pp)
                    .param("q", q)
                    .param("c", cfg.c)
                    .param("N", cfg.n)
                    .param("K", cfg.k)
                    .param("k", k)
                    .param("draws", draws)
                    .param("truncated", r.truncated_block);
                out.push(rec, i as f64, v);
            }
            out
        }
        "gowers" => {
            let m = p.u32("m", 2)?;
            let lo = p.u32("rho-min", 2)?;
            let hi = p.u32("rho-max", 10)?;
            let mut out = RunOutput::new("rho", "log2_value");
            for rho in lo..=hi {
                let g = gowers_value(m, rho)?;
                let mut rec = ResultRecord::new("gowers", Value::Real(g.value), g.value)
                    .param("m", m)
                    .param("rho", rho)
                    .param("method", format!("{:?}", g.method));
                if let Some(num) = g.numerator {
                    rec = rec
                        .param("numerator", num.to_string())
                        .param("log2_denominator", g.log2_denominator());
                }
                out.push(rec, rho as f64, finite(g.value.log2()));
            }
            out
        }
        "gowers-integral" => {
            let m = p.u32("m", 2)?;
            let lo = p.u32("rho-min", 2)?;
            let hi = p.u32("rho-max", 6)?;
            let samples = p.u64("samples", 100_000)?;
            let mut out = RunOutput::new("rho", "estimate");
            for rho in lo..=hi {
                let mc = integral_gowers_mc(m, rho, samples, seed)?;
                let discrete = gowers_value(m, rho)?.value;
                let rec = ResultRecord::new(
                    "gowers_integral",
                    Value::Real(mc.estimate),
                    finite(mc.estimate / discrete),
                )
                .param("m", m)
                .param("rho", rho)
                .param("samples", samples)
                .param("stderr", mc.stderr)
                .param("discrete", discrete);
                out.push(rec, rho as f64, mc.estimate);
            }
            out
        }
        "discrepancy" => {
            let alpha = p.f64("alpha", std::f64::consts::SQRT_2 - 1.0)?;
            let n = p.u64("N", 10_000)?;
            let dim = p.u32("dim", 1)?;
            let h = p.u32("H", 64)?;
            let mut out = RunOutput::new("N", "N*D_N/ln N");
            match dim {
                1 => {
                    for j in 1..=10u64 {
                        let m = n * j / 10;
                        if m == 0 {
                            continue;
                        }
                        let ps = PointSet::from_sequence_1d((1..=m).map(|k| k as f64 * alpha))?;
                        let d = discrepancy_1d(&ps)?.value;
                        let etk = etk_bound(&ps, h)?;
                        let norm = finite(m as f64 * d / (m as f64).ln());
                        let rec = ResultRecord::new("discrepancy", Value::Real(d), norm)
                            .param("alpha", alpha)
                            .param("N", m)
                            .param("H", h)
                            .param("etk", etk);
                        out.push(rec, m as f64, norm);
                    }
                }
                2 => {
                    let beta = p.f64("beta", 3f64.sqrt() - 1.0)?;
                    let grid = p.u64("grid", 128)? as usize;
                    for j in 1..=10u64 {
                        let m = n * j / 10;
                        if m == 0 {
                            continue;
                        }
                        let ps = PointSet::from_sequence_2d((1..=m).map(|k| [k as f64 * alpha, k as f64 * beta]))?;
                        let (name, d, lower) = if m as usize <= MAX_EXACT_2D_POINTS {
                            let d = discrepancy_2d(&ps)?.value;
                            ("discrepancy_2d", d, d)
                        } else {
                            let g = grid_discrepancy_2d(&ps, grid)?;
                            ("discrepancy_2d_grid", g.upper, g.lower)
                        };
                        let norm = finite(m as f64 * d / (m as f64).ln().powi(2));
                        let rec = ResultRecord::new(name, Value::Real(d), norm)
                            .param("alpha", alpha)
                            .param("beta", beta)
                            .param("N", m)
                            .param("lower", lower);
                        out.push(rec, m as f64, norm);
                    }
                }
                _ => return Err(CliError::Usage(format!("--dim must be 1 or 2, got {dim}"))),
            }
            out
        }
        "meansq" => {
            let n = p.u64("N", 10_000)?;
            let samples = p.u64("samples", 200)?;
            let r = mean_square_discrepancy_estimate(n, samples, seed)?;
            let mut out = RunOutput::new("N", "mean");
            let rec = ResultRecord::new("meansq", Value::Real(r.mean), r.ratio)
                .param("N", n)
                .param("samples", samples)
                .param("stderr", r.stderr);
            out.push(rec, n as f64, r.mean);
            out
        }
        "badpairs" => {
            let k = p.u32("k", 12)?;
            let c = p.f64("c", 1.5)?;
            let eps = p.f64("eps", 1e-3)?;
            let q_max = p.u64("q-max", 50)?;
            if k >= 40 {
                return Err(CliError::Usage("--k must be below 40".into()));
            }
            let table = sieve(1u64 << (k + 1))?;
            let cap = 2f64.powi(2 * (k as i32 + 1));
            let window = primes_in_window(&table, k, 0.5, cap)?;
            let census = bad_pair_census(&window, c, eps, q_max)?;
            let mut out = RunOutput::new("eps", "bad_fraction");
            let rec = ResultRecord::new("bad_pairs", Value::Int(census.bad_pairs as i64), census.fraction)
                .param("k", k)
                .param("c", c)
                .param("eps", eps)
                .param("q_max", q_max)
                .param("primes", window.len())
                .param("pairs", census.total_pairs)
                .param("unordered_bad", census.unordered_bad);
            out.push(rec, eps, census.fraction);
            out
        }
        "s0" => {
            let d = p.f64("D", 1000.0)?;
            let n = p.u64("N", 10_000)?;
            let gamma = p.f64("gamma", std::f64::consts::SQRT_2)?;
            let samples = p.u64("alpha-samples", 100)?;
            let grid = p.u64("beta-grid", 16)?;
            let r = s0_sample(d, n, gamma, samples, grid, seed)?;
            let mut out = RunOutput::new("N", "estimate");
            let rec = ResultRecord::new("s0", Value::Real(r.estimate), r.ratio)
                .param("D", d)
                .param("N", n)
                .param("gamma", gamma)
                .param("alpha_samples", samples)
                .param("beta_grid", grid);
            out.push(rec, n as f64, r.estimate);
            out
        }
        "expsum-avg" => {
            let d = p.f64("D", 1000.0)?;
            let t = p.f64("t", 1.0)?;
            let n = p.u64("N", 1000)?;
            let quad = p.u64("quad-points", 4096)?;
            let r = avg_linear_expsum(d, t, n, quad)?;
            let mut out = RunOutput::new("N", "ratio");
            let rec = ResultRecord::new("expsum_avg", Value::Real(r.w_hat), r.ratio)
                .param("D", d)
                .param("t", t)
                .param("N", n)
                .param("quad_points", quad)
                .param("cap", r.cap);
            out.push(rec, n as f64, r.ratio);
            out
        }
        "complexity" => {
            let source = match p.string("source", "tm").as_str() {
                "tm" | "thue-morse" => WordSource::ThueMorse,
                "ps" => WordSource::PiatetskiShapiro(p.f64("c", 1.3)?),
                other => return Err(CliError::Usage(format!("--source must be tm or ps, got {other}"))),
            };
            let h_max = p.u32("H-max", 12)?;
            let length = p.u64("length", 1_000_000)?;
            let mut out = RunOutput::new("H", "distinct");
            for (h, count) in subword_complexity(source, h_max, length)? {
                let norm = match source {
                    WordSource::ThueMorse => count as f64 / h as f64,
                    WordSource::PiatetskiShapiro(_) => count as f64 / 2f64.powi(h as i32),
                };
                let mut rec = ResultRecord::new("complexity", Value::Int(count as i64), norm)
                    .param("H", h)
                    .param("length", length);
                rec = match source {
                    WordSource::ThueMorse => rec.param("source", "tm"),
                    WordSource::PiatetskiShapiro(c) => rec.param("source", "ps").param("c", c),
                };
                out.push(rec, h as f64, count as f64);
            }
            out
        }
        "normality" => {
            let c = p.f64("c", 1.3)?;
            let h = p.u32("H", 4)?;
            let n = p.u64("N", 1_000_000)?;
            let t = normality_stats(c, h, n)?;
            let mut out = RunOutput::new("pattern", "frequency");
            for (w, &count) in t.counts.iter().enumerate() {
                let pattern = if h == 0 {
                    String::new()
                } else {
                    format!("{w:0width$b}", width = h as usize)
                };
                let rec = ResultRecord::new("normality", Value::Int(count as i64), t.frequency(w))
                    .param("c", c)
                    .param("H", h)
                    .param("N", n)
                    .param("pattern", pattern);
                out.push(rec, w as f64, t.frequency(w));
            }
            out
        }
        "params" => {
            let log2_n = p.rational("log2-N", "4e7")?;
            let d = p.rational("d", "12")?;
            let theta1 = p.rational("theta1", "0.05")?;
            let eta1 = p.rational("eta1", "0.1")?;
            let report = exponent_feasibility(&log2_n, &d, &theta1, &eta1)?;
            let q = &report.params;
            let mut out = RunOutput::new("check", "slack");
            for (i, check) in report.checks.iter().enumerate() {
                let slack = check.slack.to_f64();
                let rec = ResultRecord::new(check.name.clone(), Value::Int(check.holds as i64), finite(slack))
                    .param("log2_N", log2_n.to_string())
                    .param("d", d.to_string())
                    .param("theta1", theta1.to_string())
                    .param("eta1", eta1.to_string())
                    .param("mu", q.mu)
                    .param("rho", q.rho)
                    .param("sigma", q.sigma)
                    .param("l", q.l)
                    .param("m", q.m.to_string());
                out.push(rec, i as f64, finite(slack));
            }
            out
        }
        "carry" => {
            let alpha = p.f64("alpha", std::f64::consts::SQRT_2)?;
            let beta = p.f64("beta", 0.0)?;
            let r = p.u64("r", 7)?;
            let lambda = p.u32("lambda", 12)?;
            let n = p.u64("N", 100_000)?;
            let cc = carry_exception_count(alpha, beta, r, lambda, n)?;
            let mut out = RunOutput::new("lambda", "count/bound");
            let norm = finite(cc.count as f64 / cc.bound);
            let rec = ResultRecord::new("carry", Value::Int(cc.count as i64), norm)
                .param("alpha", alpha)
                .param("beta", beta)
                .param("r", r)
                .param("lambda", lambda)
                .param("N", n)
                .param("bound", cc.bound);
            out.push(rec, lambda as f64, norm);
            out
        }
        "vdc" => {
            let alpha = p.f64("alpha", std::f64::consts::SQRT_2)?;
            let n = p.u64("N", 1000)?;
            let start = p.i64("start", 1)?;
            let r_max = p.u64("R", 32)?;
            let phases: Vec<f64> = (0..n as i64).map(|i| alpha * ((start + i) as f64).powi(2)).collect();
            let z = ComplexSeq::new(
                start,
                phases
                    .iter()
                    .map(|x| num_complex::Complex64::from_polar(1.0, std::f64::consts::TAU * x))
                    .collect(),
            )?;
            let mut out = RunOutput::new("R", "lhs/rhs");
            let mut r = 1;
            while r <= r_max {
                let ineq = vdc_weighted(&z, r)?;
                let norm = finite(ineq.lhs / ineq.rhs);
                let rec = ResultRecord::new("vdc", Value::Real(ineq.lhs), norm)
                    .param("alpha", alpha)
                    .param("N", n)
                    .param("R", r)
                    .param("rhs", ineq.rhs);
                out.push(rec, r as f64, norm);
                r *= 2;
            }
            out
        }
        other => {
            return Err(CliError::Usage(format!(
                "unknown experiment `{other}`; expected one of {}",
                EXPERIMENTS.join(", ")
            )))
        }
    };
    p.reject_unused()?;
    Ok(out)
}

/// Builds the manifest from the command line, reading `--config` if given.
pub fn manifest_from_args<I, S>(args: I) -> CliResult<RunManifest>
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let args = Args::try_parse_from(args).map_err(|e| CliError::Usage(e.to_string()))?;
    let mut overrides = parse_overrides(&args.overrides)?;
    let mut take = |key: &str| -> Option<String> {
        let pos = overrides.iter().rposition(|(k, _)| k == key)?;
        let v = overrides.remove(pos).1;
        overrides.retain(|(k, _)| k != key);
        Some(v)
    };
    let config_path = take("config").map(PathBuf::from).or(args.config);
    let seed_flag = take("seed");
    let workers_flag = take("workers");
    let out_flag = take("out");
    let mut params = match &config_path {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
            parse_config(&text)?
        }
        None => BTreeMap::new(),
    };
    params.extend(overrides);
    let seed = match seed_flag.or_else(|| params.remove("seed")) {
        Some(v) => parse_count("seed", &v)?,
        None => args.seed.unwrap_or(0),
    };
    let workers = match workers_flag.or_else(|| params.remove("workers")) {
        Some(v) => parse_count("workers", &v)? as usize,
        None => args.workers.unwrap_or(0),
    };
    let output_dir = out_flag
        .or_else(|| params.remove("out"))
        .map(PathBuf::from)
        .or(args.out)
        .unwrap_or_else(|| PathBuf::from("."));
    if !EXPERIMENTS.contains(&args.experiment.as_str()) {
        return Err(CliError::Usage(format!(
            "unknown experiment `{}`; expected one of {}",
            args.experiment,
            EXPERIMENTS.join(", ")
        )));
    }
    Ok(RunManifest {
        experiment: args.experiment,
        params,
        output_dir,
        seed,
        workers,
    })
}

/// Runs the experiment on a pool of `manifest.workers` threads without
/// touching the file system.
pub fn execute(manifest: &RunManifest) -> CliResult<RunOutput> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(manifest.workers)
        .build()
        .map_err(|e| CliError::Io(e.to_string()))?;
    pool.install(|| {
        let params = Params {
            map: manifest.params.clone(),
            used: RefCell::new(BTreeSet::new()),
        };
        run_experiment(&manifest.experiment, &params, manifest.seed)
    })
}

fn write_outputs(manifest: &RunManifest, out: &RunOutput, elapsed_ms: u128) -> CliResult<()> {
    let dir: &Path = &manifest.output_dir;
    fs::create_dir_all(dir)?;
    let name = &manifest.experiment;
    fs::write(dir.join(format!("{name}.csv")), out.csv()?)?;
    fs::write(dir.join(format!("{name}.dat")), out.dat_text())?;
    let started = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let mut meta = String::new();
    let _ = writeln!(meta, "experiment = {name}");
    let _ = writeln!(meta, "version = {}", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(meta, "finished_unix = {started}");
    let _ = writeln!(meta, "runtime_ms = {elapsed_ms}");
    let _ = writeln!(meta, "seed = {}", manifest.seed);
    let _ = writeln!(meta, "workers = {}", manifest.workers);
    for (k, v) in &manifest.params {
        let _ = writeln!(meta, "param.{k} = {v}");
    }
    fs::write(dir.join(format!("{name}.meta")), meta)?;
    Ok(())
}

/// Runs a manifest and writes `<experiment>.csv`, `.dat` and `.meta`.
pub fn run(manifest: &RunManifest) -> CliResult<RunOutput> {
    let t0 = Instant::now();
    let out = execute(manifest)?;
    write_outputs(manifest, &out, t0.elapsed().as_millis())?;
    Ok(out)
}

/// Entry point for the binary; returns the process exit code.
pub fn main_with_args<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let result = manifest_from_args(args).and_then(|m| run(&m).map(|out| (m, out)));
    match result {
        Ok((m, out)) => {
            println!(
                "{}: {} rows written to {}",
                m.experiment,
                out.records.len(),
                m.output_dir.display()
            );
            0
        }
        Err(e) => {
            eprintln!("tmlab: {e}");
            e.exit_code()
        }
    }
}
