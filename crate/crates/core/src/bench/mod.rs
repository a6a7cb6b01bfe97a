//! Batched-vs-per-call benchmark harness and CSV reports.

mod timing;
mod workload;

use std::fs;
use std::io::Write;
use std::path::Path;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::reference::{batched_ref, dgemm_ref, GemmScalars};
use crate::runtime::Dispatcher;
use crate::spec::{KernelSpec, Layout};

pub use timing::{median, sample, std_dev, Samples};
pub use workload::{max_abs_diff, OperandData, Workload};

/// Largest difference against the reference a benchmarked kernel may show.
pub const CORRECTNESS_TOL: f64 = 1e-12;

pub const CSV_HEADER: &str =
    "name,E,reps,median_ns_batched,median_ns_percall,speedup,max_abs_diff,fallback_used";

/// Fraction of proxy run time spent in DGEMM-based kernels.
pub const DGEMM_FRACTION: f64 = 0.5353;

/// One single-pair GEMM, same argument order as [`dgemm_ref`].
pub type PerCallGemm =
    fn(Layout, usize, usize, usize, f64, &[f64], usize, &[f64], usize, f64, &mut [f64], usize);

/// The default per-call baseline: [`dgemm_ref`] with its checks.
#[allow(clippy::too_many_arguments)]
pub fn naive_percall(
    layout: Layout,
    n: usize,
    m: usize,
    k: usize,
    alpha: f64,
    a: &[f64],
    lda: usize,
    b: &[f64],
    ldb: usize,
    beta: f64,
    c: &mut [f64],
    ldc: usize,
) {
    dgemm_ref(layout, n, m, k, alpha, a, lda, b, ldb, beta, c, ldc).expect("benchmark operands are valid");
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRecord {
    pub name: String,
    #[serde(rename = "E")]
    pub e_count: usize,
    pub reps: usize,
    pub median_ns_batched: f64,
    pub median_ns_percall: f64,
    pub speedup: f64,
    pub max_abs_diff: f64,
    pub fallback_used: bool,
}

/// A record plus the spread of its samples.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchResult {
    pub record: BenchRecord,
    pub std_ns_batched: f64,
    pub std_ns_percall: f64,
    pub iterations_batched: u64,
    pub iterations_percall: u64,
}

#[derive(Debug, Clone, Copy)]
pub struct BenchOptions {
    pub e_count: usize,
    pub reps: usize,
    pub seed: u64,
    pub scalars: GemmScalars,
    pub allow_fallback: bool,
    pub min_sample: Duration,
    pub baseline: PerCallGemm,
}

impl Default for BenchOptions {
    fn default() -> Self {
        BenchOptions {
            e_count: 10_000,
            reps: 5,
            seed: 42,
            scalars: GemmScalars::new(1.0, 1.0),
            allow_fallback: false,
            min_sample: Duration::from_millis(1),
            baseline: naive_percall,
        }
    }
}

fn check_fallback(dispatcher: &Dispatcher, spec: &KernelSpec, e_count: usize, allow: bool) -> Result<()> {
    if !allow && e_count > 0 && !dispatcher.contains(spec) {
        return Err(Error::FallbackDisallowed(spec.name()));
    }
    Ok(())
}

/// Runs the dispatched kernel and [`batched_ref`] on identical random
/// operands and returns the largest difference between the two outputs.
pub fn run_correctness(
    dispatcher: &Dispatcher,
    spec: &KernelSpec,
    e_count: usize,
    seed: u64,
    scalars: GemmScalars,
    allow_fallback: bool,
) -> Result<f64> {
    check_fallback(dispatcher, spec, e_count, allow_fallback)?;
    let w = Workload::random(spec, e_count, seed);
    let mut got = w.c.clone();
    let mut want = w.c.clone();
    dispatcher.run_batched(
        spec,
        e_count,
        scalars.alpha,
        &w.a.view(),
        &w.b.view(),
        scalars.beta,
        &mut got.view_mut(),
    )?;
    batched_ref(
        spec,
        e_count,
        scalars,
        &w.a.view(),
        &w.b.view(),
        &mut want.view_mut(),
    )?;
    Ok(max_abs_diff(&got, &want))
}

/// Times one batched call over `e_count` elements against a loop of
/// `e_count` per-call GEMMs. Correctness is measured first.
pub fn run_benchmark(dispatcher: &Dispatcher, spec: &KernelSpec, opts: &BenchOptions) -> Result<BenchResult> {
    check_fallback(dispatcher, spec, opts.e_count, opts.allow_fallback)?;
    let fallbacks_before = dispatcher.fallback_count();
    let diff = run_correctness(
        dispatcher,
        spec,
        opts.e_count,
        opts.seed,
        opts.scalars,
        opts.allow_fallback,
    )?;

    let w = Workload::random(spec, opts.e_count, opts.seed);
    let (a, b) = (w.a.view(), w.b.view());
    let GemmScalars { alpha, beta } = opts.scalars;

    let mut c = w.c.clone();
    let mut c_view = c.view_mut();
    let mut failure = None;
    let batched = sample(opts.reps, opts.min_sample, || {
        if let Err(e) = dispatcher.run_batched(spec, opts.e_count, alpha, &a, &b, beta, &mut c_view) {
            failure.get_or_insert(e);
        }
    });
    if let Some(e) = failure {
        return Err(e);
    }
    drop(c_view);

    let mut c = w.c.clone();
    let mut c_view = c.view_mut();
    let (n, m, k) = (spec.shape.n(), spec.shape.m(), spec.shape.k());
    let (lda, ldb, ldc) = (a.ld(), b.ld(), c_view.ld());
    let gemm = opts.baseline;
    let percall = sample(opts.reps, opts.min_sample, || {
        for e in 0..opts.e_count {
            gemm(
                spec.layout,
                n,
                m,
                k,
                alpha,
                a.matrix(e),
                lda,
                b.matrix(e),
                ldb,
                beta,
                c_view.matrix_mut(e),
                ldc,
            );
        }
    });

    let median_ns_batched = batched.median();
    let median_ns_percall = percall.median();
    Ok(BenchResult {
        record: BenchRecord {
            name: spec.name(),
            e_count: opts.e_count,
            reps: opts.reps,
            median_ns_batched,
            median_ns_percall,
            speedup: median_ns_percall / median_ns_batched,
            max_abs_diff: diff,
            fallback_used: dispatcher.fallback_count() != fallbacks_before,
        },
        std_ns_batched: batched.std_dev(),
        std_ns_percall: percall.std_dev(),
        iterations_batched: batched.iterations,
        iterations_percall: percall.iterations,
    })
}

/// A spec withheld from the report because it failed the correctness gate.
#[derive(Debug, Clone, PartialEq)]
pub struct Rejected {
    pub name: String,
    pub max_abs_diff: f64,
}

#[derive(Debug, Clone, Default)]
pub struct SuiteReport {
    pub results: Vec<BenchResult>,
    pub rejected: Vec<Rejected>,
}

impl SuiteReport {
    pub fn records(&self) -> Vec<BenchRecord> {
        self.results.iter().map(|r| r.record.clone()).collect()
    }
}

/// Benchmarks every spec in order. Specs whose correctness diff exceeds
/// [`CORRECTNESS_TOL`] are not timed and produce no record.
pub fn run_suite(dispatcher: &Dispatcher, specs: &[KernelSpec], opts: &BenchOptions) -> Result<SuiteReport> {
    let mut report = SuiteReport::default();
    for spec in specs {
        let diff = run_correctness(
            dispatcher,
            spec,
            opts.e_count,
            opts.seed,
            opts.scalars,
            opts.allow_fallback,
        )?;
        if diff.is_nan() || diff > CORRECTNESS_TOL {
            log::warn!("{spec}: max_abs_diff {diff:e} exceeds {CORRECTNESS_TOL:e}, not benchmarked");
            report.rejected.push(Rejected {
                name: spec.name(),
                max_abs_diff: diff,
            });
            continue;
        }
        let result = run_benchmark(dispatcher, spec, opts)?;
        log::info!(
            "{}: batched {:.0} ns, per-call {:.0} ns, speedup {:.2}",
            spec,
            result.record.median_ns_batched,
            result.record.median_ns_percall,
            result.record.speedup
        );
        report.results.push(result);
    }
    Ok(report)
}

pub fn write_csv(records: &[BenchRecord], out: impl Write) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(CSV_HEADER.split(','))?;
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn emit_csv(records: &[BenchRecord], path: impl AsRef<Path>) -> Result<()> {
    let mut buf = Vec::new();
    write_csv(records, &mut buf)?;
    fs::write(path, buf)?;
    Ok(())
}

pub fn parse_csv(text: &str) -> Result<Vec<BenchRecord>> {
    let mut r = csv::ReaderBuilder::new().from_reader(text.as_bytes());
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header.join(",") != CSV_HEADER {
        return Err(Error::ShapeMismatch(format!(
            "unexpected CSV header `{}`",
            header.join(",")
        )));
    }
    Ok(r.deserialize().collect::<std::result::Result<_, _>>()?)
}

pub fn read_csv(path: impl AsRef<Path>) -> Result<Vec<BenchRecord>> {
    parse_csv(&fs::read_to_string(path)?)
}

/// Flags a report where the smallest shape does not beat the largest one on
/// speedup. Fallback rows are ignored. `None` when the trend holds or there
/// is nothing to compare.
pub fn trend_warning(records: &[BenchRecord]) -> Option<String> {
    let sized: Vec<(u64, &BenchRecord)> = records
        .iter()
        .filter(|r| !r.fallback_used)
        .filter_map(|r| {
            crate::spec::parse_kernel_name(&r.name)
                .ok()
                .map(|s| (s.shape.flops(), r))
        })
        .collect();
    let small = sized.iter().min_by_key(|(f, _)| *f)?;
    let large = sized.iter().max_by_key(|(f, _)| *f)?;
    if small.0 == large.0 || small.1.speedup > large.1.speedup {
        return None;
    }
    Some(format!(
        "speedup of the smallest shape {} ({:.2}) does not exceed that of the largest {} ({:.2})",
        small.1.name, small.1.speedup, large.1.name, large.1.speedup
    ))
}

/// Overall speedup when a `fraction` of run time is sped up `factor` times.
pub fn amdahl_speedup(fraction: f64, factor: f64) -> f64 {
    1.0 / ((1.0 - fraction) + fraction / factor)
}

/// Upper bound on overall speedup when only `fraction` of run time can be
/// accelerated.
pub fn amdahl_limit(fraction: f64) -> f64 {
    1.0 / (1.0 - fraction)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(s: &str) -> KernelSpec {
        s.parse().unwrap()
    }

    fn record(name: &str, speedup: f64) -> BenchRecord {
        BenchRecord {
            name: name.into(),
            e_count: 10_000,
            reps: 5,
            median_ns_batched: 1234.5,
            median_ns_percall: 1234.5 * speedup,
            speedup,
            max_abs_diff: 1.1102230246251565e-16,
            fallback_used: false,
        }
    }

    #[test]
    fn correctness_cases() {
        let d = Dispatcher::empty();
        let s = spec("bbdgemm_ColMajor_2_2_2_cis");
        let diff = run_correctness(&d, &s, 1000, 42, GemmScalars::default(), true).unwrap();
        assert!(diff <= CORRECTNESS_TOL);
        assert_eq!(
            run_correctness(&d, &s, 0, 42, GemmScalars::default(), false).unwrap(),
            0.0
        );
        let err = run_correctness(&d, &s, 10, 42, GemmScalars::default(), false).unwrap_err();
        assert!(matches!(err, Error::FallbackDisallowed(_)));
    }

    #[test]
    fn identity_scalars_leave_c() {
        let s = spec("bbdgemm_RowMajor_3_2_4_isi");
        let w = Workload::random(&s, 7, 1);
        let mut c = w.c.clone();
        Dispatcher::empty()
            .run_batched(&s, 7, 0.0, &w.a.view(), &w.b.view(), 1.0, &mut c.view_mut())
            .unwrap();
        assert_eq!(max_abs_diff(&c, &w.c), 0.0);
    }

    #[test]
    fn benchmark_record_fields() {
        let d = Dispatcher::empty();
        let opts = BenchOptions {
            e_count: 50,
            reps: 3,
            allow_fallback: true,
            min_sample: Duration::from_micros(100),
            ..BenchOptions::default()
        };
        let r = run_benchmark(&d, &spec("bbdgemm_ColMajor_2_2_2_cis"), &opts).unwrap();
        assert_eq!(r.record.name, "bbdgemm_ColMajor_2_2_2_cis");
        assert_eq!((r.record.e_count, r.record.reps), (50, 3));
        assert!(r.record.fallback_used);
        assert!(r.record.max_abs_diff <= CORRECTNESS_TOL);
        assert_eq!(
            r.record.speedup,
            r.record.median_ns_percall / r.record.median_ns_batched
        );
    }

    #[test]
    fn csv_shapes_and_round_trip() {
        let mut empty = Vec::new();
        write_csv(&[], &mut empty).unwrap();
        assert_eq!(String::from_utf8(empty).unwrap(), format!("{CSV_HEADER}\n"));

        let recs = vec![
            record("bbdgemm_ColMajor_2_2_2_cis", 3.5),
            record("bbdgemm_ColMajor_10_9_9_cis", 0.1 + 0.2),
            record("bbdgemm_ColMajor_20_9_10_csi", 1.0 / 3.0),
        ];
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.csv");
        emit_csv(&recs, &path).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), 4);
        assert!(!text.contains('\r'));
        assert!(text.starts_with(CSV_HEADER));
        assert_eq!(read_csv(&path).unwrap(), recs);
    }

    #[test]
    fn wrong_header_rejected() {
        assert!(parse_csv("name,E\nx,1\n").is_err());
    }

    #[test]
    fn trend() {
        let ok = [
            record("bbdgemm_ColMajor_2_2_2_cis", 5.0),
            record("bbdgemm_ColMajor_20_9_10_csi", 1.0),
        ];
        assert_eq!(trend_warning(&ok), None);
        let bad = [
            record("bbdgemm_ColMajor_2_2_2_cis", 1.0),
            record("bbdgemm_ColMajor_20_9_10_csi", 2.0),
        ];
        assert!(trend_warning(&bad).unwrap().contains("2_2_2"));
        let mut fb = bad.clone();
        fb[1].fallback_used = true;
        assert_eq!(trend_warning(&fb), None);
    }

    #[test]
    fn amdahl() {
        assert!((amdahl_limit(DGEMM_FRACTION) - 2.152).abs() < 1e-3);
        assert_eq!(amdahl_speedup(0.5, 1.0), 1.0);
        assert!((amdahl_speedup(DGEMM_FRACTION, 1e12) - amdahl_limit(DGEMM_FRACTION)).abs() < 1e-9);
    }
}
