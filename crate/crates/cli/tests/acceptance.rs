//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs without the libtest harness so the lines appear in order and the
//! timed scenarios do not compete for the CPU with each other.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use halfwave::efsum::{compensated_sum, naive_sum, two_sum_3op, two_sum_6op};
use halfwave::operators::{ddx, StencilSpec};
use halfwave::{Field2D, Format, Fp16, Fp64, GridSpec, Half, Stagger, SumVariant};
use halfwave_cli::scenario::{repro, Comparison, ScenarioResult};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

// Tolerances, as pinned by the acceptance criteria.
const FORMAT_TABLE: [(&str, [&str; 4]); 3] = [
    ("fp16", ["4.8828e-4", "6.5504e4", "6.1035e-5", "5.9605e-8"]),
    ("fp32", ["5.9605e-8", "3.4028e38", "1.1755e-38", "1.4013e-45"]),
    ("fp64", ["1.1102e-16", "1.7977e308", "2.2251e-308", "4.9407e-324"]),
];
const EFT_PAIRS: usize = 1_000_000;
const EFT_TIME: Duration = Duration::from_secs(10);
const FP64_FLATNESS: f64 = 1e-10;
const FP16_DEGRADATION: f64 = 1e-2;
const RECOVERED_ENERGY: f64 = 1e-2;
const TRACE_IMPROVEMENT: f64 = 5.0;
const ACOUSTIC_RUN_TIME: Duration = Duration::from_secs(60);
const ELASTIC_FP64_FLATNESS: f64 = 1e-8;
const ELASTIC_VARIANT_AGREEMENT: f64 = 1e-3;
const ELASTIC_SUITE_TIME: Duration = Duration::from_secs(120);
const STENCIL_RATIO: (f64, f64) = (14.4, 17.6);

struct Report {
    failed: usize,
}

impl Report {
    fn line(&mut self, id: u32, title: &str, pass: bool, detail: String) {
        if !pass {
            self.failed += 1;
        }
        println!("criterion {id:>2} [{}] {title}: {detail}", if pass { "PASS" } else { "FAIL" });
    }
}

fn secs(d: Duration) -> String {
    format!("{:.1}s", d.as_secs_f64())
}

fn binary() -> Command {
    Command::new(env!("CARGO_BIN_EXE_halfwave"))
}

fn format_constants(report: &mut Report) {
    let out = binary().arg("formats").output().expect("run halfwave formats");
    let text = String::from_utf8_lossy(&out.stdout);
    let mut mismatches = Vec::new();
    for (name, expected) in FORMAT_TABLE {
        let row: Vec<&str> = text
            .lines()
            .map(|l| l.split_whitespace().collect::<Vec<_>>())
            .find(|cols| cols.first() == Some(&name))
            .unwrap_or_default();
        if row.len() != 7 || row[3..] != expected {
            mismatches.push(format!("{name}: {row:?}"));
        }
    }
    let pass = out.status.success() && mismatches.is_empty();
    let detail = if pass { "all 12 constants match".to_string() } else { mismatches.join("; ") };
    report.line(1, "format constants", pass, detail);
}

fn random_half(rng: &mut ChaCha8Rng) -> Half {
    loop {
        let h = Half::from_bits(rng.gen());
        if h.is_finite() {
            return h;
        }
    }
}

fn eft_exactness(report: &mut Report) {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(20_240_416);
    let (mut checked, mut fail6, mut fail3) = (0usize, 0usize, 0usize);
    while checked < EFT_PAIRS {
        let (a, b) = (random_half(&mut rng), random_half(&mut rng));
        let exact = a.to_f64() + b.to_f64();
        if exact.abs() > 65504.0 {
            continue;
        }
        checked += 1;
        let (s, t) = two_sum_6op::<Fp16>(a, b);
        fail6 += (s.to_f64() + t.to_f64() != exact) as usize;
        let (big, small) = if a.to_f64().abs() >= b.to_f64().abs() { (a, b) } else { (b, a) };
        let (s, t) = two_sum_3op::<Fp16>(big, small);
        fail3 += (s.to_f64() + t.to_f64() != exact) as usize;
    }
    let elapsed = start.elapsed();
    report.line(
        2,
        "EFT exactness",
        fail6 == 0 && fail3 == 0 && elapsed < EFT_TIME,
        format!("{checked} pairs, sum_6op failures {fail6}, sum_3op (|a|>=|b|) failures {fail3}, {}", secs(elapsed)),
    );
}

fn saturation(report: &mut Report) {
    let ones = vec![1.0; 4096];
    // Exact rational oracle: the true sum of 4096 ones is the integer 4096.
    let oracle: i64 = ones.iter().map(|&v| v as i64).sum();
    let naive = naive_sum(Format::Fp16, &ones).value();
    let op3 = compensated_sum(Format::Fp16, &ones, SumVariant::Op3);
    let op6 = compensated_sum(Format::Fp16, &ones, SumVariant::Op6);
    let pass = naive == 2048.0
        && oracle == 4096
        && [op3, op6].iter().all(|r| r.s.value() == oracle as f64 && r.s.value() + r.t.value() == oracle as f64);
    report.line(
        3,
        "saturation demo",
        pass,
        format!("naive {naive}, op3 {}, op6 {}, oracle {oracle}", op3.s.value(), op6.s.value()),
    );
}

/// Runs a desk preset through the repro driver, timing each variant.
fn run_suite(preset: &str, root: &Path) -> (Vec<ScenarioResult>, Vec<Duration>) {
    let mut times = Vec::new();
    let mut last = Instant::now();
    let results = repro(preset, true, root, |_| {
        times.push(last.elapsed());
        last = Instant::now();
    })
    .unwrap_or_else(|e| panic!("{preset} desk suite failed: {e}"));
    (results, times)
}

fn by_name<'a>(results: &'a [ScenarioResult], variant: &str) -> &'a ScenarioResult {
    results.iter().find(|r| r.label.ends_with(&format!("/{variant}"))).unwrap()
}

fn acoustic_suite(report: &mut Report, root: &Path) {
    let (results, times) = run_suite("paper-acoustic", root);
    let slowest = times.iter().copied().max().unwrap_or_default();
    let in_time = slowest < ACOUSTIC_RUN_TIME;
    let timing = format!("slowest run {}", secs(slowest));

    let fp64 = by_name(&results, "fp64");
    let flat = fp64.drift.unwrap().rel_deviation;
    report.line(4, "FP64 acoustic energy conservation", flat <= FP64_FLATNESS && in_time, format!("rel deviation {flat:.3e} <= {FP64_FLATNESS:e}, {timing}"));

    let base = by_name(&results, "fp16-baseline");
    let d = base.drift.unwrap();
    report.line(
        5,
        "FP16 baseline degradation",
        d.rel_deviation >= FP16_DEGRADATION && d.trend_slope < 0.0 && in_time,
        format!("rel deviation {:.3e} >= {FP16_DEGRADATION:e}, slope {:.3e} < 0", d.rel_deviation, d.trend_slope),
    );

    let comp = by_name(&results, "fp16-op3");
    let c = comp.comparison.as_ref().unwrap();
    let b = base.comparison.as_ref().unwrap();
    let (l2_comp, l2_base) = (c.trace_l2("P").unwrap(), b.trace_l2("P").unwrap());
    report.line(
        6,
        "FP16 compensated recovery",
        c.final_energy_rel <= RECOVERED_ENERGY && l2_comp * TRACE_IMPROVEMENT <= l2_base && in_time,
        format!(
            "final energy off by {:.3e} <= {RECOVERED_ENERGY:e}; P trace L2 {l2_comp:.3e} vs baseline {l2_base:.3e} ({:.1}x >= {TRACE_IMPROVEMENT}x)",
            c.final_energy_rel,
            l2_base / l2_comp
        ),
    );

    let abl_base = by_name(&results, "fp64s-fp16u-baseline").drift.unwrap().rel_deviation;
    let abl_comp = by_name(&results, "fp64s-fp16u-op3").comparison.as_ref().unwrap().final_energy_rel;
    report.line(
        7,
        "FP64-stencil ablation",
        abl_base > FP64_FLATNESS && abl_comp <= RECOVERED_ENERGY && in_time,
        format!("naive update deviation {abl_base:.3e} > {FP64_FLATNESS:e}; compensated final energy off by {abl_comp:.3e} <= {RECOVERED_ENERGY:e}"),
    );
}

fn elastic_suite(report: &mut Report, root: &Path) {
    let start = Instant::now();
    let (results, _) = run_suite("paper-elastic", root);
    let elapsed = start.elapsed();
    let flat = by_name(&results, "fp64").drift.unwrap().rel_deviation;
    let degraded = by_name(&results, "fp16-baseline").drift.unwrap().rel_deviation;
    let op6 = by_name(&results, "fp16-op6");
    let op3 = by_name(&results, "fp16-op3");
    let op6_energy = op6.comparison.as_ref().unwrap().final_energy_rel;
    let between = Comparison::new("fp16-op6", &op3.output, &op6.output).unwrap().energy_history_rel;
    let pass = flat <= ELASTIC_FP64_FLATNESS
        && degraded >= FP16_DEGRADATION
        && op6_energy <= RECOVERED_ENERGY
        && between <= ELASTIC_VARIANT_AGREEMENT
        && elapsed < ELASTIC_SUITE_TIME;
    report.line(
        8,
        "elastic suite",
        pass,
        format!(
            "fp64 flatness {flat:.3e}; fp16 baseline drift {degraded:.3e}; op6 final energy off by {op6_energy:.3e}; op3 vs op6 {between:.3e}; {}",
            secs(elapsed)
        ),
    );
}

fn sine_error(n: usize) -> f64 {
    let dx = 1.0 / n as f64;
    let grid = GridSpec::new(n, 8, dx, dx / 10.0, 1);
    let k = 2.0 * std::f64::consts::PI;
    let f = Field2D::<Fp64>::from_fn(&grid, Stagger::Cell, |i, _| (k * (i as f64 + 0.5) * dx).sin());
    let d = ddx(&f, Stagger::XFace, &StencilSpec::new(dx), &grid).unwrap();
    (0..n).map(|i| (d.value(i, 0) - k * (k * i as f64 * dx).cos()).abs()).fold(0.0, f64::max)
}

fn stencil_order(report: &mut Report) {
    let ratios: Vec<f64> = [32, 64].iter().map(|&n| sine_error(n) / sine_error(2 * n)).collect();
    let pass = ratios.iter().all(|r| (STENCIL_RATIO.0..=STENCIL_RATIO.1).contains(r));
    report.line(9, "stencil order", pass, format!("error ratios {ratios:.3?} within [{}, {}]", STENCIL_RATIO.0, STENCIL_RATIO.1));
}

fn traces_bytes(root: &Path, tag: &str, threads: usize, args: &[&str]) -> Vec<u8> {
    let dir = root.join(tag);
    let status = binary()
        .args(["run", "--desk"])
        .args(args)
        .env("HALFWAVE_OUT", &dir)
        .env("RAYON_NUM_THREADS", threads.to_string())
        .stdout(std::process::Stdio::null())
        .status()
        .expect("run halfwave");
    assert!(status.success(), "{tag} exited with {status}");
    std::fs::read(dir.join("traces.csv")).expect("traces.csv")
}

fn determinism(report: &mut Report, root: &Path) {
    let cases: [(&str, &[&str]); 2] = [
        ("acoustic", &["--preset", "paper-acoustic"]),
        ("elastic", &["--preset", "paper-elastic", "--set", "grid.nt=1500"]),
    ];
    let mut details = Vec::new();
    let mut pass = true;
    for (name, args) in cases {
        let first = traces_bytes(root, &format!("{name}-a"), 1, args);
        let again = traces_bytes(root, &format!("{name}-b"), 1, args);
        let threaded = traces_bytes(root, &format!("{name}-c"), 4, args);
        let same = first == again && first == threaded && !first.is_empty();
        pass &= same;
        details.push(format!("{name} desk {} bytes {}", first.len(), if same { "identical" } else { "DIFFER" }));
    }
    report.line(10, "determinism", pass, format!("{} (1, 1 and 4 threads)", details.join("; ")));
}

fn main() {
    let tmp = tempfile::tempdir().expect("temporary directory");
    let mut report = Report { failed: 0 };
    format_constants(&mut report);
    eft_exactness(&mut report);
    saturation(&mut report);
    acoustic_suite(&mut report, tmp.path());
    elastic_suite(&mut report, tmp.path());
    stencil_order(&mut report);
    determinism(&mut report, &tmp.path().join("determinism"));
    println!("acceptance: {} of 10 criteria passed", 10 - report.failed);
    if report.failed > 0 {
        std::process::exit(1);
    }
}
